"""Optimal control of the friction threshold.

The control ``z`` lives on the Neumann nodes, enters through
``ell(z) = g1 + z g2`` and is constrained to the box ``[-1, 1]``.  The cost is
the compliance of the Tresca solution plus a Tikhonov term::

    J(z) = 1/2 ||u(ell(z))||^2 + beta/2 sum_i weight_i ell_i^2

and is minimized by projected gradient steps along the closed-form descent
direction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import StiffnessSystem, energy_norm
from .vi import (
    BoundaryPartition,
    SLIP,
    TrescaOptions,
    TrescaProblemSpec,
    TrescaSolution,
    _boundary_scalar,
    _load_vector,
    compute_boundary_partition,
    solve_tresca,
)

logger = logging.getLogger(__name__)


class ControlError(RuntimeError):
    """A solver failure inside the optimization loop; carries the iteration index."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class ControlConfig:
    """Parameters of the control problem.

    ``eta=None`` means ``1/(beta max g1^2)``; ``stop_threshold=None`` means
    ``1e-6 J(z0)``.  ``m`` is the declared lower bound of ``g1``.
    """

    beta: float
    g1: np.ndarray | float | Callable
    g2: np.ndarray | float | Callable
    m: float
    eta: float | None = None
    max_iters: int = 2000
    stop_window: int = 20
    stop_threshold: float | None = None
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.m > 0:
            raise ValueError("m must be positive")
        if self.eta is not None and not self.eta >= 0:
            raise ValueError("eta must be nonnegative")
        if self.stop_window < 1 or self.max_iters < 0:
            raise ValueError("stop_window must be >= 1 and max_iters >= 0")
        if not self.lower < self.upper:
            raise ValueError("empty control box")


def project_U(z: np.ndarray, lower: float = -1.0, upper: float = 1.0) -> np.ndarray:
    return np.clip(np.asarray(z, dtype=float), lower, upper)


@dataclass
class ControlEvaluation:
    """Tresca state at a control ``z`` with the cost breakdown."""

    z: np.ndarray
    ell: np.ndarray
    solution: TrescaSolution
    partition: BoundaryPartition
    compliance: float
    penalty: float

    @property
    def J(self) -> float:
        return self.compliance + self.penalty


@dataclass
class HistoryRow:
    iteration: int
    J: float
    compliance: float
    penalty: float
    switches: int
    dJ: float


@dataclass
class ControlState:
    z: np.ndarray
    cost_history: list[HistoryRow]
    partition_history: list[dict[str, int]]
    converged: bool
    eta: float
    stop_threshold: float
    checkpoints: list[tuple[int, float]] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.cost_history[-1].iteration

    def bang_bang_fraction(self, tol: float = 1e-2, lower: float = -1.0, upper: float = 1.0) -> float:
        near = (np.abs(self.z - lower) <= tol) | (np.abs(self.z - upper) <= tol)
        return float(np.mean(near))


class ControlProblem:
    """Binds an assembled system, the fixed loads and a :class:`ControlConfig`."""

    def __init__(
        self,
        system: StiffnessSystem,
        config: ControlConfig,
        f=None,
        h=None,
        tresca_opts: TrescaOptions | None = None,
    ):
        self.system = system
        self.config = config
        self.opts = tresca_opts or TrescaOptions()
        self.body_load = _load_vector(f, system)
        self.h = _boundary_scalar(h, system, "h")
        self.g1 = _boundary_scalar(config.g1, system, "g1")
        self.g2 = _boundary_scalar(config.g2, system, "g2")
        self.weight = system.topology.neumann_weight
        if np.any(self.g1 < config.m):
            raise ValueError(f"g1 must be >= m = {config.m!r} on every Neumann node")
        g2max = float(np.max(np.abs(self.g2), initial=0.0))
        if not g2max < config.m:
            raise ValueError(f"max |g2| = {g2max!r} must be below m = {config.m!r}")
        self.ell_floor = config.m - g2max

    def ell(self, z: np.ndarray) -> np.ndarray:
        return self.g1 + z * self.g2

    def check_admissible(self, z: np.ndarray) -> None:
        c = self.config
        if np.any(z < c.lower) or np.any(z > c.upper):
            raise ValueError("control leaves the admissible box")
        if np.any(self.ell(z) < self.ell_floor):
            raise ValueError("ell(z) drops below m - max|g2|")

    def evaluate(self, z: np.ndarray, warm_start: TrescaSolution | None = None) -> ControlEvaluation:
        z = np.asarray(z, dtype=float)
        ell = self.ell(z)
        sol = solve_tresca(TrescaProblemSpec(self.body_load, self.h, ell), self.system, self.opts, warm_start=warm_start)
        part = compute_boundary_partition(sol, ell, self.opts.slip_tolerance(self.system), self.opts.tol_crit)
        compliance = 0.5 * energy_norm(self.system, sol.u) ** 2
        penalty = 0.5 * self.config.beta * float(np.sum(self.weight * ell * ell))
        return ControlEvaluation(z, ell, sol, part, compliance, penalty)

    def cost_J(self, z: np.ndarray) -> tuple[float, dict[str, float]]:
        ev = self.evaluate(z)
        return ev.J, {"compliance": ev.compliance, "penalty": ev.penalty}

    def _density(self, ev: ControlEvaluation) -> np.ndarray:
        # dJ(z0; z) = sum_i weight_i z_i g2_i rho_i
        rho = self.config.beta * ev.ell
        R = ev.partition.R
        return np.where(R, rho - np.abs(ev.solution.u_t), rho)

    def gateaux_dJ(self, ev: ControlEvaluation, direction: np.ndarray) -> float:
        return float(np.sum(self.weight * np.asarray(direction, dtype=float) * self.g2 * self._density(ev)))

    def descent_direction(self, ev: ControlEvaluation) -> np.ndarray:
        return -self.g2 * self._density(ev)

    def optimize(self, z0: np.ndarray) -> ControlState:
        """Projected gradient ``z_{k+1} = P_U(z_k + eta z_d(z_k))``.

        Stops when ``|J_{w i} - J_{w (i-1)}| < stop_threshold`` at a
        checkpoint ``k = w i`` (``w = stop_window``) or after ``max_iters``.
        ``switches`` counts nodes whose stick/slip label changed since the
        previous iterate.
        """
        c = self.config
        z = project_U(z0, c.lower, c.upper)
        if not np.array_equal(z, np.asarray(z0, dtype=float)):
            raise ValueError("initial control must lie in the admissible box")
        self.check_admissible(z)
        eta = c.eta if c.eta is not None else 1.0 / (c.beta * float(np.max(self.g1)) ** 2)

        history: list[HistoryRow] = []
        part_hist: list[dict[str, int]] = []
        checkpoints: list[tuple[int, float]] = []
        ev = self._evaluate_at(z, None, 0)
        threshold = c.stop_threshold if c.stop_threshold is not None else 1e-6 * ev.J
        prev_labels = ev.solution.labels
        converged = False
        k = 0
        while True:
            zd = self.descent_direction(ev)
            dj = self.gateaux_dJ(ev, zd)
            if dj > 0 or (dj == 0 and np.any(zd != 0)):
                raise AssertionError(f"descent check failed at iteration {k}: dJ = {dj!r}")
            switches = int(np.count_nonzero(ev.solution.labels != prev_labels))
            history.append(HistoryRow(k, ev.J, ev.compliance, ev.penalty, switches, dj))
            part_hist.append(ev.partition.counts())
            prev_labels = ev.solution.labels
            if k % c.stop_window == 0:
                checkpoints.append((k, ev.J))
                if len(checkpoints) >= 2:
                    drop = checkpoints[-2][1] - checkpoints[-1][1]
                    if drop < 0:
                        logger.warning("cost increased over window ending at %d by %.3e; consider a smaller eta", k, -drop)
                    if abs(drop) < threshold:
                        converged = True
                        break
            if k >= c.max_iters:
                break
            k += 1
            z = project_U(z + eta * zd, c.lower, c.upper)
            self.check_admissible(z)
            ev = self._evaluate_at(z, ev.solution, k)
        return ControlState(z, history, part_hist, converged, eta, threshold, checkpoints)

    def _evaluate_at(self, z: np.ndarray, warm: TrescaSolution | None, k: int) -> ControlEvaluation:
        try:
            return self.evaluate(z, warm_start=warm)
        except Exception as exc:
            raise ControlError(f"solve failed at iteration {k}: {exc}", k) from exc


def cost_J(problem: ControlProblem, z: np.ndarray) -> tuple[float, dict[str, float]]:
    return problem.cost_J(z)


def gateaux_dJ(problem: ControlProblem, ev: ControlEvaluation, direction: np.ndarray) -> float:
    return problem.gateaux_dJ(ev, direction)


def descent_direction(problem: ControlProblem, ev: ControlEvaluation) -> np.ndarray:
    return problem.descent_direction(ev)


def n_slip_nodes(ev: ControlEvaluation) -> int:
    return int(np.count_nonzero(ev.solution.labels == SLIP))
