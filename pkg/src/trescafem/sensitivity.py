"""Finite-difference verification of solution derivatives.

A :class:`PerturbationFamily` perturbs the Tresca data linearly in ``t``;
:func:`derivative_convergence` compares ``(u_t - u_0)/t`` with the solution
of the tangential Signorini problem built at ``t = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import StiffnessSystem, energy_norm
from .vi import (
    BoundaryPartition,
    NonConvergenceError,
    TrescaOptions,
    TrescaProblemSpec,
    TrescaSolution,
    _boundary_scalar,
    _load_vector,
    compute_boundary_partition,
    signorini_spec_from_tresca,
    solve_tangential_signorini,
    solve_tresca,
)

EPS_DENOM = 1e-30


@dataclass
class PerturbationFamily:
    """``f_t = f0 + t fp``, ``h_t = h0 + t hp``, ``g_t = g0 + t gp``.

    Loads may be callables or assembled vectors, boundary data arrays,
    scalars or callables, as in :class:`TrescaProblemSpec`.
    """

    f0: Callable | np.ndarray | None
    fp: Callable | np.ndarray | None
    g0: np.ndarray | float | Callable
    gp: np.ndarray | float | Callable | None = None
    h0: np.ndarray | float | Callable | None = None
    hp: np.ndarray | float | Callable | None = None

    def resolve(self, system: StiffnessSystem) -> "ResolvedFamily":
        return ResolvedFamily(
            f0=_load_vector(self.f0, system),
            fp=_load_vector(self.fp, system),
            h0=_boundary_scalar(self.h0, system, "h0"),
            hp=_boundary_scalar(self.hp, system, "hp"),
            g0=_boundary_scalar(self.g0, system, "g0"),
            gp=_boundary_scalar(self.gp, system, "gp"),
        )


@dataclass
class ResolvedFamily:
    f0: np.ndarray
    fp: np.ndarray
    h0: np.ndarray
    hp: np.ndarray
    g0: np.ndarray
    gp: np.ndarray

    def at(self, t: float) -> TrescaProblemSpec:
        return TrescaProblemSpec(self.f0 + t * self.fp, self.h0 + t * self.hp, self.g0 + t * self.gp)

    def check_positive(self, t_list: Sequence[float]) -> None:
        for t in [0.0, *t_list]:
            gt = self.g0 + t * self.gp
            if not np.all(gt > 0):
                raise ValueError(f"g_t is not positive on all Neumann nodes at t = {t!r} (min {gt.min():.3e})")


@dataclass
class ConvergenceRow:
    t: float
    err: float
    n_slip: int
    t_stick_max: float


@dataclass
class ConvergenceTable:
    """Result of :func:`derivative_convergence`, rows ordered as ``t_list``."""

    rows: list[ConvergenceRow]
    u0: TrescaSolution
    uprime: np.ndarray
    partition: BoundaryPartition
    uprime_norm: float
    capped: list[int] = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    @property
    def err(self) -> np.ndarray:
        return np.array([r.err for r in self.rows])

    def slopes(self) -> list[float]:
        """Log-log slopes of ``err`` between successive probes (nan where undefined)."""
        out = []
        for a, b in zip(self.rows, self.rows[1:]):
            if a.err > 0 and b.err > 0:
                out.append(math.log(a.err / b.err) / math.log(a.t / b.t))
            else:
                out.append(math.nan)
        return out

    def strictly_decreasing(self) -> bool:
        e = self.err
        return bool(np.all(e[1:] < e[:-1]))


class SensitivityError(RuntimeError):
    """A Tresca solve failed during a probe; ``partial`` holds the finished rows."""

    def __init__(self, message: str, partial: list[ConvergenceRow], cause: NonConvergenceError):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


def derivative_convergence(
    family: PerturbationFamily,
    t_list: Sequence[float],
    system: StiffnessSystem,
    opts: TrescaOptions | None = None,
) -> ConvergenceTable:
    """Tabulate ``err_t = ||(u_t - u_0)/t - u'_0|| / max(||u'_0||, eps)``.

    Norms are the energy norm.  ``t_list`` must be positive and decreasing.
    Each row also reports the largest tangential difference quotient on
    T nodes, which should vanish as ``t -> 0``.
    """
    opts = opts or TrescaOptions()
    t_list = [float(t) for t in t_list]
    if not t_list or any(t <= 0 for t in t_list) or any(b >= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be positive and strictly decreasing")
    fam = family.resolve(system)
    fam.check_positive(t_list)

    sol0 = solve_tresca(fam.at(0.0), system, opts)
    part = compute_boundary_partition(sol0, fam.g0, opts.slip_tolerance(system), opts.tol_crit)
    spec = signorini_spec_from_tresca(sol0, part, system, fp=fam.fp, hp=fam.hp, gp=fam.gp)
    up = solve_tangential_signorini(spec, system, opts).u
    up_norm = energy_norm(system, up)
    denom = max(up_norm, EPS_DENOM)

    top = system.topology
    rows: list[ConvergenceRow] = []
    for t in t_list:
        try:
            st = solve_tresca(fam.at(t), system, opts, warm_start=sol0)
        except NonConvergenceError as exc:
            raise SensitivityError(f"Tresca solve failed at t = {t!r}: {exc}", rows, exc) from exc
        q = (st.u - sol0.u) / t
        qt = np.sum(q.reshape(-1, 2)[top.neumann_nodes] * top.neumann_tangent, axis=1)
        t_max = float(np.max(np.abs(qt[part.T]), initial=0.0))
        rows.append(ConvergenceRow(t, energy_norm(system, q - up) / denom, st.n_slip, t_max))
    return ConvergenceTable(rows, sol0, up, part, up_norm, spec.capped)


@dataclass
class GateauxRow:
    t: float
    fd: float
    formula: float
    rel_err: float


def gateaux_check(
    J: Callable[[np.ndarray], float],
    point: np.ndarray,
    direction: np.ndarray,
    t_list: Sequence[float],
    formula: float,
    J0: float | None = None,
) -> list[GateauxRow]:
    """One-sided differences ``(J(point + t dir) - J(point))/t`` against ``formula``.

    ``rel_err`` is ``|fd - formula| / max(|formula|, eps)``.
    """
    point = np.asarray(point, dtype=float)
    direction = np.asarray(direction, dtype=float)
    base = J(point) if J0 is None else J0
    rows = []
    for t in t_list:
        fd = (J(point + t * direction) - base) / t
        rows.append(GateauxRow(float(t), fd, formula, abs(fd - formula) / max(abs(formula), EPS_DENOM)))
    return rows
