"""Variational-inequality solvers on the Neumann boundary.

Discrete setting: P1 displacements, friction lumped at the Neumann nodes, so
the friction functional is ``Phi(w) = sum_i weight_i g_i |w_tau(x_i)|``.
At every Neumann node the two dofs are rotated into the nodal frame
``(n_i, tau_i)``; in 2D the tangential displacement and traction are then
scalars along ``tau_i``.

* :func:`solve_tresca` -- Tresca friction problem by iterative switching.
* :func:`compute_boundary_partition` -- slip / strict stick / critical stick.
* :func:`solve_tangential_signorini` -- derivative problem with cone
  constraints on the stick nodes.
"""

from __future__ import annotations

import logging
import weakref
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    LINEAR_RTOL,
    StiffnessSystem,
    assemble_body_load,
    assemble_boundary_normal_load,
    check_residual,
    energy_inner,
    recover_boundary_traction,
    solve_free,
)

logger = logging.getLogger(__name__)

STICK = "STICK"
SLIP = "SLIP"

SLIP_CLASS = "R"
STRICT_STICK = "T"
CRITICAL_STICK = "S"

K_CAP = 1e12


class NonConvergenceError(RuntimeError):
    """An active-set iteration hit its iteration cap."""

    def __init__(self, message: str, iterations: int, last_switches: int, oscillating: list[int] | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.last_switches = last_switches
        self.oscillating = oscillating or []


@dataclass
class TrescaOptions:
    """Tolerances and caps of the switching iterations.

    ``tol_slip=None`` means ``1e-8 * mesh diameter``.
    """

    tol_slip: float | None = None
    tol_crit: float = 1e-3
    tol_law: float = 1e-6
    max_outer: int = 200
    freeze_iters: int = 5

    def slip_tolerance(self, system: StiffnessSystem) -> float:
        if self.tol_slip is not None:
            return self.tol_slip
        return 1e-8 * system.mesh.diameter


class ContactOperator:
    """Stiffness in nodal frames with cached factorizations.

    Obtain through :func:`contact_operator` so that one instance is shared
    per :class:`StiffnessSystem`.
    """

    def __init__(self, system: StiffnessSystem, cache_size: int = 16):
        top = system.topology
        nodes = top.neumann_nodes
        n = system.n_dofs
        rows, cols, vals = [], [], []
        rotated = np.zeros(n, dtype=bool)
        rotated[2 * nodes] = True
        rotated[2 * nodes + 1] = True
        plain = np.flatnonzero(~rotated)
        rows.append(plain)
        cols.append(plain)
        vals.append(np.ones(len(plain)))
        nrm, tan = top.neumann_normal, top.neumann_tangent
        # global = Q local with local = (normal, tangential) at Neumann nodes
        for c in range(2):
            rows += [2 * nodes + c, 2 * nodes + c]
            cols += [2 * nodes, 2 * nodes + 1]
            vals += [nrm[:, c], tan[:, c]]
        self.Q = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        self.K_loc = (self.Q.T @ system.K_full @ self.Q).tocsr()
        self.system = system
        self.ndof = 2 * nodes
        self.tdof = 2 * nodes + 1
        self.weight = top.neumann_weight
        base = np.zeros(n, dtype=bool)
        base[system.free_dofs] = True
        self._base_free = base
        self._cache: OrderedDict[bytes, tuple[np.ndarray, object]] = OrderedDict()
        self._cache_size = cache_size

    def to_local(self, v: np.ndarray) -> np.ndarray:
        return self.Q.T @ v

    def to_global(self, v: np.ndarray) -> np.ndarray:
        return self.Q @ v

    def _factor(self, fixed_t: np.ndarray):
        key = np.packbits(fixed_t).tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        mask = self._base_free.copy()
        mask[self.tdof[fixed_t]] = False
        free = np.flatnonzero(mask)
        Kf = self.K_loc[free][:, free].tocsc()
        entry = (free, spla.splu(Kf), Kf)
        self._cache[key] = entry
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return entry

    def solve(self, fixed_t: np.ndarray, b_loc: np.ndarray) -> np.ndarray:
        """Local-frame solution with the tangential dofs in ``fixed_t`` set to 0."""
        free, lu, Kf = self._factor(np.asarray(fixed_t, dtype=bool))
        u = np.zeros(self.system.n_dofs)
        rhs = b_loc[free]
        if np.any(rhs):
            x = lu.solve(rhs)
            check_residual(Kf, x, rhs, LINEAR_RTOL)
            u[free] = x
        return u

    def tangential_traction(self, u_loc: np.ndarray, b_data_loc: np.ndarray) -> np.ndarray:
        """Scalar tangential traction per Neumann node, by residual recovery."""
        r = self.K_loc @ u_loc - b_data_loc
        return r[self.tdof] / self.weight


_OPERATORS: "weakref.WeakKeyDictionary[StiffnessSystem, ContactOperator]" = weakref.WeakKeyDictionary()


def contact_operator(system: StiffnessSystem) -> ContactOperator:
    op = _OPERATORS.get(system)
    if op is None:
        op = ContactOperator(system)
        _OPERATORS[system] = op
    return op


def _load_vector(f, system: StiffnessSystem) -> np.ndarray:
    if f is None:
        return np.zeros(system.n_dofs)
    if callable(f):
        return assemble_body_load(system.mesh, f)
    f = np.asarray(f, dtype=float)
    if f.shape != (system.n_dofs,):
        raise ValueError(f"body load vector must have length {system.n_dofs}")
    return f


def _boundary_scalar(values, system: StiffnessSystem, name: str) -> np.ndarray:
    k = system.topology.n_neumann
    if values is None:
        return np.zeros(k)
    if callable(values):
        return system.topology.evaluate(values)
    arr = np.broadcast_to(np.asarray(values, dtype=float), (k,)).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass
class TrescaProblemSpec:
    """Data of the Tresca problem.

    ``f`` is a body-force callable ``f(x, y)`` or an assembled load vector;
    ``h`` (normal stress) and ``g`` (friction threshold) are arrays on the
    Neumann nodes, scalars, or callables ``(x, y) -> values``.
    """

    f: Callable | np.ndarray | None
    h: np.ndarray | float | Callable | None
    g: np.ndarray | float | Callable

    def resolve(self, system: StiffnessSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Body load vector, ``h`` and ``g`` arrays; checks ``g > 0``."""
        b = _load_vector(self.f, system)
        h = _boundary_scalar(self.h, system, "h")
        g = _boundary_scalar(self.g, system, "g")
        if not np.all(g > 0):
            raise ValueError(f"friction threshold must be positive on every Neumann node (min {g.min():.3e})")
        return b, h, g


@dataclass
class TrescaSolution:
    """Tresca solution with recovered boundary quantities on the Neumann nodes.

    ``u_t`` and ``sigma_t`` are the components along the nodal tangents.
    """

    u: np.ndarray
    sigma_n: np.ndarray
    sigma_tau: np.ndarray
    labels: np.ndarray
    iterations: int
    switch_history: list[int]
    u_t: np.ndarray
    sigma_t: np.ndarray
    g: np.ndarray
    h: np.ndarray
    body_load: np.ndarray
    frictionless: np.ndarray
    slip_dir: np.ndarray = field(repr=False)

    @property
    def n_stick(self) -> int:
        return int(np.count_nonzero(self.labels == STICK))

    @property
    def n_slip(self) -> int:
        return int(np.count_nonzero(self.labels == SLIP))


def solve_frictionless(system: StiffnessSystem, spec: TrescaProblemSpec) -> np.ndarray:
    """Dirichlet-Neumann solution with ``z = h n`` (no friction)."""
    b, h, _ = spec.resolve(system)
    return solve_free(system, b + assemble_boundary_normal_load(system.mesh, system.topology, h))


def solve_bilateral_stick(system: StiffnessSystem, load: np.ndarray) -> np.ndarray:
    """Linear solve with ``u_tau = 0`` imposed at every Neumann node."""
    op = contact_operator(system)
    fixed = np.ones(len(op.tdof), dtype=bool)
    return op.to_global(op.solve(fixed, op.to_local(load)))


def solve_tresca(
    spec: TrescaProblemSpec,
    system: StiffnessSystem,
    opts: TrescaOptions | None = None,
    warm_start: TrescaSolution | None = None,
) -> TrescaSolution:
    """Solve the discrete Tresca friction problem by iterative switching.

    Nodes start as SLIP along the tangential displacement of the frictionless
    solution (or take the labels of ``warm_start``).  Each sweep fixes
    ``u_tau = 0`` on STICK nodes and loads SLIP nodes with the traction
    ``-g d``; a STICK node whose traction exceeds ``g (1 + tol_law)`` turns
    SLIP opposite to its traction, a SLIP node moving against ``d`` turns
    STICK.  A node that switched both ways twice is frozen STICK for
    ``freeze_iters`` sweeps.

    Raises:
        NonConvergenceError: switches remain after ``max_outer`` sweeps.
    """
    opts = opts or TrescaOptions()
    op = contact_operator(system)
    b_body, h, g = spec.resolve(system)
    b_data = b_body + assemble_boundary_normal_load(system.mesh, system.topology, h)
    b_loc = op.to_local(b_data)
    w = op.weight
    k = len(w)

    F = solve_free(system, b_data)
    if warm_start is not None and len(warm_start.labels) == k:
        stick = warm_start.labels == STICK
        d = warm_start.slip_dir.copy()
    else:
        stick = np.zeros(k, dtype=bool)
        d = np.where(op.to_local(F)[op.tdof] < 0, -1.0, 1.0)

    to_slip = np.zeros(k, dtype=int)
    to_stick = np.zeros(k, dtype=int)
    frozen = np.zeros(k, dtype=int)
    history: list[int] = []
    for it in range(1, opts.max_outer + 1):
        rhs = b_loc.copy()
        slip = ~stick
        rhs[op.tdof[slip]] += -g[slip] * d[slip] * w[slip]
        u_loc = op.solve(stick, rhs)
        ut = u_loc[op.tdof]
        sig = op.tangential_traction(u_loc, b_loc)

        new_stick = stick.copy()
        new_d = d.copy()
        over = stick & (np.abs(sig) > g * (1.0 + opts.tol_law))
        new_stick[over] = False
        new_d[over] = -np.sign(sig[over])
        reverse = slip & (d * ut < 0)
        new_stick[reverse] = True

        held = frozen > 0
        wanted = (new_stick != stick) | (~new_stick & (new_d != d))
        if held.any():
            new_stick[held] = True
            new_d[held] = d[held]
            frozen[held] -= 1
        changed = (new_stick != stick) | (~new_stick & (new_d != d))
        n_switch = int(np.count_nonzero(changed))
        history.append(n_switch)
        if not wanted.any() and not held.any():
            labels = np.where(stick, STICK, SLIP)
            u = op.to_global(u_loc)
            tr = recover_boundary_traction(system, u, b_body)
            logger.debug("tresca converged in %d sweeps (%d stick, %d slip)", it, stick.sum(), (~stick).sum())
            return TrescaSolution(
                u=u,
                sigma_n=tr.sigma_n,
                sigma_tau=tr.sigma_tau,
                labels=labels,
                iterations=it,
                switch_history=history,
                u_t=ut.copy(),
                sigma_t=tr.sigma_t,
                g=g,
                h=h,
                body_load=b_body,
                frictionless=F,
                slip_dir=np.where(stick, 0.0, d),
            )

        to_slip += changed & stick & ~new_stick
        to_stick += changed & ~stick & new_stick
        cyc = (to_slip >= 2) & (to_stick >= 2)
        if cyc.any():
            frozen[cyc] = opts.freeze_iters
            new_stick[cyc] = True
            to_slip[cyc] = 0
            to_stick[cyc] = 0
        stick, d = new_stick, np.where(new_d == 0, 1.0, new_d)

    osc = np.flatnonzero((to_slip > 0) & (to_stick > 0)).tolist()
    raise NonConvergenceError(
        f"Tresca switching did not converge in {opts.max_outer} sweeps "
        f"(last switch count {history[-1]}, oscillating nodes {osc[:20]})",
        iterations=opts.max_outer,
        last_switches=history[-1],
        oscillating=osc,
    )


def friction_functional(system: StiffnessSystem, g: np.ndarray, w: np.ndarray) -> float:
    """Lumped ``sum_i weight_i g_i |w_tau(x_i)|``."""
    top = system.topology
    wn = w.reshape(-1, 2)[top.neumann_nodes]
    wt = np.sum(wn * top.neumann_tangent, axis=1)
    return float(np.sum(top.neumann_weight * g * np.abs(wt)))


@dataclass(frozen=True)
class ResidualReport:
    threshold: float
    complementarity: float
    weak_violation: float
    threshold_scale: float
    complementarity_scale: float

    def as_dict(self) -> dict[str, float]:
        return {
            "threshold": self.threshold,
            "complementarity": self.complementarity,
            "weak_violation": self.weak_violation,
            "threshold_scale": self.threshold_scale,
            "complementarity_scale": self.complementarity_scale,
        }


def random_test_fields(system: StiffnessSystem, center: np.ndarray, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random admissible fields around ``center`` at scales spanning 1e-3..1e1."""
    scale = max(float(np.max(np.abs(center))), 1e-3)
    out = []
    for _ in range(n):
        w = np.zeros(system.n_dofs)
        amp = scale * 10.0 ** rng.uniform(-3, 1)
        w[system.free_dofs] = amp * rng.standard_normal(len(system.free_dofs))
        if rng.random() < 0.5:
            w = w + center
        out.append(w)
    return out


def weak_inequality_gap(system: StiffnessSystem, u: np.ndarray, w: np.ndarray, b_data: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    """Gap ``<u,w-u> + Phi(w) - Phi(u) - (b, w-u)`` and its magnitude scale."""
    dw = w - u
    a = energy_inner(system, u, dw)
    pw = friction_functional(system, g, w)
    pu = friction_functional(system, g, u)
    lw = float(b_data @ dw)
    return a + pw - pu - lw, abs(a) + pw + pu + abs(lw)


def tresca_residuals(
    sol: TrescaSolution,
    system: StiffnessSystem,
    n_samples: int = 50,
    rng: np.random.Generator | None = None,
) -> ResidualReport:
    """Nodewise Tresca-law residuals and sampled weak-inequality violation.

    ``weak_violation`` is the most negative relative gap over the samples
    (0 when none is negative).  Scales: ``threshold_scale = max g`` and
    ``complementarity_scale = max g * max(max |u_tau|, h_mesh)``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    st = np.linalg.norm(sol.sigma_tau, axis=1)
    threshold = float(np.max(np.maximum(0.0, st - sol.g), initial=0.0))
    top = system.topology
    un = sol.u.reshape(-1, 2)[top.neumann_nodes]
    uvec = un - np.sum(un * top.neumann_normal, axis=1)[:, None] * top.neumann_normal
    comp = np.abs(np.sum(uvec * sol.sigma_tau, axis=1) + sol.g * np.linalg.norm(uvec, axis=1))
    complementarity = float(np.max(comp, initial=0.0))
    b_data = sol.body_load + assemble_boundary_normal_load(system.mesh, top, sol.h)
    worst = 0.0
    for w in random_test_fields(system, sol.u, n_samples, rng):
        gap, scale = weak_inequality_gap(system, sol.u, w, b_data, sol.g)
        if scale > 0:
            worst = min(worst, gap / scale)
    g_max = float(np.max(sol.g)) if len(sol.g) else 0.0
    h_mesh = system.mesh.max_edge_length
    umax = float(np.max(np.abs(sol.u_t), initial=0.0))
    return ResidualReport(threshold, complementarity, worst, g_max, g_max * max(umax, h_mesh))


@dataclass(frozen=True)
class BoundaryPartition:
    """Per-Neumann-node class: ``R`` slip, ``T`` strict stick, ``S`` critical stick."""

    classes: np.ndarray
    tol_slip: float
    tol_crit: float
    ratio: np.ndarray

    @property
    def R(self) -> np.ndarray:
        return self.classes == SLIP_CLASS

    @property
    def T(self) -> np.ndarray:
        return self.classes == STRICT_STICK

    @property
    def S(self) -> np.ndarray:
        return self.classes == CRITICAL_STICK

    def counts(self) -> dict[str, int]:
        return {c: int(np.count_nonzero(self.classes == c)) for c in (SLIP_CLASS, STRICT_STICK, CRITICAL_STICK)}


def compute_boundary_partition(
    sol: TrescaSolution,
    g0: np.ndarray | None = None,
    tol_slip: float = 1e-8,
    tol_crit: float = 1e-3,
) -> BoundaryPartition:
    g0 = sol.g if g0 is None else np.asarray(g0, dtype=float)
    slip_norm = np.abs(sol.u_t)
    ratio = np.linalg.norm(sol.sigma_tau, axis=1) / g0
    cls = np.where(
        slip_norm > tol_slip,
        SLIP_CLASS,
        np.where(ratio >= 1.0 - tol_crit, CRITICAL_STICK, STRICT_STICK),
    )
    return BoundaryPartition(cls, tol_slip, tol_crit, ratio)


@dataclass
class TangentialSignoriniSpec:
    """Data of the derivative problem.

    Nodal arrays live on the Neumann nodes.  ``u0_tau_dir`` and
    ``slip_stiffness`` matter on R nodes, ``s_dir`` on S nodes (zero rows
    elsewhere).  ``capped`` lists R nodes whose stiffness hit ``K_CAP``.
    """

    fp: Callable | np.ndarray | None
    hp: np.ndarray
    gp: np.ndarray
    partition: BoundaryPartition
    u0_tau_dir: np.ndarray
    slip_stiffness: np.ndarray
    s_dir: np.ndarray
    capped: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        R, S = self.partition.R, self.partition.S
        k = self.slip_stiffness[R]
        if not (np.all(np.isfinite(k)) and np.all(k > 0)):
            raise ValueError("slip stiffness must be positive and finite on R nodes")
        if S.any():
            nrm = np.linalg.norm(self.s_dir[S], axis=1)
            if np.any(np.abs(nrm - 1.0) > 1e-12):
                raise ValueError("s_dir must be a unit vector on S nodes")


def signorini_spec_from_tresca(
    sol: TrescaSolution,
    partition: BoundaryPartition,
    system: StiffnessSystem,
    fp=None,
    hp=None,
    gp=None,
) -> TangentialSignoriniSpec:
    """Instantiate the derivative problem at a Tresca solution ``u0``.

    ``v = u0_tau/|u0_tau|`` and ``k = g0/|u0_tau|`` (capped at ``K_CAP``) on R
    nodes; ``s_dir = sigma_tau(u0)/|sigma_tau(u0)|`` on S nodes (the traction
    there equals ``g0`` up to ``tol_crit``).
    """
    tan = system.topology.neumann_tangent
    kn = len(sol.g)
    R, S = partition.R, partition.S
    v = np.zeros((kn, 2))
    v[R] = np.sign(sol.u_t[R])[:, None] * tan[R]
    k = np.zeros(kn)
    with np.errstate(divide="ignore"):
        k[R] = sol.g[R] / np.abs(sol.u_t[R])
    capped = np.flatnonzero(R & (k > K_CAP)).tolist()
    if capped:
        logger.warning("slip stiffness capped at %.1e on %d node(s): %s", K_CAP, len(capped), capped)
    k = np.minimum(k, K_CAP)
    s = np.zeros((kn, 2))
    s[S] = np.sign(sol.sigma_t[S])[:, None] * tan[S]
    return TangentialSignoriniSpec(
        fp=fp,
        hp=_boundary_scalar(hp, system, "hp"),
        gp=_boundary_scalar(gp, system, "gp"),
        partition=partition,
        u0_tau_dir=v,
        slip_stiffness=k,
        s_dir=s,
        capped=capped,
    )


@dataclass
class SignoriniSolution:
    u: np.ndarray
    s_released: np.ndarray
    iterations: int
    switch_history: list[int]


def _tangential_signs(spec: TangentialSignoriniSpec, tan: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # the tangent line is one-dimensional: a unit tangential vector is +-tau
    v = np.sign(np.sum(spec.u0_tau_dir * tan, axis=1)) * spec.partition.R
    s = np.sign(np.sum(spec.s_dir * tan, axis=1)) * spec.partition.S
    return v, s


def psi_slip_term(spec: TangentialSignoriniSpec, system: StiffnessSystem, w: np.ndarray) -> float:
    """Quadratic slip term ``sum_R weight k/2 (|w_tau|^2 - (w_tau.v)^2)``.

    Computed in nodal tangential coordinates; in 2D it vanishes identically.
    """
    top = system.topology
    R = spec.partition.R
    wn = w.reshape(-1, 2)[top.neumann_nodes[R]]
    a = np.sum(wn * top.neumann_tangent[R], axis=1)
    vs = _tangential_signs(spec, top.neumann_tangent)[0][R]
    quad = a * a - (a * vs) ** 2
    return float(np.sum(top.neumann_weight[R] * spec.slip_stiffness[R] / 2.0 * quad))


def solve_tangential_signorini(
    spec: TangentialSignoriniSpec,
    system: StiffnessSystem,
    opts: TrescaOptions | None = None,
) -> SignoriniSolution:
    """Solve the tangential Signorini problem of the derivative.

    ``u'_tau = 0`` on T nodes; on S nodes ``u'_tau = -beta s_dir`` with
    ``beta >= 0`` and traction ``(sigma_tau(u') - g' s_dir).s_dir <= 0``,
    complementary; on R nodes the tangential traction is ``-g' v``.  The S
    constraints are handled by a primal-dual active set: a held node
    (``beta = 0``) is released when its multiplier turns negative, a released
    node is held again when ``beta`` turns negative.

    Raises:
        NonConvergenceError: the S active set keeps changing.
    """
    opts = opts or TrescaOptions()
    op = contact_operator(system)
    top = system.topology
    tan = top.neumann_tangent
    part = spec.partition
    R, T, S = part.R, part.T, part.S
    w = op.weight

    v, s = _tangential_signs(spec, tan)
    # in 2D the tangent space is a line: k (a - (a v) v) = k a (1 - v^2) = 0
    psi_stiffness = spec.slip_stiffness * (1.0 - v * v) * R
    if np.any(psi_stiffness != 0.0):
        raise AssertionError("slip-curvature term must vanish for a one-dimensional tangent space")

    b_data = _load_vector(spec.fp, system) + assemble_boundary_normal_load(system.mesh, top, spec.hp)
    b_loc = op.to_local(b_data)
    b_fric = b_loc.copy()
    b_fric[op.tdof[R]] += -spec.gp[R] * v[R] * w[R]
    b_fric[op.tdof[S]] += spec.gp[S] * s[S] * w[S]

    held = S.copy()
    history: list[int] = []
    scale = max(float(np.max(np.abs(spec.gp), initial=0.0)), 1.0)
    for it in range(1, opts.max_outer + 1):
        fixed = T | held
        u_loc = op.solve(fixed, b_fric)
        ut = u_loc[op.tdof]
        sig = op.tangential_traction(u_loc, b_loc)
        mult = -(sig - spec.gp * s) * s
        beta = -s * ut
        release = held & (mult < -1e-12 * scale)
        hold = S & ~held & (beta < 0)
        n_switch = int(np.count_nonzero(release | hold))
        history.append(n_switch)
        if n_switch == 0:
            return SignoriniSolution(op.to_global(u_loc), S & ~held, it, history)
        held = (held & ~release) | hold

    raise NonConvergenceError(
        f"tangential Signorini active set did not settle in {opts.max_outer} sweeps",
        iterations=opts.max_outer,
        last_switches=history[-1],
    )


def random_cone_fields(
    spec: TangentialSignoriniSpec, system: StiffnessSystem, center: np.ndarray, n: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Random fields of the constraint set: ``w_tau = 0`` on T, ``w_tau in R_- s_dir`` on S."""
    op = contact_operator(system)
    part = spec.partition
    s = _tangential_signs(spec, system.topology.neumann_tangent)[1]
    base = max(float(np.max(np.abs(center))), 1e-3)
    out = []
    for _ in range(n):
        wl = np.zeros(system.n_dofs)
        amp = base * 10.0 ** rng.uniform(-3, 1)
        wl[system.free_dofs] = amp * rng.standard_normal(len(system.free_dofs))
        if rng.random() < 0.5:
            wl = wl + op.to_local(center)
        wl[op.tdof[part.T]] = 0.0
        wt = wl[op.tdof[part.S]]
        wl[op.tdof[part.S]] = -np.abs(wt) * s[part.S]
        out.append(op.to_global(wl))
    return out


def signorini_vi_gap(spec: TangentialSignoriniSpec, system: StiffnessSystem, u: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Left minus right side of the derivative variational inequality, and a scale."""
    top = system.topology
    part = spec.partition
    tan = top.neumann_tangent
    wgt = top.neumann_weight
    dw = w - u
    a = energy_inner(system, u, dw)
    nodes = top.neumann_nodes
    ut = np.sum(u.reshape(-1, 2)[nodes] * tan, axis=1)
    dwt = np.sum(dw.reshape(-1, 2)[nodes] * tan, axis=1)
    v, s = _tangential_signs(spec, tan)
    psi = np.where(part.R, spec.slip_stiffness * (ut - ut * v * v) * dwt * wgt, 0.0).sum()
    b_data = _load_vector(spec.fp, system) + assemble_boundary_normal_load(system.mesh, top, spec.hp)
    load = float(b_data @ dw)
    fr = np.where(part.R, -spec.gp * v * dwt * wgt, 0.0).sum()
    fs = np.where(part.S, spec.gp * s * dwt * wgt, 0.0).sum()
    lhs = a + psi
    rhs = load + fr + fs
    return lhs - rhs, abs(a) + abs(psi) + abs(load) + abs(fr) + abs(fs)
