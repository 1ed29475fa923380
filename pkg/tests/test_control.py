import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from trescafem.control import ControlConfig, ControlError, ControlProblem, project_U
from trescafem.sensitivity import gateaux_check

J0_REGRESSION = 12.014314425258304


def problem(case, f=True, **kw):
    cfg = ControlConfig(beta=kw.pop("beta", 1.0), g1=case.g1, g2=kw.pop("g2", case.g2), m=2.0, **kw)
    return ControlProblem(case.system, cfg, f=case.b if f else None, h=0.0)


@given(arrays(float, 12, elements=st.floats(-10, 10)))
def test_projection_clamps_and_is_idempotent(z):
    p = project_U(z)
    assert np.all((-1 <= p) & (p <= 1))
    np.testing.assert_array_equal(project_U(p), p)
    inside = np.abs(z) <= 1
    np.testing.assert_array_equal(p[inside], z[inside])


def test_projection_examples():
    assert project_U(np.array([3.0]))[0] == 1.0
    assert project_U(np.array([-3.0]))[0] == -1.0


@pytest.mark.parametrize(
    "kw",
    [dict(beta=0.0), dict(m=0.0), dict(eta=-1.0), dict(stop_window=0), dict(lower=1.0, upper=-1.0)],
)
def test_config_validation(kw):
    base = dict(beta=1.0, g1=2.0, g2=1.0, m=1.5)
    base.update(kw)
    with pytest.raises(ValueError):
        ControlConfig(**base)


def test_smallness_assumption_enforced(disk32):
    with pytest.raises(ValueError):
        ControlProblem(disk32.system, ControlConfig(beta=1.0, g1=2.0, g2=2.0, m=2.0))
    with pytest.raises(ValueError):
        ControlProblem(disk32.system, ControlConfig(beta=1.0, g1=1.0, g2=0.5, m=2.0))


def test_zero_data_cost_is_penalty_only(disk32):
    prob = problem(disk32, f=False, beta=0.7)
    z = disk32.z0
    J, parts = prob.cost_J(z)
    ell = disk32.g1 + z * disk32.g2
    assert parts["compliance"] == 0.0
    assert J == pytest.approx(0.35 * np.sum(disk32.topology.neumann_weight * ell**2), rel=1e-14)


def test_zero_control_uses_g1(disk32):
    prob = problem(disk32)
    ev = prob.evaluate(np.zeros_like(disk32.z0))
    np.testing.assert_array_equal(ev.ell, disk32.g1)


def test_disk_cost_regression(disk128):
    J, parts = problem(disk128).cost_J(disk128.z0)
    assert J == pytest.approx(J0_REGRESSION, rel=1e-9)
    assert parts["compliance"] > 0


def test_differential_trivial_cases(disk32):
    prob = problem(disk32)
    ev = prob.evaluate(disk32.z0)
    assert prob.gateaux_dJ(ev, np.zeros_like(disk32.z0)) == 0.0
    flat = problem(disk32, g2=np.zeros_like(disk32.g2))
    ev0 = flat.evaluate(disk32.z0)
    assert flat.gateaux_dJ(ev0, np.ones_like(disk32.z0)) == 0.0
    assert not flat.descent_direction(ev0).any()


def test_all_stick_descent_branch(disk32):
    prob = problem(disk32)
    ev = prob.evaluate(disk32.z0)
    assert ev.partition.counts()["R"] == 0
    np.testing.assert_array_equal(prob.descent_direction(ev), -disk32.g2 * (disk32.g1 + disk32.z0 * disk32.g2))


@pytest.mark.parametrize("z_const", [-1.0, -0.8, -0.6])
def test_differential_matches_finite_differences_with_slip(disk32, z_const):
    # smaller thresholds make part of the boundary slip, exercising the R branch
    prob = problem(disk32, beta=0.5)
    prob.g1 = 0.4 * prob.g1
    prob.g2 = 0.15 * prob.g2
    z = np.full_like(disk32.z0, z_const)
    ev = prob.evaluate(z)
    assert ev.partition.counts()["R"] > 0
    rng = np.random.default_rng(11)
    d = rng.uniform(-1, 1, len(z))
    rows = gateaux_check(lambda zz: prob.evaluate(zz).J, z, d, [1e-3, 1e-4, 1e-5], prob.gateaux_dJ(ev, d), J0=ev.J)
    assert rows[-1].rel_err <= 1e-3


def test_linearity_and_descent(disk32):
    prob = problem(disk32)
    ev = prob.evaluate(disk32.z0)
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(2)
    z, w = rng.standard_normal((2, len(disk32.z0)))
    lhs = prob.gateaux_dJ(ev, a * z + b * w)
    rhs = a * prob.gateaux_dJ(ev, z) + b * prob.gateaux_dJ(ev, w)
    assert abs(lhs - rhs) <= 1e-12 * (abs(a * prob.gateaux_dJ(ev, z)) + abs(b * prob.gateaux_dJ(ev, w)))
    zd = prob.descent_direction(ev)
    dj = prob.gateaux_dJ(ev, zd)
    assert dj == pytest.approx(-np.sum(disk32.topology.neumann_weight * zd**2), rel=1e-12)
    assert dj < 0


def test_zero_data_optimum_is_clamped(disk32):
    prob = problem(disk32, f=False, stop_threshold=1e-14, max_iters=400)
    state = prob.optimize(disk32.z0)
    g2 = disk32.g2
    oracle = np.where(g2 != 0, np.clip(-disk32.g1 / np.where(g2 != 0, g2, 1.0), -1, 1), disk32.z0)
    active = np.abs(g2) > 0.05
    np.testing.assert_allclose(state.z[active], oracle[active], atol=1e-6)


def test_zero_step_terminates_at_first_window(disk32):
    prob = problem(disk32, eta=0.0)
    state = prob.optimize(disk32.z0)
    assert state.converged and state.iterations == 20
    np.testing.assert_array_equal(state.z, disk32.z0)


def test_iterates_stay_admissible(disk32):
    prob = problem(disk32, max_iters=60)
    state = prob.optimize(disk32.z0)
    assert np.all(np.abs(state.z) <= 1)
    assert np.all(prob.ell(state.z) >= prob.ell_floor)
    assert all(r.dJ <= 0 for r in state.cost_history)
    assert len(state.partition_history) == len(state.cost_history)


def test_initial_control_outside_box(disk32):
    with pytest.raises(ValueError):
        problem(disk32).optimize(np.full_like(disk32.z0, 1.5))


def test_solver_failure_carries_iteration(disk32):
    from trescafem.vi import TrescaOptions

    cfg = ControlConfig(beta=1.0, g1=disk32.g1, g2=disk32.g2, m=2.0)
    prob = ControlProblem(disk32.system, cfg, f=disk32.b, h=0.0, tresca_opts=TrescaOptions(max_outer=1))
    with pytest.raises(ControlError) as info:
        prob.optimize(disk32.z0)
    assert info.value.iteration == 0
