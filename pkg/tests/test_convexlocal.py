import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from trescafem.convexlocal import (
    BALL_CAP,
    LINE_NORMAL,
    LINE_PLUS_RAY,
    SINGLETON,
    G_function,
    TangentFrame,
    epi2_G,
    epi2_tangential_norm,
    in_ball_cap,
    normal_cone_ball_cap,
    prox_tangential_shrink,
    second_order_quotient,
    subdiff_tangential_norm,
    tangential_norm,
)

vec3 = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3).map(np.array)


def frame_from(v):
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(v) < 1e-3:
        v = np.array([0.0, 0.0, 1.0])[: len(v)] if len(v) == 3 else np.array([0.0, 1.0])
    return TangentFrame(v / np.linalg.norm(v))


def test_frame_validation():
    with pytest.raises(ValueError):
        TangentFrame(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        TangentFrame(np.array([1.0, 0.0, 0.0, 0.0]))


def test_subdifferential_cases():
    fr = TangentFrame(np.array([0.0, 1.0]))
    s = subdiff_tangential_norm([2.0, 5.0], fr)
    assert s.kind == SINGLETON
    np.testing.assert_allclose(s.vector, [1.0, 0.0])
    s0 = subdiff_tangential_norm([0.0, 5.0], fr)
    assert s0.kind == BALL_CAP
    assert s0.contains([0.5, 0.0]) and s0.contains([-1.0, 0.0])
    assert not s0.contains([0.5, 0.1]) and not s0.contains([1.1, 0.0])


def test_normal_cone_kinds():
    fr = TangentFrame(np.array([0.0, 0.0, 1.0]))
    assert normal_cone_ball_cap([0.3, 0.4, 0.0], fr).kind == LINE_NORMAL
    c = normal_cone_ball_cap([0.6, 0.8, 0.0], fr)
    assert c.kind == LINE_PLUS_RAY
    assert c.contains([1.2, 1.6, -4.0])
    assert not c.contains([-0.6, -0.8, 0.0])
    assert not c.contains([0.8, -0.6, 0.0])
    with pytest.raises(ValueError):
        normal_cone_ball_cap([0.0, 0.0, 0.5], fr)
    with pytest.raises(ValueError):
        normal_cone_ball_cap([1.0, 1.0, 0.0], fr)


def test_in_ball_cap():
    fr = TangentFrame(np.array([1.0, 0.0]))
    assert in_ball_cap([0.0, 1.0], fr)
    assert not in_ball_cap([0.1, 0.5], fr)


def test_epi_requires_subgradient():
    fr = TangentFrame(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        epi2_tangential_norm([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], fr)
    with pytest.raises(ValueError):
        epi2_G([1.0, 0.0], [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, fr)


def test_epi_closed_forms_examples():
    fr = TangentFrame(np.array([0.0, 0.0, 1.0]))
    x = np.array([2.0, 0.0, 1.0])
    # quadratic part only sees the tangential direction orthogonal to x_tau
    assert epi2_tangential_norm(x, [1.0, 0.0, 0.0], [0.0, 1.0, 5.0], fr) == pytest.approx(0.25)
    assert epi2_tangential_norm(x, [1.0, 0.0, 0.0], [3.0, 0.0, 5.0], fr) == 0.0
    assert epi2_G(x, [2.0, 0.0, 0.0], [1.0, 1.0, 0.0], 2.0, 0.5, fr) == pytest.approx(0.5 + 0.5)
    # x_tau = 0: finite exactly on the normal cone
    x0 = np.array([0.0, 0.0, 3.0])
    y = np.array([0.0, 1.0, 0.0])
    assert epi2_tangential_norm(x0, y, [0.0, 2.0, 1.0], fr) == 0.0
    assert epi2_tangential_norm(x0, y, [1.0, 2.0, 1.0], fr) == math.inf
    assert epi2_G(x0, 2 * y, [0.0, 2.0, 1.0], 2.0, -1.0, fr) == pytest.approx(-2.0)
    assert epi2_tangential_norm(x0, 0.5 * y, [0.0, 0.0, 7.0], fr) == 0.0
    assert epi2_tangential_norm(x0, 0.5 * y, [0.0, 1.0, 0.0], fr) == math.inf


def test_quotient_rejects_nonpositive_t():
    fr = TangentFrame(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        second_order_quotient(G_function(fr, 1.0, 0.0), 0.0, [0, 1], [0, 1], [1, 1])


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, vec3, st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
def test_quotient_converges_at_first_order(n, x, z, g0, g0p):
    fr = frame_from(n)
    xt = fr.tangential_part(x)
    r = np.linalg.norm(xt)
    if r < 0.3:
        return
    y = g0 * xt / r
    phi = G_function(fr, g0, g0p)
    closed = epi2_G(x, y, z, g0, g0p, fr)
    errs = [abs(second_order_quotient(phi, t, x, y, z) - closed) for t in (1e-2, 1e-3)]
    bound = (1 + abs(g0p)) * (1 + g0) * np.linalg.norm(z) ** 3 / r**2
    assert errs[0] <= 10 * bound * 1e-2 + 1e-9
    assert errs[1] <= 10 * bound * 1e-3 + 1e-7


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, st.floats(0.0, 5.0))
def test_prox_optimality(n, x, w):
    fr = frame_from(n)
    p = prox_tangential_shrink(x, w, fr)
    assert fr.normal_part(p) == pytest.approx(fr.normal_part(x), abs=1e-12)
    residual = x - p
    pt = fr.tangential_part(p)
    if np.linalg.norm(pt) > 1e-12:
        np.testing.assert_allclose(residual, w * pt / np.linalg.norm(pt), atol=1e-10)
    else:
        assert np.linalg.norm(residual) <= w + 1e-12


def test_prox_matches_numerical_minimization():
    rng = np.random.default_rng(1)
    for _ in range(10):
        fr = frame_from(rng.standard_normal(3))
        x = rng.standard_normal(3) * 2
        w = rng.uniform(0.1, 2.0)
        obj = lambda y: w * tangential_norm(y, fr) + 0.5 * np.sum((y - x) ** 2)
        best = minimize(obj, x, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
        p = prox_tangential_shrink(x, w, fr)
        assert obj(p) <= best.fun + 1e-9


def test_prox_negative_weight():
    with pytest.raises(ValueError):
        prox_tangential_shrink([1.0, 0.0], -1.0, TangentFrame(np.array([0.0, 1.0])))
