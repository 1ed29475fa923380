"""Pointwise convex analysis of the tangential norm ``x -> |x_tau|``.

Everything here acts on a single boundary point in R^d (d = 2 or 3) with a
unit normal ``n``; ``x_tau = x - (x.n) n`` is the tangential part.  The
functions cover the subdifferential of the tangential norm, the normal cone
to the unit ball of the tangent plane, second-order epi-derivatives of
``g |x_tau|`` and the matching proximal shrinkage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

ZERO_TOL = 1e-12
MEMBERSHIP_TOL = 1e-10

SINGLETON = "SINGLETON"
BALL_CAP = "BALL_CAP"
LINE_NORMAL = "LINE_NORMAL"
LINE_PLUS_RAY = "LINE_PLUS_RAY"

INF = math.inf


@dataclass(frozen=True)
class TangentFrame:
    n: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.n, dtype=float)
        if n.ndim != 1 or n.shape[0] not in (2, 3):
            raise ValueError("normal must be a vector in R^2 or R^3")
        if abs(np.linalg.norm(n) - 1.0) > ZERO_TOL:
            raise ValueError(f"normal must have unit length, got |n| = {np.linalg.norm(n)!r}")
        object.__setattr__(self, "n", n)

    @property
    def dim(self) -> int:
        return self.n.shape[0]

    def normal_part(self, x) -> float:
        return float(np.dot(x, self.n))

    def tangential_part(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x - np.dot(x, self.n) * self.n


def tangential_part(x, frame: TangentFrame) -> np.ndarray:
    return frame.tangential_part(x)


def tangential_norm(x, frame: TangentFrame) -> float:
    return float(np.linalg.norm(frame.tangential_part(x)))


@dataclass(frozen=True)
class SubdiffDescription:
    """Subdifferential of the tangential norm: a unit tangent vector or the ball cap."""

    kind: str
    frame: TangentFrame
    vector: np.ndarray | None = None

    def contains(self, y, tol: float = MEMBERSHIP_TOL) -> bool:
        y = np.asarray(y, dtype=float)
        if self.kind == SINGLETON:
            return bool(np.linalg.norm(y - self.vector) <= tol)
        return in_ball_cap(y, self.frame, tol)


@dataclass(frozen=True)
class NormalConeDescription:
    """Normal cone to the ball cap: ``R n`` or ``R n + R_+ ray``."""

    kind: str
    frame: TangentFrame
    ray: np.ndarray | None = None

    def contains(self, z, tol: float = MEMBERSHIP_TOL) -> bool:
        z = np.asarray(z, dtype=float)
        zt = self.frame.tangential_part(z)
        scale = max(1.0, float(np.linalg.norm(z)))
        if self.kind == LINE_NORMAL:
            return bool(np.linalg.norm(zt) <= tol * scale)
        along = float(np.dot(zt, self.ray))
        return bool(along >= -tol * scale and np.linalg.norm(zt - along * self.ray) <= tol * scale)


def in_ball_cap(y, frame: TangentFrame, tol: float = MEMBERSHIP_TOL) -> bool:
    """Is ``y`` in the closed unit ball intersected with the tangent plane?"""
    y = np.asarray(y, dtype=float)
    return bool(abs(frame.normal_part(y)) <= tol and np.linalg.norm(y) <= 1.0 + tol)


def subdiff_tangential_norm(x, frame: TangentFrame, tol: float = ZERO_TOL) -> SubdiffDescription:
    xt = frame.tangential_part(x)
    r = float(np.linalg.norm(xt))
    if r > tol:
        return SubdiffDescription(SINGLETON, frame, xt / r)
    return SubdiffDescription(BALL_CAP, frame)


def normal_cone_ball_cap(y, frame: TangentFrame, tol: float = ZERO_TOL) -> NormalConeDescription:
    """Normal cone to ``closed B(0,1) ∩ (R n)^perp`` at ``y``.

    Raises:
        ValueError: ``y`` is not in the ball cap.
    """
    y = np.asarray(y, dtype=float)
    if not in_ball_cap(y, frame, tol=MEMBERSHIP_TOL):
        raise ValueError("y is not in the closed unit ball of the tangent plane")
    r = float(np.linalg.norm(y))
    if r < 1.0 - tol:
        return NormalConeDescription(LINE_NORMAL, frame)
    # on the unit sphere, up to the membership tolerance
    return NormalConeDescription(LINE_PLUS_RAY, frame, frame.tangential_part(y) / r)


def epi2_tangential_norm(x, y, z, frame: TangentFrame, tol: float = ZERO_TOL) -> float:
    """Second-order epi-derivative of ``|._tau|`` at ``x`` for ``y``, evaluated at ``z``."""
    return epi2_G(x, y, z, 1.0, 0.0, frame, tol=tol)


def epi2_G(x, y, z, g0: float, g0p: float, frame: TangentFrame, tol: float = ZERO_TOL) -> float:
    """Second-order epi-derivative of ``(t, x) -> g_t |x_tau|`` at ``x`` for ``y``.

    ``g0 > 0`` is the threshold at ``t = 0`` and ``g0p`` its right derivative;
    ``y`` must be a subgradient of ``g0 |._tau|`` at ``x``.  Returns ``math.inf``
    outside the effective domain.

    If ``x_tau != 0`` (with ``u = x_tau/|x_tau|``)::

        g0/(2|x_tau|) (|z_tau|^2 - (z_tau.u)^2) + g0p u.z

    otherwise the indicator of the normal cone at ``y/g0`` plus ``g0p (y/g0).z``.
    """
    if not g0 > 0:
        raise ValueError("g0 must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    sub = subdiff_tangential_norm(x, frame, tol)
    if not sub.contains(y / g0, tol=MEMBERSHIP_TOL):
        raise ValueError("y is not a subgradient of g0 |x_tau| at x")
    if sub.kind == SINGLETON:
        xt = frame.tangential_part(x)
        r = float(np.linalg.norm(xt))
        u = xt / r
        zt = frame.tangential_part(z)
        quad = float(np.dot(zt, zt) - np.dot(zt, u) ** 2)
        return g0 / (2.0 * r) * quad + g0p * float(np.dot(u, z))
    cone = normal_cone_ball_cap(y / g0, frame)
    if not cone.contains(z):
        return INF
    return g0p * float(np.dot(y / g0, z))


def second_order_quotient(phi: Callable[[float, np.ndarray], float], t: float, x, y, z) -> float:
    """``(phi(t, x + t z) - phi(t, x) - t y.z) / t^2`` for ``t > 0``."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return (phi(t, x + t * z) - phi(t, x) - t * float(np.dot(y, z))) / (t * t)


def G_function(frame: TangentFrame, g0: float, g0p: float) -> Callable[[float, np.ndarray], float]:
    """``(t, x) -> (g0 + t g0p) |x_tau|``."""

    def phi(t: float, x: np.ndarray) -> float:
        return (g0 + t * g0p) * tangential_norm(x, frame)

    return phi


def prox_tangential_shrink(x, weight: float, frame: TangentFrame) -> np.ndarray:
    """Proximal map of ``weight |._tau|``: soft-threshold the tangential part."""
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    x = np.asarray(x, dtype=float)
    xn = frame.normal_part(x) * frame.n
    xt = x - xn
    r = float(np.linalg.norm(xt))
    if r <= weight:
        return xn
    return xn + xt * (1.0 - weight / r)
