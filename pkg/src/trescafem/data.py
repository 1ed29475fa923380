"""Named data functions and the built-in configuration of the disk example.

Every function takes coordinate arrays ``(x, y)``; scalar fields return an
array of the same shape, vector fields one of shape ``x.shape + (2,)``.
"""

from __future__ import annotations

import copy
import math
from typing import Callable

import numpy as np


def disk_f(x, y):
    v = (5.0 - x * x - y * y + x * y) / 4.0
    return np.stack([v, v], axis=-1)


def disk_g2(x, y):
    return x * x - y * y


def disk_z0(x, y):
    return np.cos(x * x - y * y)


def disk_h(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def zero_vector(x, y):
    return np.zeros(np.shape(x) + (2,))


SCALAR_FUNCTIONS: dict[str, Callable] = {
    "disk-g2": disk_g2,
    "disk-z0": disk_z0,
    "disk-h": disk_h,
    "zero": disk_h,
}

VECTOR_FUNCTIONS: dict[str, Callable] = {
    "disk-f": disk_f,
    "zero": zero_vector,
}

DISK_EXAMPLE = {
    "mesh": {"n_boundary": 128, "dirichlet_arc": [0.0, math.pi / 2]},
    "material": {"mu": 0.3846, "lambda": 0.5769},
    "data": {"f": "disk-f", "h": "disk-h", "g1": 2.0, "g2": "disk-g2", "z0": "disk-z0"},
    "tolerances": {"tol_slip": None, "tol_crit": 1e-3, "tol_law": 1e-6, "max_outer": 200},
    "control": {"beta": 1.0, "m": 2.0, "eta": None, "max_iters": 2000, "stop_window": 20, "stop_threshold": None},
    "sensitivity": {"fp": "disk-f", "fp_scale": 15000.0, "hp": 0.0, "gp": "disk-g2", "t_list": [1e-2, 1e-3, 1e-4]},
    "gradcheck": {"t_list": [1e-2, 1e-3, 1e-4]},
    "samples": 50,
}

BUILTIN_CONFIGS: dict[str, dict] = {
    "paper-3.3.2": DISK_EXAMPLE,
    "disk-example": DISK_EXAMPLE,
}


def builtin_config(key: str) -> dict:
    return copy.deepcopy(BUILTIN_CONFIGS[key])


def scalar_field(spec) -> Callable:
    """Registry key or number -> scalar function of ``(x, y)``."""
    if isinstance(spec, str):
        if spec not in SCALAR_FUNCTIONS:
            raise KeyError(f"unknown scalar data key {spec!r}; known: {sorted(SCALAR_FUNCTIONS)}")
        return SCALAR_FUNCTIONS[spec]
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        c = float(spec)
        return lambda x, y: np.full(np.shape(x), c)
    raise TypeError(f"scalar data must be a registry key or a number, got {spec!r}")


def vector_field(spec) -> Callable:
    """Registry key or ``[fx, fy]`` constants -> vector function of ``(x, y)``."""
    if isinstance(spec, str):
        if spec not in VECTOR_FUNCTIONS:
            raise KeyError(f"unknown vector data key {spec!r}; known: {sorted(VECTOR_FUNCTIONS)}")
        return VECTOR_FUNCTIONS[spec]
    if isinstance(spec, (list, tuple)) and len(spec) == 2 and all(isinstance(c, (int, float)) for c in spec):
        c = np.array(spec, dtype=float)
        return lambda x, y: np.broadcast_to(c, np.shape(x) + (2,)).copy()
    raise TypeError(f"vector data must be a registry key or a pair of numbers, got {spec!r}")
