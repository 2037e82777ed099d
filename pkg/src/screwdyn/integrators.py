"""Fixed-step explicit integrators for ``y' = f(t, y)`` on flat numpy arrays."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .errors import NonFinite

Rhs = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(f: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def euler_step(f: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    return y + h * f(t, y)


STEPPERS = {"rk4": rk4_step, "euler": euler_step}


def integrate(
    f: Rhs,
    y0,
    t0: float,
    t1: float,
    h: float,
    method: str = "rk4",
    post_step: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    callback: Optional[Callable[[int, float, np.ndarray], None]] = None,
) -> np.ndarray:
    """Advance ``y0`` from ``t0`` to ``t1`` with ``round((t1-t0)/h)`` steps.

    ``post_step`` may project the state (e.g. renormalize quaternions);
    ``callback(i, t, y)`` is called after every step.  Raises
    :class:`NonFinite` carrying the last finite state.
    """
    step = STEPPERS[method]
    n = int(round((t1 - t0) / h))
    y = np.array(y0, dtype=float)
    t = t0
    for i in range(1, n + 1):
        y_new = step(f, t, y, h)
        if post_step is not None:
            y_new = post_step(y_new)
        if not np.all(np.isfinite(y_new)):
            raise NonFinite(f"non-finite state at t={t0 + i * h!r}", t_last=t, state_last=y)
        y = y_new
        t = t0 + i * h
        if callback is not None:
            callback(i, t, y)
    return y
