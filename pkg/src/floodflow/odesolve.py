"""Fixed-step explicit ODE integrators: euler, heun, rk4.

State is a flat float vector; the right-hand side is a callable
field(x, t) -> dx/dt of the same shape. Steps are uniform over
[t_start, t_end], and integrating backward (t_end < t_start) just means a
negative step, which the generative sampler uses to run time from 1 to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

METHODS = ("euler", "heun", "rk4")

Field = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class OdeSpec:
    """Integration plan: direction, step count, and method name."""

    t_start: float = 1.0
    t_end: float = 0.0
    steps: int = 50
    method: str = "euler"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if not np.isfinite(self.t_start) or not np.isfinite(self.t_end):
            raise ValueError("t_start and t_end must be finite")
        if self.t_start == self.t_end:
            raise ValueError("t_start and t_end must differ")


def _step_euler(field: Field, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    return x + dt * field(x, t)


def _step_heun(field: Field, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = field(x, t)
    k2 = field(x + dt * k1, t + dt)
    return x + (dt / 2.0) * (k1 + k2)


def _step_rk4(field: Field, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = field(x, t)
    k2 = field(x + (dt / 2.0) * k1, t + dt / 2.0)
    k3 = field(x + (dt / 2.0) * k2, t + dt / 2.0)
    k4 = field(x + dt * k3, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"euler": _step_euler, "heun": _step_heun, "rk4": _step_rk4}


def integrate(field: Field, x_init: np.ndarray, spec: OdeSpec) -> np.ndarray:
    """Integrate dx/dt = field(x, t) from t_start to t_end in spec.steps steps.

    Returns the final state; x_init is not modified. Raises ValueError if
    the state stops being finite, reporting the step index.
    """
    x = np.array(x_init, dtype=np.float64, copy=True)
    if not np.isfinite(x).all():
        raise ValueError("initial state contains non-finite values")
    step = _STEPPERS[spec.method]
    dt = (spec.t_end - spec.t_start) / spec.steps
    for i in range(spec.steps):
        t = spec.t_start + i * dt
        x = step(field, x, t, dt)
        if not np.isfinite(x).all():
            raise ValueError(f"non-finite state at step {i + 1} of {spec.steps} (t={t + dt})")
    return x
