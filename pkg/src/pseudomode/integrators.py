"""Adaptive embedded Runge-Kutta 4(5) propagation of complex array states.

One Dormand-Prince stepper serves both density matrices and wavefunctions:
the state is any complex ndarray and the vector field must be autonomous
(all generators in this package are written in the rotating frame, where
they are time independent). The stage loop is unrolled because trajectory
ensembles hit it millions of times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Dormand-Prince 5(4) tableau. The 5th-order weight row reuses stage
# coefficients a7*, and its final evaluation seeds the next step (FSAL).
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

_D1 = -12715105075 / 11282082432
_D3 = 87487479700 / 32700410799
_D4 = -10690763975 / 1880347072
_D5 = 701980252875 / 199316789632
_D6 = -1453857185 / 822651844
_D7 = 69997945 / 29380423

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# PI step control exponents (error feedback plus damping on the previous step).
_PI_ALPHA = 0.17
_PI_BETA = 0.04
_UNDERFLOW = 1e-14


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = 1.0
    initial_step: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if not 0.0 < self.abs_tol < 1.0:
            raise ValueError(f"abs_tol must lie in (0, 1), got {self.abs_tol}")
        if self.max_step <= 0.0:
            raise ValueError(f"max_step must be positive, got {self.max_step}")
        if self.initial_step <= 0.0:
            raise ValueError(f"initial_step must be positive, got {self.initial_step}")


class IntegrationError(RuntimeError):
    """Step size underflowed; `t_last` is the last successfully reached time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(message)
        self.t_last = t_last


def _stages(rhs, y, h, k1):
    k2 = rhs(y + (h * _A21) * k1)
    k3 = rhs(y + h * (_A31 * k1 + _A32 * k2))
    k4 = rhs(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
    k5 = rhs(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
    k6 = rhs(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
    y_new = y + h * (_A71 * k1 + _A73 * k3 + _A74 * k4 + _A75 * k5 + _A76 * k6)
    return k3, k4, k5, k6, y_new


class Dopri5:
    """Stateful adaptive stepper; advance with step(t_limit), never past it.

    `step_callback`, when given, maps the accepted state to a cleaned-up
    replacement (e.g. Hermitian re-symmetrization). It invalidates the FSAL
    reuse, so pass it only where the cleanup matters.
    """

    def __init__(
        self,
        rhs: Callable[[np.ndarray], np.ndarray],
        t0: float,
        y0: np.ndarray,
        cfg: IntegratorConfig,
        step_callback: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self.rhs = rhs
        self.t = float(t0)
        self.y = np.array(y0, dtype=complex)
        self.cfg = cfg
        self.step_callback = step_callback
        self.h = min(cfg.initial_step, cfg.max_step)
        self._err_prev = 1e-4
        self._k1: np.ndarray | None = None
        self._last: tuple | None = None  # (t_old, h, y_old, k1, k3..k7, y_raw)
        self._interp_coeffs: tuple | None = None

    def step(self, t_limit: float) -> None:
        """Take one accepted step toward t_limit (clamped to land on it)."""
        if t_limit <= self.t:
            raise ValueError(f"t_limit {t_limit} not ahead of current time {self.t}")
        cfg = self.cfg
        rhs = self.rhs
        y = self.y
        abs_tol, rel_tol = cfg.abs_tol, cfg.rel_tol
        if self._k1 is None:
            self._k1 = rhs(y)
        k1 = self._k1
        while True:
            h = min(self.h, cfg.max_step, t_limit - self.t)
            hits_limit = h >= t_limit - self.t
            if h < _UNDERFLOW * max(abs(self.t), 1.0):
                raise IntegrationError(
                    f"step size underflow at t = {self.t:.6g} (stiffness or non-finite state)",
                    t_last=self.t,
                )
            with np.errstate(over="ignore", invalid="ignore"):
                k3, k4, k5, k6, y_new = _stages(rhs, y, h, k1)
                k7 = rhs(y_new)
                err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
                scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
                ratio = np.abs(err) / scale
                err_norm = float(np.sqrt(np.mean(ratio * ratio)))
            if not np.isfinite(err_norm) or not np.isfinite(y_new).all():
                self.h = h * _MIN_FACTOR
                continue

            if err_norm <= 1.0:
                t_old = self.t
                self.t = t_limit if hits_limit else self.t + h
                self._last = (t_old, h, y, k1, k3, k4, k5, k6, k7, y_new)
                self._interp_coeffs = None
                if self.step_callback is not None:
                    y_new = self.step_callback(y_new)
                    self._k1 = None
                else:
                    self._k1 = k7
                self.y = y_new
                if err_norm == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = _SAFETY * err_norm ** (-_PI_ALPHA) * self._err_prev ** _PI_BETA
                    factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                self.h = h * factor
                self._err_prev = max(err_norm, 1e-4)
                return
            self.h = h * min(1.0, max(_MIN_FACTOR, _SAFETY * err_norm ** (-_PI_ALPHA)))

    def interpolate(self, t: float) -> np.ndarray:
        """Dense-output state inside the last accepted step (4th order)."""
        if self._last is None:
            raise RuntimeError("no accepted step to interpolate in")
        t_old, h, y_old, k1, k3, k4, k5, k6, k7, y_raw = self._last
        theta = (t - t_old) / h
        if not -1e-9 <= theta <= 1.0 + 1e-9:
            raise ValueError(f"time {t} outside the last step [{t_old}, {t_old + h}]")
        if theta >= 1.0:
            return y_raw.copy()
        if theta <= 0.0:
            return y_old.copy()
        if self._interp_coeffs is None:
            diff = y_raw - y_old
            bspl = h * k1 - diff
            r4 = diff - h * k7 - bspl
            r5 = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
            self._interp_coeffs = (diff, bspl, r4, r5)
        diff, bspl, r4, r5 = self._interp_coeffs
        return y_old + theta * (diff + (1.0 - theta) * (bspl + theta * (r4 + (1.0 - theta) * r5)))


def fixed_step(rhs: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, h: float,
               k1: np.ndarray | None = None) -> np.ndarray:
    """Single fixed 5th-order step, no error control (used for bisection)."""
    if k1 is None:
        k1 = rhs(y0)
    return _stages(rhs, y0, h, k1)[-1]


def integrate_to_instants(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    instants: Sequence[float],
    cfg: IntegratorConfig,
    step_callback: Callable[[np.ndarray], np.ndarray] | None = None,
) -> list[np.ndarray]:
    """Propagate dy/dt = rhs(y) and return the state at each requested instant.

    `instants` must be strictly increasing; the first entry is the initial
    time and the returned list starts with a copy of y0.
    """
    instants = [float(t) for t in instants]
    if any(b <= a for a, b in zip(instants, instants[1:])):
        raise ValueError("output instants must be strictly increasing")
    stepper = Dopri5(rhs, instants[0], y0, cfg, step_callback=step_callback)
    out = [stepper.y.copy()]
    for target in instants[1:]:
        while stepper.t < target:
            stepper.step(target)
        out.append(stepper.y.copy())
    return out
