"""Lindblad generator, deterministic propagation, and two-time correlators.

All generators are expressed in the frame rotating at the bath/ancilla
center frequency, so the master equation is time independent; any lab-frame
oscillating phase is restored analytically by callers that need it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import DensityMatrix, Operator, hermiticity_defect
from .integrators import IntegratorConfig, integrate_to_instants

STATIONARITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian plus (rate, jump operator) channels on one Hilbert space."""

    dim: int
    H: Operator
    jumps: tuple[tuple[float, Operator], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple((float(r), L) for r, L in self.jumps))
        if self.H.dim != self.dim:
            raise ValueError(f"H has dim {self.H.dim}, model dim is {self.dim}")
        defect = hermiticity_defect(self.H)
        if defect > 1e-12:
            raise ValueError(f"Hamiltonian not Hermitian: defect {defect:.3e}")
        for rate, L in self.jumps:
            if rate < 0.0:
                raise ValueError(f"jump rate must be nonnegative, got {rate}")
            if L.dim != self.dim:
                raise ValueError(f"jump operator dim {L.dim} != model dim {self.dim}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniformly spaced output instants on [t0, t1]."""

    t0: float
    t1: float
    n_points: int

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError(f"need t1 > t0, got [{self.t0}, {self.t1}]")
        if self.n_points < 2:
            raise ValueError(f"need at least 2 output instants, got {self.n_points}")

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_points)

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / (self.n_points - 1)


def rhs_function(model: LindbladModel) -> Callable[[np.ndarray], np.ndarray]:
    """Compiled matrix-form right-hand side of the master equation."""
    H = model.H.mat
    channels = [(rate, L.mat, L.mat.conj().T) for rate, L in model.jumps if rate > 0.0]
    channels = [(rate, L, Ld, Ld @ L) for rate, L, Ld in channels]

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = -1j * (H @ rho - rho @ H)
        for rate, L, Ld, LdL in channels:
            out += rate * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
        return out

    return rhs


def lindblad_rhs(model: LindbladModel, rho: Operator) -> Operator:
    """d(rho)/dt under the model; traceless, Hermiticity preserving."""
    if rho.dim != model.dim:
        raise ValueError(f"state dim {rho.dim} != model dim {model.dim}")
    return Operator(rhs_function(model)(rho.mat))


def generator_defect(model: LindbladModel, rho: DensityMatrix) -> float:
    """Max-entry magnitude of the generator applied to rho (0 iff stationary)."""
    return float(np.max(np.abs(rhs_function(model)(rho.mat))))


def _resymmetrize(rho: np.ndarray) -> np.ndarray:
    return (rho + rho.conj().T) / 2.0


def evolve(
    model: LindbladModel,
    rho0: DensityMatrix,
    grid: TimeGrid,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> list[DensityMatrix]:
    """Propagate rho0 and return one validated density matrix per instant.

    Hermitian re-symmetrization is applied after every accepted step; trace
    and positivity are not adjusted, so drift beyond the DensityMatrix
    tolerances raises instead of being masked.
    """
    if rho0.dim != model.dim:
        raise ValueError(f"initial state dim {rho0.dim} != model dim {model.dim}")
    raw = integrate_to_instants(
        rhs_function(model), rho0.mat, grid.times(), cfg, step_callback=_resymmetrize
    )
    return [DensityMatrix(Operator(m)) for m in raw]


def regression_correlator(
    model: LindbladModel,
    a: Operator,
    b: Operator,
    rho: DensityMatrix,
    taus: TimeGrid,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    """Two-time correlator <A(tau) B(0)> in a stationary state.

    The seed B rho is propagated with the same generator as the density
    matrix (it is generally non-Hermitian, so no re-symmetrization), and the
    correlator is tr(A * propagated seed) at each delay.
    """
    for op, name in ((a, "A"), (b, "B")):
        if op.dim != model.dim:
            raise ValueError(f"operator {name} dim {op.dim} != model dim {model.dim}")
    if rho.dim != model.dim:
        raise ValueError(f"state dim {rho.dim} != model dim {model.dim}")
    if taus.t0 < 0.0:
        raise ValueError(f"delays must be nonnegative, got t0 = {taus.t0}")
    defect = generator_defect(model, rho)
    if defect > STATIONARITY_TOL:
        raise ValueError(
            f"state is not stationary under the model (generator defect {defect:.3e} "
            f"> {STATIONARITY_TOL:g})"
        )
    seed = b.mat @ rho.mat
    instants = taus.times()
    if taus.t0 > 0.0:
        instants = np.concatenate(([0.0], instants))
        skip = 1
    else:
        skip = 0
    propagated = integrate_to_instants(rhs_function(model), seed, instants, cfg)
    a_mat = a.mat
    return np.array([np.trace(a_mat @ x) for x in propagated[skip:]], dtype=complex)
