"""Lorentzian reservoir replaced by one damped ancilla mode.

The system couples excitation-exchange style to a single oscillator at the
line center, the oscillator is damped at the linewidth, and tracing the
oscillator out returns the reduced system state. The ancilla damping rate is
hard-wired to the linewidth: that identification is exactly what makes the
ancilla's vacuum correlation function match the reservoir's, so it is not a
tunable parameter.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DensityMatrix,
    HilbertFactorization,
    Operator,
    annihilation,
    hermiticity_defect,
    identity,
    kron,
    partial_trace,
    trace_distance,
)
from .baths import Lorentzian
from .dynamics import LindbladModel, TimeGrid, evolve
from .integrators import IntegratorConfig

TOP_LEVEL_POPULATION_TOL = 1e-6
_TRUNCATION_LADDER = (2, 4, 8, 16, 32, 64)


class TruncationError(RuntimeError):
    """Doubling the ancilla Fock space did not converge within the ladder."""


class FockTruncationWarning(UserWarning):
    """The top ancilla Fock level acquired non-negligible population."""


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """System dimension, self-Hamiltonian (detuning terms), coupling operator.

    H_S lives in the frame rotating at the bath center frequency, so it is
    zero on resonance and carries only detuning contributions otherwise.
    """

    d_S: int
    H_S: Operator
    V: Operator

    def __post_init__(self):
        if self.H_S.dim != self.d_S or self.V.dim != self.d_S:
            raise ValueError(
                f"system operators must have dim {self.d_S}, "
                f"got H_S {self.H_S.dim}, V {self.V.dim}"
            )
        defect = hermiticity_defect(self.H_S)
        if defect > 1e-12:
            raise ValueError(f"H_S not Hermitian: defect {defect:.3e}")


def tls_system(detuning: float = 0.0) -> SystemSpec:
    """Two-level system with lowering coupling operator (index 1 = excited)."""
    h = np.diag([0.0, float(detuning)]).astype(complex)
    return SystemSpec(d_S=2, H_S=Operator(h), V=annihilation(2))


def oscillator_system(d_S: int, detuning: float = 0.0) -> SystemSpec:
    """Truncated harmonic system with ladder coupling operator."""
    h = float(detuning) * np.diag(np.arange(d_S, dtype=float)).astype(complex)
    return SystemSpec(d_S=d_S, H_S=Operator(h), V=annihilation(d_S))


@dataclass(frozen=True, eq=False)
class EmbeddingSpec:
    system: SystemSpec
    bath: Lorentzian
    d_A: int

    def __post_init__(self):
        if self.d_A < 2:
            raise ValueError(f"ancilla truncation must be >= 2, got {self.d_A}")


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    model: LindbladModel
    factorization: HilbertFactorization
    rho0: DensityMatrix


def build_embedding(spec: EmbeddingSpec, rho_S0: DensityMatrix) -> EmbeddingResult:
    """Composite system + ancilla model with the ancilla starting in vacuum."""
    sys = spec.system
    if rho_S0.dim != sys.d_S:
        raise ValueError(f"initial state dim {rho_S0.dim} != system dim {sys.d_S}")
    d_A = spec.d_A
    a = annihilation(d_A)
    one_s = identity(sys.d_S)
    one_a = identity(d_A)
    g = spec.bath.g
    h = kron(sys.H_S, one_a) + g * (kron(sys.V.dagger(), a) + kron(sys.V, a.dagger()))
    model = LindbladModel(
        dim=sys.d_S * d_A,
        H=h,
        jumps=((spec.bath.gamma, kron(one_s, a)),),
    )
    vac = np.zeros((d_A, d_A), dtype=complex)
    vac[0, 0] = 1.0
    rho0 = DensityMatrix(Operator(np.kron(rho_S0.mat, vac)))
    return EmbeddingResult(
        model=model,
        factorization=HilbertFactorization((sys.d_S, d_A)),
        rho0=rho0,
    )


def _top_level_population(rho_sa: np.ndarray, d_S: int, d_A: int) -> float:
    idx = np.arange(d_S) * d_A + (d_A - 1)
    return float(np.real(np.sum(rho_sa[idx, idx])))


def simulate_lorentzian(
    spec: EmbeddingSpec,
    rho_S0: DensityMatrix,
    grid: TimeGrid,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> list[DensityMatrix]:
    """Reduced system states at each grid instant for a Lorentzian reservoir.

    Warns with FockTruncationWarning if the top ancilla Fock level ever
    carries more than 1e-6 population, signalling possible truncation leakage.
    """
    emb = build_embedding(spec, rho_S0)
    composite = evolve(emb.model, emb.rho0, grid, cfg)
    d_S, d_A = emb.factorization.dims
    top = max(_top_level_population(st.mat, d_S, d_A) for st in composite)
    if top > TOP_LEVEL_POPULATION_TOL:
        warnings.warn(
            f"top ancilla Fock level reached population {top:.3e} "
            f"(> {TOP_LEVEL_POPULATION_TOL:g}); consider a larger d_A",
            FockTruncationWarning,
            stacklevel=2,
        )
    return [partial_trace(st, emb.factorization, keep=0) for st in composite]


def choose_truncation(
    system: SystemSpec,
    bath: Lorentzian,
    rho_S0: DensityMatrix,
    grid: TimeGrid,
    cfg: IntegratorConfig = IntegratorConfig(),
    tol: float = 1e-7,
) -> int:
    """Smallest d_A in the doubling ladder whose curve agrees with 2 d_A.

    Agreement is max-over-time trace distance below tol. Raises
    TruncationError if even d_A = 64 has not converged.
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    def reduced_curve(d_A: int) -> list[DensityMatrix]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FockTruncationWarning)
            return simulate_lorentzian(EmbeddingSpec(system, bath, d_A), rho_S0, grid, cfg)

    prev = reduced_curve(_TRUNCATION_LADDER[0])
    for d_A in _TRUNCATION_LADDER:
        doubled = reduced_curve(2 * d_A)
        dist = max(trace_distance(r, s) for r, s in zip(prev, doubled))
        if dist < tol:
            return d_A
        prev = doubled
    raise TruncationError(
        f"ancilla truncation did not converge below {tol:g} by d_A = {_TRUNCATION_LADDER[-1]}"
    )
