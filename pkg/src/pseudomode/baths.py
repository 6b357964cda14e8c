"""Reservoir spectral densities, their correlation functions, and rates.

Two models are in scope: a flat (white, memoryless) spectrum described only
by its constant weight f^2, and a Lorentzian line of integrated weight g^2,
center omega0 and full width gamma. The flat spectrum's delta correlation is
never sampled; it enters the code only as the Lindblad rate f^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Flat:
    """White spectrum: constant weight f2, equal to the Markovian decay rate."""

    f2: float

    def __post_init__(self):
        if self.f2 < 0.0:
            raise ValueError(f"flat spectral weight must be nonnegative, got {self.f2}")


@dataclass(frozen=True)
class Lorentzian:
    """Lorentzian line g^2 * gamma / ((omega - omega0)^2 + (gamma/2)^2)."""

    g: float
    omega0: float
    gamma: float

    def __post_init__(self):
        if self.g < 0.0:
            raise ValueError(f"coupling g must be nonnegative, got {self.g}")
        if self.gamma <= 0.0:
            raise ValueError(f"linewidth gamma must be positive, got {self.gamma}")

    @property
    def peak(self) -> float:
        """On-resonance spectral weight 4 g^2 / gamma."""
        return 4.0 * self.g**2 / self.gamma


SpectralDensity = Union[Flat, Lorentzian]


@dataclass(frozen=True)
class CorrelationSample:
    tau: float
    value: complex


def spectral_density_eval(sd: SpectralDensity, omega):
    """Coupling-weighted spectral density at omega (scalar or array)."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(sd, Flat):
        out = np.full_like(omega, sd.f2)
    elif isinstance(sd, Lorentzian):
        out = sd.g**2 * sd.gamma / ((omega - sd.omega0) ** 2 + (sd.gamma / 2.0) ** 2)
    else:
        raise TypeError(f"unknown spectral density {type(sd).__name__}")
    return float(out) if out.ndim == 0 else out


def correlation_function(sd: SpectralDensity, tau):
    """Reservoir field correlation g^2 exp(-i omega0 tau - gamma |tau| / 2).

    Only defined for the Lorentzian model; the flat spectrum's correlation
    is a delta function and is represented by markovian_rate instead.
    """
    if isinstance(sd, Flat):
        raise ValueError(
            "flat spectrum has a delta correlation; use markovian_rate for its Lindblad rate"
        )
    if not isinstance(sd, Lorentzian):
        raise TypeError(f"unknown spectral density {type(sd).__name__}")
    tau = np.asarray(tau, dtype=float)
    out = sd.g**2 * np.exp(-1j * sd.omega0 * tau - 0.5 * sd.gamma * np.abs(tau))
    return complex(out) if out.ndim == 0 else out


def correlation_on_grid(sd: Lorentzian, taus) -> list[CorrelationSample]:
    values = correlation_function(sd, np.asarray(taus, dtype=float))
    return [CorrelationSample(float(t), complex(v)) for t, v in zip(np.atleast_1d(taus), np.atleast_1d(values))]


def markovian_rate(sd: SpectralDensity, omega_system: float) -> float:
    """Effective Lindblad decay rate: the spectral weight at the system frequency."""
    if isinstance(sd, Flat):
        return sd.f2
    return float(spectral_density_eval(sd, omega_system))


def verify_fourier_pair(
    sd: Lorentzian,
    tau_grid,
    omega_half_width: float | None = None,
    n_quad: int = 20001,
) -> float:
    """Max residual between the quadrature Fourier transform and the closed form.

    The transform integral(J(omega) exp(-i omega tau)) d omega / 2 pi is
    evaluated by composite trapezoid on a uniform grid spanning
    omega0 +/- omega_half_width (default 40 gamma). The caller must pick the
    window wide enough that the truncated Lorentzian tails, of order
    g^2 gamma / (pi * W) at tau = 0, stay below the residual they target.
    """
    if not isinstance(sd, Lorentzian):
        raise TypeError("Fourier-pair check applies to the Lorentzian model only")
    if omega_half_width is None:
        omega_half_width = 40.0 * sd.gamma
    taus = np.asarray(tau_grid, dtype=float).reshape(-1)
    omegas = np.linspace(sd.omega0 - omega_half_width, sd.omega0 + omega_half_width, n_quad)
    weights = spectral_density_eval(sd, omegas)
    phases = np.exp(-1j * np.outer(taus, omegas))
    transformed = np.trapezoid(phases * weights, omegas, axis=1) / (2.0 * np.pi)
    return float(np.max(np.abs(transformed - correlation_function(sd, taus))))
