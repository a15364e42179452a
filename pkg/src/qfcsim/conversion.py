"""Two-mode frequency conversion on a truncated Fock space.

For a fixed classical pump, sum/difference-frequency mixing couples the
signal mode and the converted mode exactly like a beamsplitter: a photon
stays in its band with probability cos^2(theta) and hops to the other band
with probability sin^2(theta), where theta is the product of coupling
strength and interaction time.  A converted photon picks up the conjugate
of the pump phase.

This module also carries the small pump-side models that ride along with
the interaction: the pump-power efficiency law, its curve fit, pump phase
diffusion, and pump-induced noise photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConversionParams:
    """Mixing angle, pump phase, and per-mode Fock cutoff.

    ``phi`` is stored reduced to [0, 2*pi).  ``n_max`` is the highest photon
    number kept per mode, so matrices act on a (n_max+1)**2 dimensional space.
    """

    theta: float
    phi: float = 0.0
    n_max: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("theta and phi must be finite")
        if self.theta < 0.0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")
        object.__setattr__(self, "phi", self.phi % TWO_PI)


@dataclass(frozen=True)
class TwoModeUnitary:
    """Unitary on the signal (x) converted two-mode Fock space.

    Basis ordering is row-major in (n_signal, n_converted):
    index = n_signal * (n_max + 1) + n_converted.
    """

    n_max: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return (self.n_max + 1) ** 2

    def index(self, n_signal: int, n_converted: int) -> int:
        if not (0 <= n_signal <= self.n_max and 0 <= n_converted <= self.n_max):
            raise ValueError("photon number outside truncation")
        return n_signal * (self.n_max + 1) + n_converted


def _lowering(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)


def build_conversion_unitary(params: ConversionParams) -> TwoModeUnitary:
    """Exponentiate the two-mode mixing generator at the given angle and phase.

    The generator theta * (e^{-i phi} ac+ as - e^{i phi} as+ ac) is
    anti-Hermitian, so the result is unitary up to floating point error.
    Photon number is conserved; the matrix is block diagonal over total n.
    """
    dim = params.n_max + 1
    low = _lowering(dim)
    eye = np.eye(dim, dtype=complex)
    a_sig = np.kron(low, eye)
    a_conv = np.kron(eye, low)
    gen = params.theta * (
        np.exp(-1j * params.phi) * (a_conv.conj().T @ a_sig)
        - np.exp(1j * params.phi) * (a_sig.conj().T @ a_conv)
    )
    return TwoModeUnitary(params.n_max, expm(gen))


def apply_conversion(rho: np.ndarray, unitary: TwoModeUnitary) -> np.ndarray:
    """Conjugate a two-mode density matrix by the conversion unitary."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (unitary.dim, unitary.dim):
        raise ValueError(
            f"state has shape {rho.shape}, unitary expects {(unitary.dim, unitary.dim)}"
        )
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise ValueError("input state must have unit trace")
    u = unitary.matrix
    return u @ rho @ u.conj().T


@dataclass(frozen=True)
class EfficiencyModel:
    """Pump-power law for external conversion efficiency.

    efficiency(P) = peak * sin^2(sqrt(coeff * P)).  ``coeff`` carries inverse
    power units selected by ``coeff_unit`` ("per_W" or "per_mW").
    """

    peak: float
    coeff: float
    coeff_unit: str = "per_W"

    def __post_init__(self):
        if not 0.0 <= self.peak <= 1.0:
            raise ValueError(f"peak efficiency must lie in [0, 1], got {self.peak}")
        if not (math.isfinite(self.coeff) and self.coeff > 0.0):
            raise ValueError(f"coeff must be positive and finite, got {self.coeff}")
        if self.coeff_unit not in ("per_W", "per_mW"):
            raise ValueError(f"unknown coeff_unit {self.coeff_unit!r}")

    @property
    def coeff_per_watt(self) -> float:
        return self.coeff * (1000.0 if self.coeff_unit == "per_mW" else 1.0)

    @property
    def peak_power_w(self) -> float:
        """Pump power of the first efficiency maximum."""
        return (math.pi / 2.0) ** 2 / self.coeff_per_watt


def conversion_efficiency(pump_power_w: float, model: EfficiencyModel) -> float:
    """External conversion efficiency at the given pump power (watts)."""
    if pump_power_w < 0.0 or not math.isfinite(pump_power_w):
        raise ValueError(f"pump power must be >= 0, got {pump_power_w}")
    return model.peak * math.sin(math.sqrt(model.coeff_per_watt * pump_power_w)) ** 2


@dataclass(frozen=True)
class EfficiencyFit:
    """Result of fitting the pump-power law to sampled (power, efficiency) data.

    ``residual`` is the sum of squared residuals at the optimum.  When every
    sampled efficiency is zero the curvature coefficient drops out of the
    model, so ``coeff`` is NaN and ``coeff_identifiable`` is False.
    """

    peak: float
    coeff: float
    residual: float
    coeff_identifiable: bool = True
    converged: bool = True

    def model(self, coeff_unit: str = "per_W") -> EfficiencyModel:
        if not self.coeff_identifiable:
            raise ValueError("coefficient was not identifiable from the data")
        return EfficiencyModel(min(max(self.peak, 0.0), 1.0), self.coeff, coeff_unit)


def fit_efficiency_curve(samples, max_iter: int = 400) -> EfficiencyFit:
    """Least-squares fit of peak * sin^2(sqrt(coeff * P)) to (P, eta) samples.

    Damped Gauss-Newton (scipy trust-region reflective) with a multi-start
    grid over the curvature coefficient, since the loss is multimodal in
    coeff.  Powers are interpreted in the unit the caller fitted in; the
    returned coeff is the inverse of that unit.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be pairs of (power, efficiency)")
    powers, effs = arr[:, 0], arr[:, 1]
    if np.any(powers < 0.0):
        raise ValueError("powers must be >= 0")
    if len(np.unique(powers)) < 3:
        raise ValueError("need at least three distinct powers to fit")

    if np.max(np.abs(effs)) < 1e-14:
        return EfficiencyFit(0.0, math.nan, 0.0, coeff_identifiable=False)

    def residuals(theta):
        peak, coeff = theta
        return peak * np.sin(np.sqrt(coeff * powers)) ** 2 - effs

    # Starting guess: the argmax of the data sits near the quarter period.
    p_top = powers[int(np.argmax(effs))]
    coeff_guess = (math.pi / 2.0) ** 2 / p_top if p_top > 0 else 1.0
    peak_guess = float(np.max(effs))

    best = None
    for factor in (1.0, 0.25, 4.0, 0.05, 20.0):
        try:
            sol = least_squares(
                residuals,
                x0=[peak_guess, coeff_guess * factor],
                bounds=([0.0, 1e-12], [2.0, np.inf]),
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                max_nfev=max_iter,
            )
        except Exception:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise RuntimeError("efficiency fit did not converge from any start")
    peak, coeff = best.x
    return EfficiencyFit(
        peak=float(peak),
        coeff=float(coeff),
        residual=float(2.0 * best.cost),
        coeff_identifiable=True,
        converged=bool(best.status > 0),
    )


@dataclass(frozen=True)
class NoiseModel:
    """Pump-side imperfections.

    noise_coeff:    mean pump-induced noise photons per pulse per watt
                    (broadband scattering into the converted band).
    pump_linewidth: FWHM-style linewidth of the pump in Hz; phase diffusion
                    washes out interference between paths separated in time.
    delay:          the time separation those paths see, in seconds.
    """

    noise_coeff: float = 0.0
    pump_linewidth: float = 0.0
    delay: float = 0.0

    def __post_init__(self):
        if self.noise_coeff < 0.0:
            raise ValueError("noise_coeff must be >= 0")
        if self.pump_linewidth < 0.0:
            raise ValueError("pump_linewidth must be >= 0 (0 = monochromatic)")
        if self.delay < 0.0:
            raise ValueError("delay must be >= 0")


def pump_dephasing_factor(noise: NoiseModel) -> float:
    """Coherence multiplier exp(-2 pi linewidth delay) between delayed paths.

    Equals 1 for a monochromatic pump and 1/e when the delay matches the
    pump coherence time 1/(2 pi linewidth).
    """
    return math.exp(-TWO_PI * noise.pump_linewidth * noise.delay)


def noise_mean_photons(pump_power_w: float, noise_coeff: float) -> float:
    """Mean noise photons per pulse at the given pump power (linear law)."""
    if pump_power_w < 0.0:
        raise ValueError("pump power must be >= 0")
    if noise_coeff < 0.0:
        raise ValueError("noise_coeff must be >= 0")
    return noise_coeff * pump_power_w
