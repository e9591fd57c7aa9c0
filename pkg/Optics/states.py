import logging
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from Optics.fock_core import (
    BasisLabel,
    Mode,
    TwoModeFockState,
    apply_block,
    beam_splitter_block,
    combinatorics_for,
    phase_shift_block,
)
from utils.errors import ContractViolation, PhotonRangeError, UnsupportedInputError

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-12


class EtaParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0, description="Total photon number N")
    eta: float = Field(..., ge=0.0, description="Mixing parameter eta = N*gamma/alpha^2 (real, nonnegative)")


class InputFieldParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: complex = Field(..., description="Coherent amplitude of the laser mode a")
    gamma: complex = Field(..., description="Squeezing parameter of the downconverted mode b, |gamma| < 1")
    truncation: Optional[int] = Field(
        default=None, ge=0, description="Max photon number kept per mode; default max(4N, 64)"
    )

    @field_validator("gamma")
    @classmethod
    def _normalizable(cls, value: complex) -> complex:
        if abs(value) >= 1.0:
            raise ValueError(f"|gamma| must be below 1 for a normalizable squeezed vacuum, got {abs(value):.4g}")
        return value


def _pair_state(total_n: int, coeffs: np.ndarray) -> TwoModeFockState:
    """Place coefficients c_k on the even indices 2k and normalize."""
    amps = np.zeros(total_n + 1, dtype=complex)
    amps[0::2] = coeffs
    return TwoModeFockState.from_amplitudes(amps, BasisLabel.INPUT)


def eta_state(p: EtaParams) -> TwoModeFockState:
    """Normalized N-photon component of coherent light mixed with pairs.

    Coefficients follow the ratio c_{k+1}/c_k, accumulated in log space and
    rescaled by the running maximum before exponentiation, so N in the
    tens of thousands neither overflows nor underflows the peak.
    """
    n, eta = p.n, p.eta
    if eta == 0.0 or n < 2:
        return TwoModeFockState.basis_ket(n, 0)
    k = np.arange(n // 2, dtype=float)
    log_ratio = (
        np.log(eta / (2.0 * n))
        + 0.5 * (np.log(2 * k + 1) + np.log(2 * k + 2))
        + 0.5 * (np.log(n - 2 * k) + np.log(n - 2 * k - 1))
        - np.log(k + 1)
    )
    log_c = np.concatenate(([0.0], np.cumsum(log_ratio)))
    return _pair_state(n, np.exp(log_c - log_c.max()))


def eta_recurrence_ratio(total_n: int, eta: float, k: int) -> Tuple[float, float]:
    """(exact, large-N) values of c_{k+1}/c_k; the large-N form is eta*(1 - 2k/N)."""
    if k < 0 or 2 * (k + 1) > total_n:
        raise PhotonRangeError(f"Need 0 <= 2(k+1) <= N, got k={k}, N={total_n}")
    exact = (
        eta / (2.0 * total_n)
        * np.sqrt((2 * k + 1) * (2 * k + 2))
        * np.sqrt((total_n - 2 * k) * (total_n - 2 * k - 1))
        / (k + 1)
    )
    approx = eta * (1.0 - 2.0 * k / total_n)
    return float(exact), float(approx)


@lru_cache(maxsize=1024)
def noon_input_basis(total_n: int) -> TwoModeFockState:
    """Path-entangled state written in the input modes: sqrt(C(N,2k)) / 2^((N-1)/2) at index 2k."""
    if total_n < 1:
        raise PhotonRangeError(f"NOON states need N >= 1, got {total_n}")
    k = np.arange(total_n // 2 + 1)
    log_d = 0.5 * combinatorics_for(total_n).log_binomial(total_n, 2 * k) - 0.5 * (total_n - 1) * np.log(2.0)
    return _pair_state(total_n, np.exp(log_d))


def noon_interferometer(total_n: int, relative_phase: float = 0.0) -> TwoModeFockState:
    """(|N;0> + e^{i phase}|0;N>)/sqrt(2) in the interferometer arms."""
    if total_n < 1:
        raise PhotonRangeError(f"NOON states need N >= 1, got {total_n}")
    amps = np.zeros(total_n + 1, dtype=complex)
    amps[0] = 1.0 / np.sqrt(2.0)
    amps[total_n] += np.exp(1j * relative_phase) / np.sqrt(2.0)
    return TwoModeFockState(total_n=total_n, amplitudes=amps, basis_label=BasisLabel.INTERFEROMETER)


@lru_cache(maxsize=512)
def noon_phase(total_n: int) -> float:
    """Relative phase of the NOON state the default splitter makes from noon_input_basis(N).

    Pins the splitter convention against the input-basis expansion; it is
    0 for even N and pi for odd N.
    """
    inside = apply_block(beam_splitter_block(total_n), noon_input_basis(total_n))
    amps = inside.amplitudes
    theta = float(np.angle(amps[total_n] / amps[0]))
    if theta < -1e-12:
        theta += 2 * np.pi
    return max(theta, 0.0)


def _require_even(total_n: int):
    if total_n < 2:
        raise PhotonRangeError(f"Gaussian approximants need N >= 2, got {total_n}")
    if total_n % 2:
        raise UnsupportedInputError(f"Gaussian approximants are centred on N/2 and need even N, got {total_n}")


def gaussian_centre(total_n: int, eta: float) -> float:
    """Peak position in units of 2k: N(1 - 1/eta)."""
    if eta <= 0.0:
        raise UnsupportedInputError(f"Gaussian approximation needs eta > 0, got {eta}")
    return total_n * (1.0 - 1.0 / eta)


def _gaussian_pairs(total_n: int, centre: float, denominator: float) -> TwoModeFockState:
    two_k = 2.0 * np.arange(total_n // 2 + 1)
    log_env = -((two_k - centre) ** 2) / denominator
    return _pair_state(total_n, np.exp(log_env - log_env.max()))


def gaussian_eta_approx(total_n: int, eta: float = 2.0) -> TwoModeFockState:
    """Large-N Gaussian form of the eta state.

    Envelope exp(-eta (2k - N(1-1/eta))^2 / (4N)); at eta = 2 this is
    exp(-(2k - N/2)^2 / (2N)).
    """
    _require_even(total_n)
    centre = gaussian_centre(total_n, eta)
    return _gaussian_pairs(total_n, centre, 4.0 * total_n / eta)


def gaussian_noon_approx(total_n: int) -> TwoModeFockState:
    """Large-N Gaussian form of the input-basis NOON state, envelope exp(-(2k - N/2)^2 / N)."""
    _require_even(total_n)
    return _gaussian_pairs(total_n, total_n / 2.0, float(total_n))


def coherent_amplitudes(alpha: complex, truncation: int) -> np.ndarray:
    """Unnormalized |alpha> amplitudes alpha^n/sqrt(n!) for n = 0..truncation."""
    steps = alpha / np.sqrt(np.arange(1, truncation + 1))
    return np.concatenate(([1.0 + 0j], np.cumprod(steps)))


def squeezed_amplitudes(gamma: complex, truncation: int) -> np.ndarray:
    """Unnormalized squeezed-vacuum amplitudes for n = 0..truncation, zero at odd n."""
    # b|gamma> = gamma b^dagger |gamma>  gives  s_{k+1} = gamma sqrt(2k+1)/sqrt(2k+2) s_k
    k = np.arange(truncation // 2)
    steps = gamma * np.sqrt(2 * k + 1) / np.sqrt(2 * k + 2)
    pairs = np.concatenate(([1.0 + 0j], np.cumprod(steps)))
    amps = np.zeros(truncation + 1, dtype=complex)
    amps[0::2] = pairs
    return amps


def _tail_fraction(alpha: complex, gamma: complex, coherent: np.ndarray, squeezed: np.ndarray) -> float:
    kept_coherent = float(np.sum(np.abs(coherent) ** 2)) * np.exp(-abs(alpha) ** 2)
    kept_squeezed = float(np.sum(np.abs(squeezed) ** 2)) * np.sqrt(1.0 - abs(gamma) ** 2)
    return max(1.0 - kept_coherent * kept_squeezed, 0.0)


def project_total_n(f: InputFieldParams, total_n: int) -> TwoModeFockState:
    """N-photon component of the truncated |alpha> (x) |gamma> product state.

    Built from the single-mode amplitude sequences only, so it is an
    independent check on eta_state.
    """
    if total_n < 0:
        raise PhotonRangeError(f"Photon number must be nonnegative, got {total_n}")
    truncation = f.truncation if f.truncation is not None else max(4 * total_n, 64)
    if truncation < total_n:
        raise ContractViolation(f"Truncation {truncation} is below the requested N={total_n}")

    coherent = coherent_amplitudes(f.alpha, truncation)
    squeezed = squeezed_amplitudes(f.gamma, truncation)
    tail = _tail_fraction(f.alpha, f.gamma, coherent, squeezed)
    if tail > TAIL_TOL:
        logger.warning(f"Truncation {truncation} drops {tail:.2e} of the input norm")

    m = np.arange(total_n + 1)
    amps = coherent[total_n - m] * squeezed[m]
    if not np.any(amps):
        logger.info(f"Input has no {total_n}-photon component (alpha={f.alpha}, gamma={f.gamma})")
        return TwoModeFockState.null(total_n, BasisLabel.INPUT)
    return TwoModeFockState.from_amplitudes(amps, BasisLabel.INPUT)


def eta_of_fields(f: InputFieldParams, total_n: int) -> complex:
    """eta = N gamma / alpha^2 for the given input fields."""
    if f.alpha == 0:
        raise UnsupportedInputError("eta is undefined without laser light (alpha = 0)")
    return total_n * f.gamma / f.alpha ** 2


def field_params_for_eta(total_n: int, eta: float, gamma: float,
                         truncation: Optional[int] = None) -> InputFieldParams:
    """Laser amplitude alpha = sqrt(N gamma / eta) that realizes eta for a fixed pair amplitude gamma."""
    if eta <= 0.0:
        raise UnsupportedInputError(f"A finite laser amplitude needs eta > 0, got {eta}")
    if not 0.0 < gamma < 1.0:
        raise UnsupportedInputError(f"gamma must lie in (0, 1), got {gamma}")
    alpha = np.sqrt(total_n * gamma / eta)
    return InputFieldParams(alpha=complex(alpha), gamma=complex(gamma), truncation=truncation)


def align_pair_phase(s: TwoModeFockState, f: InputFieldParams) -> TwoModeFockState:
    """Remove the phase arg(gamma/alpha^2) carried by each photon pair.

    A complex ratio gamma/alpha^2 = |.| e^{i theta} multiplies index m by
    e^{i theta m/2}; a mode-b phase shift of -theta/2 undoes it, leaving
    the real-eta state.
    """
    theta = float(np.angle(f.gamma / f.alpha ** 2))
    return apply_block(phase_shift_block(s.total_n, -theta / 2.0, Mode.B), s)
