import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from Optics.fock_core import (
    BasisLabel,
    Mode,
    TwoModeFockState,
    apply_block,
    beam_splitter_block,
    phase_shift_block,
)
from Optics.states import EtaParams, eta_state
from utils.errors import AliasingError, ContractViolation

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-10


class SignalNormalization(str, Enum):
    """How a harmonic amplitude is turned into a visibility."""
    PARITY = "parity"  # full-swing +/-1 signal, divide by 1
    MEAN = "mean"  # nonnegative probability signal, divide by its mean


@dataclass(frozen=True, eq=False)
class FringeScan:
    """Output statistics over a uniform phase grid.

    distributions[j, m] is P(m | phases[j]) with m the photon count in
    output port d. parity is the expectation of (-1)^m and extremal is
    P(0) + P(N).
    """
    n: int
    eta: float
    phases: np.ndarray
    distributions: np.ndarray
    parity: np.ndarray
    extremal: np.ndarray

    def __post_init__(self):
        for name in ("phases", "distributions", "parity", "extremal"):
            values = np.array(getattr(self, name), dtype=float)
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @property
    def samples(self) -> int:
        return int(self.phases.size)


@dataclass(frozen=True)
class VisibilityReport:
    frequency: int
    component_magnitude: float
    mean_level: float
    visibility: float
    sensitivity: float
    normalization: SignalNormalization
    raw_visibility: float
    minmax_contrast: float
    leakage: float


def _check_basis(s: TwoModeFockState, expected: BasisLabel):
    if s.basis_label is not expected:
        raise ContractViolation(f"Expected a state in the {expected.value} basis, got {s.basis_label.value}")


def inside_output_distribution(s_inside: TwoModeFockState, phi: float) -> np.ndarray:
    """Phase shift on arm b, then the output splitter; P(m) for m = 0..N."""
    _check_basis(s_inside, BasisLabel.INTERFEROMETER)
    shifted = apply_block(phase_shift_block(s_inside.total_n, phi, Mode.B), s_inside)
    return apply_block(beam_splitter_block(s_inside.total_n), shifted).probabilities


def mz_output_distribution(s_input: TwoModeFockState, phi: float) -> np.ndarray:
    _check_basis(s_input, BasisLabel.INPUT)
    inside = apply_block(beam_splitter_block(s_input.total_n), s_input)
    return inside_output_distribution(inside, phi)


def scan_inside_state(s_inside: TwoModeFockState, phases: Sequence[float]) -> np.ndarray:
    """P(m | phi) for every phase at once, shape (len(phases), N+1)."""
    _check_basis(s_inside, BasisLabel.INTERFEROMETER)
    phases = np.asarray(phases, dtype=float)
    m = np.arange(s_inside.total_n + 1)
    shifted = np.exp(1j * np.outer(phases, m)) * s_inside.amplitudes
    out = shifted @ beam_splitter_block(s_inside.total_n).matrix.T
    return np.abs(out) ** 2


def _signals(distributions: np.ndarray):
    total_n = distributions.shape[1] - 1
    signs = (-1.0) ** np.arange(total_n + 1)
    parity = distributions @ signs
    extremal = distributions[:, 0] + distributions[:, total_n] if total_n > 0 else distributions[:, 0]
    return parity, extremal


def minimum_samples(total_n: int) -> int:
    return 4 * total_n + 1


def scan_state(s_inside: TwoModeFockState, samples: int, eta: float = float("nan")) -> FringeScan:
    """Fringe scan of a state already inside the interferometer."""
    required = minimum_samples(s_inside.total_n)
    if samples < required:
        raise AliasingError(
            f"{samples} phase samples undersample N={s_inside.total_n}; need at least 4N+1 = {required}"
        )
    phases = 2.0 * np.pi * np.arange(samples) / samples
    distributions = scan_inside_state(s_inside, phases)
    row_error = float(np.max(np.abs(distributions.sum(axis=1) - 1.0)))
    if row_error > ROW_SUM_TOL:
        raise ContractViolation(
            f"Fringe rows for N={s_inside.total_n} deviate from unit sum by {row_error:.2e} (limit {ROW_SUM_TOL:.0e})"
        )
    parity, extremal = _signals(distributions)
    return FringeScan(
        n=s_inside.total_n,
        eta=eta,
        phases=phases,
        distributions=distributions,
        parity=parity,
        extremal=extremal,
    )


def fringe_scan(total_n: int, eta: float, samples: int) -> FringeScan:
    s_input = eta_state(EtaParams(n=total_n, eta=eta))
    inside = apply_block(beam_splitter_block(total_n), s_input)
    logger.info(f"Scanning N={total_n}, eta={eta} over {samples} phases")
    return scan_state(inside, samples, eta)


def harmonic_magnitudes(signal: Sequence[float]) -> np.ndarray:
    """Amplitude of every harmonic: |c_0| at index 0, 2|c_f| above.

    The Nyquist bin of an even-length signal has no mirror image and is
    left undoubled.
    """
    signal = np.asarray(signal, dtype=float)
    spectrum = np.abs(np.fft.rfft(signal)) / signal.size
    last = spectrum.size if signal.size % 2 else spectrum.size - 1
    spectrum[1:last] *= 2.0
    return spectrum


def minmax_contrast(signal: Sequence[float]) -> float:
    signal = np.asarray(signal, dtype=float)
    top, bottom = float(signal.max()), float(signal.min())
    if top + bottom == 0.0:
        return 0.0
    return (top - bottom) / (top + bottom)


def fourier_visibility(signal: Sequence[float], frequency: int,
                       normalization: SignalNormalization = SignalNormalization.PARITY) -> VisibilityReport:
    """Visibility of one harmonic of a signal sampled on a uniform phase grid.

    c_f = (1/L) sum_j signal_j e^{-i f phi_j}; the component magnitude is
    2|c_f|. Parity signals are reported as is, probability signals are
    divided by their mean c_0. leakage is the largest other harmonic
    above the mean.
    """
    signal = np.asarray(signal, dtype=float)
    samples = signal.size
    normalization = SignalNormalization(normalization)
    if frequency < 0:
        raise ContractViolation(f"Harmonic must be nonnegative, got {frequency}")
    if 2 * frequency >= samples:
        raise AliasingError(f"Harmonic {frequency} needs more than {2 * frequency} samples, got {samples}")

    magnitudes = harmonic_magnitudes(signal)
    mean_level = float(np.mean(signal))
    magnitude = float(magnitudes[frequency])
    others = np.delete(magnitudes[1:], frequency - 1) if frequency > 0 else magnitudes[1:]
    leakage = float(others.max()) if others.size else 0.0

    if normalization is SignalNormalization.PARITY:
        raw = magnitude
    else:
        raw = magnitude / abs(mean_level) if mean_level != 0.0 else 0.0
    if raw > 1.0 + 1e-9:
        logger.warning(f"Visibility {raw:.4f} at harmonic {frequency} exceeds 1; clipping")
    visibility = min(raw, 1.0)

    return VisibilityReport(
        frequency=frequency,
        component_magnitude=magnitude,
        mean_level=mean_level,
        visibility=visibility,
        sensitivity=visibility * frequency,
        normalization=normalization,
        raw_visibility=raw,
        minmax_contrast=minmax_contrast(signal),
        leakage=leakage,
    )


def phase_sensitivity(v: VisibilityReport) -> float:
    """Inverse phase uncertainty 1/dphi = V N."""
    if v.frequency < 1:
        raise ContractViolation(f"Phase sensitivity needs a harmonic >= 1, got {v.frequency}")
    return v.visibility * v.frequency


def standard_quantum_limit(total_n: int) -> float:
    return float(np.sqrt(total_n))


def beats_standard_quantum_limit(v: VisibilityReport) -> bool:
    return phase_sensitivity(v) > standard_quantum_limit(v.frequency)


def parity_visibility(scan: FringeScan, frequency: Optional[int] = None) -> VisibilityReport:
    return fourier_visibility(scan.parity, scan.n if frequency is None else frequency, SignalNormalization.PARITY)


def extremal_visibility(scan: FringeScan, frequency: Optional[int] = None) -> VisibilityReport:
    return fourier_visibility(scan.extremal, scan.n if frequency is None else frequency, SignalNormalization.MEAN)


def channel_visibilities(scan: FringeScan, frequency: Optional[int] = None) -> List[VisibilityReport]:
    """Harmonic report for every coincidence channel (N-m, m)."""
    frequency = scan.n if frequency is None else frequency
    return [
        fourier_visibility(scan.distributions[:, m], frequency, SignalNormalization.MEAN)
        for m in range(scan.n + 1)
    ]
