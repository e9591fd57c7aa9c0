import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import poisson

from Optics.fock_core import (
    LadderOp,
    TwoModeFockState,
    apply_block,
    beam_splitter_block,
    inner_product,
    ladder_chain,
)
from Optics.states import (
    EtaParams,
    InputFieldParams,
    eta_state,
    noon_input_basis,
    noon_interferometer,
    noon_phase,
    squeezed_amplitudes,
)
from utils.errors import ContractViolation, PhotonRangeError

logger = logging.getLogger(__name__)

# Search defaults
DEFAULT_ETA_BOUNDS = (1.0, 5.0)
DEFAULT_TOL = 1e-6
COARSE_STEP = 0.01

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

# Published optima: N -> (eta, fidelity)
TABLE1_REFERENCE: Dict[int, Tuple[float, float]] = {
    2: (2.00, 1.000),
    3: (3.00, 1.000),
    4: (2.31, 0.933),
    5: (2.48, 0.941),
    6: (2.36, 0.924),
    7: (2.36, 0.924),
    8: (2.32, 0.920),
    9: (2.30, 0.920),
    10: (2.28, 0.920),
    11: (2.26, 0.920),
    12: (2.24, 0.921),
    13: (2.22, 0.921),
    14: (2.21, 0.922),
    15: (2.19, 0.923),
    100: (2.02, 0.941),
}
ETA_REF_TOL = 0.05
FIDELITY_REF_TOL = 1e-3


@dataclass(frozen=True)
class OptimizationResult:
    n: int
    eta_star: float
    fidelity_star: float
    evaluations: int
    bracket: Tuple[float, float]


@dataclass(frozen=True)
class OverlapCurve:
    eta: float
    points: Tuple[Tuple[int, float], ...]

    def minimum(self) -> Tuple[int, float]:
        """(N, overlap) of the lowest point; the first one wins ties."""
        return min(self.points, key=lambda p: p[1])


@dataclass(frozen=True)
class CoherenceReport:
    n: int
    eta: float
    psi_n0: complex
    psi_0n: complex
    coherence: float
    half_fidelity: float
    noon_minus_overlap: float
    noon_phase: float


def fidelity(total_n: int, eta: float) -> float:
    """|<NOON|eta>|^2, both written in the input modes."""
    if total_n < 1:
        raise PhotonRangeError(f"Fidelity needs N >= 1, got {total_n}")
    overlap = inner_product(noon_input_basis(total_n), eta_state(EtaParams(n=total_n, eta=eta)))
    return min(abs(overlap) ** 2, 1.0)


def golden_section_maximize(f: Callable[[float], float], a: float, b: float,
                            tol: float = DEFAULT_TOL) -> Tuple[Tuple[float, float], int]:
    """
    Golden-section search for a maximum.

    Given f with a single local maximum in [a, b], returns a subinterval
    of width <= tol that contains it, and the number of calls to f.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return (a, b), 0

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    evaluations = 2

    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
        evaluations += 1

    if yc > yd:
        return (a, d), evaluations
    return (c, b), evaluations


def coarse_scan(total_n: int, lo: float, hi: float, step: float = COARSE_STEP) -> Tuple[np.ndarray, np.ndarray]:
    """Fidelity on the grid lo, lo+step, ..., hi."""
    count = int(round((hi - lo) / step)) + 1
    grid = np.linspace(lo, lo + (count - 1) * step, count)
    grid = grid[grid <= hi + 1e-12]
    values = np.array([fidelity(total_n, eta) for eta in grid])
    return grid, values


def grid_peak_is_contiguous(values: np.ndarray) -> bool:
    """True when the three best grid values sit on neighbouring points."""
    if values.size < 3:
        return True
    best = np.sort(np.argsort(values)[-3:])
    return int(best[-1] - best[0]) == 2


def grid_local_maxima(values: np.ndarray) -> List[int]:
    """Indices of grid points no lower than either neighbour."""
    padded = np.concatenate(([-np.inf], values, [-np.inf]))
    return [i for i in range(values.size) if padded[i + 1] >= padded[i] and padded[i + 1] >= padded[i + 2]]


def optimize_eta(total_n: int, lo: float = DEFAULT_ETA_BOUNDS[0], hi: float = DEFAULT_ETA_BOUNDS[1],
                 tol: float = DEFAULT_TOL) -> OptimizationResult:
    """Maximize fidelity(N, eta) over [lo, hi].

    A coarse grid picks the starting point; golden-section search then
    narrows [g - step, g + step] to width tol. If the three best grid
    points are not neighbours the fidelity may have several peaks, and
    every local maximum of the grid is refined instead.
    """
    if not 0.0 <= lo < hi:
        raise ContractViolation(f"Need 0 <= lo < hi, got lo={lo}, hi={hi}")
    if tol <= 0.0:
        raise ContractViolation(f"Tolerance must be positive, got {tol}")

    grid, values = coarse_scan(total_n, lo, hi)
    evaluations = grid.size
    if grid_peak_is_contiguous(values):
        starts = [int(np.argmax(values))]
    else:
        starts = grid_local_maxima(values)
        logger.warning(f"N={total_n}: best coarse points are not contiguous, refining {len(starts)} local maxima")

    def objective(eta: float) -> float:
        return fidelity(total_n, eta)

    best: Optional[OptimizationResult] = None
    for index in starts:
        start = float(grid[index])
        bracket, calls = golden_section_maximize(
            objective, max(lo, start - COARSE_STEP), min(hi, start + COARSE_STEP), tol
        )
        evaluations += calls + 1
        eta_star = 0.5 * (bracket[0] + bracket[1])
        candidate = OptimizationResult(
            n=total_n,
            eta_star=eta_star,
            fidelity_star=objective(eta_star),
            evaluations=0,
            bracket=bracket,
        )
        if best is None or candidate.fidelity_star > best.fidelity_star:
            best = candidate

    logger.info(f"N={total_n}: eta*={best.eta_star:.6f}, F*={best.fidelity_star:.6f} after {evaluations} evaluations")
    return OptimizationResult(
        n=best.n,
        eta_star=best.eta_star,
        fidelity_star=best.fidelity_star,
        evaluations=evaluations,
        bracket=best.bracket,
    )


def overlap_curve(eta: float, n_min: int, n_max: int) -> OverlapCurve:
    if not 1 <= n_min <= n_max:
        raise ContractViolation(f"Need 1 <= n_min <= n_max, got {n_min}..{n_max}")
    points = tuple((n, fidelity(n, eta)) for n in range(n_min, n_max + 1))
    return OverlapCurve(eta=eta, points=points)


def coherence_check(total_n: int, eta: float) -> CoherenceReport:
    """Inspect the eta state inside the interferometer.

    Only the |N;0> and |0;N> amplitudes can produce an N-th harmonic
    fringe. Their product is half the fidelity, and the state has no
    overlap with the NOON state of opposite phase.
    """
    if total_n < 1:
        raise PhotonRangeError(f"Coherence check needs N >= 1, got {total_n}")
    inside = apply_block(beam_splitter_block(total_n), eta_state(EtaParams(n=total_n, eta=eta)))
    psi_n0 = complex(inside.amplitudes[0])
    psi_0n = complex(inside.amplitudes[total_n])
    theta = noon_phase(total_n)
    minus = noon_interferometer(total_n, theta + np.pi)
    return CoherenceReport(
        n=total_n,
        eta=eta,
        psi_n0=psi_n0,
        psi_0n=psi_0n,
        coherence=abs(psi_n0 * np.conj(psi_0n)),
        half_fidelity=fidelity(total_n, eta) / 2.0,
        noon_minus_overlap=abs(inner_product(minus, inside)) ** 2,
        noon_phase=theta,
    )


def defining_relation_residual(total_n: int, eta: float, state: Optional[TwoModeFockState] = None) -> float:
    """Relative norm of a^dag b psi - (eta/N) a^dag a b^dag a psi.

    Defaults to the exact eta state. When both sides vanish the residual
    is 0; when only the left side does, the absolute norm of the right
    side is returned.
    """
    if total_n < 2:
        raise PhotonRangeError(f"Residual needs N >= 2, got {total_n}")
    psi = state if state is not None else eta_state(EtaParams(n=total_n, eta=eta))
    if psi.total_n != total_n:
        raise ContractViolation(f"State has N={psi.total_n}, expected {total_n}")
    lhs = ladder_chain(psi, LadderOp.A_DAG, LadderOp.B).amplitudes
    rhs = (eta / total_n) * ladder_chain(psi, LadderOp.A_DAG, LadderOp.A, LadderOp.B_DAG, LadderOp.A).amplitudes
    scale = np.linalg.norm(lhs)
    diff = np.linalg.norm(lhs - rhs)
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)


def perturbed_state(s: TwoModeFockState, index: int = 2, delta: float = 1e-3) -> TwoModeFockState:
    """Renormalized copy of s with delta added to one amplitude."""
    if not 0 <= index <= s.total_n:
        raise PhotonRangeError(f"Index {index} outside 0..{s.total_n}")
    amps = np.array(s.amplitudes)
    amps[index] += delta
    return TwoModeFockState.from_amplitudes(amps, s.basis_label)


def gaussian_overlap_limit(variance_ratio: float = 2.0) -> float:
    """Squared overlap 2 sqrt(r) / (1 + r) of centred Gaussian envelopes with variance ratio r."""
    if variance_ratio <= 0.0:
        raise ContractViolation(f"Variance ratio must be positive, got {variance_ratio}")
    return 2.0 * math.sqrt(variance_ratio) / (1.0 + variance_ratio)


def photon_number_distribution(f: InputFieldParams, max_n: Optional[int] = None) -> np.ndarray:
    """P(total photon number = n) for n = 0..max_n in the laser plus pair-source input.

    Poisson counts of the laser convolved with the even-only counts of the
    squeezed vacuum.
    """
    if max_n is None:
        max_n = f.truncation if f.truncation is not None else 64
    if max_n < 0:
        raise PhotonRangeError(f"max_n must be nonnegative, got {max_n}")
    n = np.arange(max_n + 1)
    laser = poisson.pmf(n, abs(f.alpha) ** 2)
    pairs = np.abs(squeezed_amplitudes(f.gamma, max_n)) ** 2 * math.sqrt(1.0 - abs(f.gamma) ** 2)
    return np.convolve(laser, pairs)[: max_n + 1]


def n_photon_probability(f: InputFieldParams, total_n: int) -> float:
    if total_n < 0:
        raise PhotonRangeError(f"Photon number must be nonnegative, got {total_n}")
    return float(photon_number_distribution(f, total_n)[total_n])


def table1_reference() -> Dict[int, Tuple[float, float]]:
    return dict(TABLE1_REFERENCE)


def compare_with_table1(result: OptimizationResult) -> Optional[Dict[str, object]]:
    """Reference values and agreement flag for N in the published table, else None."""
    reference = TABLE1_REFERENCE.get(result.n)
    if reference is None:
        return None
    eta_ref, fidelity_ref = reference
    agrees = (abs(result.eta_star - eta_ref) <= ETA_REF_TOL
              and abs(result.fidelity_star - fidelity_ref) <= FIDELITY_REF_TOL + 1e-9)
    if not agrees:
        logger.warning(
            f"N={result.n}: computed eta*={result.eta_star:.4f}, F*={result.fidelity_star:.4f} "
            f"vs published {eta_ref:.2f}, {fidelity_ref:.3f}"
        )
    return {"eta_ref": eta_ref, "fidelity_ref": fidelity_ref, "agrees": agrees}
