import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy.linalg import expm

from utils.errors import ContractViolation, PhotonRangeError

logger = logging.getLogger(__name__)

# Constants
DEFAULT_MAX_PHOTONS = 4096
NORM_TOL = 1e-12
FIFTY_FIFTY = np.pi / 4


class BasisLabel(str, Enum):
    """Which physical pair of modes the amplitude indices refer to."""
    INPUT = "input"
    INTERFEROMETER = "interferometer"
    OUTPUT = "output"

    def after_beam_splitter(self) -> "BasisLabel":
        if self is BasisLabel.INPUT:
            return BasisLabel.INTERFEROMETER
        if self is BasisLabel.INTERFEROMETER:
            return BasisLabel.OUTPUT
        raise ContractViolation("No beam splitter follows the output ports")


class Mode(str, Enum):
    A = "a"
    B = "b"


class LadderOp(str, Enum):
    A = "a"
    A_DAG = "a_dag"
    B = "b"
    B_DAG = "b_dag"


class BlockKind(str, Enum):
    BEAM_SPLITTER = "beam_splitter"
    PHASE_SHIFT = "phase_shift"


def _read_only(values) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TwoModeFockState:
    """N-photon two-mode state.

    Index m counts the photons in mode b, so amplitudes[m] belongs to the
    ket |N-m; m>. States flagged ``is_null`` are the zero vector returned
    when an operation annihilates everything (e.g. lowering the vacuum).
    """
    total_n: int
    amplitudes: np.ndarray
    basis_label: BasisLabel = BasisLabel.INPUT
    normalized: bool = True
    is_null: bool = False

    def __post_init__(self):
        amplitudes = _read_only(self.amplitudes)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "basis_label", BasisLabel(self.basis_label))
        if self.total_n < 0:
            raise PhotonRangeError(f"total_n must be nonnegative, got {self.total_n}")
        if amplitudes.ndim != 1 or amplitudes.size != self.total_n + 1:
            raise ContractViolation(
                f"Expected {self.total_n + 1} amplitudes for N={self.total_n}, got shape {amplitudes.shape}"
            )
        if self.normalized:
            defect = abs(float(np.vdot(amplitudes, amplitudes).real) - 1.0)
            if defect > NORM_TOL:
                raise ContractViolation(f"State marked normalized has norm defect {defect:.3e}")

    @classmethod
    def from_amplitudes(cls, amplitudes, basis_label: BasisLabel = BasisLabel.INPUT) -> "TwoModeFockState":
        """Normalize an arbitrary nonzero amplitude vector into a state."""
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise ContractViolation("Cannot normalize the zero vector")
        return cls(total_n=amps.size - 1, amplitudes=amps / norm, basis_label=basis_label)

    @classmethod
    def basis_ket(cls, total_n: int, m: int, basis_label: BasisLabel = BasisLabel.INPUT) -> "TwoModeFockState":
        """The number state |N-m; m>."""
        if not 0 <= m <= total_n:
            raise PhotonRangeError(f"Index m={m} outside 0..{total_n}")
        amps = np.zeros(total_n + 1, dtype=complex)
        amps[m] = 1.0
        return cls(total_n=total_n, amplitudes=amps, basis_label=basis_label)

    @classmethod
    def null(cls, total_n: int, basis_label: BasisLabel = BasisLabel.INPUT) -> "TwoModeFockState":
        return cls(
            total_n=total_n,
            amplitudes=np.zeros(total_n + 1, dtype=complex),
            basis_label=basis_label,
            normalized=False,
            is_null=True,
        )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def photon_counts(self) -> Tuple[np.ndarray, np.ndarray]:
        """(n_a, n_b) for every index."""
        n_b = np.arange(self.total_n + 1)
        return self.total_n - n_b, n_b


@dataclass(frozen=True, eq=False)
class UnitaryBlock:
    """Dense unitary acting on the fixed-N subspace."""
    total_n: int
    matrix: np.ndarray
    kind: BlockKind

    def __post_init__(self):
        matrix = _read_only(self.matrix)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "kind", BlockKind(self.kind))
        dim = self.total_n + 1
        if matrix.shape != (dim, dim):
            raise ContractViolation(f"Block for N={self.total_n} must be {dim}x{dim}, got {matrix.shape}")
        if self.kind is BlockKind.PHASE_SHIFT and np.count_nonzero(matrix - np.diag(np.diag(matrix))):
            raise ContractViolation("Phase-shift blocks must be diagonal")

    def unitarity_defect(self) -> float:
        """max |U^dagger U - I|."""
        product = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(product - np.eye(self.total_n + 1))))


class LogCombinatorics:
    """Table of ln(n!) for n = 0..max_n, built once by cumulative summation."""

    def __init__(self, max_n: int = DEFAULT_MAX_PHOTONS):
        if max_n < 0:
            raise PhotonRangeError(f"max_n must be nonnegative, got {max_n}")
        self.max_n = max_n
        logs = np.log(np.arange(1, max_n + 1, dtype=float))
        table = np.concatenate(([0.0], np.cumsum(logs)))
        table.setflags(write=False)
        self._table = table

    def _check(self, n) -> np.ndarray:
        n = np.asarray(n)
        if np.any(n < 0) or np.any(n > self.max_n):
            raise PhotonRangeError(f"log_factorial argument outside 0..{self.max_n}: {n}")
        return n

    def log_factorial(self, n: int) -> float:
        return float(self._table[int(self._check(n))])

    def log_factorials(self, n) -> np.ndarray:
        """Vectorized ln(n!) for an integer array."""
        return self._table[self._check(n).astype(int)]

    def log_binomial(self, n, k) -> np.ndarray:
        n = np.asarray(n, dtype=int)
        k = np.asarray(k, dtype=int)
        if np.any(k < 0) or np.any(k > n):
            raise PhotonRangeError(f"Binomial index out of range: n={n}, k={k}")
        return self.log_factorials(n) - self.log_factorials(k) - self.log_factorials(n - k)


_DEFAULT_COMBINATORICS = LogCombinatorics()


def log_factorial(n: int) -> float:
    """ln(n!) from the shared table; n must not exceed DEFAULT_MAX_PHOTONS."""
    return _DEFAULT_COMBINATORICS.log_factorial(n)


@lru_cache(maxsize=8)
def _sized_combinatorics(max_n: int) -> LogCombinatorics:
    logger.info(f"Building log-factorial table up to {max_n}")
    return LogCombinatorics(max_n)


def combinatorics_for(n: int) -> LogCombinatorics:
    """A shared table large enough for photon number n."""
    if n <= DEFAULT_MAX_PHOTONS:
        return _DEFAULT_COMBINATORICS
    return _sized_combinatorics(1 << int(np.ceil(np.log2(n))))


# Ladder maps between adjacent subspaces, on raw amplitude arrays.

def _lower_a(amps: np.ndarray) -> np.ndarray:
    n = amps.size - 1
    return amps[:-1] * np.sqrt(n - np.arange(n))


def _lower_b(amps: np.ndarray) -> np.ndarray:
    n = amps.size - 1
    return amps[1:] * np.sqrt(np.arange(1, n + 1))


def _raise_a(amps: np.ndarray) -> np.ndarray:
    n = amps.size - 1
    out = np.zeros(n + 2, dtype=complex)
    out[:-1] = amps * np.sqrt(n + 1 - np.arange(n + 1))
    return out


def _raise_b(amps: np.ndarray) -> np.ndarray:
    n = amps.size - 1
    out = np.zeros(n + 2, dtype=complex)
    out[1:] = amps * np.sqrt(np.arange(1, n + 2))
    return out


_LADDER = {
    LadderOp.A: _lower_a,
    LadderOp.B: _lower_b,
    LadderOp.A_DAG: _raise_a,
    LadderOp.B_DAG: _raise_b,
}


def ladder_map(s: TwoModeFockState, op: Union[LadderOp, str]) -> TwoModeFockState:
    """Apply a single ladder operator; the image is left unnormalized."""
    op = LadderOp(op)
    lowering = op in (LadderOp.A, LadderOp.B)
    if lowering and s.total_n == 0:
        logger.debug(f"{op.value} annihilates the vacuum; returning null state")
        return TwoModeFockState.null(0, s.basis_label)
    amps = _LADDER[op](s.amplitudes)
    new_n = s.total_n - 1 if lowering else s.total_n + 1
    return TwoModeFockState(
        total_n=new_n,
        amplitudes=amps,
        basis_label=s.basis_label,
        normalized=False,
        is_null=s.is_null,
    )


def ladder_chain(s: TwoModeFockState, *ops: Union[LadderOp, str]) -> TwoModeFockState:
    """Apply operators right to left, as in the written product ``op1 op2 ... s``."""
    for op in reversed(ops):
        s = ladder_map(s, op)
    return s


def _check_block_size(total_n: int):
    if total_n < 0:
        raise PhotonRangeError(f"Photon number must be nonnegative, got {total_n}")
    if total_n > DEFAULT_MAX_PHOTONS:
        raise PhotonRangeError(f"Dense blocks are limited to N <= {DEFAULT_MAX_PHOTONS}, got {total_n}")


def _splitter_generator(total_n: int, convention_phase: float) -> np.ndarray:
    """e^{-i phase} a^dag b - e^{i phase} b^dag a on the N-photon subspace (anti-Hermitian)."""
    m = np.arange(total_n)
    weights = np.sqrt((total_n - m) * (m + 1.0))
    generator = np.zeros((total_n + 1, total_n + 1), dtype=complex)
    # a^dag b moves index m+1 -> m, b^dag a moves m -> m+1
    generator[m, m + 1] = np.exp(-1j * convention_phase) * weights
    generator[m + 1, m] = -np.exp(1j * convention_phase) * weights
    return generator


@lru_cache(maxsize=256)
def _beam_splitter_matrix(total_n: int, theta: float, convention_phase: float) -> np.ndarray:
    # exp(pi G) = (-1)^N, so only theta mod pi reaches expm
    turns = int(np.round(theta / np.pi))
    reduced = theta - turns * np.pi
    sign = -1.0 if (turns * total_n) % 2 else 1.0
    return sign * expm(reduced * _splitter_generator(total_n, convention_phase))


def beam_splitter_block(total_n: int, theta: float = FIFTY_FIFTY, convention_phase: float = 0.0) -> UnitaryBlock:
    """Beam splitter lifted to the N-photon subspace.

    The new modes are c = cos(theta) a + e^{i phase} sin(theta) b and
    d = -e^{-i phase} sin(theta) a + cos(theta) b (written for creation
    operators). Element [m', m] is the amplitude of |N-m'; m'> in the new
    modes for the old ket |N-m; m>. The block is the matrix exponential of
    theta times the generator, whose off-diagonal entries are
    sqrt((N-m)(m+1)); no factorials or alternating sums are formed.
    """
    _check_block_size(total_n)
    matrix = _beam_splitter_matrix(int(total_n), float(theta), float(convention_phase))
    return UnitaryBlock(total_n=total_n, matrix=matrix, kind=BlockKind.BEAM_SPLITTER)


def phase_shift_block(total_n: int, phi: float, mode: Union[Mode, str] = Mode.B) -> UnitaryBlock:
    _check_block_size(total_n)
    counts = np.arange(total_n + 1)
    if Mode(mode) is Mode.A:
        counts = total_n - counts
    return UnitaryBlock(
        total_n=total_n,
        matrix=np.diag(np.exp(1j * phi * counts)),
        kind=BlockKind.PHASE_SHIFT,
    )


def apply_block(block: UnitaryBlock, s: TwoModeFockState) -> TwoModeFockState:
    if block.total_n != s.total_n:
        raise ContractViolation(f"Block acts on N={block.total_n}, state has N={s.total_n}")
    label = s.basis_label
    if block.kind is BlockKind.BEAM_SPLITTER:
        label = label.after_beam_splitter()
    amps = block.matrix @ s.amplitudes
    normalized = s.normalized
    if normalized:
        defect = abs(float(np.vdot(amps, amps).real) - 1.0)
        if defect > NORM_TOL:
            logger.warning(f"Norm drifted by {defect:.3e} applying {block.kind.value} at N={s.total_n}")
            normalized = False
    return TwoModeFockState(
        total_n=s.total_n,
        amplitudes=amps,
        basis_label=label,
        normalized=normalized,
        is_null=s.is_null,
    )


def inner_product(s1: TwoModeFockState, s2: TwoModeFockState) -> complex:
    """<s1|s2>."""
    if s1.total_n != s2.total_n:
        raise ContractViolation(f"Photon numbers differ: {s1.total_n} vs {s2.total_n}")
    if s1.basis_label is not s2.basis_label:
        raise ContractViolation(
            f"Basis labels differ: {s1.basis_label.value} vs {s2.basis_label.value}"
        )
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))


def global_phase_distance(s1: TwoModeFockState, s2: TwoModeFockState) -> float:
    """Largest amplitude difference after the best global phase alignment."""
    overlap = inner_product(s2, s1)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(s1.amplitudes - phase * s2.amplitudes)))
