#!/usr/bin/env python3
"""
Command-line front end for the NOON-state simulator.

Reproduces the optimized-fidelity table, the overlap-vs-N curve and
N-photon fringe scans, and runs the invariant suite:

    python main.py table1 --workers 4
    python main.py fig2 --n-min 2 --n-max 30
    python main.py fringe --n 4 --eta 2.31 --samples 128 --format json
    python main.py check
"""

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from enum import Enum
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from Optics.analysis import (
    DEFAULT_ETA_BOUNDS,
    DEFAULT_TOL,
    coherence_check,
    compare_with_table1,
    defining_relation_residual,
    fidelity,
    gaussian_overlap_limit,
    n_photon_probability,
    optimize_eta,
    overlap_curve,
    perturbed_state,
)
from Optics.fock_core import (
    TwoModeFockState,
    apply_block,
    beam_splitter_block,
    global_phase_distance,
)
from Optics.interferometer import (
    VisibilityReport,
    beats_standard_quantum_limit,
    channel_visibilities,
    extremal_visibility,
    fringe_scan,
    minimum_samples,
    parity_visibility,
    phase_sensitivity,
    scan_inside_state,
    scan_state,
)
from Optics.states import (
    EtaParams,
    InputFieldParams,
    align_pair_phase,
    eta_state,
    field_params_for_eta,
    noon_input_basis,
    noon_interferometer,
    noon_phase,
    project_total_n,
)
from utils.ReportWriter import ReportWriter
from utils.errors import SimulationError

logger = logging.getLogger(__name__)

# Exit statuses
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

DEFAULT_TABLE1_N = tuple(range(2, 16)) + (100,)
ASYMPTOTE_N = 10_000
SQRT_8_9 = math.sqrt(8.0 / 9.0)


class Command(str, Enum):
    STATE = "state"
    FIDELITY = "fidelity"
    OPTIMIZE = "optimize"
    TABLE1 = "table1"
    FIG2 = "fig2"
    FRINGE = "fringe"
    CHECK = "check"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class RunConfig(BaseModel):
    """Validated command line."""
    command: Command
    n: Optional[int] = Field(default=None, description="Total photon number N")
    n_list: List[int] = Field(default_factory=lambda: list(DEFAULT_TABLE1_N), description="N values for table1")
    n_min: int = Field(default=2, ge=1, description="First N of the overlap curve")
    n_max: int = Field(default=30, ge=1, description="Last N of the overlap curve")
    eta: float = Field(default=2.0, ge=0.0, description="Mixing parameter eta")
    gamma: Optional[float] = Field(default=None, gt=0.0, lt=1.0, description="Pair amplitude used to derive alpha")
    samples: Optional[int] = Field(default=None, ge=1, description="Phase samples for fringe scans")
    output_format: OutputFormat = OutputFormat.CSV
    output_path: Optional[str] = None
    precision: int = Field(default=12, ge=0, le=17, description="Decimal digits in written numbers")
    eta_lo: float = Field(default=DEFAULT_ETA_BOUNDS[0], ge=0.0)
    eta_hi: float = Field(default=DEFAULT_ETA_BOUNDS[1], gt=0.0)
    tol: float = Field(default=DEFAULT_TOL, gt=0.0)
    workers: int = Field(default=1, ge=1)
    inject_perturbation: bool = False

    @model_validator(mode="after")
    def _check_command(self) -> "RunConfig":
        single_n = (Command.STATE, Command.FIDELITY, Command.OPTIMIZE, Command.FRINGE)
        if self.command in single_n:
            if self.n is None or self.n < 1:
                raise ValueError(f"{self.command.value} needs --n >= 1, got {self.n}")
        if self.command is Command.TABLE1 and (not self.n_list or min(self.n_list) < 1):
            raise ValueError(f"table1 needs photon numbers >= 1, got {self.n_list}")
        if self.command is Command.FIG2 and self.n_min > self.n_max:
            raise ValueError(f"--n-min {self.n_min} exceeds --n-max {self.n_max}")
        if self.command in (Command.OPTIMIZE, Command.TABLE1) and self.eta_lo >= self.eta_hi:
            raise ValueError(f"--eta-lo {self.eta_lo} must be below --eta-hi {self.eta_hi}")
        if self.command is Command.FRINGE:
            if self.samples is None:
                self.samples = max(64, 8 * self.n)
            required = minimum_samples(self.n)
            if self.samples < required:
                raise ValueError(
                    f"--samples {self.samples} is too small for N={self.n}: need at least 4N+1 = {required}"
                )
        return self


# --- Sweep workers (module level so a process pool can pickle them) ---

def _optimize_row(total_n: int, lo: float, hi: float, tol: float) -> Dict[str, object]:
    result = optimize_eta(total_n, lo, hi, tol)
    row: Dict[str, object] = {
        "n": result.n,
        "eta_star": result.eta_star,
        "fidelity_star": result.fidelity_star,
        "evaluations": result.evaluations,
        "bracket_lo": result.bracket[0],
        "bracket_hi": result.bracket[1],
    }
    reference = compare_with_table1(result)
    row.update(reference or {"eta_ref": None, "fidelity_ref": None, "agrees": None})
    return row


def _overlap_row(total_n: int, eta: float) -> Dict[str, object]:
    return {"n": total_n, "overlap": fidelity(total_n, eta)}


def parallel_map(func: Callable, items: Sequence, workers: int) -> List:
    """map() over items, in input order, optionally across processes."""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# --- Commands ---

def cmd_state(config: RunConfig, writer: ReportWriter) -> int:
    state = eta_state(EtaParams(n=config.n, eta=config.eta))
    noon = noon_input_basis(config.n)
    if config.gamma is not None:
        fields = field_params_for_eta(config.n, config.eta, config.gamma)
        logger.info(
            f"alpha={fields.alpha.real:.6f} realizes eta={config.eta} at gamma={config.gamma}; "
            f"P(N={config.n})={n_photon_probability(fields, config.n):.3e}"
        )
    n_a, n_b = state.photon_counts
    rows = [
        {
            "m": int(m),
            "n_a": int(n_a[m]),
            "n_b": int(n_b[m]),
            "eta_re": float(state.amplitudes[m].real),
            "eta_im": float(state.amplitudes[m].imag),
            "noon": float(noon.amplitudes[m].real),
            "probability": float(state.probabilities[m]),
        }
        for m in range(config.n + 1)
    ]
    writer.write(writer.render(rows, {"n": config.n, "eta": config.eta}), config.output_path)
    return EXIT_OK


def cmd_fidelity(config: RunConfig, writer: ReportWriter) -> int:
    rows = [_overlap_row(config.n, config.eta)]
    writer.write(writer.render(rows), config.output_path)
    return EXIT_OK


def cmd_optimize(config: RunConfig, writer: ReportWriter) -> int:
    rows = [_optimize_row(config.n, config.eta_lo, config.eta_hi, config.tol)]
    writer.write(writer.render(rows), config.output_path)
    return EXIT_OK


def cmd_table1(config: RunConfig, writer: ReportWriter) -> int:
    logger.info(f"Optimizing eta for N in {config.n_list} with {config.workers} worker(s)")
    worker = partial(_optimize_row, lo=config.eta_lo, hi=config.eta_hi, tol=config.tol)
    rows = parallel_map(worker, config.n_list, config.workers)
    writer.write(writer.render(rows), config.output_path)
    return EXIT_OK


def cmd_fig2(config: RunConfig, writer: ReportWriter) -> int:
    worker = partial(_overlap_row, eta=config.eta)
    rows = parallel_map(worker, list(range(config.n_min, config.n_max + 1)), config.workers)
    lowest = min(rows, key=lambda row: row["overlap"])
    logger.info(f"Minimum overlap {lowest['overlap']:.6f} at N={lowest['n']}")
    writer.write(writer.render(rows, {"eta": config.eta, "minimum": lowest}), config.output_path)
    return EXIT_OK


def _visibility_row(signal: str, report: VisibilityReport) -> Dict[str, object]:
    row: Dict[str, object] = {"signal": signal}
    row.update(asdict(report))
    row["beats_standard_quantum_limit"] = beats_standard_quantum_limit(report)
    return row


def cmd_fringe(config: RunConfig, writer: ReportWriter) -> int:
    scan = fringe_scan(config.n, config.eta, config.samples)
    rows = []
    for j, phi in enumerate(scan.phases):
        row: Dict[str, object] = {"phi": float(phi)}
        row.update({f"p_{m}": float(scan.distributions[j, m]) for m in range(scan.n + 1)})
        row["parity"] = float(scan.parity[j])
        row["extremal"] = float(scan.extremal[j])
        rows.append(row)

    visibility_rows = [
        _visibility_row("parity", parity_visibility(scan)),
        _visibility_row("extremal", extremal_visibility(scan)),
    ]
    visibility_rows.extend(
        _visibility_row(f"p_{m}", report) for m, report in enumerate(channel_visibilities(scan))
    )
    logger.info(
        f"Parity visibility {visibility_rows[0]['visibility']:.6f}, "
        f"fidelity {fidelity(config.n, config.eta):.6f}"
    )

    if writer.output_format == OutputFormat.JSON.value:
        writer.write(
            writer.render(rows, {"n": scan.n, "eta": scan.eta, "visibility": visibility_rows}),
            config.output_path,
        )
        return EXIT_OK

    writer.write(writer.render(rows), config.output_path)
    if config.output_path is None:
        logger.info("CSV on stdout: visibility sidecar skipped, pass --out to write it")
    else:
        writer.write(writer.render(visibility_rows), ReportWriter.sidecar_path(config.output_path, "visibility"))
    return EXIT_OK


# --- Invariant suite ---

def _max_unitarity_defect(rng: np.random.Generator) -> float:
    worst = 0.0
    for total_n in (1, 2, 3, 5, 16, 64):
        for _ in range(8):
            theta, phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
            worst = max(worst, beam_splitter_block(total_n, theta, phase).unitarity_defect())
    return worst


def _hom_error() -> float:
    out = apply_block(beam_splitter_block(2), TwoModeFockState.basis_ket(2, 1))
    expected = np.array([1.0, 0.0, -1.0]) / np.sqrt(2.0)
    return float(np.max(np.abs(out.amplitudes - expected)))


def _composition_error() -> float:
    forward = beam_splitter_block(16, 0.3).matrix
    backward = beam_splitter_block(16, -0.3).matrix
    return float(np.max(np.abs(forward @ backward - np.eye(17))))


def _max_residual(inject: bool) -> float:
    worst = max(
        defining_relation_residual(total_n, eta)
        for total_n in range(2, 41)
        for eta in (0.5, 1.0, 2.0, 3.0)
    )
    if inject:
        state = perturbed_state(eta_state(EtaParams(n=6, eta=2.0)))
        worst = max(worst, defining_relation_residual(6, 2.0, state))
    return worst


def _max_oracle_distance(rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(20):
        total_n = int(rng.integers(2, 13))
        alpha = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        gamma = rng.uniform(0.05, 0.6) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        fields = InputFieldParams(alpha=alpha, gamma=gamma)
        projected = align_pair_phase(project_total_n(fields, total_n), fields)
        exact = eta_state(EtaParams(n=total_n, eta=abs(total_n * gamma / alpha ** 2)))
        worst = max(worst, global_phase_distance(projected, exact))
    return worst


def _max_noon_convention_distance() -> float:
    worst = 0.0
    for total_n in range(1, 21):
        inside = apply_block(beam_splitter_block(total_n), noon_input_basis(total_n))
        worst = max(worst, global_phase_distance(inside, noon_interferometer(total_n, noon_phase(total_n))))
    return worst


def _coherence_errors() -> Dict[str, float]:
    minus, coherence = 0.0, 0.0
    for total_n in range(1, 61):
        for eta in (1.5, 2.0, 2.5, 3.0):
            report = coherence_check(total_n, eta)
            minus = max(minus, report.noon_minus_overlap)
            coherence = max(coherence, abs(report.coherence - report.half_fidelity))
    return {"noon_minus": minus, "coherence": coherence}


def _max_row_sum_error() -> float:
    worst = 0.0
    for total_n in (100, 200):
        inside = apply_block(beam_splitter_block(total_n), eta_state(EtaParams(n=total_n, eta=2.0)))
        phases = 2.0 * np.pi * np.arange(minimum_samples(total_n)) / minimum_samples(total_n)
        rows = scan_inside_state(inside, phases).sum(axis=1)
        worst = max(worst, float(np.max(np.abs(rows - 1.0))))
    return worst


def _noon_parity_error() -> float:
    scan = scan_state(noon_interferometer(4), 64)
    return abs(parity_visibility(scan).visibility - 1.0)


def run_checks(inject_perturbation: bool = False) -> List[Dict[str, object]]:
    """Evaluate every invariant; one row per check with its measured value and threshold."""
    rng = np.random.default_rng(20240917)
    coherence = _coherence_errors()
    curve_min_n, curve_min = overlap_curve(2.0, 2, 30).minimum()
    asymptote = fidelity(ASYMPTOTE_N, 2.0)

    checks = [
        ("beam_splitter_unitarity", _max_unitarity_defect(rng), 1e-12),
        ("hong_ou_mandel", _hom_error(), 1e-12),
        ("beam_splitter_composition", _composition_error(), 1e-11),
        ("defining_relation_residual", _max_residual(inject_perturbation), 1e-10),
        ("product_state_oracle", _max_oracle_distance(rng), 1e-10),
        ("noon_input_basis_convention", _max_noon_convention_distance(), 1e-10),
        ("noon_minus_orthogonality", coherence["noon_minus"], 1e-12),
        ("coherence_equals_half_fidelity", coherence["coherence"], 1e-10),
        ("exact_cancellation_n2", abs(fidelity(2, 2.0) - 1.0), 1e-12),
        ("exact_cancellation_n3", abs(fidelity(3, 3.0) - 1.0), 1e-12),
        ("asymptote_n10000", abs(asymptote - gaussian_overlap_limit(2.0)), 2e-3),
        ("overlap_minimum_value", abs(curve_min - 0.891), 1e-3),
        ("overlap_minimum_at_n9", float(abs(curve_min_n - 9)), 0.0),
        ("fringe_row_sums_large_n", _max_row_sum_error(), 1e-10),
        ("noon_parity_visibility", _noon_parity_error(), 1e-9),
        ("heisenberg_sensitivity_n10", abs(phase_sensitivity(
            parity_visibility(scan_state(noon_interferometer(10), 64))) - 10.0), 1e-8),
    ]
    rows = []
    for name, measured, threshold in checks:
        passed = bool(measured <= threshold)
        if not passed:
            logger.error(f"Check {name} failed: {measured:.3e} > {threshold:.1e}")
        rows.append({"check": name, "measured": float(measured), "threshold": threshold, "passed": passed})
    logger.info(f"asymptote F(N={ASYMPTOTE_N}, eta=2) = {asymptote:.6f}, sqrt(8/9) = {SQRT_8_9:.6f}")
    return rows


def cmd_check(config: RunConfig, writer: ReportWriter) -> int:
    rows = run_checks(config.inject_perturbation)
    writer.write(writer.render(rows), config.output_path)
    return EXIT_OK if all(row["passed"] for row in rows) else EXIT_CHECK_FAILED


COMMANDS: Dict[Command, Callable[[RunConfig, ReportWriter], int]] = {
    Command.STATE: cmd_state,
    Command.FIDELITY: cmd_fidelity,
    Command.OPTIMIZE: cmd_optimize,
    Command.TABLE1: cmd_table1,
    Command.FIG2: cmd_fig2,
    Command.FRINGE: cmd_fringe,
    Command.CHECK: cmd_check,
}


# --- Argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default="csv", dest="output_format",
                        help="Output format (default: csv).")
    common.add_argument("--out", default=None, dest="output_path", help="Write to this file instead of stdout.")
    common.add_argument("--precision", type=int, default=12, help="Decimal digits in output (default: 12).")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level (default: WARNING).")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--eta-lo", type=float, default=DEFAULT_ETA_BOUNDS[0], dest="eta_lo",
                        help=f"Lower eta bound (default: {DEFAULT_ETA_BOUNDS[0]}).")
    search.add_argument("--eta-hi", type=float, default=DEFAULT_ETA_BOUNDS[1], dest="eta_hi",
                        help=f"Upper eta bound (default: {DEFAULT_ETA_BOUNDS[1]}).")
    search.add_argument("--tol", type=float, default=DEFAULT_TOL, help=f"Bracket width (default: {DEFAULT_TOL:g}).")

    parser = argparse.ArgumentParser(description="Simulate NOON-like states made from laser light and photon pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", parents=[common], help="Dump the eta state and the NOON state in the input modes.")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=None, help="Pair amplitude; logs the laser amplitude that gives eta.")

    p = sub.add_parser("fidelity", parents=[common], help="|<NOON|eta>|^2 for one N and eta.")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, default=2.0)

    p = sub.add_parser("optimize", parents=[common, search], help="Best eta for one N.")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("table1", parents=[common, search], help="Best eta and fidelity for a list of N.")
    p.add_argument("--n", type=int, nargs="+", default=list(DEFAULT_TABLE1_N), dest="n_list")
    p.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1).")

    p = sub.add_parser("fig2", parents=[common], help="Overlap against N at fixed eta.")
    p.add_argument("--n-min", type=int, default=2, dest="n_min")
    p.add_argument("--n-max", type=int, default=30, dest="n_max")
    p.add_argument("--eta", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1).")

    p = sub.add_parser("fringe", parents=[common], help="Output distributions over a phase grid.")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=None, help="Phase samples, at least 4N+1 (default: max(64, 8N)).")

    p = sub.add_parser("check", parents=[common], help="Run the invariant suite.")
    p.add_argument("--inject-perturbation", action="store_true", dest="inject_perturbation", help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    options = {k: v for k, v in vars(args).items() if k != "log_level"}
    try:
        config = RunConfig(**options)
    except ValidationError as exc:
        message = "; ".join(error["msg"] for error in exc.errors())
        logger.error(message)
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE

    writer = ReportWriter(config.output_format.value, config.precision)
    try:
        return COMMANDS[config.command](config, writer)
    except SimulationError as exc:
        logger.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
