#!/usr/bin/env python3
"""
Command-line runner for the cloning simulator

Subcommands:
    clone       clone fidelities, concurrences and density matrices per probe
    process     single-qubit process matrices of the clone channels
    tomo        simulated tomography counts and reconstructions
    decoupling  psi+ retention with and without the exchange coupling
    sweep       Haar-random universality sweep

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import functools
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from dotenv import load_dotenv

from batch.ensemble import EnsembleRunner
from cli.config import RunConfig
from metrics.entanglement import concurrence, state_fidelity, trace_distance
from metrics.reports import CloneReport, clone_report, write_matrix_json, write_reports_csv
from model.device import DeviceParams, mhz
from noise.decoupling import DecouplingResult, decoupling_retention
from noise.noisy_layer import run_noisy_uqcm
from numkit.errors import ConfigInvalid, NotNormalized, NumericalFailure
from numkit.linalg import CMatrix, SubsystemShape, partial_trace
from protocol.schedule import PulseSchedule
from protocol.states import InputState, haar_random_inputs, probe_states
from protocol.uqcm import QUBIT_LABELS, ProtocolParams, run_ideal_uqcm, run_pulse_uqcm
from tomography.measurement import tomography_records, write_records_csv
from tomography.reconstruction import (
    ChiMatrix,
    bootstrap_std,
    chi_identity,
    process_fidelity,
    process_tomography,
    reconstruct_state,
)
from validation.numerical_rules import validate_density_matrix

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SHAPE = SubsystemShape.qubits(3)
CLONE_TARGETS = {"Q2": (1,), "Q3": (2,)}
PAIR_TARGETS = {"Q1Q2": (0, 1), "Q1Q3": (0, 2), "Q2Q3": (1, 2)}
TOMO_TARGETS = {**CLONE_TARGETS, **PAIR_TARGETS}


def configure_logging(level: Optional[str] = None, json_logs: bool = False) -> None:
    """
    Configure structlog once for the process

    Args:
        level: Log level name; defaults to UQCM_LOG_LEVEL or WARNING
        json_logs: Render JSON lines instead of the console format
    """
    level_name = (level or os.getenv("UQCM_LOG_LEVEL") or "WARNING").upper()
    numeric = getattr(logging, level_name, None)
    if not isinstance(numeric, int):
        raise ConfigInvalid(f"Unknown log level '{level_name}'")
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=numeric, force=True)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def probe_slug(label: str) -> str:
    """File-name-safe probe label: '+i' -> 'plus_i', '-' -> 'minus'"""
    slug = label.replace("+", "plus_").replace("-", "minus_").strip("_")
    return slug.replace("__", "_") or "probe"


@dataclass
class RunContext:
    """Objects built once per command from a RunConfig"""
    config: RunConfig
    device: DeviceParams
    params: ProtocolParams
    runner: EnsembleRunner
    _schedule: Optional[PulseSchedule] = field(default=None, repr=False)

    @classmethod
    def from_config(cls, config: RunConfig) -> "RunContext":
        device = config.build_device()
        return cls(
            config=config,
            device=device,
            params=config.protocol.build(device),
            runner=EnsembleRunner(max_workers=config.run.workers),
        )

    @property
    def layer(self) -> str:
        return self.config.run.layer

    @property
    def seed(self) -> int:
        return self.config.run.seed

    @property
    def out_dir(self) -> Path:
        path = Path(self.config.run.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @property
    def schedule(self) -> PulseSchedule:
        if self._schedule is None:
            self._schedule = self.config.schedule.build(self.device)
        return self._schedule

    def output_path(self, command: str, *parts: str, suffix: str = "json") -> Path:
        name = "_".join([command, *parts, self.layer, f"seed{self.seed}"])
        return self.out_dir / f"{name}.{suffix}"


def simulate_probe(state: InputState, ctx: RunContext) -> Tuple[CMatrix, Dict[str, object]]:
    """
    Final three-qubit density matrix of one probe on the configured layer

    Returns:
        (rho, extras) where extras carries layer-specific diagnostics

    Raises:
        NumericalFailure: If the result is not a valid density matrix
    """
    extras: Dict[str, object] = {}
    if ctx.layer == "ideal":
        rho = run_ideal_uqcm(state, ctx.params).final.density()
    elif ctx.layer == "pulse":
        sched = ctx.config.schedule
        result = run_pulse_uqcm(state, ctx.schedule, ctx.device, crosstalk=sched.crosstalk,
                                fock=sched.fock, drive_dt=sched.drive_dt_ns)
        rho = result.qubits.density()
        extras = {
            "timing": result.timing,
            "phi": result.phi,
            "z_rotations": list(result.z_rotations),
            "max_resonator_excitation": result.max_resonator_excitation,
            "stages": [s.to_dict() for s in result.stages],
        }
    else:
        noise = ctx.config.noise.build(ctx.device, ctx.seed)
        result = run_noisy_uqcm(state, ctx.params, noise, runner=ctx.runner)
        rho = result.qubits.density()
        extras = {"trajectories": result.n_trajectories, "dephasing": result.dephasing,
                  "duration_ns": result.duration}

    checks = validate_density_matrix(rho)
    if not checks["overall_valid"]:
        failed = [k for k, ok in checks.items() if not ok]
        raise NumericalFailure(f"Output for input '{state.label}' failed checks: {failed}")
    return rho, extras


def _simulate_all(probes: Sequence[InputState], ctx: RunContext) -> List[Tuple[CMatrix, Dict[str, object]]]:
    # the noisy layer parallelises over trajectories already
    if ctx.layer == "noisy":
        return [simulate_probe(p, ctx) for p in probes]
    if ctx.layer == "pulse":
        _ = ctx.schedule  # build once before the worker threads start
    return ctx.runner.map_ordered(lambda p: simulate_probe(p, ctx), probes, label=f"probes:{ctx.layer}")


def cmd_clone(config: RunConfig) -> List[CloneReport]:
    """
    Clone fidelities and concurrences of every configured probe

    Writes one JSON per clone and pair density matrix and a CSV summary.
    """
    ctx = RunContext.from_config(config)
    probes = config.probes()
    logger.info("Clone run started", layer=ctx.layer, probes=len(probes), seed=ctx.seed)

    reports = []
    for state, (rho, extras) in zip(probes, _simulate_all(probes, ctx)):
        slug = probe_slug(state.label)
        for name, keep in TOMO_TARGETS.items():
            write_matrix_json(ctx.output_path("clone", slug, name), partial_trace(rho, SHAPE, keep),
                              input=state.label, target=name, layer=ctx.layer)
        if ctx.layer == "pulse":
            write_matrix_json(ctx.output_path("clone", slug, "Q1Q2Q3"), rho, input=state.label,
                              target="Q1Q2Q3", layer=ctx.layer, diagnostics=extras)
        reports.append(clone_report(state, rho, ctx.layer))

    summary = write_reports_csv(ctx.output_path("clone", "summary", suffix="csv"), reports)
    logger.info(
        "Clone run finished",
        summary=str(summary),
        min_fidelity=round(min(min(r.fidelity_q2, r.fidelity_q3) for r in reports), 6),
        max_fidelity=round(max(max(r.fidelity_q2, r.fidelity_q3) for r in reports), 6),
    )
    return reports


def cmd_process(config: RunConfig) -> Dict[str, Tuple[ChiMatrix, float]]:
    """
    Process matrices of the configured targets from the six probe states

    Returns:
        target -> (chi, Tr(chi chi_identity))
    """
    ctx = RunContext.from_config(config)
    probes = probe_states()
    outputs = _simulate_all(probes, ctx)
    tomo = config.tomography
    chi_id = chi_identity()

    results = {}
    rows = []
    for target in config.run.process_targets:
        q = QUBIT_LABELS.index(target)
        pairs = []
        for k, (state, (rho, _)) in enumerate(zip(probes, outputs)):
            rho_out = partial_trace(rho, SHAPE, [q])
            if tomo.process_from_counts:
                rho_out = _measure_and_reconstruct(rho_out, (q,), ctx, seed_key=(q, k)).projected
            pairs.append((state.density, rho_out))
        chi = process_tomography(pairs)
        fidelity = process_fidelity(chi, chi_id)
        results[target] = (chi, fidelity)
        write_matrix_json(ctx.output_path("process", "chi", target), chi.matrix,
                          basis=list(chi.labels), target=target, layer=ctx.layer)
        diag = np.real(np.diag(chi.matrix))
        rows.append({"target": target, "process_fidelity": f"{fidelity:.6f}",
                     **{f"chi_{p}{p}": f"{d:.6f}" for p, d in zip(chi.labels, diag)}})
        logger.info("Process matrix", target=target, fidelity=round(fidelity, 6))

    _write_rows(ctx.output_path("process", "summary", suffix="csv"), rows)
    return results


def _tomo_seed(master: int, key: Tuple[int, ...]) -> int:
    return int(np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key)).generate_state(1)[0])


def _readout(ctx: RunContext, qubits: Sequence[int]) -> Tuple[Optional[List[float]], Optional[List[float]]]:
    if not ctx.config.tomography.readout_errors:
        return None, None
    f0 = [ctx.device.qubits[q].readout_f0 for q in qubits]
    f1 = [ctx.device.qubits[q].readout_f1 for q in qubits]
    return f0, f1


def _measure_and_reconstruct(rho: CMatrix, qubits: Sequence[int], ctx: RunContext,
                             seed_key: Tuple[int, ...], records_path: Optional[Path] = None):
    tomo = ctx.config.tomography
    f0, f1 = _readout(ctx, qubits)
    records = tomography_records(rho, len(qubits), tomo.shots, _tomo_seed(ctx.seed, seed_key), f0, f1)
    if records_path is not None:
        write_records_csv(records_path, records)
    if tomo.readout_correction and f0 is not None:
        result = reconstruct_state(records, len(qubits), f0, f1)
    else:
        result = reconstruct_state(records, len(qubits))
    return result


def cmd_tomo(config: RunConfig) -> List[CloneReport]:
    """
    Simulated tomography of the clones and pairs of every probe

    Writes raw counts (CSV) and raw and projected reconstructions (JSON),
    a per-target summary and CloneReports built from the reconstructions.
    """
    ctx = RunContext.from_config(config)
    probes = config.probes()
    tomo = config.tomography
    logger.info("Tomography run started", layer=ctx.layer, shots=tomo.shots, probes=len(probes))

    rows = []
    reports = []
    for p_index, (state, (rho, _)) in enumerate(zip(probes, _simulate_all(probes, ctx))):
        slug = probe_slug(state.label)
        estimates: Dict[str, CMatrix] = {}
        for t_index, (name, keep) in enumerate(TOMO_TARGETS.items()):
            truth = partial_trace(rho, SHAPE, keep)
            result = _measure_and_reconstruct(
                truth, keep, ctx, seed_key=(p_index, t_index),
                records_path=ctx.output_path("tomo", slug, name, "counts", suffix="csv"),
            )
            estimates[name] = result.projected
            write_matrix_json(ctx.output_path("tomo", slug, name, "raw"), result.raw, input=state.label, target=name)
            write_matrix_json(ctx.output_path("tomo", slug, name), result.projected, input=state.label, target=name)

            if len(keep) == 1:
                quantity, value = "fidelity", state_fidelity(state, result.projected)
                statistic = functools.partial(state_fidelity, state)
            else:
                quantity, value = "concurrence", concurrence(result.projected)
                statistic = concurrence
            row = {
                "input": state.label, "target": name, "quantity": quantity, "value": f"{value:.6f}",
                "trace_distance": f"{trace_distance(result.projected, truth):.6f}",
                "clipped_mass": f"{result.clipped_mass:.6f}",
            }
            if tomo.bootstrap > 0:
                f0, f1 = _readout(ctx, keep) if tomo.readout_correction else (None, None)
                spread = bootstrap_std(result.records, len(keep), statistic, tomo.bootstrap,
                                       _tomo_seed(ctx.seed, (p_index, t_index, 1)), f0, f1)
                row["bootstrap_std"] = f"{spread:.6f}"
            rows.append(row)

        reports.append(CloneReport(
            input=state.label,
            layer="tomography",
            fidelity_q2=state_fidelity(state, estimates["Q2"]),
            fidelity_q3=state_fidelity(state, estimates["Q3"]),
            concurrence_q1q2=concurrence(estimates["Q1Q2"]),
            concurrence_q1q3=concurrence(estimates["Q1Q3"]),
            concurrence_q2q3=concurrence(estimates["Q2Q3"]),
        ))

    _write_rows(ctx.output_path("tomo", "summary", suffix="csv"), rows)
    write_reports_csv(ctx.output_path("tomo", "reports", suffix="csv"), reports)
    logger.info("Tomography run finished", targets=len(rows))
    return reports


def cmd_decoupling(config: RunConfig) -> List[DecouplingResult]:
    """psi+ retention over the (sigma, T_c) grid, one CSV row per point"""
    ctx = RunContext.from_config(config)
    grid = config.decoupling
    lam = mhz(grid.lambda_mhz)
    results = []
    for sigma_x in grid.sigma_x_lambda:
        for tc_x in grid.correlation_time_x_lambda:
            results.append(decoupling_retention(
                lam=lam,
                sigma=sigma_x * lam,
                correlation_time=tc_x / lam,
                duration=grid.duration_x_lambda / lam,
                n_trajectories=grid.trajectories,
                seed=ctx.seed,
                runner=ctx.runner,
            ))
    path = ctx.out_dir / f"decoupling_seed{ctx.seed}.csv"
    _write_rows(path, [_format_row(r.to_row()) for r in results])
    logger.info("Decoupling sweep finished", points=len(results), path=str(path))
    return results


def cmd_sweep(config: RunConfig) -> List[CloneReport]:
    """Haar-random inputs: per-input clone fidelities and concurrences"""
    ctx = RunContext.from_config(config)
    inputs = haar_random_inputs(config.run.haar_count, ctx.seed)
    reports = [clone_report(s, rho, ctx.layer) for s, (rho, _) in zip(inputs, _simulate_all(inputs, ctx))]
    write_reports_csv(ctx.output_path("sweep", "haar", suffix="csv"), reports)
    fidelities = np.array([[r.fidelity_q2, r.fidelity_q3] for r in reports])
    logger.info("Sweep finished", inputs=len(reports), fidelity_spread=float(fidelities.max() - fidelities.min()))
    return reports


def _format_row(row: Dict[str, object]) -> Dict[str, object]:
    return {k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()}


def _write_rows(path: Path, rows: List[Dict[str, object]]) -> Path:
    fieldnames: List[str] = []
    for row in rows:
        fieldnames.extend(k for k in row if k not in fieldnames)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, restval="")
        writer.writeheader()
        writer.writerows(rows)
    return path


COMMANDS = {
    "clone": cmd_clone,
    "process": cmd_process,
    "tomo": cmd_tomo,
    "decoupling": cmd_decoupling,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None, help="Master seed")
    common.add_argument("--layer", choices=["ideal", "pulse", "noisy"], default=None)
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--shots", type=int, default=None, help="Shots per tomography setting")
    common.add_argument("--workers", type=int, default=None, help="Worker threads (default UQCM_WORKERS or CPU count)")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--json-logs", action="store_true", help="Emit JSON log lines")

    parser = argparse.ArgumentParser(prog="uqcm_sim", description="Three-qubit universal cloning simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip().splitlines()[0])
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    return config.with_overrides(
        run={"seed": args.seed, "layer": args.layer, "out_dir": args.out, "workers": args.workers},
        tomography={"shots": args.shots},
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and map failures to exit codes"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level, args.json_logs)
        config = load_config(args)
        COMMANDS[args.command](config)
    except (ConfigInvalid, NotNormalized) as e:
        logger.error("Configuration error", command=args.command, error=str(e))
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as e:
        logger.error("Numerical failure", command=args.command, error=str(e))
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK
