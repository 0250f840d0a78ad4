"""Command-line surface: eval, conjugate, dualcheck, axioms, lift.

Exit codes: 0 on success or a passing check, 1 when a check fails, 2 on
usage, configuration, or data errors. Every command produces one canonical
JSON report document; with a fixed seed the report bytes are identical
across runs and worker counts.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from lossrisk.axioms import SamplerSpec, run_suite
from lossrisk.dataio import (
    ConfigError,
    RunConfig,
    ScenarioFileError,
    build_statistic,
    load_config,
    load_scenario_csv,
)
from lossrisk.duality import (
    check_normalization_condition,
    classify_coherence,
    conjugate_on_grid,
    dual_round_trip_report,
    sample_data_vectors,
    weight_grid,
)
from lossrisk.reporting import ReportDocument, canonical_json, emit_report, file_digest
from lossrisk.statistics import (
    cash_additive_lift,
    check_cash_loss_additivity,
    regulator_version,
    sample_loss_shifts,
    worst_block_index,
)

__all__ = ["run_command", "main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossrisk",
        description="Loss-only risk statistics: evaluation, conjugation, checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_data, help_text in (
        ("eval", True, "evaluate the configured statistic on a scenario CSV"),
        ("conjugate", False, "tabulate the minimal penalty over a weight grid"),
        ("dualcheck", True, "compare the statistic to its dual reconstruction"),
        ("axioms", True, "run the axiom suite against the configured statistic"),
        ("lift", True, "check the cash-additive lift and its round trip"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="run configuration file")
        cmd.add_argument(
            "--data",
            required=needs_data,
            default=None,
            help="scenario CSV" + ("" if needs_data else " (optional)"),
        )
        cmd.add_argument("--out", default=None, help="report output path")
        cmd.add_argument("--seed", type=int, default=None, help="override run.seed")
        cmd.add_argument("--workers", type=int, default=1, help="conjugation workers")
    return parser


def _cmd_eval(cfg: RunConfig, data, seed, workers):
    rho = build_statistic(cfg.statistic, data)
    value = rho.evaluate(data)
    result = {
        "statistic": rho.name,
        "value": value,
        "dimension": data.dimension,
        "partition": list(data.partition),
        "labels": list(data.labels) if data.labels else None,
    }
    if cfg.statistic.kind == "worst_scenario":
        idx = worst_block_index(data.partition, data.values)
        result["worst_block"] = idx
        if data.labels:
            result["worst_block_label"] = data.labels[idx]
    return 0, result


def _conjugated_grid(cfg: RunConfig, rho, workers):
    resolution = cfg.weight_resolution(rho.dimension)
    qgrid = weight_grid(rho.dimension, resolution)
    return conjugate_on_grid(rho, qgrid, cfg.conjugation, workers), resolution


def _cmd_conjugate(cfg: RunConfig, data, seed, workers):
    rho = build_statistic(cfg.statistic, data)
    grid, resolution = _conjugated_grid(cfg, rho, workers)
    result = {
        "statistic": rho.name,
        "resolution": resolution,
        "grid": grid.to_dict(),
        "classification": classify_coherence(
            grid, cfg.zero_tol, cfg.infinity_threshold
        ).to_dict(),
    }
    if cfg.normalization_epsilons:
        result["normalization"] = check_normalization_condition(
            grid, cfg.normalization_epsilons, cfg.normalization_mode
        ).to_dict()
    return 0, result


def _cmd_dualcheck(cfg: RunConfig, data, seed, workers):
    rho = build_statistic(cfg.statistic, data)
    if data is not None and data.dimension != rho.dimension:
        raise ConfigError(
            f"data dimension {data.dimension} does not match statistic "
            f"dimension {rho.dimension}"
        )
    grid, resolution = _conjugated_grid(cfg, rho, workers)
    samples = sample_data_vectors(
        rho.dimension, cfg.check_samples, seed, cfg.sample_range
    )
    report = dual_round_trip_report(rho, grid, samples, cfg.rel_tol)
    result = {
        "statistic": rho.name,
        "resolution": resolution,
        "round_trip": report.to_dict(),
        "grid": grid.to_dict(),
    }
    return (0 if report.passed else 1), result


def _cmd_axioms(cfg: RunConfig, data, seed, workers):
    rho = build_statistic(cfg.statistic, data)
    if data.dimension != rho.dimension:
        raise ConfigError(
            f"data dimension {data.dimension} does not match statistic "
            f"dimension {rho.dimension}"
        )
    spec = SamplerSpec(
        dimension=rho.dimension,
        partition=data.partition,
        samples=cfg.axiom_samples,
        seed=seed,
        component_range=cfg.axiom_component_range,
        cash_max=cfg.axiom_cash_max,
    )
    report = run_suite(rho, spec, cfg.axiom_tolerance)
    return (0 if report.passed else 1), report.to_dict()


def _cmd_lift(cfg: RunConfig, data, seed, workers):
    rho = build_statistic(cfg.statistic, data)
    if data.dimension != rho.dimension:
        raise ConfigError(
            f"data dimension {data.dimension} does not match statistic "
            f"dimension {rho.dimension}"
        )
    additivity = check_cash_loss_additivity(
        rho,
        sample_loss_shifts(
            rho.dimension,
            data.partition,
            count=cfg.lift_check_samples,
            seed=seed,
            component_range=cfg.axiom_component_range,
            cash_max=cfg.axiom_cash_max,
        ),
        cfg.lift_tolerance,
    )
    lifted = cash_additive_lift(rho)
    back = regulator_version(lifted)

    v_rho = rho.evaluate(data)
    v_lift = float(lifted.fn(data.values))
    v_back = float(back.fn(data.values))
    round_trip_residual = abs(v_back - v_rho)

    rng = np.random.default_rng([int(seed), 101])
    base = float(max(0.0, data.values.max()))
    anchors = base + rng.uniform(0.0, cfg.axiom_cash_max, size=cfg.lift_num_anchors)
    lifted_values = [float(rho.fn(data.values - a)) - a for a in anchors]
    spread = max(lifted_values) - min(lifted_values) if lifted_values else 0.0

    passed = (
        additivity.passed
        and round_trip_residual <= cfg.lift_tolerance
        and spread <= cfg.lift_tolerance
    )
    result = {
        "statistic": rho.name,
        "cash_loss_additivity": additivity.to_dict(),
        "transforms": [
            lifted.derived_from.to_dict(),
            back.derived_from.to_dict(),
        ],
        "values": {
            "rho": v_rho,
            "lifted": v_lift,
            "round_trip": v_back,
            "round_trip_residual": round_trip_residual,
        },
        "anchor_independence": {
            "anchors": list(anchors),
            "values": lifted_values,
            "spread": spread,
            "passed": spread <= cfg.lift_tolerance,
        },
        "passed": passed,
    }
    return (0 if passed else 1), result


_COMMANDS = {
    "eval": _cmd_eval,
    "conjugate": _cmd_conjugate,
    "dualcheck": _cmd_dualcheck,
    "axioms": _cmd_axioms,
    "lift": _cmd_lift,
}


def run_command(argv) -> tuple[int, ReportDocument | None]:
    """Parse argv, run one subcommand, and return (exit code, report)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (int(exc.code) if exc.code else 0), None

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2, None

    data = None
    if args.data is not None:
        try:
            data = load_scenario_csv(args.data)
        except (ScenarioFileError, OSError) as exc:
            print(f"data error: {exc}", file=sys.stderr)
            return 2, None

    seed = args.seed if args.seed is not None else cfg.seed
    try:
        code, result = _COMMANDS[args.command](cfg, data, seed, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2, None
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None

    doc = ReportDocument(
        command=args.command,
        result=result,
        config=cfg.raw,
        config_digest=file_digest(args.config),
        data_digest=file_digest(args.data) if args.data else None,
        seed=seed,
    )

    out_path = args.out or cfg.report_path
    if out_path:
        try:
            emit_report(doc, out_path)
        except OSError as exc:
            print(f"report error: {exc}", file=sys.stderr)
            return 2, doc
        print(f"{args.command}: exit {code}, report written to {out_path}")
    else:
        sys.stdout.write(canonical_json(doc))
    return code, doc


def main(argv=None) -> int:
    code, _ = run_command(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
