"""Scenario CSV ingestion and the flat key-value run configuration.

The data format is long-form CSV with header ``scenario,value``, one
observation per row; rows are grouped into blocks by scenario id in order
of first appearance, so scenarios of unequal size are natural. The config
format is a flat file of dotted ``key = value`` lines with the full key
list enumerated in KNOWN_KEYS; unknown keys are rejected rather than
ignored.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lossrisk.core import PortfolioSample
from lossrisk.duality import ConjugationParams, PenaltyGrid, default_resolution
from lossrisk.statistics import (
    RiskStatistic,
    entropic_loss,
    gain_leaking,
    inverted_loss,
    penalized_statistic,
    weighted_loss,
    worst_scenario,
)

__all__ = [
    "ScenarioFileError",
    "ConfigError",
    "load_scenario_csv",
    "dump_scenario_csv",
    "RunConfig",
    "StatisticSpec",
    "load_config",
    "parse_config_text",
    "build_statistic",
    "KNOWN_KEYS",
]


class ScenarioFileError(ValueError):
    """CSV ingestion failure with a machine-readable code and line number."""

    def __init__(self, code: str, message: str, line: int | None = None):
        self.code = code
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{code}: {message}{where}")


class ConfigError(ValueError):
    """Configuration failure with the offending key attached."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message if key is None else f"{key}: {message}")


def load_scenario_csv(path) -> PortfolioSample:
    """Read a ``scenario,value`` CSV into a block-partitioned sample.

    Blocks follow first appearance of each scenario id; within a block the
    row order is preserved.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ScenarioFileError("empty_file", f"{path} has no content") from None
        if [c.strip().lower() for c in header] != ["scenario", "value"]:
            raise ScenarioFileError(
                "missing_header",
                f"expected header 'scenario,value', got {','.join(header)!r}",
                line=1,
            )

        groups: dict[str, list[float]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != 2:
                raise ScenarioFileError(
                    "bad_row", f"expected 2 fields, got {len(row)}", line=line_no
                )
            scenario = row[0].strip()
            if not scenario:
                raise ScenarioFileError(
                    "empty_scenario", "scenario id must be nonempty", line=line_no
                )
            try:
                value = float(row[1])
            except ValueError:
                raise ScenarioFileError(
                    "bad_value", f"could not parse value {row[1]!r}", line=line_no
                ) from None
            if not math.isfinite(value):
                raise ScenarioFileError(
                    "nonfinite_value", f"value {row[1]!r} is not finite", line=line_no
                )
            groups.setdefault(scenario, []).append(value)

    if not groups:
        raise ScenarioFileError("empty_file", f"{path} has a header but no rows")

    values = np.concatenate([np.asarray(v, dtype=np.float64) for v in groups.values()])
    partition = tuple(len(v) for v in groups.values())
    return PortfolioSample(values, partition, tuple(groups.keys()))


def dump_scenario_csv(sample: PortfolioSample, path) -> None:
    """Write a sample back out in the same long-form CSV layout."""
    path = Path(path)
    labels = sample.labels or tuple(f"s{i + 1}" for i in range(sample.num_scenarios))
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario", "value"])
        for label, block in zip(labels, sample.block_slices()):
            for v in sample.values[block]:
                writer.writerow([label, repr(float(v))])


# ---------------------------------------------------------------------------
# Run configuration


KNOWN_KEYS = {
    "statistic.kind",
    "statistic.weights",
    "statistic.partition",
    "statistic.penalty_table",
    "statistic.p",
    "statistic.beta",
    "duality.resolution",
    "duality.box_bound",
    "duality.initial_resolution",
    "duality.refinement_rounds",
    "duality.ascent_budget",
    "duality.divergence_threshold",
    "duality.check_samples",
    "duality.rel_tol",
    "duality.sample_range",
    "duality.zero_tol",
    "duality.infinity_threshold",
    "axioms.samples",
    "axioms.component_range",
    "axioms.cash_max",
    "axioms.tolerance",
    "normalization.epsilons",
    "normalization.mode",
    "lift.check_samples",
    "lift.num_anchors",
    "lift.tolerance",
    "report.path",
    "run.seed",
}

STATISTIC_KINDS = (
    "weighted_loss",
    "worst_scenario",
    "penalized",
    "entropic",
    "gain_leaking",
    "inverted_loss",
)


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a flat dict; rejects unknown keys."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown configuration key", key=key)
        if key in out:
            raise ConfigError("duplicate configuration key", key=key)
        out[key] = value
    return out


def _floats(value: str, key: str) -> tuple:
    parts = [p for p in value.replace(",", " ").split() if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"could not parse float list {value!r}", key=key) from exc


def _int(raw: dict, key: str, default: int) -> int:
    if key not in raw:
        return default
    try:
        return int(raw[key])
    except ValueError as exc:
        raise ConfigError(f"could not parse integer {raw[key]!r}", key=key) from exc


def _float(raw: dict, key: str, default: float) -> float:
    if key not in raw:
        return default
    try:
        return float(raw[key])
    except ValueError as exc:
        raise ConfigError(f"could not parse number {raw[key]!r}", key=key) from exc


def _penalty_table(value: str, key: str) -> tuple:
    entries = []
    for chunk in value.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(
                f"penalty entry {chunk!r} must look like 'q1 q2 : alpha'", key=key
            )
        q_part, alpha_part = chunk.rsplit(":", 1)
        q = _floats(q_part, key)
        alpha_part = alpha_part.strip()
        if alpha_part == "inf":
            entries.append((q, "inf"))
        else:
            try:
                entries.append((q, float(alpha_part)))
            except ValueError as exc:
                raise ConfigError(
                    f"could not parse penalty {alpha_part!r}", key=key
                ) from exc
    if not entries:
        raise ConfigError("penalty table is empty", key=key)
    widths = {len(q) for q, _ in entries}
    if len(widths) != 1:
        raise ConfigError("penalty entries have mixed dimensions", key=key)
    return tuple(entries)


@dataclass(frozen=True)
class StatisticSpec:
    kind: str
    weights: tuple | None = None
    partition: str | tuple = "data"
    penalty_table: tuple | None = None
    p: tuple | None = None
    beta: float | None = None

    def dimension(self, data: PortfolioSample | None) -> int:
        if self.kind in ("weighted_loss", "gain_leaking", "inverted_loss"):
            return len(self.weights)
        if self.kind == "worst_scenario":
            if self.partition == "data":
                if data is None:
                    raise ConfigError(
                        "worst_scenario with partition 'data' needs --data",
                        key="statistic.partition",
                    )
                return data.dimension
            return sum(self.partition)
        if self.kind == "penalized":
            return len(self.penalty_table[0][0])
        if self.kind == "entropic":
            return len(self.p)
        raise ConfigError(f"unknown statistic kind {self.kind!r}", key="statistic.kind")


@dataclass(frozen=True)
class RunConfig:
    statistic: StatisticSpec
    conjugation: ConjugationParams
    resolution: int | None
    check_samples: int
    rel_tol: float
    sample_range: float
    zero_tol: float
    infinity_threshold: float
    axiom_samples: int
    axiom_component_range: float
    axiom_cash_max: float
    axiom_tolerance: float
    normalization_epsilons: tuple
    normalization_mode: str
    lift_check_samples: int
    lift_num_anchors: int
    lift_tolerance: float
    report_path: str | None
    seed: int
    raw: dict = field(default_factory=dict)

    def weight_resolution(self, n: int) -> int:
        return self.resolution if self.resolution is not None else default_resolution(n)


def _statistic_spec(raw: dict) -> StatisticSpec:
    if "statistic.kind" not in raw:
        raise ConfigError("missing required key", key="statistic.kind")
    kind = raw["statistic.kind"]
    if kind not in STATISTIC_KINDS:
        raise ConfigError(
            f"unknown kind {kind!r}; expected one of {', '.join(STATISTIC_KINDS)}",
            key="statistic.kind",
        )

    weights = partition = table = p = beta = None
    partition = raw.get("statistic.partition", "data")
    if partition != "data":
        ints = _floats(partition, "statistic.partition")
        if any(x != int(x) or x < 1 for x in ints):
            raise ConfigError(
                f"partition must be positive integers, got {partition!r}",
                key="statistic.partition",
            )
        partition = tuple(int(x) for x in ints)

    if kind in ("weighted_loss", "gain_leaking", "inverted_loss"):
        if "statistic.weights" not in raw:
            raise ConfigError("missing required key", key="statistic.weights")
        weights = _floats(raw["statistic.weights"], "statistic.weights")
    elif kind == "penalized":
        if "statistic.penalty_table" not in raw:
            raise ConfigError("missing required key", key="statistic.penalty_table")
        table = _penalty_table(raw["statistic.penalty_table"], "statistic.penalty_table")
    elif kind == "entropic":
        for need in ("statistic.p", "statistic.beta"):
            if need not in raw:
                raise ConfigError("missing required key", key=need)
        p = _floats(raw["statistic.p"], "statistic.p")
        beta = _float(raw, "statistic.beta", 1.0)

    return StatisticSpec(
        kind=kind, weights=weights, partition=partition, penalty_table=table, p=p, beta=beta
    )


def parse_run_config(raw: dict) -> RunConfig:
    spec = _statistic_spec(raw)
    try:
        conjugation = ConjugationParams(
            box_bound=_float(raw, "duality.box_bound", 100.0),
            initial_resolution=_int(raw, "duality.initial_resolution", 9),
            refinement_rounds=_int(raw, "duality.refinement_rounds", 2),
            ascent_budget=_int(raw, "duality.ascent_budget", 40),
            divergence_threshold=_float(raw, "duality.divergence_threshold", 1e6),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), key="duality") from exc

    mode = raw.get("normalization.mode", "both")
    if mode not in ("literal", "derived", "both"):
        raise ConfigError(f"unknown mode {mode!r}", key="normalization.mode")

    resolution = _int(raw, "duality.resolution", 0) or None
    if resolution is not None and resolution < 1:
        raise ConfigError("resolution must be >= 1", key="duality.resolution")

    return RunConfig(
        statistic=spec,
        conjugation=conjugation,
        resolution=resolution,
        check_samples=_int(raw, "duality.check_samples", 100),
        rel_tol=_float(raw, "duality.rel_tol", 0.02),
        sample_range=_float(raw, "duality.sample_range", 10.0),
        zero_tol=_float(raw, "duality.zero_tol", 1e-6),
        infinity_threshold=_float(raw, "duality.infinity_threshold", 1e6),
        axiom_samples=_int(raw, "axioms.samples", 1000),
        axiom_component_range=_float(raw, "axioms.component_range", 10.0),
        axiom_cash_max=_float(raw, "axioms.cash_max", 5.0),
        axiom_tolerance=_float(raw, "axioms.tolerance", 1e-9),
        normalization_epsilons=_floats(raw.get("normalization.epsilons", ""), "normalization.epsilons"),
        normalization_mode=mode,
        lift_check_samples=_int(raw, "lift.check_samples", 1000),
        lift_num_anchors=_int(raw, "lift.num_anchors", 10),
        lift_tolerance=_float(raw, "lift.tolerance", 1e-9),
        report_path=raw.get("report.path"),
        seed=_int(raw, "run.seed", 0),
        raw=dict(raw),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"could not read config {path}: {exc}") from exc
    return parse_run_config(parse_config_text(text))


def build_statistic(spec: StatisticSpec, data: PortfolioSample | None) -> RiskStatistic:
    """Instantiate the configured statistic, resolving 'data' partitions."""
    try:
        if spec.kind == "weighted_loss":
            return weighted_loss(spec.weights)
        if spec.kind == "gain_leaking":
            return gain_leaking(spec.weights)
        if spec.kind == "inverted_loss":
            return inverted_loss(spec.weights)
        if spec.kind == "entropic":
            return entropic_loss(spec.p, spec.beta)
        if spec.kind == "penalized":
            grid = PenaltyGrid(tuple(spec.penalty_table), {"source": "config"})
            return penalized_statistic(grid)
        if spec.kind == "worst_scenario":
            if spec.partition == "data":
                if data is None:
                    raise ConfigError(
                        "worst_scenario with partition 'data' needs --data",
                        key="statistic.partition",
                    )
                return worst_scenario(data.partition, data.labels)
            return worst_scenario(spec.partition)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), key="statistic") from exc
    raise ConfigError(f"unknown statistic kind {spec.kind!r}", key="statistic.kind")
