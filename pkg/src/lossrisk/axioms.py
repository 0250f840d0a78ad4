"""Sampling-based certification of the loss-statistic axioms.

Each axiom quantifies over all data vectors, so a pass here is statistical
evidence at a reported sample count while a fail is definitive: every
failure carries a concrete counterexample whose residual can be reproduced
by re-evaluating the statistic on the stored inputs.

Sampling is fully deterministic: the per-axiom random stream is derived
from the spec seed and the axiom's position, so identical inputs produce
byte-identical reports and parallel per-axiom execution cannot change the
outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from lossrisk.statistics import RiskStatistic

__all__ = [
    "AxiomId",
    "SamplerSpec",
    "AxiomCheckResult",
    "AxiomReport",
    "check_axiom",
    "run_suite",
]


class AxiomId(Enum):
    A1_NORMALIZATION = "A1_normalization"
    A2_MONOTONICITY = "A2_monotonicity"
    A3_LOSS_DEPENDENCE = "A3_loss_dependence"
    A4_CONVEXITY = "A4_convexity"
    A5_POSITIVE_HOMOGENEITY = "A5_positive_homogeneity"

    @property
    def stream_index(self) -> int:
        return list(AxiomId).index(self)


@dataclass(frozen=True)
class SamplerSpec:
    """Deterministic sampling plan shared by all axiom checks.

    Components are drawn uniformly from [-component_range, component_range],
    cash shifts from [0, cash_max] (zero always included), homogeneity
    scales log-uniformly from scale_range with 0 and 1 always included,
    and convex-combination weights uniformly from [0, 1).
    """

    dimension: int
    partition: tuple = ()
    samples: int = 1000
    seed: int = 0
    component_range: float = 10.0
    cash_max: float = 5.0
    scale_range: tuple = (1e-3, 1e3)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.component_range <= 0 or self.cash_max < 0:
            raise ValueError("component_range must be > 0 and cash_max >= 0")
        lo, hi = self.scale_range
        if not (0 < lo <= hi):
            raise ValueError(f"invalid scale range {self.scale_range}")
        partition = tuple(int(n) for n in self.partition)
        if partition and sum(partition) != self.dimension:
            raise ValueError(
                f"partition {partition} does not sum to dimension {self.dimension}"
            )
        object.__setattr__(self, "partition", partition)

    def rng_for(self, axiom: "AxiomId") -> np.random.Generator:
        return np.random.default_rng([int(self.seed), axiom.stream_index])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "partition": list(self.partition),
            "samples": self.samples,
            "seed": self.seed,
            "component_range": self.component_range,
            "cash_max": self.cash_max,
            "scale_range": list(self.scale_range),
        }


@dataclass(frozen=True)
class AxiomCheckResult:
    axiom: str
    verdict: str  # "pass" | "fail" | "not_applicable"
    residual: float
    tolerance: float
    samples_used: int
    counterexample: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "samples_used": self.samples_used,
            "counterexample": self.counterexample,
            "error": self.error,
        }


@dataclass(frozen=True)
class AxiomReport:
    statistic: str
    spec: SamplerSpec
    tolerance: float
    entries: tuple
    verdict: str  # "coherent regulator-based" | "convex regulator-based" | "fail"

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def entry(self, axiom: AxiomId) -> AxiomCheckResult:
        for e in self.entries:
            if e.axiom == axiom.value:
                return e
        raise KeyError(axiom)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "sampler": self.spec.to_dict(),
            "tolerance": self.tolerance,
            "entries": [e.to_dict() for e in self.entries],
            "verdict": self.verdict,
        }


def _ineq_tol(tol: float, lhs, rhs):
    return tol * (1.0 + np.abs(lhs) + np.abs(rhs))


def _check_normalization(rho, spec, tol, rng) -> AxiomCheckResult:
    n = spec.dimension
    k = spec.samples
    extra = rng.uniform(0.0, spec.cash_max, size=max(k - 2, 0))
    amounts = np.concatenate(([0.0, spec.cash_max], extra))
    cash_rows = -amounts[:, None] * np.ones(n)
    risks = np.atleast_1d(rho.fn(cash_rows))
    residuals = np.abs(risks - amounts)
    worst = int(np.argmax(residuals))
    residual = float(residuals[worst])

    counterexample = None
    verdict = "pass"
    if residual > tol:
        verdict = "fail"
        counterexample = {
            "kind": "cash_loss",
            "a": float(amounts[worst]),
            "rho": float(risks[worst]),
            "residual": residual,
        }

    # Codomain sweep: the definition maps into [0, +inf), so any negative
    # evaluation on sampled data is reported here as well.
    data = rng.uniform(-spec.component_range, spec.component_range, size=(k, n))
    values = np.atleast_1d(rho.fn(data))
    negatives = values < -tol
    if negatives.any():
        j = int(np.argmin(values))
        verdict = "fail"
        if counterexample is None or -float(values[j]) > residual:
            residual = max(residual, -float(values[j]))
            counterexample = {
                "kind": "codomain",
                "values": data[j].tolist(),
                "rho": float(values[j]),
                "residual": -float(values[j]),
            }
    return AxiomCheckResult(
        AxiomId.A1_NORMALIZATION.value,
        verdict,
        residual,
        tol,
        int(amounts.size + k),
        counterexample,
    )


def _check_monotonicity(rho, spec, tol, rng) -> AxiomCheckResult:
    n = spec.dimension
    k = spec.samples
    m1 = rng.uniform(-spec.component_range, spec.component_range, size=(k, n))
    bump = rng.uniform(0.0, spec.component_range, size=(k, n))
    sparse_rows = rng.random(k) < 0.5
    keep = rng.random((k, n)) < 0.5
    bump[sparse_rows] *= keep[sparse_rows]
    m2 = m1 + bump

    r1 = np.atleast_1d(rho.fn(m1))
    r2 = np.atleast_1d(rho.fn(m2))
    # Larger data vectors must not carry larger risk.
    gaps = r2 - r1
    worst = int(np.argmax(gaps))
    residual = float(max(gaps[worst], 0.0))
    violated = gaps > _ineq_tol(tol, r1, r2)

    counterexample = None
    if violated.any():
        counterexample = {
            "m1": m1[worst].tolist(),
            "m2": m2[worst].tolist(),
            "rho_m1": float(r1[worst]),
            "rho_m2": float(r2[worst]),
            "residual": residual,
        }
    return AxiomCheckResult(
        AxiomId.A2_MONOTONICITY.value,
        "fail" if violated.any() else "pass",
        residual,
        tol,
        k,
        counterexample,
    )


def _check_loss_dependence(rho, spec, tol, rng) -> AxiomCheckResult:
    n = spec.dimension
    k = spec.samples
    data = rng.uniform(-spec.component_range, spec.component_range, size=(k, n))
    data[0] = np.abs(data[0])  # force gains into the stream
    direct = np.atleast_1d(rho.fn(data))
    truncated = np.atleast_1d(rho.fn(np.minimum(data, 0.0)))
    residuals = np.abs(direct - truncated)
    worst = int(np.argmax(residuals))
    residual = float(residuals[worst])

    counterexample = None
    if residual > tol:
        counterexample = {
            "values": data[worst].tolist(),
            "rho": float(direct[worst]),
            "rho_loss_part": float(truncated[worst]),
            "residual": residual,
        }
    return AxiomCheckResult(
        AxiomId.A3_LOSS_DEPENDENCE.value,
        "fail" if residual > tol else "pass",
        residual,
        tol,
        k,
        counterexample,
    )


def _check_convexity(rho, spec, tol, rng) -> AxiomCheckResult:
    n = spec.dimension
    k = spec.samples
    m1 = rng.uniform(-spec.component_range, spec.component_range, size=(k, n))
    m2 = rng.uniform(-spec.component_range, spec.component_range, size=(k, n))
    lam = rng.uniform(0.0, 1.0, size=k)

    mixed = lam[:, None] * m1 + (1.0 - lam)[:, None] * m2
    lhs = np.atleast_1d(rho.fn(mixed))
    rhs = lam * np.atleast_1d(rho.fn(m1)) + (1.0 - lam) * np.atleast_1d(rho.fn(m2))
    gaps = lhs - rhs
    worst = int(np.argmax(gaps))
    residual = float(max(gaps[worst], 0.0))
    violated = gaps > _ineq_tol(tol, lhs, rhs)

    counterexample = None
    if violated.any():
        counterexample = {
            "m1": m1[worst].tolist(),
            "m2": m2[worst].tolist(),
            "lambda": float(lam[worst]),
            "lhs": float(lhs[worst]),
            "rhs": float(rhs[worst]),
            "residual": residual,
        }
    return AxiomCheckResult(
        AxiomId.A4_CONVEXITY.value,
        "fail" if violated.any() else "pass",
        residual,
        tol,
        k,
        counterexample,
    )


def _check_positive_homogeneity(rho, spec, tol, rng) -> AxiomCheckResult:
    n = spec.dimension
    k = spec.samples
    lo, hi = spec.scale_range
    drawn = np.exp(rng.uniform(np.log(lo), np.log(hi), size=max(k - 2, 0)))
    scales = np.concatenate(([0.0, 1.0], drawn))  # exactness anchors first
    data = rng.uniform(-spec.component_range, spec.component_range, size=(scales.size, n))

    scaled_eval = np.atleast_1d(rho.fn(scales[:, None] * data))
    eval_scaled = scales * np.atleast_1d(rho.fn(data))
    residuals = np.abs(scaled_eval - eval_scaled) / (1.0 + np.abs(eval_scaled))
    worst = int(np.argmax(residuals))
    residual = float(residuals[worst])

    counterexample = None
    if residual > tol:
        counterexample = {
            "scale": float(scales[worst]),
            "values": data[worst].tolist(),
            "rho_scaled_input": float(scaled_eval[worst]),
            "scaled_rho": float(eval_scaled[worst]),
            "residual": residual,
        }
    return AxiomCheckResult(
        AxiomId.A5_POSITIVE_HOMOGENEITY.value,
        "fail" if residual > tol else "pass",
        residual,
        tol,
        int(scales.size),
        counterexample,
    )


_CHECKS = {
    AxiomId.A1_NORMALIZATION: _check_normalization,
    AxiomId.A2_MONOTONICITY: _check_monotonicity,
    AxiomId.A3_LOSS_DEPENDENCE: _check_loss_dependence,
    AxiomId.A4_CONVEXITY: _check_convexity,
    AxiomId.A5_POSITIVE_HOMOGENEITY: _check_positive_homogeneity,
}


def check_axiom(
    rho: RiskStatistic, axiom: AxiomId, spec: SamplerSpec, tol: float = 1e-9
) -> AxiomCheckResult:
    """Run one axiom check; evaluation failures land in the result, not raise."""
    if spec.dimension != rho.dimension:
        raise ValueError(
            f"sampler dimension {spec.dimension} does not match "
            f"{rho.name} dimension {rho.dimension}"
        )
    rng = spec.rng_for(axiom)
    try:
        return _CHECKS[axiom](rho, spec, tol, rng)
    except Exception as exc:  # noqa: BLE001 - recorded, not propagated
        return AxiomCheckResult(
            axiom.value, "fail", float("nan"), tol, 0, None, error=str(exc)
        )


def run_suite(rho: RiskStatistic, spec: SamplerSpec, tol: float = 1e-9) -> AxiomReport:
    """Check the four convexity-class axioms, plus homogeneity when claimed.

    The verdict is "convex regulator-based" when the first four pass,
    upgraded to "coherent regulator-based" when the statistic claims
    coherence and the homogeneity check passes too.
    """
    entries = []
    for axiom in (
        AxiomId.A1_NORMALIZATION,
        AxiomId.A2_MONOTONICITY,
        AxiomId.A3_LOSS_DEPENDENCE,
        AxiomId.A4_CONVEXITY,
    ):
        entries.append(check_axiom(rho, axiom, spec, tol))

    if rho.claims_to("coherent"):
        entries.append(check_axiom(rho, AxiomId.A5_POSITIVE_HOMOGENEITY, spec, tol))
    else:
        entries.append(
            AxiomCheckResult(
                AxiomId.A5_POSITIVE_HOMOGENEITY.value,
                "not_applicable",
                0.0,
                tol,
                0,
            )
        )

    convex_ok = all(e.verdict == "pass" for e in entries[:4])
    homogeneity = entries[4]
    if convex_ok and homogeneity.verdict == "pass":
        verdict = "coherent regulator-based"
    elif convex_ok:
        verdict = "convex regulator-based"
    else:
        verdict = "fail"
    return AxiomReport(rho.name, spec, tol, tuple(entries), verdict)
