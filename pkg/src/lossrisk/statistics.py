"""Built-in loss-based risk statistics and the cash-additivity transforms.

Every statistic is a pure function of the observation vector, vectorized
over leading axes so that batch evaluation (used heavily by the dual-side
numerics) costs one numpy call. Claims attached to a statistic are
declarations to be verified by the axiom engine, never assumptions used
by any computation here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Iterator

import numpy as np
from scipy.special import logsumexp

from lossrisk.core import PortfolioSample

if TYPE_CHECKING:
    from lossrisk.duality import PenaltyGrid

__all__ = [
    "CLAIMS",
    "RiskStatistic",
    "TransformRecord",
    "CashLossAdditivityReport",
    "weighted_loss",
    "worst_scenario",
    "worst_block_index",
    "penalized_statistic",
    "entropic_loss",
    "regulator_version",
    "cash_additive_lift",
    "default_anchor",
    "check_cash_loss_additivity",
    "sample_loss_shifts",
    "gain_leaking",
    "inverted_loss",
]

CLAIMS = frozenset(
    {
        "convex",
        "coherent",
        "cash_loss_additive",
        "cash_additive",
        "loss_dependent",
        "monotone",
    }
)

# Mass/weight equality threshold for auto-derived claims.
WEIGHT_MASS_TOL = 1e-12


@dataclass(frozen=True)
class TransformRecord:
    """Provenance of a statistic produced by one of the two transforms."""

    source: str
    direction: str  # "regulator_version" | "cash_additive_lift"
    anchor_rule: str | None = None

    def __post_init__(self):
        if self.direction not in ("regulator_version", "cash_additive_lift"):
            raise ValueError(f"unknown transform direction {self.direction!r}")

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "direction": self.direction,
            "anchor_rule": self.anchor_rule,
        }


@dataclass(frozen=True)
class RiskStatistic:
    """A named functional on observation vectors of a fixed dimension.

    Attributes:
        name: identifier used in reports.
        fn: vectorized evaluator; maps arrays of shape (..., N) to (...).
        dimension: declared N.
        claims: subset of CLAIMS, to be certified or refuted by the axiom
            engine.
        partition: required block structure, or None when the statistic is
            partition-agnostic.
        derived_from: transform provenance, when applicable.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    dimension: int
    claims: frozenset
    partition: tuple[int, ...] | None = None
    derived_from: TransformRecord | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        unknown = set(self.claims) - CLAIMS
        if unknown:
            raise ValueError(f"unknown claims: {sorted(unknown)}")
        object.__setattr__(self, "claims", frozenset(self.claims))
        if self.partition is not None:
            object.__setattr__(self, "partition", tuple(int(n) for n in self.partition))

    def claims_to(self, claim: str) -> bool:
        return claim in self.claims

    def evaluate(self, sample: PortfolioSample) -> float:
        if sample.dimension != self.dimension:
            raise ValueError(
                f"{self.name} expects dimension {self.dimension}, "
                f"got {sample.dimension}"
            )
        if self.partition is not None and sample.partition != self.partition:
            raise ValueError(
                f"{self.name} expects partition {self.partition}, "
                f"got {sample.partition}"
            )
        return float(self.fn(sample.values))


def _weights(weights, who: str) -> np.ndarray:
    w = np.array(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise ValueError(f"{who}: weights must be a nonempty vector")
    if not np.isfinite(w).all():
        raise ValueError(f"{who}: weights must be finite")
    return w


def weighted_loss(weights) -> RiskStatistic:
    """Linear charge on the loss part: sum of w_i * (-min(X_i, 0)).

    Weights must be nonnegative with total mass at most 1. The statistic
    is flagged cash-loss-additive exactly when the mass equals 1.
    """
    w = _weights(weights, "weighted_loss")
    if (w < 0).any():
        raise ValueError("weighted_loss: negative weights are not allowed")
    if w.sum() > 1.0 + WEIGHT_MASS_TOL:
        raise ValueError(f"weighted_loss: total weight {w.sum()} exceeds 1")
    w = w.copy()
    w.flags.writeable = False

    claims = {"convex", "coherent", "loss_dependent"}
    if abs(w.sum() - 1.0) <= WEIGHT_MASS_TOL:
        claims.add("cash_loss_additive")

    def fn(values: np.ndarray) -> np.ndarray:
        return -(np.minimum(values, 0.0) @ w)

    return RiskStatistic("weighted_loss", fn, w.size, frozenset(claims))


def worst_scenario(partition, labels=None) -> RiskStatistic:
    """Worst average loss across scenario blocks.

    For each block h the statistic averages -min(X_i, 0) over the block and
    returns the largest block average.
    """
    sizes = np.array([int(n) for n in partition], dtype=np.int64)
    if sizes.size < 1 or (sizes < 1).any():
        raise ValueError(f"worst_scenario: invalid partition {tuple(partition)}")
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    dim = int(sizes.sum())

    def fn(values: np.ndarray) -> np.ndarray:
        losses = np.minimum(values, 0.0)
        block_means = np.add.reduceat(losses, offsets, axis=-1) / sizes
        return -block_means.min(axis=-1)

    return RiskStatistic(
        "worst_scenario",
        fn,
        dim,
        frozenset({"convex", "coherent", "loss_dependent", "cash_loss_additive"}),
        partition=tuple(int(n) for n in sizes),
    )


def worst_block_index(partition, values) -> int:
    """Index of the block attaining the worst average loss (first wins on ties)."""
    sizes = np.asarray(partition, dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    losses = np.minimum(np.asarray(values, dtype=np.float64), 0.0)
    block_means = np.add.reduceat(losses, offsets) / sizes
    return int(np.argmin(block_means))


def penalized_statistic(grid: "PenaltyGrid") -> RiskStatistic:
    """Best penalty-adjusted weighted loss over a finite table of weights.

    Evaluates max over table entries with finite penalty of
    sum(Q_i * (-min(X_i, 0))) - penalty(Q). The result is the attained
    maximum; no clamping is applied.
    """
    if not grid.points:
        raise ValueError("penalized_statistic: empty grid")
    finite = grid.finite_mask
    if not finite.any():
        raise ValueError("penalized_statistic: empty effective domain (all penalties infinite)")
    for wv, _ in grid.points:
        if not wv.nonnegative or not wv.sub_unit_mass:
            raise ValueError(
                "penalized_statistic: grid weights must be nonnegative with mass <= 1"
            )

    qmat = grid.weights_matrix[finite]
    alphas = grid.alpha_array[finite]
    qmat.flags.writeable = False
    alphas.flags.writeable = False

    claims = {"convex", "loss_dependent"}
    if (np.abs(alphas) <= WEIGHT_MASS_TOL).all():
        claims.add("coherent")

    def fn(values: np.ndarray) -> np.ndarray:
        scores = -(np.minimum(values, 0.0) @ qmat.T) - alphas
        return scores.max(axis=-1)

    return RiskStatistic("penalized_statistic", fn, grid.dimension, frozenset(claims))


def entropic_loss(p, beta: float) -> RiskStatistic:
    """Exponential-average loss statistic: log-mean-exp of losses at rate beta.

    Not positively homogeneous; built to exercise the convex-but-not-coherent
    branch of the checkers. Exponents are evaluated relative to their maximum,
    so large losses do not overflow.
    """
    probs = _weights(p, "entropic_loss")
    if (probs < 0).any():
        raise ValueError("entropic_loss: probabilities must be nonnegative")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"entropic_loss: probabilities sum to {probs.sum()}, expected 1")
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError(f"entropic_loss: beta must be positive, got {beta}")
    probs = probs.copy()
    probs.flags.writeable = False
    beta = float(beta)

    def fn(values: np.ndarray) -> np.ndarray:
        z = -beta * np.minimum(values, 0.0)
        return logsumexp(z, b=probs, axis=-1) / beta

    return RiskStatistic(
        "entropic_loss",
        fn,
        probs.size,
        frozenset({"convex", "loss_dependent", "cash_loss_additive"}),
    )


def regulator_version(rho_bar: RiskStatistic) -> RiskStatistic:
    """Loss-only version of a statistic: evaluate it on the loss part.

    The output reads only min(X_i, 0), so it is loss-dependent by
    construction; convexity and coherence carry over from the source.
    """

    def fn(values: np.ndarray) -> np.ndarray:
        return rho_bar.fn(np.minimum(values, 0.0))

    claims = frozenset({"loss_dependent"}) | (rho_bar.claims & {"convex", "coherent"})
    return RiskStatistic(
        f"regulator_version({rho_bar.name})",
        fn,
        rho_bar.dimension,
        claims,
        partition=rho_bar.partition,
        derived_from=TransformRecord(rho_bar.name, "regulator_version"),
    )


def default_anchor(values: np.ndarray) -> np.ndarray:
    """Componentwise upper bound used by the lift: max(0, max_i X_i)."""
    return np.asarray(np.maximum(np.max(values, axis=-1), 0.0))


def cash_additive_lift(rho: RiskStatistic, anchor_rule=None) -> RiskStatistic:
    """Recover a cash-additive statistic from a loss-based one.

    Shifts the data below zero by an anchor (an upper bound of the
    components, clamped at zero by default) and corrects by the anchor:
    output(M) = rho(M - anchor * 1) - anchor.

    The result is anchor-independent only when ``rho`` is cash-loss
    additive; this function does not verify that — run
    check_cash_loss_additivity first.
    """
    anchor = anchor_rule if anchor_rule is not None else default_anchor
    rule_name = getattr(anchor, "__name__", "custom")

    def fn(values: np.ndarray) -> np.ndarray:
        a = np.asarray(anchor(values), dtype=np.float64)
        return rho.fn(values - a[..., None]) - a

    claims = frozenset({"cash_additive", "monotone"}) | (rho.claims & {"convex"})
    return RiskStatistic(
        f"cash_additive_lift({rho.name})",
        fn,
        rho.dimension,
        claims,
        partition=rho.partition,
        derived_from=TransformRecord(rho.name, "cash_additive_lift", rule_name),
    )


@dataclass(frozen=True)
class CashLossAdditivityReport:
    """Outcome of sampling the shift identity rho(M - a1) = rho(M) + a."""

    statistic: str
    passed: bool
    max_residual: float
    samples_used: int
    tolerance: float
    counterexample: dict | None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "passed": self.passed,
            "max_residual": self.max_residual,
            "samples_used": self.samples_used,
            "tolerance": self.tolerance,
            "counterexample": self.counterexample,
        }


def check_cash_loss_additivity(
    rho: RiskStatistic, samples: Iterable, tol: float = 1e-9
) -> CashLossAdditivityReport:
    """Test rho(M - a1) = rho(M) + a over sampled nonpositive M and a >= 0.

    ``samples`` yields (sample, a) pairs where sample is a PortfolioSample
    or plain vector with all components <= 0 and a >= 0. Returns the worst
    absolute residual and, on failure, the pair attaining it.
    """
    worst = 0.0
    worst_pair = None
    count = 0
    for idx, (m, a) in enumerate(samples):
        values = m.values if isinstance(m, PortfolioSample) else np.asarray(m, np.float64)
        a = float(a)
        if (values > 0).any() or a < 0:
            raise ValueError(
                f"sample {idx}: shift identity requires M <= 0 and a >= 0"
            )
        residual = abs(float(rho.fn(values - a)) - float(rho.fn(values)) - a)
        if residual > worst:
            worst = residual
            worst_pair = (values, a, residual)
        count += 1

    passed = worst <= tol
    counterexample = None
    if not passed and worst_pair is not None:
        values, a, residual = worst_pair
        counterexample = {"values": values.tolist(), "a": a, "residual": residual}
    return CashLossAdditivityReport(
        statistic=rho.name,
        passed=passed,
        max_residual=worst,
        samples_used=count,
        tolerance=tol,
        counterexample=counterexample,
    )


def sample_loss_shifts(
    dimension: int,
    partition=(),
    count: int = 1000,
    seed: int = 0,
    component_range: float = 10.0,
    cash_max: float = 5.0,
) -> Iterator[tuple[PortfolioSample, float]]:
    """Deterministic stream of (nonpositive sample, nonnegative shift) pairs."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        values = -rng.uniform(0.0, component_range, size=dimension)
        a = float(rng.uniform(0.0, cash_max))
        yield PortfolioSample(values, partition), a


# Adversarial fixtures. These deliberately violate one axiom each and exist
# so the checkers can be shown to catch real defects.


def gain_leaking(weights) -> RiskStatistic:
    """Linear charge on the raw data, without loss truncation.

    Positive components leak into the value, so the loss-dependence claim
    carried here is false and must be refuted by the axiom engine.
    """
    w = _weights(weights, "gain_leaking")
    if (w < 0).any() or w.sum() > 1.0 + WEIGHT_MASS_TOL:
        raise ValueError("gain_leaking: weights must be nonnegative with mass <= 1")
    w = w.copy()
    w.flags.writeable = False

    def fn(values: np.ndarray) -> np.ndarray:
        return -(values @ w)

    return RiskStatistic(
        "gain_leaking", fn, w.size, frozenset({"convex", "coherent", "loss_dependent"})
    )


def inverted_loss(weights) -> RiskStatistic:
    """Sign-flipped loss charge: rewards losses instead of charging them.

    Ordered inputs come out with the wrong ordering, so the monotonicity
    check must fail on this fixture.
    """
    w = _weights(weights, "inverted_loss")
    if (w < 0).any():
        raise ValueError("inverted_loss: weights must be nonnegative")
    w = w.copy()
    w.flags.writeable = False

    def fn(values: np.ndarray) -> np.ndarray:
        return np.minimum(values, 0.0) @ w

    return RiskStatistic("inverted_loss", fn, w.size, frozenset({"loss_dependent"}))
