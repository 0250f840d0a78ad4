"""Numerical dual side: minimal penalties, reconstruction, classification.

The minimal penalty of a convex loss-based statistic at a weight point Q is
a supremum over data vectors. For a loss-dependent statistic and Q >= 0 the
supremum can be restricted to the nonpositive orthant (dropping the loss
truncation can only lower the objective there), so it is approximated over
the box [-L, 0]^N: a coarse grid pass picks starting points, coordinate
ascent polishes them (the objective is concave when the statistic is
convex), and the box is doubled twice to separate finite values from
genuinely divergent directions.

Weight points with any negative component are infinite immediately: the
statistic ignores gains, so pushing the matching component upward grows the
objective without bound.  Points with total mass above one diverge along
the constant-vector direction and are caught by the box doubling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator

import numpy as np

from lossrisk.core import ExtendedValue, PortfolioSample, WeightVector

if TYPE_CHECKING:
    from lossrisk.statistics import RiskStatistic

__all__ = [
    "PenaltyGrid",
    "ConjugationParams",
    "DualityReport",
    "ReconstructionResult",
    "weight_grid",
    "default_resolution",
    "alpha_min",
    "conjugate_on_grid",
    "dual_reconstruct",
    "dual_reconstruct_detail",
    "check_normalization_condition",
    "NormalizationReport",
    "classify_coherence",
    "CoherenceClassification",
    "dual_round_trip_report",
    "sample_data_vectors",
]

DEFAULT_MAX_GRID_POINTS = 200_000

# Box-search internals: points per 1-D line pass, interval-refinement passes
# per line search, multi-start count from the coarse grid, and the growth
# test separating finite suprema from divergence under box doubling.
_LINE_POINTS = 33
_LINE_ROUNDS = 3
_N_STARTS = 5
_MAX_BOX_POINTS = 200_000
_GROWTH_FRACTION = 0.1
_GROWTH_FLOOR = 1e-6
_ZERO_FLOOR = 1e-9


@dataclass(frozen=True)
class ConjugationParams:
    """Knobs for the boxed supremum behind the minimal penalty.

    box_bound is the initial half-width L of the search box [-L, 0]^N,
    initial_resolution the coarse points per axis, refinement_rounds the
    number of local re-grid passes around the incumbent, ascent_budget the
    maximum coordinate sweeps, divergence_threshold the value at which the
    supremum is declared infinite.
    """

    box_bound: float = 100.0
    initial_resolution: int = 9
    refinement_rounds: int = 2
    ascent_budget: int = 40
    divergence_threshold: float = 1e6

    def __post_init__(self):
        if not (self.box_bound > 0):
            raise ValueError(f"box_bound must be positive, got {self.box_bound}")
        if self.initial_resolution < 2:
            raise ValueError("initial_resolution must be >= 2")
        if self.refinement_rounds < 0 or self.ascent_budget < 0:
            raise ValueError("refinement_rounds and ascent_budget must be >= 0")
        if not (self.divergence_threshold > 0):
            raise ValueError("divergence_threshold must be positive")

    def to_dict(self) -> dict:
        return {
            "box_bound": self.box_bound,
            "initial_resolution": self.initial_resolution,
            "refinement_rounds": self.refinement_rounds,
            "ascent_budget": self.ascent_budget,
            "divergence_threshold": self.divergence_threshold,
        }


@dataclass(frozen=True)
class PenaltyGrid:
    """A penalty tabulated over a finite set of weight points.

    Finite penalty values must be nonnegative; the infinite label is kept
    explicit and never encoded as a large float.
    """

    points: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = []
        for wv, alpha in self.points:
            if not isinstance(wv, WeightVector):
                wv = WeightVector(np.asarray(wv, dtype=np.float64))
            if not isinstance(alpha, ExtendedValue):
                alpha = (
                    ExtendedValue.infinite()
                    if alpha in ("inf", float("inf"))
                    else ExtendedValue.finite(float(alpha))
                )
            if alpha.is_finite and alpha.value < 0:
                raise ValueError(f"finite penalty must be >= 0, got {alpha.value}")
            pts.append((wv, alpha))
        if not pts:
            raise ValueError("penalty grid must hold at least one point")
        dims = {wv.dimension for wv, _ in pts}
        if len(dims) != 1:
            raise ValueError(f"mixed weight dimensions in grid: {sorted(dims)}")
        object.__setattr__(self, "points", tuple(pts))

        qmat = np.array([wv.q for wv, _ in pts], dtype=np.float64)
        finite = np.array([alpha.is_finite for _, alpha in pts], dtype=bool)
        alphas = np.array(
            [alpha.value if alpha.is_finite else np.inf for _, alpha in pts],
            dtype=np.float64,
        )
        for arr in (qmat, finite, alphas):
            arr.flags.writeable = False
        object.__setattr__(self, "_qmat", qmat)
        object.__setattr__(self, "_finite", finite)
        object.__setattr__(self, "_alphas", alphas)

    @property
    def dimension(self) -> int:
        return self.points[0][0].dimension

    @property
    def weights_matrix(self) -> np.ndarray:
        """All weight points stacked as a (num_points, N) array."""
        return self._qmat

    @property
    def alpha_array(self) -> np.ndarray:
        """Penalty values with +inf standing in for the infinite label."""
        return self._alphas

    @property
    def finite_mask(self) -> np.ndarray:
        return self._finite

    def effective_size(self) -> int:
        return int(self._finite.sum())

    def min_finite_alpha(self) -> float | None:
        if not self._finite.any():
            return None
        return float(self._alphas[self._finite].min())

    def to_dict(self) -> dict:
        return {
            "points": [
                {
                    "q": wv.q.tolist(),
                    "alpha": alpha.value if alpha.is_finite else "inf",
                }
                for wv, alpha in self.points
            ],
            "metadata": self.metadata,
        }


def default_resolution(n: int) -> int:
    """Per-axis weight-grid resolution by dimension; explicit grid above N=8."""
    if n <= 3:
        return 16
    if n <= 6:
        return 8
    if n <= 8:
        return 4
    raise ValueError(
        f"no default weight grid for dimension {n}; pass an explicit grid"
    )


def _lattice(n: int, budget: int) -> Iterator[tuple[int, ...]]:
    point = [0] * n

    def rec(i: int, left: int):
        if i == n:
            yield tuple(point)
            return
        for k in range(left + 1):
            point[i] = k
            yield from rec(i + 1, left - k)
        point[i] = 0

    yield from rec(0, budget)


def weight_grid(
    n: int, resolution: int, max_points: int = DEFAULT_MAX_GRID_POINTS
) -> list[WeightVector]:
    """Lattice over the sub-unit simplex: all Q = k/resolution, sum(k) <= resolution.

    Points come out in lexicographic order of the integer tuples, which
    fixes the tie-break order everywhere downstream.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    count = math.comb(resolution + n, n)
    if count > max_points:
        raise ValueError(
            f"weight grid would hold {count} points (cap {max_points}); "
            "lower the resolution or pass an explicit grid"
        )
    return [
        WeightVector(np.array(k, dtype=np.float64) / resolution)
        for k in _lattice(n, resolution)
    ]


def _line_max(g, x: np.ndarray, coord: int, box: float, t0: float, v0: float):
    """Hierarchical grid search for the 1-D maximum along one coordinate."""
    best_t, best_v = t0, v0
    lo, hi = -box, 0.0
    for _ in range(_LINE_ROUNDS + 1):
        ts = np.linspace(lo, hi, _LINE_POINTS)
        pts = np.repeat(x[None, :], ts.size, axis=0)
        pts[:, coord] = ts
        vals = g(pts)
        j = int(np.argmax(vals))
        if vals[j] > best_v:
            best_v = float(vals[j])
            best_t = float(ts[j])
        span = (hi - lo) / (_LINE_POINTS - 1)
        lo = max(-box, best_t - span)
        hi = min(0.0, best_t + span)
    return best_t, best_v


def _coordinate_ascent(g, x0: np.ndarray, box: float, budget: int):
    x = np.array(x0, dtype=np.float64)
    v = float(g(x[None, :])[0])
    for _ in range(budget):
        improved = False
        for i in range(x.size):
            t, tv = _line_max(g, x, i, box, float(x[i]), v)
            if tv > v:
                x[i] = t
                v = tv
                improved = True
        if not improved:
            break
    return v, x


def _box_maximum(g, dim: int, box: float, params: ConjugationParams):
    """Approximate max of g over [-box, 0]^dim; deterministic for fixed inputs."""
    res = params.initial_resolution
    while res > 2 and res**dim > _MAX_BOX_POINTS:
        res -= 1
    axes = np.linspace(-box, 0.0, res)
    mesh = np.stack(np.meshgrid(*([axes] * dim), indexing="ij"), axis=-1)
    mesh = mesh.reshape(-1, dim)
    vals = np.asarray(g(mesh), dtype=np.float64)
    order = np.argsort(-vals, kind="stable")[:_N_STARTS]

    best_v = -np.inf
    best_x = mesh[int(order[0])]
    for idx in order:
        v, x = _coordinate_ascent(g, mesh[int(idx)], box, params.ascent_budget)
        if v > best_v:
            best_v, best_x = v, x

    half = box / (res - 1)
    for _ in range(params.refinement_rounds):
        local_axes = [
            np.clip(np.linspace(best_x[i] - half, best_x[i] + half, res), -box, 0.0)
            for i in range(dim)
        ]
        local = np.stack(np.meshgrid(*local_axes, indexing="ij"), axis=-1)
        local = local.reshape(-1, dim)
        lv = np.asarray(g(local), dtype=np.float64)
        j = int(np.argmax(lv))
        if lv[j] > best_v:
            v, x = _coordinate_ascent(g, local[j], box, params.ascent_budget)
            if v > best_v:
                best_v, best_x = v, x
        half /= res - 1
    return best_v, best_x


def alpha_min(
    rho: "RiskStatistic", q, params: ConjugationParams | None = None
) -> ExtendedValue:
    """Minimal penalty of ``rho`` at the weight point ``q``.

    Computes the supremum of -sum(q_i * X_i) - rho(M) over the nonpositive
    box, with the box doubled twice: growth above 10% per doubling, or an
    incumbent beyond the divergence threshold, classifies the point as
    infinite. Finite values within noise below zero are clamped to zero.

    Requires a loss-dependent statistic; weight points with a negative
    component return the infinite label without any search.
    """
    params = params or ConjugationParams()
    if not rho.claims_to("loss_dependent"):
        raise ValueError(
            f"{rho.name} does not claim loss dependence; the boxed supremum "
            "is only valid for loss-dependent statistics"
        )
    qv = q.q if isinstance(q, WeightVector) else np.asarray(q, dtype=np.float64)
    if qv.shape != (rho.dimension,):
        raise ValueError(
            f"weight point has shape {qv.shape}, expected ({rho.dimension},)"
        )
    if (qv < 0).any():
        return ExtendedValue.infinite()

    def g(points: np.ndarray) -> np.ndarray:
        risk = np.asarray(rho.fn(points), dtype=np.float64)
        if not np.isfinite(risk).all():
            bad = points[~np.isfinite(np.atleast_1d(risk))][:1]
            raise ArithmeticError(
                f"{rho.name} evaluated non-finite at M={bad.tolist()}"
            )
        return -(points @ qv) - risk

    values = []
    box = params.box_bound
    for _ in range(3):
        v, _ = _box_maximum(g, rho.dimension, box, params)
        if v > params.divergence_threshold:
            return ExtendedValue.infinite()
        values.append(v)
        box *= 2.0
    for prev, cur in zip(values, values[1:]):
        if cur - prev > max(_GROWTH_FRACTION * abs(prev), _GROWTH_FLOOR):
            return ExtendedValue.infinite()

    best = max(values)
    if -_ZERO_FLOOR <= best < 0.0:
        best = 0.0
    return ExtendedValue.finite(best)


def conjugate_on_grid(
    rho: "RiskStatistic",
    qgrid: Iterable[WeightVector],
    params: ConjugationParams | None = None,
    workers: int = 1,
) -> PenaltyGrid:
    """Tabulate the minimal penalty of ``rho`` over a list of weight points.

    Points are independent; with workers > 1 they are distributed across a
    thread pool and merged back in grid order, so the output does not
    depend on the worker count. A point whose evaluation aborts is labeled
    infinite and the diagnostic is kept in the grid metadata.
    """
    params = params or ConjugationParams()
    qgrid = list(qgrid)
    if not qgrid:
        raise ValueError("conjugate_on_grid: empty weight grid")

    errors: list[dict] = []

    def one(item):
        index, wv = item
        try:
            return alpha_min(rho, wv, params)
        except ArithmeticError as exc:
            errors.append({"index": index, "q": wv.q.tolist(), "error": str(exc)})
            return ExtendedValue.infinite()

    items = list(enumerate(qgrid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            alphas = list(pool.map(one, items))
    else:
        alphas = [one(item) for item in items]

    metadata = {
        "source": rho.name,
        "params": params.to_dict(),
        "num_points": len(qgrid),
    }
    if errors:
        metadata["errors"] = sorted(errors, key=lambda e: e["index"])
    return PenaltyGrid(tuple(zip(qgrid, alphas)), metadata)


@dataclass(frozen=True)
class ReconstructionResult:
    value: float
    argmax_index: int
    argmax_q: tuple

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_index": self.argmax_index,
            "argmax_q": list(self.argmax_q),
        }


def _values_of(m) -> np.ndarray:
    if isinstance(m, PortfolioSample):
        return m.values
    return np.asarray(m, dtype=np.float64)


def _reconstruct(grid: PenaltyGrid, values: np.ndarray):
    finite = grid.finite_mask
    if not finite.any():
        raise ValueError("dual reconstruction needs at least one finite penalty")
    qmat = grid.weights_matrix[finite]
    alphas = grid.alpha_array[finite]
    scores = -(qmat @ np.minimum(values, 0.0)) - alphas
    j = int(np.argmax(scores))  # first index wins on ties
    original_index = int(np.flatnonzero(finite)[j])
    return float(scores[j]), original_index


def dual_reconstruct(grid: PenaltyGrid, m) -> float:
    """Best penalty-adjusted loss charge over the grid's effective domain."""
    value, _ = _reconstruct(grid, _values_of(m))
    return value


def dual_reconstruct_detail(grid: PenaltyGrid, m) -> ReconstructionResult:
    """Like dual_reconstruct, also reporting the attaining weight point."""
    values = _values_of(m)
    value, index = _reconstruct(grid, values)
    return ReconstructionResult(value, index, tuple(grid.points[index][0].q.tolist()))


@dataclass(frozen=True)
class NormalizationEntry:
    epsilon: float
    mode: str  # "literal" | "derived"
    region_points: int
    min_alpha: float | None
    passed: bool

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "mode": self.mode,
            "region_points": self.region_points,
            "min_alpha": self.min_alpha,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class NormalizationReport:
    """Per-epsilon verdicts for the two readings of the normalization condition.

    The literal reading asks the minimum penalty over weight points whose
    smallest component is at least 1 - eps to vanish. The derived reading
    asks the effective domain to sit inside the sub-unit simplex and the
    minimum penalty over points of mass at least 1 - eps to vanish. For
    N > 1 the literal region excludes the simplex, so the two verdicts can
    disagree; both are reported, neither is silently corrected.
    """

    mode: str
    tolerance: float
    entries: tuple
    domain_ok: bool | None  # derived-mode domain containment; None if not checked

    def literal_passed(self) -> bool | None:
        return self._aggregate("literal")

    def derived_passed(self) -> bool | None:
        agg = self._aggregate("derived")
        if agg is None:
            return None
        return agg and bool(self.domain_ok)

    def _aggregate(self, mode: str) -> bool | None:
        entries = [e for e in self.entries if e.mode == mode]
        if not entries:
            return None
        return all(e.passed for e in entries)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "tolerance": self.tolerance,
            "domain_ok": self.domain_ok,
            "entries": [e.to_dict() for e in self.entries],
            "literal_passed": self.literal_passed(),
            "derived_passed": self.derived_passed(),
        }


def check_normalization_condition(
    grid: PenaltyGrid, epsilons, mode: str = "both", tol: float = 1e-6
) -> NormalizationReport:
    """Check the normalization condition on a tabulated penalty.

    ``mode`` selects the literal reading, the derived reading, or both
    side by side. Each epsilon must lie in (0, 1); an empty list yields an
    empty report.
    """
    if mode not in ("literal", "derived", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    epsilons = [float(e) for e in epsilons]
    for eps in epsilons:
        if not (0.0 < eps < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {eps}")

    qmat = grid.weights_matrix
    alphas = grid.alpha_array
    finite = grid.finite_mask
    guard = 1e-12

    domain_ok = None
    if mode in ("derived", "both"):
        fin_q = qmat[finite]
        domain_ok = bool(
            (fin_q >= -guard).all() and (fin_q.sum(axis=1) <= 1.0 + 1e-9).all()
        )

    entries = []
    for eps in epsilons:
        floor = 1.0 - eps - guard
        if mode in ("literal", "both"):
            region = qmat.min(axis=1) >= floor
            entries.append(_region_entry(eps, "literal", region, finite, alphas, tol))
        if mode in ("derived", "both"):
            region = qmat.sum(axis=1) >= floor
            entries.append(_region_entry(eps, "derived", region, finite, alphas, tol))

    return NormalizationReport(mode, tol, tuple(entries), domain_ok)


def _region_entry(eps, mode, region, finite, alphas, tol) -> NormalizationEntry:
    usable = region & finite
    if not usable.any():
        return NormalizationEntry(eps, mode, int(region.sum()), None, False)
    min_alpha = float(alphas[usable].min())
    return NormalizationEntry(eps, mode, int(region.sum()), min_alpha, min_alpha <= tol)


@dataclass(frozen=True)
class CoherenceClassification:
    """Histogram of penalty labels and the dichotomy verdict.

    A coherent statistic's minimal penalty takes only the values zero and
    infinity, so any intermediate label refutes coherence of the source.
    """

    histogram: dict
    labels: tuple
    coherent_consistent: bool
    intermediate_points: tuple
    zero_tol: float
    infinity_threshold: float

    def to_dict(self) -> dict:
        return {
            "histogram": self.histogram,
            "coherent_consistent": self.coherent_consistent,
            "intermediate_points": [
                {"q": list(q), "alpha": a} for q, a in self.intermediate_points
            ],
            "zero_tol": self.zero_tol,
            "infinity_threshold": self.infinity_threshold,
        }


def classify_coherence(
    grid: PenaltyGrid, zero_tol: float = 1e-6, infinity_threshold: float = 1e6
) -> CoherenceClassification:
    """Label every grid point zero, intermediate, or infinite."""
    labels = []
    intermediate = []
    for wv, alpha in grid.points:
        if not alpha.is_finite or alpha.value >= infinity_threshold:
            labels.append("infinite")
        elif abs(alpha.value) <= zero_tol:
            labels.append("zero")
        else:
            labels.append("intermediate")
            intermediate.append((tuple(wv.q.tolist()), alpha.value))
    histogram = {
        "zero": labels.count("zero"),
        "intermediate": labels.count("intermediate"),
        "infinite": labels.count("infinite"),
    }
    return CoherenceClassification(
        histogram=histogram,
        labels=tuple(labels),
        coherent_consistent=histogram["intermediate"] == 0,
        intermediate_points=tuple(intermediate),
        zero_tol=zero_tol,
        infinity_threshold=infinity_threshold,
    )


@dataclass(frozen=True)
class DualityReport:
    """Round-trip comparison of a statistic against its dual reconstruction."""

    statistic: str
    samples_used: int
    max_abs_residual: float
    mean_abs_residual: float
    tolerance_coefficient: float
    passed: bool
    per_sample: tuple
    classification: dict

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "samples_used": self.samples_used,
            "max_abs_residual": self.max_abs_residual,
            "mean_abs_residual": self.mean_abs_residual,
            "tolerance_coefficient": self.tolerance_coefficient,
            "passed": self.passed,
            "per_sample": list(self.per_sample),
            "classification": self.classification,
        }


def dual_round_trip_report(
    rho: "RiskStatistic",
    grid: PenaltyGrid,
    samples: Iterable,
    rel_tol: float = 0.02,
) -> DualityReport:
    """Compare rho against reconstruction from ``grid`` on sampled data.

    A sample passes when |reconstructed - rho| <= rel_tol * (1 + |rho|).
    """
    per_sample = []
    residuals = []
    passed = True
    for m in samples:
        values = _values_of(m)
        direct = float(rho.fn(values))
        detail = dual_reconstruct_detail(grid, values)
        residual = detail.value - direct
        ok = abs(residual) <= rel_tol * (1.0 + abs(direct))
        passed = passed and ok
        residuals.append(abs(residual))
        per_sample.append(
            {
                "values": values.tolist(),
                "rho": direct,
                "reconstructed": detail.value,
                "residual": residual,
                "argmax_q": list(detail.argmax_q),
                "within_tolerance": ok,
            }
        )
    classification = classify_coherence(grid).to_dict()
    n = len(per_sample)
    return DualityReport(
        statistic=rho.name,
        samples_used=n,
        max_abs_residual=max(residuals) if residuals else 0.0,
        mean_abs_residual=float(np.mean(residuals)) if residuals else 0.0,
        tolerance_coefficient=rel_tol,
        passed=passed,
        per_sample=tuple(per_sample),
        classification=classification,
    )


def sample_data_vectors(
    dimension: int, count: int = 100, seed: int = 0, component_range: float = 10.0
) -> Iterator[np.ndarray]:
    """Deterministic stream of mixed-sign data vectors for round-trip checks."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield rng.uniform(-component_range, component_range, size=dimension)
