"""Scenario-partitioned data vectors and the componentwise loss order.

A portfolio observation vector holds N finite P&L values (negative = loss)
partitioned into m scenario blocks. All types here are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PortfolioSample",
    "WeightVector",
    "ExtendedValue",
    "CashAmount",
    "loss_part",
    "cash_vector",
    "leq",
]

MASS_TOL = 1e-9


def _as_readonly_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name} must contain at least one component")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PortfolioSample:
    """An N-vector of scenario observations split into m scenario blocks.

    Attributes:
        values: N finite P&L observations (negative values are losses).
        partition: block sizes (n_1, ..., n_m) with sum equal to N.
            Defaults to the single-block partition.
        labels: optional scenario identifier per block.
    """

    values: np.ndarray
    partition: tuple[int, ...] = ()
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = _as_readonly_vector(self.values, "values")
        if not np.isfinite(arr).all():
            raise ValueError("values must be finite (no NaN or infinities)")
        object.__setattr__(self, "values", arr)

        partition = tuple(int(n) for n in self.partition) or (arr.size,)
        if any(n < 1 for n in partition):
            raise ValueError(f"every block size must be >= 1, got {partition}")
        if sum(partition) != arr.size:
            raise ValueError(
                f"partition {partition} sums to {sum(partition)}, expected {arr.size}"
            )
        object.__setattr__(self, "partition", partition)

        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(partition):
                raise ValueError(
                    f"got {len(labels)} labels for {len(partition)} blocks"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return self.values.size

    @property
    def num_scenarios(self) -> int:
        return len(self.partition)

    def block_slices(self) -> list[slice]:
        """Contiguous index ranges of the scenario blocks, in block order."""
        edges = np.cumsum((0,) + self.partition)
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    def with_values(self, values) -> "PortfolioSample":
        """Same partition and labels, new observation vector."""
        return PortfolioSample(values, self.partition, self.labels)


@dataclass(frozen=True)
class WeightVector:
    """A dual weight point Q in R^N with recomputed domain flags.

    The flags are always derived from ``q`` at construction; caller-supplied
    flag values are ignored.
    """

    q: np.ndarray
    nonnegative: bool = field(init=False)
    sub_unit_mass: bool = field(init=False)

    def __post_init__(self):
        arr = _as_readonly_vector(self.q, "q")
        if not np.isfinite(arr).all():
            raise ValueError("q must be finite")
        object.__setattr__(self, "q", arr)
        object.__setattr__(self, "nonnegative", bool((arr >= 0.0).all()))
        object.__setattr__(self, "sub_unit_mass", bool(arr.sum() <= 1.0 + MASS_TOL))

    @property
    def dimension(self) -> int:
        return self.q.size

    @property
    def mass(self) -> float:
        return float(self.q.sum())


@dataclass(frozen=True)
class ExtendedValue:
    """A value in [0, +inf] with the infinite case kept explicit.

    Stored penalty tables never encode +inf as a large float; they carry
    this sentinel instead.
    """

    kind: str  # "finite" | "pos_infinite"
    value: float = 0.0

    _FINITE = "finite"
    _POS_INFINITE = "pos_infinite"

    def __post_init__(self):
        if self.kind not in (self._FINITE, self._POS_INFINITE):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == self._FINITE and not np.isfinite(self.value):
            raise ValueError("finite ExtendedValue requires a finite value")

    @classmethod
    def finite(cls, value: float) -> "ExtendedValue":
        return cls(cls._FINITE, float(value))

    @classmethod
    def infinite(cls) -> "ExtendedValue":
        return cls(cls._POS_INFINITE, float("inf"))

    @property
    def is_finite(self) -> bool:
        return self.kind == self._FINITE

    def as_float(self) -> float:
        """Finite value, or +inf for the infinite sentinel."""
        return self.value if self.is_finite else float("inf")

    def __repr__(self) -> str:
        return f"ExtendedValue({self.value!r})" if self.is_finite else "ExtendedValue(+inf)"


@dataclass(frozen=True)
class CashAmount:
    """A nonnegative cash amount used to build constant vectors."""

    a: float

    def __post_init__(self):
        a = float(self.a)
        if not np.isfinite(a) or a < 0.0:
            raise ValueError(f"cash amount must be finite and >= 0, got {self.a}")
        object.__setattr__(self, "a", a)


def loss_part(sample: PortfolioSample) -> PortfolioSample:
    """Componentwise minimum with zero; partition and labels preserved."""
    return sample.with_values(np.minimum(sample.values, 0.0))


def cash_vector(a, n: int, partition=()) -> PortfolioSample:
    """The constant vector (a, ..., a) of length ``n``.

    ``a`` may be a CashAmount or a nonnegative float.
    """
    amount = a if isinstance(a, CashAmount) else CashAmount(a)
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return PortfolioSample(np.full(int(n), amount.a), partition)


def leq(m1: PortfolioSample, m2: PortfolioSample) -> bool:
    """Componentwise partial order: true iff every component of m1 <= m2.

    Comparison is exact; tolerances belong in checkers, not in the order.
    """
    if m1.dimension != m2.dimension or m1.partition != m2.partition:
        raise ValueError(
            f"samples are not comparable: dimension/partition "
            f"({m1.dimension}, {m1.partition}) vs ({m2.dimension}, {m2.partition})"
        )
    return bool((m1.values <= m2.values).all())
