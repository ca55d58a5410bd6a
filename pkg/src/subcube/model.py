"""Core value types: points, function specifications, distributions, oracles.

Points of {0,1}^n are represented sparsely by their zero coordinates
(1-based). Functions are small tagged specifications evaluated on demand;
distributions carry exact rational weights and are sampled by exact
inverse-CDF over a uniform integer draw below the common denominator, so each
point is drawn with probability exactly its weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .rng import RandomStream

__all__ = [
    "ZeroSet",
    "FunctionSpec",
    "MonotoneConj",
    "GeneralConj",
    "DecisionList",
    "LinearThreshold",
    "TruthTable",
    "Flipped",
    "FiniteDistribution",
    "QueryTranscript",
    "QueryBudget",
    "BudgetExceeded",
    "DimensionMismatch",
    "SizeCapError",
    "InfeasibleParameters",
    "BlackBox",
    "Sampler",
    "SampleTape",
    "FlippedBlackBox",
    "FlippedSampler",
    "evaluate",
    "flip_transform",
]


class DimensionMismatch(ValueError):
    """A point and a function (or distribution) disagree on n."""


class SizeCapError(ValueError):
    """An exact enumeration was asked to exceed its documented size cap."""


class InfeasibleParameters(ValueError):
    """Generator parameters violate their structural constraints."""


class BudgetExceeded(RuntimeError):
    """An oracle call would exceed the per-oracle query budget."""


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class ZeroSet:
    """A point of {0,1}^n, given by the set of coordinates that are 0.

    Coordinates are 1-based. The all-ones point has an empty zero set.
    """

    n: int
    zeros: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        zs = self.zeros if isinstance(self.zeros, frozenset) else frozenset(self.zeros)
        object.__setattr__(self, "zeros", zs)
        for i in zs:
            if not isinstance(i, int) or not 1 <= i <= self.n:
                raise ValueError(f"zero coordinate {i!r} out of range 1..{self.n}")

    @classmethod
    def all_ones(cls, n: int) -> "ZeroSet":
        return cls(n, frozenset())

    def sorted_zeros(self) -> list[int]:
        return sorted(self.zeros)

    def flip(self, coords: Iterable[int]) -> "ZeroSet":
        """The point with every coordinate in coords flipped."""
        return ZeroSet(self.n, self.zeros ^ frozenset(coords))

    def __repr__(self):
        return f"ZeroSet(n={self.n}, zeros={self.sorted_zeros()})"


# ---------------------------------------------------------------------------
# function specifications


class FunctionSpec:
    """Base class for function specifications over {0,1}^n."""

    n: int

    def value_at(self, zeros: frozenset) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class MonotoneConj(FunctionSpec):
    """AND of positive literals: 1 iff every required coordinate is 1.

    required may be empty (the constant-1 function).
    """

    n: int
    required: frozenset

    def __post_init__(self):
        req = frozenset(self.required)
        object.__setattr__(self, "required", req)
        for i in req:
            if not 1 <= i <= self.n:
                raise ValueError(f"required coordinate {i} out of range")

    def value_at(self, zeros: frozenset) -> int:
        return 1 if self.required.isdisjoint(zeros) else 0


@dataclass(frozen=True)
class GeneralConj(FunctionSpec):
    """AND of literals: required_one must be 1, required_zero must be 0.

    The two sets may overlap; an overlapping coordinate makes the function
    constant 0, which is itself a valid conjunction.
    """

    n: int
    required_one: frozenset
    required_zero: frozenset

    def __post_init__(self):
        one, zero = frozenset(self.required_one), frozenset(self.required_zero)
        object.__setattr__(self, "required_one", one)
        object.__setattr__(self, "required_zero", zero)
        for i in one | zero:
            if not 1 <= i <= self.n:
                raise ValueError(f"literal coordinate {i} out of range")

    def value_at(self, zeros: frozenset) -> int:
        if not self.required_one.isdisjoint(zeros):
            return 0
        return 1 if self.required_zero <= zeros else 0


@dataclass(frozen=True)
class DecisionList(FunctionSpec):
    """Ordered rules (literal, bit); first satisfied literal decides.

    A literal is a signed coordinate: +i is satisfied when z_i = 1, -i when
    z_i = 0. When no rule fires, the default bit is the value.
    """

    n: int
    rules: tuple
    default: int

    def __post_init__(self):
        rules = tuple((int(l), int(b)) for l, b in self.rules)
        object.__setattr__(self, "rules", rules)
        if self.default not in (0, 1):
            raise ValueError("default bit must be 0 or 1")
        for lit, bit in rules:
            if lit == 0 or not 1 <= abs(lit) <= self.n:
                raise ValueError(f"literal {lit} out of range")
            if bit not in (0, 1):
                raise ValueError("rule bit must be 0 or 1")

    def value_at(self, zeros: frozenset) -> int:
        for lit, bit in self.rules:
            if (lit > 0 and lit not in zeros) or (lit < 0 and -lit in zeros):
                return bit
        return self.default


@dataclass(frozen=True)
class LinearThreshold(FunctionSpec):
    """1 iff sum of integer weights over 1-coordinates reaches the threshold."""

    n: int
    weights: tuple
    threshold: int

    def __post_init__(self):
        ws = tuple(int(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "threshold", int(self.threshold))
        if len(ws) != self.n:
            raise ValueError("need one weight per coordinate")
        object.__setattr__(self, "_total", sum(ws))

    def value_at(self, zeros: frozenset) -> int:
        acc = self._total
        for i in zeros:
            acc -= self.weights[i - 1]
        return 1 if acc >= self.threshold else 0


@dataclass(frozen=True)
class TruthTable(FunctionSpec):
    """Explicit table for small n (<= 24).

    bits is a packed integer: the output on input z is bit k of bits, where
    bit (i-1) of k holds z_i.
    """

    n: int
    bits: int

    def __post_init__(self):
        if self.n > 24:
            raise SizeCapError("truth tables are capped at n = 24")
        object.__setattr__(self, "bits", int(self.bits))
        if not 0 <= self.bits < (1 << (1 << self.n)):
            raise ValueError("bits out of range for this n")

    @classmethod
    def from_values(cls, n: int, values) -> "TruthTable":
        """Build from an iterable of 2^n output bits, indexed by input k."""
        bits = 0
        count = 0
        for k, v in enumerate(values):
            if v:
                bits |= 1 << k
            count += 1
        if count != 1 << n:
            raise ValueError("need exactly 2^n values")
        return cls(n, bits)

    def input_index(self, zeros: frozenset) -> int:
        k = (1 << self.n) - 1
        for i in zeros:
            k &= ~(1 << (i - 1))
        return k

    def value_at(self, zeros: frozenset) -> int:
        return (self.bits >> self.input_index(zeros)) & 1


@dataclass(frozen=True)
class Flipped(FunctionSpec):
    """inner evaluated after flipping a fixed set of coordinates."""

    inner: FunctionSpec
    coords: frozenset

    def __post_init__(self):
        cs = frozenset(self.coords)
        object.__setattr__(self, "coords", cs)
        for i in cs:
            if not 1 <= i <= self.inner.n:
                raise ValueError(f"flip coordinate {i} out of range")

    @property
    def n(self) -> int:
        return self.inner.n

    def value_at(self, zeros: frozenset) -> int:
        return self.inner.value_at(zeros ^ self.coords)


def evaluate(func: FunctionSpec, x: ZeroSet) -> int:
    """Evaluate a function specification on a point."""
    if func.n != x.n:
        raise DimensionMismatch(f"function has n={func.n}, point has n={x.n}")
    return func.value_at(x.zeros)


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class FiniteDistribution:
    """A finitely supported distribution with exact rational weights.

    Weights are positive Fractions that sum to exactly 1; support points are
    distinct. Sampling is exact: a uniform integer below the common
    denominator M is drawn and mapped through the cumulative numerators, so
    every point has probability exactly its weight.
    """

    n: int
    entries: tuple

    def __post_init__(self):
        norm = []
        seen = set()
        total = Fraction(0)
        for point, weight in self.entries:
            if not isinstance(point, ZeroSet):
                raise TypeError("support points must be ZeroSet")
            if point.n != self.n:
                raise DimensionMismatch("support point has wrong n")
            w = Fraction(weight)
            if w <= 0:
                raise ValueError("weights must be positive")
            if point.zeros in seen:
                raise ValueError("support points must be distinct")
            seen.add(point.zeros)
            norm.append((point, w))
            total += w
        if total != 1:
            raise ValueError(f"weights must sum to exactly 1, got {total}")
        if not norm:
            raise ValueError("distribution must have non-empty support")
        object.__setattr__(self, "entries", tuple(norm))
        denom = math.lcm(*(w.denominator for _, w in norm))
        cum = []
        acc = 0
        for _, w in norm:
            acc += w.numerator * (denom // w.denominator)
            cum.append(acc)
        object.__setattr__(self, "_denominator", denom)
        object.__setattr__(self, "_cum", tuple(cum))

    @property
    def denominator(self) -> int:
        return self._denominator

    def support(self) -> list[ZeroSet]:
        return [p for p, _ in self.entries]

    def weights(self) -> list[Fraction]:
        return [w for _, w in self.entries]

    def weight_of(self, point: ZeroSet) -> Fraction:
        for p, w in self.entries:
            if p.zeros == point.zeros:
                return w
        return Fraction(0)

    def index_from_uniform(self, u: int) -> int:
        """Map a uniform draw u in [0, M) to a support index (inverse CDF)."""
        lo, hi = 0, len(self._cum) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if u < self._cum[mid]:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def draw_point(self, rng: RandomStream) -> ZeroSet:
        u = rng.randrange(self._denominator)
        return self.entries[self.index_from_uniform(u)][0]

    def flipped(self, coords: Iterable[int]) -> "FiniteDistribution":
        cs = frozenset(coords)
        return FiniteDistribution(self.n, tuple((p.flip(cs), w) for p, w in self.entries))


def flip_transform(func: FunctionSpec, coords: Iterable[int], dist: FiniteDistribution):
    """The coordinate-flip change of variables applied to a labeled instance.

    Returns (g, D') where g(x) = func(x with coords flipped) and D' is dist
    pushed through the same flip; distances to any flip-closed class are
    preserved exactly.
    """
    cs = frozenset(coords)
    if dist.n != func.n:
        raise DimensionMismatch("function and distribution disagree on n")
    return Flipped(func, cs), dist.flipped(cs)


# ---------------------------------------------------------------------------
# transcripts, budgets, oracles


@dataclass
class QueryTranscript:
    """Counts (and optionally logs) black-box queries and sample draws."""

    blackbox_count: int = 0
    sample_count: int = 0
    log_queries: bool = False
    blackbox_log: list = field(default_factory=list)
    sample_log: list = field(default_factory=list)

    def add(self, other: "QueryTranscript") -> None:
        self.blackbox_count += other.blackbox_count
        self.sample_count += other.sample_count
        if self.log_queries:
            self.blackbox_log.extend(other.blackbox_log)
            self.sample_log.extend(other.sample_log)


@dataclass
class QueryBudget:
    """Hard per-oracle call budgets, shared across everything in one trial."""

    max_blackbox: Optional[int] = None
    max_samples: Optional[int] = None
    used_blackbox: int = 0
    used_samples: int = 0

    def take_blackbox(self, k: int = 1) -> None:
        if self.max_blackbox is not None and self.used_blackbox + k > self.max_blackbox:
            raise BudgetExceeded("black-box query budget exhausted")
        self.used_blackbox += k

    def take_samples(self, k: int = 1) -> None:
        if self.max_samples is not None and self.used_samples + k > self.max_samples:
            raise BudgetExceeded("sampling budget exhausted")
        self.used_samples += k


class BlackBox:
    """Counted membership-query access to a function."""

    def __init__(self, func: FunctionSpec, transcript: QueryTranscript,
                 budget: Optional[QueryBudget] = None):
        self.func = func
        self.n = func.n
        self.transcript = transcript
        self.budget = budget

    def query(self, x: ZeroSet) -> int:
        if x.n != self.n:
            raise DimensionMismatch("query point has wrong n")
        return self.query_set(x.zeros)

    def query_set(self, zeros: frozenset) -> int:
        """Same as query, for callers that already hold a validated zero set."""
        if self.budget is not None:
            self.budget.take_blackbox(1)
        value = self.func.value_at(zeros)
        t = self.transcript
        t.blackbox_count += 1
        if t.log_queries:
            t.blackbox_log.append((zeros, value))
        return value


class FlippedBlackBox:
    """Query wrapper applying a coordinate flip; one inner query per query."""

    def __init__(self, inner: BlackBox, coords: frozenset):
        self.inner = inner
        self.coords = frozenset(coords)
        self.n = inner.n
        self.transcript = inner.transcript

    def query(self, x: ZeroSet) -> int:
        return self.inner.query_set(x.zeros ^ self.coords)

    def query_set(self, zeros: frozenset) -> int:
        return self.inner.query_set(zeros ^ self.coords)


class SampleTape:
    """A replayable view of a sampler's batch stream.

    The draws are made (counted, budgeted, logged) exactly once, on the first
    pass; rewind() restores the recorded RNG state so later passes re-yield
    the identical support indices without touching the oracle counts. This
    lets a tester that conceptually stores its whole sample sequence run in
    O(batch) memory.
    """

    def __init__(self, sampler: "Sampler", rng: RandomStream):
        self._sampler = sampler
        self._rng = rng
        self._start_state = rng.state()
        self._first_pass = True

    def next_indices(self, k: int) -> np.ndarray:
        idx = self._sampler._draw_indices_raw(self._rng, k)
        if self._first_pass:
            self._sampler._charge(idx)
        return idx

    def rewind(self) -> None:
        self._rng.set_state(self._start_state)
        self._first_pass = False


class Sampler:
    """Counted sampling-oracle access to (dist, func): (point, label) pairs."""

    def __init__(self, dist: FiniteDistribution, func: FunctionSpec,
                 transcript: QueryTranscript, rng: RandomStream,
                 budget: Optional[QueryBudget] = None):
        if dist.n != func.n:
            raise DimensionMismatch("function and distribution disagree on n")
        self.dist = dist
        self.func = func
        self.n = dist.n
        self.transcript = transcript
        self.rng = rng
        self.budget = budget
        self._points = [p for p, _ in dist.entries]
        self._zeros = [p.zeros for p in self._points]
        self.labels = np.array([func.value_at(z) for z in self._zeros], dtype=np.int8)
        self._fast = dist.denominator <= (1 << 62)
        if self._fast:
            self._cum = np.array(dist._cum, dtype=np.int64)
        self._tape_count = 0

    # -- support accessors --

    @property
    def support_size(self) -> int:
        return len(self._points)

    def point(self, idx: int) -> ZeroSet:
        return self._points[idx]

    def zeros_of(self, idx: int) -> frozenset:
        return self._zeros[idx]

    def label(self, idx: int) -> int:
        return int(self.labels[idx])

    # -- drawing --

    def _draw_indices_raw(self, rng: RandomStream, k: int) -> np.ndarray:
        """k exact draws from the distribution (support indices); uncounted."""
        if self._fast:
            u = rng.integers(self.dist.denominator, size=k)
            return np.searchsorted(self._cum, u, side="right")
        out = np.empty(k, dtype=np.int64)
        for j in range(k):
            out[j] = self.dist.index_from_uniform(rng.randrange(self.dist.denominator))
        return out

    def _charge(self, idx: np.ndarray) -> None:
        if self.budget is not None:
            self.budget.take_samples(len(idx))
        t = self.transcript
        t.sample_count += len(idx)
        if t.log_queries:
            for i in idx:
                t.sample_log.append((self._zeros[int(i)], int(self.labels[int(i)])))

    def draw_index(self) -> int:
        idx = self._draw_indices_raw(self.rng, 1)
        self._charge(idx)
        return int(idx[0])

    def draw(self) -> tuple[ZeroSet, int]:
        """One counted draw: (point, func(point))."""
        i = self.draw_index()
        return self._points[i], int(self.labels[i])

    def open_tape(self) -> SampleTape:
        self._tape_count += 1
        return SampleTape(self, self.rng.split("tape", self._tape_count))


class FlippedSampler:
    """Sampler wrapper applying a coordinate flip to every drawn point.

    Each flipped draw consumes exactly one underlying draw; labels carry over
    because g(x flip C) = f(x). Support indices are shared with the inner
    sampler, so tapes interoperate.
    """

    def __init__(self, inner: Sampler, coords: frozenset):
        self.inner = inner
        self.coords = frozenset(coords)
        self.n = inner.n
        self.transcript = inner.transcript
        self.rng = inner.rng
        self._points = [p.flip(self.coords) for p in inner._points]
        self._zeros = [p.zeros for p in self._points]
        self.labels = inner.labels

    @property
    def support_size(self) -> int:
        return self.inner.support_size

    def point(self, idx: int) -> ZeroSet:
        return self._points[idx]

    def zeros_of(self, idx: int) -> frozenset:
        return self._zeros[idx]

    def label(self, idx: int) -> int:
        return int(self.labels[idx])

    def draw_index(self) -> int:
        return self.inner.draw_index()

    def draw(self) -> tuple[ZeroSet, int]:
        i = self.inner.draw_index()
        return self._points[i], int(self.labels[i])

    def open_tape(self) -> SampleTape:
        return self.inner.open_tape()
