"""Brute-force oracles and small builders shared by the test modules.

Everything here is deliberately naive: distances enumerate whole function
classes as truth tables, covers enumerate vertex subsets, decision-list
consistency backtracks over literals. The package's closed-form answers are
checked against these, so nothing below may import from the modules under
test beyond the basic data types.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

from subcube import (
    FiniteDistribution,
    GeneralConj,
    LinearThreshold,
    MonotoneConj,
    ZeroSet,
)


def zs(n, *zeros):
    return ZeroSet(n, frozenset(zeros))


def ones_index(n, zeros):
    """The input index of a point: bit (i-1) set iff coordinate i is 1."""
    k = (1 << n) - 1
    for i in zeros:
        k &= ~(1 << (i - 1))
    return k


def table_of(func, n):
    """Truth table of a function spec as an int, bit k = value at input k."""
    bits = 0
    for k in range(1 << n):
        zeros = frozenset(i for i in range(1, n + 1) if not (k >> (i - 1)) & 1)
        if func.value_at(zeros):
            bits |= 1 << k
    return bits


def table_error(table, n, entries):
    """Weighted disagreement of a truth table with labeled entries."""
    err = Fraction(0)
    for point, label, w in entries:
        if (table >> ones_index(n, point.zeros)) & 1 != label:
            err += w
    return err


@lru_cache(maxsize=None)
def mconj_tables(n):
    tables = set()
    for r in range(n + 1):
        for req in combinations(range(1, n + 1), r):
            tables.add(table_of(MonotoneConj(n, frozenset(req)), n))
    return tuple(sorted(tables))


@lru_cache(maxsize=None)
def conj_tables(n):
    # one literal state per coordinate: positive, negative, or absent;
    # the contradictory (constant-0) conjunction is added explicitly
    tables = {0}
    for states in product((None, 0, 1), repeat=n):
        pos = frozenset(i + 1 for i, s in enumerate(states) if s == 1)
        neg = frozenset(i + 1 for i, s in enumerate(states) if s == 0)
        tables.add(table_of(GeneralConj(n, pos, neg), n))
    return tuple(sorted(tables))


@lru_cache(maxsize=None)
def ltf_tables(n, wmax=3, tspan=10):
    tables = set()
    for ws in product(range(-wmax, wmax + 1), repeat=n):
        for th in range(-tspan, tspan + 1):
            tables.add(table_of(LinearThreshold(n, ws, th), n))
    return tuple(sorted(tables))


def brute_distance(entries, n, tables):
    return min(table_error(t, n, entries) for t in tables)


def fires(lit, zeros):
    """Whether a signed literal is satisfied: +i needs a 1, -i needs a 0."""
    return lit not in zeros if lit > 0 else -lit in zeros


def dlist_realizable(n, items):
    """Backtracking check that labeled points fit some decision list."""
    items = tuple(items)
    if not items or len({lab for _, lab in items}) == 1:
        return True
    for i in range(1, n + 1):
        for lit in (i, -i):
            fired = tuple(it for it in items if fires(lit, it[0]))
            if not fired or len(fired) == len(items):
                continue
            if len({lab for _, lab in fired}) != 1:
                continue
            rest = tuple(it for it in items if not fires(lit, it[0]))
            if dlist_realizable(n, rest):
                return True
    return False


def brute_flip_distance(entries, consistent):
    """Minimum weight of labels to flip before consistent() holds."""
    m = len(entries)
    best = None
    for mask in range(1 << m):
        wt = sum(
            (entries[j][2] for j in range(m) if (mask >> j) & 1), Fraction(0))
        if best is not None and wt >= best:
            continue
        flipped = tuple(
            (p, lab ^ ((mask >> j) & 1), w)
            for j, (p, lab, w) in enumerate(entries))
        if consistent(flipped):
            best = wt
    return best


def brute_min_cover(graph):
    """Minimum-weight vertex cover by subset enumeration."""
    nl, nr = len(graph.left), len(graph.right)
    best = None
    for lm in range(1 << nl):
        for rm in range(1 << nr):
            if not all((lm >> li) & 1 or (rm >> ri) & 1
                       for li, ri in graph.edges):
                continue
            wt = sum((w for i, (_, w) in enumerate(graph.left)
                      if (lm >> i) & 1), Fraction(0))
            wt += sum((w for i, (_, w) in enumerate(graph.right)
                       if (rm >> i) & 1), Fraction(0))
            if best is None or wt < best:
                best = wt
    return best


def rand_fractions(rng, k):
    """k positive exact weights summing to 1."""
    nums = [rng.randrange(9) + 1 for _ in range(k)]
    total = sum(nums)
    return [Fraction(v, total) for v in nums]


def rand_points(rng, n, k, max_zeros=None):
    """k distinct random points, zero-set sizes up to max_zeros."""
    cap = n if max_zeros is None else max_zeros
    seen = set()
    out = []
    while len(out) < k:
        size = rng.randrange(cap + 1)
        zrs = frozenset(rng.sample(list(range(1, n + 1)), size))
        if zrs in seen:
            continue
        seen.add(zrs)
        out.append(ZeroSet(n, zrs))
    return out


def rand_dist(rng, n, k, max_zeros=None):
    pts = rand_points(rng, n, k, max_zeros)
    return FiniteDistribution(n, tuple(zip(pts, rand_fractions(rng, k))))
