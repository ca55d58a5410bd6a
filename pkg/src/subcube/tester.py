"""Distribution-free conjunction testers.

The main tester runs in three stages: an up-front sampling stage that also
computes a representative zero coordinate for every 0-sample by binary
search, a stage that probes singletons and random subsets of the union of
1-sample zero sets, and an iterated stage that pits each fresh group's
representative against its 1-strings. All parameters derive from (n, epsilon)
by fixed ceiling rules; base-2 logs throughout.

Stage 0 conceptually stores the whole sample sequence. To keep memory at
one group, the sampler tape is drawn once (counted) and then rewound and
replayed for Stages 1 and 2; replay re-materializes identical draws without
touching the oracle counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .model import (
    DimensionMismatch,
    FlippedBlackBox,
    FlippedSampler,
    QueryTranscript,
    ZeroSet,
)
from .rng import RandomStream

__all__ = [
    "TesterParams",
    "Verdict",
    "compute_parameters",
    "ceil_log2",
    "binary_search_representative",
    "test_monotone_conjunction",
    "test_general_conjunction",
    "amplify",
    "baseline_dolev_ron",
    "DEFAULT_AMPLIFY",
]

DEFAULT_AMPLIFY = 11


def ceil_log2(n: int) -> int:
    """Smallest k with 2^k >= n, for n >= 1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return (n - 1).bit_length()


def _ceil_fraction(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _exact_log2(q: Fraction) -> Optional[int]:
    num, den = q.numerator, q.denominator
    if num & (num - 1) == 0 and den & (den - 1) == 0:
        return (num.bit_length() - 1) - (den.bit_length() - 1)
    return None


def _ceil_cuberoot(n: int) -> int:
    r = round(n ** (1.0 / 3.0))
    while r ** 3 < n:
        r += 1
    while r > 1 and (r - 1) ** 3 >= n:
        r -= 1
    return r


@dataclass(frozen=True)
class TesterParams:
    """Derived tester parameters for a given (n, epsilon)."""

    n: int
    epsilon: Fraction
    d: int
    d_star: int
    r: int
    t: int
    s: int
    group_size: int
    stage0_samples: int


def compute_parameters(n: int, epsilon) -> TesterParams:
    """All tester parameters from (n, epsilon), everything rounded up.

    d = ceil(log2^2(n/eps)/eps), d_star = ceil(d^2/eps), r = ceil(n^(1/3)),
    t = d*r, s = t*ceil(log2 n), group_size = ceil(3t/eps), and Stage 0 draws
    group_size*(d_star+1) samples. log2(n/eps) is evaluated exactly when
    n/eps is a power of two, in floating point otherwise.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    if n < 2:
        raise ValueError("n must be at least 2")
    ratio = Fraction(n) / eps
    exact = _exact_log2(ratio)
    if exact is not None:
        d = _ceil_fraction(Fraction(exact * exact) / eps)
    else:
        lg = math.log2(float(ratio))
        d = _ceil_fraction(Fraction(lg * lg) / eps)
    d_star = _ceil_fraction(Fraction(d * d) / eps)
    r = _ceil_cuberoot(n)
    t = d * r
    s = t * ceil_log2(n)
    group_size = _ceil_fraction(Fraction(3 * t) / eps)
    return TesterParams(
        n=n,
        epsilon=eps,
        d=d,
        d_star=d_star,
        r=r,
        t=t,
        s=s,
        group_size=group_size,
        stage0_samples=group_size * (d_star + 1),
    )


@dataclass
class Verdict:
    """Outcome of one tester run, naming the accept/reject site."""

    accepted: bool
    reason: str
    transcript: QueryTranscript
    params: Optional[TesterParams] = None
    stage0_zero_samples: int = 0

    @property
    def outcome(self) -> str:
        return "accept" if self.accepted else "reject"


def binary_search_representative(oracle, x: ZeroSet) -> Optional[int]:
    """Binary search for a zero coordinate i of x with f({i}) = 0.

    Returns None (nil) when the search loses track, which never happens for a
    monotone conjunction. Deterministic; at most 2*ceil(log2 |ZERO(x)|)
    queries; no query at all when |ZERO(x)| <= 1.
    """
    z = x.sorted_zeros()
    if not z:
        return None
    while len(z) >= 2:
        half = (len(z) + 1) // 2
        z0, z1 = z[:half], z[half:]
        v0 = oracle.query_set(frozenset(z0))
        v1 = oracle.query_set(frozenset(z1))
        if v0 == 0:
            z = z0
        elif v1 == 0:
            z = z1
        else:
            return None
    return z[0]


def _union_zeros(sampler, support_ids) -> frozenset:
    out = set()
    for si in support_ids:
        out |= sampler.zeros_of(int(si))
    return frozenset(out)


class _GroupUnions:
    """Caches the zero-set union keyed by the set of support points present.

    Stage 2 rebuilds B for every group; groups repeat the same few support
    subsets, so the union is memoized on a bitmask over support indices.
    """

    def __init__(self, sampler):
        self.sampler = sampler
        self.cache: dict[int, tuple] = {}

    def union(self, support_ids: np.ndarray):
        key = 0
        for si in np.unique(support_ids):
            key |= 1 << int(si)
        hit = self.cache.get(key)
        if hit is None:
            b_set = _union_zeros(self.sampler, np.unique(support_ids))
            hit = (b_set, sorted(b_set))
            self.cache[key] = hit
        return hit


def test_monotone_conjunction(oracle, sampler, n: int, epsilon, rng: RandomStream,
                              params: Optional[TesterParams] = None) -> Verdict:
    """One-sided tester for monotone conjunctions under an unknown distribution.

    Never rejects when the black box is a monotone conjunction; rejects with
    constant probability when the labeled distribution is epsilon-far from
    every monotone conjunction and assigns no weight to strings whose
    representative search fails.
    """
    if oracle.n != n or sampler.n != n:
        raise DimensionMismatch("oracle/sampler dimension differs from n")
    p = params if params is not None else compute_parameters(n, epsilon)
    tr = oracle.transcript

    # Stage 0: the all-ones probe, then every sample group up front.
    if oracle.query(ZeroSet.all_ones(n)) == 0:
        return Verdict(False, "stage0-allones", tr, p, 0)

    tape = sampler.open_tape()
    labels = sampler.labels
    reps: dict[int, Optional[int]] = {}
    seen = np.zeros(sampler.support_size, dtype=bool)
    zero_count = 0
    for _ in range(p.d_star + 1):
        idx = tape.next_indices(p.group_size)
        zidx = idx[labels[idx] == 0]
        if not len(zidx):
            continue
        zero_count += len(zidx)
        uniq, first = np.unique(zidx, return_index=True)
        for k in np.argsort(first):
            si = int(uniq[k])
            if seen[si]:
                continue
            seen[si] = True
            rep = binary_search_representative(oracle, sampler.point(si))
            reps[si] = rep
            if rep is None:
                return Verdict(False, "stage0-nil-representative", tr, p, zero_count)

    step_rng = rng.split("steps")
    unions = _GroupUnions(sampler)
    tape.rewind()

    # Stage 1: first group feeds the singleton and subset probes.
    idx = tape.next_indices(p.group_size)
    one_ids = idx[labels[idx] == 1]
    if len(one_ids) < p.t:
        return Verdict(True, "stage1-few-ones", tr, p, zero_count)
    b_set, b_arr = unions.union(one_ids[:p.t])
    if b_arr:
        positions = step_rng.integers(len(b_arr), size=p.s)
        for j in range(p.s):
            i = b_arr[int(positions[j])]
            if oracle.query_set(frozenset((i,))) == 0:
                return Verdict(False, "step-1.1", tr, p, zero_count)
        k_sub = min(p.r, len(b_arr))
        for _ in range(p.s):
            if k_sub == len(b_arr):
                z = frozenset(b_arr)
            else:
                pos = step_rng.subset_positions(len(b_arr), k_sub)
                z = frozenset(b_arr[q] for q in pos)
            if oracle.query_set(z) == 0:
                return Verdict(False, "step-1.2", tr, p, zero_count)

    # Stage 2: one fresh group per iteration.
    for _ in range(p.d_star):
        idx = tape.next_indices(p.group_size)
        lab = labels[idx]
        one_ids = idx[lab == 1]
        if len(one_ids) < p.t - 1:
            return Verdict(True, "stage2-few-ones", tr, p, zero_count)
        zero_ids = idx[lab == 0]
        if not len(zero_ids):
            return Verdict(True, "stage2-no-zero", tr, p, zero_count)
        b_set, b_arr = unions.union(one_ids[:p.t - 1])
        alpha = reps[int(zero_ids[0])]
        if alpha is None:
            return Verdict(False, "stage2-nil", tr, p, zero_count)
        if alpha in b_set:
            return Verdict(False, "step-2.1", tr, p, zero_count)
        k_sub = min(p.r - 1, len(b_arr))
        if k_sub == len(b_arr):
            pset = frozenset(b_arr) | {alpha}
        else:
            pos = step_rng.subset_positions(len(b_arr), k_sub)
            pset = frozenset(b_arr[q] for q in pos) | {alpha}
        if oracle.query_set(pset) == 1:
            return Verdict(False, "step-2.2", tr, p, zero_count)

    return Verdict(True, "end-of-stage-2", tr, p, zero_count)


def test_general_conjunction(oracle, sampler, n: int, epsilon, rng: RandomStream,
                             params: Optional[TesterParams] = None) -> Verdict:
    """One-sided tester for general conjunctions.

    Draws ceil(3/eps) samples looking for a 1-string x*; with none it accepts.
    Otherwise it flips the coordinates in ZERO(x*), which turns any general
    conjunction consistent with x* into a monotone one, and runs the monotone
    tester through flip wrappers that forward one query per query.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    k0 = _ceil_fraction(Fraction(3) / eps)
    xstar = None
    for _ in range(k0):
        x, label = sampler.draw()
        if label == 1:
            xstar = x
            break
    if xstar is None:
        return Verdict(True, "conj-no-positive", oracle.transcript, params, 0)
    flipped_oracle = FlippedBlackBox(oracle, xstar.zeros)
    flipped_sampler = FlippedSampler(sampler, xstar.zeros)
    return test_monotone_conjunction(flipped_oracle, flipped_sampler, n, epsilon,
                                     rng, params)


def amplify(run_trial, k: int, rng: RandomStream) -> Verdict:
    """Run k independent one-sided trials; reject as soon as any rejects.

    run_trial(sub_rng) must build fresh oracles with a fresh transcript per
    call. The returned transcript sums the counts of the trials that ran.
    """
    if k < 1:
        raise ValueError("amplification count must be at least 1")
    total = QueryTranscript()
    last = None
    for i in range(1, k + 1):
        verdict = run_trial(rng.split("amp", i))
        total.add(verdict.transcript)
        last = verdict
        if not verdict.accepted:
            break
    return Verdict(last.accepted, last.reason, total, last.params,
                   last.stage0_zero_samples)


def baseline_dolev_ron(oracle, sampler, n: int, epsilon, rng: RandomStream = None,
                       c: float = 2.0, num_samples: Optional[int] = None) -> Verdict:
    """Pair-sampling baseline tester for monotone conjunctions.

    Draws ceil(c*sqrt(n)*log2(n)) samples (or exactly num_samples when given),
    computes the representative of every 0-sample, and rejects when some
    1-sample is 0 at some computed representative. One-sided. rng is accepted
    for a uniform tester call shape; all randomness comes from the sampler.
    """
    tr = oracle.transcript
    if num_samples is not None:
        total = num_samples
    else:
        total = math.ceil(c * math.sqrt(n) * math.log2(n))
    if total <= 0:
        return Verdict(True, "baseline-clean", tr)
    if oracle.query(ZeroSet.all_ones(n)) == 0:
        return Verdict(False, "baseline-allones", tr)
    ones_union = set()
    zero_order = []
    zero_seen = set()
    for _ in range(total):
        i = sampler.draw_index()
        if sampler.label(i) == 1:
            ones_union |= sampler.zeros_of(i)
        elif i not in zero_seen:
            zero_seen.add(i)
            zero_order.append(i)
    representatives = set()
    for i in zero_order:
        rep = binary_search_representative(oracle, sampler.point(i))
        if rep is None:
            return Verdict(False, "baseline-nil-representative", tr)
        representatives.add(rep)
    if representatives & ones_union:
        return Verdict(False, "baseline-edge", tr)
    return Verdict(True, "baseline-clean", tr)
