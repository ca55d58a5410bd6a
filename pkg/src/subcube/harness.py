"""Seeded trial runner, query accounting, and budget-sweep experiments.

Each trial owns an RNG substream derived from (seed, trial id), so results
are reproducible regardless of worker scheduling. Query budgets are enforced
inside the oracles; a budget overrun surfaces as a forced accept, which keeps
every tester one-sided under any budget.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import log2
from typing import Optional

from .adversarial import LBInstance, LBParams, generate_instance, simulate_p, strong_sample
from .model import (
    BlackBox,
    BudgetExceeded,
    QueryBudget,
    QueryTranscript,
    Sampler,
    ZeroSet,
)
from .rng import RandomStream
from .tester import (
    TesterParams,
    Verdict,
    amplify,
    baseline_dolev_ron,
    ceil_log2,
    compute_parameters,
    test_general_conjunction,
    test_monotone_conjunction,
)

__all__ = [
    "ALGOS",
    "CSV_HEADER",
    "EXPERIMENT_HEADER",
    "ExperimentConfig",
    "TrialResult",
    "run_trials",
    "summarize",
    "write_trials_csv",
    "query_budget_report",
    "distinguishing_experiment",
    "write_experiment_csv",
]

ALGOS = ("mconj", "conj", "dolev-ron")
CSV_HEADER = ("trial", "verdict", "reason", "blackbox_queries",
              "sample_queries", "wall_ms")
EXPERIMENT_HEADER = ("budget", "yes_accept", "no_accept", "gap",
                     "sim_yes_accept", "sim_no_accept", "sim_gap")


def worker_count() -> int:
    """Worker pool size; the SUBCUBE_THREADS environment variable caps it."""
    env = os.environ.get("SUBCUBE_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass
class ExperimentConfig:
    """One batch of tester trials.

    Exactly one of instance (a fixed (function, distribution) pair) or
    generator (an (LBParams, variant) pair drawn fresh per trial) must be
    set. max_blackbox/max_samples impose a hard per-trial budget shared
    across amplification attempts; baseline_samples overrides the sample
    count of the dolev-ron algorithm.
    """

    algo: str
    epsilon: Fraction
    trials: int
    seed: int
    amplify_k: int = 1
    instance: Optional[tuple] = None  # (n, FunctionSpec, FiniteDistribution)
    generator: Optional[tuple] = None  # (LBParams, variant)
    max_blackbox: Optional[int] = None
    max_samples: Optional[int] = None
    baseline_samples: Optional[int] = None
    log_queries: bool = False
    keep_details: bool = True

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        if self.amplify_k < 1:
            raise ValueError("amplify must be >= 1")
        if (self.instance is None) == (self.generator is None):
            raise ValueError("set exactly one of instance and generator")

    @property
    def n(self) -> int:
        if self.instance is not None:
            return self.instance[0]
        return self.generator[0].n


@dataclass
class TrialResult:
    """One CSV row plus (optionally) the retained verdict and transcripts."""

    trial: int
    accepted: bool
    reason: str
    blackbox_queries: int
    sample_queries: int
    wall_ms: int
    verdict: Optional[Verdict] = None
    attempt_transcripts: list = field(default_factory=list)
    instance: Optional[LBInstance] = None

    @property
    def outcome(self) -> str:
        return "accept" if self.accepted else "reject"


def _tester_params_for(config: ExperimentConfig) -> Optional[TesterParams]:
    if config.algo in ("mconj", "conj"):
        return compute_parameters(config.n, config.epsilon)
    return None


def _run_one(config: ExperimentConfig, trial: int,
             shared_params: Optional[TesterParams]) -> TrialResult:
    rng = RandomStream(config.seed).split("trial", trial)
    started = time.perf_counter()
    inst = None
    if config.generator is not None:
        params, variant = config.generator
        inst = generate_instance(params, variant, rng.split("instance"))
        n, func, dist = inst.n, inst.function, inst.distribution
    else:
        n, func, dist = config.instance
    budget = None
    if config.max_blackbox is not None or config.max_samples is not None:
        budget = QueryBudget(config.max_blackbox, config.max_samples)
    attempts: list[QueryTranscript] = []

    def attempt(sub: RandomStream) -> Verdict:
        tr = QueryTranscript(log_queries=config.log_queries)
        attempts.append(tr)
        oracle = BlackBox(func, tr, budget)
        sampler = Sampler(dist, func, tr, sub.split("samples"), budget)
        tester_rng = sub.split("tester")
        if config.algo == "mconj":
            return test_monotone_conjunction(oracle, sampler, n, config.epsilon,
                                             tester_rng, shared_params)
        if config.algo == "conj":
            return test_general_conjunction(oracle, sampler, n, config.epsilon,
                                            tester_rng, shared_params)
        return baseline_dolev_ron(oracle, sampler, n, config.epsilon, tester_rng,
                                  num_samples=config.baseline_samples)

    try:
        verdict = amplify(attempt, config.amplify_k, rng)
        accepted, reason = verdict.accepted, verdict.reason
    except BudgetExceeded:
        verdict = None
        accepted, reason = True, "budget-exhausted"
    blackbox = sum(tr.blackbox_count for tr in attempts)
    samples = sum(tr.sample_count for tr in attempts)
    wall_ms = int((time.perf_counter() - started) * 1000)
    return TrialResult(
        trial=trial, accepted=accepted, reason=reason,
        blackbox_queries=blackbox, sample_queries=samples, wall_ms=wall_ms,
        verdict=verdict if config.keep_details else None,
        attempt_transcripts=attempts if config.keep_details else [],
        instance=inst if config.keep_details else None,
    )


def run_trials(config: ExperimentConfig) -> list[TrialResult]:
    """Run the batch; results are ordered by trial id."""
    shared = _tester_params_for(config)
    ids = range(config.trials)
    workers = worker_count()
    if workers <= 1 or config.trials <= 1:
        return [_run_one(config, i, shared) for i in ids]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: _run_one(config, i, shared), ids))


def summarize(results: list[TrialResult]) -> dict:
    """Acceptance rate and query-count aggregates for a batch."""
    total = len(results)
    accepted = sum(1 for r in results if r.accepted)
    reasons: dict[str, int] = {}
    for r in results:
        reasons[r.reason] = reasons.get(r.reason, 0) + 1
    bb = [r.blackbox_queries for r in results] or [0]
    ss = [r.sample_queries for r in results] or [0]
    return {
        "trials": total,
        "accepted": accepted,
        "accept_rate": accepted / total if total else None,
        "reasons": reasons,
        "mean_blackbox": sum(bb) / len(bb),
        "max_blackbox": max(bb),
        "mean_samples": sum(ss) / len(ss),
        "max_samples": max(ss),
    }


def write_trials_csv(fh, results: list[TrialResult]) -> None:
    """Emit the fixed-schema trial rows to an open text file."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow([r.trial, r.outcome, r.reason, r.blackbox_queries,
                         r.sample_queries, r.wall_ms])


_EARLY_REASONS = frozenset({"stage0-allones", "stage0-nil-representative",
                            "budget-exhausted"})


def query_budget_report(results: list[TrialResult], params: TesterParams,
                        n: int) -> dict:
    """Check every trial's query counts against the closed-form budget.

    Applies to the three-stage monotone tester. Requires unamplified,
    unbudgeted trials with retained details. Asserts that the
    sample count of every trial that got past Stage 0 equals the fixed
    Stage-0 draw count, and that black-box queries stay at or below
    1 + Z*2*ceil(log2 n) + 2s + d_star*(2*ceil(log2 n) + 2), with Z the
    trial's Stage-0 zero-sample count. Reports the ratio of the mean total
    query count to (n^(1/3)/eps^5) * log2(n/eps)^7.
    """
    if not results:
        raise ValueError("no results to report on")
    lg = ceil_log2(n)
    worst_ratio = 0.0
    totals = []
    for r in results:
        if r.reason == "budget-exhausted":
            raise ValueError("query accounting needs unbudgeted trials")
        if r.verdict is None or not r.attempt_transcripts:
            raise ValueError("logging absent: rerun with keep_details=True")
        if len(r.attempt_transcripts) != 1:
            raise ValueError("query accounting needs unamplified trials")
        if r.reason not in _EARLY_REASONS:
            if r.sample_queries != params.stage0_samples:
                raise AssertionError(
                    f"trial {r.trial}: sample_count {r.sample_queries} != "
                    f"stage0 draw count {params.stage0_samples}")
        z = r.verdict.stage0_zero_samples
        bound = 1 + z * 2 * lg + 2 * params.s + params.d_star * (2 * lg + 2)
        if r.blackbox_queries > bound:
            raise AssertionError(
                f"trial {r.trial}: blackbox_count {r.blackbox_queries} "
                f"exceeds bound {bound}")
        totals.append(r.blackbox_queries + r.sample_queries)
        worst_ratio = max(worst_ratio, r.blackbox_queries / bound)
    eps = float(params.epsilon)
    closed_form = (n ** (1.0 / 3.0) / eps ** 5) * log2(n / eps) ** 7
    return {
        "trials": len(results),
        "mean_total_queries": sum(totals) / len(totals),
        "max_total_queries": max(totals),
        "closed_form": closed_form,
        "ratio_to_closed_form": (sum(totals) / len(totals)) / closed_form,
        "worst_blackbox_fraction_of_bound": worst_ratio,
    }


# ---------------------------------------------------------------------------
# distinguishing experiments


class _SimSampler:
    """Sampling view of the no-black-box responder.

    Draws go through the strong oracle; a revealed C-set adds its special
    index to Gamma. Labels are the response bit at draw time, so they can
    disagree with the hidden function exactly the way the responder's answers
    do. Supports the sampler interface the pair-sampling baseline needs.
    """

    def __init__(self, inst: LBInstance, rng: RandomStream,
                 transcript: QueryTranscript, budget: Optional[QueryBudget],
                 gamma: set):
        self.inst = inst
        self.n = inst.n
        self.rng = rng
        self.transcript = transcript
        self.budget = budget
        self.gamma = gamma
        self._points: list[ZeroSet] = []
        self._labels: list[int] = []

    def draw_index(self) -> int:
        ss = strong_sample(self.inst, self.rng, self.transcript, self.budget)
        if ss.gamma is not None:
            self.gamma.add(ss.gamma)
        point = ZeroSet(self.n, ss.d_set)
        label = simulate_p(point, self.inst.R, frozenset(self.gamma))
        self._points.append(point)
        self._labels.append(label)
        return len(self._points) - 1

    def point(self, idx: int) -> ZeroSet:
        return self._points[idx]

    def zeros_of(self, idx: int) -> frozenset:
        return self._points[idx].zeros

    def label(self, idx: int) -> int:
        return self._labels[idx]


class _SimBlackBox:
    """Query view of the no-black-box responder: answers p(z, R, Gamma)."""

    def __init__(self, inst: LBInstance, transcript: QueryTranscript,
                 budget: Optional[QueryBudget], gamma: set):
        self.inst = inst
        self.n = inst.n
        self.transcript = transcript
        self.budget = budget
        self.gamma = gamma

    def query(self, x: ZeroSet) -> int:
        return self.query_set(x.zeros)

    def query_set(self, zeros: frozenset) -> int:
        if self.budget is not None:
            self.budget.take_blackbox(1)
        value = simulate_p(ZeroSet(self.n, zeros), self.inst.R,
                           frozenset(self.gamma))
        self.transcript.blackbox_count += 1
        return value


def _real_attempt(algo, inst, epsilon, budget, q, shared_params):
    def attempt(sub: RandomStream) -> Verdict:
        tr = QueryTranscript()
        oracle = BlackBox(inst.function, tr, budget)
        sampler = Sampler(inst.distribution, inst.function, tr,
                          sub.split("samples"), budget)
        tester_rng = sub.split("tester")
        if algo == "mconj":
            return test_monotone_conjunction(oracle, sampler, inst.n, epsilon,
                                             tester_rng, shared_params)
        if algo == "conj":
            return test_general_conjunction(oracle, sampler, inst.n, epsilon,
                                            tester_rng, shared_params)
        return baseline_dolev_ron(oracle, sampler, inst.n, epsilon, tester_rng,
                                  num_samples=q)
    return attempt


def _sim_attempt(inst, epsilon, budget, q):
    def attempt(sub: RandomStream) -> Verdict:
        tr = QueryTranscript()
        gamma: set = set()
        sampler = _SimSampler(inst, sub.split("samples"), tr, budget, gamma)
        oracle = _SimBlackBox(inst, tr, budget, gamma)
        tester_rng = sub.split("tester")
        return baseline_dolev_ron(oracle, sampler, inst.n, epsilon, tester_rng,
                                  num_samples=q)
    return attempt


def distinguishing_experiment(algo: str, params: LBParams, yes_variant: str,
                              no_variant: str, epsilon, trials: int, seed: int,
                              budgets: list, amplify_k: int = 1) -> list[dict]:
    """Acceptance gap between yes and no draws as a function of the budget.

    For every budget q, every oracle is capped at q calls (budget overruns
    force an accept) and the dolev-ron algorithm is sized to draw exactly q
    samples. The sim columns replay the same protocol against the
    no-black-box responder, which answers queries from (R, Gamma) alone and
    always drives the pair-sampling baseline; the primary tester's batch
    sampling does not interoperate with a responder whose answers depend on
    draw order.
    """
    if algo not in ALGOS:
        raise ValueError(f"unknown algo {algo!r}")
    if any(q < 0 for q in budgets):
        raise ValueError("budgets must be >= 0")
    eps = Fraction(epsilon)
    shared = None
    if algo in ("mconj", "conj"):
        shared = compute_parameters(params.n, eps)
    rows = []
    for q in budgets:
        rates = {}
        for world in ("real", "sim"):
            for variant in (yes_variant, no_variant):
                accepted = 0
                for i in range(trials):
                    rng = RandomStream(seed).split("exp", q, world, variant, i)
                    inst = generate_instance(params, variant,
                                             rng.split("instance"))
                    budget = QueryBudget(q, q)
                    if world == "real":
                        attempt = _real_attempt(algo, inst, eps, budget, q,
                                                shared)
                    else:
                        attempt = _sim_attempt(inst, eps, budget, q)
                    try:
                        verdict = amplify(attempt, amplify_k, rng)
                        ok = verdict.accepted
                    except BudgetExceeded:
                        ok = True
                    accepted += ok
                rates[(world, variant)] = accepted / trials if trials else 0.0
        rows.append({
            "budget": q,
            "yes_accept": rates[("real", yes_variant)],
            "no_accept": rates[("real", no_variant)],
            "gap": rates[("real", yes_variant)] - rates[("real", no_variant)],
            "sim_yes_accept": rates[("sim", yes_variant)],
            "sim_no_accept": rates[("sim", no_variant)],
            "sim_gap": (rates[("sim", yes_variant)]
                        - rates[("sim", no_variant)]),
        })
    return rows


def write_experiment_csv(fh, rows: list[dict]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(EXPERIMENT_HEADER)
    for row in rows:
        writer.writerow([row["budget"]] + [
            "%.6f" % row[key] for key in EXPERIMENT_HEADER[1:]])
