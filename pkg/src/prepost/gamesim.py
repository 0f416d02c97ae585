"""Monte-Carlo simulation of the estimation game with a post-selection gate.

One trial:

1. Alice draws ``theta`` from the prior.
2. The pre-selector prepares ``psi_i(theta)``.
3. The measurer samples a branch of the instrument. Besides the ordinary
   outcomes there is a "dump" branch carrying the missing weight of a
   subnormalized instrument (the fixed post-selected ancilla ends in |1>).
4. For the pre/post-selected scenario the post-selector measures
   ``{|psi_f><psi_f|, 1 - |psi_f><psi_f|}`` on the post-measurement state.
5. The gate forwards ``k`` only if every post-selection succeeded;
   otherwise steps 2-4 are repeated with the same ``theta``.
6. Bob guesses ``estimator(k)`` and the merit is recorded.

Random streams: trial ``t`` of a run with seed ``s`` draws from
``Generator(Philox(key=s, counter=[0, 0, 0, t]))``. The top counter word
separates trials, so streams never overlap and any partition of the trials
across workers reproduces the same outcome sequence.
"""
from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import InvalidInstrument, RetryExhausted
from .instruments import (
    Estimator,
    Instrument,
    KrausSet,
    Normalization,
    Povm,
    Scenario,
    average_merit,
    estimate,
    stable_apply,
)
from .problem import EstimationProblem

MAX_RETRIES = 10**6
_CACHE_SIZE = 4096


@dataclass(frozen=True)
class GameConfig:
    trials: int
    seed: int = 0
    max_retries: int = MAX_RETRIES
    scenario: Scenario = Scenario.PRE_ONLY
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.trials < 1 or self.max_retries < 1 or self.workers < 1:
            raise ValueError("trials, max_retries and workers must be positive")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["scenario"] = self.scenario.value
        return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, trial]))


@dataclass
class GameResult:
    config: GameConfig
    merits: np.ndarray = field(repr=False)
    outcomes: np.ndarray = field(repr=False)
    attempts: np.ndarray = field(repr=False)
    branch_counts: np.ndarray = field(repr=False)
    n_outcomes: int = 0
    analytic_merit: float | None = None
    elapsed: float = 0.0

    @property
    def empirical_merit(self) -> float:
        return float(self.merits.mean())

    @property
    def stderr(self) -> float:
        if self.merits.size < 2:
            return 0.0
        return float(self.merits.std(ddof=1) / np.sqrt(self.merits.size))

    @property
    def histogram(self) -> np.ndarray:
        """Accepted (post-gate) outcome counts."""
        return np.bincount(self.outcomes, minlength=self.n_outcomes)

    @property
    def pre_gate_histogram(self) -> np.ndarray:
        """Measurement-branch counts over all attempts, before the gate.

        Index ``n_outcomes`` counts the dump branch.
        """
        return self.branch_counts

    @property
    def mean_attempts(self) -> float:
        return float(self.attempts.mean())

    def retry_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.attempts.tolist()).items()))

    def within(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.empirical_merit - value) <= n_sigma * self.stderr

    def to_dict(self) -> dict:
        out = {
            "config": self.config.to_dict(),
            "empirical_merit": self.empirical_merit,
            "stderr": self.stderr,
            "analytic_merit": self.analytic_merit,
            "outcome_counts": self.histogram.tolist(),
            "pre_gate_branch_counts": self.branch_counts.tolist(),
            "mean_attempts": self.mean_attempts,
            "retry_histogram": {str(k): v for k, v in self.retry_histogram().items()},
        }
        if self.analytic_merit is not None:
            out["deviation_in_stderr"] = (
                abs(self.empirical_merit - self.analytic_merit) / self.stderr
                if self.stderr > 0 else (0.0 if self.empirical_merit == self.analytic_merit else float("inf"))
            )
        return out


class _Branches:
    """Per-theta branch probabilities and post-selection success chances."""

    __slots__ = ("cdf", "success")

    def __init__(self, instrument: Instrument, scenario: Scenario, pre, post):
        v = pre.amplitudes
        if scenario is Scenario.PRE_POST:
            images = [stable_apply(a, v) for a in instrument.operators]
            probs = np.array([np.vdot(x, x).real for x in images])
            bra = post.bra()[None, :]
            self.success = np.array([
                abs(stable_apply(bra @ a, v)[0]) ** 2 / p if p > 0 else 0.0
                for a, p in zip(instrument.operators, probs)
            ])
        else:
            probs = np.array([np.vdot(v, m @ v).real for m in instrument.elements])
            self.success = None
        probs = np.clip(probs, 0.0, None)
        dump = max(0.0, 1.0 - probs.sum())
        self.cdf = np.cumsum(np.append(probs, dump))
        self.cdf /= self.cdf[-1]


def _check_compatible(instrument: Instrument, scenario: Scenario) -> None:
    if scenario is Scenario.PRE_POST and not isinstance(instrument, KrausSet):
        raise InvalidInstrument("the pre/post-selected game needs a KrausSet")
    if scenario is not Scenario.PRE_POST and not isinstance(instrument, Povm):
        raise InvalidInstrument(f"the {scenario.value} game needs a Povm")
    if scenario is Scenario.PRE_ONLY and instrument.mode is not Normalization.EXACT:
        raise InvalidInstrument("without post-selection the POVM must be exact")


def _run_trials(problem, instrument, guesses, cfg, start, stop):
    n_out = len(instrument)
    scenario = cfg.scenario
    merits = np.empty(stop - start)
    outcomes = np.empty(stop - start, dtype=np.int64)
    attempts = np.empty(stop - start, dtype=np.int64)
    branch_counts = np.zeros(n_out + 1, dtype=np.int64)
    cache: dict = {}  # discrete priors repeat theta; continuous ones fill it once and stop
    for i, t in enumerate(range(start, stop)):
        rng = trial_rng(cfg.seed, t)
        theta = problem.sampler(rng)
        br = cache.get(theta)
        if br is None:
            pre = problem.encode_pre(theta)
            post = problem.encode_post(theta) if scenario is Scenario.PRE_POST else None
            br = _Branches(instrument, scenario, pre, post)
            if len(cache) < _CACHE_SIZE:
                cache[theta] = br
        for n in range(1, cfg.max_retries + 1):
            k = min(int(np.searchsorted(br.cdf, rng.random(), side="right")), n_out)
            branch_counts[k] += 1
            if k == n_out:
                continue
            if br.success is not None and rng.random() >= br.success[k]:
                continue
            break
        else:
            raise RetryExhausted(f"no accepted outcome after {cfg.max_retries} attempts",
                                 theta=theta, retries=cfg.max_retries)
        merits[i] = problem.merit(theta, guesses[k])
        outcomes[i] = k
        attempts[i] = n
    return merits, outcomes, attempts, branch_counts


def run_game(problem: EstimationProblem, instrument: Instrument, estimator: Estimator,
             cfg: GameConfig, analytic_merit: float | None = None) -> GameResult:
    """Simulate ``cfg.trials`` rounds of the game and collect statistics."""
    _check_compatible(instrument, cfg.scenario)
    if cfg.scenario is Scenario.PRE_POST and problem.encode_post is None:
        raise ValueError("the pre/post-selected game needs a post-selection encoder")
    guesses = [estimate(estimator, k) for k in range(len(instrument))]
    t0 = time.perf_counter()
    bounds = np.linspace(0, cfg.trials, cfg.workers + 1).astype(int)
    chunks = list(zip(bounds[:-1], bounds[1:]))
    if cfg.workers == 1:
        parts = [_run_trials(problem, instrument, guesses, cfg, *chunks[0])]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(lambda c: _run_trials(problem, instrument, guesses, cfg, *c), chunks))
    merits, outcomes, attempts, branches = zip(*parts)
    return GameResult(
        config=cfg,
        merits=np.concatenate(merits),
        outcomes=np.concatenate(outcomes),
        attempts=np.concatenate(attempts),
        branch_counts=np.sum(branches, axis=0),
        n_outcomes=len(instrument),
        analytic_merit=analytic_merit,
        elapsed=time.perf_counter() - t0,
    )


def analytic_reference(problem: EstimationProblem, instrument: Instrument, estimator: Estimator,
                       grid: Sequence[tuple[Any, float]], scenario: Scenario = Scenario.PRE_ONLY) -> float:
    """Exact expected merit on a finite grid (see :func:`average_merit`)."""
    return average_merit(problem, instrument, estimator, scenario, grid)
