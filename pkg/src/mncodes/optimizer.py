"""Differential-evolution search for base matrices with a small worst-case loss.

The worst-case loss of a base matrix over a set of target rates is the
largest gap, in dB, between its PEXIT threshold and the Shannon limit.
Genomes are real vectors in ``[0, max_entry]``; they are rounded and clamped
to integer base matrices only for evaluation.  The search loop itself is
scipy's differential evolution.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import differential_evolution

from .analysis.jfunc import shannon_limit
from .analysis.pexit import NoConvergenceError, pexit_threshold
from .protograph import BaseMatrix, validate
from .ratemath import omega_for_rate


@dataclass
class SearchSpec:
    m0: int
    n0_total: int
    h0: int
    rate_targets: tuple
    max_entry: int = 3
    population: int | None = None
    generations: int = 200
    F: float = 0.8
    CR: float = 0.9
    seed: int = 0
    tol_db: float = 0.01
    initial: tuple = ()  # base matrices injected into the first population

    def __post_init__(self):
        self.rate_targets = tuple(float(r) for r in self.rate_targets)
        n0 = self.n0_total - self.h0
        if self.h0 < 1 or n0 < 1 or self.m0 != n0:
            raise ValueError(f"shape {self.m0}x{self.n0_total} with h0={self.h0} has no square H2 part")
        r_i = self.h0 / n0
        if not self.rate_targets or not all(0.0 < r <= r_i for r in self.rate_targets):
            raise ValueError(f"rate targets must lie in (0, {r_i}]")
        if self.population is not None and self.population < 4:
            raise ValueError("differential evolution needs at least 4 individuals")

    @property
    def genome_length(self) -> int:
        return self.m0 * self.n0_total

    @property
    def population_size(self) -> int:
        return self.population or min(10 * self.genome_length, 60)

    def as_dict(self) -> dict:
        return {
            "m0": self.m0, "n0_total": self.n0_total, "h0": self.h0,
            "rate_targets": list(self.rate_targets), "max_entry": self.max_entry,
            "population": self.population_size, "generations": self.generations,
            "F": self.F, "CR": self.CR, "seed": self.seed, "tol_db": self.tol_db,
            "initial": [b.entries.tolist() for b in self.initial],
        }


@dataclass
class Candidate:
    base: BaseMatrix
    wcl_db: float
    per_rate_gaps: list


@dataclass
class SearchResult:
    population: list  # Candidates sorted by WCL
    history: list = field(default_factory=list)  # (generation, best WCL)

    @property
    def best(self) -> Candidate:
        return self.population[0]


def evaluate_wcl(base: BaseMatrix, rate_targets, tol_db: float = 0.01) -> tuple[float, list]:
    """Worst-case gap to the Shannon limit; ``inf`` for invalid or non-converging bases."""
    if validate(base):
        return math.inf, []
    gaps = []
    r_i = float(base.inner_rate)
    for rate in rate_targets:
        omega = omega_for_rate(rate, r_i)
        try:
            gamma = pexit_threshold(base, omega, rate, tol_db=tol_db).gamma_star
        except NoConvergenceError:
            return math.inf, []
        gaps.append(gamma - shannon_limit(rate))
    return max(gaps), gaps


def phenotype(genome: np.ndarray, spec: SearchSpec) -> BaseMatrix:
    ent = np.clip(np.rint(genome), 0, spec.max_entry).astype(np.int64)
    return BaseMatrix(ent.reshape(spec.m0, spec.n0_total), spec.h0, spec.max_entry)


class _Objective:
    """Memoized WCL of the rounded phenotype; identical phenotypes share one evaluation."""

    def __init__(self, spec: SearchSpec):
        self.spec = spec
        self.cache: dict = {}
        self.lock = threading.Lock()

    def candidate(self, genome) -> Candidate:
        b = phenotype(genome, self.spec)
        with self.lock:
            hit = self.cache.get(b)
        if hit is None:
            hit = Candidate(b, *evaluate_wcl(b, self.spec.rate_targets, self.spec.tol_db))
            with self.lock:
                self.cache[b] = hit
        return hit

    def __call__(self, genome) -> float:
        return self.candidate(genome).wcl_db


def optimize(spec: SearchSpec, threads: int = 1, callback=None) -> SearchResult:
    """DE/rand/1/bin with one-to-one greedy selection after each full generation.

    The first population is drawn uniformly from the genome box by a generator
    seeded with ``spec.seed``; injected base matrices replace its leading rows.
    """
    rng = np.random.default_rng(spec.seed)
    NP, L = spec.population_size, spec.genome_length
    init = rng.uniform(0.0, spec.max_entry, size=(NP, L))
    for k, b in enumerate(spec.initial[:NP]):
        if b.entries.shape != (spec.m0, spec.n0_total) or b.h0 != spec.h0:
            raise ValueError("injected base matrix does not match the search shape")
        init[k] = b.entries.reshape(-1)
    objective = _Objective(spec)
    history = []

    def record(intermediate_result):
        gen = len(history) + 1
        history.append((gen, float(intermediate_result.fun)))
        if callback:
            callback(gen, objective.candidate(intermediate_result.x))

    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        res = differential_evolution(
            objective, [(0.0, float(spec.max_entry))] * L, strategy="rand1bin",
            maxiter=spec.generations, init=init, mutation=spec.F, recombination=spec.CR,
            rng=np.random.default_rng([spec.seed, 1]), polish=False, tol=0.0, atol=0.0,
            updating="deferred", workers=pool.map if pool else 1, callback=record,
        )
    finally:
        if pool:
            pool.shutdown()
    cands = [objective.candidate(g) for g in res.population]
    order = sorted(range(len(cands)), key=lambda k: (cands[k].wcl_db, k))
    # initial population's best, for a complete elitism trace
    first = min(objective.candidate(g).wcl_db for g in init)
    return SearchResult([cands[k] for k in order], [(0, first)] + history)
