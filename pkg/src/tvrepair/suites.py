"""Randomized property suites for the fairness, utility and privacy bounds.

Each suite draws instances from a seeded generator, evaluates one inequality
``lhs <= rhs`` per instance and reports the worst margin ``max(lhs - rhs)``.
The ``verify`` subcommand runs all of them; the test suite uses the instance
generators directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fairness import (Classifier, LossTable, adversary_min_error, disparate_impact,
                       disparate_impact_bound, utility_degradation_bound, utility_degradation)
from .prob import Alphabet, Channel, JointTable, Pmf, tv_distance
from .privacy import check_private_parity, check_private_distortion
from .repair import GroupData, RepairPlan, plan_metrics

TOL = 1e-9


def random_pmf(rng: np.random.Generator, n: int, alphabet: Alphabet | None = None,
               sparse: bool = True) -> Pmf:
    """Dirichlet(1) draw; with ``sparse`` a random subset of entries may be zeroed."""
    mass = rng.dirichlet(np.ones(n))
    if sparse and n > 1 and rng.random() < 0.3:
        keep = rng.random(n) < 0.6
        keep[rng.integers(n)] = True
        mass = np.where(keep, mass, 0.0)
        mass /= mass.sum()
    return Pmf(alphabet or Alphabet.range(n), mass)


def random_channel(rng: np.random.Generator, n: int, alphabet: Alphabet | None = None) -> Channel:
    alphabet = alphabet or Alphabet.range(n)
    return Channel(alphabet, alphabet, rng.dirichlet(np.ones(n), size=n))


def random_group_data(rng: np.random.Generator, n: int, ny: int = 2) -> GroupData:
    xa, ya = Alphabet.range(n), Alphabet.range(ny)
    joints = [JointTable(xa, ya, random_pmf(rng, n * ny).mass.reshape(n, ny)) for _ in range(2)]
    w = rng.uniform(0.05, 0.95)
    return GroupData(joints[0], joints[1], Pmf(Alphabet(("0", "1")), np.array([w, 1.0 - w])))


def random_plan(rng: np.random.Generator, data: GroupData) -> RepairPlan:
    n = data.x_alphabet.size
    t0 = random_channel(rng, n, data.x_alphabet)
    t1 = random_channel(rng, n, data.x_alphabet)
    objective, gap = plan_metrics(data, t0, t1)
    return RepairPlan(t0, t1, 1.0, objective, gap)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    checks: int
    failures: int
    worst_margin: float
    asserted: bool = True

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        if not self.asserted:
            verdict = "INFO " + verdict
        return (f"{verdict} {self.name}: {self.checks} checks, {self.failures} failures, "
                f"worst margin {self.worst_margin:.3e}")


class _Tally:
    def __init__(self, name: str, tol: float = TOL, asserted: bool = True):
        self.name, self.tol, self.asserted = name, tol, asserted
        self.checks = self.failures = 0
        self.worst = -np.inf

    def add(self, lhs: float, rhs: float):
        self.checks += 1
        self.worst = max(self.worst, lhs - rhs)
        self.failures += lhs > rhs + self.tol

    def result(self) -> SuiteResult:
        return SuiteResult(self.name, self.checks, int(self.failures), float(self.worst),
                           self.asserted)


def parity_bound_suite(rng: np.random.Generator, trials: int = 100) -> SuiteResult:
    """Every deterministic classifier's disparate impact stays within twice the input TV."""
    tally = _Tally("disparate impact <= 2 tv")
    for _ in range(trials):
        n, ny = int(rng.integers(1, 5)), int(rng.integers(2, 4))
        q1, q0 = random_pmf(rng, n), random_pmf(rng, n)
        bound = disparate_impact_bound(q1, q0)
        for mapping in itertools.product(range(ny), repeat=n):
            tally.add(disparate_impact(Classifier(np.array(mapping), ny), q1, q0), bound)
    return tally.result()


def utility_bound_suite(rng: np.random.Generator, trials: int = 100) -> SuiteResult:
    """Loss change under repair stays within ``2 sigma`` times the expected distortion."""
    tally = _Tally("utility degradation <= 2 sigma E tv")
    for _ in range(trials):
        n, ny = int(rng.integers(2, 7)), int(rng.integers(2, 4))
        data = random_group_data(rng, n, ny)
        plan = random_plan(rng, data)
        sigma = float(rng.uniform(0.1, 5.0))
        loss = LossTable(rng.uniform(-sigma, sigma, size=(ny, ny)), sigma)
        m = Classifier(rng.integers(ny, size=n), ny)
        tally.add(utility_degradation(m, loss, data, plan), utility_degradation_bound(sigma, data, plan))
    return tally.result()


def adversary_suite(rng: np.random.Generator, trials: int = 100) -> SuiteResult:
    """The best guess of the group from the input errs at least ``(1 - tv) / 2``."""
    tally = _Tally("(1 - tv)/2 <= adversary error", tol=1e-12)
    for _ in range(trials):
        n = int(rng.integers(1, 11))
        q1, q0 = random_pmf(rng, n), random_pmf(rng, n)
        tally.add(0.5 * (1.0 - tv_distance(q1, q0)), adversary_min_error(q1, q0))
    return tally.result()


DP_EPSILONS = tuple(np.round(np.arange(1, 51) * 0.1, 10))


def dp_fairness_suite(rng: np.random.Generator, trials: int = 100,
                      epsilons=DP_EPSILONS, n: int = 2) -> SuiteResult:
    """A private shared channel leaves a parity gap of at most ``1 - exp(-eps)``."""
    tally = _Tally("private channel gap <= 1 - exp(-eps)", tol=1e-12)
    pairs = [(random_pmf(rng, n), random_pmf(rng, n)) for _ in range(trials)]
    for eps in epsilons:
        for q0, q1 in pairs:
            r = check_private_parity(eps, q0, q1)
            tally.add(r.tv, r.bound_statement)
    return tally.result()


def dp_distortion_suite(data_list, epsilons=(0.5, 1.0, 2.0)) -> tuple[SuiteResult, SuiteResult]:
    """Randomized-response distortion against ``n/(n-1) exp(-eps)`` and against ``exp(-eps)``.

    Only the first result is a guarantee; the second is informational.
    """
    proof = _Tally("randomized response distortion <= n/(n-1) exp(-eps)", tol=1e-12)
    statement = _Tally("randomized response distortion <= exp(-eps)", tol=1e-12,
                       asserted=False)
    for data in data_list:
        for eps in epsilons:
            r = check_private_distortion(eps, data)
            proof.add(r.tv, r.bound_proof)
            statement.add(r.tv, r.bound_statement)
    return proof.result(), statement.result()


def run_all(seed: int, trials: int = 100, data: GroupData | None = None) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    out = [parity_bound_suite(rng, trials), utility_bound_suite(rng, trials),
           adversary_suite(rng, trials), dp_fairness_suite(rng, trials)]
    sample = [data] if data is not None else [random_group_data(rng, int(rng.integers(2, 7)))
                                              for _ in range(trials)]
    out.extend(dp_distortion_suite(sample))
    return out


__all__ = ["SuiteResult", "random_pmf", "random_channel", "random_group_data", "random_plan",
           "parity_bound_suite", "utility_bound_suite", "adversary_suite", "dp_fairness_suite",
           "dp_distortion_suite", "run_all"]
