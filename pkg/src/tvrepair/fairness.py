"""Disparate impact, utility degradation and the bounds that control them.

Classifiers are deterministic lookup tables from input index to label index.
All expectations are exact sums over the finite alphabets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlphabetTooLarge, DimensionError, InvalidParameter
from .prob import Pmf, tv_distance, tv_distance_joint
from .repair import GroupData, RepairPlan, repaired_joints

__all__ = [
    "theorem1_bound",
    "theorem2_bound",
    "Classifier",
    "LossTable",
    "output_distribution",
    "disparate_impact",
    "disparate_impact_bound",
    "expected_loss",
    "utility_degradation",
    "utility_degradation_bound",
    "accuracy",
    "accuracy_gap_bound",
    "adversary_min_error",
    "ADVERSARY_LIMIT",
]

ADVERSARY_LIMIT = 20


@dataclass(frozen=True)
class Classifier:
    """Deterministic model; ``mapping[x]`` is the predicted label index."""

    mapping: np.ndarray
    n_outputs: int

    def __post_init__(self):
        mapping = np.asarray(self.mapping, dtype=np.int64)
        if mapping.ndim != 1:
            raise DimensionError("classifier mapping must be one-dimensional")
        if mapping.size and (mapping.min() < 0 or mapping.max() >= self.n_outputs):
            raise DimensionError("classifier outputs fall outside the label alphabet")
        mapping.setflags(write=False)
        object.__setattr__(self, "mapping", mapping)

    @property
    def n_inputs(self) -> int:
        return self.mapping.shape[0]

    def as_matrix(self) -> np.ndarray:
        """0/1 matrix ``M[x, y] = [mapping[x] == y]``."""
        out = np.zeros((self.n_inputs, self.n_outputs))
        out[np.arange(self.n_inputs), self.mapping] = 1.0
        return out


@dataclass(frozen=True)
class LossTable:
    """Loss ``values[predicted, actual]`` bounded in absolute value by ``sigma``."""

    values: np.ndarray
    sigma: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionError("loss table must be square over the label alphabet")
        if self.sigma <= 0:
            raise InvalidParameter("sigma must be positive")
        if np.abs(values).max() > self.sigma:
            raise InvalidParameter(f"|loss| reaches {np.abs(values).max():.3g} > sigma={self.sigma}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zero_one(cls, n: int) -> "LossTable":
        return cls(1.0 - np.eye(n), 1.0)


def output_distribution(m: Classifier, q: Pmf) -> np.ndarray:
    """Distribution of ``m(X)`` when ``X ~ q``."""
    if q.alphabet.size != m.n_inputs:
        raise DimensionError(f"classifier takes {m.n_inputs} inputs, pmf has {q.alphabet.size}")
    return np.bincount(m.mapping, weights=q.mass, minlength=m.n_outputs)


def disparate_impact(m: Classifier, q1: Pmf, q0: Pmf) -> float:
    """Largest per-label gap ``max_y |P(m(X)=y | S=1) - P(m(X)=y | S=0)|``."""
    if q1.alphabet != q0.alphabet:
        raise DimensionError("group pmfs must share an alphabet")
    return float(np.abs(output_distribution(m, q1) - output_distribution(m, q0)).max())


def disparate_impact_bound(q1: Pmf, q0: Pmf) -> float:
    """Twice the total variation distance; dominates ``disparate_impact`` for every classifier."""
    return 2.0 * tv_distance(q1, q0)


def _check_model(m: Classifier, data: GroupData, loss: LossTable | None = None):
    if m.n_inputs != data.x_alphabet.size:
        raise DimensionError("classifier input size differs from the data alphabet")
    if m.n_outputs != data.y_alphabet.size:
        raise DimensionError("classifier outputs differ from the label alphabet")
    if loss is not None and loss.values.shape[0] != data.y_alphabet.size:
        raise DimensionError("loss table does not match the label alphabet")


def expected_loss(m: Classifier, loss: LossTable, joints, pi: Pmf) -> float:
    """``sum_s pi_s E_{P_s}[loss(m(X), Y)]``."""
    table = loss.values[m.mapping, :]          # [x, y] -> loss(m(x), y)
    return float(sum(pi.mass[s] * np.sum(j.mass * table) for s, j in enumerate(joints)))


def utility_degradation(m: Classifier, loss: LossTable, data: GroupData, plan: RepairPlan) -> float:
    _check_model(m, data, loss)
    before = expected_loss(m, loss, data.joints, data.pi)
    after = expected_loss(m, loss, repaired_joints(data, plan.channels), data.pi)
    return abs(after - before)


def expected_tv(data: GroupData, plan: RepairPlan) -> float:
    """``sum_s pi_s tv(P~_s, P_s)`` recomputed from the plan's channels."""
    repaired = repaired_joints(data, plan.channels)
    return float(sum(data.pi.mass[s] * tv_distance_joint(repaired[s], data.joints[s])
                     for s in (0, 1)))


def utility_degradation_bound(sigma: float, data: GroupData, plan: RepairPlan) -> float:
    if sigma <= 0:
        raise InvalidParameter("sigma must be positive")
    return 2.0 * sigma * expected_tv(data, plan)


def accuracy(m: Classifier, joints, pi: Pmf) -> float:
    """Probability that ``m(X) == Y`` under the group mixture."""
    hit = m.as_matrix()
    return float(sum(pi.mass[s] * np.sum(j.mass * hit) for s, j in enumerate(joints)))


def accuracy_gap_bound(data: GroupData, plan: RepairPlan) -> float:
    """Bound on how much repair can change any classifier's accuracy or error rate."""
    return 2.0 * expected_tv(data, plan)


def adversary_min_error(q1: Pmf, q0: Pmf) -> float:
    """Best worst-group error of a deterministic guess of ``S`` from ``X``.

    Enumerates all ``2**n`` decision rules ``psi``; for each, the error on
    group 1 is ``q1(psi = 0)`` and on group 0 is ``q0(psi = 1)``.
    """
    if q1.alphabet != q0.alphabet:
        raise DimensionError("group pmfs must share an alphabet")
    n = q1.alphabet.size
    if n > ADVERSARY_LIMIT:
        raise AlphabetTooLarge(f"exhaustive search is limited to {ADVERSARY_LIMIT} symbols, got {n}")
    # subset sums over all masks, built by doubling; bit i of the mask is psi(i)
    mass1 = np.zeros(1)
    mass0 = np.zeros(1)
    for i in range(n):
        mass1 = np.concatenate([mass1, mass1 + q1.mass[i]])
        mass0 = np.concatenate([mass0, mass0 + q0.mass[i]])
    err1 = q1.mass.sum() - mass1      # psi(x) = 0 on group 1
    err0 = mass0                      # psi(x) = 1 on group 0
    return float(np.maximum(err1, err0).min())


# longer-standing names, kept as aliases
theorem1_bound = disparate_impact_bound
theorem2_bound = utility_degradation_bound
