"""Differential privacy of repair channels and its effect on fairness and utility.

A single channel is shared by both protected groups, so the protected
attribute, the input and the released input form a Markov chain.  Two
constructions are provided:

``randomized_response``
    keeps the input with probability ``1 - exp(-eps)`` and otherwise spreads
    ``exp(-eps)`` evenly over the other symbols.  This is the channel used to
    show that some eps-private repair distorts the data by at most a constant
    times ``exp(-eps)``.  Its true privacy level is given by
    ``effective_epsilon`` and matches ``eps`` only for two symbols with
    ``eps >= ln 2``.
``k_randomized_response``
    the usual k-ary randomized response, keeping the input with probability
    ``e^eps / (e^eps + n - 1)``.  It is exactly eps-private for every ``eps``
    and ``n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, InvalidParameter
from .prob import (Alphabet, Channel, Pmf, dobrushin_coefficient, push_forward, tv_distance)
from .repair import GroupData, plan_metrics

__all__ = [
    "verify_cor1",
    "verify_cor3",
    "PrivacyBudget",
    "randomized_response",
    "k_randomized_response",
    "effective_epsilon",
    "dp_fairness_bound",
    "dp_utility_bound",
    "dp_bounds_table",
    "BoundReport",
    "check_private_parity",
    "check_private_distortion",
]


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0:
            raise InvalidParameter(f"privacy budget must be finite and >= 0, got {self.epsilon}")
        object.__setattr__(self, "epsilon", eps)

    def __float__(self):
        return self.epsilon


def _eps(epsilon) -> float:
    return PrivacyBudget(float(epsilon)).epsilon


def randomized_response(epsilon, n: int, alphabet: Alphabet | None = None) -> Channel:
    """Diagonal ``1 - exp(-eps)``, off-diagonal ``exp(-eps) / (n - 1)``."""
    eps = _eps(epsilon)
    if n < 2:
        raise InvalidParameter("randomized response needs at least two symbols")
    off = math.exp(-eps) / (n - 1)
    rows = np.full((n, n), off)
    np.fill_diagonal(rows, -math.expm1(-eps))
    alphabet = alphabet or Alphabet.range(n)
    return Channel(alphabet, alphabet, rows)


def k_randomized_response(epsilon, n: int, alphabet: Alphabet | None = None) -> Channel:
    """Keep the input w.p. ``e^eps / (e^eps + n - 1)``, else report another symbol uniformly."""
    eps = _eps(epsilon)
    if n < 2:
        raise InvalidParameter("randomized response needs at least two symbols")
    # divide through by e^eps so large budgets do not overflow
    denom = 1.0 + (n - 1) * math.exp(-eps)
    rows = np.full((n, n), math.exp(-eps) / denom)
    np.fill_diagonal(rows, 1.0 / denom)
    alphabet = alphabet or Alphabet.range(n)
    return Channel(alphabet, alphabet, rows)


def effective_epsilon(t: Channel) -> float:
    """Smallest eps for which ``t`` is eps-differentially private.

    ``max`` over outputs of ``log(max_x t(out|x) / min_x t(out|x))``; infinite
    when some output is possible from one input and impossible from another.
    """
    rows = t.rows
    if rows.shape[0] != rows.shape[1]:
        raise DimensionError("effective_epsilon expects a square channel")
    hi = rows.max(axis=0)
    lo = rows.min(axis=0)
    used = hi > 0
    if np.any(lo[used] == 0):
        return math.inf
    if not used.any():
        return 0.0
    return float(np.max(np.log(hi[used]) - np.log(lo[used])))


def dp_fairness_bound(epsilon) -> float:
    """``1 - exp(-eps)``: parity gap ceiling for any eps-private shared channel."""
    return -math.expm1(-_eps(epsilon))


def dp_utility_bound(epsilon) -> float:
    """``exp(-eps)``: the claimed distortion attainable by some eps-private channel."""
    return math.exp(-_eps(epsilon))


def dp_bounds_table(epsilons) -> np.ndarray:
    """Rows ``(eps, 1 - exp(-eps), exp(-eps))``."""
    return np.array([(e, dp_fairness_bound(e), dp_utility_bound(e)) for e in map(_eps, epsilons)])


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking one privacy bound.

    ``tv`` is the measured distance, ``bound_statement`` the closed-form bound
    and ``bound_proof`` the tighter or looser bound the derivation actually
    supports; ``holds`` refers to the bound being asserted (see ``asserted``).
    """

    epsilon: float
    tv: float
    dobrushin: float
    bound_statement: float
    bound_proof: float
    holds: bool
    asserted: str
    statement_holds: bool
    effective_epsilon: float
    channel: str

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["effective_epsilon"]):
            d["effective_epsilon"] = "inf"
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def check_private_parity(epsilon, q0: Pmf, q1: Pmf, channel: Channel | None = None,
                slack: float = 1e-12) -> BoundReport:
    """Check ``tv(T q1, T q0) <= 1 - exp(-eps)`` for an eps-private shared channel ``T``.

    The default channel is ``k_randomized_response``.  A supplied channel must
    be eps-private (``effective_epsilon(channel) <= eps``).
    """
    eps = _eps(epsilon)
    if q0.alphabet != q1.alphabet:
        raise DimensionError("group pmfs must share an alphabet")
    n = q0.alphabet.size
    name = "supplied"
    if channel is None:
        channel = k_randomized_response(eps, n, q0.alphabet)
        name = "k_randomized_response"
    eff = effective_epsilon(channel)
    if eff > eps + 1e-9:
        raise InvalidParameter(f"channel is only {eff:.6g}-private, not {eps:.6g}-private")
    tv = tv_distance(push_forward(channel, q1), push_forward(channel, q0))
    eta = dobrushin_coefficient(channel)
    bound = dp_fairness_bound(eps)
    holds = tv <= bound + slack
    return BoundReport(eps, tv, eta, bound, eta, holds, "statement", holds, eff, name)


def check_private_distortion(epsilon, data: GroupData, slack: float = 1e-12) -> BoundReport:
    """Distortion of the ``randomized_response`` repair against its two bounds.

    Asserts ``E tv(P~_S, P_S) <= n / (n - 1) * exp(-eps)``, the bound the
    construction supports; ``exp(-eps)`` is evaluated and reported in
    ``statement_holds`` only.
    """
    eps = _eps(epsilon)
    n = data.x_alphabet.size
    t = randomized_response(eps, n, data.x_alphabet)
    objective, _ = plan_metrics(data, t, t)
    proof = n / (n - 1) * math.exp(-eps)
    statement = dp_utility_bound(eps)
    return BoundReport(eps, objective, dobrushin_coefficient(t), statement, proof,
                       objective <= proof + slack, "proof", objective <= statement + slack,
                       effective_epsilon(t), "randomized_response")


# longer-standing names, kept as aliases
verify_cor1 = check_private_parity
verify_cor3 = check_private_distortion
