"""Optimal repair channels under a total-variation parity budget.

For two protected groups with conditional joints ``P_s(x, y)`` and weights
``pi_s``, the repair problem chooses channels ``T_s(x_out | x)`` minimising the
expected distortion ``sum_s pi_s * tv(T_s P_s, P_s)`` subject to
``tv(T_1 Q_1, T_0 Q_0) <= rho``, where ``Q_s`` is the x-marginal of ``P_s``.
Absolute values are linearised with paired epigraph rows, which turns the
problem into a linear program with ``2 n^2`` channel variables plus
``2 n |Y| + n`` auxiliaries.

``build_barycenter`` is the companion program over a single pmf ``Q``
minimising ``pi_0 tv(Q, Q_0) + pi_1 tv(Q, Q_1)``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lp
from .errors import DimensionError, InternalError, InvalidParameter
from .prob import (Alphabet, Channel, JointTable, Pmf, marginal_x, push_forward,
                   push_forward_joint, to_dict, from_dict, tv_distance, tv_distance_joint)

__all__ = [
    "build_p_rho",
    "GroupData",
    "RepairPlan",
    "ProblemLayout",
    "build_repair_lp",
    "solve_repair",
    "build_barycenter",
    "solve_barycenter",
    "barycenter_value",
    "sweep",
    "identity_plan",
    "repaired_joints",
    "plan_metrics",
]

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class GroupData:
    """Conditional joints ``P_0, P_1`` and the group weights ``pi``."""

    joint_0: JointTable
    joint_1: JointTable
    pi: Pmf

    def __post_init__(self):
        if (self.joint_0.x_alphabet != self.joint_1.x_alphabet
                or self.joint_0.y_alphabet != self.joint_1.y_alphabet):
            raise DimensionError("group joints must share alphabets")
        if self.pi.alphabet.size != 2:
            raise DimensionError("pi must be a pmf over two groups")
        if np.any(self.pi.mass <= 0):
            raise InvalidParameter("both group weights must be positive")

    @property
    def joints(self) -> tuple[JointTable, JointTable]:
        return self.joint_0, self.joint_1

    @property
    def x_alphabet(self) -> Alphabet:
        return self.joint_0.x_alphabet

    @property
    def y_alphabet(self) -> Alphabet:
        return self.joint_0.y_alphabet

    def q(self, s: int) -> Pmf:
        return marginal_x(self.joints[s])


@dataclass(frozen=True)
class RepairPlan:
    channel_0: Channel
    channel_1: Channel
    rho: float
    objective: float
    parity_gap: float

    @property
    def channels(self) -> tuple[Channel, Channel]:
        return self.channel_0, self.channel_1

    def to_dict(self) -> dict:
        return {"rho": self.rho, "objective": self.objective, "parity_gap": self.parity_gap,
                "channel_0": to_dict(self.channel_0), "channel_1": to_dict(self.channel_1)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "RepairPlan":
        return cls(from_dict(d["channel_0"]), from_dict(d["channel_1"]),
                   float(d["rho"]), float(d["objective"]), float(d["parity_gap"]))

    @classmethod
    def from_json(cls, text: str) -> "RepairPlan":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ProblemLayout:
    """Variable offsets of the repair LP.

    ``T_s[x, x_out]`` lives at ``chan(s) + x * n + x_out``; the epigraph
    variable of group ``s`` at cell ``(x_out, y)`` at ``dev(s) + x_out * ny + y``;
    the parity auxiliaries at ``gap + x_out``.
    """

    n: int
    ny: int

    def chan(self, s: int) -> int:
        return s * self.n * self.n

    def dev(self, s: int) -> int:
        return 2 * self.n * self.n + s * self.n * self.ny

    @property
    def gap(self) -> int:
        return 2 * self.n * self.n + 2 * self.n * self.ny

    @property
    def size(self) -> int:
        return self.gap + self.n


def _check_rho(rho):
    if not (0.0 <= rho <= 1.0):
        raise InvalidParameter(f"rho must lie in [0, 1], got {rho}")


def _pushforward_block(joint: np.ndarray, n: int) -> sp.csr_matrix:
    """Sparse map from ``vec(T)`` (row-major, n x n) to ``vec(T^T P)`` (n x ny).

    Entry ``[(x_out, y), (x, x_out)] = P[x, y]``.
    """
    ny = joint.shape[1]
    x, xo, y = np.meshgrid(np.arange(n), np.arange(n), np.arange(ny), indexing="ij")
    vals = joint[x, y]
    keep = vals != 0
    rows = (xo * ny + y)[keep]
    cols = (x * n + xo)[keep]
    return sp.csr_matrix((vals[keep], (rows, cols)), shape=(n * ny, n * n))


def _marginal_block(q: np.ndarray, n: int) -> sp.csr_matrix:
    """Map from ``vec(T)`` to ``T^T q``: entry ``[x_out, (x, x_out)] = q[x]``."""
    x, xo = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    vals = q[x]
    keep = vals != 0
    return sp.csr_matrix((vals[keep], (xo[keep], (x * n + xo)[keep])), shape=(n, n * n))


def build_repair_lp(data: GroupData, rho: float) -> lp.LpProblem:
    """Linear program for the optimal repair at parity budget ``rho``.

    Rows of ``T_s`` whose input carries no mass in group ``s`` are fixed to the
    identity row through their bounds.
    """
    _check_rho(rho)
    n, ny = data.x_alphabet.size, data.y_alphabet.size
    L = ProblemLayout(n, ny)
    N = L.size
    nn, nd = n * n, n * ny
    pi = data.pi.mass

    c = np.zeros(N)
    for s in (0, 1):
        c[L.dev(s):L.dev(s) + nd] = 0.5 * pi[s]

    blocks, rhs = [], []

    def place(block: sp.csr_matrix, start: int) -> sp.csr_matrix:
        block = sp.csr_matrix(block)
        pad_l = sp.csr_matrix((block.shape[0], start))
        pad_r = sp.csr_matrix((block.shape[0], N - start - block.shape[1]))
        return sp.hstack([pad_l, block, pad_r], format="csr")

    eye_d = sp.identity(nd, format="csr")
    for s in (0, 1):
        P = data.joints[s].mass
        K = _pushforward_block(P, n)
        target = P.reshape(-1)
        # K vec(T) - u <= P  and  -K vec(T) - u <= -P
        blocks.append(place(K, L.chan(s)) - place(eye_d, L.dev(s)))
        rhs.append(target)
        blocks.append(place(-K, L.chan(s)) - place(eye_d, L.dev(s)))
        rhs.append(-target)

    M0 = _marginal_block(data.q(0).mass, n)
    M1 = _marginal_block(data.q(1).mass, n)
    eye_n = sp.identity(n, format="csr")
    diff = place(M1, L.chan(1)) - place(M0, L.chan(0))
    blocks += [diff - place(eye_n, L.gap), -diff - place(eye_n, L.gap)]
    rhs += [np.zeros(n), np.zeros(n)]
    budget = sp.csr_matrix((np.full(n, 0.5), (np.zeros(n, dtype=int), L.gap + np.arange(n))),
                           shape=(1, N))
    blocks.append(budget)
    rhs.append(np.array([float(rho)]))

    A_ub = sp.vstack(blocks, format="csr")
    b_ub = np.concatenate(rhs)

    # row sums of each channel
    rows = np.repeat(np.arange(2 * n), n)
    cols = np.concatenate([L.chan(s) + np.arange(nn) for s in (0, 1)])
    A_eq = sp.csr_matrix((np.ones(2 * nn), (rows, cols)), shape=(2 * n, N))
    b_eq = np.ones(2 * n)

    lb = np.zeros(N)
    ub = np.full(N, np.inf)
    for s in (0, 1):
        for x in np.flatnonzero(data.q(s).mass == 0):
            start = L.chan(s) + x * n
            ub[start:start + n] = 0.0
            lb[start + x] = ub[start + x] = 1.0
    return lp.LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, lb=lb, ub=ub)


def _extract_channel(z: np.ndarray, start: int, alphabet: Alphabet) -> Channel:
    n = alphabet.size
    rows = np.array(z[start:start + n * n]).reshape(n, n)
    if rows.min() < -CLAMP_TOL:
        raise InternalError(f"channel entry {rows.min():.3g} is negative beyond tolerance")
    rows = np.maximum(rows, 0.0)
    rows /= rows.sum(axis=1, keepdims=True)
    return Channel(alphabet, alphabet, rows)


def repaired_joints(data: GroupData, channels) -> tuple[JointTable, JointTable]:
    return tuple(push_forward_joint(t, j) for t, j in zip(channels, data.joints))


def plan_metrics(data: GroupData, channel_0: Channel, channel_1: Channel) -> tuple[float, float]:
    """Objective ``sum_s pi_s tv(P~_s, P_s)`` and parity gap ``tv(Q~_1, Q~_0)``."""
    pi = data.pi.mass
    objective = sum(pi[s] * tv_distance_joint(push_forward_joint(t, data.joints[s]), data.joints[s])
                    for s, t in enumerate((channel_0, channel_1)))
    gap = tv_distance(push_forward(channel_1, data.q(1)), push_forward(channel_0, data.q(0)))
    return float(objective), float(gap)


def solve_repair(data: GroupData, rho: float) -> RepairPlan:
    """Solve the repair program and return channels with recomputed metrics."""
    problem = build_repair_lp(data, rho)
    sol = lp.solve(problem)
    if sol.status is not lp.Status.OPTIMAL:
        # identity channels with a shared pushforward are always feasible
        raise InternalError(f"repair LP reported {sol.status.value}")
    L = ProblemLayout(data.x_alphabet.size, data.y_alphabet.size)
    t0 = _extract_channel(sol.point, L.chan(0), data.x_alphabet)
    t1 = _extract_channel(sol.point, L.chan(1), data.x_alphabet)
    objective, gap = plan_metrics(data, t0, t1)
    log.info("rho=%.4g objective=%.6g gap=%.3g (%d pivots)", rho, objective, gap, sol.iterations)
    return RepairPlan(t0, t1, float(rho), objective, gap)


def identity_plan(data: GroupData, rho: float = 1.0) -> RepairPlan:
    eye = np.eye(data.x_alphabet.size)
    t = Channel(data.x_alphabet, data.x_alphabet, eye)
    objective, gap = plan_metrics(data, t, t)
    return RepairPlan(t, t, rho, objective, gap)


def sweep(data: GroupData, rhos) -> list[RepairPlan]:
    """One repair plan per budget, in the order given."""
    rhos = [float(r) for r in rhos]
    for r in rhos:
        _check_rho(r)
    return [solve_repair(data, r) for r in rhos]


# --- barycenter ---------------------------------------------------------------

def build_barycenter(q0: Pmf, q1: Pmf, pi: Pmf) -> lp.LpProblem:
    """LP over ``[Q, a, b]`` with ``a >= |Q - q0|`` and ``b >= |Q - q1|``."""
    if q0.alphabet != q1.alphabet:
        raise DimensionError("barycenter inputs must share an alphabet")
    if pi.alphabet.size != 2:
        raise DimensionError("pi must be a pmf over two groups")
    n = q0.alphabet.size
    c = np.concatenate([np.zeros(n), np.full(n, 0.5 * pi.mass[0]), np.full(n, 0.5 * pi.mass[1])])
    I = sp.identity(n, format="csr")
    Z = sp.csr_matrix((n, n))
    A_ub = sp.vstack([
        sp.hstack([I, -I, Z]), sp.hstack([-I, -I, Z]),
        sp.hstack([I, Z, -I]), sp.hstack([-I, Z, -I]),
    ], format="csr")
    b_ub = np.concatenate([q0.mass, -q0.mass, q1.mass, -q1.mass])
    A_eq = sp.csr_matrix(np.concatenate([np.ones(n), np.zeros(2 * n)])[None, :])
    return lp.LpProblem(c=c, A_eq=A_eq, b_eq=[1.0], A_ub=A_ub, b_ub=b_ub)


def solve_barycenter(q0: Pmf, q1: Pmf, pi: Pmf) -> tuple[Pmf, float]:
    """Barycenter pmf and its optimal weighted distance."""
    sol = lp.solve(build_barycenter(q0, q1, pi))
    if sol.status is not lp.Status.OPTIMAL:
        raise InternalError(f"barycenter LP reported {sol.status.value}")
    n = q0.alphabet.size
    q = np.maximum(sol.point[:n], 0.0)
    return Pmf(q0.alphabet, q / q.sum()), sol.objective_value


def barycenter_value(q0: Pmf, q1: Pmf, pi: Pmf) -> float:
    """Closed form ``min(pi_0, pi_1) * tv(q0, q1)`` of the barycenter program."""
    if pi.alphabet.size != 2:
        raise DimensionError("pi must be a pmf over two groups")
    return float(min(pi.mass)) * tv_distance(q0, q1)


# longer-standing names, kept as aliases
build_p_rho = build_repair_lp
