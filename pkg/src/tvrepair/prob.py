"""Finite probability primitives.

Pmfs, channels (row-stochastic matrices) and joint tables over small ordered
alphabets, together with total variation distance, pushforwards and the
Dobrushin contraction coefficient.  All objects are immutable; the mass arrays
are stored read-only.

Distances use the half-L1 convention, so ``tv_distance`` lies in ``[0, 1]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import DimensionError, EmptySupport, InvalidParameter

__all__ = [
    "Alphabet",
    "Pmf",
    "Channel",
    "JointTable",
    "MASS_TOL",
    "pmf_from_counts",
    "tv_distance",
    "tv_distance_joint",
    "push_forward",
    "push_forward_joint",
    "marginal_x",
    "marginal_y",
    "dobrushin_coefficient",
    "identity_channel",
    "constant_channel",
    "to_json",
    "from_json",
]

MASS_TOL = 1e-9


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct labels."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise DimensionError("alphabet must be non-empty")
        if len(set(labels)) != len(labels):
            raise DimensionError("alphabet labels must be distinct")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def range(cls, n: int) -> "Alphabet":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(label)

    def __len__(self):
        return self.size


def _check_nonneg(arr: np.ndarray, what: str):
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter(f"{what} contains non-finite entries")
    if np.any(arr < 0):
        raise InvalidParameter(f"{what} has negative entries (min {arr.min():.3g})")


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function over an ``Alphabet``."""

    alphabet: Alphabet
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass, 1)
        if mass.shape[0] != self.alphabet.size:
            raise DimensionError(
                f"mass has {mass.shape[0]} entries for an alphabet of {self.alphabet.size}")
        _check_nonneg(mass, "pmf")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise InvalidParameter(f"pmf sums to {mass.sum():.12g}, not 1")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def of(cls, mass: Sequence[float], alphabet: Alphabet | None = None) -> "Pmf":
        mass = np.asarray(mass, dtype=float)
        return cls(alphabet or Alphabet.range(mass.shape[0]), mass)

    def normalized(self) -> "Pmf":
        """Copy rescaled to sum exactly to one (explicit request only)."""
        return Pmf(self.alphabet, self.mass / self.mass.sum())

    def __len__(self):
        return self.alphabet.size


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix; ``rows[x, x_out]`` is P(x_out | x)."""

    input_alphabet: Alphabet
    output_alphabet: Alphabet
    rows: np.ndarray

    def __post_init__(self):
        rows = _frozen(self.rows, 2)
        if rows.shape != (self.input_alphabet.size, self.output_alphabet.size):
            raise DimensionError(f"channel shape {rows.shape} does not match its alphabets")
        _check_nonneg(rows, "channel")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > MASS_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise InvalidParameter(f"channel row {bad} sums to {sums[bad]:.12g}")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def of(cls, rows, alphabet: Alphabet | None = None) -> "Channel":
        rows = np.asarray(rows, dtype=float)
        a_in = alphabet or Alphabet.range(rows.shape[0])
        a_out = alphabet or Alphabet.range(rows.shape[1])
        return cls(a_in, a_out, rows)


@dataclass(frozen=True, eq=False)
class JointTable:
    """Joint pmf ``mass[x, y]`` over an input alphabet and a label alphabet."""

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass, 2)
        if mass.shape != (self.x_alphabet.size, self.y_alphabet.size):
            raise DimensionError(f"joint shape {mass.shape} does not match its alphabets")
        _check_nonneg(mass, "joint table")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise InvalidParameter(f"joint table sums to {mass.sum():.12g}, not 1")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def of(cls, mass) -> "JointTable":
        mass = np.asarray(mass, dtype=float)
        return cls(Alphabet.range(mass.shape[0]), Alphabet.range(mass.shape[1]), mass)


def pmf_from_counts(counts, alphabet: Alphabet) -> Pmf:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or counts.shape[0] != alphabet.size:
        raise DimensionError(f"{counts.shape} counts for an alphabet of {alphabet.size}")
    _check_nonneg(counts, "counts")
    total = counts.sum()
    if total <= 0:
        raise EmptySupport("all counts are zero")
    return Pmf(alphabet, counts / total)


def _same(a: Alphabet, b: Alphabet, what: str):
    if a != b:
        raise DimensionError(f"{what}: alphabets differ ({a.size} vs {b.size} labels)")


def tv_distance(p: Pmf, q: Pmf) -> float:
    """Total variation distance ``0.5 * sum |p - q|``."""
    _same(p.alphabet, q.alphabet, "tv_distance")
    return 0.5 * float(np.abs(p.mass - q.mass).sum())


def tv_distance_joint(a: JointTable, b: JointTable) -> float:
    _same(a.x_alphabet, b.x_alphabet, "tv_distance_joint")
    _same(a.y_alphabet, b.y_alphabet, "tv_distance_joint")
    return 0.5 * float(np.abs(a.mass - b.mass).sum())


def push_forward(t: Channel, p: Pmf) -> Pmf:
    """Distribution of the channel output when the input is drawn from ``p``."""
    _same(t.input_alphabet, p.alphabet, "push_forward")
    return Pmf(t.output_alphabet, p.mass @ t.rows)


def push_forward_joint(t: Channel, j: JointTable) -> JointTable:
    """Apply ``t`` to the x coordinate of ``j``, leaving y untouched."""
    _same(t.input_alphabet, j.x_alphabet, "push_forward_joint")
    return JointTable(t.output_alphabet, j.y_alphabet, t.rows.T @ j.mass)


def marginal_x(j: JointTable) -> Pmf:
    return Pmf(j.x_alphabet, j.mass.sum(axis=1))


def marginal_y(j: JointTable) -> Pmf:
    return Pmf(j.y_alphabet, j.mass.sum(axis=0))


def dobrushin_coefficient(t: Channel) -> float:
    """Contraction bound ``1 - sum_out min_in t(out | in)``.

    Any two input pmfs ``p, q`` satisfy
    ``tv(push_forward(t, p), push_forward(t, q)) <= coeff * tv(p, q)``.
    """
    return float(min(1.0, max(0.0, 1.0 - t.rows.min(axis=0).sum())))


def identity_channel(alphabet: Alphabet) -> Channel:
    return Channel(alphabet, alphabet, np.eye(alphabet.size))


def constant_channel(input_alphabet: Alphabet, row: Pmf) -> Channel:
    rows = np.tile(row.mass, (input_alphabet.size, 1))
    return Channel(input_alphabet, row.alphabet, rows)


# --- JSON -----------------------------------------------------------------
# {"alphabet": labels, "mass": values}; for matrix-valued objects the
# alphabet is a pair [row labels, column labels] and mass is row-major.

def _labels(a: Alphabet) -> list:
    return [x.item() if isinstance(x, np.generic) else x for x in a.labels]


def to_dict(obj) -> dict[str, Any]:
    if isinstance(obj, Pmf):
        return {"kind": "pmf", "alphabet": _labels(obj.alphabet), "mass": obj.mass.tolist()}
    if isinstance(obj, Channel):
        return {"kind": "channel",
                "alphabet": [_labels(obj.input_alphabet), _labels(obj.output_alphabet)],
                "mass": obj.rows.tolist()}
    if isinstance(obj, JointTable):
        return {"kind": "joint",
                "alphabet": [_labels(obj.x_alphabet), _labels(obj.y_alphabet)],
                "mass": obj.mass.tolist()}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_dict(d: dict[str, Any]):
    kind = d.get("kind")
    if kind is None:
        kind = "pmf" if np.ndim(d["mass"]) == 1 else "joint"
    if kind == "pmf":
        return Pmf(Alphabet(tuple(d["alphabet"])), np.asarray(d["mass"], dtype=float))
    a, b = (Alphabet(tuple(labels)) for labels in d["alphabet"])
    if kind == "channel":
        return Channel(a, b, np.asarray(d["mass"], dtype=float))
    if kind == "joint":
        return JointTable(a, b, np.asarray(d["mass"], dtype=float))
    raise ValueError(f"unknown kind {kind!r}")


def to_json(obj) -> str:
    return json.dumps(to_dict(obj))


def from_json(text: str):
    return from_dict(json.loads(text))
