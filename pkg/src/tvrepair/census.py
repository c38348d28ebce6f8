"""Adult census ingestion, discretization, estimation and record-level repair.

The pipeline is ``load_csv -> discretize -> estimate -> solve_repair ->
apply_repair / histogram``.  Features are binned independently and the input
alphabet is their Cartesian product (row-major, first feature slowest).

Schema files are plain ``key = value`` text, for example::

    protected = sex
    protected_values = Female, Male
    label = income
    label_values = <=50K, >50K
    features = hours-per-week, education-num
    bins.hours-per-week = uniform(1, 99, 8)
    bins.education-num = identity

``protected_values`` lists the group coded 0 first.  ``bins.<feature>`` is
``identity`` (one bin per observed value), ``uniform(lo, hi, count)`` or
``edges(e0, e1, ...)``.  Bins are ``[lo, hi)`` except the last, which also
contains its upper edge.
"""

from __future__ import annotations

import configparser
import csv
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BinningError, DimensionError, EmptyGroup, IoError, SchemaError
from .prob import Alphabet, JointTable, Pmf
from .repair import GroupData, RepairPlan

__all__ = [
    "ADULT_COLUMNS",
    "FeatureBins",
    "Schema",
    "RecordSet",
    "DiscreteDataset",
    "default_schema",
    "load_schema",
    "load_csv",
    "discretize",
    "estimate",
    "apply_repair",
    "histogram",
]

ADULT_COLUMNS = (
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
)
MISSING = {"", "?"}


def _fmt(v: float) -> str:
    return f"{v:g}"


@dataclass(frozen=True)
class FeatureBins:
    """Binning rule for one feature: explicit edges, or identity when ``edges`` is None."""

    edges: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.edges is not None:
            e = np.asarray(self.edges, dtype=float)
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise SchemaError("bin edges must be strictly increasing with at least two entries")
            object.__setattr__(self, "edges", tuple(float(x) for x in e))

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int) -> "FeatureBins":
        return cls(tuple(np.linspace(lo, hi, int(count) + 1)))

    @classmethod
    def parse(cls, text: str) -> "FeatureBins":
        text = text.strip()
        if text == "identity":
            return cls(None)
        m = re.fullmatch(r"(uniform|edges)\((.*)\)", text)
        if not m:
            raise SchemaError(f"cannot parse binning rule {text!r}")
        args = [float(a) for a in m.group(2).split(",") if a.strip()]
        if m.group(1) == "uniform":
            if len(args) != 3:
                raise SchemaError("uniform(lo, hi, count) takes three arguments")
            return cls.uniform(args[0], args[1], int(args[2]))
        return cls(tuple(args))

    def describe(self) -> str:
        if self.edges is None:
            return "identity"
        return "edges(" + ", ".join(_fmt(e) for e in self.edges) + ")"

    def labels(self) -> list[str]:
        e = self.edges
        out = [f"[{_fmt(a)},{_fmt(b)})" for a, b in zip(e[:-2], e[1:-1])]
        return out + [f"[{_fmt(e[-2])},{_fmt(e[-1])}]"]

    def index(self, values: np.ndarray) -> np.ndarray:
        """Bin index per value, -1 where the value lies outside every bin."""
        e = np.asarray(self.edges)
        idx = np.searchsorted(e, values, side="right") - 1
        idx[values == e[-1]] = e.size - 2
        idx[(values < e[0]) | (values > e[-1])] = -1
        return idx


@dataclass(frozen=True)
class Schema:
    protected: str = "sex"
    protected_values: tuple[str, str] = ("Female", "Male")
    label: str = "income"
    label_values: tuple[str, str] = ("<=50K", ">50K")
    features: tuple[str, ...] = ("hours-per-week", "education-num")
    bins: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.protected_values) != 2 or len(self.label_values) != 2:
            raise SchemaError("protected_values and label_values need exactly two entries")
        missing = [f for f in self.features if f not in self.bins]
        if missing:
            raise SchemaError(f"no binning rule for features {missing}")

    @property
    def required(self) -> tuple[str, ...]:
        return (self.protected, self.label, *self.features)

    def to_text(self) -> str:
        lines = [
            f"protected = {self.protected}",
            f"protected_values = {', '.join(self.protected_values)}",
            f"label = {self.label}",
            f"label_values = {', '.join(self.label_values)}",
            f"features = {', '.join(self.features)}",
        ]
        lines += [f"bins.{f} = {self.bins[f].describe()}" for f in self.features]
        return "\n".join(lines) + "\n"


def default_schema() -> Schema:
    """Gender-protected Adult schema: 8 hour bins over [1, 99] x 16 education levels."""
    return Schema(bins={"hours-per-week": FeatureBins.uniform(1, 99, 8),
                        "education-num": FeatureBins(None)})


def _split(v: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in v.split(",") if t.strip())


def load_schema(path) -> Schema:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read schema {path}: {exc}") from exc
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None,
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[schema]\n" + text)
    except configparser.Error as exc:
        raise SchemaError(f"malformed schema {path}: {exc}") from exc
    kv = dict(cp["schema"])
    base = default_schema()
    features = _split(kv["features"]) if "features" in kv else base.features
    bins = {}
    for f in features:
        if f"bins.{f}" in kv:
            bins[f] = FeatureBins.parse(kv[f"bins.{f}"])
        elif f in base.bins:
            bins[f] = base.bins[f]
    return Schema(
        protected=kv.get("protected", base.protected),
        protected_values=_split(kv["protected_values"]) if "protected_values" in kv
        else base.protected_values,
        label=kv.get("label", base.label),
        label_values=_split(kv["label_values"]) if "label_values" in kv else base.label_values,
        features=features,
        bins=bins,
    )


@dataclass(frozen=True)
class RecordSet:
    columns: dict          # name -> tuple of stripped strings
    source: str
    dropped: int = 0

    def __len__(self):
        return len(next(iter(self.columns.values())))


def load_csv(path, schema: Schema | None = None) -> RecordSet:
    """Read a comma-separated census file.

    A header row is used when it names every required column; otherwise the
    standard Adult column order is assumed.  Rows with a missing value in any
    required column are dropped and counted.
    """
    schema = schema or default_schema()
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [[t.strip() for t in r] for r in csv.reader(fh, skipinitialspace=True)
                    if r and any(t.strip() for t in r)]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if rows and rows[0][0].startswith("|"):
        rows = rows[1:]   # adult.test banner line
    if not rows:
        raise SchemaError(f"{path} holds no records")
    if set(schema.required) <= set(rows[0]):
        header, rows = rows[0], rows[1:]
    else:
        header = list(ADULT_COLUMNS)
    missing = [c for c in schema.required if c not in header]
    if missing:
        raise SchemaError(f"{path} lacks required columns {missing}")
    pos = {c: header.index(c) for c in schema.required}
    kept, dropped = [], 0
    for r in rows:
        vals = [r[pos[c]] if pos[c] < len(r) else "" for c in schema.required]
        if any(v in MISSING for v in vals):
            dropped += 1
        else:
            kept.append(vals)
    if not kept:
        raise SchemaError(f"{path}: every record has missing values")
    cols = {c: tuple(v[i] for v in kept) for i, c in enumerate(schema.required)}
    return RecordSet(cols, str(path), dropped)


@dataclass(frozen=True, eq=False)
class DiscreteDataset:
    """Encoded records ``(x, y, s)`` plus the alphabets that give them meaning."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    feature_names: tuple[str, ...]
    feature_labels: tuple[tuple[str, ...], ...]
    y_labels: tuple[str, ...]
    s_labels: tuple[str, ...] = ("0", "1")

    def __post_init__(self):
        arrs = []
        for a in (self.x, self.y, self.s):
            a = np.asarray(a, dtype=np.int64)
            a.setflags(write=False)
            arrs.append(a)
        x, y, s = arrs
        if not (x.shape == y.shape == s.shape) or x.ndim != 1:
            raise DimensionError("x, y and s must be equal-length vectors")
        if x.size and (x.min() < 0 or x.max() >= self.n_x or y.min() < 0
                       or y.max() >= len(self.y_labels) or s.min() < 0 or s.max() > 1):
            raise DimensionError("encoded index outside its alphabet")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(l) for l in self.feature_labels)

    @property
    def n_x(self) -> int:
        return int(np.prod(self.shape))

    @property
    def x_alphabet(self) -> Alphabet:
        grids = np.unravel_index(np.arange(self.n_x), self.shape)
        return Alphabet(tuple(
            "|".join(f"{n}={labels[g[i]]}" for n, labels, g in
                     zip(self.feature_names, self.feature_labels, grids))
            for i in range(self.n_x)))

    @property
    def y_alphabet(self) -> Alphabet:
        return Alphabet(self.y_labels)

    def __len__(self):
        return self.x.shape[0]

    def with_x(self, x: np.ndarray) -> "DiscreteDataset":
        return DiscreteDataset(x, self.y, self.s, self.feature_names, self.feature_labels,
                               self.y_labels, self.s_labels)

    def to_dict(self) -> dict:
        return {
            "features": [{"name": n, "labels": list(l)}
                         for n, l in zip(self.feature_names, self.feature_labels)],
            "y_labels": list(self.y_labels),
            "s_labels": list(self.s_labels),
            "entries": np.stack([self.x, self.y, self.s], axis=1).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteDataset":
        e = np.asarray(d["entries"], dtype=np.int64).reshape(-1, 3)
        return cls(e[:, 0], e[:, 1], e[:, 2],
                   tuple(f["name"] for f in d["features"]),
                   tuple(tuple(f["labels"]) for f in d["features"]),
                   tuple(d["y_labels"]), tuple(d.get("s_labels", ("0", "1"))))

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDataset":
        return cls.from_dict(json.loads(text))


def _sort_key(v: str):
    try:
        return (0, float(v), v)
    except ValueError:
        return (1, 0.0, v)


def discretize(records: RecordSet, schema: Schema | None = None,
               bins: dict | None = None) -> DiscreteDataset:
    """Encode records: composite feature bin, label index and group index.

    ``bins`` maps feature names to ``FeatureBins`` and overrides the schema's rules.
    """
    schema = schema or default_schema()
    if bins:
        schema = replace(schema, bins={**schema.bins, **bins})
    n = len(records)
    idx = np.zeros(n, dtype=np.int64)
    labels = []
    for f in schema.features:
        raw = records.columns[f]
        rule = schema.bins[f]
        if rule.edges is None:
            levels = sorted(set(raw), key=_sort_key)
            lookup = {v: i for i, v in enumerate(levels)}
            fi = np.array([lookup[v] for v in raw], dtype=np.int64)
            labels.append(tuple(levels))
        else:
            try:
                vals = np.array([float(v) for v in raw])
            except ValueError as exc:
                raise BinningError(f"non-numeric value in feature {f!r}: {exc}") from exc
            fi = rule.index(vals)
            bad = np.flatnonzero(fi < 0)
            if bad.size:
                raise BinningError(f"row {int(bad[0])}: {f}={raw[bad[0]]} lies outside "
                                   f"[{_fmt(rule.edges[0])}, {_fmt(rule.edges[-1])}]")
            labels.append(tuple(rule.labels()))
        idx = idx * len(labels[-1]) + fi

    def encode(column: str, values: tuple[str, str]) -> np.ndarray:
        out = np.empty(n, dtype=np.int64)
        for i, v in enumerate(records.columns[column]):
            v = v.rstrip(".")   # adult.test writes labels as ">50K."
            if v == values[0]:
                out[i] = 0
            elif v == values[1]:
                out[i] = 1
            else:
                raise SchemaError(f"row {i}: {column}={v!r} is neither {values[0]!r} nor {values[1]!r}")
        return out

    y = encode(schema.label, schema.label_values)
    s = encode(schema.protected, schema.protected_values)
    return DiscreteDataset(idx, y, s, tuple(schema.features), tuple(labels),
                           tuple(schema.label_values), tuple(schema.protected_values))


def counts(dataset: DiscreteDataset) -> np.ndarray:
    """Integer table ``[s, x, y]`` of record counts."""
    ny = len(dataset.y_labels)
    flat = (dataset.s * dataset.n_x + dataset.x) * ny + dataset.y
    return np.bincount(flat, minlength=2 * dataset.n_x * ny).reshape(2, dataset.n_x, ny)


def estimate(dataset: DiscreteDataset) -> GroupData:
    """Empirical conditional joints and group weights, without smoothing."""
    c = counts(dataset)
    per_group = c.sum(axis=(1, 2))
    for s in (0, 1):
        if per_group[s] == 0:
            raise EmptyGroup(f"group {s} ({dataset.s_labels[s]}) has no records")
    xa, ya = dataset.x_alphabet, dataset.y_alphabet
    joints = [JointTable(xa, ya, c[s] / per_group[s]) for s in (0, 1)]
    total = per_group.sum()
    pi0 = per_group[0] / total
    pi = Pmf(Alphabet(dataset.s_labels), np.array([pi0, 1.0 - pi0]))
    return GroupData(joints[0], joints[1], pi)


def record_uniforms(seed: int, n: int) -> np.ndarray:
    """One uniform draw per record from PCG64 seeded with ``[seed, record index]``."""
    return np.array([np.random.default_rng([seed, i]).random() for i in range(n)])


def apply_repair(dataset: DiscreteDataset, plan: RepairPlan, seed: int) -> DiscreteDataset:
    """Replace each record's input by a draw from its group's repair channel.

    Each record owns an independent stream keyed by ``(seed, index)``, so the
    result does not depend on processing order.
    """
    n_x = dataset.n_x
    for t in plan.channels:
        if t.rows.shape != (n_x, n_x):
            raise DimensionError(f"plan channels are {t.rows.shape}, dataset has {n_x} inputs")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise DimensionError("seed must be an unsigned 64-bit integer")
    u = record_uniforms(seed, len(dataset))
    new_x = np.empty(len(dataset), dtype=np.int64)
    for s, t in enumerate(plan.channels):
        cdf = np.cumsum(t.rows, axis=1)
        cdf[:, -1] = np.inf   # absorb rounding in the final bin
        sel = np.flatnonzero(dataset.s == s)
        rows = cdf[dataset.x[sel]]
        new_x[sel] = (rows <= u[sel, None]).sum(axis=1)
    return dataset.with_x(new_x)


def histogram(dataset: DiscreteDataset, feature: str, s: int) -> list[tuple[str, float]]:
    """Empirical distribution of one feature's bins within group ``s``."""
    if feature not in dataset.feature_names:
        raise SchemaError(f"unknown feature {feature!r}; have {list(dataset.feature_names)}")
    k = dataset.feature_names.index(feature)
    sel = dataset.s == s
    if not sel.any():
        raise EmptyGroup(f"group {s} has no records")
    fi = np.unravel_index(dataset.x[sel], dataset.shape)[k]
    c = np.bincount(fi, minlength=dataset.shape[k])
    return list(zip(dataset.feature_labels[k], (c / c.sum()).tolist()))


def feature_marginal(q: Pmf, shape: tuple[int, ...], k: int) -> np.ndarray:
    """Marginal of feature ``k`` under an exact pmf on the composite alphabet."""
    axes = tuple(i for i in range(len(shape)) if i != k)
    return q.mass.reshape(shape).sum(axis=axes)
