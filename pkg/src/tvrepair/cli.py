"""Command-line front end: ``tvrepair <subcommand> [options]``.

Every subcommand computes all of its results before writing anything, and
each output file is written to a temporary name and renamed into place.
Output names depend only on the arguments, never on the clock.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from . import census, privacy, repair, suites
from .errors import InvalidParameter, IoError, SchemaError, TVRepairError

log = logging.getLogger("tvrepair")

GRID_TOL = 1e-12


# --- argument parsing ---------------------------------------------------------

def parse_grid(text: str, lo: float = 0.0, hi: float = math.inf, name: str = "value") -> list[float]:
    """``start:step:end`` (both ends inclusive within 1e-12) or a single number."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise InvalidParameter(f"cannot parse {name} grid {text!r}") from None
    if len(nums) == 1:
        values = nums
    elif len(nums) == 3:
        start, step, end = nums
        if step <= 0 or end < start:
            raise InvalidParameter(f"{name} grid {text!r} needs step > 0 and end >= start")
        count = int(math.floor((end - start) / step + GRID_TOL / step)) + 1
        values = [round(start + k * step, 12) for k in range(count)]
        if abs(values[-1] - end) <= GRID_TOL:
            values[-1] = end
    else:
        raise InvalidParameter(f"{name} grid must be start:step:end, got {text!r}")
    for v in values:
        if not (lo <= v <= hi) or math.isnan(v):
            raise InvalidParameter(f"{name} {v} outside [{lo}, {hi}]")
    return values


def parse_seed(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return seed


def _bin_override(text: str) -> tuple[str, census.FeatureBins]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected FEATURE=RULE, got {text!r}")
    feature, rule = text.split("=", 1)
    try:
        return feature.strip(), census.FeatureBins.parse(rule)
    except TVRepairError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvrepair", description="Optimal total-variation data repair.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)

    def add(name, help, *, data=False, out=True, seed=False, plan=False):
        p = sub.add_parser(name, help=help)
        if data:
            p.add_argument("--input", required=True,
                           help="census CSV, or a dataset JSON written by 'ingest'")
            p.add_argument("--schema", help="key = value schema file (default: Adult, sex-protected)")
            p.add_argument("--bins", action="append", type=_bin_override, default=[],
                           metavar="FEATURE=RULE", help="override one feature's binning rule")
        if out:
            p.add_argument("--out", default=".", help="output directory (default: .)")
            p.add_argument("--format", choices=("csv", "json"), default="csv",
                           help="format of tabular outputs")
        if seed:
            p.add_argument("--seed", type=parse_seed, default=0, help="64-bit sampling seed")
        if plan:
            p.add_argument("--plan", required=plan == "required", help="repair plan JSON")
        return p

    add("ingest", "bin a census CSV into a dataset JSON", data=True)
    add("repair", "solve for repair channels at one parity budget", data=True).add_argument(
        "--rho", required=True, help="parity budget in [0, 1]")
    add("barycenter", "common input distribution closest to both groups", data=True)
    add("sweep", "repair objective over a grid of parity budgets", data=True).add_argument(
        "--rhos", required=True, help="start:step:end")
    add("apply", "resample a dataset through a repair plan", data=True, seed=True, plan="required")
    add("histogram", "per-group feature histograms, before and optionally after repair",
        data=True, seed=True, plan=True)
    add("dp-bounds", "privacy bound curves over an epsilon grid").add_argument(
        "--eps", required=True, help="start:step:end or a single value")
    v = add("verify", "run the randomized bound checks", seed=True)
    v.add_argument("--input", help="optionally also check a census CSV or dataset JSON")
    v.add_argument("--schema")
    v.add_argument("--bins", action="append", type=_bin_override, default=[])
    v.add_argument("--trials", type=int, default=100, help="instances per check (default: 100)")
    return parser


# --- output -------------------------------------------------------------------

def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _cell(v):
    return repr(v) if isinstance(v, float) else str(v)


def table_text(header, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[_cell(v) for v in r] for r in rows])
    return buf.getvalue()


def _num(v: float) -> str:
    return f"{v:g}"


class Outputs:
    """Collects output files so nothing is written until every result exists."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.files: list[tuple[Path, str]] = []

    def add(self, name: str, text: str):
        self.files.append((self.directory / name, text))

    def table(self, stem: str, header, rows, fmt: str):
        self.add(f"{stem}.{fmt}", table_text(header, rows, fmt))

    def flush(self):
        for path, text in self.files:
            write_atomic(path, text)
            print(path)


# --- data loading -------------------------------------------------------------

def load_dataset(args) -> census.DiscreteDataset:
    path = Path(args.input)
    if path.suffix == ".json":
        try:
            return census.DiscreteDataset.from_json(path.read_text())
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{path} is not a dataset file: {exc}") from exc
    schema = census.load_schema(args.schema) if args.schema else census.default_schema()
    records = census.load_csv(path, schema)
    if records.dropped:
        log.warning("dropped %d records with missing values", records.dropped)
    return census.discretize(records, schema, dict(args.bins))


def load_plan(path) -> repair.RepairPlan:
    try:
        return repair.RepairPlan.from_json(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read plan {path}: {exc}") from exc
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path} is not a repair plan: {exc}") from exc


# --- subcommands ----------------------------------------------------------------

def cmd_ingest(args, out: Outputs):
    ds = load_dataset(args)
    out.add("ingest_dataset.json", ds.to_json() + "\n")
    log.info("%d records over %d input states", len(ds), ds.n_x)


def cmd_repair(args, out: Outputs):
    (rho,) = parse_grid(args.rho, 0.0, 1.0, "rho")
    data = census.estimate(load_dataset(args))
    plan = repair.solve_repair(data, rho)
    out.add(f"repair_plan_rho{_num(rho)}.json", plan.to_json() + "\n")
    print(f"rho={_num(rho)} objective={plan.objective:.10g} parity_gap={plan.parity_gap:.3e}")


def cmd_barycenter(args, out: Outputs):
    data = census.estimate(load_dataset(args))
    q, value = repair.solve_barycenter(data.q(0), data.q(1), data.pi)
    rows = [(label, float(m)) for label, m in zip(q.alphabet.labels, q.mass)]
    out.table("barycenter", ("x", "probability"), rows, args.format)
    out.add("barycenter_value.json", json.dumps({
        "value": value, "closed_form": repair.barycenter_value(data.q(0), data.q(1), data.pi)}) + "\n")
    print(f"barycenter value={value:.10g}")


def cmd_sweep(args, out: Outputs):
    rhos = parse_grid(args.rhos, 0.0, 1.0, "rho")
    data = census.estimate(load_dataset(args))
    plans = repair.sweep(data, rhos)
    rows = [(p.rho, p.objective, p.parity_gap) for p in plans]
    out.table("sweep", ("rho", "objective", "parity_gap"), rows, args.format)


def cmd_apply(args, out: Outputs):
    ds = load_dataset(args)
    repaired = census.apply_repair(ds, load_plan(args.plan), args.seed)
    out.add(f"apply_seed{args.seed}.json", repaired.to_json() + "\n")


def cmd_histogram(args, out: Outputs):
    ds = load_dataset(args)
    stages = [("original", ds)]
    if args.plan:
        stages.append(("repaired", census.apply_repair(ds, load_plan(args.plan), args.seed)))
    for stage, d in stages:
        for feature in d.feature_names:
            for s in (0, 1):
                rows = census.histogram(d, feature, s)
                out.table(f"histogram_{feature}_s{s}_{stage}", ("bin_label", "probability"),
                          rows, args.format)


def cmd_dp_bounds(args, out: Outputs):
    eps = parse_grid(args.eps, 0.0, math.inf, "epsilon")
    table = privacy.dp_bounds_table(eps)
    rows = [(float(e), float(f), float(u)) for e, f, u in table]
    out.table("dp_bounds", ("epsilon", "fairness_bound", "utility_bound"), rows, args.format)


def cmd_verify(args, out: Outputs) -> int:
    if args.trials < 1:
        raise InvalidParameter("--trials must be positive")
    data = census.estimate(load_dataset(args)) if args.input else None
    results = suites.run_all(args.seed, args.trials, data)
    for r in results:
        print(r.line())
    rows = [(r.name, r.checks, r.failures, r.worst_margin, r.asserted) for r in results]
    out.table("verify", ("check", "checks", "failures", "worst_margin", "asserted"), rows, args.format)
    return 0 if all(r.passed for r in results if r.asserted) else 1


COMMANDS = {
    "ingest": cmd_ingest, "repair": cmd_repair, "barycenter": cmd_barycenter,
    "sweep": cmd_sweep, "apply": cmd_apply, "histogram": cmd_histogram,
    "dp-bounds": cmd_dp_bounds, "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Outputs(args.out)
    try:
        code = COMMANDS[args.command](args, out) or 0
        out.flush()
    except TVRepairError as exc:
        print(f"tvrepair {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"tvrepair {args.command}: IoError: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
