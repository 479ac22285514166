"""Command-line front end.

Subcommands::

    bounds     closed-form completeness / soundness / fidelity tables
    oracle     closed form vs dense and enumerated oracles (exit 1 on mismatch)
    simulate   Monte-Carlo estimates of acceptance and failure
    figures    presets fig1..fig4 (S=101 by default)
    replay     re-execute a manifest and check the data is byte-identical

Grids are comma lists whose items are numbers or ``start:end[:step]``
ranges (``step`` defaults to 1, ``end`` inclusive). Ranges are expanded in
exact decimal arithmetic, so ``0:1:0.01`` has 101 points ending at 1.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__, bounds, oracle, simulate, states
from .errors import AuthVerifError, ContractViolation

CSV_SCHEMA = "authverif-csv/1"
MANIFEST_SCHEMA = "authverif-manifest/1"
FIGURE_PRESETS = ("fig1", "fig2", "fig3", "fig4")
FIGURE_VISIBILITIES = (0.8, 0.9, 0.95)


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


@dataclass
class Table:
    columns: list[str]
    rows: list[dict]


# -- parsing helpers -----------------------------------------------------------

def parse_grid(text: str, cast: Callable = float, flag: str = "grid") -> list:
    values = []
    try:
        for item in filter(None, (t.strip() for t in str(text).split(","))):
            if ":" not in item:
                values.append(cast(Decimal(item)))
                continue
            parts = [Decimal(t) for t in item.split(":")]
            if len(parts) == 2:
                parts.append(Decimal(1))
            if len(parts) != 3 or parts[2] <= 0:
                raise UsageError(flag, f"bad range {item!r}; use start:end[:step] with step > 0")
            start, end, step = parts
            if end < start:
                raise UsageError(flag, f"range {item!r} has end < start")
            count = int((end - start) / step) + 1
            values.extend(cast(start + i * step) for i in range(count))
    except (InvalidOperation, ValueError):
        raise UsageError(flag, f"cannot parse {text!r}") from None
    if not values:
        raise UsageError(flag, "empty grid")
    return values


def _int(d) -> int:
    if d != int(d):
        raise ValueError("not an integer")
    return int(d)


def _grid(args, single: str, grid: str, cast=float) -> list:
    text = getattr(args, grid, None)
    name = "--" + grid.replace("_", "-")
    if text is None:
        text = getattr(args, single)
        name = "--" + single.replace("_", "-")
    return parse_grid(text, cast, name)


def _graph(args) -> Optional[states.GraphSpec]:
    if args.family == "bell":
        return None
    try:
        if args.graph_file:
            return states.GraphSpec.parse(Path(args.graph_file).read_text(encoding="utf-8"))
        if args.n is None:
            raise UsageError("--n", "graph family needs --n (or --graph-file)")
        return states.GraphSpec.from_edge_string(args.n, args.edges or "")
    except ContractViolation as exc:
        raise UsageError("--edges", str(exc)) from None
    except OSError as exc:
        raise UsageError("--graph-file", str(exc)) from None


def _config(S, delta, p, graph) -> bounds.ProtocolConfig:
    if S < 2:
        raise UsageError("--S", f"need S >= 2, got {S}")
    if not 0 <= delta <= S - 1:
        raise UsageError("--delta", f"delta={delta} outside 0..{S - 1}")
    if not 0 <= p <= 1:
        raise UsageError("--p", f"p={p} outside [0, 1]")
    return bounds.ProtocolConfig(S, delta, p, graph)


def _check_unit(value, flag):
    if not 0 <= value <= 1:
        raise UsageError(flag, f"{value} outside [0, 1]")


# -- rendering -----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(table: Table, fmt: str) -> bytes:
    if fmt == "json":
        payload = {"schema": CSV_SCHEMA, "columns": table.columns,
                   "rows": [[row.get(c) for c in table.columns] for row in table.rows]}
        return (json.dumps(payload, indent=1) + "\n").encode("utf-8")
    buf = io.StringIO()
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_fmt(row.get(c)) for c in table.columns) + "\n")
    return buf.getvalue().encode("utf-8")


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _manifest(argv: Sequence[str], args, out: Path, data: bytes) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "produce")}
    return {
        "schema": MANIFEST_SCHEMA,
        "csv_schema": CSV_SCHEMA,
        "command": args.command,
        "argv": list(argv),
        "parameters": params,
        "seed": params.get("seed"),
        "rng": simulate.RNG_ALGORITHM if args.command in ("simulate", "figures") else None,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": [{"path": str(out), "sha256": _sha256(data)}],
    }


def emit(table: Table, args, argv: Sequence[str]) -> None:
    data = render(table, args.format)
    if not args.out:
        sys.stdout.write(data.decode("utf-8"))
        return
    out = Path(args.out)
    _atomic_write(out, data)
    manifest_path = Path(args.manifest) if args.manifest else out.with_name(out.name + ".manifest.json")
    text = json.dumps(_manifest(argv, args, out, data), indent=2, sort_keys=True) + "\n"
    _atomic_write(manifest_path, text.encode("utf-8"))


# -- commands ------------------------------------------------------------------

def produce_bounds(args) -> Table:
    graph = _graph(args)
    ps = _grid(args, "p", "p_grid")
    deltas = _grid(args, "delta", "delta_grid", _int)
    vs = parse_grid(args.v, float, "--v") if args.v is not None else [None]
    for v in vs:
        if v is not None:
            _check_unit(v, "--v")
    _check_unit(args.eta, "--eta")
    if args.v is not None and graph is not None:
        raise UsageError("--v", "Werner sources are defined for the Bell family only")
    columns = ["S", "p", "delta", "family", "completeness", "soundness", "argmax_k"]
    if args.v is not None:
        columns += ["v", "eta", "acceptance", "fidelity_bound", "informative"]
    rows = []
    for p in ps:
        for delta in deltas:
            cfg = _config(args.S, delta, p, graph)
            for v in vs:
                res = bounds.evaluate(cfg, v, args.eta)
                row = dict(S=cfg.S, p=p, delta=delta, family=cfg.family,
                           completeness=res.completeness, soundness=res.soundness,
                           argmax_k=res.argmax_k)
                if v is not None:
                    row.update(v=v, eta=args.eta, acceptance=res.acceptance_probability,
                               fidelity_bound=res.fidelity_lower_bound,
                               informative=res.informative)
                rows.append(row)
    return Table(columns, rows)


def _source(args, v) -> states.SourceModel:
    if args.source == "ideal":
        return states.IdealSource()
    if args.source == "werner":
        if v is None:
            raise UsageError("--v", "werner source needs --v")
        _check_unit(v, "--v")
        _check_unit(args.eta, "--eta")
        return states.WernerSource(v, args.eta)
    if args.k is None:
        raise UsageError("--k", "adversarial source needs --k")
    return states.AdversarialSource(args.k)


def produce_simulate(args) -> Table:
    graph = _graph(args)
    if args.trials < 1:
        raise UsageError("--trials", "need at least one trial")
    ps = _grid(args, "p", "p_grid")
    deltas = _grid(args, "delta", "delta_grid", _int)
    vs = parse_grid(args.v, float, "--v") if args.v is not None else [None]
    if args.source == "werner" and graph is not None:
        raise UsageError("--source", "Werner sources are defined for the Bell family only")
    if args.source == "adversarial" and args.k is not None and not 0 <= args.k <= args.S:
        raise UsageError("--k", f"k={args.k} outside 0..{args.S}")
    points = []
    for p in ps:
        for v in vs:
            for delta in deltas:
                points.append(simulate.SweepPoint(_config(args.S, delta, p, graph), _source(args, v)))
    rows_out = simulate.sweep(points, args.trials, args.seed)
    columns = ["family", "S", "p", "delta", "source", "v", "eta", "k",
               "acceptance_mean", "acceptance_se", "failure_mean", "failure_se",
               "acceptance_analytic", "failure_analytic", "trials", "seed", "master_seed"]
    rows = []
    for row in rows_out:
        cfg, src = row.point.cfg, row.point.source
        acc_a, fail_a = simulate.analytic_expectation(cfg, src)
        rows.append(dict(
            family=cfg.family, S=cfg.S, p=cfg.p, delta=cfg.delta, source=args.source,
            v=getattr(src, "v", None), eta=getattr(src, "eta", None), k=getattr(src, "k", None),
            acceptance_mean=row.acceptance.mean, acceptance_se=row.acceptance.std_error,
            failure_mean=row.failure.mean, failure_se=row.failure.std_error,
            acceptance_analytic=acc_a, failure_analytic=fail_a,
            trials=row.acceptance.trials, seed=row.acceptance.seed, master_seed=args.seed))
    return Table(columns, rows)


def produce_figure(args) -> Table:
    S = args.S
    preset = args.preset
    if preset in ("fig1", "fig2"):
        ns = argparse.Namespace(family="bell", graph_file=None, n=None, edges=None, S=S,
                                p=None, p_grid="0:1:0.01", delta=None,
                                delta_grid="0" if preset == "fig1" else "0,5,10,20",
                                v=None, eta=0.0)
        return produce_bounds(ns)
    deltas = range(0, min(40, S - 1) + 1)
    if preset == "fig3" and args.simulate:
        ns = argparse.Namespace(family="bell", graph_file=None, n=None, edges=None, S=S,
                                source="werner", v=",".join(map(str, FIGURE_VISIBILITIES)),
                                eta=0.0, k=None, p="1", p_grid=None, delta=None,
                                delta_grid=f"0:{deltas[-1]}", trials=args.trials, seed=args.seed)
        return produce_simulate(ns)
    columns = ["S", "v", "delta", "acceptance"]
    if preset == "fig4":
        columns += ["soundness", "fidelity_bound", "informative"]
    rows = []
    for v in FIGURE_VISIBILITIES:
        for delta in deltas:
            res = bounds.evaluate(bounds.ProtocolConfig(S, delta, 1.0), v)
            row = dict(S=S, v=v, delta=delta, acceptance=res.acceptance_probability)
            if preset == "fig4":
                row.update(soundness=res.soundness, fidelity_bound=res.fidelity_lower_bound,
                           informative=res.informative)
            rows.append(row)
    return Table(columns, rows)


def cmd_oracle(args, argv) -> int:
    graph = _graph(args)
    probe = bounds.ProtocolConfig(2, 0, 1.0, graph)
    dense_max = oracle.max_dense_S(probe)
    if args.S > oracle.PATTERN_CAP or (args.S > dense_max and not args.no_dense):
        limit = oracle.PATTERN_CAP if args.no_dense else dense_max
        hint = "" if args.no_dense else f" (or up to S={oracle.PATTERN_CAP} with --no-dense)"
        raise UsageError("--S", f"S={args.S} exceeds oracle cap; use S <= {limit}{hint}")
    ps = _grid(args, "p", "p_grid")
    deltas = _grid(args, "delta", "delta_grid", _int)
    failures = 0
    for p in ps:
        for delta in deltas:
            cfg = _config(args.S, delta, p, graph)
            rep = oracle.verify(cfg, with_dense=not args.no_dense, tol=args.tol)
            status = "PASS" if rep.passed else "FAIL"
            failures += not rep.passed
            dense = "skipped" if rep.dense is None else format(rep.dense, ".12g")
            dense_c = ("skipped" if rep.completeness_dense is None
                       else format(rep.completeness_dense, ".12g"))
            print(f"{status} family={cfg.family} S={cfg.S} p={p:g} delta={delta} "
                  f"soundness closed={rep.closed_form:.12g} dense={dense} "
                  f"enumerated={rep.enumerated:.12g} "
                  f"completeness closed={rep.completeness_closed:.12g} dense={dense_c}")
    print(f"{'FAIL' if failures else 'PASS'}: {failures} mismatching instance(s)")
    return 1 if failures else 0


def cmd_replay(args, argv) -> int:
    manifest = json.loads(Path(args.manifest_path).read_text(encoding="utf-8"))
    sub = build_parser().parse_args(manifest["argv"])
    table = sub.produce(sub)
    data = render(table, sub.format)
    ok = True
    for out in manifest["outputs"]:
        expected = out["sha256"]
        match = _sha256(data) == expected
        on_disk = Path(out["path"])
        disk_ok = on_disk.exists() and _sha256(on_disk.read_bytes()) == expected
        print(f"{'OK' if match else 'MISMATCH'} {out['path']} (file on disk "
              f"{'matches' if disk_ok else 'differs or missing'})")
        ok &= match
    return 0 if ok else 1


def _run_produce(args, argv) -> int:
    if args.command == "figures" and args.preset == "all":
        out_dir = Path(args.out_dir or ".")
        for preset in FIGURE_PRESETS:
            sub_argv = ["figures", preset, "--S", str(args.S), "--format", args.format,
                        "--out", str(out_dir / f"{preset}.{args.format}")]
            sub = build_parser().parse_args(sub_argv)
            emit(sub.produce(sub), sub, sub_argv)
        return 0
    emit(args.produce(args), args, argv)
    return 0


# -- parser --------------------------------------------------------------------

def _add_family(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("bell", "graph"), default="bell")
    p.add_argument("--n", type=int, help="graph qubit count")
    p.add_argument("--edges", help="graph edges, e.g. 1-2,2-3 (1-indexed)")
    p.add_argument("--graph-file", help="graph text file: n, then one 'u v' pair per line")


def _add_grid(p: argparse.ArgumentParser, name: str, default: str, help_: str) -> None:
    p.add_argument(f"--{name}", default=default, help=f"{help_} (list or start:end[:step])")
    p.add_argument(f"--{name}-grid", dest=f"{name.replace('-', '_')}_grid", default=None,
                   help=f"alias of --{name} taking precedence")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write data here (and a manifest alongside)")
    p.add_argument("--manifest", help="manifest path (default: OUT.manifest.json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="authverif", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"authverif {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="closed-form bounds")
    _add_family(b)
    b.add_argument("--S", type=int, required=True)
    _add_grid(b, "p", "1", "measurement noise p")
    _add_grid(b, "delta", "0", "failure threshold")
    b.add_argument("--v", help="Werner visibility (list or range) for acceptance and fidelity")
    b.add_argument("--eta", type=float, default=0.0, help="Werner dephasing weight")
    _add_output(b)
    b.set_defaults(produce=produce_bounds)

    o = sub.add_parser("oracle", help="check closed forms against brute-force oracles")
    _add_family(o)
    o.add_argument("--S", type=int, required=True)
    _add_grid(o, "p", "1", "measurement noise p")
    _add_grid(o, "delta", "0", "failure threshold")
    o.add_argument("--tol", type=float, default=1e-9)
    o.add_argument("--no-dense", action="store_true", help="skip the dense-matrix oracle")
    o.set_defaults(func=cmd_oracle)

    s = sub.add_parser("simulate", help="Monte-Carlo protocol runs")
    _add_family(s)
    s.add_argument("--S", type=int, required=True)
    s.add_argument("--source", choices=("ideal", "werner", "adversarial"), default="ideal")
    s.add_argument("--v", help="Werner visibility (list or range)")
    s.add_argument("--eta", type=float, default=0.0)
    s.add_argument("--k", type=int, help="number of bad copies for --source adversarial")
    _add_grid(s, "p", "1", "measurement noise p")
    _add_grid(s, "delta", "0", "failure threshold")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    _add_output(s)
    s.set_defaults(produce=produce_simulate)

    f = sub.add_parser("figures", help="figure data presets")
    f.add_argument("preset", choices=FIGURE_PRESETS + ("all",))
    f.add_argument("--S", type=int, default=101)
    f.add_argument("--simulate", action="store_true", help="fig3: Monte-Carlo instead of closed form")
    f.add_argument("--trials", type=int, default=100_000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out-dir", help="directory for 'all'")
    _add_output(f)
    f.set_defaults(produce=produce_figure)

    r = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    r.add_argument("manifest_path")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "func"):
            return args.func(args, argv)
        return _run_produce(args, argv)
    except UsageError as exc:
        parser.exit(2, f"authverif {args.command}: error: {exc}\n")
    except AuthVerifError as exc:
        parser.exit(2, f"authverif {args.command}: error: {exc}\n")


if __name__ == "__main__":
    raise SystemExit(main())
