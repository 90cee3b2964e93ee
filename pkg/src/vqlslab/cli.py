"""Command-line front end: ``vqlslab {gen,solve,sweep,barren,resources,rerun}``.

Every command writes CSV/JSON files into ``--out-dir`` plus ``manifest.json``
holding the fully resolved configuration. ``vqlslab rerun manifest.json``
repeats the run; CSV outputs are byte-identical because they carry no
timings. Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, hadamard, problems
from .cost import CostKind
from .matrix_market import MatrixMarketError, load_matrix_market, write_matrix_market, write_vector
from .optimizer import (
    SOLVE_FIELDS,
    SWEEP_FIELDS,
    OptimizerConfig,
    OptimizationError,
    aggregate,
    run_jobs,
    write_trajectory_csv,
)

MANIFEST_VERSION = 1
CSV_SCHEMA_VERSION = 1
FAMILIES = ("ising", "random-pauli", "banded", "matrix")
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
# keys that only say where files go; they are not part of the experiment
_NON_EXPERIMENT = {"out_dir", "config", "workers", "handler"}


class ConfigError(ValueError):
    pass


# -- parsing helpers ------------------------------------------------------------------


def int_list(text) -> list[int]:
    """``"1,2,3"``, ``"2..5"`` or a JSON list."""
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    if isinstance(text, int):
        return [text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list {text!r}")
    return out


def int_range(text) -> list[int]:
    """Half-open ``start:stop``."""
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    try:
        a, b = str(text).split(":")
        return [int(a), int(b)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop, got {text!r}") from None


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--n", type=int, help="qubits (ising, random-pauli)")
    g.add_argument("--J", type=float, default=0.1, help="ising coupling")
    g.add_argument("--eta", type=float, default=5.0, help="ising identity shift")
    g.add_argument("--seed", type=int, default=0, help="instance generator seed")
    g.add_argument("--size", type=int, help="banded block size")
    g.add_argument("--bandwidth", type=int, help="banded half-bandwidth")
    g.add_argument("--matrix", help="Matrix Market file (family 'matrix')")
    g.add_argument("--rhs", help="right-hand side, one value per line")
    g.add_argument("--block-rows", type=int_range, help="start:stop rows of the block to extract")
    g.add_argument("--block-cols", type=int_range, help="start:stop columns of the block to extract")


def _add_optimizer_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("optimizer")
    g.add_argument("--kind", choices=("global", "local"), default="global")
    g.add_argument("--repeats", type=int, default=10, help="runs with optimizer seeds opt_seed + r")
    g.add_argument("--opt-seed", type=int, default=0)
    g.add_argument("--initial-trust-radius", type=float, default=0.5)
    g.add_argument("--final-trust-radius", type=float, default=1e-6)
    g.add_argument("--no-improve-window", type=int, default=100)
    g.add_argument("--max-evaluations", type=int, default=100_000)
    g.add_argument("--trajectory", action="store_true", help="write one per-evaluation CSV per run")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option values (a manifest also works)")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqlslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate or ingest an instance")
    _add_instance_args(p)
    _add_common(p)
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance at one depth over several seeds")
    _add_instance_args(p)
    _add_optimizer_args(p)
    p.add_argument("--layers", type=int, default=1)
    _add_common(p)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a list of ansatz depths")
    _add_instance_args(p)
    _add_optimizer_args(p)
    p.add_argument("--layers", type=int_list, default=[1, 2, 3, 4, 5])
    _add_common(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("barren", help="gradient variance against qubit count")
    _add_instance_args(p)
    p.add_argument("--ns", type=int_list, default=[2, 3, 4])
    p.add_argument("--kinds", type=lambda s: s.split(",") if isinstance(s, str) else list(s), default=["global", "local"])
    p.add_argument("--layers", type=int_list, default=[1])
    p.add_argument("--component", type=int, default=0)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--norm-scan", type=int, default=0, help="also scan gradient norms at this many points")
    _add_common(p)
    p.set_defaults(handler=cmd_barren)

    p = sub.add_parser("resources", help="lowered gate counts and depth of the Hadamard tests")
    _add_instance_args(p)
    p.add_argument("--ns", type=int_list, default=[2, 3, 4, 5, 6])
    p.add_argument("--kind", choices=("global", "local"), default="global")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--print-budget", action="store_true", help="print the Hadamard-test budget")
    p.add_argument("--L", type=int, help="number of LCU terms for --print-budget without an instance")
    _add_common(p)
    p.set_defaults(handler=cmd_resources)

    p = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=None)
    return parser


def _load_config(path: str) -> tuple[str | None, dict]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in data and "command" in data:
        return data["command"], dict(data["config"])
    return None, data


def parse(argv: list[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        command, cfg = _load_config(args.manifest)
        if command is None:
            raise ConfigError(f"{args.manifest} is not a manifest")
        out_dir = args.out_dir or "out"
        sub_argv = [command, "--config", args.manifest, "--out-dir", out_dir, "--workers", str(args.workers)]
        return parse(sub_argv)
    if getattr(args, "config", None):
        command, cfg = _load_config(args.config)
        if command is not None and command != args.command:
            raise ConfigError(f"manifest is for '{command}', not '{args.command}'")
        sub = _subparser(parser, args.command)
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # explicit command-line flags win over the file
        cfg = {k: v for k, v in cfg.items() if k not in _NON_EXPERIMENT}
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


# -- instances and configs --------------------------------------------------------------


def make_instance(args, n: int | None = None):
    fam = args.family
    n = args.n if n is None else n
    if fam is None:
        raise ConfigError("--family is required")
    if fam == "ising":
        if n is None or n < 2:
            raise ConfigError("ising needs --n >= 2")
        return problems.make_ising(n, args.J, args.eta)
    if fam == "random-pauli":
        if n is None or n < 2:
            raise ConfigError("random-pauli needs --n >= 2")
        return problems.make_random_pauli(n, args.seed)
    if fam == "banded":
        if args.size is None or args.bandwidth is None:
            raise ConfigError("banded needs --size and --bandwidth")
        if args.size < 2 or args.bandwidth < 0:
            raise ConfigError("banded needs --size >= 2 and --bandwidth >= 0")
        return problems.make_banded_synthetic(args.size, args.bandwidth, args.seed)
    if not args.matrix or not args.rhs:
        raise ConfigError("family 'matrix' needs --matrix and --rhs")
    a, b = load_matrix_market(args.matrix, args.rhs)
    rows = args.block_rows or [0, a.shape[0]]
    cols = args.block_cols or [0, a.shape[1]]
    return problems.extract_and_pad(a, b, tuple(rows), tuple(cols))


def optimizer_config(args, seed: int) -> OptimizerConfig:
    return OptimizerConfig(
        initial_trust_radius=args.initial_trust_radius,
        final_trust_radius=args.final_trust_radius,
        no_improve_window=args.no_improve_window,
        max_evaluations=args.max_evaluations,
        seed=seed,
    )


def _config_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NON_EXPERIMENT}


def _write_manifest(out: Path, args, outputs: list[str], extra: dict | None = None) -> None:
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "package_version": __version__,
        "command": args.command,
        "config": {k: v for k, v in _config_dict(args).items() if k != "command"},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ------------------------------------------------------------------------


def cmd_gen(args) -> int:
    inst = make_instance(args)
    out = _out_dir(args)
    a = inst.dense()
    write_matrix_market(out / "matrix.mtx", a, symmetric=bool(np.array_equal(a, a.T)))
    write_vector(out / "rhs.txt", inst.b)
    _write_csv(
        out / "lcu.csv",
        ("string", "coefficient_real", "coefficient_imag"),
        [{"string": p, "coefficient_real": repr(c.real), "coefficient_imag": repr(c.imag)} for c, p in inst.lcu.terms],
    )
    (out / "b_circuit.txt").write_text(inst.b_circuit.to_text())
    (out / "instance.json").write_text(problems.dumps_manifest(inst) + "\n")
    kappa = inst.metadata.get("condition_number")
    print(f"family={inst.metadata.get('family')} n={inst.n} L={inst.L} kappa={kappa:.6g} scale={inst.metadata.get('scale', 1.0):.6g}")
    _write_manifest(out, args, ["matrix.mtx", "rhs.txt", "lcu.csv", "b_circuit.txt", "instance.json"])
    return 0


def _solve_runs(args, layers_list: list[int]):
    inst = make_instance(args)
    if args.repeats < 1:
        raise ConfigError("--repeats must be >= 1")
    kind = CostKind(args.kind)
    jobs = [
        (inst, l, kind, optimizer_config(args, args.opt_seed + r)) for l in layers_list for r in range(args.repeats)
    ]
    runs = run_jobs(jobs, args.workers)
    runs.sort(key=lambda r: (r.seed, r.n, r.layers))
    return inst, runs


def _emit_runs(out: Path, args, runs, layers_list, prefix: str) -> list[str]:
    files = [f"{prefix}_runs.csv", f"{prefix}_summary.csv"]
    _write_csv(out / files[0], SOLVE_FIELDS, [r.summary() for r in runs])
    summary = [aggregate([r for r in runs if r.layers == l]) for l in layers_list]
    _write_csv(out / files[1], SWEEP_FIELDS, summary)
    if args.trajectory:
        for r in runs:
            name = f"trajectory_layers{r.layers}_seed{r.seed}.csv"
            write_trajectory_csv(out / name, r)
            files.append(name)
    for row in summary:
        print(
            f"layers={row['layers']} cos={float(row['cosine_mean']):.6f}+-{float(row['cosine_std']):.2g} "
            f"cost={float(row['cost_mean']):.3e}+-{float(row['cost_std']):.2g} evals={float(row['evaluations_mean']):.0f}"
        )
    return files


def cmd_solve(args) -> int:
    out = _out_dir(args)
    layers = [int(args.layers)] if not isinstance(args.layers, list) else args.layers
    inst, runs = _solve_runs(args, layers)
    files = _emit_runs(out, args, runs, layers, "solve")
    timings = {"wall_time": {f"layers{r.layers}_seed{r.seed}": r.wall_time for r in runs}}
    _write_manifest(out, args, files, {"instance": inst.manifest(), **timings})
    return 0


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    layers = int_list(args.layers)
    inst, runs = _solve_runs(args, layers)
    files = _emit_runs(out, args, runs, layers, "sweep")
    timings = {"wall_time": {f"layers{r.layers}_seed{r.seed}": r.wall_time for r in runs}}
    _write_manifest(out, args, files, {"instance": inst.manifest(), **timings})
    return 0


def cmd_barren(args) -> int:
    out = _out_dir(args)
    ns = int_list(args.ns)
    layers_list = int_list(args.layers)
    kinds = [str(CostKind(k)) for k in args.kinds]
    if args.samples < 2:
        raise ConfigError("--samples must be >= 2")
    stats, fits, norms = [], [], []
    for n in ns:
        inst = make_instance(args, n)
        for layers in layers_list:
            for kind in kinds:
                stats.append(
                    analysis.estimate_gradient_variance(inst, kind, layers, args.component, args.samples, args.sample_seed)
                )
                if args.norm_scan:
                    v = analysis.gradient_norm_scan(inst, layers, kind, args.norm_scan, args.sample_seed)
                    norms += [
                        {"n": n, "layers": layers, "kind": kind, "rank": i, "norm": repr(float(x))} for i, x in enumerate(v)
                    ]
    stats.sort(key=lambda s: (s.n, s.layers, s.kind))
    for layers in layers_list:
        for kind in kinds:
            pts = [(s.n, s.variance) for s in stats if s.layers == layers and s.kind == kind]
            if len(pts) >= 3:
                slope, icpt, r2 = analysis.fit_variance_decay(pts)
                fits.append({"kind": kind, "layers": layers, "slope": repr(slope), "intercept": repr(icpt), "r2": repr(r2)})
                print(f"kind={kind} layers={layers} slope={slope:.4f} r2={r2:.4f}")
    files = ["variance.csv"]
    _write_csv(out / "variance.csv", analysis.VARIANCE_FIELDS, [s.row() for s in stats])
    if fits:
        _write_csv(out / "fit.csv", analysis.FIT_FIELDS, fits)
        files.append("fit.csv")
    if norms:
        _write_csv(out / "gradient_norms.csv", ("n", "layers", "kind", "rank", "norm"), norms)
        files.append("gradient_norms.csv")
    _write_manifest(out, args, files)
    return 0


def cmd_resources(args) -> int:
    out = _out_dir(args)
    files = []
    if args.print_budget:
        if args.L is not None:
            plans = [hadamard.enumerate_tests(args.L, args.n or 1, args.kind)]
        else:
            plans = [hadamard.enumerate_tests(make_instance(args, n).L, n, args.kind) for n in int_list(args.ns)]
        for p in plans:
            b = p.budget()
            print(f"kind={b['kind']} L={b['L']} n={b['n']} denominator={b['denominator_tests']} numerator={b['numerator_tests']} total={b['total']}")
        hadamard.write_budget_csv(out / "budget.csv", plans)
        files.append("budget.csv")
        if args.family is None:
            _write_manifest(out, args, files)
            return 0
    rows = []
    for n in int_list(args.ns):
        inst = make_instance(args, n)
        den, num = analysis.resource_report(inst, args.kind, args.layers)
        rows += analysis.resource_rows(args.family, n, (den, num))
        print(f"n={n} denominator total={den.total:.1f} depth={den.depth:.1f} numerator total={num.total:.1f} depth={num.depth:.1f}")
    _write_csv(out / "resources.csv", analysis.RESOURCE_FIELDS, rows)
    files.append("resources.csv")
    _write_manifest(out, args, files)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse(argv)
        return int(args.handler(args) or 0)
    except SystemExit as e:  # argparse usage errors
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG
    except (ConfigError, MatrixMarketError, FileNotFoundError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, OptimizationError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
