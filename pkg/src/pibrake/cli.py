"""Command-line interface.

Subcommands::

    gen      generate and persist per-vehicle maneuver datasets
    pi       print a dimensionless-group basis for a variable set
    matrix   self/cross/shared MAE matrix for one scheme
    curve    learning curve (MAE vs training fraction) for one vehicle
    compare  preprocessing comparison for a single output

Exit codes: 0 success, 1 usage error, 2 runtime failure.  All commands are
deterministic given the same config and seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_run_config
from .dataset import Dataset, generate, load_csv, save_csv
from .dimensions import (
    DEFAULT_REPEATED,
    VARIABLE_SETS,
    build_dimension_matrix,
    nullspace_pi_basis,
    repeated_vars_pi_basis,
)
from .experiments import (
    comparative_study,
    emit_comparative_csv,
    emit_curve_csv,
    emit_matrix_report,
    learning_curve,
    run_matrix,
)
from .features import SCHEME_NAMES


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (flat key = value sections)")
    p.add_argument("--vehicles", help="config file whose [vehicles] section lists name = l, Nf, Nr")
    p.add_argument("--seed", type=int, help="run seed (splits, surrogate noise)")
    p.add_argument("--out", help="output directory (default: reports)")


def _add_gbt(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rounds", type=int, help="boosting rounds")
    p.add_argument("--depth", type=int, help="tree depth limit")
    p.add_argument("--lr", type=float, help="learning rate")


def build_parser() -> _Parser:
    parser = _Parser(prog="pibrake", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate per-vehicle datasets")
    _add_common(p_gen)
    p_gen.add_argument("--source", choices=("kinematic", "surrogate"), default="kinematic")
    p_gen.set_defaults(func=cmd_gen)

    p_pi = sub.add_parser("pi", help="print a dimensionless-group basis")
    _add_common(p_pi)
    p_pi.add_argument("--set", dest="var_set", default="kinematic",
                      help="kinematic | dynamic | custom (custom needs a [variables] config section)")
    p_pi.add_argument("--repeated", help="comma-separated repeated variables, e.g. l,v_i")
    p_pi.add_argument("--method", choices=("repeated", "nullspace"), default="repeated")
    p_pi.set_defaults(func=cmd_pi)

    for name, func in (("matrix", cmd_matrix), ("curve", cmd_curve), ("compare", cmd_compare)):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        _add_common(p)
        _add_gbt(p)
        p.add_argument("--source", choices=("kinematic", "surrogate"))
        p.add_argument("--gen", action="store_true", help="generate missing datasets first")
        if name == "matrix":
            p.add_argument("--scheme", choices=SCHEME_NAMES)
        if name == "curve":
            p.add_argument("--scheme", choices=SCHEME_NAMES)
            p.add_argument("--vehicle", help="vehicle whose self-prediction curve to compute")
            p.add_argument("--fractions", help="comma-separated training fractions")
            p.add_argument("--repeats", type=int)
        if name == "compare":
            p.add_argument("--target", help="target vehicle (default large)")
            p.add_argument("--output", choices=("X", "Y", "theta"), help="target output (default Y)")
        p.set_defaults(func=func)
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config)
    if args.vehicles:
        vcfg = load_run_config(args.vehicles)
        cfg.vehicles = vcfg.vehicles
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = Path(args.out)
    if getattr(args, "source", None):
        cfg.source = args.source
    if getattr(args, "scheme", None):
        cfg.scheme = args.scheme
    for attr, field_name in (("rounds", "n_rounds"), ("depth", "max_depth"), ("lr", "learning_rate")):
        v = getattr(args, attr, None)
        if v is not None:
            cfg.gbt = replace(cfg.gbt, **{field_name: v})
    if getattr(args, "fractions", None):
        cfg.fractions = tuple(float(t) for t in args.fractions.replace(",", " ").split())
    if getattr(args, "repeats", None):
        cfg.repeats = args.repeats
    if getattr(args, "target", None):
        cfg.target_vehicle = args.target
    if getattr(args, "output", None):
        cfg.target_output = args.output
    return cfg


def _dataset_paths(cfg: RunConfig, source: str) -> dict[str, Path]:
    return {name: cfg.data_dir / source / f"{name}.csv" for name in cfg.vehicles}


def _load_datasets(cfg: RunConfig, source: str, gen: bool) -> dict[str, Dataset]:
    paths = _dataset_paths(cfg, source)
    if all(p.exists() for p in paths.values()):
        return {name: load_csv(p) for name, p in paths.items()}
    if not gen:
        missing = [str(p) for p in paths.values() if not p.exists()]
        raise FileNotFoundError(
            f"missing datasets {missing}; run `pibrake gen --source {source}` or pass --gen"
        )
    datasets = generate(cfg.vehicles.values(), source, cfg.seed, cfg.grid_for(source))
    for name, ds in datasets.items():
        save_csv(ds, paths[name])
    return datasets


def cmd_gen(args) -> int:
    cfg = _resolve_config(args)
    datasets = generate(cfg.vehicles.values(), cfg.source, cfg.seed, cfg.grid_for(cfg.source))
    for name, ds in datasets.items():
        path = _dataset_paths(cfg, cfg.source)[name]
        save_csv(ds, path)
        print(f"{name}: {len(ds)} records -> {path}")
    return 0


def cmd_pi(args) -> int:
    cfg = _resolve_config(args)
    if args.var_set in VARIABLE_SETS:
        variables = VARIABLE_SETS[args.var_set]()
        default_repeated = DEFAULT_REPEATED[args.var_set]
    elif args.var_set == "custom":
        if not cfg.variables:
            raise ValueError("--set custom needs a [variables] section in --config")
        variables = cfg.variables
        default_repeated = None
    else:
        raise ValueError(f"unknown variable set {args.var_set!r}")

    matrix = build_dimension_matrix(variables)
    for v in variables:
        print(f"{v.name}: [{v.dimension}] ({v.role})")

    repeated = args.repeated.split(",") if args.repeated else default_repeated
    if args.method == "nullspace" or repeated is None:
        basis = nullspace_pi_basis(matrix)
        print("method: nullspace")
    else:
        basis = repeated_vars_pi_basis(matrix, [r.strip() for r in repeated])
        print(f"method: repeated variables {{{', '.join(n for n in repeated)}}}")
    n, p = len(variables), matrix.rank
    print(f"buckingham count: N - P = {n} - {p} = {n - p}")
    for i, g in enumerate(basis.groups, start=1):
        print(f"pi_{i} = {g.label}")
    return 0


def cmd_matrix(args) -> int:
    cfg = _resolve_config(args)
    datasets = _load_datasets(cfg, cfg.source, args.gen)
    report = run_matrix(datasets, cfg.scheme, cfg.gbt, cfg.seed)
    out_dir = cfg.out_dir / cfg.source / cfg.scheme
    csv_path, md_path = emit_matrix_report(report, out_dir)
    for kind in ("self", "cross", "shared"):
        s = report.summary[kind]
        print(f"{kind}: X {s[0]:.4f}  Y {s[1]:.4f}  theta {s[2]:.4f}")
    print(f"wrote {csv_path} and {md_path}")
    return 0


def cmd_curve(args) -> int:
    cfg = _resolve_config(args)
    if not args.vehicle:
        raise ValueError("curve needs --vehicle")
    datasets = _load_datasets(cfg, cfg.source, args.gen)
    points = learning_curve(
        datasets, cfg.scheme, args.vehicle, cfg.fractions, cfg.repeats, cfg.gbt, cfg.seed
    )
    path = cfg.out_dir / cfg.source / cfg.scheme / "curves" / f"{args.vehicle}.csv"
    emit_curve_csv(points, path)
    for p in points:
        print(f"fraction {p.fraction:.3f}: X {p.mae_x:.4f}  Y {p.mae_y:.4f}  theta {p.mae_theta:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    datasets = _load_datasets(cfg, cfg.source, args.gen)
    study = comparative_study(
        datasets, cfg.target_vehicle, cfg.target_output, cfg.gbt, cfg.seed
    )
    path = cfg.out_dir / cfg.source / "comparative.csv"
    emit_comparative_csv(study, path)
    header = "scheme".ljust(12) + "".join(s.rjust(12) for s in study.training_sources)
    print(header)
    for scheme, row in study.rows.items():
        print(scheme.ljust(12) + "".join(f"{row[s]:.4f}".rjust(12) for s in study.training_sources))
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except Exception as e:  # runtime failures exit 2, per contract
        print(f"pibrake: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
