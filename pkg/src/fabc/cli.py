"""Command-line interface.

Subcommands: calibrate, bounds, abc, fabc, fabc-all, extend,
experiment <id>, plot.  All stochastic commands require --seed; there is
no wall-clock seeding.  --threads never changes numeric output.  Exit
codes: 0 success, 2 usage or validation error, 3 empty posterior.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as xp
from .bounds import epsilon_upper_conditional, epsilon_upper_devroye, epsilon_upper_unconditional
from .calibration import (
    DEFAULT_QUANTILE_LEVELS,
    build_quantile_table,
    default_probes,
    render_table,
    select_tolerance,
    table_to_csv,
)
from .empirical import KS1D, MatchSpec, ParametricAbs, ProjectedTV, sample_directions, sample_from_csv
from .inference import (
    MODE_FILTERED,
    MODE_FOR_ALL,
    PMATCH_WEIGHTED,
    UNWEIGHTED,
    abc_reject,
    atoms_to_csv,
    extend_abc_to_fabc,
    fabc,
    posterior_to_json,
    summarize,
    EmptyPosteriorError,
)
from .models import BivariateNormal, GridDiscretization, Normal1D, UniformBox
from .rng import K_ARM, K_DIRECTIONS, K_OBSERVED, RngTree

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EMPTY_POSTERIOR = 3


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v != "")


def _probe_list(text: str) -> list[tuple[float, ...]]:
    """Semicolon-separated parameter vectors, comma-separated components."""
    return [_floats(part) for part in str(text).split(";") if part != ""]


def _add_common(parser: argparse.ArgumentParser, seeded: bool = True) -> None:
    parser.add_argument("--seed", type=int, required=seeded, help="master seed (required)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads; output-invariant")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="stdout format")


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=("normal1d", "bivariate-normal"), default="normal1d")
    parser.add_argument("--sd", type=float, default=1.0)
    parser.add_argument("--variances", type=_floats, default=(1.0, 1.0))
    parser.add_argument("--covariance", type=float, default=0.5)
    parser.add_argument("--n", type=int, default=100, help="observations per sample")
    parser.add_argument("--theta-true", type=_floats, default=(0.0,), help="data-generating value")
    parser.add_argument("--x-file", type=str, default=None, help="observed sample CSV (overrides simulation)")


def _add_prior_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prior", choices=("box", "grid"), default="box")
    parser.add_argument("--lower", type=_floats, default=(-1.0,))
    parser.add_argument("--upper", type=_floats, default=(1.0,))
    parser.add_argument("--grid-ns", type=int, default=15, help="grid points per axis")


def _add_matcher_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--matcher", choices=("ks", "projected", "parametric"), default="ks")
    parser.add_argument("--epsilon", type=float, required=True, help="matching tolerance")
    parser.add_argument("--k-directions", type=int, default=50)
    parser.add_argument("--reference", type=float, default=0.0, help="parametric summary reference")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fabc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="quantile table of matching distances per probe")
    _add_common(p)
    _add_model_args(p)
    p.add_argument("--theta-b", type=_floats, default=(0.0,), help="base parameter value")
    p.add_argument("--probes", type=_probe_list, default=None, help="e.g. '0;0.5;1' or '0,0;1,1'")
    p.add_argument("--probe-count", type=int, default=9)
    p.add_argument("--probe-spacing", type=float, default=0.5)
    p.add_argument("--m", type=int, default=500, help="pseudo-samples per probe")
    p.add_argument("--quantiles", type=_floats, default=DEFAULT_QUANTILE_LEVELS)
    p.add_argument("--select", nargs="*", default=None, metavar="KEY=VALUE",
                   help="pick a tolerance, e.g. --select alpha=0.95 probe=1.5")

    p = sub.add_parser("bounds", help="tolerance upper bounds across confidence levels")
    _add_common(p, seeded=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--discrepancy", type=float, default=0.0)
    p.add_argument("--alphas", type=_floats, default=(0.0, 0.5, 0.9, 0.95, 0.99))

    for name, help_text in (
        ("abc", "rejection ABC: one pseudo-sample per candidate"),
        ("fabc", "matching-support posterior with selection filter"),
        ("fabc-all", "matching-support posterior keeping every candidate"),
        ("extend", "rejection ABC extended with m additional pseudo-samples"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_model_args(p)
        _add_prior_args(p)
        _add_matcher_args(p)
        p.add_argument("--n-star", type=int, default=1000, help="candidate draws")
        if name in ("fabc", "fabc-all", "extend"):
            p.add_argument("--m", type=int, default=200, help="pseudo-samples per candidate")
        if name == "fabc":
            p.add_argument("--alpha", type=float, default=0.0, help="selection level on p_match")
        if name == "extend":
            p.add_argument("--include-all", action="store_true",
                           help="extend and keep non-selected candidates too")

    p = sub.add_parser("experiment", help="run a packaged study")
    _add_common(p)
    p.add_argument("id", choices=xp.EXPERIMENTS)
    p.add_argument("--config", type=str, default=None, help="JSON config file; flags override")
    p.add_argument("--paper-scale", action="store_true", help="full-size repetition counts")
    p.add_argument("--plot", action="store_true", help="render figures next to the CSV output")
    p.add_argument("--timing", action="store_true", help="include wall-clock timing in report.json")
    p.add_argument("--set", nargs="*", default=None, metavar="KEY=VALUE",
                   help="config overrides, e.g. --set n_star=100 m=50")

    p = sub.add_parser("plot", help="render a figure from an emitted CSV")
    _add_common(p, seeded=False)
    p.add_argument("--kind", choices=("quantile-table", "atoms-1d", "atoms-2d"), required=True)
    p.add_argument("--input", type=str, required=True)
    p.add_argument("--figure", type=str, required=True)

    return parser


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_model(args):
    if args.model == "normal1d":
        return Normal1D(args.sd)
    return BivariateNormal(tuple(args.variances), args.covariance)


def _build_prior(args):
    if args.prior == "grid":
        return GridDiscretization(args.grid_ns, args.lower, args.upper)
    return UniformBox(args.lower, args.upper)


def _build_spec(args, model, tree: RngTree) -> MatchSpec:
    if args.matcher == "ks":
        matcher = KS1D()
    elif args.matcher == "parametric":
        matcher = ParametricAbs(args.reference)
    else:
        dirs = sample_directions(model.dim, args.k_directions, tree.child(K_DIRECTIONS).generator())
        matcher = ProjectedTV(dirs)
    return MatchSpec(matcher, args.epsilon)


def _observed(args, model, tree: RngTree):
    if args.x_file is not None:
        return sample_from_csv(args.x_file)
    return model.simulate(args.theta_true, args.n, tree.child(K_OBSERVED).generator())


def _emit_posterior(args, posterior, metadata: dict) -> int:
    out = _out_dir(args)
    doc = posterior_to_json(posterior, **metadata)
    if out is not None:
        with open(out / "atoms.csv", "w", newline="") as fh:
            atoms_to_csv(posterior, fh)
        (out / "report.json").write_text(doc + "\n")
    if args.format == "json":
        print(doc)
    else:
        atoms_to_csv(posterior, sys.stdout)
    if posterior.is_empty:
        print("warning: empty posterior (no selected candidates)", file=sys.stderr)
        return EXIT_EMPTY_POSTERIOR
    return EXIT_OK


def _summary_metadata(args, posterior) -> dict:
    meta = {"seed": args.seed, "n": args.n, "command": args.command}
    if hasattr(args, "m"):
        meta["m"] = args.m
    weighting = UNWEIGHTED if args.command == "abc" else PMATCH_WEIGHTED
    try:
        meta["summary"] = summarize(posterior, args.theta_true, weighting).as_dict()
    except (EmptyPosteriorError, ValueError):
        meta["summary"] = None
    return meta


def _cmd_calibrate(args) -> int:
    model = _build_model(args)
    tree = RngTree.from_seed(args.seed)
    if args.x_file is not None:
        x = sample_from_csv(args.x_file)
    else:
        x = model.simulate(args.theta_b, args.n, tree.child(K_OBSERVED).generator())
    if args.probes is not None:
        probes = np.asarray(args.probes, dtype=float)
    else:
        probes = default_probes(args.theta_b, args.probe_count, args.probe_spacing * args.sd)
    table = build_quantile_table(
        model, x, probes, args.m, KS1D(), tree.child(K_ARM, 0),
        levels=args.quantiles, threads=args.threads,
    )
    out = _out_dir(args)
    if out is not None:
        table_to_csv(table, out / "table.csv")
    if args.select is not None:
        options = dict(item.split("=", 1) for item in args.select)
        choice = select_tolerance(table, float(options["alpha"]), _floats(options["probe"]))
        print(json.dumps(choice.as_dict(), indent=2, sort_keys=True))
    elif args.format == "json":
        print(json.dumps({
            "probes": [list(map(float, p)) for p in table.probes],
            "levels": list(table.levels),
            "entries": [[float(v) for v in row] for row in table.entries],
            "m_cal": table.m_cal,
            "matcher": table.matcher_label,
        }, indent=2, sort_keys=True))
    else:
        print(render_table(table))
    return EXIT_OK


def _cmd_bounds(args) -> int:
    rows = []
    for alpha in args.alphas:
        unc = epsilon_upper_unconditional(args.n, alpha, args.discrepancy)
        cond = epsilon_upper_conditional(args.n, alpha, args.discrepancy)
        dev = epsilon_upper_devroye(args.n, alpha, args.d, args.discrepancy)
        rows.append({
            "alpha": alpha,
            "unconditional": unc.reported,
            "conditional": cond.reported,
            "devroye": dev.reported,
            "devroye_valid": dev.valid,
        })
    if args.format == "json":
        print(json.dumps(rows, indent=2, sort_keys=True))
    else:
        print("alpha,unconditional,conditional,devroye,devroye_valid")
        for row in rows:
            print(f"{row['alpha']},{row['unconditional']},{row['conditional']},"
                  f"{row['devroye']},{int(row['devroye_valid'])}")
    out = _out_dir(args)
    if out is not None:
        (out / "bounds.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_sampling(args) -> int:
    model = _build_model(args)
    tree = RngTree.from_seed(args.seed)
    spec = _build_spec(args, model, tree)
    prior = _build_prior(args)
    x = _observed(args, model, tree)
    arm = tree.child(K_ARM, 0)
    if args.command == "abc":
        post = abc_reject(model, prior, x, spec, args.n_star, arm, args.threads)
    elif args.command == "extend":
        base = abc_reject(model, prior, x, spec, args.n_star, arm, args.threads)
        post = extend_abc_to_fabc(
            model, base, x, spec, args.m, tree.child(K_ARM, 1),
            include_all=args.include_all, threads=args.threads,
        )
    else:
        mode = MODE_FOR_ALL if args.command == "fabc-all" else MODE_FILTERED
        alpha = getattr(args, "alpha", 0.0)
        post = fabc(model, prior, x, spec, args.m, args.n_star, alpha, mode, arm, args.threads)
    return _emit_posterior(args, post, _summary_metadata(args, post))


def _cmd_experiment(args) -> int:
    overrides: dict = {}
    if args.config is not None:
        overrides.update(json.loads(Path(args.config).read_text()))
    if args.set:
        for item in args.set:
            key, value = item.split("=", 1)
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                parsed = value  # bare strings, e.g. x_style=stylized
            overrides[key.replace("-", "_")] = parsed
    overrides["threads"] = args.threads
    if args.paper_scale:
        overrides["paper_scale"] = True
    # tuple-typed fields arrive as lists from JSON
    for key in ("theta_true", "theta_b", "lower", "upper", "variances", "quantile_levels", "pairs"):
        if key in overrides and isinstance(overrides[key], list):
            overrides[key] = tuple(
                tuple(v) if isinstance(v, list) else v for v in overrides[key]
            )
    config = xp.make_config(args.id, args.seed, **overrides)
    report = xp.run_experiment(config)
    out = _out_dir(args)
    doc = report.to_json(include_timing=args.timing)
    if out is not None:
        (out / "report.json").write_text(doc + "\n")
        table = report.artifacts.get("table")
        if table is not None:
            table_to_csv(table, out / "table.csv")
        for name, artifact in report.artifacts.items():
            if hasattr(artifact, "atoms"):
                with open(out / f"atoms_{name}.csv", "w", newline="") as fh:
                    atoms_to_csv(artifact, fh)
        if args.plot:
            _render_experiment_figures(report, out)
    if args.format == "json" or out is None:
        print(doc)
    else:
        print(f"report written to {out / 'report.json'}")
    if report.timing_seconds is not None:
        print(f"elapsed: {report.timing_seconds:.2f}s", file=sys.stderr)
    return EXIT_OK


def _render_experiment_figures(report, out: Path) -> None:
    from . import plots

    table = report.artifacts.get("table")
    if table is not None:
        plots.plot_quantile_table(table, out / "table.png")
    for name, artifact in report.artifacts.items():
        if not hasattr(artifact, "atoms") or not artifact.atoms:
            continue
        k = artifact.atoms[0].theta_star.size
        target = out / f"atoms_{name}.png"
        if k == 1:
            plots.plot_weight_profile(artifact, target)
        elif k == 2:
            plots.plot_atoms_2d(artifact, target)
    t_values = report.extras.get("t_values")
    if t_values:
        plots.plot_race(t_values, report.extras["comparisons"], out / "race.png")


def _cmd_plot(args) -> int:
    from . import plots

    plots.render_from_csv(args.kind, args.input, args.figure)
    print(args.figure)
    return EXIT_OK


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command in ("abc", "fabc", "fabc-all", "extend"):
            return _cmd_sampling(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        if args.command == "plot":
            return _cmd_plot(args)
    except EmptyPosteriorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_POSTERIOR
    except (ValueError, KeyError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError("unreachable")


def main(argv=None) -> int:
    return cli_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
