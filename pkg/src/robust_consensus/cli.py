"""Command-line interface: ``robust-consensus <subcommand> ...``.

Exit codes: 0 on success, 1 for usage or configuration errors, 2 for numeric
or precondition failures (for example a gain violating the stability condition).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from .analysis import asymptotic_covariance
from .engine import run_trials
from .ensemble import ExperimentConfig, compare_empirical_analytic, load_config, run_ensemble
from .exceptions import (CapabilityError, ConfigError, GraphGenerationError, NumericError,
                         ParameterError, StabilityError)
from .graphs import (FAMILIES, build_named, build_random, lambda2_closed_form,
                     read_edge_list, spectrum, write_edge_list)
from .io import (ENSEMBLE_COLUMNS, SUMMARY_COLUMNS, TRAJECTORY_COLUMNS, json_text,
                 summary_rows, trajectory_rows, write_csv, write_json)
from .presets import PRESETS, figdata

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, *, trials=True):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="TOML experiment file")
    src.add_argument("--preset", help=f"bundled preset ({', '.join(sorted(PRESETS))}); "
                                      "use name:variant for a specific variant")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    if trials:
        p.add_argument("--trials", type=int, help="number of trials M")
    p.add_argument("--out", type=Path, help="output directory or file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. --set noise.gamma=0.5 (repeatable)")
    p.add_argument("--workers", type=int, help="worker processes for independent trials")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust-consensus",
                     description="Robust consensus under impulsive channel noise.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("graphs", help="spectral summary of a graph")
    g.add_argument("kind", nargs="?", help=f"family ({', '.join(FAMILIES)}), "
                                           "erdos_renyi or geometric")
    g.add_argument("-n", "--nodes", type=int, dest="n")
    g.add_argument("-k", type=int, help="lattice degree")
    g.add_argument("-p", type=float, help="ER probability or bipartite side size")
    g.add_argument("-q", type=int, help="bipartite second side size")
    g.add_argument("--radius", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--edge-list", type=Path, help="read the graph from an edge-list file")
    g.add_argument("--config", type=Path, help="use the graph section of a config file")
    g.add_argument("--preset", help="use the graph of a bundled preset")
    g.add_argument("--write", type=Path, help="also write the graph as an edge list")

    s = sub.add_parser("simulate", help="run one trial and write its trajectory CSV")
    _add_common(s, trials=False)
    s.add_argument("--trial", type=int, default=0, help="trial index (selects the noise stream)")

    e = sub.add_parser("ensemble", help="run M trials; write covariance-norm series")
    _add_common(e)

    a = sub.add_parser("analyze", help="closed-form report as JSON")
    _add_common(a, trials=False)
    a.add_argument("--theta0", type=float, help="limit point (default: mean measurement)")
    a.add_argument("--convention", choices=("validated", "paper"), default="validated")

    f = sub.add_parser("figdata", help="data series behind a bundled figure preset")
    f.add_argument("figure", choices=sorted(PRESETS))
    f.add_argument("--seed", type=int)
    f.add_argument("--trials", type=int)
    f.add_argument("--out", type=Path)
    f.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    f.add_argument("--workers", type=int)
    return parser


def _config(args) -> ExperimentConfig:
    overrides = list(args.overrides)
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "trials", None) is not None:
        overrides.append(f"trials={args.trials}")
    if args.config is None and args.preset is None:
        raise ConfigError("one of --config or --preset is required")
    return load_config(args.config, overrides, preset=args.preset)


def _log(msg: str):
    print(msg, file=sys.stderr)


def _log_config(cfg: ExperimentConfig):
    d = cfg.describe()
    _log(f"[{d['name']}] config {d['config_hash']} seed {d['seed']} trials {d['trials']} "
         f"T_max {d['t_max']}")
    _log(f"  graph {d['graph']}")
    _log(f"  {d['h']};  {d['f']};  noise {d['noise']};  a = {d['a']:.6g}")


def _log_conventions(cfg: ExperimentConfig, theta0: float):
    """Note both covariance conventions so the factor-N gap is visible in the log."""
    try:
        val = asymptotic_covariance(cfg.graph_obj, cfg.functionals, cfg.h_obj, theta0, cfg.gain)
        pap = asymptotic_covariance(cfg.graph_obj, cfg.functionals, cfg.h_obj, theta0, cfg.gain,
                                    convention="paper")
    except (StabilityError, NumericError):
        return
    _log(f"  covariance norm: validated {val.c_rc_norm:.6g} (reported), "
         f"N^-1-scaled diagonal form {pap.c_rc_norm:.6g}")


def _cmd_graphs(args) -> int:
    if args.edge_list is not None:
        g = read_edge_list(args.edge_list)
    elif args.config is not None or args.preset is not None:
        cfg = load_config(args.config, preset=args.preset)
        g = cfg.graph_obj
    elif args.kind in ("erdos_renyi", "geometric"):
        if args.n is None:
            raise ConfigError("-n is required")
        g = build_random(args.kind, args.n, args.seed, p=args.p, radius=args.radius)
    elif args.kind is not None:
        g = build_named(args.kind, args.n, k=args.k,
                        p=None if args.p is None else int(args.p), q=args.q)
    else:
        raise ConfigError("give a graph kind, --edge-list, --config or --preset")
    sp = spectrum(g)
    print(f"graph    {g!r}")
    print(f"N        {g.n}")
    print(f"edges    {g.edge_count}")
    print(f"d_max    {g.d_max}")
    print(f"lambda_2 {sp.lambda2:.12g}")
    print(f"lambda_N {sp.lambda_max:.12g}")
    if args.kind in FAMILIES and args.edge_list is None and args.config is None and args.preset is None:
        try:
            ref = lambda2_closed_form(args.kind, args.n, k=args.k,
                                      p=None if args.p is None else int(args.p), q=args.q)
            print(f"lambda_2 closed form {ref:.12g}")
        except ParameterError:
            pass
    if args.write is not None:
        write_edge_list(g, args.write)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _config(args).with_overrides({"trials": 1})
    _log_config(cfg)
    batch = run_trials(cfg.graph_obj, cfg.h_obj, cfg.f_obj, cfg.noise_obj, cfg.step_schedule,
                       cfg.sensing_obj, cfg.t_max, checkpoints=cfg.checkpoints, seed=cfg.seed,
                       trials=[args.trial], shared_initial=cfg.shared_initial)
    out = args.out or Path(cfg.output)
    meta = cfg.describe()
    p1 = write_csv(out / f"{cfg.name}_trajectory.csv", TRAJECTORY_COLUMNS,
                   trajectory_rows(batch), meta)
    p2 = write_csv(out / f"{cfg.name}_summary.csv", SUMMARY_COLUMNS, summary_rows(batch), meta)
    d = batch.dispersion[0]
    _log(f"  dispersion {d[0]:.6g} -> {d[-1]:.6g}; theta_hat {batch.theta_hat[0]:.6g}")
    print(p1)
    print(p2)
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    cfg = _config(args)
    if args.workers is not None:
        cfg = cfg.with_overrides({"workers": args.workers})
    _log_config(cfg)
    stats = run_ensemble(cfg)
    try:
        ref = asymptotic_covariance(cfg.graph_obj, cfg.functionals, cfg.h_obj,
                                    stats.theta_mean, cfg.gain).c_rc_norm
    except (StabilityError, NumericError) as exc:
        _log(f"  no closed-form covariance: {exc}")
        ref = math.nan
    else:
        _log_conventions(cfg, stats.theta_mean)
    rows = [(int(t), c, d, ref, abs(c - ref) / ref if not math.isnan(ref) else math.nan)
            for t, c, d in zip(stats.times, stats.cov_norm, stats.mean_dispersion)]
    out = args.out or Path(cfg.output)
    meta = cfg.describe()
    p1 = write_csv(out / f"{cfg.name}_ensemble.csv", ENSEMBLE_COLUMNS, rows, meta)
    payload = {"provenance": meta, "summary": stats.summary(), "analytic_norm": ref}
    if not math.isnan(ref):
        report = cfg.analytic_report(stats.theta_mean, strict=False)
        cmp = compare_empirical_analytic(stats, report)
        payload["non_increasing"] = cmp.non_increasing
        _log(cmp.as_table())
    p2 = write_json(out / f"{cfg.name}_ensemble.json", payload)
    _log(f"  bias {stats.bias:.4g} (SE {stats.bias_se:.3g}); MSE {stats.mse:.4g}")
    print(p1)
    print(p2)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = _config(args)
    _log_config(cfg)
    theta0 = cfg.theta0_guess if args.theta0 is None else args.theta0
    report = cfg.analytic_report(theta0, strict=True, convention=args.convention)
    _log_conventions(cfg, theta0)
    payload = {"provenance": {**cfg.describe(), "theta0_source":
                              "argument" if args.theta0 is not None else "mean measurement"},
               "report": report.to_dict()}
    if args.out is not None:
        path = args.out if args.out.suffix == ".json" else args.out / f"{cfg.name}_analysis.json"
        write_json(path, payload)
        print(path)
    else:
        sys.stdout.write(json_text(payload))
    return EXIT_OK


def _cmd_figdata(args) -> int:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"trials={args.trials}")
    pre = PRESETS[args.figure]
    _log(f"[{pre.name}] {pre.description}")
    for label, cfg in pre.variants:
        _log(f"  {label}: {cfg.f_obj.formula()}; {cfg.h_obj.formula()}; "
             f"noise {cfg.noise_obj.describe()}")
    out = args.out or Path("out") / pre.name
    for path in figdata(pre.name, out, overrides=overrides, workers=args.workers):
        print(path)
    return EXIT_OK


_COMMANDS = {"graphs": _cmd_graphs, "simulate": _cmd_simulate, "ensemble": _cmd_ensemble,
             "analyze": _cmd_analyze, "figdata": _cmd_figdata}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (StabilityError, NumericError, GraphGenerationError, CapabilityError) as exc:
        _log(f"error: {exc}")
        return EXIT_NUMERIC
    except (ConfigError, ParameterError, FileNotFoundError) as exc:
        _log(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
