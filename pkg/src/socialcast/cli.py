"""Command-line entry points: run sweeps, fit exponents, export plot data, check lemma gates."""

from __future__ import annotations

import argparse
import os
import sys

from . import harness


def _add_run(sub):
    p = sub.add_parser("run", help="execute the configured (n, seed) sweep")
    p.add_argument("config", help="flat key = value config file")
    p.add_argument("--mode", choices=harness.MODES, help="override the config mode")
    p.add_argument("--n-list", help="override n_list, comma-separated")
    p.add_argument("--seeds", type=int, help="override the number of seeds per n")
    p.add_argument("--outdir", help="override the output directory "
                                    "(env SOCIALCAST_OUTDIR also applies)")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config field, repeatable")


def _add_fit(sub):
    p = sub.add_parser("fit", help="fit a scaling exponent to persisted results")
    p.add_argument("results_dir", help="directory of run JSON files")
    p.add_argument("--mode", help="restrict the fit to one mode")
    p.add_argument("--no-log-correction", action="store_true",
                   help="fit raw median T instead of T / log^2 n")


def _add_plot_data(sub):
    p = sub.add_parser("plot-data", help="export per-mode median/quartile CSV series")
    p.add_argument("results_dir", help="directory of run JSON files")
    p.add_argument("outdir", help="where to write the CSV series")


def _add_validate(sub):
    p = sub.add_parser("validate-lemmas", help="Monte-Carlo gates for the concentration lemmas")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="socialcast",
                                     description="Viral-file dissemination experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_fit(sub)
    _add_plot_data(sub)
    _add_validate(sub)
    return parser


def cmd_run(args) -> int:
    with open(args.config) as f:
        text = f.read()
    if args.sets:
        text += "\n" + "\n".join(args.sets)
    overrides = {}
    env_outdir = os.environ.get("SOCIALCAST_OUTDIR")
    if env_outdir:
        overrides["outdir"] = env_outdir
    if args.mode:
        overrides["mode"] = args.mode
    if args.n_list:
        overrides["n_list"] = tuple(int(tok) for tok in args.n_list.split(","))
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.outdir:
        overrides["outdir"] = args.outdir
    cfg = harness.parse_config(text, **overrides)
    results = harness.run_experiment(cfg)
    bad = 0
    for r in results:
        flag = "" if r.completed and not r.stranded else "  [INCOMPLETE]"
        if flag:
            bad += 1
        print(f"{cfg.mode} n={r.n} seed={r.seed}: T={r.T} giant={r.giant_size}{flag}")
    print(f"{len(results)} runs written to {cfg.outdir}; {bad} flagged")
    return 0 if bad == 0 else 1


def cmd_fit(args) -> int:
    by_mode = harness.load_results(args.results_dir)
    modes = [args.mode] if args.mode else sorted(by_mode)
    rc = 0
    for mode in modes:
        docs = by_mode.get(mode, [])
        if not docs:
            print(f"{mode}: no results", file=sys.stderr)
            rc = 1
            continue
        fit = harness.fit_scaling(docs, log_correction=not args.no_log_correction)
        label = "T / log^2 n" if fit.log_correction else "T"
        print(f"{mode}: {label} ~ n^{fit.exponent:.4f}  (r^2 = {fit.r_squared:.4f}, "
              f"sizes {fit.sizes[0]}..{fit.sizes[-1]})")
    return rc


def cmd_plot_data(args) -> int:
    by_mode = harness.load_results(args.results_dir)
    if not by_mode:
        print("no results found", file=sys.stderr)
        return 1
    fits = {}
    for mode, docs in by_mode.items():
        if len({d["n"] for d in docs}) >= 3:
            fits[mode] = harness.fit_scaling(docs, log_correction=False)
    written = harness.emit_plots(by_mode, fits, args.outdir)
    for path in written:
        print(path)
    return 0


def cmd_validate(args) -> int:
    gates = harness.validate_lemmas(seed=args.seed, trials=args.trials)
    return 0 if all(gates.values()) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {
        "run": cmd_run,
        "fit": cmd_fit,
        "plot-data": cmd_plot_data,
        "validate-lemmas": cmd_validate,
    }[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
