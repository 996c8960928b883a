"""Command-line driver: run, suite, lemmas, sweep.

Exit codes: 0 on success, 2 when a verification verdict fails, 1 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigInvalid, load_config, validate_sweep, build_latent_model
from .latent import ModelError
from .runner import run_experiment
from .suite import run_suite
from .surrogate import SurrogateError
from .sweep import SweepError, sample_rate_sweep
from . import lemmas as lemma_suites

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT_FAIL = 2


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    bundle = run_experiment(cfg, args.out, plot=args.plot)
    print(f"{bundle.name}: wrote {bundle.trace_csv_path} and {bundle.rates_json_path}")
    if bundle.plot_svg_path is not None:
        print(f"{bundle.name}: wrote {bundle.plot_svg_path}")
    for check, verdict in bundle.report.verdicts.items():
        print(f"  {check:8s} {verdict}")
    if not bundle.passed:
        print(f"{bundle.name}: verdict FAILED")
        return EXIT_VERDICT_FAIL
    print(f"{bundle.name}: all verdicts pass")
    return EXIT_OK


def _cmd_suite(args) -> int:
    results = run_suite()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = [
        {
            "name": r.name,
            "description": r.description,
            "passed": r.passed,
            "measured": r.measured,
        }
        for r in results
    ]
    path = report.write_text(out / "suite.json", report.dumps(payload))
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"wrote {path}")
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_VERDICT_FAIL
    print(f"all {len(results)} experiments pass")
    return EXIT_OK


def _cmd_lemmas(args) -> int:
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    results = lemma_suites.run_all(trials=args.trials, seed=args.seed)
    clean = True
    for res in results:
        status = "ok" if res.passed else f"{len(res.failures)} counterexample(s)"
        print(f"{res.name:22s} trials={res.trials:<6d} {status}")
        for failure in res.failures:
            clean = False
            for key, value in failure.items():
                print(f"  {key} = {np.array2string(np.asarray(value), precision=17)}")
    return EXIT_OK if clean else EXIT_VERDICT_FAIL


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    validate_sweep(cfg)
    model = build_latent_model(cfg["model"], context="model")
    table = sample_rate_sweep(model, [int(k) for k in cfg["ks"]], [int(s) for s in cfg["seeds"]])
    out = Path(args.out)
    rows = [
        [str(r.k), str(r.seed), report.fmt(r.rho_samp), report.fmt(r.abs_dev),
         report.fmt(r.theta_hat)]
        for r in table.rows
    ]
    sweep_path = report.write_csv(
        out / "sweep.csv", ["k", "seed", "rho_samp", "abs_dev", "theta_hat"], rows
    )
    summary_rows = [
        [str(s.k), report.fmt(s.median_abs_dev), report.fmt(s.q90_abs_dev)]
        for s in table.summary
    ]
    summary_path = report.write_csv(
        out / "sweep_summary.csv", ["k", "median_abs_dev", "q90_abs_dev"], summary_rows
    )
    print(f"{cfg['name']}: limiting rate {report.fmt(table.rho_pop)}")
    print(f"wrote {sweep_path} and {summary_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surro",
        description="surrogate-minimization experiments with asymptotic-rate verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("--config", required=True, help="path to a JSON experiment config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--plot", action="store_true", help="also write a log-error SVG plot")
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run the registered verification experiments")
    p_suite.add_argument("--out", required=True, help="output directory for suite.json")
    p_suite.set_defaults(func=_cmd_suite)

    p_lem = sub.add_parser("lemmas", help="run the randomized linear-algebra property suites")
    p_lem.add_argument("--trials", type=int, default=1000)
    p_lem.add_argument("--seed", type=int, default=0)
    p_lem.set_defaults(func=_cmd_lemmas)

    p_sweep = sub.add_parser("sweep", help="sample-size sweep of finite-sample rates")
    p_sweep.add_argument("--config", required=True, help="path to a JSON sweep config")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (SurrogateError, SweepError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
