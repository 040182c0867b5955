"""Command-line front end.

    orlspi validate --config cfg.json
    orlspi run      --config cfg.json [--out DIR] [--seeds 1,2,3] [--algorithm pi|pg]
    orlspi compare  --config cfg.json [--out DIR] [--seeds 1,2,3]

Exit codes: 0 success, 2 configuration error, 3 divergence abort or I/O
failure. Parallelism over seeds is capped by ORLSPI_MAX_WORKERS; the loop
backend is forced with ORLSPI_BACKEND=python|compiled.
"""

import argparse
import sys

from . import backend, config, loop, runner
from .errors import ConfigError, DivergenceError, OrlspiError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_seeds(text):
    if text is None:
        return None
    try:
        return [int(s) for s in text.split(",") if s.strip() != ""]
    except ValueError:
        raise ConfigError(f"--seeds must be a comma-separated integer list, got {text!r}")


def _load(path):
    exp = config.from_json(path)
    return exp


def cmd_validate(args):
    exp = _load(args.config)
    # operational invariant: the initial estimate admits a Riccati solution
    cfg = exp.orls_config(exp.seeds[0])
    loop._initial_gain(cfg.theta0, cfg.weights, cfg.dare_tol)
    if exp.preset:
        expected = config.preset_values(exp.preset)
        expanded = config.from_dict(
            {
                "name": exp.name,
                "preset": exp.preset,
                "schedule": {"kind": exp.schedule_kind},
                "horizon": exp.horizon,
                "seeds": exp.seeds,
            }
        )
        same = (expanded.plant.a.tolist() == expected["plant"]["a"]) and (
            expanded.plant.b.tolist() == expected["plant"]["b"]
        )
        if not same:
            raise ConfigError(f"preset {exp.preset} failed the integrity check")
    print(f"ok: {args.config} (name={exp.name}, preset={exp.preset}, backend={backend.active_name()})")
    return EXIT_OK


def cmd_run(args):
    exp = _load(args.config)
    seeds = _parse_seeds(args.seeds)
    out_dir = args.out or exp.out_dir or "results"
    _, summaries = runner.execute(exp, algorithm=args.algorithm, out_dir=out_dir, seeds=seeds)
    for s in summaries:
        print(
            f"seed {s['seed']}: final_err_p={s['final_err_p']:.6e} "
            f"final_err_theta={s['final_err_theta']:.6e} breakdowns={s['breakdown_events']}"
        )
    print(f"wrote {len(summaries)} run(s) to {out_dir}")
    return EXIT_OK


def cmd_compare(args):
    exp = _load(args.config)
    seeds = _parse_seeds(args.seeds)
    out_dir = args.out or exp.out_dir or "results"
    report, _, _ = runner.compare(exp, out_dir=out_dir, seeds=seeds)
    for row in report["per_seed"]:
        print(
            f"seed {row['seed']}: pi_first={row['pi_first_step']} pg_first={row['pg_first_step']}"
        )
    print(f"pi_faster_on_all_seeds={report['pi_faster_on_all_seeds']}; report in {out_dir}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orlspi",
        description="Online least-squares identification coupled with LQR policy iteration",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a config against the schema and presets")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="execute an experiment and write artifacts")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seeds", default=None)
    p_run.add_argument("--algorithm", choices=("pi", "pg"), default="pi")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run both gain updates on matched seeds")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", default=None)
    p_cmp.add_argument("--seeds", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OrlspiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
