"""Batch command-line interface.

    fr3sim run --config cfg.ini [--preset inh-nf-2] [--seed 7] ...

Exit codes: 0 success, 2 configuration error, 3 data/parameter error.
"""

import argparse
import sys

from .harness import ConfigError, load_config, run
from .scenario import ParameterError


def _build_parser():
    p = argparse.ArgumentParser(prog="fr3sim",
                                description="FR3 channel model batch simulator")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="execute a simulation run")
    r.add_argument("--config", help="INI config file")
    r.add_argument("--preset", help="named preset configuration")
    r.add_argument("--seed", type=int)
    r.add_argument("--scenario")
    r.add_argument("--fc", dest="fc_ghz", type=float)
    r.add_argument("--n-ues", dest="n_ues", type=int)
    r.add_argument("--out", dest="out_dir")
    r.add_argument("--workers", type=int)
    r.add_argument("--near-field", dest="near_field",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--nf-angles", dest="nf_angles",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--sns", choices=("off", "stochastic", "blocker"))
    r.add_argument("--ue-sns", dest="ue_sns",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--cluster-variability", dest="cluster_variability",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--pol-variability", dest="pol_variability",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--absolute-delay", dest="absolute_delay",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--ray-count", dest="ray_count_scaling",
                   action=argparse.BooleanOptionalAction)
    r.add_argument("--emit-cir", dest="emit_cir",
                   action=argparse.BooleanOptionalAction)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "preset") and v is not None}
    try:
        cfg = load_config(args.config, args.preset, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        reports = run(cfg)
    except ParameterError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(reports)} link reports to {cfg.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
