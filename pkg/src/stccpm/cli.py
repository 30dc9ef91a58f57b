"""Command line front end: ``stccpm {ber,sweep1d,sweep2d,psd,ortho}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .cpm import ConfigurationError
from .experiments import (PRESET_GROUPS, PRESETS, load_config, run_experiment,
                          write_outputs)

log = logging.getLogger("stccpm")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3

COMMANDS = {
    "ber": "ber_sweep",
    "sweep1d": "phase_sweep_1d",
    "sweep2d": "phase_sweep_2d",
    "psd": "psd_report",
    "ortho": "ortho_check",
}


def _parser():
    ap = argparse.ArgumentParser(prog="stccpm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, kind in COMMANDS.items():
        sp = sub.add_parser(cmd, help=kind.replace("_", " "))
        sp.add_argument("--config", type=Path, help="YAML key/value experiment config")
        sp.add_argument("--preset", help="preset or preset group name")
        sp.add_argument("--seed", type=int, help="override the config seed (u64)")
        sp.add_argument("--out", type=Path, help="output CSV (directory for preset groups)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list preset names")
    return ap


def _configs(args, kind):
    if args.config and args.preset:
        raise ConfigurationError("use either --config or --preset")
    if args.config:
        cfgs = [load_config(args.config)]
    elif args.preset:
        names = PRESET_GROUPS.get(args.preset, [args.preset])
        missing = [n for n in names if n not in PRESETS]
        if missing:
            raise ConfigurationError(f"unknown preset {args.preset!r}")
        cfgs = [PRESETS[n] for n in names]
    else:
        raise ConfigurationError("one of --config or --preset is required")
    if args.seed is not None:
        cfgs = [replace(c, seed=args.seed) for c in cfgs]
    wrong = [c.name or c.experiment for c in cfgs if c.experiment != kind]
    if wrong:
        raise ConfigurationError(f"{', '.join(wrong)} is not a {kind} experiment")
    return cfgs


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        for group, names in PRESET_GROUPS.items():
            print(f"{group}: {' '.join(names)}")
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    kind = COMMANDS[args.command]
    try:
        cfgs = _configs(args, kind)
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
    except ConfigurationError as exc:
        print(f"stccpm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    status = EXIT_OK
    for cfg in cfgs:
        if args.out is None:
            out = None
        elif len(cfgs) > 1 or args.out.suffix == "":
            out = args.out / f"{cfg.name or cfg.experiment}.csv"
        else:
            out = args.out
        log.info("running %s", cfg.name or cfg.experiment)
        result = run_experiment(cfg, threads=args.threads)
        path = write_outputs(cfg, result, out)
        print(path)
        if kind == "ortho_check":
            print(f"{cfg.name or 'ortho'}: {result['status']} max_offdiag={result['max_offdiag']:.3e} "
                  f"max_diag_error={result['max_diag_error']:.3e}")
            if result["status"] != "PASS":
                status = EXIT_CHECK
    return status


if __name__ == "__main__":
    sys.exit(main())
