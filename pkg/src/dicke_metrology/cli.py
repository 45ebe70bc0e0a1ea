"""Command-line entry point: ``dicke-metrology <scenario> [options]``."""

import argparse
import json
import sys
from pathlib import Path

import yaml

from .errors import DomainError, NumericalError
from .experiments import SCENARIOS, ConfigError, make_config, render, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_KEYS = ("n", "k_max", "k", "m", "theta_grid", "chi", "out", "format", "workers")


def build_parser():
    p = argparse.ArgumentParser(
        prog="dicke-metrology",
        description="Fisher-information and moment-method sweeps for twin-Fock and Dicke interferometry.",
    )
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--n", type=int, nargs="+", help="particle number(s)")
    p.add_argument("--k-max", type=int, help="largest loss count in K sweeps")
    p.add_argument("--k", type=int, nargs="+", help="loss count(s) for qfi/snr")
    p.add_argument("--m", type=float, nargs="+", help="Jz imbalance(s) of Dicke probes")
    p.add_argument("--theta-grid", metavar="MIN:MAX:POINTS", help="phase grid, e.g. -pi:pi:201")
    p.add_argument("--chi", nargs="+", help="phase-diffusion strengths (accepts pi/4 style values)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int)
    p.add_argument("--config", help="YAML or JSON file with the same keys as the flags")
    return p


def load_config_file(path):
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - set(_KEYS) - {"scenario"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        values = load_config_file(args.config) if args.config else {}
        file_scenario = values.pop("scenario", args.scenario)
        if file_scenario != args.scenario:
            raise ConfigError(f"config file is for scenario {file_scenario!r}, not {args.scenario!r}")
        for key in _KEYS:
            flag = getattr(args, key)
            if flag is not None:
                values[key] = flag
        cfg = make_config(args.scenario, **values)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        text = render(run(cfg), cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.out:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
