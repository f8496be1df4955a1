"""Command line front end: parse flags, run one experiment, emit records.

Exit codes: 0 on success, 2 for usage problems (bad flags, bad config
file, infeasible option combinations detected before running), 1 for
runtime failures inside the simulation.
"""
from __future__ import annotations

import argparse
import sys

from cdma_nash.errors import SimulationError, UsageError
from cdma_nash.harness import (EXPERIMENTS, ORDERINGS, ExperimentConfig,
                               emit_records, run_experiment)


def _parse_l(text: str):
    """An L flag is one int or a comma list: "8" or "1,2,4,8"."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty L list: {text!r}")
    values = tuple(int(p) for p in parts)
    return values[0] if len(values) == 1 else values


def _parse_alpha_sweep(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty alpha sweep: {text!r}")
    return tuple(float(p) for p in parts)


def _parse_filter(text: str):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty filter list: {text!r}")
    if len(parts) == 1:
        return parts[0]
    return tuple(parts)


_COERCERS = {
    "experiment": str,
    "K": int,
    "N": int,
    "L": _parse_l,
    "sigma2": float,
    "M": int,
    "trials": int,
    "seed": int,
    "filter": _parse_filter,
    "ordering": str,
    "alpha_sweep": _parse_alpha_sweep,
    "output": str,
    "format": str,
    "workers": int,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Monte-Carlo experiments for power-controlled CDMA "
                    "receivers under multipath fading.")
    parser.add_argument("--experiment", choices=EXPERIMENTS,
                        help="which experiment to run")
    parser.add_argument("--K", type=int, help="number of users (default 32)")
    parser.add_argument("--N", type=int, help="processing gain (default 256)")
    parser.add_argument("--L", type=_parse_l, metavar="L[,L...]",
                        help="resolvable paths per user; a comma list sweeps "
                             "several values (default 8)")
    parser.add_argument("--sigma2", type=float,
                        help="receiver noise variance (default 1e-10)")
    parser.add_argument("--M", type=int,
                        help="packet length in bits for the utility (default 100)")
    parser.add_argument("--trials", type=int,
                        help="independent fading draws (default 1000)")
    parser.add_argument("--seed", type=int, help="master seed (default 1)")
    parser.add_argument("--filter", type=_parse_filter, metavar="NAME[,NAME...]",
                        help="receiver selection: mf, mmse, opt, mf-sic, "
                             "mmse-sic, or all (default all)")
    parser.add_argument("--ordering", choices=ORDERINGS,
                        help="decoding order for cancellation receivers "
                             "(default random)")
    parser.add_argument("--alpha-sweep", type=_parse_alpha_sweep,
                        dest="alpha_sweep", metavar="A[,A...]",
                        help="loads K/N for inverse-power-vs-alpha "
                             "(default 0.10 to 0.14 step 0.005)")
    parser.add_argument("--output", metavar="PATH",
                        help="write records here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"),
                        help="record encoding (default csv)")
    parser.add_argument("--config", metavar="PATH",
                        help="key=value file supplying any of the above plus "
                             "workers; explicit flags win")
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip().replace("-", "_")] = value.strip()
    return pairs


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config is not None:
        for key, text in _load_config_file(args.config).items():
            if key not in _COERCERS:
                raise UsageError(f"unknown config key {key!r} in {args.config}")
            try:
                values[key] = _COERCERS[key](text)
            except ValueError as exc:
                raise UsageError(
                    f"bad value for {key!r} in {args.config}: {exc}") from exc
    for key in _COERCERS:
        if key == "workers":
            continue  # deliberately file-only: no --workers flag
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    if "experiment" not in values:
        raise UsageError("an experiment must be named, via --experiment or "
                         "the config file")
    return ExperimentConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        records = run_experiment(cfg)
        emit_records(records, cfg.format, cfg.output)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
