"""Command-line entry point: ``tensorcfo {sweep-snr,sweep-tau,single-run,selftest}``.

Exit codes: 0 success, 1 configuration error, 2 self-test failure.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys

from . import harness
from .harness import ExperimentConfig
from .selftest import selftest

EXIT_OK, EXIT_CONFIG, EXIT_SELFTEST = 0, 1, 2


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tensorcfo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--trials", type=int)
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--methods", type=_names, help="comma list of " + ",".join(harness.METHODS))
    common.add_argument("--measurements", type=_ints, help="comma list of M values")
    common.add_argument("--snr", type=_floats, help="comma list of SNRs in dB")
    common.add_argument("--tau", type=_floats, help="comma list of phase-noise std-devs in rad")
    common.add_argument("--cfo", type=float, help="CFO in Hz")
    common.add_argument("--workers", type=int, default=1)

    sub.add_parser("sweep-snr", parents=[common], help="achievable rate versus SNR")
    sub.add_parser("sweep-tau", parents=[common], help="achievable rate versus phase-noise level")
    single = sub.add_parser("single-run", parents=[common], help="one trial at one operating point")
    single.add_argument("--trial", type=int, default=0)
    st = sub.add_parser("selftest", help="run the invariant checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_file(args.config).to_dict() if args.config else {}
    if args.command == "sweep-tau" and not args.config:
        base.update(snr_db=[5.0], tau=[0.0, 0.27, 0.8, 1.6])
    overrides = {
        "master_seed": args.seed, "trials": args.trials, "methods": args.methods,
        "M": args.measurements, "snr_db": args.snr, "tau": args.tau, "f_e": args.cfo,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig.from_dict(base)
    if args.command == "single-run":
        cfg = dataclasses.replace(cfg, snr_db=cfg.snr_db[:1], tau=cfg.tau[:1], M=cfg.M[:1], trials=1)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "selftest":
        report = selftest(seed=args.seed)
        print(report)
        return EXIT_OK if report.passed else EXIT_SELFTEST

    try:
        cfg = _config(args)
        if args.workers < 1:
            raise ValueError("--workers must be >= 1")
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "single-run":
        records = harness.run_trial(cfg, cfg.snr_db[0], cfg.tau[0], cfg.M[0], args.trial)
    else:
        records = harness.sweep(cfg, workers=args.workers)

    with contextlib.ExitStack() as stack:
        fh = stack.enter_context(open(args.out, "w", newline="")) if args.out else sys.stdout
        written = harness.write_csv(records, fh)
    summary = harness.format_summary(harness.summarize(written))
    print(summary, file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
