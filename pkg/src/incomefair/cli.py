"""Command line entry point: ``incomefair {run,sweep,timing,validate} --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError
from .harness.config import load_config, with_overrides
from .harness.experiment import SessionLog, run_experiment, timing_report, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="incomefair", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "simulate the configured policy"),
                        ("sweep", "simulate every (policy, gamma, eta) point of the sweep grid"),
                        ("timing", "time scoring and sorting per policy"),
                        ("validate", "check the config and dataset, then exit")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True)
        s.add_argument("--out", help="output directory (overrides output_dir)")
        if name == "run":
            s.add_argument("--policy")
            s.add_argument("--gamma", type=float)
            s.add_argument("--eta", type=float)
            s.add_argument("--trials", type=int)
            s.add_argument("--seed", type=int)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        overrides = {"out": args.out}
        if args.command == "run":
            overrides.update(policy=args.policy, gamma=args.gamma, eta=args.eta,
                             trials=args.trials, seed=args.seed)
        config = with_overrides(config, **overrides)
        queries = config.load_queries()
        if args.command == "validate":
            sizes = [len(q) for q in queries]
            print(f"ok: {len(queries)} queries, {sum(sizes) / len(sizes):.1f} items/query, "
                  f"grades 0..{queries.y_max}, policy {config.policy.policy}, mode {config.mode}")
            return EXIT_OK
        if args.command == "timing":
            table = timing_report(config, queries)
            out = Path(config.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            table.to_csv(out / "timing.csv", index=False)
            print(table.to_string(index=False))
            return EXIT_OK
        log = SessionLog(queries, range(config.trials)) if config.session_log else None
        results = run_experiment(config, queries, sweep=args.command == "sweep", session_log=log)
        out = write_outputs(results, config, sessions=log.frame() if log else None)
        print(f"wrote {out}/results.csv ({len(results)} rows)")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
