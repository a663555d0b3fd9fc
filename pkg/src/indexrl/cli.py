"""Command line entry point: train, evaluate and report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .harness import AGENTS, evaluate, load_checkpoint, load_config, report, train, write_run
from .harness.report import write_eval
from .schema import load_workloads

log = logging.getLogger("indexrl")


def cmd_train(args) -> int:
    cfg = load_config(args.config, agent=args.agent, seed=args.seed)
    out = Path(args.out) if args.out else cfg.output_root() / f"{cfg.agent}-seed{cfg.seed}"
    t0 = time.time()

    def progress(ep, recs):
        if (ep + 1) % 10 == 0:
            r = sum(x.reward for x in recs) / len(recs)
            log.info("%s seed %d: episode %d, mean reward %.4f (%.0fs)",
                     cfg.agent, cfg.seed, ep + 1, r, time.time() - t0)

    result = train(cfg, progress)
    ev = evaluate(result.policy, result.test_workloads, result.env, cfg.agent, cfg.seed)
    write_run(out, cfg, result, ev)
    print(json.dumps({k: v for k, v in ev.summary.to_dict().items()
                      if not k.startswith("per_")}, indent=1))
    log.info("wrote %s", out)
    return 0


def cmd_evaluate(args) -> int:
    cfg, policy, env = load_checkpoint(args.checkpoint)
    workloads = load_workloads(args.workloads)
    ev = evaluate(policy, workloads, env, cfg.agent, cfg.seed)
    write_eval(args.out, ev, workloads)
    print(json.dumps({k: v for k, v in ev.summary.to_dict().items()
                      if not k.startswith("per_")}, indent=1))
    return 0


def cmd_report(args) -> int:
    agg = report(args.runs, args.out)
    for agent, entry in agg.items():
        if agent.startswith("_"):
            continue
        m = {k: entry[k]["mean"] for k in ("mean_latency", "p80_latency",
                                           "total_index_bytes", "noop_rate", "mean_index_keys")}
        print(agent, json.dumps(m))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="indexrl", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train an agent (or build a baseline) and evaluate it")
    t.add_argument("--config", help="JSON run config; omitted keys keep defaults")
    t.add_argument("--agent", choices=AGENTS)
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="run directory (default: <output root>/<agent>-seed<seed>)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="evaluate a checkpoint on saved workloads")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--workloads", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="aggregate run summaries over seeds")
    r.add_argument("--runs", nargs="+", required=True)
    r.add_argument("--out", help="where to write aggregate.json (default: first --runs dir)")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
