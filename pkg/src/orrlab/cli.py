"""``orrlab`` command line.

Exit codes: 0 success, 1 configuration or checkpoint error, 2 blow-up or
step-size error, 3 range or invertibility error, 4 divergence of the
elliptic iteration.  A run whose checks fail still exits 0; the pass
flags live in ``summary.json``.
"""

from __future__ import annotations

import argparse
import json
import sys

from .checkpoint import load_checkpoint
from .config import config_from_dict, parse_config
from .errors import OrrlabError

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orrlab", description="Inviscid damping experiments around Couette flow.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the experiment described by a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--output", help="output directory (overrides the config)")

    lm = sub.add_parser("lemmas", help="empirical constants of the weight inequalities")
    lm.add_argument("--id", action="append", dest="ids", required=True, help="lemma id (repeatable)")
    lm.add_argument("--samples", type=int, default=2000)
    lm.add_argument("--seed", type=int, default=0)
    lm.add_argument("--output", default="orrlab-out")

    t = sub.add_parser("toy", help="two-mode model across one critical interval")
    t.add_argument("--eta-over-k2", type=float, default=1.0e4)
    t.add_argument("--kappa", type=float, default=0.25)
    t.add_argument("--k", type=int, default=1)
    t.add_argument("--self-interaction", action="store_true")
    t.add_argument("--output", default="orrlab-out")

    e = sub.add_parser("elliptic", help="fixed-point inversion of the transformed Laplacian")
    e.add_argument("--perturb", type=float, default=0.1)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", default="orrlab-out")

    rs = sub.add_parser("resume", help="continue a checkpointed run")
    rs.add_argument("--checkpoint", required=True)
    rs.add_argument("--t-end", type=float)
    rs.add_argument("--output")
    return p


def _config(args) -> dict:
    if args.command == "lemmas":
        return {"experiment": "lemmas", "lemmas": {"ids": args.ids, "samples": args.samples},
                "seed": args.seed, "output": args.output}
    if args.command == "toy":
        return {"experiment": "toy", "output": args.output,
                "toy": {"eta_over_k2": args.eta_over_k2, "kappa": args.kappa, "k": args.k,
                        "self_interaction": args.self_interaction}}
    return {"experiment": "elliptic", "elliptic": {"perturb": args.perturb}, "seed": args.seed,
            "output": args.output}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .experiments import resume_experiment, run_experiment

    try:
        if args.command == "run":
            cfg = parse_config(args.config)
            summary = run_experiment(cfg, args.output)
        elif args.command == "resume":
            state = load_checkpoint(args.checkpoint)
            summary = resume_experiment(state, args.t_end, args.output)
        else:
            cfg = config_from_dict(_config(args))
            summary = run_experiment(cfg)
    except OrrlabError as exc:
        print(f"orrlab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    metrics = summary.get("metrics", {})
    for name, m in metrics.items():
        flag = {True: "PASS", False: "FAIL", None: "----"}[m["pass"]]
        print(f"{flag} {name} = {json.dumps(m['value'])} (target {m['target']})")
    if not metrics:
        print(json.dumps({k: v for k, v in summary.items() if not isinstance(v, dict)}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
