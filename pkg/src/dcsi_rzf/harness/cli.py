"""Command-line entry point (``dcsi-rzf``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..detequiv import INTERFERENCE_FORMS, NUMERATOR_MODES, sinr_det
from ..errors import DcsiError
from .config import load_config, with_sweep
from .experiments import find_optimal_alpha, run_alpha_sweep, run_lemma_suite, run_user_sweep
from .output import write_records, write_reports_jsonl

log = logging.getLogger("dcsi_rzf")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--out", type=Path, help="output path (CSV, or JSON lines for verify-lemmas)")
    common.add_argument("--seed", type=int, help="base seed (overrides config)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per point (overrides config)")
    common.add_argument("--numerator-mode", choices=NUMERATOR_MODES, default="squared")
    common.add_argument("--interference-form", choices=INTERFERENCE_FORMS, default="rederived")
    common.add_argument("--baseline", action="store_true", default=None,
                        help="add centralized (n=1) runs at matched M, K, sigma")
    common.add_argument("--workers", type=int, default=1, help="worker processes for trials (0 = auto)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="dcsi-rzf", description="Distributed-CSI regularized ZF experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("det-eq", parents=[common], help="print deterministic equivalents for the base config")
    sub.add_parser("sweep-users", parents=[common], help="rate vs number of users")
    sub.add_parser("sweep-alpha", parents=[common], help="rate vs regularization")
    sub.add_parser("optimal-alpha", parents=[common], help="maximize the deterministic rate over alpha")
    lem = sub.add_parser("verify-lemmas", parents=[common], help="run the random-matrix lemma checks")
    lem.add_argument("--tier", choices=("fast", "full"), default="fast")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except DcsiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    overrides = {"seed": args.seed, "trials": args.trials, "centralized_baseline": args.baseline}
    cfg = load_config(args.config, overrides)
    modes = dict(numerator_mode=args.numerator_mode, interference_form=args.interference_form)
    workers = None if args.workers == 0 else args.workers

    if args.command == "det-eq":
        det = sinr_det(cfg.base, **modes)
        print(json.dumps(det.as_dict(), indent=2, sort_keys=True))
        return 0

    if args.command in ("sweep-users", "sweep-alpha"):
        if args.command == "sweep-users":
            if cfg.sweep_variable != "K":
                cfg = with_sweep(cfg, "K", (cfg.base.K,))
            records = run_user_sweep(cfg, workers=workers, **modes)
        else:
            if cfg.sweep_variable != "alpha":
                cfg = with_sweep(cfg, "alpha", cfg.alpha_grid.values())
            records = run_alpha_sweep(cfg, workers=workers, **modes)
        n = write_records(records, args.out, stream=sys.stdout)
        if args.out:
            print(f"wrote {n} records to {args.out}", file=sys.stderr)
        return 0

    if args.command == "optimal-alpha":
        settings = [("distributed", cfg.base)]
        if cfg.centralized_baseline:
            settings.append(("centralized", cfg.centralized(cfg.base)))
        out = {}
        for name, system in settings:
            opt = find_optimal_alpha(system, cfg.alpha_grid.values(), cfg.refine_rounds, **modes)
            out[name] = {"n": system.n, "alpha_star": opt.alpha_star, "rate_star": opt.rate_star,
                         "bracket": list(opt.bracket)}
        text = json.dumps(out, indent=2, sort_keys=True)
        if args.out:
            args.out.write_text(text + "\n")
        print(text)
        return 0

    # verify-lemmas
    seed = cfg.base.base_seed
    reports = run_lemma_suite(args.tier, seed)
    if args.out:
        write_reports_jsonl(reports, args.out)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.lemma_id:<34} M={r.dimension:<4} err={r.rel_error:.3g} tol={r.tolerance:.3g}")
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
