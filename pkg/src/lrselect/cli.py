"""Batch command line front end.

Subcommands:
  run       load data, run the full automatic selection, write reports
  step      one interactive step at a time against a persisted session file
  validate  score a finished session on a holdout set

Exit codes: 0 ok, 2 validation, 3 eligibility, 4 convergence, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    ConvergenceError,
    DataValidationError,
    EligibilityError,
    LrSelectError,
    SessionStoppedError,
)
from .glm import Family, StoppingCriterion
from .ingest import SplitSpec, ZeroPolicy, evaluate_holdout, load_dataset, split_holdout
from .serialize import (
    bundle_from_provenance,
    load_session,
    save_session,
    write_report_files,
)
from .stepwise import SelectionMethod, init_session, rank_candidates, run, step, undo

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ELIGIBILITY = 3
EXIT_CONVERGENCE = 4
EXIT_IO = 5


def _parse_criterion(text: str, alpha: float, parser: argparse.ArgumentParser) -> StoppingCriterion:
    text = text.strip().lower()
    if text.startswith("steps="):
        try:
            k = int(text.split("=", 1)[1])
        except ValueError:
            parser.error(f"bad step count in --criterion {text!r}")
        return StoppingCriterion("fixed_steps", alpha=alpha, max_steps=k)
    if text not in ("aic", "bic", "bonferroni"):
        parser.error(f"--criterion must be aic, bic, bonferroni or steps=K, got {text!r}")
    return StoppingCriterion(text, alpha=alpha)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="composition CSV (header row, first column sample id)")
    p.add_argument("--response", help="response column name, or path to a response CSV")
    p.add_argument("--family", choices=[f.value for f in Family], default="binomial")
    p.add_argument("--method", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--criterion", default="bic", help="aic | bic | bonferroni | steps=K")
    p.add_argument("--alpha", type=float, default=0.05, help="Bonferroni significance level")
    p.add_argument("--force-lr", action="append", default=[], metavar="NUM/DEN",
                   help="logratio forced into the model (repeatable)")
    p.add_argument("--force-cov", action="append", default=[], metavar="COLUMN",
                   help="covariate column forced into the model (repeatable)")
    p.add_argument("--covariates", default="", metavar="COLS",
                   help="comma-separated non-composition columns (beyond --force-cov)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=None, metavar="FRACTION",
                   help="train fraction; selection runs on the train partition")
    p.add_argument("--zero-mode", choices=["replace", "strict"], default="replace")
    p.add_argument("--zero-fraction", type=float, default=0.65)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrselect", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full automatic selection run")
    _add_data_flags(p_run)
    p_run.add_argument("--top-k", type=int, default=20)
    p_run.add_argument("--out", required=True, help="output directory for report files")

    p_step = sub.add_parser("step", help="one expert-guided step; state lives in --session")
    _add_data_flags(p_step)
    p_step.add_argument("--session", required=True, help="session JSON (created on first use)")
    p_step.add_argument("--choose", metavar="NUM/DEN", help="apply this candidate instead of the optimal")
    p_step.add_argument("--undo", action="store_true", help="revert the previous step")
    p_step.add_argument("--top-k", type=int, default=20)

    p_val = sub.add_parser("validate", help="holdout metrics for a finished session")
    p_val.add_argument("--session", required=True)
    p_val.add_argument("--holdout", help="explicit holdout CSV; defaults to the session's split")
    p_val.add_argument("--out", required=True, help="output directory for metrics.json")
    return parser


def _load_bundle(args):
    if not args.data or not args.response:
        raise DataValidationError("--data and --response are required to initialize a session")
    covariates = [c for c in args.covariates.split(",") if c.strip()]
    for c in args.force_cov:
        if c not in covariates:
            covariates.append(c)
    bundle = load_dataset(
        args.data,
        args.response,
        covariates=covariates,
        family=Family(args.family),
        zero_policy=ZeroPolicy(mode=args.zero_mode, fraction=args.zero_fraction),
    )
    if args.split is not None:
        bundle, _ = split_holdout(bundle, SplitSpec(train_fraction=args.split, seed=args.seed))
    return bundle


def _init_from_args(args, parser):
    bundle = _load_bundle(args)
    comp = bundle.composition
    forced_terms = [comp.term_from_label(lbl) for lbl in args.force_lr]
    forced_cov = [bundle.covariate_names.index(c) for c in args.force_cov]
    criterion = _parse_criterion(args.criterion, args.alpha, parser)
    return init_session(
        bundle,
        SelectionMethod(args.method),
        criterion,
        forced_terms=forced_terms,
        forced_covariates=forced_cov,
        seed=args.seed,
    )


def _print_ranking(session, top_k: int) -> None:
    ranking = rank_candidates(session, top_k)
    if ranking.exhausted:
        print("no eligible candidates remain")
        return
    print(f"{'rank':>4}  {'ratio':<18} {'-2logLik':>12} {'delta':>10} {'objective':>12}  stop?")
    for i, e in enumerate(ranking.entries, start=1):
        flag = "yes" if e.would_stop else ""
        print(f"{i:>4}  {e.label:<18} {e.minus2loglik:>12.4f} {e.delta_deviance:>10.4f} "
              f"{e.objective:>12.4f}  {flag}")
    for note in ranking.diagnostics:
        print(f"  [excluded] {note}")


def _print_model(session) -> None:
    fit = session.current_fit
    print(f"\nstep {len(session.selected)}  -2logLik {fit.minus2loglik:.4f}  "
          f"objective {session.objective:.4f}  stopped={session.stopped}")
    print(f"{'term':<18} {'estimate':>12} {'s.e.':>10} {'p-value':>10}")
    for lbl, c, s, p in zip(fit.term_labels, fit.coefficients, fit.std_errors, fit.p_values):
        print(f"{lbl:<18} {c:>12.4f} {s:>10.4f} {p:>10.4g}")


def cmd_run(args, parser) -> int:
    session = _init_from_args(args, parser)
    run(session)
    paths = write_report_files(session, args.out)
    _print_model(session)
    print(f"\nselected {len(session.selected)} logratio(s); reports in {args.out}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return EXIT_OK


def cmd_step(args, parser) -> int:
    if os.path.exists(args.session):
        session = load_session(args.session)
    else:
        session = _init_from_args(args, parser)
        save_session(session, args.session)
        print(f"initialized session at {args.session}")

    if args.undo:
        undo(session)
        save_session(session, args.session)
        _print_model(session)
        return EXIT_OK

    if session.stopped:
        print("session is stopped; use --undo to reopen it")
        return EXIT_ELIGIBILITY

    _print_ranking(session, args.top_k)
    chosen = None
    force = False
    if args.choose:
        chosen = session.bundle.composition.term_from_label(args.choose)
        force = True  # an explicit expert pick overrides the stopping guard
    step(session, chosen=chosen, force=force)
    save_session(session, args.session)
    _print_model(session)
    return EXIT_OK


def cmd_validate(args, parser) -> int:
    session = load_session(args.session)
    if args.holdout:
        prov = session.bundle.provenance
        holdout = load_dataset(
            args.holdout,
            session.bundle.response_name,
            covariates=list(session.bundle.covariate_names),
            family=session.family,
            zero_policy=ZeroPolicy.from_dict(prov.get("zero_policy", {})),
        )
    else:
        prov = dict(session.bundle.provenance)
        split = prov.pop("split", None)
        if not split:
            raise DataValidationError(
                "session was not created with --split; pass --holdout with a holdout CSV"
            )
        full = bundle_from_provenance(prov)
        spec = SplitSpec(train_fraction=split["train_fraction"], seed=split["seed"])
        _, holdout = split_holdout(full, spec)

    metrics = evaluate_holdout(
        session.current_fit, session.all_terms(), holdout, session.forced_covariates
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "metrics.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for key, value in sorted(metrics.items()):
        print(f"{key}: {value}")
    print(f"metrics written to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "step": cmd_step, "validate": cmd_validate}
    try:
        return handlers[args.command](args, parser)
    except (EligibilityError, SessionStoppedError) as exc:
        print(f"eligibility error: {exc}", file=sys.stderr)
        return EXIT_ELIGIBILITY
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DataValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LrSelectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
