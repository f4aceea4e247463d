"""JSON session persistence and the report document schema.

The session file references its dataset by provenance (paths + load
settings) so a later invocation or a service restart can rebuild the same
state; the final fit is re-verified against the stored -2logLik on load.
Report documents share one schema across CLI, service and UI:
{session, history[], selected[], fit{}, logcontrast[], scree[], graph_dot}.
"""

from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone
from typing import Any

from .errors import DataValidationError
from .glm import Family, StoppingCriterion, penalty_per_parameter
from .ingest import DatasetBundle, SplitSpec, ZeroPolicy, load_dataset, split_holdout
from .reporting import ScreeData, export_graph, scree, to_logcontrast
from .stepwise import SelectionMethod, SelectionSession, StepRecord, _refit, init_session

SESSION_FORMAT = "lrselect-session/1"

__all__ = [
    "session_state",
    "save_session",
    "load_session",
    "bundle_from_provenance",
    "report_document",
    "write_report_files",
    "fit_payload",
    "logcontrast_payload",
    "scree_payload",
]


def _jsonify(value: Any) -> Any:
    """NaN/inf are not valid JSON; map them to null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _criterion_dict(criterion: StoppingCriterion) -> dict:
    return {"kind": criterion.kind, "alpha": criterion.alpha, "max_steps": criterion.max_steps}


def _criterion_from(d: dict) -> StoppingCriterion:
    return StoppingCriterion(kind=d["kind"], alpha=d.get("alpha", 0.05), max_steps=d.get("max_steps"))


def session_state(session: SelectionSession) -> dict:
    parts = session.parts
    return {
        "format": SESSION_FORMAT,
        "seed": session.rng_seed,
        "method": int(session.method),
        "criterion": _criterion_dict(session.criterion),
        "family": session.family.value,
        "dataset": dict(session.bundle.provenance),
        "forced_terms": [t.label(parts) for t in session.forced_terms],
        "forced_covariates": [session.bundle.covariate_names[c] for c in session.forced_covariates],
        "selected": [t.label(parts) for t in session.selected],
        "alr_denominator": parts[session.alr_denominator] if session.alr_denominator is not None else None,
        "stopped": session.stopped,
        "history": [
            {
                "step": r.step,
                "term": r.label or None,
                "minus2loglik": r.minus2loglik,
                "objective": r.objective,
                "choice_rank": r.choice_rank,
                "forced_choice": r.forced_choice,
            }
            for r in session.history
        ],
        "diagnostics": list(session.diagnostics),
    }


def save_session(session: SelectionSession, path: str) -> None:
    doc = session_state(session)
    doc["created_at"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundle_from_provenance(provenance: dict) -> DatasetBundle:
    """Reload the dataset a session was built on, re-applying any split."""
    zero_policy = ZeroPolicy.from_dict(provenance.get("zero_policy", {}))
    bundle = load_dataset(
        provenance["composition_path"],
        provenance["response"],
        covariates=provenance.get("covariates", ()),
        family=Family(provenance["family"]),
        zero_policy=zero_policy,
    )
    split = provenance.get("split")
    if split:
        spec = SplitSpec(train_fraction=split["train_fraction"], seed=split["seed"])
        train, holdout = split_holdout(bundle, spec)
        bundle = train if split["role"] == "train" else holdout
    return bundle


def load_session(path: str) -> SelectionSession:
    """Rebuild a session from its JSON file and verify the fit still matches."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != SESSION_FORMAT:
        raise DataValidationError(f"{path}: not a session file (format {doc.get('format')!r})")
    bundle = bundle_from_provenance(doc["dataset"])
    comp = bundle.composition
    cov_names = list(bundle.covariate_names)
    forced_cov = []
    for name in doc.get("forced_covariates", []):
        if name not in cov_names:
            raise DataValidationError(f"{path}: covariate {name!r} not present in the reloaded dataset")
        forced_cov.append(cov_names.index(name))
    session = init_session(
        bundle,
        SelectionMethod(doc["method"]),
        _criterion_from(doc["criterion"]),
        forced_terms=[comp.term_from_label(lbl) for lbl in doc.get("forced_terms", [])],
        forced_covariates=forced_cov,
        seed=doc.get("seed", 0),
    )
    session.selected = [comp.term_from_label(lbl) for lbl in doc.get("selected", [])]
    den = doc.get("alr_denominator")
    if den is not None:
        session.alr_denominator = comp.part_index(den)
    session.history = [
        StepRecord(
            step=r["step"],
            term=comp.term_from_label(r["term"]) if r.get("term") else None,
            label=r.get("term") or "",
            minus2loglik=r["minus2loglik"],
            objective=r["objective"],
            choice_rank=r.get("choice_rank", 0),
            forced_choice=r.get("forced_choice", False),
        )
        for r in doc["history"]
    ]
    session.stopped = doc.get("stopped", False)
    session.diagnostics = list(doc.get("diagnostics", []))
    session.current_fit = _refit(session)
    stored = session.history[-1].minus2loglik
    if abs(session.current_fit.minus2loglik - stored) > 1e-6:
        raise DataValidationError(
            f"{path}: reloaded fit (-2logLik {session.current_fit.minus2loglik:.6f}) does not match "
            f"the stored value ({stored:.6f}); has the dataset changed?"
        )
    return session


def fit_payload(session: SelectionSession) -> dict:
    fit = session.current_fit
    return {
        "term_labels": list(fit.term_labels),
        "coefficients": [_jsonify(float(v)) for v in fit.coefficients],
        "std_errors": [_jsonify(float(v)) for v in fit.std_errors],
        "p_values": [_jsonify(float(v)) for v in fit.p_values],
        "minus2loglik": _jsonify(fit.minus2loglik),
        "objective": _jsonify(session.objective),
        "penalty_per_parameter": penalty_per_parameter(session.criterion, session.bundle.n, session.n_tests),
        "n": fit.n,
        "m": fit.m,
        "family": fit.family.value,
        "converged": fit.converged,
    }


def logcontrast_payload(session: SelectionSession) -> list | None:
    """Log-contrast rows, or None when the terms have no common denominator."""
    terms = session.all_terms()
    if not terms:
        return None
    try:
        report = to_logcontrast(session.current_fit, terms, session.parts)
    except DataValidationError:
        return None
    return [
        {
            "part": e.part,
            "coefficient": e.coefficient,
            "std_error": _jsonify(e.std_error),
            "p_value": _jsonify(e.p_value),
            "multiplicative_effect": e.multiplicative_effect,
            "percent_effect": e.percent_effect,
        }
        for e in report.entries
    ]


def scree_payload(data: ScreeData) -> dict:
    return {
        "rows": [
            {"step": r.step, "label": r.label, "incremental": r.incremental, "cumulative": r.cumulative}
            for r in data.rows
        ],
        "baseline": _jsonify(data.baseline),
        "floor": _jsonify(data.floor),
        "max_explainable": _jsonify(data.max_explainable),
        "units": data.units,
    }


def report_document(session: SelectionSession) -> dict:
    state = session_state(session)
    history = state.pop("history")
    return {
        "session": state,
        "history": history,
        "selected": [t.label(session.parts) for t in session.selected],
        "fit": fit_payload(session),
        "logcontrast": logcontrast_payload(session),
        "scree": scree_payload(scree(session)),
        "graph_dot": export_graph(session.all_terms(), session.parts),
    }


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_report_files(session: SelectionSession, out_dir: str) -> dict[str, str]:
    """Write the full report set; returns {artifact: path}."""
    os.makedirs(out_dir, exist_ok=True)
    doc = report_document(session)
    doc["created_at"] = datetime.now(timezone.utc).isoformat()
    paths = {}

    paths["report"] = os.path.join(out_dir, "report.json")
    with open(paths["report"], "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    fit = session.current_fit
    paths["fit"] = os.path.join(out_dir, "fit.csv")
    _write_csv(
        paths["fit"],
        ["term", "estimate", "std_error", "p_value"],
        [
            [lbl, repr(float(c)), repr(float(s)), repr(float(p))]
            for lbl, c, s, p in zip(fit.term_labels, fit.coefficients, fit.std_errors, fit.p_values)
        ],
    )

    paths["history"] = os.path.join(out_dir, "history.csv")
    _write_csv(
        paths["history"],
        ["step", "term", "minus2loglik", "objective", "choice_rank", "forced_choice"],
        [
            [r.step, r.label, repr(r.minus2loglik), repr(r.objective), r.choice_rank, r.forced_choice]
            for r in session.history
        ],
    )

    sc = doc["scree"]
    paths["scree"] = os.path.join(out_dir, "scree.csv")
    _write_csv(
        paths["scree"],
        ["step", "term", f"incremental_{sc['units']}", f"cumulative_{sc['units']}"],
        [[r["step"], r["label"], repr(r["incremental"]), repr(r["cumulative"])] for r in sc["rows"]],
    )

    paths["graph"] = os.path.join(out_dir, "graph.dot")
    with open(paths["graph"], "w", encoding="utf-8") as fh:
        fh.write(doc["graph_dot"])

    paths["session"] = os.path.join(out_dir, "session.json")
    save_session(session, paths["session"])
    return paths
