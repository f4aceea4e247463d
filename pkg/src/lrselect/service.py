"""HTTP session service for the interactive stepwise workflow.

Endpoints:
  POST /sessions                        create from an uploaded or referenced CSV
  GET  /sessions/{id}                   current summary
  GET  /sessions/{id}/candidates        ranked candidates (top_k, default 20)
  POST /sessions/{id}/step              apply a step (optional term, force, version)
  POST /sessions/{id}/undo              revert the last step
  GET  /sessions/{id}/report/{kind}     fit | logcontrast | scree | graph | bootstrap
  GET  /healthz

Sessions live in memory behind per-id locks; every mutation bumps a version
integer (echo it in mutation requests for optimistic concurrency) and
snapshots the session JSON to the configured directory.
"""

from __future__ import annotations

import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .errors import (
    ConvergenceError,
    DataValidationError,
    EligibilityError,
    LrSelectError,
    SessionStoppedError,
)
from .glm import Family, StoppingCriterion
from .ingest import SplitSpec, ZeroPolicy, load_dataset, split_holdout
from .reporting import bootstrap_logcontrast, export_graph, scree
from .serialize import fit_payload, logcontrast_payload, save_session, scree_payload
from .stepwise import (
    SelectionMethod,
    SelectionSession,
    init_session,
    rank_candidates,
    step,
    undo,
)

DEFAULT_TOP_K = 20
DEFAULT_BOOTSTRAP_CAP = 5000


class CreateSessionRequest(BaseModel):
    csv_text: str | None = None
    data_path: str | None = None
    response: str
    covariates: list[str] = Field(default_factory=list)
    family: str = "binomial"
    method: int = 1
    criterion: str = "bic"
    alpha: float = 0.05
    max_steps: int | None = None
    forced_terms: list[str] = Field(default_factory=list)
    forced_covariates: list[str] = Field(default_factory=list)
    seed: int = 0
    zero_mode: str = "replace"
    zero_fraction: float = 0.65
    split: float | None = None


class StepRequest(BaseModel):
    term: str | None = None
    force: bool = False
    version: int | None = None


class UndoRequest(BaseModel):
    version: int | None = None


@dataclass
class SessionRecord:
    session: SelectionSession
    version: int = 0
    created_at: str = ""
    updated_at: str = ""
    lock: threading.Lock = field(default_factory=threading.Lock)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def create_app(snapshot_dir: str | None = None, bootstrap_cap: int = DEFAULT_BOOTSTRAP_CAP) -> FastAPI:
    snapshot_dir = snapshot_dir or os.environ.get("LRSELECT_SNAPSHOT_DIR") or tempfile.mkdtemp(prefix="lrselect-")
    os.makedirs(snapshot_dir, exist_ok=True)
    bootstrap_cap = int(os.environ.get("LRSELECT_BOOTSTRAP_CAP", bootstrap_cap))

    app = FastAPI(title="lrselect session service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store: dict[str, SessionRecord] = {}

    def summary(record: SessionRecord, sid: str) -> dict:
        session = record.session
        return {
            "id": sid,
            "version": record.version,
            "created_at": record.created_at,
            "updated_at": record.updated_at,
            "method": int(session.method),
            "criterion": {
                "kind": session.criterion.kind,
                "alpha": session.criterion.alpha,
                "max_steps": session.criterion.max_steps,
            },
            "family": session.family.value,
            "n": session.bundle.n,
            "j": session.bundle.j,
            "parts": list(session.parts),
            "step": len(session.selected),
            "stopped": session.stopped,
            "selected": [t.label(session.parts) for t in session.selected],
            "forced_terms": [t.label(session.parts) for t in session.forced_terms],
            "alr_denominator": (
                session.parts[session.alr_denominator] if session.alr_denominator is not None else None
            ),
            "penalty_per_parameter": session.penalty,
            "fit": fit_payload(session),
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
        }

    def get_record(sid: str) -> SessionRecord:
        record = store.get(sid)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        return record

    def snapshot(record: SessionRecord, sid: str) -> None:
        save_session(record.session, os.path.join(snapshot_dir, f"{sid}.json"))

    def check_version(record: SessionRecord, sid: str, version: int | None) -> None:
        if version is not None and version != record.version:
            raise HTTPException(
                status_code=409,
                detail={
                    "message": f"version {version} is stale",
                    "state": summary(record, sid),
                },
            )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(store)}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        sid = uuid.uuid4().hex[:12]
        try:
            if req.csv_text is not None:
                data_path = os.path.join(snapshot_dir, f"data-{sid}.csv")
                with open(data_path, "w", encoding="utf-8") as fh:
                    fh.write(req.csv_text)
            elif req.data_path:
                data_path = req.data_path
            else:
                raise DataValidationError("provide csv_text or data_path")
            covariates = list(req.covariates)
            for c in req.forced_covariates:
                if c not in covariates:
                    covariates.append(c)
            bundle = load_dataset(
                data_path,
                req.response,
                covariates=covariates,
                family=Family(req.family),
                zero_policy=ZeroPolicy(mode=req.zero_mode, fraction=req.zero_fraction),
            )
            if req.split is not None:
                bundle, _ = split_holdout(bundle, SplitSpec(train_fraction=req.split, seed=req.seed))
            comp = bundle.composition
            criterion = StoppingCriterion(req.criterion, alpha=req.alpha, max_steps=req.max_steps)
            session = init_session(
                bundle,
                SelectionMethod(req.method),
                criterion,
                forced_terms=[comp.term_from_label(lbl) for lbl in req.forced_terms],
                forced_covariates=[bundle.covariate_names.index(c) for c in req.forced_covariates],
                seed=req.seed,
            )
        except FileNotFoundError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except (ValueError, LrSelectError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        record = SessionRecord(session=session, created_at=_now(), updated_at=_now())
        store[sid] = record
        snapshot(record, sid)
        return summary(record, sid)

    @app.get("/sessions/{sid}")
    def get_session(sid: str) -> dict:
        return summary(get_record(sid), sid)

    @app.get("/sessions/{sid}/candidates")
    def get_candidates(sid: str, top_k: int = Query(default=DEFAULT_TOP_K, ge=1)) -> dict:
        record = get_record(sid)
        with record.lock:
            if record.session.stopped:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "message": "session is stopped",
                        "report": f"/sessions/{sid}/report/fit",
                    },
                )
            ranking = rank_candidates(record.session, top_k)
        return {
            "entries": [
                {
                    "term": e.label,
                    "minus2loglik": e.minus2loglik,
                    "delta_deviance": e.delta_deviance,
                    "objective": e.objective,
                    "would_stop": e.would_stop,
                }
                for e in ranking.entries
            ],
            "exhausted": ranking.exhausted,
            "diagnostics": list(ranking.diagnostics),
            "version": record.version,
        }

    @app.post("/sessions/{sid}/step")
    def post_step(sid: str, req: StepRequest) -> dict:
        record = get_record(sid)
        with record.lock:
            check_version(record, sid, req.version)
            session = record.session
            try:
                chosen = (
                    session.bundle.composition.term_from_label(req.term) if req.term else None
                )
                step(session, chosen=chosen, force=req.force)
            except SessionStoppedError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except (EligibilityError, DataValidationError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            record.version += 1
            record.updated_at = _now()
            snapshot(record, sid)
            return summary(record, sid)

    @app.post("/sessions/{sid}/undo")
    def post_undo(sid: str, req: UndoRequest | None = None) -> dict:
        record = get_record(sid)
        with record.lock:
            check_version(record, sid, req.version if req else None)
            undo(record.session)
            record.version += 1
            record.updated_at = _now()
            snapshot(record, sid)
            return summary(record, sid)

    @app.get("/sessions/{sid}/report/graph", response_class=PlainTextResponse)
    def report_graph(sid: str) -> str:
        record = get_record(sid)
        session = record.session
        return export_graph(session.all_terms(), session.parts)

    @app.get("/sessions/{sid}/report/{kind}")
    def report(
        sid: str,
        kind: str,
        B: int = Query(default=1000, ge=100),
        seed: int | None = None,
        stratify: bool = False,
    ) -> dict:
        record = get_record(sid)
        session = record.session
        if kind == "fit":
            return {"fit": fit_payload(session), "version": record.version}
        if kind == "scree":
            return {"scree": scree_payload(scree(session)), "version": record.version}
        if kind == "logcontrast":
            payload = logcontrast_payload(session)
            if payload is None:
                raise HTTPException(
                    status_code=409,
                    detail="log-contrast form needs terms with one common denominator (method 3)",
                )
            return {"logcontrast": payload, "version": record.version}
        if kind == "bootstrap":
            if B > bootstrap_cap:
                raise HTTPException(status_code=400, detail=f"B exceeds the server cap ({bootstrap_cap})")
            terms = session.all_terms()
            if not terms:
                raise HTTPException(status_code=409, detail="no terms selected yet")
            try:
                report = bootstrap_logcontrast(
                    session.bundle,
                    terms,
                    B=B,
                    seed=session.rng_seed if seed is None else seed,
                    covariate_indices=session.forced_covariates,
                    stratify=stratify,
                )
            except DataValidationError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except ConvergenceError as exc:
                raise HTTPException(status_code=502, detail=str(exc)) from exc
            return {
                "logcontrast": [
                    {
                        "part": e.part,
                        "coefficient": e.coefficient,
                        "std_error": e.std_error,
                        "p_value": e.p_value,
                        "multiplicative_effect": e.multiplicative_effect,
                        "percent_effect": e.percent_effect,
                        "ci_lower": e.ci_lower,
                        "ci_upper": e.ci_upper,
                        "effect_ci_lower": e.effect_ci_lower,
                        "effect_ci_upper": e.effect_ci_upper,
                    }
                    for e in report.entries
                ],
                "B": report.bootstrap_b,
                "failures": report.bootstrap_failures,
                "levels": list(report.levels or ()),
                "version": record.version,
            }
        raise HTTPException(status_code=404, detail=f"unknown report kind {kind!r}")

    return app


app = create_app()


def main(argv=None) -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="run the lrselect session service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--snapshot-dir", default=None)
    parser.add_argument("--bootstrap-cap", type=int, default=DEFAULT_BOOTSTRAP_CAP)
    args = parser.parse_args(argv)
    uvicorn.run(
        create_app(snapshot_dir=args.snapshot_dir, bootstrap_cap=args.bootstrap_cap),
        host=args.host,
        port=args.port,
        log_level="warning",
    )


if __name__ == "__main__":
    main()
