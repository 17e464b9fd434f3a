"""HTTP session service for the review console and other clients.

Versioned JSON API under /v1. The service computes no statistics of its
own: every number in a response comes from the stats/engine layer, and a
trace CSV downloaded here is byte-identical to the CLI's export of the
same log. Sessions persist as event-log files (the shared session-file
schema plus a ``meta`` block) in the data directory; mutations are
serialized per session, reads are lock-free snapshots.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .engine import (
    Decision,
    DuplicateVerdictError,
    NothingToReviewError,
    Ordering,
    ReviewPolicy,
    ReviewSession,
    SessionStateError,
    SessionStatus,
    TracePoint,
    UnknownBlockError,
    Verdict,
    decide,
    new_session,
)
from .sessionfile import (
    SessionFileError,
    load_session,
    format_trace_csv,
    session_to_dict,
)
from .stats import (
    BetaParams,
    InfeasiblePriorError,
    elicit_prior,
    elicit_prior_from_sd,
    elicit_prior_pseudocounts,
    reliability,
)
from .workbook import Workbook, WorkbookError, load_workbook

__all__ = ["create_app", "ApiError"]


class ApiError(Exception):
    """Carries the error envelope: HTTP status plus {code, message}."""

    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class _Entry:
    id: str
    session: ReviewSession
    created_at: str
    workbook_ref: str | None
    lock: threading.Lock


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parse_prior(node: object) -> BetaParams:
    if not isinstance(node, dict):
        raise ApiError(400, "invalid_request", "prior must be an object")
    keys = frozenset(node)
    forms = {
        frozenset(("alpha", "beta")): lambda: BetaParams(node["alpha"], node["beta"]),
        frozenset(("mean", "variance")): lambda: elicit_prior(
            node["mean"], node["variance"]
        ),
        frozenset(("mean", "sd")): lambda: elicit_prior_from_sd(node["mean"], node["sd"]),
        frozenset(("errors_seen", "cells_seen")): lambda: elicit_prior_pseudocounts(
            node["errors_seen"], node["cells_seen"]
        ),
    }
    build = forms.get(keys)
    if build is None:
        raise ApiError(
            400,
            "invalid_request",
            "prior must be exactly one of {alpha,beta}, {mean,variance}, "
            "{mean,sd}, {errors_seen,cells_seen}",
        )
    try:
        return build()
    except InfeasiblePriorError as exc:
        raise ApiError(400, "infeasible_prior", str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ApiError(400, "invalid_request", f"bad prior: {exc}") from exc


def _parse_policy(node: object) -> ReviewPolicy:
    if node is None:
        return ReviewPolicy()
    if not isinstance(node, dict):
        raise ApiError(400, "invalid_request", "policy must be an object")
    try:
        return ReviewPolicy(**node)
    except (TypeError, ValueError) as exc:
        raise ApiError(400, "invalid_request", f"bad policy: {exc}") from exc


def _parse_ordering(node: object) -> Ordering:
    if node is None:
        return Ordering.sequential()
    if not isinstance(node, dict) or "kind" not in node:
        raise ApiError(400, "invalid_request", 'ordering must be {"kind": ...}')
    kind = node["kind"]
    if kind == "sequential":
        return Ordering.sequential()
    if kind == "shuffled":
        if "seed" not in node:
            raise ApiError(400, "invalid_request", "shuffled ordering requires a seed")
        try:
            return Ordering.shuffled(int(node["seed"]))
        except (TypeError, ValueError) as exc:
            raise ApiError(400, "invalid_request", f"bad seed: {exc}") from exc
    raise ApiError(400, "invalid_request", f"unknown ordering kind {kind!r}")


def _trace_point_json(p: TracePoint) -> dict:
    return {
        "n": p.n,
        "x": p.x,
        "alpha": p.posterior.alpha,
        "beta": p.posterior.beta,
        "mean": p.mean,
        "q05": p.q05,
        "q95": p.q95,
        "reliability": p.reliability,
    }


def _block_json(session: ReviewSession, block_id: str) -> dict:
    block = session.block(block_id)
    return {
        "id": block.id,
        "sheet": block.sheet,
        "representative": block.representative.a1,
        "members": [m.a1 for m in block.members],
        "formula": block.source,
        "relative": block.relative.canonical if block.relative is not None else None,
        "flagged": block.flagged,
        "position": session.position(block.id),
        "total": len(session.order),
    }


def _handle_json(entry: _Entry) -> dict:
    session = entry.session
    return {
        "id": entry.id,
        "created_at": entry.created_at,
        "workbook_name": session.workbook.name,
        "sheets": [s.name for s in session.workbook.sheets],
        "status": session.status.value,
        "decision": session.evaluate_decision().value,
        "judged": session.judged_count,
        "defects": session.defect_count,
        "total_blocks": len(session.order),
    }


def _prior_assessment_json(session: ReviewSession) -> dict:
    a = session.prior_assessment()
    return {
        "mean": a.mean,
        "q05": a.q05,
        "q95": a.q95,
        "reliability": a.reliability,
        "total_blocks": a.total_blocks,
        "predictive_argmax": a.predictive_argmax,
        "predictive_interval": list(a.predictive_interval),
        "predictive_mass": a.predictive_mass,
    }


class _Store:
    """In-memory registry backed by session files when a data dir is set."""

    def __init__(self, data_dir: str | Path | None) -> None:
        self._dir = Path(data_dir) if data_dir is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
        self._entries: dict[str, _Entry] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path | None:
        if self._dir is None:
            return None
        return self._dir / f"{session_id}.json"

    def persist(self, entry: _Entry) -> None:
        path = self._path(entry.id)
        if path is None:
            return
        payload = session_to_dict(entry.session, workbook_ref=entry.workbook_ref)
        payload["meta"] = {
            "id": entry.id,
            "created_at": entry.created_at,
            "workbook_name": entry.session.workbook.name,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    def create(self, session: ReviewSession, workbook_ref: str | None) -> _Entry:
        entry = _Entry(
            id=uuid.uuid4().hex,
            session=session,
            created_at=_now_iso(),
            workbook_ref=workbook_ref,
            lock=threading.Lock(),
        )
        with self._registry_lock:
            self._entries[entry.id] = entry
        self.persist(entry)
        return entry

    def get(self, session_id: str) -> _Entry:
        with self._registry_lock:
            entry = self._entries.get(session_id)
        if entry is not None:
            return entry
        path = self._path(session_id)
        if path is not None and path.exists():
            return self._load_file(session_id, path)
        raise ApiError(404, "session_not_found", f"no session {session_id!r}")

    def _load_file(self, session_id: str, path: Path) -> _Entry:
        try:
            session = load_session(path)
            meta = json.loads(path.read_text(encoding="utf-8")).get("meta", {})
        except (SessionFileError, WorkbookError, json.JSONDecodeError) as exc:
            raise ApiError(500, "session_file_error", str(exc)) from exc
        wb_node = json.loads(path.read_text(encoding="utf-8"))["workbook"]
        entry = _Entry(
            id=session_id,
            session=session,
            created_at=meta.get("created_at", ""),
            workbook_ref=wb_node if isinstance(wb_node, str) else None,
            lock=threading.Lock(),
        )
        with self._registry_lock:
            existing = self._entries.get(session_id)
            if existing is not None:
                return existing
            self._entries[session_id] = entry
        return entry

    def list_ids(self) -> list[str]:
        with self._registry_lock:
            ids = set(self._entries)
        if self._dir is not None:
            ids.update(p.stem for p in self._dir.glob("*.json"))
        return sorted(ids)


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="spreadaudit", version="0.1.0")
    # the review console is a static page served from anywhere
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = _Store(data_dir)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "path": request.url.path},
        )

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/v1/sessions")
    def list_sessions() -> dict:
        return {"sessions": [_handle_json(store.get(sid)) for sid in store.list_ids()]}

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: dict) -> dict:
        if not isinstance(body, dict):
            raise ApiError(400, "invalid_request", "body must be a JSON object")
        if "workbook" not in body:
            raise ApiError(400, "invalid_request", 'missing "workbook"')
        wb_node = body["workbook"]
        workbook_ref: str | None = None
        if isinstance(wb_node, str):
            workbook_ref = wb_node
            try:
                raw: bytes | dict = Path(wb_node).read_bytes()
            except OSError as exc:
                raise ApiError(400, "workbook_unreadable", str(exc)) from exc
        elif isinstance(wb_node, dict):
            raw = wb_node
        else:
            raise ApiError(400, "invalid_request", "workbook must be a document or a path")
        try:
            workbook = load_workbook(raw)
        except WorkbookError as exc:
            raise ApiError(400, "workbook_schema", str(exc)) from exc

        if "prior" not in body:
            raise ApiError(400, "invalid_request", 'missing "prior"')
        prior = _parse_prior(body["prior"])
        policy = _parse_policy(body.get("policy"))
        ordering = _parse_ordering(body.get("ordering"))
        try:
            session = new_session(workbook, prior, policy, ordering)
        except NothingToReviewError as exc:
            raise ApiError(422, "nothing_to_review", str(exc)) from exc
        entry = store.create(session, workbook_ref)
        out = _handle_json(entry)
        out["prior"] = {"alpha": prior.alpha, "beta": prior.beta}
        out["policy"] = {
            "acceptable_cer": policy.acceptable_cer,
            "target_reliability": policy.target_reliability,
            "floor_reliability": policy.floor_reliability,
            "min_blocks": policy.min_blocks,
            "consecutive_required": policy.consecutive_required,
        }
        out["ordering"] = {"kind": ordering.kind} | (
            {"seed": ordering.seed} if ordering.kind == "shuffled" else {}
        )
        out["prior_assessment"] = _prior_assessment_json(session)
        return out

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        entry = store.get(session_id)
        out = _handle_json(entry)
        out["prior"] = {
            "alpha": entry.session.prior.alpha,
            "beta": entry.session.prior.beta,
        }
        out["prior_assessment"] = _prior_assessment_json(entry.session)
        return out

    @app.get("/v1/sessions/{session_id}/next")
    def get_next_block(session_id: str) -> dict:
        entry = store.get(session_id)
        session = entry.session
        if session.status is not SessionStatus.IN_PROGRESS:
            raise ApiError(
                409,
                "session_stopped"
                if session.status is not SessionStatus.EXHAUSTED
                else "exhausted",
                f"session is {session.status.value}",
            )
        block = session.next_block()
        if block is None:
            raise ApiError(409, "exhausted", "every block has a verdict")
        return _block_json(session, block.id)

    @app.post("/v1/sessions/{session_id}/outcomes")
    def post_outcome(session_id: str, body: dict) -> dict:
        entry = store.get(session_id)
        if not isinstance(body, dict) or "block" not in body or "verdict" not in body:
            raise ApiError(400, "invalid_request", 'body needs "block" and "verdict"')
        try:
            verdict = Verdict(body["verdict"])
        except ValueError as exc:
            raise ApiError(400, "invalid_request", f"bad verdict: {exc}") from exc
        note = body.get("note", "")
        if not isinstance(note, str):
            raise ApiError(400, "invalid_request", '"note" must be a string')
        with entry.lock:
            try:
                point = entry.session.record(body["block"], verdict, note=note)
            except DuplicateVerdictError as exc:
                raise ApiError(409, "duplicate_verdict", str(exc)) from exc
            except UnknownBlockError as exc:
                raise ApiError(404, "block_not_found", str(exc)) from exc
            except SessionStateError as exc:
                raise ApiError(422, "session_stopped", str(exc)) from exc
            store.persist(entry)
            return {
                "trace_point": _trace_point_json(point),
                "decision": entry.session.evaluate_decision().value,
                "status": entry.session.status.value,
            }

    @app.post("/v1/sessions/{session_id}/reopen")
    def reopen_session(session_id: str) -> dict:
        entry = store.get(session_id)
        with entry.lock:
            try:
                entry.session.reopen()
            except SessionStateError as exc:
                raise ApiError(409, "state_error", str(exc)) from exc
            store.persist(entry)
            return {"status": entry.session.status.value}

    @app.get("/v1/sessions/{session_id}/trace")
    def get_trace(
        session_id: str, format: str = "json", acceptable: float | None = None
    ):
        entry = store.get(session_id)
        session = entry.session
        report = session.trace_report()
        points = list(report.points)
        effective = session.policy.acceptable_cer
        if acceptable is not None:
            if not 0.0 < acceptable <= 1.0:
                raise ApiError(
                    400, "invalid_request", "acceptable must lie in (0, 1]"
                )
            effective = acceptable
            points = [
                replace(p, reliability=reliability(p.posterior, acceptable))
                for p in points
            ]
        if format == "csv":
            return PlainTextResponse(format_trace_csv(points), media_type="text/csv")
        if format != "json":
            raise ApiError(400, "invalid_request", f"unknown format {format!r}")

        out = {
            "status": report.status.value,
            "decision": report.decision.value,
            "decision_log": [list(e) for e in report.decision_log],
            "acceptable_cer": effective,
            "points": [_trace_point_json(p) for p in points],
            "prior_assessment": _prior_assessment_json(session),
            "predictive": {
                "remaining": report.remaining_blocks,
                "argmax": report.predictive_argmax,
                "interval": list(report.predictive_interval),
                "mass": report.predictive_mass,
            },
            "advisory": report.advisory,
        }
        if acceptable is not None:
            series = [p.reliability for p in points]
            first_accept = None
            first_redevelop = None
            for i in range(len(series)):
                d = decide(i + 1, len(session.order), series[: i + 1], session.policy)
                if d is Decision.STOP_ACCEPT and first_accept is None:
                    first_accept = i + 1
                if d is Decision.RECOMMEND_REDEVELOP and first_redevelop is None:
                    first_redevelop = i + 1
            out["what_if"] = {
                "acceptable_cer": acceptable,
                "first_stop_accept": first_accept,
                "first_redevelop": first_redevelop,
            }
        return out

    @app.get("/v1/sessions/{session_id}/grid/{sheet_name}")
    def get_grid(session_id: str, sheet_name: str) -> dict:
        entry = store.get(session_id)
        session = entry.session
        sheet = session.workbook.sheet(sheet_name)
        if sheet is None:
            raise ApiError(404, "sheet_not_found", f"no sheet {sheet_name!r}")
        block_of: dict[str, str] = {}
        sheet_blocks = []
        current = session.next_block()
        for block in session.order:
            if block.sheet != sheet_name:
                continue
            for member in block.members:
                block_of[member.a1] = block.id
            sheet_blocks.append(
                {
                    "id": block.id,
                    "representative": block.representative.a1,
                    "members": [m.a1 for m in block.members],
                    "flagged": block.flagged,
                    "judged": block.id in {o.block_id for o in session.outcomes},
                    "current": current is not None and current.id == block.id,
                }
            )
        cells = []
        for cell in sheet.cells():
            node: dict = {"ref": cell.address.a1}
            if cell.is_formula:
                node["kind"] = "formula"
                node["formula"] = cell.formula
                node["block"] = block_of.get(cell.address.a1)
            else:
                node["kind"] = "value"
                node["value"] = cell.value
            cells.append(node)
        return {"sheet": sheet_name, "cells": cells, "blocks": sheet_blocks}

    return app
