"""Session files and trace export.

A session persists as its event log plus the inputs that determine the
trace: workbook (embedded document or a path), prior, policy, and
ordering. The trace itself is never stored; loading replays the log, and
replay equality is asserted against the recomputed state elsewhere.

The trace CSV (columns n, x, mean, q05, q95, reliability) is the plotting
data for the mean/band and reliability charts. Floats are printed with
repr, the shortest digits that round-trip, so exports from the engine,
the CLI, and the service are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .engine import (
    Ordering,
    Outcome,
    ReviewPolicy,
    ReviewSession,
    TracePoint,
    Verdict,
    replay,
)
from .stats import BetaParams
from .workbook import Workbook, load_workbook

__all__ = [
    "SessionFileError",
    "workbook_to_document",
    "session_to_dict",
    "save_session",
    "load_session",
    "format_trace_csv",
]

TRACE_CSV_HEADER = "n,x,mean,q05,q95,reliability"


class SessionFileError(ValueError):
    """A session file is malformed or references missing data."""


def workbook_to_document(workbook: Workbook) -> dict:
    """Serialize a workbook back to the JSON document shape (lossless)."""
    sheets = []
    for sheet in workbook.sheets:
        cells = []
        for cell in sheet.cells():
            node: dict = {"ref": cell.address.a1}
            if cell.is_formula:
                node["formula"] = cell.formula
            else:
                node["value"] = cell.value
            cells.append(node)
        sheets.append({"name": sheet.name, "cells": cells})
    return {"name": workbook.name, "sheets": sheets}


def session_to_dict(session: ReviewSession, workbook_ref: str | None = None) -> dict:
    """Session file payload; embeds the workbook unless a path is given."""
    ordering: dict = {"kind": session.ordering.kind}
    if session.ordering.kind == "shuffled":
        ordering["seed"] = session.ordering.seed
    return {
        "workbook": workbook_ref
        if workbook_ref is not None
        else workbook_to_document(session.workbook),
        "prior": {"alpha": session.prior.alpha, "beta": session.prior.beta},
        "policy": {
            "acceptable_cer": session.policy.acceptable_cer,
            "target_reliability": session.policy.target_reliability,
            "floor_reliability": session.policy.floor_reliability,
            "min_blocks": session.policy.min_blocks,
            "consecutive_required": session.policy.consecutive_required,
        },
        "ordering": ordering,
        "outcomes": [
            {
                "block": o.block_id,
                "verdict": o.verdict.value,
                "note": o.note,
                "timestamp": o.timestamp,
            }
            for o in session.outcomes
        ],
    }


def save_session(
    session: ReviewSession, path: str | Path, workbook_ref: str | None = None
) -> None:
    payload = session_to_dict(session, workbook_ref=workbook_ref)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _policy_from_dict(node: dict) -> ReviewPolicy:
    known = {
        "acceptable_cer",
        "target_reliability",
        "floor_reliability",
        "min_blocks",
        "consecutive_required",
    }
    unknown = set(node) - known
    if unknown:
        raise SessionFileError(f"unknown policy fields: {sorted(unknown)}")
    return ReviewPolicy(**node)


def _ordering_from_dict(node: dict) -> Ordering:
    kind = node.get("kind")
    if kind == "sequential":
        return Ordering.sequential()
    if kind == "shuffled":
        if "seed" not in node:
            raise SessionFileError("shuffled ordering requires a seed")
        return Ordering.shuffled(int(node["seed"]))
    raise SessionFileError(f"unknown ordering kind {kind!r}")


def outcomes_from_list(nodes: Sequence[dict]) -> list[Outcome]:
    out = []
    for i, node in enumerate(nodes):
        try:
            out.append(
                Outcome(
                    block_id=node["block"],
                    verdict=Verdict(node["verdict"]),
                    note=node.get("note", ""),
                    timestamp=node.get("timestamp", ""),
                )
            )
        except (KeyError, ValueError) as exc:
            raise SessionFileError(f"bad outcome at index {i}: {exc}") from exc
    return out


def load_session(path: str | Path, base_dir: str | Path | None = None) -> ReviewSession:
    """Load a session file and replay its log into a live session."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SessionFileError(f"cannot read session file {path}: {exc}") from exc
    for key in ("workbook", "prior", "policy", "ordering", "outcomes"):
        if key not in data:
            raise SessionFileError(f"session file is missing {key!r}")

    wb_node = data["workbook"]
    if isinstance(wb_node, str):
        wb_path = Path(wb_node)
        if not wb_path.is_absolute():
            wb_path = Path(base_dir or path.parent) / wb_path
        try:
            workbook = load_workbook(wb_path.read_bytes())
        except OSError as exc:
            raise SessionFileError(f"cannot read workbook {wb_path}: {exc}") from exc
    else:
        workbook = load_workbook(wb_node)

    prior_node = data["prior"]
    prior = BetaParams(prior_node["alpha"], prior_node["beta"])
    policy = _policy_from_dict(data["policy"])
    ordering = _ordering_from_dict(data["ordering"])
    outcomes = outcomes_from_list(data["outcomes"])
    return replay(workbook, prior, policy, ordering, outcomes)


def format_trace_csv(points: Sequence[TracePoint]) -> str:
    """Render trace points as CSV text (header always present)."""
    lines = [TRACE_CSV_HEADER]
    for p in points:
        lines.append(
            f"{p.n},{p.x},{p.mean!r},{p.q05!r},{p.q95!r},{p.reliability!r}"
        )
    return "\n".join(lines) + "\n"
