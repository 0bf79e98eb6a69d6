# app/runtime/nodes/export.py
from __future__ import annotations

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pocketflow import AsyncNode

from app.schemas.results import Verdict

logger = logging.getLogger(__name__)

COLUMNS = ("space", "n", "t", "coordinate", "method", "value", "err_est", "extra")


def _plain(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def _finite(obj: Any) -> Any:
    """Non-finite floats become null so the document stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _cell(value: Any) -> str:
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def render_csv(meta: Dict[str, Any], rows: List[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_finite(meta), sort_keys=True, default=_plain, allow_nan=False) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def render_json(meta: Dict[str, Any], rows: List[Dict[str, Any]], verdicts: Optional[List[Verdict]] = None) -> str:
    doc: Dict[str, Any] = {"meta": meta, "rows": rows}
    if verdicts is not None:
        doc["verdicts"] = [v.model_dump() for v in verdicts]
    return json.dumps(_finite(doc), sort_keys=True, indent=2, default=_plain, allow_nan=False) + "\n"


def render_verdicts(verdicts: List[Verdict]) -> str:
    lines = []
    for v in verdicts:
        measured = " ".join(f"{k}={val:.3e}" for k, val in sorted(v.measured.items()))
        status = "PASS" if v.passed else "FAIL"
        tail = f" ({v.detail})" if v.detail else ""
        lines.append(f"[{status}] {v.criterion:2d} {v.name}: {measured}{tail}")
    return "\n".join(lines) + "\n"


class ExportNode(AsyncNode):
    """
    Render the table (CSV with a '#' JSON header, or JSON) and write it.
    - prep_async: snapshot request, rows, summary and metadata
    - exec_async: build the text (no side-effects)
    - post_async: write the file when an output path is set; keep the text in shared otherwise
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        req = shared["request"]
        space = shared.get("space")
        meta = {
            "command": req.command.value,
            "request": req.to_argv(),
            "space": space.name if space is not None else None,
            "summary": dict(shared.get("summary", {})),
            **shared.get("meta", {}),
        }
        return {
            "request": req,
            "meta": meta,
            "rows": list(shared.get("table", [])),
            "verdicts": shared.get("verdicts"),
        }

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        req = prep["request"]
        verdicts = prep["verdicts"]
        if req.output_format == "json":
            text = render_json(prep["meta"], prep["rows"], verdicts)
        elif verdicts is not None:
            text = render_verdicts(verdicts)
        else:
            text = render_csv(prep["meta"], prep["rows"])
        return {"text": text, "rows": len(prep["rows"]), "output": req.output}

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        shared["rendered"] = exec_res["text"]
        shared["row_count"] = exec_res["rows"]
        if exec_res["output"]:
            path = Path(exec_res["output"])
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(exec_res["text"], encoding="utf-8")
            logger.info("wrote %d rows to %s", exec_res["rows"], path)
        return "ok"
