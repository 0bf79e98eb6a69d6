# app/runtime/nodes/report.py
from __future__ import annotations

from typing import Any, Dict

from pocketflow import AsyncNode

from app.schemas.results import RunReport, RunStatus


class ReportNode(AsyncNode):
    """Terminal step: build the exit report from whatever the run left in shared."""

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return shared

    async def exec_async(self, prep: Dict[str, Any]) -> RunReport:
        error = prep.get("error")
        req = prep.get("request")
        if error is not None:
            raw = prep.get("raw_request") or {}
            command = req.command.value if req is not None else str(raw.get("command", ""))
            return RunReport(command=command, status=RunStatus.invalid, error=str(error))
        verdicts = list(prep.get("verdicts") or [])
        status = RunStatus.failed if any(not v.passed for v in verdicts) else RunStatus.ok
        return RunReport(
            command=req.command.value,
            status=status,
            rows=int(prep.get("row_count", 0)),
            output=req.output,
            verdicts=verdicts,
            summary=dict(prep.get("summary", {})),
            format=req.output_format,
        )

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: RunReport) -> str:
        shared["report"] = exec_res
        return "done"
