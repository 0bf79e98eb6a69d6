# app/runtime/nodes/persist.py
from __future__ import annotations

from copy import deepcopy
from typing import Any, Dict, List, Optional

from pocketflow import AsyncNode

from app.schemas.results import Verdict


class PersistNode(AsyncNode):
    """
    Record the run (and suite verdicts) in the ledger in a single transaction.
    - prep_async: snapshot inputs (no side-effects); no repo means nothing to do
    - exec_async: compute a write plan (no side-effects)
    - post_async: execute DB writes in a transaction and route
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        req = shared["request"]
        space = shared.get("space")
        verdicts: Optional[List[Verdict]] = shared.get("verdicts")
        return {
            "repo": shared.get("repo") if req.ledger else None,
            "command": req.command.value,
            "argv": req.to_argv(),
            "space": space.name if space is not None else None,
            "rows": int(shared.get("row_count", 0)),
            "output": req.output,
            "summary": deepcopy(shared.get("summary", {})),
            "verdicts": list(verdicts) if verdicts is not None else [],
        }

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        failed = any(not v.passed for v in prep["verdicts"])
        return {
            "run": {
                "command": prep["command"],
                "request_argv": prep["argv"],
                "status": "failed" if failed else "ok",
                "space": prep["space"],
                "rows": prep["rows"],
                "output": prep["output"],
                "summary": prep["summary"],
            },
            "audit_meta": {"rows": prep["rows"], "verdicts": len(prep["verdicts"])},
        }

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        repo = prep["repo"]
        if repo is None:
            return "ok"

        async with repo.transaction() as s:
            run = await repo.record_run(**exec_res["run"], session=s)
            if prep["verdicts"]:
                await repo.record_verdicts(run.id, prep["verdicts"], session=s)
            await repo.audit("run.record", "run", str(run.id), exec_res["audit_meta"], session=s)

        shared["run_id"] = run.id
        return "ok"
