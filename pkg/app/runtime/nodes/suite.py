# app/runtime/nodes/suite.py
from __future__ import annotations

import logging
from typing import Any, Dict, List

from pocketflow import AsyncNode

from app.schemas.results import Verdict
from app.services.acceptance import run_suite

logger = logging.getLogger(__name__)


class SuiteNode(AsyncNode):
    """Run the acceptance criteria (all of them unless ``--only`` narrows the set)."""

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        req = shared["request"]
        return {"only": None if req.run_all else req.only, "quick": req.quick}

    async def exec_async(self, prep: Dict[str, Any]) -> List[Verdict]:
        return run_suite(prep["only"], quick=prep["quick"])

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: List[Verdict]) -> str:
        shared["verdicts"] = exec_res
        passed = sum(v.passed for v in exec_res)
        shared["summary"] = {**shared.get("summary", {}), "passed": float(passed), "total": float(len(exec_res))}
        shared["table"] = []
        logger.info("suite: %d/%d criteria passed", passed, len(exec_res))
        return "ok"
