# app/runtime/nodes/validate.py
from __future__ import annotations

import logging
from typing import Any, Dict, Optional

from pocketflow import AsyncNode

from app.config import presets_path
from app.schemas.request import RunRequest, parse_request
from app.services.errors import HeatwrapError, UsageError
from app.services.root_data import load_presets, resolve_space

logger = logging.getLogger(__name__)


class ValidateRequestNode(AsyncNode):
    """
    Validate the request and resolve its space before any computation.
    - prep_async: take a RunRequest or a raw mapping from shared
    - exec_async: parse, load presets, resolve the space (errors are returned, not raised)
    - post_async: store request/space and route by command, or "invalid"
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared.get("request"), "raw": shared.get("raw_request")}

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        try:
            req: RunRequest = prep["request"] or parse_request(dict(prep["raw"] or {}))
            path: Optional[str] = req.presets or (str(presets_path()) if presets_path() else None)
            try:
                presets = load_presets(path) if path else None
            except HeatwrapError as exc:
                raise UsageError(str(exc), field="presets") from None
            space = None
            if req.command.value != "suite":
                try:
                    space = resolve_space(req.space, req.dim, presets)
                except (HeatwrapError, KeyError, ValueError) as exc:
                    raise UsageError(f"invalid space: {exc}", field="space") from None
            return {"request": req, "space": space}
        except UsageError as exc:
            return {"error": exc}

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        if "error" in exec_res:
            shared["error"] = exec_res["error"]
            logger.info("request rejected: %s", exec_res["error"])
            return "invalid"
        req: RunRequest = exec_res["request"]
        shared["request"] = req
        shared["space"] = exec_res["space"]
        shared.setdefault("summary", {})
        logger.info("run %s on %s", req.command.value, req.space)
        return req.command.value
