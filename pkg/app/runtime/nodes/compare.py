# app/runtime/nodes/compare.py
from __future__ import annotations

import logging
from typing import Any, Dict

import numpy as np
from pocketflow import AsyncNode

from app.runtime.nodes.kernel import bin_centers, evaluate_method
from app.schemas.request import Method, RunRequest
from app.schemas.results import KernelEvaluation

logger = logging.getLogger(__name__)


class CompareNode(AsyncNode):
    """
    Two methods on the same coordinates, plus their pointwise delta.
    Rows: first series, second series, then method "delta" with value a − b
    and err_est the pointwise relative delta |a − b| / |b|.
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared["request"], "space": shared["space"]}

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        req: RunRequest = prep["request"]
        space = prep["space"]
        first, second = req.methods
        points = req.grid.points()
        edges = points if Method.mc in req.methods else None
        coords = bin_centers(points) if edges is not None else points

        a = evaluate_method(space, req, first, coords, edges)
        b = evaluate_method(space, req, second, a.coordinate, edges)
        diff = a.values - b.values
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(b.values != 0, np.abs(diff) / np.abs(b.values), np.inf)
        delta = KernelEvaluation(
            space=a.space, n=a.n, t=a.t, coordinate=a.coordinate, values=diff, method="delta",
            err_est=rel, extra=f"{first.value}-{second.value}",
        )
        peak = float(np.max(np.abs(b.values)))
        summary = {
            "sup_abs": float(np.max(np.abs(diff))),
            "sup_rel_pointwise": float(np.max(rel)),
            "sup_rel": float(np.max(np.abs(diff)) / peak) if peak > 0 else float("inf"),
        }
        return {"series": (a, b, delta), "summary": summary}

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        a, b, delta = exec_res["series"]
        shared["table"] = a.rows() + b.rows() + delta.rows()
        shared["summary"] = {**shared.get("summary", {}), **exec_res["summary"]}
        shared["meta"] = {"methods": [a.method, b.method], "extra": [a.extra, b.extra]}
        logger.info("compare %s vs %s: sup rel %.3e", a.method, b.method, exec_res["summary"]["sup_rel"])
        return "ok"
