# app/runtime/nodes/efunction.py
from __future__ import annotations

from typing import Any, Dict, List

import numpy as np
from pocketflow import AsyncNode

from app.schemas.results import OrbitTriple
from app.services.efunction import e_closed_form, e_ratio, support
from app.services.errors import DomainError

DEFAULT_POINTS = 64


class EFunctionNode(AsyncNode):
    """
    e(r1, r2, r) along r, with |e − e_ratio| as the error column.
    Without a grid, r runs over cell midpoints of the support.
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared["request"], "space": shared["space"]}

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        req, space = prep["request"], prep["space"]
        lo, hi = support(space.curvature_sign, req.r1, req.r2)
        if req.grid is not None:
            radii = req.grid.points()
        else:
            radii = lo + (hi - lo) * (np.arange(DEFAULT_POINTS) + 0.5) / DEFAULT_POINTS
        rows: List[Dict[str, Any]] = []
        worst = 0.0
        for r in radii:
            tri = OrbitTriple(r1=req.r1, r2=req.r2, r=float(r))
            ev = e_closed_form(space, tri)
            err = 0.0
            if ev.in_support and lo < r < hi:
                try:
                    err = abs(ev.value - e_ratio(space, tri))
                except DomainError:
                    # within rounding of an endpoint; the ratio is singular there
                    err = 0.0
                worst = max(worst, err)
            rows.append({
                "space": space.name, "n": space.dim, "t": 0.0, "coordinate": float(r),
                "method": "e_closed_form", "value": ev.value, "err_est": err,
                "extra": f"in_support={str(ev.in_support).lower()}",
            })
        return {"rows": rows, "summary": {"support_lo": lo, "support_hi": hi, "max_ratio_gap": worst}}

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        shared["table"] = exec_res["rows"]
        shared["summary"] = {**shared.get("summary", {}), **exec_res["summary"]}
        return "ok"
