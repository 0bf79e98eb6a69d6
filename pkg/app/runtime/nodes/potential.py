# app/runtime/nodes/potential.py
from __future__ import annotations

from typing import Any, Dict, List

from pocketflow import AsyncNode

from app.services.potentials import omega_star_grid, omega_star_limit
from app.services.errors import UnsupportedSpaceError


class PotentialNode(AsyncNode):
    """Dump Ω* on the request grid (rank one); the regime tag goes to ``extra``."""

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared["request"], "space": shared["space"]}

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        space = prep["space"]
        H = prep["request"].grid.points()
        values, regimes = omega_star_grid(space, H)
        rows: List[Dict[str, Any]] = [
            {
                "space": space.name, "n": space.dim, "t": 0.0, "coordinate": float(h),
                "method": "omega_star", "value": float(v), "err_est": 0.0, "extra": reg.value,
            }
            for h, v, reg in zip(H, values, regimes)
        ]
        try:
            limit = omega_star_limit(space)
        except UnsupportedSpaceError:
            limit = None
        return {"rows": rows, "limit": limit}

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        shared["table"] = exec_res["rows"]
        if exec_res["limit"] is not None:
            shared["summary"] = {**shared.get("summary", {}), "limit_at_origin": exec_res["limit"]}
        return "ok"
