# app/runtime/nodes/pde.py
from __future__ import annotations

from typing import Any, Dict

import numpy as np
from pocketflow import AsyncNode

from app.runtime.nodes.kernel import PDE_CELLS, PDE_T0
from app.schemas.radial import GridSpec
from app.schemas.results import KernelEvaluation
from app.services.pde_radial import default_domain, solve_perturbed_heat
from app.services.root_data import j_eval


class PerturbedHeatNode(AsyncNode):
    """
    Solve the perturbed heat equation and wrap the result (u/j) at cell centers.
    A request grid starting at 0 is the solver grid (stop = R, count = cells).
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared["request"], "space": shared["space"]}

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        req, space = prep["request"], prep["space"]
        grid = req.grid
        if grid is None or grid.start != 0.0:
            grid = GridSpec(start=0.0, stop=default_domain(space), count=PDE_CELLS)
        sol = solve_perturbed_heat(space, float(req.t) - PDE_T0, grid, req.dt, t0=PDE_T0)
        loss = float(sol.meta["boundary_loss"])
        ev = KernelEvaluation(
            space=space.name, n=space.dim, t=float(req.t), coordinate=sol.grid,
            values=sol.values / np.asarray(j_eval(space, sol.grid), dtype=float),
            method="pde", err_est=np.full(sol.grid.shape, loss), extra=f"boundary_loss={loss:.3e}",
        )
        return {"evaluation": ev, "summary": {"boundary_loss": loss, "steps": float(sol.meta["steps"])}}

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        shared["table"] = exec_res["evaluation"].rows()
        shared["summary"] = {**shared.get("summary", {}), **exec_res["summary"]}
        return "ok"
