# app/runtime/nodes/kernel.py
from __future__ import annotations

import logging
from typing import Any, Dict, Optional

import numpy as np
from pocketflow import AsyncNode

from app.schemas.radial import GridSpec
from app.schemas.request import Method, RunRequest
from app.schemas.results import KernelEvaluation, Scheme, WalkConfig, WrapPolicy
from app.schemas.space import SpaceSpec
from app.services import pde_radial, stochastics, wrapping
from app.services.errors import DomainError
from app.services.root_data import j_eval

logger = logging.getLogger(__name__)

PDE_CELLS = 1200
PDE_T0 = 1e-3


def bin_centers(edges: np.ndarray) -> np.ndarray:
    return 0.5 * (edges[:-1] + edges[1:])


def _pde_kernel(space: SpaceSpec, req: RunRequest, coords: np.ndarray) -> KernelEvaluation:
    t = float(req.t)
    sol = pde_radial.solve_perturbed_heat(
        space, t - PDE_T0, GridSpec(start=0.0, stop=pde_radial.default_domain(space), count=PDE_CELLS),
        req.dt, t0=PDE_T0,
    )
    if float(np.max(coords)) > sol.grid[-1]:
        raise DomainError(f"coordinates beyond the solver domain r <= {sol.grid[-1]:.4g}")
    wrapped = sol.values / np.asarray(j_eval(space, sol.grid), dtype=float)
    loss = float(sol.meta["boundary_loss"])
    return KernelEvaluation(
        space=space.name, n=space.dim, t=t, coordinate=coords, values=np.interp(coords, sol.grid, wrapped),
        method=Method.pde.value, err_est=np.full(coords.shape, loss), extra=f"boundary_loss={loss:.3e}",
        meta={"steps": sol.meta["steps"], "dt": sol.meta["dt"], "cells": PDE_CELLS},
    )


def _mc_kernel(space: SpaceSpec, req: RunRequest, edges: np.ndarray) -> KernelEvaluation:
    config = WalkConfig(t=req.t, sample_count=req.samples, step_count=req.steps, seed=req.seed,
                        scheme=Scheme.flat_walk_fk)
    est = stochastics.flat_walk_feynman_kac(space, config, edges)
    j = np.asarray(j_eval(space, est.grid), dtype=float)
    return KernelEvaluation(
        space=space.name, n=space.dim, t=float(req.t), coordinate=est.grid, values=est.density / j,
        method=Method.mc.value, err_est=est.stderr / j, extra=f"killed_mass={est.killed_mass:.3e}",
        meta={"effective_samples": est.effective_samples, "seed": est.seed},
    )


def evaluate_method(
    space: SpaceSpec,
    req: RunRequest,
    method: Method,
    coords: np.ndarray,
    edges: Optional[np.ndarray] = None,
) -> KernelEvaluation:
    """Heat kernel values by one method; ``mc`` histograms on ``edges`` and reports bin centers."""
    t = float(req.t)
    if method is Method.spectral:
        return wrapping.standard_kernel(space, t, coords)
    if method is Method.shifted:
        return wrapping.shifted_kernel(space, t, coords)
    if method is Method.gaussian_wrap:
        policy = WrapPolicy(lattice_terms=req.lattice_terms, branch=req.branch)
        ev = wrapping.wrapped_gaussian(space, t, coords, policy)
        if req.shift is None:
            return ev
        return KernelEvaluation(
            space=ev.space, n=ev.n, t=t, coordinate=ev.coordinate,
            values=wrapping.apply_rho_shift(ev.values, space, t, req.shift), method=ev.method,
            err_est=wrapping.apply_rho_shift(ev.err_est, space, t, req.shift),
            extra=f"{ev.extra};shift={req.shift}", meta={**ev.meta, "shift": req.shift},
        )
    if method is Method.pde:
        return _pde_kernel(space, req, coords)
    if edges is None:
        raise DomainError("the Monte Carlo method needs histogram edges")
    return _mc_kernel(space, req, edges)


class KernelNode(AsyncNode):
    """Evaluate the heat kernel on the request grid by the requested method."""

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared["request"], "space": shared["space"]}

    async def exec_async(self, prep: Dict[str, Any]) -> KernelEvaluation:
        req: RunRequest = prep["request"]
        points = req.grid.points()
        if req.method is Method.mc:
            return evaluate_method(prep["space"], req, req.method, bin_centers(points), edges=points)
        return evaluate_method(prep["space"], req, req.method, points)

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: KernelEvaluation) -> str:
        shared["table"] = exec_res.rows()
        shared["meta"] = {"method": exec_res.method, **exec_res.meta}
        logger.debug("kernel: %d rows by %s", len(shared["table"]), exec_res.method)
        return "ok"
