# app/runtime/nodes/montecarlo.py
from __future__ import annotations

import logging
from typing import Any, Dict

import numpy as np
from pocketflow import AsyncNode

from app.schemas.request import RunRequest
from app.schemas.results import KernelEvaluation, Scheme, WalkConfig
from app.schemas.space import SpaceSpec
from app.services import stochastics
from app.services.errors import UnsupportedSpaceError
from app.services.root_data import j_eval

logger = logging.getLogger(__name__)


def _feynman_kac(space: SpaceSpec, req: RunRequest, config: WalkConfig) -> Dict[str, Any]:
    edges = req.grid.points() if req.grid is not None else None
    est = stochastics.flat_walk_feynman_kac(space, config, edges)
    j = np.asarray(j_eval(space, est.grid), dtype=float)
    ev = KernelEvaluation(
        space=space.name, n=space.dim, t=config.t, coordinate=est.grid, values=est.density / j,
        method=Scheme.flat_walk_fk.value, err_est=est.stderr / j, extra=f"killed_mass={est.killed_mass:.3e}",
    )
    summary = {
        "killed_mass": est.killed_mass,
        "effective_samples": est.effective_samples,
        "weight_min": est.weight_range[0],
        "weight_max": est.weight_range[1],
    }
    return {"evaluation": ev, "summary": summary}


def _geodesic(space: SpaceSpec, req: RunRequest, config: WalkConfig) -> Dict[str, Any]:
    samples = stochastics.geodesic_walk(space, config)
    top = float(np.max(samples))
    edges = req.grid.points() if req.grid is not None else stochastics.freedman_diaconis_edges(samples, top)
    counts, _ = np.histogram(samples, bins=edges)
    width = np.diff(edges)
    p = counts / samples.size
    ev = KernelEvaluation(
        space=space.name, n=space.dim, t=config.t, coordinate=0.5 * (edges[:-1] + edges[1:]),
        values=p / width, method=Scheme.geodesic_walk.value,
        err_est=np.sqrt(p * (1.0 - p) / samples.size) / width, extra="radial_law",
    )
    summary = {"mean_square_displacement": stochastics.mean_square_displacement(samples)}
    try:
        summary["ks_statistic"] = stochastics.ks_against_spectral(space, samples, config.t)
    except UnsupportedSpaceError as exc:
        logger.info("no KS reference: %s", exc)
    return {"evaluation": ev, "summary": summary}


class MonteCarloNode(AsyncNode):
    """
    Run the requested sampler.
    - flat_walk_fk: weighted flat walk, reported as the kernel estimate density/j
    - geodesic_walk: histogram of d(o, B_t) as a radial law, with MSD and KS distance
    """

    async def prep_async(self, shared: Dict[str, Any]) -> Dict[str, Any]:
        return {"request": shared["request"], "space": shared["space"]}

    async def exec_async(self, prep: Dict[str, Any]) -> Dict[str, Any]:
        req: RunRequest = prep["request"]
        config = WalkConfig(t=req.t, sample_count=req.samples, step_count=req.steps, seed=req.seed, scheme=req.scheme)
        if req.scheme is Scheme.flat_walk_fk:
            return _feynman_kac(prep["space"], req, config)
        return _geodesic(prep["space"], req, config)

    async def post_async(self, shared: Dict[str, Any], prep: Dict[str, Any], exec_res: Dict[str, Any]) -> str:
        ev: KernelEvaluation = exec_res["evaluation"]
        shared["table"] = ev.rows()
        shared["summary"] = {**shared.get("summary", {}), **exec_res["summary"]}
        shared["meta"] = {"scheme": ev.method, "samples": prep["request"].samples, "seed": prep["request"].seed}
        return "ok"
