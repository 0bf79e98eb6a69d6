# test/test_nodes/test_kernel.py
import math
from typing import Any, Dict

import numpy as np
import pytest
from pocketflow import AsyncFlow as Flow

from app.runtime.nodes.compare import CompareNode
from app.runtime.nodes.efunction import EFunctionNode
from app.runtime.nodes.kernel import KernelNode
from app.runtime.nodes.montecarlo import MonteCarloNode
from app.runtime.nodes.pde import PerturbedHeatNode
from app.runtime.nodes.potential import PotentialNode
from app.schemas.request import RunRequest
from app.services.errors import DomainError
from app.services.root_data import resolve_space
from app.services.spectral import heat_kernel_sphere


async def _run(node, argv) -> Dict[str, Any]:
    req = RunRequest.from_argv(argv)
    shared: Dict[str, Any] = {"request": req, "space": resolve_space(req.space, req.dim), "summary": {}}
    node.successors = {}
    action = await Flow(start=node).run_async(shared)
    assert action == "ok"
    return shared


@pytest.mark.asyncio
async def test_spectral_kernel_rows():
    shared = await _run(KernelNode(), ["kernel", "--space", "S2", "--t", "0.5", "--grid", "0.0:3.0:31"])
    rows = shared["table"]
    assert len(rows) == 31
    assert rows[0]["method"] == "spectral"
    assert rows[10]["coordinate"] == pytest.approx(1.0)
    expected = heat_kernel_sphere(2, np.array([1.0]), 0.5)[0][0]
    assert rows[10]["value"] == pytest.approx(expected, rel=1e-10)
    assert shared["meta"]["method"] == "spectral"


@pytest.mark.asyncio
async def test_wrapped_kernel_with_shift_matches_three_sphere():
    shared = await _run(KernelNode(), ["kernel", "--space", "S3", "--t", "0.5", "--grid", "0.1:3.0:30",
                                       "--method", "gaussian_wrap", "--shift", "to_standard"])
    values = np.array([r["value"] for r in shared["table"]])
    exact = await _run(KernelNode(), ["kernel", "--space", "S3", "--t", "0.5", "--grid", "0.1:3.0:30"])
    ref = np.array([r["value"] for r in exact["table"]])
    assert np.max(np.abs(values - ref) / ref) < 1e-8
    assert "shift=to_standard" in shared["table"][0]["extra"]


@pytest.mark.asyncio
async def test_mc_kernel_reports_bin_centers():
    shared = await _run(KernelNode(), ["kernel", "--space", "S2", "--t", "0.3", "--grid", "0.0:2.0:11",
                                       "--method", "mc", "--samples", "4000", "--steps", "50", "--seed", "4"])
    coords = [r["coordinate"] for r in shared["table"]]
    assert coords == pytest.approx(list(0.1 + 0.2 * np.arange(10)))
    assert shared["table"][0]["extra"].startswith("killed_mass=")
    assert shared["meta"]["seed"] == 4


@pytest.mark.asyncio
async def test_pde_kernel_refuses_points_outside_solver_domain():
    with pytest.raises(DomainError):
        await _run(KernelNode(), ["kernel", "--space", "S2", "--t", "0.2", "--grid", "0.0:3.1:11",
                                  "--method", "pde"])


@pytest.mark.asyncio
async def test_compare_adds_delta_series():
    shared = await _run(CompareNode(), ["compare", "--space", "S2", "--t", "1.0", "--grid", "0.1:3.0:30",
                                        "--methods", "gaussian_wrap,spectral", "--shift", "to_standard"])
    rows = shared["table"]
    assert len(rows) == 90
    assert [r["method"] for r in rows[::30]] == ["gaussian_wrap", "spectral", "delta"]
    assert rows[-1]["extra"] == "gaussian_wrap-spectral"
    summary = shared["summary"]
    # the two-sphere wrap is not the heat kernel
    assert summary["sup_rel"] > 1e-3
    assert summary["sup_rel_pointwise"] >= summary["sup_abs"] / max(r["value"] for r in rows[30:60])


@pytest.mark.asyncio
async def test_potential_rows_carry_regime():
    shared = await _run(PotentialNode(), ["potential", "--space", "S2", "--grid", "0.0:2.0:21"])
    rows = shared["table"]
    assert rows[0]["extra"] == "series_near_zero"
    assert rows[-1]["extra"] == "generic"
    assert rows[-1]["value"] == pytest.approx(-0.25 - 0.25 * (1.0 / math.sin(2.0) ** 2 - 0.25), rel=1e-10)
    assert shared["summary"]["limit_at_origin"] == pytest.approx(-1.0 / 3.0)


@pytest.mark.asyncio
async def test_efunction_rows_follow_support():
    shared = await _run(EFunctionNode(), ["efunction", "--space", "S2", "--r1", "0.7", "--r2", "1.1"])
    rows = shared["table"]
    assert len(rows) == 64
    assert shared["summary"]["support_lo"] == pytest.approx(0.4)
    assert shared["summary"]["support_hi"] == pytest.approx(1.8)
    assert shared["summary"]["max_ratio_gap"] < 1e-10
    assert all(r["extra"] == "in_support=true" for r in rows)


@pytest.mark.asyncio
async def test_pde_rows_on_default_domain():
    shared = await _run(PerturbedHeatNode(), ["pde", "--space", "S2", "--t", "0.2", "--dt", "1e-3"])
    rows = shared["table"]
    assert rows[0]["method"] == "pde"
    assert rows[-1]["coordinate"] < math.pi - 0.05
    assert shared["summary"]["boundary_loss"] < 5e-3


@pytest.mark.asyncio
async def test_geodesic_walk_node_reports_radial_law():
    shared = await _run(MonteCarloNode(), ["mc", "--space", "S2", "--t", "0.5", "--scheme", "geodesic_walk",
                                           "--samples", "5000", "--steps", "100", "--grid", "0:3:16"])
    rows = shared["table"]
    assert len(rows) == 15
    widths = 0.2
    assert sum(r["value"] * widths for r in rows) == pytest.approx(1.0, abs=1e-3)
    assert "ks_statistic" in shared["summary"]
    assert shared["meta"]["scheme"] == "geodesic_walk"


@pytest.mark.asyncio
async def test_feynman_kac_node_summarizes_weights():
    shared = await _run(MonteCarloNode(), ["mc", "--space", "S2", "--t", "0.3", "--samples", "4000",
                                           "--steps", "50"])
    summary = shared["summary"]
    assert 0 < summary["weight_min"] <= summary["weight_max"]
    assert summary["killed_mass"] < 1e-2
    assert shared["table"][0]["method"] == "flat_walk_fk"
