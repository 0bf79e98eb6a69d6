# test/test_nodes/test_export.py
import csv
import io
import json
from typing import Any, Dict

import numpy as np
import pytest
from pocketflow import AsyncFlow as Flow

from app.runtime.nodes.export import COLUMNS, ExportNode, render_csv, render_json, render_verdicts
from app.schemas.request import RunRequest
from app.schemas.results import Verdict
from app.services.root_data import preset


def _rows():
    return [
        {"space": "S2", "n": 2, "t": 0.5, "coordinate": 0.1, "method": "spectral",
         "value": 0.30000000000000004, "err_est": 1e-13, "extra": "L=17"},
        {"space": "S2", "n": 2, "t": 0.5, "coordinate": 0.2, "method": "spectral",
         "value": 0.25, "err_est": 1e-13, "extra": "L=17"},
    ]


async def _run(argv, **extra) -> Dict[str, Any]:
    shared: Dict[str, Any] = {"request": RunRequest.from_argv(argv), "space": preset("S2"),
                              "summary": {"truncation_L": 17}, "table": _rows(), **extra}
    node = ExportNode()
    node.successors = {}
    assert await Flow(start=node).run_async(shared) == "ok"
    return shared


def test_csv_has_json_header_and_full_precision():
    text = render_csv({"command": "kernel", "t": np.float64(0.5)}, _rows())
    header, body = text.split("\n", 1)
    assert header.startswith("# ")
    assert json.loads(header[2:]) == {"command": "kernel", "t": 0.5}
    table = list(csv.reader(io.StringIO(body)))
    assert tuple(table[0]) == COLUMNS
    assert table[1][COLUMNS.index("value")] == "0.30000000000000004"
    assert float(table[1][COLUMNS.index("err_est")]) == 1e-13


@pytest.mark.asyncio
async def test_export_writes_file(tmp_path):
    out = tmp_path / "runs" / "k.csv"
    shared = await _run(["kernel", "--t", "0.5", "--grid", "0.1:0.2:2", "--output", str(out)])
    assert out.read_text(encoding="utf-8") == shared["rendered"]
    assert shared["row_count"] == 2
    meta = json.loads(shared["rendered"].split("\n", 1)[0][2:])
    assert meta["space"] == "S2"
    assert meta["summary"] == {"truncation_L": 17}
    assert meta["request"][:3] == ["kernel", "--t", "0.5"]


@pytest.mark.asyncio
async def test_export_json_without_output_keeps_text():
    shared = await _run(["kernel", "--t", "0.5", "--grid", "0.1:0.2:2", "--format", "json"])
    doc = json.loads(shared["rendered"])
    assert [r["coordinate"] for r in doc["rows"]] == [0.1, 0.2]
    assert "verdicts" not in doc


def test_verdict_lines():
    text = render_verdicts([
        Verdict(criterion=3, name="small-H limits", passed=True, measured={"S2": 1e-12}),
        Verdict(criterion=8, name="perturbed kernel", passed=False, detail="boundary loss"),
    ])
    lines = text.splitlines()
    assert lines[0] == "[PASS]  3 small-H limits: S2=1.000e-12"
    assert lines[1] == "[FAIL]  8 perturbed kernel:  (boundary loss)"


@pytest.mark.asyncio
async def test_suite_export_renders_verdicts():
    verdicts = [Verdict(criterion=10, name="intertwining identity", passed=True, measured={"S2": 1e-9})]
    shared = await _run(["suite", "--only", "10"], verdicts=verdicts, table=[])
    assert shared["rendered"].startswith("[PASS] 10 intertwining identity")
    assert shared["row_count"] == 0


def _strict(token):
    raise ValueError(f"non-standard JSON token {token}")


def test_json_document_has_no_non_finite_tokens():
    rows = _rows()
    rows[0]["err_est"] = float("inf")
    verdicts = [Verdict(criterion=1, name="exactness trichotomy", passed=True,
                        measured={"S1": 1e-15, "gap": float("inf"), "noise": np.float64("nan")})]
    text = render_json({"summary": {"sup_rel": float("inf")}}, rows, verdicts)
    doc = json.loads(text, parse_constant=_strict)
    assert doc["rows"][0]["err_est"] is None
    assert doc["rows"][1]["err_est"] == 1e-13
    assert doc["meta"]["summary"]["sup_rel"] is None
    assert doc["verdicts"][0]["measured"] == {"S1": 1e-15, "gap": None, "noise": None}


def test_csv_header_stays_strict_json():
    header = render_csv({"sup_rel": float("inf")}, _rows()).split("\n", 1)[0]
    assert json.loads(header[2:], parse_constant=_strict) == {"sup_rel": None}
