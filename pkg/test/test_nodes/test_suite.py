# test/test_nodes/test_suite.py
from typing import Any, Dict

import pytest
from pocketflow import AsyncFlow as Flow

from app.runtime.nodes import suite as suite_module
from app.runtime.nodes.suite import SuiteNode
from app.schemas.request import RunRequest
from app.schemas.results import Verdict


@pytest.mark.asyncio
async def test_suite_node_passes_selection_and_counts(monkeypatch):
    calls = []

    def fake_run_suite(only=None, quick=False):
        calls.append((only, quick))
        return [
            Verdict(criterion=2, name="a", passed=True),
            Verdict(criterion=3, name="b", passed=False),
        ]

    monkeypatch.setattr(suite_module, "run_suite", fake_run_suite)
    shared: Dict[str, Any] = {"request": RunRequest.from_argv(["suite", "--only", "2,3", "--quick"])}
    node = SuiteNode()
    node.successors = {}
    assert await Flow(start=node).run_async(shared) == "ok"

    assert calls == [((2, 3), True)]
    assert shared["summary"] == {"passed": 1.0, "total": 2.0}
    assert shared["table"] == []
    assert [v.criterion for v in shared["verdicts"]] == [2, 3]


@pytest.mark.asyncio
async def test_all_flag_runs_everything(monkeypatch):
    calls = []
    monkeypatch.setattr(suite_module, "run_suite", lambda only=None, quick=False: calls.append(only) or [])
    shared: Dict[str, Any] = {"request": RunRequest.from_argv(["suite", "--all", "--only", "4"])}
    node = SuiteNode()
    node.successors = {}
    await Flow(start=node).run_async(shared)
    assert calls == [None]
