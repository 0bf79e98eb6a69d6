# app/runtime/flow.py
from __future__ import annotations

from pocketflow import AsyncFlow
from app.runtime.nodes.validate import ValidateRequestNode
from app.runtime.nodes.kernel import KernelNode
from app.runtime.nodes.potential import PotentialNode
from app.runtime.nodes.efunction import EFunctionNode
from app.runtime.nodes.compare import CompareNode
from app.runtime.nodes.montecarlo import MonteCarloNode
from app.runtime.nodes.pde import PerturbedHeatNode
from app.runtime.nodes.suite import SuiteNode
from app.runtime.nodes.export import ExportNode
from app.runtime.nodes.persist import PersistNode
from app.runtime.nodes.report import ReportNode


def make_run_flow() -> AsyncFlow:
    """One batch run:
    validate → (invalid → report)
             → (kernel | potential | efunction | compare | mc | pde | suite → export → persist → report)
    """

    validate = ValidateRequestNode()
    export = ExportNode()
    persist = PersistNode()
    report = ReportNode()

    compute = {
        "kernel": KernelNode(),
        "potential": PotentialNode(),
        "efunction": EFunctionNode(),
        "compare": CompareNode(),
        "mc": MonteCarloNode(),
        "pde": PerturbedHeatNode(),
        "suite": SuiteNode(),
    }

    # --- Routing setup ---

    # 1. validation routes by command
    validate.successors = {**compute, "invalid": report}

    # 2. every command exports its table
    for node in compute.values():
        node.successors = {"ok": export}

    # 3. tail
    export.successors = {"ok": persist}
    persist.successors = {"ok": report}

    return AsyncFlow(start=validate)
