# app/main.py
"""Command-line entry point: ``heatwrap <command> [flags]``.

Exit status 0 on success, 1 when a numerical module fails (or a suite
criterion fails), 2 for an invalid request.
"""
from __future__ import annotations

import asyncio
import logging
import os
import sys
from typing import Any, Dict, Optional, Sequence

from app.config import log_level
from app.runtime.flow import make_run_flow
from app.schemas.request import RunRequest
from app.schemas.results import RunReport, RunStatus
from app.services.errors import HeatwrapError, UsageError

logger = logging.getLogger("heatwrap")


def _configure_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=getattr(logging, level) if level else log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


async def _open_repo():
    from app.db.session import init_db, make_engine, make_session_factory
    from app.services.repo import Repo

    engine = make_engine()
    await init_db(engine)
    return engine, Repo(make_session_factory(engine))


async def run(req: RunRequest) -> Dict[str, Any]:
    """Run one request through the flow and return the shared store."""
    shared: Dict[str, Any] = {"request": req}
    engine = None
    if req.ledger:
        engine, shared["repo"] = await _open_repo()
    try:
        await make_run_flow().run_async(shared)
    finally:
        if engine is not None:
            await engine.dispose()
    return shared


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        req = RunRequest.from_argv(args)
    except UsageError as exc:
        _configure_logging(None)
        print(f"heatwrap: {exc}", file=sys.stderr)
        return 2

    _configure_logging(req.log_level)
    if req.threads:
        os.environ["HEATWRAP_THREADS"] = str(req.threads)

    try:
        shared = asyncio.run(run(req))
    except HeatwrapError as exc:
        print(f"heatwrap: {exc}", file=sys.stderr)
        return 1

    report: RunReport = shared["report"]
    if report.status is RunStatus.invalid:
        print(f"heatwrap: {report.error}", file=sys.stderr)
        return 2
    if req.output:
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    else:
        sys.stdout.write(shared.get("rendered", ""))
    return 1 if report.status is RunStatus.failed else 0


if __name__ == "__main__":
    sys.exit(main())
