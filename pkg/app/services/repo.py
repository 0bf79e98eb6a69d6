# app/services/repo.py
from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Any, AsyncIterator, Callable, Iterable, Optional

from sqlalchemy import select
from sqlalchemy.ext.asyncio import AsyncSession

from app.db.models import AuditLog, RunRecord, RunState, SuiteVerdict
from app.schemas.results import Verdict


class Repo:
    """
    Data access for the run ledger.

    Usage patterns:
      - Single write (own session, autocommit):
          await repo.audit(...)

      - Composed writes with atomicity:
          async with repo.transaction() as s:
              run = await repo.record_run(..., session=s)
              await repo.record_verdicts(run.id, verdicts, session=s)
              await repo.audit(..., session=s)
              # any error -> full rollback
    """

    def __init__(self, session_factory: Callable[[], AsyncSession]):
        self._session_factory = session_factory

    # ---------------------------
    # Transactions
    # ---------------------------
    @asynccontextmanager
    async def transaction(self) -> AsyncIterator[AsyncSession]:
        """Yield a session with an active transaction. Rolls back on exception."""
        async with self._session_factory() as session:
            async with session.begin():
                yield session

    @asynccontextmanager
    async def _scope(self, session: Optional[AsyncSession]) -> AsyncIterator[AsyncSession]:
        # reuse the caller's session, or own one and commit at the end
        if session is not None:
            yield session
            return
        async with self._session_factory() as own:
            try:
                yield own
                await own.commit()
            except Exception:
                await own.rollback()
                raise

    # ---------------------------
    # Runs
    # ---------------------------
    async def record_run(
        self,
        command: str,
        request_argv: list[str],
        status: RunState | str = RunState.ok,
        *,
        space: Optional[str] = None,
        rows: int = 0,
        output: Optional[str] = None,
        summary: Optional[dict[str, Any]] = None,
        session: Optional[AsyncSession] = None,
    ) -> RunRecord:
        async with self._scope(session) as s:
            run = RunRecord(
                command=command,
                space=space,
                request_json=list(request_argv),
                status=RunState(status),
                rows=rows,
                output=output,
                summary_json=summary,
            )
            s.add(run)
            # flush to get the primary key
            await s.flush()
            await s.refresh(run)
            return run

    async def record_verdicts(
        self,
        run_id: int,
        verdicts: Iterable[Verdict],
        *,
        session: Optional[AsyncSession] = None,
    ) -> int:
        count = 0
        async with self._scope(session) as s:
            for v in verdicts:
                s.add(SuiteVerdict(
                    run_id=run_id,
                    criterion=v.criterion,
                    name=v.name,
                    passed=v.passed,
                    measured_json=dict(v.measured),
                    threshold=v.threshold,
                    detail=v.detail,
                ))
                count += 1
            await s.flush()
        return count

    async def list_runs(
        self,
        *,
        command: Optional[str] = None,
        limit: int = 20,
        session: Optional[AsyncSession] = None,
    ) -> list[RunRecord]:
        """Most recent runs first."""
        async with self._scope(session) as s:
            stmt = select(RunRecord).order_by(RunRecord.created_at.desc(), RunRecord.id.desc()).limit(limit)
            if command:
                stmt = stmt.where(RunRecord.command == command)
            result = await s.execute(stmt)
            return list(result.scalars().all())

    async def verdicts_for(self, run_id: int, *, session: Optional[AsyncSession] = None) -> list[SuiteVerdict]:
        async with self._scope(session) as s:
            stmt = select(SuiteVerdict).where(SuiteVerdict.run_id == run_id).order_by(SuiteVerdict.criterion.asc())
            result = await s.execute(stmt)
            return list(result.scalars().all())

    # ---------------------------
    # Audits
    # ---------------------------
    async def audit(
        self,
        action: str,
        resource_type: str,
        resource_id: str,
        meta_json: Optional[dict[str, Any]] = None,
        *,
        session: Optional[AsyncSession] = None,
    ) -> None:
        """Write an audit log entry. If no session provided, autocommits."""
        async with self._scope(session) as s:
            s.add(AuditLog(
                action=action,
                resource_type=resource_type,
                resource_id=resource_id,
                meta_json=meta_json,
            ))
            await s.flush()
