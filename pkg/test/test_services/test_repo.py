# test/test_services/test_repo.py
import pytest

from sqlalchemy import select
from sqlalchemy.ext.asyncio import create_async_engine
from sqlalchemy.pool import StaticPool

from app.db.models import AuditLog, RunRecord, RunState, SuiteVerdict
from app.db.session import drop_db, init_db, make_session_factory, session_scope
from app.schemas.results import Verdict
from app.services.repo import Repo


@pytest.fixture()
async def engine():
    # Shared in-memory DB across connections
    eng = create_async_engine(
        "sqlite+aiosqlite:///:memory:",
        echo=False,
        poolclass=StaticPool,
    )
    await init_db(eng)
    try:
        yield eng
    finally:
        await drop_db(eng)
        await eng.dispose()


@pytest.fixture()
def session_factory(engine):
    return make_session_factory(engine)


@pytest.fixture()
def repo(session_factory):
    return Repo(session_factory)


@pytest.mark.asyncio
async def test_record_run_assigns_id_and_keeps_request(repo: Repo, session_factory):
    run = await repo.record_run(
        "kernel",
        ["kernel", "--space", "S2", "--t", "0.5", "--grid", "0.0:3.0:31"],
        space="S2",
        rows=31,
        summary={"truncation_L": 17},
    )
    assert run.id is not None
    assert run.status is RunState.ok

    async with session_factory() as s:
        stored = (await s.execute(select(RunRecord).where(RunRecord.id == run.id))).scalar_one()
    assert stored.request_json[:3] == ["kernel", "--space", "S2"]
    assert stored.summary_json == {"truncation_L": 17}
    assert stored.rows == 31


@pytest.mark.asyncio
async def test_verdicts_are_stored_per_run_in_criterion_order(repo: Repo):
    run = await repo.record_run("suite", ["suite", "--only", "3,2"], "failed")
    verdicts = [
        Verdict(criterion=3, name="small-H limits", passed=True, measured={"S2": 1e-12}, threshold="< 1e-8"),
        Verdict(criterion=2, name="omega* correctness", passed=False, detail="S3 off"),
    ]
    assert await repo.record_verdicts(run.id, verdicts) == 2

    rows = await repo.verdicts_for(run.id)
    assert [v.criterion for v in rows] == [2, 3]
    assert rows[0].passed is False and rows[0].detail == "S3 off"
    assert rows[1].measured_json == {"S2": 1e-12}
    assert run.status is RunState.failed


@pytest.mark.asyncio
async def test_list_runs_newest_first_and_filtered(repo: Repo):
    first = await repo.record_run("kernel", ["kernel"])
    second = await repo.record_run("potential", ["potential"])
    third = await repo.record_run("kernel", ["kernel", "--t", "1.0"])

    assert [r.id for r in await repo.list_runs()] == [third.id, second.id, first.id]
    assert [r.id for r in await repo.list_runs(command="kernel")] == [third.id, first.id]
    assert len(await repo.list_runs(limit=1)) == 1


@pytest.mark.asyncio
async def test_audit_log_written(repo: Repo, session_factory):
    await repo.audit("run.record", "run", "7", {"rows": 3})

    async with session_scope(session_factory) as s:
        res = await s.execute(select(AuditLog).where(AuditLog.resource_id == "7"))
        logs = res.scalars().all()
    assert len(logs) == 1
    assert logs[0].action == "run.record"
    assert logs[0].meta_json == {"rows": 3}


@pytest.mark.asyncio
async def test_transaction_rollback_on_error(repo: Repo, session_factory):
    with pytest.raises(RuntimeError):
        async with repo.transaction() as tx:
            run = await repo.record_run("suite", ["suite"], session=tx)
            await repo.record_verdicts(run.id, [Verdict(criterion=1, name="x", passed=True)], session=tx)
            # Force error AFTER write, BEFORE commit:
            raise RuntimeError("boom")

    assert await repo.list_runs() == []
    async with session_factory() as s:
        assert (await s.execute(select(SuiteVerdict))).scalars().all() == []
