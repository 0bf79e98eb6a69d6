# test/test_main.py
import json

from sqlalchemy import create_engine, text

from app import main as cli
from app.runtime.nodes import suite as suite_module
from app.schemas.results import Verdict


def test_kernel_to_stdout(capsys):
    assert cli.main(["kernel", "--space", "S1", "--t", "0.5", "--grid", "0:3:4"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# ")
    assert out.splitlines()[1].startswith("space,n,t,coordinate")
    assert len(out.splitlines()) == 6


def test_output_file_and_report_on_stdout(tmp_path, capsys):
    path = tmp_path / "pot.csv"
    code = cli.main(["potential", "--space", "CP2", "--grid", "0.1:1.5:15", "--output", str(path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "ok"
    assert report["rows"] == 15
    assert report["output"] == str(path)
    assert path.read_text(encoding="utf-8").count("\n") == 17


def test_usage_errors_exit_two(capsys):
    assert cli.main(["kernel", "--grid", "0:1:10"]) == 2
    assert "t: required" in capsys.readouterr().err
    assert cli.main(["nonsense"]) == 2
    assert cli.main(["potential", "--space", "K9", "--grid", "0.1:1:10"]) == 2


def test_numerical_errors_exit_one(capsys):
    # the first wall of S2 is at π; the PDE domain stops short of it
    code = cli.main(["kernel", "--space", "S2", "--t", "0.2", "--grid", "0:3.1:5", "--method", "pde"])
    assert code == 1
    assert "solver domain" in capsys.readouterr().err


def test_failed_suite_exits_one(monkeypatch, capsys):
    monkeypatch.setattr(
        suite_module, "run_suite",
        lambda only=None, quick=False: [Verdict(criterion=1, name="exactness trichotomy", passed=False)],
    )
    assert cli.main(["suite", "--only", "1"]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_ledger_records_the_run(tmp_path, monkeypatch):
    db = tmp_path / "ledger.db"
    monkeypatch.setenv("DATABASE_URL", f"sqlite+aiosqlite:///{db}")
    monkeypatch.setenv("HEATWRAP_THREADS", "2")
    assert cli.main(["efunction", "--space", "H2", "--ledger", "--threads", "2"]) == 0

    engine = create_engine(f"sqlite:///{db}")
    with engine.connect() as conn:
        rows = conn.execute(text("SELECT command, space, rows FROM runrecord")).all()
        audits = conn.execute(text("SELECT action FROM auditlog")).all()
    engine.dispose()
    assert rows == [("efunction", "H2", 64)]
    assert audits == [("run.record",)]
