# app/db/models.py
from __future__ import annotations

import enum
from datetime import datetime
from typing import Optional

from sqlalchemy import Column
from sqlalchemy import Enum as SAEnum
from sqlalchemy import JSON
from sqlmodel import SQLModel, Field


Base = SQLModel


class RunState(str, enum.Enum):
    ok = "ok"
    failed = "failed"
    invalid = "invalid"


class TimeStamped(SQLModel):
    created_at: datetime = Field(default_factory=datetime.utcnow, nullable=False)
    updated_at: datetime = Field(default_factory=datetime.utcnow, nullable=False)


class RunRecordBase(SQLModel):
    command: str = Field(index=True, nullable=False)
    space: Optional[str] = Field(default=None, index=True)
    # argv form of the request; replaying it reproduces the output
    request_json: list = Field(default_factory=list, sa_type=JSON)
    status: RunState = Field(
        default=RunState.ok,
        sa_column=Column(
            SAEnum(RunState, name="run_state"),
            nullable=False,
            default=RunState.ok,
            index=True,
        ),
    )
    rows: int = Field(default=0, nullable=False)
    output: Optional[str] = None
    summary_json: Optional[dict] = Field(default=None, sa_type=JSON)


class RunRecord(RunRecordBase, TimeStamped, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)


class SuiteVerdictBase(SQLModel):
    run_id: int = Field(foreign_key="runrecord.id", index=True, nullable=False)
    criterion: int = Field(index=True, nullable=False)
    name: str = Field(nullable=False)
    passed: bool = Field(nullable=False)
    measured_json: Optional[dict] = Field(default=None, sa_type=JSON)
    threshold: Optional[str] = None
    detail: Optional[str] = None


class SuiteVerdict(SuiteVerdictBase, TimeStamped, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)


class AuditLogBase(SQLModel):
    action: str = Field(index=True, nullable=False)
    resource_type: str = Field(index=True, nullable=False)
    resource_id: str = Field(index=True, nullable=False)
    meta_json: Optional[dict] = Field(default=None, sa_type=JSON)


class AuditLog(AuditLogBase, TimeStamped, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
