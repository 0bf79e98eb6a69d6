# app/config.py
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional

DEFAULT_DATABASE_URL = "sqlite+aiosqlite:///./heatwrap_runs.db"


def thread_count() -> int:
    raw = os.getenv("HEATWRAP_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n > 0:
            return n
    return os.cpu_count() or 1


def log_level() -> int:
    name = os.getenv("HEATWRAP_LOG_LEVEL", "WARNING").upper()
    return getattr(logging, name, logging.WARNING)


def presets_path() -> Optional[Path]:
    raw = os.getenv("HEATWRAP_PRESETS")
    return Path(raw) if raw else None


def database_url() -> str:
    return os.getenv("DATABASE_URL", DEFAULT_DATABASE_URL)


def sql_echo() -> bool:
    return os.getenv("SQL_ECHO", "0") == "1"
