# app/schemas/request.py
"""Batch requests: one validated model per CLI invocation, with a textual round trip."""
from __future__ import annotations

import argparse
import enum
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, field_validator, model_validator

from app.schemas.radial import GridSpec
from app.schemas.results import Branch, Scheme
from app.services.errors import UsageError


class Command(str, enum.Enum):
    kernel = "kernel"
    potential = "potential"
    efunction = "efunction"
    compare = "compare"
    mc = "mc"
    pde = "pde"
    suite = "suite"


class Method(str, enum.Enum):
    spectral = "spectral"
    gaussian_wrap = "gaussian_wrap"
    shifted = "shifted"
    pde = "pde"
    mc = "mc"


# flags whose spelling differs from the field name
_FLAG_OVERRIDES = {"run_all": "--all", "output_format": "--format"}
COMPARE_GRID = "0.05:3.0:128"


def _flag(name: str) -> str:
    return _FLAG_OVERRIDES.get(name, "--" + name.replace("_", "-"))


class RunRequest(BaseModel):
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    command: Command
    space: str = "S2"
    dim: Optional[PositiveInt] = None
    t: Optional[PositiveFloat] = None
    s: Optional[PositiveFloat] = None
    grid: Optional[GridSpec] = None
    method: Method = Method.spectral
    scheme: Scheme = Scheme.flat_walk_fk
    methods: Optional[Tuple[Method, Method]] = None
    shift: Optional[Literal["to_standard", "to_shifted"]] = None
    branch: Branch = Branch.abs_j
    lattice_terms: PositiveInt = 12
    r1: PositiveFloat = 0.7
    r2: PositiveFloat = 1.1
    samples: PositiveInt = 100_000
    steps: PositiveInt = 200
    seed: int = Field(default=0, ge=0, lt=2**64)
    bins: PositiveInt = 20
    dt: PositiveFloat = 1e-3
    only: Optional[Tuple[int, ...]] = None
    run_all: bool = False
    quick: bool = False
    output: Optional[str] = None
    output_format: Literal["csv", "json"] = "csv"
    presets: Optional[str] = None
    threads: Optional[PositiveInt] = None
    ledger: bool = False
    log_level: Optional[Literal["DEBUG", "INFO", "WARNING", "ERROR"]] = None

    @field_validator("grid", mode="before")
    @classmethod
    def _grid(cls, v: Any) -> Any:
        return GridSpec.parse(v) if isinstance(v, str) else v

    @field_validator("methods", mode="before")
    @classmethod
    def _methods(cls, v: Any) -> Any:
        if isinstance(v, str):
            parts = [p.strip() for p in v.split(",") if p.strip()]
            if len(parts) != 2:
                raise ValueError("give exactly two methods, e.g. gaussian_wrap,spectral")
            return tuple(parts)
        return v

    @field_validator("only", mode="before")
    @classmethod
    def _only(cls, v: Any) -> Any:
        if isinstance(v, str):
            return tuple(int(p) for p in v.split(",") if p.strip())
        return v

    @field_validator("only")
    @classmethod
    def _criteria(cls, v: Optional[Tuple[int, ...]]) -> Optional[Tuple[int, ...]]:
        if v is not None and any(not 1 <= c <= 10 for c in v):
            raise ValueError("criteria are numbered 1 to 10")
        return v

    @field_validator("log_level", mode="before")
    @classmethod
    def _level(cls, v: Any) -> Any:
        return v.upper() if isinstance(v, str) else v

    @model_validator(mode="before")
    @classmethod
    def _compare_grid(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("grid") is None:
            command = data.get("command")
            if getattr(command, "value", command) == Command.compare.value:
                data = {**data, "grid": COMPARE_GRID}
        return data

    @model_validator(mode="after")
    def _per_command(self) -> "RunRequest":
        needs_t = {Command.kernel, Command.compare, Command.mc, Command.pde}
        needs_grid = {Command.kernel, Command.potential, Command.compare}
        if self.command in needs_t and self.t is None:
            raise ValueError("t: required for this command")
        if self.command in needs_grid and self.grid is None:
            raise ValueError("grid: required for this command")
        if self.command is Command.compare:
            if self.methods is None:
                raise ValueError("methods: compare needs two methods")
            if self.methods[0] == self.methods[1]:
                raise ValueError("methods: compare needs two different methods")
        if self.command is Command.pde and self.t is not None and self.t <= 2e-3:
            raise ValueError("t: the PDE route starts at t0 = 1e-3 and needs t > 2e-3")
        return self

    # ---------------------------
    # Textual form
    # ---------------------------
    def to_argv(self) -> List[str]:
        argv = [self.command.value]
        for name, info in type(self).model_fields.items():
            if name == "command":
                continue
            value = getattr(self, name)
            if value == info.default:
                continue
            if isinstance(value, bool):
                argv.append(_flag(name))
                continue
            argv.extend([_flag(name), _render(value)])
        return argv

    @classmethod
    def from_argv(cls, argv: Sequence[str]) -> "RunRequest":
        ns = build_parser().parse_args(list(argv))
        raw: Dict[str, Any] = {k: v for k, v in vars(ns).items() if v is not None and v is not False}
        return parse_request(raw)


def _render(value: Any) -> str:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_request(raw: Dict[str, Any]) -> RunRequest:
    """Validate a raw mapping; the first failure becomes a UsageError naming its field."""
    try:
        return RunRequest.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = first.get("loc") or ()
        message = str(first.get("msg", exc)).removeprefix("Value error, ")
        field = str(loc[0]) if loc else None
        if field is None:
            head, sep, rest = message.partition(":")
            if sep and head.isidentifier():
                field, message = head, rest.strip()
        raise UsageError(message, field=field) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heatwrap", description="Heat kernels on rank-one symmetric spaces.")
    p.add_argument("command", choices=[c.value for c in Command])
    for name, info in RunRequest.model_fields.items():
        if name == "command":
            continue
        if info.annotation is bool:
            p.add_argument(_flag(name), dest=name, action="store_true")
        else:
            p.add_argument(_flag(name), dest=name, default=None)
    return p
