"""Diagnostics shared by the parser, the well-formedness pass, and the checker."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int | None = None
    col: int | None = None

    def __str__(self) -> str:
        pos = f"{self.line}:{self.col}: " if self.line is not None else ""
        return f"{pos}{self.code}: {self.message}"

    def to_json(self) -> dict:
        out: dict = {"code": self.code, "message": self.message}
        if self.line is not None:
            out["line"] = self.line
            out["col"] = self.col
        return out
