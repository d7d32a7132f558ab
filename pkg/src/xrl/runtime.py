"""Run outcomes, monitor configuration, and runtime error signals."""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, TypeVar

from .state import State

_T = TypeVar("_T")

#: Worker-thread stack for deep object-level recursion (fuel and the depth
#: watchdog bound it long before this is exhausted).
DEEP_STACK_BYTES = 512 * 1024 * 1024
DEEP_RECURSION_LIMIT = 600_000


def run_deep(fn: Callable[[], _T]) -> _T:
    """Run fn() on a thread with a large stack.

    Interpreter recursion tracks object-level call depth, which fuel or the
    watchdog bounds at up to 10^5 activations; the host default stack cannot
    hold that many frames, a dedicated thread can. RecursionError still
    propagates for callers that convert it into an outcome.
    """
    result: list[_T] = []
    error: list[BaseException] = []

    def work() -> None:
        if sys.getrecursionlimit() < DEEP_RECURSION_LIMIT:
            sys.setrecursionlimit(DEEP_RECURSION_LIMIT)
        try:
            result.append(fn())
        except BaseException as exc:   # noqa: BLE001 - re-raised below
            error.append(exc)

    old_size = threading.stack_size(DEEP_STACK_BYTES)
    try:
        worker = threading.Thread(target=work, name="xrl-run")
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_size)
    if error:
        raise error[0]
    return result[0]

# Monitor violation kinds
PRE = "PRE"
POST = "POST"
FRAME = "FRAME"
FRAME_R = "FRAME_R"
MSE = "MSE"
MEASURE = "MEASURE"
LEX = "LEX"
DF = "DF"
DISPATCH = "DISPATCH"
DIVERGENCE_SUSPECTED = "DIVERGENCE_SUSPECTED"


class MonitorViolationError(Exception):
    """A runtime monitor failed: evidence of a checker or obligation bug."""

    def __init__(self, kind: str, path: str, state: State | None = None,
                 detail: str = ""):
        super().__init__(f"{kind} at {path}" + (f": {detail}" if detail else ""))
        self.kind = kind
        self.path = path
        self.state = state
        self.detail = detail


class TimeoutSignal(Exception):
    """Fuel exhausted in the partial-correctness interpreter."""


class StuckSignal(Exception):
    """The plain oracle cannot proceed (e.g. dispatch on null)."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class Monitors:
    """Runtime monitor toggles; the default profile enables everything."""

    pre: bool = True
    post: bool = True
    frame: bool = True
    mse_invariant: bool = True
    measure_decrease: bool = True
    lex_descent: bool = True
    df_recheck: bool = False        # re-check well-definedness at every node
    depth_limit: int = 100_000
    trace: Optional[Callable[[dict], None]] = None

    @staticmethod
    def none() -> "Monitors":
        return Monitors(pre=False, post=False, frame=False, mse_invariant=False,
                        measure_decrease=False, lex_descent=False)


@dataclass(frozen=True)
class Ok:
    state: State


@dataclass(frozen=True)
class Timeout:
    pass


@dataclass(frozen=True)
class MonitorViolation:
    kind: str
    path: str
    state: State | None = None
    detail: str = ""


RunOutcome = Ok | Timeout | MonitorViolation


def outcome_to_json(outcome: RunOutcome) -> dict:
    from .state import state_to_json
    if isinstance(outcome, Ok):
        return {"outcome": "ok", "state": state_to_json(outcome.state)}
    if isinstance(outcome, Timeout):
        return {"outcome": "timeout"}
    out = {"outcome": "monitor_violation", "kind": outcome.kind,
           "path": outcome.path, "detail": outcome.detail}
    if outcome.state is not None:
        out["snapshot"] = state_to_json(outcome.state)
    return out
