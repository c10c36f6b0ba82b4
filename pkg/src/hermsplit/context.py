"""Runtime state shared by descents, evolutions and benchmark cells."""

from __future__ import annotations

from concurrent.futures import Executor
from typing import TYPE_CHECKING, Any

from .event import Event

if TYPE_CHECKING:
    from .dynamics import DiagnosticsRecord
    from .ground_state import DescentRecord


class SolverContext:
    """Options and observation hooks passed through a solver run.

    ``executor`` runs the independent chains of a composite step concurrently when
    set; ``continue_on_error`` lets a benchmark keep going past a failed cell.
    """

    def __init__(
        self, *, executor: Executor | None = None, continue_on_error: bool = False
    ) -> None:
        self.executor = executor
        self.continue_on_error = continue_on_error

        self.on_iteration: Event[[SolverContext, DescentRecord]] = Event()
        self.on_record: Event[[SolverContext, DiagnosticsRecord]] = Event()
        self.on_step: Event[[SolverContext, int, float]] = Event()
        self.on_cell_start: Event[[SolverContext, Any]] = Event()
        self.on_cell_finish: Event[[SolverContext, Any]] = Event()
        self.on_cell_failed: Event[[SolverContext, Any, BaseException]] = Event()
