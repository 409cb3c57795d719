# common/logger/stage_timer.py
import time
from contextlib import contextmanager
from typing import Iterator, Optional

from common.context_vars import stage_timer_context_var


class StageTimer:
    """Accumulates wall time (ms) per named stage of an experiment."""

    def __init__(self) -> None:
        self.timings: dict[str, float] = {}

    @contextmanager
    def capture(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            duration = (time.perf_counter() - start) * 1000
            # repeated names accumulate
            self.timings[name] = self.timings.get(name, 0.0) + duration

    def as_dict(self) -> dict[str, float]:
        return {name: round(dur, 3) for name, dur in self.timings.items()}

    def format_summary(self) -> str:
        # e.g. "ensemble=1520.40ms, write=3.10ms"
        return ", ".join(f"{name}={dur:.2f}ms" for name, dur in self.timings.items())


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Time ``name`` on the active StageTimer, if any."""
    timer: Optional[StageTimer] = stage_timer_context_var.get()
    if timer is None:
        yield
        return
    with timer.capture(name):
        yield


__all__ = ["StageTimer", "stage"]
