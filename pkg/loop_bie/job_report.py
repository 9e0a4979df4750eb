from __future__ import annotations

from enum import Enum

from typing import (
    Dict,
    Iterator,
    NamedTuple,
    Tuple,
    Union
)

import time


class JobState(Enum):
    SUCCESS = 0
    FAILURE = 1
    INPROGRESS = -1


class JobReport(NamedTuple):
    context: str
    details: Union[str, BaseException]
    state: JobState


class ErrorGroup(Exception):
    """Failures of the independent runs of a sweep, keyed by run label"""

    _errors: Dict[str, BaseException]

    def __init__(self, *args, errors: Dict[str, BaseException]):
        super().__init__(*args)
        self._errors = dict(errors)

    def __len__(self) -> int:
        return len(self._errors)

    def __getitem__(self, key: str) -> BaseException:
        return self._errors[key]

    def items(self) -> Iterator[Tuple[str, BaseException]]:
        return iter(self._errors.items())


class JobReportBuilder():
    """Builds the reports yielded by long running stages (assembly, eigensolve, GMRES).

    Completion messages carry the wall time elapsed since the builder was created.
    """

    _context: str
    _start: float

    def __init__(
        self,
        context: str
    ):
        self._context = context
        self._start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._start

    def progress(
        self,
        message: str
    ) -> JobReport:
        return JobReport(
            context=self._context,
            details=message,
            state=JobState.INPROGRESS
        )

    def fail(
        self,
        error: BaseException
    ) -> JobReport:
        return JobReport(
            context=self._context,
            details=error,
            state=JobState.FAILURE
        )

    def complete(
        self,
        message: str
    ) -> JobReport:
        return JobReport(
            context=self._context,
            details=f"{message} ({self.elapsed:.1f} s)",
            state=JobState.SUCCESS
        )
