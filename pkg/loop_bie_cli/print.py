from typing import (
    Iterable,
    Iterator,
    List,
    Optional,
    Tuple,
    Type,
    Union
)

import sys

import traceback

import rich.console
import rich

from loop_bie import (
    ErrorGroup,
    JobReport,
    JobState
)

NoTraceback = Union[bool, Type[BaseException], Tuple[Type[BaseException], ...]]


def format_exception(error: BaseException) -> List[str]:
    if sys.version_info >= (3, 10):
        return traceback.format_exception(error)
    else:
        return traceback.format_exception(type(error), error, error.__traceback__)


def style_indent(s: Union[str, List[str]]) -> str:
    return "   " + "\n   ".join(s.splitlines() if isinstance(s, str) else s)


def style_bold(s: str) -> str:
    return f"[bold]{s}[/bold]"


def style_red(s: str) -> str:
    return f"[red]{s}[/red]"


def style_green(s: str) -> str:
    return f"[green]{s}[/green]"


def style_dim(s: str) -> str:
    return f"[dim]{s}[/dim]"


def style_list_item(s: Union[str, List[str]]) -> str:
    return " • " + style_indent(s).strip()


def style_list(l: Iterable[Union[str, List[str]]]) -> str:
    return "\n".join(style_list_item(s) for s in l)


def _wants_traceback(error: BaseException, no_traceback: NoTraceback) -> bool:
    if no_traceback is True:
        return False
    if no_traceback is False:
        return True
    return not isinstance(error, no_traceback)


def style_error(
    message: Union[BaseException, str],
    *,
    error: Optional[BaseException] = None,
    no_traceback: NoTraceback = True,
) -> str:
    if isinstance(message, BaseException):
        error = message
        message = str(message)

    if error is None:
        return style_red(style_bold(message))

    text = style_red(style_bold(f"[{type(error).__name__}] {message}"))
    if _wants_traceback(error, no_traceback):
        text += "\n" + "\n".join(format_exception(error))
    return text


def style_error_group(errors: ErrorGroup, no_traceback: NoTraceback = True) -> str:
    return style_list(
        f"{style_bold(label)} : {style_error(error, no_traceback=no_traceback)}"
        for (label, error) in errors.items()
    )


def style_report(job_report: JobReport) -> str:
    if job_report.state == JobState.INPROGRESS:
        return f"⏳ {style_bold(job_report.context)} : {job_report.details}"
    elif job_report.state == JobState.SUCCESS:
        return style_list_item(f"{style_bold(job_report.context)} : {style_green(style_bold(str(job_report.details)))}")
    else:
        return style_list_item(f"{style_bold(job_report.context)} : {style_error(job_report.details)}")


def print_reports(operation: Iterator[JobReport], *, operation_name: str = ".", console: Optional[rich.console.Console] = None):
    """Renders in-progress reports on a status line and prints the final ones.

    Exceptions raised by `operation` propagate after the status line is cleared.
    """

    console = console or rich.get_console()
    status = console.status(operation_name, spinner="dots")

    try:
        for job_report in operation:
            if job_report.state == JobState.INPROGRESS:
                status.start()
                status.update(style_report(job_report))
            else:
                status.stop()
                console.print(style_report(job_report), crop=False, overflow="ignore")
    finally:
        status.stop()


def print_error(
    message: Union[BaseException, str],
    *,
    console: Optional[rich.console.Console] = None,
    error: Optional[BaseException] = None,
    no_traceback: NoTraceback = True,
):
    err_console = console or rich.console.Console(stderr=True)

    if isinstance(message, ErrorGroup):
        err_console.print(style_error(str(message), error=message, no_traceback=True))
        err_console.print(style_error_group(message, no_traceback=no_traceback))
    else:
        err_console.print(style_error(message, error=error, no_traceback=no_traceback))
