"""Terminal output for asymcom commands.

Colour is decided once per Console: NO_COLOR wins, FORCE_COLOR forces it
on, otherwise stdout must be a tty. Results go to stdout; errors, warnings
and diagnostics go to stderr.
"""
from __future__ import annotations

import os
import sys
import traceback
from typing import Optional, TextIO

_SGR = {
    "bold": "1",
    "red": "31",
    "green": "32",
    "yellow": "33",
    "cyan": "36",
    "gray": "90",
    "white": "97",
}


def _color_wanted(stream: TextIO) -> bool:
    if os.environ.get("NO_COLOR"):
        return False
    if os.environ.get("FORCE_COLOR"):
        return True
    isatty = getattr(stream, "isatty", None)
    return bool(isatty and isatty())


def fmt_complex(z: complex, digits: int = 10) -> str:
    z = complex(z)
    sign = "-" if z.imag < 0 else "+"
    return f"{z.real:.{digits}g}{sign}{abs(z.imag):.{digits}g}i"


_STATUS_MARK = {
    "confirmed": ("green", "✓"),
    "predicted": ("gray", "·"),
}


# ---------------------------------------------------------------------------
# Console
# ---------------------------------------------------------------------------

class Console:
    """
    One place for every line asymcom prints.

    `debug` also enables full tracebacks; `verbose` only enables the
    per-stage diagnostics sent through print_debug.
    """

    def __init__(self, debug: bool = False, verbose: bool = False, color: Optional[bool] = None):
        self.debug = debug
        self.verbose = verbose
        self.color = _color_wanted(sys.stdout) if color is None else color

    def style(self, text: str, *names: str) -> str:
        if not self.color or not names:
            return text
        codes = ";".join(_SGR[n] for n in names)
        return f"\033[{codes}m{text}\033[0m"

    def _err(self, line: str = "") -> None:
        print(line, file=sys.stderr)

    # -- results -----------------------------------------------------------

    def print_run_started(self, command: str, source: str) -> None:
        rule = self.style("=" * 56, "bold", "cyan")
        print(rule)
        print(self.style(f"  asymcom {command}", "bold", "white"))
        print(f"  job file: {source}")
        print(rule)

    def print_section(self, title: str) -> None:
        print()
        print(self.style(title.upper(), "bold"))

    def print_value(self, label: str, value: object) -> None:
        shown = fmt_complex(value) if isinstance(value, complex) else value
        print(f"  {label:<18} {shown}")

    def print_root(self, index: int, root: complex, margin: float) -> None:
        note = self.style(f"|P_0'| = {margin:.3e}", "gray")
        print(f"  {self.style('×', 'cyan')} p_{index} = {fmt_complex(root, 12)}  {note}")

    def print_singularity(self, x_sing: complex, shift: tuple, status: str, digits: Optional[float]) -> None:
        color, mark = _STATUS_MARK.get(status, ("red", "✗"))
        line = f"  {self.style(mark, color)} x_sing = {fmt_complex(x_sing, 9)}  shift={list(shift)}  {status}"
        if digits is not None:
            line += "  " + self.style(f"{digits:.1f} digits", "gray")
        print(line)

    def print_written(self, path: str) -> None:
        print(f"  {self.style('✓', 'green')} wrote {path}")

    def print_info(self, message: str) -> None:
        print(message)

    # -- diagnostics -------------------------------------------------------

    def print_error(
        self,
        title: str,
        message: str,
        details: Optional[list[str]] = None,
        suggestion: Optional[str] = None,
    ) -> None:
        self._err()
        self._err(f"{self.style('ERROR', 'bold', 'red')}: {self.style(title, 'bold')}")
        self._err(f"  {message}")
        for line in details or ():
            self._err(f"  {line}")
        if suggestion:
            self._err()
            self._err(f"  {self.style('Hint', 'yellow')}: {suggestion}")

    def print_warning(self, message: str) -> None:
        self._err(f"{self.style('WARNING', 'yellow')}: {message}")

    def print_debug(self, message: str) -> None:
        if self.debug or self.verbose:
            self._err(f"{self.style('[debug]', 'gray')} {message}")

    def print_exception(self, exc: Exception) -> None:
        if self.debug:
            traceback.print_exception(type(exc), exc, exc.__traceback__)
            return
        hint = self.style("(rerun with --debug for the traceback)", "gray")
        self._err(f"{self.style('Unexpected error', 'red')}: {exc}  {hint}")


# ---------------------------------------------------------------------------
# Process-wide instance
# ---------------------------------------------------------------------------

_console: Optional[Console] = None


def get_console() -> Console:
    global _console
    if _console is None:
        _console = Console()
    return _console


def set_console(console: Console) -> None:
    global _console
    _console = console
