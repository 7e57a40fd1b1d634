"""Utility functions for printing to the console, a text transcript, and table files."""
# pylint: disable=too-many-arguments
import csv
import math
import re
import warnings
from collections.abc import Iterable, Sequence
from enum import Enum
from pathlib import Path
from typing import Optional, TextIO, Union

import colorama
import openpyxl
from colorama import Fore, Style
from openpyxl.cell import Cell
from openpyxl.styles import Font

from jumptail.utils import coerce_to_str

# Set up regex remover of ANSI color escape sequences
#   From <https://stackoverflow.com/a/14693789>
ansi_escape = re.compile(
    r'''
    \x1B  # ESC
    (?:   # 7-bit C1 Fe (except CSI)
        [@-Z\\-_]
    |     # or [ for CSI, followed by a control sequence
        \[
        [0-?]*  # Parameter bytes
        [ -/]*  # Intermediate bytes
        [@-~]   # Final byte
    )
''',
    re.VERBOSE,
)

HISTORY_HEADERS = ['Check', 'Observed', 'Expected', 'Other marks']


class Outputter:
    """Handler for print statements and saving a run report to text, csv, or Excel files."""

    _failure_marker = "***"

    def __init__(
        self,
        keep_print_history: bool = False,
        no_color: bool = False,
        text_file: Optional[Union[str, Path]] = None,
        column_widths: Optional[tuple[Union[int, str], Union[int, str], Union[int, str]]] = None,
    ):
        """Set up the handling of printing and saving destinations.

        Parameters
        ----------
        keep_print_history
            whether check rows are kept for ``write_history_to_csv``/``_excel``
        no_color
            strip ANSI styling from everything printed
        text_file
            optional transcript of the console output, overwritten if it exists
        column_widths
            widths of the label, observed and expected columns
        """
        self._keep_print_history = keep_print_history
        self._line_history: list[list[str]] = []
        self._no_color = no_color
        self.failures = 0

        default_widths = [36, 26, 26]
        if column_widths is not None:
            assert len(column_widths) == 3

            new_widths = default_widths
            for idx, width in enumerate(column_widths):
                if isinstance(width, str) and width.isdigit() and (int(width) > 0):
                    new_widths[idx] = int(width)
                elif isinstance(width, int) and width > 0:
                    new_widths[idx] = width
                else:
                    warnings.warn(
                        "Column-width input was not a positive integer. Reverting to default."
                    )
            self._column_widths = tuple(new_widths)
        else:
            self._column_widths = tuple(default_widths)

        if not no_color:
            colorama.init(autoreset=True)

        if text_file:
            # This will overwrite any existing file at this path if one exists.
            self._text_file_obj: Optional[TextIO] = open(
                Path(text_file), "w", encoding="utf-8"
            )  # pylint: disable=consider-using-with
        else:
            self._text_file_obj = None

    def __enter__(self):  # noqa: D105
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback):  # noqa: D105
        if self._text_file_obj:
            self._text_file_obj.close()

    def print(self, string: str = "", colors: bool = True, **print_args) -> None:
        """Print text using custom options.

        Parameters
        ----------
        string : str
        colors : bool
            If False, ANSI colors will be turned off for this line.
        print_args
            Additional keyword arguments that are passed to the standard Python print() function.
        """
        if self._no_color:
            text_to_print = ansi_escape.sub('', str(string))
        elif colors is False:
            text_to_print = self._make_normal(string)
        else:
            text_to_print = str(string)

        print(text_to_print, **print_args)

        if self._text_file_obj:
            self._text_file_obj.write(ansi_escape.sub('', text_to_print) + "\n")

    def _add_to_history(self, *items) -> None:
        """Append the items, as ANSI-stripped strings, as one row of the history."""
        if self._keep_print_history:
            row = [ansi_escape.sub('', str(item)).strip("\n") for item in items]
            self._line_history.append(row)

    @staticmethod
    def _make_normal(string):
        """Return text with normal color and style."""
        return Fore.WHITE + Style.RESET_ALL + str(string)

    def header(self, title: str) -> None:
        """Print a section title and record it as a one-cell history row."""
        self.print(Fore.LIGHTBLUE_EX + Style.BRIGHT + title)
        self._add_to_history(title)

    def side_by_side(
        self,
        str_a,
        str_b,
        str_c,
        dash_line=False,
        highlight=False,
    ) -> None:
        """Print three strings on one line; a highlighted row is red and marked in history.

        Parameters
        ----------
        str_a
        str_b
        str_c
        dash_line : bool, default False
        highlight : bool, default False
        """
        str_a, str_b, str_c = str(str_a), str(str_b), str(str_c)
        if highlight:
            str_a = Fore.RED + str_a
            extra_style_space = " " * len(Fore.RED)
            str_marker = self._failure_marker
        else:
            extra_style_space = ""
            str_marker = ""

        fill = "-" if dash_line else " "
        self.print(
            f" {extra_style_space}"
            f"{str_a:>{self._column_widths[0]}} "
            f"{str_b:{fill}>{self._column_widths[1]}} "
            f"{str_c:{fill}>{self._column_widths[2]}}",
        )

        self._add_to_history(str_a, str_b, str_c, str_marker)

    def check(self, label: str, observed, expected, ok: bool) -> bool:
        """Report one verification check as a row, highlighting it when it fails."""
        if not ok:
            self.failures += 1
        self.side_by_side(
            label,
            _display(observed),
            _display(expected),
            dash_line=True,
            highlight=not ok,
        )
        return ok

    def write_history_to_csv(self, filename: Union[str, Path] = "report.csv"):
        """Save the line history that's been stored to a CSV file."""
        with open(filename, 'w', encoding="utf-8", newline="") as target:
            writer = csv.writer(target, lineterminator="\n")
            writer.writerow(HISTORY_HEADERS)
            writer.writerows(self._line_history)

    def write_history_to_excel(
        self, filename: Union[str, Path] = "report.xlsx", tables: Optional[dict] = None
    ):
        """Save the line history to an Excel workbook, followed by one sheet per table.

        Parameters
        ----------
        filename
        tables : dict, optional
            sheet name -> (headers, rows)
        """
        workbook = openpyxl.Workbook()
        sheet = workbook.active
        sheet.title = "report"
        sheet.append(HISTORY_HEADERS[:3])

        for row in self._line_history:
            if (len(row) > 3) and (row[3] == self._failure_marker):
                # The red styling replaces the marker column.
                sheet.append(_excel_red_cells(row[:3], sheet))
            elif len(row) == 1:
                sheet.append(_excel_bold_underline_cells(row, sheet))
            else:
                sheet.append(row[:3])

        for name, (headers, rows) in (tables or {}).items():
            _append_table_sheet(workbook, name, headers, rows)
        workbook.save(filename)


def _display(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_csv_table(
    filename: Union[str, Path],
    headers: Sequence[str],
    rows: Iterable[Sequence],
    provenance: Sequence[tuple[str, object]] = (),
) -> Path:
    """Write a comma-separated table preceded by ``# key: value`` provenance lines.

    Floats are written with 17 significant digits so every value reads back exactly.
    """
    path = Path(filename)
    with open(path, "w", encoding="utf-8", newline="") as target:
        for key, value in provenance:
            target.write(f"# {key}: {coerce_to_str(value)}\n")
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([coerce_to_str(cell) for cell in row])
    return path


def _append_table_sheet(workbook, name: str, headers, rows) -> None:
    sheet = workbook.create_sheet(title=name[:31])
    sheet.append(_excel_bold_cells(headers, sheet))
    for row in rows:
        sheet.append([_excel_value(cell) for cell in row])


def _excel_value(cell):
    if hasattr(cell, "dtype"):
        cell = cell.item()
    if isinstance(cell, float) and not math.isfinite(cell):
        return coerce_to_str(cell)
    if isinstance(cell, (int, float)) or (isinstance(cell, str) and not isinstance(cell, Enum)):
        return cell
    return coerce_to_str(cell)


def _excel_red_cells(data, sheet):
    """Stylize cells in Excel with a red font."""
    for cell in data:
        cell = Cell(sheet, column="A", row=1, value=cell)
        cell.font = Font(bold=True, color="FFFF0000")
        yield cell


def _excel_bold_underline_cells(data, sheet):
    """Stylize cells in Excel with a bold and underlined font."""
    for cell in data:
        cell = Cell(sheet, column="A", row=1, value=cell)
        cell.font = Font(bold=True, underline='single')
        yield cell


def _excel_bold_cells(data, sheet):
    for cell in data:
        cell = Cell(sheet, column="A", row=1, value=cell)
        cell.font = Font(bold=True)
        yield cell
