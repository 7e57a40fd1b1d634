#!/usr/bin/env python
"""Command line interface for `jumptail` -- simulate threshold crossings and check the loss tail."""
import argparse
import sys
import traceback

import numpy as np

from jumptail.core import EXIT_ERROR, fit_losses, simulate, tabulate_equilibria
from jumptail.exceptions import JumptailError
from jumptail.utils import package_version

__version__ = package_version()


def alpha_grid(text: str) -> np.ndarray:
    """Parse ``lo:hi:n`` into n evenly spaced alpha values."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as err:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:n (e.g. -1:1:21), got {text!r}"
        ) from err
    if count < 1 or not lo <= hi:
        raise argparse.ArgumentTypeError(f"need lo <= hi and n >= 1, got {text!r}")
    return np.linspace(lo, hi, count)


def _cli(args) -> argparse.Namespace:
    """Parse input arguments from the command line.

    Parameters
    ----------
    args : None or list[str]
        if None, then argparse will use sys.argv[1:]
    """
    parser = argparse.ArgumentParser(
        prog="jumptail",
        description="Simulate catastrophe-threshold crossings and verify the tail of the losses",
    )
    parser.add_argument(
        "--version",
        action='version',
        version=f'%(prog)s {__version__}',
        default=False,
        help="Show the current version.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sim = subparsers.add_parser("simulate", help="Run a scenario and write tables and plot data")
    sim.add_argument("config", help="JSON scenario file")
    sim.add_argument("--out", dest="out_dir", required=True, help="Output directory")
    sim.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    sim.add_argument(
        "--samples", dest="n_samples", type=int, default=None, help="Override n_samples"
    )
    sim.add_argument(
        "--workers", type=int, default=None, help="Number of sampling processes (default 1)"
    )
    sim.add_argument("--file-text", help="A text file to which the console output will be written.")
    sim.add_argument(
        "--file-csv",
        help="A csv (comma separated values) file to which the check report will be written.",
    )
    sim.add_argument(
        "--file-xlsx", help="An Excel file to which the report and all tables will be written."
    )
    sim.add_argument(
        "--no-color", action="store_true", default=False, help="Turn off all colorized output"
    )

    equi = subparsers.add_parser("equilibria", help="Tabulate equilibria over an alpha grid")
    equi.add_argument("config", help="JSON scenario file")
    equi.add_argument(
        "--alpha-grid",
        dest="alphas",
        type=alpha_grid,
        required=True,
        help="lo:hi:n; write --alpha-grid=-1:1:21 when lo is negative",
    )
    equi.add_argument("--file-csv", help="A csv file to which the equilibria will be written.")
    equi.add_argument(
        "--no-color", action="store_true", default=False, help="Turn off all colorized output"
    )

    fit = subparsers.add_parser("fit", help="Fit a GPD tail to a CSV column of losses")
    fit.add_argument("losses", help="CSV file of losses (a 'loss' column or the first column)")
    fit.add_argument(
        "--u-quantile",
        type=float,
        default=None,
        help="Threshold as an empirical quantile (default: 0.95)",
    )
    fit.add_argument(
        "--no-color", action="store_true", default=False, help="Turn off all colorized output"
    )

    return parser.parse_args(args)


def _dispatch(args: argparse.Namespace) -> int:
    """Run the selected subcommand and return its exit status."""
    if args.command == "simulate":
        return simulate(
            args.config,
            args.out_dir,
            seed=args.seed,
            n_samples=args.n_samples,
            workers=args.workers,
            no_color=args.no_color,
            file_text=args.file_text or "",
            file_csv=args.file_csv or "",
            file_xlsx=args.file_xlsx or "",
        )
    if args.command == "equilibria":
        return tabulate_equilibria(
            args.config, args.alphas, no_color=args.no_color, file_csv=args.file_csv or ""
        )
    return fit_losses(args.losses, args.u_quantile, no_color=args.no_color)


def run(args=None) -> int:
    """Parse arguments, run, and map the outcome to an exit status.

    0 means every check passed, 1 that a check failed, 2 that the run was aborted.
    """
    namespace = _cli(args)
    try:
        return _dispatch(namespace)
    except (JumptailError, FileNotFoundError) as err:
        print(f"jumptail {namespace.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR
    except Exception:  # pylint: disable=broad-exception-caught
        print(traceback.format_exc(), file=sys.stderr)
        return EXIT_ERROR


def main():  # pragma: no cover
    """Run from the command line."""
    sys.exit(run(None))


if __name__ == '__main__':  # pragma: no cover
    main()
