"""CSV and float formatting helpers shared by the export functions and the CLI."""

import csv

import numpy as np


def fmt(value) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(value))


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt(value)
    return str(value)


def write_rows(path, header, rows) -> None:
    """UTF-8 CSV with a header row; floats get round-trip precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
