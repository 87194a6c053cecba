import csv
from pathlib import Path
from typing import Iterable


def write_csv(rows: Iterable[dict], path: Path | str, field_names: list[str]):
    """Writes rows to a CSV file with a fixed column order.
    Values are written as-is; floats keep their full repr so files are byte-stable."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        csv_writer = csv.DictWriter(f, fieldnames=field_names, lineterminator="\n")
        csv_writer.writeheader()
        for row in rows:
            csv_writer.writerow(row)


def read_csv(path: Path | str) -> tuple[list[str], list[dict[str, str]]]:
    """Returns the header and the rows of a CSV file"""
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        if reader.fieldnames is None:
            raise ValueError(f"Empty CSV file: `{path}`")
        return list(reader.fieldnames), rows
