import csv
import io
import logging
import sys
from pathlib import Path
from typing import Iterable, Optional, Protocol, TextIO, runtime_checkable

from speamp.config import SIGNIFICANT_DIGITS

logger = logging.getLogger(__name__)


@runtime_checkable
class RecordWriter(Protocol):
    """Protocol for pluggable output writers."""

    def write(self, record: dict) -> None: ...

    def flush(self) -> None: ...

    def close(self) -> None: ...


def format_value(value) -> str:
    """Fixed decimal formatting: floats to 10 significant digits, None as an empty cell."""
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


class CsvWriter:
    """Writes records as CSV rows. Columns are determined from the first record.

    Output is UTF-8 with LF line endings; values go through ``format_value``.
    """

    def __init__(self, path: Optional[Path] = None, stream: Optional[TextIO] = None):
        if (path is None) == (stream is None):
            raise ValueError("CsvWriter needs exactly one of path or stream")
        self._path = path
        self._file: Optional[TextIO] = stream
        self._owns_file = stream is None
        self._writer: Optional[csv.DictWriter] = None
        self._columns: Optional[list[str]] = None
        self.rows = 0

    def write(self, record: dict) -> None:
        if self._writer is None:
            self._columns = list(record.keys())
            if self._file is None:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                self._file = open(self._path, "w", newline="", encoding="utf-8")
            self._writer = csv.DictWriter(self._file, fieldnames=self._columns, lineterminator="\n")
            self._writer.writeheader()
        self._writer.writerow({k: format_value(record.get(k)) for k in self._columns})
        self.rows += 1

    def flush(self) -> None:
        if self._file:
            self._file.flush()

    def close(self) -> None:
        if self._file and self._owns_file:
            self._file.close()
        elif self._file:
            self._file.flush()


def drain(writer: RecordWriter, rows: Iterable[dict]) -> int:
    """Write every row through ``writer`` and close it; returns the row count."""
    count = 0
    try:
        for row in rows:
            writer.write(row)
            count += 1
    finally:
        writer.close()
    return count


def write_rows(path: Optional[Path], rows: Iterable[dict]) -> int:
    """Write ``rows`` as CSV to ``path`` (parents created) or, with ``path=None``, to stdout."""
    writer = CsvWriter(path=Path(path)) if path is not None else CsvWriter(stream=sys.stdout)
    count = drain(writer, rows)
    logger.info(f"wrote {count} rows to {path or 'stdout'}")
    return count


def rows_to_text(rows: Iterable[dict]) -> str:
    """CSV text for ``rows``, as ``write_rows`` would emit it."""
    buffer = io.StringIO()
    drain(CsvWriter(stream=buffer), rows)
    return buffer.getvalue()
