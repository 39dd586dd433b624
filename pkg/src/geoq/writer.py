"""
Result files: CSV tables with a provenance comment line and JSON documents.

Every file records the program version and the scenario's configuration hash.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, is_dataclass
from enum import Enum
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence, TextIO

import numpy as np
import simplejson

from .const import FLOAT_FORMAT, GEOQ_CSV_DIALECT
from .version import __version__

logger = logging.getLogger(__name__)


class GeoqCSVDialect(csv.Dialect):
    """Plain comma-separated values with Unix line endings."""

    delimiter = ","
    doublequote = True
    lineterminator = "\n"
    quotechar = '"'
    quoting = csv.QUOTE_MINIMAL


csv.register_dialect(GEOQ_CSV_DIALECT, GeoqCSVDialect)


def format_value(value: Any) -> Any:
    """Floats with 17 significant digits, enough to round-trip; everything else unchanged."""
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return format(float(value), FLOAT_FORMAT)
    if isinstance(value, np.integer):
        return int(value)
    if value is None:
        return ""
    return value


def provenance_line(config_hash: str) -> str:
    return f"# geoq {__version__} config_hash={config_hash}"


def write_csv(
    target: TextIO,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config_hash: str,
    dialect: str = GEOQ_CSV_DIALECT,
) -> int:
    """
    Write a provenance comment line, a header and the rows.

    IMPORTANT: File handles must be opened in text mode with newline='' and encoding='utf-8'.

    :return: The number of data rows written.
    """
    target.write(provenance_line(config_hash) + "\n")
    writer = csv.writer(target, dialect=dialect)
    writer.writerow(header)
    count = 0
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} values, header has {len(header)}")
        writer.writerow([format_value(value) for value in row])
        count += 1
    return count


def _converter_for_json(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if is_dataclass(value) and not isinstance(value, type):
        return asdict(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(target: TextIO, payload: dict[str, Any], config_hash: str) -> None:
    """Write ``payload`` plus provenance fields as indented JSON with sorted keys (non-finite floats become null)."""
    document = {"geoq_version": __version__, "config_hash": config_hash, **payload}
    simplejson.dump(document, target, indent=2, sort_keys=True, ignore_nan=True, default=_converter_for_json)
    target.write("\n")


class ResultWriter:
    """Writes result files into one output directory and remembers what it wrote."""

    def __init__(self, output_directory: Path, config_hash: str) -> None:
        self.output_directory = output_directory
        self.config_hash = config_hash
        self.written: list[Path] = []

    def _open_target(self, name: str) -> Path:
        if not self.output_directory.is_dir():
            self.output_directory.mkdir(parents=True)
        target_path = self.output_directory / name
        assert target_path.parent == self.output_directory, target_path
        return target_path

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        target_path = self._open_target(name)
        with open(target_path, "w", newline="", encoding="utf-8") as fd:
            count = write_csv(fd, header, rows, self.config_hash)
        logger.debug(f"Wrote {count} rows to {target_path}")
        self.written.append(target_path)
        return target_path

    def json(self, name: str, payload: dict[str, Any]) -> Path:
        target_path = self._open_target(name)
        with open(target_path, "w", newline="", encoding="utf-8") as fd:
            write_json(fd, payload, self.config_hash)
        logger.debug(f"Wrote {target_path}")
        self.written.append(target_path)
        return target_path
