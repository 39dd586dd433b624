import io
from pathlib import Path

import numpy as np

ROOT_DIR = Path(__file__).parent.parent


def read_raw_text(source: Path | io.StringIO) -> str:
    if isinstance(source, io.StringIO):
        return source.getvalue()
    with open(source, newline="", encoding="utf-8") as file:
        return file.read()


def read_csv_table(path: Path) -> tuple[str, list[str], list[list[str]]]:
    """Split a result CSV into its provenance line, header and rows."""
    lines = read_raw_text(path).splitlines()
    header = lines[1].split(",")
    return lines[0], header, [line.split(",") for line in lines[2:]]


def random_points(count: int, dimension: int, seed: int = 0, scale: float = 2.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-scale, scale, size=(count, dimension))
