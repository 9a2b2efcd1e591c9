"""Plain-text symbol series files.

One integer symbol per line. Lines starting with ``#`` are comments; those of
the form ``# key: value`` are headers (``alphabet`` is checked against the data).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .blocks import SeriesError, SymbolSeries


def parse_series(text: str, source: str = "<series>") -> tuple[SymbolSeries, dict[str, str]]:
    headers: dict[str, str] = {}
    values: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if ":" in line:
                key, val = line[1:].split(":", 1)
                headers[key.strip()] = val.strip()
            continue
        try:
            v = int(line)
        except ValueError:
            raise SeriesError(f"{source}:{lineno}: not an integer symbol: {line!r}") from None
        if v < 0:
            raise SeriesError(f"{source}:{lineno}: negative symbol {v}")
        values.append(v)
    if not values:
        raise SeriesError(f"{source}: no symbols")
    arr = np.array(values, dtype=np.int64)
    if "alphabet" in headers:
        try:
            card = int(headers["alphabet"])
        except ValueError:
            raise SeriesError(f"{source}: bad alphabet header {headers['alphabet']!r}") from None
        if arr.max() >= card:
            bad = int(np.argmax(arr >= card))
            raise SeriesError(f"{source}: symbol {arr[bad]} at position {bad} exceeds alphabet size {card}")
    else:
        card = int(arr.max()) + 1
    return SymbolSeries(arr, card), headers


def read_series(path) -> tuple[SymbolSeries, dict[str, str]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SeriesError(f"{path}: {exc.strerror}") from None
    return parse_series(text, str(path))


def format_series(values, headers: dict[str, object] | None = None) -> str:
    lines = [f"# {k}: {v}" for k, v in (headers or {}).items()]
    lines.extend(str(int(v)) for v in np.asarray(values).ravel())
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_series(path, values, headers: dict[str, object] | None = None) -> None:
    atomic_write(path, format_series(values, headers))
