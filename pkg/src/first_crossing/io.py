"""CSV artifacts, run manifests and ``key = value`` configuration files."""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SAMPLES_HEADER = ("path_index", "tau", "area", "min", "censored")
HISTOGRAM_HEADER = ("bin_left", "bin_right", "density")
LAPLACE_HEADER = ("lambda", "value", "label")
CURVE_HEADER = ("series", "xval", "yval")
SOLUTION_HEADER = ("x", "value")
CONVERGENCE_HEADER = ("h", "error", "order")
CLOSED_FORM_HEADER = ("quantity", "preset", "params", "value", "stderr", "provenance")


def fmt(value) -> str:
    """Serialise a cell: floats with 17 significant digits, None as ``n/a``."""
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))
    return path


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def manifest_path(output) -> Path:
    """Sidecar manifest of an output file: same basename, ``.manifest`` suffix."""
    output = Path(output)
    return output.with_suffix(".manifest")


def _manifest_value(value) -> str:
    # shortest round-trip repr keeps manifests readable and exact
    if isinstance(value, float) and math.isfinite(value):
        return repr(value)
    return fmt(value)


def write_manifest(output, entries: Mapping[str, object]) -> Path:
    """Write ``key = value`` lines next to ``output``."""
    path = manifest_path(output)
    lines = [f"{key} = {_manifest_value(value)}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` file; blank lines and ``#`` comments are skipped."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
