"""Text and image formats: phase maps, 16-bit PGM, CSV, key-value files."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from cpbtem.imaging import SpecimenPhaseMap

PHASEMAP_MAGIC = "phasemap"


class FormatError(ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def write_phasemap(path, spec: SpecimenPhaseMap) -> None:
    lines = [f"{PHASEMAP_MAGIC} {spec.width} {spec.height} {_fmt(spec.pixel_size)}"]
    lines += [" ".join(_fmt(v) for v in row) for row in spec.theta]
    Path(path).write_text("\n".join(lines) + "\n")


def read_phasemap(path) -> SpecimenPhaseMap:
    tokens = Path(path).read_text().split()
    if len(tokens) < 4 or tokens[0] != PHASEMAP_MAGIC:
        raise FormatError(f"{path}: missing 'phasemap <width> <height> <pixel_size_nm>' header")
    try:
        w, h, ps = int(tokens[1]), int(tokens[2]), float(tokens[3])
        values = np.array([float(t) for t in tokens[4:]])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if w < 1 or h < 1:
        raise FormatError(f"{path}: invalid dimensions {w}x{h}")
    if values.size != w * h:
        raise FormatError(f"{path}: expected {w * h} values, found {values.size}")
    try:
        return SpecimenPhaseMap(values.reshape(h, w), ps)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_csv(path, values) -> None:
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    Path(path).write_text("".join(",".join(_fmt(v) for v in row) + "\n" for row in arr))


def read_csv(path) -> np.ndarray:
    rows = [line.split(",") for line in Path(path).read_text().splitlines() if line.strip()]
    return np.array([[float(v) for v in row] for row in rows])


def write_pgm(path, values) -> tuple[float, float]:
    """16-bit binary PGM with linear min/max scaling; NaN maps to 0.

    Writes the scaling bounds to ``<path>.txt`` and returns them.
    """
    arr = np.asarray(values, dtype=float)
    finite = arr[np.isfinite(arr)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 0.0
    span = hi - lo
    if span > 0:
        scaled = np.rint((np.nan_to_num(arr, nan=lo) - lo) / span * 65535.0)
    else:
        scaled = np.zeros_like(arr)
    data = np.clip(scaled, 0, 65535).astype(">u2")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())
    write_kv(str(path) + ".txt", [("scaling", "linear", ""), ("min", lo, ""), ("max", hi, "")])
    return lo, hi


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[4], dtype=dtype, count=w * h).reshape(h, w).astype(float)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def write_kv(path, items) -> None:
    """Lines of ``name = value [unit]``; ``items`` is an iterable of (name, value, unit)."""
    lines = []
    for name, value, unit in items:
        text = f"{name} = {format_value(value)}"
        if unit:
            text += f" {unit}"
        lines.append(text)
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path) -> dict[str, str]:
    """Parse ``name = value`` lines, ignoring blanks and ``#`` comments."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'name = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
