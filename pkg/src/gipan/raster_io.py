"""Raw planar rasters with a text sidecar header.

A raster ``scene.raw`` is stored as two files:

* ``scene.raw``: band-sequential samples, little-endian, no padding;
* ``scene.raw.hdr``: ``key = value`` lines giving ``height``, ``width``,
  ``bands``, ``dtype`` (``f32``, ``f64``, ``u8`` or ``u16``), ``layout``
  (always ``planar``) and ``byte_order`` (always ``little-endian``).

Lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .cube import RasterCube
from .errors import (MissingSidecarError, RangeError, RasterFormatError,
                     SizeMismatchError, UnknownDtypeError)

DTYPES = {
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
    "u8": np.dtype("u1"),
    "u16": np.dtype("<u2"),
}
HEADER_SUFFIX = ".hdr"


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + HEADER_SUFFIX)


def _parse_header(text: str, where) -> dict:
    fields = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise RasterFormatError(f"{where}:{lineno}: expected 'key = value', got {line!r}")
        fields[key.strip().lower()] = value.strip()
    return fields


def read_header(path) -> dict:
    """Parse and validate the sidecar of ``path``."""
    hdr = sidecar_path(path)
    try:
        text = hdr.read_text()
    except FileNotFoundError:
        raise MissingSidecarError(f"header sidecar {hdr} not found") from None
    fields = _parse_header(text, hdr)
    try:
        height, width, bands = (int(fields[k]) for k in ("height", "width", "bands"))
    except KeyError as exc:
        raise RasterFormatError(f"{hdr}: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise RasterFormatError(f"{hdr}: bad dimension ({exc})") from None
    if min(height, width, bands) < 1:
        raise RasterFormatError(f"{hdr}: dimensions must be positive")
    dtype = fields.get("dtype", "")
    if dtype not in DTYPES:
        raise UnknownDtypeError(
            f"{hdr}: unknown dtype {dtype!r}; expected one of {', '.join(DTYPES)}")
    if fields.get("layout", "planar") != "planar":
        raise RasterFormatError(f"{hdr}: only planar layout is supported")
    if fields.get("byte_order", "little-endian") != "little-endian":
        raise RasterFormatError(f"{hdr}: only little-endian payloads are supported")
    return {"height": height, "width": width, "bands": bands, "dtype": dtype}


def read_raster(path) -> RasterCube:
    """Load a raster as a float64 cube."""
    path = Path(path)
    meta = read_header(path)
    dt = DTYPES[meta["dtype"]]
    count = meta["bands"] * meta["height"] * meta["width"]
    expected = count * dt.itemsize
    try:
        payload = path.read_bytes()
    except FileNotFoundError:
        raise RasterFormatError(f"payload {path} not found") from None
    if len(payload) != expected:
        raise SizeMismatchError(
            f"{path}: payload has {len(payload)} bytes, header implies {expected}")
    samples = np.frombuffer(payload, dtype=dt, count=count)
    data = samples.astype(np.float64).reshape(meta["bands"], meta["height"], meta["width"])
    return RasterCube(data, copy=False)


def _encode(cube: RasterCube, dtype: str, clamp: bool) -> np.ndarray:
    dt = DTYPES[dtype]
    data = cube.data
    if dt.kind == "u":
        data = np.rint(data)
        info = np.iinfo(dt)
        if clamp:
            data = np.clip(data, info.min, info.max)
        elif data.min() < info.min or data.max() > info.max:
            raise RangeError(
                f"values span [{data.min()}, {data.max()}], outside {dtype} "
                f"range [{info.min}, {info.max}]; pass clamp=True to saturate")
    elif dt == np.dtype("<f4"):
        limit = np.finfo(np.float32).max
        if clamp:
            data = np.clip(data, -limit, limit)
        elif np.abs(data).max() > limit:
            raise RangeError("values overflow float32")
    return np.ascontiguousarray(data, dtype=dt)


def _atomic_write(target: Path, payload: bytes):
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_raster(cube: RasterCube, path, dtype: str = "f64", clamp: bool = False) -> Path:
    """Write ``cube`` as payload plus sidecar; each file is replaced atomically.

    Integer targets are rounded half-to-even before the range check.
    """
    if dtype not in DTYPES:
        raise UnknownDtypeError(f"unknown dtype {dtype!r}; expected one of {', '.join(DTYPES)}")
    path = Path(path)
    payload = _encode(cube, dtype, clamp).tobytes()
    header = (
        "# planar raster\n"
        f"height = {cube.height}\n"
        f"width = {cube.width}\n"
        f"bands = {cube.bands}\n"
        f"dtype = {dtype}\n"
        "layout = planar\n"
        "byte_order = little-endian\n"
    )
    _atomic_write(path, payload)
    _atomic_write(sidecar_path(path), header.encode("ascii"))
    return path
