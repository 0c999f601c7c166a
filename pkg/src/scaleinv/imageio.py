"""Raw / graymap image readers and the log-contrast transform."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, FormatError, InputError

# van Hateren .iml/.imc geometry
DEFAULT_WIDTH = 1536
DEFAULT_HEIGHT = 1024

_BYTE_ORDERS = {"big": ">u2", "little": "<u2"}
ZERO_POLICIES = ("clamp_to_min_positive", "add_one")


@dataclass(frozen=True)
class IntensityImage:
    """Nonnegative luminance values on a ``height x width`` grid (row-major)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InputError(f"expected a 2D grid, got shape {data.shape}")
        if data.size and data.min() < 0:
            raise InputError("intensity values must be nonnegative")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ContrastImage:
    """Log-contrast field ``ln(I / i0)`` with zero mean over the image."""

    data: np.ndarray
    i0: float

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def read_raw_u16(path, width=DEFAULT_WIDTH, height=DEFAULT_HEIGHT, byte_order="big") -> IntensityImage:
    """Read a headerless row-major 16-bit image.

    The van Hateren linearized (``.iml``) and calibrated (``.imc``) files use this
    layout with 1536x1024 pixels, big-endian.
    """
    if byte_order not in _BYTE_ORDERS:
        raise InputError(f"byte_order must be one of {sorted(_BYTE_ORDERS)}, got {byte_order!r}")
    path = Path(path)
    raw = path.read_bytes()
    expected = 2 * width * height
    if len(raw) != expected:
        raise InputError(
            f"{path}: file has {len(raw)} bytes, expected {expected} for {width}x{height} u16"
        )
    values = np.frombuffer(raw, dtype=_BYTE_ORDERS[byte_order]).reshape(height, width)
    return IntensityImage(values.astype(np.float64))


def write_raw_u16(path, img: IntensityImage, byte_order="big") -> None:
    data = img.data
    if data.max(initial=0) > 65535 or not np.array_equal(data, np.round(data)):
        raise InputError("raw u16 output requires integer values in [0, 65535]")
    Path(path).write_bytes(data.astype(_BYTE_ORDERS[byte_order]).tobytes())


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(buf: bytes, count: int):
    tokens = []
    pos = 0
    for _ in range(count):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise FormatError("truncated graymap header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_pgm(path) -> IntensityImage:
    """Read an ASCII (P2) or binary (P5) portable graymap."""
    buf = Path(path).read_bytes()
    tokens, pos = _header_tokens(buf, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"unsupported graymap magic {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"non-integer graymap header field: {exc}") from None
    if width < 1 or height < 1:
        raise FormatError(f"invalid graymap dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise FormatError(f"graymap maxval {maxval} outside [1, 65535]")
    n = width * height

    if magic == b"P2":
        fields = buf[pos:].split()
        if len(fields) < n:
            raise FormatError(f"truncated P2 payload: {len(fields)} of {n} values")
        try:
            values = np.array([int(f) for f in fields[:n]], dtype=np.float64)
        except ValueError:
            raise FormatError("non-integer value in P2 payload") from None
    else:
        # exactly one whitespace byte separates the header from binary data
        payload = buf[pos + 1:]
        dtype = ">u2" if maxval > 255 else "u1"
        nbytes = n * np.dtype(dtype).itemsize
        if len(payload) < nbytes:
            raise FormatError(f"truncated P5 payload: {len(payload)} of {nbytes} bytes")
        values = np.frombuffer(payload[:nbytes], dtype=dtype).astype(np.float64)
    if values.max(initial=0) > maxval:
        raise FormatError("graymap value exceeds maxval")
    return IntensityImage(values.reshape(height, width))


def write_pgm(path, data, maxval: int | None = None, binary: bool = True) -> None:
    """Write integer data as a graymap; ``maxval`` defaults to the data maximum (at least 1)."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise InputError("graymap output requires a 2D array")
    if not np.array_equal(arr, np.round(arr)) or arr.min(initial=0) < 0:
        raise InputError("graymap output requires nonnegative integer values")
    if maxval is None:
        maxval = max(int(arr.max(initial=0)), 1)
    if not 0 < maxval <= 65535 or arr.max(initial=0) > maxval:
        raise InputError(f"invalid maxval {maxval} for data")
    height, width = arr.shape
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
        Path(path).write_bytes(header + arr.astype(dtype).tobytes())
    else:
        lines = [f"P2\n{width} {height}\n{maxval}"]
        lines += [" ".join(str(int(v)) for v in row) for row in arr]
        Path(path).write_text("\n".join(lines) + "\n")


def read_image(path, width=DEFAULT_WIDTH, height=DEFAULT_HEIGHT, byte_order="big") -> IntensityImage:
    """Dispatch on extension: graymaps for ``.pgm``, raw u16 otherwise."""
    if os.fspath(path).lower().endswith(".pgm"):
        return read_pgm(path)
    return read_raw_u16(path, width, height, byte_order)


def to_contrast(img: IntensityImage, zero_policy: str = "clamp_to_min_positive") -> ContrastImage:
    """Log-contrast ``ln(I / i0)`` with ``i0`` the geometric mean, so the field sums to zero."""
    data = img.data
    if zero_policy == "clamp_to_min_positive":
        positive = data[data > 0]
        if positive.size == 0:
            raise DegenerateInputError("image has no positive intensity")
        data = np.where(data > 0, data, positive.min())
    elif zero_policy == "add_one":
        if not np.any(data > 0):
            raise DegenerateInputError("image has no positive intensity")
        data = data + 1.0
    else:
        raise InputError(f"zero_policy must be one of {ZERO_POLICIES}, got {zero_policy!r}")

    logs = np.log(data)
    log_i0 = logs.mean()
    phi = logs - log_i0
    # second pass removes the rounding residue of the first mean
    phi -= phi.mean()
    return ContrastImage(phi, float(np.exp(log_i0)))
