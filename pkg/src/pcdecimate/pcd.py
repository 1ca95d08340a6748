"""Read and write PCD v0.7 files (ASCII and little-endian binary).

Only the x, y, z fields are loaded; they must be 4-byte floats. Any other
fields are skipped. Files are always written with just x y z.
"""

import os
import warnings

import numpy as np

from .cloud import as_cloud
from .errors import (
    PcdBodyError,
    PcdHeaderError,
    PcdTruncatedError,
    PcdUnsupportedError,
)

HEADER_KEYS = ("VERSION", "FIELDS", "SIZE", "TYPE", "COUNT", "WIDTH", "HEIGHT", "VIEWPOINT", "POINTS", "DATA")
_REQUIRED = ("FIELDS", "SIZE", "TYPE", "WIDTH", "HEIGHT", "DATA")
_KINDS = {"F": "f", "U": "u", "I": "i"}


class NonFinitePointsWarning(UserWarning):
    """Points with NaN/Inf coordinates were dropped while reading."""

    def __init__(self, count, path):
        self.count = count
        self.path = path
        super().__init__(f"dropped {count} non-finite point(s) from {path}")


def _parse_header(buf):
    """Return ``(header dict, body offset)``; values are the raw token lists."""
    header = {}
    pos = 0
    while True:
        end = buf.find(b"\n", pos)
        if end < 0:
            raise PcdHeaderError("header ends before a DATA line", pos)
        raw = buf[pos:end]
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise PcdHeaderError("non-ASCII bytes in header", pos) from None
        if line and not line.startswith("#"):
            key, *values = line.split()
            key = key.upper()
            if key not in HEADER_KEYS:
                raise PcdHeaderError(f"unknown header key {key!r}", pos)
            if not values:
                raise PcdHeaderError(f"header key {key} has no value", pos)
            header[key] = (values, pos)
            if key == "DATA":
                return header, end + 1
        pos = end + 1


def _ints(header, key, default=None):
    if key not in header:
        return default
    values, at = header[key]
    try:
        return [int(v) for v in values]
    except ValueError:
        raise PcdHeaderError(f"{key} must be integers, got {' '.join(values)}", at) from None


def _layout(header):
    for key in _REQUIRED:
        if key not in header:
            raise PcdHeaderError(f"missing {key} header line", header["DATA"][1])
    fields, at = header["FIELDS"]
    sizes = _ints(header, "SIZE")
    types = [t.upper() for t in header["TYPE"][0]]
    counts = _ints(header, "COUNT", [1] * len(fields))
    if not len(fields) == len(sizes) == len(types) == len(counts):
        raise PcdHeaderError("FIELDS, SIZE, TYPE and COUNT lengths differ", at)
    (width,) = _ints(header, "WIDTH")
    (height,) = _ints(header, "HEIGHT")
    points = _ints(header, "POINTS", [width * height])[0]
    if width < 0 or height < 0 or points != width * height:
        raise PcdHeaderError(f"POINTS {points} does not match WIDTH*HEIGHT {width * height}", header["WIDTH"][1])
    for axis in "xyz":
        if axis not in fields:
            raise PcdUnsupportedError(f"no {axis!r} field", at)
        i = fields.index(axis)
        if (types[i], sizes[i], counts[i]) != ("F", 4, 1):
            raise PcdUnsupportedError(
                f"field {axis!r} is {types[i]}{sizes[i]}x{counts[i]}, only F4x1 is supported",
                header["TYPE"][1],
            )
    columns = []
    for name, size, kind, count in zip(fields, sizes, types, counts):
        if kind not in _KINDS or size not in (1, 2, 4, 8) or (kind == "F" and size not in (4, 8)):
            raise PcdUnsupportedError(f"unsupported field type {kind}{size} for {name!r}", header["TYPE"][1])
        columns.append((name, size, kind, count))
    mode = header["DATA"][0][0].lower()
    if mode not in ("ascii", "binary"):
        raise PcdUnsupportedError(f"DATA {mode} is not supported", header["DATA"][1])
    return columns, points, mode


def read_pcd(path):
    """Load the xyz coordinates of a PCD file.

    Points with a non-finite coordinate are dropped and reported through a
    single :class:`NonFinitePointsWarning` carrying the count.

    Raises:
        PcdHeaderError: the header is malformed.
        PcdUnsupportedError: x/y/z are not 4-byte floats, or DATA is compressed.
        PcdTruncatedError: the body holds fewer points than declared.
        PcdBodyError: an ASCII value does not parse.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    header, body_at = _parse_header(buf)
    columns, points, mode = _layout(header)
    names = [c[0] for c in columns]
    if mode == "binary":
        dtype = np.dtype(
            [
                (f"{name}_{i}", f"<{_KINDS[kind]}{size}", (count,) if count > 1 else ())
                for i, (name, size, kind, count) in enumerate(columns)
            ]
        )
        need = points * dtype.itemsize
        have = len(buf) - body_at
        if have < need:
            raise PcdTruncatedError(f"binary body has {have} bytes, {need} expected", len(buf))
        rec = np.frombuffer(buf, dtype=dtype, count=points, offset=body_at)
        xyz = np.empty((points, 3), dtype=np.float32)
        for a, axis in enumerate("xyz"):
            i = names.index(axis)
            xyz[:, a] = rec[f"{axis}_{i}"]
    else:
        xyz = _read_ascii_body(buf, body_at, columns, points)
    finite = np.isfinite(xyz).all(axis=1)
    dropped = int(len(xyz) - finite.sum())
    if dropped:
        warnings.warn(NonFinitePointsWarning(dropped, os.fspath(path)), stacklevel=2)
        xyz = xyz[finite]
    return as_cloud(xyz)


def _read_ascii_body(buf, body_at, columns, points):
    offsets = np.cumsum([0] + [c[3] for c in columns])
    ncols = int(offsets[-1])
    picks = [int(offsets[[c[0] for c in columns].index(axis)]) for axis in "xyz"]
    xyz = np.empty((points, 3), dtype=np.float32)
    pos = body_at
    row = 0
    while row < points:
        if pos >= len(buf):
            raise PcdTruncatedError(f"ASCII body ends after {row} of {points} points", pos)
        end = buf.find(b"\n", pos)
        if end < 0:
            end = len(buf)
        tokens = buf[pos:end].split()
        if tokens:
            if len(tokens) < ncols:
                raise PcdTruncatedError(f"row {row} has {len(tokens)} of {ncols} values", pos)
            try:
                xyz[row] = [float(tokens[p]) for p in picks]
            except ValueError:
                raise PcdBodyError(f"row {row} holds a non-numeric value", pos) from None
            row += 1
        pos = end + 1
    return xyz


def format_header(n_points, mode):
    return (
        "# .PCD v0.7 - Point Cloud Data file format\n"
        "VERSION 0.7\n"
        "FIELDS x y z\n"
        "SIZE 4 4 4\n"
        "TYPE F F F\n"
        "COUNT 1 1 1\n"
        f"WIDTH {n_points}\n"
        "HEIGHT 1\n"
        "VIEWPOINT 0 0 0 1 0 0 0\n"
        f"POINTS {n_points}\n"
        f"DATA {mode}\n"
    )


def write_pcd(cloud, path, mode="binary"):
    """Write ``cloud`` as a PCD v0.7 file with fields x y z.

    ASCII values carry 9 significant digits, enough to restore every float32.
    """
    if mode not in ("ascii", "binary"):
        raise ValueError(f"mode must be 'ascii' or 'binary', got {mode!r}")
    cloud = as_cloud(cloud)
    with open(path, "wb") as fh:
        fh.write(format_header(len(cloud), mode).encode("ascii"))
        if mode == "binary":
            fh.write(cloud.astype("<f4", copy=False).tobytes())
        elif len(cloud):
            np.savetxt(fh, cloud, fmt="%.9g", delimiter=" ")
