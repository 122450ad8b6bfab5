"""Bit-exact binary layouts: PGM (P5), PFM, Middlebury .flo and the SPCT trajectory file.

All multi-byte values are little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..physics.world import Trajectory

SPCT_MAGIC = b"SPCT"
SPCT_VERSION = 1
SPCT_HEADER = struct.Struct("<4sIIIf")  # magic, version, body_count, frame_count, dt
SPCT_RECORD_FLOATS = 13
SPCT_RECORD_BYTES = 4 * SPCT_RECORD_FLOATS
FLO_MAGIC = 202021.25


class DatasetError(ValueError):
    """Base class for on-disk format and schema problems."""


class MagicError(DatasetError):
    pass


class VersionError(DatasetError):
    pass


class SizeMismatchError(DatasetError):
    pass


class SchemaError(DatasetError):
    pass


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def _write(path, data: bytes):
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


# -- SPCT ------------------------------------------------------------------

def spct_size(body_count: int, frame_count: int) -> int:
    return SPCT_HEADER.size + frame_count * body_count * SPCT_RECORD_BYTES


def encode_trajectory(traj: Trajectory) -> bytes:
    f, b = traj.frame_count, traj.body_count
    rec = np.concatenate([traj.positions, traj.orientations, traj.linear_velocities,
                          traj.angular_velocities], axis=2)
    body = rec.astype("<f4").tobytes()
    return SPCT_HEADER.pack(SPCT_MAGIC, SPCT_VERSION, b, f, np.float32(traj.dt)) + body


def decode_trajectory(data: bytes, source: str = "trajectory") -> Trajectory:
    if len(data) < SPCT_HEADER.size:
        raise SizeMismatchError(f"{source}: {len(data)} bytes is shorter than the "
                                f"{SPCT_HEADER.size}-byte header")
    magic, version, b, f, dt = SPCT_HEADER.unpack_from(data)
    if magic != SPCT_MAGIC:
        raise MagicError(f"{source}: bad magic {magic!r}, expected {SPCT_MAGIC!r}")
    if version != SPCT_VERSION:
        raise VersionError(f"{source}: unsupported SPCT version {version}, expected {SPCT_VERSION}")
    want = spct_size(b, f)
    if len(data) != want:
        raise SizeMismatchError(f"{source}: size {len(data)} bytes, expected {want} "
                                f"for {f} frames x {b} bodies")
    rec = np.frombuffer(data, dtype="<f4", offset=SPCT_HEADER.size).reshape(f, b, SPCT_RECORD_FLOATS)
    rec = rec.astype(np.float64)
    return Trajectory(rec[..., 0:3].copy(), rec[..., 3:7].copy(), rec[..., 7:10].copy(),
                      rec[..., 10:13].copy(), [[] for _ in range(f)], float(dt))


def write_trajectory(path, traj: Trajectory):
    _write(path, encode_trajectory(traj))


def read_trajectory(path) -> Trajectory:
    return decode_trajectory(_read(path), str(path))


def first_divergent_frame(a: bytes, b: bytes, body_count: int) -> int | None:
    """Frame index of the first differing byte between two SPCT files (-1 for the header)."""
    n = min(len(a), len(b))
    diff = np.flatnonzero(np.frombuffer(a[:n], np.uint8) != np.frombuffer(b[:n], np.uint8))
    if len(diff) == 0:
        if len(a) == len(b):
            return None
        off = n
    else:
        off = int(diff[0])
    if off < SPCT_HEADER.size:
        return -1
    return (off - SPCT_HEADER.size) // (body_count * SPCT_RECORD_BYTES)


# -- PGM -------------------------------------------------------------------

def encode_pgm(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("PGM images must be 2-D uint8")
    h, w = image.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + image.tobytes()


def _header_tokens(data: bytes, count: int, source: str):
    """Whitespace-separated header tokens and the offset of the binary payload."""
    tokens = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise SizeMismatchError(f"{source}: truncated header")
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1  # a single whitespace byte ends the header


def decode_pgm(data: bytes, source: str = "pgm") -> np.ndarray:
    tokens, off = _header_tokens(data, 4, source)
    if tokens[0] != b"P5":
        raise MagicError(f"{source}: bad magic {tokens[0]!r}, expected b'P5'")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise SchemaError(f"{source}: maxval {maxval}, expected 255")
    if len(data) - off != w * h:
        raise SizeMismatchError(f"{source}: {len(data) - off} pixel bytes, expected {w * h}")
    return np.frombuffer(data, np.uint8, offset=off).reshape(h, w).copy()


def write_pgm(path, image):
    _write(path, encode_pgm(image))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(_read(path), str(path))


# -- PFM -------------------------------------------------------------------

def encode_pfm(image: np.ndarray) -> bytes:
    """'Pf' for (H, W) single-channel, 'PF' for (H, W, 3). Scale -1 (little-endian)."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 2:
        tag = "Pf"
    elif image.ndim == 3 and image.shape[2] == 3:
        tag = "PF"
    else:
        raise ValueError("PFM images must be (H, W) or (H, W, 3)")
    h, w = image.shape[:2]
    header = f"{tag}\n{w} {h}\n-1.0\n".encode("ascii")
    return header + np.ascontiguousarray(image[::-1]).astype("<f4").tobytes()


def decode_pfm(data: bytes, source: str = "pfm") -> np.ndarray:
    tokens, off = _header_tokens(data, 4, source)
    tag = tokens[0]
    if tag not in (b"Pf", b"PF"):
        raise MagicError(f"{source}: bad magic {tag!r}, expected b'Pf' or b'PF'")
    w, h = int(tokens[1]), int(tokens[2])
    scale = float(tokens[3])
    if scale == 0.0:
        raise SchemaError(f"{source}: zero scale")
    channels = 3 if tag == b"PF" else 1
    want = w * h * channels * 4
    if len(data) - off != want:
        raise SizeMismatchError(f"{source}: {len(data) - off} payload bytes, expected {want}")
    dtype = "<f4" if scale < 0 else ">f4"
    img = np.frombuffer(data, dtype, offset=off).astype(np.float32)
    img = img.reshape(h, w, 3) if channels == 3 else img.reshape(h, w)
    return img[::-1].copy()


def write_pfm(path, image):
    _write(path, encode_pfm(image))


def read_pfm(path) -> np.ndarray:
    return decode_pfm(_read(path), str(path))


# -- Middlebury .flo ---------------------------------------------------------

def encode_flo(flow: np.ndarray) -> bytes:
    flow = np.asarray(flow, dtype=np.float32)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError("flow must be (H, W, 2)")
    h, w = flow.shape[:2]
    return struct.pack("<fii", FLO_MAGIC, w, h) + flow.astype("<f4").tobytes()


def decode_flo(data: bytes, source: str = "flo") -> np.ndarray:
    if len(data) < 12:
        raise SizeMismatchError(f"{source}: shorter than the 12-byte header")
    magic, w, h = struct.unpack_from("<fii", data)
    if magic != FLO_MAGIC:
        raise MagicError(f"{source}: bad magic {magic!r}, expected {FLO_MAGIC}")
    if w <= 0 or h <= 0 or len(data) != 12 + 8 * w * h:
        raise SizeMismatchError(f"{source}: size {len(data)} inconsistent with {w}x{h}")
    return np.frombuffer(data, "<f4", offset=12).reshape(h, w, 2).astype(np.float32)


def write_flo(path, flow):
    _write(path, encode_flo(flow))


def read_flo(path) -> np.ndarray:
    return decode_flo(_read(path), str(path))
