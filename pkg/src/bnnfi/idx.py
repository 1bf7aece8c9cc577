"""Reader for the IDX files MNIST ships in (big-endian, per the format spec)."""

from __future__ import annotations

import struct

import numpy as np

from .errors import ParseError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_u32(data: bytes, off: int, path: str, field: str) -> int:
    if off + 4 > len(data):
        raise ParseError(f"{path}: truncated while reading {field}")
    return struct.unpack_from(">I", data, off)[0]


def read_idx_images(path: str) -> np.ndarray:
    """Parse an IDX image file into a (count, rows, cols) uint8 array."""
    with open(path, "rb") as f:
        data = f.read()
    magic = _read_u32(data, 0, path, "magic")
    if magic != IMAGE_MAGIC:
        raise ParseError(
            f"{path}: image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )
    count = _read_u32(data, 4, path, "count")
    rows = _read_u32(data, 8, path, "rows")
    cols = _read_u32(data, 12, path, "cols")
    expected = 16 + count * rows * cols
    if len(data) != expected:
        raise ParseError(
            f"{path}: pixel payload is {len(data) - 16} bytes, "
            f"expected {count}x{rows}x{cols} = {count * rows * cols}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def read_idx_labels(path: str) -> np.ndarray:
    """Parse an IDX label file into a (count,) uint8 array."""
    with open(path, "rb") as f:
        data = f.read()
    magic = _read_u32(data, 0, path, "magic")
    if magic != LABEL_MAGIC:
        raise ParseError(
            f"{path}: label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )
    count = _read_u32(data, 4, path, "count")
    if len(data) != 8 + count:
        raise ParseError(
            f"{path}: label payload is {len(data) - 8} bytes, expected {count}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=8)


def read_idx(images_path: str, labels_path: str | None = None):
    """Load images and (optionally) labels, checking that the counts agree."""
    images = read_idx_images(images_path)
    if labels_path is None:
        return images, None
    labels = read_idx_labels(labels_path)
    if len(labels) != len(images):
        raise ParseError(
            f"count mismatch: {len(images)} images vs {len(labels)} labels"
        )
    return images, labels
