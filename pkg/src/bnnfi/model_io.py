"""Binary model container and seeded model/input generators.

Layout of a model file (all multi-byte fields little-endian):

    magic   4 bytes  "BNNW"
    version u16      currently 1
    layers  u16      layer count
    per layer:
        in_features  u32
        out_features u32
        pe           u32
        simd         u32
        weights      ceil(out*in / 8) bytes, flat bit r*in+c stored LSB-first
        thresholds   out_features x i32 (signed)
    crc32   u32      zlib.crc32 over every preceding byte (poly 0xEDB88320)

The last layer is the output layer by construction. Any single-byte
corruption is caught by the CRC; size fields are validated against the
actual payload before the weights are touched.
"""

from __future__ import annotations

import random
import struct
import zlib

from .bnn import (
    BitMatrix,
    BitVector,
    BnnModel,
    NetworkTopology,
    ThresholdVector,
    topology_from_shapes,
)
from .errors import ParseError

MODEL_MAGIC = b"BNNW"
MODEL_VERSION = 1


def _pack_bits(flat_bits: int, nbits: int) -> bytes:
    return flat_bits.to_bytes((nbits + 7) // 8, "little") if nbits else b""


def _unpack_bits(data: bytes) -> int:
    return int.from_bytes(data, "little")


def write_model(model: BnnModel, path: str):
    buf = bytearray()
    buf += MODEL_MAGIC
    buf += struct.pack("<HH", MODEL_VERSION, len(model.topology.layers))
    for spec, w, t in zip(model.topology.layers, model.weights, model.thresholds):
        buf += struct.pack("<IIII", spec.in_features, spec.out_features, spec.pe, spec.simd)
        flat = 0
        for r, row in enumerate(w.row_bits):
            flat |= row << (r * w.cols)
        buf += _pack_bits(flat, w.rows * w.cols)
        buf += struct.pack(f"<{len(t)}i", *t.values)
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    with open(path, "wb") as f:
        f.write(bytes(buf))


def read_model(
    path: str, output_width_bits: int = 32, useful_lsb_bits: int = 6
) -> BnnModel:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12:
        raise ParseError(f"{path}: truncated header ({len(data)} bytes)")
    if data[:4] != MODEL_MAGIC:
        raise ParseError(f"{path}: bad magic {data[:4]!r}, expected {MODEL_MAGIC!r}")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    actual_crc = zlib.crc32(data[:-4])
    if stored_crc != actual_crc:
        raise ParseError(
            f"{path}: checksum mismatch (stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x})"
        )
    version, n_layers = struct.unpack_from("<HH", data, 4)
    if version != MODEL_VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    off = 8
    end = len(data) - 4
    features, pes, simds = [], [], []
    weight_blobs, threshold_lists = [], []
    for i in range(n_layers):
        if off + 16 > end:
            raise ParseError(f"{path}: layer {i} header truncated")
        in_f, out_f, pe, simd = struct.unpack_from("<IIII", data, off)
        off += 16
        w_bytes = (in_f * out_f + 7) // 8
        t_bytes = 4 * out_f
        if off + w_bytes + t_bytes > end:
            raise ParseError(f"{path}: layer {i} payload truncated")
        weight_blobs.append(data[off : off + w_bytes])
        off += w_bytes
        threshold_lists.append(list(struct.unpack_from(f"<{out_f}i", data, off)))
        off += t_bytes
        if i == 0:
            features.append(in_f)
        elif features[-1] != in_f:
            raise ParseError(
                f"{path}: layer {i} in_features {in_f} does not chain from "
                f"previous out_features {features[-1]}"
            )
        features.append(out_f)
        pes.append(pe)
        simds.append(simd)
    if off != end:
        raise ParseError(f"{path}: {end - off} unexpected trailing payload bytes")
    topology = topology_from_shapes(features, pes, simds, output_width_bits, useful_lsb_bits)
    weights, thresholds = [], []
    for spec, blob, tvals in zip(topology.layers, weight_blobs, threshold_lists):
        flat = _unpack_bits(blob)
        mask = (1 << spec.in_features) - 1
        rows = [
            (flat >> (r * spec.in_features)) & mask for r in range(spec.out_features)
        ]
        weights.append(BitMatrix(spec.out_features, spec.in_features, rows))
        thresholds.append(ThresholdVector(tvals))
    return BnnModel(topology, tuple(weights), tuple(thresholds))


def generate_model(topology: NetworkTopology, seed: int) -> BnnModel:
    """Seeded random model: uniform weight bits, thresholds near in_features/2.

    Mid-range thresholds keep hidden activations balanced, which makes fault
    propagation behave like a trained network rather than a saturated one.
    """
    rng = random.Random(seed)
    weights, thresholds = [], []
    for spec in topology.layers:
        weights.append(BitMatrix.random(spec.out_features, spec.in_features, rng))
        center = spec.in_features // 2
        spread = max(1, spec.in_features // 8)
        vals = [
            min(spec.in_features, max(0, center + rng.randint(-spread, spread)))
            for _ in range(spec.out_features)
        ]
        thresholds.append(ThresholdVector(vals))
    return BnnModel(topology, tuple(weights), tuple(thresholds))


def synthetic_pixels(seed: int, index: int = 0) -> list[int]:
    """Deterministic 784-pixel grayscale image, roughly half zero pixels."""
    rng = random.Random(1_000_003 * seed + index)
    return [0 if rng.random() < 0.5 else rng.randint(1, 255) for _ in range(784)]


def synthetic_input(topology: NetworkTopology, seed: int, index: int = 0) -> BitVector:
    """Deterministic binary input sized to the topology's first layer."""
    rng = random.Random(1_000_003 * seed + index)
    n = topology.in_features
    return BitVector(n, rng.getrandbits(n))
