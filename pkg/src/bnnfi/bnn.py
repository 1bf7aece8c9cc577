"""Functional ("golden") model of a binarized fully-connected network.

Weights and activations are single bits with the encoding 1 -> +1, 0 -> -1.
A neuron's binary dot product is computed as an XNOR followed by a popcount:
the popcount of the XNOR of two n-bit vectors counts the positions where the
vectors agree, and relates to the +/-1 inner product by

    signed_dot = 2 * agreements - n

Hidden neurons fire when the agreement count reaches their integer threshold
(match_count >= T). The output layer skips binarization and exposes the raw
agreement counts as integer class scores, each held in a fixed-width output
register image (32 bits by default, of which only the low 6 carry information
for sane network sizes).

Everything in this module is a pure function over immutable values, so models
and inputs can be shared freely across parallel fault-injection workers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, ContractError


def _mask(nbits: int) -> int:
    return (1 << nbits) - 1


class BitVector:
    """Immutable vector of bits packed into a single Python int.

    Bit i of the vector is ``(bits >> i) & 1``; bits at positions >= len are
    guaranteed zero in storage.
    """

    __slots__ = ("len", "bits")

    def __init__(self, length: int, bits: int = 0):
        if length < 0:
            raise ContractError(f"bit vector length must be >= 0, got {length}")
        self.len = length
        self.bits = bits & _mask(length)

    @classmethod
    def from_bits(cls, bit_iterable) -> "BitVector":
        bits = 0
        n = 0
        for b in bit_iterable:
            if b not in (0, 1):
                raise ContractError(f"bit values must be 0 or 1, got {b!r}")
            bits |= b << n
            n += 1
        return cls(n, bits)

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        """Parse "1011" with the first character at bit index 0."""
        return cls.from_bits(int(c) for c in s)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.len:
            raise ContractError(f"bit index {i} out of range for length {self.len}")
        return (self.bits >> i) & 1

    def with_flipped(self, i: int) -> "BitVector":
        if not 0 <= i < self.len:
            raise ContractError(f"bit index {i} out of range for length {self.len}")
        return BitVector(self.len, self.bits ^ (1 << i))

    def to_bits(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(self.len)]

    def __eq__(self, other):
        return (
            isinstance(other, BitVector)
            and self.len == other.len
            and self.bits == other.bits
        )

    def __hash__(self):
        return hash((self.len, self.bits))

    def __len__(self):
        return self.len

    def __repr__(self):
        return f"BitVector({self.len}, 0b{self.bits:0{max(self.len, 1)}b})"


class BitMatrix:
    """Immutable rows x cols bit matrix, one packed int per row.

    Bit (r, c) is the weight of synapse c into neuron r; the flat bit index
    r * cols + c enumerates all weight bits.
    """

    __slots__ = ("rows", "cols", "row_bits")

    def __init__(self, rows: int, cols: int, row_bits: list[int]):
        if rows < 0 or cols < 0:
            raise ContractError("matrix dimensions must be >= 0")
        if len(row_bits) != rows:
            raise ContractError(f"expected {rows} rows, got {len(row_bits)}")
        m = _mask(cols)
        self.rows = rows
        self.cols = cols
        self.row_bits = [r & m for r in row_bits]

    @classmethod
    def from_rows(cls, rows_of_bits) -> "BitMatrix":
        packed = []
        cols = None
        for row in rows_of_bits:
            v = BitVector.from_bits(row)
            if cols is None:
                cols = v.len
            elif v.len != cols:
                raise ContractError("ragged rows in bit matrix")
            packed.append(v.bits)
        return cls(len(packed), cols or 0, packed)

    @classmethod
    def random(cls, rows: int, cols: int, rng) -> "BitMatrix":
        m = _mask(cols)
        return cls(rows, cols, [rng.getrandbits(cols) & m if cols else 0 for _ in range(rows)])

    def row(self, r: int) -> BitVector:
        return BitVector(self.cols, self.row_bits[r])

    def bit(self, r: int, c: int) -> int:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise ContractError(f"bit ({r},{c}) out of range for {self.rows}x{self.cols}")
        return (self.row_bits[r] >> c) & 1

    @property
    def bit_count(self) -> int:
        return self.rows * self.cols

    def with_flipped_flat(self, flat_index: int) -> "BitMatrix":
        """Return a copy with the weight bit at flat index r*cols+c inverted."""
        if not 0 <= flat_index < self.bit_count:
            raise ContractError(f"flat bit index {flat_index} out of range")
        r, c = divmod(flat_index, self.cols)
        new_rows = list(self.row_bits)
        new_rows[r] ^= 1 << c
        return BitMatrix(self.rows, self.cols, new_rows)

    def __eq__(self, other):
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.row_bits == other.row_bits
        )

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols})"


class ThresholdVector:
    """Immutable per-neuron integer activation thresholds.

    Values from trained models lie in [0, in_features], but arbitrary signed
    integers are accepted so fault studies can push thresholds out of range.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = tuple(int(v) for v in values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __eq__(self, other):
        return isinstance(other, ThresholdVector) and self.values == other.values

    def with_flipped(self, neuron: int, bit: int, width: int) -> "ThresholdVector":
        """Flip one bit of a threshold's width-bit two's-complement image."""
        if not 0 <= neuron < len(self.values):
            raise ContractError(f"neuron {neuron} out of range")
        if not 0 <= bit < width:
            raise ContractError(f"bit {bit} out of range for width {width}")
        img = self.values[neuron] & _mask(width)
        img ^= 1 << bit
        if img >= 1 << (width - 1):
            img -= 1 << width
        vals = list(self.values)
        vals[neuron] = img
        return ThresholdVector(vals)

    def __repr__(self):
        return f"ThresholdVector({list(self.values)})"


@dataclass(frozen=True)
class LayerSpec:
    """Static shape and folding factors of one fully-connected layer."""

    layer_id: int
    in_features: int
    out_features: int
    pe: int
    simd: int
    is_output: bool = False

    def __post_init__(self):
        if min(self.in_features, self.out_features, self.pe, self.simd) < 1:
            raise ConfigError(
                f"layer {self.layer_id}: all shape parameters must be >= 1"
            )
        if self.out_features % self.pe:
            raise ConfigError(
                f"layer {self.layer_id}: pe={self.pe} does not divide "
                f"out_features={self.out_features}"
            )
        if self.in_features % self.simd:
            raise ConfigError(
                f"layer {self.layer_id}: simd={self.simd} does not divide "
                f"in_features={self.in_features}"
            )

    @property
    def neuron_folds(self) -> int:
        return self.out_features // self.pe

    @property
    def synapse_folds(self) -> int:
        return self.in_features // self.simd

    @property
    def accumulator_width(self) -> int:
        # enough for counts up to in_features, plus one headroom bit
        return max(1, (self.in_features - 1).bit_length()) + 1


@dataclass(frozen=True)
class NetworkTopology:
    """Ordered layer chain plus output register geometry."""

    layers: tuple[LayerSpec, ...]
    output_width_bits: int = 32
    useful_lsb_bits: int = 6

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("topology must contain at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_features != b.in_features:
                raise ConfigError(
                    f"layer {a.layer_id} out_features={a.out_features} does not "
                    f"feed layer {b.layer_id} in_features={b.in_features}"
                )
        for lay in self.layers[:-1]:
            if lay.is_output:
                raise ConfigError("only the last layer may be the output layer")
        if not self.layers[-1].is_output:
            raise ConfigError("the last layer must be marked is_output")
        if self.useful_lsb_bits > self.output_width_bits:
            raise ConfigError("useful_lsb_bits must not exceed output_width_bits")

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_features

    @property
    def in_features(self) -> int:
        return self.layers[0].in_features


def topology_from_shapes(
    features: list[int],
    pe: list[int],
    simd: list[int],
    output_width_bits: int = 32,
    useful_lsb_bits: int = 6,
) -> NetworkTopology:
    """Build a topology from a feature chain (e.g. [784, 256, ..., 10])."""
    if len(features) < 2:
        raise ConfigError("need at least an input and an output feature count")
    n_layers = len(features) - 1
    if len(pe) != n_layers or len(simd) != n_layers:
        raise ConfigError(f"need {n_layers} pe and simd values")
    layers = [
        LayerSpec(
            layer_id=i,
            in_features=features[i],
            out_features=features[i + 1],
            pe=pe[i],
            simd=simd[i],
            is_output=(i == n_layers - 1),
        )
        for i in range(n_layers)
    ]
    return NetworkTopology(tuple(layers), output_width_bits, useful_lsb_bits)


REFERENCE_FEATURES = [784, 256, 256, 256, 10]
REFERENCE_PE = [16, 16, 16, 10]
REFERENCE_SIMD = [16, 16, 16, 16]


def reference_topology() -> NetworkTopology:
    """Default MNIST-sized topology: 784-256-256-256-10, 16 PE x 16 SIMD hidden.

    Only the first layer's 16x16 folding is known for certain for this class
    of accelerator; the remaining widths and the output folding (10 PE, 16
    SIMD) are this package's documented defaults and are fully overridable.
    """
    return topology_from_shapes(REFERENCE_FEATURES, REFERENCE_PE, REFERENCE_SIMD)


@dataclass(frozen=True)
class BnnModel:
    """A topology with its binary weights and integer thresholds."""

    topology: NetworkTopology
    weights: tuple[BitMatrix, ...]
    thresholds: tuple[ThresholdVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        n = len(self.topology.layers)
        if len(self.weights) != n or len(self.thresholds) != n:
            raise ConfigError("model must supply weights and thresholds per layer")
        for spec, w, t in zip(self.topology.layers, self.weights, self.thresholds):
            if (w.rows, w.cols) != (spec.out_features, spec.in_features):
                raise ConfigError(
                    f"layer {spec.layer_id}: weight shape {w.rows}x{w.cols} != "
                    f"{spec.out_features}x{spec.in_features}"
                )
            if len(t) != spec.out_features:
                raise ConfigError(
                    f"layer {spec.layer_id}: {len(t)} thresholds for "
                    f"{spec.out_features} neurons"
                )


@dataclass(frozen=True)
class ClassScores:
    """Per-class integer scores as fixed-width output register images."""

    images: tuple[int, ...]
    width_bits: int = 32

    def __post_init__(self):
        m = _mask(self.width_bits)
        object.__setattr__(self, "images", tuple(v & m for v in self.images))

    def __len__(self):
        return len(self.images)

    def signed(self) -> list[int]:
        """Two's-complement interpretation of each register image."""
        half = 1 << (self.width_bits - 1)
        full = 1 << self.width_bits
        return [v - full if v >= half else v for v in self.images]

    def masked(self, useful_lsb_bits: int) -> tuple[int, ...]:
        """The low ``useful_lsb_bits`` of each register image."""
        m = _mask(useful_lsb_bits)
        return tuple(v & m for v in self.images)


def xnor_popcount(a: BitVector, b: BitVector) -> int:
    """Number of bit positions where a and b agree.

    Equals (signed_dot + n) / 2 for the +/-1 encoding, so the binary dot
    product is recoverable as 2 * result - n.
    """
    if a.len != b.len:
        raise ContractError(f"length mismatch: {a.len} vs {b.len}")
    return a.len - (a.bits ^ b.bits).bit_count()


def neuron_activate(match_count: int, threshold: int) -> int:
    """Binarized activation: fires (1) when match_count >= threshold."""
    return 1 if match_count >= threshold else 0


def layer_forward(
    input_bits: BitVector,
    weights: BitMatrix,
    thresholds: ThresholdVector,
    is_output: bool,
    output_width_bits: int = 32,
):
    """One layer: XNOR-popcount per neuron, then threshold or raw scores.

    Hidden layers return a BitVector of activations; the output layer returns
    ClassScores holding the raw agreement counts (no 2x-n remapping).
    """
    if input_bits.len != weights.cols:
        raise ContractError(
            f"input length {input_bits.len} != weight cols {weights.cols}"
        )
    if len(thresholds) != weights.rows:
        raise ContractError(
            f"{len(thresholds)} thresholds for {weights.rows} neurons"
        )
    n = weights.cols
    counts = [n - (input_bits.bits ^ rb).bit_count() for rb in weights.row_bits]
    if is_output:
        return ClassScores(tuple(counts), output_width_bits)
    bits = 0
    for r, c in enumerate(counts):
        if c >= thresholds[r]:
            bits |= 1 << r
    return BitVector(weights.rows, bits)


def network_forward(model: BnnModel, input_bits: BitVector) -> ClassScores:
    """Chain layer_forward across all layers of the model."""
    topo = model.topology
    if input_bits.len != topo.in_features:
        raise ContractError(
            f"input length {input_bits.len} != first layer in_features "
            f"{topo.in_features}"
        )
    x = input_bits
    out = None
    for spec, w, t in zip(topo.layers, model.weights, model.thresholds):
        out = layer_forward(x, w, t, spec.is_output, topo.output_width_bits)
        if not spec.is_output:
            x = out
    return out


def binarize_image(pixels) -> BitVector:
    """Map 784 grayscale pixels to bits: zero pixels -> 0, non-zero -> 1."""
    px = list(pixels)
    if len(px) != 784:
        raise ContractError(f"expected 784 pixels, got {len(px)}")
    bits = 0
    for i, p in enumerate(px):
        v = int(p)
        if not 0 <= v <= 255:
            raise ContractError(f"pixel {i} value {v} outside [0, 255]")
        if v:
            bits |= 1 << i
    return BitVector(784, bits)


def classify_scores(scores) -> int:
    """Index of the maximum score; ties break to the lowest class index."""
    if isinstance(scores, ClassScores):
        values = scores.signed()
    else:
        values = list(scores)
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best
