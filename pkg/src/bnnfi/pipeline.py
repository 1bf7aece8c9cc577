"""Cycle-level model of the folded, streaming BNN accelerator.

The pipeline instantiates one matrix unit per layer, connected by bit FIFOs.
Each unit time-multiplexes its neurons over ``pe`` processing elements and its
synapses over ``simd`` lanes, so one layer pass takes ``neuron_folds *
synapse_folds`` compute cycles plus per-fold emit cycles.

Per-layer state machine (states LOAD=0, COMPUTE=1, EMIT=2, DONE=3, HANG=4):

* Every non-DONE/HANG cycle starts with a FILL action: pop up to ``simd`` bits
  from the input FIFO into the layer's input buffer (buffer storage itself is
  memory, not a fault target).
* LOAD: when the buffer holds the synapse slice selected by the synapse fold
  counter, latch it into ``input_window`` and go to COMPUTE.
* COMPUTE: every PE XNORs ``input_window`` against the weight-memory word
  addressed by ``weight_addr`` and accumulates the agreement count;
  ``weight_addr`` increments by one each compute step (it is a free-running
  address register, never recomputed from the fold counters). On the last
  synapse fold the accumulators are thresholded (hidden layers) or exposed as
  raw 32-bit scores (output layer) through ``output_assembly``, and the unit
  moves to EMIT. Otherwise the next window is latched in place when available,
  or the unit falls back to LOAD.
* EMIT (hidden): once the downstream FIFO has room for ``pe`` bits, push
  ``output_assembly`` and advance the neuron fold. EMIT (output layer): one
  cycle per PE, streaming each accumulator through ``output_assembly`` to the
  score sink; the synapse fold counter doubles as the emit index.

Registers are the transient-fault target space and live in one flat,
bit-addressable file; FIFO payload bits and buffer/weight memories are
excluded (they model BRAM/LUTRAM storage). Faulted values the state machine
cannot interpret (unknown state encodings) latch a HANG state; starved or
deadlocked pipelines simply stop making progress, and a full-cycle fixed
point with no pending injections terminates the run as a hang.

Timing conventions: cycles are 1-based; scheduled bit flips are applied at
the start of their cycle, before that cycle's state update; the stream source
presents data in the same cycle it is pushed, while layer-to-layer FIFO
pushes become visible to the consumer one cycle later. With a never-starved
input, a lone layer drains in ``1 + NF*SF + NF`` cycles (hidden) or
``1 + NF*SF + NF*pe`` cycles (output layer).
"""

from __future__ import annotations

from dataclasses import dataclass

from .bnn import BitVector, BnnModel, ClassScores, NetworkTopology, _mask
from .errors import ConfigError, ContractError

S_LOAD, S_COMPUTE, S_EMIT, S_DONE, S_HANG = range(5)
STATE_NAMES = {
    S_LOAD: "load",
    S_COMPUTE: "compute",
    S_EMIT: "emit",
    S_DONE: "done",
    S_HANG: "hang",
}
STATE_WIDTH = 3
WEIGHT_ADDR_WIDTH = 32

REGISTER_ROLES = (
    "state",
    "neuron_fold_counter",
    "synapse_fold_counter",
    "weight_addr",
    "pe_accumulator",
    "input_window",
    "output_assembly",
    "fifo_count",
)


@dataclass(frozen=True)
class RegisterDescriptor:
    reg_id: int
    layer_id: int
    name: str
    width: int


@dataclass(frozen=True)
class LayerWindow:
    """First and last cycle (inclusive) in which a layer updated any state."""

    layer_id: int
    start_cycle: int
    end_cycle: int


@dataclass(frozen=True)
class Phase:
    start_cycle: int
    end_cycle: int
    active_layers: frozenset[int]


@dataclass(frozen=True)
class PhaseTable:
    phases: tuple[Phase, ...]

    def phase_index_for_cycle(self, cycle: int) -> int:
        for i, p in enumerate(self.phases):
            if p.start_cycle <= cycle <= p.end_cycle:
                return i
        raise ContractError(f"cycle {cycle} lies outside every phase")


def _counter_width(max_value: int) -> int:
    return max(1, max_value.bit_length())


def default_fifo_depths(topology: NetworkTopology) -> list[int]:
    """One depth per layer input edge; twice the largest transfer group."""
    depths = []
    for i, spec in enumerate(topology.layers):
        producer_group = topology.layers[i - 1].pe if i > 0 else spec.simd
        depths.append(2 * max(producer_group, spec.simd))
    return depths


class RegisterFile:
    """Dense, stable enumeration of every fault-addressable register.

    Ordering is per layer, in topology order: state, neuron_fold_counter,
    synapse_fold_counter, weight_addr, pe_accumulator[0..pe-1], input_window,
    output_assembly, fifo_count. reg_ids are 0..R-1 in that order and bit
    offsets make (register, bit) pairs enumerable as one flat bit index.
    """

    def __init__(self, topology: NetworkTopology, fifo_depths: list[int]):
        descriptors: list[RegisterDescriptor] = []
        self._by_key: dict[tuple[int, str], int] = {}

        def add(layer_id: int, name: str, width: int):
            rid = len(descriptors)
            descriptors.append(RegisterDescriptor(rid, layer_id, name, width))
            self._by_key[(layer_id, name)] = rid

        for spec, depth in zip(topology.layers, fifo_depths):
            lid = spec.layer_id
            nf_max = spec.neuron_folds - 1
            sf_max = spec.synapse_folds - 1
            if spec.is_output:
                sf_max = max(sf_max, spec.pe)
            add(lid, "state", STATE_WIDTH)
            add(lid, "neuron_fold_counter", _counter_width(nf_max))
            add(lid, "synapse_fold_counter", _counter_width(sf_max))
            add(lid, "weight_addr", WEIGHT_ADDR_WIDTH)
            for k in range(spec.pe):
                add(lid, f"pe_accumulator[{k}]", spec.accumulator_width)
            add(lid, "input_window", spec.simd)
            asm_width = 32 if spec.is_output else spec.pe
            add(lid, "output_assembly", asm_width)
            add(lid, "fifo_count", _counter_width(depth))

        self.descriptors = tuple(descriptors)
        self.bit_offsets = []
        off = 0
        for d in descriptors:
            self.bit_offsets.append(off)
            off += d.width
        self.total_bits = off

    def __len__(self):
        return len(self.descriptors)

    def __iter__(self):
        return iter(self.descriptors)

    def reg_id(self, layer_id: int, name: str) -> int:
        return self._by_key[(layer_id, name)]

    def flat_bit_index(self, reg_id: int, bit: int) -> int:
        d = self.descriptors[reg_id]
        if not 0 <= bit < d.width:
            raise ContractError(f"bit {bit} out of range for {d.name} (width {d.width})")
        return self.bit_offsets[reg_id] + bit

    def locate_flat_bit(self, flat: int) -> tuple[int, int]:
        """Inverse of flat_bit_index: flat bit -> (reg_id, bit)."""
        if not 0 <= flat < self.total_bits:
            raise ContractError(f"flat bit {flat} out of range")
        lo, hi = 0, len(self.descriptors) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.bit_offsets[mid] <= flat:
                lo = mid
            else:
                hi = mid - 1
        return lo, flat - self.bit_offsets[lo]


class CompiledLayer:
    """Weight memory and thresholds of one layer, laid out for the PEs.

    wmem[k][a] holds the simd-bit weight slice PE k reads at address
    a = neuron_fold * synapse_folds + synapse_fold. Out-of-range addresses
    read as zero (uninitialized memory).
    """

    __slots__ = ("wmem", "thresholds")

    def __init__(self, wmem: list[list[int]], thresholds: tuple[int, ...]):
        self.wmem = wmem
        self.thresholds = thresholds


class CompiledModel:
    """Per-layer weight memories, shareable read-only across simulators."""

    def __init__(self, topology: NetworkTopology, layers: list[CompiledLayer]):
        self.topology = topology
        self.layers = layers

    @classmethod
    def compile(cls, model: BnnModel) -> "CompiledModel":
        layers = []
        for spec, w, t in zip(model.topology.layers, model.weights, model.thresholds):
            sf_n = spec.synapse_folds
            smask = _mask(spec.simd)
            wmem = []
            for k in range(spec.pe):
                words = []
                for nf in range(spec.neuron_folds):
                    row = w.row_bits[nf * spec.pe + k]
                    for sf in range(sf_n):
                        words.append((row >> (sf * spec.simd)) & smask)
                wmem.append(words)
            layers.append(CompiledLayer(wmem, tuple(t.values)))
        return cls(model.topology, layers)

    def with_weight_bit_flipped(self, layer: int, flat_index: int) -> "CompiledModel":
        spec = self.topology.layers[layer]
        if not 0 <= flat_index < spec.out_features * spec.in_features:
            raise ContractError(f"weight bit {flat_index} out of range for layer {layer}")
        r, c = divmod(flat_index, spec.in_features)
        k, nf = r % spec.pe, r // spec.pe
        sf, pos = divmod(c, spec.simd)
        addr = nf * spec.synapse_folds + sf
        old = self.layers[layer]
        new_wmem = list(old.wmem)
        words = list(new_wmem[k])
        words[addr] ^= 1 << pos
        new_wmem[k] = words
        new_layers = list(self.layers)
        new_layers[layer] = CompiledLayer(new_wmem, old.thresholds)
        return CompiledModel(self.topology, new_layers)

    def with_threshold_bit_flipped(self, layer: int, neuron: int, bit: int) -> "CompiledModel":
        spec = self.topology.layers[layer]
        width = spec.accumulator_width
        if not 0 <= neuron < spec.out_features:
            raise ContractError(f"neuron {neuron} out of range for layer {layer}")
        if not 0 <= bit < width:
            raise ContractError(f"threshold bit {bit} out of range (width {width})")
        old = self.layers[layer]
        img = old.thresholds[neuron] & _mask(width)
        img ^= 1 << bit
        if img >= 1 << (width - 1):
            img -= 1 << width
        vals = list(old.thresholds)
        vals[neuron] = img
        new_layers = list(self.layers)
        new_layers[layer] = CompiledLayer(old.wmem, tuple(vals))
        return CompiledModel(self.topology, new_layers)


class _BitQueue:
    """FIFO payload as a packed int; oldest bit at position 0."""

    __slots__ = ("payload", "length")

    def __init__(self):
        self.payload = 0
        self.length = 0

    def push(self, bits: int, n: int):
        self.payload |= (bits & _mask(n)) << self.length
        self.length += n

    def pop(self, n: int) -> int:
        """Pop n bits; missing bits (count register ahead of payload) read 0."""
        take = min(n, self.length)
        val = self.payload & _mask(take)
        self.payload >>= take
        self.length -= take
        return val


class _LayerUnit:
    """Mutable per-layer execution state; registers live in the simulator."""

    def __init__(self, sim: "Simulator", spec, compiled: CompiledLayer, fifo_depth: int):
        rf = sim.register_file
        lid = spec.layer_id
        self.spec = spec
        self.layer_id = lid
        self.pe = spec.pe
        self.simd = spec.simd
        self.nf_count = spec.neuron_folds
        self.sf_count = spec.synapse_folds
        self.in_features = spec.in_features
        self.is_output = spec.is_output
        self.wmem = compiled.wmem
        self.thresholds = compiled.thresholds
        self.n_addrs = self.nf_count * self.sf_count

        self.id_state = rf.reg_id(lid, "state")
        self.id_nf = rf.reg_id(lid, "neuron_fold_counter")
        self.id_sf = rf.reg_id(lid, "synapse_fold_counter")
        self.id_wa = rf.reg_id(lid, "weight_addr")
        self.id_acc = [rf.reg_id(lid, f"pe_accumulator[{k}]") for k in range(spec.pe)]
        self.id_win = rf.reg_id(lid, "input_window")
        self.id_asm = rf.reg_id(lid, "output_assembly")
        self.id_fifo = rf.reg_id(lid, "fifo_count")

        descs = rf.descriptors
        self.nf_mask = _mask(descs[self.id_nf].width)
        self.sf_mask = _mask(descs[self.id_sf].width)
        self.acc_mask = _mask(descs[self.id_acc[0]].width)
        self.win_mask = _mask(spec.simd)
        self.asm_mask = _mask(descs[self.id_asm].width)
        self.fifo_mask = _mask(descs[self.id_fifo].width)
        self.fifo_depth = fifo_depth

        self.in_queue = _BitQueue()
        self.buffer = 0
        self.buffer_fill = 0
        # wired by the simulator: either the next unit or the score sink
        self.down_unit: "_LayerUnit | None" = None

    def _try_load_window(self, regs, sf: int) -> bool:
        if self.buffer_fill >= (sf + 1) * self.simd:
            regs[self.id_win] = (self.buffer >> (sf * self.simd)) & self.win_mask
            return True
        return False

    def _push_downstream(self, sim, regs, value: int, nbits: int) -> bool:
        down = self.down_unit
        if down is None:
            sim.sink_scores.append(value)
            return True
        if self.fifo_depth_down - regs[down.id_fifo] < nbits:
            return False
        down.in_queue.push(value, nbits)
        regs[down.id_fifo] = (regs[down.id_fifo] + nbits) & down.fifo_mask
        return True

    def tick(self, sim) -> bool:
        regs = sim.regs
        st = regs[self.id_state]
        if st == S_DONE or st == S_HANG:
            return False
        if st > S_HANG:
            regs[self.id_state] = S_HANG
            return True

        active = False
        # FILL: drain the input FIFO into the layer buffer
        if self.buffer_fill < self.in_features:
            k = min(self.simd, regs[self.id_fifo], self.in_features - self.buffer_fill)
            if k > 0:
                bits = self.in_queue.pop(k)
                self.buffer |= bits << self.buffer_fill
                self.buffer_fill += k
                regs[self.id_fifo] = (regs[self.id_fifo] - k) & self.fifo_mask
                active = True

        if st == S_LOAD:
            if self._try_load_window(regs, regs[self.id_sf]):
                regs[self.id_state] = S_COMPUTE
                active = True

        elif st == S_COMPUTE:
            active = True
            window = regs[self.id_win]
            addr = regs[self.id_wa]
            if sim._trace_addrs is not None:
                sim._trace_addrs[self.layer_id].append((sim.cycle, addr))
            in_range = addr < self.n_addrs
            for k in range(self.pe):
                wslice = self.wmem[k][addr] if in_range else 0
                agree = self.simd - (window ^ wslice).bit_count()
                acc_id = self.id_acc[k]
                regs[acc_id] = (regs[acc_id] + agree) & self.acc_mask
            regs[self.id_wa] = (regs[self.id_wa] + 1) & 0xFFFFFFFF

            sf = regs[self.id_sf]
            if sf == self.sf_count - 1:  # final synapse fold of this neuron group
                nf = regs[self.id_nf]
                if self.is_output:
                    regs[self.id_asm] = regs[self.id_acc[0]] & self.asm_mask
                    regs[self.id_sf] = 1 & self.sf_mask
                else:
                    bits = 0
                    for k in range(self.pe):
                        r = nf * self.pe + k
                        thr = self.thresholds[r] if r < len(self.thresholds) else 0
                        if regs[self.id_acc[k]] >= thr:
                            bits |= 1 << k
                    regs[self.id_asm] = bits
                    for acc_id in self.id_acc:
                        regs[acc_id] = 0
                    regs[self.id_sf] = 0
                regs[self.id_state] = S_EMIT
            else:
                sf2 = (sf + 1) & self.sf_mask
                regs[self.id_sf] = sf2
                if not (sf2 < self.sf_count and self._try_load_window(regs, sf2)):
                    regs[self.id_state] = S_LOAD

        elif st == S_EMIT:
            if self.is_output:
                self._push_downstream(sim, regs, regs[self.id_asm], 32)
                active = True
                j = regs[self.id_sf]
                if j < self.pe:
                    regs[self.id_asm] = regs[self.id_acc[j]] & self.asm_mask
                    regs[self.id_sf] = (j + 1) & self.sf_mask
                else:
                    for acc_id in self.id_acc:
                        regs[acc_id] = 0
                    regs[self.id_sf] = 0
                    self._advance_fold(regs)
            else:
                if self._push_downstream(sim, regs, regs[self.id_asm], self.pe):
                    active = True
                    self._advance_fold(regs)
                # else: backpressure stall, retry next cycle
        return active

    def _advance_fold(self, regs):
        nf = regs[self.id_nf]
        if nf == self.nf_count - 1:
            regs[self.id_state] = S_DONE
        else:
            regs[self.id_nf] = (nf + 1) & self.nf_mask
            if self._try_load_window(regs, regs[self.id_sf]):
                regs[self.id_state] = S_COMPUTE
            else:
                regs[self.id_state] = S_LOAD


@dataclass
class RunResult:
    completed: bool
    scores: ClassScores | None
    latency: int | None
    hung: bool
    cycles_executed: int

    @property
    def timed_out(self) -> bool:
        return not self.completed


class Simulator:
    """One single-use pipeline instance; never share across threads."""

    def __init__(
        self,
        topology: NetworkTopology,
        model: BnnModel | CompiledModel,
        input_bits: BitVector | None = None,
        fifo_depths: list[int] | None = None,
        trace: bool = False,
    ):
        if isinstance(model, BnnModel):
            model = CompiledModel.compile(model)
        if model.topology is not topology and model.topology != topology:
            raise ConfigError("compiled model does not match the topology")
        self.topology = topology
        self.compiled = model
        if fifo_depths is None:
            fifo_depths = default_fifo_depths(topology)
        if len(fifo_depths) != len(topology.layers):
            raise ConfigError("need one FIFO depth per layer input edge")
        for i, (spec, depth) in enumerate(zip(topology.layers, fifo_depths)):
            group = topology.layers[i - 1].pe if i > 0 else spec.simd
            need = max(group, spec.simd)
            if depth < need:
                raise ConfigError(
                    f"fifo depth {depth} at layer {spec.layer_id} below transfer "
                    f"group size {need} (would deadlock)"
                )
        self.fifo_depths = list(fifo_depths)
        self.register_file = RegisterFile(topology, self.fifo_depths)
        self.regs = [0] * len(self.register_file)

        self._trace_addrs = (
            {spec.layer_id: [] for spec in topology.layers} if trace else None
        )
        self.trace_lines: list[str] = [] if trace else None

        self.units = [
            _LayerUnit(self, spec, self.compiled.layers[i], self.fifo_depths[i])
            for i, spec in enumerate(topology.layers)
        ]
        for up, down in zip(self.units, self.units[1:]):
            up.down_unit = down
            up.fifo_depth_down = down.fifo_depth
        self.units[-1].down_unit = None
        self.units[-1].fifo_depth_down = 0

        self.cycle = 0
        self.sink_scores: list[int] = []
        self.complete = False
        self.hung = False
        self.latency: int | None = None
        self._first_active = {spec.layer_id: None for spec in topology.layers}
        self._last_active = dict(self._first_active)
        self._pending_flips: dict[int, list[tuple[int, int]]] = {}

        self._input_bits = None
        self._input_remaining = 0
        self._source_simd = topology.layers[0].simd
        if input_bits is not None:
            self.load_input(input_bits)

    def load_input(self, input_bits: BitVector):
        if input_bits.len != self.topology.in_features:
            raise ContractError(
                f"input length {input_bits.len} != {self.topology.in_features}"
            )
        if self.cycle != 0:
            raise ContractError("input can only be loaded before the first cycle")
        self._input_bits = input_bits.bits
        self._input_remaining = input_bits.len

    # -- fault primitives ---------------------------------------------------

    def flip_bit(self, reg_id: int, bit_index: int):
        """Invert one register bit in place (an involution on state)."""
        descs = self.register_file.descriptors
        if not 0 <= reg_id < len(descs):
            raise ContractError(f"register id {reg_id} out of range")
        if not 0 <= bit_index < descs[reg_id].width:
            raise ContractError(
                f"bit {bit_index} out of range for register {descs[reg_id].name}"
            )
        self.regs[reg_id] ^= 1 << bit_index

    def schedule_flip(self, cycle: int, reg_id: int, bit_index: int):
        """Queue a flip to be applied just before the given cycle executes."""
        if cycle < 1:
            raise ContractError("fault cycles are 1-based")
        self.register_file.flat_bit_index(reg_id, bit_index)  # validates
        self._pending_flips.setdefault(cycle, []).append((reg_id, bit_index))

    # -- execution ----------------------------------------------------------

    def step(self):
        """Advance one clock cycle; no-op once the run has terminated."""
        if self.complete or self.hung:
            return
        self.cycle += 1
        flips = self._pending_flips.pop(self.cycle, None)
        faulted = False
        if flips:
            for reg_id, bit in flips:
                self.flip_bit(reg_id, bit)
            faulted = True

        activity = False
        # stream source: data is valid in the same cycle it is offered
        if self._input_remaining > 0:
            unit0 = self.units[0]
            space = unit0.fifo_depth - self.regs[unit0.id_fifo]
            k = min(self._source_simd, space, self._input_remaining)
            if k > 0:
                unit0.in_queue.push(self._input_bits, k)
                self._input_bits >>= k
                self._input_remaining -= k
                self.regs[unit0.id_fifo] = (self.regs[unit0.id_fifo] + k) & unit0.fifo_mask
                activity = True

        # downstream first, so inter-layer FIFO pushes become visible next cycle
        for unit in reversed(self.units):
            if self.trace_lines is not None:
                st = self.regs[unit.id_state]
                nf = self.regs[unit.id_nf]
                sf = self.regs[unit.id_sf]
            acted = unit.tick(self)
            if acted:
                activity = True
                lid = unit.layer_id
                if self._first_active[lid] is None:
                    self._first_active[lid] = self.cycle
                self._last_active[lid] = self.cycle
                if self.trace_lines is not None:
                    self.trace_lines.append(
                        f"{self.cycle},{lid},{STATE_NAMES.get(st, 'invalid')},{nf},{sf}"
                    )

        if len(self.sink_scores) >= self.topology.num_classes:
            self.complete = True
            self.latency = self.cycle
        elif not activity and not faulted and not self._pending_flips:
            # deterministic fixed point: nothing can ever change again
            self.hung = True

    def run_to_completion(self, cycle_budget: int) -> RunResult:
        """Run until all class scores are emitted or the budget is exhausted."""
        if cycle_budget < 1:
            raise ContractError("cycle budget must be >= 1")
        if self._input_bits is None and self._input_remaining == 0 and self.cycle == 0:
            raise ContractError("no input loaded")
        while not self.complete and not self.hung and self.cycle < cycle_budget:
            self.step()
        if self.complete:
            n = self.topology.num_classes
            scores = ClassScores(
                tuple(self.sink_scores[:n]), self.topology.output_width_bits
            )
            return RunResult(True, scores, self.latency, False, self.cycle)
        return RunResult(False, None, None, self.hung, self.cycle)

    # -- introspection ------------------------------------------------------

    def enumerate_registers(self) -> tuple[RegisterDescriptor, ...]:
        return self.register_file.descriptors

    def layer_windows(self) -> list[LayerWindow]:
        """Activity windows of the completed run (first/last update cycle)."""
        if not self.complete:
            raise ContractError("layer windows require a completed run")
        windows = []
        for spec in self.topology.layers:
            lid = spec.layer_id
            start, end = self._first_active[lid], self._last_active[lid]
            if start is None:
                raise ContractError(f"layer {lid} never became active")
            windows.append(LayerWindow(lid, start, end))
        return windows

    def weight_address_trace(self, layer_id: int) -> list[tuple[int, int]]:
        if self._trace_addrs is None:
            raise ContractError("simulator was built without tracing")
        return self._trace_addrs[layer_id]


def build_pipeline(
    topology: NetworkTopology,
    model: BnnModel | CompiledModel,
    input_bits: BitVector | None = None,
    fifo_depths: list[int] | None = None,
    trace: bool = False,
) -> Simulator:
    """Fresh simulator at cycle 0 with zeroed registers."""
    return Simulator(topology, model, input_bits, fifo_depths, trace)


def phase_table(windows: list[LayerWindow], total_latency: int) -> PhaseTable:
    """Partition [1, total_latency] into phases delimited by layer starts.

    A layer counts as active in a phase when the phase's first cycle falls
    inside the layer's window with the end treated exclusively (a layer whose
    recorded last-update cycle coincides with a phase boundary belongs to the
    earlier phase only). The layer that opens a phase is always active in it.
    """
    if not windows:
        raise ContractError("phase table requires at least one layer window")
    if total_latency < 1:
        raise ContractError("total latency must be >= 1")
    for w in windows:
        if w.start_cycle > w.end_cycle:
            raise ContractError(f"window for layer {w.layer_id} is inverted")
    boundaries = sorted({1} | {w.start_cycle for w in windows if w.start_cycle <= total_latency})
    phases = []
    for i, start in enumerate(boundaries):
        end = boundaries[i + 1] - 1 if i + 1 < len(boundaries) else total_latency
        if end < start:
            continue
        active = frozenset(
            w.layer_id
            for w in windows
            if w.start_cycle == start
            or (w.start_cycle <= start < w.end_cycle)
        )
        phases.append(Phase(start, end, active))
    return PhaseTable(tuple(phases))
