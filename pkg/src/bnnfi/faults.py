"""Fault spaces, statistical sample sizing, injection, and outcome classes.

Two single-upset fault models are supported:

* Transient: one register bit is inverted at one clock cycle of a run, the
  simulation analog of forcing a flip-flop input for a cycle. The space is
  (total register bits) x (fault-free run length).
* Persistent: one model parameter bit (weight or threshold) is inverted
  before the run starts and stays inverted for the whole run. This
  approximates configuration-memory upsets at the parameter level only.

Outcomes compare a faulted run against the fault-free ("golden") run of the
same input. Only the low ``useful_lsb_bits`` of each 32-bit class score carry
information in a healthy design, so differences confined to the upper bits
are reported separately (MsbOnly) and folded into Masked for headline rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .bnn import BnnModel, ClassScores, classify_scores
from .errors import ConfigError, ContractError
from .pipeline import CompiledModel, RegisterFile, Simulator

# two-sided normal quantiles for the supported confidence levels
_T_VALUES = {0.90: 1.645, 0.95: 1.960, 0.99: 2.576}


class Outcome(Enum):
    MASKED = "masked"
    MSB_ONLY = "msb_only"
    TOLERABLE = "tolerable"
    CRITICAL = "critical"
    CRASH = "crash"


@dataclass(frozen=True)
class TransientFault:
    reg_id: int
    bit_index: int
    cycle: int


@dataclass(frozen=True)
class WeightFault:
    layer: int
    flat_bit_index: int


@dataclass(frozen=True)
class ThresholdFault:
    layer: int
    neuron: int
    bit_index: int


FaultDescriptor = TransientFault | WeightFault | ThresholdFault


class TransientSpace:
    """Enumerates (register, bit, cycle) upsets in lexicographic order."""

    kind = "transient"

    def __init__(self, register_file: RegisterFile, run_length: int):
        if run_length < 1:
            raise ContractError("run length must be >= 1")
        self.register_file = register_file
        self.run_length = run_length
        self.size = register_file.total_bits * run_length

    def fault(self, uid: int) -> TransientFault:
        if not 0 <= uid < self.size:
            raise ContractError(f"fault uid {uid} out of range (N={self.size})")
        flat, cyc = divmod(uid, self.run_length)
        reg_id, bit = self.register_file.locate_flat_bit(flat)
        return TransientFault(reg_id, bit, cyc + 1)

    def uid(self, fault: TransientFault) -> int:
        if not 1 <= fault.cycle <= self.run_length:
            raise ContractError(f"cycle {fault.cycle} outside [1, {self.run_length}]")
        flat = self.register_file.flat_bit_index(fault.reg_id, fault.bit_index)
        return flat * self.run_length + (fault.cycle - 1)

    def layer_of(self, fault: TransientFault) -> int:
        return self.register_file.descriptors[fault.reg_id].layer_id


class PersistentSpace:
    """Enumerates parameter-bit upsets: per layer, weight bits then threshold bits."""

    kind = "persistent"

    def __init__(self, model: BnnModel):
        self.model = model
        self._segments = []  # (start_uid, layer, "weight"|"threshold", bit_count)
        start = 0
        for spec, w in zip(model.topology.layers, model.weights):
            self._segments.append((start, spec.layer_id, "weight", w.bit_count))
            start += w.bit_count
            t_bits = spec.out_features * spec.accumulator_width
            self._segments.append((start, spec.layer_id, "threshold", t_bits))
            start += t_bits
        self.size = start

    def fault(self, uid: int) -> WeightFault | ThresholdFault:
        if not 0 <= uid < self.size:
            raise ContractError(f"fault uid {uid} out of range (N={self.size})")
        for start, layer, kind, count in reversed(self._segments):
            if uid >= start:
                off = uid - start
                if kind == "weight":
                    return WeightFault(layer, off)
                width = self.model.topology.layers[layer].accumulator_width
                neuron, bit = divmod(off, width)
                return ThresholdFault(layer, neuron, bit)
        raise AssertionError("unreachable")

    def uid(self, fault: WeightFault | ThresholdFault) -> int:
        kind = "weight" if isinstance(fault, WeightFault) else "threshold"
        for start, layer, seg_kind, count in self._segments:
            if layer == fault.layer and seg_kind == kind:
                if kind == "weight":
                    off = fault.flat_bit_index
                else:
                    width = self.model.topology.layers[layer].accumulator_width
                    off = fault.neuron * width + fault.bit_index
                if not 0 <= off < count:
                    raise ContractError(f"fault {fault} outside its segment")
                return start + off
        raise ContractError(f"no segment for layer {fault.layer}")

    def layer_of(self, fault) -> int:
        return fault.layer


def sample_size(space_size: int, confidence: float, moe: float, p: float = 0.5) -> int:
    """Required sample size for a given confidence level and margin of error.

    n = N / (1 + e^2 * (N - 1) / (t^2 * p * (1 - p))), rounded up and clamped
    to [1, N]. Only the tabulated two-sided confidence levels are supported.
    """
    if space_size < 1:
        raise ContractError("space size must be >= 1")
    if not 0 < moe < 1:
        raise ConfigError(f"margin of error must be in (0, 1), got {moe}")
    if not 0 < p < 1:
        raise ConfigError(f"defect prior p must be in (0, 1), got {p}")
    t = _T_VALUES.get(round(confidence, 6))
    if t is None:
        raise ConfigError(
            f"unsupported confidence level {confidence}; "
            f"choose one of {sorted(_T_VALUES)}"
        )
    n = space_size / (1.0 + moe * moe * (space_size - 1) / (t * t * p * (1.0 - p)))
    return max(1, min(space_size, math.ceil(n)))


@dataclass(frozen=True)
class SamplePlan:
    space_size: int
    confidence: float
    moe: float
    p: float
    sample_size: int
    seed: int


def plan_sample(space, confidence: float, moe: float, p: float, seed: int) -> SamplePlan:
    n = sample_size(space.size, confidence, moe, p)
    return SamplePlan(space.size, confidence, moe, p, n, seed)


def draw_sample(space_size: int, n: int, seed: int) -> list[int]:
    """n distinct uids, uniform without replacement, ascending, seed-reproducible."""
    import random

    if n > space_size:
        raise ContractError(f"cannot draw {n} from a space of {space_size}")
    rng = random.Random(seed)
    # partial Fisher-Yates over a sparse view of range(space_size)
    swapped: dict[int, int] = {}
    picks = []
    for i in range(n):
        j = rng.randrange(i, space_size)
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        picks.append(vj)
        swapped[j] = vi
        swapped[i] = vj
    picks.sort()
    return picks


def golden_run(
    topology,
    compiled: CompiledModel,
    input_bits,
    fifo_depths=None,
    safety_factor: int = 64,
):
    """Fault-free reference run; latency also sizes the transient space."""
    sim = Simulator(topology, compiled, input_bits, fifo_depths)
    # generous bound: fault-free latency is far below folds * features
    bound = safety_factor * sum(
        spec.neuron_folds * (spec.synapse_folds + spec.pe) + spec.in_features
        for spec in topology.layers
    )
    result = sim.run_to_completion(bound)
    if not result.completed:
        raise ContractError("fault-free run did not complete; check the pipeline")
    return result


def inject_and_run(
    topology,
    compiled: CompiledModel,
    fault: FaultDescriptor | None,
    input_bits,
    golden,
    budget_factor: float = 2.0,
    fifo_depths=None,
):
    """Run one injection in a fresh simulator and return the raw RunResult.

    Transient faults are applied before the target cycle's state update;
    persistent faults run against a patched copy of the compiled model, so
    the caller's model object is never modified.
    """
    budget = max(1, math.ceil(budget_factor * golden.latency))
    model = compiled
    if isinstance(fault, WeightFault):
        model = compiled.with_weight_bit_flipped(fault.layer, fault.flat_bit_index)
    elif isinstance(fault, ThresholdFault):
        model = compiled.with_threshold_bit_flipped(
            fault.layer, fault.neuron, fault.bit_index
        )
    sim = Simulator(topology, model, input_bits, fifo_depths)
    if isinstance(fault, TransientFault):
        sim.schedule_flip(fault.cycle, fault.reg_id, fault.bit_index)
    return sim.run_to_completion(budget)


def classify(
    golden_scores: ClassScores,
    result,
    useful_lsb_bits: int,
    argmax_on: str = "masked",
) -> Outcome:
    """Map one faulted run against the golden scores to an outcome class.

    argmax_on="masked" (default) compares predicted classes on the useful low
    bits; "raw" compares on the full signed register images instead.
    """
    if result.timed_out:
        return Outcome.CRASH
    faulted = result.scores
    if faulted.images == golden_scores.images:
        return Outcome.MASKED
    gm = golden_scores.masked(useful_lsb_bits)
    fm = faulted.masked(useful_lsb_bits)
    if fm == gm:
        return Outcome.MSB_ONLY
    if argmax_on == "masked":
        g_cls, f_cls = classify_scores(gm), classify_scores(fm)
    elif argmax_on == "raw":
        g_cls, f_cls = classify_scores(golden_scores), classify_scores(faulted)
    else:
        raise ConfigError(f"argmax_on must be 'masked' or 'raw', got {argmax_on!r}")
    return Outcome.TOLERABLE if f_cls == g_cls else Outcome.CRITICAL


def apply_persistent_to_model(model: BnnModel, fault) -> BnnModel:
    """Functional-model counterpart of a persistent fault (for oracles)."""
    weights = list(model.weights)
    thresholds = list(model.thresholds)
    if isinstance(fault, WeightFault):
        weights[fault.layer] = weights[fault.layer].with_flipped_flat(
            fault.flat_bit_index
        )
    elif isinstance(fault, ThresholdFault):
        width = model.topology.layers[fault.layer].accumulator_width
        thresholds[fault.layer] = thresholds[fault.layer].with_flipped(
            fault.neuron, fault.bit_index, width
        )
    else:
        raise ContractError(f"not a persistent fault: {fault!r}")
    return BnnModel(model.topology, tuple(weights), tuple(thresholds))
