"""Campaign planning and execution over a fault space.

A campaign runs one injection per planned fault per input image, compares
each run against the golden run, and appends one self-describing JSON record
per run to an output file. Runs are pure functions of (fault, model, input),
so execution is embarrassingly parallel and the final record set is
independent of worker count, scheduling, and interruptions.

Files written next to the records:
  <out>.meta.json   campaign metadata (config echo, golden runs, register
                    table, layer windows, phases) used by the report stage
  <out>.checkpoint  config digest + completed-run count for cheap resume
                    validation; the records file itself is the authority on
                    which runs are done
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
import sys
from collections import Counter
from dataclasses import dataclass

from .bnn import BnnModel, binarize_image, classify_scores
from .errors import ConfigError, ContractError, DataIntegrityError
from .faults import (
    Outcome,
    PersistentSpace,
    ThresholdFault,
    TransientFault,
    TransientSpace,
    WeightFault,
    classify,
    draw_sample,
    golden_run,
    inject_and_run,
    sample_size,
)
from .model_io import read_model, synthetic_input
from .pipeline import CompiledModel, Simulator, phase_table

CONFIG_KEYS = {
    "mode",
    "space",
    "confidence",
    "moe",
    "p",
    "seed",
    "budget_factor",
    "workers",
    "model",
    "images",
    "indices",
}


@dataclass
class CampaignConfig:
    mode: str  # "exhaustive" | "statistical"
    space: str  # "transient" | "persistent"
    model: str | None = None
    images: str | None = None  # IDX file path, or None for synthetic inputs
    indices: tuple[int, ...] = (0,)
    seed: int | None = None
    confidence: float | None = None
    moe: float | None = None
    p: float = 0.5
    budget_factor: float = 2.0
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("exhaustive", "statistical"):
            raise ConfigError(f"mode must be exhaustive or statistical, got {self.mode!r}")
        if self.space not in ("transient", "persistent"):
            raise ConfigError(f"space must be transient or persistent, got {self.space!r}")
        if self.mode == "statistical":
            if self.confidence is None or self.moe is None:
                raise ConfigError("statistical mode requires confidence and moe")
            if self.seed is None:
                raise ConfigError("statistical mode requires a seed")
        if self.seed is None:
            self.seed = 0
        self.indices = tuple(int(i) for i in self.indices)
        if not self.indices:
            raise ConfigError("at least one input index is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def parse_config_file(path: str) -> CampaignConfig:
    """Parse the key=value campaign config format (# starts a comment)."""
    raw: dict[str, str] = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            raw[key] = value
    kwargs: dict = {}
    for key in ("mode", "space", "model", "images"):
        if key in raw:
            kwargs[key] = raw[key]
    for key in ("confidence", "moe", "p", "budget_factor"):
        if key in raw:
            kwargs[key] = float(raw[key])
    for key in ("seed", "workers"):
        if key in raw:
            kwargs[key] = int(raw[key])
    if "indices" in raw:
        kwargs["indices"] = tuple(int(t) for t in raw["indices"].split(",") if t.strip())
    if "mode" not in kwargs or "space" not in kwargs:
        raise ConfigError(f"{path}: mode and space are required")
    return CampaignConfig(**kwargs)


@dataclass
class CampaignPlan:
    config: CampaignConfig
    space_kind: str
    space_size: int
    uids: list[int]
    digest: str
    run_length: int | None = None  # transient campaigns only

    @property
    def n(self) -> int:
        return len(self.uids)


class CampaignContext:
    """Everything a campaign needs in memory: model, inputs, goldens, space."""

    def __init__(self, config: CampaignConfig, model: BnnModel):
        self.config = config
        self.model = model
        self.topology = model.topology
        self.compiled = CompiledModel.compile(model)
        self.inputs = {}
        if config.images:
            from .idx import read_idx_images

            images = read_idx_images(config.images)
            for idx in config.indices:
                if not 0 <= idx < len(images):
                    raise ConfigError(f"image index {idx} out of range (count {len(images)})")
                self.inputs[idx] = binarize_image(images[idx].reshape(-1))
        else:
            for idx in config.indices:
                self.inputs[idx] = synthetic_input(self.topology, config.seed, idx)
        self.goldens = {
            idx: golden_run(self.topology, self.compiled, bits)
            for idx, bits in self.inputs.items()
        }
        latencies = {g.latency for g in self.goldens.values()}
        if len(latencies) != 1:
            raise ContractError("fault-free latency must not depend on the input")
        self.run_length = latencies.pop()
        if config.space == "transient":
            sim = Simulator(self.topology, self.compiled)
            self.space = TransientSpace(sim.register_file, self.run_length)
        else:
            self.space = PersistentSpace(model)

    @classmethod
    def from_config(cls, config: CampaignConfig, model: BnnModel | None = None):
        if model is None:
            if not config.model:
                raise ConfigError("config names no model file and none was supplied")
            model = read_model(config.model)
        return cls(config, model)


def _config_digest(config: CampaignConfig, context: CampaignContext) -> str:
    ident = {
        "mode": config.mode,
        "space": config.space,
        "confidence": config.confidence,
        "moe": config.moe,
        "p": config.p,
        "seed": config.seed,
        "budget_factor": config.budget_factor,
        "indices": list(config.indices),
        "images": os.path.basename(config.images) if config.images else None,
    }
    h = hashlib.sha256(json.dumps(ident, sort_keys=True).encode())
    if config.model:
        with open(config.model, "rb") as f:
            h.update(f.read())
    for idx in sorted(context.inputs):
        bits = context.inputs[idx]
        h.update(f"{idx}:{bits.len}:{bits.bits:x}".encode())
    return h.hexdigest()


def plan_campaign(config: CampaignConfig, model: BnnModel | None = None,
                  context: CampaignContext | None = None) -> tuple[CampaignPlan, CampaignContext]:
    """Deterministic fault list for (config, seed): full space or drawn sample."""
    if context is None:
        context = CampaignContext.from_config(config, model)
    space = context.space
    if space.size == 0:
        raise ConfigError("the configured fault space is empty")
    if config.mode == "exhaustive":
        uids = list(range(space.size))
    else:
        n = sample_size(space.size, config.confidence, config.moe, config.p)
        uids = draw_sample(space.size, n, config.seed)
    plan = CampaignPlan(
        config=config,
        space_kind=space.kind,
        space_size=space.size,
        uids=uids,
        digest=_config_digest(config, context),
        run_length=context.run_length if config.space == "transient" else None,
    )
    return plan, context


def _fault_fields(fault) -> dict:
    if fault is None:
        return {"kind": "none"}
    if isinstance(fault, TransientFault):
        return {
            "kind": "transient",
            "reg_id": fault.reg_id,
            "bit": fault.bit_index,
            "cycle": fault.cycle,
        }
    if isinstance(fault, WeightFault):
        return {
            "kind": "persistent",
            "target": "weight",
            "flat_bit": fault.flat_bit_index,
        }
    if isinstance(fault, ThresholdFault):
        return {
            "kind": "persistent",
            "target": "threshold",
            "neuron": fault.neuron,
            "bit": fault.bit_index,
        }
    raise ContractError(f"unknown fault type {fault!r}")


def run_one(context: CampaignContext, uid: int | None, input_index: int) -> dict:
    """Execute one injection and build its record dict (stable key order)."""
    fault = context.space.fault(uid) if uid is not None else None
    golden = context.goldens[input_index]
    result = inject_and_run(
        context.topology,
        context.compiled,
        fault,
        context.inputs[input_index],
        golden,
        context.config.budget_factor,
    )
    outcome = classify(golden.scores, result, context.topology.useful_lsb_bits)
    record = {"fault_uid": uid}
    record.update(_fault_fields(fault))
    record["layer"] = context.space.layer_of(fault) if fault is not None else None
    record["input_index"] = input_index
    record["outcome"] = outcome.value
    record["golden_class"] = classify_scores(
        golden.scores.masked(context.topology.useful_lsb_bits)
    )
    if outcome is not Outcome.CRASH:
        record["observed_class"] = classify_scores(
            result.scores.masked(context.topology.useful_lsb_bits)
        )
        record["latency"] = result.latency
    else:
        record["latency"] = None
    return record


def record_line(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"))


def record_sort_key(record: dict):
    uid = record.get("fault_uid")
    return (record.get("input_index", 0), -1 if uid is None else uid)


# -- worker plumbing ---------------------------------------------------------

_WORKER_CTX: CampaignContext | None = None


def _worker_init(context: CampaignContext):
    global _WORKER_CTX
    _WORKER_CTX = context


def _worker_run(task: tuple[int | None, int]) -> dict:
    return run_one(_WORKER_CTX, task[0], task[1])


def load_existing_records(out_path: str) -> list[dict]:
    """Read records back, dropping a partially written trailing line."""
    if not os.path.exists(out_path):
        return []
    records = []
    good_bytes = 0
    with open(out_path, "rb") as f:
        for raw in f:
            try:
                records.append(json.loads(raw))
            except json.JSONDecodeError:
                # only the final line may be torn (interrupted append)
                rest = f.read()
                if rest.strip():
                    raise DataIntegrityError(
                        f"{out_path}: corrupt record before end of file"
                    )
                with open(out_path, "r+b") as trunc:
                    trunc.truncate(good_bytes)
                break
            good_bytes += len(raw)
    return records


def _write_checkpoint(out_path: str, digest: str, completed: int, total: int):
    tmp = out_path + ".checkpoint.tmp"
    with open(tmp, "w") as f:
        json.dump({"digest": digest, "completed": completed, "total": total}, f)
        f.write("\n")
    os.replace(tmp, out_path + ".checkpoint")


def _write_meta(out_path: str, plan: CampaignPlan, context: CampaignContext):
    sim = Simulator(
        context.topology, context.compiled, next(iter(context.inputs.values())), trace=True
    )
    result = sim.run_to_completion(64 * context.run_length)
    windows = sim.layer_windows()
    phases = phase_table(windows, result.latency)
    meta = {
        "digest": plan.digest,
        "space": plan.space_kind,
        "mode": plan.config.mode,
        "space_size": plan.space_size,
        "sample_size": plan.n,
        "seed": plan.config.seed,
        "confidence": plan.config.confidence,
        "moe": plan.config.moe,
        "p": plan.config.p,
        "budget_factor": plan.config.budget_factor,
        "indices": list(plan.config.indices),
        "run_length": context.run_length,
        "useful_lsb_bits": context.topology.useful_lsb_bits,
        "golden": {
            str(idx): {
                "latency": g.latency,
                "scores": list(g.scores.images),
                "class": classify_scores(
                    g.scores.masked(context.topology.useful_lsb_bits)
                ),
            }
            for idx, g in context.goldens.items()
        },
        "registers": [
            {"reg_id": d.reg_id, "layer": d.layer_id, "name": d.name, "width": d.width}
            for d in Simulator(context.topology, context.compiled).register_file
        ],
        "windows": [
            {"layer": w.layer_id, "start": w.start_cycle, "end": w.end_cycle}
            for w in windows
        ],
        "phases": [
            {
                "start": p.start_cycle,
                "end": p.end_cycle,
                "active_layers": sorted(p.active_layers),
            }
            for p in phases.phases
        ],
    }
    with open(out_path + ".meta.json", "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
        f.write("\n")


def execute_plan(
    plan: CampaignPlan,
    context: CampaignContext,
    out_path: str,
    workers: int | None = None,
    progress: bool = False,
    tasks_override: list[tuple[int | None, int]] | None = None,
) -> Counter:
    """Run every planned fault exactly once per input, appending records.

    If records from a previous (interrupted) run of the same campaign exist
    at out_path, their digest is verified and the completed runs are skipped;
    the final record set is identical to an uninterrupted run.
    """
    workers = workers if workers is not None else plan.config.workers
    done: set[tuple[int | None, int]] = set()
    counts: Counter = Counter()
    existing = load_existing_records(out_path)
    if existing:
        cp_path = out_path + ".checkpoint"
        if os.path.exists(cp_path):
            with open(cp_path) as f:
                cp = json.load(f)
            if cp.get("digest") != plan.digest:
                raise ConfigError(
                    f"{out_path}: existing campaign digest does not match this "
                    "config; refusing to resume"
                )
        for rec in existing:
            done.add((rec["fault_uid"], rec["input_index"]))
            counts[rec["outcome"]] += 1
    else:
        _write_meta(out_path, plan, context)

    if tasks_override is not None:
        tasks = [t for t in tasks_override if t not in done]
        total = len(tasks_override)
    else:
        tasks = [
            (uid, idx)
            for idx in plan.config.indices
            for uid in plan.uids
            if (uid, idx) not in done
        ]
        total = plan.n * len(plan.config.indices)

    flush_every = max(1, min(1000, total // 20 or 1))
    completed = len(done)
    try:
        with open(out_path, "a") as sink:
            def consume(record: dict):
                nonlocal completed
                sink.write(record_line(record) + "\n")
                counts[record["outcome"]] += 1
                completed += 1
                if completed % flush_every == 0:
                    sink.flush()
                    _write_checkpoint(out_path, plan.digest, completed, total)
                    if progress:
                        print(f"\r{completed}/{total} runs", end="", file=sys.stderr)

            if workers > 1 and len(tasks) > 1:
                with multiprocessing.Pool(
                    workers, initializer=_worker_init, initargs=(context,)
                ) as pool:
                    chunk = max(1, len(tasks) // (workers * 8))
                    for record in pool.imap_unordered(_worker_run, tasks, chunk):
                        consume(record)
            else:
                for task in tasks:
                    consume(run_one(context, task[0], task[1]))
            sink.flush()
    finally:
        _write_checkpoint(out_path, plan.digest, completed, total)
        if progress:
            print(file=sys.stderr)
    return counts


def run_campaign(
    config: CampaignConfig,
    out_path: str,
    model: BnnModel | None = None,
    progress: bool = False,
) -> Counter:
    """Plan and execute in one call; resumes automatically if records exist."""
    plan, context = plan_campaign(config, model)
    return execute_plan(plan, context, out_path, progress=progress)
