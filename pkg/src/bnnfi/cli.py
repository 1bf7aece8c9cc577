"""Command-line surface: infer, registers, plan, campaign, report, gen-model."""

from __future__ import annotations

import argparse
import os
import sys

from . import campaign as camp
from . import report as rep
from .bnn import binarize_image, classify_scores, network_forward, topology_from_shapes
from .errors import BnnfiError, ConfigError, ContractError
from .faults import PersistentSpace, TransientSpace, golden_run, sample_size
from .idx import read_idx
from .model_io import generate_model, read_model, synthetic_pixels, write_model
from .pipeline import Phase, PhaseTable, Simulator


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", "-").split("-") if t != ""]
    except ValueError:
        raise ConfigError(f"{flag}: expected integers separated by '-' or ','")


def _load_input(args, topology):
    """Input selection shared by infer: IDX image or seeded synthetic pixels."""
    if args.images:
        images, labels = read_idx(args.images, args.labels)
        if not 0 <= args.index < len(images):
            raise ConfigError(f"--index {args.index} out of range (count {len(images)})")
        pixels = images[args.index].reshape(-1)
        label = int(labels[args.index]) if labels is not None else None
        return binarize_image(pixels), label
    if topology.in_features == 784:
        return binarize_image(synthetic_pixels(args.seed, args.index)), None
    from .model_io import synthetic_input

    return synthetic_input(topology, args.seed, args.index), None


def cmd_gen_model(args) -> int:
    features = _parse_int_list(args.shape, "--shape")
    pe = _parse_int_list(args.pe, "--pe")
    simd = _parse_int_list(args.simd, "--simd")
    topology = topology_from_shapes(features, pe, simd)
    model = generate_model(topology, args.seed)
    write_model(model, args.out)
    print(f"wrote model: {args.out}")
    print(f"layers: {'-'.join(str(f) for f in features)}")
    print(f"pe: {pe}  simd: {simd}  seed: {args.seed}")
    return 0


def cmd_infer(args) -> int:
    model = read_model(args.model)
    input_bits, label = _load_input(args, model.topology)
    golden = network_forward(model, input_bits)
    sim = Simulator(model.topology, model, input_bits, trace=bool(args.trace))
    result = sim.run_to_completion(args.budget)
    if not result.completed:
        print("cycle simulation did not complete within the budget", file=sys.stderr)
        return 1
    if args.trace:
        with open(args.trace, "w") as f:
            f.write("\n".join(sim.trace_lines) + "\n")
    masked_bits = model.topology.useful_lsb_bits
    print(f"decision window: low {masked_bits} bits of {model.topology.output_width_bits}")
    print(f"golden scores: {list(golden.images)}")
    print(f"golden class: {classify_scores(golden.masked(masked_bits))}")
    print(f"sim scores: {list(result.scores.images)}")
    print(f"sim class: {classify_scores(result.scores.masked(masked_bits))}")
    print(f"latency: {result.latency} cycles")
    if label is not None:
        print(f"label: {label}")
    return 0


def cmd_registers(args) -> int:
    model = read_model(args.model)
    sim = Simulator(model.topology, model)
    rf = sim.register_file
    print(f"{'reg_id':>6} {'layer':>5} {'width':>5} {'bit_offset':>10}  name")
    for d in rf:
        print(
            f"{d.reg_id:>6} {d.layer_id:>5} {d.width:>5} "
            f"{rf.bit_offsets[d.reg_id]:>10}  {d.name}"
        )
    print(f"total: {len(rf)} registers, {rf.total_bits} bits")
    return 0


def cmd_plan(args) -> int:
    model = read_model(args.model)
    topology = model.topology
    from .pipeline import CompiledModel

    compiled = CompiledModel.compile(model)
    if args.space == "transient":
        from .model_io import synthetic_input

        golden = golden_run(topology, compiled, synthetic_input(topology, args.seed))
        sim = Simulator(topology, compiled)
        space = TransientSpace(sim.register_file, golden.latency)
        print(f"space: transient ({sim.register_file.total_bits} register bits "
              f"x {golden.latency} cycles)")
        budget = 2 * golden.latency
    else:
        space = PersistentSpace(model)
        print("space: persistent (weight + threshold bits)")
        golden = None
        budget = None
    print(f"N = {space.size}")
    if args.confidence is not None and args.moe is not None:
        n = sample_size(space.size, args.confidence, args.moe, args.p)
        print(
            f"n = {n} (confidence {args.confidence}, moe {args.moe}, p {args.p})"
        )
    else:
        n = space.size
        print(f"n = {n} (exhaustive)")
    if budget is None:
        from .model_io import synthetic_input

        golden = golden_run(topology, compiled, synthetic_input(topology, args.seed))
        budget = golden.latency
    print(f"estimated work: {n} runs x <= {budget} cycles = {n * budget} simulated cycles")
    return 0


def cmd_campaign(args) -> int:
    config = camp.parse_config_file(args.config)
    if args.workers is not None:
        config.workers = args.workers
    if args.model:
        config.model = args.model
    counts = camp.run_campaign(config, args.out, progress=not args.quiet)
    total = sum(counts.values())
    print(f"records: {args.out} ({total} runs)")
    for outcome in rep.OUTCOME_COLUMNS:
        c = counts.get(outcome, 0)
        print(f"{outcome:>10}: {c:>8} ({100.0 * c / total:.2f}%)")
    return 0


def _load_meta(records_path: str) -> dict | None:
    meta_path = records_path + ".meta.json"
    if not os.path.exists(meta_path):
        return None
    import json

    with open(meta_path) as f:
        return json.load(f)


def cmd_report(args) -> int:
    records = camp.load_existing_records(args.records)
    if not records:
        raise ContractError(f"{args.records}: no records to aggregate")
    meta = _load_meta(args.records)
    os.makedirs(args.out, exist_ok=True)
    base = os.path.join(args.out, f"{args.by}_report")
    ext = {"csv": "csv", "json": "json", "plotdata": "dat"}[args.format]

    if args.by == "layer":
        table = rep.per_layer_table(records)
        rep.export(table, args.format, f"{base}.{ext}")
        print(table.render())
        if not args.no_figures:
            from .figures import plot_layer_rates

            plot_layer_rates(table, f"{base}.png")
    elif args.by == "phase":
        if meta is None or "phases" not in meta:
            raise ConfigError(
                f"{args.records}.meta.json is required for a phase report"
            )
        phases = PhaseTable(
            tuple(
                Phase(p["start"], p["end"], frozenset(p["active_layers"]))
                for p in meta["phases"]
            )
        )
        breakdown = rep.per_phase_breakdown(records, phases)
        rep.export(breakdown, args.format, f"{base}.{ext}")
        print(f"{len(breakdown.cells)} (phase, layer) cells, "
              f"{breakdown.total_records()} records")
        if not args.no_figures:
            from .figures import plot_phase_breakdown

            plot_phase_breakdown(breakdown, f"{base}.png")
    else:  # register
        reg_info = meta.get("registers") if meta else None
        hist = rep.per_register_histogram(records, reg_info)
        rep.export(hist, args.format, f"{base}.{ext}")
        top = rep.top_critical_registers(hist, args.top)
        print(f"top {len(top)} registers by critical faults:")
        for reg_id, crit in top:
            info = hist.register_info.get(reg_id, {})
            name = info.get("name", "?")
            layer = info.get("layer", "?")
            print(f"  reg {reg_id} (layer {layer}, {name}): {crit}")
        if top:
            before, after = rep.critical_rate_excluding(records, [top[0][0]])
            print(
                f"total critical rate {before:.4f}% -> {after:.4f}% "
                f"if register {top[0][0]} were protected"
            )
        if not args.no_figures:
            from .figures import plot_register_histogram

            plot_register_histogram(hist, f"{base}.png")
    print(f"wrote {base}.{ext}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnnfi",
        description="Binarized-NN accelerator simulator and SEU fault-injection campaigns",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="write a seeded random model file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", default="784-256-256-256-10",
                   help="feature chain, e.g. 784-256-256-256-10")
    p.add_argument("--pe", default="16-16-16-10", help="PEs per layer, e.g. 16-16-16-10")
    p.add_argument("--simd", default="16-16-16-16", help="SIMD lanes per layer")
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("infer", help="classify one image on golden and cycle models")
    p.add_argument("--model", required=True)
    p.add_argument("--images")
    p.add_argument("--labels")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic input")
    p.add_argument("--budget", type=int, default=1_000_000)
    p.add_argument("--trace", help="write a cycle,layer,phase,nf,sf trace here")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("registers", help="dump the register file enumeration")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_registers)

    p = sub.add_parser("plan", help="print fault-space size and sample size")
    p.add_argument("--model", required=True)
    p.add_argument("--space", choices=["transient", "persistent"], required=True)
    p.add_argument("--confidence", type=float)
    p.add_argument("--moe", type=float)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("campaign", help="execute a campaign config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="records.jsonl")
    p.add_argument("--workers", type=int)
    p.add_argument("--model", help="override the model path in the config")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("report", help="aggregate records and render figures")
    p.add_argument("records", help="JSONL records from a campaign")
    p.add_argument("--by", choices=["layer", "phase", "register"], required=True)
    p.add_argument("--format", choices=list(rep.EXPORT_FORMATS), default="csv")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except BnnfiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
