"""Aggregation of campaign records into rate tables, breakdowns, histograms.

All aggregations are pure functions over the record dicts read back from a
campaign's JSONL output. Percentages are always computed against the number
of faults injected into the row's scope, and that denominator is carried in
every export (the ``injected`` column) so partial campaigns stay analyzable.

``msb_only`` outcomes get their own column in every export; the rendered
text tables fold them into the masked column, which is how headline rates
are usually quoted for designs whose upper output bits carry no information.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field

from .errors import ConfigError, ContractError, DataIntegrityError
from .pipeline import PhaseTable

OUTCOME_COLUMNS = ("masked", "msb_only", "tolerable", "critical", "crash")
ERROR_PCT_COLUMNS = ("tolerable", "crash", "critical")


def _pct(count: int, scope: int) -> float:
    return 100.0 * count / scope if scope else 0.0


@dataclass
class RateRow:
    label: str
    scope: int
    counts: dict[str, int]

    def pct(self, outcome: str) -> float:
        return _pct(self.counts.get(outcome, 0), self.scope)


@dataclass
class RateTable:
    rows: list[RateRow]

    header = (
        "scope",
        "injected",
        *OUTCOME_COLUMNS,
        "tolerable_pct",
        "crash_pct",
        "critical_pct",
    )

    def to_rows(self):
        out = []
        for r in self.rows:
            out.append(
                [
                    r.label,
                    r.scope,
                    *[r.counts.get(o, 0) for o in OUTCOME_COLUMNS],
                    r.pct("tolerable"),
                    r.pct("crash"),
                    r.pct("critical"),
                ]
            )
        return out

    def render(self) -> str:
        """Text table with msb_only folded into masked (headline style)."""
        lines = [
            f"{'scope':>10} {'injected':>9} {'masked':>8} "
            f"{'tolerable%':>11} {'crash%':>8} {'critical%':>10}"
        ]
        for r in self.rows:
            masked = r.counts.get("masked", 0) + r.counts.get("msb_only", 0)
            lines.append(
                f"{r.label:>10} {r.scope:>9} {masked:>8} "
                f"{r.pct('tolerable'):>11.2f} {r.pct('crash'):>8.2f} "
                f"{r.pct('critical'):>10.2f}"
            )
        return "\n".join(lines)


def per_layer_table(records: list[dict], scopes: dict | None = None) -> RateTable:
    """Outcome rates per layer plus a Total row.

    scopes may override the per-layer denominators; by default each row's
    denominator is the number of records attributed to that layer.
    """
    if not records:
        raise ContractError("cannot aggregate an empty record set")
    by_layer: dict = {}
    total: Counter = Counter()
    for rec in records:
        layer = rec.get("layer")
        by_layer.setdefault(layer, Counter())[rec["outcome"]] += 1
        total[rec["outcome"]] += 1
    rows = []
    for layer in sorted(by_layer, key=lambda x: (x is None, x)):
        counts = by_layer[layer]
        scope = (scopes or {}).get(layer, sum(counts.values()))
        label = f"layer{layer}" if layer is not None else "none"
        rows.append(RateRow(label, scope, dict(counts)))
    total_scope = (scopes or {}).get("total", sum(total.values()))
    rows.append(RateRow("total", total_scope, dict(total)))
    return RateTable(rows)


@dataclass
class PhaseCell:
    phase: int
    start_cycle: int
    end_cycle: int
    layer: int
    counts: dict[str, int]

    @property
    def injected(self) -> int:
        return sum(self.counts.values())


@dataclass
class PhaseBreakdown:
    cells: list[PhaseCell]

    header = (
        "phase",
        "start",
        "end",
        "layer",
        "injected",
        *OUTCOME_COLUMNS,
        "tolerable_pct",
        "crash_pct",
        "critical_pct",
    )

    def to_rows(self):
        out = []
        for c in self.cells:
            out.append(
                [
                    c.phase,
                    c.start_cycle,
                    c.end_cycle,
                    c.layer,
                    c.injected,
                    *[c.counts.get(o, 0) for o in OUTCOME_COLUMNS],
                    *[_pct(c.counts.get(o, 0), c.injected) for o in ERROR_PCT_COLUMNS],
                ]
            )
        return out

    def total_records(self) -> int:
        return sum(c.injected for c in self.cells)


def per_phase_breakdown(records: list[dict], phases: PhaseTable) -> PhaseBreakdown:
    """Attribute each transient record to the phase containing its cycle."""
    if not records:
        raise ContractError("cannot aggregate an empty record set")
    cells: dict[tuple[int, int], Counter] = {}
    for rec in records:
        if rec.get("kind") != "transient":
            raise ContractError("phase breakdown applies to transient campaigns only")
        cycle = rec["cycle"]
        try:
            pi = phases.phase_index_for_cycle(cycle)
        except ContractError as exc:
            raise DataIntegrityError(
                f"record at cycle {cycle} falls outside every phase"
            ) from exc
        cells.setdefault((pi, rec["layer"]), Counter())[rec["outcome"]] += 1
    out = []
    for (pi, layer) in sorted(cells):
        p = phases.phases[pi]
        out.append(
            PhaseCell(pi + 1, p.start_cycle, p.end_cycle, layer, dict(cells[(pi, layer)]))
        )
    return PhaseBreakdown(out)


@dataclass
class RegisterHistogram:
    counts: dict[int, dict[str, int]]  # reg_id -> outcome -> fault count
    register_info: dict[int, dict] = field(default_factory=dict)

    header = ("reg_id", "layer", "name", *OUTCOME_COLUMNS)

    def to_rows(self):
        out = []
        for reg_id in sorted(self.counts):
            info = self.register_info.get(reg_id, {})
            c = self.counts[reg_id]
            out.append(
                [
                    reg_id,
                    info.get("layer", ""),
                    info.get("name", ""),
                    *[c.get(o, 0) for o in OUTCOME_COLUMNS],
                ]
            )
        return out

    def total_records(self) -> int:
        return sum(sum(c.values()) for c in self.counts.values())


def per_register_histogram(
    records: list[dict], register_info: list[dict] | None = None
) -> RegisterHistogram:
    """Fault counts per register per outcome class, across all cycles."""
    if not records:
        raise ContractError("cannot aggregate an empty record set")
    counts: dict[int, Counter] = {}
    for rec in records:
        if rec.get("kind") != "transient":
            raise ContractError("register histogram applies to transient campaigns only")
        counts.setdefault(rec["reg_id"], Counter())[rec["outcome"]] += 1
    info = {r["reg_id"]: r for r in register_info} if register_info else {}
    return RegisterHistogram({k: dict(v) for k, v in counts.items()}, info)


def top_critical_registers(hist: RegisterHistogram, k: int) -> list[tuple[int, int]]:
    """Registers ranked by critical-fault count; ties break to lower reg_id."""
    ranked = sorted(
        ((reg_id, c.get("critical", 0)) for reg_id, c in hist.counts.items()),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]


def critical_rate_excluding(records: list[dict], excluded_reg_ids) -> tuple[float, float]:
    """Total critical rate before and after pretending the given registers
    are protected (their faults stop producing criticals; the denominator,
    total injected faults, stays the same)."""
    excluded = set(excluded_reg_ids)
    total = len(records)
    crit = sum(1 for r in records if r["outcome"] == "critical")
    crit_after = sum(
        1
        for r in records
        if r["outcome"] == "critical" and r.get("reg_id") not in excluded
    )
    return _pct(crit, total), _pct(crit_after, total)


@dataclass
class CampaignComparison:
    classes: list[str]
    statistical_pct: dict[str, float]
    exhaustive_pct: dict[str, float]
    moe_pct: float

    header = ("outcome", "statistical_pct", "exhaustive_pct", "delta_pp", "within_moe")

    def delta(self, outcome: str) -> float:
        return abs(self.statistical_pct[outcome] - self.exhaustive_pct[outcome])

    def within_moe(self, outcome: str) -> bool:
        return self.delta(outcome) <= self.moe_pct

    def all_within_moe(self) -> bool:
        return all(self.within_moe(o) for o in self.classes)

    def to_rows(self):
        return [
            [
                o,
                self.statistical_pct[o],
                self.exhaustive_pct[o],
                self.delta(o),
                int(self.within_moe(o)),
            ]
            for o in self.classes
        ]


def compare_campaigns(
    statistical_records: list[dict],
    exhaustive_records: list[dict],
    moe: float,
) -> CampaignComparison:
    """Per-class rate deltas between a sampled and an exhaustive campaign."""
    if not statistical_records or not exhaustive_records:
        raise ContractError("cannot compare empty record sets")
    kinds_s = {r.get("kind") for r in statistical_records}
    kinds_e = {r.get("kind") for r in exhaustive_records}
    if len(kinds_s) != 1 or kinds_s != kinds_e:
        raise ConfigError(
            f"campaigns cover different spaces: {sorted(kinds_s)} vs {sorted(kinds_e)}"
        )
    def rates(records):
        c = Counter(r["outcome"] for r in records)
        n = len(records)
        return {o: _pct(c.get(o, 0), n) for o in OUTCOME_COLUMNS}

    return CampaignComparison(
        classes=list(OUTCOME_COLUMNS),
        statistical_pct=rates(statistical_records),
        exhaustive_pct=rates(exhaustive_records),
        moe_pct=100.0 * moe,
    )


# -- exports -----------------------------------------------------------------

EXPORT_FORMATS = ("csv", "json", "plotdata")


def export(report, fmt: str, path: str):
    """Write a report's rows in a deterministic, documented column order."""
    if fmt not in EXPORT_FORMATS:
        raise ConfigError(f"format must be one of {EXPORT_FORMATS}, got {fmt!r}")
    header = list(report.header)
    rows = report.to_rows()
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)
    elif fmt == "json":
        with open(path, "w") as f:
            json.dump({"columns": header, "rows": rows}, f, indent=1)
            f.write("\n")
    else:  # plotdata: '#'-prefixed header, whitespace-separated numeric columns
        with open(path, "w") as f:
            f.write("# " + " ".join(header) + "\n")
            for row in rows:
                f.write(" ".join(str(v) for v in row) + "\n")
    return path
