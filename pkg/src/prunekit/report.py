"""Reduction reports, per-layer breakdowns, and trade-off series.

Outputs come in CSV (RFC-4180 quoting, LF line endings, header row) and JSON
mirrors. Integers are written verbatim; percentages are rendered at two
decimal places with half-up rounding; other reals use Python's shortest
round-tripping representation, so re-parsing a rendered file reproduces the
values exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .complexity import (
    ComplexityProfile,
    CostTotals,
    EnergyEstimate,
    energy_of,
)
from .pruner import PruneTrace


def round_pct(value: float) -> float:
    """Percentage at two decimals, half-up (84.255 -> 84.26)."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _reduction(baseline: CostTotals, pruned: CostTotals) -> dict[str, float]:
    out = {}
    for key, base, after in [
        ("flops", baseline.flops, pruned.flops),
        ("memory", baseline.memory_bytes, pruned.memory_bytes),
        ("params", baseline.params, pruned.params),
    ]:
        out[key] = 0.0 if base == 0 else 100.0 * (1.0 - after / base)
    return out


@dataclass(frozen=True)
class ReductionReport:
    """Baseline-vs-pruned comparison in all three currencies plus energy.

    Percentages are 100 * (1 - pruned/baseline). The ``conv_*`` fields cover
    the convolutional layers only — the pool pruning acts on and the basis of
    headline reduction figures; the plain fields cover the whole network.
    """

    baseline: CostTotals
    pruned: CostTotals
    reduction_pct: dict[str, float]
    conv_baseline: CostTotals
    conv_pruned: CostTotals
    conv_reduction_pct: dict[str, float]
    energy_baseline: EnergyEstimate
    energy_pruned: EnergyEstimate
    accuracy_delta_pct: float | None = None

    def as_dict(self) -> dict:
        return {
            "baseline": self.baseline.as_dict(),
            "pruned": self.pruned.as_dict(),
            "reduction_pct": {k: round_pct(v) for k, v in self.reduction_pct.items()},
            "conv_baseline": self.conv_baseline.as_dict(),
            "conv_pruned": self.conv_pruned.as_dict(),
            "conv_reduction_pct": {
                k: round_pct(v) for k, v in self.conv_reduction_pct.items()
            },
            "energy": {
                "baseline": self.energy_baseline.as_dict(),
                "pruned": self.energy_pruned.as_dict(),
            },
            "accuracy_delta_pct": self.accuracy_delta_pct,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "baseline", "pruned", "reduction_pct"])
        rows = [
            ("flops", self.baseline.flops, self.pruned.flops,
             self.reduction_pct["flops"]),
            ("memory_bytes", self.baseline.memory_bytes, self.pruned.memory_bytes,
             self.reduction_pct["memory"]),
            ("params", self.baseline.params, self.pruned.params,
             self.reduction_pct["params"]),
            ("conv_flops", self.conv_baseline.flops, self.conv_pruned.flops,
             self.conv_reduction_pct["flops"]),
            ("conv_memory_bytes", self.conv_baseline.memory_bytes,
             self.conv_pruned.memory_bytes, self.conv_reduction_pct["memory"]),
            ("conv_params", self.conv_baseline.params, self.conv_pruned.params,
             self.conv_reduction_pct["params"]),
        ]
        for name, base, after, pct in rows:
            writer.writerow([name, base, after, f"{round_pct(pct):.2f}"])
        for name, base, after in [
            ("energy_total_pj", self.energy_baseline.total_pj,
             self.energy_pruned.total_pj),
            ("energy_total_mj", self.energy_baseline.total_pj / 1e9,
             self.energy_pruned.total_pj / 1e9),
        ]:
            pct = 0.0 if base == 0 else 100.0 * (1.0 - after / base)
            writer.writerow([name, repr(base), repr(after), f"{round_pct(pct):.2f}"])
        if self.accuracy_delta_pct is not None:
            writer.writerow(["accuracy_delta_pct", "", "",
                             f"{round_pct(self.accuracy_delta_pct):.2f}"])
        return buf.getvalue()


def reduction_report(
    baseline: ComplexityProfile,
    pruned: ComplexityProfile,
    training_results: dict | None = None,
) -> ReductionReport:
    """Compare two profiles; optionally merge accuracy from training metrics.

    ``training_results`` may carry ``baseline`` and ``pruned`` metrics
    documents (the training-harness JSON); the accuracy delta is filled in
    only when both are present.
    """
    if baseline.flops_factor != pruned.flops_factor:
        raise ValueError(
            f"profiles use different flops factors: "
            f"{baseline.flops_factor} vs {pruned.flops_factor}"
        )
    for key, value in baseline.totals.as_dict().items():
        if value == 0:
            raise ValueError(f"baseline total {key} is zero; nothing to compare")

    accuracy_delta = None
    if training_results:
        base_doc = training_results.get("baseline")
        pruned_doc = training_results.get("pruned")
        if base_doc is not None and pruned_doc is not None:
            accuracy_delta = 100.0 * (pruned_doc["accuracy"] - base_doc["accuracy"])

    return ReductionReport(
        baseline=baseline.totals,
        pruned=pruned.totals,
        reduction_pct=_reduction(baseline.totals, pruned.totals),
        conv_baseline=baseline.conv_totals,
        conv_pruned=pruned.conv_totals,
        conv_reduction_pct=_reduction(baseline.conv_totals, pruned.conv_totals),
        energy_baseline=energy_of(baseline.totals.flops, baseline.totals.memory_bytes),
        energy_pruned=energy_of(pruned.totals.flops, pruned.totals.memory_bytes),
        accuracy_delta_pct=accuracy_delta,
    )


def layer_breakdown(profile: ComplexityProfile) -> list[dict]:
    """Per-layer cost rows with share-of-total per currency.

    Only layers that cost anything appear (pooling, activations and friends
    are all-zero by definition and would just be noise).
    """
    rows = []
    totals = profile.totals
    for layer_id, cost in profile.per_layer.items():
        if cost.flops == 0 and cost.memory_bytes == 0 and cost.params == 0:
            continue
        rows.append({
            "id": layer_id,
            "flops": cost.flops,
            "memory_bytes": cost.memory_bytes,
            "params": cost.params,
            "flops_share": cost.flops / totals.flops if totals.flops else 0.0,
            "memory_share": (cost.memory_bytes / totals.memory_bytes
                             if totals.memory_bytes else 0.0),
            "params_share": cost.params / totals.params if totals.params else 0.0,
        })
    return rows


_BREAKDOWN_COLUMNS = ["id", "flops", "memory_bytes", "params",
                      "flops_share", "memory_share", "params_share"]


def breakdown_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_BREAKDOWN_COLUMNS)
    for row in rows:
        writer.writerow([
            row["id"], row["flops"], row["memory_bytes"], row["params"],
            repr(row["flops_share"]), repr(row["memory_share"]),
            repr(row["params_share"]),
        ])
    return buf.getvalue()


def breakdown_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"


def tradeoff_series(
    traces: list[PruneTrace], results: list[dict | None] | None = None
) -> list[dict]:
    """Flatten traces into per-iteration resource rows for external plotting.

    Every trace contributes a baseline row (iteration 0) followed by one row
    per step. When a metrics document is supplied for a trace, its accuracy
    lands on that trace's final row — the architecture that was trained.
    """
    if not traces:
        raise ValueError("no traces given")
    reference = traces[0]
    for trace in traces[1:]:
        if (trace.baseline_totals != reference.baseline_totals
                or trace.baseline_conv_totals != reference.baseline_conv_totals
                or trace.config.flops_factor != reference.config.flops_factor):
            raise ValueError("traces come from different baselines")
    if results is not None and len(results) != len(traces):
        raise ValueError(f"{len(results)} metrics documents for {len(traces)} traces")

    rows = []
    for index, trace in enumerate(traces):
        accuracy = None
        if results is not None and results[index] is not None:
            accuracy = results[index].get("accuracy")
        points = [(0, trace.baseline_totals)] + [
            (s.iteration, s.totals_after) for s in trace.steps
        ]
        for position, (iteration, totals) in enumerate(points):
            last = position == len(points) - 1
            rows.append({
                "iteration": iteration,
                "mode": trace.config.mode.value,
                "flops": totals.flops,
                "memory_bytes": totals.memory_bytes,
                "params": totals.params,
                "energy_total_pj": energy_of(totals.flops, totals.memory_bytes).total_pj,
                "accuracy": accuracy if last else None,
            })
    return rows


_SERIES_COLUMNS = ["iteration", "mode", "flops", "memory_bytes", "params",
                   "energy_total_pj", "accuracy"]


def series_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SERIES_COLUMNS)
    for row in rows:
        writer.writerow([
            row["iteration"], row["mode"], row["flops"], row["memory_bytes"],
            row["params"], repr(row["energy_total_pj"]),
            "" if row["accuracy"] is None else repr(row["accuracy"]),
        ])
    return buf.getvalue()


def series_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"
