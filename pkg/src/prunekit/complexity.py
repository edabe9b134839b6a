"""Cost accounting: FLOPs, weight-memory bytes, and parameter counts per layer.

All counts are exact integers. A conv layer costs C_in * k^2 * C_out
multiply-accumulates per output position; weight memory is 4 bytes per
parameter (32-bit). Reported FLOPs carry a configurable factor (2 counts
multiply and add separately, 1 counts raw MACs); the factor cancels out of
the sampling probabilities.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .graph import (
    CONV_KINDS,
    LayerKind,
    LayerSpec,
    NetworkGraph,
    ShapeError,
)

BYTES_PER_PARAM = 4
MIB = 2**20
PJ_PER_FLOP = 2.3
PJ_PER_MIB = 640.0


class Mode(str, enum.Enum):
    """Which cost currency drives sampling and the stop condition."""

    FLOPS = "flops"
    MEMORY = "memory"
    PARAMS = "params"


class CostTotals(NamedTuple):
    flops: int
    memory_bytes: int
    params: int

    def of(self, mode: Mode) -> int:
        if mode is Mode.FLOPS:
            return self.flops
        if mode is Mode.MEMORY:
            return self.memory_bytes
        return self.params

    def as_dict(self) -> dict[str, int]:
        return {"flops": self.flops, "memory_bytes": self.memory_bytes,
                "params": self.params}


def _require_resolved(layer: LayerSpec) -> None:
    if not layer.resolved:
        raise ShapeError(f"layer '{layer.id}' has unresolved shapes; "
                         "run propagate_shapes first")


def layer_params(layer: LayerSpec) -> int:
    """Weight count: C_in*k^2*C_out for conv, k^2*C_out depthwise, in*out dense."""
    if layer.kind not in (LayerKind.CONV, LayerKind.DEPTHWISE_CONV, LayerKind.DENSE):
        return 0
    _require_resolved(layer)
    if layer.kind is LayerKind.CONV:
        count = layer.in_channels * layer.kernel_size**2 * layer.out_channels
        return count + (layer.out_channels if layer.has_bias else 0)
    if layer.kind is LayerKind.DEPTHWISE_CONV:
        return layer.kernel_size**2 * layer.out_channels
    count = layer.in_channels * layer.out_channels
    return count + (layer.out_channels if layer.has_bias else 0)


def layer_memory_bytes(layer: LayerSpec) -> int:
    """Weight storage at 4 bytes per parameter."""
    return BYTES_PER_PARAM * layer_params(layer)


def layer_flops(layer: LayerSpec) -> int:
    """Multiply-accumulate count (unscaled; the reporting factor applies later)."""
    if layer.kind not in (LayerKind.CONV, LayerKind.DEPTHWISE_CONV, LayerKind.DENSE):
        return 0
    _require_resolved(layer)
    if layer.kind is LayerKind.DENSE:
        return layer.in_channels * layer.out_channels
    area = layer.out_spatial[0] * layer.out_spatial[1]
    if layer.kind is LayerKind.CONV:
        return layer.in_channels * layer.kernel_size**2 * layer.out_channels * area
    return layer.kernel_size**2 * layer.out_channels * area


@dataclass(frozen=True)
class ComplexityProfile:
    """Per-layer and total costs for one graph snapshot.

    ``totals`` covers the whole network; ``conv_totals`` covers only the
    convolutional layers (the pool the pruning loop can act on, and the sum
    the stop condition is measured against).
    """

    per_layer: dict[str, CostTotals]
    totals: CostTotals
    conv_totals: CostTotals
    flops_factor: int

    def to_json(self) -> str:
        doc = {
            "per_layer": {lid: c.as_dict() for lid, c in self.per_layer.items()},
            "totals": self.totals.as_dict(),
            "conv_totals": self.conv_totals.as_dict(),
            "flops_factor": self.flops_factor,
        }
        return json.dumps(doc, indent=2) + "\n"


def network_complexity(graph: NetworkGraph, flops_factor: int = 2) -> ComplexityProfile:
    """Profile every layer; reported FLOPs are scaled by ``flops_factor``."""
    if flops_factor not in (1, 2):
        raise ValueError(f"flops_factor must be 1 or 2, got {flops_factor}")
    per_layer: dict[str, CostTotals] = {}
    total = [0, 0, 0]
    conv = [0, 0, 0]
    for spec in graph.layers:
        cost = CostTotals(
            flops=flops_factor * layer_flops(spec),
            memory_bytes=layer_memory_bytes(spec),
            params=layer_params(spec),
        )
        per_layer[spec.id] = cost
        for i in range(3):
            total[i] += cost[i]
        if spec.kind in CONV_KINDS:
            for i in range(3):
                conv[i] += cost[i]
    return ComplexityProfile(
        per_layer=per_layer,
        totals=CostTotals(*total),
        conv_totals=CostTotals(*conv),
        flops_factor=flops_factor,
    )


@dataclass(frozen=True)
class WeightVector:
    """Sampling distribution over prunable layers: P_k = w_k / sum(w).

    ``entries`` is insertion-ordered (graph layer order); treat as immutable.
    """

    entries: dict[str, float]

    def __post_init__(self):
        total = sum(self.entries.values())
        if self.entries and abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, not 1")


def relative_weights(
    profile: ComplexityProfile, mode: Mode, prunable_ids: Iterable[str]
) -> WeightVector:
    """Normalize the selected currency over the given layers into probabilities."""
    wanted = set(prunable_ids)
    unknown = wanted - set(profile.per_layer)
    if unknown:
        raise ValueError(f"layers not in profile: {sorted(unknown)}")
    ids = [lid for lid in profile.per_layer if lid in wanted]
    if not ids:
        raise ValueError("no prunable layers given")
    raw = {lid: profile.per_layer[lid].of(mode) for lid in ids}
    total = sum(raw.values())
    if total == 0:
        raise ValueError(f"all prunable layers have zero {mode.value} weight")
    return WeightVector({lid: w / total for lid, w in raw.items()})


@dataclass(frozen=True)
class EnergyEstimate:
    compute_pj: float
    access_pj: float

    @property
    def total_pj(self) -> float:
        return self.compute_pj + self.access_pj

    def as_dict(self) -> dict[str, float]:
        return {
            "compute_pj": self.compute_pj,
            "access_pj": self.access_pj,
            "total_pj": self.total_pj,
            "total_mj": self.total_pj / 1e9,
            "pj_per_flop": PJ_PER_FLOP,
            "pj_per_mib": PJ_PER_MIB,
        }


def energy_of(flops: int, memory_bytes: int) -> EnergyEstimate:
    """Inference-energy model: 2.3 pJ per 32-bit FLOP, 640 pJ per MiB fetched."""
    return EnergyEstimate(
        compute_pj=flops * PJ_PER_FLOP,
        access_pj=(memory_bytes / MIB) * PJ_PER_MIB,
    )


def energy_estimate(profile: ComplexityProfile) -> EnergyEstimate:
    return energy_of(profile.totals.flops, profile.totals.memory_bytes)
