"""Iterative complexity-driven filter pruning.

Each iteration re-profiles the current graph, samples one eligible conv layer
with probability proportional to its share of the chosen cost currency, and
removes a ratio of that layer's filters at uniformly random positions. The
loop stops once the convolutional-layer subtotal in the chosen currency drops
to the target budget, when no layer is left to prune, or at the iteration cap.

Randomness is fully reproducible: a single 64-bit seed feeds a numpy PCG64
generator. Layer choice inverts the cumulative weight sum on one unit-uniform
draw; filter positions come from a partial Fisher-Yates shuffle driven by
bounded integer draws. Equal (graph, config, seed) triples give equal traces.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .complexity import (
    CostTotals,
    Mode,
    WeightVector,
    network_complexity,
    relative_weights,
)
from .graph import (
    LayerKind,
    NetworkGraph,
    ShapeError,
    effectively_protected,
    remove_filters,
)


class Terminal(str, enum.Enum):
    TARGET_MET = "target_met"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


class NoEligibleLayerError(RuntimeError):
    """Every prunable layer is protected or already at the filter floor."""


@dataclass(frozen=True)
class PruneConfig:
    """Inputs of one pruning run.

    ``target_complexity`` is an absolute budget in the mode's unit (reported
    FLOPs at ``flops_factor``, weight bytes, or parameters), measured over the
    convolutional layers — the only pool the pruner can act on.
    """

    mode: Mode
    target_complexity: int
    prune_ratio: float
    seed: int
    min_filters: int = 1
    max_iterations: int = 10_000
    flops_factor: int = 2

    def __post_init__(self):
        if not 0.0 < self.prune_ratio < 1.0:
            raise ValueError(f"prune_ratio must be in (0, 1), got {self.prune_ratio}")
        if self.min_filters < 1:
            raise ValueError("min_filters must be >= 1")
        if self.target_complexity < 0:
            raise ValueError("target_complexity must be >= 0")
        if self.flops_factor not in (1, 2):
            raise ValueError("flops_factor must be 1 or 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def as_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "target_complexity": self.target_complexity,
            "prune_ratio": self.prune_ratio,
            "seed": self.seed,
            "min_filters": self.min_filters,
            "max_iterations": self.max_iterations,
            "flops_factor": self.flops_factor,
        }


@dataclass(frozen=True)
class PruneStep:
    iteration: int
    layer_id: str
    weights: WeightVector
    removed_indices: tuple[int, ...]
    totals_after: CostTotals
    conv_totals_after: CostTotals


@dataclass(frozen=True)
class PruneTrace:
    config: PruneConfig
    baseline_totals: CostTotals
    baseline_conv_totals: CostTotals
    steps: tuple[PruneStep, ...]
    terminal: Terminal


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_layer(weights: WeightVector, rng: np.random.Generator) -> str:
    """Draw one layer id with probability equal to its weight entry.

    Cumulative-sum inversion: walk the entries in order, accumulate, and pick
    the first layer whose running sum exceeds a single uniform draw. Layers
    with zero weight can never be selected.
    """
    if not weights.entries:
        raise ValueError("empty weight vector")
    draw = rng.random()
    acc = 0.0
    chosen = None
    for layer_id, probability in weights.entries.items():
        if probability <= 0.0:
            continue
        chosen = layer_id
        acc += probability
        if draw < acc:
            return layer_id
    if chosen is None:
        raise ValueError("weight vector has no positive entry")
    return chosen  # float round-off left the cumulative sum a hair under 1


def sample_indices(rng: np.random.Generator, total: int, take: int) -> tuple[int, ...]:
    """``take`` distinct uniform positions in [0, total): partial Fisher-Yates."""
    pool = list(range(total))
    for i in range(take):
        j = int(rng.integers(i, total))
        pool[i], pool[j] = pool[j], pool[i]
    return tuple(sorted(pool[:take]))


def eligible_layers(graph: NetworkGraph, min_filters: int) -> list[str]:
    """Prunable, unprotected conv layers with filters left above the floor."""
    out = []
    for spec in graph.layers:
        if spec.kind is not LayerKind.CONV or not spec.prunable:
            continue
        if spec.out_channels is None or spec.out_channels <= min_filters:
            continue
        if effectively_protected(graph, spec.id):
            continue
        out.append(spec.id)
    return out


def prune_step(
    graph: NetworkGraph,
    config: PruneConfig,
    rng: np.random.Generator,
    iteration: int = 1,
) -> tuple[NetworkGraph, PruneStep]:
    """One pruning iteration: re-weight, sample a layer, remove filters."""
    eligible = eligible_layers(graph, config.min_filters)
    if not eligible:
        raise NoEligibleLayerError(
            "no prunable layer left above the filter floor")
    profile = network_complexity(graph, config.flops_factor)
    weights = relative_weights(profile, config.mode, eligible)
    layer_id = sample_layer(weights, rng)

    filters = graph.layer(layer_id).out_channels
    count = max(1, math.floor(config.prune_ratio * filters))
    count = min(count, filters - config.min_filters)
    indices = sample_indices(rng, filters, count)

    pruned = remove_filters(graph, layer_id, indices)
    after = network_complexity(pruned, config.flops_factor)
    step = PruneStep(
        iteration=iteration,
        layer_id=layer_id,
        weights=weights,
        removed_indices=indices,
        totals_after=after.totals,
        conv_totals_after=after.conv_totals,
    )
    return pruned, step


def prune_to_target(
    graph: NetworkGraph, config: PruneConfig
) -> tuple[NetworkGraph, PruneTrace]:
    """Run the pruning loop until the budget, infeasibility, or the cap.

    A target at or above the baseline returns the graph unchanged with an
    empty, ``target_met`` trace. The last step may overshoot the target;
    there is no backtracking.
    """
    if not graph.resolved:
        raise ShapeError("graph must be shape-resolved before pruning")
    baseline = network_complexity(graph, config.flops_factor)
    rng = make_rng(config.seed)
    steps: list[PruneStep] = []
    current = baseline.conv_totals.of(config.mode)

    terminal = Terminal.TARGET_MET
    while current > config.target_complexity:
        if len(steps) >= config.max_iterations:
            terminal = Terminal.MAX_ITERATIONS
            break
        try:
            graph, step = prune_step(graph, config, rng, iteration=len(steps) + 1)
        except NoEligibleLayerError:
            terminal = Terminal.INFEASIBLE
            break
        steps.append(step)
        current = step.conv_totals_after.of(config.mode)

    trace = PruneTrace(
        config=config,
        baseline_totals=baseline.totals,
        baseline_conv_totals=baseline.conv_totals,
        steps=tuple(steps),
        terminal=terminal,
    )
    return graph, trace


def _round12(p: float) -> float:
    return float(f"{p:.12g}")


def trace_to_json(trace: PruneTrace) -> str:
    doc = {
        "config": trace.config.as_dict(),
        "baseline": {
            "totals": trace.baseline_totals.as_dict(),
            "conv_totals": trace.baseline_conv_totals.as_dict(),
        },
        "terminal": trace.terminal.value,
        "steps": [
            {
                "iteration": s.iteration,
                "layer": s.layer_id,
                "weights": {lid: _round12(p) for lid, p in s.weights.entries.items()},
                "removed": list(s.removed_indices),
                "totals_after": s.totals_after.as_dict(),
                "conv_totals_after": s.conv_totals_after.as_dict(),
            }
            for s in trace.steps
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def trace_from_json(text: str) -> PruneTrace:
    doc = json.loads(text)
    config = PruneConfig(
        mode=Mode(doc["config"]["mode"]),
        target_complexity=doc["config"]["target_complexity"],
        prune_ratio=doc["config"]["prune_ratio"],
        seed=doc["config"]["seed"],
        min_filters=doc["config"]["min_filters"],
        max_iterations=doc["config"]["max_iterations"],
        flops_factor=doc["config"]["flops_factor"],
    )

    def totals(entry: dict) -> CostTotals:
        return CostTotals(entry["flops"], entry["memory_bytes"], entry["params"])

    steps = tuple(
        PruneStep(
            iteration=s["iteration"],
            layer_id=s["layer"],
            weights=WeightVector(dict(s["weights"])),
            removed_indices=tuple(s["removed"]),
            totals_after=totals(s["totals_after"]),
            conv_totals_after=totals(s["conv_totals_after"]),
        )
        for s in doc["steps"]
    )
    return PruneTrace(
        config=config,
        baseline_totals=totals(doc["baseline"]["totals"]),
        baseline_conv_totals=totals(doc["baseline"]["conv_totals"]),
        steps=steps,
        terminal=Terminal(doc["terminal"]),
    )
