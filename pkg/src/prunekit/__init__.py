"""prunekit: complexity-driven structured filter pruning for CNN architectures."""

__version__ = "0.1.0"

from .complexity import (
    ComplexityProfile,
    CostTotals,
    EnergyEstimate,
    Mode,
    WeightVector,
    energy_estimate,
    energy_of,
    layer_flops,
    layer_memory_bytes,
    layer_params,
    network_complexity,
    relative_weights,
)
from .graph import (
    ChannelGroup,
    GraphError,
    GroupReason,
    LayerKind,
    LayerSpec,
    NetworkGraph,
    PruneError,
    ShapeError,
    ValidationReport,
    propagate_shapes,
    remove_filters,
    validate_graph,
)
from .pruner import (
    NoEligibleLayerError,
    PruneConfig,
    PruneStep,
    PruneTrace,
    Terminal,
    make_rng,
    prune_step,
    prune_to_target,
    sample_layer,
    trace_from_json,
    trace_to_json,
)
from .report import (
    ReductionReport,
    layer_breakdown,
    reduction_report,
    tradeoff_series,
)
from .schema import SchemaError, parse_architecture, serialize_architecture
from .zoo import UnknownArchitectureError, ZooEntry, builtin_arch, zoo_entries

__all__ = [
    "ChannelGroup", "ComplexityProfile", "CostTotals", "EnergyEstimate",
    "GraphError", "GroupReason", "LayerKind", "LayerSpec", "Mode",
    "NetworkGraph", "NoEligibleLayerError", "PruneConfig", "PruneError",
    "PruneStep", "PruneTrace", "ReductionReport", "SchemaError", "ShapeError",
    "Terminal", "UnknownArchitectureError", "ValidationReport", "WeightVector",
    "ZooEntry", "builtin_arch", "energy_estimate", "energy_of",
    "layer_breakdown", "layer_flops", "layer_memory_bytes", "layer_params",
    "make_rng", "network_complexity", "parse_architecture", "propagate_shapes",
    "prune_step", "prune_to_target", "reduction_report", "relative_weights",
    "remove_filters", "sample_layer", "serialize_architecture",
    "trace_from_json", "trace_to_json", "tradeoff_series", "validate_graph",
    "zoo_entries",
]
