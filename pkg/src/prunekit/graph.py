"""Architecture graph model: layer specs, shape inference, validation, filter removal.

A network is an immutable DAG of layer specs. Channel counts come in two
flavors: intrinsic ones (the filter count of a conv, the width of a dense
layer, the image depth at the input) and derived ones (everything shape
inference fills in). Filter removal only touches intrinsic counts and then
re-derives the rest, so a transformed graph cannot drift out of sync.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable


class LayerKind(str, enum.Enum):
    CONV = "conv"
    DEPTHWISE_CONV = "depthwise_conv"
    DENSE = "dense"
    POOL_MAX = "pool_max"
    POOL_AVG = "pool_avg"
    GLOBAL_AVG_POOL = "global_avg_pool"
    FLATTEN = "flatten"
    ADD = "add"
    ACTIVATION = "activation"
    BATCHNORM = "batchnorm"
    INPUT = "input"
    OUTPUT = "output"


class GroupReason(str, enum.Enum):
    RESIDUAL_ADD = "residual_add"
    DEPTHWISE_TIE = "depthwise_tie"


# Kinds with a sliding window (kernel/stride/padding apply).
WINDOWED_KINDS = frozenset(
    {LayerKind.CONV, LayerKind.DEPTHWISE_CONV, LayerKind.POOL_MAX, LayerKind.POOL_AVG}
)
# Kinds that carry weights and therefore cost anything.
PARAMETRIC_KINDS = frozenset({LayerKind.CONV, LayerKind.DEPTHWISE_CONV, LayerKind.DENSE})
# Kinds treated as convolutional layers by the complexity accounting.
CONV_KINDS = frozenset({LayerKind.CONV, LayerKind.DEPTHWISE_CONV})


class GraphError(ValueError):
    """Structural problem with a graph (bad reference, arity, cycle)."""


class ShapeError(GraphError):
    """Shape inference failed (kernel larger than input, add mismatch, unresolved)."""


class PruneError(GraphError):
    """Invalid filter-removal request (ineligible layer, bad indices)."""


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the network.

    ``out_channels`` is intrinsic for conv/dense/input layers and derived for
    every other kind; derived fields are None until ``propagate_shapes`` runs.
    Spatial extents are (width, height) pairs.
    """

    id: str
    kind: LayerKind
    out_channels: int | None = None
    kernel_size: int | None = None
    stride: int = 1
    padding: int = 0
    in_channels: int | None = None
    in_spatial: tuple[int, int] | None = None
    out_spatial: tuple[int, int] | None = None
    prunable: bool = False
    protected: bool = False
    has_bias: bool = False

    @property
    def resolved(self) -> bool:
        return (
            self.in_channels is not None
            and self.out_channels is not None
            and self.in_spatial is not None
            and self.out_spatial is not None
        )


@dataclass(frozen=True)
class ChannelGroup:
    """Layers whose output-channel counts must stay equal.

    ``residual_add`` groups are pruned in lockstep (or not at all when any
    member is protected); ``depthwise_tie`` groups document couplings that
    shape propagation maintains on its own.
    """

    members: frozenset[str]
    reason: GroupReason


@dataclass(frozen=True)
class Violation:
    layer_id: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def render(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"[{v.rule}] {v.layer_id}: {v.message}" for v in self.violations)


@dataclass(frozen=True)
class NetworkGraph:
    """Immutable CNN topology: ordered layers, edges, channel couplings."""

    layers: tuple[LayerSpec, ...]
    edges: tuple[tuple[str, str], ...]
    channel_groups: tuple[ChannelGroup, ...] = ()
    input_shape: tuple[int, int, int] | None = None

    def layer(self, layer_id: str) -> LayerSpec:
        for spec in self.layers:
            if spec.id == layer_id:
                return spec
        raise GraphError(f"no layer with id '{layer_id}'")

    def has_layer(self, layer_id: str) -> bool:
        return any(spec.id == layer_id for spec in self.layers)

    def producers(self, layer_id: str) -> tuple[str, ...]:
        return tuple(p for p, c in self.edges if c == layer_id)

    def consumers(self, layer_id: str) -> tuple[str, ...]:
        return tuple(c for p, c in self.edges if p == layer_id)

    def groups_of(self, layer_id: str) -> tuple[ChannelGroup, ...]:
        return tuple(g for g in self.channel_groups if layer_id in g.members)

    @property
    def resolved(self) -> bool:
        return all(spec.resolved for spec in self.layers)


def window_output(in_dim: int, kernel: int, stride: int, padding: int) -> int:
    """Output extent of a sliding window: floor((in + 2*pad - kernel)/stride) + 1."""
    span = in_dim + 2 * padding - kernel
    if span < 0:
        raise ShapeError(
            f"kernel {kernel} larger than padded input {in_dim + 2 * padding}"
        )
    return span // stride + 1


def topological_order(graph: NetworkGraph) -> list[str]:
    """Layer ids in dependency order (stable w.r.t. layer declaration order)."""
    remaining = {spec.id: set(graph.producers(spec.id)) for spec in graph.layers}
    order: list[str] = []
    placed: set[str] = set()
    while remaining:
        ready = [spec.id for spec in graph.layers
                 if spec.id in remaining and remaining[spec.id] <= placed]
        if not ready:
            raise GraphError("graph contains a cycle")
        for layer_id in ready:
            order.append(layer_id)
            placed.add(layer_id)
            del remaining[layer_id]
    return order


def coupled_layers(graph: NetworkGraph, layer_id: str) -> frozenset[str]:
    """Transitive closure of residual-add coupling containing ``layer_id``."""
    closure = {layer_id}
    grew = True
    while grew:
        grew = False
        for group in graph.channel_groups:
            if group.reason is not GroupReason.RESIDUAL_ADD:
                continue
            if closure & group.members and not group.members <= closure:
                closure |= group.members
                grew = True
    return frozenset(closure)


def effectively_protected(graph: NetworkGraph, layer_id: str) -> bool:
    """True when the layer, or any layer channel-coupled to it, is protected."""
    if graph.layer(layer_id).protected:
        return True
    coupled = set(coupled_layers(graph, layer_id))
    grew = True
    while grew:  # protection crosses every coupling kind, transitively
        grew = False
        for group in graph.channel_groups:
            if coupled & group.members and not group.members <= coupled:
                coupled |= group.members
                grew = True
    return any(graph.layer(m).protected for m in coupled if graph.has_layer(m))


def propagate_shapes(
    graph: NetworkGraph, input_shape: tuple[int, int, int] | None = None
) -> NetworkGraph:
    """Resolve every derived channel count and spatial extent.

    Raises ShapeError when a window does not fit or an add junction receives
    mismatched shapes, GraphError on structural problems (arity, cycles).
    """
    shape = tuple(input_shape) if input_shape is not None else graph.input_shape
    if shape is None:
        raise ShapeError("no input shape given and graph carries none")
    in_c, in_w, in_h = shape

    inputs = [spec for spec in graph.layers if spec.kind is LayerKind.INPUT]
    if len(inputs) != 1:
        raise GraphError(f"expected exactly one input layer, found {len(inputs)}")

    for producer, consumer in graph.edges:
        for endpoint in (producer, consumer):
            if not graph.has_layer(endpoint):
                raise GraphError(f"edge references unknown layer '{endpoint}'")

    resolved: dict[str, LayerSpec] = {}
    for layer_id in topological_order(graph):
        spec = graph.layer(layer_id)
        prods = [resolved[p] for p in graph.producers(layer_id)]
        if spec.kind is LayerKind.INPUT:
            if prods:
                raise GraphError(f"input layer '{layer_id}' has producers")
            resolved[layer_id] = replace(
                spec, in_channels=in_c, out_channels=in_c,
                in_spatial=(in_w, in_h), out_spatial=(in_w, in_h),
            )
            continue
        if not prods:
            raise GraphError(f"layer '{layer_id}' is not reachable from the input")
        if spec.kind is LayerKind.ADD:
            if len(prods) < 2:
                raise GraphError(f"add layer '{layer_id}' needs at least two producers")
            channels = {p.out_channels for p in prods}
            spatials = {p.out_spatial for p in prods}
            if len(channels) != 1 or len(spatials) != 1:
                raise ShapeError(
                    f"add layer '{layer_id}' receives mismatched inputs: "
                    + ", ".join(f"{p.id}={p.out_channels}x{p.out_spatial}" for p in prods)
                )
            resolved[layer_id] = replace(
                spec, in_channels=prods[0].out_channels, out_channels=prods[0].out_channels,
                in_spatial=prods[0].out_spatial, out_spatial=prods[0].out_spatial,
            )
            continue
        if len(prods) != 1:
            raise GraphError(
                f"layer '{layer_id}' ({spec.kind.value}) needs exactly one producer, "
                f"got {len(prods)}"
            )
        prod = prods[0]
        c_in, spatial_in = prod.out_channels, prod.out_spatial
        if spec.kind in WINDOWED_KINDS:
            try:
                out_w = window_output(spatial_in[0], spec.kernel_size, spec.stride, spec.padding)
                out_h = window_output(spatial_in[1], spec.kernel_size, spec.stride, spec.padding)
            except ShapeError as err:
                raise ShapeError(f"layer '{layer_id}': {err}") from None
            if spec.kind is LayerKind.CONV:
                if spec.out_channels is None:
                    raise GraphError(f"conv layer '{layer_id}' has no filter count")
                out_c = spec.out_channels
            elif spec.kind is LayerKind.DEPTHWISE_CONV:
                out_c = c_in
            else:
                out_c = c_in
            resolved[layer_id] = replace(
                spec, in_channels=c_in, out_channels=out_c,
                in_spatial=spatial_in, out_spatial=(out_w, out_h),
            )
        elif spec.kind is LayerKind.GLOBAL_AVG_POOL:
            resolved[layer_id] = replace(
                spec, in_channels=c_in, out_channels=c_in,
                in_spatial=spatial_in, out_spatial=(1, 1),
            )
        elif spec.kind is LayerKind.FLATTEN:
            resolved[layer_id] = replace(
                spec, in_channels=c_in,
                out_channels=c_in * spatial_in[0] * spatial_in[1],
                in_spatial=spatial_in, out_spatial=(1, 1),
            )
        elif spec.kind is LayerKind.DENSE:
            if spatial_in != (1, 1):
                raise ShapeError(
                    f"dense layer '{layer_id}' needs a flattened producer, "
                    f"got spatial {spatial_in} from '{prod.id}'"
                )
            if spec.out_channels is None:
                raise GraphError(f"dense layer '{layer_id}' has no width")
            resolved[layer_id] = replace(
                spec, in_channels=c_in, in_spatial=(1, 1), out_spatial=(1, 1),
            )
        else:  # activation, batchnorm, output: identity
            resolved[layer_id] = replace(
                spec, in_channels=c_in, out_channels=c_in,
                in_spatial=spatial_in, out_spatial=spatial_in,
            )

    layers = tuple(resolved[spec.id] for spec in graph.layers)
    return replace(graph, layers=layers, input_shape=(in_c, in_w, in_h))


def validate_graph(graph: NetworkGraph) -> ValidationReport:
    """Check every structural and shape invariant; violations are data, not errors."""
    out: list[Violation] = []

    seen: set[str] = set()
    for spec in graph.layers:
        if spec.id in seen:
            out.append(Violation(spec.id, "duplicate-id", "layer id appears twice"))
        seen.add(spec.id)

    for producer, consumer in graph.edges:
        for endpoint in (producer, consumer):
            if endpoint not in seen:
                out.append(Violation(endpoint, "dangling-edge",
                                     f"edge ({producer} -> {consumer}) references unknown layer"))

    inputs = [spec for spec in graph.layers if spec.kind is LayerKind.INPUT]
    if len(inputs) != 1:
        out.append(Violation("", "single-input",
                             f"expected exactly one input layer, found {len(inputs)}"))

    try:
        topological_order(graph)
        acyclic = True
    except GraphError:
        acyclic = False
        out.append(Violation("", "acyclic", "graph contains a cycle"))

    if acyclic and len(inputs) == 1:
        reachable = {inputs[0].id}
        frontier = [inputs[0].id]
        while frontier:
            nxt = [c for lid in frontier for c in graph.consumers(lid) if c not in reachable]
            reachable.update(nxt)
            frontier = nxt
        for spec in graph.layers:
            if spec.id not in reachable:
                out.append(Violation(spec.id, "reachable", "layer not reachable from input"))

    for spec in graph.layers:
        if spec.kind in WINDOWED_KINDS:
            if spec.kernel_size is None or spec.kernel_size < 1:
                out.append(Violation(spec.id, "kernel-size",
                                     f"{spec.kind.value} needs kernel_size >= 1"))
            if spec.stride < 1:
                out.append(Violation(spec.id, "stride", "stride must be >= 1"))
            if spec.padding < 0:
                out.append(Violation(spec.id, "padding", "padding must be >= 0"))
        if spec.out_channels is not None and spec.out_channels < 1:
            out.append(Violation(spec.id, "channel-count", "out_channels must be >= 1"))
        if spec.prunable and (spec.kind is not LayerKind.CONV or spec.protected):
            out.append(Violation(spec.id, "prunable-kind",
                                 "prunable requires kind conv and protected false"))
        if (spec.kind is LayerKind.DEPTHWISE_CONV and spec.resolved
                and spec.out_channels != spec.in_channels):
            out.append(Violation(spec.id, "depthwise-tie",
                                 f"depthwise out_channels {spec.out_channels} "
                                 f"!= in_channels {spec.in_channels}"))

    by_id = {spec.id: spec for spec in graph.layers}
    for producer, consumer in graph.edges:
        prod, cons = by_id.get(producer), by_id.get(consumer)
        if prod is None or cons is None:
            continue
        if prod.out_channels is not None and cons.in_channels is not None:
            if cons.in_channels != prod.out_channels:
                out.append(Violation(consumer, "channel-match",
                                     f"consumer '{consumer}' expects in_channels "
                                     f"{cons.in_channels} but producer '{producer}' "
                                     f"outputs {prod.out_channels}"))
        if (prod.out_spatial is not None and cons.in_spatial is not None
                and cons.kind is not LayerKind.INPUT
                and cons.in_spatial != prod.out_spatial):
            out.append(Violation(consumer, "spatial-chain",
                                 f"consumer '{consumer}' in_spatial {cons.in_spatial} "
                                 f"!= producer '{producer}' out_spatial {prod.out_spatial}"))

    for spec in graph.layers:
        if spec.kind is LayerKind.ADD:
            prods = [by_id[p] for p in graph.producers(spec.id) if p in by_id]
            counts = {p.out_channels for p in prods if p.out_channels is not None}
            if len(counts) > 1:
                out.append(Violation(spec.id, "add-mismatch",
                                     f"add '{spec.id}' branch channels differ: "
                                     + ", ".join(f"{p.id}={p.out_channels}" for p in prods)))
        if spec.kind in WINDOWED_KINDS and spec.resolved and spec.kernel_size:
            try:
                expect = (
                    window_output(spec.in_spatial[0], spec.kernel_size, spec.stride, spec.padding),
                    window_output(spec.in_spatial[1], spec.kernel_size, spec.stride, spec.padding),
                )
                if spec.out_spatial != expect:
                    out.append(Violation(spec.id, "spatial-formula",
                                         f"out_spatial {spec.out_spatial} != {expect}"))
            except ShapeError as err:
                out.append(Violation(spec.id, "positive-dims", str(err)))
        if spec.kind is LayerKind.FLATTEN and spec.resolved:
            prods = [by_id[p] for p in graph.producers(spec.id) if p in by_id]
            if len(prods) == 1 and prods[0].resolved:
                area = prods[0].out_spatial[0] * prods[0].out_spatial[1]
                if spec.out_channels != prods[0].out_channels * area:
                    out.append(Violation(spec.id, "flatten-length",
                                         f"flatten length {spec.out_channels} != "
                                         f"{prods[0].out_channels} x {area}"))

    for group in graph.channel_groups:
        missing = [m for m in group.members if m not in by_id]
        for m in missing:
            out.append(Violation(m, "group-member", "channel group references unknown layer"))
        counts = {by_id[m].out_channels for m in group.members
                  if m in by_id and by_id[m].out_channels is not None}
        if len(counts) > 1:
            out.append(Violation(next(iter(group.members)), "group-channels",
                                 f"coupled layers have unequal out_channels: {sorted(counts)}"))
        if group.reason is GroupReason.RESIDUAL_ADD:
            flags = {by_id[m].protected for m in group.members if m in by_id}
            if len(flags) > 1:
                out.append(Violation(next(iter(sorted(group.members))), "group-protection",
                                     "residual group mixes protected and unprotected layers"))

    return ValidationReport(tuple(out))


def remove_filters(
    graph: NetworkGraph, layer_id: str, filter_indices: Iterable[int]
) -> NetworkGraph:
    """Remove the given filters from a conv layer and re-derive the graph.

    Residual-coupled layers shrink in lockstep (same indices); consumers pick
    up the reduced channel counts through shape propagation, including dense
    layers behind a flatten.
    """
    spec = graph.layer(layer_id)
    if effectively_protected(graph, layer_id):
        raise PruneError(f"layer '{layer_id}' is protected (residual coupling)")
    if spec.kind is not LayerKind.CONV or not spec.prunable:
        raise PruneError(f"layer '{layer_id}' is not prunable")
    if spec.out_channels is None:
        raise ShapeError(f"layer '{layer_id}' has no resolved filter count")

    indices = sorted({int(i) for i in filter_indices})
    if not indices:
        raise PruneError("no filter indices given")
    if indices[0] < 0 or indices[-1] >= spec.out_channels:
        raise PruneError(
            f"filter indices out of range for layer '{layer_id}' "
            f"with {spec.out_channels} filters: {indices[0]}..{indices[-1]}"
        )
    if len(indices) >= spec.out_channels:
        raise PruneError(f"removing {len(indices)} filters would leave layer "
                         f"'{layer_id}' empty")

    targets = {
        m for m in coupled_layers(graph, layer_id)
        if graph.has_layer(m) and graph.layer(m).kind is LayerKind.CONV
    }
    for target in sorted(targets):
        if graph.layer(target).out_channels != spec.out_channels:
            raise PruneError(
                f"coupled layers '{layer_id}' and '{target}' have unequal filter counts"
            )

    removed = len(indices)
    layers = tuple(
        replace(l, out_channels=l.out_channels - removed) if l.id in targets else l
        for l in graph.layers
    )
    return propagate_shapes(replace(graph, layers=layers), graph.input_shape)
