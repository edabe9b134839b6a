"""JSON interchange format for architecture graphs (format_version 1).

One UTF-8 object: ``input_shape`` [C, W, H], a ``layers`` list, ``edges``
pairs, and ``channel_groups``. Parsing is strict (unknown keys and fields a
kind does not support are rejected, with the offending path in the message)
and leaves derived fields unresolved; ``propagate_shapes`` fills them in.
Serialization is canonical — fixed key order, every supported field written
out — so equal graphs produce byte-equal documents.
"""

from __future__ import annotations

import json

from .graph import (
    ChannelGroup,
    GroupReason,
    LayerKind,
    LayerSpec,
    NetworkGraph,
)

FORMAT_VERSION = 1


class SchemaError(ValueError):
    """Document violates the architecture schema; message names field and path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# Per-kind document fields beyond id/kind. True marks a required field.
_KIND_FIELDS: dict[LayerKind, dict[str, bool]] = {
    LayerKind.CONV: {
        "out_channels": True, "kernel_size": True, "stride": False,
        "padding": False, "prunable": False, "protected": False, "has_bias": False,
    },
    LayerKind.DEPTHWISE_CONV: {
        "kernel_size": True, "stride": False, "padding": False, "protected": False,
    },
    LayerKind.DENSE: {"out_channels": True, "has_bias": False},
    LayerKind.POOL_MAX: {"kernel_size": True, "stride": False, "padding": False},
    LayerKind.POOL_AVG: {"kernel_size": True, "stride": False, "padding": False},
    LayerKind.GLOBAL_AVG_POOL: {},
    LayerKind.FLATTEN: {},
    LayerKind.ADD: {},
    LayerKind.ACTIVATION: {},
    LayerKind.BATCHNORM: {},
    LayerKind.INPUT: {},
    LayerKind.OUTPUT: {},
}


def _expect_int(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    if value < minimum:
        raise SchemaError(path, f"must be >= {minimum}, got {value}")
    return value


def _expect_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected a boolean, got {type(value).__name__}")
    return value


def _expect_str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(path, "expected a non-empty string")
    return value


def parse_architecture(document: str) -> NetworkGraph:
    """Parse an architecture document into an unresolved NetworkGraph."""
    try:
        root = json.loads(document)
    except json.JSONDecodeError as err:
        raise SchemaError("$", f"invalid JSON: {err}") from None
    if not isinstance(root, dict):
        raise SchemaError("$", "document root must be an object")

    allowed_root = {"format_version", "input_shape", "layers", "edges", "channel_groups"}
    for key in root:
        if key not in allowed_root:
            raise SchemaError(f"$.{key}", "unknown field")
    for key in ("format_version", "input_shape", "layers", "edges"):
        if key not in root:
            raise SchemaError(f"$.{key}", "required field missing")
    if root["format_version"] != FORMAT_VERSION:
        raise SchemaError("$.format_version",
                          f"unsupported version {root['format_version']!r}")

    shape = root["input_shape"]
    if not isinstance(shape, list) or len(shape) != 3:
        raise SchemaError("$.input_shape", "expected [channels, width, height]")
    input_shape = tuple(
        _expect_int(v, f"$.input_shape[{i}]", 1) for i, v in enumerate(shape)
    )

    if not isinstance(root["layers"], list) or not root["layers"]:
        raise SchemaError("$.layers", "expected a non-empty list")
    layers: list[LayerSpec] = []
    ids: set[str] = set()
    for i, entry in enumerate(root["layers"]):
        path = f"$.layers[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(path, "expected an object")
        layer_id = _expect_str(entry.get("id"), f"{path}.id")
        if layer_id in ids:
            raise SchemaError(f"{path}.id", f"duplicate layer id '{layer_id}'")
        ids.add(layer_id)
        kind_name = _expect_str(entry.get("kind"), f"{path}.kind")
        try:
            kind = LayerKind(kind_name)
        except ValueError:
            raise SchemaError(f"{path}.kind", f"unknown layer kind '{kind_name}'") from None

        fields = _KIND_FIELDS[kind]
        for key in entry:
            if key in ("id", "kind"):
                continue
            if key not in fields:
                raise SchemaError(f"{path}.{key}",
                                  f"field not allowed for kind '{kind.value}'")
        for key, required in fields.items():
            if required and key not in entry:
                raise SchemaError(f"{path}.{key}",
                                  f"required for kind '{kind.value}'")

        protected = (
            _expect_bool(entry["protected"], f"{path}.protected")
            if "protected" in entry else False
        )
        if "prunable" in entry:
            prunable = _expect_bool(entry["prunable"], f"{path}.prunable")
            if prunable and protected:
                raise SchemaError(f"{path}.prunable",
                                  "a protected layer cannot be prunable")
        else:
            prunable = kind is LayerKind.CONV and not protected
        layers.append(LayerSpec(
            id=layer_id,
            kind=kind,
            out_channels=(
                _expect_int(entry["out_channels"], f"{path}.out_channels", 1)
                if "out_channels" in entry else None
            ),
            kernel_size=(
                _expect_int(entry["kernel_size"], f"{path}.kernel_size", 1)
                if "kernel_size" in entry else None
            ),
            stride=_expect_int(entry.get("stride", 1), f"{path}.stride", 1),
            padding=_expect_int(entry.get("padding", 0), f"{path}.padding", 0),
            prunable=prunable,
            protected=protected,
            has_bias=(
                _expect_bool(entry["has_bias"], f"{path}.has_bias")
                if "has_bias" in entry else False
            ),
        ))

    if not isinstance(root["edges"], list):
        raise SchemaError("$.edges", "expected a list")
    edges: list[tuple[str, str]] = []
    for i, pair in enumerate(root["edges"]):
        path = f"$.edges[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(path, "expected [producer_id, consumer_id]")
        producer = _expect_str(pair[0], f"{path}[0]")
        consumer = _expect_str(pair[1], f"{path}[1]")
        for endpoint in (producer, consumer):
            if endpoint not in ids:
                raise SchemaError(path, f"edge references unknown layer '{endpoint}'")
        if producer == consumer:
            raise SchemaError(path, f"self-edge on layer '{producer}'")
        edges.append((producer, consumer))

    groups: list[ChannelGroup] = []
    for i, entry in enumerate(root.get("channel_groups", [])):
        path = f"$.channel_groups[{i}]"
        if not isinstance(entry, dict) or set(entry) != {"members", "reason"}:
            raise SchemaError(path, "expected {members, reason}")
        members = entry["members"]
        if not isinstance(members, list) or len(members) < 2:
            raise SchemaError(f"{path}.members", "expected at least two layer ids")
        for j, member in enumerate(members):
            member_id = _expect_str(member, f"{path}.members[{j}]")
            if member_id not in ids:
                raise SchemaError(f"{path}.members[{j}]",
                                  f"unknown layer '{member_id}'")
        try:
            reason = GroupReason(entry["reason"])
        except ValueError:
            raise SchemaError(f"{path}.reason",
                              f"unknown reason '{entry['reason']}'") from None
        groups.append(ChannelGroup(frozenset(members), reason))

    return NetworkGraph(
        layers=tuple(layers),
        edges=tuple(edges),
        channel_groups=tuple(groups),
        input_shape=input_shape,  # type: ignore[arg-type]
    )


def serialize_architecture(graph: NetworkGraph) -> str:
    """Render a graph as its canonical JSON document (deterministic bytes)."""
    if graph.input_shape is None:
        raise ValueError("graph has no input shape to serialize")
    layers = []
    for spec in graph.layers:
        entry: dict = {"id": spec.id, "kind": spec.kind.value}
        fields = _KIND_FIELDS[spec.kind]
        if "out_channels" in fields:
            entry["out_channels"] = spec.out_channels
        if "kernel_size" in fields:
            entry["kernel_size"] = spec.kernel_size
            entry["stride"] = spec.stride
            entry["padding"] = spec.padding
        if "prunable" in fields:
            entry["prunable"] = spec.prunable
        if "protected" in fields:
            entry["protected"] = spec.protected
        if "has_bias" in fields:
            entry["has_bias"] = spec.has_bias
        layers.append(entry)

    doc = {
        "format_version": FORMAT_VERSION,
        "input_shape": list(graph.input_shape),
        "layers": layers,
        "edges": [[p, c] for p, c in graph.edges],
        "channel_groups": [
            {"members": sorted(g.members), "reason": g.reason.value}
            for g in graph.channel_groups
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def same_structure(a: NetworkGraph, b: NetworkGraph) -> bool:
    """Structural equality: identical canonical documents (derived fields ignored)."""
    return serialize_architecture(a) == serialize_architecture(b)
