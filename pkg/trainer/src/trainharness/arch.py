"""Architecture-document loading for the training harness.

The harness speaks the same JSON wire format the pruning tool emits
(format_version 1) but deliberately re-derives shapes on its own: any
disagreement between the two implementations should surface as a build-time
error, not be papered over by sharing code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

SUPPORTED_KINDS = {
    "input", "output", "conv", "depthwise_conv", "dense", "pool_max",
    "pool_avg", "global_avg_pool", "flatten", "add", "activation", "batchnorm",
}


class ArchitectureError(ValueError):
    pass


class UnsupportedLayerError(ArchitectureError):
    pass


@dataclass(frozen=True)
class LayerDoc:
    id: str
    kind: str
    out_channels: int | None
    kernel_size: int | None
    stride: int
    padding: int
    has_bias: bool


@dataclass(frozen=True)
class ArchDoc:
    input_shape: tuple[int, int, int]  # channels, width, height
    layers: tuple[LayerDoc, ...]
    producers: dict[str, tuple[str, ...]]

    def topo_order(self) -> list[str]:
        placed: set[str] = set()
        order: list[str] = []
        pending = {l.id for l in self.layers}
        while pending:
            ready = [l.id for l in self.layers
                     if l.id in pending and set(self.producers[l.id]) <= placed]
            if not ready:
                raise ArchitectureError("architecture graph contains a cycle")
            for layer_id in ready:
                order.append(layer_id)
                placed.add(layer_id)
                pending.discard(layer_id)
        return order


def load_arch(text: str) -> ArchDoc:
    doc = json.loads(text)
    if doc.get("format_version") != 1:
        raise ArchitectureError(
            f"unsupported format_version {doc.get('format_version')!r}")
    shape = doc["input_shape"]
    if len(shape) != 3 or any(not isinstance(v, int) or v < 1 for v in shape):
        raise ArchitectureError(f"bad input_shape {shape!r}")

    layers = []
    ids = set()
    for entry in doc["layers"]:
        kind = entry["kind"]
        if kind not in SUPPORTED_KINDS:
            raise UnsupportedLayerError(f"unsupported layer kind '{kind}'")
        if entry["id"] in ids:
            raise ArchitectureError(f"duplicate layer id '{entry['id']}'")
        ids.add(entry["id"])
        layers.append(LayerDoc(
            id=entry["id"],
            kind=kind,
            out_channels=entry.get("out_channels"),
            kernel_size=entry.get("kernel_size"),
            stride=entry.get("stride", 1),
            padding=entry.get("padding", 0),
            has_bias=entry.get("has_bias", False),
        ))

    producers: dict[str, list[str]] = {l.id: [] for l in layers}
    for producer, consumer in doc["edges"]:
        if producer not in ids or consumer not in ids:
            raise ArchitectureError(
                f"edge ({producer}, {consumer}) references an unknown layer")
        producers[consumer].append(producer)

    return ArchDoc(
        input_shape=tuple(shape),
        layers=tuple(layers),
        producers={k: tuple(v) for k, v in producers.items()},
    )
