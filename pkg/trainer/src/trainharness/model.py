"""Torch models built layer-for-layer from architecture documents.

Conventions (the document carries topology only): ReLU follows every conv
and depthwise conv and every dense layer except the classifier head, which
stays linear — the softmax lives in the cross-entropy loss. Batchnorm layers
are built without affine parameters so the framework parameter count matches
the pruning tool's accounting exactly (it books batchnorm at zero).
"""

from __future__ import annotations

import torch
from torch import nn

from .arch import ArchDoc, ArchitectureError, LayerDoc


def _window(extent: int, kernel: int, stride: int, padding: int) -> int:
    span = extent + 2 * padding - kernel
    if span < 0:
        raise ArchitectureError(
            f"kernel {kernel} does not fit extent {extent} with padding {padding}")
    return span // stride + 1


class ArchModel(nn.Module):
    """Executable network mirroring one architecture document."""

    def __init__(self, doc: ArchDoc):
        super().__init__()
        self.doc = doc
        self.order = doc.topo_order()
        self.ops = nn.ModuleDict()
        self._final_dense = self._classifier_head()

        shapes: dict[str, tuple[int, int, int]] = {}  # id -> (C, W, H)
        by_id = {l.id: l for l in doc.layers}
        for layer_id in self.order:
            layer = by_id[layer_id]
            prods = [shapes[p] for p in doc.producers[layer_id]]
            shapes[layer_id] = self._build(layer, prods)

    def _classifier_head(self) -> str | None:
        dense_ids = [l.id for l in self.doc.layers if l.kind == "dense"]
        if not dense_ids:
            return None
        consumed_kinds = {
            l.id: [k.kind for k in self.doc.layers
                   if l.id in self.doc.producers[k.id]]
            for l in self.doc.layers
        }
        # the head is the dense layer nothing but the output sink consumes
        for dense_id in dense_ids:
            if all(kind == "output" for kind in consumed_kinds[dense_id]):
                return dense_id
        return dense_ids[-1]

    def _build(self, layer: LayerDoc,
               prods: list[tuple[int, int, int]]) -> tuple[int, int, int]:
        if layer.kind == "input":
            if prods:
                raise ArchitectureError("input layer cannot have producers")
            return self.doc.input_shape
        if not prods:
            raise ArchitectureError(f"layer '{layer.id}' has no producer")
        if layer.kind == "add":
            if len(set(prods)) != 1:
                raise ArchitectureError(
                    f"add '{layer.id}' receives mismatched shapes {prods}")
            return prods[0]
        if len(prods) != 1:
            raise ArchitectureError(f"layer '{layer.id}' needs exactly one producer")
        c, w, h = prods[0]

        if layer.kind == "conv":
            self.ops[layer.id] = nn.Conv2d(
                c, layer.out_channels, layer.kernel_size, stride=layer.stride,
                padding=layer.padding, bias=layer.has_bias)
            return (layer.out_channels,
                    _window(w, layer.kernel_size, layer.stride, layer.padding),
                    _window(h, layer.kernel_size, layer.stride, layer.padding))
        if layer.kind == "depthwise_conv":
            self.ops[layer.id] = nn.Conv2d(
                c, c, layer.kernel_size, stride=layer.stride,
                padding=layer.padding, groups=c, bias=False)
            return (c, _window(w, layer.kernel_size, layer.stride, layer.padding),
                    _window(h, layer.kernel_size, layer.stride, layer.padding))
        if layer.kind == "dense":
            if (w, h) != (1, 1):
                raise ArchitectureError(
                    f"dense '{layer.id}' needs a flattened producer, got {w}x{h}")
            self.ops[layer.id] = nn.Linear(c, layer.out_channels,
                                           bias=layer.has_bias)
            return (layer.out_channels, 1, 1)
        if layer.kind == "pool_max":
            self.ops[layer.id] = nn.MaxPool2d(layer.kernel_size, layer.stride,
                                              layer.padding)
            return (c, _window(w, layer.kernel_size, layer.stride, layer.padding),
                    _window(h, layer.kernel_size, layer.stride, layer.padding))
        if layer.kind == "pool_avg":
            self.ops[layer.id] = nn.AvgPool2d(layer.kernel_size, layer.stride,
                                              layer.padding)
            return (c, _window(w, layer.kernel_size, layer.stride, layer.padding),
                    _window(h, layer.kernel_size, layer.stride, layer.padding))
        if layer.kind == "global_avg_pool":
            self.ops[layer.id] = nn.AdaptiveAvgPool2d(1)
            return (c, 1, 1)
        if layer.kind == "flatten":
            return (c * w * h, 1, 1)
        if layer.kind == "batchnorm":
            # affine=False keeps it parameter-free, matching the cost model
            self.ops[layer.id] = nn.BatchNorm2d(c, affine=False)
            return (c, w, h)
        if layer.kind in ("activation", "output"):
            return (c, w, h)
        raise ArchitectureError(f"unhandled kind '{layer.kind}'")

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        by_id = {l.id: l for l in self.doc.layers}
        values: dict[str, torch.Tensor] = {}
        out = x
        for layer_id in self.order:
            layer = by_id[layer_id]
            prods = self.doc.producers[layer_id]
            if layer.kind == "input":
                value = x
            elif layer.kind == "add":
                value = values[prods[0]]
                for other in prods[1:]:
                    value = value + values[other]
            elif layer.kind == "flatten":
                value = torch.flatten(values[prods[0]], 1)
            elif layer.kind in ("activation",):
                value = torch.relu(values[prods[0]])
            elif layer.kind == "output":
                value = values[prods[0]]
            elif layer.kind == "dense":
                value = self.ops[layer_id](torch.flatten(values[prods[0]], 1))
                if layer_id != self._final_dense:
                    value = torch.relu(value)
            else:
                value = self.ops[layer_id](values[prods[0]])
                if layer.kind in ("conv", "depthwise_conv"):
                    value = torch.relu(value)
            values[layer_id] = value
            out = value
        return out


def build_model(doc: ArchDoc) -> ArchModel:
    return ArchModel(doc)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
