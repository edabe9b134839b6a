import functools
import json

import pytest

import prunekit as pk

ZOO_NAMES = [entry.name for entry in pk.zoo_entries()]


@functools.lru_cache(maxsize=None)
def build(name: str) -> pk.NetworkGraph:
    """Zoo graphs are immutable, so one build per session is safe to share."""
    return pk.builtin_arch(name)


@pytest.fixture(scope="session")
def toy():
    return build("fig3_toy")


@pytest.fixture(scope="session")
def vgg():
    return build("vgg16_cifar10")


def make_doc(layers, edges, input_shape=(3, 32, 32), groups=None) -> str:
    doc = {
        "format_version": 1,
        "input_shape": list(input_shape),
        "layers": layers,
        "edges": edges,
    }
    if groups is not None:
        doc["channel_groups"] = groups
    return json.dumps(doc)


def load(layers, edges, input_shape=(3, 32, 32), groups=None) -> pk.NetworkGraph:
    graph = pk.parse_architecture(make_doc(layers, edges, input_shape, groups))
    return pk.propagate_shapes(graph)
