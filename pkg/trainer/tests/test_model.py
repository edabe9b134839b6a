import json

import pytest
import torch

import trainharness as th

from conftest import engine_totals, export_arch

ZOO = ["fig3_toy", "vgg16_cifar10", "alexnet_cifar100", "resnet50_cifar100",
       "mobilenetv2_cifar10"]


@pytest.mark.parametrize("name", ZOO)
def test_parameter_agreement_with_engine(name):
    model = th.build_model(th.load_arch(export_arch(name)))
    assert th.parameter_count(model) == engine_totals(name)["params"]


@pytest.mark.parametrize("name", ZOO)
def test_forward_pass(name):
    model = th.build_model(th.load_arch(export_arch(name)))
    out = model(torch.zeros(2, 3, 32, 32))
    assert out.shape[0] == 2
    assert torch.isfinite(out).all()


def test_pruned_arch_agreement(pruned_vgg):
    model = th.build_model(th.load_arch(pruned_vgg.read_text()))
    assert th.parameter_count(model) == engine_totals(str(pruned_vgg))["params"]
    out = model(torch.zeros(4, 3, 32, 32))
    assert out.shape == (4, 10)


def test_unsupported_kind_rejected():
    doc = json.dumps({
        "format_version": 1, "input_shape": [3, 32, 32],
        "layers": [{"id": "input", "kind": "input"}, {"id": "r", "kind": "rnn"}],
        "edges": [["input", "r"]],
    })
    with pytest.raises(th.UnsupportedLayerError, match="rnn"):
        th.load_arch(doc)


def test_batchnorm_adds_no_parameters():
    base = {
        "format_version": 1, "input_shape": [3, 8, 8],
        "layers": [
            {"id": "input", "kind": "input"},
            {"id": "conv", "kind": "conv", "out_channels": 4, "kernel_size": 3,
             "stride": 1, "padding": 1, "prunable": True, "protected": False,
             "has_bias": False},
        ],
        "edges": [["input", "conv"]],
    }
    plain = th.build_model(th.load_arch(json.dumps(base)))
    with_bn = dict(base)
    with_bn["layers"] = base["layers"] + [{"id": "bn", "kind": "batchnorm"}]
    with_bn["edges"] = base["edges"] + [["conv", "bn"]]
    normed = th.build_model(th.load_arch(json.dumps(with_bn)))
    assert th.parameter_count(normed) == th.parameter_count(plain)


def test_bias_flag_respected():
    doc = {
        "format_version": 1, "input_shape": [3, 8, 8],
        "layers": [
            {"id": "input", "kind": "input"},
            {"id": "conv", "kind": "conv", "out_channels": 4, "kernel_size": 3,
             "stride": 1, "padding": 0, "prunable": True, "protected": False,
             "has_bias": True},
        ],
        "edges": [["input", "conv"]],
    }
    model = th.build_model(th.load_arch(json.dumps(doc)))
    assert th.parameter_count(model) == 3 * 9 * 4 + 4


def test_residual_add_actually_sums(monkeypatch):
    doc = export_arch("resnet50_cifar100")
    model = th.build_model(th.load_arch(doc))
    # two different inputs must give different outputs through the skip paths
    a = model(torch.full((1, 3, 32, 32), 0.1))
    b = model(torch.full((1, 3, 32, 32), 0.9))
    assert not torch.equal(a, b)


def test_shape_mismatch_detected():
    doc = json.dumps({
        "format_version": 1, "input_shape": [3, 8, 8],
        "layers": [
            {"id": "input", "kind": "input"},
            {"id": "fc", "kind": "dense", "out_channels": 4, "has_bias": False},
        ],
        "edges": [["input", "fc"]],
    })
    with pytest.raises(th.ArchitectureError, match="flattened"):
        th.build_model(th.load_arch(doc))
