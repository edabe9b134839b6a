import dataclasses

import pytest

import prunekit as pk
from prunekit.complexity import Mode, energy_of

from conftest import ZOO_NAMES, build, load
from reference import (
    layer_macs_oracle,
    layer_memory_oracle,
    layer_params_oracle,
)


def resolved_conv(c_in=3, kernel=3, c_out=64, spatial=(32, 32), bias=False):
    # padding keeps the spatial extent, so S_out equals the input extent
    return pk.LayerSpec(
        id="conv", kind=pk.LayerKind.CONV, out_channels=c_out, kernel_size=kernel,
        padding=(kernel - 1) // 2, in_channels=c_in, in_spatial=spatial,
        out_spatial=spatial, has_bias=bias,
    )


class TestLayerCosts:
    def test_flops_reference_case(self):
        layer = resolved_conv()
        assert pk.layer_flops(layer) == 1_769_472
        assert pk.layer_flops(layer) == layer_macs_oracle(layer)

    def test_flops_unit_conv(self):
        layer = resolved_conv(c_in=1, kernel=1, c_out=1, spatial=(1, 1))
        assert pk.layer_flops(layer) == 1

    def test_pool_costs_nothing(self):
        layer = pk.LayerSpec(
            id="p", kind=pk.LayerKind.POOL_MAX, kernel_size=2, stride=2,
            in_channels=8, out_channels=8, in_spatial=(8, 8), out_spatial=(4, 4),
        )
        assert pk.layer_flops(layer) == 0
        assert pk.layer_memory_bytes(layer) == 0
        assert pk.layer_params(layer) == 0

    def test_memory_reference_case(self):
        assert pk.layer_memory_bytes(resolved_conv()) == 6912

    def test_memory_single_parameter(self):
        layer = resolved_conv(c_in=1, kernel=1, c_out=1, spatial=(1, 1))
        assert pk.layer_memory_bytes(layer) == 4

    def test_activation_memory_zero(self):
        layer = pk.LayerSpec(id="a", kind=pk.LayerKind.ACTIVATION, in_channels=4,
                             out_channels=4, in_spatial=(8, 8), out_spatial=(8, 8))
        assert pk.layer_memory_bytes(layer) == 0

    def test_params_reference_case(self):
        assert pk.layer_params(resolved_conv()) == 1728

    def test_params_unit_conv(self):
        assert pk.layer_params(resolved_conv(c_in=1, kernel=1, c_out=1,
                                             spatial=(1, 1))) == 1

    def test_dense_with_bias(self):
        layer = pk.LayerSpec(
            id="fc", kind=pk.LayerKind.DENSE, out_channels=10, in_channels=512,
            in_spatial=(1, 1), out_spatial=(1, 1), has_bias=True,
        )
        assert pk.layer_params(layer) == 5130
        assert pk.layer_params(layer) == layer_params_oracle(layer)
        assert pk.layer_memory_bytes(layer) == 4 * 5130

    def test_conv_bias_counts(self):
        layer = resolved_conv(bias=True)
        assert pk.layer_params(layer) == 1728 + 64
        assert pk.layer_params(layer) == layer_params_oracle(layer)

    def test_unresolved_layer_rejected(self):
        bare = pk.LayerSpec(id="c", kind=pk.LayerKind.CONV, out_channels=4,
                            kernel_size=3)
        with pytest.raises(pk.ShapeError, match="unresolved"):
            pk.layer_flops(bare)


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_oracle_equivalence_all_zoo(name):
    """Closed forms match brute-force enumeration on every layer of every graph."""
    graph = build(name)
    for layer in graph.layers:
        assert pk.layer_flops(layer) == layer_macs_oracle(layer), layer.id
        assert pk.layer_params(layer) == layer_params_oracle(layer), layer.id
        assert pk.layer_memory_bytes(layer) == layer_memory_oracle(layer), layer.id


class TestNetworkComplexity:
    def test_toy_totals_match_oracle_sums(self, toy):
        profile = pk.network_complexity(toy, flops_factor=1)
        assert profile.totals.flops == sum(layer_macs_oracle(l) for l in toy.layers)
        assert profile.totals.params == sum(layer_params_oracle(l) for l in toy.layers)
        assert profile.totals.memory_bytes == sum(
            layer_memory_oracle(l) for l in toy.layers)

    def test_degenerate_graph_all_zero(self):
        graph = load(
            [{"id": "input", "kind": "input"}, {"id": "output", "kind": "output"}],
            [["input", "output"]],
        )
        profile = pk.network_complexity(graph)
        assert profile.totals == (0, 0, 0)

    def test_vgg_flops_near_reported_baseline(self, vgg):
        profile = pk.network_complexity(vgg, flops_factor=2)
        assert abs(profile.totals.flops - 6.61e8) <= 0.05 * 6.61e8

    def test_factor_scales_reported_flops_only(self, toy):
        one = pk.network_complexity(toy, flops_factor=1)
        two = pk.network_complexity(toy, flops_factor=2)
        assert two.totals.flops == 2 * one.totals.flops
        assert two.totals.memory_bytes == one.totals.memory_bytes
        assert two.totals.params == one.totals.params

    @pytest.mark.parametrize("name", ZOO_NAMES)
    def test_additivity_exact(self, name):
        profile = pk.network_complexity(build(name))
        sums = [0, 0, 0]
        for cost in profile.per_layer.values():
            for i in range(3):
                sums[i] += cost[i]
        assert tuple(sums) == profile.totals

    @pytest.mark.parametrize("name", ZOO_NAMES)
    def test_memory_is_four_bytes_per_param(self, name):
        profile = pk.network_complexity(build(name))
        for layer_id, cost in profile.per_layer.items():
            assert cost.memory_bytes == 4 * cost.params, layer_id

    def test_conv_subtotal_excludes_dense(self, vgg):
        profile = pk.network_complexity(vgg)
        dense = sum(pk.layer_params(l) for l in vgg.layers
                    if l.kind is pk.LayerKind.DENSE)
        assert profile.conv_totals.params == profile.totals.params - dense

    def test_bad_factor_rejected(self, toy):
        with pytest.raises(ValueError, match="flops_factor"):
            pk.network_complexity(toy, flops_factor=3)


class TestRelativeWeights:
    def test_pair_normalization(self):
        profile = pk.ComplexityProfile(
            per_layer={"a": pk.CostTotals(1, 1, 1), "b": pk.CostTotals(3, 3, 3)},
            totals=pk.CostTotals(4, 4, 4), conv_totals=pk.CostTotals(4, 4, 4),
            flops_factor=1,
        )
        weights = pk.relative_weights(profile, Mode.FLOPS, {"a", "b"})
        assert weights.entries == {"a": 0.25, "b": 0.75}

    def test_single_layer(self, toy):
        profile = pk.network_complexity(toy)
        weights = pk.relative_weights(profile, Mode.PARAMS, {"conv2"})
        assert weights.entries == {"conv2": 1.0}

    def test_toy_params_mode_matches_oracle_ratios(self, toy):
        profile = pk.network_complexity(toy)
        ids = ["conv1", "conv2", "conv3"]
        weights = pk.relative_weights(profile, Mode.PARAMS, ids)
        oracle = {l.id: layer_params_oracle(l) for l in toy.layers if l.id in ids}
        total = sum(oracle.values())
        for layer_id in ids:
            assert weights.entries[layer_id] == oracle[layer_id] / total

    def test_factor_invariance_exact(self, toy):
        ids = ["conv1", "conv2", "conv3"]
        one = pk.relative_weights(pk.network_complexity(toy, 1), Mode.FLOPS, ids)
        two = pk.relative_weights(pk.network_complexity(toy, 2), Mode.FLOPS, ids)
        assert one.entries == two.entries

    def test_positive_scaling_invariance(self):
        base = {"a": pk.CostTotals(6, 6, 6), "b": pk.CostTotals(10, 10, 10)}
        scaled = {k: pk.CostTotals(8 * v.flops, 8 * v.memory_bytes, 8 * v.params)
                  for k, v in base.items()}
        p1 = pk.ComplexityProfile(base, pk.CostTotals(16, 16, 16),
                                  pk.CostTotals(16, 16, 16), 1)
        p2 = pk.ComplexityProfile(scaled, pk.CostTotals(128, 128, 128),
                                  pk.CostTotals(128, 128, 128), 1)
        assert (pk.relative_weights(p1, Mode.PARAMS, {"a", "b"}).entries
                == pk.relative_weights(p2, Mode.PARAMS, {"a", "b"}).entries)

    @pytest.mark.parametrize("name", ZOO_NAMES)
    @pytest.mark.parametrize("mode", list(Mode))
    def test_probabilities_sum_to_one(self, name, mode):
        graph = build(name)
        profile = pk.network_complexity(graph)
        prunable = [l.id for l in graph.layers if l.prunable]
        weights = pk.relative_weights(profile, mode, prunable)
        assert abs(sum(weights.entries.values()) - 1.0) <= 1e-9

    def test_empty_prunable_rejected(self, toy):
        with pytest.raises(ValueError, match="no prunable"):
            pk.relative_weights(pk.network_complexity(toy), Mode.PARAMS, set())

    def test_all_zero_weights_rejected(self):
        profile = pk.ComplexityProfile(
            per_layer={"a": pk.CostTotals(0, 0, 0)},
            totals=pk.CostTotals(0, 0, 0), conv_totals=pk.CostTotals(0, 0, 0),
            flops_factor=1,
        )
        with pytest.raises(ValueError, match="zero"):
            pk.relative_weights(profile, Mode.PARAMS, {"a"})

    def test_unknown_layer_rejected(self, toy):
        with pytest.raises(ValueError, match="ghost"):
            pk.relative_weights(pk.network_complexity(toy), Mode.PARAMS, {"ghost"})

    def test_weight_vector_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            pk.WeightVector({"a": 0.5, "b": 0.2})


class TestEnergy:
    def test_compute_anchor(self):
        estimate = energy_of(10**9, 0)
        assert estimate.compute_pj == 2.3e9
        assert estimate.access_pj == 0.0

    def test_access_anchor(self):
        estimate = energy_of(0, 2**20)
        assert estimate.access_pj == 640.0

    def test_zero_profile(self):
        estimate = energy_of(0, 0)
        assert estimate.total_pj == 0.0

    def test_total_additive(self):
        estimate = energy_of(10**6, 5 * 2**20)
        assert estimate.total_pj == estimate.compute_pj + estimate.access_pj

    def test_profile_wrapper(self, toy):
        profile = pk.network_complexity(toy, 2)
        estimate = pk.energy_estimate(profile)
        assert estimate.compute_pj == profile.totals.flops * 2.3

    def test_export_embeds_constants(self):
        doc = energy_of(1, 1).as_dict()
        assert doc["pj_per_flop"] == 2.3
        assert doc["pj_per_mib"] == 640.0
