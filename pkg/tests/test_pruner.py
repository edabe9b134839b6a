import collections

import pytest

import prunekit as pk
from prunekit.complexity import Mode
from prunekit.pruner import (
    NoEligibleLayerError,
    eligible_layers,
    make_rng,
    prune_step,
    sample_indices,
    sample_layer,
)

from conftest import build, load


def config(mode=Mode.PARAMS, target=0, ratio=0.1, seed=1, **kw):
    return pk.PruneConfig(mode=mode, target_complexity=target, prune_ratio=ratio,
                          seed=seed, **kw)


class TestSampleLayer:
    def test_degenerate_distribution(self):
        weights = pk.WeightVector({"a": 1.0})
        for seed in range(20):
            assert sample_layer(weights, make_rng(seed)) == "a"

    def test_zero_weight_never_selected(self):
        weights = pk.WeightVector({"a": 0.0, "b": 1.0})
        for seed in range(20):
            assert sample_layer(weights, make_rng(seed)) == "b"

    def test_empty_vector_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            sample_layer(pk.WeightVector({}), make_rng(0))

    def test_frequencies_converge(self):
        weights = pk.WeightVector({"a": 0.25, "b": 0.75})
        rng = make_rng(1234)
        n = 30_000
        hits = collections.Counter(sample_layer(weights, rng) for _ in range(n))
        assert abs(hits["a"] / n - 0.25) <= 0.015
        assert abs(hits["b"] / n - 0.75) <= 0.015

    def test_advances_rng_deterministically(self):
        weights = pk.WeightVector({"a": 0.5, "b": 0.5})
        r1, r2 = make_rng(9), make_rng(9)
        seq1 = [sample_layer(weights, r1) for _ in range(50)]
        seq2 = [sample_layer(weights, r2) for _ in range(50)]
        assert seq1 == seq2
        assert len(set(seq1)) == 2  # both sides actually get picked


class TestSampleIndices:
    def test_distinct_and_in_range(self):
        rng = make_rng(5)
        for _ in range(200):
            picked = sample_indices(rng, 64, 16)
            assert len(set(picked)) == 16
            assert all(0 <= i < 64 for i in picked)
            assert picked == tuple(sorted(picked))

    def test_covers_all_positions(self):
        rng = make_rng(11)
        seen = set()
        for _ in range(500):
            seen.update(sample_indices(rng, 10, 3))
        assert seen == set(range(10))

    def test_deterministic_per_seed(self):
        assert sample_indices(make_rng(3), 100, 10) == \
            sample_indices(make_rng(3), 100, 10)


def single_conv(filters=64):
    return load(
        [{"id": "input", "kind": "input"},
         {"id": "conv", "kind": "conv", "out_channels": filters,
          "kernel_size": 3, "padding": 1}],
        [["input", "conv"]],
    )


class TestPruneStep:
    def test_quarter_ratio_removes_sixteen(self):
        graph, step = prune_step(single_conv(64), config(ratio=0.25), make_rng(0))
        assert len(step.removed_indices) == 16
        assert graph.layer("conv").out_channels == 48

    def test_floor_rule_minimum_one(self):
        graph, step = prune_step(single_conv(3), config(ratio=0.1), make_rng(0))
        assert len(step.removed_indices) == 1
        assert graph.layer("conv").out_channels == 2

    def test_cap_at_min_filters(self):
        graph, step = prune_step(single_conv(4), config(ratio=0.9, min_filters=3),
                                 make_rng(0))
        assert graph.layer("conv").out_channels == 3

    def test_layer_at_floor_is_ineligible(self):
        graph = single_conv(4)
        assert eligible_layers(graph, min_filters=4) == []
        with pytest.raises(NoEligibleLayerError):
            prune_step(graph, config(min_filters=4), make_rng(0))

    def test_protected_layers_not_eligible(self):
        resnet = build("resnet50_cifar100")
        eligible = set(eligible_layers(resnet, 1))
        for spec in resnet.layers:
            if spec.protected:
                assert spec.id not in eligible
        assert "s1b1_reduce" in eligible

    def test_weights_recomputed_on_current_graph(self, toy):
        cfg = config(mode=Mode.PARAMS, ratio=0.3)
        rng = make_rng(42)
        graph, first = prune_step(toy, cfg, rng)
        _, second = prune_step(graph, cfg, rng, iteration=2)
        profile = pk.network_complexity(graph, cfg.flops_factor)
        expect = pk.relative_weights(profile, Mode.PARAMS,
                                     eligible_layers(graph, 1))
        assert second.weights.entries == expect.entries
        assert second.weights.entries != first.weights.entries


class TestPruneToTarget:
    def test_target_at_baseline_is_noop(self, toy):
        baseline = pk.network_complexity(toy, 2).conv_totals.params
        graph, trace = pk.prune_to_target(toy, config(target=baseline))
        assert graph == toy
        assert trace.steps == ()
        assert trace.terminal is pk.Terminal.TARGET_MET

    def test_target_zero_is_infeasible(self, toy):
        graph, trace = pk.prune_to_target(toy, config(target=0))
        assert trace.terminal is pk.Terminal.INFEASIBLE
        for spec in graph.layers:
            if spec.kind is pk.LayerKind.CONV:
                assert spec.out_channels == 1  # everything ground to the floor

    def test_max_iterations_backstop(self, toy):
        graph, trace = pk.prune_to_target(toy, config(target=0, max_iterations=3))
        assert trace.terminal is pk.Terminal.MAX_ITERATIONS
        assert len(trace.steps) == 3

    def test_strict_descent_in_mode(self, vgg):
        baseline = pk.network_complexity(vgg, 2)
        cfg = config(mode=Mode.FLOPS,
                     target=int(0.5 * baseline.conv_totals.flops), seed=77)
        _, trace = pk.prune_to_target(vgg, cfg)
        assert trace.terminal is pk.Terminal.TARGET_MET
        values = [baseline.conv_totals.flops] + \
            [s.conv_totals_after.flops for s in trace.steps]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_weak_nonincrease_other_modes(self, vgg):
        baseline = pk.network_complexity(vgg, 2)
        cfg = config(mode=Mode.MEMORY,
                     target=int(0.6 * baseline.conv_totals.memory_bytes), seed=5)
        _, trace = pk.prune_to_target(vgg, cfg)
        totals = [baseline.totals] + [s.totals_after for s in trace.steps]
        for before, after in zip(totals, totals[1:]):
            assert after.flops <= before.flops
            assert after.memory_bytes <= before.memory_bytes
            assert after.params <= before.params

    def test_deterministic_traces(self, vgg):
        cfg = config(mode=Mode.PARAMS, target=10_000_000, seed=99)
        g1, t1 = pk.prune_to_target(vgg, cfg)
        g2, t2 = pk.prune_to_target(vgg, cfg)
        assert g1 == g2
        assert pk.trace_to_json(t1) == pk.trace_to_json(t2)

    def test_different_seeds_differ(self, vgg):
        cfg_a = config(mode=Mode.PARAMS, target=10_000_000, seed=1)
        cfg_b = config(mode=Mode.PARAMS, target=10_000_000, seed=2)
        _, ta = pk.prune_to_target(vgg, cfg_a)
        _, tb = pk.prune_to_target(vgg, cfg_b)
        assert [s.layer_id for s in ta.steps] != [s.layer_id for s in tb.steps] \
            or [s.removed_indices for s in ta.steps] != \
               [s.removed_indices for s in tb.steps]

    def test_result_validates(self, vgg):
        graph, _ = pk.prune_to_target(
            vgg, config(mode=Mode.FLOPS, target=100_000_000, seed=3))
        assert pk.validate_graph(graph).ok

    def test_residual_groups_untouched_in_zoo_runs(self):
        mobilenet = build("mobilenetv2_cifar10")
        base = pk.network_complexity(mobilenet, 2)
        cfg = config(mode=Mode.PARAMS,
                     target=int(0.55 * base.conv_totals.params), seed=21)
        graph, trace = pk.prune_to_target(mobilenet, cfg)
        protected = {l.id for l in mobilenet.layers if l.protected}
        assert not protected & {s.layer_id for s in trace.steps}
        for layer_id in protected:
            assert graph.layer(layer_id).out_channels == \
                mobilenet.layer(layer_id).out_channels

    def test_unresolved_graph_rejected(self):
        graph = pk.parse_architecture(pk.serialize_architecture(single_conv()))
        with pytest.raises(pk.ShapeError, match="resolved"):
            pk.prune_to_target(graph, config(target=10))


def test_single_step_selection_frequencies(toy):
    """Selection frequencies over repeated one-step prunes match the weights."""
    cfg = config(mode=Mode.PARAMS, ratio=0.1)
    profile = pk.network_complexity(toy, cfg.flops_factor)
    expect = pk.relative_weights(profile, Mode.PARAMS,
                                 eligible_layers(toy, 1)).entries
    rng = make_rng(31337)
    n = 100_000
    hits = collections.Counter()
    for _ in range(n):
        _, step = prune_step(toy, cfg, rng)
        hits[step.layer_id] += 1
    for layer_id, probability in expect.items():
        assert abs(hits[layer_id] / n - probability) <= 0.01, layer_id


class TestTraceSerialization:
    def test_round_trip(self, toy):
        cfg = config(mode=Mode.FLOPS, target=1_000_000, ratio=0.2, seed=8)
        _, trace = pk.prune_to_target(toy, cfg)
        assert len(trace.steps) > 0
        text = pk.trace_to_json(trace)
        back = pk.trace_from_json(text)
        assert back.config == trace.config
        assert back.terminal == trace.terminal
        assert back.baseline_totals == trace.baseline_totals
        assert [s.layer_id for s in back.steps] == [s.layer_id for s in trace.steps]
        # probabilities are rounded to 12 significant digits; re-serialization
        # of the parsed trace must be byte-stable
        assert pk.trace_to_json(back) == text

    def test_parsed_probabilities_still_sum_to_one(self, toy):
        _, trace = pk.prune_to_target(
            toy, config(mode=Mode.PARAMS, target=5000, ratio=0.2, seed=8))
        back = pk.trace_from_json(pk.trace_to_json(trace))
        assert back.steps
        for step in back.steps:
            total = sum(step.weights.entries.values())
            assert abs(total - 1.0) <= 1e-9


class TestConfigValidation:
    @pytest.mark.parametrize("ratio", [0.0, 1.0, -0.1, 1.5])
    def test_ratio_bounds(self, ratio):
        with pytest.raises(ValueError, match="prune_ratio"):
            config(ratio=ratio)

    def test_min_filters_bound(self):
        with pytest.raises(ValueError, match="min_filters"):
            config(min_filters=0)

    def test_factor_bound(self):
        with pytest.raises(ValueError, match="flops_factor"):
            config(flops_factor=4)

    def test_negative_target(self):
        with pytest.raises(ValueError, match="target_complexity"):
            config(target=-1)
