import numpy as np
import pytest

from satfolio.core.cnf import CnfInstance, PermutationKind, PermutationSpec, permute
from satfolio.core.graph import NODE_TYPES, RELATIONS, FeatureMode, NodeType, Relation, build_graph
from satfolio.neuralnet.model import (
    DimensionMismatch,
    StaleTape,
    Tape,
    backward,
    embed,
    forward,
    hetero_conv_layer,
    predict,
    readout,
)
from satfolio.neuralnet.params import (
    HEAD_BIAS,
    HEAD_WEIGHT,
    conv_bias_name,
    conv_weight_name,
    embed_bias_name,
    embed_weight_name,
    init_params,
    param_shapes,
)
from satfolio.training.loss import regret_loss, regret_loss_with_grad
from helpers import random_instance


def test_param_shapes():
    shapes = param_shapes(4, 2, 3, homogeneous=False, feature_mode=FeatureMode.CUSTOM_PE)
    assert shapes[embed_weight_name(NodeType.CLAUSE)] == (17, 4)
    assert shapes[embed_weight_name(NodeType.POSLIT)] == (3, 4)
    assert shapes[conv_weight_name(1, Relation.NEGLIT_POSLIT, False)] == (4, 4)
    assert shapes[HEAD_WEIGHT] == (12, 3)
    assert len([n for n in shapes if n.endswith(".W") and n.startswith("conv.")]) == 12

    shared = param_shapes(4, 2, 3, homogeneous=True, feature_mode=FeatureMode.CUSTOM_PE)
    assert len([n for n in shared if n.endswith(".W") and n.startswith("conv.")]) == 2


def test_init_params_is_seeded():
    a = init_params(3, hidden=4, seed=7)
    b = init_params(3, hidden=4, seed=7)
    for name in a.names:
        np.testing.assert_array_equal(a[name], b[name])
        assert np.all(np.abs(a[name]) <= 1.0)
    assert a.dtype == np.float32
    with pytest.raises(ValueError):
        init_params(0)


def test_embed_zero_weights(t1):
    params = init_params(2, hidden=4, seed=0)
    for t in NODE_TYPES:
        params.tensors[embed_weight_name(t)][:] = 0
    out = embed(build_graph(t1), params)
    for t in NODE_TYPES:
        np.testing.assert_array_equal(out[t], np.tile(params[embed_bias_name(t)], (3, 1)))


def test_embed_identity_projection(t1):
    params = init_params(2, hidden=17, seed=0, dtype=np.float64)
    params.tensors[embed_weight_name(NodeType.CLAUSE)][:] = np.eye(17)
    params.tensors[embed_bias_name(NodeType.CLAUSE)][:] = 0
    graph = build_graph(t1)
    out = embed(graph, params)
    np.testing.assert_array_equal(out[NodeType.CLAUSE], graph.clause_features.astype(np.float64))


def test_embed_matches_naive_matmul(t1):
    params = init_params(2, hidden=4, seed=3, dtype=np.float64)
    graph = build_graph(t1)
    out = embed(graph, params)
    for t in NODE_TYPES:
        x = graph.features(t).astype(np.float64)
        W, b = params[embed_weight_name(t)], params[embed_bias_name(t)]
        for i in range(x.shape[0]):
            for j in range(W.shape[1]):
                expected = b[j] + sum(x[i, k] * W[k, j] for k in range(x.shape[1]))
                assert out[t][i, j] == pytest.approx(expected, abs=1e-6)


def test_embed_dimension_mismatch(t1):
    params = init_params(2, hidden=4, feature_mode=FeatureMode.NODE_TYPE)
    with pytest.raises(DimensionMismatch):
        embed(build_graph(t1, FeatureMode.CUSTOM_PE), params)


def _edge_loop_layer(graph, embeds, layer, params):
    """Reference convolution, one edge at a time"""
    acc = {t: np.zeros((graph.n_nodes_of(t), params.hidden)) for t in NODE_TYPES}
    present = {t: np.zeros(graph.n_nodes_of(t)) for t in NODE_TYPES}
    for relation in RELATIONS:
        src, dst = graph.relation_edges(relation)
        src_deg, dst_deg = graph.degrees[relation]
        W = params.conv_weight(layer, relation)
        for j, i in zip(src, dst):
            norm = np.sqrt(max(dst_deg[i], 1) * max(src_deg[j], 1))
            acc[relation.dst_type][i] += embeds[relation.src_type][j] @ W / norm
        present[relation.dst_type] += dst_deg > 0
    return {
        t: np.maximum(
            acc[t] / np.maximum(present[t], 1)[:, None] + params[conv_bias_name(layer, t)], 0
        )
        for t in NODE_TYPES
    }


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_conv_layer_matches_edge_loop(t1, seed):
    params = init_params(2, hidden=4, seed=seed, dtype=np.float64)
    graph = build_graph(t1)
    embeds = embed(graph, params)
    out = hetero_conv_layer(graph, embeds, 0, params)
    expected = _edge_loop_layer(graph, embeds, 0, params)
    for t in NODE_TYPES:
        np.testing.assert_allclose(out[t], expected[t], atol=1e-6)
        assert np.all(out[t] >= 0)


def test_conv_layer_with_repeated_literals():
    inst = CnfInstance(2, [[1, 1, -2], [2, -1]])
    params = init_params(2, hidden=3, seed=4, dtype=np.float64)
    graph = build_graph(inst)
    embeds = embed(graph, params)
    out = hetero_conv_layer(graph, embeds, 0, params)
    expected = _edge_loop_layer(graph, embeds, 0, params)
    for t in NODE_TYPES:
        np.testing.assert_allclose(out[t], expected[t], atol=1e-9)


def test_conv_single_edge():
    params = init_params(2, hidden=3, seed=5, dtype=np.float64)
    graph = build_graph(CnfInstance(1, [[1]]))
    embeds = embed(graph, params)
    out = hetero_conv_layer(graph, embeds, 0, params)
    expected = np.maximum(
        params[conv_bias_name(0, NodeType.CLAUSE)]
        + embeds[NodeType.POSLIT][0] @ params.conv_weight(0, Relation.POSLIT_CLAUSE),
        0,
    )
    np.testing.assert_allclose(out[NodeType.CLAUSE][0], expected, atol=1e-12)


def test_homogeneous_matches_copied_weights(t1):
    shared = init_params(3, hidden=4, seed=1, homogeneous=True, dtype=np.float64)
    tensors = {}
    for name in param_shapes(4, 2, 3, homogeneous=False, feature_mode=FeatureMode.CUSTOM_PE):
        if name.startswith("conv.") and name.endswith(".W"):
            layer = int(name.split(".")[1])
            tensors[name] = shared[f"conv.{layer}.shared.W"].copy()
        else:
            tensors[name] = shared[name].copy()
    separate = init_params(3, hidden=4, seed=1, dtype=np.float64).with_tensors(tensors)

    graph = build_graph(t1)
    np.testing.assert_array_equal(forward(graph, shared).probs, forward(graph, separate).probs)


def test_readout_zero_head(t1):
    params = init_params(4, hidden=4, seed=0)
    params.tensors[HEAD_WEIGHT][:] = 0
    params.tensors[HEAD_BIAS][:] = 0
    dist = forward(build_graph(t1), params)
    np.testing.assert_allclose(dist.probs, 0.25, atol=1e-12)
    assert predict(build_graph(t1), params) == 0


def test_readout_pools_per_type():
    params = init_params(2, hidden=2, seed=0, dtype=np.float64)
    v = np.array([0.5, -1.0])
    embeds = {t: np.tile(v, (3, 1)) for t in NODE_TYPES}
    tape = Tape()
    dist = readout(embeds, params, tape)
    np.testing.assert_array_equal(tape.pooled, np.concatenate([v, v, v]))
    logits = np.concatenate([v, v, v]) @ params[HEAD_WEIGHT] + params[HEAD_BIAS]
    expected = np.exp(logits - logits.max())
    np.testing.assert_allclose(dist.probs, expected / expected.sum(), atol=1e-12)


def test_forward_is_deterministic_probability(t1):
    params = init_params(3, seed=2)
    graph = build_graph(t1)
    a, b = forward(graph, params), forward(graph, params)
    np.testing.assert_array_equal(a.probs, b.probs)
    assert np.all(a.probs >= 0)
    assert a.probs.sum() == pytest.approx(1.0, abs=1e-6)


def test_variable_relabeling_invariance():
    rng = np.random.default_rng(10)
    params = init_params(3, seed=3)
    for seed in range(50):
        inst = random_instance(rng)
        shuffled = permute(inst, PermutationSpec(PermutationKind.VARIABLE_SHUFFLE, seed))
        np.testing.assert_allclose(
            forward(build_graph(inst), params).probs,
            forward(build_graph(shuffled), params).probs,
            atol=5e-6,
        )


def test_clause_order_invariance_without_positional_encoding():
    rng = np.random.default_rng(11)
    params = init_params(3, seed=4, feature_mode=FeatureMode.CUSTOM_NO_PE)
    for seed in range(50):
        inst = random_instance(rng)
        shuffled = permute(inst, PermutationSpec(PermutationKind.CLAUSE_SHUFFLE, seed))
        np.testing.assert_allclose(
            forward(build_graph(inst, FeatureMode.CUSTOM_NO_PE), params).probs,
            forward(build_graph(shuffled, FeatureMode.CUSTOM_NO_PE), params).probs,
            atol=5e-6,
        )


def test_backward_requires_forward(t1):
    params = init_params(2, hidden=4)
    graph = build_graph(t1)
    with pytest.raises(StaleTape):
        backward(graph, params, np.zeros(2), Tape())

    tape = Tape()
    forward(graph, params, tape)
    backward(graph, params, np.zeros(2), tape)
    with pytest.raises(StaleTape):
        backward(graph, params, np.zeros(2), tape)

    forward(build_graph(CnfInstance(1, [[1]])), params, tape)
    with pytest.raises(StaleTape):
        backward(graph, params, np.zeros(2), tape)


def test_zero_upstream_gradient(t1):
    params = init_params(3, hidden=4, seed=1)
    graph = build_graph(t1)
    tape = Tape()
    forward(graph, params, tape)
    grads = backward(graph, params, np.zeros(3), tape)
    assert set(grads) == set(params.names)
    for g in grads.values():
        assert not np.any(g)


def test_upstream_gradient_shape(t1):
    params = init_params(3, hidden=4)
    graph = build_graph(t1)
    tape = Tape()
    forward(graph, params, tape)
    with pytest.raises(DimensionMismatch):
        backward(graph, params, np.zeros(2), tape)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("homogeneous", [False, True])
def test_gradients_match_finite_differences(t1, seed, homogeneous):
    runtimes = np.array([3.0, 1.0, 7.0])
    params = init_params(
        3, hidden=4, n_layers=2, seed=seed, homogeneous=homogeneous, dtype=np.float64
    )
    graph = build_graph(t1)

    tape = Tape()
    dist = forward(graph, params, tape)
    _, grad_probs = regret_loss_with_grad(dist, runtimes)
    grads = backward(graph, params, grad_probs, tape)

    step = 1e-4
    for name in params.names:
        tensor = params.tensors[name]
        for idx in np.ndindex(tensor.shape):
            original = tensor[idx]
            tensor[idx] = original + step
            plus = regret_loss(forward(graph, params), runtimes)
            tensor[idx] = original - step
            minus = regret_loss(forward(graph, params), runtimes)
            tensor[idx] = original
            numeric = (plus - minus) / (2 * step)
            analytic = grads[name][idx]
            assert abs(analytic - numeric) <= 1e-3 * max(abs(analytic), abs(numeric)) + 1e-7, (
                f"{name}{idx}: analytic {analytic}, numeric {numeric}"
            )


def test_gradient_vanishes_at_optimal_prediction(t1):
    params = init_params(2, hidden=4, seed=0, dtype=np.float64)
    params.tensors[HEAD_WEIGHT][:] = 0
    params.tensors[HEAD_BIAS][:] = [30.0, 0.0]
    graph = build_graph(t1)
    tape = Tape()
    dist = forward(graph, params, tape)
    loss, grad_probs = regret_loss_with_grad(dist, np.array([1.0, 10.0]))
    grads = backward(graph, params, grad_probs, tape)
    assert loss < 1e-20
    assert np.all(np.abs(grads[HEAD_BIAS]) < 1e-9)
