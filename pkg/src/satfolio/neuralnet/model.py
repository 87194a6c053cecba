"""Heterogeneous graph convolutional network over literal-clause graphs.

Pipeline: per-type affine input projection, `n_layers` heterogeneous convolutions,
mean pooling per node type, linear head and softmax over solvers.

One convolution computes, for every destination node i of type T,

    x_i <- relu(b_T + mean_{r into T, r present at i} sum_{j in N_r(i)} W_r x_j / sqrt(deg_r(i) deg_r(j)))

where a relation is present at i when i has at least one incoming edge of that
relation, and degrees are clamped to at least one. Nodes without any incoming
edge get relu(b_T).

Activations use the parameters' dtype (float32 by default); neighborhood sums,
pooling and the head are accumulated in float64. Gradients are exact
reverse-mode derivatives computed from the activations recorded on a Tape.
"""

import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from satfolio.core.graph import NODE_TYPES, RELATIONS, LiteralClauseGraph, NodeType, Relation
from satfolio.neuralnet.params import (
    HEAD_BIAS,
    HEAD_WEIGHT,
    ModelParameters,
    conv_bias_name,
    conv_weight_name,
    embed_bias_name,
    embed_weight_name,
)


class DimensionMismatch(ValueError):
    pass


class EmptyGraph(ValueError):
    pass


class StaleTape(RuntimeError):
    """Raised when backward is called without a matching forward pass"""


NodeEmbeddings = dict[NodeType, np.ndarray]


@dataclass(frozen=True)
class SolverDistribution:
    probs: np.ndarray

    @property
    def best(self) -> int:
        """Most probable solver, lowest index on ties"""
        return int(np.argmax(self.probs))


@dataclass
class Tape:
    """Activations of one forward pass, consumed by `backward`"""

    graph: LiteralClauseGraph | None = None
    features: NodeEmbeddings = field(default_factory=dict)
    layer_inputs: list[NodeEmbeddings] = field(default_factory=list)
    pre_activations: list[NodeEmbeddings] = field(default_factory=list)
    final: NodeEmbeddings = field(default_factory=dict)
    pooled: np.ndarray | None = None
    probs: np.ndarray | None = None
    filled: bool = False

    def reset(self, graph: LiteralClauseGraph):
        self.graph = graph
        self.features = {}
        self.layer_inputs = []
        self.pre_activations = []
        self.final = {}
        self.pooled = None
        self.probs = None
        self.filled = False


@dataclass(frozen=True)
class _Structure:
    adjacency: dict[Relation, sparse.csr_matrix]  # [n_dst x n_src], normalized
    n_present: dict[NodeType, np.ndarray]  # relations with incoming edges, clamped >= 1


_structures: "weakref.WeakKeyDictionary[LiteralClauseGraph, _Structure]" = (
    weakref.WeakKeyDictionary()
)


def _structure(graph: LiteralClauseGraph) -> _Structure:
    cached = _structures.get(graph)
    if cached is not None:
        return cached

    adjacency = {}
    n_present = {t: np.zeros(graph.n_nodes_of(t)) for t in NODE_TYPES}
    for relation in RELATIONS:
        src, dst = graph.relation_edges(relation)
        src_deg, dst_deg = graph.degrees[relation]
        norm = 1.0 / np.sqrt(
            np.maximum(dst_deg[dst], 1).astype(np.float64)
            * np.maximum(src_deg[src], 1).astype(np.float64)
        )
        shape = (graph.n_nodes_of(relation.dst_type), graph.n_nodes_of(relation.src_type))
        # Repeated literals give parallel edges, summed on conversion
        adjacency[relation] = sparse.coo_matrix((norm, (dst, src)), shape=shape).tocsr()
        n_present[relation.dst_type] += dst_deg > 0

    structure = _Structure(
        adjacency=adjacency,
        n_present={t: np.maximum(c, 1.0) for t, c in n_present.items()},
    )
    _structures[graph] = structure
    return structure


def embed(
    graph: LiteralClauseGraph, params: ModelParameters, tape: Tape | None = None
) -> NodeEmbeddings:
    res = {}
    for t in NODE_TYPES:
        features = graph.features(t).astype(params.dtype)
        weight = params[embed_weight_name(t)]
        if features.ndim != 2 or features.shape[1] != weight.shape[0]:
            raise DimensionMismatch(
                f"{t.value} features have shape {features.shape}, "
                f"projection expects {weight.shape[0]} columns"
            )
        res[t] = features @ weight + params[embed_bias_name(t)]
        if tape is not None:
            tape.features[t] = features
    return res


def hetero_conv_layer(
    graph: LiteralClauseGraph,
    embeds: NodeEmbeddings,
    layer: int,
    params: ModelParameters,
    tape: Tape | None = None,
) -> NodeEmbeddings:
    structure = _structure(graph)
    for t in NODE_TYPES:
        if embeds[t].shape != (graph.n_nodes_of(t), params.hidden):
            raise DimensionMismatch(
                f"{t.value} embeddings have shape {embeds[t].shape}, expected "
                f"({graph.n_nodes_of(t)}, {params.hidden})"
            )

    acc = {t: np.zeros((graph.n_nodes_of(t), params.hidden)) for t in NODE_TYPES}
    for relation in RELATIONS:
        messages = embeds[relation.src_type] @ params.conv_weight(layer, relation)
        acc[relation.dst_type] += structure.adjacency[relation] @ messages.astype(np.float64)

    pre = {}
    out = {}
    for t in NODE_TYPES:
        combined = acc[t] / structure.n_present[t][:, None]
        pre[t] = (combined + params[conv_bias_name(layer, t)]).astype(params.dtype)
        out[t] = np.maximum(pre[t], 0)

    if tape is not None:
        tape.layer_inputs.append(embeds)
        tape.pre_activations.append(pre)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


def readout(
    embeds: NodeEmbeddings, params: ModelParameters, tape: Tape | None = None
) -> SolverDistribution:
    for t in NODE_TYPES:
        if embeds[t].shape[0] == 0:
            raise EmptyGraph(f"No {t.value} nodes to pool")

    pooled = np.concatenate(
        [embeds[t].mean(axis=0, dtype=np.float64) for t in NODE_TYPES]
    )
    logits = pooled @ params[HEAD_WEIGHT].astype(np.float64) + params[HEAD_BIAS]
    probs = _softmax(logits.astype(np.float64))

    if tape is not None:
        tape.final = embeds
        tape.pooled = pooled
        tape.probs = probs
    return SolverDistribution(probs=probs)


def forward(
    graph: LiteralClauseGraph, params: ModelParameters, tape: Tape | None = None
) -> SolverDistribution:
    if tape is not None:
        tape.reset(graph)
    embeds = embed(graph, params, tape)
    for layer in range(params.n_layers):
        embeds = hetero_conv_layer(graph, embeds, layer, params, tape)
    dist = readout(embeds, params, tape)
    if tape is not None:
        tape.filled = True
    return dist


def backward(
    graph: LiteralClauseGraph,
    params: ModelParameters,
    grad_probs: np.ndarray,
    tape: Tape,
) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter tensor, given the loss
    gradient w.r.t. the output probabilities. Consumes the tape."""
    if tape is None or not tape.filled or tape.graph is not graph:
        raise StaleTape("backward requires a forward pass on the same graph")

    grad_probs = np.asarray(grad_probs, dtype=np.float64)
    if grad_probs.shape != (params.n_solvers,):
        raise DimensionMismatch(
            f"Upstream gradient has shape {grad_probs.shape}, expected ({params.n_solvers},)"
        )

    structure = _structure(graph)
    grads = {name: np.zeros(t.shape, dtype=np.float64) for name, t in params.tensors.items()}
    h = params.hidden

    # softmax and head
    p = tape.probs
    dlogits = p * (grad_probs - p @ grad_probs)
    grads[HEAD_WEIGHT] += np.outer(tape.pooled, dlogits)
    grads[HEAD_BIAS] += dlogits
    dpooled = params[HEAD_WEIGHT].astype(np.float64) @ dlogits

    # mean pooling
    dx = {}
    for i, t in enumerate(NODE_TYPES):
        n = graph.n_nodes_of(t)
        dx[t] = np.tile(dpooled[i * h : (i + 1) * h] / n, (n, 1))

    for layer in reversed(range(params.n_layers)):
        inputs = tape.layer_inputs[layer]
        pre = tape.pre_activations[layer]

        dpre = {t: dx[t] * (pre[t] > 0) for t in NODE_TYPES}
        dcombined = {}
        for t in NODE_TYPES:
            grads[conv_bias_name(layer, t)] += dpre[t].sum(axis=0)
            dcombined[t] = dpre[t] / structure.n_present[t][:, None]

        dinputs = {t: np.zeros((graph.n_nodes_of(t), h)) for t in NODE_TYPES}
        for relation in RELATIONS:
            weight = params.conv_weight(layer, relation).astype(np.float64)
            dmessages = structure.adjacency[relation].T @ dcombined[relation.dst_type]
            src_inputs = inputs[relation.src_type].astype(np.float64)
            grads[conv_weight_name(layer, relation, params.homogeneous)] += (
                src_inputs.T @ dmessages
            )
            dinputs[relation.src_type] += dmessages @ weight.T
        dx = dinputs

    for t in NODE_TYPES:
        features = tape.features[t].astype(np.float64)
        grads[embed_weight_name(t)] += features.T @ dx[t]
        grads[embed_bias_name(t)] += dx[t].sum(axis=0)

    tape.filled = False
    return {name: g.astype(params.dtype) for name, g in grads.items()}


def predict(graph: LiteralClauseGraph, params: ModelParameters) -> int:
    """Index of the most probable solver, lowest index on ties"""
    return forward(graph, params).best
