"""Attributed literal-clause graphs.

Every CNF instance becomes a tripartite graph with one node per clause, one node
per positive literal and one node per negative literal. A literal node is linked
to every clause it occurs in (once per occurrence) and each variable links its
positive and negative literal nodes.

Node features (computed in float64, stored in float32):

    clause (17): is_horn, length_ratio, is_binary, is_ternary, positive_fraction,
                 negative_fraction, positive_negative_ratio, 10 positional values
    literal (3): occurrence_ratio, horn_occurrence_ratio, polarity_ratio
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from satfolio.core.cnf import CnfInstance
from satfolio.util.misc import stable_hash64

PE_DIM = 10
PE_BASE = 10000.0


class NodeType(str, Enum):
    CLAUSE = "clause"
    POSLIT = "poslit"
    NEGLIT = "neglit"


class Relation(str, Enum):
    POSLIT_CLAUSE = "poslit_clause"
    NEGLIT_CLAUSE = "neglit_clause"
    CLAUSE_POSLIT = "clause_poslit"
    CLAUSE_NEGLIT = "clause_neglit"
    POSLIT_NEGLIT = "poslit_neglit"
    NEGLIT_POSLIT = "neglit_poslit"

    @property
    def src_type(self) -> NodeType:
        return NodeType(self.value.split("_")[0])

    @property
    def dst_type(self) -> NodeType:
        return NodeType(self.value.split("_")[1])


NODE_TYPES = list(NodeType)
RELATIONS = list(Relation)


class FeatureMode(str, Enum):
    CUSTOM_PE = "custom_pe"
    CUSTOM_NO_PE = "custom"
    RANDOM = "random"
    NODE_TYPE = "node_type"

    @property
    def code(self) -> int:
        """Stable small integer used in checkpoint flags"""
        return list(FeatureMode).index(self)

    @classmethod
    def from_code(cls, code: int) -> "FeatureMode":
        return list(cls)[code]


CLAUSE_FEATURE_NAMES = [
    "is_horn",
    "length_ratio",
    "is_binary",
    "is_ternary",
    "positive_fraction",
    "negative_fraction",
    "positive_negative_ratio",
] + [f"position_{i}" for i in range(PE_DIM)]
LITERAL_FEATURE_NAMES = ["occurrence_ratio", "horn_occurrence_ratio", "polarity_ratio"]
NODE_TYPE_FEATURE_NAMES = ["is_clause", "is_poslit", "is_neglit"]

FEATURE_SCHEMA_VERSION = 1
FEATURE_SCHEMA_HASH = stable_hash64(
    {
        "version": FEATURE_SCHEMA_VERSION,
        "clause": CLAUSE_FEATURE_NAMES,
        "literal": LITERAL_FEATURE_NAMES,
        "node_type": NODE_TYPE_FEATURE_NAMES,
        "pe": [PE_DIM, PE_BASE],
    }
)


def feature_dims(mode: FeatureMode) -> dict[NodeType, int]:
    if mode == FeatureMode.NODE_TYPE:
        return {t: len(NODE_TYPE_FEATURE_NAMES) for t in NODE_TYPES}
    return {
        NodeType.CLAUSE: len(CLAUSE_FEATURE_NAMES),
        NodeType.POSLIT: len(LITERAL_FEATURE_NAMES),
        NodeType.NEGLIT: len(LITERAL_FEATURE_NAMES),
    }


def _sinusoids(positions: np.ndarray) -> np.ndarray:
    k = positions.astype(np.float64)[:, None]
    i = np.arange(PE_DIM // 2, dtype=np.float64)[None, :]
    angles = k / PE_BASE ** (2 * i / PE_DIM)
    pe = np.empty((len(k), PE_DIM), dtype=np.float64)
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles)
    return pe


def positional_encodings(n_positions: int) -> np.ndarray:
    """Sinusoidal encodings of positions 0..n_positions-1, shape [n_positions x 10].
    Even entries are sines, odd entries cosines, of k / 10000^(2i/10)."""
    return _sinusoids(np.arange(n_positions))


def positional_encoding(k: int) -> np.ndarray:
    if k < 0:
        raise ValueError(f"Clause position must be non-negative: {k}")
    return _sinusoids(np.array([k]))[0]


@dataclass(frozen=True)
class Occurrences:
    """Flattened literal occurrences of an instance, in clause order"""

    lits: np.ndarray  # signed literals
    clause_of: np.ndarray  # clause index of each occurrence
    clause_len: np.ndarray
    clause_npos: np.ndarray

    @property
    def var(self) -> np.ndarray:
        return np.abs(self.lits) - 1

    @property
    def is_pos(self) -> np.ndarray:
        return self.lits > 0

    @property
    def clause_is_horn(self) -> np.ndarray:
        return self.clause_npos <= 1


def occurrences(inst: CnfInstance) -> Occurrences:
    clause_len = np.fromiter((len(c) for c in inst.clauses), dtype=np.int64)
    lits = np.fromiter(
        (lit for clause in inst.clauses for lit in clause),
        dtype=np.int64,
        count=int(clause_len.sum()),
    )
    clause_of = np.repeat(np.arange(inst.num_clauses), clause_len)
    clause_npos = np.bincount(clause_of, weights=lits > 0, minlength=inst.num_clauses)
    return Occurrences(
        lits=lits,
        clause_of=clause_of,
        clause_len=clause_len,
        clause_npos=clause_npos.astype(np.int64),
    )


def literal_feature_matrix(inst: CnfInstance, positive: bool) -> np.ndarray:
    """Features of all positive (or negative) literal nodes, shape [num_vars x 3]"""
    occ = occurrences(inst)
    m = max(inst.num_clauses, 1)
    horn = occ.clause_is_horn[occ.clause_of]

    def count(mask, weights=None):
        w = None if weights is None else weights[mask]
        return np.bincount(occ.var[mask], weights=w, minlength=inst.num_vars)

    mask_same = occ.is_pos if positive else ~occ.is_pos
    n_same = count(mask_same).astype(np.float64)
    n_opposite = count(~mask_same).astype(np.float64)
    n_horn = count(mask_same, horn.astype(np.float64))

    return np.column_stack([n_same / m, n_horn / m, n_same / (n_opposite + 1.0)])


def literal_features(inst: CnfInstance, var: int, positive: bool) -> np.ndarray:
    """[occurrence_ratio, horn_occurrence_ratio, polarity_ratio] of literal x_var
    (positive=True) or its negation. The ratio divides the literal's occurrences by
    the occurrences of the opposite literal plus one, for both polarities."""
    if not 1 <= var <= inst.num_vars:
        raise ValueError(f"Variable {var} is outside [1, {inst.num_vars}]")
    return literal_feature_matrix(inst, positive)[var - 1]


def clause_feature_matrix(inst: CnfInstance, with_pe: bool = True) -> np.ndarray:
    """Features of all clause nodes, shape [num_clauses x 17].
    Without positional encodings the last 10 columns are zero."""
    occ = occurrences(inst)
    length = occ.clause_len.astype(np.float64)
    npos = occ.clause_npos.astype(np.float64)
    nneg = length - npos

    base = np.column_stack(
        [
            occ.clause_is_horn.astype(np.float64),
            length / inst.num_vars,
            (occ.clause_len == 2).astype(np.float64),
            (occ.clause_len == 3).astype(np.float64),
            npos / length,
            nneg / length,
            npos / (nneg + 1.0),
        ]
    )
    if with_pe:
        pe = positional_encodings(inst.num_clauses)
    else:
        pe = np.zeros((inst.num_clauses, PE_DIM))
    return np.hstack([base, pe])


def clause_features(inst: CnfInstance, clause_idx: int) -> np.ndarray:
    if not 0 <= clause_idx < inst.num_clauses:
        raise ValueError(f"Clause index {clause_idx} is outside [0, {inst.num_clauses})")
    return clause_feature_matrix(inst)[clause_idx]


@dataclass(eq=False)
class LiteralClauseGraph:
    n_vars: int
    n_clauses: int
    edge_lit: np.ndarray  # dense literal index, 2*(var-1) (+1 if negative)
    edge_clause: np.ndarray
    clause_features: np.ndarray
    pos_lit_features: np.ndarray
    neg_lit_features: np.ndarray
    feature_mode: FeatureMode = FeatureMode.CUSTOM_PE
    source_id: str = field(default="")

    @property
    def n_nodes(self) -> int:
        return self.n_clauses + 2 * self.n_vars

    @property
    def n_lit_clause_edges(self) -> int:
        return len(self.edge_lit)

    @property
    def n_pos_neg_edges(self) -> int:
        return self.n_vars

    def n_nodes_of(self, node_type: NodeType) -> int:
        return self.n_clauses if node_type == NodeType.CLAUSE else self.n_vars

    def features(self, node_type: NodeType) -> np.ndarray:
        return {
            NodeType.CLAUSE: self.clause_features,
            NodeType.POSLIT: self.pos_lit_features,
            NodeType.NEGLIT: self.neg_lit_features,
        }[node_type]

    def relation_edges(self, relation: Relation) -> tuple[np.ndarray, np.ndarray]:
        """Returns (src, dst) node indices within their node types"""
        if relation in (Relation.POSLIT_NEGLIT, Relation.NEGLIT_POSLIT):
            idx = np.arange(self.n_vars)
            return idx, idx

        positive = NodeType.POSLIT in (relation.src_type, relation.dst_type)
        mask = (self.edge_lit % 2 == 0) if positive else (self.edge_lit % 2 == 1)
        var = self.edge_lit[mask] // 2
        clause = self.edge_clause[mask]
        if relation.dst_type == NodeType.CLAUSE:
            return var, clause
        return clause, var

    @cached_property
    def degrees(self) -> dict[Relation, tuple[np.ndarray, np.ndarray]]:
        """Per relation, the (source, destination) degree of every node"""
        res = {}
        for relation in RELATIONS:
            src, dst = self.relation_edges(relation)
            src_deg = np.bincount(src, minlength=self.n_nodes_of(relation.src_type))
            dst_deg = np.bincount(dst, minlength=self.n_nodes_of(relation.dst_type))
            res[relation] = (src_deg, dst_deg)
        return res


def _random_features(
    inst: CnfInstance, dims: dict[NodeType, int], seed: int
) -> dict[NodeType, np.ndarray]:
    rng = np.random.default_rng([seed, stable_hash64(inst.source_id)])
    return {
        t: rng.standard_normal((inst.num_clauses if t == NodeType.CLAUSE else inst.num_vars, d))
        for t, d in dims.items()
    }


def _node_type_features(inst: CnfInstance) -> dict[NodeType, np.ndarray]:
    res = {}
    for i, t in enumerate(NODE_TYPES):
        n = inst.num_clauses if t == NodeType.CLAUSE else inst.num_vars
        one_hot = np.zeros((n, len(NODE_TYPES)))
        one_hot[:, i] = 1.0
        res[t] = one_hot
    return res


def build_graph(
    inst: CnfInstance, mode: FeatureMode = FeatureMode.CUSTOM_PE, seed: int = 0
) -> LiteralClauseGraph:
    """Builds the literal-clause graph of an instance. `seed` only matters for
    random features."""
    occ = occurrences(inst)
    edge_lit = 2 * occ.var + (~occ.is_pos).astype(np.int64)

    if mode in (FeatureMode.CUSTOM_PE, FeatureMode.CUSTOM_NO_PE):
        feats = {
            NodeType.CLAUSE: clause_feature_matrix(inst, with_pe=mode == FeatureMode.CUSTOM_PE),
            NodeType.POSLIT: literal_feature_matrix(inst, positive=True),
            NodeType.NEGLIT: literal_feature_matrix(inst, positive=False),
        }
    elif mode == FeatureMode.RANDOM:
        feats = _random_features(inst, feature_dims(mode), seed)
    else:
        feats = _node_type_features(inst)

    return LiteralClauseGraph(
        n_vars=inst.num_vars,
        n_clauses=inst.num_clauses,
        edge_lit=edge_lit,
        edge_clause=occ.clause_of,
        clause_features=feats[NodeType.CLAUSE].astype(np.float32),
        pos_lit_features=feats[NodeType.POSLIT].astype(np.float32),
        neg_lit_features=feats[NodeType.NEGLIT].astype(np.float32),
        feature_mode=mode,
        source_id=inst.source_id,
    )


def export_graph(graph: LiteralClauseGraph, path: Path | str):
    """Writes a graph as a plain-text columnar file: a header line, a `[nodes]`
    table (node_id, node_type, index, f0..fN) and an `[edges]` table
    (src_id, dst_id, relation). Node ids are global: clauses first, then
    positive literals, then negative literals."""
    offsets = {
        NodeType.CLAUSE: 0,
        NodeType.POSLIT: graph.n_clauses,
        NodeType.NEGLIT: graph.n_clauses + graph.n_vars,
    }
    width = max(graph.features(t).shape[1] for t in NODE_TYPES)

    lines = [
        f"# satfolio-lcg schema={FEATURE_SCHEMA_VERSION} n_vars={graph.n_vars} "
        f"n_clauses={graph.n_clauses} feature_mode={graph.feature_mode.value}",
        "[nodes]",
        ",".join(["node_id", "node_type", "index"] + [f"f{i}" for i in range(width)]),
    ]
    for t in NODE_TYPES:
        for i, row in enumerate(graph.features(t)):
            values = [repr(float(v)) for v in row] + [""] * (width - len(row))
            lines.append(",".join([str(offsets[t] + i), t.value, str(i)] + values))

    lines += ["[edges]", "src_id,dst_id,relation"]
    for relation in (Relation.POSLIT_CLAUSE, Relation.NEGLIT_CLAUSE, Relation.POSLIT_NEGLIT):
        src, dst = graph.relation_edges(relation)
        for s, d in zip(src, dst):
            lines.append(
                f"{offsets[relation.src_type] + s},{offsets[relation.dst_type] + d},"
                f"{relation.value}"
            )

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
