from dataclasses import dataclass, field

import numpy as np

from satfolio.core.graph import (
    FEATURE_SCHEMA_HASH,
    NODE_TYPES,
    RELATIONS,
    FeatureMode,
    NodeType,
    Relation,
    feature_dims,
)

DEFAULT_HIDDEN = 64
DEFAULT_LAYERS = 2

_SHARED = "shared"


def embed_weight_name(node_type: NodeType) -> str:
    return f"embed.{node_type.value}.W"


def embed_bias_name(node_type: NodeType) -> str:
    return f"embed.{node_type.value}.b"


def conv_weight_name(layer: int, relation: Relation, homogeneous: bool) -> str:
    """In homogeneous mode every relation of a layer resolves to one shared matrix"""
    return f"conv.{layer}.{_SHARED if homogeneous else relation.value}.W"


def conv_bias_name(layer: int, node_type: NodeType) -> str:
    return f"conv.{layer}.{node_type.value}.b"


HEAD_WEIGHT = "head.W"
HEAD_BIAS = "head.b"


def param_shapes(
    hidden: int,
    n_layers: int,
    n_solvers: int,
    homogeneous: bool,
    feature_mode: FeatureMode,
) -> dict[str, tuple[int, ...]]:
    """Canonical (ordered) names and shapes of all parameter tensors"""
    dims = feature_dims(feature_mode)
    shapes = {}
    for t in NODE_TYPES:
        shapes[embed_weight_name(t)] = (dims[t], hidden)
        shapes[embed_bias_name(t)] = (hidden,)
    for layer in range(n_layers):
        for relation in RELATIONS:
            shapes[conv_weight_name(layer, relation, homogeneous)] = (hidden, hidden)
        for t in NODE_TYPES:
            shapes[conv_bias_name(layer, t)] = (hidden,)
    shapes[HEAD_WEIGHT] = (len(NODE_TYPES) * hidden, n_solvers)
    shapes[HEAD_BIAS] = (n_solvers,)
    return shapes


@dataclass(eq=False)
class ModelParameters:
    hidden: int
    n_layers: int
    n_solvers: int
    tensors: dict[str, np.ndarray]
    homogeneous: bool = False
    feature_mode: FeatureMode = FeatureMode.CUSTOM_PE
    schema_hash: int = field(default=FEATURE_SCHEMA_HASH)
    feature_seed: int = 0  # seed of the random node features the model was trained on

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    @property
    def dtype(self) -> np.dtype:
        return self.tensors[HEAD_WEIGHT].dtype

    @property
    def names(self) -> list[str]:
        return list(self.tensors)

    def conv_weight(self, layer: int, relation: Relation) -> np.ndarray:
        return self.tensors[conv_weight_name(layer, relation, self.homogeneous)]

    def with_tensors(self, tensors: dict[str, np.ndarray]) -> "ModelParameters":
        return ModelParameters(
            hidden=self.hidden,
            n_layers=self.n_layers,
            n_solvers=self.n_solvers,
            tensors=tensors,
            homogeneous=self.homogeneous,
            feature_mode=self.feature_mode,
            schema_hash=self.schema_hash,
            feature_seed=self.feature_seed,
        )

    def copy(self) -> "ModelParameters":
        return self.with_tensors({k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> "ModelParameters":
        return self.with_tensors({k: np.zeros_like(v) for k, v in self.tensors.items()})

    def astype(self, dtype) -> "ModelParameters":
        return self.with_tensors({k: v.astype(dtype) for k, v in self.tensors.items()})


def init_params(
    n_solvers: int,
    hidden: int = DEFAULT_HIDDEN,
    n_layers: int = DEFAULT_LAYERS,
    seed: int = 0,
    homogeneous: bool = False,
    feature_mode: FeatureMode = FeatureMode.CUSTOM_PE,
    dtype=np.float32,
) -> ModelParameters:
    """Initializes every tensor uniformly in +-1/sqrt(fan_in), where fan_in is the
    input width of the affine map the tensor belongs to. Tensors are drawn in
    canonical order from a single seeded generator. `seed` is also
    recorded as the feature seed."""
    if n_solvers < 1 or hidden < 1 or n_layers < 0:
        raise ValueError(
            f"Invalid model shape: n_solvers={n_solvers}, hidden={hidden}, n_layers={n_layers}"
        )

    rng = np.random.default_rng(seed)
    shapes = param_shapes(hidden, n_layers, n_solvers, homogeneous, feature_mode)
    dims = feature_dims(feature_mode)

    tensors = {}
    for name, shape in shapes.items():
        if name.startswith("embed."):
            fan_in = dims[NodeType(name.split(".")[1])]
        elif name.startswith("conv."):
            fan_in = hidden
        else:
            fan_in = len(NODE_TYPES) * hidden
        bound = 1.0 / np.sqrt(fan_in)
        tensors[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)

    return ModelParameters(
        hidden=hidden,
        n_layers=n_layers,
        n_solvers=n_solvers,
        tensors=tensors,
        homogeneous=homogeneous,
        feature_mode=feature_mode,
        feature_seed=seed,
    )
