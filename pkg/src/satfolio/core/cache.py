import threading
from pathlib import Path

from cachetools import LRUCache

from satfolio.core.cnf import load_dimacs
from satfolio.core.graph import FeatureMode, LiteralClauseGraph, build_graph

_lock = threading.Lock()
_cache = LRUCache(maxsize=4096)  # built graphs, reused across epochs and folds


def _graph_key(path: Path, mode: FeatureMode, seed: int) -> tuple:
    # The modification time invalidates entries of rewritten files
    stat = path.stat()
    return (str(path.resolve()), stat.st_mtime_ns, stat.st_size, mode.value, seed)


def get_graph(
    path: Path | str, mode: FeatureMode = FeatureMode.CUSTOM_PE, seed: int = 0
) -> LiteralClauseGraph:
    """Loads a DIMACS file and builds its graph, memoizing the result"""
    path = Path(path)
    key = _graph_key(path, mode, seed)

    with _lock:
        graph = _cache.get(key)
    if graph is not None:
        return graph

    graph = build_graph(load_dimacs(path), mode=mode, seed=seed)
    with _lock:
        _cache[key] = graph
    return graph


def clear_cache():
    with _lock:
        _cache.clear()
