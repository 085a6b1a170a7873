"""Immutable undirected graph in CSR form, loaders and permutation utilities."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class GraphParseError(ValueError):
    """Raised when an input file cannot be parsed."""


class GraphValidationError(ValueError):
    """Raised when a graph violates a structural invariant."""


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted, simple graph.

    Adjacency is stored as CSR (indptr/indices) with sorted neighbor lists.
    ``features`` is an optional (num_nodes, d) float64 matrix, ``node_labels``
    an optional integer class per node.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    features: np.ndarray | None = None
    node_labels: np.ndarray | None = None

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edge_array(self) -> np.ndarray:
        """Edges as an (m, 2) array with u < v, sorted lexicographically."""
        us = np.repeat(np.arange(self.num_nodes), np.diff(self.indptr))
        mask = us < self.indices
        return np.column_stack([us[mask], self.indices[mask]])

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.num_nodes != other.num_nodes:
            return False
        if not (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)):
            return False
        for a, b in ((self.features, other.features),
                     (self.node_labels, other.node_labels)):
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True

    def to_json_dict(self) -> dict:
        d: dict = {
            "num_nodes": self.num_nodes,
            "edges": self.edge_array().tolist(),
        }
        if self.features is not None:
            d["features"] = self.features.tolist()
        if self.node_labels is not None:
            d["labels"] = self.node_labels.tolist()
        return d


@dataclass(frozen=True)
class NodePermutation:
    """Bijective relabeling sigma: old index -> new index."""

    forward: np.ndarray

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=np.int64)
        object.__setattr__(self, "forward", fwd)
        n = len(fwd)
        if not np.array_equal(np.sort(fwd), np.arange(n)):
            raise GraphValidationError("permutation is not a bijection")

    def inverse(self) -> "NodePermutation":
        inv = np.empty_like(self.forward)
        inv[self.forward] = np.arange(len(self.forward))
        return NodePermutation(inv)

    @staticmethod
    def identity(n: int) -> "NodePermutation":
        return NodePermutation(np.arange(n))

    @staticmethod
    def random(n: int, rng: np.random.Generator) -> "NodePermutation":
        return NodePermutation(rng.permutation(n))


def make_graph(num_nodes: int, edges, features=None, labels=None) -> Graph:
    """Build and validate a Graph from an edge list (any iterable of pairs).

    Duplicate and reversed edges are collapsed; self-loops are rejected.
    """
    edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges.min() < 0 or edges.max() >= num_nodes):
        raise GraphValidationError(
            f"edge endpoint out of range [0, {num_nodes})")
    if len(edges) and np.any(edges[:, 0] == edges[:, 1]):
        raise GraphValidationError("self-loops are not allowed")
    lo = np.minimum(edges[:, 0], edges[:, 1]) if len(edges) else edges[:, 0]
    hi = np.maximum(edges[:, 0], edges[:, 1]) if len(edges) else edges[:, 1]
    uniq = np.unique(np.column_stack([lo, hi]), axis=0) if len(edges) else edges

    both = np.concatenate([uniq, uniq[:, ::-1]]) if len(uniq) else uniq
    order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else []
    both = both[order] if len(both) else both
    counts = np.bincount(both[:, 0], minlength=num_nodes) if len(both) \
        else np.zeros(num_nodes, dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = both[:, 1].astype(np.int64) if len(both) \
        else np.empty(0, dtype=np.int64)

    feats = None
    if features is not None:
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != num_nodes:
            raise GraphValidationError(
                f"feature matrix has {feats.shape[0] if feats.ndim == 2 else '?'} "
                f"rows, expected {num_nodes}")
    labs = None
    if labels is not None:
        labs = np.asarray(labels, dtype=np.int64)
        if labs.shape != (num_nodes,):
            raise GraphValidationError("label vector length mismatch")
    return Graph(num_nodes, indptr, indices, feats, labs)


def validate(g: Graph) -> None:
    """Check all structural invariants; raise GraphValidationError on breach."""
    if g.num_nodes < 0:
        raise GraphValidationError("negative node count")
    if len(g.indptr) != g.num_nodes + 1 or g.indptr[0] != 0:
        raise GraphValidationError("malformed CSR offsets")
    if np.any(np.diff(g.indptr) < 0) or g.indptr[-1] != len(g.indices):
        raise GraphValidationError("CSR offsets not monotone/complete")
    for u in range(g.num_nodes):
        nbrs = g.neighbors(u)
        if len(nbrs) and (nbrs.min() < 0 or nbrs.max() >= g.num_nodes):
            raise GraphValidationError("neighbor index out of range")
        if np.any(np.diff(nbrs) <= 0):
            raise GraphValidationError("neighbor list not strictly ascending")
        if np.any(nbrs == u):
            raise GraphValidationError("self-loop detected")
    # symmetry
    for u in range(g.num_nodes):
        for v in g.neighbors(u):
            if not g.has_edge(int(v), u):
                raise GraphValidationError(f"edge ({u},{v}) not symmetric")
    if g.features is not None and g.features.shape[0] != g.num_nodes:
        raise GraphValidationError("feature row count mismatch")
    if g.node_labels is not None and g.node_labels.shape != (g.num_nodes,):
        raise GraphValidationError("label vector length mismatch")


def load_edge_list(data) -> Graph:
    """Parse the plain-text edge list format.

    Lines: "# comment", optional "n <count>" header, "u v" pairs.
    Accepts bytes or str.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    declared_n = None
    edges = []
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "n":
            if len(parts) != 2:
                raise GraphParseError(f"line {lineno}: malformed header {line!r}")
            try:
                declared_n = int(parts[1])
            except ValueError:
                raise GraphParseError(f"line {lineno}: bad node count {parts[1]!r}")
            continue
        if len(parts) != 2:
            raise GraphParseError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"line {lineno}: non-integer endpoint in {line!r}")
        if u < 0 or v < 0:
            raise GraphParseError(f"line {lineno}: negative node id")
        if u == v:
            raise GraphValidationError(f"line {lineno}: self-loop {u}")
        edges.append((u, v))
    n = max((max(u, v) for u, v in edges), default=-1) + 1
    if declared_n is not None:
        if declared_n < n:
            raise GraphValidationError(
                f"header declares {declared_n} nodes but edges reference {n}")
        n = declared_n
    return make_graph(n, edges)


def write_edge_list(g: Graph) -> str:
    lines = [f"n {g.num_nodes}"]
    lines.extend(f"{u} {v}" for u, v in g.edge_array())
    return "\n".join(lines) + "\n"


def load_json_graph(data) -> Graph:
    """Parse the JSON graph format (num_nodes, edges, optional features/labels)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise GraphParseError(f"invalid JSON: {e}") from e
    if not isinstance(obj, dict) or "num_nodes" not in obj or "edges" not in obj:
        raise GraphParseError("JSON graph needs 'num_nodes' and 'edges'")
    return make_graph(int(obj["num_nodes"]), obj["edges"],
                      features=obj.get("features"), labels=obj.get("labels"))


def permute(g: Graph, sigma: NodePermutation) -> Graph:
    """Relabel nodes: output node sigma(i) gets the neighbors/features of i."""
    if len(sigma.forward) != g.num_nodes:
        raise GraphValidationError("permutation size mismatch")
    fwd = sigma.forward
    edges = g.edge_array()
    new_edges = fwd[edges] if len(edges) else edges
    feats = None
    if g.features is not None:
        feats = np.empty_like(g.features)
        feats[fwd] = g.features
    labs = None
    if g.node_labels is not None:
        labs = np.empty_like(g.node_labels)
        labs[fwd] = g.node_labels
    return make_graph(g.num_nodes, new_edges, features=feats, labels=labs)
