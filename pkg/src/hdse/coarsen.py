"""Graph coarsening: partitions, projection matrices and multi-level hierarchies.

Three partitioners are provided: greedy modularity (Louvain), edge-betweenness
splitting (Girvan-Newman) and repeated maximal matching (METIS-style). All are
deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphValidationError, make_graph


@dataclass(frozen=True)
class Partition:
    """Surjective assignment of nodes to clusters 0..num_clusters-1."""

    assign: np.ndarray
    num_clusters: int

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.int64)
        object.__setattr__(self, "assign", a)
        if len(a) and (a.min() < 0 or a.max() >= self.num_clusters):
            raise GraphValidationError("cluster index out of range")
        if len(np.unique(a)) != self.num_clusters:
            raise GraphValidationError("partition not surjective")

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.num_clusters)

    @staticmethod
    def from_assignment(assign) -> "Partition":
        """Relabel an arbitrary labeling to contiguous ids by first appearance."""
        assign = np.asarray(assign, dtype=np.int64)
        _, first = np.unique(assign, return_index=True)
        order = assign[np.sort(first)]
        remap = {int(c): i for i, c in enumerate(order)}
        return Partition(np.array([remap[int(c)] for c in assign]), len(remap))


@dataclass(frozen=True)
class ProjectionMatrix:
    """One-hot cluster membership matrix and its column-normalized form."""

    raw: np.ndarray          # (n, c) one-hot
    normalized: np.ndarray   # raw / sqrt(cluster size), orthonormal columns
    cluster_sizes: np.ndarray

    @staticmethod
    def from_partition(p: Partition) -> "ProjectionMatrix":
        n = len(p.assign)
        raw = np.zeros((n, p.num_clusters))
        raw[np.arange(n), p.assign] = 1.0
        sizes = p.cluster_sizes().astype(np.float64)
        return ProjectionMatrix(raw, raw / np.sqrt(sizes), sizes)


def modularity(g: Graph, p: Partition) -> float:
    """Newman modularity of a partition; 0.0 for an edgeless graph."""
    m = g.num_edges
    if m == 0:
        return 0.0
    deg = g.degrees().astype(np.float64)
    edges = g.edge_array()
    intra = np.sum(p.assign[edges[:, 0]] == p.assign[edges[:, 1]])
    deg_sum = np.bincount(p.assign, weights=deg, minlength=p.num_clusters)
    return intra / m - float(np.sum((deg_sum / (2.0 * m)) ** 2))


# ---------------------------------------------------------------------------
# Louvain

def _louvain_one_level(adj: list[dict[int, float]], self_w: np.ndarray,
                       m2: float, rng: np.random.Generator) -> np.ndarray:
    """One node-move phase on a weighted graph; returns community per node."""
    n = len(adj)
    comm = np.arange(n)
    deg = np.array([sum(w for w in a.values()) for a in adj]) + self_w
    comm_tot = deg.copy().astype(np.float64)

    order = np.arange(n)
    rng.shuffle(order)
    improved = True
    while improved:
        improved = False
        for v in order:
            cv = comm[v]
            k_v = deg[v]
            # weight from v to each neighboring community
            links: dict[int, float] = {}
            for u, w in adj[v].items():
                links[comm[u]] = links.get(comm[u], 0.0) + w
            comm_tot[cv] -= k_v
            base = links.get(cv, 0.0) - comm_tot[cv] * k_v / m2
            # ascending scan keeps the smallest community on gain ties
            best_c, best_gain = cv, 0.0
            for c in sorted(links):
                if c == cv:
                    continue
                gain = links[c] - comm_tot[c] * k_v / m2 - base
                if gain > best_gain + 1e-12:
                    best_c, best_gain = c, gain
            comm_tot[best_c] += k_v
            if best_c != cv:
                comm[v] = best_c
                improved = True
    return comm


def louvain(g: Graph, seed: int = 0) -> Partition:
    """Greedy modularity maximization with node moves and aggregation.

    Deterministic for a fixed seed: nodes are scanned in a seeded-shuffled
    order and gain ties go to the smallest community index.
    """
    if g.num_nodes == 0:
        raise GraphValidationError("empty graph")
    if g.num_edges == 0:
        return Partition(np.arange(g.num_nodes), g.num_nodes)

    rng = np.random.default_rng(seed)
    m2 = 2.0 * g.num_edges
    # current aggregated graph: weighted adjacency + self-loop weights
    adj: list[dict[int, float]] = [dict() for _ in range(g.num_nodes)]
    for u, v in g.edge_array():
        adj[u][v] = adj[u].get(v, 0.0) + 1.0
        adj[v][u] = adj[v].get(u, 0.0) + 1.0
    self_w = np.zeros(g.num_nodes)
    assign = np.arange(g.num_nodes)  # original node -> current aggregated node

    while True:
        comm = _louvain_one_level(adj, self_w, m2, rng)
        part = Partition.from_assignment(comm)
        if part.num_clusters == len(adj):
            break
        assign = part.assign[assign]
        # aggregate
        c = part.num_clusters
        new_adj: list[dict[int, float]] = [dict() for _ in range(c)]
        new_self = np.zeros(c)
        for v, a in enumerate(adj):
            cv = part.assign[v]
            new_self[cv] += self_w[v]
            for u, w in a.items():
                cu = part.assign[u]
                if cu == cv:
                    if u > v:
                        continue
                    new_self[cv] += 2.0 * w if u < v else w
                else:
                    new_adj[cv][cu] = new_adj[cv].get(cu, 0.0) + w
        adj, self_w = new_adj, new_self
        if len(adj) == 1:
            break
    return Partition.from_assignment(assign)


# ---------------------------------------------------------------------------
# Girvan-Newman

def _components(n: int, adj: list[set[int]]) -> np.ndarray:
    comp = np.full(n, -1, dtype=np.int64)
    c = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = c
        q = deque([s])
        while q:
            v = q.popleft()
            for u in adj[v]:
                if comp[u] < 0:
                    comp[u] = c
                    q.append(u)
        c += 1
    return comp


def edge_betweenness(n: int, adj: list[set[int]]) -> dict[tuple[int, int], float]:
    """Exact edge betweenness (Brandes accumulation over BFS trees)."""
    bet: dict[tuple[int, int], float] = {}
    for v in range(n):
        for u in adj[v]:
            if v < u:
                bet[(v, u)] = 0.0
    for s in range(n):
        sigma = np.zeros(n)
        dist = np.full(n, -1, dtype=np.int64)
        sigma[s] = 1.0
        dist[s] = 0
        order: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        q = deque([s])
        while q:
            v = q.popleft()
            order.append(v)
            for u in sorted(adj[v]):
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    q.append(u)
                if dist[u] == dist[v] + 1:
                    sigma[u] += sigma[v]
                    preds[u].append(v)
        delta = np.zeros(n)
        for v in reversed(order):
            for u in preds[v]:
                contrib = sigma[u] / sigma[v] * (1.0 + delta[v])
                key = (u, v) if u < v else (v, u)
                bet[key] += contrib
                delta[u] += contrib
    # each unordered pair counted from both endpoints
    return {e: b / 2.0 for e, b in bet.items()}


def girvan_newman(g: Graph, target: int | None = None) -> Partition:
    """Split by iterative removal of maximum-betweenness edges.

    ``target`` is the desired cluster count; ``None`` selects the partition of
    maximum modularity along the removal sequence. One edge is removed per
    iteration, ties broken by smallest edge id, and the betweenness is
    recomputed after every removal; removing whole tie groups at once would
    erase every edge of a vertex-transitive graph in one step and never
    produce a nontrivial split.
    """
    n = g.num_nodes
    if target is not None and target > n:
        raise GraphValidationError(f"target {target} exceeds {n} nodes")
    adj = [set(map(int, g.neighbors(v))) for v in range(n)]

    comp = _components(n, adj)
    best = Partition.from_assignment(comp)
    best_q = modularity(g, best)
    while any(adj[v] for v in range(n)):
        if target is not None and best.num_clusters >= target:
            return best
        bet = edge_betweenness(n, adj)
        bmax = max(bet.values())
        u, v = min(e for e, b in bet.items() if b >= bmax * (1.0 - 1e-9))
        adj[u].discard(v)
        adj[v].discard(u)
        comp = _components(n, adj)
        part = Partition.from_assignment(comp)
        if target is not None:
            best = part
        else:
            q = modularity(g, part)
            if q > best_q + 1e-12:
                best, best_q = part, q
    if target is not None and best.num_clusters < target:
        # only possible when ties split past the target in one batch
        return best
    return best


# ---------------------------------------------------------------------------
# Heavy-edge matching

def heavy_edge_matching(g: Graph, ratio: float) -> Partition:
    """Contract maximal matchings until cluster count <= ratio * num_nodes.

    Matching is greedy in ascending node-id order, pairing each unmatched node
    with its smallest-id unmatched neighbor. On an edgeless graph the result is
    the singleton partition regardless of ratio.
    """
    if not 0.0 < ratio < 1.0:
        raise GraphValidationError(f"ratio must be in (0,1), got {ratio}")
    n = g.num_nodes
    goal = ratio * n
    assign = np.arange(n)  # original node -> current cluster
    cur_n = n
    cur_edges = {tuple(e) for e in map(tuple, g.edge_array())}
    while cur_n > goal and cur_edges:
        adj: dict[int, list[int]] = {}
        for u, v in cur_edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        mate = {}
        for v in range(cur_n):
            if v in mate or v not in adj:
                continue
            for u in sorted(adj[v]):
                if u not in mate and u != v:
                    mate[v] = u
                    mate[u] = v
                    break
        label = np.arange(cur_n)
        for v, u in mate.items():
            label[max(v, u)] = min(v, u)
        part = Partition.from_assignment(label)
        assign = part.assign[assign]
        cur_edges = {(min(part.assign[u], part.assign[v]),
                      max(part.assign[u], part.assign[v]))
                     for u, v in cur_edges
                     if part.assign[u] != part.assign[v]}
        if part.num_clusters == cur_n:
            break  # no edges matched
        cur_n = part.num_clusters
    return Partition.from_assignment(assign)


# ---------------------------------------------------------------------------
# Coarse graphs and hierarchies

def build_coarse_graph(g: Graph, p: Partition) -> Graph:
    """Quotient graph: one node per cluster, self-loops dropped.

    Coarse features are the per-cluster means of the input features; labels
    are dropped.
    """
    if len(p.assign) != g.num_nodes:
        raise GraphValidationError("partition size mismatch")
    edges = g.edge_array()
    ce = p.assign[edges] if len(edges) else edges
    ce = ce[ce[:, 0] != ce[:, 1]] if len(ce) else ce
    feats = None
    if g.features is not None:
        sizes = p.cluster_sizes().astype(np.float64)
        feats = np.zeros((p.num_clusters, g.features.shape[1]))
        np.add.at(feats, p.assign, g.features)
        feats /= sizes[:, None]
    return make_graph(p.num_clusters, ce, features=feats)


def intra_cluster_edge_count(g: Graph, p: Partition) -> int:
    edges = g.edge_array()
    if not len(edges):
        return 0
    return int(np.sum(p.assign[edges[:, 0]] == p.assign[edges[:, 1]]))


@dataclass(frozen=True)
class Hierarchy:
    """Coarsening hierarchy: levels[0] is the input graph.

    ``maps[k]`` sends level-k nodes to level-(k+1) clusters. ``projected_features``
    holds the column-normalized projection chain applied to the input features
    (X_{k+1} = P^T X_k), which is what the linear attention path consumes;
    the per-level Graph.features carry plain cluster means instead.
    """

    levels: list[Graph]
    maps: list[Partition]
    projections: list[ProjectionMatrix]
    coarsening_ratios: list[float]
    projected_features: list[np.ndarray] | None = None
    intra_edges: list[int] = field(default_factory=list)
    algo: str = ""
    seed: int = 0

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def image(self, k: int) -> np.ndarray:
        """Composed map from level-0 nodes to level-k nodes."""
        img = np.arange(self.levels[0].num_nodes)
        for part in self.maps[:k]:
            img = part.assign[img]
        return img


_ALGOS = ("louvain", "newman", "hem")


def coarsen_once(g: Graph, algo: str, ratio: float, seed: int) -> Partition:
    if algo == "louvain":
        return louvain(g, seed=seed)
    if algo == "newman":
        return girvan_newman(g, target=None)
    if algo == "hem":
        return heavy_edge_matching(g, ratio)
    raise GraphValidationError(f"unknown coarsening algorithm {algo!r}")


def build_hierarchy(g: Graph, algo: str, levels: int,
                    ratio: float = 0.5, seed: int = 0) -> Hierarchy:
    """Apply a coarsening algorithm ``levels`` times.

    Once a level collapses to a single node, the remaining levels repeat that
    trivial level so the hierarchy always has ``levels + 1`` graphs.
    """
    if levels < 0:
        raise GraphValidationError("level count must be >= 0")
    if algo not in _ALGOS:
        raise GraphValidationError(f"unknown coarsening algorithm {algo!r}")
    graphs = [g]
    maps: list[Partition] = []
    projections: list[ProjectionMatrix] = []
    ratios: list[float] = []
    intra: list[int] = []
    proj_feats = [g.features] if g.features is not None else None
    for _ in range(levels):
        cur = graphs[-1]
        if cur.num_nodes == 1:
            part = Partition(np.zeros(1, dtype=np.int64), 1)
        else:
            part = coarsen_once(cur, algo, ratio, seed)
        maps.append(part)
        proj = ProjectionMatrix.from_partition(part)
        projections.append(proj)
        ratios.append(part.num_clusters / cur.num_nodes)
        intra.append(intra_cluster_edge_count(cur, part))
        graphs.append(build_coarse_graph(cur, part))
        if proj_feats is not None:
            proj_feats.append(proj.normalized.T @ proj_feats[-1])
    return Hierarchy(graphs, maps, projections, ratios,
                     projected_features=proj_feats, intra_edges=intra,
                     algo=algo, seed=seed)


def composed_projection(h: Hierarchy, c: int) -> ProjectionMatrix:
    """One-hot map from level-0 nodes straight to level-c clusters."""
    if not 1 <= c <= h.max_level:
        raise GraphValidationError(f"level {c} out of range [1, {h.max_level}]")
    raw = h.projections[0].raw
    for proj in h.projections[1:c]:
        raw = raw @ proj.raw
    sizes = raw.sum(axis=0)
    return ProjectionMatrix(raw, raw / np.sqrt(sizes), sizes)


def permute_hierarchy(h: Hierarchy, sigma) -> Hierarchy:
    """Relabel the base level by sigma, composing sigma into the first map.

    Coarse levels are untouched; no coarsening is re-run.
    """
    from .graph import permute
    g0 = permute(h.levels[0], sigma)
    inv = sigma.inverse().forward
    if not h.maps:
        return Hierarchy([g0], [], [], [], algo=h.algo, seed=h.seed)
    first = Partition(h.maps[0].assign[inv], h.maps[0].num_clusters)
    maps = [first] + list(h.maps[1:])
    projections = [ProjectionMatrix.from_partition(first)] + list(h.projections[1:])
    return Hierarchy([g0] + list(h.levels[1:]), maps, projections,
                     list(h.coarsening_ratios), algo=h.algo, seed=h.seed)


# ---------------------------------------------------------------------------
# Serialization

def hierarchy_to_json(h: Hierarchy) -> str:
    obj = {
        "levels": [g.to_json_dict() for g in h.levels],
        "maps": [p.assign.tolist() for p in h.maps],
        "ratios": h.coarsening_ratios,
        "algo": h.algo,
        "seed": h.seed,
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def hierarchy_from_json(data) -> Hierarchy:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    obj = json.loads(data)
    levels = [make_graph(d["num_nodes"], d["edges"],
                         features=d.get("features"), labels=d.get("labels"))
              for d in obj["levels"]]
    maps = [Partition(np.asarray(a, dtype=np.int64),
                      levels[k + 1].num_nodes)
            for k, a in enumerate(obj["maps"])]
    projections = [ProjectionMatrix.from_partition(p) for p in maps]
    proj_feats = None
    if levels[0].features is not None:
        proj_feats = [levels[0].features]
        for proj in projections:
            proj_feats.append(proj.normalized.T @ proj_feats[-1])
    return Hierarchy(levels, maps, projections, list(obj["ratios"]),
                     projected_features=proj_feats,
                     algo=obj.get("algo", ""), seed=int(obj.get("seed", 0)))
