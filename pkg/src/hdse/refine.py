"""Distance-based color refinement (isomorphism testing) and named graphs.

Each iteration recolors a node with the hash of the multiset of
(distance-to-u, color-of-u) pairs over all nodes u. The distance can be the
plain shortest-path distance or the full per-pair hierarchy distance vector.
Color ids are interned in a dictionary shared across the two graphs of a
comparison, so histograms are directly comparable.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .coarsen import build_hierarchy
from .distance import hdse, spd_all_pairs
from .graph import Graph, GraphValidationError, make_graph


@dataclass(frozen=True)
class SpdEncoding:
    kind: str = "spd"


@dataclass(frozen=True)
class HdseEncoding:
    levels: int = 1
    algo: str = "newman"
    clip: int = 30
    seed: int = 0
    kind: str = "hdse"


Encoding = SpdEncoding | HdseEncoding


def _distance_keys(g: Graph, enc: Encoding) -> np.ndarray:
    """Per-pair hashable distance keys as an (n, n) object-free int array.

    SPD yields an (n, n) int matrix; HDSE yields (n, n, levels+1). Both are
    consumed row-wise as tuples.
    """
    if isinstance(enc, SpdEncoding):
        return spd_all_pairs(g).values[:, :, None]
    h = build_hierarchy(g, enc.algo, enc.levels, seed=enc.seed)
    return hdse(h, clip=enc.clip).entries.astype(np.int32)


@dataclass
class ColorMap:
    """Colors per refinement iteration plus distinct-color counts."""

    colors: list[np.ndarray] = field(default_factory=list)
    history: list[int] = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.colors[-1]

    def histogram(self) -> Counter:
        return Counter(self.final.tolist())


class _Interner:
    """Injective multiset -> color-id map shared across a graph pair."""

    def __init__(self):
        self.table: dict = {}

    def get(self, key) -> int:
        if key not in self.table:
            self.table[key] = len(self.table)
        return self.table[key]


def _initial_colors(g: Graph, interner: _Interner) -> np.ndarray:
    if g.features is not None:
        return np.array([interner.get(("feat", tuple(row)))
                         for row in g.features])
    return np.array([interner.get(("feat", ())) for _ in range(g.num_nodes)])


def _refine_step(keys: np.ndarray, colors: np.ndarray,
                 interner: _Interner) -> np.ndarray:
    n = len(colors)
    new = np.empty(n, dtype=np.int64)
    for v in range(n):
        multiset = tuple(sorted(
            (tuple(keys[v, u].tolist()), int(colors[u])) for u in range(n)))
        new[v] = interner.get(multiset)
    return new


def gd_wl_refine(g: Graph, enc: Encoding, max_iter: int | None = None) -> ColorMap:
    """Refine node colors until the partition stabilizes (or max_iter)."""
    if max_iter is None:
        max_iter = max(1, g.num_nodes)
    if max_iter < 1:
        raise GraphValidationError("max_iter must be >= 1")
    interner = _Interner()
    keys = _distance_keys(g, enc)
    cm = ColorMap()
    colors = _initial_colors(g, interner)
    cm.colors.append(colors)
    cm.history.append(len(np.unique(colors)))
    for _ in range(max_iter):
        new = _refine_step(keys, colors, interner)
        cm.colors.append(new)
        cm.history.append(len(np.unique(new)))
        if _same_partition(colors, new):
            break
        colors = new
    return cm


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """True when two colorings induce the same grouping of nodes."""
    seen: dict = {}
    for x, y in zip(a.tolist(), b.tolist()):
        if x in seen:
            if seen[x] != y:
                return False
        else:
            seen[x] = y
    return len(set(seen.values())) == len(seen)


def refine_pair(g1: Graph, g2: Graph, enc: Encoding,
                max_iter: int | None = None) -> tuple[ColorMap, ColorMap]:
    """Refine two graphs in lockstep through one shared color namespace."""
    if max_iter is None:
        max_iter = max(1, g1.num_nodes, g2.num_nodes)
    interner = _Interner()
    keys1 = _distance_keys(g1, enc)
    keys2 = _distance_keys(g2, enc)
    cm1, cm2 = ColorMap(), ColorMap()
    c1 = _initial_colors(g1, interner)
    c2 = _initial_colors(g2, interner)
    for cm, c in ((cm1, c1), (cm2, c2)):
        cm.colors.append(c)
        cm.history.append(len(np.unique(c)))
    for _ in range(max_iter):
        n1 = _refine_step(keys1, c1, interner)
        n2 = _refine_step(keys2, c2, interner)
        cm1.colors.append(n1)
        cm1.history.append(len(np.unique(n1)))
        cm2.colors.append(n2)
        cm2.history.append(len(np.unique(n2)))
        if _same_partition(c1, n1) and _same_partition(c2, n2):
            break
        c1, c2 = n1, n2
    return cm1, cm2


def distinguishes(g1: Graph, g2: Graph, enc: Encoding) -> bool:
    """True iff refinement ends with different color histograms."""
    if g1.num_nodes != g2.num_nodes:
        return True
    cm1, cm2 = refine_pair(g1, g2, enc)
    return cm1.histogram() != cm2.histogram()


# ---------------------------------------------------------------------------
# Named graphs

def generalized_petersen(n: int, k: int) -> Graph:
    """GP(n, k): outer n-cycle, inner n-cycle with step k, matching spokes."""
    edges = []
    for i in range(n):
        edges.append((i, (i + 1) % n))        # outer cycle
        edges.append((i, n + i))              # spoke
        edges.append((n + i, n + (i + k) % n))  # inner step-k cycle
    return make_graph(2 * n, edges)


def dodecahedron_graph() -> Graph:
    """Skeleton of the dodecahedron: 3-regular, 20 nodes, girth 5."""
    return generalized_petersen(10, 2)


def desargues_graph() -> Graph:
    """Desargues graph GP(10, 3): 3-regular bipartite, 20 nodes, girth 6."""
    return generalized_petersen(10, 3)


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphValidationError("cycle needs at least 3 nodes")
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def barbell_graph(k: int) -> Graph:
    """Two k-cliques joined by a single bridge edge."""
    if k < 2:
        raise GraphValidationError("barbell needs cliques of size >= 2")
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(k + i, k + j) for i in range(k) for j in range(i + 1, k)]
    edges.append((k - 1, k))
    return make_graph(2 * k, edges)


def community_pair_graph(n: int, p: float, q: float, seed: int) -> Graph:
    """Two n-node Erdos-Renyi blocks: intra-probability p, inter-probability q.

    Node labels record the block. A single deterministic inter-block edge is
    added when the sample produces none, so the graph stays connected-ish.
    """
    rng = np.random.default_rng(seed)
    edges = []
    for base in (0, n):
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    edges.append((base + i, base + j))
    inter = 0
    for i in range(n):
        for j in range(n):
            if rng.random() < q:
                edges.append((i, n + j))
                inter += 1
    if inter == 0:
        edges.append((0, n))
    labels = np.repeat([0, 1], n)
    return make_graph(2 * n, edges, labels=labels)


_NAME_RE = re.compile(r"^(\w+)(?:\(([^)]*)\))?$")


def make_named_graph(name: str) -> Graph:
    """Build a graph from a generator-name string.

    Accepted: "dodecahedron", "desargues", "cycle(n)", "barbell(k)",
    "community_pair(n,p,q,seed)".
    """
    m = _NAME_RE.match(name.strip())
    if not m:
        raise GraphValidationError(f"cannot parse graph name {name!r}")
    kind, argstr = m.group(1), m.group(2)
    args = [a.strip() for a in argstr.split(",")] if argstr else []
    if kind == "dodecahedron":
        return dodecahedron_graph()
    if kind == "desargues":
        return desargues_graph()
    if kind == "cycle":
        return cycle_graph(int(args[0]))
    if kind == "barbell":
        return barbell_graph(int(args[0]))
    if kind == "community_pair":
        n, p, q, seed = int(args[0]), float(args[1]), float(args[2]), int(args[3])
        return community_pair_graph(n, p, q, seed)
    raise GraphValidationError(f"unknown named graph {kind!r}")
