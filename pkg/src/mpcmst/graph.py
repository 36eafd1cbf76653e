"""Problem instances: parsing, sequential pre-processing and generators.

Rooting, the spanning check, the diameter estimate and the component split
run sequentially on the harness side; their cost is not charged to the
simulator.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_WEIGHT = 1 << 20


class GraphFormatError(ValueError):
    """Malformed edge-list input."""


class NotSpanningError(ValueError):
    """The flagged tree edges do not form a spanning tree (or forest)."""


@dataclass
class WeightedGraph:
    """Edge-weighted graph on vertices ``0..n-1`` with tree-membership flags.

    ``vertex_ids``/``edge_ids`` map back to a parent instance when the graph
    is a component produced by :func:`split_components`.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    is_tree: np.ndarray
    W: int = DEFAULT_MAX_WEIGHT
    vertex_ids: np.ndarray | None = field(default=None, repr=False)
    edge_ids: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.int64)
        self.v = np.asarray(self.v, dtype=np.int64)
        self.w = np.asarray(self.w, dtype=np.int64)
        self.is_tree = np.asarray(self.is_tree, dtype=bool)
        if not (len(self.u) == len(self.v) == len(self.w) == len(self.is_tree)):
            raise ValueError("edge arrays must have equal length")

    @classmethod
    def from_edges(cls, n, edges, W=None):
        """Build from ``(u, v, w, is_tree)`` tuples."""
        edges = list(edges)
        if edges:
            u, v, w, t = (np.array(c) for c in zip(*edges))
        else:
            u = v = w = np.zeros(0, dtype=np.int64)
            t = np.zeros(0, dtype=bool)
        if W is None:
            W = int(max(w.max(), 1)) if len(w) else 1
        g = cls(n, u, v, w, t, W=W)
        check_graph(g)
        return g

    @property
    def m(self) -> int:
        return len(self.u)

    def edges(self):
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist(), self.is_tree.tolist()))

    def tree_edge_ids(self) -> np.ndarray:
        return np.flatnonzero(self.is_tree)

    def nontree_edge_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.is_tree)

    def with_weights(self, w) -> "WeightedGraph":
        return WeightedGraph(self.n, self.u.copy(), self.v.copy(), np.asarray(w, dtype=np.int64),
                             self.is_tree.copy(), W=max(self.W, int(np.max(w)) if len(w) else 1))

    def to_text(self) -> str:
        lines = [str(self.n)]
        for a, b, c, t in self.edges():
            lines.append(f"{a} {b} {c} {'T' if t else 'N'}")
        return "\n".join(lines) + "\n"


def check_graph(g: WeightedGraph) -> WeightedGraph:
    """Validate ids, self-loops, weights and duplicates; return ``g``."""
    if g.n <= 0:
        raise GraphFormatError("graph must have at least one vertex")
    if g.m:
        if g.u.min() < 0 or g.v.min() < 0 or max(g.u.max(), g.v.max()) >= g.n:
            raise GraphFormatError("vertex id out of range")
        if np.any(g.u == g.v):
            raise GraphFormatError("self-loop")
        if g.w.min() <= 0:
            raise GraphFormatError("nonpositive weight")
        lo = np.minimum(g.u, g.v)
        hi = np.maximum(g.u, g.v)
        key = (lo * g.n + hi) * 2 + g.is_tree
        if len(np.unique(key)) != len(key):
            raise GraphFormatError("duplicate edge")
    return g


def parse_edge_list(text: str) -> WeightedGraph:
    """Parse the ``n`` / ``u v w T|N`` edge-list format.

    A tree edge and a non-tree edge may join the same pair; two edges with
    the same endpoints and the same flag are rejected as duplicates.
    """
    n = None
    rows = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1:
                raise GraphFormatError(f"line {lineno}: expected vertex count")
            try:
                n = int(parts[0])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: bad vertex count {parts[0]!r}") from None
            if n <= 0:
                raise GraphFormatError(f"line {lineno}: vertex count must be positive")
            continue
        if len(parts) != 4:
            raise GraphFormatError(f"line {lineno}: expected 'u v w flag'")
        try:
            a, b, w = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer field") from None
        flag = parts[3].upper()
        if flag not in ("T", "N"):
            raise GraphFormatError(f"line {lineno}: flag must be T or N")
        if not (0 <= a < n and 0 <= b < n):
            raise GraphFormatError(f"line {lineno}: vertex id out of range")
        if a == b:
            raise GraphFormatError(f"line {lineno}: self-loop")
        if w <= 0:
            raise GraphFormatError(f"line {lineno}: nonpositive weight")
        key = (min(a, b), max(a, b), flag)
        if key in seen:
            raise GraphFormatError(f"line {lineno}: duplicate edge")
        seen.add(key)
        rows.append((a, b, w, flag == "T"))
    if n is None:
        raise GraphFormatError("empty input")
    return WeightedGraph.from_edges(n, rows)


@dataclass
class RootedTree:
    root: int
    parent: np.ndarray
    weight: np.ndarray  # weight of {v, parent(v)}; 0 at the root
    edge_id: np.ndarray  # index of {v, parent(v)} in the graph; -1 at the root

    @property
    def n(self) -> int:
        return len(self.parent)

    def depth(self) -> np.ndarray:
        order = bfs_order(self)
        depth = np.zeros(self.n, dtype=np.int64)
        for x in order[1:]:
            depth[x] = depth[self.parent[x]] + 1
        return depth

    def children(self) -> list[list[int]]:
        ch = [[] for _ in range(self.n)]
        for x in range(self.n):
            if x != self.root:
                ch[self.parent[x]].append(x)
        return ch


def bfs_order(t: RootedTree) -> list[int]:
    ch = t.children()
    order = [t.root]
    i = 0
    while i < len(order):
        order.extend(ch[order[i]])
        i += 1
    return order


def validate_and_root(g: WeightedGraph, root: int = 0) -> RootedTree:
    """Check the flagged edges span ``g`` as a tree and orient them to ``root``."""
    if not 0 <= root < g.n:
        raise ValueError("root out of range")
    tid = g.tree_edge_ids()
    if len(tid) != g.n - 1:
        raise NotSpanningError(f"not a spanning tree: {len(tid)} tree edges for {g.n} vertices")
    adj = [[] for _ in range(g.n)]
    for e in tid.tolist():
        a, b = int(g.u[e]), int(g.v[e])
        adj[a].append((b, e))
        adj[b].append((a, e))
    parent = np.full(g.n, -1, dtype=np.int64)
    weight = np.zeros(g.n, dtype=np.int64)
    edge_id = np.full(g.n, -1, dtype=np.int64)
    parent[root] = root
    queue = deque([root])
    seen = 1
    while queue:
        x = queue.popleft()
        for y, e in adj[x]:
            if parent[y] == -1:
                parent[y] = x
                weight[y] = g.w[e]
                edge_id[y] = e
                seen += 1
                queue.append(y)
    if seen != g.n:
        raise NotSpanningError("not a spanning tree: tree edges are disconnected")
    return RootedTree(root, parent, weight, edge_id)


@dataclass(frozen=True)
class DiameterEstimate:
    exact_D: int
    D_hat: int


def _farthest(adj, src):
    dist = {src: 0}
    queue = deque([src])
    last = src
    while queue:
        x = queue.popleft()
        last = x
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return last, dist[last]


def tree_diameter(t: RootedTree) -> int:
    adj = [[] for _ in range(t.n)]
    for x in range(t.n):
        if x != t.root:
            adj[x].append(int(t.parent[x]))
            adj[int(t.parent[x])].append(x)
    far, _ = _farthest(adj, t.root)
    _, d = _farthest(adj, far)
    return d


def estimate_diameter(t: RootedTree, seed: int = 0) -> DiameterEstimate:
    """Exact diameter by double BFS plus a seeded draw from ``[D, 2D]``."""
    d = tree_diameter(t)
    rng = np.random.default_rng([seed, 0x0D1A])
    return DiameterEstimate(d, int(d + rng.integers(0, d + 1)))


def split_components(g: WeightedGraph) -> list[WeightedGraph]:
    """Partition ``g`` by the components of its tree-edge forest.

    Each component is relabelled to ``0..k-1``; ``vertex_ids``/``edge_ids``
    map back. A non-tree edge joining two forest components means no
    spanning forest exists and raises :class:`NotSpanningError`; so does a
    cycle among the tree edges.
    """
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.tree_edge_ids().tolist():
        a, b = find(int(g.u[e])), find(int(g.v[e]))
        if a == b:
            raise NotSpanningError("not a spanning forest: tree edges contain a cycle")
        parent[a] = b
    comp = np.array([find(x) for x in range(g.n)], dtype=np.int64)
    nt = g.nontree_edge_ids()
    if len(nt) and np.any(comp[g.u[nt]] != comp[g.v[nt]]):
        raise NotSpanningError("not a spanning forest: a non-tree edge joins two tree components")
    roots, label = np.unique(comp, return_inverse=True)
    out = []
    for c in range(len(roots)):
        verts = np.flatnonzero(label == c)
        local = np.full(g.n, -1, dtype=np.int64)
        local[verts] = np.arange(len(verts))
        eids = np.flatnonzero(label[g.u] == c)
        sub = WeightedGraph(len(verts), local[g.u[eids]], local[g.v[eids]], g.w[eids].copy(),
                            g.is_tree[eids].copy(), W=g.W, vertex_ids=verts, edge_ids=eids)
        out.append(sub)
    return out


# -- generators ----------------------------------------------------------------

def random_tree_parent(n: int, diameter: int, rng: np.random.Generator) -> np.ndarray:
    """Random tree with exactly the given diameter, as a parent array rooted at 0."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n == 1:
        if diameter != 0:
            raise ValueError("a single vertex has diameter 0")
        return np.zeros(1, dtype=np.int64)
    if not 1 <= diameter < n:
        raise ValueError(f"unsatisfiable diameter {diameter} for n={n}")
    if diameter <= 1 and n > 2:
        raise ValueError(f"unsatisfiable diameter {diameter} for n={n}")
    # spine s_0..s_D; hanging vertices at spine index i may reach min(i, D-i) deep
    parent = np.empty(n, dtype=np.int64)
    budget = np.empty(n, dtype=np.int64)
    parent[0] = 0
    budget[0] = 0
    for i in range(1, diameter + 1):
        parent[i] = i - 1
    idx = np.arange(diameter + 1)
    budget[: diameter + 1] = np.minimum(idx, diameter - idx)
    eligible = [i for i in range(diameter + 1) if budget[i] > 0]
    for x in range(diameter + 1, n):
        y = eligible[int(rng.integers(len(eligible)))]
        parent[x] = y
        budget[x] = budget[y] - 1
        if budget[x] > 0:
            eligible.append(x)
    # relabel so ids carry no structure; vertex 0 stays some spine vertex
    perm = rng.permutation(n)
    out = np.empty(n, dtype=np.int64)
    out[perm] = perm[parent]
    root = perm[0]
    # re-root the array at vertex 0 of the new labelling
    return _reroot(out, root, 0)


def _reroot(parent: np.ndarray, old_root: int, new_root: int) -> np.ndarray:
    parent = parent.copy()
    path = [new_root]
    while path[-1] != old_root:
        path.append(int(parent[path[-1]]))
    for child, par in zip(path[:-1], path[1:]):
        parent[par] = child
    parent[new_root] = new_root
    return parent


def _lifting_path_max(parent, pw, depth, a, b):
    """Max tree-edge weight on the a-b paths, vectorised binary lifting."""
    n = len(parent)
    levels = max(1, int(np.ceil(np.log2(max(depth.max(), 1) + 1))) + 1)
    up = [parent.copy()]
    mx = [pw.copy()]
    for _ in range(1, levels):
        prev_up, prev_mx = up[-1], mx[-1]
        up.append(prev_up[prev_up])
        mx.append(np.maximum(prev_mx, prev_mx[prev_up]))
    a = a.copy()
    b = b.copy()
    best = np.zeros(len(a), dtype=np.int64)
    swap = depth[a] < depth[b]
    a[swap], b[swap] = b[swap], a[swap]
    diff = depth[a] - depth[b]
    for j in range(levels):
        sel = (diff >> j) & 1 == 1
        best[sel] = np.maximum(best[sel], mx[j][a[sel]])
        a[sel] = up[j][a[sel]]
    for j in range(levels - 1, -1, -1):
        sel = up[j][a] != up[j][b]
        best[sel] = np.maximum(best[sel], np.maximum(mx[j][a[sel]], mx[j][b[sel]]))
        a[sel] = up[j][a[sel]]
        b[sel] = up[j][b[sel]]
    neq = a != b
    best[neq] = np.maximum(best[neq], np.maximum(pw[a[neq]], pw[b[neq]]))
    return best


def _depths(parent):
    n = len(parent)
    depth = np.full(n, -1, dtype=np.int64)
    root = int(np.flatnonzero(parent == np.arange(n))[0])
    depth[root] = 0
    children = [[] for _ in range(n)]
    for x in range(n):
        if x != root:
            children[parent[x]].append(x)
    stack = [root]
    while stack:
        x = stack.pop()
        for y in children[x]:
            depth[y] = depth[x] + 1
            stack.append(y)
    return depth


def _sample_chords(n, count, parent, rng):
    root_mask = parent == np.arange(n)
    tree_keys = set()
    for x in np.flatnonzero(~root_mask).tolist():
        a, b = x, int(parent[x])
        tree_keys.add(min(a, b) * n + max(a, b))
    max_chords = n * (n - 1) // 2 - (n - 1)
    if count > max_chords:
        raise ValueError(f"cannot place {count} non-tree edges on {n} vertices")
    chosen = set()
    out = []
    while len(out) < count:
        need = count - len(out)
        a = rng.integers(0, n, size=2 * need + 8)
        b = rng.integers(0, n, size=2 * need + 8)
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y:
                continue
            k = min(x, y) * n + max(x, y)
            if k in tree_keys or k in chosen:
                continue
            chosen.add(k)
            out.append((x, y))
            if len(out) == count:
                break
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def _assemble(n, parent, pw, chords, cw, W, rng, shuffle=True):
    kids = np.flatnonzero(parent != np.arange(n))
    u = np.concatenate([kids, chords[:, 0]])
    v = np.concatenate([parent[kids], chords[:, 1]])
    w = np.concatenate([pw[kids], cw])
    t = np.concatenate([np.ones(len(kids), dtype=bool), np.zeros(len(chords), dtype=bool)])
    if shuffle:
        perm = rng.permutation(len(u))
        u, v, w, t = u[perm], v[perm], w[perm], t[perm]
    return WeightedGraph(n, u, v, w, t, W=W)


def generate_instance(kind: str, params: dict | None = None, seed: int = 0) -> WeightedGraph:
    """Seeded instance generator.

    Kinds: ``random_tree_with_diameter`` (n, D), ``random_graph_with_mst``
    (n, m, D), ``perturbed_mst`` (n, m, D, k), ``random_weights`` (n, m, D;
    arbitrary chord weights, verdict unknown) and ``lower_bound`` (n,
    cycles). ``m`` counts all edges including the n-1 tree edges.
    """
    p = dict(params or {})
    rng = np.random.default_rng(seed)
    W = int(p.get("W", DEFAULT_MAX_WEIGHT))
    if kind == "lower_bound":
        return _lower_bound(int(p["n"]), int(p.get("cycles", 1)))
    n = int(p["n"])
    D = int(p.get("D", min(n - 1, 4)))
    if n > 1 and D >= n:
        raise ValueError(f"unsatisfiable params: D={D} >= n={n}")
    parent = random_tree_parent(n, D if n > 1 else 0, rng)
    half = max(W // 2, 1)
    pw = rng.integers(1, half + 1, size=n)
    pw[0] = 0
    if kind == "random_tree_with_diameter":
        return _assemble(n, parent, pw, np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64), W, rng)
    m = int(p.get("m", n - 1))
    count = m - (n - 1)
    if count < 0:
        raise ValueError("m must be at least n-1")
    chords = _sample_chords(n, count, parent, rng)
    if kind == "random_weights":
        cw = rng.integers(1, W + 1, size=len(chords))
        return _assemble(n, parent, pw, chords, cw, W, rng)
    depth = _depths(parent)
    pm = _lifting_path_max(parent, pw, depth, chords[:, 0], chords[:, 1]) if len(chords) \
        else np.zeros(0, dtype=np.int64)
    cw = pm + rng.integers(1, half + 1, size=len(chords))
    if kind == "random_graph_with_mst":
        return _assemble(n, parent, pw, chords, cw, W, rng)
    if kind == "perturbed_mst":
        k = int(p.get("k", 1))
        ok = np.flatnonzero(pm >= 2)
        if k > len(ok):
            raise ValueError("not enough non-tree edges to perturb")
        pick = rng.choice(ok, size=k, replace=False)
        cw = cw.copy()
        cw[pick] = rng.integers(1, pm[pick])
        return _assemble(n, parent, pw, chords, cw, W, rng)
    raise ValueError(f"unknown instance kind {kind!r}")


def _lower_bound(n: int, cycles: int) -> WeightedGraph:
    """One n-cycle or two n/2-cycles, plus an apex joined to every vertex.

    Cycle edges weigh 1 and apex edges 2. The flagged tree drops one edge
    per cycle and joins each cycle to the apex once, which is minimum.
    """
    if cycles not in (1, 2):
        raise ValueError("cycles must be 1 or 2")
    if n < 3 * cycles or (cycles == 2 and n % 2):
        raise ValueError("need n >= 3 per cycle (and n even for two cycles)")
    size = n // cycles
    rows = []
    for c in range(cycles):
        base = c * size
        for i in range(size):
            a, b = base + i, base + (i + 1) % size
            rows.append((a, b, 1, i != size - 1))
    apex = n
    for x in range(n):
        rows.append((x, apex, 2, x % size == 0))
    return WeightedGraph.from_edges(n + 1, rows, W=2)
