"""Undirected trees, rooted views, and regular-tree generators.

Vertex labels are 1-based everywhere on the public surface.  All types are
immutable after construction and safe for concurrent read access.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CycleOrDisconnectedError,
    DisconnectedError,
    DuplicateEdgeError,
    InvalidDegreeError,
    InvalidSizeError,
    VertexOutOfRangeError,
)

__all__ = [
    "Tree",
    "RootedTree",
    "WeightedGraph",
    "build_tree",
    "root_tree",
    "path_between",
    "kruskal_mst",
    "cayley_tree",
    "star_tree",
    "binary_tree",
    "path_tree",
]


def edge_key(u: int, v: int) -> tuple[int, int]:
    """Canonical (sorted) form of an undirected edge."""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Tree:
    """Undirected tree on vertices 1..d."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    @property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.num_vertices + 1)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(n)) for v, n in adj.items()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["u", "v"])
            writer.writerows(self.edges)

    @classmethod
    def from_csv(cls, path) -> "Tree":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["u", "v"]:
            raise CycleOrDisconnectedError(f"{path}: expected header 'u,v'")
        edges = [(int(u), int(v)) for u, v in rows[1:]]
        d = max(max(u, v) for u, v in edges) if edges else 1
        return build_tree(d, edges)


@dataclass(frozen=True)
class RootedTree:
    """A Tree plus the filial relations induced by choosing a root.

    ``topo_order`` lists every parent before its children, starting at the
    root.  ``descendants[v]`` excludes v itself.
    """

    base: Tree
    root: int
    parent: dict[int, int] = field(compare=False)
    children: dict[int, tuple[int, ...]] = field(compare=False)
    descendants: dict[int, frozenset[int]] = field(compare=False)
    topo_order: tuple[int, ...] = field(compare=False)

    @property
    def num_vertices(self) -> int:
        return self.base.num_vertices


@dataclass(frozen=True)
class WeightedGraph:
    """Dense symmetric edge weights; the diagonal is ignored."""

    num_vertices: int
    weights: np.ndarray  # shape (d, d), weights[u-1, v-1]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.num_vertices, self.num_vertices):
            raise VertexOutOfRangeError("weight matrix shape mismatch")
        if not np.allclose(w, w.T, equal_nan=True):
            raise DisconnectedError("weight matrix must be symmetric")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_csv(cls, path) -> "WeightedGraph":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(x) for x in row] for row in rows[1:]])
        return cls(num_vertices=data.shape[0], weights=data)


def _check_vertex(v: int, d: int) -> None:
    if not (isinstance(v, (int, np.integer)) and 1 <= v <= d):
        raise VertexOutOfRangeError(f"vertex {v} not in 1..{d}")


def build_tree(num_vertices: int, edge_list) -> Tree:
    """Validate and build a Tree from an edge list.

    Raises CycleOrDisconnectedError unless the edges form a single connected
    acyclic graph spanning all ``num_vertices`` vertices.
    """
    d = int(num_vertices)
    if d < 1:
        raise InvalidSizeError("num_vertices must be >= 1")
    edges = []
    seen = set()
    for u, v in edge_list:
        _check_vertex(u, d)
        _check_vertex(v, d)
        if u == v:
            raise DuplicateEdgeError(f"self-loop at vertex {u}")
        key = edge_key(int(u), int(v))
        if key in seen:
            raise DuplicateEdgeError(f"duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if len(edges) != d - 1:
        raise CycleOrDisconnectedError(
            f"a tree on {d} vertices needs {d - 1} edges, got {len(edges)}"
        )
    tree = Tree(num_vertices=d, edges=tuple(sorted(edges)))
    # connectivity check; with |E| = d-1, connected implies acyclic
    reached = {1}
    stack = [1]
    adj = tree.adjacency
    while stack:
        for w in adj[stack.pop()]:
            if w not in reached:
                reached.add(w)
                stack.append(w)
    if len(reached) != d:
        raise CycleOrDisconnectedError("graph is not connected")
    return tree


def root_tree(tree: Tree, root: int) -> RootedTree:
    """Orient ``tree`` away from ``root``."""
    _check_vertex(root, tree.num_vertices)
    adj = tree.adjacency
    parent: dict[int, int] = {}
    children: dict[int, list[int]] = {v: [] for v in range(1, tree.num_vertices + 1)}
    order = [root]
    visited = {root}
    queue = [root]
    while queue:
        v = queue.pop(0)
        for w in adj[v]:
            if w not in visited:
                visited.add(w)
                parent[w] = v
                children[v].append(w)
                order.append(w)
                queue.append(w)
    descendants: dict[int, set[int]] = {v: set() for v in order}
    for v in reversed(order):
        for c in children[v]:
            descendants[v].add(c)
            descendants[v] |= descendants[c]
    return RootedTree(
        base=tree,
        root=root,
        parent=parent,
        children={v: tuple(c) for v, c in children.items()},
        descendants={v: frozenset(s) for v, s in descendants.items()},
        topo_order=tuple(order),
    )


def path_between(tree: Tree, u: int, v: int) -> list[tuple[int, int]]:
    """The unique edge sequence from u to v; empty when u == v."""
    _check_vertex(u, tree.num_vertices)
    _check_vertex(v, tree.num_vertices)
    if u == v:
        return []
    rooted = root_tree(tree, u)
    path = []
    w = v
    while w != u:
        p = rooted.parent[w]
        path.append((w, p))
        w = p
    return [(b, a) for a, b in reversed(path)]


def kruskal_mst(graph: WeightedGraph) -> Tree:
    """Maximum spanning tree via Kruskal's algorithm.

    Ties are broken by preferring the lexicographically smaller edge so the
    output is deterministic.
    """
    d = graph.num_vertices
    if d == 1:
        return Tree(num_vertices=1, edges=())
    candidates = sorted(
        ((u, v) for u in range(1, d + 1) for v in range(u + 1, d + 1)
         if np.isfinite(graph.weights[u - 1, v - 1])),
        key=lambda e: (-graph.weights[e[0] - 1, e[1] - 1], e),
    )
    parent = list(range(d + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for u, v in candidates:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            edges.append((u, v))
            if len(edges) == d - 1:
                break
    if len(edges) != d - 1:
        raise DisconnectedError("weighted graph is not connected")
    return build_tree(d, edges)


def cayley_tree(chi: int, depth: int) -> RootedTree:
    """Depth-truncated regular tree of degree ``chi``.

    Level 0 is the root, level 1 holds chi vertices, and level i >= 2 holds
    chi * (chi - 1)**(i - 1) vertices.  ``depth=0`` yields the single root.
    """
    if chi < 2:
        raise InvalidDegreeError("degree must be >= 2")
    if depth < 0:
        raise InvalidDegreeError("depth must be >= 0")
    edges = []
    next_label = 2
    frontier = [1]
    for level in range(depth):
        n_children = chi if level == 0 else chi - 1
        new_frontier = []
        for v in frontier:
            for _ in range(n_children):
                edges.append((v, next_label))
                new_frontier.append(next_label)
                next_label += 1
        frontier = new_frontier
    return root_tree(build_tree(next_label - 1, edges), 1)


def star_tree(d: int) -> RootedTree:
    """Star with center 1 and d - 1 leaves."""
    if d < 1:
        raise InvalidSizeError("star tree needs at least 1 vertex")
    edges = [(1, v) for v in range(2, d + 1)]
    return root_tree(build_tree(d, edges), 1)


def binary_tree(depth: int) -> RootedTree:
    """Rooted tree where the root and every internal vertex have 2 children."""
    if depth < 0:
        raise InvalidSizeError("depth must be >= 0")
    d = 2 ** (depth + 1) - 1
    edges = [(v // 2, v) for v in range(2, d + 1)]
    return root_tree(build_tree(d, edges), 1)


def path_tree(d: int) -> Tree:
    """Path 1 - 2 - ... - d."""
    return build_tree(d, [(v, v + 1) for v in range(1, d)])
