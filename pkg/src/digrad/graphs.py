"""Directed communication graphs: construction, connectivity, generation, file I/O."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Digraph:
    """Directed graph on nodes 0..n-1 stored as in-neighbor lists.

    An edge (u, v) means u sends to v, i.e. u appears in ``in_neighbors[v]``.
    Every node carries a self-loop: a node always has access to its own
    state. Instances are immutable; ``out_neighbors`` is derived from
    ``in_neighbors`` at construction.

    Parameters
    ----------
    n : int
        Number of nodes.
    in_neighbors : tuple of tuples
        ``in_neighbors[v]`` lists the senders of v (v itself included).
    """

    n: int
    in_neighbors: tuple
    out_neighbors: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one node, got n={self.n}")
        if len(self.in_neighbors) != self.n:
            raise ValueError("in_neighbors must have one entry per node")
        canon = tuple(tuple(sorted(set(map(int, nb)))) for nb in self.in_neighbors)
        object.__setattr__(self, "in_neighbors", canon)
        out = [[] for _ in range(self.n)]
        for v, senders in enumerate(canon):
            for u in senders:
                if not 0 <= u < self.n:
                    raise ValueError(f"neighbor index {u} out of range for n={self.n}")
                out[u].append(v)
            if v not in senders:
                raise ValueError(f"node {v} is missing its self-loop")
        object.__setattr__(self, "out_neighbors", tuple(tuple(o) for o in out))

    @classmethod
    def from_edges(cls, n, edges):
        """Build a graph from (sender, receiver) pairs; self-loops must be included."""
        in_nb = [[] for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            in_nb[v].append(u)
        return cls(n, tuple(tuple(nb) for nb in in_nb))

    def edges(self):
        """All (sender, receiver) pairs, sorted, self-loops included."""
        return sorted((u, v) for v, senders in enumerate(self.in_neighbors) for u in senders)

    def in_degree(self, v):
        return len(self.in_neighbors[v])

    def out_degree(self, u):
        return len(self.out_neighbors[u])


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every node reaches every other along directed edges.

    One forward search over out-neighbors and one backward search over
    in-neighbors, both from node 0; strong connectivity is equivalent to
    both searches covering the whole node set.
    """
    def reaches_all(neighbors):
        seen = np.zeros(g.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v in neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())

    return reaches_all(g.out_neighbors) and reaches_all(g.in_neighbors)


def random_strongly_connected(n, extra_edges=0, seed=0) -> Digraph:
    """Random strongly connected digraph with self-loops.

    A random permutation of the nodes forms a directed Hamiltonian cycle
    (guaranteeing strong connectivity); ``extra_edges`` additional distinct
    edges are then drawn without replacement from the remaining ordered
    pairs. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if extra_edges < 0:
        raise ValueError("extra_edges must be >= 0")
    free_slots = max(0, n * (n - 1) - n) if n > 1 else 0
    if extra_edges > free_slots:
        raise ValueError(
            f"extra_edges={extra_edges} exceeds the {free_slots} free slots of n={n}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = {(v, v) for v in range(n)}
    if n > 1:
        for i in range(n):
            edges.add((int(order[i]), int(order[(i + 1) % n])))
    if extra_edges:
        free = sorted(
            (u, v)
            for u in range(n)
            for v in range(n)
            if u != v and (u, v) not in edges
        )
        picks = rng.choice(len(free), size=extra_edges, replace=False)
        for idx in sorted(picks):
            edges.add(free[idx])
    return Digraph.from_edges(n, edges)


def symmetrized(g: Digraph) -> Digraph:
    """Undirected companion graph: the union of the edge set and its reverse."""
    edges = set(g.edges())
    edges |= {(v, u) for u, v in edges}
    return Digraph.from_edges(g.n, edges)


def load_edge_list(path) -> Digraph:
    """Read a graph from a text file.

    Format: first significant line is the node count n, then one ``src dst``
    pair per line (src sends to dst). ``#`` starts a comment. Missing
    self-loops are inserted with a single logged warning rather than an
    error, so externally produced lists remain usable.
    """
    path = Path(path)
    n = None
    edges = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 1:
                raise ValueError(f"{path}:{lineno}: expected node count, got {raw!r}")
            try:
                n = int(tokens[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: node count is not an integer: {raw!r}")
            if n < 1:
                raise ValueError(f"{path}:{lineno}: node count must be >= 1")
            continue
        if len(tokens) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'src dst', got {raw!r}")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: edge endpoints must be integers: {raw!r}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"{path}:{lineno}: edge ({u}, {v}) out of range for n={n}")
        edges.append((u, v))
    if n is None:
        raise ValueError(f"{path}: file contains no node count")
    missing = [v for v in range(n) if (v, v) not in set(edges)]
    if missing:
        log.warning("%s: inserted %d missing self-loop(s)", path, len(missing))
        edges.extend((v, v) for v in missing)
    return Digraph.from_edges(n, edges)


def save_edge_list(g: Digraph, path):
    """Write a graph in the edge-list format understood by ``load_edge_list``."""
    lines = [str(g.n)]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    Path(path).write_text("\n".join(lines) + "\n")
