"""Directed-graph container, strong-connectivity check, random generator,
and edge-list round trips. Connectivity answers are cross-checked against
two independent oracles (Kosaraju and a Floyd-Warshall closure) so the
BFS-based production check never grades its own homework."""

import logging

import numpy as np
import pytest

from digrad.graphs import (
    Digraph,
    is_strongly_connected,
    load_edge_list,
    random_strongly_connected,
    save_edge_list,
    symmetrized,
)


# ---------------------------------------------------------------- oracles


def kosaraju_is_scc(g):
    """Textbook Kosaraju: one SCC containing every node <=> strongly connected."""
    n = g.n
    adj = [[] for _ in range(n)]       # forward edges u -> v
    radj = [[] for _ in range(n)]
    for u, v in g.edges():
        if u != v:
            adj[u].append(v)
            radj[v].append(u)

    order = []
    seen = [False] * n
    for s in range(n):
        if seen[s]:
            continue
        # iterative DFS with explicit post-order
        stack = [(s, iter(adj[s]))]
        seen[s] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()

    seen = [False] * n
    comp = 0
    for s in reversed(order):
        if seen[s]:
            continue
        comp += 1
        stack = [s]
        seen[s] = True
        while stack:
            node = stack.pop()
            for nxt in radj[node]:
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append(nxt)
    return comp == 1


def floyd_warshall_is_scc(g):
    """Boolean transitive closure; all-pairs reachable <=> strongly connected."""
    n = g.n
    reach = np.eye(n, dtype=bool)
    for u, v in g.edges():
        reach[u, v] = True
    for k in range(n):
        reach |= np.outer(reach[:, k], reach[k, :])
    return bool(reach.all())


# ------------------------------------------------------- connectivity


def test_cycle_is_strongly_connected():
    g = Digraph.from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 0), (1, 1), (2, 2)])
    assert is_strongly_connected(g)


def test_self_loops_only_is_not_strongly_connected():
    g = Digraph.from_edges(2, [(0, 0), (1, 1)])
    assert not is_strongly_connected(g)


def test_one_way_path_is_not_strongly_connected():
    # 0 -> 1 -> 2 with no way back
    g = Digraph.from_edges(3, [(0, 1), (1, 2), (0, 0), (1, 1), (2, 2)])
    assert not is_strongly_connected(g)


def test_connectivity_matches_both_oracles_on_random_graphs():
    # 200 random digraphs, n <= 6, edge density swept so both answers occur
    rng = np.random.default_rng(2024)
    verdicts = {True: 0, False: 0}
    for trial in range(200):
        n = int(rng.integers(2, 7))
        p = rng.uniform(0.05, 0.6)
        mask = rng.random((n, n)) < p
        np.fill_diagonal(mask, True)
        edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(mask))]
        g = Digraph.from_edges(n, edges)
        got = is_strongly_connected(g)
        assert got == kosaraju_is_scc(g)
        assert got == floyd_warshall_is_scc(g)
        verdicts[got] += 1
    assert verdicts[True] > 10 and verdicts[False] > 10  # sweep actually varied


# ---------------------------------------------------------- generator


def test_single_node_generator():
    g = random_strongly_connected(1, 0, seed=3)
    assert g.n == 1
    assert set(g.edges()) == {(0, 0)}


def test_three_node_no_extras_is_a_permutation_cycle():
    g = random_strongly_connected(3, 0, seed=7)
    assert len(list(g.edges())) == 6  # 3 self-loops + 3 cycle edges
    assert is_strongly_connected(g)
    # cross-edges form a single 3-cycle: every in/out degree is exactly 2
    for i in range(3):
        assert g.in_degree(i) == 2
        assert g.out_degree(i) == 2


def test_generator_edge_count_and_connectivity():
    g = random_strongly_connected(8, 5, seed=42)
    assert len(list(g.edges())) == 8 + 8 + 5
    assert is_strongly_connected(g)
    assert kosaraju_is_scc(g)


def test_generator_determinism_and_seed_sensitivity():
    a = random_strongly_connected(9, 6, seed=11)
    b = random_strongly_connected(9, 6, seed=11)
    c = random_strongly_connected(9, 6, seed=12)
    assert set(a.edges()) == set(b.edges())
    assert set(a.edges()) != set(c.edges())


def test_generator_extra_edges_clipped_and_validated():
    # requesting more extras than free slots must fail loudly
    with pytest.raises(ValueError):
        random_strongly_connected(3, 100, seed=0)
    # the full graph is reachable exactly at the slot count
    g = random_strongly_connected(3, 3, seed=0)
    assert len(list(g.edges())) == 9


def test_generator_always_strongly_connected_sweep():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 11))
        free = max(0, n * (n - 1) - n)
        extra = int(rng.integers(0, free + 1))
        g = random_strongly_connected(n, extra, seed=int(rng.integers(1 << 30)))
        assert is_strongly_connected(g)
        assert all((i, i) in set(g.edges()) for i in range(n))


def test_symmetrized_contains_both_directions():
    g = Digraph.from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 0), (1, 1), (2, 2)])
    s = symmetrized(g)
    es = set(s.edges())
    for u, v in g.edges():
        assert (u, v) in es and (v, u) in es


# ------------------------------------------------------------ edge lists


def test_load_edge_list_basic(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("3\n0 1\n1 2\n2 0\n")
    g = load_edge_list(f)
    assert g.n == 3
    # self-loops are inserted on load
    assert set(g.edges()) == {(0, 1), (1, 2), (2, 0), (0, 0), (1, 1), (2, 2)}


def test_load_edge_list_warns_about_missing_self_loops(tmp_path, caplog):
    f = tmp_path / "g.txt"
    f.write_text("2\n0 1\n1 0\n")
    with caplog.at_level(logging.WARNING):
        load_edge_list(f)
    assert any("self-loop" in r.getMessage() for r in caplog.records)


def test_load_edge_list_bad_token_names_line(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("3\n0 1\nx y\n")
    with pytest.raises(ValueError, match=r"g\.txt:3:"):
        load_edge_list(f)


def test_load_edge_list_out_of_range_node(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("2\n0 5\n")
    with pytest.raises(ValueError, match=r"g\.txt:2:"):
        load_edge_list(f)


def test_edge_list_round_trip(tmp_path):
    g = random_strongly_connected(6, 7, seed=99)
    f = tmp_path / "rt.txt"
    save_edge_list(g, f)
    h = load_edge_list(f)
    assert h.n == g.n
    assert set(h.edges()) == set(g.edges())
    # save(load(f)) == load(f) at the structural level
    f2 = tmp_path / "rt2.txt"
    save_edge_list(h, f2)
    assert set(load_edge_list(f2).edges()) == set(g.edges())


def test_comments_and_blank_lines_ignored(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# a graph\n\n3\n# edges below\n0 1\n1 2\n2 0\n\n")
    g = load_edge_list(f)
    assert g.n == 3
