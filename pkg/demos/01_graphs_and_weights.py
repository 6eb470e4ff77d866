"""Directed graphs and the two stochastic weight matrices.

A strongly connected digraph admits a row-stochastic matrix A (each node
averages what it receives) and a column-stochastic matrix B (each node
splits what it sends). Their Perron vectors pi_r, pi_c drive everything
downstream -- the infinite powers, the contraction frames, and the
certified step-size bound.
"""

import numpy as np

from digrad import (
    column_stochastic,
    infinite_power,
    perron_pair,
    random_strongly_connected,
    row_stochastic,
)

g = random_strongly_connected(6, extra_edges=5, seed=11)
print(f"graph: n={g.n}, edges={len(g.edges())}")
for u, v in sorted(g.edges()):
    if u != v:
        print(f"  {u} -> {v}")

A = row_stochastic(g)
B = column_stochastic(g)
print("\nA (row sums 1):")
print(np.array_str(A.entries, precision=3, suppress_small=True))
print("row sums:", A.entries.sum(axis=1))
print("\nB (column sums 1):")
print(np.array_str(B.entries, precision=3, suppress_small=True))
print("column sums:", B.entries.sum(axis=0))

pair = perron_pair(A, B)
print("\npi_r =", np.round(pair.pi_row, 4))
print("pi_c =", np.round(pair.pi_col, 4))
print(f"pi_r . pi_c = {pair.inner:.6f}  (appears in the step-size bound)")

Ainf = infinite_power(A, pair)
print("\nA^inf = 1 pi_r^T, every row identical:")
print(np.array_str(Ainf, precision=4))
print("residual ||A A^inf - A^inf||_max =", np.max(np.abs(A.entries @ Ainf - Ainf)))
