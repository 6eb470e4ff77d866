"""Why a custom norm is needed, and how the contraction frame finds one.

A doubly stochastic matrix contracts consensus error in the plain 2-norm.
A merely row-stochastic matrix need not: there are error vectors whose
2-norm GROWS under one application of A, even though the error still
decays asymptotically (the error map has spectral radius < 1). The frame
construction (Schur decomposition + diagonal scaling) produces a norm
whose induced operator norm sigma is provably < 1, within a chosen slack
of the true spectral radius, so the per-step contraction inequality holds
unconditionally.
"""

import numpy as np

from digrad import (
    column_stochastic,
    contraction_frame,
    infinite_power,
    perron_pair,
    random_strongly_connected,
    row_stochastic,
)

g = random_strongly_connected(10, extra_edges=3, seed=37)
A = row_stochastic(g)
B = column_stochastic(g)
pair = perron_pair(A, B)
Ainf = infinite_power(A, pair)
n = g.n

# The error map e -> (A - A_inf) e acts invariantly on range(I - A_inf).
# Its operator 2-norm on that subspace exceeds 1 for this graph: build a
# witness vector from the top singular pair restricted to the subspace.
P = np.eye(n) - Ainf
Q, R = np.linalg.qr(P)
Q = Q[:, np.abs(np.diag(R)) > 1e-10]
_, svals, Vt = np.linalg.svd((A.entries - Ainf) @ Q)
e = Q @ Vt[0]
print(f"restricted operator 2-norm of the error map: {svals[0]:.6f}  (> 1)")
print(f"witness vector: ||A e - A_inf e||_2 / ||e - A_inf e||_2 = "
      f"{np.linalg.norm(A.entries @ e - Ainf @ e) / np.linalg.norm(e - Ainf @ e):.6f}")

# transient: the 2-norm error rises before it decays
x = e.copy()
print("\n k   ||x - A_inf x||_2   (iterating x <- A x from the witness)")
for k in range(6):
    print(f" {k}   {np.linalg.norm(x - Ainf @ x):.6f}")
    x = A.entries @ x

# random probing almost never finds the expanding cone -- it is thin
rng = np.random.default_rng(0)
grew = 0
for _ in range(2000):
    v = rng.standard_normal(n)
    before = np.linalg.norm(v - Ainf @ v)
    after = np.linalg.norm(A.entries @ v - Ainf @ v)
    grew += after > before
print(f"\n2-norm consensus error grew on {grew}/2000 random vectors "
      f"(the expanding cone is thin; the witness above is constructed, not sampled)")

rho = np.max(np.abs(np.linalg.eigvals(A.entries - Ainf)))
frame = contraction_frame(A, Ainf)
print(f"\nspectral radius rho(A - A_inf) = {rho:.6f}")
print(f"frame sigma_A = {frame.sigma:.6f}  (target band: [rho, rho + 0.1(1-rho)])")
print(f"norm equivalence: ||v||_2 <= {frame.to2:.3f} ||v||_A, "
      f"||v||_A <= {frame.from2:.3f} ||v||_2")

# in the frame norm the contraction NEVER fails -- not even on the witness
lhs = np.linalg.norm(frame.transform @ (A.entries @ e - Ainf @ e))
rhs = np.linalg.norm(frame.transform @ (e - Ainf @ e))
print(f"\nframe-norm ratio on the witness vector: {lhs / rhs:.6f}")

worst = 0.0
for _ in range(2000):
    v = rng.standard_normal(n)
    lhs = np.linalg.norm(frame.transform @ (A.entries @ v - Ainf @ v))
    rhs = np.linalg.norm(frame.transform @ (v - Ainf @ v))
    if rhs > 0:
        worst = max(worst, lhs / rhs)
print(f"max frame-norm ratio over 2000 random vectors: {worst:.6f} "
      f"<= sigma_A = {frame.sigma:.6f}")
