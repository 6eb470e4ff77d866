"""Stochastic weight matrices on digraphs, their Perron vectors and limit
powers, and the scaled-Schur norms under which consensus errors contract."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .graphs import Digraph, is_strongly_connected

_STOCH_TOL = 1e-12
_PERRON_TOL = 1e-14
_PERRON_RESIDUAL = 1e-10
_PERRON_MAXIT = 100_000


class WeightKind(enum.Enum):
    ROW_STOCHASTIC = "row"
    COLUMN_STOCHASTIC = "col"


@dataclass(frozen=True)
class WeightMatrix:
    """A stochastic mixing matrix tied to the digraph that supports it.

    Entry (i, j) is nonzero exactly when j sends to i, so both kinds share
    the adjacency support; the kind records which sums are normalized.
    Row-stochastic matrices average what a node receives, column-stochastic
    ones split what a node sends.
    """

    kind: WeightKind
    entries: np.ndarray
    graph: Digraph

    def __post_init__(self):
        W = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", W)
        n = self.graph.n
        if W.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}, got {W.shape}")
        if np.any(W < 0):
            raise ValueError("weights must be nonnegative")
        sums = W.sum(axis=1) if self.kind is WeightKind.ROW_STOCHASTIC else W.sum(axis=0)
        if np.max(np.abs(sums - 1.0)) > _STOCH_TOL:
            raise ValueError(f"{self.kind.value} sums deviate from 1 beyond {_STOCH_TOL}")
        # support must match the graph exactly: positive entry <=> edge j -> i
        for i in range(n):
            senders = set(self.graph.in_neighbors[i])
            for j in range(n):
                if (W[i, j] > 0) != (j in senders):
                    raise ValueError(f"support mismatch at entry ({i}, {j})")
        if np.any(np.diag(W) <= 0):
            raise ValueError("diagonal must be positive (self-loops carry weight)")

    def to_csv(self) -> str:
        """Row-major CSV dump with a '# kind=... n=...' header, for debugging."""
        buf = io.StringIO()
        buf.write(f"# kind={self.kind.value} n={self.graph.n}\n")
        for row in self.entries:
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        return buf.getvalue()


def _require_strongly_connected(g):
    if not is_strongly_connected(g):
        raise ValueError("graph must be strongly connected")


def row_stochastic(g: Digraph) -> WeightMatrix:
    """Uniform in-neighbor averaging: entry (i, j) = 1/|in(i)| for senders j of i."""
    _require_strongly_connected(g)
    W = np.zeros((g.n, g.n))
    for i, senders in enumerate(g.in_neighbors):
        W[i, list(senders)] = 1.0 / len(senders)
    return WeightMatrix(WeightKind.ROW_STOCHASTIC, W, g)


def column_stochastic(g: Digraph) -> WeightMatrix:
    """Uniform out-neighbor splitting: entry (i, j) = 1/|out(j)| for receivers i of j."""
    _require_strongly_connected(g)
    W = np.zeros((g.n, g.n))
    for j, receivers in enumerate(g.out_neighbors):
        W[list(receivers), j] = 1.0 / len(receivers)
    return WeightMatrix(WeightKind.COLUMN_STOCHASTIC, W, g)


def metropolis(g: Digraph) -> WeightMatrix:
    """Doubly stochastic weights on a symmetric graph (Metropolis rule).

    Off-diagonal weight 1/(1 + max degree of the endpoints), remainder on
    the diagonal. Requires the graph to equal its own reverse.
    """
    _require_strongly_connected(g)
    deg = [g.in_degree(v) - 1 for v in range(g.n)]  # neighbors excluding self
    W = np.zeros((g.n, g.n))
    for i, senders in enumerate(g.in_neighbors):
        if set(senders) != set(g.out_neighbors[i]):
            raise ValueError("metropolis weights need a symmetric graph")
        for j in senders:
            if j != i:
                W[i, j] = 1.0 / (1.0 + max(deg[i], deg[j]))
        W[i, i] = 1.0 - W[i].sum()
    return WeightMatrix(WeightKind.ROW_STOCHASTIC, W, g)


def is_doubly_stochastic(W: np.ndarray, tol=_STOCH_TOL) -> bool:
    W = np.asarray(W)
    return (
        np.max(np.abs(W.sum(axis=0) - 1.0)) <= tol
        and np.max(np.abs(W.sum(axis=1) - 1.0)) <= tol
    )


def _power_iterate(matvec, n):
    """Power iteration on a stochastic-matrix transpose/restriction, normalized
    to a probability vector; converges by Perron-Frobenius on strongly
    connected support."""
    v = np.full(n, 1.0 / n)
    for _ in range(_PERRON_MAXIT):
        w = matvec(v)
        w = w / w.sum()
        if np.max(np.abs(w - v)) <= _PERRON_TOL:
            return w
        v = w
    raise RuntimeError(f"power iteration did not converge in {_PERRON_MAXIT} steps")


def perron_left(A: WeightMatrix) -> np.ndarray:
    """Left Perron vector of a row-stochastic matrix, normalized to sum 1."""
    if A.kind is not WeightKind.ROW_STOCHASTIC:
        raise ValueError("perron_left expects a row-stochastic matrix")
    v = _power_iterate(lambda u: A.entries.T @ u, A.graph.n)
    _check_perron(v, A.entries.T @ v)
    return v


def perron_right(B: WeightMatrix) -> np.ndarray:
    """Right Perron vector of a column-stochastic matrix, normalized to sum 1."""
    if B.kind is not WeightKind.COLUMN_STOCHASTIC:
        raise ValueError("perron_right expects a column-stochastic matrix")
    v = _power_iterate(lambda u: B.entries @ u, B.graph.n)
    _check_perron(v, B.entries @ v)
    return v


def _check_perron(v, Av):
    if np.max(np.abs(Av - v)) > _PERRON_RESIDUAL:
        raise RuntimeError("Perron residual above tolerance")
    if np.any(v <= 0):
        raise RuntimeError("Perron vector is not strictly positive")
    if abs(v.sum() - 1.0) > _STOCH_TOL:
        raise RuntimeError("Perron vector normalization drifted")


@dataclass(frozen=True)
class PerronPair:
    """Left vector of the row-stochastic matrix, right vector of the
    column-stochastic one, and their inner product (always in (0, 1])."""

    pi_row: np.ndarray
    pi_col: np.ndarray
    inner: float

    def __post_init__(self):
        if np.any(self.pi_row <= 0) or np.any(self.pi_col <= 0):
            raise ValueError("Perron vectors must be strictly positive")
        for v in (self.pi_row, self.pi_col):
            if abs(v.sum() - 1.0) > _STOCH_TOL:
                raise ValueError("Perron vectors must sum to 1")
        if not 0.0 < self.inner <= 1.0 + _STOCH_TOL:
            raise ValueError(f"inner product {self.inner} outside (0, 1]")


def perron_pair(A: WeightMatrix, B: WeightMatrix) -> PerronPair:
    pr = perron_left(A)
    pc = perron_right(B)
    return PerronPair(pr, pc, float(pr @ pc))


def infinite_power(M: WeightMatrix, perron: PerronPair) -> np.ndarray:
    """Limit of M^k: rank-one projector onto the Perron directions."""
    n = M.graph.n
    ones = np.ones(n)
    if M.kind is WeightKind.ROW_STOCHASTIC:
        return np.outer(ones, perron.pi_row)
    return np.outer(perron.pi_col, ones)


def _op2norm(M):
    return float(np.linalg.svd(M, compute_uv=False)[0]) if M.size else 0.0


@dataclass(frozen=True)
class NormFrame:
    """A vector norm ||v|| = ||transform @ v||_2 under which mixing errors
    contract by a factor sigma < 1.

    ``to2`` and ``from2`` convert against the plain 2-norm:
    ||v||_2 <= to2 * ||v|| and ||v|| <= from2 * ||v||_2. Applied to stacked
    n-by-p states the transform acts along the node axis and the norm is
    Frobenius, which leaves all the constants unchanged.
    """

    transform: np.ndarray
    inv_transform: np.ndarray
    sigma: float
    to2: float
    from2: float

    def norm(self, X) -> float:
        """Frame norm of a vector or a stacked n-by-p state."""
        return float(np.linalg.norm(self.transform @ np.asarray(X)))


def _schur_spectral_radius(T):
    """Max eigenvalue magnitude read off a real Schur (quasi-triangular) form."""
    n = T.shape[0]
    mags = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            a, b = T[i, i], T[i, i + 1]
            c, d = T[i + 1, i], T[i + 1, i + 1]
            disc = 0.25 * (a - d) ** 2 + b * c
            if disc < 0:  # complex pair, |lambda|^2 = det
                mags.append(np.sqrt(a * d - b * c))
            else:
                r = np.sqrt(disc)
                mags.extend([abs(0.5 * (a + d) + r), abs(0.5 * (a + d) - r)])
            i += 2
        else:
            mags.append(abs(T[i, i]))
            i += 1
    return max(mags)


def _schur_block_starts(T):
    """Starts and sizes of the diagonal blocks of a real Schur form."""
    n = T.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def contraction_frame(M: WeightMatrix, M_inf: np.ndarray, slack=0.1) -> NormFrame:
    """Construct a norm under which M - M_inf has operator norm < 1.

    Real Schur decomposition M - M_inf = Q T Q^T followed by a diagonal
    scaling: the frame is D^{-1} Q^T. The scaling is geometric across the
    Schur diagonal blocks (power t per block) and balances the two
    off-diagonal entries within each complex-pair 2x2 block, so each scaled
    block's 2-norm equals its own spectral radius and shrinking t damps
    exactly the cross-block entries. The induced norm therefore tends to
    the spectral radius rho as t decreases, and t is chosen by bisection
    (after a coarse log-grid scan over [1e-8, 1], since the norm need not
    be monotone in t) as the largest value whose induced norm stays within
    rho + slack*(1 - rho).

    A plain per-coordinate geometric scaling diag(t, t^2, ..., t^n) is not
    enough here: it multiplies the lower entry of a 2x2 block by 1/t, and
    for unbalanced blocks no t in [1e-8, 1] need bring the norm under the
    target (or even under 1), so the block-aligned form above is used.
    """
    if not 0.0 < slack < 1.0:
        raise ValueError("slack must be in (0, 1)")
    R = M.entries - np.asarray(M_inf)
    n = R.shape[0]
    T, Q = scipy.linalg.schur(R, output="real")
    rho = _schur_spectral_radius(T) if n else 0.0
    if rho >= 1.0:
        raise ValueError(f"spectral radius {rho} >= 1: no contracting norm exists")
    thresh = rho + slack * (1.0 - rho)

    # block-constant powers + within-block balancing factors
    kappa = np.empty(n)
    bal = np.ones(n)
    for bi, (start, size) in enumerate(_schur_block_starts(T)):
        kappa[start : start + size] = bi + 1
        if size == 2 and T[start, start + 1] != 0.0:
            bal[start + 1] = np.sqrt(abs(T[start + 1, start] / T[start, start + 1]))

    def scale_vec(t):
        return bal * t**kappa

    def scaled_norm(t):
        d = scale_vec(t)
        return _op2norm(T * np.outer(1.0 / d, d))

    if scaled_norm(1.0) <= thresh:
        t = 1.0
    else:
        grid = np.logspace(-8, 0, 161)
        feasible = [i for i, tv in enumerate(grid) if scaled_norm(tv) <= thresh]
        if not feasible:
            raise RuntimeError(
                "no scaling in [1e-8, 1] reaches the norm target; "
                "spectral radius < 1 should make this unreachable"
            )
        lo = grid[feasible[-1]]
        hi = grid[feasible[-1] + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if scaled_norm(mid) <= thresh:
                lo = mid
            else:
                hi = mid
        t = lo

    d = scale_vec(t)
    transform = Q.T / d[:, None]
    inv_transform = Q * d[None, :]
    # sigma from the same matrices used to evaluate the norm, so the
    # contraction inequality holds to machine precision, not just in theory
    sigma = _op2norm(transform @ R @ inv_transform)
    return NormFrame(
        transform=transform,
        inv_transform=inv_transform,
        sigma=sigma,
        to2=_op2norm(inv_transform),
        from2=_op2norm(transform),
    )


def cross_equivalence(frame_a: NormFrame, frame_b: NormFrame):
    """Constants (c, d) with ||v||_a <= c ||v||_b and ||v||_b <= d ||v||_a."""
    c = _op2norm(frame_a.transform @ frame_b.inv_transform)
    d = _op2norm(frame_b.transform @ frame_a.inv_transform)
    return c, d
