"""Decentralized first-order solvers over digraphs.

The primary method mixes estimates through a row-stochastic matrix while a
column-stochastic matrix propagates a gradient tracker:

    x <- A x - eta * y
    y <- B (y + grad(x_new) - grad(x_old)),   y(0) = grad(x(0))

Baselines: gradient tracking with one doubly stochastic matrix (correction
added outside the mixing), a row-stochastic-only method that learns the
Perron weights on the fly, and push-sum subgradient descent with a
diminishing step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .objectives import stacked_gradients
from .weights import WeightKind, WeightMatrix, is_doubly_stochastic

_CONSERVE_TOL = 1e-9
_TINY_DIAG = 1e-300


class DivergenceError(RuntimeError):
    """Raised when iterates stop being finite; carries the iteration index."""

    def __init__(self, k, eta, what="iterates"):
        super().__init__(f"{what} diverged at iteration {k} (eta={eta})")
        self.k = k
        self.eta = eta
        self.partial = None  # harness attaches the trace built so far


class ConservationError(RuntimeError):
    """Raised when the tracker stops summing to the stacked gradients."""

    def __init__(self, k, deviation):
        super().__init__(
            f"tracker column sums drifted from gradient sums at iteration {k} "
            f"(relative deviation {deviation:.3e})"
        )
        self.k = k
        self.deviation = deviation


@dataclass(frozen=True)
class SolverState:
    """Tracking-solver state: estimates x, tracker y, cached gradients at x."""

    x: np.ndarray
    y: np.ndarray
    grads_prev: np.ndarray
    k: int

    @property
    def estimate(self):
        return self.x


@dataclass(frozen=True)
class RowStochasticState:
    """State of the row-stochastic-only baseline: estimates x, corrected
    tracker z, Perron-weight estimates yvec (one row per node), cached raw
    gradients."""

    x: np.ndarray
    z: np.ndarray
    yvec: np.ndarray
    grads_prev: np.ndarray
    k: int

    @property
    def estimate(self):
        return self.x


@dataclass(frozen=True)
class PushSumState:
    """Push-sum state: raw iterates w, mass s (positive, one per node), and
    de-biased estimates z = w / s."""

    w: np.ndarray
    s: np.ndarray
    z: np.ndarray
    k: int

    @property
    def estimate(self):
        return self.z


def _as_state_matrix(x0, n):
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 2 or x0.shape[0] != n:
        raise ValueError(f"x0 must be (n, p) with n={n}, got {x0.shape}")
    return x0.copy()


def _check_finite(arr, k, eta, what):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(k, eta, what)


def ab_init(obj, x0) -> SolverState:
    x0 = _as_state_matrix(x0, obj.n_agents)
    g = stacked_gradients(obj, x0)
    return SolverState(x=x0, y=g.copy(), grads_prev=g, k=0)


def ab_step(state: SolverState, A: WeightMatrix, B: WeightMatrix, eta, obj) -> SolverState:
    """One step of the two-matrix tracking method. Pure: returns a new state."""
    if A.kind is not WeightKind.ROW_STOCHASTIC:
        raise ValueError("A must be row-stochastic")
    if B.kind is not WeightKind.COLUMN_STOCHASTIC:
        raise ValueError("B must be column-stochastic")
    if eta <= 0:
        raise ValueError("eta must be positive")
    k = state.k + 1
    x_new = A.entries @ state.x - eta * state.y
    _check_finite(x_new, k, eta, "estimates")
    g_new = stacked_gradients(obj, x_new)
    _check_finite(g_new, k, eta, "gradients")
    y_new = B.entries @ (state.y + g_new - state.grads_prev)
    return SolverState(x=x_new, y=y_new, grads_prev=g_new, k=k)


def doubly_stochastic_step(state: SolverState, W: WeightMatrix, eta, obj) -> SolverState:
    """Gradient tracking with a single doubly stochastic matrix; the gradient
    correction enters after the mixing. Classic undirected-network baseline;
    init shares ab_init."""
    if not is_doubly_stochastic(W.entries):
        raise ValueError("W must be doubly stochastic (within 1e-12)")
    if eta <= 0:
        raise ValueError("eta must be positive")
    k = state.k + 1
    x_new = W.entries @ state.x - eta * state.y
    _check_finite(x_new, k, eta, "estimates")
    g_new = stacked_gradients(obj, x_new)
    _check_finite(g_new, k, eta, "gradients")
    y_new = W.entries @ state.y + g_new - state.grads_prev
    return SolverState(x=x_new, y=y_new, grads_prev=g_new, k=k)


def row_stochastic_init(obj, x0) -> RowStochasticState:
    x0 = _as_state_matrix(x0, obj.n_agents)
    g = stacked_gradients(obj, x0)
    # Perron-weight learning starts from the canonical basis rows; its own
    # diagonal entry is 1 there, so z(0) is just the gradient.
    return RowStochasticState(
        x=x0, z=g.copy(), yvec=np.eye(obj.n_agents), grads_prev=g, k=0
    )


def row_stochastic_step(state: RowStochasticState, A: WeightMatrix, eta, obj) -> RowStochasticState:
    """Row-stochastic-only tracking baseline.

    Each node learns its own Perron weight through yvec <- A yvec and divides
    its gradient by that running estimate, removing the imbalance a
    row-stochastic matrix alone would introduce.
    """
    if A.kind is not WeightKind.ROW_STOCHASTIC:
        raise ValueError("A must be row-stochastic")
    if eta <= 0:
        raise ValueError("eta must be positive")
    k = state.k + 1
    yvec_new = A.entries @ state.yvec
    diag_old = np.diag(state.yvec)
    diag_new = np.diag(yvec_new)
    if diag_new.min() <= _TINY_DIAG or diag_old.min() <= _TINY_DIAG:
        raise RuntimeError(f"Perron-weight estimate underflow at iteration {k}")
    x_new = A.entries @ state.x - eta * state.z
    _check_finite(x_new, k, eta, "estimates")
    g_new = stacked_gradients(obj, x_new)
    _check_finite(g_new, k, eta, "gradients")
    z_new = (
        A.entries @ state.z
        + g_new / diag_new[:, None]
        - state.grads_prev / diag_old[:, None]
    )
    return RowStochasticState(x=x_new, z=z_new, yvec=yvec_new, grads_prev=g_new, k=k)


def push_sum_init(obj, x0) -> PushSumState:
    x0 = _as_state_matrix(x0, obj.n_agents)
    return PushSumState(w=x0, s=np.ones(obj.n_agents), z=x0.copy(), k=0)


def push_sum_step(state: PushSumState, B: WeightMatrix, eta0, obj) -> PushSumState:
    """Push-sum subgradient descent with step eta0 / sqrt(k+1).

    Gradients are taken at the de-biased estimates z = w / s; the mass
    vector s tracks how the column-stochastic mixing skews the averages.
    """
    if B.kind is not WeightKind.COLUMN_STOCHASTIC:
        raise ValueError("B must be column-stochastic")
    if eta0 <= 0:
        raise ValueError("eta0 must be positive")
    k = state.k + 1
    eta_k = eta0 / np.sqrt(state.k + 1.0)
    g = stacked_gradients(obj, state.z)
    _check_finite(g, k, eta_k, "gradients")
    w_new = B.entries @ (state.w - eta_k * g)
    s_new = B.entries @ state.s
    z_new = w_new / s_new[:, None]
    _check_finite(z_new, k, eta_k, "estimates")
    return PushSumState(w=w_new, s=s_new, z=z_new, k=k)


@dataclass(frozen=True)
class Trace:
    """Per-iteration record of a run, k = 0 included.

    residual is the mean distance to the reference optimum, consensus the
    worst node deviation from the current mean estimate, t the stacked
    certificate norms (None unless a certificate was attached), elapsed the
    cumulative wall-clock seconds (kept out of any serialized output).
    """

    k: np.ndarray
    residual: np.ndarray
    consensus: np.ndarray
    t: np.ndarray | None
    elapsed: np.ndarray


def _consensus_error(X):
    return float(np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)))


def _residual(X, x_star):
    return float(np.mean(np.linalg.norm(X - x_star, axis=1)))


def _conservation_deviation(state):
    ysum = state.y.sum(axis=0)
    gsum = state.grads_prev.sum(axis=0)
    return float(np.max(np.abs(ysum - gsum)) / (1.0 + np.max(np.abs(gsum))))


def run(step_fn, state, iters, x_star, cert=None) -> Trace:
    """Drive a step function for ``iters`` iterations, recording a Trace.

    For tracker-carrying states the column-sum conservation law (tracker
    sums equal gradient sums) is checked every iteration and violations
    abort. With a certificate attached, the three certificate norms are
    recorded per iteration. Step errors propagate, with the partial trace
    attached to divergence errors.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x_star = np.asarray(x_star, dtype=float)

    frames = None
    if cert is not None:
        n = cert.n
        a_inf = np.outer(np.ones(n), cert.perron.pi_row)
        b_inf = np.outer(cert.perron.pi_col, np.ones(n))
        frames = (cert.frame_a, cert.frame_b, a_inf, b_inf)

    def t_vec(s):
        frame_a, frame_b, a_inf, b_inf = frames
        X, Y = s.x, s.y
        return (
            frame_a.norm(X - a_inf @ X),
            float(np.linalg.norm(a_inf @ X - np.outer(np.ones(len(X)), x_star))),
            frame_b.norm(Y - b_inf @ Y),
        )

    tracked = isinstance(state, SolverState)
    ks, residuals, consensus, ts, elapsed = [], [], [], [], []
    start = time.perf_counter()

    def record(s):
        ks.append(s.k)
        residuals.append(_residual(s.estimate, x_star))
        consensus.append(_consensus_error(s.estimate))
        if frames is not None and isinstance(s, SolverState):
            ts.append(t_vec(s))
        elapsed.append(time.perf_counter() - start)

    record(state)
    try:
        for _ in range(iters):
            state = step_fn(state)
            if tracked:
                dev = _conservation_deviation(state)
                if dev > _CONSERVE_TOL:
                    raise ConservationError(state.k, dev)
            record(state)
    except DivergenceError as err:
        err.partial = _build_trace(ks, residuals, consensus, ts, elapsed)
        raise
    return _build_trace(ks, residuals, consensus, ts, elapsed)


def _build_trace(ks, residuals, consensus, ts, elapsed):
    return Trace(
        k=np.array(ks, dtype=int),
        residual=np.array(residuals),
        consensus=np.array(consensus),
        t=np.array(ts) if ts else None,
        elapsed=np.array(elapsed),
    )
