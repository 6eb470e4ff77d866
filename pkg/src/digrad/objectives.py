"""Separable objectives (one smooth strongly convex piece per node): quadratics,
regularized logistic regression, smoothness constants, and the centralized
optimum used as ground truth."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class SmoothnessInfo:
    """Strong-convexity modulus alpha and gradient-Lipschitz constant beta,
    valid for every node's function and for their average."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= self.beta:
            raise ValueError(f"need 0 < alpha <= beta, got ({self.alpha}, {self.beta})")


class QuadraticObjective:
    """Per-node quadratics f_i(x) = x' P_i x / 2 + q_i' x with P_i symmetric
    positive definite."""

    def __init__(self, P, q):
        P = np.asarray(P, dtype=float)
        q = np.asarray(q, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise ValueError("P must be (n, p, p)")
        if q.shape != P.shape[:2]:
            raise ValueError("q must be (n, p)")
        for i, Pi in enumerate(P):
            if np.max(np.abs(Pi - Pi.T)) > _SYM_TOL:
                raise ValueError(f"P[{i}] is not symmetric")
            if np.linalg.eigvalsh(Pi)[0] <= 0:
                raise ValueError(f"P[{i}] is not positive definite")
        self.P = P
        self.q = q

    @property
    def n_agents(self):
        return self.P.shape[0]

    @property
    def dim(self):
        return self.P.shape[1]

    def gradient(self, i, x):
        return self.P[i] @ np.asarray(x, dtype=float) + self.q[i]

    def value(self, i, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x @ self.P[i] @ x + self.q[i] @ x


class LogisticObjective:
    """Per-node regularized logistic regression in the decision variable
    (w, b): each node i holds samples (c_ij, y_ij) with labels +/-1 and

        f_i(w, b) = sum_j log(1 + exp(-(w'c_ij + b) y_ij))
                    + xi/(2 n) * ||w||^2   [+ xi/(2 n) * b^2 when the bias
                                            is regularized]

    The bias regularization keeps the objective strongly convex in every
    direction; without it the constants degrade to the w-block only.
    """

    def __init__(self, features, labels, xi=1.0, regularize_bias=True):
        self.features = [np.asarray(C, dtype=float) for C in features]
        self.labels = [np.asarray(y, dtype=float) for y in labels]
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must pair up per node")
        p = self.features[0].shape[1]
        for C, y in zip(self.features, self.labels):
            if C.ndim != 2 or C.shape[1] != p:
                raise ValueError("all feature blocks need the same column count")
            if y.shape != (C.shape[0],):
                raise ValueError("labels must be one per sample")
            if not np.all(np.abs(y) == 1.0):
                raise ValueError("labels must be +/-1")
        self.xi = float(xi)
        self.regularize_bias = bool(regularize_bias)
        self._p = p

    @property
    def n_agents(self):
        return len(self.features)

    @property
    def dim(self):
        return self._p + 1

    def gradient(self, i, point):
        point = np.asarray(point, dtype=float)
        w, b = point[:-1], point[-1]
        C, y = self.features[i], self.labels[i]
        # d/dm log(1+exp(-m y)) = -y * sigmoid(-y m); expit keeps this stable
        coeff = -y * expit(-y * (C @ w + b))
        gw = C.T @ coeff + (self.xi / self.n_agents) * w
        gb = coeff.sum()
        if self.regularize_bias:
            gb += (self.xi / self.n_agents) * b
        return np.concatenate([gw, [gb]])

    def value(self, i, point):
        point = np.asarray(point, dtype=float)
        w, b = point[:-1], point[-1]
        C, y = self.features[i], self.labels[i]
        margins = (C @ w + b) * y
        val = np.logaddexp(0.0, -margins).sum()
        val += 0.5 * self.xi / self.n_agents * (w @ w)
        if self.regularize_bias:
            val += 0.5 * self.xi / self.n_agents * b * b
        return float(val)


def stacked_gradients(obj, X):
    """Gradients of every node's function at its own row of X, stacked n-by-p."""
    X = np.asarray(X, dtype=float)
    return np.stack([obj.gradient(i, X[i]) for i in range(obj.n_agents)])


def smoothness_constants(obj) -> SmoothnessInfo:
    """Valid (alpha, beta) for all nodes: extreme eigenvalues for quadratics,
    the standard quarter-Gram bound plus the regularizer for logistic."""
    if isinstance(obj, QuadraticObjective):
        lo = min(np.linalg.eigvalsh(Pi)[0] for Pi in obj.P)
        hi = max(np.linalg.eigvalsh(Pi)[-1] for Pi in obj.P)
        return SmoothnessInfo(float(lo), float(hi))
    if isinstance(obj, LogisticObjective):
        if obj.xi <= 0:
            raise ValueError(
                "objective is not strongly convex (alpha = 0); "
                "set xi > 0 and enable bias regularization"
            )
        reg = obj.xi / obj.n_agents
        beta = 0.0
        for C in obj.features:
            D = C if not obj.regularize_bias else np.hstack([C, np.ones((C.shape[0], 1))])
            top = np.linalg.eigvalsh(D.T @ D)[-1]
            beta = max(beta, 0.25 * top + reg)
        if not obj.regularize_bias:
            warnings.warn(
                "bias is unregularized: smoothness constants cover the weight "
                "block only and the bias direction is not strongly convex",
                stacklevel=2,
            )
        return SmoothnessInfo(float(reg), float(beta))
    raise TypeError(f"unsupported objective type {type(obj).__name__}")


def centralized_optimum(obj, tol=1e-13):
    """Minimizer of the average objective, used as ground truth.

    Closed-form solve for quadratics; full-gradient descent with step 1/beta
    down to gradient norm <= tol for logistic.
    """
    if isinstance(obj, QuadraticObjective):
        return np.linalg.solve(obj.P.sum(axis=0), -obj.q.sum(axis=0))
    info = smoothness_constants(obj)
    x = np.zeros(obj.dim)
    step = 1.0 / info.beta
    for _ in range(1_000_000):
        g = stacked_gradients(obj, np.tile(x, (obj.n_agents, 1))).mean(axis=0)
        if np.linalg.norm(g) <= tol:
            return x
        x = x - step * g
    raise RuntimeError(f"gradient descent did not reach tolerance {tol}")


def make_classification_data(
    n_agents=8, p=5, samples_per_agent=10, xi=1.0, regularize_bias=True, seed=0
) -> LogisticObjective:
    """Synthetic logistic-regression instance: Gaussian features with
    variance 2, labels drawn as symmetric +/-1 coin flips."""
    rng = np.random.default_rng(seed)
    feats = rng.normal(0.0, np.sqrt(2.0), size=(n_agents, samples_per_agent, p))
    labels = rng.choice([-1.0, 1.0], size=(n_agents, samples_per_agent))
    return LogisticObjective(list(feats), list(labels), xi=xi, regularize_bias=regularize_bias)


def random_quadratics(n_agents, p, seed=0, spread=10.0) -> QuadraticObjective:
    """Random well-conditioned quadratics with eigenvalues in [1, spread]."""
    rng = np.random.default_rng(seed)
    P = np.empty((n_agents, p, p))
    for i in range(n_agents):
        Q, _ = np.linalg.qr(rng.normal(size=(p, p)))
        eigs = rng.uniform(1.0, spread, size=p)
        P[i] = (Q * eigs) @ Q.T
        P[i] = 0.5 * (P[i] + P[i].T)
    q = rng.normal(size=(n_agents, p))
    return QuadraticObjective(P, q)


def dump_dataset(obj: LogisticObjective, path):
    """Write a logistic dataset as CSV: one row per sample holding the
    node id, the label, and the feature values."""
    lines = [
        f"# xi={obj.xi:.17g} regularize_bias={str(obj.regularize_bias).lower()}",
        "agent,label," + ",".join(f"f{j}" for j in range(obj._p)),
    ]
    for i, (C, y) in enumerate(zip(obj.features, obj.labels)):
        for row, lab in zip(C, y):
            lines.append(f"{i},{lab:.17g}," + ",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> LogisticObjective:
    """Inverse of dump_dataset."""
    xi, regularize_bias = 1.0, True
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, val = token.partition("=")
                if key == "xi":
                    xi = float(val)
                elif key == "regularize_bias":
                    regularize_bias = val == "true"
            continue
        if line.startswith("agent,"):
            continue
        parts = line.split(",")
        rows.append((int(parts[0]), float(parts[1]), [float(v) for v in parts[2:]]))
    if not rows:
        raise ValueError(f"{path}: no samples found")
    n = max(r[0] for r in rows) + 1
    feats = [[] for _ in range(n)]
    labels = [[] for _ in range(n)]
    for agent, lab, f in rows:
        feats[agent].append(f)
        labels[agent].append(lab)
    return LogisticObjective(
        [np.array(f) for f in feats],
        [np.array(l) for l in labels],
        xi=xi,
        regularize_bias=regularize_bias,
    )
