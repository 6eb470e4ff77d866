"""Convergence certificate for the two-matrix tracking method.

From the contraction frames of both weight matrices, their Perron vectors,
and the objective's smoothness constants, a 3x3 nonnegative coupling matrix
tying consensus error, optimality gap, and tracking error together is
assembled. A positive vector strictly decreased by that matrix certifies a
spectral radius below one, hence geometric convergence, and yields an
explicit admissible step-size range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import SmoothnessInfo, smoothness_constants
from .weights import (
    NormFrame,
    PerronPair,
    WeightKind,
    WeightMatrix,
    column_stochastic,
    contraction_frame,
    infinite_power,
    perron_pair,
    row_stochastic,
    _op2norm,
)

_IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class ContractionCert:
    """Everything needed to evaluate the coupling matrix at a step size:
    both norm frames, the Perron pair, smoothness constants, the nine
    interaction coefficients, and the plain operator norms they came from."""

    frame_a: NormFrame
    frame_b: NormFrame
    perron: PerronPair
    alpha: float
    beta: float
    n: int
    a: tuple
    norm_i_minus_ainf: float
    norm_ainf: float
    norm_binf: float
    norm_a_minus_i: float


@dataclass(frozen=True)
class EpsilonTriple:
    """Positive weights for the certificate's test vector."""

    eps1: float
    eps2: float
    eps3: float

    def __post_init__(self):
        if min(self.eps1, self.eps2, self.eps3) <= 0:
            raise ValueError("all three weights must be positive")

    def as_array(self):
        return np.array([self.eps1, self.eps2, self.eps3])


def build_cert(A: WeightMatrix, frame_a: NormFrame, frame_b: NormFrame,
               perron: PerronPair, smooth: SmoothnessInfo) -> ContractionCert:
    """Assemble the certificate constants.

    The row-stochastic matrix itself is needed for one of the operator
    norms; everything else comes from the frames and the Perron pair. The
    rank-one identity ||B_inf||_2 = sqrt(n) ||pi_col||_2 is verified as an
    internal consistency check.
    """
    if A.kind is not WeightKind.ROW_STOCHASTIC:
        raise ValueError("build_cert expects the row-stochastic matrix")
    n = A.graph.n
    eye = np.eye(n)
    a_inf = np.outer(np.ones(n), perron.pi_row)
    b_inf = np.outer(perron.pi_col, np.ones(n))

    norm_i_minus_ainf = _op2norm(eye - a_inf)
    norm_ainf = _op2norm(a_inf)
    norm_binf = _op2norm(b_inf)
    if abs(norm_binf - np.sqrt(n) * np.linalg.norm(perron.pi_col)) > _IDENTITY_TOL:
        raise RuntimeError("rank-one norm identity violated; Perron vectors suspect")
    norm_a_minus_i = _op2norm(A.entries - eye)

    alpha, beta = smooth.alpha, smooth.beta
    g = frame_a.to2      # ||.||_2 <= g ||.||_a
    m = frame_a.from2    # ||.||_a <= m ||.||_2
    h = frame_b.to2      # ||.||_2 <= h ||.||_b
    ell = frame_b.from2  # ||.||_b <= ell ||.||_2
    sig_b = frame_b.sigma
    pi = perron.inner

    a = (
        m * g * beta * norm_i_minus_ainf * norm_binf,
        m * beta * norm_i_minus_ainf * norm_binf,
        m * h * norm_i_minus_ainf,
        n * beta * g * pi,
        h * norm_ainf,
        g * sig_b * ell * beta * norm_a_minus_i,
        g * sig_b * ell * beta**2 * norm_binf,
        sig_b * ell * beta**2 * norm_binf,
        h * sig_b * ell * beta,
    )
    return ContractionCert(
        frame_a=frame_a,
        frame_b=frame_b,
        perron=perron,
        alpha=alpha,
        beta=beta,
        n=n,
        a=a,
        norm_i_minus_ainf=norm_i_minus_ainf,
        norm_ainf=norm_ainf,
        norm_binf=norm_binf,
        norm_a_minus_i=norm_a_minus_i,
    )


def certify(graph, obj, slack=0.1):
    """End-to-end convenience: weights, Perron pair, frames, constants.

    Returns (cert, A, B) so callers can run the solver with the same
    matrices the certificate describes.
    """
    A = row_stochastic(graph)
    B = column_stochastic(graph)
    perron = perron_pair(A, B)
    frame_a = contraction_frame(A, infinite_power(A, perron), slack=slack)
    frame_b = contraction_frame(B, infinite_power(B, perron), slack=slack)
    cert = build_cert(A, frame_a, frame_b, perron, smoothness_constants(obj))
    return cert, A, B


def _step_domain(cert):
    return 2.0 / (cert.n * cert.beta * cert.perron.inner)


def descent_factor(eta, cert: ContractionCert) -> float:
    """Contraction factor of the Perron-averaged centralized step at step
    size eta; valid on (0, 2 / (n beta pi))."""
    hi = _step_domain(cert)
    if not 0.0 < eta < hi:
        raise ValueError(f"eta must lie in (0, {hi}), got {eta}")
    scale = cert.n * cert.perron.inner * eta
    return max(abs(1.0 - cert.alpha * scale), abs(1.0 - cert.beta * scale))


def coupling_matrix(eta, cert: ContractionCert) -> np.ndarray:
    """The 3x3 nonnegative matrix propagating (consensus error, optimality
    gap, tracking error) bounds across one iteration."""
    a1, a2, a3, a4, a5, a6, a7, a8, a9 = cert.a
    lam = descent_factor(eta, cert)
    sig_a = cert.frame_a.sigma
    sig_b = cert.frame_b.sigma
    return np.array(
        [
            [sig_a + a1 * eta, a2 * eta, a3 * eta],
            [a4 * eta, lam, a5 * eta],
            [a6 + a7 * eta, a8 * eta, sig_b + a9 * eta],
        ]
    )


def select_epsilon(cert: ContractionCert) -> EpsilonTriple:
    """Midpoint choice of test-vector weights satisfying the feasibility
    constraints with strict margin."""
    a4, a5, a6 = cert.a[3], cert.a[4], cert.a[5]
    sig_b = cert.frame_b.sigma
    eps3 = 1.0
    eps1 = 0.5 * (1.0 - sig_b) / a6 if a6 > 0 else 1.0
    eps2 = 2.0 * (a4 * eps1 + a5 * eps3) / (cert.alpha * cert.n * cert.perron.inner)
    return EpsilonTriple(eps1, eps2, eps3)


def epsilon_feasible(eps: EpsilonTriple, cert: ContractionCert) -> bool:
    """Strict feasibility of the test-vector weights."""
    a4, a5, a6 = cert.a[3], cert.a[4], cert.a[5]
    sig_b = cert.frame_b.sigma
    if a6 > 0 and not eps.eps1 < (1.0 - sig_b) * eps.eps3 / a6:
        return False
    return eps.eps2 > (a4 * eps.eps1 + a5 * eps.eps3) / (cert.alpha * cert.n * cert.perron.inner)


def max_step_size(cert: ContractionCert, eps: EpsilonTriple | None = None) -> float:
    """Largest certified step size for the given test-vector weights.

    Minimum of three ratios; degenerate zero denominators (single node,
    where several coefficients vanish) yield infinite terms and the plain
    smoothness bound takes over.
    """
    if eps is None:
        eps = select_epsilon(cert)
    if not epsilon_feasible(eps, cert):
        raise ValueError("test-vector weights violate the feasibility constraints")
    a1, a2, a3, a4, a5, a6, a7, a8, a9 = cert.a
    sig_a = cert.frame_a.sigma
    sig_b = cert.frame_b.sigma
    e1, e2, e3 = eps.eps1, eps.eps2, eps.eps3

    def ratio(num, den):
        return num / den if den > 0 else np.inf

    bound = min(
        ratio(e1 * (1.0 - sig_a), a1 * e1 + a2 * e2 + a3 * e3),
        ratio((1.0 - sig_b) * e3 - e1 * a6, a7 * e1 + a8 * e2 + a9 * e3),
        1.0 / (cert.n * cert.beta * cert.perron.inner),
    )
    if bound <= 0:
        raise RuntimeError("certified step-size bound collapsed to zero")
    return float(bound)


def positive_vector_certificate(J: np.ndarray, eps) -> bool:
    """True when the positive vector eps strictly decreases under the
    nonnegative matrix J, which certifies spectral radius < 1."""
    J = np.asarray(J, dtype=float)
    e = eps.as_array() if isinstance(eps, EpsilonTriple) else np.asarray(eps, dtype=float)
    if np.any(J < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    if np.any(e <= 0):
        raise ValueError("test vector must be strictly positive")
    return bool(np.all(J @ e < e))


def spectral_radius(M: np.ndarray, tol=1e-13, maxit=100_000) -> float:
    """Spectral radius of a nonnegative matrix by power iteration from the
    all-ones vector. A vanishing iterate means a nilpotent action on the
    positive cone and returns 0."""
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    v = np.ones(M.shape[0])
    lam_prev = np.inf
    for _ in range(maxit):
        w = M @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam = float(v @ (M @ v))
        if abs(lam - lam_prev) <= tol:
            return lam
        lam_prev = lam
    raise RuntimeError(f"power iteration did not converge in {maxit} steps")


@dataclass(frozen=True)
class ContractionReport:
    """Outcome of checking a recorded trace against the coupling matrix."""

    ok: bool
    checked: int
    violations: tuple
    eta: float
    tol: float


def check_trace_contraction(trace, cert: ContractionCert, eta, tol=1e-9) -> ContractionReport:
    """Verify t(k+1) <= J(eta) t(k) + tol * ||t(k)|| entrywise along a trace.

    Requires the trace to carry the certificate norms (run with the
    certificate attached). Violations are reported as
    (iteration, component, lhs, rhs).
    """
    if trace.t is None:
        raise ValueError("trace carries no certificate norms; rerun with cert attached")
    J = coupling_matrix(eta, cert)
    t = trace.t
    violations = []
    for k in range(len(t) - 1):
        bound = J @ t[k] + tol * np.linalg.norm(t[k])
        for c in range(3):
            if t[k + 1][c] > bound[c]:
                violations.append((int(trace.k[k + 1]), c, float(t[k + 1][c]), float(bound[c])))
    return ContractionReport(
        ok=not violations,
        checked=len(t) - 1,
        violations=tuple(violations),
        eta=float(eta),
        tol=float(tol),
    )
