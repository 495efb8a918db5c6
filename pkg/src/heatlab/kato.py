"""Numerical verification of the smallness hypotheses on negative potentials.

Everything is exact at the discrete level: the zero-form-bound constant is an
eigenvalue, the L1->L1 resolvent norm is a max column mass of the resolvent
kernel, and the weighted-L2 bound is the spectral norm of the symmetrized
weighted resolvent.  Singular potentials enter as grid traces, clipped (with
a warning) at 1e12.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .heatkernel import semigroup_apply

CLIP_THRESHOLD = 1e12


def sample_potential(field_or_values, grid, clip=CLIP_THRESHOLD):
    """Grid trace of a potential; values above the clip are truncated."""
    if isinstance(field_or_values, np.ndarray):
        v = np.asarray(field_or_values, dtype=float).copy()
    else:
        from .symbols import as_field

        v = as_field(field_or_values, grid.n).at_many(grid.node_coordinates())
    if np.any(np.abs(v) > clip):
        warnings.warn("potential clipped at %.1e on %d nodes"
                      % (clip, int(np.sum(np.abs(v) > clip))), RuntimeWarning)
        v = np.clip(v, -clip, clip)
    return v


def _check_vminus(vminus):
    vminus = np.asarray(vminus, dtype=float)
    if np.any(vminus < 0):
        raise ValueError("V_- must be nonnegative")
    return vminus


@dataclass
class FormBoundReport:
    epsilons: list
    c_eps: list

    @property
    def passed(self):
        return all(np.isfinite(self.c_eps))


def form_bound(op0, vminus, eps):
    """Smallest c with  sum V_- |u|^2 h^n <= eps Q0(u) + c ||u||^2  on the grid.

    Characterized exactly as max(0, lambda_max(diag(V_-) - eps * H0)).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    vminus = _check_vminus(vminus)
    M = np.diag(vminus) - eps * op0.operator_matrix()
    top = sla.eigh(M, eigvals_only=True,
                   subset_by_index=(M.shape[0] - 1, M.shape[0] - 1), driver="evr")[0]
    return max(0.0, float(top))


def form_bound_report(op0, vminus, epsilons):
    return FormBoundReport(list(epsilons), [form_bound(op0, vminus, e) for e in epsilons])


def consequence_q0q(op_v, op0, eps, c_eps):
    """Check  Q0(u) <= (Q(u) + c ||u||^2) / (1 - eps)  as a matrix inequality."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    A = (op_v.operator_matrix() + c_eps * np.eye(op_v.grid.node_count)) / (1.0 - eps)
    M = A - op0.operator_matrix()
    lo = sla.eigh(M, eigvals_only=True, subset_by_index=(0, 0), driver="evr")[0]
    scale = max(1.0, float(np.max(np.abs(A))))
    return bool(lo >= -1e-10 * scale)


@dataclass
class KatoCurve:
    lambdas: list
    norms: list

    def __post_init__(self):
        n = np.asarray(self.norms)
        if np.any(n < 0):
            raise ValueError("resolvent norms must be nonnegative")
        if np.any(np.diff(n) > 1e-10 * max(1.0, n[0])):
            raise ValueError("Kato norm curve must be non-increasing in lambda")


def _resolvent(op0, lam):
    H = op0.operator_matrix()
    lo = sla.eigh(H, eigvals_only=True, subset_by_index=(0, 0), driver="evr")[0]
    if lam <= -lo:
        raise ValueError(f"lambda = {lam} is not above -lambda_min = {-lo}")
    return np.linalg.solve(H + lam * np.eye(H.shape[0]), np.eye(H.shape[0]))


def kato_norm(op0, vminus, lam):
    """Discrete ||V_-(H0+lambda)^{-1}||_{L1->L1}: max column mass of the
    weighted resolvent kernel."""
    vminus = _check_vminus(vminus)
    R = _resolvent(op0, lam)
    return float(np.max(np.sum(vminus[:, None] * np.abs(R), axis=0)))


def kato_norm_dual(op0, vminus, lam):
    """Same norm computed as ||(H0+lambda)^{-1} V_-||_{Linf->Linf} (max row sum)."""
    vminus = _check_vminus(vminus)
    R = _resolvent(op0, lam)
    return float(np.max(np.sum(np.abs(R) * vminus[None, :], axis=1)))


def kato_norm_curve(op0, vminus, lambdas):
    return KatoCurve(list(lambdas), [kato_norm(op0, vminus, lam) for lam in lambdas])


def weighted_l2_check(op0, vminus, lam, slack=1e-8):
    """Spectral norm of (H0+lambda)^{-1} V_- on l2(V_- h^n), restricted to the
    support of V_-; must not exceed the L1->L1 norm.

    Returns (status, weighted_norm, kato_value); status is "vacuous" when
    V_- vanishes identically.
    """
    vminus = _check_vminus(vminus)
    support = vminus > 0
    if not np.any(support):
        return "vacuous", 0.0, 0.0
    R = _resolvent(op0, lam)[np.ix_(support, support)]
    sq = np.sqrt(vminus[support])
    Mw = sq[:, None] * R * sq[None, :]
    wnorm = float(np.max(np.abs(sla.eigh(Mw, eigvals_only=True))))
    kn = kato_norm(op0, vminus, lam)
    status = "pass" if wnorm <= kn + slack else "fail"
    return status, wnorm, kn


def miyadera_integral(spectral, vminus, delta, u, gauss_order=32, settle_tol=1e-6):
    """int_0^delta || V_- e^{-t H0} u ||_1 dt by composite Gauss-Legendre.

    First split at delta/8; below it the panels are geometrically graded
    toward t = 0 (the integrand has a square-root layer from the high
    modes), above it they are uniform.  Doubling all panel counts must not
    move the value by more than ``settle_tol`` relative, else a
    QuadratureError.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    vminus = _check_vminus(vminus)
    u = np.asarray(u, dtype=float)
    mass = spectral.mass

    def integrand(t):
        ut = semigroup_apply(spectral, t, u)
        return float(np.sum(vminus * np.abs(ut)) * mass)

    def integrate(factor):
        graded = delta / 8.0 * 2.0 ** (-np.arange(8 * factor, -1, -1.0))
        edges = np.concatenate([[0.0], graded, np.linspace(delta / 8, delta, 7 * factor + 1)[1:]])
        nodes, weights = np.polynomial.legendre.leggauss(gauss_order)
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            total += half * sum(w * integrand(mid + half * x) for x, w in zip(nodes, weights))
        return total

    v1 = integrate(1)
    v2 = integrate(2)
    scale = max(abs(v2), 1e-300)
    if abs(v2 - v1) / scale > settle_tol:
        from .heatkernel import QuadratureError

        raise QuadratureError(f"miyadera quadrature did not settle: {abs(v2 - v1):.3e}")
    return v2


def miyadera_ratio(spectral, vminus, delta, u, **kw):
    """Integral normalized by ||u||_1; shrinks with delta."""
    u = np.asarray(u, dtype=float)
    l1 = float(np.sum(np.abs(u)) * spectral.mass)
    return miyadera_integral(spectral, vminus, delta, u, **kw) / l1
