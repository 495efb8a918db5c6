"""Principal symbols of order 2m, their convexity structure and sharp constants.

A symbol is a finite coefficient matrix ``{a_ab}`` indexed by pairs of
multi-indices of order m, defining ``A(x, xi) = sum a_ab(x) xi^(a+b)``.
The module converts the pair coefficients to the order-2m coefficients
``a_g`` with multinomial normalization, builds the quadratic form matrix
``(a_{a+b}(x))`` whose positive semi-definiteness is the strong-convexity
test, and evaluates the two constants that govern sharp Gaussian decay:

* ``sigma_m = (2m-1) (2m)^(-2m/(2m-1)) sin(pi/(4m-2))`` -- decay exponent,
* ``k_m = sin(pi/(4m-2))^(1-2m)``  -- growth rate of the twisted lower bound,

linked by ``inf_l (-l*d + l^(2m) k_m t) = -sigma_m d^(2m/(2m-1)) / t^(1/(2m-1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import exprlang


# ---------------------------------------------------------------------------
# multi-indices
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def multi_indices(n, order):
    """All multi-indices of the given order in n variables.

    Ordering is lexicographic descending on the entry tuples, fixed once so
    that matrix layouts and golden files are reproducible.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if n == 1:
        return ((order,),)
    out = []
    for first in range(order, -1, -1):
        for rest in multi_indices(n - 1, order - first):
            out.append((first,) + rest)
    return tuple(out)


def index_order(alpha):
    return sum(alpha)


def add_indices(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def multinomial(order, gamma):
    """(order)! / (gamma_1! ... gamma_n!)"""
    v = math.factorial(order)
    for g in gamma:
        v //= math.factorial(g)
    return v


def monomial(xi, gamma):
    v = 1.0
    for x, g in zip(xi, gamma):
        v *= x**g
    return v


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

class CoefficientField:
    """Scalar field over the domain, evaluable at arbitrary points."""

    def at(self, x):
        raise NotImplementedError

    def at_many(self, points):
        return np.array([self.at(p) for p in np.atleast_2d(points)])


@dataclass(frozen=True)
class ConstantField(CoefficientField):
    value: float

    def at(self, x):
        return self.value

    def at_many(self, points):
        return np.full(len(np.atleast_2d(points)), self.value, dtype=float)


@dataclass(frozen=True)
class ExprField(CoefficientField):
    expr: object
    n: int

    @classmethod
    def from_text(cls, text, n):
        return cls(exprlang.parse(text, n), n)

    def at(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = exprlang.evaluate(self.expr, x)
        if not math.isfinite(v):
            raise ValueError(f"coefficient evaluated to {v} at x={x}")
        return v


@dataclass(frozen=True)
class TableField(CoefficientField):
    """Samples on 1D axis nodes; linear interpolation between nodes."""

    nodes: tuple
    values: tuple

    @classmethod
    def from_samples(cls, nodes, values):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.shape != values.shape or nodes.ndim != 1:
            raise ValueError("nodes and values must be matching 1D arrays")
        if not np.all(np.isfinite(values)):
            raise ValueError("tabulated field contains non-finite values")
        return cls(tuple(nodes), tuple(values))

    def at(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(np.interp(x[0], self.nodes, self.values))


def as_field(value, n):
    if isinstance(value, CoefficientField):
        return value
    if isinstance(value, str):
        return ExprField.from_text(value, n)
    return ConstantField(float(value))


# ---------------------------------------------------------------------------
# symbol specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    bounds: tuple  # ((lo, hi), ...) per axis

    @property
    def n(self):
        return len(self.bounds)

    @property
    def lengths(self):
        return tuple(hi - lo for lo, hi in self.bounds)

    def center(self):
        return np.array([0.5 * (lo + hi) for lo, hi in self.bounds])


@dataclass(frozen=True)
class SymbolSpec:
    """Half-order m, dimension n, symmetric pair coefficients, domain."""

    m: int
    n: int
    coefficients: dict = field(compare=False)
    domain: DomainSpec = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("need m >= 1 and n >= 1")
        symmetric = {}
        for (a, b), f in self.coefficients.items():
            if index_order(a) != self.m or index_order(b) != self.m:
                raise ValueError(f"pair {(a, b)} must have |alpha| = |beta| = m")
            if len(a) != self.n or len(b) != self.n:
                raise ValueError(f"pair {(a, b)} has wrong dimension")
            prev = symmetric.get((b, a))
            if prev is not None and prev is not f and prev != f:
                raise ValueError(f"conflicting entries for symmetric pair {(a, b)}")
            symmetric[(a, b)] = f
            symmetric[(b, a)] = f
        object.__setattr__(self, "coefficients", symmetric)
        if self.domain is None:
            object.__setattr__(
                self, "domain", DomainSpec(tuple((0.0, 1.0) for _ in range(self.n)))
            )

    @classmethod
    def isotropic(cls, m, n, coefficient=1.0, domain=None):
        """A(x, xi) = a(x) |xi|^(2m), via diagonal multinomial weights m!/alpha!."""
        base = as_field(coefficient, n)
        coeffs = {}
        for alpha in multi_indices(n, m):
            w = multinomial(m, alpha)
            f = base if w == 1 else _ScaledField(base, float(w))
            coeffs[(alpha, alpha)] = f
        return cls(m, n, coeffs, _as_domain(domain, n))

    @classmethod
    def axis_powers(cls, m, n, weights=None, domain=None):
        """A(x, xi) = sum_i c_i xi_i^(2m)  (no cross terms)."""
        weights = [1.0] * n if weights is None else list(weights)
        coeffs = {}
        for i, c in enumerate(weights):
            alpha = tuple(m if j == i else 0 for j in range(n))
            coeffs[(alpha, alpha)] = as_field(c, n)
        return cls(m, n, coeffs, _as_domain(domain, n))

    def scalar_field(self):
        """For 1D specs: the single coefficient a(x) with A = a(x) xi^(2m)."""
        if self.n != 1:
            raise ValueError("scalar_field is defined for n = 1 only")
        return self.coefficients[((self.m,), (self.m,))]


@dataclass(frozen=True)
class _ScaledField(CoefficientField):
    base: CoefficientField
    factor: float

    def at(self, x):
        return self.factor * self.base.at(x)


def _as_domain(domain, n):
    if domain is None:
        return None
    if isinstance(domain, DomainSpec):
        return domain
    bounds = tuple(tuple(map(float, b)) for b in domain)
    if len(bounds) != n:
        raise ValueError("domain bounds must give one (lo, hi) pair per axis")
    return DomainSpec(bounds)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def eval_symbol(spec, x, xi):
    """A(x, xi) = sum over pairs a_ab(x) xi^(a+b); homogeneous of degree 2m."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    total = 0.0
    for (a, b), f in spec.coefficients.items():
        try:
            c = f.at(x)
        except Exception as exc:
            raise ValueError(f"coefficient a[{a},{b}] failed at x={x}: {exc}") from exc
        total += c * monomial(xi, add_indices(a, b))
    return total


def gamma_coefficients(spec, x):
    """Order-2m coefficients a_g(x) with A = sum C(2m, g) a_g(x) xi^g."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = {g: 0.0 for g in multi_indices(spec.n, 2 * spec.m)}
    for (a, b), f in spec.coefficients.items():
        out[add_indices(a, b)] += f.at(x)
    return {g: v / multinomial(2 * spec.m, g) for g, v in out.items()}


@dataclass(frozen=True)
class GammaForm:
    x: tuple
    matrix: np.ndarray
    index_order: tuple  # multi-indices of order m labelling rows/columns

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])


def gamma_form(spec, x):
    """Quadratic form matrix (a_{alpha+beta}(x)) over multi-indices of order m."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    order = multi_indices(spec.n, spec.m)
    ag = gamma_coefficients(spec, x)
    dim = len(order)
    mat = np.empty((dim, dim))
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            mat[i, j] = ag[add_indices(a, b)]
    return GammaForm(tuple(x), mat, order)


@dataclass
class ConvexityReport:
    strongly_convex: bool
    min_eigenvalue: float
    witness_point: tuple
    inconclusive: bool = False
    tol: float = 1e-10


def is_strongly_convex(spec, sample_points, tol=1e-10):
    """PSD test of the gamma form at each sample point.

    Tolerance is scale-invariant: an eigenvalue is accepted when it is at
    least ``-tol * (1 + max-norm of the matrix)``.  Eigensolver failure is
    reported as inconclusive, never as a negative verdict.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    sample_points = list(sample_points)
    if not sample_points:
        raise ValueError("need at least one sample point")
    worst = math.inf
    worst_absolute = math.inf
    witness = None
    for x in sample_points:
        form = gamma_form(spec, x)
        try:
            lo = form.min_eigenvalue()
        except np.linalg.LinAlgError:
            return ConvexityReport(False, math.nan, tuple(np.atleast_1d(x)), True, tol)
        scale = 1.0 + float(np.max(np.abs(form.matrix)))
        if lo / scale < worst:
            worst = lo / scale
            witness = form.x
            worst_absolute = lo
    ok = worst >= -tol
    return ConvexityReport(ok, worst_absolute, witness, False, tol)


@dataclass(frozen=True)
class SharpConstants:
    """sigma_m (Gaussian decay constant) and k_m (twisting growth constant)."""

    m: int
    sigma_m: float
    k_m: float


def sharp_constants(m):
    if m < 1:
        raise ValueError("m must be >= 1")
    s = math.sin(math.pi / (4 * m - 2))
    sigma = (2 * m - 1) * (2 * m) ** (-2 * m / (2 * m - 1)) * s
    return SharpConstants(m, sigma, s ** (1 - 2 * m))


def decay_constant_from_growth(kappa, m):
    """sigma such that inf_l(-l d + l^(2m) kappa t) = -sigma d^(2m/(2m-1)) t^(-1/(2m-1))."""
    if kappa <= 0:
        raise ValueError("growth coefficient must be positive")
    return (2 * m - 1) * (2 * m) ** (-2 * m / (2 * m - 1)) * kappa ** (-1 / (2 * m - 1))


def sphere_directions(n, count):
    """Unit directions used for sampling: endpoints in 1D, uniform angles in
    2D, Fibonacci sphere in 3D."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        k = np.arange(count)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        z = 1.0 - 2.0 * (k + 0.5) / count
        r = np.sqrt(1.0 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def ellipticity_constant(spec, sample_points, sphere_samples=512):
    """min over sampled (x, xi on the unit sphere) of A(x, xi).

    A certified-by-sampling lower estimate of the ellipticity constant, with
    golden-section refinement around the minimizing angle in 2D.
    """
    if sphere_samples < 1:
        raise ValueError("need at least one direction per point")
    dirs = sphere_directions(spec.n, sphere_samples)
    best = math.inf
    best_x = None
    for x in sample_points:
        vals = np.array([eval_symbol(spec, x, xi) for xi in dirs])
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            best_x = x
            best_dir_idx = i
    if spec.n == 2 and best_x is not None:
        th0 = 2 * np.pi * best_dir_idx / len(dirs)
        width = 2 * np.pi / len(dirs)
        f = lambda th: eval_symbol(spec, best_x, [math.cos(th), math.sin(th)])
        best = min(best, _golden_min(f, th0 - width, th0 + width))
    return best


def _golden_min(f, a, b, iters=60):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return min(fc, fd)
