"""Compactly supported smoothing kernels.

Two families are provided:

* ``legendre`` kernels of order ``gamma``, obtained by collapsing the
  expansion ``K(x) = sum_{k<=gamma} phi_k(0) phi_k(x)`` over the orthonormal
  Legendre basis of L2([-1, 1]) into monomial coefficients. They integrate
  to one and have vanishing moments of orders 1..gamma.
* ``bump`` kernels ``K(x) = a * K0(2x)`` with
  ``K0(y) = exp(-1 / (1 - y^2))`` on (-1, 1). They are C-infinity and
  strictly positive exactly on (-1/2, 1/2).
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize

__all__ = [
    "KernelSpec",
    "build_legendre_kernel",
    "build_bump_kernel",
    "eval_kernel",
    "eval_scaled",
    "kernel_moment",
    "gauss_legendre_integral",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_DENSE_GRID = 10_000


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a compactly supported kernel.

    Attributes
    ----------
    kind : {"legendre", "bump"}
    order : int
        Number of vanishing moments (``gamma``); 0 for bump kernels.
    coefficients : tuple of float
        Monomial coefficients (lowest degree first) for ``legendre``
        kernels, ``(a,)`` for bump kernels.
    support : tuple of float
        Interval outside which the kernel is exactly zero.
    l2_norm, sup_norm, lipschitz : float
        ``||K||_2``, ``||K||_inf`` and the Lipschitz constant on the
        support.
    """

    kind: str
    order: int
    coefficients: tuple
    support: tuple
    l2_norm: float
    sup_norm: float
    lipschitz: float

    def __call__(self, x):
        return eval_kernel(self, x)

    @property
    def amplitude(self):
        if self.kind != "bump":
            raise AttributeError("only bump kernels have an amplitude")
        return self.coefficients[0]


def gauss_legendre_integral(func, a, b, tol=1e-10, max_panels=4096):
    """Composite 64-node Gauss-Legendre quadrature of ``func`` over [a, b].

    Starts from one panel per unit length and doubles the panel count until
    two successive estimates agree to ``tol``.
    """
    if b <= a:
        return 0.0
    panels = max(1, math.ceil(b - a))
    previous = _composite_gl(func, a, b, panels)
    while panels < max_panels:
        panels *= 2
        current = _composite_gl(func, a, b, panels)
        if abs(current - previous) <= tol:
            return current
        previous = current
    return previous


def _composite_gl(func, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    values = np.asarray(func(x), dtype=float)
    return float(np.sum(half * (values @ _GL_WEIGHTS)))


def _legendre_monomials(order):
    """Monomial coefficients of the orthonormal Legendre polynomials."""
    polys = [np.array([1.0]), np.array([0.0, 1.0])]
    for m in range(1, order):
        nxt = P.polysub(
            (2 * m + 1) * P.polymulx(polys[m]), m * polys[m - 1]
        ) / (m + 1)
        polys.append(nxt)
    return [
        math.sqrt((2 * m + 1) / 2.0) * polys[m] for m in range(order + 1)
    ]


def build_legendre_kernel(order):
    """Legendre-basis kernel of order ``order``.

    Parameters
    ----------
    order : int
        Number of vanishing moments, must be >= 1.

    Returns
    -------
    KernelSpec

    Examples
    --------
    >>> K = build_legendre_kernel(2)
    >>> round(float(K(0.0)), 12)
    1.125
    """
    if int(order) != order or order < 1:
        raise ValueError(f"invalid kernel order {order!r}: must be an integer >= 1")
    order = int(order)
    phis = _legendre_monomials(order)
    coef = np.zeros(order + 1)
    for phi in phis:
        coef[: len(phi)] += P.polyval(0.0, phi) * phi
    # odd terms vanish analytically; drop rounding noise
    coef[1::2] = 0.0
    coef = tuple(float(c) for c in np.trim_zeros(coef, "b"))

    sup_norm = _poly_extreme(coef, lambda v: np.max(np.abs(v)))
    deriv = P.polyder(np.array(coef))
    lipschitz = _poly_extreme(tuple(deriv), lambda v: np.max(np.abs(v)))
    sq = P.polymul(coef, coef)
    integral = P.polyval(1.0, P.polyint(sq)) - P.polyval(-1.0, P.polyint(sq))
    return KernelSpec(
        kind="legendre",
        order=order,
        coefficients=coef,
        support=(-1.0, 1.0),
        l2_norm=float(math.sqrt(integral)),
        sup_norm=float(sup_norm),
        lipschitz=float(lipschitz),
    )


def _poly_extreme(coef, reduce):
    """Reduce |p| over [-1, 1] using endpoints and real critical points."""
    coef = np.array(coef, dtype=float)
    candidates = [-1.0, 1.0]
    if len(coef) > 2:
        for r in P.polyroots(P.polyder(coef)):
            if abs(r.imag) < 1e-12 and -1.0 <= r.real <= 1.0:
                candidates.append(float(r.real))
    elif len(coef) == 1:
        candidates.append(0.0)
    return float(reduce(P.polyval(np.array(candidates), coef)))


def _bump0(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    out[inside] = np.exp(-1.0 / (1.0 - yi * yi))
    return out


def _bump0_prime(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    s = 1.0 - yi * yi
    out[inside] = np.exp(-1.0 / s) * (-2.0 * yi / (s * s))
    return out


def build_bump_kernel(a=1.0):
    """Smooth bump kernel ``x -> a * exp(-1 / (1 - 4 x^2))`` on (-1/2, 1/2).

    Parameters
    ----------
    a : float, default 1.0
        Positive amplitude.
    """
    if not a > 0:
        raise ValueError(f"invalid amplitude {a!r}: must be > 0")
    a = float(a)

    def deriv(x):
        return 2.0 * a * _bump0_prime(2.0 * x)

    # |K'| peaks once on (0, 1/2); locate on the dense grid, then polish.
    grid = np.linspace(0.0, 0.5, _DENSE_GRID)
    slope = np.abs(deriv(grid))
    j = int(np.argmax(slope))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        lambda x: -abs(float(deriv(np.array([x]))[0])),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    lipschitz = max(float(slope[j]), -float(res.fun))

    l2 = gauss_legendre_integral(lambda x: (a * _bump0(2.0 * x)) ** 2, -0.5, 0.5)
    return KernelSpec(
        kind="bump",
        order=0,
        coefficients=(a,),
        support=(-0.5, 0.5),
        l2_norm=float(math.sqrt(l2)),
        sup_norm=a * math.exp(-1.0),
        lipschitz=lipschitz,
    )


def eval_kernel(K, x):
    """Evaluate ``K`` at ``x`` (scalar or array); exactly 0 off the support."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if K.kind == "legendre":
        out = np.where(np.abs(x) <= 1.0, P.polyval(x, K.coefficients), 0.0)
    elif K.kind == "bump":
        out = K.coefficients[0] * _bump0(2.0 * x)
    else:
        raise ValueError(f"unknown kernel kind {K.kind!r}")
    return float(out) if scalar else out


def eval_scaled(K, h, x):
    """Evaluate the rescaled kernel ``K_h(x) = K(x / h) / h``."""
    if not h > 0:
        raise ValueError(f"invalid bandwidth {h!r}: must be > 0")
    scalar = np.ndim(x) == 0
    out = eval_kernel(K, np.asarray(x, dtype=float) / h) / h
    return float(out) if scalar else out


def kernel_moment(K, k):
    """Return ``int x^k K(x) dx`` over the support of ``K``."""
    if int(k) != k or k < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {k!r}")
    lo, hi = K.support
    return gauss_legendre_integral(lambda x: x**k * eval_kernel(K, x), lo, hi)
