"""Drift coefficients used by the simulator, the estimators and the classifier.

Every drift is a small callable class (so it pickles cleanly into worker
processes) carrying its support and smoothness metadata.
"""

import math

import numpy as np

from .exceptions import DomainError
from .kernels import KernelSpec, build_bump_kernel, eval_kernel

__all__ = [
    "DriftFunction",
    "ZeroDrift",
    "ConstantDrift",
    "BumpDrift",
    "HypercubeSpec",
    "HypercubeDrift",
    "make_zero_drift",
    "make_bump_drift",
    "make_hypercube_drift",
    "drift_sup_distance",
    "measure_lipschitz",
    "support_hull",
]


class DriftFunction:
    """Base class for evaluable drifts.

    Subclasses implement ``_evaluate`` on float arrays. ``support`` is a
    closed interval ``(A, B)`` outside which the drift vanishes, or ``None``
    for the identically zero drift.
    """

    support = None
    beta = 1.0
    holder_const = 1.0
    sup_norm = 0.0
    description = "drift"

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        out = self._evaluate(np.asarray(x, dtype=float))
        return float(out) if scalar else out

    def _evaluate(self, x):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.description}>"


class ZeroDrift(DriftFunction):
    """The identically zero drift (pure Brownian motion)."""

    description = "zero"

    def _evaluate(self, x):
        return np.zeros_like(x)


class ConstantDrift(DriftFunction):
    """Constant drift on the whole line.

    Not compactly supported, so it is outside the model class; it exists for
    deterministic checks of the simulator and the Girsanov functionals.
    """

    def __init__(self, value):
        self.value = float(value)
        self.support = (-math.inf, math.inf)
        self.sup_norm = abs(self.value)
        self.holder_const = 0.0
        self.description = f"constant({self.value:g})"

    def _evaluate(self, x):
        return np.full_like(x, self.value)


class BumpDrift(DriftFunction):
    """``amplitude * exp(-1 / (1 - u^2))`` with ``u`` the affine map of
    ``[A, B]`` onto ``[-1, 1]``; zero outside ``(A, B)``."""

    def __init__(self, support, amplitude, beta=1.0, holder_const=1.0):
        A, B = (float(v) for v in support)
        if not A < B:
            raise ValueError(f"invalid support [{A}, {B}]: need A < B")
        if amplitude == 0:
            raise ValueError("bump amplitude must be nonzero")
        self.support = (A, B)
        self.amplitude = float(amplitude)
        self.beta = float(beta)
        self.holder_const = float(holder_const)
        self.sup_norm = abs(self.amplitude) * math.exp(-1.0)
        self.description = f"bump([{A:g},{B:g}], {self.amplitude:g})"

    def _evaluate(self, x):
        A, B = self.support
        u = (2.0 * x - A - B) / (B - A)
        out = np.zeros_like(x)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - ui * ui))
        return out


def make_zero_drift():
    return ZeroDrift()


def make_bump_drift(support, amplitude, beta=1.0, R=1.0):
    """Compactly supported C-infinity bump drift.

    Examples
    --------
    >>> b = make_bump_drift((-1, 1), 1.0)
    >>> round(b(0.0), 6)
    0.367879
    >>> b(1.0), b(2.0)
    (0.0, 0.0)
    """
    return BumpDrift(support, amplitude, beta=beta, holder_const=R)


def _integer_root_floor(N, exponent):
    D = int(math.floor(N**exponent))
    # guard against N**(1/p) landing just below an exact integer root
    while (D + 1) ** (1.0 / exponent) <= N * (1 + 1e-12):
        D += 1
    while D > 1 and D ** (1.0 / exponent) > N * (1 + 1e-12):
        D -= 1
    return max(D, 1)


class HypercubeSpec:
    """Parameters of one hypothesis of the lower-bound family.

    The drift is ``kappa D^-beta + sum_k theta_k phi_k`` on [0, 1] with
    ``phi_k(x) = R D^-beta K((x - x_k) D)``, ``x_k = (k - 1/2) / D``.

    Parameters
    ----------
    D : int
        Number of cells.
    theta : array-like of shape (D,)
        Cell weights in [0, 1].
    kappa : float
        Nonzero baseline level.
    R : float
        Positive amplitude of the cell bumps.
    beta : float
        Smoothness index, >= 1.
    """

    def __init__(self, D, theta, kappa=1.0, R=1.0, beta=1.0):
        D = int(D)
        if D < 1:
            raise ValueError(f"D must be a positive integer, got {D}")
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape != (D,):
            raise ValueError(f"theta must have length D={D}, got {theta.shape[0]}")
        if np.any(theta < 0) or np.any(theta > 1):
            raise ValueError("theta entries must lie in [0, 1]")
        if kappa == 0:
            raise ValueError("kappa must be nonzero")
        if not R > 0:
            raise ValueError("R must be positive")
        if not beta >= 1:
            raise ValueError("beta must be >= 1")
        self.D = D
        self.theta = theta
        self.theta.setflags(write=False)
        self.kappa = float(kappa)
        self.R = float(R)
        self.beta = float(beta)

    @classmethod
    def for_sample_size(cls, N, beta, theta=None, kappa=1.0, R=1.0, rng=None):
        """Build the spec with ``D = floor(N^(1/(2 beta + 1)))``.

        ``theta`` may be an explicit vector, ``"zeros"``, ``"ones"`` or
        ``None``/``"random"`` for a uniform draw from {0, 1}^D using ``rng``.
        """
        D = _integer_root_floor(N, 1.0 / (2.0 * beta + 1.0))
        if theta is None or (isinstance(theta, str) and theta == "random"):
            rng = np.random.default_rng(rng)
            theta = rng.integers(0, 2, size=D).astype(float)
        elif isinstance(theta, str) and theta == "zeros":
            theta = np.zeros(D)
        elif isinstance(theta, str) and theta == "ones":
            theta = np.ones(D)
        return cls(D, theta, kappa=kappa, R=R, beta=beta)

    @property
    def centers(self):
        return (np.arange(1, self.D + 1) - 0.5) / self.D

    @property
    def baseline(self):
        return self.kappa * self.D ** (-self.beta)

    def __repr__(self):
        bits = "".join(str(int(t)) if t in (0, 1) else "?" for t in self.theta)
        return (
            f"HypercubeSpec(D={self.D}, theta={bits}, kappa={self.kappa:g}, "
            f"R={self.R:g}, beta={self.beta:g})"
        )


def _smooth_step(s):
    """C-infinity transition from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


class HypercubeDrift(DriftFunction):
    """One member of the lower-bound hypothesis family.

    Defined on [0, 1]. With ``extend=True`` the constant baseline is tapered
    smoothly to zero over ``margin`` on each side, giving a globally defined
    drift supported on ``[-margin, 1 + margin]``; otherwise evaluating
    outside [0, 1] raises :class:`DomainError`.
    """

    def __init__(self, spec, kernel, extend=True, margin=0.05):
        if kernel.kind != "bump":
            raise ValueError(
                f"hypercube drifts need a bump kernel, got kind {kernel.kind!r}"
            )
        self.spec = spec
        self.kernel = kernel
        self.extend = bool(extend)
        self.margin = float(margin)
        self.beta = spec.beta
        self.holder_const = spec.R
        self.support = (-self.margin, 1.0 + self.margin) if extend else (0.0, 1.0)
        scale = spec.R * spec.D ** (-spec.beta)
        peaks = spec.baseline + spec.theta * scale * kernel.sup_norm
        self.sup_norm = float(max(abs(spec.baseline), np.max(np.abs(peaks))))
        self.description = f"hypercube({spec!r})"

    def _evaluate(self, x):
        spec = self.spec
        inside = (x >= 0.0) & (x <= 1.0)
        if not self.extend and not np.all(inside):
            raise DomainError("hypercube drift is defined on [0, 1] only")
        out = np.zeros_like(x)
        xi = x[inside]
        k = np.clip(np.floor(xi * spec.D).astype(int), 0, spec.D - 1)
        u = (xi - (k + 0.5) / spec.D) * spec.D
        scale = spec.R * spec.D ** (-spec.beta)
        out[inside] = spec.baseline + spec.theta[k] * scale * eval_kernel(
            self.kernel, u
        )
        if self.extend:
            outside = ~inside
            dist = np.where(x[outside] < 0.0, -x[outside], x[outside] - 1.0)
            out[outside] = spec.baseline * (1.0 - _smooth_step(dist / self.margin))
        return out


def make_hypercube_drift(spec, bump_kernel=None, extend=True, margin=0.05):
    """Drift ``kappa D^-beta + sum_k theta_k phi_k`` for a :class:`HypercubeSpec`."""
    if bump_kernel is None:
        bump_kernel = build_bump_kernel(1.0)
    if not isinstance(bump_kernel, KernelSpec):
        raise TypeError("bump_kernel must be a KernelSpec")
    return HypercubeDrift(spec, bump_kernel, extend=extend, margin=margin)


def support_hull(*drifts):
    """Smallest interval containing every (non-empty) drift support."""
    sups = [d.support for d in drifts if d.support is not None]
    if not sups:
        return None
    return (min(s[0] for s in sups), max(s[1] for s in sups))


_PROBE_HALF_WIDTH = 10.0


def drift_sup_distance(b1, b2, grid_points=1001):
    """Max of ``|b1 - b2|`` over a uniform grid on the hull of both supports.

    Unbounded ends of the hull are cut at -10 and 10.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    hull = support_hull(b1, b2)
    if hull is None:
        return 0.0
    lo = hull[0] if np.isfinite(hull[0]) else -_PROBE_HALF_WIDTH
    hi = hull[1] if np.isfinite(hull[1]) else _PROBE_HALF_WIDTH
    grid = np.linspace(lo, hi, int(grid_points))
    return float(np.max(np.abs(b1(grid) - b2(grid))))


def measure_lipschitz(drift, grid_points=10_001):
    """Largest difference quotient of ``drift`` on a uniform grid over its support."""
    A, B = drift.support
    grid = np.linspace(A, B, int(grid_points))
    values = drift(grid)
    return float(np.max(np.abs(np.diff(values)) / np.diff(grid)))
