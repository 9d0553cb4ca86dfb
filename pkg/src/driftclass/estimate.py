"""Continuous-time Nadaraya-Watson drift estimation from i.i.d. paths.

For class-``i`` paths ``X^1, ..., X^{N_i}`` observed on ``[0, T]``:

* ``f_hat(x)  = 1/(N_i (T - t0)) sum_j int_{t0}^T K_h(X^j_t - x) dt``
* ``bf_hat(x) = 1/(N_i (T - t0)) sum_j int_{t0}^T K_h(X^j_t - x) dX^j_t``
* ``b_hat(x)  = bf_hat(x) / f_hat(x)`` where ``f_hat(x) >= m``, else 0.

Integrals are left-point sums on the simulation grid.
"""

from dataclasses import dataclass
import csv
import math

import numba
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateClassError
from .kernels import KernelSpec, build_legendre_kernel
from .simulate import PathBatch, occupation_density_mc, window_start
from .validation import check_interval, check_labels, check_paths, check_positive

__all__ = [
    "NWEstimate",
    "bandwidth_rule",
    "default_kernel_order",
    "kernel_integrals",
    "density_estimate",
    "bf_estimate",
    "nw_estimate",
    "fit_drift",
    "pilot_truncation_level",
    "NadarayaWatsonDrift",
    "FitSettings",
]

_KIND_CODES = {"legendre": 0, "bump": 1}


def bandwidth_rule(N, beta):
    """Rate-optimal bandwidth ``N^(-1 / (2 beta + 1))``.

    >>> round(bandwidth_rule(1024, 1.0), 6)
    0.099213
    """
    if int(N) != N or N < 2:
        raise ValueError(f"bandwidth rule needs an integer sample size N >= 2, got {N!r}")
    if not beta >= 1:
        raise ValueError(f"beta must be >= 1, got {beta!r}")
    return float(N) ** (-1.0 / (2.0 * beta + 1.0))


def default_kernel_order(beta):
    """Kernel order ``2 * floor(beta)`` used with Holder-``beta`` drifts."""
    return 2 * int(math.floor(beta))


@numba.njit(cache=True)
def _kernel_value(u, kind, coef):
    if kind == 0:
        if abs(u) > 1.0:
            return 0.0
        acc = 0.0
        for c in coef[::-1]:
            acc = acc * u + c
        return acc
    v = 2.0 * u
    if abs(v) >= 1.0:
        return 0.0
    return coef[0] * math.exp(-1.0 / (1.0 - v * v))


@numba.njit(cache=True)
def _kernel_sums(x, k0, grid, h, kind, coef, half_width):
    """Per-path sums of K_h(X_k - x_j) and K_h(X_k - x_j) dX_k over k >= k0."""
    n_paths, n_cols = x.shape
    n_grid = grid.shape[0]
    dens = np.zeros((n_paths, n_grid))
    bf = np.zeros((n_paths, n_grid))
    reach = half_width * h * (1.0 + 1e-12)
    for p in range(n_paths):
        for k in range(k0, n_cols - 1):
            xv = x[p, k]
            dx = x[p, k + 1] - xv
            lo = np.searchsorted(grid, xv - reach)
            hi = np.searchsorted(grid, xv + reach, side="right")
            for j in range(lo, hi):
                kv = _kernel_value((xv - grid[j]) / h, kind, coef) / h
                dens[p, j] += kv
                bf[p, j] += kv * dx
    return dens, bf


def kernel_integrals(X, K, h, t0, grid, T):
    """Per-path kernel integrals on ``grid``.

    Returns
    -------
    dens, bf : ndarray of shape (n_paths, n_grid)
        ``int_{t0}^T K_h(X_t - x) dt`` and ``int_{t0}^T K_h(X_t - x) dX_t``.
    window : float
        Length ``T - t0`` of the snapped integration window.
    """
    X = check_paths(X)
    h = check_positive("bandwidth h", h)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be a sorted 1-D array")
    n_steps = X.shape[1] - 1
    dt = T / n_steps
    k0 = window_start(n_steps, T, t0)
    half_width = 1.0 if K.kind == "legendre" else 0.5
    dens, bf = _kernel_sums(
        X, k0, grid, h, _KIND_CODES[K.kind],
        np.asarray(K.coefficients, dtype=np.float64), half_width,
    )
    return dens * dt, bf, (n_steps - k0) * dt


def _check_class_size(n):
    if n <= 1:
        raise DegenerateClassError(
            f"need at least 2 paths of the class to estimate its drift, got {n}"
        )


def density_estimate(X, K, h, t0, grid, T=1.0):
    """Kernel estimate of the time-averaged density on ``grid``."""
    X = check_paths(X)
    _check_class_size(X.shape[0])
    dens, _, window = kernel_integrals(X, K, h, t0, grid, T)
    return dens.sum(axis=0) / (X.shape[0] * window)


def bf_estimate(X, K, h, t0, grid, T=1.0):
    """Kernel estimate of ``b * f`` on ``grid`` (Ito integral against dX)."""
    X = check_paths(X)
    _check_class_size(X.shape[0])
    _, bf, window = kernel_integrals(X, K, h, t0, grid, T)
    return bf.sum(axis=0) / (X.shape[0] * window)


@dataclass(frozen=True)
class NWEstimate:
    """Truncated Nadaraya-Watson drift estimate on a grid.

    Calling the estimate evaluates it by linear interpolation between grid
    points and returns 0 outside the grid hull.
    """

    grid: np.ndarray
    f_hat: np.ndarray
    bf_hat: np.ndarray
    b_hat: np.ndarray
    h: float
    m: float
    N_i: int
    t0: float

    @property
    def truncated(self):
        return self.f_hat < self.m

    @property
    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        out = np.interp(x, self.grid, self.b_hat, left=0.0, right=0.0)
        return float(out) if scalar else out

    def to_csv(self, path, fmt="%.12g"):
        """Write ``x,f_hat,bf_hat,b_hat,truncated`` rows."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "f_hat", "bf_hat", "b_hat", "truncated"])
            for row in zip(self.grid, self.f_hat, self.bf_hat, self.b_hat, self.truncated):
                writer.writerow([fmt % row[0], fmt % row[1], fmt % row[2], fmt % row[3], int(row[4])])


def nw_estimate(f_hat, bf_hat, m):
    """Truncated ratio ``bf_hat / f_hat`` where ``f_hat >= m``, 0 elsewhere."""
    f_hat = np.asarray(f_hat, dtype=float)
    bf_hat = np.asarray(bf_hat, dtype=float)
    if f_hat.shape != bf_hat.shape:
        raise ValueError("f_hat and bf_hat must have the same shape")
    if not m > 0:
        raise ValueError(f"invalid truncation level m={m!r}: must be > 0")
    keep = f_hat >= m
    b_hat = np.zeros_like(f_hat)
    b_hat[keep] = bf_hat[keep] / f_hat[keep]
    return b_hat


def fit_drift(X, labels, cls, K, beta, m, t0, grid, T=1.0, n_total=None, h=None):
    """Estimate the class-``cls`` drift from a labeled path sample.

    The bandwidth defaults to ``bandwidth_rule(N, beta)`` with ``N`` the
    full sample size (all classes).

    Returns
    -------
    NWEstimate
    """
    if isinstance(X, PathBatch):
        labels = X.labels if labels is None else labels
        T = X.T
    X = check_paths(X)
    labels = check_labels(labels, X.shape[0])
    if X.shape[0] == 0:
        raise ValueError("empty sample")
    mine = X[labels == cls]
    _check_class_size(mine.shape[0])
    N = X.shape[0] if n_total is None else int(n_total)
    if h is None:
        h = bandwidth_rule(N, beta)
    grid = np.asarray(grid, dtype=float)
    dens, bf, window = kernel_integrals(mine, K, h, t0, grid, T)
    f_hat = dens.sum(axis=0) / (mine.shape[0] * window)
    bf_hat = bf.sum(axis=0) / (mine.shape[0] * window)
    return NWEstimate(
        grid=grid,
        f_hat=f_hat,
        bf_hat=bf_hat,
        b_hat=nw_estimate(f_hat, bf_hat, m),
        h=float(h),
        m=float(m),
        N_i=int(mine.shape[0]),
        t0=float(t0),
    )


def pilot_truncation_level(
    model, grid, t0, n_paths=10_000, n_steps=500, bin_width=0.02, rng=None,
    factor=0.5, floor=1e-3,
):
    """Truncation level from a pilot simulation independent of the fit sample.

    Half the smallest occupation density of either class over ``grid``,
    clamped below at ``floor``. Also returns the largest density seen, which
    feeds the exponential-bound constants.

    Returns
    -------
    m : float
    f_sup : tuple of float
        Per-class max of the pilot density over ``grid``.
    """
    rng = np.random.default_rng(rng)
    lows, highs = [], []
    for label in (0, 1):
        dens = occupation_density_mc(
            model, label, grid, t0, n_paths=n_paths, bin_width=bin_width,
            rng=rng, n_steps=n_steps,
        )
        lows.append(float(np.min(dens)))
        highs.append(float(np.max(dens)))
    return max(factor * min(lows), floor), tuple(highs)


class NadarayaWatsonDrift(BaseEstimator):
    """Truncated Nadaraya-Watson estimator of a diffusion drift.

    ``fit`` takes paths (rows of a ``(n_paths, n_steps + 1)`` array observed
    on a uniform grid of ``[0, T]``); ``predict`` takes state values and
    returns the estimated drift there.

    Parameters
    ----------
    beta : float, default 1.0
        Assumed Holder smoothness; sets the bandwidth rule and kernel order.
    kernel_order : int, optional
        Legendre kernel order. Defaults to ``2 * floor(beta)``.
    m : float, default 0.05
        Truncation level for the density estimate.
    t0 : float, optional
        Start of the integration window. Defaults to ``0.1 * T``.
    T : float, default 1.0
        Observation horizon.
    support : tuple of float, default (-1.0, 1.0)
        Interval on which the drift is estimated.
    grid_size : int, default 201
        Number of uniform evaluation points over ``support``.
    bandwidth : float, optional
        Fixed bandwidth. Defaults to ``bandwidth_rule(n, beta)`` with ``n``
        the ``n_total`` passed to ``fit`` or else the number of paths.

    Attributes
    ----------
    estimate_ : NWEstimate
    kernel_ : KernelSpec
    bandwidth_ : float
    """

    def __init__(
        self, beta=1.0, kernel_order=None, m=0.05, t0=None, T=1.0,
        support=(-1.0, 1.0), grid_size=201, bandwidth=None,
    ):
        self.beta = beta
        self.kernel_order = kernel_order
        self.m = m
        self.t0 = t0
        self.T = T
        self.support = support
        self.grid_size = grid_size
        self.bandwidth = bandwidth

    def fit(self, X, y=None, n_total=None):
        X = check_paths(X, min_paths=2)
        T = check_positive("T", self.T)
        t0 = 0.1 * T if self.t0 is None else float(self.t0)
        lo, hi = check_interval("support", self.support)
        order = self.kernel_order or default_kernel_order(self.beta)
        self.kernel_ = build_legendre_kernel(order)
        N = X.shape[0] if n_total is None else int(n_total)
        self.bandwidth_ = (
            bandwidth_rule(N, self.beta) if self.bandwidth is None
            else check_positive("bandwidth", self.bandwidth)
        )
        grid = np.linspace(lo, hi, int(self.grid_size))
        self.estimate_ = fit_drift(
            X, np.zeros(X.shape[0], dtype=int), 0, self.kernel_, self.beta,
            self.m, t0, grid, T=T, h=self.bandwidth_,
        )
        return self

    def predict(self, x):
        check_is_fitted(self, "estimate_")
        return self.estimate_(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class FitSettings:
    """Everything needed to refit drifts on a fresh sample of size ``N``.

    ``grid`` is the evaluation grid (per class when given as a pair).
    """

    N: int
    grid: tuple
    beta: float = 1.0
    kernel_order: int = None
    m: float = 0.05
    t0: float = 0.1
    n_steps: int = 500
    bandwidth: float = None

    @property
    def kernel(self):
        return build_legendre_kernel(self.kernel_order or default_kernel_order(self.beta))

    @property
    def h(self):
        return self.bandwidth if self.bandwidth is not None else bandwidth_rule(self.N, self.beta)

    def class_grid(self, cls):
        g = self.grid
        if len(g) == 2 and all(np.ndim(v) == 1 for v in g):
            return np.asarray(g[cls], dtype=float)
        return np.asarray(g, dtype=float)
