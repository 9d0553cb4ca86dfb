"""Labeled diffusion paths, pathwise integrals and Monte Carlo density oracles.

Paths follow ``dX_t = b_Y(X_t) dt + dW_t`` on a uniform grid of ``[0, T]``,
discretized by Euler-Maruyama. Batches of paths are stored as 2-D arrays of
shape ``(n_paths, n_steps + 1)``; this is also the ``X`` layout accepted by
the estimators.
"""

from dataclasses import dataclass, field
import csv
import math

import numpy as np
from scipy.integrate import trapezoid

from .drifts import DriftFunction, drift_sup_distance
from .exceptions import DegenerateModelError
from .kernels import gauss_legendre_integral

__all__ = [
    "DiffusionPath",
    "PathBatch",
    "MixtureModel",
    "sample_label",
    "sample_labels",
    "euler_maruyama",
    "simulate_path",
    "simulate_paths",
    "window_start",
    "ito_integral",
    "ito_integrals",
    "time_integral",
    "time_integrals",
    "transition_density_mc",
    "occupation_density_mc",
    "brownian_bridges",
    "write_paths_csv",
]


@dataclass(frozen=True)
class DiffusionPath:
    """One trajectory on the uniform grid ``t_k = k T / n``.

    ``label`` is 0, 1 or ``None`` (unlabeled).
    """

    t: np.ndarray
    x: np.ndarray
    dW: np.ndarray
    x0: float
    label: object = None

    def __post_init__(self):
        if len(self.x) != len(self.t) or len(self.dW) != len(self.x) - 1:
            raise ValueError("path arrays have inconsistent lengths")
        if self.x[0] != self.x0:
            raise ValueError("x[0] must equal x0")

    @property
    def T(self):
        return float(self.t[-1])

    @property
    def n_steps(self):
        return len(self.dW)

    @property
    def dt(self):
        return self.T / self.n_steps


@dataclass(frozen=True)
class PathBatch:
    """A set of paths sharing one time grid.

    Attributes
    ----------
    x : ndarray of shape (n_paths, n_steps + 1)
    dW : ndarray of shape (n_paths, n_steps)
    labels : ndarray of shape (n_paths,)
        Integer labels; -1 marks unlabeled paths.
    T : float
    """

    x: np.ndarray
    dW: np.ndarray
    labels: np.ndarray
    T: float

    def __len__(self):
        return self.x.shape[0]

    @property
    def n_steps(self):
        return self.x.shape[1] - 1

    @property
    def dt(self):
        return self.T / self.n_steps

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def __getitem__(self, j):
        label = int(self.labels[j])
        return DiffusionPath(
            t=self.t,
            x=self.x[j],
            dW=self.dW[j],
            x0=float(self.x[j, 0]),
            label=None if label < 0 else label,
        )

    def subset(self, mask):
        return PathBatch(self.x[mask], self.dW[mask], self.labels[mask], self.T)


@dataclass(frozen=True)
class MixtureModel:
    """Two-class diffusion mixture with class-1 probability ``p1``."""

    b0: DriftFunction
    b1: DriftFunction
    p1: float = 0.5
    x0: float = 0.0
    T: float = 1.0
    check_distinct: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not 0.0 < self.p1 < 1.0:
            raise ValueError(f"invalid probability p1={self.p1!r}: must lie in (0, 1)")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.check_distinct and drift_sup_distance(self.b0, self.b1) == 0.0:
            raise DegenerateModelError("class drifts b0 and b1 coincide")

    @property
    def p0(self):
        return 1.0 - self.p1

    def drift(self, label):
        return self.b1 if label == 1 else self.b0


def _check_p1(p1):
    if not 0.0 < p1 < 1.0:
        raise ValueError(f"invalid probability p1={p1!r}: must lie in (0, 1)")


def sample_label(p1, rng=None):
    """Draw one Bernoulli(``p1``) label."""
    _check_p1(p1)
    rng = np.random.default_rng(rng)
    return int(rng.random() < p1)


def sample_labels(p1, n, rng=None):
    _check_p1(p1)
    rng = np.random.default_rng(rng)
    return (rng.random(int(n)) < p1).astype(np.int64)


def euler_maruyama(b0, b1, labels, x0, dt, dW):
    """Euler-Maruyama recursion for a batch of labeled paths.

    ``x[:, k+1] = x[:, k] + b_label(x[:, k]) dt + dW[:, k]``.
    """
    n_paths, n_steps = dW.shape
    # group classes into contiguous blocks and step in time-major layout
    order = np.argsort(labels, kind="stable")
    n0 = int(np.count_nonzero(labels[order] != 1))
    noise = np.ascontiguousarray(dW[order].T)
    xt = np.empty((n_steps + 1, n_paths))
    xt[0] = x0
    for k in range(n_steps):
        xk = xt[k]
        nxt = xt[k + 1]
        if n0:
            nxt[:n0] = xk[:n0] + b0(xk[:n0]) * dt
        if n0 < n_paths:
            nxt[n0:] = xk[n0:] + b1(xk[n0:]) * dt
        nxt += noise[k]
    x = np.empty((n_paths, n_steps + 1))
    x[order] = xt.T
    return x


def simulate_paths(model, n_paths, n_steps=500, rng=None, labels=None, noise=True):
    """Simulate ``n_paths`` labeled paths from ``model``.

    Labels are drawn first (unless given), then the Brownian increments, so
    the increments are independent of the labels.

    Returns
    -------
    PathBatch
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = np.random.default_rng(rng)
    if labels is None:
        labels = sample_labels(model.p1, n_paths, rng)
    else:
        labels = np.broadcast_to(np.asarray(labels, dtype=np.int64), (n_paths,)).copy()
    dt = model.T / n_steps
    if noise:
        dW = rng.standard_normal((n_paths, n_steps)) * math.sqrt(dt)
    else:
        dW = np.zeros((n_paths, n_steps))
    x = euler_maruyama(model.b0, model.b1, labels, model.x0, dt, dW)
    return PathBatch(x=x, dW=dW, labels=labels, T=float(model.T))


def simulate_path(model, label, n_steps=500, rng=None, noise=True):
    """Simulate a single path of class ``label``."""
    batch = simulate_paths(model, 1, n_steps, rng, labels=label, noise=noise)
    return batch[0]


def window_start(n_steps, T, from_t):
    """Index of the grid point nearest to ``from_t``."""
    if not 0.0 <= from_t < T:
        raise ValueError(f"invalid window start {from_t!r}: need 0 <= from_t < T={T}")
    k0 = int(round(from_t / (T / n_steps)))
    if k0 >= n_steps:
        raise ValueError(f"window start {from_t!r} snaps to the end of the grid")
    return k0


def _apply(g, values):
    return np.broadcast_to(np.asarray(g(values), dtype=float), values.shape)


def ito_integrals(x, g, start=0):
    """Left-point Ito sums ``sum_k g(x_k) (x_{k+1} - x_k)`` for each row of ``x``."""
    x = np.atleast_2d(x)
    left = x[:, start:-1]
    return np.sum(_apply(g, left) * np.diff(x[:, start:], axis=1), axis=1)


def time_integrals(x, g, T, from_t=0.0):
    """Left-point Riemann sums of ``g(X_t) dt`` over ``t_k >= from_t``."""
    x = np.atleast_2d(x)
    n_steps = x.shape[1] - 1
    k0 = window_start(n_steps, T, from_t)
    return np.sum(_apply(g, x[:, k0:-1]), axis=1) * (T / n_steps)


def ito_integral(path, g):
    """Ito integral ``int g(X_t) dX_t`` of a single path (left endpoints)."""
    return float(ito_integrals(path.x, g)[0])


def time_integral(path, g, from_t=0.0):
    """Time integral ``int_{from_t}^T g(X_t) dt`` of a single path."""
    return float(time_integrals(path.x, g, path.T, from_t)[0])


def brownian_bridges(n_bridge, n_grid=200, rng=None):
    """Standard Brownian bridges on ``linspace(0, 1, n_grid)``.

    Built by conditioning a random walk: ``B_u = W_u - u W_1``.
    """
    rng = np.random.default_rng(rng)
    u = np.linspace(0.0, 1.0, n_grid)
    steps = rng.standard_normal((n_bridge, n_grid - 1)) * np.sqrt(np.diff(u))
    W = np.concatenate([np.zeros((n_bridge, 1)), np.cumsum(steps, axis=1)], axis=1)
    return u, W - u[None, :] * W[:, -1:]


def transition_density_mc(
    drift, s, t, x, y, n_bridge=2000, rng=None, n_grid=200, return_se=False
):
    """Monte Carlo transition density of ``dX = b(X) dt + dW``.

    Uses the Brownian-bridge representation

    .. math::

        \\Gamma(s,t,x,y) = \\frac{\\Lambda}{\\sqrt{2\\pi(t-s)}}
            \\exp\\Big(-\\frac{(y-x)^2}{2(t-s)} + \\int_x^y b(u)\\,du\\Big),

    with ``Lambda = E exp((t-s) int_0^1 G((1-u)x + uy + sqrt(t-s) B_u) du)``,
    ``G = -(b^2 + b')/2`` and ``B`` a standard Brownian bridge.
    """
    if not s < t:
        raise ValueError(f"invalid window: need s < t, got s={s}, t={t}")
    tau = t - s
    rng = np.random.default_rng(rng)
    u, B = brownian_bridges(n_bridge, n_grid, rng)
    z = (1.0 - u)[None, :] * x + u[None, :] * y + math.sqrt(tau) * B
    eps = 1e-5
    deriv = (drift(z + eps) - drift(z - eps)) / (2.0 * eps)
    G = -0.5 * (drift(z) ** 2 + deriv)
    weights = np.exp(tau * trapezoid(G, u, axis=1))
    lam = float(np.mean(weights))
    if y >= x:
        area = gauss_legendre_integral(drift, x, y)
    else:
        area = -gauss_legendre_integral(drift, y, x)
    prefactor = math.exp(-((y - x) ** 2) / (2.0 * tau) + area) / math.sqrt(
        2.0 * math.pi * tau
    )
    value = prefactor * lam
    if return_se:
        se = prefactor * float(np.std(weights, ddof=1)) / math.sqrt(n_bridge)
        return value, se
    return value


def occupation_density_mc(
    model,
    label,
    x,
    t0,
    n_paths=10_000,
    bin_width=0.02,
    rng=None,
    n_steps=500,
    return_se=False,
    batch=None,
):
    """Histogram estimate of the time-averaged density of class ``label``.

    Counts the fraction of (path, grid time ``t_k >= t0``) pairs that fall in
    ``[x - bin_width/2, x + bin_width/2]`` and divides by ``bin_width``.
    ``x`` may be a scalar or an array. A pre-simulated ``batch`` of class
    ``label`` paths can be supplied instead of simulating.
    """
    if not 0.0 < t0 < model.T:
        raise ValueError(f"invalid t0={t0!r}: need 0 < t0 < T")
    if batch is None:
        batch = simulate_paths(model, n_paths, n_steps, rng, labels=label)
    k0 = window_start(batch.n_steps, batch.T, t0)
    values = batch.x[:, k0:-1]
    n, m = values.shape
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    # per-path counts via one global sort with per-path offsets
    lo_all, hi_all = values.min(), values.max()
    span = (hi_all - lo_all) + abs(xs).max() + bin_width + 1.0
    offsets = (np.arange(n) * span)[:, None]
    flat = np.sort((values - lo_all + offsets).ravel())
    left = (xs - 0.5 * bin_width - lo_all)[None, :] + offsets
    right = (xs + 0.5 * bin_width - lo_all)[None, :] + offsets
    counts = np.searchsorted(flat, right, side="right") - np.searchsorted(
        flat, left, side="left"
    )
    per_path = counts / (m * bin_width)
    density = per_path.mean(axis=0)
    se = per_path.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(density)
    if scalar:
        density, se = float(density[0]), float(se[0])
    return (density, se) if return_se else density


def write_paths_csv(batch, path, fmt="%.12g"):
    """Dump paths as ``path_id,label,t,x`` rows."""
    t = batch.t
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path_id", "label", "t", "x"])
        for j in range(len(batch)):
            label = int(batch.labels[j])
            for tk, xk in zip(t, batch.x[j]):
                writer.writerow([j, label, fmt % tk, fmt % xk])
