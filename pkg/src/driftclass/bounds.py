"""Computable versions of the theoretical guarantees.

* the exponential tail bound on ``||b_hat - b||_inf`` and its constants,
* a Monte Carlo estimate of the matching tail probability,
* the low-noise (margin) probability ``P(0 < |Phi - 1/2| <= eps)``,
* samples of ``Z_T = int (b1 - b0)(X_t) dW_t`` with density diagnostics.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._parallel import map_replicates, spawn_seeds
from .classify import ClassifierModel
from .drifts import drift_sup_distance
from .estimate import fit_drift
from .exceptions import DegenerateClassError, DegenerateModelError
from .simulate import simulate_paths

__all__ = [
    "BoundConstants",
    "compute_constants",
    "exp_bound",
    "exp_bound_terms",
    "delta_rule",
    "TailEstimate",
    "sup_errors_mc",
    "tail_probability_mc",
    "margin_probe",
    "zt_sample",
    "zt_diagnostics",
]


@dataclass(frozen=True)
class BoundConstants:
    """Constants ``C`` and ``C'`` of the exponential inequality.

    ``inputs`` keeps what they were computed from (and what
    :func:`exp_bound` needs: ``T``, ``t0`` and ``K_sup``).
    """

    C: float
    Cprime: float
    inputs: dict = field(default_factory=dict)

    def recompute(self):
        i = self.inputs
        return _constants(i["m"], i["f_sup"], i["b_sup"], i["K_l2_sq"], i["K_sup"], i["T"], i["t0"])


def _constants(m, f_sup, b_sup, K_l2_sq, K_sup, T, t0):
    first = []
    for f, b in zip(f_sup, b_sup):
        branch1 = m**2 / (576.0 * f * b**2 * K_l2_sq) if b > 0 else math.inf
        branch2 = m**2 * (T - t0) / (2304.0 * f * K_l2_sq)
        first.append(min(branch1, branch2))
    C = min(first)
    Cprime = min(m**2 / (32.0 * f * K_l2_sq + 16.0 * m * K_sup / 3.0) for f in f_sup)
    return C, Cprime


def compute_constants(m, f_sup, b_sup, K, T, t0):
    """Evaluate ``C`` and ``C'`` (both minimized over the two classes).

    Parameters
    ----------
    m : float
        Truncation level.
    f_sup, b_sup : pair of float
        Sup norms of the occupation densities and of the drifts per class.
        A zero drift norm removes its (then infinite) branch from the min.
    K : KernelSpec
    T, t0 : float
        Horizon and window start.

    Examples
    --------
    >>> from driftclass.kernels import build_legendre_kernel
    >>> c = compute_constants(1.0, (1.0, 1.0), (1.0, 1.0),
    ...                       build_legendre_kernel(2), 1.0, 0.0)
    >>> c.C == c.recompute()[0]
    True
    """
    values = {"m": m, "T": T}
    for name, val in values.items():
        if not val > 0:
            raise ValueError(f"invalid constant input {name}={val!r}: must be > 0")
    if not 0 <= t0 < T:
        raise ValueError(f"invalid constant input t0={t0!r}: need 0 <= t0 < T")
    if any(not f > 0 for f in f_sup):
        raise ValueError(f"invalid constant input f_sup={f_sup!r}: must be > 0")
    if any(b < 0 for b in b_sup) or not any(b > 0 for b in b_sup):
        raise ValueError(f"invalid constant input b_sup={b_sup!r}")
    inputs = {
        "m": float(m),
        "f_sup": tuple(float(f) for f in f_sup),
        "b_sup": tuple(float(b) for b in b_sup),
        "K_l2_sq": float(K.l2_norm) ** 2,
        "K_sup": float(K.sup_norm),
        "T": float(T),
        "t0": float(t0),
    }
    C, Cprime = _constants(**inputs)
    return BoundConstants(C=C, Cprime=Cprime, inputs=inputs)


def exp_bound_terms(consts, delta, N_i, h, b_sup_i, N):
    """The three terms of the tail bound, each non-increasing in ``N_i`` and ``delta``."""
    if not delta > 0 or not h > 0:
        raise ValueError("delta and h must be positive")
    if N_i < 2:
        raise ValueError("the bound needs N_i >= 2")
    i = consts.inputs
    window = i["T"] - i["t0"]
    t1 = 6.0 * math.exp(-consts.C * N_i * delta**2 * h)
    t2 = N_i * math.exp(-window * math.log(N) ** 2 / (2.0 * i["K_sup"] ** 2))
    t3 = 6.0 * b_sup_i / delta * math.exp(-consts.Cprime * N_i * h)
    return t1, t2, t3


def exp_bound(consts, delta, N_i, h, b_sup_i, N):
    """Right-hand side of the tail inequality. May exceed 1 (vacuous)."""
    return max(0.0, sum(exp_bound_terms(consts, delta, N_i, h, b_sup_i, N)))


def delta_rule(h, beta, N):
    """Default threshold sequence ``delta_N = h^beta * log N``."""
    return h**beta * math.log(N)


@dataclass(frozen=True)
class TailEstimate:
    """Tail frequencies for one or more thresholds over shared fits."""

    delta: np.ndarray
    frequency: np.ndarray
    se: np.ndarray
    n: int
    degenerate: int
    errors: np.ndarray
    n_i: np.ndarray


def _sup_error_replicate(seed, model, cls, settings):
    rng = np.random.default_rng(seed)
    batch = simulate_paths(model, settings.N, settings.n_steps, rng)
    grid = settings.class_grid(cls)
    try:
        est = fit_drift(
            batch, None, cls, settings.kernel, settings.beta, settings.m,
            settings.t0, grid, h=settings.h,
        )
    except DegenerateClassError:
        return math.nan, int(np.count_nonzero(batch.labels == cls))
    truth = model.drift(cls)(grid)
    return float(np.max(np.abs(est.b_hat - truth))), est.N_i


def sup_errors_mc(model, cls, settings, n_replicates, rng=None, n_jobs=1):
    """Grid sup-errors of independent class-``cls`` fits (NaN if degenerate)."""
    seeds = spawn_seeds(rng, n_replicates)
    out = map_replicates(_Replicate(model, cls, settings), seeds, n_jobs)
    errors = np.array([o[0] for o in out])
    n_i = np.array([o[1] for o in out])
    return errors, n_i


class _Replicate:
    # picklable, so replicates can run in worker processes
    def __init__(self, model, cls, settings):
        self.model, self.cls, self.settings = model, cls, settings

    def __call__(self, seed):
        return _sup_error_replicate(seed, self.model, self.cls, self.settings)


def tail_probability_mc(model, cls, delta, settings, n_replicates=200, rng=None, n_jobs=1):
    """Frequency of ``||b_hat - b||_inf >= delta`` over independent fits.

    ``delta`` may be an array; all thresholds share the same fits.
    Degenerate replicates (fewer than two class paths) are excluded and
    counted.
    """
    if n_replicates < 50:
        raise ValueError("tail probabilities need at least 50 replicates")
    errors, n_i = sup_errors_mc(model, cls, settings, n_replicates, rng, n_jobs)
    ok = ~np.isnan(errors)
    n = int(np.count_nonzero(ok))
    deltas = np.atleast_1d(np.asarray(delta, dtype=float))
    if n == 0:
        freq = np.full(deltas.shape, np.nan)
        se = np.full(deltas.shape, np.nan)
    else:
        freq = np.array([np.mean(errors[ok] >= d) for d in deltas])
        se = np.sqrt(freq * (1.0 - freq) / n)
    return TailEstimate(deltas, freq, se, n, int(np.count_nonzero(~ok)), errors, n_i)


def _check_eps(eps):
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps <= 0) or np.any(eps >= 0.125):
        raise ValueError(f"epsilon must lie in (0, 1/8), got {eps}")
    return eps


def margin_probe(model, eps, n_paths=10_000, rng=None, n_steps=500, batch=None):
    """Monte Carlo frequency of ``0 < |Phi(X) - 1/2| <= eps`` under the true model.

    ``eps`` may be an array; all values are evaluated on the same paths.

    Returns
    -------
    frequency, se : float or ndarray
    """
    scalar = np.ndim(eps) == 0
    eps = _check_eps(eps)
    if batch is None:
        batch = simulate_paths(model, int(n_paths), n_steps, rng)
    phi = ClassifierModel(model.b0, model.b1, model.p0, model.p1).score_paths(batch)
    gap = np.abs(phi - 0.5)
    n = len(batch)
    freq = np.array([np.mean((gap > 0) & (gap <= e)) for e in eps])
    se = np.sqrt(freq * (1.0 - freq) / n)
    if scalar:
        return float(freq[0]), float(se[0])
    return freq, se


def zt_sample(model, n_paths=10_000, rng=None, n_steps=500, batch=None):
    """Samples of ``int_0^T (b1 - b0)(X_t) dW_t`` along mixture paths."""
    if drift_sup_distance(model.b0, model.b1) == 0.0:
        raise DegenerateModelError("Z_T is identically zero when b0 == b1")
    if batch is None:
        batch = simulate_paths(model, int(n_paths), n_steps, rng)
    left = batch.x[:, :-1]
    gap = model.b1(left) - model.b0(left)
    return np.sum(gap * batch.dW, axis=1)


def zt_diagnostics(model, n_paths=10_000, rng=None, n_steps=500, bins=50):
    """Moments, isometry check and histogram of ``Z_T``.

    Returns a dict with the sample mean and variance (with standard errors),
    the Ito-isometry prediction ``E int (b1 - b0)^2 dt`` from the same
    paths, the paired gap between the two (with its standard error) and the
    largest histogram bin density.
    """
    batch = simulate_paths(model, int(n_paths), n_steps, rng)
    z = zt_sample(model, batch=batch)
    left = batch.x[:, :-1]
    energy = np.sum((model.b1(left) - model.b0(left)) ** 2, axis=1) * batch.dt
    n = z.size
    var = float(np.var(z, ddof=1))
    centered = z - z.mean()
    se_var = float(np.std(centered**2, ddof=1) / math.sqrt(n))
    gap = centered**2 - energy
    density, _ = np.histogram(z, bins=bins, density=True)
    return {
        "n": n,
        "mean": float(z.mean()),
        "mean_se": float(z.std(ddof=1) / math.sqrt(n)),
        "variance": var,
        "variance_se": se_var,
        "isometry": float(energy.mean()),
        "isometry_se": float(energy.std(ddof=1) / math.sqrt(n)),
        "isometry_gap": float(gap.mean()),
        "isometry_gap_se": float(gap.std(ddof=1) / math.sqrt(n)),
        "max_density": float(density.max()),
        "sample": z,
    }
