"""Bayes and plug-in classifiers for labeled diffusion paths.

With class drifts ``b0, b1`` and class probabilities ``p0, p1``, the
posterior probability of class 1 given a path ``X`` is

    Phi(X) = logistic(log(p1 / p0) + F_1(X) - F_0(X)),

where ``F_i(X) = int b_i(X_t) dX_t - 1/2 int b_i(X_t)^2 dt`` is the Girsanov
log-likelihood against Wiener measure. The classifier predicts 1 iff
``Phi(X) >= 1/2``. The plug-in version replaces drifts and probabilities by
their estimates.
"""

from dataclasses import dataclass
import csv
import math

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .estimate import bandwidth_rule, default_kernel_order, fit_drift
from .kernels import build_legendre_kernel
from .simulate import PathBatch, simulate_paths
from .validation import check_interval, check_labels, check_paths, check_positive

__all__ = [
    "ClassifierModel",
    "RiskReport",
    "class_proportions",
    "girsanov_functional",
    "girsanov_functionals",
    "regression_score",
    "predict",
    "excess_risk_mc",
    "PluginDiffusionClassifier",
    "write_predictions_csv",
]


def class_proportions(labels):
    """Empirical class frequencies ``(p0_hat, p1_hat)``.

    >>> class_proportions([0, 1, 1, 0])
    (0.5, 0.5)
    """
    labels = np.asarray(labels).reshape(-1)
    if labels.size == 0:
        raise ValueError("empty sample: cannot estimate class proportions")
    p1 = float(np.count_nonzero(labels == 1)) / labels.size
    return 1.0 - p1, p1


def girsanov_functionals(X, b, T):
    """``F_b`` for every row of the path array ``X``."""
    X = np.atleast_2d(X)
    left = X[:, :-1]
    values = np.broadcast_to(np.asarray(b(left), dtype=float), left.shape)
    ito = np.sum(values * np.diff(X, axis=1), axis=1)
    quad = np.sum(values * values, axis=1) * (T / left.shape[1])
    return ito - 0.5 * quad


def girsanov_functional(path, b):
    """``int b(X_t) dX_t - 1/2 int b(X_t)^2 dt`` for one path."""
    return float(girsanov_functionals(path.x, b, path.T)[0])


@dataclass(frozen=True)
class ClassifierModel:
    """Drift pair and class probabilities defining ``Phi`` and ``g``.

    ``b0``/``b1`` may be true drifts or fitted :class:`NWEstimate` objects;
    anything callable on arrays works.
    """

    b0: object
    b1: object
    p0: float
    p1: float
    kind: str = "bayes"

    def __post_init__(self):
        if abs(self.p0 + self.p1 - 1.0) > 1e-12:
            raise ValueError(f"class probabilities must sum to 1, got {self.p0} + {self.p1}")
        if not (0.0 < self.p1 < 1.0):
            raise ValueError(f"class probabilities must lie in (0, 1), got p1={self.p1}")
        if self.kind not in ("bayes", "plugin"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")

    @classmethod
    def bayes(cls, model):
        """The oracle classifier of a :class:`MixtureModel`."""
        return cls(model.b0, model.b1, model.p0, model.p1, kind="bayes")

    def log_odds(self, X, T=None):
        """``log(p1/p0) + F_1 - F_0`` for each row of ``X``."""
        if isinstance(X, PathBatch):
            X, T = X.x, X.T
        if T is None:
            raise ValueError("T is required for raw path arrays")
        X = np.atleast_2d(X)
        return (
            math.log(self.p1 / self.p0)
            + girsanov_functionals(X, self.b1, T)
            - girsanov_functionals(X, self.b0, T)
        )

    def score_paths(self, X, T=None):
        return expit(self.log_odds(X, T))

    def predict_paths(self, X, T=None):
        return (self.score_paths(X, T) >= 0.5).astype(np.int64)


def regression_score(model, path):
    """Posterior probability ``Phi(X)`` of class 1 for one path."""
    return float(model.score_paths(path.x, path.T)[0])


def predict(model, path):
    """Label ``1{Phi(X) >= 1/2}`` for one path."""
    return int(regression_score(model, path) >= 0.5)


@dataclass(frozen=True)
class RiskReport:
    """Misclassification rates of a classifier and of the Bayes rule.

    ``se`` is the binomial standard error of ``risk``; ``excess_se`` is the
    paired standard error of ``excess`` over the shared test paths.
    """

    risk: float
    bayes_risk: float
    excess: float
    n_test: int
    se: float
    excess_se: float = 0.0


def excess_risk_mc(plugin, bayes, model, n_test, rng=None, n_steps=500, test=None):
    """Excess risk of ``plugin`` over ``bayes`` on fresh test paths.

    Both classifiers see the same test paths. ``plugin`` may be a
    :class:`ClassifierModel` or a fitted :class:`PluginDiffusionClassifier`.
    """
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    if test is None:
        test = simulate_paths(model, int(n_test), n_steps, rng)
    if isinstance(plugin, PluginDiffusionClassifier):
        plugin = plugin.model_
    y = test.labels
    wrong_plugin = (plugin.predict_paths(test) != y).astype(float)
    wrong_bayes = (bayes.predict_paths(test) != y).astype(float)
    n = len(y)
    risk = float(wrong_plugin.mean())
    bayes_risk = float(wrong_bayes.mean())
    diff = wrong_plugin - wrong_bayes
    excess_se = float(diff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RiskReport(
        risk=risk,
        bayes_risk=bayes_risk,
        excess=float(diff.mean()),
        n_test=n,
        se=math.sqrt(risk * (1.0 - risk) / n),
        excess_se=excess_se,
    )


class PluginDiffusionClassifier(ClassifierMixin, BaseEstimator):
    """Plug-in classifier with Nadaraya-Watson drift estimates.

    Parameters
    ----------
    beta : float, default 1.0
        Assumed Holder smoothness of the drifts.
    kernel_order : int, optional
        Legendre kernel order; defaults to ``2 * floor(beta)``.
    m : float, default 0.05
        Truncation level of the density estimates.
    t0 : float, optional
        Start of the estimation window; defaults to ``0.1 * T``.
    T : float, default 1.0
        Observation horizon of the paths.
    support : tuple, default (-1.0, 1.0)
        Estimation interval, either one ``(A, B)`` pair shared by both
        classes or a pair of such pairs, one per class.
    grid_size : int, default 201
        Evaluation points per class.
    bandwidth : float, optional
        Fixed bandwidth; defaults to ``N^(-1/(2 beta + 1))``.

    Attributes
    ----------
    classes_ : ndarray
    drifts_ : tuple of NWEstimate
    proportions_ : tuple of float
    bandwidth_ : float
    model_ : ClassifierModel
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

    def _supports(self):
        sup = self.support
        if len(sup) == 2 and all(np.ndim(s) == 1 for s in sup):
            return [check_interval("support", s) for s in sup]
        return [check_interval("support", sup)] * 2

    def fit(self, X, y=None):
        if isinstance(X, PathBatch) and y is None:
            y = X.labels
        X = check_paths(X, min_paths=2)
        y = check_labels(y, X.shape[0])
        T = check_positive("T", self.T)
        t0 = 0.1 * T if self.t0 is None else float(self.t0)
        order = self.kernel_order or default_kernel_order(self.beta)
        kernel = build_legendre_kernel(order)
        N = X.shape[0]
        h = (
            bandwidth_rule(N, self.beta) if self.bandwidth is None
            else check_positive("bandwidth", self.bandwidth)
        )
        drifts = []
        for cls, (lo, hi) in zip((0, 1), self._supports()):
            grid = np.linspace(lo, hi, int(self.grid_size))
            drifts.append(fit_drift(X, y, cls, kernel, self.beta, self.m, t0, grid, T=T, h=h))
        p0, p1 = class_proportions(y)
        self.classes_ = np.array([0, 1])
        self.kernel_ = kernel
        self.bandwidth_ = h
        self.drifts_ = tuple(drifts)
        self.proportions_ = (p0, p1)
        self.model_ = ClassifierModel(drifts[0], drifts[1], p0, p1, kind="plugin")
        return self

    def decision_function(self, X):
        """Estimated log-odds of class 1 for each path."""
        check_is_fitted(self, "model_")
        return self.model_.log_odds(check_paths(X), self.T)

    def predict_proba(self, X):
        phi = expit(self.decision_function(X))
        return np.column_stack([1.0 - phi, phi])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)


def write_predictions_csv(path, labels, phi, predicted, bayes_predicted, fmt="%.12g"):
    """Write ``path_id,label,phi,predicted,bayes_predicted`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path_id", "label", "phi", "predicted", "bayes_predicted"])
        for j, row in enumerate(zip(labels, phi, predicted, bayes_predicted)):
            writer.writerow([j, int(row[0]), fmt % row[1], int(row[2]), int(row[3])])
