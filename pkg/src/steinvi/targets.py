"""Target (posterior) models: log-density gradients, and for Bayesian
logistic regression the full position-dependent metric package needed by the
information-geometric update rule.

A target consumed by the engine exposes ``grad_log(points)`` mapping an
(N, d) array of positions to the (N, d) array of ambient log-density
gradients.  Targets that additionally support the metric-aware Euclidean
update expose ``metric_batch(points)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .validation import as_float_array, check_unit


@dataclass(frozen=True)
class MetricQuantities:
    """Metric tensor package at one position.

    G : (m, m) symmetric positive-definite metric.
    Ginv : (m, m) inverse metric.
    grad_logdet : (m,) gradient of log |G|.
    div_ginv_rows : (m,) row divergences sum_j d_j Ginv[i, j].
    """
    G: np.ndarray
    Ginv: np.ndarray
    grad_logdet: np.ndarray
    div_ginv_rows: np.ndarray


COND_LIMIT = 1e14


@dataclass(frozen=True)
class BlrModel:
    """Bayesian logistic regression: w ~ N(0, alpha I), y_d ~ Bern(s(w^T x_d)).

    The metric is the Fisher information of the likelihood plus the prior
    precision: G(w) = sum_d c_d x_d x_d^T + I/alpha with
    c_d = s(w^T x_d)(1 - s(w^T x_d)).
    """
    X: np.ndarray
    y: np.ndarray
    alpha: float

    def __post_init__(self):
        X = as_float_array(self.X, "X", ndim=2)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y disagree in number of rows")
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("labels must be in {0, 1}")
        if self.alpha <= 0:
            raise ValueError("prior variance alpha must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_data(self) -> int:
        return self.X.shape[0]

    def log_posterior(self, w):
        """Unnormalized log-posterior (for finite-difference checks)."""
        w = as_float_array(w, "w", ndim=1)
        z = self.X @ w if self.n_data else np.zeros(0)
        loglik = float(np.sum(self.y * z - np.logaddexp(0.0, z)))
        return -0.5 * float(w @ w) / self.alpha + loglik

    def grad_log(self, w):
        """Gradient of the log-posterior: -w/alpha + sum_d (y_d - s_d) x_d.

        Accepts a single position (m,) or a stack (N, m).
        """
        w = as_float_array(w, "w")
        single = w.ndim == 1
        W = w[None, :] if single else w
        if self.n_data:
            s = expit(np.einsum("nm,dm->nd", W, self.X))
            data_term = np.einsum("nd,dm->nm", self.y[None, :] - s, self.X)
        else:
            data_term = np.zeros_like(W)
        out = -W / self.alpha + data_term
        return out[0] if single else out

    def _curvatures(self, W):
        """Per-datum c_d = s(1-s) and f_d = (1 - 2 s) c_d for each row of W."""
        s = expit(np.einsum("nm,dm->nd", W, self.X))
        c = s * (1.0 - s)
        return c, (1.0 - 2.0 * s) * c

    def metric(self, w, inversion="direct"):
        """Metric package at one position.

        Parameters
        ----------
        w : (m,) array
        inversion : {"direct", "sherman_morrison"}
            Dense inversion (default; more efficient at these scales) or the
            rank-one recursion over the dataset starting from alpha I.
        """
        w = as_float_array(w, "w", ndim=1)
        m = self.n_features
        if self.n_data:
            c, f = self._curvatures(w[None, :])
            c, f = c[0], f[0]
            G = np.einsum("d,di,dj->ij", c, self.X, self.X) + np.eye(m) / self.alpha
        else:
            c = f = np.zeros(0)
            G = np.eye(m) / self.alpha
        if inversion == "direct":
            if np.linalg.cond(G) > COND_LIMIT:
                raise np.linalg.LinAlgError(
                    "metric tensor is numerically singular")
            Ginv = np.linalg.inv(G)
        elif inversion == "sherman_morrison":
            Ginv = self._sherman_morrison(c)
        else:
            raise ValueError(f"unknown inversion mode {inversion!r}")
        if self.n_data:
            quad = np.einsum("di,ij,dj->d", self.X, Ginv, self.X)
            grad_logdet = np.einsum("d,di->i", f * quad, self.X)
        else:
            grad_logdet = np.zeros(m)
        div_rows = -np.einsum("ij,j->i", Ginv, grad_logdet)
        return MetricQuantities(G=G, Ginv=Ginv, grad_logdet=grad_logdet,
                                div_ginv_rows=div_rows)

    def _sherman_morrison(self, c):
        """Iterated rank-one updates of the inverse over the dataset."""
        Ginv = self.alpha * np.eye(self.n_features)
        for d in range(self.n_data):
            u = Ginv @ self.X[d]
            Ginv = Ginv - c[d] * np.outer(u, u) / (1.0 + c[d] * (self.X[d] @ u))
        return Ginv

    def metric_batch(self, W):
        """Stacked metric quantities for every row of W (N, m).

        Returns (G, Ginv, grad_logdet, div_ginv_rows) with shapes
        (N, m, m), (N, m, m), (N, m), (N, m).
        """
        W = as_float_array(W, "W", ndim=2)
        n, m = W.shape
        eye = np.eye(m)
        if self.n_data:
            c, f = self._curvatures(W)
            G = np.einsum("nd,di,dj->nij", c, self.X, self.X) + eye / self.alpha
        else:
            G = np.broadcast_to(eye / self.alpha, (n, m, m)).copy()
        Ginv = np.linalg.inv(G)
        if self.n_data:
            quad = np.einsum("di,nij,dj->nd", self.X, Ginv, self.X)
            grad_logdet = np.einsum("nd,di->ni", f * quad, self.X)
        else:
            grad_logdet = np.zeros((n, m))
        div_rows = -np.einsum("nij,nj->ni", Ginv, grad_logdet)
        return G, Ginv, grad_logdet, div_rows


def predictive_probs(particles, X):
    """Posterior-mean predictive probability (1/N) sum_i s(w_i^T x)."""
    particles = as_float_array(particles, "particles", ndim=2)
    X = as_float_array(X, "X", ndim=2)
    if particles.shape[0] == 0 or X.shape[0] == 0:
        raise ValueError("particles and test points must be nonempty")
    s = expit(np.einsum("nm,dm->nd", particles, X))
    return np.einsum("nd->d", s) / particles.shape[0]


def blr_predict(particles, X_test, y_test):
    """Test accuracy of Bayesian model averaging over weight particles.

    Predicted label is 1 iff the averaged probability is >= 1/2 (ties go to
    label 1).
    """
    probs = predictive_probs(particles, X_test)
    y_test = np.asarray(y_test, dtype=np.float64).ravel()
    if y_test.shape[0] != probs.shape[0]:
        raise ValueError("X_test and y_test disagree in length")
    pred = (probs >= 0.5).astype(np.float64)
    return float(np.mean(pred == y_test))


@dataclass(frozen=True)
class VmfMixture:
    """Mixture of von Mises-Fisher components on S^{n-1}.

    Density (up to normalization): p(y) ~ sum_c pi_c exp(kappa_c mu_c^T y).
    Only gradients of the log-density are ever needed, so normalizing
    constants are never computed.
    """
    means: np.ndarray
    kappas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = check_unit(as_float_array(self.means, "means", ndim=2), "means")
        kappas = as_float_array(self.kappas, "kappas", ndim=1)
        weights = as_float_array(self.weights, "weights", ndim=1)
        if not (means.shape[0] == kappas.shape[0] == weights.shape[0]):
            raise ValueError("component counts disagree")
        if np.any(kappas <= 0) or np.any(weights <= 0):
            raise ValueError("concentrations and weights must be positive")
        if abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def single(cls, mu, kappa):
        mu = as_float_array(mu, "mu", ndim=1)
        return cls(means=mu[None, :] / np.linalg.norm(mu),
                   kappas=np.array([float(kappa)]), weights=np.array([1.0]))

    def log_density(self, y):
        """Unnormalized log-density (smooth ambient extension)."""
        y = as_float_array(y, "y", ndim=1)
        logits = np.log(self.weights) + self.kappas * (self.means @ y)
        return float(logsumexp(logits))

    def grad_log(self, y):
        """Ambient gradient sum_c r_c(y) kappa_c mu_c with responsibilities
        r_c; accepts (n,) or (N, n) unit inputs.  Consumers project to the
        tangent space as needed."""
        y = check_unit(y, "y")
        single = y.ndim == 1
        Y = y[None, :] if single else y
        logits = np.log(self.weights)[None, :] \
            + self.kappas[None, :] * np.einsum("cn,Nn->Nc", self.means, Y)
        logits -= logsumexp(logits, axis=1, keepdims=True)
        resp = np.exp(logits)
        out = np.einsum("Nc,c,cn->Nn", resp, self.kappas, self.means)
        return out[0] if single else out


class UniformSphere:
    """Uniform density on the sphere (or product of spheres): zero gradient."""

    def grad_log(self, y):
        y = as_float_array(y, "y")
        return np.zeros_like(y)


@dataclass(frozen=True)
class GaussianTarget:
    """Isotropic Gaussian N(mean, variance I) with the trivial constant
    metric, for sanity runs of the metric-aware update."""
    mean: np.ndarray
    variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean",
                           as_float_array(self.mean, "mean", ndim=1))
        if self.variance <= 0:
            raise ValueError("variance must be positive")

    def log_density(self, w):
        w = as_float_array(w, "w", ndim=1)
        diff = w - self.mean
        return -0.5 * float(diff @ diff) / self.variance

    def grad_log(self, w):
        w = as_float_array(w, "w")
        return -(w - self.mean) / self.variance

    def metric_batch(self, W):
        W = as_float_array(W, "W", ndim=2)
        n, m = W.shape
        eye = np.broadcast_to(np.eye(m), (n, m, m)).copy()
        zeros = np.zeros((n, m))
        return eye, eye.copy(), zeros, zeros.copy()
