"""Upper-hemisphere chart machinery: runs the metric-aware coordinate-space
update rule in chart coordinates as an independent cross-check of the ambient
sphere field, and builds the generic embedding providers for the sphere.

Everything here is validation surface, exercised away from the chart boundary
where distortion blows up.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import EmbeddingProviders
from .manifolds import chart_forward, chart_inverse, hemisphere_chart
from .validation import as_float_array


def chart_metric_quantities(x):
    """Chart metric package at one coordinate: G, Ginv, grad log|G|, and the
    row divergences of Ginv (all closed form for the hemisphere chart)."""
    q = hemisphere_chart(x)
    sq = float(x @ x)
    grad_logdet = 2.0 * x / (1.0 - sq)
    div_rows = -(x.shape[0] + 1) * x
    return q.G, q.Ginv, grad_logdet, div_rows


class ChartTarget:
    """Adapter expressing an ambient sphere target in chart coordinates.

    The chart score is M(x)^T grad log p(y) at y = chart_inverse(x) (columns
    of M are tangent, so any smooth ambient extension of log p gives the same
    value), and the metric package is the hemisphere-chart one.
    """

    def __init__(self, ambient_target):
        self.ambient_target = ambient_target

    def grad_log(self, X):
        X = as_float_array(X, "X", ndim=2)
        out = np.empty_like(X)
        for i, x in enumerate(X):
            y = chart_inverse(x)
            out[i] = hemisphere_chart(x).M.T @ self.ambient_target.grad_log(y)
        return out

    def metric_batch(self, X):
        X = as_float_array(X, "X", ndim=2)
        n, m = X.shape
        G = np.empty((n, m, m))
        Ginv = np.empty((n, m, m))
        gld = np.empty((n, m))
        div = np.empty((n, m))
        for i, x in enumerate(X):
            G[i], Ginv[i], gld[i], div[i] = chart_metric_quantities(x)
        return G, Ginv, gld, div


@dataclass(frozen=True)
class ChartVmfKernel:
    """vMF kernel expressed in hemisphere-chart coordinates.

    Provides the chart-coordinate derivative contraction consumed by the
    coordinate-space field: for every pair (x_A, x_B),
    d'_j [ sum_b c_b d_b K + sum_ab S_ab d_a d_b K ], with unprimed chart
    derivatives on the first argument, via the chain rule through the
    embedding map x -> (x, sqrt(1 - x^T x)).
    """
    kappa: float

    def pair_bracket_grad2(self, XA, XB, coeff, metric_inv):
        kap = self.kappa
        na, m = XA.shape
        nb = XB.shape[0]
        out = np.empty((na, nb, m))
        qa = [hemisphere_chart(x) for x in XA]
        qb = [hemisphere_chart(x) for x in XB]
        ya = np.array([chart_inverse(x) for x in XA])
        yb = np.array([chart_inverse(x) for x in XB])
        for i in range(na):
            MA = qa[i].M
            x = XA[i]
            z = float(np.sqrt(1.0 - x @ x))
            # second chart derivatives of the last embedding coordinate
            hn = -np.eye(m) / z - np.outer(x, x) / z**3
            S = metric_inv[i]
            sH = float(np.einsum("ab,ab->", S, hn))
            c = coeff[i]
            for j in range(nb):
                MB = qb[j].M
                Kv = float(np.exp(kap * (ya[i] @ yb[j])))
                u = MA.T @ yb[j]
                w = MB.T @ ya[i]
                cross = MA.T @ MB
                out[i, j] = Kv * (
                    kap * (cross.T @ c)
                    + kap**2 * float(c @ u) * w
                    + kap**3 * float(u @ S @ u) * w
                    + kap**2 * sH * yb[j, -1] * w
                    + 2.0 * kap**2 * (cross.T @ (S @ u))
                    + kap * sH * MB[-1]
                )
        return out


def push_forward(X, chart_vectors):
    """Map chart-space vectors at chart points to ambient tangent vectors."""
    X = as_float_array(X, "X", ndim=2)
    chart_vectors = as_float_array(chart_vectors, "chart_vectors", ndim=2)
    out = np.empty((X.shape[0], X.shape[1] + 1))
    for i, x in enumerate(X):
        out[i] = hemisphere_chart(x).M @ chart_vectors[i]
    return out


def sphere_chart_field(X, ambient_target, kappa):
    """Coordinate-space update field for upper-hemisphere particles, returned
    in chart coordinates (push through M for the ambient version)."""
    from .engine import ParticleCloud, rsvgd_euclidean_field
    from .manifolds import Euclidean

    X = as_float_array(X, "X", ndim=2)
    cloud = ParticleCloud(points=X, manifold=Euclidean(X.shape[1]))
    return rsvgd_euclidean_field(cloud, ChartTarget(ambient_target),
                                 ChartVmfKernel(kappa))


def sphere_embedding_providers():
    """Embedding providers for S^{n-1} built from the hemisphere chart; the
    normal space at y is spanned by y itself."""
    return EmbeddingProviders(
        chart_forward=chart_forward,
        chart_inverse=chart_inverse,
        chart_M=lambda x: hemisphere_chart(x).M,
        chart_G=lambda x: hemisphere_chart(x).G,
        chart_detG=lambda x: hemisphere_chart(x).detG,
        normal_N=lambda y: np.asarray(y, dtype=np.float64)[:, None],
    )


def trivial_embedding_providers(dim):
    """Identity embedding of R^m into itself: M = I, G = I, empty normal
    basis.  Used to check that the generic field reduces to the flat one."""
    eye = np.eye(dim)
    return EmbeddingProviders(
        chart_forward=lambda y: np.asarray(y, dtype=np.float64).copy(),
        chart_inverse=lambda x: np.asarray(x, dtype=np.float64).copy(),
        chart_M=lambda x: eye.copy(),
        chart_G=lambda x: eye.copy(),
        chart_detG=lambda x: 1.0,
        normal_N=lambda y: np.zeros((dim, 0)),
    )
