"""Kernelized Stein discrepancies: the squared RKHS norm of the optimal
update field, estimated from samples as a double sum over the doubly
Stein-operated kernel

    u_p(A, A') = (grad' log p')[(grad log p)[K]] + Lap' Lap K
                 + (grad' log p')[Lap K] + (grad log p)[Lap' K],

with grad/Lap the Riemannian gradient and Laplace-Beltrami operator (plain
gradient and Laplacian on flat space, their sphere counterparts on S^{n-1}).
Two closed-form instantiations ship -- Gaussian kernels on flat space and the
vMF kernel on the sphere -- and the pair functions are exposed so other
geometries can be checked against the same finite-difference oracle.

The sphere operators acting on an ambient extension f at unit y are
  grad f = (I - y y^T) grad_amb f,
  Lap  f = Lap_amb f - y^T (Hess_amb f) y - (n - 1) y^T grad_amb f,
and both estimators accumulate the N x N pair values with fixed-order einsum
reductions for bitwise reproducibility.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Gaussian, SummedGaussian, VmfProduct
from .validation import as_float_array, check_unit


@dataclass(frozen=True)
class DiscrepancyEstimate:
    value: float
    estimator: str
    n_samples: int


def _assemble(U, estimator):
    n = U.shape[0]
    if estimator == "v_statistic":
        value = float(np.einsum("ij->", U)) / n**2
    elif estimator == "u_statistic":
        if n < 2:
            raise ValueError("the U-statistic needs at least two samples")
        value = float(np.einsum("ij->", U) - np.einsum("ii->", U)) \
            / (n * (n - 1))
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return DiscrepancyEstimate(value=value, estimator=estimator, n_samples=n)


# ---------------------------------------------------------------------------
# Flat space, Gaussian kernels
# ---------------------------------------------------------------------------

def _ksd_pair_matrix_gaussian(h, R, sq, S, d):
    """Pairwise u_p for one Gaussian bandwidth.

    R[i, j] = x_i - x_j, sq = |R|^2, S[i] = grad log p(x_i), d = dimension.
    """
    K = np.exp(-sq / (2.0 * h))
    ss = np.einsum("ik,jk->ij", S, S)
    sr = np.einsum("ik,ijk->ij", S, R)        # s_i . (x_i - x_j)
    spr = np.einsum("jk,ijk->ij", S, R)       # s_j . (x_i - x_j)
    cross = ss / h - sr * spr / h**2
    lap_lap = sq**2 / h**4 - (2 * d + 4) * sq / h**3 + (d**2 + 2 * d) / h**2
    radial = sq / h**3 - (d + 2) / h**2
    return K * (cross + lap_lap + spr * radial - sr * radial)


def ksd_pair_gaussian(a, b, score_a, score_b, bandwidth):
    """Doubly Stein-operated Gaussian kernel value for one ordered pair."""
    a = as_float_array(a, "a", ndim=1)
    b = as_float_array(b, "b", ndim=1)
    h = bandwidth
    d = a.shape[0]
    r = a - b
    u = float(r @ r)
    sa = as_float_array(score_a, "score_a", ndim=1)
    sb = as_float_array(score_b, "score_b", ndim=1)
    Kv = np.exp(-u / (2.0 * h))
    cross = float(sa @ sb) / h - float(sa @ r) * float(sb @ r) / h**2
    lap_lap = u**2 / h**4 - (2 * d + 4) * u / h**3 + (d**2 + 2 * d) / h**2
    radial = u / h**3 - (d + 2) / h**2
    return float(Kv * (cross + lap_lap + float(sb @ r) * radial
                       - float(sa @ r) * radial))


def ksd_euclidean(samples, target, kernel, estimator="v_statistic"):
    """Kernelized Stein discrepancy of flat-space samples against a target.

    Parameters
    ----------
    samples : (N, d) array
    target : object with ``grad_log``
    kernel : Gaussian or SummedGaussian
    estimator : {"v_statistic", "u_statistic"}
        The V-statistic includes diagonal terms and is nonnegative up to
        roundoff; the U-statistic is unbiased.
    """
    X = as_float_array(samples, "samples", ndim=2)
    n, d = X.shape
    S = target.grad_log(X)
    R = X[:, None, :] - X[None, :, :]
    sq = np.einsum("ijk,ijk->ij", R, R)
    if isinstance(kernel, Gaussian):
        U = _ksd_pair_matrix_gaussian(kernel.bandwidth, R, sq, S, d)
    elif isinstance(kernel, SummedGaussian):
        U = np.zeros((n, n))
        for h in kernel.bandwidths:
            U += _ksd_pair_matrix_gaussian(h, R, sq, S, d)
    else:
        raise TypeError("ksd_euclidean supports Gaussian kernels only")
    return _assemble(U, estimator)


# ---------------------------------------------------------------------------
# Sphere, vMF kernel
# ---------------------------------------------------------------------------

def _rksd_pair_matrix_vmf(kappa, n_amb, T, C1, C2, D1, D2, SS):
    """Pairwise u_p for the vMF kernel on S^{n_amb - 1}.

    T[i, j] = y_i . y_j; C1[i, j] = s_i . y_j; C2[i] broadcast rows
    (s_i . y_i in the first role); D1[i, j] = s_j . y_i; D2[j] columns
    (s_j . y_j in the second role); SS[i, j] = s_i . s_j.
    """
    kap = kappa
    nm1 = n_amb - 1
    K = np.exp(kap * T)
    B = kap * (C1 - C2 * T) + kap**2 * (1.0 - T**2) - nm1 * kap * T
    beta = kap * B - kap * C2 - 2.0 * kap**2 * T - nm1 * kap
    gamma = -(kap**2 * C2 + 2.0 * kap**3 * T + nm1 * kap**2 + 2.0 * kap**2)
    kb_g = kap * beta + gamma
    return K * (kap * SS + beta * D1 - D2 * (kap * C1 + beta * T)
                + 2.0 * kap**2 * C2 + kb_g - 2.0 * kap**2 * T * C1
                - kb_g * T**2 - nm1 * (kap * C1 + beta * T))


def rksd_pair_vmf(y, yp, score, score_p, kappa):
    """Doubly Stein-operated vMF kernel value for one ordered sphere pair.

    ``score`` and ``score_p`` are ambient extensions of grad log p at y and
    y'; the sphere Stein operators only use their values at the points.
    """
    y = check_unit(as_float_array(y, "y", ndim=1), "y")
    yp = check_unit(as_float_array(yp, "yp", ndim=1), "yp")
    s = as_float_array(score, "score", ndim=1)
    sp = as_float_array(score_p, "score_p", ndim=1)
    n_amb = y.shape[0]
    T = np.array([[float(y @ yp)]])
    C1 = np.array([[float(s @ yp)]])
    C2 = np.array([[float(s @ y)]])
    D1 = np.array([[float(sp @ y)]])
    D2 = np.array([[float(sp @ yp)]])
    SS = np.array([[float(s @ sp)]])
    return float(_rksd_pair_matrix_vmf(kappa, n_amb, T, C1, C2, D1, D2, SS)[0, 0])


def rksd_sphere(samples, target, kernel, estimator="v_statistic"):
    """Riemannian kernelized Stein discrepancy on the sphere (vMF kernel)."""
    Y = check_unit(as_float_array(samples, "samples", ndim=2), "samples")
    n, n_amb = Y.shape
    if not isinstance(kernel, VmfProduct) or kernel.n_blocks != 1:
        raise TypeError("rksd_sphere requires a single-block vMF kernel")
    if kernel.block_dim != n_amb:
        raise ValueError("kernel block dimension does not match the samples")
    S = target.grad_log(Y)
    T = np.einsum("ik,jk->ij", Y, Y)
    C1 = np.einsum("ik,jk->ij", S, Y)
    diag = np.einsum("ik,ik->i", S, Y)
    C2 = diag[:, None]
    D1 = np.einsum("ik,jk->ij", Y, S)
    D2 = diag[None, :]
    SS = np.einsum("ik,jk->ij", S, S)
    U = _rksd_pair_matrix_vmf(kernel.kappa, n_amb, T, C1, C2, D1, D2, SS)
    return _assemble(U, estimator)
