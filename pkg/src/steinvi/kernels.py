"""Positive-definite kernels with closed-form first and second derivatives.

Conventions, used consistently everywhere including the median trick:

* Gaussian:  K(a, b) = exp(-|a - b|^2 / (2 h)), h > 0 the squared-bandwidth.
* vMF (single block or concatenated product blocks):  K(a, b) = exp(kappa a^T b).

Derivatives are with respect to the ambient coordinates; ``grad1`` etc. refer
to the first argument, ``grad2`` and the second index of ``cross_hessian`` to
the second.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .validation import as_float_array, check_same_dim, check_unit, check_unit_blocks

SUMMED_BANDWIDTH_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class Gaussian:
    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class SummedGaussian:
    bandwidths: tuple

    def __post_init__(self):
        bw = tuple(float(h) for h in self.bandwidths)
        if not bw or any(h <= 0 for h in bw):
            raise ValueError("all bandwidths must be positive")
        object.__setattr__(self, "bandwidths", bw)


@dataclass(frozen=True)
class VmfProduct:
    kappa: float
    n_blocks: int = 1
    block_dim: int = 2

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("concentration kappa must be positive")
        if self.n_blocks < 1 or self.block_dim < 2:
            raise ValueError("need n_blocks >= 1 and block_dim >= 2")

    @property
    def ambient_dim(self) -> int:
        return self.n_blocks * self.block_dim


@dataclass
class KernelJet:
    """All derivative quantities of K at one ordered pair of points."""
    value: float
    grad1: np.ndarray
    grad2: np.ndarray
    hess11: np.ndarray
    ambient_laplacian1: float
    cross_hessian: np.ndarray

    def quad1(self, y):
        """y^T (hess11) y for a supplied unit vector y."""
        y = np.asarray(y, dtype=np.float64)
        return float(y @ self.hess11 @ y)


def _gaussian_jet(h, a, b):
    r = a - b
    sq = float(r @ r)
    d = a.shape[0]
    K = np.exp(-sq / (2.0 * h))
    grad1 = -(r / h) * K
    hess11 = (np.outer(r, r) / h**2 - np.eye(d) / h) * K
    lap = (sq / h**2 - d / h) * K
    cross = (np.eye(d) / h - np.outer(r, r) / h**2) * K
    return KernelJet(value=float(K), grad1=grad1, grad2=-grad1,
                     hess11=hess11, ambient_laplacian1=float(lap),
                     cross_hessian=cross)


def _sum_jets(jets):
    return KernelJet(
        value=sum(j.value for j in jets),
        grad1=sum(j.grad1 for j in jets),
        grad2=sum(j.grad2 for j in jets),
        hess11=sum(j.hess11 for j in jets),
        ambient_laplacian1=sum(j.ambient_laplacian1 for j in jets),
        cross_hessian=sum(j.cross_hessian for j in jets),
    )


def _vmf_jet(kappa, a, b):
    d = a.shape[0]
    K = np.exp(kappa * float(a @ b))
    grad1 = kappa * b * K
    hess11 = kappa**2 * np.outer(b, b) * K
    lap = kappa**2 * float(b @ b) * K
    cross = kappa * K * (np.eye(d) + kappa * np.outer(b, a))
    return KernelJet(value=float(K), grad1=grad1, grad2=kappa * a * K,
                     hess11=hess11, ambient_laplacian1=float(lap),
                     cross_hessian=cross)


def eval_jet(spec, a, b):
    """Evaluate the kernel and its closed-form derivatives at a pair (a, b).

    Gaussian kernels accept any ambient vectors; vMF kernels require the
    blocks of both arguments to be unit norm.
    """
    a = as_float_array(a, "a", ndim=1)
    b = as_float_array(b, "b", ndim=1)
    check_same_dim(a, b, "a", "b")
    if isinstance(spec, Gaussian):
        return _gaussian_jet(spec.bandwidth, a, b)
    if isinstance(spec, SummedGaussian):
        return _sum_jets([_gaussian_jet(h, a, b) for h in spec.bandwidths])
    if isinstance(spec, VmfProduct):
        if a.shape[0] != spec.ambient_dim:
            raise ValueError(f"expected vectors of length {spec.ambient_dim}, "
                             f"got {a.shape[0]}")
        check_unit_blocks(a, spec.block_dim, "a")
        check_unit_blocks(b, spec.block_dim, "b")
        return _vmf_jet(spec.kappa, a, b)
    raise TypeError(f"unknown kernel spec {type(spec).__name__}")


def log_jet_vmf_block(kappa, y, yp):
    """Per-block log-kernel derivatives for the vMF kernel.

    log K = kappa y^T y' is linear in y, so the gradient is kappa y' and the
    Hessian vanishes identically.

    Returns
    -------
    (log_value, grad, hess) : (float, (n,) array, (n, n) zero array)
    """
    y = check_unit(as_float_array(y, "y", ndim=1), "y")
    yp = check_unit(as_float_array(yp, "yp", ndim=1), "yp")
    check_same_dim(y, yp, "y", "yp")
    n = y.shape[0]
    return kappa * float(y @ yp), kappa * yp.copy(), np.zeros((n, n))


def median_bandwidth(points):
    """Median-trick bandwidth h = med^2 / log(N + 1).

    med is the median of the N(N-1)/2 pairwise Euclidean distances.  When all
    particles coincide (med = 0) the bandwidth falls back to 1 with a warning.
    """
    points = as_float_array(points, "points", ndim=2)
    n = points.shape[0]
    if n < 2:
        raise ValueError("median trick needs at least two particles")
    med = float(np.median(pdist(points)))
    if med == 0.0:
        warnings.warn("all particles coincide; falling back to bandwidth 1",
                      RuntimeWarning, stacklevel=2)
        return 1.0
    return med**2 / np.log(n + 1.0)


def summed_bandwidths(h_med):
    """Fixed multiplier ladder around a base bandwidth."""
    if h_med <= 0:
        raise ValueError("base bandwidth must be positive")
    return [h_med * c for c in SUMMED_BANDWIDTH_FACTORS]


# ---------------------------------------------------------------------------
# Vectorized pairwise helpers.  All reductions use np.einsum / np.sum, which
# accumulate in fixed index order regardless of the BLAS thread pool, so field
# computations stay bitwise reproducible.
# ---------------------------------------------------------------------------

def pair_sq_dists(A, B):
    r = A[:, None, :] - B[None, :, :]
    return r, np.einsum("ijk,ijk->ij", r, r)


def pair_values(spec, A, B):
    """Kernel matrix K(A_i, B_j), shape (NA, NB)."""
    if isinstance(spec, Gaussian):
        _, sq = pair_sq_dists(A, B)
        return np.exp(-sq / (2.0 * spec.bandwidth))
    if isinstance(spec, SummedGaussian):
        _, sq = pair_sq_dists(A, B)
        return sum(np.exp(-sq / (2.0 * h)) for h in spec.bandwidths)
    if isinstance(spec, VmfProduct):
        dots = np.einsum("ik,jk->ij", A, B)
        return np.exp(spec.kappa * dots)
    raise TypeError(f"unknown kernel spec {type(spec).__name__}")


def pair_grad1(spec, A, B):
    """Gradient of K w.r.t. the first argument for every pair, (NA, NB, d)."""
    if isinstance(spec, Gaussian):
        r, sq = pair_sq_dists(A, B)
        K = np.exp(-sq / (2.0 * spec.bandwidth))
        return -(r / spec.bandwidth) * K[..., None]
    if isinstance(spec, SummedGaussian):
        r, sq = pair_sq_dists(A, B)
        out = np.zeros_like(r)
        for h in spec.bandwidths:
            K = np.exp(-sq / (2.0 * h))
            out += -(r / h) * K[..., None]
        return out
    if isinstance(spec, VmfProduct):
        dots = np.einsum("ik,jk->ij", A, B)
        K = np.exp(spec.kappa * dots)
        return spec.kappa * K[..., None] * B[None, :, :]
    raise TypeError(f"unknown kernel spec {type(spec).__name__}")
