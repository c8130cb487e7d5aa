"""Geometry primitives: manifold descriptors, tangent projections, exponential
maps, and the upper-hemisphere coordinate chart used for cross-validation.

Points live in the ambient space: length-d vectors for Euclidean(d), unit
vectors in R^n for Sphere(n), and P concatenated unit blocks of length n for
ProductSphere(P, n).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_float_array, check_unit, check_unit_blocks

ZERO_TANGENT_NORM = 1e-14


@dataclass(frozen=True)
class Euclidean:
    """Flat space R^d."""
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("Euclidean dimension must be >= 1")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    def validate_points(self, points, atol=1e-9):
        return as_float_array(points, "points")


@dataclass(frozen=True)
class Sphere:
    """Unit hypersphere S^{n-1} embedded in R^n."""
    ambient_dim: int

    def __post_init__(self):
        if self.ambient_dim < 2:
            raise ValueError("Sphere ambient dimension must be >= 2")

    def validate_points(self, points, atol=1e-9):
        return check_unit(points, "points", atol=atol)


@dataclass(frozen=True)
class ProductSphere:
    """Product (S^{n-1})^P of P hyperspheres, stored as concatenated blocks."""
    n_blocks: int
    block_dim: int

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("block count must be >= 1")
        if self.block_dim < 2:
            raise ValueError("block dimension must be >= 2")

    @property
    def ambient_dim(self) -> int:
        return self.n_blocks * self.block_dim

    def validate_points(self, points, atol=1e-9):
        return check_unit_blocks(points, self.block_dim, "points", atol=atol)


def project_tangent_sphere(y, u):
    """Project an ambient vector onto the tangent space of the sphere at y.

    Parameters
    ----------
    y : array, shape (n,) or (N, n)
        Unit base point(s).
    u : array, same shape as y
        Ambient vector(s) to project.

    Returns
    -------
    array, same shape as u
        (I - y y^T) u, orthogonal to y and idempotent under re-projection.
    """
    y = check_unit(y, "y")
    u = as_float_array(u, "u")
    return u - y * np.sum(y * u, axis=-1, keepdims=True)


def exp_map_sphere(y, v):
    """Great-circle exponential map on the sphere.

    Moves y along the geodesic with initial velocity v for unit time:
    y cos(|v|) + (v/|v|) sin(|v|).  v is projected onto the tangent space
    first (update vectors accumulate off-tangent float drift) and the result
    is renormalized.  |v| below 1e-14 returns y unchanged.

    Parameters
    ----------
    y : array, shape (n,) or (N, n)
        Unit base point(s).
    v : array, same shape as y
        Tangent vector(s); geodesic distance moved equals |v| (for |v| < pi).
    """
    y = check_unit(y, "y")
    v = as_float_array(v, "v")
    v = v - y * np.sum(y * v, axis=-1, keepdims=True)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if y.ndim == 1:
        if norm[0] < ZERO_TANGENT_NORM:
            return y
        out = y * np.cos(norm) + (v / norm) * np.sin(norm)
        return out / np.linalg.norm(out)
    moved = norm[:, 0] >= ZERO_TANGENT_NORM
    out = y.copy()
    if np.any(moved):
        nm = norm[moved]
        stepped = y[moved] * np.cos(nm) + (v[moved] / nm) * np.sin(nm)
        out[moved] = stepped / np.linalg.norm(stepped, axis=-1, keepdims=True)
    return out


def exp_map_product(y, v, block_dim):
    """Blockwise exponential map on a product of spheres.

    Applies ``exp_map_sphere`` independently to each contiguous length-
    ``block_dim`` block; the product geometry is the direct product of the
    per-block geometries.
    """
    y = as_float_array(y, "y")
    v = as_float_array(v, "v")
    if y.shape != v.shape:
        raise ValueError(f"y and v shapes disagree: {y.shape} vs {v.shape}")
    if y.shape[-1] % block_dim != 0:
        raise ValueError(f"ambient length {y.shape[-1]} is not a multiple of "
                         f"block dimension {block_dim}")
    lead = y.shape[:-1]
    yb = y.reshape(lead + (-1, block_dim))
    vb = v.reshape(lead + (-1, block_dim))
    out = np.empty_like(yb)
    for k in range(yb.shape[-2]):
        out[..., k, :] = exp_map_sphere(yb[..., k, :], vb[..., k, :])
    return out.reshape(y.shape)


@dataclass(frozen=True)
class ChartQuantities:
    """Differential quantities of the upper-hemisphere chart at x.

    M is the n x (n-1) Jacobian of the embedding, G = M^T M the induced
    metric, Ginv its inverse, and detG = 1 / (1 - x^T x).
    """
    M: np.ndarray
    G: np.ndarray
    Ginv: np.ndarray
    detG: float


def chart_forward(y):
    """Upper-hemisphere chart: drop the last coordinate (requires y_n > 0)."""
    y = check_unit(y, "y")
    if np.any(y[..., -1] <= 0.0):
        raise ValueError("point outside the upper-hemisphere chart (y_n <= 0)")
    return y[..., :-1].copy()


def chart_inverse(x):
    """Inverse chart: x -> (x, sqrt(1 - x^T x))."""
    x = as_float_array(x, "x")
    sq = np.sum(x * x, axis=-1)
    if np.any(sq >= 1.0):
        raise ValueError("chart coordinate outside the open unit ball")
    last = np.sqrt(1.0 - sq)
    return np.concatenate([x, last[..., None]], axis=-1)


def hemisphere_chart(x):
    """Chart Jacobian and metric package at a coordinate x with x^T x < 1.

    Returns
    -------
    ChartQuantities
        M with top block I_{n-1} and last row -x^T / sqrt(1 - x^T x);
        G = I + x x^T / (1 - x^T x); Ginv = I - x x^T; detG = 1/(1 - x^T x).
    """
    x = as_float_array(x, "x", ndim=1)
    sq = float(x @ x)
    if sq >= 1.0:
        raise ValueError("chart coordinate outside the open unit ball")
    m = x.shape[0]
    z = np.sqrt(1.0 - sq)
    M = np.vstack([np.eye(m), -x[None, :] / z])
    G = np.eye(m) + np.outer(x, x) / (1.0 - sq)
    Ginv = np.eye(m) - np.outer(x, x)
    return ChartQuantities(M=M, G=G, Ginv=Ginv, detG=1.0 / (1.0 - sq))


def uniform_sphere(rng, n_points, ambient_dim, n_blocks=1):
    """Draw points uniformly on S^{ambient_dim-1} (or blockwise on a product)
    by normalizing standard normal vectors."""
    raw = rng.standard_normal((n_points, n_blocks, ambient_dim))
    raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
    return raw.reshape(n_points, n_blocks * ambient_dim)
