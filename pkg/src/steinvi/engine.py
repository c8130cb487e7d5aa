"""Particle update rules and the iteration loop.

Five velocity fields are provided:

* ``svgd_field`` -- kernelized ascent field on flat space,
  v(B) = E_A[K(A,B) grad log p(A) + grad_A K(A,B)].
* ``rsvgd_euclidean_field`` -- coordinate-space field with a position-
  dependent metric G:  X(B) = Ginv(B) d'_j E_A[(Ginv (grad log p
  + 1/2 grad log|G|) + div Ginv)^T dK + tr(Ginv dd^T K)], where unprimed
  derivatives act on the first kernel argument and d'_j only on the second.
* ``rsvgd_sphere_field`` -- ambient-space field on S^{n-1} with the vMF
  kernel, projected onto the tangent space at the evaluation point.
* ``rsvgd_product_field`` -- blockwise field on (S^{n-1})^P; reduces exactly
  to the sphere field at P = 1 (the Laplacian-of-log-kernel reading of the
  per-block bracket makes the reduction algebraic, not approximate).
* ``rsvgd_embedded_field`` -- generic isometric-embedding field driven by
  user-supplied chart/normal-space providers; the chart-divergence correction
  term is evaluated by central finite differences, so this path is a
  validation oracle rather than a fast path.

Expectations over the particle distribution are empirical averages over the
current cloud including the particle being updated.  All accumulations over
particles use einsum/np.sum reductions in fixed index order, so fields and
runs are bitwise reproducible for any BLAS thread count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import kernels as K
from .manifolds import (Euclidean, ProductSphere, Sphere, exp_map_product,
                        exp_map_sphere)
from .validation import as_float_array

MAX_SPHERE_STEP = math.pi / 2.0


@dataclass
class ParticleCloud:
    """N particles on a declared manifold; rows of ``points`` are particles."""
    points: np.ndarray
    manifold: object

    def __post_init__(self):
        pts = as_float_array(self.points, "points", ndim=2)
        if pts.shape[0] < 1:
            raise ValueError("need at least one particle")
        if pts.shape[1] != self.manifold.ambient_dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, manifold "
                             f"expects {self.manifold.ambient_dim}")
        self.points = self.manifold.validate_points(pts)

    @property
    def n_particles(self) -> int:
        return self.points.shape[0]

    def replace_points(self, new_points):
        return ParticleCloud(points=new_points, manifold=self.manifold)


# ---------------------------------------------------------------------------
# Velocity fields
# ---------------------------------------------------------------------------

def svgd_field(cloud, target, kernel):
    """Kernelized Stein ascent field on flat space."""
    if not isinstance(cloud.manifold, Euclidean):
        raise ValueError("svgd_field requires a Euclidean manifold")
    pts = cloud.points
    n = pts.shape[0]
    scores = target.grad_log(pts)
    gram = K.pair_values(kernel, pts, pts)
    grad1 = K.pair_grad1(kernel, pts, pts)
    drift = np.einsum("ij,ik->jk", gram, scores)
    repulsion = np.einsum("ijk->jk", grad1)
    return (drift + repulsion) / n


def _gaussian_bracket_grad2(h, A, B, coeff, metric_inv):
    """d'_j [ coeff . grad_a K + tr(metric_inv grad_a grad_a^T K) ] for every
    pair, Gaussian kernel with squared-bandwidth h.  Shapes: A (NA, m),
    B (NB, m), coeff (NA, m), metric_inv (NA, m, m); returns (NA, NB, m)."""
    r = A[:, None, :] - B[None, :, :]
    sq = np.einsum("ijk,ijk->ij", r, r)
    Kv = np.exp(-sq / (2.0 * h))
    cr = np.einsum("ik,ijk->ij", coeff, r)
    u = coeff[:, None, :] / h - (cr / h**2)[..., None] * r
    Sr = np.einsum("ikl,ijl->ijk", metric_inv, r)
    rSr = np.einsum("ijk,ijk->ij", r, Sr)
    trS = np.einsum("ikk->i", metric_inv)
    v = (-trS[:, None] / h**2 + rSr / h**3)[..., None] * r - 2.0 * Sr / h**2
    return Kv[..., None] * (u + v)


def _coordinate_bracket_grad2(kernel, A, B, coeff, metric_inv):
    if isinstance(kernel, K.Gaussian):
        return _gaussian_bracket_grad2(kernel.bandwidth, A, B, coeff, metric_inv)
    if isinstance(kernel, K.SummedGaussian):
        out = None
        for h in kernel.bandwidths:
            term = _gaussian_bracket_grad2(h, A, B, coeff, metric_inv)
            out = term if out is None else out + term
        return out
    # duck-typed coordinate kernel (chart-space oracle machinery)
    return kernel.pair_bracket_grad2(A, B, coeff, metric_inv)


def rsvgd_euclidean_field(cloud, target, kernel):
    """Metric-aware coordinate-space update field.

    ``target`` must provide ``grad_log`` and ``metric_batch``.  The final
    inverse-metric multiplier is evaluated at the particle being updated and
    sits outside the kernel derivative (the derivative acts on the kernel's
    second argument only).
    """
    if not isinstance(cloud.manifold, Euclidean):
        raise ValueError("rsvgd_euclidean_field requires a Euclidean manifold")
    if not hasattr(target, "metric_batch"):
        raise ValueError("target does not provide metric quantities")
    pts = cloud.points
    n = pts.shape[0]
    scores = target.grad_log(pts)
    _, Ginv, grad_logdet, div_rows = target.metric_batch(pts)
    coeff = np.einsum("nij,nj->ni", Ginv, scores + 0.5 * grad_logdet) + div_rows
    terms = _coordinate_bracket_grad2(kernel, pts, pts, coeff, Ginv)
    grad_expect = np.einsum("ijk->jk", terms) / n
    return np.einsum("jkl,jl->jk", Ginv, grad_expect)


def _require_vmf(kernel, n_blocks, block_dim, where):
    if not isinstance(kernel, K.VmfProduct):
        raise ValueError(f"{where} requires a VmfProduct kernel")
    if kernel.n_blocks != n_blocks or kernel.block_dim != block_dim:
        raise ValueError(f"kernel block structure ({kernel.n_blocks} x "
                         f"{kernel.block_dim}) does not match the manifold "
                         f"({n_blocks} x {block_dim})")


def rsvgd_sphere_field(cloud, target, kernel):
    """Update field on S^{n-1} with the vMF kernel, tangent at each particle.

    The per-pair bracket is K * [kap s.y' + kap^2 - kap^2 t^2
    - kap (y.s + n - 1) t] with t = y.y'; its analytic y'-gradient is
    averaged over the cloud and projected by (I - y' y'^T).
    """
    if not isinstance(cloud.manifold, Sphere):
        raise ValueError("rsvgd_sphere_field requires a Sphere manifold")
    n_amb = cloud.manifold.ambient_dim
    _require_vmf(kernel, 1, n_amb, "rsvgd_sphere_field")
    kap = kernel.kappa
    nm1 = n_amb - 1
    Y = cloud.points
    n = Y.shape[0]
    s = target.grad_log(Y)
    t = np.einsum("ik,jk->ij", Y, Y)
    Kv = np.exp(kap * t)
    c1 = np.einsum("ik,jk->ij", s, Y)
    c2 = np.einsum("ik,ik->i", Y, s)
    g = kap * c1 + kap**2 - kap**2 * t**2 - kap * (c2[:, None] + nm1) * t
    coef = kap * g - 2.0 * kap**2 * t - kap * (c2[:, None] + nm1)
    contrib = Kv[:, :, None] * (kap * s[:, None, :] + coef[:, :, None] * Y[:, None, :])
    raw = np.einsum("ijk->jk", contrib) / n
    return raw - Y * np.einsum("jk,jk->j", Y, raw)[:, None]


def rsvgd_product_field(cloud, target, kernel):
    """Blockwise update field on (S^{n-1})^P with the product vMF kernel.

    The per-block bracket uses derivatives of log K_(k) (Laplacian and
    squared-gradient terms), which makes the P = 1 case coincide exactly with
    ``rsvgd_sphere_field``.
    """
    if not isinstance(cloud.manifold, ProductSphere):
        raise ValueError("rsvgd_product_field requires a ProductSphere manifold")
    p, bd = cloud.manifold.n_blocks, cloud.manifold.block_dim
    _require_vmf(kernel, p, bd, "rsvgd_product_field")
    kap = kernel.kappa
    nm1 = bd - 1
    n = cloud.n_particles
    Yb = cloud.points.reshape(n, p, bd)
    sb = target.grad_log(cloud.points).reshape(n, p, bd)
    t = np.einsum("ipk,jpk->ijp", Yb, Yb)
    Kv = np.exp(kap * np.einsum("ijp->ij", t))
    c1 = np.einsum("ipk,jpk->ijp", sb, Yb)
    c2 = np.einsum("ipk,ipk->ip", Yb, sb)
    g = kap * c1 + kap**2 - kap**2 * t**2 - kap * (c2[:, None, :] + nm1) * t
    gsum = np.einsum("ijp->ij", g)
    coef = kap * gsum[:, :, None] - 2.0 * kap**2 * t - kap * (c2[:, None, :] + nm1)
    contrib = Kv[:, :, None, None] * (kap * sb[:, None, :, :]
                                      + coef[:, :, :, None] * Yb[:, None, :, :])
    raw = np.einsum("ijpk->jpk", contrib) / n
    raw = raw - Yb * np.einsum("jpk,jpk->jp", Yb, raw)[:, :, None]
    return raw.reshape(n, p * bd)


# ---------------------------------------------------------------------------
# Generic isometric-embedding field (validation oracle)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingProviders:
    """Chart and normal-space callables describing an isometric embedding.

    chart_forward(y) -> x and chart_inverse(x) -> y map between the manifold
    and chart coordinates; chart_M(x) is the n x m embedding Jacobian,
    chart_G(x) the m x m induced metric, chart_detG(x) its determinant, and
    normal_N(y) an n x (n-m) orthonormal basis of the normal space at y.
    """
    chart_forward: object
    chart_inverse: object
    chart_M: object
    chart_G: object
    chart_detG: object
    normal_N: object


class ProviderInvariantError(ValueError):
    pass


def _check_providers_at(M, Ginv, N, index):
    k = N.shape[1]
    if k:
        if not np.allclose(N.T @ N, np.eye(k), atol=1e-10):
            raise ProviderInvariantError(
                f"normal basis not orthonormal at particle {index}")
        if not np.allclose(N.T @ M, 0.0, atol=1e-8):
            raise ProviderInvariantError(
                f"normal basis not orthogonal to the tangent space at "
                f"particle {index}")
    proj = M @ Ginv @ M.T
    if not np.allclose(proj, np.eye(M.shape[0]) - N @ N.T, atol=1e-8):
        raise ProviderInvariantError(
            f"M Ginv M^T != I - N N^T at particle {index}")


def _ambient_bracket_grad2_pair(kernel, ya, yb, coeff, S):
    """d'_j [ coeff . grad_a K + tr(S grad_a grad_a^T K) ] for one ambient
    pair (ya, yb)."""
    if isinstance(kernel, K.VmfProduct):
        kap = kernel.kappa
        Kv = np.exp(kap * float(ya @ yb))
        term1 = kap * Kv * (coeff + kap * float(coeff @ yb) * ya)
        Syb = S @ yb
        term2 = kap**2 * Kv * (2.0 * Syb + kap * float(yb @ Syb) * ya)
        return term1 + term2
    if isinstance(kernel, K.Gaussian):
        out = _gaussian_bracket_grad2(kernel.bandwidth, ya[None, :],
                                      yb[None, :], coeff[None, :],
                                      S[None, :, :])
        return out[0, 0]
    if isinstance(kernel, K.SummedGaussian):
        return sum(_ambient_bracket_grad2_pair(K.Gaussian(h), ya, yb, coeff, S)
                   for h in kernel.bandwidths)
    raise TypeError(f"unsupported ambient kernel {type(kernel).__name__}")


def rsvgd_embedded_field(cloud, target, kernel, providers, fd_step=1e-5):
    """Generic embedded-space update field from chart/normal providers.

    Evaluates, per source particle, the tangential part of the ambient score
    plus two chart-dependent corrections: the gradient of log sqrt|G| (pushed
    forward through M Ginv) and the chart divergence of Ginv M^T; both are
    central finite differences along chart directions with step ``fd_step``.
    Provider invariants are validated at every particle.
    """
    pts = cloud.points
    n, amb = pts.shape
    scores = target.grad_log(pts)

    coeffs = np.empty((n, amb))
    spans = []
    normals = []
    for i in range(n):
        y = pts[i]
        x = providers.chart_forward(y)
        m = x.shape[0]
        M = providers.chart_M(x)
        G = providers.chart_G(x)
        Ginv = np.linalg.inv(G)
        N = providers.normal_N(y)
        N = N.reshape(amb, -1)
        _check_providers_at(M, Ginv, N, i)

        half_logdet_grad = np.empty(m)
        div_ginv_mt = np.zeros(amb)
        for a in range(m):
            dx = np.zeros(m)
            dx[a] = fd_step
            half_logdet_grad[a] = (
                0.5 * (np.log(providers.chart_detG(x + dx))
                       - np.log(providers.chart_detG(x - dx))) / (2 * fd_step))
            d_plus = np.linalg.inv(providers.chart_G(x + dx)) \
                @ providers.chart_M(x + dx).T
            d_minus = np.linalg.inv(providers.chart_G(x - dx)) \
                @ providers.chart_M(x - dx).T
            div_ginv_mt += (d_plus[a] - d_minus[a]) / (2 * fd_step)

        tangential_score = scores[i] - N @ (N.T @ scores[i])
        coeffs[i] = tangential_score + M @ (Ginv @ half_logdet_grad) \
            + div_ginv_mt
        spans.append(np.eye(amb) - N @ N.T)
        normals.append(N)

    grad_expect = np.zeros((n, amb))
    for j in range(n):
        acc = np.zeros(amb)
        for i in range(n):
            acc += _ambient_bracket_grad2_pair(kernel, pts[i], pts[j],
                                               coeffs[i], spans[i])
        grad_expect[j] = acc / n

    out = np.empty_like(grad_expect)
    for j in range(n):
        Nj = normals[j]
        out[j] = grad_expect[j] - Nj @ (Nj.T @ grad_expect[j])
    return out


# ---------------------------------------------------------------------------
# Optimizers and the step
# ---------------------------------------------------------------------------

@dataclass
class VanillaStep:
    """Fixed-step first-order flow approximation."""
    step_size: float

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step size must be positive")


@dataclass
class AdagradMomentum:
    """AdaGrad with momentum (flat-space baseline optimizer only)."""
    step_size: float
    beta: float = 0.9
    delta: float = 1e-6
    accum: np.ndarray | None = dataclass_field(default=None, repr=False)
    momentum: np.ndarray | None = dataclass_field(default=None, repr=False)

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("momentum beta must be in [0, 1)")
        if self.delta <= 0:
            raise ValueError("fuzz delta must be positive")


@dataclass
class StepResult:
    cloud: ParticleCloud
    step_norms: np.ndarray
    n_clipped: int


def apply_update(cloud, field, optimizer):
    """Advance the cloud one step along ``field``.

    Vanilla steps move along straight lines on flat space and along geodesics
    (blockwise exponential map) on spheres; per-block geodesic steps longer
    than pi/2 are clipped to pi/2 and counted.  AdaGrad-with-momentum is flat-
    space only: accum += v^2, mom = beta mom + v / (sqrt(accum) + delta),
    step = eps * mom.
    """
    field = as_float_array(field, "field")
    if field.shape != cloud.points.shape:
        raise ValueError("field shape does not match the cloud")
    manifold = cloud.manifold

    if isinstance(optimizer, AdagradMomentum):
        if not isinstance(manifold, Euclidean):
            raise ValueError("AdaGrad-with-momentum applies to Euclidean "
                             "particle clouds only")
        if optimizer.accum is None:
            optimizer.accum = np.zeros_like(field)
            optimizer.momentum = np.zeros_like(field)
        optimizer.accum += field**2
        optimizer.momentum = optimizer.beta * optimizer.momentum \
            + field / (np.sqrt(optimizer.accum) + optimizer.delta)
        step = optimizer.step_size * optimizer.momentum
        new_points = cloud.points + step
        return StepResult(cloud.replace_points(new_points),
                          np.linalg.norm(step, axis=1), 0)

    if not isinstance(optimizer, VanillaStep):
        raise TypeError(f"unknown optimizer {type(optimizer).__name__}")

    if isinstance(manifold, Euclidean):
        step = optimizer.step_size * field
        return StepResult(cloud.replace_points(cloud.points + step),
                          np.linalg.norm(step, axis=1), 0)

    if isinstance(manifold, Sphere):
        p, bd = 1, manifold.ambient_dim
    elif isinstance(manifold, ProductSphere):
        p, bd = manifold.n_blocks, manifold.block_dim
    else:
        raise TypeError(f"unknown manifold {type(manifold).__name__}")

    n = cloud.n_particles
    v = (optimizer.step_size * field).reshape(n, p, bd)
    norms = np.linalg.norm(v, axis=2)
    over = norms > MAX_SPHERE_STEP
    n_clipped = int(np.sum(over))
    if n_clipped:
        scale = np.ones_like(norms)
        scale[over] = MAX_SPHERE_STEP / norms[over]
        v = v * scale[:, :, None]
        norms = np.where(over, MAX_SPHERE_STEP, norms)
    new_points = exp_map_product(cloud.points, v.reshape(n, p * bd), bd)
    return StepResult(cloud.replace_points(new_points),
                      np.linalg.norm(norms, axis=1), n_clipped)


# ---------------------------------------------------------------------------
# Iteration loop
# ---------------------------------------------------------------------------

def compute_field(cloud, target, kernel, method):
    """Dispatch the velocity field for a method/manifold combination."""
    if method == "svgd":
        return svgd_field(cloud, target, kernel)
    if method != "rsvgd":
        raise ValueError(f"unknown method {method!r}")
    manifold = cloud.manifold
    if isinstance(manifold, Euclidean):
        return rsvgd_euclidean_field(cloud, target, kernel)
    if isinstance(manifold, Sphere):
        return rsvgd_sphere_field(cloud, target, kernel)
    if isinstance(manifold, ProductSphere):
        return rsvgd_product_field(cloud, target, kernel)
    raise TypeError(f"unknown manifold {type(manifold).__name__}")


def _resolve_kernel(setting, cloud, frozen):
    if frozen is not None:
        return frozen
    if isinstance(setting, (K.Gaussian, K.SummedGaussian, K.VmfProduct)):
        return setting
    if setting == "median":
        return K.Gaussian(K.median_bandwidth(cloud.points))
    if setting == "summed":
        h = K.median_bandwidth(cloud.points)
        return K.SummedGaussian(tuple(K.summed_bandwidths(h)))
    raise ValueError(f"unknown kernel setting {setting!r}")


@dataclass
class RunResult:
    rows: list
    cloud: ParticleCloud
    n_clipped: int


def run(cloud, target, method, kernel, optimizer, n_iter, metrics=None,
        metric_every=1, bandwidth_freeze=False):
    """Synchronous-update iteration loop.

    Each iteration computes the field from a snapshot of the whole cloud and
    then applies it to every particle.  Metric rows are recorded at iteration
    0, every ``metric_every``-th iteration, and at the final iteration; each
    row is a dict with ``iteration``, ``mean_step_norm``, and one entry per
    configured metric.  Data-dependent kernels ("median"/"summed") are
    re-resolved from the current particles every iteration unless
    ``bandwidth_freeze`` is set, in which case the iteration-0 resolution is
    reused throughout.
    """
    if n_iter < 0:
        raise ValueError("iteration count must be >= 0")
    if metric_every < 1:
        raise ValueError("metric cadence must be >= 1")
    metrics = metrics or {}

    frozen = None
    if bandwidth_freeze:
        frozen = _resolve_kernel(kernel, cloud, None)

    def record(rows, iteration, cloud, step_norm):
        row = {"iteration": iteration, "mean_step_norm": step_norm}
        for name, fn in metrics.items():
            row[name] = float(fn(cloud))
        rows.append(row)

    rows = []
    record(rows, 0, cloud, 0.0)
    total_clipped = 0
    for t in range(1, n_iter + 1):
        spec = _resolve_kernel(kernel, cloud, frozen)
        try:
            field = compute_field(cloud, target, spec, method)
            step = apply_update(cloud, field, optimizer)
        except Exception as exc:
            raise RuntimeError(f"iteration {t} failed: {exc}") from exc
        cloud = step.cloud
        total_clipped += step.n_clipped
        if t % metric_every == 0 or t == n_iter:
            record(rows, t, cloud, float(np.mean(step.step_norms)))
    return RunResult(rows=rows, cloud=cloud, n_clipped=total_clipped)
