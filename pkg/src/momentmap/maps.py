"""Gaussian moment mapping through nonlinear functions, to second order.

Two routes compute the output covariance of y = g(x) + Γw:

* the square-root route works directly on Cholesky-style factors
  (``map_first_order_sqrt``, ``map_second_order_sqrt``) and never forms a
  covariance matrix, so its output factor is positive semidefinite by
  construction;
* the full-covariance route (``map_second_order_full``) forms the dense
  second-order covariance including the Gaussian fourth-moment term and
  serves as the reference the factor route is checked against.

Every arithmetic step of a mapping call runs in the requested scalar
precision; inputs are rounded to that precision exactly once on entry.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._backend import kernels
from .errors import AsymmetricInput, FailedInvariant
from .linalg import chol_downdate, resolve_precision, triangularize_sqrt

__all__ = [
    "GaussianSqrt", "SecondOrderModel", "NoiseSqrt", "FullGaussian",
    "map_first_order_sqrt", "map_second_order_full",
    "second_order_mean_correction", "map_second_order_sqrt",
]


@dataclass
class GaussianSqrt:
    """Gaussian belief as (mean, square-root factor of the covariance).

    ``chol`` satisfies cov = chol·cholᵀ.  Mapping outputs are canonical:
    lower triangular with nonnegative diagonal.  Inputs may carry any
    square factor (e.g. rotation·diag); use
    :func:`momentmap.linalg.triangularize_sqrt` to canonicalize one.
    """

    mean: np.ndarray
    chol: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean))
        self.chol = np.asarray(self.chol)
        n = self.mean.shape[0]
        if self.mean.ndim != 1 or self.chol.shape != (n, n):
            raise ValueError(
                f"mean {self.mean.shape} and factor {self.chol.shape} "
                "dimensions do not agree")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.chol))):
            raise ValueError("mean/factor must be finite")

    @property
    def dim(self):
        return self.mean.shape[0]

    def cov(self):
        """Dense covariance chol·cholᵀ (binary64)."""
        s = self.chol.astype(np.float64)
        return s @ s.T


@dataclass
class SecondOrderModel:
    """A nonlinear map bundled with its derivatives at one point.

    ``eval`` is the map itself; ``jacobian`` (m×n) and ``hessian``
    (m×n×n) are its first and second derivative arrays evaluated at the
    expansion point.  The Hessian is symmetrized over its last two
    indices on construction; asymmetry beyond 1e-8 relative is rejected
    rather than silently averaged away.
    """

    in_dim: int
    out_dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        n, m = self.in_dim, self.out_dim
        self.jacobian = np.asarray(self.jacobian, dtype=np.float64)
        self.hessian = np.asarray(self.hessian, dtype=np.float64)
        if self.jacobian.shape != (m, n):
            raise ValueError(
                f"jacobian shape {self.jacobian.shape} != ({m}, {n})")
        if self.hessian.shape != (m, n, n):
            raise ValueError(
                f"hessian shape {self.hessian.shape} != ({m}, {n}, {n})")
        if not (np.all(np.isfinite(self.jacobian))
                and np.all(np.isfinite(self.hessian))):
            raise ValueError("model derivatives must be finite")
        asym = np.max(np.abs(self.hessian - self.hessian.transpose(0, 2, 1)))
        scale = np.max(np.abs(self.hessian))
        if scale > 0 and asym > 1e-8 * scale:
            raise AsymmetricInput(
                f"hessian asymmetric in its last two indices "
                f"(relative deviation {asym / scale:.3e})")
        if asym != 0.0:
            self.hessian = (self.hessian
                            + self.hessian.transpose(0, 2, 1)) * 0.5


@dataclass
class NoiseSqrt:
    """Additive noise Γw with w ∼ N(0, chol_w·chol_wᵀ).

    ``gamma`` is m×n_w.  n_w = 0 expresses "no noise" as an empty block,
    which keeps the triangularization input minimal.
    """

    gamma: np.ndarray
    chol_w: np.ndarray

    def __post_init__(self):
        self.gamma = np.atleast_2d(np.asarray(self.gamma))
        self.chol_w = np.atleast_2d(np.asarray(self.chol_w))
        nw = self.gamma.shape[1]
        if self.chol_w.shape != (nw, nw):
            raise ValueError(
                f"noise factor {self.chol_w.shape} does not match "
                f"gamma width {nw}")
        if not (np.all(np.isfinite(self.gamma))
                and np.all(np.isfinite(self.chol_w))):
            raise ValueError("noise terms must be finite")

    @property
    def width(self):
        return self.gamma.shape[1]


@dataclass
class FullGaussian:
    """Gaussian belief as (mean, dense covariance)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean))
        self.cov = np.asarray(self.cov)
        n = self.mean.shape[0]
        if self.cov.shape != (n, n):
            raise ValueError(
                f"mean {self.mean.shape} and covariance {self.cov.shape} "
                "dimensions do not agree")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.cov))):
            raise ValueError("mean/covariance must be finite")
        asym = np.max(np.abs(self.cov - self.cov.T))
        scale = np.max(np.abs(self.cov))
        if scale > 0 and asym > 1e-8 * scale:
            raise AsymmetricInput(
                f"covariance asymmetric (relative deviation {asym / scale:.3e})")

    @property
    def dim(self):
        return self.mean.shape[0]


def _check_model_dims(x_dim, model):
    if model.in_dim != x_dim:
        raise ValueError(
            f"model input dimension {model.in_dim} != state dimension {x_dim}")


def _noise_arrays(noise, m, dt):
    """Rounded (gamma, chol_w) or None when the noise block is empty."""
    if noise is None or noise.width == 0:
        return None
    if noise.gamma.shape[0] != m:
        raise ValueError(
            f"gamma has {noise.gamma.shape[0]} rows, model output is {m}")
    return (np.ascontiguousarray(noise.gamma, dtype=dt),
            np.ascontiguousarray(noise.chol_w, dtype=dt))


def _eval_mean(model, mean, dt):
    val = np.asarray(model.eval(np.asarray(mean, dtype=np.float64)),
                     dtype=np.float64)
    if val.shape != (model.out_dim,):
        raise ValueError(
            f"model eval returned shape {val.shape}, expected ({model.out_dim},)")
    return val.astype(dt)


def map_first_order_sqrt(x, model, noise=None, p=None):
    """Linearized pushforward of a Gaussian in square-root form.

    Output factor is the triangularization of [G¹S_x | ΓS_w]; the mean is
    g(m_x) unchanged.
    """
    dt = resolve_precision(p)
    _check_model_dims(x.dim, model)
    sx = np.ascontiguousarray(x.chol, dtype=dt)
    g1 = np.ascontiguousarray(model.jacobian, dtype=dt)
    cols = [kernels.gemm(g1, sx)]
    nz = _noise_arrays(noise, model.out_dim, dt)
    if nz is not None:
        cols.append(kernels.gemm(nz[0], nz[1]))
    a = triangularize_sqrt(np.hstack(cols), p=dt)
    return GaussianSqrt(_eval_mean(model, x.mean, dt), a)


def second_order_mean_correction(s_x, g2, p=None):
    """δm^i = ½ G²ⁱ_jk (S_x)^jl (S_x)^kl, computed from the factor.

    Never forms S_x·S_xᵀ; accumulates the quadratic form column by column
    of the factor.
    """
    dt = resolve_precision(p)
    s_x = np.ascontiguousarray(s_x, dtype=dt)
    g2 = np.ascontiguousarray(g2, dtype=dt)
    if s_x.ndim != 2 or s_x.shape[0] != s_x.shape[1]:
        raise ValueError(f"factor must be square, got {s_x.shape}")
    if g2.ndim != 3 or g2.shape[1:] != (s_x.shape[0], s_x.shape[0]):
        raise ValueError(
            f"hessian stack {g2.shape} does not match factor {s_x.shape}")
    return kernels.mean_correction(g2, s_x)


def map_second_order_sqrt(x, model, noise, cpd, p=None):
    """Second-order pushforward entirely in square-root form.

    Pipeline, all in precision ``p``:

    1. δm from the factor (``second_order_mean_correction``);
    2. one column p_r = ½β_r·G²:(u_r ⊗ u_r) with u_r = S_x·v_r per CPD
       factor, which makes the block [p₁ ⋯ p_R] a rectangular square root
       of the fourth-moment covariance term;
    3. triangularize [G¹S_x | p₁ ⋯ p_R | ΓS_w]  (column order fixed);
    4. rank-1 downdate by δm; mean = g(m_x) + δm.

    The output factor is lower triangular with nonnegative diagonal, so
    the implied covariance is symmetric PSD by construction.  An
    infeasible downdate (second-order covariance not positive definite)
    raises DowndateBreaksDefiniteness rather than clamping.
    """
    dt = resolve_precision(p)
    _check_model_dims(x.dim, model)
    if cpd.dim != x.dim:
        raise ValueError(
            f"cpd factors are for dimension {cpd.dim}, state is {x.dim}")
    _require_valid_factors(cpd)
    sx = np.ascontiguousarray(x.chol, dtype=dt)
    g1 = np.ascontiguousarray(model.jacobian, dtype=dt)
    g2 = np.ascontiguousarray(model.hessian, dtype=dt)
    betas = np.ascontiguousarray(cpd.betas, dtype=dt)
    vecs = np.ascontiguousarray(cpd.vectors, dtype=dt)
    m = model.out_dim
    half = dt.type(0.5)

    dm = kernels.mean_correction(g2, sx)
    cols = [kernels.gemm(g1, sx)]
    pblock = np.zeros((m, cpd.rank), dt)
    for r in range(cpd.rank):
        u = kernels.gemv(sx, vecs[r])
        pr = kernels.hess_quad(g2, u)
        coef = half * betas[r]
        pblock[:, r] = coef * pr
    cols.append(pblock)
    nz = _noise_arrays(noise, m, dt)
    if nz is not None:
        cols.append(kernels.gemm(nz[0], nz[1]))
    a = triangularize_sqrt(np.hstack(cols), p=dt)
    s2 = chol_downdate(a, dm)
    mean = _eval_mean(model, x.mean, dt) + dm
    return GaussianSqrt(mean, s2)


def _require_valid_factors(cpd):
    from .cpd import verify_cpd
    res = verify_cpd(cpd)
    budget = 1e-10 if cpd.residual is None else cpd.residual + max(
        1e-12, 0.01 * cpd.residual)
    if res > budget:
        raise FailedInvariant(
            f"cpd factors do not reconstruct their target "
            f"(residual {res:.3e}, budget {budget:.3e})")


def map_second_order_full(x, model, noise=None, p=None):
    """Dense second-order pushforward; the reference for the factor route.

    cov = G¹P_xG¹ᵀ + ΓP_wΓᵀ + δP₂ − δm·δmᵀ with the fourth-moment term
    δP₂ = ¼ G² : E[δx⊗⁴] : G² evaluated via the Gaussian fourth central
    moment of P_x.  All contractions run at precision ``p``.

    ``noise`` is a (gamma, p_w) pair, a NoiseSqrt, or None.
    """
    dt = resolve_precision(p)
    _check_model_dims(x.dim, model)
    px = np.ascontiguousarray(x.cov, dtype=dt)
    g1 = np.ascontiguousarray(model.jacobian, dtype=dt)
    g2 = np.ascontiguousarray(model.hessian, dtype=dt)

    dm = dt.type(0.5) * np.einsum("ijk,jk->i", g2, px)
    e4 = (np.einsum("jk,lm->jklm", px, px)
          + np.einsum("jl,km->jklm", px, px)
          + np.einsum("jm,kl->jklm", px, px))
    t1 = np.einsum("ijk,jklm->ilm", g2, e4)
    dp = dt.type(0.25) * np.einsum("ilm,plm->ip", t1, g2)
    gp = np.einsum("ij,jk->ik", g1, px)
    p1 = np.einsum("ik,lk->il", gp, g1)
    cov = p1 + dp - np.outer(dm, dm)

    nz = _full_noise_arrays(noise, model.out_dim, dt)
    if nz is not None:
        gw = np.einsum("ij,jk->ik", nz[0], nz[1])
        cov = cov + np.einsum("ik,lk->il", gw, nz[0])
    cov = (cov + cov.T) * dt.type(0.5)
    mean = _eval_mean(model, x.mean, dt) + dm
    return FullGaussian(mean, cov)


def _full_noise_arrays(noise, m, dt):
    if noise is None:
        return None
    if isinstance(noise, NoiseSqrt):
        if noise.width == 0:
            return None
        pw = noise.chol_w.astype(np.float64)
        pw = pw @ pw.T
        gamma = noise.gamma
    else:
        gamma, pw = noise
        gamma = np.atleast_2d(np.asarray(gamma))
        pw = np.atleast_2d(np.asarray(pw))
        if gamma.shape[1] == 0:
            return None
    if gamma.shape[0] != m:
        raise ValueError(
            f"gamma has {gamma.shape[0]} rows, model output is {m}")
    if pw.shape != (gamma.shape[1], gamma.shape[1]):
        raise ValueError(
            f"noise covariance {pw.shape} does not match gamma width "
            f"{gamma.shape[1]}")
    return (np.ascontiguousarray(gamma, dtype=dt),
            np.ascontiguousarray(pw, dtype=dt))
