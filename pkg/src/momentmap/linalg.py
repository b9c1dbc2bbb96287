"""Precision-generic dense and triangular linear algebra.

Matrices are plain numpy arrays.  Lower-triangular factors are ordinary
square arrays whose strict upper triangle is exactly zero and whose
diagonal is nonnegative - the carrier for Cholesky factors throughout the
package.

The precision argument ``p`` accepts ``"binary32"``, ``"binary64"``, a
numpy float dtype, or None (meaning: keep the input's dtype, defaulting to
binary64).  An algorithm run at precision p stores every intermediate in p;
the kernels round after each primitive operation.
"""

import numpy as np

from ._backend import kernels
from .errors import AsymmetricInput, DowndateBreaksDefiniteness, NotPositiveDefinite

__all__ = [
    "resolve_precision", "cholesky", "chol_downdate", "qr_r",
    "triangularize_sqrt",
]

_PRECISIONS = {
    "binary32": np.dtype(np.float32),
    "binary64": np.dtype(np.float64),
}


def resolve_precision(p, default=np.float64):
    """Normalize a precision tag to a numpy dtype (float32 or float64)."""
    if p is None:
        dt = np.dtype(default)
    elif isinstance(p, str):
        try:
            dt = _PRECISIONS[p]
        except KeyError:
            raise ValueError(f"unknown precision {p!r}; "
                             "expected 'binary32' or 'binary64'") from None
    else:
        dt = np.dtype(p)
    if dt not in _PRECISIONS.values():
        raise ValueError(f"unsupported precision {dt}; "
                         "expected float32 or float64")
    return dt


def _as_working(a, p, name):
    dt = resolve_precision(p, default=np.asarray(a).dtype
                           if np.asarray(a).dtype in _PRECISIONS.values()
                           else np.float64)
    out = np.ascontiguousarray(a, dtype=dt)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def _require_lower_triangular(s, name="S"):
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"{name} must be square, got shape {s.shape}")
    if np.any(np.triu(s, 1) != 0):
        raise ValueError(f"{name} must be lower triangular "
                         "(strict upper triangle exactly zero)")


def cholesky(a, p=None):
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    The input is checked for symmetry (tolerance 10·eps_p·max|A|), then
    symmetrized as (A+Aᵀ)/2 before factoring so that roundoff-level
    asymmetry from accumulated products cannot abort a run.

    Raises AsymmetricInput or NotPositiveDefinite.
    """
    a = _as_working(a, p, "A")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got shape {a.shape}")
    dt = a.dtype
    amax = np.max(np.abs(a)) if a.size else dt.type(0)
    asym = np.max(np.abs(a - a.T)) if a.size else dt.type(0)
    if asym > 10 * np.finfo(dt).eps * amax:
        raise AsymmetricInput(
            f"max|A - A^T| = {asym:.3e} exceeds tolerance "
            f"{10 * np.finfo(dt).eps * amax:.3e}")
    sym = np.ascontiguousarray((a + a.T) * dt.type(0.5))
    try:
        return kernels.cholesky_lower(sym)
    except ValueError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def chol_downdate(s, v):
    """Lower factor B with B·Bᵀ = S·Sᵀ − v·vᵀ, computed in place of forming
    either product.

    Works at the dtype of S.  Raises DowndateBreaksDefiniteness when the
    downdated matrix would not be positive definite (‖S⁻¹v‖ ≥ 1 up to the
    dtype epsilon).
    """
    s = _as_working(s, None, "S")
    _require_lower_triangular(s)
    diag = np.diag(s)
    if np.any(diag < 0):
        raise ValueError("S must have a nonnegative diagonal")
    v = np.ascontiguousarray(v, dtype=s.dtype)
    if v.shape != (s.shape[0],):
        raise ValueError(f"v has shape {v.shape}, expected ({s.shape[0]},)")
    if not np.all(np.isfinite(v)):
        raise ValueError("v contains non-finite entries")
    if np.any(diag == 0):
        # singular factor: the rotation sweep with v = 0 is a bitwise
        # no-op, and any nonzero downdate of a singular Gram matrix
        # cannot stay positive (semi)definite
        if np.all(v == 0):
            return s.copy()
        raise DowndateBreaksDefiniteness(
            "factor is singular and the downdate vector is nonzero")
    try:
        return kernels.chol_downdate(s, v)
    except ValueError as exc:
        raise DowndateBreaksDefiniteness(str(exc)) from None


def qr_r(b, p=None):
    """Triangular factor R of the thin QR of ``b`` (rows ≥ cols).

    R has a nonnegative diagonal (rows are sign-flipped after the
    factorization), so Rᵀ·R = bᵀ·b and R is unique for full-rank input.
    Rank-deficient input is allowed and yields zero diagonal entries.
    """
    b = _as_working(b, p, "B")
    if b.ndim != 2:
        raise ValueError("B must be a matrix")
    if b.shape[0] < b.shape[1]:
        raise ValueError(f"B needs rows >= cols, got shape {b.shape}")
    return kernels.givens_qr_r(b)


def triangularize_sqrt(w, p=None):
    """Canonicalize a rectangular square-root factor to lower-triangular form.

    Given W (n×k) with target W·Wᵀ, returns lower-triangular S (n×n) with
    S·Sᵀ = W·Wᵀ and nonnegative diagonal: the transpose of qr_r(Wᵀ).  When
    k < n the factor is zero-padded first (the result is then rank
    deficient, which is permitted).
    """
    w = _as_working(w, p, "W")
    if w.ndim != 2:
        raise ValueError("W must be a matrix")
    n, k = w.shape
    if k < n:
        w = np.hstack([w, np.zeros((n, n - k), w.dtype)])
    wt = np.ascontiguousarray(w.T)
    return np.ascontiguousarray(kernels.givens_qr_r(wt).T)
