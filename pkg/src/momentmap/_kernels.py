"""Reference kernels, numpy edition.

These are the arithmetic workhorses behind the square-root mapping:
Cholesky factorization, Givens-rotation triangularization, the rank-1
Cholesky downdate, and the small dense contractions feeding them.

Operation order is part of the contract.  Each kernel performs a defined
sequence of scalar multiply/add/divide/sqrt operations, every one rounded
in the working dtype, and the compiled core in ``_core.pyx`` executes the
exact same sequence (it is built with -ffp-contract=off so the compiler
cannot fuse operations).  The two backends therefore produce bit-identical
results in float32 and float64, which keeps precision studies independent
of which backend happens to be installed.

Reductions are ordered ascending in the summation index.  Vectorized
statements below only ever batch *independent* elementwise operations
(e.g. a rank-1 update), never reorder a reduction.

No input validation happens here; ``linalg`` and friends own that.
"""

import numpy as np

__all__ = [
    "cholesky_lower", "givens_qr_r", "chol_downdate",
    "gemm", "gemv", "mean_correction", "hess_quad",
]


def cholesky_lower(a):
    """Right-looking Cholesky of a symmetric matrix (lower triangle used).

    Returns the lower factor or raises ValueError on a non-positive pivot.
    """
    n = a.shape[0]
    l = np.tril(a)
    for k in range(n):
        piv = l[k, k]
        if not piv > 0:
            raise ValueError(f"pivot {k} is not positive")
        piv = np.sqrt(piv)
        l[k, k] = piv
        if k + 1 < n:
            l[k + 1:, k] = l[k + 1:, k] / piv
            col = l[k + 1:, k]
            l[k + 1:, k + 1:] -= np.tril(col[:, None] * col[None, :])
    return np.tril(l)


def givens_qr_r(b):
    """R factor of the thin QR of ``b`` (rows >= cols) by Givens rotations.

    Columns are cleared left to right; within a column, entries are
    annihilated bottom-up against the diagonal row.  Rows with a negative
    diagonal are flipped at the end so the diagonal is nonnegative.
    """
    a = np.array(b, copy=True)
    dt = a.dtype
    m, n = a.shape
    zero = dt.type(0)
    for k in range(n):
        for i in range(m - 1, k, -1):
            bb = a[i, k]
            if bb == zero:
                continue
            aa = a[k, k]
            h = np.hypot(aa, bb)
            c = aa / h
            s = bb / h
            rk = a[k, k:].copy()
            ri = a[i, k:].copy()
            a[k, k:] = c * rk + s * ri
            a[i, k:] = c * ri - s * rk
            a[k, k] = h
            a[i, k] = zero
    r = np.triu(a[:n, :n])
    for i in range(n):
        if r[i, i] < zero:
            r[i, :] = -r[i, :]
    return r


def chol_downdate(s, v):
    """Lower factor of s·sᵀ − v·vᵀ without forming either product.

    Forward-substitutes w = s⁻¹v, builds a sweep of rotations from the
    trailing coordinate inward, then applies the sweep row by row.  Raises
    ValueError when 1 − ‖w‖² falls at or below the dtype epsilon, i.e. the
    downdated matrix would not be positive definite.
    """
    n = s.shape[0]
    dt = s.dtype
    out = np.array(s, copy=True)
    w = np.zeros(n, dt)
    for i in range(n):
        acc = v[i]
        for j in range(i):
            acc = acc - out[i, j] * w[j]
        w[i] = acc / out[i, i]
    q = dt.type(1)
    for i in range(n):
        q = q - w[i] * w[i]
    if not q > np.finfo(dt).eps:
        raise ValueError("downdate would break positive definiteness")
    alpha = np.sqrt(q)
    c = np.zeros(n, dt)
    s_ = np.zeros(n, dt)
    for i in range(n - 1, -1, -1):
        scale = alpha + abs(w[i])
        ca = alpha / scale
        sa = w[i] / scale
        nrm = np.hypot(ca, sa)
        c[i] = ca / nrm
        s_[i] = sa / nrm
        alpha = scale * nrm
    for j in range(n):
        xx = dt.type(0)
        for i in range(j, -1, -1):
            t = c[i] * xx + s_[i] * out[j, i]
            out[j, i] = c[i] * out[j, i] - s_[i] * xx
            xx = t
    return out


def gemm(a, b):
    """Matrix product with k-ascending accumulation (one rank-1 update per k)."""
    m, kk = a.shape
    n = b.shape[1]
    c = np.zeros((m, n), a.dtype)
    for k in range(kk):
        c += a[:, k, None] * b[None, k, :]
    return c


def gemv(a, x):
    """Matrix-vector product, column-ascending accumulation."""
    y = np.zeros(a.shape[0], a.dtype)
    for j in range(a.shape[1]):
        y += a[:, j] * x[j]
    return y


def mean_correction(psi, sx):
    """dm_i = ½ Σ_l  y_lᵀ · psi_i · y_l over the columns y_l of sx.

    Equivalent to ½ psiⁱ_jk (sx sxᵀ)^jk but never forms the product
    sx·sxᵀ; the accumulation runs column by column.
    """
    dt = sx.dtype
    m = psi.shape[0]
    n = psi.shape[1]
    dm = np.zeros(m, dt)
    for l in range(sx.shape[1]):
        y = sx[:, l]
        z = np.zeros((m, n), dt)
        for j in range(n):
            z += psi[:, j, :] * y[j]
        q = np.zeros(m, dt)
        for k in range(n):
            q += z[:, k] * y[k]
        dm += q
    return dt.type(0.5) * dm


def hess_quad(psi, u):
    """p_i = Σ_{k,l} psi[i,k,l]·u_k·u_l (last index contracted first)."""
    dt = u.dtype
    m = psi.shape[0]
    n = u.shape[0]
    t = np.zeros((m, n), dt)
    for l in range(n):
        t += psi[:, :, l] * u[l]
    p = np.zeros(m, dt)
    for k in range(n):
        p += t[:, k] * u[k]
    return p
