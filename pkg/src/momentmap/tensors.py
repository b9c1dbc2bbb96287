"""Symmetric fourth-order tensor utilities.

Dense n^4 tensors appear only in oracles and verification; the square-root
mapping itself never materializes one.
"""

from itertools import permutations

import numpy as np

__all__ = [
    "identity_tensor4", "symmetrize", "gaussian_fourth_central_moment",
    "contract_hessian_quadratic",
]


def identity_tensor4(n):
    """The fourth-order identity tensor on R^n.

    Entry (k,l,p,q) is (δ_kl δ_pq + δ_kp δ_lq + δ_kq δ_lp)/3.  Its triple
    contraction with copies of a unit vector reproduces that vector, and
    3·identity_tensor4(n) equals the fourth central moment of a standard
    Gaussian.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eye = np.eye(n)
    t = (np.einsum("kl,pq->klpq", eye, eye)
         + np.einsum("kp,lq->klpq", eye, eye)
         + np.einsum("kq,lp->klpq", eye, eye))
    return t / 3.0


def symmetrize(t):
    """Average a fourth-order tensor over all 24 index permutations."""
    t = np.asarray(t)
    if t.ndim != 4 or len(set(t.shape)) != 1:
        raise ValueError(f"expected an n^4 tensor, got shape {t.shape}")
    out = np.zeros_like(t, dtype=np.result_type(t.dtype, np.float64))
    for perm in permutations(range(4)):
        out += t.transpose(perm)
    return out / 24.0


def gaussian_fourth_central_moment(s_x):
    """Fourth central moment E[(x−m)⊗4] of a Gaussian with factor s_x.

    With P = s_x·s_xᵀ the result is the three-term Isserlis sum
    P⊗P + (two index shuffles).  Equals 3·identity_tensor4(n) when s_x is
    the identity.
    """
    s_x = np.asarray(s_x, dtype=np.float64)
    p = s_x @ s_x.T
    return (np.einsum("kl,pq->klpq", p, p)
            + np.einsum("kp,lq->klpq", p, p)
            + np.einsum("kq,lp->klpq", p, p))


def contract_hessian_quadratic(g2, u):
    """result[i] = Σ_{k,l} g2[i,k,l]·u[k]·u[l]."""
    g2 = np.asarray(g2)
    u = np.asarray(u)
    if g2.ndim != 3 or u.ndim != 1 or g2.shape[1:] != (u.shape[0],) * 2:
        raise ValueError(
            f"shape mismatch: hessian stack {g2.shape}, vector {u.shape}")
    return np.einsum("ikl,k,l->i", g2, u, u)
