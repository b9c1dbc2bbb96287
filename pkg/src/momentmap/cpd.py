"""Symmetric rank-R decompositions of the scaled fourth-order identity tensor.

3·I⁽⁴⁾ (the fourth central moment of a standard Gaussian) admits
decompositions of the form Σ_r β_r²·v_r⊗⁴ with unit vectors v_r and
positive weights.  Dimensions 1-3 have exact geometric solutions (scalar,
equilateral triangle, icosahedron half-vertices); higher dimensions are fit
numerically by alternating least squares with a symmetrization step.

Factors are persisted as JSON with 17-significant-digit decimal strings so
a round trip is bit-exact.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FailedInvariant, MalformedFile, NoConvergence, UnsupportedDimension
from .tensors import identity_tensor4

__all__ = [
    "CpdFactors", "cpd_analytic", "cpd_als", "verify_cpd",
    "factors_to_doc", "save_factors", "load_factors",
]

_UNIT_TOL = 1e-12


@dataclass
class CpdFactors:
    """Rank-R symmetric CPD of 3·I⁽⁴⁾: weights β_r > 0 and unit vectors v_r.

    ``vectors`` has shape (rank, dim); row r is v_r.  The reconstruction
    Σ β_r²·v_r⊗⁴ approximates 3·I⁽⁴⁾ with Frobenius error ``residual``.
    β_r is stored directly and never recomputed from intermediate weights.
    """

    dim: int
    rank: int
    betas: np.ndarray
    vectors: np.ndarray
    residual: float | None = None
    generator: str = "unknown"
    seed: int | None = field(default=None)

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=np.float64)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.betas.shape != (self.rank,):
            raise FailedInvariant(
                f"betas shape {self.betas.shape} != ({self.rank},)")
        if self.vectors.shape != (self.rank, self.dim):
            raise FailedInvariant(
                f"vectors shape {self.vectors.shape} != "
                f"({self.rank}, {self.dim})")
        if not (np.all(np.isfinite(self.betas))
                and np.all(np.isfinite(self.vectors))):
            raise FailedInvariant("factors contain non-finite entries")
        if np.any(self.betas <= 0):
            raise FailedInvariant("every beta must be strictly positive")
        norms = np.linalg.norm(self.vectors, axis=1)
        worst = np.max(np.abs(norms - 1.0)) if self.rank else 0.0
        if worst > _UNIT_TOL:
            raise FailedInvariant(
                f"factor vectors must be unit length (worst deviation {worst:.3e})")


def verify_cpd(f):
    """Frobenius residual ‖Σ β_r²·v_r⊗⁴ − 3·I⁽⁴⁾‖_F, in binary64."""
    v = f.vectors
    lam = f.betas ** 2
    recon = np.einsum("r,ra,rb,rc,rd->abcd", lam, v, v, v, v)
    return float(np.linalg.norm(
        (recon - 3.0 * identity_tensor4(f.dim)).ravel()))


def _with_residual(dim, rank, betas, vectors, generator, seed=None):
    f = CpdFactors(dim, rank, np.asarray(betas), np.asarray(vectors),
                   residual=None, generator=generator, seed=seed)
    f.residual = verify_cpd(f)
    return f


def cpd_analytic(n):
    """Exact factors for n in {1, 2, 3}.

    n=1: the scalar identity, β=√3.
    n=2: the three vertices of an equilateral triangle on the unit circle,
         first vertex at (1, 0), uniform β=√(8/3).
    n=3: six icosahedron vertices, one from each antipodal pair of the
         standard (0, ±1, ±φ) cyclic construction, normalized; uniform
         weight 5/6, i.e. β=√(5/2).

    Raises UnsupportedDimension for n ≥ 4 (use cpd_als there).
    """
    if n == 1:
        return _with_residual(1, 1, [np.sqrt(3.0)], [[1.0]], "analytic")
    if n == 2:
        h = np.sqrt(3.0) / 2.0
        vectors = np.array([[1.0, 0.0], [-0.5, h], [-0.5, -h]])
        betas = np.full(3, np.sqrt(8.0 / 3.0))
        return _with_residual(2, 3, betas, vectors, "analytic")
    if n == 3:
        phi = (1.0 + np.sqrt(5.0)) / 2.0
        raw = np.array([
            [0.0, 1.0, phi],
            [0.0, 1.0, -phi],
            [1.0, phi, 0.0],
            [1.0, -phi, 0.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, 1.0],
        ])
        vectors = raw / np.sqrt(1.0 + phi * phi)
        betas = np.full(6, np.sqrt(5.0 / 2.0))
        return _with_residual(3, 6, betas, vectors, "analytic")
    raise UnsupportedDimension(
        f"no analytic construction for dimension {n}; use cpd_als")


def _als_residual(lam, v, target):
    recon = np.einsum("r,ra,rb,rc,rd->abcd", lam, v, v, v, v)
    return float(np.linalg.norm((recon - target).ravel()))


def _refit_weights(v):
    """Least-squares weights for Σ λ_r v_r⊗⁴ ≈ 3·I⁽⁴⁾ given unit rows v."""
    gram = v @ v.T
    m = gram ** 4
    b = np.full(v.shape[0], 3.0)
    lam, *_ = np.linalg.lstsq(m, b, rcond=None)
    return lam


def cpd_als(n, rank, tol=1e-10, max_iter=500, seed=0, restarts=20):
    """Symmetric CP alternating least squares fit of 3·I⁽⁴⁾.

    Runs ``restarts`` independent ALS fits (four factor matrices, updated
    mode by mode, sign-aligned and averaged into a single factor matrix
    each sweep, columns renormalized with the weights refit by least
    squares).  A restart converges when the relative residual change drops
    below 1e-12 or the residual reaches ``tol``.  The best valid candidate
    (all weights positive, residual ≤ tol) wins; ties by restart order.

    Deterministic for fixed (n, rank, tol, max_iter, seed, restarts).

    Raises NoConvergence with the best residual seen if no restart reaches
    ``tol``; the exception notes when an unsymmetrized fit did reach it.
    """
    if n < 2:
        raise ValueError("cpd_als needs n >= 2")
    if rank < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    target = 3.0 * identity_tensor4(n)
    unfold = target.reshape(n, n ** 3)

    best = None          # (residual, restart_idx, lam, v)
    best_any = np.inf    # best symmetrized residual, valid or not
    best_asym = np.inf   # best raw 4-matrix model residual

    for attempt in range(restarts):
        init = rng.standard_normal((n, rank))
        init /= np.linalg.norm(init, axis=0)
        mats = [init.copy() for _ in range(4)]
        lam = np.ones(rank)
        prev = np.inf
        sym_res = np.inf
        v_sym = init.T.copy()
        for _ in range(max_iter):
            for mode in range(4):
                others = [mats[m] for m in range(4) if m != mode]
                gram = np.ones((rank, rank))
                for om in others:
                    gram *= om.T @ om
                kr = np.ones((1, rank))
                for om in reversed(others):
                    kr = (om[:, None, :] * kr[None, :, :]).reshape(-1, rank)
                rhs = unfold @ kr
                mats[mode] = rhs @ np.linalg.pinv(gram)
                scale = np.linalg.norm(mats[mode], axis=0)
                scale[scale == 0] = 1.0
                mats[mode] /= scale
            # raw (possibly asymmetric) model quality, tracked for diagnostics
            lam_raw = _refit_weights_general(mats, unfold, rank)
            asym_res = _model_residual(mats, lam_raw, target)
            best_asym = min(best_asym, asym_res)
            # symmetrize: sign-align columns to the first matrix, average
            ref = mats[0]
            aligned = [ref]
            for om in mats[1:]:
                signs = np.sign(np.sum(ref * om, axis=0))
                signs[signs == 0] = 1.0
                aligned.append(om * signs)
            avg = np.mean(aligned, axis=0)
            nrm = np.linalg.norm(avg, axis=0)
            nrm[nrm == 0] = 1.0
            avg = avg / nrm
            mats = [avg.copy() for _ in range(4)]
            v_sym = avg.T
            lam = _refit_weights(v_sym)
            sym_res = _als_residual(lam, v_sym, target)
            if sym_res <= tol:
                break
            if np.isfinite(prev) and abs(prev - sym_res) < 1e-12 * max(sym_res, 1e-300):
                break
            prev = sym_res
        best_any = min(best_any, sym_res)
        if sym_res <= tol and np.all(lam > 0):
            if best is None or sym_res < best[0]:
                best = (sym_res, attempt, lam.copy(), v_sym.copy())
    if best is None:
        raise NoConvergence(
            f"no restart reached residual {tol:.1e} "
            f"(best symmetrized residual {best_any:.3e})",
            best_residual=best_any,
            asymmetric_fit_lost=bool(best_asym <= tol < best_any))
    res, attempt, lam, v = best
    norms = np.linalg.norm(v, axis=1)
    v = v / norms[:, None]
    f = CpdFactors(n, rank, np.sqrt(lam), v, residual=None,
                   generator="als", seed=seed)
    f.residual = verify_cpd(f)
    return f


def _refit_weights_general(mats, unfold, rank):
    """Weights for the possibly-asymmetric 4-matrix CP model."""
    gram = np.ones((rank, rank))
    for om in mats:
        gram *= om.T @ om
    kr = np.ones((1, rank))
    for om in reversed(mats[1:]):
        kr = (om[:, None, :] * kr[None, :, :]).reshape(-1, rank)
    # <T, a1_r ∘ a2_r ∘ a3_r ∘ a4_r> for each r
    b = np.einsum("ij,ir,jr->r", unfold, mats[0], kr)
    lam, *_ = np.linalg.lstsq(gram, b, rcond=None)
    return lam


def _model_residual(mats, lam, target):
    recon = np.einsum("r,ar,br,cr,dr->abcd", lam,
                      mats[0], mats[1], mats[2], mats[3])
    return float(np.linalg.norm((recon - target).ravel()))


# ---------------------------------------------------------------------------
# persistence

def _fmt(x):
    return format(float(x), ".17e")


def factors_to_doc(f):
    """JSON-ready dict with 17-significant-digit decimal strings.

    The decimal width guarantees a bit-exact binary64 round trip.
    """
    return {
        "dim": f.dim,
        "rank": f.rank,
        "betas": [_fmt(b) for b in f.betas],
        "vectors": [[_fmt(x) for x in row] for row in f.vectors],
        "residual": _fmt(f.residual) if f.residual is not None else None,
        "generator": f.generator,
        "seed": f.seed,
    }


def save_factors(f, path):
    """Write factors as JSON (see factors_to_doc for the number format)."""
    with open(path, "w") as fh:
        json.dump(factors_to_doc(f), fh, indent=2)
        fh.write("\n")


def load_factors(path):
    """Read factors back and re-run every invariant check.

    Raises MalformedFile for parse/shape problems and FailedInvariant when
    the content violates the factor invariants (non-unit vectors,
    non-positive weights, reconstruction worse than stated).
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFile(f"cannot parse factor file {path}: {exc}") from None
    try:
        dim = int(doc["dim"])
        rank = int(doc["rank"])
        betas = np.array([float(x) for x in doc["betas"]], dtype=np.float64)
        vectors = np.array([[float(x) for x in row] for row in doc["vectors"]],
                           dtype=np.float64)
        stated = doc.get("residual")
        stated = None if stated is None else float(stated)
        generator = str(doc.get("generator", "unknown"))
        seed = doc.get("seed")
        seed = None if seed is None else int(seed)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"factor file {path} missing or bad field: {exc}") from None
    if vectors.ndim != 2:
        raise MalformedFile(f"factor file {path}: vectors must be a matrix")
    f = CpdFactors(dim, rank, betas, vectors, residual=stated,
                   generator=generator, seed=seed)
    actual = verify_cpd(f)
    budget = 1e-10 if stated is None else stated + max(1e-12, 0.01 * stated)
    if actual > budget:
        raise FailedInvariant(
            f"reconstruction residual {actual:.3e} exceeds stated budget "
            f"{budget:.3e}")
    return f
