"""Mixed-precision accuracy studies and the randomized equivalence battery.

An experiment runs the square-root and full-covariance second-order maps
at binary64 and binary32 on one of two benchmark problems:

* ``polar``: Cartesian→polar conversion of a wide position belief far
  from the origin, no process noise;
* ``vanderpol``: the Van der Pol flow over one time unit with a mildly
  ill-conditioned input factor and small additive noise.

Protocol: every input (means, factors, model derivative tensors, CPD
weights) is constructed in binary64 and rounded exactly once on entry to
a (method, precision) cell; the whole mapping pipeline then runs at the
cell's precision; full-route covariances are re-factored at the cell's
precision so comparisons are always between Cholesky factors; differences
are taken in binary64 after widening.
"""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ._backend import backend_name
from .cpd import cpd_als, cpd_analytic, factors_to_doc
from .errors import DowndateBreaksDefiniteness, MomentMapError, NotPositiveDefinite
from .linalg import cholesky
from .maps import (FullGaussian, GaussianSqrt, NoiseSqrt, SecondOrderModel,
                   map_second_order_full, map_second_order_sqrt)
from .models import VdpConfig, polar_model_at, vdp_input_sqrt, vdp_model_at

__all__ = [
    "ExperimentSpec", "PrecisionReport", "run_experiment", "oracle_suite",
    "DIFFERENCE_LABELS",
]

EXPERIMENT_NAMES = ("polar", "vanderpol")
PRECISION_TAGS = {"binary64": "64", "binary32": "32"}

# the four difference rows of a full report, in emission order
DIFFERENCE_LABELS = ("S64 vs P64", "S32 vs P32", "S64 vs S32", "S64 vs P32")

_POLAR_DEFAULTS = {
    "mean": [0.0, 1000.0],
    "factor_scale": 250.0,
    "factor_diag": [4.0, 1.0],
}
_VDP_DEFAULTS = {
    "mean": [0.1, 0.5],
    "alpha": float(np.pi / 3),
    "beta": 5e-6,
    "sigma": 0.1,
    "zeta": 1e-3,
    "mu": 0.5,
    "t0": 0.0,
    "tf": 1.0,
    "step": 1e-3,
}


@dataclass
class ExperimentSpec:
    """One accuracy study: which problem, at which precisions and methods.

    ``params`` overrides the per-problem defaults (which reproduce the
    benchmark configurations exactly); anything not overridden keeps its
    default.
    """

    name: str
    precisions: tuple = ("binary64", "binary32")
    methods: tuple = ("sqrt", "full")
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in EXPERIMENT_NAMES:
            raise ValueError(
                f"unknown experiment {self.name!r}; expected one of "
                f"{EXPERIMENT_NAMES}")
        self.precisions = tuple(self.precisions)
        self.methods = tuple(self.methods)
        for p in self.precisions:
            if p not in PRECISION_TAGS:
                raise ValueError(f"unknown precision {p!r}")
        for m in self.methods:
            if m not in ("sqrt", "full"):
                raise ValueError(f"unknown method {m!r}")
        if not self.precisions or not self.methods:
            raise ValueError("need at least one precision and one method")
        defaults = _POLAR_DEFAULTS if self.name == "polar" else _VDP_DEFAULTS
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)}")
        merged = {**defaults, **self.params}
        self.params = merged


@dataclass
class PrecisionReport:
    """Frobenius differences between the per-cell output factors.

    ``differences`` is a list of {"label", "frobenius"} rows in the fixed
    label order; ``provenance`` carries what is needed to reproduce the
    run (factor digest and seed, integrator step, backend, protocol
    note, reference norm, and any per-cell errors).
    """

    experiment: str
    config: dict
    differences: list
    provenance: dict

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "config": self.config,
            "differences": self.differences,
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["experiment", "label", "value"])
        for row in self.differences:
            writer.writerow([self.experiment, row["label"],
                             repr(row["frobenius"])])
        return buf.getvalue()


def _factors_digest(factors):
    payload = json.dumps(factors_to_doc(factors), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def _build_polar(params):
    mean = np.asarray(params["mean"], dtype=np.float64)
    sx = float(params["factor_scale"]) * np.diag(
        np.asarray(params["factor_diag"], dtype=np.float64))
    model = polar_model_at(mean)
    config = {"mean": mean.tolist(), "input_factor": sx.tolist()}
    return mean, sx, model, None, config


def _build_vanderpol(params):
    mean = np.asarray(params["mean"], dtype=np.float64)
    sx = vdp_input_sqrt(params["alpha"], params["beta"], params["sigma"])
    cfg = VdpConfig(mu=params["mu"], t0=params["t0"], tf=params["tf"],
                    step=params["step"])
    model = vdp_model_at(mean, cfg)
    sw = params["zeta"] * params["sigma"] * np.eye(2)
    noise = NoiseSqrt(np.eye(2), sw)
    config = {
        "mean": mean.tolist(), "input_factor": sx.tolist(),
        "alpha": params["alpha"], "beta": params["beta"],
        "sigma": params["sigma"], "zeta": params["zeta"],
        "mu": params["mu"], "t0": params["t0"], "tf": params["tf"],
        "step": params["step"],
    }
    return mean, sx, model, noise, config


def run_experiment(spec, factors=None):
    """Execute every (method, precision) cell of ``spec`` and difference them.

    ``factors`` defaults to the exact dimension-2 CPD.  Cells that raise
    a mapping error are recorded under provenance["errors"] instead of
    aborting the report.
    """
    if factors is None:
        factors = cpd_analytic(2)
    if spec.name == "polar":
        mean, sx, model, noise, config = _build_polar(spec.params)
    else:
        mean, sx, model, noise, config = _build_vanderpol(spec.params)

    x_sqrt = GaussianSqrt(mean, sx)
    px = sx @ sx.T
    x_full = FullGaussian(mean, px)
    if noise is None:
        noise_full = None
    else:
        sw64 = noise.chol_w.astype(np.float64)
        noise_full = (noise.gamma, sw64 @ sw64.T)

    cells = {}
    errors = {}
    for prec in spec.precisions:
        tag = PRECISION_TAGS[prec]
        for method in spec.methods:
            key = ("S" if method == "sqrt" else "P") + tag
            try:
                if method == "sqrt":
                    out = map_second_order_sqrt(
                        x_sqrt, model, noise, factors, p=prec)
                    cells[key] = out.chol.astype(np.float64)
                else:
                    out = map_second_order_full(
                        x_full, model, noise_full, p=prec)
                    s = cholesky(out.cov, p=prec)
                    cells[key] = s.astype(np.float64)
            except MomentMapError as exc:
                errors[key] = f"{type(exc).__name__}: {exc}"

    differences = []
    pairs = {
        "S64 vs P64": ("S64", "P64"),
        "S32 vs P32": ("S32", "P32"),
        "S64 vs S32": ("S64", "S32"),
        "S64 vs P32": ("S64", "P32"),
    }
    for label in DIFFERENCE_LABELS:
        a, b = pairs[label]
        if a in cells and b in cells:
            differences.append({
                "label": label,
                "frobenius": float(np.linalg.norm(cells[a] - cells[b])),
            })

    provenance = {
        "factors_sha256": _factors_digest(factors),
        "factors_generator": factors.generator,
        "factors_seed": factors.seed,
        "integrator_step": spec.params.get("step"),
        "backend": backend_name(),
        "precisions": list(spec.precisions),
        "methods": list(spec.methods),
        "protocol": ("inputs built in binary64, rounded once per cell; "
                     "pipelines run at cell precision; differences "
                     "between Cholesky factors, widened to binary64"),
    }
    if "S64" in cells:
        provenance["s64_frobenius"] = float(np.linalg.norm(cells["S64"]))
    if errors:
        provenance["errors"] = errors
    return PrecisionReport(spec.name, config, differences, provenance)


# ---------------------------------------------------------------------------
# randomized sqrt-vs-full equivalence battery

def _random_spd_factor(rng, n, cond):
    """Symmetric positive-definite factor with condition number ``cond``."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if n == 1:
        svals = np.array([1.0])
    else:
        svals = cond ** (-np.arange(n) / (n - 1))
    return (q * svals) @ q.T


def _quadratic_model(rng, n, m):
    jac = rng.standard_normal((m, n))
    hess = rng.standard_normal((m, n, n))
    hess = (hess + hess.transpose(0, 2, 1)) * 0.3
    mean = rng.standard_normal(n)

    def quad_eval(x, jac=jac, hess=hess, mean=mean):
        d = np.asarray(x, dtype=np.float64) - mean
        return jac @ d + 0.5 * np.einsum("ijk,j,k->i", hess, d, d)

    return mean, SecondOrderModel(n, m, quad_eval, jac, hess)


def oracle_suite(cases=200, seed=0, factors_by_dim=None):
    """Random-instance agreement check between the two second-order routes.

    Draws instances with n, m ≤ 4, SPD input factors with condition
    number up to 1e6, random symmetric Hessian stacks, and random noise,
    then requires (binary64):

    * squared agreement: ‖S·Sᵀ − P_full‖_F / ‖P_full‖_F ≤ 1e-10;
    * factor agreement: ‖S − chol(P_full)‖_F / ‖chol‖_F ≤ 1e-9.

    Instances whose second-order covariance is genuinely indefinite (the
    downdate reports infeasibility) are skipped and redrawn; the count of
    compared instances is exact.  Returns a summary dict with the worst
    relative errors and a list of failures (empty on success).
    """
    rng = np.random.default_rng(seed)
    if factors_by_dim is None:
        factors_by_dim = {}
    for n in (1, 2, 3):
        factors_by_dim.setdefault(n, cpd_analytic(n))
    if 4 not in factors_by_dim:
        factors_by_dim[4] = cpd_als(4, 11, seed=0)

    done = 0
    skipped = 0
    worst_sq = 0.0
    worst_chol = 0.0
    failures = []
    while done < cases:
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        cond = float(10.0 ** rng.uniform(0.0, 6.0))
        sx = _random_spd_factor(rng, n, cond)
        mean, model = _quadratic_model(rng, n, m)
        nw = int(rng.integers(1, m + 1))
        gamma = rng.standard_normal((m, nw))
        sw = np.tril(rng.standard_normal((nw, nw)))
        np.fill_diagonal(sw, np.abs(np.diag(sw)) + 0.5)
        noise = NoiseSqrt(gamma, sw)

        try:
            out_s = map_second_order_sqrt(
                GaussianSqrt(mean, sx), model, noise, factors_by_dim[n],
                p="binary64")
        except DowndateBreaksDefiniteness:
            skipped += 1
            continue
        out_f = map_second_order_full(
            FullGaussian(mean, sx @ sx.T), model, (gamma, sw @ sw.T),
            p="binary64")
        try:
            ref_chol = cholesky(out_f.cov, p="binary64")
        except NotPositiveDefinite:
            skipped += 1
            continue

        p_s = out_s.chol @ out_s.chol.T
        denom = np.linalg.norm(out_f.cov)
        rel_sq = float(np.linalg.norm(p_s - out_f.cov) / denom)
        rel_chol = float(np.linalg.norm(out_s.chol - ref_chol)
                         / np.linalg.norm(out_s.chol))
        worst_sq = max(worst_sq, rel_sq)
        worst_chol = max(worst_chol, rel_chol)
        if rel_sq > 1e-10 or rel_chol > 1e-9:
            failures.append({
                "case": done, "n": n, "m": m, "cond": cond,
                "rel_squared": rel_sq, "rel_factor": rel_chol,
            })
        done += 1

    return {
        "cases": done,
        "skipped": skipped,
        "seed": seed,
        "max_rel_squared": worst_sq,
        "max_rel_factor": worst_chol,
        "failures": failures,
        "passed": not failures,
    }
