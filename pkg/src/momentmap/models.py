"""Test transformations with exact derivatives.

Two maps exercise the moment-mapping machinery:

* Cartesian→polar, with hand-derived Jacobian/Hessian (singular at the
  origin);
* the Van der Pol oscillator flow over a time interval, whose Jacobian
  and Hessian are the first- and second-order state transition terms
  obtained by integrating the variational equations alongside the state.

Integration always runs in binary64; precision studies round the finished
derivative tensors, not the integrator.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationDiverged, OriginSingularity
from .maps import SecondOrderModel

__all__ = [
    "PolarModel", "VdpConfig", "VdpFlowResult",
    "polar_model_at", "vdp_flow", "vdp_model_at", "vdp_input_sqrt",
]


class PolarModel:
    """Stateless map (x, y) ↦ (r, θ) with the quadrant-aware angle."""

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.array([np.sqrt(x[0] * x[0] + x[1] * x[1]),
                         np.arctan2(x[1], x[0])])


_polar_eval = PolarModel()


def polar_model_at(m):
    """Polar-coordinate model with analytic derivatives at the point m.

    θ is the two-argument arctangent, so points on the y-axis are regular;
    only the origin itself is singular and raises OriginSingularity.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {m.shape}")
    x, y = m
    nrm = np.sqrt(x * x + y * y)
    if nrm < 1e-9 * max(1.0, np.max(np.abs(m))):
        raise OriginSingularity(
            f"polar derivatives are singular at the origin (|m| = {nrm:.3e})")
    r2 = x * x + y * y
    r = np.sqrt(r2)
    r3 = r2 * r
    r4 = r2 * r2
    jac = np.array([[x / r, y / r],
                    [-y / r2, x / r2]])
    hess = np.array([
        [[y * y / r3, -x * y / r3],
         [-x * y / r3, x * x / r3]],
        [[2 * x * y / r4, (y * y - x * x) / r4],
         [(y * y - x * x) / r4, -2 * x * y / r4]],
    ])
    return SecondOrderModel(2, 2, _polar_eval, jac, hess)


@dataclass
class VdpConfig:
    """Van der Pol integration window: damping mu over [t0, tf] at fixed step."""

    mu: float = 0.5
    t0: float = 0.0
    tf: float = 1.0
    step: float = 1e-3

    def __post_init__(self):
        if not self.tf >= self.t0:
            raise ValueError(f"tf={self.tf} must be >= t0={self.t0}")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")


@dataclass
class VdpFlowResult:
    """Flow output: final state, state transition matrix Φ, tensor Ψ."""

    x_t: np.ndarray
    stm: np.ndarray
    stt: np.ndarray


def _vdp_rates(x, phi, psi, mu):
    f = np.array([x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0]])
    a = np.array([[0.0, 1.0],
                  [-2.0 * mu * x[0] * x[1] - 1.0, mu * (1.0 - x[0] * x[0])]])
    h = np.zeros((2, 2, 2))
    h[1, 0, 0] = -2.0 * mu * x[1]
    h[1, 0, 1] = h[1, 1, 0] = -2.0 * mu * x[0]
    dphi = a @ phi
    dpsi = (np.einsum("ia,ajk->ijk", a, psi)
            + np.einsum("iab,aj,bk->ijk", h, phi, phi))
    return f, dphi, dpsi


def vdp_flow(x0, cfg):
    """Integrate the oscillator plus variational equations over [t0, tf].

    Classical fixed-step fourth-order Runge-Kutta in binary64.  Initial
    conditions Φ = I, Ψ = 0; returns x(tf), Φ(tf), Ψ(tf).  Ψ stays exactly
    symmetric in its trailing indices because the local Hessian is built
    symmetric.  A non-finite state aborts with IntegrationDiverged.
    """
    x = np.array(x0, dtype=np.float64)
    if x.shape != (2,):
        raise ValueError(f"expected a 2-vector state, got shape {x.shape}")
    mu = float(cfg.mu)
    h = float(cfg.step)
    phi = np.eye(2)
    psi = np.zeros((2, 2, 2))
    nsteps = int(round((cfg.tf - cfg.t0) / h))
    # overflow/nan propagation is caught by the finiteness check below,
    # so the intermediate warnings carry no information
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(nsteps):
            k1 = _vdp_rates(x, phi, psi, mu)
            k2 = _vdp_rates(x + h / 2 * k1[0], phi + h / 2 * k1[1],
                            psi + h / 2 * k1[2], mu)
            k3 = _vdp_rates(x + h / 2 * k2[0], phi + h / 2 * k2[1],
                            psi + h / 2 * k2[2], mu)
            k4 = _vdp_rates(x + h * k3[0], phi + h * k3[1],
                            psi + h * k3[2], mu)
            x = x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            phi = phi + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            psi = psi + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            if not np.all(np.isfinite(x)):
                raise IntegrationDiverged(
                    f"state became non-finite (mu={mu}, step={h})")
    return VdpFlowResult(x, phi, psi)


def vdp_model_at(m, cfg):
    """Flow map x0 ↦ x(tf) as a SecondOrderModel expanded at m."""
    res = vdp_flow(m, cfg)

    def flow_eval(x0):
        return vdp_flow(x0, cfg).x_t

    return SecondOrderModel(2, 2, flow_eval, res.stm, res.stt)


def vdp_input_sqrt(alpha, beta, sigma):
    """Rotation-times-diagonal input factor rotation(α)·diag(σ, βσ).

    Not lower triangular — a general square-root factor, accepted as such
    by the mapping routines.  Its Gram matrix has eigenvalues σ², β²σ².
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    c = np.cos(alpha)
    s = np.sin(alpha)
    bs = beta * sigma
    return np.array([[c * sigma, -s * bs],
                     [s * sigma, c * bs]])
