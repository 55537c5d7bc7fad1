"""Fisher information and Cramer-Rao lower bounds for the 3L-parameter vector.

Parameters are ordered (theta_1..theta_L, r_1..r_L, v_1..v_L); amplitudes are
treated as known constants. The Fisher matrix is the scaled real Gram matrix
of the analytic mean derivatives under white circular Gaussian noise:

    F_ij = (2 / sigma^2) * Re{ (d y / d s_j)^H (d y / d s_i) }.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import FrameSelection
from .config import RadarConfig, Scene
from .errors import SingularFisher
from .model import frame_indices, row_steering, steer_rx

TWO_PI = 2.0 * np.pi


def mean_vector(scene: Scene, cfg: RadarConfig, frame: FrameSelection) -> np.ndarray:
    """Noiseless vectorized snapshot: sum_l beta_l * kron(b_rx, a_r*a_v*a_t)."""
    out = np.zeros(cfg.n_rows * cfg.Qr, dtype=complex)
    for t in scene.targets:
        a_r, a_v, a_t = row_steering(cfg, frame, t.r, t.v, t.theta)
        out += t.beta * np.kron(steer_rx(cfg, t.theta), a_r * a_v * a_t)
    return out


def mean_derivatives(
    scene: Scene, cfg: RadarConfig, frame: FrameSelection, l: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic derivatives of the mean vector w.r.t. (theta_l, r_l, v_l).

    The DOA derivative has two product-rule terms (receive and transmit
    steering both depend on theta); the range derivative scales row n*K+k by
    -j*2pi*m_{n,k}*delta_f*2/c and the velocity derivative by
    -j*2pi*fc*2*n*T0/c.
    """
    t = scene.targets[l]
    m_idx, n_idx, p_idx = frame_indices(frame, cfg)
    a_r, a_v, a_t = row_steering(cfg, frame, t.r, t.v, t.theta)
    b = steer_rx(cfg, t.theta)
    row = a_r * a_v * a_t

    cos_t = np.cos(t.theta)
    db = (1j * TWO_PI * np.arange(cfg.Qr) * cfg.fc * cfg.dR * cos_t / cfg.c) * b
    da_t = (1j * TWO_PI * p_idx * cfg.fc * cfg.dT * cos_t / cfg.c) * a_t
    d_theta = t.beta * (np.kron(db, row) + np.kron(b, a_r * a_v * da_t))

    da_r = (-1j * TWO_PI * m_idx * cfg.delta_f * 2.0 / cfg.c) * a_r
    d_r = t.beta * np.kron(b, da_r * a_v * a_t)

    da_v = (-1j * TWO_PI * cfg.fc * 2.0 * n_idx * cfg.T0 / cfg.c) * a_v
    d_v = t.beta * np.kron(b, a_r * da_v * a_t)
    return d_theta, d_r, d_v


@dataclass
class FisherMatrix:
    """Real symmetric 3L x 3L information matrix with its noise variance."""

    F: np.ndarray
    sigma2: float
    L: int

    @property
    def order(self) -> list[str]:
        return (
            [f"theta_{l}" for l in range(self.L)]
            + [f"r_{l}" for l in range(self.L)]
            + [f"v_{l}" for l in range(self.L)]
        )


def fisher(scene: Scene, cfg: RadarConfig, frame: FrameSelection, sigma2: float) -> FisherMatrix:
    """Fisher matrix of (theta, r, v) with amplitudes known."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    L = scene.L
    derivs = np.empty((3 * L, cfg.n_rows * cfg.Qr), dtype=complex)
    for l in range(L):
        d_theta, d_r, d_v = mean_derivatives(scene, cfg, frame, l)
        derivs[l] = d_theta
        derivs[L + l] = d_r
        derivs[2 * L + l] = d_v
    gram = derivs @ derivs.conj().T
    F = (2.0 / sigma2) * gram.real
    F = 0.5 * (F + F.T)
    return FisherMatrix(F=F, sigma2=sigma2, L=L)


def crlb(fm: FisherMatrix) -> np.ndarray:
    """Per-parameter variance bounds: the diagonal of the inverse Fisher matrix."""
    cond = np.linalg.cond(fm.F)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularFisher(f"Fisher matrix condition number {cond:.3e} exceeds 1e12")
    return np.diag(np.linalg.inv(fm.F)).copy()
