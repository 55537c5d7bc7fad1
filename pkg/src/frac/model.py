"""Slow-time snapshot synthesis and the decoupling selection machinery.

The observed snapshot ``Y`` (NK x Qr) mixes range, velocity and DOA in every
column because the active antenna/frequency pair changes per pulse. A binary
selection matrix ``S`` maps ``Y`` onto a reference matrix ``X`` (NMP x Qr)
that enumerates *all* antenna/frequency combinations, in which the three
parameters factor into separate Vandermonde axes. Row ordering of ``X`` is
frequency index outermost, then pulse, then antenna:

    row = m*N*P + n*P + p      (all indices zero-based)

so that reshapes to the wide matrix (MN x P*Qr) and to the decoupled tensor
(M x N x P*Qr) are plain row-major views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import FrameSelection, validate_frame
from .config import RadarConfig, Scene, validate_config, validate_scene
from .errors import DimensionMismatch, InvalidSelection

TWO_PI = 2.0 * np.pi


# --- steering vectors on the decoupled (reference) axes ---


def steer_range(cfg: RadarConfig, r: float) -> np.ndarray:
    """Length-M range steering vector: entry m is exp(-j*2pi*m*delta_f*2r/c)."""
    m = np.arange(cfg.M)
    return np.exp(-1j * TWO_PI * m * cfg.delta_f * 2.0 * r / cfg.c)


def steer_velocity(cfg: RadarConfig, v: float) -> np.ndarray:
    """Length-N velocity steering vector: entry n is exp(-j*2pi*fc*2*n*v*T0/c)."""
    n = np.arange(cfg.N)
    return np.exp(-1j * TWO_PI * cfg.fc * 2.0 * n * v * cfg.T0 / cfg.c)


def steer_tx(cfg: RadarConfig, theta: float) -> np.ndarray:
    """Length-P transmit steering vector: entry p is exp(+j*2pi*p*fc*dT*sin(theta)/c)."""
    p = np.arange(cfg.P)
    return np.exp(1j * TWO_PI * p * cfg.fc * cfg.dT * np.sin(theta) / cfg.c)


def steer_rx(cfg: RadarConfig, theta: float) -> np.ndarray:
    """Length-Qr receive steering vector: entry q is exp(+j*2pi*q*fc*dR*sin(theta)/c)."""
    q = np.arange(cfg.Qr)
    return np.exp(1j * TWO_PI * q * cfg.fc * cfg.dR * np.sin(theta) / cfg.c)


def steer_virtual(cfg: RadarConfig, theta: float) -> np.ndarray:
    """Virtual-array steering vector kron(tx, rx) of length P*Qr.

    With dT = Qr*dR this is a uniform Vandermonde vector with per-element
    phase ratio exp(j*2pi*fc*dR*sin(theta)/c).
    """
    return np.kron(steer_tx(cfg, theta), steer_rx(cfg, theta))


# --- per-row (measurement-domain) steering, fixed by the transmitted frame ---


def frame_indices(frame: FrameSelection, cfg: RadarConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays (m_i, n_i, p_i) of length NK giving the frequency, pulse and antenna
    index of each snapshot row i = n*K + k."""
    m = np.empty(cfg.n_rows, dtype=np.int64)
    n = np.empty(cfg.n_rows, dtype=np.int64)
    p = np.empty(cfg.n_rows, dtype=np.int64)
    for ni, sel in enumerate(frame.pulses):
        for k in range(cfg.K):
            i = ni * cfg.K + k
            m[i] = sel.frequency_of(k)
            n[i] = ni
            p[i] = sel.antenna_of(k)
    return m, n, p


def row_steering(
    cfg: RadarConfig, frame: FrameSelection, r: float, v: float, theta: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Measurement-domain steering vectors (a_r, a_v, a_t), each of length NK.

    Row i = n*K + k carries exp(-j*2pi*m_{n,k}*delta_f*2r/c),
    exp(-j*2pi*fc*2*n*v*T0/c) and exp(+j*2pi*p_{n,k}*fc*dT*sin(theta)/c).
    """
    m, n, p = frame_indices(frame, cfg)
    a_r = np.exp(-1j * TWO_PI * m * cfg.delta_f * 2.0 * r / cfg.c)
    a_v = np.exp(-1j * TWO_PI * cfg.fc * 2.0 * n * v * cfg.T0 / cfg.c)
    a_t = np.exp(1j * TWO_PI * p * cfg.fc * cfg.dT * np.sin(theta) / cfg.c)
    return a_r, a_v, a_t


def measurement_atom(
    cfg: RadarConfig, frame: FrameSelection, r: float, v: float, theta: float
) -> np.ndarray:
    """Vectorized noiseless response of a unit target: kron(b_rx, a_r*a_v*a_t), length NK*Qr.

    Index q*NK + i matches column-major stacking of the NK x Qr snapshot.
    """
    a_r, a_v, a_t = row_steering(cfg, frame, r, v, theta)
    return np.kron(steer_rx(cfg, theta), a_r * a_v * a_t)


# --- selection matrix ---


@dataclass(frozen=True)
class SelectionMatrix:
    """Binary NK x NMP row selector stored as the single nonzero column per row."""

    cols: np.ndarray
    n_rows: int
    n_cols: int

    def apply(self, X: np.ndarray) -> np.ndarray:
        """S @ X: pick the selected rows of the reference matrix."""
        if X.shape[0] != self.n_cols:
            raise DimensionMismatch(f"expected {self.n_cols} rows, got {X.shape[0]}")
        return X[self.cols]

    def adjoint_apply(self, Y: np.ndarray) -> np.ndarray:
        """S^T @ Y: scatter snapshot rows back into the reference layout."""
        out = np.zeros((self.n_cols,) + Y.shape[1:], dtype=Y.dtype)
        out[self.cols] = Y
        return out

    def to_dense(self) -> np.ndarray:
        S = np.zeros((self.n_rows, self.n_cols))
        S[np.arange(self.n_rows), self.cols] = 1.0
        return S


def build_selection(frame: FrameSelection, cfg: RadarConfig) -> SelectionMatrix:
    """Selection matrix for a frame: row n*K+k selects column m_{n,k}*N*P + n*P + p_{n,k}."""
    validate_frame(frame, cfg)
    m, n, p = frame_indices(frame, cfg)
    cols = m * (cfg.N * cfg.P) + n * cfg.P + p
    if np.unique(cols).size != cols.size:
        raise InvalidSelection("selection columns must be distinct across snapshot rows")
    return SelectionMatrix(cols=cols, n_rows=cfg.n_rows, n_cols=cfg.n_reference_rows)


# --- reference matrix and reshapes ---


def reference_matrix(scene: Scene, cfg: RadarConfig) -> np.ndarray:
    """Noiseless decoupled reference matrix X (NMP x Qr).

    X = sum_l beta_l * kron(a_range, a_velocity, a_tx) * b_rx^T, one rank-1
    term per target.
    """
    X = np.zeros((cfg.n_reference_rows, cfg.Qr), dtype=complex)
    for t in scene.targets:
        left = np.kron(np.kron(steer_range(cfg, t.r), steer_velocity(cfg, t.v)), steer_tx(cfg, t.theta))
        X += t.beta * np.outer(left, steer_rx(cfg, t.theta))
    return X


def reshape_wide(X: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Reference matrix (NMP x Qr) -> wide matrix X' (MN x P*Qr).

    X'[(m*N + n), (p*Qr + q)] = X[m*N*P + n*P + p, q]; with the row ordering
    used here this is a plain row-major reshape.
    """
    if X.shape != (cfg.n_reference_rows, cfg.Qr):
        raise DimensionMismatch(f"expected {(cfg.n_reference_rows, cfg.Qr)}, got {X.shape}")
    return X.reshape(cfg.M * cfg.N, cfg.P * cfg.Qr)


def unshape_wide(Xp: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Inverse of reshape_wide."""
    if Xp.shape != (cfg.M * cfg.N, cfg.P * cfg.Qr):
        raise DimensionMismatch(f"expected {(cfg.M * cfg.N, cfg.P * cfg.Qr)}, got {Xp.shape}")
    return Xp.reshape(cfg.n_reference_rows, cfg.Qr)


def reshape_tensor(X: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Reference matrix -> decoupled tensor (M x N x P*Qr), one parameter per mode."""
    if X.shape != (cfg.n_reference_rows, cfg.Qr):
        raise DimensionMismatch(f"expected {(cfg.n_reference_rows, cfg.Qr)}, got {X.shape}")
    return X.reshape(cfg.M, cfg.N, cfg.P * cfg.Qr)


def unshape_tensor(chi: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Inverse of reshape_tensor."""
    if chi.shape != (cfg.M, cfg.N, cfg.P * cfg.Qr):
        raise DimensionMismatch(f"expected {(cfg.M, cfg.N, cfg.P * cfg.Qr)}, got {chi.shape}")
    return chi.reshape(cfg.n_reference_rows, cfg.Qr)


def wide_to_tensor(Xp: np.ndarray, cfg: RadarConfig) -> np.ndarray:
    """Wide matrix (MN x P*Qr) -> decoupled tensor (M x N x P*Qr)."""
    return reshape_tensor(unshape_wide(Xp, cfg), cfg)


# --- snapshot synthesis ---


@dataclass
class Snapshot:
    """An NK x Qr slow-time measurement with the configuration and frame that produced it."""

    Y: np.ndarray
    cfg: RadarConfig
    frame: FrameSelection
    pm_applied: bool = False

    def __post_init__(self):
        if self.Y.shape != (self.cfg.n_rows, self.cfg.Qr):
            raise DimensionMismatch(
                f"snapshot must be {(self.cfg.n_rows, self.cfg.Qr)}, got {self.Y.shape}"
            )
        if not np.all(np.isfinite(self.Y)):
            raise DimensionMismatch("snapshot entries must be finite")


def pm_rotation(frame: FrameSelection, cfg: RadarConfig) -> np.ndarray:
    """Per-row phase factors exp(j*2pi*phi/J) applied by phase modulation, length NK."""
    phases = np.empty(cfg.n_rows)
    for ni, sel in enumerate(frame.pulses):
        for k in range(cfg.K):
            phases[ni * cfg.K + k] = TWO_PI * sel.phases[k] / frame.J
    return np.exp(1j * phases)


def synthesize(scene: Scene, cfg: RadarConfig, frame: FrameSelection, pm_on: bool = False) -> Snapshot:
    """Simulate the slow-time snapshot Y = S X + noise for a scene and frame.

    Noise is i.i.d. circular complex Gaussian with variance ``scene.sigma2``
    per entry, drawn deterministically from ``scene.seed``. With ``pm_on``
    each row n*K+k is additionally rotated by its transmitted PM phase; the
    radar receiver knows these phases, so estimators derotate first (see
    :func:`derotate`).
    """
    validate_config(cfg)
    validate_scene(scene, cfg)
    validate_frame(frame, cfg)
    S = build_selection(frame, cfg)
    Y = S.apply(reference_matrix(scene, cfg))
    if pm_on:
        Y = Y * pm_rotation(frame, cfg)[:, None]
    if scene.sigma2 > 0:
        rng = np.random.default_rng(scene.seed)
        scale = np.sqrt(scene.sigma2 / 2.0)
        Y = Y + scale * (rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape))
    return Snapshot(Y=Y, cfg=cfg, frame=frame, pm_applied=pm_on)


def derotate(snapshot: Snapshot) -> Snapshot:
    """Remove the known transmitted PM phases; no-op if they were never applied."""
    if not snapshot.pm_applied:
        return snapshot
    Y = snapshot.Y * np.conj(pm_rotation(snapshot.frame, snapshot.cfg))[:, None]
    return Snapshot(Y=Y, cfg=snapshot.cfg, frame=snapshot.frame, pm_applied=False)


def snr_to_sigma2(snr_db: float, scene: Scene, cfg: RadarConfig, frame: FrameSelection) -> float:
    """Noise variance giving the requested SNR against the noiseless snapshot power.

    sigma2 = ||S X||_F^2 / (N*K*Qr * 10^(snr_db/10)): average per-entry signal
    power divided by per-entry noise power.
    """
    S = build_selection(frame, cfg)
    Y0 = S.apply(reference_matrix(scene, cfg))
    signal_power = float(np.linalg.norm(Y0) ** 2)
    return signal_power / (cfg.n_rows * cfg.Qr * 10.0 ** (snr_db / 10.0))
