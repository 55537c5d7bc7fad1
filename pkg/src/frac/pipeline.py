"""End-to-end estimation pipelines: one entry point per algorithm name.

Algorithms:

* ``danm2-hooi`` / ``ddanm-hooi`` -- gridless solve, Tucker decomposition of
  the decoupled tensor, per-column root-MUSIC, core-tensor pairing (with a
  projection-matching fallback when the pairing degenerates).
* ``danm2-match`` / ``ddanm-match`` -- gridless solve, root-MUSIC on the
  generator covariances, exhaustive DOA/velocity pairing with per-target
  range search.
* ``l1`` -- alternating entrywise-L1 recovery, grid peak picking, 3D
  projection matching.
* ``omp`` -- greedy pursuit over the 3D product grid.
"""

from __future__ import annotations

import math

import numpy as np

from .config import Estimate, EstimateSet, RadarConfig
from .danm import solve_danm2, solve_ddanm
from .errors import DegenerateCore
from .model import Snapshot, build_selection, derotate, measurement_atom
from .music import (
    cov_from_danm2,
    cov_from_ddanm,
    doa_from_cov_freq,
    freq_to_doa,
    freq_to_range,
    freq_to_velocity,
    match_3d,
    match_and_range,
    root_music,
    root_music_subspace,
)
from .sdp import AdmmSettings
from .sparse import GridSpec, L1Settings, coefficient_peaks, solve_l1, solve_omp
from .tucker import core_match, hooi, hosvd

ALGORITHMS = ("danm2-hooi", "danm2-match", "ddanm-hooi", "ddanm-match", "l1", "omp")


def default_tau(Y: np.ndarray, cfg: RadarConfig, sigma2: float | None, eta: float = 1.0) -> float:
    """Regularization weight: eta * sigma * sqrt(log(N*M*P*Qr)), falling back
    to a tiny multiple of ||Y||_F when the noise level is unknown or zero."""
    dim = cfg.N * cfg.M * cfg.P * cfg.Qr
    if sigma2 is not None and sigma2 > 0:
        return eta * math.sqrt(sigma2) * math.sqrt(math.log(dim))
    return max(1e-6 * float(np.linalg.norm(Y)), 1e-12)


def _fit_amplitudes(Y: np.ndarray, cfg, frame, params: list[tuple[float, float, float]]) -> EstimateSet:
    y = Y.ravel(order="F")
    A = np.stack([measurement_atom(cfg, frame, r, v, th) for r, v, th in params], axis=1)
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ beta
    entries = [Estimate(r=r, v=v, theta=th, beta=complex(b)) for (r, v, th), b in zip(params, beta)]
    return EstimateSet(entries=entries, residual=float(np.vdot(res, res).real))


def _hooi_path(Xp: np.ndarray, snapshot: Snapshot, L: int, cap: float) -> EstimateSet:
    cfg = snapshot.cfg
    chi = Xp.reshape(cfg.M, cfg.N, cfg.n_virtual)
    tuck = hooi(chi, L, init=hosvd(chi, L))
    A_r, A_v, A_th = tuck.factors
    try:
        triples = core_match(tuck, L)
    except DegenerateCore:
        # unreliable pairing: fall back to subspace estimates plus projection matching
        ranges = [freq_to_range(f, cfg) for f in root_music_subspace(A_r, L)]
        vels = [freq_to_velocity(f, cfg) for f in root_music_subspace(A_v, L)]
        thetas = [freq_to_doa(f, cfg) for f in root_music_subspace(A_th, L)]
        return match_3d(snapshot.Y, cfg, snapshot.frame, ranges, thetas, vels, L, cap=cap)
    params = []
    for (i_r, i_v, i_th) in triples:
        f_r = root_music_subspace(A_r[:, i_r], 1)[0]
        f_v = root_music_subspace(A_v[:, i_v], 1)[0]
        f_th = root_music_subspace(A_th[:, i_th], 1)[0]
        params.append((freq_to_range(f_r, cfg), freq_to_velocity(f_v, cfg), freq_to_doa(f_th, cfg)))
    return _fit_amplitudes(snapshot.Y, cfg, snapshot.frame, params)


def _match_path(cov, snapshot: Snapshot, L: int, cap: float, n_grid: int) -> EstimateSet:
    cfg = snapshot.cfg
    thetas = [doa_from_cov_freq(f, cfg) for f in root_music(cov.R_u, L)]
    vels = [freq_to_velocity(f, cfg) for f in root_music(cov.R_v, L)]
    return match_and_range(snapshot.Y, cfg, snapshot.frame, thetas, vels, L, cap=cap, n_grid=n_grid)


def run_estimate(
    snapshot: Snapshot,
    algorithm: str,
    L: int,
    tau: float | None = None,
    sigma2: float | None = None,
    eta: float = 1.0,
    settings: AdmmSettings | None = None,
    grid: GridSpec | None = None,
    l1_settings: L1Settings | None = None,
    cap: float = 1e6,
    range_grid: int = 1024,
) -> EstimateSet:
    """Dispatch the full pipeline for one named algorithm.

    ``sigma2`` (when known) sets the gridless regularization weight via
    :func:`default_tau`; an explicit ``tau`` overrides it. ``grid`` controls
    the dictionary resolution of the gridded baselines.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    snapshot = derotate(snapshot)
    cfg = snapshot.cfg
    S = build_selection(snapshot.frame, cfg)

    if algorithm in ("danm2-hooi", "danm2-match", "ddanm-hooi", "ddanm-match"):
        tau_eff = tau if tau is not None else default_tau(snapshot.Y, cfg, sigma2, eta)
        if algorithm.startswith("danm2"):
            result = solve_danm2(snapshot.Y, S, cfg, tau_eff, settings)
            cov = cov_from_danm2(result) if algorithm.endswith("match") else None
        else:
            result = solve_ddanm(snapshot.Y, S, cfg, tau_eff, settings)
            cov = cov_from_ddanm(result) if algorithm.endswith("match") else None
        if algorithm.endswith("hooi"):
            return _hooi_path(result.Xp, snapshot, L, cap)
        return _match_path(cov, snapshot, L, cap, range_grid)

    grid = grid or GridSpec()
    if algorithm == "omp":
        return solve_omp(snapshot.Y, S, cfg, grid, L)

    # l1: recover, pick grid peaks per axis, then 3D projection matching
    _, x1, x2, x3, _ = solve_l1(snapshot.Y, S, cfg, grid, l1_settings)
    r_grid, v_grid, t_grid = grid.axes(cfg)
    thetas = t_grid[coefficient_peaks(x1, L)]
    ranges = r_grid[coefficient_peaks(x2, L)]
    vels = v_grid[coefficient_peaks(x3, L)]
    return match_3d(snapshot.Y, cfg, snapshot.frame, ranges, thetas, vels, L, cap=cap)
