"""Gridded baseline estimators: iterative entrywise-L1 recovery and 3D OMP.

Both work on dictionaries of steering vectors sampled on per-parameter grids.
Grid points are cell centers for the velocity and DOA axes (whose domains are
open intervals) and left edges for the wrapped range axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Estimate, EstimateSet, RadarConfig, ambiguity_limits
from .errors import NonFinite
from .model import SelectionMatrix, frame_indices, steer_range, steer_velocity, steer_virtual

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GridSpec:
    """Per-axis grid sizes and bounds for the dictionary matrices."""

    n: int = 256
    r_bounds: tuple[float, float] | None = None
    v_bounds: tuple[float, float] | None = None
    theta_bounds: tuple[float, float] = (-np.pi / 2, np.pi / 2)

    def axes(self, cfg: RadarConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rmax, vmax = ambiguity_limits(cfg)
        r_lo, r_hi = self.r_bounds if self.r_bounds is not None else (0.0, rmax)
        v_lo, v_hi = self.v_bounds if self.v_bounds is not None else (-vmax, vmax)
        t_lo, t_hi = self.theta_bounds
        r = r_lo + (r_hi - r_lo) * np.arange(self.n) / self.n
        v = v_lo + (v_hi - v_lo) * (np.arange(self.n) + 0.5) / self.n
        theta = t_lo + (t_hi - t_lo) * (np.arange(self.n) + 0.5) / self.n
        return r, v, theta


@dataclass
class L1Settings:
    """Regularization weights and iteration counts for the iterative solver.

    ``mu`` values of None default to 0.1 * max|Y| at solve time.
    """

    tau1: float = 1.0
    tau2: float = 1.0
    tau3: float = 1.0
    mu1: float | None = None
    mu2: float | None = None
    mu3: float | None = None
    outer_iters: int = 20
    inner_iters: int = 200
    inner_tol: float = 1e-8


def build_dictionaries(grid: GridSpec, cfg: RadarConfig):
    """Steering-vector dictionaries (A1: P*Qr x Ng DOA on the virtual array,
    A2: M x Ng range, A3: N x Ng velocity)."""
    r_grid, v_grid, t_grid = grid.axes(cfg)
    A1 = np.stack([steer_virtual(cfg, t) for t in t_grid], axis=1)
    A2 = np.stack([steer_range(cfg, r) for r in r_grid], axis=1)
    A3 = np.stack([steer_velocity(cfg, v) for v in v_grid], axis=1)
    return A1, A2, A3


def _soft_threshold(x: np.ndarray, thr: float) -> np.ndarray:
    mag = np.abs(x)
    scale = np.maximum(mag - thr, 0.0) / np.maximum(mag, 1e-300)
    return x * scale


def _ista(A: np.ndarray, X_target: np.ndarray, x0: np.ndarray, tau: float, mu: float,
          iters: int, tol: float) -> np.ndarray:
    """Iterative soft-thresholding for min tau*||X - A x||_F^2 + mu*||x||_1."""
    lip = 2.0 * tau * np.linalg.norm(A, 2) ** 2
    step = 1.0 / lip
    x = x0
    G = A.conj().T
    for _ in range(iters):
        grad = 2.0 * tau * (G @ (A @ x - X_target))
        x_new = _soft_threshold(x - step * grad, step * mu)
        change = np.linalg.norm(x_new - x)
        x = x_new
        if change <= tol * max(np.linalg.norm(x), 1e-15):
            break
    return x


def _unfoldings(Xp: np.ndarray, cfg: RadarConfig):
    """The three unfoldings whose columns vary with a single parameter.

    X1 (P*Qr x MN): columns are DOA mixtures; X2 (M x N*P*Qr): range;
    X3 (N x M*P*Qr): velocity.
    """
    chi = Xp.reshape(cfg.M, cfg.N, cfg.n_virtual)
    X1 = Xp.T
    X2 = chi.reshape(cfg.M, cfg.N * cfg.n_virtual)
    X3 = np.moveaxis(chi, 1, 0).reshape(cfg.N, cfg.M * cfg.n_virtual)
    return X1, X2, X3


def _refold(M1: np.ndarray, M2: np.ndarray, M3: np.ndarray, cfg: RadarConfig):
    """Map dictionary fits of the three unfoldings back to wide-matrix layout."""
    W1 = M1.T
    W2 = M2.reshape(cfg.M, cfg.N, cfg.n_virtual).reshape(cfg.M * cfg.N, cfg.n_virtual)
    W3 = np.moveaxis(M3.reshape(cfg.N, cfg.M, cfg.n_virtual), 0, 1).reshape(
        cfg.M * cfg.N, cfg.n_virtual
    )
    return W1, W2, W3


def solve_l1(
    Y: np.ndarray,
    S: SelectionMatrix,
    cfg: RadarConfig,
    grid: GridSpec,
    settings: L1Settings | None = None,
):
    """Alternating entrywise-L1 recovery of the reference matrix.

    minimize ||Y - S X||_F^2 + sum_i tau_i*||X_i - A_i x_i||_F^2
             + sum_i mu_i*||x_i||_1

    where X_i are the single-parameter unfoldings of X and the x_i are
    coefficient matrices (one column per unfolding column). Each outer
    iteration updates every x_i by iterative soft-thresholding and then X in
    closed form (all X terms are quadratic and entrywise separable). Returns
    (X in reference layout, x1, x2, x3, objective trace).
    """
    settings = settings or L1Settings()
    mu_default = 0.1 * float(np.max(np.abs(Y)))
    mu = [s if s is not None else mu_default for s in (settings.mu1, settings.mu2, settings.mu3)]
    tau = [settings.tau1, settings.tau2, settings.tau3]

    A1, A2, A3 = build_dictionaries(grid, cfg)
    dicts = [A1, A2, A3]
    cols = [cfg.M * cfg.N, cfg.N * cfg.n_virtual, cfg.M * cfg.n_virtual]
    xs = [np.zeros((grid.n, c), dtype=complex) for c in cols]

    # start from the selection-consistent least-squares fit (observed entries copied)
    from .danm import _observations

    values, obs_rows, obs_cols = _observations(Y, S, cfg)
    obs = (obs_rows, obs_cols)
    Xp = np.zeros((cfg.M * cfg.N, cfg.n_virtual), dtype=complex)
    Xp[obs] = values

    objective_trace = []
    tau_sum = sum(tau)
    for _ in range(settings.outer_iters):
        targets = _unfoldings(Xp, cfg)
        for i in range(3):
            xs[i] = _ista(
                dicts[i], targets[i], xs[i], tau[i], mu[i], settings.inner_iters, settings.inner_tol
            )
        fits = _refold(A1 @ xs[0], A2 @ xs[1], A3 @ xs[2], cfg)
        Xp = (tau[0] * fits[0] + tau[1] * fits[1] + tau[2] * fits[2]) / tau_sum
        Xp[obs] = (values + tau[0] * fits[0][obs] + tau[1] * fits[1][obs] + tau[2] * fits[2][obs]) / (
            1.0 + tau_sum
        )
        if not np.all(np.isfinite(Xp)):
            raise NonFinite("iterate diverged in the entrywise-L1 solver")

        X1, X2, X3 = _unfoldings(Xp, cfg)
        obj = float(np.linalg.norm(Xp[obs] - values) ** 2)
        for i, Xi in enumerate((X1, X2, X3)):
            obj += tau[i] * float(np.linalg.norm(Xi - dicts[i] @ xs[i]) ** 2)
            obj += mu[i] * float(np.sum(np.abs(xs[i])))
        objective_trace.append(obj)

    X = Xp.reshape(cfg.n_reference_rows, cfg.Qr)
    return X, xs[0], xs[1], xs[2], objective_trace


def coefficient_peaks(x: np.ndarray, L: int) -> np.ndarray:
    """Indices of the L strongest row-energy local maxima of a coefficient matrix."""
    energy = np.sum(np.abs(x) ** 2, axis=1)
    interior = np.r_[False, (energy[1:-1] >= energy[:-2]) & (energy[1:-1] > energy[2:]), False]
    idx = np.nonzero(interior)[0]
    if idx.size < L:
        order = np.argsort(energy)[::-1]
        return np.sort(order[:L])
    top = idx[np.argsort(energy[idx])[::-1][:L]]
    return np.sort(top)


def solve_omp(
    Y: np.ndarray,
    S: SelectionMatrix,
    cfg: RadarConfig,
    grid: GridSpec,
    L: int,
) -> EstimateSet:
    """Greedy matching pursuit over the 3D product grid of measurement atoms.

    Atom correlations are evaluated lazily: for each DOA grid point the
    residual is collapsed along the receive axis, scattered by carrier and
    antenna index, and contracted with the range and velocity Vandermonde
    grids, so the N_g^3 dictionary is never materialized. Each iteration
    re-fits all selected atoms jointly before updating the residual. Argmax
    ties keep the lowest linear index (DOA outermost, then range, then
    velocity).
    """
    # frame indices recovered from the selection columns
    cols = S.cols
    m_idx = cols // (cfg.N * cfg.P)
    n_idx = (cols // cfg.P) % cfg.N
    p_idx = cols % cfg.P

    r_grid, v_grid, t_grid = grid.axes(cfg)
    Ng = grid.n
    # range/velocity correlation tables: conj of steering entries on the grid
    Er = np.exp(1j * TWO_PI * np.outer(r_grid, np.arange(cfg.M)) * cfg.delta_f * 2.0 / cfg.c)
    Ev = np.exp(1j * TWO_PI * cfg.fc * 2.0 * np.outer(v_grid, np.arange(cfg.N)) * cfg.T0 / cfg.c)
    # per-DOA row phases and receive steering
    sin_t = np.sin(t_grid)
    B_rx = np.exp(1j * TWO_PI * np.outer(np.arange(cfg.Qr), cfg.fc * cfg.dR * sin_t / cfg.c))
    tx_phase = np.exp(1j * TWO_PI * np.outer(p_idx, cfg.fc * cfg.dT * sin_t / cfg.c))

    y_vec = Y.ravel(order="F")
    residual = Y.copy()
    selected: list[tuple[float, float, float]] = []
    beta = np.zeros(0, dtype=complex)
    res_sq = float(np.vdot(y_vec, y_vec).real)

    for _ in range(L):
        best_val = -1.0
        best_idx = None
        G = residual @ np.conj(B_rx)  # NK x Ng: receive-collapsed residual per DOA
        for ti in range(Ng):
            w = np.conj(tx_phase[:, ti]) * G[:, ti]
            D = np.zeros((cfg.M, cfg.N), dtype=complex)
            np.add.at(D, (m_idx, n_idx), w)
            corr = np.abs(Er @ D @ Ev.T)  # Ng_r x Ng_v
            j = int(np.argmax(corr))
            val = float(corr.flat[j])
            if val > best_val + 1e-15:
                best_val = val
                best_idx = (ti, j // Ng, j % Ng)
        ti, ri, vi = best_idx
        cand = (float(r_grid[ri]), float(v_grid[vi]), float(t_grid[ti]))
        if cand in selected:
            break  # residual no longer excites a new atom
        selected.append(cand)
        # joint least-squares re-fit over all selected atoms
        A = np.stack(
            [_atom_from_indices(cfg, m_idx, n_idx, p_idx, r, v, th) for (r, v, th) in selected],
            axis=1,
        )
        beta, *_ = np.linalg.lstsq(A, y_vec, rcond=None)
        res_vec = y_vec - A @ beta
        residual = res_vec.reshape(Y.shape, order="F")
        res_sq = float(np.vdot(res_vec, res_vec).real)

    entries = [
        Estimate(r=r, v=v, theta=th, beta=complex(b)) for (r, v, th), b in zip(selected, beta)
    ]
    return EstimateSet(entries=entries, residual=res_sq)


def _atom_from_indices(cfg, m_idx, n_idx, p_idx, r, v, theta) -> np.ndarray:
    """Vectorized measurement atom built from explicit per-row indices."""
    a_r = np.exp(-1j * TWO_PI * m_idx * cfg.delta_f * 2.0 * r / cfg.c)
    a_v = np.exp(-1j * TWO_PI * cfg.fc * 2.0 * n_idx * v * cfg.T0 / cfg.c)
    a_t = np.exp(1j * TWO_PI * p_idx * cfg.fc * cfg.dT * np.sin(theta) / cfg.c)
    b = np.exp(1j * TWO_PI * np.arange(cfg.Qr) * cfg.fc * cfg.dR * np.sin(theta) / cfg.c)
    return np.kron(b, a_r * a_v * a_t)
