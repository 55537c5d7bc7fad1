"""Gridless decoupled estimators: the two-fold lift and its decomposed variant.

Both solvers recover the wide reference matrix X' (MN x P*Qr) from the
snapshot together with structured Toeplitz generators whose spectra carry the
target parameters. The two-fold program couples range and velocity in a
single (MN + P*Qr)-sized PSD block; the decomposed program splits it into M
blocks of size (N + P*Qr), one per carrier-frequency row slice, which is what
cuts the solve cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RadarConfig
from .errors import DimensionMismatch
from .model import SelectionMatrix
from .sdp import (
    AdmmDiagnostics,
    AdmmSettings,
    AnmProblem,
    BlockSpec,
    admm_solve,
    toeplitz,
    toeplitz_general,
    two_fold_toeplitz,
)


@dataclass
class Danm2Result:
    """Two-fold solve output: wide matrix, two-fold generator array, column generator."""

    Xp: np.ndarray  # MN x P*Qr
    twofold_gen: np.ndarray  # (2M-1) x (2N-1)
    u: np.ndarray  # length P*Qr
    cfg: RadarConfig
    diagnostics: AdmmDiagnostics

    def row_block(self, m: int) -> np.ndarray:
        """The N x N Toeplitz block at block-lag m of the two-fold matrix."""
        return toeplitz_general(self.twofold_gen[m + self.cfg.M - 1])

    def assembled_block(self) -> np.ndarray:
        rn = self.cfg.M * self.cfg.N
        cn = self.cfg.n_virtual
        A = np.empty((rn + cn, rn + cn), dtype=complex)
        A[:rn, :rn] = two_fold_toeplitz(self.twofold_gen)
        A[:rn, rn:] = self.Xp
        A[rn:, :rn] = self.Xp.conj().T
        A[rn:, rn:] = toeplitz(self.u)
        return A


@dataclass
class DdanmResult:
    """Decomposed solve output: wide matrix plus per-slice generator pairs."""

    Xp: np.ndarray  # MN x P*Qr
    u: list[np.ndarray]  # M generators of length P*Qr (DOA side)
    v: list[np.ndarray]  # M generators of length N (velocity side)
    cfg: RadarConfig
    diagnostics: AdmmDiagnostics

    def block_x(self, m: int) -> np.ndarray:
        N = self.cfg.N
        return self.Xp[m * N : (m + 1) * N]

    def assembled_block(self, m: int) -> np.ndarray:
        N = self.cfg.N
        cn = self.cfg.n_virtual
        A = np.empty((N + cn, N + cn), dtype=complex)
        A[:N, :N] = toeplitz(self.v[m])
        A[:N, N:] = self.block_x(m)
        A[N:, :N] = self.block_x(m).conj().T
        A[N:, N:] = toeplitz(self.u[m])
        return A


def _observations(Y: np.ndarray, S: SelectionMatrix, cfg: RadarConfig):
    """Map snapshot entries into wide-matrix coordinates.

    Selection column m*N*P + n*P + p corresponds to wide row m*N + n and wide
    column block p*Qr.
    """
    if Y.shape != (cfg.n_rows, cfg.Qr):
        raise DimensionMismatch(f"expected snapshot {(cfg.n_rows, cfg.Qr)}, got {Y.shape}")
    cols = S.cols
    m = cols // (cfg.N * cfg.P)
    n = (cols // cfg.P) % cfg.N
    p = cols % cfg.P
    rows_wide = m * cfg.N + n
    q = np.arange(cfg.Qr)
    obs_rows = np.repeat(rows_wide, cfg.Qr)
    obs_cols = (p[:, None] * cfg.Qr + q[None, :]).ravel()
    values = Y.ravel()
    return values, obs_rows, obs_cols


def solve_danm2(
    Y: np.ndarray,
    S: SelectionMatrix,
    cfg: RadarConfig,
    tau: float,
    settings: AdmmSettings | None = None,
) -> Danm2Result:
    """Solve the two-fold trace-regularized program.

    minimize ||Y - S X||_F^2 + tau*(Tr two_fold(T) + Tr T(u))
    s.t. [[two_fold(T), X'], [X'^H, T(u)]] >= 0.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    values, obs_rows, obs_cols = _observations(Y, S, cfg)
    block = BlockSpec(
        row_kind="twofold",
        row_dims=(cfg.M, cfg.N),
        col_n=cfg.n_virtual,
        x_rows=slice(0, cfg.M * cfg.N),
    )
    problem = AnmProblem(
        Y=values,
        obs_rows=obs_rows,
        obs_cols=obs_cols,
        x_shape=(cfg.M * cfg.N, cfg.n_virtual),
        tau=tau,
        blocks=(block,),
    )
    Xp, row_gens, col_gens, diag = admm_solve(problem, settings)
    return Danm2Result(Xp=Xp, twofold_gen=row_gens[0], u=col_gens[0], cfg=cfg, diagnostics=diag)


def extraction_matrix(m: int, cfg: RadarConfig) -> np.ndarray:
    """Binary N x MN selector picking the rows of X' that share carrier index m."""
    H = np.zeros((cfg.N, cfg.M * cfg.N))
    H[:, m * cfg.N : (m + 1) * cfg.N] = np.eye(cfg.N)
    return H


def solve_ddanm(
    Y: np.ndarray,
    S: SelectionMatrix,
    cfg: RadarConfig,
    tau: float,
    settings: AdmmSettings | None = None,
) -> DdanmResult:
    """Solve the decomposed program with M per-carrier PSD blocks.

    minimize ||Y - S X||_F^2 + tau*sum_m (Tr T(v_m) + Tr T(u_m))
    s.t. [[T(v_m), X_m], [X_m^H, T(u_m)]] >= 0 for every m,

    where X_m is the N x P*Qr row slice of X' at carrier index m. All blocks
    share one ADMM state; the data-fit couples them through the selection.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    values, obs_rows, obs_cols = _observations(Y, S, cfg)
    blocks = tuple(
        BlockSpec(
            row_kind="toeplitz",
            row_dims=(cfg.N,),
            col_n=cfg.n_virtual,
            x_rows=slice(m * cfg.N, (m + 1) * cfg.N),
        )
        for m in range(cfg.M)
    )
    problem = AnmProblem(
        Y=values,
        obs_rows=obs_rows,
        obs_cols=obs_cols,
        x_shape=(cfg.M * cfg.N, cfg.n_virtual),
        tau=tau,
        blocks=blocks,
    )
    Xp, row_gens, col_gens, diag = admm_solve(problem, settings)
    return DdanmResult(Xp=Xp, u=col_gens, v=row_gens, cfg=cfg, diagnostics=diag)
