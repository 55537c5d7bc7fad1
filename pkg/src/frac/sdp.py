"""Structured-semidefinite primitives and the ADMM engine behind the ANM programs.

Both gridless programs solved here share one shape: minimize

    ||Y - S X||_F^2  +  tau * (sum of traces of structured Hermitian blocks)

subject to one or more PSD constraints of the form

    [[ R(g_b),  X_b    ],
     [ X_b^H,   T(u_b) ]]  >= 0,

where ``R`` is either a Hermitian Toeplitz matrix or a two-fold (block)
Toeplitz matrix built from a generator array, and ``X_b`` is a row slice of
the wide data matrix X'. The ADMM splitting alternates

1. a closed-form update of X' and all generators (per-entry data blend plus
   diagonal averaging onto the Toeplitz subspaces, with the trace term
   absorbed as a constant shift of the zero-lag generators),
2. projection of each assembled block onto the PSD cone,
3. a scaled dual update,

with optional residual-balancing adaptation of the penalty parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz as _toeplitz

from .errors import DimensionMismatch, EigFailure


# --- Toeplitz constructors ---


def toeplitz(u: np.ndarray) -> np.ndarray:
    """Hermitian Toeplitz matrix from its first column u (u[0] real).

    Entry (i, j) is u[i-j] for i >= j and conj(u[j-i]) above the diagonal.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 1:
        raise DimensionMismatch("generator must be a vector")
    return _toeplitz(u, np.conj(u))


def toeplitz_general(col_gen: np.ndarray) -> np.ndarray:
    """(Non-Hermitian) Toeplitz block from generators x_{-(n-1)}..x_{n-1}.

    ``col_gen`` has length 2n-1 with lag k stored at index k + n - 1;
    entry (a, b) is x_{a-b}.
    """
    col_gen = np.asarray(col_gen, dtype=complex)
    n = (col_gen.size + 1) // 2
    return _toeplitz(col_gen[n - 1 :], col_gen[n - 1 :: -1])


def two_fold_toeplitz(gen: np.ndarray) -> np.ndarray:
    """Hermitian two-fold Toeplitz matrix (MN x MN) from an (2M-1, 2N-1) generator array.

    gen[l + M - 1, k + N - 1] holds x_{l,k}; block (i, j) is the N x N
    Toeplitz matrix with entries x_{i-j, a-b}. Hermitian symmetry requires
    x_{-l,-k} = conj(x_{l,k}).
    """
    gen = np.asarray(gen, dtype=complex)
    if gen.ndim != 2 or gen.shape[0] % 2 == 0 or gen.shape[1] % 2 == 0:
        raise DimensionMismatch("generator array must be (2M-1) x (2N-1)")
    M = (gen.shape[0] + 1) // 2
    N = (gen.shape[1] + 1) // 2
    out = np.empty((M * N, M * N), dtype=complex)
    blocks = {l: toeplitz_general(gen[l + M - 1]) for l in range(-(M - 1), M)}
    for i in range(M):
        for j in range(M):
            out[i * N : (i + 1) * N, j * N : (j + 1) * N] = blocks[i - j]
    return out


def hermitian_generator(gen: np.ndarray) -> np.ndarray:
    """Project a two-fold generator array onto Hermitian symmetry x_{-l,-k} = conj(x_{l,k})."""
    sym = 0.5 * (gen + np.conj(gen[::-1, ::-1]))
    return sym


# --- diagonal averaging (adjoint maps onto the Toeplitz subspaces) ---


def toeplitz_diag_means(B: np.ndarray) -> np.ndarray:
    """Per-lag means of a Hermitian matrix: the Frobenius projection onto
    Hermitian Toeplitz matrices, returned as a first-column generator."""
    n = B.shape[0]
    u = np.empty(n, dtype=complex)
    u[0] = np.mean(np.diagonal(B).real)
    for k in range(1, n):
        u[k] = np.mean(np.diagonal(B, offset=-k))
    return u


def twofold_diag_means(B: np.ndarray, M: int, N: int) -> np.ndarray:
    """Per-(block-lag, lag) means of a Hermitian MN x MN matrix: projection onto
    two-fold Toeplitz structure, returned as an (2M-1, 2N-1) generator array."""
    Bt = B.reshape(M, N, M, N)
    gen = np.empty((2 * M - 1, 2 * N - 1), dtype=complex)
    for l in range(M):
        # average the (M - l) blocks on block-diagonal l, then its lag diagonals
        D = np.mean([Bt[j + l, :, j, :] for j in range(M - l)], axis=0)
        for k in range(-(N - 1), N):
            gen[l + M - 1, k + N - 1] = np.mean(np.diagonal(D, offset=-k))
    gen[: M - 1] = np.conj(gen[M:][::-1, ::-1])
    gen[M - 1, N - 1] = gen[M - 1, N - 1].real
    return gen


# --- PSD projection ---


def psd_project(H: np.ndarray) -> np.ndarray:
    """Frobenius-norm projection of a Hermitian matrix onto the PSD cone.

    The input is symmetrized as (H + H^H)/2 first; negative eigenvalues are
    clipped to zero. Idempotent.
    """
    if not np.all(np.isfinite(H)):
        raise EigFailure("non-finite entries in matrix to project")
    Hs = 0.5 * (H + H.conj().T)
    w, V = np.linalg.eigh(Hs)
    if np.all(w >= 0):
        return Hs
    pos = w > 0
    Vp = V[:, pos] * w[pos]
    return Vp @ V[:, pos].conj().T


# --- ADMM engine ---


@dataclass
class AdmmSettings:
    """Penalty, tolerances and iteration cap for the ADMM loop."""

    rho: float = 1.0
    adapt_rho: bool = True
    tol_rel: float = 1e-6
    tol_abs: float = 1e-8
    max_iter: int = 2000


@dataclass
class AdmmDiagnostics:
    iterations: int = 0
    primal_res: float = np.inf
    dual_res: float = np.inf
    objective: float = np.inf
    converged: bool = False
    trace: list = field(default_factory=list)  # rows (iter, primal_res, dual_res, objective)


@dataclass(frozen=True)
class BlockSpec:
    """One PSD block: a structured row part, a Toeplitz column part, and the
    rows of X' forming the off-diagonal coupling."""

    row_kind: str  # "toeplitz" or "twofold"
    row_dims: tuple  # (n,) or (M, N)
    col_n: int
    x_rows: slice

    @property
    def row_n(self) -> int:
        return self.row_dims[0] * (self.row_dims[1] if self.row_kind == "twofold" else 1)

    @property
    def size(self) -> int:
        return self.row_n + self.col_n


@dataclass(frozen=True)
class AnmProblem:
    """Data-fit plus trace-regularized PSD feasibility over one or more blocks.

    ``obs_rows``/``obs_cols`` give, for each snapshot entry, its position in
    the wide matrix X' (shape ``x_shape``); ``Y`` holds the measured values in
    the same order.
    """

    Y: np.ndarray  # observed values, shape (n_obs,)
    obs_rows: np.ndarray
    obs_cols: np.ndarray
    x_shape: tuple[int, int]
    tau: float
    blocks: tuple[BlockSpec, ...]


def _row_structure_matrix(block: BlockSpec, gen: np.ndarray) -> np.ndarray:
    if block.row_kind == "twofold":
        return two_fold_toeplitz(gen)
    return toeplitz(gen)


def _row_structure_means(block: BlockSpec, B11: np.ndarray) -> np.ndarray:
    if block.row_kind == "twofold":
        M, N = block.row_dims
        return twofold_diag_means(B11, M, N)
    return toeplitz_diag_means(B11)


def _structure_trace(block: BlockSpec, gen: np.ndarray, u: np.ndarray) -> float:
    if block.row_kind == "twofold":
        M, N = block.row_dims
        t_row = M * N * gen[M - 1, N - 1].real
    else:
        t_row = block.row_n * gen[0].real
    return t_row + block.col_n * u[0].real


def admm_solve(problem: AnmProblem, settings: AdmmSettings | None = None):
    """Run the ADMM loop; returns (X', row generators, column generators, diagnostics).

    Generators come back one per block. If the iteration cap is reached the
    best iterate is returned with ``diagnostics.converged`` False. The last
    step shifts the zero-lag generators so every assembled block is exactly
    PSD (a diagonal lift along the identity, bounded by the primal residual).
    """
    settings = settings or AdmmSettings()
    rho = settings.rho
    tau = problem.tau
    n_obs = problem.Y.size

    Xp = np.zeros(problem.x_shape, dtype=complex)
    row_gens = []
    col_gens = []
    Z = []
    U = []
    for b in problem.blocks:
        if b.row_kind == "twofold":
            M, N = b.row_dims
            row_gens.append(np.zeros((2 * M - 1, 2 * N - 1), dtype=complex))
        else:
            row_gens.append(np.zeros(b.row_n, dtype=complex))
        col_gens.append(np.zeros(b.col_n, dtype=complex))
        Z.append(np.zeros((b.size, b.size), dtype=complex))
        U.append(np.zeros((b.size, b.size), dtype=complex))

    obs = (problem.obs_rows, problem.obs_cols)
    total_dim = float(np.sqrt(sum(b.size**2 for b in problem.blocks)))
    diag = AdmmDiagnostics()

    def assemble(b: BlockSpec, gen, u, xblock) -> np.ndarray:
        A = np.empty((b.size, b.size), dtype=complex)
        rn = b.row_n
        A[:rn, :rn] = _row_structure_matrix(b, gen)
        A[:rn, rn:] = xblock
        A[rn:, :rn] = xblock.conj().T
        A[rn:, rn:] = toeplitz(u)
        return A

    A_blocks = [assemble(b, row_gens[i], col_gens[i], Xp[b.x_rows]) for i, b in enumerate(problem.blocks)]

    for it in range(1, settings.max_iter + 1):
        # 1. structured update: closed-form minimization of data fit + trace + penalty
        Xp_target = np.empty_like(Xp)
        for i, b in enumerate(problem.blocks):
            B = Z[i] - U[i]
            B = 0.5 * (B + B.conj().T)
            rn = b.row_n
            gen = _row_structure_means(b, B[:rn, :rn])
            u = toeplitz_diag_means(B[rn:, rn:])
            if b.row_kind == "twofold":
                M, N = b.row_dims
                gen[M - 1, N - 1] -= tau / rho
            else:
                gen[0] -= tau / rho
            u[0] -= tau / rho
            row_gens[i] = gen
            col_gens[i] = u
            Xp_target[b.x_rows] = B[:rn, rn:]
        Xp = Xp_target
        Xp[obs] = (problem.Y + rho * Xp_target[obs]) / (1.0 + rho)

        # 2. PSD projection of each assembled block
        Z_prev = Z
        A_blocks = [
            assemble(b, row_gens[i], col_gens[i], Xp[b.x_rows]) for i, b in enumerate(problem.blocks)
        ]
        Z = [psd_project(A_blocks[i] + U[i]) for i in range(len(problem.blocks))]

        # 3. dual update
        primal_sq = 0.0
        dual_sq = 0.0
        a_sq = z_sq = u_sq = 0.0
        for i in range(len(problem.blocks)):
            R = A_blocks[i] - Z[i]
            U[i] = U[i] + R
            primal_sq += float(np.linalg.norm(R) ** 2)
            dual_sq += float(np.linalg.norm(Z[i] - Z_prev[i]) ** 2)
            a_sq += float(np.linalg.norm(A_blocks[i]) ** 2)
            z_sq += float(np.linalg.norm(Z[i]) ** 2)
            u_sq += float(np.linalg.norm(U[i]) ** 2)
        primal = np.sqrt(primal_sq)
        dual = rho * np.sqrt(dual_sq)

        misfit = float(np.linalg.norm(Xp[obs] - problem.Y) ** 2)
        traces = sum(
            _structure_trace(b, row_gens[i], col_gens[i]) for i, b in enumerate(problem.blocks)
        )
        objective = misfit + tau * traces
        diag.trace.append((it, primal, dual, objective))

        eps_pri = settings.tol_abs * total_dim + settings.tol_rel * max(np.sqrt(a_sq), np.sqrt(z_sq))
        eps_dual = settings.tol_abs * total_dim + settings.tol_rel * rho * np.sqrt(u_sq)
        diag.iterations = it
        diag.primal_res = primal
        diag.dual_res = dual
        diag.objective = objective
        if primal <= eps_pri and dual <= eps_dual:
            diag.converged = True
            break

        if settings.adapt_rho and it % 10 == 0:
            if primal > 10.0 * dual:
                rho *= 2.0
                U = [u / 2.0 for u in U]
            elif dual > 10.0 * primal:
                rho /= 2.0
                U = [u * 2.0 for u in U]

    # diagonal lift: make every returned block exactly PSD
    for i, b in enumerate(problem.blocks):
        w = np.linalg.eigvalsh(0.5 * (A_blocks[i] + A_blocks[i].conj().T))
        lift = max(0.0, -float(w[0]))
        if lift > 0:
            lift *= 1.0 + 1e-12
            if b.row_kind == "twofold":
                M, N = b.row_dims
                row_gens[i][M - 1, N - 1] += lift
            else:
                row_gens[i][0] += lift
            col_gens[i][0] += lift

    return Xp, row_gens, col_gens, diag


def write_trace_csv(path, diagnostics: AdmmDiagnostics) -> None:
    """Dump the per-iteration diagnostics as CSV rows (iter, primal_res, dual_res, objective)."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "primal_res", "dual_res", "objective"])
        writer.writerows(diagnostics.trace)
