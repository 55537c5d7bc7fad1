"""Tucker decomposition of the decoupled tensor: unfoldings, HOSVD, HOOI,
and core-tensor peak pairing.

Mode convention for the decoupled tensor: mode 0 = range (size M),
mode 1 = velocity (size N), mode 2 = angle (size P*Qr).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCore, DimensionMismatch


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-n unfolding: mode n becomes the rows, remaining axes flatten in C order."""
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def fold(mat: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of the given shape."""
    full = [shape[mode]] + [s for i, s in enumerate(shape) if i != mode]
    return np.moveaxis(mat.reshape(full), 0, mode)


def mode_product(t: np.ndarray, U: np.ndarray, mode: int) -> np.ndarray:
    """n-mode product t x_n U: multiply U onto the mode-n fibers."""
    if U.shape[1] != t.shape[mode]:
        raise DimensionMismatch(f"mode-{mode} size {t.shape[mode]} vs U columns {U.shape[1]}")
    shape = list(t.shape)
    shape[mode] = U.shape[0]
    return fold(U @ unfold(t, mode), mode, shape)


@dataclass
class TuckerResult:
    """Core tensor, per-mode orthonormal factors, and relative reconstruction error."""

    core: np.ndarray
    factors: list[np.ndarray]
    fit: float
    fit_trace: list[float] | None = None

    def reconstruct(self) -> np.ndarray:
        out = self.core
        for mode, A in enumerate(self.factors):
            out = mode_product(out, A, mode)
        return out


def _fit(t: np.ndarray, core: np.ndarray, factors) -> float:
    recon = core
    for mode, A in enumerate(factors):
        recon = mode_product(recon, A, mode)
    denom = np.linalg.norm(t)
    return float(np.linalg.norm(t - recon) / denom) if denom > 0 else 0.0


def _leading_vectors(mat: np.ndarray, rank: int) -> np.ndarray:
    U, _, _ = np.linalg.svd(mat, full_matrices=False)
    return U[:, :rank]


def hosvd(t: np.ndarray, rank: int) -> TuckerResult:
    """Truncated higher-order SVD: per-mode leading singular vectors of each unfolding."""
    factors = [_leading_vectors(unfold(t, mode), min(rank, t.shape[mode])) for mode in range(t.ndim)]
    core = t
    for mode, A in enumerate(factors):
        core = mode_product(core, A.conj().T, mode)
    return TuckerResult(core=core, factors=factors, fit=_fit(t, core, factors))


def hooi(
    t: np.ndarray,
    rank: int,
    init: TuckerResult | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> TuckerResult:
    """Higher-order orthogonal iteration refining a Tucker decomposition.

    Alternates per-mode SVD updates starting from ``init`` (HOSVD when not
    given); the reconstruction error is non-increasing and iteration stops
    when its relative change drops below ``tol``. The per-iteration error
    trace is attached as ``fit_trace``.
    """
    result = init if init is not None else hosvd(t, rank)
    factors = [A.copy() for A in result.factors]
    core = result.core
    fit_prev = result.fit
    trace = [fit_prev]
    for _ in range(max_iter):
        for mode in range(t.ndim):
            partial = t
            for other in range(t.ndim):
                if other != mode:
                    partial = mode_product(partial, factors[other].conj().T, other)
            factors[mode] = _leading_vectors(unfold(partial, mode), min(rank, t.shape[mode]))
        core = t
        for mode, A in enumerate(factors):
            core = mode_product(core, A.conj().T, mode)
        fit = _fit(t, core, factors)
        trace.append(fit)
        if abs(fit_prev - fit) < tol * max(fit_prev, 1e-15):
            fit_prev = fit
            break
        fit_prev = fit
    return TuckerResult(core=core, factors=factors, fit=fit_prev, fit_trace=trace)


def core_match(result: TuckerResult, L: int) -> list[tuple[int, ...]]:
    """Pair factor columns across modes via the largest core-tensor magnitudes.

    Greedily extracts the L largest |core| entries such that no two share a
    coordinate on any mode, i.e. every factor column is used at most once.
    Raises DegenerateCore when the L-th extracted magnitude falls below
    1e-6 of the largest, signalling an unreliable pairing.
    """
    mags = np.abs(result.core)
    order = np.argsort(mags, axis=None)[::-1]
    used = [set() for _ in range(result.core.ndim)]
    picks: list[tuple[int, ...]] = []
    peak = None
    for flat in order:
        idx = np.unravel_index(flat, result.core.shape)
        if any(idx[d] in used[d] for d in range(result.core.ndim)):
            continue
        value = mags[idx]
        if peak is None:
            peak = value
        if value < 1e-6 * peak:
            raise DegenerateCore(
                f"core magnitude {value:.3e} below 1e-6 of peak {peak:.3e} at pick {len(picks) + 1}"
            )
        picks.append(tuple(int(i) for i in idx))
        for d in range(result.core.ndim):
            used[d].add(idx[d])
        if len(picks) == L:
            return picks
    raise DegenerateCore(f"could not extract {L} disjoint core entries")
