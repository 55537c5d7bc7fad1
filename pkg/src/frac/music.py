"""Subspace frequency estimation and projection-based parameter matching.

Covariance matrices built from the optimized Toeplitz generators carry the
DOA spectrum (virtual-array side) and velocity spectrum (pulse side).
Root-MUSIC extracts normalized frequencies in [-1/2, 1/2); the ``freq_to_*``
maps convert them to physical parameters under the steering-vector sign
conventions of the signal model.

One sign subtlety, forced by the transpose in the rank-1 model terms
``left * b_rx^T``: the column-side Toeplitz atoms are the *conjugated*
virtual-array steering vectors, so DOA frequencies estimated from those
covariances must be negated before ``freq_to_doa`` (see
:func:`doa_from_cov_freq`). Factor matrices of the decoupled tensor are not
conjugated and map directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .codec import FrameSelection
from .config import Estimate, EstimateSet, RadarConfig, ambiguity_limits
from .danm import Danm2Result, DdanmResult
from .errors import CombinatorialBlowup, OutOfDomain, SubspaceCollapse
from .model import frame_indices, measurement_atom, steer_rx
from .sdp import toeplitz


@dataclass
class CovariancePair:
    """DOA-side (P*Qr) and velocity-side (N) Hermitian PSD covariance matrices."""

    R_u: np.ndarray
    R_v: np.ndarray


def cov_from_danm2(result: Danm2Result) -> CovariancePair:
    """Covariances from the two-fold solve: R_v sums the non-negative block
    lags T_m T_m^H for m = 0..M-1; R_u = T(u) T(u)^H."""
    cfg = result.cfg
    R_v = np.zeros((cfg.N, cfg.N), dtype=complex)
    for m in range(cfg.M):
        T_m = result.row_block(m)
        R_v += T_m @ T_m.conj().T
    T_u = toeplitz(result.u)
    return CovariancePair(R_u=T_u @ T_u.conj().T, R_v=R_v)


def cov_from_ddanm(result: DdanmResult) -> CovariancePair:
    """Covariances from the decomposed solve: Gram sums of T(u_m) and T(v_m)."""
    cfg = result.cfg
    R_u = np.zeros((cfg.n_virtual, cfg.n_virtual), dtype=complex)
    R_v = np.zeros((cfg.N, cfg.N), dtype=complex)
    for m in range(cfg.M):
        T_u = toeplitz(result.u[m])
        T_v = toeplitz(result.v[m])
        R_u += T_u @ T_u.conj().T
        R_v += T_v @ T_v.conj().T
    return CovariancePair(R_u=R_u, R_v=R_v)


# --- root-MUSIC ---


def _roots_from_projector(C: np.ndarray, L: int) -> np.ndarray:
    """Frequencies from a noise-subspace projector: the L polynomial roots
    inside the unit circle closest to it, as sorted angles / 2pi."""
    n = C.shape[0]
    # coefficient of z^k is the sum of the k-th superdiagonal of C
    coeffs = np.array([np.trace(C, offset=k) for k in range(n - 1, -n, -1)])
    roots = np.roots(coeffs)

    inside = roots[np.abs(roots) < 1.0]
    if inside.size < L:
        # numerically on-circle pairs: dedup reciprocal partners by radius
        chosen = list(inside)
        rest = sorted(
            (z for z in roots if abs(z) >= 1.0),
            key=lambda z: abs(abs(z) - 1.0),
        )
        for z in rest:
            if len(chosen) >= L:
                break
            if any(abs(z * np.conj(c) - 1.0) < 1e-6 for c in chosen):
                continue
            chosen.append(z)
        inside = np.array(chosen)
    order = np.argsort(np.abs(np.abs(inside) - 1.0))
    picked = inside[order[:L]]
    freqs = np.angle(picked) / (2.0 * np.pi)
    return np.sort(freqs)


def root_music(R: np.ndarray, L: int) -> np.ndarray:
    """Estimate L normalized frequencies from a Hermitian PSD matrix.

    The noise subspace spans the n-L smallest eigenvectors; frequencies are
    the angles of the L polynomial roots inside the unit circle closest to
    it, returned sorted, in [-1/2, 1/2).

    Raises SubspaceCollapse when the signal/noise eigen-gap is too small to
    separate the subspaces.
    """
    n = R.shape[0]
    if not 0 < L < n:
        raise ValueError(f"need 0 < L < n; got L={L}, n={n}")
    w, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    w = np.clip(w, 0.0, None)
    lam = w[::-1]  # descending
    sig, noi = lam[L - 1], lam[L]
    if sig <= 0 or sig < noi * (1.0 + 1e-9):
        raise SubspaceCollapse(f"signal/noise eigenvalue gap {sig:.3e}/{noi:.3e} too small")
    E_n = V[:, : n - L]
    return _roots_from_projector(E_n @ E_n.conj().T, L)


def root_music_subspace(basis: np.ndarray, L: int) -> np.ndarray:
    """Root-MUSIC fed a signal-subspace basis directly (no covariance).

    The noise projector is the orthogonal complement of the column span, so
    a Tucker factor matrix (or a single column) can be consumed as-is.
    """
    B = np.atleast_2d(np.asarray(basis, dtype=complex))
    if B.shape[0] == 1:
        B = B.T
    n = B.shape[0]
    if not 0 < L < n:
        raise ValueError(f"need 0 < L < n; got L={L}, n={n}")
    Q, _ = np.linalg.qr(B)
    C = np.eye(n, dtype=complex) - Q @ Q.conj().T
    return _roots_from_projector(C, L)


# --- normalized frequency <-> physical parameter maps ---


def freq_to_doa(f: float, cfg: RadarConfig) -> float:
    """DOA from the virtual-array normalized frequency f = fc*dR*sin(theta)/c."""
    arg = f * cfg.c / (cfg.fc * cfg.dR)
    if abs(arg) > 1.0:
        if abs(arg) <= 1.0 + 1e-9:
            arg = math.copysign(1.0, arg)
        else:
            raise OutOfDomain(f"|sin(theta)| = {abs(arg):.6f} > 1")
    return math.asin(arg)


def doa_to_freq(theta: float, cfg: RadarConfig) -> float:
    return cfg.fc * cfg.dR * math.sin(theta) / cfg.c


def freq_to_velocity(f: float, cfg: RadarConfig) -> float:
    """Velocity from the pulse-axis normalized frequency f = -2*fc*v*T0/c."""
    return -f * cfg.c / (2.0 * cfg.fc * cfg.T0)


def velocity_to_freq(v: float, cfg: RadarConfig) -> float:
    return -2.0 * cfg.fc * v * cfg.T0 / cfg.c


def freq_to_range(f: float, cfg: RadarConfig) -> float:
    """Range from the carrier-axis normalized frequency f = -2*delta_f*r/c.

    Range is identified modulo the unambiguous span, so the negated frequency
    is wrapped into [0, 1) before scaling.
    """
    return ((-f) % 1.0) * cfg.c / (2.0 * cfg.delta_f)


def range_to_freq(r: float, cfg: RadarConfig) -> float:
    f = -2.0 * cfg.delta_f * r / cfg.c
    return (f + 0.5) % 1.0 - 0.5


def doa_from_cov_freq(f: float, cfg: RadarConfig) -> float:
    """DOA from a frequency estimated on the conjugated column-side atoms."""
    g = -f
    g = (g + 0.5) % 1.0 - 0.5
    return freq_to_doa(g, cfg)


# --- MUSIC pseudo-spectrum ---


@dataclass
class SpectrumReport:
    """Scanned axis samples, pseudo-spectrum values, and extracted peaks."""

    axis: np.ndarray
    values: np.ndarray
    peak_axis: np.ndarray  # axis values at the L largest local maxima
    peak_freqs: np.ndarray  # matching normalized frequencies in [-1/2, 1/2)


def _noise_subspace(R: np.ndarray, L: int) -> np.ndarray:
    n = R.shape[0]
    _, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    return V[:, : n - L]


def music_spectrum(
    R: np.ndarray,
    cfg: RadarConfig,
    L: int,
    axis: str = "doa",
    samples: np.ndarray | None = None,
    conjugate_atoms: bool | None = None,
) -> SpectrumReport:
    """MUSIC pseudo-spectrum 1/||E_n^H a||^2 over a parameter grid.

    ``axis`` selects the scanned parameter: "doa" (default, 1-degree grid),
    "velocity" or "range". ``conjugate_atoms`` controls whether scan atoms
    are conjugated to match covariances built from the column-side Toeplitz
    generators; the default (None) conjugates exactly for the DOA axis,
    matching :func:`cov_from_danm2` / :func:`cov_from_ddanm` output.
    """
    rmax, vmax = ambiguity_limits(cfg)
    if axis == "doa":
        samples = np.deg2rad(np.arange(-89.0, 90.0, 1.0)) if samples is None else samples
        freqs = np.array([doa_to_freq(x, cfg) for x in samples])
        n = cfg.n_virtual
        conj = True if conjugate_atoms is None else conjugate_atoms
    elif axis == "velocity":
        samples = np.linspace(-vmax, vmax, 361, endpoint=False)[1:] if samples is None else samples
        freqs = np.array([velocity_to_freq(x, cfg) for x in samples])
        n = cfg.N
        conj = False if conjugate_atoms is None else conjugate_atoms
    elif axis == "range":
        samples = np.linspace(0.0, rmax, 360, endpoint=False) if samples is None else samples
        freqs = np.array([range_to_freq(x, cfg) for x in samples])
        n = cfg.M
        conj = False if conjugate_atoms is None else conjugate_atoms
    else:
        raise ValueError(f"unknown axis {axis!r}")
    if R.shape[0] != n:
        raise ValueError(f"covariance size {R.shape[0]} does not match axis {axis!r} (need {n})")

    E_n = _noise_subspace(R, L)
    idx = np.arange(n)
    atoms = np.exp(1j * 2.0 * np.pi * np.outer(idx, freqs))
    if conj:
        atoms = np.conj(atoms)
    denom = np.sum(np.abs(E_n.conj().T @ atoms) ** 2, axis=0)
    values = 1.0 / np.maximum(denom, 1e-300)

    interior = np.r_[False, (values[1:-1] >= values[:-2]) & (values[1:-1] > values[2:]), False]
    peak_idx = np.nonzero(interior)[0]
    if peak_idx.size == 0:
        peak_idx = np.array([int(np.argmax(values))])
    top = peak_idx[np.argsort(values[peak_idx])[::-1][:L]]
    top = np.sort(top)
    return SpectrumReport(
        axis=samples,
        values=values,
        peak_axis=samples[top],
        peak_freqs=freqs[top],
    )


# --- projection matching ---


def _range_search(
    residual: np.ndarray,
    cfg: RadarConfig,
    frame: FrameSelection,
    theta: float,
    v: float,
    n_grid: int = 1024,
) -> float:
    """Best range for a fixed (theta, v) by correlating the residual with the
    range atom over a wrapped grid, refined by a 3-point parabolic fit.

    The correlation reduces to an M-coefficient trigonometric polynomial in
    range because each snapshot row depends on range only through its carrier
    index.
    """
    m_idx, n_idx, p_idx = frame_indices(frame, cfg)
    g = residual @ np.conj(steer_rx(cfg, theta))
    phase_v = np.exp(-1j * 2.0 * np.pi * cfg.fc * 2.0 * n_idx * v * cfg.T0 / cfg.c)
    phase_t = np.exp(1j * 2.0 * np.pi * p_idx * cfg.fc * cfg.dT * np.sin(theta) / cfg.c)
    weights = np.conj(phase_v * phase_t) * g
    d = np.zeros(cfg.M, dtype=complex)
    np.add.at(d, m_idx, weights)

    rmax = cfg.c / (2.0 * cfg.delta_f)
    step = rmax / n_grid
    r_grid = np.arange(n_grid) * step
    E = np.exp(1j * 2.0 * np.pi * np.outer(r_grid, np.arange(cfg.M)) * cfg.delta_f * 2.0 / cfg.c)
    corr = np.abs(E @ d)
    j = int(np.argmax(corr))
    y0, y1, y2 = corr[(j - 1) % n_grid], corr[j], corr[(j + 1) % n_grid]
    denom = y0 - 2.0 * y1 + y2
    delta = 0.5 * (y0 - y2) / denom if abs(denom) > 1e-300 else 0.0
    delta = float(np.clip(delta, -0.5, 0.5))
    return float((r_grid[j] + delta * step) % rmax)


def _fit_atoms(Y: np.ndarray, atoms: list[np.ndarray]) -> tuple[np.ndarray, float, np.ndarray]:
    """Joint least squares of the vectorized snapshot on the atom set."""
    y = Y.ravel(order="F")
    A = np.stack(atoms, axis=1)
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ beta
    return beta, float(np.vdot(res, res).real), res


def match_and_range(
    Y: np.ndarray,
    cfg: RadarConfig,
    frame: FrameSelection,
    thetas,
    vels,
    L: int,
    cap: float = 1e6,
    n_grid: int = 1024,
) -> EstimateSet:
    """Pair DOA and velocity candidates and estimate ranges by projection.

    Every injective assignment of L DOA candidates to L velocity candidates
    is scored: ranges are found per target by a 1D correlation search on the
    running residual, amplitudes by joint least squares, and the assignment
    with the smallest squared residual wins. Ties keep the lexicographically
    first combination.
    """
    thetas = list(thetas)
    vels = list(vels)
    if not thetas or not vels:
        raise ValueError("candidate sets must be non-empty")
    n_comb = (
        math.comb(len(thetas), L) * math.comb(len(vels), L) * math.factorial(L)
        if len(thetas) >= L and len(vels) >= L
        else 0
    )
    if n_comb > cap:
        raise CombinatorialBlowup(f"{n_comb} combinations exceed cap {cap:g}")
    if n_comb == 0:
        raise ValueError(f"need at least L={L} candidates on each axis")

    best = None
    for th_subset in itertools.combinations(range(len(thetas)), L):
        for v_perm in itertools.permutations(range(len(vels)), L):
            atoms = []
            entries = []
            residual_mat = Y.copy()
            for slot in range(L):
                theta = thetas[th_subset[slot]]
                v = vels[v_perm[slot]]
                r = _range_search(residual_mat, cfg, frame, theta, v, n_grid)
                atoms.append(measurement_atom(cfg, frame, r, v, theta))
                entries.append((r, v, theta))
                beta, res_sq, res_vec = _fit_atoms(Y, atoms)
                residual_mat = res_vec.reshape(Y.shape, order="F")
            if best is None or res_sq < best[0]:
                best = (res_sq, entries, beta)
    res_sq, entries, beta = best
    ests = [Estimate(r=r, v=v, theta=th, beta=complex(b)) for (r, v, th), b in zip(entries, beta)]
    return EstimateSet(entries=ests, residual=res_sq)


def match_3d(
    Y: np.ndarray,
    cfg: RadarConfig,
    frame: FrameSelection,
    ranges,
    thetas,
    vels,
    L: int,
    cap: float = 1e6,
) -> EstimateSet:
    """Pair range, DOA and velocity candidates by exhaustive projection.

    Like :func:`match_and_range` but ranges are drawn from a candidate set
    instead of searched, so each assignment is scored by a single joint
    least-squares fit.
    """
    ranges = list(ranges)
    thetas = list(thetas)
    vels = list(vels)
    if len(ranges) < L or len(thetas) < L or len(vels) < L:
        raise ValueError(f"need at least L={L} candidates on every axis")
    n_comb = (
        math.comb(len(thetas), L)
        * math.perm(len(vels), L)
        * math.perm(len(ranges), L)
    )
    if n_comb > cap:
        raise CombinatorialBlowup(f"{n_comb} combinations exceed cap {cap:g}")

    best = None
    for th_subset in itertools.combinations(range(len(thetas)), L):
        for v_perm in itertools.permutations(range(len(vels)), L):
            for r_perm in itertools.permutations(range(len(ranges)), L):
                atoms = [
                    measurement_atom(
                        cfg, frame, ranges[r_perm[s]], vels[v_perm[s]], thetas[th_subset[s]]
                    )
                    for s in range(L)
                ]
                beta, res_sq, _ = _fit_atoms(Y, atoms)
                if best is None or res_sq < best[0]:
                    entries = [
                        (ranges[r_perm[s]], vels[v_perm[s]], thetas[th_subset[s]])
                        for s in range(L)
                    ]
                    best = (res_sq, entries, beta)
    res_sq, entries, beta = best
    ests = [Estimate(r=r, v=v, theta=th, beta=complex(b)) for (r, v, th), b in zip(entries, beta)]
    return EstimateSet(entries=ests, residual=res_sq)
