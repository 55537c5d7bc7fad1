"""Radar system configuration, scene description, and shared domain types.

All angles are stored in radians internally; the command-line layer converts
to and from degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig

C_LIGHT = 2.99792458e8


@dataclass(frozen=True)
class RadarConfig:
    """Array and waveform constants of the transmit/receive chain.

    Parameters
    ----------
    P : int
        Number of transmit array elements.
    Qr : int
        Number of receive array elements.
    K : int
        Number of simultaneously active transmitters per pulse.
    M : int
        Number of selectable carrier frequencies.
    N : int
        Number of pulses per coherent frame.
    fc : float
        Carrier start frequency in Hz.
    delta_f : float
        Carrier frequency step in Hz.
    T0 : float
        Pulse repetition interval in s.
    dR : float
        Receive element spacing in m. Defaults to half a wavelength.
    dT : float
        Transmit element spacing in m. Must equal ``Qr * dR`` so that the
        transmit/receive Kronecker product forms a uniform virtual array.
    c : float
        Propagation speed in m/s.
    """

    P: int = 8
    Qr: int = 2
    K: int = 4
    M: int = 4
    N: int = 20
    fc: float = 77e9
    delta_f: float = 2.5e6
    T0: float = 30e-6
    dR: float | None = None
    dT: float | None = None
    c: float = C_LIGHT

    def __post_init__(self):
        if self.dR is None:
            object.__setattr__(self, "dR", 0.5 * self.c / self.fc)
        if self.dT is None:
            object.__setattr__(self, "dT", self.Qr * self.dR)

    @property
    def wavelength(self) -> float:
        return self.c / self.fc

    @property
    def n_virtual(self) -> int:
        """Size of the virtual receive aperture P * Qr."""
        return self.P * self.Qr

    @property
    def n_rows(self) -> int:
        """Row count N * K of a slow-time snapshot."""
        return self.N * self.K

    @property
    def n_reference_rows(self) -> int:
        """Row count N * M * P of the full reference matrix."""
        return self.N * self.M * self.P


@dataclass(frozen=True)
class Target:
    """A point target: range (m), radial velocity (m/s), DOA (rad), complex amplitude."""

    r: float
    v: float
    theta: float
    beta: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class Scene:
    """A set of targets plus per-entry complex noise variance and RNG seed."""

    targets: tuple[Target, ...]
    sigma2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def L(self) -> int:
        return len(self.targets)


@dataclass
class Estimate:
    """One estimated target record."""

    r: float
    v: float
    theta: float
    beta: complex


@dataclass
class EstimateSet:
    """Matched (range, velocity, DOA, amplitude) records with fit residual.

    Entries are kept sorted by descending amplitude magnitude; ``residual``
    is the squared Frobenius misfit of the fitted model.
    """

    entries: list[Estimate]
    residual: float

    def __post_init__(self):
        self.entries = sorted(self.entries, key=lambda e: -abs(e.beta))
        if not math.isfinite(self.residual) or self.residual < 0:
            raise InvalidConfig(f"residual must be finite and non-negative, got {self.residual}")

    def __len__(self) -> int:
        return len(self.entries)

    def params(self):
        """Arrays (r, v, theta) over entries, in stored order."""
        return (
            np.array([e.r for e in self.entries]),
            np.array([e.v for e in self.entries]),
            np.array([e.theta for e in self.entries]),
        )


def validate_config(cfg: RadarConfig) -> None:
    """Check every RadarConfig invariant; raise InvalidConfig naming the first violation."""
    if not (1 <= cfg.K <= min(cfg.M, cfg.P)):
        raise InvalidConfig(f"K must satisfy 1 <= K <= min(M, P); got K={cfg.K}, M={cfg.M}, P={cfg.P}")
    if cfg.N < 2:
        raise InvalidConfig(f"N must be >= 2; got {cfg.N}")
    if cfg.Qr < 1:
        raise InvalidConfig(f"Qr must be >= 1; got {cfg.Qr}")
    for name in ("fc", "delta_f", "T0", "dR", "dT", "c"):
        value = getattr(cfg, name)
        if not (value > 0) or not math.isfinite(value):
            raise InvalidConfig(f"{name} must be strictly positive; got {value}")
    if not math.isclose(cfg.dT, cfg.Qr * cfg.dR, rel_tol=1e-9):
        raise InvalidConfig(
            f"virtual aperture requires dT = Qr*dR; got dT={cfg.dT}, Qr*dR={cfg.Qr * cfg.dR}"
        )


def ambiguity_limits(cfg: RadarConfig) -> tuple[float, float]:
    """Unambiguous (max range, max |velocity|) set by steering-phase periodicity.

    rmax = c / (2 delta_f); vmax = c / (4 fc T0).
    """
    return cfg.c / (2.0 * cfg.delta_f), cfg.c / (4.0 * cfg.fc * cfg.T0)


def validate_scene(scene: Scene, cfg: RadarConfig) -> None:
    """Check Scene and per-target invariants against a (valid) configuration."""
    if scene.sigma2 < 0:
        raise InvalidConfig(f"noise variance must be >= 0; got {scene.sigma2}")
    if scene.L < 1:
        raise InvalidConfig("scene must contain at least one target")
    if scene.L >= min(cfg.M, cfg.N, cfg.n_virtual):
        raise InvalidConfig(
            f"target count L={scene.L} must be < min(M, N, P*Qr)="
            f"{min(cfg.M, cfg.N, cfg.n_virtual)} for identifiability"
        )
    rmax, vmax = ambiguity_limits(cfg)
    for i, t in enumerate(scene.targets):
        if not (0 <= t.r < rmax):
            raise InvalidConfig(f"target {i}: range {t.r} outside [0, {rmax})")
        if not (abs(t.v) < vmax):
            raise InvalidConfig(f"target {i}: velocity {t.v} outside (-{vmax}, {vmax})")
        if not (abs(t.theta) < math.pi / 2):
            raise InvalidConfig(f"target {i}: DOA {t.theta} outside (-pi/2, pi/2)")


def default_scene(sigma2: float = 0.0, seed: int = 0) -> Scene:
    """The default three-target benchmark scene (15/30/45 m, -30/10/40 deg, 10/-20/20 m/s).

    ``sigma2`` is stored as given; callers translating an SNR use
    :func:`frac.model.snr_to_sigma2` once a frame is known.
    """
    targets = (
        Target(r=15.0, v=10.0, theta=math.radians(-30.0)),
        Target(r=30.0, v=-20.0, theta=math.radians(10.0)),
        Target(r=45.0, v=20.0, theta=math.radians(40.0)),
    )
    return Scene(targets=targets, sigma2=sigma2, seed=seed)
