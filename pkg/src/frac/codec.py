"""Per-pulse index-modulation codec.

Each pulse embeds bits in four building blocks, consumed in this fixed order:

1. phase-modulation symbols  -- floor(K*log2(J)) bits, base-J digits,
2. frequency subset          -- floor(log2 C(M, K)) bits, colexicographic rank,
3. antenna subset            -- floor(log2 C(P, K)) bits, colexicographic rank,
4. waveform-to-antenna map   -- floor(log2 K!) bits, Lehmer code.

Subsets use the combinatorial number system in colexicographic order;
permutations use the Lehmer code. Bit fields are big-endian (first bit
consumed is the most significant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import RadarConfig
from .errors import InvalidSelection, LengthMismatch


@dataclass(frozen=True)
class PulseSelection:
    """Active antennas, carrier frequencies, their pairing, and PM symbols for one pulse.

    ``perm[k]`` gives the index into ``antennas`` assigned to the k-th chosen
    frequency, so the k-th transmission uses antenna ``antennas[perm[k]]`` at
    frequency index ``frequencies[k]``. ``phases[k]`` is a PM symbol index in
    [0, J), mapped to the phase 2*pi*j/J.
    """

    antennas: tuple[int, ...]
    frequencies: tuple[int, ...]
    perm: tuple[int, ...]
    phases: tuple[int, ...]

    def antenna_of(self, k: int) -> int:
        return self.antennas[self.perm[k]]

    def frequency_of(self, k: int) -> int:
        return self.frequencies[k]


@dataclass(frozen=True)
class FrameSelection:
    """The N per-pulse selections of one coherent frame, plus the PM alphabet size."""

    pulses: tuple[PulseSelection, ...]
    J: int = 2


def validate_pulse(sel: PulseSelection, cfg: RadarConfig, J: int) -> None:
    K = cfg.K
    if not (len(sel.antennas) == len(sel.frequencies) == len(sel.perm) == len(sel.phases) == K):
        raise InvalidSelection("all selection fields must have length K")
    if list(sel.antennas) != sorted(set(sel.antennas)) or not all(0 <= p < cfg.P for p in sel.antennas):
        raise InvalidSelection(f"antennas must be sorted distinct indices in [0, {cfg.P})")
    if list(sel.frequencies) != sorted(set(sel.frequencies)) or not all(
        0 <= m < cfg.M for m in sel.frequencies
    ):
        raise InvalidSelection(f"frequencies must be sorted distinct indices in [0, {cfg.M})")
    if sorted(sel.perm) != list(range(K)):
        raise InvalidSelection("perm must be a permutation of 0..K-1")
    if not all(0 <= j < J for j in sel.phases):
        raise InvalidSelection(f"phase symbols must lie in [0, {J})")


def validate_frame(frame: FrameSelection, cfg: RadarConfig) -> None:
    if len(frame.pulses) != cfg.N:
        raise InvalidSelection(f"frame must contain N={cfg.N} pulses, got {len(frame.pulses)}")
    for sel in frame.pulses:
        validate_pulse(sel, cfg, frame.J)


def _field_widths(P: int, M: int, K: int, J: int) -> tuple[int, int, int, int]:
    """Bit widths of (PM, frequency-subset, antenna-subset, permutation) fields."""
    if not (1 <= K <= min(M, P)) or J < 1:
        raise InvalidSelection(f"need 1 <= K <= min(M, P) and J >= 1; got P={P}, M={M}, K={K}, J={J}")
    if math.comb(P, K) > 2**63 or math.comb(M, K) > 2**63 or math.factorial(K) > 2**63:
        raise OverflowError("combinatorial block count exceeds 2**63")
    n_pm = math.floor(K * math.log2(J)) if J > 1 else 0
    n_freq = math.comb(M, K).bit_length() - 1
    n_ant = math.comb(P, K).bit_length() - 1
    n_perm = math.factorial(K).bit_length() - 1
    return n_pm, n_freq, n_ant, n_perm


def bits_per_pulse(P: int, M: int, K: int, J: int) -> int:
    """Total bits conveyed per pulse across the four index-modulation blocks."""
    return sum(_field_widths(P, M, K, J))


def subset_rank(subset) -> int:
    """Colexicographic rank of a sorted subset {c_0 < c_1 < ...}: sum of C(c_i, i+1)."""
    return sum(math.comb(c, i + 1) for i, c in enumerate(subset))


def subset_unrank(rank: int, n: int, k: int) -> tuple[int, ...]:
    """Inverse of subset_rank over k-subsets of {0..n-1}."""
    if not (0 <= rank < math.comb(n, k)):
        raise InvalidSelection(f"subset rank {rank} out of range for C({n},{k})")
    out = []
    for i in range(k, 0, -1):
        # largest c with C(c, i) <= rank
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        out.append(c)
        rank -= math.comb(c, i)
    return tuple(reversed(out))


def perm_rank(perm) -> int:
    """Lehmer-code rank of a permutation of 0..K-1 (identity maps to 0)."""
    k = len(perm)
    rank = 0
    for i in range(k):
        smaller = sum(1 for j in range(i + 1, k) if perm[j] < perm[i])
        rank += smaller * math.factorial(k - 1 - i)
    return rank


def perm_unrank(rank: int, k: int) -> tuple[int, ...]:
    """Inverse of perm_rank."""
    if not (0 <= rank < math.factorial(k)):
        raise InvalidSelection(f"permutation rank {rank} out of range for {k}!")
    pool = list(range(k))
    out = []
    for i in range(k, 0, -1):
        f = math.factorial(i - 1)
        idx, rank = divmod(rank, f)
        out.append(pool.pop(idx))
    return tuple(out)


def _bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def _int_to_bits(value: int, width: int) -> str:
    if value >= (1 << width) and width >= 0:
        raise InvalidSelection(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def encode(bits: str, cfg: RadarConfig, J: int = 2) -> FrameSelection:
    """Map a bit string of length N * bits_per_pulse onto a frame of pulse selections."""
    bpp = bits_per_pulse(cfg.P, cfg.M, cfg.K, J)
    if len(bits) != cfg.N * bpp:
        raise LengthMismatch(f"expected {cfg.N * bpp} bits, got {len(bits)}")
    if any(ch not in "01" for ch in bits):
        raise LengthMismatch("bit string must contain only '0' and '1'")
    n_pm, n_freq, n_ant, n_perm = _field_widths(cfg.P, cfg.M, cfg.K, J)
    pulses = []
    pos = 0
    for _ in range(cfg.N):
        pm_val = _bits_to_int(bits[pos : pos + n_pm])
        pos += n_pm
        freq_rank = _bits_to_int(bits[pos : pos + n_freq])
        pos += n_freq
        ant_rank = _bits_to_int(bits[pos : pos + n_ant])
        pos += n_ant
        perm_val = _bits_to_int(bits[pos : pos + n_perm])
        pos += n_perm

        phases = []
        v = pm_val
        for _ in range(cfg.K):
            v, digit = divmod(v, J)
            phases.append(digit)
        phases.reverse()  # big-endian: first symbol holds the most significant digit

        pulses.append(
            PulseSelection(
                antennas=subset_unrank(ant_rank, cfg.P, cfg.K),
                frequencies=subset_unrank(freq_rank, cfg.M, cfg.K),
                perm=perm_unrank(perm_val, cfg.K),
                phases=tuple(phases),
            )
        )
    return FrameSelection(pulses=tuple(pulses), J=J)


def decode(frame: FrameSelection, cfg: RadarConfig, J: int | None = None) -> str:
    """Exact inverse of :func:`encode`.

    Raises InvalidSelection if the frame contains indices out of range or a
    block whose rank is unreachable within its floored bit width.
    """
    J = frame.J if J is None else J
    validate_frame(FrameSelection(pulses=frame.pulses, J=J), cfg)
    n_pm, n_freq, n_ant, n_perm = _field_widths(cfg.P, cfg.M, cfg.K, J)
    out = []
    for sel in frame.pulses:
        pm_val = 0
        for digit in sel.phases:
            pm_val = pm_val * J + digit
        out.append(_int_to_bits(pm_val, n_pm))
        out.append(_int_to_bits(subset_rank(sel.frequencies), n_freq))
        out.append(_int_to_bits(subset_rank(sel.antennas), n_ant))
        out.append(_int_to_bits(perm_rank(sel.perm), n_perm))
    return "".join(out)


def random_bits(n: int, rng) -> str:
    """n random bits from a numpy Generator, as a '01' string."""
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=n))


# --- text round-trip format used by the CLI and snapshot sidecar files ---


def frame_to_text(frame: FrameSelection) -> str:
    """One pulse per line: ``p:0,1 m:0,1 perm:0,1 phi:0,0``."""
    lines = []
    for sel in frame.pulses:
        lines.append(
            "p:%s m:%s perm:%s phi:%s"
            % (
                ",".join(map(str, sel.antennas)),
                ",".join(map(str, sel.frequencies)),
                ",".join(map(str, sel.perm)),
                ",".join(map(str, sel.phases)),
            )
        )
    return "\n".join(lines) + "\n"


def frame_from_text(text: str, J: int = 2) -> FrameSelection:
    pulses = []
    for line in text.strip().splitlines():
        fields = {}
        for token in line.split():
            key, _, value = token.partition(":")
            fields[key] = tuple(int(x) for x in value.split(",")) if value else ()
        try:
            pulses.append(
                PulseSelection(
                    antennas=fields["p"],
                    frequencies=fields["m"],
                    perm=fields["perm"],
                    phases=fields["phi"],
                )
            )
        except KeyError as exc:
            raise InvalidSelection(f"malformed frame line: {line!r}") from exc
    return FrameSelection(pulses=tuple(pulses), J=J)


# --- hexadecimal wrapper used by the CLI ---


def hex_to_bits(hex_string: str, n_bits: int) -> str:
    """Big-endian hex to a bit string of exactly n_bits; trailing pad bits must be zero."""
    hex_string = hex_string.strip()
    expected = (n_bits + 3) // 4
    if len(hex_string) != expected:
        raise LengthMismatch(f"expected {expected} hex digits for {n_bits} bits, got {len(hex_string)}")
    all_bits = "".join(format(int(ch, 16), "04b") for ch in hex_string)
    bits, pad = all_bits[:n_bits], all_bits[n_bits:]
    if any(ch == "1" for ch in pad):
        raise LengthMismatch("nonzero padding bits in hex string")
    return bits


def bits_to_hex(bits: str) -> str:
    pad = (-len(bits)) % 4
    padded = bits + "0" * pad
    return "".join(format(int(padded[i : i + 4], 2), "x") for i in range(0, len(padded), 4))
