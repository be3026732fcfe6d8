"""Weight-preserving bijection on binary activity patterns.

Words of length L are stored as integers with position 1 (the left-most
symbol) in the most significant bit, so ``0b1010`` with L = 4 is the word
1010. The forward map sends a nonzero word b whose right-most 1 sits at
position i to [0^(m-1), 1, b_1 .. b_(L-m)] with m = L - i + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_LENGTH = 64


@dataclass(frozen=True)
class ActivityPattern:
    value: int
    length: int
    weight: int = field(init=False)

    def __post_init__(self):
        if not 1 <= self.length <= MAX_LENGTH:
            raise ValueError(f"length must be in 1..{MAX_LENGTH}, got {self.length}")
        if not 0 <= self.value < (1 << self.length):
            raise ValueError(f"value {self.value} does not fit in {self.length} bits")
        object.__setattr__(self, "weight", bin(self.value).count("1"))

    @classmethod
    def from_bits(cls, bits) -> "ActivityPattern":
        if isinstance(bits, str):
            bits = [int(ch) for ch in bits]
        bits = list(bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        return cls(int("".join(map(str, bits)) or "0", 2), len(bits))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(int(ch) for ch in format(self.value, f"0{self.length}b"))

    def __str__(self):
        return format(self.value, f"0{self.length}b")


def _pattern(b) -> ActivityPattern:
    return b if isinstance(b, ActivityPattern) else ActivityPattern.from_bits(b)


def forward_map(b) -> ActivityPattern:
    b = _pattern(b)
    if b.value == 0:
        return b
    L = b.length
    m = (b.value & -b.value).bit_length()  # trailing zeros + 1
    return ActivityPattern((1 << (L - m)) | (b.value >> m), L)


def inverse_map(bt) -> ActivityPattern:
    bt = _pattern(bt)
    if bt.value == 0:
        return bt
    L = bt.length
    m = L - bt.value.bit_length() + 1  # position of the left-most 1
    tail = bt.value & ((1 << (L - m)) - 1)
    return ActivityPattern((tail << m) | (1 << (m - 1)), L)


def partition_index(b) -> int:
    """Position of the left-most 1, or L + 1 for the all-zero word."""
    b = _pattern(b)
    if b.value == 0:
        return b.length + 1
    return b.length - b.value.bit_length() + 1


def leading_one_pmf(p: float, L: int) -> np.ndarray:
    """Pr[leading 1 at m] for m = 1..L+1 under i.i.d. Ber(p) symbols."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if L < 1:
        raise ValueError("L must be >= 1")
    m = np.arange(1, L + 1)
    pmf = np.empty(L + 1)
    pmf[:L] = p * (1.0 - p) ** (m - 1)
    pmf[L] = 1.0 - math.fsum(pmf[:L])
    return pmf


# --- vectorised versions for exhaustive checks --------------------------------


def _bit_length(w: np.ndarray) -> np.ndarray:
    # exact for w < 2**53: frexp returns the binary exponent
    return np.frexp(w.astype(np.float64))[1].astype(np.int64)


def forward_map_words(words: np.ndarray, L: int) -> np.ndarray:
    w = np.asarray(words, dtype=np.int64)
    if L > 52:
        raise ValueError("vectorised map supports L <= 52")
    low = w & -w
    m = _bit_length(low)
    out = np.where(w == 0, 0, (np.int64(1) << np.maximum(L - m, 0)) | (w >> m))
    return out


def inverse_map_words(words: np.ndarray, L: int) -> np.ndarray:
    w = np.asarray(words, dtype=np.int64)
    if L > 52:
        raise ValueError("vectorised map supports L <= 52")
    m = L - _bit_length(w) + 1
    tail = w & ((np.int64(1) << np.maximum(L - m, 0)) - 1)
    out = np.where(w == 0, 0, (tail << m) | (np.int64(1) << np.maximum(m - 1, 0)))
    return out


def partition_index_words(words: np.ndarray, L: int) -> np.ndarray:
    return L - _bit_length(np.asarray(words, dtype=np.int64)) + 1


def popcount_words(words: np.ndarray) -> np.ndarray:
    w = np.asarray(words, dtype=np.uint64)
    return np.unpackbits(w.view(np.uint8).reshape(-1, 8), axis=1).sum(axis=1)


@dataclass
class AuditResult:
    length: int
    n_words: int
    bijective: bool
    weight_preserving: bool
    structure: bool
    round_trip: bool

    @property
    def passed(self) -> bool:
        return self.bijective and self.weight_preserving and self.structure and self.round_trip

    def line(self) -> str:
        flags = ", ".join(
            f"{k}={'ok' if getattr(self, k) else 'FAIL'}"
            for k in ("bijective", "weight_preserving", "structure", "round_trip")
        )
        return f"L={self.length:2d} words={self.n_words:6d} {flags} -> {'PASS' if self.passed else 'FAIL'}"


def audit_length(L: int) -> AuditResult:
    """Exhaustively check the forward map on all 2**L words."""
    words = np.arange(1 << L, dtype=np.int64)
    image = forward_map_words(words, L)
    bijective = bool(np.array_equal(np.sort(image), words))
    weight = bool(np.array_equal(popcount_words(image), popcount_words(words)))
    # nonzero b maps to [0^(m-1), 1, b_1..b_(L-m)] with m its partition index
    nz = words > 0
    m = partition_index_words(image[nz], L)
    expected = (np.int64(1) << (L - m)) | (words[nz] >> m)
    structure = bool(np.array_equal(image[nz], expected)) and bool(image[0] == 0)
    round_trip = bool(np.array_equal(inverse_map_words(image, L), words))
    return AuditResult(L, int(words.size), bijective, weight, structure, round_trip)


def audit_mapping(max_length: int = 16) -> list[AuditResult]:
    return [audit_length(L) for L in range(1, max_length + 1)]


def distribution_equality_gap(p: float, L: int) -> float:
    """max over words |Pr[A = f(a)] - Pr[A = a]| under i.i.d. Ber(p), by enumeration."""
    words = np.arange(1 << L, dtype=np.int64)
    w = popcount_words(words).astype(float)
    wf = popcount_words(forward_map_words(words, L)).astype(float)
    prob = p**w * (1.0 - p) ** (L - w)
    prob_f = p**wf * (1.0 - p) ** (L - wf)
    return float(np.max(np.abs(prob - prob_f)))


def geometric_sum_identities(p: float, n_terms: int = 10_000) -> dict[str, float]:
    """Partial sums vs closed forms for sum p(1-p)^(m-1) and sum p(1-p)^(m-1)(m-1)."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    m = np.arange(1, n_terms + 1)
    w = p * (1.0 - p) ** (m - 1)
    return {
        "mass_partial": math.fsum(w),
        "mass_closed": 1.0,
        "mean_partial": math.fsum(w * (m - 1)),
        "mean_closed": (1.0 - p) / p,
    }
