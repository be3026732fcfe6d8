import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncnet import mapping
from ncnet.mapping import ActivityPattern, forward_map, inverse_map, partition_index


def forward_oracle(bits):
    """Direct transcription on bit lists (position 1 first)."""
    L = len(bits)
    if not any(bits):
        return list(bits)
    i = max(k for k in range(L) if bits[k]) + 1  # right-most 1, 1-based
    m = L - i + 1
    return [0] * (m - 1) + [1] + list(bits[: L - m])


def test_forward_examples():
    assert str(forward_map("0000")) == "0000"
    assert str(forward_map("1010")) == "0110"
    assert str(inverse_map("0110")) == "1010"


def test_partition_index_examples():
    assert partition_index("1000") == 1
    assert partition_index("0010") == 3
    assert partition_index("0000") == 5


def test_pattern_validation():
    with pytest.raises(ValueError):
        ActivityPattern(16, 4)
    with pytest.raises(ValueError):
        ActivityPattern.from_bits("0120")
    with pytest.raises(ValueError):
        ActivityPattern(0, 65)
    p = ActivityPattern.from_bits([1, 0, 1])
    assert p.bits == (1, 0, 1) and p.weight == 2 and p.value == 5


@pytest.mark.parametrize("L", range(1, 11))
def test_forward_matches_oracle_exhaustively(L):
    for bits in itertools.product((0, 1), repeat=L):
        assert list(forward_map(list(bits)).bits) == forward_oracle(bits)


def test_round_trip_exhaustive_L10():
    for v in range(1 << 10):
        b = ActivityPattern(v, 10)
        assert inverse_map(forward_map(b)) == b
        assert forward_map(inverse_map(b)) == b


@given(st.integers(min_value=1, max_value=64).flatmap(
    lambda L: st.tuples(st.just(L), st.integers(min_value=0, max_value=(1 << L) - 1))
))
def test_round_trip_property(arg):
    L, v = arg
    b = ActivityPattern(v, L)
    f = forward_map(b)
    assert inverse_map(f) == b
    assert f.weight == b.weight
    if v:
        m = partition_index(f)
        assert list(f.bits) == [0] * (m - 1) + [1] + list(b.bits[: L - m])


@pytest.mark.parametrize("L", [1, 5, 12, 16])
def test_vectorised_agrees_with_scalar(L):
    rng = np.random.default_rng(L)
    words = rng.integers(0, 1 << L, size=500)
    fw = mapping.forward_map_words(words, L)
    iw = mapping.inverse_map_words(words, L)
    for w, f, i in zip(words, fw, iw):
        assert forward_map(ActivityPattern(int(w), L)).value == f
        assert inverse_map(ActivityPattern(int(w), L)).value == i
        assert partition_index(ActivityPattern(int(w), L)) == mapping.partition_index_words(np.array([w]), L)[0]


def test_popcount():
    w = np.array([0, 1, 3, 255, 2**40 - 1])
    assert list(mapping.popcount_words(w)) == [0, 1, 2, 8, 40]


def test_audit_all_lengths():
    results = mapping.audit_mapping(16)
    assert len(results) == 16
    assert all(r.passed for r in results)
    assert sum(r.n_words for r in results) == 2**17 - 2
    assert results[0].line().endswith("PASS")


def test_partition_sets_cover_all_words():
    L = 8
    idx = mapping.partition_index_words(np.arange(1 << L), L)
    counts = np.bincount(idx, minlength=L + 2)[1:]
    assert list(counts) == [2 ** (L - m) for m in range(1, L + 1)] + [1]


def test_leading_one_pmf():
    assert list(mapping.leading_one_pmf(0.5, 3)) == [0.5, 0.25, 0.125, 0.125]
    pm = mapping.leading_one_pmf(1.0, 5)
    assert pm[0] == 1.0 and np.all(pm[1:] == 0.0)
    for p in (0.01, 0.3, 0.77):
        pm = mapping.leading_one_pmf(p, 20)
        assert math.fsum(pm) == pytest.approx(1.0, abs=1e-15)
        assert pm[-1] == pytest.approx((1 - p) ** 20, rel=1e-9)
    with pytest.raises(ValueError):
        mapping.leading_one_pmf(0.0, 3)


def test_leading_one_pmf_monte_carlo():
    p, L, n = 0.2, 12, 1_000_000
    rng = np.random.default_rng(2024)
    bits = rng.random((n, L)) < p
    words = bits.astype(np.int64) @ (1 << np.arange(L - 1, -1, -1))
    m = mapping.partition_index_words(mapping.forward_map_words(words, L), L)
    emp = np.bincount(m, minlength=L + 2)[1:] / n
    pmf = mapping.leading_one_pmf(p, L)
    se = np.sqrt(pmf * (1 - pmf) / n)
    assert np.all(np.abs(emp - pmf) <= 4 * se + 1e-12)


@pytest.mark.parametrize("L", [4, 8, 12])
def test_distribution_equality(L):
    for p in (0.1, 0.5, 0.83):
        assert mapping.distribution_equality_gap(p, L) == 0.0


@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.9, 1.0])
def test_geometric_identities(p):
    g = mapping.geometric_sum_identities(p)
    assert abs(g["mass_partial"] - g["mass_closed"]) <= 1e-12
    assert abs(g["mean_partial"] - g["mean_closed"]) <= 1e-12
