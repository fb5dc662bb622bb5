import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbvgraph.lattice import (
    LatticeSizeError,
    dense_mobius_matrix,
    dense_zeta_matrix,
    mask_of,
    mobius_transform,
    nodes_of,
    popcounts,
    subset_parity_split,
    zeta_transform,
)

# reference lattice matrices, rows/columns ordered (0, 1, 2, 3, 12, 13, 23, 123)
CARDINALITY_ORDER = [(), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3)]
REFERENCE_ZETA = np.array(
    [
        [1, 1, 1, 1, 1, 1, 1, 1],
        [0, 1, 0, 0, 1, 1, 0, 1],
        [0, 0, 1, 0, 1, 0, 1, 1],
        [0, 0, 0, 1, 0, 1, 1, 1],
        [0, 0, 0, 0, 1, 0, 0, 1],
        [0, 0, 0, 0, 0, 1, 0, 1],
        [0, 0, 0, 0, 0, 0, 1, 1],
        [0, 0, 0, 0, 0, 0, 0, 1],
    ]
)
REFERENCE_MOBIUS = np.array(
    [
        [1, -1, -1, -1, 1, 1, 1, -1],
        [0, 1, 0, 0, -1, -1, 0, 1],
        [0, 0, 1, 0, -1, 0, -1, 1],
        [0, 0, 0, 1, 0, -1, -1, 1],
        [0, 0, 0, 0, 1, 0, 0, -1],
        [0, 0, 0, 0, 0, 1, 0, -1],
        [0, 0, 0, 0, 0, 0, 1, -1],
        [0, 0, 0, 0, 0, 0, 0, 1],
    ]
)


def brute_zeta_matrix(p):
    n = 1 << p
    return np.array([[1 if (r & c) == r else 0 for c in range(n)] for r in range(n)])


def brute_mobius_matrix(p):
    n = 1 << p
    out = np.zeros((n, n), dtype=int)
    for r in range(n):
        for c in range(n):
            if (r & c) == r:
                out[r, c] = (-1) ** bin(c & ~r).count("1")
    return out


def cardinality_permutation():
    return [mask_of(s) for s in CARDINALITY_ORDER]


class TestMasks:
    def test_round_trip(self):
        assert mask_of([1, 3]) == 0b101
        assert nodes_of(0b101) == (1, 3)
        assert nodes_of(0) == ()

    def test_rejects_zero_label(self):
        with pytest.raises(ValueError):
            mask_of([0])

    def test_popcounts(self):
        assert popcounts(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


class TestZeta:
    def test_indicator_of_empty_set(self):
        assert zeta_transform(np.array([1, 0, 0, 0])).tolist() == [1, 1, 1, 1]

    def test_indicator_of_singleton(self):
        assert zeta_transform(np.array([0, 1, 0, 0])).tolist() == [0, 1, 0, 1]

    def test_input_untouched(self):
        f = np.arange(8.0)
        zeta_transform(f)
        assert f.tolist() == list(range(8))

    def test_inplace(self):
        f = np.arange(8)
        out = zeta_transform(f, inplace=True)
        assert out is f
        assert f[-1] == 28

    @pytest.mark.parametrize("p", range(0, 9))
    def test_matches_dense_oracle_exactly(self, p):
        rng = np.random.default_rng(p)
        f = rng.integers(-50, 50, size=1 << p)
        assert np.array_equal(zeta_transform(f), brute_zeta_matrix(p).T @ f)
        assert np.array_equal(mobius_transform(f), brute_mobius_matrix(p).T @ f)

    def test_top_entry_is_total(self):
        f = np.random.default_rng(1).normal(size=64)
        assert zeta_transform(f)[-1] == pytest.approx(f.sum(), abs=1e-12)

    def test_size_cap(self):
        with pytest.raises(LatticeSizeError):
            zeta_transform(np.zeros(16), max_p=3)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            mobius_transform(np.zeros(6))


class TestMobius:
    def test_inverse_example(self):
        assert mobius_transform(np.array([1, 1, 1, 1])).tolist() == [1, 0, 0, 0]

    @pytest.mark.parametrize("p", range(1, 11))
    def test_round_trip(self, p):
        rng = np.random.default_rng(100 + p)
        for _ in range(100 if p <= 8 else 10):
            f = rng.normal(size=1 << p)
            assert np.max(np.abs(mobius_transform(zeta_transform(f)) - f)) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_round_trip_property(self, p, seed):
        f = np.random.default_rng(seed).uniform(-1, 1, size=1 << p)
        assert np.max(np.abs(zeta_transform(mobius_transform(f)) - f)) < 1e-12


class TestDenseMatrices:
    def test_p1_blocks(self):
        assert dense_zeta_matrix(1).tolist() == [[1, 1], [0, 1]]
        assert dense_mobius_matrix(1).tolist() == [[1, -1], [0, 1]]

    def test_p3_reference_matrices_after_permutation(self):
        perm = cardinality_permutation()
        assert perm == [0, 1, 2, 4, 3, 5, 6, 7]
        z = dense_zeta_matrix(3)[np.ix_(perm, perm)]
        m = dense_mobius_matrix(3)[np.ix_(perm, perm)]
        assert np.array_equal(z, REFERENCE_ZETA)
        assert np.array_equal(m, REFERENCE_MOBIUS)

    @pytest.mark.parametrize("p", [0, 1, 2, 5, 8])
    def test_match_subset_definition(self, p):
        assert np.array_equal(dense_zeta_matrix(p), brute_zeta_matrix(p))
        assert np.array_equal(dense_mobius_matrix(p), brute_mobius_matrix(p))

    @pytest.mark.parametrize("p", range(0, 10))
    def test_inverse_pair(self, p):
        assert np.array_equal(dense_mobius_matrix(p) @ dense_zeta_matrix(p), np.eye(1 << p, dtype=int))

    def test_dense_cap(self):
        with pytest.raises(LatticeSizeError):
            dense_zeta_matrix(13)


class TestParitySplit:
    def as_sets(self, masks):
        return {frozenset(nodes_of(m)) for m in masks}

    def test_pair(self):
        even, odd = subset_parity_split(mask_of([1, 2]))
        assert self.as_sets(even) == {frozenset({1, 2}), frozenset()}
        assert self.as_sets(odd) == {frozenset({1}), frozenset({2})}

    def test_singleton(self):
        even, odd = subset_parity_split(mask_of([3]))
        assert self.as_sets(even) == {frozenset({3})}
        assert self.as_sets(odd) == {frozenset()}

    def test_triple_matches_sign_pattern(self):
        # theta_123 = log(p111 p100 p010 p001 / p000 p110 p101 p011)
        even, odd = subset_parity_split(mask_of([1, 2, 3]))
        assert self.as_sets(even) == {frozenset(s) for s in [(1, 2, 3), (1,), (2,), (3,)]}
        assert self.as_sets(odd) == {frozenset(s) for s in [(), (1, 2), (1, 3), (2, 3)]}

    @given(st.integers(1, 2**10 - 1))
    def test_halves(self, mask):
        even, odd = subset_parity_split(mask)
        k = bin(mask).count("1")
        assert len(even) == len(odd) == 2 ** (k - 1)
        assert sorted(even + odd) == sorted(m for m in range(mask + 1) if m & mask == m)
