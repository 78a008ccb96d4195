import math

import numpy as np
import pytest

from packdim import (
    FiniteMetricSpace,
    PackdimError,
    PreMeasureTable,
    TooLargeForExactError,
    classify,
    method_D,
    method_I,
    random_monotone_table,
    verify_lemma_MI,
)


def space(n):
    return FiniteMetricSpace.from_points(list(range(n)))


def table_from(fn, n):
    sp = space(n)
    return PreMeasureTable(sp, [float(fn(m)) for m in range(1 << n)])


def popcount(m):
    return bin(m).count("1")


class TestTable:
    def test_empty_must_be_zero(self):
        with pytest.raises(PackdimError):
            PreMeasureTable(space(1), [1.0, 2.0])

    def test_monotone_enforced(self):
        with pytest.raises(PackdimError):
            PreMeasureTable(space(2), [0.0, 5.0, 1.0, 2.0])

    def test_ground_cap(self):
        with pytest.raises(TooLargeForExactError):
            table_from(popcount, 13)

    def test_json_roundtrip_with_inf(self):
        sp = space(2)
        tau = PreMeasureTable(sp, [0.0, 1.0, 1.0, math.inf])
        back = PreMeasureTable.from_json(sp, tau.to_json())
        assert back.values == [0.0, 1.0, 1.0, math.inf]


class TestMethodI:
    def test_counting_is_fixed_point(self):
        tau = table_from(popcount, 3)
        for e in range(8):
            v, _ = method_I(tau, e)
            assert v == popcount(e)

    def test_square_collapses_to_counting(self):
        tau = table_from(lambda m: popcount(m) ** 2, 3)
        v, blocks = method_I(tau, 0b111)
        assert v == 3.0
        assert sorted(blocks) == [0b001, 0b010, 0b100]

    def test_indicator(self):
        tau = table_from(lambda m: 1.0 if m else 0.0, 3)
        for e in range(1, 8):
            v, blocks = method_I(tau, e)
            assert v == 1.0
            assert blocks == [e]

    def test_witness_partitions_e(self):
        rng = np.random.default_rng(4)
        tau = random_monotone_table(space(4), rng, inf_prob=0.0)
        for e in range(16):
            v, blocks = method_I(tau, e)
            acc = 0
            for b in blocks:
                assert acc & b == 0
                acc |= b
            assert acc == e
            assert v == pytest.approx(sum(tau(b) for b in blocks))


class TestMethodD:
    def test_equals_tau_on_finite_ground(self):
        tau = table_from(lambda m: popcount(m) ** 2, 3)
        assert method_D(tau, 0b011) == 4.0

    def test_strict_gap_to_method_I(self):
        tau = table_from(lambda m: popcount(m) ** 2, 3)
        assert method_I(tau, 0b011)[0] == 2.0 < method_D(tau, 0b011)

    def test_subadditive_collapse(self):
        tau = table_from(popcount, 4)
        for e in range(16):
            assert method_D(tau, e) == method_I(tau, e)[0]


class TestClassify:
    def test_counting(self):
        flags = classify(table_from(popcount, 3))
        assert flags == {"monotone": True, "subadditive": True,
                         "metric": True, "additive_on_separated": True}

    def test_square_not_subadditive(self):
        flags = classify(table_from(lambda m: popcount(m) ** 2, 3))
        assert flags["monotone"] and not flags["subadditive"]

    def test_diam_table(self):
        sp = FiniteMetricSpace.from_points([0.0, 1.0, 5.0])
        vals = [sp.diam([i for i in range(3) if (m >> i) & 1]) if m else 0.0
                for m in range(8)]
        flags = classify(PreMeasureTable(sp, vals))
        assert flags["monotone"]
        # {0,1} and {2} are disjoint but diam of the union jumps
        assert not flags["additive_on_separated"]


class TestLemmaChecks:
    def test_counting_all_clauses(self):
        rep = verify_lemma_MI(table_from(popcount, 3))
        assert rep["ok"]
        assert rep["flags"]["additive_on_separated"]

    def test_square_hat_is_counting_and_idempotent(self):
        tau = table_from(lambda m: popcount(m) ** 2, 3)
        rep = verify_lemma_MI(tau)
        assert rep["ok"]
        hat = [method_I(tau, e)[0] for e in range(8)]
        assert hat == [float(popcount(e)) for e in range(8)]

    def test_random_tables(self):
        for seed in range(60):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 5))
            tau = random_monotone_table(space(n), rng)
            assert verify_lemma_MI(tau)["ok"], f"seed {seed}"

    def test_random_table_determinism(self):
        a = random_monotone_table(space(4), np.random.default_rng(9)).values
        b = random_monotone_table(space(4), np.random.default_rng(9)).values
        assert a == b
