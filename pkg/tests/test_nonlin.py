import math
import random

import numpy as np
import pytest

from boolnl import _kernels
from boolnl.core import TruthTable, distance, parse_hex, sample_uniform
from boolnl.errors import CapExceeded, DomainError
from boolnl.experiments import all_tables
from boolnl.nonlin import (
    NonlinearityResult,
    batch_nonlinearity,
    batch_nonlinearity_order1,
    nonlinearity,
    nonlinearity_exhaustive,
    nonlinearity_order1,
    normalized_statistic,
)
from boolnl.rmcode import RMCodeSpec, basis_for, encode
from boolnl.rng import SeedSpec

from oracles import bfs_distances_to_code, bits_of, brute_nonlinearity

BENT4 = TruthTable.from_function(4, lambda x: (x[0] & x[1]) ^ (x[2] & x[3]))


def rand_table(n, i, seed=77):
    return sample_uniform(SeedSpec(seed, i), n)


class TestOrder1:
    def test_affine_is_zero(self):
        spec = RMCodeSpec(1, 6)
        for m in (0, 1, 5, 77, 127):
            assert nonlinearity_order1(encode(spec, m)).value == 0

    def test_bent(self):
        assert nonlinearity_order1(BENT4).value == 6

    def test_x1x2(self):
        res = nonlinearity_order1(parse_hex("8", 2))
        assert res.value == 1

    def test_witness(self):
        for i in range(50):
            f = rand_table(9, i)
            res = nonlinearity_order1(f)
            assert distance(f, encode(RMCodeSpec(1, 9), res.best_message)) == res.value


class TestExhaustive:
    def test_codeword_is_zero(self):
        spec = RMCodeSpec(2, 5)
        rnd = random.Random(3)
        for _ in range(5):
            assert nonlinearity_exhaustive(encode(spec, rnd.getrandbits(spec.k)), 2).value == 0

    def test_cubic_monomial(self):
        assert nonlinearity_exhaustive(TruthTable.monomial(3, 7), 2).value == 1

    def test_bent_agrees(self):
        assert nonlinearity_exhaustive(BENT4, 1).value == 6 == nonlinearity_order1(BENT4).value

    def test_witness_and_invariants(self):
        for r, n in [(1, 5), (2, 5), (2, 6), (3, 5)]:
            spec = RMCodeSpec(r, n)
            f = rand_table(n, r)
            res = nonlinearity_exhaustive(f, r)
            assert distance(f, encode(spec, res.best_message)) == res.value
            assert 0 <= res.value <= 1 << (n - 1)
            assert res.y == (1 << n) - 2 * res.value

    def test_brute_force_small(self):
        for n, r in [(2, 1), (3, 1), (3, 2), (4, 2)]:
            for i in range(20):
                f = rand_table(n, i, seed=n * 10 + r)
                assert nonlinearity_exhaustive(f, r).value == brute_nonlinearity(bits_of(f), n, r)

    def test_tie_break_first_gray_rank(self):
        # every codeword of RM(1,2) is at distance 1 or 3 from x1x2; the first
        # minimiser in Gray order is message 0 (the zero function)
        assert nonlinearity_exhaustive(parse_hex("8", 2), 1).best_message == 0

    def test_jobs_do_not_change_witness(self):
        f = rand_table(6, 0)
        a = nonlinearity_exhaustive(f, 2, jobs=1)
        b = nonlinearity_exhaustive(f, 2, jobs=4)
        assert a == b

    def test_large_n_uses_restricted_updates(self):
        f = rand_table(9, 5)
        assert nonlinearity_exhaustive(f, 1).value == nonlinearity_order1(f).value

    def test_register_kernel_matches_restricted_kernel(self):
        spec = RMCodeSpec(2, 7)
        basis = basis_for(spec)
        ptr, idx = basis.support
        for i in range(3):
            f = rand_table(7, i)
            lo, hi = 12345, 12345 + (1 << 20)
            a = _kernels.gray_min_distance_2w(f.words, basis.matrix, lo, hi)
            b = _kernels.gray_min_distance(f.words, basis.matrix, ptr, idx, lo, hi)
            assert tuple(map(int, a)) == tuple(map(int, b))

    def test_errors(self):
        with pytest.raises(DomainError):
            nonlinearity_exhaustive(TruthTable.zeros(3), 4)
        with pytest.raises(CapExceeded):
            nonlinearity_exhaustive(TruthTable.zeros(8), 3)


def test_order1_equals_exhaustive_all_n4():
    tables = all_tables(4)
    exhaustive = batch_nonlinearity(tables, 1, 4)
    spectral = batch_nonlinearity_order1(tables, 4)
    bfs = np.array(bfs_distances_to_code(4, 1))
    assert np.array_equal(exhaustive, spectral)
    assert np.array_equal(exhaustive, bfs)


def test_second_order_all_n4_against_bfs():
    assert np.array_equal(batch_nonlinearity(all_tables(4), 2, 4), np.array(bfs_distances_to_code(4, 2)))


def test_order1_equals_exhaustive_random():
    for i in range(500):
        n = 5 + i % 6
        f = rand_table(n, i, seed=501)
        assert nonlinearity_order1(f).value == nonlinearity_exhaustive(f, 1).value


def test_monotone_in_order():
    for i in range(30):
        n = 4 + i % 3
        f = rand_table(n, i, seed=9)
        values = [nonlinearity_exhaustive(f, r).value for r in range(0, n + 1) if RMCodeSpec(r, n).k <= 22]
        assert all(a >= b for a, b in zip(values, values[1:]))


def test_coset_and_complement_invariance():
    rnd = random.Random(12)
    for r, n in [(1, 6), (2, 5), (2, 6)]:
        spec = RMCodeSpec(r, n)
        for i in range(5):
            f = rand_table(n, i, seed=4)
            base = nonlinearity_exhaustive(f, r).value
            g = encode(spec, rnd.getrandbits(spec.k))
            assert nonlinearity_exhaustive(f ^ g, r).value == base
            assert nonlinearity_exhaustive(~f, r).value == base


class TestNormalizedStatistic:
    def test_half_gives_zero(self):
        assert normalized_statistic(NonlinearityResult(6, 2, 32, 0)) == 0

    def test_zero_value(self):
        res = NonlinearityResult(5, 2, 0, 0)
        assert normalized_statistic(res) == pytest.approx(16 / math.sqrt(16 * 10 * math.log(2)), rel=1e-15)

    def test_frozen_value(self):
        # mpmath (40 digits): 60 / sqrt(512 * 10 * ln 2)
        res = NonlinearityResult(10, 1, 452, 0)
        assert normalized_statistic(res) == pytest.approx(1.007171758254297158, rel=1e-12)

    def test_equals_ratio(self):
        for i in range(100):
            n = 3 + i % 8
            r = 1 + i % min(n, 3)
            if RMCodeSpec(r, n).k > 22:
                r = 1
            res = nonlinearity(rand_table(n, i, seed=33), r)
            stat = normalized_statistic(res)
            assert stat == pytest.approx(res.ratio, rel=1e-12)
            half = 1 << (n - 1)
            scale = math.sqrt(half * math.comb(n, r) * math.log(2))
            assert abs(stat * scale + res.value - half) <= 1e-9

    def test_rejects_r0(self):
        with pytest.raises(DomainError):
            normalized_statistic(NonlinearityResult(4, 0, 3, 0))


def test_result_dict_round_trip():
    f = rand_table(7, 1)
    d = nonlinearity(f, 2).as_dict()
    spec = RMCodeSpec(2, 7)
    msg = int(d["best_message_hex"], 16)
    assert distance(f, encode(spec, msg)) == d["nonlinearity"]
    assert d["y"] == 128 - 2 * d["nonlinearity"]
