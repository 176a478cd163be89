import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from banachmc.rademacher import (
    PartitionTrace,
    default_gamma,
    exact_sign_norms,
    greedy_partition,
    make_family,
    rademacher_moment,
    reconstruct_full_moment,
    sigma_lower_bound,
    subset_search,
    validate_trace,
)
from banachmc.spaces import lq, norms, scalar


def brute_moment(space, X, p):
    """All 2^n sign patterns, no symmetry trick."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    vals = [norms(space, (np.array(eps) @ X)[None, :])[0] ** p
            for eps in itertools.product((-1.0, 1.0), repeat=len(X))]
    return float(np.mean(vals) ** (1 / p))


def brute_subset(space, X, gamma):
    n = len(X)
    best = math.inf
    for size in range(1, n + 1):
        if size < gamma * n - 1e-9:
            continue
        for sub in itertools.combinations(range(n), size):
            best = min(best, brute_moment(space, X[list(sub)], 1.0))
    return best


finite = st.floats(-10, 10, allow_nan=False)


class TestMoment:
    def test_two_ones(self, backend):
        est = rademacher_moment(scalar(), [1.0, 1.0], 1)
        assert est.value == 1.0 and est.method == "exact"

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_l1_basis(self, backend, p):
        for n in (1, 3, 8):
            est = rademacher_moment(lq(1, n), np.eye(n), p)
            assert est.value == pytest.approx(n, abs=1e-12)

    def test_ones_p2(self, backend):
        for n in (1, 2, 7, 12):
            assert rademacher_moment(scalar(), np.ones(n), 2).value == pytest.approx(math.sqrt(n), abs=1e-12)

    @pytest.mark.parametrize("q", [1, 1.5, 2, 3, math.inf])
    def test_against_brute_force(self, backend, q):
        rng = np.random.default_rng(int(q * 10) if math.isfinite(q) else 99)
        space = lq(q, 3)
        for n in (1, 4, 9):
            X = rng.standard_normal((n, 3))
            for p in (1.0, 1.5, 2.0):
                assert rademacher_moment(space, X, p).value == pytest.approx(brute_moment(space, X, p), rel=1e-12)

    def test_exact_vs_sampled(self, backend):
        space = lq(2, 4)
        X = np.random.default_rng(5).standard_normal((10, 4))
        exact = rademacher_moment(space, X, 1.0, mode="exact")
        sampled = rademacher_moment(space, X, 1.0, mode="sampled", samples=100_000, seed=3)
        assert sampled.method == "sampled" and sampled.samples == 100_000
        assert abs(exact.value - sampled.value) < 4 * sampled.stderr

    def test_mode_rules(self):
        X = np.ones(21)
        assert rademacher_moment(scalar(), X, 1.0, samples=2000).method == "sampled"
        with pytest.raises(ValueError):
            rademacher_moment(scalar(), X, 1.0, mode="exact")
        with pytest.raises(ValueError):
            rademacher_moment(scalar(), [1.0], 2.5)
        with pytest.raises(ValueError):
            rademacher_moment(scalar(), [1.0], 1.0, mode="bogus")
        with pytest.raises(ValueError):
            rademacher_moment(scalar(), np.empty(0), 1.0)

    def test_sampled_reproducible(self):
        X = np.random.default_rng(0).standard_normal((25, 2))
        a = rademacher_moment(lq(2, 2), X, 1.5, samples=5000, seed=8)
        b = rademacher_moment(lq(2, 2), X, 1.5, samples=5000, seed=8)
        assert a == b

    def test_half_enumeration_count(self, backend):
        assert exact_sign_norms(scalar(), np.ones(6)).shape == (32,)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 8), st.just(3)), elements=finite))
    def test_lyapunov_monotone(self, X):
        space = lq(2, 3)
        vals = [rademacher_moment(space, X, p).value for p in (1.0, 1.5, 2.0)]
        assert vals[0] <= vals[1] + 1e-12 and vals[1] <= vals[2] + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 8), st.just(3)), elements=finite),
           st.sampled_from([1.0, 2.0, 4.0, math.inf]))
    def test_type_one_bound(self, X, q):
        space = lq(q, 3)
        assert rademacher_moment(space, X, 1.0).value <= norms(space, X).sum() + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.integers(1, 14), elements=finite))
    def test_khintchine_identity(self, a):
        m2 = rademacher_moment(scalar(), a, 2.0).value ** 2
        assert m2 == pytest.approx(float(np.sum(a * a)), abs=1e-12 * max(1.0, float(np.sum(a * a))))

    def test_contraction_principle(self):
        rng = np.random.default_rng(17)
        space = lq(1.5, 3)
        for _ in range(100):
            n = int(rng.integers(1, 10))
            X = rng.standard_normal((n, 3))
            alpha = rng.uniform(-1, 1, n)
            base = rademacher_moment(space, X, 1.0).value
            assert rademacher_moment(space, alpha[:, None] * X, 1.0).value <= base + 1e-12


class TestSigma:
    @pytest.mark.parametrize("q", [1, 2, math.inf])
    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_basis_ratio(self, q, p):
        for n in (2, 4, 8):
            est = sigma_lower_bound(lq(q, n), p, n, families=("basis",))
            expected = n ** ((0.0 if math.isinf(q) else 1 / q) - 1 / p)
            assert est.lower_bound == pytest.approx(expected, rel=1e-12)

    def test_linf_basis_p1(self):
        assert sigma_lower_bound(lq("inf", 5), 1.0, 5, ("basis",)).lower_bound == pytest.approx(1 / 5)

    def test_scalar_constant_family(self):
        est = sigma_lower_bound(scalar(), 1.0, 2, ("constant",))
        assert est.lower_bound == 0.5 and est.witness_family == "constant"

    def test_max_over_families(self):
        est = sigma_lower_bound(lq(2, 6), 2.0, 6, seed=4)
        assert est.lower_bound == max(r.ratio for r in est.ratios)
        assert {r.family for r in est.ratios} == {"basis", "constant", "random"}
        # l_2 has type 2 with constant 1, so no family can exceed 1.
        assert est.lower_bound <= 1.0 + 1e-12

    def test_custom_family(self):
        est = sigma_lower_bound(scalar(), 1.0, 2, [("pair", np.array([[3.0], [3.0]]))])
        assert est.lower_bound == 0.5

    def test_errors(self):
        with pytest.raises(ValueError):
            sigma_lower_bound(scalar(), 1.0, 2, ())
        with pytest.raises(ValueError):
            sigma_lower_bound(scalar(), 1.0, 2, [("z", np.zeros((2, 1)))])
        with pytest.raises(ValueError):
            make_family(lq(2, 3), "basis", 4)
        with pytest.raises(ValueError):
            make_family(lq(2, 3), "nope", 2)

    def test_random_family_unit_norm(self):
        X = make_family(lq(3, 5), "random", 9, seed=2)
        np.testing.assert_allclose(norms(lq(3, 5), X), 1.0, rtol=1e-14)


class TestSubsetSearch:
    def test_four_ones(self):
        subset, moment = subset_search(scalar(), np.ones(4), 0.5)
        assert len(subset) == 2 and moment == 1.0

    def test_zero_vectors(self):
        subset, moment = subset_search(lq(2, 2), np.zeros((5, 2)), 0.3)
        assert len(subset) >= math.ceil(0.3 * 5) and moment == 0.0

    def test_monotone_in_gamma(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((8, 2))
        vals = [subset_search(lq(2, 2), X, g)[1] for g in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_minimal_size_is_enough(self, backend):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            X = rng.standard_normal((n, 2)) * rng.uniform(0, 3, (n, 1))
            gamma = float(rng.uniform(0.05, 0.95))
            _, moment = subset_search(lq(1, 2), X, gamma)
            assert moment == pytest.approx(brute_subset(lq(1, 2), X, gamma), rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            subset_search(scalar(), np.ones(15), 0.5)
        with pytest.raises(ValueError):
            subset_search(scalar(), np.ones(4), 1.0)


class TestPartition:
    def test_four_equal_scalars(self):
        trace = greedy_partition(scalar(), np.ones(4), 0.5)
        assert [len(b) for b in trace.blocks] == [2, 1, 1]
        assert trace.remaining == [4, 2, 1]
        assert validate_trace(trace) == []
        assert trace.steps <= trace.step_bound()

    def test_reconstruct_four_ones(self):
        trace = greedy_partition(scalar(), np.ones(4), 0.5)
        total = reconstruct_full_moment(trace, scalar(), np.ones(4))
        assert total >= 1.5 and total == pytest.approx(3.0)

    def test_single_block_equals_full(self):
        X = np.random.default_rng(0).standard_normal((5, 3))
        m = rademacher_moment(lq(2, 3), X, 1.0).value
        trace = PartitionTrace(5, 0.9, [tuple(range(5))], [m], [5])
        assert reconstruct_full_moment(trace, lq(2, 3), X) == m

    def test_zero_vectors(self):
        trace = greedy_partition(lq(2, 3), np.zeros((6, 3)))
        assert reconstruct_full_moment(trace, lq(2, 3), np.zeros((6, 3))) == 0.0

    def test_default_gamma(self):
        assert default_gamma(1) == pytest.approx(4 / 9)
        trace = greedy_partition(scalar(), np.arange(1.0, 7.0), d=2)
        assert trace.gamma == default_gamma(2)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 9), st.just(2)), elements=finite),
           st.floats(0.05, 0.95))
    def test_trace_invariants(self, X, gamma):
        trace = greedy_partition(lq(2, 2), X, gamma)
        assert validate_trace(trace) == []
        assert trace.steps <= trace.step_bound()
        assert reconstruct_full_moment(trace, lq(2, 2), X) >= rademacher_moment(lq(2, 2), X, 1.0).value - 1e-12

    def test_broken_traces_detected(self):
        good = greedy_partition(scalar(), np.ones(4), 0.5)
        overlap = PartitionTrace(4, 0.5, [(0, 1), (1, 2), (3,)], [1, 1, 1], [4, 2, 1])
        short = PartitionTrace(4, 0.5, [(0,), (1, 2, 3)], [1, 1], [4, 3])
        assert validate_trace(overlap) and validate_trace(short)
        with pytest.raises(ValueError):
            reconstruct_full_moment(good, scalar(), np.ones(5))

    def test_inconsistent_moments_raise(self):
        fake = PartitionTrace(4, 0.5, [(0, 1), (2,), (3,)], [0.0, 0.0, 0.0], [4, 2, 1])
        with pytest.raises(ArithmeticError):
            reconstruct_full_moment(fake, scalar(), np.ones(4))

    def test_large_n_needs_flag(self):
        X = np.random.default_rng(0).standard_normal((16, 2))
        with pytest.raises(ValueError):
            greedy_partition(lq(2, 2), X, 0.5)
        trace = greedy_partition(lq(2, 2), X, 0.5, allow_sampled=True, candidates=16)
        assert validate_trace(trace) == []
