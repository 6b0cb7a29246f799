from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stlab import sequences as sq
from stlab.errors import EmptySequence, NonPositiveValues, WindowTooSmall
from stlab.kernel import svd
from stlab.oracles import harmonic_log_average


def test_mu_sequence_diag():
    assert np.allclose(sq.mu_sequence(np.diag([1.0, -2.0, 0.0])).values, [2, 1, 0])


def test_mu_sequence_unitary():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    assert np.allclose(sq.mu_sequence(Q).values, 1.0)


def test_mu_sequence_matches_svd():
    rng = np.random.default_rng(1)
    T = rng.normal(size=(8, 8))
    s = sq.mu_sequence(T)
    assert np.allclose(s.values, svd(T).values)
    assert len(s) == 8 and s.source_dim == 8


def test_lambda_pm_diag():
    s = sq.lambda_pm(np.diag([3.0, -1.0, -5.0, 0.0]))
    assert np.allclose(s.positive, [3])
    assert np.allclose(s.negative, [5, 1])
    assert s.zeros == 1


def test_lambda_pm_positive_semidefinite():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 5))
    assert sq.lambda_pm(X @ X.T + np.eye(5)).negative.size == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_lambda_pm_recombines_and_swaps(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n))
    A = X + X.T
    s = sq.lambda_pm(A)
    full = np.sort(np.concatenate([s.positive, -s.negative, np.zeros(s.zeros)]))
    assert np.allclose(full, np.linalg.eigvalsh(A), atol=1e-10)
    t = sq.lambda_pm(-A)
    assert np.allclose(t.positive, s.negative) and np.allclose(t.negative, s.positive)
    assert t.swapped().positive.size == s.positive.size


class TestWeakQuasiNorm:
    def test_harmonic(self):
        v = 1.0 / np.arange(1, 101)
        assert sq.weak_quasi_norm(v, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_two_terms(self):
        assert sq.weak_quasi_norm([4.0, 3.0], 2.0) == pytest.approx(3 * math.sqrt(2), rel=1e-14)

    def test_homogeneity(self):
        v = np.array([5.0, 2.0, 1.0, 0.1])
        assert sq.weak_quasi_norm(3 * v, 1.5) == pytest.approx(3 * sq.weak_quasi_norm(v, 1.5))

    def test_empty(self):
        with pytest.raises(EmptySequence):
            sq.weak_quasi_norm([], 1.0)

    def test_bad_p(self):
        with pytest.raises(ValueError):
            sq.weak_quasi_norm([1.0], 0.0)


class TestCounting:
    A = np.diag([-2.0, 0.0, 3.0])

    def test_examples(self):
        assert sq.counting_below(self.A, 0.0).count == 1
        assert sq.counting_below(self.A, 3.5).count == 3
        assert sq.counting_below(self.A, -5.0).count == 0

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5))
    def test_complement(self, lam):
        ev = np.linalg.eigvalsh(self.A)
        assert sq.counting_below(self.A, lam).count + np.count_nonzero(ev >= lam) == 3


class TestWeylFit:
    def test_exact_power_law(self):
        v = 2.0 / np.arange(1, 201)
        fit = sq.weyl_limit_fit(v, 1.0)
        assert fit.limit == pytest.approx(2.0, abs=1e-12)
        assert fit.spread <= 1e-12

    def test_steklov_sequence(self):
        j = np.arange(4000)
        v = 1.0 / np.ceil((j + 2) / 2.0)
        fit = sq.weyl_limit_fit(v, 1.0)
        assert abs(fit.limit - 2.0) < 2e-3
        assert fit.covers(2.0)

    def test_corrected_power_law(self):
        # the scaled values are 1 + (j+1)**-0.5, so the excess is known exactly
        errs = []
        for L in (2000, 20000, 200000):
            j1 = np.arange(1, L + 1, dtype=float)
            fit = sq.weyl_limit_fit(j1 ** -1 * (1 + j1 ** -0.5), 1.0)
            lo, hi = fit.window
            assert fit.limit - 1.0 == pytest.approx(np.median(j1[lo : hi + 1] ** -0.5), rel=1e-9)
            errs.append(fit.limit - 1.0)
        assert errs[0] > errs[1] > errs[2] > 0
        assert errs[2] < 3e-3

    def test_window_shape(self):
        fit = sq.weyl_limit_fit(np.ones(100), 0.0, 0.5)
        assert fit.window == (40, 79)

    def test_too_short(self):
        with pytest.raises(WindowTooSmall):
            sq.weyl_limit_fit(np.ones(20), 1.0)

    def test_too_few_points(self):
        with pytest.raises(WindowTooSmall):
            sq.weyl_limit_fit(np.ones(40), 1.0, 0.1)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            sq.weyl_limit_fit(np.ones(100), 1.0, 1.5)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(64, 400), st.lists(st.floats(0, 1e6), min_size=1, max_size=50))
    def test_invariant_under_appended_tail(self, L, extra):
        v = 3.0 / np.arange(1, L + 1) ** 0.7
        valid = int(0.8 * L)
        base = sq.weyl_limit_fit(v, 0.7, valid_length=valid)
        longer = sq.weyl_limit_fit(np.concatenate([v, extra]), 0.7, valid_length=valid)
        assert base == longer


class TestLogAverage:
    def test_harmonic_oracle(self):
        N = 10 ** 4
        v = 1.0 / np.arange(1, N + 1)
        assert sq.dixmier_log_average(v, N) == pytest.approx(harmonic_log_average(N), rel=1e-14)

    def test_harmonic_slow_convergence(self):
        # H_N / log(N+1) - 1 behaves like gamma / log N
        vals = [harmonic_log_average(10 ** k) for k in (2, 4, 6)]
        assert vals[0] > vals[1] > vals[2] > 1.0

    def test_summable_annihilated(self):
        v = 2.0 ** -np.arange(60)
        a = [sq.dixmier_log_average(v, N) for N in (10, 30, 60)]
        assert a[0] > a[1] > a[2]
        assert a[2] < 0.5

    def test_finite_rank_perturbation(self):
        N = 2000
        v = 1.0 / np.arange(1, N + 1)
        w = v.copy()
        w[:3] += np.array([5.0, -2.0, 1.0])
        diff = sq.dixmier_log_average(w, N) - sq.dixmier_log_average(v, N)
        assert abs(diff) == pytest.approx(4.0 / math.log(N + 1), rel=1e-12)

    def test_tie_order(self):
        assert np.array_equal(sq.modulus_order([-1.0, 1.0, 2.0]), [2.0, 1.0, -1.0])

    def test_range(self):
        with pytest.raises(ValueError):
            sq.dixmier_log_average(np.ones(3), 4)


class TestMeasurability:
    def test_alternating(self):
        L = 4000
        j = np.arange(L)
        ev = (-1.0) ** j / (j + 1)
        r = sq.spectral_measurability_report(ev)
        assert r.lambda_plus == pytest.approx(0.5, abs=2e-3)
        assert r.lambda_minus == pytest.approx(0.5, abs=2e-3)
        assert abs(r.difference) < 2e-3
        assert abs(r.log_average) < 0.1

    def test_positive_harmonic(self):
        ev = 1.0 / np.arange(1, 5001)
        r = sq.spectral_measurability_report(ev, tol=0.15)
        assert r.lambda_plus == pytest.approx(1.0, abs=1e-12)
        assert r.lambda_minus == 0.0
        assert r.log_average == pytest.approx(harmonic_log_average(r.log_average_terms))
        assert r.consistent

    def test_finite_rank(self):
        ev = np.zeros(200)
        ev[:3] = [1.0, -2.0, 0.5]
        r = sq.spectral_measurability_report(ev)
        assert r.lambda_plus == 0.0 and r.lambda_minus == 0.0 and r.difference == 0.0


class TestDecayExponent:
    def test_exact(self):
        v = np.arange(1, 501, dtype=float) ** -2
        assert sq.decay_exponent_fit(v) == pytest.approx(2.0, abs=1e-9)

    def test_corrected(self):
        j1 = np.arange(1, 2001, dtype=float)
        assert sq.decay_exponent_fit(j1 ** -1.5 * (1 + 0.1 / j1)) == pytest.approx(1.5, abs=0.02)

    def test_constant(self):
        assert sq.decay_exponent_fit(np.ones(100)) == pytest.approx(0.0, abs=1e-12)

    def test_nonpositive(self):
        v = np.ones(100)
        v[70] = 0.0
        with pytest.raises(NonPositiveValues):
            sq.decay_exponent_fit(v)

    def test_explicit_window(self):
        v = np.arange(1, 101, dtype=float) ** -3
        assert sq.decay_exponent_fit(v, window=(10, 50)) == pytest.approx(3.0, abs=1e-9)
        with pytest.raises(WindowTooSmall):
            sq.decay_exponent_fit(v, window=(10, 12))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([(1.0, 1.0), (2.0, 2.0), (1.0, 3.0), (0.5, 2.0)]))
def test_holder_inequality(seed, pq):
    p, q = pq
    r = 1.0 / (1.0 / p + 1.0 / q)
    rng = np.random.default_rng(seed)
    n = 12
    S = rng.normal(size=(n, n)) @ np.diag(np.arange(1, n + 1) ** (-1.0 / p))
    T = np.diag(np.arange(1, n + 1) ** (-1.0 / q)) @ rng.normal(size=(n, n))
    lhs = sq.weak_quasi_norm(sq.mu_sequence(S @ T), r)
    rhs = sq.holder_constant(p, q) * sq.weak_quasi_norm(sq.mu_sequence(S), p) \
        * sq.weak_quasi_norm(sq.mu_sequence(T), q)
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 4))
def test_fan_stability(seed, rank):
    rng = np.random.default_rng(seed)
    n = 15
    A = rng.normal(size=(n, n))
    R = rng.normal(size=(n, rank)) @ rng.normal(size=(rank, n))
    mu_ar = sq.mu_sequence(A + R).values
    mu_a = sq.mu_sequence(A).values
    mu_r = sq.mu_sequence(R).values
    for j in range(n - rank):
        assert mu_ar[j + rank] <= mu_a[j] + mu_r[rank] + 1e-10
