from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stlab import kernel
from stlab import models as md
from stlab import operators as op
from stlab import sequences as sq
from stlab.errors import GridBelowAbscissa, NotPositive, TruncationUnsafe
from stlab.symbols import CosineSeries, FourierSymbol, ThetaMatrix

THETA = ThetaMatrix.from_pairs(2, {(1, 2): 0.3183})
TWO_PLUS_COS = FourierSymbol(1, {(0,): 2.0, (1,): 0.5, (-1,): 0.5})


class TestBirmanSchwinger:
    def test_constant_symbol(self):
        m = md.build_torus(1, 4)
        B = op.birman_schwinger(m, FourierSymbol.constant(1), 1.0)
        expected = np.array([1 / 4, 1 / 3, 1 / 2, 1, 0, 1, 1 / 2, 1 / 3, 1 / 4])
        assert np.allclose(B, np.diag(expected))

    def test_kernel_rows_vanish(self):
        m = md.build_quantum_torus(THETA, 3)
        a = FourierSymbol(2, {(0, 0): 1.0, (1, 0): 0.3, (-1, 0): 0.3})
        B = op.birman_schwinger(m, a, 1.5)
        o = m.basis.origin
        assert not np.any(B[o]) and not np.any(B[:, o])

    def test_hermitian(self):
        m = md.build_quantum_torus(THETA, 3)
        a = FourierSymbol(2, {(0, 0): 1.0, (1, 1): 0.3j})
        a = (a + a.adjoint(THETA)).scale(0.5)
        B = op.birman_schwinger(m, a, 2.0)
        assert np.max(np.abs(B - B.conj().T)) <= 1e-14

    def test_weyl_limit_q2(self):
        m = md.build_torus(1, 1000)
        fit = sq.weyl_limit_fit(sq.lambda_pm(op.birman_schwinger(m, TWO_PLUS_COS, 2.0)).positive, 2.0)
        target = md.tau_of_function(m, TWO_PLUS_COS, np.sqrt).value ** 2
        assert abs(fit.limit - target) <= fit.spread
        assert abs(fit.limit - 16.0) > 1.0

    def test_dirac_kernel(self):
        m = md.build_dirac_quantum_torus(THETA, 2)
        B = op.birman_schwinger(m, FourierSymbol.constant(2), 1.0)
        for i in m.kernel_modes:
            assert np.allclose(B[i], 0) and np.allclose(B[:, i], 0)


class TestSandwich:
    def test_constant(self):
        m = md.build_torus(1, 5)
        assert np.allclose(op.sandwich(m, FourierSymbol.constant(1), 1.5), m.abs_power(-1.5))

    def test_homogeneity(self):
        m = md.build_torus(1, 20)
        e1 = np.linalg.eigvalsh(op.sandwich(m, TWO_PLUS_COS, 1.0))
        e3 = np.linalg.eigvalsh(op.sandwich(m, TWO_PLUS_COS.scale(3.0), 1.0))
        assert np.allclose(3 * e1, e3)

    def test_not_positive(self):
        with pytest.raises(NotPositive):
            op.sandwich(md.build_torus(1, 5), FourierSymbol.cosine(1, 0), 1.0)

    def test_weyl_limits_agree(self):
        m = md.build_torus(1, 1000)
        f1 = sq.weyl_limit_fit(sq.lambda_pm(op.sandwich(m, TWO_PLUS_COS, 1.0)).positive, 1.0)
        f2 = sq.weyl_limit_fit(sq.lambda_pm(op.birman_schwinger(m, TWO_PLUS_COS, 1.0)).positive, 1.0)
        assert abs(f1.limit - f2.limit) <= f1.spread + f2.spread


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 64), st.integers(0, 2 ** 31))
def test_finite_birman_schwinger_identity(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H0 = X @ X.conj().T + 0.1 * np.eye(n)
    Y = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    V = (Y + Y.conj().T) * rng.uniform(0.1, 3.0)
    direct, bs = op.birman_schwinger_counts(H0, V)
    assert direct == bs


class TestSchrodinger:
    def test_zero_potential(self):
        m = md.build_torus(1, 4)
        H = op.schrodinger(m, FourierSymbol(1, {}), 1.0, 1.0)
        assert H.count(0.0).count == 0

    @pytest.mark.parametrize("n,c,h,lam", [(1, 3.0, 0.4, 0.0), (2, 2.0, 0.3, 0.5), (2, 1.0, 0.25, 0.0)])
    def test_constant_potential_lattice_count(self, n, c, h, lam):
        V = FourierSymbol.constant(n, -c)
        M = op.minimal_safe_radius(h, 1.0, V, lam)
        m = md.build_torus(n, M)
        H = op.schrodinger(m, V, 1.0, h, lam)
        exact = int(np.count_nonzero(h ** 2 * m.basis.norms() ** 2 < c + lam))
        assert H.count(lam).count == exact

    def test_truncation_unsafe(self):
        with pytest.raises(TruncationUnsafe):
            op.schrodinger(md.build_torus(1, 2), FourierSymbol.constant(1, -5.0), 1.0, 0.1)

    def test_large_h_matches_direct(self):
        m = md.build_torus(1, 6)
        V = FourierSymbol(1, {(0,): -0.8, (1,): 0.3, (-1,): 0.3})
        H = op.schrodinger(m, V, 1.0, 2.0)
        direct = np.linalg.eigvalsh(np.diag(4.0 * m.d_values ** 2) + m.symbol_matrix(V))
        assert H.count(0.0).count == np.count_nonzero(direct < 0) == 1

    def test_monotone(self):
        V = FourierSymbol(2, {(0, 0): -1.0, (1, 0): 0.25, (-1, 0): 0.25})
        m = md.build_quantum_torus(THETA, 8)
        counts_h = [op.schrodinger(m, V, 1.0, h).count(0.0).count for h in (0.2, 0.3, 0.5, 1.0)]
        assert counts_h == sorted(counts_h, reverse=True)
        counts_l = [op.schrodinger(m, V, 1.0, 0.3, lam).count(lam).count for lam in (0.0, 0.3, 0.6)]
        assert counts_l == sorted(counts_l)

    def test_safe_radius_rule(self):
        V = FourierSymbol.constant(1, -2.0)
        for h in (0.05, 0.13, 0.5):
            M = op.minimal_safe_radius(h, 1.0, V)
            assert (h * (M + 1)) ** 2 > 2.0
            assert M == 1 or (h * M) ** 2 <= 2.0

    def test_fractional_power(self):
        m = md.build_torus(1, 5)
        H = op.schrodinger(m, FourierSymbol.constant(1, -1.0), 0.5, 1.0, check_truncation=False)
        assert np.allclose(np.diag(H.matrix), m.d_values - 1.0)


class TestCommutator:
    def test_constant(self):
        m = md.build_quantum_torus(THETA, 3)
        assert not np.any(op.fractional_commutator(m, FourierSymbol.constant(2), 1.0))

    def test_subdiagonal_entries(self):
        m = md.build_torus(1, 6)
        C = op.fractional_commutator(m, FourierSymbol.monomial((1,)), 1.0)
        inv = kernel.power_values(m.d_values, -1.0, m.kernel_mask())
        pts = m.basis.points[:, 0]
        for col, mm in enumerate(pts[:-1]):
            assert C[col + 1, col] == pytest.approx(inv[col + 1] - inv[col])
        off = C - np.diag(np.diag(C, -1), -1)
        assert not np.any(off)

    def test_decay_exponent(self):
        m = md.build_torus(1, 1000)
        mu = sq.mu_sequence(op.fractional_commutator(m, FourierSymbol.monomial((1,)), 1.0))
        assert sq.decay_exponent_fit(mu) == pytest.approx(2.0, abs=0.02)

    def test_quasi_norm_bounded(self):
        norms = []
        for M in (200, 400, 800):
            C = op.fractional_commutator(md.build_torus(1, M), FourierSymbol.monomial((1,)), 1.0)
            norms.append(sq.weak_quasi_norm(sq.mu_sequence(C), 0.5))
        assert max(norms) - min(norms) <= 1e-3 * max(norms)

    def test_adjoint_relation(self):
        m = md.build_quantum_torus(THETA, 3)
        a = FourierSymbol(2, {(1, 0): 0.4 + 0.1j, (0, -1): 1.2, (1, 1): -0.3j})
        C = op.fractional_commutator(m, a, 0.7)
        Cs = op.fractional_commutator(m, a.adjoint(THETA), 0.7)
        assert np.max(np.abs(Cs + C.conj().T)) <= 1e-14


class TestHeat:
    @pytest.mark.parametrize("boundary", ["dirichlet", "neumann"])
    def test_rectangle_weights_match_dense(self, boundary):
        m = md.build_rectangle(boundary, 1.0, 2.0, 7)
        a = CosineSeries({(0, 0): 1.5, (2, 0): 0.3, (0, 2): -0.2, (1, 1): 0.1})
        dense = np.diag(md.symbol_to_matrix(m, a))
        assert np.max(np.abs(op._diag_weights(m, a) - dense)) <= 1e-14

    def test_theta_value(self):
        m = md.build_quantum_torus(ThetaMatrix.zero(1), 8)
        v = op.heat_trace(m, FourierSymbol.constant(1), [1.0]).values[0]
        assert v == pytest.approx(1.7726372, abs=1e-7)
        assert v == pytest.approx(op.jacobi_theta_dual(1.0), rel=1e-14)
        assert v == pytest.approx(op.jacobi_theta(1.0), rel=1e-14)

    def test_off_diagonal_symbol(self):
        m = md.build_quantum_torus(THETA, 5)
        v = op.heat_trace(m, FourierSymbol.monomial((1, 0)), [0.1, 1.0, 3.0]).values
        assert np.all(v == 0.0)

    def test_two_dimensional(self):
        m = md.build_quantum_torus(THETA, 40)
        v = op.heat_trace(m, FourierSymbol.constant(2), [0.5]).values[0]
        assert abs(v - math.pi / 0.5) <= 1e-6 * math.pi / 0.5

    def test_completely_monotone(self):
        m = md.build_torus(2, 10)
        v = op.heat_trace(m, None, np.geomspace(0.01, 5, 30)).values
        assert np.all(v > 0) and np.all(np.diff(v) < 0)

    def test_matches_dense_trace(self):
        m = md.build_quantum_torus(THETA, 3)
        a = FourierSymbol(2, {(0, 0): 1.5, (1, 0): 0.3, (-1, 0): 0.3})
        D2 = kernel.eigh(m.d_squared_matrix())
        for t in (0.2, 1.0):
            dense = np.trace(m.symbol_matrix(a) @ kernel.matrix_function(D2, lambda x: np.exp(-t * x))).real
            assert op.heat_trace(m, a, [t]).values[0] == pytest.approx(dense, rel=1e-12)

    def test_dirac_and_grushin(self):
        dm = md.build_dirac_quantum_torus(THETA, 3)
        qm = md.build_quantum_torus(THETA, 3)
        assert op.heat_trace(dm, None, [0.3]).values[0] == pytest.approx(
            2 * op.heat_trace(qm, None, [0.3]).values[0])
        g = md.build_grushin(3, 2)
        dense = np.linalg.eigvalsh(g.d_squared_matrix())
        assert op.heat_trace(g, None, [0.1]).values[0] == pytest.approx(np.sum(np.exp(-0.1 * dense)))

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            op.heat_trace(md.build_torus(1, 3), None, [1.0, 0.5])


class TestZeta:
    def test_two_zeta_two(self):
        M = 2000
        v = op.zeta_trace(md.build_torus(1, M), None, [2.0]).values[0]
        assert 0 < math.pi ** 2 / 3 - v <= 2.0 / M

    def test_tail_correction(self):
        v = op.zeta_trace(md.build_torus(1, 200), None, [2.0], tail_correction=True).values[0]
        assert v == pytest.approx(math.pi ** 2 / 3, rel=1e-5)

    def test_off_diagonal(self):
        v = op.zeta_trace(md.build_torus(1, 50), FourierSymbol.monomial((1,)), [1.5, 2.0, 3.0]).values
        assert np.all(v == 0.0)

    def test_residue_probe(self):
        r = op.residue_probe(md.build_torus(1, 4000), None)
        assert r.extrapolated == pytest.approx(2.0, rel=0.05)

    def test_below_abscissa(self):
        with pytest.raises(GridBelowAbscissa):
            op.zeta_trace(md.build_torus(2, 4), None, [1.5, 2.5])

    @pytest.mark.parametrize("s", [3, 4, 5])
    def test_integer_s_consistency(self, s):
        m = md.build_quantum_torus(THETA, 4)
        a = FourierSymbol(2, {(0, 0): 1.3, (1, 0): 0.2, (-1, 0): 0.2})
        inv = kernel.partial_power(m.decomposition(), -1.0)
        P = np.linalg.matrix_power(inv, s)
        direct = np.trace(m.symbol_matrix(a) @ P).real
        assert op.zeta_trace(m, a, [float(s)]).values[0] == pytest.approx(direct, abs=1e-10)


class TestPartDefect:
    def test_positive_symbol(self):
        m = md.build_torus(1, 40)
        mu = op.pos_neg_part_defect(m, TWO_PLUS_COS, 1.0, "-")
        assert mu.values[0] <= 1e-8

    def test_sign_symmetry(self):
        m = md.build_torus(1, 40)
        a = FourierSymbol.cosine(1, 0)
        d_plus = op.pos_neg_part_defect(m, a, 1.0, "+").values
        d_minus = op.pos_neg_part_defect(m, -a, 1.0, "-").values
        assert np.allclose(d_plus, d_minus, atol=1e-12)

    def test_defect_decays_faster(self):
        m = md.build_torus(1, 600)
        a = FourierSymbol.cosine(1, 0)
        defect = op.pos_neg_part_defect(m, a, 1.0, "+")
        main = sq.mu_sequence(op.birman_schwinger(m, a, 1.0))
        assert sq.decay_exponent_fit(defect) > sq.decay_exponent_fit(main) + 0.3

    def test_quantum(self):
        m = md.build_quantum_torus(THETA, 6)
        a = FourierSymbol(2, {(0, 0): 2.0, (1, 0): 0.25, (-1, 0): 0.25})
        assert op.pos_neg_part_defect(m, a, 1.0, "-").values[0] <= 1e-8
