from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from stlab import models as md
from stlab.errors import DimensionOverflow, OracleNotConverged, UnsupportedModel
from stlab.kernel import eigvalsh
from stlab.oracles import product_phase_by_reordering
from stlab.symbols import CosineSeries, FourierSymbol, LatticeTruncation, ThetaMatrix, twist_phase

THETA = ThetaMatrix.from_pairs(2, {(1, 2): 0.3183})
THETA3 = ThetaMatrix.from_pairs(3, {(1, 2): 0.21, (1, 3): -0.47, (2, 3): 0.613})

vec3 = st.tuples(*[st.integers(-4, 4)] * 3)


class TestTorus:
    def test_small_d(self):
        m = md.build_torus(1, 1)
        assert np.allclose(m.d_values, [1, 0, 1])
        assert m.kernel_modes == (1,)

    @pytest.mark.parametrize("n,expected", [(1, 2.0), (2, math.pi)])
    def test_tau_one(self, n, expected):
        assert md.build_torus(n, 2).tau(1.0) == pytest.approx(expected, rel=1e-14)

    def test_dimension_cap(self):
        with pytest.raises(DimensionOverflow):
            md.build_torus(3, 30)

    def test_normalizations_agree(self):
        for n in range(1, 6):
            assert md.weyl_density(n) * (2 * math.pi) ** n == pytest.approx(md.unit_ball_volume(n))


class TestQuantumTorus:
    def test_tau(self):
        assert md.build_quantum_torus(THETA, 3).tau(1.0) == pytest.approx(math.pi)

    def test_isospectral(self):
        a = np.sort(md.build_quantum_torus(THETA, 4).spectrum())
        b = np.sort(md.build_torus(2, 4).spectrum())
        assert np.array_equal(a, b)

    def test_zero_theta_matches_torus_action(self):
        a = FourierSymbol(2, {(1, 0): 0.5, (-1, 0): 0.5, (0, 2): 1j, (0, -2): -1j})
        q = md.build_quantum_torus(ThetaMatrix.zero(2), 4)
        t = md.build_torus(2, 4)
        assert np.allclose(md.symbol_to_matrix(q, a), md.symbol_to_matrix(t, a))


class TestTwistPhase:
    def test_zero_theta(self):
        assert twist_phase(ThetaMatrix.zero(3), (1, 2, 3), (-2, 5, 1)) == 1

    def test_u2_u1(self):
        got = twist_phase(THETA, (0, 1), (1, 0))
        assert got == pytest.approx(np.exp(2j * math.pi * 0.3183), abs=1e-15)
        assert got == pytest.approx(product_phase_by_reordering(THETA.entries, (0, 1), (1, 0)), abs=1e-14)

    def test_already_ordered(self):
        assert twist_phase(THETA, (1, 0), (0, 1)) == pytest.approx(1.0)

    @settings(max_examples=200, deadline=None)
    @given(vec3, vec3)
    def test_matches_reordering_oracle(self, k, m):
        if sum(map(abs, k)) + sum(map(abs, m)) > 6:
            return
        assert abs(twist_phase(THETA3, k, m) - product_phase_by_reordering(THETA3.entries, k, m)) <= 1e-13

    def test_cocycle(self):
        rng = np.random.default_rng(0)
        kml = rng.integers(-8, 9, size=(10 ** 4, 3, 3))
        worst = 0.0
        for k, m, l in kml:
            lhs = twist_phase(THETA3, k, m) * twist_phase(THETA3, k + m, l)
            rhs = twist_phase(THETA3, m, l) * twist_phase(THETA3, k, m + l)
            worst = max(worst, abs(lhs - rhs))
        assert worst <= 1e-12

    def test_unit_modulus(self):
        assert abs(twist_phase(THETA3, (3, -1, 2), (5, 4, -7))) == pytest.approx(1.0)


class TestSymbolToMatrix:
    def test_identity(self):
        m = md.build_quantum_torus(THETA, 3)
        assert np.allclose(m.symbol_matrix(FourierSymbol.constant(2)), np.eye(m.dim))

    def test_cosine_toeplitz(self):
        m = md.build_torus(1, 5)
        A = m.symbol_matrix(FourierSymbol(1, {(0,): 2.0, (1,): 0.5, (-1,): 0.5}))
        expected = 2 * np.eye(11) + 0.5 * (np.eye(11, k=1) + np.eye(11, k=-1))
        assert np.array_equal(A, expected)

    def test_monomial_partial_isometry(self):
        m = md.build_quantum_torus(THETA, 3)
        A = m.symbol_matrix(FourierSymbol.monomial((1, 0)))
        cols = np.linalg.norm(A, axis=0)
        inside = m.basis.points[:, 0] < 3
        assert np.allclose(cols[inside], 1.0) and np.allclose(cols[~inside], 0.0)
        sub = A[np.ix_(~(m.basis.points[:, 0] == -3), inside)]
        assert np.allclose(sub.conj().T @ sub, np.eye(sub.shape[1]))

    def test_entry_formula(self):
        m = md.build_quantum_torus(THETA, 2)
        A = m.symbol_matrix(FourierSymbol.monomial((1, 1), 2.0))
        lat = m.basis
        col = lat.index((0, -1))
        row = lat.index((1, 0))
        assert A[row, col] == pytest.approx(2.0 * twist_phase(THETA, (1, 1), (0, -1)))

    def test_product_homomorphism_on_half_support(self):
        rng = np.random.default_rng(1)
        M = 8
        model = md.build_quantum_torus(THETA, M)

        def rand_symbol():
            return FourierSymbol(2, {(int(i), int(j)): complex(*rng.normal(size=2))
                                     for i, j in rng.integers(-2, 3, size=(5, 2))})

        a, b = rand_symbol(), rand_symbol()
        lhs = model.symbol_matrix(a) @ model.symbol_matrix(b)
        rhs = model.symbol_matrix(a.product(b, THETA))
        inner = np.all(np.abs(model.basis.points) <= M // 2, axis=1)
        assert np.max(np.abs((lhs - rhs)[np.ix_(inner, inner)])) <= 1e-12

    def test_self_adjoint_is_hermitian(self):
        a = FourierSymbol(3, {(1, 0, 0): 0.3 + 0.2j, (0, 1, -1): 0.7j, (0, 0, 0): 1.5})
        a = (a + a.adjoint(THETA3)).scale(0.5)
        assert a.is_self_adjoint(THETA3)
        A = md.build_quantum_torus(THETA3, 3).symbol_matrix(a)
        assert np.max(np.abs(A - A.conj().T)) <= 1e-14

    def test_dimension_mismatch(self):
        with pytest.raises(UnsupportedModel):
            md.build_torus(2, 2).symbol_matrix(FourierSymbol.constant(1))

    def test_steklov_needs_one_dimensional_weight(self):
        with pytest.raises(UnsupportedModel):
            md.build_steklov_circle(10, FourierSymbol.constant(2))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.tuples(st.integers(-9, 9), st.integers(-9, 9)),
                          st.floats(allow_nan=False, allow_infinity=False, width=64),
                          st.floats(allow_nan=False, allow_infinity=False, width=64)),
                min_size=1, max_size=10))
def test_json_round_trip_bit_exact(items):
    a = FourierSymbol(2, {k: complex(re, im) for k, re, im in items})
    b = FourierSymbol.from_json(a.to_json(), n=2)
    assert b.coeffs.keys() == a.coeffs.keys()
    for k, v in a.coeffs.items():
        w = b.coeffs[k]
        assert (v.real, v.imag) == (w.real, w.imag)


class TestDirac:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_clifford_relations(self, n):
        cl = md.CliffordAlgebra.canonical(n)
        assert cl.N == 2 ** (n // 2)
        assert cl.anticommutator_defect() <= 1e-13

    def test_zero_block(self):
        cl = md.CliffordAlgebra.canonical(3)
        assert np.array_equal(cl.block((0, 0, 0)), np.zeros((2, 2)))

    @pytest.mark.parametrize("m", [(1, 0), (2, -3), (1, 1, 1), (0, 2, -1, 4)])
    def test_block_spectrum(self, m):
        cl = md.CliffordAlgebra.canonical(len(m))
        ev = eigvalsh(cl.block(m))
        r = math.sqrt(sum(x * x for x in m))
        half = cl.N // 2
        assert np.allclose(ev, [-r] * half + [r] * half, atol=1e-13)

    def test_tau(self):
        assert md.build_dirac_quantum_torus(THETA, 2).tau(1.0) == pytest.approx(2 * math.pi)

    def test_d_squared_is_laplacian(self):
        m = md.build_dirac_quantum_torus(THETA, 2)
        D = m.d_matrix()
        lap = np.kron(np.diag(m.basis.norms() ** 2), np.eye(2))
        assert np.allclose(D @ D, lap, atol=1e-12)
        assert np.allclose(np.sort(eigvalsh(D)), m.spectrum(), atol=1e-12)

    def test_one_dimensional(self):
        m = md.build_dirac_quantum_torus(ThetaMatrix.zero(1), 3)
        assert np.allclose(m.spectrum(), np.arange(-3, 4))

    def test_symbol_action_is_tensor(self):
        m = md.build_dirac_quantum_torus(THETA, 2)
        q = md.build_quantum_torus(THETA, 2)
        a = FourierSymbol.monomial((1, -1))
        assert np.allclose(m.symbol_matrix(a), np.kron(q.symbol_matrix(a), np.eye(2)))


class TestRectangle:
    def test_single_dirichlet_mode(self):
        m = md.build_rectangle("dirichlet", math.pi, math.pi, 1)
        assert m.d_values == pytest.approx([math.sqrt(2)])

    def test_neumann_kernel(self):
        m = md.build_rectangle("neumann", 1.0, 2.0, 4)
        assert len(m.kernel_modes) == 1
        assert m.d_values[m.kernel_modes[0]] == 0.0

    def test_lattice_count(self):
        a, b, K = 1.0, 1.5, 300
        m = md.build_rectangle("dirichlet", a, b, K)
        lam = 400.0
        count = np.count_nonzero(m.d_values < lam)
        assert count / (a * b * lam ** 2 / (4 * math.pi)) == pytest.approx(1.0, abs=0.02)

    @pytest.mark.parametrize("boundary", ["dirichlet", "neumann"])
    def test_cosine_multiplication_vs_quadrature(self, boundary):
        a, b, K = 1.0, 2.0, 4
        m = md.build_rectangle(boundary, a, b, K)
        V = CosineSeries({(0, 0): 0.5, (1, 0): 0.3, (2, 1): -0.7})
        A = m.symbol_matrix(V)

        def phi(k, L, x):
            if boundary == "dirichlet":
                return math.sqrt(2 / L) * math.sin(k * math.pi * x / L)
            return math.sqrt((1 if k == 0 else 2) / L) * math.cos(k * math.pi * x / L)

        modes = m.basis.modes
        for i, j in [(0, 0), (1, 5), (7, 3), (len(modes) - 1, 2)]:
            (p1, p2), (q1, q2) = modes[i], modes[j]
            fx = {jj: integrate.quad(lambda x: phi(p1, a, x) * math.cos(jj * math.pi * x / a)
                                     * phi(q1, a, x), 0, a, epsabs=1e-14)[0] for jj in (0, 1, 2)}
            fy = {jj: integrate.quad(lambda y: phi(p2, b, y) * math.cos(jj * math.pi * y / b)
                                     * phi(q2, b, y), 0, b, epsabs=1e-14)[0] for jj in (0, 1)}
            ref = sum(v * fx[j1] * fy[j2] for (j1, j2), v in V.coeffs.items())
            assert A[i, j] == pytest.approx(ref, abs=1e-12)

    def test_tau(self):
        m = md.build_rectangle("neumann", 2.0, 3.0, 3)
        assert m.tau(CosineSeries({(0, 0): 1.0})) == pytest.approx(6.0 / (4 * math.pi))


class TestSteklov:
    def test_constant_weight(self):
        seq = md.steklov_sequence(md.build_steklov_circle(50, FourierSymbol.constant(1)))
        k = np.arange(1, 51)
        assert np.allclose(seq.positive, np.repeat(1.0 / k, 2))
        assert seq.negative.size == 0

    def test_closed_form_limit(self):
        seq = md.steklov_sequence(md.build_steklov_circle(400, FourierSymbol.constant(1)))
        for m in (10, 100, 400):
            j = 2 * m - 1
            assert j * seq.positive[j] == pytest.approx((2 * m - 1) / m, rel=1e-14)
        assert 799 * seq.positive[799] == pytest.approx(2.0, abs=3e-3)

    def test_negative_weight(self):
        g = FourierSymbol(1, {(0,): -1.0, (1,): 0.25, (-1,): 0.25})
        seq = md.steklov_sequence(md.build_steklov_circle(40, g))
        assert seq.positive.size == 0

    def test_banded_matches_dense(self):
        g = FourierSymbol(1, {(0,): 0.2, (1,): 0.5, (-1,): 0.5, (3,): 0.1j, (-3,): -0.1j})
        model = md.build_steklov_circle(30, g)
        seq = md.steklov_sequence(model)
        S = model.abs_power(-0.5)
        dense = np.linalg.eigvalsh(S @ model.symbol_matrix(g) @ S)
        got = np.sort(np.concatenate([seq.positive, -seq.negative, np.zeros(seq.zeros)]))
        assert np.allclose(got, dense, atol=1e-12)

    def test_complex_weight_rejected(self):
        with pytest.raises(ValueError):
            md.build_steklov_circle(10, FourierSymbol.monomial((1,)))


class TestGrushin:
    def test_zero_block(self):
        assert np.allclose(np.linalg.eigvalsh(md.grushin_block(5, 0)), np.sort(np.arange(-5, 6) ** 2))

    def test_toeplitz_coefficients(self):
        G = 64
        x = 2 * np.pi * np.arange(G) / G
        c = np.fft.fft(4 * (1 - np.cos(x)) ** 2) / G
        for off, v in md.GRUSHIN_TOEPLITZ.items():
            assert c[off % G].real == pytest.approx(v, abs=1e-12)
        assert np.max(np.abs(c[3:G - 2])) <= 1e-12

    def test_symmetric_in_eta(self):
        assert np.array_equal(md.grushin_block(6, 3), md.grushin_block(6, -3))
        B = md.grushin_block(6, 3)
        assert np.array_equal(B, B.T)
        assert np.linalg.eigvalsh(B)[0] >= 0

    def test_tau_unsupported(self):
        m = md.build_grushin(4, 4)
        with pytest.raises(UnsupportedModel):
            m.tau(1.0)
        with pytest.raises(UnsupportedModel):
            m.symbol_matrix(FourierSymbol.constant(2))

    def test_spectrum_blocks(self):
        m = md.build_grushin(3, 2)
        dense = np.linalg.eigvalsh(m.d_squared_matrix())
        assert np.allclose(np.sort(dense), m.d_squared_spectrum(), atol=1e-9)


class TestTau:
    def test_tau0(self):
        assert md.tau0(FourierSymbol.constant(2)) == 1
        assert md.tau0(FourierSymbol.monomial((1, 0))) == 0
        a = FourierSymbol(1, {(0,): 2.0, (1,): 1.0, (-1,): 1.0})
        assert md.tau0(a) == 2

    def test_identity_function_is_linear(self):
        a = FourierSymbol(2, {(0, 0): 0.7, (1, 0): 0.2, (-1, 0): 0.2})
        m = md.build_quantum_torus(THETA, 3)
        r = md.tau_of_function(m, a, lambda t: t, M_oracle=8)
        assert r.value == pytest.approx(m.tau(a), rel=1e-12)

    def test_commutative_quadrature(self):
        a = FourierSymbol(1, {(0,): 2.0, (1,): 0.5, (-1,): 0.5})
        r = md.tau_of_function(md.build_torus(1, 4), a, lambda t: t)
        assert r.value == pytest.approx(4.0, rel=1e-13)

    def test_quantum_negative_part(self):
        V = FourierSymbol(2, {(0, 0): -1.0, (1, 0): 0.25, (-1, 0): 0.25})
        m = md.build_quantum_torus(THETA, 3)
        r = md.tau_of_function(m, V, lambda t: np.maximum(-t, 0.0), M_oracle=16, tol=1e-10)
        assert r.value == pytest.approx(math.pi, rel=1e-12)

    def test_not_converged(self):
        a = FourierSymbol(1, {(0,): 0.0, (1,): 0.5, (-1,): 0.5})
        with pytest.raises(OracleNotConverged):
            md.tau_of_function(md.build_torus(1, 4), a, lambda t: np.abs(t), M_oracle=2, tol=1e-14)


def test_lattice_index_roundtrip():
    lat = LatticeTruncation(3, 2)
    assert np.array_equal(lat.index_array(lat.points), np.arange(lat.size))
    assert lat.index((3, 0, 0)) == -1
