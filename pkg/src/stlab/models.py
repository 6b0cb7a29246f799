"""Finite truncations of concrete spectral triples.

Every builder returns a ``ModelTriple`` holding the Dirac-type operator ``D``
in the form most convenient for its structure:

* diagonal models (tori, quantum tori, rectangles, the Steklov circle) keep
  the vector of eigenvalues of ``D`` in the natural basis;
* the Dirac quantum torus keeps one ``N x N`` block per lattice point;
* the Grushin model keeps one pentadiagonal block of ``D**2`` per
  ``y``-frequency.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn

from . import kernel
from .errors import OracleNotConverged, UnsupportedModel
from .kernel import SpectralDecomposition
from .symbols import (CosineSeries, FourierSymbol, LatticeTruncation, ThetaMatrix,
                      check_dimension, twist_phases)

DEFAULT_DIM_CAP = 20000


class ModelKind(str, enum.Enum):
    TORUS = "Torus"
    QUANTUM_TORUS = "QuantumTorus"
    DIRAC_QUANTUM_TORUS = "DiracQuantumTorus"
    RECTANGLE_DIRICHLET = "RectangleDirichlet"
    RECTANGLE_NEUMANN = "RectangleNeumann"
    STEKLOV_CIRCLE = "SteklovCircle"
    GRUSHIN = "Grushin"


TORUS_FAMILY = {ModelKind.TORUS, ModelKind.QUANTUM_TORUS, ModelKind.DIRAC_QUANTUM_TORUS,
                ModelKind.STEKLOV_CIRCLE}
RECTANGLES = {ModelKind.RECTANGLE_DIRICHLET, ModelKind.RECTANGLE_NEUMANN}


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / float(gamma_fn(n / 2 + 1))


def weyl_density(n: int) -> float:
    """``(2 pi)^-n |B^n|``: the density constant of the flat Laplacian."""
    return (2 * math.pi) ** (-n) * unit_ball_volume(n)


@dataclass(frozen=True)
class CliffordAlgebra:
    """Skew-adjoint generators with ``g_j g_k + g_k g_j = -2 delta_jk``."""

    n: int
    gammas: tuple

    @property
    def N(self) -> int:
        return self.gammas[0].shape[0]

    @classmethod
    def canonical(cls, n: int) -> "CliffordAlgebra":
        # Jordan-Wigner Hermitian generators e_j, then gamma_j = i e_j
        k = n // 2
        X = np.array([[0, 1], [1, 0]], dtype=complex)
        Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
        Z = np.diag([1.0 + 0j, -1.0])
        I2 = np.eye(2, dtype=complex)

        def chain(ops):
            out = np.eye(1, dtype=complex)
            for op in ops:
                out = np.kron(out, op)
            return out

        herm = []
        for l in range(k):
            for P in (X, Y):
                herm.append(chain([Z] * l + [P] + [I2] * (k - l - 1)))
        if n % 2 == 1:
            herm.append(chain([Z] * k) if k > 0 else np.eye(1, dtype=complex))
        return cls(n, tuple(1j * e for e in herm[:n]))

    def anticommutator_defect(self) -> float:
        N = self.N
        worst = 0.0
        for j, gj in enumerate(self.gammas):
            worst = max(worst, float(np.max(np.abs(gj.conj().T + gj))))
            for k, gk in enumerate(self.gammas):
                target = -2.0 * np.eye(N) if j == k else 0.0
                worst = max(worst, float(np.max(np.abs(gj @ gk + gk @ gj - target))))
        return worst

    def block(self, m) -> np.ndarray:
        """Hermitian symbol ``i sum_j m_j gamma_j`` of the Dirac operator at ``m``."""
        out = np.zeros((self.N, self.N), dtype=complex)
        for mj, g in zip(m, self.gammas):
            out += mj * g
        return 1j * out


@dataclass(frozen=True)
class RectangleBasis:
    boundary: str
    a: float
    b: float
    K: int
    modes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = self.mode_range
        modes = np.array(list(itertools.product(r, r)), dtype=np.int64)
        object.__setattr__(self, "modes", modes)

    @property
    def mode_range(self) -> range:
        return range(1, self.K + 1) if self.boundary == "dirichlet" else range(0, self.K + 1)

    @property
    def size(self) -> int:
        return len(self.modes)


@dataclass(frozen=True)
class ModelTriple:
    kind: ModelKind
    n: int
    p: float
    basis: object
    d_values: np.ndarray | None = None
    theta: ThetaMatrix | None = None
    kernel_modes: tuple = ()
    tau_constant: float | None = None
    clifford: CliffordAlgebra | None = None
    weight: FourierSymbol | None = None
    grushin_shape: tuple | None = None

    # -- structure ---------------------------------------------------------

    @property
    def dim(self) -> int:
        if self.kind is ModelKind.GRUSHIN:
            Mx, My = self.grushin_shape
            return (2 * Mx + 1) * (2 * My + 1)
        if self.kind is ModelKind.DIRAC_QUANTUM_TORUS:
            return self.basis.size * self.clifford.N
        return self.d_values.size

    @property
    def is_diagonal(self) -> bool:
        return self.d_values is not None

    @property
    def is_commutative(self) -> bool:
        return self.theta is None or self.theta.is_zero

    @property
    def M(self) -> int:
        return self.basis.M

    def kernel_mask(self) -> np.ndarray:
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(self.kernel_modes)] = True
        return mask

    def d_squared_spectrum(self) -> np.ndarray:
        """Ascending eigenvalues of ``D**2``."""
        if self.is_diagonal:
            return np.sort(self.d_values ** 2)
        if self.kind is ModelKind.DIRAC_QUANTUM_TORUS:
            sq = self.basis.norms() ** 2
            return np.sort(np.repeat(sq, self.clifford.N))
        vals = [kernel.banded_eigvalsh(grushin_block(self.grushin_shape[0], eta), 2)
                for eta in range(-self.grushin_shape[1], self.grushin_shape[1] + 1)]
        out = np.sort(np.concatenate(vals))
        out[out < 0] = 0.0
        return out

    def spectrum(self) -> np.ndarray:
        """Ascending eigenvalues of ``D``."""
        if self.is_diagonal:
            return np.sort(self.d_values)
        if self.kind is ModelKind.DIRAC_QUANTUM_TORUS:
            norms = self.basis.norms()
            if self.clifford.N == 1:
                # n = 1: the single block is -m
                return np.sort(-self.basis.points[:, 0].astype(float))
            half = self.clifford.N // 2
            return np.sort(np.concatenate([np.repeat(norms, half), np.repeat(-norms, half)]))
        return np.sqrt(self.d_squared_spectrum())

    def d_matrix(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.d_values)
        if self.kind is ModelKind.DIRAC_QUANTUM_TORUS:
            N = self.clifford.N
            out = np.zeros((self.dim, self.dim), dtype=complex)
            for i, m in enumerate(self.basis.points):
                out[i * N:(i + 1) * N, i * N:(i + 1) * N] = self.clifford.block(m)
            return out
        raise UnsupportedModel("the Grushin model exposes D**2 blocks only; use d_squared_matrix")

    def d_squared_matrix(self) -> np.ndarray:
        if self.kind is ModelKind.GRUSHIN:
            Mx, My = self.grushin_shape
            s = 2 * Mx + 1
            out = np.zeros((self.dim, self.dim))
            for i, eta in enumerate(range(-My, My + 1)):
                out[i * s:(i + 1) * s, i * s:(i + 1) * s] = grushin_block(Mx, eta)
            return out
        D = self.d_matrix()
        return D @ D

    def decomposition(self) -> SpectralDecomposition:
        """Spectral decomposition of ``D`` with the construction-exact kernel."""
        if self.is_diagonal:
            return SpectralDecomposition.from_diagonal(self.d_values, self.kernel_mask())
        if self.kind is ModelKind.DIRAC_QUANTUM_TORUS:
            N = self.clifford.N
            U = np.zeros((self.dim, self.dim), dtype=complex)
            lam = np.zeros(self.dim)
            for i, m in enumerate(self.basis.points):
                sl = slice(i * N, (i + 1) * N)
                if not np.any(m):
                    U[sl, sl] = np.eye(N)
                    continue
                w, V = np.linalg.eigh(self.clifford.block(m))
                lam[sl] = w
                U[sl, sl] = V
            order = np.argsort(lam, kind="stable")
            return SpectralDecomposition(lam[order], U[:, order], 0.0)
        D2 = kernel.eigh(self.d_squared_matrix())
        lam = np.sqrt(np.clip(D2.eigenvalues, 0.0, None))
        tol = 1e-8
        lam[lam <= tol] = 0.0
        return SpectralDecomposition(lam, np.array(D2.eigenvectors), tol)

    def abs_power(self, z) -> np.ndarray:
        """``|D|**z`` with zero on the kernel (dense matrix)."""
        if self.is_diagonal:
            return np.diag(kernel.power_values(self.d_values, z, self.kernel_mask()))
        return kernel.partial_power(self.decomposition(), z)

    def kernel_projection(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.kernel_mask().astype(float))
        return kernel.sign_and_kernel(self.decomposition())[1]

    # -- symbols -----------------------------------------------------------

    def symbol_matrix(self, a) -> np.ndarray:
        return symbol_to_matrix(self, a)

    def tau(self, a) -> float:
        """Value of the limit functional on a symbol (linear part only)."""
        if self.kind is ModelKind.GRUSHIN:
            raise UnsupportedModel("the Grushin density constant is not specified")
        if self.kind in RECTANGLES:
            if not isinstance(a, CosineSeries):
                raise UnsupportedModel("rectangle models act on cosine series")
            return self.tau_constant * a.v0
        if not isinstance(a, FourierSymbol):
            a = FourierSymbol.constant(self.n, a)
        return _real(self.tau_constant * a.a0)

    def min_excluded_d2(self) -> float:
        """Smallest eigenvalue of ``D**2`` among modes just outside the truncation."""
        if self.kind in RECTANGLES:
            K = self.basis.K
            return math.pi ** 2 * min((K + 1) ** 2 / self.basis.a ** 2, (K + 1) ** 2 / self.basis.b ** 2)
        if self.kind is ModelKind.GRUSHIN:
            Mx, My = self.grushin_shape
            return float(kernel.banded_eigvalsh(grushin_block(Mx, My + 1), 2)[0])
        return float((self.M + 1) ** 2)


def _real(z: complex, tol: float = 1e-12) -> float:
    z = complex(z)
    if abs(z.imag) > tol * max(1.0, abs(z.real)):
        raise ValueError(f"expected a real value, got imaginary part {z.imag:.3e}")
    return z.real


# -- builders ---------------------------------------------------------------


def build_torus(n: int, M: int, *, dim_cap: int = DEFAULT_DIM_CAP) -> ModelTriple:
    if n < 1 or M < 1:
        raise ValueError("need n >= 1 and M >= 1")
    check_dimension((2 * M + 1) ** n, dim_cap)
    lat = LatticeTruncation(n, M)
    return ModelTriple(ModelKind.TORUS, n, float(n), lat, lat.norms(),
                       theta=ThetaMatrix.zero(n), kernel_modes=(lat.origin,),
                       tau_constant=weyl_density(n) * (2 * math.pi) ** n)


def build_quantum_torus(theta: ThetaMatrix, M: int, *, dim_cap: int = DEFAULT_DIM_CAP) -> ModelTriple:
    n = theta.n
    if M < 1:
        raise ValueError("need M >= 1")
    check_dimension((2 * M + 1) ** n, dim_cap)
    lat = LatticeTruncation(n, M)
    return ModelTriple(ModelKind.QUANTUM_TORUS, n, float(n), lat, lat.norms(), theta=theta,
                       kernel_modes=(lat.origin,), tau_constant=unit_ball_volume(n))


def build_dirac_quantum_torus(theta: ThetaMatrix, M: int, *,
                              dim_cap: int = DEFAULT_DIM_CAP) -> ModelTriple:
    n = theta.n
    if M < 1:
        raise ValueError("need M >= 1")
    cl = CliffordAlgebra.canonical(n)
    check_dimension((2 * M + 1) ** n * cl.N, dim_cap)
    lat = LatticeTruncation(n, M)
    o = lat.origin
    kernel_modes = tuple(range(o * cl.N, (o + 1) * cl.N))
    return ModelTriple(ModelKind.DIRAC_QUANTUM_TORUS, n, float(n), lat, None, theta=theta,
                       kernel_modes=kernel_modes, clifford=cl,
                       tau_constant=2 ** (n // 2) * unit_ball_volume(n))


def build_rectangle(kind: str, a: float, b: float, K: int) -> ModelTriple:
    kind = kind.lower()
    if kind not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary condition {kind!r}")
    if a <= 0 or b <= 0 or K < 1:
        raise ValueError("need a, b > 0 and K >= 1")
    basis = RectangleBasis(kind, float(a), float(b), int(K))
    k1, k2 = basis.modes[:, 0], basis.modes[:, 1]
    d = np.pi * np.sqrt(k1 ** 2 / a ** 2 + k2 ** 2 / b ** 2)
    kernel_modes = tuple(int(i) for i in np.flatnonzero((k1 == 0) & (k2 == 0)))
    mk = ModelKind.RECTANGLE_DIRICHLET if kind == "dirichlet" else ModelKind.RECTANGLE_NEUMANN
    return ModelTriple(mk, 2, 2.0, basis, d, kernel_modes=kernel_modes,
                       tau_constant=weyl_density(2) * a * b)


def build_steklov_circle(M: int, gamma: FourierSymbol) -> ModelTriple:
    if gamma.n != 1:
        raise UnsupportedModel("the Steklov weight is a symbol on the 1-D lattice")
    if not gamma.is_self_adjoint(tol=1e-12):
        raise ValueError("the Steklov weight must be real-valued")
    lat = LatticeTruncation(1, M)
    return ModelTriple(ModelKind.STEKLOV_CIRCLE, 1, 1.0, lat, lat.norms(),
                       theta=ThetaMatrix.zero(1), kernel_modes=(lat.origin,),
                       tau_constant=weyl_density(1) * 2 * math.pi, weight=gamma)


def steklov_sequence(model: ModelTriple, zero_tol: float = 1e-12):
    """Signed eigenvalues of ``Lambda^{-1/2} gamma Lambda^{-1/2}`` off the kernel.

    The weight acts as a banded Toeplitz matrix, so the operator is assembled
    directly in LAPACK band storage; the kernel mode is kept as a zero row and
    column and dropped again by the zero tolerance.
    """
    from .sequences import signed_sequence

    if model.kind is not ModelKind.STEKLOV_CIRCLE:
        raise UnsupportedModel("steklov_sequence needs a SteklovCircle model")
    s = kernel.power_values(model.d_values, -0.5, model.kernel_mask())
    dim = s.size
    bw = min(max(model.weight.radius, 1), dim - 1)
    real = all(abs(v.imag) == 0 for v in model.weight.coeffs.values())
    ab = np.zeros((bw + 1, dim), dtype=float if real else complex)
    for off in range(bw + 1):
        c = model.weight.coeff((off,))
        if c == 0:
            continue
        # lower band: entry (i + off, i) carries the coefficient of e^{i off x}
        ab[off, : dim - off] = (c.real if real else c) * s[off:] * s[: dim - off]
    from scipy.linalg import eigvals_banded

    ev = eigvals_banded(ab, lower=True)
    return signed_sequence(ev, zero_tol)


# Fourier coefficients of 4 (1 - cos x)^2 = 6 - 8 cos x + 2 cos 2x
GRUSHIN_TOEPLITZ = {0: 6.0, 1: -4.0, -1: -4.0, 2: 1.0, -2: 1.0}


def grushin_block(Mx: int, eta: int) -> np.ndarray:
    """x-Fourier matrix of ``-d^2/dx^2 + 4 (1 - cos x)^2 eta^2`` on ``|k| <= Mx``."""
    k = np.arange(-Mx, Mx + 1)
    B = np.diag(k.astype(float) ** 2)
    e2 = float(eta) ** 2
    for off, c in GRUSHIN_TOEPLITZ.items():
        B += e2 * c * np.eye(k.size, k=off)
    return B


def build_grushin(Mx: int, My: int) -> ModelTriple:
    if Mx < 1 or My < 1:
        raise ValueError("need Mx, My >= 1")
    s = 2 * Mx + 1
    origin = My * s + Mx
    return ModelTriple(ModelKind.GRUSHIN, 2, 3.0, None, None, kernel_modes=(origin,),
                       grushin_shape=(int(Mx), int(My)))


# -- symbol action -----------------------------------------------------------


def _rectangle_factor(boundary: str, K: int, j: int) -> np.ndarray:
    """Matrix of multiplication by ``cos(j pi x / L)`` on the 1-D mode basis."""
    if boundary == "dirichlet":
        ks = np.arange(1, K + 1)
        pos = {k: i for i, k in enumerate(ks)}
        F = np.zeros((K, K))
        for i, k in enumerate(ks):
            for l, sgn in ((k + j, 1.0), (abs(k - j), float(np.sign(k - j)))):
                if l in pos and sgn != 0:
                    F[pos[l], i] += 0.5 * sgn
        return F
    ks = np.arange(0, K + 1)
    norm = np.where(ks == 0, 1.0, math.sqrt(2.0))  # proportional to the true norms
    F = np.zeros((K + 1, K + 1))
    for i, k in enumerate(ks):
        for l in (k + j, abs(k - j)):
            if l <= K:
                F[l, i] += 0.5 * norm[i] / norm[l]
    return F


def symbol_to_matrix(model: ModelTriple, a) -> np.ndarray:
    """Compressed matrix of the multiplication operator by ``a``."""
    if model.kind is ModelKind.GRUSHIN:
        raise UnsupportedModel("no symbol action is defined on the Grushin model")
    if model.kind in RECTANGLES:
        if not isinstance(a, CosineSeries):
            raise UnsupportedModel("rectangle models act on cosine series")
        basis = model.basis
        out = np.zeros((basis.size, basis.size))
        for (j1, j2), v in a.coeffs.items():
            out += v * np.kron(_rectangle_factor(basis.boundary, basis.K, j1),
                               _rectangle_factor(basis.boundary, basis.K, j2))
        return out
    if not isinstance(a, FourierSymbol):
        a = FourierSymbol.constant(model.n, a)
    if a.n != model.n:
        raise UnsupportedModel(f"symbol dimension {a.n} does not match model dimension {model.n}")
    lat: LatticeTruncation = model.basis
    pts = lat.points
    theta = model.theta if model.theta is not None else ThetaMatrix.zero(model.n)
    dim = lat.size
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for k, ak in a.coeffs.items():
        rows = lat.index_array(pts + np.asarray(k))
        ok = rows >= 0
        out[rows[ok], cols[ok]] += ak * twist_phases(theta, k, pts[ok])
    if model.is_commutative and not np.any(out.imag):
        out = out.real.copy()
    if model.kind is ModelKind.DIRAC_QUANTUM_TORUS:
        out = np.kron(out, np.eye(model.clifford.N))
    return out


def tau0(a: FourierSymbol) -> complex:
    return a.a0


# -- limit functional of functions of symbols ---------------------------------


@dataclass(frozen=True)
class OracleValue:
    value: float
    difference: float
    converged: bool


def _grid_mean(model: ModelTriple, a, f: Callable, G: int) -> float:
    if model.kind in RECTANGLES:
        A, B = model.basis.a, model.basis.b
        x = (np.arange(G) + 0.5) * A / G
        y = (np.arange(G) + 0.5) * B / G
        X, Y = np.meshgrid(x, y, indexing="ij")
        return float(np.mean(f(a.evaluate(X, Y, A, B))))
    grid = np.arange(G) * 2 * math.pi / G
    pts = np.array(list(itertools.product(grid, repeat=model.n)))
    vals = a.evaluate(pts)
    return float(np.mean(f(vals.real)))


def _oracle_entry(model: ModelTriple, a: FourierSymbol, f: Callable, M: int) -> float:
    lat = LatticeTruncation(model.n, M)
    helper = ModelTriple(ModelKind.QUANTUM_TORUS, model.n, model.p, lat, lat.norms(),
                         theta=model.theta, kernel_modes=(lat.origin,))
    A = symbol_to_matrix(helper, a)
    fA = kernel.matrix_function(kernel.eigh(A), f)
    o = lat.origin
    return _real(fA[o, o], tol=1e-10)


def tau_of_function(model: ModelTriple, a, f: Callable, M_oracle: int = 64,
                    tol: float | None = None) -> OracleValue:
    """``tau[f(a)]`` for a self-adjoint symbol ``a``.

    Commutative models integrate ``f(a(x))`` on a periodic (or midpoint) grid
    with ``2*M_oracle`` points per axis; quantum models read the ``(0, 0)``
    entry of ``f`` applied to the compressed matrix at radius ``M_oracle``.
    The reported difference compares with half the resolution.
    """
    if model.kind is ModelKind.GRUSHIN:
        raise UnsupportedModel("the Grushin density constant is not specified")
    if model.kind in RECTANGLES:
        lo = _grid_mean(model, a, f, M_oracle)
        hi = _grid_mean(model, a, f, 2 * M_oracle)
        const = model.tau_constant
    elif model.is_commutative:
        lo = _grid_mean(model, a, f, M_oracle)
        hi = _grid_mean(model, a, f, 2 * M_oracle)
        const = model.tau_constant
    else:
        lo = _oracle_entry(model, a, f, max(1, M_oracle // 2))
        hi = _oracle_entry(model, a, f, M_oracle)
        const = model.tau_constant
    value = const * hi
    diff = abs(const * (hi - lo))
    converged = tol is None or diff <= tol * max(1.0, abs(value))
    if not converged:
        raise OracleNotConverged(f"tau oracle changed by {diff:.3e} between resolutions")
    return OracleValue(value, diff, True if tol is None else converged)


def symbol_function(model: ModelTriple, a: FourierSymbol, f: Callable, M_oracle: int = 64,
                    radius: int | None = None, cutoff: float = 1e-14) -> FourierSymbol:
    """Symbol of ``f(a)`` truncated to ``max|k| <= radius``.

    Commutative models use the FFT of ``f(a(x))`` on a grid of ``4*M_oracle``
    points per axis; quantum models read the column of ``f(A)`` at the origin.
    """
    if model.kind not in TORUS_FAMILY:
        raise UnsupportedModel("symbol_function is defined for torus-family models")
    n = model.n
    radius = M_oracle if radius is None else radius
    if model.is_commutative:
        G = 4 * M_oracle
        grid = np.arange(G) * 2 * math.pi / G
        axes = np.meshgrid(*([grid] * n), indexing="ij")
        pts = np.stack([ax.ravel() for ax in axes], axis=1)
        vals = f(a.evaluate(pts).real).reshape((G,) * n)
        c = np.fft.fftn(vals) / G ** n
        coeffs = {}
        for k in itertools.product(range(-radius, radius + 1), repeat=n):
            v = c[tuple(ki % G for ki in k)]
            if abs(v) > cutoff:
                coeffs[k] = v
        return FourierSymbol(n, coeffs)
    lat = LatticeTruncation(n, M_oracle)
    helper = ModelTriple(ModelKind.QUANTUM_TORUS, n, model.p, lat, lat.norms(),
                         theta=model.theta, kernel_modes=(lat.origin,))
    fA = kernel.matrix_function(kernel.eigh(symbol_to_matrix(helper, a)), f)
    col = fA[:, lat.origin]
    coeffs = {}
    for idx, m in enumerate(lat.points):
        if np.max(np.abs(m)) <= radius and abs(col[idx]) > cutoff:
            coeffs[tuple(int(x) for x in m)] = col[idx]
    return FourierSymbol(n, coeffs)
