"""Operators built from a model triple and symbols.

Birman-Schwinger sandwiches, fractional Schrodinger operators and their
counting functions, fractional commutators, heat and zeta traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad as scipy_quad

from . import kernel
from .errors import GridBelowAbscissa, NotPositive, TruncationUnsafe
from .models import (RECTANGLES, ModelKind, ModelTriple, _rectangle_factor, symbol_function, symbol_to_matrix,
                     LatticeTruncation)
from .sequences import CountingResult, SingularSequence, mu_sequence
from .symbols import CosineSeries, FourierSymbol

NEAR_EIGENVALUE_TOL = 1e-9


def _symbol_matrix(model: ModelTriple, a) -> np.ndarray:
    if isinstance(a, np.ndarray):
        return a
    return symbol_to_matrix(model, a)


def _sandwich_diag(s: np.ndarray, A: np.ndarray) -> np.ndarray:
    return (s[:, None] * A) * s[None, :]


def birman_schwinger(model: ModelTriple, a, q: float) -> np.ndarray:
    """``|D|^{-q/2} a |D|^{-q/2}``; kernel rows and columns vanish."""
    if q <= 0:
        raise ValueError("q must be positive")
    A = _symbol_matrix(model, a)
    if model.is_diagonal:
        s = kernel.power_values(model.d_values, -q / 2, model.kernel_mask())
        return _sandwich_diag(s, A)
    P = model.abs_power(-q / 2)
    return P @ A @ P


def sandwich(model: ModelTriple, a, q: float) -> np.ndarray:
    """``a^{1/2} |D|^{-q} a^{1/2}`` for a positive symbol."""
    A = _symbol_matrix(model, a)
    dec = kernel.eigh(A)
    if dec.eigenvalues[0] <= dec.kernel_tol:
        raise NotPositive(f"symbol matrix has minimal eigenvalue {dec.eigenvalues[0]:.3e}")
    R = dec.apply(np.sqrt(dec.eigenvalues))
    if model.is_diagonal:
        s = kernel.power_values(model.d_values, -q, model.kernel_mask())
        return (R * s[None, :]) @ R
    return R @ model.abs_power(-q) @ R


def birman_schwinger_counts(H0: np.ndarray, V: np.ndarray) -> tuple[int, int]:
    """``(#{spec(H0+V) < 0}, #{spec(H0^{-1/2} V H0^{-1/2}) < -1})``.

    ``H0`` must be positive definite.
    """
    d0 = kernel.eigh(H0)
    if d0.eigenvalues[0] <= 0:
        raise NotPositive("H0 must be positive definite")
    R = d0.apply(d0.eigenvalues ** -0.5)
    direct = int(np.count_nonzero(kernel.eigvalsh(H0 + V) < 0))
    K = R @ V @ R
    bs = int(np.count_nonzero(kernel.eigvalsh(0.5 * (K + K.conj().T)) < -1))
    return direct, bs


def _potential_l1(V) -> float:
    if isinstance(V, (FourierSymbol, CosineSeries)):
        return V.l1_norm
    return float(np.max(np.sum(np.abs(np.asarray(V)), axis=1)))


@dataclass(frozen=True)
class SchrodingerOperator:
    model: ModelTriple
    q: float
    h: float
    V: object
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return kernel.eigvalsh(self.matrix)

    def count(self, lam: float = 0.0) -> CountingResult:
        ev = self.eigenvalues()
        return CountingResult(float(lam), int(np.count_nonzero(ev < lam)))

    def near_threshold(self, lam: float = 0.0) -> bool:
        """True if some eigenvalue is within ``1e-9`` of ``lam``."""
        ev = self.eigenvalues()
        return bool(np.min(np.abs(ev - lam)) < NEAR_EIGENVALUE_TOL)


def truncation_safe(model: ModelTriple, V, q: float, h: float, lam: float = 0.0) -> bool:
    """Every eigenvalue below ``lam`` is captured by the finite section."""
    return h ** (2 * q) * model.min_excluded_d2() ** q > lam + _potential_l1(V)


def minimal_safe_radius(h: float, q: float, V, lam: float = 0.0) -> int:
    """Smallest lattice radius ``M`` with ``h^{2q} (M+1)^{2q} > lam + |V|_1``."""
    bound = (lam + _potential_l1(V)) ** (1.0 / (2 * q)) / h
    M = max(1, int(math.floor(bound)))
    while (h * (M + 1)) ** (2 * q) <= lam + _potential_l1(V):
        M += 1
    while M > 1 and (h * M) ** (2 * q) > lam + _potential_l1(V):
        M -= 1
    return M


def schrodinger(model: ModelTriple, V, q: float, h: float, lam: float = 0.0,
                check_truncation: bool = True) -> SchrodingerOperator:
    """``h^{2q} (D^2)^q + V`` on the finite section."""
    if h <= 0 or q <= 0:
        raise ValueError("h and q must be positive")
    if check_truncation and not truncation_safe(model, V, q, h, lam):
        raise TruncationUnsafe(
            f"h^{2 * q:g} * (excluded D^2)^{q:g} does not exceed lam + |V|_1 at h={h:g}")
    A = _symbol_matrix(model, V)
    if model.is_diagonal:
        kin = np.diag(h ** (2 * q) * model.d_values ** (2 * q))
    else:
        D2 = kernel.eigh(model.d_squared_matrix())
        kin = h ** (2 * q) * kernel.matrix_function(D2, lambda t: np.clip(t, 0, None) ** q)
    return SchrodingerOperator(model, q, h, V, kin + A)


def fractional_commutator(model: ModelTriple, a, q: float) -> np.ndarray:
    """``[|D|^{-q}, a]``."""
    A = _symbol_matrix(model, a)
    if model.is_diagonal:
        s = kernel.power_values(model.d_values, -q, model.kernel_mask())
        return s[:, None] * A - A * s[None, :]
    P = model.abs_power(-q)
    return P @ A - A @ P


@dataclass(frozen=True)
class TraceCurve:
    grid: np.ndarray
    values: np.ndarray


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size > 1 and np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return g


def _diag_weights(model: ModelTriple, a) -> np.ndarray:
    """Diagonal of the symbol matrix; exact for torus-family symbols."""
    if a is None:
        return np.ones(model.dim)
    if model.kind in RECTANGLES and isinstance(a, CosineSeries):
        # diag(kron(F1, F2)) = kron(diag F1, diag F2)
        b = model.basis
        w = np.zeros(b.size)
        for (j1, j2), v in a.coeffs.items():
            w += v * np.kron(np.diag(_rectangle_factor(b.boundary, b.K, j1)),
                             np.diag(_rectangle_factor(b.boundary, b.K, j2)))
        return w
    if model.kind in RECTANGLES or isinstance(a, np.ndarray):
        return np.real(np.diag(_symbol_matrix(model, a)))
    if not isinstance(a, FourierSymbol):
        return np.full(model.dim, float(a))
    # only k = 0 contributes to the diagonal, with trivial phase
    return np.full(model.dim, a.a0)


def heat_trace(model: ModelTriple, a, t_grid: Sequence[float]) -> TraceCurve:
    """``Tr[a exp(-t D^2)]`` for every ``t`` on the grid."""
    t = _check_grid(t_grid)
    if np.any(t <= 0):
        raise ValueError("heat times must be positive")
    if model.kind is ModelKind.GRUSHIN:
        if a is not None and not (np.isscalar(a)):
            raise ValueError("the Grushin model only supports scalar weights")
        c = 1.0 if a is None else float(a)
        ev = model.d_squared_spectrum()
        vals = [c * math.fsum(np.exp(-ti * ev)) for ti in t]
        return TraceCurve(t, np.array(vals))
    d2 = model.d_squared_spectrum() if not model.is_diagonal else model.d_values ** 2
    if model.is_diagonal:
        w = _diag_weights(model, a)
        vals = [_real_sum(w * np.exp(-ti * d2)) for ti in t]
    else:
        # Dirac: each lattice site carries N copies of |m|^2
        norms2 = model.basis.norms() ** 2
        a0 = 1.0 if a is None else (a.a0 if isinstance(a, FourierSymbol) else complex(a))
        vals = [model.clifford.N * _real_sum(a0 * np.exp(-ti * norms2)) for ti in t]
    return TraceCurve(t, np.array(vals))


def _real_sum(x) -> float:
    x = np.asarray(x)
    s = math.fsum(np.real(x))
    if np.iscomplexobj(x):
        im = math.fsum(np.imag(x))
        if abs(im) > 1e-10 * max(1.0, abs(s)):
            raise ValueError(f"trace has imaginary part {im:.3e}")
    return s


def jacobi_theta(t: float, terms: int | None = None) -> float:
    """``sum_{k in Z} exp(-t k^2)`` summed directly."""
    if terms is None:
        terms = int(math.ceil(math.sqrt(40.0 / t))) + 2
    k = np.arange(1, terms + 1)
    return 1.0 + 2.0 * math.fsum(np.exp(-t * k.astype(float) ** 2))


def jacobi_theta_dual(t: float, terms: int = 6) -> float:
    """The same sum through its Poisson-dual form ``sqrt(pi/t) sum exp(-pi^2 k^2 / t)``."""
    k = np.arange(1, terms + 1)
    return math.sqrt(math.pi / t) * (1.0 + 2.0 * math.fsum(np.exp(-math.pi ** 2 * k ** 2 / t)))


def zeta_tail(model: ModelTriple, s: float) -> float:
    """Continuum estimate of ``sum |m|^{-s}`` over lattice points beyond the truncation.

    Available for lattice models with ``n <= 2``; returns 0 otherwise.
    """
    if model.kind not in (ModelKind.TORUS, ModelKind.QUANTUM_TORUS, ModelKind.STEKLOV_CIRCLE,
                          ModelKind.DIRAC_QUANTUM_TORUS):
        return 0.0
    L = model.basis.M + 0.5
    mult = model.clifford.N if model.clifford is not None else 1
    if model.n == 1:
        return mult * 2.0 * L ** (1.0 - s) / (s - 1.0)
    if model.n == 2:
        ang, _ = scipy_quad(lambda phi: math.cos(phi) ** (s - 2.0), 0.0, math.pi / 4)
        return mult * 8.0 * ang * L ** (2.0 - s) / (s - 2.0)
    return 0.0


def zeta_trace(model: ModelTriple, a, s_grid: Sequence[float], tail_correction: bool = False) -> TraceCurve:
    """``Tr[a |D|^{-s}]`` for real ``s > p``.

    With ``tail_correction`` the contribution of lattice points outside the
    truncation is added through its continuum approximation (weighted by the
    constant coefficient of ``a``).
    """
    s_arr = _check_grid(s_grid)
    if np.any(s_arr <= model.p):
        raise GridBelowAbscissa(f"zeta grid must lie above the abscissa p={model.p:g}")
    mask = model.kernel_mask()
    if model.is_diagonal:
        w = _diag_weights(model, a)
        lam = np.where(mask, 1.0, model.d_values)
        vals = []
        for s in s_arr:
            v = _real_sum(np.where(mask, 0.0, w * lam ** -s))
            vals.append(v)
    elif model.kind is ModelKind.DIRAC_QUANTUM_TORUS:
        norms = model.basis.norms()
        site_mask = norms == 0
        lam = np.where(site_mask, 1.0, norms)
        w = np.full(norms.size, 1.0 if a is None else (a.a0 if isinstance(a, FourierSymbol) else a))
        vals = [model.clifford.N * _real_sum(np.where(site_mask, 0.0, w * lam ** -s)) for s in s_arr]
    else:
        c = 1.0 if a is None else float(a)
        ev = np.sqrt(model.d_squared_spectrum())
        ev = ev[ev > 1e-8]
        vals = [c * math.fsum(ev ** -s) for s in s_arr]
    vals = np.array(vals, dtype=float)
    if tail_correction:
        a0 = 1.0
        if isinstance(a, FourierSymbol):
            a0 = float(np.real(a.a0))
        elif a is not None:
            a0 = float(a)
        vals = vals + np.array([a0 * zeta_tail(model, s) for s in s_arr])
    return TraceCurve(s_arr, vals)


@dataclass(frozen=True)
class ResidueProbe:
    eps: np.ndarray
    scaled: np.ndarray
    extrapolated: float


def residue_probe(model: ModelTriple, a, eps: Sequence[float] = (0.4, 0.2, 0.1),
                  tail_correction: bool = True) -> ResidueProbe:
    """Richardson extrapolation of ``eps * Tr[a |D|^{-p-eps}]`` to ``eps = 0``."""
    e = np.sort(np.asarray(eps, dtype=float))
    curve = zeta_trace(model, a, model.p + e, tail_correction=tail_correction)
    scaled = e * curve.values
    coef = np.polyfit(e, scaled, len(e) - 1)
    return ResidueProbe(e, scaled, float(coef[-1]))


def _part_matrix(model: ModelTriple, a: FourierSymbol, f, oracle_factor: int = 2) -> np.ndarray:
    """Compressed matrix of ``f(a)``.

    Commutative symbols go through the FFT of ``f(a(x))``; twisted ones through
    ``f`` of the compressed matrix at a larger radius, cut back to the model
    lattice.
    """
    M = model.M
    if model.is_commutative:
        fa = symbol_function(model, a, f, M_oracle=oracle_factor * M, radius=2 * M)
        return symbol_to_matrix(model, fa)
    big = LatticeTruncation(model.n, oracle_factor * M)
    helper = ModelTriple(ModelKind.QUANTUM_TORUS, model.n, model.p, big, big.norms(),
                         theta=model.theta, kernel_modes=(big.origin,))
    F = kernel.matrix_function(kernel.eigh(symbol_to_matrix(helper, a)), f)
    idx = big.index_array(model.basis.points)
    out = F[np.ix_(idx, idx)]
    if model.kind is ModelKind.DIRAC_QUANTUM_TORUS:
        out = np.kron(out, np.eye(model.clifford.N))
    return out


def positive_part(t):
    return np.maximum(t, 0.0)


def negative_part(t):
    return np.maximum(-t, 0.0)


def pos_neg_part_defect(model: ModelTriple, a: FourierSymbol, q: float, part: str = "+",
                        oracle_factor: int = 2) -> SingularSequence:
    """Singular values of ``(|D|^{-q/2} a |D|^{-q/2})_pm - |D|^{-q/2} a_pm |D|^{-q/2}``."""
    f = positive_part if part == "+" else negative_part
    B = birman_schwinger(model, a, q)
    Bpart = kernel.matrix_function(kernel.eigh(B), f)
    Apart = _part_matrix(model, a, f, oracle_factor)
    Apart = 0.5 * (Apart + Apart.conj().T)
    return mu_sequence(Bpart - birman_schwinger(model, Apart, q))
