"""Dense Hermitian linear algebra with the partial-inverse power convention.

Operators are plain ``numpy`` arrays.  A Hermitian input is checked once on
entry and symmetrized; every spectral object produced here is immutable.

Two eigensolvers are available:

* ``method="lapack"`` (default) calls LAPACK through ``numpy.linalg.eigh``;
* ``method="ql"`` is a self-contained Householder tridiagonalization followed
  by the implicit-shift QL iteration.  It is quadratic in Python-level work and
  is meant for small matrices and for cross-checking the LAPACK route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigvals_banded

from .errors import ConvergenceFailure, NonHermitianInput

HERMITIAN_TOL = 1e-10
DEFAULT_KERNEL_RTOL = 1e-10
_COMPENSATED_MAX_DIM = 512


def check_hermitian(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return the symmetrized copy of ``A`` or raise ``NonHermitianInput``.

    The tolerance is absolute for matrices with entries of order one and
    scales with ``max|A_ij|`` otherwise.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonHermitianInput(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise NonHermitianInput("empty matrix")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.conj().T)))
    if asym > tol * scale:
        raise NonHermitianInput(f"asymmetry {asym:.3e} exceeds {tol:.1e}")
    H = 0.5 * (A + A.conj().T)
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real.copy()
    return H


@dataclass(frozen=True)
class SpectralDecomposition:
    """``A = U diag(eigenvalues) U*`` with ascending eigenvalues."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kernel_tol: float

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def kernel_mask(self) -> np.ndarray:
        return np.abs(self.eigenvalues) <= self.kernel_tol

    def apply(self, values) -> np.ndarray:
        """Return ``U diag(values) U*``."""
        U = self.eigenvectors
        return (U * values) @ U.conj().T

    def reconstruct(self) -> np.ndarray:
        return self.apply(self.eigenvalues)

    @classmethod
    def from_diagonal(cls, values, kernel_mask=None) -> "SpectralDecomposition":
        """Decomposition of ``diag(values)``.

        ``kernel_mask`` marks exact-kernel modes known from construction; the
        returned ``kernel_tol`` is then zero and only those entries may vanish.
        """
        values = np.asarray(values, dtype=float)
        vals = values.copy()
        if kernel_mask is not None:
            vals[np.asarray(kernel_mask, dtype=bool)] = 0.0
            tol = 0.0
        else:
            tol = default_kernel_tol(vals)
        order = np.argsort(vals, kind="stable")
        U = np.zeros((vals.size, vals.size))
        U[order, np.arange(vals.size)] = 1.0
        return cls(vals[order], U, tol)


@dataclass(frozen=True)
class SingularValueData:
    """``T = left diag(values) right*`` with nonincreasing ``values``."""

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.values) @ self.right.conj().T


def default_kernel_tol(eigenvalues) -> float:
    ev = np.asarray(eigenvalues)
    if ev.size == 0:
        return 0.0
    return DEFAULT_KERNEL_RTOL * float(np.max(np.abs(ev)))


# -- eigensolvers -----------------------------------------------------------


def householder_tridiagonal(A: np.ndarray):
    """Reduce Hermitian ``A`` to a real symmetric tridiagonal matrix.

    Returns ``(d, e, Q)`` with ``Q* A Q = tridiag(e, d, e)`` where ``d`` is the
    diagonal and ``e[i]`` the entry at ``(i+1, i)``; ``e`` is padded to length
    ``n`` with a trailing zero.  ``Q`` is unitary.
    """
    T = np.array(A, dtype=complex)
    n = T.shape[0]
    Q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = T[k + 1 :, k]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * norm_x
        v /= np.linalg.norm(v)
        # H = I - 2 v v*, applied from both sides on the trailing block
        T[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ T[k + 1 :, :])
        T[:, k + 1 :] -= 2.0 * np.outer(T[:, k + 1 :] @ v, v.conj())
        Q[:, k + 1 :] -= 2.0 * np.outer(Q[:, k + 1 :] @ v, v.conj())
    d = T.diagonal().real.copy()
    sub = T.diagonal(-1).copy()
    # diagonal unitary that rotates the subdiagonal onto the positive reals
    phases = np.ones(n, dtype=complex)
    for i, s in enumerate(sub):
        mod = abs(s)
        phases[i + 1] = phases[i] * (s / mod if mod > 0 else 1.0)
    Q = Q * phases
    e = np.zeros(n)
    e[: n - 1] = np.abs(sub)
    return d, e, Q


def tridiagonal_ql(d, e, Z, max_iter: int = 60):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``d`` (diagonal) and ``e`` (subdiagonal, ``e[i]`` at ``(i+1, i)``, length
    ``n``) are consumed; the rotations are accumulated into the columns of
    ``Z``.  Returns ascending eigenvalues and the rotated ``Z``.
    """
    d = np.array(d, dtype=float)
    e = np.array(e, dtype=float)
    Z = np.array(Z)
    n = d.size
    eps = np.finfo(float).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                raise ConvergenceFailure(f"QL iteration cap {max_iter} hit at index {l}")
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = Z[:, i].copy()
                Z[:, i] = c * zi - s * Z[:, i + 1]
                Z[:, i + 1] = s * zi + c * Z[:, i + 1]
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d, kind="stable")
    return d[order], Z[:, order]


def eigh(A, method: str = "lapack", kernel_tol: float | None = None) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    H = check_hermitian(A)
    if method == "lapack":
        try:
            w, U = np.linalg.eigh(H)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(str(exc)) from exc
    elif method == "ql":
        d, e, Q = householder_tridiagonal(H)
        w, U = tridiagonal_ql(d, e, Q)
        if not np.iscomplexobj(H):
            # a real input keeps real eigenvectors up to a column phase
            U = _realify_columns(U)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    tol = default_kernel_tol(w) if kernel_tol is None else float(kernel_tol)
    return SpectralDecomposition(np.ascontiguousarray(w), np.ascontiguousarray(U), tol)


def _realify_columns(U: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(U), axis=0)
    ph = U[idx, np.arange(U.shape[1])]
    U = U * (np.abs(ph) / ph).conj()
    if np.max(np.abs(U.imag)) < 1e-12:
        return U.real.copy()
    return U


def eigvalsh(A) -> np.ndarray:
    """Ascending eigenvalues only (no eigenvectors)."""
    H = check_hermitian(A)
    try:
        return np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def banded_eigvalsh(A, bandwidth: int) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix with the given half-bandwidth.

    Entries outside the band are ignored, so the caller is responsible for the
    band structure.
    """
    A = np.asarray(A)
    n = A.shape[0]
    bw = min(int(bandwidth), n - 1)
    ab = np.zeros((bw + 1, n), dtype=A.dtype)
    for k in range(bw + 1):
        ab[k, : n - k] = A.diagonal(-k)
    try:
        return eigvals_banded(ab, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def svd(T) -> SingularValueData:
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"svd expects a square matrix, got {T.shape}")
    try:
        U, s, Vh = np.linalg.svd(T)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SingularValueData(s, U, Vh.conj().T)


def singular_values(T) -> np.ndarray:
    try:
        return np.linalg.svd(np.asarray(T), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


# -- functional calculus ----------------------------------------------------


def power_values(eigenvalues, z, kernel_mask) -> np.ndarray:
    """``|lambda|**z`` with zero on the kernel."""
    lam = np.abs(np.asarray(eigenvalues, dtype=float))
    kernel_mask = np.asarray(kernel_mask, dtype=bool)
    safe = np.where(kernel_mask, 1.0, lam)
    out = safe ** (complex(z) if np.iscomplexobj(z) or isinstance(z, complex) else float(z))
    return np.where(kernel_mask, 0.0, out)


def partial_power(D: SpectralDecomposition, z) -> np.ndarray:
    """``|D|**z`` on the orthogonal complement of the kernel, zero on it."""
    return D.apply(power_values(D.eigenvalues, z, D.kernel_mask))


def matrix_function(A: SpectralDecomposition, f: Callable) -> np.ndarray:
    vals = np.asarray(f(A.eigenvalues))
    if vals.shape != A.eigenvalues.shape:
        vals = np.array([f(x) for x in A.eigenvalues])
    return A.apply(vals)


def sign_and_kernel(D: SpectralDecomposition):
    """Return ``(F, P0)``: the sign of ``D`` and the kernel projection."""
    mask = D.kernel_mask
    sign = np.where(mask, 0.0, np.sign(D.eigenvalues))
    return D.apply(sign), D.apply(mask.astype(float))


def reconstruction_residual(A, D: SpectralDecomposition) -> float:
    """``max |A - U diag(lambda) U*|``.

    Up to ``_COMPENSATED_MAX_DIM`` the rank-one terms are accumulated with
    Kahan compensation; larger matrices use one BLAS product.
    """
    A = np.asarray(A)
    U, lam = D.eigenvectors, D.eigenvalues
    if D.dim > _COMPENSATED_MAX_DIM:
        return float(np.max(np.abs(A - D.reconstruct())))
    dtype = np.result_type(A, U)
    total = np.zeros(A.shape, dtype=dtype)
    comp = np.zeros(A.shape, dtype=dtype)
    for k in range(D.dim):
        term = lam[k] * np.outer(U[:, k], U[:, k].conj()) - comp
        t = total + term
        comp = (t - total) - term
        total = t
    return float(np.max(np.abs(A - total)))
