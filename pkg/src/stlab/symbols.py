"""Finitely supported symbols on integer lattices.

A ``FourierSymbol`` stores ``a = sum_k a_k U^k`` where ``U^k`` is the ordered
monomial ``U_1^{k_1} ... U_n^{k_n}``.  For ``theta = 0`` this is an ordinary
trigonometric polynomial ``sum_k a_k e^{i k.x}``.

The monomials multiply through the bicharacter

    U^k U^m = sigma(k, m) U^{k+m},   sigma(k, m) = exp(2 pi i sum_{q<p} theta_qp k_p m_q),

obtained by moving each ``U_p`` factor of ``U^k`` to the right past the
``U_q`` factors (``q < p``) of ``U^m``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionOverflow

ANTISYM_TOL = 1e-14


@dataclass(frozen=True)
class ThetaMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("theta must be square")
        if np.max(np.abs(e + e.T), initial=0.0) > ANTISYM_TOL:
            raise ValueError("theta must be antisymmetric")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.entries)

    @property
    def upper(self) -> np.ndarray:
        """Strictly upper-triangular part; ``sigma(k, m) = exp(2 pi i m.upper.k)``."""
        return np.triu(self.entries, 1)

    @classmethod
    def zero(cls, n: int) -> "ThetaMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_pairs(cls, n: int, pairs: dict) -> "ThetaMatrix":
        """Build from ``{(j, k): value}`` with 1-based ``j < k``."""
        e = np.zeros((n, n))
        for (j, k), v in pairs.items():
            e[j - 1, k - 1] = v
            e[k - 1, j - 1] = -v
        return cls(e)

    def to_list(self) -> list[float]:
        return [float(x) for x in self.entries.ravel()]

    @classmethod
    def from_list(cls, values, n: int | None = None) -> "ThetaMatrix":
        v = np.asarray(values, dtype=float)
        if n is None:
            n = int(round(math.sqrt(v.size)))
        return cls(v.reshape(n, n))


def twist_phase(theta: ThetaMatrix, k, m) -> complex:
    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    return complex(np.exp(2j * np.pi * (m @ theta.upper @ k)))


def twist_phases(theta: ThetaMatrix, k, points: np.ndarray) -> np.ndarray:
    """``sigma(k, m)`` for every row ``m`` of ``points``."""
    if theta.is_zero:
        return np.ones(len(points), dtype=complex)
    return np.exp(2j * np.pi * (points @ (theta.upper @ np.asarray(k, dtype=float))))


@dataclass(frozen=True)
class LatticeTruncation:
    """Integer vectors with ``max|m_i| <= M`` in lexicographic order."""

    n: int
    M: int
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.M < 0:
            raise ValueError("need n >= 1 and M >= 0")
        r = np.arange(-self.M, self.M + 1)
        pts = np.array(list(itertools.product(r, repeat=self.n)), dtype=np.int64)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def side(self) -> int:
        return 2 * self.M + 1

    @property
    def size(self) -> int:
        return self.side ** self.n

    def index_array(self, pts) -> np.ndarray:
        """Mixed-radix index of each row; -1 outside the truncation."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.int64))
        inside = np.all(np.abs(pts) <= self.M, axis=1)
        weights = self.side ** np.arange(self.n - 1, -1, -1)
        idx = (pts + self.M) @ weights
        return np.where(inside, idx, -1)

    def index(self, m) -> int:
        return int(self.index_array(m)[0])

    @property
    def origin(self) -> int:
        return self.index(np.zeros(self.n, dtype=np.int64))

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points.astype(float) ** 2, axis=1))


def check_dimension(dim: int, cap: int) -> None:
    if dim > cap:
        raise DimensionOverflow(f"truncation dimension {dim} exceeds cap {cap}")


def _key(k) -> tuple[int, ...]:
    return tuple(int(x) for x in np.atleast_1d(k))


@dataclass(frozen=True)
class FourierSymbol:
    n: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for k, v in self.coeffs.items():
            key = _key(k)
            if len(key) != self.n:
                raise ValueError(f"lattice vector {key} is not {self.n}-dimensional")
            v = complex(v)
            if v != 0:
                clean[key] = clean.get(key, 0) + v
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    # construction helpers
    @classmethod
    def constant(cls, n: int, c: complex = 1.0) -> "FourierSymbol":
        return cls(n, {(0,) * n: c})

    @classmethod
    def monomial(cls, k, c: complex = 1.0) -> "FourierSymbol":
        k = _key(k)
        return cls(len(k), {k: c})

    @classmethod
    def cosine(cls, n: int, axis: int, amplitude: float = 1.0) -> "FourierSymbol":
        """``amplitude * (U_axis + U_axis^*) / 2``; ``axis`` is 0-based."""
        e = [0] * n
        e[axis] = 1
        return cls(n, {tuple(e): amplitude / 2, tuple(-x for x in e): amplitude / 2})

    def coeff(self, k) -> complex:
        return self.coeffs.get(_key(k), 0j)

    @property
    def a0(self) -> complex:
        return self.coeff((0,) * self.n)

    @property
    def radius(self) -> int:
        """Largest ``max|k_i|`` over the support."""
        return max((max(abs(x) for x in k) for k in self.coeffs), default=0)

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(v) for v in self.coeffs.values()))

    def keys_array(self) -> np.ndarray:
        return np.array(list(self.coeffs.keys()), dtype=np.int64).reshape(-1, self.n)

    def values_array(self) -> np.ndarray:
        return np.array(list(self.coeffs.values()), dtype=complex)

    # algebra
    def __add__(self, other):
        if not isinstance(other, FourierSymbol):
            other = FourierSymbol.constant(self.n, other)
        c = dict(self.coeffs)
        for k, v in other.coeffs.items():
            c[k] = c.get(k, 0) + v
        return FourierSymbol(self.n, c)

    __radd__ = __add__

    def __neg__(self):
        return FourierSymbol(self.n, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, FourierSymbol) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: complex) -> "FourierSymbol":
        return FourierSymbol(self.n, {k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, c):
        if isinstance(c, FourierSymbol):
            raise TypeError("use product(other, theta) for symbol products")
        return self.scale(c)

    __rmul__ = __mul__

    def product(self, other: "FourierSymbol", theta: ThetaMatrix | None = None) -> "FourierSymbol":
        """Twisted product ``self * other``."""
        if theta is None:
            theta = ThetaMatrix.zero(self.n)
        out: dict = {}
        for k, a in self.coeffs.items():
            for m, b in other.coeffs.items():
                km = tuple(x + y for x, y in zip(k, m))
                out[km] = out.get(km, 0) + a * b * twist_phase(theta, k, m)
        return FourierSymbol(self.n, out)

    def adjoint(self, theta: ThetaMatrix | None = None) -> "FourierSymbol":
        """``a^*``; uses ``(U^k)^* = conj(sigma(k, -k)) U^{-k}``."""
        out = {}
        for k, v in self.coeffs.items():
            neg = tuple(-x for x in k)
            ph = 1.0 if theta is None else twist_phase(theta, k, neg)
            out[neg] = np.conj(v * ph)
        return FourierSymbol(self.n, out)

    def is_self_adjoint(self, theta: ThetaMatrix | None = None, tol: float = 1e-14) -> bool:
        adj = self.adjoint(theta)
        keys = set(self.coeffs) | set(adj.coeffs)
        return all(abs(self.coeff(k) - adj.coeff(k)) <= tol for k in keys)

    def evaluate(self, x) -> np.ndarray:
        """Commutative evaluation ``sum_k a_k exp(i k.x)`` at rows of ``x``."""
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        if not self.coeffs:
            return np.zeros(len(x), dtype=complex)
        phase = x @ self.keys_array().T.astype(float)
        return np.exp(1j * phase) @ self.values_array()

    # serialization
    def to_json_list(self) -> list[dict]:
        return [{"k": list(k), "re": float(v.real), "im": float(v.imag)}
                for k, v in self.coeffs.items()]

    def to_json(self) -> str:
        return json.dumps(self.to_json_list())

    @classmethod
    def from_json_list(cls, items, n: int | None = None) -> "FourierSymbol":
        items = list(items)
        if n is None:
            if not items:
                raise ValueError("cannot infer the dimension of an empty symbol")
            n = len(items[0]["k"])
        return cls(n, {tuple(it["k"]): complex(float(it.get("re", 0.0)), float(it.get("im", 0.0)))
                       for it in items})

    @classmethod
    def from_json(cls, text: str, n: int | None = None) -> "FourierSymbol":
        return cls.from_json_list(json.loads(text), n)


@dataclass(frozen=True)
class CosineSeries:
    """``V(x, y) = sum v_j cos(j_1 pi x / a) cos(j_2 pi y / b)`` on a rectangle."""

    coeffs: dict

    def __post_init__(self):
        clean = {}
        for k, v in self.coeffs.items():
            key = _key(k)
            if len(key) != 2 or min(key) < 0:
                raise ValueError(f"cosine index {key} must be a pair of nonnegative ints")
            if v != 0:
                clean[key] = clean.get(key, 0.0) + float(v)
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def v0(self) -> float:
        return self.coeffs.get((0, 0), 0.0)

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(v) for v in self.coeffs.values()))

    def evaluate(self, x, y, a: float, b: float) -> np.ndarray:
        out = np.zeros(np.broadcast(x, y).shape)
        for (j1, j2), v in self.coeffs.items():
            out = out + v * np.cos(j1 * np.pi * x / a) * np.cos(j2 * np.pi * y / b)
        return out
