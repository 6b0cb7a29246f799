"""Asymptotic observables of finite spectra.

Singular and signed eigenvalue sequences, the weak quasi-norm, counting
functions, tail fits of ``j**e * value`` and the logarithmic Cesaro average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySequence, NonPositiveValues, WindowTooSmall
from .kernel import check_hermitian, default_kernel_tol, eigvalsh, singular_values

TAIL_FRACTION = 0.2
MIN_SEQUENCE_LENGTH = 32
MIN_WINDOW_POINTS = 8


@dataclass(frozen=True)
class SingularSequence:
    values: np.ndarray
    source_dim: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and (np.any(v < 0) or np.any(np.diff(v) > 0)):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @classmethod
    def from_values(cls, values, source_dim: int | None = None) -> "SingularSequence":
        v = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
        return cls(v.copy(), v.size if source_dim is None else source_dim)


@dataclass(frozen=True)
class SignedEigenSequence:
    positive: np.ndarray
    negative: np.ndarray
    zeros: int

    @property
    def source_dim(self) -> int:
        return self.positive.size + self.negative.size + self.zeros

    def swapped(self) -> "SignedEigenSequence":
        return SignedEigenSequence(self.negative, self.positive, self.zeros)


@dataclass(frozen=True)
class WeylFit:
    exponent: float
    limit: float
    window: tuple[int, int]
    spread: float

    def covers(self, target: float) -> bool:
        """True if ``target`` lies within the spread band around the limit."""
        return abs(self.limit - target) <= self.spread


@dataclass(frozen=True)
class CountingResult:
    threshold: float
    count: int


@dataclass(frozen=True)
class MeasurabilityReport:
    lambda_plus: float
    lambda_minus: float
    fit_plus: WeylFit | None
    fit_minus: WeylFit | None
    difference: float
    log_average: float
    log_average_terms: int
    consistent: bool


def _spectrum(A) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, or the array itself if already 1-D."""
    A = np.asarray(A)
    if A.ndim == 1:
        return A.astype(float)
    return eigvalsh(check_hermitian(A))


def mu_sequence(T) -> SingularSequence:
    T = np.asarray(T)
    return SingularSequence(singular_values(T), T.shape[0])


def signed_sequence(eigenvalues, zero_tol: float | None = None) -> SignedEigenSequence:
    ev = np.asarray(eigenvalues, dtype=float)
    tol = default_kernel_tol(ev) if zero_tol is None else float(zero_tol)
    pos = np.sort(ev[ev > tol])[::-1]
    neg = np.sort(-ev[ev < -tol])[::-1]
    return SignedEigenSequence(pos, neg, int(ev.size - pos.size - neg.size))


def lambda_pm(A, zero_tol: float | None = None) -> SignedEigenSequence:
    """Split the spectrum into the positive and negative branches.

    ``A`` may also be given directly as a 1-D array of eigenvalues.
    """
    return signed_sequence(_spectrum(A), zero_tol)


def _as_values(seq) -> np.ndarray:
    if isinstance(seq, SingularSequence):
        return seq.values
    return np.asarray(seq, dtype=float)


def weak_quasi_norm(seq, p: float) -> float:
    """``sup_j (j+1)**(1/p) * mu_j``."""
    if p <= 0:
        raise ValueError("p must be positive")
    v = _as_values(seq)
    if v.size == 0:
        raise EmptySequence("quasi-norm of an empty sequence")
    j = np.arange(1, v.size + 1, dtype=float)
    return float(np.max(j ** (1.0 / p) * v))


def counting_below(A, lam: float) -> CountingResult:
    """Number of eigenvalues strictly below ``lam``."""
    ev = _spectrum(A)
    return CountingResult(float(lam), int(np.count_nonzero(ev < lam)))


def fit_window(length: int, window_fraction: float, tail_fraction: float = TAIL_FRACTION,
               valid_length: int | None = None) -> tuple[int, int]:
    """Inclusive index window ``[j_lo, j_hi]`` used by the tail fits.

    ``valid_length`` is the number of leading entries trusted by the caller;
    by default the last ``tail_fraction`` of the sequence is dropped.  The
    window covers the last ``window_fraction`` of the trusted part, so
    entries appended beyond ``valid_length`` never influence a fit.
    """
    if not 0.0 < window_fraction < 1.0:
        raise ValueError("window_fraction must lie in (0, 1)")
    if length < MIN_SEQUENCE_LENGTH:
        raise WindowTooSmall(f"sequence length {length} < {MIN_SEQUENCE_LENGTH}")
    if valid_length is None:
        valid_length = int(math.floor((1.0 - tail_fraction) * length))
    valid_length = min(int(valid_length), length)
    j_lo = int(math.ceil((1.0 - window_fraction) * valid_length))
    j_hi = valid_length - 1
    if j_hi - j_lo + 1 < MIN_WINDOW_POINTS:
        raise WindowTooSmall(f"window [{j_lo}, {j_hi}] has fewer than {MIN_WINDOW_POINTS} points")
    return j_lo, j_hi


def weyl_limit_fit(seq, exponent: float, window_fraction: float = 0.5, *,
                   tail_fraction: float = TAIL_FRACTION,
                   valid_length: int | None = None) -> WeylFit:
    """Median of ``(j+1)**exponent * value_j`` over the tail window."""
    v = _as_values(seq)
    j_lo, j_hi = fit_window(v.size, window_fraction, tail_fraction, valid_length)
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    scaled = (j + 1.0) ** exponent * v[j_lo : j_hi + 1]
    return WeylFit(float(exponent), float(np.median(scaled)), (j_lo, j_hi),
                   float(scaled.max() - scaled.min()))


def modulus_order(eigenvalues) -> np.ndarray:
    """Eigenvalues by descending modulus, positive before negative on ties."""
    ev = np.asarray(eigenvalues, dtype=float)
    order = np.lexsort((-ev, -np.abs(ev)))
    return ev[order]


def dixmier_log_average(A, N: int) -> float:
    """``(1/log(N+1)) * sum_{j<N} lambda_j`` with modulus-descending order."""
    ev = modulus_order(_spectrum(A))
    if N < 1 or N > ev.size:
        raise ValueError(f"N={N} must lie in [1, {ev.size}]")
    return float(math.fsum(ev[:N]) / math.log(N + 1.0))


def _branch_limit(values, exponent, window_fraction, tail_fraction):
    if values.size < MIN_SEQUENCE_LENGTH:
        # finite branch: j**exponent * lambda_j is eventually zero
        return 0.0, None
    fit = weyl_limit_fit(values, exponent, window_fraction, tail_fraction=tail_fraction)
    return fit.limit, fit


def spectral_measurability_report(A, *, window_fraction: float = 0.5, tol: float = 0.1,
                                  N: int | None = None, zero_tol: float | None = None,
                                  tail_fraction: float = TAIL_FRACTION,
                                  p: float = 1.0) -> MeasurabilityReport:
    """Compare ``Lambda+ - Lambda-`` against the logarithmic average.

    ``A`` is a Hermitian matrix or its eigenvalues.  The log-average uses the
    first ``N`` modulus-ordered eigenvalues; by default the trusted part of
    the spectrum (all but the last ``tail_fraction``).
    """
    ev = _spectrum(A)
    seq = signed_sequence(ev, zero_tol)
    e = 1.0 / p
    lp, fp = _branch_limit(seq.positive, e, window_fraction, tail_fraction)
    lm, fm = _branch_limit(seq.negative, e, window_fraction, tail_fraction)
    if N is None:
        N = max(1, int(math.floor((1.0 - tail_fraction) * ev.size)))
    avg = dixmier_log_average(ev, N)
    diff = lp - lm
    scale = max(abs(lp), abs(lm), abs(avg))
    consistent = abs(diff - avg) <= tol * scale if scale > 0 else True
    return MeasurabilityReport(lp, lm, fp, fm, diff, avg, N, consistent)


def decay_exponent_fit(seq, window_fraction: float = 0.5, *,
                       tail_fraction: float = TAIL_FRACTION,
                       window: tuple[int, int] | None = None) -> float:
    """Least-squares slope magnitude of ``log mu_j`` against ``log(j+1)``.

    ``window`` is an inclusive index pair overriding the default tail window.
    """
    v = _as_values(seq)
    if window is None:
        j_lo, j_hi = fit_window(v.size, window_fraction, tail_fraction)
    else:
        j_lo, j_hi = int(window[0]), int(window[1])
        if j_hi >= v.size or j_hi - j_lo + 1 < MIN_WINDOW_POINTS or j_lo < 0:
            raise WindowTooSmall(f"window {window} invalid for length {v.size}")
    w = v[j_lo : j_hi + 1]
    if np.any(w <= 0):
        raise NonPositiveValues("log fit needs positive values in the window")
    x = np.log(np.arange(j_lo + 1, j_hi + 2, dtype=float))
    slope = np.polyfit(x, np.log(w), 1)[0]
    return float(-slope)


def holder_constant(p: float, q: float) -> float:
    """Constant in the weak-Schatten Holder inequality."""
    return p ** (-1.0 / q) * q ** (-1.0 / p) * (p + q) ** (1.0 / p + 1.0 / q)
