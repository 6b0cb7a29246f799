"""Independent reference computations used to cross-check the main routes."""

from __future__ import annotations

import cmath
import math

import numpy as np


def reorder_word_phase(theta: np.ndarray, word: list[tuple[int, int]]) -> tuple[complex, tuple[int, ...]]:
    """Bring a word in the generators ``U_p^{+-1}`` to ordered form.

    ``word`` lists ``(p, e)`` letters (0-based generator, exponent +-1).
    Adjacent letters are swapped with ``U_p^a U_q^b = exp(2 pi i theta_qp a b) U_q^b U_p^a``
    for ``q < p`` (a bubble sort), then equal generators are merged.  Returns
    the accumulated phase and the exponent vector of the ordered monomial.
    """
    theta = np.asarray(theta, dtype=float)
    w = list(word)
    phase = 1.0 + 0j
    changed = True
    while changed:
        changed = False
        for i in range(len(w) - 1):
            (p, a), (q, b) = w[i], w[i + 1]
            if p > q:
                phase *= cmath.exp(2j * math.pi * theta[q, p] * a * b)
                w[i], w[i + 1] = w[i + 1], w[i]
                changed = True
    n = theta.shape[0]
    k = [0] * n
    for p, e in w:
        k[p] += e
    return phase, tuple(k)


def monomial_word(k) -> list[tuple[int, int]]:
    """Letters of ``U_1^{k_1} ... U_n^{k_n}``."""
    out = []
    for p, kp in enumerate(k):
        e = 1 if kp > 0 else -1
        out.extend([(p, e)] * abs(int(kp)))
    return out


def product_phase_by_reordering(theta: np.ndarray, k, m) -> complex:
    """Phase ``c`` in ``U^k U^m = c U^{k+m}`` from the defining relations alone."""
    phase, total = reorder_word_phase(theta, monomial_word(k) + monomial_word(m))
    assert total == tuple(int(a) + int(b) for a, b in zip(k, m))
    return phase


def resolvent_pair_closed_form(x: float, y: float, s: float) -> float:
    """``int_0^inf mu^{s-1} / ((x^2+mu^2)(y^2+mu^2)) dmu`` for ``0 < s < 4``.

    Partial fractions reduce it to ``int mu^{s-1}/(c^2+mu^2) = (pi/2) c^{s-2} / sin(pi s/2)``;
    the cases ``x = y`` and ``s = 2`` are the corresponding limits.
    """
    x, y = abs(x), abs(y)
    if abs(s - 2.0) < 1e-14:
        # int mu / ((x^2+mu^2)(y^2+mu^2)) = log(y/x)/(y^2-x^2)
        if abs(x - y) <= 1e-12 * max(x, y):
            return 1.0 / (2.0 * x * x)
        return math.log(y / x) / (y * y - x * x)
    k = (math.pi / 2.0) / math.sin(math.pi * s / 2.0)
    if abs(x - y) <= 1e-12 * max(x, y):
        # derivative of c^{s-2} with respect to c^2, with a sign
        return k * (2.0 - s) / 2.0 * x ** (s - 4.0)
    return k * (x ** (s - 2.0) - y ** (s - 2.0)) / (y * y - x * x)


def harmonic_log_average(N: int) -> float:
    """``H_N / log(N+1)`` with ``H_N`` the N-th harmonic number."""
    return math.fsum(1.0 / np.arange(1, N + 1)) / math.log(N + 1.0)
