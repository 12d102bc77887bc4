"""Bessel functions of the first kind and the positive zeros of J_l and J'_l.

Everything here is vectorised over the argument and returns all integer
orders ``0..n_max`` at once, which is what both the perturbation formulas
(sums over Fourier index) and the collocation solver (one column per angular
order) need.

Small arguments use the ascending power series; larger ones use Miller's
downward recurrence normalised with ``J_0 + 2 * sum J_2k = 1``.
"""
from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from helmpert.errors import InputError, NumericError

#: Arguments at or below this use the power series.  Above it the largest
#: series term exceeds ~10 and cancellation would cost digits.
SERIES_MAX_X = 5.0
_SERIES_TERMS = 28
_RESCALE = 1e250

MAX_ORDER = 200
MAX_ARG = 1e4
MAX_ZERO_INDEX = 200


class ZeroKind(enum.Enum):
    ZERO_OF_J = "J"
    ZERO_OF_J_PRIME = "Jprime"


def _series(n_max: int, x: np.ndarray) -> np.ndarray:
    n = np.arange(n_max + 1, dtype=float)
    half = 0.5 * x[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_lead = n * np.log(half) - np.array([math.lgamma(v + 1.0) for v in n])
    lead = np.exp(log_lead)
    lead[:, 0] = 1.0
    lead[x == 0.0, 1:] = 0.0

    q = -half * half
    term = np.ones_like(lead)
    acc = np.ones_like(lead)
    for k in range(_SERIES_TERMS):
        term = term * q / ((k + 1.0) * (n + k + 1.0))
        acc += term
    return lead * acc


def _miller(n_max: int, x: np.ndarray) -> np.ndarray:
    top = max(float(n_max), float(x.max()))
    start = int(top) + int(math.sqrt(160.0 * top)) + 20
    start += start % 2

    out = np.zeros((x.size, n_max + 1))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = 2.0 * j_cur
    for m in range(start, 0, -1):
        j_prev = (2.0 * m / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        order = m - 1
        if order == 0:
            norm = norm + j_cur
        elif order % 2 == 0:
            norm = norm + 2.0 * j_cur
        if order <= n_max:
            out[:, order] = j_cur
        big = np.abs(j_cur) > _RESCALE
        if big.any():
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j_cur = j_cur * s
            j_next = j_next * s
            norm = norm * s
            out *= s[:, None]
    return out / norm[:, None]


def jn_table(n_max: int, x) -> np.ndarray:
    """Return ``J_0(x) .. J_{n_max}(x)`` with shape ``x.shape + (n_max + 1,)``."""
    if n_max < 0:
        raise InputError("n_max must be >= 0")
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    if np.any(flat < 0) or not np.all(np.isfinite(flat)):
        raise InputError("Bessel argument must be finite and >= 0")
    out = np.empty((flat.size, n_max + 1))
    small = flat <= SERIES_MAX_X
    if small.any():
        out[small] = _series(n_max, flat[small])
    if (~small).any():
        out[~small] = _miller(n_max, flat[~small])
    return out.reshape(x.shape + (n_max + 1,))


def jn_derivs(n_max: int, x, nderiv: int = 1) -> tuple[np.ndarray, ...]:
    """Return ``(J, J', ...)`` tables up to derivative ``nderiv`` (at most 2).

    Derivatives come from the three-term relations
    ``J'_n = (J_{n-1} - J_{n+1}) / 2`` and
    ``J''_n = (J_{n-2} - 2 J_n + J_{n+2}) / 4``, with ``J_{-n} = (-1)^n J_n``;
    both are regular at ``x = 0``.
    """
    if nderiv not in (0, 1, 2):
        raise InputError("nderiv must be 0, 1 or 2")
    ext = jn_table(n_max + 2, x)
    # index shift by 2 so that column i holds order i - 2
    full = np.concatenate([ext[..., 2:3], -ext[..., 1:2], ext], axis=-1)
    j = full[..., 2 : n_max + 3]
    if nderiv == 0:
        return (j,)
    jp = 0.5 * (full[..., 1 : n_max + 2] - full[..., 3 : n_max + 4])
    if nderiv == 1:
        return j, jp
    jpp = 0.25 * (full[..., 0 : n_max + 1] - 2.0 * j + full[..., 4 : n_max + 5])
    return j, jp, jpp


def bessel_j(l: int, x):
    """``J_l(x)`` for integer ``l >= 0`` and any array ``x``."""
    return jn_table(l, x)[..., l]


def bessel_j_and_prime(l: int, x: float) -> tuple[float, float]:
    """Return ``(J_l(x), J'_l(x))`` for a scalar argument.

    >>> bessel_j_and_prime(1, 0.0)
    (0.0, 0.5)
    """
    if not isinstance(l, (int, np.integer)) or l < 0 or l > MAX_ORDER:
        raise InputError(f"order must be an integer in [0, {MAX_ORDER}], got {l!r}")
    x = float(x)
    if not math.isfinite(x) or x < 0 or x > MAX_ARG:
        raise InputError(f"argument must lie in [0, {MAX_ARG:g}], got {x!r}")
    j, jp = jn_derivs(l, x)
    return float(j[l]), float(jp[l])


def _target(kind: ZeroKind, l: int, x):
    """Function whose zeros are sought, and its derivative."""
    j, jp, jpp = jn_derivs(l, x, nderiv=2)
    if kind is ZeroKind.ZERO_OF_J:
        return j[..., l], jp[..., l]
    return jp[..., l], jpp[..., l]


def mcmahon_guess(kind: ZeroKind, l: int, j: int) -> float:
    """Large-``j`` asymptotic estimate of the ``j``-th positive zero."""
    mu = 4.0 * l * l
    if kind is ZeroKind.ZERO_OF_J:
        b = (j + 0.5 * l - 0.25) * math.pi
        return b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)
    if l == 0:
        # positive zeros of J_0' are the zeros of J_1
        return mcmahon_guess(ZeroKind.ZERO_OF_J, 1, j)
    b = (j + 0.5 * l - 0.75) * math.pi
    return b - (mu + 3) / (8 * b) - 4 * (7 * mu * mu + 82 * mu - 9) / (3 * (8 * b) ** 3)


def _bracket(kind: ZeroKind, l: int, j: int, step: float = 0.2) -> tuple[float, float]:
    # no zero of J_l or J'_l (l >= 1) lies below x = l
    lo = max(float(l), 0.1)
    found = 0
    while lo < MAX_ARG:
        grid = lo + step * np.arange(257)
        f, _ = _target(kind, l, grid)
        s = np.sign(f)
        change = np.nonzero(s[:-1] * s[1:] < 0)[0]
        exact = np.nonzero(s == 0)[0]
        if exact.size:
            raise NumericError("grid point landed exactly on a zero; retry with another step")
        if found + change.size >= j:
            i = change[j - found - 1]
            return float(grid[i]), float(grid[i + 1])
        found += change.size
        lo = float(grid[-1])
    raise NumericError(f"could not bracket zero {j} of {kind.value}_{l}")


@lru_cache(maxsize=None)
def bessel_zero(kind: ZeroKind, l: int, j: int) -> float:
    """``j``-th positive zero of ``J_l`` or ``J'_l``.

    For ``ZERO_OF_J_PRIME`` with ``l = 0`` the trivial root ``x = 0`` is not
    counted, so ``bessel_zero(ZERO_OF_J_PRIME, 0, 1) == 3.8317...``.
    Results are memoised; recomputation after a race gives the same value.
    """
    kind = ZeroKind(kind)
    if not (0 <= l <= MAX_ORDER) or not (1 <= j <= MAX_ZERO_INDEX):
        raise InputError(f"zero index out of range: l={l}, j={j}")
    a, b = _bracket(kind, l, j)
    fa, _ = _target(kind, l, a)
    guess = mcmahon_guess(kind, l, j)
    x = guess if a < guess < b else 0.5 * (a + b)

    for _ in range(200):
        fx, dfx = _target(kind, l, x)
        if fx == 0.0:
            break
        if np.sign(fx) == np.sign(fa):
            a, fa = x, fx
        else:
            b = x
        xn = x - fx / dfx if dfx != 0.0 else 0.5 * (a + b)
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= 4e-16 * abs(x) or b - a <= 4e-16 * abs(x):
            x = xn
            break
        x = xn
    else:
        raise NumericError(f"Newton iteration for zero {j} of {kind.value}_{l} did not converge")

    resid, _ = _target(kind, l, x)
    if abs(resid) > 1e-12:
        raise NumericError(f"zero {j} of {kind.value}_{l}: residual {abs(resid):.2e}")
    return float(x)


def zero_sequence(kind: ZeroKind, l: int, count: int) -> np.ndarray:
    return np.array([bessel_zero(kind, l, j) for j in range(1, count + 1)])
