import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmpert.errors import InputError
from helmpert.specfun import (
    ZeroKind,
    bessel_j,
    bessel_j_and_prime,
    bessel_zero,
    jn_derivs,
    jn_table,
    mcmahon_guess,
    zero_sequence,
)
from reference_values import J_ZEROS, JPRIME_ZEROS


def _mp_j(n, x):
    return float(mpmath.besselj(n, x))


def test_small_argument_values():
    assert bessel_j_and_prime(0, 0.0) == (1.0, 0.0)
    assert bessel_j_and_prime(1, 0.0) == (0.0, 0.5)
    j, jp = bessel_j_and_prime(2, 0.0)
    assert j == 0.0 and jp == 0.0


@pytest.mark.parametrize("x", [0.3, 2.0, 4.99, 5.01, 7.5, 12.0, 31.7, 80.0, 250.0])
def test_table_matches_mpmath(x):
    tab = jn_table(60, x)
    ref = np.array([_mp_j(n, x) for n in range(61)])
    scale = np.maximum(np.abs(ref), 1e-300)
    big = np.abs(ref) > 1e-200
    assert np.max(np.abs(tab - ref)) < 2e-15 * max(1.0, np.max(np.abs(ref)))
    assert np.max(np.abs(tab[big] - ref[big]) / scale[big]) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 40), st.floats(0.0, 60.0))
def test_value_and_derivative_property(n, x):
    j, jp = bessel_j_and_prime(n, x)
    assert abs(j - _mp_j(n, x)) < 1e-14
    assert abs(jp - float(mpmath.besselj(n, x, derivative=1))) < 1e-14


def test_second_derivative_satisfies_bessel_equation():
    x = np.linspace(0.5, 30, 50)
    j, jp, jpp = jn_derivs(12, x, nderiv=2)
    n = np.arange(13)
    resid = x[:, None] ** 2 * jpp + x[:, None] * jp + (x[:, None] ** 2 - n**2) * j
    assert np.max(np.abs(resid)) < 1e-12 * 900


def test_array_shapes():
    x = np.ones((3, 4))
    assert jn_table(5, x).shape == (3, 4, 6)
    assert bessel_j(3, x).shape == (3, 4)
    j, jp, jpp = jn_derivs(2, 1.5, nderiv=2)
    assert j.shape == jp.shape == jpp.shape == (3,)


@pytest.mark.parametrize("key,val", sorted(J_ZEROS.items()))
def test_known_zeros_of_j(key, val):
    assert bessel_zero(ZeroKind.ZERO_OF_J, *key) == pytest.approx(val, rel=1e-14)


@pytest.mark.parametrize("key,val", sorted(JPRIME_ZEROS.items()))
def test_known_zeros_of_jprime(key, val):
    assert bessel_zero(ZeroKind.ZERO_OF_J_PRIME, *key) == pytest.approx(val, rel=1e-14)


def test_jprime_l0_skips_trivial_root():
    assert bessel_zero(ZeroKind.ZERO_OF_J_PRIME, 0, 1) == pytest.approx(3.8317059702075125, rel=1e-14)


@pytest.mark.parametrize("kind", list(ZeroKind))
def test_zero_residuals(kind):
    for l in range(0, 25, 3):
        for j in range(1, 12):
            rho = bessel_zero(kind, l, j)
            val = _mp_j(l, rho) if kind is ZeroKind.ZERO_OF_J else float(mpmath.besselj(l, rho, derivative=1))
            assert abs(val) <= 1e-12


def test_large_index_zeros():
    assert bessel_zero(ZeroKind.ZERO_OF_J, 200, 1) == pytest.approx(float(mpmath.besseljzero(200, 1)), rel=1e-13)
    assert bessel_zero(ZeroKind.ZERO_OF_J, 3, 200) == pytest.approx(float(mpmath.besseljzero(3, 200)), rel=1e-13)


def test_interlacing():
    # rho_{l,j} < rho_{l+1,j} < rho_{l,j+1}, and the J' zero precedes the J zero
    for l in range(0, 15):
        zl = zero_sequence(ZeroKind.ZERO_OF_J, l, 10)
        zl1 = zero_sequence(ZeroKind.ZERO_OF_J, l + 1, 10)
        assert np.all(np.diff(zl) > 0)
        assert np.all(zl[:-1] < zl1[:-1]) and np.all(zl1[:-1] < zl[1:])
        if l >= 1:
            zp = zero_sequence(ZeroKind.ZERO_OF_J_PRIME, l, 10)
            assert np.all(zp > l)
            assert np.all(zp < zl)
            assert np.all(zl[:-1] < zp[1:])


def test_mcmahon_is_close_for_large_j():
    for kind in ZeroKind:
        for l in (0, 1, 5):
            exact = bessel_zero(kind, l, 30)
            assert abs(mcmahon_guess(kind, l, 30) - exact) < 1e-3


def test_zero_cache_is_stable():
    a = bessel_zero(ZeroKind.ZERO_OF_J, 7, 4)
    b = bessel_zero(ZeroKind.ZERO_OF_J, 7, 4)
    assert a == b


@pytest.mark.parametrize(
    "args",
    [(-1, 1.0), (201, 1.0), (1.5, 1.0), (0, -1.0), (0, math.inf), (0, 2e4)],
)
def test_guardrails(args):
    with pytest.raises(InputError):
        bessel_j_and_prime(*args)


def test_zero_index_guardrails():
    with pytest.raises(InputError):
        bessel_zero(ZeroKind.ZERO_OF_J, 0, 0)
    with pytest.raises(InputError):
        bessel_zero(ZeroKind.ZERO_OF_J, 201, 1)
    with pytest.raises(InputError):
        jn_table(3, [-0.5])
