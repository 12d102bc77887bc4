import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helmpert.errors import InputError, NumericError
from helmpert.geometry import Ellipse, RawFourier, Supercircle
from helmpert.oracle import (
    CollocationConfig,
    collocation_matrix,
    exact_reference,
    locate,
    rotational_order,
    scan_eigenvalues,
    singular_values,
    smallest_singular_value,
    symmetry_classes,
)
from helmpert.perturb import BC, Parity
from reference_values import BENCHMARK

CIRCLE = RawFourier(1.0, ())
D, N = BC.DIRICHLET, BC.NEUMANN


# --- Jacobi SVD ------------------------------------------------------------


def test_singular_values_known():
    assert singular_values(np.diag([3.0, -1.0, 2.0])) == pytest.approx([3, 2, 1], abs=1e-15)
    assert singular_values(np.array([[3.0, 0.0], [4.0, 0.0]])) == pytest.approx([5, 0], abs=1e-15)
    q = np.linalg.qr(np.random.default_rng(1).normal(size=(6, 6)))[0]
    assert singular_values(q) == pytest.approx(np.ones(6), abs=1e-14)
    assert smallest_singular_value(np.ones((4, 3))) == pytest.approx(0.0, abs=1e-14)


def test_singular_values_gram_cross_check():
    a = np.random.default_rng(7).normal(size=(40, 9))
    ev = np.sqrt(np.linalg.eigvalsh(a.T @ a))[::-1]
    assert singular_values(a) == pytest.approx(ev, rel=1e-8)


def test_singular_values_batched_matches_loop():
    stack = np.random.default_rng(3).normal(size=(5, 12, 7))
    batched = singular_values(stack)
    for i in range(5):
        assert batched[i] == pytest.approx(singular_values(stack[i]), rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.floats(-1e3, 1e3)))
def test_singular_values_property(a):
    ours = singular_values(a)
    ref = np.linalg.svd(a, compute_uv=False)
    assert ours.shape == ref.shape
    assert np.all(np.diff(ours) <= 0)
    assert np.allclose(ours, ref, rtol=1e-10, atol=1e-10 * max(1.0, ref[0]))


def test_singular_values_rejects_bad_input():
    with pytest.raises(InputError):
        singular_values(np.ones(3))
    with pytest.raises(InputError):
        singular_values(np.array([[1.0, np.nan]]))


# --- collocation ----------------------------------------------------------


def test_circle_collocation_is_singular_at_zero():
    cfg = CollocationConfig(basis_order=8)
    k = 2.404825557695773
    assert smallest_singular_value(collocation_matrix(CIRCLE, D, k, cfg)) < 1e-12
    assert smallest_singular_value(collocation_matrix(CIRCLE, D, k + 0.3, cfg)) > 1e-3


def test_collocation_rows_unit_and_ellipse_full_rank():
    cfg = CollocationConfig(basis_order=10)
    a = collocation_matrix(Ellipse(1.0, 0.5), N, 3.3, cfg)
    assert a.shape == (cfg.m, 11)
    assert np.linalg.norm(a, axis=1) == pytest.approx(np.ones(cfg.m), rel=1e-14)
    assert smallest_singular_value(a) > 1e-8


def test_config_validation():
    assert CollocationConfig(basis_order=5).m == 48
    for bad in (
        dict(basis_order=-1),
        dict(k_min=0.0),
        dict(k_min=3.0, k_max=2.0),
        dict(scan_step=0.0),
        dict(dip_threshold=1.5),
        dict(basis_order=10, boundary_points=5),
    ):
        with pytest.raises(InputError):
            CollocationConfig(**bad)


def test_rotational_order_and_classes():
    assert rotational_order(CIRCLE) == 0
    assert rotational_order(Supercircle(1.0, 3.0)) == 4
    assert rotational_order(Ellipse(1.0, 0.5)) == 2
    assert rotational_order(RawFourier(1.0, (0.0, 0.0, 0.05))) == 3
    cls = dict(symmetry_classes(4, 9, Parity.COS))
    assert sorted(cls) == [0, 1, 2]
    assert list(cls[1]) == [1, 3, 5, 7, 9]
    assert list(cls[0]) == [0, 4, 8]
    assert [c for c, _ in symmetry_classes(0, 3, Parity.SIN)] == [1, 2, 3]


# --- eigenvalues ----------------------------------------------------------


@pytest.mark.parametrize("bc", [D, N])
def test_circle_first_ten_levels(bc):
    ref = exact_reference("circle", bc, 10)
    cfg = CollocationConfig(basis_order=16, k_max=math.sqrt(ref[-1]) + 0.3)
    got = [r.E for r in scan_eigenvalues(CIRCLE, bc, cfg)][:10]
    assert got == pytest.approx(ref, rel=1e-6)


def test_square_dirichlet_first_eight():
    ref = exact_reference("tilted_square", D, 8)
    cfg = CollocationConfig(basis_order=40, k_max=math.sqrt(ref[-1]) + 0.3)
    got = [r.E for r in scan_eigenvalues(Supercircle(1.0, 1.0), D, cfg)][:8]
    assert got == pytest.approx(ref, rel=5e-3)


def test_ellipse_stable_under_basis_growth():
    spec = Ellipse(1.0, 0.3)
    lo = scan_eigenvalues(spec, D, CollocationConfig(basis_order=12, k_max=4.5))
    hi = scan_eigenvalues(spec, D, CollocationConfig(basis_order=18, k_max=4.5))
    assert len(lo) == len(hi) >= 3
    for a, b in zip(lo, hi):
        assert a.E == pytest.approx(b.E, rel=1e-5)


def test_supercircle_degeneracy_pattern():
    # four-fold symmetry: odd orders pair up across parities, even orders split
    res = scan_eigenvalues(Supercircle(1.0, 3.0), D, CollocationConfig(basis_order=24, k_max=4.0))
    odd = sorted(r.E for r in res if r.sym_class == 1)
    assert len(odd) == 2 and odd[0] == pytest.approx(odd[1], rel=1e-8)
    assert res[0].E == pytest.approx(BENCHMARK[("dirichlet", "supercircle")]["reference"][0], rel=2e-3)
    assert all(r.converged for r in res)


def test_locate_recovers_a_level():
    r = locate(Ellipse(1.0, 0.5), D, math.sqrt(15.893), 1, Parity.COS, CollocationConfig(basis_order=24))
    assert r.E == pytest.approx(15.893, rel=2e-3)
    assert r.bracket[0] <= r.k <= r.bracket[1]
    with pytest.raises(NumericError):
        locate(CIRCLE, D, 3.0, 0, window=0.05)
    with pytest.raises(InputError):
        locate(CIRCLE, D, 3.0, 0, Parity.SIN)


def test_exact_reference_values():
    assert exact_reference("tilted_square", D, 4) == pytest.approx(
        [math.pi**2, 2.5 * math.pi**2, 2.5 * math.pi**2, 4 * math.pi**2]
    )
    assert exact_reference("tilted_square", N, 3) == pytest.approx([math.pi**2 / 2] * 2 + [math.pi**2])
    assert exact_reference("circle", N, 3)[0] == pytest.approx(1.8411837813406593**2)
    assert exact_reference("circle", D, 1, a=2.0)[0] == pytest.approx(2.404825557695773**2 / 4)
    with pytest.raises(InputError):
        exact_reference("hexagon", D, 3)
    with pytest.raises(InputError):
        exact_reference("circle", D, 0)
