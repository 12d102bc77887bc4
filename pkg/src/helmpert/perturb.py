"""Closed-form perturbative eigenpairs for a deformed circular membrane.

The physical domain ``r <= R0 (1 + g(theta))`` is pulled back to the disk
``R <= R0`` by ``r = R (1 + g(alpha))``, ``theta = alpha``.  The Laplacian
picks up extra operators ``L_n`` (one per power of g) while the boundary
conditions stay on the circle ``R = R0``.  Solving order by order gives the
energies and wavefunctions implemented here:

* ``E0 = rho^2 / R0^2`` with ``rho`` a zero of ``J_l`` (Dirichlet) or
  ``J'_l`` (Neumann).
* ``E1 = 0`` for ``l = 0``.  For ``l != 0`` the cos/sin pair splits as
  ``E1 = -/+ E0 C_{2l}`` (Dirichlet) and
  ``-/+ E0 C_{2l} (rho^2 + l^2) / (rho^2 - l^2)`` (Neumann).
* ``E2`` for ``l = 0`` only: ``E0 sum xi_n C_n^2`` (Dirichlet) and
  ``-E0 sum lambda_n C_n^2`` (Neumann).

Wavefunctions are returned as coefficient records in the pulled-back frame,
``psi(R, alpha)``, and evaluated by :func:`eval_psi`.  Inner products and
normalisation use the flat disk measure ``R dR dalpha`` of that frame.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from helmpert.errors import InputError, NumericError, UnsupportedScopeError
from helmpert.geometry import FourierBoundary
from helmpert.specfun import ZeroKind, bessel_zero, jn_derivs

#: |J_p(rho)| below this fraction of hypot(J_p, J'_p) counts as an accidental
#: zero of a denominator.
POLE_RTOL = 1e-10
#: |C_2l| at or below this leaves an l != 0 pair unsplit at first order.
SPLIT_TOL = 1e-12


class BC(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class Parity(str, enum.Enum):
    COS = "cos"
    SIN = "sin"


@dataclass(frozen=True)
class ModeLabel:
    """Unperturbed circle mode ``J_l(rho_{l,j} R / R0) cos|sin(l alpha)``."""

    l: int
    j: int
    parity: Parity = Parity.COS
    bc: BC = BC.DIRICHLET

    def __post_init__(self):
        if not isinstance(self.l, (int, np.integer)) or self.l < 0:
            raise InputError(f"l must be a non-negative integer, got {self.l!r}")
        if not isinstance(self.j, (int, np.integer)) or self.j < 1:
            raise InputError(f"j must be a positive integer, got {self.j!r}")
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "parity", Parity(self.parity))
        object.__setattr__(self, "bc", BC(self.bc))
        if self.l == 0 and self.parity is Parity.SIN:
            raise InputError("l = 0 has no sine partner")

    @property
    def rho(self) -> float:
        kind = ZeroKind.ZERO_OF_J if self.bc is BC.DIRICHLET else ZeroKind.ZERO_OF_J_PRIME
        return bessel_zero(kind, self.l, self.j)

    def __str__(self):
        par = "" if self.l == 0 else f",{self.parity.value}"
        return f"(l={self.l},j={self.j}{par},{self.bc.value})"


@dataclass(frozen=True)
class SpectrumEntry:
    label: ModeLabel
    e0: float
    e1: float
    e2: float | None
    total: float
    degenerate_unresolved: bool
    e2_truncation: float | None = None


@dataclass(frozen=True)
class WavefunctionCoeffs:
    """Coefficients of the corrected wavefunction in the pulled-back frame.

    With ``T_p`` = ``cos(p alpha)`` (or ``sin`` for the sine branch),

    ``psi1 = sum_p a[p] J_p(rho) T_p + N rho J'_l(rho) sum_p particular[p] T_p``

    where ``particular`` holds the Fourier coefficients of
    ``(g(alpha) + E1 / 2 E0) T_l``.  For ``l = 0`` at second order,

    ``psi2 = sum_p b[p] J_p cos(p alpha) + rho J'_0(rho) sum_p particular2[p] cos(p alpha)
    + sum_p cos(p alpha) sum_n mix[p, n-1] S_n(rho)``

    with ``S_n(rho) = (rho/2) (a[n] J'_n(rho) - (rho/2) N C_n J'_1(rho))``.
    ``b[0]`` is fixed by :func:`normalize`.
    """

    label: ModeLabel
    order: int
    r0: float
    rho: float
    norm: float
    e0: float
    e1: float
    a: np.ndarray
    particular: np.ndarray
    e2: float | None = None
    b: np.ndarray | None = None
    particular2: np.ndarray | None = None
    mix: np.ndarray | None = None
    normalized: bool = False

    @property
    def k(self) -> float:
        return self.rho / self.r0


def _check_label_bc(bc) -> BC:
    return BC(bc)


def norm_constant(label: ModeLabel, r0: float) -> float:
    """``N_{l,j}`` making ``int_disk psi0^2 R dR dalpha = 1``."""
    rho = label.rho
    j, jp = jn_derivs(label.l, rho)
    if label.bc is BC.DIRICHLET:
        radial = 0.5 * r0 * r0 * jp[label.l] ** 2
    else:
        radial = 0.5 * r0 * r0 * (1.0 - (label.l / rho) ** 2) * j[label.l] ** 2
    angular = 2 * math.pi if label.l == 0 else math.pi
    return 1.0 / math.sqrt(angular * radial)


def e0(label: ModeLabel, r0: float) -> float:
    if not (r0 > 0 and math.isfinite(r0)):
        raise InputError(f"R0 must be > 0, got {r0!r}")
    return label.rho**2 / r0**2


def _split_factor(label: ModeLabel) -> float:
    if label.bc is BC.DIRICHLET:
        return 1.0
    rho2, l2 = label.rho**2, label.l**2
    # J'_l zeros satisfy rho > l, so this never divides by zero
    assert rho2 > l2, (label, rho2)
    return (rho2 + l2) / (rho2 - l2)


def e1(label: ModeLabel, fb: FourierBoundary) -> float:
    """First-order shift; zero for ``l = 0``, ``-/+ E0 C_2l * factor`` otherwise."""
    if label.l == 0:
        return 0.0
    sign = -1.0 if label.parity is Parity.COS else 1.0
    return sign * e0(label, fb.r0) * fb.coef(2 * label.l) * _split_factor(label)


def _pole_check(val: np.ndarray, deriv: np.ndarray, idx, what: str, label: str):
    bad = np.abs(val[idx]) <= POLE_RTOL * np.hypot(val[idx], deriv[idx])
    if np.any(bad):
        n = int(np.asarray(idx)[np.argmax(bad)])
        raise NumericError(f"accidental pole for mode {label}: {what}_{n}(rho) vanishes at n={n}")


def second_order_weights(j: int, bc, n_max: int) -> np.ndarray:
    """``xi_n`` (Dirichlet) or ``lambda_n`` (Neumann) for ``n = 1..n_max``."""
    bc = _check_label_bc(bc)
    label = ModeLabel(0, j, Parity.COS, bc)
    rho = label.rho
    jv, jp, jpp = jn_derivs(n_max, rho, nderiv=2)
    n = np.arange(1, n_max + 1)
    if bc is BC.DIRICHLET:
        _pole_check(jv, jp, n, "J", str(label))
        return 0.5 + rho * jp[n] / jv[n]
    _pole_check(jp, jpp, n, "J'", str(label))
    return 0.5 + rho * jv[n] / jp[n]


def e2_l0(j: int, bc, fb: FourierBoundary) -> float:
    """Second-order energy of the ``l = 0`` mode ``j``."""
    bc = _check_label_bc(bc)
    if fb.n_max == 0:
        return 0.0
    w = second_order_weights(j, bc, fb.n_max)
    base = e0(ModeLabel(0, j, Parity.COS, bc), fb.r0)
    s = float(np.sum(w * fb.c**2))
    return base * s if bc is BC.DIRICHLET else -base * s


def e2_truncation_bound(j: int, bc, fb: FourierBoundary) -> float:
    """Crude bound on the E2 error from dropping ``C_n`` beyond ``n_max``."""
    if fb.n_max == 0 or fb.tail_bound == 0:
        return 0.0
    w = second_order_weights(j, bc, fb.n_max)
    tail = w[-max(1, fb.n_max // 10) :]
    return e0(ModeLabel(0, j, Parity.COS, BC(bc)), fb.r0) * fb.tail_bound * float(np.max(np.abs(tail)))


def _projection_g(fb: FourierBoundary, l: int, parity: Parity, p: np.ndarray) -> np.ndarray:
    """Fourier coefficients of ``g(alpha) T_l(alpha)`` on ``T_p``."""
    if parity is Parity.COS:
        s = 0.5 * (fb.coef(p + l) + fb.coef(p - l))
        s = np.where(p == 0, 0.5 * fb.coef(l), s)
    else:
        s = 0.5 * (fb.coef(p - l) - fb.coef(p + l))
        s = np.where(p == 0, 0.0, s)
    return s


def _projection_dg(fb: FourierBoundary, l: int, parity: Parity, p: np.ndarray) -> np.ndarray:
    """Fourier coefficients of ``g'(alpha) T_l'(alpha)`` on ``T_p``."""
    if parity is Parity.COS:
        t = 0.5 * l * ((l + p) * fb.coef(l + p) + (l - p) * fb.coef(p - l))
        t = np.where(p == 0, 0.5 * l * l * fb.coef(l), t)
    else:
        t = -0.5 * l * ((l + p) * fb.coef(l + p) + (p - l) * fb.coef(p - l))
        t = np.where(p == 0, 0.0, t)
    return t


def psi1_coeffs(label: ModeLabel, fb: FourierBoundary, p_max: int | None = None) -> WavefunctionCoeffs:
    """First-order wavefunction correction from the boundary condition on ``R = R0``.

    Dirichlet: ``a_p = -N rho J'_l(rho) particular_p / J_p(rho)`` for ``p != l``,
    which reproduces ``a_p = rho N C_p J_1 / J_p`` at ``l = 0`` and
    ``a_p = -N rho J'_l (C_{p+l} + C_{|p-l|}) / (2 J_p)`` for the cosine branch.
    Neumann: ``a_p = N J_l [(rho^2 + pl) C_{p+l} + (rho^2 - pl) C_{|p-l|}] / (2 rho J'_p)``
    (cosine branch), and ``a_l = N l^4 C_2l / (rho^2 - l^2)^2`` from orthogonality
    to ``psi0``.  The sine branch follows from the same projections.
    """
    l = label.l
    if p_max is None:
        p_max = fb.n_max + l
    if p_max < 2 * l:
        raise InputError(f"p_max={p_max} must be >= 2l={2 * l}")
    rho = label.rho
    norm = norm_constant(label, fb.r0)
    energy0 = e0(label, fb.r0)
    energy1 = e1(label, fb)

    p = np.arange(p_max + 1)
    d = _projection_g(fb, l, label.parity, p)
    d[l] += 0.5 * energy1 / energy0
    jv, jp, jpp = jn_derivs(max(p_max, l), rho, nderiv=2)
    jv, jp, jpp = jv[: p_max + 1], jp[: p_max + 1], jpp[: p_max + 1]

    a = np.zeros(p_max + 1)
    active = (p != l) & (d != 0.0) if label.bc is BC.DIRICHLET else (p != l)
    if label.parity is Parity.SIN:
        active &= p != 0

    if label.bc is BC.DIRICHLET:
        # p = l is automatic: J_l(rho) = 0; E1 was chosen so that d_l = 0
        if abs(d[l]) > 1e-12 * max(1.0, np.max(np.abs(d))):
            raise NumericError(f"first-order Dirichlet condition not met at p=l for {label}")
        idx = np.nonzero(active)[0]
        _pole_check(jv, jp, idx, "J", str(label))
        a[idx] = -norm * rho * jp[l] * d[idx] / jv[idx]
    else:
        rhs = (rho * rho - l * l) * d + _projection_dg(fb, l, label.parity, p)
        if abs(rhs[l]) > 1e-12 * max(1.0, np.max(np.abs(rhs))):
            raise NumericError(f"first-order Neumann condition not met at p=l for {label}")
        idx = np.nonzero(active & (rhs != 0.0))[0]
        _pole_check(jp, jpp, idx, "J'", str(label))
        a[idx] = norm * jv[l] * rhs[idx] / (rho * jp[idx])
        if l != 0:
            sign = 1.0 if label.parity is Parity.COS else -1.0
            a[l] = sign * norm * l**4 * fb.coef(2 * l) / (rho * rho - l * l) ** 2

    return WavefunctionCoeffs(
        label=label,
        order=1,
        r0=fb.r0,
        rho=rho,
        norm=norm,
        e0=energy0,
        e1=energy1,
        a=a,
        particular=d,
    )


def psi2_coeffs(j: int, bc, fb: FourierBoundary, psi1: WavefunctionCoeffs, p_max: int | None = None) -> WavefunctionCoeffs:
    """Second-order correction for the ``l = 0`` mode ``j``.

    Dirichlet: ``b_p = rho J_1 / J_p * (a_0 C_p - N/2 sum_n C_n (C_{n+p} + C_{|n-p|}) xi_n)``.
    Neumann: ``b_p = rho J_0 / J'_p * (a_0 C_p + N/(2 rho) sum_n n p C_n (J_n / J'_n) (C_{n+p} - C_{|n-p|})
    + N/2 sum_n C_n (C_{n+p} + C_{|n-p|}) lambda_n)``, Bessel functions at ``rho``.
    ``b_0`` is left at zero until :func:`normalize`.
    """
    bc = _check_label_bc(bc)
    label = ModeLabel(0, j, Parity.COS, bc)
    if psi1.label != label:
        raise InputError(f"psi1 belongs to {psi1.label}, not {label}")
    n_max = fb.n_max
    if p_max is None:
        p_max = 2 * n_max
    rho, norm = psi1.rho, psi1.norm
    energy2 = e2_l0(j, bc, fb)

    n = np.arange(1, n_max + 1)
    p = np.arange(p_max + 1)
    cn = fb.coef(n)
    mix = fb.coef(n[None, :] + p[:, None]) + fb.coef(n[None, :] - p[:, None])
    mix[0] = cn
    a_n = np.zeros(n_max)
    m = min(n_max, psi1.a.size - 1)
    a_n[:m] = psi1.a[1 : m + 1]
    a0 = float(psi1.a[0])

    part2 = a0 * fb.coef(p)
    part2[0] = norm * energy2 / (2.0 * psi1.e0)

    jv, jp, jpp = jn_derivs(p_max, rho, nderiv=2)
    w = second_order_weights(j, bc, n_max) if n_max else np.zeros(0)
    pair = mix[1:] @ (cn * w)
    b = np.zeros(p_max + 1)
    pp = p[1:]
    if bc is BC.DIRICHLET:
        idx = pp[(a0 * fb.coef(pp) != 0) | (pair != 0)]
        _pole_check(jv, jp, idx, "J", str(label))
        b[1:] = rho * jv[1] * (a0 * fb.coef(pp) - 0.5 * norm * pair)
        b[1:] = np.where(np.isin(pp, idx), b[1:] / np.where(np.isin(pp, idx), jv[pp], 1.0), 0.0)
    else:
        # each n-term carries J_n / J'_n = (lambda_n - 1/2) / rho
        anti = (fb.coef(n[None, :] + pp[:, None]) - fb.coef(n[None, :] - pp[:, None])) @ (n * cn * (w - 0.5) / rho)
        brace = a0 * fb.coef(pp) + norm / (2.0 * rho) * pp * anti + 0.5 * norm * pair
        idx = pp[brace != 0]
        _pole_check(jp, jpp, idx, "J'", str(label))
        safe = np.where(np.isin(pp, idx), jp[pp], 1.0)
        b[1:] = np.where(np.isin(pp, idx), rho * jv[0] * brace / safe, 0.0)

    return replace(psi1, order=2, e2=energy2, b=b, particular2=part2, mix=mix, normalized=False)


def _trig(parity: Parity, p: np.ndarray, alpha: np.ndarray, deriv: int):
    arg = alpha[..., None] * p
    if parity is Parity.COS:
        return np.cos(arg) if deriv == 0 else -p * np.sin(arg)
    return np.sin(arg) if deriv == 0 else p * np.cos(arg)


def _profiles(coeffs: WavefunctionCoeffs, fb: FourierBoundary, R, comp: int, dR: int = 0) -> np.ndarray:
    """Radial profiles ``f_p(R)`` with ``psi^(comp) = sum_p f_p(R) T_p(alpha)``.

    ``dR=1`` returns the R-derivatives instead.  Shape ``R.shape + (P,)``.
    """
    label = coeffs.label
    l, k, norm = label.l, coeffs.k, coeffs.norm
    R = np.asarray(R, dtype=float)
    rho = k * R

    if comp == 0:
        jv, jp = jn_derivs(l, rho)
        out = np.zeros(R.shape + (l + 1,))
        out[..., l] = norm * (jv[..., l] if dR == 0 else k * jp[..., l])
        return out

    if comp == 1:
        size = coeffs.a.size
        jv, jp, jpp = jn_derivs(max(size - 1, l), rho, nderiv=2)
        rl = rho[..., None]
        if dR == 0:
            homog = jv[..., :size] * coeffs.a
            part = norm * rl * jp[..., l : l + 1] * coeffs.particular
            return homog + part
        homog = k * jp[..., :size] * coeffs.a
        part = norm * k * (jp[..., l : l + 1] + rl * jpp[..., l : l + 1]) * coeffs.particular
        return homog + part

    if comp == 2:
        if l != 0:
            raise UnsupportedScopeError("second-order wavefunction only exists for l = 0")
        if coeffs.b is None:
            raise InputError("coefficients carry no second-order terms")
        size = coeffs.b.size
        n_max = coeffs.mix.shape[1]
        jv, jp, jpp = jn_derivs(max(size - 1, n_max, 1), rho, nderiv=2)
        n = np.arange(1, n_max + 1)
        a_n = np.zeros(n_max)
        m = min(n_max, coeffs.a.size - 1)
        a_n[:m] = coeffs.a[1 : m + 1]
        cn = fb.coef(n)
        rr = rho[..., None]
        if dR == 0:
            homog = jv[..., :size] * coeffs.b
            shift = (rho * jp[..., 0])[..., None] * coeffs.particular2
            s_n = 0.5 * rr * a_n * jp[..., n] - 0.25 * rr * rr * norm * cn * jp[..., 1:2]
            return homog + shift + s_n @ coeffs.mix.T
        homog = jp[..., :size] * coeffs.b
        shift = (jp[..., 0] + rho * jpp[..., 0])[..., None] * coeffs.particular2
        s_n = 0.5 * a_n * (jp[..., n] + rr * jpp[..., n]) - 0.25 * norm * cn * (
            2 * rr * jp[..., 1:2] + rr * rr * jpp[..., 1:2]
        )
        return k * (homog + shift + s_n @ coeffs.mix.T)

    raise InputError(f"component must be 0, 1 or 2, got {comp}")


def _component(coeffs: WavefunctionCoeffs, fb: FourierBoundary, R, alpha, comp: int, deriv=(0, 0)):
    """One order ``comp`` of the wavefunction (or a first derivative of it)."""
    dR, da = deriv
    if dR + da > 1:
        raise InputError("only first derivatives are available")
    R, alpha = np.broadcast_arrays(np.asarray(R, dtype=float), np.asarray(alpha, dtype=float))
    prof = _profiles(coeffs, fb, R, comp, dR)
    parity = Parity.COS if comp == 2 else coeffs.label.parity
    p = np.arange(prof.shape[-1])
    return np.einsum("...p,...p->...", prof, _trig(parity, p, alpha, da))


def eval_psi(label: ModeLabel, coeffs: WavefunctionCoeffs, fb: FourierBoundary, R, alpha, order: int = 1, deriv=(0, 0)):
    """``psi0 + psi1 (+ psi2)`` at pulled-back coordinates ``(R, alpha)``.

    ``deriv=(1, 0)`` or ``(0, 1)`` returns the R- or alpha-derivative instead.
    """
    if coeffs.label != label:
        raise InputError(f"coefficients belong to {coeffs.label}, not {label}")
    if order == 2 and label.l != 0:
        raise UnsupportedScopeError("second order is only available for l = 0")
    if order not in (0, 1, 2) or order > coeffs.order:
        raise InputError(f"order {order} not available (coefficients carry order {coeffs.order})")
    R_arr = np.asarray(R, dtype=float)
    if np.any(R_arr < 0) or np.any(R_arr > fb.r0 * (1 + 1e-12)):
        raise InputError("R must lie in [0, R0]")
    total = _component(coeffs, fb, R, alpha, 0, deriv)
    for comp in range(1, order + 1):
        total = total + _component(coeffs, fb, R, alpha, comp, deriv)
    return float(total) if np.ndim(total) == 0 else total


def physical_point(fb: FourierBoundary, R, alpha):
    """Map pulled-back ``(R, alpha)`` to physical polar ``(r, theta)``."""
    alpha = np.asarray(alpha, dtype=float)
    return np.asarray(R) * (1.0 + fb.g(alpha)), alpha


def _radial_rule(r0: float, n_r: int):
    x, w = np.polynomial.legendre.leggauss(n_r)
    R = 0.5 * r0 * (x + 1.0)
    return R, 0.5 * r0 * w * R


def overlap(coeffs: WavefunctionCoeffs, fb: FourierBoundary, i: int, j: int, n_r: int | None = None, rtol: float = 1e-12) -> float:
    """``<psi^(i), psi^(j)>`` over the disk in the flat measure ``R dR dalpha``.

    The angular integral is done exactly through orthogonality of ``T_p``;
    the radial one by Gauss-Legendre, checked against a rule twice as fine.
    """
    parity = coeffs.label.parity
    if n_r is None:
        n_r = 48 + max(coeffs.a.size, 0 if coeffs.b is None else coeffs.b.size) // 2
    vals = []
    for m in (n_r, 2 * n_r):
        R, w = _radial_rule(coeffs.r0, m)
        fi, fj = _profiles(coeffs, fb, R, i), _profiles(coeffs, fb, R, j)
        size = min(fi.shape[1], fj.shape[1])
        ang = np.full(size, np.pi)
        ang[0] = 2 * np.pi if parity is Parity.COS else 0.0
        vals.append(float(w @ (fi[:, :size] * fj[:, :size]) @ ang))
    if abs(vals[1] - vals[0]) > rtol * max(1.0, abs(vals[1])) + 1e-14:
        raise NumericError(f"radial quadrature not converged: {vals[0]!r} vs {vals[1]!r}")
    return vals[1]


def normalize(label: ModeLabel, coeffs: WavefunctionCoeffs, fb: FourierBoundary, tol: float = 1e-8) -> WavefunctionCoeffs:
    """Fix the free constants so the wavefunction is normalised order by order.

    Checks ``<psi0, psi0> = 1``; at first order checks that the ``a_l`` from
    the closed form makes ``<psi0, psi1> = 0``; at second order solves
    ``2 <psi0, psi2> + <psi1, psi1> = 0`` for ``b_0``.
    """
    if coeffs.label != label:
        raise InputError(f"coefficients belong to {coeffs.label}, not {label}")
    n00 = overlap(coeffs, fb, 0, 0)
    if abs(n00 - 1.0) > tol:
        raise NumericError(f"psi0 normalisation off by {n00 - 1.0:.3e}")
    if coeffs.order >= 1:
        n01 = overlap(coeffs, fb, 0, 1)
        # psi0 = N J_l T_l with <psi0, psi0> = 1, so a_l shifts <psi0, psi1> by a_l / N
        a_l_needed = coeffs.a[label.l] - coeffs.norm * n01
        if abs(a_l_needed - coeffs.a[label.l]) > tol * max(1.0, coeffs.norm):
            raise NumericError(
                f"a_l closed form {coeffs.a[label.l]:.12g} disagrees with orthogonality value {a_l_needed:.12g}"
            )
    if coeffs.order >= 2:
        b = coeffs.b.copy()
        b[0] = 0.0
        trial = replace(coeffs, b=b)
        n02 = overlap(trial, fb, 0, 2)
        n11 = overlap(trial, fb, 1, 1)
        b[0] = -coeffs.norm * (n02 + 0.5 * n11)
        coeffs = replace(coeffs, b=b)
    return replace(coeffs, normalized=True)


def metric_operator(n: int, fb: FourierBoundary, R, alpha, d: dict):
    """Apply ``L_n`` given derivatives of psi.

    ``d`` maps ``"R", "RR", "a", "aa", "Ra"`` to arrays of the corresponding
    partial derivatives at ``(R, alpha)``.  ``L_0`` is the flat Laplacian.
    """
    g0, g1, g2 = fb.g(alpha), fb.g(alpha, 1), fb.g(alpha, 2)
    lap_part = d["aa"] + R * d["R"] + R * R * d["RR"]
    out = 6.0 * g0**n * lap_part
    if n >= 1:
        out = out + 3.0 * n * R * g0 ** (n - 1) * (g2 * d["R"] + 2.0 * g1 * d["Ra"])
    if n >= 2:
        out = out + n * (n - 1) * R * g0 ** (n - 2) * g1**2 * (2.0 * d["R"] + R * d["RR"])
    return (-1.0) ** n * (n + 1) / (6.0 * R * R) * out


def _psi0_derivs(label: ModeLabel, r0: float, R, alpha):
    rho = label.rho
    k = rho / r0
    norm = norm_constant(label, r0)
    jv, jp, jpp = (t[..., label.l] for t in jn_derivs(label.l, k * R, nderiv=2))
    l = label.l
    if label.parity is Parity.COS:
        c, dc = np.cos(l * alpha), -l * np.sin(l * alpha)
    else:
        c, dc = np.sin(l * alpha), l * np.cos(l * alpha)
    return {
        "psi": norm * jv * c,
        "R": norm * k * jp * c,
        "RR": norm * k * k * jpp * c,
        "a": norm * jv * dc,
        "aa": -l * l * norm * jv * c,
        "Ra": norm * k * jp * dc,
    }


def _disk_rule(r0: float, n_r: int, n_a: int):
    R, wr = _radial_rule(r0, n_r)
    alpha = 2 * np.pi * np.arange(n_a) / n_a
    return R[:, None], alpha[None, :], wr[:, None] * (2 * np.pi / n_a)


def e1_from_operator(label: ModeLabel, fb: FourierBoundary, n_r: int = 96, n_a: int | None = None, boundary_term: bool = True) -> float:
    """First-order energy as ``-<psi0|L_1|psi0>`` by disk quadrature.

    For Neumann modes ``L_0`` is not symmetric against ``psi1`` (whose radial
    derivative on the rim is ``g' psi0_alpha / R0`` rather than zero), and
    Green's identity contributes ``-oint psi0 g' d(psi0)/dalpha dalpha``.
    With ``boundary_term=True`` that rim integral is added; it vanishes
    identically for Dirichlet modes.
    """
    if n_a is None:
        n_a = 1 << (4 * (fb.n_max + label.l) + 64 - 1).bit_length()
    R, alpha, w = _disk_rule(fb.r0, n_r, n_a)
    d = _psi0_derivs(label, fb.r0, R, alpha)
    bulk = -float(np.sum(d["psi"] * metric_operator(1, fb, R, alpha, d) * w))
    if not boundary_term or label.bc is BC.DIRICHLET:
        return bulk
    a_rim = 2 * np.pi * np.arange(n_a) / n_a
    rim = _psi0_derivs(label, fb.r0, np.full_like(a_rim, fb.r0), a_rim)
    ring = np.sum(rim["psi"] * fb.g(a_rim, 1) * rim["a"]) * (2 * np.pi / n_a)
    return bulk - float(ring)


def spectrum(fb: FourierBoundary, bc, l_max: int, j_max: int, order: int = 2) -> list[SpectrumEntry]:
    """All modes with ``l <= l_max``, ``j <= j_max`` (both parities for l != 0),
    sorted by total energy.  Second order is applied to ``l = 0`` only.
    """
    bc = _check_label_bc(bc)
    if order not in (0, 1, 2):
        raise InputError(f"order must be 0, 1 or 2, got {order!r}")
    if l_max < 0 or j_max < 1:
        raise InputError("need l_max >= 0 and j_max >= 1")
    entries = []
    for l in range(l_max + 1):
        for j in range(1, j_max + 1):
            for par in (Parity.COS,) if l == 0 else (Parity.COS, Parity.SIN):
                lab = ModeLabel(l, j, par, bc)
                base = e0(lab, fb.r0)
                first = e1(lab, fb) if order >= 1 else 0.0
                second = bound = None
                if order == 2 and l == 0:
                    second = e2_l0(j, bc, fb)
                    bound = e2_truncation_bound(j, bc, fb)
                total = base + first + (second or 0.0)
                unresolved = l != 0 and (order == 0 or abs(fb.coef(2 * l)) <= SPLIT_TOL)
                entries.append(SpectrumEntry(lab, base, first, second, total, unresolved, bound))
    par_rank = {Parity.COS: 0, Parity.SIN: 1}
    entries.sort(key=lambda e: (e.total, e.label.l, e.label.j, par_rank[e.label.parity]))
    return entries


def physical_field(coeffs: WavefunctionCoeffs, fb: FourierBoundary, r, theta, order: int | None = None, deriv=(0, 0)):
    """The corrected mode as a Helmholtz solution in physical polar coordinates.

    Re-expanding ``psi0 + psi1 (+ psi2)`` about the true wavenumber
    ``k = sqrt(E0 + E1 (+ E2))`` gives the Bessel series
    ``N J_l(k r) T_l + sum_p (a_p + b_p) J_p(k r) T_p``, which solves the
    Helmholtz equation exactly and agrees with the pulled-back expansion
    through the kept order.  ``deriv`` selects an r- or theta-derivative.
    """
    order = coeffs.order if order is None else order
    if order > coeffs.order:
        raise InputError(f"order {order} not available (coefficients carry order {coeffs.order})")
    label = coeffs.label
    energy = coeffs.e0 + (coeffs.e1 if order >= 1 else 0.0)
    amp = np.zeros(max(coeffs.a.size, label.l + 1) if coeffs.b is None else max(coeffs.a.size, coeffs.b.size))
    amp[label.l] += coeffs.norm
    if order >= 1:
        amp[: coeffs.a.size] += coeffs.a
    if order >= 2:
        energy += coeffs.e2
        amp[: coeffs.b.size] += coeffs.b
    k = math.sqrt(energy)
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    p = np.arange(amp.size)
    jv, jp = jn_derivs(p[-1], k * r)
    radial = jv if deriv[0] == 0 else k * jp
    return np.einsum("...p,p,...p->...", radial, amp, _trig(label.parity, p, theta, deriv[1]))


def boundary_residual(coeffs: WavefunctionCoeffs, fb: FourierBoundary, order: int | None = None, n_points: int = 720) -> float:
    """Largest boundary-condition violation of :func:`physical_field` on ``r(theta)``.

    Dirichlet: ``max |psi|``.  Neumann: ``max |d psi / dn|`` with the unit
    outward normal.  Sampled at ``n_points`` equally spaced angles.
    """
    theta = 2 * np.pi * np.arange(n_points) / n_points
    r = fb.radius(theta)
    if coeffs.label.bc is BC.DIRICHLET:
        return float(np.max(np.abs(physical_field(coeffs, fb, r, theta, order))))
    dr = fb.r0 * fb.g(theta, 1)
    psi_r = physical_field(coeffs, fb, r, theta, order, (1, 0))
    psi_t = physical_field(coeffs, fb, r, theta, order, (0, 1))
    dn = (r * psi_r - (dr / r) * psi_t) / np.hypot(r, dr)
    return float(np.max(np.abs(dn)))
