"""Reference eigenvalues by the method of particular solutions.

Every candidate eigenfunction is a combination of the exact interior
Helmholtz solutions ``J_l(k r) cos(l theta)`` (or ``sin``).  An eigenvalue is
a wavenumber at which some combination satisfies the boundary condition,
which shows up as a dip of a smallest singular value as ``k`` is scanned.

The scan uses the subspace-angle form of the method: boundary rows are
stacked on rows sampled at interior points, the stack is orthonormalised,
and the smallest singular value of the boundary block of ``Q`` measures how
close the span comes to a function that vanishes on the boundary without
vanishing inside.  Unlike the bare boundary matrix this does not drift to
zero as the basis becomes ill-conditioned.  The basis is split by rotational
symmetry class, so nearly coincident levels of different symmetry do not
blur into one dip.

Singular values come from an in-repo one-sided Jacobi iteration that runs
batched over many wavenumbers at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from helmpert.errors import InputError, NumericError
from helmpert.geometry import BoundarySpec, FourierBoundary
from helmpert.perturb import BC, Parity
from helmpert.specfun import ZeroKind, bessel_zero, jn_derivs

_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)
#: Angular orders above ``k * r_max + _ORDER_MARGIN`` are dropped per chunk;
#: their columns sit below 1e-14 of the leading ones.
_ORDER_MARGIN = 24
_CHUNK = 128


@dataclass(frozen=True)
class CollocationConfig:
    """Scan and basis settings.

    Attributes
    ----------
    basis_order : int
        Highest angular order ``L`` in the basis.
    boundary_points : int or None
        Number of boundary nodes ``M``.  ``None`` means ``8 (L + 1)``.
    k_min, k_max : float
        Wavenumber range of the scan.
    scan_step : float
        Grid spacing in ``k``.
    dip_threshold : float
        A local minimum counts as an eigenvalue when its depth is below this
        fraction of the median singular value over the scan.
    k_tol : float
        Final bracket width of the golden-section refinement.
    """

    basis_order: int = 40
    boundary_points: int | None = None
    k_min: float = 0.5
    k_max: float = 12.0
    scan_step: float = 0.005
    dip_threshold: float = 0.1
    k_tol: float = 1e-9

    def __post_init__(self):
        if self.basis_order < 0:
            raise InputError("basis_order must be >= 0")
        if self.m < 2 * (self.basis_order + 1):
            raise InputError(f"boundary_points={self.m} must be >= 2(L+1)={2 * (self.basis_order + 1)}")
        if not (0 < self.k_min < self.k_max):
            raise InputError(f"need 0 < k_min < k_max, got {self.k_min}, {self.k_max}")
        if not (self.scan_step > 0):
            raise InputError("scan_step must be > 0")
        if not (0 < self.dip_threshold <= 1):
            raise InputError("dip_threshold must lie in (0, 1]")

    @property
    def m(self) -> int:
        return 8 * (self.basis_order + 1) if self.boundary_points is None else int(self.boundary_points)


@dataclass(frozen=True)
class OracleResult:
    k: float
    E: float
    dip: float
    bracket: tuple[float, float]
    converged: bool
    parity: Parity = Parity.COS
    sym_class: int = 0
    shallow: bool = False


def _as_spec(spec) -> BoundarySpec:
    return spec.as_spec() if isinstance(spec, FourierBoundary) else spec


def _trig(parity: Parity, l: np.ndarray, theta: np.ndarray):
    arg = np.multiply.outer(theta, l)
    if parity is Parity.COS:
        return np.cos(arg), -l * np.sin(arg)
    return np.sin(arg), l * np.cos(arg)


def _boundary_rows(r, dr, theta, k, l, parity: Parity, bc: BC):
    """Basis functions (DBC) or their unit normal derivatives (NBC) on the boundary.

    ``k`` has shape ``(K,)``; result ``(K, len(theta), len(l))``.
    """
    top = int(l.max()) if l.size else 0
    kr = np.multiply.outer(k, r)
    if bc is BC.DIRICHLET:
        (jv,) = jn_derivs(top, kr, nderiv=0)
        t, _ = _trig(parity, l, theta)
        return jv[..., l] * t
    jv, jp = jn_derivs(top, kr)
    t, dt = _trig(parity, l, theta)
    # grad . (r, -r') up to the positive factor r / |(r, -r')|
    rows = (r[:, None] * k[:, None, None] * jp[..., l] * t - (dr / r)[:, None] * jv[..., l] * dt)
    return rows / np.hypot(r, dr)[:, None]


def collocation_matrix(spec, bc, k: float, cfg: CollocationConfig) -> np.ndarray:
    """Boundary collocation matrix on ``M`` uniform angles in ``[0, 2 pi)``.

    Column ``l`` holds ``J_l(k r) cos(l theta)`` (Dirichlet) or its outward
    normal derivative (Neumann), ``l = 0..L``.  Rows are scaled to unit norm.
    """
    spec = _as_spec(spec)
    bc = BC(bc)
    theta = 2 * np.pi * np.arange(cfg.m) / cfg.m
    r, dr = spec.radius(theta), spec.dradius(theta)
    if np.any(r <= 0):
        raise InputError("boundary passes through the origin; normal undefined")
    l = np.arange(cfg.basis_order + 1)
    a = _boundary_rows(r, dr, theta, np.array([float(k)]), l, Parity.COS, bc)[0]
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    return a / np.where(norms > 0, norms, 1.0)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of ``n`` (even) columns into ``n - 1`` rounds of disjoint pairs."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def singular_values(a, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Singular values, descending, of one matrix or a stack ``(..., m, n)``.

    Tall inputs are first reduced to their ``n x n`` triangular factor, which
    has the same singular values.  The one-sided Jacobi iteration then
    orthogonalises column pairs in round-robin order until every pair is
    orthogonal to relative precision ``tol``; the column norms are the
    singular values.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2:
        raise InputError("need a matrix")
    m, n = a.shape[-2:]
    if m < n:
        a = np.swapaxes(a, -1, -2)
        m, n = n, m
    if n == 0:
        return np.zeros(a.shape[:-2] + (0,))
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    u = np.linalg.qr(a, mode="r") if m > n else a.copy()
    if n % 2:
        u = np.concatenate([u, np.zeros(u.shape[:-1] + (1,))], axis=-1)
    rounds = _round_robin(u.shape[-1])
    # columns below this squared norm are numerically zero and left alone
    floor = (tol * tol) * np.einsum("...ij,...ij->...", u, u)[..., None]

    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            up, uq = u[..., p], u[..., q]
            alpha = np.einsum("...ij,...ij->...j", up, up)
            beta = np.einsum("...ij,...ij->...j", uq, uq)
            gamma = np.einsum("...ij,...ij->...j", up, uq)
            act = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > floor)
            if not act.any():
                continue
            rotated = True
            g = np.where(act, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = np.where(act, 1.0 / np.hypot(1.0, t), 1.0)
            s = np.where(act, c * t, 0.0)
            c, s = c[..., None, :], s[..., None, :]
            u[..., p], u[..., q] = c * up - s * uq, s * up + c * uq
        if not rotated:
            sv = np.linalg.norm(u[..., :n], axis=-2)
            return -np.sort(-sv, axis=-1)
    raise NumericError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def smallest_singular_value(a) -> float:
    """``sigma_min`` of a single matrix with at least as many rows as columns."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise InputError("need a 2-D matrix with rows >= columns")
    return float(singular_values(a)[-1])


def rotational_order(spec, max_order: int = 24, rtol: float = 1e-11) -> int:
    """Largest ``m <= max_order`` with ``r(theta + 2 pi / m) = r(theta)``.

    Returns 0 for a circle (every rotation is a symmetry).
    """
    spec = _as_spec(spec)
    theta = 2 * np.pi * (np.arange(720) + 0.37) / 720
    r = spec.radius(theta)
    scale = float(np.max(r))
    if np.ptp(r) <= rtol * scale:
        return 0
    for m in range(max_order, 1, -1):
        if np.max(np.abs(spec.radius(theta + 2 * np.pi / m) - r)) <= rtol * scale:
            return m
    return 1


def symmetry_classes(m: int, basis_order: int, parity: Parity) -> list[tuple[int, np.ndarray]]:
    """Angular orders grouped by rotational symmetry class ``c = l mod m`` up to sign."""
    start = 0 if parity is Parity.COS else 1
    orders = np.arange(start, basis_order + 1)
    if m == 0:
        return [(int(l), np.array([l])) for l in orders]
    out = []
    for c in range(m // 2 + 1):
        sel = orders[np.isin(orders % m, (c, (m - c) % m))]
        if sel.size:
            out.append((c, sel))
    return out


class _Sampler:
    """Subspace-angle singular values for the symmetry classes of one parity.

    All classes share the boundary and interior nodes, so one Bessel table
    per chunk of wavenumbers serves every class.
    """

    def __init__(self, spec: BoundarySpec, bc: BC, parity: Parity, classes, cfg: CollocationConfig, seed: int = 0):
        self.bc, self.parity = bc, parity
        self.classes = {c: orders for c, orders in classes}
        widest = max(o.size for o in self.classes.values())
        # even boundaries: the half circle carries all information of each parity
        n_b = max(cfg.m // 2, 2 * widest + 8)
        self.theta = (np.arange(n_b) + 0.5) * np.pi / n_b
        self.r, self.dr = spec.radius(self.theta), spec.dradius(self.theta)
        if np.any(self.r <= 0):
            raise InputError("boundary passes through the origin; normal undefined")
        rng = np.random.default_rng(seed)
        n_i = max(2 * widest, 20)
        self.theta_in = rng.uniform(0.0, np.pi, n_i)
        self.r_in = spec.radius(self.theta_in) * np.sqrt(rng.uniform(0.05, 0.9, n_i))
        self.r_max = float(self.r.max())
        self.top = max(int(o.max()) for o in self.classes.values())

    def sigmas(self, k, which=None, count: int = 2) -> dict[int, np.ndarray]:
        """Smallest ``count`` singular values per class, each of shape ``(K, count)``."""
        k = np.asarray(k, dtype=float)
        which = list(self.classes) if which is None else list(which)
        out = {c: np.ones((k.size, count)) for c in which}
        order = np.argsort(k)
        all_l = np.arange(self.top + 1)
        for start in range(0, k.size, _CHUNK):
            idx = order[start : start + _CHUNK]
            kc = k[idx]
            cut = kc.max() * self.r_max + _ORDER_MARGIN
            used = [c for c in which if self.classes[c][0] <= cut]
            if not used:
                continue
            top = min(self.top, int(cut))
            l = all_l[: top + 1]
            b = _boundary_rows(self.r, self.dr, self.theta, kc, l, self.parity, self.bc)
            (jin,) = jn_derivs(top, np.multiply.outer(kc, self.r_in), nderiv=0)
            interior = jin * _trig(self.parity, l, self.theta_in)[0]
            stacked = np.concatenate([b, interior], axis=1)
            for c in used:
                cols = self.classes[c]
                cols = cols[cols <= top]
                q, _ = np.linalg.qr(stacked[..., cols])
                sv = singular_values(q[:, : self.theta.size, :])[:, ::-1]
                got = min(count, sv.shape[-1])
                out[c][idx, :got] = sv[:, :got]
        return out


def _golden(fun, lo: np.ndarray, hi: np.ndarray, tol: float, max_iter: int = 200):
    """Batched golden-section minimisation of ``fun`` (vector in, vector out)."""
    lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
    c = hi - _GOLD * (hi - lo)
    d = lo + _GOLD * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c, d = np.where(left, hi - _GOLD * (hi - lo), d), np.where(left, c, lo + _GOLD * (hi - lo))
        fp = fun(np.where(left, c, d))
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    x = 0.5 * (lo + hi)
    return x, fun(x), lo, hi


def _scan_parity(sampler: _Sampler, cfg: CollocationConfig, ks: np.ndarray, which=None) -> list[OracleResult]:
    grid = sampler.sigmas(ks, which, count=1)
    found = []
    for c, sig in grid.items():
        s = sig[:, 0]
        median = float(np.median(s))
        is_min = (s[1:-1] < s[:-2]) & (s[1:-1] <= s[2:]) & (s[1:-1] < cfg.dip_threshold * median)
        idx = np.nonzero(is_min)[0] + 1
        if idx.size == 0:
            continue

        def fun(kk, c=c):
            return sampler.sigmas(kk, [c], count=1)[c][:, 0]

        x, fx, blo, bhi = _golden(fun, ks[idx - 1], ks[idx + 1], cfg.k_tol)
        second = sampler.sigmas(x, [c], count=2)[c][:, 1]
        for kx, dip, a, b, s2 in zip(x, fx, blo, bhi, second):
            res = OracleResult(
                k=float(kx),
                E=float(kx * kx),
                dip=float(dip),
                bracket=(float(a), float(b)),
                converged=bool(b - a <= 2 * cfg.k_tol and dip < cfg.dip_threshold * median),
                parity=sampler.parity,
                sym_class=c,
                shallow=bool(dip > 1e-2 * median),
            )
            found.append(res)
            # a second vanishing singular value means a double level in this class
            if s2 < cfg.dip_threshold * median:
                found.append(res)
    return found


def _scan_grid(cfg: CollocationConfig) -> np.ndarray:
    n = int(math.floor((cfg.k_max - cfg.k_min) / cfg.scan_step + 1e-9)) + 1
    return cfg.k_min + cfg.scan_step * np.arange(n)


def scan_eigenvalues(spec, bc, cfg: CollocationConfig | None = None) -> list[OracleResult]:
    """All eigenvalues with ``k`` in ``[k_min, k_max]``, sorted by energy.

    Cosine and sine bases are scanned separately and merged, so a degenerate
    pair shows up once per parity.  Each symmetry class is scanned on its
    own.  Local minima below ``dip_threshold`` times the class median are
    refined by golden section.
    """
    cfg = cfg or CollocationConfig()
    spec, bc = _as_spec(spec), BC(bc)
    ks = _scan_grid(cfg)
    if ks.size < 3:
        return []
    m = rotational_order(spec)
    out = []
    for parity in (Parity.COS, Parity.SIN):
        classes = symmetry_classes(m, cfg.basis_order, parity)
        out.extend(_scan_parity(_Sampler(spec, bc, parity, classes, cfg), cfg, ks))
    out.sort(key=lambda r: (r.E, r.parity is Parity.SIN, r.sym_class))
    return out


def locate(spec, bc, k_guess: float, l: int, parity=Parity.COS, cfg: CollocationConfig | None = None, window: float = 0.05) -> OracleResult:
    """Eigenvalue in the symmetry class of angular order ``l`` nearest ``k_guess``.

    Scans ``k_guess +/- window`` finely, then refines.  Raises
    :class:`NumericError` if no dip is found in the window.
    """
    cfg = cfg or CollocationConfig()
    spec, bc, parity = _as_spec(spec), BC(bc), Parity(parity)
    m = rotational_order(spec)
    cls = [(c, o) for c, o in symmetry_classes(m, cfg.basis_order, parity) if l in o]
    if not cls:
        raise InputError(f"order {l} is not in the {parity.value} basis")
    c = cls[0][0]
    ks = np.linspace(max(k_guess - window, 1e-3), k_guess + window, 81)
    sampler = _Sampler(spec, bc, parity, cls, cfg)
    # the window is too narrow for a meaningful median, so accept any local minimum
    sub = CollocationConfig(cfg.basis_order, cfg.boundary_points, ks[0], ks[-1], ks[1] - ks[0], 1.0, cfg.k_tol)
    found = _scan_parity(sampler, sub, ks)
    if not found:
        raise NumericError(f"no dip within {window} of k={k_guess}")
    return min(found, key=lambda r: abs(r.k - k_guess))


def exact_reference(shape: str, bc, count: int, a: float = 1.0) -> list[float]:
    """Exact energies for a circle of radius ``a`` or the tilted square ``|x| + |y| = a``.

    Degenerate levels are repeated.  The Neumann zero mode is excluded.
    """
    bc = BC(bc)
    if count < 1:
        raise InputError("count must be >= 1")
    if not a > 0:
        raise InputError("a must be > 0")
    if shape == "circle":
        kind = ZeroKind.ZERO_OF_J if bc is BC.DIRICHLET else ZeroKind.ZERO_OF_J_PRIME
        vals = []
        for l in range(count + 1):
            for j in range(1, count + 1):
                e = (bessel_zero(kind, l, j) / a) ** 2
                vals.extend([e] if l == 0 else [e, e])
        return sorted(vals)[:count]
    if shape == "tilted_square":
        # side sqrt(2) a, so E = pi^2 (m^2 + n^2) / (2 a^2)
        start = 1 if bc is BC.DIRICHLET else 0
        top = start + int(math.isqrt(2 * count)) + count
        vals = [
            math.pi**2 * (mm * mm + nn * nn) / (2 * a * a)
            for mm in range(start, top + 1)
            for nn in range(start, top + 1)
            if mm or nn
        ]
        return sorted(vals)[:count]
    raise InputError(f"unknown reference shape {shape!r}; use 'circle' or 'tilted_square'")
