"""Boundary curves and their cosine-Fourier description about a mean circle.

A star-shaped, even boundary ``r(theta)`` is written as
``r = R0 * (1 + g(theta))`` with ``g = sum_n C_n cos(n theta)``, where ``R0`` is
the angular mean of ``r``.  Deformation strength lives entirely in the
``C_n``; there is no separate small parameter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from helmpert.errors import InputError, NumericError

DEFAULT_NMAX = 64
MIN_NODES = 64
MAX_NODES = 2**16
QUAD_RTOL = 1e-10
SYMMETRY_TOL = 1e-8


def _positive_finite(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{name!r} must be a number, got {value!r}") from None
    if not math.isfinite(v) or v <= 0:
        raise InputError(f"{name!r} must be finite and > 0, got {value!r}")
    return v


@dataclass(frozen=True)
class Supercircle:
    """``r = a / (|cos t|^t + |sin t|^t)^(1/t)``: diamond at t=1, circle at t=2."""

    a: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive_finite("a", self.a))
        t = _positive_finite("t", self.t)
        if t < 1:
            raise InputError(f"'t' must be >= 1 for a convex supercircle, got {t}")
        object.__setattr__(self, "t", t)

    @property
    def kink_period(self) -> float | None:
        # |cos|^t is not smooth at the axes unless t is an even integer
        if self.t == round(self.t) and round(self.t) % 2 == 0:
            return None
        return math.pi / 2

    def radius(self, theta):
        c, s = np.abs(np.cos(theta)), np.abs(np.sin(theta))
        return self.a * (c**self.t + s**self.t) ** (-1.0 / self.t)

    def dradius(self, theta):
        t = self.t
        c, s = np.cos(theta), np.sin(theta)
        ssum = np.abs(c) ** t + np.abs(s) ** t
        dsum = t * (np.abs(s) ** (t - 1) * np.sign(s) * c - np.abs(c) ** (t - 1) * np.sign(c) * s)
        return -self.a / t * ssum ** (-1.0 / t - 1.0) * dsum

    def to_json(self) -> dict:
        return {"shape": "supercircle", "a": self.a, "t": self.t}


@dataclass(frozen=True)
class Ellipse:
    """Ellipse about its centre with semi-major axis ``a`` along theta = 0."""

    a: float
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive_finite("a", self.a))
        try:
            e = float(self.eps)
        except (TypeError, ValueError):
            raise InputError(f"'eps' must be a number, got {self.eps!r}") from None
        if not (0.0 <= e < 1.0):
            raise InputError(f"'eps' must lie in [0, 1), got {self.eps!r}")
        object.__setattr__(self, "eps", e)

    kink_period = None

    def radius(self, theta):
        e2 = self.eps**2
        return self.a * math.sqrt(1 - e2) / np.sqrt(1 - e2 * np.cos(theta) ** 2)

    def dradius(self, theta):
        e2 = self.eps**2
        c, s = np.cos(theta), np.sin(theta)
        return -self.a * math.sqrt(1 - e2) * e2 * c * s * (1 - e2 * c * c) ** -1.5

    def to_json(self) -> dict:
        return {"shape": "ellipse", "a": self.a, "eps": self.eps}


@dataclass(frozen=True)
class RawFourier:
    """Boundary given directly as ``r0 * (1 + sum_n c[n-1] cos(n theta))``."""

    r0: float
    c: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "r0", _positive_finite("r0", self.r0))
        try:
            c = tuple(float(v) for v in self.c)
        except (TypeError, ValueError):
            raise InputError(f"'c' must be a list of numbers, got {self.c!r}") from None
        if not all(math.isfinite(v) for v in c):
            raise InputError("'c' entries must be finite")
        object.__setattr__(self, "c", c)
        if c:
            theta = np.linspace(0.0, 2 * np.pi, 8 * len(c) + 4096, endpoint=False)
            if np.min(self.radius(theta)) <= 0:
                raise InputError("'c' makes the radius non-positive somewhere")

    kink_period = None

    def radius(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = np.arange(1, len(self.c) + 1)
        g = np.cos(theta[..., None] * n) @ np.asarray(self.c) if self.c else 0.0 * theta
        return self.r0 * (1.0 + g)

    def dradius(self, theta):
        theta = np.asarray(theta, dtype=float)
        if not self.c:
            return 0.0 * theta
        n = np.arange(1, len(self.c) + 1)
        return -self.r0 * (np.sin(theta[..., None] * n) @ (n * np.asarray(self.c)))

    def to_json(self) -> dict:
        return {"shape": "fourier", "r0": self.r0, "c": list(self.c)}


BoundarySpec = Union[Supercircle, Ellipse, RawFourier]


@dataclass(frozen=True)
class FourierBoundary:
    """Mean radius ``r0`` and cosine coefficients ``C_1..C_N`` of a boundary."""

    r0: float
    c: np.ndarray
    tail_bound: float = 0.0
    padded: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r0 = _positive_finite("r0", self.r0)
        c = np.array(self.c, dtype=float).reshape(-1)
        c.setflags(write=False)
        padded = np.concatenate([[0.0], c])
        padded.setflags(write=False)
        object.__setattr__(self, "r0", r0)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "padded", padded)

    @property
    def n_max(self) -> int:
        return self.c.size

    def coef(self, n) -> float | np.ndarray:
        """``C_n`` with ``C_0 = 0`` and zero beyond the stored range; vectorised."""
        n = np.abs(np.asarray(n))
        inside = n <= self.n_max
        out = np.where(inside, self.padded[np.where(inside, n, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def g(self, alpha, deriv: int = 0):
        """``g(alpha)`` or its first/second derivative."""
        alpha = np.asarray(alpha, dtype=float)
        n = np.arange(1, self.n_max + 1)
        if self.n_max == 0:
            return np.zeros_like(alpha)
        arg = alpha[..., None] * n
        if deriv == 0:
            return np.cos(arg) @ self.c
        if deriv == 1:
            return -(np.sin(arg) @ (n * self.c))
        if deriv == 2:
            return -(np.cos(arg) @ (n * n * self.c))
        raise InputError("deriv must be 0, 1 or 2")

    def radius(self, theta):
        return self.r0 * (1.0 + self.g(theta))

    def scaled(self, s: float) -> "FourierBoundary":
        return FourierBoundary(self.r0, s * self.c, s * s * self.tail_bound)

    def rescaled(self, factor: float) -> "FourierBoundary":
        return FourierBoundary(self.r0 * factor, self.c, self.tail_bound)

    def truncated(self, n_max: int) -> "FourierBoundary":
        extra = float(np.sum(self.c[n_max:] ** 2))
        return FourierBoundary(self.r0, self.c[:n_max], self.tail_bound + extra)

    def rotational_order(self, tol: float = 1e-12) -> int | None:
        """Largest m with ``C_n = 0`` unless ``m | n``; None for a circle."""
        nz = np.nonzero(np.abs(self.c) > tol)[0] + 1
        if nz.size == 0:
            return None
        return int(np.gcd.reduce(nz))

    def as_spec(self) -> RawFourier:
        return RawFourier(self.r0, tuple(self.c))


def eval_radius(spec: BoundarySpec, theta):
    """Exact ``r(theta)`` of the boundary."""
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError("theta must be finite")
    r = spec.radius(arr)
    return float(r) if np.ndim(r) == 0 else r


def _node_map(spec: BoundarySpec, n_nodes: int):
    """Quadrature nodes ``theta_i`` and weights on ``[0, 2 pi)``.

    Plain uniform trapezoid for smooth curves.  For curves with possible
    kinks at multiples of ``kink_period`` the uniform grid lives in a variable
    ``u`` with ``theta(u) = u - (w/(3 pi)) * 2 sin(2 pi u / w) + (w/(12 pi)) sin(4 pi u / w)``;
    ``dtheta/du`` vanishes to fourth order at the kinks, which restores fast
    convergence of the trapezoid rule.
    """
    u = 2 * np.pi * np.arange(n_nodes) / n_nodes
    h = 2 * np.pi / n_nodes
    w = spec.kink_period
    if w is None:
        return u, np.full(n_nodes, h)
    x = 2 * np.pi * u / w
    theta = u - (2 * w / (3 * np.pi)) * np.sin(x) + (w / (12 * np.pi)) * np.sin(2 * x)
    jac = 1 - (4 / 3) * np.cos(x) + (1 / 3) * np.cos(2 * x)
    return theta, h * jac


def _converged_quadrature(spec: BoundarySpec, integrand, start: int, max_nodes: int, rtol: float, atol: float):
    n = start
    theta, w = _node_map(spec, n)
    prev = integrand(theta, w)
    while True:
        n *= 2
        if n > max_nodes:
            raise NumericError(f"boundary quadrature did not converge within {max_nodes} nodes")
        theta, w = _node_map(spec, n)
        cur = integrand(theta, w)
        if np.max(np.abs(cur - prev)) <= rtol * np.max(np.abs(cur)) + atol:
            return cur, theta, w
        prev = cur


def mean_radius(spec: BoundarySpec, max_nodes: int = MAX_NODES) -> float:
    """Angular mean of ``r(theta)`` over a full turn."""
    if isinstance(spec, RawFourier):
        return spec.r0

    def integrand(theta, w):
        return np.array([np.sum(spec.radius(theta) * w) / (2 * np.pi)])

    val, _, _ = _converged_quadrature(spec, integrand, MIN_NODES, max_nodes, QUAD_RTOL, 0.0)
    return float(val[0])


def _tail_estimate(c: np.ndarray) -> float:
    """Extrapolate ``sum_{n > N} C_n^2`` from a power-law fit to the tail.

    Uses the nonzero coefficients in the upper half of the index range; the
    fraction of nonzero entries there accounts for symmetry-forced zeros.
    """
    n_max = c.size
    idx = np.arange(n_max // 2 + 1, n_max + 1)
    vals = np.abs(c[idx - 1])
    keep = vals > 1e-14
    if keep.sum() < 2:
        return float(np.sum(vals[keep] ** 2))
    slope, icpt = np.polyfit(np.log(idx[keep]), np.log(vals[keep]), 1)
    if slope >= -0.5:
        return math.inf
    density = keep.sum() / idx.size
    amp2 = math.exp(2 * icpt)
    return float(density * amp2 * n_max ** (2 * slope + 1) / (-2 * slope - 1))


def fourier_coeffs(spec: BoundarySpec, n_max: int = DEFAULT_NMAX, max_nodes: int = MAX_NODES) -> FourierBoundary:
    """Mean radius and cosine coefficients ``C_1..C_{n_max}`` of ``spec``.

    ``C_n = (1/pi) * integral (r/R0 - 1) cos(n theta)``.  Raises InputError if
    any sine harmonic exceeds 1e-8 (boundary not even in theta) or if the
    truncated series ``1 + g`` is not positive.
    """
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    if isinstance(spec, RawFourier):
        c = np.zeros(n_max)
        m = min(n_max, len(spec.c))
        c[:m] = spec.c[:m]
        tail = float(np.sum(np.asarray(spec.c[m:]) ** 2))
        return FourierBoundary(spec.r0, c, tail)

    r0 = mean_radius(spec, max_nodes)
    n = np.arange(1, n_max + 1)

    def integrand(theta, w):
        rel = spec.radius(theta) / r0 - 1.0
        arg = np.outer(n, theta)
        cos_part = np.cos(arg) @ (rel * w) / np.pi
        sin_part = np.sin(arg) @ (rel * w) / np.pi
        return np.concatenate([cos_part, sin_part])

    start = max(MIN_NODES, 16 * n_max)
    start = 1 << (start - 1).bit_length()
    vals, _, _ = _converged_quadrature(spec, integrand, start, max_nodes, 0.0, 1e-13)
    c, s = vals[:n_max], vals[n_max:]
    worst = int(np.argmax(np.abs(s)))
    if abs(s[worst]) > SYMMETRY_TOL:
        raise InputError(
            f"boundary is not even in theta: sine harmonic {worst + 1} is {s[worst]:.3e}"
        )
    fb = FourierBoundary(r0, c, _tail_estimate(c))
    theta = np.linspace(0, 2 * np.pi, 8 * n_max + 1024, endpoint=False)
    if np.min(1.0 + fb.g(theta)) <= 0:
        raise InputError("truncated Fourier series gives a non-positive radius")
    return fb


_SHAPE_KEYS = {
    "supercircle": {"a", "t"},
    "ellipse": {"a", "eps"},
    "fourier": {"r0", "c"},
    "circle": {"a"},
}


def parse_boundary(obj) -> BoundarySpec:
    """Build a boundary from its JSON object form.

    ``{"shape": "supercircle", "a": 1, "t": 3}``, ``{"shape": "ellipse", "a": 1,
    "eps": 0.5}``, ``{"shape": "fourier", "r0": 1, "c": [...]}`` or
    ``{"shape": "circle", "a": 1}``.  Errors name the offending key.
    """
    if not isinstance(obj, dict):
        raise InputError("boundary must be a JSON object")
    if "shape" not in obj:
        raise InputError("missing key 'shape'")
    shape = obj["shape"]
    if shape not in _SHAPE_KEYS:
        raise InputError(f"key 'shape': unknown shape {shape!r}")
    wanted = _SHAPE_KEYS[shape]
    for key in sorted(wanted):
        if key not in obj:
            raise InputError(f"missing key {key!r} for shape {shape!r}")
    extra = set(obj) - wanted - {"shape"}
    if extra:
        raise InputError(f"unexpected key {sorted(extra)[0]!r} for shape {shape!r}")
    if shape == "supercircle":
        return Supercircle(obj["a"], obj["t"])
    if shape == "ellipse":
        return Ellipse(obj["a"], obj["eps"])
    if shape == "circle":
        return RawFourier(_positive_finite("a", obj["a"]), ())
    if not isinstance(obj["c"], (list, tuple)):
        raise InputError("key 'c' must be a list of numbers")
    return RawFourier(obj["r0"], tuple(obj["c"]))
