"""Smooth test functions with their derivatives and derivative bounds.

The nonlocal generator and the Lipschitz estimate need Dφ, D²φ and the sup
norms |φ|₀, |Dφ|₀, |D²φ|₀, |D³φ|₀. A :class:`SmoothFunction` bundles them.

One-dimensional functions take and return arrays of any shape. Two-dimensional
functions take points of shape ``(..., 2)``; ``grad`` returns ``(..., 2)`` and
``hess`` returns ``(..., 2, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray


@dataclass(frozen=True)
class SmoothFunction:
    name: str
    f: Callable[[Array], Array]
    grad: Callable[[Array], Array]
    hess: Callable[[Array], Array]
    sup: float
    lip: float
    d2_sup: float
    d3_sup: float
    dim: int = 1
    d3: Callable[[Array], Array] | None = None

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup)

    def scaled(self, factor: float) -> "SmoothFunction":
        """Return x ↦ φ(factor·x) (1-D only)."""
        if self.dim != 1:
            raise NotImplementedError("scaling is implemented for 1-D functions")
        c = float(factor)
        d3 = None if self.d3 is None else (lambda x: c**3 * self.d3(c * x))
        return SmoothFunction(
            name=f"{self.name}({c:g}x)",
            f=lambda x: self.f(c * x),
            grad=lambda x: c * self.grad(c * x),
            hess=lambda x: c**2 * self.hess(c * x),
            sup=self.sup,
            lip=abs(c) * self.lip,
            d2_sup=c**2 * self.d2_sup,
            d3_sup=abs(c) ** 3 * self.d3_sup,
            d3=d3,
        )

    def shifted(self, offset: float) -> "SmoothFunction":
        """Return x ↦ φ(x) − offset."""
        return SmoothFunction(
            name=f"{self.name}-{offset:g}",
            f=lambda x: self.f(x) - offset,
            grad=self.grad,
            hess=self.hess,
            sup=self.sup + abs(offset),
            lip=self.lip,
            d2_sup=self.d2_sup,
            d3_sup=self.d3_sup,
            dim=self.dim,
            d3=self.d3,
        )


def cosine(freq: float = 1.0) -> SmoothFunction:
    w = float(freq)
    return SmoothFunction(
        name="cos" if w == 1.0 else f"cos({w:g}x)",
        f=lambda x: np.cos(w * x),
        grad=lambda x: -w * np.sin(w * x),
        hess=lambda x: -(w**2) * np.cos(w * x),
        d3=lambda x: w**3 * np.sin(w * x),
        sup=1.0,
        lip=abs(w),
        d2_sup=w**2,
        d3_sup=abs(w) ** 3,
    )


def sine(freq: float = 1.0) -> SmoothFunction:
    w = float(freq)
    return SmoothFunction(
        name="sin" if w == 1.0 else f"sin({w:g}x)",
        f=lambda x: np.sin(w * x),
        grad=lambda x: w * np.cos(w * x),
        hess=lambda x: -(w**2) * np.sin(w * x),
        d3=lambda x: -(w**3) * np.cos(w * x),
        sup=1.0,
        lip=abs(w),
        d2_sup=w**2,
        d3_sup=abs(w) ** 3,
    )


def affine(slope: float, intercept: float = 0.0) -> SmoothFunction:
    a, b = float(slope), float(intercept)
    return SmoothFunction(
        name=f"{a:g}x+{b:g}",
        f=lambda x: a * x + b,
        grad=lambda x: np.full_like(x, a, dtype=float),
        hess=lambda x: np.zeros_like(x, dtype=float),
        d3=lambda x: np.zeros_like(x, dtype=float),
        sup=math.inf if a != 0.0 else abs(b),
        lip=abs(a),
        d2_sup=0.0,
        d3_sup=0.0,
    )


def constant(c: float) -> SmoothFunction:
    return affine(0.0, c)


def _bump_parts(x: Array, width: float):
    y = np.asarray(x, dtype=float) / width
    inside = np.abs(y) < 1.0
    ys = np.where(inside, y, 0.0)
    q = 1.0 - ys**2
    h1 = -2.0 * ys / q**2
    h2 = -(2.0 + 6.0 * ys**2) / q**3
    h3 = -24.0 * ys * (1.0 + ys**2) / q**4
    g = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
    return g, h1, h2, h3, inside


def _bump_derivs(x: Array, width: float):
    g, h1, h2, h3, inside = _bump_parts(x, width)
    d1 = np.where(inside, g * h1, 0.0) / width
    d2 = np.where(inside, g * (h2 + h1**2), 0.0) / width**2
    d3 = np.where(inside, g * (h3 + 3.0 * h1 * h2 + h1**3), 0.0) / width**3
    return g, d1, d2, d3


def _dense_sup(fn: Callable[[Array], Array], lo: float, hi: float) -> float:
    xs = np.linspace(lo, hi, 200_001)
    # 1% margin over the dense-sample maximum
    return 1.01 * float(np.max(np.abs(fn(xs))))


def bump(width: float = 2.0) -> SmoothFunction:
    """Compactly supported x ↦ exp(1 − 1/(1 − (x/width)²)), equal to 1 at 0."""
    w = float(width)
    return SmoothFunction(
        name=f"bump{w:g}",
        f=lambda x: _bump_derivs(x, w)[0],
        grad=lambda x: _bump_derivs(x, w)[1],
        hess=lambda x: _bump_derivs(x, w)[2],
        d3=lambda x: _bump_derivs(x, w)[3],
        sup=1.0,
        lip=_dense_sup(lambda x: _bump_derivs(x, w)[1], -w, w),
        d2_sup=_dense_sup(lambda x: _bump_derivs(x, w)[2], -w, w),
        d3_sup=_dense_sup(lambda x: _bump_derivs(x, w)[3], -w, w),
    )


def sin_bump(width: float = 2.0) -> SmoothFunction:
    """x ↦ sin(x)·bump(x), odd and compactly supported."""
    w = float(width)

    def parts(x):
        x = np.asarray(x, dtype=float)
        g, g1, g2, g3 = _bump_derivs(x, w)
        s, c = np.sin(x), np.cos(x)
        f0 = s * g
        f1 = c * g + s * g1
        f2 = -s * g + 2 * c * g1 + s * g2
        f3 = -c * g - 3 * s * g1 + 3 * c * g2 + s * g3
        return f0, f1, f2, f3

    return SmoothFunction(
        name=f"sin*bump{w:g}",
        f=lambda x: parts(x)[0],
        grad=lambda x: parts(x)[1],
        hess=lambda x: parts(x)[2],
        d3=lambda x: parts(x)[3],
        sup=_dense_sup(lambda x: parts(x)[0], -w, w),
        lip=_dense_sup(lambda x: parts(x)[1], -w, w),
        d2_sup=_dense_sup(lambda x: parts(x)[2], -w, w),
        d3_sup=_dense_sup(lambda x: parts(x)[3], -w, w),
    )


def product_2d(f1: SmoothFunction, f2: SmoothFunction) -> SmoothFunction:
    """(z₁, z₂) ↦ f₁(z₁)·f₂(z₂) for bounded one-dimensional factors."""

    def val(x):
        x = np.asarray(x, dtype=float)
        return f1.f(x[..., 0]) * f2.f(x[..., 1])

    def grad(x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        return np.stack([f1.grad(a) * f2.f(b), f1.f(a) * f2.grad(b)], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        h11 = f1.hess(a) * f2.f(b)
        h12 = f1.grad(a) * f2.grad(b)
        h22 = f1.f(a) * f2.hess(b)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    s1, s2 = f1.sup, f2.sup
    l1, l2 = f1.lip, f2.lip
    d2 = f1.d2_sup * s2 + 2 * l1 * l2 + s1 * f2.d2_sup
    d3 = (f1.d3_sup * s2 + 3 * f1.d2_sup * l2 + 3 * l1 * f2.d2_sup
          + s1 * f2.d3_sup)
    return SmoothFunction(
        name=f"{f1.name}⊗{f2.name}",
        f=val,
        grad=grad,
        hess=hess,
        sup=s1 * s2,
        lip=math.hypot(l1 * s2, s1 * l2),
        d2_sup=d2,
        d3_sup=d3,
        dim=2,
    )


PANEL = ("cos", "sin_bump", "bump")


def panel() -> list[SmoothFunction]:
    """Fixed C³_b panel used by the consistency certificates."""
    return [cosine(), sin_bump(), bump()]


def gaussian(width: float = 1.0, height: float = 1.0) -> SmoothFunction:
    """x ↦ height·exp(−x²/(2·width²))."""
    s, c = float(width), float(height)

    def d(x, k):
        y = np.asarray(x, dtype=float) / s
        g = c * np.exp(-0.5 * y**2)
        # probabilists' Hermite polynomials give the derivatives
        he = (1.0, -y, y**2 - 1.0, -(y**3) + 3.0 * y)[k]
        return g * he / s**k

    return SmoothFunction(
        name=f"gauss{s:g}",
        f=lambda x: d(x, 0),
        grad=lambda x: d(x, 1),
        hess=lambda x: d(x, 2),
        d3=lambda x: d(x, 3),
        sup=abs(c),
        lip=abs(c) * math.exp(-0.5) / s,
        d2_sup=abs(c) / s**2,
        d3_sup=abs(c) * 1.3802 / s**3,
    )


def tanh(scale: float = 1.0) -> SmoothFunction:
    """x ↦ tanh(x/scale)."""
    s = float(scale)

    def parts(x):
        t = np.tanh(np.asarray(x, dtype=float) / s)
        sech2 = 1.0 - t**2
        return t, sech2 / s, -2 * t * sech2 / s**2, (-2 * sech2**2 + 4 * t**2 * sech2) / s**3

    return SmoothFunction(
        name=f"tanh{s:g}",
        f=lambda x: parts(x)[0],
        grad=lambda x: parts(x)[1],
        hess=lambda x: parts(x)[2],
        d3=lambda x: parts(x)[3],
        sup=1.0,
        lip=1.0 / s,
        d2_sup=4.0 / (3.0 * math.sqrt(3.0)) / s**2,
        d3_sup=2.0 / s**3,
    )


def clipped_quadratic(cap: float = 10.0) -> SmoothFunction:
    """x ↦ min(x², cap); Lipschitz but not C³ (derivative bounds are infinite)."""
    c = float(cap)
    return SmoothFunction(
        name=f"min(x^2,{c:g})",
        f=lambda x: np.minimum(np.asarray(x, dtype=float) ** 2, c),
        grad=lambda x: np.where(np.asarray(x) ** 2 < c, 2.0 * np.asarray(x, dtype=float), 0.0),
        hess=lambda x: np.where(np.asarray(x) ** 2 < c, 2.0, 0.0),
        sup=c,
        lip=2.0 * math.sqrt(c),
        d2_sup=math.inf,
        d3_sup=math.inf,
    )


def piecewise_linear(knots, values) -> SmoothFunction:
    """Linear interpolation through (knots, values), constant outside."""
    k = np.asarray(knots, dtype=float)
    v = np.asarray(values, dtype=float)
    if k.ndim != 1 or k.shape != v.shape or k.size < 2 or np.any(np.diff(k) <= 0):
        raise ValueError("need increasing knots and one value per knot")
    slopes = np.diff(v) / np.diff(k)

    def grad(x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(k, x, side="right") - 1, 0, len(slopes) - 1)
        inside = (x >= k[0]) & (x < k[-1])
        return np.where(inside, slopes[i], 0.0)

    return SmoothFunction(
        name="pwl",
        f=lambda x: np.interp(np.asarray(x, dtype=float), k, v),
        grad=grad,
        hess=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        sup=float(np.max(np.abs(v))),
        lip=float(np.max(np.abs(slopes))),
        d2_sup=math.inf,
        d3_sup=math.inf,
    )


_FACTORIES = {
    "cos": lambda p: cosine(p.get("freq", 1.0)),
    "sin": lambda p: sine(p.get("freq", 1.0)),
    "gaussian-bump": lambda p: gaussian(p.get("width", 1.0), p.get("height", 1.0)),
    "bump": lambda p: bump(p.get("width", 2.0)),
    "sin-bump": lambda p: sin_bump(p.get("width", 2.0)),
    "clipped-quadratic": lambda p: clipped_quadratic(p.get("cap", 10.0)),
    "piecewise-linear": lambda p: piecewise_linear(p["knots"], p["values"]),
    "tanh": lambda p: tanh(p.get("scale", 1.0)),
    "affine": lambda p: affine(p.get("slope", 1.0), p.get("intercept", 0.0)),
    "constant": lambda p: constant(p.get("value", 0.0)),
}

SYMBOLIC_FORMS = tuple(_FACTORIES)


def from_spec(spec):
    """Build an initial condition from its JSON form.

    ``{"form": "cos", "freq": 2}`` gives a one-coordinate function, with an
    optional ``"offset"`` subtracted. ``{"product": [s1, s2, ...]}`` and
    ``{"sum": [...]}`` combine one-coordinate factors into a function of the
    points' columns (used for the (x, y, z) problems).
    """
    if isinstance(spec, str):
        spec = {"form": spec}
    if "product" in spec or "sum" in spec:
        parts = [from_spec(s) for s in spec.get("product", spec.get("sum"))]
        prod = "product" in spec

        def f(pts):
            pts = np.asarray(pts, dtype=float)
            out = np.ones(pts.shape[:-1]) if prod else np.zeros(pts.shape[:-1])
            for j, p in enumerate(parts):
                out = out * p(pts[..., j]) if prod else out + p(pts[..., j])
            return out

        f.arity = len(parts)
        f.parts = parts
        return f
    form = spec.get("form")
    if form not in _FACTORIES:
        raise ValueError(f"unknown function form {form!r}; expected one of {SYMBOLIC_FORMS}")
    fn = _FACTORIES[form](spec)
    off = spec.get("offset", 0.0)
    return fn.shifted(off) if off else fn
