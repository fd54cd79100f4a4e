"""α-stable Lévy measures with atomic spectral measure, and their generator.

A measure is F(dλ) = Σᵢ wᵢ · r^{-1-α} dr along unit directions eᵢ (λ = r·eᵢ).
In 1-D the directions are ±1 with weights (k₋, k₊); in 2-D they are the four
axis unit vectors.

The generator ∫ δ_λφ(z) F(dλ), δ_λφ(z) = φ(z+λ) − φ(z) − ⟨Dφ(z), λ⟩, is split
into three radial bands:

* inner ``r ≤ ε``: second-order compensation ½⟨D²φ(z)e, e⟩ r², integrated in
  closed form;
* middle ``ε < r ≤ R``: composite Gauss–Legendre on log-spaced panels, with
  panels subdivided to a maximal width so oscillatory φ stay resolved;
* outer ``r > R``: for bounded φ the gradient part is integrated in closed
  form and the value part is dropped; for unbounded φ the whole δ_λφ is
  dropped (exact for affine φ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline

from .errors import DomainError, ToleranceUnreachable
from .sublinear import GridFunction
from .testfuncs import SmoothFunction


@dataclass(frozen=True)
class StableLevyMeasure:
    alpha: float
    directions: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (1, 2), got {self.alpha}")
        if len(self.directions) != len(self.weights):
            raise DomainError("one weight per direction is required")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise DomainError("weights must be finite and nonnegative")
        dims = {len(d) for d in self.directions}
        if len(dims) != 1 or dims.pop() not in (1, 2):
            raise DomainError("directions must all have dimension 1 or 2")
        for d in self.directions:
            if abs(math.hypot(*d) - 1.0) > 1e-12:
                raise DomainError(f"direction {d} is not a unit vector")

    @classmethod
    def one_dim(cls, alpha: float, k_minus: float, k_plus: float) -> "StableLevyMeasure":
        return cls(alpha, ((-1.0,), (1.0,)), (float(k_minus), float(k_plus)))

    @classmethod
    def axis_2d(cls, alpha: float, k1_minus: float, k1_plus: float,
                k2_minus: float, k2_plus: float) -> "StableLevyMeasure":
        dirs = ((-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0))
        w = (k1_minus, k1_plus, k2_minus, k2_plus)
        return cls(alpha, dirs, tuple(float(x) for x in w))

    @property
    def dim(self) -> int:
        return len(self.directions[0])

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights))

    def with_weights(self, weights: Sequence[float]) -> "StableLevyMeasure":
        return replace(self, weights=tuple(float(w) for w in weights))


@dataclass(frozen=True)
class MeasureClass:
    """Box of admissible measures: every atom weight ranges over [lo, hi]."""

    alpha: float
    directions: tuple[tuple[float, ...], ...]
    weight_intervals: tuple[tuple[float, float], ...]
    lambda_lower: float
    lambda_upper: float

    def __post_init__(self):
        if not self.lambda_lower < self.lambda_upper:
            raise DomainError("lambda_lower must be < lambda_upper")
        if self.lambda_lower <= 0:
            raise DomainError("lambda_lower must be positive")
        for lo, hi in self.weight_intervals:
            if not 0.0 <= lo <= hi:
                raise DomainError(f"bad weight interval [{lo}, {hi}]")
        lo_mass = sum(lo for lo, _ in self.weight_intervals)
        hi_mass = sum(hi for _, hi in self.weight_intervals)
        if not (self.lambda_lower < lo_mass and hi_mass < self.lambda_upper):
            raise DomainError(
                f"box total mass range [{lo_mass}, {hi_mass}] is not inside "
                f"({self.lambda_lower}, {self.lambda_upper})")

    @classmethod
    def one_dim(cls, alpha, k_minus: tuple[float, float], k_plus: tuple[float, float],
                lambda_lower: float | None = None,
                lambda_upper: float | None = None) -> "MeasureClass":
        ivs = (tuple(map(float, k_minus)), tuple(map(float, k_plus)))
        lo = sum(i[0] for i in ivs)
        hi = sum(i[1] for i in ivs)
        return cls(alpha, ((-1.0,), (1.0,)), ivs,
                   lambda_lower if lambda_lower is not None else 0.5 * lo,
                   lambda_upper if lambda_upper is not None else 2.0 * hi)

    def vertices(self) -> list[StableLevyMeasure]:
        out = []
        k = len(self.weight_intervals)
        for mask in range(2**k):
            w = [self.weight_intervals[i][(mask >> i) & 1] for i in range(k)]
            out.append(StableLevyMeasure(self.alpha, self.directions, tuple(w)))
        return out

    def upper(self) -> StableLevyMeasure:
        return StableLevyMeasure(self.alpha, self.directions,
                                 tuple(hi for _, hi in self.weight_intervals))

    def contains(self, measure: StableLevyMeasure) -> bool:
        if measure.alpha != self.alpha or measure.directions != self.directions:
            return False
        ok = all(lo <= w <= hi for w, (lo, hi) in zip(measure.weights, self.weight_intervals))
        return ok and self.lambda_lower < measure.total_mass < self.lambda_upper


@dataclass(frozen=True)
class QuadratureConfig:
    """Truncation radii and quadrature resolution for the generator.

    ``outer_cut=None`` selects R automatically as the smallest power of two
    meeting ``tail_tolerance``; ``tail_tolerance=None`` means 1e-6·|φ|₀.
    """

    inner_cut: float = 1e-4
    outer_cut: float | None = None
    nodes_per_decade: int = 64
    tail_tolerance: float | None = None
    gl_order: int = 8
    max_panel_width: float = 1.0
    outer_cut_max: float = 2.0**20

    def __post_init__(self):
        if not 0 < self.inner_cut < 1:
            raise DomainError("inner_cut must lie in (0, 1)")
        if self.outer_cut is not None and not self.outer_cut > 1:
            raise DomainError("outer_cut must exceed 1")
        if self.nodes_per_decade < 1 or self.gl_order < 1:
            raise DomainError("node counts must be positive")


@dataclass(frozen=True)
class GeneratorValue:
    """Value of ∫δ_λφ(z)F(dλ) with the error bounds of the split."""

    value: np.ndarray | float
    tail_bound: float
    inner_bound: float
    outer_cut: float
    per_atom: np.ndarray = field(repr=False)

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# closed-form radial moments


def _check_ab(a: float, b: float):
    if not a > 0:
        raise DomainError(f"lower radius must be positive, got {a}")
    if not b > a:
        raise DomainError(f"upper radius must exceed lower, got a={a}, b={b}")


def _atom_weights(measure: StableLevyMeasure, atom: int | None) -> float:
    return measure.total_mass if atom is None else measure.weights[atom]


def interval_mass(measure: StableLevyMeasure, a: float, b: float,
                  atom: int | None = None) -> float:
    """Mass of the radial band a < r ≤ b (one atom, or all atoms if None)."""
    _check_ab(a, b)
    al = measure.alpha
    return _atom_weights(measure, atom) * (a**-al - (0.0 if math.isinf(b) else b**-al)) / al


def small_second_moment(measure: StableLevyMeasure, eps: float) -> float:
    """∫_{|z|≤eps} |z|² F(dz)."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    al = measure.alpha
    return measure.total_mass * eps ** (2 - al) / (2 - al)


def tail_first_moment(measure: StableLevyMeasure, r: float) -> float:
    """∫_{|z|>r} |z| F(dz)."""
    if not r > 0:
        raise DomainError("r must be positive")
    al = measure.alpha
    return measure.total_mass * r ** (1 - al) / (al - 1)


def kappa(obj: StableLevyMeasure | MeasureClass) -> float:
    """∫ |z|∧|z|² F(dz); for a class, its supremum (at the upper weights)."""
    m = obj.upper() if isinstance(obj, MeasureClass) else obj
    return small_second_moment(m, 1.0) + tail_first_moment(m, 1.0)


def scaling_pushforward_check(measure: StableLevyMeasure, beta: float,
                              a: float, b: float) -> tuple[float, float]:
    """(F(a,b], β·F(β^{1/α}a, β^{1/α}b]), equal for an α-stable measure."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    if a == b:
        return 0.0, 0.0
    c = beta ** (1.0 / measure.alpha)
    return interval_mass(measure, a, b), beta * interval_mass(measure, c * a, c * b)


# ---------------------------------------------------------------------------
# middle-band quadrature


@lru_cache(maxsize=256)
def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@lru_cache(maxsize=128)
def _band_rule(alpha: float, a: float, b: float, nodes_per_decade: int,
               gl_order: int, max_width: float):
    per_decade = max(1, nodes_per_decade // gl_order)
    n_log = max(1, math.ceil(per_decade * math.log10(b / a)))
    edges = np.geomspace(a, b, n_log + 1)
    widths = np.diff(edges)
    splits = np.maximum(1, np.ceil(widths / max_width).astype(int))
    pieces = [np.linspace(lo, hi, k + 1)[:-1] for lo, hi, k in zip(edges[:-1], edges[1:], splits)]
    lefts = np.concatenate(pieces)
    rights = np.append(lefts[1:], b)
    x, w = _gl(gl_order)
    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel() * r ** (-1.0 - alpha)
    r.setflags(write=False)
    wt.setflags(write=False)
    return r, wt


def band_rule(alpha: float, a: float, b: float, cfg: QuadratureConfig | None = None):
    """Nodes r and weights ω with Σ ω g(r) ≈ ∫_a^b g(r) r^{-1-α} dr."""
    _check_ab(a, b)
    cfg = cfg or QuadratureConfig()
    return _band_rule(float(alpha), float(a), float(b), cfg.nodes_per_decade,
                      cfg.gl_order, cfg.max_panel_width)


# ---------------------------------------------------------------------------
# generator


def _as_points(z, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if dim == 1:
        return z.reshape(-1)
    return z.reshape(-1, dim)


def _directional(phi: SmoothFunction, pts: np.ndarray, e: np.ndarray):
    """(Dφ·e, eᵀD²φ e) at the points."""
    if phi.dim == 1:
        return e[0] * phi.grad(pts), e[0] ** 2 * phi.hess(pts)
    g = phi.grad(pts) @ e
    h = np.einsum("...ij,i,j->...", phi.hess(pts), e, e)
    return g, h


def _line_values(phi: SmoothFunction, pts: np.ndarray, e: np.ndarray, r: np.ndarray):
    if phi.dim == 1:
        return phi.f(pts[:, None] + e[0] * r[None, :])
    shifted = pts[:, None, :] + r[None, :, None] * e[None, None, :]
    return phi.f(shifted)


def _outer_bound_unit(phi: SmoothFunction, alpha: float, R: float, grad_sup: float) -> float:
    """Per-unit-weight bound on the dropped outer contribution."""
    mass = R**-alpha / alpha
    first = R ** (1 - alpha) / (alpha - 1)
    if phi.bounded:
        return min(2.0 * phi.sup * mass, phi.lip * first)
    return (phi.lip + grad_sup) * first


def _select_outer_cut(phi, alpha, total_mass, grad_sup, cfg: QuadratureConfig):
    tol = cfg.tail_tolerance
    if tol is None:
        tol = 1e-6 * phi.sup
    if cfg.outer_cut is not None:
        R = cfg.outer_cut
        return R, total_mass * _outer_bound_unit(phi, alpha, R, grad_sup)
    R = 2.0
    while R <= cfg.outer_cut_max:
        bound = total_mass * _outer_bound_unit(phi, alpha, R, grad_sup)
        if bound <= tol:
            return R, bound
        R *= 2.0
    raise ToleranceUnreachable(
        f"tail bound {bound:.3e} > tolerance {tol:.3e} at R={R / 2:g}")


def atom_generators(alpha: float, directions, phi: SmoothFunction, z,
                    cfg: QuadratureConfig | None = None, total_mass: float = 1.0,
                    outer_cut: float | None = None):
    """Unit-weight per-atom generator values, shape (n_atoms, n_points).

    Returns (values, R, tail_bound_per_unit_mass, inner_bound_per_unit_mass).
    """
    cfg = cfg or QuadratureConfig()
    dirs = np.asarray(directions, dtype=float)
    dim = dirs.shape[1]
    if phi.dim != dim:
        raise DomainError(f"function dimension {phi.dim} != measure dimension {dim}")
    pts = _as_points(z, dim)
    eps = cfg.inner_cut
    grads = [_directional(phi, pts, e) for e in dirs]
    grad_sup = max(float(np.max(np.abs(g))) for g, _ in grads) if len(pts) else 0.0
    if outer_cut is None:
        R, tail = _select_outer_cut(phi, alpha, total_mass, grad_sup, cfg)
        tail_unit = tail / total_mass if total_mass > 0 else 0.0
    else:
        R = outer_cut
        tail_unit = _outer_bound_unit(phi, alpha, R, grad_sup)
    r, wt = band_rule(alpha, eps, R, cfg)
    inner_c = eps ** (2 - alpha) / (2 - alpha)
    grad_c = R ** (1 - alpha) / (alpha - 1)
    out = np.empty((len(dirs), len(pts)))
    f0 = phi.f(pts)
    chunk = max(1, int(4_000_000 // max(1, r.size)))
    for k, e in enumerate(dirs):
        g, h = grads[k]
        vals = np.empty(len(pts))
        for s in range(0, len(pts), chunk):
            sl = slice(s, s + chunk)
            fz = _line_values(phi, pts[sl], e, r)
            delta = fz - f0[sl, None] - g[sl, None] * r[None, :]
            vals[sl] = delta @ wt
        vals += 0.5 * h * inner_c
        if phi.bounded:
            vals -= g * grad_c
        out[k] = vals
    inner_unit = phi.d3_sup * eps ** (3 - alpha) / (3 - alpha)
    return out, R, tail_unit, inner_unit


def _axis_map(ax, x, boundary):
    """(coordinate fed to the spline, signed overshoot, inside mask) along one axis."""
    if ax.periodic or boundary == "periodic":
        period = ax.n * ax.step
        return ax.lo + np.mod(x - ax.lo, period), np.zeros_like(x), np.ones(x.shape, bool)
    xc = np.clip(x, ax.lo, ax.hi)
    return xc, x - xc, (x >= ax.lo) & (x <= ax.hi)


def grid_as_smooth(u: GridFunction) -> SmoothFunction:
    """Wrap a 1-D or 2-D grid function as a cubic interpolating spline.

    Linear interpolation has a kink at every node, which the singular
    weight near the origin turns into an O(h·ε^{1−α}) error; the C² spline
    keeps the small-jump Taylor remainder of order r³. Periodic axes are
    padded by wrapping four nodes on each side. Outside a non-periodic axis
    the value is held (constant) or continued with the edge slope (linear).
    """
    if u.arity not in (1, 2):
        raise DomainError("grid functions of dimension 1 or 2 only")
    if any(a.n < 4 for a in u.axes):
        raise DomainError("spline derivatives need at least four nodes per axis")
    vals = np.asarray(u.values, dtype=float)
    knots = []
    for c, ax in enumerate(u.axes):
        x = ax.nodes
        if ax.periodic or u.boundary == "periodic":
            p = 4
            idx = np.arange(-p, ax.n + p)
            vals = np.take(vals, idx % ax.n, axis=c)
            x = ax.lo + ax.step * idx
        knots.append(x)
    if u.arity == 1:
        spl = make_interp_spline(knots[0], vals, k=3)
        ev = lambda x, o: spl(x[:, 0], nu=o[0])
    else:
        spl = RectBivariateSpline(knots[0], knots[1], vals, kx=3, ky=3, s=0)
        ev = lambda x, o: spl.ev(x[:, 0], x[:, 1], dx=o[0], dy=o[1])
    d = u.arity
    unit = [tuple(int(i == c) for i in range(d)) for c in range(d)]
    linear = u.boundary == "linear"

    def mapped(x):
        x = np.asarray(x, dtype=float).reshape(-1, d)
        parts = [_axis_map(ax, x[:, c], u.boundary) for c, ax in enumerate(u.axes)]
        xc = np.stack([q[0] for q in parts], axis=1)
        return xc, np.stack([q[1] for q in parts], axis=1), np.stack([q[2] for q in parts], axis=1)

    def f(x):
        shape = np.shape(x)[:-1] if d == 2 else np.shape(x)
        xc, over, _ = mapped(x)
        v = ev(xc, (0,) * d)
        if linear:
            v = v + sum(ev(xc, unit[c]) * over[:, c] for c in range(d))
        return v.reshape(shape)

    def grad(x):
        shape = np.shape(x)
        xc, _, inside = mapped(x)
        g = np.stack([ev(xc, unit[c]) * (1.0 if linear else inside[:, c]) for c in range(d)],
                     axis=1)
        return g.reshape(shape)

    def hess(x):
        shape = np.shape(x)
        xc, _, inside = mapped(x)
        h = np.empty((len(xc), d, d))
        for i in range(d):
            for j in range(d):
                o = tuple(int(k == i) + int(k == j) for k in range(d))
                h[:, i, j] = ev(xc, o) * (inside[:, i] & inside[:, j])
        return h.reshape(shape + (d,)) if d == 2 else h.reshape(shape)

    # bounds read off the spline at the nodes of the original grid; the
    # third derivative (piecewise constant) by differencing second derivatives
    nodes = [ax.nodes for ax in u.axes]
    shape = tuple(len(x) for x in nodes)
    probe = np.stack([m.ravel() for m in np.meshgrid(*nodes, indexing="ij")], axis=1)
    second = [o for o in np.ndindex(*(3,) * d) if sum(o) == 2]
    d2s = max(float(np.max(np.abs(ev(probe, o)))) for o in second)
    d3s = max(float(np.max(np.abs(np.gradient(ev(probe, o).reshape(shape), u.axes[c].step,
                                              axis=c))))
              for o in second for c in range(d))
    g1 = np.stack([ev(probe, unit[c]) for c in range(d)], axis=1)
    sup = max(u.sup_norm, float(np.max(np.abs(ev(probe, (0,) * d)))))
    return SmoothFunction("grid", f, grad, hess, sup, float(np.max(np.linalg.norm(g1, axis=1))),
                          d2s * d, d3s * d ** 1.5, dim=d)


def apply_generator(measure: StableLevyMeasure, phi: SmoothFunction | GridFunction, z,
                    cfg: QuadratureConfig | None = None) -> GeneratorValue:
    """∫ δ_λφ(z) F(dλ) at one point or an array of points."""
    if isinstance(phi, GridFunction):
        phi = grid_as_smooth(phi)
    scalar = np.ndim(z) == 0 or (measure.dim == 2 and np.ndim(z) == 1)
    per_atom, R, tail_u, inner_u = atom_generators(
        measure.alpha, measure.directions, phi, z, cfg, measure.total_mass)
    w = np.asarray(measure.weights)
    value = w @ per_atom
    mu = measure.total_mass
    return GeneratorValue(
        value=float(value[0]) if scalar else value,
        tail_bound=mu * tail_u,
        inner_bound=mu * inner_u,
        outer_cut=R,
        per_atom=per_atom,
    )


def generator_lipschitz_probe(cls: MeasureClass, phi: SmoothFunction, z, z2,
                              cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """(observed, bound) for sup_F ∫|δ_λφ(z2) − δ_λφ(z)| F(dλ) ≤ C|z2 − z|.

    The bound is the constant (|D³φ|₀ + 2|D²φ|₀)·𝒦 times |z2 − z|.
    """
    cfg = cfg or QuadratureConfig(tail_tolerance=1e-6)
    dirs = np.asarray(cls.directions, dtype=float)
    dim = dirs.shape[1]
    p1 = _as_points(z, dim)[:1]
    p2 = _as_points(z2, dim)[:1]
    dist = float(np.linalg.norm(p2 - p1))
    bound = (phi.d3_sup + 2.0 * phi.d2_sup) * kappa(cls) * dist
    if dist == 0.0:
        return 0.0, 0.0
    al = cls.alpha
    eps = cfg.inner_cut
    # R sized so the dropped |value difference| mass is below tolerance
    tol = cfg.tail_tolerance if cfg.tail_tolerance is not None else 1e-6
    R = 2.0
    while 2 * phi.lip * dist * R**-al / al * cls.upper().total_mass > tol and R < cfg.outer_cut_max:
        R *= 2
    r, wt = band_rule(al, eps, R, cfg)
    per_atom = []
    for e in dirs:
        g1, h1 = _directional(phi, p1, e)
        g2, h2 = _directional(phi, p2, e)
        d1 = _line_values(phi, p1, e, r)[0] - phi.f(p1)[0] - g1[0] * r
        d2 = _line_values(phi, p2, e, r)[0] - phi.f(p2)[0] - g2[0] * r
        val = np.abs(d2 - d1) @ wt
        val += 0.5 * abs(h2[0] - h1[0]) * eps ** (2 - al) / (2 - al)
        val += abs(g2[0] - g1[0]) * R ** (1 - al) / (al - 1)
        per_atom.append(val)
    per_atom = np.asarray(per_atom)
    observed = max(float(np.dot(m.weights, per_atom)) for m in cls.vertices())
    return observed, bound
