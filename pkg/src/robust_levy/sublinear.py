"""Discrete sublinear expectations and their i.i.d. composition on grids.

A :class:`DistributionFamily` is a finite set of discrete laws; its sublinear
expectation is Ê[φ] = maxₘ Σⱼ wₘⱼ φ(xₘⱼ). Normalized i.i.d. sums are computed
backwards by dynamic programming on a :class:`GridFunction`:

    u₀ = φ,   u_{k+1}(x) = Ê[u_k(x + scale·ξ)],

so u_n(0) = Ê[φ(scale·(ξ₁ + … + ξ_n))]. Shifted values are read by
multilinear interpolation, which keeps every step a max of convex
combinations (monotone, sup-norm contracting).
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, DomainError

BOUNDARIES = ("constant", "periodic", "linear")


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    nodes: np.ndarray
    weights: np.ndarray
    factors: tuple["DiscreteDistribution", ...] | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if nodes.shape[0] != w.size or w.size == 0:
            raise DomainError("need one weight per node and at least one node")
        if np.any(w < 0) or not np.all(np.isfinite(nodes)):
            raise DomainError("weights must be nonnegative and nodes finite")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {math.fsum(w)!r}, not 1")
        nodes.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def arity(self) -> int:
        return self.nodes.shape[1]

    @classmethod
    def point_mass(cls, point=0.0) -> "DiscreteDistribution":
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), np.ones(1))

    @classmethod
    def rademacher(cls, scale: float = 1.0) -> "DiscreteDistribution":
        return cls(np.array([[-scale], [scale]]), np.array([0.5, 0.5]))

    @classmethod
    def product(cls, *parts: "DiscreteDistribution") -> "DiscreteDistribution":
        """Independent coordinates; the factors are kept for fast composition."""
        nodes, weights = [], []
        for combo in itertools.product(*[range(len(p.weights)) for p in parts]):
            nodes.append(np.concatenate([p.nodes[i] for p, i in zip(parts, combo)]))
            weights.append(math.prod(p.weights[i] for p, i in zip(parts, combo)))
        w = np.asarray(weights)
        flat = []
        for p in parts:
            flat.extend(p.factors if p.factors is not None else (p,))
        return cls(np.asarray(nodes), w / math.fsum(w),
                   tuple(flat) if all(f.arity == 1 for f in flat) else None)

    def mean(self) -> np.ndarray:
        return self.weights @ self.nodes


@dataclass(frozen=True)
class DistributionFamily:
    members: tuple[DiscreteDistribution, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DomainError("a family needs at least one member")
        if len({m.arity for m in members}) != 1:
            raise DomainError("all members must have the same coordinate arity")
        object.__setattr__(self, "members", members)

    @property
    def arity(self) -> int:
        return self.members[0].arity

    def permuted(self, order: Sequence[int]) -> "DistributionFamily":
        return DistributionFamily(tuple(self.members[i] for i in order))


def _eval(phi, nodes: np.ndarray) -> np.ndarray:
    return np.asarray(phi(nodes), dtype=float).reshape(-1)


def expect(family: DistributionFamily, phi) -> float:
    """Ê[φ] = max over members of the weighted node sum."""
    best = -math.inf
    for m in family.members:
        if getattr(phi, "arity", m.arity) != m.arity:
            raise DomainError("function arity does not match the family")
        best = max(best, float(m.weights @ _eval(phi, m.nodes)))
    return best


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Axis:
    """Uniform axis. Periodic axes have n nodes lo, lo+h, …, lo+(n−1)h, h=period/n."""

    lo: float
    hi: float
    n: int
    periodic: bool = False

    def __post_init__(self):
        if self.n < 1 or (self.n > 1 and not self.hi > self.lo):
            raise DomainError(f"bad axis {self}")

    @classmethod
    def centered(cls, half_width: float, step: float) -> "Axis":
        k = int(round(half_width / step))
        return cls(-k * step, k * step, 2 * k + 1)

    @classmethod
    def point(cls, value: float = 0.0) -> "Axis":
        return cls(value, value, 1)

    @property
    def step(self) -> float:
        if self.n == 1:
            return 0.0
        if self.periodic:
            return (self.hi - self.lo) / self.n
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.lo])
        return self.lo + self.step * np.arange(self.n)

    def reach(self) -> float:
        """Distance from the origin to the nearer edge."""
        if self.periodic:
            return math.inf
        return min(-self.lo, self.hi)

    def weights_for(self, x: np.ndarray, boundary: str):
        """(left index, right index, right weight) for interpolation at x."""
        x = np.asarray(x, dtype=float)
        if self.n == 1:
            z = np.zeros(x.shape, dtype=int)
            return z, z, np.zeros(x.shape)
        t = (x - self.lo) / self.step
        if boundary == "periodic" or self.periodic:
            i = np.floor(t)
            f = t - i
            i = i.astype(int) % self.n
            return i, (i + 1) % self.n, f
        if boundary == "linear":
            i = np.clip(np.floor(t), 0, self.n - 2).astype(int)
            return i, i + 1, t - i
        t = np.clip(t, 0.0, self.n - 1)
        i = np.minimum(np.floor(t), self.n - 2).astype(int)
        return i, i + 1, t - i


@dataclass(eq=False)
class GridFunction:
    axes: tuple[Axis, ...]
    values: np.ndarray
    boundary: str = "constant"
    _sup: float = field(default=math.nan, repr=False)

    def __post_init__(self):
        self.axes = tuple(self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"unknown boundary policy {self.boundary!r}")
        if self.values.shape != tuple(a.n for a in self.axes):
            raise DomainError("values shape does not match the axes")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("grid values must be finite")
        self._sup = float(np.max(np.abs(self.values)))

    @property
    def arity(self) -> int:
        return len(self.axes)

    @property
    def sup_norm(self) -> float:
        return self._sup

    def mesh(self) -> np.ndarray:
        grids = np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")
        return np.stack(grids, axis=-1)

    @classmethod
    def sample(cls, phi, axes: Sequence[Axis], boundary: str = "constant") -> "GridFunction":
        axes = tuple(axes)
        grids = np.meshgrid(*[a.nodes for a in axes], indexing="ij")
        pts = np.stack(grids, axis=-1).reshape(-1, len(axes))
        vals = _eval(phi, pts).reshape(tuple(a.n for a in axes))
        return cls(axes, vals, boundary)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if self.arity == 1 else pts[None, :]
        if pts.shape[-1] != self.arity:
            raise DomainError("point arity does not match the grid")
        out = np.zeros(pts.shape[0])
        idx = [a.weights_for(pts[:, c], self.boundary) for c, a in enumerate(self.axes)]
        for corner in itertools.product((0, 1), repeat=self.arity):
            w = np.ones(pts.shape[0])
            ii = []
            for c, bit in enumerate(corner):
                lo, hi, f = idx[c]
                ii.append(hi if bit else lo)
                w = w * (f if bit else 1.0 - f)
            out += w * self.values[tuple(ii)]
        return out

    def value_at(self, *point: float) -> float:
        return float(self(np.asarray(point, dtype=float)[None, :])[0])

    def lipschitz(self) -> float:
        """Largest discrete slope along any axis."""
        best = 0.0
        for c, a in enumerate(self.axes):
            if a.n > 1:
                best = max(best, float(np.max(np.abs(np.diff(self.values, axis=c)))) / a.step)
        return best


def shift_average_matrix(axis: Axis, shifts: np.ndarray, weights: np.ndarray,
                         boundary: str = "constant") -> np.ndarray:
    """T with (T v)ᵢ = Σⱼ wⱼ · interp(v)(xᵢ + sⱼ)."""
    n = axis.n
    x = axis.nodes[:, None] + np.asarray(shifts, dtype=float)[None, :]
    lo, hi, f = axis.weights_for(x, boundary)
    w = np.broadcast_to(np.asarray(weights, dtype=float)[None, :], x.shape)
    rows = np.broadcast_to(np.arange(n)[:, None], x.shape)
    T = np.zeros((n, n))
    np.add.at(T, (rows.ravel(), lo.ravel()), (w * (1.0 - f)).ravel())
    np.add.at(T, (rows.ravel(), hi.ravel()), (w * f).ravel())
    return T


def apply_along(values: np.ndarray, T, axis: int) -> np.ndarray:
    if isinstance(T, ShiftConvolution):
        return T.apply(values, axis)
    moved = np.moveaxis(values, axis, -1)
    return np.moveaxis(moved @ T.T, -1, axis)


# above this axis length the averaging step runs as a convolution; kernels
# with at most DIRECT_LIMIT taps are applied by shift-and-add, wider ones by FFT
DENSE_LIMIT = 1024
DIRECT_LIMIT = 64


@dataclass(eq=False)
class ShiftConvolution:
    """Same operator as :func:`shift_average_matrix`, applied by convolution.

    The grid is uniform, so every row of the averaging matrix is the same
    kernel up to the boundary treatment, which is reproduced exactly by
    extending the array (clamped, wrapped or linearly extrapolated) before
    convolving.
    """

    kernel: np.ndarray
    omin: int
    boundary: str
    n: int

    @classmethod
    def build(cls, axis: Axis, shifts, weights, boundary: str) -> "ShiftConvolution":
        t = np.asarray(shifts, dtype=float) / axis.step
        bnd = "periodic" if axis.periodic else boundary
        # under clamping every offset past the far edge lands on the edge value,
        # so heavy-tailed nodes need not widen the kernel
        if bnd == "constant":
            t = np.clip(t, -(axis.n - 1), axis.n - 1)
        elif bnd == "periodic":
            t = np.mod(t, axis.n)
        i = np.floor(t)
        f = t - i
        i = i.astype(int)
        omin, omax = int(i.min()), int(i.max()) + 1
        K = np.zeros(omax - omin + 1)
        w = np.asarray(weights, dtype=float)
        np.add.at(K, i - omin, w * (1.0 - f))
        np.add.at(K, i + 1 - omin, w * f)
        return cls(K, omin, bnd, axis.n)

    @property
    def omax(self) -> int:
        return self.omin + len(self.kernel) - 1

    def _extend(self, u: np.ndarray, P: int, Q: int) -> np.ndarray:
        n = self.n
        j = np.arange(-P, n + Q)
        if self.boundary == "periodic":
            return np.take(u, j % n, axis=-1)
        ext = np.take(u, np.clip(j, 0, n - 1), axis=-1)
        if self.boundary == "linear" and n > 1:
            lo, hi = j < 0, j > n - 1
            d0 = (u[..., 1] - u[..., 0])[..., None]
            d1 = (u[..., -1] - u[..., -2])[..., None]
            ext[..., lo] = u[..., :1] + j[lo] * d0
            ext[..., hi] = u[..., -1:] + (j[hi] - (n - 1)) * d1
        return ext

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.kernel)

    def apply(self, values: np.ndarray, axis: int) -> np.ndarray:
        from scipy.signal import fftconvolve

        u = np.moveaxis(values, axis, -1)
        P, Q = max(0, -self.omin), max(0, self.omax)
        ext = self._extend(u, P, Q)
        supp = self.support
        if len(supp) <= DIRECT_LIMIT:
            # few nonzero taps: shift-and-add in a fixed order
            out = np.zeros(u.shape)
            for j in supp:
                o = P + self.omin + int(j)
                out += self.kernel[j] * ext[..., o:o + self.n]
            return np.moveaxis(out, -1, axis)
        kr = self.kernel[::-1].reshape((1,) * (u.ndim - 1) + (-1,))
        full = fftconvolve(ext, kr, mode="full", axes=-1)
        start = P + self.omax
        return np.moveaxis(full[..., start:start + self.n], -1, axis)


def axis_operator(axis: Axis, shifts, weights, boundary: str = "constant"):
    """Shift-and-add for short kernels, dense matrix for small axes, FFT otherwise."""
    conv = ShiftConvolution.build(axis, shifts, weights, boundary)
    if len(conv.support) <= DIRECT_LIMIT:
        return conv
    if axis.n > DENSE_LIMIT:
        return conv
    return shift_average_matrix(axis, shifts, weights, boundary)


# ---------------------------------------------------------------------------
# i.i.d. composition


def _check_coverage(family, scales, grid: GridFunction, n: int,
                    slack: float, quantile: float):
    for c, ax in enumerate(grid.axes):
        if ax.periodic or grid.boundary == "periodic" or ax.n == 1 and scales[c] == 0:
            continue
        top = max(float(np.quantile(np.abs(m.nodes[:, c]), quantile)) for m in family.members)
        reach = n * abs(scales[c]) * top
        allowed = ax.reach() * (1.0 + slack) if ax.n > 1 else 0.0
        if reach > allowed + 1e-12:
            raise CoverageError(
                f"axis {c}: {n} steps reach {reach:.4g} but the grid covers {allowed:.4g}")


class _StepOperator:
    """One DP step Ê[u(· + scale·ξ)] for fixed per-coordinate scales."""

    def __init__(self, family: DistributionFamily, scales, axes, boundary, workers=1):
        self.axes = axes
        self.boundary = boundary
        self.workers = max(1, int(workers))
        self.scales = tuple(float(s) for s in scales)
        self._cache: dict = {}
        self.plans = []
        for m in family.members:
            factors = m.factors if m.factors is not None else ((m,) if len(axes) == 1 else None)
            if factors is not None and len(factors) == len(axes):
                mats = tuple(self._matrix(c, f) for c, f in enumerate(factors))
                self.plans.append(("product", mats))
            else:
                self.plans.append(("general", m))

    def _matrix(self, c: int, factor: DiscreteDistribution):
        key = (c, id(factor))
        if key not in self._cache:
            ax = self.axes[c]
            shifts = self.scales[c] * factor.nodes[:, 0]
            if ax.n == 1:
                T = np.array([[math.fsum(factor.weights)]])
            else:
                T = axis_operator(ax, shifts, factor.weights, self.boundary)
            self._cache[key] = (id(factor), T)
        return self._cache[key]

    def _general(self, u: np.ndarray, m: DiscreteDistribution) -> np.ndarray:
        acc = np.zeros_like(u)
        for node, w in zip(m.nodes, m.weights):
            v = u
            for c, ax in enumerate(self.axes):
                if ax.n > 1 and node[c] != 0.0:
                    T = axis_operator(ax, [self.scales[c] * node[c]], [1.0], self.boundary)
                    v = apply_along(v, T, c)
            acc += w * v
        return acc

    def __call__(self, u: np.ndarray) -> np.ndarray:
        memo: dict = {}
        d = len(self.axes)

        def product_value(mats):
            # share partial applications between members, innermost axis first;
            # the full application is not memoized since it is consumed at once
            v, key = u, ()
            for c in reversed(range(d)):
                fid, T = mats[c]
                key = key + ((c, fid),)
                ident = isinstance(T, np.ndarray) and T.shape == (1, 1) and T[0, 0] == 1.0
                if c == 0:
                    return v if ident else apply_along(v, T, c)
                if key not in memo:
                    memo[key] = v if ident else apply_along(v, T, c)
                v = memo[key]
            return v

        def run(plan):
            kind, obj = plan
            return product_value(obj) if kind == "product" else self._general(u, obj)

        if self.workers > 1 and all(p[0] == "general" for p in self.plans):
            with ThreadPoolExecutor(self.workers) as ex:
                results = iter(list(ex.map(run, self.plans)))
        else:
            results = (run(p) for p in self.plans)
        out = None
        for r in results:
            # fixed member order keeps the reduction deterministic
            out = r.copy() if out is None else np.maximum(out, r, out=out)
        return out


def iid_compose(family: DistributionFamily, phi, n: int, scales, grid,
                boundary: str | None = None, coverage_slack: float = 0.0,
                coverage_quantile: float = 1.0, workers: int = 1,
                keep: Sequence[int] = ()) -> GridFunction | tuple[GridFunction, dict]:
    """u_n from u₀ = φ by n steps of u ↦ Ê[u(· + scale·ξ)].

    ``scales`` is a per-coordinate sequence (constant over steps) or a
    callable ``step -> sequence``. ``grid`` is a GridFunction (its values are
    ignored when ``phi`` is given) or a sequence of Axis. Iterates whose index
    is in ``keep`` are returned in a dict alongside u_n.
    """
    if isinstance(grid, GridFunction):
        axes, bnd = grid.axes, grid.boundary
    else:
        axes, bnd = tuple(grid), "constant"
    bnd = boundary or bnd
    if len(axes) != family.arity:
        raise DomainError("grid arity does not match the family")
    if phi is None:
        u0 = grid
    elif isinstance(phi, GridFunction):
        u0 = phi
    else:
        u0 = GridFunction.sample(phi, axes, bnd)
    if n < 0:
        raise DomainError("n must be nonnegative")
    const = not callable(scales)
    if const:
        _check_coverage(family, list(scales), u0, n, coverage_slack, coverage_quantile)
    u = u0.values.copy()
    snapshots = {0: GridFunction(axes, u.copy(), bnd)} if 0 in keep else {}
    op = _StepOperator(family, scales, axes, bnd, workers) if const else None
    for k in range(n):
        step = op if const else _StepOperator(family, scales(k), axes, bnd, workers)
        u = step(u)
        if k + 1 in keep:
            snapshots[k + 1] = GridFunction(axes, u.copy(), bnd)
    result = GridFunction(axes, u, bnd)
    return (result, snapshots) if keep else result


def continue_compose(family, u: GridFunction, n: int, scales, workers: int = 1) -> GridFunction:
    """Apply n more steps to an existing iterate (same grid)."""
    return iid_compose(family, None, n, scales, u, coverage_slack=math.inf, workers=workers)


# ---------------------------------------------------------------------------
# axioms


def sublinearity_audit(family: DistributionFamily, phis: Sequence[Callable],
                       lambdas: Sequence[float], rtol: float = 1e-12) -> list[str]:
    """Check the sublinear-expectation axioms on all supplied functions.

    Returns a list of human-readable violations (empty when all hold).
    """
    nodes = np.concatenate([m.nodes for m in family.members])
    vals = [_eval(p, nodes) for p in phis]

    def E(v: np.ndarray) -> float:
        best, s = -math.inf, 0
        for m in family.members:
            k = len(m.weights)
            best = max(best, math.fsum(m.weights * v[s:s + k]))
            s += k
        return best

    out: list[str] = []
    ev = [E(v) for v in vals]
    scale = 1.0 + max((float(np.max(np.abs(v))) for v in vals), default=0.0)
    tol = rtol * scale * 10
    for c in (0.0, 1.0, -2.5, 7.0):
        if abs(E(np.full(nodes.shape[0], c)) - c) > tol:
            out.append(f"constant preservation fails at c={c}")
    for i, j in itertools.product(range(len(vals)), repeat=2):
        a, b = vals[i], vals[j]
        if i != j and np.all(a <= b) and ev[i] > ev[j] + tol:
            out.append(f"monotonicity fails for pair ({i},{j})")
        if i <= j:
            if E(a + b) > ev[i] + ev[j] + tol:
                out.append(f"sub-additivity fails for pair ({i},{j})")
            if abs(ev[i] - ev[j]) > E(np.abs(a - b)) + tol:
                out.append(f"|E[X]-E[Y]| <= E[|X-Y|] fails for pair ({i},{j})")
    for i, v in enumerate(vals):
        for lam in lambdas:
            if lam >= 0 and abs(E(lam * v) - lam * ev[i]) > tol * (1 + lam):
                out.append(f"positive homogeneity fails for function {i}, lambda={lam}")
        if ev[i] + E(-v) < -tol:
            out.append(f"E[X] + E[-X] < 0 for function {i}")
    return out
