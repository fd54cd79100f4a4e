"""Pareto-tailed laws attracted to the nonlinear stable law, and their certificates.

A law in this family has pure power tails beyond ±x₀,

    F(x) = (k₁/α)|x|^{−α}  (x ≤ −x₀),     1 − F(x) = (k₂/α)x^{−α}  (x ≥ x₀),

and a polynomial CDF on the core [−x₀, x₀]: the cubic Hermite bridge that
matches the tail values and densities at ±x₀, plus c·(x₀² − x²)², which
leaves those four constraints untouched. The scalar c is fixed so the mean
is exactly zero. The correction functions

    β₁(x) = |x|^α F(x) − k₁/α  (x ≤ 0),     β₂(x) = x^α (1 − F(x)) − k₂/α  (x ≥ 0)

then vanish identically beyond the core.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize, special

from .errors import DomainError, InfeasibleCore
from .stable_measure import (MeasureClass, QuadratureConfig, StableLevyMeasure,
                             atom_generators)
from .sublinear import DiscreteDistribution, DistributionFamily
from .testfuncs import SmoothFunction, panel


@dataclass(frozen=True, eq=False)
class ParetoTailLaw:
    alpha: float
    k1: float
    k2: float
    x0: float
    core: Polynomial | None = field(default=None, repr=False)
    shift: float = 0.0
    core_shape: str = "hermite-quartic"

    @property
    def degenerate(self) -> bool:
        """Point mass at 0 (no tails, empty core)."""
        return self.x0 == 0.0

    # -- distribution function --------------------------------------------
    @property
    def left_mass(self) -> float:
        return self.k1 / self.alpha * self.x0**-self.alpha if self.x0 > 0 else 0.0

    @property
    def right_mass(self) -> float:
        return self.k2 / self.alpha * self.x0**-self.alpha if self.x0 > 0 else 0.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.where(x >= 0, 1.0, 0.0)
        a = self.alpha
        ax = np.maximum(np.abs(x), self.x0)
        left = self.k1 / a * ax**-a
        right = 1.0 - self.k2 / a * ax**-a
        core = self.core(np.clip(x, -self.x0, self.x0))
        return np.where(x <= -self.x0, left, np.where(x >= self.x0, right, core))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            raise DomainError("a point mass has no density")
        ax = np.maximum(np.abs(x), self.x0)
        tail = np.where(x < 0, self.k1, self.k2) * ax ** (-1 - self.alpha)
        core = self.core.deriv()(np.clip(x, -self.x0, self.x0))
        return np.where(np.abs(x) >= self.x0, tail, core)

    def beta1(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x > 0):
            raise DomainError("beta1 is defined on (-inf, 0]")
        # identically zero on the pure tail; evaluated symbolically there
        inner = np.abs(x) ** self.alpha * self.cdf(x) - self.k1 / self.alpha
        return np.where(x <= -self.x0, 0.0, inner)

    def beta2(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("beta2 is defined on [0, inf)")
        inner = x**self.alpha * (1.0 - self.cdf(x)) - self.k2 / self.alpha
        return np.where(x >= self.x0, 0.0, inner)

    # -- moments ----------------------------------------------------------
    def partial_first_moment(self, lo: float, hi: float) -> float:
        """∫_{lo}^{hi} x dF(x) for −∞ ≤ lo ≤ hi ≤ ∞."""
        if self.degenerate or hi <= lo:
            return 0.0
        a, x0 = self.alpha, self.x0
        total = 0.0
        # left tail: x = −r, density k₁ r^{−1−α}
        l_lo, l_hi = lo, min(hi, -x0)
        if l_hi > l_lo:
            r_far = 0.0 if math.isinf(l_lo) else (-l_lo) ** (1 - a)
            total -= self.k1 * ((-l_hi) ** (1 - a) - r_far) / (a - 1)
        r_lo, r_hi = max(lo, x0), hi
        if r_hi > r_lo:
            far = 0.0 if math.isinf(r_hi) else r_hi ** (1 - a)
            total += self.k2 * (r_lo ** (1 - a) - far) / (a - 1)
        c_lo, c_hi = max(lo, -x0), min(hi, x0)
        if c_hi > c_lo:
            anti = (Polynomial([0, 1]) * self.core.deriv()).integ()
            total += float(anti(c_hi) - anti(c_lo))
        return total

    def mean(self) -> float:
        return self.partial_first_moment(-math.inf, math.inf)

    def abs_mean(self) -> float:
        return (self.partial_first_moment(0.0, math.inf)
                - self.partial_first_moment(-math.inf, 0.0))

    def quantile(self, u: float) -> float:
        if self.degenerate:
            return 0.0
        a = self.alpha
        if u <= 0.0:
            return -math.inf
        if u >= 1.0:
            return math.inf
        if u <= self.left_mass:
            return -((self.k1 / (a * u)) ** (1.0 / a))
        if u >= 1.0 - self.right_mass:
            return (self.k2 / (a * (1.0 - u))) ** (1.0 / a)
        return optimize.brentq(lambda x: float(self.core(x)) - u, -self.x0, self.x0,
                               xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def levy_measure(self) -> StableLevyMeasure:
        return StableLevyMeasure.one_dim(self.alpha, self.k1, self.k2)


def point_mass_law(alpha: float = 1.5) -> ParetoTailLaw:
    return ParetoTailLaw(alpha, 0.0, 0.0, 0.0, None, 0.0, "point-mass")


def build_law(alpha: float = 1.5, k1: float = 1.0, k2: float = 1.0, x0: float = 2.0,
              check_tail_mass: bool = True) -> ParetoTailLaw:
    """Construct the mean-zero law with the given tail weights and core radius."""
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    if k1 < 0 or k2 < 0 or not x0 > 0:
        raise DomainError("need k1, k2 >= 0 and x0 > 0")
    a = float(alpha)
    Fl = k1 / a * x0**-a
    Fr = 1.0 - k2 / a * x0**-a
    if check_tail_mass and max(1 - Fr, Fl) > 0.25:
        raise InfeasibleCore(f"tail mass {max(1 - Fr, Fl):.4g} exceeds 1/4; enlarge x0")
    dl, dr = k1 * x0 ** (-1 - a), k2 * x0 ** (-1 - a)
    # cubic Hermite on [−x0, x0] in the variable t = (x + x0) / (2 x0)
    h = 2.0 * x0
    t = Polynomial([x0, 1.0]) / h
    h00 = 2 * t**3 - 3 * t**2 + 1
    h10 = t**3 - 2 * t**2 + t
    h01 = -2 * t**3 + 3 * t**2
    h11 = t**3 - t**2
    base = Fl * h00 + h * dl * h10 + Fr * h01 + h * dr * h11
    bump = Polynomial([x0**2, 0.0, -1.0]) ** 2
    trial = ParetoTailLaw(a, k1, k2, x0, base)
    # adding c·bump to the CDF changes the mean by −c·∫bump = −c·16x0⁵/15
    c = trial.mean() / (16.0 * x0**5 / 15.0)
    core = base + c * bump
    law = ParetoTailLaw(a, k1, k2, x0, core, float(c))
    dens = core.deriv()
    crit = [r.real for r in dens.deriv().roots() if abs(r.imag) < 1e-12 and -x0 < r.real < x0]
    low = min(float(dens(x)) for x in [-x0, x0, *crit])
    if low < 0:
        raise InfeasibleCore(f"core density dips to {low:.3g}; the bridge is not monotone")
    return law


def discretize(law: ParetoTailLaw, node_budget: int = 256) -> DiscreteDistribution:
    """Equal-probability strata with nodes at the conditional means."""
    if law.degenerate:
        return DiscreteDistribution.point_mass(0.0)
    if node_budget < 64:
        raise DomainError("node_budget must be at least 64")
    N = int(node_budget)
    edges = [law.quantile(j / N) for j in range(N + 1)]
    nodes = np.array([N * law.partial_first_moment(edges[j], edges[j + 1]) for j in range(N)])
    core = np.abs(nodes) < law.x0
    resid = math.fsum(nodes) / N
    if core.any():
        nodes[core] -= resid * N / core.sum()
    return DiscreteDistribution(nodes, np.full(N, 1.0 / N))


def discretize_class(mclass: MeasureClass, x0: float = 2.0, node_budget: int = 256):
    """Discretized laws at the vertices of a one-dimensional class box."""
    laws = [build_law(mclass.alpha, m.weights[0], m.weights[1], x0) for m in mclass.vertices()]
    return laws, DistributionFamily(tuple(discretize(l, node_budget) for l in laws))


# ---------------------------------------------------------------------------
# certificates

CONDITION_III = ("beta1_at", "beta1_far", "beta1_near", "beta2_at", "beta2_far", "beta2_near")


def condition_iii(law: ParetoTailLaw, n: int) -> tuple[float, ...]:
    """The six decay quantities at n, in the order of CONDITION_III."""
    if law.degenerate:
        return (0.0,) * 6
    a, x0 = law.alpha, law.x0
    c = n ** (1.0 / a)
    b1 = lambda x: abs(float(law.beta1(-c * x)))  # x > 0 stands for −x
    b2 = lambda x: abs(float(law.beta2(c * x)))
    out = [abs(float(law.beta1(-c)))]
    # the correction vanishes for |c·x| ≥ x0, so integrate over the support only
    u = x0 / c
    out.append(integrate.quad(lambda x: b1(x) * x**-a, 1.0, u, limit=200)[0] if u > 1 else 0.0)
    out.append(integrate.quad(b1, 0.0, min(1.0, u), weight="alg", wvar=(1 - a, 0.0), limit=200)[0])
    out.append(abs(float(law.beta2(c))))
    out.append(integrate.quad(lambda x: b2(x) * x**-a, 1.0, u, limit=200)[0] if u > 1 else 0.0)
    out.append(integrate.quad(b2, 0.0, min(1.0, u), weight="alg", wvar=(1 - a, 0.0), limit=200)[0])
    return tuple(out)


def condition_iv(law: ParetoTailLaw) -> tuple[float, float]:
    """|∫_{−∞}^{−1} β₁/|x|^α| and |∫_1^∞ β₂/x^α|."""
    if law.degenerate or law.x0 <= 1.0:
        return 0.0, 0.0
    a = law.alpha
    i1 = integrate.quad(lambda x: float(law.beta1(-x)) * x**-a, 1.0, law.x0, limit=200)[0]
    i2 = integrate.quad(lambda x: float(law.beta2(x)) * x**-a, 1.0, law.x0, limit=200)[0]
    return abs(i1), abs(i2)


def _gl_nodes(lo: float, hi: float, panels: int = 16, order: int = 24):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


@functools.lru_cache(maxsize=16)
def _jacobi(expo: float, order: int = 48):
    # weight (1 + t)^expo on [−1, 1]
    return special.roots_jacobi(order, 0.0, expo)


def increment_minus_generator(law: ParetoTailLaw, phi: SmoothFunction, z, s: float) -> np.ndarray:
    """E[φ(z + s^{1/α}W) − φ(z)] − s∫δ_λφ(z)F(dλ) for the law's own Lévy measure.

    The tails of s^{1/α}W beyond r₀ = s^{1/α}x₀ have exactly the density
    s·k|λ|^{−1−α}, so they cancel against the generator, leaving the core,
    the small-jump part of the generator and its compensator.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if law.degenerate:
        return np.zeros_like(z)
    a = law.alpha
    h = s ** (1.0 / a)
    r0 = h * law.x0
    x, w = _gl_nodes(-law.x0, law.x0)
    w = w * law.pdf(x)
    core = (phi(z[:, None] + h * x[None, :]) - phi(z)[:, None]) @ w
    # small jumps |λ| ≤ r0: δ is O(λ²), so integrate δ/λ² against λ^{1−α}
    # with a Gauss–Jacobi rule
    t, wj = _jacobi(1.0 - a)
    r = 0.5 * r0 * (1.0 + t)
    wr = wj * (0.5 * r0) ** (2.0 - a)
    g = phi.grad(z)
    small = np.zeros_like(z)
    for sign, k in ((-1.0, law.k1), (1.0, law.k2)):
        if k == 0:
            continue
        d = phi(z[:, None] + sign * r[None, :]) - phi(z)[:, None] - sign * g[:, None] * r[None, :]
        small += k * ((d / r[None, :] ** 2) @ wr)
    comp = g * (law.k2 - law.k1) * r0 ** (1 - a) / (a - 1)
    return core - s * small + s * comp


@dataclass
class AttractionCertificate:
    alpha: float
    condition_iii: dict[int, tuple[float, ...]]
    condition_iv: tuple[float, float]
    gaps: dict[str, list[tuple[float, float]]]
    bound_M: float
    x0: float

    def f_of_n(self) -> dict[int, float]:
        return {n: max(v) for n, v in self.condition_iii.items()}

    def exact_zero_from(self) -> int:
        """Smallest dyadic-free threshold n with n^{1/α} ≥ x₀."""
        return math.ceil(self.x0**self.alpha - 1e-12) if self.x0 > 0 else 1

    def rows_iii(self) -> list[list]:
        return [[n, *vals, max(vals)] for n, vals in sorted(self.condition_iii.items())]

    def rows_gap(self) -> list[list]:
        return [[name, s, l] for name, tab in self.gaps.items() for s, l in tab]


def vertex_generators(laws, phi: SmoothFunction, z, cfg: QuadratureConfig | None = None):
    """∫δ_λφ(z)F_k(dλ) for every law, from one pair of unit-weight atom integrals."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    live = [l for l in laws if not l.degenerate]
    if not live:
        return [np.zeros_like(z) for _ in laws]
    mass = max(l.k1 + l.k2 for l in live)
    per_atom, *_ = atom_generators(live[0].alpha, ((-1.0,), (1.0,)), phi, z, cfg, max(mass, 1e-300))
    return [np.zeros_like(z) if l.degenerate else l.k1 * per_atom[0] + l.k2 * per_atom[1]
            for l in laws]


def consistency_gap(laws, phi: SmoothFunction, s: float, z_grid,
                    cfg: QuadratureConfig | None = None, generators=None) -> float:
    """l(s) = sup_z (1/s)|sup_k E_k[φ(z+s^{1/α}W)−φ(z)] − s·sup_k ∫δ_λφ(z)F_k(dλ)|."""
    z = np.asarray(z_grid, dtype=float)
    if all(l.degenerate for l in laws):
        return 0.0
    gens = generators if generators is not None else vertex_generators(laws, phi, z, cfg)
    incs = [increment_minus_generator(l, phi, z, s) + s * gk for l, gk in zip(laws, gens)]
    lhs = np.max(np.stack(incs), axis=0)
    rhs = s * np.max(np.stack(gens), axis=0)
    return float(np.max(np.abs(lhs - rhs))) / s


def certify_attraction(law_or_laws, n_list, s_list, mclass: MeasureClass | None = None,
                       phis: list[SmoothFunction] | None = None, z_grid=None,
                       cfg: QuadratureConfig | None = None, bound_M: float = 1.0,
                       x0: float | None = None) -> AttractionCertificate:
    """Condition tables and the consistency gaps over the class-box vertex laws."""
    base = law_or_laws if isinstance(law_or_laws, ParetoTailLaw) else law_or_laws[0]
    if mclass is not None:
        laws = [build_law(mclass.alpha, m.weights[0], m.weights[1], x0 or base.x0)
                for m in mclass.vertices()]
    elif isinstance(law_or_laws, ParetoTailLaw):
        laws = [law_or_laws]
    else:
        laws = list(law_or_laws)
    if not list(n_list) or not list(s_list):
        raise DomainError("n_list and s_list must be nonempty")
    phis = panel() if phis is None else phis
    z = np.linspace(-math.pi, math.pi, 33) if z_grid is None else np.asarray(z_grid)
    iii = {}
    for n in n_list:
        per = [condition_iii(l, n) for l in laws]
        iii[int(n)] = tuple(max(p[j] for p in per) for j in range(6))
    ivs = [condition_iv(l) for l in laws]
    iv = (max(v[0] for v in ivs), max(v[1] for v in ivs))
    gaps = {}
    for p in phis:
        gens = vertex_generators(laws, p, z, cfg)
        gaps[p.name] = [(float(s), consistency_gap(laws, p, s, z, cfg, gens)) for s in s_list]
    return AttractionCertificate(base.alpha, iii, iv, gaps, bound_M, base.x0)


# ---------------------------------------------------------------------------
# classical symmetric stable oracle


def stable_scale_power(alpha: float, k: float) -> float:
    """σ^α with E e^{iξζ₁} = exp(−σ^α|ξ|^α) for Lévy density k/|z|^{1+α}.

    Equals 2k∫_0^∞(1 − cos r)r^{−1−α}dr = −2kΓ(−α)cos(πα/2).
    """
    return -2.0 * k * special.gamma(-alpha) * math.cos(math.pi * alpha / 2.0)


def sample_symmetric_stable(alpha: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Chambers–Mallows–Stuck variates with characteristic function exp(−|ξ|^α)."""
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.exponential(1.0, size)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha))


MC_CHUNK = 1 << 16


def classical_stable_oracle(alpha: float, k_sym: float, n_samples: int, phi, seed: int = 0,
                            t: float = 1.0) -> tuple[float, float]:
    """Monte Carlo E[φ(ζ_t)] and its standard error; chunked so results ignore parallelism."""
    if not 1 < alpha < 2 or k_sym < 0 or n_samples < 2 or t < 0:
        raise DomainError("need alpha in (1,2), k_sym >= 0, n_samples >= 2, t >= 0")
    if int(seed) < 0:
        raise DomainError("seed must be nonnegative")
    sigma = (t * stable_scale_power(alpha, k_sym)) ** (1.0 / alpha)
    n_chunks = -(-n_samples // MC_CHUNK)
    seqs = np.random.SeedSequence(int(seed)).spawn(n_chunks)
    ref = None
    s1 = s2 = 0.0
    for j, ss in enumerate(seqs):
        m = min(MC_CHUNK, n_samples - j * MC_CHUNK)
        rng = np.random.Generator(np.random.Philox(ss))
        vals = np.asarray(phi(sigma * sample_symmetric_stable(alpha, rng, m)), dtype=float)
        if ref is None:
            ref = float(vals[0])
        d = vals - ref
        s1 += math.fsum(d)
        s2 += math.fsum(d * d)
    mean_d = s1 / n_samples
    var = max(0.0, (s2 - n_samples * mean_d**2) / (n_samples - 1))
    return ref + mean_d, math.sqrt(var / n_samples)
