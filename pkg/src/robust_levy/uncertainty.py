"""Box uncertainty sets of Lévy triplets and the sup-Hamiltonian.

Θ is a product of intervals: one weight interval per jump atom, a drift
interval [q̲, q̄] and a diffusion interval [Q̲, Q̄] with Q̲ ≥ 0. Every objective
below is linear in the parameters, so suprema are attained at vertices and
are evaluated coordinate by coordinate (bang-bang). Ties at a zero
coefficient pick the upper endpoint.

All functions broadcast over numpy arrays of (jump values, p, A).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .stable_measure import MeasureClass, StableLevyMeasure


@dataclass(frozen=True)
class LevyTriplet:
    measure: StableLevyMeasure | None
    q: float
    Q: float

    def __post_init__(self):
        if self.Q < 0:
            raise DomainError("diffusion coefficient Q must be nonnegative")


def _interval(iv) -> tuple[float, float]:
    lo, hi = (float(v) for v in iv)
    if not lo <= hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DomainError("intervals must be bounded")
    return lo, hi


@dataclass(frozen=True)
class UncertaintySetBox:
    alpha: float | None
    directions: tuple[tuple[float, ...], ...]
    weight_intervals: tuple[tuple[float, float], ...]
    q_interval: tuple[float, float] = (0.0, 0.0)
    Q_interval: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "q_interval", _interval(self.q_interval))
        object.__setattr__(self, "Q_interval", _interval(self.Q_interval))
        object.__setattr__(self, "weight_intervals",
                           tuple(_interval(iv) for iv in self.weight_intervals))
        if self.Q_interval[0] < 0:
            raise DomainError("Q interval must lie in [0, ∞)")
        if len(self.directions) != len(self.weight_intervals):
            raise DomainError("one weight interval per atom direction is required")
        if any(lo < 0 for lo, _ in self.weight_intervals):
            raise DomainError("jump weights must be nonnegative")
        if self.weight_intervals and self.alpha is None:
            raise DomainError("alpha is required when jump atoms are present")

    # -- constructors ------------------------------------------------------
    @classmethod
    def one_dim(cls, alpha=None, k_minus=(0.0, 0.0), k_plus=(0.0, 0.0),
                q=(0.0, 0.0), Q=(0.0, 0.0)) -> "UncertaintySetBox":
        jumps = alpha is not None
        return cls(alpha,
                   ((-1.0,), (1.0,)) if jumps else (),
                   (tuple(k_minus), tuple(k_plus)) if jumps else (),
                   tuple(q), tuple(Q))

    @classmethod
    def jump_only(cls, mclass: MeasureClass) -> "UncertaintySetBox":
        return cls(mclass.alpha, mclass.directions, mclass.weight_intervals)

    @classmethod
    def from_dict(cls, d: dict, alpha: float | None = None) -> "UncertaintySetBox":
        atoms = d.get("atoms", [])
        dirs = tuple(tuple(float(x) for x in np.atleast_1d(a["dir"])) for a in atoms)
        ivs = tuple((a["lo"], a["hi"]) for a in atoms)
        return cls(alpha if atoms else None, dirs, ivs,
                   tuple(d.get("q", (0.0, 0.0))), tuple(d.get("Q", (0.0, 0.0))))

    def to_dict(self) -> dict:
        return {
            "atoms": [{"dir": list(e) if len(e) > 1 else e[0], "lo": lo, "hi": hi}
                      for e, (lo, hi) in zip(self.directions, self.weight_intervals)],
            "q": list(self.q_interval),
            "Q": list(self.Q_interval),
        }

    # -- views -------------------------------------------------------------
    @property
    def n_atoms(self) -> int:
        return len(self.directions)

    @property
    def has_jumps(self) -> bool:
        return any(hi > 0 for _, hi in self.weight_intervals)

    def measure_class(self) -> MeasureClass:
        lo = sum(i[0] for i in self.weight_intervals)
        hi = sum(i[1] for i in self.weight_intervals)
        return MeasureClass(self.alpha, self.directions, self.weight_intervals,
                            0.5 * lo if lo > 0 else 0.5 * hi, 2.0 * hi)

    def is_jump_only(self) -> bool:
        return self.q_interval == (0.0, 0.0) and self.Q_interval == (0.0, 0.0)

    def vertices(self) -> list[LevyTriplet]:
        ivs = list(self.weight_intervals) + [self.q_interval, self.Q_interval]
        seen, out = set(), []
        for pick in itertools.product(*[sorted({lo, hi}) for lo, hi in ivs]):
            if pick in seen:
                continue
            seen.add(pick)
            *w, q, Q = pick
            m = StableLevyMeasure(self.alpha, self.directions, tuple(w)) if self.n_atoms else None
            out.append(LevyTriplet(m, q, Q))
        return out

    def singleton(self, triplet: LevyTriplet) -> "UncertaintySetBox":
        w = triplet.measure.weights if triplet.measure is not None else ()
        return UncertaintySetBox(self.alpha, self.directions, tuple((x, x) for x in w),
                                 (triplet.q, triplet.q), (triplet.Q, triplet.Q))


def _bang(lo: float, hi: float, c):
    """sup over w ∈ [lo, hi] of w·c."""
    return np.where(c >= 0, hi * c, lo * c)


def g_function(p, A, box: UncertaintySetBox):
    """G(p, A) = sup over (q, Q) of p·q + ½A·Q."""
    qlo, qhi = box.q_interval
    Qlo, Qhi = box.Q_interval
    p = np.asarray(p, dtype=float)
    A = np.asarray(A, dtype=float)
    out = _bang(qlo, qhi, p) + 0.5 * _bang(Qlo, Qhi, A)
    return out if out.ndim else float(out)


def jump_sup(box: UncertaintySetBox, jump_values):
    """sup over the weight box of Σᵢ wᵢJᵢ; ``jump_values`` has atoms on axis 0."""
    J = np.asarray(jump_values, dtype=float)
    if box.n_atoms == 0:
        return np.zeros(J.shape[1:]) if J.ndim > 1 else 0.0
    if J.shape[0] != box.n_atoms:
        raise DomainError(f"expected {box.n_atoms} atom values, got {J.shape[0]}")
    total = 0.0
    for (lo, hi), Ji in zip(box.weight_intervals, J):
        total = total + _bang(lo, hi, Ji)
    return total


def hamiltonian(box: UncertaintySetBox, jump_values, p, A):
    """sup over Θ of Σwᵢ Jᵢ + p·q + ½A·Q."""
    out = jump_sup(box, jump_values) + g_function(p, A, box)
    return float(out) if np.ndim(out) == 0 else out


def argmax_triplet(box: UncertaintySetBox, jump_values, p: float, A: float) -> LevyTriplet:
    """Vertex attaining the supremum (ties go to upper endpoints)."""
    J = np.asarray(jump_values, dtype=float).reshape(-1)
    w = tuple(hi if Ji >= 0 else lo for (lo, hi), Ji in zip(box.weight_intervals, J))
    q = box.q_interval[1] if p >= 0 else box.q_interval[0]
    Q = box.Q_interval[1] if A >= 0 else box.Q_interval[0]
    m = StableLevyMeasure(box.alpha, box.directions, w) if box.n_atoms else None
    return LevyTriplet(m, q, Q)


def drift_sup_upwind(box: UncertaintySetBox, d_forward, d_backward):
    """Monotone discrete counterpart of sup_q q·u_y.

    Positive q reads the forward difference, negative q the backward one; the
    sup is taken over the interval endpoints and 0 when 0 is admissible.
    """
    qlo, qhi = box.q_interval
    cands = []
    for q in {qlo, qhi}:
        cands.append(q * (d_forward if q >= 0 else d_backward))
    if qlo < 0 < qhi:
        cands.append(np.zeros_like(np.asarray(d_forward, dtype=float)))
    out = cands[0]
    for c in cands[1:]:
        out = np.maximum(out, c)
    return out
