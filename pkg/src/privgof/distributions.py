"""Discrete probability vectors on the alphabet {1, ..., d}.

Categories are 1-based everywhere in the public interface. Internally a
vector is a float64 numpy array whose position k holds the probability of
category k+1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SUM_TOL = 1e-12

FAMILY_KINDS = ("uniform", "nearly_uniform", "polynomial", "exponential")


@dataclass(frozen=True)
class ProbVector:
    """A probability vector on {1, ..., d}.

    Construction renormalizes by the exact sum once, then asserts the
    invariants (entries >= 0, sum within 1e-12 of 1). Use ``normalize`` to
    build one from raw nonnegative weights.
    """

    mass: np.ndarray
    d: int = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.mass, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("probability vector must be 1-d and nonempty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be finite")
        if np.any(arr < 0):
            raise ValueError("probabilities must be nonnegative")
        total = float(arr.sum())
        if total <= 0:
            raise ValueError("probabilities must have positive sum")
        arr = arr / total
        if abs(float(arr.sum()) - 1.0) > SUM_TOL:
            raise ValueError("normalization failed to reach sum 1 within 1e-12")
        arr.flags.writeable = False
        object.__setattr__(self, "mass", arr)
        object.__setattr__(self, "d", int(arr.size))

    def prob(self, j: int) -> float:
        """Probability of category j (1-based)."""
        if not 1 <= j <= self.d:
            raise ValueError(f"category {j} outside [1, {self.d}]")
        return float(self.mass[j - 1])

    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(self.mass)
        cum[-1] = 1.0
        return cum


@dataclass(frozen=True)
class FamilySpec:
    """Parametric reference family.

    kind: one of ``uniform``, ``nearly_uniform`` (weight j^-beta, beta in
    [0, 1)), ``polynomial`` (weight j^-(1+beta), beta > 0), ``exponential``
    (weight j^eta * exp(-c * j^beta), c > 0, beta > 0).
    """

    kind: str
    d: int
    beta: float = 0.0
    eta: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.kind == "nearly_uniform" and not 0.0 <= self.beta < 1.0:
            raise ValueError("nearly_uniform requires beta in [0, 1)")
        if self.kind == "polynomial" and not self.beta > 0.0:
            raise ValueError("polynomial requires beta > 0")
        if self.kind == "exponential" and not (self.beta > 0.0 and self.c > 0.0):
            raise ValueError("exponential requires beta > 0 and c > 0")

    def label(self) -> str:
        if self.kind == "uniform":
            return f"uniform(d={self.d})"
        if self.kind == "nearly_uniform":
            return f"nearly_uniform(beta={self.beta:g},d={self.d})"
        if self.kind == "polynomial":
            return f"polynomial(beta={self.beta:g},d={self.d})"
        return f"exponential(eta={self.eta:g},c={self.c:g},beta={self.beta:g},d={self.d})"


def normalize(weights) -> ProbVector:
    """Normalize nonnegative weights into a ProbVector.

    Raises ValueError if any weight is negative or non-finite, or if all
    weights are zero.
    """
    arr = np.asarray(weights, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("weights must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("weights must be finite")
    if np.any(arr < 0):
        raise ValueError("weights must be nonnegative")
    if float(arr.sum()) <= 0.0:
        raise ValueError("at least one weight must be strictly positive")
    return ProbVector(arr)


def make_family(spec: FamilySpec) -> ProbVector:
    """Build the reference vector for a FamilySpec."""
    j = np.arange(1, spec.d + 1, dtype=np.float64)
    if spec.kind == "uniform":
        w = np.ones(spec.d)
    elif spec.kind == "nearly_uniform":
        w = j ** (-spec.beta)
    elif spec.kind == "polynomial":
        w = j ** (-1.0 - spec.beta)
    else:
        # Work in log space so large-d tails underflow to 0 instead of
        # producing inf/nan through the j^eta factor.
        logw = spec.eta * np.log(j) - spec.c * j ** spec.beta
        w = np.exp(logw - logw.max())
    return normalize(w)


def l1_distance(p: ProbVector, q: ProbVector) -> float:
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: {p.d} != {q.d}")
    return float(np.abs(p.mass - q.mass).sum())


def l2_distance(p: ProbVector, q: ProbVector) -> float:
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: {p.d} != {q.d}")
    return float(np.sqrt(np.square(p.mass - q.mass).sum()))


def distance(p: ProbVector, q: ProbVector, norm: str) -> float:
    if norm == "l1":
        return l1_distance(p, q)
    if norm == "l2":
        return l2_distance(p, q)
    raise ValueError(f"unknown norm {norm!r}")


def tail_mass(p: ProbVector, members) -> float:
    """Total mass of p outside the given set of categories."""
    idx = np.asarray(list(members), dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > p.d):
        raise ValueError("set contains categories outside [1, d]")
    inside = np.zeros(p.d, dtype=bool)
    inside[idx - 1] = True
    return float(p.mass[~inside].sum())


def sample(p: ProbVector, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. categories from p (1-based), via inverse CDF.

    Uses a precomputed cumulative table, O(log d) per draw, so the output
    is a deterministic function of the generator's uniform stream.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cum = p.cumulative()
    u = rng.random(n)
    idx = np.searchsorted(cum, u, side="right")
    np.clip(idx, 0, p.d - 1, out=idx)
    return (idx + 1).astype(np.int64)


def descending_order(p: ProbVector) -> np.ndarray:
    """Permutation pi (1-based) with p(pi[0]) >= p(pi[1]) >= ...

    Ties are broken by the smaller original category first.
    """
    order = np.argsort(-p.mass, kind="stable")
    return (order + 1).astype(np.int64)
