"""Generators of alternative hypotheses at a prescribed distance from the
reference vector, including the hard instances used by the harness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ProbVector, descending_order, distance

ALTERNATIVE_KINDS = ("mass_shift", "paired_signs", "random_direction")


@dataclass(frozen=True)
class AlternativeSpec:
    """Recipe for an alternative at a given perturbation scale or distance.

    Exactly one of ``epsilon`` and ``target_distance`` should drive the
    construction; ``b_size`` is required for ``paired_signs``.
    """

    kind: str
    norm: str = "l1"
    epsilon: float | None = None
    target_distance: float | None = None
    b_size: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ALTERNATIVE_KINDS:
            raise ValueError(f"unknown alternative kind {self.kind!r}")
        if self.norm not in ("l1", "l2"):
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.epsilon is None and self.target_distance is None:
            raise ValueError("one of epsilon / target_distance is required")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.target_distance is not None and self.target_distance < 0:
            raise ValueError("target_distance must be nonnegative")
        if self.kind == "paired_signs" and self.b_size is None:
            raise ValueError("paired_signs requires b_size")


def mass_shift_alternative(p0: ProbVector, epsilon: float) -> ProbVector:
    """(1 - eps) * p0 + eps * (point mass at category d).

    The l1 distance to p0 is exactly 2 * eps * (1 - p0(d)).
    """
    if not 0.0 <= epsilon <= 1.0 - 1.0 / p0.d:
        raise ValueError(f"epsilon must lie in [0, 1 - 1/d], got {epsilon}")
    mass = (1.0 - epsilon) * p0.mass.copy()
    mass[-1] += epsilon
    return ProbVector(mass)


def paired_signs_alternative(
    p0: ProbVector,
    b_size: int,
    epsilon: float,
    rng: np.random.Generator | None = None,
    signs: np.ndarray | None = None,
) -> ProbVector:
    """Perturb consecutive sorted pairs of the top-b_size categories by
    (+eps, -eps) with an independent random sign per pair.

    Total mass is preserved exactly; the l1 distance is b_size * eps and
    the l2 distance is sqrt(b_size) * eps. ``signs`` overrides the random
    signs (one +/-1 per pair).
    """
    if b_size % 2 != 0 or not 2 <= b_size <= p0.d:
        raise ValueError("b_size must be even and within [2, d]")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    n_pairs = b_size // 2
    if signs is None:
        if rng is None:
            raise ValueError("either rng or signs must be provided")
        signs = np.where(rng.random(n_pairs) < 0.5, 1.0, -1.0)
    else:
        signs = np.asarray(signs, dtype=np.float64)
        if signs.shape != (n_pairs,) or not np.all(np.abs(signs) == 1.0):
            raise ValueError("signs must be b_size/2 values in {-1, +1}")
    order = descending_order(p0)
    mass = p0.mass.copy()
    for k in range(n_pairs):
        hi, lo = order[2 * k] - 1, order[2 * k + 1] - 1
        mass[hi] += signs[k] * epsilon
        mass[lo] -= signs[k] * epsilon
    bad = np.nonzero(mass < 0)[0]
    if bad.size:
        raise ValueError(
            f"epsilon {epsilon} drives category {bad[0] + 1} negative "
            f"(mass {mass[bad[0]]:.3g}); it must not exceed the smallest "
            f"probability among the top {b_size} categories"
        )
    return ProbVector(mass)


def paired_signs_epsilon(p0: ProbVector, b_size: int, target: float, norm: str) -> float:
    """Perturbation scale giving a paired-signs alternative at the target
    distance: eps = target / b_size (l1) or target / sqrt(b_size) (l2)."""
    if norm == "l1":
        return target / b_size
    if norm == "l2":
        return target / math.sqrt(b_size)
    raise ValueError(f"unknown norm {norm!r}")


def mass_shift_epsilon(p0: ProbVector, target: float, norm: str) -> float:
    """Perturbation scale giving a mass-shift alternative at the target
    distance."""
    if norm == "l1":
        unit = 2.0 * (1.0 - float(p0.mass[-1]))
    elif norm == "l2":
        head = float(np.square(p0.mass[:-1]).sum())
        unit = math.sqrt(head + (1.0 - float(p0.mass[-1])) ** 2)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    if unit <= 0:
        raise ValueError("reference is a point mass at d; no shift direction")
    return target / unit


def random_direction_alternative(
    p0: ProbVector, target: float, norm: str, rng: np.random.Generator
) -> ProbVector:
    """p0 plus a mean-zero Gaussian direction rescaled to the target
    distance, with nonnegativity repair.

    After clamping negatives and renormalizing, the achieved distance must
    stay within 1% of the target, otherwise this raises.
    """
    if target < 0:
        raise ValueError("target must be nonnegative")
    limit = 2.0 if norm == "l1" else math.sqrt(2.0)
    if target > limit:
        raise ValueError(f"target {target} exceeds the simplex diameter {limit:g}")
    if target == 0.0:
        return p0
    v = rng.standard_normal(p0.d)
    v -= v.mean()
    size = float(np.abs(v).sum()) if norm == "l1" else float(np.sqrt(np.square(v).sum()))
    if size == 0.0:
        raise ValueError("degenerate direction draw")
    mass = p0.mass + v * (target / size)
    np.clip(mass, 0.0, None, out=mass)
    out = ProbVector(mass)
    achieved = distance(out, p0, norm)
    if abs(achieved - target) > 0.01 * target:
        raise ValueError(
            f"nonnegativity repair moved the distance to {achieved:.4g}, "
            f"more than 1% off the target {target:.4g}"
        )
    return out


def realize_alternative(
    spec: AlternativeSpec, p0: ProbVector, rng: np.random.Generator | None = None
) -> ProbVector:
    """Materialize an AlternativeSpec around p0."""
    if spec.seed is not None:
        rng = np.random.default_rng(spec.seed)
    if spec.kind == "mass_shift":
        eps = spec.epsilon
        if eps is None:
            eps = mass_shift_epsilon(p0, spec.target_distance, spec.norm)
        return mass_shift_alternative(p0, eps)
    if spec.kind == "paired_signs":
        eps = spec.epsilon
        if eps is None:
            eps = paired_signs_epsilon(p0, spec.b_size, spec.target_distance, spec.norm)
        return paired_signs_alternative(p0, spec.b_size, eps, rng=rng)
    if spec.target_distance is None:
        raise ValueError("random_direction requires target_distance")
    return random_direction_alternative(p0, spec.target_distance, spec.norm, rng)
