"""Privacy mechanisms: Laplace-perturbed indicators, the two-stage censored
randomized response, and an exact finite-output privacy verifier.

All randomness flows through an explicit numpy Generator. Every mechanism
also accepts a ``noise`` override (pre-drawn unit noise, e.g. zeros) so
deterministic noiseless tests are possible without touching the production
sampling path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import ProbVector


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy level alpha, target risk gamma, and per-block sample size.

    alpha is restricted to (0, 1]: the guarantees backing the critical
    values are only proved in that regime, so values outside it raise
    instead of silently extrapolating.
    """

    alpha: float
    gamma: float
    n_block: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.n_block < 1:
            raise ValueError("n_block must be a positive integer")


@dataclass(frozen=True)
class SupportSet:
    """A nonempty main set B of categories inside {1, ..., d}.

    ``members`` is stored sorted ascending; the complement is the tail set.
    """

    members: tuple
    d: int

    def __post_init__(self):
        mem = tuple(sorted(int(j) for j in self.members))
        if len(mem) == 0:
            raise ValueError("support set must be nonempty")
        if len(set(mem)) != len(mem):
            raise ValueError("support set has duplicate categories")
        if mem[0] < 1 or mem[-1] > self.d:
            raise ValueError(f"categories must lie in [1, {self.d}]")
        object.__setattr__(self, "members", mem)

    @property
    def size(self) -> int:
        return len(self.members)

    def indicator(self) -> np.ndarray:
        """Boolean membership mask over categories 1..d (0-based array)."""
        mask = np.zeros(self.d, dtype=bool)
        mask[np.asarray(self.members) - 1] = True
        return mask

    def complement(self) -> tuple:
        mask = self.indicator()
        return tuple(int(j) for j in np.nonzero(~mask)[0] + 1)


@dataclass(frozen=True)
class PrivateVectorRecord:
    """One user's privatized indicator vector, one real per category of B."""

    z: np.ndarray
    b: SupportSet

    def __post_init__(self):
        arr = np.asarray(self.z, dtype=np.float64)
        if arr.size != self.b.size:
            raise ValueError("record length must equal |B|")
        if not np.all(np.isfinite(arr)):
            raise ValueError("record entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "z", arr)


@dataclass(frozen=True)
class Stage2Record:
    """One user's second-stage response, a point in {-magnitude, +magnitude}."""

    z: float
    magnitude: float

    def __post_init__(self):
        if not self.magnitude > 0:
            raise ValueError("magnitude must be positive")
        if abs(self.z) != self.magnitude:
            raise ValueError("stage-2 value must be exactly +/- magnitude")


def laplace_array(rng: np.random.Generator, scale: float, shape) -> np.ndarray:
    """Laplace(scale) draws via inverse CDF on u in (-1/2, 1/2):
    x = -scale * sgn(u) * ln(1 - 2|u|).
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = rng.random(shape)
    u -= 0.5
    # rng.random() can return exactly 0.0 -> u = -0.5 -> log(0); redraw.
    bad = u == -0.5
    while np.any(bad):
        u[bad] = rng.random(int(bad.sum())) - 0.5
        bad = u == -0.5
    sgn = np.sign(u)
    np.abs(u, out=u)
    u *= -2.0
    np.log1p(u, out=u)
    u *= sgn
    u *= -scale
    return u


def laplace_draw(rng: np.random.Generator, scale: float) -> float:
    """A single Laplace(scale) draw (inverse CDF)."""
    return float(laplace_array(rng, scale, ()))


def privatize_indicator_vector(
    x: int,
    b: SupportSet,
    params: PrivacyParams,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> PrivateVectorRecord:
    """Release 1{x=j} + (2/alpha) * Laplace(1) for each j in B.

    ``noise``, when given, supplies the |B| unit-scale noise values instead
    of the generator (test hook).
    """
    if not 1 <= x <= b.d:
        raise ValueError(f"category {x} outside [1, {b.d}]")
    if noise is None:
        if rng is None:
            raise ValueError("either rng or noise must be provided")
        noise = laplace_array(rng, 1.0, b.size)
    else:
        noise = np.asarray(noise, dtype=np.float64)
        if noise.shape != (b.size,):
            raise ValueError("noise override must have length |B|")
    ind = np.asarray([1.0 if x == j else 0.0 for j in b.members])
    return PrivateVectorRecord(z=ind + (2.0 / params.alpha) * noise, b=b)


def privatize_indicator_block(
    xs: np.ndarray, b: SupportSet, params: PrivacyParams, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized indicator mechanism: one row per user, one column per j in B."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size and (xs.min() < 1 or xs.max() > b.d):
        raise ValueError(f"categories outside [1, {b.d}]")
    z = laplace_array(rng, 2.0 / params.alpha, (xs.size, b.size))
    members = np.asarray(b.members, dtype=np.int64)  # sorted ascending
    pos = np.searchsorted(members, xs)
    hit = (pos < members.size) & (members[np.minimum(pos, members.size - 1)] == xs)
    z[np.nonzero(hit)[0], pos[hit]] += 1.0
    return z


def privatize_tail_indicator(
    x: int,
    b: SupportSet,
    params: PrivacyParams,
    rng: np.random.Generator | None = None,
    noise: float | None = None,
) -> float:
    """Release 1{x in B^c} + (2/alpha) * Laplace(1)."""
    if not 1 <= x <= b.d:
        raise ValueError(f"category {x} outside [1, {b.d}]")
    if noise is None:
        if rng is None:
            raise ValueError("either rng or noise must be provided")
        noise = laplace_draw(rng, 1.0)
    ind = 0.0 if x in b.members else 1.0
    return ind + (2.0 / params.alpha) * float(noise)


def privatize_tail_block(
    xs: np.ndarray, b: SupportSet, params: PrivacyParams, rng: np.random.Generator
) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size and (xs.min() < 1 or xs.max() > b.d):
        raise ValueError(f"categories outside [1, {b.d}]")
    ind = (~b.indicator()[xs - 1]).astype(np.float64)
    return ind + laplace_array(rng, 2.0 / params.alpha, xs.size)


def censor(v, tau: float):
    """Clamp v to [-tau, tau]. Works on scalars and arrays."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    if np.isscalar(v):
        return float(min(max(v, -tau), tau))
    return np.clip(v, -tau, tau)


def c_alpha(alpha: float) -> float:
    """(e^alpha + 1) / (e^alpha - 1)."""
    return (math.exp(alpha) + 1.0) / (math.exp(alpha) - 1.0)


def tau_of(n: int, alpha: float) -> float:
    """(n * alpha^2)^(-1/2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1.0 / math.sqrt(n * alpha * alpha)


def stage2_plus_probability(deviation_censored, scale: float):
    """P(Z = +scale) written in the guarded form 1/2 + a / (2*scale)."""
    prob = 0.5 + np.asarray(deviation_censored) / (2.0 * scale)
    if np.any(prob <= 0.0) or np.any(prob >= 1.0):
        raise AssertionError("stage-2 probability left (0, 1); censoring broken")
    return prob


def privatize_stage2(
    x: int,
    p_hat: np.ndarray,
    p0: ProbVector,
    params: PrivacyParams,
    rng: np.random.Generator | None = None,
    u: float | None = None,
) -> Stage2Record:
    """Second-stage randomized response.

    Releases +/- c_alpha*tau with P(+ | X=j) = (1 + censor(p_hat_j - p0(j),
    tau) / (c_alpha*tau)) / 2, where tau is computed from params.n_block.
    The conditional expectation given X=j is exactly the censored deviation.
    ``u`` overrides the uniform draw (test hook).
    """
    p_hat = np.asarray(p_hat, dtype=np.float64)
    if p_hat.shape != (p0.d,):
        raise ValueError("p_hat must have length d")
    if not 1 <= x <= p0.d:
        raise ValueError(f"category {x} outside [1, {p0.d}]")
    tau = tau_of(params.n_block, params.alpha)
    scale = c_alpha(params.alpha) * tau
    a = censor(float(p_hat[x - 1] - p0.mass[x - 1]), tau)
    prob_plus = float(stage2_plus_probability(a, scale))
    if u is None:
        if rng is None:
            raise ValueError("either rng or u must be provided")
        u = rng.random()
    z = scale if u < prob_plus else -scale
    return Stage2Record(z=z, magnitude=scale)


def privatize_stage2_block(
    xs: np.ndarray,
    p_hat: np.ndarray,
    p0: ProbVector,
    alpha: float,
    tau: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized stage-2 mechanism over a block of users; returns raw values."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size and (xs.min() < 1 or xs.max() > p0.d):
        raise ValueError(f"categories outside [1, {p0.d}]")
    scale = c_alpha(alpha) * tau
    a = censor(np.asarray(p_hat, dtype=np.float64) - p0.mass, tau)
    prob_plus = stage2_plus_probability(a, scale)
    u = rng.random(xs.size)
    return np.where(u < prob_plus[xs - 1], scale, -scale)


def stage2_table(p_hat: np.ndarray, p0: ProbVector, params: PrivacyParams) -> np.ndarray:
    """Conditional distribution table of the stage-2 mechanism.

    Row j-1 is (P(+c*tau | X=j), P(-c*tau | X=j)); suitable for
    ``verify_ldp_finite``.
    """
    p_hat = np.asarray(p_hat, dtype=np.float64)
    if p_hat.shape != (p0.d,):
        raise ValueError("p_hat must have length d")
    tau = tau_of(params.n_block, params.alpha)
    scale = c_alpha(params.alpha) * tau
    plus = stage2_plus_probability(censor(p_hat - p0.mass, tau), scale)
    return np.column_stack([plus, 1.0 - plus])


def verify_ldp_finite(table: np.ndarray, alpha: float) -> tuple:
    """Exact privacy audit of a finite-output mechanism.

    ``table[x, z]`` is P(output z | input x). Returns (ok, max_log_ratio)
    where max_log_ratio is the maximum over outputs and ordered input pairs
    of log(P(z|x) / P(z|x')); ok iff max_log_ratio <= alpha + 1e-12.
    """
    t = np.asarray(table, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
        raise ValueError("table must be a 2-d array of conditional probabilities")
    if np.any(t < 0):
        raise ValueError("probabilities must be nonnegative")
    if np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("each row must sum to 1 within 1e-9")
    max_log = 0.0
    for z in range(t.shape[1]):
        col = t[:, z]
        hi = float(col.max())
        lo = float(col.min())
        if hi == 0.0:
            continue  # output never produced; vacuous
        if lo == 0.0:
            max_log = math.inf
            break
        max_log = max(max_log, math.log(hi / lo))
    return (max_log <= alpha + 1e-12, max_log)


def indicator_log_density(z: np.ndarray, x: int, b: SupportSet, alpha: float) -> float:
    """Closed-form log density of the indicator mechanism's output vector.

    The output given X=x has independent coordinates z_j ~ 1{x=j} +
    Laplace(2/alpha); this evaluates the joint log density at z.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (b.size,):
        raise ValueError("output must have length |B|")
    if not 1 <= x <= b.d:
        raise ValueError(f"category {x} outside [1, {b.d}]")
    scale = 2.0 / alpha
    ind = np.asarray([1.0 if x == j else 0.0 for j in b.members])
    return float(np.sum(-np.log(2.0 * scale) - np.abs(z - ind) / scale))


def indicator_worst_log_ratio(b: SupportSet, alpha: float, x: int, x_prime: int) -> float:
    """Analytic sup over outputs of the indicator mechanism's log density ratio.

    Each coordinate where the two inputs' indicators differ contributes at
    most alpha/2 (a unit shift of a Laplace(2/alpha) location).
    """
    differing = sum(1 for j in b.members if (j == x) != (j == x_prime))
    return differing * alpha / 2.0
