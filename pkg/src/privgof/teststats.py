"""Test statistics, critical values, main-set selection, and the two
composite goodness-of-fit tests.

The one-shot runners derive the block size n from the input length (the
sample is split into equal halves for the non-interactive test and equal
thirds for the interactive one) and consume randomness from the explicit
generator in a fixed order, so a fixed seed gives a bit-reproducible
report.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .distributions import ProbVector, descending_order
from .privacy import (
    PrivacyParams,
    SupportSet,
    Stage2Record,
    c_alpha,
    censor,
    laplace_array,
    privatize_indicator_block,
    privatize_stage2_block,
    privatize_tail_block,
    tau_of,
)

NORMS = ("l1", "l2")
MODES = ("noninteractive", "interactive")

# Exponent on j in the main-set selection rule, per (mode, norm).
_SELECT_EXPONENT = {
    ("noninteractive", "l1"): 0.75,
    ("noninteractive", "l2"): 0.25,
    ("interactive", "l1"): 0.5,
}


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test run: statistics, critical values, decision."""

    s_b: float | None
    t_b: float
    d_n: float | None
    c1: float | None
    c2: float
    c3: float | None
    reject: bool
    b_used: tuple
    mode: str
    norm: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.mode == "noninteractive":
            if self.s_b is None or self.c1 is None:
                raise ValueError("noninteractive report requires s_b and c1")
            expected = self.s_b >= self.c1 or self.t_b >= self.c2
        else:
            if self.d_n is None or self.c3 is None:
                raise ValueError("interactive report requires d_n and c3")
            expected = self.d_n >= self.c3 or self.t_b >= self.c2
        if bool(self.reject) != expected:
            raise ValueError("reject flag inconsistent with threshold logic")

    def to_json(self) -> str:
        payload = {
            "s_b": self.s_b,
            "t_b": self.t_b,
            "d_n": self.d_n,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "reject": self.reject,
            "b_used": list(self.b_used),
            "mode": self.mode,
            "norm": self.norm,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "TestReport":
        obj = json.loads(text)
        # __post_init__ re-asserts the reject/threshold invariant.
        return cls(
            s_b=obj["s_b"],
            t_b=obj["t_b"],
            d_n=obj["d_n"],
            c1=obj["c1"],
            c2=obj["c2"],
            c3=obj["c3"],
            reject=bool(obj["reject"]),
            b_used=tuple(obj["b_used"]),
            mode=obj["mode"],
            norm=obj["norm"],
        )


def statistic_S(z: np.ndarray, p0: ProbVector, b: SupportSet) -> float:
    """Pairwise product statistic over the main set.

    z is the n x |B| matrix of privatized indicator vectors. Computed per
    coordinate with sum_{i1 != i2} a_i1 a_i2 = (sum a)^2 - sum a^2, which is
    O(n |B|) instead of the O(n^2 |B|) double sum.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != b.size:
        raise ValueError("z must be an n x |B| matrix")
    n = z.shape[0]
    if n < 2:
        raise ValueError("statistic requires n >= 2")
    centered = z - p0.mass[np.asarray(b.members) - 1][None, :]
    col_sum = centered.sum(axis=0)
    np.square(centered, out=centered)
    col_sumsq = centered.sum(axis=0)
    return float(np.sum(col_sum * col_sum - col_sumsq) / (n * (n - 1)))


def statistic_S_slow(z: np.ndarray, p0: ProbVector, b: SupportSet) -> float:
    """Literal O(n^2 |B|) double sum; reference oracle for statistic_S."""
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if n < 2:
        raise ValueError("statistic requires n >= 2")
    a = z - p0.mass[np.asarray(b.members) - 1][None, :]
    total = 0.0
    for j in range(b.size):
        for i1 in range(n):
            for i2 in range(n):
                if i1 != i2:
                    total += a[i1, j] * a[i2, j]
    return total / (n * (n - 1))


def statistic_T(z, p0_tail: float) -> float:
    """Mean of the privatized tail indicators minus the reference tail mass."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise ValueError("z must be a nonempty 1-d sequence")
    return float(z.mean() - p0_tail)


def statistic_D(z2, p_hat: np.ndarray, p0: ProbVector, tau: float) -> float:
    """Second-stage statistic: mean response minus the reference-weighted
    censored deviations."""
    if len(z2) < 1:
        raise ValueError("z2 must be nonempty")
    vals = np.asarray(
        [r.z if isinstance(r, Stage2Record) else float(r) for r in z2],
        dtype=np.float64,
    )
    p_hat = np.asarray(p_hat, dtype=np.float64)
    if p_hat.shape != (p0.d,):
        raise ValueError("p_hat must have length d")
    correction = float(np.sum(p0.mass * censor(p_hat - p0.mass, tau)))
    return float(vals.mean() - correction)


def critical_values(n: int, b_size: int, params: PrivacyParams) -> tuple:
    """The three closed-form thresholds (c1, c2, c3).

    c1 = sqrt(656 |B| / (n (n-1) alpha^4 gamma)),
    c2 = 6 / sqrt(n alpha^2 gamma),
    c3 = ((e+1)/(e-1)) * sqrt(4/gamma) / (n alpha^2).

    c3 carries the literal constant (e+1)/(e-1), not c_alpha.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if b_size < 1:
        raise ValueError("b_size must be >= 1")
    a2 = params.alpha * params.alpha
    c1 = math.sqrt(656.0 * b_size / (n * (n - 1) * a2 * a2 * params.gamma))
    c2 = 6.0 / math.sqrt(n * a2 * params.gamma)
    c3 = ((math.e + 1.0) / (math.e - 1.0)) * math.sqrt(4.0 / params.gamma) / (n * a2)
    return c1, c2, c3


def select_B(
    p0: ProbVector, n: int, alpha: float, norm: str, mode: str
) -> tuple[int, SupportSet]:
    """Smallest j whose top-j main set balances the two error terms.

    Selection runs on the descending reordering of p0 and returns the top-j
    original categories. The exponent on j is 3/4 (noninteractive, l1),
    1/4 (noninteractive, l2), 1/2 (interactive, l1); the interactive l2
    test needs no main set and gets B = full support.
    """
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    order = descending_order(p0)
    if mode == "interactive" and norm == "l2":
        return p0.d, SupportSet(members=tuple(range(1, p0.d + 1)), d=p0.d)
    q = _SELECT_EXPONENT[(mode, norm)]
    sorted_mass = p0.mass[order - 1]
    # tails[j-1] = mass strictly below the top-j set; exact 0 at j = d.
    tails = np.concatenate([np.cumsum(sorted_mass[::-1])[::-1][1:], [0.0]])
    root = math.sqrt(n * alpha * alpha)
    j_star = p0.d
    for j in range(1, p0.d + 1):
        if j ** q / root >= tails[j - 1]:
            j_star = j
            break
    return j_star, SupportSet(members=tuple(int(v) for v in order[:j_star]), d=p0.d)


def run_test_noninteractive(
    x, p0: ProbVector, params: PrivacyParams, norm: str, rng: np.random.Generator
) -> TestReport:
    """Privatize a raw sample of 2n users and run the two-branch test.

    The first half feeds the main-set statistic, the second half the tail
    statistic; rejection means either statistic clears its threshold.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.size % 2 != 0:
        raise ValueError("sample length must be even (two equal blocks)")
    if x.size < 4:
        raise ValueError("need at least 4 observations (n >= 2 per block)")
    n = x.size // 2
    _, b = select_B(p0, n, params.alpha, norm, "noninteractive")
    z1 = privatize_indicator_block(x[:n], b, params, rng)
    z2 = privatize_tail_block(x[n:], b, params, rng)
    tail0 = float(p0.mass[~b.indicator()].sum())
    s = statistic_S(z1, p0, b)
    t = statistic_T(z2, tail0)
    c1, c2, _ = critical_values(n, b.size, params)
    return TestReport(
        s_b=s,
        t_b=t,
        d_n=None,
        c1=c1,
        c2=c2,
        c3=None,
        reject=bool(s >= c1 or t >= c2),
        b_used=b.members,
        mode="noninteractive",
        norm=norm,
    )


def run_test_interactive(
    x, p0: ProbVector, params: PrivacyParams, norm: str, rng: np.random.Generator
) -> TestReport:
    """Privatize a raw sample of 3n users and run the interactive test.

    Block 1 is privatized with the indicator mechanism over the full
    support and averaged into the frequency estimate; block 2 answers the
    censored randomized response built from that estimate; block 3 feeds
    the tail statistic on the selected main set.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.size % 3 != 0:
        raise ValueError("sample length must be divisible by 3")
    if x.size < 6:
        raise ValueError("need at least 6 observations (n >= 2 per block)")
    n = x.size // 3
    _, b = select_B(p0, n, params.alpha, norm, "interactive")
    full = SupportSet(members=tuple(range(1, p0.d + 1)), d=p0.d)
    z1 = privatize_indicator_block(x[:n], full, params, rng)
    p_hat = z1.mean(axis=0)
    tau = tau_of(n, params.alpha)
    z2 = privatize_stage2_block(x[n : 2 * n], p_hat, p0, params.alpha, tau, rng)
    z3 = privatize_tail_block(x[2 * n :], b, params, rng)
    tail0 = float(p0.mass[~b.indicator()].sum())
    d_stat = statistic_D(z2, p_hat, p0, tau)
    t = statistic_T(z3, tail0)
    _, c2, c3 = critical_values(n, b.size, params)
    return TestReport(
        s_b=None,
        t_b=t,
        d_n=d_stat,
        c1=None,
        c2=c2,
        c3=c3,
        reject=bool(d_stat >= c3 or t >= c2),
        b_used=b.members,
        mode="interactive",
        norm=norm,
    )


def run_test(
    x, p0: ProbVector, params: PrivacyParams, norm: str, mode: str, rng: np.random.Generator
) -> TestReport:
    if mode == "noninteractive":
        return run_test_noninteractive(x, p0, params, norm, rng)
    if mode == "interactive":
        return run_test_interactive(x, p0, params, norm, rng)
    raise ValueError(f"unknown mode {mode!r}")
