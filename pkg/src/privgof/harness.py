"""Monte Carlo harness: risk estimation, empirical separation-radius
search, signal-constant calibration, and scaling sweeps.

Every replication owns an independent generator stream derived from
(master_seed, arm, replication index), so results are deterministic and
independent of worker count; rejection tallies are aggregated as integer
counts, which makes the aggregation order-insensitive.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .alternatives import (
    AlternativeSpec,
    mass_shift_alternative,
    mass_shift_epsilon,
    paired_signs_alternative,
    paired_signs_epsilon,
    random_direction_alternative,
    realize_alternative,
)
from .distributions import (
    FamilySpec,
    ProbVector,
    descending_order,
    make_family,
    sample,
)
from .privacy import PrivacyParams, privatize_indicator_block, privatize_stage2_block, SupportSet, tau_of
from .rates import lower_bound, upper_bound
from .teststats import MODES, NORMS, run_test, statistic_D

Z_95 = 1.959963984540054

# Stream arm tags: 0 = null hypothesis, 1 = single-alternative arm,
# 2 = alternative construction, 10+k = bisection probe k.
ARM_NULL = 0
ARM_ALT = 1
ARM_BUILD = 2
ARM_PROBE_BASE = 10


class SaturatedRadiusError(RuntimeError):
    """Risk stayed above gamma even at the largest probed distance."""

    def __init__(self, delta_max: float, risk: float):
        super().__init__(
            f"risk {risk:.4f} still above target at distance {delta_max:.6g}"
        )
        self.delta_max = delta_max
        self.risk = risk


class IndeterminateRadiusError(RuntimeError):
    """Final bracket endpoints could not be ordered against gamma."""

    def __init__(self, bracket: tuple):
        super().__init__(f"confidence intervals straddle the risk target on {bracket}")
        self.bracket = bracket


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: reference family, privacy and test
    settings, replication count, optional alternative, master seed."""

    family: FamilySpec
    n_block: int
    alpha: float
    gamma: float
    norm: str
    mode: str
    replications: int
    alternative: AlternativeSpec | None
    master_seed: int

    _CONFIG_KEYS = (
        "family",
        "n_block",
        "alpha",
        "gamma",
        "norm",
        "mode",
        "replications",
        "alternative",
        "master_seed",
    )
    _FAMILY_KEYS = ("kind", "d", "beta", "eta", "c")
    _ALT_KEYS = ("kind", "norm", "epsilon", "target_distance", "b_size", "seed")

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.replications < 100:
            raise ValueError("replications must be >= 100")
        if self.n_block < 2:
            raise ValueError("n_block must be >= 2")
        # Trigger range validation.
        PrivacyParams(self.alpha, self.gamma, self.n_block)

    def params(self) -> PrivacyParams:
        return PrivacyParams(self.alpha, self.gamma, self.n_block)

    def to_dict(self) -> dict:
        fam = {"kind": self.family.kind, "d": self.family.d}
        if self.family.kind in ("nearly_uniform", "polynomial", "exponential"):
            fam["beta"] = self.family.beta
        if self.family.kind == "exponential":
            fam["eta"] = self.family.eta
            fam["c"] = self.family.c
        alt = None
        if self.alternative is not None:
            alt = {"kind": self.alternative.kind, "norm": self.alternative.norm}
            for key in ("epsilon", "target_distance", "b_size", "seed"):
                val = getattr(self.alternative, key)
                if val is not None:
                    alt[key] = val
        return {
            "family": fam,
            "n_block": self.n_block,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "norm": self.norm,
            "mode": self.mode,
            "replications": self.replications,
            "alternative": alt,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        unknown = set(obj) - set(cls._CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = set(cls._CONFIG_KEYS) - set(obj) - {"alternative"}
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        fam_obj = obj["family"]
        unknown = set(fam_obj) - set(cls._FAMILY_KEYS)
        if unknown:
            raise ValueError(f"unknown family keys: {sorted(unknown)}")
        family = FamilySpec(
            kind=fam_obj["kind"],
            d=int(fam_obj["d"]),
            beta=float(fam_obj.get("beta", 0.0)),
            eta=float(fam_obj.get("eta", 0.0)),
            c=float(fam_obj.get("c", 1.0)),
        )
        alt_obj = obj.get("alternative")
        alternative = None
        if alt_obj is not None:
            unknown = set(alt_obj) - set(cls._ALT_KEYS)
            if unknown:
                raise ValueError(f"unknown alternative keys: {sorted(unknown)}")
            alternative = AlternativeSpec(
                kind=alt_obj["kind"],
                norm=alt_obj.get("norm", obj["norm"]),
                epsilon=alt_obj.get("epsilon"),
                target_distance=alt_obj.get("target_distance"),
                b_size=alt_obj.get("b_size"),
                seed=alt_obj.get("seed"),
            )
        mode = {"ni": "noninteractive"}.get(obj["mode"], obj["mode"])
        return cls(
            family=family,
            n_block=int(obj["n_block"]),
            alpha=float(obj["alpha"]),
            gamma=float(obj["gamma"]),
            norm=obj["norm"],
            mode=mode,
            replications=int(obj["replications"]),
            alternative=alternative,
            master_seed=int(obj["master_seed"]),
        )


@dataclass(frozen=True)
class RiskEstimate:
    """Empirical error rates with a 95% Wilson half-width.

    ci_halfwidth is the larger of the half-widths of the estimates present
    (type1 alone, or type1 and type2).
    """

    type1: float
    type2: float | None
    ci_halfwidth: float
    m: int


@dataclass(frozen=True)
class SeparationResult:
    """Outcome of the bisection search for the separation radius."""

    value: float
    bracket_lo: float
    bracket_hi: float
    indeterminate: bool
    probes: int

    def __float__(self) -> float:
        return self.value


def wilson_interval(k: int, m: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if m < 1 or not 0 <= k <= m:
        raise ValueError("need 0 <= k <= m, m >= 1")
    phat = k / m
    denom = 1.0 + z * z / m
    center = (phat + z * z / (2 * m)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / m + z * z / (4 * m * m))
    return max(0.0, center - half), min(1.0, center + half)


def wilson_halfwidth(k: int, m: int, z: float = Z_95) -> float:
    lo, hi = wilson_interval(k, m, z)
    return (hi - lo) / 2.0


def replication_stream(master_seed: int, arm: int, rep: int) -> np.random.Generator:
    """Independent generator for one replication of one experiment arm."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(arm, rep))
    )


def _chunk_count(args) -> int:
    """Count rejections over a contiguous replication range (worker task)."""
    (p_mass, p0_mass, alpha, gamma, n_block, norm, mode, master_seed, arm, lo, hi) = args
    p = ProbVector(np.asarray(p_mass))
    p0 = ProbVector(np.asarray(p0_mass))
    params = PrivacyParams(alpha, gamma, n_block)
    users = (2 if mode == "noninteractive" else 3) * n_block
    count = 0
    for rep in range(lo, hi):
        rng = replication_stream(master_seed, arm, rep)
        x = sample(p, users, rng)
        if run_test(x, p0, params, norm, mode, rng).reject:
            count += 1
    return count


def count_rejections(
    p: ProbVector,
    p0: ProbVector,
    params: PrivacyParams,
    norm: str,
    mode: str,
    m: int,
    master_seed: int,
    arm: int,
    workers: int = 1,
) -> int:
    """Rejections of the test over m seeded replications with data from p."""
    base = (
        list(p.mass),
        list(p0.mass),
        params.alpha,
        params.gamma,
        params.n_block,
        norm,
        mode,
        master_seed,
        arm,
    )
    if workers <= 1:
        return _chunk_count(base + (0, m))
    bounds = np.linspace(0, m, 2 * workers + 1, dtype=int)
    tasks = [base + (int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_chunk_count, tasks))


def estimate_risk(cfg: ExperimentConfig, workers: int = 1) -> RiskEstimate:
    """Rejection frequency under the null (and the alternative, if given).

    Deterministic for a fixed config: replication rep of arm a uses the
    stream derived from (master_seed, a, rep).
    """
    p0 = make_family(cfg.family)
    params = cfg.params()
    m = cfg.replications
    k1 = count_rejections(
        p0, p0, params, cfg.norm, cfg.mode, m, cfg.master_seed, ARM_NULL, workers
    )
    type1 = k1 / m
    halfwidth = wilson_halfwidth(k1, m)
    type2 = None
    if cfg.alternative is not None:
        p_alt = realize_alternative(
            cfg.alternative, p0, rng=replication_stream(cfg.master_seed, ARM_BUILD, 0)
        )
        k2 = count_rejections(
            p_alt, p0, params, cfg.norm, cfg.mode, m, cfg.master_seed, ARM_ALT, workers
        )
        type2 = 1.0 - k2 / m
        halfwidth = max(halfwidth, wilson_halfwidth(k2, m))
    return RiskEstimate(type1=type1, type2=type2, ci_halfwidth=halfwidth, m=m)


def bisect_radius(risk_fn, gamma: float, delta_max: float, tol: float) -> SeparationResult:
    """Bisection of a monotone stochastic risk curve against gamma.

    risk_fn(delta) returns (risk, halfwidth). The result is flagged
    indeterminate when both final endpoint intervals contain gamma, i.e.
    neither endpoint can be confidently ordered against the target.
    """
    if not delta_max > 0 or not 0 < tol < 1:
        raise ValueError("need delta_max > 0 and tol in (0, 1)")
    risk_hi, hw_hi = risk_fn(delta_max)
    probes = 1
    if risk_hi > gamma:
        raise SaturatedRadiusError(delta_max, risk_hi)
    lo, risk_lo, hw_lo = 0.0, 1.0, 0.0  # distance 0 is the null itself
    hi = delta_max
    while hi - lo > tol * delta_max:
        mid = (lo + hi) / 2.0
        risk_mid, hw_mid = risk_fn(mid)
        probes += 1
        if risk_mid > gamma:
            lo, risk_lo, hw_lo = mid, risk_mid, hw_mid
        else:
            hi, risk_hi, hw_hi = mid, risk_mid, hw_mid
    indeterminate = (risk_lo - hw_lo <= gamma) and (risk_hi + hw_hi >= gamma)
    return SeparationResult(
        value=(lo + hi) / 2.0,
        bracket_lo=lo,
        bracket_hi=hi,
        indeterminate=indeterminate,
        probes=probes,
    )


def _panel_members(alt_kind: str, p0: ProbVector, norm: str, b_size=None) -> list[tuple]:
    """(kind, b_size) members backing the worst-case type II surrogate."""
    d_even = p0.d - (p0.d % 2)
    if alt_kind == "paired_signs":
        return [("paired_signs", b_size if b_size is not None else d_even)]
    if alt_kind == "mass_shift":
        return [("mass_shift", None)]
    if alt_kind == "panel":
        members = [("paired_signs", d_even), ("mass_shift", None)]
        if d_even > 2:
            members.insert(1, ("paired_signs", 2))
        return members
    raise ValueError(f"unknown alternative kind {alt_kind!r}")


def _member_cap(kind: str, b_size, p0: ProbVector, norm: str) -> float:
    """Largest distance realizable by a panel member around p0."""
    if kind == "mass_shift":
        eps_cap = 1.0 - 1.0 / p0.d
        return eps_cap / mass_shift_epsilon(p0, 1.0, norm)
    order = descending_order(p0)
    eps_cap = float(p0.mass[order[:b_size] - 1].min())
    return eps_cap / paired_signs_epsilon(p0, b_size, 1.0, norm)


def _member_alternative(
    kind: str, b_size, p0: ProbVector, delta: float, norm: str, signs
) -> ProbVector:
    if kind == "mass_shift":
        return mass_shift_alternative(p0, mass_shift_epsilon(p0, delta, norm))
    eps = paired_signs_epsilon(p0, b_size, delta, norm)
    return paired_signs_alternative(p0, b_size, eps, signs=signs)


def empirical_separation(
    p0: ProbVector,
    params: PrivacyParams,
    norm: str,
    mode: str,
    alt_kind: str,
    m: int,
    tol: float,
    master_seed: int,
    delta_max: float | None = None,
    b_size: int | None = None,
    workers: int = 1,
    strict: bool = False,
) -> SeparationResult:
    """Bisection estimate of the smallest distance at which the risk drops
    to gamma, against the chosen alternative family.

    The risk at distance delta is the null rejection rate (estimated once)
    plus the worst type II rate over the panel members feasible at delta.
    Paired signs are drawn once per search so the risk curve is monotone;
    ``b_size`` overrides the paired-signs pair span (default: full support).
    With ``strict`` an indeterminate final bracket raises instead of being
    returned flagged.
    """
    members = _panel_members(alt_kind, p0, norm, b_size)
    caps = [_member_cap(kind, b, p0, norm) for kind, b in members]
    hard_cap = max(caps) * (1.0 - 1e-9)
    if delta_max is None:
        delta_max = min(2.0 if norm == "l1" else math.sqrt(2.0), hard_cap)
    elif delta_max > hard_cap:
        raise ValueError(
            f"delta_max {delta_max:.6g} exceeds the largest distance "
            f"{hard_cap:.6g} realizable by the {alt_kind} alternatives"
        )
    sign_rng = replication_stream(master_seed, ARM_BUILD, 0)
    signs = {
        (kind, b): np.where(sign_rng.random(b // 2) < 0.5, 1.0, -1.0)
        for kind, b in members
        if kind == "paired_signs"
    }
    k_null = count_rejections(
        p0, p0, params, norm, mode, m, master_seed, ARM_NULL, workers
    )
    type1 = k_null / m
    hw1 = wilson_halfwidth(k_null, m)
    probe_counter = [0]

    def risk_fn(delta: float) -> tuple[float, float]:
        arm = ARM_PROBE_BASE + probe_counter[0]
        probe_counter[0] += 1
        worst_type2, worst_hw = -1.0, 0.0
        for (kind, b), cap in zip(members, caps):
            if delta > cap:
                continue
            p_alt = _member_alternative(kind, b, p0, delta, norm, signs.get((kind, b)))
            k = count_rejections(
                p_alt, p0, params, norm, mode, m, master_seed, arm, workers
            )
            type2 = 1.0 - k / m
            if type2 > worst_type2:
                worst_type2, worst_hw = type2, wilson_halfwidth(k, m)
            arm += 1000  # distinct stream per panel member
        if worst_type2 < 0:
            raise ValueError(f"no panel member is feasible at distance {delta:.6g}")
        return type1 + worst_type2, hw1 + worst_hw

    result = bisect_radius(risk_fn, params.gamma, delta_max, tol)
    if strict and result.indeterminate:
        raise IndeterminateRadiusError((result.bracket_lo, result.bracket_hi))
    return result


def calibrate_c(
    m: int, cases: int, rng: np.random.Generator | None = None, seed: int | None = None
) -> float:
    """Empirical lower estimate of the mean-to-signal ratio of the
    interactive statistic.

    For each random (reference, alternative) pair the two-stage pipeline is
    replicated m times; the reported value is the smallest observed ratio
    of the mean statistic to the censored-deviation signal, minus three
    standard errors, clipped to (0, 1).
    """
    if m < 10_000:
        raise ValueError("calibration needs at least 10^4 replications per case")
    if cases < 1:
        raise ValueError("cases must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0 if seed is None else seed)
    worst = math.inf
    for _ in range(cases):
        d = int(rng.integers(5, 13))
        p0 = ProbVector(rng.dirichlet(np.ones(d)))
        target = float(rng.uniform(0.15, 0.35))
        while True:
            try:
                p = random_direction_alternative(p0, target, "l1", rng)
                break
            except ValueError:
                target *= 0.8
        # Budgets large enough that the mean statistic is measurable at the
        # required replication count; low-signal cases would only report
        # their own Monte Carlo noise.
        n = int(rng.choice([2000, 4000]))
        alpha = float(rng.choice([0.6, 1.0]))
        params = PrivacyParams(alpha, 0.1, n)
        tau = tau_of(n, alpha)
        delta = np.abs(p.mass - p0.mass)
        d_tau = float(np.sum(delta * np.minimum(tau, delta)))
        if d_tau <= 0:
            continue  # degenerate pair carries no signal
        full = SupportSet(members=tuple(range(1, d + 1)), d=d)
        vals = np.empty(m)
        for rep in range(m):
            x1 = sample(p, n, rng)
            p_hat = privatize_indicator_block(x1, full, params, rng).mean(axis=0)
            x2 = sample(p, n, rng)
            z2 = privatize_stage2_block(x2, p_hat, p0, alpha, tau, rng)
            vals[rep] = statistic_D(z2, p_hat, p0, tau)
        ratio = float(vals.mean()) / d_tau
        se = float(vals.std(ddof=1)) / math.sqrt(m) / d_tau
        worst = min(worst, ratio - 3.0 * se)
    return float(min(max(worst, 1e-9), 1.0 - 1e-9))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size != ys.size or xs.size < 2:
        raise ValueError("need at least two points")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _family_group_key(cfg: ExperimentConfig) -> tuple:
    fam = cfg.family
    return (fam.kind, fam.beta, fam.eta, fam.c, cfg.norm, cfg.mode)


def config_hash(grid: list[ExperimentConfig]) -> str:
    canon = json.dumps([c.to_dict() for c in grid], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def scaling_sweep(
    grid: list[ExperimentConfig],
    output_path: str,
    tol: float = 0.05,
    workers: int = 1,
) -> list[dict]:
    """Empirical radius, theoretical bounds, and per-family log-log slope
    for every grid point; writes a CSV plus a JSON manifest sidecar.

    The slope column regresses log radius on log d when d varies inside a
    family group, otherwise on log(n alpha^2).
    """
    if not grid:
        raise ValueError("sweep grid must be nonempty")
    rows = []
    for cfg in grid:
        p0 = make_family(cfg.family)
        params = cfg.params()
        alt_kind = cfg.alternative.kind if cfg.alternative is not None else "panel"
        alt_b_size = cfg.alternative.b_size if cfg.alternative is not None else None
        sep = empirical_separation(
            p0,
            params,
            cfg.norm,
            cfg.mode,
            alt_kind,
            cfg.replications,
            tol,
            cfg.master_seed,
            b_size=alt_b_size,
            workers=workers,
        )
        upper = upper_bound(p0, cfg.n_block, params, cfg.norm, cfg.mode)
        lower = lower_bound(p0, cfg.n_block, cfg.alpha, cfg.norm, cfg.mode)
        rows.append(
            {
                "family": cfg.family.kind,
                "d": cfg.family.d,
                "beta": cfg.family.beta,
                "eta": cfg.family.eta,
                "c": cfg.family.c,
                "n_block": cfg.n_block,
                "alpha": cfg.alpha,
                "gamma": cfg.gamma,
                "norm": cfg.norm,
                "mode": cfg.mode,
                "replications": cfg.replications,
                "alternative": alt_kind,
                "master_seed": cfg.master_seed,
                "radius": sep.value,
                "bracket_lo": sep.bracket_lo,
                "bracket_hi": sep.bracket_hi,
                "indeterminate": sep.indeterminate,
                "upper_rate": upper.value,
                "lower_rate": lower.value,
                "slope": math.nan,
            }
        )
    groups: dict[tuple, list[int]] = {}
    for i, cfg in enumerate(grid):
        groups.setdefault(_family_group_key(cfg), []).append(i)
    for idxs in groups.values():
        if len(idxs) < 2:
            continue
        ds = [grid[i].family.d for i in idxs]
        if len(set(ds)) > 1:
            xs = ds
        else:
            xs = [grid[i].n_block * grid[i].alpha ** 2 for i in idxs]
        slope = loglog_slope(xs, [rows[i]["radius"] for i in idxs])
        for i in idxs:
            rows[i]["slope"] = slope
    header = list(rows[0].keys())
    try:
        with open(output_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_csv_cell(row[k]) for k in header])
        manifest = {
            "config_hash": config_hash(grid),
            "code_version": __version__,
            "master_seed": [cfg.master_seed for cfg in grid],
        }
        with open(str(output_path) + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing sweep output to {output_path}: {exc}") from exc
    return rows


def _csv_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return value
