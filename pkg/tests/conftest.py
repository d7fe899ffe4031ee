"""Shared fixtures for the acceptance suite.

The exponent-recovery sweeps are expensive (minutes each), and two
acceptance checks share the noninteractive sweep, so radii are computed
once per session here.
"""
import math
import os
import time

import numpy as np
import pytest

from privgof.distributions import FamilySpec, make_family
from privgof.harness import SaturatedRadiusError, empirical_separation
from privgof.privacy import PrivacyParams, c_alpha, tau_of
from privgof.teststats import critical_values, select_B

WORKERS = min(2, os.cpu_count() or 1)

SWEEP_DS = (10, 20, 40, 80)
SWEEP_GAMMA = 0.3
NI_BUDGET = 65_000  # n * alpha^2 for the noninteractive sweep (alpha = 1)
INT_BUDGET = 6_500
INT_L2_BUDGET = 10_500


def predict_radius(d: int, n: int, alpha: float, gamma: float, norm: str, mode: str) -> float:
    """Normal-approximation guess of the detection radius against the
    full-support paired-signs alternative; used only to place the initial
    bisection bracket (the search still verifies its endpoints)."""
    p0 = make_family(FamilySpec("uniform", d))
    params = PrivacyParams(alpha, gamma, n)
    _, b = select_B(p0, n, alpha, norm, mode)
    c1, _, c3 = critical_values(n, b.size, params)
    if mode == "noninteractive":
        sigma0 = math.sqrt(164 * b.size / (n * (n - 1) * alpha**4))
        signal = c1 + sigma0
        return d * math.sqrt(signal / b.size)
    tau = tau_of(n, alpha)
    sigma_w = math.sqrt((0.5 + 8 / alpha**2) / n)
    # Linearized response of the censored estimate to a mean shift.
    kappa = math.erf(tau / sigma_w / math.sqrt(2.0))
    sigma_d = c_alpha(alpha) * tau / math.sqrt(n)
    signal = (c3 + sigma_d) / kappa
    if norm == "l1":
        return math.sqrt(d * signal)
    return math.sqrt(signal)


def separation_with_warm_bracket(
    d: int, n: int, gamma: float, norm: str, mode: str, m: int, tol: float, master_seed: int
):
    """Radius search with the cap placed near the predicted radius; falls
    back to the feasibility cap if the warm cap saturates."""
    p0 = make_family(FamilySpec("uniform", d))
    params = PrivacyParams(1.0, gamma, n)
    feasible = d * (1.0 / d) if norm == "l1" else math.sqrt(d) * (1.0 / d)
    feasible *= 1.0 - 1e-9
    warm = min(feasible, 2.2 * predict_radius(d, n, 1.0, gamma, norm, mode))
    try:
        return empirical_separation(
            p0, params, norm, mode, "paired_signs", m, tol,
            master_seed=master_seed, delta_max=warm, workers=WORKERS,
        )
    except SaturatedRadiusError:
        return empirical_separation(
            p0, params, norm, mode, "paired_signs", m, tol,
            master_seed=master_seed, delta_max=feasible, workers=WORKERS,
        )


@pytest.fixture(scope="session")
def ni_l1_radii():
    t0 = time.time()
    radii = {
        d: separation_with_warm_bracket(
            d, NI_BUDGET, SWEEP_GAMMA, "l1", "noninteractive", 1000, 0.06, 8800 + d
        )
        for d in SWEEP_DS
    }
    return radii, time.time() - t0


@pytest.fixture(scope="session")
def int_l1_radii():
    t0 = time.time()
    radii = {
        d: separation_with_warm_bracket(
            d, INT_BUDGET, SWEEP_GAMMA, "l1", "interactive", 1000, 0.06, 9900 + d
        )
        for d in SWEEP_DS
    }
    return radii, time.time() - t0


@pytest.fixture(scope="session")
def int_l1_radius_at_ni_budget():
    # Interactive radius at the noninteractive sweep's budget, d = 80, for
    # the head-to-head comparison.
    t0 = time.time()
    res = separation_with_warm_bracket(
        80, NI_BUDGET, SWEEP_GAMMA, "l1", "interactive", 1000, 0.06, 7700
    )
    return res, time.time() - t0


def criterion_line(number: int, ok: bool, detail: str) -> None:
    print(f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'} - {detail}")
