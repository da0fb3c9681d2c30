"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from rdpf.diagnostics import fixed_point_jacobian_oam, spectral_report
from rdpf.divergences import (d2_divergence_wrt_q, eval_divergence, g_func,
                              make_arctan_tv, make_builtin, make_l1)
from rdpf.kernel import newton_m
from rdpf.nam import solve_nam
from rdpf.oracle import binary_rate, binary_rdf, brute_force_lagrangian
from rdpf.prob import hamming
from rdpf.ram import RamConfig, solve_ram
from rdpf.sweep import SweepConfig, format_rows, run_sweep

from acceptance_log import record
from strategies import fd_check, smooth_specs

P15 = np.array([0.85, 0.15])
D2 = hamming(2)
KL = make_builtin("kl")
TV = make_builtin("tv")
C2_SPECS = {"kl": KL, "js": make_builtin("js"), "chi2": make_builtin("chi2"),
            "alpha:0.5": make_builtin("alpha", 0.5)}
C2_S = [(0.5, 0.5), (1.0, 1.0), (2.0, 0.3)]
EPS = 1e-8
SUPPORT_MIN = 1e-9


def _c2_instances():
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(20):
        a = rng.uniform(0.05, 0.95)
        d01, d10 = rng.uniform(0.5, 2.0, 2)
        out.append((np.array([1 - a, a]), np.array([[0.0, d01], [d10, 0.0]])))
    return out


@pytest.fixture(scope="module")
def c1_runs():
    t0 = time.perf_counter()
    runs = []
    for s_D in np.geomspace(0.1, 100, 30):
        runs.append(("nam", s_D, solve_nam(P15, (s_D, 0), D2, KL, eps=EPS, record=True)))
        runs.append(("ram", s_D, solve_ram(P15, (s_D, 0), D2, KL, RamConfig(eps=EPS))))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def c2_runs():
    t0 = time.perf_counter()
    runs = []
    for p, d in _c2_instances():
        for name, spec in C2_SPECS.items():
            for s in C2_S:
                rep = solve_nam(p, s, d, spec, eps=EPS, record=True)
                orc = brute_force_lagrangian(p, s, d, spec, grid_n=64, refine_levels=5)
                runs.append((p, d, name, s, rep, orc))
    return runs, time.perf_counter() - t0


def test_criterion_1_classical_reduction(c1_runs):
    runs, elapsed = c1_runs
    checked, worst = 0, 0.0
    for _, _, rep in runs:
        if rep.converged and 0 < rep.D_s < 0.15:
            checked += 1
            worst = max(worst, abs(rep.rate - binary_rdf(0.15, rep.D_s)))
    ok = checked >= 30 and worst <= 1e-5 and elapsed <= 5.0
    assert record(1, ok, f"{checked} certified points with D in (0, 0.15), "
                         f"max |R - R_closed| = {worst:.2e} nats, {elapsed:.2f} s")


def test_criterion_2_oracle_equivalence(c2_runs):
    runs, elapsed = c2_runs
    worst = max(abs(rep.lagrangian - orc.lagrangian_value) for *_, rep, orc in runs)
    ok = len(runs) == 240 and worst <= 1e-4 and elapsed <= 60.0
    assert record(2, ok, f"{len(runs)} NAM runs vs grid oracle, max Lagrangian gap "
                         f"{worst:.2e}, {elapsed:.1f} s")


def _certificate_excess(rep, eps):
    c = rep.certificate
    support = rep.final_marginal > SUPPORT_MIN
    above = (c.max() - 1) / eps
    below = (1 - c[support].min()) / eps
    return above, below


@pytest.mark.xfail(strict=True, reason=(
    "min_y c(y) - 1 scales like -(u_max/u_min) * omega at the stopping point, so the "
    "gap rule omega < eps cannot hold c within 10 eps of one on skewed marginals"))
def test_criterion_3_optimality_certificate(c1_runs, c2_runs):
    reps = [r for _, _, r in c1_runs[0]] + [run[4] for run in c2_runs[0]]
    reps = [r for r in reps if r.converged]
    above = max(_certificate_excess(r, EPS)[0] for r in reps)
    below = max(_certificate_excess(r, EPS)[1] for r in reps)
    n_bad = sum(max(_certificate_excess(r, EPS)) > 10 for r in reps)
    # how well the deficit is explained by the skew of the marginal times the gap
    scaling = max(_certificate_excess(r, EPS)[1] * EPS
                  / (r.omega * r.final_marginal.max() / r.final_marginal.min())
                  for r in reps if r.omega > 0)
    ok = above <= 10 and below <= 10
    assert record(3, ok, f"{len(reps)} converged runs, worst (max c - 1)/eps = {above:.2f}, "
                         f"worst (1 - min c)/eps = {below:.2f}, {n_bad} runs outside 10 eps; "
                         f"1 - min c <= {scaling:.2f} (u_max/u_min) omega in every run")


@pytest.mark.slow
def test_criterion_4_bound_sandwich(c2_runs):
    lo_slack = hi_slack = math.inf
    n_checks = 0
    for p, d, name, s, rep, _ in c2_runs[0]:
        h = rep.history
        spec = C2_SPECS[name]
        for D, P, lower, upper in zip(h["D"], h["P"], h["lower"], h["upper"]):
            # the 2-D grid loses the thin feasible wedge at small P; the exact
            # binary reduction does not
            r = binary_rate(p, D, P, d, spec).rate
            lo_slack = min(lo_slack, r - lower)
            hi_slack = min(hi_slack, upper - r)
            n_checks += 1
    ok = lo_slack >= -1e-9 and hi_slack >= -1e-9
    assert record(4, ok, f"{n_checks} logged iterates, min(R_oracle - R_L) = {lo_slack:.2e}, "
                         f"min(R_U - R_oracle) = {hi_slack:.2e}")


def test_criterion_5_monotone_descent(c1_runs, c2_runs):
    reps = [r for scheme, _, r in c1_runs[0] if scheme == "nam"]
    reps += [run[4] for run in c2_runs[0]]
    worst = max(float(np.max(np.diff(r.history["V"]), initial=-math.inf)) for r in reps)
    ok = worst <= 1e-10
    assert record(5, ok, f"{len(reps)} NAM runs, max V increase {worst:.2e}")


@pytest.fixture(scope="module")
def tv_runs():
    out = []
    for s_D in (0.5, 1.0, 2.0, 3.0, 5.0):
        for s_P in (0.1, 0.5, 1.0):
            rep = solve_ram(P15, (s_D, s_P), D2, TV, RamConfig(eps=EPS, max_iters=20_000,
                                                               sp_guard="off"))
            out.append(((s_D, s_P), rep))
    return out


def test_criterion_6_tv_oracle_agreement(tv_runs):
    errs = []
    for _, rep in tv_runs:
        if rep.converged and rep.D_s <= 0.15:
            r = binary_rate(P15, rep.D_s, rep.P_s, D2, TV).rate
            errs.append(abs(rep.rate - r))
    ok = len(errs) >= 5 and max(errs) <= 1e-4
    assert record(6, ok, f"{len(errs)} certified RAM+TV points with D <= 0.15, "
                         f"max |R - R_oracle| = {max(errs):.2e}")


@pytest.mark.xfail(strict=True, reason=(
    "RAM+TV converges beyond D = 0.15 to positive rates that the exact oracle confirms; "
    "with a tight perception cap the rate stays positive up to D = 2p(1-p)"))
def test_criterion_6_beyond_boundary(tv_runs):
    offenders = []
    for s, rep in tv_runs:
        # region II behaviour: the certified bracket does not exclude rate zero
        if rep.converged and rep.D_s > 0.15 and rep.lower_bound > 1e-9:
            r = binary_rate(P15, rep.D_s, rep.P_s, D2, TV).rate
            offenders.append(f"s={s}: D={rep.D_s:.4f}, R={rep.rate:.4f} (oracle {r:.4f})")
    beyond = sum(rep.D_s > 0.15 for _, rep in tv_runs)
    ok = not offenders
    assert record(6, ok, f"{beyond} points beyond D = 0.15, certified positive rate at: "
                         + ("; ".join(offenders) or "none"))


def test_criterion_7_smooth_tv(rng):
    x = np.linspace(0, 10, 100_001)
    gaps = {n: float(np.max(np.abs(make_arctan_tv(n).f(x) - np.abs(x - 1))))
            for n in (1, 10, 100)}
    uniform_ok = all(g <= 2 / (n * math.pi) for n, g in gaps.items())

    l1 = make_l1()
    worst_pair = -math.inf
    for _ in range(1000):
        k = int(rng.integers(2, 7))
        p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        tv = eval_divergence(l1, p, q)
        for n in (1, 10, 100):
            worst_pair = max(worst_pair, eval_divergence(make_arctan_tv(n), p, q) - tv)
    pairs_ok = worst_pair <= 1e-12

    worst_rate = -math.inf
    for n in (1, 10, 100):
        spec = make_arctan_tv(n)
        for s in ((1.0, 0.5), (2.0, 1.0), (3.0, 2.0)):
            rep = solve_nam(P15, s, D2, spec, eps=1e-10)
            try:
                r_tv = binary_rate(P15, rep.D_s, rep.P_s, D2, l1).rate
            except ValueError:
                r_tv = math.inf
            worst_rate = max(worst_rate, rep.rate - r_tv)
    rate_ok = worst_rate <= 1e-4

    ok = uniform_ok and pairs_ok and rate_ok
    assert record(7, ok, "sup gaps " + ", ".join(
        f"n={n}: {g:.4f} (<= {2 / (n * math.pi):.4f})" for n, g in gaps.items())
        + f"; max D_fn - TV over 3000 pairs {worst_pair:.2e}"
        + f"; max R_fn - R_TV {worst_rate:.2e}")


def test_criterion_8_spectral_theory():
    s = (1.0, 1.0)
    rep = spectral_report(P15, s, D2, KL, eps=1e-10)
    q = solve_nam(P15, s, D2, KL, eps=1e-14).final_marginal
    m_eigs = np.linalg.eigvals(newton_m(P15, q, q, s, D2, KL)).real
    j_eigs = np.abs(np.linalg.eigvals(fixed_point_jacobian_oam(P15, q, s, D2, KL)))
    theta = float(j_eigs.max())
    ok = (m_eigs.min() > 0 and m_eigs.max() <= 1 + 1e-9 and 0 <= theta < 1
          and rep.fit_r2 is not None and rep.fit_r2 > 0.99
          and rep.empirical_rate <= math.log(theta) + 0.05)
    assert record(8, ok, f"eig(M*) in [{m_eigs.min():.4f}, {m_eigs.max():.4f}], "
                         f"theta_max = {theta:.4f}, slope {rep.empirical_rate:.4f} "
                         f"vs log theta {math.log(theta):.4f}, R^2 = {rep.fit_r2:.5f}")


def test_criterion_9_derivatives():
    x = np.geomspace(1e-3, 1e3, 400)
    v = np.geomspace(1e-3, 1.0, 200)
    failures = []
    for spec in smooth_specs():
        checks = {"df": fd_check(spec.f, spec.df, x),
                  "d2f": fd_check(spec.df, spec.d2f, x)}
        for p in (0.05, 0.3, 0.7):
            # g is the partial of v f(p/v) in v; the curvature is the partial of g
            checks[f"g_func(p={p})"] = fd_check(lambda t: t * spec.f(p / t),
                                                lambda t: g_func(spec, p, t), v)
            d2 = np.vectorize(lambda t: d2_divergence_wrt_q(spec, [p], [t], 0))
            # g = f(r) - r f'(r) cancels two terms of size ~ r, which sets its rounding
            r = p / v
            cancel = np.abs(spec.f(r)) + np.abs(r * spec.df(r))
            checks[f"d2_wrt_q(p={p})"] = fd_check(lambda t: g_func(spec, p, t), d2, v,
                                                  scale=cancel)
        failures += [f"{spec.name}:{k}" for k, excess in checks.items() if excess > 0]
    ok = not failures
    assert record(9, ok, f"{len(smooth_specs())} smooth specs, 4 derivative checks each "
                         f"at rel 1e-5; failures: {failures or 'none'}")


@pytest.mark.slow
def test_criterion_10_surface_monotonicity():
    cfg = SweepConfig(source=P15, divergence="js", scheme="nam",
                      sD_grid="log:0.3:20:15", sP_grid="0:4:15")
    rows = run_sweep(cfg)
    again = run_sweep(cfg)
    identical = format_rows(rows) == format_rows(again)
    good = [r for r in rows if r.converged]
    D = np.array([r.D for r in good])
    P = np.array([r.P for r in good])
    R = np.array([r.R for r in good])
    # any point dominated in both D and P must have at least the rate of the other
    dominated = (D[:, None] <= D[None, :]) & (P[:, None] <= P[None, :])
    violation = float(np.max(np.where(dominated, R[None, :] - R[:, None], -math.inf)))
    ok = identical and len(good) == 225 and violation <= 1e-6
    assert record(10, ok, f"{len(good)}/225 converged, max rate increase along "
                          f"(D, P)-dominance {violation:.2e}, byte-identical reruns: {identical}")
