"""The nine acceptance criteria, each at its stated tolerance and runtime limit.

Every test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
"acceptance criteria" section of the pytest summary.
"""
import io
import math

import numpy as np
import pytest
from scipy import stats

from renewcouple import (
    CouplingConfig,
    Exponential,
    Gamma,
    Uniform,
    common_part,
    decompose,
    kappa_R,
    lorden_check,
    sample_tau,
    series_constants,
    simulate_recurrence,
    stationary_averaged_K,
    tau_moment_bound,
    tv_binned_curve,
    tv_coupling_tail,
)
from renewcouple import _rng
from renewcouple.bounds import optimize_R, tv_bound_from_K
from renewcouple.cli import main
from renewcouple.lemma import sample_coupled_many

pytestmark = pytest.mark.acceptance

SEED = 20241016


def test_criterion_1_lemma_probability(criterion):
    c = criterion(1, "coupling-lemma probability", 5.0)
    p1, p2 = Exponential(1.0), Exponential(2.0)
    kappa = common_part(p1, p2)
    dec = decompose(p1, p2)
    n = 100_000
    u = _rng.stream(SEED, _rng.LEMMA, 1).random((3, n))
    _, _, same = sample_coupled_many(dec, *u)
    freq = float(same.mean())
    tol = 4 * math.sqrt(0.75 * 0.25 / n)
    ok = abs(kappa - 0.75) <= 1e-6 and abs(dec.kappa - 0.75) <= 1e-6 and abs(freq - 0.75) <= tol
    assert c.verdict(ok, f"kappa={kappa:.12f} (|err|<=1e-6), frequency={freq:.5f} (|err|<={tol:.4f})")


def test_criterion_2_lemma_marginals(criterion):
    c = criterion(2, "coupling-lemma marginals", 30.0)
    pairs = [
        ("Exp/Exp", Exponential(1.0), Exponential(2.0)),
        ("Uniform/Uniform-shifted", Uniform(0.0, 1.0), Uniform(0.5, 1.5)),
        ("Exp/Gamma", Exponential(1.0), Gamma(2.0, 1.0)),
    ]
    n = 1_000_000
    pvals, parts = [], []
    for k, (name, a, b) in enumerate(pairs):
        dec = decompose(a, b)
        u = _rng.stream(SEED, _rng.LEMMA, 2, k).random((3, n))
        v1, v2, _ = sample_coupled_many(dec, *u)
        p = (stats.kstest(v1, a.cdf).pvalue, stats.kstest(v2, b.cdf).pvalue)
        pvals += p
        parts.append(f"{name} p=({p[0]:.3g}, {p[1]:.3g})")
    ok = min(pvals) >= 1e-3
    assert c.verdict(ok, "KS at 1e-3, N=1e6: " + ", ".join(parts))


def test_criterion_3_lorden(criterion):
    c = criterion(3, "Lorden inequality", 60.0)
    ok, parts = True, []
    for name, law in (("Exp(1)", Exponential(1.0)), ("Uniform[0,1]", Uniform(0.0, 1.0)),
                      ("Gamma(2,1)", Gamma(2.0, 1.0))):
        rep = lorden_check(law, 0.0, 50 * law.mean, n_paths=100_000, seed=SEED)
        ci = rep.estimate.ci
        bound_ok = rep.estimate.mean <= rep.theta + 3 * ci
        eq_ok = abs(rep.estimate.mean - rep.equilibrium_mean) <= 3 * ci
        ok &= bound_ok and eq_ok
        parts.append(f"{name} E D_t={rep.estimate.mean:.4f}+-{ci:.4f} Theta={rep.theta:.4f} "
                     f"eq={rep.equilibrium_mean:.4f}")
    assert c.verdict(ok, "; ".join(parts))


def test_criterion_4_series_constants(criterion):
    c = criterion(4, "series constants", 1.0)
    K1a, K2a = series_constants(1.0, 0.5)
    K1b, _ = series_constants(2.0, 0.5)
    errs = (abs(K1a - 2.0), abs(K2a - 8.0), abs(K1b - 8.0))
    ok = max(errs) <= 1e-10
    assert c.verdict(ok, f"K1(1)={K1a!r}, K2(1)={K2a!r}, K1(2)={K1b!r}; max error {max(errs):.2e}")


def test_criterion_5_kappa_R(criterion):
    c = criterion(5, "kappa_R", 10.0)
    exp_vals = [kappa_R(Exponential(rate), R) for rate in (0.5, 1.0, 3.0) for R in (0.1, 1.0, 4.0, 25.0)]
    ku = kappa_R(Uniform(0.0, 1.0), 0.5)
    exp_err = max(abs(v - 1.0) for v in exp_vals)
    ok = exp_err <= 1e-9 and abs(ku - 0.5) <= 1e-4
    assert c.verdict(ok, f"Exp max |kappa_R-1|={exp_err:.1e} over 12 (rate, R); Uniform R=0.5 kappa_R={ku:.8f}")


CHAIN_FAMILIES = [
    ("Exp(1)", Exponential(1.0), 5.0, 0.0, None),
    ("Gamma(2,1)", Gamma(2.0, 1.0), 4.0, 0.5, None),
    ("Uniform[0,1]", Uniform(0.0, 1.0), 0.9, 0.0, 0.9),
]


def test_criterion_6_successful_coupling(criterion):
    c = criterion(6, "successful coupling", 120.0)
    n_runs, n_ref = 10_000, 100_000
    ok, parts = True, []
    for k, (name, law, b1, b2, R) in enumerate(CHAIN_FAMILIES):
        t = np.array([1.0, 3.0, 10.0]) * law.mean
        cfg = CouplingConfig(law, b1, b2, R, seed=SEED + k).resolved()
        s = sample_tau(cfg, n_runs, t=t)
        pmin = 1.0
        for j, b in enumerate((b1, b2)):
            ref = simulate_recurrence(law, b, t, n_ref, seed=SEED + 10 * k + j).backward
            for i in range(t.size):
                pmin = min(pmin, stats.ks_2samp(s.backward[:, i, j], ref[:, i]).pvalue)
        same = float(np.mean(s.identical_after_tau))
        failed = s.n_failed / n_runs
        ok &= pmin >= 1e-3 and same == 1.0 and failed < 1e-3
        parts.append(f"{name} min KS p={pmin:.3g}, identical after tau {same:.0%}, non-coupled {failed:.1e}")
    assert c.verdict(ok, "; ".join(parts))


def test_criterion_7_moment_domination(criterion):
    c = criterion(7, "moment-bound domination", 120.0)
    n_runs = 10_000
    ok, parts = True, []
    for k, (name, law, b1, b2) in enumerate((("Exp(1)", Exponential(1.0), 5.0, 0.5),
                                             ("Gamma(2,1)", Gamma(2.0, 1.0), 4.0, 0.5))):
        # one R serves both alphas: every bound holds for any admissible R
        R, _ = optimize_R(law, 2.0, b1)
        kR = kappa_R(law, R)
        fixed = sample_tau(CouplingConfig(law, b1, b2, R, seed=SEED + k), n_runs)
        stat = sample_tau(CouplingConfig(law, b1, 0.0, R, seed=SEED + 100 + k), n_runs, stationary_b2=True)
        for alpha in (1.0, 2.0):
            varpi = tau_moment_bound(law, alpha, R, b1, b2, kappa=kR)
            K = stationary_averaged_K(law, alpha, R, b1, kappa=kR)
            for sample, bound, label in ((fixed, varpi, "varpi"), (stat, K, "K")):
                x = np.where(sample.coupled, sample.tau, np.inf) ** alpha
                m, se = float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))
                ok &= m <= bound + 3 * se
                parts.append(f"{name} a={alpha:g} E tau^a={m:.4g} <= {label}={bound:.4g}")
    assert c.verdict(ok, "; ".join(parts))


def test_criterion_8_tv_decay(criterion):
    c = criterion(8, "end-to-end TV decay", 300.0)
    law, b1, alpha = Exponential(1.0), 5.0, 2.0
    t = np.geomspace(5.0, 500.0, 10)
    R, K = optimize_R(law, alpha, b1)
    binned = tv_binned_curve(law, b1, t, n_paths=100_000, bins=128, seed=SEED)
    tail = tv_coupling_tail(law, b1, alpha, t, n_runs=100_000, seed=SEED, R=R)
    bound = tv_bound_from_K(K, alpha, t)
    order = binned.tv_hat <= tail.tv_hat + binned.ci_halfwidth + tail.ci_halfwidth
    dom = tail.tv_hat <= bound + tail.ci_halfwidth
    ok = bool(order.all() and dom.all())
    assert c.verdict(ok, f"R*={R:.4f} K={K:.4g}; binned<=tail+CI at {int(order.sum())}/10, "
                         f"tail<=2K/t^a+CI at {int(dom.sum())}/10; tail={np.round(tail.tv_hat, 4).tolist()}")


def test_criterion_9_determinism(criterion):
    c = criterion(9, "determinism", None)
    argv = ["verify", "--b1", "5", "--alpha", "2", "--paths", "20000", "--runs", "5000", "--seed", "7"]
    reports, codes = [], []
    for threads in ("1", "1", "4"):
        out = io.StringIO()
        codes.append(main(argv + ["--threads", threads], out, io.StringIO()))
        reports.append(out.getvalue().encode())
    ok = reports[0] == reports[1] == reports[2] and len(reports[0]) > 0
    assert c.verdict(ok, f"3 verify reports (threads 1, 1, 4) byte-identical: {ok}; exit codes {codes}")
