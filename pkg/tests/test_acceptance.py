"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines
as they appear.  Criteria that compare against reference values are asserted
at their stated tolerances; where a target is unattainable from the documented
demand model the test fails honestly and the printed detail names the exact
cells and margins.
"""

import math

import numpy as np
from scipy import stats

from bookingbench.controls import compute_controls, emsrb, emsrb_mr, fcfs_controls
from bookingbench.demand import make_volume_outlier
from bookingbench.detectors.base import DetectorSpec
from bookingbench.detectors.functional import bootstrap_threshold, mfhd
from bookingbench.evaluate import (
    bcr,
    foresight_sweep,
    hindsight_report,
    pool_reports,
    revenue_gain_experiment,
    roc_sweep,
)
from bookingbench.forecast import forecast_demand, scenario_for_demand_factor
from bookingbench.rng import seed_sequence
from bookingbench.scenario import default_regular_scenario
from bookingbench.simulate import build_collection, revenue_comparison
from bookingbench._parallel import parallel_map

from conftest import PAPER_FARES, PAPER_FORECASTS, PAPER_LIMITS

WORKERS = 4

PAPER_RATIOS = {
    (0.9, "emsrb"): 1.03,
    (0.9, "emsrb_mr"): 1.06,
    (1.2, "emsrb"): 1.04,
    (1.2, "emsrb_mr"): 1.08,
    (1.5, "emsrb"): 1.05,
    (1.5, "emsrb_mr"): 1.09,
}


def verdict(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    print(line)
    return line


def benchmark_collection(base, controls, seed, n=500, freq=0.05):
    outs = [make_volume_outlier(base, 0.25), make_volume_outlier(base, -0.25)]
    return build_collection(n, freq, outs, base, controls, seed=seed, workers=WORKERS)


def test_criterion_1_booking_limit_tables():
    import time

    t0 = time.time()
    misses = []
    for factor, (mu, var) in PAPER_FORECASTS.items():
        for name, fn in (("emsrb", emsrb), ("emsrb_mr", emsrb_mr)):
            got = np.array(fn(mu, var, PAPER_FARES, 200).limits)
            want = np.array(PAPER_LIMITS[(name, factor)])
            for j in np.where(np.abs(got - want) > 1)[0]:
                misses.append(f"{name}/f{factor}/class{j + 1}: {got[j]} vs {want[j]}")
    runtime = time.time() - t0
    ok = not misses and runtime < 1.0
    line = verdict(
        1,
        ok,
        f"{42 - len(misses)}/42 published booking-limit entries within +-1 seat "
        f"({runtime * 1000:.0f} ms)" + (f"; misses: {'; '.join(misses)}" if misses else ""),
    )
    assert ok, line


def test_criterion_2_forecast_table():
    scen = scenario_for_demand_factor(default_regular_scenario(), 1.2)
    fc = forecast_demand(scen, 100, 206)
    mu_paper = PAPER_FORECASTS[1.2][0]
    z = np.abs(fc.mu - mu_paper) / fc.se_mu
    bad = [
        f"class{j + 1}: mu {fc.mu[j]:.1f} vs {mu_paper[j]} ({z[j]:.1f} se)"
        for j in range(7)
        if z[j] > 3
    ]
    in_band = int(((fc.se_mu >= 0.3) & (fc.se_mu <= 0.6)).sum())
    ok = not bad and in_band >= 5
    line = verdict(
        2,
        ok,
        f"{7 - len(bad)}/7 class means within 3 se of the published column, "
        f"{in_band}/7 se_mu in [0.3, 0.6]" + (f"; misses: {'; '.join(bad)}" if bad else ""),
    )
    assert ok, line


def test_criterion_3_revenue_factors():
    base = default_regular_scenario()
    factors = (0.9, 1.2, 1.5)
    scenarios = {f: scenario_for_demand_factor(base, f) for f in factors}
    controls = {}
    for i, f in enumerate(factors):
        fc = forecast_demand(scenarios[f], 100, seed_sequence(301, i))
        controls[f] = {
            h: compute_controls(fc, base.fare_structure, h)
            for h in ("fcfs", "emsrb", "emsrb_mr")
        }
    rows = revenue_comparison(scenarios, controls, 2000, 303, workers=WORKERS)
    by_key = {(r["demand_factor"], r["policy"]): r for r in rows}

    problems = []
    fcfs_rev = by_key[(0.9, "fcfs")]["mean_revenue"]
    if abs(fcfs_rev / 28948.50 - 1) > 0.02:
        problems.append(f"FCFS f0.9 {fcfs_rev:.1f} vs 28948.50")
    for key, target in PAPER_RATIOS.items():
        got = by_key[key]["ratio_vs_fcfs"]
        if abs(got - target) > 0.02:
            problems.append(f"{key[1]}/f{key[0]}: {got:.3f} vs {target}")

    # diagnostic: same simulation fed the published forecast table instead
    alt_controls = {
        f: {
            "fcfs": fcfs_controls(base.fare_structure),
            "emsrb": emsrb(*PAPER_FORECASTS[f], PAPER_FARES, 200),
            "emsrb_mr": emsrb_mr(*PAPER_FORECASTS[f], PAPER_FARES, 200),
        }
        for f in factors
    }
    alt = {
        (r["demand_factor"], r["policy"]): r["ratio_vs_fcfs"]
        for r in revenue_comparison(scenarios, alt_controls, 2000, 304, workers=WORKERS)
    }
    alt_ok = sum(abs(alt[k] - t) <= 0.02 for k, t in PAPER_RATIOS.items())
    ok = not problems
    line = verdict(
        3,
        ok,
        f"FCFS f0.9 {fcfs_rev:.1f} (target 28948.50); "
        f"{6 - sum(1 for p in problems if '/f' in p)}/6 ratio cells within +-0.02 "
        f"from own forecasts; {alt_ok}/6 when controls come from the published "
        f"forecast table" + (f"; misses: {'; '.join(problems)}" if problems else ""),
    )
    assert ok, line


def _hindsight_rep(args):
    rep, = args if isinstance(args, tuple) else (args,)
    base = default_regular_scenario()
    fc = forecast_demand(base, 100, seed_sequence(401))
    controls = compute_controls(fc, base.fare_structure, "emsrb_mr")
    coll = benchmark_collection(base, controls, seed_sequence(402, rep))
    specs = [
        DetectorSpec("functional_depth"),
        DetectorSpec("poisson_tolerance"),
        DetectorSpec("kmeans_euclidean"),
        DetectorSpec("robust_z"),
    ]
    return hindsight_report(coll, specs, seed_sequence(403, rep))


def test_criterion_4_hindsight_detection():
    reports = parallel_map(_hindsight_rep, range(10), workers=WORKERS)
    pooled = pool_reports(reports)
    tau = default_regular_scenario().n_intervals
    got = {c.detector: bcr(c.counts) for c in pooled.cells if c.tau == tau}
    bands = {
        "functional_depth": (0.85, 1.00),
        "poisson_tolerance": (0.64, 0.87),
        "kmeans_euclidean": (0.56, 0.79),
        "robust_z": (0.45, 0.55),
    }
    problems = [
        f"{d}: bcr {got[d]:.3f} outside [{lo:.2f}, {hi:.2f}]"
        for d, (lo, hi) in bands.items()
        if not lo <= got[d] <= hi
    ]
    ok = not problems
    line = verdict(
        4,
        ok,
        "pooled hindsight BCR over 10 collections: "
        + ", ".join(f"{d}={got[d]:.3f}" for d in bands)
        + (f"; misses: {'; '.join(problems)}" if problems else ""),
    )
    assert ok, line


def _foresight_rep(rep):
    base = default_regular_scenario()
    fc = forecast_demand(base, 100, seed_sequence(501))
    controls = compute_controls(fc, base.fare_structure, "emsrb_mr")
    coll = benchmark_collection(base, controls, seed_sequence(502, rep))
    tau = base.n_intervals - 10
    specs = [
        DetectorSpec("functional_depth", extrapolation="arima"),
        DetectorSpec("functional_depth"),
        DetectorSpec("kmeans_euclidean"),
    ]
    rep_report = foresight_sweep(
        coll, specs, seed_sequence(503, rep), taus=[tau],
        capacity=base.fare_structure.capacity,
    )
    return {s.name: bcr(rep_report.cell(s.name, tau).counts) for s in specs}


def sign_test_greater(a, b):
    wins = int(np.sum(np.array(a) > np.array(b)))
    losses = int(np.sum(np.array(a) < np.array(b)))
    if wins + losses == 0:
        return 1.0
    return stats.binomtest(wins, wins + losses, alternative="greater").pvalue


def test_criterion_5_foresight_ordering():
    results = parallel_map(_foresight_rep, range(24), workers=WORKERS)
    fa = [r["functional_depth+arima"] for r in results]
    fd = [r["functional_depth"] for r in results]
    km = [r["kmeans_euclidean"] for r in results]
    p1 = sign_test_greater(fa, fd)
    p2 = sign_test_greater(fd, km)
    ok = p1 < 0.05 and p2 < 0.05
    line = verdict(
        5,
        ok,
        f"tau=T-10 mean BCR: functional+arima {np.mean(fa):.3f}, functional "
        f"{np.mean(fd):.3f}, kmeans {np.mean(km):.3f}; paired sign tests "
        f"p(fa>fd)={p1:.3f}, p(fd>km)={p2:.3f} over 24 replications",
    )
    assert ok, line


def test_criterion_6_revenue_asymmetry():
    base = default_regular_scenario()
    pcts = (-0.25, -0.125, 0.125, 0.25)
    expected_sign = {
        "emsrb": {-0.25: +1, -0.125: +1, 0.125: -1, 0.25: -1},
        "emsrb_mr": {-0.25: +1, -0.125: +1, 0.125: +1, 0.25: +1},
    }
    problems = []
    spot = None
    for heuristic in ("emsrb", "emsrb_mr"):
        for factor in (1.2, 1.5):
            scen = scenario_for_demand_factor(base, factor)
            rows = revenue_gain_experiment(
                scen, pcts, [0], heuristic, n_reps=2000,
                seed=600 + int(10 * factor), workers=WORKERS,
            )
            for r in rows:
                change, lo, hi = r["pct_revenue_change"], r["ci_low"], r["ci_high"]
                want = expected_sign[heuristic][r["outlier_pct"]]
                confirmed = lo > 0 if want > 0 else hi < 0
                if not confirmed:
                    problems.append(
                        f"{heuristic}/f{factor}/{r['outlier_pct']:+}: "
                        f"{change:+.1f}% (want sign {'+' if want > 0 else '-'})"
                    )
                if heuristic == "emsrb_mr" and factor == 1.5 and r["outlier_pct"] == -0.25:
                    spot = change
    spot_ok = spot is not None and abs(spot - 16.2) <= 5.0
    if not spot_ok:
        problems.append(f"spot-check emsrb_mr/f1.5/-25%: {spot:+.1f}% vs +16.2 +-5")
    ok = not problems
    line = verdict(
        6,
        ok,
        f"16 sign cells at 95% confidence, spot-check {spot:+.1f}% (target +16.2 +-5)"
        + (f"; misses: {'; '.join(problems)}" if problems else ""),
    )
    assert ok, line


def _collection_job(args):
    seed, workers = args
    base = default_regular_scenario()
    fc = forecast_demand(base, 50, seed_sequence(701))
    controls = compute_controls(fc, base.fare_structure, "emsrb_mr")
    outs = [make_volume_outlier(base, -0.25)]
    return build_collection(80, 0.1, outs, base, controls, seed=seed, workers=workers)


def test_criterion_7_property_suites():
    checks = {}
    rng = np.random.default_rng(0)

    # nested-limit monotonicity on fuzzed inputs
    mono = True
    for _ in range(100):
        n = int(rng.integers(2, 8))
        c = emsrb(
            rng.uniform(0, 60, n), rng.uniform(0, 50, n),
            np.sort(rng.uniform(60, 600, n))[::-1], int(rng.integers(20, 250)),
        )
        mono &= all(a >= b for a, b in zip(c.limits, c.limits[1:]))
    checks["nested-limit monotonicity"] = mono

    # EMSRb fare-scale invariance
    mu, var = PAPER_FORECASTS[1.2]
    checks["fare-scale invariance"] = all(
        emsrb(mu, var, np.asarray(PAPER_FARES) * s, 200).protection
        == emsrb(mu, var, PAPER_FARES, 200).protection
        for s in (0.01, 3.0, 250.0)
    )

    # halfspace rank invariance under a monotone per-interval transform
    from bookingbench.detectors.functional import _column_depths

    X = rng.normal(size=(40, 6))
    Y = X.copy()
    Y[:, 4] = np.expm1(Y[:, 4]) * 3 + 1
    checks["halfspace rank invariance"] = np.allclose(
        _column_depths(X)[:, 4], _column_depths(Y)[:, 4]
    )

    # MFHD weights sum to one
    checks["mfhd weights sum to 1"] = all(
        abs(mfhd(rng.normal(size=(30, t))).weights.sum() - 1) < 1e-12 for t in (2, 7, 18)
    )

    # bootstrap-threshold calibration on regular-only collections
    base = default_regular_scenario()
    fc = forecast_demand(base, 100, seed_sequence(702))
    controls = compute_controls(fc, base.fare_structure, "emsrb_mr")
    rates = []
    for r in range(3):
        coll = build_collection(500, 0.0, [], base, controls,
                                seed=seed_sequence(703, r), workers=WORKERS)
        X = coll.matrix().astype(float)
        depths = mfhd(X).depths
        thr = bootstrap_threshold(X, seed_sequence(704, r), depths=depths)
        rates.append(float((depths < thr).mean()))
    calib = float(np.mean(rates))
    checks["bootstrap calibration 0.01+-0.01"] = 0.0 <= calib <= 0.02

    # ROC monotonicity and random-score AUC
    aucs = []
    monotone = True
    for _ in range(1000):
        scores = rng.normal(size=30)
        truth = rng.random(30) < 0.3
        if not truth.any() or truth.all():
            continue
        curve = roc_sweep(scores, truth)
        pts = sorted((f, t) for f, t, _ in curve.points)
        monotone &= all(t1 <= t2 for (_, t1), (_, t2) in zip(pts, pts[1:]))
        aucs.append(curve.auc)
    checks["roc monotonicity"] = monotone
    checks["random-score auc ~ 0.5"] = abs(np.mean(aucs) - 0.5) < 0.05

    # OLS residual column means are zero
    from bookingbench.empirical import make_fixture, pointwise_regression

    pats, _ = make_fixture(120, seed=5)
    _, resid = pointwise_regression(pats)
    checks["ols residual means zero"] = bool(np.allclose(resid.mean(axis=0), 0, atol=1e-9))

    # ARIMA / IGARCH simulate-and-refit
    from bookingbench.extrapolate import fit_arma, fit_igarch

    x = np.empty(400)
    x[0] = 5.0
    for t in range(1, 400):
        x[t] = 5.0 + 0.8 * (x[t - 1] - 5.0) + rng.standard_normal()
    checks["arima refit phi within 0.1"] = abs(fit_arma(x, 1, 0).phi[0] - 0.8) <= 0.1
    n, a, w = 500, 0.3, 0.2
    e = np.zeros(n)
    y = np.zeros(n)
    s2 = 1.0
    for t in range(n):
        if t > 0:
            s2 = w + a * e[t - 1] ** 2 + (1 - a) * s2
        e[t] = rng.standard_normal() * math.sqrt(s2)
        y[t] = 1.0 + e[t]
    checks["igarch refit alpha within 0.15"] = abs(fit_igarch(y).alpha - a) <= 0.15

    # bit-exact reproducibility across worker counts
    a1 = _collection_job((99, 1))
    a4 = _collection_job((99, 4))
    checks["bit-exact across workers"] = bool(
        np.array_equal(a1.matrix(), a4.matrix()) and a1.kinds() == a4.kinds()
    )

    failures = [k for k, v in checks.items() if not v]
    ok = not failures
    detail = ", ".join(f"{k}:{'ok' if v else 'FAIL'}" for k, v in checks.items())
    line = verdict(7, ok, f"(calibration rate {calib:.3f}) {detail}")
    assert ok, line


def test_criterion_8_empirical_fixture_check():
    from bookingbench.empirical import detect_empirical, make_fixture

    pats, truth = make_fixture(400, seed=801, outlier_fraction=0.05)
    result = detect_empirical(pats, seed=802)
    frac = result["flagged_fraction"]
    ok = 0.02 <= frac <= 0.10
    line = verdict(
        8,
        ok,
        f"synthetic railway fixture: {100 * frac:.1f}% flagged "
        f"(analogue of the withheld-data 5%, accepted band 2-10%)",
    )
    assert ok, line
