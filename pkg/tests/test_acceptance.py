"""Exit criteria. Each test records one PASS/FAIL line, shown in the terminal summary."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from quasicontract.bounds import (
    PermanenceQuery,
    bound_closed_form,
    bound_recurrence,
    permanence_index,
)
from quasicontract.constraint import ContractionParams, DistanceSample, verify_pair
from quasicontract.lti import (
    EnvelopeFit,
    LtiSystem,
    RandomPerturbation,
    ZeroPerturbation,
    contraction_params,
    envelope_fit,
    integrate_step,
    min_sampling_period,
    sampled_map,
)
from quasicontract.metric import Metric
from quasicontract.orbits import (
    check_bound_domination,
    empirical_entry_index,
    iterate_pair,
    make_compliant_test_map,
)
from quasicontract.regions import (
    BandParams,
    BandVerdict,
    corollary_verdict,
    feasibility_scan,
    interval_for_36,
    interval_for_37,
)

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
METRICS = [Metric.norm(1), Metric.norm(2), Metric.norm("inf")]
N_TRIALS = 1000
N_STEPS = 200
R_FACTORS = (0.5, 2.0, 10.0)
EPSILONS = (0.05, 0.25)


def _unit_vector(rng, dim, metric):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v, ord=metric.p)


@pytest.fixture(scope="module")
def compliant_trials():
    """1000 seeded compliant maps with one orbit pair each, plus the wall time."""
    rng = np.random.default_rng(20240601)
    trials = []
    t0 = time.perf_counter()
    for i in range(N_TRIALS):
        dim = 1 + i % 4
        metric = METRICS[i % 3]
        params = ContractionParams(K=rng.uniform(0.1, 0.9), M=rng.uniform(0.1, 2.0))
        R = R_FACTORS[i % 3] * params.M / params.K
        T = make_compliant_test_map(params, dim, seed=i)
        x0 = rng.uniform(-20, 20, dim)
        y0 = x0 + R * rng.uniform(0.5, 1.0) * _unit_vector(rng, dim, metric)
        rec = iterate_pair(T, x0, y0, N_STEPS, metric)
        trials.append((params, R, rec))
    return trials, time.perf_counter() - t0


def test_ac1_bound_domination(compliant_trials, acceptance):
    trials, elapsed = compliant_trials
    t0 = time.perf_counter()
    n_viol = sum(len(check_bound_domination(rec, p, 1e-9)) for p, _, rec in trials)
    elapsed += time.perf_counter() - t0
    ok = n_viol == 0 and len(trials) == 1000 and elapsed < 30.0
    acceptance.record("AC1 bound domination", ok,
                      f"{len(trials)} maps x {N_STEPS} steps, {n_viol} violations, {elapsed:.1f}s")
    assert n_viol == 0
    assert elapsed < 30.0


def test_ac2_permanence(compliant_trials, acceptance):
    trials, _ = compliant_trials
    checked = failures = not_minimal = 0
    for p, R, rec in trials:
        assert rec.distances[0] <= R * (1 + 1e-12)
        for eps in EPSILONS:
            j0 = permanence_index(PermanenceQuery(R, eps, p))
            target = p.M / p.K + eps
            if j0 > 0 and not bound_closed_form(j0 - 1, R, p) > target:
                not_minimal += 1
            if bound_closed_form(j0, R, p) > target:
                not_minimal += 1
            emp = empirical_entry_index(rec, target)
            checked += 1
            if j0 > N_STEPS:
                failures += emp is not None and emp > j0
            elif emp is None or emp > j0:
                failures += 1
    ok = failures == 0 and not_minimal == 0
    acceptance.record("AC2 permanence", ok,
                      f"{checked} (trial, eps) checks, {failures} entry-index failures, "
                      f"{not_minimal} minimality failures")
    assert failures == 0 and not_minimal == 0


def test_ac3_oracle_agreement(acceptance):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        d0 = rng.uniform(0, 100)
        K = rng.uniform(0, 1)
        while K == 0.0:
            K = rng.uniform(0, 1)
        M = rng.uniform(0, 10)
        p = ContractionParams(K, M)
        b = d0
        for j in range(201):
            c = bound_closed_form(j, d0, p)
            if c != b:
                worst = max(worst, abs(c - b) / abs(b))
            b = b - K * b + M
    # recurrence helper agrees with the inline loop above
    assert bound_recurrence(200, 3.0, ContractionParams(0.3, 0.7)) == pytest.approx(
        bound_closed_form(200, 3.0, ContractionParams(0.3, 0.7)), rel=1e-12)
    ok = worst <= 1e-12
    acceptance.record("AC3 closed form vs recurrence", ok,
                      f"10^4 draws x j<=200, max rel err {worst:.2e} (tol 1e-12)")
    assert ok


def _random_band(rng):
    K = rng.uniform(0.05, 0.95)
    K1 = rng.uniform(1 - K + 0.01, 1.5)
    return BandParams(K=K, M=rng.uniform(0.1, 5.0), K1=K1, K2=rng.uniform(K1, K1 + 1.0))


def test_ac4_region_oracle(acceptance):
    rng = np.random.default_rng(11)
    grid = 1000
    total_bad = tolerated = 0
    for _ in range(20):
        b = _random_band(rng)
        lo36, hi36 = interval_for_36(b)
        _, hi37 = interval_for_37(b)
        ds = np.linspace(0.0, 2.0 * b.M / (b.K + b.K1 - 1), 10_000)
        f36, f37, _ = feasibility_scan(ds, b, grid)
        in36 = (ds >= lo36) & (ds <= hi36)
        in37 = ds <= hi37
        cell = (b.K2 * ds + b.M) / (grid - 1)
        rhs = (1 - b.K) * ds + b.M
        # length of the exact feasible dT set of each chain
        w36 = rhs - b.K1 * ds
        w37 = (b.K2 - b.K1) * ds
        for scan, exact, width in ((f36, in36, w36), (f37, in37, w37)):
            false_pos = scan & ~exact
            missed = exact & ~scan
            total_bad += int(false_pos.sum() + (missed & (width >= cell)).sum())
            tolerated += int((missed & (width < cell)).sum())
    ok = total_bad == 0
    acceptance.record("AC4 region oracle equivalence", ok,
                      f"20 bands x 10^4 d, {total_bad} mismatches beyond one dT grid cell "
                      f"({tolerated} sub-cell misses at endpoints)")
    assert ok


def test_ac5_corollary_branches(acceptance):
    cases = [
        (BandParams(0.5, 1.0, 0.7, 1.0), BandVerdict.NonExpansive),
        (BandParams(0.5, 1.0, 0.6, 0.9), BandVerdict.ContractiveWithFixedPoint),
        (BandParams(0.5, 1.0, 0.4, 1.5, relaxed=True), BandVerdict.MixedLocal),
        (BandParams(0.5, 1.0, 1.1, 1.3), BandVerdict.Infeasible),
        (BandParams(0.5, 1.0, 1.0, 1.2), BandVerdict.NotContractive),
    ]
    verdict_ok = all(corollary_verdict(b) is v for b, v in cases)

    b = BandParams(0.5, 1.0, 1.1, 1.3)
    grid = 1000
    hi = b.M / (b.K + b.K1 - 1)
    ds = np.linspace(0.0, 10 * hi, 10_000)
    spacing = ds[1] - ds[0]
    _, _, f35 = feasibility_scan(ds, b, grid)
    feas = ds[f35]
    # a feasible image-distance set shorter than one dT cell can be missed:
    # near d = 0 its length is (K2 - K1) d, near hi it is (K + K1 - 1)(hi - d)
    cell_hi = (b.K2 * hi + b.M) / (grid - 1)
    gap_lo = (b.M / (grid - 1)) / (b.K2 - b.K1)
    gap_hi = cell_hi / (b.K + b.K1 - 1)
    bounded = feas.max() <= hi
    reaches = hi - feas.max() <= gap_hi + spacing
    interior = ds[(ds >= gap_lo + spacing) & (ds <= hi - gap_hi - spacing)]
    filled = np.all(np.isin(interior, feas))
    ok = verdict_ok and bounded and reaches and filled and feas.min() == 0.0
    acceptance.record("AC5 verdict table", ok,
                      f"5 verdicts {'ok' if verdict_ok else 'WRONG'}; K1=1.1 feasible d in "
                      f"[0, {feas.max():.4f}] vs M/(K+K1-1)={hi:.4f}")
    assert ok


def test_ac6_example_end_to_end(acceptance):
    A = np.diag([-1.0, -2.0])
    metric = Metric.norm(2)
    env = envelope_fit(A, metric)
    h = min_sampling_period(env, 0.5)
    substeps = 10
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()

    params = contraction_params(env, 0.1, h)
    sys_p = LtiSystem(A, 0.1, metric, h)
    n_fail = 0
    for k in range(100):
        tx = sampled_map(sys_p, RandomPerturbation(2, 0.1, seed=2 * k), substeps)
        ty = sampled_map(sys_p, RandomPerturbation(2, 0.1, seed=2 * k + 1), substeps)
        rec = iterate_pair(tx, rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2), 200, metric, ty)
        ds = rec.distances
        n_fail += sum(not verify_pair(DistanceSample(a, b), params, 1e-6)
                      for a, b in zip(ds, ds[1:]))

    params0 = contraction_params(env, 0.0, h)
    sys0 = LtiSystem(A, 0.0, metric, h)
    T0 = sampled_map(sys0, ZeroPerturbation(2), substeps)
    worst_ratio = worst_norm = 0.0
    for k in range(100):
        rec = iterate_pair(T0, rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2), 200, metric)
        worst_ratio = max(worst_ratio, float(rec.step_ratios().max()))
        worst_norm = max(worst_norm, float(np.linalg.norm(rec.x_orbit[-1])),
                         float(np.linalg.norm(rec.y_orbit[-1])))
    elapsed = time.perf_counter() - t0

    ok = (
        params.K == pytest.approx(0.5, rel=1e-12)
        and params.M == pytest.approx(2 * env.K0 * 0.1 / env.alpha0, rel=1e-15)
        and params0.M == 0.0
        and n_fail == 0
        and worst_ratio <= 0.5 + 1e-9
        and worst_norm < 1e-8
        and elapsed < 60.0
    )
    acceptance.record("AC6 perturbed LTI example", ok,
                      f"K={params.K:.12g}, M={params.M:.6g}; {n_fail} verify failures over "
                      f"100x200 steps; M0=0 max ratio {worst_ratio:.6f}, terminal norm "
                      f"{worst_norm:.1e}; {elapsed:.1f}s")
    assert ok


def test_ac7_sampling_identity(acceptance):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        env = EnvelopeFit(K0=rng.uniform(1, 10), alpha0=5.0 - rng.uniform(0, 5.0 - 1e-6))
        Kt = rng.uniform(0.01, 0.99)
        K = contraction_params(env, rng.uniform(0, 1), min_sampling_period(env, Kt)).K
        worst = max(worst, abs(K - Kt) / Kt)
    ok = worst <= 1e-12
    acceptance.record("AC7 sampling identity", ok, f"max rel err {worst:.2e} (tol 1e-12)")
    assert ok


def test_ac8_integrator_order(acceptance):
    ratios = {}
    for name, A in (("diag(-1,-2)", np.diag([-1.0, -2.0])),
                    ("[[0,1],[-2,-3]]", np.array([[0.0, 1.0], [-2.0, -3.0]]))):
        sys = LtiSystem(A, 0.0, h=1.0)
        x0 = np.array([1.0, -0.5])
        exact = sys.exact_unperturbed(x0)
        e1 = np.linalg.norm(integrate_step(sys, x0, 0.0, ZeroPerturbation(2), 8) - exact)
        e2 = np.linalg.norm(integrate_step(sys, x0, 0.0, ZeroPerturbation(2), 16) - exact)
        ratios[name] = e1 / e2
    ok = all(12.8 <= r <= 19.2 for r in ratios.values())
    acceptance.record("AC8 integrator order", ok,
                      ", ".join(f"{k}: {v:.2f}" for k, v in ratios.items()) + " (16 +/- 20%)")
    assert ok


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "quasicontract", *map(str, args)],
                          capture_output=True, text=True)


def test_ac9_cli_contract(tmp_path, acceptance):
    identical = True
    for name in ("bounds", "regions"):
        for run in ("a", "b"):
            assert _cli(name, "--config", DATA / f"{name}.toml", "--out", tmp_path / name / run
                        ).returncode == 0
            for f in ("report.json", "series.csv"):
                identical &= ((tmp_path / name / run / f).read_bytes()
                              == (GOLDEN / name / f).read_bytes())
    for run in ("a", "b"):
        _cli("simulate", "--config", DATA / "simulate_random.toml", "--out", tmp_path / "sim" / run)
    identical &= all(
        (tmp_path / "sim" / "a" / f).read_bytes() == (tmp_path / "sim" / "b" / f).read_bytes()
        for f in ("report.json", "series.csv", "envelope.csv")
    )
    bad = _cli("analyze", "--config", DATA / "analyze_bad.toml", "--out", tmp_path / "bad")
    malformed = _cli("bounds", "--config", DATA / "malformed.toml", "--out", tmp_path / "m")
    ok = identical and bad.returncode == 1 and malformed.returncode == 2
    acceptance.record("AC9 CLI determinism and exit codes", ok,
                      f"golden/bytes {'identical' if identical else 'DIFFER'}, violating samples "
                      f"exit {bad.returncode}, malformed config exit {malformed.returncode}")
    assert ok
