"""Acceptance criteria, one test each, with one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from mchlab.evolution import stability_experiment
from mchlab.fields import sample_one_soliton, sample_two_soliton
from mchlab.functionals import (closed_form_invariants, conserved_report, criticality_residual,
                                lagrange_multipliers, soliton_ratios)
from mchlab.hessian import hessian_M
from mchlab.soliton import build_params, homoclinic_oracle, one_soliton_curve, wavenumber_from_speed
from mchlab.spectral import (assemble_L, essential_edge, kernel_directions, spectrum_box,
                             two_soliton_spectrum, wronskian_sign_changes)

from conftest import random_speeds

PARAMS = build_params(1.0, 5.0, 4.0)
LAM = lagrange_multipliers(5.0, 4.0, 1.0)


def line_pair(t, n):
    centre, half = spectrum_box(PARAMS, t)
    h = 2 * half / (n - 1)
    return sample_two_soliton(PARAMS, t, centre - half, h, n), centre - half, h


def test_criterion_01_multiplier_identity(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        kappa = float(rng.uniform(0.3, 3.0))
        c1, c2 = random_speeds(rng, kappa)
        lam = lagrange_multipliers(c1, c2, kappa)
        for c in (c1, c2):
            w1, w2 = soliton_ratios(c, kappa)
            worst = max(worst, abs(lam.lambda1 + w2 + lam.lambda2 * w1))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 1.0
    acceptance(1, ok, f"max identity residual {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_02_closed_form_invariants(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for kappa, c in [(1.0, 5.0), (1.0, 4.0), (2.0, 17.0)]:
        k = wavenumber_from_speed(c, kappa)
        half = max(60 / k, 30 / kappa)
        n = 8192
        rep = conserved_report(sample_one_soliton(c, kappa, 0.0, -half, 2 * half / (n - 1), n))
        F1, F2 = closed_form_invariants(c, kappa)
        worst = max(worst, abs(rep.F1 / F1 - 1), abs(rep.F2 / F2 - 1))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 5.0
    acceptance(2, ok, f"max relative error {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_03_criticality(acceptance):
    start = time.perf_counter()
    residuals = []
    for t in (-10.0, 0.0, 10.0):
        fld, _, _ = line_pair(t, 8192)
        residuals.append(criticality_residual(fld, LAM))
    # multipliers of the pair (4, 3.5) instead of (5, 4)
    mismatch = criticality_residual(line_pair(0.0, 8192)[0], lagrange_multipliers(4.0, 3.5, 1.0))
    elapsed = time.perf_counter() - start
    ok = max(residuals) < 1e-6 and mismatch > 1e-2 and elapsed < 10.0
    acceptance(3, ok, f"residuals {', '.join(f'{r:.1e}' for r in residuals)}; "
                      f"mismatched {mismatch:.3f}; {elapsed:.2f} s")
    assert ok


def test_criterion_04_spectrum_counts(acceptance):
    start = time.perf_counter()
    counts = [(rep.n_negative, rep.n_kernel)
              for rep in (two_soliton_spectrum(PARAMS, 0.0, n) for n in (2048, 4096))]
    elapsed = time.perf_counter() - start
    ok = counts == [(1, 2), (1, 2)] and elapsed < 120.0
    acceptance(4, ok, f"(negative, kernel) at n=2048, 4096: {counts}; {elapsed:.2f} s", "a")
    assert ok


def test_criterion_04_next_eigenvalue_above_half_edge(acceptance):
    # The fast pulse carries an internal mode well below the edge; see the decisions ledger.
    rep = two_soliton_spectrum(PARAMS, 0.0, 4096)
    edge = essential_edge(5.0, 4.0, 1.0)
    following = float(rep.eigenvalues[rep.n_negative + rep.n_kernel])
    ok = following > 0.5 * edge
    acceptance(4, ok, f"next eigenvalue {following:.5f} vs 0.5 x edge {0.5 * edge:.5f}", "b")
    assert following > 0.5 * edge


def test_criterion_05_wronskian_count(acceptance):
    start = time.perf_counter()
    changes, negatives = [], []
    for t in (-20.0, 0.0, 20.0):
        centre, half = spectrum_box(PARAMS, t)
        n = 4096
        h = 2 * half / (n - 1)
        mu1, mu2, d1, d2 = kernel_directions(PARAMS, t, centre - half, h, n, with_x=True)
        changes.append(wronskian_sign_changes(mu1, mu2, dmu1=d1, dmu2=d2))
        negatives.append(two_soliton_spectrum(PARAMS, t, n).n_negative)
    elapsed = time.perf_counter() - start
    ok = changes == [1, 1, 1] and changes == negatives and elapsed < 30.0
    acceptance(5, ok, f"sign changes {changes}, negative eigenvalues {negatives}; "
                      f"{elapsed:.2f} s")
    assert ok


def test_criterion_06_hessian(acceptance):
    start = time.perf_counter()
    worst, inertias = 0.0, set()
    for kappa in (0.5, 1.0, 2.0):
        k2 = kappa**2
        speeds = np.linspace(3 * k2, 9 * k2, 12)[1:-1]
        for c1 in speeds:
            for c2 in speeds[speeds < c1]:
                rep = hessian_M(c1, c2, kappa)
                worst = max(worst, abs(rep.det_numeric / rep.det_closed_form - 1))
                inertias.add(rep.inertia)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and inertias == {(1, 1)} and elapsed < 10.0
    acceptance(6, ok, f"max det relative error {worst:.2e}, inertias {sorted(inertias)}; "
                      f"{elapsed:.2f} s")
    assert ok


@pytest.mark.slow
def test_criterion_07_conservation(collision_run, collision_seconds, acceptance):
    rep, traj = collision_run
    d = rep.drift
    ok = (max(d["E1"], d["E2"], d["E3"]) < 1e-8 and d["E4"] < 1e-6 and rep.status == "ok"
          and traj.config.n == 8192 and collision_seconds < 300)
    acceptance(7, ok, "drifts " + ", ".join(f"{k} {d[k]:.1e}" for k in ("E1", "E2", "E3", "E4"))
               + f"; {collision_seconds:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_08_elastic_collision(collision_run, collision_seconds, acceptance):
    rep, _ = collision_run
    ok = (max(rep.amplitude_errors) < 1e-4 and rep.relative_error_fast < 1e-2
          and collision_seconds < 300)
    acceptance(8, ok, f"amplitude errors {rep.amplitude_errors[0]:.1e}, "
                      f"{rep.amplitude_errors[1]:.1e}; fast displacement "
                      f"{rep.displacement_fast:.6f} vs {rep.predicted_fast:.6f} "
                      f"({rep.relative_error_fast:.1e} relative)")
    assert ok


@pytest.mark.slow
def test_criterion_09_orbital_stability(acceptance):
    start = time.perf_counter()
    rep = stability_experiment(PARAMS)
    elapsed = time.perf_counter() - start
    bounded = all(s <= 100 * d for s, d in zip(rep.sup_distance, rep.deltas))
    ok = bounded and rep.amplification_spread < 2 and set(rep.statuses) == {"ok"} \
        and elapsed < 900
    acceptance(9, ok, f"sup/delta {', '.join(f'{a:.2f}' for a in rep.amplification)}; "
                      f"spread {rep.amplification_spread:.3f}; {elapsed:.0f} s")
    assert ok


def test_criterion_10_oracle_equivalence(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for kappa, c in [(1.0, 5.0), (1.0, 4.0), (2.0, 17.0), (0.5, 2.0)]:
        k = wavenumber_from_speed(c, kappa)
        cur = one_soliton_curve(c, kappa, np.linspace(-40 / k, 40 / k, 4001))
        residual, mu = homoclinic_oracle(cur.u, cur.u_x, c, kappa)
        worst = max(worst, float(np.max(np.abs(residual))), float(np.max(np.abs(mu - cur.m))))
    quotients = []
    for n in (1024, 2048, 4096):
        fld, x0, h = line_pair(0.0, n)
        op = assemble_L(fld, LAM)
        mus = kernel_directions(PARAMS, 0.0, x0, h, n)
        quotients.append([abs(op.quadratic_form(mu)) / (float(mu @ mu) * h) for mu in mus])
    q = np.array(quotients)
    ratios = (q[:-1] / q[1:]).ravel()
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and np.all((ratios > 3.5) & (ratios < 4.5)) and elapsed < 60
    acceptance(10, ok, f"oracle gap {worst:.1e}; Rayleigh ratios per halving "
                       f"{', '.join(f'{r:.2f}' for r in ratios)}; {elapsed:.2f} s")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
