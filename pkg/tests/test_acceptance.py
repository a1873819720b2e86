"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.integrate import quad

import helpers
from dflab.cli import load_config, run_scenario
from dflab.energy import capacity, energy, energy_measure, generator_matrix
from dflab.graphs import ModelSpec, build_model
from dflab.metrics import (IntrinsicWitness, PseudoMetric, budget_metric,
                           budgets_m1, budgets_m2, cutoff, cutoff_decay_fit,
                           definitional_check, intrinsic_rowsum_check,
                           jump_size, lipschitz_sample, max_combine,
                           rowsum_scale, scaled_euclidean,
                           three_point_metrics)
from dflab.spectral import (caccioppoli, gst_check, hyperbolic_wave,
                            plane_wave, ratio_shell_geometry, shell_criterion,
                            shnol_bound, shnol_ratio, spectrum)

SQ2 = np.sqrt(2.0)


@contextmanager
def criterion(num, desc):
    try:
        yield
    except BaseException:
        print(f"criterion {num:02d} [FAIL] {desc}")
        raise
    print(f"criterion {num:02d} [PASS] {desc}")


def test_criterion_01_lattice_rowsum_slack():
    with criterion(1, "scaled Euclidean metric has zero row-sum slack on "
                      "Z^d windows (d=1,2, R=20) in under a second"):
        t0 = time.perf_counter()
        for d in (1, 2):
            G = helpers.lattice(d, 20)
            rho = scaled_euclidean(G, 1 / np.sqrt(2.0 * d))
            rep = intrinsic_rowsum_check(G, rho)
            assert rep.verdict
            assert np.max(np.abs(rep.slack[G.interior])) <= 1e-12
        assert time.perf_counter() - t0 < 1.0


def test_criterion_02_jump_size_exact():
    with criterion(2, "jump size is exactly 1/sqrt(2d) for d=1,2,3"):
        for d in (1, 2, 3):
            G = helpers.lattice(d, 2)
            rho = scaled_euclidean(G, 1 / np.sqrt(2.0 * d))
            assert jump_size(G, rho) == 1 / np.sqrt(2.0 * d)


def test_criterion_03_three_point_counterexample():
    with criterion(3, "both 0/1 metrics verify, their maximum fails with "
                      "violation exactly 1.0 at the middle vertex"):
        G = build_model(ModelSpec(kind="three_point"))
        witness = IntrinsicWitness.full(G)
        rho1, rho2 = three_point_metrics()
        for rho in (rho1, rho2):
            assert intrinsic_rowsum_check(G, rho).verdict
            assert definitional_check(G, rho, witness).verdict
        combo = max_combine(rho1, rho2)
        assert not intrinsic_rowsum_check(G, combo).verdict
        rep = definitional_check(G, combo, witness)
        assert not rep.verdict
        assert rep.worst_violation == 1.0
        assert rep.worst_vertex == 1


def test_criterion_04_topology_degeneration_rates():
    with criterion(4, "budget-metric hub distances decay like 1/sqrt(N) on "
                      "the two-hub family (N=100,400,1600)"):
        d2_vals, d1_vals = [], []
        for N in (100, 400, 1600):
            G = build_model(ModelSpec(kind="topo_example", n=N))
            d2 = budget_metric(G, budgets_m2(G)).pairwise([0], [2])[0]
            d1 = budget_metric(G, budgets_m1(G)).pairwise([0], [1])[0]
            assert d2 <= 1.01 / np.sqrt(N)
            assert d1 <= 2.02 / np.sqrt(N)
            d2_vals.append(d2)
            d1_vals.append(d1)
        assert d2_vals[0] > d2_vals[1] > d2_vals[2]
        assert d1_vals[0] > d1_vals[1] > d1_vals[2]


def test_criterion_05_mirror_divergence():
    with criterion(5, "mirror energies of the coordinate and even profiles "
                      "converge while the product gains 4 ln 2 per doubling"):
        # oracle: exact improper integrals, evaluated independently
        limit_u, _ = quad(lambda x: 4.0 / np.sqrt(x), 0.0, 1.0)
        assert limit_u == pytest.approx(8.0, abs=1e-9)
        eps = 2.0 / 64
        incr_oracle, _ = quad(lambda x: 4.0 / x, eps / 2, eps)
        assert incr_oracle == pytest.approx(4 * np.log(2), abs=1e-9)

        eu, ev, euv = [], [], []
        for N in (64, 128, 256, 512, 1024):
            G = build_model(ModelSpec(kind="mirror", n=N))
            x = G.coords[:, 0]
            eu.append(energy(G, None, x.copy()))
            ev.append(energy(G, None, np.abs(x) ** -0.25))
            euv.append(energy(G, None, x * np.abs(x) ** -0.25))
        du = np.abs(np.diff(eu))
        assert np.all(np.diff(du) < 0) and du[-1] < 0.2
        assert all(v == 0.0 for v in ev)
        incr = np.diff(euv)
        target = 4 * np.log(2)
        assert np.all(np.abs(incr - target) <= 0.1 * target)


def test_criterion_06_gst_identities():
    with criterion(6, "twisted-form identities hold to 1e-9 relative over "
                      "200 seeded trials in under 10 seconds"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(20260810)
        worst = 0.0
        for _ in range(100):  # random windows with ground-state u
            n = int(rng.integers(3, 51))
            G = helpers.random_graph_form(rng, n, with_killing=True)
            w, V = np.linalg.eigh(generator_matrix(G))
            u = np.abs(V[:, 0]) / np.sqrt(G.m)
            assert np.min(u) > 0
            lam = float(w[0])
            phi, psi = rng.normal(size=n), rng.normal(size=n)
            for variant in ("inverse", "multiplicative"):
                res = gst_check(G, None, u, lam, phi, psi, variant)
                worst = max(worst, res.rel_residual)
                assert res.verdict
        G = helpers.lattice(1, 40)
        xs = G.coords[:, 0]
        for _ in range(100):  # lattice windows with growing positive u
            mu = float(rng.uniform(0.05, 0.4))
            u, lam = hyperbolic_wave(G, mu)
            phi = np.where(np.abs(xs) <= 20, rng.normal(size=G.n), 0.0)
            psi = np.where(np.abs(xs) <= 20, rng.normal(size=G.n), 0.0)
            for variant in ("inverse", "multiplicative"):
                res = gst_check(G, None, u, lam, phi, psi, variant)
                worst = max(worst, res.rel_residual)
                assert res.verdict
        elapsed = time.perf_counter() - t0
        print(f" [gst worst relative residual {worst:.2e}, {elapsed:.1f}s]",
              end=" ")
        assert worst <= 1e-9
        assert elapsed < 10.0


def test_criterion_07_caccioppoli_suite():
    with criterion(7, "interior energy estimate passes 200 seeded "
                      "eigenvector/cutoff trials with the assembled constant"):
        rng = np.random.default_rng(7)
        G = helpers.lattice(1, 100)
        rho = scaled_euclidean(G, 1 / SQ2)
        w, V = np.linalg.eigh(generator_matrix(G))
        inter = np.nonzero(G.interior)[0]
        q, C_q = 0.5, 0.0
        constants = set()
        for _ in range(200):
            i = int(rng.integers(0, G.n))
            u = V[:, i] / np.sqrt(G.m)
            lam = float(w[i])
            eta = cutoff(rho, [int(rng.choice(inter))],
                         float(rng.uniform(1.0, 8.0)))
            res = caccioppoli(G, None, u, lam, eta, q=q, C_q=C_q)
            assert res.verdict
            constants.add((round(res.constant, 12), res.q, res.C_q,
                           round(res.S, 12)))
        print(f" [constant breakdown: {sorted(constants)[:3]}...]", end=" ")


def test_criterion_08_shnol_inequality():
    with criterion(8, "annulus bound holds in 100 seeded plane-wave trials "
                      "on the R=300 window"):
        rng = np.random.default_rng(8)
        G = helpers.lattice(1, 300)
        rho = scaled_euclidean(G, 1 / SQ2)
        s = jump_size(G, rho)
        xs = G.coords[:, 0]
        for _ in range(100):
            theta = float(rng.uniform(0.2, np.pi - 0.2))
            u, lam = plane_wave(G, theta)
            a = float(rng.uniform(1.0, 6.0)) / SQ2
            margin = int(np.ceil((2 * a + s) * SQ2)) + 2
            r = int(rng.integers(5, 300 - margin - 1))
            E = np.nonzero(np.abs(xs) <= r)[0]
            v = np.where(G.interior, rng.normal(size=G.n), 0.0)
            res = shnol_bound(G, None, u, lam, rho, E, a, s, v)
            assert res.verdict
            assert res.lhs_sq <= res.rhs


def test_criterion_09_spectrum_membership():
    with criterion(9, "ratio verdicts match the window spectrum for 10 plane "
                      "waves and 5 growing profiles at R=400 (under 60 s)"):
        t0 = time.perf_counter()
        G = helpers.lattice(1, 400)
        rho = scaled_euclidean(G, 1 / SQ2)
        s = a = jump_size(G, rho)
        xs = G.coords[:, 0]
        eigs = spectrum(G)
        shells = [np.nonzero(np.abs(xs) <= 5 * n)[0] for n in range(1, 81)]
        geom = ratio_shell_geometry(G, rho, shells, a, s)
        for k in range(1, 11):
            theta = k * np.pi / 11
            u, lam = plane_wave(G, theta)
            res = shnol_ratio(G, None, u, lam, rho, shells, a, s, eigs=eigs,
                              geometry=geom)
            assert res.verdict == "in_spectrum"
            assert res.spectrum_dist <= 0.05
        for mu in (0.2, 0.25, 0.3, 0.35, 0.4):
            u, lam = hyperbolic_wave(G, mu)
            res = shnol_ratio(G, None, u, lam, rho, shells, a, s, eigs=eigs,
                              geometry=geom)
            assert res.verdict == "inconclusive"
            assert res.spectrum_dist >= 0.05
        center = int(np.argmin(np.abs(xs)))
        _, diag = shell_criterion(G, rho, [center], a, s,
                                  gammas=(0.1, 1.0))
        assert diag["decay_ok"][0.1]
        vals = diag["decay"][0.1]
        assert vals[-1] < 0.05 * max(vals)
        elapsed = time.perf_counter() - t0
        print(f" [{elapsed:.1f}s]", end=" ")
        assert elapsed < 60.0


def test_criterion_10_capacity():
    with criterion(10, "middle-vertex capacity equals 7/3 with minimizer "
                       "(2/3, 1, 2/3); 50 nested pairs are monotone"):
        G = build_model(ModelSpec(kind="three_point"))
        res = capacity(G, [1])
        assert res.value == pytest.approx(7.0 / 3.0, abs=1e-10)
        np.testing.assert_allclose(res.minimizer, [2 / 3, 1.0, 2 / 3],
                                   atol=1e-10)
        rng = np.random.default_rng(10)
        L = helpers.lattice(1, 8)
        for _ in range(50):
            size_b = int(rng.integers(1, L.n))
            B = rng.choice(L.n, size=size_b, replace=False)
            A = rng.choice(B, size=int(rng.integers(1, size_b + 1)),
                           replace=False)
            assert capacity(L, A).value <= capacity(L, B).value * (1 + 1e-12)


def test_criterion_11_lipschitz_extension_bound():
    with criterion(11, "500 seeded minimal extensions keep jump density "
                       "below the vertex masses at interior vertices"):
        G = helpers.lattice(1, 30)
        rho = scaled_euclidean(G, 1 / SQ2)
        inter = G.interior
        for seed in range(500):
            u = lipschitz_sample(rho, seed=seed)
            dens = energy_measure(G, u, "b").values
            assert np.all(dens[inter] <= G.m[inter] + 1e-12)


def test_criterion_12_exponential_cutoff_decay():
    with criterion(12, "cutoff energy density decays with fitted log-slope "
                       "within 15% of -beta for beta=0.5, 1.0"):
        for beta in (0.5, 1.0):
            G = build_model(ModelSpec(kind="exponential", d=1, R=70,
                                      beta=beta, C=1.0, interior_tol=1e-5))
            rho = scaled_euclidean(G, rowsum_scale(G))
            E = np.nonzero(G.coords[:, 0] <= -25)[0]
            slope, _, _, _ = cutoff_decay_fit(G, rho, E, a=2.0)
            assert abs(slope + beta) <= 0.15 * beta


def test_criterion_13_determinism(tmp_path):
    with criterion(13, "every bundled scenario reproduces its report "
                       "bit-identically under the same seed"):
        from dflab.cli import bundled_scenarios

        for name in bundled_scenarios():
            cfg = load_config(name)
            r1, code1 = run_scenario(cfg, tmp_path / name / "a")
            r2, code2 = run_scenario(cfg, tmp_path / name / "b")
            assert code1 == 0, f"scenario {name} failed"
            assert code1 == code2
            r1.pop("timing")
            r2.pop("timing")
            assert json.dumps(r1, sort_keys=True) == \
                json.dumps(r2, sort_keys=True), f"scenario {name} drifted"
