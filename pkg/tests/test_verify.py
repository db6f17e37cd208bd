import numpy as np
import pytest

from openxxx import verify
from openxxx.bethe import SolverConfig
from openxxx.errors import OpenXXXError
from openxxx.model import ModelParams

from conftest import make_params

FAST_CHECKS = [
    "foundations.yang_baxter",
    "foundations.trace_vs_entries",
    "foundations.vacuum_actions",
    "exchange.ab_relation",
    "rotated.transfer_from_frame",
    "offshell.general",
    "offshell.diagonal",
    "offshell.triangular",
    "n1.unwanted_term",
    "n1.g_function",
    "n1.omega_brackets",
    "golden.w_n2",
]


def test_registry_names_are_stable():
    names = verify.check_names()
    assert "foundations.yang_baxter" in names
    assert "offshell.n4_probe" in names
    assert "spectrum.completeness" in names
    assert not verify.registry()["offshell.n4_probe"].gating
    assert verify.registry()["offshell.general"].gating


def test_select_checks_rejects_unknown():
    with pytest.raises(OpenXXXError):
        verify.select_checks(["no.such.check"])


def test_suite_passes_on_generic_params(params_n2):
    report = verify.run_suite(params_n2, checks=FAST_CHECKS, seed=5, n_samples=4)
    assert report.all_pass
    for c in report.checks:
        assert c.verdict == "pass"
        assert c.residual <= c.tol
        assert c.wall_time >= 0


def test_suite_deterministic_residuals(params_n2):
    a = verify.run_suite(params_n2, checks=FAST_CHECKS, seed=9, n_samples=3)
    b = verify.run_suite(params_n2, checks=FAST_CHECKS, seed=9, n_samples=3)
    assert [c.verdict for c in a.checks] == [c.verdict for c in b.checks]
    assert [c.residual for c in a.checks] == [c.residual for c in b.checks]


def test_rotated_checks_skip_without_frame():
    tri = ModelParams.create([0.1, -0.2], 1.5, 0.7, xi_plus=0.8, xi_minus=0.0)
    report = verify.run_suite(
        tri, checks=["rotated.k_plus_diagonalization", "rotated.bbar_commute"], seed=2,
        n_samples=3,
    )
    kplus = report.by_name("rotated.k_plus_diagonalization")
    assert all(c.verdict == "skipped" and "xi_minus" in c.reason for c in kplus)
    # bbar needs only the stored coupling ratio, so it still runs
    assert all(c.verdict == "pass" for c in report.by_name("rotated.bbar_commute"))
    assert report.all_pass  # skipped checks never gate


def test_n4_probe_reported_not_gating(params_n2):
    report = verify.run_suite(params_n2, checks=["offshell.n4_probe"], seed=4, n_samples=2)
    (probe,) = report.checks
    assert probe.n_sites == 4
    assert not probe.gating
    assert probe.residual < 1e-6  # recorded as evidence; does not gate either way


def test_max_sites_truncation(params_n2):
    report = verify.run_suite(
        params_n2, checks=["foundations.transfer_commute"], seed=1, n_samples=2, max_sites=2
    )
    assert {c.n_sites for c in report.checks} == {1, 2}


def test_onshell_checks_with_solver(params_n1):
    report = verify.run_suite(
        params_n1,
        checks=["spectrum.completeness", "onshell.eigen_residual", "onshell.polynomiality"],
        seed=6,
        n_samples=2,
        solver_cfg=SolverConfig(seed=6),
        max_sites=1,
    )
    assert report.all_pass, [(c.name, c.verdict, c.residual) for c in report.checks]


def test_check_family_wrappers(params_n2):
    rep = verify.check_exchange_relations(params_n2, seed=3, n_samples=2, max_sites=2)
    assert rep.all_pass
    assert all(c.name.startswith("exchange.") for c in rep.checks)
    rep = verify.check_n1_decomposition(params_n2, seed=3, n_samples=2)
    assert rep.all_pass and {c.n_sites for c in rep.checks} == {1}


def test_check_offshell_with_explicit_roots(params_n2):
    roots = (0.43 + 0.77j, -0.21 - 0.53j)
    rep = verify.check_offshell(params_n2, roots=roots, seed=5, n_samples=4)
    (outcome,) = rep.checks
    assert outcome.verdict == "pass" and outcome.residual <= 1e-9
    with pytest.raises(OpenXXXError):
        verify.check_offshell(params_n2, roots=(0.0, 0.3), seed=5)
    # direct single-point residual helper
    u = 1.21 - 0.66j
    assert verify.offshell_residual(params_n2, roots, u) < 1e-12


def test_random_params_avoid_degeneracies(rng):
    for _ in range(20):
        p = verify.random_params(rng, 2)
        assert 0.5 <= abs(p.p) <= 3.0
        assert 0.5 <= abs(p.q) <= 3.0
        assert abs(p.xi_plus * p.xi_minus + 1) >= 1e-3
        assert abs(p.rho) > 1e-6


def test_sampler_resamples_near_poles(params_n1):
    # a guard centered on the whole box forces at least one resample attempt
    ctx = verify.CheckContext(
        params_n1, 1, np.random.default_rng(0), 1, 1e-9, SolverConfig()
    )
    pt = ctx.draw_point(centers=(0.0,), margin=0.5)
    assert abs(pt) >= 0.5
    assert ctx.resamples >= 0
    ctx2 = verify.CheckContext(
        params_n1, 1, np.random.default_rng(0), 1, 1e-9, SolverConfig()
    )
    with pytest.raises(OpenXXXError):
        ctx2.draw_point(centers=(0.0,), margin=10.0)  # nothing admissible in the box
    assert ctx2.resamples == 1000
