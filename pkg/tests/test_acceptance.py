"""Acceptance criteria, one test per criterion.

Each test prints one PASS/FAIL line per check at the tolerances pinned in
the validation suites and asserts the gating checks. The suites are executed
once per module and shared across the tests. Non-gating checks are reported
but never fail the build.
"""

import time

import pytest

from gsgs.validate import (
    suite_conjugate,
    suite_invariance,
    suite_operators,
    suite_superres_desk,
    suite_toy_hier,
)

SEED = 0


def _report(results):
    for r in results:
        print(r.line())


def _assert_gating(results):
    failures = [r for r in results if r.gating and not r.passed]
    assert not failures, "failed checks:\n" + "\n".join(r.line() for r in failures)


@pytest.fixture(scope="module")
def invariance_results():
    return suite_invariance(seed=SEED)


@pytest.fixture(scope="module")
def toy_results():
    return suite_toy_hier(seed=SEED)


@pytest.fixture(scope="module")
def desk_results():
    return suite_superres_desk(seed=SEED)


@pytest.fixture(scope="module")
def operator_results():
    start = time.perf_counter()
    results = suite_operators(seed=SEED) + suite_conjugate(seed=SEED)
    return results, time.perf_counter() - start


def test_t1_one_step_invariance(invariance_results):
    # One x-step from exact stationary starts, every direction count and
    # perturbation mode: means within 4 SE per coordinate, covariance within
    # 5 percent Frobenius, wall time under two minutes.
    _report(invariance_results)
    _assert_gating(invariance_results)


def test_t2_hierarchical_toy_equivalence(toy_results):
    # 1-D deconvolution toy: hyperparameter posterior means within 5 percent
    # and standard deviations within 15 percent of the exact-Gibbs oracle.
    _report(toy_results)
    _assert_gating(toy_results)


def test_t3_desk_scale_estimates(desk_results):
    checks = [r for r in desk_results if r.name in
              ("desk.gamma_n_estimate", "desk.gamma_x_vs_reference",
               "desk.runtime_budget")]
    assert len(checks) == 3
    _report(checks)
    _assert_gating(checks)


def test_t4_direction_count_tradeoff(desk_results):
    checks = [r for r in desk_results if r.name.startswith("desk.tradeoff")]
    assert len(checks) == 2
    _report(checks)
    _assert_gating(checks)


def test_t5_high_noise_recovery(desk_results):
    checks = [r for r in desk_results if r.name == "desk.high_noise_gamma_n"]
    assert len(checks) == 1
    _report(checks)
    _assert_gating(checks)


def test_t6_no_perturbation_pathology(desk_results):
    # Observational: reported and logged, never failing the build.
    checks = [r for r in desk_results if r.name == "desk.no_perturbation_overregularizes"]
    assert len(checks) == 1
    _report(checks)
    assert not checks[0].gating
    ratio = checks[0].details["ratio"]
    print(f"observed over-regularization ratio without perturbation: {ratio:.2f}")


def test_t7_operator_and_oracle_suites(operator_results):
    results, elapsed = operator_results
    _report(results)
    print(f"[{'PASS' if elapsed < 60 else 'FAIL'}] operator suites runtime "
          f"({elapsed:.1f}s, budget 60s)")
    _assert_gating(results)
    assert elapsed < 60.0
