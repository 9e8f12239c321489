import numpy as np
import pytest

from semimart.boundary import classify_case
from semimart.catalog import (PRESETS, bessel, brownian, g_example41, g_example42, g_identity, g_power, g_remark36,
                              g_sqrt, lemma_battery)
from semimart.classify import (DecompositionRefused, brownian_conditions, check_decomposition, classify,
                               convex_decompose, full_condition, lemma_implication_suite, necessary_condition,
                               sign_definite_shortcut)
from semimart.funcmodel import CoefficientFunction, DiffusionSpec, Interval
from semimart.scale import Status

BM = brownian()
GRID = np.geomspace(1e-6, 10, 1000)


def case_b_battery():
    return [g for g in lemma_battery() if classify_case(BM, g).case == "B"]


def test_necessary_condition_examples():
    v = necessary_condition(BM, g_sqrt())
    assert v.status == Status.CONVERGENT
    assert v.estimate == pytest.approx(0.25, rel=1e-8)  # integrand x / (4x) = 1/4 on (0, 1)
    assert necessary_condition(BM, g_example41()).status == Status.CONVERGENT
    assert necessary_condition(BM, g_example42()).status == Status.DIVERGENT


def test_full_condition_examples():
    v = full_condition(BM, g_identity())
    assert v.status == Status.CONVERGENT and v.estimate == 0.0
    assert full_condition(BM, g_example41()).status == Status.DIVERGENT
    assert full_condition(BM, g_remark36()).status == Status.CONVERGENT


def test_shortcut_examples():
    assert sign_definite_shortcut(BM, g_sqrt()) == "applies_negative"
    assert sign_definite_shortcut(bessel(0.5), g_identity()) == "applies_negative"
    assert sign_definite_shortcut(BM, g_example41()) == "not_applicable"
    assert sign_definite_shortcut(BM, g_remark36()) == "not_applicable"


@pytest.mark.parametrize("name, g, want", [
    ("example-4.1", g_example41, "NonSemiFirstKind"),
    ("example-4.2", g_example42, "NonSemiSecondKind"),
    ("sqrt", g_sqrt, "Semimartingale"),
    ("remark-3.6", g_remark36, "Semimartingale"),
    ("inverse", lambda: g_power(-1.0), "NotApplicable"),
])
def test_classify_brownian_examples(name, g, want):
    assert classify(BM, g()).verdict == want


def test_classify_bessel_uses_shortcut():
    v = classify(bessel(0.5), g_identity())
    assert v.verdict == "Semimartingale" and v.shortcut_used


def test_classify_question_two_first_kind():
    d, g, _ = PRESETS["question-II-first-kind"].problem()
    v = classify(d, g)
    assert v.verdict == "NonSemiFirstKind"
    assert v.cond_necessary.status == Status.CONVERGENT and v.cond_full.status == Status.DIVERGENT


def test_classify_question_two_second_kind():
    d, g, _ = PRESETS["question-II-second-kind"].problem()
    v = classify(d, g)
    assert v.verdict == "NonSemiSecondKind"
    assert v.cond_necessary.status == Status.DIVERGENT


def test_whole_line_is_case_a():
    d = DiffusionSpec(Interval("-inf", "inf"), CoefficientFunction.const(0.0), CoefficientFunction.const(1.0),
                      0.0, 0.0)
    v = classify(d, g_example41().mirrored())
    assert v.verdict == "Semimartingale" and v.case.case == "A"


def test_verdict_invariants_over_presets():
    for p in PRESETS.values():
        d, g, _ = p.problem()
        v = classify(d, g)
        assert v.verdict == p.expected, p.name
        if v.verdict == "NonSemiSecondKind":
            assert v.cond_necessary.status == Status.DIVERGENT
        if v.verdict == "NonSemiFirstKind":
            assert v.cond_necessary.status == Status.CONVERGENT and v.cond_full.status == Status.DIVERGENT
        if v.verdict == "Semimartingale" and v.case.case != "A":
            assert v.shortcut_used or all(e["full"].status == Status.CONVERGENT
                                          for e in v.per_endpoint.values() if e.get("full") is not None)


@pytest.mark.parametrize("g", lemma_battery(), ids=lambda g: g.label)
def test_brownian_conditions_match_general_conditions(g):
    bf, bn = brownian_conditions(g)
    assert bf.status == full_condition(BM, g).status
    assert bn.status == necessary_condition(BM, g).status


@pytest.mark.parametrize("g", case_b_battery(), ids=lambda g: g.label)
def test_implication_chain_and_shortcut_soundness(g):
    full = full_condition(BM, g)
    if full.status == Status.CONVERGENT:
        assert necessary_condition(BM, g).status != Status.DIVERGENT
    if sign_definite_shortcut(BM, g) != "not_applicable":
        assert full.status != Status.DIVERGENT


@pytest.mark.parametrize("alpha, beta", [(2.0, 0.0), (-0.5, 3.0), (1e3, -7.0)])
def test_classify_is_affine_invariant(alpha, beta):
    for g in (g_sqrt(), g_example41(), g_example42()):
        assert classify(BM, g.affine(alpha, beta)).verdict == classify(BM, g).verdict


def test_decompose_identity():
    H1, H2, _ = convex_decompose(g_identity())
    assert np.allclose(H1(GRID), GRID, rtol=0, atol=1e-14)
    assert np.all(H2(GRID) == 0.0)


def test_decompose_sqrt():
    g = g_sqrt()
    H1, H2, _ = convex_decompose(g)
    rep = check_decomposition(g, H1, H2, GRID)
    assert rep["max_error"] <= 1e-8 and rep["H1_convex"] and rep["H2_convex"]
    # H1 is affine with slope g'(1) = 1/2, H2 = H1 - sqrt
    assert np.allclose(H1.d1(GRID), 0.5, rtol=0, atol=1e-14)
    assert np.allclose(H2(GRID), 0.5 * GRID + 0.5 - np.sqrt(GRID), atol=1e-8)


def test_decompose_example41_is_refused():
    with pytest.raises(DecompositionRefused) as info:
        convex_decompose(g_example41())
    assert info.value.verdict.status == Status.DIVERGENT


@pytest.mark.parametrize("g", [g for g in lemma_battery() if brownian_conditions(g)[0].status == Status.CONVERGENT],
                         ids=lambda g: g.label)
def test_decomposition_on_battery(g):
    H1, H2, _ = convex_decompose(g)
    rep = check_decomposition(g, H1, H2, GRID)
    assert rep["max_error"] <= 1e-8 and rep["H1_convex"] and rep["H2_convex"]
    # each part settles to a finite limit at 0+: its changes along a geometric probe shrink.
    # Probes stop at 1e-9 because phase-resolved panels for sin(1/sqrt x) grow like x^-1/2.
    probe = np.geomspace(1e-3, 1e-9, 7)
    for H in (H1, H2):
        steps = np.abs(np.diff(H(probe)))
        assert np.all(np.isfinite(steps)) and steps[-1] <= steps[0] * 0.1 + 1e-12


def test_lemma_suite_has_no_violations():
    rep = lemma_implication_suite(lemma_battery())
    assert rep["violations"] == []
    rows = {r["g"]: r for r in rep["rows"]}
    assert rows[g_sqrt().label]["R2"] == "holds"
    assert rows[g_power(-1.0).label]["R2"] == "precondition fails"
    assert any(r["R1"] == "holds" for r in rep["rows"])
