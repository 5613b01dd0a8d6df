import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as hst

from cardproto import steps as st
from cardproto.analyzer import (analysis_report, count_resources, deck_distribution, enumerate_runs, explore,
                                kwh_posteriors, point_prior, run_once, sampled_check, trace_probability,
                                uniform_prior, verify_correctness, verify_security)
from cardproto.deck import Observation, Suit
from cardproto.errors import BudgetExceeded, DomainError, UncoveredBranch
from cardproto.protocol import FunctionSpec, Protocol
from cardproto.protocols import build, equality_first, equality_second, five_card_trick, leaky_equality

SMALL = [
    ("five_card_trick", {}), ("six_card_trick", {}), ("equality_first", {"n": 3}),
    ("equality_second", {"n": 3}), ("kcand_equality", {"n": 2, "k": 3}), ("add", {"k": 3}),
    ("sum", {"n": 3}), ("and", {}), ("symmetric", {"n": 3, "g": [0, 0, 1, 1]}),
    ("doubly_symmetric", {"n": 4, "g": [0, 1, 0, 1, 0]}),
]
SABOTAGED = [("equality_first_no_final_cut", {"n": 3}), ("leaky_equality", {"n": 3})]


def custom(body, layout, fn=FunctionSpec("and", 2), arity=2):
    return Protocol("custom", (), arity, 2, tuple(layout), tuple(body), fn)


def free_pair_protocol(arms):
    """A club and a heart, revealed, then branched on; the heart is on the right."""
    layout = (st.CommitInput(1), st.CommitInput(2), st.FreeCard(Suit.CLUB), st.FreeCard(Suit.HEART))
    body = (st.Reveal((5, 6)), st.BranchGroup(tuple(arms)), st.Conceal((5, 6)), st.OutputCommitted((1, 2)))
    return custom(body, layout, FunctionSpec("and", 2))


# ---------------------------------------------------------------- path enumeration


def test_zero_shuffle_protocol_has_one_outcome():
    p = custom([st.OutputCommitted((1, 2))], [st.CommitInput(1)], FunctionSpec("and", 1), arity=1)
    runs = enumerate_runs(p, (1,))
    assert len(runs) == 1 and runs[0].probability == 1 and runs[0].choices == ()


def test_equality_second_three_has_four_paths():
    for inputs in equality_second(3).domain():
        runs = enumerate_runs(equality_second(3), inputs)
        assert len(runs) == 4
        assert all(r.probability == Fraction(1, 4) for r in runs)
        assert all(len(r.choices) == 2 for r in runs)


@pytest.mark.parametrize("name,params", SMALL)
def test_probabilities_sum_to_one(name, params):
    p = build(name, **params)
    ex = explore(p)
    for inputs in p.domain():
        runs = enumerate_runs(p, inputs)
        assert sum(r.probability for r in runs) == 1
        assert sum(ex.outcomes[tuple(inputs)].values()) == 1
        for r in runs:
            prod = Fraction(1)
            for c in r.choices:
                prod *= c.probability
            assert prod == r.probability
    assert sum(deck_distribution(p, next(iter(p.domain()))).values()) == 1


@pytest.mark.parametrize("name,params", SMALL)
def test_explorer_agrees_with_path_enumeration(name, params):
    p = build(name, **params)
    ex = explore(p)
    for inputs in p.domain():
        flat = {}
        for r in enumerate_runs(p, inputs):
            key = (r.trace, r.result)
            flat[key] = flat.get(key, 0) + r.probability
        assert flat == ex.outcomes[tuple(inputs)]


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        enumerate_runs(equality_first(4), (0, 1, 0, 1), budget=50)
    with pytest.raises(BudgetExceeded):
        explore(equality_first(4), budget=50)


def test_run_once_is_reproducible_from_a_seed():
    p = equality_first(4)
    a, log_a = run_once(p, (1, 0, 1, 1), random.Random(11))
    b, log_b = run_once(p, (1, 0, 1, 1), random.Random(11))
    assert a == b and [s.label for s in log_a] == [s.label for s in log_b]
    assert a.result == 0


def test_uncovered_branch_is_raised():
    p = free_pair_protocol([st.Arm("HC", ())])
    with pytest.raises(UncoveredBranch):
        enumerate_runs(p, (0, 0))


def test_dead_branches_are_flagged():
    p = free_pair_protocol([st.Arm("CH", ()), st.Arm("HC", ())])
    ex = explore(p)
    assert len(ex.dead) == 1 and ex.dead[0][1] == "HC"
    assert analysis_report(p)["dead_branches"] == [{"branch": ex.dead[0][0], "pattern": "HC"}]


def test_builtins_have_no_dead_branches():
    for name, params in SMALL:
        assert explore(build(name, **params)).dead == [], name


# ---------------------------------------------------------------- correctness


@pytest.mark.parametrize("name,params", SMALL + SABOTAGED)
def test_builtins_and_sabotaged_variants_are_correct(name, params):
    report = verify_correctness(build(name, **params))
    assert report.passed and report.counterexamples == []


def test_wrong_function_yields_counterexamples():
    p = five_card_trick()
    report = verify_correctness(p, FunctionSpec("equality", 2))
    assert not report.passed
    bad = report.counterexamples[0]
    assert set(bad) == {"input", "trace", "result", "expected", "probability"}
    assert bad["result"] != bad["expected"]


# ---------------------------------------------------------------- security


@pytest.mark.parametrize("name,params", SMALL)
def test_builtins_are_secure(name, params):
    report = verify_security(build(name, **params))
    assert report.passed and report.violations == []


def test_five_card_trick_zero_inputs_share_one_distribution():
    report = verify_security(five_card_trick())
    assert sorted(report.classes[0]) == [(0, 0), (0, 1), (1, 0)]
    assert report.classes[1] == [(1, 1)]
    for a in report.classes[0]:
        for b in report.classes[0]:
            assert report.compare(a, b) is None


@pytest.mark.parametrize("name,params", SABOTAGED)
def test_sabotaged_variants_leak_with_genuine_counterexamples(name, params):
    p = build(name, **params)
    report = verify_security(p)
    assert not report.passed and report.violations
    ex = explore(p)
    for v in report.violations:
        i1, i2 = map(tuple, v["inputs"])
        assert p.function(i1) == p.function(i2)
        p1, p2 = map(Fraction, v["probabilities"])
        assert p1 != p2
        trace = next(t for t in ex.trace_distribution(i1).keys() | ex.trace_distribution(i2).keys()
                     if " | ".join(map(str, t)) == v["trace"])
        assert trace_probability(p, i1, trace) == p1
        assert trace_probability(p, i2, trace) == p2


def test_security_verdict_is_symmetric():
    report = verify_security(leaky_equality(3))
    v = report.violations[0]
    i1, i2 = v["inputs"]
    back = report.compare(i2, i1)
    assert back["trace"] == v["trace"]
    assert back["probabilities"] == v["probabilities"][::-1]


def test_hidden_output_puts_every_input_in_one_class():
    report = verify_security(equality_second(3))
    assert list(report.classes) == [None] and len(report.classes[None]) == 8


# ---------------------------------------------------------------- posteriors


def test_point_mass_prior_gives_point_mass_posteriors():
    p = equality_first(3)
    for at in [(0, 0, 0), (1, 0, 1)]:
        table = kwh_posteriors(p, point_prior(p.domain(), at))
        for trace, row in table.rows.items():
            assert row[at] == 1


def test_zero_probability_trace_is_a_domain_error():
    p = five_card_trick()
    table = kwh_posteriors(p, point_prior(p.domain(), (1, 1)))
    impossible = (Observation((1, 2, 3, 4, 5), "CHCHC"),)
    with pytest.raises(DomainError):
        table.posterior(impossible)


def test_prior_must_be_a_distribution():
    p = five_card_trick()
    with pytest.raises(DomainError):
        kwh_posteriors(p, {(0, 0): Fraction(1, 2)})


def test_five_card_trick_posteriors_equal_class_conditioned_prior():
    p = five_card_trick()
    table = kwh_posteriors(p, uniform_prior(p.domain()))
    assert table.matches_prior()
    assert len(table.rows) == 10  # 5 rotations of each of the two classes
    for trace, row in table.rows.items():
        if row[(1, 1)]:
            assert row[(1, 1)] == 1
        else:
            assert {row[i] for i in [(0, 0), (0, 1), (1, 0)]} == {Fraction(1, 3)}


@pytest.mark.parametrize("name,params", SMALL + SABOTAGED)
def test_security_iff_posteriors_match(name, params):
    p = build(name, **params)
    secure = verify_security(p).passed
    family = [uniform_prior(p.domain())] + [point_prior(p.domain(), i) for i in list(p.domain())[:3]]
    assert secure == all(kwh_posteriors(p, prior).matches_prior() for prior in family)


@settings(max_examples=25)
@given(hst.lists(hst.integers(0, 9), min_size=8, max_size=8).filter(any))
def test_arbitrary_rational_priors_are_preserved_by_secure_protocols(weights):
    p = equality_first(3)
    total = sum(weights)
    prior = {i: Fraction(w, total) for i, w in zip(p.domain(), weights)}
    table = kwh_posteriors(p, prior)
    assert table.matches_prior()
    first = kwh_posteriors(p, prior, upto=1)
    for trace in first.rows:
        assert first.posterior(trace) == prior


# ---------------------------------------------------------------- resources


def test_irregular_shuffle_counts_are_reported():
    arms = [st.Arm("CH", (st.RandomCut((1, 2)),)), st.Arm("HC", ())]
    layout = (st.CommitInput(1), st.CommitInput(2), st.CommitInput(1))
    body = (st.XorAll((5, 6)), st.Reveal((5, 6)), st.BranchGroup(tuple(arms)), st.Conceal((5, 6)),
            st.OutputCommitted((1, 2)))
    p = custom(body, layout)
    res = count_resources(p)
    assert not res.uniform and (res.shuffles_min, res.shuffles_max) == (1, 2)
    assert res.to_json()["shuffles"] == [1, 2]


def test_resource_json_shape():
    res = count_resources(equality_first(4)).to_json()
    assert res == {"cards": 8, "suits": {"C": 4, "H": 4}, "shuffles": 4, "uniform": True,
                   "by_kind": {"ksec": 2, "rcut": 1, "xor": 1}}


# ---------------------------------------------------------------- sampling and determinism


def test_sampled_mode_refutes_a_leak_but_proves_nothing():
    leaky = sampled_check(build("equality_first_no_final_cut", n=3), samples=4, seed=3)
    assert not leaky["security"]["pass"]
    assert leaky["sampling"]["proof"] is False
    secure = sampled_check(equality_first(3), samples=4, seed=3)
    assert secure["security"]["pass"] and secure["correctness"]["pass"]
    assert sampled_check(equality_first(3), samples=4, seed=3) == secure


@pytest.mark.parametrize("name,params", SMALL[:4])
def test_trace_probability_matches_exploration(name, params):
    p = build(name, **params)
    ex = explore(p)
    for inputs in p.domain():
        for trace, prob in ex.trace_distribution(inputs).items():
            assert trace_probability(p, inputs, trace) == prob


def test_report_is_independent_of_worker_count():
    p = equality_first(4)
    one = json.dumps(analysis_report(p, threads=1, include_posteriors=True), sort_keys=True)
    three = json.dumps(analysis_report(p, threads=3, include_posteriors=True), sort_keys=True)
    assert one == three


def test_explore_order_does_not_matter():
    p = equality_first(3)
    inputs = list(p.domain())
    forward = explore(p, inputs)
    backward = explore(p, inputs[::-1])
    assert forward.outcomes == backward.outcomes
