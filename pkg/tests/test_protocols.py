import itertools
import math
from fractions import Fraction

import pytest

from cardproto import steps as st
from cardproto.analyzer import count_resources, deck_distribution, enumerate_runs, explore
from cardproto.deck import Permutation, Scheme, Suit, encode_int
from cardproto.errors import DomainError
from cardproto.protocol import OUTPUT, PERM, SHUFFLE, CompileError, FunctionSpec, Protocol, preimages
from cardproto.protocols import (BUILTINS, add_protocol, and_protocol, build, doubly_symmetric,
                                 equality_first, equality_second, five_card_trick, kcand_equality,
                                 six_card_trick, sum_protocol, symmetric)


def results(protocol, inputs):
    return {run.result for run in enumerate_runs(protocol, inputs)}


def output_rows(protocol, inputs):
    """Suit strings at the output positions, over every path."""
    (stmt, positions), = [ins.arg for ins in protocol.program.code if ins.op == OUTPUT][:1]
    return {"".join(run.final_deck[p].suit.value for p in positions) for run in enumerate_runs(protocol, inputs)}


def pre_cut_decks(protocol):
    """Deck suits right before the first shuffle, for every input."""
    out = {}
    for inputs in protocol.domain():
        deck = list(protocol.initial_deck(inputs))
        for ins in protocol.program.code:
            if ins.op == SHUFFLE:
                break
            if ins.op == PERM:
                moved = [None] * len(deck)
                for i, j in enumerate(ins.arg):
                    moved[j] = deck[i]
                deck = moved
        out[inputs] = "".join(c.suit.value for c in deck)
    return out


def rotation_class(suits):
    return min(suits[r:] + suits[:r] for r in range(len(suits)))


# ---------------------------------------------------------------- the two tricks


def test_five_card_trick_and():
    p = five_card_trick()
    runs = enumerate_runs(p, (1, 1))
    assert len(runs) == 5 and {r.result for r in runs} == {1}
    assert {r.probability for r in runs} == {Fraction(1, 5)}
    assert results(p, (0, 0)) == {0}
    ex = explore(p)
    assert ex.trace_distribution((0, 1)) == ex.trace_distribution((1, 0)) == ex.trace_distribution((0, 0))


def test_five_card_trick_has_two_rotation_classes():
    decks = pre_cut_decks(five_card_trick())
    classes = {rotation_class(d) for d in decks.values()}
    assert len(classes) == 2
    assert decks[(1, 1)] == "HCCCH" and rotation_class("HHCCC") == rotation_class(decks[(1, 1)])
    assert {rotation_class(decks[i]) for i in [(0, 0), (0, 1), (1, 0)]} != {rotation_class("HHCCC")}


@pytest.mark.parametrize("inputs,want", [((1, 1, 1), 1), ((0, 0, 0), 1), ((1, 0, 1), 0)])
def test_six_card_trick(inputs, want):
    assert results(six_card_trick(), inputs) == {want}


def test_six_card_trick_has_two_rotation_classes():
    decks = pre_cut_decks(six_card_trick())
    classes = {rotation_class(d) for d in decks.values()}
    assert len(classes) == 2
    assert rotation_class("CHCHCH") in classes
    assert {rotation_class(decks[(0, 0, 0)]), rotation_class(decks[(1, 1, 1)])} == {rotation_class("CHCHCH")}


# ---------------------------------------------------------------- addition and sums


def test_add_one_plus_zero_mod_three():
    assert output_rows(add_protocol(3), (1, 0)) == {encode_int(1, 3, Scheme.HEART).cards.suits}


@pytest.mark.parametrize("k", range(2, 7))
def test_add_zero_plus_zero(k):
    assert output_rows(add_protocol(k), (0, 0)) == {encode_int(0, k, Scheme.HEART).cards.suits}


def test_add_two_plus_three_mod_five_every_cut():
    runs = enumerate_runs(add_protocol(5), (2, 3))
    assert len(runs) == 5
    (stmt, positions), = [ins.arg for ins in add_protocol(5).program.code if ins.op == OUTPUT]
    assert {"".join(r.final_deck[p].suit.value for p in positions) for r in runs} == {"HCCCC"}


@pytest.mark.parametrize("k", range(2, 6))
def test_add_is_correct_for_every_pair(k):
    p = add_protocol(k)
    for a, b in itertools.product(range(k), repeat=2):
        assert results(p, (a, b)) == {(a + b) % k}


@pytest.mark.parametrize("k", range(2, 6))
def test_add_frees_one_club_and_k_minus_one_hearts(k):
    p = add_protocol(k)
    (stmt, positions), = [ins.arg for ins in p.program.code if ins.op == OUTPUT]
    rest = [i for i in range(2 * k) if i not in positions]
    for a, b in itertools.product(range(k), repeat=2):
        for deck in deck_distribution(p, (a, b)):
            freed = [deck[i] for i in rest]
            assert "".join(c.suit.value for c in freed) == "C" + "H" * (k - 1)
            assert not any(c.face_up for c in freed)


@pytest.mark.parametrize("bits,want", [((1, 0, 1), "CCHC"), ((1, 1, 0, 1), "CCCHC"), ((0, 0, 0), "HCCC")])
def test_running_sum_rows(bits, want):
    assert output_rows(sum_protocol(len(bits)), bits) == {want}


# ---------------------------------------------------------------- equality, first protocol


def test_equality_first_examples():
    assert results(equality_first(4), (1, 1, 1, 1)) == {1}
    assert results(equality_first(3), (0, 1, 0)) == {0}


@pytest.mark.parametrize("n", range(2, 6))
def test_equality_first_shuffles_and_cards(n):
    res = count_resources(equality_first(n))
    assert (res.cards, res.shuffles_min, res.shuffles_max) == (2 * n, n, n)
    assert (res.clubs, res.hearts) == (n, n)


@pytest.mark.parametrize("n", range(2, 6))
def test_doubly_symmetric_equality_matches_first_protocol(n):
    table = [1] + [0] * (n - 1) + [1]
    ds, ef = doubly_symmetric(n, table), equality_first(n)
    for inputs in ef.domain():
        assert results(ds, inputs) == results(ef, inputs) == {int(len(set(inputs)) == 1)}


def test_doubly_symmetric_parity_of_four_bits():
    p = doubly_symmetric(4, [0, 1, 0, 1, 0])
    for inputs in p.domain():
        assert results(p, inputs) == {sum(inputs) % 2}
    # the reduced row of length n is accepted as well
    assert doubly_symmetric(4, [0, 1, 0, 1]).function == p.function


@pytest.mark.parametrize("c", [0, 1])
def test_doubly_symmetric_constant(c):
    p = doubly_symmetric(3, [c] * 4)
    pcuts = [s for s in p.body if isinstance(s, st.PartialCut)]
    assert len(pcuts) == 1 and len(pcuts[0].positions) == 3
    for inputs in p.domain():
        assert results(p, inputs) == {c}


def test_doubly_symmetric_rejects_other_functions():
    with pytest.raises(DomainError):
        doubly_symmetric(3, [0, 0, 1, 1])


# ---------------------------------------------------------------- symmetric with two extra cards


def test_symmetric_majority_of_three():
    p = symmetric(3, [0, 0, 1, 1])
    assert results(p, (1, 1, 0)) == {1}
    assert results(p, (0, 0, 1)) == {0}
    assert p.card_count == 8


def test_symmetric_three_valued_majority_with_tie():
    p = symmetric(4, [0, 0, 2, 1, 1])
    assert results(p, (1, 1, 0, 0)) == {2}
    for inputs in p.domain():
        assert results(p, inputs) == {[0, 0, 2, 1, 1][sum(inputs)]}


def test_symmetric_identity_table_reveals_the_sum_without_cuts():
    p = symmetric(3, [0, 1, 2, 3])
    assert not any(isinstance(s, st.PartialCut) for s in p.body)
    for inputs in p.domain():
        assert results(p, inputs) == {sum(inputs)}


def test_preimages():
    assert preimages([1, 0, 0, 0, 1]) == {0: (1, 2, 3), 1: (0, 4)}


# ---------------------------------------------------------------- AND and committed equality


def test_committed_and():
    p = and_protocol()
    runs = enumerate_runs(p, (1, 1))
    assert len(runs) == 2 and {r.result for r in runs} == {1}
    for b in (0, 1):
        assert results(p, (0, b)) == {0}
    assert results(p, (1, 0)) == {0}


def test_equality_second_examples():
    assert results(equality_second(3), (1, 1, 1)) == {1}
    assert results(equality_second(4), (1, 0, 1, 1)) == {0}
    assert len(enumerate_runs(equality_second(3), (0, 1, 1))) == 4


@pytest.mark.parametrize("n", range(2, 7))
def test_equality_second_counts(n):
    res = count_resources(equality_second(n))
    assert (res.cards, res.shuffles_min, res.shuffles_max) == (2 * n, n - 1, n - 1)


def test_committed_outputs_are_valid_face_down_commitments():
    for p in (equality_second(3), kcand_equality(2, 3), and_protocol()):
        (stmt, positions), = [ins.arg for ins in p.program.code if ins.op == OUTPUT]
        assert isinstance(stmt, st.OutputCommitted)
        for inputs in p.domain():
            for run in enumerate_runs(p, inputs):
                cards = [run.final_deck[q] for q in positions]
                assert {c.suit for c in cards} == {Suit.CLUB, Suit.HEART}
                assert not any(c.face_up for c in cards)
                assert not run.visible


def test_kcand_examples():
    assert results(kcand_equality(3, 4), (2, 2, 2)) == {1}
    assert results(kcand_equality(2, 3), (1, 2)) == {0}
    with pytest.raises(DomainError):
        kcand_equality(2, 3).check_input((3, 0))


@pytest.mark.parametrize("n,k", [(2, 2), (2, 3), (3, 4), (2, 5), (3, 3)])
def test_kcand_counts(n, k):
    ell = max(1, math.ceil(math.log2(k)))
    res = count_resources(kcand_equality(n, k))
    assert (res.cards, res.shuffles_min, res.shuffles_max) == (2 * ell * n, ell * n - 1, ell * n - 1)


def test_kcand_with_two_candidates_is_equality_second():
    assert kcand_equality(3, 2).body == equality_second(3).body


@pytest.mark.parametrize("factory", [equality_first, equality_second, sum_protocol])
def test_single_input_rejected(factory):
    with pytest.raises(DomainError):
        factory(1)


def test_build_by_name():
    assert build("equality_first", n=3) == equality_first(3)
    assert build("symmetric_plus_two", n=3, g=[0, 0, 1, 1]) == symmetric(3, [0, 0, 1, 1])
    with pytest.raises(DomainError):
        build("no_such_protocol")
    assert {"five_card_trick", "six_card_trick", "equality_first", "equality_second",
            "doubly_symmetric", "symmetric", "kcand_equality"} <= set(BUILTINS)


# ---------------------------------------------------------------- target functions


def test_function_flags():
    assert FunctionSpec("equality", 4).is_doubly_symmetric()
    assert FunctionSpec("symmetric", 3, table=(0, 0, 1, 1)).is_symmetric()
    assert not FunctionSpec("symmetric", 3, table=(0, 0, 1, 1)).is_doubly_symmetric()
    assert FunctionSpec("and", 3).reduced() == (0, 0, 0, 1)
    with pytest.raises(DomainError):
        FunctionSpec("add", 2, 3).reduced()
    with pytest.raises(DomainError):
        FunctionSpec("symmetric", 3, table=(0, 1))


@pytest.mark.parametrize("n", range(2, 7))
def test_symmetry_checked_exhaustively(n):
    assert FunctionSpec("equality", n).is_symmetric()
    assert FunctionSpec("and", n).is_symmetric()
    assert not FunctionSpec("and", n).is_doubly_symmetric()


# ---------------------------------------------------------------- static checks


def _proto(body, layout=(st.CommitInput(1), st.CommitInput(2)), fn=FunctionSpec("and", 2)):
    return Protocol("custom", (), 2, 2, layout, tuple(body), fn)


def _problems(body, **kw):
    with pytest.raises(CompileError) as exc:
        _proto(body, **kw).program
    return " ".join(msg for _, msg in exc.value.problems)


def test_reveal_of_face_up_card_rejected():
    body = [st.Reveal((1,)), st.Reveal((1, 2)), st.OutputBit((1, 2))]
    assert "already face-up" in _problems(body)


def test_shuffling_face_up_cards_rejected():
    body = [st.Reveal((1,)), st.RandomCut(), st.Reveal((2, 3, 4)), st.OutputBit((1, 2))]
    assert "face-up" in _problems(body)


def test_branch_needs_preceding_reveal():
    body = [st.BranchGroup((st.Arm("CH", ()), st.Arm("HC", ()))), st.OutputCommitted((1, 2))]
    assert "directly follow a reveal" in _problems(body)


def test_missing_output_rejected():
    assert "without an output" in _problems([st.RandomCut()])


def test_out_of_range_position_rejected():
    assert "outside" in _problems([st.Reveal((5,)), st.OutputBit((1, 2))])


def test_arms_must_agree_on_face_up_cards():
    body = [st.Reveal((1, 2)),
            st.BranchGroup((st.Arm("CH", (st.Conceal((1, 2)),)), st.Arm("HC", ()))),
            st.OutputCommitted((3, 4))]
    assert "different cards face-up" in _problems(body)


def test_cyclic_pattern_length_checked():
    body = [st.Reveal((1, 2, 3, 4)), st.OutputCyclic("CHC", (1, 2, 3, 4))]
    assert "pattern length" in _problems(body)


def test_perm_size_checked():
    body = [st.Perm(Permutation.identity(3)), st.OutputCommitted((1, 2))]
    assert "acts on 3" in _problems(body)
