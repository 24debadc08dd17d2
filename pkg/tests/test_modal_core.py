import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from errors import ParseError
from modal_core import (
    BOTTOM,
    TOP,
    And,
    Box,
    Iff,
    Implies,
    Not,
    Or,
    Var,
    box_subformulas,
    fold_and,
    fold_or,
    is_fully_modalized,
    parse_formula,
    render_formula,
    substitute,
    unmodalized_occurrences,
    variables,
)
from tests.strategies import bindings, formulas, names

a, b, c = Var("a"), Var("b"), Var("c")


class TestParse:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("T", TOP),
            ("F", BOTTOM),
            ("[]( a -> b )", Box(Implies(a, b))),
            ("~[]~a", Not(Box(Not(a)))),
            ("a & b | c", Or(And(a, b), c)),
            ("a | b & c", Or(a, And(b, c))),
            ("a -> b -> c", Implies(a, Implies(b, c))),
            ("a <-> b <-> c", Iff(Iff(a, b), c)),
            ("a -> b <-> c", Iff(Implies(a, b), c)),
            ("[]a & b", And(Box(a), b)),
            ("~a.C | opp_vs_DB.D", Or(Not(Var("a.C")), Var("opp_vs_DB.D"))),
            ("Tx", Var("Tx")),
        ],
    )
    def test_precedence_and_associativity(self, text, expected):
        assert parse_formula(text) == expected

    def test_error_reports_offset_and_expected_tokens(self):
        with pytest.raises(ParseError) as info:
            parse_formula("a & ")
        assert info.value.offset == 4
        assert "identifier" in info.value.expected
        assert "'('" in info.value.expected

    def test_error_at_non_ascii_character(self):
        with pytest.raises(ParseError) as info:
            parse_formula("a & ä")
        assert info.value.offset == 4

    def test_unexpected_token_offset(self):
        with pytest.raises(ParseError) as info:
            parse_formula("a b")
        assert info.value.offset == 2

    @pytest.mark.parametrize("text", ["", "(", "a ->", "[]", "a & & b", "a <- b"])
    def test_rejects_malformed_input(self, text):
        with pytest.raises(ParseError):
            parse_formula(text)

    def test_parse_error_exit_code(self):
        assert ParseError("x").exit_code == 2


class TestRender:
    @pytest.mark.parametrize(
        "formula, text",
        [
            (TOP, "T"),
            (Box(a), "[]a"),
            (Implies(Box(a), b), "[]a -> b"),
            (Implies(Implies(a, b), c), "(a -> b) -> c"),
            (Implies(a, Implies(b, c)), "a -> b -> c"),
            (And(a, Or(b, c)), "a & (b | c)"),
            (Or(And(a, b), c), "a & b | c"),
            (Box(And(a, b)), "[](a & b)"),
            (Not(Not(a)), "~~a"),
            (Iff(a, Iff(b, c)), "a <-> (b <-> c)"),
        ],
    )
    def test_minimal_parentheses(self, formula, text):
        assert render_formula(formula) == text

    @given(formulas())
    def test_round_trip(self, f):
        assert parse_formula(render_formula(f)) == f

    def test_round_trip_deep(self):
        f = a
        for wrap in (Box, Not, lambda g: And(g, b), lambda g: Implies(g, g), Box, lambda g: Iff(c, g), Not):
            f = wrap(f)
        assert parse_formula(render_formula(f)) == f


class TestSubstitute:
    def test_replaces_bound_variable(self):
        assert substitute(Box(a), {"a": BOTTOM}) == Box(BOTTOM)

    def test_empty_bindings_are_identity(self):
        assert substitute(a, {}) == a

    def test_is_simultaneous(self):
        assert substitute(And(a, b), {a: b, b: a}) == And(b, a)

    @given(formulas(), bindings(), bindings())
    def test_composition(self, f, sigma, tau):
        sigma_range = {v for g in sigma.values() for v in variables(g)}
        tau_range = {v for g in tau.values() for v in variables(g)}
        assume(not (sigma_range & set(tau)) and not (tau_range & set(sigma)))
        composed = {**tau, **{k: substitute(v, tau) for k, v in sigma.items()}}
        assert substitute(substitute(f, sigma), tau) == substitute(f, composed)


class TestModalization:
    @pytest.mark.parametrize(
        "formula, expected",
        [
            (Box(a), True),
            (a, False),
            (Implies(Box(a), Box(Not(a))), True),
            (And(Box(a), b), True),
            (Or(Box(a), Not(a)), False),
        ],
    )
    def test_is_fully_modalized(self, formula, expected):
        assert is_fully_modalized(formula, {"a"}) is expected

    @given(formulas(), st.sets(names()))
    def test_monotone_under_box(self, f, vars):
        if is_fully_modalized(f, vars):
            assert is_fully_modalized(Box(f), vars)

    def test_occurrence_paths(self):
        found = unmodalized_occurrences(Implies(Box(a), Not(a)), ["a"])
        assert found == [("a", ("Implies.right", "Not.operand"))]


class TestBoxSubformulas:
    def test_single(self):
        assert box_subformulas(Box(a)) == [Box(a)]

    def test_none(self):
        assert box_subformulas(a) == []

    def test_innermost_first(self):
        assert box_subformulas(Box(Box(a))) == [Box(a), Box(Box(a))]

    def test_structural_dedup_leftmost_first(self):
        f = And(Box(b), Or(Box(a), Box(b)))
        assert box_subformulas(f) == [Box(b), Box(a)]


def test_empty_folds():
    assert fold_and([]) == TOP
    assert fold_or([]) == BOTTOM
    assert fold_and([a, b, c]) == And(And(a, b), c)
