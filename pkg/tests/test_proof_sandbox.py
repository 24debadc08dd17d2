import numpy as np
import pytest

from agents import builtin, compile_agent, compile_duel, random_agent
from arena import duel
from errors import AgentDefinitionError, DomainError
from gl_eval import FixedPointSystem, holds_eventually
from modal_core import TOP, Not, Var, parse_formula
from proof_sandbox import (
    Guided,
    Lexicographic,
    OracleFirst,
    ProofBudget,
    ProofSystem,
    bounded_duel,
    check_proof,
    is_tautology,
    lob_derivation,
    make_enumerator,
    proof_search,
    string_generator,
)

EMPTY = ProofSystem(FixedPointSystem((), ()))


def duel_system(row: str, col: str) -> ProofSystem:
    return ProofSystem.for_system(compile_duel(builtin(row), builtin(col)))


class TestStringGenerator:
    def test_bound_three(self):
        strings = list(string_generator(3, "ab"))
        assert len(strings) == 14
        assert strings[:7] == ["a", "b", "aa", "ab", "ba", "bb", "aaa"]
        assert strings[-1] == "bbb"

    @pytest.mark.parametrize(
        "bound, charset, expected",
        [
            (2, "ab", ["a", "b", "aa", "ab", "ba", "bb"]),
            (1, "xyz", ["x", "y", "z"]),
            (3, "a", ["a", "aa", "aaa"]),
        ],
    )
    def test_small_cases(self, bound, charset, expected):
        assert list(string_generator(bound, charset)) == expected

    def test_multi_character_symbols(self):
        assert list(string_generator(2, ("ab", "c"))) == ["ab", "c", "abab", "abc", "cab", "cc"]

    def test_rejects_zero_bound(self):
        with pytest.raises(DomainError):
            list(string_generator(0, "ab"))


class TestChecker:
    def test_single_citation(self):
        system = duel_system("CUPOD", "DB")
        assert check_proof(system, "1. b.D [Agent b.D + Taut]\n", Var("b.D"))

    def test_definition_alias(self):
        system = duel_system("CUPOD", "DB")
        assert check_proof(system, "1. ~(b.C) [Agent b.C-def + Taut]", Not(Var("b.C")))

    def test_modus_ponens(self):
        proof = "1. b.D <-> T [Agent b.D]\n2. (b.D <-> T) -> b.D [Taut]\n3. b.D [MP 2,1]\n"
        assert check_proof(duel_system("CUPOD", "DB"), proof, Var("b.D"))
        assert check_proof(duel_system("CUPOD", "DB"), proof.replace("MP 2,1", "MP 1, 2"), Var("b.D"))

    @pytest.mark.parametrize(
        "proof, goal",
        [
            ("1. b.D [Agent b.D + Taut]\n", "a.D"),
            ("2. b.D [Agent b.D + Taut]\n", "b.D"),
            ("1. b.D [Agent a.D + Taut]\n", "b.D"),
            ("1. b.D [Agent b.D]\n", "b.D"),
            ("1. b.D [Axiom]\n", "b.D"),
            ("1. b.D [MP 1,1]\n", "b.D"),
            ("1. b.D [Agent x.D + Taut]\n", "b.D"),
            ("1. b.D & [Taut]\n", "b.D"),
            (" 1. b.D [Agent b.D + Taut]\n", "b.D"),
            ("", "b.D"),
        ],
    )
    def test_rejections(self, proof, goal):
        assert not check_proof(duel_system("CUPOD", "DB"), proof, parse_formula(goal))

    def test_axioms(self):
        assert check_proof(EMPTY, "1. [](T -> F) -> []T -> []F [K]", parse_formula("[](T -> F) -> []T -> []F"))
        assert check_proof(EMPTY, "1. []([]F -> F) -> []F [Lob]", parse_formula("[]([]F -> F) -> []F"))
        assert not check_proof(EMPTY, "1. []([]F -> T) -> []F [Lob]", parse_formula("[]([]F -> T) -> []F"))

    def test_necessitation(self):
        proof = "1. T [Taut]\n2. []T [Nec 1]\n"
        assert check_proof(EMPTY, proof, parse_formula("[]T"))
        assert not check_proof(EMPTY, "1. []T [Nec 1]\n", parse_formula("[]T"))

    def test_tautology_treats_boxes_as_atoms(self):
        assert is_tautology(parse_formula("[]a -> []a"))
        assert not is_tautology(parse_formula("[]a -> a"))
        assert not is_tautology(parse_formula("a | ~a"), atom_cap=0)


class TestLobDerivation:
    @pytest.mark.parametrize("pair", [("DUPOC", "DUPOC"), ("CUPOD", "CUPOD"), ("CIMCIC", "CIMCIC")])
    def test_derivation_checks(self, pair):
        system = duel_system(*pair)
        goal = Var("b.C") if pair[0] == "DUPOC" else parse_formula("b.D" if pair[0] == "CUPOD" else "a.C -> b.C")
        proof = lob_derivation(system, goal)
        assert check_proof(system, proof.text, goal)
        assert proof.length == len(proof.text)

    def test_derivation_uses_lob_axiom(self):
        proof = lob_derivation(duel_system("DUPOC", "DUPOC"), Var("b.C"))
        assert "[Lob]" in proof.text


class TestProofSearch:
    def test_lexicographic_finds_the_first_proof(self):
        symbols = ("1. ", "T", " [Taut]", "\n")
        enum = Lexicographic(symbols, max_symbols=4)
        report = proof_search(ProofBudget(12), EMPTY, TOP, enum, max_candidates=10_000)
        within = [s for s in string_generator(4, symbols) if len(s) <= 12]
        valid = [i for i, s in enumerate(within) if check_proof(EMPTY, s, TOP)]
        assert report.found
        assert report.proof_text == "1. T [Taut]"
        assert report.proof_text == within[valid[0]]
        assert report.candidates_examined == valid[0] + 1

    def test_lexicographic_exhausts_the_budget(self):
        report = proof_search(ProofBudget(8), EMPTY, TOP, Lexicographic("1. T"), max_candidates=10**6)
        assert not report.found
        assert report.candidates_examined == 87_380
        assert not report.capped

    def test_candidate_cap(self):
        report = proof_search(ProofBudget(8), EMPTY, TOP, Lexicographic("1. T"), max_candidates=100)
        assert not report.found
        assert report.capped
        assert report.candidates_examined == 100

    def test_budget_filters_long_candidates(self):
        system = duel_system("CUPOD", "DB")
        report = proof_search(ProofBudget(25), system, Var("b.D"), Guided())
        assert not report.found
        report = proof_search(ProofBudget(26), system, Var("b.D"), Guided())
        assert report.proof_text == "1. b.D [Agent b.D + Taut]\n"
        assert report.proof_length == 26

    def test_oracle_seeds_come_first(self):
        system = duel_system("CUPOD", "DB")
        seed = "1. b.D <-> T [Agent b.D]\n2. (b.D <-> T) -> b.D [Taut]\n3. b.D [MP 2,1]\n"
        report = proof_search(ProofBudget(10_000), system, Var("b.D"), OracleFirst(seeds=(seed,)))
        assert report.proof_text == seed
        assert report.candidates_examined == 1

    def test_report_json(self):
        report = proof_search(ProofBudget(100), duel_system("CUPOD", "DB"), Var("b.D"), Guided())
        data = report.to_json()
        assert data["goal"] == "b.D"
        assert data["found"] is True
        assert data["proof_length"] == 26
        assert data["enumerator"] == "guided"

    def test_rejects_empty_budget(self):
        with pytest.raises(DomainError):
            ProofBudget(0)

    def test_enumerator_names(self):
        assert isinstance(make_enumerator("lex"), Lexicographic)
        assert make_enumerator("lex", "ab").charset == "ab"
        assert isinstance(make_enumerator("guided"), Guided)
        assert isinstance(make_enumerator("oracle"), OracleFirst)
        with pytest.raises(DomainError):
            make_enumerator("smart")

    def test_charset_validation(self):
        with pytest.raises(DomainError):
            Lexicographic("aa")
        with pytest.raises(DomainError):
            Lexicographic("")

    def test_found_proofs_hold_in_the_limit(self):
        rng = np.random.default_rng(31)
        for i in range(40):
            fixed_point = compile_duel(random_agent(rng, name=f"A{i}"), random_agent(rng, name=f"B{i}"))
            system = ProofSystem.for_system(fixed_point)
            for var in fixed_point.vars:
                for goal in (Var(var), Not(Var(var))):
                    report = proof_search(ProofBudget(10_000), system, goal, Guided())
                    if report.found:
                        assert holds_eventually(fixed_point, goal)


class TestBoundedDuel:
    @pytest.mark.slow
    def test_small_budget_cannot_prove(self):
        outcome = bounded_duel(
            builtin("CUPOD"), ProofBudget(3), make_enumerator("lex"), builtin("DB"), ProofBudget(3), make_enumerator("lex")
        )
        assert outcome.outcome.actions == ("C", "D")
        report = outcome.row_searches[0].reports[0]
        assert not report.found
        assert report.candidates_examined == 95 + 95**2 + 95**3

    def test_large_budget_proves(self):
        outcome = bounded_duel(builtin("CUPOD"), ProofBudget(10_000), Guided(), builtin("DB"), ProofBudget(10_000), Guided())
        assert outcome.outcome.actions == ("D", "D")
        assert outcome.row_searches[0].reports[0].proof_text == "1. b.D [Agent b.D + Taut]\n"

    def test_lob_self_play(self):
        a = b = builtin("DUPOC")
        outcome = bounded_duel(a, ProofBudget(10_000), OracleFirst(), b, ProofBudget(10_000), OracleFirst())
        assert outcome.outcome.actions == ("C", "C")
        system = ProofSystem.for_system(compile_duel(a, b))
        row = outcome.row_searches[0].reports[0]
        col = outcome.col_searches[0].reports[0]
        assert row.proof_length == len(lob_derivation(system, Var("b.C")).text)
        assert col.proof_length == len(lob_derivation(system, Var("a.C")).text)
        assert check_proof(system, row.proof_text, Var("b.C"))

    @pytest.mark.parametrize(
        "row, col",
        [
            ("DUPOC", "DUPOC"),
            ("CUPOD", "CUPOD"),
            ("CIMCIC", "CIMCIC"),
            ("DUPOC", "CIMCIC"),
            ("DIMCID", "DIMCID"),
            ("CUPOD", "DIMCID"),
            ("CUPOD", "DB"),
            ("CB", "DB"),
        ],
    )
    def test_agrees_with_the_idealized_duel(self, row, col):
        a, b = builtin(row), builtin(col)
        budget = ProofBudget(10_000)
        assert bounded_duel(a, budget, Guided(), b, budget, Guided()).outcome.actions == duel(a, b).actions

    @pytest.mark.parametrize(
        "row, col",
        [
            ("DUPOC", "DUPOC"),
            ("CUPOD", "CUPOD"),
            ("CIMCIC", "CIMCIC"),
            ("DUPOC", "CIMCIC"),
            ("DIMCID", "DIMCID"),
            ("CUPOD", "DIMCID"),
        ],
    )
    def test_oracle_agrees_with_the_idealized_duel(self, row, col):
        a, b = builtin(row), builtin(col)
        budget = ProofBudget(10_000)
        outcome = bounded_duel(a, budget, OracleFirst(), b, budget, OracleFirst())
        assert outcome.outcome.actions == duel(a, b).actions
        assert all(search.fired for search in outcome.row_searches + outcome.col_searches)

    @pytest.mark.parametrize("row, col", [("DUPOC", "DUPOC"), ("DUPOC", "CIMCIC"), ("CUPOD", "DB"), ("CIMCIC", "CIMCIC")])
    def test_larger_budgets_keep_the_proof(self, row, col):
        a, b = builtin(row), builtin(col)
        rule = a.rules[0]
        proof = None
        for k in (10, 25, 26, 40, 100, 250, 1_000, 10_000):
            outcome = bounded_duel(a, ProofBudget(k), Guided(), b, ProofBudget(k), Guided())
            report = outcome.row_searches[0].reports[0]
            if proof is not None:
                assert report.proof_text == proof
                assert outcome.outcome.row_action == rule.action
            elif report.found:
                proof = report.proof_text
        assert proof is not None

    @pytest.mark.parametrize("enum", [Guided(), OracleFirst()], ids=["guided", "oracle"])
    def test_cooperation_survives_larger_budgets(self, enum):
        dupoc = builtin("DUPOC")
        actions = [
            bounded_duel(dupoc, ProofBudget(k), enum, dupoc, ProofBudget(k), enum).outcome.row_action
            for k in (10, 50, 100, 200, 400, 800, 1_600, 10_000)
        ]
        assert actions[-1] == "C"
        first = actions.index("C")
        assert actions[first:] == ["C"] * (len(actions) - first)

    def test_conjunctive_conditions_search_each_goal(self):
        outcome = bounded_duel(
            builtin("PrudentBot"), ProofBudget(10_000), Guided(), builtin("DB"), ProofBudget(10_000), Guided()
        )
        assert outcome.outcome.actions == ("D", "D")
        assert not outcome.row_searches[0].fired

    def test_rejects_non_provability_conditions(self):
        agent = compile_agent("agent Odd { actions C, D default D; C if ~[]F }")
        with pytest.raises(AgentDefinitionError):
            bounded_duel(agent, ProofBudget(100), Guided(), builtin("DB"), ProofBudget(100), Guided())

    def test_json(self):
        outcome = bounded_duel(builtin("CUPOD"), ProofBudget(100), Guided(), builtin("DB"), ProofBudget(100), Guided())
        data = outcome.to_json()
        assert data["row_action"] == "D"
        assert data["row_searches"][0]["fired"] is True
        assert data["col_searches"] == []
