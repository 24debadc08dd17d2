import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agents import BUILTIN_NAMES, builtin, compile_agent, random_agent
from arena import IDEALIZED_LABEL, duel, duel_matrix, experiment_report
from errors import ActionSetMismatch, AgentDefinitionError
from tests.strategies import agents


def play(row: str, col: str) -> tuple[str, str]:
    return duel(builtin(row), builtin(col)).actions


class TestDuel:
    @pytest.mark.parametrize(
        "row, col, expected",
        [
            ("CUPOD", "CUPOD", ("D", "D")),
            ("DUPOC", "DUPOC", ("C", "C")),
            ("CIMCIC", "CIMCIC", ("C", "C")),
            ("DUPOC", "CIMCIC", ("C", "C")),
            ("DIMCID", "DIMCID", ("D", "D")),
            ("CUPOD", "DIMCID", ("D", "D")),
        ],
    )
    def test_provability_duels(self, row, col, expected):
        assert play(row, col) == expected

    @pytest.mark.parametrize(
        "row, col, expected",
        [
            ("CB", "DB", ("C", "D")),
            ("DIMCID", "DB", ("D", "D")),
            # provably not cooperating is a fixed point, so DIMCID defects against CB
            ("DIMCID", "CB", ("D", "C")),
            ("DUPOC", "CUPOD", ("D", "C")),
            ("CUPOD", "CIMCIC", ("C", "D")),
            ("DUPOC", "DIMCID", ("D", "D")),
        ],
    )
    def test_worked_examples(self, row, col, expected):
        assert play(row, col) == expected

    @pytest.mark.parametrize(
        "col, expected",
        [
            ("PrudentBot", ("C", "C")),
            ("CB", ("D", "C")),
            ("DB", ("D", "D")),
            ("DUPOC", ("C", "C")),
        ],
    )
    def test_prudentbot(self, col, expected):
        assert play("PrudentBot", col) == expected

    def test_three_action_agents(self):
        assert play("CDEBot", "DUPOC") == ("C", "C")
        assert play("CDEBot", "EUPOD") == ("E", "E")
        assert play("EUPOD", "EUPOD") == ("D", "D")

    def test_swap_mirrors_the_duel(self):
        forward = duel(builtin("CB"), builtin("DB"))
        backward = duel(builtin("DB"), builtin("CB"))
        assert forward.swap().actions == backward.actions
        assert forward.swap().row_agent == "DB"

    def test_outcome_json_carries_evidence(self):
        report = duel(builtin("DUPOC"), builtin("DUPOC")).to_json()
        assert report["row_action"] == "C"
        assert report["col_action"] == "C"
        assert report["stabilization_rank"] == len(report["trace"]) - 1

    def test_custom_agent(self):
        mirror = compile_agent("agent Mirror { actions C, D default D; C if [](me(C) -> opp(C)) }")
        assert duel(mirror, mirror).actions == ("C", "C")
        assert duel(mirror, builtin("DB")).actions == ("D", "D")


class TestSymmetry:
    @pytest.mark.parametrize("row", BUILTIN_NAMES)
    @pytest.mark.parametrize("col", BUILTIN_NAMES)
    def test_builtin_pairs(self, row, col):
        forward = duel(builtin(row), builtin(col))
        backward = duel(builtin(col), builtin(row))
        assert forward.swap().actions == backward.actions
        assert (forward.swap().row_agent, forward.swap().col_agent) == (col, row)

    @given(agents(), st.sampled_from(BUILTIN_NAMES))
    def test_random_agent_against_builtins(self, agent, name):
        opponent = builtin(name)
        assert duel(agent, opponent).swap().actions == duel(opponent, agent).actions

    @given(agents(), agents(name="S"))
    def test_random_pairs(self, a, b):
        assert duel(a, b).swap().actions == duel(b, a).actions

    @given(agents(), agents(name="S"))
    def test_repeated_duels_are_identical(self, a, b):
        first, second = duel(a, b), duel(a, b)
        assert first == second
        assert first.to_json() == second.to_json()


@pytest.mark.slow
class TestUnexploitability:
    OPPONENTS = 1000

    def opponents(self, seed: int):
        rng = np.random.default_rng(seed)
        return [random_agent(rng, name=f"R{i}") for i in range(self.OPPONENTS)]

    def test_cupod_never_exploits(self):
        assert all(duel(builtin("CUPOD"), x).actions != ("D", "C") for x in self.opponents(11))

    def test_dupoc_is_never_exploited(self):
        assert all(duel(builtin("DUPOC"), x).actions != ("C", "D") for x in self.opponents(12))

    def test_cimcic_is_never_exploited(self):
        assert all(duel(builtin("CIMCIC"), x).actions != ("C", "D") for x in self.opponents(13))

    def test_every_duel_settles_on_one_action_each(self):
        rng = np.random.default_rng(14)
        for i in range(200):
            a, b = random_agent(rng, name=f"A{i}"), random_agent(rng, name=f"B{i}")
            row, col = duel(a, b).actions
            assert row in a.actions and col in b.actions


class TestDuelMatrix:
    def test_constant_agents(self):
        matrix = duel_matrix([builtin("CB"), builtin("DB")])
        assert matrix.cell("CB", "CB").actions == ("C", "C")
        assert matrix.cell("CB", "DB").actions == ("C", "D")
        assert matrix.cell("DB", "CB").actions == ("D", "C")
        assert matrix.cell("DB", "DB").actions == ("D", "D")

    def test_single_agent(self):
        matrix = duel_matrix([builtin("DUPOC")])
        assert matrix.cell("DUPOC", "DUPOC").actions == ("C", "C")

    def test_matrix_json_drops_traces(self):
        report = duel_matrix([builtin("CB"), builtin("DB")]).to_json()
        assert report["agents"] == ["CB", "DB"]
        assert len(report["cells"]) == 4
        assert all("trace" not in cell for cell in report["cells"])

    def test_matches_single_duels(self):
        names = ["CB", "DB", "CUPOD", "DUPOC", "CIMCIC", "DIMCID", "PrudentBot"]
        matrix = duel_matrix([builtin(name) for name in names])
        for row in names:
            for col in names:
                assert matrix.cell(row, col).actions == play(row, col)

    def test_rejects_duplicate_names(self):
        with pytest.raises(AgentDefinitionError):
            duel_matrix([builtin("DB"), builtin("DB")])

    def test_rejects_actions_outside_alphabet(self):
        with pytest.raises(ActionSetMismatch) as info:
            duel_matrix([builtin("DUPOC"), builtin("EUPOD")], alphabet=("C", "D"))
        assert "EUPOD" in str(info.value)

    def test_every_builtin_settles(self):
        matrix = duel_matrix([builtin(name) for name in BUILTIN_NAMES])
        assert len(matrix.cells) == len(BUILTIN_NAMES) ** 2


class TestExperimentReport:
    def test_open_pairs(self):
        pairs = [("DUPOC", "CUPOD"), ("CUPOD", "CIMCIC"), ("DUPOC", "DIMCID")]
        entries = experiment_report([(builtin(a), builtin(b)) for a, b in pairs])
        assert [entry.outcome.actions for entry in entries] == [("D", "C"), ("C", "D"), ("D", "D")]
        first = entries[0]
        assert first.conjecture == ("D", "C")
        assert "agrees" in first.status
        assert entries[1].conjecture is None
        assert entries[1].is_open

    def test_json_is_labelled(self):
        report = experiment_report([(builtin("DUPOC"), builtin("CUPOD"))])[0].to_json()
        assert report["label"] == IDEALIZED_LABEL
        assert report["conjecture"] == ["D", "C"]
        assert report["trace"]

    def test_reversed_pair_uses_reversed_conjecture(self):
        entry = experiment_report([(builtin("CUPOD"), builtin("DUPOC"))])[0]
        assert entry.conjecture == ("C", "D")
        assert entry.outcome.actions == ("C", "D")
        assert entry.is_open

    def test_pair_outside_the_open_list(self):
        entry = experiment_report([(builtin("CB"), builtin("DB"))])[0]
        assert not entry.is_open
        assert entry.status == "not an open problem"
