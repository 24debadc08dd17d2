"""Outcomes of one-shot open-source games in the large-budget idealization."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from agents import Agent, compile_duel, joint_alphabet
from config import worker_count
from errors import ActionSetMismatch, AgentDefinitionError, InternalEvaluationError
from gl_eval import EvaluationResult, evaluate_system

logger = logging.getLogger(__name__)

IDEALIZED_LABEL = "GL-idealized (k→∞) analogue"

# Conjectured bounded outcomes; pairs listed in OPEN_PAIRS carry no conjecture.
CONJECTURES = {("DUPOC", "CUPOD"): ("D", "C")}
OPEN_PAIRS = {("DUPOC", "CUPOD"), ("CUPOD", "CIMCIC"), ("DUPOC", "DIMCID")}


@dataclass(frozen=True)
class Outcome:
    row_agent: str
    col_agent: str
    row_action: str
    col_action: str
    evidence: EvaluationResult | None = None

    @property
    def actions(self) -> tuple[str, str]:
        return self.row_action, self.col_action

    def swap(self) -> "Outcome":
        return Outcome(self.col_agent, self.row_agent, self.col_action, self.row_action, self.evidence)

    def to_json(self) -> dict:
        report = {
            "row_agent": self.row_agent,
            "col_agent": self.col_agent,
            "row_action": self.row_action,
            "col_action": self.col_action,
        }
        if self.evidence is not None:
            report["stabilization_rank"] = self.evidence.stabilization_rank
            report["trace"] = self.evidence.trace_json()
        return report


def chosen_action(stable: dict[str, bool], prefix: str, alphabet: tuple[str, ...]) -> str:
    played = [x for x in alphabet if stable[f"{prefix}.{x}"]]
    if len(played) != 1:
        raise InternalEvaluationError(f"side {prefix!r} plays {played} instead of exactly one action")
    return played[0]


def duel(a: Agent, b: Agent) -> Outcome:
    """Plays ``a`` (row) against ``b`` (column).

    Raises:
        InternalEvaluationError: If a side does not settle on exactly one action.
    """
    result = evaluate_system(compile_duel(a, b))
    row = chosen_action(result.stable, "a", joint_alphabet(a, b))
    col = chosen_action(result.stable, "b", joint_alphabet(b, a))
    logger.debug("%s vs %s -> (%s, %s) at rank %d", a.name, b.name, row, col, result.stabilization_rank)
    return Outcome(a.name, b.name, row, col, result)


@dataclass(frozen=True)
class OutcomeMatrix:
    agents: tuple[Agent, ...]
    cells: dict[tuple[int, int], Outcome]

    @property
    def names(self) -> list[str]:
        return [agent.name for agent in self.agents]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def cell(self, row: str, col: str) -> Outcome:
        return self.cells[(self.index(row), self.index(col))]

    def to_json(self) -> dict:
        return {
            "agents": self.names,
            "cells": [
                {key: value for key, value in self.cells[(i, j)].to_json().items() if key != "trace"}
                for i in range(len(self.agents))
                for j in range(len(self.agents))
            ],
        }


def duel_matrix(agents: list[Agent], alphabet: tuple[str, ...] | None = None) -> OutcomeMatrix:
    """Evaluates every ordered pair, self-pairs included.

    Args:
        agents: Agents with distinct names.
        alphabet: Action alphabet of the payoff context. When given, every
            agent's actions must belong to it.

    Raises:
        ActionSetMismatch: If an agent plays outside ``alphabet``.
        AgentDefinitionError: If two agents share a name.
    """
    names = [agent.name for agent in agents]
    if len(set(names)) != len(names):
        raise AgentDefinitionError(f"agent names must be distinct, got {names}")
    if alphabet is not None:
        for agent in agents:
            extra = [x for x in agent.actions if x not in alphabet]
            if extra:
                raise ActionSetMismatch(
                    f"agent {agent.name!r} plays {', '.join(extra)}, outside the alphabet {', '.join(alphabet)}"
                )
    pairs = [(i, j) for i in range(len(agents)) for j in range(len(agents))]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        outcomes = list(pool.map(lambda ij: duel(agents[ij[0]], agents[ij[1]]), pairs))
    return OutcomeMatrix(tuple(agents), dict(zip(pairs, outcomes)))


@dataclass(frozen=True)
class ExperimentEntry:
    outcome: Outcome
    conjecture: tuple[str, str] | None
    is_open: bool

    @property
    def status(self) -> str:
        if self.conjecture is not None:
            agrees = self.outcome.actions == self.conjecture
            return f"conjectured ({', '.join(self.conjecture)}); idealized outcome {'agrees' if agrees else 'differs'}"
        if self.is_open:
            return "open in the bounded setting; no conjecture stated"
        return "not an open problem"

    def to_json(self) -> dict:
        report = self.outcome.to_json()
        report["label"] = IDEALIZED_LABEL
        report["conjecture"] = list(self.conjecture) if self.conjecture else None
        report["status"] = self.status
        return report


def _lookup(table, a: str, b: str):
    if (a, b) in table:
        return table[(a, b)]
    if (b, a) in table:
        return tuple(reversed(table[(b, a)]))
    return None


def experiment_report(pairs: list[tuple[Agent, Agent]]) -> list[ExperimentEntry]:
    """Idealized outcomes for open-problem pairs.

    Every entry is labelled as the k→∞ analogue; nothing here settles the
    bounded questions.
    """
    entries = []
    for a, b in pairs:
        outcome = duel(a, b)
        key = (a.name, b.name)
        is_open = key in OPEN_PAIRS or key[::-1] in OPEN_PAIRS
        entries.append(ExperimentEntry(outcome, _lookup(CONJECTURES, *key), is_open))
    return entries
