"""Bounded proof search over duel systems.

Proofs are Hilbert-style GL derivations written one numbered line at a time::

    1. b.D <-> T [Agent b.D]
    2. b.D [Agent b.D + Taut]

Justifications:

    Taut            propositional tautology, Box subformulas read as atoms
    K               [](p -> q) -> ([]p -> []q)
    Lob             []([]p -> p) -> []p
    Agent v         the duel equation of v
    Agent v + Taut  a tautological consequence of that equation
    MP i,j          modus ponens from lines i and j, in either order
    Nec i           [] of line i

A budget of k characters bounds the length of the proof text. Candidates
come from pluggable enumerators: the brute-force lexicographic stream, a
template schedule, or oracle seeds followed by the template schedule.
"""

from __future__ import annotations

import itertools
import logging
import re
import string
from abc import ABC, abstractmethod
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from agents import Agent, compile_duel_sides, provability_goals
from arena import Outcome
from config import load_settings
from errors import AgentDefinitionError, DomainError, LoebArenaError, ParseError
from gl_eval import FixedPointSystem, evaluate_system
from modal_core import (
    And,
    Bottom,
    Box,
    Iff,
    Implies,
    ModalFormula,
    Not,
    Or,
    Top,
    Var,
    box_subformulas,
    children,
    fold_and,
    implication_chain,
    parse_formula,
    render_formula,
    variables,
)

logger = logging.getLogger(__name__)

PRINTABLE_ASCII = "".join(chr(code) for code in range(32, 127))
PYTHON_PRINTABLE = string.printable
CHARSETS = {"printable_ascii": PRINTABLE_ASCII, "python_printable": PYTHON_PRINTABLE}


def string_generator(length_bound: int, charset: str | Sequence[str] = PRINTABLE_ASCII) -> Iterator[str]:
    """Iterates through all strings up to ``length_bound`` symbols.

    Shorter strings come first; strings of equal length follow the order of
    ``charset``. Symbols may be longer than one character, in which case the
    bound counts symbols.
    """
    if length_bound < 1:
        raise DomainError(f"length bound must be at least 1, got {length_bound}")
    symbols = tuple(charset)
    size = len(symbols)
    pick = symbols.__getitem__
    array = [0]
    char_pos = 1
    while True:
        if array[-char_pos] == size:
            if char_pos == length_bound:
                return
            for i in range(1, char_pos + 1):
                array[-i] = 0
            char_pos += 1
            if char_pos > len(array):
                array = [0] + array
            else:
                array[-char_pos] += 1
            continue
        yield "".join(map(pick, array))
        char_pos = 1
        array[-char_pos] += 1


# --------------------------------------------------------------------------
# Proof objects
# --------------------------------------------------------------------------


class Inference(Enum):
    TAUT = "Taut"
    K = "K"
    LOB = "Lob"
    AGENT = "Agent"
    AGENT_TAUT = "Agent + Taut"
    MP = "MP"
    NEC = "Nec"


@dataclass(frozen=True)
class Justification:
    rule: Inference
    var: str | None = None
    refs: tuple[int, ...] = ()

    def render(self) -> str:
        match self.rule:
            case Inference.AGENT:
                return f"Agent {self.var}"
            case Inference.AGENT_TAUT:
                return f"Agent {self.var} + Taut"
            case Inference.MP:
                return f"MP {self.refs[0]},{self.refs[1]}"
            case Inference.NEC:
                return f"Nec {self.refs[0]}"
        return self.rule.value


TAUT = Justification(Inference.TAUT)
AXIOM_K = Justification(Inference.K)
AXIOM_LOB = Justification(Inference.LOB)


def agent_axiom(var: str) -> Justification:
    return Justification(Inference.AGENT, var)


def agent_taut(var: str) -> Justification:
    return Justification(Inference.AGENT_TAUT, var)


def modus_ponens(major: int, minor: int) -> Justification:
    return Justification(Inference.MP, refs=(major, minor))


def necessitation(line: int) -> Justification:
    return Justification(Inference.NEC, refs=(line,))


_NAME = r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*"
_LINE = re.compile(r"(\d+)\. (.+) \[([^\[\]]+)\]")
_JUSTIFICATIONS = (
    (re.compile(r"Taut"), lambda m: TAUT),
    (re.compile(r"K"), lambda m: AXIOM_K),
    (re.compile(r"Lob"), lambda m: AXIOM_LOB),
    (re.compile(rf"Agent ({_NAME})(?:-def)?"), lambda m: agent_axiom(m[1])),
    (re.compile(rf"Agent ({_NAME})(?:-def)? \+ Taut"), lambda m: agent_taut(m[1])),
    (re.compile(r"MP (\d+), ?(\d+)"), lambda m: modus_ponens(int(m[1]), int(m[2]))),
    (re.compile(r"Nec (\d+)"), lambda m: necessitation(int(m[1]))),
)


def parse_justification(text: str) -> Justification:
    """Reads the bracketed part of a proof line, e.g. ``MP 3, 1``; raises ParseError otherwise."""
    for pattern, build in _JUSTIFICATIONS:
        match = pattern.fullmatch(text)
        if match:
            return build(match)
    raise ParseError(f"unknown justification {text!r}")


@dataclass(frozen=True)
class ProofLine:
    formula: ModalFormula
    justification: Justification

    def render(self, number: int) -> str:
        return f"{number}. {render_formula(self.formula)} [{self.justification.render()}]\n"


@dataclass(frozen=True)
class ProofObject:
    lines: tuple[ProofLine, ...]
    goal: ModalFormula

    @property
    def text(self) -> str:
        return "".join(line.render(number) for number, line in enumerate(self.lines, start=1))

    @property
    def length(self) -> int:
        return len(self.text)


def parse_proof(text: str, goal: ModalFormula) -> ProofObject:
    """Parses proof text; lines must be numbered 1, 2, ... in order.

    Raises:
        ParseError: On any deviation from the line format.
    """
    rows = text.split("\n")
    if rows and rows[-1] == "":
        rows.pop()
    if not rows:
        raise ParseError("empty proof")
    lines = []
    for number, row in enumerate(rows, start=1):
        match = _LINE.fullmatch(row)
        if match is None or match[1] != str(number):
            raise ParseError(f"malformed proof line {number}")
        lines.append(ProofLine(parse_formula(match[2]), parse_justification(match[3])))
    return ProofObject(tuple(lines), goal)


# --------------------------------------------------------------------------
# Checking
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProofSystem:
    """Propositional GL with the equations of one duel as the only extra axioms."""

    fixed_point: FixedPointSystem
    taut_atom_cap: int = 16

    @classmethod
    def for_system(cls, system: FixedPointSystem) -> "ProofSystem":
        return cls(system, load_settings().proof_search.taut_atom_cap)

    def axiom(self, var: str) -> Iff | None:
        if var not in self.fixed_point.vars:
            return None
        return Iff(Var(var), self.fixed_point.definition(var))


def propositional_atoms(f: ModalFormula) -> list[ModalFormula]:
    """Variables and outermost Box subformulas, in order of first occurrence."""
    seen: dict[ModalFormula, None] = {}

    def go(g: ModalFormula) -> None:
        if isinstance(g, (Var, Box)):
            seen.setdefault(g, None)
            return
        for part in children(g):
            go(part)

    go(f)
    return list(seen)


def _truth_function(f: ModalFormula, atom_index: dict[ModalFormula, int]):
    match f:
        case Var() | Box():
            i = atom_index[f]
            return lambda row: row[i]
        case Top():
            return lambda row: True
        case Bottom():
            return lambda row: False
        case Not(operand):
            inner = _truth_function(operand, atom_index)
            return lambda row: not inner(row)
    left = _truth_function(f.left, atom_index)
    right = _truth_function(f.right, atom_index)
    match f:
        case And():
            return lambda row: left(row) and right(row)
        case Or():
            return lambda row: left(row) or right(row)
        case Implies():
            return lambda row: (not left(row)) or right(row)
    return lambda row: left(row) == right(row)


def is_tautology(f: ModalFormula, atom_cap: int = 16) -> bool:
    """Truth-table check treating variables and Box subformulas as atoms.

    Formulas with more than ``atom_cap`` atoms are rejected.
    """
    atoms = propositional_atoms(f)
    if len(atoms) > atom_cap:
        return False
    evaluate = _truth_function(f, {atom: i for i, atom in enumerate(atoms)})
    return all(evaluate(row) for row in itertools.product((False, True), repeat=len(atoms)))


def _is_k_instance(f: ModalFormula) -> bool:
    match f:
        case Implies(Box(Implies(p, q)), Implies(Box(p2), Box(q2))):
            return p == p2 and q == q2
    return False


def _is_lob_instance(f: ModalFormula) -> bool:
    match f:
        case Implies(Box(Implies(Box(p), p2)), Box(p3)):
            return p == p2 == p3
    return False


def _line_holds(system: ProofSystem, earlier: list[ModalFormula], line: ProofLine) -> bool:
    f, just = line.formula, line.justification
    refs = just.refs
    if any(ref < 1 or ref > len(earlier) for ref in refs):
        return False
    match just.rule:
        case Inference.TAUT:
            return is_tautology(f, system.taut_atom_cap)
        case Inference.K:
            return _is_k_instance(f)
        case Inference.LOB:
            return _is_lob_instance(f)
        case Inference.AGENT:
            return system.axiom(just.var) == f
        case Inference.AGENT_TAUT:
            axiom = system.axiom(just.var)
            return axiom is not None and is_tautology(Implies(axiom, f), system.taut_atom_cap)
        case Inference.MP:
            first, second = earlier[refs[0] - 1], earlier[refs[1] - 1]
            return first == Implies(second, f) or second == Implies(first, f)
        case Inference.NEC:
            return f == Box(earlier[refs[0] - 1])
    return False


def check_proof(system: ProofSystem, proof_text: str, goal: ModalFormula) -> bool:
    """True iff ``proof_text`` is a valid derivation whose last line is ``goal``.

    Never raises; anything that fails to parse is simply not a proof.
    """
    if not proof_text.startswith("1. "):
        return False
    try:
        proof = parse_proof(proof_text, goal)
        if proof.lines[-1].formula != goal:
            return False
        earlier: list[ModalFormula] = []
        for line in proof.lines:
            if not _line_holds(system, earlier, line):
                return False
            earlier.append(line.formula)
        return True
    except (LoebArenaError, RecursionError, ValueError):
        return False


# --------------------------------------------------------------------------
# Proof templates
# --------------------------------------------------------------------------


class ProofBuilder:
    """Appends proof lines and hands back their 1-based numbers."""

    def __init__(self):
        self.lines: list[ProofLine] = []

    def add(self, formula: ModalFormula, justification: Justification) -> int:
        self.lines.append(ProofLine(formula, justification))
        return len(self.lines)

    def formula(self, number: int) -> ModalFormula:
        return self.lines[number - 1].formula

    def chain(self, premises: list[int], conclusion: ModalFormula) -> int:
        """Derives ``conclusion`` from premise lines via one Taut line and MP steps."""
        formulas = [self.formula(number) for number in premises]
        current = self.add(implication_chain(formulas, conclusion), TAUT)
        for position, number in enumerate(premises):
            current = self.add(implication_chain(formulas[position + 1 :], conclusion), modus_ponens(current, number))
        return current

    def build(self, goal: ModalFormula) -> ProofObject:
        return ProofObject(tuple(self.lines), goal)


def closure_vars(system: FixedPointSystem, formula: ModalFormula) -> list[str]:
    """System variables the formula depends on, directly or through definitions."""
    known = set(system.vars)
    reached: set[str] = set()
    pending = [v for v in variables(formula) if v in known]
    while pending:
        name = pending.pop()
        if name in reached:
            continue
        reached.add(name)
        pending.extend(v for v in variables(system.definition(name)) if v in known)
    return [v for v in system.vars if v in reached]


def oracle_core(system: FixedPointSystem, goal: ModalFormula) -> ModalFormula:
    """Conjunction of the goal's closure variables that are stably true."""
    stable = evaluate_system(system).stable
    true_vars = [Var(v) for v in closure_vars(system, goal) if stable[v]]
    return fold_and(true_vars) if true_vars else goal


def single_axiom_proofs(system: ProofSystem, goal: ModalFormula) -> list[ProofObject]:
    """One-line proofs of ``goal``.

    Args:
        system (ProofSystem): Proof system of the duel.
        goal (ModalFormula): Formula to prove.

    Returns:
        list: A bare tautology line, then per variable the plain citation (when
        the goal is that variable's equation) and the citation closed by
        tautology. These are candidates; most do not check.
    """
    proofs = [ProofObject((ProofLine(goal, TAUT),), goal)]
    for var in system.fixed_point.vars:
        if system.axiom(var) == goal:
            proofs.append(ProofObject((ProofLine(goal, agent_axiom(var)),), goal))
        proofs.append(ProofObject((ProofLine(goal, agent_taut(var)),), goal))
    return proofs


def axiom_closure_proof(system: ProofSystem, goal: ModalFormula) -> ProofObject:
    """Cites the equations of the goal's closure and concludes by tautology."""
    builder = ProofBuilder()
    premises = [builder.add(system.axiom(v), agent_axiom(v)) for v in closure_vars(system.fixed_point, goal)]
    builder.chain(premises, goal)
    return builder.build(goal)


def lob_derivation(system: ProofSystem, goal: ModalFormula, core: ModalFormula | None = None) -> ProofObject:
    """Derives ``goal`` through Löb's axiom applied to ``core``.

    With ``d`` the core, the derivation lifts ``[]d -> []psi`` for every Box
    ``[]psi`` in the equations of d's variables that d tautologically implies,
    combines those lifts with the equations into ``[]d -> d``, necessitates,
    applies Löb to obtain ``[]d`` and then ``d``, and finally concludes the
    goal from ``d`` by tautology.

    Args:
        system: Proof system of the duel.
        goal: Formula to derive.
        core: Formula to run Löb's axiom on. Defaults to the conjunction of
            the goal's closure variables that are stably true.
    """
    fixed_point = system.fixed_point
    if core is None:
        core = oracle_core(fixed_point, goal)
    box_core = Box(core)
    support = [v for v in variables(core) if v in fixed_point.vars]
    builder = ProofBuilder()

    lifts = []
    for box in box_subformulas(*(fixed_point.definition(v) for v in support)):
        step = Implies(core, box.operand)
        if not is_tautology(step, system.taut_atom_cap):
            continue
        taut = builder.add(step, TAUT)
        nec = builder.add(Box(step), necessitation(taut))
        k = builder.add(Implies(Box(step), Implies(box_core, box)), AXIOM_K)
        lifts.append(builder.add(Implies(box_core, box), modus_ponens(k, nec)))
    axioms = [builder.add(system.axiom(v), agent_axiom(v)) for v in support]

    reflection = Implies(box_core, core)
    premises = lifts + axioms
    reflected = builder.chain(premises, reflection) if premises else builder.add(reflection, TAUT)
    nec = builder.add(Box(reflection), necessitation(reflected))
    lob = builder.add(Implies(Box(reflection), box_core), AXIOM_LOB)
    boxed = builder.add(box_core, modus_ponens(lob, nec))
    proved = builder.add(core, modus_ponens(reflected, boxed))
    if core != goal:
        bridge = builder.add(Implies(core, goal), TAUT)
        builder.add(goal, modus_ponens(bridge, proved))
    return builder.build(goal)


# --------------------------------------------------------------------------
# Enumerators
# --------------------------------------------------------------------------


class Enumerator(ABC):
    name = "enumerator"

    @abstractmethod
    def candidates(self, system: ProofSystem, goal: ModalFormula, k: int) -> Iterator[str]:
        """Candidate proof texts, in the order they should be checked."""


@dataclass(frozen=True)
class Lexicographic(Enumerator):
    """Every string over ``charset`` in length-then-charset order.

    ``max_symbols`` bounds the string length in symbols; it defaults to the
    character budget, which is exact for single-character charsets.
    """

    charset: str | tuple[str, ...] = PRINTABLE_ASCII
    max_symbols: int | None = None
    name = "lex"

    def __post_init__(self):
        symbols = tuple(self.charset)
        if not symbols:
            raise DomainError("charset must not be empty")
        if len(set(symbols)) != len(symbols):
            raise DomainError("charset must not repeat symbols")
        if any(not symbol for symbol in symbols):
            raise DomainError("charset symbols must not be empty")

    def candidates(self, system: ProofSystem, goal: ModalFormula, k: int) -> Iterator[str]:
        yield from string_generator(self.max_symbols or k, self.charset)


@dataclass(frozen=True)
class Guided(Enumerator):
    """Template schedule ordered by proof length.

    Templates: one-line citations, the closure of the goal's equations
    combined by tautology, and Löb derivations on the goal, on the
    conjunction of its closure variables, and on the stably true part of
    that closure.
    """

    name = "guided"

    def templates(self, system: ProofSystem, goal: ModalFormula) -> list[ProofObject]:
        fixed_point = system.fixed_point
        proofs = single_axiom_proofs(system, goal)
        closure = closure_vars(fixed_point, goal)
        if closure:
            proofs.append(axiom_closure_proof(system, goal))
        cores = [goal, fold_and([Var(v) for v in closure]), oracle_core(fixed_point, goal)]
        for core in dict.fromkeys(cores):
            if any(v in fixed_point.vars for v in variables(core)):
                proofs.append(lob_derivation(system, goal, core))
        return proofs

    def candidates(self, system: ProofSystem, goal: ModalFormula, k: int) -> Iterator[str]:
        texts = dict.fromkeys(proof.text for proof in self.templates(system, goal))
        yield from sorted(texts, key=len)


@dataclass(frozen=True)
class OracleFirst(Enumerator):
    """Seed proofs first, then the Löb derivation on the oracle core, then a fallback."""

    seeds: tuple[str, ...] = ()
    fallback: Enumerator = field(default_factory=Guided)
    derive: bool = True
    name = "oracle"

    def candidates(self, system: ProofSystem, goal: ModalFormula, k: int) -> Iterator[str]:
        yield from self.seeds
        if self.derive:
            yield lob_derivation(system, goal).text
        yield from self.fallback.candidates(system, goal, k)


def make_enumerator(name: str, charset: str | None = None) -> Enumerator:
    """Builds an enumerator from its command-line name (lex, guided, oracle)."""
    match name:
        case "lex":
            if charset is None:
                charset = CHARSETS[load_settings().proof_search.charset]
            return Lexicographic(charset)
        case "guided":
            return Guided()
        case "oracle":
            return OracleFirst()
    raise DomainError(f"unknown enumerator {name!r}; choose lex, guided or oracle")


# --------------------------------------------------------------------------
# Search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProofBudget:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"proof budget must be at least 1 character, got {self.k}")


@dataclass(frozen=True)
class SearchReport:
    goal: ModalFormula
    found: bool
    proof_text: str | None
    candidates_examined: int
    enumerator: str
    budget: int
    capped: bool = False

    @property
    def proof_length(self) -> int | None:
        return len(self.proof_text) if self.proof_text is not None else None

    def to_json(self) -> dict:
        return {
            "goal": render_formula(self.goal),
            "found": self.found,
            "proof": self.proof_text,
            "proof_length": self.proof_length,
            "candidates_examined": self.candidates_examined,
            "enumerator": self.enumerator,
            "budget": self.budget,
            "capped": self.capped,
        }


def proof_search(
    budget: ProofBudget,
    system: ProofSystem,
    goal: ModalFormula,
    enum: Enumerator,
    max_candidates: int | None = None,
) -> SearchReport:
    """Returns the first candidate of length at most k that checks.

    Args:
        budget: Character budget k.
        system: Proof system of the duel.
        goal: Formula to prove.
        enum: Candidate stream.
        max_candidates: Examined-candidate cap; defaults to
            ``proof_search.max_candidates`` from config.

    Returns:
        SearchReport: Found proof and its length, or the number of candidates
        examined. ``capped`` marks a search cut short by the cap.
    """
    if max_candidates is None:
        max_candidates = load_settings().proof_search.max_candidates
    examined = 0
    for candidate in enum.candidates(system, goal, budget.k):
        if len(candidate) > budget.k:
            continue
        if examined == max_candidates:
            logger.warning("proof search for %s stopped after %d candidates", render_formula(goal), examined)
            return SearchReport(goal, False, None, examined, enum.name, budget.k, capped=True)
        examined += 1
        if check_proof(system, candidate, goal):
            logger.info("proved %s in %d characters", render_formula(goal), len(candidate))
            return SearchReport(goal, True, candidate, examined, enum.name, budget.k)
    return SearchReport(goal, False, None, examined, enum.name, budget.k)


@dataclass(frozen=True)
class RuleSearch:
    rule_index: int
    action: str
    reports: tuple[SearchReport, ...]

    @property
    def fired(self) -> bool:
        return all(report.found for report in self.reports)

    def to_json(self) -> dict:
        return {
            "rule": self.rule_index,
            "action": self.action,
            "fired": self.fired,
            "searches": [report.to_json() for report in self.reports],
        }


@dataclass(frozen=True)
class BoundedOutcome:
    outcome: Outcome
    row_searches: tuple[RuleSearch, ...]
    col_searches: tuple[RuleSearch, ...]

    def to_json(self) -> dict:
        report = self.outcome.to_json()
        report["row_searches"] = [search.to_json() for search in self.row_searches]
        report["col_searches"] = [search.to_json() for search in self.col_searches]
        return report


def _play_bounded(
    agent: Agent,
    conditions: list[ModalFormula],
    system: ProofSystem,
    budget: ProofBudget,
    enum: Enumerator,
    max_candidates: int | None,
) -> tuple[str, tuple[RuleSearch, ...]]:
    searches = []
    for index, (rule, condition) in enumerate(zip(agent.rules, conditions), start=1):
        goals = provability_goals(condition)
        if goals is None:
            raise AgentDefinitionError(
                f"rule {index} of agent {agent.name!r} is not a provability condition (a Box or a conjunction of Boxes)"
            )
        reports = []
        for goal in goals:
            reports.append(proof_search(budget, system, goal, enum, max_candidates))
            if not reports[-1].found:
                break
        searches.append(RuleSearch(index, rule.action, tuple(reports)))
        if searches[-1].fired:
            return rule.action, tuple(searches)
    return agent.default, tuple(searches)


def bounded_duel(
    a: Agent,
    ka: ProofBudget,
    enum_a: Enumerator,
    b: Agent,
    kb: ProofBudget,
    enum_b: Enumerator,
    max_candidates: int | None = None,
) -> BoundedOutcome:
    """Plays a duel in which every Box condition becomes a budgeted proof search.

    Each agent tries its rules in order; a rule fires when a proof of every
    Boxed formula in its condition is found within the agent's budget.

    Args:
        a (Agent): Row agent.
        ka (ProofBudget): Character budget of the row agent's searches.
        enum_a (Enumerator): Candidate stream of the row agent.
        b (Agent): Column agent.
        kb (ProofBudget): Character budget of the column agent's searches.
        enum_b (Enumerator): Candidate stream of the column agent.
        max_candidates (int | None): Examined-candidate cap per search;
            defaults to ``proof_search.max_candidates`` from config.

    Returns:
        BoundedOutcome: Both actions plus one RuleSearch per rule tried.

    Raises:
        AgentDefinitionError: If a rule condition is not a Box or a
            conjunction of Boxes.
    """
    fixed_point, conditions_a, conditions_b = compile_duel_sides(a, b)
    system = ProofSystem.for_system(fixed_point)
    with ThreadPoolExecutor(max_workers=2) as pool:
        row = pool.submit(_play_bounded, a, conditions_a, system, ka, enum_a, max_candidates)
        col = pool.submit(_play_bounded, b, conditions_b, system, kb, enum_b, max_candidates)
        row_action, row_searches = row.result()
        col_action, col_searches = col.result()
    return BoundedOutcome(Outcome(a.name, b.name, row_action, col_action), row_searches, col_searches)
