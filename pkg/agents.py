"""Verifier agents and their compilation into fixed-point systems.

An agent is an ordered list of (condition, action) rules plus a default
action, read with first-match semantics. Conditions are modal formulas over
action atoms:

    me(X)         this agent plays X
    opp(X)        the opponent plays X
    opp_vs_DB(X)  the opponent plays X when facing DefectBot

Agent source text::

    agent DUPOC { actions C, D default D; C if []opp(C) }
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from lark import Lark, v_args
from lark.exceptions import UnexpectedInput

from errors import AgentDefinitionError, NotFullyModalized, ParseError, UnknownAgent
from gl_eval import FixedPointSystem
from modal_core import (
    BOTTOM,
    TOP,
    TOKEN_DISPLAY,
    And,
    Box,
    FORMULA_RULES,
    FORMULA_TERMINALS,
    FormulaBuilder,
    Implies,
    ModalFormula,
    Not,
    Or,
    Var,
    fold_or,
    parse_error_from_lark,
    render_formula,
    substitute,
    unmodalized_occurrences,
    variables,
)

logger = logging.getLogger(__name__)

SUBJECTS = ("me", "opp", "opp_vs_DB")


@dataclass(frozen=True)
class ActionAtom:
    """The proposition "subject plays action"."""

    subject: str
    action: str

    @property
    def var_name(self) -> str:
        return f"{self.subject}.{self.action}"

    def var(self) -> Var:
        return Var(self.var_name)

    @classmethod
    def from_var_name(cls, name: str) -> "ActionAtom | None":
        subject, dot, action = name.partition(".")
        if not dot or subject not in SUBJECTS or not action:
            return None
        return cls(subject, action)


def me(action: str) -> Var:
    return ActionAtom("me", action).var()


def opp(action: str) -> Var:
    return ActionAtom("opp", action).var()


def opp_vs_db(action: str) -> Var:
    return ActionAtom("opp_vs_DB", action).var()


@dataclass(frozen=True)
class Rule:
    condition: ModalFormula
    action: str


@dataclass(frozen=True)
class Agent:
    """A named action set with ordered rules; the last action is the default.

    Raises:
        AgentDefinitionError: On empty or repeated actions, unknown rule
            actions, or conditions mentioning anything but action atoms.
        NotFullyModalized: If an atom occurs outside every Box.
    """

    name: str
    actions: tuple[str, ...]
    rules: tuple[Rule, ...] = ()
    experimental: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.actions:
            raise AgentDefinitionError(f"agent {self.name!r} has no actions")
        if len(set(self.actions)) != len(self.actions):
            raise AgentDefinitionError(f"agent {self.name!r} repeats an action")
        for index, rule in enumerate(self.rules, start=1):
            if rule.action not in self.actions:
                raise AgentDefinitionError(
                    f"rule {index} of agent {self.name!r} plays {rule.action!r}, which is not among its actions"
                )
            names = variables(rule.condition)
            bare = [name for name in names if ActionAtom.from_var_name(name) is None]
            if bare:
                raise AgentDefinitionError(
                    f"rule {index} of agent {self.name!r} mentions {bare[0]!r}; use me(X), opp(X) or opp_vs_DB(X)"
                )
            bad = unmodalized_occurrences(rule.condition, names)
            if bad:
                variable, path = bad[0]
                raise NotFullyModalized(_atom_text(variable), path, f"{self.name} rule {index}")

    @property
    def default(self) -> str:
        return self.actions[-1]

    def uses_opp_vs_db(self) -> bool:
        return any(name.startswith("opp_vs_DB.") for rule in self.rules for name in variables(rule.condition))


def _atom_text(name: str) -> str:
    atom = ActionAtom.from_var_name(name)
    return f"{atom.subject}({atom.action})" if atom else name


def render_agent(agent: Agent) -> str:
    """Agent source text that ``compile_agent`` maps back to ``agent``."""
    parts = [f"actions {', '.join(agent.actions)} default {agent.default}"]
    parts += [f"{rule.action} if {render_formula(rule.condition, _atom_text)}" for rule in agent.rules]
    return f"agent {agent.name} {{ {'; '.join(parts)} }}"


# --------------------------------------------------------------------------
# Agent source parsing
# --------------------------------------------------------------------------

AGENT_GRAMMAR = (
    r"""
agent_def: _AGENT NAME _LBRACE _ACTIONS name_list _DEFAULT NAME (_SEMI rule)* _RBRACE
roster: (agent_def | NAME)*
name_list: NAME (_COMMA NAME)*
rule: NAME _IF formula

?atom: TOP -> top
     | BOTTOM -> bottom
     | _ME _LPAR NAME _RPAR -> me_atom
     | _OPP _LPAR NAME _RPAR -> opp_atom
     | _OPP_VS_DB _LPAR NAME _RPAR -> opp_vs_db_atom
     | NAME -> var
     | _LPAR formula _RPAR

_AGENT: "agent"
_ACTIONS: "actions"
_DEFAULT: "default"
_IF: "if"
_ME: "me"
_OPP: "opp"
_OPP_VS_DB: "opp_vs_DB"
_LBRACE: "{"
_RBRACE: "}"
_SEMI: ";"
_COMMA: ","
COMMENT: /#[^\n]*/
%ignore COMMENT
"""
    + FORMULA_RULES
    + FORMULA_TERMINALS
)

AGENT_TOKEN_DISPLAY = {
    **TOKEN_DISPLAY,
    "_AGENT": "'agent'",
    "_ACTIONS": "'actions'",
    "_DEFAULT": "'default'",
    "_IF": "'if'",
    "_ME": "'me'",
    "_OPP": "'opp'",
    "_OPP_VS_DB": "'opp_vs_DB'",
    "_LBRACE": "'{'",
    "_RBRACE": "'}'",
    "_SEMI": "';'",
    "_COMMA": "','",
}


@v_args(inline=True)
class AgentBuilder(FormulaBuilder):
    def me_atom(self, action):
        return me(str(action))

    def opp_atom(self, action):
        return opp(str(action))

    def opp_vs_db_atom(self, action):
        return opp_vs_db(str(action))

    def name_list(self, *names):
        return [str(name) for name in names]

    def rule(self, action, condition):
        return Rule(condition, str(action))

    def agent_def(self, name, actions, default, *rules):
        if len(set(actions)) != len(actions):
            raise AgentDefinitionError(f"agent {str(name)!r} repeats an action")
        default = str(default)
        if default not in actions:
            raise AgentDefinitionError(f"agent {str(name)!r} defaults to {default!r}, which is not among its actions")
        ordered = tuple(action for action in actions if action != default) + (default,)
        return Agent(str(name), ordered, tuple(rules))

    def roster(self, *entries):
        return [builtin(str(entry)) if not isinstance(entry, Agent) else entry for entry in entries]


_AGENT_PARSER = Lark(
    AGENT_GRAMMAR,
    parser="lalr",
    start=["agent_def", "roster"],
    transformer=AgentBuilder(),
)


def _parse(text: str, start: str):
    try:
        return _AGENT_PARSER.parse(text, start=start)
    except UnexpectedInput as exc:
        raise parse_error_from_lark(exc, text, AGENT_TOKEN_DISPLAY) from None


def compile_agent(dsl_text: str) -> Agent:
    """Parses one agent definition.

    Raises:
        ParseError: If the text is not a single agent definition.
        NotFullyModalized: If a condition has an atom outside every Box.
        AgentDefinitionError: If rules and actions do not fit together.
    """
    return _parse(dsl_text, "agent_def")


def parse_roster(text: str) -> list[Agent]:
    """Parses an agents file: builtin names and/or agent definitions.

    Args:
        text (str): Roster source; ``#`` starts a comment.

    Returns:
        list: The agents in file order.

    Raises:
        ParseError: On malformed text.
        UnknownAgent: If a bare name is not a builtin.
        AgentDefinitionError: If two entries share a name.
    """
    agents = _parse(text, "roster")
    names = [agent.name for agent in agents]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise AgentDefinitionError(f"roster lists agents more than once: {', '.join(duplicates)}")
    return agents


def load_roster(path: str | Path) -> list[Agent]:
    return parse_roster(_read(path))


def resolve_agent(ref: str) -> Agent:
    """Resolves a builtin name first, then a file holding one agent definition.

    Args:
        ref (str): Builtin name such as ``"DUPOC"`` or a path to an agent file.

    Returns:
        Agent: The builtin, or the agent compiled from the file.

    Raises:
        UnknownAgent: If ``ref`` is neither a builtin nor an existing file.
    """
    if ref in BUILTIN_NAMES:
        return builtin(ref)
    path = Path(ref)
    if path.is_file():
        return compile_agent(_read(path))
    raise UnknownAgent(ref)


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


# --------------------------------------------------------------------------
# Builtin agents
# --------------------------------------------------------------------------

BUILTIN_NAMES = ("CB", "DB", "CUPOD", "DUPOC", "CIMCIC", "DIMCID", "PrudentBot", "EUPOD", "CDEBot")


def _builtins() -> dict[str, Agent]:
    return {
        "CB": Agent("CB", ("C",)),
        "DB": Agent("DB", ("D",)),
        "CUPOD": Agent("CUPOD", ("D", "C"), (Rule(Box(opp("D")), "D"),)),
        "DUPOC": Agent("DUPOC", ("C", "D"), (Rule(Box(opp("C")), "C"),)),
        "CIMCIC": Agent("CIMCIC", ("C", "D"), (Rule(Box(Implies(me("C"), opp("C"))), "C"),)),
        "DIMCID": Agent("DIMCID", ("D", "C"), (Rule(Box(Implies(me("C"), opp("D"))), "D"),)),
        "PrudentBot": Agent(
            "PrudentBot",
            ("C", "D"),
            (Rule(And(Box(opp("C")), Box(Implies(Not(Box(BOTTOM)), opp_vs_db("D")))), "C"),),
        ),
        "EUPOD": Agent("EUPOD", ("D", "E"), (Rule(Box(opp("D")), "D"),)),
        "CDEBot": Agent(
            "CDEBot",
            ("C", "D", "E"),
            (
                Rule(Box(And(me("C"), opp("C"))), "C"),
                Rule(Box(And(me("D"), opp("D"))), "D"),
            ),
            experimental=True,
        ),
    }


_BUILTINS = _builtins()


def builtin(name: str) -> Agent:
    """Looks up a builtin agent by name; raises UnknownAgent otherwise."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise UnknownAgent(name) from None


# --------------------------------------------------------------------------
# Duel compilation
# --------------------------------------------------------------------------


def joint_alphabet(agent: Agent, opponent: Agent) -> tuple[str, ...]:
    """The agent's actions followed by the opponent's extra actions."""
    return agent.actions + tuple(x for x in opponent.actions if x not in agent.actions)


class DuelCompiler:
    """Accumulates the equations of one duel, side by side.

    Each side gets a variable per action of the joint alphabet, named
    ``<prefix>.<action>``. Conditions using ``opp_vs_DB`` pull in the
    opponent-versus-DefectBot subgame under the prefixes ``<opp>_vs_DB`` and
    ``<opp>_vs_DB_db``.
    """

    def __init__(self):
        self._vars: list[str] = []
        self._defs: list[ModalFormula] = []
        self._conditions: dict[str, list[ModalFormula]] = {}

    def add_side(self, agent: Agent, prefix: str, opponent: Agent, opp_prefix: str) -> list[ModalFormula]:
        """Adds the equations of ``agent`` facing ``opponent``.

        Returns:
            list: The agent's rule conditions over this duel's variables.
        """
        if prefix in self._conditions:
            return self._conditions[prefix]
        alphabet = joint_alphabet(agent, opponent)
        bindings: dict[str, ModalFormula] = {}
        for x in alphabet:
            bindings[f"me.{x}"] = Var(f"{prefix}.{x}")
            bindings[f"opp.{x}"] = Var(f"{opp_prefix}.{x}")
        subgame = f"{opp_prefix}_vs_DB"
        if agent.uses_opp_vs_db():
            for x in joint_alphabet(opponent, builtin("DB")):
                bindings[f"opp_vs_DB.{x}"] = Var(f"{subgame}.{x}")

        conditions = []
        for rule in agent.rules:
            # atoms naming actions outside the alphabet can never hold
            local = dict(bindings)
            for name in variables(rule.condition):
                local.setdefault(name, BOTTOM)
            conditions.append(substitute(rule.condition, local))
        self._conditions[prefix] = conditions

        for x in alphabet:
            self._vars.append(f"{prefix}.{x}")
            self._defs.append(_action_definition(agent, x, conditions))

        if agent.uses_opp_vs_db():
            db = builtin("DB")
            self.add_side(opponent, subgame, db, f"{subgame}_db")
            self.add_side(db, f"{subgame}_db", opponent, subgame)
        return conditions

    def system(self) -> FixedPointSystem:
        return FixedPointSystem(tuple(self._vars), tuple(self._defs))


def _action_definition(agent: Agent, action: str, conditions: list[ModalFormula]) -> ModalFormula:
    """First-match reading: rule i fires iff its condition holds and no earlier one does."""
    if action not in agent.actions:
        return BOTTOM
    parts = []
    for index, rule in enumerate(agent.rules):
        if rule.action != action:
            continue
        earlier = conditions[:index]
        parts.append(And(conditions[index], Not(fold_or(earlier))) if earlier else conditions[index])
    if action == agent.default:
        parts.append(Not(fold_or(conditions)) if conditions else TOP)
    return fold_or(parts)


def compile_duel_sides(a: Agent, b: Agent) -> tuple[FixedPointSystem, list[ModalFormula], list[ModalFormula]]:
    """The duel system plus each side's instantiated rule conditions."""
    compiler = DuelCompiler()
    conditions_a = compiler.add_side(a, "a", b, "b")
    conditions_b = compiler.add_side(b, "b", a, "a")
    return compiler.system(), conditions_a, conditions_b


def compile_duel(a: Agent, b: Agent) -> FixedPointSystem:
    """Compiles the duel of ``a`` (variables ``a.*``) against ``b`` (``b.*``)."""
    system, _, _ = compile_duel_sides(a, b)
    return system


def provability_goals(condition: ModalFormula) -> list[ModalFormula] | None:
    """The formulas whose provability a condition asks for.

    ``[]phi`` asks for ``phi``; a conjunction of such conditions asks for all
    of them. Anything else is not a provability condition and gives None.
    """
    match condition:
        case Box(operand):
            return [operand]
        case And(left, right):
            lhs, rhs = provability_goals(left), provability_goals(right)
            if lhs is None or rhs is None:
                return None
            return lhs + rhs
    return None


# --------------------------------------------------------------------------
# Random agents
# --------------------------------------------------------------------------


def _random_condition(rng: np.random.Generator, actions: tuple[str, ...], depth: int, guarded: bool) -> ModalFormula:
    atoms = [me(x) for x in actions] + [opp(x) for x in actions]
    roll = rng.random()
    if depth <= 0 or roll < 0.2:
        if guarded and rng.random() < 0.75:
            return atoms[rng.integers(len(atoms))]
        return TOP if rng.random() < 0.5 else BOTTOM
    kind = rng.integers(6)
    if kind <= 1:
        return Box(_random_condition(rng, actions, depth - 1, True))
    if kind == 2:
        return Not(_random_condition(rng, actions, depth - 1, guarded))
    builder = (And, Or, Implies)[kind - 3]
    return builder(
        _random_condition(rng, actions, depth - 1, guarded),
        _random_condition(rng, actions, depth - 1, guarded),
    )


def random_agent(
    rng: np.random.Generator,
    name: str = "R",
    actions: tuple[str, ...] = ("C", "D"),
    max_rules: int = 3,
    max_depth: int = 3,
) -> Agent:
    """Draws a valid agent with random action order, rules and conditions.

    Conditions only mention ``me``/``opp`` atoms and are fully modalized, so
    every draw compiles against any opponent.

    Args:
        rng (np.random.Generator): Source of randomness; equal states give
            equal agents.
        name (str): Name of the drawn agent.
        actions (tuple): Action alphabet; the default is drawn from it too.
        max_rules (int): Upper bound on the number of rules (zero allowed).
        max_depth (int): Nesting bound of each condition.

    Returns:
        Agent: A fresh agent.
    """
    order = tuple(actions[i] for i in rng.permutation(len(actions)))
    rules = []
    for _ in range(rng.integers(max_rules + 1)):
        condition = _random_condition(rng, actions, max_depth, False)
        rules.append(Rule(condition, order[rng.integers(len(order))]))
    return Agent(name, order, tuple(rules))


