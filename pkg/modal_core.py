"""Provability-logic formulas: syntax tree, parser, printer and structural checks.

Surface syntax (ASCII):

    T  F  ~f  []f  f & g  f | g  f -> g  f <-> g  (f)

Precedence from tightest to loosest is ``~`` and ``[]``, ``&``, ``|``, ``->``,
``<->``. Implication associates to the right, the other binary operators to
the left. Identifiers may be dotted (``a.C``) so compiled duel systems print
and parse back.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass
from typing import Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from errors import ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "ModalFormula"


@dataclass(frozen=True)
class Box:
    operand: "ModalFormula"


@dataclass(frozen=True)
class And:
    left: "ModalFormula"
    right: "ModalFormula"


@dataclass(frozen=True)
class Or:
    left: "ModalFormula"
    right: "ModalFormula"


@dataclass(frozen=True)
class Implies:
    left: "ModalFormula"
    right: "ModalFormula"


@dataclass(frozen=True)
class Iff:
    left: "ModalFormula"
    right: "ModalFormula"


ModalFormula = Union[Top, Bottom, Var, Not, Box, And, Or, Implies, Iff]
BINARY = (And, Or, Implies, Iff)
TOP = Top()
BOTTOM = Bottom()


# --------------------------------------------------------------------------
# Grammar. The rule and terminal blocks are shared with the agent DSL.
# --------------------------------------------------------------------------

FORMULA_RULES = r"""
?formula: iff

?iff: imp
    | iff _IFF imp -> iff_

?imp: disj
    | disj _IMP imp -> implies

?disj: conj
     | disj _OR conj -> or_

?conj: unary
     | conj _AND unary -> and_

?unary: _NOT unary -> not_
      | _BOX unary -> box
      | atom
"""

FORMULA_ATOM = r"""
?atom: TOP -> top
     | BOTTOM -> bottom
     | NAME -> var
     | _LPAR formula _RPAR
"""

FORMULA_TERMINALS = r"""
_IFF: "<->"
_IMP: "->"
_OR: "|"
_AND: "&"
_NOT: "~"
_BOX: "[]"
_LPAR: "("
_RPAR: ")"
TOP: "T"
BOTTOM: "F"
NAME: /[a-zA-Z_][a-zA-Z0-9_]*(\.[a-zA-Z_][a-zA-Z0-9_]*)*/

%import common.WS
%ignore WS
"""

TOKEN_DISPLAY = {
    "_IFF": "'<->'",
    "_IMP": "'->'",
    "_OR": "'|'",
    "_AND": "'&'",
    "_NOT": "'~'",
    "_BOX": "'[]'",
    "_LPAR": "'('",
    "_RPAR": "')'",
    "TOP": "'T'",
    "BOTTOM": "'F'",
    "NAME": "identifier",
    "$END": "end of input",
}


@v_args(inline=True)
class FormulaBuilder(Transformer):
    """Builds ModalFormula nodes while the LALR parser reduces."""

    def top(self, _token):
        return TOP

    def bottom(self, _token):
        return BOTTOM

    def var(self, token):
        return Var(str(token))

    def not_(self, operand):
        return Not(operand)

    def box(self, operand):
        return Box(operand)

    def and_(self, left, right):
        return And(left, right)

    def or_(self, left, right):
        return Or(left, right)

    def implies(self, left, right):
        return Implies(left, right)

    def iff_(self, left, right):
        return Iff(left, right)


_FORMULA_PARSER = Lark(
    FORMULA_RULES + FORMULA_ATOM + FORMULA_TERMINALS,
    parser="lalr",
    start="formula",
    transformer=FormulaBuilder(),
)


def parse_error_from_lark(exc: UnexpectedInput, text: str, display: Mapping[str, str] = TOKEN_DISPLAY) -> ParseError:
    """Converts a Lark exception into a ParseError with a byte offset.

    Args:
        exc: The exception raised by a Lark parser.
        text: The source that was being parsed.
        display: Terminal name to human readable token.

    Returns:
        ParseError: Offset in bytes of the UTF-8 encoding and the expected set.
    """

    def show(names) -> tuple[str, ...]:
        return tuple({display.get(name, name.lower()) for name in names})

    if isinstance(exc, UnexpectedToken):
        if exc.token.type == "$END":
            offset = len(text)
            message = "unexpected end of input"
        else:
            offset = exc.token.start_pos or 0
            message = f"unexpected token {str(exc.token)!r}"
        expected = show(exc.expected)
    elif isinstance(exc, UnexpectedCharacters):
        offset = exc.pos_in_stream
        message = f"unexpected character {text[offset]!r}" if offset < len(text) else "unexpected end of input"
        expected = show(exc.allowed or ())
    elif isinstance(exc, UnexpectedEOF):
        offset = len(text)
        message = "unexpected end of input"
        expected = show(exc.expected)
    else:
        offset = getattr(exc, "pos_in_stream", 0) or 0
        message = str(exc)
        expected = ()
    return ParseError(message, len(text[:offset].encode("utf-8")), expected)


def parse_formula(text: str) -> ModalFormula:
    """Parses formula source text.

    Raises:
        ParseError: With the byte offset and the expected-token set.
    """
    try:
        return _FORMULA_PARSER.parse(text)
    except UnexpectedInput as exc:
        raise parse_error_from_lark(exc, text) from None


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_LEVEL = {Iff: 1, Implies: 2, Or: 3, And: 4}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
_UNARY_LEVEL = 5


def _level(f: ModalFormula) -> int:
    if isinstance(f, (Not, Box)):
        return _UNARY_LEVEL
    return _LEVEL.get(type(f), 6)


def render_formula(f: ModalFormula, var_text: Callable[[str], str] | None = None) -> str:
    """Renders the canonical text of a formula with minimal parentheses.

    Args:
        f: Formula to print.
        var_text: Optional hook mapping variable names to their printed form.

    Returns:
        str: Text that ``parse_formula`` maps back to ``f``.
    """

    def wrap(child: ModalFormula, needs: bool) -> str:
        text = go(child)
        return f"({text})" if needs else text

    def go(g: ModalFormula) -> str:
        match g:
            case Top():
                return "T"
            case Bottom():
                return "F"
            case Var(name):
                return var_text(name) if var_text else name
            case Not(operand):
                return "~" + wrap(operand, _level(operand) < _UNARY_LEVEL)
            case Box(operand):
                return "[]" + wrap(operand, _level(operand) < _UNARY_LEVEL)
            case Implies(left, right):
                level = _LEVEL[Implies]
                return f"{wrap(left, _level(left) <= level)} -> {wrap(right, _level(right) < level)}"
            case And(left, right) | Or(left, right) | Iff(left, right):
                level = _LEVEL[type(g)]
                return f"{wrap(left, _level(left) < level)} {_SYMBOL[type(g)]} {wrap(right, _level(right) <= level)}"
        raise TypeError(f"not a modal formula: {g!r}")

    return go(f)


# --------------------------------------------------------------------------
# Structural operations
# --------------------------------------------------------------------------


def children(f: ModalFormula) -> tuple[ModalFormula, ...]:
    match f:
        case Not(operand) | Box(operand):
            return (operand,)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            return (left, right)
    return ()


def rebuild(f: ModalFormula, parts: tuple[ModalFormula, ...]) -> ModalFormula:
    if isinstance(f, (Not, Box)):
        return type(f)(parts[0])
    if isinstance(f, BINARY):
        return type(f)(parts[0], parts[1])
    return f


def substitute(f: ModalFormula, bindings: Mapping[str | Var, ModalFormula]) -> ModalFormula:
    """Simultaneously replaces variables; unbound variables stay as they are."""
    table = {key.name if isinstance(key, Var) else key: value for key, value in bindings.items()}
    if not table:
        return f

    def go(g: ModalFormula) -> ModalFormula:
        if isinstance(g, Var):
            return table.get(g.name, g)
        parts = children(g)
        if not parts:
            return g
        return rebuild(g, tuple(go(part) for part in parts))

    return go(f)


def variables(f: ModalFormula) -> list[str]:
    """Variable names in order of first occurrence."""
    seen: dict[str, None] = {}

    def go(g: ModalFormula) -> None:
        if isinstance(g, Var):
            seen.setdefault(g.name, None)
        for part in children(g):
            go(part)

    go(f)
    return list(seen)


def unmodalized_occurrences(f: ModalFormula, vars: set[str] | list[str] | tuple[str, ...]) -> list[tuple[str, tuple[str, ...]]]:
    """Lists (variable, path) for every occurrence of ``vars`` not under a Box.

    A path is the tuple of steps from the root, each step naming the node type
    and the child taken, e.g. ``("Implies.left", "Not.operand")``.
    """
    names = set(vars)
    found: list[tuple[str, tuple[str, ...]]] = []

    def go(g: ModalFormula, path: tuple[str, ...]) -> None:
        match g:
            case Var(name):
                if name in names:
                    found.append((name, path))
            case Box():
                return
            case Not(operand):
                go(operand, path + ("Not.operand",))
            case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
                kind = type(g).__name__
                go(left, path + (f"{kind}.left",))
                go(right, path + (f"{kind}.right",))

    go(f, ())
    return found


def is_fully_modalized(f: ModalFormula, vars: set[str] | list[str] | tuple[str, ...]) -> bool:
    return not unmodalized_occurrences(f, vars)


def iter_subformulas(f: ModalFormula) -> Iterator[ModalFormula]:
    """Post-order traversal: children before their parent, left before right."""
    for part in children(f):
        yield from iter_subformulas(part)
    yield f


def box_subformulas(*formulas: ModalFormula) -> list[Box]:
    """Distinct Box-rooted subformulas, leftmost-innermost first."""
    seen: dict[ModalFormula, None] = {}
    for f in formulas:
        for g in iter_subformulas(f):
            if isinstance(g, Box):
                seen.setdefault(g, None)
    return list(seen)


def fold_and(parts: list[ModalFormula] | tuple[ModalFormula, ...]) -> ModalFormula:
    """Left-nested conjunction; the empty conjunction is T."""
    if not parts:
        return TOP
    result = parts[0]
    for part in parts[1:]:
        result = And(result, part)
    return result


def fold_or(parts: list[ModalFormula] | tuple[ModalFormula, ...]) -> ModalFormula:
    """Left-nested disjunction; the empty disjunction is F."""
    if not parts:
        return BOTTOM
    result = parts[0]
    for part in parts[1:]:
        result = Or(result, part)
    return result


def implication_chain(premises: list[ModalFormula] | tuple[ModalFormula, ...], conclusion: ModalFormula) -> ModalFormula:
    """``p1 -> (p2 -> ... -> conclusion)``."""
    result = conclusion
    for premise in reversed(premises):
        result = Implies(premise, result)
    return result
