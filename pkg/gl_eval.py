"""Kripke-rank evaluation of fully modalized fixed-point systems.

Worlds are the ranks 0, 1, 2, ... of a linear frame in which rank n sees
every smaller rank. ``[]psi`` is true at rank n iff ``psi`` held at all ranks
below n, so every Box is vacuously true at rank 0 and a Box that turns false
never turns true again. Evaluation stops at the first rank where every Box is
either false or has a true argument; from there on nothing can change.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from itertools import islice

import numpy as np

from config import load_settings
from errors import InternalEvaluationError, NotFullyModalized, VariableMismatch
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
    parse_formula,
    render_formula,
    unmodalized_occurrences,
    variables,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FixedPointSystem:
    """Equations ``vars[i] <-> defs[i]``.

    Construction does not validate; ``validate`` (called by every evaluation
    entry point) rejects duplicate or unknown variables and unmodalized
    occurrences.
    """

    vars: tuple[str, ...]
    defs: tuple[ModalFormula, ...]

    @classmethod
    def from_equations(cls, equations: Sequence[tuple[str, ModalFormula]]) -> "FixedPointSystem":
        return cls(tuple(name for name, _ in equations), tuple(f for _, f in equations))

    @classmethod
    def parse(cls, text: str) -> "FixedPointSystem":
        """Parses ``name <-> formula`` equations, one per line or ``;``-separated.

        Blank lines and ``#`` comments are skipped; a comment runs to the end
        of its line, ``;`` included.
        """
        equations = []
        for raw in text.splitlines():
            for piece in raw.split("#", 1)[0].split(";"):
                line = piece.strip()
                if not line:
                    continue
                formula = parse_formula(line)
                if not (isinstance(formula, Iff) and isinstance(formula.left, Var)):
                    raise VariableMismatch(f"expected an equation 'name <-> formula', got {line!r}")
                equations.append((formula.left.name, formula.right))
        return cls.from_equations(equations)

    def definition(self, name: str) -> ModalFormula:
        """Looks up the defining formula of one variable.

        Args:
            name (str): A variable of the system, e.g. ``"a.C"``.

        Returns:
            ModalFormula: The right-hand side of ``name <-> ...``.

        Raises:
            VariableMismatch: If ``name`` is not one of the system's variables.
        """
        try:
            return self.defs[self.vars.index(name)]
        except ValueError:
            raise VariableMismatch(f"{name!r} is not a variable of the system") from None

    def equations(self) -> list[Iff]:
        """The system as formulas.

        Returns:
            list: One ``Iff(Var(name), definition)`` per variable, in system order.
        """
        return [Iff(Var(name), f) for name, f in zip(self.vars, self.defs)]

    def render(self) -> str:
        return "".join(render_formula(eq) + "\n" for eq in self.equations())

    def validate(self, extra: Sequence[ModalFormula] = ()) -> None:
        """Checks that the system can be evaluated.

        Args:
            extra (Sequence[ModalFormula]): Formulas to be evaluated alongside
                the system; they may only mention system variables.

        Raises:
            VariableMismatch: On duplicate variables or unknown variables in a
                definition or in ``extra``.
            NotFullyModalized: If a definition has a variable outside every Box.
        """
        if len(self.vars) != len(self.defs):
            raise VariableMismatch(f"{len(self.vars)} variables but {len(self.defs)} definitions")
        if len(set(self.vars)) != len(self.vars):
            duplicates = sorted({v for v in self.vars if self.vars.count(v) > 1})
            raise VariableMismatch(f"duplicate variables: {', '.join(duplicates)}")
        known = set(self.vars)
        for owner, f in zip(self.vars, self.defs):
            unknown = [v for v in variables(f) if v not in known]
            if unknown:
                raise VariableMismatch(f"definition of {owner!r} mentions unknown variables: {', '.join(unknown)}")
            bad = unmodalized_occurrences(f, self.vars)
            if bad:
                variable, path = bad[0]
                raise NotFullyModalized(variable, path, owner)
        for f in extra:
            unknown = [v for v in variables(f) if v not in known]
            if unknown:
                raise VariableMismatch(f"formula mentions unknown variables: {', '.join(unknown)}")


@dataclass(frozen=True)
class RankRow:
    """Truth values at one rank."""

    rank: int
    var_values: dict[str, bool]
    box_values: dict[ModalFormula, bool]
    # Box argument values at this rank; drive the next rank's Box values.
    arg_values: dict[ModalFormula, bool] = field(repr=False)
    extra_values: tuple[bool, ...] = ()

    @property
    def settled(self) -> bool:
        return all(not value or self.arg_values[box] for box, value in self.box_values.items())

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "vars": dict(self.var_values),
            "boxes": {render_formula(box): value for box, value in self.box_values.items()},
        }


@dataclass(frozen=True)
class EvaluationResult:
    stable: dict[str, bool]
    stabilization_rank: int
    trace: tuple[RankRow, ...]

    def trace_json(self) -> list[dict]:
        return [row.to_json() for row in self.trace]


Compiled = Callable[[list, list], bool]


def _compile(f: ModalFormula, var_index: dict[str, int], box_index: dict[ModalFormula, int]) -> Compiled:
    """Turns a formula into a closure over (var values, box values) lists."""
    match f:
        case Top():
            return lambda vs, bs: True
        case Bottom():
            return lambda vs, bs: False
        case Var(name):
            i = var_index[name]
            return lambda vs, bs: vs[i]
        case Box():
            j = box_index[f]
            return lambda vs, bs: bs[j]
        case Not(operand):
            inner = _compile(operand, var_index, box_index)
            return lambda vs, bs: not inner(vs, bs)
    left = _compile(f.left, var_index, box_index)
    right = _compile(f.right, var_index, box_index)
    match f:
        case And():
            return lambda vs, bs: left(vs, bs) and right(vs, bs)
        case Or():
            return lambda vs, bs: left(vs, bs) or right(vs, bs)
        case Implies():
            return lambda vs, bs: (not left(vs, bs)) or right(vs, bs)
        case Iff():
            return lambda vs, bs: left(vs, bs) == right(vs, bs)
    raise TypeError(f"not a modal formula: {f!r}")


def iterate_ranks(sys: FixedPointSystem, extra: Sequence[ModalFormula] = ()) -> Iterator[RankRow]:
    """Yields the rank rows of ``sys`` forever.

    Args:
        sys: The system to evaluate.
        extra: Additional formulas over the system variables whose per-rank
            values are reported in ``RankRow.extra_values``.

    Raises:
        NotFullyModalized: If a definition mentions a variable outside a Box.
        VariableMismatch: If variables are duplicated or unknown.
    """
    sys.validate(extra)
    boxes = box_subformulas(*sys.defs, *extra)
    var_index = {name: i for i, name in enumerate(sys.vars)}
    box_index = {box: j for j, box in enumerate(boxes)}
    defs = [_compile(f, var_index, box_index) for f in sys.defs]
    args = [_compile(box.operand, var_index, box_index) for box in boxes]
    extras = [_compile(f, var_index, box_index) for f in extra]

    held = [True] * len(boxes)
    rank = 0
    while True:
        box_now = list(held)
        # defs are fully modalized, so they only read box values
        var_now = [d(None, box_now) for d in defs]
        arg_now = [a(var_now, box_now) for a in args]
        yield RankRow(
            rank=rank,
            var_values=dict(zip(sys.vars, var_now)),
            box_values=dict(zip(boxes, box_now)),
            arg_values=dict(zip(boxes, arg_now)),
            extra_values=tuple(e(var_now, box_now) for e in extras),
        )
        held = [h and a for h, a in zip(held, arg_now)]
        rank += 1


def settle_ranks(sys: FixedPointSystem, extra: Sequence[ModalFormula] = (), max_rank: int | None = None) -> tuple[RankRow, ...]:
    """Rows up to and including the first settled rank."""
    if max_rank is None:
        max_rank = load_settings().evaluation.max_rank
    rows = []
    for row in iterate_ranks(sys, extra):
        rows.append(row)
        if row.settled:
            return tuple(rows)
        if row.rank >= max_rank:
            break
    raise InternalEvaluationError(f"system did not stabilize within {max_rank} ranks")


def evaluate_system(sys: FixedPointSystem, max_rank: int | None = None) -> EvaluationResult:
    """Decides the stable truth values of a fixed-point system.

    Args:
        sys: Fully modalized system.
        max_rank: Safety cap; defaults to ``evaluation.max_rank`` from config.

    Returns:
        EvaluationResult: Stable values, the first settled rank and the trace
        of ranks 0 through that rank.

    Raises:
        NotFullyModalized, VariableMismatch: If the system is malformed.
        InternalEvaluationError: If the cap is reached.
    """
    rows = settle_ranks(sys, max_rank=max_rank)
    last = rows[-1]
    logger.debug("system with %d boxes settled at rank %d", len(last.box_values), last.rank)
    return EvaluationResult(stable=dict(last.var_values), stabilization_rank=last.rank, trace=rows)


def rank_trace(sys: FixedPointSystem, max_rank: int) -> list[RankRow]:
    """The first ``max_rank + 1`` rows of the evaluation trace."""
    if max_rank < 0:
        raise ValueError("max_rank must be nonnegative")
    return list(islice(iterate_ranks(sys), max_rank + 1))


def holds_eventually(sys: FixedPointSystem, formula: ModalFormula) -> bool:
    """Stable truth value of an arbitrary formula over the system variables.

    Formulas may carry unmodalized variables and Boxes the system does not
    mention; evaluation continues until those Boxes are settled as well.
    """
    rows = settle_ranks(sys, extra=(formula,))
    return rows[-1].extra_values[0]


# --------------------------------------------------------------------------
# Independent brute-force oracle
# --------------------------------------------------------------------------


def chain_values(sys: FixedPointSystem, worlds: int = 10) -> list[dict[str, bool]]:
    """Evaluates a system world by world on an explicit finite linear chain.

    World n sees every world m < n. Truth is computed by direct recursion on
    the formula with no sharing, so it serves as an oracle for
    ``evaluate_system``: once the chain is longer than the number of Boxes the
    last world carries the stable values.
    """
    sys.validate()
    definitions = dict(zip(sys.vars, sys.defs))
    valuation: list[dict[str, bool]] = []

    def truth(f: ModalFormula, world: int) -> bool:
        match f:
            case Top():
                return True
            case Bottom():
                return False
            case Var(name):
                if world < len(valuation):
                    return valuation[world][name]
                return truth(definitions[name], world)
            case Not(operand):
                return not truth(operand, world)
            case And(left, right):
                return truth(left, world) and truth(right, world)
            case Or(left, right):
                return truth(left, world) or truth(right, world)
            case Implies(left, right):
                return (not truth(left, world)) or truth(right, world)
            case Iff(left, right):
                return truth(left, world) == truth(right, world)
            case Box(operand):
                return all(truth(operand, earlier) for earlier in range(world))
        raise TypeError(f"not a modal formula: {f!r}")

    for world in range(worlds):
        valuation.append({name: truth(definitions[name], world) for name in sys.vars})
    return valuation


# --------------------------------------------------------------------------
# Random systems
# --------------------------------------------------------------------------


def _random_formula(rng: np.random.Generator, names: Sequence[str], depth: int, guarded: bool) -> ModalFormula:
    """Random formula; variables only appear once ``guarded`` (under a Box)."""
    leaves = ["T", "F"] + (["var"] * 3 if guarded else [])
    if depth <= 0:
        kind = leaves[rng.integers(len(leaves))]
    else:
        kind = ["not", "and", "or", "implies", "iff", "box", "box"][rng.integers(7)]
        if rng.random() < 0.25:
            kind = leaves[rng.integers(len(leaves))]
    match kind:
        case "T":
            return Top()
        case "F":
            return Bottom()
        case "var":
            return Var(names[rng.integers(len(names))])
        case "not":
            return Not(_random_formula(rng, names, depth - 1, guarded))
        case "box":
            return Box(_random_formula(rng, names, depth - 1, True))
    builder = {"and": And, "or": Or, "implies": Implies, "iff": Iff}[kind]
    return builder(
        _random_formula(rng, names, depth - 1, guarded),
        _random_formula(rng, names, depth - 1, guarded),
    )


def random_system(rng: np.random.Generator, n_vars: int = 2, max_boxes: int = 3, depth: int = 4) -> FixedPointSystem:
    """Draws a fully modalized system with at most ``max_boxes`` distinct Boxes."""
    names = tuple(f"p{i}" for i in range(n_vars))
    while True:
        defs = tuple(_random_formula(rng, names, depth, False) for _ in names)
        if len(box_subformulas(*defs)) <= max_boxes:
            return FixedPointSystem(names, defs)
