"""Payoffs, tournaments and discrete replicator dynamics over agent populations."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from yaml.loader import SafeLoader

from arena import Outcome, OutcomeMatrix
from config import PayoffSettings, load_settings
from errors import ConfigError, DomainError, NonpositiveFitness, UnknownAction

logger = logging.getLogger(__name__)

SIMPLEX_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PayoffMatrix:
    """Symmetric two-player game given by the row player's payoffs.

    The column player's payoff for (x, y) is the row payoff of (y, x).
    """

    actions: tuple[str, ...]
    rows: dict[str, tuple[float, ...]]

    def __post_init__(self):
        if not self.actions or len(set(self.actions)) != len(self.actions):
            raise ConfigError("payoff actions must be distinct and nonempty")
        if set(self.rows) != set(self.actions):
            raise ConfigError("payoff rows must list exactly one row per action")
        if any(len(row) != len(self.actions) for row in self.rows.values()):
            raise ConfigError("every payoff row needs one entry per action")

    @classmethod
    def from_settings(cls, settings: PayoffSettings) -> "PayoffMatrix":
        return cls(tuple(settings.actions), {x: tuple(float(v) for v in row) for x, row in settings.rows.items()})

    def row_payoff(self, x: str, y: str) -> float:
        for action in (x, y):
            if action not in self.actions:
                raise UnknownAction(f"action {action!r} is not in the payoff alphabet {', '.join(self.actions)}")
        return self.rows[x][self.actions.index(y)]

    def cell(self, x: str, y: str) -> tuple[float, float]:
        return self.row_payoff(x, y), self.row_payoff(y, x)

    def restrict(self, actions: list[str] | tuple[str, ...]) -> "PayoffMatrix":
        """Sub-game on ``actions``, e.g. the prisoner's dilemma block ``[C, D]``."""
        return PayoffMatrix(
            tuple(actions),
            {x: tuple(self.row_payoff(x, y) for y in actions) for x in actions},
        )

    def shifted(self, c: float) -> "PayoffMatrix":
        return PayoffMatrix(self.actions, {x: tuple(v + c for v in row) for x, row in self.rows.items()})


def default_payoffs() -> PayoffMatrix:
    """The configured game; out of the box the 3-action encroachment game."""
    return PayoffMatrix.from_settings(load_settings().payoffs)


def load_payoffs(path: str | Path) -> PayoffMatrix:
    """Reads a payoff YAML file with ``actions`` and ``rows`` keys."""
    try:
        with open(path, encoding="utf-8") as file:
            data = yaml.load(file, Loader=SafeLoader)
    except OSError as exc:
        raise ConfigError(f"cannot read payoff file {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"error parsing payoff file {path}: {exc}") from exc
    try:
        return PayoffMatrix.from_settings(PayoffSettings.model_validate(data or {}))
    except ValueError as exc:
        raise ConfigError(f"invalid payoff file {path}: {exc}") from exc


def payoff(outcome: Outcome, m: PayoffMatrix) -> tuple[float, float]:
    return m.cell(outcome.row_action, outcome.col_action)


@dataclass(frozen=True)
class PopulationState:
    """Shares of agent types; nonnegative and summing to one."""

    shares: dict[str, float]

    def __post_init__(self):
        if not self.shares:
            raise DomainError("a population needs at least one agent")
        if any(not np.isfinite(share) or share < 0 for share in self.shares.values()):
            raise DomainError("population shares must be finite and nonnegative")
        total = sum(self.shares.values())
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise DomainError(f"population shares sum to {total!r}, not 1")

    @classmethod
    def from_weights(cls, weights: dict[str, float]) -> "PopulationState":
        total = float(sum(weights.values()))
        if total <= 0:
            raise DomainError("population weights must have a positive sum")
        return cls({name: float(w) / total for name, w in weights.items()})

    @property
    def names(self) -> list[str]:
        return list(self.shares)

    def vector(self) -> np.ndarray:
        return np.array(list(self.shares.values()), dtype=float)


def load_population(path: str | Path) -> PopulationState:
    """Reads a YAML mapping agent-name -> weight; weights are normalized."""
    try:
        with open(path, encoding="utf-8") as file:
            data = yaml.load(file, Loader=SafeLoader)
    except OSError as exc:
        raise ConfigError(f"cannot read population file {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"error parsing population file {path}: {exc}") from exc
    if not isinstance(data, dict) or not all(isinstance(v, (int, float)) for v in data.values()):
        raise ConfigError(f"population file {path} must map agent names to numbers")
    return PopulationState.from_weights({str(k): float(v) for k, v in data.items()})


def payoff_table(names: list[str], outcomes: OutcomeMatrix, m: PayoffMatrix) -> np.ndarray:
    """``A[i, j]`` is the row payoff of ``names[i]`` against ``names[j]``."""
    missing = [name for name in names if name not in outcomes.names]
    if missing:
        raise DomainError(f"no outcomes for {', '.join(missing)}")
    return np.array([[payoff(outcomes.cell(a, b), m)[0] for b in names] for a in names], dtype=float)


def fitness(pop: PopulationState, outcomes: OutcomeMatrix, m: PayoffMatrix) -> dict[str, float]:
    """Expected row payoff of each type against the population, self-play included."""
    table = payoff_table(pop.names, outcomes, m)
    return dict(zip(pop.names, (table @ pop.vector()).tolist()))


def _step(shares: np.ndarray, table: np.ndarray, shift: float, mutation: float) -> np.ndarray:
    fit = table @ shares + shift
    if np.any(fit[shares > 0] <= 0):
        raise NonpositiveFitness(f"fitness {fit.min()!r} is not positive after a shift of {shift}")
    new = shares * fit
    new = new / new.sum()
    if mutation:
        new = (1 - mutation) * new + mutation / len(new)
    return new / new.sum()


def _resolve(shift: float | None, mutation: float | None) -> tuple[float, float]:
    settings = load_settings().dynamics
    shift = settings.payoff_shift if shift is None else shift
    mutation = settings.mutation if mutation is None else mutation
    if not (0.0 <= mutation <= 1.0):
        raise DomainError(f"mutation rate must lie in [0, 1], got {mutation}")
    return shift, mutation


def replicator_step(
    pop: PopulationState,
    outcomes: OutcomeMatrix,
    m: PayoffMatrix,
    shift: float | None = None,
    mutation: float | None = None,
) -> PopulationState:
    """One discrete replicator update ``x'_a = x_a f_a / sum_b x_b f_b``.

    Args:
        shift: Constant added to every payoff; defaults to
            ``dynamics.payoff_shift`` from config.
        mutation: Rate of the uniform mutation applied after selection;
            defaults to ``dynamics.mutation``.

    Raises:
        NonpositiveFitness: If a present type has fitness <= 0 after the shift.
    """
    shift, mutation = _resolve(shift, mutation)
    table = payoff_table(pop.names, outcomes, m)
    new = _step(pop.vector(), table, shift, mutation)
    return PopulationState(dict(zip(pop.names, new.tolist())))


def evolve(
    pop: PopulationState,
    outcomes: OutcomeMatrix,
    m: PayoffMatrix,
    steps: int,
    shift: float | None = None,
    mutation: float | None = None,
) -> pd.DataFrame:
    """Iterates ``replicator_step``.

    Returns:
        pd.DataFrame: ``steps + 1`` rows with a ``step`` column and one share
        column per agent, starting from the initial population.
    """
    if steps < 1:
        raise DomainError(f"steps must be at least 1, got {steps}")
    shift, mutation = _resolve(shift, mutation)
    table = payoff_table(pop.names, outcomes, m)
    shares = pop.vector()
    rows = [shares]
    for _ in range(steps):
        shares = _step(shares, table, shift, mutation)
        rows.append(shares)
    trajectory = pd.DataFrame(np.vstack(rows), columns=pop.names)
    trajectory.insert(0, "step", range(steps + 1))
    logger.debug("evolved %d types for %d steps", len(pop.names), steps)
    return trajectory


def trajectory_csv(trajectory: pd.DataFrame) -> str:
    return trajectory.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def tournament(outcomes: OutcomeMatrix, m: PayoffMatrix) -> pd.DataFrame:
    """Round-robin summary: one row per ordered pair plus per-agent means.

    Returns:
        pd.DataFrame: Columns row_agent, col_agent, row_action, col_action,
        row_payoff, col_payoff.
    """
    records = []
    for (i, j), outcome in sorted(outcomes.cells.items()):
        row_payoff, col_payoff = payoff(outcome, m)
        records.append(
            {
                "row_agent": outcome.row_agent,
                "col_agent": outcome.col_agent,
                "row_action": outcome.row_action,
                "col_action": outcome.col_action,
                "row_payoff": row_payoff,
                "col_payoff": col_payoff,
            }
        )
    return pd.DataFrame(records)


def mean_payoffs(games: pd.DataFrame) -> pd.Series:
    """Average row payoff of each agent over all its opponents, best first."""
    means = games.groupby("row_agent", sort=False)["row_payoff"].mean()
    return means.sort_values(ascending=False, kind="stable")
