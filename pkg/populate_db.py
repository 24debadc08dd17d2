"""Utility script to seed the results database with a reproducible baseline.

Usage:
  python populate_db.py              # Populate only if tables empty
  python populate_db.py --force      # Force populate (adds on top)
  python populate_db.py --seed 11    # Different random opponents

Seeds the builtin round-robin, random opponents (with Faker names) against the
unexploitable agents, and the probabilistic self-play grid. The script is
idempotent by default (skips a table if it already has rows).
"""


from __future__ import annotations

import argparse
import logging
import re

import numpy as np
from faker import Faker
from sqlalchemy.engine import Engine
from sqlmodel import Session, select

from agents import BUILTIN_NAMES, builtin, random_agent
from arena import duel, duel_matrix
from init_db import create_db_and_tables
from model import DuelRuns, SampleRuns
from stochastic import CouplingMode, sample_pdupoc_selfplay
from utils import record_duel, record_sample

logger = logging.getLogger(__name__)

UNEXPLOITABLE = ("CUPOD", "DUPOC", "CIMCIC")
SAMPLE_QS = (0.5, 0.6, 0.75, 0.9, 0.99)
SAMPLE_TRIALS = 10_000

fake = Faker()


def table_has_rows(session: Session, model) -> bool:
    """Checks if a database table contains any rows.

    Args:
        session: The SQLModel session used for querying.
        model: The SQLModel table class to check.

    Returns:
        bool: True if the table contains at least one row, False otherwise.
    """
    return session.exec(select(model).limit(1)).first() is not None


def _agent_name(used: set[str]) -> str:
    """A Faker last name turned into a fresh identifier."""
    while True:
        name = re.sub(r"\W", "", fake.last_name()) + "Bot"
        if name not in used and name not in BUILTIN_NAMES:
            used.add(name)
            return name


def create_round_robin(engine: Engine, force: bool = False):
    """Records every ordered pair of the two-action builtins.

    Args:
        engine: Target database.
        force: If True, duels are added regardless of existing rows. Defaults to False.
    """
    with Session(engine) as session:
        if not force and table_has_rows(session, DuelRuns):
            return
    agents = [builtin(name) for name in BUILTIN_NAMES if set(builtin(name).actions) <= {"C", "D"}]
    for outcome in duel_matrix(agents).cells.values():
        ok, message = record_duel(outcome, engine)
        if not ok:
            logger.warning(message)


def create_random_opponents(engine: Engine, count: int = 30, seed: int = 0):
    """Plays ``count`` random opponents against each unexploitable agent.

    Args:
        engine: Target database.
        count: Number of random opponents. Defaults to 30.
        seed: Seed of the opponent generator and of the Faker names.
    """
    rng = np.random.default_rng(seed)
    Faker.seed(seed)
    used: set[str] = set()
    for _ in range(count):
        opponent = random_agent(rng, name=_agent_name(used))
        for name in UNEXPLOITABLE:
            record_duel(duel(builtin(name), opponent), engine)


def create_samples(engine: Engine, force: bool = False):
    """Records one sample per (q, coupling) on the standard grid.

    Args:
        engine: Target database.
        force: If True, samples are added regardless of existing rows. Defaults to False.
    """
    with Session(engine) as session:
        if not force and table_has_rows(session, SampleRuns):
            return
    for q in SAMPLE_QS:
        for mode in CouplingMode:
            record_sample(sample_pdupoc_selfplay(q, mode, SAMPLE_TRIALS, seed=0), engine)


def populate(force: bool = False, seed: int = 0):
    """Populates the results database.

    Random opponents are only added alongside a fresh round-robin so that a
    second run without ``force`` leaves the database unchanged.

    Args:
        force: If True, data is added to tables even if they already contain rows. Defaults to False.
        seed: Seed for the random opponents.
    """
    engine = create_db_and_tables()
    with Session(engine) as session:
        fresh = force or not table_has_rows(session, DuelRuns)
    create_round_robin(engine, force=force)
    if fresh:
        create_random_opponents(engine, seed=seed)
    create_samples(engine, force=force)


def parse_args():
    """Parses command-line arguments for database population script.

    Returns:
        Parsed command-line arguments with optional force flag and seed.
    """
    parser = argparse.ArgumentParser(description="Populate the Löb arena results database")
    parser.add_argument("--force", action="store_true", help="Insert data even if tables already contain rows")
    parser.add_argument("--seed", type=int, default=0, help="Seed for the random opponents")
    return parser.parse_args()


if __name__ == "__main__":
    args = parse_args()
    populate(force=args.force, seed=args.seed)
