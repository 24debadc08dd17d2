import json
import logging
from datetime import datetime, timezone

import pandas as pd
from sqlalchemy.engine import Engine
from sqlalchemy.exc import SQLAlchemyError
from sqlmodel import Session, select

from arena import Outcome
from dynamics import PopulationState
from init_db import create_db_and_tables
from model import DuelRuns, EvolutionRuns, SampleRuns, SearchRuns
from proof_sandbox import BoundedOutcome
from stochastic import JointFrequency

logger = logging.getLogger(__name__)

HISTORY_KINDS = ("duels", "searches", "samples", "evolutions")


def _now() -> datetime:
    return datetime.now(timezone.utc)


def record_duel(outcome: Outcome, engine: Engine | None = None):
    """Stores an idealized duel and its full JSON report.

    Args:
        outcome (Outcome): Result of ``arena.duel``.
        engine (Engine, optional): Target database; defaults to the configured one.

    Returns:
        tuple: (bool, str) indicating success status and a descriptive message.
    """
    try:
        engine = create_db_and_tables(engine)
        with Session(engine) as session:
            run = DuelRuns(
                kind="idealized",
                row_agent=outcome.row_agent,
                col_agent=outcome.col_agent,
                row_action=outcome.row_action,
                col_action=outcome.col_action,
                stabilization_rank=outcome.evidence.stabilization_rank if outcome.evidence else None,
                recorded_at=_now(),
                report_json=json.dumps(outcome.to_json(), sort_keys=True),
            )
            session.add(run)
            session.commit()
            logger.info("recorded duel %s vs %s as run %s", outcome.row_agent, outcome.col_agent, run.run_id)
            return True, f"Duel {outcome.row_agent} vs {outcome.col_agent} recorded as run {run.run_id}"
    except SQLAlchemyError as e:
        logger.warning("error recording duel %s vs %s: %s", outcome.row_agent, outcome.col_agent, e)
        return False, f"Error recording duel: {e}"


def record_bounded_duel(result: BoundedOutcome, engine: Engine | None = None):
    """Stores a bounded duel with one SearchRuns row per proof search.

    Returns:
        tuple: (bool, str) indicating success status and a descriptive message.
    """
    outcome = result.outcome
    try:
        engine = create_db_and_tables(engine)
        with Session(engine) as session:
            run = DuelRuns(
                kind="bounded",
                row_agent=outcome.row_agent,
                col_agent=outcome.col_agent,
                row_action=outcome.row_action,
                col_action=outcome.col_action,
                recorded_at=_now(),
                report_json=json.dumps(result.to_json(), sort_keys=True),
            )
            for side, searches in (("row", result.row_searches), ("col", result.col_searches)):
                for search in searches:
                    for report in search.reports:
                        data = report.to_json()
                        run.searches.append(
                            SearchRuns(
                                side=side,
                                rule_index=search.rule_index,
                                goal=data["goal"],
                                found=report.found,
                                proof_length=report.proof_length,
                                candidates_examined=report.candidates_examined,
                                enumerator=report.enumerator,
                                budget=report.budget,
                            )
                        )
            session.add(run)
            session.commit()
            return True, f"Bounded duel {outcome.row_agent} vs {outcome.col_agent} recorded as run {run.run_id}"
    except SQLAlchemyError as e:
        logger.warning("error recording bounded duel: %s", e)
        return False, f"Error recording bounded duel: {e}"


def record_sample(frequency: JointFrequency, engine: Engine | None = None):
    try:
        engine = create_db_and_tables(engine)
        with Session(engine) as session:
            row = frequency.to_row()
            session.add(SampleRuns(**row, recorded_at=_now()))
            session.commit()
            return True, f"Sample q={frequency.q} {row['mode']} seed={frequency.seed} recorded"
    except (SQLAlchemyError, OverflowError) as e:
        logger.warning("error recording sample: %s", e)
        return False, f"Error recording sample: {e}"


def record_evolution(
    initial: PopulationState,
    trajectory: pd.DataFrame,
    shift: float,
    mutation: float,
    engine: Engine | None = None,
):
    """Stores the first and last rows of a replicator trajectory.

    Returns:
        tuple: (bool, str) indicating success status and a descriptive message.
    """
    final = trajectory.drop(columns="step").iloc[-1].to_dict()
    try:
        engine = create_db_and_tables(engine)
        with Session(engine) as session:
            run = EvolutionRuns(
                steps=int(trajectory["step"].iloc[-1]),
                shift=shift,
                mutation=mutation,
                initial_json=json.dumps(initial.shares, sort_keys=True),
                final_json=json.dumps(final, sort_keys=True),
                recorded_at=_now(),
            )
            session.add(run)
            session.commit()
            return True, f"Evolution run recorded as {run.evolution_id}"
    except SQLAlchemyError as e:
        logger.warning("error recording evolution: %s", e)
        return False, f"Error recording evolution: {e}"


_HISTORY_TABLES = {
    "duels": DuelRuns,
    "searches": SearchRuns,
    "samples": SampleRuns,
    "evolutions": EvolutionRuns,
}


def run_history(kind: str = "duels", engine: Engine | None = None) -> pd.DataFrame:
    """Returns the recorded runs of one kind as a DataFrame.

    Args:
        kind (str): One of duels, searches, samples, evolutions.
        engine (Engine, optional): Source database; defaults to the configured one.

    Returns:
        pd.DataFrame: One row per record; empty on error.
    """
    table = _HISTORY_TABLES[kind]
    try:
        engine = create_db_and_tables(engine)
        with Session(engine) as session:
            results = session.exec(select(table)).all()
            data = [row.model_dump(exclude={"report_json"}) for row in results]
            return pd.DataFrame(data)
    except SQLAlchemyError as e:
        logger.warning("database error in run_history(%s): %s", kind, e)
        return pd.DataFrame()


def delete_run(run_id: int, engine: Engine | None = None):
    """Deletes a recorded duel and, by cascade, its searches.

    Returns:
        tuple: (bool, str) indicating success status and a descriptive message.
    """
    try:
        engine = create_db_and_tables(engine)
        with Session(engine) as session:
            statement = select(DuelRuns).where(DuelRuns.run_id == run_id)
            to_delete = session.exec(statement).one_or_none()
            if not to_delete:
                return False, f"No duel run found with ID: {run_id}"
            session.delete(to_delete)
            session.commit()
            return True, f"Duel run with ID: {run_id} deleted successfully"
    except SQLAlchemyError as e:
        logger.warning("error deleting duel run %s: %s", run_id, e)
        return False, f"Error deleting duel run: {e}"
