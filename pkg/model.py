from sqlmodel import SQLModel, Field, Relationship
from datetime import datetime
from typing import Optional


class DuelRuns(SQLModel, table=True):
    """
    Represents one recorded duel in the results database.

    Idealized duels (kind "idealized") keep the evaluator's stabilization rank; bounded duels
    (kind "bounded") keep one SearchRuns row per proof search. The full JSON report is stored alongside.
    """
    run_id: int | None = Field(default=None, primary_key=True, nullable=False)
    kind: str = Field(index=True, nullable=False)
    row_agent: str = Field(index=True, nullable=False)
    col_agent: str = Field(index=True, nullable=False)
    row_action: str
    col_action: str
    stabilization_rank: int | None = None
    recorded_at: datetime = Field(nullable=False)
    report_json: str

    searches: list["SearchRuns"] = Relationship(back_populates="duel", cascade_delete=True)


class SearchRuns(SQLModel, table=True):
    """
    Represents one budgeted proof search made by a side of a bounded duel.
    """
    search_id: int | None = Field(default=None, primary_key=True)
    side: str = Field(nullable=False)
    rule_index: int
    goal: str
    found: bool
    proof_length: int | None = None
    candidates_examined: int
    enumerator: str = Field(index=True)
    budget: int

    duel_id: int | None = Field(default=None, foreign_key="duelruns.run_id", ondelete="CASCADE")
    duel: Optional["DuelRuns"] = Relationship(back_populates="searches")


class SampleRuns(SQLModel, table=True):
    """
    Represents one batch of probabilistic self-play trials with its outcome counts.
    """
    sample_id: int | None = Field(default=None, primary_key=True)
    q: float = Field(index=True)
    mode: str = Field(index=True)
    n: int
    seed: int
    cc: int
    cd: int
    dc: int
    dd: int
    recorded_at: datetime = Field(nullable=False)


class EvolutionRuns(SQLModel, table=True):
    """
    Represents one replicator-dynamics run: the initial and final shares and the settings used.
    """
    evolution_id: int | None = Field(default=None, primary_key=True)
    steps: int
    shift: float
    mutation: float
    initial_json: str
    final_json: str
    recorded_at: datetime = Field(nullable=False)
