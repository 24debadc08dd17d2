from functools import lru_cache

from sqlalchemy.engine import Engine
from sqlmodel import SQLModel, create_engine

import model as model
from config import load_settings


#creation of the Engine, one per database file
@lru_cache(maxsize=None)
def _engine_for(sqlite_file_name: str, echo: bool) -> Engine:
    sqlite_url = f"sqlite:///{sqlite_file_name}"
    return create_engine(sqlite_url, echo=echo)


def get_engine(db_path: str | None = None) -> Engine:
    settings = load_settings().database
    return _engine_for(str(db_path or settings.sqlite_file_name), settings.echo)


def create_db_and_tables(engine: Engine | None = None) -> Engine:
    engine = engine or get_engine()
    SQLModel.metadata.create_all(engine)
    return engine


if __name__ == "__main__":
    create_db_and_tables()
