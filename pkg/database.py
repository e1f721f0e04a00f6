"""
Run ledger: every CLI invocation with its configuration fingerprint and headline numbers.
"""
import os
import logging
import threading
from typing import List, Dict, Optional, Any
from contextlib import contextmanager
from sqlmodel import SQLModel, create_engine, Session, select
from models import RunRecord, RunStatus
from config import DATABASE_PATH, BATCH_SIZE, CRITERION_THRESHOLD

logger = logging.getLogger(__name__)


class DatabaseManager:
    """Manages the SQLite run ledger."""

    def __init__(self, db_path: str = DATABASE_PATH):
        self.db_path = db_path
        self._lock = threading.Lock()
        self._engine = None
        self._init_database()

    def _init_database(self):
        """Initialize the database and create tables."""
        try:
            self._engine = create_engine(f"sqlite:///{self.db_path}", echo=False)
            db_exists = os.path.exists(self.db_path)
            SQLModel.metadata.create_all(self._engine)
            if db_exists:
                logger.debug(f"Using run ledger at {self.db_path}")
            else:
                logger.info(f"Created new run ledger at {self.db_path}")
        except Exception as e:
            logger.error(f"Failed to initialize database: {e}")
            raise

    @contextmanager
    def get_session(self):
        """Ledger session; commits on exit, rolls back on error."""
        with Session(self._engine) as session:
            try:
                yield session
                session.commit()
            except Exception as e:
                session.rollback()
                logger.error(f"Run ledger {self.db_path}: transaction rolled back ({e})")
                raise

    def add_run(self, run_data: Dict[str, Any]) -> Optional[int]:
        """Record a run."""
        try:
            with self._lock, self.get_session() as session:
                run = RunRecord(**run_data)
                session.add(run)
                session.flush()
                run_id, subcommand = run.id, run.subcommand
            logger.info(f"Recorded {subcommand} run {run_id}")
            return run_id
        except Exception as e:
            logger.error(f"Failed to record run: {e}")
            return None

    def get_runs(self, subcommand: Optional[str] = None,
                 status: Optional[str] = None,
                 limit: int = BATCH_SIZE,
                 offset: int = 0) -> List[Dict[str, Any]]:
        """Recorded runs, newest first, with optional filtering and pagination."""
        try:
            with self.get_session() as session:
                query = select(RunRecord)
                if subcommand:
                    query = query.where(RunRecord.subcommand == subcommand)
                if status:
                    query = query.where(RunRecord.status == RunStatus(status))
                query = query.order_by(RunRecord.id.desc()).offset(offset).limit(limit)
                return [run.model_dump() for run in session.exec(query).all()]
        except Exception as e:
            logger.error(f"Failed to get runs: {e}")
            return []

    def get_run_by_id(self, run_id: int) -> Optional[Dict[str, Any]]:
        """Get a specific run by ID."""
        try:
            with self.get_session() as session:
                run = session.get(RunRecord, run_id)
                return run.model_dump() if run else None
        except Exception as e:
            logger.error(f"Failed to get run {run_id}: {e}")
            return None

    def delete_run(self, run_id: int) -> bool:
        """Delete a run."""
        try:
            with self.get_session() as session:
                run = session.get(RunRecord, run_id)
                if not run:
                    return False
                session.delete(run)
                session.commit()
                logger.info(f"Run {run_id} deleted")
                return True
        except Exception as e:
            logger.error(f"Failed to delete run {run_id}: {e}")
            return False

    def get_run_statistics(self) -> Dict[str, Any]:
        """Run counts per subcommand and status, and the fraction of evaluated runs that certified."""
        try:
            with self.get_session() as session:
                runs = session.exec(select(RunRecord)).all()
                subcommand_counts: Dict[str, int] = {}
                for run in runs:
                    subcommand_counts[run.subcommand] = subcommand_counts.get(run.subcommand, 0) + 1
                status_counts = {s.value: len([r for r in runs if r.status == s]) for s in RunStatus}
                evaluated = [r for r in runs if r.criterion_value is not None]
                certified = len([r for r in evaluated if r.criterion_value < CRITERION_THRESHOLD])
                return {
                    "total": len(runs),
                    "subcommand_counts": subcommand_counts,
                    "status_counts": status_counts,
                    "evaluated": len(evaluated),
                    "certified_rate": (certified / len(evaluated) * 100) if evaluated else 0,
                }
        except Exception as e:
            logger.error(f"Failed to get statistics: {e}")
            return {"total": 0, "subcommand_counts": {}, "status_counts": {}, "evaluated": 0, "certified_rate": 0}


_db_manager: Optional[DatabaseManager] = None


def get_db_manager(db_path: Optional[str] = None) -> DatabaseManager:
    """Shared ledger instance, created on first use."""
    global _db_manager
    if db_path is not None and (_db_manager is None or _db_manager.db_path != db_path):
        _db_manager = DatabaseManager(db_path)
    elif _db_manager is None:
        _db_manager = DatabaseManager()
    return _db_manager
