"""
===============================================================================
DATABASE MODELS FOR THE UNIT ROOT TOOLKIT
===============================================================================
Persistent state kept between runs:
- Dickey-Fuller null tables (one header row per (T, reps, seed) plus the
  quantile curve), so tables are simulated once and reused.
- An audit log of remote data fetches.

The database lives under the cache directory by default (SQLite). REAL
columns round-trip float64 exactly, so a reloaded table is bit-identical.
"""

import logging
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

from sqlalchemy import (Boolean, Column, DateTime, Float, ForeignKey, Integer,
                        String, UniqueConstraint, create_engine)
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

logger = logging.getLogger(__name__)

Base = declarative_base()


def _utcnow():
    return datetime.now(timezone.utc)


# =============================================================================
# NULL TABLES
# =============================================================================

class NullTableRecord(Base):
    """
    Header of a simulated Dickey-Fuller null distribution for one sample size
    """
    __tablename__ = 'null_tables'
    __table_args__ = (UniqueConstraint('sample_size', 'reps', 'seed', 'format_version',
                                       name='uq_null_table'),)

    id = Column(Integer, primary_key=True)
    sample_size = Column(Integer, nullable=False, index=True)
    reps = Column(Integer, nullable=False)
    seed = Column(Integer, nullable=False)
    format_version = Column(Integer, nullable=False, default=1)
    created_at = Column(DateTime, default=_utcnow)

    quantiles = relationship('NullQuantile', back_populates='table',
                             order_by='NullQuantile.idx',
                             cascade='all, delete-orphan')

    def __repr__(self):
        return f"<NullTableRecord(T={self.sample_size}, reps={self.reps}, seed={self.seed})>"


class NullQuantile(Base):
    """One (probability, quantile) point of a null table"""
    __tablename__ = 'null_quantiles'

    id = Column(Integer, primary_key=True)
    table_id = Column(Integer, ForeignKey('null_tables.id'), nullable=False, index=True)
    idx = Column(Integer, nullable=False)
    p = Column(Float, nullable=False)
    quantile = Column(Float, nullable=False)

    table = relationship('NullTableRecord', back_populates='quantiles')


# =============================================================================
# FETCH AUDIT LOG
# =============================================================================

class FetchLog(Base):
    """
    One row per remote fetch attempt. Endpoints are stored credential-filtered.
    """
    __tablename__ = 'fetch_log'

    id = Column(Integer, primary_key=True)
    series_key = Column(String(100), nullable=False, index=True)
    endpoint = Column(String(1000))
    status_code = Column(Integer)
    ok = Column(Boolean, default=False)
    n_obs = Column(Integer, default=0)
    cache_path = Column(String(500))
    error = Column(String(500))
    retrieved_at = Column(DateTime, default=_utcnow, index=True)

    def __repr__(self):
        return f"<FetchLog(series_key={self.series_key}, ok={self.ok}, status={self.status_code})>"


# =============================================================================
# ENGINE / SESSIONS
# =============================================================================

@lru_cache(maxsize=None)
def get_engine(database_url: str):
    """Engine per URL; SQLite parent directories are created on demand"""
    if database_url.startswith('sqlite'):
        db_path = database_url.split('sqlite:///', 1)[-1]
        if db_path and db_path != ':memory:':
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        return create_engine(
            database_url,
            echo=False,
            connect_args={
                "check_same_thread": False,
                "timeout": 20
            }
        )

    return create_engine(database_url, echo=False, pool_pre_ping=True)


def create_tables(database_url: str):
    """Create all tables (idempotent)"""
    try:
        Base.metadata.create_all(bind=get_engine(database_url))
    except Exception as e:
        logger.error(f"Error creating tables at {database_url}: {e}")
        raise


def get_session(database_url: str):
    """
    New session bound to database_url. The caller closes it.
    """
    create_tables(database_url)
    SessionLocal = sessionmaker(autocommit=False, autoflush=False,
                                bind=get_engine(database_url))
    return SessionLocal()
