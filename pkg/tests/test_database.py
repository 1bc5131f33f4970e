import pytest
from sqlalchemy.exc import IntegrityError

from database.models import FetchLog, NullQuantile, NullTableRecord, create_tables, get_engine, get_session


@pytest.fixture
def session(database_url):
    db = get_session(database_url)
    yield db
    db.close()


def test_engine_is_cached_and_creates_directories(tmp_path):
    url = f"sqlite:///{tmp_path / 'nested' / 'dir' / 'x.db'}"
    assert get_engine(url) is get_engine(url)
    assert (tmp_path / 'nested' / 'dir').is_dir()


def test_create_tables_is_idempotent(database_url):
    create_tables(database_url)
    create_tables(database_url)


def test_quantiles_come_back_in_order_and_bit_exact(session, database_url):
    points = [(2, 0.75, 0.1 + 0.2), (0, 0.25, -1.0 / 3.0), (1, 0.5, 2.0 ** -40)]
    record = NullTableRecord(sample_size=50, reps=10000, seed=1, format_version=1)
    record.quantiles = [NullQuantile(idx=i, p=p, quantile=q) for i, p, q in points]
    session.add(record)
    session.commit()

    fresh = get_session(database_url)
    try:
        loaded = fresh.query(NullTableRecord).filter_by(sample_size=50).one()
        assert [pt.idx for pt in loaded.quantiles] == [0, 1, 2]
        assert [pt.quantile for pt in loaded.quantiles] == [-1.0 / 3.0, 2.0 ** -40, 0.1 + 0.2]
        assert loaded.created_at is not None
    finally:
        fresh.close()


def test_duplicate_table_is_rejected(session):
    for _ in range(2):
        session.add(NullTableRecord(sample_size=30, reps=10000, seed=1, format_version=1))
    with pytest.raises(IntegrityError):
        session.commit()
    session.rollback()


def test_fetch_log_defaults(session):
    session.add(FetchLog(series_key='M.USD.EUR.SP00.A', endpoint='https://example.test'))
    session.commit()
    entry = session.query(FetchLog).one()
    assert entry.ok is False
    assert entry.n_obs == 0
    assert entry.retrieved_at is not None
    assert 'M.USD.EUR.SP00.A' in repr(entry)
