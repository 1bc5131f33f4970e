"""
===============================================================================
DICKEY-FULLER TEST (NO CONSTANT) WITH SIMULATED NULL TABLES
===============================================================================
Statistic (rho_hat - 1) / s_rho, left-tailed: very negative values reject the
unit root. The SVD 'tau' is the same quantity with the opposite sign.

Null distributions are simulated per sample size from random walks started
at x0 = 0 with unit innovations, summarized by 1999 quantiles
(p = 0.0005 ... 0.9995) and cached in the toolkit database so each
(T, reps, seed) table is built once.
"""

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ar1_core import TimeSeries, derive_rng, fit_ar1
from config import resolve_workers
from database.models import NullQuantile, NullTableRecord, get_session
from errors import InvalidArgumentError, NumericFailureError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MIN_REPS = 10000
BLOCK_SIZE = 1000
P_GRID = np.linspace(0.0005, 0.9995, 1999)
P_MIN, P_MAX = float(P_GRID[0]), float(P_GRID[-1])


@dataclass(frozen=True, eq=False)
class NullTable:
    T: int
    p: np.ndarray
    quantiles: np.ndarray
    reps: int
    seed: int
    # built for another T and borrowed by nearest()
    interpolated: bool = False

    @property
    def table_id(self) -> str:
        return f"df-nc-T{self.T}-r{self.reps}-s{self.seed}-v{FORMAT_VERSION}"

    @property
    def median(self) -> float:
        return float(np.interp(0.5, self.p, self.quantiles))

    def same_values(self, other: 'NullTable') -> bool:
        return (self.T == other.T and np.array_equal(self.p, other.p)
                and np.array_equal(self.quantiles, other.quantiles))


@dataclass(frozen=True)
class DfResult:
    """stat is (rho_hat - 1)/s_rho; the SVD tau equals -stat"""

    stat: float
    p_value: float
    T: int
    table_id: str

    def to_dict(self):
        return {'stat': self.stat, 'p_value': self.p_value, 'T': self.T, 'table_id': self.table_id}


def df_statistic(series: TimeSeries) -> float:
    return fit_ar1(series).df_stat


def _simulate_block(T: int, seed: int, block: int, n: int) -> np.ndarray:
    """DF statistics of n random walks of length T"""
    rng = derive_rng(seed, T, block)
    x = np.cumsum(rng.standard_normal((n, T)), axis=1)
    lag = np.zeros_like(x)
    lag[:, 1:] = x[:, :-1]

    Q = np.einsum('ij,ij->i', lag, lag)
    rho_hat = np.einsum('ij,ij->i', x, lag) / Q
    resid = x - rho_hat[:, None] * lag
    sse1 = np.einsum('ij,ij->i', resid, resid)
    s_rho = np.sqrt(sse1 / (T - 1) / Q)
    return (rho_hat - 1.0) / s_rho


def build_null_table(T: int, reps: int, seed: int, threads: int = 1) -> NullTable:
    """
    Simulate the null distribution. Replications run in blocks with their own
    derived streams, so the table does not depend on the worker count.
    """
    if T < 3:
        raise InvalidArgumentError(f"T must be >= 3, got {T}")
    if reps < MIN_REPS:
        raise InvalidArgumentError(f"reps must be >= {MIN_REPS}, got {reps}")

    sizes = [BLOCK_SIZE] * (reps // BLOCK_SIZE)
    if reps % BLOCK_SIZE:
        sizes.append(reps % BLOCK_SIZE)

    workers = min(resolve_workers(threads), len(sizes))
    logger.info(f"Building DF null table T={T} reps={reps} seed={seed} workers={workers}")

    if workers == 1:
        blocks = [_simulate_block(T, seed, b, n) for b, n in enumerate(sizes)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_simulate_block, [T] * len(sizes), [seed] * len(sizes),
                                   range(len(sizes)), sizes))

    stats = np.concatenate(blocks)
    if not np.all(np.isfinite(stats)):
        raise NumericFailureError(f"non-finite DF statistics in null simulation for T={T}")

    quantiles = np.quantile(stats, P_GRID)
    if np.any(np.diff(quantiles) <= 0):
        raise NumericFailureError(f"null table quantiles for T={T} are not strictly increasing")

    return NullTable(T=T, p=P_GRID.copy(), quantiles=quantiles, reps=reps, seed=seed)


def df_pvalue(stat: float, table: NullTable) -> float:
    """Left-tail p-value by linear interpolation, clamped to [0.0005, 0.9995]"""
    p = float(np.interp(stat, table.quantiles, table.p, left=P_MIN, right=P_MAX))
    return min(max(p, P_MIN), P_MAX)


def df_test(series: TimeSeries, table: NullTable) -> DfResult:
    if table.T != series.T and not table.interpolated:
        logger.warning(f"DF table built for T={table.T} used on a series with T={series.T}")
    stat = df_statistic(series)
    return DfResult(stat=stat, p_value=df_pvalue(stat, table), T=series.T, table_id=table.table_id)


# =============================================================================
# CSV EXPORT
# =============================================================================

def write_table_csv(table: NullTable, path: str):
    """Header comments carry T/reps/seed/version; columns p, quantile"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', newline='', encoding='utf-8') as handle:
        handle.write(f"# T={table.T} reps={table.reps} seed={table.seed} version={FORMAT_VERSION}\n")
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['p', 'quantile'])
        for p, q in zip(table.p, table.quantiles):
            writer.writerow([repr(float(p)), repr(float(q))])


def read_table_csv(path: str) -> NullTable:
    with open(path, 'r', encoding='utf-8') as handle:
        header = handle.readline().lstrip('#').split()
        meta = dict(item.split('=', 1) for item in header)
        rows = list(csv.DictReader(handle))
    if int(meta.get('version', -1)) != FORMAT_VERSION:
        raise InvalidArgumentError(f"Unsupported null table version in {path}: {meta.get('version')}")
    return NullTable(
        T=int(meta['T']), reps=int(meta['reps']), seed=int(meta['seed']),
        p=np.array([float(r['p']) for r in rows]),
        quantiles=np.array([float(r['quantile']) for r in rows]),
    )


# =============================================================================
# PERSISTENT STORE
# =============================================================================

class NullTableStore:
    """
    Null tables cached in the toolkit database. A failing database degrades
    to in-memory tables with a warning.
    """

    def __init__(self, database_url: Optional[str] = None):
        self.database_url = database_url
        self._memory = {}

    def _session(self):
        return get_session(self.database_url)

    def load(self, T: int, reps: int, seed: int) -> Optional[NullTable]:
        key = (T, reps, seed)
        if key in self._memory:
            return self._memory[key]
        if not self.database_url:
            return None

        try:
            db = self._session()
            try:
                record = db.query(NullTableRecord).filter_by(
                    sample_size=T, reps=reps, seed=seed, format_version=FORMAT_VERSION).first()
                if record is None:
                    return None
                points = record.quantiles
                table = NullTable(
                    T=T, reps=reps, seed=seed,
                    p=np.array([pt.p for pt in points]),
                    quantiles=np.array([pt.quantile for pt in points]),
                )
            finally:
                db.close()
        except Exception as e:
            logger.warning(f"Could not read null table cache ({e}); rebuilding in memory")
            return None

        self._memory[key] = table
        return table

    def save(self, table: NullTable):
        self._memory[(table.T, table.reps, table.seed)] = table
        if not self.database_url:
            return

        try:
            db = self._session()
            try:
                record = NullTableRecord(sample_size=table.T, reps=table.reps, seed=table.seed,
                                         format_version=FORMAT_VERSION)
                record.quantiles = [NullQuantile(idx=i, p=float(p), quantile=float(q))
                                    for i, (p, q) in enumerate(zip(table.p, table.quantiles))]
                db.add(record)
                db.commit()
            except Exception:
                db.rollback()
                raise
            finally:
                db.close()
        except Exception as e:
            logger.warning(f"Null table cache write failed for T={table.T} ({e}); keeping it in memory only")

    def get_or_build(self, T: int, reps: int, seed: int, threads: int = 1) -> NullTable:
        table = self.load(T, reps, seed)
        if table is None:
            table = build_null_table(T, reps, seed, threads)
            self.save(table)
        return table

    def nearest(self, T: int, reps: int, seed: int) -> Optional[NullTable]:
        """
        Stored table with the closest sample size; flagged interpolated when
        its T differs from the one requested.
        """
        exact = self.load(T, reps, seed)
        if exact is not None:
            return exact

        candidates = {key[0] for key in self._memory if key[1:] == (reps, seed)}
        if self.database_url:
            try:
                db = self._session()
                try:
                    rows = db.query(NullTableRecord.sample_size).filter_by(
                        reps=reps, seed=seed, format_version=FORMAT_VERSION).all()
                    candidates.update(row[0] for row in rows)
                finally:
                    db.close()
            except Exception as e:
                logger.warning(f"Could not list cached null tables ({e})")

        if not candidates:
            return None
        best = min(candidates, key=lambda size: (abs(size - T), size))
        table = self.load(best, reps, seed)
        if table is None:
            return None
        return NullTable(T=table.T, p=table.p, quantiles=table.quantiles, reps=table.reps,
                         seed=table.seed, interpolated=True)
