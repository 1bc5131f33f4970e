"""
===============================================================================
DATA INGESTION AND EMPIRICAL PIPELINE
===============================================================================
Reads monthly series from CSV (long: date,id,value / wide: date + one column
per id), optionally downloads a series from the ECB data portal, and runs
SVD*, BIC, Dickey-Fuller and the Jeffreys tail probability on each series.

The network sits behind a small Transport interface; tests pass a stub.
"""

import io
import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import requests

from ar1_core import TimeSeries
from bic import bic_test
from config import Settings, load_settings, resolve_workers
from database.models import FetchLog, get_session
from dickey_fuller import NullTableStore, df_test
from errors import DataFormatError, FetchError, InvalidArgumentError, UnitRootError
from log_filters import CredentialFilter
from logger_config import get_unitroot_logger
from phillips_posterior import PriorKind, tail_prob_ge_one
from svd import svd_data_driven

logger = logging.getLogger(__name__)

MIN_OBSERVATIONS = 10
# first data row of a CSV with a header sits on file line 2
FIRST_DATA_LINE = 2

_credential_filter = CredentialFilter()


class SeriesSource(str, Enum):
    LOCAL_CSV = 'LOCAL_CSV'
    REMOTE_FETCH = 'REMOTE_FETCH'


class CsvLayout(str, Enum):
    AUTO = 'AUTO'
    LONG = 'LONG'
    WIDE = 'WIDE'


@dataclass(frozen=True)
class CsvSchema:
    layout: CsvLayout = CsvLayout.AUTO
    date_col: str = 'date'
    id_col: str = 'id'
    value_col: str = 'value'


# ECB 'csvdata' payloads: one series, observations in TIME_PERIOD / OBS_VALUE
ECB_SCHEMA = CsvSchema(CsvLayout.LONG, date_col='TIME_PERIOD', id_col='KEY', value_col='OBS_VALUE')


@dataclass(frozen=True)
class SeriesRecord:
    """
    One validated monthly series. Dates are ISO strings, strictly
    increasing; values are finite and positive.
    """

    id: str
    dates: Tuple[str, ...]
    values: Tuple[float, ...]
    source: SeriesSource = field(default=SeriesSource.LOCAL_CSV, compare=False)

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise DataFormatError(f"series {self.id}: {len(self.dates)} dates but {len(self.values)} values",
                                  source=self.source.value)
        if len(self.values) < MIN_OBSERVATIONS:
            raise DataFormatError(
                f"series {self.id} has {len(self.values)} observations, need at least {MIN_OBSERVATIONS}",
                column=self.id, source=self.source.value)
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DataFormatError(f"dates not strictly increasing at {self.dates[i]}",
                                      row=i + FIRST_DATA_LINE, column=self.id, source=self.source.value)
        for i, value in enumerate(self.values):
            if not (math.isfinite(value) and value > 0):
                raise DataFormatError(f"series {self.id} value {value} must be finite and positive",
                                      row=i + FIRST_DATA_LINE, column=self.id, source=self.source.value)

    @property
    def observations(self) -> List[Tuple[str, float]]:
        return list(zip(self.dates, self.values))

    def to_series(self, log_levels: bool = False) -> TimeSeries:
        """First observation is x0; the rest is the sample (T = length - 1)"""
        levels = np.asarray(self.values, dtype=float)
        if log_levels:
            levels = np.log(levels)
        return TimeSeries.from_levels(levels)


# =============================================================================
# CSV PARSING
# =============================================================================

def _load_frame(source: Union[str, Path, io.StringIO], origin: SeriesSource) -> pd.DataFrame:
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError("CSV is empty", source=origin.value)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"CSV could not be parsed: {e}", source=origin.value)
    if frame.empty:
        raise DataFormatError("CSV has a header but no data rows", source=origin.value)
    frame.columns = [str(c).strip() for c in frame.columns]
    # short rows leave NaN behind even with keep_default_na off
    return frame.fillna('')


def _parse_dates(raw: pd.Series, column: str, origin: SeriesSource) -> List[str]:
    parsed = pd.to_datetime(raw.str.strip(), errors='coerce', format='mixed')
    for i, (text, stamp) in enumerate(zip(raw, parsed)):
        if pd.isna(stamp):
            raise DataFormatError(f"malformed date '{text}'", row=i + FIRST_DATA_LINE,
                                  column=column, source=origin.value)
    return [stamp.strftime('%Y-%m-%d') for stamp in parsed]


def _parse_values(raw: pd.Series, column: str, origin: SeriesSource) -> List[float]:
    cleaned = raw.str.strip()
    numbers = pd.to_numeric(cleaned, errors='coerce')
    for i, (text, number) in enumerate(zip(cleaned, numbers)):
        if text == '':
            raise DataFormatError("missing value", row=i + FIRST_DATA_LINE, column=column, source=origin.value)
        if pd.isna(number):
            raise DataFormatError(f"non-numeric value '{text}'", row=i + FIRST_DATA_LINE,
                                  column=column, source=origin.value)
    return [float(v) for v in numbers]


def _check_monotone(dates: List[str], column: str, rows: Sequence[int], origin: SeriesSource):
    for k in range(1, len(dates)):
        if dates[k] <= dates[k - 1]:
            raise DataFormatError(f"dates not strictly increasing ({dates[k - 1]} then {dates[k]})",
                                  row=rows[k], column=column, source=origin.value)


def _resolve_layout(frame: pd.DataFrame, schema: CsvSchema) -> CsvSchema:
    if schema.layout != CsvLayout.AUTO:
        return schema
    if {'TIME_PERIOD', 'OBS_VALUE'} <= set(frame.columns):
        return ECB_SCHEMA
    if {schema.date_col, schema.id_col, schema.value_col} <= set(frame.columns):
        return CsvSchema(CsvLayout.LONG, schema.date_col, schema.id_col, schema.value_col)
    return CsvSchema(CsvLayout.WIDE, schema.date_col, schema.id_col, schema.value_col)


def parse_csv_text(source: Union[str, Path, io.StringIO], schema: CsvSchema = CsvSchema(),
                   origin: SeriesSource = SeriesSource.LOCAL_CSV,
                   default_id: Optional[str] = None) -> List[SeriesRecord]:
    frame = _load_frame(source, origin)
    schema = _resolve_layout(frame, schema)

    if schema.date_col not in frame.columns:
        raise DataFormatError(f"missing date column '{schema.date_col}'", column=schema.date_col,
                              source=origin.value)
    dates = _parse_dates(frame[schema.date_col], schema.date_col, origin)
    line_numbers = [i + FIRST_DATA_LINE for i in range(len(frame))]
    records = []

    if schema.layout == CsvLayout.WIDE:
        columns = [c for c in frame.columns if c != schema.date_col]
        if not columns:
            raise DataFormatError("wide CSV has no series columns", source=origin.value)
        _check_monotone(dates, schema.date_col, line_numbers, origin)
        for column in columns:
            values = _parse_values(frame[column], column, origin)
            records.append(SeriesRecord(column, tuple(dates), tuple(values), origin))
        return records

    missing = [c for c in (schema.value_col,) if c not in frame.columns]
    if missing:
        raise DataFormatError(f"missing column '{missing[0]}'", column=missing[0], source=origin.value)
    values = _parse_values(frame[schema.value_col], schema.value_col, origin)
    if schema.id_col in frame.columns and schema != ECB_SCHEMA:
        ids = [s.strip() for s in frame[schema.id_col]]
    else:
        ids = [default_id or 'series'] * len(frame)

    order: List[str] = []
    grouped: Dict[str, List[int]] = {}
    for i, sid in enumerate(ids):
        if sid == '':
            raise DataFormatError("missing series id", row=line_numbers[i], column=schema.id_col,
                                  source=origin.value)
        if sid not in grouped:
            order.append(sid)
            grouped[sid] = []
        grouped[sid].append(i)

    for sid in order:
        idx = grouped[sid]
        series_dates = [dates[i] for i in idx]
        _check_monotone(series_dates, schema.date_col, [line_numbers[i] for i in idx], origin)
        records.append(SeriesRecord(sid, tuple(series_dates), tuple(values[i] for i in idx), origin))
    return records


def read_csv(path: Union[str, Path], schema: CsvSchema = CsvSchema()) -> List[SeriesRecord]:
    """Validated records from a local CSV, in column / first-appearance order"""
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"data file not found: {path}")
    records = parse_csv_text(path, schema, SeriesSource.LOCAL_CSV)
    get_unitroot_logger().log_data_event(path.name, 'read_csv', {
        'series': len(records), 'layout': schema.layout.value,
    })
    return records


def read_series_file(path: Union[str, Path], column: Optional[str] = None) -> TimeSeries:
    """
    Single series for ad-hoc testing: a 'value' column (or the named or the
    only non-date column). Values may be any finite numbers; the first one
    is x0.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"input file not found: {path}")
    frame = _load_frame(path, SeriesSource.LOCAL_CSV)
    candidates = [c for c in frame.columns if c != 'date']
    if column is None:
        column = 'value' if 'value' in candidates else (candidates[0] if len(candidates) == 1 else None)
    if column is None or column not in frame.columns:
        raise DataFormatError(f"cannot choose a value column among {candidates}; pass --series",
                              source=SeriesSource.LOCAL_CSV.value)
    return TimeSeries.from_levels(_parse_values(frame[column], column, SeriesSource.LOCAL_CSV))


def parse_inline_series(text: str) -> TimeSeries:
    """Comma separated numbers; the first one is x0"""
    try:
        levels = [float(item) for item in text.split(',') if item.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"inline series must be comma separated numbers: {e}")
    return TimeSeries.from_levels(levels)


# =============================================================================
# REMOTE FETCH
# =============================================================================

@dataclass(frozen=True)
class TransportResponse:
    status_code: int
    text: str


class Transport:
    """Minimal HTTP GET used by fetch_remote"""

    def get(self, url: str, params: Dict[str, Any], timeout: float) -> TransportResponse:
        raise NotImplementedError


class RequestsTransport(Transport):
    def __init__(self):
        self.session = requests.Session()
        self.session.headers.update({
            'User-Agent': 'unitroot-bic/1.0',
            'Accept': 'text/csv',
        })

    def get(self, url: str, params: Dict[str, Any], timeout: float) -> TransportResponse:
        try:
            response = self.session.get(url, params=params, timeout=timeout)
        except requests.Timeout:
            raise FetchError(f"request to {url} timed out after {timeout}s")
        except requests.RequestException as e:
            raise FetchError(f"request to {url} failed: {e}")
        return TransportResponse(response.status_code, response.text)


def _cache_name(series_key: str) -> str:
    return re.sub(r'[^A-Za-z0-9_.-]', '_', series_key) + '.csv'


def _record_fetch(database_url: Optional[str], **columns):
    if not database_url:
        return
    if columns.get('endpoint'):
        columns['endpoint'] = _credential_filter._filter_message(columns['endpoint'])
    try:
        db = get_session(database_url)
        try:
            db.add(FetchLog(**columns))
            db.commit()
        except Exception:
            db.rollback()
            raise
        finally:
            db.close()
    except Exception as e:
        logger.warning(f"Could not write fetch log ({e})")


def fetch_remote(series_key: str, endpoint: Optional[str] = None, timeout: Optional[float] = None,
                 transport: Optional[Transport] = None, settings: Optional[Settings] = None,
                 cache_dir: Optional[str] = None, database_url: Optional[str] = None) -> SeriesRecord:
    """
    Download one series as CSV, validate it like a local file, then cache
    the payload under cache_dir and log the retrieval. Nothing is cached
    when the request or the parse fails.
    """
    settings = settings or load_settings()
    endpoint = (endpoint or settings.fetch_endpoint).rstrip('/')
    timeout = timeout if timeout is not None else settings.fetch_timeout
    cache_dir = cache_dir or settings.cache_dir
    if database_url is None:
        database_url = settings.resolved_database_url
    transport = transport or RequestsTransport()
    structured = get_unitroot_logger()

    url = f"{endpoint}/{series_key}"
    structured.log_data_event(series_key, 'fetch_start', {'url': url, 'timeout': timeout})

    try:
        response = transport.get(url, {'format': 'csvdata'}, timeout)
    except FetchError as e:
        _record_fetch(database_url, series_key=series_key, endpoint=url, ok=False, error=str(e)[:500])
        structured.log_error("fetch failed", e, entity=series_key)
        raise

    if not 200 <= response.status_code < 300:
        error = FetchError(f"HTTP {response.status_code} from {url}", status_code=response.status_code)
        _record_fetch(database_url, series_key=series_key, endpoint=url, status_code=response.status_code,
                      ok=False, error=str(error)[:500])
        structured.log_error("fetch failed", error, entity=series_key)
        raise error

    try:
        records = parse_csv_text(io.StringIO(response.text), CsvSchema(), SeriesSource.REMOTE_FETCH,
                                 default_id=series_key)
        matching = [r for r in records if r.id == series_key]
        if matching:
            record = matching[0]
        elif len(records) == 1:
            record = SeriesRecord(series_key, records[0].dates, records[0].values, SeriesSource.REMOTE_FETCH)
        else:
            raise DataFormatError(f"payload holds {len(records)} series, none named {series_key}",
                                  source=SeriesSource.REMOTE_FETCH.value)
    except DataFormatError as e:
        _record_fetch(database_url, series_key=series_key, endpoint=url, status_code=response.status_code,
                      ok=False, error=str(e)[:500])
        structured.log_error("fetched payload rejected", e, entity=series_key)
        raise

    cache_path = Path(cache_dir) / _cache_name(series_key)
    try:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        cache_path.write_text(response.text, encoding='utf-8')
    except OSError as e:
        logger.warning(f"Could not cache {series_key} to {cache_path}: {e}")
        cache_path = None

    _record_fetch(database_url, series_key=series_key, endpoint=url, status_code=response.status_code,
                  ok=True, n_obs=len(record.values), cache_path=str(cache_path) if cache_path else None)
    structured.log_data_event(series_key, 'fetch_done', {'n_obs': len(record.values), 'cache': cache_path})
    return record


# =============================================================================
# EMPIRICAL PIPELINE
# =============================================================================

@dataclass(frozen=True)
class EmpiricalRow:
    id: str
    T: int
    start: str
    end: str
    svd_star_log_bf: Optional[float] = None
    svd_star_prob: Optional[float] = None
    bic_log_bf: Optional[float] = None
    bic_prob: Optional[float] = None
    df_stat: Optional[float] = None
    df_p: Optional[float] = None
    pr_ge1: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


REPORT_COLUMNS = (
    ('id', 'id', None),
    ('T', 'T', None),
    ('SVD* logBF', 'svd_star_log_bf', 3),
    ('SVD* prob', 'svd_star_prob', 3),
    ('BIC logBF', 'bic_log_bf', 3),
    ('BIC prob', 'bic_prob', 3),
    ('DF stat', 'df_stat', 3),
    ('DF p', 'df_p', 3),
    ('Pr_{rho>=1}', 'pr_ge1', 3),
)


@dataclass
class EmpiricalReport:
    rows: List[EmpiricalRow]
    log_levels: bool = False
    alpha: float = 0.05
    prior_odds: float = 1.0

    @property
    def date_range(self) -> Tuple[str, str]:
        return min(r.start for r in self.rows), max(r.end for r in self.rows)

    @property
    def failed(self) -> List[EmpiricalRow]:
        return [r for r in self.rows if not r.ok]

    def _cells(self, row: EmpiricalRow) -> List[str]:
        cells = []
        for _, attr, digits in REPORT_COLUMNS:
            value = getattr(row, attr)
            if value is None:
                cells.append('NA')
            elif digits is None:
                cells.append(str(value))
            else:
                cells.append(f"{value:.{digits}f}")
        return cells

    def render(self, fmt: str = 'csv') -> str:
        fmt = fmt.lower()
        header = [name for name, _, _ in REPORT_COLUMNS]
        body = [self._cells(row) for row in self.rows]

        if fmt == 'csv':
            return '\n'.join([','.join(header)] + [','.join(cells) for cells in body]) + '\n'

        if fmt == 'markdown':
            lines = ['| ' + ' | '.join(header) + ' |',
                     '|' + '|'.join(':---' if i == 0 else '---:' for i in range(len(header))) + '|']
            lines += ['| ' + ' | '.join(cells) + ' |' for cells in body]
            for row in self.failed:
                lines.append(f"\n{row.id}: {row.error}")
            return '\n'.join(lines) + '\n'

        if fmt == 'json':
            start, end = self.date_range
            records = []
            for row, cells in zip(self.rows, body):
                record: Dict[str, Any] = {}
                for (name, attr, digits), text in zip(REPORT_COLUMNS, cells):
                    if text == 'NA':
                        record[name] = None
                    elif digits is None:
                        record[name] = getattr(row, attr)
                    else:
                        record[name] = float(text)
                if row.error:
                    record['error'] = row.error
                records.append(record)
            payload = {
                'start': start, 'end': end, 'log_levels': self.log_levels,
                'alpha': self.alpha, 'prior_odds': self.prior_odds, 'rows': records,
            }
            return json.dumps(payload, indent=2) + '\n'

        raise InvalidArgumentError(f"unknown report format '{fmt}'")


def _analyze(record: SeriesRecord, settings: Settings, store: NullTableStore) -> EmpiricalRow:
    T = len(record.values) - 1
    base = dict(id=record.id, T=T, start=record.dates[0], end=record.dates[-1])
    try:
        series = record.to_series(settings.log_levels)
        svd = svd_data_driven(series, alpha=settings.svd_alpha, prior_odds=settings.prior_odds).evidence
        bic = bic_test(series, prior_odds=settings.prior_odds).evidence
        table = store.get_or_build(T, settings.df_null_reps, settings.master_seed, settings.threads)
        df = df_test(series, table)
        pr = tail_prob_ge_one(series, PriorKind.JEFFREYS)
    except (UnitRootError, ArithmeticError, ValueError) as e:
        get_unitroot_logger().log_error("series analysis failed", e, entity=record.id, context='empirical')
        return EmpiricalRow(**base, error=str(e))

    return EmpiricalRow(
        **base,
        svd_star_log_bf=svd.log_bf_01, svd_star_prob=svd.posterior_prob,
        bic_log_bf=bic.log_bf_01, bic_prob=bic.posterior_prob,
        df_stat=df.stat, df_p=df.p_value, pr_ge1=pr,
    )


def run_empirical(records: Sequence[SeriesRecord], settings: Optional[Settings] = None,
                  null_store: Optional[NullTableStore] = None) -> EmpiricalReport:
    """
    Per-series SVD*, BIC, DF and Jeffreys Pr(rho >= 1). A failing series is
    reported with its error; the others are unaffected.
    """
    if not records:
        raise InvalidArgumentError("no series to analyze")
    settings = settings or load_settings()
    store = null_store or NullTableStore(settings.resolved_database_url)

    # null tables first, one per distinct T, so the parallel part never writes the cache
    for T in sorted({len(r.values) - 1 for r in records}):
        if T >= 3:
            store.get_or_build(T, settings.df_null_reps, settings.master_seed, settings.threads)

    workers = min(resolve_workers(settings.threads), len(records))
    if workers == 1:
        rows = [_analyze(r, settings, store) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _analyze(r, settings, store), records))

    report = EmpiricalReport(rows, settings.log_levels, settings.svd_alpha, settings.prior_odds)
    get_unitroot_logger().log_data_event('empirical', 'done', {
        'series': len(rows), 'failed': len(report.failed), 'log_levels': settings.log_levels,
    })
    return report
