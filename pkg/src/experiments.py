"""
===============================================================================
MONTE CARLO HARNESS
===============================================================================
Simulates zero-mean AR(1) samples over a (rho, T) grid, runs the requested
tests on every replication and reports cell averages: unit root posterior
probabilities (prior odds one), log Bayes factors B01, DF p-values and the
Jeffreys Pr(rho >= 1 | x). Bayes factor probabilities are reported as the
logistic of the cell's mean log B01.

Replication i of cell (rho_idx, T_idx) draws from
derive_rng(master_seed, rho_idx, T_idx, i), so any cell or replication can be
reproduced alone and results do not depend on the worker count.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ar1_core import derive_rng, simulate_ar1
from bic import bic_test
from config import resolve_workers
from dickey_fuller import NullTable, NullTableStore, df_pvalue, df_statistic
from errors import InvalidArgumentError, UnitRootError
from logger_config import get_unitroot_logger
from phillips_posterior import PriorKind, tail_prob_ge_one
from svd import svd_data_driven, svd_fixed

logger = logging.getLogger(__name__)

DEFAULT_RHOS = (0.2, 0.5, 0.8, 0.9, 0.99, 0.999, 1.0)
DEFAULT_TS = (50, 100, 200, 500, 1000, 5000)
# log Bayes factor tables use 2000 in place of 1000
LOG_BF_TS = (50, 100, 200, 500, 2000, 5000)
MAX_FAILURE_SHARE = 0.01
CHUNK_SIZE = 250


class Method(str, Enum):
    SVD = 'svd'
    SVD_STAR = 'svd-star'
    BIC = 'bic'
    DF = 'df'
    PR_GE1 = 'pr-ge1'

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, text: str) -> Tuple['Method', ...]:
        """Comma list such as 'svd,bic'; empty text selects nothing"""
        names = [item.strip().lower() for item in text.split(',') if item.strip()]
        try:
            chosen = {cls(name) for name in names}
        except ValueError as e:
            raise InvalidArgumentError(f"Unknown method in '{text}': {e}")
        return tuple(m for m in METHOD_ORDER if m in chosen)


_LABELS = {
    Method.SVD: 'SVD',
    Method.SVD_STAR: 'SVD*',
    Method.BIC: 'BIC',
    Method.DF: 'DF',
    Method.PR_GE1: 'Pr_{rho>=1}',
}
METHOD_ORDER = (Method.SVD, Method.SVD_STAR, Method.BIC, Method.DF, Method.PR_GE1)
LOG_BF_METHODS = (Method.SVD, Method.SVD_STAR, Method.BIC)


class Layout(str, Enum):
    PROBS = 'PROBS'
    LOG_BF = 'LOG_BF'


class TableFormat(str, Enum):
    CSV = 'csv'
    MARKDOWN = 'markdown'
    JSON = 'json'


def layout_Ts(layout: Layout) -> Tuple[int, ...]:
    """Sample sizes a layout reports by default"""
    return LOG_BF_TS if Layout(layout) == Layout.LOG_BF else DEFAULT_TS


def default_Ts(layouts: Sequence[Layout]) -> Tuple[int, ...]:
    """Every sample size the requested layouts need, ascending"""
    return tuple(sorted({T for layout in layouts for T in layout_Ts(layout)}))


@dataclass(frozen=True)
class McGrid:
    rhos: Tuple[float, ...] = DEFAULT_RHOS
    Ts: Tuple[int, ...] = DEFAULT_TS
    reps: int = 2000
    master_seed: int = 20240101
    methods: Tuple[Method, ...] = METHOD_ORDER
    pr_ge1_max_T: int = 200
    svd_a: float = -1.0
    svd_alpha: float = 0.05
    df_reps: int = 100000
    threads: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise InvalidArgumentError(f"reps must be >= 1, got {self.reps}")
        if not self.rhos or not all(math.isfinite(r) for r in self.rhos):
            raise InvalidArgumentError(f"rhos must be non-empty and finite, got {self.rhos}")
        if not self.Ts or any(int(T) != T or T < 3 for T in self.Ts):
            raise InvalidArgumentError(f"Ts must be integers >= 3, got {self.Ts}")
        if self.threads < 0:
            raise InvalidArgumentError(f"threads must be >= 0, got {self.threads}")
        object.__setattr__(self, 'rhos', tuple(float(r) for r in self.rhos))
        object.__setattr__(self, 'Ts', tuple(int(T) for T in self.Ts))
        object.__setattr__(self, 'methods', tuple(m for m in METHOD_ORDER if m in set(self.methods)))


@dataclass
class McCell:
    """
    Cell averages. SVD, SVD* and BIC probabilities are the logistic of the
    mean log B01 (prior odds one); DF and Pr(rho >= 1) are plain means.
    """

    rho: float
    T: int
    reps: int
    failures: Dict[Method, int] = field(default_factory=dict)
    prob_mean: Dict[Method, float] = field(default_factory=dict)
    prob_se: Dict[Method, float] = field(default_factory=dict)
    log_bf_mean: Dict[Method, float] = field(default_factory=dict)
    log_bf_se: Dict[Method, float] = field(default_factory=dict)
    rep_prob_mean: Dict[Method, float] = field(default_factory=dict)

    @property
    def failed(self) -> int:
        """Replications lost by the worst method"""
        return max(self.failures.values(), default=0)

    def method_ok(self, method: Method) -> bool:
        return self.failures.get(method, 0) <= MAX_FAILURE_SHARE * self.reps

    @property
    def ok(self) -> bool:
        return all(self.method_ok(m) for m in self.failures)

    @property
    def failing_methods(self) -> List[Method]:
        return [m for m in METHOD_ORDER if m in self.failures and not self.method_ok(m)]

    @property
    def df_p_mean(self) -> Optional[float]:
        return self.prob_mean.get(Method.DF)


# =============================================================================
# REPLICATIONS
# =============================================================================

_FAILURES = (UnitRootError, ArithmeticError, ValueError, np.linalg.LinAlgError)


def _evaluate(method: Method, series, svd_a: float, svd_alpha: float,
              df_table: Optional[NullTable]) -> Tuple[float, float]:
    """(probability, log B01) of one method; log B01 is NaN for DF and Pr(rho >= 1)"""
    if method == Method.SVD:
        ev = svd_fixed(series, a=svd_a).evidence
    elif method == Method.SVD_STAR:
        ev = svd_data_driven(series, alpha=svd_alpha).evidence
    elif method == Method.BIC:
        ev = bic_test(series).evidence
    elif method == Method.DF:
        return df_pvalue(df_statistic(series), df_table), math.nan
    else:
        return tail_prob_ge_one(series, PriorKind.JEFFREYS), math.nan
    return ev.posterior_prob, ev.log_bf_01


def _run_chunk(rho: float, T: int, rho_idx: int, T_idx: int, start: int, stop: int,
               master_seed: int, methods: Tuple[Method, ...], svd_a: float, svd_alpha: float,
               with_pr: bool, df_table: Optional[NullTable]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rows are replications start..stop-1; columns follow METHOD_ORDER.
    A method that fails leaves NaN in its own column only.
    """
    n = stop - start
    probs = np.full((n, len(METHOD_ORDER)), np.nan)
    log_bfs = np.full((n, len(METHOD_ORDER)), np.nan)
    active = [m for m in methods if m != Method.PR_GE1 or with_pr]

    for row, rep in enumerate(range(start, stop)):
        try:
            series = simulate_ar1(rho, T, 0.0, 1.0, seed=derive_rng(master_seed, rho_idx, T_idx, rep))
        except _FAILURES as e:
            logger.warning(f"simulation failed (rho={rho}, T={T}, rep={rep}): {e}")
            continue

        for method in active:
            try:
                prob, log_bf = _evaluate(method, series, svd_a, svd_alpha, df_table)
            except _FAILURES as e:
                logger.warning(f"{method.label} failed (rho={rho}, T={T}, rep={rep}): {e}")
                continue
            col = METHOD_ORDER.index(method)
            probs[row, col] = prob
            log_bfs[row, col] = log_bf

    return probs, log_bfs


def _summarize(values: np.ndarray) -> Tuple[float, float]:
    """Mean and standard error; numpy sums pairwise"""
    n = values.size
    if n == 0:
        return math.nan, math.nan
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _aggregate(rho: float, T: int, reps: int, methods: Sequence[Method], with_pr: bool,
               probs: np.ndarray, log_bfs: np.ndarray) -> McCell:
    cell = McCell(rho=rho, T=T, reps=reps)
    for method in methods:
        if method == Method.PR_GE1 and not with_pr:
            continue
        col = METHOD_ORDER.index(method)
        good = ~np.isnan(probs[:, col])
        cell.failures[method] = int(np.count_nonzero(~good))

        if method in LOG_BF_METHODS:
            mean, se = _summarize(log_bfs[good, col])
            cell.log_bf_mean[method], cell.log_bf_se[method] = mean, se
            p = float(expit(mean))
            cell.prob_mean[method] = p
            # delta method
            cell.prob_se[method] = p * (1.0 - p) * se
            cell.rep_prob_mean[method] = _summarize(probs[good, col])[0]
        else:
            cell.prob_mean[method], cell.prob_se[method] = _summarize(probs[good, col])
    return cell


def failure_message(cell: McCell) -> str:
    parts = [f"{m.label} {cell.failures[m]} of {cell.reps} replications failed" for m in cell.failing_methods]
    return f"cell rho={cell.rho:g} T={cell.T}: " + ", ".join(parts)


def run_grid(grid: McGrid, null_store: Optional[NullTableStore] = None) -> List[McCell]:
    """
    Run every (rho, T) cell; output is ordered by T, then rho. A method that
    fails in more than 1% of a cell's replications marks the cell not ok.
    """
    structured = get_unitroot_logger()
    store = null_store or NullTableStore()
    workers = resolve_workers(grid.threads)

    df_tables: Dict[int, NullTable] = {}
    if Method.DF in grid.methods:
        for T in grid.Ts:
            df_tables[T] = store.get_or_build(T, grid.df_reps, grid.master_seed, grid.threads)

    jobs = []
    for T_idx, T in enumerate(grid.Ts):
        for rho_idx, rho in enumerate(grid.rhos):
            with_pr = T <= grid.pr_ge1_max_T
            for start in range(0, grid.reps, CHUNK_SIZE):
                stop = min(start + CHUNK_SIZE, grid.reps)
                jobs.append((rho, T, rho_idx, T_idx, start, stop, grid.master_seed, grid.methods,
                             grid.svd_a, grid.svd_alpha, with_pr, df_tables.get(T)))

    structured.log_experiment('grid', 'start', {
        'cells': len(grid.Ts) * len(grid.rhos), 'reps': grid.reps,
        'seed': grid.master_seed, 'workers': workers,
    })

    if workers == 1:
        chunks = [_run_chunk(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, *zip(*jobs)))

    cells = []
    position = 0
    for T in grid.Ts:
        for rho in grid.rhos:
            with_pr = T <= grid.pr_ge1_max_T
            n_chunks = math.ceil(grid.reps / CHUNK_SIZE)
            parts = chunks[position:position + n_chunks]
            position += n_chunks
            probs = np.vstack([p for p, _ in parts])
            log_bfs = np.vstack([b for _, b in parts])

            cell = _aggregate(rho, T, grid.reps, grid.methods, with_pr, probs, log_bfs)
            cells.append(cell)

            entity = f"rho={rho:g},T={T}"
            if cell.ok:
                structured.log_experiment(entity, 'cell_done', {
                    'failed': cell.failed,
                    **{m.value: f"{v:.4f}" for m, v in cell.prob_mean.items()},
                })
            else:
                structured.log_error(failure_message(cell),
                                     entity=entity, context='monte carlo cell')

    return cells


# =============================================================================
# RENDERING
# =============================================================================

def _columns(cells: Sequence[McCell], layout: Layout) -> List[Method]:
    present = set()
    for cell in cells:
        source = cell.prob_mean if layout == Layout.PROBS else cell.log_bf_mean
        present.update(source)
    order = METHOD_ORDER if layout == Layout.PROBS else LOG_BF_METHODS
    return [m for m in order if m in present]


def table_rows(cells: Sequence[McCell], layout: Layout = Layout.PROBS) -> Tuple[List[str], List[List[str]]]:
    """Header and formatted rows shared by every output format"""
    if not cells:
        raise InvalidArgumentError("no cells to render")
    digits = 3 if layout == Layout.PROBS else 2
    columns = _columns(cells, layout)

    header = ['rho', 'T'] + [m.label for m in columns] + [f"{m.label} se" for m in columns] + ['reps', 'failed']
    rows = []
    for cell in cells:
        means = cell.prob_mean if layout == Layout.PROBS else cell.log_bf_mean
        ses = cell.prob_se if layout == Layout.PROBS else cell.log_bf_se

        def fmt(source, method, places):
            value = source.get(method)
            if value is None or not cell.method_ok(method) or math.isnan(value):
                return 'NA'
            return f"{value:.{places}f}"

        rows.append([f"{cell.rho:.3f}", str(cell.T)]
                    + [fmt(means, m, digits) for m in columns]
                    + [fmt(ses, m, digits + 1) for m in columns]
                    + [str(cell.reps), str(cell.failed)])
    return header, rows


def render_table(cells: Sequence[McCell], layout: Layout = Layout.PROBS,
                 fmt: TableFormat = TableFormat.CSV) -> str:
    header, rows = table_rows(cells, layout)
    fmt = TableFormat(fmt)

    if fmt == TableFormat.CSV:
        lines = [','.join(header)] + [','.join(row) for row in rows]
        return '\n'.join(lines) + '\n'

    if fmt == TableFormat.MARKDOWN:
        lines = ['| ' + ' | '.join(header) + ' |',
                 '|' + '|'.join('---:' for _ in header) + '|']
        lines += ['| ' + ' | '.join(row) + ' |' for row in rows]
        return '\n'.join(lines) + '\n'

    records = []
    for row in rows:
        record = {}
        for key, text in zip(header, row):
            if text == 'NA':
                record[key] = None
            elif key in ('T', 'reps', 'failed'):
                record[key] = int(text)
            else:
                record[key] = float(text)
        records.append(record)
    return json.dumps({'layout': Layout(layout).value, 'rows': records}, indent=2) + '\n'
