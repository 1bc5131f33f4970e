"""
===============================================================================
COMMAND LINE INTERFACE
===============================================================================
Subcommands:
    simulate          write a simulated AR(1) series as CSV
    test              run the tests on one series
    montecarlo        Monte Carlo grid of mean probabilities / log Bayes factors
    empirical         per-currency report on a panel CSV (or fetched series)
    build-null-table  simulate and cache a Dickey-Fuller null table

Every output starts with a reproducibility header (version, seed, config
hash). Exit codes: 0 success, 1 numeric failure, 2 usage or input error.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ar1_core import TimeSeries, fit_ar1, simulate_ar1
from bic import bic_test
from config import Settings, load_settings
from data_io import fetch_remote, parse_inline_series, read_csv, read_series_file, run_empirical
from dickey_fuller import NullTableStore, df_test, write_table_csv
from errors import InvalidArgumentError, UnitRootError
from experiments import (DEFAULT_RHOS, Layout, McGrid, Method, METHOD_ORDER, TableFormat, default_Ts,
                         failure_message, layout_Ts, render_table, run_grid)
from logger_config import get_unitroot_logger, init_logging
from phillips_posterior import PriorKind, tail_prob_ge_one
from svd import svd_data_driven, svd_fixed

logger = logging.getLogger(__name__)

VERSION = '1.0.0'
EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2
DEFAULT_DATA = Path(__file__).resolve().parent.parent / 'data' / 'rer_2010_2020.csv'


# =============================================================================
# SINGLE-SERIES REPORT
# =============================================================================

@dataclass
class MethodResult:
    method: str
    log_bf_01: Optional[float] = None
    prob: Optional[float] = None
    grade: Optional[str] = None
    stat: Optional[float] = None
    p_value: Optional[float] = None


@dataclass
class SeriesTestReport:
    T: int
    rho_hat: float
    s_rho: float
    rows: List[MethodResult] = field(default_factory=list)

    def render(self, fmt: str) -> str:
        header = ['method', 'log_bf_01', 'prob_h0', 'grade', 'stat', 'p_value']

        def cells(row):
            out = [row.method]
            for value in (row.log_bf_01, row.prob, row.grade, row.stat, row.p_value):
                if value is None:
                    out.append('NA')
                elif isinstance(value, str):
                    out.append(value)
                else:
                    out.append(f"{value:.6f}")
            return out

        body = [cells(r) for r in self.rows]
        if fmt == 'json':
            rows = []
            for cell_row in body:
                record = {}
                for key, text in zip(header, cell_row):
                    if text == 'NA':
                        record[key] = None
                    elif key in ('method', 'grade'):
                        record[key] = text
                    else:
                        record[key] = float(text)
                rows.append(record)
            return json.dumps({'T': self.T, 'rho_hat': round(self.rho_hat, 6),
                               's_rho': round(self.s_rho, 6), 'rows': rows}, indent=2) + '\n'
        if fmt == 'markdown':
            lines = [f"T={self.T} rho_hat={self.rho_hat:.6f} s_rho={self.s_rho:.6f}", '',
                     '| ' + ' | '.join(header) + ' |', '|' + '|'.join('---' for _ in header) + '|']
            lines += ['| ' + ' | '.join(c) + ' |' for c in body]
            return '\n'.join(lines) + '\n'
        return '\n'.join([','.join(header)] + [','.join(c) for c in body]) + '\n'


def run_tests(series: TimeSeries, methods: Sequence[Method], settings: Settings,
              store: Optional[NullTableStore] = None) -> SeriesTestReport:
    fit = fit_ar1(series)
    report = SeriesTestReport(T=fit.T, rho_hat=fit.rho_hat, s_rho=fit.s_rho)

    def evidence_row(label, evidence):
        return MethodResult(label, evidence.log_bf_01, evidence.posterior_prob, evidence.grade.value)

    for method in methods:
        if method == Method.SVD:
            report.rows.append(evidence_row('SVD', svd_fixed(series, settings.svd_a, settings.prior_odds).evidence))
        elif method == Method.SVD_STAR:
            result = svd_data_driven(series, settings.svd_alpha, settings.prior_odds)
            report.rows.append(evidence_row('SVD*', result.evidence))
        elif method == Method.BIC:
            report.rows.append(evidence_row('BIC', bic_test(series, settings.prior_odds).evidence))
        elif method == Method.DF:
            store = store or NullTableStore(settings.resolved_database_url)
            table = store.get_or_build(fit.T, settings.df_null_reps, settings.master_seed, settings.threads)
            result = df_test(series, table)
            report.rows.append(MethodResult('DF', stat=result.stat, p_value=result.p_value))
        elif method == Method.PR_GE1:
            report.rows.append(MethodResult('Pr_{rho>=1}', prob=tail_prob_ge_one(series, PriorKind.JEFFREYS)))

    get_unitroot_logger().log_inference(f"T={fit.T}", 'test', {
        r.method: f"{r.prob:.4f}" if r.prob is not None else f"p={r.p_value:.4f}" for r in report.rows
    })
    return report


# =============================================================================
# OUTPUT
# =============================================================================

def _header(settings: Settings, command: str, extra: Optional[Dict[str, object]] = None) -> Dict[str, object]:
    meta = {
        'tool': 'unitroot-bic',
        'version': VERSION,
        'command': command,
        'seed': settings.master_seed,
        'config_hash': settings.fingerprint()[:16],
    }
    meta.update(extra or {})
    return meta


def _emit(meta: Dict[str, object], body: str, fmt: str, out: Optional[str]):
    """Comment header for CSV/Markdown; JSON nests the body under 'result'"""
    if fmt == 'json':
        text = json.dumps({'meta': meta, 'result': json.loads(body)}, indent=2) + '\n'
    else:
        text = ''.join(f"# {key}: {value}\n" for key, value in meta.items()) + body

    if out:
        target = Path(out)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got '{text}'")
    return values


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'")


def _methods(text: str) -> List[Method]:
    try:
        methods = list(Method.parse(text))
    except InvalidArgumentError as e:
        raise argparse.ArgumentTypeError(str(e))
    if not methods:
        raise argparse.ArgumentTypeError(f"no methods selected in '{text}'")
    return methods


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_simulate(args, settings: Settings) -> int:
    series = simulate_ar1(args.rho, args.T, x0=args.x0, sigma=args.sigma, seed=settings.master_seed)
    lines = ['value', repr(series.x0)] + [repr(float(v)) for v in series.values]
    meta = _header(settings, 'simulate', {'rho': args.rho, 'T': args.T, 'x0': args.x0, 'sigma': args.sigma})
    _emit(meta, '\n'.join(lines) + '\n', 'csv', args.out)
    return EXIT_OK


def cmd_test(args, settings: Settings) -> int:
    if args.values:
        series = parse_inline_series(args.values)
    elif args.input:
        series = read_series_file(args.input, args.series)
    else:
        raise InvalidArgumentError("test needs --input PATH or --values x0,x1,...")

    report = run_tests(series, args.methods, settings)
    meta = _header(settings, 'test', {'prior_odds': settings.prior_odds, 'alpha': settings.svd_alpha,
                                      'a': settings.svd_a})
    _emit(meta, report.render(args.format), args.format, args.out)
    return EXIT_OK


def cmd_montecarlo(args, settings: Settings) -> int:
    layouts = [Layout.PROBS, Layout.LOG_BF] if args.layout == 'both' else [Layout(args.layout.upper())]
    grid = McGrid(
        rhos=tuple(args.rhos or DEFAULT_RHOS),
        Ts=tuple(args.Ts or default_Ts(layouts)),
        reps=args.reps if args.reps is not None else settings.mc_reps,
        master_seed=settings.master_seed,
        methods=tuple(args.methods),
        pr_ge1_max_T=settings.pr_ge1_max_T,
        svd_a=settings.svd_a,
        svd_alpha=settings.svd_alpha,
        df_reps=settings.df_null_reps,
        threads=settings.threads,
    )
    cells = run_grid(grid, NullTableStore(settings.resolved_database_url))
    meta = _header(settings, 'montecarlo', {'reps': grid.reps, 'alpha': grid.svd_alpha, 'a': grid.svd_a,
                                            'df_reps': grid.df_reps})

    bodies = {}
    for layout in layouts:
        shown = cells if args.Ts else [c for c in cells if c.T in layout_Ts(layout)]
        bodies[layout] = render_table(shown, layout, TableFormat(args.format))

    if len(layouts) > 1 and args.format == 'json' and not args.out:
        # one document on stdout, keyed by layout
        combined = json.dumps({layout.value: json.loads(body) for layout, body in bodies.items()})
        _emit({**meta, 'layout': 'BOTH'}, combined, args.format, None)
    else:
        for i, layout in enumerate(layouts):
            out = args.out
            if out and len(layouts) > 1:
                path = Path(out)
                out = str(path.with_name(f"{path.stem}_{layout.value.lower()}{path.suffix}"))
            _emit({**meta, 'layout': layout.value}, bodies[layout], args.format, out)
            if not out and i < len(layouts) - 1:
                sys.stdout.write('\n')

    failed = [c for c in cells if not c.ok]
    for cell in failed:
        print(failure_message(cell), file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_empirical(args, settings: Settings) -> int:
    if args.fetch:
        records = [fetch_remote(key.strip(), settings=settings) for key in args.fetch.split(',') if key.strip()]
    else:
        records = read_csv(args.data or DEFAULT_DATA)

    report = run_empirical(records, settings)
    start, end = report.date_range
    meta = _header(settings, 'empirical', {'start': start, 'end': end, 'log_levels': settings.log_levels,
                                           'alpha': settings.svd_alpha, 'prior_odds': settings.prior_odds})
    _emit(meta, report.render(args.format), args.format, args.out)

    for row in report.failed:
        print(f"{row.id}: {row.error}", file=sys.stderr)
    if len(report.failed) == len(report.rows):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_build_null_table(args, settings: Settings) -> int:
    store = NullTableStore(settings.resolved_database_url)
    rows = []
    for T in args.Ts:
        table = store.get_or_build(T, settings.df_null_reps, settings.master_seed, settings.threads)
        if args.out:
            target = Path(args.out)
            path = target / f"{table.table_id}.csv" if len(args.Ts) > 1 or target.suffix == '' else target
            write_table_csv(table, str(path))
        rows.append(f"{table.table_id},{T},{table.median:.6f}")
    meta = _header(settings, 'build-null-table', {'reps': settings.df_null_reps})
    _emit(meta, 'table_id,T,median\n' + '\n'.join(rows) + '\n', 'csv', None)
    return EXIT_OK


# =============================================================================
# PARSER
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML config file (default: config.yaml or $UNITROOT_CONFIG)')
    common.add_argument('--seed', type=int, help='master seed (default from config: 20240101)')
    common.add_argument('--threads', type=int, help='worker processes, 0 = one per CPU')
    common.add_argument('--alpha', type=float, help='SVD* tail constant (default 0.05)')
    common.add_argument('--prior-odds', type=float, dest='prior_odds', help='prior odds H0:H1 (default 1)')
    common.add_argument('--a', type=float, help='SVD fixed lower bound (default -1)')
    common.add_argument('--df-reps', type=int, dest='df_reps', help='replications per DF null table')
    common.add_argument('--format', choices=['csv', 'markdown', 'json'], default='csv')
    common.add_argument('--out', help='output file (default: stdout)')
    common.add_argument('-v', '--verbose', action='count', default=0)

    parser = argparse.ArgumentParser(prog='unitroot', description='Bayesian unit root testing toolkit')
    parser.add_argument('--version', action='version', version=f"unitroot-bic {VERSION}")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common], help='simulate an AR(1) series')
    p.add_argument('--rho', type=float, required=True)
    p.add_argument('--T', type=int, required=True)
    p.add_argument('--x0', type=float, default=0.0)
    p.add_argument('--sigma', type=float, default=1.0)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser('test', parents=[common], help='test one series')
    p.add_argument('--input', help="CSV with a 'value' column; first row is x0")
    p.add_argument('--series', help='column to read from --input')
    p.add_argument('--values', help='inline series x0,x1,...,xT')
    p.add_argument('--methods', type=_methods, default=list(METHOD_ORDER),
                   help='svd,svd-star,bic,df,pr-ge1 (default: all)')
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser('montecarlo', parents=[common], help='Monte Carlo grid')
    p.add_argument('--rhos', type=_float_list)
    p.add_argument('--Ts', type=_int_list, help='default 50,100,200,500,1000,5000; log_bf swaps 1000 for 2000')
    p.add_argument('--reps', type=int)
    p.add_argument('--methods', type=_methods, default=list(METHOD_ORDER))
    p.add_argument('--layout', choices=['probs', 'log_bf', 'both'], default='probs')
    p.set_defaults(handler=cmd_montecarlo)

    p = sub.add_parser('empirical', parents=[common], help='empirical report')
    p.add_argument('--data', help='panel CSV (long or wide); default: bundled RER fixture')
    p.add_argument('--fetch', help='comma separated remote series keys instead of --data')
    p.add_argument('--log-levels', action='store_true', dest='log_levels', help='analyze log levels')
    p.set_defaults(handler=cmd_empirical)

    p = sub.add_parser('build-null-table', parents=[common], help='build and cache DF null tables')
    p.add_argument('--Ts', type=_int_list, required=True)
    p.set_defaults(handler=cmd_build_null_table)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = load_settings(
            args.config,
            master_seed=args.seed,
            threads=args.threads,
            svd_alpha=args.alpha,
            prior_odds=args.prior_odds,
            svd_a=args.a,
            df_null_reps=args.df_reps,
            log_levels=True if getattr(args, 'log_levels', False) else None,
        )
        init_logging(settings.logs_dir, args.verbose)
        get_unitroot_logger().log_system_event('command', {'name': args.command, 'seed': settings.master_seed})
        return args.handler(args, settings)
    except UnitRootError as e:
        get_unitroot_logger().log_error(str(e), e, entity=args.command)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
