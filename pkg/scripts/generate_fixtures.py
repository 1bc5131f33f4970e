#!/usr/bin/env python3
"""
Regenerate the bundled fixtures in data/.

    rer_2010_2020.csv     nine synthetic monthly RER-like series, Jan 2010 - Nov 2020
    random_walk_T200.csv  one Gaussian random walk, x0 = 0 and 200 observations

Series are drawn with simulate_ar1 on streams derived from FIXTURE_SEED.
The persistence of each currency is chosen here, EUR being the least
persistent, so the empirical ordering the tests check holds by
construction; the script exits with an error when a draw breaks it.

Usage:
    python3 scripts/generate_fixtures.py            # rewrite data/*.csv
    python3 scripts/generate_fixtures.py --check    # compare with the bundled files
"""

import argparse
import os
import sys

import pandas as pd

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from ar1_core import derive_rng, simulate_ar1  # noqa: E402
from bic import bic_test  # noqa: E402
from data_io import read_csv, read_series_file  # noqa: E402
from svd import svd_data_driven  # noqa: E402

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')
FIXTURE_SEED = 2024

CURRENCIES = ('AUD', 'CAD', 'CHF', 'CNY', 'EUR', 'GBP', 'HKD', 'JPY', 'USD')
PHIS = (0.96, 0.99, 0.98, 1.0, 0.93, 0.97, 1.0, 0.98, 0.99)
MEANS = (100, 95, 110, 105, 96, 100, 102, 90, 100)
SIGMAS = (1.2, 1.0, 1.1, 0.8, 0.9, 1.1, 0.7, 1.4, 1.0)
STARTS = (105.83, 96.41, 108.27, 103.66, 120.14, 101.35, 100.92, 91.78, 98.57)
N_MONTHS = 131
WALK_T = 200


def rer_panel() -> pd.DataFrame:
    panel = pd.DataFrame({'date': pd.period_range('2010-01', periods=N_MONTHS, freq='M').strftime('%Y-%m')})
    for i, (cid, phi, mean, sigma, start) in enumerate(zip(CURRENCIES, PHIS, MEANS, SIGMAS, STARTS)):
        gap = simulate_ar1(phi, N_MONTHS - 1, x0=start - mean, sigma=sigma, seed=derive_rng(FIXTURE_SEED, i))
        panel[cid] = mean + pd.Series([gap.x0, *gap.values])
    return panel


def random_walk() -> pd.DataFrame:
    walk = simulate_ar1(1.0, WALK_T, x0=0.0, seed=derive_rng(FIXTURE_SEED, len(CURRENCIES)))
    return pd.DataFrame({'value': [walk.x0, *walk.values]})


def verify(rer_path: str, walk_path: str):
    records = {r.id: r for r in read_csv(rer_path)}
    assert len(records) == 9 and all(len(r.values) == N_MONTHS for r in records.values())

    bic_probs = {}
    for cid, record in records.items():
        series = record.to_series()
        bic_probs[cid] = bic_test(series).evidence.posterior_prob
        svd_prob = svd_data_driven(series).evidence.posterior_prob
        assert bic_probs[cid] >= svd_prob, f"{cid}: BIC {bic_probs[cid]:.3f} < SVD* {svd_prob:.3f}"
    assert min(bic_probs, key=bic_probs.get) == 'EUR', bic_probs

    walk = read_series_file(walk_path)
    assert walk.T == WALK_T
    assert bic_test(walk).evidence.posterior_prob > 0.5
    print("fixture verdicts hold: EUR has the smallest BIC probability, random walk favors the unit root")


def main():
    parser = argparse.ArgumentParser(description='Regenerate bundled fixtures')
    parser.add_argument('--check', action='store_true', help='compare with bundled files instead of writing')
    args = parser.parse_args()

    outputs = {
        os.path.join(DATA_DIR, 'rer_2010_2020.csv'): rer_panel().to_csv(index=False, float_format='%.4f',
                                                                        lineterminator='\n'),
        os.path.join(DATA_DIR, 'random_walk_T200.csv'): random_walk().to_csv(index=False, float_format='%.6f',
                                                                             lineterminator='\n'),
    }

    for path, text in outputs.items():
        if args.check:
            with open(path, 'r', encoding='utf-8') as handle:
                if handle.read() != text:
                    print(f"❌ {path} differs from the generator output")
                    sys.exit(1)
            print(f"✅ {path} matches")
        else:
            with open(path, 'w', encoding='utf-8', newline='\n') as handle:
                handle.write(text)
            print(f"✅ wrote {path}")

    verify(*outputs.keys())


if __name__ == '__main__':
    main()
