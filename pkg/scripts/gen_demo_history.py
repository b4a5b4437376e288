#!/usr/bin/env python3
"""Generate a synthetic international match history for demo runs.

The real model was built on a proprietary match database, so none is
shipped here.  This script fabricates a plausible substitute: a
biweekly calendar from 2014 through spring 2021 whose scores follow a
simple rating-driven Poisson process.  The output is only meant to
exercise the pipeline end to end; the fitted numbers carry no
footballing meaning.

Filler opponents (codes XXA..XXH) are added so the calendar can pair
everyone up each round; the extended rating file is written next to
the matches.

Usage:
    python3 scripts/gen_demo_history.py \
        --ratings src/euroforecast/data/euro2020_ratings.csv --out-dir demo
"""

from __future__ import annotations

import argparse
import datetime as dt
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from euroforecast import data_io  # noqa: E402

FILLERS = {
    "XXA": 1750.0,
    "XXB": 1720.0,
    "XXC": 1700.0,
    "XXD": 1680.0,
    "XXE": 1660.0,
    "XXF": 1640.0,
    "XXG": 1620.0,
    "XXH": 1600.0,
}


def match_type_for(date: dt.date) -> str:
    if date.month in (6, 7):
        if date.year in (2014, 2018):
            return "WC"
        if date.year == 2016:
            return "CONT"
    if date.month in (3, 9, 10, 11):
        return "QUAL"
    return "FRIENDLY"


def generate(ratings: dict[str, float], seed: int, start: dt.date, end: dt.date):
    rng = np.random.default_rng(seed)
    teams = sorted(ratings)
    matches = []
    date = start
    while date < end:
        order = list(rng.permutation(teams))
        for i in range(0, len(order) - 1, 2):
            a, b = order[i], order[i + 1]
            neutral = rng.random() < 0.3
            venue = "NEUTRAL" if neutral else a
            adv = 0.0 if neutral else 0.18
            diff = (ratings[a] - ratings[b]) / 600.0
            lam_a = float(np.clip(math.exp(0.2 + diff + adv), 0.15, 4.0))
            lam_b = float(np.clip(math.exp(0.2 - diff - adv), 0.15, 4.0))
            matches.append(
                data_io.MatchRecord(
                    date=date,
                    team_a=a,
                    team_b=b,
                    goals_a=int(rng.poisson(lam_a)),
                    goals_b=int(rng.poisson(lam_b)),
                    match_type=match_type_for(date),
                    venue_country=venue,
                )
            )
        date += dt.timedelta(days=14)
    return matches


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ratings", required=True, help="seed Elo ratings CSV")
    parser.add_argument("--out-dir", required=True, help="directory for matches.csv and ratings.csv")
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--start", default="2014-01-15", help="first match day (ISO date)")
    parser.add_argument("--end", default="2021-06-01", help="generate matches before this date")
    args = parser.parse_args(argv)

    ratings = data_io.rating_table(data_io.load_ratings(args.ratings))
    full = dict(ratings)
    full.update(FILLERS)

    matches = generate(
        full, args.seed, dt.date.fromisoformat(args.start), dt.date.fromisoformat(args.end)
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matches_path = out_dir / "matches.csv"
    ratings_path = out_dir / "ratings.csv"
    data_io.save_matches(matches_path, matches, {"tool": "gen_demo_history", "seed": args.seed})
    with open(ratings_path, "w", newline="\n", encoding="utf-8") as f:
        f.write("team,elo\n")
        for t in sorted(full):
            f.write(f"{t},{full[t]}\n")
    print(f"{len(matches)} matches -> {matches_path}")
    print(f"{len(full)} ratings -> {ratings_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
