"""Shared fixtures: packaged EURO data, hand-built team models, synthetic history."""

from __future__ import annotations

import datetime as dt
import math
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from euroforecast import data_io
from euroforecast.regression import RegressionCoefficients, TeamModel


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return Path(str(resources.files("euroforecast") / "data"))


@pytest.fixture(scope="session")
def euro2020(data_dir):
    """(ratings table, fixtures, allocation) for the packaged EURO 2020 data."""
    ratings = data_io.rating_table(data_io.load_ratings(data_dir / "euro2020_ratings.csv"))
    fixtures = data_io.load_fixtures(data_dir / "euro2020_fixtures.csv")
    allocation = data_io.load_allocation(data_dir / "euro2020_allocation.csv")
    return ratings, fixtures, allocation


def build_team_model(team: str, elo: float) -> TeamModel:
    """A plausible hand-parameterized model tied to the team's rating."""
    s = (elo - 1870.0) / 400.0
    beta = math.log(0.25)
    gamma = math.log(0.05 / 0.95)
    attack = RegressionCoefficients(
        alpha=(0.3 + 0.5 * s + 0.0009 * 1870.0, -0.0009, 0.15),
        beta=beta,
        gamma_log=gamma,
    )
    defense = RegressionCoefficients(
        alpha=(0.3 - 0.5 * s - 0.0009 * 1870.0, 0.0009, -0.1),
        beta=beta,
        gamma_log=gamma,
    )
    nested = RegressionCoefficients(
        alpha=(0.25 + 0.4 * s + 0.0009 * 1870.0, -0.0009, 0.12, -0.08),
        beta=beta,
        gamma_log=gamma,
    )
    return TeamModel(team=team, attack=attack, defense=defense, nested=nested)


@pytest.fixture(scope="session")
def euro_models(euro2020):
    ratings, _, _ = euro2020
    return {t: build_team_model(t, e) for t, e in ratings.items()}


FILLER_TEAMS = {
    "XXA": 1750.0,
    "XXB": 1720.0,
    "XXC": 1700.0,
    "XXD": 1680.0,
    "XXE": 1660.0,
    "XXF": 1640.0,
    "XXG": 1620.0,
    "XXH": 1600.0,
}


def _match_type_for(date: dt.date) -> str:
    if date.month in (6, 7):
        if date.year in (2014, 2018):
            return "WC"
        if date.year == 2016:
            return "CONT"
    if date.month in (3, 9, 10, 11):
        return "QUAL"
    return "FRIENDLY"


def generate_history(ratings: dict[str, float], seed: int = 11):
    """Synthetic international calendar from 2014 through spring 2021.

    Scores follow a simple rating-driven Poisson model; the point is a
    realistic volume and shape of data, not ZIGP ground truth.
    """
    rng = np.random.default_rng(seed)
    teams = sorted(ratings)
    matches = []
    date = dt.date(2014, 1, 15)
    while date < dt.date(2021, 6, 1):
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
                    match_type=_match_type_for(date),
                    venue_country=venue,
                )
            )
        date += dt.timedelta(days=14)
    return matches


@pytest.fixture(scope="session")
def demo_history(tmp_path_factory, euro2020):
    """Paths of a generated match CSV and matching ratings CSV."""
    ratings, _, _ = euro2020
    full = dict(ratings)
    full.update(FILLER_TEAMS)
    matches = generate_history(full)
    root = tmp_path_factory.mktemp("history")
    matches_path = root / "matches.csv"
    ratings_path = root / "ratings.csv"
    data_io.save_matches(matches_path, matches)
    with open(ratings_path, "w", newline="\n", encoding="utf-8") as f:
        f.write("team,elo\n")
        for t in sorted(full):
            f.write(f"{t},{full[t]}\n")
    return matches_path, ratings_path
