"""Football Elo ratings.

Update rule after a match:

    elo_after = elo_before + K * G * (W - We)

where K is the tournament weight, G a goal-difference multiplier,
W the realized result (1 / 0.5 / 0) and We the win expectancy

    We = 1 / (10^(-D/400) + 1),   D = elo_before - elo_opponent.

No home-advantage offset is applied inside We; venue effects enter the
goal models as a regression covariate instead.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import DataError, ParameterError

if TYPE_CHECKING:
    from .data_io import MatchRecord

# eloratings.net convention; WC/CONT are the two values pinned by the
# rating formula's definition, the rest are configurable defaults.
DEFAULT_K_FACTORS = {"WC": 60.0, "CONT": 50.0, "QUAL": 40.0, "FRIENDLY": 20.0}


@dataclass(frozen=True)
class EloRating:
    team: str
    points: float
    as_of: dt.date


@dataclass(frozen=True)
class EloUpdateInputs:
    elo_before: float
    elo_opponent: float
    k_weight: float
    goals_for: int
    goals_against: int


def expected_score(elo_a: float, elo_b: float) -> float:
    """Win expectancy We of the first team from the Elo difference."""
    d = elo_a - elo_b
    return 1.0 / (10.0 ** (-d / 400.0) + 1.0)


def goal_multiplier(goal_diff: int) -> float:
    """Goal-difference multiplier G: 1, 1, 3/2, then (11+N)/8 for N >= 3."""
    if goal_diff < 0:
        raise ParameterError(f"goal difference must be >= 0, got {goal_diff}")
    if goal_diff <= 1:
        return 1.0
    if goal_diff == 2:
        return 1.5
    return (11.0 + goal_diff) / 8.0


def _result_w(goals_for: int, goals_against: int) -> float:
    if goals_for > goals_against:
        return 1.0
    if goals_for < goals_against:
        return 0.0
    return 0.5


def update(inputs: EloUpdateInputs) -> float:
    """New Elo of the team: elo_before + K * G * (W - We)."""
    w = _result_w(inputs.goals_for, inputs.goals_against)
    we = expected_score(inputs.elo_before, inputs.elo_opponent)
    g = goal_multiplier(abs(inputs.goals_for - inputs.goals_against))
    return inputs.elo_before + inputs.k_weight * g * (w - we)


def update_pair(
    elo_a: float, elo_b: float, goals_a: int, goals_b: int, k_weight: float
) -> tuple[float, float]:
    """Post-match ratings of both sides (zero-sum by construction)."""
    new_a = update(EloUpdateInputs(elo_a, elo_b, k_weight, goals_a, goals_b))
    new_b = update(EloUpdateInputs(elo_b, elo_a, k_weight, goals_b, goals_a))
    return new_a, new_b


def replay_history(
    seed_ratings: Iterable[EloRating],
    matches: list["MatchRecord"],
    k_factors: Mapping[str, float] | None = None,
) -> tuple[list["MatchRecord"], dict[str, float]]:
    """Annotate every match with both teams' Elo immediately before it.

    ``matches`` must be sorted ascending by date and every team must
    appear in the seed ratings.  Returns the annotated copies plus the
    final rating table after all updates.
    """
    if k_factors is None:
        k_factors = DEFAULT_K_FACTORS
    table = {r.team: float(r.points) for r in seed_ratings}

    annotated = []
    prev_date = None
    for i, m in enumerate(matches):
        if prev_date is not None and m.date < prev_date:
            raise DataError(
                f"matches not sorted by date: row {i} ({m.date}) after {prev_date}"
            )
        prev_date = m.date
        for team in (m.team_a, m.team_b):
            if team not in table:
                raise DataError(f"no seed rating for team {team!r}")
        if m.match_type not in k_factors:
            raise DataError(
                f"unknown match type {m.match_type!r}; configure a K factor for it"
            )
        elo_a, elo_b = table[m.team_a], table[m.team_b]
        annotated.append(replace(m, elo_a_before=elo_a, elo_b_before=elo_b))
        k = float(k_factors[m.match_type])
        table[m.team_a], table[m.team_b] = update_pair(
            elo_a, elo_b, m.goals_a, m.goals_b, k
        )
    return annotated, table
