"""Exact-score forecasts from a pair of fitted team models.

A match is forecast in two stages.  The stronger side (higher Elo;
ties broken by the lexicographically smaller team code) scores first:
its goal count follows a ZIGP whose parameters average the stronger
team's attack regression with the weaker team's defense regression,
each evaluated with its own location indicator.  The weaker side then
scores conditionally on the stronger side's goals through its nested
(underdog) regression.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .zigp import ZigpParams, pmf_values, sample

if TYPE_CHECKING:
    from .regression import TeamModel

DEFAULT_GRID_CAP = 15


def location_indicator(team: str, opponent: str, venue_country: str) -> float:
    """+1 when the team hosts, -1 when the opponent hosts, 0 otherwise."""
    if venue_country == team:
        return 1.0
    if venue_country == opponent:
        return -1.0
    return 0.0


def order_by_strength(
    team_a: str, elo_a: float, team_b: str, elo_b: float
) -> tuple[str, str, bool]:
    """Return (stronger, weaker, swapped); swapped means team_b is the stronger side.

    Equal ratings fall back to the lexicographic order of the team
    codes so the orientation never depends on argument order.
    """
    if elo_a > elo_b or (elo_a == elo_b and team_a < team_b):
        return team_a, team_b, False
    return team_b, team_a, True


def combined_params(
    attack_side: "TeamModel",
    defense_side: "TeamModel",
    elo_attack: float,
    elo_defense: float,
    venue_country: str,
    mu_factor: float = 1.0,
) -> ZigpParams:
    """ZIGP for goals of ``attack_side`` blending both teams' regressions.

    mu, phi and omega are each the arithmetic mean of the attacker's
    attack fit (covariates: defender Elo, attacker location) and the
    defender's defense fit (covariates: attacker Elo, defender
    location).
    """
    loc_att = location_indicator(attack_side.team, defense_side.team, venue_country)
    loc_def = location_indicator(defense_side.team, attack_side.team, venue_country)
    mu_att = attack_side.attack.predict_mu((1.0, elo_defense, loc_att))
    mu_def = defense_side.defense.predict_mu((1.0, elo_attack, loc_def))
    mu = 0.5 * (mu_att + mu_def) * mu_factor
    phi = 0.5 * (attack_side.attack.phi + defense_side.defense.phi)
    omega = 0.5 * (attack_side.attack.omega + defense_side.defense.omega)
    return ZigpParams(mu, phi, omega)


def conditional_params(
    weaker: "TeamModel",
    stronger_team: str,
    elo_stronger: float,
    venue_country: str,
    stronger_goals: int,
    mu_factor: float = 1.0,
) -> ZigpParams:
    """ZIGP for the weaker side's goals given the stronger side's tally."""
    loc = location_indicator(weaker.team, stronger_team, venue_country)
    mu = weaker.nested.predict_mu(
        (1.0, elo_stronger, loc, float(stronger_goals))
    )
    return ZigpParams(mu * mu_factor, weaker.nested.phi, weaker.nested.omega)


@dataclass(frozen=True)
class MatchForecast:
    """Joint score distribution; grid[i, j] = P(team_a scores i, team_b scores j)."""

    team_a: str
    team_b: str
    grid: np.ndarray
    cap: int
    stronger: str

    def outcome_probabilities(self) -> tuple[float, float, float]:
        """(P win team_a, P draw, P win team_b)."""
        lower = float(np.sum(np.tril(self.grid, -1)))
        diag = float(np.trace(self.grid))
        upper = float(np.sum(np.triu(self.grid, 1)))
        return lower, diag, upper

    def most_likely_score(self) -> tuple[int, int]:
        """Modal score; ties resolve to the first cell in row-major order."""
        idx = int(np.argmax(self.grid))
        return idx // (self.cap + 1), idx % (self.cap + 1)

    def expected_goals(self) -> tuple[float, float]:
        counts = np.arange(self.cap + 1, dtype=float)
        return (
            float(np.sum(self.grid.sum(axis=1) * counts)),
            float(np.sum(self.grid.sum(axis=0) * counts)),
        )

    def total_goals_over(self, line: float = 2.5) -> float:
        counts = np.arange(self.cap + 1)
        totals = counts[:, None] + counts[None, :]
        return float(np.sum(self.grid[totals > line]))


def score_grid(
    model_a: "TeamModel",
    model_b: "TeamModel",
    elo_a: float,
    elo_b: float,
    venue_country: str = "NEUTRAL",
    cap: int = DEFAULT_GRID_CAP,
    mu_factor: float = 1.0,
) -> MatchForecast:
    """Exact-score distribution on a (cap+1) x (cap+1) grid.

    Probability mass above the cap is removed by renormalizing the
    truncated grid to sum to one.
    """
    stronger, weaker, swapped = order_by_strength(
        model_a.team, elo_a, model_b.team, elo_b
    )
    strong_model, weak_model = (model_b, model_a) if swapped else (model_a, model_b)
    elo_strong, elo_weak = (elo_b, elo_a) if swapped else (elo_a, elo_b)

    strong_params = combined_params(
        strong_model, weak_model, elo_strong, elo_weak, venue_country, mu_factor
    )
    ks = np.arange(cap + 1)
    p_strong = pmf_values(strong_params, ks)

    grid = np.empty((cap + 1, cap + 1))
    for i in range(cap + 1):
        cond = conditional_params(
            weak_model, stronger, elo_strong, venue_country, i, mu_factor
        )
        grid[i] = p_strong[i] * pmf_values(cond, ks)
    grid /= grid.sum()

    if swapped:
        grid = grid.T
    return MatchForecast(
        team_a=model_a.team,
        team_b=model_b.team,
        grid=grid,
        cap=cap,
        stronger=stronger,
    )


def sample_match(
    model_a: "TeamModel",
    model_b: "TeamModel",
    elo_a: float,
    elo_b: float,
    rng: np.random.Generator,
    venue_country: str = "NEUTRAL",
    mu_factor: float = 1.0,
) -> tuple[int, int]:
    """Draw one exact score by the two-stage mechanism (no grid cap)."""
    stronger, weaker, swapped = order_by_strength(
        model_a.team, elo_a, model_b.team, elo_b
    )
    strong_model, weak_model = (model_b, model_a) if swapped else (model_a, model_b)
    elo_strong, elo_weak = (elo_b, elo_a) if swapped else (elo_a, elo_b)

    strong_params = combined_params(
        strong_model, weak_model, elo_strong, elo_weak, venue_country, mu_factor
    )
    goals_strong = int(sample(strong_params, rng))
    cond = conditional_params(
        weak_model, stronger, elo_strong, venue_country, goals_strong, mu_factor
    )
    goals_weak = int(sample(cond, rng))
    if swapped:
        return goals_weak, goals_strong
    return goals_strong, goals_weak
