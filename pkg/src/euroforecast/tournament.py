"""Monte Carlo simulation of a 24-team EURO-format tournament.

Each run replays the full tournament: 36 group matches in schedule
order, group rankings with the full tiebreak chain, best-thirds
selection, the regulation allocation of third-placed teams onto the
round-of-16 bracket, and four knockout rounds with extra time and
shootouts.  Elo ratings update after every simulated match and feed
back into the score model, so early upsets propagate.

Runs are independent and deterministic: run ``i`` under master seed
``s`` always uses ``SeedSequence(s, spawn_key=(i,))``, which makes the
aggregate counts bit-identical for any worker count.
"""

from __future__ import annotations

import datetime as dt
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from . import elo
from .errors import ConfigError, DataError
from .forecast import sample_match
from .elo import DEFAULT_K_FACTORS

if TYPE_CHECKING:
    from .regression import TeamModel

STAGES = ("GROUP", "R16", "QF", "SF", "FINAL")
STAGE_COUNTS = {"GROUP": 36, "R16": 8, "QF": 4, "SF": 2, "FINAL": 1}
EXTRA_TIME_MU_FACTOR = 1.0 / 3.0

STAT_NAMES = (
    "group_first",
    "group_second",
    "third_qualified",
    "eliminated_group",
    "r16",
    "qf",
    "sf",
    "final",
    "champion",
)


@dataclass(frozen=True)
class Fixture:
    """One scheduled match; knockout slots are references, not teams.

    Slot syntax: a team code in the group stage; ``1A``/``2A`` for a
    group winner or runner-up; ``3ADEF`` for the best third drawn from
    the listed groups; ``W37`` for the winner of match 37.
    """

    match_id: int
    stage: str
    group: str
    date: dt.date | None
    venue_country: str
    slot_a: str
    slot_b: str
    match_type: str = "CONT"


@dataclass(frozen=True)
class TournamentResult:
    """Outcome of a single simulated tournament."""

    group_positions: dict[str, tuple[str, ...]]
    qualified_thirds: tuple[str, ...]
    r16_teams: tuple[str, ...]
    qf_teams: tuple[str, ...]
    sf_teams: tuple[str, ...]
    final_teams: tuple[str, ...]
    champion: str


@dataclass
class SimulationAggregate:
    """Integer stage counts per team over ``n_runs`` tournaments."""

    n_runs: int
    teams: tuple[str, ...]
    counts: dict[str, Counter] = field(default_factory=dict)

    def probability(self, stat: str, team: str) -> float:
        return self.counts[stat][team] / self.n_runs

    def merge(self, other: "SimulationAggregate") -> None:
        if other.teams != self.teams:
            raise ValueError("cannot merge aggregates over different team sets")
        self.n_runs += other.n_runs
        for stat in STAT_NAMES:
            self.counts[stat].update(other.counts[stat])


def _empty_aggregate(teams: Sequence[str]) -> SimulationAggregate:
    counts = {stat: Counter({t: 0 for t in teams}) for stat in STAT_NAMES}
    return SimulationAggregate(n_runs=0, teams=tuple(teams), counts=counts)


# ---------------------------------------------------------------------------
# fixture validation
# ---------------------------------------------------------------------------


def group_teams(fixtures: Sequence[Fixture]) -> dict[str, tuple[str, ...]]:
    """Teams per group, read off the group-stage fixtures."""
    teams: dict[str, set[str]] = {}
    for f in fixtures:
        if f.stage == "GROUP":
            teams.setdefault(f.group, set()).update((f.slot_a, f.slot_b))
    return {g: tuple(sorted(ts)) for g, ts in sorted(teams.items())}


def validate_fixtures(fixtures: Sequence[Fixture]) -> None:
    """Check the bracket is a complete, well-wired EURO structure."""
    ids = [f.match_id for f in fixtures]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate match ids in fixture list")
    by_stage: dict[str, list[Fixture]] = {s: [] for s in STAGES}
    for f in fixtures:
        if f.stage not in STAGE_COUNTS:
            raise DataError(f"match {f.match_id}: unknown stage {f.stage!r}")
        by_stage[f.stage].append(f)
    for stage, expected in STAGE_COUNTS.items():
        if len(by_stage[stage]) != expected:
            raise DataError(
                f"expected {expected} {stage} fixtures, got {len(by_stage[stage])}"
            )
    teams = group_teams(fixtures)
    if len(teams) != 6 or any(len(ts) != 4 for ts in teams.values()):
        raise DataError("group stage must cover 6 groups of 4 teams")
    for g, group_fixtures in _by_group(by_stage["GROUP"]).items():
        if len(group_fixtures) != 6:
            raise DataError(f"group {g} must have 6 fixtures")
    known = set(ids)
    for f in fixtures:
        if f.stage == "GROUP":
            continue
        for slot in (f.slot_a, f.slot_b):
            if slot.startswith("W"):
                ref = int(slot[1:])
                if ref not in known or ref >= f.match_id:
                    raise DataError(
                        f"match {f.match_id}: slot {slot} must reference an earlier match"
                    )
            elif slot[0] in "12":
                if slot[1:] not in teams:
                    raise DataError(f"match {f.match_id}: unknown group in slot {slot}")
            elif slot[0] == "3":
                if not set(slot[1:]) <= set(teams):
                    raise DataError(f"match {f.match_id}: unknown groups in slot {slot}")
            else:
                raise DataError(f"match {f.match_id}: malformed slot {slot!r}")


def _by_group(group_fixtures: Iterable[Fixture]) -> dict[str, list[Fixture]]:
    out: dict[str, list[Fixture]] = {}
    for f in group_fixtures:
        out.setdefault(f.group, []).append(f)
    return out


def validate_allocation(
    allocation: Mapping[str, Mapping[str, str]], groups: Sequence[str] = "ABCDEF"
) -> None:
    """The third-place table must cover all 4-subsets bijectively."""
    from itertools import combinations

    expected = {"".join(c) for c in combinations(sorted(groups), 4)}
    if set(allocation) != expected:
        raise DataError(
            f"allocation table must have one row per 4-group combination "
            f"({len(expected)} rows), got {sorted(allocation)}"
        )
    slots = None
    for combo, row in allocation.items():
        if slots is None:
            slots = tuple(row)
        elif tuple(row) != slots:
            raise DataError("allocation rows must assign the same slots")
        if sorted(row.values()) != sorted(combo):
            raise DataError(
                f"allocation row {combo} must send each qualified group to one slot"
            )


# ---------------------------------------------------------------------------
# group ranking
# ---------------------------------------------------------------------------


def _points(gf: int, ga: int) -> int:
    if gf > ga:
        return 3
    if gf == ga:
        return 1
    return 0


def _table(
    teams: Sequence[str], results: Sequence[tuple[str, str, int, int]]
) -> dict[str, tuple[int, int, int]]:
    """(points, goal difference, goals scored) per team."""
    pts = {t: 0 for t in teams}
    gf = {t: 0 for t in teams}
    ga = {t: 0 for t in teams}
    for a, b, x, y in results:
        if a in pts:
            pts[a] += _points(x, y)
            gf[a] += x
            ga[a] += y
        if b in pts:
            pts[b] += _points(y, x)
            gf[b] += y
            ga[b] += x
    return {t: (pts[t], gf[t] - ga[t], gf[t]) for t in teams}


def rank_group(
    teams: Sequence[str],
    results: Sequence[tuple[str, str, int, int]],
    live_elo: Mapping[str, float],
    rng: np.random.Generator,
) -> tuple[str, ...]:
    """Order a group best-first.

    Tiebreak chain: points, then head-to-head points / goal difference
    / goals among the teams level on points, then overall goal
    difference and goals, then current Elo, then a seeded lot.  Lot
    values are drawn once per ranking (in sorted team order) so the
    random stream does not depend on whether ties occur.
    """
    teams = sorted(teams)
    lots = {t: rng.random() for t in teams}
    overall = _table(teams, results)

    by_points: dict[int, list[str]] = {}
    for t in teams:
        by_points.setdefault(overall[t][0], []).append(t)
    h2h: dict[str, tuple[int, int, int]] = {}
    for tied in by_points.values():
        sub = [r for r in results if r[0] in tied and r[1] in tied]
        h2h.update(_table(tied, sub))

    def key(t: str):
        pts, gd, goals = overall[t]
        hp, hgd, hg = h2h[t]
        return (pts, hp, hgd, hg, gd, goals, live_elo[t], lots[t])

    return tuple(sorted(teams, key=key, reverse=True))


def select_best_thirds(
    thirds: Mapping[str, str],
    results: Sequence[tuple[str, str, int, int]],
    live_elo: Mapping[str, float],
    rng: np.random.Generator,
) -> tuple[str, ...]:
    """Top four third-placed teams; returns their group letters.

    Ranked by points, goal difference, goals scored, current Elo, then
    a seeded lot (drawn once, in group order).
    """
    groups = sorted(thirds)
    lots = {g: rng.random() for g in groups}
    table = _table(list(thirds.values()), results)

    def key(g: str):
        t = thirds[g]
        return (*table[t], live_elo[t], lots[g])

    ranked = sorted(groups, key=key, reverse=True)
    return tuple(sorted(ranked[:4]))


# ---------------------------------------------------------------------------
# knockout mechanics
# ---------------------------------------------------------------------------


def simulate_knockout_match(
    model_a: "TeamModel",
    model_b: "TeamModel",
    elo_a: float,
    elo_b: float,
    venue_country: str,
    rng: np.random.Generator,
) -> tuple[str, tuple[int, int], bool]:
    """Play one knockout tie; returns (winner, aggregate score, went_to_shootout).

    Drawn matches continue into extra time sampled from the same model
    with both means scaled by 1/3; a still-level tie goes to a shootout
    won by the higher-rated side with its Elo expected score.
    """
    ga, gb = sample_match(model_a, model_b, elo_a, elo_b, rng, venue_country)
    if ga == gb:
        ea, eb = sample_match(
            model_a, model_b, elo_a, elo_b, rng, venue_country,
            mu_factor=EXTRA_TIME_MU_FACTOR,
        )
        ga, gb = ga + ea, gb + eb
    shootout = ga == gb
    if shootout:
        if elo_a >= elo_b:
            p_a = elo.expected_score(elo_a, elo_b)
        else:
            p_a = 1.0 - elo.expected_score(elo_b, elo_a)
        winner = model_a.team if rng.random() < p_a else model_b.team
    else:
        winner = model_a.team if ga > gb else model_b.team
    return winner, (ga, gb), shootout


# ---------------------------------------------------------------------------
# one full tournament
# ---------------------------------------------------------------------------


def _resolve_slot(
    slot: str,
    positions: Mapping[str, tuple[str, ...]],
    third_assignment: Mapping[str, str],
    winners: Mapping[int, str],
    paired_slot: str,
) -> str:
    if slot.startswith("W"):
        return winners[int(slot[1:])]
    if slot[0] == "1":
        return positions[slot[1:]][0]
    if slot[0] == "2":
        return positions[slot[1:]][1]
    # best third: the allocation row keyed by the opposing winner slot
    group = third_assignment[paired_slot]
    if group not in slot[1:]:
        raise DataError(
            f"allocation sends group {group} third into slot {slot}, "
            "which is outside its candidate pool"
        )
    return positions[group][2]


def run_tournament(
    models: Mapping[str, "TeamModel"],
    ratings: Mapping[str, float],
    fixtures: Sequence[Fixture],
    allocation: Mapping[str, Mapping[str, str]],
    rng: np.random.Generator,
    k_factors: Mapping[str, float] | None = None,
) -> TournamentResult:
    """Simulate one complete tournament with in-run Elo updates."""
    k_table = dict(DEFAULT_K_FACTORS)
    if k_factors:
        k_table.update(k_factors)
    teams = group_teams(fixtures)
    for g, ts in teams.items():
        for t in ts:
            if t not in models:
                raise ConfigError(f"no fitted model for team {t} (group {g})")
            if t not in ratings:
                raise ConfigError(f"no Elo rating for team {t} (group {g})")

    live = {t: float(ratings[t]) for ts in teams.values() for t in ts}
    ordered = sorted(fixtures, key=lambda f: f.match_id)
    group_results: dict[str, list[tuple[str, str, int, int]]] = {
        g: [] for g in teams
    }

    def play(a: str, b: str, fixture: Fixture) -> tuple[int, int]:
        goals = sample_match(
            models[a], models[b], live[a], live[b], rng, fixture.venue_country
        )
        k = k_table.get(fixture.match_type)
        if k is None:
            raise ConfigError(f"no K factor for match type {fixture.match_type!r}")
        live[a], live[b] = elo.update_pair(live[a], live[b], *goals, k)
        return goals

    for f in (f for f in ordered if f.stage == "GROUP"):
        ga, gb = play(f.slot_a, f.slot_b, f)
        group_results[f.group].append((f.slot_a, f.slot_b, ga, gb))

    positions = {
        g: rank_group(teams[g], group_results[g], live, rng) for g in sorted(teams)
    }
    thirds = {g: positions[g][2] for g in sorted(teams)}
    all_results = [r for g in sorted(teams) for r in group_results[g]]
    qualified_groups = select_best_thirds(thirds, all_results, live, rng)
    combo = "".join(qualified_groups)
    if combo not in allocation:
        raise DataError(f"allocation table has no row for combination {combo}")
    third_assignment = allocation[combo]

    winners: dict[int, str] = {}
    reached: dict[str, list[str]] = {s: [] for s in ("R16", "QF", "SF", "FINAL")}
    champion = ""
    for f in (f for f in ordered if f.stage != "GROUP"):
        a = _resolve_slot(f.slot_a, positions, third_assignment, winners, f.slot_b)
        b = _resolve_slot(f.slot_b, positions, third_assignment, winners, f.slot_a)
        reached[f.stage].extend((a, b))
        winner, (ga, gb), _ = simulate_knockout_match(
            models[a], models[b], live[a], live[b], f.venue_country, rng
        )
        k = k_table.get(f.match_type)
        if k is None:
            raise ConfigError(f"no K factor for match type {f.match_type!r}")
        # aggregate incl. extra time; a tie decided on penalties is a
        # draw for rating purposes
        live[a], live[b] = elo.update_pair(live[a], live[b], ga, gb, k)
        winners[f.match_id] = winner
        if f.stage == "FINAL":
            champion = winner

    return TournamentResult(
        group_positions=positions,
        qualified_thirds=tuple(thirds[g] for g in qualified_groups),
        r16_teams=tuple(sorted(reached["R16"])),
        qf_teams=tuple(sorted(reached["QF"])),
        sf_teams=tuple(sorted(reached["SF"])),
        final_teams=tuple(sorted(reached["FINAL"])),
        champion=champion,
    )


# ---------------------------------------------------------------------------
# Monte Carlo aggregation
# ---------------------------------------------------------------------------


def _count_result(agg: SimulationAggregate, result: TournamentResult) -> None:
    qualified = set(result.r16_teams)
    for positions in result.group_positions.values():
        agg.counts["group_first"][positions[0]] += 1
        agg.counts["group_second"][positions[1]] += 1
        for t in positions:
            if t not in qualified:
                agg.counts["eliminated_group"][t] += 1
    for t in result.qualified_thirds:
        agg.counts["third_qualified"][t] += 1
    for stat, reached in (
        ("r16", result.r16_teams),
        ("qf", result.qf_teams),
        ("sf", result.sf_teams),
        ("final", result.final_teams),
    ):
        for t in reached:
            agg.counts[stat][t] += 1
    agg.counts["champion"][result.champion] += 1
    agg.n_runs += 1


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """The RNG for one run; independent of all other runs."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index,))
    )


def _run_chunk(
    models,
    ratings,
    fixtures,
    allocation,
    k_factors,
    master_seed: int,
    run_indices: Sequence[int],
) -> SimulationAggregate:
    agg = _empty_aggregate(
        tuple(sorted(t for ts in group_teams(fixtures).values() for t in ts))
    )
    for i in run_indices:
        result = run_tournament(
            models, ratings, fixtures, allocation, run_rng(master_seed, i), k_factors
        )
        _count_result(agg, result)
    return agg


def monte_carlo(
    models: Mapping[str, "TeamModel"],
    ratings: Mapping[str, float],
    fixtures: Sequence[Fixture],
    allocation: Mapping[str, Mapping[str, str]],
    n_runs: int,
    master_seed: int = 0,
    n_workers: int = 1,
    k_factors: Mapping[str, float] | None = None,
) -> SimulationAggregate:
    """Aggregate stage counts over ``n_runs`` independent tournaments.

    Results are identical for any ``n_workers``: every run draws from
    its own seed stream and the merged counts are plain integer sums.
    """
    if n_runs <= 0:
        raise ConfigError("n_runs must be positive")
    validate_fixtures(fixtures)
    validate_allocation(allocation)
    indices = list(range(n_runs))
    if n_workers <= 1:
        return _run_chunk(
            models, ratings, fixtures, allocation, k_factors, master_seed, indices
        )
    chunks = [indices[i::n_workers] for i in range(n_workers)]
    total = _empty_aggregate(
        tuple(sorted(t for ts in group_teams(fixtures).values() for t in ts))
    )
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        futures = [
            pool.submit(
                _run_chunk,
                dict(models),
                dict(ratings),
                list(fixtures),
                dict(allocation),
                dict(k_factors) if k_factors else None,
                master_seed,
                chunk,
            )
            for chunk in chunks
            if chunk
        ]
        for fut in futures:
            total.merge(fut.result())
    return total
