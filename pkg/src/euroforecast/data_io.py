"""File ingestion and export.

All tabular files are UTF-8, comma-separated, LF-terminated, with a
mandatory header row.  Lines starting with ``#`` are metadata comments
and are skipped on read; exports place their run manifest there.
Probabilities are written with 6 decimal places.  Model files are JSON
and round-trip losslessly.

Every malformed input raises :class:`DataError` with a ``file:line``
location; nothing is skipped silently.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .elo import DEFAULT_K_FACTORS, EloRating
from .errors import ConfigError, DataError, FileAccessError, ParameterError
from .regression import FitDiagnostics, RegressionCoefficients, TeamModel
from .tournament import (
    Fixture,
    SimulationAggregate,
    validate_allocation,
    validate_fixtures,
)
from .weights import DEFAULT_HALF_PERIOD_DAYS, DEFAULT_IMPORTANCE, WeightConfig

if TYPE_CHECKING:
    from .forecast import MatchForecast
    from .metrics import MetricsReport

MODEL_FORMAT_VERSION = 1
NEUTRAL = "NEUTRAL"


@dataclass(frozen=True)
class MatchRecord:
    """One historical match as listed by the source (team_a first)."""

    date: dt.date
    team_a: str
    team_b: str
    goals_a: int
    goals_b: int
    match_type: str
    venue_country: str = NEUTRAL
    elo_a_before: float | None = None
    elo_b_before: float | None = None

    def __post_init__(self):
        if self.team_a == self.team_b:
            raise ParameterError(f"a team cannot play itself: {self.team_a}")
        if self.goals_a < 0 or self.goals_b < 0:
            raise ParameterError(
                f"goals must be non-negative, got {self.goals_a}:{self.goals_b}"
            )


@dataclass(frozen=True)
class AppConfig:
    """Run configuration; JSON keys mirror the field names."""

    reference_date: dt.date
    half_period_days: int = DEFAULT_HALF_PERIOD_DAYS
    importance_table: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_IMPORTANCE)
    )
    k_factors: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_K_FACTORS)
    )
    min_nested_obs: int = 10
    grid_cap: int = 15

    def weight_config(self) -> WeightConfig:
        return WeightConfig(
            reference_date=self.reference_date,
            half_period_days=self.half_period_days,
            importance_table=dict(self.importance_table),
        )


# ---------------------------------------------------------------------------
# CSV primitives
# ---------------------------------------------------------------------------


def _read_rows(path: str | Path):
    """Yield (line_number, row) for data rows; comments/blanks skipped."""
    path = Path(path)
    if not path.exists():
        raise FileAccessError("file not found", path=str(path))
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for row in reader:
            if not row or (row[0].startswith("#") and len(row) >= 1):
                continue
            yield reader.line_num, [cell.strip() for cell in row]


def _parse_table(path: str | Path, required: Sequence[str], optional: Sequence[str] = ()):
    """Parse a headed CSV into dict rows, validating the column set."""
    rows = _read_rows(path)
    try:
        header_line, header = next(rows)
    except StopIteration:
        raise DataError("missing header row", path=str(path)) from None
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(
            f"missing required columns: {', '.join(missing)}",
            path=str(path),
            line=header_line,
        )
    unknown = [c for c in header if c not in required and c not in optional]
    if unknown:
        raise DataError(
            f"unknown columns: {', '.join(unknown)}", path=str(path), line=header_line
        )
    for line, row in rows:
        if len(row) != len(header):
            raise DataError(
                f"expected {len(header)} fields, got {len(row)}",
                path=str(path),
                line=line,
            )
        yield line, dict(zip(header, row))


def _parse_date(value: str, path: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise DataError(
            f"malformed date {value!r} (expected YYYY-MM-DD)", path=path, line=line
        ) from None


def _parse_int(value: str, name: str, path: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(
            f"malformed integer {value!r} for {name}", path=path, line=line
        ) from None


def _parse_float(value: str, name: str, path: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError(
            f"malformed number {value!r} for {name}", path=path, line=line
        ) from None


def _write_csv(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[str]],
    metadata: Mapping[str, object] | None = None,
) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="\n", encoding="utf-8") as f:
            for key, value in (metadata or {}).items():
                f.write(f"# {key}: {value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
    except OSError as exc:
        raise FileAccessError(f"cannot write file: {exc}", path=str(path)) from exc


def file_sha256(path: str | Path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise FileAccessError(f"cannot hash file: {exc}", path=str(path)) from exc


# ---------------------------------------------------------------------------
# loaders
# ---------------------------------------------------------------------------

_MATCH_COLUMNS = (
    "date",
    "team_a",
    "team_b",
    "goals_a",
    "goals_b",
    "match_type",
    "venue_country",
)
_MATCH_OPTIONAL = ("elo_a_before", "elo_b_before")


def load_matches(
    path: str | Path,
    window: tuple[dt.date | None, dt.date | None] | None = None,
) -> list[MatchRecord]:
    """Historical matches, filtered to ``window`` and sorted by date.

    Duplicate (date, team_a, team_b) rows are rejected.  A window that
    excludes every row triggers a warning, not an error.
    """
    start, end = window if window is not None else (None, None)
    spath = str(path)
    matches: list[MatchRecord] = []
    seen: dict[tuple, int] = {}
    any_rows = False
    for line, row in _parse_table(path, _MATCH_COLUMNS, _MATCH_OPTIONAL):
        any_rows = True
        date = _parse_date(row["date"], spath, line)
        key = (date, row["team_a"], row["team_b"])
        if key in seen:
            raise DataError(
                f"duplicate match {key[1]} vs {key[2]} on {date} "
                f"(first seen at line {seen[key]})",
                path=spath,
                line=line,
            )
        seen[key] = line
        if (start is not None and date < start) or (end is not None and date > end):
            continue
        elo_a = row.get("elo_a_before", "")
        elo_b = row.get("elo_b_before", "")
        try:
            record = MatchRecord(
                date=date,
                team_a=row["team_a"],
                team_b=row["team_b"],
                goals_a=_parse_int(row["goals_a"], "goals_a", spath, line),
                goals_b=_parse_int(row["goals_b"], "goals_b", spath, line),
                match_type=row["match_type"],
                venue_country=row["venue_country"],
                elo_a_before=_parse_float(elo_a, "elo_a_before", spath, line)
                if elo_a
                else None,
                elo_b_before=_parse_float(elo_b, "elo_b_before", spath, line)
                if elo_b
                else None,
            )
        except ParameterError as exc:
            raise DataError(str(exc), path=spath, line=line) from None
        matches.append(record)
    if any_rows and not matches:
        warnings.warn(f"no matches from {spath} fall inside the window", stacklevel=2)
    matches.sort(key=lambda m: (m.date, m.team_a, m.team_b))
    return matches


def save_matches(
    path: str | Path,
    matches: Sequence[MatchRecord],
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Write matches (with any Elo annotations) in the ingestible format."""

    def fmt(m: MatchRecord):
        return (
            m.date.isoformat(),
            m.team_a,
            m.team_b,
            str(m.goals_a),
            str(m.goals_b),
            m.match_type,
            m.venue_country,
            "" if m.elo_a_before is None else f"{m.elo_a_before:.6f}",
            "" if m.elo_b_before is None else f"{m.elo_b_before:.6f}",
        )

    _write_csv(
        path,
        _MATCH_COLUMNS + _MATCH_OPTIONAL,
        (fmt(m) for m in matches),
        metadata,
    )


def load_ratings(path: str | Path) -> list[EloRating]:
    """Seed Elo ratings; columns team, elo, optional as_of date."""
    spath = str(path)
    ratings = []
    seen = set()
    for line, row in _parse_table(path, ("team", "elo"), ("as_of",)):
        team = row["team"]
        if team in seen:
            raise DataError(f"duplicate rating for team {team!r}", path=spath, line=line)
        seen.add(team)
        as_of = (
            _parse_date(row["as_of"], spath, line) if row.get("as_of") else dt.date.min
        )
        ratings.append(
            EloRating(team=team, points=_parse_float(row["elo"], "elo", spath, line), as_of=as_of)
        )
    if not ratings:
        raise DataError("ratings file has no rows", path=spath)
    return ratings


def rating_table(ratings: Iterable[EloRating]) -> dict[str, float]:
    return {r.team: r.points for r in ratings}


def load_fixtures(path: str | Path, validate: bool = True) -> list[Fixture]:
    """Tournament fixtures; structural validation on by default."""
    spath = str(path)
    fixtures = []
    for line, row in _parse_table(
        path,
        ("match_id", "stage", "group", "date", "venue_country", "slot_a", "slot_b"),
        ("match_type",),
    ):
        fixtures.append(
            Fixture(
                match_id=_parse_int(row["match_id"], "match_id", spath, line),
                stage=row["stage"],
                group=row["group"],
                date=_parse_date(row["date"], spath, line) if row["date"] else None,
                venue_country=row["venue_country"],
                slot_a=row["slot_a"],
                slot_b=row["slot_b"],
                match_type=row.get("match_type") or "CONT",
            )
        )
    if not fixtures:
        raise DataError("fixture file has no rows", path=spath)
    fixtures.sort(key=lambda f: f.match_id)
    if validate:
        try:
            validate_fixtures(fixtures)
        except DataError as exc:
            raise DataError(str(exc), path=spath) from None
    return fixtures


def load_allocation(path: str | Path, validate: bool = True) -> dict[str, dict[str, str]]:
    """Best-thirds allocation: combination of qualified groups -> slot map.

    The header names the receiving winner slots (e.g. 1B,1C,1E,1F);
    each row sends one qualified group's third to each slot.
    """
    spath = str(path)
    rows = _read_rows(path)
    try:
        header_line, header = next(rows)
    except StopIteration:
        raise DataError("missing header row", path=spath) from None
    if not header or header[0] != "combination":
        raise DataError(
            "first column must be 'combination'", path=spath, line=header_line
        )
    slots = header[1:]
    table: dict[str, dict[str, str]] = {}
    for line, row in rows:
        if len(row) != len(header):
            raise DataError(
                f"expected {len(header)} fields, got {len(row)}", path=spath, line=line
            )
        combo = "".join(sorted(row[0]))
        if combo in table:
            raise DataError(f"duplicate combination {combo}", path=spath, line=line)
        table[combo] = dict(zip(slots, row[1:]))
    if validate:
        try:
            validate_allocation(table)
        except DataError as exc:
            raise DataError(str(exc), path=spath) from None
    return table


def load_realized_results(path: str | Path) -> dict[str, int]:
    """Realized tournament ranks (1..6 per team) for backtesting."""
    spath = str(path)
    ranks: dict[str, int] = {}
    for line, row in _parse_table(path, ("team", "rank"), ("stage",)):
        team = row["team"]
        if team in ranks:
            raise DataError(f"duplicate result for team {team!r}", path=spath, line=line)
        rank = _parse_int(row["rank"], "rank", spath, line)
        if not 1 <= rank <= 6:
            raise DataError(f"rank must be 1..6, got {rank}", path=spath, line=line)
        ranks[team] = rank
    if not ranks:
        raise DataError("results file has no rows", path=spath)
    if len(ranks) == 24:
        counts = [sum(1 for r in ranks.values() if r == i) for i in range(1, 7)]
        if counts != [1, 1, 2, 4, 8, 8]:
            raise DataError(
                f"rank counts {counts} do not match the 24-team bracket (1,1,2,4,8,8)",
                path=spath,
            )
    return ranks


def load_config(path: str | Path) -> AppConfig:
    """JSON run configuration; unknown keys are rejected."""
    spath = str(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise FileAccessError("file not found", path=spath) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spath}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{spath}: config must be a JSON object")
    known = {
        "reference_date",
        "half_period_days",
        "importance_table",
        "k_factors",
        "min_nested_obs",
        "grid_cap",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{spath}: unknown config keys: {sorted(unknown)}")
    if "reference_date" not in raw:
        raise ConfigError(f"{spath}: missing required key 'reference_date'")
    try:
        reference_date = dt.date.fromisoformat(raw["reference_date"])
    except (TypeError, ValueError):
        raise ConfigError(
            f"{spath}: reference_date must be an ISO date string"
        ) from None
    for key in ("importance_table", "k_factors"):
        if key in raw and not (
            isinstance(raw[key], dict)
            and all(isinstance(v, (int, float)) for v in raw[key].values())
        ):
            raise ConfigError(f"{spath}: {key} must map codes to numbers")
    for key in ("half_period_days", "min_nested_obs", "grid_cap"):
        if key in raw and not isinstance(raw[key], int):
            raise ConfigError(f"{spath}: {key} must be an integer")
    try:
        return AppConfig(
            reference_date=reference_date,
            half_period_days=raw.get("half_period_days", DEFAULT_HALF_PERIOD_DAYS),
            importance_table=raw.get("importance_table", dict(DEFAULT_IMPORTANCE)),
            k_factors=raw.get("k_factors", dict(DEFAULT_K_FACTORS)),
            min_nested_obs=raw.get("min_nested_obs", 10),
            grid_cap=raw.get("grid_cap", 15),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{spath}: {exc}") from None


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def _coeffs_to_json(c: RegressionCoefficients) -> dict:
    return {"alpha": list(c.alpha), "beta": c.beta, "gamma_log": c.gamma_log}


def _coeffs_from_json(obj: dict, where: str) -> RegressionCoefficients:
    try:
        return RegressionCoefficients(
            alpha=tuple(float(a) for a in obj["alpha"]),
            beta=float(obj["beta"]),
            gamma_log=float(obj["gamma_log"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed coefficients at {where}: {exc}") from None


def save_models(
    path: str | Path,
    models: Mapping[str, TeamModel],
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Write the fitted models as versioned JSON (lossless round-trip)."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "metadata": dict(metadata or {}),
        "teams": {},
    }
    for team in sorted(models):
        m = models[team]
        doc["teams"][team] = {
            "attack": _coeffs_to_json(m.attack),
            "defense": _coeffs_to_json(m.defense),
            "nested": _coeffs_to_json(m.nested),
            "nested_fallback": m.nested_fallback,
            "diagnostics": {
                kind: {
                    "statistic": d.statistic,
                    "df": d.df,
                    "p_value": d.p_value,
                    "n_obs": d.n_obs,
                }
                for kind, d in sorted(m.diagnostics.items())
            },
        }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise FileAccessError(f"cannot write file: {exc}", path=str(path)) from exc


def load_models(path: str | Path) -> tuple[dict[str, TeamModel], dict]:
    """Read a model file; returns (models, metadata)."""
    spath = str(path)
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise FileAccessError("file not found", path=spath) from None
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}", path=spath) from None
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(
            f"unsupported model format version {doc.get('format_version')!r}",
            path=spath,
        )
    models = {}
    for team, obj in doc.get("teams", {}).items():
        try:
            diagnostics = {
                kind: FitDiagnostics(
                    statistic=float(d["statistic"]),
                    df=int(d["df"]),
                    p_value=float(d["p_value"]),
                    n_obs=int(d["n_obs"]),
                )
                for kind, d in obj.get("diagnostics", {}).items()
            }
            models[team] = TeamModel(
                team=team,
                attack=_coeffs_from_json(obj["attack"], f"{team}.attack"),
                defense=_coeffs_from_json(obj["defense"], f"{team}.defense"),
                nested=_coeffs_from_json(obj["nested"], f"{team}.nested"),
                diagnostics=diagnostics,
                nested_fallback=bool(obj.get("nested_fallback", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model for team {team}: {exc}", path=spath) from None
    return models, doc.get("metadata", {})


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def _prob(x: float) -> str:
    return f"{x:.6f}"


def export_group_table(
    path: str | Path,
    agg: SimulationAggregate,
    groups: Mapping[str, Sequence[str]],
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Group-stage outcome probabilities, one row per team."""
    rows = []
    for g in sorted(groups):
        for team in groups[g]:
            rows.append(
                (
                    g,
                    team,
                    _prob(agg.probability("group_first", team)),
                    _prob(agg.probability("group_second", team)),
                    _prob(agg.probability("third_qualified", team)),
                    _prob(agg.probability("eliminated_group", team)),
                )
            )
    _write_csv(
        path,
        ("group", "team", "group_first", "group_second", "third_qualified", "eliminated"),
        rows,
        metadata,
    )


def export_stage_table(
    path: str | Path,
    agg: SimulationAggregate,
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Stage-reaching probabilities, champions first."""
    order = sorted(
        agg.teams, key=lambda t: (-agg.counts["champion"][t], t)
    )
    rows = [
        (
            team,
            _prob(agg.probability("champion", team)),
            _prob(agg.probability("final", team)),
            _prob(agg.probability("sf", team)),
            _prob(agg.probability("qf", team)),
            _prob(agg.probability("r16", team)),
        )
        for team in order
    ]
    _write_csv(
        path,
        ("team", "champion", "final", "semifinal", "quarterfinal", "last16"),
        rows,
        metadata,
    )


def _standard_error(p: float, n: int) -> float:
    return (p * (1.0 - p) / n) ** 0.5


def export_stage_standard_errors(
    path: str | Path,
    agg: SimulationAggregate,
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Monte Carlo standard errors matching the stage table's shape."""
    order = sorted(agg.teams, key=lambda t: (-agg.counts["champion"][t], t))
    stats = ("champion", "final", "sf", "qf", "r16")
    rows = [
        (team,)
        + tuple(
            _prob(_standard_error(agg.probability(s, team), agg.n_runs)) for s in stats
        )
        for team in order
    ]
    _write_csv(
        path,
        ("team", "champion", "final", "semifinal", "quarterfinal", "last16"),
        rows,
        metadata,
    )


def export_score_grid(
    path: str | Path,
    forecast: "MatchForecast",
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Joint score grid as CSV; row i, column j is P(a scores i, b scores j)."""
    columns = ("goals_a",) + tuple(f"b{j}" for j in range(forecast.cap + 1))
    rows = [
        (str(i),) + tuple(_prob(forecast.grid[i, j]) for j in range(forecast.cap + 1))
        for i in range(forecast.cap + 1)
    ]
    meta = dict(metadata or {})
    meta.setdefault("team_a", forecast.team_a)
    meta.setdefault("team_b", forecast.team_b)
    meta.setdefault("stronger", forecast.stronger)
    _write_csv(path, columns, rows, meta)


def export_score_grid_json(
    path: str | Path,
    forecast: "MatchForecast",
    metadata: Mapping[str, object] | None = None,
) -> None:
    doc = {
        "metadata": dict(metadata or {}),
        "team_a": forecast.team_a,
        "team_b": forecast.team_b,
        "stronger": forecast.stronger,
        "cap": forecast.cap,
        "grid": [[round(float(p), 10) for p in row] for row in forecast.grid],
    }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise FileAccessError(f"cannot write file: {exc}", path=str(path)) from exc


def export_gof_report(
    path: str | Path,
    models: Mapping[str, TeamModel],
    metadata: Mapping[str, object] | None = None,
) -> None:
    """Chi-square fit diagnostics per team and regression."""
    rows = []
    for team in sorted(models):
        m = models[team]
        for kind in ("attack", "defense", "nested"):
            d = m.diagnostics.get(kind)
            if d is None:
                rows.append((team, kind, "", "", "", "", "fallback"))
            else:
                rows.append(
                    (
                        team,
                        kind,
                        f"{d.statistic:.6f}",
                        str(d.df),
                        f"{d.p_value:.6f}",
                        str(d.n_obs),
                        "fallback" if (kind == "nested" and m.nested_fallback) else "",
                    )
                )
    _write_csv(
        path,
        ("team", "regression", "statistic", "df", "p_value", "n_obs", "note"),
        rows,
        metadata,
    )


def export_metrics_report(
    path: str | Path,
    report: "MetricsReport",
    metadata: Mapping[str, object] | None = None,
) -> None:
    meta = dict(metadata or {})
    meta["total_mld"] = f"{report.total_mld:.6f}"
    meta["total_brier"] = f"{report.total_brier:.6f}"
    meta["total_rps"] = f"{report.total_rps:.6f}"
    rows = [
        (
            r.team,
            str(r.realized_rank),
            str(r.modal_rank),
            f"{r.mld:.6f}",
            f"{r.brier:.6f}",
            f"{r.rps:.6f}",
        )
        for r in report.teams
    ]
    _write_csv(
        path,
        ("team", "realized_rank", "modal_rank", "mld", "brier", "rps"),
        rows,
        meta,
    )
