"""Regression weights for historical matches: recency times importance.

    w(m) = (1/2)^(D/H) * importance(match_type)

D is the age of the match in days relative to a fixed reference date,
H the half period (a match H days old counts half as much as one played
today).  Importance follows the FIFA-ranking match ratios.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

from .errors import ConfigError, ParameterError

if TYPE_CHECKING:
    from .data_io import MatchRecord

DEFAULT_HALF_PERIOD_DAYS = 1095  # 3 years
DEFAULT_IMPORTANCE = {"WC": 4.0, "CONT": 3.0, "QUAL": 2.5, "FRIENDLY": 1.0}


@dataclass(frozen=True)
class WeightConfig:
    reference_date: dt.date
    half_period_days: int = DEFAULT_HALF_PERIOD_DAYS
    importance_table: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_IMPORTANCE)
    )

    def __post_init__(self):
        if self.half_period_days <= 0:
            raise ConfigError(f"half_period_days must be positive, got {self.half_period_days}")
        for code, value in self.importance_table.items():
            if value <= 0:
                raise ConfigError(f"importance for {code!r} must be positive, got {value}")


def date_weight(match_date: dt.date, cfg: WeightConfig) -> float:
    """Recency weight (1/2)^(D/H); 1 for a match on the reference date."""
    days = (cfg.reference_date - match_date).days
    if days < 0:
        raise ParameterError(
            f"match date {match_date} is after reference date {cfg.reference_date}"
        )
    return 0.5 ** (days / cfg.half_period_days)


def importance_weight(match_type: str, cfg: WeightConfig) -> float:
    try:
        return float(cfg.importance_table[match_type])
    except KeyError:
        valid = ", ".join(sorted(cfg.importance_table))
        raise ConfigError(
            f"unknown match type {match_type!r}; valid codes: {valid}"
        ) from None


def match_weight(match: "MatchRecord", cfg: WeightConfig) -> float:
    """Combined regression weight of one historical match."""
    return date_weight(match.date, cfg) * importance_weight(match.match_type, cfg)
