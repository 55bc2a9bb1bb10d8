"""Percentile ranks, the Appeal and Scope metrics, and group summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classify import Labels, account_age, label_bot
from .corpus import Corpus, windowed
from .netgraph import CommNetwork


class MetricsError(ValueError):
    pass


def percentile_rank(population: Iterable[float], value: float) -> float:
    """Mid-distribution percentile of ``value`` within ``population``.

    Fraction strictly below plus half the fraction equal, so a member of a
    singleton or all-equal population sits at 0.5.
    """
    pop = list(population)
    if not pop:
        raise MetricsError("percentile of an empty population")
    below = sum(1 for v in pop if v < value)
    equal = sum(1 for v in pop if v == value)
    if equal == 0:
        raise MetricsError(f"value {value!r} is not a member of the population")
    return (2 * below + equal) / (2 * len(pop))


def midrank_numerators(values) -> tuple[np.ndarray, int]:
    """Integer numerators ``2*below + equal`` and the shared denominator ``2n``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise MetricsError("percentile of an empty population")
    s = np.sort(v)
    lo = np.searchsorted(s, v, side="left")
    hi = np.searchsorted(s, v, side="right")
    return 2 * lo + (hi - lo), 2 * v.size


def percentile_ranks(values) -> np.ndarray:
    """Vectorised :func:`percentile_rank` of every member against the whole array."""
    num, den = midrank_numerators(values)
    return num / den


def appeal(retweet_count: int, degree_percentile: float) -> float:
    return retweet_count * (1 + degree_percentile)


def scope(total_degree: int, retweet_percentile: float) -> float:
    return total_degree * (1 + retweet_percentile)


@dataclass(frozen=True)
class MetricRecord:
    tweet_id: str
    period: str
    appeal: float
    scope: float
    retweet_count: int
    total_degree: int
    degree_percentile: float
    retweet_percentile: float
    is_bot: bool
    is_misinfo: bool
    misinfo_type: str | None
    is_retweet: bool
    account_age_days: int


def compute_metrics(
    corpus: Corpus, networks: Mapping[str, CommNetwork], labels: Labels
) -> list[MetricRecord]:
    """One record per in-period tweet, ordered by period then tweet id.

    Degree percentiles are taken over every node of the period network;
    retweet percentiles over every tweet of the period.
    """
    records: list[MetricRecord] = []
    for label, tweets in windowed(corpus).items():
        if not tweets:
            continue
        net = networks.get(label)
        if net is None:
            raise MetricsError(f"no network built for period {label!r}")
        nodes = list(net.degrees)
        deg_pct = dict(zip(nodes, percentile_ranks([net.degrees[u].total for u in nodes])))
        rt_pct = percentile_ranks([t.retweet_count for t in tweets])
        period_end = corpus.periods.get(label).end
        batch = []
        for t, rp in zip(tweets, rt_pct):
            if t.author_id not in net.degrees:
                raise MetricsError(f"author {t.author_id} of tweet {t.tweet_id} missing from {label!r} network")
            deg = net.degrees[t.author_id].total
            dp = float(deg_pct[t.author_id])
            rp = float(rp)
            lab = labels.misinfo.get(t.tweet_id)
            user = corpus.users[t.author_id]
            is_bot = labels.bots[t.author_id] if t.author_id in labels.bots else label_bot(user.bot_probability)
            batch.append(
                MetricRecord(
                    tweet_id=t.tweet_id,
                    period=label,
                    appeal=appeal(t.retweet_count, dp),
                    scope=scope(deg, rp),
                    retweet_count=t.retweet_count,
                    total_degree=deg,
                    degree_percentile=dp,
                    retweet_percentile=rp,
                    is_bot=is_bot,
                    is_misinfo=bool(lab and lab.is_misinfo),
                    misinfo_type=lab.misinfo_type if lab and lab.is_misinfo else None,
                    is_retweet=t.is_retweet,
                    account_age_days=account_age(user.created_at, period_end),
                )
            )
        batch.sort(key=lambda r: r.tweet_id)
        records.extend(batch)
    return records


# --------------------------------------------------------------------------
# group summaries

GROUPS = ("BotMisinfo", "HumanMisinfo", "BotInfo", "HumanInfo")
RATIOS = (
    ("HumanMisinfo", "BotMisinfo"),
    ("HumanInfo", "BotInfo"),
    ("BotMisinfo", "BotInfo"),
    ("HumanMisinfo", "HumanInfo"),
)
OVERALL = "all"


def group_of(rec: MetricRecord) -> str:
    return ("Bot" if rec.is_bot else "Human") + ("Misinfo" if rec.is_misinfo else "Info")


@dataclass(frozen=True)
class GroupRow:
    scope: str
    group: str
    count: int
    mean_appeal: float
    mean_scope: float

    @property
    def log_mean_appeal(self) -> float:
        return math.log1p(self.mean_appeal) if self.count else math.nan

    @property
    def log_mean_scope(self) -> float:
        return math.log1p(self.mean_scope) if self.count else math.nan


@dataclass(frozen=True)
class RatioRow:
    scope: str
    numerator: str
    denominator: str
    appeal_ratio: float
    scope_ratio: float
    log_appeal_ratio: float
    log_scope_ratio: float


@dataclass
class GroupSummary:
    rows: list[GroupRow]
    ratios: list[RatioRow]

    def row(self, scope: str, group: str) -> GroupRow:
        for r in self.rows:
            if r.scope == scope and r.group == group:
                return r
        raise KeyError((scope, group))

    def ratio(self, scope: str, numerator: str, denominator: str) -> RatioRow:
        for r in self.ratios:
            if (r.scope, r.numerator, r.denominator) == (scope, numerator, denominator):
                return r
        raise KeyError((scope, numerator, denominator))


def _div(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b) or b == 0:
        return math.nan
    return a / b


def summarize_groups(records: Sequence[MetricRecord], periods: Sequence[str] | None = None) -> GroupSummary:
    """Counts and mean Appeal/Scope for the four account-by-content groups.

    Produced overall and per period. Log columns use ``ln(1 + mean)``;
    empty groups get count 0 and NaN means. Ratios between groups are
    reported on both raw and log scales.
    """
    if periods is None:
        periods = list(dict.fromkeys(r.period for r in records))
    rows: list[GroupRow] = []
    ratios: list[RatioRow] = []
    for sc in [OVERALL, *periods]:
        subset = records if sc == OVERALL else [r for r in records if r.period == sc]
        by_group: dict[str, GroupRow] = {}
        for g in GROUPS:
            members = [r for r in subset if group_of(r) == g]
            if members:
                row = GroupRow(
                    sc,
                    g,
                    len(members),
                    math.fsum(r.appeal for r in members) / len(members),
                    math.fsum(r.scope for r in members) / len(members),
                )
            else:
                row = GroupRow(sc, g, 0, math.nan, math.nan)
            by_group[g] = row
            rows.append(row)
        for num, den in RATIOS:
            a, b = by_group[num], by_group[den]
            ratios.append(
                RatioRow(
                    sc,
                    num,
                    den,
                    _div(a.mean_appeal, b.mean_appeal),
                    _div(a.mean_scope, b.mean_scope),
                    _div(a.log_mean_appeal, b.log_mean_appeal),
                    _div(a.log_mean_scope, b.log_mean_scope),
                )
            )
    return GroupSummary(rows, ratios)


# --------------------------------------------------------------------------
# metrics.csv

METRICS_HEADER = [
    "tweet_id",
    "period",
    "appeal",
    "scope",
    "retweet_count",
    "total_degree",
    "degree_pct",
    "retweet_pct",
    "is_bot",
    "is_misinfo",
    "misinfo_type",
    "is_retweet",
    "account_age_days",
]


def fmt_decimal(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return format(x, ".10g")


def record_to_row(r: MetricRecord) -> list:
    return [
        r.tweet_id,
        r.period,
        fmt_decimal(r.appeal),
        fmt_decimal(r.scope),
        r.retweet_count,
        r.total_degree,
        fmt_decimal(r.degree_percentile),
        fmt_decimal(r.retweet_percentile),
        int(r.is_bot),
        int(r.is_misinfo),
        r.misinfo_type or "",
        int(r.is_retweet),
        r.account_age_days,
    ]


def record_from_row(row: Mapping[str, str]) -> MetricRecord:
    return MetricRecord(
        tweet_id=row["tweet_id"],
        period=row["period"],
        appeal=float(row["appeal"]),
        scope=float(row["scope"]),
        retweet_count=int(row["retweet_count"]),
        total_degree=int(row["total_degree"]),
        degree_percentile=float(row["degree_pct"]),
        retweet_percentile=float(row["retweet_pct"]),
        is_bot=row["is_bot"] == "1",
        is_misinfo=row["is_misinfo"] == "1",
        misinfo_type=row["misinfo_type"] or None,
        is_retweet=row["is_retweet"] == "1",
        account_age_days=int(row["account_age_days"]),
    )
