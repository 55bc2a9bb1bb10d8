"""Regression design matrices, VIF diagnostics, effect sizes and descriptive tables."""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classify import Labels
from .corpus import MISINFO_TYPES, Corpus, windowed
from .influence import MetricRecord

BASELINE = "baseline"
CONDITIONAL = "conditional"
MODEL_KINDS = (BASELINE, CONDITIONAL)
DEPENDENT_VARIABLES = ("appeal", "scope")

REFERENCE_TYPE = "conspiracy"
TYPE_DUMMIES = tuple(t for t in MISINFO_TYPES if t != REFERENCE_TYPE)
DEFAULT_PERIOD_LABELS = ("Pre-Vaccine", "Vaccine Launch", "Post-Vaccine")


class DesignError(ValueError):
    pass


class CollinearityWarning(UserWarning):
    pass


def slug(label: str) -> str:
    return re.sub(r"[^0-9a-z]+", "_", label.lower()).strip("_")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = BASELINE
    dependent: str = "appeal"
    periods: tuple[str, ...] = DEFAULT_PERIOD_LABELS
    standardize_age: bool = False

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DesignError(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.dependent not in DEPENDENT_VARIABLES:
            raise DesignError(f"dependent variable must be one of {DEPENDENT_VARIABLES}, got {self.dependent!r}")
        if not self.periods:
            raise DesignError("at least one period is required")

    @property
    def reference_period(self) -> str:
        return self.periods[0]

    def column_names(self) -> list[str]:
        period_cols = [slug(p) for p in self.periods[1:]]
        cols = ["intercept", "bot", *period_cols]
        if self.kind == CONDITIONAL:
            cols += [f"bot_x_{c}" for c in period_cols]
        cols += [*TYPE_DUMMIES, "is_retweet", "account_age_days"]
        return cols


@dataclass
class DesignMatrix:
    column_names: list[str]
    values: np.ndarray
    response: np.ndarray
    row_keys: list[str]
    dropped: list[str] = field(default_factory=list)

    @property
    def shape(self):
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_names.index(name)]


def design_row(rec: MetricRecord, spec: ModelSpec) -> list[float]:
    bot = float(rec.is_bot)
    periods = [float(rec.period == p) for p in spec.periods[1:]]
    row = [1.0, bot, *periods]
    if spec.kind == CONDITIONAL:
        row += [bot * d for d in periods]
    row += [float(rec.misinfo_type == t) for t in TYPE_DUMMIES]
    row += [float(rec.is_retweet), float(rec.account_age_days)]
    return row


def build_design_matrix(records: Sequence[MetricRecord], spec: ModelSpec) -> DesignMatrix:
    """Design for the misinformation-only regression.

    Column order: intercept, bot, period dummies, (bot x period for the
    conditional model), misinfo-type dummies against ``conspiracy``,
    is_retweet, raw account age in days. Dummy or interaction columns with
    no observations are dropped with a warning.
    """
    if not records:
        raise DesignError("no records to build a design from")
    bad = [r.tweet_id for r in records if not r.is_misinfo]
    if bad:
        raise DesignError(f"design requires misinformation tweets only; {len(bad)} regular tweets given (e.g. {bad[0]})")
    unknown = {r.period for r in records} - set(spec.periods)
    if unknown:
        raise DesignError(f"records from periods outside the model: {sorted(unknown)}")
    names = spec.column_names()
    values = np.array([design_row(r, spec) for r in records], dtype=float)
    if spec.standardize_age:
        age = values[:, -1]
        sd = age.std()
        values[:, -1] = (age - age.mean()) / sd if sd > 0 else 0.0
    response = np.array([getattr(r, spec.dependent) for r in records], dtype=float)
    keep = [0] + [j for j in range(1, len(names)) if names[j] == "account_age_days" or np.any(values[:, j] != 0)]
    dropped = [names[j] for j in range(len(names)) if j not in keep]
    for name in dropped:
        warnings.warn(f"column {name!r} has no observations and was dropped", CollinearityWarning, stacklevel=2)
    return DesignMatrix(
        column_names=[names[j] for j in keep],
        values=values[:, keep],
        response=response,
        row_keys=[r.tweet_id for r in records],
        dropped=dropped,
    )


# --------------------------------------------------------------------------
# VIF


def vif(design: DesignMatrix | np.ndarray, column_names: Sequence[str] | None = None) -> dict[str, float]:
    """Variance inflation factors for every non-intercept column.

    Each column is regressed on all the others with an intercept; the VIF is
    ``SST / SSR`` of that auxiliary regression, i.e. ``1 / (1 - R^2)``.
    Perfectly collinear columns get ``inf`` and a :class:`CollinearityWarning`.
    """
    if isinstance(design, DesignMatrix):
        X, names = design.values, list(design.column_names)
    else:
        X = np.asarray(design, dtype=float)
        names = list(column_names) if column_names is not None else [f"x{j}" for j in range(X.shape[1])]
    predictors = [j for j, name in enumerate(names) if name != "intercept"]
    Xc = X[:, predictors] - X[:, predictors].mean(axis=0)
    G = Xc.T @ Xc
    out: dict[str, float] = {}
    for i, j in enumerate(predictors):
        others = [m for m in range(len(predictors)) if m != i]
        x = Xc[:, i]
        sst = float(x @ x)
        if others:
            coef = np.linalg.pinv(G[np.ix_(others, others)]) @ (Xc[:, others].T @ x)
            resid = x - Xc[:, others] @ coef
        else:
            resid = x
        ssr = float(resid @ resid)
        if ssr <= 1e-12 * sst:
            warnings.warn(f"column {names[j]!r} is perfectly collinear with the others", CollinearityWarning, stacklevel=2)
            out[names[j]] = math.inf
        else:
            out[names[j]] = sst / ssr
    return out


def effect_percent(coefficient: float) -> float:
    """Percent change in the mean implied by a log-link coefficient."""
    return math.expm1(coefficient) * 100.0


# --------------------------------------------------------------------------
# descriptive statistics

DESCRIPTIVE_HEADER = [
    "period",
    "tweets",
    "bot_misinfo",
    "bot_regular",
    "human_misinfo",
    "human_regular",
    "misinfo_share",
    "misinfo_period_share",
    "bot_accounts",
    "human_accounts",
    "bot_to_human_ratio",
    "bot_misinfo_share",
    "human_misinfo_share",
]


def _share(a: int, b: int) -> float:
    return a / b if b else 0.0


def descriptive_stats(corpus: Corpus, labels: Labels) -> list[dict]:
    """Per-period tweet and account tallies.

    Shares are fractions in [0, 1]; a zero denominator yields 0.
    ``misinfo_period_share`` is the period's fraction of all in-window
    misinformation tweets.
    """
    by_period = windowed(corpus)
    total_misinfo = sum(labels.is_misinfo(t.tweet_id) for ts in by_period.values() for t in ts)
    rows = []
    for label, tweets in by_period.items():
        c = {"bot_misinfo": 0, "bot_regular": 0, "human_misinfo": 0, "human_regular": 0}
        bot_accounts, human_accounts = set(), set()
        for t in tweets:
            is_bot = labels.bots.get(t.author_id, False)
            mis = labels.is_misinfo(t.tweet_id)
            c[("bot_" if is_bot else "human_") + ("misinfo" if mis else "regular")] += 1
            (bot_accounts if is_bot else human_accounts).add(t.author_id)
        misinfo = c["bot_misinfo"] + c["human_misinfo"]
        rows.append(
            {
                "period": label,
                "tweets": len(tweets),
                **c,
                "misinfo_share": _share(misinfo, len(tweets)),
                "misinfo_period_share": _share(misinfo, total_misinfo),
                "bot_accounts": len(bot_accounts),
                "human_accounts": len(human_accounts),
                "bot_to_human_ratio": _share(len(bot_accounts), len(human_accounts)),
                "bot_misinfo_share": _share(c["bot_misinfo"], c["bot_misinfo"] + c["bot_regular"]),
                "human_misinfo_share": _share(c["human_misinfo"], c["human_misinfo"] + c["human_regular"]),
            }
        )
    return rows
