"""Seeded synthetic corpora with planted Tweedie effects.

Reproducibility rule: every random draw comes from a PCG64 generator whose
seed sequence is ``SeedSequence(seed, spawn_key=(stream, index))``.
Stream 0 is per user, 1 per tweet (attributes and response), 2 the
reference set, 3 per tweet (interaction targets). Output therefore does not
depend on generation order or on how work is split across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, time, timedelta, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from .classify import Labels, ReferenceTweet, dump_references
from .corpus import (
    DEFAULT_PERIODS,
    MISINFO_TYPES,
    Corpus,
    MisinfoLabel,
    PeriodConfig,
    Tweet,
    UserProfile,
    dump_tweets,
    dump_users,
)
from .design import CONDITIONAL, MODEL_KINDS, ModelSpec

USER_STREAM, TWEET_STREAM, REFERENCE_STREAM, TARGET_STREAM = range(4)

DEFAULT_COEFFICIENTS = {
    "intercept": 1.5,
    "bot": -2.42,
    "vaccine_launch": 0.067,
    "post_vaccine": 0.0438,
    "fake_cure": 0.1,
    "fake_treatment": -0.1,
    "false_fact_or_prevention": 0.05,
    "false_public_health_response": -0.05,
    "is_retweet": 0.2,
    "account_age_days": 1e-4,
}


class SynthError(ValueError):
    pass


def stream_rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, index))))


def sample_tweedie(mu, p: float, phi: float, rng: np.random.Generator):
    """Exact compound Poisson-Gamma draw(s) with mean ``mu`` and variance ``phi * mu**p``.

    ``N ~ Poisson(mu**(2-p) / ((2-p) phi))`` gamma jumps of shape
    ``(2-p)/(p-1)`` and scale ``phi (p-1) mu**(p-1)``; the sum of ``N``
    such jumps is drawn as one Gamma with shape ``N * (2-p)/(p-1)``.
    Returns exactly 0 when ``N == 0``.
    """
    if not 1.0 < p < 2.0:
        raise SynthError(f"power must lie in (1, 2), got {p}")
    if not phi > 0:
        raise SynthError(f"dispersion must be positive, got {phi}")
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(~(mu_arr > 0)) or np.any(~np.isfinite(mu_arr)):
        raise SynthError("mean must be positive and finite")
    lam = mu_arr ** (2.0 - p) / ((2.0 - p) * phi)
    shape = (2.0 - p) / (p - 1.0)
    scale = phi * (p - 1.0) * mu_arr ** (p - 1.0)
    n = rng.poisson(lam)
    pos = n > 0
    out = np.zeros_like(mu_arr, dtype=float)
    if mu_arr.ndim == 0:
        return float(rng.gamma(n * shape, scale)) if pos else 0.0
    out[pos] = rng.gamma(n[pos] * shape, scale[pos])
    return out


@dataclass
class SynthConfig:
    seed: int = 20201201
    n_users: int = 600
    n_tweets: int = 5000
    bot_fraction: float = 0.25
    misinfo_fraction: float = 0.6
    retweet_fraction: float = 0.4
    mention_rate: float = 1.0
    bot_interaction_effect: float = -1.5
    coefficients: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_COEFFICIENTS))
    model: str = "baseline"
    dispersion: float = 1.0
    power: float = 1.5
    period_mix: tuple[float, ...] = (0.267, 0.411, 0.322)
    periods: PeriodConfig = DEFAULT_PERIODS
    label_mode: str = "embedding"
    embedding_dim: int = 16
    refs_per_type: int = 2

    def model_spec(self) -> ModelSpec:
        return ModelSpec(kind=self.model, periods=tuple(self.periods.labels))

    def validate(self):
        if self.model not in MODEL_KINDS:
            raise SynthError(f"model must be one of {MODEL_KINDS}")
        if len(self.period_mix) != len(self.periods):
            raise SynthError("period_mix needs one proportion per period")
        if any(w < 0 for w in self.period_mix) or not math.isclose(sum(self.period_mix), 1.0, abs_tol=1e-9):
            raise SynthError(f"period_mix must be non-negative and sum to 1, got {self.period_mix}")
        for name, val in (("bot_fraction", self.bot_fraction), ("misinfo_fraction", self.misinfo_fraction),
                          ("retweet_fraction", self.retweet_fraction)):
            if not 0.0 <= val <= 1.0:
                raise SynthError(f"{name} must lie in [0, 1]")
        if self.n_users < 1:
            raise SynthError("n_users must be positive")
        if not 1.0 < self.power < 2.0 or not self.dispersion > 0:
            raise SynthError("need 1 < power < 2 and dispersion > 0")
        names = self.model_spec().column_names()
        unknown = set(self.coefficients) - set(names)
        if unknown:
            raise SynthError(f"coefficients for unknown design columns: {sorted(unknown)}")
        if self.n_tweets < 50 * len(names):
            raise SynthError(f"n_tweets must be at least {50 * len(names)} for {len(names)} design columns")
        type_effects = [self.coefficients.get(t, 0.0) for t in MISINFO_TYPES]
        if self.misinfo_fraction == 0 and any(type_effects):
            raise SynthError("misinformation-type effects planted but misinfo_fraction is 0")
        if self.label_mode not in ("embedding", "precomputed"):
            raise SynthError("label_mode must be 'embedding' or 'precomputed'")
        if self.label_mode == "embedding" and self.embedding_dim <= len(MISINFO_TYPES) * self.refs_per_type:
            raise SynthError("embedding_dim must exceed the number of reference tweets")

    def coefficient_vector(self) -> np.ndarray:
        return np.array([self.coefficients.get(n, 0.0) for n in self.model_spec().column_names()])


@dataclass
class SynthResult:
    corpus: Corpus
    references: list[ReferenceTweet]
    labels: Labels
    truth: dict


def _references(cfg: SynthConfig) -> list[ReferenceTweet]:
    rng = stream_rng(cfg.seed, REFERENCE_STREAM)
    refs = []
    for t in MISINFO_TYPES:
        for k in range(cfg.refs_per_type):
            vec = np.round(rng.normal(size=cfg.embedding_dim), 6)
            refs.append(ReferenceTweet(f"ref_{t}_{k}", t, tuple(float(v) for v in vec)))
    return refs


def generate_corpus(cfg: SynthConfig) -> SynthResult:
    """Build users, tweets, references, true labels and planted responses.

    Each tweet's response is drawn from the Tweedie law with
    ``mu = exp(design_row @ coefficients)``; its retweet count is that
    draw rounded to an integer. Bots are less likely to mention others and
    to be mentioned or retweeted (``bot_interaction_effect`` on the log
    scale), so their network degree is lower as well.
    """
    cfg.validate()
    spec = cfg.model_spec()
    names = spec.column_names()
    beta = cfg.coefficient_vector()
    periods = list(cfg.periods)
    first_start = min(p.start for p in periods)

    users: dict[str, UserProfile] = {}
    bots: dict[str, bool] = {}
    for j in range(cfg.n_users):
        rng = stream_rng(cfg.seed, USER_STREAM, j)
        uid = f"u{j:05d}"
        is_bot = bool(rng.random() < cfg.bot_fraction)
        u = rng.random()
        prob = round(0.7001 + 0.2999 * u, 4) if is_bot else round(0.70 * u, 4)
        created = first_start - timedelta(days=int(rng.integers(30, 4000)))
        users[uid] = UserProfile(uid, created, prob)
        bots[uid] = is_bot
    user_ids = list(users)

    refs = _references(cfg) if cfg.label_mode == "embedding" else []
    if refs:
        R = np.array([r.embedding for r in refs])
        q, _ = np.linalg.qr(R.T)  # orthonormal basis of the reference span
    mix = np.array(cfg.period_mix)
    mix = mix / mix.sum()

    drafts = []
    dv: dict[str, float] = {}
    for i in range(cfg.n_tweets):
        rng = stream_rng(cfg.seed, TWEET_STREAM, i)
        tid = f"t{i:07d}"
        author = user_ids[int(rng.integers(cfg.n_users))]
        pidx = int(rng.choice(len(periods), p=mix))
        period = periods[pidx]
        ndays = (period.end - period.start).days + 1
        ts = datetime.combine(period.start, time(0), tzinfo=timezone.utc) + timedelta(
            seconds=int(rng.integers(ndays * 86400))
        )
        is_retweet = bool(rng.random() < cfg.retweet_fraction)
        is_misinfo = bool(rng.random() < cfg.misinfo_fraction)
        mtype = MISINFO_TYPES[int(rng.integers(len(MISINFO_TYPES)))] if is_misinfo else None

        embedding = None
        label = None
        if refs:
            if is_misinfo:
                k = int(rng.integers(cfg.refs_per_type))
                src = next(r for r in refs if r.misinfo_type == mtype and r.reference_id.endswith(f"_{k}"))
                vec = np.asarray(src.embedding) + rng.normal(scale=0.05, size=cfg.embedding_dim)
            else:
                vec = rng.normal(size=cfg.embedding_dim)
                vec = vec - q @ (q.T @ vec)
            embedding = tuple(float(v) for v in np.round(vec, 6))
        else:
            label = MisinfoLabel(True, mtype) if is_misinfo else MisinfoLabel(False)

        age = (period.end - users[author].created_at).days
        bot = float(bots[author])
        pd = [float(pidx == m) for m in range(1, len(periods))]
        row = [1.0, bot, *pd]
        if cfg.model == CONDITIONAL:
            row += [bot * d for d in pd]
        row += [float(mtype == t) for t in MISINFO_TYPES if t != "conspiracy"]
        row += [float(is_retweet), float(age)]
        mu = math.exp(float(np.dot(row, beta)))
        y = sample_tweedie(mu, cfg.power, cfg.dispersion, rng)
        n_mentions = int(rng.poisson(cfg.mention_rate * math.exp(cfg.bot_interaction_effect * bot)))
        dv[tid] = y
        drafts.append((tid, author, ts, period.label, is_retweet, n_mentions, int(round(y)), embedding, label, mtype))

    authors_by_period: dict[str, list[str]] = {p.label: [] for p in periods}
    for d in drafts:
        authors_by_period[d[3]].append(d[1])
    pools = {}
    for label, authors in authors_by_period.items():
        uniq = sorted(set(authors))
        w = np.array([math.exp(cfg.bot_interaction_effect * bots[u]) for u in uniq])
        pools[label] = (uniq, w / w.sum() if len(w) else w)

    tweets = []
    for i, (tid, author, ts, plabel, is_retweet, n_mentions, rc, embedding, label, _) in enumerate(drafts):
        rng = stream_rng(cfg.seed, TARGET_STREAM, i)
        uniq, w = pools[plabel]
        source = None
        if is_retweet:
            source = uniq[int(rng.choice(len(uniq), p=w))] if len(uniq) > 1 else author
        mentions = tuple(uniq[int(k)] for k in rng.choice(len(uniq), size=n_mentions, p=w)) if n_mentions else ()
        tweets.append(
            Tweet(
                tweet_id=tid,
                author_id=author,
                created_at=ts,
                is_retweet=is_retweet,
                retweeted_author_id=source,
                mentioned_author_ids=mentions,
                retweet_count=rc,
                embedding=embedding,
                misinfo_label=label,
            )
        )

    corpus = Corpus(tweets=tweets, users=users, periods=cfg.periods)
    truth_labels = Labels(bots=dict(bots))
    for d in drafts:
        mtype = d[9]
        truth_labels.misinfo[d[0]] = MisinfoLabel(True, mtype) if mtype else MisinfoLabel(False)
    truth = {
        "seed": cfg.seed,
        "model": cfg.model,
        "power": cfg.power,
        "dispersion": cfg.dispersion,
        "column_names": names,
        "coefficients": {n: float(b) for n, b in zip(names, beta)},
        "bot_interaction_effect": cfg.bot_interaction_effect,
        "response": dv,
    }
    return SynthResult(corpus, refs, truth_labels, truth)


def write_synth(result: SynthResult, out_dir) -> dict[str, Path]:
    """Write ``tweets.jsonl``, ``users.csv``, ``references.jsonl`` and ``truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "tweets": out / "tweets.jsonl",
        "users": out / "users.csv",
        "references": out / "references.jsonl",
        "truth": out / "truth.json",
    }
    with open(paths["tweets"], "w", encoding="utf-8", newline="\n") as fh:
        dump_tweets(result.corpus.tweets, fh)
    with open(paths["users"], "w", encoding="utf-8", newline="") as fh:
        dump_users(result.corpus.users, fh)
    with open(paths["references"], "w", encoding="utf-8", newline="\n") as fh:
        dump_references(result.references, fh)
    with open(paths["truth"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result.truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return paths


def config_from_mapping(values: Mapping[str, str], periods: PeriodConfig | None = None) -> SynthConfig:
    """Build a :class:`SynthConfig` from flat ``synth.*`` / ``coef.*`` keys."""
    cfg = SynthConfig()
    if periods is not None:
        cfg.periods = periods
    casts = {
        "seed": int,
        "n_users": int,
        "n_tweets": int,
        "bot_fraction": float,
        "misinfo_fraction": float,
        "retweet_fraction": float,
        "mention_rate": float,
        "bot_interaction_effect": float,
        "model": str,
        "dispersion": float,
        "power": float,
        "label_mode": str,
        "embedding_dim": int,
        "refs_per_type": int,
    }
    for key, raw in values.items():
        if key.startswith("synth."):
            name = key[len("synth."):]
            if name == "period_mix":
                cfg.period_mix = tuple(float(v) for v in raw.split(","))
            elif name in casts:
                setattr(cfg, name, casts[name](raw))
            else:
                raise SynthError(f"unknown synth option {key!r}")
        elif key == "seed":
            cfg.seed = int(raw)
        elif key.startswith("coef."):
            cfg.coefficients[key[len("coef."):]] = float(raw)
    if periods is not None and "synth.period_mix" not in values and len(periods) != len(cfg.period_mix):
        cfg.period_mix = tuple([1.0 / len(periods)] * len(periods))
    return cfg
