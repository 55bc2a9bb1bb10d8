"""Tweet and user ingestion, period assignment and corpus validation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import IO, Iterable, Mapping, Sequence

MISINFO_TYPES = (
    "conspiracy",
    "fake_cure",
    "fake_treatment",
    "false_fact_or_prevention",
    "false_public_health_response",
)

USERS_HEADER = ["user_id", "created_at", "bot_probability"]


class CorpusError(Exception):
    """Fatal ingestion or validation failure."""


@dataclass(frozen=True)
class MisinfoLabel:
    is_misinfo: bool
    misinfo_type: str | None = None
    similarity: float | None = None
    matched_reference_id: str | None = None

    def __post_init__(self):
        if self.misinfo_type is not None and self.misinfo_type not in MISINFO_TYPES:
            raise ValueError(f"unknown misinfo type {self.misinfo_type!r}")
        if self.similarity is not None and not -1.0 <= self.similarity <= 1.0:
            raise ValueError(f"similarity {self.similarity} outside [-1, 1]")


@dataclass(frozen=True)
class Tweet:
    tweet_id: str
    author_id: str
    created_at: datetime
    is_retweet: bool = False
    retweeted_author_id: str | None = None
    mentioned_author_ids: tuple[str, ...] = ()
    retweet_count: int = 0
    embedding: tuple[float, ...] | None = None
    misinfo_label: MisinfoLabel | None = None

    def __post_init__(self):
        if self.is_retweet and not self.retweeted_author_id:
            raise ValueError("retweet missing source")
        if self.retweet_count < 0:
            raise ValueError("retweet_count must be non-negative")
        if self.created_at.tzinfo is None:
            raise ValueError("created_at must be timezone-aware UTC")


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    created_at: date
    bot_probability: float

    def __post_init__(self):
        if not 0.0 <= self.bot_probability <= 1.0:
            raise ValueError(f"bot_probability {self.bot_probability} outside [0, 1]")


@dataclass(frozen=True)
class Period:
    label: str
    start: date
    end: date


class PeriodConfig(tuple):
    """Ordered, non-overlapping, inclusive UTC date ranges."""

    def __new__(cls, periods: Iterable[Period]):
        periods = tuple(periods)
        if not periods:
            raise ValueError("at least one period is required")
        labels = [p.label for p in periods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate period labels in {labels}")
        for p in periods:
            if p.start > p.end:
                raise ValueError(f"period {p.label!r} starts after it ends")
        ordered = sorted(periods, key=lambda p: p.start)
        for a, b in zip(ordered, ordered[1:]):
            if b.start <= a.end:
                raise ValueError(f"periods {a.label!r} and {b.label!r} overlap")
        return super().__new__(cls, periods)

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self]

    def get(self, label: str) -> Period:
        for p in self:
            if p.label == label:
                return p
        raise KeyError(label)


DEFAULT_PERIODS = PeriodConfig(
    [
        Period("Pre-Vaccine", date(2020, 12, 1), date(2020, 12, 7)),
        Period("Vaccine Launch", date(2020, 12, 8), date(2020, 12, 10)),
        Period("Post-Vaccine", date(2021, 1, 25), date(2021, 1, 31)),
    ]
)


@dataclass
class Corpus:
    tweets: list[Tweet]
    users: dict[str, UserProfile]
    periods: PeriodConfig = DEFAULT_PERIODS

    def period_of(self, tweet: Tweet) -> str | None:
        return assign_period(tweet.created_at, self.periods)

    def in_period(self, label: str) -> list[Tweet]:
        return [t for t in self.tweets if self.period_of(t) == label]


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


# --------------------------------------------------------------------------
# timestamps


def parse_timestamp(text: str) -> datetime:
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# --------------------------------------------------------------------------
# tweets


def _tweet_from_obj(obj: Mapping) -> Tweet:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    for key in ("id", "author_id", "created_at"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise ValueError(f"missing or non-string field {key!r}")
    is_retweet = obj.get("is_retweet", False)
    if not isinstance(is_retweet, bool):
        raise ValueError("is_retweet must be boolean")
    source = obj.get("retweeted_author_id")
    if is_retweet and not source:
        raise ValueError("retweet missing source")
    mentions = obj.get("mentions") or []
    if not isinstance(mentions, list) or not all(isinstance(m, str) for m in mentions):
        raise ValueError("mentions must be an array of ids")
    count = obj.get("retweet_count", 0)
    if isinstance(count, bool) or not isinstance(count, int) or count < 0:
        raise ValueError("retweet_count must be a non-negative integer")
    embedding = obj.get("embedding")
    if embedding is not None:
        if not isinstance(embedding, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in embedding
        ):
            raise ValueError("embedding must be an array of numbers")
        embedding = tuple(float(v) for v in embedding)
    label = None
    if obj.get("misinfo") is not None:
        m = obj["misinfo"]
        if not isinstance(m, dict) or not isinstance(m.get("is_misinfo"), bool):
            raise ValueError("misinfo must be an object with boolean is_misinfo")
        sim = m.get("similarity")
        label = MisinfoLabel(
            is_misinfo=m["is_misinfo"],
            misinfo_type=m.get("type"),
            similarity=None if sim is None else float(sim),
            matched_reference_id=m.get("reference_id"),
        )
        if label.is_misinfo and label.misinfo_type is None:
            raise ValueError("misinfo label without type")
    return Tweet(
        tweet_id=obj["id"],
        author_id=obj["author_id"],
        created_at=parse_timestamp(obj["created_at"]),
        is_retweet=is_retweet,
        retweeted_author_id=source if source else None,
        mentioned_author_ids=tuple(mentions),
        retweet_count=count,
        embedding=embedding,
        misinfo_label=label,
    )


def parse_tweets(stream: IO) -> tuple[list[Tweet], list[Diagnostic]]:
    """Parse line-delimited tweet records.

    Malformed lines do not abort the parse; each one yields a
    :class:`Diagnostic` carrying its 1-based line number. Blank lines are
    skipped silently. Accepts text or binary streams.
    """
    tweets: list[Tweet] = []
    errors: list[Diagnostic] = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(Diagnostic(lineno, f"invalid JSON: {exc.msg}"))
            continue
        try:
            tweets.append(_tweet_from_obj(obj))
        except (ValueError, TypeError) as exc:
            errors.append(Diagnostic(lineno, str(exc)))
    return tweets, errors


def tweet_to_obj(tweet: Tweet) -> dict:
    obj = {
        "id": tweet.tweet_id,
        "author_id": tweet.author_id,
        "created_at": format_timestamp(tweet.created_at),
        "is_retweet": tweet.is_retweet,
        "retweeted_author_id": tweet.retweeted_author_id,
        "mentions": list(tweet.mentioned_author_ids),
        "retweet_count": tweet.retweet_count,
    }
    if tweet.embedding is not None:
        obj["embedding"] = list(tweet.embedding)
    if tweet.misinfo_label is not None:
        lab = tweet.misinfo_label
        obj["misinfo"] = {
            "is_misinfo": lab.is_misinfo,
            "type": lab.misinfo_type,
            "similarity": lab.similarity,
        }
        if lab.matched_reference_id is not None:
            obj["misinfo"]["reference_id"] = lab.matched_reference_id
    return obj


def dump_tweets(tweets: Iterable[Tweet], stream: IO[str]) -> None:
    for t in tweets:
        stream.write(json.dumps(tweet_to_obj(t), separators=(",", ":")) + "\n")


# --------------------------------------------------------------------------
# users


def parse_users(stream: IO) -> tuple[dict[str, UserProfile], list[Diagnostic]]:
    """Parse ``users.csv``. Duplicate ``user_id`` rows raise :class:`CorpusError`."""
    text = stream.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text, newline=""))
    users: dict[str, UserProfile] = {}
    errors: list[Diagnostic] = []
    header = next(reader, None)
    if header is None:
        return users, errors
    header = [h.strip() for h in header]
    if header != USERS_HEADER:
        raise CorpusError(f"users header must be {','.join(USERS_HEADER)}, got {','.join(header)}")
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            errors.append(Diagnostic(lineno, f"expected 3 fields, got {len(row)}"))
            continue
        uid, created, prob = (c.strip() for c in row)
        if uid in users:
            raise CorpusError(f"duplicate user_id {uid!r} (line {lineno})")
        try:
            profile = UserProfile(uid, date.fromisoformat(created), float(prob))
        except ValueError as exc:
            errors.append(Diagnostic(lineno, f"user {uid!r}: {exc}"))
            continue
        users[uid] = profile
    return users, errors


def dump_users(users: Mapping[str, UserProfile], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(USERS_HEADER)
    for u in users.values():
        writer.writerow([u.user_id, u.created_at.isoformat(), repr(u.bot_probability)])


# --------------------------------------------------------------------------
# periods


def assign_period(created_at: datetime, periods: Sequence[Period]) -> str | None:
    day = created_at.astimezone(timezone.utc).date()
    for p in periods:
        if p.start <= day <= p.end:
            return p.label
    return None


# --------------------------------------------------------------------------
# validation

FATAL = "fatal"
WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: str
    kind: str
    subject: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def fatal(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == FATAL]

    @property
    def accepted(self) -> bool:
        return not self.fatal

    def to_json(self) -> str:
        payload = {
            "accepted": self.accepted,
            "n_fatal": len(self.fatal),
            "n_warning": len(self.findings) - len(self.fatal),
            "findings": [f.__dict__ for f in self.findings],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def validate_corpus(corpus: Corpus) -> ValidationReport:
    report = ValidationReport()
    seen: set[str] = set()
    dim = None
    for t in corpus.tweets:
        if t.tweet_id in seen:
            report.findings.append(
                Finding(FATAL, "duplicate-tweet-id", t.tweet_id, f"tweet id {t.tweet_id} repeated")
            )
        seen.add(t.tweet_id)
        if t.author_id not in corpus.users:
            report.findings.append(
                Finding(
                    FATAL,
                    "unresolved-author",
                    t.author_id,
                    f"tweet {t.tweet_id} authored by unknown user {t.author_id}",
                )
            )
        if corpus.period_of(t) is None:
            report.findings.append(
                Finding(
                    WARNING,
                    "out-of-window",
                    t.tweet_id,
                    f"tweet {t.tweet_id} at {format_timestamp(t.created_at)} is outside every period",
                )
            )
        if t.embedding is not None:
            if dim is None:
                dim = len(t.embedding)
            elif len(t.embedding) != dim:
                report.findings.append(
                    Finding(
                        FATAL,
                        "embedding-dimension",
                        t.tweet_id,
                        f"tweet {t.tweet_id} embedding has dimension {len(t.embedding)}, expected {dim}",
                    )
                )
    return report


def windowed(corpus: Corpus) -> dict[str, list[Tweet]]:
    """Tweets grouped by period label; out-of-window tweets are omitted."""
    out: dict[str, list[Tweet]] = {label: [] for label in corpus.periods.labels}
    for t in corpus.tweets:
        label = corpus.period_of(t)
        if label is not None:
            out[label].append(t)
    return out
