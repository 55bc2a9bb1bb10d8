"""Misinformation and bot labelling from precomputed embeddings and scores."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Mapping, Sequence

import numpy as np

from .corpus import MISINFO_TYPES, Corpus, MisinfoLabel, UserProfile

MISINFO_THRESHOLD = 0.70
BOT_THRESHOLD = 0.70


class ClassifyError(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceTweet:
    reference_id: str
    misinfo_type: str
    embedding: tuple[float, ...]

    def __post_init__(self):
        if self.misinfo_type not in MISINFO_TYPES:
            raise ClassifyError(f"unknown misinfo type {self.misinfo_type!r}")
        if not any(self.embedding):
            raise ClassifyError(f"reference {self.reference_id} has a zero embedding")


@dataclass
class Labels:
    """Per-tweet misinformation labels and per-user bot flags."""

    misinfo: dict[str, MisinfoLabel] = field(default_factory=dict)
    bots: dict[str, bool] = field(default_factory=dict)

    def is_misinfo(self, tweet_id: str) -> bool:
        lab = self.misinfo.get(tweet_id)
        return bool(lab and lab.is_misinfo)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise ClassifyError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ClassifyError("cosine similarity undefined for a zero vector")
    return float(min(1.0, max(-1.0, np.dot(a, b) / (na * nb))))


def label_misinformation(
    embedding, references: Sequence[ReferenceTweet], threshold: float = MISINFO_THRESHOLD
) -> MisinfoLabel:
    """Nearest-reference labelling; ``similarity >= threshold`` counts as misinformation.

    Ties on the maximum similarity go to the lexicographically smallest
    reference id.
    """
    if not references:
        raise ClassifyError("at least one reference tweet is required")
    best = None
    for ref in references:
        sim = cosine_similarity(embedding, ref.embedding)
        key = (-sim, ref.reference_id)
        if best is None or key < best[0]:
            best = (key, ref, sim)
    _, ref, sim = best
    if sim >= threshold:
        return MisinfoLabel(True, ref.misinfo_type, sim, ref.reference_id)
    return MisinfoLabel(False)


def label_bot(bot_probability: float, threshold: float = BOT_THRESHOLD) -> bool:
    if not 0.0 <= bot_probability <= 1.0 or math.isnan(bot_probability):
        raise ClassifyError(f"bot probability {bot_probability} outside [0, 1]")
    return bot_probability > threshold


def account_age(created_at: date, period_end: date) -> int:
    """Whole days from account creation to the last day of the tweet's period."""
    days = (period_end - created_at).days
    if days < 0:
        raise ClassifyError(f"account created {created_at} after period end {period_end}")
    return days


def parse_references(stream: IO) -> list[ReferenceTweet]:
    refs = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            refs.append(
                ReferenceTweet(
                    str(obj["reference_id"]),
                    obj["type"],
                    tuple(float(v) for v in obj["embedding"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ClassifyError(f"references line {lineno}: {exc}") from exc
    dims = {len(r.embedding) for r in refs}
    if len(dims) > 1:
        raise ClassifyError(f"references have mixed embedding dimensions {sorted(dims)}")
    return refs


def dump_references(refs: Sequence[ReferenceTweet], stream: IO[str]) -> None:
    for r in refs:
        obj = {"reference_id": r.reference_id, "type": r.misinfo_type, "embedding": list(r.embedding)}
        stream.write(json.dumps(obj, separators=(",", ":")) + "\n")


def classify_corpus(
    corpus: Corpus,
    references: Sequence[ReferenceTweet] = (),
    misinfo_threshold: float = MISINFO_THRESHOLD,
    bot_threshold: float = BOT_THRESHOLD,
) -> Labels:
    """Label every tweet and every user of ``corpus``.

    A precomputed ``misinfo`` object on a tweet wins over embedding
    classification. Tweets with neither a label nor an embedding (or with
    no references supplied) are treated as regular content.
    """
    labels = Labels()
    for t in corpus.tweets:
        if t.misinfo_label is not None:
            labels.misinfo[t.tweet_id] = t.misinfo_label
        elif t.embedding is not None and references:
            labels.misinfo[t.tweet_id] = label_misinformation(t.embedding, references, misinfo_threshold)
        else:
            labels.misinfo[t.tweet_id] = MisinfoLabel(False)
    labels.bots = {uid: label_bot(u.bot_probability, bot_threshold) for uid, u in corpus.users.items()}
    return labels


TWEET_LABEL_HEADER = ["tweet_id", "is_misinfo", "misinfo_type", "similarity", "matched_reference_id"]
USER_LABEL_HEADER = ["user_id", "bot_probability", "is_bot"]


def write_labels(labels: Labels, users: Mapping[str, UserProfile], tweet_stream: IO[str], user_stream: IO[str]):
    w = csv.writer(tweet_stream, lineterminator="\n")
    w.writerow(TWEET_LABEL_HEADER)
    for tid, lab in labels.misinfo.items():
        w.writerow(
            [
                tid,
                int(lab.is_misinfo),
                lab.misinfo_type or "",
                "" if lab.similarity is None else f"{lab.similarity:.10g}",
                lab.matched_reference_id or "",
            ]
        )
    w = csv.writer(user_stream, lineterminator="\n")
    w.writerow(USER_LABEL_HEADER)
    for uid, flag in labels.bots.items():
        w.writerow([uid, repr(users[uid].bot_probability), int(flag)])


def read_labels(tweet_stream: IO[str], user_stream: IO[str]) -> Labels:
    labels = Labels()
    for row in csv.DictReader(tweet_stream):
        sim = row["similarity"]
        labels.misinfo[row["tweet_id"]] = MisinfoLabel(
            is_misinfo=row["is_misinfo"] == "1",
            misinfo_type=row["misinfo_type"] or None,
            similarity=float(sim) if sim else None,
            matched_reference_id=row["matched_reference_id"] or None,
        )
    for row in csv.DictReader(user_stream):
        labels.bots[row["user_id"]] = row["is_bot"] == "1"
    return labels
