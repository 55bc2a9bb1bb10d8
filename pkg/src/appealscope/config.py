"""Flat ``key = value`` run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .corpus import DEFAULT_PERIODS, Period, PeriodConfig


class ConfigError(ValueError):
    pass


def parse_flat(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, later keys win."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        values[key] = value
    return values


def periods_from_values(values: dict[str, str]) -> PeriodConfig:
    """Collect ``period.<n>.label/start/end`` triples ordered by ``n``."""
    triples: dict[int, dict[str, str]] = {}
    for key, value in values.items():
        parts = key.split(".")
        if parts[0] != "period":
            continue
        if len(parts) != 3 or not parts[1].isdigit() or parts[2] not in ("label", "start", "end"):
            raise ConfigError(f"bad period key {key!r}; use period.<n>.label|start|end")
        triples.setdefault(int(parts[1]), {})[parts[2]] = value
    if not triples:
        return DEFAULT_PERIODS
    periods = []
    for n in sorted(triples):
        t = triples[n]
        missing = {"label", "start", "end"} - set(t)
        if missing:
            raise ConfigError(f"period {n} is missing {sorted(missing)}")
        try:
            periods.append(Period(t["label"], date.fromisoformat(t["start"]), date.fromisoformat(t["end"])))
        except ValueError as exc:
            raise ConfigError(f"period {n}: {exc}") from exc
    try:
        return PeriodConfig(periods)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    tweets: Path | None = None
    users: Path | None = None
    references: Path | None = None
    out: Path | None = None
    periods: PeriodConfig = DEFAULT_PERIODS
    misinfo_threshold: float = 0.70
    bot_threshold: float = 0.70
    graph_format: str = "gexf"
    standardize_age: bool = False
    seed: int | None = None
    raw: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str, base: Path | None = None) -> "RunConfig":
        values = parse_flat(text)
        base = base or Path(".")

        def path(key):
            if key not in values or not values[key]:
                return None
            p = Path(values[key])
            return p if p.is_absolute() else base / p

        try:
            cfg = cls(
                tweets=path("tweets"),
                users=path("users"),
                references=path("references"),
                out=path("out"),
                periods=periods_from_values(values),
                misinfo_threshold=float(values.get("classify.misinfo_threshold", 0.70)),
                bot_threshold=float(values.get("classify.bot_threshold", 0.70)),
                graph_format=values.get("graph.format", "gexf"),
                standardize_age=_bool(values.get("design.standardize_age", "false")),
                seed=int(values["seed"]) if "seed" in values else None,
                raw=values,
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        if cfg.graph_format not in ("gexf", "dot"):
            raise ConfigError(f"graph.format must be gexf or dot, got {cfg.graph_format!r}")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, path.parent)
