import io
import json
from datetime import date, datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from appealscope.corpus import (
    DEFAULT_PERIODS,
    Corpus,
    CorpusError,
    MisinfoLabel,
    Period,
    PeriodConfig,
    assign_period,
    dump_tweets,
    dump_users,
    parse_tweets,
    parse_users,
    validate_corpus,
)

from conftest import ts, tweet, user


def line(**overrides):
    obj = {
        "id": "t1",
        "author_id": "u1",
        "created_at": "2020-12-02T10:00:00Z",
        "is_retweet": False,
        "retweeted_author_id": None,
        "mentions": [],
        "retweet_count": 3,
    }
    obj.update(overrides)
    return json.dumps(obj)


class TestParseTweets:
    def test_empty_stream(self):
        assert parse_tweets(io.StringIO("")) == ([], [])

    def test_minimal_record(self):
        tweets, errors = parse_tweets(io.StringIO(line() + "\n"))
        assert errors == []
        assert len(tweets) == 1
        t = tweets[0]
        assert (t.tweet_id, t.author_id, t.is_retweet, t.retweet_count) == ("t1", "u1", False, 3)
        assert t.created_at == datetime(2020, 12, 2, 10, tzinfo=timezone.utc)

    def test_retweet_missing_source_is_skipped(self):
        text = "\n".join([line(id="a"), line(id="b", is_retweet=True), line(id="c")])
        tweets, errors = parse_tweets(io.StringIO(text))
        assert [t.tweet_id for t in tweets] == ["a", "c"]
        assert len(errors) == 1
        assert errors[0].line == 2
        assert "retweet missing source" in errors[0].message

    def test_malformed_json_and_bad_fields_keep_going(self):
        text = "\n".join(["{not json", line(retweet_count=-1), line(mentions="u2"), line(id="ok")])
        tweets, errors = parse_tweets(io.StringIO(text))
        assert [t.tweet_id for t in tweets] == ["ok"]
        assert [e.line for e in errors] == [1, 2, 3]

    def test_binary_stream_and_optional_fields(self):
        raw = line(embedding=[1, 0.5], misinfo={"is_misinfo": True, "type": "fake_cure", "similarity": 0.8})
        tweets, errors = parse_tweets(io.BytesIO(raw.encode()))
        assert not errors
        assert tweets[0].embedding == (1.0, 0.5)
        assert tweets[0].misinfo_label == MisinfoLabel(True, "fake_cure", 0.8)

    def test_unreadable_stream_is_fatal(self, tmp_path):
        with pytest.raises(OSError):
            with open(tmp_path / "missing.jsonl") as fh:
                parse_tweets(fh)

    def test_round_trip(self):
        original = [
            tweet("t1", "A", rt_of="B", mentions=["C", "D"], retweets=7, embedding=(0.25, -1.0)),
            tweet("t2", "B", misinfo_label=MisinfoLabel(True, "conspiracy", 0.9, "r1")),
            tweet("t3", "C", when="2021-01-30T23:59:59", misinfo_label=MisinfoLabel(False)),
        ]
        buf = io.StringIO()
        dump_tweets(original, buf)
        again, errors = parse_tweets(io.StringIO(buf.getvalue()))
        assert not errors
        assert again == original
        buf2 = io.StringIO()
        dump_tweets(again, buf2)
        assert buf2.getvalue() == buf.getvalue()


class TestParseUsers:
    def test_header_only(self):
        assert parse_users(io.StringIO("user_id,created_at,bot_probability\n")) == ({}, [])

    def test_row(self):
        users, errors = parse_users(io.StringIO("user_id,created_at,bot_probability\nu1,2019-05-01,0.85\n"))
        assert not errors
        assert users["u1"].bot_probability == 0.85
        assert users["u1"].created_at == date(2019, 5, 1)

    def test_duplicate_is_fatal(self):
        text = "user_id,created_at,bot_probability\nu1,2019-05-01,0.85\nu1,2019-05-02,0.1\n"
        with pytest.raises(CorpusError, match="u1"):
            parse_users(io.StringIO(text))

    def test_probability_out_of_range_is_diagnostic(self):
        text = "user_id,created_at,bot_probability\nu1,2019-05-01,1.5\nu2,2019-05-01,0.5\n"
        users, errors = parse_users(io.StringIO(text))
        assert list(users) == ["u2"]
        assert errors[0].line == 2

    def test_quoted_ids_and_round_trip(self):
        text = 'user_id,created_at,bot_probability\n"a,b",2019-05-01,0.25\n'
        users, _ = parse_users(io.BytesIO(text.encode()))
        assert "a,b" in users
        buf = io.StringIO()
        dump_users(users, buf)
        assert parse_users(io.StringIO(buf.getvalue()))[0] == users


class TestAssignPeriod:
    def test_vaccine_launch(self):
        assert assign_period(ts("2020-12-09T13:00:00"), DEFAULT_PERIODS) == "Vaccine Launch"

    def test_gap(self):
        assert assign_period(ts("2020-12-25T00:00:00"), DEFAULT_PERIODS) is None

    def test_inclusive_bounds(self):
        assert assign_period(ts("2020-12-08T00:00:00"), DEFAULT_PERIODS) == "Vaccine Launch"
        assert assign_period(ts("2020-12-07T23:59:59"), DEFAULT_PERIODS) == "Pre-Vaccine"
        assert assign_period(ts("2021-01-31T23:59:59"), DEFAULT_PERIODS) == "Post-Vaccine"

    def test_gap_by_brute_force(self):
        # every day from Dec 11 to Jan 24 lies between periods
        day = date(2020, 12, 11)
        while day <= date(2021, 1, 24):
            assert assign_period(datetime(day.year, day.month, day.day, 12, tzinfo=timezone.utc), DEFAULT_PERIODS) is None
            day += timedelta(days=1)

    def test_period_config_rejects_bad_input(self):
        with pytest.raises(ValueError):
            PeriodConfig([])
        with pytest.raises(ValueError):
            PeriodConfig([Period("a", date(2020, 1, 1), date(2020, 1, 5)), Period("b", date(2020, 1, 5), date(2020, 1, 9))])
        with pytest.raises(ValueError):
            PeriodConfig([Period("a", date(2020, 1, 5), date(2020, 1, 1))])
        with pytest.raises(ValueError):
            PeriodConfig([Period("a", date(2020, 1, 1), date(2020, 1, 1)), Period("a", date(2020, 2, 1), date(2020, 2, 1))])


@st.composite
def period_configs(draw):
    n = draw(st.integers(1, 5))
    offsets = sorted(draw(st.lists(st.integers(0, 400), min_size=2 * n, max_size=2 * n, unique=True)))
    base = date(2020, 1, 1)
    return PeriodConfig(
        Period(f"p{i}", base + timedelta(days=offsets[2 * i]), base + timedelta(days=offsets[2 * i + 1]))
        for i in range(n)
    )


@given(period_configs(), st.integers(-10, 420), st.integers(0, 86399))
def test_assign_period_is_partial_function(cfg, day_offset, second):
    when = datetime(2020, 1, 1, tzinfo=timezone.utc) + timedelta(days=day_offset, seconds=second)
    matches = [p.label for p in cfg if p.start <= when.date() <= p.end]
    assert len(matches) <= 1
    assert assign_period(when, cfg) == (matches[0] if matches else None)


class TestValidate:
    def test_clean(self):
        c = Corpus([tweet("t1", "u1")], {"u1": user("u1")})
        report = validate_corpus(c)
        assert report.findings == [] and report.accepted

    def test_unknown_author(self):
        c = Corpus([tweet("t1", "ghost")], {"u1": user("u1")})
        report = validate_corpus(c)
        assert not report.accepted
        assert report.fatal[0].subject == "ghost"
        assert "ghost" in report.fatal[0].message

    def test_out_of_window_is_warning(self):
        c = Corpus([tweet("t1", "u1", when="2020-11-01T00:00:00")], {"u1": user("u1")})
        report = validate_corpus(c)
        assert report.accepted
        assert [(f.severity, f.kind) for f in report.findings] == [("warning", "out-of-window")]
        assert c.in_period("Pre-Vaccine") == []

    def test_embedding_dimension_mismatch(self):
        c = Corpus(
            [tweet("t1", "u1", embedding=(1.0, 0.0)), tweet("t2", "u1", embedding=(1.0, 0.0, 0.0))],
            {"u1": user("u1")},
        )
        report = validate_corpus(c)
        assert [f.kind for f in report.fatal] == ["embedding-dimension"]

    def test_deterministic_report(self):
        c = Corpus([tweet("t1", "ghost"), tweet("t2", "u1", when="2020-11-01T00:00:00")], {"u1": user("u1")})
        assert validate_corpus(c).to_json() == validate_corpus(c).to_json()
