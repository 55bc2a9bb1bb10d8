from datetime import date, datetime, timezone

import pytest

from appealscope.corpus import Corpus, Tweet, UserProfile


def ts(text="2020-12-02T12:00:00"):
    return datetime.fromisoformat(text).replace(tzinfo=timezone.utc)


def tweet(tid, author, *, when="2020-12-02T12:00:00", rt_of=None, mentions=(), retweets=0, **kw):
    return Tweet(
        tweet_id=tid,
        author_id=author,
        created_at=ts(when),
        is_retweet=rt_of is not None,
        retweeted_author_id=rt_of,
        mentioned_author_ids=tuple(mentions),
        retweet_count=retweets,
        **kw,
    )


def user(uid, created="2019-01-01", prob=0.1):
    return UserProfile(uid, date.fromisoformat(created), prob)


@pytest.fixture
def three_user_tweets():
    # A retweets B, A mentions C, B mentions C; all three author in period
    return [
        tweet("t1", "A", rt_of="B", retweets=4),
        tweet("t2", "A", mentions=["C"], retweets=4),
        tweet("t3", "B", mentions=["C"], retweets=2),
        tweet("t4", "C", retweets=0),
    ]


@pytest.fixture
def three_user_corpus():
    # one tweet per user, so the retweet population is {A:4, B:2, C:0}
    tweets = [
        tweet("tA", "A", rt_of="B", mentions=["C"], retweets=4),
        tweet("tB", "B", mentions=["C"], retweets=2),
        tweet("tC", "C", retweets=0),
    ]
    users = {u: user(u, prob=0.9 if u == "B" else 0.1) for u in "ABC"}
    return Corpus(tweets, users)


@pytest.fixture(scope="session")
def golden_inputs(tmp_path_factory):
    """The bundled seeded 5k-tweet synthetic corpus, generated once per session."""
    from importlib.resources import files

    from appealscope.cli import main

    d = tmp_path_factory.mktemp("golden")
    cfg = d / "golden.cfg"
    cfg.write_text(files("appealscope").joinpath("data/golden.cfg").read_text())
    assert main(["synth", "--config", str(cfg), "--out", str(d)]) == 0
    return cfg


# --------------------------------------------------------------------------
# acceptance reporting: tests marked ``criterion(n, title)`` get one
# PASS/FAIL line each in the terminal summary

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    failed = report.failed
    if report.when == "call" or failed:
        previous = _criteria.get(number, ("PASS", title))[0]
        _criteria[number] = ("FAIL" if failed or previous == "FAIL" else "PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, title = _criteria[number]
        terminalreporter.write_line(f"{status}  criterion {number:>2}: {title}")
