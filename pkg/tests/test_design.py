import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from appealscope.classify import Labels
from appealscope.corpus import Corpus, MisinfoLabel
from appealscope.design import (
    CollinearityWarning,
    DesignError,
    ModelSpec,
    build_design_matrix,
    descriptive_stats,
    effect_percent,
    vif,
)
from appealscope.influence import MetricRecord

from conftest import tweet, user


def mrec(tid="t", *, bot=False, period="Pre-Vaccine", mtype="conspiracy", retweet=False, age=365, appeal=1.0, scope=2.0):
    return MetricRecord(tid, period, appeal, scope, 1, 1, 0.5, 0.5, bot, True, mtype, retweet, age)


def mixed_records():
    out = []
    types = ["conspiracy", "fake_cure", "fake_treatment", "false_fact_or_prevention", "false_public_health_response"]
    i = 0
    for bot in (False, True):
        for period in ("Pre-Vaccine", "Vaccine Launch", "Post-Vaccine"):
            for t in types:
                out.append(mrec(f"t{i}", bot=bot, period=period, mtype=t, retweet=i % 2 == 0, age=10 + (37 * i * i) % 101))
                i += 1
    return out


class TestDesignMatrix:
    def test_reference_row(self):
        d = build_design_matrix([mrec()] + mixed_records(), ModelSpec())
        assert list(d.values[0]) == [1, 0, 0, 0, 0, 0, 0, 0, 0, 365]

    def test_conditional_coding(self):
        r = mrec("x", bot=True, period="Vaccine Launch", mtype="fake_cure", retweet=True, age=10)
        d = build_design_matrix([r] + mixed_records(), ModelSpec(kind="conditional"))
        row = dict(zip(d.column_names, d.values[0]))
        assert row["bot"] == 1 and row["vaccine_launch"] == 1 and row["post_vaccine"] == 0
        assert row["bot_x_vaccine_launch"] == 1 and row["bot_x_post_vaccine"] == 0
        assert row["fake_cure"] == 1 and row["fake_treatment"] == 0
        assert row["is_retweet"] == 1 and row["account_age_days"] == 10

    def test_column_counts(self):
        recs = mixed_records()
        base = build_design_matrix(recs, ModelSpec())
        cond = build_design_matrix(recs, ModelSpec(kind="conditional"))
        assert base.shape[1] == 10 and cond.shape[1] == 12
        assert base.column_names == [
            "intercept", "bot", "vaccine_launch", "post_vaccine", "fake_cure", "fake_treatment",
            "false_fact_or_prevention", "false_public_health_response", "is_retweet", "account_age_days",
        ]

    def test_response(self):
        recs = mixed_records()
        assert list(build_design_matrix(recs, ModelSpec(dependent="scope")).response) == [r.scope for r in recs]

    def test_invariants(self):
        d = build_design_matrix(mixed_records(), ModelSpec(kind="conditional"))
        assert np.all(d.column("intercept") == 1)
        periods = d.column("vaccine_launch") + d.column("post_vaccine")
        types = sum(d.column(t) for t in ("fake_cure", "fake_treatment", "false_fact_or_prevention", "false_public_health_response"))
        assert periods.max() <= 1 and types.max() <= 1
        for p in ("vaccine_launch", "post_vaccine"):
            assert np.array_equal(d.column(f"bot_x_{p}"), d.column("bot") * d.column(p))

    def test_empty_category_dropped(self):
        recs = [r for r in mixed_records() if r.misinfo_type != "fake_cure"]
        with pytest.warns(CollinearityWarning, match="fake_cure"):
            d = build_design_matrix(recs, ModelSpec())
        assert "fake_cure" not in d.column_names and d.dropped == ["fake_cure"]

    def test_requires_misinfo_only(self):
        bad = MetricRecord("r", "Pre-Vaccine", 1, 1, 1, 1, 0.5, 0.5, False, False, None, False, 1)
        with pytest.raises(DesignError):
            build_design_matrix([bad], ModelSpec())
        with pytest.raises(DesignError):
            build_design_matrix([], ModelSpec())

    def test_standardised_age(self):
        d = build_design_matrix(mixed_records(), ModelSpec(standardize_age=True))
        age = d.column("account_age_days")
        assert age.mean() == pytest.approx(0, abs=1e-12) and age.std() == pytest.approx(1)


def corr_design(rho):
    # two zero-mean orthonormal vectors, then mixed to sample correlation rho
    z1 = np.array([1, -1, 1, -1, 1, -1, 1, -1], dtype=float)
    z2 = np.array([1, 1, -1, -1, 1, 1, -1, -1], dtype=float)
    x1 = z1
    x2 = rho * z1 + math.sqrt(1 - rho**2) * z2
    return np.column_stack([np.ones(8), x1, x2])


class TestVIF:
    def test_orthogonal(self):
        v = vif(corr_design(0.0), ["intercept", "a", "b"])
        assert v == {"a": 1.0, "b": 1.0}

    def test_correlation_09(self):
        X = corr_design(0.9)
        assert np.corrcoef(X[:, 1], X[:, 2])[0, 1] == pytest.approx(0.9, abs=1e-12)
        v = vif(X, ["intercept", "a", "b"])
        assert v["a"] == pytest.approx(1 / (1 - 0.81), abs=1e-6)
        assert v["b"] == pytest.approx(5.263157894736842, abs=1e-6)

    def test_duplicate_column_is_infinite(self):
        X = corr_design(0.3)
        X = np.column_stack([X, X[:, 1]])
        with pytest.warns(CollinearityWarning):
            v = vif(X, ["intercept", "a", "b", "a_copy"])
        assert math.isinf(v["a"]) and math.isinf(v["a_copy"])

    def test_design_matrix_input(self):
        d = build_design_matrix(mixed_records(), ModelSpec())
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            v = vif(d)
        assert "intercept" not in v and len(v) == 9
        assert all(1 <= x < 5 for x in v.values())


@given(st.integers(0, 1000))
def test_vif_at_least_one_and_orthogonal_column_changes_nothing(seed):
    rng = np.random.default_rng(seed)
    n = 40
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
    names = ["intercept", "a", "b", "c"]
    base = vif(X, names)
    assert all(v >= 1 - 1e-12 for v in base.values())
    # new column orthogonal to every existing centred column
    Xc = X[:, 1:] - X[:, 1:].mean(axis=0)
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), Xc]))
    w = rng.normal(size=n)
    w -= q @ (q.T @ w)
    extended = vif(np.column_stack([X, w]), names + ["w"])
    for k in base:
        assert extended[k] == pytest.approx(base[k], rel=1e-9)
    assert extended["w"] == pytest.approx(1.0, rel=1e-9)


class TestEffects:
    @pytest.mark.parametrize("b,pct", [(-2.42, -91.11), (-2.26, -89.56), (0.42, 52.20), (0.0, 0.0)])
    def test_values(self, b, pct):
        assert effect_percent(b) == pytest.approx(pct, abs=0.005)

    @given(st.floats(-5, 5))
    def test_inverse_composition(self, a):
        assert (1 + effect_percent(a) / 100) * (1 + effect_percent(-a) / 100) == pytest.approx(1.0, rel=1e-13)


def test_effect_composition_exact_on_grid():
    for i in range(-50, 51):
        a = i / 10
        assert (1 + effect_percent(a) / 100) * (1 + effect_percent(-a) / 100) == pytest.approx(1.0, rel=1e-13)


class TestDescriptives:
    def test_share(self):
        tweets = [tweet(f"t{i}", "u1") for i in range(4)]
        c = Corpus(tweets, {"u1": user("u1")})
        labels = Labels({f"t{i}": MisinfoLabel(i == 0, "fake_cure" if i == 0 else None) for i in range(4)}, {"u1": False})
        pre = descriptive_stats(c, labels)[0]
        assert pre["misinfo_share"] == 0.25
        assert pre["human_misinfo"] == 1 and pre["human_regular"] == 3

    def test_bot_to_human_ratio(self):
        users = {f"b{i}": user(f"b{i}", prob=0.9) for i in range(7)}
        users.update({f"h{i}": user(f"h{i}") for i in range(20)})
        tweets = [tweet(f"t_{u}", u) for u in users]
        labels = Labels({t.tweet_id: MisinfoLabel(False) for t in tweets}, {u: u.startswith("b") for u in users})
        pre = descriptive_stats(Corpus(tweets, users), labels)[0]
        assert pre["bot_to_human_ratio"] == 0.35

    def test_empty_period(self):
        c = Corpus([tweet("t1", "u1")], {"u1": user("u1")})
        rows = descriptive_stats(c, Labels({"t1": MisinfoLabel(False)}, {"u1": False}))
        post = rows[2]
        assert post["tweets"] == 0 and post["misinfo_share"] == 0.0 and post["bot_to_human_ratio"] == 0.0
