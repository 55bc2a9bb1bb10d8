import hashlib
import math

import numpy as np
import pytest

from appealscope.classify import classify_corpus, label_bot
from appealscope.corpus import validate_corpus, windowed
from appealscope.design import ModelSpec, build_design_matrix
from appealscope.influence import compute_metrics
from appealscope.netgraph import build_network
from appealscope.synth import (
    SynthConfig,
    SynthError,
    config_from_mapping,
    generate_corpus,
    sample_tweedie,
    stream_rng,
    write_synth,
)
from appealscope.tweedie import fit_tweedie_glm

DRAWS = 100_000


class TestSampler:
    def test_zero_mass(self):
        y = sample_tweedie(np.ones(DRAWS), 1.5, 1.0, np.random.default_rng(1))
        p0 = math.exp(-2.0)  # lambda = 1 / (0.5 * 1)
        sigma = math.sqrt(p0 * (1 - p0) / DRAWS)
        assert abs(np.mean(y == 0) - p0) < 3 * sigma

    def test_mean_at_three(self):
        y = sample_tweedie(np.full(DRAWS, 3.0), 1.5, 1.0, np.random.default_rng(2))
        assert abs(y.mean() - 3.0) < 3 * math.sqrt(3.0**1.5 / DRAWS)

    @pytest.mark.parametrize("mu,p,phi", [(0.5, 1.3, 2.0), (4.0, 1.7, 0.5)])
    def test_moments_other_parameters(self, mu, p, phi):
        y = sample_tweedie(np.full(DRAWS, mu), p, phi, np.random.default_rng(3))
        var = phi * mu**p
        assert abs(y.mean() - mu) < 3 * math.sqrt(var / DRAWS)
        p0 = math.exp(-(mu ** (2 - p)) / ((2 - p) * phi))
        assert abs(np.mean(y == 0) - p0) < 3 * math.sqrt(p0 * (1 - p0) / DRAWS)

    def test_scalar_draws_and_determinism(self):
        a = [sample_tweedie(1.0, 1.5, 1.0, stream_rng(7, 1, i)) for i in range(50)]
        b = [sample_tweedie(1.0, 1.5, 1.0, stream_rng(7, 1, i)) for i in range(50)]
        assert a == b and all(isinstance(v, float) for v in a)
        assert any(v == 0.0 for v in a) and any(v > 0 for v in a)

    @pytest.mark.parametrize("mu,p,phi", [(0.0, 1.5, 1.0), (1.0, 2.0, 1.0), (1.0, 1.5, 0.0), (float("nan"), 1.5, 1.0)])
    def test_domain(self, mu, p, phi):
        with pytest.raises(SynthError):
            sample_tweedie(mu, p, phi, np.random.default_rng())


def small_config(**kw):
    base = dict(seed=11, n_users=120, n_tweets=1000)
    base.update(kw)
    return SynthConfig(**base)


class TestGenerateCorpus:
    def test_passes_validation_and_labels_match_truth(self):
        res = generate_corpus(small_config())
        assert validate_corpus(res.corpus).fatal == []
        labels = classify_corpus(res.corpus, res.references)
        assert labels.bots == res.labels.bots
        for tid, truth in res.labels.misinfo.items():
            got = labels.misinfo[tid]
            assert got.is_misinfo == truth.is_misinfo and got.misinfo_type == truth.misinfo_type

    def test_precomputed_label_mode(self):
        res = generate_corpus(small_config(label_mode="precomputed"))
        assert res.references == []
        assert all(t.embedding is None and t.misinfo_label is not None for t in res.corpus.tweets)
        labels = classify_corpus(res.corpus)
        assert {k: v.is_misinfo for k, v in labels.misinfo.items()} == {
            k: v.is_misinfo for k, v in res.labels.misinfo.items()
        }

    def test_bot_probabilities_straddle_threshold(self):
        res = generate_corpus(small_config())
        for uid, u in res.corpus.users.items():
            assert label_bot(u.bot_probability) == res.labels.bots[uid]

    def test_no_bots(self):
        res = generate_corpus(small_config(bot_fraction=0.0))
        assert not any(label_bot(u.bot_probability) for u in res.corpus.users.values())

    def test_same_seed_identical_files(self, tmp_path):
        def digest(d):
            return {k: hashlib.sha256(p.read_bytes()).hexdigest() for k, p in write_synth(generate_corpus(small_config()), d).items()}

        assert digest(tmp_path / "a") == digest(tmp_path / "b")

    def test_different_seed_differs(self):
        a = generate_corpus(small_config(seed=1)).corpus.tweets
        b = generate_corpus(small_config(seed=2)).corpus.tweets
        assert a != b

    def test_planted_bot_effect_recovered(self):
        cfg = SynthConfig(seed=5, n_users=800, n_tweets=12_000)
        res = generate_corpus(cfg)
        corpus = res.corpus
        labels = classify_corpus(corpus, res.references)
        nets = {p: build_network(ts, p) for p, ts in windowed(corpus).items()}
        records = [r for r in compute_metrics(corpus, nets, labels) if r.is_misinfo]
        d = build_design_matrix(records, ModelSpec())
        y = np.array([res.truth["response"][k] for k in d.row_keys])
        fit = fit_tweedie_glm(d.values, y, column_names=d.column_names)
        assert d.column_names == res.truth["column_names"]
        b = fit.coefficients[1]
        assert b < 0
        assert abs(b - (-2.42)) < 3 * fit.standard_errors[1]

    @pytest.mark.parametrize(
        "kw",
        [
            {"misinfo_fraction": 0.0},  # default coefficients plant misinfo-type effects
            {"n_tweets": 100},
            {"period_mix": (0.5, 0.6, 0.1)},
            {"coefficients": {"not_a_column": 1.0}},
            {"power": 2.0},
            {"model": "quadratic"},
        ],
    )
    def test_config_errors(self, kw):
        with pytest.raises(SynthError):
            generate_corpus(small_config(**kw))

    def test_zero_misinfo_allowed_without_type_effects(self):
        coefs = {"intercept": 1.0, "bot": -1.0}
        res = generate_corpus(small_config(misinfo_fraction=0.0, coefficients=coefs))
        assert not any(l.is_misinfo for l in res.labels.misinfo.values())

    def test_config_from_mapping(self):
        cfg = config_from_mapping({"seed": "3", "synth.n_tweets": "700", "synth.period_mix": "0.2,0.3,0.5", "coef.bot": "-1"})
        assert (cfg.seed, cfg.n_tweets, cfg.period_mix, cfg.coefficients["bot"]) == (3, 700, (0.2, 0.3, 0.5), -1.0)
        with pytest.raises(SynthError):
            config_from_mapping({"synth.bogus": "1"})
