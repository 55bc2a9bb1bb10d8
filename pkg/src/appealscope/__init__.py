"""Appeal and Scope influence metrics with a Tweedie GLM for bot-vs-human effects."""

from .classify import account_age, cosine_similarity, label_bot, label_misinformation
from .design import build_design_matrix, descriptive_stats, effect_percent, vif
from .influence import appeal, compute_metrics, percentile_rank, scope, summarize_groups
from .netgraph import build_network, export_network, total_degree
from .synth import generate_corpus, sample_tweedie
from .tweedie import estimate_dispersion, fit_tweedie_glm, tweedie_unit_deviance, wald_table

__version__ = "0.1.0"
