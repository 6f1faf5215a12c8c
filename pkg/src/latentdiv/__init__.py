"""
Matrix-factorization recommendations with latent-space list diversity.

Train a bilinear rating model by alternating least squares, measure how
spread out each user's top-k list is in the item factor space (nILLD), and
post-process lists so every user reaches a diversity threshold.
"""

from .dataset import (
    DatasetError,
    RatingsDataset,
    SplitPair,
    load_ratings,
    parse_ratings,
    split_holdout,
    validate,
)
from .diversity import (
    DistanceMetric,
    DiversityReport,
    MaxIlldResult,
    dist,
    illd_sum,
    max_illd,
    max_illd_exact,
    max_illd_greedy,
    nilld_overall,
    nilld_user,
    satisfies_alpha,
    satisfies_individual_alpha,
)
from .factorization import (
    FactorModel,
    TrainConfig,
    TrainReport,
    init_factors,
    load_model,
    loss,
    predict,
    rmse,
    save_model,
    train,
)
from .harness import SweepRow, emit_report, run_baseline, run_sweep
from .postprocess import (
    DiversifyConfig,
    DiversifyOutcome,
    Status,
    best_replacement,
    diversify_all,
    diversify_user,
    least_diverse_member,
)
from .ranking import (
    RecommendationList,
    hit_rate_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
    top_k,
)

__version__ = "0.1.0"
