"""Negative-binomial process topic models with exact block Gibbs inference.

Joint count/mixture models over bag-of-words corpora: a family of nine
model variants that differ in how negative-binomial dispersion and
probability parameters are shared across documents and topics, all
inferred with closed-form block Gibbs sweeps built on Chinese restaurant
table and compound-Poisson augmentations.  Includes corpus ingestion,
held-out per-word perplexity, and a joint-distribution (Geweke-style)
correctness harness for every kernel.
"""

from .corpus import (
    Corpus,
    EmptyCorpusError,
    HeldOutSplit,
    ParseError,
    SyntheticGroundTruth,
    SyntheticSpec,
    filter_vocabulary,
    load_bag_of_words,
    split_train_test,
    synthesize_corpus,
    write_bag_of_words,
)
from .distributions import (
    CapacityError,
    ParameterError,
    StirlingTriangle,
    crt_pmf,
    sample_beta,
    sample_crt,
    sample_crt_array,
    sample_dirichlet,
    sample_discrete,
    sample_gamma,
    sample_logarithmic,
    sample_nb_compound,
    sample_nb_direct,
    sample_poisson,
)
from .evaluation import (
    EvaluationError,
    GewekeReport,
    GewekeSettings,
    HarnessError,
    SampleAccumulator,
    TraceReport,
    accumulate,
    default_geweke_settings,
    doc_term_probability,
    geweke_check,
    heldout_perplexity,
    merged,
    summarize_parameters,
)
from .models import (
    HyperParams,
    IterationError,
    ModelKind,
    ModelState,
    beta_nb_sweep,
    count_active_topics,
    crf_alpha_step,
    crf_gamma0_update,
    crf_hdp_sweep,
    forward_draw,
    gamma_nb_sweep,
    gibbs_sweep,
    initialize,
    lda_sweep,
    marked_beta_nb_sweep,
    marked_gamma_nb_sweep,
    nb_ftm_sweep,
    nb_hdp_sweep,
    nb_lda_sweep,
    sample_topic_assignments,
    simulate_data,
    update_topics,
    validate_state,
)
from .rng import RandomSource

__version__ = "0.1.0"
