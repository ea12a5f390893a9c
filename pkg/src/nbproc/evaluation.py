"""Held-out evaluation, trace records, and the Geweke correctness harness.

The held-out predictive probability of term v in document j is the
ratio of accumulated omega-times-weight products

    f[j, v] = sum_s sum_k omega[v, k] * w[j, k]  /  sum_s sum_v sum_k (same)

over collected samples s, with w the document's topic weights (lam, or
lam_tilde for normalized models, where the per-document scale cancels in
the ratio anyway).  Per-word perplexity is exp of the negative mean log
f over held-out tokens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import HeldOutSplit
from .models import (
    HyperParams,
    ModelKind,
    ModelState,
    count_active_topics,
    forward_draw,
    gibbs_sweep,
    simulate_data,
)
from .rng import RandomSource


class EvaluationError(ValueError):
    """Held-out evaluation hit an impossible value (e.g. zero mass)."""


class HarnessError(RuntimeError):
    """The correctness harness produced a non-finite statistic."""


@dataclass
class SampleAccumulator:
    """Running sums of omega-weight products across collected samples."""

    num_samples: int
    weighted_term_mass: np.ndarray  # documents x vocabulary
    doc_totals: np.ndarray  # per-document denominators

    @classmethod
    def empty(cls, num_docs: int, vocab_size: int) -> "SampleAccumulator":
        return cls(
            num_samples=0,
            weighted_term_mass=np.zeros((num_docs, vocab_size)),
            doc_totals=np.zeros(num_docs),
        )


def accumulate(acc: SampleAccumulator, state: ModelState) -> SampleAccumulator:
    """Fold one collected sample's omega-weight products into the sums."""
    weights = state.topic_weights()
    if weights.shape[0] != acc.weighted_term_mass.shape[0] or state.vocab_size != acc.weighted_term_mass.shape[1]:
        raise ValueError(
            f"accumulator shape {acc.weighted_term_mass.shape} does not match "
            f"state ({weights.shape[0]}, {state.vocab_size})"
        )
    contribution = weights @ state.omega  # documents x vocabulary
    acc.weighted_term_mass += contribution
    acc.doc_totals += contribution.sum(axis=1)
    acc.num_samples += 1
    return acc


def merged(a: SampleAccumulator, b: SampleAccumulator) -> SampleAccumulator:
    """Combine two accumulators (e.g. from parallel chains)."""
    if a.weighted_term_mass.shape != b.weighted_term_mass.shape:
        raise ValueError("cannot merge accumulators of different shapes")
    return SampleAccumulator(
        num_samples=a.num_samples + b.num_samples,
        weighted_term_mass=a.weighted_term_mass + b.weighted_term_mass,
        doc_totals=a.doc_totals + b.doc_totals,
    )


def doc_term_probability(acc: SampleAccumulator) -> np.ndarray:
    """The normalized predictive matrix f[j, v] (rows sum to 1)."""
    if acc.num_samples < 1:
        raise EvaluationError("no samples collected yet")
    return acc.weighted_term_mass / acc.doc_totals[:, None]


def heldout_perplexity(acc: SampleAccumulator, split: HeldOutSplit) -> float:
    """Per-word perplexity of the held-out tokens under the accumulator.

    Documents without test tokens contribute nothing.  Uniform f gives
    exactly the vocabulary size; a perfect predictor approaches 1.
    """
    if acc.num_samples < 1:
        raise EvaluationError("no samples collected yet")
    if split.total_test < 1:
        raise EvaluationError("the split holds out no tokens")
    f = doc_term_probability(acc)
    log_total = 0.0
    for j, test_terms in enumerate(split.test_tokens):
        if len(test_terms) == 0:
            continue
        probs = f[j, test_terms]
        if np.any(probs <= 0.0):
            raise EvaluationError(f"zero predictive mass for a held-out token of document {j}")
        log_total += float(np.log(probs).sum())
    return float(math.exp(-log_total / split.total_test))


@dataclass
class TraceReport:
    """Per-iteration scalar diagnostics plus the final summary."""

    records: list[dict] = field(default_factory=list)
    final: dict = field(default_factory=dict)

    COLUMNS = ("iteration", "perplexity", "active_topics", "r_sum", "mean_p", "gamma0", "alpha")

    def append(self, **record) -> None:
        self.records.append({c: record.get(c) for c in self.COLUMNS})


def trace_scalars(state: ModelState) -> dict:
    """The per-iteration scalar summaries of a state."""
    kind = state.kind
    if kind in (ModelKind.NB_LDA, ModelKind.BETA_NB):
        r_sum = float(state.r_j.sum())
    elif kind in (ModelKind.LDA, ModelKind.DIR_PFA, ModelKind.CRF_HDP):
        r_sum = float("nan")
    else:
        r_sum = float(state.r_k.sum())
    if kind in (ModelKind.BETA_NB, ModelKind.MARKED_BETA_NB, ModelKind.MARKED_GAMMA_NB):
        mean_p = float(state.p_k.mean())
    elif kind.models_counts:
        mean_p = float(state.p_j.mean())
    else:
        mean_p = float("nan")
    samples_gamma0 = kind.models_counts and kind not in (ModelKind.BETA_NB, ModelKind.MARKED_BETA_NB)
    return {
        "active_topics": count_active_topics(state),
        "r_sum": r_sum,
        "mean_p": mean_p,
        "gamma0": float(state.gamma0) if samples_gamma0 else float("nan"),
        "alpha": float(state.alpha) if kind == ModelKind.CRF_HDP else float("nan"),
    }


# ---------------------------------------------------------------------------
# Parameter summaries.
# ---------------------------------------------------------------------------


def summarize_parameters(state: ModelState) -> dict:
    """Ordered dump of per-topic and per-document parameters.

    Topics and documents are sorted by their assigned token counts,
    descending; each applicable parameter is reported in linear and
    log10 scale.  Returns {"topics": [...], "documents": [...]} where
    each entry is a flat dict ready for CSV emission.
    """
    kind = state.kind
    topic_tokens = state.n_jk.sum(axis=0)
    doc_tokens = state.n_jk.sum(axis=1)

    def _with_log(row: dict, name: str, value: float | None) -> None:
        if value is None:
            row[name] = row[f"log10_{name}"] = None
        else:
            row[name] = float(value)
            row[f"log10_{name}"] = float(np.log10(value)) if value > 0 else None

    topics = []
    topic_has_r = kind in (
        ModelKind.GAMMA_NB,
        ModelKind.NB_HDP,
        ModelKind.NB_FTM,
        ModelKind.MARKED_BETA_NB,
        ModelKind.MARKED_GAMMA_NB,
    )
    topic_has_p = kind in (ModelKind.BETA_NB, ModelKind.MARKED_BETA_NB, ModelKind.MARKED_GAMMA_NB)
    for rank, k in enumerate(np.argsort(-topic_tokens, kind="stable")):
        row = {"rank": rank, "index": int(k), "tokens": int(topic_tokens[k])}
        _with_log(row, "r", state.r_k[k] if topic_has_r else None)
        _with_log(row, "p", state.p_k[k] if topic_has_p else None)
        _with_log(row, "pi", state.pi_k[k] if kind == ModelKind.NB_FTM else None)
        topics.append(row)

    documents = []
    doc_has_r = kind in (ModelKind.NB_LDA, ModelKind.BETA_NB)
    doc_has_p = kind in (ModelKind.NB_LDA, ModelKind.GAMMA_NB, ModelKind.NB_HDP, ModelKind.NB_FTM)
    for rank, j in enumerate(np.argsort(-doc_tokens, kind="stable")):
        row = {"rank": rank, "index": int(j), "tokens": int(doc_tokens[j])}
        _with_log(row, "r", state.r_j[j] if doc_has_r else None)
        _with_log(row, "p", state.p_j[j] if doc_has_p else None)
        documents.append(row)
    return {"topics": topics, "documents": documents}


# ---------------------------------------------------------------------------
# Geweke joint-distribution harness.
# ---------------------------------------------------------------------------


@dataclass
class GewekeSettings:
    """Micro-scale configuration for the joint-distribution check.

    Kept deliberately tiny (a few documents, two topics, a handful of
    terms) so tens of thousands of sweeps are affordable.  The priors
    are tightened relative to the experiment defaults so every
    monitored statistic has finite variance; heavy-tailed priors would
    make the z-scores meaningless.
    """

    hyper: HyperParams
    num_docs: int = 3
    vocab_size: int = 5
    doc_length: int = 15  # only used by normalized kinds


def default_geweke_settings(kind: ModelKind) -> GewekeSettings:
    # Beta(3, 3) probability priors keep second moments of the counts
    # finite; the beta-process kinds get c = 6 so c/K = c(1-1/K) = 3.
    c = 6.0 if kind in (ModelKind.BETA_NB, ModelKind.MARKED_BETA_NB) else 1.0
    hyper = HyperParams(c=c, eta=0.3, a0=3.0, b0=3.0, e0=1.0, f0=1.0, K=2, iters=2, burnin=0, init_iters=0)
    return GewekeSettings(hyper=hyper)


def _monitored_stats(state: ModelState) -> dict[str, float]:
    kind = state.kind
    stats: dict[str, float] = {}
    if kind.models_counts:
        stats["n_total"] = float(state.n_jk.sum())
    if kind in (ModelKind.GAMMA_NB, ModelKind.NB_HDP, ModelKind.NB_FTM, ModelKind.MARKED_BETA_NB, ModelKind.MARKED_GAMMA_NB):
        stats["r_mean"] = float(state.r_k.mean())
        stats["r_sq_mean"] = float((state.r_k**2).mean())
    if kind in (ModelKind.NB_LDA, ModelKind.BETA_NB):
        stats["r_mean"] = float(state.r_j.mean())
        stats["r_sq_mean"] = float((state.r_j**2).mean())
    if kind in (ModelKind.GAMMA_NB, ModelKind.NB_LDA):
        stats["p_mean"] = float(state.p_j.mean())
        stats["p_sq_mean"] = float((state.p_j**2).mean())
    if kind in (ModelKind.BETA_NB, ModelKind.MARKED_BETA_NB, ModelKind.MARKED_GAMMA_NB):
        stats["p_mean"] = float(state.p_k.mean())
        stats["p_sq_mean"] = float((state.p_k**2).mean())
    if kind in (ModelKind.GAMMA_NB, ModelKind.NB_HDP, ModelKind.NB_LDA, ModelKind.NB_FTM, ModelKind.MARKED_GAMMA_NB):
        stats["gamma0"] = float(state.gamma0)
        stats["gamma0_sq"] = float(state.gamma0**2)
    if kind == ModelKind.NB_FTM:
        stats["pi_mean"] = float(state.pi_k.mean())
        stats["pi_sq_mean"] = float((state.pi_k**2).mean())
        stats["gate_mean"] = float(state.b_jk.mean())
    if kind == ModelKind.CRF_HDP:
        stats["alpha"] = float(state.alpha)
        stats["alpha_sq"] = float(state.alpha**2)
        stats["rtilde_sq_mean"] = float((state.r_tilde**2).mean())
        stats["ltilde_sq_mean"] = float((state.lam_tilde**2).mean())
        stats["n_sq_mean"] = float((state.n_jk.astype(float) ** 2).mean())
    return stats


def _batch_se(chain: np.ndarray) -> float:
    """Standard error of a correlated chain mean via sqrt-size batches."""
    n = len(chain)
    batch = max(1, int(math.sqrt(n)))
    num_batches = n // batch
    means = chain[: num_batches * batch].reshape(num_batches, batch).mean(axis=1)
    if num_batches < 2:
        return float(chain.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return float(means.std(ddof=1) / math.sqrt(num_batches))


@dataclass
class GewekeReport:
    kind: ModelKind
    num_forward: int
    num_gibbs: int
    z_scores: dict[str, float]
    forward_means: dict[str, float]
    chain_means: dict[str, float]

    @property
    def max_abs_z(self) -> float:
        return max(abs(z) for z in self.z_scores.values())

    def passed(self, threshold: float = 4.0) -> bool:
        return self.max_abs_z < threshold


def geweke_check(
    kind: ModelKind,
    settings: GewekeSettings,
    num_forward: int,
    num_gibbs: int,
    rng: RandomSource,
    fault: str | None = None,
) -> GewekeReport:
    """Compare forward draws against the Gibbs kernel's stationary law.

    Marginal-conditional side: ``num_forward`` independent draws of
    (parameters, data).  Successive-conditional side: a chain of
    ``num_gibbs`` steps alternating one kernel sweep with a re-draw of
    the data given the new parameters.  If the kernel targets the right
    conditionals, every monitored statistic agrees between the two sides
    up to Monte Carlo error; the returned z-scores quantify that.

    ``fault`` injects a named kernel corruption (e.g. ``"r-shape"``) so
    the harness can demonstrate it catches broken updates.
    """
    if num_forward < 1 or num_gibbs < 1:
        raise ValueError("num_forward and num_gibbs must both be at least 1")
    hyper = settings.hyper
    doc_lengths = np.full(settings.num_docs, settings.doc_length) if kind.uses_normalized_weights else None

    forward_rows = []
    for _ in range(num_forward):
        state = forward_draw(kind, hyper, settings.num_docs, settings.vocab_size, rng, doc_lengths=doc_lengths)
        forward_rows.append(_monitored_stats(state))

    state = forward_draw(kind, hyper, settings.num_docs, settings.vocab_size, rng, doc_lengths=doc_lengths)
    chain_rows = []
    for _ in range(num_gibbs):
        gibbs_sweep(state, hyper, rng, fault=fault)
        simulate_data(state, rng, doc_lengths=doc_lengths)
        chain_rows.append(_monitored_stats(state))

    names = sorted(forward_rows[0])
    z_scores, f_means, c_means = {}, {}, {}
    for name in names:
        f = np.array([row[name] for row in forward_rows])
        c = np.array([row[name] for row in chain_rows])
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(c))):
            raise HarnessError(f"non-finite values for monitored statistic {name!r}")
        se_f = float(f.std(ddof=1) / math.sqrt(len(f))) if len(f) > 1 else float("inf")
        se_c = _batch_se(c)
        denom = math.sqrt(se_f**2 + se_c**2)
        z = (f.mean() - c.mean()) / denom if denom > 0 else 0.0
        if not math.isfinite(z):
            raise HarnessError(f"non-finite z-score for monitored statistic {name!r}")
        z_scores[name] = float(z)
        f_means[name] = float(f.mean())
        c_means[name] = float(c.mean())
    return GewekeReport(
        kind=kind,
        num_forward=num_forward,
        num_gibbs=num_gibbs,
        z_scores=z_scores,
        forward_means=f_means,
        chain_means=c_means,
    )
