"""Model state, initialization, and one-iteration block Gibbs kernels.

Each model variant couples per-document topic weights ``lam[j, k]`` (or
normalized weights ``lam_tilde``) with topic distributions ``omega[k]``
over the vocabulary.  The variants differ in which negative-binomial
parameters are shared and inferred:

==================  =====================================================
kind                inferred count parameters
==================  =====================================================
lda / dir-pfa       none (normalized weights with fixed smoothing)
crf-hdp             concentration alpha (normalized weights)
nb-lda              per-document r_j, p_j
nb-hdp              shared r_k, p_j fixed at 0.5
nb-ftm              shared r_k, sparsity pi_k with binary gates, p = 0.5
beta-nb             per-document r_j, per-topic p_k
gamma-nb            shared r_k, per-document p_j
marked-beta-nb      per-topic r_k and p_k (r_k ~ Gamma(e0, 1/f0))
marked-gamma-nb     per-topic r_k and p_k (r_k ~ Gamma(gamma0/K, 1/c))
==================  =====================================================

All kernels run a full-corpus scan in a fixed order: topic assignments
first, then count-parameter updates, topic distributions last.  The
dispersion updates rely on CRT table-count augmentation, which makes
every conditional a gamma, beta, or Dirichlet draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distributions import (
    PROB_CEIL,
    PROB_FLOOR,
    TINY,
    sample_beta,
    sample_crt_array,
    sample_dirichlet,
    sample_gamma,
)
from .rng import RandomSource


class IterationError(RuntimeError):
    """A Gibbs update produced a non-finite value; names the variable."""

    def __init__(self, variable: str, detail: str = ""):
        self.variable = variable
        msg = f"non-finite value in update of '{variable}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ModelKind(Enum):
    LDA = "lda"
    DIR_PFA = "dir-pfa"
    NB_LDA = "nb-lda"
    NB_HDP = "nb-hdp"
    NB_FTM = "nb-ftm"
    BETA_NB = "beta-nb"
    GAMMA_NB = "gamma-nb"
    MARKED_BETA_NB = "marked-beta-nb"
    MARKED_GAMMA_NB = "marked-gamma-nb"
    CRF_HDP = "crf-hdp"

    @classmethod
    def from_name(cls, name: str) -> "ModelKind":
        normalized = name.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == normalized:
                return kind
        raise ValueError(f"unknown model kind {name!r}; choose from {[k.value for k in cls]}")

    @property
    def uses_normalized_weights(self) -> bool:
        """True for models whose topic weights are probability vectors."""
        return self in (ModelKind.LDA, ModelKind.DIR_PFA, ModelKind.CRF_HDP)

    @property
    def models_counts(self) -> bool:
        """True when document lengths are themselves generated (Poisson)."""
        return not self.uses_normalized_weights


@dataclass
class HyperParams:
    """Fixed scalars of the model family and the sampling schedule.

    Defaults follow the standard protocol: c = 1, eta = 0.05,
    a0 = b0 = e0 = f0 = 0.01, truncation K = 400, 2500 sweeps with the
    last 1500 collected, and 50 warm-up sweeps with dispersion frozen at
    50/K and p at 0.5.  ``lda_alpha_total / K`` is the Dirichlet
    smoothing of normalized topic weights.
    """

    c: float = 1.0
    eta: float = 0.05
    a0: float = 0.01
    b0: float = 0.01
    e0: float = 0.01
    f0: float = 0.01
    K: int = 400
    lda_alpha_total: float = 50.0
    iters: int = 2500
    burnin: int = 1000
    collect_every: int = 1
    init_iters: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("c", "eta", "a0", "b0", "e0", "f0", "lda_alpha_total"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.iters < 1:
            raise ValueError(f"iters must be >= 1, got {self.iters}")
        if not 0 <= self.burnin < self.iters:
            raise ValueError(f"need 0 <= burnin < iters, got burnin={self.burnin}, iters={self.iters}")
        if self.collect_every < 1:
            raise ValueError(f"collect_every must be >= 1, got {self.collect_every}")
        if self.init_iters < 0:
            raise ValueError(f"init_iters must be >= 0, got {self.init_iters}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def replace(self, **overrides) -> "HyperParams":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(overrides)
        return HyperParams(**values)


@dataclass
class ModelState:
    """Truncated random-measure realization plus token assignments.

    Fields a given kind never updates stay at their initial values; the
    training tokens travel with the state so a kernel sweep is
    self-contained.  ``lam`` holds unnormalized topic weights,
    ``lam_tilde`` their normalized counterpart for lda/dir-pfa/crf-hdp.
    """

    kind: ModelKind
    eta: float
    tokens: tuple[np.ndarray, ...]  # per-document training term ids
    z: list[np.ndarray]  # per-token topic assignments, aligned with tokens
    n_jk: np.ndarray  # documents x topics counts derived from z
    omega: np.ndarray  # topics x vocabulary distributions
    lam: np.ndarray  # documents x topics weights
    lam_tilde: np.ndarray  # normalized weights (rows sum to 1)
    r_k: np.ndarray
    r_j: np.ndarray
    p_k: np.ndarray
    p_j: np.ndarray
    pi_k: np.ndarray
    b_jk: np.ndarray  # binary gates (nb-ftm)
    gamma0: float
    alpha: float
    l_jk: np.ndarray  # CRT table counts
    l_k_prime: np.ndarray
    p_prime: float
    r_tilde: np.ndarray

    @property
    def num_docs(self) -> int:
        return len(self.tokens)

    @property
    def num_topics(self) -> int:
        return self.omega.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.omega.shape[1]

    @property
    def train_counts(self) -> np.ndarray:
        return np.array([len(t) for t in self.tokens], dtype=np.int64)

    def topic_weights(self) -> np.ndarray:
        """The weights the assignment step uses for this kind."""
        return self.lam_tilde if self.kind.uses_normalized_weights else self.lam

    def clone(self) -> "ModelState":
        return ModelState(
            kind=self.kind,
            eta=self.eta,
            tokens=tuple(t.copy() for t in self.tokens),
            z=[z.copy() for z in self.z],
            n_jk=self.n_jk.copy(),
            omega=self.omega.copy(),
            lam=self.lam.copy(),
            lam_tilde=self.lam_tilde.copy(),
            r_k=self.r_k.copy(),
            r_j=self.r_j.copy(),
            p_k=self.p_k.copy(),
            p_j=self.p_j.copy(),
            pi_k=self.pi_k.copy(),
            b_jk=self.b_jk.copy(),
            gamma0=self.gamma0,
            alpha=self.alpha,
            l_jk=self.l_jk.copy(),
            l_k_prime=self.l_k_prime.copy(),
            p_prime=self.p_prime,
            r_tilde=self.r_tilde.copy(),
        )


def _check_finite(name: str, value) -> None:
    arr = np.asarray(value)
    if not np.all(np.isfinite(arr)):
        raise IterationError(name)


def _gamma_clamped(gen: np.random.Generator, shape, scale) -> np.ndarray:
    return np.maximum(gen.gamma(shape, scale), TINY)


def _beta_clamped(gen: np.random.Generator, a, b) -> np.ndarray:
    return np.clip(gen.beta(a, b), PROB_FLOOR, PROB_CEIL)


def _dirichlet_rows(gen: np.random.Generator, concentration: np.ndarray) -> np.ndarray:
    g = np.maximum(gen.gamma(concentration, 1.0), TINY)
    return g / g.sum(axis=1, keepdims=True)


def blank_state(kind: ModelKind, tokens, vocab_size: int, num_topics: int, eta: float) -> ModelState:
    """A structurally valid state with neutral parameter values."""
    tokens = tuple(np.asarray(t, dtype=np.int64) for t in tokens)
    J, K, V = len(tokens), num_topics, vocab_size
    return ModelState(
        kind=kind,
        eta=float(eta),
        tokens=tokens,
        z=[np.zeros(len(t), dtype=np.int64) for t in tokens],
        n_jk=np.zeros((J, K), dtype=np.int64),
        omega=np.full((K, V), 1.0 / V),
        lam=np.ones((J, K)),
        lam_tilde=np.full((J, K), 1.0 / K),
        r_k=np.ones(K),
        r_j=np.ones(J),
        p_k=np.full(K, 0.5),
        p_j=np.full(J, 0.5),
        pi_k=np.full(K, 0.5),
        b_jk=np.ones((J, K), dtype=np.int64),
        gamma0=1.0,
        alpha=1.0,
        l_jk=np.zeros((J, K), dtype=np.int64),
        l_k_prime=np.zeros(K, dtype=np.int64),
        p_prime=0.5,
        r_tilde=np.full(K, 1.0 / K),
    )


def _recount(state: ModelState) -> None:
    K = state.num_topics
    state.n_jk = np.vstack(
        [np.bincount(z, minlength=K) if len(z) else np.zeros(K, dtype=np.int64) for z in state.z]
    ).astype(np.int64)


def _assign(state: ModelState, weights: np.ndarray, rng: RandomSource, doc_rngs=None, executor=None) -> None:
    """Reassign every training token to a topic given current weights."""
    omega = state.omega

    def draw(j: int, gen: np.random.Generator) -> np.ndarray:
        terms = state.tokens[j]
        n = len(terms)
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        w = omega[:, terms].T * weights[j]  # tokens x topics
        cum = np.cumsum(w, axis=1)
        totals = cum[:, -1]
        if not np.all(np.isfinite(totals)) or not np.all(totals > 0):
            raise IterationError("z-weights", f"document {j} has no admissible topic")
        u = gen.random(n) * totals
        return (cum < u[:, None]).sum(axis=1).astype(np.int64)

    if doc_rngs is not None:
        if executor is not None:
            state.z = list(executor.map(lambda j: draw(j, doc_rngs[j].generator), range(state.num_docs)))
        else:
            state.z = [draw(j, doc_rngs[j].generator) for j in range(state.num_docs)]
    else:
        gen = rng.generator
        state.z = [draw(j, gen) for j in range(state.num_docs)]
    _recount(state)


def sample_topic_assignments(state: ModelState, rng: RandomSource, doc_rngs=None, executor=None) -> ModelState:
    """Resample z for every training token and refresh n_jk.

    Probability of topic k for a token with term v is proportional to
    omega[k, v] times the document's weight for k (lam or lam_tilde).
    With ``doc_rngs`` given, each document draws from its own source
    (optionally through ``executor``), which yields a different but
    equally valid chain than the single-source mode.
    """
    _assign(state, state.topic_weights(), rng, doc_rngs=doc_rngs, executor=executor)
    return state


def update_topics(state: ModelState, rng: RandomSource) -> ModelState:
    """Resample every topic row from its Dirichlet posterior."""
    K, V = state.omega.shape
    all_z = np.concatenate(state.z) if state.z else np.zeros(0, dtype=np.int64)
    all_terms = np.concatenate(state.tokens) if state.tokens else np.zeros(0, dtype=np.int64)
    counts = np.bincount(all_z * V + all_terms, minlength=K * V).reshape(K, V)
    state.omega = _dirichlet_rows(rng.generator, state.eta + counts)
    return state


# ---------------------------------------------------------------------------
# Block Gibbs kernels, one per model kind.
# ---------------------------------------------------------------------------


def _gamma_nb_core(state, hyper, rng, update_p: bool, doc_rngs=None, executor=None, fault=None):
    _assign(state, state.lam, rng, doc_rngs, executor)
    gen = rng.generator
    K = state.num_topics
    train_n = state.train_counts
    if update_p:
        state.p_j = _beta_clamped(gen, hyper.a0 + train_n, hyper.b0 + state.r_k.sum())
        _check_finite("p_j", state.p_j)
    log1mp_sum = float(np.log1p(-state.p_j).sum())
    state.p_prime = -log1mp_sum / (hyper.c - log1mp_sum)
    _check_finite("p_prime", state.p_prime)
    state.l_jk = sample_crt_array(state.n_jk, state.r_k[None, :], rng)
    tables_per_topic = state.l_jk.sum(axis=0)
    state.l_k_prime = sample_crt_array(tables_per_topic, state.gamma0 / K, rng)
    gamma0_rate = hyper.f0 - math.log1p(-state.p_prime)
    state.gamma0 = float(_gamma_clamped(gen, hyper.e0 + state.l_k_prime.sum(), 1.0 / gamma0_rate))
    _check_finite("gamma0", state.gamma0)
    r_shape = state.gamma0 / K + tables_per_topic
    if fault == "r-shape":  # deliberate corruption for harness self-checks
        r_shape = r_shape + 1.0
    state.r_k = _gamma_clamped(gen, r_shape, 1.0 / (hyper.c - log1mp_sum))
    _check_finite("r_k", state.r_k)
    state.lam = _gamma_clamped(gen, state.r_k[None, :] + state.n_jk, state.p_j[:, None])
    _check_finite("lam", state.lam)
    update_topics(state, rng)
    return state


def gamma_nb_sweep(state, hyper, rng, doc_rngs=None, executor=None, fault=None):
    """One sweep sharing dispersion r_k across documents, learning p_j.

    Order: z; p_j ~ Beta(a0 + N_j, b0 + sum_k r_k); mixed probability
    p'; table counts l_jk ~ CRT(n_jk, r_k) and l'_k ~ CRT(sum_j l_jk,
    gamma0/K); total mass gamma0; dispersions r_k; weights
    lam_jk ~ Gamma(r_k + n_jk, p_j); topics.
    """
    return _gamma_nb_core(state, hyper, rng, update_p=True, doc_rngs=doc_rngs, executor=executor, fault=fault)


def nb_hdp_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """Gamma-NB sweep with every p_j pinned at 0.5 (never resampled)."""
    return _gamma_nb_core(state, hyper, rng, update_p=False, doc_rngs=doc_rngs, executor=executor)


def nb_lda_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """One sweep with document-wise dispersion r_j and probability p_j.

    Documents share strength only through gamma0, the shape of the r_j
    prior, which pools per-document table counts l'_j.
    """
    _assign(state, state.lam, rng, doc_rngs, executor)
    gen = rng.generator
    K = state.num_topics
    train_n = state.train_counts
    state.p_j = _beta_clamped(gen, hyper.a0 + train_n, hyper.b0 + K * state.r_j)
    _check_finite("p_j", state.p_j)
    log1mp = np.log1p(-state.p_j)
    p_prime_j = (-K * log1mp) / (hyper.c - K * log1mp)
    _check_finite("p_prime_j", p_prime_j)
    state.l_jk = sample_crt_array(state.n_jk, state.r_j[:, None], rng)
    tables_per_doc = state.l_jk.sum(axis=1)
    l_prime_j = sample_crt_array(tables_per_doc, state.gamma0, rng)
    gamma0_rate = hyper.f0 - float(np.log1p(-p_prime_j).sum())
    state.gamma0 = float(_gamma_clamped(gen, hyper.e0 + l_prime_j.sum(), 1.0 / gamma0_rate))
    _check_finite("gamma0", state.gamma0)
    state.r_j = _gamma_clamped(gen, state.gamma0 + tables_per_doc, 1.0 / (hyper.c - K * log1mp))
    _check_finite("r_j", state.r_j)
    state.lam = _gamma_clamped(gen, state.r_j[:, None] + state.n_jk, state.p_j[:, None])
    _check_finite("lam", state.lam)
    update_topics(state, rng)
    return state


def nb_ftm_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """One sweep of the gated model: sparsity pi_k, binary gates b_jk.

    A zero gate pins lam_jk to exactly 0, removing topic k from
    document j's assignment weights; n_jk > 0 forces the gate open.
    p is fixed at 0.5 throughout.
    """
    _assign(state, state.lam, rng, doc_rngs, executor)
    gen = rng.generator
    J, K = state.n_jk.shape
    log_half = math.log(0.5)
    # gate: off cells compete pi_k * 0.5^{r_k} against (1 - pi_k)
    on_mass = state.pi_k[None, :] * np.exp(state.r_k[None, :] * log_half)
    gate_prob = on_mass / (on_mass + (1.0 - state.pi_k[None, :]))
    proposed = (gen.random((J, K)) < gate_prob).astype(np.int64)
    state.b_jk = np.where(state.n_jk > 0, 1, proposed)
    gates_per_topic = state.b_jk.sum(axis=0)
    state.pi_k = _beta_clamped(
        gen, hyper.c / K + gates_per_topic, hyper.c * (1.0 - 1.0 / K) + J - gates_per_topic
    )
    _check_finite("pi_k", state.pi_k)
    p_prime_k = (-gates_per_topic * log_half) / (hyper.c - gates_per_topic * log_half)
    state.l_jk = sample_crt_array(state.n_jk, state.r_k[None, :] * state.b_jk, rng)
    tables_per_topic = state.l_jk.sum(axis=0)
    state.l_k_prime = sample_crt_array(tables_per_topic, state.gamma0, rng)
    gamma0_rate = hyper.f0 - float(np.log1p(-p_prime_k).sum())
    state.gamma0 = float(_gamma_clamped(gen, hyper.e0 + state.l_k_prime.sum(), 1.0 / gamma0_rate))
    _check_finite("gamma0", state.gamma0)
    state.r_k = _gamma_clamped(gen, state.gamma0 + tables_per_topic, 1.0 / (hyper.c - gates_per_topic * log_half))
    _check_finite("r_k", state.r_k)
    lam_shape = state.r_k[None, :] * state.b_jk + state.n_jk
    open_gate = lam_shape > 0
    draws = _gamma_clamped(gen, np.where(open_gate, lam_shape, 1.0), 0.5)
    state.lam = np.where(open_gate, draws, 0.0)
    _check_finite("lam", state.lam)
    update_topics(state, rng)
    return state


def beta_nb_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """One sweep sharing per-topic p_k across documents, learning r_j."""
    _assign(state, state.lam, rng, doc_rngs, executor)
    gen = rng.generator
    J, K = state.n_jk.shape
    tokens_per_topic = state.n_jk.sum(axis=0)
    state.p_k = _beta_clamped(
        gen, hyper.c / K + tokens_per_topic, hyper.c * (1.0 - 1.0 / K) + state.r_j.sum()
    )
    _check_finite("p_k", state.p_k)
    state.l_jk = sample_crt_array(state.n_jk, state.r_j[:, None], rng)
    tables_per_doc = state.l_jk.sum(axis=1)
    log1mp_sum = float(np.log1p(-state.p_k).sum())
    state.r_j = _gamma_clamped(gen, hyper.e0 + tables_per_doc, 1.0 / (hyper.f0 - log1mp_sum))
    _check_finite("r_j", state.r_j)
    state.lam = _gamma_clamped(gen, state.r_j[:, None] + state.n_jk, state.p_k[None, :])
    _check_finite("lam", state.lam)
    update_topics(state, rng)
    return state


def marked_beta_nb_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """One sweep with both r_k and p_k shared across documents."""
    _assign(state, state.lam, rng, doc_rngs, executor)
    gen = rng.generator
    J, K = state.n_jk.shape
    tokens_per_topic = state.n_jk.sum(axis=0)
    state.p_k = _beta_clamped(
        gen, hyper.c / K + tokens_per_topic, hyper.c * (1.0 - 1.0 / K) + J * state.r_k
    )
    _check_finite("p_k", state.p_k)
    state.l_jk = sample_crt_array(state.n_jk, state.r_k[None, :], rng)
    tables_per_topic = state.l_jk.sum(axis=0)
    state.r_k = _gamma_clamped(
        gen, hyper.e0 + tables_per_topic, 1.0 / (hyper.f0 - J * np.log1p(-state.p_k))
    )
    _check_finite("r_k", state.r_k)
    state.lam = _gamma_clamped(gen, state.r_k[None, :] + state.n_jk, state.p_k[None, :])
    _check_finite("lam", state.lam)
    update_topics(state, rng)
    return state


def marked_gamma_nb_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """Marked variant with a gamma-process dispersion measure.

    Like marked-beta-nb but r_k ~ Gamma(gamma0/K, 1/c) with gamma0
    resampled from pooled per-topic table counts l'_k.
    """
    _assign(state, state.lam, rng, doc_rngs, executor)
    gen = rng.generator
    J, K = state.n_jk.shape
    tokens_per_topic = state.n_jk.sum(axis=0)
    state.p_k = _beta_clamped(gen, hyper.a0 + tokens_per_topic, hyper.b0 + J * state.r_k)
    _check_finite("p_k", state.p_k)
    log1mp = np.log1p(-state.p_k)
    p_prime_k = (-J * log1mp) / (hyper.c - J * log1mp)
    _check_finite("p_prime_k", p_prime_k)
    state.l_jk = sample_crt_array(state.n_jk, state.r_k[None, :], rng)
    tables_per_topic = state.l_jk.sum(axis=0)
    state.l_k_prime = sample_crt_array(tables_per_topic, state.gamma0 / K, rng)
    gamma0_rate = hyper.f0 - float(np.log1p(-p_prime_k).sum()) / K
    state.gamma0 = float(_gamma_clamped(gen, hyper.e0 + state.l_k_prime.sum(), 1.0 / gamma0_rate))
    _check_finite("gamma0", state.gamma0)
    state.r_k = _gamma_clamped(gen, state.gamma0 / K + tables_per_topic, 1.0 / (hyper.c - J * log1mp))
    _check_finite("r_k", state.r_k)
    state.lam = _gamma_clamped(gen, state.r_k[None, :] + state.n_jk, state.p_k[None, :])
    _check_finite("lam", state.lam)
    update_topics(state, rng)
    return state


def crf_hdp_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """Direct-assignment sweep of the normalized (franchise) model.

    Table counts l_jk ~ CRT(n_jk, alpha * r_tilde_k) feed the
    concentration update through the usual beta/Bernoulli auxiliaries
    (w_j, s_j, transient here); gamma0 stays fixed at 1 because its
    finite-truncation sampler is biased (see ``crf_gamma0_update``).
    """
    _assign(state, state.lam_tilde, rng, doc_rngs, executor)
    gen = rng.generator
    J, K = state.n_jk.shape
    state.l_jk = sample_crt_array(state.n_jk, (state.alpha * state.r_tilde)[None, :], rng)
    state.alpha = crf_alpha_step(
        state.alpha, int(state.l_jk.sum()), state.train_counts, hyper.a0, hyper.b0, gen
    )
    _check_finite("alpha", state.alpha)
    tilde_conc = state.gamma0 / K + state.l_jk.sum(axis=0)
    state.r_tilde = np.maximum(gen.gamma(tilde_conc, 1.0), TINY)
    state.r_tilde = state.r_tilde / state.r_tilde.sum()
    _check_finite("r_tilde", state.r_tilde)
    state.lam_tilde = _dirichlet_rows(gen, state.alpha * state.r_tilde[None, :] + state.n_jk)
    _check_finite("lam_tilde", state.lam_tilde)
    update_topics(state, rng)
    return state


def crf_alpha_step(alpha: float, total_tables: int, doc_sizes: np.ndarray, a0: float, b0: float, gen) -> float:
    """One auxiliary-variable update of the franchise concentration.

    Given the current total table count and per-document sizes, draws
    the beta/Bernoulli auxiliaries (w_j, s_j) and then alpha from its
    resulting gamma conditional.  Empty documents contribute nothing.
    """
    doc_sizes = np.asarray(doc_sizes, dtype=np.float64)
    has_tokens = doc_sizes > 0
    w = _beta_clamped(gen, alpha + 1.0, np.maximum(doc_sizes, 1.0))
    w = np.where(has_tokens, w, 1.0)
    s = np.where(has_tokens, gen.random(len(doc_sizes)) < doc_sizes / (doc_sizes + alpha), False)
    shape = a0 + total_tables - s.sum()
    rate = b0 - float(np.log(w).sum())
    return float(_gamma_clamped(gen, shape, 1.0 / rate))


def crf_gamma0_update(state, hyper, rng) -> float:
    """Finite-truncation total-mass update for the franchise model.

    Mixture-of-gammas step driven by an auxiliary beta variable and the
    number of used topics.  Only approximately correct at finite K, so
    sweeps never call it; it is provided for experimentation and left
    disabled by default.  Returns the new gamma0 without touching the
    state when there are no tables yet.
    """
    total_tables = int(state.l_jk.sum())
    k_plus = count_active_topics(state)
    if total_tables < 1 or k_plus < 1:
        return state.gamma0
    gen = rng.generator
    w0 = float(_beta_clamped(gen, state.gamma0 + 1.0, float(total_tables)))
    rate = hyper.f0 - math.log(w0)
    head = hyper.e0 + k_plus - 1.0
    pi0 = head / (head + rate * total_tables)
    shape = hyper.e0 + k_plus if gen.random() < pi0 else hyper.e0 + k_plus - 1.0
    state.gamma0 = float(_gamma_clamped(gen, shape, 1.0 / rate))
    return state.gamma0


def lda_sweep(state, hyper, rng, doc_rngs=None, executor=None):
    """Normalized-weight sweep with fixed smoothing; also serves dir-pfa."""
    _assign(state, state.lam_tilde, rng, doc_rngs, executor)
    smoothing = hyper.lda_alpha_total / state.num_topics
    state.lam_tilde = _dirichlet_rows(rng.generator, smoothing + state.n_jk)
    _check_finite("lam_tilde", state.lam_tilde)
    update_topics(state, rng)
    return state


_SWEEPS = {
    ModelKind.LDA: lda_sweep,
    ModelKind.DIR_PFA: lda_sweep,
    ModelKind.NB_LDA: nb_lda_sweep,
    ModelKind.NB_HDP: nb_hdp_sweep,
    ModelKind.NB_FTM: nb_ftm_sweep,
    ModelKind.BETA_NB: beta_nb_sweep,
    ModelKind.GAMMA_NB: gamma_nb_sweep,
    ModelKind.MARKED_BETA_NB: marked_beta_nb_sweep,
    ModelKind.MARKED_GAMMA_NB: marked_gamma_nb_sweep,
    ModelKind.CRF_HDP: crf_hdp_sweep,
}


def gibbs_sweep(state, hyper, rng, doc_rngs=None, executor=None, fault=None):
    """Run one full block Gibbs sweep for the state's model kind."""
    if fault is not None:
        if state.kind is not ModelKind.GAMMA_NB:
            raise ValueError(f"fault injection is only wired into the gamma-nb kernel, not {state.kind.value}")
        return gamma_nb_sweep(state, hyper, rng, doc_rngs=doc_rngs, executor=executor, fault=fault)
    return _SWEEPS[state.kind](state, hyper, rng, doc_rngs=doc_rngs, executor=executor)


def count_active_topics(state: ModelState) -> int:
    """Number of topics with at least one assigned training token."""
    return int(np.count_nonzero(state.n_jk.sum(axis=0)))


# ---------------------------------------------------------------------------
# Initialization and forward simulation.
# ---------------------------------------------------------------------------


def _draw_count_params(state: ModelState, hyper: HyperParams, rng: RandomSource) -> None:
    """Draw the kind-specific count parameters from their priors."""
    gen = rng.generator
    kind = state.kind
    J, K = state.num_docs, state.num_topics
    if kind in (ModelKind.GAMMA_NB, ModelKind.NB_HDP, ModelKind.MARKED_GAMMA_NB):
        state.gamma0 = float(sample_gamma(hyper.e0, 1.0 / hyper.f0, rng))
        state.r_k = _gamma_clamped(gen, np.full(K, state.gamma0 / K), 1.0 / hyper.c)
    elif kind == ModelKind.NB_FTM:
        state.gamma0 = float(sample_gamma(hyper.e0, 1.0 / hyper.f0, rng))
        state.r_k = _gamma_clamped(gen, np.full(K, state.gamma0), 1.0 / hyper.c)
        state.pi_k = _beta_clamped(gen, np.full(K, hyper.c / K), np.full(K, hyper.c * (1.0 - 1.0 / K)))
    elif kind == ModelKind.NB_LDA:
        state.gamma0 = float(sample_gamma(hyper.e0, 1.0 / hyper.f0, rng))
        state.r_j = _gamma_clamped(gen, np.full(J, state.gamma0), 1.0 / hyper.c)
    elif kind == ModelKind.BETA_NB:
        state.r_j = _gamma_clamped(gen, np.full(J, hyper.e0), 1.0 / hyper.f0)
    elif kind == ModelKind.MARKED_BETA_NB:
        state.r_k = _gamma_clamped(gen, np.full(K, hyper.e0), 1.0 / hyper.f0)
    elif kind == ModelKind.CRF_HDP:
        state.gamma0 = 1.0
        state.r_tilde = sample_dirichlet(np.full(K, state.gamma0 / K), rng)
        state.alpha = float(sample_gamma(hyper.a0, 1.0 / hyper.b0, rng))

    if kind in (ModelKind.GAMMA_NB, ModelKind.NB_LDA):
        state.p_j = np.atleast_1d(sample_beta(np.full(J, hyper.a0), np.full(J, hyper.b0), rng))
    elif kind in (ModelKind.NB_HDP, ModelKind.NB_FTM):
        state.p_j = np.full(J, 0.5)
    if kind in (ModelKind.BETA_NB, ModelKind.MARKED_BETA_NB):
        state.p_k = _beta_clamped(gen, np.full(K, hyper.c / K), np.full(K, hyper.c * (1.0 - 1.0 / K)))
    elif kind == ModelKind.MARKED_GAMMA_NB:
        state.p_k = np.atleast_1d(sample_beta(np.full(K, hyper.a0), np.full(K, hyper.b0), rng))


def initialize(kind: ModelKind, corpus, split, hyper: HyperParams, rng: RandomSource) -> ModelState:
    """Build a starting state from the training half of a held-out split.

    Tokens are assigned to topics uniformly at random, weights and
    topics drawn from their priors, and ``hyper.init_iters`` warm-up
    sweeps are run with dispersion frozen at ``lda_alpha_total / K`` and
    p at 0.5 (only z, lam, omega move).  The resulting (z, omega, lam)
    seed the target kind, whose remaining parameters come from their
    priors; gates start fully open.
    """
    state = blank_state(kind, split.train_tokens, corpus.vocab_size, hyper.K, hyper.eta)
    gen = rng.generator
    J, K = state.num_docs, state.num_topics
    state.z = [gen.integers(0, K, size=len(t)).astype(np.int64) for t in state.tokens]
    _recount(state)
    state.omega = _dirichlet_rows(gen, np.full((K, corpus.vocab_size), hyper.eta))
    warm_r = hyper.lda_alpha_total / K
    state.lam = _gamma_clamped(gen, np.full((J, K), warm_r), 1.0)
    for _ in range(hyper.init_iters):
        _assign(state, state.lam, rng)
        state.lam = _gamma_clamped(gen, warm_r + state.n_jk, 0.5)
        update_topics(state, rng)
    _draw_count_params(state, hyper, rng)
    if kind.uses_normalized_weights:
        state.lam_tilde = state.lam / state.lam.sum(axis=1, keepdims=True)
    return state


def simulate_data(state: ModelState, rng: RandomSource, doc_lengths=None) -> ModelState:
    """Redraw the training tokens from the model given current parameters.

    Count models draw n_jk ~ Pois(lam_jk) and then n_jk terms from
    topic k; normalized models keep document lengths fixed (``doc_lengths``
    or the current ones) and draw each token's topic from lam_tilde.
    Used by forward simulation and the Geweke harness.
    """
    gen = rng.generator
    J, K = state.num_docs, state.num_topics
    V = state.vocab_size
    tokens: list[np.ndarray] = []
    zs: list[np.ndarray] = []
    if state.kind.models_counts:
        n_jk = gen.poisson(state.lam)
        for j in range(J):
            parts_t, parts_z = [], []
            for k in range(K):
                n = int(n_jk[j, k])
                if n == 0:
                    continue
                parts_t.append(gen.choice(V, size=n, p=state.omega[k]))
                parts_z.append(np.full(n, k, dtype=np.int64))
            if parts_t:
                tokens.append(np.concatenate(parts_t).astype(np.int64))
                zs.append(np.concatenate(parts_z))
            else:
                tokens.append(np.zeros(0, dtype=np.int64))
                zs.append(np.zeros(0, dtype=np.int64))
    else:
        lengths = state.train_counts if doc_lengths is None else np.asarray(doc_lengths, dtype=np.int64)
        for j in range(J):
            n = int(lengths[j])
            cum = np.cumsum(state.lam_tilde[j])
            z = np.searchsorted(cum, gen.random(n) * cum[-1], side="right").astype(np.int64)
            z = np.minimum(z, K - 1)
            terms = np.zeros(n, dtype=np.int64)
            for k in range(K):
                idx = np.nonzero(z == k)[0]
                if len(idx):
                    terms[idx] = gen.choice(V, size=len(idx), p=state.omega[k])
            tokens.append(terms)
            zs.append(z)
    state.tokens = tuple(tokens)
    state.z = zs
    _recount(state)
    return state


def forward_draw(
    kind: ModelKind,
    hyper: HyperParams,
    num_docs: int,
    vocab_size: int,
    rng: RandomSource,
    doc_lengths=None,
) -> ModelState:
    """Draw (parameters, data) jointly from the generative model.

    The marginal-conditional side of the Geweke harness; also handy for
    forward-model property checks.  ``doc_lengths`` is required for the
    normalized kinds, whose document lengths are not generated.
    """
    if kind in (ModelKind.LDA, ModelKind.DIR_PFA):
        raise ValueError(f"forward simulation is not defined for {kind.value}")
    if kind.uses_normalized_weights and doc_lengths is None:
        raise ValueError(f"{kind.value} needs explicit doc_lengths for forward simulation")
    state = blank_state(kind, [np.zeros(0, dtype=np.int64)] * num_docs, vocab_size, hyper.K, hyper.eta)
    gen = rng.generator
    _draw_count_params(state, hyper, rng)
    state.omega = _dirichlet_rows(gen, np.full((hyper.K, vocab_size), hyper.eta))
    J, K = num_docs, hyper.K
    kind_scales = {
        ModelKind.GAMMA_NB: lambda: (state.r_k[None, :], (state.p_j / (1 - state.p_j))[:, None]),
        ModelKind.NB_HDP: lambda: (state.r_k[None, :], (state.p_j / (1 - state.p_j))[:, None]),
        ModelKind.NB_LDA: lambda: (state.r_j[:, None], (state.p_j / (1 - state.p_j))[:, None]),
        ModelKind.BETA_NB: lambda: (state.r_j[:, None], (state.p_k / (1 - state.p_k))[None, :]),
        ModelKind.MARKED_BETA_NB: lambda: (state.r_k[None, :], (state.p_k / (1 - state.p_k))[None, :]),
        ModelKind.MARKED_GAMMA_NB: lambda: (state.r_k[None, :], (state.p_k / (1 - state.p_k))[None, :]),
    }
    if kind == ModelKind.CRF_HDP:
        state.lam_tilde = _dirichlet_rows(gen, np.broadcast_to(state.alpha * state.r_tilde, (J, K)))
    elif kind == ModelKind.NB_FTM:
        state.b_jk = (gen.random((J, K)) < state.pi_k[None, :]).astype(np.int64)
        draws = _gamma_clamped(gen, np.broadcast_to(state.r_k, (J, K)), 1.0)
        state.lam = np.where(state.b_jk > 0, draws, 0.0)
    else:
        shape, scale = kind_scales[kind]()
        state.lam = _gamma_clamped(gen, np.broadcast_to(shape, (J, K)), np.broadcast_to(scale, (J, K)))
    simulate_data(state, rng, doc_lengths=doc_lengths)
    return state


def validate_state(state: ModelState, after_sweep: bool = True) -> None:
    """Raise if a structural invariant is broken (debug/test helper).

    The table-count zero-pattern check only holds once a sweep has run,
    so pass ``after_sweep=False`` for freshly initialized states.
    """
    train_n = state.train_counts
    if not np.array_equal(state.n_jk.sum(axis=1), train_n):
        raise ValueError("n_jk rows do not sum to the document training counts")
    if np.abs(state.omega.sum(axis=1) - 1.0).max() > 1e-10:
        raise ValueError("omega rows are not normalized")
    for name in ("p_j", "p_k", "pi_k"):
        arr = getattr(state, name)
        if np.any(arr <= 0) or np.any(arr >= 1):
            raise ValueError(f"{name} has entries outside the open unit interval")
    if np.any(state.r_tilde <= 0) or abs(state.r_tilde.sum() - 1.0) > 1e-10:
        raise ValueError("r_tilde is not a positive probability vector")
    if state.kind.uses_normalized_weights:
        if np.abs(state.lam_tilde.sum(axis=1) - 1.0).max() > 1e-10:
            raise ValueError("lam_tilde rows are not normalized")
    if after_sweep and state.kind not in (ModelKind.LDA, ModelKind.DIR_PFA):
        if np.any(state.l_jk > state.n_jk):
            raise ValueError("l_jk exceeds n_jk somewhere")
        gated = state.n_jk * (state.b_jk if state.kind == ModelKind.NB_FTM else 1)
        if not np.array_equal(state.l_jk == 0, gated == 0):
            raise ValueError("l_jk zero-pattern does not match gated counts")
    for name in ("r_k", "r_j"):
        if np.any(getattr(state, name) <= 0):
            raise ValueError(f"{name} has non-positive entries")
    if state.gamma0 <= 0 or state.alpha <= 0:
        raise ValueError("gamma0 and alpha must stay positive")
