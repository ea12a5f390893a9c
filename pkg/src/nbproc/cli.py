"""Experiment runner: reproducible batch runs, self-checks, synthesis.

Subcommands::

    nbproc run      fit one model on a corpus, write trace/params/report
    nbproc validate run the distribution-identity and kernel self-checks
    nbproc synth    write a synthetic corpus in the UCI layout

Exit codes: 0 success, 1 check/validation failure, 2 usage error,
3 I/O error.  ``NBPROC_THREADS`` overrides ``--workers``.

Every artifact embeds the hash of the resolved configuration (corpus
content, model, hyperparameters, seed, workers) so runs can be matched
to their inputs; the output directory itself is excluded from the hash,
making reruns byte-comparable.  While a run is in progress the output
directory holds a ``.incomplete`` sentinel; it is removed on success.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import distributions as dist
from .corpus import (
    Corpus,
    EmptyCorpusError,
    ParseError,
    SyntheticSpec,
    filter_vocabulary,
    load_bag_of_words,
    split_train_test,
    synthesize_corpus,
    write_bag_of_words,
)
from .evaluation import (
    SampleAccumulator,
    TraceReport,
    accumulate,
    default_geweke_settings,
    geweke_check,
    heldout_perplexity,
    summarize_parameters,
    trace_scalars,
)
from .models import (
    HyperParams,
    ModelKind,
    count_active_topics,
    gibbs_sweep,
    initialize,
)
from .rng import RandomSource

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

_HYPER_FIELDS = tuple(f.name for f in dataclasses.fields(HyperParams))


@dataclass
class RunConfig:
    """Fully resolved settings for one `nbproc run` invocation."""

    model: str
    output_dir: str
    docword: str | None = None
    vocab: str | None = None
    synth: dict | None = None
    train_frac: float = 0.6
    min_doc_freq: int = 1
    workers: int = 1
    hyper: HyperParams = field(default_factory=HyperParams)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        hyper_data = data.pop("hyper", {})
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        unknown_hyper = set(hyper_data) - set(_HYPER_FIELDS)
        if unknown_hyper:
            raise ValueError(f"unknown hyper keys: {sorted(unknown_hyper)}")
        data["hyper"] = HyperParams(**hyper_data)
        config = cls(**data)
        config.validate()
        return config

    def validate(self) -> None:
        ModelKind.from_name(self.model)
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError(f"train_frac must lie in (0, 1), got {self.train_frac}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.min_doc_freq < 1:
            raise ValueError(f"min_doc_freq must be >= 1, got {self.min_doc_freq}")
        has_files = self.docword is not None and self.vocab is not None
        if has_files == (self.synth is not None):
            raise ValueError("provide either --docword/--vocab or --synth, not both or neither")

    def corpus_fingerprint(self) -> str:
        digest = hashlib.sha256()
        if self.synth is not None:
            digest.update(json.dumps(self.synth, sort_keys=True).encode())
        else:
            for path in (self.docword, self.vocab):
                with open(path, "rb") as fh:
                    digest.update(fh.read())
        return digest.hexdigest()

    def config_hash(self) -> str:
        payload = {
            "model": self.model,
            "train_frac": self.train_frac,
            "min_doc_freq": self.min_doc_freq,
            "workers": self.workers,
            "hyper": dataclasses.asdict(self.hyper),
            "corpus": self.corpus_fingerprint(),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _commit_identifier() -> str:
    env = os.environ.get("NBPROC_COMMIT")
    if env:
        return env
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def run_experiment(kind: ModelKind, corpus: Corpus, split, hyper: HyperParams, workers: int = 1):
    """Initialize, sweep, collect; returns (state, accumulator, trace).

    Single-worker runs consume one random stream sequentially and are
    bit-reproducible.  With workers > 1 the assignment step uses one
    derived stream per (iteration, document), a different but equally
    valid chain, and documents are processed by a thread pool.
    """
    root = RandomSource(hyper.seed)
    rng = root.child(0)
    parallel_root = root.child(1)
    state = initialize(kind, corpus, split, hyper, rng)
    acc = SampleAccumulator.empty(corpus.num_docs, corpus.vocab_size)
    trace = TraceReport()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    started = time.perf_counter()
    try:
        for it in range(hyper.iters):
            doc_rngs = None
            if workers > 1:
                iter_root = parallel_root.child(it)
                doc_rngs = [iter_root.child(j) for j in range(corpus.num_docs)]
            gibbs_sweep(state, hyper, rng, doc_rngs=doc_rngs, executor=executor)
            if it >= hyper.burnin and (it - hyper.burnin) % hyper.collect_every == 0:
                accumulate(acc, state)
            if acc.num_samples > 0:
                perplexity = heldout_perplexity(acc, split)
            else:  # before collection starts, trace the instantaneous sample
                snapshot = SampleAccumulator.empty(corpus.num_docs, corpus.vocab_size)
                accumulate(snapshot, state)
                perplexity = heldout_perplexity(snapshot, split)
            trace.append(iteration=it, perplexity=perplexity, **trace_scalars(state))
    finally:
        if executor is not None:
            executor.shutdown()
    trace.final = {
        "perplexity": heldout_perplexity(acc, split),
        "active_topics": count_active_topics(state),
        "wall_time_seconds": time.perf_counter() - started,
    }
    return state, acc, trace


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _load_run_corpus(config: RunConfig):
    if config.synth is not None:
        spec_data = dict(config.synth)
        synth_seed = spec_data.pop("seed", 0)
        spec = SyntheticSpec(**spec_data)
        corpus, _ = synthesize_corpus(config.hyper, spec, RandomSource(synth_seed))
    else:
        corpus = load_bag_of_words(config.docword, config.vocab)
    if config.min_doc_freq > 1:
        corpus = filter_vocabulary(corpus, config.min_doc_freq)
    return corpus


def cmd_run(args) -> int:
    overrides = {name: getattr(args, name) for name in _HYPER_FIELDS if getattr(args, name, None) is not None}
    config_data = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config_data = json.load(fh)
    hyper_data = dict(config_data.pop("hyper", {}))
    hyper_data.update(overrides)
    config_data["hyper"] = hyper_data
    for name, value in (
        ("model", args.model),
        ("output_dir", args.out),
        ("docword", args.docword),
        ("vocab", args.vocab),
        ("train_frac", args.train_frac),
        ("min_doc_freq", args.min_doc_freq),
        ("workers", args.workers),
    ):
        if value is not None:
            config_data[name] = value
    if args.synth:
        with open(args.synth, "r", encoding="utf-8") as fh:
            config_data["synth"] = json.load(fh)
    env_workers = os.environ.get("NBPROC_THREADS")
    if env_workers:
        config_data["workers"] = int(env_workers)
    config = RunConfig.from_dict(config_data)
    report = run(config)
    print(
        f"{config.model}: perplexity={report['perplexity']:.3f} "
        f"active_topics={report['active_topics']} -> {config.output_dir}"
    )
    return EXIT_OK


def run(config: RunConfig) -> dict:
    """Execute one fully resolved run and write its artifacts.

    Writes trace.csv, params.csv, report.json and a resolved-config echo
    into the output directory and returns the report.  A `.incomplete`
    sentinel flags partial output until the run finishes.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sentinel = out_dir / ".incomplete"
    sentinel.write_text("run in progress or aborted\n")

    config_hash = config.config_hash()
    commit = _commit_identifier()
    resolved = {
        "model": config.model,
        "docword": config.docword,
        "vocab": config.vocab,
        "synth": config.synth,
        "train_frac": config.train_frac,
        "min_doc_freq": config.min_doc_freq,
        "workers": config.workers,
        "output_dir": str(out_dir),
        "hyper": dataclasses.asdict(config.hyper),
        "config_hash": config_hash,
        "commit": commit,
    }
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")

    kind = ModelKind.from_name(config.model)
    corpus = _load_run_corpus(config)
    split = split_train_test(corpus, config.train_frac, RandomSource(config.hyper.seed).child(2))
    state, acc, trace = run_experiment(kind, corpus, split, config.hyper, workers=config.workers)

    _write_csv(
        out_dir / "trace.csv",
        TraceReport.COLUMNS,
        [[rec[c] for c in TraceReport.COLUMNS] for rec in trace.records],
        config_hash,
    )
    summary = summarize_parameters(state)
    param_cols = ("entity", "rank", "index", "tokens", "r", "log10_r", "p", "log10_p", "pi", "log10_pi")
    param_rows = []
    for entity in ("topics", "documents"):
        for row in summary[entity]:
            param_rows.append([entity[:-1]] + [row.get(c) for c in param_cols[1:]])
    _write_csv(out_dir / "params.csv", param_cols, param_rows, config_hash)

    report = {
        "model": config.model,
        "seed": config.hyper.seed,
        "hyper": dataclasses.asdict(config.hyper),
        "train_frac": config.train_frac,
        "workers": config.workers,
        "perplexity": trace.final["perplexity"],
        "active_topics": trace.final["active_topics"],
        "runtime_seconds": trace.final["wall_time_seconds"],
        "corpus": {
            "num_docs": corpus.num_docs,
            "vocab_size": corpus.vocab_size,
            "total_tokens": corpus.total_tokens,
        },
        "config_hash": config_hash,
        "commit": commit,
    }
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    sentinel.unlink()
    return report


# ---------------------------------------------------------------------------
# validate: distribution identities and kernel micro-checks.
# ---------------------------------------------------------------------------


def _tv_distance(a: np.ndarray, b: np.ndarray) -> float:
    width = max(len(a), len(b))
    pa = np.zeros(width)
    pb = np.zeros(width)
    pa[: len(a)] = a
    pb[: len(b)] = b
    return 0.5 * float(np.abs(pa - pb).sum())


def _empirical_pmf(draws: np.ndarray) -> np.ndarray:
    counts = np.bincount(draws)
    return counts / counts.sum()


def _check_crt_normalization(rng, quick, fault):
    worst = 0.0
    for m in range(0, 51, 1 if not quick else 5):
        for r in (0.1, 0.5, 1.0, 2.0, 10.0):
            worst = max(worst, abs(dist.crt_pmf(m, r).sum() - 1.0))
    return worst < 1e-9, f"max |sum-1| = {worst:.2e} (tolerance 1e-9)"


def _check_stirling_identity(rng, quick, fault):
    from scipy.special import gammaln, logsumexp

    tri = dist.default_stirling_triangle()
    worst = 0.0
    for m in range(1, 51):
        row = tri.log_row(m)
        for r in (0.1, 0.5, 1.0, 2.0, 10.0):
            lhs = logsumexp(row + np.arange(m + 1) * math.log(r))
            rhs = gammaln(m + r) - gammaln(r)
            worst = max(worst, abs(lhs - rhs))
    return worst < 1e-9, f"max log-space error = {worst:.2e} (tolerance 1e-9)"


def _check_crt_sampler(rng, quick, fault):
    draws = 20_000 if quick else 100_000
    tol = 0.03 if quick else 0.01
    worst = 0.0
    detail = []
    for m, r in ((5, 1.0), (20, 0.5), (50, 10.0)):
        r_used = r + 1.0 if fault == "crt-shape" else r
        sample = np.array([dist.sample_crt(m, r_used, rng) for _ in range(draws)])
        tv = _tv_distance(_empirical_pmf(sample), dist.crt_pmf(m, r))
        worst = max(worst, tv)
        detail.append(f"TV(m={m},r={r})={tv:.4f}")
    return worst < tol, "; ".join(detail) + f" (tolerance {tol})"


def _check_nb_equivalence(rng, quick, fault):
    draws = 20_000 if quick else 100_000
    tol = 0.025 if quick else 0.01
    worst = 0.0
    detail = []
    for r, p in ((2.0, 0.5), (0.5, 0.8)):
        direct = dist.sample_nb_direct(r, p, rng, size=draws)
        compound = dist.sample_nb_compound(r, p, rng, size=draws)
        tv = _tv_distance(_empirical_pmf(direct), _empirical_pmf(compound))
        worst = max(worst, tv)
        detail.append(f"TV(r={r},p={p})={tv:.4f}")
    return worst < tol, "; ".join(detail) + f" (tolerance {tol})"


def _check_nesting(rng, quick, fault):
    draws = 20_000 if quick else 100_000
    tol = 0.035 if quick else 0.015
    r1, c1, p = 1.0, 1.0, 0.5
    r = dist.sample_gamma(np.full(draws, r1), 1.0 / c1, rng)
    two_level = rng.generator.poisson(rng.generator.gamma(r, p / (1 - p)))
    p_prime = -math.log1p(-p) / (c1 - math.log1p(-p))
    outer = dist.sample_nb_compound(r1, p_prime, rng, size=draws)
    total_logs = int(outer.sum())
    increments = dist.sample_logarithmic(p, rng, size=total_logs) if total_logs else np.zeros(0)
    owner = np.repeat(np.arange(draws), outer)
    three_level = np.bincount(owner, weights=increments, minlength=draws).astype(np.int64)
    tv = _tv_distance(_empirical_pmf(two_level), _empirical_pmf(three_level))
    return tv < tol, f"TV={tv:.4f} (tolerance {tol})"


def _check_poisson_multinomial(rng, quick, fault):
    from scipy.stats import poisson as pois_dist

    draws = 30_000 if quick else 200_000
    tol = 0.05 if quick else 0.02
    rates = np.array([1.0, 2.0, 3.0])
    cap = 20
    gen = rng.generator
    # closed-form joint of independent Poisson cells on total <= cap
    support = np.arange(cap + 1)
    marginals = [pois_dist.pmf(support, rate) for rate in rates]
    exact = np.einsum("a,b,c->abc", *marginals)
    a, b, c = np.meshgrid(support, support, support, indexing="ij")
    exact[a + b + c > cap] = 0.0
    exact = exact.ravel()
    base = cap + 1
    weights = np.array([base**2, base, 1])
    independent = gen.poisson(rates, size=(draws, 3))
    totals = gen.poisson(rates.sum(), size=draws)
    partitioned = gen.multinomial(totals, rates / rates.sum())
    worst = 0.0
    for sample in (independent, partitioned):
        kept = sample[sample.sum(axis=1) <= cap]
        codes = (kept * weights).sum(axis=1)
        empirical = np.bincount(codes, minlength=base**3) / draws
        worst = max(worst, 0.5 * float(np.abs(empirical - exact).sum()))
    return worst < tol, f"joint TV vs closed form = {worst:.4f} (tolerance {tol})"


def _check_normalized_gamma_dirichlet(rng, quick, fault):
    draws = 20_000 if quick else 100_000
    tol = 0.04 if quick else 0.02
    conc = np.array([0.5, 1.0, 2.5])
    gen = rng.generator
    g = np.maximum(gen.gamma(conc, 1.0, size=(draws, 3)), dist.TINY)
    x = g / g.sum(axis=1, keepdims=True)
    mean_expected = conc / conc.sum()
    second_expected = conc * (conc + 1) / (conc.sum() * (conc.sum() + 1))
    err_mean = float(np.abs(x.mean(axis=0) / mean_expected - 1).max())
    err_second = float(np.abs((x**2).mean(axis=0) / second_expected - 1).max())
    worst = max(err_mean, err_second)
    return worst < tol, f"max relative moment error = {worst:.4f} (tolerance {tol})"


def _check_weight_normalization(rng, quick, fault):
    draws = 20_000 if quick else 100_000
    tol = 0.04 if quick else 0.02
    r = np.array([1.0, 2.0, 3.0])
    gen = rng.generator
    p = float(gen.beta(3, 3))
    lam = np.maximum(gen.gamma(r, p / (1 - p), size=(draws, 3)), dist.TINY)
    x = lam / lam.sum(axis=1, keepdims=True)
    total = r.sum()
    mean_expected = r / total
    second_expected = r * (r + 1) / (total * (total + 1))
    err = max(
        float(np.abs(x.mean(axis=0) / mean_expected - 1).max()),
        float(np.abs((x**2).mean(axis=0) / second_expected - 1).max()),
    )
    return err < tol, f"max relative moment error = {err:.4f} (tolerance {tol})"


_GEWEKE_KINDS = (
    ModelKind.GAMMA_NB,
    ModelKind.NB_LDA,
    ModelKind.BETA_NB,
    ModelKind.MARKED_BETA_NB,
    ModelKind.MARKED_GAMMA_NB,
    ModelKind.NB_FTM,
    ModelKind.CRF_HDP,
)


def _make_geweke_check(kind: ModelKind):
    def check(rng, quick, fault):
        draws = 4_000 if quick else 50_000
        kernel_fault = fault if (fault == "r-shape" and kind == ModelKind.GAMMA_NB) else None
        report = geweke_check(kind, default_geweke_settings(kind), draws, draws, rng, fault=kernel_fault)
        return report.passed(4.0), f"max |z| = {report.max_abs_z:.2f} over {len(report.z_scores)} stats (threshold 4)"

    return check


def cmd_validate(args) -> int:
    checks = [
        ("crt-pmf-normalization", _check_crt_normalization),
        ("stirling-normalizer-identity", _check_stirling_identity),
        ("crt-sampler-vs-pmf", _check_crt_sampler),
        ("nb-direct-vs-compound", _check_nb_equivalence),
        ("nb-gamma-mixture-nesting", _check_nesting),
        ("poisson-multinomial-equivalence", _check_poisson_multinomial),
        ("normalized-gamma-dirichlet", _check_normalized_gamma_dirichlet),
        ("gamma-nb-weight-normalization", _check_weight_normalization),
    ]
    checks += [(f"geweke-{kind.value}", _make_geweke_check(kind)) for kind in _GEWEKE_KINDS]
    failures = []
    for name, check in checks:
        name_key = int(hashlib.sha256(name.encode()).hexdigest()[:8], 16)
        rng = RandomSource(args.seed).child(name_key)
        ok, detail = check(rng, args.quick, args.fault_inject)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        if not ok:
            failures.append(name)
    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}")
        return EXIT_CHECK_FAILED
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        k_true=args.k_true,
        vocab_size=args.vocab_size,
        num_docs=args.docs,
        topic_sharpness=args.sharpness,
        r=args.r,
        p=args.p,
    )
    rng = RandomSource(args.seed)
    if args.p_beta is not None:
        a, b = args.p_beta
        spec.p = np.asarray(dist.sample_beta(np.full(args.docs, a), np.full(args.docs, b), rng.child(1)))
    corpus, truth = synthesize_corpus(HyperParams(), spec, rng.child(0))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_bag_of_words(corpus, out_dir / "docword.txt", out_dir / "vocab.txt")
    settings = {
        "k_true": args.k_true,
        "vocab_size": args.vocab_size,
        "num_docs": args.docs,
        "seed": args.seed,
        "topic_sharpness": args.sharpness,
        "r": args.r,
        "p": args.p,
        "p_beta": args.p_beta,
    }
    truth_record = {
        **settings,
        "config_hash": hashlib.sha256(json.dumps(settings, sort_keys=True).encode()).hexdigest(),
        "r_k": truth.r_k.tolist(),
        "p_j": truth.p_j.tolist(),
        "omega": truth.omega.tolist(),
    }
    with open(out_dir / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth_record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"synthetic corpus: {corpus.num_docs} docs, {corpus.vocab_size} terms, {corpus.total_tokens} tokens -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nbproc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="fit one model and write artifacts")
    run.add_argument("--model", required=True, help="model kind, e.g. gamma-nb, nb-hdp, lda")
    run.add_argument("--docword", help="UCI docword file")
    run.add_argument("--vocab", help="vocabulary file, one term per line")
    run.add_argument("--synth", help="JSON file with synthetic-corpus settings")
    run.add_argument("--config", help="JSON run configuration (flags override)")
    run.add_argument("--train-frac", dest="train_frac", type=float, default=None)
    run.add_argument("--min-doc-freq", dest="min_doc_freq", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", dest="seed", type=int, default=None)
    run.add_argument("--K", dest="K", type=int, default=None)
    run.add_argument("--iters", dest="iters", type=int, default=None)
    run.add_argument("--burnin", dest="burnin", type=int, default=None)
    run.add_argument("--collect-every", dest="collect_every", type=int, default=None)
    run.add_argument("--init-iters", dest="init_iters", type=int, default=None)
    run.add_argument("--eta", dest="eta", type=float, default=None)
    run.add_argument("--c", dest="c", type=float, default=None)
    run.add_argument("--a0", dest="a0", type=float, default=None)
    run.add_argument("--b0", dest="b0", type=float, default=None)
    run.add_argument("--e0", dest="e0", type=float, default=None)
    run.add_argument("--f0", dest="f0", type=float, default=None)
    run.add_argument("--lda-alpha-total", dest="lda_alpha_total", type=float, default=None)
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="run the correctness self-checks")
    validate.add_argument("--quick", action="store_true", help="reduced draw counts, runs in well under a minute")
    validate.add_argument("--seed", type=int, default=0)
    validate.add_argument(
        "--fault-inject",
        dest="fault_inject",
        choices=("crt-shape", "r-shape"),
        default=None,
        help="corrupt a kernel on purpose; the affected check must fail",
    )
    validate.set_defaults(func=cmd_validate)

    synth = sub.add_parser("synth", help="write a synthetic corpus")
    synth.add_argument("--k-true", dest="k_true", type=int, required=True)
    synth.add_argument("--docs", type=int, required=True)
    synth.add_argument("--vocab-size", dest="vocab_size", type=int, required=True)
    synth.add_argument("--r", type=float, default=5.0)
    synth.add_argument("--p", type=float, default=0.5)
    synth.add_argument(
        "--p-beta",
        dest="p_beta",
        type=float,
        nargs=2,
        metavar=("A", "B"),
        default=None,
        help="draw per-document p from Beta(A, B) instead of a constant",
    )
    synth.add_argument("--sharpness", type=float, default=0.05)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, EmptyCorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
