"""Evaluation: span-level micro P/R/F1, threshold sweeps, cross-domain, ablations.

A prediction is the set of candidate spans whose normalized score exceeds the
selection threshold. Matching against gold antecedents is exact span equality.
Counts are micro-averaged per pronoun type and overall. The sweep reuses one
scoring pass across all thresholds, so recall is exactly non-increasing along
an ascending grid.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DEFAULT_MAX_SPAN_WIDTH, Document, PronounInstance, PronounType, Span, enumerate_candidates
from .kg import KnowledgeGraph, KnowledgeSource
from .neural import ModelConfig, ModelParameters, ScoredCandidate, Variant, prepare_instance, scores_from_features
from .train import TrainConfig, train

log = logging.getLogger(__name__)

# default selection threshold; candidate sets are wide so a loose cut works
DEFAULT_THRESHOLD = 1e-2
# near-zero cut for domains where candidate scores spread thin and recall matters
PERMISSIVE_THRESHOLD = 1e-8

SWEEP_GRID = (0.0, 1e-8, 1e-4, 1e-2, 0.05, 0.1, 0.2)

_REPORT_TYPES = (PronounType.THIRD_PERSONAL, PronounType.POSSESSIVE, PronounType.DEMONSTRATIVE)


class EvaluationError(ValueError):
    """The corpus yields nothing to evaluate."""


@dataclass(frozen=True)
class TypeMetrics:
    precision: float
    recall: float
    f1: float
    predicted: int
    gold: int
    matched: int


def compute_metrics(matched: int, predicted: int, gold: int) -> TypeMetrics:
    """Micro metrics with the zero conventions: empty denominators give zero."""
    precision = matched / predicted if predicted else 0.0
    recall = matched / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return TypeMetrics(precision, recall, f1, predicted, gold, matched)


@dataclass(frozen=True)
class MetricReport:
    per_type: dict[PronounType, TypeMetrics]
    overall: TypeMetrics
    skipped: int
    threshold: float
    gold_mode: bool
    variant: Variant


@dataclass(frozen=True)
class PredictionResult:
    doc_id: str
    pronoun: PronounInstance
    selected: tuple[ScoredCandidate, ...]
    threshold: float
    variant: Variant


@dataclass(frozen=True)
class ScoredInstance:
    """Cached scoring of one pronoun: spans with probabilities, plus the gold set."""

    doc_id: str
    pronoun: PronounInstance
    spans: tuple[Span, ...]
    scores: np.ndarray
    probabilities: np.ndarray

    def selected(self, threshold: float) -> list[ScoredCandidate]:
        return [
            ScoredCandidate(span, float(f), float(p))
            for span, f, p in zip(self.spans, self.scores, self.probabilities)
            if p > threshold
        ]


def score_corpus(
    params: ModelParameters,
    corpus: Iterable[Document],
    graph: KnowledgeGraph | None,
    gold_mode: bool = False,
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
    threads: int = 1,
) -> tuple[list[ScoredInstance], int]:
    """Score every pronoun with a non-empty gold set; returns (scored, skipped)."""
    config = params.config
    jobs: list[tuple[Document, PronounInstance, list[Span]]] = []
    skipped = 0
    for doc in corpus:
        for pronoun in doc.pronouns:
            if not pronoun.gold_antecedents:
                log.warning("doc %s: pronoun at token %d has no gold antecedents, skipping",
                            doc.doc_id, pronoun.pronoun_span.start)
                skipped += 1
                continue
            candidates = enumerate_candidates(doc, pronoun, max_width=max_span_width,
                                              gold_mode=gold_mode)
            jobs.append((doc, pronoun, candidates))

    def run(job: tuple[Document, PronounInstance, list[Span]]) -> ScoredInstance:
        doc, pronoun, candidates = job
        if not candidates:
            return ScoredInstance(doc.doc_id, pronoun, (), np.zeros(0), np.zeros(0))
        feats = prepare_instance(params, doc, pronoun, candidates, graph)
        scores = scores_from_features(params, config, feats)
        shifted = np.exp(scores - scores.max())
        probs = shifted / shifted.sum()
        return ScoredInstance(doc.doc_id, pronoun, tuple(candidates), scores, probs)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scored = list(pool.map(run, jobs))
    else:
        scored = [run(job) for job in jobs]
    return scored, skipped


def report_from_scored(
    scored: Sequence[ScoredInstance],
    threshold: float,
    skipped: int = 0,
    gold_mode: bool = False,
    variant: Variant = Variant.COMPLETE,
) -> MetricReport:
    counts = {t: [0, 0, 0] for t in _REPORT_TYPES}  # matched, predicted, gold
    for inst in scored:
        picked = {c.span for c in inst.selected(threshold)}
        gold = inst.pronoun.gold_antecedents
        row = counts[inst.pronoun.pronoun_type]
        row[0] += len(picked & gold)
        row[1] += len(picked)
        row[2] += len(gold)
    per_type = {t: compute_metrics(*counts[t]) for t in _REPORT_TYPES}
    totals = [sum(row[i] for row in counts.values()) for i in range(3)]
    return MetricReport(per_type, compute_metrics(*totals), skipped, threshold, gold_mode, variant)


def evaluate(
    params: ModelParameters,
    corpus: Iterable[Document],
    graph: KnowledgeGraph | None,
    model_cfg: ModelConfig | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    variant: Variant | None = None,
    gold_mode: bool = False,
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
    threads: int = 1,
) -> MetricReport:
    """Score a corpus and report span-level micro P/R/F1 per pronoun type."""
    if model_cfg is not None and model_cfg != params.config:
        raise ValueError("model_cfg disagrees with the checkpoint's config")
    if variant is not None and variant is not params.variant:
        raise ValueError(f"variant {variant.value} disagrees with checkpoint "
                         f"variant {params.variant.value}")
    scored, skipped = score_corpus(params, corpus, graph, gold_mode, max_span_width, threads)
    if not scored:
        raise EvaluationError("no pronouns with gold antecedents to evaluate")
    return report_from_scored(scored, threshold, skipped, gold_mode, params.variant)


def predict(
    params: ModelParameters,
    corpus: Iterable[Document],
    graph: KnowledgeGraph | None,
    threshold: float = DEFAULT_THRESHOLD,
    gold_mode: bool = False,
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
) -> list[PredictionResult]:
    """Selected antecedents for every pronoun, gold sets not required."""
    out: list[PredictionResult] = []
    for doc in corpus:
        for pronoun in doc.pronouns:
            candidates = enumerate_candidates(doc, pronoun, max_width=max_span_width,
                                              gold_mode=gold_mode)
            if not candidates:
                out.append(PredictionResult(doc.doc_id, pronoun, (), threshold, params.variant))
                continue
            feats = prepare_instance(params, doc, pronoun, candidates, graph)
            scores = scores_from_features(params, params.config, feats)
            shifted = np.exp(scores - scores.max())
            probs = shifted / shifted.sum()
            picked = tuple(
                ScoredCandidate(span, float(f), float(p))
                for span, f, p in zip(candidates, scores, probs)
                if p > threshold
            )
            out.append(PredictionResult(doc.doc_id, pronoun, picked, threshold, params.variant))
    return out


def threshold_sweep(
    params: ModelParameters,
    corpus: Iterable[Document],
    graph: KnowledgeGraph | None,
    model_cfg: ModelConfig | None = None,
    grid: Sequence[float] = SWEEP_GRID,
    gold_mode: bool = False,
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
    threads: int = 1,
) -> list[tuple[float, MetricReport]]:
    """Evaluate one scoring pass at every threshold of an ascending grid."""
    grid = list(grid)
    if not grid:
        raise ValueError("threshold grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("threshold grid must be sorted ascending")
    if model_cfg is not None and model_cfg != params.config:
        raise ValueError("model_cfg disagrees with the checkpoint's config")
    scored, skipped = score_corpus(params, corpus, graph, gold_mode, max_span_width, threads)
    if not scored:
        raise EvaluationError("no pronouns with gold antecedents to evaluate")
    return [(t, report_from_scored(scored, t, skipped, gold_mode, params.variant)) for t in grid]


def cross_domain(
    params_by_domain: dict[str, ModelParameters],
    corpora_by_domain: dict[str, Sequence[Document]],
    graphs_by_domain: dict[str, KnowledgeGraph | None],
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
) -> dict[tuple[str, str], MetricReport]:
    """Evaluate every checkpoint on every domain's test corpus.

    The test domain supplies the knowledge graph (knowledge travels with the
    data); each checkpoint is applied at its own stored training threshold.
    """
    missing = set(corpora_by_domain) - set(graphs_by_domain)
    if missing:
        raise KeyError(f"domains without a knowledge graph: {sorted(missing)}")
    if not params_by_domain or not corpora_by_domain:
        raise ValueError("cross_domain needs at least one checkpoint and one corpus")
    out: dict[tuple[str, str], MetricReport] = {}
    for train_domain, params in params_by_domain.items():
        threshold = float(params.metadata.get("threshold", DEFAULT_THRESHOLD))
        for test_domain, corpus in corpora_by_domain.items():
            out[(train_domain, test_domain)] = evaluate(
                params, corpus, graphs_by_domain[test_domain],
                threshold=threshold, max_span_width=max_span_width,
            )
    return out


def f1_matrix(results: dict[tuple[str, str], MetricReport]) -> dict[tuple[str, str], float]:
    return {key: report.overall.f1 for key, report in results.items()}


@dataclass(frozen=True)
class AblationOutcome:
    dropped: tuple[KnowledgeSource, ...]
    report: MetricReport
    baseline: MetricReport
    delta_f1: float


def ablate_knowledge(
    sources_to_drop: Iterable[KnowledgeSource],
    corpus_train: Sequence[Document],
    corpus_test: Sequence[Document],
    graph: KnowledgeGraph,
    model_cfg: ModelConfig | None = None,
    train_cfg: TrainConfig | None = None,
    corpus_dev: Sequence[Document] | None = None,
    variant: Variant = Variant.COMPLETE,
    threshold: float = DEFAULT_THRESHOLD,
    retrain: bool = True,
    baseline_params: ModelParameters | None = None,
    max_span_width: int = DEFAULT_MAX_SPAN_WIDTH,
) -> AblationOutcome:
    """Measure the F1 change from removing knowledge sources from the graph.

    By default the model is retrained on the filtered graph; with retrain=False
    the baseline checkpoint is re-evaluated against the filtered graph, a much
    cheaper smoke test of the same direction.
    """
    dropped = tuple(sorted(set(sources_to_drop), key=lambda s: s.value))
    filtered = graph.without_sources(dropped)
    if dropped and len(filtered) == 0:
        log.warning("ablation removed every triplet; this degenerates to a knowledge-free run")
    if baseline_params is None:
        baseline_params, _ = train(corpus_train, corpus_dev, graph, model_cfg, train_cfg, variant)
    baseline = evaluate(baseline_params, corpus_test, graph, threshold=threshold,
                        max_span_width=max_span_width)
    if retrain:
        ablated_params, _ = train(corpus_train, corpus_dev, filtered, model_cfg, train_cfg, variant)
    else:
        ablated_params = baseline_params
    report = evaluate(ablated_params, corpus_test, filtered, threshold=threshold,
                      max_span_width=max_span_width)
    return AblationOutcome(dropped, report, baseline, report.overall.f1 - baseline.overall.f1)


def report_to_dict(report: MetricReport) -> dict:
    def block(m: TypeMetrics) -> dict:
        return {
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "predicted": m.predicted,
            "gold": m.gold,
            "matched": m.matched,
        }

    return {
        "threshold": report.threshold,
        "gold_mode": report.gold_mode,
        "variant": report.variant.value,
        "skipped": report.skipped,
        "overall": block(report.overall),
        "per_type": {t.value: block(m) for t, m in report.per_type.items()},
    }


_TYPE_LABELS = {
    PronounType.THIRD_PERSONAL: "Third personal",
    PronounType.POSSESSIVE: "Possessive",
    PronounType.DEMONSTRATIVE: "Demonstrative",
}


def format_report_table(rows: Sequence[tuple[str, MetricReport]]) -> str:
    """Aligned text table: one row per labeled report, P/R/F1 per type plus overall."""
    headers = ["Model"]
    for t in _REPORT_TYPES:
        headers += [f"{_TYPE_LABELS[t]} P", "R", "F1"]
    headers += ["All P", "R", "F1"]
    table = [headers]
    for label, report in rows:
        row = [label]
        for t in _REPORT_TYPES:
            m = report.per_type[t]
            row += [f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}"]
        m = report.overall
        row += [f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}"]
        table.append(row)
    widths = [max(len(line[i]) for line in table) for i in range(len(headers))]
    lines = []
    for line in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return "\n".join(lines)


def write_sweep_csv(sweep: Sequence[tuple[float, MetricReport]], path: str | Path) -> None:
    """CSV with one row per threshold: t, precision, recall, f1."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "precision", "recall", "f1"])
        for t, report in sweep:
            m = report.overall
            writer.writerow([repr(t), f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}"])


def write_report_json(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8")


def predictions_to_jsonl(predictions: Sequence[PredictionResult]) -> str:
    lines = []
    for pred in predictions:
        lines.append(json.dumps({
            "doc_id": pred.doc_id,
            "pronoun": {
                "token": pred.pronoun.pronoun_span.start,
                "type": pred.pronoun.pronoun_type.value,
            },
            "selected": [
                {"span": c.span.pair(), "score": c.score, "probability": c.probability}
                for c in pred.selected
            ],
            "threshold": pred.threshold,
            "variant": pred.variant.value,
        }))
    return "\n".join(lines) + ("\n" if lines else "")
