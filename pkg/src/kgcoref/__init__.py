"""Knowledge-aware pronoun coreference resolution.

An end-to-end pipeline: tokenized corpora with pronoun annotations, a
head-indexed knowledge graph assembled from commonsense triplets, linguistic
markups, and mined selectional preferences, a from-scratch neural span scorer
with knowledge attention, training with Adam, and an evaluation harness with
per-pronoun-type metrics, threshold sweeps, gold-mention mode, cross-domain
matrices, and knowledge ablations.
"""
from .corpus import (
    CANDIDATE_WINDOW_SENTENCES,
    DEFAULT_MAX_SPAN_WIDTH,
    CorpusParseError,
    CorpusValidationError,
    Document,
    PronounInstance,
    PronounLookupError,
    PronounType,
    Span,
    candidate_window,
    classify_pronoun,
    corpus_statistics,
    document_to_record,
    enumerate_candidates,
    load_corpus,
)
from .evaluation import (
    DEFAULT_THRESHOLD,
    PERMISSIVE_THRESHOLD,
    SWEEP_GRID,
    AblationOutcome,
    EvaluationError,
    MetricReport,
    PredictionResult,
    TypeMetrics,
    ablate_knowledge,
    compute_metrics,
    cross_domain,
    evaluate,
    f1_matrix,
    format_report_table,
    predict,
    report_to_dict,
    threshold_sweep,
)
from .kg import (
    AnimacyGender,
    DepEdge,
    KnowledgeGraph,
    KnowledgeSource,
    KnowledgeTriplet,
    Markup,
    Plurality,
    TripletParseError,
    extract_sp,
    gen_linguistic_triplets,
    load_dep_edges,
    load_markups,
    load_triplets,
    merge_graphs,
    normalize_phrase,
    pronoun_table_graph,
    save_triplets,
)
from .neural import (
    CheckpointError,
    GoldCoverageError,
    ModelConfig,
    ModelParameters,
    ScoredCandidate,
    Variant,
    build_vocab,
    load_checkpoint,
    save_checkpoint,
    score_instance,
    select,
)
from .synth import SynthBundle, SynthSpec, build_inventory, bundle_graph, generate, write_bundle, write_domain
from .train import EpochStats, TrainConfig, train, write_training_log

__version__ = "0.1.0"

__all__ = [
    "AblationOutcome",
    "AnimacyGender",
    "CANDIDATE_WINDOW_SENTENCES",
    "CheckpointError",
    "CorpusParseError",
    "CorpusValidationError",
    "DEFAULT_MAX_SPAN_WIDTH",
    "DEFAULT_THRESHOLD",
    "DepEdge",
    "Document",
    "EpochStats",
    "EvaluationError",
    "GoldCoverageError",
    "KnowledgeGraph",
    "KnowledgeSource",
    "KnowledgeTriplet",
    "Markup",
    "MetricReport",
    "ModelConfig",
    "ModelParameters",
    "PERMISSIVE_THRESHOLD",
    "Plurality",
    "PredictionResult",
    "PronounInstance",
    "PronounLookupError",
    "PronounType",
    "SWEEP_GRID",
    "ScoredCandidate",
    "Span",
    "SynthBundle",
    "SynthSpec",
    "TrainConfig",
    "TripletParseError",
    "TypeMetrics",
    "Variant",
    "ablate_knowledge",
    "build_inventory",
    "build_vocab",
    "bundle_graph",
    "candidate_window",
    "classify_pronoun",
    "compute_metrics",
    "corpus_statistics",
    "cross_domain",
    "document_to_record",
    "enumerate_candidates",
    "evaluate",
    "extract_sp",
    "f1_matrix",
    "format_report_table",
    "gen_linguistic_triplets",
    "generate",
    "load_checkpoint",
    "load_corpus",
    "load_dep_edges",
    "load_markups",
    "load_triplets",
    "merge_graphs",
    "normalize_phrase",
    "predict",
    "pronoun_table_graph",
    "report_to_dict",
    "save_checkpoint",
    "save_triplets",
    "score_instance",
    "select",
    "threshold_sweep",
    "train",
    "write_bundle",
    "write_domain",
    "write_training_log",
]
