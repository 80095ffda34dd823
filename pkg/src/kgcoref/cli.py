"""Command-line interface for the whole pipeline.

Subcommands cover synthetic-data generation, knowledge building, training,
evaluation, prediction, threshold sweeps, cross-domain matrices, and
knowledge ablations. Logs go to standard error; data goes to files or
standard output. Exit code 0 on success, nonzero on any error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corpus import DEFAULT_MAX_SPAN_WIDTH, load_corpus
from .evaluation import (
    DEFAULT_THRESHOLD,
    SWEEP_GRID,
    ablate_knowledge,
    cross_domain,
    evaluate,
    format_report_table,
    predict,
    predictions_to_jsonl,
    report_to_dict,
    threshold_sweep,
    write_report_json,
    write_sweep_csv,
)
from .kg import (
    DEFAULT_MIN_CONFIDENCE,
    DEFAULT_SP_COUNT_THRESHOLD,
    DEFAULT_SP_PROB_THRESHOLD,
    KnowledgeGraph,
    KnowledgeSource,
    extract_sp,
    gen_linguistic_triplets,
    load_dep_edges,
    load_markups,
    load_triplets,
    merge_graphs,
    pronoun_table_graph,
    save_triplets,
)
from .neural import ModelConfig, Variant, load_checkpoint, save_checkpoint
from .plots import save_report_figure, save_sweep_figure
from .synth import write_domain
from .train import TrainConfig, train, write_training_log

log = logging.getLogger("kgcoref.cli")

# Table-3-style row names for --drop
ABLATION_SOURCES = {
    "ling": (KnowledgeSource.PLURALITY, KnowledgeSource.AG),
    "sp": (KnowledgeSource.SP_NSUBJ, KnowledgeSource.SP_DOBJ),
    "omcs": (KnowledgeSource.OMCS,),
    "medical": (KnowledgeSource.MEDICAL,),
}


def _log_config(name: str, payload: dict) -> None:
    log.info("%s config: %s", name, json.dumps(payload, sort_keys=True))


def _load_kg(paths: list[str]) -> KnowledgeGraph:
    return merge_graphs([load_triplets(p) for p in paths])


def _write_json(payload: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--embed-dim", type=int, default=None)
    group.add_argument("--lstm-hidden", type=int, default=None)
    group.add_argument("--ffn-hidden", type=int, default=None)
    group.add_argument("--length-bucket-dim", type=int, default=None)
    group.add_argument("--dropout", type=float, default=None)
    group.add_argument("--max-knowledge", type=int, default=None)
    group.add_argument("--model-seed", type=int, default=None, dest="seed")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--lr", type=float, default=None, dest="learning_rate")
    group.add_argument("--epochs", type=int, default=None, dest="max_epochs")
    group.add_argument("--grad-clip", type=float, default=None)
    group.add_argument("--shuffle-seed", type=int, default=None)
    group.add_argument("--threshold", type=float, default=None, dest="dev_threshold",
                       help="selection threshold used on dev and stored in the checkpoint")
    group.add_argument("--early-stop-dev-f1", type=float, default=None)
    group.add_argument("--max-span-width", type=int, default=None)
    group.add_argument("--no-dev-select", action="store_true",
                       help="keep the last epoch instead of the best dev epoch")


def _resolve_configs(args: argparse.Namespace) -> tuple[ModelConfig, TrainConfig]:
    """Config file first, then explicit flags on top."""
    file_model: dict = {}
    file_train: dict = {}
    if args.config:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        file_model = payload.get("model", {})
        file_train = payload.get("train", {})
    model_fields = ("embed_dim", "lstm_hidden", "ffn_hidden", "length_bucket_dim",
                    "dropout", "max_knowledge", "seed")
    train_fields = ("learning_rate", "max_epochs", "grad_clip", "shuffle_seed",
                    "dev_threshold", "early_stop_dev_f1", "max_span_width")
    model_kw = dict(file_model)
    for field in model_fields:
        value = getattr(args, field, None)
        if value is not None:
            model_kw[field] = value
    train_kw = dict(file_train)
    for field in train_fields:
        value = getattr(args, field, None)
        if value is not None:
            train_kw[field] = value
    if args.no_dev_select:
        train_kw["select_on_dev"] = False
    return ModelConfig(**model_kw), TrainConfig(**train_kw)


def _cmd_gen_synth(args: argparse.Namespace) -> int:
    n_docs = {"train": args.train_docs, "dev": args.dev_docs, "test": args.test_docs}
    _log_config("gen-synth", {
        "out": args.out, "domain_tag": args.domain_tag, "n_docs": n_docs,
        "seed": args.seed, "knowledge_dependence": args.knowledge_dependence,
        "n_entities": args.n_entities, "vocab_size": args.vocab_size,
        "n_distractors": args.distractors,
    })
    paths = write_domain(
        args.out, args.domain_tag, n_docs, seed=args.seed,
        knowledge_dependence=args.knowledge_dependence, n_entities=args.n_entities,
        vocab_size=args.vocab_size, n_distractors=args.distractors,
    )
    for name, path in sorted(paths.items()):
        log.info("wrote %s: %s", name, path)
    return 0


def _cmd_extract_sp(args: argparse.Namespace) -> int:
    _log_config("extract-sp", {"edges": args.edges, "prob": args.prob,
                               "min_count": args.min_count, "out": args.out})
    edges = load_dep_edges(args.edges)
    triplets = extract_sp(edges, prob_threshold=args.prob, count_threshold=args.min_count)
    save_triplets(triplets, args.out)
    log.info("kept %d selectional-preference triplets from %d edge rows", len(triplets), len(edges))
    return 0


def _cmd_gen_ling(args: argparse.Namespace) -> int:
    _log_config("gen-ling", {"markups": args.markups, "out": args.out,
                             "with_pronouns": args.with_pronouns})
    triplets = gen_linguistic_triplets(load_markups(args.markups))
    if args.with_pronouns:
        triplets = triplets + list(pronoun_table_graph().triplets)
    save_triplets(triplets, args.out)
    log.info("wrote %d linguistic triplets", len(triplets))
    return 0


def _cmd_build_kg(args: argparse.Namespace) -> int:
    _log_config("build-kg", {
        "omcs": args.omcs, "medical": args.medical, "ling": args.ling, "sp": args.sp,
        "other": args.other, "min_confidence": args.min_confidence,
        "pronoun_table": not args.no_pronoun_table, "out": args.out,
    })
    graphs = []
    for path in args.omcs:
        graphs.append(load_triplets(path, min_confidence=args.min_confidence,
                                    source=KnowledgeSource.OMCS))
    for path in args.medical:
        graphs.append(load_triplets(path, source=KnowledgeSource.MEDICAL))
    for path in args.ling:
        graphs.append(load_triplets(path))
    for path in args.sp:
        graphs.append(load_triplets(path))
    for path in args.other:
        graphs.append(load_triplets(path, source=KnowledgeSource.OTHER))
    if not args.no_pronoun_table:
        graphs.append(pronoun_table_graph())
    if not graphs:
        raise ValueError("no knowledge inputs given; pass at least one of "
                         "--omcs/--medical/--ling/--sp/--other")
    merged = merge_graphs(graphs)
    save_triplets(merged, args.out)
    log.info("wrote %d merged triplets covering sources %s", len(merged),
             sorted(s.value for s in merged.sources()))
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    model_cfg, train_cfg = _resolve_configs(args)
    variant = Variant(args.variant)
    _log_config("train", {
        "train": args.train, "dev": args.dev, "kg": args.kg, "out": args.out,
        "variant": variant.value, "model": model_cfg.to_dict(), "training": train_cfg.to_dict(),
    })
    corpus_train = load_corpus(args.train)
    corpus_dev = load_corpus(args.dev) if args.dev else None
    graph = _load_kg(args.kg) if args.kg else None
    params, stats = train(corpus_train, corpus_dev, graph, model_cfg, train_cfg, variant)
    save_checkpoint(params, args.out)
    log.info("wrote checkpoint %s (%d parameters, %d epochs)", args.out,
             params.n_params, len(stats))
    if args.log:
        write_training_log(stats, args.log)
        log.info("wrote training log %s", args.log)
    return 0


def _open_checkpoint(path: str):
    params = load_checkpoint(path)
    log.info("checkpoint %s: variant=%s, %d parameters, metadata=%s",
             path, params.variant.value, params.n_params,
             json.dumps(params.metadata, sort_keys=True))
    return params


def _checkpoint_threshold(params, override: float | None) -> float:
    if override is not None:
        return override
    return float(params.metadata.get("threshold", DEFAULT_THRESHOLD))


def _cmd_evaluate(args: argparse.Namespace) -> int:
    params = _open_checkpoint(args.checkpoint)
    threshold = _checkpoint_threshold(params, args.threshold)
    _log_config("evaluate", {"corpus": args.corpus, "kg": args.kg, "threshold": threshold,
                             "gold_mode": args.gold_mode, "max_span_width": args.max_span_width,
                             "threads": args.threads})
    corpus = load_corpus(args.corpus)
    graph = _load_kg(args.kg) if args.kg else None
    report = evaluate(params, corpus, graph, threshold=threshold, gold_mode=args.gold_mode,
                      max_span_width=args.max_span_width, threads=args.threads)
    label = f"{Path(args.checkpoint).stem} ({params.variant.value})"
    table = format_report_table([(label, report)])
    print(table)
    if args.report:
        out = Path(args.report)
        write_report_json(report, out)
        out.with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
        save_report_figure([(label, report)], out.with_suffix(".png"))
        log.info("wrote %s, %s, %s", out, out.with_suffix(".txt"), out.with_suffix(".png"))
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    params = _open_checkpoint(args.checkpoint)
    threshold = _checkpoint_threshold(params, args.threshold)
    _log_config("predict", {"corpus": args.corpus, "kg": args.kg, "threshold": threshold,
                            "gold_mode": args.gold_mode, "max_span_width": args.max_span_width})
    corpus = load_corpus(args.corpus)
    graph = _load_kg(args.kg) if args.kg else None
    results = predict(params, corpus, graph, threshold=threshold, gold_mode=args.gold_mode,
                      max_span_width=args.max_span_width)
    payload = predictions_to_jsonl(results)
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        log.info("wrote %d predictions to %s", len(results), args.out)
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    params = _open_checkpoint(args.checkpoint)
    grid = [float(v) for v in args.grid.split(",")] if args.grid else list(SWEEP_GRID)
    _log_config("sweep", {"corpus": args.corpus, "kg": args.kg, "grid": grid,
                          "gold_mode": args.gold_mode, "threads": args.threads})
    corpus = load_corpus(args.corpus)
    graph = _load_kg(args.kg) if args.kg else None
    sweep = threshold_sweep(params, corpus, graph, grid=grid, gold_mode=args.gold_mode,
                            max_span_width=args.max_span_width, threads=args.threads)
    write_sweep_csv(sweep, args.out)
    figure = Path(args.out).with_suffix(".png")
    save_sweep_figure(sweep, figure)
    log.info("wrote %s and %s", args.out, figure)
    for t, report in sweep:
        log.info("t=%g precision=%.3f recall=%.3f f1=%.3f", t, report.overall.precision,
                 report.overall.recall, report.overall.f1)
    return 0


def _cmd_cross_domain(args: argparse.Namespace) -> int:
    if not (len(args.domains) == len(args.checkpoints) == len(args.corpora) == len(args.kgs) == 2):
        raise ValueError("cross-domain needs exactly two domains with matching "
                         "--checkpoints, --corpora, and --kgs")
    _log_config("cross-domain", {"domains": args.domains, "checkpoints": args.checkpoints,
                                 "corpora": args.corpora, "kgs": args.kgs})
    params_by = {d: _open_checkpoint(p) for d, p in zip(args.domains, args.checkpoints)}
    corpora_by = {d: load_corpus(p) for d, p in zip(args.domains, args.corpora)}
    graphs_by = {d: _load_kg([p]) for d, p in zip(args.domains, args.kgs)}
    results = cross_domain(params_by, corpora_by, graphs_by, max_span_width=args.max_span_width)
    cells = {f"{a}->{b}": report_to_dict(r) for (a, b), r in results.items()}
    matrix = {a: {b: results[(a, b)].overall.f1 for b in args.domains} for a in args.domains}
    width = max(len(d) for d in args.domains) + 2
    header = "train\\test".ljust(width) + "".join(d.rjust(width) for d in args.domains)
    print(header)
    for a in args.domains:
        print(a.ljust(width) + "".join(f"{matrix[a][b]:.3f}".rjust(width) for b in args.domains))
    if args.out:
        _write_json({"f1_matrix": matrix, "reports": cells}, args.out)
        log.info("wrote %s", args.out)
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    names = [n.strip() for n in args.drop.split(",") if n.strip()]
    unknown = [n for n in names if n not in ABLATION_SOURCES]
    if unknown:
        raise ValueError(f"unknown knowledge sources {unknown}; choose from "
                         f"{sorted(ABLATION_SOURCES)}")
    sources = [s for n in names for s in ABLATION_SOURCES[n]]
    model_cfg, train_cfg = _resolve_configs(args)
    variant = Variant(args.variant)
    _log_config("ablate", {
        "drop": names, "train": args.train, "dev": args.dev, "test": args.test,
        "kg": args.kg, "retrain": not args.no_retrain, "baseline": args.baseline,
        "variant": variant.value, "model": model_cfg.to_dict(), "training": train_cfg.to_dict(),
    })
    corpus_train = load_corpus(args.train)
    corpus_dev = load_corpus(args.dev) if args.dev else None
    corpus_test = load_corpus(args.test)
    graph = _load_kg(args.kg)
    baseline_params = _open_checkpoint(args.baseline) if args.baseline else None
    outcome = ablate_knowledge(
        sources, corpus_train, corpus_test, graph, model_cfg, train_cfg,
        corpus_dev=corpus_dev, variant=variant,
        threshold=train_cfg.dev_threshold, retrain=not args.no_retrain,
        baseline_params=baseline_params,
    )
    rows = [("complete", outcome.baseline), (f"-{args.drop}" if names else "complete", outcome.report)]
    print(format_report_table(rows))
    print(f"delta F1: {outcome.delta_f1:+.3f}")
    if args.out:
        _write_json({
            "dropped": [s.value for s in outcome.dropped],
            "baseline": report_to_dict(outcome.baseline),
            "ablated": report_to_dict(outcome.report),
            "delta_f1": outcome.delta_f1,
        }, args.out)
        log.info("wrote %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgcoref",
        description="Knowledge-aware pronoun coreference resolution pipeline.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug-level logging")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("gen-synth", help="generate a synthetic domain (corpora + knowledge files)")
    p.add_argument("--out", required=True)
    p.add_argument("--domain-tag", default="news")
    p.add_argument("--train-docs", type=int, default=200)
    p.add_argument("--dev-docs", type=int, default=50)
    p.add_argument("--test-docs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--knowledge-dependence", type=float, default=1.0)
    p.add_argument("--n-entities", type=int, default=48)
    p.add_argument("--vocab-size", type=int, default=72)
    p.add_argument("--distractors", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("extract-sp", help="mine selectional preferences from dependency counts")
    p.add_argument("--edges", required=True)
    p.add_argument("--prob", type=float, default=DEFAULT_SP_PROB_THRESHOLD)
    p.add_argument("--min-count", type=int, default=DEFAULT_SP_COUNT_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract_sp)

    p = sub.add_parser("gen-ling", help="plurality/animacy-gender triplets from markups")
    p.add_argument("--markups", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--with-pronouns", action="store_true",
                   help="append the closed pronoun attribute table")
    p.set_defaults(func=_cmd_gen_ling)

    p = sub.add_parser("build-kg", help="merge triplet files into one knowledge graph TSV")
    p.add_argument("--omcs", action="append", default=[],
                   help="commonsense triplets, filtered by --min-confidence")
    p.add_argument("--medical", action="append", default=[])
    p.add_argument("--ling", action="append", default=[])
    p.add_argument("--sp", action="append", default=[])
    p.add_argument("--other", action="append", default=[])
    p.add_argument("--min-confidence", type=float, default=DEFAULT_MIN_CONFIDENCE)
    p.add_argument("--no-pronoun-table", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_kg)

    p = sub.add_parser("train", help="train a scorer and save a checkpoint")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--kg", action="append", default=[])
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.COMPLETE.value)
    p.add_argument("--config", help="JSON file with model/train sections; flags override")
    p.add_argument("--log", help="per-epoch CSV log path")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a corpus and report P/R/F1 per pronoun type")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kg", action="append", default=[])
    p.add_argument("--threshold", type=float, default=None,
                   help="defaults to the checkpoint's stored threshold")
    p.add_argument("--gold-mode", action="store_true")
    p.add_argument("--max-span-width", type=int, default=DEFAULT_MAX_SPAN_WIDTH)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", help="JSON output path; table and figure land alongside")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("predict", help="write selected antecedents as JSONL")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kg", action="append", default=[])
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--gold-mode", action="store_true")
    p.add_argument("--max-span-width", type=int, default=DEFAULT_MAX_SPAN_WIDTH)
    p.add_argument("--out", help="output JSONL path; stdout when omitted")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("sweep", help="threshold sweep with CSV and figure output")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kg", action="append", default=[])
    p.add_argument("--grid", help="comma-separated ascending thresholds")
    p.add_argument("--gold-mode", action="store_true")
    p.add_argument("--max-span-width", type=int, default=DEFAULT_MAX_SPAN_WIDTH)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV output path; figure lands alongside")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("cross-domain", help="train/test matrix over two domains")
    p.add_argument("--domains", nargs="+", required=True)
    p.add_argument("--checkpoints", nargs="+", required=True)
    p.add_argument("--corpora", nargs="+", required=True)
    p.add_argument("--kgs", nargs="+", required=True)
    p.add_argument("--max-span-width", type=int, default=DEFAULT_MAX_SPAN_WIDTH)
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=_cmd_cross_domain)

    p = sub.add_parser("ablate", help="measure F1 impact of dropping knowledge sources")
    p.add_argument("--drop", required=True, help="comma-separated: ling,sp,omcs,medical")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--test", required=True)
    p.add_argument("--kg", action="append", required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.COMPLETE.value)
    p.add_argument("--config")
    p.add_argument("--baseline", help="existing complete-variant checkpoint; else retrains one")
    p.add_argument("--no-retrain", action="store_true",
                   help="re-evaluate the baseline on the filtered graph instead of retraining")
    p.add_argument("--out", help="JSON output path")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        log.error("missing input file: %s", exc.filename or exc)
        return 1
    except Exception as exc:  # surface module errors with their origin
        log.error("%s.%s: %s", type(exc).__module__, type(exc).__name__, exc)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
