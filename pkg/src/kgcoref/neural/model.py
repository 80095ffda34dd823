"""The trainable scorer: span encoding, knowledge attention, pair scoring, loss.

Per pronoun instance the model embeds the document, runs a bidirectional LSTM
reset at sentence boundaries, builds span representations (boundary states,
an attention-weighted head vector over input embeddings, a length embedding),
attends over retrieved knowledge triplets conditioned on the candidate-pronoun
pair, and scores each candidate with a mention net and a pairwise net. Training
maximizes the probability mass the candidate-set softmax assigns to the gold
antecedents; the loss is the negative log of that mass. Gradients are exact and
come from the reverse-mode graph in the autograd module.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..corpus import Document, PronounInstance, Span
from ..kg import KnowledgeGraph, KnowledgeTriplet
from . import autograd as ag
from .config import ModelConfig, Variant, length_bucket
from .params import ModelParameters

log = logging.getLogger(__name__)


class GoldCoverageError(ValueError):
    """A gold antecedent is missing from the candidate set, so the loss is undefined."""


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate span with its raw score F and candidate-set probability."""

    span: Span
    score: float
    probability: float


@dataclass(frozen=True)
class SpanContext:
    """A span representation e paired with its aggregated knowledge vector o."""

    e: np.ndarray
    o: np.ndarray
    span: Span


@dataclass
class InstanceFeatures:
    """Index arrays for one pronoun instance; reusable across epochs."""

    token_ids: np.ndarray
    sentence_bounds: list[tuple[int, int]]
    candidates: list[Span]
    pronoun_span: Span
    flat_span_tok: np.ndarray
    flat_span_seg: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    buckets: np.ndarray
    k_tail_ids: np.ndarray
    k_tail_seg: np.ndarray
    k_tail_inv: np.ndarray
    n_k_rows: int
    pair_span: np.ndarray
    pair_krow: np.ndarray
    pair_slot: np.ndarray
    pron_rows: np.ndarray
    gold_idx: np.ndarray | None
    missing_gold: tuple[Span, ...]

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)


def prepare_instance(
    params: ModelParameters,
    doc: Document,
    pronoun: PronounInstance,
    candidates: list[Span],
    graph: KnowledgeGraph | None,
) -> InstanceFeatures:
    """Precompute every index array the forward pass needs for one instance."""
    if not candidates:
        raise ValueError(f"doc {doc.doc_id}: empty candidate set for pronoun "
                         f"at token {pronoun.pronoun_span.start}")
    token_ids = params.token_ids(doc.all_tokens())
    bounds = [doc.sentence_bounds(si) for si in range(len(doc.sentences))]
    spans = list(candidates) + [pronoun.pronoun_span]
    flat_tok: list[int] = []
    flat_seg: list[int] = []
    for j, span in enumerate(spans):
        flat_tok.extend(range(span.start, span.end + 1))
        flat_seg.extend([j] * span.width)
    starts = np.array([s.start for s in spans], dtype=np.intp)
    ends = np.array([s.end for s in spans], dtype=np.intp)
    buckets = np.array([length_bucket(s.width) for s in spans], dtype=np.intp)

    use_knowledge = params.variant is not Variant.WITHOUT_KG and graph is not None
    max_rows = params.config.max_knowledge if params.variant is Variant.WITHOUT_ATTENTION else None
    tail_ids: list[int] = []
    tail_seg: list[int] = []
    tail_inv: list[float] = []
    rows_per_span: list[list[int]] = []
    n_rows = 0
    for span in spans:
        row_ids: list[int] = []
        if use_knowledge:
            triplets = graph.retrieve(doc.span_tokens(span))
            if max_rows is not None:
                triplets = triplets[:max_rows]
            for triplet in triplets:
                ids = params.token_ids(triplet.tail)
                tail_ids.extend(ids.tolist())
                tail_seg.extend([n_rows] * len(ids))
                tail_inv.extend([1.0 / len(ids)] * len(ids))
                row_ids.append(n_rows)
                n_rows += 1
        rows_per_span.append(row_ids)

    pair_span: list[int] = []
    pair_krow: list[int] = []
    pair_slot: list[int] = []
    for j in range(len(candidates)):
        for slot, row in enumerate(rows_per_span[j]):
            pair_span.append(j)
            pair_krow.append(row)
            pair_slot.append(slot)
    pron_rows = np.array(rows_per_span[-1], dtype=np.intp)

    gold = pronoun.sorted_gold()
    position = {span: i for i, span in enumerate(candidates)}
    missing = tuple(g for g in gold if g not in position)
    gold_idx = None
    if gold and not missing:
        gold_idx = np.array([position[g] for g in gold], dtype=np.intp)

    return InstanceFeatures(
        token_ids=token_ids,
        sentence_bounds=bounds,
        candidates=list(candidates),
        pronoun_span=pronoun.pronoun_span,
        flat_span_tok=np.array(flat_tok, dtype=np.intp),
        flat_span_seg=np.array(flat_seg, dtype=np.intp),
        starts=starts,
        ends=ends,
        buckets=buckets,
        k_tail_ids=np.array(tail_ids, dtype=np.intp),
        k_tail_seg=np.array(tail_seg, dtype=np.intp),
        k_tail_inv=np.array(tail_inv, dtype=np.float64),
        n_k_rows=n_rows,
        pair_span=np.array(pair_span, dtype=np.intp),
        pair_krow=np.array(pair_krow, dtype=np.intp),
        pair_slot=np.array(pair_slot, dtype=np.intp),
        pron_rows=pron_rows,
        gold_idx=gold_idx,
        missing_gold=missing,
    )


def _dropout(x: ag.Var, config: ModelConfig, train_mode: bool,
             rng: np.random.Generator | None) -> ag.Var:
    if not train_mode or config.dropout == 0.0:
        return x
    if rng is None:
        raise ValueError("train_mode with dropout needs a random generator")
    keep = 1.0 - config.dropout
    mask = (rng.random(x.data.shape) < keep) / keep
    return ag.scale(x, mask)


def _ffn(pvars: dict[str, ag.Var], prefix: str, x: ag.Var, config: ModelConfig,
         train_mode: bool, rng: np.random.Generator | None) -> ag.Var:
    h1 = ag.relu(ag.add(ag.matmul(x, pvars[f"{prefix}_w1"]), pvars[f"{prefix}_b1"]))
    h1 = _dropout(h1, config, train_mode, rng)
    h2 = ag.relu(ag.add(ag.matmul(h1, pvars[f"{prefix}_w2"]), pvars[f"{prefix}_b2"]))
    h2 = _dropout(h2, config, train_mode, rng)
    return ag.add(ag.matmul(h2, pvars[f"{prefix}_w3"]), pvars[f"{prefix}_b3"])


def _encode(pvars: dict[str, ag.Var], config: ModelConfig, token_ids: np.ndarray,
            sentence_bounds: list[tuple[int, int]], train_mode: bool,
            rng: np.random.Generator | None) -> tuple[ag.Var, ag.Var]:
    """Return (input embeddings X, contextual states H), dropout already applied to H."""
    X = ag.gather_rows(pvars["word_embeddings"], token_ids)
    Xin = _dropout(X, config, train_mode, rng)
    parts = []
    for s0, s1 in sentence_bounds:
        xs = ag.rows(Xin, s0, s1)
        hf = ag.lstm_sequence(xs, pvars["lstm_fwd_wx"], pvars["lstm_fwd_wh"], pvars["lstm_fwd_b"])
        hb = ag.lstm_sequence(xs, pvars["lstm_bwd_wx"], pvars["lstm_bwd_wh"], pvars["lstm_bwd_b"],
                              reverse=True)
        parts.append(ag.concat_cols([hf, hb]))
    H = parts[0] if len(parts) == 1 else ag.vstack(parts)
    return X, _dropout(H, config, train_mode, rng)


def _forward(pvars: dict[str, ag.Var], config: ModelConfig, feats: InstanceFeatures,
             variant: Variant, train_mode: bool, rng: np.random.Generator | None) -> ag.Var:
    """Score every candidate against the pronoun; returns F as an [n, 1] node."""
    n = feats.n_candidates
    X, H = _encode(pvars, config, feats.token_ids, feats.sentence_bounds, train_mode, rng)

    # span representations for candidates plus the pronoun (last row)
    alpha = _ffn(pvars, "nn_alpha", H, config, train_mode, rng)
    attn = ag.segment_softmax(ag.gather_rows(alpha, feats.flat_span_tok), feats.flat_span_seg, n + 1)
    head = ag.segment_sum(ag.mul(attn, ag.gather_rows(X, feats.flat_span_tok)),
                          feats.flat_span_seg, n + 1)
    E = ag.concat_cols([
        ag.gather_rows(H, feats.starts),
        ag.gather_rows(H, feats.ends),
        head,
        ag.gather_rows(pvars["length_buckets"], feats.buckets),
    ])
    Ec = ag.rows(E, 0, n)
    Ep = ag.gather_rows(E, np.full(n, n, dtype=np.intp))
    pair = ag.concat_cols([Ec, Ep])

    if variant is Variant.WITHOUT_KG:
        f_m = _ffn(pvars, "nn_m", Ec, config, train_mode, rng)
        f_c = _ffn(pvars, "nn_c", ag.concat_cols([Ec, Ep, ag.mul(Ec, Ep)]), config, train_mode, rng)
        return ag.add(f_m, f_c)

    # triplet vectors: mean of tail word embeddings, zero row for OOV words
    de = config.embed_dim
    if feats.n_k_rows:
        tails = ag.scale(ag.gather_rows(pvars["word_embeddings"], feats.k_tail_ids),
                         feats.k_tail_inv[:, None])
        K = ag.segment_sum(tails, feats.k_tail_seg, feats.n_k_rows)
    else:
        K = ag.const(np.zeros((0, de)))

    if variant is Variant.WITHOUT_ATTENTION:
        o_s = ag.pad_concat_rows(K, feats.pair_krow, feats.pair_span, feats.pair_slot,
                                 n, config.max_knowledge)
        o_p_row = ag.pad_concat_rows(K, feats.pron_rows,
                                     np.zeros(len(feats.pron_rows), dtype=np.intp),
                                     np.arange(len(feats.pron_rows), dtype=np.intp),
                                     1, config.max_knowledge)
        o_p = ag.gather_rows(o_p_row, np.zeros(n, dtype=np.intp))
    else:
        if len(feats.pair_krow):
            k_rows = ag.gather_rows(K, feats.pair_krow)
            beta = _ffn(pvars, "nn_beta",
                        ag.concat_cols([ag.gather_rows(pair, feats.pair_span), k_rows]),
                        config, train_mode, rng)
            w = ag.segment_softmax(beta, feats.pair_span, n)
            o_s = ag.segment_sum(ag.mul(w, k_rows), feats.pair_span, n)
        else:
            o_s = ag.const(np.zeros((n, de)))
        m_p = len(feats.pron_rows)
        if m_p:
            p_dest = np.repeat(np.arange(n, dtype=np.intp), m_p)
            p_rows = np.tile(feats.pron_rows, n)
            kp_rows = ag.gather_rows(K, p_rows)
            beta_p = _ffn(pvars, "nn_beta",
                          ag.concat_cols([ag.gather_rows(pair, p_dest), kp_rows]),
                          config, train_mode, rng)
            w_p = ag.segment_softmax(beta_p, p_dest, n)
            o_p = ag.segment_sum(ag.mul(w_p, kp_rows), p_dest, n)
        else:
            o_p = ag.const(np.zeros((n, de)))

    f_m = _ffn(pvars, "nn_m", ag.concat_cols([Ec, o_s]), config, train_mode, rng)
    f_c = _ffn(pvars, "nn_c",
               ag.concat_cols([Ec, o_s, Ep, o_p, ag.mul(Ec, Ep), ag.mul(o_s, o_p)]),
               config, train_mode, rng)
    return ag.add(f_m, f_c)


def _param_vars(params: ModelParameters) -> dict[str, ag.Var]:
    return {name: ag.Var(arr) for name, arr in params.arrays.items()}


def loss_from_features(
    params: ModelParameters,
    config: ModelConfig,
    feats: InstanceFeatures,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, np.ndarray]:
    """Negative log probability mass on the gold antecedents, with exact gradients."""
    if feats.missing_gold:
        raise GoldCoverageError(
            f"gold antecedents {[s.pair() for s in feats.missing_gold]} absent from candidates"
        )
    if feats.gold_idx is None:
        raise GoldCoverageError("instance has no gold antecedents")
    pvars = _param_vars(params)
    F = _forward(pvars, config, feats, params.variant, train_mode, rng)
    lse_all = ag.logsumexp_col(F)
    lse_gold = ag.logsumexp_col(ag.gather_rows(F, feats.gold_idx))
    objective = ag.add(lse_all, ag.scale(lse_gold, -1.0))
    ag.backward(objective)
    grads = params.flatten_grads({name: v.grad for name, v in pvars.items()})
    return float(objective.data[0, 0]), grads


def loss(
    params: ModelParameters,
    config: ModelConfig,
    doc: Document,
    pronoun: PronounInstance,
    candidates: list[Span],
    graph: KnowledgeGraph | None,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, np.ndarray]:
    feats = prepare_instance(params, doc, pronoun, candidates, graph)
    return loss_from_features(params, config, feats, train_mode, rng)


def scores_from_features(params: ModelParameters, config: ModelConfig,
                         feats: InstanceFeatures) -> np.ndarray:
    F = _forward(_param_vars(params), config, feats, params.variant, False, None)
    return F.data[:, 0].copy()


def score_instance(
    params: ModelParameters,
    config: ModelConfig,
    doc: Document,
    pronoun: PronounInstance,
    candidates: list[Span],
    graph: KnowledgeGraph | None,
) -> np.ndarray:
    """Raw scores F for each candidate, evaluation mode."""
    feats = prepare_instance(params, doc, pronoun, candidates, graph)
    return scores_from_features(params, config, feats)


def select(candidates: list[tuple[Span, float]], threshold: float) -> list[ScoredCandidate]:
    """Normalize scores over the candidate set and keep those above the threshold."""
    if not candidates:
        raise ValueError("cannot select from an empty candidate list")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    raw = np.array([score for _, score in candidates], dtype=np.float64)
    shifted = np.exp(raw - raw.max())
    probs = shifted / shifted.sum()
    return [
        ScoredCandidate(span, float(score), float(p))
        for (span, score), p in zip(candidates, probs)
        if p > threshold
    ]


def encode_document(
    params: ModelParameters,
    config: ModelConfig,
    doc: Document,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Contextual token states, one row per document token."""
    if doc.n_tokens == 0:
        raise ValueError(f"doc {doc.doc_id}: cannot encode an empty document")
    pvars = _param_vars(params)
    bounds = [doc.sentence_bounds(si) for si in range(len(doc.sentences))]
    _, H = _encode(pvars, config, params.token_ids(doc.all_tokens()), bounds, train_mode, rng)
    return H.data.copy()


def span_repr(
    params: ModelParameters,
    config: ModelConfig,
    xstar: np.ndarray,
    x: np.ndarray,
    span: Span,
) -> np.ndarray:
    """Span representation from contextual states and input embeddings."""
    if span.end >= xstar.shape[0]:
        raise ValueError(f"span {span.pair()} exceeds encoded length {xstar.shape[0]}")
    pvars = _param_vars(params)
    idx = np.arange(span.start, span.end + 1, dtype=np.intp)
    seg = np.zeros(span.width, dtype=np.intp)
    alpha = _ffn(pvars, "nn_alpha", ag.gather_rows(ag.const(xstar), idx), config, False, None)
    attn = ag.segment_softmax(alpha, seg, 1)
    head = ag.segment_sum(ag.mul(attn, ag.gather_rows(ag.const(x), idx)), seg, 1)
    bucket = ag.gather_rows(pvars["length_buckets"],
                            np.array([length_bucket(span.width)], dtype=np.intp))
    e = ag.concat_cols([
        ag.const(xstar[span.start : span.start + 1]),
        ag.const(xstar[span.end : span.end + 1]),
        head,
        bucket,
    ])
    return e.data[0].copy()


def knowledge_embed(params: ModelParameters, triplet: KnowledgeTriplet) -> np.ndarray:
    """Triplet vector: mean of tail word embeddings (OOV words contribute zero)."""
    ids = params.token_ids(triplet.tail)
    return params.arrays["word_embeddings"][ids].mean(axis=0)


def knowledge_attend(
    params: ModelParameters,
    e_s: np.ndarray,
    e_p: np.ndarray,
    knowledge: list[np.ndarray],
) -> np.ndarray:
    """Aggregate triplet vectors with attention conditioned on the (span, pronoun) pair."""
    if params.variant is not Variant.COMPLETE:
        raise ValueError(f"knowledge attention is undefined for variant {params.variant.value}")
    de = params.config.embed_dim
    if not knowledge:
        return np.zeros(de)
    pvars = _param_vars(params)
    K = ag.const(np.stack(knowledge))
    m = K.data.shape[0]
    ctx = np.concatenate([e_s, e_p])[None, :].repeat(m, axis=0)
    beta = _ffn(pvars, "nn_beta", ag.concat_cols([ag.const(ctx), K]), params.config, False, None)
    w = ag.segment_softmax(beta, np.zeros(m, dtype=np.intp), 1)
    o = ag.segment_sum(ag.mul(w, K), np.zeros(m, dtype=np.intp), 1)
    return o.data[0].copy()


def knowledge_concat(config: ModelConfig, knowledge: list[np.ndarray]) -> np.ndarray:
    """Fixed-arity replacement for attention: concatenate then zero-pad."""
    out = np.zeros(config.max_knowledge * config.embed_dim)
    for i, k in enumerate(knowledge[: config.max_knowledge]):
        out[i * config.embed_dim : (i + 1) * config.embed_dim] = k
    return out


def score_pair(params: ModelParameters, sc_s: SpanContext, sc_p: SpanContext) -> float:
    """F(s, p) = mention score of s plus pairwise coherence of (s, p)."""
    config = params.config
    o_dim = config.knowledge_dim(params.variant)
    for name, sc in (("span", sc_s), ("pronoun", sc_p)):
        if sc.e.shape != (config.span_repr_dim,):
            raise ValueError(f"{name} context e has shape {sc.e.shape}")
        if sc.o.shape != (o_dim,):
            raise ValueError(f"{name} context o has shape {sc.o.shape}, expected ({o_dim},)")
    pvars = _param_vars(params)
    m_in = ag.const(np.concatenate([sc_s.e, sc_s.o])[None, :])
    c_in = ag.const(np.concatenate([
        sc_s.e, sc_s.o, sc_p.e, sc_p.o, sc_s.e * sc_p.e, sc_s.o * sc_p.o,
    ])[None, :])
    f_m = _ffn(pvars, "nn_m", m_in, config, False, None)
    f_c = _ffn(pvars, "nn_c", c_in, config, False, None)
    return float(f_m.data[0, 0] + f_c.data[0, 0])


def pair_contexts(
    params: ModelParameters,
    config: ModelConfig,
    doc: Document,
    pronoun: PronounInstance,
    candidate: Span,
    graph: KnowledgeGraph | None,
) -> tuple[SpanContext, SpanContext]:
    """Build (candidate, pronoun) contexts through the public single-span ops."""
    xstar = encode_document(params, config, doc)
    pvars = _param_vars(params)
    X = ag.gather_rows(pvars["word_embeddings"], params.token_ids(doc.all_tokens())).data
    e_s = span_repr(params, config, xstar, X, candidate)
    e_p = span_repr(params, config, xstar, X, pronoun.pronoun_span)
    if params.variant is Variant.WITHOUT_KG:
        empty = np.zeros(0)
        return SpanContext(e_s, empty, candidate), SpanContext(e_p, empty, pronoun.pronoun_span)
    retrieved_s = graph.retrieve(doc.span_tokens(candidate)) if graph else []
    retrieved_p = graph.retrieve(doc.span_tokens(pronoun.pronoun_span)) if graph else []
    k_s = [knowledge_embed(params, t) for t in retrieved_s]
    k_p = [knowledge_embed(params, t) for t in retrieved_p]
    if params.variant is Variant.WITHOUT_ATTENTION:
        o_s = knowledge_concat(config, k_s)
        o_p = knowledge_concat(config, k_p)
    else:
        o_s = knowledge_attend(params, e_s, e_p, k_s)
        o_p = knowledge_attend(params, e_s, e_p, k_p)
    return SpanContext(e_s, o_s, candidate), SpanContext(e_p, o_p, pronoun.pronoun_span)
