"""Attention sequence-to-sequence translator from phenotypes to prescriptions.

A stacked GRU encoder turns the fixed 7-token phenotype sentence into one
annotation per token; a stacked GRU decoder emits the prescription sentence
token by token, attending additively over the annotations at every step.
Training is teacher-forced over length buckets; evaluation reports
perplexity, exact-match and grammar-failure rates.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier import split_train_test
from .corpus import (
    BUCKETS,
    EOS,
    GO,
    PAD,
    GrammarError,
    Phenotype,
    Prescription,
    TokenSequence,
    Vocabulary,
    detokenize_target,
    schedule_text,
    tokenize_source,
)
from .nn import (
    Adam,
    Parameter,
    Tensor,
    additive_attention,
    clip_global_norm,
    cross_entropy,
    dense,
    embedding_lookup,
    gru_cell,
    load_checkpoint,
    no_grad,
    save_checkpoint,
    softmax,
    xavier_uniform,
    zero_grad,
)

__all__ = [
    "SOURCE_LEN",
    "TranslatorError",
    "ArnnConfig",
    "EpochPerplexity",
    "TranslationResult",
    "TranslationReport",
    "Translator",
    "build",
    "make_pairs",
    "encode_source",
    "train",
    "perplexity",
    "translate",
    "decode_batch",
    "evaluate_translations",
    "export_decoder_embeddings",
    "render_prescription",
    "save",
    "load",
    "write_perplexity_csv",
]

# Every source sentence has exactly 7 tokens (3 conditions, sex, age,
# season, year); the encoder produces one annotation per token.
SOURCE_LEN = 7

_CHECKPOINT_KIND = "translator/1"


class TranslatorError(ValueError):
    """Invalid translator configuration or input."""


@dataclass(frozen=True)
class ArnnConfig:
    """Architecture and training hyperparameters plus the two vocabularies.

    The encoder and decoder are stacks of `layers` GRU layers of width
    `hidden`; both sides embed tokens into `embedding` dimensions. Target
    sentences are grouped into the smallest `buckets` entry that holds them
    (EOS included); longer sentences are rejected.
    """

    source_vocab: Vocabulary
    target_vocab: Vocabulary
    layers: int = 2
    hidden: int = 64
    embedding: int = 32
    buckets: tuple[int, ...] = BUCKETS
    teacher_forcing: bool = True
    beam_width: int = 1
    learning_rate: float = 2e-3
    lr_halflife: int = 0  # halve the learning rate every this many epochs (0 = constant)
    batch_size: int = 64
    clip_norm: float = 5.0

    @classmethod
    def desk(cls, source_vocab: Vocabulary, target_vocab: Vocabulary,
             **overrides) -> "ArnnConfig":
        """Small preset sized for generated desk corpora."""
        overrides.setdefault("hidden", 96)
        overrides.setdefault("embedding", 48)
        overrides.setdefault("learning_rate", 4e-3)
        overrides.setdefault("lr_halflife", 6)
        overrides.setdefault("batch_size", 128)
        return cls(source_vocab=source_vocab, target_vocab=target_vocab, **overrides)

    @classmethod
    def paper(cls, source_vocab: Vocabulary, target_vocab: Vocabulary,
              **overrides) -> "ArnnConfig":
        """Full-scale preset: 3 GRU layers of 512 units."""
        overrides.setdefault("layers", 3)
        overrides.setdefault("hidden", 512)
        overrides.setdefault("embedding", 256)
        return cls(source_vocab=source_vocab, target_vocab=target_vocab, **overrides)

    def validate(self) -> "ArnnConfig":
        if self.source_vocab.role != "source" or self.target_vocab.role != "target":
            raise TranslatorError(
                f"vocabulary roles must be source/target, got "
                f"{self.source_vocab.role!r}/{self.target_vocab.role!r}"
            )
        if min(self.layers, self.hidden, self.embedding) < 1:
            raise TranslatorError("layers, hidden and embedding must be positive")
        if not self.buckets or any(b < 1 for b in self.buckets):
            raise TranslatorError(f"invalid buckets: {self.buckets}")
        if any(a >= b for a, b in zip(self.buckets, self.buckets[1:])):
            raise TranslatorError(f"buckets must strictly increase: {self.buckets}")
        if self.beam_width < 1:
            raise TranslatorError("beam_width must be >= 1")
        if self.batch_size < 1:
            raise TranslatorError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise TranslatorError("learning_rate must be positive")
        return self


@dataclass(frozen=True)
class EpochPerplexity:
    """Perplexities recorded after one training epoch.

    `train` is the teacher-forced perplexity over the tokens seen during the
    epoch; `test` the held-out perplexity, also broken down per bucket.
    """

    epoch: int
    train: float
    test: float
    test_by_bucket: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class TranslationResult:
    """One decoded prescription with its attention trace.

    `attention` has one row per emitted token (EOS included) and one column
    per source token; every row sums to 1 within 1e-6.
    """

    tokens: TokenSequence
    attention: np.ndarray
    prescription: Prescription


@dataclass(frozen=True)
class TranslationReport:
    """Greedy-decoding quality over one evaluation set."""

    n_examples: int
    exact_match: float
    grammar_failure: float


class Translator:
    """The encoder-decoder network; parameters are named float32 tensors."""

    def __init__(self, config: ArnnConfig, params: dict[str, Parameter]):
        self.config = config.validate()
        self.params = params

    def parameters(self) -> list[Parameter]:
        return list(self.params.values())

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())


def build(config: ArnnConfig, seed: int = 0) -> Translator:
    """Initialize a translator with Xavier-uniform weights and zero biases."""
    cfg = config.validate()
    rng = np.random.default_rng(seed)
    H, E = cfg.hidden, cfg.embedding
    params: dict[str, Parameter] = {}

    def add_gru(name: str, n_in: int) -> None:
        params[f"{name}.wx"] = Parameter(xavier_uniform(rng, (n_in, 3 * H), fan_out=H))
        params[f"{name}.wh"] = Parameter(xavier_uniform(rng, (H, 3 * H), fan_out=H))
        params[f"{name}.b"] = Parameter(np.zeros(3 * H, dtype=np.float32))

    params["src_embed"] = Parameter(xavier_uniform(rng, (len(cfg.source_vocab), E)))
    for i in range(cfg.layers):
        add_gru(f"enc{i}", E if i == 0 else H)
    params["tgt_embed"] = Parameter(xavier_uniform(rng, (len(cfg.target_vocab), E)))
    for i in range(cfg.layers):
        add_gru(f"dec{i}", E + H if i == 0 else H)
    params["att.wq"] = Parameter(xavier_uniform(rng, (H, H)))
    params["att.wk"] = Parameter(xavier_uniform(rng, (H, H)))
    params["att.v"] = Parameter(xavier_uniform(rng, (H,), fan_in=H, fan_out=1))
    params["out.w"] = Parameter(xavier_uniform(rng, (2 * H, len(cfg.target_vocab))))
    params["out.b"] = Parameter(np.zeros(len(cfg.target_vocab), dtype=np.float32))
    return Translator(cfg, params)


def _source_batch(model: Translator, tokens) -> np.ndarray:
    """Normalize source input to an (n, SOURCE_LEN) int array."""
    if isinstance(tokens, TokenSequence):
        ids = np.asarray([tokens.ids], dtype=np.int64)
    else:
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.ndim == 1:
            ids = ids[None, :]
    if ids.ndim != 2 or ids.shape[1] != SOURCE_LEN:
        raise TranslatorError(
            f"source sentences must have exactly {SOURCE_LEN} tokens, got shape "
            f"{ids.shape}"
        )
    if ids.size and (ids.min() < 0 or ids.max() >= len(model.config.source_vocab)):
        raise TranslatorError("source token id outside the source vocabulary")
    return ids


def _encode(model: Translator, ids: np.ndarray) -> Tensor:
    """Stacked-GRU annotations for (n, SOURCE_LEN) ids -> (n, SOURCE_LEN, H)."""
    p = model.params
    cfg = model.config
    n = ids.shape[0]
    x = embedding_lookup(p["src_embed"], ids)  # (n, T, E)
    for layer in range(cfg.layers):
        wx, wh, b = p[f"enc{layer}.wx"], p[f"enc{layer}.wh"], p[f"enc{layer}.b"]
        h = Tensor(np.zeros((n, cfg.hidden), dtype=np.float32))
        steps = []
        for t in range(SOURCE_LEN):
            h = gru_cell(x[:, t], h, wx, wh, b)
            steps.append(h.reshape(n, 1, cfg.hidden))
        x = Tensor.concat(steps, axis=1)
    return x


def encode_source(model: Translator, tokens) -> np.ndarray:
    """Annotations for one source sentence: (SOURCE_LEN, hidden) float32.

    Accepts a TokenSequence or an id array; raises TranslatorError when the
    sentence does not have exactly SOURCE_LEN tokens.
    """
    ids = _source_batch(model, tokens)
    with no_grad():
        out = _encode(model, ids).numpy()
    return out[0] if out.shape[0] == 1 else out


def _zero_state(model: Translator, n: int) -> list[Tensor]:
    return [Tensor(np.zeros((n, model.config.hidden), dtype=np.float32))
            for _ in range(model.config.layers)]


def _decode_step(model: Translator, prev_ids: np.ndarray, state: list[Tensor],
                 annotations: Tensor) -> tuple[Tensor, list[Tensor], Tensor]:
    """One decoder step: previous token ids -> (logits, new state, attention).

    The attention query is the previous top-layer state; the context vector
    is concatenated with the token embedding at the first layer and with the
    top hidden state before the output projection.
    """
    p = model.params
    context, att = additive_attention(
        state[-1], annotations, annotations, p["att.wq"], p["att.wk"], p["att.v"]
    )
    x = Tensor.concat([embedding_lookup(p["tgt_embed"], prev_ids), context], axis=1)
    new_state = []
    for layer in range(model.config.layers):
        x = gru_cell(x, state[layer], p[f"dec{layer}.wx"], p[f"dec{layer}.wh"],
                     p[f"dec{layer}.b"])
        new_state.append(x)
    logits = dense(Tensor.concat([new_state[-1], context], axis=1),
                   p["out.w"], p["out.b"])
    return logits, new_state, att


def _teacher_forced_logits(model: Translator, src: np.ndarray,
                           tgt: np.ndarray) -> list[Tensor]:
    """Per-step logits when the gold prefix (GO, tgt[:-1]) feeds the decoder."""
    annotations = _encode(model, src)
    state = _zero_state(model, src.shape[0])
    go = np.full(src.shape[0], GO, dtype=np.int64)
    logits: list[Tensor] = []
    for t in range(tgt.shape[1]):
        prev = go if t == 0 else tgt[:, t - 1]
        step_logits, state, _ = _decode_step(model, prev, state, annotations)
        logits.append(step_logits)
    return logits


def _batch_loss(model: Translator, src: np.ndarray, tgt: np.ndarray) -> tuple[Tensor, float]:
    """Summed -log p over non-PAD target tokens, and the token count."""
    mask = (tgt != PAD).astype(np.float64)
    total: Tensor | None = None
    for t, logits in enumerate(_teacher_forced_logits(model, src, tgt)):
        if mask[:, t].sum() == 0:
            continue
        term = cross_entropy(softmax(logits, axis=1), tgt[:, t],
                             weights=mask[:, t], reduction="sum")
        total = term if total is None else total + term
    if total is None:
        raise TranslatorError("batch contains no non-PAD target tokens")
    return total, float(mask.sum())


def _eval_nll(model: Translator, src: np.ndarray, tgt: np.ndarray) -> tuple[float, int]:
    """Summed -log p and token count, in float64 off the raw logits."""
    nll, count = 0.0, 0
    with no_grad():
        for t, logits in enumerate(_teacher_forced_logits(model, src, tgt)):
            keep = tgt[:, t] != PAD
            if not keep.any():
                continue
            z = logits.numpy().astype(np.float64)
            z -= z.max(axis=1, keepdims=True)
            log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
            rows = np.flatnonzero(keep)
            nll -= float(log_p[rows, tgt[rows, t]].sum())
            count += rows.size
    return nll, count


def _bucket_for(length: int, buckets: tuple[int, ...]) -> int:
    for b in buckets:
        if length <= b:
            return b
    raise TranslatorError(
        f"target sentence of {length} tokens exceeds the largest bucket "
        f"{buckets[-1]}; drop it upstream"
    )


def _bucketize(model: Translator, pairs: Sequence[tuple[TokenSequence, TokenSequence]],
               ) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Group (source, target) pairs into padded per-bucket id arrays."""
    cfg = model.config
    grouped: dict[int, tuple[list, list]] = {}
    for source, target in pairs:
        if len(source.ids) != SOURCE_LEN:
            raise TranslatorError(
                f"source sentences must have exactly {SOURCE_LEN} tokens, "
                f"got {len(source.ids)}"
            )
        bucket = _bucket_for(len(target.ids), cfg.buckets)
        srcs, tgts = grouped.setdefault(bucket, ([], []))
        srcs.append(source.ids)
        tgts.append(target.ids + (PAD,) * (bucket - len(target.ids)))
    return {
        b: (np.asarray(srcs, dtype=np.int64), np.asarray(tgts, dtype=np.int64))
        for b, (srcs, tgts) in sorted(grouped.items())
    }


def make_pairs(records, source_vocab: Vocabulary, target_vocab: Vocabulary,
               ) -> list[tuple[TokenSequence, TokenSequence]]:
    """Tokenize corpus records into (source, target) sentence pairs."""
    from .corpus import tokenize_target  # local import keeps module load light

    return [
        (tokenize_source(r.phenotype, source_vocab),
         tokenize_target(r.prescription, target_vocab))
        for r in records
    ]


def perplexity(model: Translator,
               pairs: Sequence[tuple[TokenSequence, TokenSequence]]) -> float:
    """exp of the mean -log p over all non-PAD target tokens.

    Probabilities come from teacher forcing (gold prefixes). A model that
    spreads mass uniformly scores exactly the target vocabulary size; an
    empty pair list raises TranslatorError.
    """
    if not pairs:
        raise TranslatorError("perplexity of an empty set is undefined")
    total, count = 0.0, 0
    for src, tgt in _bucketize(model, pairs).values():
        for start in range(0, src.shape[0], 512):
            nll, n = _eval_nll(model, src[start:start + 512], tgt[start:start + 512])
            total += nll
            count += n
    return float(np.exp(total / count))


def train(
    model: Translator,
    pairs: Sequence[tuple[TokenSequence, TokenSequence]],
    epochs: int,
    seed: int = 0,
) -> tuple[Translator, list[EpochPerplexity]]:
    """Teacher-forced training over length buckets.

    The pair list is split internally with split_train_test(seed); batches
    are drawn within buckets in a shuffled order each epoch. Each epoch
    records training perplexity (over the tokens as seen) plus held-out
    perplexity overall and per bucket. Zero epochs returns an empty curve.
    """
    cfg = model.config
    if epochs < 0:
        raise TranslatorError(f"epochs must be >= 0, got {epochs}")
    if not cfg.teacher_forcing:
        raise TranslatorError("only teacher-forced training is implemented")
    if epochs == 0:
        return model, []
    if len(pairs) < 2:
        raise TranslatorError("need at least 2 pairs to train")
    train_idx, test_idx = split_train_test(len(pairs), seed)
    train_buckets = _bucketize(model, [pairs[i] for i in train_idx])
    test_pairs = [pairs[i] for i in test_idx]
    test_buckets = _bucketize(model, test_pairs)

    params = model.parameters()
    opt = Adam(params, lr=cfg.learning_rate)
    rng = np.random.default_rng(seed)
    curve: list[EpochPerplexity] = []
    for epoch in range(1, epochs + 1):
        if cfg.lr_halflife > 0:
            opt.lr = cfg.learning_rate * 0.5 ** ((epoch - 1) // cfg.lr_halflife)
        batches = []
        for bucket, (src, tgt) in train_buckets.items():
            order = rng.permutation(src.shape[0])
            for start in range(0, order.size, cfg.batch_size):
                batches.append((bucket, order[start:start + cfg.batch_size]))
        rng.shuffle(batches)
        nll_sum, token_sum = 0.0, 0.0
        for bucket, rows in batches:
            src, tgt = train_buckets[bucket]
            zero_grad(params)
            loss, n_tokens = _batch_loss(model, src[rows], tgt[rows])
            loss.backward()
            clip_global_norm(params, cfg.clip_norm)
            opt.step()
            nll_sum += loss.item()
            token_sum += n_tokens
        by_bucket = []
        test_nll, test_tokens = 0.0, 0
        for bucket, (src, tgt) in test_buckets.items():
            nll, n = 0.0, 0
            for start in range(0, src.shape[0], 512):
                part_nll, part_n = _eval_nll(model, src[start:start + 512],
                                             tgt[start:start + 512])
                nll += part_nll
                n += part_n
            by_bucket.append((bucket, float(np.exp(nll / n))))
            test_nll += nll
            test_tokens += n
        curve.append(
            EpochPerplexity(
                epoch=epoch,
                train=float(np.exp(nll_sum / token_sum)),
                test=float(np.exp(test_nll / test_tokens)),
                test_by_bucket=tuple(by_bucket),
            )
        )
    return model, curve


def decode_batch(model: Translator, sources) -> list[tuple[int, ...]]:
    """Greedy-decode many source sentences at once; returns raw id tuples.

    Decoding runs until EOS or the largest bucket length; emitted EOS tokens
    are included. Ties in the argmax resolve to the lowest token id, so
    decoding is deterministic.
    """
    ids, att = _greedy_decode(model, _source_batch(model, sources))
    return ids


def _greedy_decode(model: Translator, src: np.ndarray,
                   ) -> tuple[list[tuple[int, ...]], list[np.ndarray]]:
    cfg = model.config
    n = src.shape[0]
    max_len = cfg.buckets[-1]
    out = np.zeros((n, max_len), dtype=np.int64)
    att_rows: list[np.ndarray] = []
    alive = np.ones(n, dtype=bool)
    lengths = np.full(n, max_len, dtype=np.int64)
    with no_grad():
        annotations = _encode(model, src)
        state = _zero_state(model, n)
        prev = np.full(n, GO, dtype=np.int64)
        for t in range(max_len):
            logits, state, att = _decode_step(model, prev, state, annotations)
            step = logits.numpy().argmax(axis=1)
            step[~alive] = PAD
            out[:, t] = step
            att_rows.append(att.numpy())
            ended = alive & (step == EOS)
            lengths[ended] = t + 1
            alive &= step != EOS
            prev = step
            if not alive.any():
                break
    sequences = [tuple(out[i, : lengths[i]].tolist()) for i in range(n)]
    attention = [
        np.stack([att_rows[t][i] for t in range(lengths[i])]) for i in range(n)
    ]
    return sequences, attention


def _beam_decode(model: Translator, src: np.ndarray,
                 ) -> tuple[tuple[int, ...], np.ndarray]:
    """Beam search over one source sentence; returns the best hypothesis."""
    cfg = model.config
    width = cfg.beam_width
    max_len = cfg.buckets[-1]
    with no_grad():
        annotations = _encode(model, src)
        # (ids, log probability, state, attention rows); ties break on ids.
        beams = [((), 0.0, _zero_state(model, 1), [])]
        done: list[tuple[tuple[int, ...], float, list[np.ndarray]]] = []
        for _ in range(max_len):
            grown = []
            for ids, logp, state, rows in beams:
                prev = np.array([ids[-1] if ids else GO], dtype=np.int64)
                logits, new_state, att = _decode_step(model, prev, state, annotations)
                z = logits.numpy()[0].astype(np.float64)
                z -= z.max()
                log_p = z - np.log(np.exp(z).sum())
                for tok in np.argsort(-log_p, kind="stable")[:width]:
                    grown.append((ids + (int(tok),), logp + float(log_p[tok]),
                                  new_state, rows + [att.numpy()[0]]))
            grown.sort(key=lambda b: (-b[1], b[0]))
            beams = []
            for ids, logp, state, rows in grown[:width]:
                if ids[-1] == EOS:
                    done.append((ids, logp, rows))
                else:
                    beams.append((ids, logp, state, rows))
            if not beams:
                break
        for ids, logp, state, rows in beams:
            done.append((ids, logp, rows))
        done.sort(key=lambda b: (-b[1], b[0]))
        ids, _, rows = done[0]
    return ids, np.stack(rows)


def translate(model: Translator, phenotype: Phenotype) -> TranslationResult:
    """Decode one phenotype into a prescription.

    Greedy when beam_width is 1, beam search otherwise; decoding stops at
    EOS or the largest bucket length. A decoded sentence that violates the
    target grammar raises GrammarError carrying the raw token ids (callers
    count these as grammar failures).
    """
    seq = tokenize_source(phenotype, model.config.source_vocab)
    src = _source_batch(model, seq)
    if model.config.beam_width == 1:
        sequences, attention = _greedy_decode(model, src)
        ids, att = sequences[0], attention[0]
    else:
        ids, att = _beam_decode(model, src)
    prescription = detokenize_target(ids, model.config.target_vocab)
    return TranslationResult(
        tokens=TokenSequence("target", ids), attention=att, prescription=prescription
    )


def evaluate_translations(
    model: Translator, pairs: Sequence[tuple[TokenSequence, TokenSequence]]
) -> TranslationReport:
    """Greedy exact-match and grammar-failure rates over (source, gold) pairs."""
    if not pairs:
        raise TranslatorError("cannot evaluate an empty pair list")
    sources = np.asarray([s.ids for s, _ in pairs], dtype=np.int64)
    decoded, _ = _greedy_decode(model, _source_batch(model, sources))
    exact, failures = 0, 0
    for (_, gold), ids in zip(pairs, decoded):
        if ids == gold.ids:
            exact += 1
        try:
            detokenize_target(ids, model.config.target_vocab)
        except GrammarError:
            failures += 1
    n = len(pairs)
    return TranslationReport(
        n_examples=n, exact_match=exact / n, grammar_failure=failures / n
    )


def export_decoder_embeddings(model: Translator) -> np.ndarray:
    """Copy of the decoder input-embedding table, one row per target token.

    Rows follow target-vocabulary index order; the PAD/GO/EOS/UNK rows are
    included so row i always embeds vocabulary index i.
    """
    return model.params["tgt_embed"].data.copy()


def render_prescription(p: Prescription) -> str:
    """One-line report block: components with doses, frequency, duration."""
    parts = [f"{cid} {dose:.1f}g" for cid, dose in zip(p.component_ids, p.doses)]
    parts.append(schedule_text(p.schedule))
    parts.append(f"{p.duration_days} DAYS")
    return "; ".join(parts)


def save(model: Translator, stem: str | Path) -> Path:
    """Write the model to <stem>.json + <stem>.bin; returns the JSON path."""
    cfg = model.config
    scalars = {
        f.name: getattr(cfg, f.name)
        for f in dataclasses.fields(cfg)
        if f.name not in ("source_vocab", "target_vocab")
    }
    meta = {
        "kind": _CHECKPOINT_KIND,
        "config": scalars,
        "source_tokens": list(cfg.source_vocab.tokens),
        "target_tokens": list(cfg.target_vocab.tokens),
    }
    arrays = {name: p.data for name, p in model.params.items()}
    return save_checkpoint(stem, arrays, meta)


def load(stem: str | Path) -> Translator:
    """Restore a model saved by save(); forward passes are bit-identical."""
    arrays, meta = load_checkpoint(stem)
    if meta.get("kind") != _CHECKPOINT_KIND:
        raise TranslatorError(f"not a translator checkpoint: kind={meta.get('kind')!r}")
    raw = dict(meta["config"])
    raw["buckets"] = tuple(raw["buckets"])
    config = ArnnConfig(
        source_vocab=Vocabulary.from_tokens("source", meta["source_tokens"]),
        target_vocab=Vocabulary.from_tokens("target", meta["target_tokens"]),
        **raw,
    )
    model = build(config)
    expected = set(model.params)
    if set(arrays) != expected:
        raise TranslatorError(
            f"checkpoint parameters {sorted(arrays)} do not match "
            f"architecture {sorted(expected)}"
        )
    for name, param in model.params.items():
        if arrays[name].shape != param.data.shape:
            raise TranslatorError(
                f"shape mismatch for {name}: checkpoint {arrays[name].shape} "
                f"vs architecture {param.data.shape}"
            )
        param.data = arrays[name].astype(np.float32)
    return model


def write_perplexity_csv(path: str | Path, curve: Sequence[EpochPerplexity]) -> Path:
    """CSV rows (epoch, split, bucket, perplexity); bucket "all" = overall."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split", "bucket", "perplexity"])
        for entry in curve:
            writer.writerow([entry.epoch, "train", "all", f"{entry.train:.6f}"])
            writer.writerow([entry.epoch, "test", "all", f"{entry.test:.6f}"])
            for bucket, ppl in entry.test_by_bucket:
                writer.writerow([entry.epoch, "test", bucket, f"{ppl:.6f}"])
    return path
