"""Frame-level cross-entropy training: SGD with momentum and L2 weight
decay, a ramp-then-halve learning-rate policy, utterance minibatching with
optional chunk truncation, and per-epoch metrics."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from .model import Model, backward, delay_span, forward, model_input, streaming_forward
from .numerics import NumericError, softmax_xent

__all__ = [
    "TrainConfig",
    "EpochStats",
    "lr_for_epoch",
    "make_minibatches",
    "sgd_step",
    "fit",
    "evaluate",
    "evaluate_streaming",
    "chunked_forward",
    "METRICS_HEADER",
    "format_stats_row",
]

SCHEDULES = ("ramp_then_halve", "constant_then_halve")

METRICS_HEADER = "epoch,lr,train_ce,valid_ce,train_fer,valid_fer,wall_seconds"


@dataclass
class TrainConfig:
    schedule: str = "ramp_then_halve"
    base_lr: float = 0.2
    peak_lr: float = 1.0
    ramp_epochs: int = 4
    halve_factor: float = 0.5
    momentum: float = 0.9
    l2: float = 1e-5
    max_utts_per_batch: int = 10
    truncation_chunk: int | None = 256
    max_epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.l2 < 0.0:
            raise ValueError("l2 must be >= 0")
        if not 0.0 < self.halve_factor < 1.0:
            raise ValueError("halve_factor must lie in (0, 1)")
        # 0 is allowed so smoke runs can prove params stay untouched
        if self.base_lr < 0.0:
            raise ValueError("base_lr must be >= 0")
        if self.max_utts_per_batch < 1:
            raise ValueError("max_utts_per_batch must be >= 1")
        if self.truncation_chunk is not None and self.truncation_chunk < 1:
            raise ValueError("truncation_chunk must be >= 1 or None")


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_ce: float
    valid_ce: float
    train_fer: float
    valid_fer: float
    wall_seconds: float


def format_stats_row(s: EpochStats) -> str:
    return (
        f"{s.epoch},{s.lr!r},{s.train_ce!r},{s.valid_ce!r},"
        f"{s.train_fer!r},{s.valid_fer!r},{s.wall_seconds!r}"
    )


def lr_for_epoch(config: TrainConfig, epoch: int, valid_ce_history) -> float:
    """Learning rate for `epoch` given validation CE of all earlier epochs.

    ramp_then_halve climbs linearly from base_lr to peak_lr over the first
    ramp_epochs+1 epochs; afterwards the rate carries forward and is
    multiplied by halve_factor every time the latest validation CE exceeds
    the previous epoch's. constant_then_halve starts flat at base_lr with
    the same halving rule active from epoch 2.
    """
    if epoch < 1:
        raise ValueError("epochs are counted from 1")
    hist = list(valid_ce_history)
    if config.schedule == "ramp_then_halve":
        if epoch <= config.ramp_epochs + 1:
            frac = (epoch - 1) / config.ramp_epochs
            return config.base_lr + (config.peak_lr - config.base_lr) * frac
        lr = config.peak_lr
        first_halving_epoch = config.ramp_epochs + 2
    else:
        lr = config.base_lr
        first_halving_epoch = 2
    for e in range(first_halving_epoch, epoch + 1):
        latest, prev = e - 2, e - 3
        if prev >= 0 and latest < len(hist) and hist[latest] > hist[prev]:
            lr *= config.halve_factor
    return lr


@dataclass
class BatchPiece:
    """One gradient-step unit: a chunk of one utterance plus its context.

    Rows [ctx_start, chunk_start) only carry forward state into the chunk;
    the loss and the gradients are confined to [chunk_start, chunk_end).
    """

    utt_index: int
    chunk_start: int
    chunk_end: int


def make_minibatches(
    corpus: data_mod.Corpus, max_utts: int, truncation_chunk: int | None, seed: int
) -> list[list[list[BatchPiece]]]:
    """Shuffle utterances and group them into batches of chunk columns.

    Returns a list of batches; each batch is a list of steps, and each step
    holds the k-th chunk of every utterance in the batch that still has
    one. Full-sequence mode (truncation_chunk=None) yields one step per
    batch covering whole utterances.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    order = np.random.default_rng(seed).permutation(len(corpus))
    batches = []
    for lo in range(0, len(order), max_utts):
        group = order[lo : lo + max_utts]
        per_utt = []
        for ui in group:
            t_frames = corpus.utterances[ui].num_frames
            chunk = t_frames if truncation_chunk is None else truncation_chunk
            pieces = [
                BatchPiece(int(ui), s, min(s + chunk, t_frames))
                for s in range(0, t_frames, chunk)
            ]
            per_utt.append(pieces)
        n_steps = max(len(p) for p in per_utt)
        steps = []
        for k in range(n_steps):
            step = [p[k] for p in per_utt if k < len(p)]
            steps.append(step)
        batches.append(steps)
    return batches


def sgd_step(params, lr: float, momentum: float, l2: float) -> None:
    """Momentum SGD with L2 decay folded into the gradient; clears grads.

    velocity <- momentum * velocity - lr * (grad + l2 * value)
    value    <- value + velocity
    """
    for p in params.parameters():
        update = p.grad + l2 * p.value
        p.velocity *= momentum
        p.velocity -= lr * update
        if not np.all(np.isfinite(p.velocity)):
            raise NumericError(
                f"non-finite update for {p.name or '<unnamed>'} "
                f"(lr={lr}, |grad|max={np.abs(p.grad).max():.3e})"
            )
        p.value += p.velocity
        p.zero_grad()


def chunked_forward(model: Model, features: np.ndarray, chunk: int) -> np.ndarray:
    """Full-utterance logits assembled from truncation-sized chunks.

    Each chunk keeps enough past frames (and future frames, for bi models)
    of carried context that the forward values match the full-sequence
    pass; this is the forward side of truncated training.
    """
    x = model_input(model.config, features)
    span = delay_span(model.config)
    fut = span if model.config.direction == "bi" else 0
    t_frames = x.shape[0]
    out = np.zeros((t_frames, model.config.num_classes))
    for s in range(0, t_frames, chunk):
        e = min(s + chunk, t_frames)
        lo = max(0, s - span)
        hi = min(t_frames, e + fut)
        _, logits = forward(model.params, model.config, x[lo:hi])
        out[s:e] = logits[s - lo : e - lo]
    return out


def _train_step(model: Model, corpus, step_pieces, lr, cfg: TrainConfig) -> None:
    span = delay_span(model.config)
    fut_span = span if model.config.direction == "bi" else 0
    total_frames = sum(p.chunk_end - p.chunk_start for p in step_pieces)
    for piece in step_pieces:
        utt = corpus.utterances[piece.utt_index]
        x = model_input(model.config, utt.features)
        lo = max(0, piece.chunk_start - span)
        hi = min(utt.num_frames, piece.chunk_end + fut_span)
        cache, _ = forward(model.params, model.config, x[lo:hi])
        scale = (piece.chunk_end - piece.chunk_start) / total_frames
        window = (piece.chunk_start - lo, piece.chunk_end - lo)
        if window == (0, hi - lo):
            window = None
        backward(
            model.params,
            model.config,
            cache,
            utt.labels[lo:hi],
            loss_scale=scale,
            grad_window=window,
        )
    sgd_step(model.params, lr, cfg.momentum, cfg.l2)


def evaluate(model: Model, corpus: data_mod.Corpus) -> tuple[float, float]:
    """Mean per-frame cross-entropy and frame error rate over a corpus.

    Argmax ties break toward the lowest class index.
    """
    total_frames = 0
    ce_sum = 0.0
    errors = 0
    for utt in corpus.utterances:
        x = model_input(model.config, utt.features)
        _, logits = forward(model.params, model.config, x)
        loss, _ = softmax_xent(logits, utt.labels)
        t_frames = utt.num_frames
        ce_sum += loss * t_frames
        errors += int(np.sum(np.argmax(logits, axis=1) != utt.labels))
        total_frames += t_frames
    return ce_sum / total_frames, errors / total_frames


def evaluate_streaming(
    model: Model, corpus: data_mod.Corpus, chunk_size: int, lookahead: int
) -> tuple[float, float]:
    """evaluate(), but logits come from bounded-lookahead chunked inference."""
    total_frames = 0
    ce_sum = 0.0
    errors = 0
    for utt in corpus.utterances:
        x = model_input(model.config, utt.features)
        logits = streaming_forward(model.params, model.config, x, chunk_size, lookahead)
        loss, _ = softmax_xent(logits, utt.labels)
        ce_sum += loss * utt.num_frames
        errors += int(np.sum(np.argmax(logits, axis=1) != utt.labels))
        total_frames += utt.num_frames
    return ce_sum / total_frames, errors / total_frames


def fit(
    model: Model,
    train_corpus: data_mod.Corpus,
    valid_corpus: data_mod.Corpus,
    config: TrainConfig,
    on_epoch=None,
) -> list[EpochStats]:
    """Run the training regimen; returns per-epoch statistics.

    Stops at max_epochs or once the scheduled rate drops below
    base_lr / 64. `on_epoch(stats, model)` runs after every epoch; a truthy
    return requests an early stop. Fully deterministic for a given seed.
    """
    for corpus, name in ((train_corpus, "train"), (valid_corpus, "valid")):
        if len(corpus) == 0:
            raise ValueError(f"{name} corpus is empty")
        span = model.config.splice_left + 1 + model.config.splice_right
        if corpus.feature_dim * span != model.config.input_dim:
            raise ValueError(
                f"{name} corpus features ({corpus.feature_dim} dims, splice x{span}) "
                f"do not match model input_dim {model.config.input_dim}"
            )
        if corpus.num_classes > model.config.num_classes:
            raise ValueError(
                f"{name} corpus has {corpus.num_classes} classes, model emits "
                f"{model.config.num_classes}"
            )

    history: list[EpochStats] = []
    valid_ce_history: list[float] = []
    for epoch in range(1, config.max_epochs + 1):
        lr = lr_for_epoch(config, epoch, valid_ce_history)
        if lr < config.base_lr / 64.0:
            break
        started = time.perf_counter()
        batches = make_minibatches(
            train_corpus, config.max_utts_per_batch, config.truncation_chunk,
            seed=(config.seed * 100003 + epoch),
        )
        for batch in batches:
            for step_pieces in batch:
                _train_step(model, train_corpus, step_pieces, lr, config)
        train_ce, train_fer = evaluate(model, train_corpus)
        valid_ce, valid_fer = evaluate(model, valid_corpus)
        stats = EpochStats(
            epoch=epoch,
            lr=lr,
            train_ce=train_ce,
            valid_ce=valid_ce,
            train_fer=train_fer,
            valid_fer=valid_fer,
            wall_seconds=time.perf_counter() - started,
        )
        history.append(stats)
        valid_ce_history.append(valid_ce)
        if on_epoch is not None and on_epoch(stats, model):
            break
    return history
