"""Corpus I/O, feature-space utilities and synthetic sequence tasks.

The synthetic generators produce tasks whose difficulty is purely temporal:
frames are one-hot (or +/-1) so a model can only solve them by moving
information across time, not by learning a feature representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParseError",
    "FormatError",
    "Utterance",
    "Corpus",
    "read_archive",
    "write_archive",
    "splice",
    "append_constant",
    "mean_var_normalize",
    "gen_delayed_recall",
    "gen_future_recall",
    "gen_parity",
]

# 17 significant digits round-trip any float64 exactly.
_REAL_FMT = "%.17g"


class ParseError(ValueError):
    """Malformed archive content; message names the offending line."""


class FormatError(ValueError):
    """Structurally valid file that violates corpus rules (e.g. duplicate id)."""


@dataclass
class Utterance:
    id: str
    features: np.ndarray            # (T, d) float64
    labels: np.ndarray | None = None  # (T,) int64 or None for unlabeled eval

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]


@dataclass
class Corpus:
    utterances: list[Utterance] = field(default_factory=list)
    feature_dim: int = 0
    num_classes: int = 0

    def __len__(self) -> int:
        return len(self.utterances)

    def total_frames(self) -> int:
        return sum(u.num_frames for u in self.utterances)

    def validate(self) -> None:
        seen = set()
        for u in self.utterances:
            if u.id in seen:
                raise FormatError(f"duplicate utterance id {u.id!r}")
            seen.add(u.id)
            if u.features.ndim != 2 or u.features.shape[1] != self.feature_dim:
                raise FormatError(
                    f"utterance {u.id!r}: feature shape {u.features.shape} "
                    f"does not match corpus dim {self.feature_dim}"
                )
            if u.labels is not None:
                if u.labels.shape != (u.num_frames,):
                    raise FormatError(f"utterance {u.id!r}: label count != frame count")
                if u.labels.size and (u.labels.min() < 0 or u.labels.max() >= self.num_classes):
                    raise FormatError(
                        f"utterance {u.id!r}: labels outside [0, {self.num_classes})"
                    )


def write_archive(corpus: Corpus, path) -> None:
    """Serialize a corpus to the text matrix archive format.

    One block per utterance::

        <utt-id> [ K
         r11 r12 ... r1d
         ...
         rT1 ... rTd ]
        labels <utt-id> l1 l2 ... lT

    Reals carry 17 significant digits so write/read round-trips are
    value-exact; the labels line is omitted for unlabeled utterances.
    """
    with open(path, "w") as fh:
        for u in corpus.utterances:
            k = corpus.num_classes if u.labels is not None else 0
            fh.write(f"{u.id} [ {k}\n")
            rows = u.features
            for t in range(rows.shape[0]):
                line = " " + " ".join(_REAL_FMT % v for v in rows[t])
                if t == rows.shape[0] - 1:
                    line += " ]"
                fh.write(line + "\n")
            if rows.shape[0] == 0:
                fh.write(" ]\n")
            if u.labels is not None:
                fh.write("labels " + u.id + " " + " ".join(str(int(v)) for v in u.labels) + "\n")


def read_archive(path) -> Corpus:
    """Parse a text matrix archive back into a Corpus. Round-trips exactly."""
    utts: list[Utterance] = []
    by_id: dict[str, Utterance] = {}
    num_classes = 0
    feature_dim = None

    with open(path) as fh:
        lines = fh.readlines()

    i = 0
    while i < len(lines):
        line_no = i + 1
        tokens = lines[i].split()
        i += 1
        if not tokens:
            continue
        if tokens[0] == "labels":
            if len(tokens) < 2:
                raise ParseError(f"line {line_no}: labels line without utterance id")
            utt_id = tokens[1]
            if utt_id not in by_id:
                raise ParseError(f"line {line_no}: labels for unknown utterance {utt_id!r}")
            u = by_id[utt_id]
            if u.labels is not None:
                raise FormatError(f"line {line_no}: duplicate labels for {utt_id!r}")
            try:
                labels = np.array([int(v) for v in tokens[2:]], dtype=np.int64)
            except ValueError:
                raise ParseError(f"line {line_no}: non-integer label") from None
            if labels.shape[0] != u.num_frames:
                raise ParseError(
                    f"line {line_no}: {labels.shape[0]} labels for {u.num_frames} frames"
                )
            u.labels = labels
            continue

        # features block header: <id> [ K
        if len(tokens) != 3 or tokens[1] != "[":
            raise ParseError(f"line {line_no}: expected '<id> [ K' header, got {lines[i-1].rstrip()!r}")
        utt_id = tokens[0]
        if utt_id in by_id:
            raise FormatError(f"line {line_no}: duplicate utterance id {utt_id!r}")
        try:
            k = int(tokens[2])
        except ValueError:
            raise ParseError(f"line {line_no}: class count {tokens[2]!r} is not an integer") from None
        num_classes = max(num_classes, k)

        rows: list[list[float]] = []
        closed = False
        while i < len(lines):
            line_no = i + 1
            row_tokens = lines[i].split()
            i += 1
            if row_tokens and row_tokens[-1] == "]":
                closed = True
                row_tokens = row_tokens[:-1]
            if row_tokens:
                try:
                    rows.append([float(v) for v in row_tokens])
                except ValueError:
                    raise ParseError(f"line {line_no}: non-numeric feature value") from None
                if len(rows[-1]) != len(rows[0]):
                    raise ParseError(
                        f"line {line_no}: row has {len(rows[-1])} columns, expected {len(rows[0])}"
                    )
            if closed:
                break
        if not closed:
            raise ParseError(f"line {line_no}: unterminated features block for {utt_id!r}")

        feats = np.array(rows, dtype=np.float64) if rows else np.zeros((0, 0))
        if feature_dim is None and rows:
            feature_dim = feats.shape[1]
        elif rows and feats.shape[1] != feature_dim:
            raise FormatError(
                f"line {line_no}: utterance {utt_id!r} has {feats.shape[1]} feature "
                f"columns, corpus uses {feature_dim}"
            )
        u = Utterance(id=utt_id, features=feats, labels=None)
        utts.append(u)
        by_id[utt_id] = u

    return Corpus(utterances=utts, feature_dim=feature_dim or 0, num_classes=num_classes)


def splice(features, left: int, right: int) -> np.ndarray:
    """Concatenate a window of neighboring frames into each row.

    Row t becomes the concatenation of rows t-left .. t+right; positions
    beyond the utterance are filled by replicating the edge frame.
    """
    if left < 0 or right < 0:
        raise ValueError("splice widths must be >= 0")
    x = np.asarray(features, dtype=np.float64)
    t_frames = x.shape[0]
    pieces = []
    for off in range(-left, right + 1):
        idx = np.clip(np.arange(t_frames) + off, 0, t_frames - 1)
        pieces.append(x[idx])
    return np.hstack(pieces)


def append_constant(features, vec) -> np.ndarray:
    """Append the same trailing values to every frame (e.g. a speaker code)."""
    x = np.asarray(features, dtype=np.float64)
    v = np.asarray(vec, dtype=np.float64).reshape(-1)
    if v.size == 0:
        return x.copy()
    return np.hstack([x, np.tile(v, (x.shape[0], 1))])


def mean_var_normalize(corpus: Corpus, eps: float = 1e-12) -> Corpus:
    """Global per-dimension zero-mean unit-variance normalization.

    Uses the population (1/N) variance over all frames of the corpus.
    Dimensions with (near-)zero variance are centered but not divided.
    """
    if corpus.total_frames() < 2:
        raise ValueError("need at least 2 frames to normalize")
    stacked = np.vstack([u.features for u in corpus.utterances])
    mean = stacked.mean(axis=0)
    var = stacked.var(axis=0)
    scale = np.where(var > eps, 1.0 / np.sqrt(np.maximum(var, eps)), 1.0)
    utts = [
        Utterance(u.id, (u.features - mean) * scale, None if u.labels is None else u.labels.copy())
        for u in corpus.utterances
    ]
    return Corpus(utts, corpus.feature_dim, corpus.num_classes)


def _uniform_classes(rng, k: int, t_frames: int) -> np.ndarray:
    return rng.integers(0, k, size=t_frames)


def gen_delayed_recall(k: int, delay: int, t_frames: int, n_utts: int, seed: int) -> Corpus:
    """Recall-the-past task: label(t) is the class shown `delay` frames ago.

    Features are k-dimensional one-hot frames with uniform classes. Frames
    too early to have a target get the dedicated null class k, so the
    corpus has k+1 classes and every frame stays labeled.
    """
    if delay >= t_frames:
        raise ValueError(f"delay {delay} must be < frames per utterance {t_frames}")
    rng = np.random.default_rng(seed)
    utts = []
    for n in range(n_utts):
        classes = _uniform_classes(rng, k, t_frames)
        feats = np.zeros((t_frames, k))
        feats[np.arange(t_frames), classes] = 1.0
        labels = np.full(t_frames, k, dtype=np.int64)
        if delay == 0:
            labels[:] = classes
        else:
            labels[delay:] = classes[:-delay]
        utts.append(Utterance(f"utt{n:05d}", feats, labels))
    return Corpus(utts, feature_dim=k, num_classes=k + 1)


def gen_future_recall(k: int, delay: int, t_frames: int, n_utts: int, seed: int) -> Corpus:
    """Recall-the-future task: label(t) is the class shown `delay` frames ahead."""
    if delay >= t_frames:
        raise ValueError(f"delay {delay} must be < frames per utterance {t_frames}")
    rng = np.random.default_rng(seed)
    utts = []
    for n in range(n_utts):
        classes = _uniform_classes(rng, k, t_frames)
        feats = np.zeros((t_frames, k))
        feats[np.arange(t_frames), classes] = 1.0
        labels = np.full(t_frames, k, dtype=np.int64)
        if delay == 0:
            labels[:] = classes
        else:
            labels[:-delay] = classes[delay:]
        utts.append(Utterance(f"utt{n:05d}", feats, labels))
    return Corpus(utts, feature_dim=k, num_classes=k + 1)


def gen_parity(window_w: int, t_frames: int, n_utts: int, seed: int) -> Corpus:
    """Order-sensitive task: parity of +1 frames within a trailing window.

    Features are single-dimension +/-1 frames; label(t) is the count of +1
    frames in the last `window_w` positions (clipped at the start), mod 2.
    """
    if window_w < 1:
        raise ValueError("window must be >= 1")
    rng = np.random.default_rng(seed)
    utts = []
    for n in range(n_utts):
        signs = rng.integers(0, 2, size=t_frames) * 2 - 1
        feats = signs.reshape(-1, 1).astype(np.float64)
        ones = (signs > 0).astype(np.int64)
        sums = np.cumsum(ones)
        # trailing-window count via prefix sums: count(t) = sums[t] - sums[t-w]
        before = np.zeros(t_frames, dtype=np.int64)
        if window_w < t_frames:
            before[window_w:] = sums[:-window_w]
        labels = (sums - before) % 2
        utts.append(Utterance(f"utt{n:05d}", feats, labels))
    return Corpus(utts, feature_dim=1, num_classes=2)
