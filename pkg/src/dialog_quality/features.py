"""DQM input representation.

Each turn becomes a dense vector: signed-hashed lowercase unigrams and bigrams
of the user and system text (L2-normalized) with the turn's defect score
appended. Turn vectors are max-pooled into a dialog vector and concatenated
with a TF-IDF unigram vector over the full dialog text. Five-point dialog
ratings binarize to labels with 1-3 = defect, 4-5 = non-defect.

The hashing encoder stands behind a small interface so precomputed dense turn
vectors can be plugged in instead.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .dialogs import Dialog, Turn, dialog_from_dict, dialog_to_dict
from .tld import TldScoreMap

DEFAULT_ENCODER_DIM = 256
DEFAULT_VOCAB_SIZE = 2000

_TOKEN_CLEANER = re.compile(r"[^a-z0-9\s]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _TOKEN_CLEANER.sub("", text.lower()).split()


def _hash_token(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def encode_turn(turn: Turn, tld_score: float, dim: int = DEFAULT_ENCODER_DIM) -> np.ndarray:
    """Encode one turn as a vector of length dim + 1 (text features, then score).

    The text part hashes unigrams and bigrams of the concatenated user and
    system text into ``dim`` signed buckets and is L2-normalized; it is the
    zero vector when there are no tokens.
    """
    if dim < 16:
        raise ValueError(f"encoder dim must be >= 16, got {dim}")
    if not 0.0 <= tld_score <= 1.0:
        raise ValueError(f"tld_score {tld_score} outside [0, 1]")
    tokens = tokenize(turn.event.user_text) + tokenize(turn.event.system_text)
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    vec = np.zeros(dim + 1)
    for gram in grams:
        h = _hash_token(gram)
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec[:dim]))
    if norm > 0.0:
        vec[:dim] /= norm
    vec[dim] = tld_score
    return vec


def max_pool(encodings: list[np.ndarray]) -> np.ndarray:
    """Elementwise maximum over same-dimension encodings."""
    if not encodings:
        raise ValueError("cannot max-pool an empty list")
    dims = {e.shape for e in encodings}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch across encodings: {sorted(dims)}")
    return np.max(np.stack(encodings), axis=0)


@dataclass(frozen=True)
class TfidfModel:
    """Unigram vocabulary with smoothed idf weights.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the fitting corpus of N
    documents; vocabulary columns are ordered by descending document
    frequency with lexicographic tie-break.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray

    def __len__(self) -> int:
        return len(self.vocabulary)


def fit_tfidf(dialog_texts: list[str], vocab_size: int = DEFAULT_VOCAB_SIZE) -> TfidfModel:
    if not dialog_texts:
        raise ValueError("cannot fit tf-idf on an empty corpus")
    if vocab_size < 1:
        raise ValueError("vocab_size must be >= 1")
    df: dict[str, int] = {}
    for text in dialog_texts:
        for token in set(tokenize(text)):
            df[token] = df.get(token, 0) + 1
    ordered = sorted(df, key=lambda t: (-df[t], t))[:vocab_size]
    n_docs = len(dialog_texts)
    vocabulary = {token: i for i, token in enumerate(ordered)}
    idf = np.array(
        [math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in ordered]
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf)


def transform_tfidf(model: TfidfModel, dialog_text: str) -> np.ndarray:
    """Raw counts times idf, L2-normalized when nonzero; OOV tokens ignored."""
    vec = np.zeros(len(model.vocabulary))
    for token in tokenize(dialog_text):
        col = model.vocabulary.get(token)
        if col is not None:
            vec[col] += 1.0
    vec *= model.idf
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def tfidf_to_dict(model: TfidfModel) -> dict:
    tokens = sorted(model.vocabulary, key=model.vocabulary.get)
    return {"vocabulary": tokens, "idf": model.idf.tolist()}


def tfidf_from_dict(obj: dict) -> TfidfModel:
    tokens = obj["vocabulary"]
    return TfidfModel(
        vocabulary={t: i for i, t in enumerate(tokens)},
        idf=np.array(obj["idf"], dtype=float),
    )


def dialog_text(dialog: Dialog) -> str:
    """All user and system text of the dialog joined with single spaces."""
    parts = []
    for turn in dialog.turns:
        parts.append(turn.event.user_text)
        parts.append(turn.event.system_text)
    return " ".join(parts)


class TurnEncoder(Protocol):
    def __call__(self, turn: Turn, tld_score: float) -> np.ndarray: ...


@dataclass(frozen=True)
class HashedTurnEncoder:
    """Default encoder: signed-hashed n-grams plus the turn score."""

    dim: int = DEFAULT_ENCODER_DIM

    def __call__(self, turn: Turn, tld_score: float) -> np.ndarray:
        return encode_turn(turn, tld_score, self.dim)


@dataclass(frozen=True)
class PrecomputedTurnEncoder:
    """Looks up externally computed dense turn vectors by turn_id.

    Vectors are loaded from "turn-vectors v1" JSON Lines
    ({"turn_id": ..., "vector": [...]}); the turn score is appended so the
    downstream shape matches the hashing encoder's.
    """

    vectors: dict[str, tuple[float, ...]]

    @classmethod
    def from_file(cls, path: str | Path) -> "PrecomputedTurnEncoder":
        vectors: dict[str, tuple[float, ...]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                vectors[obj["turn_id"]] = tuple(float(v) for v in obj["vector"])
        return cls(vectors)

    def __call__(self, turn: Turn, tld_score: float) -> np.ndarray:
        turn_id = turn.event.turn_id
        if turn_id not in self.vectors:
            raise ValueError(f"no precomputed vector for turn_id '{turn_id}'")
        return np.append(np.array(self.vectors[turn_id]), tld_score)


def build_dialog_features(
    dialog: Dialog,
    scores: TldScoreMap,
    tfidf: TfidfModel,
    dim: int = DEFAULT_ENCODER_DIM,
    encoder: TurnEncoder | None = None,
) -> np.ndarray:
    """Max-pooled turn encodings concatenated with the dialog's TF-IDF vector."""
    encode = encoder if encoder is not None else HashedTurnEncoder(dim)
    turn_scores = scores.for_dialog(dialog)
    pooled = max_pool(
        [encode(turn, s) for turn, s in zip(dialog.turns, turn_scores)]
    )
    return np.concatenate([pooled, transform_tfidf(tfidf, dialog_text(dialog))])


def binarize_rating(rating: int) -> bool:
    """True (defect) for ratings 1-3, False for 4-5."""
    if isinstance(rating, bool) or not isinstance(rating, int):
        raise ValueError(f"rating must be an integer, got {rating!r}")
    if not 1 <= rating <= 5:
        raise ValueError(f"rating must be in 1..5, got {rating}")
    return rating <= 3


@dataclass(frozen=True)
class FeatureConfig:
    """Feature-space configuration; part of a trained model's identity."""

    encoder_dim: int = DEFAULT_ENCODER_DIM
    vocab_size: int = DEFAULT_VOCAB_SIZE
    use_tfidf: bool = True
    use_tld: bool = True

    def to_dict(self) -> dict:
        return {
            "encoder_dim": self.encoder_dim,
            "vocab_size": self.vocab_size,
            "use_tfidf": self.use_tfidf,
            "use_tld": self.use_tld,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureConfig":
        return cls(
            encoder_dim=obj["encoder_dim"],
            vocab_size=obj["vocab_size"],
            use_tfidf=obj["use_tfidf"],
            use_tld=obj["use_tld"],
        )


class FeaturePipeline:
    """Fitted feature extractor: hashing encoder plus a TF-IDF model.

    The config toggles let a hyperparameter search switch the TF-IDF block and
    the turn-score component off without changing the feature dimension (the
    disabled block is zeroed).
    """

    def __init__(self, config: FeatureConfig, tfidf: TfidfModel):
        self.config = config
        self.tfidf = tfidf

    @classmethod
    def fit(cls, dialogs: list[Dialog], config: FeatureConfig) -> "FeaturePipeline":
        texts = [dialog_text(d) for d in dialogs]
        return cls(config, fit_tfidf(texts, config.vocab_size))

    @property
    def dimension(self) -> int:
        return self.config.encoder_dim + 1 + len(self.tfidf)

    def transform(self, dialog: Dialog, scores: TldScoreMap) -> np.ndarray:
        turn_scores = scores.for_dialog(dialog)
        if not self.config.use_tld:
            turn_scores = [0.0] * len(turn_scores)
        pooled = max_pool(
            [
                encode_turn(turn, s, self.config.encoder_dim)
                for turn, s in zip(dialog.turns, turn_scores)
            ]
        )
        if self.config.use_tfidf:
            text_part = transform_tfidf(self.tfidf, dialog_text(dialog))
        else:
            text_part = np.zeros(len(self.tfidf))
        return np.concatenate([pooled, text_part])

    def transform_all(self, dialogs: list[Dialog], scores: TldScoreMap) -> np.ndarray:
        return np.stack([self.transform(d, scores) for d in dialogs])


def write_labeled_dialogs(
    path: str | Path,
    rows: Iterable[tuple[Dialog, int, bool]],
    patterns: dict[str, str] | None = None,
) -> None:
    """Write labeled-dialog v1: dialog v1 fields plus rating and label."""
    with open(path, "w", encoding="utf-8") as fh:
        for dialog, rating, label in rows:
            obj = dialog_to_dict(dialog)
            obj["rating"] = rating
            obj["label"] = label
            if patterns and dialog.dialog_id in patterns:
                obj["pattern"] = patterns[dialog.dialog_id]
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_labeled_dialogs(path: str | Path) -> list[tuple[Dialog, int, bool]]:
    rows: list[tuple[Dialog, int, bool]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            dialog = dialog_from_dict(obj)
            if "rating" not in obj:
                raise ValueError(f"line {line_no}: missing rating")
            rating = obj["rating"]
            label = obj.get("label", binarize_rating(rating))
            if label != binarize_rating(rating):
                raise ValueError(
                    f"line {line_no}: label {label} inconsistent with rating {rating}"
                )
            rows.append((dialog, rating, label))
    return rows


def write_feature_rows(
    path: str | Path,
    dialog_ids: list[str],
    matrix: np.ndarray,
    labels: list[bool] | None = None,
) -> None:
    """Write a features v1 JSON Lines dump for offline inspection."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, dialog_id in enumerate(dialog_ids):
            obj = {
                "dialog_id": dialog_id,
                "values": [float(v) for v in matrix[i]],
                "label": bool(labels[i]) if labels is not None else None,
            }
            fh.write(json.dumps(obj) + "\n")
