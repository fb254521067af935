"""Windowed embedding coherence ("derailment") scores.

Each word is compared with the ``k`` words that follow it; the word score is
the mean cosine over that forward window and a response score is the mean of
its word scores. Words without a usable vector are transparent: their pairs
are skipped.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _accel
from ._accel import njit
from .corpus import Group, Participant, Token, TranscriptCorpus, filter_responses
from .embeddings import EmbeddingTable
from .stats import GroupComparison, InsufficientDataError, compare_groups

CONTENT_TAGS = frozenset({"NOUN", "VERB", "ADJ", "ADV"})
OPEN_QUESTIONS = frozenset({"q1", "q2", "q3", "q4"})
DEFAULT_MIN_WORDS = 50


class WordFilter(str, enum.Enum):
    ALL = "all"
    CONTENT = "content"


@dataclass(frozen=True)
class DerailmentConfig:
    k: int = 1
    word_filter: WordFilter = WordFilter.CONTENT
    min_words: int = DEFAULT_MIN_WORDS
    # None means every question
    questions: frozenset[str] | None = OPEN_QUESTIONS

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.min_words < 0:
            raise ValueError("min_words must be >= 0")
        object.__setattr__(self, "word_filter", WordFilter(self.word_filter))
        if self.questions is not None:
            object.__setattr__(self, "questions", frozenset(self.questions))


@dataclass(frozen=True)
class DerailmentScore:
    participant_id: str
    k: int
    filter: WordFilter
    value: float
    n_responses: int


# ---------------------------------------------------------------------------- kernels


# fastmath lets the dot product vectorise; results stay within ~1e-15 of numpy
@njit(cache=True, fastmath=True)
def _window_scores_jit(unit, valid, k):
    n, d = unit.shape
    out = np.full(n, np.nan)
    for i in range(n):
        if not valid[i]:
            continue
        total = 0.0
        count = 0
        stop = min(i + k, n - 1)
        for j in range(i + 1, stop + 1):
            if not valid[j]:
                continue
            dot = 0.0
            for q in range(d):
                dot += unit[i, q] * unit[j, q]
            total += dot
            count += 1
        if count > 0:
            out[i] = total / count
    return out


def _window_scores_numpy(unit, valid, k):
    n = unit.shape[0]
    sums = np.zeros(n)
    counts = np.zeros(n)
    for off in range(1, min(k, n - 1) + 1):
        pair = valid[:-off] & valid[off:]
        dots = np.einsum("ij,ij->i", unit[:-off], unit[off:])
        sums[:-off] += np.where(pair, dots, 0.0)
        counts[:-off] += pair
    out = np.full(n, np.nan)
    ok = counts > 0
    out[ok] = sums[ok] / counts[ok]
    return out


def window_scores(unit: np.ndarray, valid: np.ndarray, k: int, backend: str | None = None) -> np.ndarray:
    """Per-word mean cosine to the next ``k`` words; NaN where undefined.

    ``unit`` holds unit-normalised rows; ``valid`` marks rows that have a vector.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    backend = backend or _accel.BACKEND
    unit = np.ascontiguousarray(unit, dtype=np.float64)
    valid = np.ascontiguousarray(valid, dtype=np.bool_)
    if unit.shape[0] == 0:
        return np.empty(0)
    if backend == "numba":
        return _window_scores_jit(unit, valid, k)
    if backend == "numpy":
        return _window_scores_numpy(unit, valid, k)
    raise ValueError(f"unknown backend {backend!r}")


# ------------------------------------------------------------------------- operations


def content_filter(tokens: Sequence[Token], word_filter: WordFilter = WordFilter.CONTENT) -> list[Token]:
    if WordFilter(word_filter) is WordFilter.ALL:
        return list(tokens)
    return [t for t in tokens if t.upos in CONTENT_TAGS]


def embed_forms(forms: Sequence[str], table: EmbeddingTable) -> tuple[np.ndarray, np.ndarray]:
    """Unit-normalised vectors for ``forms`` plus a mask of usable rows."""
    rows = np.array([table.row(f) for f in forms], dtype=np.int64)
    unit = np.zeros((len(forms), table.dim))
    present = rows >= 0
    if present.any():
        vecs = table.matrix[rows[present]]
        norms = np.linalg.norm(vecs, axis=1)
        nonzero = norms > 0
        scaled = np.zeros_like(vecs)
        scaled[nonzero] = vecs[nonzero] / norms[nonzero, None]
        unit[present] = scaled
        valid = np.zeros(len(forms), dtype=bool)
        valid[np.flatnonzero(present)[nonzero]] = True
    else:
        valid = np.zeros(len(forms), dtype=bool)
    return unit, valid


def _mean_defined(scores: np.ndarray) -> float | None:
    defined = scores[~np.isnan(scores)]
    if defined.size == 0:
        return None
    return float(defined.mean())


def response_derailment(
    tokens: Sequence[Token] | Sequence[str], table: EmbeddingTable, k: int, backend: str | None = None
) -> float | None:
    """Mean windowed cosine of an already preprocessed token stream.

    Accepts tokens or bare surface forms. Returns None if no word has a
    scoreable successor.
    """
    forms = [t if isinstance(t, str) else t.form for t in tokens]
    unit, valid = embed_forms(forms, table)
    return _mean_defined(window_scores(unit, valid, k, backend))


def derailment_scores(
    corpus: TranscriptCorpus | Iterable[Participant],
    table: EmbeddingTable,
    k_values: Sequence[int] = (1, 2, 3, 4, 5),
    filters: Sequence[WordFilter] = (WordFilter.ALL, WordFilter.CONTENT),
    min_words: int = DEFAULT_MIN_WORDS,
    questions: Iterable[str] | None = OPEN_QUESTIONS,
    backend: str | None = None,
) -> dict[tuple[int, WordFilter], dict[str, DerailmentScore | None]]:
    """Participant scores for every (k, filter) combination.

    Each eligible response is embedded once per filter and reused across k.
    """
    participants = corpus.participants if isinstance(corpus, TranscriptCorpus) else tuple(corpus)
    filters = [WordFilter(f) for f in filters]
    for k in k_values:
        if k < 1:
            raise ValueError("k must be >= 1")
    qs = None if questions is None else frozenset(questions)
    result = {(k, f): {} for k in k_values for f in filters}
    for p in participants:
        eligible = filter_responses(p.responses, qs, min_words)
        per_key: dict[tuple[int, WordFilter], list[float]] = {key: [] for key in result}
        for r in eligible:
            for f in filters:
                forms = [t.form for t in content_filter(r.tokens, f)]
                unit, valid = embed_forms(forms, table)
                for k in k_values:
                    s = _mean_defined(window_scores(unit, valid, k, backend))
                    if s is not None:
                        per_key[(k, f)].append(s)
        for (k, f), vals in per_key.items():
            result[(k, f)][p.id] = (
                DerailmentScore(p.id, k, f, float(np.mean(vals)), len(vals)) if vals else None
            )
    return result


def participant_derailment(
    participant: Participant, config: DerailmentConfig, table: EmbeddingTable, backend: str | None = None
) -> DerailmentScore | None:
    key = (config.k, config.word_filter)
    scores = derailment_scores(
        [participant], table, [config.k], [config.word_filter], config.min_words, config.questions, backend
    )
    return scores[key][participant.id]


def group_values(
    corpus: TranscriptCorpus, values: Mapping[str, float | None]
) -> dict[Group, list[float]]:
    """Split defined per-participant values by diagnosis group, in corpus order."""
    out: dict[Group, list[float]] = {Group.CONTROL: [], Group.PATIENT: []}
    for p in corpus.participants:
        v = values.get(p.id)
        if v is not None:
            out[p.group].append(v)
    return out


def bucket_values(
    corpus: TranscriptCorpus, values: Mapping[str, float | None], key: str
) -> dict[tuple[Group, str], list[float]]:
    """Like :func:`group_values` but further split by a participant attribute.

    Participants without the attribute are left out. Buckets come out sorted.
    """
    out: dict[tuple[Group, str], list[float]] = defaultdict(list)
    for p in corpus.participants:
        bucket, v = p.attribute(key), values.get(p.id)
        if bucket is not None and v is not None:
            out[(p.group, bucket)].append(v)
    return {b: out[b] for b in sorted(out, key=lambda gb: (gb[0].value, gb[1]))}


def group_derailment_comparison(
    corpus: TranscriptCorpus,
    config: DerailmentConfig,
    table: EmbeddingTable,
    equal_var: bool = False,
    backend: str | None = None,
) -> GroupComparison:
    scores = derailment_scores(
        corpus, table, [config.k], [config.word_filter], config.min_words, config.questions, backend
    )[(config.k, config.word_filter)]
    by_group = group_values(corpus, {pid: s.value if s else None for pid, s in scores.items()})
    for g, vals in by_group.items():
        if len(vals) < 2:
            raise InsufficientDataError(f"{g.value} group has {len(vals)} defined scores, need 2")
    return compare_groups(by_group[Group.CONTROL], by_group[Group.PATIENT], equal_var)
