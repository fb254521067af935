"""Pretrained word vectors: loading, lookup, cosine and weighted centroids."""
from __future__ import annotations

import io
import math
import os
from typing import Collection, Iterable, Sequence, TextIO

import numpy as np

from .corpus import TranscriptCorpus, strip_punctuation


class VectorFileError(ValueError):
    pass


class EmbeddingTable:
    """Immutable word -> vector map backed by one float64 matrix."""

    __slots__ = ("_index", "_matrix")

    def __init__(self, words: Sequence[str], matrix: np.ndarray):
        matrix = np.array(matrix, dtype=np.float64, copy=True)
        if matrix.ndim != 2 or matrix.shape[0] != len(words):
            raise ValueError("matrix must have one row per word")
        if matrix.shape[1] < 1:
            raise ValueError("dimensionality must be positive")
        matrix.flags.writeable = False
        self._matrix = matrix
        self._index = {}
        for i, w in enumerate(words):
            self._index.setdefault(w, i)

    @classmethod
    def from_dict(cls, vectors: dict[str, Sequence[float]], dim: int | None = None) -> "EmbeddingTable":
        words = list(vectors)
        if not words:
            if dim is None:
                raise ValueError("cannot infer dimensionality of an empty table")
            return cls([], np.zeros((0, dim)))
        return cls(words, np.array([vectors[w] for w in words], dtype=np.float64))

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def words(self) -> list[str]:
        return list(self._index)

    def __len__(self):
        return len(self._index)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def get(self, word: str) -> np.ndarray | None:
        i = self._index.get(word)
        return None if i is None else self._matrix[i]

    def row(self, word: str) -> int:
        """Matrix row of ``word`` or -1."""
        return self._index.get(word, -1)


def _is_header(parts: list[str]) -> bool:
    return len(parts) == 2 and all(p.isdigit() for p in parts)


def load_vectors(source: TextIO | str | os.PathLike, vocab: Collection[str] | None = None) -> EmbeddingTable:
    """Parse a fastText-style text vector file.

    The optional first line ``count dim`` fixes the dimensionality, otherwise it
    is taken from the first vector line. Duplicate words keep their first
    vector. With ``vocab`` only those words are kept, although every line is
    still validated. ``source`` is a text stream, the file contents as a
    string, or a path.
    """
    if isinstance(source, os.PathLike):
        with open(source, encoding="utf-8") as fh:
            return load_vectors(fh, vocab)
    stream = io.StringIO(source) if isinstance(source, str) else source
    dim = None
    words: list[str] = []
    rows: list[list[float]] = []
    seen = set()
    first = True
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n").rstrip(" ")
        if not line:
            continue
        parts = line.split(" ")
        if first:
            first = False
            if _is_header(parts):
                dim = int(parts[1])
                if dim < 1:
                    raise VectorFileError(f"line {line_no}: dimensionality must be positive")
                continue
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise VectorFileError(f"line {line_no}: vector line has no components")
        if len(parts) - 1 != dim:
            raise VectorFileError(f"line {line_no}: expected {dim} components, found {len(parts) - 1}")
        word = parts[0]
        try:
            values = [float(x) for x in parts[1:]]
        except ValueError:
            raise VectorFileError(f"line {line_no}: non-numeric vector component") from None
        if word in seen or (vocab is not None and word not in vocab):
            continue
        seen.add(word)
        words.append(word)
        rows.append(values)
    if dim is None:
        raise VectorFileError("empty vector file: no dimensionality derivable")
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingTable(words, matrix)


def lookup(table: EmbeddingTable, word: str) -> np.ndarray | None:
    return table.get(word)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero vector")
    return min(1.0, max(-1.0, float(a @ b) / (na * nb)))


def coverage(table: EmbeddingTable, corpus: TranscriptCorpus) -> float:
    """Fraction of distinct non-punctuation surface forms that have a vector.

    An empty corpus has coverage 1.0.
    """
    forms = {t.form for r in corpus.responses() for t in strip_punctuation(r).tokens}
    if not forms:
        return 1.0
    return sum(f in table for f in forms) / len(forms)


def weighted_centroid(items: Iterable[tuple[Sequence[float], float]]) -> np.ndarray:
    vecs, weights = [], []
    for v, w in items:
        if w < 0:
            raise ValueError("weights must be nonnegative")
        vecs.append(np.asarray(v, dtype=np.float64))
        weights.append(float(w))
    total = sum(weights)
    if not vecs or total <= 0:
        raise ValueError("weighted centroid needs at least one positive weight")
    w = np.array(weights)
    return (w @ np.vstack(vecs)) / total
