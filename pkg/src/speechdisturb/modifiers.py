"""Modifier coherence: how typical are the adjectives and adverbs a speaker uses.

Noun-adjective and verb-adverb pairs are read off dependency arcs. Each
observed modifier is compared with the IDF-weighted centroid of the modifiers
the reference corpus attaches to the same head lemma.
"""
from __future__ import annotations

import enum
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Participant, ReferenceDocument, Response, Sentence, TranscriptCorpus
from .embeddings import EmbeddingTable, cosine, weighted_centroid


class HeadClass(str, enum.Enum):
    NOUN = "noun"
    VERB = "verb"


class ModifierClass(str, enum.Enum):
    ADJECTIVE = "adjective"
    ADVERB = "adverb"


class IdfWeight(str, enum.Enum):
    """Which IDF weights a modifier score inside a response's average."""

    HEAD = "head"
    MODIFIER = "modifier"


# relation, head UPOS, dependent UPOS
_ARC_RULES = {
    "amod": ("NOUN", "ADJ", HeadClass.NOUN, ModifierClass.ADJECTIVE),
    "advmod": ("VERB", "ADV", HeadClass.VERB, ModifierClass.ADVERB),
}
MODIFIER_OF = {HeadClass.NOUN: ModifierClass.ADJECTIVE, HeadClass.VERB: ModifierClass.ADVERB}


@dataclass(frozen=True)
class ModifierPair:
    head_lemma: str
    head_class: HeadClass
    modifier_form: str
    modifier_lemma: str
    modifier_class: ModifierClass

    def __post_init__(self):
        if MODIFIER_OF[HeadClass(self.head_class)] is not ModifierClass(self.modifier_class):
            raise ValueError("nouns take adjectives and verbs take adverbs")

    @property
    def head_key(self) -> tuple[str, HeadClass]:
        return self.head_lemma, self.head_class


@dataclass(frozen=True)
class ReferenceStats:
    n_docs: int
    df: Mapping[str, int]
    # (head lemma, head class) -> Counter of (modifier form, modifier lemma)
    modifiers: Mapping[tuple[str, HeadClass], Counter]


@dataclass(frozen=True)
class QualifiedCounts:
    nouns: int = 0
    qualified_nouns: int = 0
    adjectives: int = 0
    qualified_adjectives: int = 0
    verbs: int = 0
    qualified_verbs: int = 0
    adverbs: int = 0
    qualified_adverbs: int = 0

    def __add__(self, other: "QualifiedCounts") -> "QualifiedCounts":
        return QualifiedCounts(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self) -> tuple[int, ...]:
        return (
            self.nouns, self.qualified_nouns, self.adjectives, self.qualified_adjectives,
            self.verbs, self.qualified_verbs, self.adverbs, self.qualified_adverbs,
        )


@dataclass(frozen=True)
class ModifierScores:
    participant_id: str
    adjective_score: float | None
    adverb_score: float | None
    qualified_counts: QualifiedCounts = field(default_factory=QualifiedCounts)


def _sentence_pairs(sentence: Sentence) -> Iterable[ModifierPair]:
    by_index = {t.index: t for t in sentence}
    for dep in sentence:
        rule = _ARC_RULES.get(dep.deprel.split(":", 1)[0])
        if rule is None:
            continue
        head = by_index.get(dep.head)
        if head is None:
            continue
        head_pos, dep_pos, head_class, mod_class = rule
        if head.upos == head_pos and dep.upos == dep_pos:
            yield ModifierPair(head.lemma, head_class, dep.form, dep.lemma, mod_class)


def extract_modifier_pairs(response: Response | ReferenceDocument | Sequence[Sentence]) -> list[ModifierPair]:
    """Pairs from amod(NOUN -> ADJ) and advmod(VERB -> ADV) arcs.

    Relation subtypes such as ``amod:poss`` count as their base relation. Run
    this on the parser output before any token deletion.
    """
    sentences = response if isinstance(response, (list, tuple)) else response.sentences
    return [pair for s in sentences for pair in _sentence_pairs(s)]


def build_reference_stats(docs: Sequence[ReferenceDocument]) -> ReferenceStats:
    if not docs:
        raise ValueError("reference corpus is empty")
    df: Counter = Counter()
    modifiers: dict[tuple[str, HeadClass], Counter] = defaultdict(Counter)
    for doc in docs:
        df.update({t.lemma for s in doc.sentences for t in s})
        for pair in extract_modifier_pairs(doc):
            modifiers[pair.head_key][(pair.modifier_form, pair.modifier_lemma)] += 1
    return ReferenceStats(len(docs), dict(df), dict(modifiers))


def merge_reference(docs_lists: Iterable[Sequence[ReferenceDocument]]) -> list[ReferenceDocument]:
    merged: list[ReferenceDocument] = []
    seen = set()
    for docs in docs_lists:
        for d in docs:
            if d.doc_id in seen:
                raise ValueError(f"duplicate doc_id {d.doc_id!r} across reference files")
            seen.add(d.doc_id)
            merged.append(d)
    return merged


def idf(stats: ReferenceStats, lemma: str, smooth: bool = False) -> float | None:
    """ln(N / df), or None for lemmas the reference corpus never saw.

    ``smooth=True`` gives ln((1 + N) / (1 + df)) + 1 instead.
    """
    d = stats.df.get(lemma)
    if not d:
        return None
    if smooth:
        return math.log((1 + stats.n_docs) / (1 + d)) + 1.0
    return math.log(stats.n_docs / d)


def modifier_vector(table: EmbeddingTable, form: str, lemma: str) -> np.ndarray | None:
    """Vector by surface form, falling back to the lemma; None for OOV or zero vectors."""
    for key in (form, lemma):
        v = table.get(key)
        if v is not None and np.any(v):
            return v
    return None


def reference_centroid(
    head_lemma: str, head_class: HeadClass, stats: ReferenceStats, table: EmbeddingTable, smooth: bool = False
) -> np.ndarray | None:
    counter = stats.modifiers.get((head_lemma, HeadClass(head_class)))
    if not counter:
        return None
    items = []
    for (form, lemma), count in counter.items():
        w = idf(stats, lemma, smooth)
        v = modifier_vector(table, form, lemma)
        if w and v is not None:
            items.append((v, w * count))
    if not items:
        return None
    centroid = weighted_centroid(items)
    return centroid if np.any(centroid) else None


def modifier_score(
    pair: ModifierPair, stats: ReferenceStats, table: EmbeddingTable, smooth: bool = False
) -> float | None:
    """Cosine between an observed modifier and its head's reference centroid.

    None when the head has no IDF, no reference modifiers with usable vectors
    and positive weight, or when the observed modifier has no vector.
    """
    if idf(stats, pair.head_lemma, smooth) is None:
        return None
    observed = modifier_vector(table, pair.modifier_form, pair.modifier_lemma)
    if observed is None:
        return None
    centroid = reference_centroid(pair.head_lemma, pair.head_class, stats, table, smooth)
    if centroid is None:
        return None
    return cosine(observed, centroid)


def observed_heads(corpus: TranscriptCorpus | Iterable[Response]) -> set[tuple[str, HeadClass]]:
    """Heads that carry at least one modifier somewhere in the transcripts."""
    responses = corpus.responses() if isinstance(corpus, TranscriptCorpus) else corpus
    return {pair.head_key for r in responses for pair in extract_modifier_pairs(r)}


def is_qualified(
    head_lemma: str,
    head_class: HeadClass,
    stats: ReferenceStats,
    observed: TranscriptCorpus | set[tuple[str, HeadClass]],
) -> bool:
    if not isinstance(observed, (set, frozenset)):
        observed = observed_heads(observed)
    key = (head_lemma, HeadClass(head_class))
    return idf(stats, head_lemma) is not None and key in observed and bool(stats.modifiers.get(key))


def _weighted_mean(values: list[tuple[float, float]]) -> float | None:
    total = math.fsum(w for _, w in values)
    if total <= 0:
        return None
    return math.fsum(v * w for v, w in values) / total


def response_modifier_scores(
    response: Response,
    stats: ReferenceStats,
    table: EmbeddingTable,
    smooth: bool = False,
    weight_by: IdfWeight | str = IdfWeight.HEAD,
) -> dict[ModifierClass, float | None]:
    """Per class, the IDF-weighted mean of defined modifier scores.

    Weights are the head's IDF by default. With ``weight_by="modifier"`` the
    observed modifier lemma's IDF is used and pairs whose modifier the
    reference never saw are dropped. A class whose weights sum to zero has
    no score.
    """
    by_modifier = IdfWeight(weight_by) is IdfWeight.MODIFIER
    acc: dict[ModifierClass, list[tuple[float, float]]] = {c: [] for c in ModifierClass}
    for pair in extract_modifier_pairs(response):
        s = modifier_score(pair, stats, table, smooth)
        if s is None:
            continue
        w = idf(stats, pair.modifier_lemma if by_modifier else pair.head_lemma, smooth)
        if w is not None:
            acc[pair.modifier_class].append((s, w))
    return {c: _weighted_mean(v) for c, v in acc.items()}


def qualified_counts(
    participant: Participant, stats: ReferenceStats, observed: set[tuple[str, HeadClass]]
) -> QualifiedCounts:
    """Token counts of heads and modifier arcs, split by qualification."""
    c = dict.fromkeys(
        ("nouns", "qualified_nouns", "adjectives", "qualified_adjectives",
         "verbs", "qualified_verbs", "adverbs", "qualified_adverbs"),
        0,
    )
    for r in participant.responses:
        for s in r.sentences:
            for t in s:
                name = {"NOUN": "nouns", "VERB": "verbs"}.get(t.upos)
                if name is None:
                    continue
                hc = HeadClass.NOUN if name == "nouns" else HeadClass.VERB
                c[name] += 1
                c["qualified_" + name] += is_qualified(t.lemma, hc, stats, observed)
        for pair in extract_modifier_pairs(r):
            name = "adjectives" if pair.modifier_class is ModifierClass.ADJECTIVE else "adverbs"
            c[name] += 1
            c["qualified_" + name] += is_qualified(pair.head_lemma, pair.head_class, stats, observed)
    return QualifiedCounts(**c)


def participant_modifier_scores(
    participant: Participant,
    stats: ReferenceStats,
    table: EmbeddingTable,
    observed: set[tuple[str, HeadClass]] | None = None,
    smooth: bool = False,
    weight_by: IdfWeight | str = IdfWeight.HEAD,
) -> ModifierScores:
    """Unweighted mean over the participant's responses, per modifier class.

    ``observed`` is the set of modified heads across the whole transcript
    corpus, used only for the qualified counts; it defaults to the
    participant's own responses.
    """
    if observed is None:
        observed = observed_heads(participant.responses)
    per_class: dict[ModifierClass, list[float]] = {c: [] for c in ModifierClass}
    for r in participant.responses:
        for c, v in response_modifier_scores(r, stats, table, smooth, weight_by).items():
            if v is not None:
                per_class[c].append(v)
    means = {c: (math.fsum(v) / len(v) if v else None) for c, v in per_class.items()}
    return ModifierScores(
        participant.id,
        means[ModifierClass.ADJECTIVE],
        means[ModifierClass.ADVERB],
        qualified_counts(participant, stats, observed),
    )


def corpus_modifier_scores(
    corpus: TranscriptCorpus,
    stats: ReferenceStats,
    table: EmbeddingTable,
    smooth: bool = False,
    weight_by: IdfWeight | str = IdfWeight.HEAD,
) -> dict[str, ModifierScores]:
    observed = observed_heads(corpus)
    return {
        p.id: participant_modifier_scores(p, stats, table, observed, smooth, weight_by)
        for p in corpus.participants
    }
