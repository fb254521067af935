"""Synthetic annotated corpora with known group differences.

Controls speak about one latent topic per response and pick the modifiers
the reference corpus uses for each head. Patients drift: the latent topic
follows an AR(1) walk, and most of their modifiers come from an unrelated
pool. Used by the tests, the acceptance suite and the benchmark.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    Group,
    Participant,
    ReferenceDocument,
    Response,
    Token,
    TranscriptCorpus,
    serialize_conllu,
    serialize_reference,
)
from .embeddings import EmbeddingTable

OPEN_QIDS = ("q1", "q2", "q3", "q4")


@dataclass
class SyntheticData:
    corpus: TranscriptCorpus
    table: EmbeddingTable
    reference: list[ReferenceDocument]


class _Vocab:
    def __init__(self):
        self.vectors: dict[str, np.ndarray] = {}

    def add(self, word: str, vec: np.ndarray) -> str:
        self.vectors.setdefault(word, np.asarray(vec, dtype=np.float64))
        return word

    def table(self) -> EmbeddingTable:
        return EmbeddingTable.from_dict(self.vectors)


def _flat_sentence(words: list[tuple[str, str]]) -> tuple[Token, ...]:
    # first token is the root, everything else hangs off it
    toks = [Token(1, words[0][0], words[0][0], words[0][1], 0, "root")]
    for i, (w, pos) in enumerate(words[1:], start=2):
        toks.append(Token(i, w, w, pos, 1, "punct" if pos == "PUNCT" else "dep"))
    return tuple(toks)


def _modifier_sentence(head: str, head_pos: str, mod: str, mod_pos: str, rel: str) -> tuple[Token, ...]:
    return (
        Token(1, head, head, head_pos, 0, "root"),
        Token(2, mod, mod, mod_pos, 1, rel),
        Token(3, ".", ".", "PUNCT", 1, "punct"),
    )


def topic_stream(
    rng: np.random.Generator, n: int, dim: int, rho: float, noise: float = 0.8
) -> np.ndarray:
    """Token vectors around a latent topic with lag-1 correlation ``rho``.

    ``rho=1`` keeps the topic fixed for the whole stream.
    """
    topic = rng.standard_normal(dim)
    out = np.empty((n, dim))
    for i in range(n):
        if i and rho < 1.0:
            topic = rho * topic + np.sqrt(1.0 - rho * rho) * rng.standard_normal(dim)
        out[i] = topic + noise * rng.standard_normal(dim)
    return out


def make_dataset(
    n_control: int = 10,
    n_patient: int = 10,
    seed: int = 0,
    dim: int = 10,
    n_open: int = 4,
    response_length: int = 60,
    function_rate: float = 0.3,
    drift_rho: float = 0.8,
    n_heads: int = 8,
    pairs_per_participant: int = 12,
    atypical_rate: float = 0.7,
    n_reference_docs: int = 30,
) -> SyntheticData:
    rng = np.random.default_rng(seed)
    vocab = _Vocab()
    function_words = [vocab.add(f"fw{j}", rng.standard_normal(dim)) for j in range(40)]

    # modifier lexicon: each head has a typical direction and three typical modifiers
    heads = []
    for h in range(n_heads):
        is_noun = h % 2 == 0
        name = f"noun{h}" if is_noun else f"verb{h}"
        vocab.add(name, rng.standard_normal(dim))
        direction = rng.standard_normal(dim)
        mods = [
            vocab.add(f"{'adj' if is_noun else 'adv'}{h}_{j}", direction + 0.3 * rng.standard_normal(dim))
            for j in range(3)
        ]
        heads.append((name, is_noun, mods))
    stray_adj = [vocab.add(f"adjx{j}", rng.standard_normal(dim)) for j in range(20)]
    stray_adv = [vocab.add(f"advx{j}", rng.standard_normal(dim)) for j in range(20)]

    participants = []
    groups = [Group.CONTROL] * n_control + [Group.PATIENT] * n_patient
    for pi, group in enumerate(groups):
        pid = f"{'c' if group is Group.CONTROL else 'p'}{pi:03d}"
        rho = 1.0 if group is Group.CONTROL else drift_rho
        responses = []
        for qi in range(n_open):
            qid = OPEN_QIDS[qi % len(OPEN_QIDS)] if qi < len(OPEN_QIDS) else f"q{qi + 1}"
            content = topic_stream(rng, response_length, dim, rho)
            words = []
            for ti in range(response_length):
                if rng.random() < function_rate:
                    words.append((function_words[rng.integers(len(function_words))], "DET"))
                else:
                    pos = ("NOUN", "VERB", "ADJ", "ADV")[rng.integers(4)]
                    words.append((vocab.add(f"{pid}.{qid}.{ti}", content[ti]), pos))
            sentences = []
            for start in range(0, len(words), 12):
                sentences.append(_flat_sentence(words[start:start + 12] + [(".", "PUNCT")]))
            responses.append(Response(pid, qid, tuple(sentences)))

        sents = []
        for _ in range(pairs_per_participant):
            name, is_noun, mods = heads[rng.integers(len(heads))]
            if group is Group.PATIENT and rng.random() < atypical_rate:
                pool = stray_adj if is_noun else stray_adv
                mod = pool[rng.integers(len(pool))]
            else:
                mod = mods[rng.integers(len(mods))]
            if is_noun:
                sents.append(_modifier_sentence(name, "NOUN", mod, "ADJ", "amod"))
            else:
                sents.append(_modifier_sentence(name, "VERB", mod, "ADV", "advmod"))
        responses.append(Response(pid, "tat1", tuple(sents)))
        participants.append(Participant(pid, group, tuple(responses)))

    reference = []
    for d in range(n_reference_docs):
        sents = []
        for name, is_noun, mods in heads:
            if rng.random() < 0.5:
                mod = mods[rng.integers(len(mods))]
                if is_noun:
                    sents.append(_modifier_sentence(name, "NOUN", mod, "ADJ", "amod"))
                else:
                    sents.append(_modifier_sentence(name, "VERB", mod, "ADV", "advmod"))
        sents.append(_flat_sentence([(f"filler{d}", "NOUN"), (".", "PUNCT")]))
        reference.append(ReferenceDocument(f"doc{d:03d}", tuple(sents)))

    return SyntheticData(TranscriptCorpus(tuple(participants)), vocab.table(), reference)


def format_vectors(table: EmbeddingTable) -> str:
    lines = [f"{len(table)} {table.dim}"]
    for w in table.words():
        lines.append(w + " " + " ".join(repr(float(x)) for x in table.get(w)))
    return "\n".join(lines) + "\n"


def write_inputs(data: SyntheticData, directory: str | os.PathLike) -> dict[str, Path]:
    """Write transcripts, reference corpus and vectors; return their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "transcripts": directory / "transcripts.conllu",
        "reference": directory / "reference.conllu",
        "vectors": directory / "vectors.vec",
    }
    paths["transcripts"].write_text(serialize_conllu(data.corpus), encoding="utf-8")
    paths["reference"].write_text(serialize_reference(data.reference), encoding="utf-8")
    paths["vectors"].write_text(format_vectors(data.table), encoding="utf-8")
    return paths
