"""CoNLL-U transcripts, reference documents and text preprocessing."""
from __future__ import annotations

import enum
import io
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence, TextIO

PUNCT_TAG = "PUNCT"

# metadata keys that are not participant attributes
_RESERVED_KEYS = frozenset({"participant_id", "group", "question_id", "doc_id", "sent_id", "text"})
_ATTRIBUTE_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_.-]*\Z")


def is_attribute_key(key: str) -> bool:
    """True for ``# key = value`` comments that describe the participant (age band etc.)."""
    return key not in _RESERVED_KEYS and bool(_ATTRIBUTE_KEY.match(key))


class ConllError(ValueError):
    """Malformed CoNLL-U line. Carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class StructureError(ConllError):
    """Well-formed lines that do not make a valid corpus (missing metadata etc.)."""


class Group(str, enum.Enum):
    CONTROL = "control"
    PATIENT = "patient"

    @classmethod
    def parse(cls, value: str) -> "Group":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise StructureError(f"group must be 'control' or 'patient', got {value!r}") from None


@dataclass(frozen=True, slots=True)
class Token:
    index: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str


Sentence = tuple[Token, ...]


@dataclass(frozen=True)
class Response:
    participant_id: str
    question_id: str
    sentences: tuple[Sentence, ...]

    @property
    def tokens(self) -> list[Token]:
        """All tokens in reading order, across sentence boundaries."""
        return [t for s in self.sentences for t in s]

    @property
    def word_count(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class Participant:
    id: str
    group: Group
    responses: tuple[Response, ...] = ()
    # sorted (key, value) pairs from extra metadata comments
    attributes: tuple[tuple[str, str], ...] = ()

    def attribute(self, key: str) -> str | None:
        return dict(self.attributes).get(key)


@dataclass(frozen=True)
class TranscriptCorpus:
    participants: tuple[Participant, ...] = ()

    def __post_init__(self):
        seen = set()
        for p in self.participants:
            if p.id in seen:
                raise StructureError(f"duplicate participant id {p.id!r}")
            seen.add(p.id)
            for r in p.responses:
                if r.participant_id != p.id:
                    raise StructureError(f"response of {r.participant_id!r} filed under {p.id!r}")

    def responses(self) -> Iterator[Response]:
        for p in self.participants:
            yield from p.responses

    def __len__(self):
        return len(self.participants)


@dataclass(frozen=True)
class ReferenceDocument:
    doc_id: str
    sentences: tuple[Sentence, ...] = field(default=())

    @property
    def tokens(self) -> list[Token]:
        return [t for s in self.sentences for t in s]


# --------------------------------------------------------------------------- parsing


def _open(source) -> TextIO:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_token(line: str, line_no: int) -> Token | None:
    cols = line.split("\t")
    if len(cols) != 10:
        raise ConllError(f"expected 10 tab-separated columns, found {len(cols)}", line_no)
    tok_id = cols[0]
    if "-" in tok_id or "." in tok_id:
        # multiword ranges and empty nodes
        return None
    try:
        index = int(tok_id)
    except ValueError:
        raise ConllError(f"token id {tok_id!r} is not an integer", line_no) from None
    head_col = cols[6]
    try:
        head = 0 if head_col == "_" else int(head_col)
    except ValueError:
        raise ConllError(f"head {head_col!r} is not an integer", line_no) from None
    form, lemma = cols[1], cols[2]
    if not form or not lemma:
        raise ConllError("empty FORM or LEMMA", line_no)
    return Token(index, form, lemma, cols[3], head, cols[7])


def _check_sentence(tokens: list[Token], line_no: int) -> Sentence:
    n = len(tokens)
    for t in tokens:
        if not 0 <= t.head <= n or t.head == t.index:
            raise StructureError(f"token {t.index} has invalid head {t.head}", line_no)
    return tuple(tokens)


def _iter_blocks(stream: TextIO):
    """Yield (metadata updates, sentence, last line number) per sentence block.

    Metadata comments seen after the final sentence are yielded with an empty
    sentence so callers can still validate them.
    """
    meta: dict[str, str] = {}
    tokens: list[Token] = []
    line_no = 0
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if tokens:
                yield meta, _check_sentence(tokens, line_no), line_no
                meta, tokens = {}, []
            continue
        if line.startswith("#"):
            body = line[1:]
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
            continue
        tok = _parse_token(line, line_no)
        if tok is not None:
            tokens.append(tok)
    if tokens:
        yield meta, _check_sentence(tokens, line_no), line_no


def parse_conllu(source: TextIO | str) -> TranscriptCorpus:
    """Read an annotated transcript corpus.

    Responses are delimited by ``# participant_id``, ``# group`` and
    ``# question_id`` comments, which stay in force until changed. Consecutive
    sentences with the same participant and question form one response.
    Any other ``# key = value`` comment with an identifier-like key (say
    ``# age_band = 40-60``) becomes an attribute of the participant whose
    block it appears in.
    """
    stream = _open(source)
    current: dict[str, str] = {}
    groups: dict[str, Group] = {}
    attributes: dict[str, dict[str, str]] = defaultdict(dict)
    order: list[str] = []
    responses: dict[str, list[Response]] = defaultdict(list)
    open_key: tuple[str, str] | None = None
    open_sents: list[Sentence] = []

    def close():
        if open_key is not None:
            pid, qid = open_key
            responses[pid].append(Response(pid, qid, tuple(open_sents)))

    for meta, sentence, line_no in _iter_blocks(stream):
        if "participant_id" in meta and "group" not in meta and meta["participant_id"] != current.get("participant_id"):
            # a new participant must restate its group unless already known
            current.pop("group", None)
        current.update({k: v for k, v in meta.items() if k in ("participant_id", "group", "question_id")})
        pid = current.get("participant_id")
        if not pid:
            raise StructureError("token before any '# participant_id' metadata", line_no)
        if "group" in current:
            group = Group.parse(current["group"])
        elif pid in groups:
            group = groups[pid]
        else:
            raise StructureError(f"no '# group' metadata for participant {pid!r}", line_no)
        if groups.setdefault(pid, group) is not group:
            raise StructureError(f"participant {pid!r} assigned to two groups", line_no)
        if pid not in order:
            order.append(pid)
        for k, v in meta.items():
            if is_attribute_key(k) and attributes[pid].setdefault(k, v) != v:
                raise StructureError(f"participant {pid!r} has two values for {k!r}", line_no)
        key = (pid, current.get("question_id", ""))
        if key != open_key:
            close()
            open_key, open_sents = key, []
        open_sents.append(sentence)
    close()
    return TranscriptCorpus(
        tuple(
            Participant(pid, groups[pid], tuple(responses[pid]), tuple(sorted(attributes[pid].items())))
            for pid in order
        )
    )


def parse_reference_conllu(source: TextIO | str) -> list[ReferenceDocument]:
    """Read reference documents, one per ``# doc_id = ...`` block."""
    stream = _open(source)
    docs: dict[str, list[Sentence]] = {}
    doc_id = None
    for meta, sentence, line_no in _iter_blocks(stream):
        if "doc_id" in meta:
            doc_id = meta["doc_id"]
            if doc_id in docs:
                raise StructureError(f"duplicate doc_id {doc_id!r}", line_no)
            docs[doc_id] = []
        if doc_id is None:
            raise StructureError("sentence before any '# doc_id' metadata", line_no)
        docs[doc_id].append(sentence)
    return [ReferenceDocument(d, tuple(s)) for d, s in docs.items()]


# ------------------------------------------------------------------------ serializing


def _token_line(t: Token) -> str:
    return "\t".join([str(t.index), t.form, t.lemma, t.upos, "_", "_", str(t.head), t.deprel, "_", "_"])


def _sentences_lines(sentences: Iterable[Sentence]) -> Iterator[str]:
    for s in sentences:
        for t in s:
            yield _token_line(t)
        yield ""


def serialize_conllu(corpus: TranscriptCorpus) -> str:
    """Inverse of :func:`parse_conllu` on the FORM/LEMMA/UPOS/HEAD/DEPREL subset."""
    lines: list[str] = []
    for p in corpus.participants:
        for r in p.responses:
            lines.append(f"# participant_id = {p.id}")
            lines.append(f"# group = {p.group.value}")
            lines.extend(f"# {k} = {v}" for k, v in p.attributes)
            lines.append(f"# question_id = {r.question_id}")
            lines.extend(_sentences_lines(r.sentences))
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_reference(docs: Sequence[ReferenceDocument]) -> str:
    lines: list[str] = []
    for d in docs:
        lines.append(f"# doc_id = {d.doc_id}")
        lines.extend(_sentences_lines(d.sentences))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------- preprocessing


def _drop_tokens(sentence: Sentence, keep: Sequence[bool]) -> Sentence:
    """Remove tokens, renumber survivors and detach heads that lost their target."""
    new_index = {}
    for t, k in zip(sentence, keep):
        if k:
            new_index[t.index] = len(new_index) + 1
    return tuple(
        replace(t, index=new_index[t.index], head=new_index.get(t.head, 0))
        for t, k in zip(sentence, keep)
        if k
    )


def strip_punctuation(response: Response) -> Response:
    sentences = tuple(_drop_tokens(s, [t.upos != PUNCT_TAG for t in s]) for s in response.sentences)
    return replace(response, sentences=sentences)


def collapse_repeats(response: Response) -> Response:
    """Keep only the first token of every run of identical surface forms."""
    out = []
    for s in response.sentences:
        keep = [i == 0 or s[i].form != s[i - 1].form for i in range(len(s))]
        out.append(_drop_tokens(s, keep))
    return replace(response, sentences=tuple(out))


def preprocess(response: Response) -> Response:
    return collapse_repeats(strip_punctuation(response))


def filter_responses(
    corpus: TranscriptCorpus | Iterable[Response],
    questions: Iterable[str] | None,
    min_words: int,
) -> list[Response]:
    """Preprocessed responses to the given questions with at least ``min_words`` words.

    ``questions=None`` accepts every question.
    """
    if min_words < 0:
        raise ValueError("min_words must be >= 0")
    wanted = None if questions is None else set(questions)
    source = corpus.responses() if isinstance(corpus, TranscriptCorpus) else corpus
    out = []
    for r in source:
        if wanted is not None and r.question_id not in wanted:
            continue
        clean = preprocess(r)
        if clean.word_count >= min_words:
            out.append(clean)
    return out


def word_counts_by_question(corpus: TranscriptCorpus) -> dict[tuple[str, Group], float]:
    """Mean per-participant word count, keyed by (question_id, group).

    Punctuation tokens are not counted as words.
    """
    per_participant: dict[tuple[str, Group], dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for p in corpus.participants:
        for r in p.responses:
            per_participant[(r.question_id, p.group)][p.id] += strip_punctuation(r).word_count
    return {
        key: sum(counts.values()) / len(counts)
        for key, counts in sorted(per_participant.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
    }
