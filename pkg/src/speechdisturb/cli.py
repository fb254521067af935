"""Command-line front end: ``speechdisturb {derail,incohere,classify,stats}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .classify import FEATURE_NAMES, K_VALUES, Classifier, FeatureError, build_feature_vectors, train_eval
from .corpus import (
    ConllError,
    Group,
    ReferenceDocument,
    TranscriptCorpus,
    is_attribute_key,
    parse_conllu,
    parse_reference_conllu,
    word_counts_by_question,
)
from .derailment import OPEN_QUESTIONS, WordFilter, bucket_values, derailment_scores, group_values
from .embeddings import EmbeddingTable, VectorFileError, coverage, load_vectors
from .modifiers import (
    IdfWeight,
    ModifierClass,
    QualifiedCounts,
    build_reference_stats,
    corpus_modifier_scores,
    merge_reference,
)
from .stats import InsufficientDataError, compare_groups, mean_sd

log = logging.getLogger("speechdisturb")

SEED_ENV = "SPEECHDISTURB_SEED"
DEFAULT_SEED = 1729


class CliError(Exception):
    """Fatal input problem; reported with exit status 2."""


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


@dataclass
class RunConfig:
    transcripts_path: str | None = None
    reference_paths: list[str] = field(default_factory=list)
    vectors_path: str | None = None
    questions: list[str] | None = field(default_factory=lambda: sorted(OPEN_QUESTIONS))
    min_words: int = 50
    k_values: list[int] = field(default_factory=lambda: list(K_VALUES))
    filters: list[str] = field(default_factory=lambda: [WordFilter.ALL.value, WordFilter.CONTENT.value])
    classifiers: list[str] = field(default_factory=lambda: [c.value for c in Classifier])
    folds: int = 10
    seed: int = DEFAULT_SEED
    output_dir: str = "."
    equal_var: bool = False
    group_by: str | None = None
    idf_weight: str = IdfWeight.HEAD.value

    def validate(self):
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise CliError("k values must be a non-empty list of integers >= 1")
        if self.folds < 2:
            raise CliError("folds must be >= 2")
        if self.min_words < 0:
            raise CliError("min-words must be >= 0")
        if self.group_by is not None and not is_attribute_key(self.group_by):
            raise CliError(f"cannot group by {self.group_by!r}: not a participant attribute name")
        try:
            IdfWeight(self.idf_weight)
            [WordFilter(f) for f in self.filters]
            [Classifier(c) for c in self.classifiers]
        except ValueError as e:
            raise CliError(str(e)) from None


# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "transcripts": "transcripts_path",
    "reference": "reference_paths",
    "vectors": "vectors_path",
    "questions": "questions",
    "min_words": "min_words",
    "k": "k_values",
    "filter": "filters",
    "classifier": "classifiers",
    "folds": "folds",
    "seed": "seed",
    "out": "output_dir",
    "equal_var": "equal_var",
    "group_by": "group_by",
    "idf_weight": "idf_weight",
}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON config file, then explicit flags."""
    values: dict[str, Any] = {"seed": default_seed()}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise CliError(f"cannot read config {args.config}: {e}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for dest, name in _FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[name] = v
    if values.get("questions") in (["all"], "all"):
        values["questions"] = None
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------------------ outputs


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


class _Collect(logging.Handler):
    def __init__(self):
        super().__init__(logging.INFO)
        self.lines: list[str] = []

    def emit(self, record):
        self.lines.append(self.format(record))


# ------------------------------------------------------------------------------- inputs


def _read_text(path: str | None, what: str) -> str:
    if not path:
        raise CliError(f"no {what} file given")
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CliError(f"cannot read {what} file {path}: {e}") from None


def load_transcripts(cfg: RunConfig) -> TranscriptCorpus:
    try:
        return parse_conllu(_read_text(cfg.transcripts_path, "transcripts"))
    except ConllError as e:
        raise CliError(f"{cfg.transcripts_path}: {e}") from None


def load_reference(cfg: RunConfig) -> list[ReferenceDocument]:
    if not cfg.reference_paths:
        raise CliError("at least one --reference file is required")
    parsed = []
    for path in cfg.reference_paths:
        try:
            parsed.append(parse_reference_conllu(_read_text(path, "reference")))
        except ConllError as e:
            raise CliError(f"{path}: {e}") from None
    try:
        docs = merge_reference(parsed)
    except ValueError as e:
        raise CliError(str(e)) from None
    if not docs:
        raise CliError("reference corpus is empty")
    return docs


def load_table(cfg: RunConfig, corpus: TranscriptCorpus, reference: Sequence[ReferenceDocument] = ()) -> EmbeddingTable:
    vocab = set()
    for r in corpus.responses():
        for t in r.tokens:
            vocab.update((t.form, t.lemma))
    for d in reference:
        for t in d.tokens:
            vocab.update((t.form, t.lemma))
    try:
        return load_vectors(io.StringIO(_read_text(cfg.vectors_path, "vectors")), vocab=vocab)
    except VectorFileError as e:
        raise CliError(f"{cfg.vectors_path}: {e}") from None


# ----------------------------------------------------------------------------- commands


def _comparison_row(control: list[float], patient: list[float], equal_var: bool, label: str) -> list:
    try:
        c = compare_groups(control, patient, equal_var)
        return [c.control_mean, c.control_sd, c.patient_mean, c.patient_sd, c.t, c.p]
    except InsufficientDataError as e:
        log.warning("%s: %s", label, e)
        row = []
        for vals in (control, patient):
            row.append(vals[0] if len(vals) == 1 else (mean_sd(vals)[0] if vals else None))
            row.append(mean_sd(vals)[1] if len(vals) >= 2 else None)
        return row + [None, None]


def _bucket_rows(corpus: TranscriptCorpus, values: dict[str, float | None], key: str) -> list[list]:
    """[group, bucket, mean, sd, n] per diagnosis group and attribute value."""
    rows = []
    for (group, bucket), vals in bucket_values(corpus, values, key).items():
        m, sd = mean_sd(vals) if len(vals) >= 2 else (vals[0], None)
        rows.append([group.value, bucket, m, sd, len(vals)])
    return rows


def _check_group_by(cfg: RunConfig, corpus: TranscriptCorpus):
    if cfg.group_by and not any(p.attribute(cfg.group_by) is not None for p in corpus.participants):
        log.warning("no participant carries the attribute %r; the by-%s table is empty", cfg.group_by, cfg.group_by)


def compute_derailment(cfg: RunConfig, corpus: TranscriptCorpus, table: EmbeddingTable, k_values, filters):
    questions = None if cfg.questions is None else frozenset(cfg.questions)
    return derailment_scores(corpus, table, k_values, filters, cfg.min_words, questions)


def cmd_derail(cfg: RunConfig) -> None:
    out = Path(cfg.output_dir)
    corpus = load_transcripts(cfg)
    table = load_table(cfg, corpus)
    filters = [WordFilter(f) for f in cfg.filters]
    scores = compute_derailment(cfg, corpus, table, cfg.k_values, filters)

    _check_group_by(cfg, corpus)
    part_rows, group_rows, series_rows, bucket_rows = [], [], [], []
    for k in cfg.k_values:
        for f in filters:
            by_pid = scores[(k, f)]
            for p in corpus.participants:
                s = by_pid.get(p.id)
                if s is not None:
                    part_rows.append([p.id, k, f.value, s.value, s.n_responses])
            values = {pid: s.value if s else None for pid, s in by_pid.items()}
            grouped = group_values(corpus, values)
            if cfg.group_by:
                bucket_rows += [[f.value, k, *r] for r in _bucket_rows(corpus, values, cfg.group_by)]
            row = _comparison_row(grouped[Group.CONTROL], grouped[Group.PATIENT], cfg.equal_var, f"k={k} filter={f.value}")
            group_rows.append([k, f.value] + row)
            series_rows.append([f.value, k, Group.CONTROL.value, row[0], row[1], len(grouped[Group.CONTROL])])
            series_rows.append([f.value, k, Group.PATIENT.value, row[2], row[3], len(grouped[Group.PATIENT])])
    if not part_rows:
        log.warning("no response passed the filters (questions=%s, min_words=%d)", cfg.questions, cfg.min_words)
    write_csv(out / "derailment_participants.csv", ["participant", "k", "filter", "score", "n_responses"], part_rows)
    write_csv(
        out / "derailment_groups.csv",
        ["k", "filter", "control_mean", "control_sd", "patient_mean", "patient_sd", "t", "p"],
        group_rows,
    )
    series_rows.sort(key=lambda r: (r[0], r[2], r[1]))
    write_csv(out / "derailment_series.csv", ["filter", "k", "group", "mean", "sd", "n"], series_rows)
    if cfg.group_by:
        write_csv(
            out / f"derailment_by_{cfg.group_by}.csv",
            ["filter", "k", "group", cfg.group_by, "mean", "sd", "n"],
            bucket_rows,
        )


def compute_modifiers(cfg: RunConfig, corpus: TranscriptCorpus, table: EmbeddingTable, reference):
    stats = build_reference_stats(reference)
    if not stats.modifiers:
        log.warning("reference corpus holds no modifier pairs; no score can be computed")
    return corpus_modifier_scores(corpus, stats, table, weight_by=cfg.idf_weight)


def cmd_incohere(cfg: RunConfig) -> None:
    out = Path(cfg.output_dir)
    corpus = load_transcripts(cfg)
    reference = load_reference(cfg)
    table = load_table(cfg, corpus, reference)
    scores = compute_modifiers(cfg, corpus, table, reference)

    write_csv(
        out / "modifier_scores.csv",
        ["participant", "adjective_score", "adverb_score"],
        [[p.id, scores[p.id].adjective_score, scores[p.id].adverb_score] for p in corpus.participants],
    )
    _check_group_by(cfg, corpus)
    group_rows, bucket_rows = [], []
    for cls, attr in ((ModifierClass.ADJECTIVE, "adjective_score"), (ModifierClass.ADVERB, "adverb_score")):
        values = {pid: getattr(s, attr) for pid, s in scores.items()}
        grouped = group_values(corpus, values)
        if cfg.group_by:
            bucket_rows += [[cls.value, *r] for r in _bucket_rows(corpus, values, cfg.group_by)]
        group_rows.append([cls.value] + _comparison_row(grouped[Group.CONTROL], grouped[Group.PATIENT], cfg.equal_var, cls.value))
    write_csv(
        out / "modifier_groups.csv",
        ["class", "control_mean", "control_sd", "patient_mean", "patient_sd", "t", "p"],
        group_rows,
    )
    if cfg.group_by:
        write_csv(
            out / f"modifier_by_{cfg.group_by}.csv",
            ["class", "group", cfg.group_by, "mean", "sd", "n"],
            bucket_rows,
        )
    totals = {g: QualifiedCounts() for g in Group}
    for p in corpus.participants:
        totals[p.group] = totals[p.group] + scores[p.id].qualified_counts
    count_rows = []
    for g in Group:
        c = totals[g]
        count_rows += [
            [g.value, "noun", c.nouns, c.qualified_nouns],
            [g.value, "adjective", c.adjectives, c.qualified_adjectives],
            [g.value, "verb", c.verbs, c.qualified_verbs],
            [g.value, "adverb", c.adverbs, c.qualified_adverbs],
        ]
    write_csv(out / "qualified_counts.csv", ["group", "pos_class", "total", "qualified"], count_rows)


def cmd_classify(cfg: RunConfig) -> None:
    out = Path(cfg.output_dir)
    corpus = load_transcripts(cfg)
    groups = {p.group for p in corpus.participants}
    if len(groups) < 2:
        raise CliError("classification needs both control and patient participants; only one class present")
    reference = load_reference(cfg)
    table = load_table(cfg, corpus, reference)
    derail = compute_derailment(cfg, corpus, table, K_VALUES, [WordFilter.ALL, WordFilter.CONTENT])
    modifiers = compute_modifiers(cfg, corpus, table, reference)
    try:
        vectors = build_feature_vectors(corpus, derail, modifiers)
    except FeatureError as e:
        raise CliError(str(e)) from None
    for v in vectors:
        if any(v.imputed_mask):
            missing = [FEATURE_NAMES[j] for j, m in enumerate(v.imputed_mask) if m]
            log.warning("participant %s: imputed %s", v.participant_id, ", ".join(missing))
    write_csv(
        out / "features.csv",
        ["participant", "group", *FEATURE_NAMES, "imputed"],
        [[v.participant_id, v.label.value, *v.features, "".join("1" if m else "0" for m in v.imputed_mask)] for v in vectors],
    )
    lines = [f"{'classifier':<20}{'accuracy':>10}{'precision':>11}{'recall':>9}"]
    for name in cfg.classifiers:
        try:
            report = train_eval(name, vectors, cfg.folds, cfg.seed)
        except ValueError as e:
            raise CliError(str(e)) from None
        atomic_write(out / f"report_{name}.json", json.dumps(report.to_dict(), indent=2) + "\n")
        lines.append(f"{name:<20}{report.accuracy:>10.3f}{report.precision:>11.3f}{report.recall:>9.3f}")
    print("\n".join(lines))


def cmd_stats(cfg: RunConfig) -> None:
    out = Path(cfg.output_dir)
    corpus = load_transcripts(cfg)
    counts = word_counts_by_question(corpus)
    write_csv(out / "word_counts.csv", ["question", "group", "mean_words"], [[q, g.value, v] for (q, g), v in counts.items()])
    if cfg.vectors_path:
        table = load_table(cfg, corpus)
        atomic_write(out / "coverage.txt", f"{coverage(table, corpus)!r}\n")
    else:
        log.warning("no --vectors given; coverage.txt not written")


COMMANDS = {"derail": cmd_derail, "incohere": cmd_incohere, "classify": cmd_classify, "stats": cmd_stats}


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechdisturb", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--transcripts", help="CoNLL-U transcripts")
    common.add_argument("--reference", action="append", help="reference CoNLL-U file (repeatable)")
    common.add_argument("--vectors", help="fastText-style text vectors")
    common.add_argument("--questions", type=_str_list, help="comma-separated question ids, or 'all'")
    common.add_argument("--min-words", dest="min_words", type=int)
    common.add_argument("--k", type=_int_list, help="comma-separated window widths")
    common.add_argument("--filter", type=_str_list, help="all,content")
    common.add_argument("--classifier", type=_str_list, help="random_forest,gradient_boosting,linear_svm")
    common.add_argument("--folds", type=int)
    common.add_argument("--seed", type=int, help=f"default from ${SEED_ENV} or {DEFAULT_SEED}")
    common.add_argument("--out", help="output directory")
    common.add_argument("--equal-var", dest="equal_var", action="store_true", default=None,
                        help="pooled-variance t test instead of Welch")
    common.add_argument("--group-by", dest="group_by",
                        help="participant attribute (e.g. age_band) for an extra breakdown table")
    common.add_argument("--idf-weight", dest="idf_weight", choices=[w.value for w in IdfWeight],
                        help="weight modifier scores by head (default) or modifier IDF")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("derail", parents=[common], help="windowed derailment scores")
    sub.add_parser("incohere", parents=[common], help="modifier coherence scores")
    sub.add_parser("classify", parents=[common], help="feature matrix and cross-validated classifiers")
    sub.add_parser("stats", parents=[common], help="word counts per question and vector coverage")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    collector = _Collect()
    collector.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    stderr = logging.StreamHandler(sys.stderr)
    stderr.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(collector)
    log.addHandler(stderr)
    log.setLevel(logging.INFO)
    log.propagate = False
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
        atomic_write(Path(cfg.output_dir) / "run_log.txt", "".join(line + "\n" for line in collector.lines))
        return 0
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    finally:
        log.removeHandler(collector)
        log.removeHandler(stderr)


if __name__ == "__main__":
    sys.exit(main())
