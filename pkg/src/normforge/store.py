"""Corpus persistence and statistics.

Instances are stored as JSON Lines, one per line, UTF-8, behind a versioned
header record. Appends are validated (pair + dialogue structure, referential
integrity against the known subnorm ids) and idempotent on identical ids;
loading streams with per-record validation and collects malformed lines into
a rejects report instead of aborting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dialogue import AnnotatedDialogue, validate_annotation
from .errors import DuplicateIdError, PreconditionError, ReferentialError, StoreError
from .langs import Language, NormCategory, get_language
from .scenario import InteractionType, ScenarioSituationPair, validate_pair

SCHEMA_NAME = "normforge-corpus"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CorpusInstance:
    """One fully assembled dataset row: pair + dialogue + provenance refs."""

    id: str
    language: Language
    category: NormCategory
    subnorm_id: str
    interaction_type: InteractionType
    pair: ScenarioSituationPair
    dialogue: AnnotatedDialogue
    refinement_trace_ref: str | None = None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "language": self.language.code,
            "category": self.category.value,
            "subnorm_id": self.subnorm_id,
            "interaction_type": self.interaction_type.value,
            "pair": self.pair.to_record(),
            "dialogue": self.dialogue.to_record(),
            "refinement_trace_ref": self.refinement_trace_ref,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CorpusInstance":
        return cls(
            id=rec["id"],
            language=get_language(rec["language"]),
            category=NormCategory.from_name(rec["category"]),
            subnorm_id=rec["subnorm_id"],
            interaction_type=InteractionType.from_name(rec["interaction_type"]),
            pair=ScenarioSituationPair.from_record(rec["pair"]),
            dialogue=AnnotatedDialogue.from_record(rec["dialogue"]),
            refinement_trace_ref=rec.get("refinement_trace_ref"),
        )


def _instance_issues(instance: CorpusInstance) -> list[str]:
    issues = list(validate_pair(instance.pair).violations)
    issues += validate_annotation(instance.dialogue).violations
    if instance.pair.subnorm_id != instance.subnorm_id:
        issues.append(
            f"pair subnorm {instance.pair.subnorm_id} != instance subnorm {instance.subnorm_id}"
        )
    if instance.dialogue.pair_id != instance.pair.id:
        issues.append(
            f"dialogue pair ref {instance.dialogue.pair_id} != pair id {instance.pair.id}"
        )
    if instance.pair.interaction_type != instance.interaction_type:
        issues.append("pair interaction type differs from instance interaction type")
    if instance.pair.language != instance.language:
        issues.append("pair language differs from instance language")
    return issues


class CorpusWriter:
    """Single-writer append channel with id idempotence."""

    def __init__(self, path: str | Path, known_subnorm_ids: frozenset[str]):
        self.path = Path(path)
        self.known_subnorm_ids = known_subnorm_ids
        self._content_keys: dict[str, str] = {}
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            header = {"schema": SCHEMA_NAME, "version": SCHEMA_VERSION}
            self.path.write_text(
                json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )
        else:
            corpus, _rejects = load_corpus(self.path, allow_empty=True)
            for instance in corpus.instances:
                self._content_keys[instance.id] = _content_key(instance)

    def append_instance(self, instance: CorpusInstance) -> str:
        issues = _instance_issues(instance)
        if issues:
            raise StoreError(
                f"instance {instance.id} rejected: " + "; ".join(issues)
            )
        if instance.subnorm_id not in self.known_subnorm_ids:
            raise ReferentialError(
                f"instance {instance.id} references unknown subnorm {instance.subnorm_id}"
            )
        key = _content_key(instance)
        existing = self._content_keys.get(instance.id)
        if existing is not None:
            if existing != key:
                raise DuplicateIdError(instance.id)
            return instance.id  # identical content: idempotent no-op
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(instance.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
        self._content_keys[instance.id] = key
        return instance.id


def _content_key(instance: CorpusInstance) -> str:
    return json.dumps(instance.to_record(), sort_keys=True, ensure_ascii=False)


@dataclass
class Corpus:
    instances: list[CorpusInstance] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instances)

    def v2r_instances(self) -> list[CorpusInstance]:
        return [
            inst for inst in self.instances
            if inst.interaction_type is InteractionType.V2R
        ]


@dataclass
class RejectedRecord:
    line_no: int
    reason: str


def load_corpus(
    path: str | Path, allow_empty: bool = False
) -> tuple[Corpus, list[RejectedRecord]]:
    """Stream-load a corpus file; malformed records go to the rejects report."""
    file = Path(path)
    if not file.exists():
        raise StoreError(f"corpus path does not exist: {file}")
    corpus = Corpus()
    rejects: list[RejectedRecord] = []
    seen_ids: set[str] = set()
    with file.open(encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                rejects.append(RejectedRecord(line_no, f"invalid JSON: {exc}"))
                continue
            if rec.get("schema") == SCHEMA_NAME:
                continue  # header record
            try:
                instance = CorpusInstance.from_record(rec)
            except Exception as exc:  # malformed record, not a program bug
                rejects.append(RejectedRecord(line_no, str(exc)))
                continue
            issues = _instance_issues(instance)
            if issues:
                rejects.append(RejectedRecord(line_no, "; ".join(issues)))
                continue
            if instance.id in seen_ids:
                rejects.append(RejectedRecord(line_no, f"duplicate id {instance.id}"))
                continue
            seen_ids.add(instance.id)
            corpus.instances.append(instance)
    if not corpus.instances and not allow_empty:
        raise StoreError(f"{file}: zero valid records")
    return corpus, rejects


# -- statistics ----------------------------------------------------------------

@dataclass
class StatsRow:
    """Counts for one (language, interaction type) corpus slice.

    Keeps the distinct-id sets so merged stats recompute category/subnorm
    counts exactly instead of adding distinct counts.
    """

    language: str
    interaction_type: str
    categories: set[str] = field(default_factory=set)
    subnorm_ids: set[str] = field(default_factory=set)
    scenarios: int = 0
    situations: int = 0
    dialogues: int = 0
    total_turns: int = 0

    @property
    def category_count(self) -> int:
        return len(self.categories)

    @property
    def subnorm_count(self) -> int:
        return len(self.subnorm_ids)

    @property
    def average_turns(self) -> float:
        if self.dialogues == 0:
            return 0.0
        return self.total_turns / self.dialogues

    def to_record(self) -> dict:
        return {
            "language": self.language,
            "interaction_type": self.interaction_type,
            "categories": self.category_count,
            "subnorms": self.subnorm_count,
            "scenarios": self.scenarios,
            "situations": self.situations,
            "dialogues": self.dialogues,
            "average_turns": round(self.average_turns, 2),
        }


@dataclass
class CorpusStats:
    rows: dict[tuple[str, str], StatsRow] = field(default_factory=dict)

    @property
    def total_dialogues(self) -> int:
        return sum(row.dialogues for row in self.rows.values())

    @property
    def total_turns(self) -> int:
        return sum(row.total_turns for row in self.rows.values())

    @property
    def overall_average_turns(self) -> float:
        if self.total_dialogues == 0:
            return 0.0
        return self.total_turns / self.total_dialogues

    @property
    def total_subnorms(self) -> int:
        ids: set[tuple[str, str]] = set()
        for row in self.rows.values():
            ids.update((row.language, sub) for sub in row.subnorm_ids)
        return len(ids)

    def row(self, language: str, interaction_type: str) -> StatsRow:
        return self.rows[(language, interaction_type)]

    def to_record(self) -> dict:
        ordered = [self.rows[key].to_record() for key in sorted(self.rows)]
        return {
            "rows": ordered,
            "total_dialogues": self.total_dialogues,
            "total_subnorms": self.total_subnorms,
            "overall_average_turns": round(self.overall_average_turns, 2),
        }


def compute_statistics(corpus: Corpus) -> CorpusStats:
    """Exact per-(language, type) counts plus turn averages."""
    if not corpus.instances:
        raise PreconditionError("cannot compute statistics over an empty corpus")
    stats = CorpusStats()
    for instance in corpus.instances:
        key = (instance.language.code, instance.interaction_type.value)
        row = stats.rows.get(key)
        if row is None:
            row = StatsRow(language=key[0], interaction_type=key[1])
            stats.rows[key] = row
        row.categories.add(instance.category.value)
        row.subnorm_ids.add(instance.subnorm_id)
        row.scenarios += 1
        row.situations += 1
        row.dialogues += 1
        row.total_turns += len(instance.dialogue.turns)
    return stats


def merge_statistics(parts: list[CorpusStats]) -> CorpusStats:
    """Merge per-part stats: counts add, id sets union, averages re-derive."""
    merged = CorpusStats()
    for part in parts:
        for key, row in part.rows.items():
            target = merged.rows.get(key)
            if target is None:
                target = StatsRow(language=row.language, interaction_type=row.interaction_type)
                merged.rows[key] = target
            target.categories |= row.categories
            target.subnorm_ids |= row.subnorm_ids
            target.scenarios += row.scenarios
            target.situations += row.situations
            target.dialogues += row.dialogues
            target.total_turns += row.total_turns
    return merged


def render_stats_tables(stats: CorpusStats) -> str:
    """Aligned text tables, one per interaction type, plus corpus totals."""
    lines: list[str] = []
    types = sorted({key[1] for key in stats.rows})
    header = f"{'Lang':<6}{'Cat':>5}{'Sub':>6}{'Scen':>7}{'Situ':>7}{'Dial':>7}{'AvgT':>8}"
    for itype in types:
        lines.append(itype)
        lines.append(header)
        for key in sorted(stats.rows):
            if key[1] != itype:
                continue
            row = stats.rows[key]
            lines.append(
                f"{row.language:<6}{row.category_count:>5}{row.subnorm_count:>6}"
                f"{row.scenarios:>7}{row.situations:>7}{row.dialogues:>7}"
                f"{row.average_turns:>8.2f}"
            )
        lines.append("")
    lines.append(f"Total Subnorms: {stats.total_subnorms}")
    lines.append(f"Total Dialogues: {stats.total_dialogues}")
    lines.append(f"Total Average Turn: {stats.overall_average_turns:.2f}")
    return "\n".join(lines) + "\n"
