"""Judge-driven evaluation: dialogue quality, generalization checks, strategy mining.

- evaluate_dq runs six independent judge calls (one per criterion) at
  temperature 0 and parses integer Likert scores.
- gq_continue / ab_judge implement the continuation-preference protocol with
  seeded blinding; the judge only ever sees labels A and B, and records are
  de-blinded at aggregation time.
- mine_strategies extracts post-violation repair behavior from V2R dialogues.
  Apology/Explanation/Empathy map from the APO/JUS/EMP reaction labels;
  Compensation and Humor, which have no reaction label, are detected by
  versioned per-language cue lexicons over post-violation utterances.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .dialogue import AnnotatedDialogue, NormLabel, Turn, dialogue_text, parse_turns
from .errors import CountError, LabelError, PreconditionError
from .gateway import (
    Gateway,
    complete_parsed,
    evaluation_request,
    generation_request,
    parse_first_score,
)
from .store import CorpusInstance
from .templates import DQ_TEMPLATE_IDS, get_template

DQ_CRITERIA: tuple[str, ...] = (
    "consistency",
    "naturalness",
    "relevance",
    "emotion_appropriateness",
    "norm_appropriateness",
    "scenario_coherence",
)


@dataclass(frozen=True)
class DQScores:
    """Six-criterion Likert rubric for one dialogue (norm_appropriateness uses
    the five-level adherence classification, 1 = fully violated ... 5 = fully
    adherent)."""

    consistency: int
    naturalness: int
    relevance: int
    emotion_appropriateness: int
    norm_appropriateness: int
    scenario_coherence: int

    def __post_init__(self):
        for name in DQ_CRITERIA:
            value = getattr(self, name)
            if not isinstance(value, int) or not 1 <= value <= 5:
                raise PreconditionError(f"{name} must be an integer in 1..5, got {value!r}")

    def as_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in DQ_CRITERIA}

    @property
    def mean(self) -> float:
        return sum(self.as_dict().values()) / len(DQ_CRITERIA)


def evaluate_dq(
    instance: CorpusInstance,
    subnorm_statement: str,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> DQScores:
    """Six judge calls, one per criterion, each parsed to an integer score."""
    text = dialogue_text(instance.dialogue.turns)
    common = {
        "culture": instance.language.culture,
        "norm": subnorm_statement,
        "scenario": instance.pair.scenario,
        "situation": instance.pair.situation,
        "dialogue": text,
    }
    scores: dict[str, int] = {}
    for criterion, template_id in zip(DQ_CRITERIA, DQ_TEMPLATE_IDS):
        template = get_template(template_id)
        bindings = {slot: common[slot] for slot in template.slots}
        request = evaluation_request(
            template_id,
            bindings,
            model_tag=model_tag,
            seed_tag=f"dq:{instance.id}:{criterion}",
        )
        scores[criterion] = complete_parsed(gateway, request, parse_first_score, attempts)
    return DQScores(**scores)


def aggregate_dq(rows: Sequence[tuple[str, str, DQScores]]) -> dict[tuple[str, str], dict[str, float]]:
    """Mean per (language, interaction type, criterion) over (lang, type, scores) rows."""
    grouped: dict[tuple[str, str], list[DQScores]] = {}
    for language, itype, scores in rows:
        grouped.setdefault((language, itype), []).append(scores)
    out: dict[tuple[str, str], dict[str, float]] = {}
    for key in sorted(grouped):
        bucket = grouped[key]
        out[key] = {
            criterion: sum(getattr(s, criterion) for s in bucket) / len(bucket)
            for criterion in DQ_CRITERIA
        }
    return out


# -- generalization: continuations and A/B preference ---------------------------

CONTINUATION_TURNS = 5


def gq_continue(
    context_turns: Sequence[Turn],
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
    seed_tag: str = "",
) -> list[Turn]:
    """Generate exactly five continuation turns for a dialogue prefix."""
    if not context_turns:
        raise PreconditionError("continuation requires a nonempty dialogue context")
    context = dialogue_text(list(context_turns))
    context_key = hashlib.sha256(context.encode("utf-8")).hexdigest()[:12]
    request = generation_request(
        "gq_continue",
        {"context": context},
        model_tag=model_tag,
        seed_tag=seed_tag or f"gq:{context_key}",
    )

    def parse(text: str) -> list[Turn]:
        turns = parse_turns(text)
        if len(turns) != CONTINUATION_TURNS:
            raise CountError("continuation turns", CONTINUATION_TURNS, len(turns))
        return turns

    return complete_parsed(gateway, request, parse, attempts)


@dataclass(frozen=True)
class SystemResponse:
    system_id: str
    text: str


@dataclass
class PreferenceRecord:
    """One blinded A/B judgment; mapping is fixed before the choice is made."""

    context_id: str
    side_shown_first: str
    mapping: dict[str, str]  # label -> system_id
    choice: str
    rater: str

    @property
    def winner(self) -> str:
        return self.mapping[self.choice]

    def to_record(self) -> dict:
        return {
            "context_id": self.context_id,
            "side_shown_first": self.side_shown_first,
            "mapping": dict(self.mapping),
            "choice": self.choice,
            "rater": self.rater,
        }


def parse_ab_choice(text: str) -> str:
    token = text.strip().strip('"').strip(".")
    if token not in ("A", "B"):
        raise LabelError("A/B choice", text.strip())
    return token


def assign_sides(
    response_x: SystemResponse, response_y: SystemResponse, rng: random.Random
) -> dict[str, str]:
    """Draw the blinding mapping (label -> system) from the caller's randomizer."""
    if rng.random() < 0.5:
        return {"A": response_x.system_id, "B": response_y.system_id}
    return {"A": response_y.system_id, "B": response_x.system_id}


def ab_judge(
    context_id: str,
    context: str,
    response_x: SystemResponse,
    response_y: SystemResponse,
    rng: random.Random,
    gateway: Gateway,
    model_tag: str,
    rater: str = "llm",
    attempts: int = 3,
) -> PreferenceRecord:
    """Blinded pairwise judgment; the record stores the mapping for de-blinding."""
    if response_x.system_id == response_y.system_id:
        raise PreconditionError("A/B comparison requires two distinct system ids")
    mapping = assign_sides(response_x, response_y, rng)
    by_system = {response_x.system_id: response_x.text, response_y.system_id: response_y.text}
    request = evaluation_request(
        "gq_ab",
        {
            "context": context,
            "output_a": by_system[mapping["A"]],
            "output_b": by_system[mapping["B"]],
        },
        model_tag=model_tag,
        seed_tag=f"ab:{context_id}",
    )
    choice = complete_parsed(gateway, request, parse_ab_choice, attempts)
    return PreferenceRecord(
        context_id=context_id,
        side_shown_first="A",
        mapping=mapping,
        choice=choice,
        rater=rater,
    )


def aggregate_preferences(records: Sequence[PreferenceRecord]) -> dict[str, float]:
    """De-blinded preference percentage per system."""
    if not records:
        raise PreconditionError("cannot aggregate an empty preference set")
    wins: Counter[str] = Counter()
    systems: set[str] = set()
    for record in records:
        wins[record.winner] += 1
        systems.update(record.mapping.values())
    total = len(records)
    return {system: 100.0 * wins[system] / total for system in sorted(systems)}


# -- V2R strategy mining ---------------------------------------------------------

STRATEGY_NAMES = {
    "A": "Apology",
    "X": "Explanation",
    "E": "Empathy",
    "C": "Compensation",
    "H": "Humor",
}
STRATEGY_ORDER: tuple[str, ...] = ("A", "X", "E", "C", "H")

_LABEL_STRATEGY = {"APO": "A", "JUS": "X", "EMP": "E"}

LEXICON_VERSION = "1"

# compensation / humor have no reaction label; cue lexicons are applied to
# post-violation utterances only
COMPENSATION_CUES = {
    "EN": ("make it up", "cover the cost", "pay for", "replace it", "refund",
           "my treat", "buy you", "compensate"),
    "KR": ("보상", "변상", "물어줄", "제가 살게", "제가 사겠", "한턱", "사 드릴"),
    "ZH": ("补偿", "赔偿", "赔你", "我请客", "请你吃", "换一个", "退给你"),
}
HUMOR_CUES = {
    "EN": ("haha", "just kidding", "joking", "funny", "lol"),
    "KR": ("ㅋㅋ", "하하", "농담", "웃자고"),
    "ZH": ("哈哈", "开玩笑", "逗你", "玩笑"),
}


def _cue_hit(utterance: str, cues: tuple[str, ...]) -> bool:
    lowered = utterance.lower()
    return any(cue in lowered for cue in cues)


def strategies_for_dialogue(dialogue: AnnotatedDialogue, language_code: str) -> list[str]:
    """Ordered strategy tokens after the first Violation turn, duplicates collapsed."""
    annotations = sorted(dialogue.annotations, key=lambda a: a.turn_index)
    violation_index = None
    for annotation in annotations:
        if annotation.norm_label is NormLabel.VIOLATION:
            violation_index = annotation.turn_index
            break
    if violation_index is None:
        return []
    turn_by_index = {turn.index: turn for turn in dialogue.turns}
    comp_cues = COMPENSATION_CUES.get(language_code, COMPENSATION_CUES["EN"])
    humor_cues = HUMOR_CUES.get(language_code, HUMOR_CUES["EN"])
    sequence: list[str] = []
    for annotation in annotations:
        if annotation.turn_index <= violation_index:
            continue
        turn = turn_by_index.get(annotation.turn_index)
        utterance = turn.utterance if turn is not None else ""
        found: list[str] = []
        label_strategy = _LABEL_STRATEGY.get(annotation.reaction)
        if label_strategy is not None:
            found.append(label_strategy)
        if _cue_hit(utterance, comp_cues):
            found.append("C")
        if _cue_hit(utterance, humor_cues):
            found.append("H")
        for token in found:
            if not sequence or sequence[-1] != token:
                sequence.append(token)
    return sequence


@dataclass
class LanguageStrategyStats:
    language: str
    dialogues: int
    usage_rates: dict[str, float]  # strategy token -> % of dialogues using it
    top_sequence: tuple[str, ...]
    top_sequence_rate: float
    multi_step_rate: float

    def to_record(self) -> dict:
        return {
            "language": self.language,
            "dialogues": self.dialogues,
            "usage_rates": dict(self.usage_rates),
            "top_sequence": list(self.top_sequence),
            "top_sequence_rate": self.top_sequence_rate,
            "multi_step_rate": self.multi_step_rate,
        }


@dataclass
class StrategyReport:
    per_language: dict[str, LanguageStrategyStats] = field(default_factory=dict)
    lexicon_version: str = LEXICON_VERSION

    @property
    def overall_multi_step_rate(self) -> float:
        total = sum(stats.dialogues for stats in self.per_language.values())
        if total == 0:
            return 0.0
        weighted = sum(
            stats.multi_step_rate * stats.dialogues for stats in self.per_language.values()
        )
        return weighted / total

    def to_record(self) -> dict:
        return {
            "lexicon_version": self.lexicon_version,
            "per_language": {
                code: self.per_language[code].to_record()
                for code in sorted(self.per_language)
            },
            "overall_multi_step_rate": self.overall_multi_step_rate,
        }


def mine_strategies(instances: Sequence[CorpusInstance]) -> StrategyReport:
    """Usage rates, top post-violation sequence, and multi-step rate per language."""
    from .scenario import InteractionType

    v2r = [inst for inst in instances if inst.interaction_type is InteractionType.V2R]
    if not v2r:
        raise PreconditionError("strategy mining requires at least one V2R instance")
    report = StrategyReport()
    by_language: dict[str, list[CorpusInstance]] = {}
    for instance in v2r:
        by_language.setdefault(instance.language.code, []).append(instance)
    for code in sorted(by_language):
        bucket = by_language[code]
        sequences = [
            tuple(strategies_for_dialogue(inst.dialogue, code)) for inst in bucket
        ]
        n = len(bucket)
        usage = {
            token: 100.0 * sum(1 for seq in sequences if token in seq) / n
            for token in STRATEGY_ORDER
        }
        nonempty = [seq for seq in sequences if seq]
        if nonempty:
            counts = Counter(nonempty)
            # deterministic tie-break: highest count, then lexicographic
            top_sequence = min(counts, key=lambda seq: (-counts[seq], seq))
            top_rate = 100.0 * counts[top_sequence] / n
        else:
            top_sequence, top_rate = (), 0.0
        multi = 100.0 * sum(1 for seq in sequences if len(set(seq)) >= 2) / n
        report.per_language[code] = LanguageStrategyStats(
            language=code,
            dialogues=n,
            usage_rates=usage,
            top_sequence=top_sequence,
            top_sequence_rate=top_rate,
            multi_step_rate=multi,
        )
    return report


def render_strategy_table(report: StrategyReport) -> str:
    """Text table: 5 strategy rows x languages, plus top-sequence rows."""
    codes = sorted(report.per_language)
    lines = [
        "Strategy usage rates (% of V2R dialogues)",
        f"{'Strategy':<22}" + "".join(f"{code:>10}" for code in codes),
    ]
    for token in STRATEGY_ORDER:
        name = f"{STRATEGY_NAMES[token]} ({token})"
        cells = "".join(
            f"{report.per_language[code].usage_rates[token]:>10.1f}" for code in codes
        )
        lines.append(f"{name:<22}{cells}")
    top_cells = "".join(
        f"{' -> '.join(report.per_language[code].top_sequence) or '-':>10}" for code in codes
    )
    freq_cells = "".join(
        f"{report.per_language[code].top_sequence_rate:>10.1f}" for code in codes
    )
    multi_cells = "".join(
        f"{report.per_language[code].multi_step_rate:>10.1f}" for code in codes
    )
    lines.append(f"{'Top sequence':<22}{top_cells}")
    lines.append(f"{'Frequency (%)':<22}{freq_cells}")
    lines.append(f"{'Multi-step (%)':<22}{multi_cells}")
    lines.append(f"Overall multi-step rate: {report.overall_multi_step_rate:.1f}%")
    lines.append(f"Cue lexicon version: {report.lexicon_version}")
    return "\n".join(lines) + "\n"
