"""Multi-turn dialogue generation and strict turn-level annotation.

Dialogues are 5-15 "Name: utterance" lines closed by an [END] marker. Every
turn carries exactly one annotation: a norm label (Adherence / Violation /
Not Relevant), one of 11 reaction labels, and a nonempty justification.
Label parsing is strict by design: an unknown token is an error, never
silently coerced to N/A.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import BoundsError, CountError, LabelError, ParseError, PreconditionError
from .gateway import Gateway, complete_parsed, generation_request
from .scenario import REFINED, ScenarioSituationPair, ValidationReport
from .taxonomy import Subnorm

END_MARKER = "[END]"
TURN_RANGE = (5, 15)

REACTION_LABELS: tuple[str, ...] = (
    "ACK", "AGR", "DIS", "APO", "THX", "EMP", "JUS", "SUG", "QUE", "CRT", "N/A",
)


class NormLabel(Enum):
    ADHERENCE = "Adherence"
    VIOLATION = "Violation"
    NOT_RELEVANT = "Not Relevant"

    @classmethod
    def from_token(cls, token: str) -> "NormLabel":
        for label in cls:
            if label.value == token:
                return label
        raise LabelError("norm", token)


@dataclass(frozen=True)
class Turn:
    index: int  # 1-based
    speaker: str
    utterance: str

    def to_record(self) -> dict:
        return {"index": self.index, "speaker": self.speaker, "utterance": self.utterance}

    @classmethod
    def from_record(cls, rec: dict) -> "Turn":
        return cls(index=rec["index"], speaker=rec["speaker"], utterance=rec["utterance"])


@dataclass(frozen=True)
class TurnAnnotation:
    turn_index: int
    norm_label: NormLabel
    reaction: str
    justification: str

    def __post_init__(self):
        if self.reaction not in REACTION_LABELS:
            raise LabelError("reaction", self.reaction)

    def to_record(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "norm_label": self.norm_label.value,
            "reaction": self.reaction,
            "justification": self.justification,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TurnAnnotation":
        return cls(
            turn_index=rec["turn_index"],
            norm_label=NormLabel.from_token(rec["norm_label"]),
            reaction=rec["reaction"],
            justification=rec["justification"],
        )


@dataclass
class AnnotatedDialogue:
    instance_id: str
    pair_id: str
    turns: list[Turn]
    annotations: list[TurnAnnotation]

    def to_record(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "pair_id": self.pair_id,
            "turns": [t.to_record() for t in self.turns],
            "annotations": [a.to_record() for a in self.annotations],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "AnnotatedDialogue":
        return cls(
            instance_id=rec["instance_id"],
            pair_id=rec["pair_id"],
            turns=[Turn.from_record(t) for t in rec["turns"]],
            annotations=[TurnAnnotation.from_record(a) for a in rec["annotations"]],
        )


def dialogue_text(turns: list[Turn]) -> str:
    return "\n".join(f"{turn.speaker}: {turn.utterance}" for turn in turns)


def parse_turns(text: str) -> list[Turn]:
    """Parse "Name: utterance" lines up to the [END] marker.

    Splits on the first colon only, so utterances may contain colons. Blank
    lines are ignored; a nonblank line without a colon is a parse error
    citing its line number.
    """
    turns: list[Turn] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == END_MARKER:
            break
        if ":" not in line:
            raise ParseError(f"turn line has no 'Name:' prefix: {line!r}", line_no=line_no)
        speaker, utterance = line.split(":", 1)
        speaker = speaker.strip()
        utterance = utterance.strip()
        if not speaker:
            raise ParseError(f"turn line has empty speaker: {line!r}", line_no=line_no)
        if not utterance:
            raise ParseError(f"turn line has empty utterance: {line!r}", line_no=line_no)
        turns.append(Turn(index=len(turns) + 1, speaker=speaker, utterance=utterance))
    if not turns:
        raise ParseError("no turns found in completion")
    return turns


def parse_dialogue_completion(text: str) -> list[Turn]:
    """parse_turns plus the 5-15 turn bound used by the generation path."""
    turns = parse_turns(text)
    if not TURN_RANGE[0] <= len(turns) <= TURN_RANGE[1]:
        raise BoundsError(
            f"turn count {len(turns)} outside [{TURN_RANGE[0]},{TURN_RANGE[1]}]"
        )
    return turns


def generate_dialogue(
    pair: ScenarioSituationPair,
    subnorm: Subnorm,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> list[Turn]:
    """Expand a refined pair into a 5-15 turn dialogue."""
    if pair.provenance != REFINED:
        raise PreconditionError(
            f"dialogue generation requires a refined pair, got provenance "
            f"{pair.provenance!r} for {pair.id}"
        )
    request = generation_request(
        "dialogue",
        {
            "language": pair.language.name,
            "category": subnorm.category.value,
            "subnorm": subnorm.statement,
            "scenario": pair.scenario,
            "situation": pair.situation,
        },
        model_tag=model_tag,
        seed_tag=f"dialogue:{pair.id}",
    )
    return complete_parsed(gateway, request, parse_dialogue_completion, attempts)


def parse_annotation_lines(text: str, turn_count: int) -> list[TurnAnnotation]:
    """Parse pipe-delimited "Role | Norm | Reaction | Explanation" rows.

    Rows map positionally onto turns; a count mismatch or any out-of-set
    label is an error (unknown reaction strings are never coerced to N/A).
    """
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if len(rows) != turn_count:
        raise CountError("annotation rows", turn_count, len(rows))
    annotations: list[TurnAnnotation] = []
    for idx, row in enumerate(rows, start=1):
        parts = [part.strip() for part in row.split("|", 3)]
        if len(parts) != 4:
            raise ParseError(
                f"annotation row must have 4 pipe-delimited fields: {row!r}", line_no=idx
            )
        _role, norm_token, reaction_token, justification = parts
        norm_label = NormLabel.from_token(norm_token)
        if reaction_token not in REACTION_LABELS:
            raise LabelError("reaction", reaction_token)
        if not justification:
            raise ParseError(f"annotation row {idx}: empty justification")
        annotations.append(
            TurnAnnotation(
                turn_index=idx,
                norm_label=norm_label,
                reaction=reaction_token,
                justification=justification,
            )
        )
    return annotations


def annotate_dialogue(
    turns: list[Turn],
    subnorm: Subnorm,
    pair_id: str,
    instance_id: str,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> AnnotatedDialogue:
    """Attach exactly one annotation to every turn."""
    if not turns:
        raise PreconditionError("cannot annotate an empty dialogue")
    request = generation_request(
        "annotate",
        {
            "language": subnorm.language.name,
            "subnorm": subnorm.statement,
            "dialogue": dialogue_text(turns),
        },
        model_tag=model_tag,
        seed_tag=f"annotate:{pair_id}",
    )
    annotations = complete_parsed(
        gateway, request, lambda text: parse_annotation_lines(text, len(turns)), attempts
    )
    return AnnotatedDialogue(
        instance_id=instance_id, pair_id=pair_id, turns=list(turns), annotations=annotations
    )


def validate_annotation(ann: AnnotatedDialogue) -> ValidationReport:
    """Total structural check over an annotated dialogue."""
    violations: list[str] = []
    n_turns = len(ann.turns)
    if not TURN_RANGE[0] <= n_turns <= TURN_RANGE[1]:
        violations.append(f"turn count {n_turns} outside [{TURN_RANGE[0]},{TURN_RANGE[1]}]")
    if len(ann.annotations) != n_turns:
        violations.append(
            f"annotation count {len(ann.annotations)} != turn count {n_turns}"
        )
    turn_indexes = {turn.index for turn in ann.turns}
    for annotation in ann.annotations:
        if annotation.turn_index not in turn_indexes:
            violations.append(
                f"annotation references turn {annotation.turn_index} "
                f"of a {n_turns}-turn dialogue"
            )
        if not annotation.justification.strip():
            violations.append(f"turn {annotation.turn_index}: empty justification")
    for turn in ann.turns:
        if not turn.utterance.strip():
            violations.append(f"turn {turn.index}: empty utterance")
    speakers = [turn.speaker for turn in ann.turns]
    distinct = set(speakers)
    if len(distinct) < 2:
        violations.append(f"dialogue has {len(distinct)} distinct speaker(s), need >= 2")
    elif len(distinct) == 2:
        # dyadic dialogues must alternate; >2 speakers are multi-party and exempt
        for prev, cur in zip(ann.turns, ann.turns[1:]):
            if prev.speaker == cur.speaker:
                violations.append(
                    f"turns {prev.index}-{cur.index}: same speaker twice in a dyadic dialogue"
                )
                break
    return ValidationReport(ann.instance_id, violations)
