"""Scenario-situation construction: expands subnorms into tagged text pairs.

Each subnorm crosses with each interaction type to produce scenario texts
(1-2 sentences) and situation elaborations (3-5 sentences). Out-of-range
scenarios are kept with a warning (refinement repairs them); out-of-range
situations are a hard error after retries.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from enum import Enum

from .errors import BoundsError, CountError, LabelError, ParseError, PreconditionError
from .gateway import Gateway, complete_parsed, generation_request
from .langs import Language, NormCategory, StyleProfile, get_language
from .taxonomy import Subnorm
from .textseg import count_sentences

SCENARIO_SENTENCES = (1, 2)
SITUATION_SENTENCES = (3, 5)

NAIVE = "naive"
REFINED = "refined"


class InteractionType(Enum):
    ADHERENCE = "Adherence"
    VIOLATION = "Violation"
    V2R = "V2R"

    @property
    def slug(self) -> str:
        return self.value.lower()

    @classmethod
    def from_name(cls, name: str) -> "InteractionType":
        for itype in cls:
            if itype.value == name:
                return itype
        raise LabelError("interaction type", name)


@dataclass(frozen=True)
class ScenarioSituationPair:
    id: str
    subnorm_id: str
    interaction_type: InteractionType
    scenario: str
    situation: str
    style: StyleProfile
    language: Language
    provenance: str = NAIVE
    round: int = 0

    def __post_init__(self):
        if self.provenance not in (NAIVE, REFINED):
            raise LabelError("provenance", self.provenance)
        if self.provenance == REFINED and self.round < 1:
            raise BoundsError(f"pair {self.id}: refined pair must have round >= 1")

    def as_prompt_text(self) -> str:
        return f"Scenario: {self.scenario}\nSituation: {self.situation}"

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "subnorm_id": self.subnorm_id,
            "interaction_type": self.interaction_type.value,
            "scenario": self.scenario,
            "situation": self.situation,
            "style": self.style.to_record(),
            "language": self.language.code,
            "provenance": self.provenance,
            "round": self.round,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ScenarioSituationPair":
        return cls(
            id=rec["id"],
            subnorm_id=rec["subnorm_id"],
            interaction_type=InteractionType.from_name(rec["interaction_type"]),
            scenario=rec["scenario"],
            situation=rec["situation"],
            style=StyleProfile.from_record(rec["style"]),
            language=get_language(rec["language"]),
            provenance=rec.get("provenance", NAIVE),
            round=rec.get("round", 0),
        )


@dataclass
class GeneratedScenario:
    text: str
    warnings: tuple[str, ...] = ()


_SCENARIO_LINE = re.compile(r"^Scenario\s+(\d+)\s*:\s*(.+)$", re.MULTILINE)


def parse_scenario_list(text: str, expected: int, language: Language) -> list[GeneratedScenario]:
    matches = _SCENARIO_LINE.findall(text)
    if len(matches) != expected:
        raise CountError("scenario lines", expected, len(matches))
    items: list[GeneratedScenario] = []
    for number, body in matches:
        body = body.strip()
        if not body:
            raise ParseError(f"scenario {number}: empty text")
        count = count_sentences(body, language)
        warnings = ()
        if not SCENARIO_SENTENCES[0] <= count <= SCENARIO_SENTENCES[1]:
            warnings = (
                f"scenario {number}: sentence count {count} outside "
                f"[{SCENARIO_SENTENCES[0]},{SCENARIO_SENTENCES[1]}]",
            )
        items.append(GeneratedScenario(body, warnings))
    return items


def generate_scenarios(
    subnorm: Subnorm,
    itype: InteractionType,
    n: int,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> list[GeneratedScenario]:
    """Generate n scenario texts for a (subnorm, interaction type) cell."""
    if n < 1:
        raise PreconditionError(f"scenario count must be >= 1, got {n}")
    request = generation_request(
        "scenario",
        {
            "language": subnorm.language.name,
            "category": subnorm.category.value,
            "subnorm": subnorm.statement,
            "interaction_type": itype.value,
            "count": str(n),
            "culture": subnorm.language.culture,
        },
        model_tag=model_tag,
        seed_tag=f"scenario:{subnorm.id}:{itype.slug}",
    )
    return complete_parsed(
        gateway,
        request,
        lambda text: parse_scenario_list(text, n, subnorm.language),
        attempts,
    )


_SITUATION_PREFIX = re.compile(r"^\s*Situation(?:\s+\d+)?\s*:\s*", re.IGNORECASE)


def parse_situation(text: str, language: Language) -> str:
    body = _SITUATION_PREFIX.sub("", text.strip(), count=1).strip()
    if not body:
        raise ParseError("empty situation text")
    count = count_sentences(body, language)
    if not SITUATION_SENTENCES[0] <= count <= SITUATION_SENTENCES[1]:
        raise BoundsError(
            f"situation sentence count {count} outside "
            f"[{SITUATION_SENTENCES[0]},{SITUATION_SENTENCES[1]}]"
        )
    return body


def elaborate_situation(
    scenario_text: str,
    subnorm: Subnorm,
    itype: InteractionType,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
    seed_tag: str = "",
) -> str:
    """Expand a scenario into a 3-5 sentence situation."""
    if not scenario_text.strip():
        raise PreconditionError("scenario text must be nonempty")
    request = generation_request(
        "situation",
        {
            "language": subnorm.language.name,
            "category": subnorm.category.value,
            "subnorm": subnorm.statement,
            "interaction_type": itype.value,
            "scenario": scenario_text,
        },
        model_tag=model_tag,
        seed_tag=seed_tag or f"situation:{subnorm.id}:{itype.slug}",
    )
    return complete_parsed(
        gateway, request, lambda text: parse_situation(text, subnorm.language), attempts
    )


# -- style derivation --------------------------------------------------------

_HIERARCHY_CUES = (
    "manager", "boss", "supervisor", "professor", "teacher", "principal",
    "director", "sir", "ma'am", "mr.", "mrs.", "ms.", "dr.",
    "부장", "과장", "팀장", "사장", "상사", "교수", "선생님", "선배",
    "经理", "老板", "主管", "教授", "老师", "上司", "领导", "前辈",
)

_FORMAL_CATEGORIES = {
    NormCategory.APOLOGY,
    NormCategory.CONDOLENCE,
    NormCategory.RESPECT,
    NormCategory.PERSUASION,
    NormCategory.REQUEST,
}

_TYPE_ALIGNMENT = {
    InteractionType.ADHERENCE: "warm",
    InteractionType.VIOLATION: "tense",
    InteractionType.V2R: "conciliatory",
}


def derive_style(
    language: Language,
    category: NormCategory,
    itype: InteractionType,
    situation_text: str,
) -> StyleProfile:
    """Deterministic style assignment from language, category, type, and text cues."""
    lowered = situation_text.lower()
    hierarchical = any(cue in lowered for cue in _HIERARCHY_CUES)
    if language.code in ("KR", "ZH"):
        honorifics = "required" if hierarchical else "optional"
    else:
        honorifics = "optional" if hierarchical else "none"
    formal = hierarchical or category in _FORMAL_CATEGORIES
    return StyleProfile(
        tone="formal" if formal else "casual",
        honorific_usage=honorifics,
        relational_distance="hierarchical" if hierarchical else "peer",
        emotional_alignment=_TYPE_ALIGNMENT[itype],
    )


def build_pair(
    subnorm: Subnorm,
    itype: InteractionType,
    index: int,
    scenario_text: str,
    situation_text: str,
) -> ScenarioSituationPair:
    return ScenarioSituationPair(
        id=f"{subnorm.id}-{itype.slug}-{index:02d}",
        subnorm_id=subnorm.id,
        interaction_type=itype,
        scenario=scenario_text,
        situation=situation_text,
        style=derive_style(subnorm.language, subnorm.category, itype, situation_text),
        language=subnorm.language,
    )


def mark_refined(pair: ScenarioSituationPair, scenario: str, situation: str) -> ScenarioSituationPair:
    return replace(
        pair,
        scenario=scenario,
        situation=situation,
        provenance=REFINED,
        round=pair.round + 1,
    )


# -- structural validation ----------------------------------------------------

def _script_class(char: str) -> str | None:
    code = ord(char)
    if 0xAC00 <= code <= 0xD7A3 or 0x1100 <= code <= 0x11FF or 0x3130 <= code <= 0x318F:
        return "hangul"
    if 0x4E00 <= code <= 0x9FFF or 0x3400 <= code <= 0x4DBF:
        return "han"
    if char.isalpha() and unicodedata.name(char, "").startswith("LATIN"):
        return "latin"
    return None


def dominant_script(text: str) -> str | None:
    counts = {"latin": 0, "hangul": 0, "han": 0}
    for char in text:
        cls = _script_class(char)
        if cls is not None:
            counts[cls] += 1
    best = max(counts, key=lambda key: counts[key])
    return best if counts[best] > 0 else None


@dataclass
class ValidationReport:
    subject_id: str
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_pair(pair: ScenarioSituationPair) -> ValidationReport:
    """Total structural check; returns one entry per violated invariant."""
    violations: list[str] = []
    scenario_count = count_sentences(pair.scenario, pair.language)
    if not SCENARIO_SENTENCES[0] <= scenario_count <= SCENARIO_SENTENCES[1]:
        violations.append(
            f"scenario sentence count {scenario_count} outside "
            f"[{SCENARIO_SENTENCES[0]},{SCENARIO_SENTENCES[1]}]"
        )
    situation_count = count_sentences(pair.situation, pair.language)
    if not SITUATION_SENTENCES[0] <= situation_count <= SITUATION_SENTENCES[1]:
        violations.append(
            f"situation sentence count {situation_count} outside "
            f"[{SITUATION_SENTENCES[0]},{SITUATION_SENTENCES[1]}]"
        )
    if not pair.scenario.strip():
        violations.append("empty scenario")
    if not pair.situation.strip():
        violations.append("empty situation")
    if pair.provenance == REFINED and pair.round < 1:
        violations.append("refined provenance with round 0")
    script = dominant_script(pair.scenario + " " + pair.situation)
    if script is not None and script != pair.language.script:
        violations.append(
            f"language mismatch: dominant script {script} does not match "
            f"{pair.language.code} ({pair.language.script})"
        )
    return ValidationReport(pair.id, violations)
