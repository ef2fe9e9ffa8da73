"""Languages, the twelve norm categories, and dialogue style parameters.

The language set is open: EN/KR/ZH ship by default and pilot languages can be
registered at runtime (taxonomy files may carry the metadata inline).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import LabelError


class NormCategory(Enum):
    """The twelve conversational social-norm categories."""

    APOLOGY = "Apology"
    COMPLIMENT = "Compliment"
    CONDOLENCE = "Condolence"
    CRITICISM = "Criticism"
    EMPATHY = "Empathy"
    GREETING = "Greeting"
    LEAVE_TAKING = "Leave-taking"
    PERSUASION = "Persuasion"
    REQUEST = "Request"
    RESPECT = "Respect"
    RESPONDING_TO_COMPLIMENTS = "Responding to Compliments"
    THANKS = "Thanks"

    @property
    def slug(self) -> str:
        return self.value.lower().replace(" ", "-")

    @classmethod
    def from_name(cls, name: str) -> "NormCategory":
        for cat in cls:
            if cat.value == name:
                return cat
        raise LabelError("norm category", name)


CATEGORY_NAMES: tuple[str, ...] = tuple(c.value for c in NormCategory)


@dataclass(frozen=True)
class Language:
    """A target language plus the metadata the pipeline needs about it.

    script is the dominant script class used by the language-mismatch
    heuristic: one of latin, hangul, han.
    """

    code: str
    name: str
    culture: str
    script: str


EN = Language("EN", "English", "American", "latin")
KR = Language("KR", "Korean", "Korean", "hangul")
ZH = Language("ZH", "Chinese", "Chinese", "han")

_REGISTRY: dict[str, Language] = {lang.code: lang for lang in (EN, KR, ZH)}


def register_language(lang: Language) -> Language:
    """Add a pilot language to the registry (idempotent on identical entries)."""
    existing = _REGISTRY.get(lang.code)
    if existing is not None and existing != lang:
        raise LabelError("language (conflicting registration)", lang.code)
    _REGISTRY[lang.code] = lang
    return lang


def get_language(code: str) -> Language:
    try:
        return _REGISTRY[code]
    except KeyError:
        raise LabelError("language", code) from None


def language_by_name(name: str) -> Language:
    for lang in _REGISTRY.values():
        if lang.name == name:
            return lang
    raise LabelError("language", name)


def configured_languages() -> tuple[Language, ...]:
    return tuple(_REGISTRY[code] for code in sorted(_REGISTRY))


TONES = ("formal", "casual")
HONORIFIC_USAGE = ("required", "optional", "none")
RELATIONAL_DISTANCE = ("peer", "hierarchical")


@dataclass(frozen=True)
class StyleProfile:
    """Stylistic parameters attached to every scenario-situation pair."""

    tone: str
    honorific_usage: str
    relational_distance: str
    emotional_alignment: str

    def __post_init__(self):
        if self.tone not in TONES:
            raise LabelError("tone", self.tone)
        if self.honorific_usage not in HONORIFIC_USAGE:
            raise LabelError("honorific_usage", self.honorific_usage)
        if self.relational_distance not in RELATIONAL_DISTANCE:
            raise LabelError("relational_distance", self.relational_distance)
        if not self.emotional_alignment:
            raise LabelError("emotional_alignment", self.emotional_alignment)

    def to_record(self) -> dict:
        return {
            "tone": self.tone,
            "honorific_usage": self.honorific_usage,
            "relational_distance": self.relational_distance,
            "emotional_alignment": self.emotional_alignment,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "StyleProfile":
        return cls(
            tone=rec["tone"],
            honorific_usage=rec["honorific_usage"],
            relational_distance=rec["relational_distance"],
            emotional_alignment=rec["emotional_alignment"],
        )
