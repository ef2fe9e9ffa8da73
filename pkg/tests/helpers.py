"""Hand-construction helpers for valid corpus objects in tests."""

from __future__ import annotations

from normforge.dialogue import AnnotatedDialogue, NormLabel, Turn, TurnAnnotation
from normforge.langs import EN, Language, NormCategory, StyleProfile
from normforge.scenario import InteractionType, ScenarioSituationPair
from normforge.store import CorpusInstance

DEFAULT_STYLE = StyleProfile(
    tone="casual",
    honorific_usage="none",
    relational_distance="peer",
    emotional_alignment="warm",
)

VALID_EN_SCENARIO = "Alex and Jordan are talking at the office about a recent favor."
VALID_EN_SITUATION = (
    "Alex and Jordan are longtime friends. "
    "Both of them feel the weight of the moment. "
    "The conversation is about to begin."
)


def make_pair(
    pair_id: str = "en-apology-01-adherence-01",
    subnorm_id: str = "en-apology-01",
    itype: InteractionType = InteractionType.ADHERENCE,
    language: Language = EN,
    provenance: str = "refined",
    round_no: int = 1,
    scenario: str = VALID_EN_SCENARIO,
    situation: str = VALID_EN_SITUATION,
) -> ScenarioSituationPair:
    return ScenarioSituationPair(
        id=pair_id,
        subnorm_id=subnorm_id,
        interaction_type=itype,
        scenario=scenario,
        situation=situation,
        style=DEFAULT_STYLE,
        language=language,
        provenance=provenance,
        round=round_no,
    )


def make_dialogue(
    instance_id: str,
    pair_id: str,
    turn_specs: list[tuple[str, NormLabel, str]],
    speakers: tuple[str, str] = ("Alex", "Jordan"),
) -> AnnotatedDialogue:
    """turn_specs rows are (utterance, norm label, reaction label)."""
    turns = [
        Turn(index=i + 1, speaker=speakers[i % 2], utterance=spec[0])
        for i, spec in enumerate(turn_specs)
    ]
    annotations = [
        TurnAnnotation(
            turn_index=i + 1,
            norm_label=spec[1],
            reaction=spec[2],
            justification=f"Turn {i + 1} behaves as labeled.",
        )
        for i, spec in enumerate(turn_specs)
    ]
    return AnnotatedDialogue(
        instance_id=instance_id, pair_id=pair_id, turns=turns, annotations=annotations
    )


NEUTRAL_SPECS = [
    ("Do you have a minute to talk?", NormLabel.NOT_RELEVANT, "QUE"),
    ("Of course, what's going on?", NormLabel.NOT_RELEVANT, "N/A"),
    ("Thanks for making time for me.", NormLabel.ADHERENCE, "THX"),
    ("Happy to help.", NormLabel.ADHERENCE, "ACK"),
    ("Let's get started then.", NormLabel.NOT_RELEVANT, "N/A"),
]


def make_instance(
    instance_id: str = "i-en-apology-01-adherence-01",
    subnorm_id: str = "en-apology-01",
    category: NormCategory = NormCategory.APOLOGY,
    itype: InteractionType = InteractionType.ADHERENCE,
    language: Language = EN,
    turn_specs: list[tuple[str, NormLabel, str]] | None = None,
) -> CorpusInstance:
    pair_id = f"{subnorm_id}-{itype.slug}-01"
    pair = make_pair(pair_id=pair_id, subnorm_id=subnorm_id, itype=itype, language=language)
    dialogue = make_dialogue(instance_id, pair_id, turn_specs or NEUTRAL_SPECS)
    return CorpusInstance(
        id=instance_id,
        language=language,
        category=category,
        subnorm_id=subnorm_id,
        interaction_type=itype,
        pair=pair,
        dialogue=dialogue,
    )
