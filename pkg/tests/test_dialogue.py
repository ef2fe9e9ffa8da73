from __future__ import annotations

import pytest

from normforge.dialogue import (
    NormLabel,
    REACTION_LABELS,
    annotate_dialogue,
    generate_dialogue,
    parse_annotation_lines,
    parse_turns,
    validate_annotation,
)
from normforge.errors import (
    BoundsError,
    CountError,
    LabelError,
    ParseError,
    PreconditionError,
)
from normforge.langs import EN, KR, NormCategory
from normforge.scenario import InteractionType

from .helpers import make_dialogue, make_pair

# -- turn parsing ----------------------------------------------------------------


def test_parse_two_turns():
    turns = parse_turns("A: hi\nB: hello\n[END]")
    assert [(t.index, t.speaker, t.utterance) for t in turns] == [
        (1, "A", "hi"), (2, "B", "hello"),
    ]


def test_parse_ignores_blank_lines_and_text_after_end():
    turns = parse_turns("A: hi\n\n\nB: hello\n\n[END]\nC: ghost\n")
    assert len(turns) == 2


def test_parse_splits_on_first_colon_only():
    turns = parse_turns("Alex: Here's the plan: we apologize first.\nJo: Fine.\n[END]")
    assert turns[0].utterance == "Here's the plan: we apologize first."


def test_parse_missing_colon_cites_line():
    with pytest.raises(ParseError) as err:
        parse_turns("A: hi\nB: hello\njust shouting\n[END]")
    assert err.value.line_no == 3


def test_parse_zero_turns():
    with pytest.raises(ParseError, match="no turns"):
        parse_turns("[END]")


def test_parse_empty_utterance_rejected():
    with pytest.raises(ParseError):
        parse_turns("A:   \nB: hey\n[END]")


# -- dialogue generation -------------------------------------------------------------


def test_generate_dialogue_requires_refined(record_gateway, desk_taxonomy):
    subnorm = desk_taxonomy.subnorms_for(EN, NormCategory.APOLOGY)[0]
    naive = make_pair(provenance="naive", round_no=0)
    with pytest.raises(PreconditionError):
        generate_dialogue(naive, subnorm, record_gateway, "gen")


def test_generate_dialogue_scripted(record_gateway, desk_taxonomy):
    subnorm = desk_taxonomy.subnorms_for(EN, NormCategory.APOLOGY)[0]
    pair = make_pair(
        pair_id=f"{subnorm.id}-v2r-01",
        subnorm_id=subnorm.id,
        itype=InteractionType.V2R,
        scenario="Alex oversteps during a meeting and later tries to make amends.",
    )
    turns = generate_dialogue(pair, subnorm, record_gateway, "gen")
    assert 5 <= len(turns) <= 15
    assert len({t.speaker for t in turns}) == 2


def test_generate_dialogue_range_error(tmp_path, desk_taxonomy):
    """A four-turn completion on every attempt is a hard range error."""
    from dataclasses import replace as dc_replace

    from normforge.gateway import (
        CompletionCache,
        CompletionRecord,
        Gateway,
        generation_request,
    )

    subnorm = desk_taxonomy.subnorms_for(EN, NormCategory.APOLOGY)[0]
    pair = make_pair(pair_id=f"{subnorm.id}-adherence-01", subnorm_id=subnorm.id)
    request = generation_request(
        "dialogue",
        {
            "language": EN.name,
            "category": subnorm.category.value,
            "subnorm": subnorm.statement,
            "scenario": pair.scenario,
            "situation": pair.situation,
        },
        model_tag="gen",
        seed_tag=f"dialogue:{pair.id}",
    )
    four_turns = "A: one\nB: two\nA: three\nB: four\n[END]"
    cache = CompletionCache(tmp_path / "cache.jsonl")
    cache.append(CompletionRecord(request.digest, request.snapshot(), four_turns))
    for attempt in (2, 3):
        retry = dc_replace(request, seed_tag=f"{request.seed_tag}~retry{attempt}")
        cache.append(CompletionRecord(retry.digest, retry.snapshot(), four_turns))
    gateway = Gateway(mode="replay", cache=CompletionCache(tmp_path / "cache.jsonl"))
    with pytest.raises(BoundsError, match=r"turn count 4"):
        generate_dialogue(pair, subnorm, gateway, "gen")


# -- annotation parsing ----------------------------------------------------------------


def test_parse_annotations_happy_path():
    rows = "\n".join(
        [
            "Alex | Not Relevant | QUE | Asks what happened.",
            "Jordan | Violation | DIS | Dismisses the concern.",
            "Alex | Not Relevant | CRT | Calls out the behavior.",
            "Jordan | Adherence | APO | Apologizes sincerely.",
            "Alex | Adherence | ACK | Accepts the apology.",
            "Jordan | Adherence | THX | Thanks Alex for understanding.",
        ]
    )
    annotations = parse_annotation_lines(rows, 6)
    assert len(annotations) == 6
    assert all(a.reaction in REACTION_LABELS for a in annotations)
    assert annotations[1].norm_label is NormLabel.VIOLATION


def test_unknown_reaction_label_carries_token():
    rows = "Alex | Adherence | APOLOGY | Apologizes."
    with pytest.raises(LabelError) as err:
        parse_annotation_lines(rows, 1)
    assert err.value.token == "APOLOGY"


def test_unknown_norm_label_rejected():
    with pytest.raises(LabelError):
        parse_annotation_lines("Alex | Compliance | APO | text.", 1)


def test_lowercase_labels_rejected():
    with pytest.raises(LabelError):
        parse_annotation_lines("Alex | adherence | APO | text.", 1)
    with pytest.raises(LabelError):
        parse_annotation_lines("Alex | Adherence | apo | text.", 1)


def test_annotation_count_mismatch():
    with pytest.raises(CountError):
        parse_annotation_lines("Alex | Adherence | APO | ok.", 2)


def test_annotation_missing_fields():
    with pytest.raises(ParseError, match="4 pipe-delimited fields"):
        parse_annotation_lines("Alex | Adherence | APO", 1)


def test_annotation_empty_justification():
    with pytest.raises(ParseError, match="empty justification"):
        parse_annotation_lines("Alex | Adherence | APO | ", 1)


def test_na_reaction_is_legal():
    annotations = parse_annotation_lines("Alex | Not Relevant | N/A | Just a filler.", 1)
    assert annotations[0].reaction == "N/A"


# -- annotation op + V2R shape ------------------------------------------------------------


def test_annotate_dialogue_scripted(record_gateway, desk_taxonomy):
    subnorm = desk_taxonomy.subnorms_for(EN, NormCategory.APOLOGY)[0]
    pair = make_pair(
        pair_id=f"{subnorm.id}-v2r-01",
        subnorm_id=subnorm.id,
        itype=InteractionType.V2R,
        scenario="Alex oversteps and later tries to make amends.",
    )
    turns = generate_dialogue(pair, subnorm, record_gateway, "gen")
    annotated = annotate_dialogue(
        turns, subnorm, pair_id=pair.id, instance_id="i-1",
        gateway=record_gateway, model_tag="judge",
    )
    assert len(annotated.annotations) == len(turns)
    assert {a.reaction for a in annotated.annotations} <= set(REACTION_LABELS)

    # V2R shape: a Violation turn precedes a repair-class turn (APO/JUS/EMP)
    violation_idx = min(
        a.turn_index for a in annotated.annotations
        if a.norm_label is NormLabel.VIOLATION
    )
    repair_idx = [
        a.turn_index for a in annotated.annotations
        if a.reaction in ("APO", "JUS", "EMP") and a.turn_index > violation_idx
    ]
    assert repair_idx, "expected post-violation repair turns"


def test_annotate_kr_dialogue(record_gateway, desk_taxonomy):
    subnorm = desk_taxonomy.subnorms_for(KR, NormCategory.APOLOGY)[0]
    pair = make_pair(
        pair_id=f"{subnorm.id}-v2r-01",
        subnorm_id=subnorm.id,
        itype=InteractionType.V2R,
        language=KR,
        scenario="사무실에서 민수가 선을 넘었다가 나중에 만회하려 한다.",
        situation="민수와 지은은 오랜 친구 사이다. 분위기가 조심스럽다. 곧 대화가 시작된다.",
    )
    turns = generate_dialogue(pair, subnorm, record_gateway, "gen")
    annotated = annotate_dialogue(
        turns, subnorm, pair_id=pair.id, instance_id="i-kr-1",
        gateway=record_gateway, model_tag="judge",
    )
    reactions = [a.reaction for a in annotated.annotations]
    assert "APO" in reactions


# -- validation report -------------------------------------------------------------------


def test_validate_annotation_clean():
    from .helpers import NEUTRAL_SPECS

    dialogue = make_dialogue("i-x", "p-x", NEUTRAL_SPECS)
    assert validate_annotation(dialogue).ok


def test_validate_annotation_turn_count_bounds():
    specs = [(f"line {i}", NormLabel.NOT_RELEVANT, "N/A") for i in range(16)]
    dialogue = make_dialogue("i-x", "p-x", specs)
    report = validate_annotation(dialogue)
    assert any("turn count 16" in v for v in report.violations)


def test_validate_annotation_dangling_index():
    from .helpers import NEUTRAL_SPECS
    from normforge.dialogue import TurnAnnotation

    dialogue = make_dialogue("i-x", "p-x", NEUTRAL_SPECS)
    dialogue.annotations[-1] = TurnAnnotation(
        turn_index=9, norm_label=NormLabel.NOT_RELEVANT, reaction="N/A",
        justification="points at a turn that does not exist",
    )
    report = validate_annotation(dialogue)
    assert any("references turn 9" in v for v in report.violations)


def test_validate_annotation_single_speaker():
    from .helpers import NEUTRAL_SPECS

    dialogue = make_dialogue("i-x", "p-x", NEUTRAL_SPECS, speakers=("Alex", "Alex"))
    report = validate_annotation(dialogue)
    assert any("distinct speaker" in v for v in report.violations)


def test_validate_annotation_dyadic_alternation():
    from normforge.dialogue import Turn

    dialogue = make_dialogue("i-x", "p-x", [
        ("one", NormLabel.NOT_RELEVANT, "N/A"),
        ("two", NormLabel.NOT_RELEVANT, "N/A"),
        ("three", NormLabel.NOT_RELEVANT, "N/A"),
        ("four", NormLabel.NOT_RELEVANT, "N/A"),
        ("five", NormLabel.NOT_RELEVANT, "N/A"),
    ])
    dialogue.turns[2] = Turn(index=3, speaker="Jordan", utterance="three")
    report = validate_annotation(dialogue)
    assert any("same speaker twice" in v for v in report.violations)


def test_validate_annotation_multi_party_tolerated():
    from normforge.dialogue import Turn, TurnAnnotation

    turns = [
        Turn(1, "Alex", "one"), Turn(2, "Jordan", "two"), Turn(3, "Sam", "three"),
        Turn(4, "Alex", "four"), Turn(5, "Alex", "five"),
    ]
    annotations = [
        TurnAnnotation(i, NormLabel.NOT_RELEVANT, "N/A", "neutral") for i in range(1, 6)
    ]
    from normforge.dialogue import AnnotatedDialogue

    report = validate_annotation(AnnotatedDialogue("i-m", "p-m", turns, annotations))
    assert report.ok
