"""Deterministic offline completion synthesizer.

Stands in for the real provider in tests, demos, and cache-building: output
is a pure function of the request digest, so record-then-replay round trips
are byte-stable. Synthesized text is intentionally simple but well-formed for
every template family (counts, sentence ranges, label formats), with cue
phrases that downstream annotation and strategy mining can latch onto.
"""

from __future__ import annotations

import random

from .gateway import CompletionRequest
from .langs import EN, Language, language_by_name

# per-language cue phrases; the annotate synthesizer keys off these
PHRASES = {
    "EN": {
        "apology": "I'm really sorry about that.",
        "thanks": "Thank you so much for your help.",
        "violation": "Honestly, that's your problem, not mine.",
        "dismiss": "Whatever, I'm done talking about this.",
        "criticism": "That was uncalled for.",
        "justification": "I only said that because the deadline pressure got to me.",
        "empathy": "That must have been really hard for you.",
        "compensation": "Let me make it up to you, I'll cover the cost next time.",
        "ack": "I understand.",
        "question": "Could you tell me what happened?",
        "closing": "Alright, let me get back to it.",
        "filler": "Let me think about the right way to put this.",
    },
    "KR": {
        "apology": "정말 죄송합니다.",
        "thanks": "도와주셔서 정말 감사합니다.",
        "violation": "솔직히 그건 제 알 바 아니에요.",
        "dismiss": "어쨌든 전 더 할 말 없어요.",
        "criticism": "그건 좀 너무하셨어요.",
        "justification": "마감 때문에 너무 급해서 그랬어요.",
        "empathy": "많이 힘드셨겠어요.",
        "compensation": "제가 보상할게요. 다음에는 제가 살게요.",
        "ack": "알겠습니다.",
        "question": "무슨 일이 있었는지 말씀해 주시겠어요?",
        "closing": "그럼 이만 정리할게요.",
        "filler": "어떻게 말씀드려야 할지 잠시 생각해 볼게요.",
    },
    "ZH": {
        "apology": "真的很抱歉。",
        "thanks": "非常感谢你的帮助。",
        "violation": "说实话，那是你的问题，跟我没关系。",
        "dismiss": "随便吧，我不想再说了。",
        "criticism": "你这样说太过分了。",
        "justification": "因为截止日期太紧了，我才那样说的。",
        "empathy": "你一定很不容易。",
        "compensation": "我来补偿你，下次我请客。",
        "ack": "我明白了。",
        "question": "能告诉我发生了什么吗？",
        "closing": "那我们先到这里吧。",
        "filler": "让我想想该怎么说比较好。",
    },
}

SPEAKERS = {
    "EN": ("Alex", "Jordan"),
    "KR": ("민수", "지은"),
    "ZH": ("小李", "小王"),
}

PLACES = {
    "EN": ("office", "campus cafe", "community center"),
    "KR": ("사무실", "학교 앞 카페", "동네 모임"),
    "ZH": ("办公室", "校园咖啡馆", "社区活动室"),
}

CATEGORY_GLOSS_KR = {
    "Apology": "사과", "Compliment": "칭찬", "Condolence": "위로",
    "Criticism": "비판", "Empathy": "공감", "Greeting": "인사",
    "Leave-taking": "작별 인사", "Persuasion": "설득", "Request": "부탁",
    "Respect": "존중", "Responding to Compliments": "칭찬에 대한 대응",
    "Thanks": "감사",
}
CATEGORY_GLOSS_ZH = {
    "Apology": "道歉", "Compliment": "称赞", "Condolence": "慰问",
    "Criticism": "批评", "Empathy": "同情", "Greeting": "问候",
    "Leave-taking": "告别", "Persuasion": "劝说", "Request": "请求",
    "Respect": "尊重", "Responding to Compliments": "回应称赞",
    "Thanks": "感谢",
}

_V2R_CUES = ("tries to make amends", "만회하려 한다", "事后设法弥补")
_VIOLATION_CUES = ("brushes it off", "대수롭지 않게 넘긴다", "却毫不在意")


def _gloss(category_name: str, lang: Language) -> str:
    if lang.code == "KR":
        return CATEGORY_GLOSS_KR.get(category_name, category_name)
    if lang.code == "ZH":
        return CATEGORY_GLOSS_ZH.get(category_name, category_name)
    return category_name.lower()


def _lang(bindings: dict[str, str], key: str = "language") -> Language:
    name = bindings.get(key, "English")
    try:
        return language_by_name(name)
    except Exception:
        return EN


class ScriptedProvider:
    """Provider whose completions are synthesized locally and deterministically."""

    def complete_text(self, prompt: str, request: CompletionRequest) -> tuple[str, dict]:
        rng = random.Random(int(request.digest[:16], 16))
        handler = {
            "subnorm_anchor": self._subnorms,
            "subnorm_align": self._aligned_subnorm,
            "scenario": self._scenarios,
            "situation": self._situation,
            "refine": self._refine,
            "dialogue": self._dialogue,
            "annotate": self._annotate,
            "gq_continue": self._continuation,
            "gq_ab": self._ab_choice,
        }.get(request.template_id)
        if handler is not None:
            text = handler(request.bindings, rng)
        elif request.template_id.startswith("rq_"):
            text = self._rq(request.template_id)
        elif request.template_id.startswith("dq_"):
            text = self._dq(request.template_id, request.bindings)
        else:
            text = "OK"
        return text, {"model": "scripted", "synthetic": True}

    # -- stage 1 --------------------------------------------------------

    def _subnorm_block(self, lang: Language, category: str, index: int, prefix: str) -> str:
        gloss = _gloss(category, lang)
        contexts = {
            "EN": ("at the workplace", "at school", "at a family gathering", "with elders", "among close friends"),
            "KR": ("직장에서", "학교에서", "가족 모임에서", "어른들과 함께 있을 때", "친한 친구 사이에서"),
            "ZH": ("在职场", "在学校", "在家庭聚会上", "和长辈相处时", "在好友之间"),
        }.get(lang.code, ("at the workplace", "at school", "at a family gathering", "with elders", "among close friends"))
        context = contexts[(index - 1) % len(contexts)]
        p = PHRASES.get(lang.code, PHRASES["EN"])
        if lang.code == "KR":
            statement = f"{gloss}가 필요한 순간에는 상대의 지위에 맞는 높임말로 바로 표현한다 (유형 {index})."
        elif lang.code == "ZH":
            statement = f"在需要表达{gloss}的场合，要及时并使用符合对方身份的措辞（类型{index}）。"
        else:
            statement = (
                f"When the moment calls for {gloss}, speak up promptly and match the "
                f"other person's level of formality (variant {index})."
            )
        evidence = f"{p['apology' if category == 'Apology' else 'thanks']}; {p['ack']}"
        return f"{prefix}: {statement}\nContext: {context}\nVerbal Evidence: {evidence}"

    def _subnorms(self, bindings: dict[str, str], rng: random.Random) -> str:
        lang = _lang(bindings)
        category = bindings.get("category", "Apology")
        count = int(bindings.get("count", "10"))
        blocks = [
            self._subnorm_block(lang, category, i, f"Subnorm {i}") for i in range(1, count + 1)
        ]
        return "\n".join(blocks)

    def _aligned_subnorm(self, bindings: dict[str, str], rng: random.Random) -> str:
        lang = _lang(bindings, "target_language")
        category = bindings.get("category", "Apology")
        variant = 1 + rng.randrange(5)
        return self._subnorm_block(lang, category, variant, "Subnorm")

    # -- stage 2 --------------------------------------------------------

    def _scenario_text(self, lang: Language, category: str, itype: str, rng: random.Random) -> str:
        a, b = SPEAKERS.get(lang.code, SPEAKERS["EN"])
        place = PLACES.get(lang.code, PLACES["EN"])[rng.randrange(3)]
        gloss = _gloss(category, lang)
        if lang.code == "KR":
            first = f"{place}에서 {a}와 {b}가 {gloss}에 관한 일로 이야기를 나눈다."
            cues = {
                "V2R": " 한 사람이 선을 넘었다가 나중에 만회하려 한다.",
                "Violation": " 한 사람이 선을 넘고도 대수롭지 않게 넘긴다.",
                "Adherence": " 두 사람 모두 예의를 지키려 한다.",
            }
        elif lang.code == "ZH":
            first = f"在{place}，{a}和{b}正在谈论与{gloss}有关的事情。"
            cues = {
                "V2R": "其中一人失礼了，事后设法弥补。",
                "Violation": "其中一人失礼了，却毫不在意。",
                "Adherence": "两人都希望得体地处理这件事。",
            }
        else:
            first = f"{a} and {b} are talking at the {place} about a matter of {gloss}."
            cues = {
                "V2R": " One of them oversteps and later tries to make amends.",
                "Violation": " One of them oversteps and brushes it off.",
                "Adherence": " Both of them want to handle it graciously.",
            }
        return first + cues.get(itype, cues["Adherence"])

    def _scenarios(self, bindings: dict[str, str], rng: random.Random) -> str:
        lang = _lang(bindings)
        category = bindings.get("category", "Apology")
        itype = bindings.get("interaction_type", "Adherence")
        count = int(bindings.get("count", "10"))
        lines = [
            f"Scenario {i}: {self._scenario_text(lang, category, itype, rng)}"
            for i in range(1, count + 1)
        ]
        return "\n".join(lines)

    def _situation(self, bindings: dict[str, str], rng: random.Random) -> str:
        lang = _lang(bindings)
        itype = bindings.get("interaction_type", "Adherence")
        scenario = bindings.get("scenario", "")
        a, b = SPEAKERS.get(lang.code, SPEAKERS["EN"])
        hierarchical = rng.random() < 0.5
        if lang.code == "KR":
            role = (
                f"{b}는 {a}의 직속 상사라 분위기가 조심스럽다."
                if hierarchical
                else f"{a}와 {b}는 오랜 친구 사이다."
            )
            body = [
                role,
                "두 사람 모두 이 순간의 무게를 잘 알고 있다.",
                "목소리에는 긴장과 조심스러움이 묻어난다.",
                "곧 대화가 시작되려 한다.",
            ]
        elif lang.code == "ZH":
            role = f"{b}是{a}的上司，气氛比较正式。" if hierarchical else f"{a}和{b}是多年的朋友。"
            body = [
                role,
                "两个人都明白这次谈话的分量。",
                "语气里带着一丝紧张和小心。",
                "谈话马上就要开始了。",
            ]
        else:
            role = (
                f"{b} is {a}'s direct manager, and the mood is formal."
                if hierarchical
                else f"{a} and {b} are longtime friends."
            )
            body = [
                role,
                "Both of them feel the weight of the moment.",
                "There is a careful, slightly tense note in their voices.",
                "The conversation is about to begin.",
            ]
        count = 3 + rng.randrange(3)  # 3..5 sentences
        sentences = body[: max(3, min(count, len(body)))]
        return "Situation: " + " ".join(sentences)

    # -- stage 3 --------------------------------------------------------

    def _refine(self, bindings: dict[str, str], rng: random.Random) -> str:
        lang = _lang(bindings)
        scenario = bindings.get("scenario", "")
        situation = bindings.get("situation", "")
        extra = {
            "KR": "말투는 끝까지 정중함을 잃지 않는다.",
            "ZH": "他们的言辞始终保持得体。",
        }.get(lang.code, "Their words stay measured and respectful throughout.")
        from .textseg import count_sentences

        if count_sentences(situation, lang) < 5:
            situation = situation.rstrip() + " " + extra
        return f"Rewritten Scenario: {scenario}\nRewritten Situation: {situation}"

    def _rq(self, template_id: str) -> str:
        if template_id == "rq_semantic_fidelity":
            return "Refined: 5"
        if template_id == "rq_lang_quality":
            return "Initial: 3\nRefined: 5"
        return "Initial: 4\nRefined: 5"

    # -- stage 4 --------------------------------------------------------

    def _detect_itype(self, bindings: dict[str, str]) -> str:
        # the scenario synthesizer plants these cues, so dialogue requests
        # (which always bind the scenario) can be typed without extra slots
        text = (bindings.get("scenario", "") or "") + " " + (bindings.get("situation", "") or "")
        if any(cue in text for cue in _V2R_CUES):
            return "V2R"
        if any(cue in text for cue in _VIOLATION_CUES):
            return "Violation"
        return "Adherence"

    def _dialogue(self, bindings: dict[str, str], rng: random.Random) -> str:
        lang = _lang(bindings)
        p = PHRASES.get(lang.code, PHRASES["EN"])
        a, b = SPEAKERS.get(lang.code, SPEAKERS["EN"])
        itype = self._detect_itype(bindings)
        if itype == "V2R":
            script = [
                p["question"],
                p["violation"],
                p["criticism"],
                p["apology"],
                p["justification"],
                p["compensation"],
                p["thanks"],
                p["closing"],
            ]
        elif itype == "Violation":
            script = [p["question"], p["violation"], p["criticism"], p["dismiss"], p["closing"]]
        else:
            script = [p["question"], p["thanks"], p["ack"], p["empathy"], p["closing"]]
        target = max(len(script), 5 + rng.randrange(8))  # 5..12, at least the script
        while len(script) < min(target, 15):
            script.insert(len(script) - 1, p["filler"])
        lines = [f"{a if i % 2 == 0 else b}: {utt}" for i, utt in enumerate(script)]
        return "\n".join(lines) + "\n[END]"

    def _annotate(self, bindings: dict[str, str], rng: random.Random) -> str:
        dialogue = bindings.get("dialogue", "")
        rows = []
        for line in dialogue.splitlines():
            line = line.strip()
            if not line or line == "[END]" or ":" not in line:
                continue
            speaker, utterance = line.split(":", 1)
            rows.append(self._annotation_row(speaker.strip(), utterance.strip()))
        return "\n".join(rows)

    def _annotation_row(self, speaker: str, utterance: str) -> str:
        checks = [
            (("that's your problem", "알 바 아니에요", "跟我没关系"), "Violation", "DIS",
             "Dismisses the other person's concern instead of addressing it."),
            (("Whatever, I'm done", "더 할 말 없어요", "不想再说了"), "Violation", "DIS",
             "Refuses to engage with the complaint."),
            (("uncalled for", "너무하셨어요", "太过分了"), "Not Relevant", "CRT",
             "Points out the inappropriate behavior."),
            (("sorry", "죄송", "抱歉"), "Adherence", "APO",
             "Offers a sincere apology for the earlier remark."),
            (("because", "때문", "因为"), "Adherence", "JUS",
             "Explains the circumstances behind the mistake."),
            (("must have been", "힘드셨겠", "不容易"), "Adherence", "EMP",
             "Validates the other speaker's feelings."),
            (("make it up", "cover the cost", "보상할게요", "제가 살게요", "补偿", "我请客"),
             "Adherence", "SUG", "Offers to make up for the inconvenience."),
            (("Thank", "감사", "谢谢", "感谢"), "Adherence", "THX", "Expresses appreciation."),
            (("I understand", "알겠습니다", "我明白了"), "Adherence", "ACK",
             "Acknowledges the other speaker's point."),
            (("?", "까?", "吗？"), "Not Relevant", "QUE", "Asks for more information."),
        ]
        for cues, norm, reaction, why in checks:
            if any(cue in utterance for cue in cues):
                return f"{speaker} | {norm} | {reaction} | {why}"
        return f"{speaker} | Not Relevant | N/A | Neutral transition that does not engage the norm."

    def _dq(self, template_id: str, bindings: dict[str, str]) -> str:
        dialogue = bindings.get("dialogue", "")
        has_violation = any(
            cue in dialogue for cue in ("your problem", "알 바", "跟我没关系")
        )
        has_apology = any(cue in dialogue for cue in ("sorry", "죄송", "抱歉"))
        if has_violation and has_apology:
            scores = {
                "dq_consistency": 5, "dq_naturalness": 5, "dq_relevance": 5,
                "dq_emotion_appropriateness": 5, "dq_norm_appropriateness": 3,
                "dq_scenario_coherence": 5,
            }
        elif has_violation:
            scores = {
                "dq_consistency": 3, "dq_naturalness": 4, "dq_relevance": 5,
                "dq_emotion_appropriateness": 2, "dq_norm_appropriateness": 1,
                "dq_scenario_coherence": 5,
            }
        else:
            scores = {key: 5 for key in (
                "dq_consistency", "dq_naturalness", "dq_relevance",
                "dq_emotion_appropriateness", "dq_norm_appropriateness",
                "dq_scenario_coherence",
            )}
        return f"Score: {scores.get(template_id, 5)}"

    # -- generalization checks -------------------------------------------

    def _continuation(self, bindings: dict[str, str], rng: random.Random) -> str:
        context = bindings.get("context", "")
        speakers: list[str] = []
        for line in context.splitlines():
            if ":" in line:
                name = line.split(":", 1)[0].strip()
                if name and name not in speakers:
                    speakers.append(name)
        if len(speakers) < 2:
            speakers = list(SPEAKERS["EN"])
        lines = [
            "Let's take a step back and sort this out together.",
            "I see where you're coming from now.",
            "Here is what I suggest we do next.",
            "That works for me if it works for you.",
            "Then it's settled, talk soon.",
        ]
        turns = [f"{speakers[i % 2]}: {text}" for i, text in enumerate(lines)]
        return "\n".join(turns) + "\n[END]"

    def _ab_choice(self, bindings: dict[str, str], rng: random.Random) -> str:
        a = bindings.get("output_a", "")
        b = bindings.get("output_b", "")
        return "A" if len(a) >= len(b) else "B"
