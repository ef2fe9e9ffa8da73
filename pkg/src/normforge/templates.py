"""Prompt template registry.

Every provider call in the pipeline goes through one of these templates.
Slots use ``{name}`` placeholders; rendering fails on any unbound slot and on
any binding that names no slot. Templates are tagged generation or
evaluation, which drives the gateway temperature policy (0.7 vs 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnboundSlotError, UnknownTemplateError

_SLOT = re.compile(r"\{([a-z_]+)\}")

GENERATION = "generation"
EVALUATION = "evaluation"


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    kind: str
    body: str

    @property
    def slots(self) -> tuple[str, ...]:
        seen: list[str] = []
        for match in _SLOT.finditer(self.body):
            name = match.group(1)
            if name not in seen:
                seen.append(name)
        return tuple(seen)


_SUBNORM_ANCHOR = """\
Target Language: {language}
Category: {category}
Seed Values:
{seed_values}

You are a culturally aware assistant with deep knowledge of {language} social norms and communication practices. Given a specific social norm category (e.g., Apology, Empathy), your task is to generate {count} {language}-specific conversational subnorms that reflect the core values and expectations found in {language} society. These values are derived from nationally representative survey data, including interpersonal relationships, formality, group harmony, respect for authority, and emotional expression.

Please follow these instructions when generating the subnorms:
1. Ensure that each subnorm reflects {language} cultural values and not generic or universal norms.
2. Specify the context in which the norm should be applied (e.g., school, workplace, with elders).
3. Include verbal evidence (i.e., example phrases in {language}) that would signal adherence to the subnorm in dialogue.
4. The subnorms should be actionable and observable in conversation.

Output format, one block per subnorm:
Subnorm 1: <statement>
Context: <where the norm applies>
Verbal Evidence: <phrase>; <phrase>
...
Subnorm {count}: <statement>
Context: <where the norm applies>
Verbal Evidence: <phrase>; <phrase>
"""

_SUBNORM_ALIGN = """\
Target Language: {target_language}
Category: {category}
Source Subnorm ({source_language}):
{source_subnorm}

You are a culturally adaptive assistant with knowledge of conversational norms across multiple languages. Provided with a {source_language} subnorm reflecting a specific cultural value (e.g., how to apologize, express empathy, or show respect), your task is to generate a corresponding conversational subnorm in {target_language} that matches the {source_language} subnorm in meaning and function.

Use the following instructions:
1. Ensure the subnorm reflects the target language's cultural norms, not just a literal translation of the {source_language} input.
2. Specify the context in which the norm should be applied (e.g., school, workplace, with elders).
3. Include verbal evidence (i.e., example phrases in {target_language}) that would signal adherence to the subnorm in dialogue.
4. The subnorm should be actionable and observable in conversation.

Output format:
Subnorm: <statement>
Context: <where the norm applies>
Verbal Evidence: <phrase>; <phrase>
"""

_SCENARIO = """\
Target Language: {language}
Category: {category}
Subnorm: {subnorm}
Interaction Type: {interaction_type}

Based on the above Subnorm for the given Category, generate {count} distinct and concise scenarios that could naturally occur in a similar social context within {culture} culture. Each scenario is 1-2 sentences. Please ensure realism and cultural grounding. Use names and honorifics commonly used in the specified country. Every scenario must fit the given interaction type.

Output format:
Scenario 1: <text>
...
Scenario {count}: <text>
"""

_SITUATION = """\
Target Language: {language}
Category: {category}
Subnorm: {subnorm}
Interaction Type: {interaction_type}
Scenario: {scenario}

Generate a culturally plausible Situation in 3-5 sentences that expands upon the scenario, specifying relational roles, emotional states, and stylistic features such as tone and honorifics.
1. Use realistic names and honorifics.
2. Ensure emotional coherence.
3. Depict through action/dialogue, not explanation.

Output format:
Situation: <text>
"""

_REFINE = """\
Target Language: {language}
Category: {category}
Subnorm: {subnorm}

Expert-refined exemplar(s):
{exemplars}

Naive input:
Scenario: {scenario}
Situation: {situation}

Given a naive Scenario-Situation pair and an expert-refined version, rewrite all other naive inputs to match the expert style. Do not shorten content. Ensure cultural richness and tone. Cover a wide range of settings and relationships. Avoid repetition. Keep the scenario at 1-2 sentences and the situation at 3-5 sentences.

Output format:
Rewritten Scenario: <text>
Rewritten Situation: <text>
"""

_DIALOGUE = """\
Target Language: {language}
Category: {category}
Subnorm: {subnorm}
Scenario: {scenario}
Situation: {situation}

Generate a natural and realistic dialogue between two speakers reflecting the Scenario and Situation above. Write in {language}. Format each turn with speaker names. Dialogue should be 5-15 turns long.

Output format:
Name: line of dialogue
Name: line of dialogue
...
[END]
"""

_ANNOTATE = """\
Target Language: {language}
Subnorm: {subnorm}
Dialogue:
{dialogue}

For each dialogue turn, label: (1) Norm-level adherence (Adherence / Violation / Not Relevant), (2) Speaker's reaction label (e.g., APO, ACK, AGR), and (3) Explanation for the label. Output exactly one line per dialogue turn, in turn order.

Label format:
Role | Norm Label | Reaction Label | Explanation

Reaction labels:
APO: Apology, ACK: Acknowledgment, AGR: Agreement, DIS: Disagreement, THX: Thanks, EMP: Empathy, JUS: Justification, SUG: Suggestion, QUE: Question, CRT: Criticism, N/A: Not applicable
"""

_RQ_NORM_ALIGN = """\
Evaluation Instruction:
You are a domain expert who evaluates ONLY Norm Alignment - how well each text aligns with the given Social Norm. Ignore grammar or style.
Inputs:
Social Norm: {social_norm}
Initial Text: {initial}
Refined Text: {refined}
Scoring: Give each text an integer score 1-5 (1 = completely unrelated, 5 = perfectly aligned).

Output format:
Initial: <score>
Refined: <score>
"""

_RQ_LANG_QUALITY = """\
Evaluation Instruction:
You are a professional copy-editor judging ONLY Language Quality - grammar, fluency, and naturalness. Ignore meaning preservation.
Inputs:
Initial Text: {initial}
Refined Text: {refined}
Scoring: Give each text an integer score 1-5 (1 = very poor language, 5 = native-level fluent).

Output format:
Initial: <score>
Refined: <score>
"""

_RQ_SEMANTIC_FIDELITY = """\
Evaluation Instruction:
You are a bilingual reviewer judging ONLY Semantic Fidelity - how faithfully the Refined text keeps the original meaning and intent of the Initial text. Ignore style and social-norm fit.
Inputs:
Initial Text: {initial}
Refined Text: {refined}
Scoring: Give the refined text an integer score 1-5 (1 = meaning lost / contradictory, 5 = meaning identical).

Output format:
Refined: <score>
"""

_DQ_CONSISTENCY = """\
You are a professional dataset auditor for social-norm dialogues. You are given a culture category. Your task is to evaluate only the Consistency of the dialogue. Ignore grammar, fluency, or style. Focus only on whether the dialogue is logically and contextually consistent throughout.

Culture: {culture}
Social Norm: {norm}
Dialogue:
{dialogue}

Assuming the dialogue adheres to the given social norm, are all utterances logically and emotionally coherent with one another?
- Do characters maintain a consistent attitude, tone, and perspective throughout?
- Are there any contradictions or abrupt shifts in reasoning, emotion, or information?
- Does the dialogue flow smoothly without unexpected or unjustified changes?

Scoring criteria:
1 = Major inconsistencies or contradictions
3 = Somewhat inconsistent or awkward transitions
5 = Fully consistent and coherent throughout

Output format:
Score: <1-5>
"""

_DQ_NATURALNESS = """\
You are a professional dataset auditor for social-norm dialogues. Your task is to evaluate only the Naturalness of the dialogue. Ignore whether the response is factually correct or norm-appropriate. Focus on how naturally the dialogue would sound to a native speaker.

Dialogue:
{dialogue}

Does the dialogue sound natural and fluent as if spoken by native speakers in a real-world situation?
- Are the expressions, tone, and word choices contextually appropriate and idiomatic?
- Do the conversational turns flow smoothly without sounding robotic or overly scripted?
- Are there any awkward phrases or unnatural sentence structures?

Scoring criteria:
1 = Extremely unnatural or robotic
3 = Somewhat awkward or artificial
5 = Very natural, fluent, and human-like

Output format:
Score: <1-5>
"""

_DQ_RELEVANCE = """\
You are a professional dataset auditor for social-norm dialogues. You are given a culture category.

Your task is to evaluate only the Relevance of the dialogue to the provided Scenario and Situation. Ignore grammar, fluency, or logical consistency. Focus on whether the dialogue reflects the key intentions, emotions, and context described in the Scenario and Situation.

Culture: {culture}
Scenario: {scenario}
Situation: {situation}
Dialogue:
{dialogue}

Does the dialogue appropriately address and reflect the actions, intentions, and emotional context presented in the scenario and situation?
- Are the key elements of the situation represented in the conversation (e.g., apology, embarrassment, disagreement)?
- Do the characters react in a way that makes sense for the described context?
- Are any critical actions or emotional responses missing from the dialogue?

Scoring criteria:
1 = Dialogue is mostly irrelevant to the situation
3 = Partially relevant, with some elements missing or misaligned
5 = Dialogue is highly relevant and faithfully represents the described situation

Output format:
Score: <1-5>
"""

_DQ_EMOTION = """\
You are a professional dataset auditor for social-norm dialogues. You are given a culture category.

Your task is to evaluate only the Emotional Appropriateness of the dialogue. Ignore grammar, norm correctness, or logical structure. Focus on whether the tone, expressions, and emotional language used in the dialogue match the emotional context of the situation.

Culture: {culture}
Scenario: {scenario}
Situation: {situation}
Dialogue:
{dialogue}

Does the emotional tone, choice of words, and manner of speaking in the dialogue align appropriately with the emotional context of the situation?
- Does the dialogue reflect the expected emotional state (e.g., tension, regret, embarrassment, relief) implied in the situation?
- Are the expressions and tone suitable for the described emotional stakes?
- Is there any emotional mismatch that makes the dialogue feel unnatural or inappropriate?

Scoring criteria:
1 = Emotionally disconnected or inappropriate
3 = Emotion is somewhat present but weak or inconsistent
5 = Emotional tone is highly appropriate and enhances the realism

Output format:
Score: <1-5>
"""

_DQ_NORM = """\
You are a professional dataset auditor for social-norm dialogues. You are given a culture category.

Your task is to evaluate only the Social Norm Appropriateness of the dialogue. Assess how well the conversation reflects the given social norm, and categorize the degree of adherence.

Culture: {culture}
Social Norm: {norm}
Dialogue:
{dialogue}

Based on the given social norm, how well does the dialogue align with it?
- Does the dialogue completely follow the norm?
- Does it violate the norm?
- Does it violate the norm but later attempt to resolve it?
- Is the behavior partially aligned with the norm?

Classification criteria:
1 = Fully Violated
2 = Partially Violated
3 = Violation then Resolved
4 = Partially Adherence
5 = Fully Adherence

Output format:
Score: <1-5>
"""

_DQ_COHERENCE = """\
You are a professional dataset auditor for social-norm dialogues. Your task is to evaluate only the Scenario Coherence of the dialogue. Ignore grammar or emotional tone. Focus on whether the dialogue logically and smoothly follows the sequence of events described in the scenario.

Culture: {culture}
Scenario: {scenario}
Situation: {situation}
Dialogue:
{dialogue}

Does the dialogue unfold in a way that aligns with the narrative structure and event flow of the scenario?
- Is there a smooth and coherent transition from the described situation into the dialogue?
- Are there any gaps, jumps, or inconsistencies between what the scenario sets up and what happens in the conversation?
- Does the dialogue logically follow the order of events and emotional pacing described in the scenario (or situation)?

Scoring criteria:
1 = Dialogue and scenario (or situation) are disconnected or contradictory
3 = Some transitions or event links are missing or unclear
5 = Dialogue flows logically and coherently from the scenario (or situation)

Output format:
Score: <1-5>
"""

_GQ_CONTINUE = """\
You are continuing the following human-human dialogue. Continue the conversation with 5 additional turns naturally and coherently.

Dialogue so far:
{context}

Continue the dialogue. Output format:
Name: line of dialogue
Name: line of dialogue
...
[END]
"""

_GQ_AB = """\
You are an evaluator. Below is a dialogue context followed by two different continuations (A and B). Choose which continuation is more appropriate, natural, coherent, and socially norm-aligned. Respond only with "A" or "B".

Context:
{context}

Response A:
{output_a}

Response B:
{output_b}

Which is better? Respond with A or B only.
"""

TEMPLATES: dict[str, PromptTemplate] = {
    t.id: t
    for t in (
        PromptTemplate("subnorm_anchor", GENERATION, _SUBNORM_ANCHOR),
        PromptTemplate("subnorm_align", GENERATION, _SUBNORM_ALIGN),
        PromptTemplate("scenario", GENERATION, _SCENARIO),
        PromptTemplate("situation", GENERATION, _SITUATION),
        PromptTemplate("refine", GENERATION, _REFINE),
        PromptTemplate("dialogue", GENERATION, _DIALOGUE),
        PromptTemplate("annotate", GENERATION, _ANNOTATE),
        PromptTemplate("rq_norm_align", EVALUATION, _RQ_NORM_ALIGN),
        PromptTemplate("rq_lang_quality", EVALUATION, _RQ_LANG_QUALITY),
        PromptTemplate("rq_semantic_fidelity", EVALUATION, _RQ_SEMANTIC_FIDELITY),
        PromptTemplate("dq_consistency", EVALUATION, _DQ_CONSISTENCY),
        PromptTemplate("dq_naturalness", EVALUATION, _DQ_NATURALNESS),
        PromptTemplate("dq_relevance", EVALUATION, _DQ_RELEVANCE),
        PromptTemplate("dq_emotion_appropriateness", EVALUATION, _DQ_EMOTION),
        PromptTemplate("dq_norm_appropriateness", EVALUATION, _DQ_NORM),
        PromptTemplate("dq_scenario_coherence", EVALUATION, _DQ_COHERENCE),
        PromptTemplate("gq_continue", GENERATION, _GQ_CONTINUE),
        PromptTemplate("gq_ab", EVALUATION, _GQ_AB),
    )
}

DQ_TEMPLATE_IDS: tuple[str, ...] = (
    "dq_consistency",
    "dq_naturalness",
    "dq_relevance",
    "dq_emotion_appropriateness",
    "dq_norm_appropriateness",
    "dq_scenario_coherence",
)


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise UnknownTemplateError(template_id) from None


def render(template_id: str, bindings: dict[str, str]) -> str:
    """Substitute bindings into the template body.

    Raises UnboundSlotError naming the first missing slot; bindings that name
    no slot are rejected the same way (catches caller typos early).
    """
    template = get_template(template_id)
    slots = set(template.slots)
    for slot in template.slots:
        if slot not in bindings:
            raise UnboundSlotError(slot, template_id)
    for key in bindings:
        if key not in slots:
            raise UnboundSlotError(key, template_id)

    def _sub(match: re.Match) -> str:
        return str(bindings[match.group(1)])

    # single-pass substitution: bound values are never re-scanned, so no
    # template placeholder can survive once the slot check above passes
    return _SLOT.sub(_sub, template.body)
