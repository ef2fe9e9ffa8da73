"""Exemplar-guided iterative refinement with a quality-gated loop.

Stage 3 retrieves expert-curated exemplars by feature similarity, rewrites a
naive pair to match their style, scores the rewrite on three criteria (norm
alignment, language quality, semantic fidelity), and repeats until the mean
score clears the threshold or the round cap is hit.

Similarity is a weighted sum over the three cue families used for retrieval:
0.30 Jaccard over intent tags, 0.15 each for exact emotion-tone /
interaction-type / role-pattern matches, and 0.25 normalized longest common
subsequence over adjacency signatures. The score is symmetric, bounded in
[0, 1], and 1.0 for identical vectors; an embedding-based scorer can be
plugged in behind retrieve_exemplars without touching callers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import (
    BoundsError,
    ForgeError,
    InvariantError,
    ParseError,
    PreconditionError,
    RefinementLoopError,
)
from .gateway import Gateway, complete_parsed, evaluation_request, generation_request
from .langs import Language, NormCategory
from .scenario import (
    InteractionType,
    ScenarioSituationPair,
    mark_refined,
    parse_situation,
    validate_pair,
)

ROLE_PATTERNS = ("peer-peer", "subordinate-authority", "stranger", "family")


@dataclass(frozen=True)
class FeatureVector:
    """Deterministic retrieval features for one scenario-situation pair."""

    intent_tags: frozenset[str]
    emotion_tone: str
    interaction_type: InteractionType
    role_pattern: str
    adjacency_signature: tuple[tuple[str, str], ...]
    inferred_defaults: tuple[str, ...] = ()

    def __post_init__(self):
        if self.role_pattern not in ROLE_PATTERNS:
            raise InvariantError(f"unknown role pattern: {self.role_pattern}")
        if not self.adjacency_signature:
            raise InvariantError("adjacency signature must be nonempty")

    def to_record(self) -> dict:
        return {
            "intent_tags": sorted(self.intent_tags),
            "emotion_tone": self.emotion_tone,
            "interaction_type": self.interaction_type.value,
            "role_pattern": self.role_pattern,
            "adjacency_signature": [list(pair) for pair in self.adjacency_signature],
            "inferred_defaults": list(self.inferred_defaults),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "FeatureVector":
        return cls(
            intent_tags=frozenset(rec["intent_tags"]),
            emotion_tone=rec["emotion_tone"],
            interaction_type=InteractionType.from_name(rec["interaction_type"]),
            role_pattern=rec["role_pattern"],
            adjacency_signature=tuple(tuple(pair) for pair in rec["adjacency_signature"]),
            inferred_defaults=tuple(rec.get("inferred_defaults", [])),
        )


# primary expected reaction per category, used for intent tags and adjacency
_CATEGORY_INTENT = {
    NormCategory.APOLOGY: "APO",
    NormCategory.COMPLIMENT: "ACK",
    NormCategory.CONDOLENCE: "EMP",
    NormCategory.CRITICISM: "CRT",
    NormCategory.EMPATHY: "EMP",
    NormCategory.GREETING: "N/A",
    NormCategory.LEAVE_TAKING: "N/A",
    NormCategory.PERSUASION: "SUG",
    NormCategory.REQUEST: "QUE",
    NormCategory.RESPECT: "ACK",
    NormCategory.RESPONDING_TO_COMPLIMENTS: "THX",
    NormCategory.THANKS: "THX",
}

_CATEGORY_TONE = {
    NormCategory.APOLOGY: "regretful",
    NormCategory.COMPLIMENT: "warm",
    NormCategory.CONDOLENCE: "somber",
    NormCategory.CRITICISM: "tense",
    NormCategory.EMPATHY: "warm",
    NormCategory.GREETING: "friendly",
    NormCategory.LEAVE_TAKING: "friendly",
    NormCategory.PERSUASION: "earnest",
    NormCategory.REQUEST: "polite",
    NormCategory.RESPECT: "deferential",
    NormCategory.RESPONDING_TO_COMPLIMENTS: "modest",
    NormCategory.THANKS: "grateful",
}

# role-cue lexicons per pattern; first match in priority order wins
_ROLE_CUES = {
    "subordinate-authority": (
        "manager", "boss", "supervisor", "professor", "teacher", "principal",
        "director", "sir", "ma'am", "mr.", "mrs.", "ms.", "dr.",
        "부장", "과장", "팀장", "사장", "상사", "교수", "선생님", "선배", "직속",
        "经理", "老板", "主管", "教授", "老师", "上司", "领导", "前辈",
    ),
    "family": (
        "mother", "father", "mom", "dad", "sister", "brother", "grandmother",
        "grandfather", "aunt", "uncle", "cousin",
        "엄마", "아빠", "어머니", "아버지", "할머니", "할아버지", "언니", "누나", "동생", "형",
        "妈妈", "爸爸", "母亲", "父亲", "奶奶", "爷爷", "哥哥", "姐姐", "弟弟", "妹妹",
    ),
    "stranger": (
        "stranger", "clerk", "cashier", "waiter", "barista", "passenger",
        "customer", "receptionist",
        "점원", "직원", "승객", "낯선", "손님", "종업원",
        "陌生人", "店员", "服务员", "乘客", "顾客", "路人",
    ),
}

_QUESTION_CUES = ("?", "？")


def featurize(pair: ScenarioSituationPair, category: NormCategory) -> FeatureVector:
    """Extract the deterministic retrieval features of a pair.

    Total over valid pairs: absent cues fall back to conservative defaults
    recorded in inferred_defaults.
    """
    text = (pair.scenario + " " + pair.situation).lower()
    inferred: list[str] = []

    primary = _CATEGORY_INTENT[category]
    tags = {primary}
    if pair.interaction_type is InteractionType.V2R:
        tags.update({"APO", "JUS"})
    elif pair.interaction_type is InteractionType.VIOLATION:
        tags.update({"CRT", "DIS"})
    if any(cue in text for cue in _QUESTION_CUES):
        tags.add("QUE")

    if pair.interaction_type is InteractionType.VIOLATION:
        tone = "tense"
    elif pair.interaction_type is InteractionType.V2R:
        tone = "conciliatory"
    else:
        tone = _CATEGORY_TONE[category]

    role_pattern = None
    for pattern in ("subordinate-authority", "family", "stranger"):
        if any(cue in text for cue in _ROLE_CUES[pattern]):
            role_pattern = pattern
            break
    if role_pattern is None:
        role_pattern = "peer-peer"
        inferred.append("role_pattern")

    if pair.interaction_type is InteractionType.V2R:
        signature = (("CRT", "APO"), ("JUS", "ACK"))
    elif pair.interaction_type is InteractionType.VIOLATION:
        signature = (("CRT", "DIS"),)
    else:
        signature = ((primary, "ACK"),)

    return FeatureVector(
        intent_tags=frozenset(tags),
        emotion_tone=tone,
        interaction_type=pair.interaction_type,
        role_pattern=role_pattern,
        adjacency_signature=signature,
        inferred_defaults=tuple(inferred),
    )


# -- similarity ---------------------------------------------------------------

def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def _lcs_length(a: Sequence, b: Sequence) -> int:
    if not a or not b:
        return 0
    rows = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                rows[i][j] = rows[i - 1][j - 1] + 1
            else:
                rows[i][j] = max(rows[i - 1][j], rows[i][j - 1])
    return rows[len(a)][len(b)]


def _normalized_lcs(a: Sequence, b: Sequence) -> float:
    if not a and not b:
        return 1.0
    longest = max(len(a), len(b))
    return _lcs_length(a, b) / longest


SIMILARITY_WEIGHTS = {
    "intent_tags": 0.30,
    "emotion_tone": 0.15,
    "interaction_type": 0.15,
    "role_pattern": 0.15,
    "adjacency_signature": 0.25,
}


def similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Weighted feature similarity in [0, 1]; symmetric; 1.0 on identity."""
    score = SIMILARITY_WEIGHTS["intent_tags"] * _jaccard(a.intent_tags, b.intent_tags)
    score += SIMILARITY_WEIGHTS["emotion_tone"] * (a.emotion_tone == b.emotion_tone)
    score += SIMILARITY_WEIGHTS["interaction_type"] * (a.interaction_type == b.interaction_type)
    score += SIMILARITY_WEIGHTS["role_pattern"] * (a.role_pattern == b.role_pattern)
    score += SIMILARITY_WEIGHTS["adjacency_signature"] * _normalized_lcs(
        a.adjacency_signature, b.adjacency_signature
    )
    return score


# -- exemplar store -----------------------------------------------------------

@dataclass(frozen=True)
class Exemplar:
    """Expert-curated pair steering the rewrite of naive outputs."""

    id: str
    subnorm_id: str
    pair: ScenarioSituationPair
    curator: str
    features: FeatureVector
    category: NormCategory
    version: int = 1

    def __post_init__(self):
        if not self.curator.strip():
            raise InvariantError(f"exemplar {self.id}: empty curator")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "subnorm_id": self.subnorm_id,
            "pair": self.pair.to_record(),
            "curator": self.curator,
            "features": self.features.to_record(),
            "category": self.category.value,
            "version": self.version,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Exemplar":
        return cls(
            id=rec["id"],
            subnorm_id=rec["subnorm_id"],
            pair=ScenarioSituationPair.from_record(rec["pair"]),
            curator=rec["curator"],
            features=FeatureVector.from_record(rec["features"]),
            category=NormCategory.from_name(rec["category"]),
            version=rec.get("version", 1),
        )


def make_exemplar(
    exemplar_id: str,
    pair: ScenarioSituationPair,
    curator: str,
    category: NormCategory,
    version: int = 1,
) -> Exemplar:
    return Exemplar(
        id=exemplar_id,
        subnorm_id=pair.subnorm_id,
        pair=pair,
        curator=curator,
        features=featurize(pair, category),
        category=category,
        version=version,
    )


class ExemplarStore:
    """One JSONL file per (language, category); versions append, latest wins."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._exemplars: dict[tuple[str, NormCategory], dict[str, Exemplar]] = {}

    @classmethod
    def load_dir(cls, root: str | Path) -> "ExemplarStore":
        store = cls(root)
        if store.root.exists():
            for file in sorted(store.root.glob("*.jsonl")):
                with file.open(encoding="utf-8") as handle:
                    for line_no, line in enumerate(handle, start=1):
                        line = line.strip()
                        if not line:
                            continue
                        try:
                            exemplar = Exemplar.from_record(json.loads(line))
                        except (json.JSONDecodeError, KeyError) as exc:
                            raise ParseError(
                                f"{file.name}: bad exemplar record ({exc})", line_no=line_no
                            ) from exc
                        store._put(exemplar)
        return store

    def _key(self, language: Language, category: NormCategory) -> tuple[str, NormCategory]:
        return (language.code, category)

    def _put(self, exemplar: Exemplar) -> None:
        bucket = self._exemplars.setdefault(
            self._key(exemplar.pair.language, exemplar.category), {}
        )
        existing = bucket.get(exemplar.id)
        if existing is None or exemplar.version > existing.version:
            bucket[exemplar.id] = exemplar

    def _file_for(self, language: Language, category: NormCategory) -> Path:
        return self.root / f"{language.code.lower()}_{category.slug}.jsonl"

    def add_version(self, exemplar: Exemplar) -> Exemplar:
        """Append a version to the store file and the in-memory view."""
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._file_for(exemplar.pair.language, exemplar.category)
        with path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(exemplar.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
        self._put(exemplar)
        return exemplar

    def exemplars(self, language: Language, category: NormCategory) -> list[Exemplar]:
        bucket = self._exemplars.get(self._key(language, category), {})
        return [bucket[key] for key in sorted(bucket)]

    def all_exemplars(self) -> list[Exemplar]:
        out: list[Exemplar] = []
        for key in sorted(self._exemplars, key=lambda k: (k[0], k[1].value)):
            bucket = self._exemplars[key]
            out.extend(bucket[eid] for eid in sorted(bucket))
        return out

    def coverage_report(self, required: Iterable[tuple[str, InteractionType]]) -> list[str]:
        """List (subnorm, interaction type) cells lacking a curated exemplar."""
        have = {
            (ex.subnorm_id, ex.pair.interaction_type)
            for bucket in self._exemplars.values()
            for ex in bucket.values()
        }
        return [
            f"no exemplar for subnorm {subnorm_id} / {itype.value}"
            for subnorm_id, itype in required
            if (subnorm_id, itype) not in have
        ]


def retrieve_exemplars(
    pair: ScenarioSituationPair,
    category: NormCategory,
    store: ExemplarStore,
    k: int,
) -> list[tuple[Exemplar, float]]:
    """Top-k store exemplars by similarity, ties broken by id ascending."""
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    candidates = store.exemplars(pair.language, category)
    if not candidates:
        raise PreconditionError(
            f"empty exemplar store for {pair.language.code}/{category.value}"
        )
    query = featurize(pair, category)
    scored = [(exemplar, similarity(query, exemplar.features)) for exemplar in candidates]
    scored.sort(key=lambda item: (-item[1], item[0].id))
    return scored[:k]


# -- refinement quality -------------------------------------------------------

@dataclass(frozen=True)
class RQScore:
    """Three-criterion rubric score gating the refinement loop.

    mean is normally derived from the integer components; scripted scorers in
    tests may pass an explicit gate value (any real in [1, 5]) to model score
    streams that integer triplets cannot produce.
    """

    norm_alignment: int
    language_quality: int
    semantic_fidelity: int
    mean: float = None  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("norm_alignment", "language_quality", "semantic_fidelity"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 1 <= value <= 5:
                raise BoundsError(f"{name} must be an integer in 1..5, got {value!r}")
        if self.mean is None:
            object.__setattr__(
                self,
                "mean",
                (self.norm_alignment + self.language_quality + self.semantic_fidelity) / 3.0,
            )
        elif not 1.0 <= self.mean <= 5.0:
            raise BoundsError(f"mean must lie in [1, 5], got {self.mean}")

    def to_record(self) -> dict:
        return {
            "norm_alignment": self.norm_alignment,
            "language_quality": self.language_quality,
            "semantic_fidelity": self.semantic_fidelity,
            "mean": self.mean,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RQScore":
        return cls(
            norm_alignment=rec["norm_alignment"],
            language_quality=rec["language_quality"],
            semantic_fidelity=rec["semantic_fidelity"],
            mean=rec["mean"],
        )


_REFINED_SCORE = re.compile(r"^Refined:\s*([0-9]+)\s*$", re.MULTILINE)
_BARE_SCORE = re.compile(r"^\s*([0-9]+)\s*$")


def parse_refined_score(text: str) -> int:
    match = _REFINED_SCORE.search(text)
    if match is None:
        match = _BARE_SCORE.match(text.strip())
    if match is None:
        raise ParseError(f"no refined score found in judge output: {text[:80]!r}")
    value = int(match.group(1))
    if not 1 <= value <= 5:
        raise ParseError(f"refined score {value} outside 1..5")
    return value


def score_rq(
    original: ScenarioSituationPair,
    refined: ScenarioSituationPair,
    subnorm_statement: str,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> RQScore:
    """Three independent judge calls at temperature 0, one per criterion."""
    initial_text = original.as_prompt_text()
    refined_text = refined.as_prompt_text()
    seed_base = f"rq:{refined.id}:r{refined.round}"

    def judge(template_id: str, bindings: dict[str, str]) -> int:
        request = evaluation_request(
            template_id, bindings, model_tag=model_tag, seed_tag=f"{seed_base}:{template_id}"
        )
        return complete_parsed(gateway, request, parse_refined_score, attempts)

    norm_alignment = judge(
        "rq_norm_align",
        {"social_norm": subnorm_statement, "initial": initial_text, "refined": refined_text},
    )
    language_quality = judge(
        "rq_lang_quality", {"initial": initial_text, "refined": refined_text}
    )
    semantic_fidelity = judge(
        "rq_semantic_fidelity", {"initial": initial_text, "refined": refined_text}
    )
    return RQScore(norm_alignment, language_quality, semantic_fidelity)


# -- refine operations ----------------------------------------------------------

_REWRITTEN = re.compile(
    r"Rewritten Scenario:\s*(?P<scenario>.+?)\s*Rewritten Situation:\s*(?P<situation>.+)",
    re.DOTALL,
)


def parse_rewrite(text: str, language: Language) -> tuple[str, str]:
    match = _REWRITTEN.search(text)
    if match is None:
        raise ParseError(f"rewrite output missing Rewritten Scenario/Situation: {text[:80]!r}")
    scenario = match.group("scenario").strip()
    situation = parse_situation(match.group("situation").strip(), language)
    if not scenario:
        raise ParseError("rewritten scenario is empty")
    return scenario, situation


def refine_once(
    pair: ScenarioSituationPair,
    exemplars: Sequence[Exemplar],
    subnorm_statement: str,
    category: NormCategory,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> ScenarioSituationPair:
    """One exemplar-guided rewrite; structural invariants re-validated."""
    if not exemplars:
        raise PreconditionError("refine_once requires at least one exemplar")
    exemplar_text = "\n\n".join(ex.pair.as_prompt_text() for ex in exemplars)
    request = generation_request(
        "refine",
        {
            "language": pair.language.name,
            "category": category.value,
            "subnorm": subnorm_statement,
            "exemplars": exemplar_text,
            "scenario": pair.scenario,
            "situation": pair.situation,
        },
        model_tag=model_tag,
        seed_tag=f"refine:{pair.id}:r{pair.round + 1}",
    )
    scenario, situation = complete_parsed(
        gateway, request, lambda text: parse_rewrite(text, pair.language), attempts
    )
    refined = mark_refined(pair, scenario, situation)
    report = validate_pair(refined)
    if not report.ok:
        raise BoundsError(
            f"refined pair {refined.id} fails structural validation: "
            + "; ".join(report.violations)
        )
    return refined


@dataclass
class RefinementRound:
    input_pair: ScenarioSituationPair
    output_pair: ScenarioSituationPair
    score: RQScore
    no_change: bool = False

    def to_record(self) -> dict:
        return {
            "input": self.input_pair.to_record(),
            "output": self.output_pair.to_record(),
            "score": self.score.to_record(),
            "no_change": self.no_change,
        }


STOP_THRESHOLD = "threshold_met"
STOP_MAX_ROUNDS = "max_rounds"
STOP_NO_REVISION = "no_further_revision"


@dataclass
class RefinementTrace:
    pair_id: str
    rounds: list[RefinementRound] = field(default_factory=list)
    stop_reason: str = ""
    exemplars_used: tuple[tuple[str, int], ...] = ()

    @property
    def final_pair(self) -> ScenarioSituationPair:
        if not self.rounds:
            raise InvariantError(f"trace {self.pair_id} has no rounds")
        return self.rounds[-1].output_pair

    def check_chain(self) -> None:
        """Each round's input must equal the previous round's output."""
        for prev, cur in zip(self.rounds, self.rounds[1:]):
            if cur.input_pair != prev.output_pair:
                raise InvariantError(
                    f"trace {self.pair_id}: round input does not chain from previous output"
                )

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "rounds": [r.to_record() for r in self.rounds],
            "stop_reason": self.stop_reason,
            "exemplars_used": [list(ref) for ref in self.exemplars_used],
        }


@dataclass(frozen=True)
class RefineConfig:
    threshold: float = 4.5
    max_rounds: int = 3
    k: int = 1
    attempts: int = 3

    def __post_init__(self):
        if not 1.0 < self.threshold <= 5.0:
            raise PreconditionError(f"threshold must lie in (1, 5], got {self.threshold}")
        if self.max_rounds < 1:
            raise PreconditionError(f"max_rounds must be >= 1, got {self.max_rounds}")


Refiner = Callable[[ScenarioSituationPair, Sequence[Exemplar]], ScenarioSituationPair]
Scorer = Callable[[ScenarioSituationPair, ScenarioSituationPair], RQScore]


def refine_until_converged(
    pair: ScenarioSituationPair,
    store: ExemplarStore,
    config: RefineConfig,
    category: NormCategory,
    subnorm_statement: str = "",
    gateway: Gateway | None = None,
    model_tag: str = "",
    refiner: Refiner | None = None,
    scorer: Scorer | None = None,
) -> RefinementTrace:
    """Loop refine + score until the gate passes or the round cap is reached.

    refiner/scorer are injectable; the defaults go through the gateway. Inner
    failures re-raise as RefinementLoopError carrying the trace so far.
    """
    retrieved = retrieve_exemplars(pair, category, store, config.k)
    exemplars = [exemplar for exemplar, _ in retrieved]

    if refiner is None:
        if gateway is None:
            raise PreconditionError("refine_until_converged needs a gateway or a refiner")

        def refiner(current: ScenarioSituationPair, exs: Sequence[Exemplar]) -> ScenarioSituationPair:
            return refine_once(
                current, exs, subnorm_statement, category, gateway, model_tag, config.attempts
            )

    if scorer is None:
        if gateway is None:
            raise PreconditionError("refine_until_converged needs a gateway or a scorer")

        def scorer(original: ScenarioSituationPair, refined: ScenarioSituationPair) -> RQScore:
            return score_rq(
                original, refined, subnorm_statement, gateway, model_tag, config.attempts
            )

    trace = RefinementTrace(
        pair_id=pair.id,
        exemplars_used=tuple((ex.id, ex.version) for ex in exemplars),
    )
    current = pair
    for _ in range(config.max_rounds):
        try:
            refined = refiner(current, exemplars)
            score = scorer(current, refined)
        except ForgeError as exc:
            raise RefinementLoopError(str(exc), trace_so_far=trace) from exc
        no_change = (
            refined.scenario == current.scenario and refined.situation == current.situation
        )
        trace.rounds.append(RefinementRound(current, refined, score, no_change))
        if score.mean >= config.threshold:
            trace.stop_reason = STOP_THRESHOLD
            return trace
        if no_change:
            trace.stop_reason = STOP_NO_REVISION
            return trace
        current = refined
    trace.stop_reason = STOP_MAX_ROUNDS
    return trace
