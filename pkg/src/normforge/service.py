"""Human-rating service: blinded evaluation queues over HTTP.

Sessions serve three task kinds: six-criterion dialogue ratings, blinded A/B
preference choices, and exemplar curation. Item payloads sent to raters
contain content only; for A/B items the label-to-system mapping lives in the
server-side session manifest and is applied exclusively at export time.

Persistence is an append-only JSONL log per session (manifest record, then
served/rating events), so state survives restarts and every human judgment
is auditable. Auth is one bearer token per rater, configured at deploy.
"""

from __future__ import annotations

import json
import random
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel

from .errors import (
    BoundsError,
    DuplicateSubmissionError,
    PayloadKindError,
    PreconditionError,
    ServiceError,
)
from .evaluation import DQ_CRITERIA, PreferenceRecord, aggregate_preferences
from .langs import get_language
from .refine import Exemplar, ExemplarStore, make_exemplar
from .scenario import (
    SCENARIO_SENTENCES,
    SITUATION_SENTENCES,
    ScenarioSituationPair,
)
from .store import Corpus
from .textseg import count_sentences

TASK_KINDS = ("dq_rating", "ab_preference", "exemplar_curation")


class CreateSessionBody(BaseModel):
    task_kind: str
    language: str = ""
    seed: int = 0
    sample_size: int | None = None
    categories: list[str] = []


class RatingBody(BaseModel):
    item_id: str
    payload: dict


@dataclass(frozen=True)
class SessionSpec:
    task_kind: str
    rater_id: str
    language: str = ""
    seed: int = 0
    sample_size: int | None = None
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise PayloadKindError(f"unknown task kind: {self.task_kind!r}")
        if not self.rater_id:
            raise PreconditionError("rater_id must be nonempty")


@dataclass
class Session:
    session_id: str
    spec: SessionSpec
    queue: list[str]  # item ids in serving order
    payloads: dict[str, dict]  # item id -> blinded payload
    blinding: dict[str, dict[str, str]] = field(default_factory=dict)  # ab only
    served: list[str] = field(default_factory=list)
    ratings: dict[str, dict] = field(default_factory=dict)

    @property
    def exhausted(self) -> bool:
        return len(self.served) >= len(self.queue)


class EvalService:
    """Session lifecycle, validation, persistence, and de-blinded export."""

    def __init__(
        self,
        store_dir: str | Path,
        corpus: Corpus | None = None,
        comparisons: Sequence[dict] | None = None,
        exemplar_store: ExemplarStore | None = None,
    ):
        self.store_dir = Path(store_dir)
        self.sessions_dir = self.store_dir / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.corpus = corpus
        self.comparisons = list(comparisons or [])
        self.exemplar_store = exemplar_store
        self.sessions: dict[str, Session] = {}
        self._replay_logs()

    # -- persistence -----------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def _append_event(self, session_id: str, event: dict) -> None:
        with self._log_path(session_id).open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")

    def _replay_logs(self) -> None:
        for path in sorted(self.sessions_dir.glob("*.jsonl")):
            session: Session | None = None
            with path.open(encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    kind = event["kind"]
                    if kind == "manifest":
                        session = Session(
                            session_id=event["session_id"],
                            spec=SessionSpec(
                                task_kind=event["task_kind"],
                                rater_id=event["rater_id"],
                                language=event.get("language", ""),
                                seed=event.get("seed", 0),
                                sample_size=event.get("sample_size"),
                                categories=tuple(event.get("categories", [])),
                            ),
                            queue=list(event["queue"]),
                            payloads=dict(event["payloads"]),
                            blinding=dict(event.get("blinding", {})),
                        )
                    elif session is not None and kind == "served":
                        session.served.append(event["item_id"])
                    elif session is not None and kind == "rating":
                        session.ratings[event["item_id"]] = event["payload"]
            if session is not None:
                self.sessions[session.session_id] = session

    # -- session creation --------------------------------------------------

    def create_session(self, spec: SessionSpec) -> Session:
        builders = {
            "dq_rating": self._build_dq_items,
            "ab_preference": self._build_ab_items,
            "exemplar_curation": self._build_curation_items,
        }
        queue, payloads, blinding = builders[spec.task_kind](spec)
        if not queue:
            raise PreconditionError(f"empty item set for {spec.task_kind} session")
        session_id = f"{spec.task_kind[:2]}-{uuid.uuid4().hex[:10]}"
        session = Session(
            session_id=session_id,
            spec=spec,
            queue=queue,
            payloads=payloads,
            blinding=blinding,
        )
        self.sessions[session_id] = session
        self._append_event(
            session_id,
            {
                "kind": "manifest",
                "session_id": session_id,
                "task_kind": spec.task_kind,
                "rater_id": spec.rater_id,
                "language": spec.language,
                "seed": spec.seed,
                "sample_size": spec.sample_size,
                "categories": list(spec.categories),
                "queue": queue,
                "payloads": payloads,
                "blinding": blinding,
            },
        )
        return session

    def _build_dq_items(self, spec: SessionSpec):
        if self.corpus is None or not self.corpus.instances:
            raise PreconditionError("no corpus configured for dq_rating sessions")
        instances = [
            inst
            for inst in self.corpus.instances
            if (not spec.language or inst.language.code == spec.language)
            and (not spec.categories or inst.category.value in spec.categories)
        ]
        if not instances:
            raise PreconditionError("corpus filter matched no instances")
        rng = random.Random(spec.seed)
        # uniform stratification by category, seed recorded in the manifest
        by_category: dict[str, list] = {}
        for inst in sorted(instances, key=lambda i: i.id):
            by_category.setdefault(inst.category.value, []).append(inst)
        for bucket in by_category.values():
            rng.shuffle(bucket)
        picked = []
        target = spec.sample_size or len(instances)
        while len(picked) < target and any(by_category.values()):
            for name in sorted(by_category):
                if by_category[name] and len(picked) < target:
                    picked.append(by_category[name].pop())
        rng.shuffle(picked)
        payloads = {
            inst.id: {
                "item_id": inst.id,
                "language": inst.language.code,
                "category": inst.category.value,
                "scenario": inst.pair.scenario,
                "situation": inst.pair.situation,
                "turns": [t.to_record() for t in inst.dialogue.turns],
            }
            for inst in picked
        }
        return [inst.id for inst in picked], payloads, {}

    def _build_ab_items(self, spec: SessionSpec):
        if not self.comparisons:
            raise PreconditionError("no comparisons configured for ab_preference sessions")
        rng = random.Random(spec.seed)
        items = sorted(self.comparisons, key=lambda c: c["context_id"])
        rng.shuffle(items)
        if spec.sample_size:
            items = items[: spec.sample_size]
        queue: list[str] = []
        payloads: dict[str, dict] = {}
        blinding: dict[str, dict[str, str]] = {}
        for item in items:
            responses = item["responses"]
            if len(responses) != 2 or responses[0]["system"] == responses[1]["system"]:
                raise PreconditionError(
                    f"comparison {item['context_id']} needs two distinct systems"
                )
            first, second = responses
            if rng.random() < 0.5:
                mapping = {"A": first["system"], "B": second["system"]}
            else:
                mapping = {"A": second["system"], "B": first["system"]}
            text_by_system = {r["system"]: r["text"] for r in responses}
            item_id = str(item["context_id"])
            queue.append(item_id)
            blinding[item_id] = mapping
            payloads[item_id] = {
                "item_id": item_id,
                "context": item["context"],
                "response_a": text_by_system[mapping["A"]],
                "response_b": text_by_system[mapping["B"]],
            }
        return queue, payloads, blinding

    def _build_curation_items(self, spec: SessionSpec):
        if self.exemplar_store is None:
            raise PreconditionError("no exemplar store configured for curation sessions")
        exemplars = self.exemplar_store.all_exemplars()
        if spec.language:
            exemplars = [ex for ex in exemplars if ex.pair.language.code == spec.language]
        if spec.categories:
            exemplars = [ex for ex in exemplars if ex.category.value in spec.categories]
        rng = random.Random(spec.seed)
        exemplars = sorted(exemplars, key=lambda ex: ex.id)
        rng.shuffle(exemplars)
        if spec.sample_size:
            exemplars = exemplars[: spec.sample_size]
        payloads = {
            ex.id: {
                "item_id": ex.id,
                "exemplar_id": ex.id,
                "version": ex.version,
                "language": ex.pair.language.code,
                "category": ex.category.value,
                "subnorm_id": ex.subnorm_id,
                "scenario": ex.pair.scenario,
                "situation": ex.pair.situation,
                "scenario_sentences": list(SCENARIO_SENTENCES),
                "situation_sentences": list(SITUATION_SENTENCES),
            }
            for ex in exemplars
        }
        return [ex.id for ex in exemplars], payloads, {}

    # -- serving and rating -----------------------------------------------

    def _session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError(f"unknown session: {session_id}")
        return session

    def next_item(self, session_id: str) -> dict | None:
        """Serve the next unserved item, or None when the queue is exhausted."""
        session = self._session(session_id)
        if session.exhausted:
            return None
        item_id = session.queue[len(session.served)]
        session.served.append(item_id)
        self._append_event(session_id, {"kind": "served", "item_id": item_id})
        return session.payloads[item_id]

    def submit_rating(self, session_id: str, item_id: str, payload: dict) -> dict:
        session = self._session(session_id)
        if item_id not in session.served:
            raise ServiceError(f"item {item_id} was not served to session {session_id}")
        if item_id in session.ratings:
            raise DuplicateSubmissionError(
                f"item {item_id} already rated in session {session_id}"
            )
        validated = self._validate_payload(session, item_id, payload)
        session.ratings[item_id] = validated
        self._append_event(
            session_id,
            {
                "kind": "rating",
                "item_id": item_id,
                "payload": validated,
                "ts": time.time(),
            },
        )
        if session.spec.task_kind == "exemplar_curation":
            self._version_exemplar(session, item_id, validated)
        return {"item_id": item_id, "rated": len(session.ratings), "total": len(session.queue)}

    def _validate_payload(self, session: Session, item_id: str, payload: dict) -> dict:
        kind = session.spec.task_kind
        if kind == "dq_rating":
            scores = payload.get("scores")
            if not isinstance(scores, dict):
                raise PayloadKindError("dq_rating payload must carry a 'scores' mapping")
            missing = [c for c in DQ_CRITERIA if c not in scores]
            if missing:
                raise PayloadKindError(f"missing criteria: {', '.join(missing)}")
            for criterion in DQ_CRITERIA:
                value = scores[criterion]
                if not isinstance(value, int) or not 1 <= value <= 5:
                    raise BoundsError(
                        f"{criterion} must be an integer in 1..5, got {value!r}"
                    )
            return {"scores": {c: scores[c] for c in DQ_CRITERIA}}
        if kind == "ab_preference":
            choice = payload.get("choice")
            if choice not in ("A", "B"):
                raise PayloadKindError(f"ab_preference payload needs choice A or B, got {choice!r}")
            return {"choice": choice}
        # exemplar curation
        scenario = str(payload.get("scenario", "")).strip()
        situation = str(payload.get("situation", "")).strip()
        if not scenario or not situation:
            raise PayloadKindError("curation payload needs nonempty scenario and situation")
        language = get_language(session.payloads[item_id]["language"])
        scenario_count = count_sentences(scenario, language)
        if not SCENARIO_SENTENCES[0] <= scenario_count <= SCENARIO_SENTENCES[1]:
            raise BoundsError(
                f"scenario sentence count {scenario_count} outside "
                f"[{SCENARIO_SENTENCES[0]},{SCENARIO_SENTENCES[1]}]"
            )
        situation_count = count_sentences(situation, language)
        if not SITUATION_SENTENCES[0] <= situation_count <= SITUATION_SENTENCES[1]:
            raise BoundsError(
                f"situation sentence count {situation_count} outside "
                f"[{SITUATION_SENTENCES[0]},{SITUATION_SENTENCES[1]}]"
            )
        return {
            "scenario": scenario,
            "situation": situation,
            "curator": str(payload.get("curator") or session.spec.rater_id),
        }

    def _version_exemplar(self, session: Session, item_id: str, payload: dict) -> None:
        assert self.exemplar_store is not None
        meta = session.payloads[item_id]
        previous = None
        for ex in self.exemplar_store.all_exemplars():
            if ex.id == meta["exemplar_id"]:
                previous = ex
                break
        if previous is None:
            raise ServiceError(f"exemplar {meta['exemplar_id']} vanished from the store")
        revised_pair: ScenarioSituationPair = replace(
            previous.pair, scenario=payload["scenario"], situation=payload["situation"]
        )
        revised: Exemplar = make_exemplar(
            previous.id,
            revised_pair,
            payload["curator"],
            previous.category,
            version=previous.version + 1,
        )
        self.exemplar_store.add_version(revised)

    # -- export -------------------------------------------------------------

    def export_results(self, session_ids: Sequence[str] = ()) -> dict:
        """De-blinded aggregates over closed or in-progress sessions."""
        ids = sorted(session_ids) if session_ids else sorted(self.sessions)
        if not ids:
            raise ServiceError("no sessions to export")
        picked = [self._session(sid) for sid in ids]
        if not any(session.ratings for session in picked):
            raise ServiceError("no ratings submitted yet")

        dq_matrix: dict[str, dict[str, dict[str, int]]] = {c: {} for c in DQ_CRITERIA}
        preference_records: list[PreferenceRecord] = []
        curated: list[dict] = []
        for session in picked:
            rater = session.spec.rater_id
            for item_id in sorted(session.ratings):
                payload = session.ratings[item_id]
                if session.spec.task_kind == "dq_rating":
                    for criterion in DQ_CRITERIA:
                        dq_matrix[criterion].setdefault(rater, {})[item_id] = payload[
                            "scores"
                        ][criterion]
                elif session.spec.task_kind == "ab_preference":
                    preference_records.append(
                        PreferenceRecord(
                            context_id=item_id,
                            side_shown_first="A",
                            mapping=session.blinding[item_id],
                            choice=payload["choice"],
                            rater=rater,
                        )
                    )
                else:
                    curated.append(
                        {
                            "exemplar_id": session.payloads[item_id]["exemplar_id"],
                            "new_version": session.payloads[item_id]["version"] + 1,
                            "curator": payload["curator"],
                        }
                    )

        out: dict = {"sessions": ids}
        if any(dq_matrix[c] for c in DQ_CRITERIA):
            out["dq_matrix"] = {
                criterion: {
                    rater: dict(sorted(items.items()))
                    for rater, items in sorted(dq_matrix[criterion].items())
                }
                for criterion in DQ_CRITERIA
            }
        if preference_records:
            out["ab"] = {
                "n": len(preference_records),
                "per_system": aggregate_preferences(preference_records),
                "records": [r.to_record() for r in preference_records],
            }
        if curated:
            out["curated"] = curated
        return out


# -- HTTP wiring ------------------------------------------------------------------


def create_app(
    service: EvalService,
    rater_tokens: dict[str, str],
    static_dir: str | Path | None = None,
):
    """FastAPI app over an EvalService; one bearer token per rater."""
    from fastapi import Depends, FastAPI, Header, HTTPException, Query

    app = FastAPI(title="normforge eval service", version="1")

    def rater_from_token(authorization: str = Header(default="")) -> str:
        if not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        rater = rater_tokens.get(token)
        if rater is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return rater

    def _http(exc: Exception) -> HTTPException:
        if isinstance(exc, DuplicateSubmissionError):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, (PayloadKindError, BoundsError, PreconditionError)):
            return HTTPException(status_code=400, detail=str(exc))
        if isinstance(exc, ServiceError):
            return HTTPException(status_code=404, detail=str(exc))
        return HTTPException(status_code=500, detail=str(exc))

    def _owned_session(session_id: str, rater: str) -> Session:
        try:
            session = service._session(session_id)
        except ServiceError as exc:
            raise _http(exc) from exc
        if session.spec.rater_id != rater:
            raise HTTPException(status_code=403, detail="session belongs to another rater")
        return session

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody, rater: str = Depends(rater_from_token)):
        spec = SessionSpec(
            task_kind=body.task_kind,
            rater_id=rater,
            language=body.language,
            seed=body.seed,
            sample_size=body.sample_size,
            categories=tuple(body.categories),
        )
        try:
            session = service.create_session(spec)
        except (ServiceError, PreconditionError, BoundsError) as exc:
            raise _http(exc) from exc
        return {"session_id": session.session_id, "size": len(session.queue)}

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str, rater: str = Depends(rater_from_token)):
        session = _owned_session(session_id, rater)
        item = service.next_item(session.session_id)
        if item is None:
            return {"done": True, "item": None, "served": len(session.served),
                    "total": len(session.queue)}
        return {"done": False, "item": item, "served": len(session.served),
                "total": len(session.queue)}

    @app.post("/sessions/{session_id}/ratings")
    def submit_rating(
        session_id: str, body: RatingBody, rater: str = Depends(rater_from_token)
    ):
        _owned_session(session_id, rater)
        try:
            return service.submit_rating(session_id, body.item_id, body.payload)
        except (ServiceError, PreconditionError, BoundsError) as exc:
            raise _http(exc) from exc

    @app.get("/exports")
    def exports(
        session_id: list[str] = Query(default=[]),
        rater: str = Depends(rater_from_token),
    ):
        try:
            return service.export_results(tuple(session_id))
        except ServiceError as exc:
            raise _http(exc) from exc

    if static_dir is not None and Path(static_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app
