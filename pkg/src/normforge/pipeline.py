"""End-to-end four-stage pipeline.

Stage 1 generates subnorm sets (anchor language from seed value statements,
other languages aligned from the anchor), stage 2 expands each subnorm into
scenario-situation pairs per interaction type, stage 3 refines each pair
against curated exemplars until the quality gate passes, and stage 4 expands
refined pairs into annotated dialogues and appends them to the corpus store.

All iteration orders are sorted and all record serialization uses sorted
keys, so in replay mode output files are byte-identical across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .dialogue import annotate_dialogue, generate_dialogue
from .errors import PreconditionError
from .gateway import Gateway
from .langs import Language, NormCategory, get_language
from .refine import (
    ExemplarStore,
    RefineConfig,
    RefinementTrace,
    refine_until_converged,
)
from .scenario import (
    InteractionType,
    ScenarioSituationPair,
    build_pair,
    elaborate_situation,
    generate_scenarios,
)
from .store import (
    Corpus,
    CorpusInstance,
    CorpusWriter,
    compute_statistics,
    render_stats_tables,
)
from .taxonomy import (
    SUBNORMS_PER_CATEGORY,
    Subnorm,
    Taxonomy,
    align_subnorm,
    generate_subnorms,
)


@dataclass(frozen=True)
class PipelineConfig:
    languages: tuple[str, ...] = ("EN",)
    categories: tuple[str, ...] = ("Apology", "Thanks")
    subnorms_per_category: int = 2
    scenarios_per_subnorm: int = 1
    interaction_types: tuple[str, ...] = ("Adherence", "Violation", "V2R")
    anchor_language: str = ""
    generate_model: str = "generator"
    judge_model: str = "judge"
    rq_threshold: float = 4.5
    max_rounds: int = 3
    retrieval_k: int = 1
    attempts: int = 3

    def resolved_languages(self) -> tuple[Language, ...]:
        return tuple(get_language(code) for code in self.languages)

    def resolved_categories(self) -> tuple[NormCategory, ...]:
        return tuple(NormCategory.from_name(name) for name in self.categories)

    def resolved_types(self) -> tuple[InteractionType, ...]:
        return tuple(InteractionType.from_name(name) for name in self.interaction_types)

    def anchor(self) -> Language:
        return get_language(self.anchor_language or self.languages[0])

    def refine_config(self) -> RefineConfig:
        return RefineConfig(
            threshold=self.rq_threshold,
            max_rounds=self.max_rounds,
            k=self.retrieval_k,
            attempts=self.attempts,
        )


@dataclass
class PipelineResult:
    taxonomy: Taxonomy
    pairs: list[ScenarioSituationPair] = field(default_factory=list)
    traces: list[RefinementTrace] = field(default_factory=list)
    instances: list[CorpusInstance] = field(default_factory=list)
    output_files: dict[str, Path] = field(default_factory=dict)


def build_taxonomy(
    config: PipelineConfig,
    seed_values: Sequence[str],
    gateway: Gateway,
) -> Taxonomy:
    """Stage 1: anchor-language generation plus cross-language alignment."""
    anchor = config.anchor()
    languages = config.resolved_languages()
    if anchor not in languages:
        raise PreconditionError(
            f"anchor language {anchor.code} is not among pipeline languages"
        )
    subnorms: list[Subnorm] = []
    for category in sorted(config.resolved_categories(), key=lambda c: c.value):
        anchor_set = generate_subnorms(
            category,
            anchor,
            seed_values,
            gateway,
            config.generate_model,
            count=SUBNORMS_PER_CATEGORY,
            attempts=config.attempts,
        )[: config.subnorms_per_category]
        subnorms.extend(anchor_set)
        for language in languages:
            if language == anchor:
                continue
            for source in anchor_set:
                subnorms.append(
                    align_subnorm(
                        source, language, gateway, config.generate_model, config.attempts
                    )
                )
    return Taxonomy(subnorms)


def select_subnorms(taxonomy: Taxonomy, config: PipelineConfig) -> list[Subnorm]:
    """Deterministic desk-scale slice of the taxonomy per the config."""
    selected: list[Subnorm] = []
    for language in config.resolved_languages():
        for category in sorted(config.resolved_categories(), key=lambda c: c.value):
            subs = sorted(
                taxonomy.subnorms_for(language, category), key=lambda s: s.id
            )
            selected.extend(subs[: config.subnorms_per_category])
    return selected


def run_stage2(
    subnorms: Sequence[Subnorm],
    config: PipelineConfig,
    gateway: Gateway,
) -> list[ScenarioSituationPair]:
    pairs: list[ScenarioSituationPair] = []
    for subnorm in subnorms:
        for itype in config.resolved_types():
            scenarios = generate_scenarios(
                subnorm,
                itype,
                config.scenarios_per_subnorm,
                gateway,
                config.generate_model,
                config.attempts,
            )
            for index, drafted in enumerate(scenarios, start=1):
                situation = elaborate_situation(
                    drafted.text,
                    subnorm,
                    itype,
                    gateway,
                    config.generate_model,
                    config.attempts,
                    seed_tag=f"situation:{subnorm.id}:{itype.slug}:{index:02d}",
                )
                pairs.append(build_pair(subnorm, itype, index, drafted.text, situation))
    return pairs


def run_stage3(
    pairs: Sequence[ScenarioSituationPair],
    taxonomy: Taxonomy,
    store: ExemplarStore,
    config: PipelineConfig,
    gateway: Gateway,
) -> list[RefinementTrace]:
    traces: list[RefinementTrace] = []
    for pair in pairs:
        subnorm = taxonomy.get(pair.subnorm_id)
        trace = refine_until_converged(
            pair,
            store,
            config.refine_config(),
            category=subnorm.category,
            subnorm_statement=subnorm.statement,
            gateway=gateway,
            model_tag=config.judge_model,
        )
        traces.append(trace)
    return traces


def run_stage4(
    traces: Sequence[RefinementTrace],
    taxonomy: Taxonomy,
    config: PipelineConfig,
    gateway: Gateway,
    writer: CorpusWriter,
) -> list[CorpusInstance]:
    instances: list[CorpusInstance] = []
    for trace in traces:
        pair = trace.final_pair
        subnorm = taxonomy.get(pair.subnorm_id)
        turns = generate_dialogue(
            pair, subnorm, gateway, config.generate_model, config.attempts
        )
        instance_id = f"i-{pair.id}"
        annotated = annotate_dialogue(
            turns,
            subnorm,
            pair_id=pair.id,
            instance_id=instance_id,
            gateway=gateway,
            model_tag=config.judge_model,
            attempts=config.attempts,
        )
        instance = CorpusInstance(
            id=instance_id,
            language=pair.language,
            category=subnorm.category,
            subnorm_id=subnorm.id,
            interaction_type=pair.interaction_type,
            pair=pair,
            dialogue=annotated,
            refinement_trace_ref=trace.pair_id,
        )
        writer.append_instance(instance)
        instances.append(instance)
    return instances


def _write_jsonl(path: Path, records: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def run_pipeline(
    config: PipelineConfig,
    gateway: Gateway,
    out_dir: str | Path,
    exemplar_store: ExemplarStore,
    taxonomy: Taxonomy | None = None,
    seed_values: Sequence[str] = (),
) -> PipelineResult:
    """Run all four stages and write the corpus plus reports under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if taxonomy is None:
        taxonomy = build_taxonomy(config, seed_values, gateway)
    result = PipelineResult(taxonomy=taxonomy)

    subnorms = select_subnorms(taxonomy, config)
    if not subnorms:
        raise PreconditionError("no subnorms selected; check languages/categories")

    result.pairs = run_stage2(subnorms, config, gateway)
    pairs_path = out / "pairs.jsonl"
    _write_jsonl(pairs_path, [pair.to_record() for pair in result.pairs])
    result.output_files["pairs"] = pairs_path

    result.traces = run_stage3(result.pairs, taxonomy, exemplar_store, config, gateway)
    traces_path = out / "traces.jsonl"
    _write_jsonl(traces_path, [trace.to_record() for trace in result.traces])
    result.output_files["traces"] = traces_path

    corpus_path = out / "corpus.jsonl"
    if corpus_path.exists():
        corpus_path.unlink()
    writer = CorpusWriter(corpus_path, known_subnorm_ids=taxonomy.ids())
    result.instances = run_stage4(result.traces, taxonomy, config, gateway, writer)
    result.output_files["corpus"] = corpus_path

    stats = compute_statistics(Corpus(instances=list(result.instances)))
    stats_json = out / "stats.json"
    stats_json.write_text(
        json.dumps(stats.to_record(), sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    stats_txt = out / "stats.txt"
    stats_txt.write_text(render_stats_tables(stats), encoding="utf-8")
    result.output_files["stats_json"] = stats_json
    result.output_files["stats_txt"] = stats_txt
    return result
