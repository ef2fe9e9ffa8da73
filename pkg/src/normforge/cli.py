"""forge: command-line entry points for every pipeline stage and report."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import pipeline as pipeline_mod
from .agreement import krippendorff_alpha
from .errors import ForgeError
from .evaluation import (
    aggregate_dq,
    evaluate_dq,
    mine_strategies,
    render_strategy_table,
)
from .gateway import CompletionCache, Gateway, HttpProvider
from .langs import NormCategory, get_language
from .refine import ExemplarStore, RefineConfig, refine_until_converged
from .scenario import ScenarioSituationPair
from .scripted import ScriptedProvider
from .store import Corpus, compute_statistics, load_corpus, render_stats_tables
from .taxonomy import (
    Taxonomy,
    dump_language_yaml,
    generate_subnorms,
    load_taxonomy,
)


def _gateway(mode: str, cache_path: str | None, provider_kind: str) -> Gateway:
    cache = CompletionCache(cache_path) if cache_path else None
    provider = None
    if mode in ("live", "record"):
        provider = ScriptedProvider() if provider_kind == "scripted" else HttpProvider()
    return Gateway(mode=mode, cache=cache, provider=provider)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


mode_option = click.option(
    "--mode", type=click.Choice(["live", "record", "replay"]), default="replay",
    show_default=True, help="Gateway mode.",
)
cache_option = click.option("--cache", "cache_path", type=click.Path(), default=None,
                            help="Completion cache file.")
provider_option = click.option(
    "--provider", "provider_kind", type=click.Choice(["http", "scripted"]),
    default="http", show_default=True,
)


@click.group()
def main():
    """Social-norm dialogue forge."""


# -- taxonomy ---------------------------------------------------------------


@main.group()
def taxonomy():
    """Inspect and extend subnorm taxonomies."""


@taxonomy.command("validate")
@click.argument("path", type=click.Path(exists=True))
@click.option("--partial", is_flag=True, help="Allow desk-scale taxonomies.")
def taxonomy_validate(path: str, partial: bool):
    try:
        tax = load_taxonomy(path, complete=not partial)
    except ForgeError as exc:
        _fail(exc)
    click.echo(f"ok: {len(tax)} subnorms across {len(tax.languages())} language(s)")
    for warning in tax.warnings:
        click.echo(f"warning: {warning}")


@taxonomy.command("gen-subnorms")
@click.option("--category", required=True)
@click.option("--language", "language_code", required=True)
@click.option("--seed-file", required=True, type=click.Path(exists=True))
@click.option("--model", default="generator", show_default=True,
              envvar="FORGE_MODEL_TAG")
@click.option("--out", type=click.Path(), default=None, help="Write YAML here.")
@mode_option
@cache_option
@provider_option
def taxonomy_gen(category, language_code, seed_file, model, out, mode, cache_path, provider_kind):
    try:
        lang = get_language(language_code)
        cat = NormCategory.from_name(category)
        seeds = [
            line.strip().lstrip("- ")
            for line in Path(seed_file).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.strip().startswith("#")
        ]
        gateway = _gateway(mode, cache_path, provider_kind)
        subnorms = generate_subnorms(cat, lang, seeds, gateway, model)
    except ForgeError as exc:
        _fail(exc)
    text = dump_language_yaml(lang, subnorms)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {len(subnorms)} subnorms to {out}")
    else:
        click.echo(text)


# -- cache -------------------------------------------------------------------


@main.group()
def cache():
    """Inspect completion caches."""


@cache.command("ls")
@click.argument("path", type=click.Path(exists=True))
def cache_ls(path: str):
    store = CompletionCache(path)
    for record in store.records():
        req = record.request
        click.echo(f"{record.digest[:16]}  {req['template_id']:<26} {req['model_tag']}")
    click.echo(f"{len(store)} record(s)")


@cache.command("verify")
@click.argument("path", type=click.Path(exists=True))
def cache_verify(path: str):
    store = CompletionCache(path)
    issues = store.verify()
    if issues:
        for issue in issues:
            click.echo(f"bad: {issue}")
        sys.exit(1)
    click.echo(f"ok: {len(store)} record(s), digests verified")


# -- pipeline stages -----------------------------------------------------------


def _load_pairs(path: str) -> list[ScenarioSituationPair]:
    pairs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            pairs.append(ScenarioSituationPair.from_record(json.loads(line)))
    return pairs


@main.command("stage2")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--languages", default="EN", show_default=True, help="Comma-separated codes.")
@click.option("--categories", default="Apology,Thanks", show_default=True)
@click.option("--types", default="Adherence,Violation,V2R", show_default=True)
@click.option("--subnorms", "subnorms_per_category", default=2, show_default=True)
@click.option("--n", "scenarios_per_subnorm", default=1, show_default=True)
@click.option("--model", default="generator", show_default=True,
              envvar="FORGE_MODEL_TAG")
@click.option("--out", required=True, type=click.Path())
@mode_option
@cache_option
@provider_option
def stage2(taxonomy_path, languages, categories, types, subnorms_per_category,
           scenarios_per_subnorm, model, out, mode, cache_path, provider_kind):
    try:
        tax = load_taxonomy(taxonomy_path)
        config = pipeline_mod.PipelineConfig(
            languages=tuple(languages.split(",")),
            categories=tuple(categories.split(",")),
            interaction_types=tuple(types.split(",")),
            subnorms_per_category=subnorms_per_category,
            scenarios_per_subnorm=scenarios_per_subnorm,
            generate_model=model,
        )
        gateway = _gateway(mode, cache_path, provider_kind)
        subnorms = pipeline_mod.select_subnorms(tax, config)
        pairs = pipeline_mod.run_stage2(subnorms, config, gateway)
    except ForgeError as exc:
        _fail(exc)
    with Path(out).open("w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(json.dumps(pair.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
    click.echo(f"wrote {len(pairs)} pairs to {out}")


@main.command("stage3")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--exemplars", "exemplar_dir", required=True, type=click.Path(exists=True))
@click.option("--threshold", default=4.5, show_default=True)
@click.option("--max-rounds", default=3, show_default=True)
@click.option("--k", default=1, show_default=True)
@click.option("--model", default="judge", show_default=True,
              envvar="FORGE_MODEL_TAG")
@click.option("--out-traces", required=True, type=click.Path())
@click.option("--out-pairs", type=click.Path(), default=None,
              help="Optionally write refined pairs.")
@mode_option
@cache_option
@provider_option
def stage3(pairs_path, taxonomy_path, exemplar_dir, threshold, max_rounds, k, model,
           out_traces, out_pairs, mode, cache_path, provider_kind):
    try:
        tax = load_taxonomy(taxonomy_path)
        store = ExemplarStore.load_dir(exemplar_dir)
        gateway = _gateway(mode, cache_path, provider_kind)
        config = RefineConfig(threshold=threshold, max_rounds=max_rounds, k=k)
        traces = []
        for pair in _load_pairs(pairs_path):
            subnorm = tax.get(pair.subnorm_id)
            traces.append(
                refine_until_converged(
                    pair, store, config,
                    category=subnorm.category,
                    subnorm_statement=subnorm.statement,
                    gateway=gateway,
                    model_tag=model,
                )
            )
    except ForgeError as exc:
        _fail(exc)
    with Path(out_traces).open("w", encoding="utf-8") as handle:
        for trace in traces:
            handle.write(json.dumps(trace.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
    if out_pairs:
        with Path(out_pairs).open("w", encoding="utf-8") as handle:
            for trace in traces:
                handle.write(
                    json.dumps(trace.final_pair.to_record(), sort_keys=True, ensure_ascii=False)
                    + "\n"
                )
    rounds = sum(len(trace.rounds) for trace in traces)
    click.echo(f"refined {len(traces)} pairs in {rounds} total rounds -> {out_traces}")


@main.command("pipeline")
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--seed-file", type=click.Path(exists=True), default=None,
              help="Value statements for stage-1 generation when no taxonomy is given.")
@click.option("--exemplars", "exemplar_dir", required=True, type=click.Path(exists=True))
@click.option("--languages", default="EN", show_default=True)
@click.option("--categories", default="Apology,Thanks", show_default=True)
@click.option("--types", default="Adherence,Violation,V2R", show_default=True)
@click.option("--subnorms", "subnorms_per_category", default=2, show_default=True)
@click.option("--n", "scenarios_per_subnorm", default=1, show_default=True)
@click.option("--threshold", default=4.5, show_default=True)
@click.option("--max-rounds", default=3, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@mode_option
@cache_option
@provider_option
def pipeline_cmd(taxonomy_path, seed_file, exemplar_dir, languages, categories, types,
                 subnorms_per_category, scenarios_per_subnorm, threshold, max_rounds,
                 out_dir, mode, cache_path, provider_kind):
    """Run all four stages end to end."""
    try:
        config = pipeline_mod.PipelineConfig(
            languages=tuple(languages.split(",")),
            categories=tuple(categories.split(",")),
            interaction_types=tuple(types.split(",")),
            subnorms_per_category=subnorms_per_category,
            scenarios_per_subnorm=scenarios_per_subnorm,
            rq_threshold=threshold,
            max_rounds=max_rounds,
        )
        gateway = _gateway(mode, cache_path, provider_kind)
        tax = load_taxonomy(taxonomy_path) if taxonomy_path else None
        seeds: list[str] = []
        if seed_file:
            seeds = [
                line.strip().lstrip("- ")
                for line in Path(seed_file).read_text(encoding="utf-8").splitlines()
                if line.strip() and not line.strip().startswith("#")
            ]
        result = pipeline_mod.run_pipeline(
            config,
            gateway,
            out_dir,
            ExemplarStore.load_dir(exemplar_dir),
            taxonomy=tax,
            seed_values=seeds,
        )
    except ForgeError as exc:
        _fail(exc)
    click.echo(
        f"pipeline complete: {len(result.instances)} instances "
        f"({len(result.pairs)} pairs, {len(result.traces)} traces) -> {out_dir}"
    )


@main.command("stage4")
@click.option("--in", "pairs_path", required=True, type=click.Path(exists=True),
              help="Refined pairs JSONL.")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--out", "corpus_path", required=True, type=click.Path())
@click.option("--model", default="generator", show_default=True,
              envvar="FORGE_MODEL_TAG")
@click.option("--judge-model", default="judge", show_default=True)
@mode_option
@cache_option
@provider_option
def stage4(pairs_path, taxonomy_path, corpus_path, model, judge_model, mode,
           cache_path, provider_kind):
    from .dialogue import annotate_dialogue, generate_dialogue
    from .store import CorpusInstance, CorpusWriter

    try:
        tax = load_taxonomy(taxonomy_path)
        gateway = _gateway(mode, cache_path, provider_kind)
        writer = CorpusWriter(corpus_path, known_subnorm_ids=tax.ids())
        count = 0
        for pair in _load_pairs(pairs_path):
            subnorm = tax.get(pair.subnorm_id)
            turns = generate_dialogue(pair, subnorm, gateway, model)
            instance_id = f"i-{pair.id}"
            annotated = annotate_dialogue(
                turns, subnorm, pair_id=pair.id, instance_id=instance_id,
                gateway=gateway, model_tag=judge_model,
            )
            writer.append_instance(
                CorpusInstance(
                    id=instance_id,
                    language=pair.language,
                    category=subnorm.category,
                    subnorm_id=subnorm.id,
                    interaction_type=pair.interaction_type,
                    pair=pair,
                    dialogue=annotated,
                )
            )
            count += 1
    except ForgeError as exc:
        _fail(exc)
    click.echo(f"wrote {count} instances to {corpus_path}")


# -- reports ---------------------------------------------------------------------


@main.command("stats")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def stats_cmd(corpus_path: str, as_json: bool):
    try:
        corpus, rejects = load_corpus(corpus_path)
        stats = compute_statistics(corpus)
    except ForgeError as exc:
        _fail(exc)
    if as_json:
        click.echo(json.dumps(stats.to_record(), sort_keys=True, ensure_ascii=False, indent=2))
    else:
        click.echo(render_stats_tables(stats), nl=False)
    for reject in rejects:
        click.echo(f"reject line {reject.line_no}: {reject.reason}", err=True)


@main.group("eval")
def eval_group():
    """Evaluation reports."""


@eval_group.command("dq")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(exists=True))
@click.option("--model", default="judge", show_default=True,
              envvar="FORGE_MODEL_TAG")
@mode_option
@cache_option
@provider_option
def eval_dq(corpus_path, taxonomy_path, model, mode, cache_path, provider_kind):
    try:
        corpus, _ = load_corpus(corpus_path)
        tax = load_taxonomy(taxonomy_path)
        gateway = _gateway(mode, cache_path, provider_kind)
        rows = []
        for instance in corpus.instances:
            scores = evaluate_dq(instance, tax.get(instance.subnorm_id).statement,
                                 gateway, model)
            rows.append((instance.language.code, instance.interaction_type.value, scores))
    except ForgeError as exc:
        _fail(exc)
    table = aggregate_dq(rows)
    for (language, itype), criteria in table.items():
        for criterion, value in criteria.items():
            click.echo(f"{language}  {itype:<12} {criterion:<26} {value:.3f}")


@eval_group.command("rq")
@click.option("--traces", "traces_path", required=True, type=click.Path(exists=True))
def eval_rq(traces_path):
    """Summarize final-round refinement scores per language."""
    from collections import defaultdict

    sums: dict[str, list[float]] = defaultdict(lambda: [0.0, 0.0, 0.0, 0.0])
    for line in Path(traces_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        final = record["rounds"][-1]
        language = final["output"]["language"]
        score = final["score"]
        bucket = sums[language]
        bucket[0] += score["norm_alignment"]
        bucket[1] += score["language_quality"]
        bucket[2] += score["semantic_fidelity"]
        bucket[3] += 1
    for language in sorted(sums):
        norm, quality, fidelity, count = sums[language]
        click.echo(
            f"{language}  n={int(count)}  norm_alignment={norm / count:.3f}  "
            f"language_quality={quality / count:.3f}  semantic_fidelity={fidelity / count:.3f}"
        )


@eval_group.command("strategies")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
def eval_strategies(corpus_path):
    try:
        corpus, _ = load_corpus(corpus_path)
        report = mine_strategies(corpus.instances)
    except ForgeError as exc:
        _fail(exc)
    click.echo(render_strategy_table(report), nl=False)


@eval_group.command("agreement")
@click.argument("matrix_file", type=click.Path(exists=True))
@click.option("--level", type=click.Choice(["nominal", "ordinal", "interval"]),
              default="ordinal", show_default=True)
def eval_agreement(matrix_file, level):
    """Alpha over a {rater: {item: value}} matrix (or per-criterion matrices)."""
    data = json.loads(Path(matrix_file).read_text(encoding="utf-8"))
    try:
        if data and all(isinstance(v, dict) and v and
                        all(isinstance(w, dict) for w in v.values())
                        for v in data.values()):
            for criterion in sorted(data):
                alpha = krippendorff_alpha(data[criterion], level=level)
                click.echo(f"{criterion:<26} alpha={alpha:.4f}")
        else:
            click.echo(f"alpha={krippendorff_alpha(data, level=level):.4f}")
    except ForgeError as exc:
        _fail(exc)


@eval_group.command("gq-ab")
@click.option("--comparisons", "comparisons_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--model", default="judge", show_default=True,
              envvar="FORGE_MODEL_TAG")
@mode_option
@cache_option
@provider_option
def eval_gq_ab(comparisons_path, seed, model, mode, cache_path, provider_kind):
    import random as random_mod

    from .evaluation import SystemResponse, ab_judge, aggregate_preferences

    try:
        gateway = _gateway(mode, cache_path, provider_kind)
        rng = random_mod.Random(seed)
        records = []
        for line in Path(comparisons_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            item = json.loads(line)
            left, right = item["responses"]
            records.append(
                ab_judge(
                    str(item["context_id"]), item["context"],
                    SystemResponse(left["system"], left["text"]),
                    SystemResponse(right["system"], right["text"]),
                    rng, gateway, model,
                )
            )
        rates = aggregate_preferences(records)
    except ForgeError as exc:
        _fail(exc)
    for system, rate in rates.items():
        click.echo(f"{system:<20} {rate:.1f}%")


# -- service -----------------------------------------------------------------------


@main.command("serve")
@click.option("--addr", default="127.0.0.1:8470", show_default=True)
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--comparisons", "comparisons_path", type=click.Path(exists=True), default=None)
@click.option("--exemplars", "exemplar_dir", type=click.Path(), default=None)
@click.option("--tokens", required=True,
              help="Comma-separated token:rater pairs, e.g. tok1:alice,tok2:bob.")
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Console assets to serve at /.")
def serve(addr, store_dir, corpus_path, comparisons_path, exemplar_dir, tokens, static_dir):
    import uvicorn

    from .service import EvalService, create_app

    corpus = None
    if corpus_path:
        corpus, _ = load_corpus(corpus_path)
    comparisons = None
    if comparisons_path:
        comparisons = [
            json.loads(line)
            for line in Path(comparisons_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    exemplar_store = ExemplarStore.load_dir(exemplar_dir) if exemplar_dir else None
    rater_tokens = dict(pair.split(":", 1) for pair in tokens.split(","))
    service = EvalService(
        store_dir,
        corpus=corpus,
        comparisons=comparisons,
        exemplar_store=exemplar_store,
    )
    app = create_app(service, rater_tokens, static_dir=static_dir)
    host, _, port = addr.partition(":")
    uvicorn.run(app, host=host, port=int(port or 8470), log_level="warning")


@main.command("exemplars")
@click.option("--dir", "exemplar_dir", required=True, type=click.Path(exists=True))
@click.option("--language", default="", help="Filter by language code.")
@click.option("--category", default="", help="Filter by category name.")
def exemplars_cmd(exemplar_dir, language, category):
    """List latest exemplar versions."""
    store = ExemplarStore.load_dir(exemplar_dir)
    for exemplar in store.all_exemplars():
        if language and exemplar.pair.language.code != language:
            continue
        if category and exemplar.category.value != category:
            continue
        click.echo(
            f"{exemplar.id}  v{exemplar.version}  {exemplar.pair.language.code}/"
            f"{exemplar.category.value}  curator={exemplar.curator}"
        )


if __name__ == "__main__":
    main()
