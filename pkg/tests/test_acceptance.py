"""Acceptance suite: one test per exit criterion, offline, tolerance-pinned.

Every test prints a [PASS]/[FAIL] line (visible with `pytest -s`). All
criteria run against replayed fixtures or scripted mock providers; no test
touches the network.
"""

from __future__ import annotations

import math
import random
import time
from contextlib import contextmanager

import pytest

from normforge.agreement import krippendorff_alpha, pearson
from normforge.dialogue import (
    NormLabel,
    parse_annotation_lines,
    parse_dialogue_completion,
    parse_turns,
    validate_annotation,
)
from normforge.errors import BoundsError, CountError, LabelError, ParseError
from normforge.evaluation import (
    SystemResponse,
    ab_judge,
    aggregate_preferences,
    mine_strategies,
    render_strategy_table,
)
from normforge.gateway import CompletionCache, Gateway
from normforge.langs import EN, NormCategory
from normforge.pipeline import PipelineConfig, run_pipeline
from normforge.refine import (
    RefineConfig,
    RQScore,
    featurize,
    refine_until_converged,
    retrieve_exemplars,
)
from normforge.scenario import mark_refined
from normforge.scripted import ScriptedProvider
from normforge.store import Corpus, compute_statistics, load_corpus, merge_statistics

from .conftest import build_exemplar_store
from .helpers import make_dialogue, make_instance, make_pair
from .test_evaluation import _strategy_fixture
from .test_refine import _brute_force_oracle, _random_vector, _store_with_vectors


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


# -- 1. pipeline shape, desk scale ---------------------------------------------------


def test_pipeline_shape_desk_scale(tmp_path, desk_taxonomy, seed_values):
    with criterion("pipeline shape: 1 lang x 2 cats x 2 subnorms x 3 types -> 12 "
                   "instances, 5-15 turns, full annotations, < 30 s offline"):
        cache_path = tmp_path / "cache.jsonl"
        config = PipelineConfig()  # EN, Apology+Thanks, 2 subnorms, 3 types
        exemplars = build_exemplar_store(tmp_path / "exemplars", desk_taxonomy)

        # build the replay fixture, stage 1 included, with the scripted provider
        recorder = Gateway(mode="record", cache=CompletionCache(cache_path),
                           provider=ScriptedProvider())
        run_pipeline(config, recorder, tmp_path / "seed-run", exemplars,
                     seed_values=seed_values)

        replayer = Gateway(mode="replay", cache=CompletionCache(cache_path))
        started = time.perf_counter()
        result = run_pipeline(config, replayer, tmp_path / "replay-run", exemplars,
                              seed_values=seed_values)
        elapsed = time.perf_counter() - started

        assert len(result.instances) == 12
        assert replayer.network_calls == 0
        for instance in result.instances:
            turns = instance.dialogue.turns
            assert 5 <= len(turns) <= 15
            assert len(instance.dialogue.annotations) == len(turns)
            assert all(a.justification for a in instance.dialogue.annotations)
        types = {(i.language.code, i.interaction_type.value) for i in result.instances}
        assert types == {("EN", "Adherence"), ("EN", "Violation"), ("EN", "V2R")}
        assert elapsed < 30.0


# -- 2. refinement loop ----------------------------------------------------------------


def _run_scripted_loop(pair, store, means, threshold=4.5, max_rounds=3):
    calls = {"n": 0}

    def refiner(current, exemplars):
        return mark_refined(current, current.scenario,
                            current.situation + f" Round {current.round + 1} polish.")

    def scorer(original, refined):
        mean = means[calls["n"]]
        calls["n"] += 1
        return RQScore(5, 5, 5, mean=mean)

    return refine_until_converged(
        pair, store, RefineConfig(threshold=threshold, max_rounds=max_rounds),
        category=NormCategory.APOLOGY, refiner=refiner, scorer=scorer,
    )


def test_refinement_loop_stop_behavior(tmp_path, desk_taxonomy):
    with criterion("refinement loop: scripted stop behavior and 1.0-1.5 average rounds"):
        store = build_exemplar_store(tmp_path / "exemplars", desk_taxonomy)
        pair = make_pair(provenance="naive", round_no=0)

        trace = _run_scripted_loop(pair, store, [4.9])
        assert len(trace.rounds) == 1 and trace.stop_reason == "threshold_met"

        trace = _run_scripted_loop(pair, store, [3.0, 3.5, 4.8], max_rounds=5)
        assert len(trace.rounds) == 3 and trace.stop_reason == "threshold_met"

        trace = _run_scripted_loop(pair, store, [3.0, 3.0, 3.0], max_rounds=3)
        assert len(trace.rounds) == 3 and trace.stop_reason == "max_rounds"

        # score streams shaped like the reported refined means (~4.8-5.0 once
        # a rewrite lands): most pairs pass in round one, a tail needs two
        rng = random.Random(2024)
        total_rounds = 0
        n_pairs = 100
        for _ in range(n_pairs):
            if rng.random() < 0.8:
                means = [rng.uniform(4.6, 5.0)]
            else:
                means = [rng.uniform(3.2, 4.4), rng.uniform(4.6, 5.0)]
            trace = _run_scripted_loop(pair, store, means, max_rounds=3)
            assert trace.stop_reason == "threshold_met"
            total_rounds += len(trace.rounds)
        average_rounds = total_rounds / n_pairs
        assert 1.0 <= average_rounds <= 1.5


# -- 3. retrieval oracle -----------------------------------------------------------------


def test_retrieval_matches_brute_force_oracle(tmp_path):
    with criterion("retrieval: ordering equals brute-force similarity oracle on "
                   "10 random stores (<= 20 exemplars)"):
        for trial in range(10):
            rng = random.Random(500 + trial)
            pair = make_pair()
            vectors = [_random_vector(rng) for _ in range(rng.randint(2, 20))]
            store = _store_with_vectors(tmp_path / f"s{trial}", vectors, pair)
            exemplars = store.exemplars(EN, NormCategory.APOLOGY)
            ranked = retrieve_exemplars(pair, NormCategory.APOLOGY, store,
                                        k=len(exemplars))
            oracle = _brute_force_oracle(featurize(pair, NormCategory.APOLOGY),
                                         exemplars)
            assert [e.id for e, _ in ranked] == oracle


# -- 4. statistics -----------------------------------------------------------------------


def _neutral_specs(n):
    base = [
        ("Do you have a minute?", NormLabel.NOT_RELEVANT, "QUE"),
        ("Sure, what's up?", NormLabel.NOT_RELEVANT, "N/A"),
        ("Thanks for asking.", NormLabel.ADHERENCE, "THX"),
        ("Of course.", NormLabel.ADHERENCE, "ACK"),
        ("Let's begin.", NormLabel.NOT_RELEVANT, "N/A"),
    ]
    return base + [(f"More {i}.", NormLabel.NOT_RELEVANT, "N/A")
                   for i in range(n - len(base))]


def test_statistics_match_hand_arithmetic():
    with criterion("statistics: hand-built 12-dialogue corpus matches hand "
                   "arithmetic; merged stats equal weighted merge"):
        # 12 dialogues: turn counts 5..15,5 by hand; sum = 125, mean = 125/12
        turn_counts = [5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 15]
        hand_total = 5 + 6 + 7 + 8 + 9 + 10 + 11 + 12 + 13 + 14 + 15 + 15
        assert hand_total == 125
        instances = [
            make_instance(instance_id=f"i-{i:02d}", turn_specs=_neutral_specs(count))
            for i, count in enumerate(turn_counts)
        ]
        stats = compute_statistics(Corpus(instances=instances))
        row = stats.row("EN", "Adherence")
        assert row.dialogues == 12
        assert row.scenarios == 12 and row.situations == 12
        assert abs(row.average_turns - 125.0 / 12.0) < 1e-9
        assert abs(stats.overall_average_turns - 125.0 / 12.0) < 1e-9

        part_a = Corpus(instances=instances[:5])   # turns 5..9, sum 35
        part_b = Corpus(instances=instances[5:])   # turns 10..15,15, sum 90
        merged = merge_statistics(
            [compute_statistics(part_a), compute_statistics(part_b)]
        )
        assert merged.to_record() == stats.to_record()
        weighted = (35 / 5 * 5 + 90 / 7 * 7) / 12  # weighted merge by hand
        assert abs(merged.overall_average_turns - weighted) < 1e-9


# -- 5. metrics --------------------------------------------------------------------------


def test_metrics_against_oracles():
    with criterion("metrics: pearson vs covariance oracle (100 pairs, 1e-9) and "
                   "forced cases; alpha perfect=1.0 and hand oracle to 1e-9"):
        rng = random.Random(77)
        for _ in range(100):
            n = rng.randint(3, 40)
            x = [rng.uniform(-5, 5) for _ in range(n)]
            y = [rng.uniform(-5, 5) for _ in range(n)]
            mean_x = math.fsum(x) / n
            mean_y = math.fsum(y) / n
            cov = math.fsum((a - mean_x) * (b - mean_y) for a, b in zip(x, y)) / n
            sdx = math.sqrt(math.fsum((a - mean_x) ** 2 for a in x) / n)
            sdy = math.sqrt(math.fsum((b - mean_y) ** 2 for b in y) / n)
            assert abs(pearson(x, y) - cov / (sdx * sdy)) < 1e-9

        base = [1.0, 2.0, 3.0, 4.0, 5.0]
        assert pearson(base, base) == pytest.approx(1.0)
        assert pearson(base, [-v + 9 for v in base]) == pytest.approx(-1.0)

        perfect = [[1, 2, 3, 4], [1, 2, 3, 4], [1, 2, 3, 4]]
        assert krippendorff_alpha(perfect, level="ordinal") == pytest.approx(1.0)

        # 4 raters x 5 items, one missing cell; coincidence matrix by hand:
        # interval 31/37, ordinal 16/19, nominal 13/19
        fixture = [
            [1, 2, 3, 3, 2],
            [1, 2, 3, 3, 2],
            [None, 3, 3, 3, 2],
            [1, 2, 3, 3, 1],
        ]
        assert abs(krippendorff_alpha(fixture, level="interval") - 31 / 37) < 1e-9
        assert abs(krippendorff_alpha(fixture, level="ordinal") - 16 / 19) < 1e-9
        assert abs(krippendorff_alpha(fixture, level="nominal") - 13 / 19) < 1e-9


# -- 6. A/B integrity --------------------------------------------------------------------


def _ab_items(n=1000):
    """Content-deterministic comparison set: 'ours' has the longer text except
    on every third item."""
    items = []
    for i in range(n):
        ours = f"a longer, carefully norm-aware continuation {i:04d}"
        base = f"terse reply {i:04d}"
        if i % 3 == 0:
            ours, base = "short {0}".format(i), f"much much longer baseline answer {i:04d}"
        items.append((f"ctx-{i:04d}", SystemResponse("ours", ours),
                      SystemResponse("baseline", base)))
    return items


def _judge_all(items, seed, tmp_path, name, flip=False):
    gateway = Gateway(mode="record", cache=CompletionCache(tmp_path / name),
                      provider=ScriptedProvider())  # longer response wins
    rng = random.Random(seed)
    records = []
    for context_id, ours, base in items:
        first, second = (base, ours) if flip else (ours, base)
        records.append(
            ab_judge(context_id, f"context for {context_id}", first, second,
                     rng, gateway, "judge")
        )
    return records


def test_ab_blinding_integrity(tmp_path):
    with criterion("A/B integrity: de-blinded aggregate equals the oracle count "
                   "from the seed's assignment sequence; label permutation "
                   "leaves rates unchanged"):
        items = _ab_items(1000)
        records = _judge_all(items, seed=31337, tmp_path=tmp_path, name="ab1.jsonl")

        # oracle: replicate the assignment sequence, then apply the judge's
        # content rule (longer text wins) to predict choice and winner
        rng = random.Random(31337)
        expected_choices = []
        expected_ours_wins = 0
        for context_id, ours, base in items:
            mapping = ({"A": "ours", "B": "baseline"} if rng.random() < 0.5
                       else {"A": "baseline", "B": "ours"})
            text = {"ours": ours.text, "baseline": base.text}
            choice = "A" if len(text[mapping["A"]]) >= len(text[mapping["B"]]) else "B"
            expected_choices.append(choice)
            if mapping[choice] == "ours":
                expected_ours_wins += 1

        assert [r.choice for r in records] == expected_choices
        rates = aggregate_preferences(records)
        assert rates["ours"] == pytest.approx(100.0 * expected_ours_wins / 1000)
        # content rule says: ours wins except on multiples of 3 -> 666 of 1000
        assert expected_ours_wins == 666

        # permuting side labels: different seed and flipped argument order
        for seed, flip, name in ((909, False, "ab2.jsonl"), (31337, True, "ab3.jsonl")):
            permuted = _judge_all(items, seed=seed, tmp_path=tmp_path, name=name,
                                  flip=flip)
            assert aggregate_preferences(permuted) == rates


# -- 7. strategy mining -------------------------------------------------------------------


def test_strategy_mining_hand_counts():
    with criterion("strategy mining: exact hand counts on the 10-dialogue V2R "
                   "fixture; table shape 5 strategies x languages + top sequence"):
        report = mine_strategies(_strategy_fixture())
        en = report.per_language["EN"]
        assert en.usage_rates == {"A": 90.0, "X": 70.0, "E": 20.0, "C": 40.0, "H": 10.0}
        assert en.top_sequence == ("A", "X", "C")
        assert en.top_sequence_rate == 30.0
        assert en.multi_step_rate == 90.0

        table = render_strategy_table(report)
        strategy_rows = [line for line in table.splitlines()
                         if any(f"({tok})" in line for tok in "AXECH")]
        assert len(strategy_rows) == 5
        assert "Top sequence" in table and "Frequency (%)" in table
        assert "A -> X -> C" in table


# -- 8. format strictness -------------------------------------------------------------------


def test_format_strictness_adversarial_suite():
    with criterion("format strictness: 20-case adversarial suite rejected with "
                   "the specified error classes"):
        # turn parser
        parser_cases = [
            ("A: hi\nno colon here\n[END]", ParseError),
            ("[END]", ParseError),
            ("A: \nB: hey\n[END]", ParseError),
            (": no speaker\nB: hey\n[END]", ParseError),
            ("A: one\nB: two\nshout\nB: four\n[END]", ParseError),
        ]
        for text, error in parser_cases:
            with pytest.raises(error):
                parse_turns(text)
        # the no-prefix case cites its line number
        with pytest.raises(ParseError) as err:
            parse_turns("A: one\nB: two\nshout\n[END]")
        assert err.value.line_no == 3

        # bounded dialogue completions
        def turns(n):
            return "\n".join(f"{'AB'[i % 2]}: line {i}" for i in range(n)) + "\n[END]"

        for n in (1, 4, 16, 20):
            with pytest.raises(BoundsError):
                parse_dialogue_completion(turns(n))

        # annotation parser
        annotation_cases = [
            ("Alex | Adherence | APOLOGY | text.", 1, LabelError),
            ("Alex | Adherence | NA | text.", 1, LabelError),
            ("Alex | Adherence | apo | text.", 1, LabelError),
            ("Alex | Compliance | APO | text.", 1, LabelError),
            ("Alex | adherence | APO | text.", 1, LabelError),
            ("Alex | Adherence | APO", 1, ParseError),
            ("Alex | Adherence | APO | ", 1, ParseError),
            ("Alex | Adherence | APO | ok.", 2, CountError),
            ("Alex | Adherence | APO | ok.\nB | Adherence | ACK | ok.", 1, CountError),
            ("", 1, CountError),
        ]
        for text, turn_count, error in annotation_cases:
            with pytest.raises(error):
                parse_annotation_lines(text, turn_count)

        # total validators report the remaining classes
        specs16 = [(f"line {i}", NormLabel.NOT_RELEVANT, "N/A") for i in range(16)]
        report = validate_annotation(make_dialogue("i-x", "p-x", specs16))
        assert any("turn count 16" in v for v in report.violations)

        from normforge.dialogue import TurnAnnotation
        from .helpers import NEUTRAL_SPECS

        dangling = make_dialogue("i-y", "p-y", NEUTRAL_SPECS)
        dangling.annotations[-1] = TurnAnnotation(
            turn_index=9, norm_label=NormLabel.NOT_RELEVANT, reaction="N/A",
            justification="dangling",
        )
        report = validate_annotation(dangling)
        assert any("references turn 9" in v for v in report.violations)
        # 5 + 1 + 4 + 10 + 2 = 22 rejected fixtures >= the 20-case bar


# -- 9. determinism ---------------------------------------------------------------------------


def test_replay_determinism_byte_identical(tmp_path, desk_taxonomy, seed_values):
    with criterion("determinism: two replay runs produce byte-identical corpus "
                   "and report files"):
        cache_path = tmp_path / "cache.jsonl"
        config = PipelineConfig()
        exemplars = build_exemplar_store(tmp_path / "exemplars", desk_taxonomy)
        recorder = Gateway(mode="record", cache=CompletionCache(cache_path),
                           provider=ScriptedProvider())
        run_pipeline(config, recorder, tmp_path / "seed-run", exemplars,
                     seed_values=seed_values)

        outputs = []
        for run in ("one", "two"):
            replayer = Gateway(mode="replay", cache=CompletionCache(cache_path))
            result = run_pipeline(config, replayer, tmp_path / run, exemplars,
                                  seed_values=seed_values)
            outputs.append(result.output_files)
        for key in ("pairs", "traces", "corpus", "stats_json", "stats_txt"):
            first = outputs[0][key].read_bytes()
            second = outputs[1][key].read_bytes()
            assert first == second, f"{key} differs between replay runs"

        corpus, rejects = load_corpus(outputs[0]["corpus"])
        assert len(corpus) == 12 and not rejects
