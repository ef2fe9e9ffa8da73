from __future__ import annotations

from pathlib import Path

import pytest

from normforge.gateway import CompletionCache, Gateway
from normforge.langs import EN, NormCategory
from normforge.refine import ExemplarStore, make_exemplar
from normforge.scenario import InteractionType, build_pair
from normforge.scripted import ScriptedProvider
from normforge.taxonomy import Taxonomy, load_taxonomy

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def desk_taxonomy() -> Taxonomy:
    return load_taxonomy(FIXTURES / "taxonomy")


@pytest.fixture()
def record_gateway(tmp_path) -> Gateway:
    """Record-mode gateway backed by the deterministic scripted provider."""
    cache = CompletionCache(tmp_path / "cache.jsonl")
    return Gateway(mode="record", cache=cache, provider=ScriptedProvider())


def replay_gateway_for(cache_path: Path) -> Gateway:
    return Gateway(mode="replay", cache=CompletionCache(cache_path))


@pytest.fixture()
def seed_values() -> list[str]:
    lines = (FIXTURES / "seeds.txt").read_text(encoding="utf-8").splitlines()
    return [line.lstrip("- ").strip() for line in lines
            if line.strip() and not line.startswith("#")]


def build_exemplar_store(root: Path, taxonomy: Taxonomy) -> ExemplarStore:
    """One hand-built exemplar per EN category in the desk taxonomy."""
    store = ExemplarStore(root)
    for category in (NormCategory.APOLOGY, NormCategory.THANKS):
        subnorm = taxonomy.subnorms_for(EN, category)[0]
        pair = build_pair(
            subnorm,
            InteractionType.V2R,
            99,
            "Alex and Jordan are talking at the office about a sincere apology.",
            "Jordan is Alex's direct manager, and the mood is formal. "
            "Both of them feel the weight of the moment. "
            "The conversation is about to begin.",
        )
        store.add_version(
            make_exemplar(f"ex-{subnorm.id}", pair, curator="expert-1", category=category)
        )
    return store


@pytest.fixture()
def exemplar_store(tmp_path, desk_taxonomy) -> ExemplarStore:
    return build_exemplar_store(tmp_path / "exemplars", desk_taxonomy)
