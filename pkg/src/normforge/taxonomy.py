"""Subnorm taxonomy: loading, validation, generation, and cross-language alignment.

Taxonomy files are human-editable YAML, one file per language, so cultural
experts can hand-edit entries between runs. Schema (see docs/formats.md):

    language: KR                # required; pilot languages may add
    language_name: Korean       # name/culture/script to self-register
    culture: Korean
    script: hangul
    categories:
      Apology:
        - id: kr-apology-01
          statement: ...
          context: ...
          verbal_evidence: [..., ...]

A complete taxonomy holds exactly 10 subnorms for each of the 12 categories
in every language; partial (desk-scale) taxonomies are allowed when loaded
with complete=False, but a listed category may never be empty.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from .errors import CountError, InvariantError, ParseError, PreconditionError
from .gateway import Gateway, complete_parsed, generation_request
from .langs import Language, NormCategory, get_language, register_language

SUBNORMS_PER_CATEGORY = 10


@dataclass(frozen=True)
class Subnorm:
    """One culturally grounded behavioral rule within a norm category."""

    id: str
    category: NormCategory
    language: Language
    statement: str
    application_context: str
    verbal_evidence: tuple[str, ...]

    def __post_init__(self):
        if not self.statement.strip():
            raise ParseError(f"subnorm {self.id}: empty statement")
        if not self.verbal_evidence:
            raise ParseError(f"subnorm {self.id}: empty verbal evidence")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "category": self.category.value,
            "language": self.language.code,
            "statement": self.statement,
            "context": self.application_context,
            "verbal_evidence": list(self.verbal_evidence),
        }

    def as_prompt_block(self) -> str:
        evidence = "; ".join(self.verbal_evidence)
        return (
            f"Subnorm: {self.statement}\n"
            f"Context: {self.application_context}\n"
            f"Verbal Evidence: {evidence}"
        )


class Taxonomy:
    """Immutable collection of subnorms with id/category/language indexes."""

    def __init__(self, subnorms: Iterable[Subnorm], warnings: Sequence[str] = ()):
        self.subnorms: tuple[Subnorm, ...] = tuple(subnorms)
        self.warnings: tuple[str, ...] = tuple(warnings)
        self._by_id: dict[str, Subnorm] = {}
        for sub in self.subnorms:
            if sub.id in self._by_id:
                raise ParseError(f"duplicate subnorm id: {sub.id}")
            self._by_id[sub.id] = sub

    def __len__(self) -> int:
        return len(self.subnorms)

    def get(self, subnorm_id: str) -> Subnorm:
        try:
            return self._by_id[subnorm_id]
        except KeyError:
            raise InvariantError(f"unknown subnorm id: {subnorm_id}") from None

    def __contains__(self, subnorm_id: str) -> bool:
        return subnorm_id in self._by_id

    def ids(self) -> frozenset[str]:
        return frozenset(self._by_id)

    def languages(self) -> tuple[Language, ...]:
        seen: list[Language] = []
        for sub in self.subnorms:
            if sub.language not in seen:
                seen.append(sub.language)
        return tuple(sorted(seen, key=lambda lang: lang.code))

    def subnorms_for(self, language: Language, category: NormCategory) -> tuple[Subnorm, ...]:
        return tuple(
            sub for sub in self.subnorms
            if sub.language == language and sub.category == category
        )

    def validate(self, complete: bool = True) -> None:
        """Check count invariants; raises InvariantError naming the violated count."""
        for language in self.languages():
            categories = NormCategory if complete else {
                sub.category for sub in self.subnorms if sub.language == language
            }
            for category in categories:
                found = len(self.subnorms_for(language, category))
                if complete and found != SUBNORMS_PER_CATEGORY:
                    raise InvariantError(
                        f"{language.code}/{category.value}: expected "
                        f"{SUBNORMS_PER_CATEGORY}, found {found}"
                    )
                if not complete and found == 0:
                    raise InvariantError(
                        f"{language.code}/{category.value}: expected "
                        f"{SUBNORMS_PER_CATEGORY}, found 0"
                    )


def _load_language_file(path: Path) -> tuple[list[Subnorm], list[str]]:
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ParseError(f"{path.name}: invalid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path.name}: expected a mapping at top level")
    code = data.get("language")
    if not code:
        raise ParseError(f"{path.name}: missing 'language'")
    if all(key in data for key in ("language_name", "culture", "script")):
        register_language(
            Language(code, data["language_name"], data["culture"], data["script"])
        )
    language = get_language(code)

    categories = data.get("categories")
    if not isinstance(categories, dict):
        raise ParseError(f"{path.name}: missing 'categories' mapping")

    subnorms: list[Subnorm] = []
    warnings: list[str] = []
    for cat_name, entries in categories.items():
        category = NormCategory.from_name(cat_name)
        if entries is None:
            entries = []
        if not isinstance(entries, list):
            raise ParseError(f"{path.name}: category {cat_name!r} must hold a list")
        if not entries:
            raise InvariantError(
                f"{language.code}/{category.value}: expected "
                f"{SUBNORMS_PER_CATEGORY}, found 0"
            )
        seen_statements: set[str] = set()
        for idx, entry in enumerate(entries, start=1):
            if not isinstance(entry, dict):
                raise ParseError(f"{path.name}: {cat_name} item {idx} must be a mapping")
            missing = [key for key in ("id", "statement") if not entry.get(key)]
            if missing:
                raise ParseError(
                    f"{path.name}: {cat_name} item {idx} missing {', '.join(missing)}"
                )
            evidence = entry.get("verbal_evidence") or []
            if isinstance(evidence, str):
                evidence = [evidence]
            statement = str(entry["statement"]).strip()
            if statement in seen_statements:
                warnings.append(
                    f"{language.code}/{category.value}: duplicate statement "
                    f"at item {idx} ({entry['id']})"
                )
            seen_statements.add(statement)
            subnorms.append(
                Subnorm(
                    id=str(entry["id"]),
                    category=category,
                    language=language,
                    statement=statement,
                    application_context=str(entry.get("context", "")).strip(),
                    verbal_evidence=tuple(str(v) for v in evidence),
                )
            )
    return subnorms, warnings


def load_taxonomy(path: str | Path, complete: bool = False) -> Taxonomy:
    """Load a taxonomy from a YAML file or a directory of per-language files."""
    root = Path(path)
    if not root.exists():
        raise ParseError(f"taxonomy path does not exist: {root}")
    files = sorted(root.glob("*.y*ml")) if root.is_dir() else [root]
    if not files:
        raise ParseError(f"no taxonomy files under {root}")
    subnorms: list[Subnorm] = []
    warnings: list[str] = []
    for file in files:
        file_subnorms, file_warnings = _load_language_file(file)
        subnorms.extend(file_subnorms)
        warnings.extend(file_warnings)
    taxonomy = Taxonomy(subnorms, warnings)
    taxonomy.validate(complete=complete)
    return taxonomy


def dump_language_yaml(language: Language, subnorms: Sequence[Subnorm]) -> str:
    """Serialize one language's subnorms back to the editable file format."""
    categories: dict[str, list[dict]] = {}
    for sub in subnorms:
        if sub.language != language:
            continue
        categories.setdefault(sub.category.value, []).append(
            {
                "id": sub.id,
                "statement": sub.statement,
                "context": sub.application_context,
                "verbal_evidence": list(sub.verbal_evidence),
            }
        )
    doc = {"language": language.code, "categories": categories}
    return yaml.safe_dump(doc, allow_unicode=True, sort_keys=True)


# -- completion parsing ----------------------------------------------------

_BLOCK_HEAD = re.compile(r"^Subnorm(?:\s+(\d+))?\s*:\s*(.*)$", re.MULTILINE)


def parse_subnorm_blocks(text: str, expected: int) -> list[dict]:
    """Parse "Subnorm i: ... / Context: ... / Verbal Evidence: ..." blocks."""
    heads = list(_BLOCK_HEAD.finditer(text))
    if len(heads) != expected:
        raise CountError("subnorm blocks", expected, len(heads))
    blocks: list[dict] = []
    for pos, head in enumerate(heads):
        end = heads[pos + 1].start() if pos + 1 < len(heads) else len(text)
        chunk = text[head.end():end]
        statement = head.group(2).strip()
        context_match = re.search(r"^Context:\s*(.+)$", chunk, re.MULTILINE)
        evidence_match = re.search(r"^Verbal Evidence:\s*(.+)$", chunk, re.MULTILINE)
        if not statement:
            raise ParseError(f"subnorm block {pos + 1}: empty statement")
        if evidence_match is None:
            raise ParseError(f"subnorm block {pos + 1}: missing verbal evidence")
        evidence = tuple(
            phrase.strip() for phrase in evidence_match.group(1).split(";") if phrase.strip()
        )
        if not evidence:
            raise ParseError(f"subnorm block {pos + 1}: empty verbal evidence")
        blocks.append(
            {
                "statement": statement,
                "context": context_match.group(1).strip() if context_match else "",
                "verbal_evidence": evidence,
            }
        )
    return blocks


# -- gateway-backed operations ----------------------------------------------

def generate_subnorms(
    category: NormCategory,
    language: Language,
    seed_values: Sequence[str],
    gateway: Gateway,
    model_tag: str,
    count: int = SUBNORMS_PER_CATEGORY,
    attempts: int = 3,
) -> list[Subnorm]:
    """Generate count subnorms for (category, language) from seed value statements."""
    if not seed_values:
        raise PreconditionError("seed_values must be nonempty for the anchor language")
    request = generation_request(
        "subnorm_anchor",
        {
            "language": language.name,
            "category": category.value,
            "seed_values": "\n".join(f"- {value}" for value in seed_values),
            "count": str(count),
        },
        model_tag=model_tag,
        seed_tag=f"subnorm:{language.code}:{category.slug}",
    )
    blocks = complete_parsed(
        gateway, request, lambda text: parse_subnorm_blocks(text, count), attempts
    )
    return [
        Subnorm(
            id=f"{language.code.lower()}-{category.slug}-{idx:02d}",
            category=category,
            language=language,
            statement=block["statement"],
            application_context=block["context"],
            verbal_evidence=block["verbal_evidence"],
        )
        for idx, block in enumerate(blocks, start=1)
    ]


_LANG_PREFIX = re.compile(r"^[a-z]{2}-")


def align_subnorm(
    source: Subnorm,
    target: Language,
    gateway: Gateway,
    model_tag: str,
    attempts: int = 3,
) -> Subnorm:
    """Produce the target-language counterpart of a source subnorm."""
    if source.language == target:
        raise PreconditionError(
            f"cannot align {source.id} onto its own language {target.code}"
        )
    request = generation_request(
        "subnorm_align",
        {
            "target_language": target.name,
            "source_language": source.language.name,
            "category": source.category.value,
            "source_subnorm": source.as_prompt_block(),
        },
        model_tag=model_tag,
        seed_tag=f"align:{source.id}:{target.code}",
    )
    block = complete_parsed(
        gateway, request, lambda text: parse_subnorm_blocks(text, 1)[0], attempts
    )
    suffix = _LANG_PREFIX.sub("", source.id)
    return Subnorm(
        id=f"{target.code.lower()}-{suffix}",
        category=source.category,
        language=target,
        statement=block["statement"],
        application_context=block["context"],
        verbal_evidence=block["verbal_evidence"],
    )
