"""Rule-based sentence segmentation for EN, KR, and ZH text.

The 1-2 sentence scenario and 3-5 sentence situation constraints need a
checkable definition, so splitting is deliberately deterministic:

- latin script: terminal punctuation (. ! ? …) followed by whitespace or end
  of text, with a small abbreviation guard (Mr., Dr., e.g., ...).
- han script: full-width terminators (。 ！ ？ …) anywhere, plus the latin
  rule for mixed text.
- hangul: the latin rule, plus a sentence-final ending (다/요/죠/까/네)
  immediately followed by a newline.

Unknown scripts fall back to the latin rule.
"""

from __future__ import annotations

import re

from .langs import Language

_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "no",
    "e.g", "i.e", "cf", "al",
}

_LATIN_BOUNDARY = re.compile(r"[.!?…]+(?=\s|$)")
_HAN_BOUNDARY = re.compile(r"[。！？…]+|[.!?]+(?=\s|$)")
_HANGUL_ENDING = re.compile(r"(?<=[다요죠까네])\n")


def _is_abbreviation(prefix: str) -> bool:
    """True when the text before a period ends in a guarded abbreviation."""
    tail = prefix.rstrip(".")
    match = re.search(r"([A-Za-z][A-Za-z.]*)$", tail)
    if match is None:
        return False
    token = match.group(1)
    if len(token) == 1 and token.isupper():
        return True  # single-letter initial, e.g. "A." in a name
    return token.lower() in _ABBREVIATIONS


def _split_latin(text: str) -> list[str]:
    sentences: list[str] = []
    start = 0
    for match in _LATIN_BOUNDARY.finditer(text):
        prefix = text[start:match.start()]
        if text[match.start()] == "." and _is_abbreviation(prefix):
            continue
        sentences.append(text[start:match.end()])
        start = match.end()
    if start < len(text):
        sentences.append(text[start:])
    return sentences


def _split_han(text: str) -> list[str]:
    sentences: list[str] = []
    start = 0
    for match in _HAN_BOUNDARY.finditer(text):
        sentences.append(text[start:match.end()])
        start = match.end()
    if start < len(text):
        sentences.append(text[start:])
    return sentences


def _split_hangul(text: str) -> list[str]:
    chunks: list[str] = []
    for piece in _HANGUL_ENDING.split(text):
        chunks.extend(_split_latin(piece))
    return chunks


def split_sentences(text: str, language: Language) -> list[str]:
    """Split text into sentences under the language's segmentation rule."""
    if language.script == "han":
        raw = _split_han(text)
    elif language.script == "hangul":
        raw = _split_hangul(text)
    else:
        raw = _split_latin(text)
    return [chunk.strip() for chunk in raw if chunk.strip()]


def count_sentences(text: str, language: Language) -> int:
    return len(split_sentences(text, language))
