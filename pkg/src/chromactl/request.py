"""Deterministic natural-language understanding for color requests.

Turns sentences like "I need a bright orange" or "make 5 ml of cyan" into a
structured request: one base color phrase, ordered modifiers, and an
optional volume. This is the rule-based counterpart of an LLM parse, so it
is deliberately permissive: unknown adjectives are skipped with a warning.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .colors import Color, Modifier, NAME_TABLE, apply_modifier, parse_color_literal
from .errors import AmbiguousRequest, BadVolume, NoColorFound

log = logging.getLogger(__name__)

__all__ = ["ColorRequest", "NormalizedRequest", "parse_request", "normalize_request"]

MAX_REQUEST_LEN = 1024
DEFAULT_VOLUME_ML = 5.0

FILLER_WORDS = frozenset(
    {"i", "need", "a", "an", "the", "make", "mix", "of", "please", "me", "some", "want"}
)

_LITERAL_RE = re.compile(r"#[0-9a-fA-F]{6}|rgb\(\s*\d+\s*,\s*\d+\s*,\s*\d+\s*\)")
_VOLUME_RE = re.compile(r"(-?\d+(?:\.\d+)?)\s*(?:ml|milliliters?)\b", re.IGNORECASE)
_WORD_RE = re.compile(r"[a-zA-Z]+")

_MODIFIER_WORDS = {m.value: m for m in Modifier}


@dataclass(frozen=True)
class ColorRequest:
    """Raw parse of one request sentence."""

    raw_text: str
    base_color_text: str
    modifiers: tuple[Modifier, ...] = ()
    volume_ml: float | None = None

    def __post_init__(self):
        if self.volume_ml is not None and not self.volume_ml > 0:
            raise BadVolume(f"volume must be positive, got {self.volume_ml}")


@dataclass(frozen=True)
class NormalizedRequest:
    """Fully resolved request: concrete target color and volume."""

    target: Color
    volume_ml: float
    source: ColorRequest


def parse_request(text: str) -> ColorRequest:
    """Extract the color phrase, leading modifiers, and optional volume.

    Matching is case-insensitive; filler words are ignored; unknown words
    are skipped with a warning so the fallback parser stays permissive.
    """
    if not text:
        raise NoColorFound("empty request")
    if len(text) > MAX_REQUEST_LEN:
        raise NoColorFound(f"request longer than {MAX_REQUEST_LEN} characters")

    working = text
    color_phrases: list[str] = []

    # Literals first, so their digits never look like a volume.
    def _take_literal(m: re.Match) -> str:
        color_phrases.append(m.group(0))
        return " "

    working = _LITERAL_RE.sub(_take_literal, working)

    volume_ml: float | None = None
    volume_matches = list(_VOLUME_RE.finditer(working))
    if len(volume_matches) > 1:
        raise BadVolume("more than one volume phrase")
    if volume_matches:
        volume_ml = float(volume_matches[0].group(1))
        if not volume_ml > 0:
            raise BadVolume(f"volume must be positive, got {volume_matches[0].group(1)}")
        working = _VOLUME_RE.sub(" ", working)

    modifiers: list[Modifier] = []
    for word in _WORD_RE.findall(working.lower()):
        if word in _MODIFIER_WORDS:
            modifiers.append(_MODIFIER_WORDS[word])
        elif word in NAME_TABLE:
            color_phrases.append(word)
        elif word not in FILLER_WORDS:
            log.warning("ignoring unknown word %r in request %r", word, text)

    distinct = list(dict.fromkeys(color_phrases))
    if not distinct:
        raise NoColorFound(f"no color literal or known name in {text!r}")
    if len(distinct) > 1:
        raise AmbiguousRequest(f"multiple color phrases in {text!r}: {distinct}")

    return ColorRequest(
        raw_text=text,
        base_color_text=distinct[0],
        modifiers=tuple(modifiers),
        volume_ml=volume_ml,
    )


def normalize_request(
    req: ColorRequest, default_volume_ml: float = DEFAULT_VOLUME_ML
) -> NormalizedRequest:
    """Resolve the color phrase and fold modifiers in textual order."""
    target = parse_color_literal(req.base_color_text)
    for modifier in req.modifiers:
        target = apply_modifier(target, modifier)
    volume = req.volume_ml if req.volume_ml is not None else default_volume_ml
    return NormalizedRequest(target=target, volume_ml=volume, source=req)
