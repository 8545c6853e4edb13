"""Utterance normalization and numeric slot extraction.

Both sides of the retrieval match go through the same pipeline: operator
utterances directly, and corpus patterns with their ``{slot}`` placeholders
substituted by a probe number.  Numbers become the placeholder token
``<num>`` and a unit word immediately after a number is consumed into the
slot instead of staying in the token stream, so "forward 2 meters" and
"forward {d} meters" normalize to identical token sequences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

NUM_TOKEN = "<num>"

_STRIP_CHARS = ".,!?;:()[]{}\"'"
_NUMBER_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_]\w*)(?::([A-Za-z_/°]+))?\}")


class Unit(str, Enum):
    METERS = "meters"
    METERS_PER_SECOND = "meters_per_second"
    SECONDS = "seconds"
    DEGREES = "degrees"
    UNITLESS = "unitless"


_UNIT_WORDS = {
    "m": Unit.METERS,
    "meter": Unit.METERS,
    "meters": Unit.METERS,
    "metre": Unit.METERS,
    "metres": Unit.METERS,
    "m/s": Unit.METERS_PER_SECOND,
    "mps": Unit.METERS_PER_SECOND,
    "s": Unit.SECONDS,
    "sec": Unit.SECONDS,
    "secs": Unit.SECONDS,
    "second": Unit.SECONDS,
    "seconds": Unit.SECONDS,
    "deg": Unit.DEGREES,
    "degree": Unit.DEGREES,
    "degrees": Unit.DEGREES,
    "°": Unit.DEGREES,
}

_UNIT_ALIASES = {unit: name for name, unit in _UNIT_WORDS.items()}


@dataclass(frozen=True)
class SlotValue:
    name: str
    value: float
    unit: Unit


def units_compatible(query_unit: Unit, wanted: Unit) -> bool:
    """Exact match, or either side unitless (bare numbers are wildcards).

    Two different concrete units never match: a query in degrees is skipped
    by an entry expecting meters, never coerced.
    """
    return query_unit == wanted or Unit.UNITLESS in (query_unit, wanted)


def _clean(token: str) -> str:
    return token.strip(_STRIP_CHARS)


def normalize_and_slot(utterance: str) -> tuple[list[str], list[SlotValue]]:
    """Lowercase, strip punctuation, and extract numeric slots.

    Returns (pattern_tokens, slots): numbers are replaced by ``<num>`` and
    captured in reading order; a unit word directly after a number is folded
    into that slot's unit and dropped from the tokens.  Empty input yields
    empty outputs.
    """
    text = utterance.lower().replace("'", "").replace("’", "")
    text = re.sub(r"(\d)°", r"\1 °", text)
    raw_tokens = [t for t in (_clean(tok) for tok in text.split()) if t]

    tokens: list[str] = []
    slots: list[SlotValue] = []
    i = 0
    while i < len(raw_tokens):
        token = raw_tokens[i]
        if _NUMBER_RE.match(token):
            unit = Unit.UNITLESS
            if i + 1 < len(raw_tokens) and raw_tokens[i + 1] in _UNIT_WORDS:
                unit = _UNIT_WORDS[raw_tokens[i + 1]]
                i += 1
            slots.append(SlotValue(f"num{len(slots)}", float(token), unit))
            tokens.append(NUM_TOKEN)
        else:
            tokens.append(token)
        i += 1
    return tokens, slots


@dataclass(frozen=True)
class PatternInfo:
    """A corpus pattern after analysis: match tokens plus its slot schema."""

    tokens: tuple[str, ...]
    slots: tuple[tuple[str, Unit], ...]  # (name, unit) in order of appearance


class PatternError(ValueError):
    pass


def analyze_pattern(pattern: str) -> PatternInfo:
    """Tokenize a ``{slot}``-style pattern the same way utterances are.

    Each placeholder is replaced by a probe number before normalization, so
    adjacent unit words are consumed exactly as they would be in a real
    utterance.  An explicit ``{name:unit}`` annotation overrides the unit
    inferred from the adjacent word.  Literal numbers are not allowed in
    patterns (they would be indistinguishable from slots).
    """
    placeholders = _PLACEHOLDER_RE.findall(pattern)
    probed = _PLACEHOLDER_RE.sub("7", pattern)
    tokens, probe_slots = normalize_and_slot(probed)
    if len(probe_slots) != len(placeholders):
        raise PatternError(
            f"pattern {pattern!r} contains literal numbers; only {{slot}} "
            "placeholders may be numeric"
        )
    slots = []
    for (name, annotation), probe in zip(placeholders, probe_slots):
        if annotation:
            normalized = annotation.lower()
            if normalized in _UNIT_WORDS:
                unit = _UNIT_WORDS[normalized]
            else:
                try:
                    unit = Unit(normalized)
                except ValueError:
                    raise PatternError(
                        f"pattern {pattern!r}: unknown unit {annotation!r}"
                    ) from None
        else:
            unit = probe.unit
        slots.append((name, unit))
    return PatternInfo(tuple(tokens), tuple(slots))


def instantiate_pattern(pattern: str, values: dict[str, float]) -> str:
    """Substitute slot values into an NL pattern, dropping unit annotations."""
    from .dsl import format_number

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise PatternError(f"no value for slot {{{name}}}")
        return format_number(values[name])

    return _PLACEHOLDER_RE.sub(_sub, pattern)


def pattern_slot_names(pattern: str) -> list[str]:
    return [m[0] for m in _PLACEHOLDER_RE.findall(pattern)]
