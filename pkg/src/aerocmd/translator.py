"""Utterance → program translation.

The built-in backend is deterministic retrieval: TF-IDF cosine over corpus
pattern tokens (tf = raw count, idf = ln((1+N)/(1+df)) + 1), then slot
filling by unit and position.  An external model can be plugged in over a
small HTTP contract; whatever it returns is re-parsed locally before it may
become a candidate.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import requests

from .corpus import Corpus
from .dsl import ParseError, Program, parse_program, render_program
from .text import SlotValue, Unit, instantiate_pattern, normalize_and_slot, units_compatible

__all__ = [
    "TranslatorConfig",
    "TranslationCandidate",
    "NoConfidentCandidate",
    "EmptyCorpus",
    "translate",
    "suggestions",
    "BackendError",
    "BackendUnavailable",
    "BackendMalformedResponse",
    "BackendProgramRejected",
    "backend_translate",
]


class EmptyCorpus(ValueError):
    pass


class NoConfidentCandidate(Exception):
    """No corpus entry reached the confidence floor for this utterance."""

    def __init__(self, best_score: float):
        super().__init__(f"no candidate reached the confidence floor (best {best_score:.3f})")
        self.best_score = best_score


@dataclass(frozen=True)
class TranslatorConfig:
    top_k: int = 3
    min_score: float = 0.35
    backend: str = "retrieval"  # "retrieval" | "external"
    backend_url: str | None = None

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be within [0, 1]")
        if self.backend not in ("retrieval", "external"):
            raise ValueError("backend must be 'retrieval' or 'external'")


@dataclass(frozen=True)
class TranslationCandidate:
    program: Program
    rendered: str
    score: float
    corpus_entry_id: str
    filled_slots: tuple[SlotValue, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "corpus_entry_id": self.corpus_entry_id,
            "filled_slots": [
                {"name": s.name, "unit": s.unit.value, "value": s.value}
                for s in self.filled_slots
            ],
            "program": self.rendered,
            "score": self.score,
        }


def _cosine(query_weights: dict[str, float], query_norm: float, indexed) -> float:
    if query_norm == 0.0 or indexed.norm == 0.0:
        return 0.0
    dot = 0.0
    for token in sorted(query_weights):
        weight = indexed.weights.get(token)
        if weight is not None:
            dot += query_weights[token] * weight
    return min(1.0, max(0.0, dot / (query_norm * indexed.norm)))


def _score_all(utterance: str, corpus: Corpus) -> tuple[list[tuple[float, str]], list[SlotValue]]:
    """Cosine of the query pattern against every entry pattern."""
    tokens, slots = normalize_and_slot(utterance)
    counts = Counter(tokens)
    weights = {token: count * corpus.idf_of(token) for token, count in sorted(counts.items())}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    scores = []
    for entry in corpus.entries:
        indexed = corpus.indexed[entry.id]
        if counts == indexed.token_counts:
            score = 1.0  # identical token multisets: exactly 1 by definition
        else:
            score = _cosine(weights, norm, indexed)
        scores.append((score, entry.id))
    return scores, slots


def _fill_slots(indexed, query_slots: list[SlotValue]) -> dict[str, SlotValue] | None:
    """Assign query slots to an entry's required slots.

    Exact unit matches are claimed first, then unit wildcards (bare numbers),
    then declared defaults; position breaks ties within a unit.  Returns
    None when a required slot stays unfilled, and the entry is skipped.
    """
    entry = indexed.entry
    consumed = [False] * len(query_slots)
    filled: dict[str, SlotValue] = {}

    def claim(name: str, predicate) -> bool:
        for i, slot in enumerate(query_slots):
            if not consumed[i] and predicate(slot):
                consumed[i] = True
                filled[name] = SlotValue(name, slot.value, slot.unit)
                return True
        return False

    unfilled = []
    for name, unit in entry.required_slots:
        if not claim(name, lambda s, u=unit: s.unit == u):
            unfilled.append((name, unit))
    for name, unit in unfilled:
        if claim(name, lambda s, u=unit: units_compatible(s.unit, u)):
            continue
        if name in entry.defaults:
            filled[name] = SlotValue(name, float(entry.defaults[name]), unit)
        else:
            return None
    # Slots that only exist as defaults (fixed template parameters).
    for name, value in entry.defaults.items():
        if name not in filled:
            filled[name] = SlotValue(name, float(value), Unit.UNITLESS)
    return filled


def translate(
    utterance: str, corpus: Corpus, cfg: TranslatorConfig | None = None
) -> list[TranslationCandidate]:
    """Rank corpus entries against the utterance and instantiate the winners.

    Deterministic: identical (utterance, corpus, cfg) yield identical
    candidate lists, ties broken by corpus_entry_id ascending.  Raises
    NoConfidentCandidate when nothing reaches cfg.min_score, EmptyCorpus on
    an empty corpus.
    """
    cfg = cfg or TranslatorConfig()
    if len(corpus) == 0:
        raise EmptyCorpus("cannot translate over an empty corpus")
    scores, query_slots = _score_all(utterance, corpus)
    candidates: list[TranslationCandidate] = []
    best = 0.0
    for score, entry_id in sorted(scores, key=lambda pair: (-pair[0], pair[1])):
        indexed = corpus.indexed[entry_id]
        filled = _fill_slots(indexed, query_slots)
        if filled is None:
            continue
        best = max(best, score)
        if score < cfg.min_score or len(candidates) >= cfg.top_k:
            continue
        try:
            program = parse_program(
                instantiate_pattern(
                    indexed.entry.program_template, {k: v.value for k, v in filled.items()}
                )
            )
        except ParseError:
            # Slot values can break statement invariants (e.g. duration 0).
            continue
        candidates.append(
            TranslationCandidate(
                program=program,
                rendered=render_program(program),
                score=score,
                corpus_entry_id=entry_id,
                filled_slots=tuple(filled[name] for name in sorted(filled)),
            )
        )
    if not candidates:
        raise NoConfidentCandidate(best)
    return candidates


def suggestions(utterance: str, corpus: Corpus, k: int = 3) -> list[tuple[str, str, float]]:
    """Nearest corpus patterns by cosine, regardless of slot fillability."""
    scores, _ = _score_all(utterance, corpus)
    ranked = sorted(scores, key=lambda pair: (-pair[0], pair[1]))[:k]
    return [(entry_id, corpus.by_id[entry_id].nl_pattern, score) for score, entry_id in ranked]


# ---------------------------------------------------------------------------
# External model backend
# ---------------------------------------------------------------------------


class BackendError(Exception):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendMalformedResponse(BackendError):
    pass


class BackendProgramRejected(BackendError):
    """The backend returned a program that fails local parsing/validation."""


def backend_translate(
    utterance: str,
    context: dict,
    url: str,
    timeout: float = 10.0,
) -> list[TranslationCandidate]:
    """Ask an external model service for programs; trust nothing blindly.

    POSTs {utterance, context} and expects a JSON array of {program, score}.
    Every returned program is re-parsed locally; scores are clamped to
    [0, 1].  Candidates come back sorted like the retrieval path.
    """
    try:
        response = requests.post(
            url, json={"utterance": utterance, "context": context}, timeout=timeout
        )
    except requests.RequestException as exc:
        raise BackendUnavailable(f"backend at {url} unreachable: {exc}") from exc
    if response.status_code != 200:
        raise BackendUnavailable(f"backend at {url} returned HTTP {response.status_code}")
    try:
        payload = response.json()
    except (ValueError, json.JSONDecodeError) as exc:
        raise BackendMalformedResponse(f"backend response is not JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise BackendMalformedResponse("backend response must be a JSON array")
    candidates = []
    for item in payload:
        if not isinstance(item, dict) or "program" not in item or "score" not in item:
            raise BackendMalformedResponse(
                "backend items must be objects with 'program' and 'score'"
            )
        try:
            program = parse_program(str(item["program"]))
        except ParseError as exc:
            raise BackendProgramRejected(
                f"backend program {item['program']!r} rejected: {exc}"
            ) from exc
        try:
            score = min(1.0, max(0.0, float(item["score"])))
        except (TypeError, ValueError) as exc:
            raise BackendMalformedResponse(f"backend score {item['score']!r}: {exc}") from exc
        candidates.append(
            TranslationCandidate(
                program=program,
                rendered=render_program(program),
                score=score,
                corpus_entry_id="external",
            )
        )
    candidates.sort(key=lambda c: (-c.score, c.rendered))
    return candidates
