"""Corpus file formats, deterministic dataset expansion, and eval splits.

The corpus is a JSON file of (NL pattern, program template) entries: the
retrieval index and the unit of training data.  Paraphrase template families
expand into ⟨utterance, gold program⟩ datasets with a seeded PRNG instead of
any hosted generator, so a (templates, seed, per_family) triple fully
determines the dataset.  File formats are documented in docs/formats.md.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from .dsl import parse_program
from .rng import XorShift64Star
from .text import (
    PatternError,
    PatternInfo,
    Unit,
    analyze_pattern,
    instantiate_pattern,
    normalize_and_slot,
    pattern_slot_names,
)

__all__ = [
    "CorpusEntry",
    "Corpus",
    "FormatError",
    "DuplicateId",
    "load_corpus",
    "save_corpus",
    "corpus_from_entries",
    "ParaphraseTemplate",
    "DatasetExample",
    "load_templates",
    "expand_templates",
    "split_by_family",
    "SplitResult",
    "build_retrieval_corpus",
    "save_dataset",
    "load_dataset",
    "shipped_corpus_path",
    "shipped_templates_path",
]


class FormatError(ValueError):
    def __init__(self, entry_id: str, reason: str):
        super().__init__(f"corpus entry {entry_id!r}: {reason}")
        self.entry_id = entry_id
        self.reason = reason


class DuplicateId(FormatError):
    def __init__(self, entry_id: str):
        super().__init__(entry_id, "duplicate id")


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    nl_pattern: str
    program_template: str
    required_slots: tuple[tuple[str, Unit], ...] = ()
    defaults: dict[str, float] = field(default_factory=dict)
    tags: tuple[str, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "nl_pattern": self.nl_pattern,
            "program_template": self.program_template,
            "required_slots": [[name, unit.value] for name, unit in self.required_slots],
            "defaults": dict(self.defaults),
            "tags": list(self.tags),
        }


@dataclass(frozen=True)
class IndexedEntry:
    entry: CorpusEntry
    pattern: PatternInfo
    weights: dict[str, float]  # tf * idf per token
    norm: float
    token_counts: Counter


class Corpus:
    """Validated entries plus the TF-IDF index built once at load time.

    Read-only after construction; reloads swap in a whole new instance.
    """

    def __init__(self, entries: list[CorpusEntry]):
        self._validate(entries)
        self.entries: tuple[CorpusEntry, ...] = tuple(entries)
        self.by_id = {e.id: e for e in entries}
        self.idf = self._build_idf(entries)
        self.indexed: dict[str, IndexedEntry] = {}
        for entry in entries:
            pattern = analyze_pattern(entry.nl_pattern)
            counts = Counter(pattern.tokens)
            weights = {
                token: count * self.idf[token] for token, count in sorted(counts.items())
            }
            norm = math.sqrt(sum(w * w for w in weights.values()))
            self.indexed[entry.id] = IndexedEntry(entry, pattern, weights, norm, counts)

    def __len__(self) -> int:
        return len(self.entries)

    def idf_of(self, token: str) -> float:
        return self.idf.get(token, self._oov_idf)

    @staticmethod
    def _build_idf(entries) -> dict[str, float]:
        n = len(entries)
        df: Counter = Counter()
        for entry in entries:
            df.update(set(analyze_pattern(entry.nl_pattern).tokens))
        return {token: math.log((1 + n) / (1 + count)) + 1.0 for token, count in df.items()}

    @property
    def _oov_idf(self) -> float:
        return math.log(1 + len(self.entries)) + 1.0

    @staticmethod
    def _validate(entries: list[CorpusEntry]) -> None:
        seen: set[str] = set()
        for entry in entries:
            if not entry.id:
                raise FormatError(entry.id, "empty id")
            if entry.id in seen:
                raise DuplicateId(entry.id)
            seen.add(entry.id)
            declared = {name for name, _ in entry.required_slots} | set(entry.defaults)
            try:
                pattern = analyze_pattern(entry.nl_pattern)
            except PatternError as exc:
                raise FormatError(entry.id, str(exc)) from exc
            for name, _ in pattern.slots:
                if name not in declared:
                    raise FormatError(
                        entry.id, f"pattern slot {{{name}}} not declared in required_slots/defaults"
                    )
            for name in pattern_slot_names(entry.program_template):
                if name not in declared:
                    raise FormatError(
                        entry.id, f"template slot {{{name}}} not declared in required_slots/defaults"
                    )
            # Probe-instantiate (defaults where given, 1 elsewhere) and parse.
            probe = {name: 1.0 for name, _ in entry.required_slots}
            probe.update(entry.defaults)
            try:
                parse_program(instantiate_pattern(entry.program_template, probe))
            except Exception as exc:
                raise FormatError(entry.id, f"template does not parse: {exc}") from exc


def corpus_from_entries(entries: Iterable[CorpusEntry]) -> Corpus:
    return Corpus(list(entries))


def _entry_from_json(obj: dict) -> CorpusEntry:
    entry_id = obj.get("id", "")
    try:
        required = tuple(
            (name, Unit(unit)) for name, unit in obj.get("required_slots", [])
        )
        return CorpusEntry(
            id=obj["id"],
            nl_pattern=obj["nl_pattern"],
            program_template=obj["program_template"],
            required_slots=required,
            defaults={k: float(v) for k, v in obj.get("defaults", {}).items()},
            tags=tuple(obj.get("tags", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(entry_id, f"malformed entry: {exc}") from exc


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus file, building the retrieval index."""
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict) or "entries" not in payload:
        raise FormatError("", 'corpus file must be an object with an "entries" list')
    return Corpus([_entry_from_json(obj) for obj in payload["entries"]])


def corpus_to_canonical_json(corpus: Corpus) -> str:
    """Canonical serialization: entries sorted by id, keys sorted, 2-space
    indent, LF line endings, trailing newline.  Round-trips byte-identically.
    """
    entries = sorted(corpus.entries, key=lambda e: e.id)
    payload = {"entries": [e.to_json_obj() for e in entries]}
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(corpus_to_canonical_json(corpus), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Paraphrase templates and dataset expansion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotRange:
    minimum: float
    maximum: float
    step: float

    def __post_init__(self):
        object.__setattr__(self, "minimum", float(self.minimum))
        object.__setattr__(self, "maximum", float(self.maximum))
        object.__setattr__(self, "step", float(self.step))
        if self.step <= 0 or self.maximum < self.minimum:
            raise ValueError("slot range must have step > 0 and max >= min")

    def values(self) -> list[float]:
        count = int(math.floor((self.maximum - self.minimum) / self.step + 1e-9)) + 1
        return [self.minimum + i * self.step for i in range(count)]


@dataclass(frozen=True)
class ParaphraseTemplate:
    family_id: str
    variants: tuple[str, ...]
    program_template: str
    slot_ranges: dict[str, SlotRange]

    def __post_init__(self):
        if not self.variants:
            raise ValueError(f"family {self.family_id!r} has no variants")
        slot_names = set(self.slot_ranges)
        for variant in self.variants:
            if set(pattern_slot_names(variant)) != slot_names:
                raise ValueError(
                    f"family {self.family_id!r}: variant {variant!r} must use "
                    f"exactly the slots {sorted(slot_names)}"
                )


@dataclass(frozen=True)
class DatasetExample:
    utterance: str
    gold_program: str
    family_id: str


def load_templates(path: str | Path) -> list[ParaphraseTemplate]:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    families = []
    for obj in payload["families"]:
        families.append(
            ParaphraseTemplate(
                family_id=obj["family_id"],
                variants=tuple(obj["variants"]),
                program_template=obj["program_template"],
                slot_ranges={
                    name: SlotRange(*values) for name, values in obj.get("slot_ranges", {}).items()
                },
            )
        )
    return families


def expand_templates(
    templates: list[ParaphraseTemplate], seed: int, per_family: int
) -> list[DatasetExample]:
    """Draw ``per_family`` variant × slot-value combinations per family.

    A pure function of its arguments: the seeded generator (docs/prng.md)
    makes the output order reproducible, and duplicate (utterance, program)
    pairs are dropped keeping first occurrence.
    """
    if per_family < 1:
        raise ValueError("per_family must be >= 1")
    rng = XorShift64Star(seed)
    examples: list[DatasetExample] = []
    seen: set[tuple[str, str]] = set()
    for family in templates:
        slot_values = {name: r.values() for name, r in family.slot_ranges.items()}
        for _ in range(per_family):
            variant = family.variants[rng.below(len(family.variants))]
            values = {name: vals[rng.below(len(vals))] for name, vals in slot_values.items()}
            utterance = instantiate_pattern(variant, values)
            gold = instantiate_pattern(family.program_template, values)
            key = (utterance, gold)
            if key in seen:
                continue
            seen.add(key)
            examples.append(DatasetExample(utterance, gold, family.family_id))
    return examples


def variant_key(utterance: str) -> tuple[str, ...]:
    """Normalized token signature identifying the paraphrase variant."""
    tokens, _ = normalize_and_slot(utterance)
    return tuple(tokens)


class SplitResult(NamedTuple):
    train: list[DatasetExample]
    heldout: list[DatasetExample]
    unsplit_families: list[str]


def split_by_family(
    examples: list[DatasetExample], holdout_fraction: float, seed: int
) -> SplitResult:
    """Hold out whole paraphrase variants so no held-out phrasing is in train.

    Variants (normalized token signatures) are partitioned per family; a
    family's program template may appear on both sides, only the phrasing is
    unseen.  Families with a single variant cannot be split: they go to
    train and are reported in ``unsplit_families``.
    """
    if not 0 < holdout_fraction < 1:
        raise ValueError("holdout_fraction must be in (0, 1)")
    by_family: dict[str, list[tuple[str, ...]]] = {}
    for example in examples:
        key = variant_key(example.utterance)
        keys = by_family.setdefault(example.family_id, [])
        if key not in keys:
            keys.append(key)

    rng = XorShift64Star(seed)
    heldout_keys: set[tuple[str, tuple[str, ...]]] = set()
    unsplit: list[str] = []
    for family_id in sorted(by_family):
        keys = sorted(by_family[family_id])
        if len(keys) < 2:
            unsplit.append(family_id)
            continue
        rng.shuffle(keys)
        n_hold = min(len(keys) - 1, max(1, round(len(keys) * holdout_fraction)))
        heldout_keys.update((family_id, key) for key in keys[:n_hold])

    train: list[DatasetExample] = []
    heldout: list[DatasetExample] = []
    for example in examples:
        token = (example.family_id, variant_key(example.utterance))
        (heldout if token in heldout_keys else train).append(example)
    return SplitResult(train, heldout, unsplit)


def build_retrieval_corpus(
    templates: list[ParaphraseTemplate], train_examples: list[DatasetExample]
) -> Corpus:
    """Index exactly the paraphrase variants that occur in the training data.

    Each present (family, variant) pair becomes one corpus entry whose
    pattern is the variant and whose program is the family template, the
    retrieval analogue of fitting a model on the training pairs.
    """
    present: set[tuple[str, tuple[str, ...]]] = {
        (ex.family_id, variant_key(ex.utterance)) for ex in train_examples
    }
    entries: list[CorpusEntry] = []
    for family in templates:
        for i, variant in enumerate(family.variants):
            key = variant_key(instantiate_pattern(variant, _probe_values(family)))
            if (family.family_id, key) not in present:
                continue
            info = analyze_pattern(variant)
            entries.append(
                CorpusEntry(
                    id=f"{family.family_id}__v{i:02d}",
                    nl_pattern=variant,
                    program_template=family.program_template,
                    required_slots=info.slots,
                    tags=("train",),
                )
            )
    return Corpus(entries)


def _probe_values(family: ParaphraseTemplate) -> dict[str, float]:
    return {name: r.values()[0] for name, r in family.slot_ranges.items()}


# ---------------------------------------------------------------------------
# Dataset files (one JSON object per line)
# ---------------------------------------------------------------------------


def save_dataset(examples: list[DatasetExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for example in examples:
            handle.write(
                json.dumps(
                    {
                        "utterance": example.utterance,
                        "gold_program": example.gold_program,
                        "family_id": example.family_id,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def load_dataset(path: str | Path) -> list[DatasetExample]:
    examples = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            obj = json.loads(line)
            examples.append(
                DatasetExample(obj["utterance"], obj["gold_program"], obj["family_id"])
            )
    return examples


def shipped_corpus_path() -> Path:
    return Path(__file__).parent / "data" / "corpus.json"


def shipped_templates_path() -> Path:
    return Path(__file__).parent / "data" / "templates.json"
