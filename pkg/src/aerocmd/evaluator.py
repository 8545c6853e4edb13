"""Translation quality metrics: exact match, AST match, and execution match.

The three metrics nest (a canonical-text match implies a structural match,
which implies an execution match), so each reported accuracy bounds the next.
Execution match runs both programs in fresh simulators from the canonical
initial state and compares final kinematic states plus the payloads of any
query statements (time fields excluded, they are clock artifacts).

The report path writes JSON, a delimited per-family table, and matplotlib
figures side by side (see ``save_report``).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DatasetExample
from .dsl import (
    ParseError,
    Program,
    Takeoff,
    ast_equiv,
    is_query,
    parse_program,
    render_program,
    validate_program,
)
from .sim import NotAirborne, SimConfig, Simulator
from .translator import EmptyCorpus, NoConfidentCandidate

__all__ = [
    "MatchResult",
    "EvalReport",
    "exact_match",
    "ast_match",
    "execution_match",
    "match_prediction",
    "evaluate",
    "save_report",
]

# Simulated-seconds budget per program; beyond this execution counts as failed.
EXECUTION_TIMEOUT_S = 30.0

POSITION_TOL = 1e-6  # metres per axis
YAW_TOL = 1e-6  # degrees
PAYLOAD_TOL = 1e-9  # GPS geo_point / velocity fields


@dataclass(frozen=True)
class MatchResult:
    exact: bool
    ast: bool
    execution: bool
    detail: str = ""

    def __post_init__(self):
        # Nesting by construction: exact ⇒ ast ⇒ execution.
        assert not (self.exact and not self.ast)
        assert not (self.ast and not self.execution)


def _canonical(text: str) -> str | None:
    try:
        return render_program(parse_program(text))
    except ParseError:
        return None


def exact_match(pred: str, gold: str) -> bool:
    """Byte equality of canonical renderings (wrappers and prefixes strip)."""
    canonical_pred = _canonical(pred)
    canonical_gold = _canonical(gold)
    return canonical_pred is not None and canonical_pred == canonical_gold


def ast_match(pred: str, gold: str) -> bool:
    """Structural equivalence after normalization (yaw wrap, tolerances)."""
    try:
        return ast_equiv(parse_program(pred), parse_program(gold))
    except ParseError:
        return False


class _ExecutionFailed(Exception):
    def __init__(self, stage: str, detail: str):
        super().__init__(detail)
        self.stage = stage
        self.detail = detail


def _run_program(program: Program, sim_cfg: SimConfig):
    """Execute a program in a fresh simulator, collecting query payloads.

    The simulator starts grounded at the origin; a takeoff preamble brings
    it to hover first so that single motion statements are runnable, exactly
    the same on both sides of a comparison.  Programs that validate against
    the envelope are rejected before execution; the simulated-time budget
    starts after the preamble.
    """
    sim = Simulator(config=sim_cfg)
    violations = validate_program(program, sim_cfg.envelope, sim.state)
    if violations:
        raise _ExecutionFailed(
            "validate", "; ".join(f"[{v.statement_index}] {v.rule}: {v.detail}" for v in violations)
        )
    sim.submit(Takeoff())
    sim.run_active_to_completion()
    budget_start = sim.state.sim_time
    payloads = []
    for stmt in program.statements:
        if sim.state.sim_time - budget_start > EXECUTION_TIMEOUT_S:
            raise _ExecutionFailed("timeout", "exceeded the simulated-time budget")
        if is_query(stmt):
            try:
                payloads.append((type(stmt).__name__, sim.query(stmt)))
            except ValueError as exc:  # e.g. unknown camera id
                raise _ExecutionFailed("execution", str(exc)) from exc
            continue
        try:
            sim.submit(stmt)
            sim.run_active_to_completion(
                timeout_s=EXECUTION_TIMEOUT_S - (sim.state.sim_time - budget_start)
            )
        except NotAirborne as exc:
            raise _ExecutionFailed("not_airborne", str(exc)) from exc
        except TimeoutError as exc:
            raise _ExecutionFailed("timeout", str(exc)) from exc
    return sim.state, payloads


def _payloads_equal(a: tuple[str, dict], b: tuple[str, dict]) -> bool:
    kind_a, payload_a = a
    kind_b, payload_b = b
    if kind_a != kind_b:
        return False
    if kind_a == "GetGpsData":
        geo_a, geo_b = payload_a["gnss"]["geo_point"], payload_b["gnss"]["geo_point"]
        vel_a, vel_b = payload_a["gnss"]["velocity"], payload_b["gnss"]["velocity"]
        return all(
            math.isclose(geo_a[k], geo_b[k], rel_tol=0.0, abs_tol=PAYLOAD_TOL)
            for k in ("latitude", "longitude", "altitude")
        ) and all(
            math.isclose(vel_a[k], vel_b[k], rel_tol=0.0, abs_tol=PAYLOAD_TOL)
            for k in ("x_val", "y_val", "z_val")
        )
    if kind_a == "GetState":
        if payload_a["landed"] != payload_b["landed"]:
            return False
        return all(
            math.isclose(
                payload_a[group][key], payload_b[group][key], rel_tol=0.0, abs_tol=PAYLOAD_TOL
            )
            for group in ("position", "velocity")
            for key in ("x_val", "y_val", "z_val")
        ) and math.isclose(payload_a["yaw"], payload_b["yaw"], rel_tol=0.0, abs_tol=PAYLOAD_TOL)
    if kind_a == "GetImage":
        return payload_a["png"] == payload_b["png"] and {
            k: v for k, v in payload_a["metadata"].items()
        } == {k: v for k, v in payload_b["metadata"].items()}
    return False


def execution_match(pred: str, gold: str, sim_cfg: SimConfig | None = None) -> bool:
    """Do the two programs leave a fresh simulator in the same state?

    Final position (per-axis), yaw (circular), and the landed flag must
    agree, and query statements must produce structurally equal payloads in
    the same order.  Unparseable or validation-rejected predictions fail.
    """
    sim_cfg = sim_cfg or SimConfig()
    try:
        pred_program = parse_program(pred)
    except ParseError:
        return False
    gold_program = parse_program(gold)  # dataset invariant: gold parses
    try:
        state_pred, payloads_pred = _run_program(pred_program, sim_cfg)
        state_gold, payloads_gold = _run_program(gold_program, sim_cfg)
    except _ExecutionFailed:
        return False
    if state_pred.landed != state_gold.landed:
        return False
    if any(
        abs(pa - ga) > POSITION_TOL for pa, ga in zip(state_pred.position, state_gold.position)
    ):
        return False
    from .dsl import wrap_yaw

    if abs(wrap_yaw(state_pred.yaw - state_gold.yaw)) > YAW_TOL:
        return False
    if len(payloads_pred) != len(payloads_gold):
        return False
    return all(_payloads_equal(a, b) for a, b in zip(payloads_pred, payloads_gold))


def match_prediction(pred: str, gold: str, sim_cfg: SimConfig | None = None) -> MatchResult:
    """All three metrics with the nesting enforced by construction."""
    exact = exact_match(pred, gold)
    ast = exact or ast_match(pred, gold)
    execution = ast or execution_match(pred, gold, sim_cfg)
    stage = "ok"
    if not execution:
        stage = "execution"
        if _canonical(pred) is None:
            stage = "parse"
    elif not ast:
        stage = "ast"
    elif not exact:
        stage = "exact"
    return MatchResult(exact, ast, execution, stage)


@dataclass
class FamilyStats:
    n: int = 0
    exact: int = 0
    ast: int = 0
    execution: int = 0


@dataclass
class EvalReport:
    n_examples: int
    exact_accuracy: float
    ast_accuracy: float
    execution_accuracy: float
    families: dict[str, FamilyStats]
    failures: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "accuracy": {
                "exact": self.exact_accuracy,
                "ast": self.ast_accuracy,
                "execution": self.execution_accuracy,
            },
            "failures": self.failures,
            "families": {
                family_id: {
                    "n": stats.n,
                    "exact": stats.exact / stats.n,
                    "ast": stats.ast / stats.n,
                    "execution": stats.execution / stats.n,
                }
                for family_id, stats in sorted(self.families.items())
            },
            "n_examples": self.n_examples,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        lines = [f"{'family':<16}{'n':>6}{'exact':>9}{'ast':>9}{'exec':>9}"]
        for family_id, stats in sorted(self.families.items()):
            lines.append(
                f"{family_id:<16}{stats.n:>6}"
                f"{stats.exact / stats.n:>9.3f}{stats.ast / stats.n:>9.3f}"
                f"{stats.execution / stats.n:>9.3f}"
            )
        lines.append(
            f"{'TOTAL':<16}{self.n_examples:>6}"
            f"{self.exact_accuracy:>9.3f}{self.ast_accuracy:>9.3f}"
            f"{self.execution_accuracy:>9.3f}"
        )
        return "\n".join(lines)


def evaluate(
    dataset: list[DatasetExample],
    translator,
    sim_cfg: SimConfig | None = None,
) -> EvalReport:
    """Score the translator's top-1 candidate on every dataset example.

    ``translator`` is any callable utterance -> candidate list (raising
    NoConfidentCandidate when unsure, which counts as failing all stages).
    Deterministic translators yield byte-identical reports.
    """
    if not dataset:
        raise ValueError("dataset must be non-empty")
    sim_cfg = sim_cfg or SimConfig()
    families: dict[str, FamilyStats] = {}
    failures: list[dict] = []
    totals = FamilyStats()
    for example in dataset:
        stats = families.setdefault(example.family_id, FamilyStats())
        stats.n += 1
        totals.n += 1
        predicted = ""
        try:
            candidates = translator(example.utterance)
            result = (
                match_prediction(candidates[0].rendered, example.gold_program, sim_cfg)
                if candidates
                else MatchResult(False, False, False, "translate")
            )
            predicted = candidates[0].rendered if candidates else ""
        except (NoConfidentCandidate, EmptyCorpus) as exc:
            result = MatchResult(False, False, False, f"translate: {exc}")
        for name in ("exact", "ast", "execution"):
            if getattr(result, name):
                setattr(stats, name, getattr(stats, name) + 1)
                setattr(totals, name, getattr(totals, name) + 1)
        if not result.exact:
            failures.append(
                {
                    "family_id": example.family_id,
                    "gold": example.gold_program,
                    "predicted": predicted,
                    "stage": result.detail,
                    "utterance": example.utterance,
                }
            )
    return EvalReport(
        n_examples=totals.n,
        exact_accuracy=totals.exact / totals.n,
        ast_accuracy=totals.ast / totals.n,
        execution_accuracy=totals.execution / totals.n,
        families=families,
        failures=failures,
    )


def save_report(report: EvalReport, out_dir: str | Path, figures: bool = True) -> list[Path]:
    """Write report.json, report.csv, and accuracy figures into ``out_dir``.

    The JSON and CSV are byte-reproducible for identical reports; figures
    are presentation artifacts rendered with the Agg backend.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    json_path = out / "report.json"
    json_path.write_text(report.to_json(), encoding="utf-8")
    written.append(json_path)

    csv_path = out / "report.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["family", "n", "exact", "ast", "execution"])
        for family_id, stats in sorted(report.families.items()):
            writer.writerow(
                [
                    family_id,
                    stats.n,
                    f"{stats.exact / stats.n:.6f}",
                    f"{stats.ast / stats.n:.6f}",
                    f"{stats.execution / stats.n:.6f}",
                ]
            )
        writer.writerow(
            [
                "TOTAL",
                report.n_examples,
                f"{report.exact_accuracy:.6f}",
                f"{report.ast_accuracy:.6f}",
                f"{report.execution_accuracy:.6f}",
            ]
        )
    written.append(csv_path)

    if figures:
        written.append(_accuracy_figure(report, out / "accuracy_by_family.png"))
    return written


def _accuracy_figure(report: EvalReport, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    family_ids = sorted(report.families)
    x = np.arange(len(family_ids))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6.0, 0.7 * len(family_ids) + 2), 3.6))
    for offset, (label, pick) in enumerate(
        [
            ("exact", lambda s: s.exact / s.n),
            ("ast", lambda s: s.ast / s.n),
            ("execution", lambda s: s.execution / s.n),
        ]
    ):
        ax.bar(
            x + (offset - 1) * width,
            [pick(report.families[f]) for f in family_ids],
            width,
            label=label,
        )
    ax.set_xticks(x)
    ax.set_xticklabels(family_ids, rotation=45, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
