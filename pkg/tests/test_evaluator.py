import json

import pytest

from aerocmd.corpus import (
    DatasetExample,
    expand_templates,
    load_templates,
    shipped_templates_path,
)
from aerocmd.dsl import parse_program, render_program
from aerocmd.evaluator import (
    EXECUTION_TIMEOUT_S,
    ast_match,
    evaluate,
    exact_match,
    execution_match,
    match_prediction,
    save_report,
)
from aerocmd.rng import XorShift64Star
from aerocmd.translator import NoConfidentCandidate, TranslationCandidate


class TestExactMatch:
    def test_display_wrapper_canonicalizes(self):
        assert exact_match("getGpsData()", "print(AirSim_client.getGpsData())")

    def test_identity(self):
        assert exact_match("hoverAsync()", "hoverAsync()")

    def test_unparseable_prediction_false(self):
        assert not exact_match("explode()", "hoverAsync()")

    def test_formatting_noise_canonicalizes(self):
        assert exact_match(
            "moveByVelocityAsync(2.0,0.,0,duration=2)",
            "moveByVelocityAsync(2, 0, 0, duration=2)",
        )


class TestAstMatch:
    def test_keyword_positional(self):
        assert ast_match(
            "moveByVelocityAsync(2,0,0,duration=2)",
            "moveByVelocityAsync(vx=2,vy=0,vz=0,duration=2)",
        )

    def test_yaw_wrap(self):
        assert ast_match("rotateToYawAsync(180)", "rotateToYawAsync(-180)")

    def test_different_values(self):
        assert not ast_match(
            "moveByVelocityAsync(2,0,0,duration=2)", "moveByVelocityAsync(1,0,0,duration=4)"
        )


class TestExecutionMatch:
    def test_same_endpoint_different_profile(self):
        # 4 m/s for 1 s and 2 m/s for 2 s both end 4 m north
        assert execution_match(
            "moveByVelocityAsync(4,0,0,duration=1)", "moveByVelocityAsync(2,0,0,duration=2)"
        )

    def test_reflexive(self):
        for program in [
            "hoverAsync()",
            "moveByVelocityAsync(2,0,0,duration=2)",
            "takeoffAsync()\nmoveToPositionAsync(5,5,-8,2)\nlandAsync()",
            "getGpsData()",
            "simGetImage(0, scene)",
        ]:
            assert execution_match(program, program), program

    def test_different_endpoint(self):
        assert not execution_match(
            "moveByVelocityAsync(2,0,0,duration=1)", "moveByVelocityAsync(2,0,0,duration=2)"
        )

    def test_unparseable_prediction_fails(self):
        assert not execution_match("explode()", "hoverAsync()")

    def test_validation_rejected_prediction_fails(self):
        # 50 m/s exceeds the default 15 m/s envelope
        assert not execution_match(
            "moveByVelocityAsync(50,0,0,duration=1)", "hoverAsync()"
        )

    def test_timeout_fails(self):
        slow = f"moveByVelocityAsync(1,0,0,duration={EXECUTION_TIMEOUT_S + 5:.0f})"
        assert not execution_match(slow, slow)

    def test_query_payload_compared(self):
        # same final state, different query results (different poses at query time)
        pred = "moveByVelocityAsync(2,0,0,duration=2)\ngetGpsData()"
        gold = "getGpsData()\nmoveByVelocityAsync(2,0,0,duration=2)"
        assert not execution_match(pred, gold)

    def test_query_kind_mismatch(self):
        assert not execution_match("getGpsData()", "getMultirotorState()")

    def test_equivalent_queries_match(self):
        pred = "takeoffAsync()\nprint(getGpsData())"
        gold = "takeoffAsync()\ngetGpsData()"
        assert execution_match(pred, gold)

    def test_landed_flag_compared(self):
        assert not execution_match("takeoffAsync()", "takeoffAsync()\nlandAsync()")


class TestNesting:
    def test_metric_ordering_on_random_pairs(self):
        templates = load_templates(shipped_templates_path())
        examples = expand_templates(templates, seed=11, per_family=15)
        programs = [e.gold_program for e in examples]
        rng = XorShift64Star(13)
        checked = 0
        for _ in range(150):
            gold = programs[rng.below(len(programs))]
            roll = rng.below(4)
            if roll == 0:
                pred = gold
            elif roll == 1:
                pred = programs[rng.below(len(programs))]
            elif roll == 2:
                pred = gold.replace("2", "3")  # numeric mutation
            else:
                pred = gold[: max(3, len(gold) // 2)]  # likely unparseable
            result = match_prediction(pred, gold)
            assert result.ast or not result.exact
            assert result.execution or not result.ast
            checked += 1
        assert checked == 150


def make_translator(mapping):
    def translator(utterance):
        if utterance not in mapping:
            raise NoConfidentCandidate(0.0)
        rendered = mapping[utterance]
        program = parse_program(rendered)
        return [
            TranslationCandidate(
                program=program,
                rendered=render_program(program),
                score=1.0,
                corpus_entry_id="test",
            )
        ]

    return translator


DATASET = [
    DatasetExample("go up", "moveByVelocityAsync(0, 0, -2, duration=1)", "up"),
    DatasetExample("hover", "hoverAsync()", "hover"),
    DatasetExample("look", "getGpsData()", "gps"),
]


class TestEvaluate:
    def test_perfect_translator_scores_one(self):
        translator = make_translator({e.utterance: e.gold_program for e in DATASET})
        report = evaluate(DATASET, translator)
        assert report.exact_accuracy == 1.0
        assert report.ast_accuracy == 1.0
        assert report.execution_accuracy == 1.0
        assert report.failures == []

    def test_no_candidates_scores_zero(self):
        report = evaluate(DATASET, make_translator({}))
        assert report.exact_accuracy == 0.0
        assert report.ast_accuracy == 0.0
        assert report.execution_accuracy == 0.0
        assert len(report.failures) == len(DATASET)
        assert all(f["stage"].startswith("translate") for f in report.failures)

    def test_metric_ordering_in_report(self):
        mapping = {
            "go up": "moveByVelocityAsync(0, 0, -1, duration=2)",  # exec-equal only
            "hover": "hoverAsync()",  # exact
            "look": "getMultirotorState()",  # wrong
        }
        report = evaluate(DATASET, make_translator(mapping))
        assert report.exact_accuracy <= report.ast_accuracy <= report.execution_accuracy
        assert report.exact_accuracy == pytest.approx(1 / 3)
        assert report.execution_accuracy == pytest.approx(2 / 3)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            evaluate([], make_translator({}))

    def test_report_deterministic(self):
        translator = make_translator({e.utterance: e.gold_program for e in DATASET})
        a = evaluate(DATASET, translator).to_json()
        b = evaluate(DATASET, translator).to_json()
        assert a == b

    def test_per_family_breakdown(self):
        translator = make_translator({e.utterance: e.gold_program for e in DATASET})
        report = evaluate(DATASET, translator)
        assert set(report.families) == {"up", "hover", "gps"}
        assert report.families["up"].n == 1


class TestSaveReport:
    def test_files_written(self, tmp_path):
        translator = make_translator({e.utterance: e.gold_program for e in DATASET})
        report = evaluate(DATASET, translator)
        written = save_report(report, tmp_path)
        names = {p.name for p in written}
        assert names == {"report.json", "report.csv", "accuracy_by_family.png"}
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["accuracy"]["exact"] == 1.0
        csv_text = (tmp_path / "report.csv").read_text()
        assert csv_text.splitlines()[0] == "family,n,exact,ast,execution"
        assert (tmp_path / "accuracy_by_family.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_json_and_csv_reproducible(self, tmp_path):
        translator = make_translator({e.utterance: e.gold_program for e in DATASET})
        save_report(evaluate(DATASET, translator), tmp_path / "a", figures=False)
        save_report(evaluate(DATASET, translator), tmp_path / "b", figures=False)
        assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
        assert (tmp_path / "a/report.csv").read_bytes() == (tmp_path / "b/report.csv").read_bytes()

    def test_table_renders(self):
        translator = make_translator({e.utterance: e.gold_program for e in DATASET})
        table = evaluate(DATASET, translator).table()
        assert "TOTAL" in table and "hover" in table
