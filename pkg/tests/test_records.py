import json
import math

import pytest

from genuq.errors import ParseError, RecordValidationError
from genuq.records import (Dataset, EnsembleTrace, GenerationRecord,
                           SampledOutput, TokenStep, load_dataset,
                           record_from_dict, save_dataset, validate_record)

from conftest import record, sample, step


def full_record(rid="r1") -> GenerationRecord:
    steps = (
        TokenStep(token_id=5, token_text="a", logprob=-0.5,
                  alternatives=((5, -0.5), (6, -1.5)),
                  unconditional_logprob=-0.7),
        TokenStep(token_id=6, token_text=" b", logprob=-0.25,
                  alternatives=((6, -0.25), (5, -2.0))),
    )
    samples = (
        SampledOutput(text="a b", total_logprob=-0.75, length=2,
                      tokens=steps),
        SampledOutput(text="c", total_logprob=-1.0, length=1),
    )
    traces = (
        EnsembleTrace(model_id="m0", steps=(((5, 0.5), (6, 0.5)),
                                            ((6, 1.0),))),
        EnsembleTrace(model_id="m1", steps=(((5, 0.25), (6, 0.75)),
                                            ((6, 0.9), (5, 0.1)))),
    )
    return GenerationRecord(
        id=rid, input_text="q", output_text="a b", output_tokens=steps,
        samples=samples, ensemble_traces=traces,
        embedding=(0.25, -1.5), reference_text="a b", p_true=0.75)


class TestValidation:
    def test_clean_record_has_empty_report(self):
        assert validate_record(full_record()) == []

    def test_positive_logprob_names_field(self):
        r = record(steps=[step(0.5)])
        report = validate_record(r)
        assert len(report) == 1
        assert "logprob" in report[0].field

    def test_alternative_mass_violation(self):
        r = record(steps=[step(math.log(0.5), token_id=1,
                               alternatives=[(1, math.log(0.8)),
                                             (2, math.log(0.5))])])
        fields = {v.field for v in validate_record(r)}
        assert any("alternatives mass" in f for f in fields)

    def test_unsorted_alternatives(self):
        r = record(steps=[step(-0.1, token_id=1,
                               alternatives=[(2, -2.0), (1, -0.1)])])
        assert any("order" in v.field for v in validate_record(r))

    def test_chosen_token_must_appear_in_alternatives(self):
        r = record(steps=[step(-0.1, token_id=9,
                               alternatives=[(1, -0.2), (2, -2.0)])])
        assert any("membership" in v.field for v in validate_record(r))

    def test_ensemble_misalignment(self):
        traces = (EnsembleTrace("m0", (((1, 1.0),),)),
                  EnsembleTrace("m1", (((1, 1.0),), ((1, 1.0),))))
        r = record(steps=[step(-0.1)], traces=traces)
        assert any(v.field == "ensemble alignment"
                   for v in validate_record(r))

    def test_sample_total_mismatch(self):
        bad = SampledOutput(text="a", total_logprob=-5.0, length=1,
                            tokens=(step(-0.1),))
        assert any("total_logprob" in v.field
                   for v in validate_record(record(samples=[bad])))

    def test_p_true_out_of_range(self):
        assert any(v.field == "p_true"
                   for v in validate_record(record(p_true=1.5)))


class TestLoadSave:
    def test_empty_file_gives_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert len(load_dataset(path)) == 0

    def test_logprob_sum(self, tmp_path):
        steps = [step(-0.6931, token_id=1), step(-0.6931, token_id=2)]
        r = record(steps=steps)
        path = tmp_path / "one.jsonl"
        save_dataset(Dataset(records=(r,)), path)
        loaded = load_dataset(path).records[0]
        total = sum(s.logprob for s in loaded.output_tokens)
        assert total == pytest.approx(-1.3862, abs=1e-6)

    def test_positive_logprob_rejected_at_load(self, tmp_path):
        r = record(steps=[step(0.5)])
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({
            "id": "x", "input_text": "", "output_text": "",
            "output_tokens": [{"token_id": 1, "token_text": "t",
                               "logprob": 0.5, "alternatives": []}],
        }) + "\n")
        with pytest.raises(RecordValidationError) as err:
            load_dataset(path)
        assert "logprob" in err.value.field

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "input_text": "", "output_text": ""}\n'
                        "{nope}\n")
        with pytest.raises(ParseError) as err:
            load_dataset(path)
        assert err.value.line_no == 2

    def test_duplicate_ids_rejected(self, tmp_path):
        r = {"id": "dup", "input_text": "", "output_text": ""}
        path = tmp_path / "dup.jsonl"
        path.write_text(json.dumps(r) + "\n" + json.dumps(r) + "\n")
        with pytest.raises(RecordValidationError) as err:
            load_dataset(path)
        assert err.value.field == "id"

    def test_round_trip_identity(self, tmp_path):
        ds = Dataset(records=tuple(full_record(f"r{i}") for i in range(3)))
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path)
        assert load_dataset(path).records == ds.records

    def test_optional_fields_stay_absent(self, tmp_path):
        r = record(steps=[step(-0.5)])
        path = tmp_path / "min.jsonl"
        save_dataset(Dataset(records=(r,)), path)
        obj = json.loads(path.read_text())
        for key in ("embedding", "reference_text", "p_true"):
            assert key not in obj
        assert load_dataset(path).records[0] == r

    def test_zero_records_saves_empty_file(self, tmp_path):
        path = tmp_path / "none.jsonl"
        save_dataset(Dataset(records=()), path)
        assert path.read_text() == ""

    def test_two_loads_identical(self, tmp_path):
        path = tmp_path / "ds.jsonl"
        save_dataset(Dataset(records=(full_record(),)), path)
        assert load_dataset(path) == load_dataset(path)

    def test_unknown_keys_ignored(self):
        obj = {"id": "x", "input_text": "", "output_text": "",
               "mystery": 42}
        assert record_from_dict(obj).id == "x"

    def test_trace_probabilities_renormalized(self):
        obj = {"id": "x", "input_text": "", "output_text": "",
               "ensemble_traces": [
                   {"model_id": "m", "steps": [[[1, 2.0], [2, 2.0]]]},
                   {"model_id": "n", "steps": [[[1, 0.5], [2, 0.5]]]}]}
        r = record_from_dict(obj)
        total = sum(p for _, p in r.ensemble_traces[0].steps[0])
        assert total == pytest.approx(1.0, abs=1e-12)
        assert validate_record(r) == []

    def test_missing_file_raises_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_dataset(tmp_path / "missing.jsonl")
