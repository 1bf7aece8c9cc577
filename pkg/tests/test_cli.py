"""End-to-end CLI tests driving main() with argv lists."""

import json
import os

import pytest

from bnnfi.cli import main

TINY_ARGS = ["--shape", "8-4-2", "--pe", "2-2", "--simd", "2-2"]


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    path = str(tmp / "tiny.bnnw")
    assert main(["gen-model", "--out", path, "--seed", "11", *TINY_ARGS]) == 0
    return path


@pytest.fixture(scope="module")
def campaign_records(model_path, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("records")
    cfg = tmp / "c.cfg"
    cfg.write_text(
        "mode = exhaustive\nspace = transient\nseed = 5\n"
        f"model = {model_path}\nworkers = 2\n"
    )
    out = str(tmp / "records.jsonl")
    assert main(["campaign", "--config", str(cfg), "--out", out, "--quiet"]) == 0
    return out


class TestGenModelAndInfer:
    def test_gen_model_writes_file(self, model_path):
        assert os.path.getsize(model_path) > 0

    def test_infer_classes_agree(self, model_path, capsys):
        assert main(["infer", "--model", model_path, "--seed", "3"]) == 0
        out = capsys.readouterr().out
        lines = {l.split(":")[0]: l for l in out.splitlines()}
        golden = lines["golden class"].split(":")[1].strip()
        sim = lines["sim class"].split(":")[1].strip()
        assert golden == sim
        assert "latency" in lines

    def test_infer_output_is_byte_identical(self, model_path, capsys):
        main(["infer", "--model", model_path, "--seed", "3"])
        first = capsys.readouterr().out
        main(["infer", "--model", model_path, "--seed", "3"])
        assert capsys.readouterr().out == first

    def test_infer_trace_dump(self, model_path, tmp_path, capsys):
        trace = str(tmp_path / "trace.txt")
        assert main(["infer", "--model", model_path, "--trace", trace]) == 0
        capsys.readouterr()
        lines = open(trace).read().splitlines()
        assert lines and all(len(l.split(",")) == 5 for l in lines)

    def test_infer_from_idx(self, model_path, tmp_path, capsys):
        # an 8-input model cannot consume 784-pixel images; generate one that can
        mnist_model = str(tmp_path / "m784.bnnw")
        main(["gen-model", "--out", mnist_model, "--shape", "784-16-10",
              "--pe", "4-2", "--simd", "16-4", "--seed", "1"])
        from tests.test_io import make_idx_images, make_idx_labels

        blob, _ = make_idx_images(count=2)
        (tmp_path / "imgs").write_bytes(blob)
        (tmp_path / "lbls").write_bytes(make_idx_labels([7, 2]))
        capsys.readouterr()
        assert main([
            "infer", "--model", mnist_model,
            "--images", str(tmp_path / "imgs"),
            "--labels", str(tmp_path / "lbls"),
            "--index", "1",
        ]) == 0
        out = capsys.readouterr().out
        assert "label: 2" in out


class TestRegistersAndPlan:
    def test_registers_dump(self, model_path, capsys):
        assert main(["registers", "--model", model_path]) == 0
        out = capsys.readouterr().out
        assert "weight_addr" in out
        assert "total: 18 registers, 134 bits" in out

    def test_plan_persistent_statistical(self, model_path, capsys):
        assert main([
            "plan", "--model", model_path, "--space", "persistent",
            "--confidence", "0.99", "--moe", "0.01",
        ]) == 0
        out = capsys.readouterr().out
        from bnnfi.faults import sample_size

        n_line = next(l for l in out.splitlines() if l.startswith("N ="))
        n_space = int(n_line.split("=")[1])
        expected = sample_size(n_space, 0.99, 0.01)
        assert f"n = {expected}" in out

    def test_plan_transient_exhaustive(self, model_path, capsys):
        assert main(["plan", "--model", model_path, "--space", "transient"]) == 0
        out = capsys.readouterr().out
        assert "N = " in out and "(exhaustive)" in out


class TestCampaignAndReport:
    def test_campaign_summary(self, campaign_records, capsys):
        records = [json.loads(l) for l in open(campaign_records)]
        assert records
        meta = json.load(open(campaign_records + ".meta.json"))
        assert meta["space_size"] == len(records)

    def test_report_by_layer(self, campaign_records, tmp_path, capsys):
        out = str(tmp_path / "rep")
        assert main([
            "report", campaign_records, "--by", "layer", "--format", "csv",
            "--out", out,
        ]) == 0
        assert os.path.exists(os.path.join(out, "layer_report.csv"))
        assert os.path.exists(os.path.join(out, "layer_report.png"))

    def test_report_by_phase_json(self, campaign_records, tmp_path, capsys):
        out = str(tmp_path / "rep")
        assert main([
            "report", campaign_records, "--by", "phase", "--format", "json",
            "--out", out, "--no-figures",
        ]) == 0
        data = json.load(open(os.path.join(out, "phase_report.json")))
        assert data["columns"][0] == "phase"
        assert not os.path.exists(os.path.join(out, "phase_report.png"))

    def test_report_by_register_plotdata(self, campaign_records, tmp_path, capsys):
        out = str(tmp_path / "rep")
        assert main([
            "report", campaign_records, "--by", "register", "--format", "plotdata",
            "--out", out,
        ]) == 0
        assert os.path.exists(os.path.join(out, "register_report.dat"))
        assert os.path.exists(os.path.join(out, "register_report.png"))
        printed = capsys.readouterr().out
        assert "top" in printed and "critical" in printed

    def test_report_empty_records_fails(self, tmp_path, capsys):
        empty = tmp_path / "none.jsonl"
        empty.write_text("")
        assert main(["report", str(empty), "--by", "layer"]) == 1
        assert "error" in capsys.readouterr().err


class TestErrors:
    def test_unknown_subcommand_usage_error(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_unknown_flag_usage_error(self, model_path, capsys):
        assert main(["registers", "--model", model_path, "--bogus"]) == 2

    def test_missing_model_file(self, capsys):
        assert main(["registers", "--model", "/nonexistent.bnnw"]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mode = exhaustive\nspace = transient\nwat = 1\n")
        assert main(["campaign", "--config", str(cfg), "--out",
                     str(tmp_path / "r.jsonl"), "--quiet"]) == 1
