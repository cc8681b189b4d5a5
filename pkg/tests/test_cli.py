import csv
import json

import pytest

from wrsol.cli import CSV_HEADER, main
from wrsol.data import load_examples


def run_cli(*argv):
    return main(list(argv))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture()
def synth_args():
    return [
        "--synth",
        "--dim", "40",
        "--n", "300",
        "--flip", "0.05",
        "--data-seed", "11",
    ]


@pytest.fixture()
def metrics_csv(tmp_path, synth_args, capsys):
    out = tmp_path / "m.csv"
    code = run_cli(
        "run", *synth_args,
        "--algo", "pac", "--wrs", "--k", "8",
        "--seeds", "1,2,3", "--checkpoints", "10",
        "--jobs", "1", "--out", str(out),
    )
    assert code == 0
    capsys.readouterr()
    return out


class TestRun:
    def test_csv_contract(self, metrics_csv):
        raw = metrics_csv.read_bytes()
        assert raw.startswith(b"seed,timestep,model,test_acc,sparsity\n")
        assert b"\r" not in raw
        rows = read_rows(metrics_csv)
        assert {r["model"] for r in rows} == {"base", "wrs", "oracle"}
        assert {r["seed"] for r in rows} == {"1", "2", "3"}
        for r in rows:
            # fixed-point floats with six decimals
            for field in ("test_acc", "sparsity"):
                whole, dot, frac = r[field].partition(".")
                assert dot == "." and len(frac) == 6

    def test_oracle_rows_are_running_max(self, metrics_csv):
        rows = [r for r in read_rows(metrics_csv) if r["seed"] == "2"]
        base = [float(r["test_acc"]) for r in rows if r["model"] == "base"]
        oracle = [float(r["test_acc"]) for r in rows if r["model"] == "oracle"]
        best = 0.0
        for b, o in zip(base, oracle):
            best = max(best, b)
            assert abs(o - best) < 1e-6

    def test_summary_json(self, tmp_path, synth_args, capsys):
        out = tmp_path / "m.csv"
        code = run_cli(
            "run", *synth_args,
            "--algo", "pac", "--wrs", "--seeds", "4,5",
            "--checkpoints", "5", "--jobs", "1", "--out", str(out),
        )
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert set(summary["models"]) == {"base", "wrs", "oracle"}
        assert summary["seeds"] == [4, 5]
        wrs = summary["models"]["wrs"]
        assert len(wrs["final_acc"]["per_seed"]) == 2
        assert 0.0 <= wrs["final_acc"]["mean"] <= 1.0
        assert wrs["rop"]["mean"] == pytest.approx(
            sum(wrs["rop"]["per_seed"]) / 2
        )

    def test_byte_determinism(self, tmp_path, synth_args, capsys):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert run_cli(
                "run", *synth_args,
                "--algo", "fsol", "--wrs", "--seeds", "1,2",
                "--checkpoints", "6", "--jobs", "1", "--out", str(out),
            ) == 0
            outs.append(out.read_bytes())
        capsys.readouterr()
        assert outs[0] == outs[1]

    def test_parallel_matches_serial_bytes(self, tmp_path, synth_args, capsys):
        blobs = []
        for jobs, name in (("1", "serial.csv"), ("2", "par.csv")):
            out = tmp_path / name
            assert run_cli(
                "run", *synth_args,
                "--algo", "pac", "--wrs", "--seeds", "1,2,3,4",
                "--checkpoints", "6", "--jobs", jobs, "--out", str(out),
            ) == 0
            blobs.append(out.read_bytes())
        capsys.readouterr()
        assert blobs[0] == blobs[1]

    def test_baseline_tags(self, tmp_path, synth_args, capsys):
        out = tmp_path / "t.csv"
        assert run_cli(
            "run", *synth_args,
            "--algo", "pac", "--baseline", "movavg", "--window", "8",
            "--seeds", "1", "--checkpoints", "5", "--jobs", "1",
            "--out", str(out),
        ) == 0
        capsys.readouterr()
        assert {r["model"] for r in read_rows(out)} == {
            "base", "movavg", "oracle",
        }

    def test_stdout_only_without_out(self, synth_args, capsys):
        assert run_cli(
            "run", *synth_args,
            "--algo", "pac", "--seeds", "1",
            "--checkpoints", "4", "--jobs", "1",
        ) == 0
        summary = json.loads(capsys.readouterr().out)
        assert "models" in summary


class TestUsageErrors:
    def test_wrs_and_baseline_conflict(self, synth_args, capsys):
        assert run_cli(
            "run", *synth_args, "--wrs", "--baseline", "topk",
            "--seeds", "1", "--jobs", "1",
        ) == 2
        assert "usage error" in capsys.readouterr().err

    def test_voting_zero_requires_wrs(self, synth_args, capsys):
        assert run_cli(
            "run", *synth_args, "--voting-zero", "--seeds", "1", "--jobs", "1",
        ) == 2
        capsys.readouterr()

    def test_both_data_and_synth(self, tmp_path, capsys):
        data = tmp_path / "d.txt"
        data.write_text("+1 1:1.0\n-1 2:1.0\n")
        assert run_cli(
            "run", "--data", str(data), "--synth", "--dim", "4", "--n", "10",
            "--seeds", "1", "--jobs", "1",
        ) == 2
        capsys.readouterr()

    def test_neither_data_nor_synth(self, capsys):
        assert run_cli("run", "--seeds", "1", "--jobs", "1") == 2
        capsys.readouterr()

    def test_synth_requires_dim_and_n(self, capsys):
        assert run_cli("run", "--synth", "--dim", "4", "--jobs", "1") == 2
        capsys.readouterr()

    @pytest.mark.parametrize("seeds", ["", "1,2,1", "1,x"])
    def test_bad_seed_lists(self, synth_args, seeds, capsys):
        assert run_cli(
            "run", *synth_args, "--seeds", seeds, "--jobs", "1",
        ) == 2
        capsys.readouterr()

    def test_unknown_subcommand_exits_two(self, capsys):
        assert run_cli("frobnicate") == 2
        capsys.readouterr()

    def test_sweep_rejects_stepwise_algo(self, synth_args, capsys):
        # argparse choices stop sgdm before the sweep body runs
        assert run_cli("sweep", *synth_args, "--algo", "sgdm") == 2
        capsys.readouterr()


class TestRuntimeErrors:
    def test_missing_data_file(self, capsys):
        assert run_cli(
            "run", "--data", "/nonexistent/x.txt", "--seeds", "1", "--jobs", "1",
        ) == 1
        assert "error" in capsys.readouterr().err

    def test_malformed_data_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("+1 5:2.0 3:1.0\n")
        assert run_cli(
            "run", "--data", str(bad), "--seeds", "1", "--jobs", "1",
        ) == 1
        capsys.readouterr()


class TestConfigFile:
    def test_config_fills_unset_flags(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "synth": True, "dim": 30, "n": 200, "data_seed": 5,
            "algo": "pac", "wrs": True, "k": 6, "seeds": "1,2",
            "checkpoints": 5, "jobs": 1,
        }))
        out = tmp_path / "m.csv"
        assert run_cli("run", "--config", str(cfg), "--out", str(out)) == 0
        capsys.readouterr()
        assert {r["model"] for r in read_rows(out)} == {"base", "wrs", "oracle"}

    def test_explicit_flag_beats_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "synth": True, "dim": 30, "n": 200, "data_seed": 5,
            "algo": "pac", "seeds": "1,2", "checkpoints": 5, "jobs": 1,
        }))
        assert run_cli("run", "--config", str(cfg), "--seeds", "7") == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["seeds"] == [7]

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"reservoir_size": 8}))
        assert run_cli("run", "--config", str(cfg)) == 2
        capsys.readouterr()


class TestSynth:
    def test_round_trip_and_stats(self, tmp_path, capsys):
        out = tmp_path / "stream.txt"
        assert run_cli(
            "synth", "--dim", "25", "--n", "120", "--flip", "0.1",
            "--data-seed", "3", "--out", str(out),
        ) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["n_examples"] == 120
        assert stats["dim"] == 25
        assert 0 <= stats["flipped_labels"] <= 120
        examples = load_examples(str(out))
        assert len(examples) == 120

    def test_synth_requires_out(self, capsys):
        assert run_cli("synth", "--dim", "25", "--n", "120") == 2
        capsys.readouterr()


class TestSweep:
    def test_sweep_csv_and_selection(self, tmp_path, synth_args, capsys):
        out = tmp_path / "sweep.csv"
        assert run_cli(
            "sweep", *synth_args, "--algo", "pac",
            "--seeds", "1,2", "--checkpoints", "5", "--jobs", "1",
            "--out", str(out),
        ) == 0
        summary = json.loads(capsys.readouterr().out)
        rows = read_rows(out)
        assert len(rows) == 7
        assert sum(r["selected"] == "1" for r in rows) == 1
        picked = [r for r in rows if r["selected"] == "1"][0]
        assert picked["mean_final_acc"] == "%.6f" % (
            summary["selected"]["mean_final_acc"]
        )
        assert picked["mean_rop"] == "%.6f" % summary["selected"]["mean_rop"]
        # kept fraction of a 7-cell grid at 2.5 percent is one cell, the
        # winner by final accuracy, so the selected row tops the column
        accs = [float(r["mean_final_acc"]) for r in rows]
        assert float(picked["mean_final_acc"]) == max(accs)
        assert summary["top_kept"] == 1

    def test_fsol_grid_size(self, tmp_path, synth_args, capsys):
        out = tmp_path / "sweep.csv"
        assert run_cli(
            "sweep", *synth_args, "--algo", "fsol",
            "--seeds", "1", "--checkpoints", "4", "--jobs", "2",
            "--out", str(out),
        ) == 0
        capsys.readouterr()
        rows = read_rows(out)
        assert len(rows) == 104
        kept = [r for r in rows if r["selected"] == "1"]
        assert len(kept) == 1


class TestCompare:
    def _emit(self, tmp_path, name, seeds, algo="pac", variant="--wrs", capsys=None):
        out = tmp_path / name
        args = [
            "run", "--synth", "--dim", "40", "--n", "300", "--flip", "0.05",
            "--data-seed", "11", "--algo", algo, variant,
            "--seeds", seeds, "--checkpoints", "8", "--jobs", "1",
            "--out", str(out),
        ]
        assert run_cli(*args) == 0
        if capsys is not None:
            capsys.readouterr()
        return out

    def test_compare_two_variants(self, tmp_path, capsys):
        a = self._emit(tmp_path, "wrs.csv", "1,2,3,4,5", capsys=capsys)
        b = tmp_path / "mov.csv"
        assert run_cli(
            "run", "--synth", "--dim", "40", "--n", "300", "--flip", "0.05",
            "--data-seed", "11", "--algo", "pac", "--baseline", "movavg",
            "--seeds", "1,2,3,4,5", "--checkpoints", "8", "--jobs", "1",
            "--out", str(b),
        ) == 0
        capsys.readouterr()
        deltas = tmp_path / "deltas.csv"
        assert run_cli("compare", str(a), str(b), "--out", str(deltas)) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["n_files"] == 2
        assert len(summary["files"]) == 2
        tags = {e["model"] for e in summary["files"]}
        assert tags == {"wrs", "movavg"}
        for entry in summary["files"]:
            assert entry["win"] in (True, False)
            assert entry["win"] == (entry["rop_model"] < entry["rop_base"])
            assert abs(
                entry["delta"] - (entry["rop_model"] - entry["rop_base"])
            ) < 1e-12
        delta_rows = read_rows(deltas)
        assert len(delta_rows) == 2
        assert delta_rows[0]["model"] == "wrs"

    def test_wilcoxon_on_five_files(self, tmp_path, capsys):
        # vary the dataset per file so the base-vs-wrs deltas differ
        files = []
        for i in range(5):
            out = tmp_path / ("g%d.csv" % i)
            assert run_cli(
                "run", "--synth", "--dim", "40", "--n", "300", "--flip", "0.05",
                "--data-seed", str(20 + i), "--algo", "pac", "--wrs",
                "--seeds", "1,2,3,4,5", "--checkpoints", "8", "--jobs", "1",
                "--out", str(out),
            ) == 0
            files.append(str(out))
        capsys.readouterr()
        assert run_cli("compare", *files) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["note"] is None
        assert 0.0 < summary["wilcoxon_p"] <= 1.0
        assert summary["wilcoxon_statistic"] >= 0.0
        assert summary["wins"] == sum(e["win"] for e in summary["files"])

    def test_compare_needs_two_files(self, tmp_path, capsys):
        a = self._emit(tmp_path, "solo.csv", "1,2", capsys=capsys)
        assert run_cli("compare", str(a)) == 2
        capsys.readouterr()

    def test_mismatched_seed_sets(self, tmp_path, capsys):
        a = self._emit(tmp_path, "a.csv", "1,2", capsys=capsys)
        b = self._emit(tmp_path, "b.csv", "1,3", capsys=capsys)
        assert run_cli("compare", str(a), str(b)) == 1
        capsys.readouterr()

    def test_base_only_files_fall_back_to_base(self, tmp_path, capsys):
        outs = []
        for i, ds in enumerate(("31", "32")):
            out = tmp_path / ("base%d.csv" % i)
            assert run_cli(
                "run", "--synth", "--dim", "40", "--n", "250", "--flip", "0.05",
                "--data-seed", ds, "--algo", "pac",
                "--seeds", "1,2", "--checkpoints", "6", "--jobs", "1",
                "--out", str(out),
            ) == 0
            outs.append(str(out))
        capsys.readouterr()
        assert run_cli("compare", *outs) == 0
        summary = json.loads(capsys.readouterr().out)
        assert all(e["model"] == "base" for e in summary["files"])
        # base measured against itself: rop_model == rop_base, no wins
        assert summary["wins"] == 0

    def test_model_flag_rejects_missing_tag(self, tmp_path, capsys):
        a = self._emit(tmp_path, "x.csv", "1,2", capsys=capsys)
        b = self._emit(tmp_path, "y.csv", "1,2", capsys=capsys)
        assert run_cli("compare", str(a), str(b), "--model", "topk") == 1
        capsys.readouterr()

    def test_degenerate_deltas_note(self, tmp_path, capsys):
        a = self._emit(tmp_path, "same1.csv", "1,2,3", capsys=capsys)
        b = tmp_path / "same2.csv"
        b.write_bytes(a.read_bytes())
        assert run_cli("compare", str(a), str(b)) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["wilcoxon_p"] is None
        assert summary["wilcoxon_statistic"] is None
        assert "degenerate" in summary["note"]

    def test_bad_header_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("seed,step,model,acc\n1,0,base,0.5\n")
        good = self._emit(tmp_path, "ok.csv", "1,2", capsys=capsys)
        assert run_cli("compare", str(good), str(bad)) == 1
        capsys.readouterr()


def test_header_constant_matches_contract():
    assert CSV_HEADER == ["seed", "timestep", "model", "test_acc", "sparsity"]
