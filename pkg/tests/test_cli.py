import json

import numpy as np
import pytest

from condrand.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def trial_files(tmp_path):
    rng = np.random.default_rng(31)
    n = 12
    responses = rng.standard_normal(n)
    resp = tmp_path / "data.csv"
    resp.write_text("\n".join(f"{x:.6f}" for x in responses) + "\n")
    seq = tmp_path / "seq.txt"
    seq.write_text("110100101001\n")
    schedule = tmp_path / "schedule.json"
    schedule.write_text(json.dumps({"looks": [{"r": 6, "n1": 3}, {"r": 12, "n1": 6}]}))
    return {"responses": resp, "assignments": seq, "schedule": schedule}


class TestDist:
    def test_csv_table(self, capsys):
        code, out, _ = run_cli(capsys, "dist", "--design", "bcd:0.6", "--n", "6")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n1,probability"
        probs = [float(l.split(",")[1]) for l in lines[1:]]
        assert len(probs) == 7 and sum(probs) == pytest.approx(1.0, abs=1e-10)

    def test_conditional_column(self, capsys):
        code, out, _ = run_cli(
            capsys, "dist", "--design", "bcd:0.6667", "--n", "4", "--given", "1:1",
            "--target", "2",
        )
        assert code == 0
        value = float(out.strip().splitlines()[1].split(",")[1])
        assert value == pytest.approx(16 / 27, abs=1e-4)

    def test_exact_backend(self, capsys):
        code, out, _ = run_cli(
            capsys, "dist", "--design", "bcd:0.5", "--n", "2", "--backend", "exact"
        )
        assert code == 0
        assert [float(l.split(",")[1]) for l in out.strip().splitlines()[1:]] == [0.25, 0.5, 0.25]


class TestSampleAndPvalue:
    def test_round_trip(self, capsys, tmp_path, trial_files):
        seq_out = tmp_path / "draws.txt"
        code, _, _ = run_cli(
            capsys, "sample", "--design", "bcd:0.6", "--n", "12", "--n1", "6",
            "--count", "3", "--seed", "7", "--out", str(seq_out),
        )
        assert code == 0
        text = seq_out.read_text()
        assert text.startswith("# design=bcd:0.6")
        body = [l for l in text.splitlines() if not l.startswith("#")]
        assert len(body) == 3 and all(len(l) == 12 for l in body)
        # sequences are accepted verbatim as observed assignments
        code, out, _ = run_cli(
            capsys, "pvalue", "--design", "bcd:0.6",
            "--responses", str(trial_files["responses"]),
            "--assignments", str(seq_out), "--reps", "500", "--seed", "5",
        )
        assert code == 0
        payload = json.loads(out)
        assert 0.0 <= payload["estimate"] <= 1.0
        assert payload["seed"] == 5
        assert payload["n_effective"] == 500

    def test_sample_from_schedule(self, capsys, trial_files):
        code, out, _ = run_cli(
            capsys, "sample", "--design", "bcd:0.75",
            "--schedule", str(trial_files["schedule"]), "--count", "5", "--seed", "3",
        )
        assert code == 0
        body = [l for l in out.splitlines() if not l.startswith("#")]
        for line in body:
            assert sum(int(c) for c in line[:6]) == 3
            assert sum(int(c) for c in line) == 6

    def test_exact_pvalue(self, capsys, trial_files):
        code, out, _ = run_cli(
            capsys, "pvalue", "--design", "bcd:0.6667",
            "--responses", str(trial_files["responses"]),
            "--assignments", str(trial_files["assignments"]), "--exact",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["method"] == "exact"
        assert 0.0 <= payload["pvalue"] <= 1.0

    def test_rejection_method(self, capsys, trial_files):
        code, out, _ = run_cli(
            capsys, "pvalue", "--design", "complete",
            "--responses", str(trial_files["responses"]),
            "--assignments", str(trial_files["assignments"]),
            "--method", "rejection", "--reps", "4000", "--seed", "2",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["method"] == "rejection"
        assert payload["n_effective"] < 4000

    def test_deterministic_output(self, capsys, trial_files):
        argv = (
            "pvalue", "--design", "bcd:0.6",
            "--responses", str(trial_files["responses"]),
            "--assignments", str(trial_files["assignments"]),
            "--reps", "400", "--seed", "11",
        )
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2

    def test_stratified(self, capsys, tmp_path):
        rng = np.random.default_rng(4)
        rows = [f"{x:.4f},A" for x in rng.standard_normal(6)]
        rows += [f"{x:.4f},B" for x in rng.standard_normal(4)]
        resp = tmp_path / "strat.csv"
        resp.write_text("\n".join(rows) + "\n")
        seqs = tmp_path / "seqs.txt"
        seqs.write_text("101010\n0110\n")
        code, out, _ = run_cli(
            capsys, "pvalue", "--design", "bcd:0.6", "--responses", str(resp),
            "--assignments", str(seqs), "--stratified", "--reps", "300", "--seed", "6",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["stratified"] is True


class TestBoundariesAndInfo:
    def test_boundaries_json(self, capsys, trial_files):
        code, out, _ = run_cli(
            capsys, "boundaries", "--design", "bcd:0.6667",
            "--schedule", str(trial_files["schedule"]),
            "--responses", str(trial_files["responses"]),
            "--alpha", "0.1", "--reps", "2000", "--seed", "9",
        )
        assert code == 0
        payload = json.loads(out)
        assert len(payload["d"]) == 2
        assert payload["info_fractions"][-1] == 1.0
        assert payload["seed"] == 9

    def test_info_json(self, capsys, trial_files):
        code, out, _ = run_cli(
            capsys, "info", "--design", "bcd:0.6667",
            "--schedule", str(trial_files["schedule"]),
            "--responses", str(trial_files["responses"]),
            "--bootstrap", "20", "--seed", "13",
        )
        assert code == 0
        payload = json.loads(out)
        assert [row["look"] for row in payload["per_look"]] == [1, 2]
        assert payload["per_look"][-1]["t"] == 1.0
        assert 0.0 < payload["per_look"][0]["t"] < 1.0


class TestTables:
    def test_planning_grid(self, capsys):
        code, out, _ = run_cli(capsys, "tables", "--which", "1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "design,n,n1,ratio,k"
        cells = {tuple(l.split(",")[:3]): int(l.split(",")[-1]) for l in lines[1:]}
        assert cells[("bcd:0.666667", "100", "50")] == 5117
        assert cells[("bcd:0.75", "100", "50")] == 3822

    def test_repeatability_small(self, capsys):
        code, out, _ = run_cli(
            capsys, "tables", "--which", "2", "--runs", "5", "--reps", "400", "--seed", "1"
        )
        assert code == 0
        assert "n,n1,v_star,exact,mean,sd,runs" in out


class TestErrorPaths:
    def test_missing_file_exit_4(self, capsys, trial_files):
        code, _, err = run_cli(
            capsys, "pvalue", "--design", "bcd:0.6",
            "--responses", "/nonexistent/data.csv",
            "--assignments", str(trial_files["assignments"]),
        )
        assert code == 4
        assert "/nonexistent/data.csv" in err

    def test_parse_error_names_line(self, capsys, tmp_path, trial_files):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0\nnot-a-number\n")
        code, _, err = run_cli(
            capsys, "pvalue", "--design", "bcd:0.6", "--responses", str(bad),
            "--assignments", str(trial_files["assignments"]),
        )
        assert code == 4
        assert "bad.csv:2" in err

    def test_infeasible_exit_3(self, capsys, tmp_path):
        resp = tmp_path / "r.csv"
        resp.write_text("1.0\n2.0\n3.0\n4.0\n")
        seq = tmp_path / "s.txt"
        seq.write_text("1111\n")
        code, _, err = run_cli(
            capsys, "pvalue", "--design", "bcd:1.0", "--responses", str(resp),
            "--assignments", str(seq), "--reps", "100", "--seed", "1",
        )
        assert code == 3

    def test_usage_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["dist", "--design", "bcd:0.6"])  # missing --n
        assert exc.value.code == 2

    def test_reps_env_override(self, capsys, trial_files, monkeypatch):
        monkeypatch.setenv("CONDRAND_REPS", "123")
        code, out, _ = run_cli(
            capsys, "pvalue", "--design", "bcd:0.6",
            "--responses", str(trial_files["responses"]),
            "--assignments", str(trial_files["assignments"]), "--seed", "4",
        )
        assert code == 0
        assert json.loads(out)["n_effective"] == 123
