import json
import os
import subprocess
import sys

import pytest

from unexpect.cli import main


def run_cli(capsys, argv, stdin_text=None, monkeypatch=None):
    if stdin_text is not None:
        import io

        monkeypatch.setattr("sys.stdin", io.StringIO(stdin_text))
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


EVENTS = "\n".join(f'{{"t": {t}, "s": "{s}"}}'
                   for t, s in enumerate("ABAACABAA")) + "\n"


class TestTrack:
    def test_empty_input_empty_trace(self, capsys, monkeypatch):
        code, out, err = run_cli(capsys, ["track"], stdin_text="",
                                 monkeypatch=monkeypatch)
        assert code == 0
        assert out == ""

    def test_jsonl_trace_on_stdout(self, capsys, monkeypatch):
        code, out, _ = run_cli(capsys, ["track", "--alpha", "0.9"],
                               stdin_text=EVENTS, monkeypatch=monkeypatch)
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 9
        first = json.loads(lines[0])
        assert first["novelty"] is True and first["u_raw"] is None

    def test_csv_trace_has_header(self, tmp_path, capsys):
        events = write(tmp_path / "e.jsonl", EVENTS)
        out_path = tmp_path / "trace.csv"
        code, _, _ = run_cli(
            capsys,
            ["track", "--emit", "csv", "--input", events,
             "--output", str(out_path)],
        )
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "t,symbol,c_stm,c_ltm,u_raw,u_clamped,novelty,change_flag"
        assert len(lines) == 10

    def test_bare_token_input(self, capsys, monkeypatch):
        code, out, _ = run_cli(capsys, ["track"], stdin_text="A\nB\nA\n",
                               monkeypatch=monkeypatch)
        assert code == 0
        assert [json.loads(l)["t"] for l in out.strip().split("\n")] == [0, 1, 2]

    def test_bad_alpha_names_the_flag(self, capsys):
        code, _, err = run_cli(capsys, ["track", "--alpha", "1.5"])
        assert code == 1
        assert "--alpha" in err and "(0, 1)" in err

    def test_unknown_flag_exits_one(self, capsys):
        code, _, err = run_cli(capsys, ["track", "--nonsense"])
        assert code == 1

    def test_non_monotonic_time_exits_two_with_line(self, capsys, monkeypatch):
        bad = '{"t": 3, "s": "A"}\n{"t": 3, "s": "B"}\n'
        code, _, err = run_cli(capsys, ["track"], stdin_text=bad,
                               monkeypatch=monkeypatch)
        assert code == 2
        assert "line 2" in err

    def test_invalid_json_event_exits_two_with_line(self, capsys, monkeypatch):
        bad = '{"t": 0, "s": "A"}\n{"t": 1 "s"}\n'
        code, _, err = run_cli(capsys, ["track"], stdin_text=bad,
                               monkeypatch=monkeypatch)
        assert code == 2
        assert "line 2" in err

    def test_failed_run_leaves_no_output_file(self, tmp_path, capsys):
        events = write(tmp_path / "bad.jsonl",
                       '{"t": 3, "s": "A"}\n{"t": 1, "s": "B"}\n')
        out_path = tmp_path / "trace.jsonl"
        code, _, _ = run_cli(
            capsys, ["track", "--input", events, "--output", str(out_path)]
        )
        assert code == 2
        assert not out_path.exists()
        assert not list(tmp_path.glob(".unexpect-*"))  # temp cleaned up

    def test_config_file_merges_under_flags(self, tmp_path, capsys):
        config = write(tmp_path / "cfg.json",
                       json.dumps({"alpha": 0.5, "theta": 9.0}))
        events = write(tmp_path / "e.jsonl", EVENTS)
        out_path = tmp_path / "t.jsonl"
        code, _, _ = run_cli(
            capsys,
            ["track", "--config", config, "--alpha", "0.9",
             "--input", events, "--output", str(out_path),
             "--snapshot-out", str(tmp_path / "snap.json")],
        )
        assert code == 0
        snap = json.loads((tmp_path / "snap.json").read_text())
        assert snap["config"]["alpha"] == 0.9   # explicit flag wins
        assert snap["config"]["theta"] == 9.0   # file fills the rest

    def test_config_file_rejects_unknown_keys(self, tmp_path, capsys):
        config = write(tmp_path / "cfg.json", json.dumps({"alhpa": 0.5}))
        code, _, err = run_cli(capsys, ["track", "--config", config])
        assert code == 1
        assert "alhpa" in err

    def test_stability_diagnostic_on_stderr(self, tmp_path, capsys):
        events = write(tmp_path / "e.jsonl",
                       "\n".join(["A"] * 200) + "\n")
        code, out, err = run_cli(
            capsys,
            ["track", "--alpha", "0.5", "--input", events,
             "--stability-m", "50", "--stability-delta", "0.01"],
        )
        assert code == 0
        assert "all stable" in err
        assert "stable" not in out

    def test_stability_flags_must_pair(self, capsys):
        code, _, err = run_cli(capsys, ["track", "--stability-m", "10"])
        assert code == 1
        assert "--stability-delta" in err


class TestSnapshotReplay:
    def make_stream(self, tmp_path, n=40):
        rows = [f'{{"t": {t}, "s": "{"AB"[t % 2]}"}}' for t in range(n)]
        full = write(tmp_path / "full.jsonl", "\n".join(rows) + "\n")
        head = write(tmp_path / "head.jsonl", "\n".join(rows[:25]) + "\n")
        tail = write(tmp_path / "tail.jsonl", "\n".join(rows[25:]) + "\n")
        return full, head, tail

    def test_snapshot_then_replay_matches_uninterrupted(self, tmp_path, capsys):
        full, head, tail = self.make_stream(tmp_path)
        args = ["--alpha", "0.9"]
        full_out = tmp_path / "full_trace.jsonl"
        run_cli(capsys, ["track", *args, "--input", full,
                         "--output", str(full_out)])
        snap = tmp_path / "snap.json"
        head_out = tmp_path / "head_trace.jsonl"
        run_cli(capsys, ["track", *args, "--input", head,
                         "--output", str(head_out), "--snapshot-out", str(snap)])
        tail_out = tmp_path / "tail_trace.jsonl"
        code, _, _ = run_cli(
            capsys,
            ["replay", "--snapshot", str(snap), "--input", tail,
             "--output", str(tail_out)],
        )
        assert code == 0
        assert (head_out.read_text() + tail_out.read_text()
                == full_out.read_text())

    def test_track_snapshot_in_rejects_config_flags(self, tmp_path, capsys):
        full, head, _ = self.make_stream(tmp_path)
        snap = tmp_path / "snap.json"
        run_cli(capsys, ["track", "--input", head, "--snapshot-out", str(snap),
                         "--output", os.devnull])
        code, _, err = run_cli(
            capsys,
            ["track", "--snapshot-in", str(snap), "--estimator", "fir",
             "--input", full],
        )
        assert code == 1
        assert "--estimator" in err and "snapshot" in err

    def test_replay_rejects_stale_events(self, tmp_path, capsys):
        full, head, _ = self.make_stream(tmp_path)
        snap = tmp_path / "snap.json"
        run_cli(capsys, ["track", "--input", head, "--snapshot-out", str(snap),
                         "--output", os.devnull])
        code, _, err = run_cli(
            capsys, ["replay", "--snapshot", str(snap), "--input", head]
        )
        assert code == 2
        assert "line 1" in err

    def test_corrupt_snapshot_exits_two(self, tmp_path, capsys):
        snap = write(tmp_path / "snap.json", '{"format_version": 7}')
        code, _, err = run_cli(capsys, ["replay", "--snapshot", snap])
        assert code == 2
        assert "version" in err


class TestExplain:
    GRAPH = {
        "nodes": [{"id": "c1", "prior_bits": 2.0},
                  {"id": "c2", "prior_bits": 4.0},
                  {"id": "s"}],
        "edges": [{"from": "c1", "to": "s", "bits": 3.0},
                  {"from": "c2", "to": "s", "bits": 0.5}],
    }

    def test_graph_mode(self, tmp_path, capsys):
        graph = write(tmp_path / "g.json", json.dumps(self.GRAPH))
        code, out, _ = run_cli(
            capsys, ["explain", "--graph", graph, "--target", "s",
                     "--cd", "3.0"]
        )
        assert code == 0
        result = json.loads(out)
        assert result["best_cause"] == "c2"
        assert result["chain"] == ["c2", "s"]
        assert result["generation_cost_bits"] == 4.5
        assert result["u_raw_bits"] == 1.5

    def test_bayes_mode_reproduces_posterior(self, tmp_path, capsys):
        model = write(tmp_path / "m.json", json.dumps({
            "observation": "O",
            "evidence": 0.1,
            "causes": {"M": {"prior": 0.01, "likelihood": 0.9}},
        }))
        code, out, _ = run_cli(
            capsys, ["explain", "--bayes", model, "--target", "O"]
        )
        assert code == 0
        result = json.loads(out)
        assert result["posterior"] == pytest.approx(0.09, abs=1e-9)
        assert result["u_raw_bits"] == pytest.approx(3.4739311883324127, abs=1e-9)

    def test_requires_exactly_one_source(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, ["explain", "--target", "s"])
        assert code == 1
        graph = write(tmp_path / "g.json", json.dumps(self.GRAPH))
        code, _, err = run_cli(
            capsys,
            ["explain", "--graph", graph, "--bayes", graph, "--target", "s"],
        )
        assert code == 1

    def test_unknown_target_is_data_error(self, tmp_path, capsys):
        graph = write(tmp_path / "g.json", json.dumps(self.GRAPH))
        code, _, err = run_cli(
            capsys, ["explain", "--graph", graph, "--target", "nope",
                     "--cd", "1.0"]
        )
        assert code == 2
        assert "nope" in err


class TestDivergenceCommand:
    def test_file_pair_report(self, tmp_path, capsys):
        world = write(tmp_path / "w.json",
                      json.dumps({"symbols": ["a", "b"], "mass": [0.75, 0.25]}))
        mind = write(tmp_path / "m.json",
                     json.dumps({"symbols": ["a", "b"], "bits": [1.0, 1.0]}))
        code, out, _ = run_cli(
            capsys, ["divergence", "--world", world, "--mind", mind]
        )
        assert code == 0
        report = json.loads(out)
        assert report["d_wrel"] == pytest.approx(-0.18872187554086717, abs=1e-9)
        assert report["d_drel"] == pytest.approx(0.20751874963942185, abs=1e-9)

    def test_csv_emit(self, tmp_path, capsys):
        world = write(tmp_path / "w.json",
                      json.dumps({"symbols": ["a", "b"], "mass": [0.5, 0.5]}))
        mind = write(tmp_path / "m.json",
                     json.dumps({"symbols": ["a", "b"], "bits": [1.0, 1.0]}))
        code, out, _ = run_cli(
            capsys,
            ["divergence", "--world", world, "--mind", mind, "--emit", "csv"],
        )
        assert code == 0
        assert out.startswith("field,value\n")
        assert "u.a," in out

    def test_incomplete_mind_needs_flag(self, tmp_path, capsys):
        world = write(tmp_path / "w.json",
                      json.dumps({"symbols": ["a", "b"], "mass": [0.5, 0.5]}))
        mind = write(tmp_path / "m.json",
                     json.dumps({"symbols": ["a", "b"], "bits": [2.0, 2.0]}))
        code, _, err = run_cli(
            capsys, ["divergence", "--world", world, "--mind", mind]
        )
        assert code == 2
        assert "normalize" in err
        code, out, _ = run_cli(
            capsys,
            ["divergence", "--world", world, "--mind", mind, "--normalize-mind"],
        )
        assert code == 0

    def test_from_trace_builds_pair(self, tmp_path, capsys):
        events = write(
            tmp_path / "events.jsonl",
            "\n".join(f'{{"t": {t}, "s": "{"AAAB"[t % 4]}"}}'
                      for t in range(2000)) + "\n",
        )
        trace = tmp_path / "trace.jsonl"
        run_cli(capsys, ["track", "--alpha", "0.99", "--input", events,
                         "--output", str(trace)])
        code, out, _ = run_cli(
            capsys,
            ["divergence", "--from-trace", "--input", str(trace),
             "--normalize-mind"],
        )
        assert code == 0
        report = json.loads(out)
        assert report["symbols"] == ["A", "B"]
        # empirical world is (0.75, 0.25) and the learned code is close
        assert abs(report["d_wrel"]) < 0.15

    def test_from_trace_rejects_mind_flag(self, capsys):
        code, _, err = run_cli(
            capsys, ["divergence", "--from-trace", "--mind", "m.json"]
        )
        assert code == 1
        assert "--mind" in err

    def test_tau_must_be_positive(self, capsys):
        code, _, err = run_cli(capsys, ["divergence", "--tau", "0"])
        assert code == 1
        assert "--tau" in err


class TestSimulate:
    def test_deterministic_output(self, tmp_path, capsys):
        spec = write(tmp_path / "spec.json", json.dumps({
            "kind": "stationary", "length": 100, "seed": 12,
            "symbols": ["x", "y"], "mass": [0.6, 0.4],
        }))
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert run_cli(capsys, ["simulate", "--spec", spec, "--out", str(a)])[0] == 0
        assert run_cli(capsys, ["simulate", "--spec", spec, "--out", str(b)])[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_dist_out_writes_distribution(self, tmp_path, capsys):
        spec = write(tmp_path / "spec.json", json.dumps({
            "kind": "zipf", "length": 10, "seed": 1, "alphabet": 4,
        }))
        dist_path = tmp_path / "w.json"
        code, _, _ = run_cli(
            capsys, ["simulate", "--spec", spec, "--out", os.devnull,
                     "--dist-out", str(dist_path)]
        )
        assert code == 0
        obj = json.loads(dist_path.read_text())
        assert obj["mass"] == pytest.approx([0.48, 0.24, 0.16, 0.12])

    def test_dist_out_invalid_for_changepoint(self, tmp_path, capsys):
        spec = write(tmp_path / "spec.json", json.dumps({
            "kind": "changepoint", "length": 10, "seed": 1, "t_star": 5,
            "symbols": ["x", "y"], "mass": [0.5, 0.5],
            "mass_after": [0.25, 0.75],
        }))
        code, _, err = run_cli(
            capsys, ["simulate", "--spec", spec, "--dist-out", "w.json",
                     "--out", os.devnull]
        )
        assert code == 1
        assert "--dist-out" in err

    def test_bad_spec_is_data_error(self, tmp_path, capsys):
        spec = write(tmp_path / "spec.json", json.dumps({"kind": "weird",
                                                         "length": 5}))
        code, _, err = run_cli(capsys, ["simulate", "--spec", spec])
        assert code == 2


class TestPipeline:
    def test_simulate_track_divergence_chain(self, tmp_path, capsys):
        spec = write(tmp_path / "spec.json", json.dumps({
            "kind": "stationary", "length": 30000, "seed": 4,
            "symbols": ["a", "b", "c"], "mass": [0.6, 0.3, 0.1],
        }))
        world = tmp_path / "w.json"
        events = tmp_path / "events.jsonl"
        run_cli(capsys, ["simulate", "--spec", spec, "--out", str(events),
                         "--dist-out", str(world)])
        trace = tmp_path / "trace.jsonl"
        run_cli(capsys, ["track", "--input", str(events),
                         "--output", str(trace)])
        code, out, _ = run_cli(
            capsys,
            ["divergence", "--from-trace", "--input", str(trace),
             "--world", str(world), "--normalize-mind"],
        )
        assert code == 0
        report = json.loads(out)
        # a consistent estimator leaves the learned code near-optimal
        assert abs(report["d_wrel"]) < 0.1

    def test_entry_point_subprocess(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "stationary", "length": 5, "seed": 0,
            "symbols": ["q"], "mass": [1.0],
        }))
        sim = subprocess.run(
            [sys.executable, "-m", "unexpect.cli", "simulate",
             "--spec", str(spec)],
            capture_output=True, text=True,
        )
        assert sim.returncode == 0
        track = subprocess.run(
            [sys.executable, "-m", "unexpect.cli", "track"],
            input=sim.stdout, capture_output=True, text=True,
        )
        assert track.returncode == 0
        assert len(track.stdout.strip().split("\n")) == 5
