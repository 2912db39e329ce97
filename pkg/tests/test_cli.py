import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from smellscope.cli import main
from smellscope.detect import ThresholdProfile, read_profile

DEFAULT_PROFILE_TEXT = (
    "lm_function_loc = 38\n"
    "lc_class_loc = 29\n"
    "lpl_num_params = 5\n"
    "lmc_chain_length = 5\n"
    "lsc_closure_depth = 3\n"
    "ltce_chars = 54\n"
    "mnc_container_depth = 3\n"
    "llf_chars = 48\n"
)


def run(capsysbinary, *argv):
    code = main(list(argv))
    out, err = capsysbinary.readouterr()
    return code, out, err.decode()


@pytest.fixture
def clean_project(tmp_path):
    root = tmp_path / "clean"
    root.mkdir()
    (root / "a.py").write_text("def f(x):\n    return x + 1\n")
    return root


class TestAnalyze:
    def test_clean_exit_zero(self, capsysbinary, clean_project):
        code, out, _ = run(capsysbinary, "analyze", str(clean_project), "--jobs", "1")
        assert code == 0
        assert json.loads(out)["total_findings"] == 0

    def test_findings_exit_one_and_json_on_stdout(self, capsysbinary, small_project):
        code, out, err = run(capsysbinary, "analyze", str(small_project), "--jobs", "1")
        assert code == 1
        data = json.loads(out)
        assert data["smells"]["LM"] == 1 and data["smells"]["MNC"] == 1
        assert data["total_loc"] == 44

    def test_bad_format(self, capsysbinary, small_project):
        code, out, err = run(capsysbinary, "analyze", str(small_project), "--format", "xml")
        assert code == 2 and out == b"" and "xml" in err

    def test_missing_directory(self, capsysbinary, tmp_path):
        code, out, _ = run(capsysbinary, "analyze", str(tmp_path / "nope"))
        assert code == 2 and out == b""

    def test_bad_threshold_file(self, capsysbinary, tmp_path, small_project):
        (tmp_path / "t.cfg").write_text("lm = -1\n")
        code, _, err = run(capsysbinary, "analyze", str(small_project), "--thresholds", str(tmp_path / "t.cfg"))
        assert code == 2 and "lm_function_loc" in err

    def test_threshold_file_applies(self, capsysbinary, tmp_path, small_project):
        (tmp_path / "t.cfg").write_text("lm_function_loc = 100\nmnc = 9\n")
        code, out, _ = run(capsysbinary, "analyze", str(small_project), "--thresholds", str(tmp_path / "t.cfg"))
        assert code == 0 and json.loads(out)["total_findings"] == 0

    def test_extra_exclude(self, capsysbinary, small_project):
        code, out, _ = run(capsysbinary, "analyze", str(small_project), "--exclude", "long_*.py", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out.decode())))
        assert rows[1][:3] == ["project_small", "2", "3"]

    def test_loc_rule_flag(self, capsysbinary, clean_project):
        (clean_project / "a.py").write_text("# c\n\ndef f(x):\n    return x\n")
        _, out, _ = run(capsysbinary, "analyze", str(clean_project), "--loc-rule", "physical", "--jobs", "1")
        assert json.loads(out)["total_loc"] == 4
        _, out, _ = run(capsysbinary, "analyze", str(clean_project), "--jobs", "1")
        assert json.loads(out)["total_loc"] == 2

    def test_zero_jobs_is_usage_error(self, capsysbinary, small_project):
        with pytest.raises(SystemExit) as info:
            main(["analyze", str(small_project), "--jobs", "0"])
        assert info.value.code == 2


class TestScan:
    def test_two_roots_csv(self, capsysbinary, small_project, clean_project):
        code, out, err = run(capsysbinary, "scan", str(small_project), str(clean_project), "--format", "csv")
        assert code == 1
        rows = list(csv.reader(io.StringIO(out.decode())))
        assert [r[0] for r in rows] == ["Project", "project_small", "clean", "Total"]
        assert rows[-1][1:3] == ["4", "46"]
        assert "[2/2]" in err

    def test_roots_file(self, capsysbinary, tmp_path, small_project):
        (tmp_path / "roots.txt").write_text(f"{small_project}\n")
        code, out, _ = run(capsysbinary, "scan", "--roots-file", str(tmp_path / "roots.txt"))
        data = json.loads(out)
        assert code == 1 and data["summary"]["degenerate_sample"] is True

    def test_no_roots(self, capsysbinary):
        code, out, _ = run(capsysbinary, "scan")
        assert code == 2 and out == b""

    def test_table(self, capsysbinary, small_project):
        code, out, _ = run(capsysbinary, "scan", str(small_project), "--format", "table")
        assert b"mean density" in out


class TestMine:
    ARGS = ("--keywords", "q-learning", "--min-stars", "50", "--max", "30", "--per-page", "10",
            "--pushed-after", "2024-01-01")

    def test_replay_matches_golden(self, capsysbinary, tmp_path, miner_dir):
        out_file = tmp_path / "cand.jsonl"
        code, out, _ = run(
            capsysbinary, "mine", *self.ARGS, "--replay", str(miner_dir / "search_3x10.json"), "--out", str(out_file)
        )
        assert code == 0 and out == b""
        assert out_file.read_bytes() == (miner_dir / "candidates_golden.jsonl").read_bytes()

    def test_unreachable_api(self, capsysbinary, tmp_path):
        code, _, err = run(
            capsysbinary, "mine", *self.ARGS, "--api-url", "http://127.0.0.1:1", "--out", str(tmp_path / "c.jsonl")
        )
        assert code == 3 and "network" in err

    def test_max_zero(self, capsysbinary, tmp_path):
        code, _, _ = run(capsysbinary, "mine", "--keywords", "x", "--max", "0", "--out", str(tmp_path / "c"))
        assert code == 2

    def test_bad_date(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["mine", "--keywords", "x", "--pushed-after", "last year", "--out", str(tmp_path / "c")])
        assert info.value.code == 2


class TestProfile:
    def test_print_defaults(self, capsysbinary):
        code, out, _ = run(capsysbinary, "profile", "--print")
        assert code == 0 and out.decode() == DEFAULT_PROFILE_TEXT

    def test_print_is_default_action(self, capsysbinary):
        assert run(capsysbinary, "profile")[1].decode() == DEFAULT_PROFILE_TEXT

    def test_write_round_trip(self, capsysbinary, tmp_path):
        target = tmp_path / "p.cfg"
        code, out, _ = run(capsysbinary, "profile", "--write", str(target), "--set", "lm=40", "--set", "llf_chars=60")
        assert code == 0 and out == b""
        assert read_profile(target) == ThresholdProfile(lm_function_loc=40, llf_chars=60)

    def test_set_unknown_key(self, capsysbinary):
        code, out, _ = run(capsysbinary, "profile", "--set", "zz=1")
        assert code == 2 and out == b""


@pytest.mark.skipif(shutil.which("smellscope") is None, reason="console script not installed")
def test_entry_point_separates_streams(small_project):
    proc = subprocess.run(
        ["smellscope", "scan", str(small_project), "--format", "json", "--jobs", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 1
    json.loads(proc.stdout)
    assert "project_small" in proc.stderr


def test_module_invocation():
    proc = subprocess.run([sys.executable, "-m", "smellscope", "profile"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == DEFAULT_PROFILE_TEXT
