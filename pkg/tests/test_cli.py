import json
import os
import shutil
import subprocess
import sys

import pytest

from conftest import CORPUS


def rw(*args, env=None):
    full_env = dict(os.environ, **(env or {}))
    proc = subprocess.run([sys.executable, "-m", "randworlds", *args],
                          capture_output=True, text=True, env=full_env)
    return proc.returncode, proc.stdout, proc.stderr


def report(*args, env=None):
    code, out, _ = rw(*args, env=env)
    return code, json.loads(out)


@pytest.fixture
def half_kb(tmp_path):
    path = tmp_path / "half.kb"
    path.write_text("predicates: P\nconstants: c\n[P(x)]_x ~(1) 1/2\n")
    return path


class TestInfer:
    def test_fly(self):
        code, r = report("infer", "--kb", str(CORPUS / "fly.kb"), "--query", "Fly(tweety)")
        assert code == 0
        assert r["verdict"] == {"kind": "POINT", "value": "0.9", "exact": "9/10"}
        assert r["tau_grid"] == ["0.01", "0.001", "0.0001"]
        assert len(r["diagnostics"]["winners"]) == 2

    def test_contradiction_exit_three(self):
        code, r = report("infer", "--kb", str(CORPUS / "contradiction.kb"), "--query", "P(c)")
        assert code == 3
        assert r["verdict"] == {"kind": "UNDEFINED", "reason": "DEGENERATE_KB"}

    def test_tie(self):
        code, r = report("infer", "--kb", str(CORPUS / "tie.kb"), "--query", "P(c)")
        assert code == 0
        assert r["verdict"] == {"kind": "TIE_INTERVAL", "lo": "0.2", "hi": "0.8"}

    def test_custom_grid(self):
        code, r = report("infer", "--kb", str(CORPUS / "fly.kb"), "--query", "Fly(tweety)",
                         "--tau-grid", "0.002,0.0002,0.00002")
        assert code == 0 and r["tau_grid"] == ["0.002", "0.0002", "2e-05"]
        assert r["verdict"]["exact"] == "9/10"

    def test_coarse_grid_fails_agreement(self):
        # linear extrapolation from 0.02 and 0.002 misses the closure by more than 1e-6
        code, r = report("infer", "--kb", str(CORPUS / "fly.kb"), "--query", "Fly(tweety)",
                         "--tau-grid", "0.02,0.002")
        assert code == 3
        assert r["verdict"] == {"kind": "UNDEFINED", "reason": "ILL_CONDITIONED_LIMIT"}

    @pytest.mark.parametrize("args", [
        ("--query", "Fly(tweety"),
        ("--query", "Swim(tweety)"),
        ("--query", "Fly(x)"),
        ("--query", "Fly(tweety)", "--tau-grid", "0,1"),
    ])
    def test_input_errors(self, args):
        code, out, err = rw("infer", "--kb", str(CORPUS / "fly.kb"), *args)
        assert code == 2
        assert "error" in json.loads(out)
        assert err.startswith("rw: ")

    def test_missing_file(self, tmp_path):
        code, _, _ = rw("infer", "--kb", str(tmp_path / "none.kb"), "--query", "P(c)")
        assert code == 2


class TestFinite:
    def test_fly_table(self):
        code, r = report("finite", "--kb", str(CORPUS / "fly.kb"), "--query", "Fly(tweety)",
                         "--n", "10,20,40", "--tau", "1=0.05")
        assert code == 0
        assert [row["n"] for row in r["rows"]] == [10, 20, 40]
        assert r["tau"] == {"1": "1/20"}
        for row in r["rows"]:
            num, den = int(row["numerator"]), int(row["denominator"])
            assert 0 <= num <= den

    def test_denominator_visible(self, half_kb):
        code, r = report("finite", "--kb", str(half_kb), "--query", "true", "--n", "4", "--tau", "1=0.1")
        assert code == 0
        # two P elements out of four, and c anywhere among them
        assert int(r["rows"][0]["denominator"]) == 6 * 4
        assert r["rows"][0]["value"] == "1/1"

    def test_unsatisfiable_query(self, half_kb):
        code, r = report("finite", "--kb", str(half_kb), "--query", "P(c) and not P(c)",
                         "--n", "2,4", "--tau", "1=0.1")
        assert code == 0
        assert [row["value"] for row in r["rows"]] == ["0/1", "0/1"]

    def test_bound_exceeded(self, half_kb):
        code, out, err = rw("finite", "--kb", str(half_kb), "--query", "P(c)", "--n", "1000",
                            "--tau", "1=0.1")
        assert code == 2 and "exceeds" in err

    @pytest.mark.parametrize("tau", [[], ["--tau", "1=2"], ["--tau", "x"]])
    def test_bad_tolerance(self, half_kb, tau):
        code, _, _ = rw("finite", "--kb", str(half_kb), "--query", "P(c)", "--n", "4", *tau)
        assert code == 2


class TestMaxent:
    def test_fly(self):
        code, r = report("maxent", "--kb", str(CORPUS / "fly.kb"))
        assert code == 0
        assert r["atoms"] == ["~Bird&~Fly", "Bird&~Fly", "~Bird&Fly", "Bird&Fly"]
        assert len(r["disjuncts"]) == 2
        d = r["disjuncts"][0]
        assert d["feasible"] and d["agreement"]
        u = {k: float(v) for k, v in d["point"].items()}
        assert u["Bird&Fly"] / (u["Bird&Fly"] + u["Bird&~Fly"]) == pytest.approx(0.9, abs=1e-9)

    def test_infeasible_region(self, tmp_path):
        path = tmp_path / "bad.kb"
        path.write_text("predicates: P\nnot ([P(x)]_x >~(1) 0)\n")
        code, r = report("maxent", "--kb", str(path))
        assert code == 0
        assert r["disjuncts"][0]["agreement"] is False


class TestCheck01:
    def test_exists(self):
        code, r = report("check01", "--formula", "exists x. P(x)", "--predicates", "P")
        assert code == 0 and r["value"] == 1

    def test_active_mask(self):
        code, r = report("check01", "--formula", "exists x. P(x)", "--predicates", "P,Q",
                         "--active", "0b0101")
        assert code == 0 and r["value"] == 0
        assert r["active"] == ["~P&~Q", "~P&Q"]

    def test_placement(self):
        code, r = report("check01", "--formula", "exists x. (P(x) and not x = c)",
                         "--predicates", "P", "--constants", "c", "--place", "c=1")
        assert code == 0 and r["value"] == 1

    def test_named_in_inactive_atom(self):
        code, _, _ = rw("check01", "--formula", "P(c)", "--predicates", "P", "--constants", "c",
                        "--active", "1", "--place", "c=1")
        assert code == 2


class TestCorpus:
    @pytest.fixture
    def small_corpus(self, tmp_path):
        for name in ("tie", "lottery", "lottery_exists", "contradiction"):
            case = json.loads((CORPUS / f"{name}.json").read_text())
            shutil.copy(CORPUS / case["kb"], tmp_path / case["kb"])
            shutil.copy(CORPUS / f"{name}.json", tmp_path / f"{name}.json")
        return tmp_path

    def test_passes(self, small_corpus):
        code, r = report("corpus", str(small_corpus))
        assert code == 0
        assert r["total"] == 4 and r["failed"] == []
        assert [c["name"] for c in r["cases"]] == sorted(c["name"] for c in r["cases"])

    def test_wrong_expectation_flagged(self, small_corpus):
        path = small_corpus / "lottery.json"
        case = json.loads(path.read_text())
        case["expected"]["value"] = "1/2"
        path.write_text(json.dumps(case))
        code, r = report("corpus", str(small_corpus))
        assert code == 4
        assert r["failed"] == ["lottery"]

    def test_malformed_case_counts_as_failure(self, small_corpus):
        (small_corpus / "broken.json").write_text("{not json")
        code, r = report("corpus", str(small_corpus))
        assert code == 4 and r["failed"] == ["broken"]
        (entry,) = [c for c in r["cases"] if c["name"] == "broken"]
        assert entry["error"].startswith("JSONDecodeError")

    def test_point_needs_tolerance(self, small_corpus):
        path = small_corpus / "lottery.json"
        case = json.loads(path.read_text())
        case["expected"]["tolerance"] = 0
        path.write_text(json.dumps(case))
        code, r = report("corpus", str(small_corpus))
        assert code == 4 and r["failed"] == ["lottery"]

    def test_empty_dir(self, tmp_path):
        code, r = report("corpus", str(tmp_path))
        assert code == 0
        assert r["total"] == 0 and r["warnings"]

    def test_threads_do_not_change_output(self, small_corpus):
        outs = {rw("corpus", str(small_corpus), env={"RW_THREADS": t})[1] for t in ("0", "3")}
        assert len(outs) == 1
