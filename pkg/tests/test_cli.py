import json
import subprocess
import sys
from pathlib import Path

import pytest

from treeforge import __version__
from treeforge.baire import affine, explicit
from treeforge.cli import EXIT_FAIL, EXIT_INVALID, EXIT_OK, InvalidScenario, main, run_scenario, strip_timings, sweep_rows
from treeforge.dot import to_dot
from treeforge.registry import RegistryError, resolve_tree
from treeforge.surgery import ThinPlan, laver_thin, laver_tree, modular, sacks_thin, silver, silver_lazy, silver_thin
from treeforge.trees import FiniteTree, automaton_tree, from_finite, full_binary, truncate

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "scenarios"
EXPECTED = {"pass": EXIT_OK, "fail": EXIT_FAIL, "invalid": EXIT_INVALID}


def scenarios(group):
    return sorted((CORPUS / group).glob("*.json"))


@pytest.mark.parametrize(
    "path", [p for g in EXPECTED for p in scenarios(g)], ids=lambda p: f"{p.parent.name}/{p.stem}"
)
def test_exit_code(path, tmp_path):
    code = main(["run", str(path), "--out", str(tmp_path)])
    assert code == EXPECTED[path.parent.name]
    report = json.loads((tmp_path / f"{path.stem}.report.json").read_text())
    assert report["ok"] is (code == EXIT_OK)
    if code == EXIT_INVALID:
        assert report["error"]


def test_corpus_covers_every_kind():
    kinds = {json.loads(p.read_text())["kind"] for p in scenarios("pass")}
    assert kinds == {"thin", "antichain", "qrun", "name", "predicate-sweep"}


def test_directory_run_takes_worst_status(tmp_path):
    assert main(["run", str(CORPUS / "pass"), str(CORPUS / "fail"), "--out", str(tmp_path)]) == EXIT_FAIL


def test_antichain_report(tmp_path):
    main(["run", str(CORPUS / "pass" / "antichain_sacks.json"), "--out", str(tmp_path)])
    report = json.loads((tmp_path / "antichain_sacks.report.json").read_text())
    certs = report["certificates"]
    assert len(certs) == 6 and all(c["ok"] for c in certs)
    assert report["tool"]["version"] == __version__
    assert set(report) >= {"schema", "scenario", "verdicts", "timings"}


def test_exhausted_qrun_keeps_trace(tmp_path):
    assert main(["run", str(CORPUS / "fail" / "qrun_exhausted.json"), "--out", str(tmp_path)]) == EXIT_FAIL
    report = json.loads((tmp_path / "qrun_exhausted.report.json").read_text())
    assert "trace" in report["results"] and report["results"]["trace"] == []


def test_thin_side_files(tmp_path):
    main(["run", str(CORPUS / "pass" / "thin_sacks.json"), "--out", str(tmp_path)])
    dot = (tmp_path / "thin_sacks.dot").read_text()
    assert "// ramification levels: 0, 1, 2, 4, 8, 16" in dot


def test_report_is_deterministic():
    scenario = json.loads((CORPUS / "pass" / "qrun_random.json").read_text())
    a, fa = run_scenario(scenario, jobs=1, seed=5)
    b, fb = run_scenario(scenario, jobs=4, seed=5)
    assert strip_timings(a) == strip_timings(b) and fa == fb


def test_schema_violations():
    for bad in [{"kind": "thin"}, {"kind": "thin", "horizons": {"depth": 0}, "params": {}}, [1]]:
        with pytest.raises(InvalidScenario):
            run_scenario(bad)


class TestSweep:
    def test_dominates_all_true(self, tmp_path):
        out = tmp_path / "d.csv"
        code = main(["sweep", "dominates", "--X", '{"affine": {"a": 4}}', "--Y", '{"affine": {"a": 1}}', "--range", "0", "50", "--out", str(out)])
        raw = out.read_bytes()
        assert code == EXIT_OK and b"\r" not in raw
        lines = raw.decode().splitlines()
        assert lines[0].split(",")[:2] == ["n", "verdict"]
        assert len(lines) == 52 and all(l.split(",")[1] == "true" for l in lines[1:])

    def test_weak_all_false(self):
        rows = sweep_rows("weakly-dominates", affine(2), affine(2, 1), 0, 6)
        assert [v for _, v, _ in rows] == [False] * 7

    def test_explicit_squares(self):
        X = explicit([k * k for k in range(40)])
        rows = sweep_rows("weakly-dominates", X, affine(2), 0, 4)
        for i, verdict, _ in rows:
            blocks = [(X.mu(2**i + j), X.mu(2**i + j + 1)) for j in range(2**i)]
            assert verdict == all(sum(1 for v in range(lo, hi) if v % 2 == 0) >= 2 for lo, hi in blocks)

    def test_bad_set(self, capsys):
        assert main(["sweep", "dominates", "--X", "{", "--Y", '{"affine": {"a": 1}}', "--range", "0", "3"]) == EXIT_INVALID


class TestExportDot:
    def test_full_binary(self, tmp_path):
        out = tmp_path / "f.dot"
        assert main(["export-dot", "full-binary", str(out), "--depth", "2"]) == EXIT_OK
        text = out.read_text()
        assert text.count("label=") == 7 and text.count("doublecircle") == 3

    def test_thinned(self, tmp_path):
        S = sacks_thin(full_binary(), ThinPlan(affine(2), modular(0), (0, 1, 2, 3)))
        ref = tmp_path / "ref.json"
        ref.write_text(json.dumps(S.ref))
        out = tmp_path / "s.dot"
        assert main(["export-dot", f"@{ref}", str(out), "--depth", "16"]) == EXIT_OK
        text = out.read_text()
        assert "// ramification levels: 0, 1, 2, 4, 8" in text
        assert "// enforced block 3: levels [16, 18)" in text

    def test_intersection(self, tmp_path):
        plans = [ThinPlan(affine(2), modular(a), (0, 1, 2, 3)) for a in (1, 2)]
        refs = [sacks_thin(full_binary(), p).ref for p in plans]
        out = tmp_path / "i.dot"
        spec = json.dumps({"intersection": refs, "divergence_level": 8, "depth": 20})
        assert main(["export-dot", spec, str(out)]) == EXIT_OK
        assert "color=red" not in out.read_text()

    def test_unknown_ref(self, tmp_path):
        assert main(["export-dot", "no-such-tree", str(tmp_path / "x.dot")]) == EXIT_INVALID

    def test_deterministic(self):
        T = truncate(full_binary().restrict((1, 0)), 5)
        assert to_dot(T) == to_dot(FiniteTree.from_json(T.to_json()))


class TestRegistry:
    @pytest.mark.parametrize(
        "tree",
        [
            full_binary(),
            full_binary().restrict((0, 1, 1)),
            automaton_tree({"a": [(0, "b"), (1, "a")], "b": [(1, "a")]}, "a"),
            from_finite(FiniteTree.full_binary(3)),
            sacks_thin(full_binary(), ThinPlan(affine(3, 1), modular(2), (0, 1))),
            silver_lazy(silver_thin(silver(affine(2)), ThinPlan(affine(2), modular(1), (0, 1, 2)))),
        ],
    )
    def test_round_trip(self, tree):
        again = resolve_tree(json.loads(json.dumps(tree.ref)))
        assert again == tree and truncate(again, 12) == truncate(tree, 12)

    def test_omega_round_trip(self):
        T = laver_thin(laver_tree(affine(1), (3,)), ThinPlan(affine(2), modular(1), (0, 1, 2)))
        again = resolve_tree(json.loads(json.dumps(T.ref)))
        assert again == T and truncate(again, 3, 20) == truncate(T, 3, 20)

    @pytest.mark.parametrize("ref", ["nope", "cone:012", {"laver": {}}, {"a": 1, "b": 2}, 7])
    def test_bad_refs(self, ref):
        with pytest.raises(RegistryError):
            resolve_tree(ref)


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "treeforge.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
