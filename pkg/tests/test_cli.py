import csv
import subprocess
import sys

import pytest

from flexsched.analysis import complexity
from flexsched.cli import main, read_config_file
from flexsched.experiment import ExperimentConfig, build_report, read_csv
from flexsched.ingest import read_instance

from conftest import REF4_NATIVE


@pytest.fixture
def ref4_dir(tmp_path):
    d = tmp_path / "inst"
    d.mkdir()
    (d / "REF4.txt").write_text(REF4_NATIVE + "\n")
    return d


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_metrics_row(ref4_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["metrics", "--instances", str(ref4_dir), "--out", str(out)]) == 0
    lines = (out / "instances.csv").read_text().splitlines()
    assert lines[0] == "instance,n_tasks,n_edges,complexity,avg_tight_width,avg_filled_width,natural_flex,makespan,deadline"
    assert lines[1] == "REF4,4,4,2,1.166667,1.500000,2.000000,6,6.6"


def test_metrics_empty_dir(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["metrics", "--instances", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "instances.csv").read_text().splitlines() == [
        "instance,n_tasks,n_edges,complexity,avg_tight_width,avg_filled_width,natural_flex,makespan,deadline"
    ]


def test_distribute(ref4_dir, tmp_path):
    out = tmp_path / "out"
    args = ["distribute", "--instances", str(ref4_dir), "--out", str(out), "--strategies", "equalised,max_minflex"]
    assert main(args) == 0
    sched = rows(out / "schedules.csv")
    eq = [float(r["flex"]) for r in sched if r["strategy"] == "equalised"]
    mm = [float(r["flex"]) for r in sched if r["strategy"] == "max_minflex"]
    assert eq == [0.12, 0.36, 2.36, 0.12]
    assert mm == [0.2, 0.2, 2.2, 0.2]
    assert sched[1]["a"] == "2.120000" and sched[1]["b"] == "2.480000"
    flex = rows(out / "flexmetrics.csv")
    assert list(flex[0]) == ["instance", "strategy", "num_zeros", "flex_x_pred", "flex_x_succ", "total_flex"]
    assert flex[0]["total_flex"] == "2.960000" and flex[0]["num_zeros"] == "0"
    first = (out / "schedules.csv").read_bytes()
    assert main(args) == 0
    assert (out / "schedules.csv").read_bytes() == first


def test_simulate_zero_delay_and_determinism(ref4_dir, tmp_path):
    out = tmp_path / "out"
    base = ["simulate", "--instances", str(ref4_dir), "--out", str(out), "--runs", "20", "--seed", "5"]
    assert main(base + ["--grid", "0:50,50:100"]) == 0
    sim = rows(out / "simresults.csv")
    assert list(sim[0]) == ["instance", "strategy", "p", "q", "runs", "mean_violations", "var_violations"]
    assert all(r["mean_violations"] == "0.000000" for r in sim if r["p"] == "0")
    first = (out / "simresults.csv").read_bytes()
    assert main(base + ["--grid", "0:50,50:100"]) == 0
    assert (out / "simresults.csv").read_bytes() == first


def test_jobs_do_not_change_results(tmp_path):
    inst = tmp_path / "gen"
    assert main(["gen", "--n", "20", "--complexity", "8", "--count", "3", "--seed", "4", "--out", str(inst)]) == 0
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"o{jobs}"
        assert main(["simulate", "--instances", str(inst), "--out", str(out), "--runs", "15",
                     "--grid", "80:80", "--strategies", "equalised,wsucc", "--jobs", jobs]) == 0
        outs.append((out / "simresults.csv").read_bytes())
    assert outs[0] == outs[1]


def test_full_pipeline_and_report(tmp_path):
    inst = tmp_path / "gen"
    out = tmp_path / "out"
    for c in (3, 6):
        assert main(["gen", "--n", "12", "--complexity", str(c), "--count", "3", "--seed", str(c), "--out", str(inst)]) == 0
    common = ["--instances", str(inst), "--out", str(out), "--runs", "10", "--grid", "80:80",
              "--strategies", "equalised,wsucc,wallpre"]
    for cmd in ("metrics", "distribute", "simulate", "report"):
        assert main([cmd] + common) == 0
    rep = rows(out / "report.csv")
    assert [r["strategy"] for r in rep] == ["equalised", "wsucc", "wallpre"]
    assert rep[0]["outperforms_equalised"] == "0.000000"
    corr = rows(out / "correlations.csv")
    assert {r["strategy"] for r in corr} == {"equalised", "wsucc", "wallpre", "pooled"}
    var = rows(out / "variance.csv")
    assert {r["stratum"] for r in var} == {"pooled", "3", "6"}
    assert (out / "ttests.csv").exists()
    for name in ("report.csv", "correlations.csv", "variance.csv", "ttests.csv"):
        text = (out / name).read_text()
        assert text.splitlines()[0] and "," in text.splitlines()[0]


def test_build_report_outperform():
    sims = [
        {"instance": n, "strategy": s, "p": "80", "q": "80", "mean_violations": str(v)}
        for n, (e, w) in {"a": (5, 4), "b": (3, 3), "c": (2, 1)}.items()
        for s, v in (("equalised", e), ("wsucc", w))
    ]
    inst = [{"instance": n, "complexity": c, "avg_tight_width": "1", "avg_filled_width": "1", "natural_flex": "0"}
            for n, c in (("a", "1"), ("b", "2"), ("c", "2"))]
    rep = build_report(sims, [], inst)
    summary = {r["strategy"]: r for r in rep.summary}
    assert summary["equalised"]["outperforms_equalised"] == 0
    assert summary["wsucc"]["outperforms_equalised"] == pytest.approx(2 / 3)


def test_gen_command(tmp_path):
    out = tmp_path / "g"
    assert main(["gen", "--n", "122", "--complexity", "63", "--count", "10", "--seed", "1", "--out", str(out)]) == 0
    files = sorted(out.iterdir())
    assert [f.name for f in files] == sorted(f"gen_1_{i}.txt" for i in range(10))
    assert all(complexity(read_instance(f)) == 63 for f in files)
    first = [f.read_bytes() for f in files]
    assert main(["gen", "--n", "122", "--complexity", "63", "--count", "10", "--seed", "1", "--out", str(out)]) == 0
    assert [f.read_bytes() for f in sorted(out.iterdir())] == first
    assert main(["gen", "--n", "2", "--complexity", "1", "--seed", "0", "--out", str(tmp_path / "c")]) == 0
    assert read_instance(tmp_path / "c" / "gen_0_0.txt").edges == ((0, 1),)


def test_config_file(ref4_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# comment\ninstances = {ref4_dir}\nout = {tmp_path / 'from_cfg'}\nruns = 7\n")
    assert read_config_file(cfg)["runs"] == "7"
    assert main(["metrics", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_cfg" / "instances.csv").exists()
    # flags win over the file
    assert main(["metrics", "--config", str(cfg), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "instances.csv").exists()
    (tmp_path / "bad.cfg").write_text("colour = blue\n")
    assert main(["metrics", "--config", str(tmp_path / "bad.cfg")]) == 1


def test_exit_codes(ref4_dir, tmp_path, capsys):
    assert main(["metrics", "--out", str(tmp_path)]) == 1  # missing --instances
    assert main(["distribute", "--instances", str(ref4_dir), "--strategies", "nope", "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--instances", str(ref4_dir), "--grid", "80", "--out", str(tmp_path)]) == 1
    assert main(["metrics", "--instances", str(ref4_dir), "--deadline-factor", "0.5", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["metrics", "--runs", "many"])
    assert exc.value.code == 1
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "x.txt").write_text("2 1\n0 1\n1 1\n0 5\n")
    assert main(["metrics", "--instances", str(bad), "--out", str(tmp_path)]) == 2
    assert "x.txt" in capsys.readouterr().err
    assert main(["report", "--out", str(tmp_path / "nothing")]) == 2
    assert main(["metrics", "--instances", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 2
    assert main(["gen", "--n", "4", "--complexity", "9", "--out", str(tmp_path / "g")]) == 2


def test_console_script_entry_point(ref4_dir, tmp_path):
    out = tmp_path / "o"
    proc = subprocess.run([sys.executable, "-m", "flexsched.cli", "metrics", "--instances", str(ref4_dir), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert read_csv(out / "instances.csv")[0]["complexity"] == "2"


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(runs=0)
    with pytest.raises(ValueError):
        ExperimentConfig(strategies=())
    assert ExperimentConfig().params(80, 5).q == pytest.approx(0.05)
