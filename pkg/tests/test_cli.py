"""CLI subcommands end to end, including exit codes."""

import json
from pathlib import Path

from nfvha.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

PIPELINE_CFG = {
    "seed": 11,
    "topology": {"generate": {"nodes": 16, "links": 30, "seed": 4}},
    "flows": {"count": 20, "rate_pps": 1e6, "chain_length": [1, 2]},
}


def write_cfg(tmp_path, payload=PIPELINE_CFG, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def test_analyze_topology_text_output(capsys):
    rc = main(["analyze-topology", str(SCENARIOS / "spider24.topo"),
               "--threshold", "0.5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "nodes" in out and "critical=" in out
    assert "coverage" in out


def test_analyze_topology_json_file(tmp_path, capsys):
    out_path = tmp_path / "profile.json"
    rc = main(["analyze-topology", str(SCENARIOS / "spider24.topo"),
               "--threshold", "0.4", "--json", str(out_path)])
    assert rc == 0
    payload = json.loads(out_path.read_text())
    assert payload["threshold"] == 0.4
    assert set(payload) == {"nodes", "links", "threshold", "critical",
                            "correlated", "coverage"}
    # stdout variant
    rc = main(["analyze-topology", str(SCENARIOS / "spider24.topo"),
               "--json", "-"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["nodes"] == payload["nodes"]


def test_plan_simulate_report_pipeline(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    plan_path = tmp_path / "plan.json"
    metrics_path = tmp_path / "metrics.json"
    rc = main(["plan", cfg, "--out", str(plan_path),
               "--metrics", str(metrics_path),
               "--emit-estimates", "--emit-placement"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "flows accepted:" in out
    assert "estimated backup chains per class:" in out
    assert "backup placement:" in out
    assert "overbuild:" in out
    plan_payload = json.loads(plan_path.read_text())
    assert plan_payload["metrics"]["flows_total"] == 20
    assert json.loads(metrics_path.read_text())["flows_total"] == 20

    sim_path = tmp_path / "sim.json"
    rc = main(["simulate", str(plan_path), "--replications", "20000",
               "--seed", "3", "--contention-aware", "--out", str(sim_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "accepted flows simulated at 20000 replications" in out
    assert "with failover contention:" in out
    sim_payload = json.loads(sim_path.read_text())
    assert sim_payload["replications"] == 20000
    assert sim_payload["flows"]

    outdir = tmp_path / "figs"
    rc = main(["report", "--sim", f"base={sim_path}",
               "--metrics", str(plan_path), "--outdir", str(outdir)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("wrote ") >= 6
    for stem in ("unavail_cdf", "nines", "usage"):
        pngs = list(outdir.glob(f"{stem}*.png"))
        csvs = list(outdir.glob(f"{stem}*.csv"))
        assert pngs and pngs[0].stat().st_size > 0
        assert csvs and "," in csvs[0].read_text()


def test_plan_seed_override_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["plan", cfg, "--seed", "12", "--out", str(a)]) == 0
    assert main(["plan", cfg, "--seed", "12", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    c = tmp_path / "c.json"
    assert main(["plan", cfg, "--seed", "13", "--out", str(c)]) == 0
    assert c.read_text() != a.read_text()


def test_sweep_command_and_figures(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    sweep_path = tmp_path / "sweep.json"
    rc = main(["sweep", cfg, "--thresholds", "0.3,0.5",
               "--out", str(sweep_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "t=0.3:" in out and "t=0.5:" in out
    payload = json.loads(sweep_path.read_text())
    assert [r["threshold"] for r in payload["thresholds"]] == [0.3, 0.5]

    outdir = tmp_path / "figs"
    rc = main(["report", "--sweep", str(sweep_path), "--outdir", str(outdir)])
    assert rc == 0
    assert (outdir / "threshold_sweep.png").exists()
    assert (outdir / "threshold_sweep.csv").exists()


def test_oracle_command(tmp_path, capsys):
    out_path = tmp_path / "oracle.json"
    rc = main(["oracle", str(SCENARIOS / "tiny_oracle.json"),
               "--max-backups", "4", "--out", str(out_path)])
    assert rc == 0
    assert "minimum backups: 4" in capsys.readouterr().out
    payload = json.loads(out_path.read_text())
    assert payload["min_backups"] == 4
    assert len(payload["placement"]) == 4


def test_bad_input_exit_codes(tmp_path, capsys):
    assert main(["plan", str(tmp_path / "missing.json")]) == 2
    assert main(["simulate", str(tmp_path / "missing_plan.json")]) == 2
    bad = write_cfg(tmp_path, {"seed": 1, "no_such_key": True}, "bad.json")
    assert main(["plan", bad]) == 2
    cfg = write_cfg(tmp_path)
    assert main(["sweep", cfg, "--thresholds", "a,b"]) == 2
    assert main(["sweep", cfg, "--thresholds", ""]) == 2
    assert main(["report", "--outdir", str(tmp_path / "x")]) == 2
    capsys.readouterr()


def test_infeasible_exit_code(tmp_path, capsys):
    # two end nodes and no intermediate host: no flow can be provisioned
    cfg = write_cfg(tmp_path, {
        "seed": 1,
        "topology": {"text": "node s end\nnode t end\ns t\n"},
        "flows": {"count": 2, "chain_length": 1},
    }, "stub.json")
    assert main(["plan", cfg]) == 3
    assert "infeasible:" in capsys.readouterr().err
