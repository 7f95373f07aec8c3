"""Pipeline harness: metrics arithmetic, policies, sweeps, regressions."""

from dataclasses import replace
from pathlib import Path

import pytest

from nfvha.assignment import (AllocationPlan, AssignmentOutcome,
                              ORDER_POLICIES, REASON_NO_CANDIDATES,
                              STATUS_ACCEPTED, STATUS_REJECTED)
from nfvha.errors import ScenarioError
from nfvha.harness import (compute_metrics, run_experiment, threshold_sweep)
from nfvha.netmodel import (MODE_DEDICATED, ROLE_BACKUP, ROLE_PRIMARY,
                            BackupChain, FlowSpec, NfInstance, NfType,
                            reserve)
from nfvha.placement import PlacementResult
from nfvha.scenario import (BuiltScenario, ScenarioConfig, config_from_dict,
                            load_config)
from nfvha.topology import make_network

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

FW = NfType(name="fw", capacity_pps=10e6)


def crafted():
    avails = {"m1": 0.99, "m2": 0.99, "x": 0.99, "y": 0.99}
    names = list(avails)
    net = make_network([(a, b) for i, a in enumerate(names)
                        for b in names[i + 1:]], node_avail=avails)
    p1 = NfInstance(id="p1", nf=FW, host="m1", role=ROLE_PRIMARY, avail=0.999)
    p2 = NfInstance(id="p2", nf=FW, host="m2", role=ROLE_PRIMARY, avail=0.999)
    b1 = NfInstance(id="b1", nf=FW, host="x", role=ROLE_BACKUP, avail=0.999)
    b2 = NfInstance(id="b2", nf=FW, host="x", role=ROLE_BACKUP, avail=0.999)
    b3 = NfInstance(id="b3", nf=FW, host="y", role=ROLE_BACKUP, avail=0.999)

    def flow(fid, cls, chain, inst, host):
        return FlowSpec(id=fid, src="m1", dst="m2", rate_pps=1e6, chain=chain,
                        avail_class=cls, avail_req=0.999,
                        primary_instances=(inst,) * len(chain),
                        primary_hosts=(host,) * len(chain),
                        primary_avail=0.99)

    f1 = flow("f1", "hi", ("fw",), "p1", "m1")
    f2 = flow("f2", "hi", ("fw",), "p2", "m2")
    f3 = flow("f3", "lo", ("fw", "fw"), "p1", "m1")
    assert reserve(b1, f1) and reserve(b1, f3) and reserve(b2, f3)
    outcomes = {
        "f1": AssignmentOutcome("f1", STATUS_ACCEPTED, None,
                                (BackupChain("f1", ("b1",), ("x",)),), 0.9995),
        "f2": AssignmentOutcome("f2", STATUS_REJECTED, REASON_NO_CANDIDATES,
                                (), None),
        "f3": AssignmentOutcome("f3", STATUS_ACCEPTED, None,
                                (BackupChain("f3", ("b1", "b2"), ("x",)),),
                                0.9993),
    }
    scn = BuiltScenario(config=ScenarioConfig(), net=net,
                        nf_types={"fw": FW}, flows=[f1, f2, f3],
                        instances={"p1": p1, "p2": p2},
                        class_requirements={"hi": 0.9999, "lo": 0.999})
    plan = AllocationPlan([f1, f2, f3],
                         {"p1": p1, "p2": p2, "b1": b1, "b2": b2, "b3": b3},
                         outcomes, MODE_DEDICATED)
    placement = PlacementResult(placed=[b1, b2, b3],
                                unplaced={("fw", "hi"): 2},
                                remaining_cores={}, remaining_mem={})
    return scn, placement, plan


def test_compute_metrics_arithmetic():
    m = compute_metrics(*crafted())
    assert m.flows_total == 3
    assert m.flows_accepted == 2
    assert m.primaries == 2
    assert m.backups_placed == 3
    assert m.backups_used == 2          # b3 carries no reservation
    assert m.backup_nodes_used == 1
    assert m.overbuild == pytest.approx(1.0)
    assert m.acceptance_by_class == {"hi": 0.5, "lo": 1.0}
    assert m.used_by_class == {"hi": 1, "lo": 2}
    assert m.unplaced == 2
    d = m.as_dict()
    assert d["overbuild"] == m.overbuild
    assert list(d["acceptance_by_class"]) == ["hi", "lo"]


def policy_config():
    return config_from_dict({
        "seed": 3,
        "topology": {"generate": {"nodes": 24, "links": 50, "seed": 9}},
        "flows": {"count": 80, "rate_pps": 2.5e6, "chain_length": [2, 3]},
        "backup_cores_fraction": 0.4,
    })


def test_run_experiment_single_run():
    res = run_experiment(policy_config())
    m = res.metrics
    assert m.flows_total == 80
    assert m.flows_accepted == 27
    assert m.backups_placed == 30
    assert m.backups_used == 29
    assert m.unplaced == 81             # demand estimate far above budget
    assert m.overbuild == pytest.approx(29 / 52)
    assert len(res.metrics_runs) == 1
    assert res.metrics_ci is None
    assert res.plan.mode == MODE_DEDICATED
    assert len(res.placement.placed) == 30


def test_order_policy_changes_acceptance():
    cfg = policy_config()
    accepted = {}
    for pol in ORDER_POLICIES:
        res = run_experiment(replace(cfg, order_policy=pol))
        accepted[pol] = res.metrics.flows_accepted
    assert accepted == {"input": 31, "chain_length_desc": 27,
                        "chain_length_asc": 42, "avail_desc": 26,
                        "avail_asc": 39}
    # under capacity pressure, serving the easy flows first admits more
    assert accepted["chain_length_asc"] > accepted["chain_length_desc"]
    assert accepted["avail_asc"] > accepted["avail_desc"]


def test_multi_run_confidence_interval():
    res = run_experiment(replace(policy_config(), runs=3))
    assert len(res.metrics_runs) == 3
    ci = res.metrics_ci
    assert set(ci) == {"backups_used", "overbuild", "acceptance"}
    assert ci["acceptance"]["mean"] == pytest.approx(0.3458333333)
    assert ci["acceptance"]["half_width"] == pytest.approx(0.0571666667)
    assert ci["backups_used"]["mean"] == pytest.approx(28.666667)
    # first run is the kept artifact
    assert res.metrics == res.metrics_runs[0]


def mesh_sweep_config():
    names = ["a", "b", "c", "d", "e", "f"]
    lines = ["node s end", "node t end", "s a", "t b"]
    lines += [f"{x} {y}" for i, x in enumerate(names) for y in names[i + 1:]]
    return config_from_dict({
        "seed": 2,
        "topology": {"text": "\n".join(lines) + "\n"},
        "flows": {"count": 12, "rate_pps": 1e6, "chain_length": [1, 2]},
    })


def test_threshold_sweep_on_a_mesh():
    out = threshold_sweep(mesh_sweep_config(), (0.15, 0.3, 0.5, 0.7))
    assert out["scenario_seed"] == 2
    rows = {r["threshold"]: r for r in out["thresholds"]}
    assert list(rows) == [0.15, 0.3, 0.5, 0.7]
    # mesh redundancy keeps dependencies at or below 1/6, so thresholds
    # above that are indistinguishable
    for t in (0.3, 0.5, 0.7):
        assert rows[t]["backups_placed"] == 16
        assert rows[t]["backups_used"] == 10
        assert rows[t]["accepted"] == 12
        assert rows[t]["coverage"] == pytest.approx(0.25)
    # an over-tight threshold turns every node into a correlation zone and
    # starves assignment entirely
    assert rows[0.15]["coverage"] == 1.0
    assert rows[0.15]["accepted"] == 0
    assert rows[0.15]["backups_used"] == 0
    assert rows[0.15]["backups_placed"] == 16


def test_no_backup_capacity_raises():
    cfg = replace(policy_config(), backup_cores_fraction=0.05)
    with pytest.raises(ScenarioError):
        run_experiment(cfg)


def test_pinned_scenario_regression():
    cfg = load_config(SCENARIOS / "isp44_200flows.json")
    res = run_experiment(cfg)
    m = res.metrics
    assert (m.backups_placed, m.backups_used, m.backup_nodes_used) == \
        (97, 53, 15)
    assert m.primaries == 33
    assert m.overbuild == pytest.approx(53 / 33)
    assert m.flows_accepted == m.flows_total == 200
    assert all(v == 1.0 for v in m.acceptance_by_class.values())

    shared = run_experiment(replace(cfg, mode="shared"))
    ms = shared.metrics
    assert (ms.backups_placed, ms.backups_used, ms.backup_nodes_used) == \
        (97, 24, 8)
    assert ms.overbuild == pytest.approx(24 / 33)
    assert ms.flows_accepted == 200


def test_shared_mode_scales_further():
    cfg = load_config(SCENARIOS / "isp100_650flows.json")
    ded = run_experiment(cfg).metrics
    sha = run_experiment(replace(cfg, mode="shared")).metrics
    assert all(v == 1.0 for v in sha.acceptance_by_class.values())
    acc = ded.acceptance_by_class
    assert acc["five9"] <= acc["four9"] <= acc["three9"]
    assert 0.55 < acc["five9"] < 0.85
    assert sha.backups_used < ded.backups_used
