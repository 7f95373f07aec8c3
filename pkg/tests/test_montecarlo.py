"""Availability simulation against hand-computed expectations."""

import numpy as np
import pytest

from nfvha.assignment import (AllocationPlan, AssignmentOutcome,
                              STATUS_ACCEPTED)
from nfvha.montecarlo import (CHUNK, FlowEstimate, SimConfig, SimReport,
                              compare_placements, meets_level,
                              sampling_tolerance, simulate)
from nfvha.netmodel import (MODE_DEDICATED, ROLE_BACKUP, ROLE_PRIMARY,
                            BackupChain, FlowSpec, NfInstance, NfType)
from nfvha.topology import make_network

FW = NfType(name="fw")


def spec(fid, insts, hosts, rate=1e6, chain=("fw",)):
    return FlowSpec(id=fid, src="s", dst="t", rate_pps=rate, chain=chain,
                    avail_class="c", avail_req=0.5,
                    primary_instances=insts, primary_hosts=hosts,
                    primary_avail=0.9)


def accepted(fid, chains):
    return AssignmentOutcome(fid, STATUS_ACCEPTED, None,
                             tuple(BackupChain(fid, ids, hosts)
                                   for ids, hosts in chains), None)


def tri_net(avails):
    names = list(avails)
    links = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    return make_network(links, node_avail=avails)


def test_perfect_elements_hit_every_replication():
    net = tri_net({"p1": 1.0, "b1": 1.0})
    pp = NfInstance(id="pp", nf=FW, host="p1", role=ROLE_PRIMARY, avail=1.0)
    plan = AllocationPlan([spec("f", ("pp",), ("p1",))], {"pp": pp}, {},
                          MODE_DEDICATED)
    rep = simulate(plan, net, SimConfig(CHUNK + 10, seed=1))
    est = rep.flows["f"]
    assert est.estimate == 1.0
    assert est.half_width == 0.0
    assert est.served == CHUNK + 10  # both chunks counted


def test_unbound_flow_rejected():
    net = tri_net({"p1": 1.0, "b1": 1.0})
    loose = FlowSpec(id="f", src="s", dst="t", rate_pps=1e6, chain=("fw",),
                     avail_class="c", avail_req=0.5)
    plan = AllocationPlan([loose], {}, {}, MODE_DEDICATED)
    with pytest.raises(ValueError):
        simulate(plan, net, SimConfig(10, seed=1))


def one_flow_plans():
    net = tri_net({"p1": 0.99, "b1": 0.98, "b2": 0.97})
    pp = NfInstance(id="pp", nf=FW, host="p1", role=ROLE_PRIMARY, avail=0.999)
    bb = NfInstance(id="bb", nf=FW, host="b1", role=ROLE_BACKUP, avail=0.999)
    f = spec("f", ("pp",), ("p1",))
    bare = AllocationPlan([f], {"pp": pp}, {}, MODE_DEDICATED)
    backed = AllocationPlan([f], {"pp": pp, "bb": bb},
                            {"f": accepted("f", [(("bb",), ("b1",))])},
                            MODE_DEDICATED)
    return net, bare, backed


def test_estimate_tracks_analytic_availability():
    net, bare, backed = one_flow_plans()
    cfg = SimConfig(200_000, seed=11)
    e0 = simulate(bare, net, cfg).flows["f"].estimate
    # primary only: 0.999 * 0.99
    assert abs(e0 - 0.98901) <= sampling_tolerance(0.98901, 200_000)
    e1 = simulate(backed, net, cfg).flows["f"].estimate
    # one backup chain on another node: 1 - (1-0.98901)(1-0.97902)
    analytic = 1.0 - (1.0 - 0.999 * 0.99) * (1.0 - 0.999 * 0.98)
    assert abs(e1 - analytic) <= sampling_tolerance(analytic, 200_000)


def test_same_seed_reproduces_exactly():
    net, _bare, backed = one_flow_plans()
    cfg = SimConfig(30_000, seed=4)
    a = simulate(backed, net, cfg)
    b = simulate(backed, net, cfg)
    assert a.flows == b.flows


def test_extra_chain_never_hurts_under_common_draws():
    # element-keyed streams give the primary identical draws in both plans,
    # so adding a backup chain can only add served replications
    net, bare, backed = one_flow_plans()
    for seed in (1, 2, 3):
        cfg = SimConfig(20_000, seed=seed)
        s0 = simulate(bare, net, cfg).flows["f"].served
        s1 = simulate(backed, net, cfg).flows["f"].served
        assert s1 >= s0


def test_compare_placements_shares_draws():
    net, bare, backed = one_flow_plans()
    reps = compare_placements({"a": bare, "b": bare, "c": backed}, net,
                              SimConfig(20_000, seed=7))
    assert reps["a"].flows == reps["b"].flows
    assert reps["c"].flows["f"].served >= reps["a"].flows["f"].served


def contention_plan(capacity):
    fwty = NfType(name="fw", capacity_pps=capacity)
    net = tri_net({"pa": 0.6, "pb": 0.6, "bk": 0.999})
    ia = NfInstance(id="ia", nf=fwty, host="pa", role=ROLE_PRIMARY, avail=0.9)
    ib = NfInstance(id="ib", nf=fwty, host="pb", role=ROLE_PRIMARY, avail=0.9)
    sh = NfInstance(id="sh", nf=fwty, host="bk", role=ROLE_BACKUP, avail=0.999)
    fa = spec("fa", ("ia",), ("pa",), rate=6e6)
    fb = spec("fb", ("ib",), ("pb",), rate=6e6)
    outs = {fid: accepted(fid, [(("sh",), ("bk",))]) for fid in ("fa", "fb")}
    return AllocationPlan([fa, fb], {"ia": ia, "ib": ib, "sh": sh}, outs,
                          MODE_DEDICATED), net


def test_contention_denies_overloaded_failover():
    plan, net = contention_plan(10e6)
    rep = simulate(plan, net, SimConfig(50_000, seed=5, contention_aware=True))
    for fid in ("fa", "fb"):
        plain = rep.flows[fid].estimate
        cont = rep.contention[fid].estimate
        # both 6 Mpps flows cannot fail over onto one 10 Mpps instance
        assert cont <= plain
        assert cont < plain - 0.1


def test_contention_noop_with_spare_capacity():
    plan, net = contention_plan(100e6)
    rep = simulate(plan, net, SimConfig(50_000, seed=5, contention_aware=True))
    for fid in ("fa", "fb"):
        assert rep.contention[fid] == rep.flows[fid]


def test_contention_disabled_by_default():
    plan, net = contention_plan(10e6)
    rep = simulate(plan, net, SimConfig(1_000, seed=5))
    assert rep.contention is None


def test_sampling_tolerance_values():
    assert sampling_tolerance(0.5, 10_000) == pytest.approx(0.02)
    assert sampling_tolerance(0.0, 100) == 0.0
    assert sampling_tolerance(0.999, 1_000_000) == pytest.approx(
        4.0 * np.sqrt(0.999 * 0.001 / 1_000_000))


def test_meets_level_band():
    tol = sampling_tolerance(0.999, 1_000_000)
    assert meets_level(0.999, 0.999, 1_000_000)
    assert meets_level(0.999 - 0.5 * tol, 0.999, 1_000_000)
    assert not meets_level(0.999 - 2.0 * tol, 0.999, 1_000_000)


def crafted_report():
    flows = {"f1": FlowEstimate(0.9995, 0.0, 0, 1),
             "f2": FlowEstimate(0.99999, 0.0, 0, 1),
             "f3": FlowEstimate(0.95, 0.0, 0, 1)}
    return SimReport(seed=0, replications=1, flows=flows)


def test_unavailability_cdf_series():
    u, frac = crafted_report().unavailability_cdf()
    assert u == pytest.approx([1e-5, 5e-4, 0.05])
    assert frac == pytest.approx([1 / 3, 2 / 3, 1.0])


def test_nines_fractions():
    got = crafted_report().nines_fractions(levels=(2, 3, 4, 5))
    assert got == {2: pytest.approx(2 / 3), 3: pytest.approx(2 / 3),
                   4: pytest.approx(1 / 3), 5: pytest.approx(1 / 3)}
