"""Brute-force oracle: limits, exact minima, and the naive dependency table."""

import random

import pytest

from nfvha.errors import ScenarioError
from nfvha.netmodel import (MODE_DEDICATED, MODE_SHARED, ROLE_PRIMARY,
                            FlowSpec, NfInstance, NfType,
                            service_availability)
from nfvha.oracle import (SEARCH_SPACE_LIMIT, TinyScenario,
                          exhaustive_min_backups, independent_di_recompute,
                          search_space_bound)
from nfvha.structure import dependency_table
from nfvha.topology import make_network

FW = NfType(name="fw", capacity_pps=10e6)


def mesh(avails, ends=()):
    names = list(avails)
    links = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    return make_network(links, node_avail=avails, end_nodes=ends)


def base_net():
    return mesh({"s": 1.0, "t": 1.0, "m1": 0.999, "bk": 0.999},
                ends=("s", "t"))


def prim(iid, host, avail=0.99):
    return NfInstance(id=iid, nf=FW, host=host, role=ROLE_PRIMARY, avail=avail)


def pflow(fid, inst, host, req, pavail, rate=1e6):
    return FlowSpec(id=fid, src="s", dst="t", rate_pps=rate, chain=("fw",),
                    avail_class="c", avail_req=req,
                    primary_instances=(inst,), primary_hosts=(host,),
                    primary_avail=pavail)


def check_witness(scn, res):
    # recompute every witness chain from the placement alone
    placed = {f"o{k}.{t}": (t, n) for k, (t, n) in enumerate(res.placement)}
    for f in scn.flows:
        avails = []
        for cids in res.chains[f.id]:
            a = 1.0
            hosts = set()
            for iid in cids:
                t, n = placed[iid]
                a *= scn.nf_types[t].avail
                hosts.add(n)
            for h in hosts:
                a *= scn.net.node_avail[h]
            avails.append(a)
        assert service_availability(f.primary_avail, avails) >= f.avail_req


def test_scenario_size_guards():
    good = dict(net=base_net(),
                flows=(pflow("f1", "pp", "m1", 0.9, 0.97),),
                nf_types={"fw": FW}, instances={"pp": prim("pp", "m1")},
                core_budget={"bk": 2})
    TinyScenario(**good)

    with pytest.raises(ScenarioError):
        TinyScenario(**{**good, "net": mesh({f"n{k}": 0.9 for k in range(9)})})
    many = tuple(pflow(f"f{k}", "pp", "m1", 0.9, 0.97) for k in range(7))
    with pytest.raises(ScenarioError):
        TinyScenario(**{**good, "flows": many})
    four = {t.name: t for t in (FW, NfType(name="a"), NfType(name="b"),
                                NfType(name="c"))}
    with pytest.raises(ScenarioError):
        TinyScenario(**{**good, "nf_types": four})
    deep = FlowSpec(id="fd", src="s", dst="t", rate_pps=1e6,
                    chain=("fw", "fw", "fw"), avail_class="c", avail_req=0.9,
                    primary_instances=("x0", "x1", "x2"),
                    primary_hosts=("m1", "m1", "m1"), primary_avail=0.9)
    with pytest.raises(ScenarioError):
        TinyScenario(**{**good, "flows": (deep,)})
    loose = FlowSpec(id="fl", src="s", dst="t", rate_pps=1e6, chain=("fw",),
                     avail_class="c", avail_req=0.9)
    with pytest.raises(ScenarioError):
        TinyScenario(**{**good, "flows": (loose,)})


def test_zero_backups_when_primary_suffices():
    scn = TinyScenario(net=base_net(),
                       flows=(pflow("f1", "pp", "m1", 0.9, 0.97),),
                       nf_types={"fw": FW}, instances={"pp": prim("pp", "m1")},
                       core_budget={"bk": 2})
    res = exhaustive_min_backups(scn)
    assert res.min_backups == 0
    assert res.placement == ()
    assert res.chains == {"f1": ()}


def test_single_backup_minimum_and_witness():
    scn = TinyScenario(net=base_net(),
                       flows=(pflow("f1", "pp", "m1", 0.999, 0.99),),
                       nf_types={"fw": FW}, instances={"pp": prim("pp", "m1")},
                       core_budget={"bk": 2})
    res = exhaustive_min_backups(scn)
    assert res.min_backups == 1
    assert res.placement == (("fw", "bk"),)  # m1 has no spare cores
    assert res.chains == {"f1": (("o0.fw",),)}
    check_witness(scn, res)


def test_two_disjoint_chains_when_one_is_short():
    # single chain: 1 - 0.1 * (1 - 0.999 * 0.999) = 0.9998001 < 0.9999
    scn = TinyScenario(net=base_net(),
                       flows=(pflow("f1", "pp", "m1", 0.9999, 0.9),),
                       nf_types={"fw": FW}, instances={"pp": prim("pp", "m1")},
                       core_budget={"bk": 4})
    res = exhaustive_min_backups(scn)
    assert res.min_backups == 2
    assert {len(c) for c in res.chains["f1"]} == {1}
    assert len(res.chains["f1"]) == 2
    check_witness(scn, res)


def test_relabeling_preserves_minimum():
    def build(names):
        s, t, m1, bk = names
        net = mesh({s: 1.0, t: 1.0, m1: 0.999, bk: 0.999}, ends=(s, t))
        f = FlowSpec(id="f1", src=s, dst=t, rate_pps=1e6, chain=("fw",),
                     avail_class="c", avail_req=0.9999,
                     primary_instances=("pp",), primary_hosts=(m1,),
                     primary_avail=0.9)
        return TinyScenario(net=net, flows=(f,), nf_types={"fw": FW},
                            instances={"pp": prim("pp", m1)},
                            core_budget={bk: 4})
    a = exhaustive_min_backups(build(("s", "t", "m1", "bk")))
    b = exhaustive_min_backups(build(("zz", "q", "alpha", "beta")))
    assert a.min_backups == b.min_backups == 2


def two_flow_case(mode):
    net = mesh({"s": 1.0, "t": 1.0, "m1": 0.999, "m2": 0.999, "bk": 0.999},
               ends=("s", "t"))
    flows = (pflow("fa", "pa", "m1", 0.999, 0.99, rate=6e6),
             pflow("fb", "pb", "m2", 0.999, 0.99, rate=6e6))
    return TinyScenario(net=net, flows=flows, nf_types={"fw": FW},
                        instances={"pa": prim("pa", "m1"),
                                   "pb": prim("pb", "m2")},
                        core_budget={"bk": 4}, mode=mode, max_backups=3)


def test_shared_reservation_needs_fewer_instances():
    # 6 + 6 Mpps cannot both reserve on one 10 Mpps instance unless shared
    ded = exhaustive_min_backups(two_flow_case(MODE_DEDICATED))
    sha = exhaustive_min_backups(two_flow_case(MODE_SHARED))
    assert ded.min_backups == 2
    assert sha.min_backups == 1
    check_witness(two_flow_case(MODE_DEDICATED), ded)
    check_witness(two_flow_case(MODE_SHARED), sha)


def test_shared_never_needs_more_seeded():
    rng = random.Random(77)
    for _ in range(5):
        pa = rng.uniform(0.98, 0.995)
        pb = rng.uniform(0.98, 0.995)
        net = mesh({"s": 1.0, "t": 1.0, "m1": 0.999, "m2": 0.999,
                    "bk": rng.uniform(0.995, 0.999)}, ends=("s", "t"))
        flows = (pflow("fa", "pa", "m1", 0.9995, pa,
                       rate=rng.uniform(3e6, 7e6)),
                 pflow("fb", "pb", "m2", 0.9995, pb,
                       rate=rng.uniform(3e6, 7e6)))
        insts = {"pa": prim("pa", "m1", pa), "pb": prim("pb", "m2", pb)}
        args = dict(net=net, flows=flows, nf_types={"fw": FW},
                    instances=insts, core_budget={"bk": 4}, max_backups=4)
        ded = exhaustive_min_backups(TinyScenario(**args))
        sha = exhaustive_min_backups(TinyScenario(**args, mode=MODE_SHARED))
        assert sha.min_backups <= ded.min_backups


def test_search_space_gate():
    net = mesh({f"n{k}": 0.99 for k in range(8)}, ends=("n0", "n7"))
    flows = tuple(
        FlowSpec(id=f"f{k}", src="n0", dst="n7", rate_pps=1e6,
                 chain=("fw", "nat"), avail_class="c", avail_req=0.99999,
                 primary_instances=(f"p{k}a", f"p{k}b"),
                 primary_hosts=("n1", "n2"), primary_avail=0.95)
        for k in range(3))
    scn = TinyScenario(net=net, flows=flows,
                       nf_types={"fw": FW, "nat": NfType(name="nat")},
                       instances={},
                       core_budget={f"n{k}": 8 for k in range(1, 7)},
                       max_backups=8)
    assert search_space_bound(scn) > SEARCH_SPACE_LIMIT
    with pytest.raises(ScenarioError):
        exhaustive_min_backups(scn)


def test_naive_table_matches_production():
    rng = random.Random(404)
    for _ in range(8):
        n = rng.randint(4, 7)
        names = [f"v{k}" for k in range(n)]
        links = []
        present = set()
        for i in range(1, n):            # random spanning tree first
            a = names[rng.randrange(i)]
            links.append((a, names[i]))
            present.add(frozenset((a, names[i])))
        for _ in range(rng.randint(0, n)):
            a, b = rng.sample(names, 2)
            if frozenset((a, b)) not in present:
                present.add(frozenset((a, b)))
                links.append((a, b))
        net = make_network(links)
        naive = independent_di_recompute(net)
        table = dependency_table(net)
        assert naive.keys() == table.keys()
        for key in table:
            assert naive[key] == table[key]


def test_naive_table_disconnection_counts_whole_pair():
    # removing the middle of a path cuts it; both halves score the cut 1.0
    net = make_network([("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")])
    naive = independent_di_recompute(net)
    table = dependency_table(net)
    assert naive == table
    assert naive[("a", "c")] > naive[("a", "d")]


def test_naive_table_skips_end_node_removal():
    net = make_network([("s", "a"), ("a", "b"), ("b", "t")],
                       end_nodes=("s", "t"))
    naive = independent_di_recompute(net)
    assert all(removed in ("a", "b") for _, removed in naive)


def test_naive_table_size_guards():
    big = mesh({f"n{k}": 0.99 for k in range(13)})
    with pytest.raises(ScenarioError):
        independent_di_recompute(big)
    with pytest.raises(ScenarioError):
        independent_di_recompute(make_network([("a", "b")]))
