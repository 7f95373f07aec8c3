"""Deterministic JSON forms for the core objects.

Same plan in, same bytes out: dict keys are sorted on dump and every list is
emitted in a defined order (node order, sorted link pairs, flow input order,
sorted instance ids). Nothing environment-dependent (timestamps, absolute
paths, object ids) goes into the payload.

Reservation state is stored per instance as lists of flow-id groups and is
restored verbatim on load; admission policy is not re-run, the recorded
grouping is trusted.
"""

from __future__ import annotations

import json

from .assignment import AllocationPlan, AssignmentOutcome
from .errors import ConfigError
from .montecarlo import FlowEstimate, SimReport
from .netmodel import (BackupChain, FlowSpec, NfInstance, NfType,
                       SharingGroup)
from .topology import Network, make_network


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def network_to_dict(net: Network) -> dict:
    return {
        "nodes": [
            {
                "id": n,
                "cores": net.node_caps[n],
                "avail": net.node_avail[n],
                "mem_gb": net.node_mem[n],
                "end": n in net.end_nodes,
            }
            for n in net.nodes
        ],
        "links": [list(l) for l in net.links],
    }


def network_from_dict(d: dict) -> Network:
    try:
        nodes = [n["id"] for n in d["nodes"]]
        return make_network(
            [tuple(l) for l in d["links"]],
            node_caps={n["id"]: n["cores"] for n in d["nodes"]},
            node_avail={n["id"]: n["avail"] for n in d["nodes"]},
            node_mem={n["id"]: n["mem_gb"] for n in d["nodes"]},
            end_nodes=[n["id"] for n in d["nodes"] if n.get("end")],
            nodes=nodes,
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad network payload: {e}") from None


def nf_type_to_dict(t: NfType) -> dict:
    return {"name": t.name, "cores": t.cores, "capacity_pps": t.capacity_pps,
            "avail": t.avail, "mem_gb": t.mem_gb}


def nf_type_from_dict(d: dict) -> NfType:
    return NfType(name=d["name"], cores=d.get("cores", 1),
                  capacity_pps=d.get("capacity_pps", 10e6),
                  avail=d.get("avail", 0.999),
                  mem_gb=d.get("mem_gb", 2.0))


def flow_to_dict(f: FlowSpec) -> dict:
    d = {
        "id": f.id,
        "src": f.src,
        "dst": f.dst,
        "rate_pps": f.rate_pps,
        "chain": list(f.chain),
        "avail_class": f.avail_class,
        "avail_req": f.avail_req,
    }
    if f.bound:
        d["primary_instances"] = list(f.primary_instances)
        d["primary_hosts"] = list(f.primary_hosts)
        d["primary_path"] = list(f.primary_path)
        d["primary_avail"] = f.primary_avail
    return d


def flow_from_dict(d: dict) -> FlowSpec:
    try:
        return FlowSpec(
            id=d["id"], src=d["src"], dst=d["dst"],
            rate_pps=d["rate_pps"], chain=tuple(d["chain"]),
            avail_class=d["avail_class"], avail_req=d["avail_req"],
            primary_instances=tuple(d.get("primary_instances", ())),
            primary_hosts=tuple(d.get("primary_hosts", ())),
            primary_path=tuple(d.get("primary_path", ())),
            primary_avail=d.get("primary_avail"),
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad flow payload: {e}") from None


def instance_to_dict(inst: NfInstance) -> dict:
    return {
        "id": inst.id,
        "nf": inst.nf.name,
        "host": inst.host,
        "role": inst.role,
        "avail": inst.avail,
        "mode": inst.ledger.mode,
        "groups": [sorted(g.members) for g in inst.ledger.groups],
    }


def instance_from_dict(d: dict, nf_types: dict[str, NfType],
                       flows: dict[str, FlowSpec]) -> NfInstance:
    inst = NfInstance(id=d["id"], nf=nf_types[d["nf"]], host=d["host"],
                      role=d["role"], avail=d["avail"], mode=d["mode"])
    for fids in d["groups"]:
        grp = SharingGroup()
        for fid in fids:
            grp.members[fid] = flows[fid]
        inst.ledger.groups.append(grp)
    return inst


def outcome_to_dict(out: AssignmentOutcome) -> dict:
    return {
        "flow": out.flow_id,
        "status": out.status,
        "reason": out.reason,
        "achieved_avail": out.achieved_avail,
        "chains": [
            {"instances": list(c.instance_ids), "hosts": list(c.hosts)}
            for c in out.chains
        ],
    }


def plan_to_dict(plan: AllocationPlan, net: Network) -> dict:
    types = sorted({i.nf.name: i.nf for i in plan.instances.values()}.items())
    return {
        "mode": plan.mode,
        "network": network_to_dict(net),
        "nf_types": [nf_type_to_dict(t) for _, t in types],
        "flows": [flow_to_dict(f) for f in plan.flows],
        "instances": [instance_to_dict(plan.instances[i])
                      for i in sorted(plan.instances)],
        "outcomes": [outcome_to_dict(plan.outcomes[f.id]) for f in plan.flows],
    }


def plan_from_dict(d: dict) -> tuple[AllocationPlan, Network]:
    try:
        net = network_from_dict(d["network"])
        nf_types = {t["name"]: nf_type_from_dict(t) for t in d["nf_types"]}
        flows = [flow_from_dict(fd) for fd in d["flows"]]
        by_id = {f.id: f for f in flows}
        instances = {
            i["id"]: instance_from_dict(i, nf_types, by_id)
            for i in d["instances"]
        }
        outcomes = {}
        for od in d["outcomes"]:
            chains = tuple(
                BackupChain(od["flow"], tuple(c["instances"]),
                            tuple(c["hosts"]))
                for c in od["chains"])
            outcomes[od["flow"]] = AssignmentOutcome(
                od["flow"], od["status"], od["reason"], chains,
                od["achieved_avail"])
        return AllocationPlan(flows, instances, outcomes, d["mode"]), net
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad plan payload: {e}") from None


def sim_report_to_dict(rep: SimReport) -> dict:
    d = {
        "seed": rep.seed,
        "replications": rep.replications,
        "flows": {
            fid: {
                "estimate": est.estimate,
                "half_width": est.half_width,
                "served": est.served,
            }
            for fid, est in rep.flows.items()
        },
    }
    if rep.contention is not None:
        d["contention"] = {
            fid: {
                "estimate": est.estimate,
                "half_width": est.half_width,
                "served": est.served,
            }
            for fid, est in rep.contention.items()
        }
    return d


def sim_report_from_dict(d: dict) -> SimReport:
    def unpack(block):
        return {
            fid: FlowEstimate(v["estimate"], v["half_width"], v["served"],
                              d["replications"])
            for fid, v in block.items()
        }

    try:
        return SimReport(
            seed=d["seed"], replications=d["replications"],
            flows=unpack(d["flows"]),
            contention=unpack(d["contention"]) if "contention" in d else None,
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad simulation payload: {e}") from None
