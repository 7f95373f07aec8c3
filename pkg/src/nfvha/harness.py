"""End-to-end pipeline and experiment harness.

run_experiment wires the stages together for one config: build the scenario
(topology, flows, provisioned primaries), analyze structural dependencies,
estimate backup demand, place backup instances, assign backup chains, and
summarize. With runs > 1 the flow draw is re-seeded per run and the metrics
are averaged with a 95% confidence interval; the first run's plan is kept as
the representative artifact.

threshold_sweep repeats placement and assignment across dependency-threshold
values on one fixed scenario, reusing the threshold-independent dependency
table.

build_correlation_study constructs the paired random-versus-aware placement
comparison on one topology: identical primaries, backup hosts drawn either
uniformly (collisions with primary hosts allowed) or restricted to nodes
outside the primaries' structural exclusion zones. Simulating both plans
under one seed shares every common element's draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .assignment import (STATUS_ACCEPTED, AllocationPlan, AssignmentLimits,
                         run_assignment)
from .errors import ScenarioError
from .estimate import BackupDemand, estimate_demand
from .netmodel import (MODE_DEDICATED, ROLE_BACKUP, ROLE_PRIMARY, FlowSpec,
                       NfInstance, NfType)
from .placement import PlacementResult, backup_budgets, place_backups
from .scenario import BuiltScenario, ScenarioConfig, build_scenario, stream
from .structure import DependencyProfile, build_profile, dependency_table
from .topology import Network, hop_matrix


@dataclass
class MetricsReport:
    flows_total: int
    flows_accepted: int
    primaries: int
    backups_placed: int
    backups_used: int
    backup_nodes_used: int
    overbuild: float
    acceptance_by_class: dict[str, float]
    used_by_class: dict[str, int]
    unplaced: int

    def as_dict(self) -> dict:
        return {
            "flows_total": self.flows_total,
            "flows_accepted": self.flows_accepted,
            "primaries": self.primaries,
            "backups_placed": self.backups_placed,
            "backups_used": self.backups_used,
            "backup_nodes_used": self.backup_nodes_used,
            "overbuild": self.overbuild,
            "acceptance_by_class": dict(sorted(self.acceptance_by_class.items())),
            "used_by_class": dict(sorted(self.used_by_class.items())),
            "unplaced": self.unplaced,
        }


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    scenario: BuiltScenario
    profile: DependencyProfile
    demand: BackupDemand
    placement: PlacementResult
    plan: AllocationPlan
    metrics: MetricsReport
    metrics_runs: list[MetricsReport] = field(default_factory=list)
    metrics_ci: dict | None = None


def compute_metrics(scn: BuiltScenario, placement: PlacementResult,
                    plan: AllocationPlan) -> MetricsReport:
    primaries = sum(1 for i in scn.instances.values() if i.role == ROLE_PRIMARY)
    used_ids = plan.used_instances()
    by_class: dict[str, set[str]] = {c: set() for c in scn.class_requirements}
    accept: dict[str, list[int]] = {c: [0, 0] for c in scn.class_requirements}
    for f in plan.flows:
        out = plan.outcomes[f.id]
        accept[f.avail_class][1] += 1
        if out.status == STATUS_ACCEPTED:
            accept[f.avail_class][0] += 1
            for ch in out.chains:
                by_class[f.avail_class].update(ch.instance_ids)
    return MetricsReport(
        flows_total=len(plan.flows),
        flows_accepted=len(plan.accepted()),
        primaries=primaries,
        backups_placed=len(placement.placed),
        backups_used=len(used_ids),
        backup_nodes_used=len({plan.instances[i].host for i in used_ids}),
        overbuild=len(used_ids) / primaries if primaries else 0.0,
        acceptance_by_class={c: (a / t if t else 1.0) for c, (a, t) in accept.items()},
        used_by_class={c: len(s) for c, s in by_class.items()},
        unplaced=sum(placement.unplaced.values()),
    )


def _primary_nodes_by_class(flows: list[FlowSpec]) -> dict[str, frozenset[str]]:
    acc: dict[str, set[str]] = {}
    for f in flows:
        acc.setdefault(f.avail_class, set()).update(f.primary_hosts)
    return {c: frozenset(s) for c, s in acc.items()}


def allocate(scn: BuiltScenario, profile: DependencyProfile,
             core_budget: dict[str, int] | None = None,
             mem_budget: dict[str, float] | None = None
             ) -> tuple[BackupDemand, PlacementResult, AllocationPlan]:
    """Estimate, place and assign for an already-built scenario."""
    cfg = scn.config
    if core_budget is None:
        core_budget, mem_budget = backup_budgets(
            scn.net, cfg.backup_cores_fraction, cfg.backup_mem_fraction)
    flows_by_class: dict[str, list[FlowSpec]] = {}
    for f in scn.flows:
        flows_by_class.setdefault(f.avail_class, []).append(f)
    eligible = [n for n in scn.net.nodes
                if core_budget.get(n, 0) > 0 and n not in scn.net.end_nodes]
    if not eligible:
        raise ScenarioError("no node has backup capacity")
    worst_node = min(scn.net.node_avail[n] for n in eligible)
    demand = estimate_demand(flows_by_class, scn.class_requirements,
                             scn.nf_types, worst_node, cfg.x_max)

    rng = stream(cfg.seed, "backup-avail")
    lo, hi = cfg.instance_avail
    draw = (lambda _k: float(rng.uniform(lo, hi))) if hi > lo else (lambda _k: lo)
    placement = place_backups(
        scn.net, demand, profile, _primary_nodes_by_class(scn.flows),
        core_budget, mem_budget, scn.nf_types, scn.class_requirements,
        cfg.class_order, cfg.mode, draw)

    instances = dict(scn.instances)
    for inst in placement.placed:
        instances[inst.id] = inst
    limits = AssignmentLimits(cfg.max_compositions, cfg.hop_budget,
                              cfg.k_paths, cfg.strict_distinct_hosts)
    hops = hop_matrix(scn.net) if cfg.hop_budget is not None else None
    plan = run_assignment(scn.flows, instances, profile, scn.net, cfg.mode,
                          cfg.order_policy, limits, hops,
                          strict_independence=cfg.independence == "path")
    return demand, placement, plan


def run_experiment(cfg: ScenarioConfig) -> ExperimentResult:
    """One config through the whole pipeline (averaging over cfg.runs)."""
    cfg.validate()
    first: ExperimentResult | None = None
    reports: list[MetricsReport] = []
    for r in range(cfg.runs):
        run_cfg = cfg if r == 0 else replace(cfg, seed=cfg.seed + 1000 * r)
        scn = build_scenario(run_cfg)
        profile = build_profile(scn.net, run_cfg.dependency_threshold,
                                depth=run_cfg.correlation_depth)
        demand, placement, plan = allocate(scn, profile)
        metrics = compute_metrics(scn, placement, plan)
        reports.append(metrics)
        if first is None:
            first = ExperimentResult(cfg, scn, profile, demand, placement,
                                     plan, metrics)
    assert first is not None
    first.metrics_runs = reports
    if cfg.runs > 1:
        first.metrics_ci = _ci_summary(reports)
    return first


def _ci_summary(reports: list[MetricsReport]) -> dict:
    def ci(values):
        n = len(values)
        mean = sum(values) / n
        if n < 2:
            return {"mean": mean, "half_width": 0.0}
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
        return {"mean": mean, "half_width": 1.96 * math.sqrt(var / n)}

    return {
        "backups_used": ci([m.backups_used for m in reports]),
        "overbuild": ci([m.overbuild for m in reports]),
        "acceptance": ci([m.flows_accepted / m.flows_total for m in reports]),
    }


def threshold_sweep(cfg: ScenarioConfig, thresholds) -> dict:
    """Placement/assignment outcomes across dependency thresholds on one
    scenario; the dependency table is computed once.
    """
    cfg.validate()
    table = dependency_table(build_scenario(cfg).net)
    out: dict = {"thresholds": [], "scenario_seed": cfg.seed}
    for t in thresholds:
        # placement and assignment mutate reservation state: rebuild flows
        fresh = build_scenario(cfg)
        profile = build_profile(fresh.net, t, table, cfg.correlation_depth)
        _, placement, plan = allocate(fresh, profile)
        metrics = compute_metrics(fresh, placement, plan)
        out["thresholds"].append({
            "threshold": t,
            "backups_placed": metrics.backups_placed,
            "backups_used": metrics.backups_used,
            "overbuild": metrics.overbuild,
            "accepted": metrics.flows_accepted,
            "coverage": profile.coverage(),
        })
    return out


def build_correlation_study(cfg: ScenarioConfig, chain_length: int = 2,
                            requirement: float = 0.99999,
                            instance_avail: float = 1.0
                            ) -> tuple[Network, AllocationPlan, AllocationPlan]:
    """Paired plans for the placement-strategy comparison.

    Every flow gets one dedicated primary chain and one dedicated backup
    chain of fresh instances. Primary hosts are drawn uniformly; backup hosts
    are drawn uniformly over all hosting nodes for the first plan (collisions
    with the primaries allowed, as an unconstrained baseline would) and
    uniformly over nodes outside the primaries' hosting set and structural
    exclusion zone for the second. Flows are mutually independent by
    construction so both reservation modes behave identically here.
    """
    cfg.validate()
    net = _study_network(cfg)
    profile = build_profile(net, cfg.dependency_threshold,
                            depth=cfg.correlation_depth)
    names = [t["name"] for t in cfg.nf_catalog]
    if chain_length > len(names):
        raise ScenarioError("chain longer than the NF catalog")
    nf_types = {n: NfType(name=n, capacity_pps=10e6, avail=instance_avail)
                for n in names}
    hosts = list(net.host_nodes())
    rng = stream(cfg.seed, "correlation-study")

    flows: list[FlowSpec] = []
    instances: dict[str, NfInstance] = {}
    rand_chains: dict[str, tuple[str, ...]] = {}
    aware_chains: dict[str, tuple[str, ...]] = {}
    width = len(str(cfg.flow_count - 1))
    seq = 0
    for k in range(cfg.flow_count):
        chain = tuple(names[int(i)] for i in
                      rng.choice(len(names), size=chain_length, replace=False))
        p_hosts = tuple(hosts[int(i)] for i in
                        rng.choice(len(hosts), size=chain_length, replace=False))
        r_hosts = tuple(hosts[int(rng.integers(len(hosts)))]
                        for _ in range(chain_length))
        allowed = [n for n in hosts
                   if n not in p_hosts
                   and n not in profile.exclusion_zone(p_hosts)]
        if len(allowed) < chain_length:
            raise ScenarioError(
                f"flow {k}: not enough uncorrelated nodes at threshold "
                f"{cfg.dependency_threshold}")
        a_hosts = tuple(allowed[int(i)] for i in
                        rng.choice(len(allowed), size=chain_length, replace=False))

        fid = f"f{k:0{width}d}"
        p_ids = []
        for pos, nf in enumerate(chain):
            iid = f"p{seq:04d}.{nf}"
            instances[iid] = NfInstance(id=iid, nf=nf_types[nf],
                                        host=p_hosts[pos], role=ROLE_PRIMARY)
            p_ids.append(iid)
            seq += 1
        flow = FlowSpec(id=fid, src=p_hosts[0], dst=p_hosts[-1],
                        rate_pps=cfg.rate_pps, chain=chain,
                        avail_class="study", avail_req=requirement,
                        primary_instances=tuple(p_ids),
                        primary_hosts=p_hosts, primary_path=p_hosts)
        a_p = 1.0
        for iid in p_ids:
            a_p *= instances[iid].avail
        for h in dict.fromkeys(p_hosts):
            a_p *= net.node_avail[h]
        flow = replace(flow, primary_avail=a_p)
        flows.append(flow)

        for tag, chosen, sink in (("r", r_hosts, rand_chains),
                                  ("a", a_hosts, aware_chains)):
            ids = []
            for pos, nf in enumerate(chain):
                iid = f"b{tag}{seq:04d}.{nf}"
                instances[iid] = NfInstance(id=iid, nf=nf_types[nf],
                                            host=chosen[pos], role=ROLE_BACKUP)
                ids.append(iid)
                seq += 1
            sink[fid] = tuple(ids)

    from .assignment import AssignmentOutcome
    from .netmodel import BackupChain, chain_availability, service_availability

    def plan_for(chain_map):
        outcomes = {}
        for f in flows:
            ids = chain_map[f.id]
            ch = BackupChain(f.id, ids, tuple(instances[i].host for i in ids))
            a = service_availability(f.primary_avail,
                                     [chain_availability(ch, net, instances)])
            outcomes[f.id] = AssignmentOutcome(f.id, STATUS_ACCEPTED, None,
                                               (ch,), a)
        return AllocationPlan(flows, instances, outcomes, MODE_DEDICATED)

    return net, plan_for(rand_chains), plan_for(aware_chains)


def _study_network(cfg: ScenarioConfig) -> Network:
    from .scenario import _build_network

    return _build_network(cfg)
