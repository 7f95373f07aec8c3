"""Monte Carlo verification of allocation plans.

Each replication draws an up/down state for every hosting node and every
instance independently (Bernoulli with the element's availability). An
instance is operational when it and its host are both up; a chain is up when
all its instances are operational; a flow is served when its primary chain or
any of its backup chains is up.

Randomness is counter-based Philox, keyed per element from (seed, kind, id),
so every element owns a stream independent of what else the plan contains.
Two plans simulated with the same seed therefore share the draws of every
element they have in common (common random numbers), which makes paired
comparisons sharp and gives monotonicity: adding a backup chain can only
raise a flow's served count.

The optional contention check replays failovers: flows whose primary is down
land on their first up backup chain, and when the summed rate of concurrent
failovers at an instance exceeds its capacity those flows are denied for the
replication. Its estimates are reported separately.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .assignment import STATUS_ACCEPTED, AllocationPlan

CHUNK = 65536


@dataclass(frozen=True)
class SimConfig:
    replications: int = 1_000_000
    seed: int = 0
    contention_aware: bool = False


@dataclass(frozen=True)
class FlowEstimate:
    estimate: float
    half_width: float
    served: int
    replications: int


@dataclass
class SimReport:
    seed: int
    replications: int
    flows: dict[str, FlowEstimate]
    contention: dict[str, FlowEstimate] | None = None

    def unavailability_cdf(self) -> tuple[list[float], list[float]]:
        """Monotone CDF series: unavailability values, fraction of flows <=."""
        u = sorted(1.0 - e.estimate for e in self.flows.values())
        n = len(u)
        return u, [(k + 1) / n for k in range(n)]

    def nines_fractions(self, levels=(2, 3, 4, 5, 6)) -> dict[int, float]:
        """Fraction of flows reaching k nines of empirical availability."""
        n = max(1, len(self.flows))
        out = {}
        for k in levels:
            level = 1.0 - 10.0 ** -k
            out[k] = sum(1 for e in self.flows.values() if e.estimate >= level) / n
        return out


def _element_stream(seed: int, kind: str, ident: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{seed}:{kind}:{ident}".encode(), digest_size=16).digest()
    key = int.from_bytes(digest, "big")
    return np.random.Generator(np.random.Philox(key=key))


def _plan_elements(plan: AllocationPlan):
    """Hosting nodes, instances and per-flow chain structure actually in play."""
    flows = {}
    nodes: set[str] = set()
    insts: set[str] = set()
    for f in plan.flows:
        if not f.bound:
            raise ValueError(f"flow {f.id!r} has no primary binding to simulate")
        out = plan.outcomes.get(f.id)
        chains = [list(zip(f.primary_instances, f.primary_hosts))]
        if out is not None and out.status == STATUS_ACCEPTED:
            for ch in out.chains:
                chains.append(list(zip(ch.instance_ids, ch.hosts)))
        for ch in chains:
            for iid, host in ch:
                insts.add(iid)
                nodes.add(host)
        flows[f.id] = chains
    return flows, sorted(nodes), sorted(insts)


def simulate(plan: AllocationPlan, net, config: SimConfig) -> SimReport:
    """Estimate per-flow availability over config.replications draws."""
    flow_chains, nodes, inst_ids = _plan_elements(plan)
    node_avail = {n: net.node_avail[n] for n in nodes}
    inst_avail = {i: plan.instances[i].avail for i in inst_ids}

    node_rng = {n: _element_stream(config.seed, "node", n) for n in nodes}
    inst_rng = {i: _element_stream(config.seed, "inst", i) for i in inst_ids}

    served = {fid: 0 for fid in flow_chains}
    contention_served = dict(served) if config.contention_aware else None
    rates = {f.id: f.rate_pps for f in plan.flows}
    capacity = {i: plan.instances[i].capacity_pps for i in inst_ids}

    left = config.replications
    while left > 0:
        n = min(CHUNK, left)
        left -= n
        node_up = {m: node_rng[m].random(n) < node_avail[m] for m in nodes}
        inst_up = {i: inst_rng[i].random(n) < inst_avail[i] for i in inst_ids}

        chain_up: dict[str, list[np.ndarray]] = {}
        for fid, chains in flow_chains.items():
            ups = []
            for ch in chains:
                up = np.ones(n, dtype=bool)
                for iid, host in ch:
                    up &= inst_up[iid]
                    up &= node_up[host]
                ups.append(up)
            chain_up[fid] = ups
            ok = ups[0].copy()
            for b in ups[1:]:
                ok |= b
            served[fid] += int(ok.sum())

        if config.contention_aware:
            _contend(flow_chains, chain_up, rates, capacity, contention_served, n)

    def pack(counts):
        out = {}
        for fid, s in counts.items():
            p = s / config.replications
            hw = 1.96 * float(np.sqrt(p * (1.0 - p) / config.replications))
            out[fid] = FlowEstimate(p, hw, s, config.replications)
        return out

    report = SimReport(config.seed, config.replications, pack(served))
    if config.contention_aware:
        report.contention = pack(contention_served)
    return report


def _contend(flow_chains, chain_up, rates, capacity, counts, n):
    """Deny flows whose failover overloads a backup instance this replication."""
    demand = {}
    failover = {}
    for fid, chains in flow_chains.items():
        ups = chain_up[fid]
        primary_down = ~ups[0]
        taken = np.zeros(n, dtype=bool)
        marks = []
        for k, ch in enumerate(chains[1:], start=1):
            use = primary_down & ups[k] & ~taken
            taken |= use
            marks.append((k, use))
            for iid, _host in chains[k]:
                demand.setdefault(iid, np.zeros(n))
                demand[iid] += rates[fid] * use
        failover[fid] = marks
    overloaded = {iid: d > capacity[iid] for iid, d in demand.items()}
    for fid, chains in flow_chains.items():
        ups = chain_up[fid]
        ok = ups[0].copy()
        for k, use in failover[fid]:
            denied = np.zeros(n, dtype=bool)
            for iid, _host in chains[k]:
                denied |= overloaded[iid]
            ok |= use & ~denied
        counts[fid] += int(ok.sum())


def compare_placements(plans: dict[str, AllocationPlan], net,
                       config: SimConfig) -> dict[str, SimReport]:
    """Simulate each labelled plan under the same seed.

    Draws are keyed per element, so an instance or node appearing in several
    plans sees identical up/down samples in each: differences between the
    reports come from the plans alone.
    """
    return {label: simulate(p, net, config) for label, p in plans.items()}


def sampling_tolerance(p: float, replications: int) -> float:
    """4-sigma band of a Bernoulli mean estimate at probability p."""
    return 4.0 * float(np.sqrt(p * (1.0 - p) / replications))


def meets_level(estimate: float, level: float, replications: int) -> bool:
    """True when the estimate clears the level within sampling tolerance."""
    return estimate >= level - sampling_tolerance(level, replications)
