"""Per-flow backup chain selection.

Stages, in order:

1. candidate filtering — for every chain position, the backup instances of
   the right NF type whose hosts avoid the flow's primary hosting nodes and
   their structural exclusion zones, and which can still admit the flow's
   rate under the active reservation discipline;
2. feasibility trimming — instances are scored by their composite
   availability (instance times hosting node). While the worst composable
   chain misses the requirement, the weakest candidate is dropped (never
   emptying a position). When even the best composable chain misses it, that
   best chain is committed as a fixed extra chain, its lift folded into the
   effective primary availability, and trimming restarts on the remainder;
3. enumeration — full cartesian compositions over the trimmed sets,
   lexicographic by instance id, truncated at a configured cap, optionally
   filtered by a hop budget on src -> hosts -> dst;
4. weighting — each composition is scored by the sum of its instances'
   weights and the argmax wins (ties to the lexicographically smallest id
   sequence). An instance the flow could *share* (some existing reservation
   group whose members are all independent of the flow) weighs the full
   chain length; otherwise the weight is the instance's summed-demand
   utilization, always below one per chain position, so any chain with a
   shareable instance strictly outranks every chain without one.

Chosen chains (committed extras plus the winner) reserve atomically; any
rejection leaves no reservation behind.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .netmodel import (MODE_DEDICATED, MODE_SHARED, ROLE_BACKUP, BackupChain,
                       FlowSpec, NfInstance, chain_availability, free_capacity,
                       make_independence, release, reserve, service_availability)
from .structure import DependencyProfile
from .topology import Network

REASON_NO_CANDIDATES = "NO_CANDIDATES"
REASON_INSUFFICIENT_CANDIDATES = "INSUFFICIENT_CANDIDATES"
REASON_NO_PATH = "NO_PATH"

STATUS_ACCEPTED = "ACCEPTED"
STATUS_REJECTED = "REJECTED"


class AssignmentRejected(Exception):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}{': ' + detail if detail else ''}")
        self.reason = reason


@dataclass(frozen=True)
class AssignmentLimits:
    max_compositions: int = 10_000
    hop_budget: int | None = None
    k_paths: int = 3
    strict_distinct_hosts: bool = False


@dataclass(frozen=True)
class FeasibleSet:
    """Trimmed candidate sets plus any chains already committed on the way."""

    sets: tuple[tuple[str, ...], ...]
    committed: tuple[tuple[str, ...], ...]
    effective_primary: float

    @property
    def chains_required(self) -> int:
        return len(self.committed) + 1


@dataclass(frozen=True)
class AssignmentOutcome:
    flow_id: str
    status: str
    reason: str | None = None
    chains: tuple[BackupChain, ...] = ()
    achieved_avail: float | None = None


@dataclass
class AllocationPlan:
    flows: list[FlowSpec]
    instances: dict[str, NfInstance]
    outcomes: dict[str, AssignmentOutcome]
    mode: str

    def accepted(self) -> list[FlowSpec]:
        return [f for f in self.flows
                if self.outcomes[f.id].status == STATUS_ACCEPTED]

    def used_instances(self) -> list[str]:
        return sorted(i.id for i in self.instances.values()
                      if i.role == ROLE_BACKUP and i.ledger.groups)


def composite_availability(inst: NfInstance, net: Network) -> float:
    return inst.avail * net.node_avail[inst.host]


def candidate_instances(flow: FlowSpec, instances: dict[str, NfInstance],
                        profile: DependencyProfile, net: Network,
                        mode: str, independent=None) -> list[list[NfInstance]]:
    """Per-position admissible backup instances, sorted by id.

    Hosts must avoid the flow's primary hosting nodes and their structural
    exclusion zones; instances must be able to admit the flow's rate (in
    shared mode, joinable sharing groups count as admission).
    """
    if independent is None:
        independent = make_independence()
    forbidden = set(flow.primary_hosts) | profile.exclusion_zone(flow.primary_hosts)
    out: list[list[NfInstance]] = []
    for nf_name in flow.chain:
        found = []
        for iid in sorted(instances):
            inst = instances[iid]
            if inst.role != ROLE_BACKUP or inst.nf.name != nf_name:
                continue
            if inst.host in forbidden:
                continue
            if inst.ledger.has_flow(flow.id):
                continue
            if inst.ledger.can_admit(flow, inst.capacity_pps, independent):
                found.append(inst)
        out.append(found)
    return out


def min_max_availability(primary_avail: float, cand_sets, net: Network) -> tuple[float, float]:
    """End-to-end availability of the worst and best composable chain.

    Chains are scored with the per-instance composite product, which counts a
    co-hosting node once per instance and therefore never overstates the
    distinct-host availability.
    """
    worst = best = 1.0
    for cands in cand_sets:
        if not cands:
            raise ValueError("empty candidate set")
        comps = [composite_availability(i, net) for i in cands]
        worst *= min(comps)
        best *= max(comps)
    return (service_availability(primary_avail, [worst]),
            service_availability(primary_avail, [best]))


def _argmax_composition(cands: list[list[NfInstance]], net: Network) -> list[NfInstance]:
    # max() keeps the first maximum; groups are id-sorted, so ties go lex
    return [max(group, key=lambda i: composite_availability(i, net))
            for group in cands]


def feasible_set(flow: FlowSpec, cand_sets: list[list[NfInstance]],
                 net: Network) -> FeasibleSet:
    """Trim candidates until every composable chain meets the requirement.

    May commit extra chains when one chain cannot reach the requirement;
    raises AssignmentRejected when the candidates cannot support the number
    of chains needed.
    """
    if any(not s for s in cand_sets):
        raise AssignmentRejected(REASON_NO_CANDIDATES)
    if flow.primary_avail is None:
        raise ValueError(f"flow {flow.id!r} lacks primary availability")

    work = [sorted(s, key=lambda i: i.id) for s in cand_sets]
    committed: list[tuple[str, ...]] = []
    effective = flow.primary_avail

    while True:
        lo, hi = min_max_availability(effective, work, net)
        if hi >= flow.avail_req:
            break
        # best single chain still short: fix it and go again for one more
        picks = _argmax_composition(work, net)
        committed.append(tuple(i.id for i in picks))
        effective = hi
        chosen = {i.id for i in picks}
        work = [[i for i in s if i.id not in chosen] for s in work]
        if any(not s for s in work):
            raise AssignmentRejected(
                REASON_INSUFFICIENT_CANDIDATES,
                f"{len(committed) + 1} chains needed, candidates exhausted")

    while True:
        lo, hi = min_max_availability(effective, work, net)
        if lo >= flow.avail_req:
            break
        # drop the weakest composite among positions that keep a spare;
        # ties: larger candidate set first, then instance id
        victim = None
        for pos, group in enumerate(work):
            if len(group) < 2:
                continue
            for inst in group:
                key = (composite_availability(inst, net), -len(group), inst.id)
                if victim is None or key < victim[0]:
                    victim = (key, pos, inst)
        if victim is None:
            raise AssignmentRejected(
                REASON_INSUFFICIENT_CANDIDATES, "cannot trim further")
        _, pos, inst = victim
        work[pos] = [i for i in work[pos] if i.id != inst.id]

    return FeasibleSet(tuple(tuple(i.id for i in s) for s in work),
                       tuple(committed), effective)


def _stage_walk_hops(flow: FlowSpec, hosts: tuple[str, ...], hops) -> int | None:
    """Shortest src -> hosts... -> dst walk length: legs through fixed
    waypoints concatenate, so per-leg shortest distances sum exactly.
    None when some leg is unreachable.
    """
    total = 0
    stages = [flow.src, *hosts, flow.dst]
    for a, b in itertools.pairwise(stages):
        if a == b:
            continue
        d = hops.dist(a, b)
        if d is None:
            return None
        total += d
    return total


def enumerate_chains(flow: FlowSpec, fs: FeasibleSet,
                     instances: dict[str, NfInstance], net: Network,
                     limits: AssignmentLimits | None = None,
                     hops=None) -> list[tuple[str, ...]]:
    """Compositions over the feasible sets, lexicographic by id sequence,
    truncated at max_compositions. Compositions reusing one instance at two
    positions are skipped; strict_distinct_hosts also skips co-hosted ones.
    With a hop budget set, compositions whose stage walk src -> hosts -> dst
    exceeds the budget are dropped and only the k_paths walk-shortest
    survivors are kept (enumeration order breaking length ties). Raises
    NO_PATH when every composition is filtered away.
    """
    if limits is None:
        limits = AssignmentLimits()
    out: list[tuple[str, ...]] = []
    walk_hops: list[int] = []
    needs_hops = limits.hop_budget is not None
    for combo in itertools.islice(itertools.product(*fs.sets),
                                  limits.max_compositions):
        if len(fs.sets) > 1 and len(set(combo)) != len(combo):
            continue
        hosts = tuple(instances[iid].host for iid in combo)
        if limits.strict_distinct_hosts and len(set(hosts)) != len(hosts):
            continue
        if needs_hops:
            length = _stage_walk_hops(flow, hosts, hops)
            if length is None or length > limits.hop_budget:
                continue
            walk_hops.append(length)
        out.append(combo)
    if needs_hops and len(out) > limits.k_paths:
        ranked = sorted(range(len(out)), key=lambda k: (walk_hops[k], k))
        keep = sorted(ranked[:limits.k_paths])
        out = [out[k] for k in keep]
    if not out:
        raise AssignmentRejected(
            REASON_NO_PATH if needs_hops else REASON_INSUFFICIENT_CANDIDATES,
            "no composition survived filtering")
    return out


def instance_weight(flow: FlowSpec, inst: NfInstance, mode: str,
                    independent=None) -> float:
    """Sharing-aware goodness of one instance for this flow."""
    if independent is None:
        independent = make_independence()
    if mode == MODE_SHARED:
        for g in inst.ledger.groups:
            if g.members and all(independent(flow, m) for m in g.members.values()):
                return float(len(flow.chain))
    demand = sum(f.rate_pps for f in inst.ledger.flows())
    return demand / inst.capacity_pps


def chain_weight(flow: FlowSpec, chain_ids, instances: dict[str, NfInstance],
                 mode: str, independent=None) -> float:
    return sum(instance_weight(flow, instances[iid], mode, independent)
               for iid in chain_ids)


def _best_chain(flow: FlowSpec, fs: FeasibleSet, instances, net, mode,
                limits: AssignmentLimits, hops, independent) -> tuple[str, ...]:
    """Argmax-weight composition; ties to the lex-smallest id sequence."""
    weights = {}
    for s in fs.sets:
        for iid in s:
            if iid not in weights:
                weights[iid] = instance_weight(flow, instances[iid], mode, independent)

    plain = (limits.hop_budget is None and not limits.strict_distinct_hosts
             and len(set(flow.chain)) == len(flow.chain))
    total = 1
    for s in fs.sets:
        total *= len(s)
    if plain and total > 1:
        # separable score over the id-sorted grid: a C-order argmax over the
        # lexicographic prefix is the documented enumerate-then-argmax result
        shape = tuple(len(s) for s in fs.sets)
        k = min(total, limits.max_compositions)
        idx = np.unravel_index(np.arange(k), shape)
        score = np.zeros(k)
        for pos, s in enumerate(fs.sets):
            w = np.array([weights[iid] for iid in s])
            score += w[idx[pos]]
        best = int(np.argmax(score))
        return tuple(fs.sets[pos][int(idx[pos][best])] for pos in range(len(fs.sets)))

    # chains arrive in lex id order; first strict maximum = lex-smallest tie
    chains = enumerate_chains(flow, fs, instances, net, limits, hops)
    best_ch, best_w = None, None
    for ch in chains:
        w = sum(weights[i] for i in ch)
        if best_w is None or w > best_w:
            best_ch, best_w = ch, w
    return best_ch


def assign_flow(flow: FlowSpec, instances: dict[str, NfInstance],
                profile: DependencyProfile, net: Network, mode: str,
                limits: AssignmentLimits | None = None, hops=None,
                independent=None) -> AssignmentOutcome:
    """Full per-flow pipeline; reservations commit only on acceptance."""
    if limits is None:
        limits = AssignmentLimits()
    if independent is None:
        independent = make_independence()
    try:
        cands = candidate_instances(flow, instances, profile, net, mode, independent)
        if any(not s for s in cands):
            raise AssignmentRejected(REASON_NO_CANDIDATES)
        fs = feasible_set(flow, cands, net)
        best = _best_chain(flow, fs, instances, net, mode, limits, hops, independent)
    except AssignmentRejected as rej:
        return AssignmentOutcome(flow.id, STATUS_REJECTED, rej.reason)

    chain_ids = [*fs.committed, best]
    held: list[str] = []
    for ch in chain_ids:
        for iid in ch:
            if not reserve(instances[iid], flow, independent):
                for done in held:
                    release(instances[done], flow.id)
                return AssignmentOutcome(flow.id, STATUS_REJECTED,
                                         REASON_INSUFFICIENT_CANDIDATES)
            held.append(iid)

    chains = tuple(
        BackupChain(flow.id, ch, tuple(instances[i].host for i in ch))
        for ch in chain_ids)
    avails = [chain_availability(c, net, instances) for c in chains]
    achieved = service_availability(flow.primary_avail, avails)
    assert achieved >= flow.avail_req
    return AssignmentOutcome(flow.id, STATUS_ACCEPTED, None, chains, achieved)


ORDER_POLICIES = ("input", "chain_length_desc", "chain_length_asc",
                  "avail_desc", "avail_asc")


def run_assignment(flows: list[FlowSpec], instances: dict[str, NfInstance],
                   profile: DependencyProfile, net: Network, mode: str,
                   order_policy: str = "chain_length_desc",
                   limits: AssignmentLimits | None = None, hops=None,
                   strict_independence: bool = False) -> AllocationPlan:
    """Assign every flow in policy order against a shared reservation state."""
    if order_policy not in ORDER_POLICIES:
        raise ValueError(f"unknown order policy {order_policy!r}")
    if mode not in (MODE_DEDICATED, MODE_SHARED):
        raise ValueError(f"unknown mode {mode!r}")
    ordered = list(flows)
    if order_policy == "chain_length_desc":
        ordered.sort(key=lambda f: -len(f.chain))
    elif order_policy == "chain_length_asc":
        ordered.sort(key=lambda f: len(f.chain))
    elif order_policy == "avail_desc":
        ordered.sort(key=lambda f: -f.avail_req)
    elif order_policy == "avail_asc":
        ordered.sort(key=lambda f: f.avail_req)

    independent = make_independence(strict=strict_independence)
    outcomes = {}
    for f in ordered:
        outcomes[f.id] = assign_flow(f, instances, profile, net, mode,
                                     limits, hops, independent)
    return AllocationPlan(list(flows), instances, outcomes, mode)
