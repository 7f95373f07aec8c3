"""Brute-force ground truth for tiny scenarios.

Two independent re-derivations used only by tests and the `oracle` CLI
command: a per-pair BFS recomputation of the structural dependency table
(sharing no kernels with the production implementation), and an exhaustive
search for the minimum number of backup instances that lets every flow reach
its availability requirement, given the same reservation discipline the
allocator uses.

The search enumerates placements (multisets of NF-type-on-node within core
budgets) in increasing instance count; for each placement it backtracks over
per-flow chain sets (instance-disjoint, minimal: no proper subset already
meets the requirement) against a shared reservation state. The first feasible
count is the optimum and the lexicographically first witness is returned.
Scenario size is guarded by a precomputed bound on the search space.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

from .errors import InfeasibleError, ScenarioError
from .netmodel import (MODE_DEDICATED, ROLE_BACKUP, BackupChain, FlowSpec,
                       NfInstance, NfType, chain_availability,
                       make_independence, service_availability)
from .topology import Network

SEARCH_SPACE_LIMIT = 10 ** 8

MAX_NODES = 8
MAX_FLOWS = 6
MAX_NF_TYPES = 3
MAX_CHAIN_LEN = 2


@dataclass(frozen=True)
class TinyScenario:
    net: Network
    flows: tuple[FlowSpec, ...]
    nf_types: dict[str, NfType]
    instances: dict[str, NfInstance]          # bound primaries
    core_budget: dict[str, int]
    mode: str = MODE_DEDICATED
    max_backups: int = 8
    max_chains_per_flow: int = 3

    def __post_init__(self):
        if len(self.net.nodes) > MAX_NODES:
            raise ScenarioError(f"oracle limit: more than {MAX_NODES} nodes")
        if len(self.flows) > MAX_FLOWS:
            raise ScenarioError(f"oracle limit: more than {MAX_FLOWS} flows")
        if len(self.nf_types) > MAX_NF_TYPES:
            raise ScenarioError(f"oracle limit: more than {MAX_NF_TYPES} NF types")
        if any(len(f.chain) > MAX_CHAIN_LEN for f in self.flows):
            raise ScenarioError(f"oracle limit: chain longer than {MAX_CHAIN_LEN}")
        for f in self.flows:
            if not f.bound or f.primary_avail is None:
                raise ScenarioError(f"oracle needs bound primaries (flow {f.id!r})")


@dataclass(frozen=True)
class OracleResult:
    min_backups: int
    placement: tuple[tuple[str, str], ...]              # (nf, node) slots
    chains: dict[str, tuple[tuple[str, ...], ...]]      # flow -> chain id tuples
    placements_tried: int
    assignments_tried: int


def search_space_bound(scn: TinyScenario) -> int:
    """Upper bound on the states the search may visit.

    Placements are multisets of (type, node) slots up to max_backups. The
    per-flow factor counts chain sets under the instance-disjointness rule:
    with b backups split evenly over the distinct types of the chain, a
    position has at most c = ceil(b / distinct) choices, a set of s disjoint
    chains needs s instances per position, so s <= c / multiplicity.
    """
    hostable = [n for n in scn.net.nodes if n not in scn.net.end_nodes]
    slots = len(scn.nf_types) * len(hostable)
    placements = sum(math.comb(slots + k - 1, k) for k in range(scn.max_backups + 1))
    per_flow = 1
    for f in scn.flows:
        distinct = max(1, len(set(f.chain)))
        c = math.ceil(scn.max_backups / distinct)
        comps = c ** len(f.chain)
        max_mult = max(f.chain.count(t) for t in set(f.chain)) if f.chain else 1
        s_max = min(scn.max_chains_per_flow, c // max_mult)
        options = sum(math.comb(comps, s) for s in range(s_max + 1))
        per_flow *= max(1, options)
    return placements * per_flow


def exhaustive_min_backups(scn: TinyScenario) -> OracleResult:
    """Minimum backup-instance count meeting every flow's requirement."""
    bound = search_space_bound(scn)
    if bound > SEARCH_SPACE_LIMIT:
        raise ScenarioError(
            f"search space bound {bound} exceeds {SEARCH_SPACE_LIMIT}")

    hostable = [n for n in scn.net.nodes if n not in scn.net.end_nodes]
    slots = [(t, n) for t in sorted(scn.nf_types) for n in hostable]
    independent = make_independence()
    placements_tried = 0
    assignments_tried = 0

    for count in range(scn.max_backups + 1):
        for combo in itertools.combinations_with_replacement(slots, count):
            cores_left = dict(scn.core_budget)
            ok = True
            for t, n in combo:
                cores_left[n] = cores_left.get(n, 0) - scn.nf_types[t].cores
                if cores_left[n] < 0:
                    ok = False
                    break
            if not ok:
                continue
            placements_tried += 1
            backups = {
                f"o{k}.{t}": NfInstance(id=f"o{k}.{t}", nf=scn.nf_types[t],
                                        host=n, role=ROLE_BACKUP, mode=scn.mode)
                for k, (t, n) in enumerate(combo)}
            tried = _assign_all(scn, backups, independent)
            assignments_tried += tried[1]
            if tried[0] is not None:
                return OracleResult(count, tuple(combo), tried[0],
                                    placements_tried, assignments_tried)
    raise InfeasibleError(
        f"no feasible placement within {scn.max_backups} backup instances")


def _chain_options(scn: TinyScenario, flow: FlowSpec,
                   backups: dict[str, NfInstance]) -> list[tuple[tuple[str, ...], ...]]:
    """Minimal instance-disjoint chain sets meeting the flow's requirement."""
    if flow.primary_avail >= flow.avail_req:
        return [()]
    per_pos = []
    for nf in flow.chain:
        ids = sorted(i for i, b in backups.items() if b.nf.name == nf)
        if not ids:
            return []
        per_pos.append(ids)
    comps = [c for c in itertools.product(*per_pos) if len(set(c)) == len(c)]
    avail = {
        c: chain_availability(BackupChain(flow.id, c, tuple(backups[i].host for i in c)),
                              scn.net, backups)
        for c in comps}

    def meets(subset) -> bool:
        return service_availability(
            flow.primary_avail, [avail[c] for c in subset]) >= flow.avail_req

    options: list[tuple[tuple[str, ...], ...]] = []
    for size in range(1, scn.max_chains_per_flow + 1):
        for subset in itertools.combinations(comps, size):
            used: set[str] = set()
            disjoint = True
            for c in subset:
                if used & set(c):
                    disjoint = False
                    break
                used |= set(c)
            if not disjoint or not meets(subset):
                continue
            # supersets of a satisfying set only add load; keep minimal sets
            if any(set(prior) <= set(subset) for prior in options):
                continue
            options.append(subset)
    return options


def _assign_all(scn: TinyScenario, backups: dict[str, NfInstance], independent):
    """Backtracking over per-flow chain sets against shared reservations."""
    options = []
    for f in scn.flows:
        opts = _chain_options(scn, f, backups)
        if not opts:
            return None, 1
        options.append(opts)

    tried = 0
    chosen: dict[str, tuple[tuple[str, ...], ...]] = {}

    def rec(k: int) -> bool:
        nonlocal tried
        if k == len(scn.flows):
            return True
        flow = scn.flows[k]
        for subset in options[k]:
            tried += 1
            held = []
            ok = True
            for c in subset:
                for iid in c:
                    if backups[iid].ledger.admit(flow, backups[iid].capacity_pps,
                                                 independent):
                        held.append(iid)
                    else:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                chosen[flow.id] = subset
                if rec(k + 1):
                    return True
                del chosen[flow.id]
            for iid in held:
                backups[iid].ledger.remove(flow.id)
        return False

    if rec(0):
        return dict(chosen), tried
    return None, tried


def independent_di_recompute(net: Network) -> dict[tuple[str, str], float]:
    """Naive per-pair dependency table: fresh BFS for every (i, j, removed)
    triple, no shared kernels with the production code. Networks of up to 12
    nodes only.
    """
    if len(net.nodes) > 12:
        raise ScenarioError("naive recomputation is for 12 nodes or fewer")
    if len(net.nodes) < 3:
        raise ScenarioError("need at least 3 nodes")

    adj: dict[str, set[str]] = {n: set() for n in net.nodes}
    for a, b in net.links:
        adj[a].add(b)
        adj[b].add(a)

    def bfs_dist(src: str, dst: str, skip: str | None) -> int | None:
        if src == dst:
            return 0
        seen = {src}
        q = deque([(src, 0)])
        while q:
            u, d = q.popleft()
            for v in sorted(adj[u]):
                if v == skip or v in seen:
                    continue
                if v == dst:
                    return d + 1
                seen.add(v)
                q.append((v, d + 1))
        return None

    table: dict[tuple[str, str], float] = {}
    removable = [n for n in net.nodes if n not in net.end_nodes]
    for n in removable:
        for i in net.nodes:
            if i == n:
                continue
            total = 0.0
            for j in net.nodes:
                if j == i or j == n:
                    continue
                base = bfs_dist(i, j, None)
                if base is None:
                    raise ScenarioError("naive recomputation requires connectivity")
                after = bfs_dist(i, j, n)
                total += 1.0 if after is None else 1.0 / base - 1.0 / after
            table[(i, n)] = total / (len(net.nodes) - 2)
    return table
