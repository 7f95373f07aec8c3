"""Backup instance placement.

Works one availability class at a time (most demanding first, so the
strictest flows get first pick of the safest nodes). For a class, candidate
nodes split into two queues: nodes structurally uncorrelated with every node
hosting the class's primaries, then everything else; both sorted by node
availability (descending, node id breaking ties). Nodes hosting the class's
own primaries and end nodes are excluded outright.

Placement walks the NF types in decreasing estimated-demand order and, after
each successful placement, moves on to the next type while staying on the
same node, so consecutive chain positions land on different instances packed
side by side; when the active node cannot fit the current type it is retired
and the next queued node becomes active. A node retired for one type is not
revisited for smaller ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from .estimate import BackupDemand
from .netmodel import MODE_DEDICATED, ROLE_BACKUP, NfInstance, NfType
from .structure import DependencyProfile
from .topology import Network


@dataclass
class PlacementResult:
    placed: list[NfInstance]
    unplaced: dict[tuple[str, str], int]
    remaining_cores: dict[str, int]
    remaining_mem: dict[str, float]

    def nodes_used(self) -> frozenset[str]:
        return frozenset(i.host for i in self.placed)

    def count_by_nf(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for i in self.placed:
            out[i.nf.name] = out.get(i.nf.name, 0) + 1
        return out


def backup_budgets(net: Network, cores_fraction: float = 0.5,
                   mem_fraction: float = 0.5) -> tuple[dict[str, int], dict[str, float]]:
    """Per-node core/memory budgets carved out for backups; end nodes get 0."""
    cores = {}
    mem = {}
    for n in net.nodes:
        blocked = n in net.end_nodes
        cores[n] = 0 if blocked else int(net.node_caps[n] * cores_fraction)
        mem[n] = 0.0 if blocked else net.node_mem[n] * mem_fraction
    return cores, mem


def _class_queues(net: Network, profile: DependencyProfile,
                  primary_nodes: frozenset[str]) -> tuple[list[str], list[str]]:
    zone = profile.exclusion_zone(primary_nodes)
    excluded = primary_nodes | net.end_nodes
    eligible = [n for n in net.nodes if n not in excluded]
    key = lambda n: (-net.node_avail[n], n)
    clear = sorted((n for n in eligible if n not in zone), key=key)
    rest = sorted((n for n in eligible if n in zone), key=key)
    return clear, rest


def place_backups(net: Network, demand: BackupDemand, profile: DependencyProfile,
                  primary_nodes_by_class: dict[str, frozenset[str]],
                  core_budget: dict[str, int],
                  mem_budget: dict[str, float] | None = None,
                  nf_types: dict[str, NfType] | None = None,
                  class_requirements: dict[str, float] | None = None,
                  class_order: str = "desc",
                  mode: str = MODE_DEDICATED,
                  instance_avail=None) -> PlacementResult:
    """Place the estimated backup instances onto the substrate.

    core_budget/mem_budget are consumed in place across classes (earlier
    classes see the full budget). instance_avail, when given, is called with
    the running placement index to draw each instance's availability.
    """
    if nf_types is None:
        raise ValueError("nf_types catalog required")
    if class_requirements is None:
        raise ValueError("class_requirements required for ordering")
    if class_order not in ("desc", "asc"):
        raise ValueError(f"unknown class order {class_order!r}")
    cores = core_budget
    mem = mem_budget if mem_budget is not None else {n: float("inf") for n in net.nodes}

    sign = -1.0 if class_order == "desc" else 1.0
    classes = sorted(class_requirements, key=lambda c: (sign * class_requirements[c], c))

    placed: list[NfInstance] = []
    unplaced: dict[tuple[str, str], int] = {}
    seq = 0

    for cls in classes:
        want = {nf: z for (nf, c), z in demand.instances.items() if c == cls and z > 0}
        if not want:
            continue
        order = sorted(want, key=lambda nf: (-want[nf], nf))
        clear_q, rest_q = _class_queues(
            net, profile, primary_nodes_by_class.get(cls, frozenset()))

        def next_type(after: int) -> int | None:
            for step in range(1, len(order) + 1):
                k = (after + step) % len(order)
                if want[order[k]] > 0:
                    return k
            return None

        ti = 0 if want[order[0]] > 0 else next_type(0)
        active = clear_q.pop(0) if clear_q else (rest_q.pop(0) if rest_q else None)
        while ti is not None and active is not None:
            nf = nf_types[order[ti]]
            if cores[active] >= nf.cores and mem[active] >= nf.mem_gb:
                cores[active] -= nf.cores
                mem[active] -= nf.mem_gb
                avail = instance_avail(seq) if instance_avail else None
                placed.append(NfInstance(
                    id=f"b{seq:03d}.{nf.name}", nf=nf, host=active,
                    role=ROLE_BACKUP, avail=avail, mode=mode))
                seq += 1
                want[nf.name] -= 1
                ti = next_type(ti)
            else:
                active = clear_q.pop(0) if clear_q else (rest_q.pop(0) if rest_q else None)
        for nf in order:
            if want[nf] > 0:
                unplaced[(nf, cls)] = want[nf]

    return PlacementResult(placed, unplaced, cores, mem)
