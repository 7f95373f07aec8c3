"""Worst-case sizing of the backup pool, ahead of placement.

How many backup chains a class needs is answered pessimistically: assume every
backup chain has the availability of the worst eligible node and worst NF type
at every hop, assume the weakest primary in the class, and find the smallest
chain count that still clears the class requirement. How many instances of
each NF that implies follows from the aggregate rate the class pushes through
that NF, rounded up to whole instances, once per chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError
from .netmodel import FlowSpec, NfType


@dataclass(frozen=True)
class BackupDemand:
    """Estimated backup need: chains per class, instances per (NF, class)."""

    chains_per_class: dict[str, int]
    instances: dict[tuple[str, str], int]

    def per_nf(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for (nf, _cls), z in self.instances.items():
            totals[nf] = totals.get(nf, 0) + z
        return totals

    def total(self) -> int:
        return sum(self.instances.values())


def chains_needed(class_req: float, worst_primary: float, worst_node: float,
                  worst_instance: float, chain_length: int, x_max: int = 10) -> int:
    """Smallest number of worst-case backup chains lifting the weakest primary
    over the class requirement; 0 when the primary alone already suffices.
    """
    if not 0.0 < class_req < 1.0:
        raise ValueError(f"class requirement {class_req} outside (0, 1)")
    if chain_length < 1:
        raise ValueError("chain length must be >= 1")
    if worst_primary >= class_req:
        return 0
    pessimistic = (worst_node * worst_instance) ** chain_length
    gap = 1.0 - worst_primary
    miss = 1.0 - pessimistic

    def enough(x: int) -> bool:
        return 1.0 - gap * miss ** x >= class_req

    if miss <= 0.0:
        start = 1
    else:
        # closed-form start, then nudge for float slop
        ratio = (1.0 - class_req) / gap
        start = max(1, math.ceil(math.log(ratio) / math.log(miss))) if ratio < 1.0 else 1
    while start > 1 and enough(start - 1):
        start -= 1
    x = start
    while x <= x_max:
        if enough(x):
            return x
        x += 1
    raise InfeasibleError(
        f"requirement {class_req} unreachable within {x_max} worst-case chains")


def instances_needed(flows, nf: NfType, chains: int) -> int:
    """Instances of this NF the class needs: rate-driven count, once per chain."""
    if chains < 0:
        raise ValueError("chain count must be >= 0")
    demand = sum(f.rate_pps * f.chain.count(nf.name) for f in flows)
    if demand == 0.0 or chains == 0:
        return 0
    return chains * math.ceil(demand / nf.capacity_pps)


def estimate_demand(flows_by_class: dict[str, list[FlowSpec]],
                    class_requirements: dict[str, float],
                    nf_types: dict[str, NfType],
                    worst_node_avail: float,
                    x_max: int = 10) -> BackupDemand:
    """Size the whole backup pool. Flows must carry bound primary availabilities."""
    worst_instance = min(t.avail for t in nf_types.values())
    chains: dict[str, int] = {}
    inst: dict[tuple[str, str], int] = {}
    for cls in sorted(class_requirements, key=lambda c: (-class_requirements[c], c)):
        members = flows_by_class.get(cls, [])
        if not members:
            chains[cls] = 0
            continue
        if any(f.primary_avail is None for f in members):
            raise ValueError(f"class {cls!r} has flows without primary availability")
        worst_primary = min(f.primary_avail for f in members)
        g = max(len(f.chain) for f in members)
        h = chains_needed(class_requirements[cls], worst_primary,
                          worst_node_avail, worst_instance, g, x_max)
        chains[cls] = h
        for name in sorted(nf_types):
            users = [f for f in members if name in f.chain]
            z = instances_needed(users, nf_types[name], h)
            if z:
                inst[(name, cls)] = z
    return BackupDemand(chains, inst)
