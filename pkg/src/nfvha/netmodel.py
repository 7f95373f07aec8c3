"""Service model: NF types and instances, flows, reservation, availability.

Availability algebra. A chain's availability is the product of its instances'
availabilities times the availabilities of its distinct hosting nodes (a node
shared by two instances of the chain is counted once). A flow's end-to-end
availability is 1 - (1 - primary) * prod(1 - backup_i), treating the primary
chain and each backup chain as independent alternatives. Source/destination
nodes are excluded from the model throughout.

Reservation. Every backup instance carries a ledger. In dedicated mode each
flow reserves its full rate. In shared mode flows are packed into sharing
groups of pairwise-independent flows; a group reserves only the maximum rate
among its members, since at most one of them can fail over at a time when
their primaries cannot fail together. A joining flow enters the first group
(creation order) whose members are all independent of it and whose rate
increase fits the free capacity, else it opens a new group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

ROLE_PRIMARY = "primary"
ROLE_BACKUP = "backup"
MODE_DEDICATED = "dedicated"
MODE_SHARED = "shared"


@dataclass(frozen=True)
class NfType:
    name: str
    cores: int = 1
    capacity_pps: float = 10e6
    avail: float = 0.999
    mem_gb: float = 2.0

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError(f"NF {self.name!r}: cores must be >= 1")
        if self.capacity_pps <= 0:
            raise ValueError(f"NF {self.name!r}: capacity must be positive")
        if not 0.0 < self.avail <= 1.0:
            raise ValueError(f"NF {self.name!r}: avail {self.avail} outside (0, 1]")


@dataclass(frozen=True)
class FlowSpec:
    id: str
    src: str
    dst: str
    rate_pps: float
    chain: tuple[str, ...]
    avail_class: str
    avail_req: float
    primary_instances: tuple[str, ...] = ()
    primary_hosts: tuple[str, ...] = ()
    primary_path: tuple[str, ...] = ()
    primary_avail: float | None = None

    def __post_init__(self):
        if len(self.chain) < 1:
            raise ValueError(f"flow {self.id!r}: empty chain")
        if not 0.0 < self.avail_req < 1.0:
            raise ValueError(f"flow {self.id!r}: requirement {self.avail_req} outside (0, 1)")
        if self.rate_pps <= 0:
            raise ValueError(f"flow {self.id!r}: rate must be positive")
        if self.primary_instances and len(self.primary_instances) != len(self.chain):
            raise ValueError(f"flow {self.id!r}: primary binding does not match chain")

    @property
    def bound(self) -> bool:
        return bool(self.primary_instances)


class SharingGroup:
    """One set of mutually independent flows sharing a reservation slot."""

    __slots__ = ("members",)

    def __init__(self):
        self.members: dict[str, FlowSpec] = {}

    @property
    def rate(self) -> float:
        return max((f.rate_pps for f in self.members.values()), default=0.0)


class ReservationLedger:
    def __init__(self, mode: str):
        if mode not in (MODE_DEDICATED, MODE_SHARED):
            raise ValueError(f"unknown reservation mode {mode!r}")
        self.mode = mode
        self.groups: list[SharingGroup] = []

    def reserved(self) -> float:
        return sum(g.rate for g in self.groups)

    def flows(self) -> list[FlowSpec]:
        return [f for g in self.groups for f in g.members.values()]

    def has_flow(self, flow_id: str) -> bool:
        return any(flow_id in g.members for g in self.groups)

    def _join_slot(self, flow: FlowSpec, capacity: float, independent):
        """First group the flow may share, or None. Shared mode only."""
        free = capacity - self.reserved()
        for g in self.groups:
            if all(independent(flow, m) for m in g.members.values()):
                if max(g.rate, flow.rate_pps) - g.rate <= free:
                    return g
        return None

    def can_admit(self, flow: FlowSpec, capacity: float, independent) -> bool:
        if self.has_flow(flow.id):
            raise ValueError(f"flow {flow.id!r} already reserved here")
        free = capacity - self.reserved()
        if self.mode == MODE_SHARED and self._join_slot(flow, capacity, independent):
            return True
        return flow.rate_pps <= free

    def admit(self, flow: FlowSpec, capacity: float, independent) -> bool:
        if self.has_flow(flow.id):
            raise ValueError(f"flow {flow.id!r} already reserved here")
        if self.mode == MODE_SHARED:
            slot = self._join_slot(flow, capacity, independent)
            if slot is not None:
                slot.members[flow.id] = flow
                return True
        if flow.rate_pps <= capacity - self.reserved():
            g = SharingGroup()
            g.members[flow.id] = flow
            self.groups.append(g)
            return True
        return False

    def remove(self, flow_id: str) -> None:
        for g in self.groups:
            if flow_id in g.members:
                del g.members[flow_id]
                if not g.members:
                    self.groups.remove(g)
                return
        raise KeyError(f"flow {flow_id!r} holds no reservation here")


@dataclass
class NfInstance:
    id: str
    nf: NfType
    host: str
    role: str
    avail: float | None = None
    ledger: ReservationLedger = field(default=None)  # type: ignore[assignment]
    mode: str = MODE_DEDICATED

    def __post_init__(self):
        if self.role not in (ROLE_PRIMARY, ROLE_BACKUP):
            raise ValueError(f"instance {self.id!r}: unknown role {self.role!r}")
        if self.avail is None:
            self.avail = self.nf.avail
        if not 0.0 < self.avail <= 1.0:
            raise ValueError(f"instance {self.id!r}: avail {self.avail} outside (0, 1]")
        if self.ledger is None:
            # primaries always reserve dedicated; sharing is a backup concept
            self.ledger = ReservationLedger(
                self.mode if self.role == ROLE_BACKUP else MODE_DEDICATED)

    @property
    def capacity_pps(self) -> float:
        return self.nf.capacity_pps


@dataclass(frozen=True)
class BackupChain:
    flow_id: str
    instance_ids: tuple[str, ...]
    hosts: tuple[str, ...]

    def distinct_hosts(self) -> tuple[str, ...]:
        seen: list[str] = []
        for h in self.hosts:
            if h not in seen:
                seen.append(h)
        return tuple(seen)


def chain_availability(chain: BackupChain, net, instances: dict[str, NfInstance]) -> float:
    """Product over instance availabilities and distinct hosting nodes."""
    a = 1.0
    for iid in chain.instance_ids:
        a *= instances[iid].avail
    for h in chain.distinct_hosts():
        a *= net.node_avail[h]
    return a


def service_availability(primary_avail: float, backup_avails) -> float:
    """End-to-end availability of primary plus independent backup chains."""
    u = 1.0 - primary_avail
    for b in backup_avails:
        u *= 1.0 - b
    return 1.0 - u


def primary_availability(flow: FlowSpec, net, instances: dict[str, NfInstance]) -> float:
    """Availability of a bound flow's primary chain (distinct-host product)."""
    if not flow.bound:
        raise ValueError(f"flow {flow.id!r} has no primary binding")
    chain = BackupChain(flow.id, flow.primary_instances, flow.primary_hosts)
    return chain_availability(chain, net, instances)


def flows_independent(f1: FlowSpec, f2: FlowSpec, strict: bool = False) -> bool:
    """True when the two flows' primaries cannot fail together.

    Default reading: disjoint primary hosting-node sets and disjoint primary
    instance sets. strict=True additionally requires disjoint transit paths
    (each flow's path minus its own endpoints).
    """
    if not f1.bound or not f2.bound:
        raise ValueError("independence needs bound primaries on both flows")
    if f1.id == f2.id:
        return False
    if set(f1.primary_hosts) & set(f2.primary_hosts):
        return False
    if set(f1.primary_instances) & set(f2.primary_instances):
        return False
    if strict:
        t1 = (set(f1.primary_path) - {f1.src, f1.dst}) | set(f1.primary_hosts)
        t2 = (set(f2.primary_path) - {f2.src, f2.dst}) | set(f2.primary_hosts)
        if t1 & t2:
            return False
    return True


def make_independence(strict: bool = False):
    def independent(a: FlowSpec, b: FlowSpec) -> bool:
        return flows_independent(a, b, strict=strict)
    return independent


def reserve(instance: NfInstance, flow: FlowSpec, independent=None) -> bool:
    """Try to reserve backup capacity for the flow; False on rejection."""
    if independent is None:
        independent = make_independence()
    return instance.ledger.admit(flow, instance.capacity_pps, independent)


def release(instance: NfInstance, flow_id: str) -> None:
    instance.ledger.remove(flow_id)


def free_capacity(instance: NfInstance) -> float:
    return instance.capacity_pps - instance.ledger.reserved()


def utilization(instance: NfInstance) -> float:
    """Sum of reserving flows' rates over capacity (not the ledger rate)."""
    demand = sum(f.rate_pps for f in instance.ledger.flows())
    return demand / instance.capacity_pps


def nines(avail: float) -> float:
    """Continuous nines scale: 0.999 -> 3.0. Saturates at 12 for avail 1.0."""
    if avail >= 1.0:
        return 12.0
    if avail <= 0.0:
        return 0.0
    return -math.log10(1.0 - avail)
