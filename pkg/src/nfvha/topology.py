"""Substrate network model and hop-count matrices.

The network is an undirected, unweighted graph. Nodes carry CPU core and
memory capacities plus an availability; nodes flagged as end nodes terminate
flows and never host NF instances. Distances are hop counts; unreachable is
reported as the explicit sentinel ``UNREACHABLE`` (None), never an in-band
large number, so accidental arithmetic on it fails loudly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import TopologyError

UNREACHABLE = None


@dataclass(frozen=True)
class Network:
    """Immutable substrate graph. Build via make_network() or load_topology()."""

    nodes: tuple[str, ...]
    links: tuple[tuple[str, str], ...]
    node_caps: dict[str, int]
    node_avail: dict[str, float]
    node_mem: dict[str, float]
    end_nodes: frozenset[str]
    _adj: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)

    def neighbors(self, node: str) -> tuple[str, ...]:
        return self._adj[node]

    def host_nodes(self) -> tuple[str, ...]:
        """Nodes allowed to host NF instances (everything but end nodes)."""
        return tuple(n for n in self.nodes if n not in self.end_nodes)

    def index(self) -> dict[str, int]:
        return {n: k for k, n in enumerate(self.nodes)}


def make_network(links, node_caps=None, node_avail=None, node_mem=None,
                 end_nodes=(), nodes=(), default_cores=8, default_avail=0.999,
                 default_mem=16.0) -> Network:
    """Assemble a Network from link pairs, filling per-node defaults.

    Nodes appear in first-seen order (explicit ``nodes`` first, then link
    endpoints). Rejects self-loops, duplicate links, unknown attribute nodes
    and availabilities outside (0, 1].
    """
    order: list[str] = []
    seen: set[str] = set()

    def note(node):
        if node not in seen:
            seen.add(node)
            order.append(node)

    for n in nodes:
        note(n)
    canon: list[tuple[str, str]] = []
    link_seen: set[tuple[str, str]] = set()
    for a, b in links:
        if a == b:
            raise TopologyError(f"self-loop on node {a!r}")
        key = (a, b) if a <= b else (b, a)
        if key in link_seen:
            raise TopologyError(f"duplicate link {a!r} -- {b!r}")
        link_seen.add(key)
        note(a)
        note(b)
        canon.append(key)

    caps = dict(node_caps or {})
    avail = dict(node_avail or {})
    mem = dict(node_mem or {})
    for attrs, label in ((caps, "cores"), (avail, "avail"), (mem, "mem")):
        unknown = set(attrs) - seen
        if unknown:
            raise TopologyError(f"{label} given for unknown node(s) {sorted(unknown)}")
    for n in order:
        caps.setdefault(n, default_cores)
        avail.setdefault(n, default_avail)
        mem.setdefault(n, default_mem)
    for n, a in avail.items():
        if not 0.0 < a <= 1.0:
            raise TopologyError(f"availability {a} of node {n!r} outside (0, 1]")
    for n, c in caps.items():
        if c < 0:
            raise TopologyError(f"negative core count on node {n!r}")

    ends = frozenset(end_nodes)
    if not ends <= seen:
        raise TopologyError(f"end node(s) {sorted(ends - seen)} not in topology")

    adj: dict[str, list[str]] = {n: [] for n in order}
    for a, b in canon:
        adj[a].append(b)
        adj[b].append(a)
    adj_t = {n: tuple(sorted(v)) for n, v in adj.items()}

    return Network(tuple(order), tuple(canon), caps, avail, mem, ends, adj_t)


def load_topology(text: str, default_cores=8, default_avail=0.999,
                  default_mem=16.0) -> Network:
    """Parse the edge-list format.

    Lines are either ``node <id> [cores=<int>] [avail=<float>] [mem=<float>]
    [end]`` or a link ``<id> <id>``; ``#`` starts a comment. Node declarations
    may be omitted entirely, in which case link endpoints are created with the
    defaults.
    """
    declared: list[str] = []
    caps: dict[str, int] = {}
    avail: dict[str, float] = {}
    mem: dict[str, float] = {}
    ends: list[str] = []
    links: list[tuple[str, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "node":
            if len(parts) < 2:
                raise TopologyError("node declaration missing an id", lineno)
            name = parts[1]
            if name in caps or name in declared:
                raise TopologyError(f"duplicate declaration of node {name!r}", lineno)
            declared.append(name)
            for tok in parts[2:]:
                if tok == "end":
                    ends.append(name)
                    continue
                if "=" not in tok:
                    raise TopologyError(f"unrecognized token {tok!r}", lineno)
                key, _, val = tok.partition("=")
                try:
                    if key == "cores":
                        caps[name] = int(val)
                    elif key == "avail":
                        avail[name] = float(val)
                    elif key == "mem":
                        mem[name] = float(val)
                    else:
                        raise TopologyError(f"unknown attribute {key!r}", lineno)
                except ValueError as exc:
                    if isinstance(exc, TopologyError):
                        raise
                    raise TopologyError(f"bad value for {key!r}: {val!r}", lineno) from None
        elif len(parts) == 2:
            links.append((parts[0], parts[1]))
        else:
            raise TopologyError(f"cannot parse {line!r}", lineno)

    try:
        return make_network(links, caps, avail, mem, ends, nodes=declared,
                            default_cores=default_cores, default_avail=default_avail,
                            default_mem=default_mem)
    except TopologyError:
        raise


def dump_topology(net: Network) -> str:
    """Inverse of load_topology, canonical ordering (round-trip stable)."""
    out = []
    for n in net.nodes:
        flags = " end" if n in net.end_nodes else ""
        out.append(f"node {n} cores={net.node_caps[n]} avail={net.node_avail[n]!r}"
                   f" mem={net.node_mem[n]!r}{flags}")
    for a, b in net.links:
        out.append(f"{a} {b}")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class HopMatrix:
    """All-pairs hop counts; -1 encodes unreachable internally."""

    nodes: tuple[str, ...]
    idx: dict[str, int]
    hops: np.ndarray

    def dist(self, a: str, b: str):
        v = self.hops[self.idx[a], self.idx[b]]
        return int(v) if v >= 0 else UNREACHABLE


def _bfs_row(adj_idx: list[list[int]], src: int, n: int, skip: int = -1) -> np.ndarray:
    row = np.full(n, -1, dtype=np.int32)
    row[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        du = row[u]
        for v in adj_idx[u]:
            if v != skip and row[v] < 0:
                row[v] = du + 1
                q.append(v)
    return row


def _adj_indexed(net: Network) -> list[list[int]]:
    idx = net.index()
    return [[idx[v] for v in net.neighbors(u)] for u in net.nodes]


def hop_matrix(net: Network) -> HopMatrix:
    n = len(net.nodes)
    adj = _adj_indexed(net)
    hops = np.vstack([_bfs_row(adj, s, n) for s in range(n)]) if n else np.zeros((0, 0), np.int32)
    return HopMatrix(net.nodes, net.index(), hops)


def hop_matrix_without(net: Network, removed: str) -> HopMatrix:
    """Hop counts of the graph with ``removed`` taken out.

    The matrix keeps the full node universe for alignment; any query touching
    the removed node reports UNREACHABLE.
    """
    if removed not in net.node_caps:
        raise TopologyError(f"unknown node {removed!r}")
    n = len(net.nodes)
    adj = _adj_indexed(net)
    skip = net.index()[removed]
    hops = np.full((n, n), -1, dtype=np.int32)
    for s in range(n):
        if s != skip:
            hops[s] = _bfs_row(adj, s, n, skip=skip)
    hops[:, skip] = -1
    hops[skip, :] = -1
    return HopMatrix(net.nodes, net.index(), hops)


def is_connected(net: Network) -> bool:
    if len(net.nodes) <= 1:
        return True
    adj = _adj_indexed(net)
    row = _bfs_row(adj, 0, len(net.nodes))
    return bool((row >= 0).all())
