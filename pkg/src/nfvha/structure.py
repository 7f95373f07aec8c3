"""Structural dependency analysis.

Quantifies how much one node's connectivity relies on another node staying up,
using inverse hop counts: removing node n changes the closeness between i and
j from 1/d(i,j) to 1/d'(i,j), and the drop (or 1.0 outright if j becomes
unreachable from i) is the pairwise dependency. Averaging over destinations
gives a per-node score; thresholding that score yields, for every candidate
hosting node, the set of nodes whose failure it cannot structurally tolerate,
and a two-level cascade over those sets gives the exclusion zone used by
placement and chain selection.

End nodes never host instances, so they are never considered as the removed
node; they still count as sources and destinations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScenarioError
from .topology import Network, hop_matrix, hop_matrix_without, is_connected


def path_dependency(net: Network, i: str, j: str, n: str) -> float:
    """Dependency of the i->j connection on node n.

    1.0 when removing n disconnects j from i, else the closeness drop
    1/d(i,j) - 1/d'(i,j). Requires i, j, n distinct and i, j mutually
    reachable in the intact graph.
    """
    if len({i, j, n}) != 3:
        raise ValueError("i, j, n must be three distinct nodes")
    base = hop_matrix(net).dist(i, j)
    if base is None:
        raise ValueError(f"{i!r} and {j!r} are not mutually reachable")
    red = hop_matrix_without(net, n).dist(i, j)
    if red is None:
        return 1.0
    return 1.0 / base - 1.0 / red


def node_dependency(net: Network, i: str, n: str) -> float:
    """Mean of path_dependency(i, j, n) over all other destinations j.

    The divisor is |N| - 2 (all nodes except i and n), so a node whose
    removal disconnects i from everyone scores exactly 1.
    """
    if len(net.nodes) < 3:
        raise ValueError("need at least 3 nodes")
    if i == n:
        raise ValueError("i and n must differ")
    total = 0.0
    for j in net.nodes:
        if j != i and j != n:
            total += path_dependency(net, i, j, n)
    return total / (len(net.nodes) - 2)


def dependency_table(net: Network) -> dict[tuple[str, str], float]:
    """All node_dependency values, keyed (i, removed-node n).

    The heavy, threshold-independent part of the analysis: one reduced
    hop matrix per non-end node, vectorized closeness deltas. Requires a
    connected graph of at least 3 nodes.
    """
    nodes = net.nodes
    cnt = len(nodes)
    if cnt < 3:
        raise ScenarioError("dependency analysis needs at least 3 nodes")
    if not is_connected(net):
        raise ScenarioError("dependency analysis requires a connected topology")

    base = hop_matrix(net).hops.astype(np.float64)
    inv_base = np.zeros_like(base)
    np.divide(1.0, base, out=inv_base, where=base > 0)

    table: dict[tuple[str, str], float] = {}
    removable = [n for n in nodes if n not in net.end_nodes]
    idx = net.index()
    for n in removable:
        k = idx[n]
        red = hop_matrix_without(net, n).hops
        inv_red = np.zeros_like(inv_base)
        np.divide(1.0, red, out=inv_red, where=red > 0)
        # pairwise drop; unreachable-after-removal pairs count as 1
        contrib = np.where(red >= 0, inv_base - inv_red, 1.0)
        np.fill_diagonal(contrib, 0.0)
        contrib[:, k] = 0.0
        contrib[k, :] = 0.0
        sums = contrib.sum(axis=1) / (cnt - 2)
        for i, node_i in enumerate(nodes):
            if node_i != n:
                table[(node_i, n)] = float(sums[i])
    return table


def _all_critical(net: Network, threshold: float,
                  table: dict[tuple[str, str], float]) -> dict[str, frozenset[str]]:
    by_node: dict[str, set[str]] = {n: set() for n in net.nodes}
    for (node, removed), v in table.items():
        if v > threshold:
            by_node[node].add(removed)
    return {n: frozenset(s) for n, s in by_node.items()}


def critical_set(net: Network, n: str, threshold: float,
                 table: dict[tuple[str, str], float] | None = None) -> frozenset[str]:
    """Nodes whose removal pushes n's dependency strictly above threshold."""
    if table is None:
        table = dependency_table(net)
    return frozenset(i for (node, i), v in table.items() if node == n and v > threshold)


def _correlated_from_critical(net: Network, n: str,
                              critical: dict[str, frozenset[str]],
                              depth: int) -> frozenset[str]:
    out = set(critical[n])
    for i in net.nodes:
        if i != n and n in critical[i]:
            out.add(i)
    level = critical[n]
    for _ in range(depth - 1):
        nxt: set[str] = set()
        for i in level:
            nxt |= critical[i]
        out |= nxt
        level = frozenset(nxt)
    out.discard(n)
    return frozenset(out)


def correlated_set(net: Network, n: str, threshold: float,
                   table: dict[tuple[str, str], float] | None = None,
                   depth: int = 2) -> frozenset[str]:
    """Exclusion zone around n: its critical set, every node that counts n as
    critical, and the critical sets of n's own critical nodes (two levels;
    depth > 2 keeps cascading critical-of-critical). n itself is excluded.
    """
    if depth < 2:
        raise ValueError("depth must be at least 2")
    if table is None:
        table = dependency_table(net)
    return _correlated_from_critical(net, n, _all_critical(net, threshold, table), depth)


@dataclass(frozen=True)
class DependencyProfile:
    """Cached per-topology analysis at a fixed threshold."""

    threshold: float
    table: dict[tuple[str, str], float]
    critical: dict[str, frozenset[str]]
    correlated: dict[str, frozenset[str]]

    def exclusion_zone(self, hosts) -> frozenset[str]:
        """Union of the correlated sets of the given hosting nodes."""
        zone: set[str] = set()
        for h in hosts:
            zone |= self.correlated.get(h, frozenset())
        return frozenset(zone)

    def coverage(self) -> float:
        """Fraction of nodes appearing in at least one correlated set."""
        covered: set[str] = set()
        for s in self.correlated.values():
            covered |= s
        return len(covered) / max(1, len(self.critical))


def build_profile(net: Network, threshold: float,
                  table: dict[tuple[str, str], float] | None = None,
                  depth: int = 2) -> DependencyProfile:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold {threshold} outside (0, 1)")
    if table is None:
        table = dependency_table(net)
    hostable = [n for n in net.nodes if n not in net.end_nodes]
    critical = _all_critical(net, threshold, table)
    correlated = {n: _correlated_from_critical(net, n, critical, depth)
                  for n in hostable}
    return DependencyProfile(threshold, table, critical, correlated)
