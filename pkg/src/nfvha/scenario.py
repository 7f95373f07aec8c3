"""Scenario construction: config schema, generators, primary provisioning.

A scenario config is a JSON object naming a topology (a file in the edge-list
format or a generator block), an NF catalog, availability classes, a flow
population (explicit or generated) and the knobs of the allocation pipeline.
All randomness flows from one seed through named streams, so a config is a
complete, reproducible description of an experiment.

The primary provisioner is deliberately simple: route each flow along a BFS
shortest path and serve each chain position by the existing instance of the
right type nearest that path with spare capacity, creating a new one close
to the path only when no instance anywhere can absorb the flow.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ScenarioError
from .netmodel import (MODE_DEDICATED, MODE_SHARED, ROLE_PRIMARY, FlowSpec,
                       NfInstance, NfType, primary_availability)
from .topology import Network, hop_matrix, load_topology, make_network

DEFAULT_NF_CATALOG = (
    {"name": "dpi", "cores": 1, "capacity_pps": 10e6, "avail": 0.999, "mem_gb": 2.0},
    {"name": "fw", "cores": 1, "capacity_pps": 10e6, "avail": 0.999, "mem_gb": 2.0},
    {"name": "ids", "cores": 1, "capacity_pps": 10e6, "avail": 0.999, "mem_gb": 2.0},
    {"name": "lb", "cores": 1, "capacity_pps": 10e6, "avail": 0.999, "mem_gb": 2.0},
    {"name": "nat", "cores": 1, "capacity_pps": 10e6, "avail": 0.999, "mem_gb": 2.0},
)

DEFAULT_CLASSES = {"three9": 0.999, "four9": 0.9999, "five9": 0.99999}


def stream(seed: int, name: str) -> np.random.Generator:
    """Named substream of the scenario seed (stable across runs)."""
    digest = hashlib.blake2b(f"{seed}:{name}".encode(), digest_size=16).digest()
    return np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest, "big")))


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    topology_file: str | None = None
    topology_text: str | None = None
    generate_nodes: int = 44
    generate_links: int = 136
    generate_seed: int | None = None
    node_cores: int = 8
    node_mem: float = 16.0
    node_avail: tuple[float, float] = (0.99, 0.999)
    instance_avail: tuple[float, float] = (0.999, 0.9999)
    backup_cores_fraction: float = 0.5
    backup_mem_fraction: float = 0.5
    nf_catalog: tuple = DEFAULT_NF_CATALOG
    classes: dict = field(default_factory=lambda: dict(DEFAULT_CLASSES))
    class_mix: dict | None = None
    flow_count: int = 100
    chain_length: tuple[int, int] = (2, 4)
    rate_pps: float = 0.5e6
    explicit_flows: tuple | None = None
    declared_instances: tuple | None = None
    dependency_threshold: float = 0.5
    correlation_depth: int = 2
    mode: str = MODE_DEDICATED
    order_policy: str = "chain_length_desc"
    class_order: str = "desc"
    independence: str = "hosts"
    x_max: int = 10
    max_compositions: int = 10_000
    hop_budget: int | None = None
    k_paths: int = 3
    strict_distinct_hosts: bool = False
    runs: int = 1

    def validate(self):
        if self.mode not in (MODE_DEDICATED, MODE_SHARED):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.dependency_threshold < 1.0:
            raise ConfigError("dependency_threshold must be in (0, 1)")
        if self.independence not in ("hosts", "path"):
            raise ConfigError(f"unknown independence variant {self.independence!r}")
        if self.class_order not in ("desc", "asc"):
            raise ConfigError(f"unknown class order {self.class_order!r}")
        reqs = list(self.classes.values())
        if not reqs or any(not 0.0 < r < 1.0 for r in reqs):
            raise ConfigError("class requirements must sit in (0, 1)")
        if len(set(reqs)) != len(reqs):
            raise ConfigError("class requirements must be pairwise distinct")
        if self.runs < 1 or self.flow_count < 1:
            raise ConfigError("runs and flow_count must be positive")
        lo, hi = self.chain_length
        if self.explicit_flows is None and not 1 <= lo <= hi <= len(self.nf_catalog):
            raise ConfigError("chain_length range exceeds the NF catalog")
        return self


def config_from_dict(raw: dict) -> ScenarioConfig:
    kwargs: dict = {}
    known = ScenarioConfig.__dataclass_fields__
    topo = raw.get("topology", {})
    if isinstance(topo, dict):
        if "file" in topo:
            kwargs["topology_file"] = topo["file"]
        if "text" in topo:
            kwargs["topology_text"] = topo["text"]
        gen = topo.get("generate", {})
        if gen:
            kwargs["generate_nodes"] = int(gen.get("nodes", 44))
            kwargs["generate_links"] = int(gen.get("links", 136))
            if "seed" in gen:
                kwargs["generate_seed"] = int(gen["seed"])
    flows = raw.get("flows")
    if isinstance(flows, dict):
        if "count" in flows:
            kwargs["flow_count"] = int(flows["count"])
        if "chain_length" in flows:
            cl = flows["chain_length"]
            kwargs["chain_length"] = (int(cl[0]), int(cl[1])) if isinstance(
                cl, (list, tuple)) else (int(cl), int(cl))
        if "rate_pps" in flows:
            kwargs["rate_pps"] = float(flows["rate_pps"])
        if "class_mix" in flows:
            kwargs["class_mix"] = dict(flows["class_mix"])
    elif isinstance(flows, list):
        kwargs["explicit_flows"] = tuple(flows)
    for key, val in raw.items():
        if key in ("topology", "flows"):
            continue
        if key == "instances":
            kwargs["declared_instances"] = tuple(dict(v) for v in val)
        elif key == "nf_catalog":
            kwargs["nf_catalog"] = tuple(dict(v) for v in val)
        elif key == "classes":
            kwargs["classes"] = dict(val)
        elif key == "chain_length":
            kwargs[key] = (int(val[0]), int(val[1])) if isinstance(
                val, (list, tuple)) else (int(val), int(val))
        elif key in ("node_avail", "instance_avail"):
            kwargs[key] = tuple(float(v) for v in val) if isinstance(
                val, (list, tuple)) else (float(val), float(val))
        elif key in known:
            kwargs[key] = val
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return ScenarioConfig(**kwargs).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = config_from_dict(raw)
    if cfg.topology_file is not None and not os.path.isabs(cfg.topology_file):
        base = os.path.dirname(os.path.abspath(path))
        cfg = replace(cfg, topology_file=os.path.join(base, cfg.topology_file))
    return cfg


def generate_topology(nodes: int, links: int, seed: int) -> Network:
    """ISP-like random graph: triangle seed, preferential attachment with two
    links per new node, then uniform extra links up to the target count.
    Connected by construction; deterministic for a given seed.
    """
    if nodes < 3:
        raise ConfigError("generator needs at least 3 nodes")
    min_links = 3 + 2 * (nodes - 3)
    if links < min_links or links > nodes * (nodes - 1) // 2:
        raise ConfigError(
            f"link target {links} outside [{min_links}, {nodes * (nodes - 1) // 2}]"
            f" for {nodes} nodes")
    rng = stream(seed, "topogen")
    width = len(str(nodes - 1))
    name = [f"n{k:0{width}d}" for k in range(nodes)]
    edges: set[tuple[int, int]] = {(0, 1), (0, 2), (1, 2)}
    degree = [2, 2, 2] + [0] * (nodes - 3)
    targets: list[int] = [0, 1, 2] * 2          # degree-weighted draw pool
    for k in range(3, nodes):
        picked: set[int] = set()
        while len(picked) < 2:
            picked.add(int(targets[rng.integers(len(targets))]))
        for t in sorted(picked):
            edges.add((t, k))
            degree[t] += 1
            targets.append(t)
        degree[k] = 2
        targets.extend([k, k])
    while len(edges) < links:
        a = int(rng.integers(nodes))
        b = int(rng.integers(nodes))
        if a == b:
            continue
        e = (a, b) if a < b else (b, a)
        edges.add(e)
    link_names = sorted((name[a], name[b]) for a, b in edges)
    return make_network(link_names)


@dataclass
class BuiltScenario:
    config: ScenarioConfig
    net: Network
    nf_types: dict[str, NfType]
    flows: list[FlowSpec]
    instances: dict[str, NfInstance]            # primaries after provisioning
    class_requirements: dict[str, float]


def _build_network(cfg: ScenarioConfig) -> Network:
    # sentinel availability 1.0 marks nodes that should draw from the config
    # distribution: generated topologies everywhere, files only where the
    # node line omitted avail=
    if cfg.topology_text is not None:
        net = load_topology(cfg.topology_text, cfg.node_cores, 1.0, cfg.node_mem)
    elif cfg.topology_file is not None:
        with open(cfg.topology_file) as fh:
            net = load_topology(fh.read(), cfg.node_cores, 1.0, cfg.node_mem)
    else:
        gseed = cfg.generate_seed if cfg.generate_seed is not None else cfg.seed
        shape = generate_topology(cfg.generate_nodes, cfg.generate_links, gseed)
        net = make_network(shape.links, nodes=shape.nodes,
                           default_cores=cfg.node_cores, default_avail=1.0,
                           default_mem=cfg.node_mem)
    lo, hi = cfg.node_avail
    rng = stream(cfg.seed, "node-avail")
    avail = {}
    for n in net.nodes:
        a = net.node_avail[n]
        avail[n] = float(rng.uniform(lo, hi)) if a == 1.0 else a
    return make_network(net.links, dict(net.node_caps), avail,
                        dict(net.node_mem), net.end_nodes, nodes=net.nodes)


def _chain_pool(cfg: ScenarioConfig, rng: np.random.Generator, count: int):
    names = [t["name"] for t in cfg.nf_catalog]
    lo, hi = cfg.chain_length
    for _ in range(count):
        length = int(rng.integers(lo, hi + 1))
        picks = rng.choice(len(names), size=length, replace=False)
        yield tuple(names[int(p)] for p in picks)


def generate_flows(cfg: ScenarioConfig, net: Network, hops) -> list[FlowSpec]:
    """Seeded flow population: uniform random distinct endpoints at hop
    distance >= 2 (drawn from declared end nodes when present), chains of
    random distinct NFs, classes by the configured mix (uniform by default).
    """
    rng = stream(cfg.seed, "flows")
    pool = sorted(net.end_nodes) if net.end_nodes else list(net.nodes)
    if len(pool) < 2:
        raise ScenarioError("need at least two endpoint candidates")
    classes = sorted(cfg.classes)
    if cfg.class_mix:
        weights = np.array([float(cfg.class_mix.get(c, 0.0)) for c in classes])
        if weights.sum() <= 0:
            raise ConfigError("class_mix weights must sum to a positive value")
        weights = weights / weights.sum()
    else:
        weights = np.full(len(classes), 1.0 / len(classes))

    chains = list(_chain_pool(cfg, rng, cfg.flow_count))
    flows = []
    width = len(str(cfg.flow_count - 1))
    for k in range(cfg.flow_count):
        for _attempt in range(1000):
            a, b = rng.choice(len(pool), size=2, replace=False)
            src, dst = pool[int(a)], pool[int(b)]
            d = hops.dist(src, dst)
            if d is not None and d >= 2:
                break
        else:
            raise ScenarioError("could not draw endpoints two hops apart")
        cls = classes[int(rng.choice(len(classes), p=weights))]
        flows.append(FlowSpec(
            id=f"f{k:0{width}d}", src=src, dst=dst, rate_pps=cfg.rate_pps,
            chain=chains[k], avail_class=cls, avail_req=float(cfg.classes[cls])))
    return flows


def explicit_flows(cfg: ScenarioConfig) -> list[FlowSpec]:
    flows = []
    for raw in cfg.explicit_flows or ():
        try:
            cls = raw["class"]
            binding = raw.get("primary") or {}
            flows.append(FlowSpec(
                id=raw["id"], src=raw["src"], dst=raw["dst"],
                rate_pps=float(raw.get("rate_pps", cfg.rate_pps)),
                chain=tuple(raw["chain"]), avail_class=cls,
                avail_req=float(raw.get("avail_req", cfg.classes.get(cls, 0.0))),
                primary_instances=tuple(binding.get("instances", ())),
                primary_path=tuple(binding.get("path", ())),
            ))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad flow entry {raw!r}: {exc}") from None
    return flows


def declared_instances(cfg: ScenarioConfig, net: Network,
                       nf_types: dict[str, NfType]) -> dict[str, NfInstance]:
    """Primaries declared verbatim in the config (pre-bound flows use them)."""
    out: dict[str, NfInstance] = {}
    for raw in cfg.declared_instances or ():
        try:
            nf = nf_types[raw["nf"]]
            host = raw["host"]
            if host not in net.node_caps or host in net.end_nodes:
                raise ConfigError(
                    f"instance {raw.get('id')!r}: bad host {host!r}")
            avail = float(raw["avail"]) if "avail" in raw else None
            out[raw["id"]] = NfInstance(
                id=raw["id"], nf=nf, host=host, role=ROLE_PRIMARY, avail=avail)
        except KeyError as exc:
            raise ConfigError(f"bad instance entry {raw!r}: {exc}") from None
    return out


def bind_declared(flows: list[FlowSpec], instances: dict[str, NfInstance],
                  net: Network) -> list[FlowSpec]:
    """Attach declared primaries to pre-bound flows, untouched otherwise.

    Validates the chain/instance type match, replays the rate reservation on
    each instance, and fills hosts and the analytic primary availability.
    """
    bound = []
    for f in flows:
        if not f.primary_instances:
            bound.append(f)
            continue
        picked = []
        for pos, iid in enumerate(f.primary_instances):
            inst = instances.get(iid)
            if inst is None:
                raise ConfigError(f"flow {f.id!r}: unknown instance {iid!r}")
            if inst.nf.name != f.chain[pos]:
                raise ConfigError(
                    f"flow {f.id!r}: instance {iid!r} is {inst.nf.name!r}, "
                    f"chain position {pos} wants {f.chain[pos]!r}")
            if not inst.ledger.admit(f, inst.capacity_pps, lambda a, b: False):
                raise ScenarioError(
                    f"flow {f.id!r}: declared primary {iid!r} over capacity")
            picked.append(inst)
        spec = replace(f, primary_hosts=tuple(i.host for i in picked),
                       primary_path=f.primary_path or
                       tuple(dict.fromkeys(i.host for i in picked)))
        spec = replace(spec, primary_avail=primary_availability(
            spec, net, instances))
        bound.append(spec)
    return bound


def shortest_path(net: Network, hops, src: str, dst: str) -> list[str]:
    """One BFS shortest path, deterministic: smallest next hop id first."""
    d = hops.dist(src, dst)
    if d is None:
        raise ScenarioError(f"{src!r} and {dst!r} are disconnected")
    path = [src]
    here = src
    while here != dst:
        step = hops.dist(here, dst)
        nxt = min(v for v in net.neighbors(here)
                  if hops.dist(v, dst) == step - 1)
        path.append(nxt)
        here = nxt
    return path


def provision_primaries(net: Network, flows: list[FlowSpec], hops,
                        nf_types: dict[str, NfType],
                        primary_cores: dict[str, int],
                        primary_mem: dict[str, float],
                        instance_avail=None,
                        prior: dict[str, NfInstance] | None = None
                        ) -> tuple[list[FlowSpec], dict[str, NfInstance]]:
    """Greedy primary provisioning along shortest paths.

    Consolidating: each chain position goes to the existing instance of the
    right type nearest the flow's path that still has spare rate; only when
    no instance anywhere can absorb the flow is a new one created, on the
    fullest fitting node nearest the path (best-fit keeps primaries packed
    on few nodes, leaving the rest clear for backups). Traffic may detour to
    a reused instance; the recorded route stays the direct one. Errors only
    when no instance can absorb the rate and no node can host a new one.
    """
    instances: dict[str, NfInstance] = dict(prior or {})
    by_type: dict[str, list[str]] = {}
    for iid in sorted(instances):
        by_type.setdefault(instances[iid].nf.name, []).append(iid)
    bound: list[FlowSpec] = []
    seq = 0
    for f in flows:
        path = shortest_path(net, hops, f.src, f.dst)
        mids = [n for n in path[1:-1] if n not in net.end_nodes]
        if not mids:
            raise ScenarioError(
                f"flow {f.id!r}: no intermediate node on the {f.src!r}->{f.dst!r} path")
        path_set = set(path)

        def gap(n):
            if n in path_set:
                return 0
            ds = [hops.dist(n, p) for p in path]
            return min((d for d in ds if d is not None),
                       default=len(net.nodes))

        picked: list[str] = []
        for nf_name in f.chain:
            nf = nf_types[nf_name]
            reusable = sorted(
                (iid for iid in by_type.get(nf_name, ())
                 if iid not in picked
                 and instances[iid].ledger.reserved() + f.rate_pps
                 <= instances[iid].capacity_pps),
                key=lambda i: (gap(instances[i].host), instances[i].host, i))
            if reusable:
                chosen = reusable[0]
            else:
                fitting = sorted(
                    (n for n in net.host_nodes()
                     if primary_cores[n] >= nf.cores
                     and primary_mem[n] >= nf.mem_gb),
                    key=lambda n: (gap(n), primary_cores[n], n))
                if not fitting:
                    raise ScenarioError(
                        f"flow {f.id!r}: no capacity anywhere for {nf_name!r}")
                node = fitting[0]
                primary_cores[node] -= nf.cores
                primary_mem[node] -= nf.mem_gb
                avail = instance_avail(seq) if instance_avail else None
                chosen = f"p{seq:03d}.{nf_name}"
                instances[chosen] = NfInstance(
                    id=chosen, nf=nf, host=node, role=ROLE_PRIMARY, avail=avail)
                by_type.setdefault(nf_name, []).append(chosen)
                seq += 1
            inst = instances[chosen]
            ok = inst.ledger.admit(f, inst.capacity_pps, lambda a, b: False)
            if not ok:
                raise ScenarioError(f"flow {f.id!r}: primary admission failed")
            picked.append(chosen)
        hosts = tuple(instances[iid].host for iid in picked)
        spec = replace(f, primary_instances=tuple(picked), primary_hosts=hosts,
                       primary_path=tuple(path))
        spec = replace(spec, primary_avail=primary_availability(spec, net, instances))
        bound.append(spec)
    return bound, instances


def build_scenario(cfg: ScenarioConfig, hops=None) -> BuiltScenario:
    """Materialize a config: topology, flows, provisioned primaries."""
    cfg.validate()
    net = _build_network(cfg)
    if hops is None:
        hops = hop_matrix(net)
    nf_types = {}
    for raw in cfg.nf_catalog:
        t = NfType(name=raw["name"], cores=int(raw.get("cores", 1)),
                   capacity_pps=float(raw.get("capacity_pps", 10e6)),
                   avail=float(raw.get("avail", cfg.instance_avail[0])),
                   mem_gb=float(raw.get("mem_gb", 2.0)))
        nf_types[t.name] = t
    if cfg.explicit_flows is not None:
        flows = explicit_flows(cfg)
    else:
        flows = generate_flows(cfg, net, hops)

    rng = stream(cfg.seed, "instance-avail")
    lo, hi = cfg.instance_avail
    draw = (lambda _k: float(rng.uniform(lo, hi))) if hi > lo else (lambda _k: lo)
    pinned = declared_instances(cfg, net, nf_types)
    flows = bind_declared(flows, pinned, net)
    loose = [f for f in flows if not f.bound]
    primary_cores = {
        n: 0 if n in net.end_nodes
        else net.node_caps[n] - int(net.node_caps[n] * cfg.backup_cores_fraction)
        for n in net.nodes}
    primary_mem = {
        n: 0.0 if n in net.end_nodes
        else net.node_mem[n] - net.node_mem[n] * cfg.backup_mem_fraction
        for n in net.nodes}
    for inst in pinned.values():
        primary_cores[inst.host] = max(0, primary_cores[inst.host] - inst.nf.cores)
        primary_mem[inst.host] = max(0.0, primary_mem[inst.host] - inst.nf.mem_gb)
    fresh, instances = provision_primaries(
        net, loose, hops, nf_types, primary_cores, primary_mem, draw,
        prior=pinned)
    by_id = {f.id: f for f in fresh}
    flows = [by_id.get(f.id, f) for f in flows]
    return BuiltScenario(cfg, net, nf_types, flows, instances,
                         dict(cfg.classes))
