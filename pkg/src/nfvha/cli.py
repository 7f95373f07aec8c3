"""Command line front end.

Subcommands:
  analyze-topology   structural dependency analysis of an edge-list topology
  plan               full pipeline: estimate, place, assign; writes a plan
  simulate           Monte Carlo check of a written plan
  oracle             exhaustive minimum-backup search on a tiny scenario
  sweep              re-plan across dependency thresholds
  report             render figures and CSV series from result files

Exit codes: 0 success, 2 bad input or config, 3 feasibility or runtime
failure in an otherwise valid setup.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, report, serialize
from .errors import ConfigError, InfeasibleError, ScenarioError
from .montecarlo import SimConfig, sampling_tolerance, simulate
from .netmodel import nines
from .oracle import TinyScenario, exhaustive_min_backups
from .placement import backup_budgets
from .scenario import build_scenario, load_config
from .structure import build_profile
from .topology import load_topology


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None


def _load_json(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None


def _write_json(path: str | None, payload: dict) -> None:
    text = serialize.dumps(payload)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_analyze_topology(args) -> int:
    net = load_topology(_read(args.topology))
    profile = build_profile(net, args.threshold, depth=args.depth)
    removable = sorted(n for n in net.nodes if n not in net.end_nodes)
    payload = {
        "nodes": len(net.nodes),
        "links": len(net.links),
        "threshold": args.threshold,
        "critical": {n: sorted(profile.critical[n]) for n in removable},
        "correlated": {n: sorted(profile.correlated.get(n, frozenset()))
                       for n in sorted(profile.correlated)},
        "coverage": profile.coverage(),
    }
    if args.json:
        _write_json(args.json, payload)
    else:
        print(f"{len(net.nodes)} nodes, {len(net.links)} links, "
              f"threshold {args.threshold}")
        for n in removable:
            crit = ",".join(sorted(profile.critical[n])) or "-"
            corr = ",".join(sorted(profile.correlated.get(n, frozenset()))) or "-"
            print(f"  {n}: critical={crit} correlated={corr}")
        print(f"coverage {profile.coverage():.4f}")
    return 0


def cmd_plan(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    result = harness.run_experiment(cfg)
    m = result.metrics
    if args.emit_estimates:
        print("estimated backup chains per class:")
        for c, x in sorted(result.demand.chains_per_class.items()):
            print(f"  {c}: {x}")
        print("estimated backup instances per NF:")
        for (c, nf), z in sorted(result.demand.instances.items()):
            print(f"  {c}/{nf}: {z}")
    if args.emit_placement:
        print("backup placement:")
        for inst in result.placement.placed:
            print(f"  {inst.id} on {inst.host} (avail {inst.avail})")
        if result.placement.unplaced:
            print(f"  unplaced: {dict(sorted(result.placement.unplaced.items()))}")
    print(f"flows accepted: {m.flows_accepted}/{m.flows_total}")
    print(f"backups: {m.backups_used} used of {m.backups_placed} placed "
          f"on {m.backup_nodes_used} nodes")
    print(f"overbuild: {m.overbuild:.3f} "
          f"({m.backups_used} backups / {m.primaries} primaries)")
    for c, r in sorted(m.acceptance_by_class.items()):
        print(f"  {c}: acceptance {r:.3f}")
    if result.metrics_ci is not None:
        ci = result.metrics_ci
        print(f"over {cfg.runs} runs: overbuild "
              f"{ci['overbuild']['mean']:.3f} "
              f"+/- {ci['overbuild']['half_width']:.3f}")
    if args.out:
        payload = serialize.plan_to_dict(result.plan, result.scenario.net)
        payload["metrics"] = m.as_dict()
        _write_json(args.out, payload)
        print(f"plan written to {args.out}")
    if args.metrics:
        _write_json(args.metrics, m.as_dict())
    return 0


def cmd_simulate(args) -> int:
    plan, net = serialize.plan_from_dict(_load_json(args.plan))
    cfg = SimConfig(replications=args.replications, seed=args.seed,
                    contention_aware=args.contention_aware)
    rep = simulate(plan, net, cfg)
    accepted = plan.accepted()
    misses = 0
    for f in accepted:
        est = rep.flows[f.id]
        tol = sampling_tolerance(f.avail_req, rep.replications)
        if est.estimate < f.avail_req - tol:
            misses += 1
            print(f"  MISS {f.id}: simulated {est.estimate:.6f} "
                  f"vs required {f.avail_req}")
    if accepted:
        worst = min(rep.flows[f.id].estimate for f in accepted)
        print(f"{len(accepted)} accepted flows simulated at "
              f"{rep.replications} replications (seed {cfg.seed})")
        print(f"worst flow availability {worst:.6f} ({nines(worst):.2f} nines)")
        print(f"requirement misses beyond tolerance: {misses}")
    else:
        print("plan has no accepted flows")
    if rep.contention is not None:
        worst_c = min(e.estimate for e in rep.contention.values())
        print(f"with failover contention: worst {worst_c:.6f}")
    if args.out:
        _write_json(args.out, serialize.sim_report_to_dict(rep))
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    scn = build_scenario(cfg)
    cores, _mem = backup_budgets(scn.net, cfg.backup_cores_fraction,
                                 cfg.backup_mem_fraction)
    tiny = TinyScenario(net=scn.net, flows=scn.flows, nf_types=scn.nf_types,
                        instances=scn.instances, core_budget=cores,
                        mode=cfg.mode, max_backups=args.max_backups)
    res = exhaustive_min_backups(tiny)
    print(f"minimum backups: {res.min_backups} "
          f"({res.placements_tried} placements, "
          f"{res.assignments_tried} assignment states tried)")
    payload = {
        "min_backups": res.min_backups,
        "placement": [{"nf": t, "host": n} for t, n in res.placement],
        "chains": {fid: [list(ids) for ids in chains]
                   for fid, chains in sorted(res.chains.items())},
    }
    if args.out:
        _write_json(args.out, payload)
    else:
        for row in payload["placement"]:
            print(f"  {row['nf']} on {row['host']}")
        for fid, chains in payload["chains"].items():
            print(f"  {fid}: {chains}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    try:
        thresholds = [float(t) for t in args.thresholds.split(",") if t]
    except ValueError:
        raise ConfigError(f"bad threshold list: {args.thresholds!r}") from None
    if not thresholds:
        raise ConfigError("no thresholds given")
    sweep = harness.threshold_sweep(cfg, thresholds)
    for row in sweep["thresholds"]:
        print(f"t={row['threshold']}: placed {row['backups_placed']} "
              f"used {row['backups_used']} accepted {row['accepted']} "
              f"coverage {row['coverage']:.4f}")
    if args.out:
        _write_json(args.out, sweep)
    return 0


def cmd_report(args) -> int:
    written = []
    sims = {}
    for spec_arg in args.sim or []:
        label, _, path = spec_arg.rpartition("=")
        if not label:
            label, path = Path(path).stem, path
        sims[label] = serialize.sim_report_from_dict(_load_json(path))
    if sims:
        written += report.write_cdf(sims, args.outdir)
        written += report.write_nines_bars(sims, args.outdir)
    if args.metrics:
        payload = _load_json(args.metrics)
        payload = payload.get("metrics", payload)
        written += report.write_usage(payload, args.outdir)
    if args.sweep:
        written += report.write_sweep(_load_json(args.sweep), args.outdir)
    if not written:
        raise ConfigError("nothing to report: pass --sim, --metrics "
                          "or --sweep")
    for p in written:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nfvha",
                                 description="redundancy planning for NFV "
                                             "service chains")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-topology",
                       help="critical and correlated node sets")
    p.add_argument("topology", help="edge-list topology file")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--json", metavar="OUT",
                   help="write JSON to a file, or - for stdout")
    p.set_defaults(fn=cmd_analyze_topology)

    p = sub.add_parser("plan", help="run the allocation pipeline")
    p.add_argument("config", help="scenario config JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--out", metavar="PLAN", help="write the plan JSON")
    p.add_argument("--metrics", metavar="OUT", help="write metrics JSON")
    p.add_argument("--emit-estimates", action="store_true")
    p.add_argument("--emit-placement", action="store_true")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("simulate", help="Monte Carlo check of a plan")
    p.add_argument("plan", help="plan JSON from the plan subcommand")
    p.add_argument("--replications", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--contention-aware", action="store_true",
                   help="also model failover capacity contention")
    p.add_argument("--out", metavar="OUT", help="write the full report JSON")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("oracle", help="exhaustive search on a tiny scenario")
    p.add_argument("config", help="scenario config JSON (small sizes only)")
    p.add_argument("--max-backups", type=int, default=8)
    p.add_argument("--out", metavar="OUT", help="write the result JSON")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("sweep", help="re-plan across dependency thresholds")
    p.add_argument("config", help="scenario config JSON")
    p.add_argument("--thresholds", required=True,
                   help="comma separated, e.g. 0.3,0.5,0.7")
    p.add_argument("--out", metavar="OUT", help="write the sweep JSON")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("report", help="render figures and CSV series")
    p.add_argument("--sim", action="append", metavar="[LABEL=]REPORT",
                   help="simulation report JSON, repeatable")
    p.add_argument("--metrics", metavar="FILE",
                   help="metrics JSON (or a plan file with metrics)")
    p.add_argument("--sweep", metavar="FILE", help="sweep JSON")
    p.add_argument("--outdir", default="report")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (InfeasibleError, ScenarioError) as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
