"""Command-line harness: single runs, replicate sweeps, route and network
export. Exit codes: 0 success, 1 usage or config error, 2 runtime error.
Verdict lines describe experiment outcomes and never affect the exit code.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import statistics
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, ENGINE_KEYS, config_as_dict, parse_config
from .core import GoodKind, RecipeBook
from .domains import DOMAIN_PARAM_KEYS, build_domain
from .engine import SimulationConfig, run
from .observer import (ObservationRecord, RegimeSummary, export_network,
                       network_to_dot, observe, regime_summary)
from .routes import enumerate_routes, min_route_depth

_DOTTED_KEYS = sorted(
    key for table in DOMAIN_PARAM_KEYS.values() for key in table)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _dest(key: str) -> str:
    return key.replace(".", "__")


def _base_parser() -> _Parser:
    p = _Parser(add_help=False)
    p.add_argument("--config", dest="config_path", metavar="FILE")
    p.add_argument("--out", default="runs", metavar="DIR")
    p.add_argument("--domain")
    p.add_argument("--seed")
    p.add_argument("--n-agents", "--n_agents", dest="n_agents")
    p.add_argument("--ring-radius", "--ring_radius", dest="ring_radius")
    p.add_argument("--discovery-budget", "--discovery_budget", "--budget",
                   dest="discovery_budget")
    p.add_argument("--patience")
    p.add_argument("--decay-coefficient", "--decay_coefficient",
                   dest="decay_coefficient")
    p.add_argument("--demand-mode", "--demand_mode", dest="demand_mode")
    p.add_argument("--supplier-memory", "--supplier_memory",
                   dest="supplier_memory", metavar="ON|OFF")
    p.add_argument("--witness-protection", "--witness_protection",
                   dest="witness_protection", metavar="ON|OFF")
    p.add_argument("--max-steps", "--max_steps", dest="max_steps")
    for key in _DOTTED_KEYS:
        p.add_argument(f"--{key}", dest=_dest(key), metavar="VALUE")
    return p


def build_parser() -> _Parser:
    base = _base_parser()
    parser = _Parser(prog="freemarket",
                     description="Seeded market-discovery simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[base],
                           help="one run, full artifact export")
    p_run.set_defaults(func=cmd_run)

    p_bud = sub.add_parser("sweep-budget", parents=[base],
                           help="regime table across discovery budgets")
    p_bud.add_argument("--budgets", default="1,10,50", metavar="LIST")
    p_bud.add_argument("--seeds", default="1-10", metavar="LIST")
    p_bud.set_defaults(func=cmd_sweep_budget)

    p_tmp = sub.add_parser("sweep-temperature", parents=[base],
                           help="route table across temperatures")
    p_tmp.add_argument("--temperatures", default="300,400", metavar="LIST")
    p_tmp.add_argument("--seeds", default="1-10", metavar="LIST")
    p_tmp.add_argument("--target", required=True, metavar="KIND")
    p_tmp.add_argument("--max-routes", "--max_routes", dest="max_routes",
                       type=int, default=1000)
    p_tmp.set_defaults(func=cmd_sweep_temperature)

    p_rte = sub.add_parser("routes", parents=[base],
                           help="enumerate synthesis routes after a run")
    p_rte.add_argument("--target", required=True, metavar="KIND")
    p_rte.add_argument("--max-routes", "--max_routes", dest="max_routes",
                       type=int, default=1000)
    p_rte.set_defaults(func=cmd_routes)

    p_net = sub.add_parser("export-network", parents=[base],
                           help="run and export the production network")
    p_net.set_defaults(func=cmd_export_network)
    return parser


# ----------------------------------------------------------------------
# config and list parsing


def _resolve_config(args) -> SimulationConfig:
    overrides: dict[str, object] = {}
    for key in ENGINE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    for key in _DOTTED_KEYS:
        value = getattr(args, _dest(key), None)
        if value is not None:
            overrides[key] = value
    return parse_config(args.config_path, overrides)


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        m = re.fullmatch(r"(\d+)-(\d+)", chunk)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ConfigError(f"empty seed range {chunk!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            try:
                seeds.append(int(chunk))
            except ValueError:
                raise ConfigError(f"bad seed {chunk!r}") from None
    if not seeds:
        raise ConfigError("no seeds given")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")
    return seeds


def _parse_values(text: str, caster, what: str) -> list:
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            values.append(caster(chunk))
        except ValueError:
            raise ConfigError(f"bad {what} {chunk!r}") from None
    if not values:
        raise ConfigError(f"no {what}s given")
    if len(set(values)) != len(values):
        raise ConfigError(f"{what}s must be distinct")
    return values


def _label(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


# ----------------------------------------------------------------------
# artifact writing


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


REGIME_HEADER = ("budget", "seed", "species", "objects", "max_depth",
                 "assembly_a")


def _regime_row(budget, seed, summary: RegimeSummary) -> tuple:
    return (budget, seed, summary.species, summary.objects,
            summary.max_depth, summary.assembly_a)


def _write_manifest(run_dir: Path, command: str,
                    config: SimulationConfig) -> None:
    artifacts = {
        p.name: _sha256(p)
        for p in sorted(run_dir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    _write_json(run_dir / "manifest.json", {
        "version": __version__,
        "command": command,
        "domain": config.domain,
        "seed": config.seed,
        "config": config_as_dict(config),
        "artifacts": artifacts,
    })


def _run_and_export(config: SimulationConfig, run_dir: Path, command: str,
                    *, full: bool):
    """Execute one run and write its artifacts. Full runs export everything;
    sweep cells keep only the regime summary and manifest."""
    domain = build_domain(config.domain, config.domain_params)
    sim, records = run(config, domain, record_events=full)
    run_dir.mkdir(parents=True, exist_ok=True)
    reported = records if records else [observe(sim.state)]
    summary = regime_summary(reported, sim.state.book)
    if full:
        depths = sim.state.book.depth_map()
        _write_csv(run_dir / "census.csv",
                   ("step", "kind", "depth", "count"),
                   ((r.step, kind.kind_id,
                     0 if kind.is_primitive else depths.get(kind.kind_id, ""),
                     count)
                    for r in reported
                    for kind, count in sorted(r.census.counts.items(),
                                              key=lambda kv: kv[0].kind_id)))
        _write_csv(run_dir / "copy_by_depth.csv",
                   ("step", "depth", "species", "mean_copies"),
                   ((r.step, d, b.species, b.mean_copies)
                    for r in reported
                    for d, b in sorted(r.depth_buckets.items())))
        _write_json(run_dir / "recipe_book.json", sim.state.book.export())
        doc = export_network(sim.state)
        _write_json(run_dir / "network.json", doc)
        (run_dir / "network.dot").write_text(network_to_dot(doc))
        with open(run_dir / "events.jsonl", "w") as fh:
            for event in sim.state.events or []:
                fh.write(json.dumps(event, sort_keys=True,
                                    separators=(",", ":")))
                fh.write("\n")
    _write_csv(run_dir / "regime.csv", REGIME_HEADER,
               [_regime_row(config.discovery_budget, config.seed, summary)])
    _write_manifest(run_dir, command, config)
    return sim, summary


def _lookup_target(book: RecipeBook, primitives, target_id: str,
                   max_routes: int):
    """Routes to a kind id; a never-seen target means zero routes."""
    kind: Optional[GoodKind] = None
    if book.has_kind(target_id):
        kind = book.kind(target_id)
    else:
        for p in primitives:
            if p.kind_id == target_id:
                kind = p
    if kind is None:
        return []
    return enumerate_routes(book, kind, max_routes=max_routes)


# ----------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    config = _resolve_config(args)
    run_dir = Path(args.out) / f"{config.domain}-single-{config.seed}"
    _sim, summary = _run_and_export(config, run_dir, "run", full=True)
    print(f"run complete: {run_dir}")
    print(f"species {summary.species}, objects {summary.objects}, "
          f"max depth {summary.max_depth}, assembly {summary.assembly_a:.4f}")
    return 0


def cmd_sweep_budget(args) -> int:
    config = _resolve_config(args)
    budgets = _parse_values(args.budgets, int, "budget")
    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    rows = []
    for budget in budgets:
        for seed in seeds:
            cfg = replace(config, discovery_budget=budget, seed=seed)
            cell = out / f"{cfg.domain}-{budget}-{seed}"
            _sim, summary = _run_and_export(cfg, cell, "sweep-budget",
                                            full=False)
            rows.append(_regime_row(budget, seed, summary))
    medians = {}
    for budget in budgets:
        cells = [r for r in rows if r[0] == budget]
        medians[budget] = tuple(
            statistics.median(c[i] for c in cells) for i in range(2, 6))
        rows.append((budget, "median") + medians[budget])
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "regime.csv", REGIME_HEADER, rows)
    for budget in budgets:
        sp, ob, dp, a = medians[budget]
        print(f"budget {budget}: median species {_fmt(sp)}, objects {_fmt(ob)}, "
              f"max depth {_fmt(dp)}, assembly {_fmt(a)}")
    if len(budgets) == 3:
        low, mid, high = sorted(budgets)
        ok = (medians[mid][0] > medians[low][0]
              and medians[mid][0] > medians[high][0]
              and medians[high][2] < medians[low][2])
        word = "holds" if ok else "does not hold"
        print(f"verdict: stagnation/sweet-spot/tar ordering {word} "
              f"(species peak at {mid}, depth {high} vs {low})")
    else:
        print("verdict: skipped (needs exactly three budgets)")
    return 0


def cmd_sweep_temperature(args) -> int:
    config = _resolve_config(args)
    if config.domain != "chem":
        raise ConfigError("sweep-temperature needs --domain chem")
    temperatures = _parse_values(args.temperatures, float, "temperature")
    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    rows = []
    for temp in temperatures:
        for seed in seeds:
            params = dict(config.domain_params)
            params["chem.temperature"] = temp
            cfg = replace(config, seed=seed, domain_params=params)
            cell = out / f"{cfg.domain}-{_label(temp)}-{seed}"
            sim, _summary = _run_and_export(cfg, cell, "sweep-temperature",
                                            full=False)
            routes = _lookup_target(sim.state.book, sim.state.primitives,
                                    args.target, args.max_routes)
            depth = min_route_depth(routes)
            rows.append((temp, seed, args.target, len(routes),
                         "" if depth is None else depth))
    for temp in temperatures:
        cells = [r for r in rows if r[0] == temp]
        count_med = statistics.median(c[3] for c in cells)
        depths = [c[4] for c in cells if c[4] != ""]
        depth_med = statistics.median(depths) if depths else ""
        rows.append((temp, "median", args.target, count_med, depth_med))
        print(f"T={_label(temp)}: median routes {_fmt(count_med)}, "
              f"median min depth {_fmt(depth_med) if depths else 'n/a'}")
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "temperature_sweep.csv",
               ("temperature", "seed", "target", "route_count",
                "min_route_depth"), rows)
    return 0


def cmd_routes(args) -> int:
    config = _resolve_config(args)
    domain = build_domain(config.domain, config.domain_params)
    sim, _records = run(config, domain, observe_steps=False,
                        record_events=False)
    routes = _lookup_target(sim.state.book, sim.state.primitives,
                            args.target, args.max_routes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "routes.csv",
               ("target", "rank", "depth", "total_delta_e", "recipe_ids"),
               ((args.target, i, r.depth, r.total_delta_e,
                 ";".join(str(rid) for rid in r.recipe_ids))
                for i, r in enumerate(routes)))
    depth = min_route_depth(routes)
    suffix = f", min depth {depth}" if depth is not None else ""
    print(f"{len(routes)} routes to {args.target}{suffix}")
    return 0


def cmd_export_network(args) -> int:
    config = _resolve_config(args)
    domain = build_domain(config.domain, config.domain_params)
    sim, _records = run(config, domain, observe_steps=False,
                        record_events=False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = export_network(sim.state)
    _write_json(out / "network.json", doc)
    (out / "network.dot").write_text(network_to_dot(doc))
    print(f"network export: {out / 'network.json'} "
          f"({len(doc['kinds'])} kinds, {len(doc['recipes'])} recipes)")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
