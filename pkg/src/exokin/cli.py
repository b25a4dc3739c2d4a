"""Batch command line: enumerate, validate, catalog-check, coverage-map, export.

Exit codes: 0 success, 1 validation failures present, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import metadata
from pathlib import Path

from .arm import ArmModel, load_arm
from .canonical import canonical_dumps
from .catalog import classify_catalog_entry, load_catalog
from .config import RunConfig, apply_env, load_config
from .errors import ArmConfigError, ConfigError, ConstructionError, InvalidArgument
from .grammar import (GrammarOptions, design_id, design_to_dict, dof_gaps, enumerate_designs,
                      load_grammar_options, make_filter)
from .plots import write_coverage
from .spherical import AxisTriplet, coverage_map, full_sphere_condition
from .validators import validate_design

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COMMANDS = ("enumerate", "validate", "catalog-check", "coverage-map", "export")


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="exokin",
        description="Enumerate and validate exoskeleton kinematic designs.",
        epilog="Environment overrides: EXOKIN_ARM, EXOKIN_GRAMMAR, EXOKIN_CATALOG, EXOKIN_OUT, "
               "EXOKIN_THREADS (config file < environment < flags).")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--arm", help="arm config JSON (default: built-in fixtures)")
    p.add_argument("--grammar", help="grammar options JSON (default: packaged)")
    p.add_argument("--catalog", help="catalog JSON (default: packaged)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads for validation")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.add_parser("enumerate", help="write the filtered design stream")
    v = sub.add_parser("validate", help="validate enumerated designs")
    v.add_argument("--max-designs", type=int, help="validate only the first N designs")
    sub.add_parser("catalog-check", help="classify the device catalog")
    c = sub.add_parser("coverage-map", help="sphere coverage CSV + SVG for a triplet")
    c.add_argument("--triplet", required=True, help="theta1,theta2,theta3 in degrees")
    e = sub.add_parser("export", help="canonical JSON of selected designs")
    e.add_argument("--ids", help="comma-separated design ids (default: all filtered designs)")
    return p


def effective_config(args: argparse.Namespace, environ=None) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = apply_env(cfg, environ)
    updates = {k: getattr(args, k) for k in ("arm", "grammar", "catalog", "out", "threads")
               if getattr(args, k) is not None}
    if updates.get("threads") is not None and updates["threads"] < 1:
        raise ConfigError("'threads' must be >= 1", path="threads")
    for key in ("arm", "grammar", "catalog"):
        if key in updates and not Path(updates[key]).exists():
            raise ConfigError(f"'{key}' path does not exist: {updates[key]}", path=key)
    if getattr(args, "max_designs", None) is not None:
        if args.max_designs < 1:
            raise ConfigError("'max_designs' must be >= 1", path="max_designs")
        updates["max_designs"] = args.max_designs
    return replace(cfg, **updates) if updates else cfg


def _write_meta(out: Path, command: str, argv: list[str], started: str) -> None:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    meta = {"command": command, "argv": argv, "started": started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(), "version": version}
    (out / f"{command}.meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _designs(cfg: RunConfig, opts: GrammarOptions):
    filters = [make_filter(f.name, f.params) for f in cfg.filters]
    return enumerate_designs(opts, filters)


def cmd_enumerate(cfg, arm, opts, out: Path, args) -> int:
    path = out / "designs.jsonl"
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for i, d in enumerate(_designs(cfg, opts)):
            fh.write(canonical_dumps({"index": i, "id": design_id(d), "design": design_to_dict(d)}) + "\n")
            count += 1
    print(f"{count} designs (of {opts.cardinality} unfiltered) -> {path}")
    return EXIT_OK


def cmd_validate(cfg, arm, opts, out: Path, args) -> int:
    designs = []
    for d in _designs(cfg, opts):
        if cfg.max_designs is not None and len(designs) >= cfg.max_designs:
            break
        designs.append(d)
    res = cfg.resolutions

    def run(d):
        try:
            report = validate_design(d, arm, res["rom_samples_per_dof"], res["scan_grid"],
                                     cfg.singularity_threshold, cfg.expected_mobility,
                                     cfg.min_rom_coverage, res["scan_budget"])
            return {"id": design_id(d), "report": report.to_dict()}
        except (ConstructionError, InvalidArgument) as exc:
            return {"id": design_id(d), "error": str(exc)}

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(run, designs))
    failed = errors = 0
    with open(out / "reports.jsonl", "w", encoding="utf-8") as fh:
        for i, r in enumerate(results):
            fh.write(canonical_dumps({"index": i, **r}) + "\n")
            if "error" in r:
                errors += 1
            elif not r["report"]["passed"]:
                failed += 1
    summary = {"designs": len(results), "passed": len(results) - failed - errors,
               "failed": failed, "errors": errors}
    (out / "summary.json").write_text(canonical_dumps(summary) + "\n", encoding="utf-8")
    print(f"validated {len(results)} designs: {summary['passed']} passed, {failed} failed, {errors} errors")
    return EXIT_OK if failed == 0 and errors == 0 else EXIT_FAIL


def cmd_catalog_check(cfg, arm, opts, out: Path, args) -> int:
    entries = load_catalog(cfg.catalog)
    rows, ok = [], True
    print(f"{'entry':<12} {'status':<18} {'gaps':<16} detail")
    for e in entries:
        r = classify_catalog_entry(e, opts, arm)
        if r.representable:
            gaps = sorted(g.value for g in dof_gaps(r.design))
            row = {"name": e.name, "representable": True, "id": design_id(r.design),
                   "design": design_to_dict(r.design), "assumed": list(r.assumed), "gaps": gaps}
            if e.stated("missing_dofs"):
                row["stated_missing"] = sorted(e.value("missing_dofs"))
            detail = f"{len(r.assumed)} assumed fields"
            status = "representable"
        else:
            row = {"name": e.name, "representable": False, "reason": r.reason}
            gaps, detail, status, ok = [], r.reason, "NOT representable", False
        rows.append(row)
        print(f"{e.name:<12} {status:<18} {','.join(gaps) or '-':<16} {detail}")
    (out / "catalog_check.json").write_text(canonical_dumps(rows) + "\n", encoding="utf-8")
    return EXIT_OK if ok else EXIT_FAIL


def parse_triplet(text: str) -> AxisTriplet:
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--triplet expects three comma-separated degrees, got {text!r}") from None
    if len(values) != 3:
        raise UsageError(f"--triplet expects three values, got {len(values)}")
    try:
        return AxisTriplet.from_degrees(*values)
    except InvalidArgument as exc:
        raise UsageError(f"--triplet: {exc}") from None


def cmd_coverage_map(cfg, arm, opts, out: Path, args) -> int:
    t = parse_triplet(args.triplet)
    res = cfg.resolutions
    cmap = coverage_map(t, res["sphere_samples"], res["sphere_bins"])
    label = "_".join(f"{x:g}" for x in t.degrees())
    title = f"triplet {label.replace('_', ', ')} deg: coverage {cmap.fraction:.4f}"
    csv_path, svg_path = write_coverage(cmap, out / f"coverage_{label}", title)
    print(f"coverage {cmap.fraction:.6f} ({int(cmap.covered.sum())}/{cmap.grid.n} bins); "
          f"full-sphere condition {'holds' if full_sphere_condition(t) else 'fails'}")
    print(f"-> {csv_path}\n-> {svg_path}")
    return EXIT_OK


def cmd_export(cfg, arm, opts, out: Path, args) -> int:
    wanted = None if not args.ids else [s.strip() for s in args.ids.split(",") if s.strip()]
    selected = {}
    for d in _designs(cfg, opts):
        did = design_id(d)
        if wanted is None or did in wanted:
            selected.setdefault(did, d)
    if wanted is not None:
        missing = [w for w in wanted if w not in selected]
        if missing:
            raise UsageError(f"unknown design id(s): {', '.join(missing)}")
        order = wanted
    else:
        order = list(selected)
    payload = [{"id": i, "design": design_to_dict(selected[i])} for i in order]
    path = out / "designs.json"
    path.write_text(canonical_dumps(payload) + "\n", encoding="utf-8")
    print(f"exported {len(payload)} designs -> {path}")
    return EXIT_OK


HANDLERS = {"enumerate": cmd_enumerate, "validate": cmd_validate, "catalog-check": cmd_catalog_check,
            "coverage-map": cmd_coverage_map, "export": cmd_export}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        cfg = effective_config(args)
        if args.print_config:
            sys.stdout.write(cfg.to_json())
            return EXIT_OK
        if not args.command:
            parser.print_usage(sys.stderr)
            print("exokin: error: a command is required", file=sys.stderr)
            return EXIT_USAGE
        arm: ArmModel = load_arm(cfg.arm)
        opts = load_grammar_options(cfg.grammar)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        code = HANDLERS[args.command](cfg, arm, opts, out, args)
        _write_meta(out, args.command, argv, started)
        return code
    except (ConfigError, ArmConfigError, UsageError) as exc:
        print(f"exokin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidArgument, json.JSONDecodeError, OSError) as exc:
        print(f"exokin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
