"""Batch front end: configuration parsing, command dispatch, report and
certificate emission.

Reports are JSON with sorted keys; the only volatile field is ``timing_s``,
so identical configuration and seed reproduce every other byte.  Rationals
serialize as "num/den" strings.  Exit codes: 0 success, 2 configuration or
usage error, 3 infeasible construction (a search or depth budget ran out),
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, asdict, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rwlab
from .cocycle import CoboundaryCocycle
from .construct import InfeasibleBreadth, default_schedule, run_construction
from .evc import (certificate_from_json, certificate_to_json, check_evc,
                  essential_value_scan, frac_str)
from .measure import OdometerSpace
from .topo import (SearchBudgetExceeded, ShiftSpace, TransitivePoint,
                   build_sequential, compose_witnesses, evc_residuals,
                   verify_transitive_orbit)
from .values import GroupValue, integer_lattice

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4


class ConfigError(Exception):
    pass


class VerificationFailure(Exception):
    pass


@dataclass(frozen=True)
class WorkspaceConfig:
    """Validated run configuration; echoed verbatim into every report."""

    dim: int = 1
    base: int = 2
    valdim: int = 1
    kind: str = "lattice"
    norm_kind: str = "sup"
    seed: int = 0
    depth_limit: int = 24
    outdir: str = "."

    _INT_KEYS = ("dim", "base", "valdim", "seed", "depth_limit")

    @classmethod
    def load(cls, path: Optional[str], overrides: Dict[str, str]) -> "WorkspaceConfig":
        raw: Dict[str, str] = {}
        if path:
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}")
            for lineno, line in enumerate(text.splitlines(), 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                raw[key.strip()] = value.strip()
        raw.update(overrides)
        if "ERGO_SEED" in os.environ:
            raw["seed"] = os.environ["ERGO_SEED"]
        fields = {}
        for key, value in raw.items():
            if key not in cls.__dataclass_fields__ or key.startswith("_"):
                raise ConfigError(f"unknown config key: {key}")
            if key in cls._INT_KEYS:
                try:
                    fields[key] = int(value)
                except ValueError:
                    raise ConfigError(f"config key {key} must be an integer")
            else:
                fields[key] = value
        cfg = cls(**fields)
        if cfg.dim < 1 or cfg.base < 2 or cfg.valdim < 1 or cfg.depth_limit < 1:
            raise ConfigError("dim/base/valdim/depth_limit out of range")
        if cfg.kind not in ("lattice", "dense"):
            raise ConfigError("kind must be lattice or dense")
        if cfg.norm_kind not in ("sup", "l1"):
            raise ConfigError("norm_kind must be sup or l1")
        return cfg


def _jsonable(v):
    if isinstance(v, Fraction):
        return frac_str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, bytes):
        return v.hex()
    if hasattr(v, "to_text"):
        return v.to_text()
    if isinstance(v, GroupValue):
        return {"coeffs": list(v.coeffs),
                "coords": [frac_str(c) for c in v.coords]}
    return v


def write_report(cfg: WorkspaceConfig, command: str, payload: dict,
                 started: float, status: str = "ok") -> Path:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "command": command,
        "config": asdict(cfg),
        "status": status,
        "payload": _jsonable(payload),
        "timing_s": round(time.time() - started, 6),
    }
    path = out / f"report-{command}.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return path


# -- subcommands -------------------------------------------------------------


def cmd_construct_measurable(cfg: WorkspaceConfig, args) -> dict:
    space = OdometerSpace(cfg.dim, cfg.base)
    group = integer_lattice(cfg.valdim)
    gens = [GroupValue(group, tuple(1 if j == i else 0
                                    for j in range(group.n_generators)))
            for i in range(group.n_generators)]
    windows = [space.whole_space(1)]
    schedule = default_schedule(gens, windows, args.rounds)
    state, log = run_construction(space, group, schedule,
                                  depth_limit=cfg.depth_limit)
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    cert_files = []
    for cert, potential in log.issued:
        path = out / f"cert-stage-{cert.stage}.json"
        path.write_text(certificate_to_json(cert, potential) + "\n")
        cert_files.append(path.name)
    if not all(r["ok"] for r in log.revalidations):
        raise VerificationFailure("certificate revalidation failed")
    payload = log.to_jsonable()
    payload["certificates"] = cert_files
    payload["final_depth"] = state.potential.depth
    return payload


def _load_targets(path: str) -> List[dict]:
    try:
        targets = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read targets file: {exc}")
    if not isinstance(targets, list) or not targets:
        raise ConfigError("targets file must hold a nonempty JSON list")
    for t in targets:
        if not {"V_radius", "t", "eta"} <= set(t):
            raise ConfigError("each target needs V_radius, t, eta")
    return targets


def cmd_construct_topological(cfg: WorkspaceConfig, args) -> dict:
    if args.dim != 1:
        raise ConfigError("the sequential engine supports shift dimension 1")
    targets = _load_targets(args.targets)
    for t in targets:
        if len(t["t"]) != args.valdim:
            raise ConfigError("target vector dimension mismatch")
    point = TransitivePoint(ShiftSpace(dim=args.dim))
    F = build_sequential(point, targets, budget=args.budget)
    residuals = evc_residuals(F)
    for rec, res in zip(F.records, residuals):
        if not res["residual"] < rec["eta"]:
            raise VerificationFailure(
                f"essential-value residual {res['residual']} exceeds eta")
    payload = {
        "records": F.records,
        "residuals": residuals,
        "composition": (compose_witnesses(F, 0, len(F.terms) - 1)
                        if len(F.terms) >= 2 else None),
        "coverage": [],
    }
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    window = bytes([0])
    for budget in args.coverage_budgets:
        cov = verify_transitive_orbit(F, window, R=args.value_radius,
                                      delta=args.delta, budget=budget)
        path = out / f"coverage-{budget}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["grid_pattern_hex", "grid_value", "nearest_orbit_distance"])
            for pat_hex, z, dist in cov["rows"]:
                w.writerow([pat_hex, repr(z), repr(dist)])
        payload["coverage"].append({
            "budget": budget, "grid_points": cov["grid_points"],
            "covered": cov["covered"], "coverage": cov["coverage"],
            "csv": path.name,
        })
    return payload


def cmd_verify_evc(cfg: WorkspaceConfig, args) -> dict:
    try:
        text = Path(args.certificate).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read certificate: {exc}")
    try:
        cert, cocycle = certificate_from_json(text)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed certificate: {exc}")
    if cocycle is None:
        raise ConfigError("certificate has no embedded cocycle; not self-contained")
    recheck, report = check_evc(cocycle, cert.holonomy, cert.window,
                                cert.target, cert.radius, cert.threshold,
                                stage=cert.stage)
    if recheck is None:
        raise VerificationFailure(f"failing clause: {report.failing_clause}")
    if recheck.measured != cert.measured:
        raise VerificationFailure(
            "failing clause: measured_mismatch "
            f"(recorded {frac_str(cert.measured)}, "
            f"rechecked {frac_str(recheck.measured)})")
    return {
        "certificate": args.certificate,
        "stage": cert.stage,
        "measured": cert.measured,
        "threshold": cert.threshold,
        "residual": report.residual,
        "verified": True,
    }


def _parse_coeff_list(text: str, valdim: int) -> List[Tuple[int, ...]]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        coeffs = tuple(int(c) for c in chunk.split(","))
        if len(coeffs) != valdim:
            raise ConfigError("target coefficient dimension mismatch")
        out.append(coeffs)
    if not out:
        raise ConfigError("no targets given")
    return out


def cmd_scan_essential_values(cfg: WorkspaceConfig, args) -> dict:
    try:
        cert, cocycle = certificate_from_json(Path(args.input).read_text())
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load certificate: {exc}")
    if cocycle is None:
        raise ConfigError("certificate has no embedded cocycle")
    group = cert.target.group
    if args.targets:
        coeff_lists = _parse_coeff_list(args.targets, group.n_generators)
    else:
        coeff_lists = [(0,) * group.n_generators, cert.target.coeffs]
    results = []
    all_found = True
    for coeffs in coeff_lists:
        target = GroupValue(group, coeffs)
        hits = essential_value_scan(cocycle, cert.window, target,
                                    radius=args.radius, max_norm=args.max_norm)
        results.append({"target": list(coeffs), "witnesses": hits,
                        "found": bool(hits)})
        all_found = all_found and bool(hits)
    if not all_found:
        raise VerificationFailure("no positive-measure witness for some target")
    return {"window": cert.window.to_text(), "radius": args.radius,
            "max_norm": args.max_norm, "scans": results}


WALKS = {
    # simple symmetric walk on Z
    "simple": ({0: (-1.0,), 1: (1.0,)}, (0.5, 0.5), 1.0),
    # lazy symmetric walk on Z^3: hold half the time
    "lazy3": ({0: (0.0, 0.0, 0.0),
               1: (1.0, 0.0, 0.0), 2: (-1.0, 0.0, 0.0),
               3: (0.0, 1.0, 0.0), 4: (0.0, -1.0, 0.0),
               5: (0.0, 0.0, 1.0), 6: (0.0, 0.0, -1.0)},
              (0.5,) + (1 / 12,) * 6, 5.0),
}


def cmd_rw_demo(cfg: WorkspaceConfig, args) -> dict:
    phi, mu, default_radius = WALKS[args.walk]
    radius = args.radius if args.radius is not None else default_radius
    horizons = [int(h) for h in args.horizons.split(",")] if args.horizons else None
    return rwlab.recurrence_diagnostic(
        phi, mu, steps=args.steps, trials=args.trials, radius=radius,
        seed=cfg.seed, horizons=horizons)


def _read_block_tables(path: str) -> List[rwlab.BlockFunction]:
    """Plain-text cocycle table: a header line ``dim=.. depth=.. valdim=..
    symbols=..`` then one line per (generator, pattern):
    ``<generator 1..dim> <digit string over the box window, lex site order>
    <value components>``.  Every pattern must appear exactly once."""
    try:
        lines = [ln.split("#", 1)[0].strip()
                 for ln in Path(path).read_text().splitlines()]
    except OSError as exc:
        raise ConfigError(f"cannot read table: {exc}")
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("empty table file")
    header = {}
    for tok in lines[0].split():
        if "=" not in tok:
            raise ConfigError("malformed table header")
        k, v = tok.split("=", 1)
        header[k] = int(v)
    try:
        dim, depth = header["dim"], header["depth"]
        valdim, n_symbols = header["valdim"], header["symbols"]
    except KeyError as exc:
        raise ConfigError(f"table header missing {exc}")
    n_patterns = n_symbols ** (depth ** dim)
    tables = [np.full((n_patterns, valdim), np.nan) for _ in range(dim)]
    probe = rwlab.BlockFunction.zero(dim, depth, valdim, n_symbols)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2 + valdim:
            raise ConfigError(f"malformed table line: {ln!r}")
        gen = int(parts[0])
        if not 1 <= gen <= dim:
            raise ConfigError(f"generator index out of range: {gen}")
        digits = [int(c) for c in parts[1]]
        if len(digits) != depth ** dim or any(not 0 <= c < n_symbols for c in digits):
            raise ConfigError(f"malformed pattern: {parts[1]!r}")
        idx = probe.pattern_index(digits)
        tables[gen - 1][idx] = [float(v) for v in parts[2:]]
    for i, table in enumerate(tables):
        if np.isnan(table).any():
            raise ConfigError(f"generator {i + 1}: incomplete pattern table")
    return [rwlab.BlockFunction(dim, depth, valdim, t, n_symbols) for t in tables]


def cmd_decompose(cfg: WorkspaceConfig, args) -> dict:
    fs = _read_block_tables(args.input)
    result = rwlab.schmidt_decompose(fs, depth_limit=args.depth, tol=args.tol)
    payload = {k: v for k, v in result.items() if k not in ("g", "H")}
    if "H" in result:
        payload["H_images"] = [list(row) for row in result["H"].images]
    if result.get("g") is not None:
        g = result["g"]
        payload["g"] = {"depth": g.depth, "table": g.table}
    if result["status"] != "ok":
        raise VerificationFailure(f"decomposition failed: {result['status']}")
    return payload


def cmd_j_action(cfg: WorkspaceConfig, args) -> dict:
    alpha = tuple(float(a) for a in args.alpha.split(","))
    if any(not 0.0 < a < 1.0 for a in alpha):
        raise ConfigError("alpha components must lie in (0, 1)")
    d = len(alpha) + 1
    rng = np.random.default_rng(cfg.seed)
    mismatches = 0
    for _ in range(args.points):
        p = rwlab.TorusLatticePoint(
            tuple(float(v) for v in rng.uniform(size=len(alpha))),
            tuple(int(v) for v in rng.integers(-5, 6, size=len(alpha))))
        for j in range(1, d):
            a = rwlab.j_action_apply(d, rwlab.j_action_apply(j, p, alpha), alpha)
            b = rwlab.j_action_apply(j, rwlab.j_action_apply(d, p, alpha), alpha)
            if a != b:
                mismatches += 1
    eq = rwlab.equidistribution_check(alpha, n=args.orbit, cells=args.cells)
    if mismatches:
        raise VerificationFailure(f"{mismatches} commutation mismatches")
    return {"alpha": list(alpha), "points": args.points,
            "commutation_mismatches": mismatches,
            "equidistribution": eq}


def cmd_inspect(cfg: WorkspaceConfig, args) -> dict:
    try:
        data = json.loads(Path(args.path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot inspect {args.path}: {exc}")
    if {"pieces", "window", "target_coeffs"} <= set(data):
        kind = "certificate"
        summary = {"stage": data.get("stage"),
                   "pieces": len(data["pieces"]),
                   "threshold": data.get("threshold"),
                   "measured": data.get("measured"),
                   "self_contained": "cocycle" in data}
    elif "command" in data:
        kind = "report"
        summary = {"command": data["command"],
                   "status": data.get("status"),
                   "payload_keys": sorted(data.get("payload", {})
                                          if isinstance(data.get("payload"), dict)
                                          else [])}
    else:
        kind = "unknown"
        summary = {"top_level_keys": sorted(data)}
    return {"path": args.path, "kind": kind, "summary": summary}


# -- dispatch ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skewlab",
                                description="cocycle workbench batch front end")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker parallelism bound (module internals)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("construct-measurable",
                       help="run the inductive tower construction")
    s.add_argument("--rounds", type=int, default=2)
    s.set_defaults(fn=cmd_construct_measurable)

    s = sub.add_parser("construct-topological",
                       help="build a sequential bump-coboundary cocycle")
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--valdim", type=int, default=1)
    s.add_argument("--targets", required=True,
                   help="JSON list of {V_radius, t, eta}")
    s.add_argument("--budget", type=int, default=16_000_000)
    s.add_argument("--coverage-budgets", dest="coverage_budgets",
                   type=lambda v: [int(x) for x in v.split(",")],
                   default=[1000, 10000])
    s.add_argument("--value-radius", dest="value_radius", type=float, default=1.0)
    s.add_argument("--delta", type=float, default=0.25)
    s.set_defaults(fn=cmd_construct_topological)

    s = sub.add_parser("verify-evc", help="recheck a self-contained certificate")
    s.add_argument("certificate")
    s.set_defaults(fn=cmd_verify_evc)

    s = sub.add_parser("scan-essential-values",
                       help="exhaustive witness scan around a certificate window")
    s.add_argument("--input", required=True, help="self-contained certificate")
    s.add_argument("--targets", help="semicolon-separated coefficient tuples")
    s.add_argument("--radius", type=float, default=1e-9)
    s.add_argument("--max-norm", dest="max_norm", type=int, default=4)
    s.set_defaults(fn=cmd_scan_essential_values)

    s = sub.add_parser("rw-demo", help="random-walk recurrence diagnostics")
    s.add_argument("--walk", choices=sorted(WALKS), default="simple")
    s.add_argument("--steps", type=int, default=10**6)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--radius", type=float)
    s.add_argument("--horizons", help="comma-separated nested horizons")
    s.set_defaults(fn=cmd_rw_demo)

    s = sub.add_parser("decompose",
                       help="split a block cocycle into coboundary + homomorphism")
    s.add_argument("--input", required=True, help="plain-text generator tables")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--depth", type=int, default=3)
    s.set_defaults(fn=cmd_decompose)

    s = sub.add_parser("j-action",
                       help="torus-times-lattice action commutation and equidistribution")
    s.add_argument("--alpha", required=True, help="comma-separated rotation vector")
    s.add_argument("--points", type=int, default=10000)
    s.add_argument("--orbit", type=int, default=10**5)
    s.add_argument("--cells", type=int, default=10)
    s.set_defaults(fn=cmd_j_action)

    s = sub.add_parser("inspect", help="summarize a report or certificate file")
    s.add_argument("path")
    s.set_defaults(fn=cmd_inspect)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through
        return int(exc.code or 0)
    started = time.time()
    try:
        overrides: Dict[str, str] = {}
        if args.out is not None:
            overrides["outdir"] = args.out
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        cfg = WorkspaceConfig.load(args.config, overrides)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        payload = args.fn(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleBreadth, SearchBudgetExceeded) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    path = write_report(cfg, args.command, payload, started)
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
