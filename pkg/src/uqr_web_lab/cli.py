"""Command-line entry point: ``uqr-web-lab {web,periodic,necklace,growth,linearize}``.

Exit codes: 0 pass, 2 verdict fail, 3 undecided or construction error,
4 usage or configuration error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError, PreconditionError, UqrError

EXIT_PASS, EXIT_FAIL, EXIT_UNDECIDED, EXIT_USAGE = 0, 2, 3, 4


# --- configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class Key:
    kind: type
    default: object
    lo: float | None = None
    hi: float | None = None


def _complex(text: str) -> complex:
    return complex(text.replace(" ", ""))


SCHEMAS: dict[str, dict[str, Key]] = {
    "web": {
        "c": Key(_complex, -6 + 0j),
        "R": Key(float, 20.0, 1.0, 1e6),
        "mu_factor": Key(float, 1.05, 1.0 + 1e-9, 10.0),
        "levels": Key(int, 4, 0, 8),
        "k": Key(int, 3, 1, 8),
        "resolution": Key(int, 256, 64, 2048),
        "samples": Key(int, 1024, 64, 1 << 20),
        "seed": Key(int, 0, 0, 2**31 - 1),
    },
    "periodic": {
        "c": Key(_complex, -6 + 0j),
        "p_max": Key(int, 8, 1, 12),
        "samples": Key(int, 2000, 1, 1 << 20),
        "seed": Key(int, 0, 0, 2**31 - 1),
    },
    "necklace": {
        "m": Key(int, 24, 0, 36),
        "depth": Key(int, 3, 0, 4),
        "major": Key(float, 2.0, 1e-6, 1e6),
        "minor": Key(float, 0.54, 1e-6, 1e6),
        "sub_major": Key(float, 0.392, 1e-9, 1e6),
        "resolution": Key(int, 128, 32, 512),
        "export_depth": Key(int, 1, 0, 4),
        "mesh_u": Key(int, 48, 3, 512),
        "mesh_v": Key(int, 24, 3, 512),
        "samples": Key(int, 256, 16, 1 << 16),
        "seed": Key(int, 0, 0, 2**31 - 1),
    },
    "growth": {
        "C1": Key(float, 0.5, 1e-12, 1e12),
        "C2": Key(float, 2.0, 1e-12, 1e12),
        "R0": Key(float, 4.0, 1e-12, 1e12),
        "c": Key(_complex, -6 + 0j),
        "s": Key(float, 1.0, 1e-9, 1e6),
        "t": Key(float, 2.0, 1e-9, 1e6),
        "qs_max_m": Key(int, 12, 1, 40),
        "samples": Key(int, 10000, 64, 1 << 20),
        "seed": Key(int, 0, 0, 2**31 - 1),
    },
    "linearize": {
        "c": Key(_complex, -6 + 0j),
        "points": Key(int, 512, 1, 1 << 20),
        "radius": Key(float, 10.0, 1e-9, 1e3),
        "tolerance": Key(float, 1e-6, 0.0, 1.0),
        "samples": Key(int, 512, 1, 1 << 20),
        "seed": Key(int, 0, 0, 2**31 - 1),
    },
}


def parse_config_text(text: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment; blank lines ignored."""
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}: empty key")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[key] = value
    return out


def resolve_config(command: str, items: dict[str, str]) -> dict:
    """Typed, range-checked configuration with defaults filled in."""
    schema = SCHEMAS[command]
    unknown = sorted(set(items) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    cfg = {}
    for key, spec in schema.items():
        if key not in items:
            cfg[key] = spec.default
            continue
        try:
            val = spec.kind(items[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {items[key]!r}") from exc
        if spec.kind is float and not math.isfinite(val):
            raise ConfigError(f"{key}: must be finite")
        if spec.lo is not None and not val >= spec.lo:
            raise ConfigError(f"{key}={val} below minimum {spec.lo}")
        if spec.hi is not None and not val <= spec.hi:
            raise ConfigError(f"{key}={val} above maximum {spec.hi}")
        cfg[key] = val
    return cfg


# --- commands ----------------------------------------------------------------------


def _repelling_fixed_point(c: complex) -> complex:
    return complex(0.5 * (1.0 + np.sqrt(1.0 - 4.0 * c + 0j)))


def _finish(command: str, cfg: dict, out: Path, verdict: str, metrics: dict, name: str) -> int:
    from .report import ReportEnvelope, write_json

    write_json(out / name, ReportEnvelope(command, cfg, verdict, metrics))
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "undecided": EXIT_UNDECIDED}[verdict]


def cmd_web(cfg: dict, out: Path) -> int:
    from .growth import mu_threshold
    from .linearizer import make_linearizer
    from .maps import quadratic
    from .report import write_curve_csv
    from .web import certify_web

    c = cfg["c"]
    L = make_linearizer(quadratic(c), _repelling_fixed_point(c))
    mu = mu_threshold(2, 1.0, abs(L.multiplier), cfg["mu_factor"]).chosen_mu
    cert = certify_web(L, cfg["R"], mu, cfg["levels"], samples=cfg["samples"], k=cfg["k"],
                       resolution=cfg["resolution"])
    for lvl in cert.levels:
        write_curve_csv(out / f"web_boundary_{lvl.m}.csv", lvl.boundary)
    if cert.gamma is not None:
        write_curve_csv(out / "web_gamma.csv", cert.gamma)
    return _finish("web", cfg, out, cert.verdict, {"certificate": cert, "mu": mu}, "web.json")


def cmd_periodic(cfg: dict, out: Path) -> int:
    from .periodic import density_gap, julia_sample, periodic_points, root_count
    from .report import write_periodic_csv

    c = cfg["c"]
    sample = julia_sample(c, cfg["samples"], cfg["seed"])
    rows, all_records, gaps = [], [], {}
    for p in range(1, cfg["p_max"] + 1):
        recs = periodic_points(c, p, seed=cfg["seed"])
        all_records.extend(r for r in recs if r.period == p)
        rows.append({"p": p, "roots": root_count(recs), "cycles": len(recs),
                     "all_repelling": all(r.classification == "repelling" for r in recs)})
        if len(sample):
            gaps[p] = density_gap(recs, sample)
    write_periodic_csv(out / "periodic.csv", all_records)
    ok = all(r["all_repelling"] for r in rows)
    metrics = {"periods": rows, "density_gap": gaps,
               "multipliers": [{"period": r.period, "multiplier": r.multiplier, "classification": r.classification}
                               for r in all_records if r.period <= 2]}
    return _finish("periodic", cfg, out, "pass" if ok else "fail", metrics, "periodic.json")


def cmd_necklace(cfg: dict, out: Path) -> int:
    from .cantor import (TorusFrame, build_necklace, export_mesh, genus_of_stage, initial_stage, iterate_stage,
                         verify_stage, voxel_complement_connected)

    base = TorusFrame.standard(cfg["major"], cfg["minor"])
    sub_minor = cfg["sub_major"] * cfg["minor"] / cfg["major"]
    try:
        ifs = build_necklace(cfg["m"], base, cfg["sub_major"], sub_minor, samples=cfg["samples"])
    except GeometryError as exc:
        return _finish("necklace", cfg, out, "fail",
                       {"error": str(exc), "margin": exc.margin, "value": exc.value}, "necklace.json")
    stage = initial_stage(base)
    rows, ok = [], True
    for d in range(1, cfg["depth"] + 1):
        stage = iterate_stage(stage, ifs)
        rep = verify_stage(stage, samples=cfg["samples"])
        vox = voxel_complement_connected(stage, cfg["resolution"])
        row = {"depth": d, "pieces": len(stage), "verified": rep.passed, "min_gap": rep.min_gap,
               "min_containment": rep.min_containment, "max_link_residual": rep.max_link_residual,
               "linking_ok": rep.linking_ok, "voxel_connected": vox.connected, "voxel_method": vox.method,
               "genus": genus_of_stage(stage)}
        if d <= cfg["export_depth"]:
            objs = export_mesh(stage, out / f"necklace_depth{d}.obj", cfg["mesh_u"], cfg["mesh_v"])
            row["mesh_objects"] = len(objs)
            row["mesh_euler_ok"] = all(o.euler_characteristic == 0 for o in objs)
            ok = ok and row["mesh_euler_ok"]
        ok = ok and rep.passed and vox.connected
        rows.append(row)
    return _finish("necklace", cfg, out, "pass" if ok else "fail", {"stages": rows}, "necklace.json")


def cmd_growth(cfg: dict, out: Path) -> int:
    from .geom import min_modulus
    from .growth import GrowthConstants, mu_threshold, qs_ratio, sandwich_check
    from .maps import evaluate, example28_map, quadratic

    checks = []
    f_ex = example28_map("f")
    v1 = complex(evaluate(f_ex, 1.0 + 0j))
    checks.append({"name": "example_value_at_1", "value": v1, "passed": abs(v1 + 0.2) < 1e-12})
    mm = min_modulus(f_ex, 1.0, cfg["samples"])
    checks.append({"name": "example_min_modulus", "value": mm, "passed": mm <= 0.2 + 1e-9})
    mu6 = mu_threshold(2, 1.0, 6.0).mu_min
    mu2 = mu_threshold(2, 1.0, 2.0).mu_min
    checks.append({"name": "mu_threshold", "values": [mu6, mu2],
                   "passed": abs(mu6 - math.log(6) / math.log(2)) < 1e-12 and abs(mu2 - 1.0) < 1e-12})
    consts = GrowthConstants(cfg["C1"], cfg["C2"], cfg["R0"], 2)
    f = quadratic(cfg["c"])
    for x in (10.0, 20.0, 50.0):
        for j in range(1, 5):
            rep = sandwich_check(f, consts, x, j)
            checks.append({"name": f"sandwich_x{x:g}_j{j}", "passed": rep.passed, **rep.details})
    ratios = [qs_ratio(f_ex, cfg["s"], cfg["t"], m, min(cfg["samples"], 4096)) for m in range(1, cfg["qs_max_m"] + 1)]
    head = max(ratios[: max(1, len(ratios) // 2)])
    checks.append({"name": "qs_ratio_bounded", "ratios": ratios, "passed": ratios[-1] <= 1.05 * head})
    ok = all(ch["passed"] for ch in checks)
    return _finish("growth", cfg, out, "pass" if ok else "fail", {"checks": checks}, "growth.json")


def cmd_linearize(cfg: dict, out: Path) -> int:
    from .linearizer import make_linearizer, residual
    from .maps import quadratic

    c = cfg["c"]
    L = make_linearizer(quadratic(c), _repelling_fixed_point(c))
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["points"]
    z = cfg["radius"] * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    res = residual(L, z, relative=True)
    worst = float(np.max(res))
    metrics = {"x0": L.x0, "multiplier": L.multiplier, "rho": L.rho, "seed_radius": L.seed_radius,
               "max_relative_residual": worst, "points": n, "radius": cfg["radius"]}
    return _finish("linearize", cfg, out, "pass" if worst < cfg["tolerance"] else "fail", metrics, "linearize.json")


COMMANDS = {"web": cmd_web, "periodic": cmd_periodic, "necklace": cmd_necklace, "growth": cmd_growth,
            "linearize": cmd_linearize}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uqr-web-lab", description="Numerical certificates for polynomial-type dynamics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="key=value run configuration")
        s.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        s.add_argument("--seed", type=int, help="random seed (overrides the config)")
        s.add_argument("--samples", type=int, help="sample count (overrides the config)")
    return p


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        items = parse_config_text(args.config.read_text(encoding="utf-8")) if args.config else {}
        if args.seed is not None:
            items["seed"] = str(args.seed)
        if args.samples is not None:
            items["samples"] = str(args.samples)
        cfg = resolve_config(args.command, items)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except (ConfigError, PreconditionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GeometryError as exc:
        print(f"fail: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except UqrError as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "parse_config_text", "resolve_config", "SCHEMAS", "build_parser"]
