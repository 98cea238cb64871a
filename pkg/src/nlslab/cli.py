"""Command-line front end: ``nlslab analyze|normalize|ode-sim|pde-sim|sweep --config FILE``."""
from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, algebra
from .algebra import NlslabError, SystemRep, coefficients_to_system, system_to_coefficients, transform_system
from .classify import bound_constant, classify, conserved_quantities, format_spec
from .families import FAMILIES
from .normalize import AssumptionNotSatisfied, normalize
from .ode import StepSizeUnderflow, global_bound_ratio, integrate, relative_drift
from .pde import GaussianProfile, Grid, GridUnderresolved, boundedness_diagnostics, run_asymptotics
from .templates import FORM_PARAMS, template

SCHEMA_ID = "nlslab-report-v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_ASSUMPTION = 4
EXIT_UNDERFLOW = 5
EXIT_UNDERRESOLVED = 6

ODE_DEFAULTS = {"p0": [[1.0, 0.0], [0.0, 0.0]], "t_end": 100.0, "tol": 1e-10, "n_samples": 1024}
PDE_DEFAULTS = {
    "eps": 0.1, "N": 4096, "L": 40 * math.pi, "t_end": 1000.0, "dt": 0.01, "frame": "lens",
    "t_match": 1.0, "n_diag": 41, "require_assumption": True,
    "bands": {"Linf": [-0.9, -0.55], "L2": [-0.65, -0.35]},
}


class ConfigError(Exception):
    pass


# config and system

def load_schema(name: str) -> dict:
    return json.loads(resources.files("nlslab").joinpath("schemas", name).read_text(encoding="utf-8"))


def validate_config(cfg) -> None:
    try:
        jsonschema.validate(cfg, load_schema("config-v1.json"))
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {e.message}") from None


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from None
    validate_config(cfg)
    return cfg


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def build_system(spec: dict) -> SystemRep:
    try:
        if "coefficients" in spec:
            return coefficients_to_system(spec["coefficients"])
        if "matrix" in spec:
            return SystemRep(np.reshape(spec["matrix"], (3, 3)), spec.get("vector", [0.0, 0.0, 0.0]))
        if "template" in spec:
            t = spec["template"]
            missing = [k for k in FORM_PARAMS[t["tag"]] if k not in t["params"]]
            if missing:
                raise ConfigError(f"template {t['tag']} missing params {missing}")
            s = SystemRep(template(t["tag"], t["params"]), spec.get("vector", [0.0, 0.0, 0.0]))
            return transform_system(s, t["disguise"]) if "disguise" in t else s
        fam = spec["family"]
        if fam["name"] == "nls_a":
            if "zeta" not in fam:
                raise ConfigError("family nls_a needs zeta")
            return FAMILIES["nls_a"](fam["zeta"])
        return FAMILIES["nls_b"]()
    except (ValueError, algebra.SingularTransform) as e:
        raise ConfigError(f"invalid system: {e}") from None


# serialization

def clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to null, complex to [re, im]."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def write_json(path: Path, kind: str, body: dict) -> dict:
    report = {"schema": SCHEMA_ID, "kind": kind, "version": __version__, **clean(body)}
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return report


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if (isinstance(v, float) and not math.isfinite(v)) else repr(float(v)) for v in r])


def write_svg(path: Path, t, series: dict, title: str) -> None:
    """Log-log polyline plot; decades as ticks."""
    W, H, m = 480, 320, 50
    t = np.asarray(t, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    pos = np.concatenate([v[v > 0] for v in ys.values()] + [np.array([1.0])])
    lx0, lx1 = math.floor(math.log10(t.min())), math.ceil(math.log10(t.max()))
    ly0, ly1 = math.floor(math.log10(pos.min())), math.ceil(math.log10(pos.max()))
    lx1, ly1 = max(lx1, lx0 + 1), max(ly1, ly0 + 1)

    def px(v):
        return m + (math.log10(v) - lx0) / (lx1 - lx0) * (W - 2 * m)

    def py(v):
        return H - m - (math.log10(v) - ly0) / (ly1 - ly0) * (H - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
           f'<line x1="{m}" y1="{H - m}" x2="{W - m}" y2="{H - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{H - m}" stroke="black"/>']
    for e in range(lx0, lx1 + 1):
        x = px(10.0 ** e)
        out.append(f'<line x1="{x:.1f}" y1="{H - m}" x2="{x:.1f}" y2="{H - m + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{H - m + 18}" text-anchor="middle" font-size="10">1e{e}</text>')
    for e in range(ly0, ly1 + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{m - 5}" y1="{y:.1f}" x2="{m}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{m - 8}" y="{y + 3:.1f}" text-anchor="end" font-size="10">1e{e}</text>')
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    for i, (name, v) in enumerate(ys.items()):
        ok = v > 0
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t[ok], v[ok]))
        out.append(f'<polyline fill="none" stroke="{colors[i % 4]}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{W - m - 5}" y="{m + 14 * (i + 1)}" text-anchor="end" font-size="11" '
                   f'fill="{colors[i % 4]}">{name}</text>')
    out.append(f'<text x="{W / 2:.1f}" y="{H - 8}" text-anchor="middle" font-size="11">t</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


# commands

def _system_block(s: SystemRep) -> dict:
    return {"A": s.A, "V": s.V, "coefficients": system_to_coefficients(s).as_array()}


def _spec_dict(q) -> dict:
    return {"a1": q.a1, "a2": q.a2, "lambda1": q.lambda1, "lambda2": q.lambda2,
            "exponents": list(q.exponent_pair), "coercive": q.coercive, "formula": format_spec(q)}


def _bound_dict(s, cl):
    try:
        b = bound_constant(s, cl)
    except NlslabError:
        return None
    return {"C": b.C, "kind": b.kind, "lo": b.lo, "hi": b.hi}


def cmd_analyze(cfg: dict, out: Path, seed: int) -> int:
    s = build_system(cfg["system"])
    opts = cfg.get("analyze", {})
    cl = classify(s, opts.get("tol"), opts.get("cluster_tol"))
    es = cl.eigen
    eig = [{"value": e.value, "multiplicity": e.multiplicity, "real": e.is_real} for e in es.eigenvalues]
    spaces = [{"eigenvalue": lam, "basis": es.eigenspaces[lam], "generalized_basis": es.generalized_eigenspaces[lam]}
              for lam in es.real_values()]
    try:
        specs = [_spec_dict(q) for q in conserved_quantities(s, opts.get("tol"))]
    except NlslabError:
        specs = []
    body = {
        "system": _system_block(s),
        "eigenvalues": eig, "eigenspaces": spaces, "rank": cl.rank, "case_label": cl.case_label,
        "wngc": cl.wngc, "assumption1": cl.assumption1, "assumption2": cl.assumption2,
        "a1_eigenvalues": cl.a1_eigenvalues, "a2_eigenvalues": cl.a2_eigenvalues,
        "witnesses": {k: v for k, v in sorted(cl.witnesses.items())},
        "borderline": cl.borderline, "notes": list(cl.notes),
        "conserved_quantities": specs,
        "bound_constant": _bound_dict(s, cl) if (cl.wngc or cl.assumption1 or cl.assumption2) else None,
    }
    write_json(out / "analyze.json", "analyze", body)
    return EXIT_DEGENERATE if cl.borderline else EXIT_OK


def cmd_normalize(cfg: dict, out: Path, seed: int) -> int:
    s = build_system(cfg["system"])
    try:
        r = normalize(s, cfg.get("analyze", {}).get("tol"))
    except AssumptionNotSatisfied as e:
        write_json(out / "normalize.json", "normalize", {"status": "assumption_not_satisfied", "error": str(e),
                                                          "system": _system_block(s)})
        return EXIT_ASSUMPTION
    except NlslabError as e:
        write_json(out / "normalize.json", "normalize", {"status": "degenerate", "error": str(e),
                                                          "system": _system_block(s)})
        return EXIT_DEGENERATE
    body = {"status": "ok", "system": _system_block(s), **r.as_dict(), "violations": list(r.violations)}
    write_json(out / "normalize.json", "normalize", body)
    return EXIT_OK


def _initial_pair(p0, seed: int):
    if p0 == "random":
        z = np.random.default_rng(seed).normal(size=4)
        z /= np.linalg.norm(z)
        return complex(z[0], z[1]), complex(z[2], z[3])
    return _complex(p0[0]), _complex(p0[1])


def cmd_ode_sim(cfg: dict, out: Path, seed: int) -> int:
    s = build_system(cfg["system"])
    o = {**ODE_DEFAULTS, **cfg.get("ode", {})}
    p0 = _initial_pair(o["p0"], seed)
    status, code, t_fail = "ok", EXIT_OK, None
    try:
        traj = integrate(s, p0, (0.0, o["t_end"]), o["tol"], o["n_samples"])
    except StepSizeUnderflow as e:
        traj, status, code, t_fail = e.trajectory, "step_size_underflow", EXIT_UNDERFLOW, e.t_fail
    cq = sorted(k for k in traj.diagnostics if k.startswith("cq"))
    rows = []
    for i, t in enumerate(traj.times):
        p1, p2 = traj.states[i]
        rows.append([t, p1.real, p1.imag, p2.real, p2.imag, traj.diagnostics["norm2"][i]]
                    + [traj.diagnostics[k][i] for k in cq])
    write_csv(out / "ode.csv", ["t", "re_phi1", "im_phi1", "re_phi2", "im_phi2", "norm2"] + cq, rows)
    try:
        ratio = global_bound_ratio(traj)
    except NlslabError:
        ratio = None
    cl = classify(s)
    body = {
        "status": status, "t_fail": t_fail, "system": _system_block(s),
        "p0": list(p0), "t_end": o["t_end"], "tolerance": o["tol"], "samples": len(traj.times),
        "integrator": traj.integrator_stats,
        "labels": traj.labels,
        "drift": {k: relative_drift(traj.diagnostics[k]) for k in cq},
        "norm2_drift": relative_drift(traj.diagnostics["norm2"]),
        "global_bound_ratio": ratio,
        "bound_constant": _bound_dict(s, cl) if (cl.wngc or cl.assumption1 or cl.assumption2) else None,
    }
    write_json(out / "ode.json", "ode-sim", body)
    return code


def _in_band(x, band) -> bool:
    return x is not None and math.isfinite(x) and band[0] <= x <= band[1]


def cmd_pde_sim(cfg: dict, out: Path, seed: int) -> int:
    s = build_system(cfg["system"])
    p = copy.deepcopy(PDE_DEFAULTS)
    user = cfg.get("pde", {})
    p.update({k: v for k, v in user.items() if k != "bands"})
    p["bands"].update(user.get("bands", {}))
    if p["N"] & (p["N"] - 1):
        raise ConfigError("pde.N must be a power of two")
    profiles = tuple(GaussianProfile(_complex(d.get("amplitude", 1.0)), d.get("center", 0.0), d.get("width", 1.0),
                                     d.get("wavenumber", 0.0)) for d in p["profiles"]) if "profiles" in p else None
    kw = {} if profiles is None else {"profiles": profiles}
    try:
        run = run_asymptotics(s, p["eps"], Grid(p["N"], p["L"]), p["t_end"], p["dt"], p.get("fit_window"),
                              p["frame"], n_diag=p["n_diag"], require_assumption=p["require_assumption"],
                              t_match=p["t_match"], **kw)
    except GridUnderresolved as e:
        write_json(out / "pde.json", "pde-sim", {"status": "grid_underresolved", "error": str(e)})
        return EXIT_UNDERRESOLVED
    except AssumptionNotSatisfied as e:
        write_json(out / "pde.json", "pde-sim", {"status": "assumption_not_satisfied", "error": str(e)})
        return EXIT_ASSUMPTION
    diag = boundedness_diagnostics(run)
    checks = {"Linf": _in_band(run.fitted_slope_Linf, p["bands"]["Linf"]),
              "L2": _in_band(run.fitted_slope_L2, p["bands"]["L2"])}
    if not np.any(system_to_coefficients(s).as_array()):
        verdict = "floor"
    else:
        verdict = "pass" if all(checks.values()) else "fail"
    write_csv(out / "pde.csv", ["t", "error_L2", "error_Linf", "Y_T"],
              zip(run.times, run.error_L2, run.error_Linf, run.series["Y_T"]))
    write_svg(out / "pde.svg", run.times, {"L2 error": run.error_L2, "Linf error": run.error_Linf},
              "profile error")
    body = {
        "status": "ok", "verdict": verdict, "system": _system_block(s), "eps": run.epsilon, "frame": run.frame,
        "grid": {"N": p["N"], "L": p["L"]}, "dt": p["dt"], "t_end": run.t_end,
        "t_end_requested": run.t_end_requested, "t_match": run.series["t_match"],
        "fit_window": list(run.fit_window), "bands": p["bands"],
        "slopes": {"Linf": run.fitted_slope_Linf, "L2": run.fitted_slope_L2}, "band_checks": checks,
        "fit_residuals": {"Linf": run.residual_Linf, "L2": run.residual_L2},
        "diagnostics": diag,
    }
    write_json(out / "pde.json", "pde-sim", body)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "normalize": cmd_normalize, "ode-sim": cmd_ode_sim, "pde-sim": cmd_pde_sim}


def run_command(name: str, cfg: dict, out: Path, seed: int) -> int:
    """Run one command; map library failures onto exit codes."""
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[name](cfg, out, seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionNotSatisfied as e:
        print(f"assumption not satisfied: {e}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except StepSizeUnderflow as e:
        print(str(e), file=sys.stderr)
        return EXIT_UNDERFLOW
    except GridUnderresolved as e:
        print(f"grid underresolved: {e}", file=sys.stderr)
        return EXIT_UNDERRESOLVED
    except NlslabError as e:
        print(f"numerical degeneracy: {e}", file=sys.stderr)
        return EXIT_DEGENERATE


# sweep

def _set_path(cfg: dict, path: str, value) -> None:
    keys = path.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def sweep_points(cfg: dict) -> list[tuple[dict, dict]]:
    axes = cfg["sweep"]["axes"]
    names = sorted(axes)
    base = {k: v for k, v in cfg.items() if k != "sweep"}
    pts = []
    if not names or any(len(axes[n]) == 0 for n in names):
        return pts
    for combo in itertools.product(*(axes[n] for n in names)):
        c = copy.deepcopy(base)
        for n, v in zip(names, combo):
            _set_path(c, n, v)
        pts.append((dict(zip(names, combo)), c))
    return pts


def _run_point(args) -> dict:
    i, values, pcfg, commands, out, seed = args
    d = out / f"point-{i:04d}"
    d.mkdir(parents=True, exist_ok=True)
    entry = {"index": i, "values": values, "directory": d.name, "exit_codes": {}, "error": None}
    try:
        validate_config(pcfg)
        for c in commands:
            entry["exit_codes"][c] = run_command(c, pcfg, d, seed)
    except ConfigError as e:
        entry["error"] = f"config error: {e}"
    except Exception as e:  # a failing point must not take the sweep down
        entry["error"] = f"{type(e).__name__}: {e}"
    entry["status"] = "ok" if entry["error"] is None and not any(entry["exit_codes"].values()) else "failed"
    return entry


def thread_cap() -> int:
    try:
        n = int(os.environ.get("NLSLAB_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def cmd_sweep(cfg: dict, out: Path, seed: int) -> int:
    if "sweep" not in cfg:
        raise ConfigError("sweep section required")
    commands = cfg["sweep"].get("commands", ["analyze", "ode-sim"])
    pts = sweep_points(cfg)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, v, c, commands, out, seed) for i, (v, c) in enumerate(pts)]
    workers = min(thread_cap(), max(1, len(jobs)))
    if workers <= 1:
        entries = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            entries = list(ex.map(_run_point, jobs))
    write_json(out / "index.json", "sweep", {"commands": commands, "points": entries,
                                             "axes": cfg["sweep"]["axes"]})
    return EXIT_OK


# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlslab",
        description="Analyze and simulate two-component cubic NLS systems.",
        epilog=("Exit codes: 0 ok, 2 config error, 3 numerical degeneracy or borderline classification, "
                "4 assumption not satisfied, 5 step size underflow, 6 grid underresolved. "
                "Defaults: ode p0=(1,0), t_end=100, tol=1e-10, n_samples=1024; pde eps=0.1, N=4096, "
                "L=40*pi, t_end=1000, dt=0.01 (step in log t for the lens frame), frame=lens, "
                "fit window [10, t_end], bands Linf [-0.9,-0.55] and L2 [-0.65,-0.35]. "
                "NLSLAB_THREADS caps sweep parallelism."),
    )
    ap.add_argument("--version", action="version", version=f"nlslab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("analyze", "normalize", "ode-sim", "pde-sim", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", help="output directory (default: config output.directory or .)")
        sp.add_argument("--tol", type=float, help="cone and eigen tolerance (default 1e-9)")
        sp.add_argument("--seed", type=int, default=0, help="seed for random initial data")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.tol is not None:
        if not args.tol > 0:
            print("config error: --tol must be positive", file=sys.stderr)
            return EXIT_CONFIG
        algebra.set_default_tol(args.tol)
    if not 0 <= args.seed < 2 ** 64:
        print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.get("output", {}).get("directory", "."))
    if args.command == "sweep":
        try:
            return cmd_sweep(cfg, out, args.seed)
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
    return run_command(args.command, cfg, out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
