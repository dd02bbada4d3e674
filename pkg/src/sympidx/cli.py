"""Command-line experiments: ``sympidx <command> [options]``.

Every run writes manifest.json in the output directory (config echo,
versions, wall time, artifact list, status). Exit status is 0 on success, 2
when the configuration is rejected before any computation, 3 when a
numerical routine fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .errors import SympIdxError
from .floer import GeometryParams, check_window, derive_levels, geometry_violations, homotopy_trace
from .index import conley_zehnder, sturm_compare
from .magnetic import MagneticSystem
from .orbits import growth_fit, orbit_delta, period_bound_sweep, shoot_periodic
from .hamflow import flow
from .paths import Convention, QuadHamiltonian, SympPath, delta_tilde, linear_flow

COMMANDS = ("index", "sturm", "magnetic", "growth", "floer-levels", "sweep")
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "."


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _matrix(value, what: str) -> np.ndarray:
    M = np.asarray(json.loads(value) if isinstance(value, str) else value, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise ValueError(f"{what} must be an even square matrix")
    return M


def _load_json(path) -> object:
    with open(path) as fh:
        return json.load(fh)


def _system_config(params: dict) -> dict:
    if "system" in params:
        return params["system"]
    if params.get("config"):
        return _load_json(params["config"])
    return {"metric": {"type": "flat"}, "field": {"type": "constant", "value": params.get("B", 1.0)}}


def validate(config: ExperimentConfig) -> list[str]:
    """Every violated precondition; an empty list means the run can start."""
    out = []
    if config.command not in COMMANDS:
        return [f"unknown command {config.command!r}"]
    if not (isinstance(config.seed, int) and 0 <= config.seed < 2 ** 64):
        out.append("seed must be a 64-bit unsigned integer")
    p = config.params
    try:
        if config.command == "index":
            if p.get("path"):
                SympPath.from_json(Path(p["path"]).read_text())
            else:
                S = _matrix(p.get("S"), "S")
                if np.max(np.abs(S - S.T)) > 1e-10:
                    out.append("S must be symmetric")
                if not float(p.get("T", 0)) > 0:
                    out.append("T must be positive")
        elif config.command == "sturm":
            S0, S1 = _matrix(p.get("S0"), "S0"), _matrix(p.get("S1"), "S1")
            if S0.shape != S1.shape:
                out.append("S0 and S1 must have the same dimension")
            elif np.linalg.eigvalsh(0.5 * (S1 + S1.T) - 0.5 * (S0 + S0.T))[0] < -1e-10:
                out.append("H1 - H0 must be positive semidefinite")
            if not float(p.get("T", 0)) > 0:
                out.append("T must be positive")
        elif config.command in ("magnetic", "growth", "sweep"):
            out += MagneticSystem.validate_config(_system_config(p))
            rs = p.get("r", [])
            rs = rs if isinstance(rs, list) else [rs]
            if not rs or any(not float(r) > 0 for r in rs):
                out.append("r must be positive")
            elif config.command == "sweep" and any(a < b for a, b in zip(rs, rs[1:])):
                out.append("r values must be in descending order")
            k = int(p.get("k", 8 if config.command == "growth" else 0))
            if config.command == "growth" and k < 3:
                out.append("growth needs k >= 3 iterates")
            if not 0 <= k <= 64:
                out.append("k must be in 0..64")
        elif config.command == "floer-levels":
            r2 = float(p.get("r2", 0))
            out += geometry_violations(int(p.get("m", 0)), int(p.get("q", 0)),
                                       math.sqrt(r2) if r2 > 0 else 0.0, float(p.get("eps0", 0)),
                                       float(p.get("lam_min", 1.0)), float(p.get("lam_max", 1.0)))
            if not float(p.get("lambda0", math.inf)) > 0:
                out.append("lambda0 must be positive")
            if int(p.get("samples", 100)) < 10:
                out.append("samples must be >= 10")
    except (OSError, ValueError, TypeError, KeyError, SympIdxError) as exc:
        out.append(f"malformed parameters: {exc}")
    return out


def _gnuplot(data: str, xcol: int, ycol: int, xlabel: str, ylabel: str) -> str:
    return (f"set datafile separator ','\nset key autotitle columnhead\n"
            f"set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"
            f"plot '{data}' using {xcol}:{ycol} with linespoints\n")


def _cmd_index(p, rng):
    if p.get("path"):
        path = SympPath.from_json(Path(p["path"]).read_text())
    else:
        H = QuadHamiltonian.constant(_matrix(p["S"], "S"), Convention(p.get("convention", "jgrad")))
        path = linear_flow(H, (0.0, float(p["T"])), int(p.get("steps", 200)))
    rep = delta_tilde(path)
    mu = conley_zehnder(path)
    trace = rep.winding_trace
    rows = [[t, th, (th - trace[0]) / math.pi] for t, th in zip(path.times, trace)]
    summary = {"delta_tilde": rep.delta, "conley_zehnder": mu}
    print(f"delta_tilde = {fmt(rep.delta)}\nconley_zehnder = {mu}")
    return summary, {"winding.csv": csv_text(["t", "theta", "delta"], rows)}


def _cmd_sturm(p, rng):
    conv = Convention(p.get("convention", "jgrad"))
    H0 = QuadHamiltonian.constant(_matrix(p["S0"], "S0"), conv)
    H1 = QuadHamiltonian.constant(_matrix(p["S1"], "S1"), conv)
    rep = sturm_compare(H0, H1, float(p["T"]), int(p.get("steps", 400)))
    summary = {"delta_h1": rep.delta_h1, "delta_h0": rep.delta_h0, "margin": rep.margin,
               "bound": rep.bound, "holds": rep.holds}
    print(f"margin = {fmt(rep.margin)} (bound -{fmt(rep.bound)})")
    return summary, {"sturm.csv": csv_text(list(summary), [list(summary.values())])}


def _r_values(p) -> list[float]:
    rs = p.get("r", [])
    return [float(r) for r in (rs if isinstance(rs, list) else [rs])]


def _cmd_magnetic(p, rng):
    msys = MagneticSystem.from_config(_system_config(p))
    ham = msys.hamiltonian()
    conv = Convention.MECHANICS
    r = _r_values(p)[0]
    z0, T0 = msys.seed_orbit(r, conv, rng)
    orb = shoot_periodic(ham, z0, T0, convention=conv, steps=int(p.get("steps", 1000)))
    tr = flow(ham, orb.z0, orb.period, int(p.get("steps", 1000)), conv, 6)
    summary = {"r": r, "T": orb.period, "energy": orb.energy, "residual": orb.residual,
               "contractible": orb.contractible, "iterations": orb.iterations,
               "z0": [float(v) for v in orb.z0], "energy_drift": tr.energy_drift}
    print(f"T = {fmt(orb.period)} residual = {orb.residual:.3e} contractible = {orb.contractible}")
    return summary, {"trajectory.csv": tr.to_csv()}


def _cmd_growth(p, rng):
    msys = MagneticSystem.from_config(_system_config(p))
    ham = msys.hamiltonian()
    conv = Convention.MECHANICS
    r = _r_values(p)[0]
    k = int(p.get("k", 8))
    z0, T0 = msys.seed_orbit(r, conv, rng)
    orb = shoot_periodic(ham, z0, T0, convention=conv, steps=int(p.get("steps", 1000)))
    deltas = orbit_delta(ham, orb, k)
    fit = growth_fit([(j * orb.period, d) for j, d in enumerate(deltas, start=1)])
    rows = [[j, j * orb.period, d, abs(d), fit.a * j * orb.period - fit.c]
            for j, d in enumerate(deltas, start=1)]
    summary = {"T": orb.period, "a": fit.a, "c": fit.c, "c_fit": fit.c_fit,
               "r_squared": fit.r_squared, "bound_holds": fit.bound_holds()}
    print(f"slope a = {fmt(fit.a)}  c = {fmt(fit.c)}  r^2 = {fmt(fit.r_squared)}")
    return summary, {"growth.csv": csv_text(["j", "T", "delta", "abs_delta", "lower_bound"], rows),
                     "growth.gp": _gnuplot("growth.csv", 2, 4, "jT", "|delta|")}


def _cmd_floer(p, rng):
    gp = GeometryParams.from_r2(int(p["m"]), int(p["q"]), float(p["r2"]), float(p["eps0"]),
                                float(p.get("lam_min", 1.0)), float(p.get("lam_max", 1.0)))
    sch = derive_levels(gp)
    lam0 = float(p.get("lambda0", math.inf))
    win = check_window(sch, lam0, p.get("eta"))
    hom = homotopy_trace(gp, int(p.get("samples", 100)))
    doc = sch.to_dict()
    doc.pop("levels")
    doc["verdicts"] = win.verdicts
    doc["eta"] = win.eta
    doc["lambda0"] = "inf" if math.isinf(lam0) else lam0
    doc["homotopy_margin"] = float(hom.margin)
    doc["homotopy_crossed"] = list(hom.crossed)
    print(json.dumps({k: doc[k] for k in ("C", "a", "b", "k", "n0", "verdicts")}, indent=1))
    return doc, {"scheme.json": json.dumps(doc, indent=1, sort_keys=True) + "\n",
                 "levels.csv": sch.levels_csv()}


def _cmd_sweep(p, rng):
    msys = MagneticSystem.from_config(_system_config(p))
    k = int(p.get("k", 0))
    seed = int(rng.integers(2 ** 63))
    rows = period_bound_sweep(msys, _r_values(p), seed, k, steps=int(p.get("steps", 1000)))
    header = ["r", "T", "residual", "contractible"] + [f"delta_{j}" for j in range(1, k + 1)] + \
             ["iterations", "failed", "error"]
    text = csv_text(header, [[row[h] for h in header] for row in rows])
    ok = [row for row in rows if not row["failed"]]
    summary = {"rows": len(rows), "failed": len(rows) - len(ok)}
    if ok:
        Ts = [row["T"] for row in ok]
        summary["T_ratio"] = max(Ts) / min(Ts)
    print(text, end="")
    return summary, {"sweep.csv": text, "sweep.gp": _gnuplot("sweep.csv", 1, 2, "r", "T")}


_RUNNERS = {"index": _cmd_index, "sturm": _cmd_sturm, "magnetic": _cmd_magnetic,
            "growth": _cmd_growth, "floer-levels": _cmd_floer, "sweep": _cmd_sweep}


def _versions() -> dict:
    return {"sympidx": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(config: ExperimentConfig) -> int:
    """Validate, execute and record one experiment; returns the exit status."""
    out = Path(config.output_dir)
    t0 = time.perf_counter()
    manifest = {"command": config.command, "params": config.params, "seed": config.seed,
                "versions": _versions(), "artifacts": [], "status": "ok", "error": None}
    bad = validate(config)
    status = EXIT_OK
    if bad:
        manifest.update(status="invalid", violations=bad)
        for msg in bad:
            print(f"invalid: {msg}", file=sys.stderr)
        status = EXIT_INVALID
    else:
        rng = np.random.default_rng(config.seed)
        try:
            summary, files = _RUNNERS[config.command](config.params, rng)
            for name, text in files.items():
                write_atomic(out / name, text)
                manifest["artifacts"].append(name)
            manifest["result"] = summary
        except SympIdxError as exc:
            manifest.update(status="numerical_failure", error=type(exc).__name__, message=str(exc))
            print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
            status = EXIT_NUMERIC
    manifest["wall_time_s"] = time.perf_counter() - t0
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=1, default=_json_default) + "\n")
    return status


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output-dir", default=".")
    parser = argparse.ArgumentParser(prog="sympidx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("index", parents=[common], help="winding and Conley-Zehnder index of a path")
    s.add_argument("--path", help="JSON list of {t, frame}")
    s.add_argument("--S", help="constant symmetric matrix (JSON) generating the path")
    s.add_argument("--T", type=float, help="final time for --S")
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--convention", choices=[c.value for c in Convention], default="jgrad")

    s = sub.add_parser("sturm", parents=[common], help="Sturm comparison of two quadratic Hamiltonians")
    s.add_argument("--S0", required=True)
    s.add_argument("--S1", required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--steps", type=int, default=400)
    s.add_argument("--convention", choices=[c.value for c in Convention], default="jgrad")

    for name, hlp in (("magnetic", "find one magnetic periodic orbit"),
                      ("growth", "winding growth along iterates of a magnetic orbit"),
                      ("sweep", "period sweep over energy levels")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--config", help="MagneticSystem JSON (flat, B=1 when omitted)")
        s.add_argument("--B", type=float, help="constant field strength on the flat torus")
        s.add_argument("--r", type=_floats, required=True, help="comma-separated energy radii")
        s.add_argument("--k", type=int, default=8 if name == "growth" else 0)
        s.add_argument("--steps", type=int, default=1000)

    s = sub.add_parser("floer-levels", parents=[common], help="action/index bookkeeping of the model")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--r2", type=float, required=True)
    s.add_argument("--eps0", type=float, required=True)
    s.add_argument("--lam-min", type=float, default=1.0)
    s.add_argument("--lam-max", type=float, default=1.0)
    s.add_argument("--lambda0", type=float, default=math.inf)
    s.add_argument("--eta", type=float)
    s.add_argument("--samples", type=int, default=100)
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    params = {k: v for k, v in vars(ns).items()
              if k not in ("command", "seed", "output_dir") and v is not None}
    if "lambda0" in params and math.isinf(params["lambda0"]):
        del params["lambda0"]
    return ExperimentConfig(ns.command, params, ns.seed, ns.output_dir)


def main(argv: Optional[list[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
