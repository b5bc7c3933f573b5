"""
Command-line front end.

    monopole <simulate|verify|cone|compare> --config <path> [--out <dir>]
             [--dump-xi] [--jobs N]

Exit codes: 0 all checks pass, 1 configuration error, 2 guard trip,
3 threshold failure. The report is written whenever the config is valid.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import polyvec as pv
from .config import RunConfig, parse_documents
from .dynamics import State, integrate, make_state, string_clearance
from .errors import ConeUndefined, ConfigError, StepUnderflow, StringProximity, ZeroRadius
from .gauge import check_identities
from .liealg import random_orbit_element, skew_to_upper

COMMANDS = ("simulate", "verify", "cone", "compare")
EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_THRESHOLD = 0, 1, 2, 3


def _fmt(x):
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


class Checks:
    def __init__(self, thresholds):
        self.thresholds = thresholds
        self.items = []

    def add(self, name, value, key=None):
        thr = self.thresholds[key or name]
        self.items.append({"name": name, "value": float(value), "threshold": thr,
                           "pass": bool(value <= thr)})

    @property
    def passed(self):
        return all(c["pass"] for c in self.items)


def _initial_state(cfg: RunConfig) -> State:
    return make_state(cfg.r0, cfg.v0, cfg.xi)


def _cone_or_reason(state, cfg):
    try:
        return geo.cone_of(state, cfg.lam, cfg.k), None
    except ConeUndefined as exc:
        reason = "zero charge" if cfg.lam == 0 else str(exc)
        return None, reason


def _cone_block(cone, reason):
    return cone.as_dict() if cone is not None else {"undefined": reason}


def _write_csv(path, traj, cone):
    n = traj.samples[0].n
    L0 = geo.angular_momentum(traj.samples[0])
    nL0 = max(pv.norm(L0), 1e-300)
    header = ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"v{i}" for i in range(1, n + 1)]
    header += ["energy", "drift_L", "cone_residual"]
    lines = [",".join(header)]
    for s, e in zip(traj.samples, traj.monitors["energy"]):
        dL = float(np.max(np.abs(geo.angular_momentum(s) - L0))) / nL0
        if cone is None:
            cres = "nan"
        else:
            cres = _fmt(abs(np.dot(s.r, cone.axis) / np.linalg.norm(s.r) - np.cos(cone.aperture)))
        row = [_fmt(s.t)] + [_fmt(c) for c in s.r] + [_fmt(c) for c in s.v]
        row += [_fmt(e), _fmt(dL), cres]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_xi(path, traj):
    m = traj.samples[0].xi.shape[0]
    cols = [f"xi_{a + 1}_{b + 1}" for a in range(m) for b in range(a + 1, m)]
    lines = [",".join(["t"] + cols)]
    for s in traj.samples:
        lines.append(",".join([_fmt(s.t)] + [_fmt(c) for c in skew_to_upper(s.xi)]))
    Path(path).write_text("\n".join(lines) + "\n")


def _integrator_block(traj):
    return {"steps": int(traj.meta["steps"]), "rejected": int(traj.meta["rejected"]),
            "min_dt": float(traj.meta["min_dt"])}


def _simulate(cfg, report, checks, paths, dump_xi):
    init = _initial_state(cfg)
    traj = integrate(init, cfg.integrator, cfg.k, cfg.lam)
    cone, reason = _cone_or_reason(init, cfg)
    rep = geo.conservation_report(traj, cfg.k, cfg.lam)
    report["cone"] = _cone_block(cone, reason)
    report["drifts"] = rep.as_dict()
    report["integrator"] = _integrator_block(traj)
    checks.add("drift_L", rep.maxdrift_L)
    if rep.maxdrift_Lbar is not None:
        checks.add("drift_Lbar", rep.maxdrift_Lbar)
    checks.add("drift_absV", rep.maxdrift_absV)
    checks.add("drift_energy", rep.maxdrift_energy)
    checks.add("drift_orbit", rep.maxdrift_orbit)
    checks.add("identity_Lmu", rep.identity_Lmu)
    checks.add("identity_Vnorm", rep.identity_Vnorm)
    if rep.identity_Lbar is not None:
        checks.add("identity_Lbar", rep.identity_Lbar)
    if cone is not None:
        checks.add("subspace_residual", rep.subspace_residual)
        checks.add("cone_residual", rep.cone_residual)
        checks.add("collinearity", rep.collinearity_residual)
    _write_csv(paths["csv"], traj, cone)
    if dump_xi:
        _write_xi(paths["xi"], traj)
    return traj


def _verify(cfg, report, checks):
    rng = np.random.default_rng(cfg.verify_seed)
    n = 2 * cfg.k + 1
    worst = {}
    for _ in range(cfg.verify_points):
        while True:
            d = rng.standard_normal(n)
            d /= np.linalg.norm(d)
            x = d * rng.uniform(0.5, 2.0)
            if string_clearance(x) >= cfg.min_clearance:
                break
        v = rng.standard_normal(n)
        xi = random_orbit_element(cfg.lam, cfg.k, int(rng.integers(2**31)))
        res = check_identities(x, xi, v, fd_step=cfg.fd_step).as_dict()
        for key, val in res.items():
            worst[key] = max(worst.get(key, 0.0), val)
    report["identities"] = {"points": cfg.verify_points, "seed": cfg.verify_seed,
                            "max_residuals": worst}
    for key, val in worst.items():
        checks.add(key, val)


def _cone(cfg, report, checks):
    init = _initial_state(cfg)
    cone, reason = _cone_or_reason(init, cfg)
    report["cone"] = _cone_block(cone, reason)
    if cone is not None:
        post = abs(np.dot(init.r, cone.axis) / np.linalg.norm(init.r) - np.cos(cone.aperture))
        checks.add("cone_residual", post)


def _compare(cfg, report, checks, paths, dump_xi):
    init = _initial_state(cfg)
    grid = init.t + np.linspace(0.0, cfg.integrator.t_end, cfg.compare_times)
    traj = integrate(init, cfg.integrator, cfg.k, cfg.lam, sample_times=grid)
    cone, reason = _cone_or_reason(init, cfg)
    report["cone"] = _cone_block(cone, reason)
    report["integrator"] = _integrator_block(traj)
    times = traj.times
    X = traj.positions
    if cone is not None:
        Y = geo.analytic_geodesic(init, cone, times)
        oracle = "cone_geodesic"
    else:
        # zero charge or radial data: free motion
        Y = init.r[None, :] + (times - init.t)[:, None] * init.v[None, :]
        oracle = "free_motion"
    scale = float(np.max(np.linalg.norm(traj.positions, axis=1)))
    err = float(np.max(np.linalg.norm(X - Y, axis=1))) / scale
    report["oracle"] = {"kind": oracle, "times": int(len(times)), "max_error": err}
    checks.add("oracle_error", err)
    _write_csv(paths["csv"], traj, cone)
    if dump_xi:
        _write_xi(paths["xi"], traj)


def _paths(cfg, out_dir):
    out = Path(out_dir)
    return {
        "csv": out / (cfg.csv_path or f"{cfg.name}.csv"),
        "report": out / (cfg.report_path or f"{cfg.name}_report.json"),
        "xi": out / f"{cfg.name}_xi.csv",
    }


def run(command, cfg: RunConfig, out_dir=".", dump_xi=False):
    """Run one pipeline, write its files, return (report, exit code)."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    paths = _paths(cfg, out_dir)
    for p in paths.values():
        p.parent.mkdir(parents=True, exist_ok=True)
    report = {"name": cfg.name, "command": command, "config": cfg.echo()}
    checks = Checks(cfg.thresholds)
    code = EXIT_OK
    try:
        if command == "simulate":
            _simulate(cfg, report, checks, paths, dump_xi)
        elif command == "verify":
            _verify(cfg, report, checks)
        elif command == "cone":
            _cone(cfg, report, checks)
        else:
            _compare(cfg, report, checks, paths, dump_xi)
    except (StringProximity, ZeroRadius, StepUnderflow) as exc:
        last = exc.state
        report["error"] = {"kind": type(exc).__name__, "message": str(exc),
                           "t": exc.t, "last_good_t": None if last is None else last.t}
        code = EXIT_GUARD
    report["checks"] = checks.items
    if code == EXIT_OK and not checks.passed:
        code = EXIT_THRESHOLD
    report["pass"] = code == EXIT_OK
    report["exit_code"] = code
    text = json.dumps(_jsonable(report), indent=2, allow_nan=False)
    paths["report"].write_text(text + "\n")
    return report, code


def _run_job(args):
    command, cfg, out_dir, dump_xi = args
    report, code = run(command, cfg, out_dir, dump_xi)
    return cfg.name, report["checks"], code


def _summary(name, checks, code, stream):
    for c in checks:
        flag = "PASS" if c["pass"] else "FAIL"
        stream.write(f"{name}: {flag} {c['name']} = {c['value']:.3e} (<= {c['threshold']:.1e})\n")
    stream.write(f"{name}: exit {code}\n")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="monopole",
                                     description="Charged particles in generalized Dirac monopole fields.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--dump-xi", action="store_true", help="also write the ξ(t) samples")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
        cfgs = parse_documents(text)
    except OSError as exc:
        sys.stderr.write(f"config: {exc}\n")
        return EXIT_CONFIG
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    if args.jobs < 1:
        sys.stderr.write("config error: --jobs must be >= 1\n")
        return EXIT_CONFIG

    jobs = [(args.command, c, args.out, args.dump_xi) for c in cfgs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    for name, checks, code in results:
        _summary(name, checks, code, sys.stdout)
    return max(code for _, _, code in results)


if __name__ == "__main__":
    sys.exit(main())
