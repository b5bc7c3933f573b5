"""Run configuration documents (JSON) and the reference scenarios."""

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .dynamics import IntegratorConfig
from .errors import ConfigError
from .liealg import orbit_base, orbit_membership, random_orbit_element

MAX_K = 6

DEFAULT_THRESHOLDS = {
    # conservation along the run
    "drift_L": 1e-7,
    "drift_Lbar": 1e-7,
    "drift_absV": 1e-7,
    "drift_energy": 1e-7,
    "drift_orbit": 1e-7,
    # per-sample norm identities
    "identity_Lmu": 1e-9,
    "identity_Vnorm": 1e-9,
    "identity_Lbar": 1e-9,
    # cone geometry
    "subspace_residual": 1e-7,
    "cone_residual": 1e-7,
    "collinearity": 1e-6,
    "oracle_error": 1e-5,
    # gauge identities (verify)
    "potential_radial": 1e-10,
    "field_radial": 1e-10,
    "covariant_derivative": 1e-6,
    "pairing_gram": 1e-10,
    "pairing_norm": 1e-10,
    "contraction": 1e-10,
    "force_norm": 1e-10,
}

_TOP_KEYS = {"name", "k", "lambda", "r0", "v0", "xi_init", "integrator", "guards",
             "output", "thresholds", "verify", "compare"}
_INTEGRATOR_KEYS = {"method", "dt", "rel_tol", "abs_tol", "t_end", "max_steps",
                    "sample_every", "reproject"}
_GUARD_KEYS = {"string_clearance_min", "r_min"}
_OUTPUT_KEYS = {"csv_path", "report_path", "sample_every"}
_VERIFY_KEYS = {"points", "seed", "fd_step", "min_clearance"}
_COMPARE_KEYS = {"times"}


@dataclass
class RunConfig:
    k: int
    lam: float
    r0: np.ndarray
    v0: np.ndarray
    xi: np.ndarray
    xi_init: Dict[str, Any]
    integrator: IntegratorConfig
    name: str = "run"
    csv_path: Optional[str] = None
    report_path: Optional[str] = None
    thresholds: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    verify_points: int = 100
    verify_seed: int = 7
    fd_step: float = 1e-5
    min_clearance: float = 0.1
    compare_times: int = 200

    def echo(self):
        """JSON-ready echo of the validated configuration."""
        integ = asdict(self.integrator)
        return {
            "name": self.name,
            "k": self.k,
            "lambda": self.lam,
            "r0": [float(c) for c in self.r0],
            "v0": [float(c) for c in self.v0],
            "xi_init": self.xi_init,
            "integrator": integ,
            "thresholds": self.thresholds,
            "verify": {"points": self.verify_points, "seed": self.verify_seed,
                       "fd_step": self.fd_step, "min_clearance": self.min_clearance},
            "compare": {"times": self.compare_times},
        }


def _unknown(section, doc, allowed):
    extra = sorted(set(doc) - allowed)
    if extra:
        raise ConfigError(f"{section}{extra[0]}", "unknown key")


def _section(doc, key):
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(key, "must be an object")
    return val


def _number(doc, key, where, default=None, kind=float):
    if key not in doc:
        if default is None:
            raise ConfigError(where + key, "required")
        return default
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(where + key, "must be a number")
    if kind is int:
        if int(val) != val:
            raise ConfigError(where + key, "must be an integer")
        return int(val)
    if not np.isfinite(val):
        raise ConfigError(where + key, "must be finite")
    return float(val)


def _vector(doc, key, n):
    if key not in doc:
        raise ConfigError(key, "required")
    val = doc[key]
    if not isinstance(val, list) or not all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in val):
        raise ConfigError(key, "must be an array of numbers")
    if len(val) != n:
        raise ConfigError(key, f"{key} must have length {n}")
    arr = np.array(val, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(key, "entries must be finite")
    return arr


def _xi(spec, lam, k):
    if not isinstance(spec, dict) or "mode" not in spec:
        raise ConfigError("xi_init", "must be an object with a 'mode'")
    mode = spec["mode"]
    if mode == "base":
        _unknown("xi_init.", spec, {"mode"})
        return orbit_base(lam, k).xi
    if mode == "random":
        _unknown("xi_init.", spec, {"mode", "seed"})
        seed = _number(spec, "seed", "xi_init.", kind=int)
        return random_orbit_element(lam, k, seed).xi
    if mode == "explicit":
        _unknown("xi_init.", spec, {"mode", "matrix", "tol"})
        mat = spec.get("matrix")
        try:
            xi = np.array(mat, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("xi_init.matrix", "must be a numeric matrix") from None
        if xi.shape != (2 * k, 2 * k):
            raise ConfigError("xi_init.matrix", f"must be {2 * k}x{2 * k}")
        tol = float(spec.get("tol", 1e-8))
        if not orbit_membership(xi, lam, k, tol):
            raise ConfigError("xi_init.matrix", f"not on the orbit of charge {lam} (tol {tol:g})")
        return 0.5 * (xi - xi.T)
    raise ConfigError("xi_init.mode", f"unknown mode {mode!r}")


def parse_config(doc) -> RunConfig:
    """Validate a configuration document (JSON text or decoded dict).

    Defaults: adaptive integrator, rel_tol 1e-10, abs_tol 1e-12, t_end 20,
    sample_every 10, ξ at the orbit base point.

    Raises
    ------
    ConfigError
        With the offending field and a reason.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "must be a JSON object")
    _unknown("", doc, _TOP_KEYS)

    k = _number(doc, "k", "", kind=int)
    if not 1 <= k <= MAX_K:
        raise ConfigError("k", f"must satisfy 1 <= k <= {MAX_K}")
    lam = _number(doc, "lambda", "")
    n = 2 * k + 1
    r0 = _vector(doc, "r0", n)
    v0 = _vector(doc, "v0", n)
    if not np.linalg.norm(r0) > 0:
        raise ConfigError("r0", "must be nonzero")
    xi_init = doc.get("xi_init", {"mode": "base"})
    xi = _xi(xi_init, lam, k)

    integ = _section(doc, "integrator")
    _unknown("integrator.", integ, _INTEGRATOR_KEYS)
    guards = _section(doc, "guards")
    _unknown("guards.", guards, _GUARD_KEYS)
    out = _section(doc, "output")
    _unknown("output.", out, _OUTPUT_KEYS)
    base = IntegratorConfig()
    method = integ.get("method", base.method)
    sample_every = _number(out, "sample_every", "output.",
                           _number(integ, "sample_every", "integrator.", base.sample_every, int), int)
    reproject = integ.get("reproject", False)
    if not isinstance(reproject, bool):
        raise ConfigError("integrator.reproject", "must be a boolean")
    try:
        icfg = IntegratorConfig(
            method=method,
            dt=_number(integ, "dt", "integrator.", base.dt),
            rel_tol=_number(integ, "rel_tol", "integrator.", base.rel_tol),
            abs_tol=_number(integ, "abs_tol", "integrator.", base.abs_tol),
            t_end=_number(integ, "t_end", "integrator.", base.t_end),
            max_steps=_number(integ, "max_steps", "integrator.", base.max_steps, int),
            sample_every=sample_every,
            string_eps=_number(guards, "string_clearance_min", "guards.", base.string_eps),
            r_min_factor=_number(guards, "r_min", "guards.", base.r_min_factor),
            reproject=reproject,
        )
    except ValueError as exc:
        raise ConfigError("integrator", str(exc)) from None

    thr = _section(doc, "thresholds")
    _unknown("thresholds.", thr, set(DEFAULT_THRESHOLDS))
    thresholds = dict(DEFAULT_THRESHOLDS)
    for key in thr:
        thresholds[key] = _number(thr, key, "thresholds.")

    ver = _section(doc, "verify")
    _unknown("verify.", ver, _VERIFY_KEYS)
    cmp_ = _section(doc, "compare")
    _unknown("compare.", cmp_, _COMPARE_KEYS)

    name = doc.get("name", "run")
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError("name", "must be a non-empty string without '/'")
    for key in ("csv_path", "report_path"):
        if key in out and not isinstance(out[key], str):
            raise ConfigError("output." + key, "must be a string")

    return RunConfig(
        k=k, lam=lam, r0=r0, v0=v0, xi=xi, xi_init=xi_init, integrator=icfg, name=name,
        csv_path=out.get("csv_path"), report_path=out.get("report_path"),
        thresholds=thresholds,
        verify_points=_number(ver, "points", "verify.", 100, int),
        verify_seed=_number(ver, "seed", "verify.", 7, int),
        fd_step=_number(ver, "fd_step", "verify.", 1e-5),
        min_clearance=_number(ver, "min_clearance", "verify.", 0.1),
        compare_times=_number(cmp_, "times", "compare.", 200, int),
    )


def parse_documents(doc) -> List[RunConfig]:
    """One config, a list of them, or ``{"scenarios": [...]}``."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if isinstance(doc, dict) and "scenarios" in doc:
        if set(doc) != {"scenarios"}:
            raise ConfigError("scenarios", "sweep documents hold only 'scenarios'")
        doc = doc["scenarios"]
    if isinstance(doc, list):
        cfgs = [parse_config(d) for d in doc]
        names = [c.name for c in cfgs]
        if len(set(names)) != len(names):
            raise ConfigError("name", "scenario names must be unique")
        return cfgs
    return [parse_config(doc)]


SCENARIOS = {
    "A": {"name": "scenario_a", "k": 1, "lambda": 1.0,
          "r0": [0.0, 0.0, 1.0], "v0": [1.0, 0.0, 0.2],
          "xi_init": {"mode": "base"}},
    "B": {"name": "scenario_b", "k": 2, "lambda": 1.5,
          "r0": [1.0, 0.0, 0.0, 0.0, 0.5], "v0": [0.0, 1.0, 0.0, 0.3, 0.0],
          "xi_init": {"mode": "random", "seed": 42}},
    "C": {"name": "scenario_c", "k": 3, "lambda": 0.7,
          "r0": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
          "v0": [0.0, 1.0, 0.0, 0.3, 0.0, 0.2, 0.0],
          "xi_init": {"mode": "random", "seed": 7}},
}


def scenario(name: str, **overrides) -> RunConfig:
    doc = json.loads(json.dumps(SCENARIOS[name]))
    doc.update(overrides)
    return parse_config(doc)
