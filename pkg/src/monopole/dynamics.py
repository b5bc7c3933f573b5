"""
Integration of the coupled system (r, v, ξ).

    r' = v,   v' = f(ξ, r) v,   ξ' = [ξ, 𝔞(v)]

The stepper sees a flat vector [r, v, upper(ξ)] of length 2n + k(2k-1);
storing only the strictly-upper triangle of ξ keeps it exactly skew.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import gauge
from .errors import StepUnderflow, StringProximity, ZeroRadius
from .liealg import skew_to_upper, upper_to_skew

MIN_STEP = 1e-14


@dataclass(frozen=True)
class State:
    t: float
    r: np.ndarray
    v: np.ndarray
    xi: np.ndarray

    @property
    def n(self):
        return self.r.shape[0]

    @property
    def k(self):
        return (self.r.shape[0] - 1) // 2

    def flat(self):
        return np.concatenate([self.r, self.v, skew_to_upper(self.xi)])

    @classmethod
    def from_flat(cls, t, y, n):
        m = n - 1
        return cls(float(t), y[:n].copy(), y[n:2 * n].copy(), upper_to_skew(y[2 * n:], m))


@dataclass
class IntegratorConfig:
    method: str = "adaptive_embedded"  # or "fixed_rk4"
    dt: float = 1e-3
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    t_end: float = 20.0
    max_steps: int = 2_000_000
    sample_every: int = 10
    string_eps: float = gauge.STRING_EPS
    r_min_factor: float = 1e-9
    reproject: bool = False

    def __post_init__(self):
        if self.method not in ("fixed_rk4", "adaptive_embedded"):
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("dt", "rel_tol", "abs_tol", "t_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1 or self.sample_every < 1:
            raise ValueError("max_steps and sample_every must be >= 1")


@dataclass
class Trajectory:
    samples: List[State]
    monitors: Dict[str, List[float]]
    meta: Dict[str, float] = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def positions(self):
        return np.array([s.r for s in self.samples])

    @property
    def velocities(self):
        return np.array([s.v for s in self.samples])


def string_clearance(x) -> float:
    """(r + x_n) / r: 2 at the north pole, 0 on the Dirac string."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("zero vector has no string clearance")
    return (r + x[-1]) / r


def derivative(s: State, string_eps=gauge.STRING_EPS):
    """(dr, dv, dξ) at a state."""
    pf = gauge.paired_field(s.xi, s.r, string_eps)
    dv = pf.f @ s.v
    dxi = gauge.transport_rate(s.xi, s.r, s.v, string_eps)
    return s.v.copy(), dv, dxi


def _rhs_flat(n, string_eps):
    m = n - 1
    iu = np.triu_indices(m, 1)

    def rhs(t, y):
        xi = upper_to_skew(y[2 * n:], m)
        dv, dxi = gauge.fast_rates(xi, y[:n], y[n:2 * n], string_eps)
        return np.concatenate([y[n:2 * n], dv, dxi[iu]])

    return rhs


def reproject_xi(xi, lam, k):
    """Nearest point of O_λ: rescaled orthogonal polar factor of ξ."""
    if lam == 0:
        return np.zeros_like(xi)
    w, U = np.linalg.eigh(xi.T @ xi)
    inv_sqrt = U @ np.diag(1.0 / np.sqrt(w)) @ U.T
    Q = xi @ inv_sqrt
    Q = 0.5 * (Q - Q.T)
    return abs(lam) / np.sqrt(k) * Q


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dopri_step(rhs, t, y, h, k1):
    K = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * K[j] for j, a in enumerate(_A[i]) if a != 0.0)
        K.append(rhs(t + _C[i] * h, yi))
    # FSAL: stage 7 is evaluated at the propagated solution
    y_new = y + h * sum(b * K[j] for j, b in enumerate(_B5) if b != 0.0)
    err = h * sum(e * K[j] for j, e in enumerate(_E) if e != 0.0)
    return y_new, err, K[6]


def _rk4_increment(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _kahan_add(y, comp, dy):
    """Compensated y + dy; returns (sum, new compensation)."""
    z = dy - comp
    s = y + z
    return s, (s - y) - z


def _initial_step(rhs, t, y, f0, cfg):
    sc = cfg.abs_tol + cfg.rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + h0 * f0
    f1 = rhs(t + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, cfg.t_end)


def default_monitors():
    return {"energy": lambda s: float(np.dot(s.v, s.v))}


def integrate(init: State, cfg: IntegratorConfig, k: int, lam: float,
              monitors: Optional[Dict[str, Callable[[State], float]]] = None,
              sample_times=None) -> Trajectory:
    """Integrate from ``init`` to ``init.t + cfg.t_end``.

    A sample (with every monitor evaluated) is recorded at the start, then
    every ``cfg.sample_every`` accepted steps, and at the final time. If
    ``sample_times`` is given, samples are taken at those times instead;
    adaptive steps are shortened to land on them exactly, fixed steps
    record the first step at or past each of them.

    Raises
    ------
    StringProximity, ZeroRadius
        Guard trip; the exception carries the trip time and the last
        accepted state.
    StepUnderflow
        Adaptive step fell below 1e-14.
    """
    n = init.r.shape[0]
    if n != 2 * k + 1 or init.xi.shape != (2 * k, 2 * k):
        raise ValueError("state dimensions inconsistent with k")
    monitors = default_monitors() if monitors is None else monitors
    rhs = _rhs_flat(n, cfg.string_eps)
    r_min = cfg.r_min_factor * float(np.linalg.norm(init.r))

    samples: List[State] = []
    mon: Dict[str, List[float]] = {name: [] for name in monitors}

    def record(s):
        samples.append(s)
        for name, fn in monitors.items():
            mon[name].append(float(fn(s)))

    def check(t, y):
        r = np.linalg.norm(y[:n])
        if not r > r_min:
            raise ZeroRadius(r, t=t, state=last)
        c = string_clearance(y[:n])
        if c <= cfg.string_eps:
            raise StringProximity(c, t=t, state=last)

    t = float(init.t)
    y = init.flat()
    last = init
    check(t, y)
    record(init)
    t_end = init.t + cfg.t_end
    steps = rejected = 0
    min_dt = np.inf
    since_sample = 0
    if sample_times is None:
        targets = None
    else:
        targets = np.unique(np.asarray(sample_times, dtype=float))
        targets = targets[(targets > t) & (targets <= t_end)]
    ti = 0

    def guarded(fn, *args):
        try:
            return fn(*args)
        except (StringProximity, ZeroRadius) as exc:
            exc.t = t
            exc.state = last
            raise

    def accept(t_new, y_new):
        nonlocal t, y, last, steps, since_sample, ti
        if cfg.reproject:
            xi = reproject_xi(upper_to_skew(y_new[2 * n:], n - 1), lam, k)
            y_new = np.concatenate([y_new[:2 * n], skew_to_upper(xi)])
        check(t_new, y_new)
        t, y = t_new, y_new
        last = State.from_flat(t, y, n)
        steps += 1
        since_sample += 1
        done = t >= t_end
        if targets is None:
            hit = since_sample >= cfg.sample_every
        else:
            hit = False
            while ti < len(targets) and targets[ti] <= t:
                ti += 1
                hit = True
        if hit or done:
            record(last)
            since_sample = 0
        return done

    if cfg.method == "fixed_rk4":
        comp = np.zeros_like(y)
        nsteps = int(np.ceil(cfg.t_end / cfg.dt - 1e-9))
        for i in range(nsteps):
            if steps >= cfg.max_steps:
                break
            t_next = init.t + min((i + 1) * cfg.dt, cfg.t_end)
            h = t_next - t
            min_dt = min(min_dt, h)
            dy = guarded(_rk4_increment, rhs, t, y, h)
            y_new, comp = _kahan_add(y, comp, dy)
            if i == nsteps - 1:
                t_next = t_end
            done = accept(t_next, y_new)
            if cfg.reproject:
                comp[:] = 0.0
            if done:
                break
    else:
        f0 = guarded(rhs, t, y)
        h = guarded(_initial_step, rhs, t, y, f0, cfg)
        while steps < cfg.max_steps:
            h = min(h, t_end - t)
            stop = t_end
            if targets is not None and ti < len(targets) and targets[ti] - t < h:
                h = targets[ti] - t
                stop = targets[ti]
            if h < MIN_STEP * max(1.0, abs(t)):
                raise StepUnderflow(h, t=t, state=last)
            y_new, err, f_new = guarded(_dopri_step, rhs, t, y, h, f0)
            sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            e = float(np.sqrt(np.mean((err / sc) ** 2)))
            if e <= 1.0:
                min_dt = min(min_dt, h)
                t_new = stop if stop - (t + h) <= 1e-15 * max(1.0, abs(stop)) else t + h
                done = accept(t_new, y_new)
                f0 = f_new if not cfg.reproject else guarded(rhs, t, y)
                if done:
                    break
                fac = 5.0 if e == 0.0 else min(5.0, max(0.2, 0.9 * e ** -0.2))
            else:
                rejected += 1
                fac = max(0.2, 0.9 * e ** -0.2)
            h = h * fac

    if samples[-1].t != t:
        record(last)
    meta = {"steps": steps, "rejected": rejected,
            "min_dt": float(min_dt) if np.isfinite(min_dt) else 0.0,
            "t_final": t, "completed": bool(t >= t_end)}
    return Trajectory(samples, mon, meta)


def make_state(r0, v0, xi, t=0.0) -> State:
    xi = np.asarray(getattr(xi, "xi", xi), dtype=float)
    return State(float(t), np.asarray(r0, dtype=float).copy(),
                 np.asarray(v0, dtype=float).copy(), 0.5 * (xi - xi.T))

