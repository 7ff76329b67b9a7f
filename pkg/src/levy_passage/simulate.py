"""Path simulation and first-passage sampling.

Two engines cover all models:

* event-exact: bounded-variation finite-activity models (a drift line
  between Poisson jump events). Crossing times, overshoots, undershoots and
  last-maximum times are exact to floating point; upward drift crossings
  (creep) hit the level with zero overshoot, and a first-segment creep from
  the origin returns tau = u/d bitwise.
* gaussian-skeleton: everything with a Gaussian component or infinite jump
  activity. Jumps of modulus above the cutoff epsilon are simulated exactly
  as a marked Poisson process; smaller jumps are folded into the drift and
  an effective Gaussian variance matching the truncated second moment. The
  Gaussian part advances on a dt grid, and within each substep the exact
  Brownian bridge maximum is sampled, so crossings are never missed at grid
  resolution. Crossing times are placed inside the substep by interpolation;
  last-maximum times are recorded at substep resolution (a documented
  discretization of G, not eliminated).

Per-replication random streams make every batch reproducible independently
of batching or execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import LevyModel, ModelError, signed_mean_between, small_jump_variance
from .rng import stream

__all__ = [
    "SimConfig",
    "PassageRecord",
    "PassageBatch",
    "LadderSample",
    "choose_engine",
    "simulate_passage",
    "passage_sample",
    "sample_at_time",
    "fixed_time_sample",
    "ratio_path",
    "ratio_paths",
    "extract_ladder",
    "cutoff_for_rate",
]

_EVENT_BLOCK = 64


@dataclass
class SimConfig:
    """Engine tuning knobs.

    epsilon: jump-size cutoff for infinite-activity measures.
    dt: substep length of the Gaussian skeleton.
    horizon: censor time; passages not seen by then count as censored.
    seed: default stream seed for batch entry points.
    rate_cap: refuse cutoffs producing a jump intensity above this.
    """

    epsilon: float = 1e-3
    dt: float = 1e-2
    horizon: float = 1e6
    seed: int = 0
    bridge_correction: bool = True
    rate_cap: float = 1e7
    block: int = 4096

    def __post_init__(self):
        if self.epsilon <= 0 or self.dt <= 0 or self.horizon <= 0:
            raise ValueError("epsilon, dt and horizon must be positive")


@dataclass(frozen=True)
class PassageRecord:
    """One sampled passage attempt over level u.

    undershoot is u minus the running maximum just before passage, so it is
    zero both on creeping and when the crossing jump leaves the maximum.
    g_last_max is the last time the running maximum was attained strictly
    before the passage time.
    """

    u: float
    tau: float             # inf when censored at the horizon
    ruined: bool
    x_at_tau: float        # position at the crossing (== u on creep)
    overshoot: float       # X_tau - u
    undershoot: float      # u - max_{s<tau} X_s
    g_last_max: float


@dataclass
class PassageBatch:
    """Vector of passage attempts with one random stream per replication."""

    u: float
    tau: np.ndarray
    ruined: np.ndarray
    x_at_tau: np.ndarray
    overshoot: np.ndarray
    undershoot: np.ndarray
    g_last_max: np.ndarray
    engine: str
    seed: int
    level_index: int

    @property
    def n(self) -> int:
        return len(self.tau)

    @property
    def n_ruined(self) -> int:
        return int(self.ruined.sum())

    @property
    def censored_fraction(self) -> float:
        return 1.0 - self.n_ruined / max(self.n, 1)


@dataclass
class LadderSample:
    """Empirical ladder epochs from one path.

    epochs are (elapsed real time, height increment) pairs recorded at
    strict new running maxima; elapsed time is the gap since the previous
    record and proxies the inverse-local-time increment. killed is a
    heuristic flag: no new record was seen over the last quarter of the
    horizon, suggesting the maximum has stopped increasing.
    """

    epochs: list
    killed: bool


def choose_engine(model: LevyModel) -> str:
    m = model.measure
    if model.sigma2 == 0.0 and m.is_finite_activity and (
            m.law is not None or m.total_rate == 0.0):
        return "event-exact"
    return "gaussian-skeleton"


def cutoff_for_rate(model: LevyModel, target_rate: float,
                    lo: float = 1e-12, hi: float = 10.0) -> float:
    """Cutoff epsilon whose retained jump intensity is about target_rate."""
    tail = model.measure.total_tail
    if tail(lo) <= target_rate:
        return lo
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if tail(mid) > target_rate:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-9:
            break
    return hi


# ---------------------------------------------------------------------------
# event-exact engine (bounded variation, finite activity)


def _censored(u: float) -> PassageRecord:
    return PassageRecord(u, math.inf, False, math.nan, math.nan,
                         math.nan, math.nan)


def _scan_records(t, ct, pre, post, mx, g, d):
    """Update (last max time, max) over a block of events.

    With upward drift the path attains its maxima continuously at segment
    tops (the `pre` values); jump tops (`post`) can set records with either
    drift sign. Ties count as reattained maxima: the last-maximum time
    tracks the most recent visit to the maximum.
    """
    nb = len(pre)
    vals = np.empty(nb + len(post))
    vals[0::2] = pre
    if len(post):
        vals[1::2] = post
    times = np.empty_like(vals)
    times[0::2] = ct[:nb]
    if len(post):
        times[1::2] = ct[:len(post)]
    if d <= 0.0:
        # downward or flat segments cannot set records at their tops
        vals[0::2] = -math.inf
    prior = np.maximum.accumulate(np.concatenate(([mx], vals)))[:-1]
    rec = np.flatnonzero(vals >= prior)
    if rec.size:
        g = t + float(times[rec[-1]])
        mx = max(mx, float(np.max(vals)))
    return g, mx


def _bv_passage(model: LevyModel, u: float, rng: np.random.Generator,
                cfg: SimConfig) -> PassageRecord:
    d = model.drift_bv()
    m = model.measure
    rate = m.total_rate
    if rate == 0.0:
        if d > 0.0:
            tau = u / d
            if tau <= cfg.horizon:
                return PassageRecord(u, tau, True, u, 0.0, 0.0, tau)
        return _censored(u)
    law = m.law
    t = 0.0
    x = 0.0
    mx = 0.0
    g = 0.0
    scale = 1.0 / rate
    while True:
        w = rng.exponential(scale, _EVENT_BLOCK)
        j = law.sample(rng, _EVENT_BLOCK)
        ct = np.cumsum(w)
        cj = np.cumsum(j)
        pre = x + d * ct + np.concatenate(([0.0], cj[:-1]))   # before jump k
        post = pre + j                                        # after jump k
        cross_creep = pre > u if d > 0.0 else np.zeros(_EVENT_BLOCK, bool)
        cross_jump = post > u
        hit = np.flatnonzero(cross_creep | cross_jump)
        k = int(hit[0]) if hit.size else -1
        if k >= 0 and cross_creep[k]:
            # forward from the segment start: exact, and bitwise u/d on a
            # first-segment crossing from the origin
            x_seg = post[k - 1] if k else x
            t_seg = t + (ct[k - 1] if k else 0.0)
            tau = t_seg + (u - x_seg) / d
            if tau > cfg.horizon:
                return _censored(u)
            return PassageRecord(u, tau, True, u, 0.0, 0.0, tau)
        if k >= 0:
            tau = t + ct[k]
            if tau > cfg.horizon:
                return _censored(u)
            g_new, mx_new = _scan_records(t, ct[:k + 1], pre[:k + 1],
                                          post[:k], mx, g, d)
            if d <= 0.0:
                mx_new = max(mx_new, 0.0)   # origin itself is the t=0 maximum
            if pre[k] >= mx_new:
                g_new, mx_new = tau, pre[k]
            return PassageRecord(u, tau, True, float(post[k]),
                                 float(post[k] - u), float(u - mx_new), g_new)
        g, mx = _scan_records(t, ct, pre, post, mx, g, d)
        t += ct[-1]
        x = post[-1]
        if t > cfg.horizon:
            return _censored(u)


def _bv_fixed_time(model: LevyModel, horizon: float,
                   rng: np.random.Generator) -> tuple:
    """(X_t, running max, last max time) at t = horizon, exactly."""
    d = model.drift_bv()
    m = model.measure
    rate = m.total_rate
    if rate == 0.0:
        x = d * horizon
        if d > 0.0:
            return x, x, horizon
        return x, 0.0, 0.0
    law = m.law
    t = 0.0
    x = 0.0
    mx = 0.0
    g = 0.0
    scale = 1.0 / rate
    while True:
        w = rng.exponential(scale, _EVENT_BLOCK)
        j = law.sample(rng, _EVENT_BLOCK)
        ct = np.cumsum(w)
        cj = np.cumsum(j)
        pre = x + d * ct + np.concatenate(([0.0], cj[:-1]))
        post = pre + j
        if t + ct[-1] <= horizon:
            g, mx = _scan_records(t, ct, pre, post, mx, g, d)
            t += ct[-1]
            x = post[-1]
            continue
        k = int(np.searchsorted(t + ct, horizon, side="right"))
        g, mx = _scan_records(t, ct[:k], pre[:k], post[:k], mx, g, d)
        x_start = post[k - 1] if k else x
        t_start = t + (ct[k - 1] if k else 0.0)
        x_end = x_start + d * (horizon - t_start)
        if d > 0.0 and x_end >= mx:
            mx, g = x_end, horizon
        return float(x_end), float(mx), g


# ---------------------------------------------------------------------------
# gaussian-skeleton engine


class _SkeletonSpec:
    """Frozen per-model data for the skeleton engine at a given cutoff."""

    def __init__(self, model: LevyModel, cfg: SimConfig):
        self.sigma2_eff = model.sigma2
        self.drift = model.gamma
        self.sampler = None
        m = model.measure
        if m.pos_support > 0.0 or m.neg_support > 0.0:
            eps = cfg.epsilon
            if m.is_finite_activity and m.law is not None:
                self.sampler = m.sampler(0.0)
                self.drift = model.gamma - signed_mean_between(model, 0.0, 1.0)
                # finite activity: jumps carried whole, no variance folding
            else:
                self.sampler = m.sampler(eps)
                if self.sampler.rate > cfg.rate_cap:
                    raise ModelError(
                        f"jump intensity {self.sampler.rate:.3g} above the "
                        f"cap {cfg.rate_cap:.3g}; raise epsilon")
                self.sigma2_eff += small_jump_variance(model, eps)
                self.drift = model.gamma - signed_mean_between(model, eps, 1.0)
        self.sig = math.sqrt(self.sigma2_eff)
        if self.sigma2_eff <= 0.0 and self.sampler is None:
            raise ModelError("skeleton engine needs a Gaussian part or jumps")


def _bridge_max(x0, x1, sig2dt, logu):
    """Exact maximum of a Brownian bridge over one substep.

    With q = -2 sig2 dt log U, the maximum is the larger root of
    (m - x0)(m - x1) = q/2, always at least max(x0, x1).
    """
    q = -sig2dt * logu
    disc = (x1 - x0) ** 2 + 2.0 * q
    return 0.5 * (x0 + x1 + np.sqrt(disc))


def _diffusion_passage(spec, u, rng, cfg) -> PassageRecord:
    """Pure drift+Gaussian passage via blockwise substeps."""
    b = spec.drift
    sig = spec.sig
    dt = cfg.dt
    n_exp = max(int((u / b) / dt * 1.5) if b > 0 else 0, 256)
    nblock = min(max(n_exp, 256), cfg.block)
    t = 0.0
    x = 0.0
    mx = 0.0
    g = 0.0
    sqdt = sig * math.sqrt(dt)
    while t < cfg.horizon:
        z = rng.standard_normal(nblock)
        lu = np.log(rng.random(nblock))
        x1 = x + np.cumsum(b * dt + sqdt * z)
        x0 = np.concatenate(([x], x1[:-1]))
        m = _bridge_max(x0, x1, sig * sig * dt, lu) if cfg.bridge_correction \
            else np.maximum(x0, x1)
        hit = np.flatnonzero(m > u)
        k = int(hit[0]) if hit.size else -1
        if k >= 0:
            lo, hi = x0[k], x1[k]
            frac = (u - lo) / (hi - lo) if hi > lo else 0.5
            tau = t + dt * (k + min(max(frac, 0.0), 1.0))
            if tau > cfg.horizon:
                return _censored(u)
            return PassageRecord(u, tau, True, u, 0.0, 0.0, tau)
        prior = np.maximum.accumulate(np.concatenate(([mx], m)))[:-1]
        rec = np.flatnonzero(m >= prior)
        if rec.size:
            g = t + dt * (rec[-1] + 1)
            mx = float(np.max(m))
        t += nblock * dt
        x = float(x1[-1])
        nblock = cfg.block
    return _censored(u)


def _skeleton_passage(model, spec, u, rng, cfg) -> PassageRecord:
    """Drift+Gaussian+jumps passage, substep loop with exact jump times."""
    if spec.sampler is None or spec.sampler.rate == 0.0:
        return _diffusion_passage(spec, u, rng, cfg)
    b = spec.drift
    sig2 = spec.sigma2_eff
    sig = spec.sig
    rate = spec.sampler.rate
    t = 0.0
    x = 0.0
    mx = 0.0
    g = 0.0
    next_jump = t + rng.exponential(1.0 / rate)
    while t < cfg.horizon:
        seg_end = min(next_jump, cfg.horizon)
        while t < seg_end:
            step = min(cfg.dt, seg_end - t)
            if t + step == t:   # step below float resolution at this t
                t = seg_end
                break
            if sig2 > 0.0:
                x1 = x + b * step + sig * math.sqrt(step) * rng.standard_normal()
                m = _bridge_max(x, x1, sig2 * step,
                                math.log(rng.random())) if cfg.bridge_correction \
                    else max(x, x1)
            else:
                x1 = x + b * step
                m = max(x, x1)
            if m > u:
                frac = (u - x) / (x1 - x) if x1 > x else 0.5
                tau = t + step * min(max(frac, 0.0), 1.0)
                return PassageRecord(u, tau, True, u, 0.0, 0.0, tau)
            if m >= mx:
                mx, g = float(m), t + step
            t += step
            x = float(x1)
        if t >= cfg.horizon:
            break
        size = float(spec.sampler.draw(rng, 1)[0])
        xb = x
        x += size
        if x > u:
            mx_pre = max(mx, xb)
            g_at = t if xb >= mx else g
            return PassageRecord(u, t, True, x, x - u, u - mx_pre, g_at)
        if x >= mx:
            mx, g = x, t
        next_jump = t + rng.exponential(1.0 / rate)
    return _censored(u)


def _skeleton_fixed_time(model, spec, horizon, rng, cfg) -> tuple:
    """(X_t, running max, last max time) under the skeleton engine."""
    b = spec.drift
    sig2 = spec.sigma2_eff
    sig = spec.sig
    rate = spec.sampler.rate if spec.sampler is not None else 0.0
    t = 0.0
    x = 0.0
    mx = 0.0
    g = 0.0
    next_jump = t + rng.exponential(1.0 / rate) if rate > 0.0 else math.inf
    while t < horizon:
        seg_end = min(next_jump, horizon)
        while t < seg_end:
            step = min(cfg.dt, seg_end - t)
            if t + step == t:
                t = seg_end
                break
            if sig2 > 0.0:
                x1 = x + b * step + sig * math.sqrt(step) * rng.standard_normal()
                m = _bridge_max(x, x1, sig2 * step, math.log(rng.random()))
            else:
                x1 = x + b * step
                m = max(x, x1)
            if m >= mx:
                mx, g = float(m), t + step
            t += step
            x = float(x1)
        if t >= horizon:
            break
        x += float(spec.sampler.draw(rng, 1)[0])
        if x >= mx:
            mx, g = x, t
        next_jump = t + rng.exponential(1.0 / rate)
    return x, mx, g


# ---------------------------------------------------------------------------
# public entry points


def simulate_passage(model: LevyModel, u: float, rng: np.random.Generator,
                     cfg: Optional[SimConfig] = None) -> PassageRecord:
    """One passage attempt over level u > 0 with the natural engine."""
    cfg = cfg or SimConfig()
    if not u > 0.0:
        raise ValueError("level u must be positive")
    if choose_engine(model) == "event-exact":
        return _bv_passage(model, u, rng, cfg)
    spec = _SkeletonSpec(model, cfg)
    return _skeleton_passage(model, spec, u, rng, cfg)


def passage_sample(model: LevyModel, u: float, n: int,
                   seed: Optional[int] = None, level_index: int = 0,
                   cfg: Optional[SimConfig] = None) -> PassageBatch:
    """n independent passage attempts, one random stream per replication."""
    cfg = cfg or SimConfig()
    if seed is None:
        seed = cfg.seed
    if not u > 0.0:
        raise ValueError("level u must be positive")
    engine = choose_engine(model)
    spec = _SkeletonSpec(model, cfg) if engine == "gaussian-skeleton" else None
    tau = np.empty(n)
    ruined = np.empty(n, dtype=bool)
    x_at = np.empty(n)
    ov = np.empty(n)
    us = np.empty(n)
    gl = np.empty(n)
    for r in range(n):
        rng = stream(seed, level_index, r)
        if spec is None:
            rec = _bv_passage(model, u, rng, cfg)
        else:
            rec = _skeleton_passage(model, spec, u, rng, cfg)
        tau[r] = rec.tau
        ruined[r] = rec.ruined
        x_at[r] = rec.x_at_tau
        ov[r] = rec.overshoot
        us[r] = rec.undershoot
        gl[r] = rec.g_last_max
    return PassageBatch(u, tau, ruined, x_at, ov, us, gl, engine,
                        seed, level_index)


def sample_at_time(model: LevyModel, t: float, rng: np.random.Generator,
                   cfg: Optional[SimConfig] = None) -> tuple:
    """(X_t, running max, last max time) for one path."""
    cfg = cfg or SimConfig()
    if choose_engine(model) == "event-exact":
        return _bv_fixed_time(model, t, rng)
    spec = _SkeletonSpec(model, cfg)
    return _skeleton_fixed_time(model, spec, t, rng, cfg)


def fixed_time_sample(model: LevyModel, t: float, n: int,
                      seed: Optional[int] = None, level_index: int = 0,
                      cfg: Optional[SimConfig] = None):
    """Arrays (X_t, running max, last max time) over n replications."""
    cfg = cfg or SimConfig()
    if seed is None:
        seed = cfg.seed
    engine = choose_engine(model)
    spec = _SkeletonSpec(model, cfg) if engine == "gaussian-skeleton" else None
    xs = np.empty(n)
    ms = np.empty(n)
    gs = np.empty(n)
    for r in range(n):
        rng = stream(seed, level_index, r)
        if spec is None:
            x, mx, g = _bv_fixed_time(model, t, rng)
        else:
            x, mx, g = _skeleton_fixed_time(model, spec, t, rng, cfg)
        xs[r] = x
        ms[r] = mx
        gs[r] = g
    return xs, ms, gs


# ---------------------------------------------------------------------------
# coupled multi-level passages along a single path (a.s. statements)


def ratio_path(model: LevyModel, levels, rng: np.random.Generator,
               cfg: Optional[SimConfig] = None, with_max: bool = False):
    """Passage times over every level along one shared path.

    Levels must be sorted strictly increasing and positive; times are nan
    once the path was censored at the horizon before reaching a level.
    With with_max=True also returns the running maximum just before each
    crossing, which is nondecreasing in the level along the path.
    """
    cfg = cfg or SimConfig()
    levels = np.asarray(levels, dtype=float)
    if len(levels) == 0 or levels[0] <= 0.0:
        raise ValueError("levels must be positive")
    if np.any(np.diff(levels) <= 0.0):
        raise ValueError("levels must be strictly increasing")
    if choose_engine(model) == "event-exact":
        taus, maxima = _bv_ratio_path(model, levels, rng, cfg)
    else:
        spec = _SkeletonSpec(model, cfg)
        taus, maxima = _skeleton_ratio_path(model, spec, levels, rng, cfg)
    return (taus, maxima) if with_max else taus


def ratio_paths(model: LevyModel, levels, n: int, seed: Optional[int] = None,
                level_index: int = 0,
                cfg: Optional[SimConfig] = None) -> np.ndarray:
    """Matrix of passage times, one coupled path per row."""
    cfg = cfg or SimConfig()
    if seed is None:
        seed = cfg.seed
    levels = np.asarray(levels, dtype=float)
    out = np.empty((n, len(levels)))
    for r in range(n):
        rng = stream(seed, level_index, r)
        out[r] = ratio_path(model, levels, rng, cfg)
    return out


def _bv_ratio_path(model, levels, rng, cfg):
    d = model.drift_bv()
    m = model.measure
    rate = m.total_rate
    taus = np.full(len(levels), math.nan)
    maxima = np.full(len(levels), math.nan)
    if rate == 0.0:
        if d > 0.0:
            tt = levels / d
            ok = tt <= cfg.horizon
            taus[ok] = tt[ok]
            maxima[ok] = levels[ok]
        return taus, maxima
    law = m.law
    t = 0.0
    x = 0.0
    mx = 0.0
    nxt = 0  # first level not yet crossed
    while t <= cfg.horizon and nxt < len(levels):
        w = rng.exponential(1.0 / rate, _EVENT_BLOCK)
        j = law.sample(rng, _EVENT_BLOCK)
        ct = np.cumsum(w)
        cj = np.cumsum(j)
        pre = x + d * ct + np.concatenate(([0.0], cj[:-1]))
        post = pre + j
        starts = np.concatenate(([x], post[:-1]))
        tstarts = t + np.concatenate(([0.0], ct[:-1]))
        for k in range(_EVENT_BLOCK):
            if nxt >= len(levels):
                break
            if d > 0.0:
                while nxt < len(levels) and levels[nxt] < pre[k]:
                    tau = tstarts[k] + (levels[nxt] - starts[k]) / d
                    if tau > cfg.horizon:
                        return taus, maxima
                    taus[nxt] = tau
                    maxima[nxt] = levels[nxt]   # reached by climbing
                    nxt += 1
                mx = max(mx, pre[k])
            while nxt < len(levels) and levels[nxt] < post[k]:
                tau = t + ct[k]
                if tau > cfg.horizon:
                    return taus, maxima
                taus[nxt] = tau
                maxima[nxt] = max(mx, pre[k])
                nxt += 1
            mx = max(mx, post[k])
        t += ct[-1]
        x = post[-1]
    return taus, maxima


def _skeleton_ratio_path(model, spec, levels, rng, cfg):
    b = spec.drift
    sig2 = spec.sigma2_eff
    sig = spec.sig
    rate = spec.sampler.rate if spec.sampler is not None else 0.0
    taus = np.full(len(levels), math.nan)
    maxima = np.full(len(levels), math.nan)
    t = 0.0
    x = 0.0
    mx = 0.0
    nxt = 0
    next_jump = t + rng.exponential(1.0 / rate) if rate > 0.0 else math.inf
    while t < cfg.horizon and nxt < len(levels):
        seg_end = min(next_jump, cfg.horizon)
        while t < seg_end and nxt < len(levels):
            step = min(cfg.dt, seg_end - t)
            if t + step == t:
                t = seg_end
                break
            if sig2 > 0.0:
                x1 = x + b * step + sig * math.sqrt(step) * rng.standard_normal()
                m = _bridge_max(x, x1, sig2 * step, math.log(rng.random()))
            else:
                x1 = x + b * step
                m = max(x, x1)
            while nxt < len(levels) and levels[nxt] < m:
                u = levels[nxt]
                frac = (u - x) / (x1 - x) if x1 > x else 0.5
                taus[nxt] = t + step * min(max(frac, 0.0), 1.0)
                maxima[nxt] = u
                nxt += 1
            mx = max(mx, float(m))
            t += step
            x = float(x1)
        if t >= cfg.horizon or nxt >= len(levels):
            break
        xb = x
        x += float(spec.sampler.draw(rng, 1)[0])
        while nxt < len(levels) and levels[nxt] < x:
            taus[nxt] = t
            maxima[nxt] = max(mx, xb)
            nxt += 1
        mx = max(mx, x)
        next_jump = t + rng.exponential(1.0 / rate)
    return taus, maxima


# ---------------------------------------------------------------------------
# empirical ladder extraction


def extract_ladder(model: LevyModel, cfg: Optional[SimConfig] = None,
                   rng: Optional[np.random.Generator] = None) -> LadderSample:
    """Walk one path to the horizon recording strict new-maximum epochs.

    Each epoch is (elapsed real time since the previous record, height
    increment). Event-exact models record at event boundaries; the skeleton
    engine records at substep endpoints, a documented discretization.
    """
    cfg = cfg or SimConfig()
    if rng is None:
        rng = stream(cfg.seed, 0, 0)
    if choose_engine(model) == "event-exact":
        times, heights = _bv_ladder_walk(model, rng, cfg)
    else:
        spec = _SkeletonSpec(model, cfg)
        times, heights = _skeleton_ladder_walk(model, spec, rng, cfg)
    epochs = []
    last_t = 0.0
    for tt, hh in zip(times, heights):
        epochs.append((tt - last_t, hh))
        last_t = tt
    killed = (cfg.horizon - last_t) > 0.25 * cfg.horizon
    return LadderSample(epochs=epochs, killed=killed)


def _bv_ladder_walk(model, rng, cfg):
    d = model.drift_bv()
    m = model.measure
    rate = m.total_rate
    times = []
    heights = []
    if rate == 0.0:
        if d > 0.0:
            times.append(cfg.horizon)
            heights.append(d * cfg.horizon)
        return times, heights
    law = m.law
    t = 0.0
    x = 0.0
    mx = 0.0
    while t <= cfg.horizon:
        w = rng.exponential(1.0 / rate, _EVENT_BLOCK)
        j = law.sample(rng, _EVENT_BLOCK)
        ct = np.cumsum(w)
        cj = np.cumsum(j)
        pre = x + d * ct + np.concatenate(([0.0], cj[:-1]))
        post = pre + j
        for k in range(_EVENT_BLOCK):
            tk = t + ct[k]
            if tk > cfg.horizon:
                return times, heights
            if d > 0.0 and pre[k] > mx:
                times.append(tk)
                heights.append(float(pre[k] - mx))
                mx = float(pre[k])
            if post[k] > mx:
                times.append(tk)
                heights.append(float(post[k] - mx))
                mx = float(post[k])
        t += ct[-1]
        x = post[-1]
    return times, heights


def _skeleton_ladder_walk(model, spec, rng, cfg):
    b = spec.drift
    sig2 = spec.sigma2_eff
    sig = spec.sig
    rate = spec.sampler.rate if spec.sampler is not None else 0.0
    times = []
    heights = []
    t = 0.0
    x = 0.0
    mx = 0.0
    next_jump = t + rng.exponential(1.0 / rate) if rate > 0.0 else math.inf
    while t < cfg.horizon:
        seg_end = min(next_jump, cfg.horizon)
        while t < seg_end:
            step = min(cfg.dt, seg_end - t)
            if t + step == t:
                t = seg_end
                break
            if sig2 > 0.0:
                x1 = x + b * step + sig * math.sqrt(step) * rng.standard_normal()
            else:
                x1 = x + b * step
            t += step
            if x1 > mx:
                times.append(t)
                heights.append(float(x1 - mx))
                mx = float(x1)
            x = float(x1)
        if t >= cfg.horizon:
            break
        x += float(spec.sampler.draw(rng, 1)[0])
        if x > mx:
            times.append(t)
            heights.append(float(x - mx))
            mx = float(x)
        next_jump = t + rng.exponential(1.0 / rate)
    return times, heights
