"""Jump-diffusion simulation of the weak-allele frequency limit process.

The process lives on [0,1] and combines four mechanisms:

* selection shocks at rate |mu|: draw y from the normalised environment
  measure and jump x -> pgf_y(x),
* coalescence shocks at rate c * |z^{-2} Lambda_c|: draw a merger strength z
  and jump x -> x(1-z) + z with probability x, else x -> x(1-z),
* weak-selection drift -w x(1-x) dt,
* neutral diffusion sqrt(sigma x(1-x)) dB.

Both jump intensities are finite, so jumps are placed exactly; drift and
diffusion are Euler-stepped on a uniform dt grid, with jumps applied after
the cell's Euler move.  0 and 1 are absorbing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStep
from .measures import pgf, pgf_many
from .params import LimitParams
from .rngstreams import batches, parallel_map, pooled_mean_se, stream

#: Snap-to-boundary tolerance: Euler noise may overshoot [0,1] slightly, so
#: a state this close to a boundary is treated as exactly absorbed.
ABSORB_EPS = 1e-12


@dataclass
class PathX:
    """Single path on a uniform time grid, with a log of applied jumps."""

    times: np.ndarray
    values: np.ndarray
    jumps: list  # (time, kind, pre, post) with kind in {selection, coalescence}


def _grid(T: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise InvalidStep("dt must be positive")
    if T < 0:
        raise InvalidStep("horizon must be nonnegative")
    n_cells = int(math.ceil(T / dt - 1e-9)) if T > 0 else 0
    times = np.minimum(np.arange(n_cells + 1) * dt, T)
    return times


def _snap(x: float) -> float:
    if x <= ABSORB_EPS:
        return 0.0
    if x >= 1.0 - ABSORB_EPS:
        return 1.0
    return x


def _jump_times(rate: float, T: float, rng: np.random.Generator) -> list[float]:
    out = []
    if rate <= 0:
        return out
    t = rng.exponential(1.0 / rate)
    while t < T:
        out.append(t)
        t += rng.exponential(1.0 / rate)
    return out


def simulate_path(params: LimitParams, x0: float, T: float, dt: float,
                  rng: np.random.Generator) -> PathX:
    """One path of the limit process on the dt grid, jumps placed exactly."""
    if not 0.0 <= x0 <= 1.0:
        raise InvalidStep("x0 must lie in [0,1]")
    times = _grid(T, dt)
    mu = params.mu
    mu_mass = mu.total_mass
    lam_c = params.coalescence_rate
    events = [(t, "selection") for t in _jump_times(mu_mass, T, rng)]
    events += [(t, "coalescence") for t in _jump_times(lam_c, T, rng)]
    events.sort()
    ev = 0

    x = _snap(x0)
    values = np.empty(times.size)
    values[0] = x
    jumps = []
    for i in range(1, times.size):
        t0, t1 = times[i - 1], times[i]
        if 0.0 < x < 1.0:
            h = t1 - t0
            x = x - params.w * x * (1.0 - x) * h
            if params.sigma > 0:
                x += math.sqrt(max(params.sigma * x * (1.0 - x) * h, 0.0)) \
                    * rng.standard_normal()
            x = _snap(min(max(x, 0.0), 1.0))
        while ev < len(events) and events[ev][0] <= t1:
            t_ev, kind = events[ev]
            ev += 1
            pre = x
            if kind == "selection":
                y = float(mu.sample(1, rng)[0])
                x = pgf(params.kernel, y, x)
                assert x <= pre + 1e-12, "selection jump increased the frequency"
            else:
                z = float(params.merger_law.sample(1, rng)[0])
                x = x * (1.0 - z) + (z if rng.random() < x else 0.0)
                assert -1e-12 <= x <= 1.0 + 1e-12, "coalescence jump left [0,1]"
            x = _snap(min(max(x, 0.0), 1.0))
            if x != pre:
                jumps.append((float(t_ev), kind, pre, x))
        values[i] = x
    return PathX(times, values, jumps)


# ---------------------------------------------------------------------------
# Vectorised ensemble engine
# ---------------------------------------------------------------------------


def _step_cell(params: LimitParams, x: np.ndarray, h: float,
               rng: np.random.Generator, mu_mass: float, lam_c: float) -> np.ndarray:
    """Advance every replicate by one dt cell: Euler move, then jumps."""
    inner = x * (1.0 - x)
    if params.w > 0:
        x = x - params.w * inner * h
    if params.sigma > 0:
        x = x + np.sqrt(np.maximum(params.sigma * inner * h, 0.0)) \
            * rng.standard_normal(x.size)
    np.clip(x, 0.0, 1.0, out=x)
    x[x <= ABSORB_EPS] = 0.0
    x[x >= 1.0 - ABSORB_EPS] = 1.0

    if mu_mass > 0:
        k = rng.poisson(mu_mass * h, x.size)
        while True:
            hit = k > 0
            n_hit = int(hit.sum())
            if n_hit == 0:
                break
            y = params.mu.sample(n_hit, rng)
            x[hit] = pgf_many(params.kernel, y, x[hit])
            k[hit] -= 1
    if lam_c > 0:
        law = params.merger_law
        k = rng.poisson(lam_c * h, x.size)
        while True:
            hit = k > 0
            n_hit = int(hit.sum())
            if n_hit == 0:
                break
            z = law.sample(n_hit, rng)
            up = rng.random(n_hit) < x[hit]
            x[hit] = x[hit] * (1.0 - z) + z * up
            k[hit] -= 1
    x[x <= ABSORB_EPS] = 0.0
    x[x >= 1.0 - ABSORB_EPS] = 1.0
    return x


def ensemble_states(params: LimitParams, x0: float, times, dt: float, M: int,
                    seed: int, workers: int = 1) -> np.ndarray:
    """States of M independent paths at each requested time.

    Returns an array of shape (len(times), M).  Each requested time is
    snapped to the nearest dt-cell boundary.  Replicates are split into
    fixed-size batches with one counter-based stream per batch, so results
    do not depend on worker count.
    """
    if dt <= 0:
        raise InvalidStep("dt must be positive")
    if not 0.0 <= x0 <= 1.0:
        raise InvalidStep("x0 must lie in [0,1]")
    times = np.asarray(times, dtype=float)
    record = {}
    for pos, t in enumerate(times):
        record.setdefault(int(round(t / dt)), []).append(pos)
    n_cells = max(record) if record else 0
    mu_mass = params.mu.total_mass
    lam_c = params.coalescence_rate

    def run(batch):
        idx, size = batch
        rng = stream(seed, idx)
        x = np.full(size, _snap(x0))
        out = np.empty((times.size, size))
        for pos in record.get(0, []):
            out[pos] = x
        for cell in range(1, n_cells + 1):
            x = _step_cell(params, x, dt, rng, mu_mass, lam_c)
            for pos in record.get(cell, []):
                out[pos] = x
        return out

    parts = parallel_map(run, batches(M), workers)
    return np.concatenate(parts, axis=1)


def moment_estimate(params: LimitParams, x0: float, n: int, t: float, M: int,
                    dt: float, seed: int, workers: int = 1) -> tuple[float, float]:
    """Monte Carlo estimate and SE of the n-th moment of the state at time t."""
    if n < 0:
        raise InvalidStep("moment order must be nonnegative")
    if t == 0:
        return x0**n, 0.0
    finals = ensemble_states(params, x0, [t], dt, M, seed, workers)[0]
    vals = finals**n
    # per-batch statistics in batch order for a deterministic reduction
    offset = 0
    counts, means, m2s = [], [], []
    for _, size in batches(M):
        chunk = vals[offset:offset + size]
        offset += size
        m = float(chunk.mean())
        counts.append(size)
        means.append(m)
        m2s.append(float(((chunk - m) ** 2).sum()))
    return pooled_mean_se(counts, means, m2s)


@dataclass
class AbsorptionScan:
    """Fractions of paths absorbed at each boundary by a fixed horizon."""

    fraction_at_0: float
    fraction_at_1: float
    fraction_interior: float
    replicates: int

    def se_at_0(self) -> float:
        p = self.fraction_at_0
        return math.sqrt(p * (1.0 - p) / self.replicates)

    def se_at_1(self) -> float:
        p = self.fraction_at_1
        return math.sqrt(p * (1.0 - p) / self.replicates)


def absorption_scan(params: LimitParams, x0: float, T: float, M: int, dt: float,
                    seed: int, workers: int = 1,
                    eps0: float = 1e-4) -> AbsorptionScan:
    """Classify M paths at time T as 0-absorbed, 1-absorbed, or interior."""
    finals = ensemble_states(params, x0, [T], dt, M, seed, workers)[0]
    at0 = float((finals <= eps0).mean())
    at1 = float((finals >= 1.0 - eps0).mean())
    return AbsorptionScan(at0, at1, 1.0 - at0 - at1, M)
