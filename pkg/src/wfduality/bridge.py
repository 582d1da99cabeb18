"""Cross-process analyses linking the simulators and the thresholds.

In the survival regime the dual chain is positive recurrent and the
generating function of its stationary law equals the fixation probability
of the weak allele: phi_nu(x) = P_x(X reaches 1).  This module estimates
both sides independently and compares them; in the extinction regime it
tracks the absorption fraction at 0 across growing horizons together with
the matching escape-to-infinity statistic of the dual chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bcre, fvwrs, thresholds
from .errors import RegimeMismatch, StateExplosionGuard
from .params import LimitParams
from .rngstreams import batches, parallel_map, stream

STAT_STREAM = 2**40  # stream index base for the stationary-law path
SIM_STREAM = 2**41   # stream seed offset per grid point for forward runs


@dataclass(frozen=True)
class FixationReport:
    x_grid: np.ndarray
    predicted: np.ndarray       # phi_nu_hat(x)
    simulated: np.ndarray       # absorption fraction at 1
    simulated_se: np.ndarray
    z_scores: np.ndarray
    stationary_tv: float
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "x_grid": self.x_grid.tolist(),
            "predicted": self.predicted.tolist(),
            "simulated": self.simulated.tolist(),
            "simulated_se": self.simulated_se.tolist(),
            "z_scores": self.z_scores.tolist(),
            "stationary_tv": self.stationary_tv,
            "params": self.params,
        }


def fixation_via_duality(params: LimitParams, x_grid, seed: int,
                         M: int = 20000, T: float = 8.0, dt: float = 1e-3,
                         burn_in: float = 50.0, T_stat: float = 5000.0,
                         workers: int = 1) -> FixationReport:
    """Predicted vs simulated fixation probabilities on a grid.

    Requires the survival regime; the prediction is the generating function
    of the occupation-time estimate of the dual chain's stationary law, the
    simulation is the absorption fraction at 1 of the forward process by
    horizon T.
    """
    report = thresholds.classify(params)
    if report.classification != thresholds.SURVIVAL:
        raise RegimeMismatch(
            f"fixation analysis needs the survival regime, got "
            f"{report.classification}"
        )
    x_grid = np.asarray(x_grid, dtype=float)
    nu = bcre.stationary_estimate(params, 1, burn_in, T_stat,
                                  stream(seed, STAT_STREAM))
    predicted = np.asarray(nu.pgf(x_grid))
    assert (np.diff(nu.pgf(np.linspace(0, 1, 21))) >= -1e-12).all(), \
        "stationary pgf must be nondecreasing"
    assert abs(nu.pgf(1.0) - 1.0) < 1e-9, "stationary pgf must be 1 at x=1"

    sims = np.empty(x_grid.size)
    ses = np.empty(x_grid.size)
    for i, x in enumerate(x_grid):
        scan = fvwrs.absorption_scan(params, float(x), T, M, dt,
                                     seed + SIM_STREAM + i, workers)
        sims[i] = scan.fraction_at_1
        ses[i] = scan.se_at_1()
    zs = np.where(ses > 0, (predicted - sims) / np.maximum(ses, 1e-300), 0.0)
    return FixationReport(x_grid, predicted, sims, ses, zs, nu.half_sample_tv,
                          {"M": M, "T": T, "dt": dt, "burn_in": burn_in,
                           "T_stat": T_stat})


@dataclass(frozen=True)
class ExtinctionTable:
    horizons: np.ndarray
    fraction_at_0: np.ndarray
    fraction_se: np.ndarray
    dual_small_prob: np.ndarray     # P(Z(T) <= M0) per horizon
    dual_small_se: np.ndarray
    M0: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "horizons": self.horizons.tolist(),
            "fraction_at_0": self.fraction_at_0.tolist(),
            "fraction_se": self.fraction_se.tolist(),
            "dual_small_prob": self.dual_small_prob.tolist(),
            "dual_small_se": self.dual_small_se.tolist(),
            "M0": self.M0,
            "params": self.params,
        }


def _dual_small_prob(params: LimitParams, n0: int, T: float, M0: int, M: int,
                     seed: int, workers: int = 1) -> tuple[float, float]:
    """Monte Carlo of P(Z(T) <= M0) for the dual chain started at n0.

    In the extinction regime the chain is transient, so paths are cut off at
    an escape threshold well above M0 and counted as not small; the return
    probability from there is negligible and simulating the full excursion
    would be quadratic in the peak state.
    """
    escape = max(1000, 100 * M0)

    def run(batch):
        idx, size = batch
        rng = stream(seed, idx)
        cache = bcre.RateCache(params)
        hits = 0
        for _ in range(size):
            try:
                if bcre.final_state(params, n0, T, rng, cache,
                                    ceiling=escape) <= M0:
                    hits += 1
            except StateExplosionGuard:
                pass
        return size, hits

    parts = parallel_map(run, batches(M), workers)
    total = sum(s for s, _ in parts)
    hits = sum(h for _, h in parts)
    p = hits / total
    return p, math.sqrt(p * (1.0 - p) / total)


def extinction_corroboration(params: LimitParams, x: float, T_list, M: int,
                             seed: int, dt: float = 1e-3, M0: int = 10,
                             n0: int = 1, dual_M: int = 2000,
                             workers: int = 1) -> ExtinctionTable:
    """Absorption fractions at 0 across horizons, with the dual companion.

    Requires the extinction regime.  The forward fractions should increase
    toward 1; the dual chain's probability of staying small should fall.
    """
    report = thresholds.classify(params)
    if report.classification != thresholds.EXTINCTION:
        raise RegimeMismatch(
            f"extinction analysis needs the extinction regime, got "
            f"{report.classification}"
        )
    horizons = np.asarray(sorted(T_list), dtype=float)
    fr = np.empty(horizons.size)
    fr_se = np.empty(horizons.size)
    scans = fvwrs.ensemble_states(params, x, horizons, dt, M, seed, workers)
    for i in range(horizons.size):
        p = float((scans[i] <= 1e-4).mean())
        fr[i] = p
        fr_se[i] = math.sqrt(p * (1.0 - p) / M)
    dz = np.empty(horizons.size)
    dz_se = np.empty(horizons.size)
    for i, T in enumerate(horizons):
        dz[i], dz_se[i] = _dual_small_prob(params, n0, float(T), M0, dual_M,
                                           seed + SIM_STREAM + i, workers)
    return ExtinctionTable(horizons, fr, fr_se, dz, dz_se, M0,
                           {"x": x, "M": M, "dt": dt, "dual_M": dual_M,
                            "n0": n0})
