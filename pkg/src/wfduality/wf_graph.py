"""Exact finite-N Wright-Fisher graph simulation.

Forward direction: the 0-allele frequency chain.  Conditionally on the
generation's environment y, merger strength V and central-individual type b,
children are iid and each is of type 0 iff all of its potential parents are,
each parent independently of type 0 with probability (1-V)x + V(1-b).  The
next-generation 0-count is therefore Binomial(N, pgf_y(p)) with
p = (1-V)x + V(1-b), which we sample directly instead of materialising
parent lists.

Backward direction: the block-counting chain of the ancestry.  Distinct
parent labels matter here, so labels are sampled explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measures import INF_K, FiniteMeasure, pgf_many
from .params import FiniteModelParams

#: Per-lineage parent-count cap, as a multiple of N. A draw above the cap is
#: treated as reaching every label (saturation), recorded in path metadata.
K_CAP_FACTOR = 8


@dataclass(frozen=True)
class EnvSequence:
    """One environment value per generation, plus seed provenance."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.size and (vals.min() < -1.0 or vals.max() > 1.0):
            raise ValueError("environment values must lie in [-1,1]")

    def __len__(self) -> int:
        return len(self.values)


def draw_env(env_law: FiniteMeasure, length: int, rng: np.random.Generator,
             provenance: dict | None = None) -> EnvSequence:
    return EnvSequence(env_law.sample(length, rng), provenance or {})


@dataclass
class FrequencyPath:
    values: np.ndarray  # frequencies in {0, 1/N, ..., 1}, length len(env)+1
    env: EnvSequence


@dataclass
class BlockCountPath:
    values: np.ndarray  # block counts in {1,...,N}, length len(env)+1
    env: EnvSequence
    saturations: int = 0  # parent-count cap hits


# ---------------------------------------------------------------------------
# Forward frequency chain
# ---------------------------------------------------------------------------


def _merger_draw(params: FiniteModelParams, x, rng, size: int):
    """Per-replicate parent-success probability adjustment for mergers.

    Returns the type-0 probability p seen by each child's parent picks:
    (1-V)x + V(1-b), where V = 0 when no merger occurs.
    """
    x = np.asarray(x, dtype=float)
    p = x.copy()
    if params.c_N > 0:
        hit = rng.random(size) < params.c_N
        n_hit = int(hit.sum())
        if n_hit:
            v = params.merger_strength_law.sample(n_hit, rng)
            central_is_0 = rng.random(n_hit) < x[hit]
            p[hit] = (1.0 - v) * x[hit] + v * central_is_0
    return p


def step_frequency(params: FiniteModelParams, x: float, y: float,
                   rng: np.random.Generator) -> float:
    """One forward generation from frequency x under environment y."""
    return float(step_frequency_many(params, np.array([x]), y, rng)[0])


def step_frequency_many(params: FiniteModelParams, x: np.ndarray, y,
                        rng: np.random.Generator) -> np.ndarray:
    """One forward generation for a vector of independent replicates.

    ``y`` may be a scalar (shared environment, quenched) or a per-replicate
    array (annealed).
    """
    x = np.asarray(x, dtype=float)
    p = _merger_draw(params, x, rng, x.size)
    succ = pgf_many(params.kernel, y, p)
    counts = rng.binomial(params.N, succ)
    return counts / params.N


def simulate_frequency(params: FiniteModelParams, x0: float, env: EnvSequence,
                       rng: np.random.Generator) -> FrequencyPath:
    """Forward chain over len(env) generations, env consumed in order."""
    x = x0
    out = np.empty(len(env) + 1)
    out[0] = x
    for g, y in enumerate(env.values):
        x = step_frequency(params, x, float(y), rng)
        out[g + 1] = x
    return FrequencyPath(out, env)


# ---------------------------------------------------------------------------
# Backward block-counting chain
# ---------------------------------------------------------------------------


def step_ancestry(params: FiniteModelParams, n: int, y: float,
                  rng: np.random.Generator) -> tuple[int, bool]:
    """One backward generation from n lineages under environment y.

    Returns (distinct parent labels, saturated).  A lineage whose parent
    count exceeds the cap (or is infinite) is treated as reaching all N
    labels; the step then saturates at N.
    """
    N = params.N
    ks = params.kernel.sample(y, n, rng)
    cap = K_CAP_FACTOR * N
    if (ks >= cap).any() or (ks == INF_K).any():
        return N, True
    total = int(ks.sum())
    to_central = 0
    central = -1
    if params.c_N > 0 and rng.random() < params.c_N:
        v = float(params.merger_strength_law.sample(1, rng)[0])
        central = int(rng.integers(N))
        to_central = int(rng.binomial(total, v))
    labels = rng.integers(0, N, size=total - to_central)
    if to_central > 0:
        labels = np.append(labels, central)
    distinct = int(np.unique(labels).size)
    return min(distinct, N), False


def simulate_ancestry(params: FiniteModelParams, n0: int, env: EnvSequence,
                      rng: np.random.Generator) -> BlockCountPath:
    """Backward chain over len(env) generations, env consumed in reverse."""
    if n0 < 1 or n0 > params.N:
        raise ValueError("sample size must lie in [1, N]")
    n = n0
    out = np.empty(len(env) + 1, dtype=np.int64)
    out[0] = n
    saturations = 0
    for g, y in enumerate(env.values[::-1]):
        n, sat = step_ancestry(params, n, float(y), rng)
        saturations += sat
        out[g + 1] = n
    return BlockCountPath(out, env, saturations)
