"""Selection kernels, finite measures on [0,1], and their generating functions.

A selection kernel assigns to every environment value y in [0,1] a law Q(y)
for the number of potential parents an individual draws, supported on
{1, 2, ...} with optional mass at infinity.  Three variants are provided:

* ``geometric``: Q(y) = Geo(1-y) on {1,2,...}, with Q(1) the point mass at
  infinity,
* ``binary``:    Q(y) = (1-y) d_1 + y d_2,
* ``table``:     Q(y) = (1-y) d_1 + y * base, where ``base`` is a fixed
  finite pmf on {1,...,K} plus an optional atom at infinity.  The y-mixture
  form guarantees Q(0) = d_1 and Q(y) != d_1 for y > 0 whenever the base
  pmf is not d_1 itself.

Finite measures are either atomic or density-backed; density measures are
reduced at construction to a fixed composite midpoint rule with a recorded
node count, so every downstream integral is a plain weighted sum and results
are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateKernelAtAtom, ModelError, NonFiniteIntegrand

#: Sentinel for an infinite parent count in integer samples.
INF_K = np.iinfo(np.int64).max


# ---------------------------------------------------------------------------
# Selection kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionKernel:
    """Family {Q(y) : y in [0,1]} of potential-parent-count laws."""

    variant: str  # "geometric" | "binary" | "table"
    table_values: tuple[int, ...] = ()
    table_probs: tuple[float, ...] = ()
    table_inf_mass: float = 0.0

    def __post_init__(self):
        if self.variant not in ("geometric", "binary", "table"):
            raise ModelError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "table":
            total = sum(self.table_probs) + self.table_inf_mass
            if abs(total - 1.0) > 1e-12:
                raise ModelError("table kernel base pmf must sum to 1")
            if any(k < 1 for k in self.table_values):
                raise ModelError("table kernel support must be >= 1")
            if any(p <= 0 for p in self.table_probs) or self.table_inf_mass < 0:
                raise ModelError("table kernel probabilities must be positive")

    # -- constructors --------------------------------------------------

    @staticmethod
    def geometric() -> "SelectionKernel":
        return SelectionKernel("geometric")

    @staticmethod
    def binary() -> "SelectionKernel":
        return SelectionKernel("binary")

    @staticmethod
    def table(pmf: dict[int, float], inf_mass: float = 0.0) -> "SelectionKernel":
        items = sorted(pmf.items())
        return SelectionKernel(
            "table",
            table_values=tuple(k for k, _ in items),
            table_probs=tuple(p for _, p in items),
            table_inf_mass=inf_mass,
        )

    # -- queries ---------------------------------------------------------

    def inf_mass(self, y: float) -> float:
        """Mass Q(y)({infinity})."""
        if self.variant == "geometric":
            return 1.0 if y >= 1.0 else 0.0
        if self.variant == "binary":
            return 0.0
        return y * self.table_inf_mass

    def sample(self, y: float, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw parent counts; infinite draws are returned as INF_K."""
        if self.variant == "geometric":
            if y >= 1.0:
                return np.full(size, INF_K, dtype=np.int64)
            if y <= 0.0:
                return np.ones(size, dtype=np.int64)
            return rng.geometric(1.0 - y, size=size).astype(np.int64)
        if self.variant == "binary":
            return (1 + (rng.random(size) < y)).astype(np.int64)
        # table: mixture (1-y) d_1 + y base
        out = np.ones(size, dtype=np.int64)
        hit = rng.random(size) < y
        n_hit = int(hit.sum())
        if n_hit:
            vals = np.array(self.table_values + (INF_K,), dtype=np.int64)
            probs = np.array(self.table_probs + (self.table_inf_mass,))
            out[hit] = rng.choice(vals, size=n_hit, p=probs / probs.sum())
        return out


def pgf(kernel: SelectionKernel, y: float, x: float) -> float:
    """Probability generating function E[x^{K_y}].

    The infinity atom contributes only at x = 1 (convention x^inf = 0 for
    x < 1, = 1 for x = 1).  Environment values y < 0 encode the weak
    selection mechanism: a geometric kernel with parameter -y, whatever the
    nominal variant.
    """
    return float(pgf_many(kernel, np.asarray(y, dtype=float), np.asarray(x, dtype=float)))


def pgf_many(kernel: SelectionKernel, y, x) -> np.ndarray:
    """Vectorised pgf; broadcasts y against x."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    y, x = np.broadcast_arrays(y, x)
    out = np.empty(y.shape)
    neg = y < 0
    if neg.any():  # weak-selection encoding: geometric with parameter -y
        out[neg] = _pgf_geometric(-y[neg], x[neg])
    pos = ~neg
    if pos.any():
        yp, xp = y[pos], x[pos]
        if kernel.variant == "geometric":
            out[pos] = _pgf_geometric(yp, xp)
        elif kernel.variant == "binary":
            out[pos] = (1.0 - yp) * xp + yp * xp * xp
        else:
            base = np.zeros_like(xp)
            for k, p in zip(kernel.table_values, kernel.table_probs):
                base += p * xp**k
            base += kernel.table_inf_mass * (xp == 1.0)
            out[pos] = (1.0 - yp) * xp + yp * base
    return out


def _pgf_geometric(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.empty(y.shape)
    deg = y >= 1.0  # point mass at infinity
    out[deg] = (x[deg] == 1.0).astype(float)
    reg = ~deg
    out[reg] = x[reg] * (1.0 - y[reg]) / (1.0 - x[reg] * y[reg])
    return out


def mean_excess(kernel: SelectionKernel, y: float) -> float:
    """m(y) = E[K_y] - 1; +inf when Q(y) charges infinity."""
    if y < 0:  # weak-selection encoding
        y = -y
        return math.inf if y >= 1.0 else y / (1.0 - y)
    if kernel.variant == "geometric":
        return math.inf if y >= 1.0 else y / (1.0 - y)
    if kernel.variant == "binary":
        return y
    if kernel.table_inf_mass > 0 and y > 0:
        return math.inf
    base_mean = sum(k * p for k, p in zip(kernel.table_values, kernel.table_probs))
    return y * (base_mean - 1.0)


@dataclass(frozen=True)
class SumPMF:
    """Truncated law of the sum of n iid parent counts at environment y.

    ``probs[k]`` is P(sum = n + k) for k = 0..k_max; ``tail`` is everything
    beyond n + k_max, including any mass at infinity.
    """

    n: int
    probs: np.ndarray
    tail: float

    @property
    def pmf(self) -> dict[int, float]:
        return {self.n + k: float(p) for k, p in enumerate(self.probs) if p > 0}


def sum_distribution(kernel: SelectionKernel, y: float, n: int, k_max: int) -> SumPMF:
    """Law of K_{y,1} + ... + K_{y,n}, truncated at n + k_max."""
    if n < 1:
        raise ModelError("n must be >= 1")
    ks = np.arange(k_max + 1)
    if y < 0:
        y, variant = -y, "geometric"
    else:
        variant = kernel.variant
    if variant == "geometric":
        if y >= 1.0:
            probs = np.zeros(k_max + 1)
            return SumPMF(n, probs, 1.0)
        if y <= 0.0:
            probs = np.zeros(k_max + 1)
            probs[0] = 1.0
            return SumPMF(n, probs, 0.0)
        probs = stats.nbinom.pmf(ks, n, 1.0 - y)
    elif variant == "binary":
        probs = stats.binom.pmf(ks, n, y)
        probs = np.where(ks <= n, probs, 0.0)
    else:
        probs = _table_sum_pmf(kernel, y, n, k_max)
    tail = max(0.0, 1.0 - float(probs.sum()))
    return SumPMF(n, probs, tail)


def _table_sum_pmf(kernel: SelectionKernel, y: float, n: int, k_max: int) -> np.ndarray:
    # finite part of one draw: pmf over counts 1..K_top
    k_top = max(kernel.table_values) if kernel.table_values else 1
    single = np.zeros(k_top + 1)
    single[1] = 1.0 - y
    for k, p in zip(kernel.table_values, kernel.table_probs):
        single[k] += y * p
    # n-fold convolution, truncated to sums <= n + k_max
    acc = np.ones(1)
    offset = 0  # acc[i] = P(partial sum = offset + i), minimum grows by 1 per draw
    for _ in range(n):
        acc = np.convolve(acc, single[1:])
        offset += 1
        if acc.size > k_max + 1:
            acc = acc[: k_max + 1]
    probs = np.zeros(k_max + 1)
    probs[: acc.size] = acc
    return probs


# ---------------------------------------------------------------------------
# Finite measures on [0,1]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteMeasure:
    """Finite measure on [0,1], atomic or quadrature-backed.

    Density measures are discretised once, at construction, by a composite
    midpoint rule with ``node_count`` nodes; the node weights are rescaled so
    their sum equals the requested total mass exactly.
    """

    locations: np.ndarray
    weights: np.ndarray
    kind: str = "atomic"  # "atomic" | "density"
    node_count: int = 0
    _allow_negative: bool = field(default=False, repr=False)

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)
        lo = -1.0 if self._allow_negative else 0.0
        if locs.size != w.size:
            raise ModelError("locations and weights must have equal length")
        if locs.size and (locs.min() < lo or locs.max() > 1.0):
            raise ModelError("measure locations must lie in [0,1]")
        if (w <= 0).any():
            raise ModelError("measure weights must be strictly positive")

    @staticmethod
    def atomic(atoms) -> "FiniteMeasure":
        """Build from an iterable of (location, weight) pairs."""
        atoms = list(atoms)
        return FiniteMeasure(
            np.array([a[0] for a in atoms]), np.array([a[1] for a in atoms])
        )

    @staticmethod
    def point_mass(y: float, mass: float = 1.0) -> "FiniteMeasure":
        return FiniteMeasure.atomic([(y, mass)])

    @staticmethod
    def from_density(fn, mass: float, nodes: int = 256) -> "FiniteMeasure":
        """Composite midpoint discretisation of ``fn`` on [0,1].

        ``fn`` is a shape function; weights are rescaled so that the total
        mass equals ``mass`` exactly.
        """
        if nodes < 1:
            raise ModelError("node count must be >= 1")
        h = 1.0 / nodes
        locs = (np.arange(nodes) + 0.5) * h
        raw = np.array([float(fn(t)) for t in locs]) * h
        if not np.all(np.isfinite(raw)) or (raw < 0).any():
            raise ModelError("density must be finite and nonnegative on nodes")
        total = raw.sum()
        if total <= 0:
            raise ModelError("density has zero mass")
        return FiniteMeasure(locs, raw * (mass / total), kind="density", node_count=nodes)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def has_atom_at(self, y: float) -> bool:
        return bool(self.kind == "atomic" and np.any(self.locations == y))

    def normalized(self) -> "FiniteMeasure":
        return FiniteMeasure(
            self.locations,
            self.weights / self.total_mass,
            kind=self.kind,
            node_count=self.node_count,
            _allow_negative=self._allow_negative,
        )

    def scaled(self, factor: float) -> "FiniteMeasure":
        return FiniteMeasure(
            self.locations,
            self.weights * factor,
            kind=self.kind,
            node_count=self.node_count,
            _allow_negative=self._allow_negative,
        )

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw locations from the normalised measure."""
        cum = np.cumsum(self.weights)
        cum /= cum[-1]
        return self.locations[np.searchsorted(cum, rng.random(size))]


def integrate(measure: FiniteMeasure, f) -> float:
    """Integral of ``f`` against the measure (exact sum for atomic measures,
    the fixed quadrature rule for density measures)."""
    vals = np.array([float(f(y)) for y in measure.locations])
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand is not finite on the measure support")
    return float(np.dot(vals, measure.weights))


def check_master_condition(kernel: SelectionKernel, lambda_s: FiniteMeasure) -> float:
    """Admissibility check for a selection pair (kernel, Lambda_s).

    The selection environment law has density 1/m(y) with respect to
    Lambda_s on (0,1], so the integral of m against it collapses to the
    total mass of Lambda_s; admissibility reduces to Lambda_s being finite,
    carrying no atom at 0, and m(y) > 0 on its support.  Returns the total
    mass of Lambda_s.
    """
    if lambda_s.has_atom_at(0.0):
        raise DegenerateKernelAtAtom("selection measure must not charge 0")
    for y in lambda_s.locations:
        if mean_excess(kernel, float(y)) == 0.0:
            raise DegenerateKernelAtAtom(
                f"kernel is degenerate (mean excess 0) at y={y}"
            )
    return lambda_s.total_mass


def derive_env_measure(kernel: SelectionKernel, lambda_s: FiniteMeasure) -> FiniteMeasure:
    """Selection-event environment measure: density 1/m(y) w.r.t. Lambda_s.

    Points where m(y) is infinite carry zero weight and are dropped.
    """
    check_master_condition(kernel, lambda_s)
    locs, ws = [], []
    for y, w in zip(lambda_s.locations, lambda_s.weights):
        m = mean_excess(kernel, float(y))
        if math.isinf(m):
            continue
        locs.append(float(y))
        ws.append(float(w) / m)
    if not locs:
        return FiniteMeasure(np.empty(0), np.empty(0), kind=lambda_s.kind,
                             node_count=lambda_s.node_count)
    return FiniteMeasure(
        np.array(locs), np.array(ws), kind=lambda_s.kind, node_count=lambda_s.node_count
    )
