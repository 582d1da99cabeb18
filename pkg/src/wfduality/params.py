"""Parameter bundles for the scaling-limit and finite-population models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InfiniteJumpIntensity, ModelError
from .measures import FiniteMeasure, SelectionKernel, derive_env_measure


@dataclass(frozen=True)
class LimitParams:
    """Parameters of the limit pair: the two-type jump-diffusion X and its
    branching-coalescing dual Z.

    The selection environment measure is always derived from
    (kernel, lambda_s); it is never stored independently.
    """

    kernel: SelectionKernel
    lambda_s: FiniteMeasure
    w: float
    lambda_c: FiniteMeasure
    c: float
    sigma: float

    def __post_init__(self):
        if min(self.w, self.c, self.sigma) < 0:
            raise ModelError("w, c, sigma must be nonnegative")
        if self.lambda_c.has_atom_at(0.0):
            raise ModelError("coalescence measure must not charge 0")
        # validates admissibility (no atom at 0, mean excess positive)
        mu = derive_env_measure(self.kernel, self.lambda_s)
        if mu.total_mass + self.w + self.c + self.sigma <= 0:
            raise ModelError("degenerate model: no selection and no drift")

    @cached_property
    def mu(self) -> FiniteMeasure:
        """Selection-event environment measure (rate measure of selection jumps)."""
        return derive_env_measure(self.kernel, self.lambda_s)

    @property
    def mu_mass(self) -> float:
        return self.mu.total_mass

    @property
    def alpha_s(self) -> float:
        return self.lambda_s.total_mass

    @cached_property
    def merger_law(self) -> FiniteMeasure | None:
        """Size-biased coalescence law: z^{-2} Lambda_c, unnormalised.

        Its total mass divided into ``c`` gives the coalescence jump rate;
        the normalised version is the law of the merger strength V.
        """
        lc = self.lambda_c
        if lc.total_mass == 0:
            return None
        weights = lc.weights / lc.locations**2
        if not np.all(np.isfinite(weights)):
            raise InfiniteJumpIntensity("z^{-2} Lambda_c has infinite mass")
        return FiniteMeasure(lc.locations, weights, kind=lc.kind,
                             node_count=lc.node_count)

    @property
    def coalescence_rate(self) -> float:
        """Total rate c * integral of z^{-2} Lambda_c(dz)."""
        law = self.merger_law
        rate = self.c * (law.total_mass if law is not None else 0.0)
        if not math.isfinite(rate):
            raise InfiniteJumpIntensity("coalescence jump intensity is infinite")
        return rate


@dataclass(frozen=True)
class FiniteModelParams:
    """Finite-N Wright-Fisher graph with selection in random environment and
    multiple mergers."""

    N: int
    kernel: SelectionKernel
    env_law: FiniteMeasure  # probability measure; values may use the signed
    # weak-selection encoding (y < 0 means geometric with parameter -y)
    c_N: float = 0.0
    lambda_c: FiniteMeasure | None = None

    def __post_init__(self):
        if self.N < 2:
            raise ModelError("population size must be >= 2")
        if abs(self.env_law.total_mass - 1.0) > 1e-9:
            raise ModelError("environment law must be a probability measure")
        if not 0.0 <= self.c_N <= 1.0:
            raise ModelError("c_N must lie in [0,1]")
        if self.c_N > 0:
            if self.lambda_c is None or self.lambda_c.total_mass == 0:
                raise ModelError("c_N > 0 requires a coalescence measure")
            if self.lambda_c.has_atom_at(0.0):
                raise ModelError("coalescence measure must not charge 0")
            w = self.lambda_c.weights / self.lambda_c.locations**2
            if not np.all(np.isfinite(w)):
                raise InfiniteJumpIntensity(
                    "z^{-2} Lambda_c must have finite mass at finite N"
                )

    @cached_property
    def merger_strength_law(self) -> FiniteMeasure | None:
        """Normalised law of the merger strength V given a merger occurs."""
        if self.c_N == 0 or self.lambda_c is None:
            return None
        weights = self.lambda_c.weights / self.lambda_c.locations**2
        return FiniteMeasure(
            self.lambda_c.locations, weights, kind=self.lambda_c.kind,
            node_count=self.lambda_c.node_count,
        ).normalized()
