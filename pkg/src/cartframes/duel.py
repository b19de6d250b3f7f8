"""Two optimizers pulling one continuous environment index.

The environment has k discrete states; the shared state is a real index
n in [1, k] whose fractional part splits probability between the two
adjacent states (``encode_state``). Each optimizer carries a one-hot
preference vector picking its zero-cost state; cost is the distance
|n - preferred|. Per update each optimizer contributes a pull toward its
preferred state and the influence weight xi in [0, 1] mixes the two:

    n' = clamp(n + xi * d1 + (1 - xi) * d2, 1, k)

Two pull rules exist. The default "attraction" rule d_i = eta * (n*_i - n)
keeps the dynamics alive everywhere; the alternative "dot" rule scales the
pull by the preference/encoding overlap, which is zero once n is a full
index away from the preferred state (kept for comparison, selected via
``DuelConfig.rule``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

RULES = ("attraction", "dot")


def preferred_index(p: Sequence[float]) -> int:
    """1-based index of the single 1 in a one-hot preference vector."""
    vec = [float(x) for x in p]
    if sorted(vec) != [0.0] * (len(vec) - 1) + [1.0]:
        raise ValidationError(f"preference vector must be one-hot, got {list(p)!r}")
    return vec.index(1.0) + 1


def encode_state(n: float, k: int) -> np.ndarray:
    """Fractional one-hot encoding: the decimal part shifts mass to the next index."""
    if not 1.0 <= n <= float(k):
        raise ValidationError(f"index {n!r} outside [1, {k}]")
    vec = np.zeros(k, dtype=np.float64)
    lo = int(math.floor(n))
    frac = n - lo
    if lo == k:  # n == k exactly
        vec[k - 1] = 1.0
        return vec
    vec[lo - 1] = 1.0 - frac
    vec[lo] = frac
    return vec


@dataclass(frozen=True)
class DuelConfig:
    """Environment size, preferences, influence split, and iteration knobs."""

    k: int
    p1: tuple[float, ...]
    p2: tuple[float, ...]
    xi: float
    eta: float
    n0: float
    max_steps: int = 10_000
    tolerance: float = 1e-9
    rule: str = "attraction"

    def __post_init__(self):
        object.__setattr__(self, "p1", tuple(float(x) for x in self.p1))
        object.__setattr__(self, "p2", tuple(float(x) for x in self.p2))
        if self.k < 2:
            raise ValidationError("k must be at least 2")
        if len(self.p1) != self.k or len(self.p2) != self.k:
            raise ValidationError("preference vectors must have length k")
        preferred_index(self.p1)
        preferred_index(self.p2)
        if not 0.0 <= self.xi <= 1.0:
            raise ValidationError(f"xi must lie in [0, 1], got {self.xi!r}")
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta!r}")
        if not 1.0 <= self.n0 <= float(self.k):
            raise ValidationError(f"n0 must lie in [1, {self.k}], got {self.n0!r}")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be at least 1")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.rule not in RULES:
            raise ValidationError(f"rule must be one of {RULES}, got {self.rule!r}")

    def preference(self, agent: int) -> tuple[float, ...]:
        if agent == 1:
            return self.p1
        if agent == 2:
            return self.p2
        raise ValidationError(f"agent must be 1 or 2, got {agent!r}")


@dataclass(frozen=True)
class DuelState:
    """Current index and update count during an iteration."""

    n: float
    step: int = 0


def cost(agent: int, n: float, config: DuelConfig) -> float:
    """Distance from the agent's preferred index (zero exactly there)."""
    return abs(n - preferred_index(config.preference(agent)))


def delta(agent: int, n: float, config: DuelConfig) -> float:
    """The agent's unweighted pull on the index at n."""
    target = preferred_index(config.preference(agent))
    if config.rule == "attraction":
        return config.eta * (target - n)
    # "dot" rule: pull scaled by overlap of preference and fractional encoding
    overlap = float(np.dot(config.preference(agent), encode_state(n, config.k)))
    return config.eta * overlap * float(np.sign(target - n))


def _clamp(n: float, k: int) -> float:
    return min(max(n, 1.0), float(k))


def combined_update(n: float, config: DuelConfig) -> float:
    """One influence-weighted update, clamped to the valid index range."""
    move = config.xi * delta(1, n, config) + (1.0 - config.xi) * delta(2, n, config)
    return _clamp(n + move, config.k)


@dataclass(frozen=True)
class DuelStep:
    """One trajectory row plus the one-step counterfactual costs.

    j*_solo is the agent's cost after updating alone from here; j*_next its
    cost after the combined update. Comparing the two shows whether the agent
    would rather the other had no influence.
    """

    step: int
    n: float
    j1: float
    j2: float
    j1_solo: float
    j2_solo: float
    j1_next: float
    j2_next: float


@dataclass(frozen=True)
class DuelReport:
    """Trajectory and equilibrium summary of one duel run."""

    config: DuelConfig
    trajectory: tuple[DuelStep, ...] = field(repr=False)
    final_n: float
    converged: bool
    iterations: int
    final_costs: tuple[float, float]
    improves_without_other: tuple[bool, bool]


def _row(step_i: int, n: float, config: DuelConfig) -> DuelStep:
    n1 = _clamp(n + delta(1, n, config), config.k)
    n2 = _clamp(n + delta(2, n, config), config.k)
    nc = combined_update(n, config)
    return DuelStep(
        step=step_i,
        n=n,
        j1=cost(1, n, config),
        j2=cost(2, n, config),
        j1_solo=cost(1, n1, config),
        j2_solo=cost(2, n2, config),
        j1_next=cost(1, nc, config),
        j2_next=cost(2, nc, config),
    )


def run(config: DuelConfig) -> DuelReport:
    """Iterate combined updates to (near) fixed point and report the outcome."""
    n = config.n0
    rows = []
    converged = False
    iterations = 0
    for step_i in range(config.max_steps):
        rows.append(_row(step_i, n, config))
        n_next = combined_update(n, config)
        iterations += 1
        done = abs(n_next - n) < config.tolerance
        n = n_next
        if done:
            converged = True
            break
    rows.append(_row(iterations, n, config))

    solo = (
        cost(1, _clamp(n + delta(1, n, config), config.k), config),
        cost(2, _clamp(n + delta(2, n, config), config.k), config),
    )
    after = (
        cost(1, combined_update(n, config), config),
        cost(2, combined_update(n, config), config),
    )
    return DuelReport(
        config=config,
        trajectory=tuple(rows),
        final_n=n,
        converged=converged,
        iterations=iterations,
        final_costs=(cost(1, n, config), cost(2, n, config)),
        improves_without_other=(solo[0] < after[0], solo[1] < after[1]),
    )
