"""Higher-dimension Cartesian objects: n agents sharing one environment.

A Cartesian object generalizes a two-sided frame to any number of agents.
Each agent owns a non-empty action list; the joint outcome table maps one
action per agent plus an environment state to a world. Per-agent operators
treat everything outside agent i (the other agents and the environment
alike) as the effective environment:

* ensure_n / prevent_n / ctrl_n  agent i forces the outcome into/out of S
  against every joint choice of the others and every environment state
* manageable_n                   probabilistic ensure: some action of agent i
  reaches S with probability >= theta when the others and the environment
  are drawn from a supplied behavior profile
* obs_n                          conditional-policy observability against the
  folded environment
* image_n / inevitable_n         reachability and its subset form
* vimage_n / viable_n            worlds reachable with probability strictly
  above theta under a profile, and the subset form

Two routes exist on purpose. The operators here work directly on the outcome
tensor; :func:`as_frame` folds the other agents into environment columns so
the same questions can be answered by :mod:`cartframes.frames`, and the
test suite holds the routes equal.

Probability comparisons use an absolute epsilon of ``PROB_ATOL`` so that
sums-of-products noise cannot flip a verdict at exact thresholds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import EnumerationCapError, UnknownIdentifierError, ValidationError
from .frames import (
    DEFAULT_ENUMERATION_CAP,
    OPERATORS,
    CartesianFrame,
    WorldSet,
    _check_labels,
)

DIST_TOL = 1e-9
PROB_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class CartesianObject:
    """Immutable n-agent outcome structure. Build via :meth:`build`."""

    agent_actions: tuple[tuple[str, ...], ...]
    envs: tuple[str, ...]
    worlds: tuple[str, ...]
    table: np.ndarray  # shape (*agent sizes, |envs|), indices into worlds

    @classmethod
    def build(
        cls,
        agent_actions: Sequence[Sequence[str]],
        envs: Sequence[str],
        outcomes: Mapping[tuple, str] | Sequence[str],
        worlds: Sequence[str] | None = None,
    ) -> "CartesianObject":
        """Construct and validate an object.

        ``outcomes`` is either a mapping keyed by (a_1, ..., a_n, e) tuples or
        a flat row-major sequence over the axes (agent 1, ..., agent n, env).
        It must cover exactly the full product.
        """
        if len(agent_actions) < 1:
            raise ValidationError("an object needs at least one agent")
        agents_t = tuple(
            _check_labels(f"agent {i + 1} action", acts) for i, acts in enumerate(agent_actions)
        )
        if any(not acts for acts in agents_t):
            raise ValidationError("every agent needs at least one action")
        envs_t = _check_labels("environment", envs)
        if not envs_t:
            raise ValidationError("an object needs at least one environment state")

        axes = [list(acts) for acts in agents_t] + [list(envs_t)]
        keys = list(itertools.product(*axes))
        if isinstance(outcomes, Mapping):
            got = {tuple(k) for k in outcomes}
            expected = set(keys)
            if got != expected:
                missing = sorted(expected - got)
                extra = sorted(got - expected)
                raise ValidationError(
                    f"joint outcome map must cover exactly the action/env product; "
                    f"missing={missing[:3]} extra={extra[:3]}"
                )
            flat = [outcomes[k] for k in keys]
        else:
            flat = list(outcomes)
            if len(flat) != len(keys):
                raise ValidationError(
                    f"flat outcome list has {len(flat)} entries, expected {len(keys)}"
                )

        seen: dict[str, int] = {}
        for w in flat:
            if w not in seen:
                seen[w] = len(seen)
        if worlds is None:
            worlds_t = _check_labels("world", tuple(seen))
        else:
            worlds_t = _check_labels("world", worlds)
            foreign = [w for w in seen if w not in set(worlds_t)]
            if foreign:
                raise ValidationError(f"outcome values not in declared worlds: {foreign}")

        index = {w: i for i, w in enumerate(worlds_t)}
        shape = tuple(len(acts) for acts in agents_t) + (len(envs_t),)
        table = np.array([index[w] for w in flat], dtype=np.int64).reshape(shape)
        table.setflags(write=False)
        return cls(agents_t, envs_t, worlds_t, table)

    @property
    def n_agents(self) -> int:
        return len(self.agent_actions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CartesianObject):
            return NotImplemented
        return (
            self.agent_actions == other.agent_actions
            and self.envs == other.envs
            and self.worlds == other.worlds
            and self.table.shape == other.table.shape
            and bool(np.array_equal(self.table, other.table))
        )

    def __hash__(self) -> int:
        return hash((self.agent_actions, self.envs, self.worlds, self.table.tobytes()))

    def __repr__(self) -> str:
        sizes = "x".join(str(len(a)) for a in self.agent_actions)
        return (
            f"CartesianObject({self.n_agents} agents [{sizes}], "
            f"{len(self.envs)} envs, {len(self.worlds)} worlds)"
        )

    @cached_property
    def world_index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.worlds)}

    def check_agent(self, agent: int) -> int:
        """Validate a 1-based agent index, returning the 0-based axis."""
        if not isinstance(agent, int) or not 1 <= agent <= self.n_agents:
            raise ValidationError(
                f"agent index must be in 1..{self.n_agents}, got {agent!r}"
            )
        return agent - 1

    def subset_lookup(self, subset: Iterable[str]) -> np.ndarray:
        """Validate a world subset, returning a per-world-index bool table."""
        lut = np.zeros(len(self.worlds), dtype=np.bool_)
        for w in subset:
            idx = self.world_index.get(w)
            if idx is None:
                raise ValidationError(f"world {w!r} is not a member of this object's worlds")
            lut[idx] = True
        return lut

    def folded(self, agent: int) -> np.ndarray:
        """Outcome matrix with agent i's actions as rows.

        Columns run over the joint choices of the other agents (in agent
        order) and the environment, environment fastest.
        """
        axis = self.check_agent(agent)
        return np.moveaxis(self.table, axis, 0).reshape(len(self.agent_actions[axis]), -1)

    def to_scenario_dict(self) -> dict:
        """The object's body in the scenario format.

        The table flattens row-major over the axes (agent 1, ..., agent n,
        environment), matching what :func:`cartframes.scenario.parse_scenario`
        reads back.
        """
        return {
            "agents": [list(a) for a in self.agent_actions],
            "envs": list(self.envs),
            "worlds": list(self.worlds),
            "table": [self.worlds[int(i)] for i in self.table.ravel()],
        }


def joint_outcome(obj: CartesianObject, joint_action: Sequence[str], env: str) -> str:
    """Table lookup for one action per agent plus an environment state."""
    acts = tuple(joint_action)
    if len(acts) != obj.n_agents:
        raise ValidationError(
            f"joint action has {len(acts)} entries for {obj.n_agents} agents"
        )
    idx = []
    for i, (a, acts_i) in enumerate(zip(acts, obj.agent_actions)):
        try:
            idx.append(acts_i.index(a))
        except ValueError:
            raise ValidationError(f"agent {i + 1} has no action {a!r}") from None
    try:
        ei = obj.envs.index(env)
    except ValueError:
        raise UnknownIdentifierError("environment", env) from None
    return obj.worlds[int(obj.table[tuple(idx) + (ei,)])]


def agents_star(obj: CartesianObject) -> frozenset[tuple[int, str]]:
    """Disjoint union of all agents' actions, tagged by 1-based owner index."""
    return frozenset(
        (i + 1, a) for i, acts in enumerate(obj.agent_actions) for a in acts
    )


# -- deterministic per-agent operators (direct tensor route) ----------------


def ensure_n(obj: CartesianObject, agent: int, subset: Iterable[str]) -> bool:
    """Agent can force the outcome into ``subset`` whatever everyone else does."""
    lut = obj.subset_lookup(subset)
    return bool(lut[obj.folded(agent)].all(axis=1).any())


def prevent_n(obj: CartesianObject, agent: int, subset: Iterable[str]) -> bool:
    """Agent can force the outcome out of ``subset`` whatever everyone else does."""
    lut = obj.subset_lookup(subset)
    return bool((~lut[obj.folded(agent)]).all(axis=1).any())


def ctrl_n(obj: CartesianObject, agent: int, subset: Iterable[str]) -> bool:
    lut = obj.subset_lookup(subset)
    in_s = lut[obj.folded(agent)]
    return bool(in_s.all(axis=1).any() and (~in_s).all(axis=1).any())


def obs_n(obj: CartesianObject, agent: int, subset: Iterable[str]) -> bool:
    """Conditional-policy observability for agent i against the folded rest."""
    lut = obj.subset_lookup(subset)
    folded = obj.folded(agent)
    in_s = lut[folded]
    k = folded.shape[0]
    for i0 in range(k):
        for i1 in range(k):
            found = False
            for a in range(k):
                cond = np.where(in_s[a], folded[a] == folded[i0], folded[a] == folded[i1])
                if cond.all():
                    found = True
                    break
            if not found:
                return False
    return True


def image_n(obj: CartesianObject, agent: int) -> WorldSet:
    """Worlds reachable by some action of agent i with some joint choice of the rest."""
    obj.check_agent(agent)
    return frozenset(obj.worlds[int(w)] for w in np.unique(obj.table))


def inevitable_n(obj: CartesianObject, agent: int, subset: Iterable[str]) -> bool:
    lut = obj.subset_lookup(subset)
    obj.check_agent(agent)
    return bool(lut[obj.table].all())


# -- behavior profiles and probabilistic operators ---------------------------


def _check_dist(name: str, dist: Mapping[str, float]) -> dict[str, float]:
    out = {str(k): float(v) for k, v in dist.items()}
    if any(v < 0 for v in out.values()):
        raise ValidationError(f"{name}: probabilities must be non-negative")
    total = sum(out.values())
    if abs(total - 1.0) > DIST_TOL:
        raise ValidationError(f"{name}: probabilities sum to {total!r}, expected 1")
    return out


@dataclass(frozen=True)
class BehaviorProfile:
    """Independent action distributions per agent plus an environment distribution.

    Agents are keyed by 1-based index; an agent may be absent (e.g. the one
    whose options are being quantified over). Missing actions inside a
    distribution carry probability zero.
    """

    agents: Mapping[int, Mapping[str, float]]
    env: Mapping[str, float]

    @classmethod
    def build(
        cls, agents: Mapping[int, Mapping[str, float]], env: Mapping[str, float]
    ) -> "BehaviorProfile":
        checked = {
            int(i): _check_dist(f"agent {i} distribution", dist) for i, dist in agents.items()
        }
        return cls(checked, _check_dist("environment distribution", env))

    def agent_vector(self, obj: CartesianObject, agent: int) -> np.ndarray:
        dist = self.agents.get(agent)
        if dist is None:
            raise ValidationError(f"profile has no distribution for agent {agent}")
        acts = obj.agent_actions[agent - 1]
        foreign = sorted(set(dist) - set(acts))
        if foreign:
            raise ValidationError(
                f"profile for agent {agent} names unknown actions: {foreign}"
            )
        return np.array([dist.get(a, 0.0) for a in acts], dtype=np.float64)

    def env_vector(self, obj: CartesianObject) -> np.ndarray:
        foreign = sorted(set(self.env) - set(obj.envs))
        if foreign:
            raise ValidationError(f"profile environment names unknown states: {foreign}")
        return np.array([self.env.get(e, 0.0) for e in obj.envs], dtype=np.float64)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"theta must lie in [0, 1], got {theta!r}")
    return theta


def _column_weights(obj: CartesianObject, agent: int, profile: BehaviorProfile) -> np.ndarray:
    """Joint probability of each folded column (others in order, env fastest)."""
    axis = obj.check_agent(agent)
    vectors = [
        profile.agent_vector(obj, j + 1)
        for j in range(obj.n_agents)
        if j != axis
    ]
    vectors.append(profile.env_vector(obj))
    return reduce(np.multiply.outer, vectors).ravel() if vectors else np.ones(1)


def world_probabilities(
    obj: CartesianObject, agent: int, profile: BehaviorProfile
) -> np.ndarray:
    """Per (action of agent i, world) probability under the profile."""
    folded = obj.folded(agent)
    weights = _column_weights(obj, agent, profile)
    probs = np.zeros((folded.shape[0], len(obj.worlds)), dtype=np.float64)
    for a in range(folded.shape[0]):
        np.add.at(probs[a], folded[a], weights)
    return probs


def success_probabilities(
    obj: CartesianObject, agent: int, subset: Iterable[str], profile: BehaviorProfile
) -> np.ndarray:
    """Per-action probability that the outcome lands in ``subset``."""
    lut = obj.subset_lookup(subset)
    folded = obj.folded(agent)
    weights = _column_weights(obj, agent, profile)
    return (lut[folded] * weights).sum(axis=1)


def manageable_n(
    obj: CartesianObject,
    agent: int,
    subset: Iterable[str],
    profile: BehaviorProfile,
    theta: float,
) -> bool:
    """Some action of agent i reaches ``subset`` with probability >= theta."""
    theta = _check_theta(theta)
    probs = success_probabilities(obj, agent, subset, profile)
    return bool((probs >= theta - PROB_ATOL).any())


def vimage_n(
    obj: CartesianObject, agent: int, profile: BehaviorProfile, theta: float
) -> WorldSet:
    """Worlds some action of agent i reaches with probability strictly above theta."""
    theta = _check_theta(theta)
    best = world_probabilities(obj, agent, profile).max(axis=0)
    return frozenset(
        w for w, p in zip(obj.worlds, best) if p > theta + PROB_ATOL
    )


def viable_n(
    obj: CartesianObject,
    agent: int,
    subset: Iterable[str],
    profile: BehaviorProfile,
    theta: float,
) -> bool:
    lut = obj.subset_lookup(subset)
    reachable = vimage_n(obj, agent, profile, theta)
    axis = obj.check_agent(agent)
    if not obj.agent_actions[axis]:
        return False
    return all(lut[obj.world_index[w]] for w in reachable)


# -- structural operations ---------------------------------------------------


def extend_with_agent(
    obj: CartesianObject,
    new_actions: Sequence[str],
    outcome_extension: Mapping[tuple, str] | Callable[[tuple, str, str], str],
    worlds: Sequence[str] | None = None,
) -> CartesianObject:
    """Append a new agent, growing the outcome tensor by one axis.

    The extension must be total over (old joint actions, new action, env):
    as a mapping it is keyed by (a_1, ..., a_n, b, e) tuples and may not
    contain anything else; as a callable it receives (joint_actions, b, e).
    New worlds named by the extension are appended to the world list.
    """
    new_t = _check_labels("new agent action", new_actions)
    if not new_t:
        raise ValidationError("the new agent needs at least one action")

    axes = [list(a) for a in obj.agent_actions] + [list(new_t), list(obj.envs)]
    keys = list(itertools.product(*axes))
    if callable(outcome_extension):
        flat = [outcome_extension(k[: obj.n_agents], k[-2], k[-1]) for k in keys]
    else:
        got = {tuple(k) for k in outcome_extension}
        expected = set(keys)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise ValidationError(
                f"extension map must cover exactly (old product x new actions x envs); "
                f"missing={missing[:3]} extra={extra[:3]}"
            )
        flat = [outcome_extension[k] for k in keys]

    if worlds is None:
        world_list = list(obj.worlds)
        known = set(world_list)
        for w in flat:
            if w not in known:
                world_list.append(w)
                known.add(w)
        worlds = world_list
    return CartesianObject.build(
        tuple(obj.agent_actions) + (new_t,), obj.envs, flat, worlds=worlds
    )


def as_frame(obj: CartesianObject, agent: int) -> CartesianFrame:
    """Fold every other agent into the environment of a two-sided frame.

    Environment columns follow the other agents in index order with the
    original environment fastest; each column label joins its components
    with commas. A single-agent object folds to a frame identical to its
    source data.
    """
    axis = obj.check_agent(agent)
    folded = obj.folded(agent)
    if obj.n_agents == 1:
        env_labels = obj.envs
    else:
        other_axes = [
            obj.agent_actions[j] for j in range(obj.n_agents) if j != axis
        ]
        env_labels = tuple(
            ",".join(parts) for parts in itertools.product(*other_axes, obj.envs)
        )
    rows = [[obj.worlds[int(w)] for w in row] for row in folded]
    return CartesianFrame.build(
        obj.agent_actions[axis], env_labels, rows, worlds=obj.worlds
    )


# -- direct family enumeration (kernel-free route) ---------------------------


def _supermask_walk(flags: np.ndarray, base: int, full: int) -> None:
    """Mark every superset of ``base`` inside the ``full`` universe."""
    s = base
    while True:
        flags[s] = True
        if s == full:
            return
        s = (s + 1) | base


def _submask_walk(flags: np.ndarray, within: int) -> None:
    """Mark every subset of ``within``."""
    s = within
    while True:
        flags[s] = True
        if s == 0:
            return
        s = (s - 1) & within


def operator_table_n(
    obj: CartesianObject, agent: int, operator: str, cap: int = DEFAULT_ENUMERATION_CAP
) -> np.ndarray:
    """Boolean table over all subset masks for one per-agent operator.

    Deliberately kernel-free: families are built by lattice walks over the
    subset masks, giving an independent route from the frame kernels for the
    folding-equivalence checks.
    """
    if operator not in OPERATORS:
        raise ValidationError(f"unknown operator {operator!r}; expected one of {OPERATORS}")
    n_worlds = len(obj.worlds)
    if n_worlds > cap:
        raise EnumerationCapError(
            f"{n_worlds} worlds exceed the enumeration cap of {cap}; "
            "use the membership predicates instead"
        )
    size = 1 << n_worlds
    full = size - 1
    folded = obj.folded(agent)
    row_masks = [int(np.bitwise_or.reduce([1 << int(w) for w in row])) for row in folded]

    flags = np.zeros(size, dtype=np.bool_)
    if operator == "ensure":
        for r in row_masks:
            _supermask_walk(flags, r, full)
        return flags
    if operator == "prevent":
        for r in row_masks:
            _submask_walk(flags, full & ~r)
        return flags
    if operator == "control":
        return operator_table_n(obj, agent, "ensure", cap) & operator_table_n(
            obj, agent, "prevent", cap
        )
    if operator == "inevitable":
        img = 0
        for r in row_masks:
            img |= r
        _supermask_walk(flags, img, full)
        return flags

    # observe: for each (a0, a1) collect the subsets some policy action serves
    k = folded.shape[0]
    flags = np.ones(size, dtype=np.bool_)
    for i0 in range(k):
        for i1 in range(k):
            pair_ok = np.zeros(size, dtype=np.bool_)
            for a in range(k):
                need_in = 0
                need_out = 0
                feasible = True
                for col in range(folded.shape[1]):
                    w = int(folded[a, col])
                    eq0 = w == int(folded[i0, col])
                    eq1 = w == int(folded[i1, col])
                    if eq0 and eq1:
                        continue
                    if eq0:
                        need_in |= 1 << w
                    elif eq1:
                        need_out |= 1 << w
                    else:
                        feasible = False
                        break
                if not feasible or need_in & need_out:
                    continue
                free = full & ~need_in & ~need_out
                t = free
                while True:
                    pair_ok[need_in | t] = True
                    if t == 0:
                        break
                    t = (t - 1) & free
            flags &= pair_ok
            if not flags.any():
                return flags
    return flags


def enumerate_operator_n(
    obj: CartesianObject, agent: int, operator: str, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[WorldSet]:
    """Materialize {S | operator holds for agent i}, sorted by subset mask."""
    table = operator_table_n(obj, agent, operator, cap=cap)
    return [
        frozenset(w for b, w in enumerate(obj.worlds) if int(s) >> b & 1)
        for s in np.flatnonzero(table)
    ]
