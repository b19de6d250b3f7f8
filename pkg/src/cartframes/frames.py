"""Finite two-sided Cartesian frames and their decidable world-set operators.

A frame pairs an agent's action list with an environment state list through a
total outcome matrix: entry (a, e) is the world reached when the agent picks
a and the environment is e. Properties of worlds are plain subsets S of the
world set, and every operator below is decided by exhaustive search:

* ensures(S)    the agent can force the outcome into S whatever e is
* prevents(S)   the agent can force the outcome out of S whatever e is
* controls(S)   both of the above
* observes(S)   for any two fallback actions a0/a1 there is a single action
                that behaves like a0 on S-worlds and like a1 off S, column by
                column (the conditional-policy reading)
* inevitable(S) every reachable world lies in S and the agent has an action

``enumerate_operator`` materializes the full family {S | operator holds} over
all 2^|W| subsets using the bitmask kernels in :mod:`cartframes.kernels`;
subsets are encoded with bit i = ``worlds[i]`` and returned sorted by mask
value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import EnumerationCapError, UnknownIdentifierError, ValidationError

WorldId = str
ActionId = str
EnvId = str
WorldSet = frozenset[str]

#: Operator names accepted by enumerate_operator (and the CLI).
OPERATORS = ("ensure", "prevent", "control", "observe", "inevitable")

DEFAULT_ENUMERATION_CAP = 16


def _check_labels(kind: str, labels: Sequence[str]) -> tuple[str, ...]:
    out = tuple(labels)
    if len(set(out)) != len(out):
        raise ValidationError(f"duplicate {kind} labels: {sorted(out)}")
    if any(not isinstance(x, str) or x == "" for x in out):
        raise ValidationError(f"{kind} labels must be non-empty strings")
    return out


@dataclass(frozen=True, eq=False)
class CartesianFrame:
    """Immutable frame (actions x envs -> worlds). Build via :meth:`build`."""

    actions: tuple[ActionId, ...]
    envs: tuple[EnvId, ...]
    worlds: tuple[WorldId, ...]
    matrix: np.ndarray  # shape (|actions|, |envs|), indices into worlds

    @classmethod
    def build(
        cls,
        actions: Sequence[ActionId],
        envs: Sequence[EnvId],
        outcomes: Mapping[tuple[ActionId, EnvId], WorldId] | Sequence[Sequence[WorldId]],
        worlds: Sequence[WorldId] | None = None,
    ) -> "CartesianFrame":
        """Construct and validate a frame.

        ``outcomes`` is either a mapping keyed by (action, env) or a row-major
        nested sequence of world labels (one row per action). The map must be
        total over actions x envs and contain nothing else. ``worlds`` may be
        given explicitly (ordered, possibly a superset of the image); by
        default it is the image in first-occurrence row-major order.
        """
        actions_t = _check_labels("action", actions)
        envs_t = _check_labels("environment", envs)
        if not envs_t:
            raise ValidationError("a frame needs at least one environment state")

        if isinstance(outcomes, Mapping):
            expected = {(a, e) for a in actions_t for e in envs_t}
            got = set(outcomes)
            if got != expected:
                missing = sorted(expected - got)
                extra = sorted(got - expected)
                raise ValidationError(
                    f"outcome map must cover exactly actions x envs; "
                    f"missing={missing[:3]} extra={extra[:3]}"
                )
            rows = [[outcomes[(a, e)] for e in envs_t] for a in actions_t]
        else:
            rows = [list(r) for r in outcomes]
            if len(rows) != len(actions_t) or any(len(r) != len(envs_t) for r in rows):
                raise ValidationError(
                    f"outcome rows must be {len(actions_t)}x{len(envs_t)}"
                )

        seen: dict[str, int] = {}
        for row in rows:
            for w in row:
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
        matrix = np.array(
            [[index[w] for w in row] for row in rows], dtype=np.int64
        ).reshape(len(actions_t), len(envs_t))
        matrix.setflags(write=False)
        return cls(actions_t, envs_t, worlds_t, matrix)

    # -- identity ---------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CartesianFrame):
            return NotImplemented
        return (
            self.actions == other.actions
            and self.envs == other.envs
            and self.worlds == other.worlds
            and self.matrix.shape == other.matrix.shape
            and bool(np.array_equal(self.matrix, other.matrix))
        )

    def __hash__(self) -> int:
        return hash((self.actions, self.envs, self.worlds, self.matrix.tobytes()))

    def __repr__(self) -> str:
        return (
            f"CartesianFrame({len(self.actions)} actions, "
            f"{len(self.envs)} envs, {len(self.worlds)} worlds)"
        )

    # -- cached lookups ----------------------------------------------------

    @cached_property
    def world_index(self) -> dict[WorldId, int]:
        return {w: i for i, w in enumerate(self.worlds)}

    @cached_property
    def action_index(self) -> dict[ActionId, int]:
        return {a: i for i, a in enumerate(self.actions)}

    @cached_property
    def env_index(self) -> dict[EnvId, int]:
        return {e: i for i, e in enumerate(self.envs)}

    @cached_property
    def row_masks(self) -> tuple[int, ...]:
        """Per-action bitmask of the worlds its row can reach."""
        masks = []
        for row in self.matrix:
            m = 0
            for idx in row:
                m |= 1 << int(idx)
            masks.append(m)
        return tuple(masks)

    @cached_property
    def image_mask(self) -> int:
        m = 0
        for row in self.row_masks:
            m |= row
        return m

    def subset_mask(self, subset: Iterable[WorldId]) -> int:
        """Validate a world subset against this frame and encode it as a bitmask."""
        mask = 0
        for w in subset:
            idx = self.world_index.get(w)
            if idx is None:
                raise ValidationError(f"world {w!r} is not a member of this frame's worlds")
            mask |= 1 << idx
        return mask

    def mask_to_set(self, mask: int) -> WorldSet:
        return frozenset(w for i, w in enumerate(self.worlds) if mask >> i & 1)

    def to_scenario_dict(self) -> dict:
        """The frame's body in the scenario file format (row-major matrix)."""
        return {
            "actions": list(self.actions),
            "envs": list(self.envs),
            "worlds": list(self.worlds),
            "matrix": [self.worlds[int(i)] for i in self.matrix.ravel()],
        }


def outcome(frame: CartesianFrame, action: ActionId, env: EnvId) -> WorldId:
    """The world reached when ``action`` meets ``env``."""
    ai = frame.action_index.get(action)
    if ai is None:
        raise UnknownIdentifierError("action", action)
    ei = frame.env_index.get(env)
    if ei is None:
        raise UnknownIdentifierError("environment", env)
    return frame.worlds[int(frame.matrix[ai, ei])]


def image(frame: CartesianFrame) -> WorldSet:
    """All worlds reachable by some (action, env) combination."""
    return frame.mask_to_set(frame.image_mask)


def ensures(frame: CartesianFrame, subset: Iterable[WorldId]) -> bool:
    """Some action lands in ``subset`` under every environment state."""
    mask = frame.subset_mask(subset)
    return any(row & mask == row for row in frame.row_masks)


def prevents(frame: CartesianFrame, subset: Iterable[WorldId]) -> bool:
    """Some action avoids ``subset`` under every environment state."""
    mask = frame.subset_mask(subset)
    return any(row & mask == 0 for row in frame.row_masks)


def controls(frame: CartesianFrame, subset: Iterable[WorldId]) -> bool:
    """The agent can both ensure and prevent ``subset``."""
    mask = frame.subset_mask(subset)
    return any(row & mask == row for row in frame.row_masks) and any(
        row & mask == 0 for row in frame.row_masks
    )


def observes(frame: CartesianFrame, subset: Iterable[WorldId]) -> bool:
    """Conditional-policy observability of ``subset``.

    For every pair (a0, a1) there must exist an action a that, column by
    column, either reaches a subset world and copies a0, or reaches a
    non-subset world and copies a1. Vacuously true when there are no actions.
    """
    mask = frame.subset_mask(subset)
    m = frame.matrix
    n_actions = len(frame.actions)
    for i0 in range(n_actions):
        for i1 in range(n_actions):
            found = False
            for a in range(n_actions):
                ok = True
                for col in range(len(frame.envs)):
                    w = int(m[a, col])
                    in_s = mask >> w & 1
                    if in_s:
                        if w != int(m[i0, col]):
                            ok = False
                            break
                    elif w != int(m[i1, col]):
                        ok = False
                        break
                if ok:
                    found = True
                    break
            if not found:
                return False
    return True


def inevitable(frame: CartesianFrame, subset: Iterable[WorldId]) -> bool:
    """Every reachable world lies in ``subset`` and the agent has an action."""
    mask = frame.subset_mask(subset)
    return bool(frame.actions) and frame.image_mask & mask == frame.image_mask


def _observe_tables(frame: CartesianFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Precompute per-(a0, a1, a) feasibility and membership constraints.

    For a fixed triple, each column either always satisfies the policy
    condition, forces its world into the subset, forces it out, or rules the
    triple out entirely; fold columns into two masks plus a feasibility bit.
    """
    n_actions = len(frame.actions)
    n_envs = len(frame.envs)
    m = frame.matrix
    feasible = np.zeros((n_actions, n_actions, n_actions), dtype=np.bool_)
    need_in = np.zeros((n_actions, n_actions, n_actions), dtype=np.uint64)
    need_out = np.zeros((n_actions, n_actions, n_actions), dtype=np.uint64)
    for i0 in range(n_actions):
        for i1 in range(n_actions):
            for a in range(n_actions):
                ok = True
                mask_in = 0
                mask_out = 0
                for col in range(n_envs):
                    w = int(m[a, col])
                    eq0 = w == int(m[i0, col])
                    eq1 = w == int(m[i1, col])
                    if eq0 and eq1:
                        continue
                    if eq0:
                        mask_in |= 1 << w
                    elif eq1:
                        mask_out |= 1 << w
                    else:
                        ok = False
                        break
                if ok:
                    feasible[i0, i1, a] = True
                    need_in[i0, i1, a] = mask_in
                    need_out[i0, i1, a] = mask_out
    return feasible, need_in, need_out


def operator_table(
    frame: CartesianFrame, operator: str, cap: int = DEFAULT_ENUMERATION_CAP
) -> np.ndarray:
    """Boolean table over all 2^|W| subset masks for one operator.

    Index s is the subset bitmask; the value says whether the operator holds.
    This is the vectorized core behind :func:`enumerate_operator`.
    """
    if operator not in OPERATORS:
        raise ValidationError(f"unknown operator {operator!r}; expected one of {OPERATORS}")
    n_worlds = len(frame.worlds)
    if n_worlds > cap:
        raise EnumerationCapError(
            f"{n_worlds} worlds exceed the enumeration cap of {cap} "
            f"(2^{n_worlds} subsets); use the membership predicates instead"
        )
    size = 1 << n_worlds
    row_masks = np.array(frame.row_masks, dtype=np.uint64)

    if operator == "observe":
        if not frame.actions:
            return np.ones(size, dtype=np.bool_)
        feasible, need_in, need_out = _observe_tables(frame)
        return kernels.observe_table(feasible, need_in, need_out, n_worlds)
    if not frame.actions:
        return np.zeros(size, dtype=np.bool_)
    if operator == "ensure":
        return kernels.ensure_table(row_masks, n_worlds)
    if operator == "prevent":
        return kernels.prevent_table(row_masks, n_worlds)
    if operator == "control":
        return kernels.ensure_table(row_masks, n_worlds) & kernels.prevent_table(
            row_masks, n_worlds
        )
    # inevitable: supersets of the image
    subsets = np.arange(size, dtype=np.uint64)
    img = np.uint64(frame.image_mask)
    return (subsets & img) == img


def enumerate_operator(
    frame: CartesianFrame, operator: str, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[WorldSet]:
    """Materialize the family {S | operator holds on S}, sorted by subset mask."""
    table = operator_table(frame, operator, cap=cap)
    return [frame.mask_to_set(int(s)) for s in np.flatnonzero(table)]
