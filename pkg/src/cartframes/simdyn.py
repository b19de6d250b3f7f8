"""Simulator dynamics: weighted events, a complexity gate, and token emission.

The simulator is a small dynamical system. A state is a step counter, the
token trajectory emitted so far, and the set of realized (event, world)
pairs. One forward step:

1. draw an event from the space, restricted to events whose description
   complexity stays under the bound ``v`` (weights renormalized over the
   admissible set), and merge the worlds that event can reach into the
   realized set;
2. sample the next token from the selector's distribution for the current
   trajectory and append it.

Description complexity is proxied by canonical-serialization byte length
(a deterministic stand-in for program length); a custom deterministic scorer
can be plugged in per event space. All randomness flows through a seeded
PCG64 generator, and runs record a state digest per step so that histories
are reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .canon import canonical_bytes, check_round_trip, digest
from .errors import SelectionError, ValidationError
from .objects import CartesianObject

#: Identifier of the pseudo-random algorithm recorded in outputs.
RNG_NAME = "pcg64"

DIST_TOL = 1e-9

Scorer = Callable[[bytes], int]


def _as_generator(seed: "int | np.random.Generator") -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed)))


def rng_digest(rng: np.random.Generator) -> str:
    """Short digest of the generator's current internal state."""
    return digest(rng.bit_generator.state)


# -- alphabet and simulacra ---------------------------------------------------


def check_alphabet(alphabet: Sequence[str]) -> tuple[str, ...]:
    out = tuple(alphabet)
    if not out:
        raise ValidationError("alphabet must be non-empty")
    if len(set(out)) != len(out):
        raise ValidationError("alphabet tokens must be unique")
    return out


@dataclass(frozen=True)
class Simulacrum:
    """One entity a simulator can instantiate.

    ``description`` is an arbitrary JSON tree; its canonical byte form is the
    complexity proxy, so it must round-trip through canonical serialization.
    """

    id: str
    actions: tuple[str, ...] = ()
    description: Any = None

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        check_round_trip(self.description)

    def canonical_form(self) -> dict:
        return {
            "actions": list(self.actions),
            "description": self.description,
            "id": self.id,
        }


@dataclass(frozen=True, eq=False)
class SimEvent:
    """A weighted event: a Cartesian object plus the simulacra it contains."""

    id: str
    object: CartesianObject
    simulacra: tuple[Simulacrum, ...]
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "simulacra", tuple(self.simulacra))
        if not self.simulacra:
            raise ValidationError(f"event {self.id!r} has no simulacra")
        if not self.weight >= 0:
            raise ValidationError(f"event {self.id!r} has negative weight {self.weight!r}")

    @cached_property
    def reachable_worlds(self) -> frozenset[str]:
        """Worlds the event's outcome map can produce (realized on selection)."""
        return frozenset(
            self.object.worlds[int(w)] for w in np.unique(self.object.table)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimEvent):
            return NotImplemented
        return (
            self.id == other.id
            and self.object == other.object
            and self.simulacra == other.simulacra
            and self.weight == other.weight
        )

    def __hash__(self) -> int:
        return hash((self.id, self.object, self.simulacra, self.weight))


@dataclass(frozen=True, eq=False)
class EventSpace:
    """The event family with its complexity bound.

    ``scorer`` optionally replaces byte length as the complexity measure; it
    must be deterministic. It is excluded from equality.
    """

    events: tuple[SimEvent, ...]
    complexity_bound: int
    scorer: Scorer | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.complexity_bound < 0:
            raise ValidationError("complexity bound must be non-negative")
        ids = [ev.id for ev in self.events]
        if len(set(ids)) != len(ids):
            raise ValidationError("event identifiers must be unique")
        by_id: dict[str, bytes] = {}
        for ev in self.events:
            for sim in ev.simulacra:
                body = canonical_bytes(sim.canonical_form())
                if by_id.setdefault(sim.id, body) != body:
                    raise ValidationError(
                        f"simulacrum {sim.id!r} has conflicting descriptions across events"
                    )

    @cached_property
    def sample_space(self) -> tuple[Simulacrum, ...]:
        """Union of all events' simulacra, first occurrence order."""
        seen: dict[str, Simulacrum] = {}
        for ev in self.events:
            for sim in ev.simulacra:
                seen.setdefault(sim.id, sim)
        return tuple(seen.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventSpace):
            return NotImplemented
        return self.events == other.events and self.complexity_bound == other.complexity_bound

    def __hash__(self) -> int:
        return hash((self.events, self.complexity_bound))


def complexity(item: "Simulacrum | SimEvent", scorer: Scorer | None = None) -> int:
    """Description length of a simulacrum, or the max over an event's simulacra."""
    score = scorer or len
    if isinstance(item, Simulacrum):
        return int(score(canonical_bytes(item.canonical_form())))
    if isinstance(item, SimEvent):
        return max(complexity(sim, scorer) for sim in item.simulacra)
    raise ValidationError(f"cannot score {type(item).__name__}")


def admissible_events(space: EventSpace, v: int) -> list[SimEvent]:
    """Events whose complexity is within ``v``, original order preserved."""
    return [ev for ev in space.events if complexity(ev, space.scorer) <= v]


def select_event(
    space: EventSpace, v: int, seed: "int | np.random.Generator"
) -> SimEvent:
    """Sample one admissible event with probability proportional to weight."""
    rng = _as_generator(seed)
    candidates = admissible_events(space, v)
    if not candidates:
        raise SelectionError(f"no events admissible under complexity bound {v}")
    total = float(sum(ev.weight for ev in candidates))
    if total <= 0:
        raise SelectionError("admissible events have zero total weight")
    r = rng.random() * total
    acc = 0.0
    for ev in candidates:
        acc += ev.weight
        if r < acc:
            return ev
    return candidates[-1]  # guard against rounding at the top end


# -- states and token selection ----------------------------------------------


@dataclass(frozen=True)
class SimulationState:
    """Step counter, emitted trajectory, and realized (event, world) pairs."""

    t: int = 0
    trajectory: tuple[str, ...] = ()
    realized_worlds: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "trajectory", tuple(self.trajectory))
        object.__setattr__(self, "realized_worlds", frozenset(self.realized_worlds))
        if len(self.trajectory) != self.t:
            raise ValidationError(
                f"trajectory length {len(self.trajectory)} does not match t={self.t}"
            )


def initial_state() -> SimulationState:
    """The null state: empty trajectory, nothing realized."""
    return SimulationState()


def state_with_context(tokens: Sequence[str]) -> SimulationState:
    """A state whose trajectory is pre-loaded with ``tokens`` (t matches)."""
    toks = tuple(tokens)
    return SimulationState(t=len(toks), trajectory=toks)


@dataclass(frozen=True, eq=False)
class TokenSelector:
    """Table-driven next-token rule: longest trajectory suffix wins, else default."""

    alphabet: tuple[str, ...]
    entries: tuple[tuple[tuple[str, ...], np.ndarray], ...]
    default: np.ndarray | None

    @classmethod
    def build(
        cls,
        alphabet: Sequence[str],
        table: Mapping[Sequence[str], Mapping[str, float]]
        | Iterable[tuple[Sequence[str], Mapping[str, float]]] = (),
        default: Mapping[str, float] | None = None,
    ) -> "TokenSelector":
        alpha = check_alphabet(alphabet)
        index = {tok: i for i, tok in enumerate(alpha)}

        def vector(name: str, dist: Mapping[str, float]) -> np.ndarray:
            vec = np.zeros(len(alpha), dtype=np.float64)
            for tok, p in dist.items():
                if tok not in index:
                    raise ValidationError(f"{name}: token {tok!r} not in alphabet")
                if p < 0:
                    raise ValidationError(f"{name}: negative probability for {tok!r}")
                vec[index[tok]] = float(p)
            total = float(vec.sum())
            if abs(total - 1.0) > DIST_TOL:
                raise ValidationError(f"{name}: probabilities sum to {total!r}, expected 1")
            vec.setflags(write=False)
            return vec

        items = table.items() if isinstance(table, Mapping) else table
        entries = []
        seen = set()
        for ctx, dist in items:
            context = tuple(ctx)
            foreign = [tok for tok in context if tok not in index]
            if foreign:
                raise ValidationError(f"context {context!r} uses unknown tokens {foreign}")
            if context in seen:
                raise ValidationError(f"duplicate selector context {context!r}")
            seen.add(context)
            entries.append((context, vector(f"context {context!r}", dist)))
        default_vec = vector("default", default) if default is not None else None
        return cls(alpha, tuple(entries), default_vec)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TokenSelector):
            return NotImplemented
        if self.alphabet != other.alphabet or len(self.entries) != len(other.entries):
            return False
        for (c1, v1), (c2, v2) in zip(self.entries, other.entries):
            if c1 != c2 or not np.array_equal(v1, v2):
                return False
        if (self.default is None) != (other.default is None):
            return False
        return self.default is None or bool(np.array_equal(self.default, other.default))

    def __hash__(self) -> int:
        return hash((self.alphabet, tuple(c for c, _ in self.entries)))


def token_distribution(selector: TokenSelector, state: SimulationState) -> np.ndarray:
    """Normalized distribution over the alphabet for the state's trajectory."""
    traj = state.trajectory
    best: tuple[tuple[str, ...], np.ndarray] | None = None
    for ctx, vec in selector.entries:
        n = len(ctx)
        if n <= len(traj) and traj[len(traj) - n :] == ctx:
            if best is None or n > len(best[0]):
                best = (ctx, vec)
    vec = best[1] if best is not None else selector.default
    if vec is None:
        raise SelectionError(
            f"no selector entry matches trajectory {traj!r} and no default is set"
        )
    return vec / vec.sum()


def _sample_index(dist: np.ndarray, rng: np.random.Generator) -> int:
    r = rng.random()
    acc = 0.0
    for i, p in enumerate(dist):
        acc += float(p)
        if r < acc:
            return i
    return len(dist) - 1


def _advance(
    state: SimulationState,
    selector: TokenSelector,
    space: EventSpace,
    v: int,
    rng: np.random.Generator,
) -> tuple[SimulationState, SimEvent, str]:
    event = select_event(space, v, rng)
    dist = token_distribution(selector, state)
    token = selector.alphabet[_sample_index(dist, rng)]
    realized = frozenset((event.id, w) for w in event.reachable_worlds)
    new_state = SimulationState(
        t=state.t + 1,
        trajectory=state.trajectory + (token,),
        realized_worlds=state.realized_worlds | realized,
    )
    return new_state, event, token


def step(
    state: SimulationState,
    selector: TokenSelector,
    space: EventSpace,
    seed: "int | np.random.Generator",
    v: int | None = None,
) -> SimulationState:
    """One forward pass: select an event, then append one sampled token."""
    rng = _as_generator(seed)
    bound = space.complexity_bound if v is None else v
    new_state, _, _ = _advance(state, selector, space, bound, rng)
    return new_state


@dataclass(frozen=True)
class StepRecord:
    """Machine-readable trace of one step."""

    t: int
    event: str
    token: str
    realized: tuple[str, ...]
    rng_digest: str

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "event": self.event,
            "token": self.token,
            "realized": list(self.realized),
            "rng_digest": self.rng_digest,
        }


@dataclass(frozen=True)
class RunResult:
    """Full trajectory of a seeded run: states, per-step records, provenance."""

    states: tuple[SimulationState, ...]
    records: tuple[StepRecord, ...]
    seed: int | None
    rng: str = RNG_NAME

    @property
    def final(self) -> SimulationState:
        return self.states[-1]

    def records_dicts(self) -> list[dict]:
        return [r.to_dict() for r in self.records]


def run(
    space: EventSpace,
    selector: TokenSelector,
    steps: int,
    seed: "int | np.random.Generator",
    v: int | None = None,
    initial: SimulationState | None = None,
) -> RunResult:
    """Iterate the forward pass ``steps`` times from ``initial`` (default null).

    Deterministic in (space, selector, steps, seed, v, initial); the history
    contains steps+1 states and one record per step.
    """
    if steps < 0:
        raise ValidationError("steps must be non-negative")
    rng = _as_generator(seed)
    bound = space.complexity_bound if v is None else v
    state = initial if initial is not None else initial_state()
    states = [state]
    records = []
    for _ in range(steps):
        state, event, token = _advance(state, selector, space, bound, rng)
        states.append(state)
        records.append(
            StepRecord(
                t=state.t,
                event=event.id,
                token=token,
                realized=tuple(sorted(event.reachable_worlds)),
                rng_digest=rng_digest(rng),
            )
        )
    return RunResult(
        states=tuple(states),
        records=tuple(records),
        seed=int(seed) if isinstance(seed, int) else None,
    )
