"""Partial-simulation extrapolation: try it small before running it big.

A gating pipeline holds two simulator handles: a partial one (perturbed along
fidelity / fragmentation / time-to-live) and a complete one. The prompt plus
a condition string is first run through the partial simulator; an evaluator
rule set inspects the partial trajectory and returns approve (1) or reject
(0). Only an approval lets the complete simulator run the same input, fresh.
Every invocation produces a full audit record that round-trips losslessly
through :func:`audit_export` / :func:`audit_import`.

Perturbation axes:

* fidelity        a total token-coarsening map over the alphabet
* fragmentation   the subset of simulacrum action labels kept
* time-to-live    the partial run's step budget

Failure policy is fail-closed: any error in the partial phase yields verdict
0 with the failure recorded; an error in the complete phase (after approval)
is recorded as status ``complete_error`` with no complete trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable, Iterable, Mapping, Sequence

from .canon import canonical_bytes
from .errors import GateConfigError, ValidationError
from .simdyn import (
    RNG_NAME,
    EventSpace,
    RunResult,
    SimEvent,
    Simulacrum,
    SimulationState,
    TokenSelector,
    run,
    state_with_context,
)

#: Reserved token placed between prompt and condition; never valid inside either.
SEPARATOR = "⟂"  # ⟂

AUDIT_FORMAT = "gate-audit@1"


@dataclass(frozen=True)
class PerturbationConfig:
    """One point on the fidelity / fragmentation / time-to-live axes."""

    fidelity: Any  # Mapping[str, str]; normalized to sorted item tuple
    fragmentation: frozenset[str]
    time_to_live: int

    def __post_init__(self):
        if isinstance(self.fidelity, Mapping):
            items = tuple(sorted((str(k), str(v)) for k, v in self.fidelity.items()))
        else:
            items = tuple(sorted((str(k), str(v)) for k, v in self.fidelity))
        object.__setattr__(self, "fidelity", items)
        object.__setattr__(self, "fragmentation", frozenset(self.fragmentation))
        if not self.fragmentation:
            raise ValidationError("fragmentation mask must keep at least one action label")
        if self.time_to_live < 1:
            raise ValidationError("time_to_live must be at least 1")

    @property
    def fidelity_map(self) -> dict[str, str]:
        return dict(self.fidelity)

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity_map,
            "fragmentation": sorted(self.fragmentation),
            "time_to_live": self.time_to_live,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PerturbationConfig":
        return cls(
            fidelity=data["fidelity"],
            fragmentation=frozenset(data["fragmentation"]),
            time_to_live=int(data["time_to_live"]),
        )


@dataclass(frozen=True)
class SimulatorHandle:
    """An event space plus selector, with a complexity bound and step budget."""

    space: EventSpace
    selector: TokenSelector
    v: int
    step_budget: int
    perturbation: PerturbationConfig | None = None

    def __post_init__(self):
        if self.v < 0:
            raise ValidationError("complexity bound must be non-negative")
        if self.step_budget < 0:
            raise ValidationError("step budget must be non-negative")


def compose_input(
    prompt: Sequence[str], condition: Sequence[str], alphabet: Sequence[str] | None = None
) -> tuple[str, ...]:
    """Concatenate prompt, the reserved separator, and the condition."""
    p = tuple(prompt)
    c = tuple(condition)
    if SEPARATOR in p or SEPARATOR in c:
        raise ValidationError(
            f"the separator token {SEPARATOR!r} is reserved and may not appear "
            "in prompts or conditions"
        )
    if alphabet is not None:
        known = set(alphabet)
        if SEPARATOR not in known:
            raise ValidationError(f"alphabet must reserve the separator token {SEPARATOR!r}")
        foreign = [t for t in p + c if t not in known]
        if foreign:
            raise ValidationError(f"tokens not in the alphabet: {foreign}")
    return p + (SEPARATOR,) + c


def _coarsen_tokens(tokens: Iterable[str], fid: Mapping[str, str]) -> tuple[str, ...]:
    return tuple(fid[t] for t in tokens)


def _coarsen_selector(selector: TokenSelector, fid: Mapping[str, str]) -> TokenSelector:
    """Push a selector through a fidelity map, merging collapsed tokens.

    Contexts that collide after coarsening keep their first occurrence.
    """
    coarse_alphabet: list[str] = []
    for tok in selector.alphabet:
        img = fid[tok]
        if img not in coarse_alphabet:
            coarse_alphabet.append(img)

    def fold(vec) -> dict[str, float]:
        out: dict[str, float] = {}
        for tok, p in zip(selector.alphabet, vec):
            if p:
                out[fid[tok]] = out.get(fid[tok], 0.0) + float(p)
        return out

    table = []
    seen = set()
    for ctx, vec in selector.entries:
        coarse_ctx = _coarsen_tokens(ctx, fid)
        if coarse_ctx in seen:
            continue
        seen.add(coarse_ctx)
        table.append((coarse_ctx, fold(vec)))
    default = fold(selector.default) if selector.default is not None else None
    return TokenSelector.build(coarse_alphabet, table, default)


def _fragment_event(event: SimEvent, keep: frozenset[str]) -> SimEvent:
    sims = tuple(
        Simulacrum(
            id=s.id,
            actions=tuple(a for a in s.actions if a in keep),
            description=s.description,
        )
        for s in event.simulacra
    )
    return SimEvent(id=event.id, object=event.object, simulacra=sims, weight=event.weight)


def perturb(handle: SimulatorHandle, perturbation: PerturbationConfig) -> SimulatorHandle:
    """Derive the partial handle: coarser alphabet, masked simulacra, short budget.

    The fidelity map must be total over the handle's alphabet and must fix
    the reserved separator. The complexity bound carries over unchanged, so
    the partial bound never exceeds the source bound.
    """
    fid = perturbation.fidelity_map
    alphabet = set(handle.selector.alphabet)
    missing = sorted(alphabet - set(fid))
    if missing:
        raise ValidationError(f"fidelity map is not total over the alphabet; missing {missing}")
    foreign = sorted(set(fid) - alphabet)
    if foreign:
        raise ValidationError(f"fidelity map names tokens outside the alphabet: {foreign}")
    if SEPARATOR in alphabet and fid[SEPARATOR] != SEPARATOR:
        raise ValidationError("fidelity map must fix the reserved separator token")

    selector = _coarsen_selector(handle.selector, fid)
    events = tuple(_fragment_event(ev, perturbation.fragmentation) for ev in handle.space.events)
    space = EventSpace(
        events=events,
        complexity_bound=handle.space.complexity_bound,
        scorer=handle.space.scorer,
    )
    return SimulatorHandle(
        space=space,
        selector=selector,
        v=handle.v,
        step_budget=perturbation.time_to_live,
        perturbation=perturbation,
    )


def run_partial(handle: SimulatorHandle, input_tokens: Sequence[str], seed: int) -> RunResult:
    """Run the handle's simulator with the input pre-loaded as trajectory context."""
    toks = tuple(input_tokens)
    known = set(handle.selector.alphabet)
    foreign = [t for t in toks if t not in known]
    if foreign:
        raise ValidationError(f"input tokens not in the handle's alphabet: {foreign}")
    return run(
        handle.space,
        handle.selector,
        steps=handle.step_budget,
        seed=seed,
        v=handle.v,
        initial=state_with_context(toks),
    )


# -- evaluator ----------------------------------------------------------------

RULE_KINDS = (
    "token_present",
    "subsequence",
    "token_count_at_least",
    "length_at_least",
    "world_realized",
    "always",
)


@dataclass(frozen=True)
class EvaluatorRule:
    """One ordered verdict rule: when its condition matches, it decides."""

    name: str
    kind: str
    decision: int
    token: str | None = None
    tokens: tuple[str, ...] | None = None
    count: int | None = None
    length: int | None = None
    world: str | None = None

    def __post_init__(self):
        if self.tokens is not None:
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.kind not in RULE_KINDS:
            raise ValidationError(f"unknown rule kind {self.kind!r}; expected {RULE_KINDS}")
        if self.decision not in (0, 1):
            raise ValidationError(f"rule decision must be 0 or 1, got {self.decision!r}")
        if not self.name:
            raise ValidationError("rules need a non-empty name")
        required = {
            "token_present": ("token",),
            "subsequence": ("tokens",),
            "token_count_at_least": ("token", "count"),
            "length_at_least": ("length",),
            "world_realized": ("world",),
            "always": (),
        }[self.kind]
        for attr in required:
            if getattr(self, attr) is None:
                raise ValidationError(f"rule {self.name!r} ({self.kind}) requires {attr!r}")
        if self.kind == "subsequence" and not self.tokens:
            raise ValidationError(f"rule {self.name!r}: subsequence must be non-empty")
        if self.kind == "token_count_at_least" and self.count < 1:
            raise ValidationError(f"rule {self.name!r}: count must be at least 1")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind, "decision": self.decision}
        for attr in ("token", "count", "length", "world"):
            if getattr(self, attr) is not None:
                out[attr] = getattr(self, attr)
        if self.tokens is not None:
            out["tokens"] = list(self.tokens)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvaluatorRule":
        kwargs = dict(data)
        if "tokens" in kwargs:
            kwargs["tokens"] = tuple(kwargs["tokens"])
        return cls(**kwargs)


@dataclass(frozen=True)
class EvaluatorSpec:
    """Ordered, total rule set; the last rule must match unconditionally."""

    rules: tuple[EvaluatorRule, ...]

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise ValidationError("evaluator needs at least one rule")
        if self.rules[-1].kind != "always":
            raise ValidationError(
                "the last evaluator rule must have kind 'always' so every "
                "trajectory receives a verdict"
            )
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValidationError("rule names must be unique")


@dataclass(frozen=True)
class Verdict:
    """Binary decision plus the rule and evidence span that produced it."""

    decision: int
    rule: str
    rationale: str
    span: tuple[int, int] | None = None

    def __post_init__(self):
        if self.decision not in (0, 1):
            raise ValidationError("verdict decision must be 0 or 1")
        if not self.rationale:
            raise ValidationError("verdict rationale must be non-empty")
        if self.span is not None:
            object.__setattr__(self, "span", (int(self.span[0]), int(self.span[1])))


def _match_rule(
    rule: EvaluatorRule, tokens: tuple[str, ...], realized: frozenset[tuple[str, str]]
) -> tuple[bool, tuple[int, int] | None, str]:
    if rule.kind == "always":
        return True, (0, len(tokens)), "no earlier rule matched"
    if rule.kind == "token_present":
        for i, t in enumerate(tokens):
            if t == rule.token:
                return True, (i, i + 1), f"token {rule.token!r} at position {i}"
        return False, None, ""
    if rule.kind == "subsequence":
        k = len(rule.tokens)
        for i in range(len(tokens) - k + 1):
            if tokens[i : i + k] == rule.tokens:
                return True, (i, i + k), f"sequence {list(rule.tokens)!r} at position {i}"
        return False, None, ""
    if rule.kind == "token_count_at_least":
        hits = [i for i, t in enumerate(tokens) if t == rule.token]
        if len(hits) >= rule.count:
            return (
                True,
                (hits[0], hits[rule.count - 1] + 1),
                f"{len(hits)} occurrences of {rule.token!r} (needed {rule.count})",
            )
        return False, None, ""
    if rule.kind == "length_at_least":
        if len(tokens) >= rule.length:
            return True, (0, len(tokens)), f"trajectory length {len(tokens)} >= {rule.length}"
        return False, None, ""
    # world_realized: only decidable when a full state was supplied
    for event_id, world in sorted(realized):
        if world == rule.world:
            return True, None, f"world {rule.world!r} realized by event {event_id!r}"
    return False, None, ""


def evaluate(
    spec: EvaluatorSpec, trajectory: "Sequence[str] | SimulationState"
) -> Verdict:
    """Apply the first matching rule; the mandatory default makes this total."""
    if isinstance(trajectory, SimulationState):
        tokens = trajectory.trajectory
        realized = trajectory.realized_worlds
    else:
        tokens = tuple(trajectory)
        realized = frozenset()
    for rule in spec.rules:
        hit, span, evidence = _match_rule(rule, tokens, realized)
        if hit:
            return Verdict(
                decision=rule.decision,
                rule=rule.name,
                rationale=f"rule {rule.name!r} ({rule.kind}): {evidence}",
                span=span,
            )
    raise AssertionError("unreachable: evaluator rule set is total by construction")


# -- the gate ------------------------------------------------------------------


def utc_clock() -> str:
    """Wall-clock timestamp source for audit records (opt-in)."""
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class GateOutcome:
    """Complete audit record of one gate invocation."""

    prompt: tuple[str, ...]
    condition: tuple[str, ...]
    perturbation: PerturbationConfig | None
    partial_trajectory: tuple[str, ...]
    partial_realized: frozenset[tuple[str, str]]
    verdict: Verdict
    complete_trajectory: tuple[str, ...] | None
    complete_realized: frozenset[tuple[str, str]] | None
    timestamps: tuple[str | None, str | None]
    seeds: tuple[int, int]
    v_partial: int
    v_complete: int
    status: str
    rng: str = RNG_NAME


def gate(
    partial: SimulatorHandle,
    evaluator: EvaluatorSpec,
    complete: SimulatorHandle,
    prompt: Sequence[str],
    condition: Sequence[str],
    seeds: tuple[int, int],
    clock: Callable[[], str] | None = None,
) -> GateOutcome:
    """Run the pipeline: partial simulation, verdict, complete run on approval.

    ``seeds`` feeds (partial run, complete run). ``clock`` injects timestamps;
    leaving it None keeps the record fully deterministic.
    """
    if partial.v > complete.v:
        raise GateConfigError(
            f"partial complexity bound {partial.v} exceeds complete bound {complete.v}"
        )
    seed_partial, seed_complete = int(seeds[0]), int(seeds[1])
    started = clock() if clock is not None else None

    composed = compose_input(prompt, condition, alphabet=complete.selector.alphabet)
    status = "ok"
    partial_trajectory: tuple[str, ...] = ()
    partial_realized: frozenset[tuple[str, str]] = frozenset()
    try:
        if partial.perturbation is not None:
            partial_input = _coarsen_tokens(composed, partial.perturbation.fidelity_map)
        else:
            partial_input = composed
        result = run_partial(partial, partial_input, seed_partial)
        partial_trajectory = result.final.trajectory
        partial_realized = result.final.realized_worlds
        verdict = evaluate(evaluator, result.final)
    except Exception as exc:  # fail closed: no complete run on any partial failure
        status = "partial_error"
        verdict = Verdict(
            decision=0,
            rule="gate-failure",
            rationale=f"partial phase failed closed: {exc}",
            span=None,
        )

    complete_trajectory: tuple[str, ...] | None = None
    complete_realized: frozenset[tuple[str, str]] | None = None
    if verdict.decision == 1:
        try:
            full = run_partial(complete, composed, seed_complete)
            complete_trajectory = full.final.trajectory
            complete_realized = full.final.realized_worlds
        except Exception:
            status = "complete_error"

    finished = clock() if clock is not None else None
    return GateOutcome(
        prompt=tuple(prompt),
        condition=tuple(condition),
        perturbation=partial.perturbation,
        partial_trajectory=partial_trajectory,
        partial_realized=partial_realized,
        verdict=verdict,
        complete_trajectory=complete_trajectory,
        complete_realized=complete_realized,
        timestamps=(started, finished),
        seeds=(seed_partial, seed_complete),
        v_partial=partial.v,
        v_complete=complete.v,
        status=status,
    )


def audit_export(outcome: GateOutcome) -> str:
    """One canonical JSON line carrying every audit field."""
    payload = {
        "format": AUDIT_FORMAT,
        "prompt": list(outcome.prompt),
        "condition": list(outcome.condition),
        "perturbation": outcome.perturbation.to_dict() if outcome.perturbation else None,
        "partial_trajectory": list(outcome.partial_trajectory),
        "partial_realized": sorted(list(pair) for pair in outcome.partial_realized),
        "verdict": {
            "decision": outcome.verdict.decision,
            "rule": outcome.verdict.rule,
            "rationale": outcome.verdict.rationale,
            "span": list(outcome.verdict.span) if outcome.verdict.span else None,
        },
        "complete_trajectory": (
            list(outcome.complete_trajectory)
            if outcome.complete_trajectory is not None
            else None
        ),
        "complete_realized": (
            sorted(list(pair) for pair in outcome.complete_realized)
            if outcome.complete_realized is not None
            else None
        ),
        "timestamps": list(outcome.timestamps),
        "seeds": list(outcome.seeds),
        "v_partial": outcome.v_partial,
        "v_complete": outcome.v_complete,
        "status": outcome.status,
        "rng": outcome.rng,
    }
    return canonical_bytes(payload).decode("utf-8")


def audit_import(line: str) -> GateOutcome:
    """Inverse of :func:`audit_export`."""
    data = json.loads(line)
    if data.get("format") != AUDIT_FORMAT:
        raise ValidationError(f"unknown audit record format {data.get('format')!r}")
    verdict = Verdict(
        decision=data["verdict"]["decision"],
        rule=data["verdict"]["rule"],
        rationale=data["verdict"]["rationale"],
        span=tuple(data["verdict"]["span"]) if data["verdict"]["span"] else None,
    )
    perturbation = (
        PerturbationConfig.from_dict(data["perturbation"]) if data["perturbation"] else None
    )
    return GateOutcome(
        prompt=tuple(data["prompt"]),
        condition=tuple(data["condition"]),
        perturbation=perturbation,
        partial_trajectory=tuple(data["partial_trajectory"]),
        partial_realized=frozenset(tuple(p) for p in data["partial_realized"]),
        verdict=verdict,
        complete_trajectory=(
            tuple(data["complete_trajectory"])
            if data["complete_trajectory"] is not None
            else None
        ),
        complete_realized=(
            frozenset(tuple(p) for p in data["complete_realized"])
            if data["complete_realized"] is not None
            else None
        ),
        timestamps=(data["timestamps"][0], data["timestamps"][1]),
        seeds=(data["seeds"][0], data["seeds"][1]),
        v_partial=data["v_partial"],
        v_complete=data["v_complete"],
        status=data["status"],
        rng=data["rng"],
    )
