"""Scenario files: one JSON document declaring named fixtures for every module.

Layout (all sections optional, names unique per section)::

    {
      "version": 1,
      "frames":       {name: {actions, envs, matrix, [worlds]}},
      "objects":      {name: {agents, envs, table, [worlds]}},
      "profiles":     {name: {agents: {"<index>": {action: p}}, env: {state: p}}},
      "selectors":    {name: {alphabet, [table], [default]}},
      "event_spaces": {name: {complexity_bound, events: [
                         {id, object: <object name>, weight,
                          simulacra: [{id, [actions], [description]}]}]}},
      "duels":        {name: {k, p1, p2, xi, eta, n0,
                              [max_steps], [tolerance], [rule]}},
      "pipelines":    {name: {space, selector, complete_budget, [v_complete],
                              [perturbation], evaluator, prompt, condition}}

Frame matrices and object tables are flat row-major label lists (axes: agent
1 ... agent n, then environment). Diagnostics carry the dotted path of the
first offending field and split into distinct classes: file problems, version
problems, dangling references, and invariant violations.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .duel import DuelConfig
from .errors import (
    CartframesError,
    ScenarioError,
    ScenarioFileError,
    ScenarioInvariantError,
    ScenarioReferenceError,
    ScenarioVersionError,
)
from .frames import CartesianFrame
from .gate import EvaluatorRule, EvaluatorSpec, PerturbationConfig, SimulatorHandle, perturb
from .objects import BehaviorProfile, CartesianObject
from .simdyn import EventSpace, SimEvent, Simulacrum, TokenSelector

SCENARIO_VERSION = 1

#: Environment variable naming a directory searched for bare scenario names.
SCENARIO_DIR_VAR = "CARTFRAMES_SCENARIO_DIR"

KNOWN_SECTIONS = (
    "frames",
    "objects",
    "profiles",
    "selectors",
    "event_spaces",
    "duels",
    "pipelines",
)


@dataclass(frozen=True)
class PsePipeline:
    """A resolved gating pipeline: both handles plus evaluator and input."""

    complete: SimulatorHandle
    partial: SimulatorHandle
    evaluator: EvaluatorSpec
    prompt: tuple[str, ...]
    condition: tuple[str, ...]


@dataclass
class Scenario:
    """Validated, fully cross-referenced contents of one scenario file."""

    version: int
    frames: dict[str, CartesianFrame] = field(default_factory=dict)
    objects: dict[str, CartesianObject] = field(default_factory=dict)
    profiles: dict[str, BehaviorProfile] = field(default_factory=dict)
    selectors: dict[str, TokenSelector] = field(default_factory=dict)
    event_spaces: dict[str, EventSpace] = field(default_factory=dict)
    duels: dict[str, DuelConfig] = field(default_factory=dict)
    pipelines: dict[str, PsePipeline] = field(default_factory=dict)


def _need(data: Mapping, key: str, path: str) -> Any:
    if not isinstance(data, Mapping):
        raise ScenarioInvariantError("expected an object", path=path)
    if key not in data:
        raise ScenarioInvariantError(f"missing required field {key!r}", path=path)
    return data[key]


@contextmanager
def _invariant(path: str):
    """Re-raise domain validation errors as scenario diagnostics at ``path``."""
    try:
        yield
    except ScenarioError:
        raise
    except (CartframesError, TypeError, ValueError, KeyError, AttributeError) as exc:
        raise ScenarioInvariantError(str(exc), path=path) from exc


def _parse_frame(name: str, data: Mapping, path: str) -> CartesianFrame:
    actions = _need(data, "actions", path)
    envs = _need(data, "envs", path)
    flat = _need(data, "matrix", path)
    if not isinstance(flat, list) or len(flat) != len(actions) * len(envs):
        raise ScenarioInvariantError(
            f"matrix must be a flat list of {len(actions) * len(envs)} world labels",
            path=f"{path}.matrix",
        )
    rows = [flat[i * len(envs) : (i + 1) * len(envs)] for i in range(len(actions))]
    with _invariant(path):
        return CartesianFrame.build(actions, envs, rows, worlds=data.get("worlds"))


def _parse_object(name: str, data: Mapping, path: str) -> CartesianObject:
    agents = _need(data, "agents", path)
    envs = _need(data, "envs", path)
    flat = _need(data, "table", path)
    with _invariant(path):
        return CartesianObject.build(agents, envs, flat, worlds=data.get("worlds"))


def _parse_profile(name: str, data: Mapping, path: str) -> BehaviorProfile:
    agents = _need(data, "agents", path)
    env = _need(data, "env", path)
    with _invariant(path):
        by_index = {int(k): dict(v) for k, v in agents.items()}
        return BehaviorProfile.build(by_index, dict(env))


def _parse_selector(name: str, data: Mapping, path: str) -> TokenSelector:
    alphabet = _need(data, "alphabet", path)
    table = []
    for i, entry in enumerate(data.get("table", [])):
        ctx = _need(entry, "context", f"{path}.table[{i}]")
        dist = _need(entry, "dist", f"{path}.table[{i}]")
        table.append((tuple(ctx), dict(dist)))
    with _invariant(path):
        return TokenSelector.build(alphabet, table, data.get("default"))


def _parse_space(
    name: str, data: Mapping, objects: dict[str, CartesianObject], path: str
) -> EventSpace:
    bound = _need(data, "complexity_bound", path)
    events = []
    for i, ev in enumerate(_need(data, "events", path)):
        ev_path = f"{path}.events[{i}]"
        obj_name = _need(ev, "object", ev_path)
        if obj_name not in objects:
            raise ScenarioReferenceError(
                f"undefined object {obj_name!r}", path=f"{ev_path}.object"
            )
        sims = []
        for j, sim in enumerate(_need(ev, "simulacra", ev_path)):
            with _invariant(f"{ev_path}.simulacra[{j}]"):
                sims.append(
                    Simulacrum(
                        id=_need(sim, "id", f"{ev_path}.simulacra[{j}]"),
                        actions=tuple(sim.get("actions", ())),
                        description=sim.get("description"),
                    )
                )
        with _invariant(ev_path):
            events.append(
                SimEvent(
                    id=_need(ev, "id", ev_path),
                    object=objects[obj_name],
                    simulacra=tuple(sims),
                    weight=float(ev.get("weight", 1.0)),
                )
            )
    with _invariant(path):
        return EventSpace(events=tuple(events), complexity_bound=int(bound))


def _parse_duel(name: str, data: Mapping, path: str) -> DuelConfig:
    with _invariant(path):
        return DuelConfig(
            k=int(_need(data, "k", path)),
            p1=tuple(_need(data, "p1", path)),
            p2=tuple(_need(data, "p2", path)),
            xi=float(_need(data, "xi", path)),
            eta=float(_need(data, "eta", path)),
            n0=float(_need(data, "n0", path)),
            max_steps=int(data.get("max_steps", 10_000)),
            tolerance=float(data.get("tolerance", 1e-9)),
            rule=data.get("rule", "attraction"),
        )


def _parse_pipeline(
    name: str,
    data: Mapping,
    spaces: dict[str, EventSpace],
    selectors: dict[str, TokenSelector],
    path: str,
) -> PsePipeline:
    space_name = _need(data, "space", path)
    if space_name not in spaces:
        raise ScenarioReferenceError(f"undefined event space {space_name!r}", path=f"{path}.space")
    selector_name = _need(data, "selector", path)
    if selector_name not in selectors:
        raise ScenarioReferenceError(
            f"undefined selector {selector_name!r}", path=f"{path}.selector"
        )
    space = spaces[space_name]
    selector = selectors[selector_name]
    with _invariant(path):
        complete = SimulatorHandle(
            space=space,
            selector=selector,
            v=int(data.get("v_complete", space.complexity_bound)),
            step_budget=int(_need(data, "complete_budget", path)),
        )
        if data.get("perturbation") is not None:
            partial = perturb(complete, PerturbationConfig.from_dict(data["perturbation"]))
        else:
            partial = complete
        rules = [
            EvaluatorRule.from_dict(r)
            for r in _need(_need(data, "evaluator", path), "rules", f"{path}.evaluator")
        ]
        return PsePipeline(
            complete=complete,
            partial=partial,
            evaluator=EvaluatorSpec(tuple(rules)),
            prompt=tuple(_need(data, "prompt", path)),
            condition=tuple(_need(data, "condition", path)),
        )


def _reject_duplicate_keys(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise ScenarioInvariantError(f"duplicate name {key!r}")
        seen.add(key)
        out[key] = value
    return out


def resolve_scenario_path(path: "str | Path") -> Path:
    """Resolve a scenario argument, falling back to the scenario directory."""
    p = Path(path)
    if p.exists():
        return p
    base = os.environ.get(SCENARIO_DIR_VAR)
    if base and not p.is_absolute():
        candidate = Path(base) / p
        if candidate.exists():
            return candidate
    raise ScenarioFileError(f"scenario file not found: {path}")


def parse_scenario(path: "str | Path") -> Scenario:
    """Load and fully validate a scenario file.

    Raises a :class:`ScenarioError` subclass naming the first offending field.
    """
    resolved = resolve_scenario_path(path)
    try:
        text = resolved.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFileError(f"cannot read scenario file: {exc}") from exc
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"scenario is not valid JSON: {exc}") from exc

    if not isinstance(data, dict):
        raise ScenarioInvariantError("scenario root must be an object")
    if "version" not in data:
        raise ScenarioVersionError("missing version field", path="version")
    if data["version"] != SCENARIO_VERSION:
        raise ScenarioVersionError(
            f"unsupported scenario version {data['version']!r} "
            f"(this build reads version {SCENARIO_VERSION})",
            path="version",
        )
    unknown = sorted(set(data) - set(KNOWN_SECTIONS) - {"version"})
    if unknown:
        raise ScenarioInvariantError(f"unknown sections {unknown}", path=unknown[0])

    scn = Scenario(version=SCENARIO_VERSION)
    for name, body in data.get("frames", {}).items():
        scn.frames[name] = _parse_frame(name, body, f"frames.{name}")
    for name, body in data.get("objects", {}).items():
        scn.objects[name] = _parse_object(name, body, f"objects.{name}")
    for name, body in data.get("profiles", {}).items():
        scn.profiles[name] = _parse_profile(name, body, f"profiles.{name}")
    for name, body in data.get("selectors", {}).items():
        scn.selectors[name] = _parse_selector(name, body, f"selectors.{name}")
    for name, body in data.get("event_spaces", {}).items():
        scn.event_spaces[name] = _parse_space(name, body, scn.objects, f"event_spaces.{name}")
    for name, body in data.get("duels", {}).items():
        scn.duels[name] = _parse_duel(name, body, f"duels.{name}")
    for name, body in data.get("pipelines", {}).items():
        scn.pipelines[name] = _parse_pipeline(
            name, body, scn.event_spaces, scn.selectors, f"pipelines.{name}"
        )
    return scn
