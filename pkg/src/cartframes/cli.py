"""Command-line front end: load a scenario, dispatch, report.

Five subcommands mirror the library modules::

    cartframes frame  --scenario S --name F --op ensure --set w1,w2 [--machine]
    cartframes object --scenario S --name O --op manageable --agent 1 \
                      --set w1 --profile P --theta 0.8
    cartframes sim    --scenario S --name SPACE --selector SEL --steps 5 --seed 7
    cartframes duel   --scenario S --name D
    cartframes pse    --scenario S --name G --seed 7 [--audit-log FILE] [--timestamps]

Exit codes: 0 success, 1 domain error (validation, scenario diagnostics),
2 usage error. ``--machine`` switches the report to deterministic JSON
(schema in ``REPORT_SCHEMA``); the default is a human-readable table. Bare
scenario names resolve against ``$CARTFRAMES_SCENARIO_DIR``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from . import __version__, duel as duel_mod, frames, objects, simdyn
from . import kernels
from .errors import CartframesError, ValidationError
from .gate import audit_export, gate, utc_clock
from .scenario import Scenario, parse_scenario

FRAME_OPS = frames.OPERATORS + ("image",) + tuple(f"enumerate-{op}" for op in frames.OPERATORS)
OBJECT_OPS = (
    "ensure",
    "prevent",
    "ctrl",
    "obs",
    "image",
    "inevitable",
    "manageable",
    "vimage",
    "viable",
)

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["command", "scenario", "name", "params", "seeds", "version", "backend", "result"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": ["frame", "object", "sim", "duel", "pse"]},
        "scenario": {"type": "string"},
        "name": {"type": ["string", "null"]},
        "params": {"type": "object"},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "version": {"type": "string"},
        "backend": {"enum": ["numba", "numpy"]},
        "result": {"type": "object"},
    },
}


class CliUsageError(CartframesError):
    """Flags are malformed for the requested command (exit code 2)."""


@dataclass
class Report:
    """Deterministic result envelope for one CLI invocation."""

    command: str
    scenario: str
    name: str | None
    params: dict
    seeds: list[int]
    version: str
    backend: str
    result: dict

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "scenario": self.scenario,
            "name": self.name,
            "params": self.params,
            "seeds": self.seeds,
            "version": self.version,
            "backend": self.backend,
            "result": self.result,
        }

    def machine_text(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    def human_text(self) -> str:
        lines = [f"command: {self.command}", f"scenario: {self.scenario}"]
        if self.name is not None:
            lines.append(f"name: {self.name}")
        if self.seeds:
            lines.append(f"seeds: {', '.join(str(s) for s in self.seeds)}")
        lines.extend(_render_result(self.command, self.result))
        lines.append(f"version: {self.version} (kernels: {self.backend})")
        return "\n".join(lines)


def _render_result(command: str, result: Mapping) -> list[str]:
    lines: list[str] = []
    if command == "duel":
        lines.append("step        n            J1           J2")
        for row in result["table"]:
            lines.append(
                f"{row['step']:>4d}  {row['n']:>11.6f}  {row['j1']:>11.6f}  {row['j2']:>11.6f}"
            )
        lines.append(
            f"final n: {result['final_n']:.9f}  converged: {result['converged']}"
            f"  iterations: {result['iterations']}"
        )
        lines.append(
            "each agent would do better alone: "
            f"{result['improves_without_other']}"
        )
        return lines
    if command == "sim":
        lines.append("t     event        token    rng_digest")
        for rec in result["records"]:
            lines.append(
                f"{rec['t']:>4d}  {rec['event']:<11s}  {rec['token']:<7s}  {rec['rng_digest']}"
            )
        lines.append(f"trajectory: {' '.join(result['trajectory'])}")
        return lines
    if command == "pse":
        audit = result["audit"]
        lines.append(f"verdict: {audit['verdict']['decision']} ({audit['verdict']['rule']})")
        lines.append(f"rationale: {audit['verdict']['rationale']}")
        lines.append(f"partial trajectory: {' '.join(audit['partial_trajectory'])}")
        if audit["complete_trajectory"] is not None:
            lines.append(f"complete trajectory: {' '.join(audit['complete_trajectory'])}")
        else:
            lines.append("complete trajectory: (not run)")
        lines.append(f"status: {audit['status']}")
        return lines
    for key in sorted(result):
        value = result[key]
        if isinstance(value, list) and value and isinstance(value[0], list):
            lines.append(f"{key}:")
            lines.extend(f"  {{{', '.join(item)}}}" for item in value)
        elif isinstance(value, list):
            lines.append(f"{key}: {', '.join(str(v) for v in value)}")
        else:
            lines.append(f"{key}: {value}")
    return lines


def _flag(flags: Mapping, key: str, command: str) -> Any:
    value = flags.get(key)
    if value is None:
        raise CliUsageError(f"--{key} is required for the {command} command")
    return value


def _parse_set(value: "str | None") -> list[str]:
    if value is None or value == "":
        return []
    return [w for w in value.split(",") if w]


def _lookup(section: Mapping, name: str, what: str):
    if name not in section:
        raise ValidationError(
            f"{what} {name!r} is not defined in the scenario "
            f"(available: {sorted(section) or 'none'})"
        )
    return section[name]


def _run_frame(scn: Scenario, flags: Mapping) -> dict:
    name = _flag(flags, "name", "frame")
    op = _flag(flags, "op", "frame")
    frame = _lookup(scn.frames, name, "frame")
    if op == "image":
        return {"operator": op, "worlds": sorted(frames.image(frame))}
    if op.startswith("enumerate-"):
        family = frames.enumerate_operator(frame, op.removeprefix("enumerate-"))
        return {
            "operator": op,
            "count": len(family),
            "families": [[w for w in frame.worlds if w in s] for s in family],
        }
    subset = _parse_set(flags.get("set"))
    predicate = {
        "ensure": frames.ensures,
        "prevent": frames.prevents,
        "control": frames.controls,
        "observe": frames.observes,
        "inevitable": frames.inevitable,
    }[op]
    return {"operator": op, "set": subset, "value": bool(predicate(frame, subset))}


def _run_object(scn: Scenario, flags: Mapping) -> dict:
    name = _flag(flags, "name", "object")
    op = _flag(flags, "op", "object")
    agent = int(_flag(flags, "agent", "object"))
    obj = _lookup(scn.objects, name, "object")
    result: dict[str, Any] = {"operator": op, "agent": agent}
    if op == "image":
        result["worlds"] = sorted(objects.image_n(obj, agent))
        return result
    if op in ("manageable", "vimage", "viable"):
        profile = _lookup(scn.profiles, _flag(flags, "profile", "object"), "profile")
        theta = float(_flag(flags, "theta", "object"))
        result["theta"] = theta
        result["profile"] = flags["profile"]
        if op == "vimage":
            result["worlds"] = sorted(objects.vimage_n(obj, agent, profile, theta))
            return result
        subset = _parse_set(flags.get("set"))
        fn = objects.manageable_n if op == "manageable" else objects.viable_n
        result["set"] = subset
        result["value"] = bool(fn(obj, agent, subset, profile, theta))
        return result
    subset = _parse_set(flags.get("set"))
    predicate = {
        "ensure": objects.ensure_n,
        "prevent": objects.prevent_n,
        "ctrl": objects.ctrl_n,
        "obs": objects.obs_n,
        "inevitable": objects.inevitable_n,
    }[op]
    result["set"] = subset
    result["value"] = bool(predicate(obj, agent, subset))
    return result


def _run_sim(scn: Scenario, flags: Mapping) -> tuple[dict, list[int]]:
    name = _flag(flags, "name", "sim")
    space = _lookup(scn.event_spaces, name, "event space")
    selector = _lookup(scn.selectors, _flag(flags, "selector", "sim"), "selector")
    steps = 10 if flags.get("steps") is None else int(flags["steps"])
    seed = 0 if flags.get("seed") is None else int(flags["seed"])
    result = simdyn.run(space, selector, steps=steps, seed=seed)
    payload = {
        "steps": steps,
        "rng": result.rng,
        "records": result.records_dicts(),
        "trajectory": list(result.final.trajectory),
        "realized": sorted(list(p) for p in result.final.realized_worlds),
    }
    return payload, [seed]


def _run_duel(scn: Scenario, flags: Mapping) -> dict:
    name = _flag(flags, "name", "duel")
    report = duel_mod.run(_lookup(scn.duels, name, "duel"))
    return {
        "final_n": report.final_n,
        "converged": report.converged,
        "iterations": report.iterations,
        "final_costs": list(report.final_costs),
        "improves_without_other": list(report.improves_without_other),
        "table": [
            {"step": s.step, "n": s.n, "j1": s.j1, "j2": s.j2}
            for s in report.trajectory
        ],
    }


def _run_pse(scn: Scenario, flags: Mapping) -> tuple[dict, list[int]]:
    name = _flag(flags, "name", "pse")
    pipeline = _lookup(scn.pipelines, name, "pipeline")
    seed = 0 if flags.get("seed") is None else int(flags["seed"])
    s1, s2 = (int(x) for x in np.random.SeedSequence(seed).generate_state(2))
    clock = utc_clock if flags.get("timestamps") else None
    outcome = gate(
        pipeline.partial,
        pipeline.evaluator,
        pipeline.complete,
        pipeline.prompt,
        pipeline.condition,
        seeds=(s1, s2),
        clock=clock,
    )
    return {
        "audit": json.loads(audit_export(outcome)),
        "approved": outcome.verdict.decision == 1,
    }, [seed, s1, s2]


def run_command(scenario: Scenario, command: str, flags: Mapping) -> Report:
    """Dispatch one command against a parsed scenario and build its report."""
    seeds: list[int] = []
    if command == "frame":
        result = _run_frame(scenario, flags)
    elif command == "object":
        result = _run_object(scenario, flags)
    elif command == "sim":
        result, seeds = _run_sim(scenario, flags)
    elif command == "duel":
        result = _run_duel(scenario, flags)
    elif command == "pse":
        result, seeds = _run_pse(scenario, flags)
    else:
        raise CliUsageError(f"unknown command {command!r}")
    echo_keys = ("name", "op", "set", "agent", "theta", "seed", "steps", "selector", "profile")
    params = {k: flags.get(k) for k in echo_keys if flags.get(k) is not None}
    return Report(
        command=command,
        scenario=str(flags.get("scenario", "")),
        name=flags.get("name"),
        params=params,
        seeds=seeds,
        version=__version__,
        backend=kernels.backend_name(),
        result=result,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cartframes",
        description="Cartesian frame toolkit: frames, objects, simulator runs, "
        "optimizer duels, and gated simulation pipelines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_seed: bool = False):
        p.add_argument("--scenario", required=True, help="scenario file (or bare name)")
        p.add_argument("--name", help="named entry inside the scenario")
        p.add_argument("--machine", action="store_true", help="emit the JSON report")
        if with_seed:
            p.add_argument("--seed", type=int, default=0)

    p_frame = sub.add_parser("frame", help="frame operators and family enumeration")
    common(p_frame)
    p_frame.add_argument("--op", choices=FRAME_OPS)
    p_frame.add_argument("--set", help="comma-separated world labels")

    p_obj = sub.add_parser("object", help="per-agent operators on an object")
    common(p_obj)
    p_obj.add_argument("--op", choices=OBJECT_OPS)
    p_obj.add_argument("--set", help="comma-separated world labels")
    p_obj.add_argument("--agent", type=int)
    p_obj.add_argument("--theta", type=float)
    p_obj.add_argument("--profile", help="behavior profile name")

    p_sim = sub.add_parser("sim", help="seeded simulator run")
    common(p_sim, with_seed=True)
    p_sim.add_argument("--selector", help="token selector name")
    p_sim.add_argument("--steps", type=int, default=10)

    p_duel = sub.add_parser("duel", help="two-optimizer index duel")
    common(p_duel)

    p_pse = sub.add_parser("pse", help="gated partial-simulation pipeline")
    common(p_pse, with_seed=True)
    p_pse.add_argument("--audit-log", dest="audit_log", help="append the audit record here")
    p_pse.add_argument(
        "--timestamps", action="store_true", help="stamp wall-clock times into the audit"
    )

    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = vars(args)
    try:
        scenario = parse_scenario(args.scenario)
        report = run_command(scenario, args.command, flags)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CartframesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.machine_text() if args.machine else report.human_text())
    if args.command == "pse" and flags.get("audit_log"):
        line = json.dumps(
            report.result["audit"], sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        with open(flags["audit_log"], "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
