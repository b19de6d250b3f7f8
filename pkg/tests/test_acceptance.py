"""Acceptance suite: one test per release criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines live.
Every expected value is either trivially forced by the fixture, produced by
an independent brute-force oracle (tests/oracles.py), or checked against an
exhaustive sweep.
"""

import json
import random
from contextlib import contextmanager

import jsonschema
import numpy as np
import pytest

import oracles
from cartframes import duel as duel_mod, frames, objects, simdyn
from cartframes.cli import REPORT_SCHEMA, main
from cartframes.frames import CartesianFrame
from cartframes.gate import (
    SEPARATOR,
    EvaluatorRule,
    EvaluatorSpec,
    PerturbationConfig,
    SimulatorHandle,
    audit_export,
    audit_import,
    gate,
    perturb,
    run_partial,
)
from cartframes.objects import BehaviorProfile, CartesianObject
from cartframes.scenario import parse_scenario
from cartframes.simdyn import EventSpace, SimEvent, Simulacrum, TokenSelector


@contextmanager
def criterion(number, label):
    try:
        yield
    except BaseException:
        print(f"[acceptance] criterion {number} ({label}): FAIL", flush=True)
        raise
    print(f"[acceptance] criterion {number} ({label}): PASS", flush=True)


def build_frame(actions, envs, worlds, out):
    return CartesianFrame.build(actions, envs, out, worlds=worlds)


def build_object(agent_actions, envs, worlds, jout):
    flat = [jout[k] for k in oracles.o_joint_cells(agent_actions, envs)]
    return CartesianObject.build(agent_actions, envs, flat, worlds=worlds)


PREDICATES = {
    "ensure": frames.ensures,
    "prevent": frames.prevents,
    "control": frames.controls,
    "observe": frames.observes,
    "inevitable": frames.inevitable,
}


def test_criterion_1_enumeration_matches_membership():
    with criterion(1, "enumerate vs membership on 200 random frames"):
        rng = random.Random(1001)
        for _ in range(200):
            actions, envs, worlds, out = oracles.random_frame(
                rng, max_actions=4, max_envs=4, max_worlds=10
            )
            frame = build_frame(actions, envs, worlds, out)
            subsets = list(oracles.all_subsets(frame.worlds))
            for op, pred in PREDICATES.items():
                family = frames.enumerate_operator(frame, op)
                expected = [s for s in subsets if pred(frame, s)]
                assert family == expected, f"{op} family diverges from membership"


def test_criterion_2_three_by_three_regression(grid3, grid3_raw):
    with criterion(2, "3x3 distinct-world frame regression"):
        actions, envs, worlds, out = grid3_raw
        oracle_count = sum(
            oracles.o_ensures(actions, envs, out, s)
            for s in oracles.all_subsets(worlds)
        )
        assert oracle_count == 169
        assert len(frames.enumerate_operator(grid3, "ensure")) == 169
        assert frames.controls(grid3, {"w1", "w2", "w3"}) is True
        assert frames.inevitable(grid3, set(worlds)) is True
        assert frames.outcome(grid3, "a1", "e2") == "w2"


def test_criterion_3_duality_and_monotonicity():
    with criterion(3, "duality and upward closure on 200 random frames"):
        rng = random.Random(3003)
        for _ in range(200):
            actions, envs, worlds, out = oracles.random_frame(
                rng, max_actions=4, max_envs=4, max_worlds=8
            )
            frame = build_frame(actions, envs, worlds, out)
            full = set(worlds)
            ensure_table = frames.operator_table(frame, "ensure")
            prevent_table = frames.operator_table(frame, "prevent")
            size = ensure_table.size
            # duality: prevent(S) == ensure(complement), via independent predicates
            for s in oracles.all_subsets(worlds):
                assert frames.prevents(frame, s) == frames.ensures(frame, full - s)
            # upward closure of ensure / downward closure of prevent, exhaustively
            idx = np.arange(size, dtype=np.uint64)
            for b in range(len(worlds)):
                up = (idx | np.uint64(1 << b)).astype(np.int64)
                assert not (ensure_table & ~ensure_table[up]).any()
                assert not (prevent_table[up] & ~prevent_table).any()


def test_criterion_4_object_frame_reduction():
    with criterion(4, "object/frame agreement (100 one-agent, 50 two-agent)"):
        rng = random.Random(4004)
        ops = ("ensure", "prevent", "control", "observe", "inevitable")
        for _ in range(100):
            actions, envs, worlds, out = oracles.random_frame(
                rng, max_actions=3, max_envs=3, max_worlds=8
            )
            frame = build_frame(actions, envs, worlds, out)
            jout = {(a, e): out[(a, e)] for a in actions for e in envs}
            obj = build_object([actions], envs, worlds, jout)
            for op in ops:
                assert np.array_equal(
                    objects.operator_table_n(obj, 1, op),
                    frames.operator_table(frame, op),
                ), op
            assert objects.image_n(obj, 1) == frames.image(frame)
            assert objects.inevitable_n(obj, 1, frames.image(frame))
        for _ in range(50):
            agent_actions, envs, worlds, jout = oracles.random_object(
                rng, 2, max_actions=3, max_envs=3, max_worlds=8
            )
            obj = build_object(agent_actions, envs, worlds, jout)
            for agent in (1, 2):
                folded = objects.as_frame(obj, agent)
                for op in ("ensure", "prevent", "observe"):
                    assert np.array_equal(
                        objects.operator_table_n(obj, agent, op),
                        frames.operator_table(folded, op),
                    ), (op, agent)


def test_criterion_5_probabilistic_operators():
    with criterion(5, "manageable/vimage vs weighted-enumeration oracle"):
        rng = random.Random(5005)
        for _ in range(25):
            agent_actions, envs, worlds, jout = oracles.random_object(
                rng, 2, max_actions=3, max_envs=3, max_worlds=6
            )
            if len(jout) > 64:
                continue
            obj = build_object(agent_actions, envs, worlds, jout)
            agents, env = oracles.random_profile(rng, agent_actions, envs, skip_agent=1)
            profile = BehaviorProfile.build(agents, env)
            subset = set(rng.sample(worlds, k=rng.randint(0, len(worlds))))

            probs = objects.success_probabilities(obj, 1, subset, profile)
            for ai, action in enumerate(agent_actions[0]):
                expected = oracles.o_success_prob(
                    agent_actions, envs, jout, 1, action, subset, agents, env
                )
                assert abs(probs[ai] - expected) <= 1e-12
            world_probs = objects.world_probabilities(obj, 1, profile)
            for ai, action in enumerate(agent_actions[0]):
                for wi, world in enumerate(worlds):
                    expected = oracles.o_world_prob(
                        agent_actions, envs, jout, 1, action, world, agents, env
                    )
                    assert abs(world_probs[ai, wi] - expected) <= 1e-12

            # antitone over the 21-point grid, with the boundary identities
            previous = None
            for theta in [i / 20 for i in range(21)]:
                vi = objects.vimage_n(obj, 1, profile, theta)
                if previous is not None:
                    assert vi <= previous
                previous = vi
            assert objects.vimage_n(obj, 1, profile, 1.0) == frozenset()
            assert objects.vimage_n(obj, 1, profile, 0.0) == objects.image_n(obj, 1)


def _unit_event(event_id, weight=1.0, description=None):
    obj = CartesianObject.build([["u"]], ["e"], ["w1"])
    return SimEvent(event_id, obj, (Simulacrum(f"s-{event_id}", ("u",), description),), weight)


def test_criterion_6_simulator_dynamics():
    with criterion(6, "seeded simulator: determinism, gate, frequencies"):
        # byte-identical repeated runs
        space = EventSpace(
            (_unit_event("A", 1.0), _unit_event("B", 3.0)), complexity_bound=10_000
        )
        sel = TokenSelector.build(["x", "y"], {}, default={"x": 0.7, "y": 0.3})
        r1 = simdyn.run(space, sel, steps=25, seed=99)
        r2 = simdyn.run(space, sel, steps=25, seed=99)
        assert json.dumps(r1.records_dicts()) == json.dumps(r2.records_dicts())
        assert r1.states == r2.states

        # degenerate selector: exact 5-token sequence
        only_x = TokenSelector.build(["x", "y"], {}, default={"x": 1.0})
        run5 = simdyn.run(space, only_x, steps=5, seed=0)
        assert run5.final.trajectory == ("x",) * 5

        # the complexity gate never admits the over-bound event
        light = _unit_event("light")
        heavy = _unit_event("heavy", description={"blob": "#" * 300})
        gated = EventSpace((light, heavy), complexity_bound=simdyn.complexity(light))
        trace = simdyn.run(gated, only_x, steps=10_000, seed=7)
        chosen = [rec.event for rec in trace.records]
        assert len(chosen) == 10_000
        assert set(chosen) == {"light"}

        # weighted selection frequencies: 1:3 within +-0.02 over 10k draws
        rng = np.random.Generator(np.random.PCG64(424242))
        draws = 10_000
        hits = sum(
            simdyn.select_event(space, space.complexity_bound, rng).id == "A"
            for _ in range(draws)
        )
        assert abs(hits / draws - 0.25) < 0.02
        assert abs((draws - hits) / draws - 0.75) < 0.02


def test_criterion_7_duel():
    with criterion(7, "duel encoding, equilibrium sweep, counterfactuals"):
        assert duel_mod.encode_state(1.75, 3).tolist() == [0.25, 0.75, 0.0]
        for xi in (0.0, 0.25, 0.5, 0.75, 1.0):
            config = duel_mod.DuelConfig(
                k=3, p1=(1, 0, 0), p2=(0, 0, 1), xi=xi, eta=0.1, n0=2.0
            )
            report = duel_mod.run(config)
            target = xi * 1 + (1 - xi) * 3
            assert report.converged
            assert abs(report.final_n - target) < 1e-6
            for row in report.trajectory:
                assert row.j1_solo <= row.j1_next + 1e-12
                assert row.j2_solo <= row.j2_next + 1e-12


def _gate_fixture(rng):
    alphabet = ("x", "y", SEPARATOR)
    obj = CartesianObject.build([["u", "d"]], ["e"], ["w1", "w2"])
    sim = Simulacrum("s1", ("u", "d"), {"role": "fixture"})
    space = EventSpace((SimEvent("C1", obj, (sim,)),), complexity_bound=10_000)
    px = rng.uniform(0.2, 0.8)
    selector = TokenSelector.build(alphabet, {}, default={"x": px, "y": 1 - px})
    complete = SimulatorHandle(
        space=space, selector=selector, v=space.complexity_bound,
        step_budget=rng.randint(2, 5),
    )
    ttl = rng.randint(1, 3)
    partial = perturb(
        complete,
        PerturbationConfig(
            fidelity={t: t for t in alphabet},
            fragmentation={"u", "d"},
            time_to_live=ttl,
        ),
    )
    style = rng.choice(("forbid", "approve", "reject", "length"))
    if style == "forbid":
        rules = (
            EvaluatorRule("forbid-y", "token_present", 0, token="y"),
            EvaluatorRule("default", "always", rng.choice((0, 1))),
        )
    elif style == "length":
        rules = (
            EvaluatorRule("long", "length_at_least", rng.choice((0, 1)), length=4),
            EvaluatorRule("default", "always", rng.choice((0, 1))),
        )
    else:
        rules = (EvaluatorRule("const", "always", 1 if style == "approve" else 0),)
    return partial, EvaluatorSpec(rules), complete, ttl


def test_criterion_8_gate_pipeline():
    with criterion(8, "gate soundness, discipline, audits, identity perturbation"):
        rng = random.Random(8008)
        for i in range(1000):
            partial, evaluator, complete, ttl = _gate_fixture(rng)
            assert partial.v <= complete.v
            seeds = (rng.randrange(2**63), rng.randrange(2**63))
            outcome = gate(partial, evaluator, complete, ("x",), ("y",), seeds)
            # soundness: the complete simulator ran iff the verdict approved
            assert (outcome.complete_trajectory is not None) == (
                outcome.verdict.decision == 1
            )
            assert outcome.status == "ok"
            # TTL discipline: emitted length never exceeds the budget
            emitted = len(outcome.partial_trajectory) - 3  # input p + sep + c
            assert 0 <= emitted <= ttl
            assert outcome.v_partial <= outcome.v_complete
            # audit round-trip lossless
            line = audit_export(outcome)
            assert audit_import(line) == outcome
            assert audit_export(audit_import(line)) == line

        # identity perturbation reproduces the truncated unperturbed run
        rng2 = random.Random(88)
        for _ in range(25):
            partial, _, complete, ttl = _gate_fixture(rng2)
            seed = rng2.randrange(2**31)
            tokens = ("x", SEPARATOR, "y")
            short = run_partial(partial, tokens, seed)
            full = run_partial(complete, tokens, seed)
            truncated = full.records[:ttl]
            assert json.dumps([r.to_dict() for r in short.records]) == json.dumps(
                [r.to_dict() for r in truncated]
            )
            assert short.states[: ttl + 1] == full.states[: ttl + 1]


GOLDEN_ALPHABET = ["x", "y", SEPARATOR]


def _golden_scenario(seed):
    """Deterministic scenario payload #seed, mixing all section kinds."""
    rng = random.Random(seed * 7919 + 13)
    actions, envs, worlds, out = oracles.random_frame(
        rng, max_actions=4, max_envs=4, max_worlds=8
    )
    matrix = [out[(a, e)] for a in actions for e in envs]
    agent_actions, o_envs, o_worlds, jout = oracles.random_object(rng, 2, max_worlds=6)
    table = [jout[k] for k in oracles.o_joint_cells(agent_actions, o_envs)]
    agents, envd = oracles.random_profile(rng, agent_actions, o_envs, skip_agent=1)
    xi = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0])
    px = round(rng.uniform(0.3, 0.7), 3)
    payload = {
        "version": 1,
        "frames": {"f": {"actions": actions, "envs": envs, "worlds": worlds,
                         "matrix": matrix}},
        "objects": {"o": {"agents": agent_actions, "envs": o_envs,
                          "worlds": o_worlds, "table": table}},
        "profiles": {"p": {"agents": {str(j): d for j, d in agents.items()},
                           "env": envd}},
        "selectors": {"sel": {"alphabet": GOLDEN_ALPHABET,
                              "default": {"x": px, "y": round(1 - px, 3)},
                              "table": []}},
        "event_spaces": {"es": {"complexity_bound": 10000, "events": [
            {"id": "C1", "object": "o", "weight": 1.0,
             "simulacra": [{"id": "s1", "actions": agent_actions[0],
                            "description": {"n": seed}}]}]}},
        "duels": {"d": {"k": 3, "p1": [1, 0, 0], "p2": [0, 0, 1], "xi": xi,
                        "eta": 0.1, "n0": 2.0}},
        "pipelines": {"g": {"space": "es", "selector": "sel", "complete_budget": 3,
                            "perturbation": {
                                "fidelity": {t: t for t in GOLDEN_ALPHABET},
                                "fragmentation": agent_actions[0],
                                "time_to_live": 2},
                            "evaluator": {"rules": [
                                {"name": "forbid-y", "kind": "token_present",
                                 "decision": 0, "token": "y"},
                                {"name": "ok", "kind": "always", "decision": 1}]},
                            "prompt": ["x"], "condition": ["y"]}},
    }
    return payload


def test_criterion_9_cli(tmp_path, capsys):
    with criterion(9, "CLI paired equality, exit codes, schema"):
        default_sum = None
        for seed in range(20):
            path = tmp_path / f"golden_{seed}.json"
            path.write_text(json.dumps(_golden_scenario(seed)), encoding="utf-8")
            scn = parse_scenario(path)

            def run_machine(*argv):
                code = main([*argv, "--machine"])
                out = capsys.readouterr().out
                assert code == 0
                report = json.loads(out)
                jsonschema.validate(report, REPORT_SCHEMA)
                return report

            frame = scn.frames["f"]
            subset = ",".join(sorted(frame.worlds)[: len(frame.worlds) // 2])
            rep = run_machine("frame", "--scenario", str(path), "--name", "f",
                              "--op", "ensure", "--set", subset)
            want = frames.ensures(frame, set(subset.split(",")) if subset else set())
            assert rep["result"]["value"] == want

            rep = run_machine("frame", "--scenario", str(path), "--name", "f",
                              "--op", "enumerate-observe")
            family = frames.enumerate_operator(frame, "observe")
            assert rep["result"]["count"] == len(family)

            obj = scn.objects["o"]
            rep = run_machine("object", "--scenario", str(path), "--name", "o",
                              "--op", "vimage", "--agent", "1",
                              "--profile", "p", "--theta", "0.25")
            assert rep["result"]["worlds"] == sorted(
                objects.vimage_n(obj, 1, scn.profiles["p"], 0.25)
            )

            rep = run_machine("duel", "--scenario", str(path), "--name", "d")
            duel_report = duel_mod.run(scn.duels["d"])
            assert rep["result"]["final_n"] == duel_report.final_n

            rep = run_machine("sim", "--scenario", str(path), "--name", "es",
                              "--selector", "sel", "--steps", "4", "--seed", str(seed))
            lib = simdyn.run(scn.event_spaces["es"], scn.selectors["sel"],
                             steps=4, seed=seed)
            assert rep["result"]["trajectory"] == list(lib.final.trajectory)

            rep = run_machine("pse", "--scenario", str(path), "--name", "g",
                              "--seed", str(seed))
            s1, s2 = (int(x) for x in np.random.SeedSequence(seed).generate_state(2))
            pipe = scn.pipelines["g"]
            expected = gate(pipe.partial, pipe.evaluator, pipe.complete,
                            pipe.prompt, pipe.condition, (s1, s2))
            assert rep["result"]["audit"] == json.loads(audit_export(expected))

        # exit-code matrix: success / domain error / usage error
        good = tmp_path / "golden_0.json"
        assert main(["frame", "--scenario", str(good), "--name", "f",
                     "--op", "image"]) == 0
        capsys.readouterr()
        assert main(["frame", "--scenario", str(good), "--name", "missing",
                     "--op", "image"]) == 1
        capsys.readouterr()
        assert main(["frame", "--scenario", str(tmp_path / "absent.json"),
                     "--name", "f", "--op", "image"]) == 1
        capsys.readouterr()
        assert main(["frame", "--scenario", str(good), "--name", "f"]) == 2
        capsys.readouterr()
        with pytest.raises(SystemExit) as exc:
            main(["frame", "--scenario", str(good), "--name", "f", "--op", "warp"])
        assert exc.value.code == 2
        capsys.readouterr()
