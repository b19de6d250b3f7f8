"""cartframes: finite Cartesian frames, multi-agent objects, and gated simulators.

Submodules:

* :mod:`cartframes.frames`   two-sided frames and their world-set operators
* :mod:`cartframes.objects`  n-agent Cartesian objects, probabilistic variants
* :mod:`cartframes.simdyn`   the simulator as a seeded dynamical system
* :mod:`cartframes.duel`     two gradient optimizers sharing one index
* :mod:`cartframes.gate`     partial-simulation gating with audit records
* :mod:`cartframes.scenario` the JSON scenario file format
* :mod:`cartframes.cli`      the command-line front end
* :mod:`cartframes.kernels`  numba/numpy subset-enumeration backends
"""

__version__ = "0.1.0"

from .duel import DuelConfig, DuelReport, DuelState, DuelStep
from .errors import (
    CartframesError,
    EnumerationCapError,
    GateConfigError,
    ScenarioError,
    SelectionError,
    UnknownIdentifierError,
    ValidationError,
)
from .frames import CartesianFrame
from .gate import (
    SEPARATOR,
    EvaluatorRule,
    EvaluatorSpec,
    GateOutcome,
    PerturbationConfig,
    SimulatorHandle,
    Verdict,
)
from .objects import BehaviorProfile, CartesianObject
from .scenario import PsePipeline, Scenario, parse_scenario
from .simdyn import (
    EventSpace,
    RunResult,
    SimEvent,
    Simulacrum,
    SimulationState,
    StepRecord,
    TokenSelector,
)

__all__ = [
    "__version__",
    "BehaviorProfile",
    "CartesianFrame",
    "CartesianObject",
    "CartframesError",
    "DuelConfig",
    "DuelReport",
    "DuelState",
    "DuelStep",
    "EnumerationCapError",
    "EvaluatorRule",
    "EvaluatorSpec",
    "EventSpace",
    "GateConfigError",
    "GateOutcome",
    "PerturbationConfig",
    "PsePipeline",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SelectionError",
    "SEPARATOR",
    "SimEvent",
    "Simulacrum",
    "SimulationState",
    "SimulatorHandle",
    "StepRecord",
    "TokenSelector",
    "UnknownIdentifierError",
    "ValidationError",
    "Verdict",
    "parse_scenario",
]
