"""Measurement-feedback control of noisy quantum trajectories.

Submodules:

- ``qmath``: state vectors, Hermitian exponentials, anchored Gram-Schmidt, fidelity
- ``dynamics``: Hamiltonians with static or stochastic noise and their propagators
- ``measurement``: unsharp Kraus families, outcome sampling
- ``feedback``: unitaries that restore the exact trajectory after a measurement
- ``systems``: spin, driven qubit, two-atom Rydberg and NV Ramsey models
- ``harness``: trajectory engine, ensembles, scenario configs, CSV output and CLI
"""

from .dynamics import HamiltonianSpec, NoiseProcess, propagate_exact, propagate_noisy
from .feedback import build_feedback, extract_feedback_hamiltonian, feedback_for_family
from .harness.config import Scenario
from .harness.engine import (
    ControlSchedule,
    EnsembleSummary,
    TrajectoryRecord,
    run_batch,
    run_reference,
    run_trajectory,
)
from .harness.runner import run_ensemble
from .measurement import KrausFamily, deterministic_branch, kraus_nlevel, kraus_qubit, measure
from .qmath import fidelity, gram_schmidt_anchored

__version__ = "0.1.0"

__all__ = [
    "ControlSchedule",
    "EnsembleSummary",
    "HamiltonianSpec",
    "KrausFamily",
    "NoiseProcess",
    "Scenario",
    "TrajectoryRecord",
    "build_feedback",
    "deterministic_branch",
    "extract_feedback_hamiltonian",
    "feedback_for_family",
    "fidelity",
    "gram_schmidt_anchored",
    "kraus_nlevel",
    "kraus_qubit",
    "measure",
    "propagate_exact",
    "propagate_noisy",
    "run_batch",
    "run_ensemble",
    "run_reference",
    "run_trajectory",
]
