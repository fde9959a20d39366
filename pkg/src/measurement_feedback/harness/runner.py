"""Scenario-level entry points used by the CLI."""

from __future__ import annotations

import itertools

import numpy as np

from ..feedback import extract_feedback_hamiltonian
from .config import BuiltScenario, Scenario
from .engine import (
    EnsembleSummary,
    TrajectoryRecord,
    feedback_table,
    run_batch,
    run_reference,
    run_trajectory,
    summarize,
)


def trajectory(scenario: Scenario, seed: int | None = None, index: int = 0) -> TrajectoryRecord:
    built = scenario.build()
    return run_trajectory(
        built.spec, built.psi0, built.schedule, built.family, built.seed if seed is None else seed,
        index=index, **built.simulation_kwargs(),
    )


def sweep_points(scenario: Scenario) -> list[dict[str, float]]:
    """Cartesian grid of the ``[sweep]`` axes, first axis slowest; one empty point if none."""
    axes = scenario.sweep_axes()
    names = list(axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


def run_ensemble(
    scenario: Scenario,
    runs: int | None = None,
    seed: int | None = None,
    workers: int = 1,
    keep_records: bool = False,
) -> list[EnsembleSummary]:
    """One summary per sweep point; every point reuses the same trajectory seeds."""
    summaries = []
    for point in sweep_points(scenario):
        built = scenario.with_overrides(point).build()
        records = run_batch(
            built.spec,
            built.psi0,
            built.schedule,
            built.family,
            built.seed if seed is None else seed,
            built.runs if runs is None else runs,
            workers=workers,
            **built.simulation_kwargs(),
        )
        summaries.append(summarize(records, point, keep=keep_records))
    return summaries


def reference(built: BuiltScenario) -> dict[str, np.ndarray]:
    ref = run_reference(built.spec, built.psi0, built.schedule)
    out = {"t": ref.times}
    if built.observable is not None:
        out["sz_E"] = np.einsum("ki,ij,kj->k", np.conj(ref.states), built.observable, ref.states).real
    if built.target is not None:
        out["F_TE"] = np.abs(ref.states @ np.conj(built.target)) ** 2
    return out


def feedback_fields(built: BuiltScenario) -> list[tuple[float, int, float, float, float]]:
    """Rows ``(t_k, n, Bx t_F, By t_F, Bz t_F)`` for every cycle and outcome of a qubit scenario."""
    if built.spec.dim != 2 or built.family is None:
        raise ValueError("feedback fields are defined for measured qubit scenarios only")
    ref = run_reference(built.spec, built.psi0, built.schedule)
    table = feedback_table(ref, built.family)
    rows = []
    for k in range(1, built.schedule.K + 1):
        for n in range(built.family.n_outcomes):
            h = extract_feedback_hamiltonian(table[k, n], built.t_F)
            rows.append((float(ref.times[k]), n, h.bx * built.t_F, h.by * built.t_F, h.bz * built.t_F))
    return rows
