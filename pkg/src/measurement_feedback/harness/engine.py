"""Trajectory engine: exact reference, measured and fed-back noisy runs, ensembles.

Each trajectory ``i`` of a run with master seed ``s`` owns two Philox
streams, ``SeedSequence(s, spawn_key=(i, 0))`` for measurement draws (one
uniform per cycle, in cycle order) and ``spawn_key=(i, 1)`` for noise.  A
trajectory's numbers therefore never depend on how many other trajectories
run beside it, in which batch, or in which worker process.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import HamiltonianSpec, NoiseRealization, batch_propagate
from ..feedback import build_feedback
from ..measurement import MIN_PROBABILITY, KrausFamily, sample_outcome
from ..qmath import dagger, expectation

MEASUREMENT_STREAM = 0
NOISE_STREAM = 1


@dataclass(frozen=True)
class ControlSchedule:
    tau: float
    K: int
    step_dt: float | None = None
    feedback: bool = True
    measurement: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if self.step_dt is not None and not 0 < self.step_dt <= self.tau * (1 + 1e-12):
            raise ValueError("step_dt must lie in (0, tau]")

    @property
    def total_time(self) -> float:
        return self.K * self.tau

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.K + 1) * self.tau


def stream(seed: int, index: int, branch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index, branch))))


@dataclass
class ReferenceTrajectory:
    times: np.ndarray
    states: np.ndarray  # (K + 1, N)


def run_reference(spec: HamiltonianSpec, psi0, schedule: ControlSchedule) -> ReferenceTrajectory:
    """Noiseless states at every measurement time ``t_k = k tau``."""
    psi0 = np.asarray(psi0, dtype=complex)
    times = schedule.times
    evals, evecs = np.linalg.eigh(spec.h0)
    coeffs = dagger(evecs) @ psi0
    states = (np.exp(-1j * np.outer(times, evals)) * coeffs) @ evecs.T
    states[0] = psi0
    return ReferenceTrajectory(times, states)


@dataclass
class TrajectoryRecord:
    """One seeded run sampled at ``t_0 .. t_K``.

    Suffixes: ``E`` exact, ``N`` noisy without control, ``NM`` noisy under the
    measurement (and feedback) sequence, ``T`` the scenario's target state.
    Quantities undefined for a scenario (no observable, no target) are NaN.
    ``outcomes[0]`` is -1 since nothing is measured at ``t_0``.
    """

    seed: int
    index: int
    times: np.ndarray
    outcomes: np.ndarray
    probabilities: np.ndarray
    sz_E: np.ndarray
    sz_N: np.ndarray
    sz_NM: np.ndarray
    F_EN: np.ndarray
    F_EM: np.ndarray
    F_TE: np.ndarray
    F_TN: np.ndarray
    F_TM: np.ndarray
    final_state: np.ndarray = field(repr=False, default=None)

    @property
    def infidelity(self) -> float:
        return 1.0 - float(self.F_EM[-1])


def feedback_table(reference: ReferenceTrajectory, family: KrausFamily) -> np.ndarray:
    """Feedback unitaries for every cycle and outcome, shape ``(K + 1, n_out, N, N)``.

    Row ``k`` belongs to the measurement at ``t_k``; row 0 is unused.
    """
    k_total, dim = reference.states.shape
    table = np.empty((k_total, family.n_outcomes, dim, dim), dtype=complex)
    table[0] = np.eye(dim)
    for k in range(1, k_total):
        psi = reference.states[k]
        psi = psi / np.linalg.norm(psi)
        branches = family.branches(psi)
        probs = np.einsum("ni,ni->n", np.conj(branches), branches).real
        for n in range(family.n_outcomes):
            if probs[n] < MIN_PROBABILITY:
                table[k, n] = np.eye(dim)
                continue
            table[k, n] = build_feedback(psi, branches[n] / math.sqrt(probs[n])).matrix
    return table


def _overlap2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``|<a|b>|^2`` batched over the leading axis."""
    return np.minimum(np.abs(np.einsum("...i,...i->...", np.conj(a), b)) ** 2, 1.0)


def simulate(
    spec: HamiltonianSpec,
    psi0,
    schedule: ControlSchedule,
    family: KrausFamily | None,
    seed: int,
    indices,
    observable: np.ndarray | None = None,
    target: np.ndarray | None = None,
    reference: ReferenceTrajectory | None = None,
    table: np.ndarray | None = None,
) -> list[TrajectoryRecord]:
    """Run trajectories ``indices`` of master ``seed`` side by side."""
    psi0 = np.asarray(psi0, dtype=complex)
    indices = [int(i) for i in indices]
    r = len(indices)
    k_total = schedule.K
    measuring = schedule.measurement and family is not None
    if family is not None and family.dim != spec.dim:
        raise ValueError(f"measurement dimension {family.dim} does not match system dimension {spec.dim}")
    if psi0.shape != (spec.dim,):
        raise ValueError(f"initial state of shape {psi0.shape} does not match system dimension {spec.dim}")
    if reference is None:
        reference = run_reference(spec, psi0, schedule)
    use_feedback = measuring and schedule.feedback
    if use_feedback and table is None:
        table = feedback_table(reference, family)

    realizations = None
    if spec.noise.kind == "gaussian":
        realizations = [NoiseRealization(spec.noise, spec.n_channels, stream(seed, i, NOISE_STREAM)) for i in indices]
    uniforms = np.stack([stream(seed, i, MEASUREMENT_STREAM).random(k_total) for i in indices]) if r else None

    n_out = family.n_outcomes if family is not None else 0
    outcomes = np.full((r, k_total + 1), -1, dtype=int)
    probabilities = np.full((r, k_total + 1, n_out), np.nan)
    states = np.empty((r, k_total + 1, 2, spec.dim), dtype=complex)  # [:, :, 0] noisy, [:, :, 1] controlled
    psi = np.broadcast_to(psi0, (r, 2, spec.dim)).copy()
    states[:, 0] = psi
    rows = np.arange(r)
    for k in range(1, k_total + 1):
        psi = batch_propagate(spec, psi, (k - 1) * schedule.tau, k * schedule.tau, realizations, schedule.step_dt)
        if measuring:
            probs = family.probabilities(psi[:, 1])
            n = sample_outcome(probs, uniforms[:, k - 1])
            branch = family.branches(psi[:, 1])[rows, n]
            post = branch / np.sqrt(probs[rows, n])[:, None]
            if use_feedback:
                post = np.einsum("rij,rj->ri", table[k][n], post)
            psi[:, 1] = post
            outcomes[:, k] = n
            probabilities[:, k] = probs
        else:
            psi[:, 1] = psi[:, 0]
        states[:, k] = psi

    ref = reference.states
    nan = np.full((r, k_total + 1), np.nan)
    if observable is not None:
        sz_e = np.broadcast_to(expectation(observable, ref), (r, k_total + 1))
        sz_n = expectation(observable, states[:, :, 0])
        sz_nm = expectation(observable, states[:, :, 1])
    else:
        sz_e = sz_n = sz_nm = nan
    f_en = _overlap2(ref[None], states[:, :, 0])
    f_em = _overlap2(ref[None], states[:, :, 1])
    if target is not None:
        f_te = np.broadcast_to(_overlap2(target[None], ref), (r, k_total + 1))
        f_tn = _overlap2(target[None, None], states[:, :, 0])
        f_tm = _overlap2(target[None, None], states[:, :, 1])
    else:
        f_te = f_tn = f_tm = nan
    times = schedule.times
    return [
        TrajectoryRecord(
            seed=seed,
            index=idx,
            times=times,
            outcomes=outcomes[j],
            probabilities=probabilities[j],
            sz_E=np.array(sz_e[j]),
            sz_N=sz_n[j],
            sz_NM=sz_nm[j],
            F_EN=f_en[j],
            F_EM=f_em[j],
            F_TE=np.array(f_te[j]),
            F_TN=f_tn[j],
            F_TM=f_tm[j],
            final_state=states[j, -1, 1].copy(),
        )
        for j, idx in enumerate(indices)
    ]


def run_trajectory(
    spec: HamiltonianSpec,
    psi0,
    schedule: ControlSchedule,
    family: KrausFamily | None,
    seed: int,
    index: int = 0,
    **kw,
) -> TrajectoryRecord:
    """Single trajectory; identical to record ``index`` of an ensemble with the same seed."""
    return simulate(spec, psi0, schedule, family, seed, [index], **kw)[0]


@dataclass
class EnsembleSummary:
    axes: dict[str, float]
    runs: int
    times: np.ndarray
    mean_F: np.ndarray
    std_F: np.ndarray
    records: list[TrajectoryRecord] = field(repr=False, default_factory=list)

    @property
    def mean_infidelity(self) -> float:
        return 1.0 - float(self.mean_F[-1])


def summarize(records: list[TrajectoryRecord], axes: dict[str, float] | None = None, keep: bool = False) -> EnsembleSummary:
    """Per-time mean and (population) standard deviation of ``F_EM`` over runs, in index order."""
    records = sorted(records, key=lambda rec: rec.index)
    f = np.stack([rec.F_EM for rec in records])
    return EnsembleSummary(
        axes=dict(axes or {}),
        runs=len(records),
        times=records[0].times,
        mean_F=f.mean(axis=0),
        std_F=f.std(axis=0),
        records=records if keep else [],
    )


def _simulate_chunk(args):
    return simulate(*args[0], **args[1])


def run_batch(
    spec: HamiltonianSpec,
    psi0,
    schedule: ControlSchedule,
    family: KrausFamily | None,
    seed: int,
    runs: int,
    workers: int = 1,
    chunk: int = 128,
    **kw,
) -> list[TrajectoryRecord]:
    """Trajectories ``0 .. runs - 1``, optionally spread over worker processes.

    The reference and feedback table are computed once and shared; results
    come back ordered by trajectory index whatever ``workers`` and ``chunk``
    are.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    reference = kw.pop("reference", None) or run_reference(spec, psi0, schedule)
    table = kw.pop("table", None)
    if table is None and family is not None and schedule.measurement and schedule.feedback:
        table = feedback_table(reference, family)
    kw.update(reference=reference, table=table)
    if workers > 1:
        chunk = min(chunk, -(-runs // workers))
    chunks = [list(range(a, min(a + chunk, runs))) for a in range(0, runs, chunk)]
    jobs = [((spec, psi0, schedule, family, seed, c), kw) for c in chunks]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, jobs))
    else:
        parts = [_simulate_chunk(job) for job in jobs]
    return [rec for part in parts for rec in part]
