import math

import numpy as np
import pytest

from measurement_feedback.dynamics import HamiltonianSpec, NoiseProcess
from measurement_feedback.harness.config import Scenario
from measurement_feedback.harness.engine import (
    ControlSchedule,
    run_batch,
    run_reference,
    run_trajectory,
    simulate,
    summarize,
)
from measurement_feedback.measurement import kraus_nlevel, kraus_qubit
from measurement_feedback.qmath import SIGMA_Z
from measurement_feedback.systems import SpinFieldParams, spin_hamiltonians

PLUS = np.array([1, 0], complex)
TH, PH = math.pi / 3, math.pi / 4
FIG1_SCHEDULE = ControlSchedule(tau=2 * math.pi / 50, K=250)


def fig1_spec(omega_eps=0.05, tilt=True):
    return spin_hamiltonians(
        SpinFieldParams(1.0, TH, PH, omega_eps, TH - TH / 50 if tilt else TH, PH - PH / 50 if tilt else PH)
    )


def test_schedule_checks():
    assert np.allclose(FIG1_SCHEDULE.times[-1], 10 * math.pi)
    with pytest.raises(ValueError):
        ControlSchedule(tau=0.0, K=3)
    with pytest.raises(ValueError):
        ControlSchedule(tau=1.0, K=3, step_dt=2.0)


def test_reference_k0_and_determinism():
    spec = fig1_spec()
    ref = run_reference(spec, PLUS, ControlSchedule(tau=0.1, K=0))
    assert ref.states.shape == (1, 2) and np.array_equal(ref.states[0], PLUS)
    a = run_reference(spec, PLUS, FIG1_SCHEDULE)
    b = run_reference(spec, PLUS, FIG1_SCHEDULE)
    assert np.array_equal(a.states, b.states)


def test_zero_noise_feedback_is_exact():
    spec = fig1_spec(0.0, tilt=False)
    for seed in range(5):
        rec = run_trajectory(spec, PLUS, FIG1_SCHEDULE, kraus_qubit(0.2), seed, observable=SIGMA_Z)
        assert np.abs(rec.F_EM - 1).max() <= 1e-10


def test_record_fields_and_infidelity():
    rec = run_trajectory(fig1_spec(), PLUS, FIG1_SCHEDULE, kraus_qubit(0.2), 3, observable=SIGMA_Z)
    for f in (rec.F_EN, rec.F_EM):
        assert np.all((0 <= f) & (f <= 1))
    assert abs(rec.infidelity - (1 - abs(np.vdot(run_reference(fig1_spec(), PLUS, FIG1_SCHEDULE).states[-1],
                                                 rec.final_state)) ** 2)) <= 1e-12
    assert rec.outcomes[0] == -1 and set(np.unique(rec.outcomes[1:])) <= {0, 1}
    assert np.all(np.isnan(rec.F_TE))


def test_feedback_beats_measurement_only():
    spec, fam = fig1_spec(), kraus_qubit(0.2)
    on = run_batch(spec, PLUS, FIG1_SCHEDULE, fam, 11, 40)
    off = run_batch(spec, PLUS, ControlSchedule(FIG1_SCHEDULE.tau, 250, feedback=False), fam, 11, 40)
    assert np.median([r.F_EM[-1] for r in on]) > np.median([r.F_EM[-1] for r in off])


def test_no_measurement_equals_bare_noisy():
    spec = fig1_spec()
    sched = ControlSchedule(FIG1_SCHEDULE.tau, 250, measurement=False)
    rec = run_trajectory(spec, PLUS, sched, kraus_qubit(0.2), 0)
    assert np.array_equal(rec.F_EM, rec.F_EN)
    assert np.all(rec.outcomes == -1)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        run_trajectory(fig1_spec(), PLUS, FIG1_SCHEDULE, kraus_nlevel([0.2, 0.3, 0.5]), 0)


def test_single_record_equals_batch_member():
    sc = Scenario.load("fig3").with_overrides({"K": "40"})
    b = sc.build()
    batch = run_batch(b.spec, b.psi0, b.schedule, b.family, 9, 6, chunk=4, **b.simulation_kwargs())
    single = run_trajectory(b.spec, b.psi0, b.schedule, b.family, 9, index=4, **b.simulation_kwargs())
    assert np.array_equal(batch[4].F_EM, single.F_EM)
    assert np.array_equal(batch[4].outcomes, single.outcomes)


def test_batch_independent_of_chunking_and_workers():
    sc = Scenario.load("fig3").with_overrides({"K": "30"})
    b = sc.build()
    args = (b.spec, b.psi0, b.schedule, b.family, 42, 10)
    a = run_batch(*args, chunk=10, **b.simulation_kwargs())
    c = run_batch(*args, chunk=3, workers=2, **b.simulation_kwargs())
    for x, y in zip(a, c):
        assert x.index == y.index
        assert np.array_equal(x.F_EM, y.F_EM) and np.array_equal(x.F_TM, y.F_TM)


def test_summary_of_one_run_equals_record():
    rec = run_batch(fig1_spec(), PLUS, FIG1_SCHEDULE, kraus_qubit(0.2), 5, 1)
    s = summarize(rec)
    assert s.runs == 1 and np.array_equal(s.mean_F, rec[0].F_EM) and np.all(s.std_F == 0)


def test_summary_bounds():
    recs = run_batch(fig1_spec(), PLUS, FIG1_SCHEDULE, kraus_qubit(0.3), 5, 20)
    s = summarize(recs, {"p0": 0.3})
    assert np.all((0 <= s.mean_F) & (s.mean_F <= 1))
    assert s.axes == {"p0": 0.3}
    assert abs(s.mean_infidelity - (1 - s.mean_F[-1])) < 1e-15


def test_outcome_frequencies_match_probabilities():
    recs = run_batch(fig1_spec(), PLUS, FIG1_SCHEDULE, kraus_qubit(0.2), 77, 300)
    outcomes = np.stack([r.outcomes[1:] for r in recs])
    probs = np.stack([r.probabilities[1:, 1] for r in recs])
    hits = (outcomes == 1).sum(axis=0)
    expected = probs.sum(axis=0)
    sd = np.sqrt((probs * (1 - probs)).sum(axis=0))
    z = (hits - expected) / sd
    # per-cycle 3 sigma, allowing the few excursions expected by chance over 250 cycles
    assert np.mean(np.abs(z) > 3) <= 0.02
    total = (hits.sum() - expected.sum()) / math.sqrt((sd**2).sum())
    assert abs(total) < 4


def test_gaussian_noise_engine_matches_propagator():
    from measurement_feedback.dynamics import NoiseRealization, propagate_noisy
    from measurement_feedback.harness.engine import NOISE_STREAM, stream

    noise = NoiseProcess("gaussian", mu=0.05, sigma=0.3, resample_dt=0.02)
    spec = HamiltonianSpec(0.5 * SIGMA_Z, (0.5 * np.array([[0, 1], [1, 0]]),), noise)
    sched = ControlSchedule(tau=0.1, K=20, measurement=False)
    psi0 = np.array([1, 1], complex) / math.sqrt(2)
    rec = run_trajectory(spec, psi0, sched, None, 5, index=2)
    real = NoiseRealization(noise, 1, stream(5, 2, NOISE_STREAM))
    psi = psi0
    for k in range(20):
        psi = propagate_noisy(spec, psi, k * 0.1, (k + 1) * 0.1, real)
    assert np.abs(psi - rec.final_state).max() < 1e-12
