"""Physical models: tilted-field spin, driven qubit, two Rydberg atoms, NV Ramsey dilation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import HamiltonianSpec, NoiseProcess
from .measurement import KrausFamily, kraus_qubit
from .qmath import SIGMA_X, SIGMA_Y, SIGMA_Z, check_hermitian, dagger

PLUS = np.array([1, 0], dtype=complex)
MINUS = np.array([0, 1], dtype=complex)


def field_direction(theta: float, phi: float) -> np.ndarray:
    """Unit vector ``(cos t cos p, cos t sin p, sin t)``; ``theta`` is the elevation."""
    return np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), math.sin(theta)])


def spin_operator(r: np.ndarray) -> np.ndarray:
    return r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z


# --- spin-1/2 in a tilted field -------------------------------------------------------


@dataclass(frozen=True)
class SpinFieldParams:
    omega_L: float = 1.0
    theta: float = math.pi / 3
    phi: float = math.pi / 4
    omega_eps: float = 0.0
    theta_p: float | None = None
    phi_p: float | None = None

    @property
    def direction(self) -> np.ndarray:
        return field_direction(self.theta, self.phi)

    @property
    def noisy_direction(self) -> np.ndarray:
        theta = self.theta if self.theta_p is None else self.theta_p
        phi = self.phi if self.phi_p is None else self.phi_p
        return field_direction(theta, phi)


def spin_hamiltonians(params: SpinFieldParams) -> HamiltonianSpec:
    """``H0 = (w_L/2) r.sigma``; the noisy ``((w_L + w_eps)/2) r'.sigma`` enters as one static term."""
    h0 = 0.5 * params.omega_L * spin_operator(params.direction)
    h = 0.5 * (params.omega_L + params.omega_eps) * spin_operator(params.noisy_direction)
    return HamiltonianSpec(h0, (h - h0,), NoiseProcess("static", (1.0,)))


# --- driven qubit with static offsets -------------------------------------------------


@dataclass(frozen=True)
class DrivenQubitParams:
    omega0: float = 1.0
    beta0: float = 1.0
    d_eps: float = 0.0
    d_beta: float = 0.0

    @property
    def splitting(self) -> float:
        return math.hypot(self.omega0, self.beta0)


def driven_qubit_hamiltonians(params: DrivenQubitParams) -> HamiltonianSpec:
    """``H0 = (W0/2) sx + (b0/2) sz`` with static offsets ``d_eps``, ``d_beta`` on the same axes."""
    h0 = 0.5 * params.omega0 * SIGMA_X + 0.5 * params.beta0 * SIGMA_Z
    return HamiltonianSpec(
        h0, (0.5 * SIGMA_X, 0.5 * SIGMA_Z), NoiseProcess("static", (params.d_eps, params.d_beta))
    )


# --- two Rydberg atoms ------------------------------------------------------------------

ATOM_LEVELS = ("g", "e", "r")
PAIR_ORDER = ("gg", "ge", "eg", "ee", "gr", "er", "rg", "re", "rr")
PAIR_INDEX = {name: i for i, name in enumerate(PAIR_ORDER)}


def pair_state(name: str) -> np.ndarray:
    v = np.zeros(9, dtype=complex)
    v[PAIR_INDEX[name]] = 1.0
    return v


T_STATE = (pair_state("gr") + pair_state("rg")) / math.sqrt(2)


def _atom_op(bra: str, ket: str) -> np.ndarray:
    """``|ket><bra|`` on one three-level atom."""
    m = np.zeros((3, 3), dtype=complex)
    m[ATOM_LEVELS.index(ket), ATOM_LEVELS.index(bra)] = 1.0
    return m


def _two_atom(op1: np.ndarray, op2: np.ndarray) -> np.ndarray:
    """Tensor product in the listed pair basis."""
    full = np.kron(op1, op2)  # indexed by 3*a + b with a, b in g, e, r
    perm = [3 * ATOM_LEVELS.index(p[0]) + ATOM_LEVELS.index(p[1]) for p in PAIR_ORDER]
    return full[np.ix_(perm, perm)]


def _symmetric(op: np.ndarray) -> np.ndarray:
    eye = np.eye(3)
    return _two_atom(op, eye) + _two_atom(eye, op)


@dataclass(frozen=True)
class RydbergParams:
    omega1: float
    omega2: float
    delta: float
    V: float
    noise: NoiseProcess = field(default_factory=NoiseProcess)

    @property
    def omega_eff(self) -> float:
        """``omega1 omega2 / delta``; infinite at zero detuning unless a drive vanishes."""
        num = self.omega1 * self.omega2
        if self.delta == 0:
            return 0.0 if num == 0 else math.copysign(math.inf, num)
        return num / self.delta

    def regime_issues(self) -> list[str]:
        issues = []
        if self.delta <= 10 * max(abs(self.omega1), abs(self.omega2)):
            issues.append(f"detuning {self.delta:.4g} is not >> Rabi frequencies; adiabatic elimination is poor")
        if self.V <= math.sqrt(2) * abs(self.omega_eff):
            issues.append(f"V = {self.V:.4g} does not exceed sqrt(2) * omega_eff; no blockade")
        return issues


def rydberg_generators() -> tuple[np.ndarray, np.ndarray]:
    """Noise generators on the g-e and e-r couplings of both atoms."""
    ge = _symmetric(_atom_op("g", "e"))
    er = _symmetric(_atom_op("e", "r"))
    return ge + dagger(ge), er + dagger(er)


def rydberg_hamiltonian(params: RydbergParams) -> HamiltonianSpec:
    """Interaction-picture two-atom Hamiltonian with laser-amplitude noise generators."""
    for issue in params.regime_issues():
        warnings.warn(issue, stacklevel=2)
    drive = _symmetric(params.omega1 * _atom_op("g", "e") + params.omega2 * _atom_op("e", "r"))
    h = drive + dagger(drive)
    h = h + params.delta * _symmetric(_atom_op("e", "e"))
    h[PAIR_INDEX["rr"], PAIR_INDEX["rr"]] += params.V
    return HamiltonianSpec(check_hermitian(h), rydberg_generators(), params.noise)


def effective_hamiltonian(params: RydbergParams) -> np.ndarray:
    """Blockade model on ``(|gg>, |T>, |rr>)`` after adiabatic elimination."""
    c = math.sqrt(2) * params.omega_eff
    return np.array([[0, c, 0], [c, 0, c], [0, c, params.V]], dtype=complex)


@dataclass
class EffectiveModelReport:
    omega_eff: float
    predicted_peak_time: float
    peak_time: float
    peak_time_error: float  # relative
    max_rr_population: float
    max_excited_population: float
    issues: list[str]
    times: np.ndarray = field(repr=False)
    population_T: np.ndarray = field(repr=False)
    population_T_effective: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.peak_time_error <= 0.05 and self.max_rr_population <= 0.05


def _first_peak(times: np.ndarray, pop: np.ndarray) -> float:
    """Time of the maximum inside the first excursion above half the global maximum."""
    above = pop > 0.5 * pop.max()
    start = int(np.argmax(above))
    stop = start + int(np.argmin(above[start:])) if not above[start:].all() else pop.size
    return float(times[start + int(np.argmax(pop[start:stop]))])


def validate_effective_model(params: RydbergParams, t_max: float, dt: float | None = None) -> EffectiveModelReport:
    """Compare noiseless full dynamics from ``|gg>`` with the two-level blockade prediction."""
    spec = rydberg_hamiltonian(params)
    if dt is None:
        dt = min(t_max / 2000, 0.05 * 2 * math.pi / max(params.delta, 1e-300))
    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    evals, evecs = np.linalg.eigh(spec.h0)
    coeffs = dagger(evecs) @ pair_state("gg")
    states = (np.exp(-1j * np.outer(times, evals)) * coeffs) @ evecs.T
    pops = np.abs(states) ** 2
    pop_t = np.abs(states @ np.conj(T_STATE)) ** 2
    excited = [PAIR_INDEX[p] for p in PAIR_ORDER if "e" in p]
    omega_eff = params.omega_eff
    predicted = math.pi / (2 * math.sqrt(2) * abs(omega_eff))
    peak = _first_peak(times, pop_t)
    return EffectiveModelReport(
        omega_eff=omega_eff,
        predicted_peak_time=predicted,
        peak_time=peak,
        peak_time_error=abs(peak - predicted) / predicted,
        max_rr_population=float(pops[:, PAIR_INDEX["rr"]].max()),
        max_excited_population=float(pops[:, excited].sum(axis=1).max()),
        issues=params.regime_issues(),
        times=times,
        population_T=pop_t,
        population_T_effective=np.sin(math.sqrt(2) * omega_eff * times) ** 2,
    )


# --- NV Ramsey dilation -------------------------------------------------------------------

S_Z = 0.5 * SIGMA_Z
S_X = 0.5 * SIGMA_X
S_Y = 0.5 * SIGMA_Y


@dataclass(frozen=True)
class DilationParams:
    """Electron-nuclear coupling ``g``, nuclear Larmor ``omega_L``, interaction time ``t_int``.

    ``theta = g * t_int / 4`` is the angle that sets the induced measurement
    strength for spin-1/2 operators ``S_z``, ``I_z``.
    """

    g: float
    omega_L: float
    t_int: float
    a0: complex = 1.0
    b0: complex = 0.0

    @classmethod
    def from_theta(cls, theta: float, g: float = 1.0, omega_L: float = 0.0, **kw) -> "DilationParams":
        return cls(g=g, omega_L=omega_L, t_int=4.0 * theta / g, **kw)

    @property
    def theta(self) -> float:
        return self.g * self.t_int / 4.0

    @property
    def p0_equiv(self) -> float:
        return 0.5 * (math.cos(self.theta) - math.sin(self.theta)) ** 2


def _rotation(op: np.ndarray, angle: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(op)
    return (evecs * np.exp(-1j * evals * angle)) @ dagger(evecs)


def ramsey_unitary(params: DilationParams) -> np.ndarray:
    """Composite electron (x) nuclear evolution ``Rx(pi/2) [U+ |+><+| + U- |-><-|] Ry(pi/2)``."""
    t = params.t_int
    u_plus = _rotation(S_Z, (params.omega_L + params.g / 2) * t)
    u_minus = _rotation(S_Z, (params.omega_L - params.g / 2) * t)
    cond = np.kron(np.outer(PLUS, PLUS), u_plus) + np.kron(np.outer(MINUS, MINUS), u_minus)
    rx = np.kron(_rotation(S_X, math.pi / 2), np.eye(2))
    ry = np.kron(_rotation(S_Y, math.pi / 2), np.eye(2))
    return rx @ cond @ ry


def induced_nuclear_kraus(params: DilationParams) -> dict[int, np.ndarray]:
    """Nuclear operators ``<alpha|_e U |+>_e`` for electron readout ``alpha = +1, -1``."""
    u = ramsey_unitary(params).reshape(2, 2, 2, 2)  # (e_out, n_out, e_in, n_in)
    return {+1: u[0, :, 0, :], -1: u[1, :, 0, :]}


@dataclass
class DilationResult:
    kraus: dict[int, np.ndarray]
    family: KrausFamily
    p0_equiv: float
    phases: dict[int, complex]
    residual: float
    completeness_residual: float


def strip_phase(m: np.ndarray, omega_L: float, t: float) -> tuple[np.ndarray, complex]:
    """Remove ``exp(-i omega_L I_z t)`` and the best-fit scalar phase from ``m``."""
    m = _rotation(S_Z, omega_L * t).conj().T @ m
    k = np.unravel_index(np.argmax(np.abs(m)), m.shape)
    phase = m[k] / abs(m[k])
    return m / phase, phase


def ramsey_dilation(params: DilationParams) -> DilationResult:
    """Unsharp nuclear measurement induced by a projective electron readout.

    Electron outcome ``+1`` matches qubit outcome 1 and ``-1`` matches outcome 0.
    """
    if not 0.0 <= params.theta < math.pi / 4:
        raise ValueError(f"theta = {params.theta:.6g} outside [0, pi/4); the projective limit is excluded")
    kraus = induced_nuclear_kraus(params)
    p0 = params.p0_equiv
    if p0 >= 0.5:
        # theta = 0: no information gained, both operators are 1/sqrt(2) up to phase
        target = {+1: np.eye(2) / math.sqrt(2), -1: np.eye(2) / math.sqrt(2)}
        family = KrausFamily(np.array([target[-1], target[+1]]))
    else:
        family = kraus_qubit(p0)
        target = {+1: family.operators[1], -1: family.operators[0]}
    residual = 0.0
    phases = {}
    for alpha, m in kraus.items():
        stripped, phase = strip_phase(m, params.omega_L, params.t_int)
        phases[alpha] = phase
        residual = max(
            residual,
            float(np.linalg.norm(stripped - target[alpha])),
            float(np.linalg.norm(dagger(m) @ m - dagger(target[alpha]) @ target[alpha])),
        )
    total = sum(dagger(m) @ m for m in kraus.values())
    return DilationResult(kraus, family, p0, phases, residual, float(np.linalg.norm(total - np.eye(2))))
