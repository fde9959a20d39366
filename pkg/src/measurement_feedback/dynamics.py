"""Hamiltonians with background noise and their propagation.

The total Hamiltonian is ``H(t) = H0 + sum_l lambda_l(t) H_l``.  Noise comes in
four flavours:

``none``
    ``H = H0``.
``static``
    fixed amplitudes ``lambda_l``; one exponential per interval.
``gaussian``
    piecewise-constant stochastic amplitudes, redrawn every ``resample_dt``
    from ``Normal(mu * scale, (sigma * scale)**2)``, one independent stream
    per generator.
``gaussian-pulse``
    the deterministic reading ``lambda(t) = scale * exp(-(t-mu)^2 / 2 sigma^2)
    / (sqrt(2 pi) sigma)`` with ``mu``, ``sigma`` in units of time.

Time-dependent evolution is the ordered product of exact exponentials of
``H`` at each step midpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qmath import QMathError, check_hermitian, expm, expm_batch

NOISE_KINDS = ("none", "static", "gaussian", "gaussian-pulse")
_BLOCK = 256
# knots closer than this (relative) are merged when building the step grid
_GRID_EPS = 1e-9


@dataclass(frozen=True)
class NoiseProcess:
    kind: str = "none"
    static_amplitudes: tuple[float, ...] = ()
    mu: float = 0.0
    sigma: float = 0.0
    resample_dt: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.kind == "gaussian" and not self.resample_dt > 0:
            raise ValueError("resample_dt must be positive for gaussian noise")
        if self.kind == "gaussian-pulse" and not self.sigma > 0:
            raise ValueError("gaussian-pulse needs sigma > 0")
        object.__setattr__(self, "static_amplitudes", tuple(float(a) for a in self.static_amplitudes))

    @property
    def time_dependent(self) -> bool:
        return self.kind in ("gaussian", "gaussian-pulse")

    def pulse(self, t: float) -> float:
        z = (t - self.mu) / self.sigma
        return self.scale * math.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.sigma)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Noiseless ``h0`` plus Hermitian noise generators and their driving process."""

    h0: np.ndarray
    noise_generators: tuple[np.ndarray, ...] = ()
    noise: NoiseProcess = field(default_factory=NoiseProcess)

    def __post_init__(self):
        h0 = check_hermitian(self.h0)
        gens = tuple(check_hermitian(g) for g in self.noise_generators)
        for i, g in enumerate(gens):
            if g.shape != h0.shape:
                raise QMathError(f"noise generator {i} has shape {g.shape}, expected {h0.shape}")
        if self.noise.kind == "static" and len(self.noise.static_amplitudes) != len(gens):
            raise ValueError(
                f"{len(self.noise.static_amplitudes)} static amplitudes for {len(gens)} generators"
            )
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "noise_generators", gens)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.noise_generators)

    def noise_hamiltonian(self, amplitudes) -> np.ndarray:
        h = np.zeros_like(self.h0)
        for a, g in zip(amplitudes, self.noise_generators):
            h = h + a * g
        return h

    def hamiltonian(self, amplitudes=None) -> np.ndarray:
        """Total Hamiltonian for the given noise amplitudes (``None`` means noiseless)."""
        if amplitudes is None:
            return self.h0
        return self.h0 + self.noise_hamiltonian(amplitudes)

    def without_noise(self) -> "HamiltonianSpec":
        return HamiltonianSpec(self.h0, self.noise_generators, NoiseProcess())


class NoiseRealization:
    """One frozen sample path of the noise amplitudes.

    Amplitudes for hold interval ``j`` (covering ``[j, j+1) * resample_dt``)
    are drawn lazily in fixed blocks, so the path depends only on the
    generator it was built from, never on which times were queried first.
    """

    def __init__(self, noise: NoiseProcess, n_channels: int, rng: np.random.Generator):
        self.noise = noise
        self.n_channels = n_channels
        self._streams = rng.spawn(n_channels) if noise.kind == "gaussian" else []
        self._draws = np.empty((n_channels, 0))

    def _ensure(self, j: int) -> None:
        while self._draws.shape[1] <= j:
            block = np.stack([s.standard_normal(_BLOCK) for s in self._streams]) if self._streams \
                else np.empty((0, _BLOCK))
            self._draws = np.concatenate([self._draws, block], axis=1)

    def segment_amplitudes(self, j0: int, j1: int) -> np.ndarray:
        """Amplitudes for hold intervals ``j0 .. j1 - 1``, shape ``(j1 - j0, L)``."""
        self._ensure(j1 - 1)
        z = self._draws[:, j0:j1].T
        return self.noise.scale * (self.noise.mu + self.noise.sigma * z)

    def amplitudes(self, t: float) -> np.ndarray:
        """Noise amplitudes ``lambda_l(t)``."""
        noise = self.noise
        if noise.kind == "none":
            return np.zeros(self.n_channels)
        if noise.kind == "static":
            return np.asarray(noise.static_amplitudes)
        if noise.kind == "gaussian-pulse":
            return np.full(self.n_channels, noise.pulse(t))
        j = hold_index(noise, t)
        return self.segment_amplitudes(j, j + 1)[0]


def hold_index(noise: NoiseProcess, t: float) -> int:
    return int(math.floor(t / noise.resample_dt + _GRID_EPS))


def step_grid(noise: NoiseProcess, t0: float, t1: float, step_dt: float | None = None) -> np.ndarray:
    """Knots of the time-ordered product over ``[t0, t1]``.

    Piecewise-constant noise needs one exact exponential per hold interval, so
    its grid is just ``t0``, ``t1`` and the resample knots in between; a finer
    ``step_dt`` would multiply commuting exponentials of the same matrix.  The
    Gaussian pulse is sampled on a uniform grid of at most ``step_dt``.
    """
    if t1 < t0:
        raise ValueError(f"t1 = {t1} precedes t0 = {t0}")
    if t1 == t0:
        return np.array([t0, t1])
    if noise.kind == "gaussian":
        if step_dt is not None and step_dt > noise.resample_dt * (1 + _GRID_EPS):
            raise ValueError(
                f"step_dt = {step_dt} exceeds resample_dt = {noise.resample_dt}; noise would be under-resolved"
            )
        dt = noise.resample_dt
        j0 = math.floor(t0 / dt + _GRID_EPS) + 1
        j1 = math.ceil(t1 / dt - _GRID_EPS)
        inner = np.arange(j0, j1) * dt
        return np.concatenate([[t0], inner, [t1]])
    if noise.kind == "gaussian-pulse":
        if step_dt is None:
            raise ValueError("gaussian-pulse noise needs an explicit step_dt")
        n = max(1, math.ceil((t1 - t0) / step_dt - _GRID_EPS))
        return np.linspace(t0, t1, n + 1)
    return np.array([t0, t1])


def propagate_exact(spec: HamiltonianSpec, psi0: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H0 t) psi0``; the noise part of ``spec`` is ignored."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return np.array(psi0, dtype=complex)
    return expm(spec.h0, t) @ np.asarray(psi0, dtype=complex)


def interval_propagator(
    spec: HamiltonianSpec,
    t0: float,
    t1: float,
    noise: NoiseRealization | np.random.Generator | None = None,
    step_dt: float | None = None,
) -> np.ndarray:
    """Time-ordered evolution operator from ``t0`` to ``t1``."""
    kind = spec.noise.kind
    if kind == "none":
        return expm(spec.h0, t1 - t0)
    if kind == "static":
        return expm(spec.hamiltonian(spec.noise.static_amplitudes), t1 - t0)
    realization = _as_realization(spec, noise)
    grid = step_grid(spec.noise, t0, t1, step_dt)
    u = np.eye(spec.dim, dtype=complex)
    for a, b in zip(grid[:-1], grid[1:]):
        if b <= a:
            continue
        h = spec.hamiltonian(realization.amplitudes(0.5 * (a + b)))
        u = expm(h, b - a) @ u
    return u


def propagate_noisy(
    spec: HamiltonianSpec,
    psi0: np.ndarray,
    t0: float,
    t1: float,
    noise: NoiseRealization | np.random.Generator | None = None,
    step_dt: float | None = None,
) -> np.ndarray:
    """Evolve ``psi0`` from ``t0`` to ``t1`` under ``H0 + H_N``.

    ``noise`` is either a frozen :class:`NoiseRealization` (reuse it to
    continue the same sample path across calls) or a generator from which a
    fresh one is built.
    """
    return interval_propagator(spec, t0, t1, noise, step_dt) @ np.asarray(psi0, dtype=complex)


def _as_realization(spec: HamiltonianSpec, noise) -> NoiseRealization:
    if isinstance(noise, NoiseRealization):
        return noise
    if noise is None:
        if spec.noise.kind == "gaussian":
            raise ValueError("gaussian noise needs a random generator or a NoiseRealization")
        noise = np.random.default_rng(0)
    return NoiseRealization(spec.noise, spec.n_channels, noise)


def batch_propagate(
    spec: HamiltonianSpec,
    psi: np.ndarray,
    t0: float,
    t1: float,
    realizations: list[NoiseRealization] | None = None,
    step_dt: float | None = None,
) -> np.ndarray:
    """Propagate a stack of states ``psi`` (shape ``(R, N)``) over ``[t0, t1]``.

    Row ``r`` follows ``realizations[r]``; the result for each row equals
    :func:`propagate_noisy` with that realization.
    """
    kind = spec.noise.kind
    if kind != "gaussian":
        return np.einsum("ij,...j->...i", interval_propagator(spec, t0, t1, None, step_dt), psi)
    if not realizations or len(realizations) != psi.shape[0]:
        raise ValueError("gaussian noise needs one NoiseRealization per state")
    grid = step_grid(spec.noise, t0, t1, step_dt)
    dts = np.diff(grid)
    keep = dts > 0
    js = np.array([hold_index(spec.noise, 0.5 * (a + b)) for a, b in zip(grid[:-1], grid[1:])])[keep]
    dts = dts[keep]
    j0, j1 = int(js.min()), int(js.max()) + 1
    amps = np.stack([r.segment_amplitudes(j0, j1) for r in realizations])  # (R, nj, L)
    gens = np.stack(spec.noise_generators)
    for j, dt in zip(js, dts):
        h = spec.h0 + np.einsum("rl,lij->rij", amps[:, j - j0], gens)
        u = expm_batch(h, dt)
        psi = np.einsum("rij,r...j->r...i", u, psi)
    return psi
