"""Unsharp measurements as diagonal Kraus families.

Outcome indices are 0-based.  For the qubit family the basis order is
``(|+>, |->)`` with ``|+>`` the ``+1`` eigenstate of ``sigma_z``; outcome 0 is
the weak ``|->`` detector and outcome 1 the weak ``|+>`` detector.  For the
N-level family outcome ``n`` puts the first entry of the probability vector
on basis state ``|n>`` and cycles the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmath import NORM_TOL, QMathError

MIN_PROBABILITY = 1e-15


@dataclass(frozen=True)
class KrausFamily:
    operators: np.ndarray  # shape (n_outcomes, N, N)
    p0: float | None = None
    p: tuple[float, ...] | None = None

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise QMathError(f"expected a stack of square operators, got shape {ops.shape}")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.operators.shape[0]

    @property
    def delta_p(self) -> float | None:
        return None if self.p0 is None else 1.0 - 2.0 * self.p0

    @property
    def is_diagonal(self) -> bool:
        off = self.operators - np.einsum("nii->ni", self.operators)[:, :, None] * np.eye(self.dim)
        return not np.any(off)

    def completeness_residual(self) -> float:
        total = np.einsum("nji,njk->ik", np.conj(self.operators), self.operators)
        return float(np.linalg.norm(total - np.eye(self.dim)))

    def branches(self, psi: np.ndarray) -> np.ndarray:
        """Unnormalized ``M_n psi`` for every outcome; batched over leading axes of ``psi``.

        Returns shape ``psi.shape[:-1] + (n_outcomes, N)``.
        """
        return np.einsum("nij,...j->...ni", self.operators, psi)

    def probabilities(self, psi: np.ndarray) -> np.ndarray:
        """``P_n = <psi|M_n^dag M_n|psi>`` for every outcome."""
        b = self.branches(psi)
        return np.einsum("...ni,...ni->...n", np.conj(b), b).real


@dataclass(frozen=True)
class MeasurementOutcome:
    index: int
    probability: float
    post_state: np.ndarray


def kraus_qubit(p0: float) -> KrausFamily:
    """Two-outcome unsharp ``sigma_z`` measurement with ``0 < p0 < 0.5``."""
    if not 0.0 < p0 < 0.5:
        raise ValueError(f"p0 must lie in (0, 0.5), got {p0}")
    a, b = np.sqrt(p0), np.sqrt(1.0 - p0)
    ops = np.array([np.diag([a, b]), np.diag([b, a])], dtype=complex)
    return KrausFamily(ops, p0=float(p0))


def kraus_nlevel(p) -> KrausFamily:
    """N-outcome diagonal family built from cyclic shifts of ``p``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size < 2:
        raise ValueError("need at least two probabilities")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities must sum to 1, got {p.sum():.15g}")
    if np.any(p <= 0) or np.any(p >= 1):
        raise ValueError("every probability must lie strictly between 0 and 1")
    n = p.size
    d = np.arange(n)
    ops = np.array([np.diag(np.sqrt(p[(d - k) % n])) for k in range(n)], dtype=complex)
    return KrausFamily(ops, p=tuple(float(x) for x in p))


def block_probabilities(p: float, p_last: float = 1.0 / 9.0) -> np.ndarray:
    """Nine-level vector ``[p]*4 + [q]*4 + [p_last]`` with ``q`` fixed by normalization."""
    q = (1.0 - 4.0 * p - p_last) / 4.0
    return np.array([p] * 4 + [q] * 4 + [p_last])


def _check_input(family: KrausFamily, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (family.dim,):
        raise QMathError(f"state of shape {psi.shape} does not match family dimension {family.dim}")
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise QMathError("state is not normalized")
    return psi


def deterministic_branch(family: KrausFamily, psi, n: int) -> MeasurementOutcome:
    """Post-measurement state for a forced outcome ``n``."""
    psi = _check_input(family, psi)
    branch = family.operators[n] @ psi
    prob = float(np.vdot(branch, branch).real)
    if prob < MIN_PROBABILITY:
        raise ValueError(f"outcome {n} has probability {prob:.3e}; post-measurement state undefined")
    return MeasurementOutcome(n, prob, branch / np.sqrt(prob))


def sample_outcome(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF outcome selection, batched over the leading axis.

    Outcomes below ``MIN_PROBABILITY`` are excluded, which is the same as
    redrawing whenever one of them would have been hit.
    """
    probs = np.where(probs < MIN_PROBABILITY, 0.0, probs)
    cdf = np.cumsum(probs, axis=-1)
    target = np.asarray(u)[..., None] * cdf[..., -1:]
    n = np.sum(cdf <= target, axis=-1)
    return np.minimum(n, probs.shape[-1] - 1)


def measure(family: KrausFamily, psi, rng: np.random.Generator) -> MeasurementOutcome:
    """Sample an outcome with probability ``||M_n psi||^2`` and collapse ``psi``."""
    psi = _check_input(family, psi)
    probs = family.probabilities(psi)
    n = int(sample_outcome(probs, rng.random()))
    return deterministic_branch(family, psi, n)


def averaged_post_state(family: KrausFamily, psi) -> np.ndarray:
    """Non-selective post-measurement density matrix ``sum_n M_n rho M_n^dag``."""
    psi = _check_input(family, psi)
    b = family.branches(psi)
    return np.einsum("ni,nj->ij", b, np.conj(b))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


__all__ = [
    "KrausFamily",
    "MeasurementOutcome",
    "kraus_qubit",
    "kraus_nlevel",
    "block_probabilities",
    "measure",
    "deterministic_branch",
    "sample_outcome",
    "averaged_post_state",
    "trace_distance",
]
