"""Feedback unitaries that undo measurement back-action on the exact state.

Given the exact state ``psi`` and its post-measurement branch ``psi_n``, each
is completed to a basis of eigenvectors of its projector: the state itself
plus ``N - 1`` vectors of the form ``[-c_j*, 0, ..., c_1*, ..., 0]``.  Both
bases are orthonormalized with the state kept as the first element and the
feedback is ``U = sum_m |phi_m><phi~_m|``, which sends ``psi_n`` to ``psi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurement import KrausFamily, deterministic_branch
from .qmath import (
    NORM_TOL,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    QMathError,
    dagger,
    gram_schmidt_anchored,
    logm_unitary,
)

PIVOT_TOL = 1e-8


@dataclass(frozen=True)
class EigenbasisSet:
    anchor: np.ndarray
    raw: tuple[np.ndarray, ...]  # includes the anchor as element 0
    orthonormal: tuple[np.ndarray, ...]
    pivot: int

    def matrix(self) -> np.ndarray:
        """Orthonormal basis as columns."""
        return np.stack(self.orthonormal, axis=1)


@dataclass(frozen=True)
class FeedbackUnitary:
    matrix: np.ndarray
    step: int | None = None
    outcome: int | None = None


@dataclass(frozen=True)
class FeedbackHamiltonian:
    matrix: np.ndarray
    t_F: float
    phase: float = 0.0  # trace part, (tr H) / N
    bx: float | None = None
    by: float | None = None
    bz: float | None = None


def _normalized(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise QMathError("state is not normalized")
    return psi


def raw_completion(psi: np.ndarray, pivot: int) -> list[np.ndarray]:
    """The ``N - 1`` vectors orthogonal to ``psi`` built around ``psi[pivot]``."""
    out = []
    for j in range(psi.size):
        if j == pivot:
            continue
        v = np.zeros_like(psi)
        v[pivot] = -np.conj(psi[j])
        v[j] = np.conj(psi[pivot])
        out.append(v)
    return out


def build_basis(psi) -> EigenbasisSet:
    psi = _normalized(psi)
    pivot = 0 if abs(psi[0]) >= PIVOT_TOL else int(np.argmax(np.abs(psi)))
    raw = [psi] + raw_completion(psi, pivot)
    return EigenbasisSet(psi, tuple(raw), tuple(gram_schmidt_anchored(raw)), pivot)


def build_feedback(psi_exact, psi_exact_post, step: int | None = None, outcome: int | None = None) -> FeedbackUnitary:
    """Unitary mapping ``psi_exact_post`` onto ``psi_exact``.

    ``<psi_exact|U|psi_exact_post>`` comes out as exactly 1 (real, positive)
    because the anchors are matched without any phase change.
    """
    a = build_basis(psi_exact).matrix()
    b = build_basis(psi_exact_post).matrix()
    if a.shape != b.shape:
        raise QMathError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return FeedbackUnitary(a @ dagger(b), step, outcome)


def feedback_for_family(family: KrausFamily, psi_exact, step: int | None = None) -> list[FeedbackUnitary]:
    """One feedback unitary per outcome of ``family`` for the exact state."""
    out = []
    for n in range(family.n_outcomes):
        branch = deterministic_branch(family, psi_exact, n)
        out.append(build_feedback(psi_exact, branch.post_state, step, n))
    return out


def compose_effective_kraus(u: FeedbackUnitary | np.ndarray, m: np.ndarray) -> np.ndarray:
    u = u.matrix if isinstance(u, FeedbackUnitary) else np.asarray(u)
    m = np.asarray(m)
    if u.shape != m.shape:
        raise QMathError(f"dimension mismatch: {u.shape} vs {m.shape}")
    return u @ m


def verify_restore(u: FeedbackUnitary | np.ndarray, psi_exact, psi_exact_post) -> float:
    """``|<psi_exact|U|psi_exact_post>|``, which should be 1."""
    u = u.matrix if isinstance(u, FeedbackUnitary) else np.asarray(u)
    return float(abs(np.vdot(psi_exact, u @ np.asarray(psi_exact_post))))


def extract_feedback_hamiltonian(u: FeedbackUnitary | np.ndarray, t_F: float) -> FeedbackHamiltonian:
    """Hamiltonian ``H`` with ``exp(-i H t_F) = U`` on the principal branch.

    For a qubit the traceless part is written as
    ``[[Bz, Bx + i By], [Bx - i By, -Bz]]`` in the ``(|+>, |->)`` basis.
    """
    if not t_F > 0:
        raise ValueError("t_F must be positive")
    mat = u.matrix if isinstance(u, FeedbackUnitary) else np.asarray(u)
    h = logm_unitary(mat) / t_F
    n = h.shape[0]
    phase = float(np.trace(h).real / n)
    if n != 2:
        return FeedbackHamiltonian(h, t_F, phase)
    traceless = h - phase * np.eye(2)
    bx = 0.5 * float(np.trace(traceless @ SIGMA_X).real)
    by = -0.5 * float(np.trace(traceless @ SIGMA_Y).real)
    bz = 0.5 * float(np.trace(traceless @ SIGMA_Z).real)
    return FeedbackHamiltonian(h, t_F, phase, bx, by, bz)
