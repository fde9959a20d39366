"""Dense linear algebra on small Hilbert spaces.

Everything here works on plain ``numpy`` arrays: a state is a 1-d complex
vector, an operator a square complex matrix.  Exponentials and logarithms go
through the eigendecomposition of the Hermitian (or unitary) argument, which
is exact to round-off at the dimensions used in this package.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg import schur

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
ROUNDTRIP_TOL = 1e-9
RANK_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class QMathError(ValueError):
    """Raised when an input violates a numerical precondition."""


def as_state(amplitudes: Sequence[complex] | np.ndarray, normalize: bool = False) -> np.ndarray:
    """Return ``amplitudes`` as a complex vector, optionally normalized.

    Without ``normalize`` the vector must already have unit norm.
    """
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if normalize:
        if norm == 0:
            raise QMathError("cannot normalize the zero vector")
        return psi / norm
    if abs(norm - 1.0) > NORM_TOL:
        raise QMathError(f"state not normalized: |psi| - 1 = {norm - 1.0:.3e}")
    return psi


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_residual(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - dagger(a)))


def unitarity_residual(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[-1])))


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise QMathError(f"expected a square matrix, got shape {h.shape}")
    res = hermiticity_residual(h)
    if res > tol:
        raise QMathError(f"matrix is not Hermitian: ||H - H^dag||_F = {res:.3e}")
    return h


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise QMathError(f"expected a square matrix, got shape {u.shape}")
    res = unitarity_residual(u)
    if res > tol:
        raise QMathError(f"matrix is not unitary: ||U^dag U - 1||_F = {res:.3e}")
    return u


def expm(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Return ``exp(-i h t)`` for Hermitian ``h``."""
    h = check_hermitian(h)
    # symmetrize so eigh sees an exactly Hermitian matrix
    evals, evecs = np.linalg.eigh(0.5 * (h + dagger(h)))
    return (evecs * np.exp(-1j * evals * t)) @ dagger(evecs)


def expm_batch(h: np.ndarray, t: float | np.ndarray = 1.0) -> np.ndarray:
    """Stacked ``exp(-i h t)`` over the leading axes of ``h``.

    No Hermiticity check is done; callers build ``h`` from checked parts.
    """
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * np.asarray(t)[..., None])
    return (evecs * phases[..., None, :]) @ dagger(evecs)


def logm_unitary(u: np.ndarray) -> np.ndarray:
    """Principal Hermitian logarithm: the ``H`` with ``exp(-i H) = u``.

    Eigenphases of ``u`` are taken in ``(-pi, pi]``, so the eigenvalues of the
    returned ``H`` lie in ``[-pi, pi)``.  An eigenvalue sitting on ``-1`` makes
    the logarithm non-unique and is rejected.
    """
    u = check_unitary(u)
    # complex Schur form of a normal matrix is diagonal, with orthonormal
    # vectors even for degenerate eigenphases
    t, z = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    if np.any(np.abs(np.abs(phases) - np.pi) < 1e-9):
        raise QMathError("eigenphase on the branch cut at -pi; logarithm is not unique")
    h = (z * (-phases)) @ dagger(z)
    return 0.5 * (h + dagger(h))


def gram_schmidt_anchored(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Orthonormalize ``vectors`` in order, keeping the first one exactly as given.

    Computed as a Householder QR with the column phases chosen so that the
    triangular factor has a positive diagonal, which is the Gram-Schmidt
    result without its loss of orthogonality.  The first vector must already
    be normalized and comes back bit-for-bit unchanged.
    """
    if len(vectors) == 0:
        return []
    first = np.asarray(vectors[0], dtype=complex)
    if abs(np.linalg.norm(first) - 1.0) > NORM_TOL:
        raise QMathError("anchor vector must be normalized")
    a = np.stack([np.asarray(v, dtype=complex) for v in vectors], axis=1)
    if a.shape[0] != first.shape[0] or a.shape[1] > a.shape[0]:
        raise QMathError(f"cannot orthonormalize {a.shape[1]} vectors of dimension {a.shape[0]}")
    q, r = np.linalg.qr(a)
    diag = np.diag(r)
    scale = np.linalg.norm(a, axis=0)
    bad = np.flatnonzero(np.abs(diag) < RANK_TOL * np.maximum(scale, 1.0))
    if bad.size:
        raise QMathError(f"vectors are linearly dependent at index {bad[0]}")
    q = q * (diag / np.abs(diag))
    out = [first.copy()] + [q[:, j] for j in range(1, a.shape[1])]
    return out


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Squared overlap ``|<a|b>|^2`` of two pure states."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise QMathError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(min(abs(np.vdot(a, b)) ** 2, 1.0))


def expectation(op: np.ndarray, psi: np.ndarray) -> float:
    """Real part of ``<psi|op|psi>`` along the last axis (batched)."""
    return np.real(np.einsum("...i,ij,...j->...", np.conj(psi), op, psi))
