"""Dense complex linear-algebra kernel.

Thin, validated wrappers around LAPACK (through numpy/scipy). Each function
checks its documented precondition and raises :class:`ValidationError` or a
:class:`NumericalError` subclass instead of silently returning garbage.
All functions are pure; inputs are never modified.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveSemidefiniteError, SingularSystemError, ValidationError

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return m


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _require_square(m: np.ndarray, name: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")


def _require_hermitian(m: np.ndarray, name: str, tol: float = HERMITIAN_TOL) -> None:
    _require_square(m, name)
    dev = max_abs(m - m.conj().T)
    if dev >= tol:
        raise ValidationError(f"{name} must be Hermitian: max |a - a^H| = {dev:.3e} >= {tol:g}")


def eigh(a) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = as_matrix(a)
    _require_hermitian(m, "eigh input")
    # Exact symmetrization removes the sub-tolerance anti-Hermitian part.
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def sqrtm_psd(a) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-1e-10, 0)`` are treated as round-off and clamped to zero.
    """
    dec = eigh(a)
    w = dec.eigenvalues
    if w[0] < -PSD_TOL:
        raise NotPositiveSemidefiniteError(w[0])
    v = dec.eigenvectors
    r = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return 0.5 * (r + r.conj().T)


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    m = as_matrix(a)
    _require_square(m, "expm input")
    return scipy.linalg.expm(m)


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def solve(a, y) -> np.ndarray:
    """Solve ``a x = y`` by LU with partial pivoting.

    Raises :class:`SingularSystemError` when a pivot falls below
    ``1e-14 * max|a|``.
    """
    m = as_matrix(a)
    _require_square(m, "solve matrix")
    rhs = np.asarray(y, dtype=complex)
    if rhs.shape[0] != m.shape[0]:
        raise ValidationError(f"right-hand side length {rhs.shape[0]} does not match matrix size {m.shape[0]}")
    scale = max_abs(m)
    if scale == 0.0:
        raise SingularSystemError("singular system: matrix is identically zero")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularSystemError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_TOL * scale:
        raise SingularSystemError(
            f"singular system: smallest pivot {pivots.min():.3e} <= {PIVOT_TOL:g} * max|a| ({scale:.3e})"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
