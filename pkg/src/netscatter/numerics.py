"""Dense linear-algebra primitives.

Thin contracts over LAPACK (via numpy/scipy) for the small matrices used
throughout the package: a pivot-checked linear solve, a symmetric eigensolver
and a general complex eigensolver with a deterministic eigenvalue ordering.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceFailure, SingularMatrix


@dataclass(frozen=True)
class Tolerances:
    pivot: float = 1e-13
    symmetry: float = 1e-12
    solve_residual: float = 1e-10


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by (real, imag) with eigenvectors as aligned columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)


def _as_square(A, dtype):
    A = np.asarray(A, dtype=dtype)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _sort_order(values):
    values = np.asarray(values)
    return np.lexsort((values.imag, values.real))


def solve_linear(A, B, tol=DEFAULT_TOL):
    """Solve ``A X = B`` by partially pivoted LU.

    Raises
    ------
    SingularMatrix
        If a pivot of the LU factorisation is smaller than
        ``tol.pivot * max|A|``.
    """
    A = _as_square(A, complex)
    B = np.asarray(B, dtype=complex)
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < tol.pivot * scale:
        raise SingularMatrix("pivot underflow in LU factorisation")
    X = scipy.linalg.lu_solve((lu, piv), B, check_finite=False)
    return X[:, 0] if vector_rhs else X


def eig_sym(A, tol=DEFAULT_TOL):
    """Eigen-decomposition of a real symmetric matrix, ascending eigenvalues."""
    A = _as_square(A, float)
    if A.size and np.max(np.abs(A - A.T)) > tol.symmetry * max(1.0, np.max(np.abs(A))):
        raise ValueError("matrix is not symmetric")
    if A.shape[0] == 0:
        return Spectrum(np.zeros(0), np.zeros((0, 0)))
    try:
        w, v = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return Spectrum(w, v)


def eig_complex(A):
    """Eigenvalues/vectors of a general complex matrix.

    Eigenvalues are ordered by real part, ties broken by imaginary part, so
    that downstream code can identify resonances deterministically.
    """
    A = _as_square(A, complex)
    if A.shape[0] == 0:
        return Spectrum(np.zeros(0, complex), np.zeros((0, 0), complex))
    try:
        w, v = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = _sort_order(w)
    v = v[:, order]
    v = v / np.linalg.norm(v, axis=0)
    return Spectrum(w[order], v)
