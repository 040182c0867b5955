"""Dense matrix primitives with the numerical contracts the toolkit relies on.

Matrices are plain 2-D float64 ndarrays (row-major logical layout). Vectorized
quantities use column-stacking order throughout, i.e. ``vec`` stacks column 1
first, and ``vec(E @ G @ F) == kron(F.T, E) @ vec(G)``.

Everything here is a pure function of its inputs and safe to call from any
number of threads.
"""

import numpy as np

from .errors import EigenvalueError, SingularMatrixError

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-9
CONDITION_CAP = 1e12


def as_matrix(a, name="matrix"):
    """Validate and return ``a`` as a 2-D float64 array with finite entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"{name}: expected a non-empty 2-D array, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError(f"{name}: entries must be finite")
    return m


def kron(a, b):
    """Kronecker product; block (i, j) equals a[i, j] * b."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vec(a):
    """Stack the columns of ``a`` into a single column vector."""
    return as_matrix(a, "a").reshape(-1, 1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`; raises ValueError on a length mismatch."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != rows * cols:
        raise ValueError(f"unvec: cannot reshape length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def solve_linear(m, rhs, condition_cap=CONDITION_CAP):
    """Solve m @ x = rhs; returns (x, condition_estimate).

    Raises SingularMatrixError when the 1-norm condition estimate exceeds
    ``condition_cap`` (singular matrices report an infinite estimate).
    """
    m = as_matrix(m, "m")
    rhs = as_matrix(rhs, "rhs")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"solve_linear: matrix must be square, got {m.shape}")
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(f"solve_linear: rhs has {rhs.shape[0]} rows, expected {m.shape[0]}")
    try:
        cond = np.linalg.cond(m, 1)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > condition_cap:
        raise SingularMatrixError(
            f"solve_linear: condition estimate {cond:.3e} exceeds cap {condition_cap:.1e}",
            condition_estimate=float(cond),
        )
    x = np.linalg.solve(m, rhs)
    return x, float(max(cond, 1.0))


def spectral_radius(m):
    """Largest eigenvalue modulus of a square matrix."""
    m = as_matrix(m, "m")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"spectral_radius: matrix must be square, got {m.shape}")
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(f"spectral_radius: eigenvalue iteration failed ({exc})") from exc
    return float(np.max(np.abs(ev)))


def symmetrize(m):
    """Return (m + m.T) / 2; suppresses asymmetry drift in computed kernels."""
    return 0.5 * (m + m.T)


def symmetry_defect(m):
    """Max absolute entry of m - m.T."""
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def is_psd(m, tol=PSD_TOL):
    """True iff the symmetric matrix ``m`` has min eigenvalue >= -tol.

    A machine-precision slack scaled to the matrix norm absorbs eigensolver
    rounding, so exactly singular PSD matrices test true at tol = 0.
    Asymmetric input (beyond SYMMETRY_TOL) is a contract violation.
    """
    m = as_matrix(m, "m")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"is_psd: matrix must be square, got {m.shape}")
    if symmetry_defect(m) > SYMMETRY_TOL:
        raise ValueError(f"is_psd: input asymmetric beyond {SYMMETRY_TOL:.0e}")
    slack = 64.0 * np.finfo(float).eps * max(1.0, fro(m))
    return bool(np.linalg.eigvalsh(symmetrize(m))[0] >= -(tol + slack))


def min_eigenvalue(m):
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(symmetrize(as_matrix(m, "m")))[0])


def fro(m):
    """Frobenius norm (Euclidean norm for vectors)."""
    return float(np.linalg.norm(m))
