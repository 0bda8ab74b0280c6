"""Input validation helpers shared across the package."""

import numpy as np

# Algebraic identities (completeness, Gram conditions, orthogonality).
MATRIX_TOL = 1e-10
# Normalization of states and probability vectors.
NORM_TOL = 1e-12
# Outcomes with |<0|psi>|^2 at or below this are treated as orthogonal to the
# fiducial state.
ORTHOGONALITY_THRESHOLD = 1e-12


def check_dim(d):
    """Return ``d`` as an int, raising if it is not a valid Hilbert-space dimension."""
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise TypeError(f"dimension must be an integer, got {type(d).__name__}")
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return d


def as_complex_vector(values, name="vector"):
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_complex_rows(vectors, name="vectors"):
    """Stack a sequence of equal-length complex vectors into an (n, d) array."""
    try:
        arr = np.asarray(vectors, dtype=complex)
    except ValueError as exc:
        raise ValueError(f"{name} must all have the same dimension") from exc
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty list of equal-length vectors")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_real_square(matrix, name="matrix"):
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_positive_definite(matrix, name="Q"):
    """Return the eigendecomposition of a symmetric positive-definite matrix."""
    arr = as_real_square(matrix, name)
    if not np.allclose(arr, arr.T, atol=MATRIX_TOL, rtol=0):
        raise ValueError(f"{name} is not symmetric")
    w, v = np.linalg.eigh(arr)
    if w.size == 0 or w[0] <= MATRIX_TOL * max(1.0, abs(w[-1])):
        raise np.linalg.LinAlgError(f"singular {name}: not positive definite")
    return w, v


def frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr
