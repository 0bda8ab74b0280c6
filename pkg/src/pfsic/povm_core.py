"""Pure states, rank-one POVMs and their real-vector decomposition.

Conventions used throughout the package:

* The fiducial state is the computational basis vector ``|0>``.
* A pure state near ``|0>`` is described by ``2d - 2`` real local parameters
  ``x^{k,sigma}`` (real and imaginary amplitude deviations along ``|k>``),
  stored in the order ``(x^{1,0}, x^{1,1}, ..., x^{d-1,0}, x^{d-1,1})``.
  The flat index is ``alpha = 2 * (k - 1) + sigma``.
* A rank-one POVM is stored as an ``(n, d)`` complex array whose row ``xi``
  holds the amplitudes ``a^xi_k = <k|psi^xi>``.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    MATRIX_TOL,
    NORM_TOL,
    ORTHOGONALITY_THRESHOLD,
    as_complex_rows,
    as_complex_vector,
    check_dim,
    frozen,
)

__all__ = [
    "CompletenessError",
    "completeness_residual",
    "excluded_outcomes",
    "LocalParams",
    "PureState",
    "RankOnePOVM",
    "RealDecomposition",
    "gauge_fix",
    "load_povm",
    "make_pure_state",
    "outcome_probabilities",
    "param_index",
    "param_labels",
    "perturbed_state",
    "povm_from_dict",
    "povm_from_vectors",
    "povm_to_dict",
    "real_decomposition",
    "save_povm",
]

# Above this magnitude the linear-order local parameterization is a poor
# description of the state.
LARGE_PARAM_WARNING = 0.2


class CompletenessError(ValueError):
    """The POVM elements do not sum to the identity."""

    def __init__(self, residual, tol=MATRIX_TOL):
        self.residual = float(residual)
        self.tol = tol
        super().__init__(
            f"POVM completeness fails: max-abs residual {self.residual:.3e} > {tol:.0e}"
        )


def param_index(k, sigma):
    """Flat parameter index for amplitude ``k >= 1`` and ``sigma`` in {0, 1}."""
    if k < 1 or sigma not in (0, 1):
        raise ValueError(f"invalid parameter label (k={k}, sigma={sigma})")
    return 2 * (k - 1) + sigma


def param_labels(d):
    """Column labels ``x_1_0, x_1_1, ...`` in canonical order."""
    return [f"x_{k}_{s}" for k in range(1, check_dim(d)) for s in (0, 1)]


@dataclass(frozen=True)
class PureState:
    """Normalized state vector in dimension ``dim >= 2``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = as_complex_vector(self.amplitudes, "amplitudes")
        check_dim(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", frozen(amps))

    @property
    def dim(self):
        return self.amplitudes.size

    @classmethod
    def fiducial(cls, d):
        amps = np.zeros(check_dim(d), dtype=complex)
        amps[0] = 1.0
        return cls(amps)


@dataclass(frozen=True)
class LocalParams:
    """Real local coordinates of a pure state around the fiducial ``|0>``."""

    dim: int
    x: np.ndarray

    def __post_init__(self):
        d = check_dim(self.dim)
        x = np.asarray(self.x, dtype=float)
        if x.shape != (2 * d - 2,):
            raise ValueError(
                f"expected {2 * d - 2} local parameters for d={d}, got shape {x.shape}"
            )
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "x", frozen(x))

    @classmethod
    def zeros(cls, d):
        return cls(d, np.zeros(2 * check_dim(d) - 2))

    def __getitem__(self, key):
        k, sigma = key
        return self.x[param_index(k, sigma)]

    def as_complex(self):
        """Amplitude deviations ``x^{k0} + i x^{k1}`` for ``k = 1..d-1``."""
        return self.x[0::2] + 1j * self.x[1::2]


@dataclass(frozen=True)
class RankOnePOVM:
    """Rank-one POVM ``E^xi = |psi^xi><psi^xi|`` given by its vectors.

    ``vectors[xi, k]`` is ``<k|psi^xi>``. Completeness is checked on
    construction; zero vectors (zero POVM elements) are allowed.
    """

    vectors: np.ndarray
    tol: float = field(default=MATRIX_TOL, repr=False, compare=False)

    def __post_init__(self):
        vecs = as_complex_rows(self.vectors)
        check_dim(vecs.shape[1])
        residual = completeness_residual(vecs)
        if residual > self.tol:
            raise CompletenessError(residual, self.tol)
        object.__setattr__(self, "vectors", frozen(vecs))

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def n_outcomes(self):
        return self.vectors.shape[0]

    def elements(self):
        """POVM elements as an ``(n, d, d)`` array."""
        return np.einsum("xi,xj->xij", self.vectors, self.vectors.conj())

    def fiducial_overlaps(self):
        """``|<0|psi^xi>|^2`` for every outcome."""
        return np.abs(self.vectors[:, 0]) ** 2

    def __len__(self):
        return self.n_outcomes


def completeness_residual(vectors):
    """Max-abs entry of ``sum_xi |psi^xi><psi^xi| - I``."""
    vecs = np.asarray(vectors, dtype=complex)
    total = vecs.T @ vecs.conj()
    return float(np.max(np.abs(total - np.eye(vecs.shape[1]))))


@dataclass(frozen=True)
class RealDecomposition:
    """Real and imaginary parts of the POVM amplitudes, arranged by component.

    ``b[k]`` and ``c[k]`` are n-vectors with ``b[k][xi] = Re a^xi_k`` and
    ``c[k][xi] = Im a^xi_k``.
    """

    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", frozen(np.asarray(self.b, dtype=float)))
        object.__setattr__(self, "c", frozen(np.asarray(self.c, dtype=float)))

    @property
    def dim(self):
        return self.b.shape[0]

    @property
    def n_outcomes(self):
        return self.b.shape[1]

    def gram_residual(self):
        """Largest violation of the real-form completeness conditions.

        ``b_j.b_k + c_j.c_k = delta_jk`` and ``b_j.c_k - c_j.b_k = 0``.
        """
        b, c = self.b, self.c
        sym = b @ b.T + c @ c.T - np.eye(self.dim)
        anti = b @ c.T - c @ b.T
        return float(max(np.max(np.abs(sym)), np.max(np.abs(anti))))


def make_pure_state(amplitudes):
    """Normalize ``amplitudes`` into a :class:`PureState`."""
    amps = as_complex_vector(amplitudes, "amplitudes")
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise ValueError("degenerate state: zero vector cannot be normalized")
    return PureState(amps / norm)


def perturbed_state(d, params):
    """Exactly normalized ``|0> + sum_k (x^{k0} + i x^{k1}) |k>``.

    ``params`` may be a :class:`LocalParams` or a plain length ``2d - 2``
    sequence.
    """
    d = check_dim(d)
    if not isinstance(params, LocalParams):
        params = LocalParams(d, params)
    elif params.dim != d:
        raise ValueError(f"parameters are for d={params.dim}, not d={d}")
    if np.any(np.abs(params.x) > LARGE_PARAM_WARNING):
        warnings.warn(
            f"local parameter above {LARGE_PARAM_WARNING}; the linear local "
            "parameterization is inaccurate this far from the fiducial state",
            stacklevel=2,
        )
    amps = np.empty(d, dtype=complex)
    amps[0] = 1.0
    amps[1:] = params.as_complex()
    return PureState(amps / np.linalg.norm(amps))


def povm_from_vectors(vectors, tol=MATRIX_TOL):
    """Build a :class:`RankOnePOVM`, raising :class:`CompletenessError` if invalid."""
    return RankOnePOVM(vectors, tol=tol)


def gauge_fix(povm):
    """Rephase each vector so its fiducial component is real and nonnegative.

    Vectors with zero fiducial component are left alone. The POVM elements
    are unchanged.
    """
    vecs = np.array(povm.vectors)
    a0 = vecs[:, 0]
    mag = np.abs(a0)
    # rows already in gauge are left bit-for-bit unchanged
    todo = (mag > 0) & ((a0.imag != 0) | (a0.real < 0))
    vecs[todo] *= (mag[todo] / a0[todo]).reshape(-1, 1)
    # exact real, nonnegative zero component
    vecs[:, 0] = mag
    return RankOnePOVM(vecs, tol=povm.tol)


def real_decomposition(povm):
    """Split the gauge-fixed amplitudes into real vectors ``b_k`` and ``c_k``.

    The POVM is gauge fixed first, so ``c_0`` is identically zero.
    """
    fixed = gauge_fix(povm)
    decomp = RealDecomposition(fixed.vectors.real.T, fixed.vectors.imag.T)
    residual = decomp.gram_residual()
    if residual > povm.tol:
        raise CompletenessError(residual, povm.tol)
    return decomp


def outcome_probabilities(povm, state):
    """Born-rule probabilities ``|<psi^xi|Psi>|^2``."""
    if isinstance(state, PureState):
        amps = state.amplitudes
    else:
        amps = make_pure_state(state).amplitudes
    if amps.size != povm.dim:
        raise ValueError(
            f"dimension mismatch: POVM has d={povm.dim}, state has d={amps.size}"
        )
    return np.abs(povm.vectors.conj() @ amps) ** 2


# -- JSON ---------------------------------------------------------------------


def povm_to_dict(povm):
    return {
        "dim": povm.dim,
        "n": povm.n_outcomes,
        "vectors": [[[float(z.real), float(z.imag)] for z in row] for row in povm.vectors],
    }


def povm_from_dict(data, tol=MATRIX_TOL):
    """Parse the ``{"dim", "n", "vectors"}`` JSON object and validate completeness."""
    try:
        d = int(data["dim"])
        n = int(data["n"])
        raw = np.asarray(data["vectors"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed POVM object: {exc}") from exc
    if raw.shape != (n, d, 2):
        raise ValueError(f"vectors have shape {raw.shape}, expected {(n, d, 2)}")
    return povm_from_vectors(raw[..., 0] + 1j * raw[..., 1], tol=tol)


def save_povm(povm, path):
    with open(path, "w") as fh:
        json.dump(povm_to_dict(povm), fh, indent=1)
        fh.write("\n")


def load_povm(path, tol=MATRIX_TOL):
    with open(path) as fh:
        data = json.load(fh)
    return povm_from_dict(data, tol=tol)


def excluded_outcomes(povm, threshold=ORTHOGONALITY_THRESHOLD):
    """Indices of outcomes whose element is (numerically) orthogonal to ``|0>``."""
    return np.flatnonzero(povm.fiducial_overlaps() <= threshold)
