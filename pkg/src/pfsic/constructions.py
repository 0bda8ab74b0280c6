"""Explicit PFSIC constructions and the orthogonal-mixing freedom."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import ortho_group, unitary_group

from ._validation import MATRIX_TOL, ORTHOGONALITY_THRESHOLD, check_dim, frozen
from .povm_core import RankOnePOVM, gauge_fix, povm_from_vectors

__all__ = [
    "OrthogonalMatrix",
    "RealBasisSpec",
    "build_from_descriptor",
    "minimal_pfsic",
    "orthogonal_mix",
    "random_orthogonal",
    "random_povm",
    "symmetric_real_basis",
    "two_basis_pfsic",
]


@dataclass(frozen=True)
class OrthogonalMatrix:
    """Real ``m x m`` matrix with ``O^T O = I``."""

    entries: np.ndarray

    def __post_init__(self):
        entries = self.entries
        if isinstance(entries, OrthogonalMatrix):
            entries = entries.entries
        O = np.asarray(entries, dtype=float)
        if O.ndim != 2 or O.shape[0] != O.shape[1]:
            raise ValueError(f"orthogonal matrix must be square, got shape {O.shape}")
        residual = float(np.max(np.abs(O.T @ O - np.eye(O.shape[0]))))
        if residual > MATRIX_TOL:
            raise ValueError(f"matrix is not orthogonal (residual {residual:.3e})")
        object.__setattr__(self, "entries", frozen(O))

    @property
    def size(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class RealBasisSpec:
    """Real orthogonal ``d x d`` matrix ``rows[j, xi] = u_j^xi`` with ``u_0 > 0``."""

    rows: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.rows, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError(f"basis must be a square matrix, got shape {U.shape}")
        check_dim(U.shape[0])
        residual = float(np.max(np.abs(U @ U.T - np.eye(U.shape[0]))))
        if residual > MATRIX_TOL:
            raise ValueError(f"basis rows are not orthonormal (residual {residual:.3e})")
        if np.any(U[0] <= 0):
            raise ValueError("first basis vector must have strictly positive components")
        object.__setattr__(self, "rows", frozen(U))

    @property
    def dim(self):
        return self.rows.shape[0]


def _symmetric_frame(m):
    """Orthonormal rows of size ``m``: the uniform vector, then ``m - 1`` more.

    The natural basis vectors are projected orthogonal to the uniform vector
    ``u0`` and a multiple of the first projection is subtracted from the
    rest, giving ``u_xi = (e_0 + u0) / (sqrt(m) + 1) - e_xi``.
    """
    u0 = np.full(m, 1.0 / np.sqrt(m))
    shift = (np.eye(m)[0] + u0) / (np.sqrt(m) + 1.0)
    return np.vstack([u0, shift - np.eye(m)[1:]])


def minimal_pfsic(d):
    """The ``2d - 1`` outcome PFSIC with uniform fiducial probabilities.

    The real vectors ``{b_0, sqrt(2) b_j, sqrt(2) c_j}`` form an orthonormal
    frame of R^(2d-1) with ``b_0 = (1, ..., 1) / sqrt(2d - 1)``. For ``d = 2``
    this is the equatorial trine.
    """
    d = check_dim(d)
    n = 2 * d - 1
    u0 = np.full(n, 1.0 / np.sqrt(n))
    shift = (np.eye(n)[0] + u0) / (np.sqrt(n) + 1.0)
    # u_xi = e_xi - (e_0 + b_0)/(sqrt(n) + 1); b_j = u_{2j-1}/sqrt2, c_j = u_{2j}/sqrt2
    u = np.eye(n)[1:] - shift
    vecs = np.empty((n, d), dtype=complex)
    vecs[:, 0] = u0
    vecs[:, 1:] = (u[0::2] + 1j * u[1::2]).T / np.sqrt(2.0)
    return povm_from_vectors(vecs)


def symmetric_real_basis(d):
    """Default basis for :func:`two_basis_pfsic`, with ``u_0 = (1, ..., 1)/sqrt(d)``.

    For ``d = 2`` the rows are ``(1, 1)/sqrt2`` and ``(1, -1)/sqrt2``.
    """
    return RealBasisSpec(_symmetric_frame(check_dim(d)))


def two_basis_pfsic(d, p_chi=0.5, basis=None):
    """Coin flip between a real basis and its copy with imaginary ``|0>`` components.

    Outcomes ``0..d-1`` are ``sqrt(p_chi) |chi^xi>`` and outcomes ``d..2d-1``
    are ``sqrt(1 - p_chi) |tau^xi>``, where ``<j|chi^xi> = u_j^xi`` and
    ``|tau^xi>`` equals ``|chi^xi>`` with its zero component rephased to
    ``-i u_0^xi``. The classical Fisher matrix is
    ``diag(4 p_chi, 4 p_tau, 4 p_chi, ...)``; ``p_chi = 1/2`` gives a PFSIC.

    When one weight is zero the corresponding basis is dropped, leaving a
    single orthonormal basis.
    """
    d = check_dim(d)
    p_chi = float(p_chi)
    if not 0.0 <= p_chi <= 1.0:
        raise ValueError(f"p_chi must lie in [0, 1], got {p_chi}")
    if basis is None:
        basis = symmetric_real_basis(d)
    elif not isinstance(basis, RealBasisSpec):
        basis = RealBasisSpec(basis)
    if basis.dim != d:
        raise ValueError(f"basis has dimension {basis.dim}, expected {d}")
    p_tau = 1.0 - p_chi

    chi = basis.rows.T.astype(complex)
    tau = chi.copy()
    tau[:, 0] *= -1j
    blocks = []
    if p_chi > 0:
        blocks.append(np.sqrt(p_chi) * chi)
    if p_tau > 0:
        blocks.append(np.sqrt(p_tau) * tau)
    return povm_from_vectors(np.vstack(blocks))


def random_orthogonal(m, seed=None):
    """Haar-random ``m x m`` orthogonal matrix from a seeded generator."""
    rng = np.random.default_rng(seed)
    if m < 1:
        raise ValueError(f"size must be positive, got {m}")
    if m == 1:
        return OrthogonalMatrix([[rng.choice([-1.0, 1.0])]])
    return OrthogonalMatrix(ortho_group.rvs(m, random_state=rng))


def orthogonal_mix(povm, O, strict=True, threshold=ORTHOGONALITY_THRESHOLD):
    """Mix gauge-fixed POVM vectors with a real orthogonal matrix.

    ``|phi^xi> = sum_eta O[xi, eta] |psi^eta>``. If ``O`` is larger than the
    POVM, the vectors are padded with zero vectors first. The result is gauge
    fixed again, which absorbs negative fiducial components by rephasing.
    The classical Fisher matrix is unchanged.

    With ``strict`` a :class:`ValueError` is raised when a mixed vector ends
    up orthogonal to the fiducial state.
    """
    if not isinstance(O, OrthogonalMatrix):
        O = OrthogonalMatrix(O)
    n = povm.n_outcomes
    if O.size < n:
        raise ValueError(f"mixing matrix of size {O.size} is smaller than n={n}")
    padded = np.zeros((O.size, povm.dim), dtype=complex)
    padded[:n] = gauge_fix(povm).vectors
    mixed = gauge_fix(RankOnePOVM(O.entries @ padded, tol=povm.tol))
    if strict:
        bad = np.flatnonzero(mixed.fiducial_overlaps() <= threshold)
        if bad.size:
            raise ValueError(
                f"mixed outcomes {bad.tolist()} are orthogonal to the fiducial state"
            )
    return mixed


def random_povm(d, n, seed=None, n_orthogonal=0):
    """Random valid rank-one POVM with ``n >= d`` outcomes.

    A Haar-random orthonormal basis, padded with zero vectors to ``n``
    entries, is mixed by a random ``n x n`` orthogonal matrix. With
    ``n_orthogonal > 0`` the basis keeps ``|0>`` as one member and the
    mixing matrix is block diagonal, so that the last ``n_orthogonal``
    outcomes are exactly orthogonal to the fiducial state.
    """
    d = check_dim(d)
    if n < d:
        raise ValueError(f"a rank-one POVM in d={d} needs n >= d, got {n}")
    rng = np.random.default_rng(seed)
    if n_orthogonal == 0:
        basis = _random_unitary(d, rng)
        padded = np.vstack([basis, np.zeros((n - d, d))])
        return povm_from_vectors(random_orthogonal(n, rng).entries @ padded)

    # |0> plus W rows; the block holding |0> yields the nonorthogonal outcomes
    k = int(n_orthogonal)
    if not 1 <= k <= n - 1:
        raise ValueError(f"cannot place {k} orthogonal outcomes among n={n}")
    basis = np.zeros((d, d), dtype=complex)
    basis[0, 0] = 1.0
    basis[1:, 1:] = _random_unitary(d - 1, rng)
    pool = list(basis[2:]) + list(np.zeros((n - d, d)))
    head = np.array([basis[0]] + pool[: n - k - 1])
    tail = np.array([basis[1]] + pool[n - k - 1 :])
    O1 = random_orthogonal(head.shape[0], rng).entries
    O2 = random_orthogonal(tail.shape[0], rng).entries
    vecs = np.vstack([O1 @ head, O2 @ tail])
    return povm_from_vectors(vecs)


def _random_unitary(d, rng):
    """Haar-random ``d x d`` unitary (rows orthonormal)."""
    if d == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(d, random_state=rng)


def build_from_descriptor(desc):
    """Construct a POVM from a JSON-style descriptor.

    Supported kinds: ``{"kind": "minimal", "d"}``,
    ``{"kind": "two_basis", "d", "p_chi", "basis"?}`` and
    ``{"kind": "mix", "base": <descriptor>, "seed", "size"?}``.
    """
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError("descriptor must be an object with a 'kind' field")
    kind = str(desc["kind"]).replace("-", "_")
    if kind == "minimal":
        return minimal_pfsic(desc["d"])
    if kind == "two_basis":
        basis = desc.get("basis")
        return two_basis_pfsic(desc["d"], desc.get("p_chi", 0.5), basis)
    if kind == "mix":
        base = build_from_descriptor(desc["base"])
        size = int(desc.get("size") or base.n_outcomes)
        O = random_orthogonal(size, desc.get("seed"))
        return orthogonal_mix(base, O, strict=desc.get("strict", True))
    raise ValueError(f"unknown construction kind {desc['kind']!r}")
