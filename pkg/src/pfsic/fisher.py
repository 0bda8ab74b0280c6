"""Classical and quantum Fisher information at the fiducial state.

All matrices are indexed by the canonical local-parameter order
``alpha = 2 * (k - 1) + sigma`` (see :mod:`pfsic.povm_core`).
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    ORTHOGONALITY_THRESHOLD,
    as_real_square,
    check_dim,
    check_positive_definite,
)
from .povm_core import (
    LocalParams,
    PureState,
    excluded_outcomes,
    outcome_probabilities,
    perturbed_state,
    real_decomposition,
)

__all__ = [
    "FisherReport",
    "PFSICVerdict",
    "classical_fisher",
    "classical_fisher_fd",
    "fisher_report",
    "fisher_symmetry_quantity",
    "gill_massar",
    "information_rows",
    "is_pfsic",
    "matrix_rank",
    "quantum_fisher_pure",
]

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-5
PFSIC_TOL = 1e-9
RANK_CUTOFF = 1e-9


def quantum_fisher_pure(d):
    """Quantum Fisher matrix of the local pure-state parameters: ``4 I``."""
    d = check_dim(d)
    return 4.0 * np.eye(2 * d - 2)


def information_rows(povm, threshold=ORTHOGONALITY_THRESHOLD):
    """Probability-derivative data for the outcomes not orthogonal to ``|0>``.

    Returns ``(included, p0, D)`` where ``included`` are outcome indices,
    ``p0[i]`` the fiducial probability of outcome ``included[i]`` and
    ``D[i, alpha]`` the derivative of that probability with respect to
    ``x^alpha`` at the fiducial state. With ``b_0`` real after gauge fixing,
    ``dp/dx^{k0} = 2 b_0 b_k`` and ``dp/dx^{k1} = 2 b_0 c_k``.
    """
    dec = real_decomposition(povm)
    d, n = dec.dim, dec.n_outcomes
    b0 = dec.b[0]
    included = np.setdiff1d(np.arange(n), excluded_outcomes(povm, threshold))
    D = np.empty((included.size, 2 * d - 2))
    D[:, 0::2] = 2.0 * (b0[included] * dec.b[1:, included]).T
    D[:, 1::2] = 2.0 * (b0[included] * dec.c[1:, included]).T
    return included, b0[included] ** 2, D


def classical_fisher(povm, threshold=ORTHOGONALITY_THRESHOLD):
    """Classical Fisher matrix at the fiducial state, as a Gram matrix.

    ``C[j0, k0] = 4 b_j.b_k``, ``C[j1, k1] = 4 c_j.c_k`` and
    ``C[j0, k1] = 4 b_j.c_k``, with the inner products restricted to outcomes
    whose fiducial probability exceeds ``threshold``.
    """
    dec = real_decomposition(povm)
    keep = dec.b[0] ** 2 > threshold
    # interleave so that row 2(k-1)+sigma is 2*b_k (sigma=0) or 2*c_k (sigma=1)
    G = np.empty((2 * dec.dim - 2, int(keep.sum())))
    G[0::2] = 2.0 * dec.b[1:, keep]
    G[1::2] = 2.0 * dec.c[1:, keep]
    C = G @ G.T
    return 0.5 * (C + C.T)


def classical_fisher_fd(povm, step=DEFAULT_FD_STEP, threshold=ORTHOGONALITY_THRESHOLD):
    """Classical Fisher matrix from central differences of outcome probabilities.

    Independent of :func:`classical_fisher`: only :func:`perturbed_state` and
    :func:`outcome_probabilities` are used.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ValueError(f"finite-difference step must lie in [1e-7, 1e-3], got {step}")
    d = povm.dim
    m = 2 * d - 2
    p0 = outcome_probabilities(povm, PureState.fiducial(d))
    keep = p0 > threshold
    grads = np.empty((m, povm.n_outcomes))
    for alpha in range(m):
        x = np.zeros(m)
        x[alpha] = step
        plus = outcome_probabilities(povm, perturbed_state(d, LocalParams(d, x)))
        minus = outcome_probabilities(povm, perturbed_state(d, LocalParams(d, -x)))
        grads[alpha] = (plus - minus) / (2.0 * step)
    g = grads[:, keep]
    return (g / p0[keep]) @ g.T


def gill_massar(C, Q):
    """The Gill-Massar quantity ``tr(Q^-1 C)``; at most ``d - 1`` for any POVM."""
    C = as_real_square(C, "C")
    check_positive_definite(Q, "Q")
    if C.shape != np.shape(Q):
        raise ValueError(f"C has shape {C.shape} but Q has shape {np.shape(Q)}")
    return float(np.trace(np.linalg.solve(Q, C)))


def fisher_symmetry_quantity(C, Q):
    """``tr((Q^-1/2 C Q^-1/2)^2)``, minimized when ``C`` is proportional to ``Q``."""
    C = as_real_square(C, "C")
    w, v = check_positive_definite(Q, "Q")
    if C.shape != v.shape:
        raise ValueError(f"C has shape {C.shape} but Q has shape {v.shape}")
    q_inv_sqrt = (v / np.sqrt(w)) @ v.T
    M = q_inv_sqrt @ C @ q_inv_sqrt
    return float(np.sum(M * M.T))


def matrix_rank(C, cutoff=RANK_CUTOFF):
    """Numerical rank of a symmetric PSD matrix by eigenvalue cutoff."""
    return int(np.sum(np.linalg.eigvalsh(C) > cutoff))


@dataclass(frozen=True)
class PFSICVerdict:
    """Outcome of :func:`is_pfsic`.

    ``deviation`` is the largest violation of ``C / 2 = I``, i.e. of the
    conditions ``2 b_j.b_k = delta_jk``, ``2 c_j.c_k = delta_jk``,
    ``2 b_j.c_k = 0``.
    """

    is_pfsic: bool
    deviation: float
    n_outcomes: int
    min_outcomes: int
    min_fiducial_overlap: float
    reason: str = ""

    def __bool__(self):
        return self.is_pfsic

    def to_dict(self):
        return {
            "is_pfsic": self.is_pfsic,
            "deviation": self.deviation,
            "n_outcomes": self.n_outcomes,
            "min_outcomes": self.min_outcomes,
            "min_fiducial_overlap": self.min_fiducial_overlap,
            "reason": self.reason,
        }


def is_pfsic(povm, tol=PFSIC_TOL, threshold=ORTHOGONALITY_THRESHOLD, C=None):
    """Check whether ``povm`` is Fisher symmetric and informationally complete.

    A PFSIC has ``C = 2 I`` and no element orthogonal to the fiducial state;
    such a POVM needs at least ``2d - 1`` outcomes.
    """
    d = povm.dim
    if C is None:
        C = classical_fisher(povm, threshold)
    deviation = float(np.max(np.abs(0.5 * C - np.eye(2 * d - 2))))
    overlap = float(np.min(povm.fiducial_overlaps()))
    reasons = []
    if deviation > tol:
        if matrix_rank(C) < 2 * d - 2:
            reasons.append("C singular")
        reasons.append(f"C deviates from 2I by {2 * deviation:.3g}")
    if overlap <= threshold:
        reasons.append("an outcome is orthogonal to the fiducial state")
    return PFSICVerdict(
        is_pfsic=not reasons,
        deviation=deviation,
        n_outcomes=povm.n_outcomes,
        min_outcomes=2 * d - 1,
        min_fiducial_overlap=overlap,
        reason="; ".join(reasons),
    )


@dataclass(frozen=True)
class FisherReport:
    """Fisher analysis of a POVM at the fiducial state."""

    C: np.ndarray
    Q: np.ndarray
    gm: float
    gm_bound: float
    symmetry: float
    symmetry_floor: float
    rank: int
    pfsic: PFSICVerdict
    excluded: tuple = ()
    fd_deviation: float = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self):
        return self.C.shape[0] // 2 + 1

    def to_dict(self):
        out = {
            "dim": self.dim,
            "C": self.C.tolist(),
            "Q": self.Q.tolist(),
            "gm": self.gm,
            "gm_bound": self.gm_bound,
            "symmetry": self.symmetry,
            "symmetry_floor": self.symmetry_floor,
            "rank": self.rank,
            "pfsic": self.pfsic.to_dict(),
            "excluded_outcomes": list(self.excluded),
        }
        if self.fd_deviation is not None:
            out["fd_deviation"] = self.fd_deviation
        out.update(self.extra)
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def fisher_report(
    povm,
    threshold=ORTHOGONALITY_THRESHOLD,
    tol=PFSIC_TOL,
    fd_check=False,
    step=DEFAULT_FD_STEP,
):
    """Compute the full :class:`FisherReport` for ``povm``.

    With ``fd_check`` the Gram-form matrix is compared against the
    finite-difference estimate and the max-abs difference is recorded.
    """
    d = povm.dim
    C = classical_fisher(povm, threshold)
    Q = quantum_fisher_pure(d)
    excluded = tuple(int(i) for i in excluded_outcomes(povm, threshold))
    if excluded:
        logger.info("excluding %d outcome(s) orthogonal to |0>: %s", len(excluded), excluded)
    fd_dev = None
    if fd_check:
        fd_dev = float(np.max(np.abs(classical_fisher_fd(povm, step, threshold) - C)))
    return FisherReport(
        C=C,
        Q=Q,
        gm=gill_massar(C, Q),
        gm_bound=float(d - 1),
        symmetry=fisher_symmetry_quantity(C, Q),
        symmetry_floor=(d - 1) / 2.0,
        rank=matrix_rank(C),
        pfsic=is_pfsic(povm, tol, threshold, C=C),
        excluded=excluded,
        fd_deviation=fd_dev,
    )
