"""Monte Carlo local tomography around the fiducial state."""

import csv
import io
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import NORM_TOL, ORTHOGONALITY_THRESHOLD
from .constructions import build_from_descriptor, minimal_pfsic
from .fisher import RANK_CUTOFF, information_rows
from .povm_core import (
    LocalParams,
    PureState,
    RankOnePOVM,
    make_pure_state,
    outcome_probabilities,
    param_labels,
    perturbed_state,
)

__all__ = [
    "GENERATOR",
    "LocalStateEstimator",
    "NotLocallyCompleteError",
    "SimConfig",
    "SimReport",
    "estimate_local",
    "run_trials",
    "sample_outcomes",
    "trial_rng",
    "trine_ambiguity_demo",
]

GENERATOR = "numpy.random.PCG64 seeded by SeedSequence(seed, spawn_key=(trial,))"


class NotLocallyCompleteError(ValueError):
    """The classical Fisher matrix is singular, so some local parameters are unidentifiable."""


def trial_rng(seed, trial=None):
    """Independent generator for one trial; ``trial=None`` gives the root stream."""
    key = () if trial is None else (int(trial),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def sample_outcomes(povm, state, N, seed=None):
    """Multinomial outcome counts for ``N`` measurements of ``state``.

    ``seed`` may be an int, a :class:`numpy.random.Generator` or None.
    """
    if N < 1:
        raise ValueError(f"number of shots must be >= 1, got {N}")
    p = outcome_probabilities(povm, state)
    total = p.sum()
    if abs(total - 1.0) > NORM_TOL * max(1, povm.n_outcomes):
        raise ValueError(f"outcome probabilities sum to {total!r}")
    p = np.clip(p, 0.0, None) / total
    rng = seed if isinstance(seed, np.random.Generator) else trial_rng(seed)
    return rng.multinomial(int(N), p)


class LocalStateEstimator(TransformerMixin, BaseEstimator):
    """Linearized weighted least-squares estimator of the local parameters.

    ``fit`` precomputes the Fisher matrix of ``povm`` at the fiducial state;
    ``transform`` maps rows of outcome counts to parameter estimates
    ``x_hat = C^-1 s`` with ``s_alpha = sum_xi D_alpha^xi f^xi / p0^xi``,
    where ``f`` are the observed frequencies, ``p0`` the fiducial
    probabilities and ``D`` the probability derivatives. Its covariance is
    ``C^-1 / N`` for ``N`` shots.

    Parameters
    ----------
    povm : RankOnePOVM
        Measurement whose counts will be fed to ``transform``.
    threshold : float
        Outcomes with fiducial probability at or below this are ignored.
    """

    def __init__(self, povm=None, threshold=ORTHOGONALITY_THRESHOLD):
        self.povm = povm
        self.threshold = threshold

    def fit(self, X=None, y=None):
        """Precompute the estimator; ``X`` and ``y`` are ignored."""
        if not isinstance(self.povm, RankOnePOVM):
            raise TypeError("povm must be a RankOnePOVM")
        included, p0, D = information_rows(self.povm, self.threshold)
        C = D.T @ (D / p0[:, None])
        C = 0.5 * (C + C.T)
        eig = np.linalg.eigvalsh(C)
        if eig[0] <= RANK_CUTOFF:
            raise NotLocallyCompleteError(
                "not locally informationally complete: classical Fisher matrix is "
                f"singular (smallest eigenvalue {eig[0]:.3g})"
            )
        self.included_ = included
        self.fiducial_probabilities_ = p0
        self.derivatives_ = D
        self.fisher_ = C
        self.fisher_inv_ = np.linalg.inv(C)
        self.n_outcomes_ = self.povm.n_outcomes
        self.n_features_in_ = self.povm.n_outcomes
        return self

    def transform(self, X):
        """Estimate local parameters from an ``(M, n)`` array of counts."""
        check_is_fitted(self, "fisher_inv_")
        X = check_array(X, dtype=float, ensure_2d=False)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_outcomes_:
            raise ValueError(f"expected {self.n_outcomes_} outcome counts, got {X.shape[1]}")
        if np.any(X < 0):
            raise ValueError("counts must be nonnegative")
        shots = X.sum(axis=1, keepdims=True)
        if np.any(shots <= 0):
            raise ValueError("every row of counts needs at least one shot")
        f = X[:, self.included_] / shots
        s = f @ (self.derivatives_ / self.fiducial_probabilities_[:, None])
        est = s @ self.fisher_inv_
        return est[0] if single else est

    def predicted_covariance(self, N):
        """Asymptotic estimator covariance ``(N C)^-1``."""
        check_is_fitted(self, "fisher_inv_")
        return self.fisher_inv_ / N

    def get_feature_names_out(self, input_features=None):
        return np.asarray(param_labels(self.povm.dim), dtype=object)


def estimate_local(povm, counts):
    """Single-shot-record convenience wrapper returning :class:`LocalParams`."""
    est = LocalStateEstimator(povm).fit().transform(np.asarray(counts, dtype=float))
    return LocalParams(povm.dim, est)


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo experiment: ``trials`` repetitions of ``shots`` measurements.

    ``povm`` may also be a construction descriptor (see
    :func:`pfsic.constructions.build_from_descriptor`).
    """

    povm: RankOnePOVM
    true_params: LocalParams
    shots: int
    trials: int
    seed: int
    threads: int = 0

    def __post_init__(self):
        if isinstance(self.povm, dict):
            object.__setattr__(self, "povm", build_from_descriptor(self.povm))
        if self.shots < 1 or self.trials < 1:
            raise ValueError("shots and trials must both be >= 1")
        if not isinstance(self.true_params, LocalParams):
            object.__setattr__(
                self, "true_params", LocalParams(self.povm.dim, self.true_params)
            )
        if self.true_params.dim != self.povm.dim:
            raise ValueError("true_params dimension does not match the POVM")


@dataclass(frozen=True)
class SimReport:
    """Result of :func:`run_trials`.

    ``empirical_cov`` is empty (shape ``(0, 0)``) when fewer than two trials
    were run, in which case the discrepancy metrics are NaN.
    """

    estimates: np.ndarray
    true_params: np.ndarray
    empirical_mean: np.ndarray
    empirical_cov: np.ndarray
    predicted_cov: np.ndarray
    max_relative_diag_error: float
    offdiag_max_abs: float
    shots: int
    trials: int
    seed: int
    generator: str = GENERATOR
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def insufficient_trials(self):
        return self.trials < 2

    @property
    def bias(self):
        return self.empirical_mean - self.true_params

    def to_dict(self, include_estimates=True):
        out = {
            "dim": self.true_params.size // 2 + 1,
            "shots": self.shots,
            "trials": self.trials,
            "seed": self.seed,
            "generator": self.generator,
            "true_params": self.true_params.tolist(),
            "empirical_mean": self.empirical_mean.tolist(),
            "bias": self.bias.tolist(),
            "empirical_cov": self.empirical_cov.tolist(),
            "predicted_cov": self.predicted_cov.tolist(),
            "max_relative_diag_error": _nan_to_none(self.max_relative_diag_error),
            "offdiag_max_abs": _nan_to_none(self.offdiag_max_abs),
            "insufficient_trials": self.insufficient_trials,
        }
        if include_estimates:
            out["estimates"] = self.estimates.tolist()
        out.update(self.extra)
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self, fh=None):
        """Per-trial estimates, one row per trial. Returns the text if ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial"] + param_labels(self.true_params.size // 2 + 1))
        for i, row in enumerate(self.estimates):
            writer.writerow([i] + [repr(float(v)) for v in row])
        return buf.getvalue() if fh is None else None


def _nan_to_none(v):
    return None if v is None or np.isnan(v) else float(v)


def _threads(requested):
    if requested:
        return int(requested)
    env = int(os.environ.get("PFSIC_THREADS", "0") or 0)
    return env or (os.cpu_count() or 1)


def run_trials(config):
    """Sample and estimate ``config.trials`` times at the perturbed true state.

    Trial ``t`` draws from its own substream (see :func:`trial_rng`), so the
    result does not depend on the number of worker threads.
    """
    povm = config.povm
    d = povm.dim
    estimator = LocalStateEstimator(povm).fit()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state = perturbed_state(d, config.true_params)
    p = outcome_probabilities(povm, state)
    if np.any(p[estimator.included_] <= 0):
        raise ValueError("true parameters give zero probability to an informative outcome")

    def one(t):
        return sample_outcomes(povm, state, config.shots, trial_rng(config.seed, t))

    n_threads = min(_threads(config.threads), config.trials)
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            counts = np.array(list(pool.map(one, range(config.trials))))
    else:
        counts = np.array([one(t) for t in range(config.trials)])

    estimates = estimator.transform(counts)
    mean = estimates.mean(axis=0)
    predicted = estimator.predicted_covariance(config.shots)
    m = 2 * d - 2
    if config.trials >= 2:
        cov = np.cov(estimates, rowvar=False).reshape(m, m)
        rel = float(np.max(np.abs(np.diag(cov) / np.diag(predicted) - 1.0)))
        off = cov[~np.eye(m, dtype=bool)]
        off_max = float(np.max(np.abs(off))) if off.size else 0.0
    else:
        cov = np.empty((0, 0))
        rel = off_max = float("nan")
    return SimReport(
        estimates=estimates,
        true_params=np.array(config.true_params.x),
        empirical_mean=mean,
        empirical_cov=cov,
        predicted_cov=predicted,
        max_relative_diag_error=rel,
        offdiag_max_abs=off_max,
        shots=config.shots,
        trials=config.trials,
        seed=config.seed,
    )


def _bloch(amps):
    a0, a1 = amps
    z = np.conj(a0) * a1
    return np.array([2 * z.real, 2 * z.imag, abs(a0) ** 2 - abs(a1) ** 2])


def _state_from_bloch(r):
    r = np.asarray(r, dtype=float)
    r = r / np.linalg.norm(r)
    a0 = np.sqrt((1.0 + r[2]) / 2.0)
    if a0 < 1e-150:
        return PureState(np.array([0.0, 1.0], dtype=complex))
    return make_pure_state([a0, (r[0] + 1j * r[1]) / (2.0 * a0)])


def trine_ambiguity_demo(x, povm=None):
    """Trine probabilities for a qubit state and its Bloch-z mirror image.

    Returns ``(p, p_flipped)``; the two agree because every trine element
    lies in the equatorial plane.
    """
    if povm is None:
        povm = minimal_pfsic(2)
    params = x if isinstance(x, LocalParams) else LocalParams(2, x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        state = perturbed_state(2, params)
    r = _bloch(state.amplitudes)
    flipped = _state_from_bloch(r * np.array([1.0, 1.0, -1.0]))
    return outcome_probabilities(povm, state), outcome_probabilities(povm, flipped)
