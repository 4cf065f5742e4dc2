"""Exact Gaussian process regression with a squared-exponential kernel.

The posterior is computed from a Cholesky factor of ``K + sigma_n^2 I``
(plus a small adaptive jitter), with zero prior mean. Models are immutable;
:func:`extend` appends observations with a block Cholesky update and
returns a new model that is numerically equivalent to refitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, EmptyTrainingSet, NotPositiveDefinite

__all__ = [
    "SquaredExponentialKernel",
    "GpTrainingSet",
    "GpModel",
    "GpPrediction",
    "kernel_eval",
    "fit",
    "predict",
    "extend",
]

JITTER_START = 1e-10
JITTER_MAX = 1e-4
PREDICT_CHUNK = 2048


def _readonly(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SquaredExponentialKernel:
    """``k(a, b) = sigma_e2 * exp(-|a - b|^2 / sigma_w2)``.

    ``sigma_e2`` is the signal variance and ``sigma_w2`` the squared length
    scale (note: no factor 2 in the denominator).
    """

    sigma_e2: float
    sigma_w2: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma_e2) and self.sigma_e2 > 0):
            raise ValueError(f"sigma_e2 must be positive, got {self.sigma_e2}")
        if not (np.isfinite(self.sigma_w2) and self.sigma_w2 > 0):
            raise ValueError(f"sigma_w2 must be positive, got {self.sigma_w2}")

    def __call__(self, A, B):
        """Cross-covariance matrix between the rows of ``A`` and ``B``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch(f"input dimensions differ: {A.shape[1]} vs {B.shape[1]}")
        K = cdist(A, B, "sqeuclidean")
        K *= -1.0 / self.sigma_w2
        np.exp(K, out=K)
        K *= self.sigma_e2
        return K


def kernel_eval(kernel, a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"point dimensions differ: {a.shape} vs {b.shape}")
    d2 = float(np.sum((a - b) ** 2))
    return kernel.sigma_e2 * float(np.exp(-d2 / kernel.sigma_w2))


@dataclass(frozen=True)
class GpTrainingSet:
    inputs: np.ndarray
    targets: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.targets, dtype=float).ravel()
        if X.ndim != 2 or len(X) != len(y):
            raise ValueError(f"{len(X)} inputs but {len(y)} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("training data must be finite")
        if not (np.isfinite(self.noise_var) and self.noise_var >= 0):
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        object.__setattr__(self, "inputs", _readonly(X))
        object.__setattr__(self, "targets", _readonly(y))

    def __len__(self):
        return len(self.targets)

    @property
    def dim(self):
        return self.inputs.shape[1]


@dataclass(frozen=True)
class GpPrediction:
    mean: np.ndarray
    variance: np.ndarray | None

    def __len__(self):
        return len(self.mean)


@dataclass(frozen=True)
class GpModel:
    """Fitted GP.

    ``chol`` is the lower factor of ``K + noise_var*I + diag(jitter)`` and
    ``alpha`` solves that system against the targets.
    """

    kernel: SquaredExponentialKernel
    training: GpTrainingSet
    chol: np.ndarray
    alpha: np.ndarray
    jitter: np.ndarray

    @property
    def n(self):
        return len(self.training)

    @property
    def dim(self):
        return self.training.dim

    def predict(self, queries, return_variance=True):
        return predict(self, queries, return_variance=return_variance)


def _factor(make_matrix, base_scale, start=None):
    """Cholesky of ``make_matrix() + eps*I`` with escalating ``eps``.

    Returns ``(L, eps)``. ``base_scale`` is trace(K)/n.
    """
    eps = JITTER_START * base_scale if start is None else start
    eps_max = JITTER_MAX * base_scale * (1 + 1e-9)
    while True:
        A = make_matrix()
        A[np.diag_indices_from(A)] += eps
        try:
            return cholesky(A, lower=True, overwrite_a=True, check_finite=False), eps
        except LinAlgError:
            eps *= 10.0
            if eps > eps_max:
                raise NotPositiveDefinite(
                    f"matrix not positive definite after jitter escalation to {eps / 10:.3g}"
                ) from None


def fit(kernel, training):
    """Condition a zero-mean GP on ``training``."""
    if len(training) == 0:
        raise EmptyTrainingSet("cannot fit a GP with no observations")
    X = training.inputs

    def gram():
        K = kernel(X, X)
        K[np.diag_indices_from(K)] += training.noise_var
        return K

    L, eps = _factor(gram, kernel.sigma_e2)
    alpha = cho_solve((L, True), training.targets, check_finite=False)
    jitter = np.full(len(X), eps)
    return GpModel(kernel, training, _readonly(L), _readonly(alpha), _readonly(jitter))


def predict(model, queries, return_variance=True):
    """Posterior mean (and marginal variance) at ``queries``.

    Queries are processed in chunks so memory stays ``O(n * chunk)``.
    Variances below zero from round-off are clamped to 0.
    """
    Q = np.asarray(queries, dtype=float)
    if Q.ndim == 1:
        Q = Q.reshape(-1, model.dim) if Q.size else np.empty((0, model.dim))
    if Q.shape[1] != model.dim:
        raise DimensionMismatch(f"queries have dimension {Q.shape[1]}, model expects {model.dim}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("queries must be finite")
    X = model.training.inputs
    mean = np.empty(len(Q))
    var = np.empty(len(Q)) if return_variance else None
    for s in range(0, len(Q), PREDICT_CHUNK):
        Ks = model.kernel(X, Q[s : s + PREDICT_CHUNK])
        mean[s : s + len(Ks.T)] = Ks.T @ model.alpha
        if return_variance:
            V = solve_triangular(model.chol, Ks, lower=True, check_finite=False)
            v = model.kernel.sigma_e2 - np.einsum("ij,ij->j", V, V)
            var[s : s + len(v)] = np.maximum(v, 0.0)
    return GpPrediction(mean, var)


def extend(model, new_inputs, new_targets):
    """Return a model conditioned on the old data plus ``(new_inputs, new_targets)``.

    Uses the block update

        L_new = [[L, 0], [B, C]],  B = K21 L^-T,  C C^T = K22 + s I - B B^T

    which is exact; no approximation is made.
    """
    Xn = np.asarray(new_inputs, dtype=float)
    yn = np.asarray(new_targets, dtype=float).ravel()
    if Xn.size == 0 and yn.size == 0:
        return model
    Xn = Xn.reshape(-1, model.dim) if Xn.ndim == 1 else Xn
    if Xn.shape[1] != model.dim:
        raise DimensionMismatch(f"new inputs have dimension {Xn.shape[1]}, model expects {model.dim}")
    if len(Xn) != len(yn):
        raise ValueError(f"{len(Xn)} inputs but {len(yn)} targets")
    tr = model.training
    n, m = model.n, len(Xn)
    K12 = model.kernel(tr.inputs, Xn)
    B = solve_triangular(model.chol, K12, lower=True, check_finite=False).T
    del K12

    def schur():
        S = model.kernel(Xn, Xn)
        S[np.diag_indices_from(S)] += tr.noise_var
        S -= B @ B.T
        return S

    C, eps = _factor(schur, model.kernel.sigma_e2, start=float(model.jitter[-1]))
    L = np.zeros((n + m, n + m))
    L[:n, :n] = model.chol
    L[n:, :n] = B
    L[n:, n:] = C
    training = GpTrainingSet(
        np.vstack([tr.inputs, Xn]), np.concatenate([tr.targets, yn]), tr.noise_var
    )
    alpha = cho_solve((L, True), training.targets, check_finite=False)
    jitter = np.concatenate([model.jitter, np.full(m, eps)])
    return GpModel(model.kernel, training, _readonly(L), _readonly(alpha), _readonly(jitter))
