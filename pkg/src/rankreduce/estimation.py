"""Batch least-squares machinery for rank-reducing adaptive filters.

Closed-form counterparts of the streaming recursions in :mod:`rankreduce.rls`:
exponentially weighted correlation accumulation, the reduced-rank weight and
projection solves, the attainable residual power, and an alternating
two-block descent that serves as a slow, transparent reference for the joint
scheme. Everything here works on explicit sample histories and is meant for
oracle-style verification and small problems, not for per-sample streaming.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericalError

# Relative ridge applied to batch inversions when none is given: scaled by
# the trace-average diagonal of the matrix being inverted.
DEFAULT_RIDGE_SCALE = 1e-8

# Condition-number ceiling beyond which a ridgeless solve is refused.
_COND_LIMIT = 1e13


def _as_snapshot_matrix(observations) -> np.ndarray:
    arr = np.asarray(observations, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(
            f"observations must be a non-empty (n_samples, dim) array, got shape {arr.shape}"
        )
    return arr


@dataclass(frozen=True)
class SampleHistory:
    """A finite stream of (observation, desired) pairs with forgetting.

    observations holds one snapshot per row, shape (n, dim); desired is the
    matching length-n vector of training scalars. Sample l (0-based) carries
    weight lam**(n - 1 - l), so the newest sample always has weight one.
    """

    observations: np.ndarray
    desired: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        obs = _as_snapshot_matrix(self.observations)
        des = np.asarray(self.desired, dtype=np.complex128)
        if des.ndim != 1 or des.shape[0] != obs.shape[0]:
            raise ValueError(
                f"desired must be a length-{obs.shape[0]} vector, got shape {des.shape}"
            )
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"forgetting factor must lie in (0, 1], got {self.lam}")
        if not (np.isfinite(obs).all() and np.isfinite(des).all()):
            raise ValueError("history contains non-finite entries")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "desired", des)

    @property
    def n_samples(self) -> int:
        return self.observations.shape[0]

    @property
    def dim(self) -> int:
        return self.observations.shape[1]

    def weights(self) -> np.ndarray:
        """Per-sample forgetting weights, oldest first."""
        n = self.n_samples
        return self.lam ** np.arange(n - 1, -1, -1, dtype=np.float64)


@dataclass(frozen=True)
class Correlation:
    """Weighted input correlation statistics of a sample history.

    R is the (dim, dim) Hermitian input correlation, p the cross-correlation
    between input and desired, and sigma2_d the weighted desired-signal power.
    """

    R: np.ndarray
    p: np.ndarray
    sigma2_d: float

    @property
    def dim(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class ReducedCorrelation:
    """Correlation statistics seen through a projection.

    R and p are the (rank, rank) / (rank,) projected counterparts of the
    full statistics. cross is the (dim, rank) correlation between the
    desired-weighted input and the reduced weight vector; weight_corr is the
    (rank, rank) correlation of the weight snapshots. cross and weight_corr
    must be accumulated against the same weight history.
    """

    R: np.ndarray
    p: np.ndarray
    cross: np.ndarray
    weight_corr: np.ndarray

    @property
    def rank(self) -> int:
        return self.R.shape[0]


def hermitize(a: np.ndarray) -> np.ndarray:
    """Average a square matrix with its conjugate transpose.

    Applied once per batch accumulation so downstream solves see an exactly
    Hermitian matrix; the streaming recursions never re-symmetrize.
    """
    return 0.5 * (a + a.conj().T)


def truncation_basis(dim: int, rank: int) -> np.ndarray:
    """Projection that keeps the first `rank` coordinates: identity over zeros."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    basis = np.zeros((dim, rank), dtype=np.complex128)
    basis[:rank, :rank] = np.eye(rank)
    return basis


def accumulate_correlation(history: SampleHistory) -> Correlation:
    """Accumulate the weighted correlation statistics of a history.

    Returns R = sum_l lam**(n-1-l) r_l r_l^H (symmetrized), the matching
    cross vector p = sum_l lam**(n-1-l) conj(d_l) r_l, and the desired power
    sigma2_d = sum_l lam**(n-1-l) |d_l|**2.
    """
    obs = history.observations
    w = history.weights()
    R = hermitize((obs.T * w) @ obs.conj())
    p = obs.T @ (w * history.desired.conj())
    sigma2_d = float(w @ np.abs(history.desired) ** 2)
    return Correlation(R=R, p=p, sigma2_d=sigma2_d)


def _resolve_ridge(ridge, matrix: np.ndarray) -> float:
    if ridge is not None:
        if ridge < 0:
            raise ValueError(f"ridge must be non-negative, got {ridge}")
        return float(ridge)
    return DEFAULT_RIDGE_SCALE * float(np.mean(matrix.diagonal().real))


def _checked_solve(a: np.ndarray, b: np.ndarray, label: str) -> np.ndarray:
    """Dense solve that turns singularity into a diagnosable error."""
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{label} is singular: {exc}") from exc
    if not np.isfinite(x).all():
        raise NumericalError(f"{label} solve produced non-finite values")
    return x


def _guard_condition(a: np.ndarray, label: str) -> None:
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise NumericalError(
            f"{label} is numerically singular (condition estimate {cond:.3e})"
        )


def batch_reduced_weights(projection, corr: Correlation, ridge=None) -> np.ndarray:
    """Optimal reduced-rank weights for a fixed projection.

    Solves (S^H R S + ridge I) w = S^H p where S is the projection. With
    ridge=None a relative default of DEFAULT_RIDGE_SCALE times the
    trace-average diagonal is used; ridge=0 demands a well-conditioned
    reduced correlation and raises NumericalError otherwise.
    """
    S = np.asarray(projection, dtype=np.complex128)
    if S.ndim != 2 or S.shape[0] != corr.dim:
        raise ValueError(
            f"projection must have shape ({corr.dim}, rank), got {S.shape}"
        )
    R_red = hermitize(S.conj().T @ corr.R @ S)
    p_red = S.conj().T @ corr.p
    rid = _resolve_ridge(ridge, R_red)
    if rid == 0.0:
        _guard_condition(R_red, "reduced correlation")
    a = R_red + rid * np.eye(R_red.shape[0])
    return _checked_solve(a, p_red, "reduced correlation")


def batch_projection(corr: Correlation, red: ReducedCorrelation, ridge=None) -> np.ndarray:
    """Least-squares projection update for fixed reduced statistics.

    Returns (R + ridge I)^{-1} cross (weight_corr + ridge I)^{-1}. With
    ridge=None each factor gets its own relative default ridge.
    """
    cross = np.asarray(red.cross, dtype=np.complex128)
    if cross.shape != (corr.dim, red.rank):
        raise ValueError(
            f"cross statistics must have shape ({corr.dim}, {red.rank}), got {cross.shape}"
        )
    rid_r = _resolve_ridge(ridge, corr.R)
    rid_w = _resolve_ridge(ridge, red.weight_corr)
    if rid_r == 0.0:
        _guard_condition(corr.R, "input correlation")
    if rid_w == 0.0:
        _guard_condition(red.weight_corr, "weight correlation")
    left = _checked_solve(
        corr.R + rid_r * np.eye(corr.dim), cross, "input correlation"
    )
    bw = red.weight_corr + rid_w * np.eye(red.rank)
    # Right-multiplying by bw^{-1} via a solve on the conjugate transpose;
    # bw is Hermitian so its conjugate transpose is itself.
    return _checked_solve(hermitize(bw), left.conj().T, "weight correlation").conj().T


def reduce_correlation(projection, corr: Correlation, weights) -> ReducedCorrelation:
    """Project full statistics and pair them with a weight snapshot.

    cross and weight_corr are taken against the single current weight vector
    (weight 1), which is the convention the alternating descent needs;
    streaming callers that track a weight trajectory accumulate their own.
    """
    S = np.asarray(projection, dtype=np.complex128)
    w = np.asarray(weights, dtype=np.complex128)
    if S.ndim != 2 or S.shape[0] != corr.dim:
        raise ValueError(
            f"projection must have shape ({corr.dim}, rank), got {S.shape}"
        )
    if w.shape != (S.shape[1],):
        raise ValueError(f"weights must have shape ({S.shape[1]},), got {w.shape}")
    return ReducedCorrelation(
        R=hermitize(S.conj().T @ corr.R @ S),
        p=S.conj().T @ corr.p,
        cross=np.outer(corr.p, w.conj()),
        weight_corr=np.outer(w, w.conj()),
    )


def ses(red: ReducedCorrelation, sigma2_d: float) -> float:
    """Weighted sum of error squares of the optimal reduced filter.

    sigma2_d - p^H R^{-1} p evaluated on the reduced statistics; non-negative
    up to round-off whenever the statistics come from a real history.
    """
    _guard_condition(red.R, "reduced correlation")
    x = _checked_solve(red.R, red.p, "reduced correlation")
    return float(sigma2_d - (red.p.conj() @ x).real)


def ls_cost(history: SampleHistory, projection, weights) -> float:
    """Weighted squared error of the composite filter over a history."""
    S = np.asarray(projection, dtype=np.complex128)
    w = np.asarray(weights, dtype=np.complex128)
    effective = S @ w
    residual = history.desired - history.observations @ effective.conj()
    return float(history.weights() @ np.abs(residual) ** 2)


def alternating_ls(
    history: SampleHistory,
    rank: int,
    iters: int,
    init=None,
    ridge=None,
):
    """Alternate the reduced-weight and projection solves on one history.

    Each sweep recomputes the optimal reduced weights for the current
    projection, then the least-squares projection for those weights. Returns
    the final projection, weights, and the cost after each full sweep; the
    trace is non-increasing up to solver round-off because both half-steps
    are descent steps on the same weighted squared-error surface.
    """
    if iters < 1:
        raise ValueError(f"iters must be at least 1, got {iters}")
    S = truncation_basis(history.dim, rank) if init is None else np.array(init, dtype=np.complex128)
    if S.shape != (history.dim, rank):
        raise ValueError(
            f"init must have shape ({history.dim}, {rank}), got {S.shape}"
        )
    corr = accumulate_correlation(history)
    trace = []
    w = None
    for _ in range(iters):
        w = batch_reduced_weights(S, corr, ridge)
        red = reduce_correlation(S, corr, w)
        S = batch_projection(corr, red, ridge)
        trace.append(ls_cost(history, S, w))
    return S, w, trace
