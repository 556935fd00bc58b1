"""Streaming recursions for reduced-rank filtering with an adapted projection.

Two per-sample state machines live here. JioState carries a (dim, rank)
projection and a rank-sized weight vector that are updated jointly from the
same innovation, each through its own matrix-inversion-lemma recursion;
FullRankState is the conventional exponentially weighted RLS baseline at
full dimension. The P_* fields follow the usual RLS convention of tracking
the inverse of a forgetting-weighted correlation:

    P_full     inverse of the input correlation (dim x dim)
    P_reduced  inverse of the projected-input correlation (rank x rank)
    P_weights  inverse of the weight-snapshot correlation (rank x rank)

The fused per-sample steps dispatch to the compiled kernels when the
extension is available (see _backend); the granular operations below are
plain NumPy and define the reference semantics, so composing them by hand
reproduces a fused step. Granular operations mutate the state they are
given and raise before mutating when a denominator is unusable.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._kernels_py import M_DEPENDENT_LABELS, OpCounter
from ._kernels_py import jio_step_kernel as _py_jio_step
from .exceptions import NumericalError

__all__ = [
    "StepOutput",
    "JioState",
    "FullRankState",
    "jio_init",
    "full_rank_init",
    "project",
    "reduced_gain",
    "reduced_update",
    "projection_gain",
    "weight_gain_update",
    "projection_update",
    "jio_step",
    "full_rank_rls_step",
    "effective_weights",
    "count_step_operations",
    "M_DEPENDENT_LABELS",
    "OpCounter",
]


@dataclass(frozen=True)
class StepOutput:
    """A-priori filter output y and innovation e = d - y for one sample."""

    y: complex
    e: complex


def _check_scalar(d) -> complex:
    d = complex(d)
    if not (cmath.isfinite(d)):
        raise ValueError(f"desired symbol must be finite, got {d!r}")
    return d


def _check_input(r, dim: int) -> np.ndarray:
    arr = np.ascontiguousarray(r, dtype=np.complex128)
    if arr.shape != (dim,):
        raise ValueError(f"input vector must have shape ({dim},), got {np.shape(r)}")
    return arr


def _check_lam(lam: float) -> float:
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"forgetting factor must lie in (0, 1], got {lam}")
    return float(lam)


def _check_delta(delta: float, name: str) -> float:
    if not (delta > 0 and np.isfinite(delta)):
        raise ValueError(f"{name} must be positive and finite, got {delta}")
    return float(delta)


@dataclass
class JioState:
    """State of the jointly adapted projection + reduced-filter recursion."""

    projection: np.ndarray
    weights: np.ndarray
    P_full: np.ndarray
    P_reduced: np.ndarray
    P_weights: np.ndarray
    lam: float
    step_index: int = 0

    @property
    def dim(self) -> int:
        return self.projection.shape[0]

    @property
    def rank(self) -> int:
        return self.projection.shape[1]

    def copy(self) -> "JioState":
        return JioState(
            projection=self.projection.copy(),
            weights=self.weights.copy(),
            P_full=self.P_full.copy(),
            P_reduced=self.P_reduced.copy(),
            P_weights=self.P_weights.copy(),
            lam=self.lam,
            step_index=self.step_index,
        )

    def output(self, r) -> complex:
        """A-priori output for one input without updating anything."""
        arr = _check_input(r, self.dim)
        return complex(self.weights.conj() @ (self.projection.conj().T @ arr))

    def effective_weights(self) -> np.ndarray:
        return self.projection @ self.weights

    def step(self, r, d) -> StepOutput:
        return jio_step(self, r, d)


@dataclass
class FullRankState:
    """State of the conventional exponentially weighted RLS recursion."""

    weights: np.ndarray
    P: np.ndarray
    lam: float
    step_index: int = 0

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "FullRankState":
        return FullRankState(
            weights=self.weights.copy(),
            P=self.P.copy(),
            lam=self.lam,
            step_index=self.step_index,
        )

    def output(self, r) -> complex:
        arr = _check_input(r, self.dim)
        return complex(self.weights.conj() @ arr)

    def effective_weights(self) -> np.ndarray:
        return self.weights

    def step(self, r, d) -> StepOutput:
        return full_rank_rls_step(self, r, d)


def jio_init(
    dim: int,
    rank: int,
    lam: float = 0.998,
    delta: float = 0.01,
    delta_reduced: float = 0.01,
    delta_weights: float = 0.01,
) -> JioState:
    """Fresh joint state: truncation projection, first-coordinate weights.

    The inverse-correlation estimates start at 1/delta times identity, the
    standard RLS initialization for a delta-scaled identity correlation.
    """
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    lam = _check_lam(lam)
    delta = _check_delta(delta, "delta")
    delta_reduced = _check_delta(delta_reduced, "delta_reduced")
    delta_weights = _check_delta(delta_weights, "delta_weights")
    projection = np.zeros((dim, rank), dtype=np.complex128)
    projection[:rank, :rank] = np.eye(rank)
    weights = np.zeros(rank, dtype=np.complex128)
    weights[0] = 1.0
    return JioState(
        projection=projection,
        weights=weights,
        P_full=np.eye(dim, dtype=np.complex128) / delta,
        P_reduced=np.eye(rank, dtype=np.complex128) / delta_reduced,
        P_weights=np.eye(rank, dtype=np.complex128) / delta_weights,
        lam=lam,
    )


def full_rank_init(dim: int, lam: float = 0.998, delta: float = 0.01) -> FullRankState:
    """Fresh full-dimension RLS state with zero weights."""
    if dim < 1:
        raise ValueError(f"dim must be at least 1, got {dim}")
    lam = _check_lam(lam)
    delta = _check_delta(delta, "delta")
    return FullRankState(
        weights=np.zeros(dim, dtype=np.complex128),
        P=np.eye(dim, dtype=np.complex128) / delta,
        lam=lam,
    )


def project(projection, r) -> np.ndarray:
    """Reduced-dimension image of an input snapshot: projection^H r."""
    S = np.asarray(projection, dtype=np.complex128)
    if S.ndim != 2:
        raise ValueError(f"projection must be a matrix, got shape {S.shape}")
    arr = _check_input(r, S.shape[0])
    return S.conj().T @ arr


def _gain(P: np.ndarray, x: np.ndarray, inv_lam: float, label: str) -> np.ndarray:
    u = P @ x
    den = 1.0 + inv_lam * complex(x.conj() @ u)
    if not (np.isfinite(den.real) and np.isfinite(den.imag)) or den == 0:
        raise NumericalError(f"{label} denominator is unusable ({den!r})")
    return inv_lam * u / den


def reduced_gain(state: JioState, reduced) -> np.ndarray:
    """Gain for the reduced weight update given a projected input."""
    x = _check_input(reduced, state.rank)
    return _gain(state.P_reduced, x, 1.0 / state.lam, "reduced gain")


def reduced_update(state: JioState, reduced, d) -> complex:
    """Advance the reduced filter one sample; returns the innovation.

    Updates weights and P_reduced in place from the projected input. The
    projection itself is untouched, so driving only this operation runs
    the recursion with a frozen projection.
    """
    x = _check_input(reduced, state.rank)
    d = _check_scalar(d)
    inv_lam = 1.0 / state.lam
    error = d - complex(state.weights.conj() @ x)
    gain = _gain(state.P_reduced, x, inv_lam, "reduced gain")
    row = x.conj() @ state.P_reduced
    state.weights += gain * np.conj(error)
    state.P_reduced[...] = inv_lam * (state.P_reduced - np.outer(gain, row))
    return error


def projection_gain(state: JioState, r) -> np.ndarray:
    """Full-dimension gain for the projection update; P_full is not touched."""
    arr = _check_input(r, state.dim)
    return _gain(state.P_full, arr, 1.0 / state.lam, "projection gain")


def weight_gain_update(state: JioState):
    """Gain from the weight-snapshot correlation; advances P_weights.

    Uses the state's current weights, i.e. the most recent value available
    at this point of a step. Returns the gain and the updated P_weights.
    """
    w = state.weights
    inv_lam = 1.0 / state.lam
    gain = _gain(state.P_weights, w, inv_lam, "weight gain")
    row = w.conj() @ state.P_weights
    state.P_weights[...] = inv_lam * (state.P_weights - np.outer(gain, row))
    return gain, state.P_weights


def projection_update(state: JioState, r, reduced, d, weight_gain, gain) -> np.ndarray:
    """Advance the projection and P_full one sample; returns the projection.

    The rank-one correction pushes the projection toward reproducing the
    desired symbol through the weight-gain direction while discounting the
    already-projected input.
    """
    arr = _check_input(r, state.dim)
    x = _check_input(reduced, state.rank)
    d = _check_scalar(d)
    g = _check_input(gain, state.dim)
    t = _check_input(weight_gain, state.rank)
    inv_lam = 1.0 / state.lam
    state.projection += np.outer(g, np.conj(d) * t.conj() - x.conj())
    row = arr.conj() @ state.P_full
    state.P_full[...] = inv_lam * (state.P_full - np.outer(g, row))
    return state.projection


def jio_step(state: JioState, r, d) -> StepOutput:
    """One fused joint update: project, filter, then adapt the projection.

    Sub-operation order: the projected input is formed from the previous
    projection, the reduced filter consumes it first, the projection gain is
    taken from the previous P_full, the weight gain uses the just-updated
    weights, and the projection commit comes last. A raised error leaves the
    state unmodified.
    """
    arr = _check_input(r, state.dim)
    d = _check_scalar(d)
    y, e = _backend.impl.jio_step_kernel(
        arr,
        d,
        state.lam,
        state.weights,
        state.projection,
        state.P_full,
        state.P_reduced,
        state.P_weights,
    )
    state.step_index += 1
    return StepOutput(y=y, e=e)


def full_rank_rls_step(state: FullRankState, r, d) -> StepOutput:
    """One conventional RLS update at full dimension."""
    arr = _check_input(r, state.dim)
    d = _check_scalar(d)
    y, e = _backend.impl.full_rank_step_kernel(arr, d, state.lam, state.weights, state.P)
    state.step_index += 1
    return StepOutput(y=y, e=e)


def effective_weights(state) -> np.ndarray:
    """Full-dimension weights the filter currently applies to an input."""
    return state.effective_weights()


def count_step_operations(dim: int, rank: int, lam: float = 0.998, seed: int = 0) -> OpCounter:
    """Complex multiply-accumulate tally of one fused joint step.

    Runs the instrumented NumPy kernel on a synthetic state of the given
    shape; the compiled kernel performs the same arithmetic. Labels in
    M_DEPENDENT_LABELS scale with dim, the rest only with rank.
    """
    rng = np.random.default_rng(seed)
    state = jio_init(dim, rank, lam=lam)
    r = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    counter = OpCounter()
    _py_jio_step(
        np.ascontiguousarray(r),
        1.0 + 0.0j,
        state.lam,
        state.weights,
        state.projection,
        state.P_full,
        state.P_reduced,
        state.P_weights,
        counter=counter,
    )
    return counter
