"""NumPy implementations of the per-sample update kernels.

This is the fallback backend when the compiled extension is unavailable and
the reference its semantics are pinned against. Both kernels validate every
failure-prone denominator before mutating anything, so a raised
NumericalError leaves the state arrays untouched.

The optional counter argument tallies complex multiply-accumulate work per
labelled sub-operation as the kernel executes; it exists for cost-scaling
checks and benchmarks, never for the hot path.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NumericalError

# Sub-operation labels whose arithmetic grows with the full input dimension.
# The remaining labels depend only on the reduced rank.
M_DEPENDENT_LABELS = frozenset(
    {"project", "projection_gain", "projection_matrix_update", "inverse_corr_update"}
)


class OpCounter(dict):
    """Complex multiply-accumulate tally keyed by sub-operation label."""

    def add(self, label: str, macs: int) -> None:
        self[label] = self.get(label, 0) + int(macs)

    def total(self) -> int:
        return sum(self.values())

    def dim_dependent_total(self) -> int:
        return sum(v for k, v in self.items() if k in M_DEPENDENT_LABELS)


def _guard(den: complex, label: str) -> None:
    if not (np.isfinite(den.real) and np.isfinite(den.imag)) or den == 0:
        raise NumericalError(f"{label} denominator is unusable ({den!r})")


def jio_step_kernel(r, d, lam, weights, projection, P_full, P_reduced, P_weights, counter=None):
    """One joint projection/reduced-filter update. Mutates the state arrays.

    Returns (estimate, error) where the estimate is formed from the state
    before any update and error = d - estimate. All arrays must be
    C-contiguous complex128 and mutually non-aliased.
    """
    M = r.shape[0]
    D = weights.shape[0]
    inv_lam = 1.0 / lam

    reduced = projection.conj().T @ r
    estimate = complex(weights.conj() @ reduced)
    error = d - estimate
    if counter is not None:
        counter.add("project", M * D)
        counter.add("output", D)

    # Reduced gain from the current reduced-dimension inverse correlation.
    u = P_reduced @ reduced
    den_red = 1.0 + inv_lam * complex(reduced.conj() @ u)
    _guard(den_red, "reduced gain")
    gain_red = inv_lam * u / den_red
    weights_new = weights + gain_red * np.conj(error)
    if counter is not None:
        counter.add("reduced_gain", D * D + 2 * D)
        counter.add("reduced_weight_update", D)

    # Full-dimension gain from the inverse correlation of the raw input.
    v = P_full @ r
    den_full = 1.0 + inv_lam * complex(r.conj() @ v)
    _guard(den_full, "projection gain")
    gain_full = inv_lam * v / den_full
    if counter is not None:
        counter.add("projection_gain", M * M + 2 * M)

    # Gain derived from the weight-snapshot correlation, using the weights
    # just produced above.
    q = P_weights @ weights_new
    den_w = 1.0 + inv_lam * complex(weights_new.conj() @ q)
    _guard(den_w, "weight gain")
    gain_w = inv_lam * q / den_w
    if counter is not None:
        counter.add("weight_gain", D * D + 2 * D)

    # All denominators checked; commit. Every row product is taken before
    # its matrix is overwritten.
    row = reduced.conj() @ P_reduced
    P_reduced[...] = inv_lam * (P_reduced - np.outer(gain_red, row))
    weights[...] = weights_new
    if counter is not None:
        counter.add("reduced_corr_update", 3 * D * D)

    row = weights_new.conj() @ P_weights
    P_weights[...] = inv_lam * (P_weights - np.outer(gain_w, row))
    if counter is not None:
        counter.add("weight_corr_update", 3 * D * D)

    projection[...] = projection + np.outer(
        gain_full, np.conj(d) * gain_w.conj() - reduced.conj()
    )
    if counter is not None:
        counter.add("projection_matrix_update", 2 * M * D + 2 * D)

    row = r.conj() @ P_full
    P_full[...] = inv_lam * (P_full - np.outer(gain_full, row))
    if counter is not None:
        counter.add("inverse_corr_update", 3 * M * M)

    return estimate, error


def full_rank_step_kernel(r, d, lam, weights, P, counter=None):
    """One conventional exponentially weighted RLS update at full dimension."""
    M = r.shape[0]
    inv_lam = 1.0 / lam

    estimate = complex(weights.conj() @ r)
    error = d - estimate

    v = P @ r
    den = 1.0 + inv_lam * complex(r.conj() @ v)
    _guard(den, "full-rank gain")
    gain = inv_lam * v / den
    if counter is not None:
        counter.add("output", M)
        counter.add("projection_gain", M * M + 2 * M)

    weights[...] = weights + gain * np.conj(error)
    row = r.conj() @ P
    P[...] = inv_lam * (P - np.outer(gain, row))
    if counter is not None:
        counter.add("reduced_weight_update", M)
        counter.add("inverse_corr_update", 3 * M * M)

    return estimate, error
