"""DS-CDMA uplink snapshot generation over multipath fading antenna arrays.

A scenario stacks J antenna outputs of an N-chip spread system into one
J*(N + Lp - 1) space-time snapshot per symbol. Each user contributes three
terms per snapshot: its current symbol through the full set of chip-shifted
signature copies, plus edge segments of the previous and next symbols that
leak across the window boundaries. Channels are sparse multipath with
sum-of-sinusoids Rayleigh path gains and a half-wavelength uniform linear
array response per path; noise is circular white Gaussian.

Everything a trial needs is precomputed by build_scenario from one seeded
generator, so trials are pure functions of (params, seed) and paired
comparisons between receivers can share a scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, TrialError

DOA_SECTOR_HIGH = 2.0 * math.pi / 3.0


def gen_signatures(n_chips: int, n_users: int, rng) -> np.ndarray:
    """Random binary spreading sequences, one unit-energy row per user."""
    if n_chips < 1 or n_users < 1:
        raise ValueError(
            f"need at least one chip and one user, got n_chips={n_chips}, n_users={n_users}"
        )
    chips = rng.integers(0, 2, size=(n_users, n_chips)) * 2.0 - 1.0
    return chips / math.sqrt(n_chips)


@dataclass(frozen=True)
class ConvolutionMatrices:
    """Chip-shift structure of one signature over an Lp-tap channel.

    Each block is (N + Lp - 1, Lp) real: column m of main_block holds the
    signature delayed by m chips, which always fits the window whole, while
    prev_block and next_block hold the tail and head segments with which the
    adjacent symbols reach into this window. The per-antenna structure is
    block diagonal with the same block repeated n_antennas times; the
    *_full() methods materialize that.
    """

    prev_block: np.ndarray
    main_block: np.ndarray
    next_block: np.ndarray
    n_antennas: int

    @property
    def window(self) -> int:
        return self.main_block.shape[0]

    def _full(self, block: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(self.n_antennas), block)

    def prev_full(self) -> np.ndarray:
        return self._full(self.prev_block)

    def main_full(self) -> np.ndarray:
        return self._full(self.main_block)

    def next_full(self) -> np.ndarray:
        return self._full(self.next_block)


def build_convolution_matrices(signature, n_taps: int, n_antennas: int) -> ConvolutionMatrices:
    """Build the three per-window signature matrices for one user.

    The window spans N + n_taps - 1 chips starting at the symbol's first
    chip. A symbol delayed by m chips lands entirely inside its own window
    (main); its last m chips reappear at the head of the next window (prev,
    as seen from that window) and its first n_taps - 1 - m chips already
    appear at the tail of the previous window (next).
    """
    s = np.asarray(signature, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError(f"signature must be a non-empty vector, got shape {s.shape}")
    if n_taps < 1:
        raise ValueError(f"n_taps must be at least 1, got {n_taps}")
    if n_antennas < 1:
        raise ValueError(f"n_antennas must be at least 1, got {n_antennas}")
    n = s.size
    window = n + n_taps - 1
    prev = np.zeros((window, n_taps))
    main = np.zeros((window, n_taps))
    nxt = np.zeros((window, n_taps))
    for m in range(n_taps):
        main[m : m + n, m] = s
        j0, j1 = max(0, m - n), min(window, m)
        if j0 < j1:
            prev[j0:j1, m] = s[j0 + n - m : j1 + n - m]
        j0, j1 = n + m, min(window, 2 * n + m)
        if j0 < j1:
            nxt[j0:j1, m] = s[: j1 - j0]
    return ConvolutionMatrices(
        prev_block=prev, main_block=main, next_block=nxt, n_antennas=n_antennas
    )


@dataclass(frozen=True)
class ScenarioParams:
    """Physical and protocol constants of one Monte-Carlo scenario.

    snr_db fixes the desired user's input signal-to-noise ratio, so the
    noise variance of a trial is A_1^2 * 10^(-snr_db/10) with A_1 the
    desired user's drawn amplitude; snr_db = inf turns noise off.
    """

    n_chips: int
    n_users: int
    n_antennas: int
    n_taps: int
    snr_db: float
    n_symbols: int
    doppler: float = 0.001
    amp_spread_db: float = 1.5
    path_powers_db: tuple = (0.0, -3.0, -6.0)
    doa_range: tuple = (0.0, DOA_SECTOR_HIGH)
    n_oscillators: int = 16

    def __post_init__(self):
        for name in ("n_chips", "n_users", "n_antennas", "n_taps", "n_symbols"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be a real number or inf, got {self.snr_db}")
        if self.doppler < 0:
            raise ValueError(f"doppler must be non-negative, got {self.doppler}")
        if len(self.path_powers_db) < 1:
            raise ValueError("path_powers_db must name at least one path")
        if self.n_oscillators < 1:
            raise ValueError(f"n_oscillators must be at least 1, got {self.n_oscillators}")

    @property
    def window(self) -> int:
        return self.n_chips + self.n_taps - 1

    @property
    def stacked_dim(self) -> int:
        return self.n_antennas * self.window


@dataclass(frozen=True)
class ChannelProcess:
    """One user's multipath space-time channel as a function of symbol time.

    Path gains are sum-of-sinusoids Rayleigh processes with the classical
    isotropic-scattering Doppler profile, unit average power per path before
    the power-profile scaling. The array response is one phase per antenna
    per path for a half-wavelength uniform linear array.
    """

    delays: np.ndarray
    power_fracs: np.ndarray
    doas: np.ndarray
    array_phases: np.ndarray
    alphas: np.ndarray
    phase_i: np.ndarray
    phase_q: np.ndarray
    doppler: float
    n_taps: int
    n_antennas: int

    @property
    def n_paths(self) -> int:
        return self.delays.size

    def path_gains(self, times) -> np.ndarray:
        """Unit-power complex path gains, shape (n_paths, len(times))."""
        t = np.asarray(times, dtype=np.float64)
        w = 2.0 * math.pi * self.doppler
        scale = math.sqrt(1.0 / self.alphas.shape[1])
        arg_i = w * t * np.cos(self.alphas)[..., None] + self.phase_i[..., None]
        arg_q = w * t * np.sin(self.alphas)[..., None] + self.phase_q[..., None]
        return scale * (np.cos(arg_i).sum(axis=1) + 1j * np.cos(arg_q).sum(axis=1))

    def path_gains_at(self, i: int) -> np.ndarray:
        return self.path_gains([i])[:, 0]

    def taps(self, times) -> np.ndarray:
        """Space-time taps, shape (len(times), n_antennas, n_taps)."""
        g = self.path_gains(times) * np.sqrt(self.power_fracs)[:, None]
        out = np.zeros((len(np.atleast_1d(times)), self.n_antennas, self.n_taps), dtype=np.complex128)
        for m in range(self.n_paths):
            out[:, :, self.delays[m]] += g[m][:, None] * self.array_phases[m][None, :]
        return out

    def taps_at(self, i: int) -> np.ndarray:
        return self.taps([i])[0]


def draw_channel(params: ScenarioParams, rng) -> ChannelProcess:
    """Draw one user's channel: delays, powers, directions, oscillators.

    The first path sits at delay zero (receiver synchronized to it) and each
    further path lands one or two chips after the previous one; paths that
    would fall outside the n_taps window are dropped and the power profile
    is renormalized over the surviving paths so the average channel energy
    per antenna stays one.
    """
    profile = np.asarray(params.path_powers_db, dtype=np.float64)
    spacings = rng.integers(1, 3, size=profile.size - 1) if profile.size > 1 else np.array([], dtype=np.int64)
    delays_all = np.concatenate(([0], np.cumsum(spacings))).astype(np.int64)
    keep = delays_all < params.n_taps
    delays = delays_all[keep]
    powers = 10.0 ** (profile[keep] / 10.0)
    power_fracs = powers / powers.sum()
    n_paths = delays.size
    doas = rng.uniform(params.doa_range[0], params.doa_range[1], size=n_paths)
    antennas = np.arange(params.n_antennas)
    array_phases = np.exp(-1j * math.pi * antennas[None, :] * np.sin(doas)[:, None])
    n_osc = params.n_oscillators
    theta = rng.uniform(-math.pi, math.pi, size=n_paths)
    alphas = (2.0 * math.pi * np.arange(1, n_osc + 1)[None, :] - math.pi + theta[:, None]) / (
        4.0 * n_osc
    )
    phase_i = rng.uniform(-math.pi, math.pi, size=(n_paths, n_osc))
    phase_q = rng.uniform(-math.pi, math.pi, size=(n_paths, n_osc))
    return ChannelProcess(
        delays=delays,
        power_fracs=power_fracs,
        doas=doas,
        array_phases=array_phases,
        alphas=alphas,
        phase_i=phase_i,
        phase_q=phase_q,
        doppler=params.doppler,
        n_taps=params.n_taps,
        n_antennas=params.n_antennas,
    )


def gen_channel(params: ScenarioParams, rng, symbol_index: int) -> np.ndarray:
    """One independent channel realization evaluated at a symbol time."""
    return draw_channel(params, rng).taps_at(symbol_index)


@dataclass(frozen=True)
class Snapshot:
    """One received space-time vector with the true desired symbol."""

    r: np.ndarray
    d: float


@dataclass(frozen=True)
class TrialScenario:
    """Everything one Monte-Carlo trial consumes, fully precomputed.

    Symbol streams and channel evaluations cover times -1 .. n_symbols so
    every window sees its previous and next symbols; column j of `symbols`
    is symbol time j - 1. composite[k, 0/1/2, j] is user k's previous /
    current / next-term space-time vector with the channel evaluated at
    time j - 1.
    """

    params: ScenarioParams
    signatures: np.ndarray
    amplitudes: np.ndarray
    noise_var: float
    symbols: np.ndarray
    channels: list
    conv: list
    composite: np.ndarray
    r_all: np.ndarray
    desired: np.ndarray
    signal_vecs: np.ndarray
    intf_vecs: np.ndarray

    @property
    def n_symbols(self) -> int:
        return self.r_all.shape[0]


def build_scenario(params: ScenarioParams, rng) -> TrialScenario:
    """Synthesize one trial: users, channels, composites, snapshots.

    Per-run user amplitudes follow a log-normal power distribution around
    unity (amp_spread_db standard deviation in dB); user 0 is the desired
    user. With noise_var = 0 the noise draw is skipped entirely.
    """
    K, T = params.n_users, params.n_symbols
    span = T + 2
    jm = params.stacked_dim
    signatures = gen_signatures(params.n_chips, K, rng)
    symbols = rng.integers(0, 2, size=(K, span)) * 2.0 - 1.0
    amplitudes = 10.0 ** (rng.normal(0.0, params.amp_spread_db, size=K) / 20.0)
    conv = [
        build_convolution_matrices(signatures[k], params.n_taps, params.n_antennas)
        for k in range(K)
    ]
    channels = [draw_channel(params, rng) for _ in range(K)]

    blocks = np.stack(
        [[c.prev_block, c.main_block, c.next_block] for c in conv]
    )  # (K, 3, window, n_taps)
    times = np.arange(-1, T + 1)
    taps = np.stack([ch.taps(times) for ch in channels])  # (K, span, J, n_taps)
    composite = np.einsum("kxml,ktjl->kxtjm", blocks, taps, optimize=True).reshape(
        K, 3, span, jm
    )

    # Window i collects symbol i-1 through its prev term, symbol i through
    # its main term, symbol i+1 through its next term; the channel is
    # evaluated at each symbol's own time.
    r_all = (
        np.einsum("k,ki,kiv->iv", amplitudes, symbols[:, 0:T], composite[:, 0, 0:T])
        + np.einsum("k,ki,kiv->iv", amplitudes, symbols[:, 1 : T + 1], composite[:, 1, 1 : T + 1])
        + np.einsum("k,ki,kiv->iv", amplitudes, symbols[:, 2 : T + 2], composite[:, 2, 2 : T + 2])
    )
    noise_var = (
        0.0
        if params.snr_db == math.inf
        else float(amplitudes[0] ** 2) * 10.0 ** (-params.snr_db / 10.0)
    )
    if noise_var > 0:
        scale = math.sqrt(noise_var / 2.0)
        r_all = r_all + scale * (
            rng.standard_normal((T, jm)) + 1j * rng.standard_normal((T, jm))
        )
    r_all = np.ascontiguousarray(r_all, dtype=np.complex128)

    signal_vecs = amplitudes[0] * composite[0, 1, 1 : T + 1]
    parts = [amplitudes[k] * composite[k, 0, 0:T] for k in range(K)]
    parts += [amplitudes[k] * composite[k, 1, 1 : T + 1] for k in range(1, K)]
    parts += [amplitudes[k] * composite[k, 2, 2 : T + 2] for k in range(K)]
    intf_vecs = np.stack(parts, axis=1)  # (T, 3K - 1, jm)

    return TrialScenario(
        params=params,
        signatures=signatures,
        amplitudes=amplitudes,
        noise_var=noise_var,
        symbols=symbols,
        channels=channels,
        conv=conv,
        composite=composite,
        r_all=r_all,
        desired=symbols[0, 1 : T + 1].copy(),
        signal_vecs=signal_vecs,
        intf_vecs=intf_vecs,
    )


def received_vector(scenario: TrialScenario, i: int) -> Snapshot:
    """The stacked snapshot for window i with the true desired symbol."""
    if not 0 <= i < scenario.n_symbols:
        raise ValueError(f"symbol index {i} outside [0, {scenario.n_symbols})")
    return Snapshot(r=scenario.r_all[i].copy(), d=float(scenario.desired[i]))


def hard_decision(x) -> float:
    """Sign of the real part, with the tie at zero broken toward +1."""
    return 1.0 if complex(x).real >= 0.0 else -1.0


def output_sinr(scenario: TrialScenario, w, i: int) -> float:
    """Output signal-to-interference-plus-noise ratio of weights w at window i.

    Desired power over the sum of every other composite term's power plus
    the filtered noise power, using the scenario's true channels. Returns 0
    for all-zero weights.
    """
    wc = np.conjugate(w)
    sig = abs(wc @ scenario.signal_vecs[i]) ** 2
    intf = scenario.intf_vecs[i] @ wc
    den = float(np.abs(intf) @ np.abs(intf)) + scenario.noise_var * float(
        np.real(wc @ w)
    )
    if den == 0.0:
        return 0.0
    return float(sig / den)


@dataclass(frozen=True)
class TrialResult:
    """Per-symbol decision-error flags and the matching SINR trace."""

    errors: np.ndarray
    sinr: np.ndarray


def run_ber_trial(scenario: TrialScenario, receiver, train_len: int, total_len: int) -> TrialResult:
    """Drive one receiver through a scenario: train, then decision-direct.

    The receiver is any object exposing output(r), step(r, d) -> StepOutput
    and effective_weights(). For the first train_len symbols the true symbol
    drives the update; afterwards the receiver's own hard decision does. The
    error flag always compares the a-priori decision to the true symbol, and
    the SINR trace is evaluated on the weights in force when each symbol was
    decided.
    """
    if not 0 <= train_len < total_len:
        raise ValueError(
            f"need 0 <= train_len < total_len, got train_len={train_len}, total_len={total_len}"
        )
    if total_len > scenario.n_symbols:
        raise ValueError(
            f"total_len={total_len} exceeds the scenario's {scenario.n_symbols} symbols"
        )
    errors = np.zeros(total_len, dtype=bool)
    sinr = np.zeros(total_len, dtype=np.float64)
    r_all = scenario.r_all
    desired = scenario.desired
    for i in range(total_len):
        r = r_all[i]
        sinr[i] = output_sinr(scenario, receiver.effective_weights(), i)
        try:
            if i < train_len:
                y = receiver.step(r, desired[i]).y
            else:
                y = receiver.output(r)
                receiver.step(r, hard_decision(y))
        except (NumericalError, ValueError) as exc:
            raise TrialError(f"receiver step failed at symbol {i}: {exc}") from exc
        errors[i] = hard_decision(y) != desired[i]
    return TrialResult(errors=errors, sinr=sinr)
