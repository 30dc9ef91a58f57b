"""Orthogonality, spectra and pairwise-error analysis of parallel-coded CPM."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal, special

from .cpm import CpmParams, cumulative_phase
from .encoder import StcCodeSpec, correction_phase

__all__ = [
    "GramMatrix",
    "PsdEstimate",
    "SignalMatrix",
    "block_gram",
    "burst_samples",
    "welch_psd",
    "spectral_centroid",
    "bandwidth_at",
    "combined_psd",
    "signal_matrix",
    "factored_signal_matrix",
    "correction_correlation",
    "pwep",
    "qfunc",
    "coding_gain_metric",
    "default_error_events",
]


@dataclass(frozen=True)
class GramMatrix:
    """Block cross-energy matrix, entry (m, m') = integral of s_m conj(s_m')."""

    values: np.ndarray
    l: int = 0

    def max_offdiag(self) -> float:
        v = self.values
        return float(np.max(np.abs(v - np.diag(np.diag(v))))) if len(v) > 1 else 0.0

    def max_diag_error(self, Es: float) -> float:
        return float(np.max(np.abs(np.diag(self.values) - Es)))


@dataclass(frozen=True)
class PsdEstimate:
    freqs: np.ndarray
    power_dB: np.ndarray
    segment_len: int
    overlap: float
    window: str = "hann"

    @property
    def power(self) -> np.ndarray:
        return 10 ** (self.power_dB / 10)

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])


@dataclass(frozen=True)
class SignalMatrix:
    """Signal-difference matrix of a sequence pair, with sorted eigenvalues."""

    Cs: np.ndarray
    eigenvalues: np.ndarray
    d: np.ndarray = field(repr=False)
    d_hat: np.ndarray = field(repr=False)
    spec: StcCodeSpec = None
    params: CpmParams = None
    clamped: float = 0.0


def _integrate(f, dt, axis=-1):
    return np.trapezoid(f, dx=dt, axis=axis)


def block_gram(waveforms, l: int, T: float = 1.0) -> GramMatrix:
    """Gram matrix of code block ``l``.

    Trapezoidal rule on the waveform grid.  The closing sample of the block
    is the first sample of the next block; for the last block of a burst
    it is not available and the left Riemann sum is used instead (the two
    coincide for integrands that are periodic over the block).
    """
    Lt = len(waveforms)
    S = np.stack([np.asarray(w.samples) for w in waveforms])
    rate = waveforms[0].sample_rate
    dt = 1.0 / rate
    sps = int(round(rate * T))
    blk = Lt * sps
    lo, hi = l * blk, (l + 1) * blk
    if l < 0 or hi > S.shape[1]:
        raise ValueError(f"block {l} is not fully covered by the waveforms")
    if hi < S.shape[1]:
        seg = S[:, lo:hi + 1]
        G = _integrate(seg[:, None, :] * seg[None, :, :].conj(), dt)
    else:
        seg = S[:, lo:hi]
        G = (seg[:, None, :] * seg[None, :, :].conj()).sum(axis=-1) * dt
    return GramMatrix(G, l)


def burst_samples(spec: StcCodeSpec, params: CpmParams, data, endpoint: bool = True) -> np.ndarray:
    """Transmit samples of all antennas, shape (Lt, n*sps [+1]).

    With ``endpoint`` the sample at ``t = n*T`` is appended so that
    trapezoidal integrals cover the whole burst.
    """
    d = np.asarray(data, dtype=float)
    n = d.shape[-1]
    n_samp = n * params.sps + (1 if endpoint else 0)
    ph = cumulative_phase(params, d, n + 1)[..., :n_samp]
    t = np.arange(n_samp) * params.dt
    amp = np.sqrt(params.Es / (spec.Lt * params.T))
    corr = np.stack([spec.theta_init[m - 1] + correction_phase(spec, params, m, t)
                     for m in range(1, spec.Lt + 1)])
    return amp * np.exp(2j * np.pi * np.mod(ph[..., None, :] + corr, 1.0))


def welch_psd(waveform, segment_len: int, overlap: float = 0.5, window: str = "hann") -> PsdEstimate:
    """Averaged windowed periodograms, two-sided and centred, peak at 0 dB."""
    x = np.asarray(getattr(waveform, "samples", waveform))
    rate = getattr(waveform, "sample_rate", 1.0)
    if segment_len < 2 or not 0 <= overlap < 1:
        raise ValueError("segment_len must be >= 2 and 0 <= overlap < 1")
    if len(x) < 2 * segment_len:
        raise ValueError(f"need at least {2 * segment_len} samples, got {len(x)}")
    f, P = signal.welch(x, fs=rate, window=window, nperseg=segment_len,
                        noverlap=int(round(overlap * segment_len)), detrend=False,
                        return_onesided=False, scaling="density")
    f, P = np.fft.fftshift(f), np.fft.fftshift(P)
    return PsdEstimate(f, 10 * np.log10(P / P.max()), segment_len, overlap, window)


def combined_psd(estimates) -> PsdEstimate:
    """Total radiated spectrum: sum of per-antenna PSDs, renormalised to 0 dB."""
    P = sum(e.power for e in estimates)
    e0 = estimates[0]
    return replace(e0, power_dB=10 * np.log10(P / P.max()))


def spectral_centroid(psd: PsdEstimate) -> float:
    P = psd.power
    return float(np.sum(psd.freqs * P) / np.sum(P))


def bandwidth_at(psd: PsdEstimate, level_dB: float = -30.0) -> float:
    """Width between the outermost bins at or above ``level_dB``."""
    idx = np.flatnonzero(psd.power_dB >= level_dB)
    return float(psd.freqs[idx[-1]] - psd.freqs[idx[0]])


def _psd_project(C):
    C = (C + C.conj().T) / 2
    w, V = np.linalg.eigh(C)
    neg = -w[w < 0].sum()
    if np.any(w < -1e-9 * max(np.trace(C).real, 1.0)):
        raise ArithmeticError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3g})")
    w = np.clip(w, 0, None)
    return (V * w) @ V.conj().T, w[::-1], neg


def signal_matrix(spec: StcCodeSpec, params: CpmParams, d, d_hat) -> SignalMatrix:
    """Signal-difference matrix ``C_s`` of transmitting ``d`` but deciding ``d_hat``.

    Built from the normalised difference signals
    ``Delta_m = sqrt(Lt T / Es) (s_m - s_hat_m)`` integrated over the burst.
    """
    d = np.asarray(d)
    d_hat = np.asarray(d_hat)
    if d.shape != d_hat.shape:
        raise ValueError("sequence lengths differ")
    S = burst_samples(spec, params, d)
    Sh = burst_samples(spec, params, d_hat)
    Delta = np.sqrt(spec.Lt * params.T / params.Es) * (S - Sh)
    C = _integrate(Delta[:, None, :] * Delta[None, :, :].conj(), params.dt)
    C, w, neg = _psd_project(C)
    return SignalMatrix(C, w, d, d_hat, spec, params, neg)


def factored_signal_matrix(spec: StcCodeSpec, params: CpmParams, d, d_hat) -> np.ndarray:
    """``Theta (integral c c^H |delta|^2 dt) Theta^H`` with the scalar data difference."""
    n = len(d)
    n_samp = n * params.sps + 1
    x = np.exp(2j * np.pi * cumulative_phase(params, np.asarray(d, float), n + 1)[:n_samp])
    xh = np.exp(2j * np.pi * cumulative_phase(params, np.asarray(d_hat, float), n + 1)[:n_samp])
    w = np.abs(x - xh) ** 2
    K = correction_correlation(spec, params, n, weight=w)
    theta = np.exp(2j * np.pi * np.asarray(spec.theta_init))
    return theta[:, None] * K * theta.conj()[None, :]


def correction_correlation(spec: StcCodeSpec, params: CpmParams, Nc: int,
                           weight=None) -> np.ndarray:
    """Elementwise integral of ``c(t) c(t)^H`` over ``[0, Nc T]``.

    ``c_m(t) = exp(j2pi c_m(t))``.  ``weight`` is an optional callable of
    time or an array of samples on the ``sps`` grid (including the end point).
    """
    n_samp = Nc * params.sps + 1
    t = np.arange(n_samp) * params.dt
    c = np.exp(2j * np.pi * np.stack([correction_phase(spec, params, m, t)
                                      for m in range(1, spec.Lt + 1)]))
    if weight is None:
        wt = np.ones(n_samp)
    elif callable(weight):
        wt = np.asarray(weight(t), dtype=float)
    else:
        wt = np.asarray(weight, dtype=float)
    return _integrate(c[:, None, :] * c[None, :, :].conj() * wt, params.dt)


def qfunc(x):
    """Gaussian tail probability."""
    return 0.5 * special.erfc(np.asarray(x) / np.sqrt(2))


def pwep(Cs, A, N0: float) -> float:
    """Pairwise error probability given the channel.

    ``Q(sqrt(d2 / (2 N0)))`` with ``d2 = (Es/(Lt T)) * sum_n a_n^T C_s conj(a_n)``,
    the squared Euclidean distance of the two received hypotheses.  ``A`` is
    ``(Lr, Lt)``.  A bare matrix may be passed for ``Cs``; it is then taken
    to be already in energy units.
    """
    if N0 <= 0:
        raise ValueError("N0 must be positive")
    if isinstance(Cs, SignalMatrix):
        scale = Cs.params.Es / (Cs.spec.Lt * Cs.params.T)
        C = Cs.Cs
    else:
        scale, C = 1.0, np.asarray(Cs)
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    q = np.einsum("nm,mk,nk->", A, C, A.conj()).real
    return float(qfunc(np.sqrt(max(scale * q, 0.0) / (2 * N0))))


def default_error_events(params: CpmParams, spec: StcCodeSpec, rng=0, n_random: int = 200):
    """Short error events used to rank initial phases.

    Every single-symbol substitution of a seeded reference burst of
    ``2 Lt gamma`` symbols, plus ``n_random`` seeded two-symbol events.
    """
    rng = np.random.default_rng(rng)
    n = 2 * spec.Lt * params.gamma
    alph = params.alphabet
    d = rng.choice(alph, n)
    events = []
    for k in range(n):
        for a in alph:
            if a != d[k]:
                e = d.copy()
                e[k] = a
                events.append((d, e))
    for _ in range(n_random):
        dd = rng.choice(alph, n)
        e = dd.copy()
        for k in rng.choice(n, 2, replace=False):
            e[k] = rng.choice(alph[alph != dd[k]])
        events.append((dd, e))
    return events


def coding_gain_metric(spec: StcCodeSpec, params: CpmParams, events) -> float:
    """Worst-case product of the nonzero eigenvalues of ``C_s`` over ``events``."""
    events = list(events)
    if not events:
        raise ValueError("empty error-event set")
    best = np.inf
    for d, dh in events:
        w = signal_matrix(spec, params, d, dh).eigenvalues
        nz = w[w > 1e-9 * max(w.sum(), 1e-300)]
        best = min(best, float(np.prod(nz)) if nz.size else 0.0)
    return best
