"""Quasi-static Rayleigh block fading with complex AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpm import CpmParams, InputError, Waveform

__all__ = ["ChannelRealization", "sample_fading", "block_fading", "transmit", "transmit_batch", "snr_to_n0",
           "noise_variance"]


@dataclass(frozen=True)
class ChannelRealization:
    """Fading matrices of a burst plus the noise level.

    ``A`` has shape ``(n_intervals, Lr, Lt)``; interval ``k`` covers
    ``block_len`` consecutive code blocks.
    """

    A: np.ndarray
    block_len: int
    N0: float


def sample_fading(Lt: int, Lr: int, rng, size=None) -> np.ndarray:
    """i.i.d. CN(0, 1) matrix of shape ``(*size, Lr, Lt)``."""
    if Lt < 1 or Lr < 1:
        raise ValueError("Lt and Lr must be >= 1")
    rng = np.random.default_rng(rng)
    shape = (() if size is None else tuple(np.atleast_1d(size))) + (Lr, Lt)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def block_fading(n_blocks: int, Lt: int, Lr: int, rng, block_len: int = 1) -> np.ndarray:
    """Per-code-block fading, shape ``(n_blocks, Lr, Lt)``, redrawn every ``block_len`` blocks."""
    n_int = -(-n_blocks // block_len)
    A = sample_fading(Lt, Lr, rng, n_int)
    return np.repeat(A, block_len, axis=0)[:n_blocks]


def noise_variance(N0: float, params: CpmParams) -> float:
    """Per complex sample noise variance ``N0 * sps / T``."""
    return N0 * params.sps / params.T


def _expand_fading(A, n_blocks):
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim == 2:
        A = np.broadcast_to(A, (n_blocks,) + A.shape)
    if A.shape[0] != n_blocks:
        raise InputError(f"fading has {A.shape[0]} blocks, burst has {n_blocks}")
    return A


def transmit(waveforms, A, N0: float, rng, params: CpmParams):
    """Pass transmit waveforms through block fading and AWGN.

    Parameters
    ----------
    waveforms : list of Waveform
        One per transmit antenna, equal lengths.
    A : array
        ``(Lr, Lt)`` for a burst-constant channel or ``(n_blocks, Lr, Lt)``
        with one matrix per code block of ``Lt*T`` seconds.
    N0 : float
        Noise spectral density; each complex sample gets variance
        ``N0*sps/T``.

    Returns
    -------
    list of Waveform, one per receive antenna.
    """
    lens = {len(w) for w in waveforms}
    if len(lens) != 1:
        raise InputError("transmit waveforms differ in length")
    Lt = len(waveforms)
    n = lens.pop()
    blk = Lt * params.sps
    if n % blk:
        raise InputError("waveform length is not a whole number of code blocks")
    S = np.stack([w.samples for w in waveforms])  # (Lt, n)
    A = _expand_fading(A, n // blk)
    if A.shape[2] != Lt:
        raise InputError(f"fading has {A.shape[2]} transmit columns, got {Lt} waveforms")
    Sb = S.reshape(Lt, n // blk, blk)
    R = np.einsum("bnm,mbk->nbk", A, Sb).reshape(A.shape[1], n)
    if N0 > 0:
        rng = np.random.default_rng(rng)
        sigma = np.sqrt(noise_variance(N0, params) / 2)
        R = R + sigma * (rng.standard_normal(R.shape) + 1j * rng.standard_normal(R.shape))
    rate = waveforms[0].sample_rate
    return [Waveform(R[i], rate, waveforms[0].t0, i + 1) for i in range(R.shape[0])]


def snr_to_n0(EbN0_dB: float, params: CpmParams) -> float:
    """Noise density for a given Eb/N0, with ``Eb = Es / log2(M)``."""
    Eb = params.Es / np.log2(params.M)
    return float(Eb * 10 ** (-EbN0_dB / 10))


def transmit_batch(X, A, N0: float, rng, params: CpmParams) -> np.ndarray:
    """Array form of :func:`transmit` for a batch of bursts.

    ``X``: (B, Lt, n*sps) transmit samples; ``A``: (B, n_blocks, Lr, Lt).
    Returns (B, Lr, n*sps).
    """
    X = np.asarray(X)
    B, Lt, n = X.shape
    nb = A.shape[1]
    if n % nb or A.shape[-1] != Lt:
        raise InputError("fading blocks do not match the transmit samples")
    R = np.einsum("zbnm,zmbk->znbk", A, X.reshape(B, Lt, nb, n // nb)).reshape(B, A.shape[2], n)
    if N0 > 0:
        sigma = np.sqrt(noise_variance(N0, params) / 2)
        R = R + sigma * (rng.standard_normal(R.shape) + 1j * rng.standard_normal(R.shape))
    return R
