"""Parallel-mapped space-time coded CPM transmitter.

Every antenna modulates the same data sequence; antennas differ only in
their initial phase and a deterministic correction phase.  Two correction
families are supported:

``linPC``
    linear ramp, ``c_m(t) = (m-1) t / (Lt T)``
``offPC``
    pulse-shaped ramp ``c_m(t) = (m-1)/Lt * sum_i 2 q(t - (i-1)T)``, which is
    the same as modulating antenna ``m`` with the alphabet shifted by
    ``2(m-1)/(Lt h)``.

The continuous-time path (:func:`encode_continuous`) is the reference signal
definition.  :func:`encode_blockwise` builds the same signal slot by slot
from the code-block matrix, carrying per-slot phase memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cpm import (CpmParams, ConfigurationError, InputError, Waveform,
                  cumulative_phase, phase_pulse_q, synthesize_cpm)

__all__ = [
    "StcCodeSpec",
    "CodeBlock",
    "OffsetAlphabet",
    "CORRECTIONS",
    "map_symbol",
    "offset_alphabet",
    "correction_phase",
    "correction_waveforms",
    "encode_continuous",
    "encode_blockwise",
    "encode_batch",
    "NeedsInitializationError",
]

CORRECTIONS = ("none", "linPC", "offPC")


class NeedsInitializationError(IndexError):
    """A symbol before the start of the data stream was requested."""


@dataclass(frozen=True)
class StcCodeSpec:
    """Space-time code configuration.

    ``theta_init`` holds the initial phase of every antenna in cycles.
    ``correction="none"`` with more than one antenna is not an orthogonal
    code; it is only accepted with ``allow_nonorthogonal=True``.
    """

    Lt: int = 2
    correction: str = "linPC"
    theta_init: tuple = None
    allow_nonorthogonal: bool = field(default=False, compare=False)

    def __post_init__(self):
        corr = {c.lower(): c for c in CORRECTIONS}.get(str(self.correction).lower())
        if corr is None:
            raise ConfigurationError(f"unknown correction {self.correction!r}")
        object.__setattr__(self, "correction", corr)
        if self.Lt < 1:
            raise ConfigurationError("Lt must be >= 1")
        theta = (0.0,) * self.Lt if self.theta_init is None else tuple(float(x) % 1.0 for x in self.theta_init)
        if len(theta) != self.Lt:
            raise ConfigurationError(f"theta_init needs {self.Lt} entries, got {len(theta)}")
        object.__setattr__(self, "theta_init", theta)
        if corr == "none" and self.Lt > 1 and not self.allow_nonorthogonal:
            raise ConfigurationError("correction='none' is only orthogonal for Lt=1")

    def with_phases(self, theta_init) -> "StcCodeSpec":
        return StcCodeSpec(self.Lt, self.correction, tuple(theta_init), self.allow_nonorthogonal)


@dataclass(frozen=True)
class OffsetAlphabet:
    """Alphabet of antenna ``m`` in the offset representation of offPC."""

    m: int
    values: tuple


@dataclass(frozen=True)
class CodeBlock:
    """One Lt x Lt code block.

    ``symbols[m-1, r-1, i-1]`` is the data symbol weighting pulse ``i`` in
    slot ``r`` of antenna ``m`` (zero before the stream starts) and
    ``theta[m-1, r-1]`` the phase memory at the start of that slot, in cycles.
    """

    l: int
    symbols: np.ndarray
    theta: np.ndarray

    def interval(self, r: int, T: float = 1.0):
        """Time span covered by slot ``r`` (1-based)."""
        Lt = self.symbols.shape[0]
        return ((Lt * self.l + r - 1) * T, (Lt * self.l + r) * T)


def map_symbol(data, Lt: int, l: int, r: int, i: int):
    """Parallel mapping: symbol of pulse ``i`` in slot ``r`` of block ``l``.

    Returns ``d_{Lt*l + r - i + 1}`` (1-based), the same for every antenna.
    """
    if not 1 <= r <= Lt:
        raise ValueError(f"slot r={r} outside 1..{Lt}")
    if i < 1:
        raise ValueError("pulse index i starts at 1")
    j = Lt * l + r - i + 1
    if j < 1:
        raise NeedsInitializationError(f"symbol index {j} precedes the data stream")
    return data[j - 1]


def offset_alphabet(params: CpmParams, Lt: int, m: int) -> OffsetAlphabet:
    """Alphabet of antenna ``m``, shifted by ``2(m-1)/(Lt h)``."""
    off = Fraction(2 * (m - 1), Lt) / params.h
    vals = tuple(Fraction(int(d)) + off for d in params.alphabet)
    return OffsetAlphabet(m, vals)


def _pulse_train(params: CpmParams, t):
    """sum_{i>=1} 2 q(t - (i-1)T), zero for t <= 0."""
    t = np.asarray(t, dtype=float)
    T, g = params.T, params.gamma
    k = np.floor(t / T)
    out = np.where(t > 0, np.maximum(k - g + 1, 0), 0.0)
    for j in range(g):
        start = k - j
        out = out + np.where(start >= 0, 2 * phase_pulse_q(params.pulse, g, t - start * T, T), 0.0)
    return out


def correction_phase(spec: StcCodeSpec, params: CpmParams, m: int, t):
    """Correction phase of antenna ``m`` (1-based) at time(s) ``t``, in cycles."""
    if not 1 <= m <= spec.Lt:
        raise ValueError(f"antenna m={m} outside 1..{spec.Lt}")
    t = np.asarray(t, dtype=float)
    if m == 1 or spec.correction == "none":
        out = np.zeros_like(t)
    elif spec.correction == "linPC":
        out = (m - 1) * t / (spec.Lt * params.T)
    else:
        out = (m - 1) / spec.Lt * _pulse_train(params, t)
    return out[()] if out.ndim == 0 else out


def correction_waveforms(spec: StcCodeSpec, params: CpmParams, n_symbols: int) -> np.ndarray:
    """``exp(j2pi[theta_m + c_m(t)])`` sampled over a burst, shape (Lt, n*sps)."""
    t = np.arange(n_symbols * params.sps) * params.dt
    out = np.empty((spec.Lt, t.size), dtype=complex)
    for m in range(1, spec.Lt + 1):
        ph = spec.theta_init[m - 1] + correction_phase(spec, params, m, t)
        out[m - 1] = np.exp(2j * np.pi * np.mod(ph, 1.0))
    return out


def _check_data(spec, params, data):
    d = np.asarray(data)
    if len(d) % spec.Lt:
        raise InputError(f"burst length {len(d)} is not a multiple of Lt={spec.Lt}")
    if not np.isin(d, params.alphabet).all():
        raise InputError("data contains symbols outside the alphabet")
    return d


def _amplitude(spec, params):
    return np.sqrt(params.Es / (spec.Lt * params.T))


def encode_continuous(spec: StcCodeSpec, params: CpmParams, data, representation: str = "correction"):
    """Transmit waveforms of all antennas from the continuous-time model.

    ``representation="offset"`` synthesises offPC antennas from their offset
    alphabets with no explicit correction; the default applies the
    correction phase to conventional CPM.  Both give the same signal.
    """
    d = _check_data(spec, params, data)
    amp = _amplitude(spec, params)
    waves = []
    for m in range(1, spec.Lt + 1):
        theta = spec.theta_init[m - 1]
        if representation == "offset" and spec.correction == "offPC":
            alph = offset_alphabet(params, spec.Lt, m)
            off = float(alph.values[0]) - float(params.alphabet[0])
            w = synthesize_cpm(params, d + off, theta, None, amp,
                               alphabet=[float(v) for v in alph.values], antenna_id=m)
        elif representation in ("correction", "offset"):
            w = synthesize_cpm(params, d, theta,
                               lambda t, m=m: correction_phase(spec, params, m, t), amp, antenna_id=m)
        else:
            raise ValueError(f"unknown representation {representation!r}")
        waves.append(w)
    return waves


def _slot_correction(spec, params, m, k, tau, qtab=None):
    """Slot-local correction of antenna m in global slot k (1-based).

    ``qtab[i-1]`` may hold precomputed ``q(tau + (i-1)T)``.
    """
    if m == 1 or spec.correction == "none":
        return np.zeros_like(tau)
    if spec.correction == "linPC":
        # ramp relative to the end of the slot; offsets live in the phase memory
        return (m - 1) / spec.Lt * (tau - params.T) / params.T
    acc = np.zeros_like(tau)
    for i in range(1, params.gamma + 1):
        if k - i + 1 >= 1:
            qi = qtab[i - 1] if qtab is not None else \
                phase_pulse_q(params.pulse, params.gamma, tau + (i - 1) * params.T, params.T)
            acc = acc + 2 * qi
    return (m - 1) / spec.Lt * acc


def encode_blockwise(spec: StcCodeSpec, params: CpmParams, data):
    """Slot-by-slot synthesis from the code-block matrix.

    Each slot evaluates its own gamma active pulses and correction; the
    phase memory of the next slot is fixed by continuity at the slot
    boundary.  Returns ``(blocks, waveforms)``.
    """
    d = _check_data(spec, params, data).astype(float)
    Lt, g, sps, T = spec.Lt, params.gamma, params.sps, params.T
    h = float(params.h)
    amp = _amplitude(spec, params)
    n = len(d)
    tau = np.arange(sps) * params.dt
    grids = {"body": tau, "end": np.array([T]), "start": np.zeros(1)}
    # q over each slot grid for the gamma active pulses, shape (g, len)
    qtab = {key: np.stack([phase_pulse_q(params.pulse, g, x + i * T, T) for i in range(g)])
            for key, x in grids.items()}

    def slot_phase(m, k, theta, key):
        syms = [d[k - i] if 0 <= k - i < n else 0.0 for i in range(1, g + 1)]
        ph = theta + _slot_correction(spec, params, m, k, grids[key], qtab[key])
        return ph + h * (np.asarray(syms) @ qtab[key]), syms

    phases = np.empty((Lt, n * sps))
    blocks = []
    theta = np.array(spec.theta_init, dtype=float)
    # linPC phase memory starts one slot-ramp below theta so that c_m(0) = 0
    if spec.correction == "linPC":
        theta = theta + np.arange(Lt) / Lt
    for l in range(n // Lt):
        syms_blk = np.zeros((Lt, Lt, g))
        theta_blk = np.zeros((Lt, Lt))
        for r in range(1, Lt + 1):
            k = Lt * l + r
            for m in range(1, Lt + 1):
                ph, syms = slot_phase(m, k, theta[m - 1], "body")
                phases[m - 1, (k - 1) * sps:k * sps] = ph
                syms_blk[m - 1, r - 1] = syms
                theta_blk[m - 1, r - 1] = theta[m - 1] % 1.0
                end, _ = slot_phase(m, k, theta[m - 1], "end")
                nxt, _ = slot_phase(m, k + 1, 0.0, "start")
                theta[m - 1] = (end[0] - nxt[0]) % 1.0
        blocks.append(CodeBlock(l, syms_blk, theta_blk))
    waves = [Waveform(amp * np.exp(2j * np.pi * np.mod(phases[m], 1.0)), sps / T, 0.0, m + 1)
             for m in range(Lt)]
    return blocks, waves


def encode_batch(spec: StcCodeSpec, params: CpmParams, data) -> np.ndarray:
    """Vectorised :func:`encode_continuous` for a batch of bursts.

    ``data`` has shape (B, n); returns complex samples of shape (B, Lt, n*sps).
    """
    d = np.asarray(data)
    if d.ndim != 2:
        raise InputError("data must be a 2-D batch of bursts")
    if d.shape[1] % spec.Lt:
        raise InputError(f"burst length {d.shape[1]} is not a multiple of Lt={spec.Lt}")
    ph = np.mod(cumulative_phase(params, d.astype(float)), 1.0)
    corr = correction_waveforms(spec, params, d.shape[1])
    return _amplitude(spec, params) * np.exp(2j * np.pi * ph)[:, None, :] * corr[None]
