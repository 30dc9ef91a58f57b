"""Conventional CPM primitives.

Phases are carried in cycles (1.0 == 2*pi rad).  Sampled waveforms use
``sps`` samples per symbol with sample ``k`` at time ``t0 + k*T/sps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "CpmParams",
    "Waveform",
    "PhaseState",
    "ConfigurationError",
    "InputError",
    "phase_pulse_q",
    "synthesize_cpm",
    "phase_state_set",
    "cumulative_phase",
]

PULSES = ("REC", "RC")


class ConfigurationError(ValueError):
    """Invalid modulation or code parameters."""


class InputError(ValueError):
    """Invalid data handed to an otherwise valid modulator or detector."""


@dataclass(frozen=True)
class CpmParams:
    """Parameters of a conventional CPM scheme.

    Parameters
    ----------
    M : int
        Alphabet size (even).
    h : Fraction
        Modulation index, stored reduced.  Any value accepted by
        :class:`fractions.Fraction` (``"1/2"``, ``0.5``, ``Fraction(1, 2)``).
    gamma : int
        Pulse memory in symbol periods (1 = full response).
    pulse : {"REC", "RC"}
    sps : int
        Samples per symbol.
    T, Es : float
        Symbol period and total symbol energy.
    """

    M: int = 4
    h: Fraction = Fraction(1, 2)
    gamma: int = 2
    pulse: str = "REC"
    sps: int = 12
    T: float = 1.0
    Es: float = 1.0

    def __post_init__(self):
        h = Fraction(self.h).limit_denominator(10**6) if isinstance(self.h, float) else Fraction(self.h)
        object.__setattr__(self, "h", h)
        pulse = str(self.pulse).upper()
        object.__setattr__(self, "pulse", pulse)
        if self.M < 2 or self.M % 2:
            raise ConfigurationError(f"M must be even and >= 2, got {self.M}")
        if self.gamma < 1:
            raise ConfigurationError(f"gamma must be >= 1, got {self.gamma}")
        if self.sps < 2:
            raise ConfigurationError(f"sps must be >= 2, got {self.sps}")
        if h <= 0:
            raise ConfigurationError(f"h must be positive, got {h}")
        if pulse not in PULSES:
            raise ConfigurationError(f"unknown pulse shape {self.pulse!r}")
        if self.T <= 0 or self.Es <= 0:
            raise ConfigurationError("T and Es must be positive")

    @property
    def alphabet(self) -> np.ndarray:
        """Symbol alphabet {-M+1, -M+3, ..., M-1}."""
        return np.arange(-self.M + 1, self.M, 2)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.M))

    @property
    def dt(self) -> float:
        return self.T / self.sps


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled complex baseband signal of one antenna."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0
    antenna_id: int = 1

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.sample_rate


@dataclass(frozen=True)
class PhaseState:
    """Trellis state: accumulated phase (cycles, mod 1) and the last gamma-1 symbols."""

    theta: Fraction
    history: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta) % 1)
        object.__setattr__(self, "history", tuple(self.history))


def phase_pulse_q(pulse, gamma, t, T=1.0):
    """Phase smoothing function q(t) in cycles.

    Rises from 0 at ``t <= 0`` to exactly 1/2 at ``t >= gamma*T``.  ``REC`` is
    a linear ramp; ``RC`` is the integrated raised cosine.  Accepts scalars or
    arrays.
    """
    if gamma < 1 or T <= 0:
        raise ConfigurationError("gamma must be >= 1 and T > 0")
    pulse = str(pulse).upper()
    L = gamma * T
    t = np.asarray(t, dtype=float)
    x = np.clip(t / L, 0.0, 1.0)
    if pulse == "REC":
        q = x / 2
    elif pulse == "RC":
        q = (x - np.sin(2 * np.pi * x) / (2 * np.pi)) / 2
        # sin(2*pi) is not exactly zero in floating point
        q = np.where(x >= 1.0, 0.5, np.where(x <= 0.0, 0.0, q))
    else:
        raise ConfigurationError(f"unknown pulse shape {pulse!r}")
    return q[()] if q.ndim == 0 else q


def cumulative_phase(params: CpmParams, data, n_symbols: Optional[int] = None) -> np.ndarray:
    """Data phase ``h * sum_i d_i q(t - (i-1)T)`` in cycles at every sample.

    ``data`` may be real-valued (offset alphabets) and may carry leading batch
    dimensions; the symbol axis is the last one.  Symbols before the first
    one are taken as zero.  Returns ``n_symbols * sps`` samples along the last
    axis (default ``n_symbols = data.shape[-1]``).
    """
    d = np.asarray(data, dtype=float)
    n = d.shape[-1] if n_symbols is None else n_symbols
    sps, g = params.sps, params.gamma
    if n > d.shape[-1]:
        d = np.concatenate([d, np.zeros(d.shape[:-1] + (n - d.shape[-1],))], axis=-1)
    d = d[..., :n]
    tau = np.arange(g * sps) * params.dt
    qk = phase_pulse_q(params.pulse, g, tau, params.T).reshape(g, sps)
    # settled[k] = sum of symbols whose pulse is complete at the start of slot k
    csum = np.concatenate([np.zeros(d.shape[:-1] + (1,)), np.cumsum(d, axis=-1)], axis=-1)
    idx = np.clip(np.arange(n) - g + 1, 0, None)
    phase = 0.5 * csum[..., idx][..., None] * np.ones(sps)
    for j in range(g):
        # symbol k-j is j slots into its pulse during slot k
        lag = min(j, n)
        dj = np.concatenate([np.zeros(d.shape[:-1] + (lag,)), d[..., :n - lag]], axis=-1)
        phase = phase + dj[..., None] * qk[j]
    return float(params.h) * phase.reshape(d.shape[:-1] + (n * sps,))


def synthesize_cpm(params: CpmParams, data, theta0=0.0,
                   extra_phase: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                   amplitude_scale: float = 1.0, alphabet: Optional[Sequence[float]] = None,
                   antenna_id: int = 1) -> Waveform:
    """Sampled CPM waveform ``a * exp(j2pi[theta0 + data phase + extra_phase(t)])``.

    Parameters
    ----------
    params : CpmParams
    data : sequence
        Symbols, checked against ``alphabet`` (default: the conventional
        alphabet of ``params``).
    theta0 : float
        Initial phase in cycles.
    extra_phase : callable, optional
        Additional phase in cycles as a function of the sample times.
    amplitude_scale : float
        Constant envelope of the result.
    """
    d = np.asarray(data, dtype=float)
    ref = params.alphabet if alphabet is None else np.asarray(alphabet, dtype=float)
    if d.size and not np.all(np.isclose(d[:, None], ref[None, :], atol=1e-9).any(axis=1)):
        raise InputError("data contains symbols outside the alphabet")
    n = max(len(d), 1)
    t = np.arange(n * params.sps) * params.dt
    phase = cumulative_phase(params, d, n) if len(d) else np.zeros(len(t))
    phase = phase + (float(theta0) % 1.0)
    if extra_phase is not None:
        phase = phase + np.asarray(extra_phase(t), dtype=float)
    samples = amplitude_scale * np.exp(2j * np.pi * phase)
    return Waveform(samples, params.sps / params.T, 0.0, antenna_id)


def phase_state_set(params: CpmParams) -> list:
    """All accumulated phases reachable from 0 by increments (h/2)*d, mod 1.

    Exact rational arithmetic; returned sorted.
    """
    incs = {(params.h / 2 * int(d)) % 1 for d in params.alphabet}
    seen = {Fraction(0)}
    frontier = [Fraction(0)]
    while frontier:
        nxt = []
        for p in frontier:
            for inc in incs:
                s = (p + inc) % 1
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
    return sorted(seen)
