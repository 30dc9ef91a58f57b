"""Coherent MLSD of parallel-coded CPM with perfect channel knowledge.

With parallel mapping every antenna carries the same data phase, so the
noiseless received signal factors as ``x(t) * g_n(t)`` where ``x`` is the
conventional CPM signal of the data and
``g_n(t) = amp * sum_m a_{n,m} exp(j2pi[theta_m + c_m(t)])`` is known to the
receiver.  The squared-distance metric then reduces to a correlation of
``x`` against ``z(t) = sum_n conj(g_n(t)) r_n(t)`` plus branch-independent
terms, and a single CPM phase/data trellis is searched.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cpm import CpmParams, InputError, cumulative_phase, phase_pulse_q, phase_state_set
from .encoder import StcCodeSpec, correction_phase, correction_waveforms

__all__ = ["Trellis", "DetectionResult", "build_trellis", "mlsd_detect", "detect_batch",
           "gray_map", "symbols_to_indices", "combine_received", "path_distance"]


@dataclass(frozen=True)
class Trellis:
    """CPM trellis shared by all antennas.

    ``states[s] = (phase, history)`` with ``phase`` an exact fraction of a
    cycle and ``history`` the last gamma-1 symbol indices, oldest first.
    ``next_state[s, u]`` is the successor for input index ``u`` and
    ``data_segments[s, u]`` the unit-modulus data part of that branch over
    one symbol period.  ``pred[s', j]`` / ``pred_input[s', j]`` list the
    ``M`` incoming branches of ``s'``.
    """

    params: CpmParams
    spec: StcCodeSpec
    states: tuple
    next_state: np.ndarray
    data_segments: np.ndarray
    pred: np.ndarray
    pred_input: np.ndarray
    start_segments: np.ndarray
    start_states: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.states)

    def branch_segments(self, r: int) -> np.ndarray:
        """Per-antenna branch waveforms for slot position ``r`` (1-based) of a block.

        Shape ``(n_states, M, Lt, sps)``, evaluated in steady state (past the
        start-up transient of the correction).
        """
        p, s = self.params, self.spec
        k = (r - 1) + s.Lt * (p.gamma + 1)
        tau = np.arange(p.sps) * p.dt
        amp = np.sqrt(p.Es / (s.Lt * p.T))
        corr = np.stack([
            np.exp(2j * np.pi * (s.theta_init[m - 1] + correction_phase(s, p, m, k * p.T + tau)))
            for m in range(1, s.Lt + 1)])
        return amp * self.data_segments[:, :, None, :] * corr[None, None]


@dataclass
class DetectionResult:
    symbols: np.ndarray
    bits: np.ndarray
    path_metric: float


def gray_map(values, M: int, direction: str = "to_bits") -> np.ndarray:
    """Reflected-binary Gray mapping over the ordered alphabet -M+1, ..., M-1.

    ``direction="to_bits"`` maps symbols to a flat bit array (MSB first);
    ``"to_symbols"`` maps bits back to symbols.
    """
    if M < 2 or M & (M - 1):
        raise ValueError(f"M must be a power of 2, got {M}")
    k = M.bit_length() - 1
    if direction == "to_bits":
        idx = symbols_to_indices(values, M)
        g = idx ^ (idx >> 1)
        bits = (g[..., None] >> np.arange(k - 1, -1, -1)) & 1
        return bits.reshape(idx.shape[:-1] + (-1,)).astype(np.int8) if idx.ndim else bits.astype(np.int8)
    if direction == "to_symbols":
        b = np.asarray(values, dtype=np.int64)
        b = b.reshape(b.shape[:-1] + (-1, k))
        g = (b << np.arange(k - 1, -1, -1)).sum(axis=-1)
        idx = g.copy()
        shift = g >> 1
        while np.any(shift):
            idx ^= shift
            shift >>= 1
        return 2 * idx - M + 1
    raise ValueError(f"unknown direction {direction!r}")


def symbols_to_indices(symbols, M: int) -> np.ndarray:
    s = np.asarray(symbols)
    return ((s + M - 1) // 2).astype(np.int64)


def build_trellis(params: CpmParams, spec: StcCodeSpec) -> Trellis:
    """Phase/data trellis with exact rational phase states."""
    M, g, sps = params.M, params.gamma, params.sps
    alph = [int(a) for a in params.alphabet]
    phases = phase_state_set(params)
    hists = list(itertools.product(range(M), repeat=g - 1))
    states = tuple((ph, hist) for ph in phases for hist in hists)
    index = {st: i for i, st in enumerate(states)}
    S = len(states)

    tau = np.arange(sps) * params.dt
    q = np.stack([phase_pulse_q(params.pulse, g, tau + j * params.T, params.T) for j in range(g)])
    h = params.h
    nxt = np.empty((S, M), dtype=np.int64)
    seg = np.empty((S, M, sps), dtype=complex)
    for s, (ph, hist) in enumerate(states):
        for u in range(M):
            # active symbols, newest first: input, then history newest to oldest
            active = (u,) + hist[::-1]
            phase = float(ph) + float(h) * sum(alph[a] * q[j] for j, a in enumerate(active))
            seg[s, u] = np.exp(2j * np.pi * np.mod(phase, 1.0))
            if g == 1:
                nph, nh = (ph + h / 2 * alph[u]) % 1, ()
            else:
                nph, nh = (ph + h / 2 * alph[hist[0]]) % 1, hist[1:] + (u,)
            nxt[s, u] = index[(nph, nh)]

    pred_s = np.empty((S, M), dtype=np.int64)
    pred_u = np.empty((S, M), dtype=np.int64)
    incoming = [[] for _ in range(S)]
    for s in range(S):
        for u in range(M):
            incoming[nxt[s, u]].append((s, u))
    if any(len(lst) != M for lst in incoming):
        raise RuntimeError("trellis is not regular")
    for s2, lst in enumerate(incoming):
        # ties favour the smaller symbol on the newest branch
        lst.sort(key=lambda su: (su[1], su[0]))
        pred_s[s2] = [a for a, _ in lst]
        pred_u[s2] = [b for _, b in lst]

    # start-up: the first gamma-1 symbols, enumerated explicitly
    if g > 1:
        prefixes = np.array(hists, dtype=np.int64)
        psyms = np.asarray(alph)[prefixes]
        sp = cumulative_phase(params, psyms)
        start_segments = np.exp(2j * np.pi * np.mod(sp, 1.0)).reshape(len(hists), g - 1, sps)
        start_states = np.array([index[(Fraction(0), tuple(p))] for p in hists], dtype=np.int64)
    else:
        start_segments = np.zeros((1, 0, sps), dtype=complex)
        start_states = np.array([index[(Fraction(0), ())]], dtype=np.int64)

    return Trellis(params, spec, states, nxt, seg, pred_s, pred_u, start_segments, start_states)


def combine_received(R, A, params: CpmParams, spec: StcCodeSpec):
    """Matched combining of receive antennas.

    Parameters
    ----------
    R : array, shape (..., Lr, n*sps)
    A : array, shape (..., n_blocks, Lr, Lt)

    Returns
    -------
    z : array (..., n*sps)
        ``sum_n conj(g_n) r_n``.
    energy : array (..., n*sps)
        ``sum_n |g_n|^2``.
    """
    R = np.asarray(R, dtype=complex)
    A = np.asarray(A, dtype=complex)
    n_samp = R.shape[-1]
    sps, Lt = params.sps, spec.Lt
    n = n_samp // sps
    nb = n // Lt
    amp = np.sqrt(params.Es / (Lt * params.T))
    C = correction_waveforms(spec, params, n).reshape(Lt, nb, Lt * sps)
    G = amp * np.einsum("...bnm,mbk->...nbk", A, C)
    G = G.reshape(G.shape[:-2] + (n_samp,))
    z = np.einsum("...nk,...nk->...k", G.conj(), R)
    energy = np.einsum("...nk,...nk->...k", G.conj(), G).real
    return z, energy


def _viterbi(z, trellis: Trellis):
    """Batched Viterbi on combined signals ``z`` of shape (B, n*sps).

    Returns symbol indices (B, n) and the maximal correlation (B,).
    """
    p = trellis.params
    M, g, sps = p.M, p.gamma, p.sps
    B, n_samp = z.shape
    n = n_samp // sps
    if n < g:
        raise InputError(f"burst of {n} symbols is shorter than the pulse memory {g}")
    zs = z.reshape(B, n, sps)
    S = trellis.n_states
    segs = trellis.data_segments.reshape(S * M, sps).conj()

    # start-up prefixes (correlation of the first gamma-1 slots)
    start = np.einsum("pks,bks->bp", trellis.start_segments.conj(), zs[:, :g - 1]).real
    metric = np.full((B, S), -np.inf)
    metric[:, trellis.start_states] = start

    surv = np.empty((n - g + 1, B, S), dtype=np.int8 if M <= 127 else np.int16)
    pred_s, pred_u = trellis.pred, trellis.pred_input
    chunk = 64
    for k0 in range(g - 1, n, chunk):
        k1 = min(n, k0 + chunk)
        bm_chunk = np.einsum("xs,bks->bkx", segs, zs[:, k0:k1]).real.reshape(B, k1 - k0, S, M)
        for k in range(k0, k1):
            bm = bm_chunk[:, k - k0]
            cand = metric[:, pred_s] + bm[:, pred_s, pred_u]  # (B, S, M)
            j = np.argmax(cand, axis=2)
            metric = np.take_along_axis(cand, j[..., None], axis=2)[..., 0]
            surv[k - g + 1] = j
    best = np.argmax(metric, axis=1)
    final = metric[np.arange(B), best]

    out = np.empty((B, n), dtype=np.int64)
    s = best
    for k in range(n - 1, g - 2, -1):
        j = surv[k - g + 1][np.arange(B), s]
        out[:, k] = pred_u[s, j]
        s = pred_s[s, j]
    if g > 1:
        # s is now a start state; its history is the prefix
        hist = np.array([trellis.states[int(x)][1] for x in s], dtype=np.int64).reshape(B, g - 1)
        out[:, :g - 1] = hist
    return out, final


def detect_batch(R, A, trellis: Trellis):
    """Detect a batch of bursts.

    ``R``: (B, Lr, n*sps) received samples; ``A``: (B, n_blocks, Lr, Lt).
    Returns (symbols (B, n), path metrics (B,)).
    """
    p, spec = trellis.params, trellis.spec
    R = np.asarray(R, dtype=complex)
    z, energy = combine_received(R, A, p, spec)
    idx, corr = _viterbi(z, trellis)
    dt = p.dt
    metric = (np.sum(np.abs(R) ** 2, axis=(-2, -1)) + energy.sum(axis=-1) - 2 * corr) * dt
    return np.asarray(p.alphabet)[idx], metric


def path_distance(R, A, symbols, params: CpmParams, spec: StcCodeSpec) -> float:
    """Direct squared distance ``sum |r_n - sum_m a_nm s_m|^2 dt`` for one hypothesis."""
    from .encoder import encode_continuous
    from .channel import transmit
    waves = encode_continuous(spec, params, symbols)
    Y = np.stack([w.samples for w in transmit(waves, A, 0.0, None, params)])
    return float(np.sum(np.abs(np.asarray(R) - Y) ** 2) * params.dt)


def mlsd_detect(received, A, trellis: Trellis, params: CpmParams = None, spec: StcCodeSpec = None):
    """Maximum-likelihood sequence detection of one burst.

    Parameters
    ----------
    received : list of Waveform or array (Lr, n*sps)
    A : array
        ``(Lr, Lt)`` or per-block ``(n_blocks, Lr, Lt)`` channel matrices.
    trellis : Trellis
    """
    params = trellis.params if params is None else params
    spec = trellis.spec if spec is None else spec
    R = np.stack([np.asarray(getattr(w, "samples", w)) for w in received])
    n_samp = R.shape[-1]
    if n_samp % (params.sps * spec.Lt):
        raise InputError("received length is not a whole number of code blocks")
    nb = n_samp // (params.sps * spec.Lt)
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim == 2:
        A = np.broadcast_to(A, (nb,) + A.shape)
    if A.shape[0] != nb or A.shape[1] != R.shape[0] or A.shape[2] != spec.Lt:
        raise InputError(f"channel shape {A.shape} does not match the received signal")
    syms, metric = detect_batch(R[None], A[None], trellis)
    syms = syms[0]
    bits = gray_map(syms, params.M) if params.M & (params.M - 1) == 0 else np.zeros(0, np.int8)
    return DetectionResult(syms, bits, float(metric[0]))
