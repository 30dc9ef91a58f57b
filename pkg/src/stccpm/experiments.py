"""Monte Carlo experiments: BER curves, initial-phase sweeps, spectra, orthogonality.

Every random draw comes from a stream derived from ``(seed, point, batch)``
so results do not depend on thread count or scheduling, and phase sweeps
reuse the same data, fading and noise at every grid point.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .analysis import (bandwidth_at, block_gram, combined_psd, spectral_centroid, welch_psd)
from .channel import sample_fading, snr_to_n0, transmit_batch
from .cpm import CpmParams, ConfigurationError, synthesize_cpm
from .encoder import StcCodeSpec, encode_batch, encode_continuous
from .receiver import build_trellis, detect_batch, gray_map

__all__ = [
    "ExperimentConfig",
    "BerRecord",
    "SweepRecord",
    "EXPERIMENTS",
    "PRESETS",
    "PRESET_GROUPS",
    "preset",
    "load_config",
    "wilson_interval",
    "simulate_ber_point",
    "run_ber_sweep",
    "run_phase_sweep_1d",
    "run_phase_sweep_2d",
    "run_psd_report",
    "run_ortho_check",
    "run_experiment",
    "find_minima_1d",
    "find_minima_2d",
    "snr_at_ber",
    "decay_db_per_decade",
    "write_outputs",
]

EXPERIMENTS = ("ber_sweep", "phase_sweep_1d", "phase_sweep_2d", "psd_report", "ortho_check")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``n_bits`` caps the bits simulated per grid point (the run also stops
    at ``max_errors`` bit errors); ``n_blocks`` is the number of code blocks
    checked by ``ortho_check``.  ``sweep_snr_dB`` is the operating point of
    phase sweeps (default 12.5 dB for 1-D, 13 dB for 2-D).
    """

    params: CpmParams = field(default_factory=CpmParams)
    spec: StcCodeSpec = field(default_factory=StcCodeSpec)
    experiment: str = "ber_sweep"
    snr_grid_dB: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    phase_grid: float = 0.05
    n_bits: int = 100_000
    n_blocks: int = 1000
    seed: int = 1
    output_path: Optional[str] = None
    name: str = ""
    sweep_snr_dB: Optional[float] = None
    n_symbols: int = 120
    max_errors: int = 400
    Lr: int = 1
    fading: str = "complex"
    oversample: int = 4
    psd_symbols: int = 10_000
    psd_segment: Optional[int] = None
    batch_bursts: int = 128

    def __post_init__(self):
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", CpmParams(**self.params))
        if isinstance(self.spec, dict):
            object.__setattr__(self, "spec", StcCodeSpec(**self.spec))
        object.__setattr__(self, "snr_grid_dB", tuple(float(x) for x in self.snr_grid_dB))
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        for name in ("n_bits", "n_blocks", "n_symbols", "max_errors", "Lr", "oversample",
                     "psd_symbols", "batch_bursts"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        steps = 1.0 / self.phase_grid if self.phase_grid > 0 else 0.5
        if self.phase_grid <= 0 or abs(steps - round(steps)) > 1e-9:
            raise ConfigurationError(f"phase_grid {self.phase_grid} does not divide 1")
        if self.n_symbols % self.spec.Lt:
            raise ConfigurationError("n_symbols must be a multiple of Lt")
        if self.fading not in ("complex", "amplitude"):
            raise ConfigurationError(f"unknown fading model {self.fading!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        p = asdict(self.params)
        p["h"] = str(self.params.h)
        d["params"] = p
        d["spec"] = {"Lt": self.spec.Lt, "correction": self.spec.correction,
                     "theta_init": list(self.spec.theta_init)}
        d["snr_grid_dB"] = list(self.snr_grid_dB)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        params = dict(d.pop("params", {}) or {})
        spec = dict(d.pop("spec", {}) or {})
        if spec.get("correction") == "none" and spec.get("Lt", 2) > 1:
            spec.setdefault("allow_nonorthogonal", True)
        try:
            return cls(params=CpmParams(**params), spec=StcCodeSpec(**spec), **d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


@dataclass
class BerRecord:
    snr_dB: float
    bits_sent: int
    bit_errors: int
    ber: float
    ci95: tuple
    wallclock: float = 0.0


@dataclass
class SweepRecord:
    theta1: float
    theta2: float
    bits_sent: int
    bit_errors: int
    ber: float
    ci95: tuple


def wilson_interval(errors: int, n: int, level: float = 0.95):
    if n == 0:
        return (0.0, 1.0)
    ci = binomtest(int(errors), int(n)).proportion_ci(level, method="wilson")
    return (float(ci.low), float(ci.high))


# ---------------------------------------------------------------------------
# presets

_DESK_BITS = 50_000


def _p(**kw):
    return CpmParams(**kw)


def _build_presets():
    P = {}
    P["fig2_psd"] = ExperimentConfig(spec=StcCodeSpec(3, "linPC"), experiment="psd_report",
                                     psd_symbols=30_000, name="fig2_psd")
    for corr in ("linPC", "offPC"):
        for pulse in ("REC", "RC"):
            name = f"fig3_sweep2tx_{corr.lower()}_{pulse.lower()}"
            P[name] = ExperimentConfig(params=_p(pulse=pulse), spec=StcCodeSpec(2, corr),
                                       experiment="phase_sweep_1d", sweep_snr_dB=12.5,
                                       phase_grid=0.05, n_bits=_DESK_BITS, name=name)
    for tag, corr, pulse in (("a", "offPC", "REC"), ("b", "offPC", "RC"), ("c", "linPC", "REC")):
        name = f"fig4_sweep3tx_{tag}"
        P[name] = ExperimentConfig(params=_p(pulse=pulse), spec=StcCodeSpec(3, corr),
                                   experiment="phase_sweep_2d", sweep_snr_dB=13.0,
                                   phase_grid=0.05, n_bits=_DESK_BITS, name=name)
    grid1 = tuple(np.arange(0.0, 32.5, 2.5))
    grid2 = tuple(np.arange(0.0, 25.0, 2.5))
    grid3 = tuple(np.arange(0.0, 22.5, 2.5))
    curves = {
        "fig5_ber_1tx": (StcCodeSpec(1, "none"), grid1),
        "fig5_ber_2tx_linpc_nonopt": (StcCodeSpec(2, "linPC", (0.0, 0.0)), grid2),
        "fig5_ber_2tx_linpc_opt": (StcCodeSpec(2, "linPC", (0.0, 0.19)), grid2),
        "fig5_ber_2tx_offpc_opt": (StcCodeSpec(2, "offPC", (0.0, 0.4)), grid2),
        "fig5_ber_3tx_offpc_nonopt": (StcCodeSpec(3, "offPC", (0.0, 0.0, 0.0)), grid3),
        "fig5_ber_3tx_offpc_opt": (StcCodeSpec(3, "offPC", (0.1, 0.45, 0.0)), grid3),
        "fig5_ber_3tx_linpc_opt": (StcCodeSpec(3, "linPC", (0.4, 0.15, 0.0)), grid3),
        "fig5_ber_3tx_linpc_nonopt": (StcCodeSpec(3, "linPC", (0.0, 0.0, 0.0)), grid3),
        "fig5_ber_2tx_offpc_nonopt": (StcCodeSpec(2, "offPC", (0.0, 0.0)), grid2),
    }
    for name, (spec, grid) in curves.items():
        P[name] = ExperimentConfig(spec=spec, experiment="ber_sweep", snr_grid_dB=grid,
                                   n_bits=2_000_000, n_symbols=120, name=name)
    for Lt in (2, 3):
        for corr in ("linPC", "offPC"):
            for pulse in ("REC", "RC"):
                name = f"ortho_{Lt}tx_{corr.lower()}_{pulse.lower()}"
                P[name] = ExperimentConfig(params=_p(pulse=pulse), spec=StcCodeSpec(Lt, corr),
                                           experiment="ortho_check", n_blocks=1000, name=name)
    P["ortho_2tx_none"] = ExperimentConfig(
        spec=StcCodeSpec(2, "none", allow_nonorthogonal=True), experiment="ortho_check",
        n_blocks=1000, name="ortho_2tx_none")
    return P


PRESETS = _build_presets()

PRESET_GROUPS = {
    "fig2_psd": ["fig2_psd"],
    "fig3_sweep2tx": [k for k in PRESETS if k.startswith("fig3_")],
    "fig4_sweep3tx": ["fig4_sweep3tx_a", "fig4_sweep3tx_b", "fig4_sweep3tx_c"],
    "table1_minima": ["fig4_sweep3tx_a", "fig4_sweep3tx_c"],
    "fig5_ber": ["fig5_ber_1tx", "fig5_ber_2tx_linpc_nonopt", "fig5_ber_2tx_linpc_opt",
                 "fig5_ber_2tx_offpc_opt", "fig5_ber_3tx_offpc_nonopt", "fig5_ber_3tx_offpc_opt"],
    "ortho": [k for k in PRESETS if k.startswith("ortho_")],
}


def preset(name: str, **overrides) -> ExperimentConfig:
    """Named configuration, optionally with fields replaced."""
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}") from None
    return replace(cfg, **overrides) if overrides else cfg


def load_config(path) -> ExperimentConfig:
    """Read a YAML (or JSON) key/value file whose keys are ExperimentConfig fields."""
    import yaml

    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} does not hold a mapping")
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------------------
# Monte Carlo core

def _stream(seed: int, point: int, batch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, batch)))


def _simulate_batch(cfg: ExperimentConfig, spec: StcCodeSpec, trellis, N0: float,
                    rng: np.random.Generator, n_bursts: int):
    p = cfg.params
    n = cfg.n_symbols
    bits = rng.integers(0, 2, size=(n_bursts, n * p.bits_per_symbol), dtype=np.int8)
    d = gray_map(bits, p.M, "to_symbols")
    X = encode_batch(spec, p, d)
    A = sample_fading(spec.Lt, cfg.Lr, rng, (n_bursts, n // spec.Lt))
    if cfg.fading == "amplitude":
        A = np.abs(A).astype(complex)
    R = transmit_batch(X, A, N0, rng, p)
    d_hat, _ = detect_batch(R, A, trellis)
    errors = int(np.count_nonzero(gray_map(d_hat, p.M) != bits))
    return bits.size, errors


def simulate_ber_point(cfg: ExperimentConfig, spec: StcCodeSpec, snr_dB: float,
                       point: int = 0, trellis=None):
    """Bits and bit errors at one operating point.

    Batches are drawn in order from ``(seed, point, batch)`` streams until
    ``n_bits`` bits or ``max_errors`` errors are reached.
    """
    p = cfg.params
    trellis = build_trellis(p, spec) if trellis is None else trellis
    N0 = snr_to_n0(snr_dB, p)
    bits_per_burst = cfg.n_symbols * p.bits_per_symbol
    total_bursts = max(1, math.ceil(cfg.n_bits / bits_per_burst))
    sent = errs = 0
    batch = done = 0
    while done < total_bursts and errs < cfg.max_errors:
        nb = min(cfg.batch_bursts, total_bursts - done)
        b, e = _simulate_batch(cfg, spec, trellis, N0, _stream(cfg.seed, point, batch), nb)
        sent += b
        errs += e
        done += nb
        batch += 1
    return sent, errs


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def run_ber_sweep(cfg: ExperimentConfig, threads: int = 1):
    """BER versus Eb/N0 over ``cfg.snr_grid_dB``."""
    trellis = build_trellis(cfg.params, cfg.spec)

    def one(item):
        i, snr = item
        t0 = time.perf_counter()
        bits, errs = simulate_ber_point(cfg, cfg.spec, snr, point=i, trellis=trellis)
        return BerRecord(snr, bits, errs, errs / bits, wilson_interval(errs, bits),
                         time.perf_counter() - t0)

    return _map(one, list(enumerate(cfg.snr_grid_dB)), threads)


def _phase_grid(step: float):
    n = int(round(1.0 / step))
    return [round(k * step, 10) for k in range(n)]


def _sweep_snr(cfg, default):
    return default if cfg.sweep_snr_dB is None else cfg.sweep_snr_dB


def run_phase_sweep_1d(cfg: ExperimentConfig, threads: int = 1):
    """BER versus ``theta_2 - theta_1`` for two antennas (``theta_1 = 0``).

    All grid points share the same random streams.
    """
    if cfg.spec.Lt != 2:
        raise ConfigurationError("phase_sweep_1d needs Lt=2")
    snr = _sweep_snr(cfg, 12.5)
    # the data part of the trellis does not depend on the initial phases
    base = build_trellis(cfg.params, cfg.spec)

    def one(dth):
        spec = cfg.spec.with_phases((0.0, dth))
        bits, errs = simulate_ber_point(cfg, spec, snr, point=0, trellis=replace(base, spec=spec))
        return SweepRecord(0.0, dth, bits, errs, errs / bits, wilson_interval(errs, bits))

    return _map(one, _phase_grid(cfg.phase_grid), threads)


def run_phase_sweep_2d(cfg: ExperimentConfig, threads: int = 1):
    """BER over the (theta_1, theta_2) torus with ``theta_3 = 0``, three antennas."""
    if cfg.spec.Lt != 3:
        raise ConfigurationError("phase_sweep_2d needs Lt=3")
    snr = _sweep_snr(cfg, 13.0)
    base = build_trellis(cfg.params, cfg.spec)
    grid = _phase_grid(cfg.phase_grid)

    def one(item):
        t1, t2 = item
        spec = cfg.spec.with_phases((t1, t2, 0.0))
        bits, errs = simulate_ber_point(cfg, spec, snr, point=0, trellis=replace(base, spec=spec))
        return SweepRecord(t1, t2, bits, errs, errs / bits, wilson_interval(errs, bits))

    return _map(one, [(a, b) for a in grid for b in grid], threads)


def find_minima_1d(records):
    """Local minima of a periodic 1-D sweep, lowest BER first."""
    ber = np.array([r.ber for r in records])
    n = len(ber)
    idx = [i for i in range(n) if ber[i] <= ber[(i - 1) % n] and ber[i] <= ber[(i + 1) % n]]
    return sorted((records[i] for i in idx), key=lambda r: (r.ber, r.theta2))


def find_minima_2d(records):
    """Local minima (8-neighbourhood on the torus), lowest BER first."""
    t1 = sorted({r.theta1 for r in records})
    t2 = sorted({r.theta2 for r in records})
    grid = np.empty((len(t1), len(t2)))
    lookup = {}
    for r in records:
        i, j = t1.index(r.theta1), t2.index(r.theta2)
        grid[i, j] = r.ber
        lookup[i, j] = r
    out = []
    for (i, j), r in lookup.items():
        nb = [grid[(i + a) % len(t1), (j + b) % len(t2)]
              for a in (-1, 0, 1) for b in (-1, 0, 1) if a or b]
        if grid[i, j] <= min(nb):
            out.append(r)
    return sorted(out, key=lambda r: (r.ber, r.theta1, r.theta2))


def snr_at_ber(records, target: float) -> float:
    """Eb/N0 where the BER curve crosses ``target`` (log-linear interpolation)."""
    pts = [(r.snr_dB, r.ber) for r in records if r.bit_errors > 0]
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target >= b1:
            if b0 == b1:
                return s0
            f = (np.log10(b0) - np.log10(target)) / (np.log10(b0) - np.log10(b1))
            return float(s0 + f * (s1 - s0))
    return float("nan")


def decay_db_per_decade(records, decades: float = 2.0) -> float:
    """dB per decade of BER decrease, fitted over the lowest ``decades`` decades measured."""
    pts = [(r.snr_dB, np.log10(r.ber)) for r in records if r.bit_errors > 0]
    if len(pts) < 2:
        return float("nan")
    lo = min(b for _, b in pts)
    sel = [(s, b) for s, b in pts if b <= lo + decades]
    s, b = np.array(sel).T
    slope = np.polyfit(s, b, 1)[0]
    return float(-1.0 / slope)


# ---------------------------------------------------------------------------
# spectra and orthogonality

def run_psd_report(cfg: ExperimentConfig):
    """Per-antenna Welch spectra, frequency shifts and the -30 dB bandwidth expansion."""
    p, spec = cfg.params, cfg.spec
    rng = _stream(cfg.seed, 0, 0)
    n = cfg.psd_symbols - cfg.psd_symbols % spec.Lt
    d = rng.choice(p.alphabet, n)
    waves = encode_continuous(spec, p, d)
    seg = cfg.psd_segment or 256 * p.sps
    psds = [welch_psd(w, seg) for w in waves]
    ref = welch_psd(synthesize_cpm(p, d, 0.0), seg)
    comp = combined_psd(psds)
    c1 = spectral_centroid(psds[0])
    shifts = [spectral_centroid(e) - c1 for e in psds]
    expected = [(m - 1) / (spec.Lt * p.T) for m in range(1, spec.Lt + 1)]
    b_ref = bandwidth_at(ref, -30.0)
    b_comp = bandwidth_at(comp, -30.0)
    summary = {
        "bin_width": psds[0].bin_width,
        "centroids": [spectral_centroid(e) for e in psds],
        "shifts": shifts,
        "expected_shifts": expected,
        "shift_error_bins": [abs(s - e) / psds[0].bin_width for s, e in zip(shifts, expected)],
        "bandwidth_30dB_single": b_ref,
        "bandwidth_30dB_composite": b_comp,
        "expansion_ratio": (b_comp - b_ref) / b_ref,
    }
    return {"psds": psds, "reference": ref, "composite": comp, "summary": summary}


def run_ortho_check(cfg: ExperimentConfig, tol: float = 1e-6):
    """Gram matrices of ``n_blocks`` random code blocks at ``oversample`` x sps.

    Blocks are taken after the start-up transient of the pulse memory; the
    first block of a burst is reported separately.
    """
    spec = cfg.spec
    p = replace(cfg.params, sps=cfg.params.sps * cfg.oversample)
    rng = _stream(cfg.seed, 0, 0)
    skip = math.ceil((p.gamma - 1) / spec.Lt)
    n = spec.Lt * (skip + 2)
    off_max = diag_max = first_off = 0.0
    for _ in range(cfg.n_blocks):
        d = rng.choice(p.alphabet, n)
        waves = encode_continuous(spec, p, d)
        g = block_gram(waves, skip, p.T)
        off_max = max(off_max, g.max_offdiag())
        diag_max = max(diag_max, g.max_diag_error(p.Es))
        first_off = max(first_off, block_gram(waves, 0, p.T).max_offdiag())
    passed = off_max < tol * p.Es and diag_max < tol * p.Es
    return {
        "blocks": cfg.n_blocks,
        "oversample": cfg.oversample,
        "first_steady_block": skip,
        "max_offdiag": off_max,
        "max_diag_error": diag_max,
        "first_block_max_offdiag": first_off,
        "tolerance": tol * p.Es,
        "status": "PASS" if passed else "FAIL",
    }


def run_experiment(cfg: ExperimentConfig, threads: int = 1):
    runners = {
        "ber_sweep": lambda: run_ber_sweep(cfg, threads),
        "phase_sweep_1d": lambda: run_phase_sweep_1d(cfg, threads),
        "phase_sweep_2d": lambda: run_phase_sweep_2d(cfg, threads),
        "psd_report": lambda: run_psd_report(cfg),
        "ortho_check": lambda: run_ortho_check(cfg),
    }
    return runners[cfg.experiment]()


# ---------------------------------------------------------------------------
# output

def _fmt(x) -> str:
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def _header(cfg: ExperimentConfig) -> dict:
    return {"version": __version__, "seed": cfg.seed, "config": cfg.to_dict()}


def _csv_text(cfg: ExperimentConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# stccpm {__version__}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _tabulate(cfg: ExperimentConfig, result):
    """(csv columns, rows, JSON summary) for an experiment result."""
    kind = cfg.experiment
    if kind == "ber_sweep":
        rows = [(r.snr_dB, r.bits_sent, r.bit_errors, r.ber, r.ci95[0], r.ci95[1]) for r in result]
        return ("snr_db", "bits", "errors", "ber", "ci_lo", "ci_hi"), rows, {}
    if kind in ("phase_sweep_1d", "phase_sweep_2d"):
        rows = [(r.theta1, r.theta2, r.ber, r.ci95[0], r.ci95[1]) for r in result]
        mins = find_minima_1d(result) if kind == "phase_sweep_1d" else find_minima_2d(result)
        summary = {"minima": [{"theta1": m.theta1, "theta2": m.theta2, "ber": m.ber} for m in mins]}
        return ("theta1", "theta2", "ber", "ci_lo", "ci_hi"), rows, summary
    if kind == "psd_report":
        psds = result["psds"]
        cols = (["freq"] + [f"antenna{m + 1}_db" for m in range(len(psds))]
                + ["composite_db", "reference_db"])
        rows = zip(psds[0].freqs, *[e.power_dB for e in psds], result["composite"].power_dB,
                   result["reference"].power_dB)
        return cols, [tuple(float(v) for v in r) for r in rows], result["summary"]
    cols = ("metric", "value")
    return cols, [(k, v) for k, v in result.items()], result


def write_outputs(cfg: ExperimentConfig, result, out=None):
    """Write the CSV and its ``.json`` sidecar; returns the CSV path."""
    out = Path(out or cfg.output_path or f"{cfg.name or cfg.experiment}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    cols, rows, summary = _tabulate(cfg, result)
    out.write_text(_csv_text(cfg, cols, rows))
    side = dict(_header(cfg), summary=summary)
    out.with_suffix(out.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return out
