"""Photon-counting statistics: binned noise, squeezing, Mandel Q and g2.

Estimators take streams produced by :mod:`photongun.simulator` or read by
:mod:`photongun.tsfile` (structured arrays with a ``t`` field in ps); the
g2 functions also accept plain integer arrays of picosecond timestamps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .emitter import SaturationParams, excited_population
from .errors import DomainError, InsufficientDataError

PS_PER_S = 10**12


@dataclass(frozen=True)
class BinnedTrace:
    bin_width: float
    counts: np.ndarray
    start: float = 0.0

    @property
    def duration(self) -> float:
        return self.bin_width * self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class NoiseReport:
    mean_rate: float
    sigma_sps: float
    sigma_sn: float
    ratio: float
    squeezing_db: float
    mandel_q: float
    M: float | None
    n_bins: int
    mean_counts: float

    @property
    def noise_reduction(self) -> float:
        """Fractional noise reduction relative to shot noise, 1 - ratio."""
        return 1.0 - self.ratio

    @property
    def squeezing_db_variance(self) -> float:
        """Squeezing in the variance convention, -10 log10(ratio**2)."""
        return 2.0 * self.squeezing_db


@dataclass(frozen=True)
class G2Histogram:
    tau: np.ndarray            # bin centres, s
    edges: np.ndarray          # bin edges, s
    coincidences: np.ndarray
    normalization: float
    g2_zero: float
    g2_zero_err: float
    mode: str
    n_a: int
    n_b: int
    duration: float
    peak_areas: dict | None = None

    @property
    def g2(self) -> np.ndarray:
        return self.coincidences / self.normalization

    def plateau(self, min_abs_tau: float) -> tuple[float, float]:
        """Mean normalized value over |tau| > ``min_abs_tau`` and its Poisson SE."""
        sel = np.abs(self.tau) > min_abs_tau
        if not np.any(sel):
            raise InsufficientDataError("no histogram bins beyond the requested lag")
        counts = self.coincidences[sel]
        mean = counts.mean() / self.normalization
        se = math.sqrt(counts.sum()) / sel.sum() / self.normalization
        return float(mean), float(se)


def _times(stream) -> np.ndarray:
    arr = np.asarray(stream)
    if arr.dtype.names:
        arr = arr["t"]
    if arr.dtype == np.uint64 and arr.size and arr.max() >= 2**63:
        raise DomainError("timestamps beyond 2**63 ps are not supported by the estimators")
    return arr.astype(np.int64, copy=False)


def bin_trace(stream, bin_width: float, duration: float | None = None, start: float = 0.0) -> BinnedTrace:
    """Count records in consecutive bins of ``bin_width`` seconds.

    With ``duration`` given, ``floor(duration / bin_width)`` bins are kept and
    a partial trailing bin is dropped. Without it, the trace ends with the
    bin that holds the last record.
    """
    if not bin_width > 0:
        raise DomainError("bin_width must be positive")
    bin_ps = round(bin_width * PS_PER_S)
    start_ps = round(start * PS_PER_S)
    if bin_ps < 1:
        raise DomainError("bin_width below timestamp resolution")
    t = _times(stream)
    t = t[t >= start_ps] - start_ps
    if duration is not None:
        n_bins = int(math.floor(round(duration * PS_PER_S) / bin_ps * (1 + 1e-12)))
    elif t.size:
        n_bins = int(t.max() // bin_ps) + 1
    else:
        n_bins = 0
    idx = t // bin_ps
    counts = np.bincount(idx[idx < n_bins], minlength=n_bins).astype(np.int64)
    return BinnedTrace(bin_width=bin_width, counts=counts, start=start)


def _db(ratio: float) -> float:
    return -10.0 * math.log10(ratio) if ratio > 0 else math.inf


def squeezing_db(ratio: float) -> float:
    """Intensity squeezing in dB for a noise ratio sigma_sps/sigma_sn.

    Uses -10 log10(ratio): 0.6 gives 2.2 dB and 0.24 gives 6.2 dB.
    """
    if not 0 < ratio <= 1:
        raise DomainError(f"noise ratio must lie in (0, 1], got {ratio}")
    return _db(ratio)


def noise_ratio_measured(trace: BinnedTrace, f_rep: float | None = None) -> NoiseReport:
    """Noise statistics of a binned trace.

    ``sigma_sps`` is the sample standard deviation of the bin counts and
    ``sigma_sn = sqrt(mean)`` the shot-noise level of the same intensity.
    ``squeezing_db`` is signed here (negative above shot noise). ``M`` is
    filled in when ``f_rep`` is known.
    """
    counts = np.asarray(trace.counts, dtype=float)
    if counts.size < 2:
        raise InsufficientDataError(f"need at least 2 bins, got {counts.size}")
    mean = counts.mean()
    sigma_sps = counts.std(ddof=1)
    sigma_sn = math.sqrt(mean)
    if sigma_sn == 0:
        raise InsufficientDataError("trace holds no counts")
    ratio = sigma_sps / sigma_sn
    M = float(mean / (f_rep * trace.bin_width)) if f_rep else None
    return NoiseReport(
        mean_rate=float(mean / trace.bin_width),
        sigma_sps=float(sigma_sps),
        sigma_sn=sigma_sn,
        ratio=float(ratio),
        squeezing_db=_db(ratio),
        mandel_q=float(ratio**2 - 1),
        M=M,
        n_bins=int(counts.size),
        mean_counts=float(mean),
    )


def expected_noise_ratio(p_detect, pulses_per_bin: float, n_bg=0.0):
    """sigma_sps/sigma_sn for binomial signal plus Poisson background.

    ``p_detect`` is the per-pulse detection probability (zeta*rho), the
    signal mean per bin is ``p_detect * pulses_per_bin`` and ``n_bg`` is the
    mean background count per bin.
    """
    p = np.asarray(p_detect, dtype=float)
    n_mol = p * pulses_per_bin
    n_bg = np.asarray(n_bg, dtype=float)
    total = n_mol + n_bg
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.sqrt(((1 - p) * n_mol + n_bg) / total)
    r = np.where(total > 0, r, 1.0)
    return float(r) if r.ndim == 0 else r


def noise_ratio_model(E_p, zeta: float, sat: SaturationParams, f_rep: float, bin_width: float):
    """Predicted noise ratio at pulse energy ``E_p`` with background ``sat.alpha * E_p``."""
    if not 0 <= zeta <= 1:
        raise DomainError("zeta must lie in [0, 1]")
    rho = excited_population(E_p, sat.E_s, sat.tau_p, sat.tau_r)
    n_bg = sat.alpha * np.asarray(E_p, dtype=float) * bin_width
    return expected_noise_ratio(zeta * np.asarray(rho), f_rep * bin_width, n_bg)


def mandel_q_model(g2_zero: float, M: float, zeta: float, rho: float) -> float:
    """Q_D = (g2(0) - 1) * M * zeta * rho."""
    if not g2_zero >= 0:
        raise DomainError("g2_zero must be nonnegative")
    if not M > 0:
        raise DomainError("M must be positive")
    if not 0 <= zeta <= 1 or not 0 <= rho <= 1:
        raise DomainError("zeta and rho must lie in [0, 1]")
    return (g2_zero - 1.0) * M * zeta * rho


def background_pair_probability(p_b: float) -> float:
    """P(N >= 2) for Poisson-distributed background with mean ``p_b`` per pulse."""
    if not p_b >= 0:
        raise DomainError("p_b must be nonnegative")
    return -math.expm1(-p_b) - p_b * math.exp(-p_b)


def mean_and_se(values) -> tuple[float, float]:
    """Mean and standard error across independent replicas (e.g. seeds)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise InsufficientDataError("need at least 2 replicas for a standard error")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _cross_lags(ta: np.ndarray, tb: np.ndarray, tmax: int, chunk: int = 1 << 16):
    """Yield arrays of lags tb - ta with |lag| <= tmax, chunked over ``ta``."""
    for i0 in range(0, ta.size, chunk):
        a = ta[i0:i0 + chunk]
        lo = np.searchsorted(tb, a - tmax, side="left")
        hi = np.searchsorted(tb, a + tmax, side="right")
        cnt = hi - lo
        total = int(cnt.sum())
        if total == 0:
            continue
        first = np.repeat(lo - (np.cumsum(cnt) - cnt), cnt)
        idx = first + np.arange(total)
        yield tb[idx] - np.repeat(a, cnt)


def g2_histogram(stream_a, stream_b, tau_max: float, n_bins: int = 201, mode: str = "continuous",
                 period: float | None = None, duration: float | None = None) -> G2Histogram:
    """Cross-correlation histogram of two detector channels.

    Coincidences are counted for every pair with lag ``t_b - t_a`` inside
    ``[-tau_max, tau_max]`` by a sorted sweep, so the cost scales with
    events plus coincidences. The histogram is normalized by
    ``N_a * N_b * bin_width / duration``.

    ``mode="continuous"`` reports the normalized bin that contains zero lag
    (use an odd ``n_bins``). ``mode="pulsed"`` needs the repetition
    ``period`` and reports the coincidence area within one period around
    zero divided by the mean area of the side peaks that fit in ``tau_max``.
    """
    if mode not in ("continuous", "pulsed"):
        raise DomainError(f"g2 mode must be 'continuous' or 'pulsed', got {mode!r}")
    if not tau_max > 0 or n_bins < 1:
        raise DomainError("tau_max must be positive and n_bins >= 1")
    ta, tb = _times(stream_a), _times(stream_b)
    if ta.size < 2 or tb.size < 2:
        raise InsufficientDataError(f"g2 needs at least 2 events per channel, got {ta.size} and {tb.size}")
    if np.any(np.diff(ta) < 0) or np.any(np.diff(tb) < 0):
        raise DomainError("streams must be time-sorted")

    tmax = round(tau_max * PS_PER_S)
    edges_ps = np.linspace(-tmax, tmax, n_bins + 1)
    width_ps = edges_ps[1] - edges_ps[0]
    if duration is None:
        T_ps = float(max(ta[-1], tb[-1]) - min(ta[0], tb[0]))
    else:
        T_ps = duration * PS_PER_S
    if T_ps <= 0:
        raise InsufficientDataError("streams span zero time")

    n_peaks = 0
    if mode == "pulsed":
        if not period or period <= 0:
            raise DomainError("pulsed mode needs a positive repetition period")
        P = period * PS_PER_S
        n_peaks = int(math.floor(tmax / P - 0.5))
        if n_peaks < 1:
            raise DomainError("tau_max must cover at least one side peak (tau_max >= 1.5 periods)")
        areas = np.zeros(2 * n_peaks + 1, dtype=np.int64)

    hist = np.zeros(n_bins, dtype=np.int64)
    for lags in _cross_lags(ta, tb, tmax):
        hist += np.histogram(lags, bins=edges_ps)[0]
        if mode == "pulsed":
            m = np.floor(lags / P + 0.5).astype(np.int64)
            sel = np.abs(m) <= n_peaks
            areas += np.bincount(m[sel] + n_peaks, minlength=2 * n_peaks + 1)

    norm = ta.size * tb.size * width_ps / T_ps
    if mode == "continuous":
        zero = min(int(np.searchsorted(edges_ps, 0.0, side="right")) - 1, n_bins - 1)
        c0 = hist[zero]
        g2_zero = c0 / norm
        g2_err = math.sqrt(max(c0, 1)) / norm
        peaks = None
    else:
        side = np.delete(areas, n_peaks)
        side_mean = side.mean()
        a0 = areas[n_peaks]
        if side_mean == 0:
            g2_zero, g2_err = math.nan, math.nan
        else:
            g2_zero = a0 / side_mean
            g2_err = g2_zero * math.sqrt(1 / max(a0, 1) + 1 / side.sum()) if a0 else math.sqrt(1.0) / side_mean
        peaks = {int(m): int(a) for m, a in zip(range(-n_peaks, n_peaks + 1), areas)}

    return G2Histogram(
        tau=(edges_ps[:-1] + edges_ps[1:]) / 2 / PS_PER_S,
        edges=edges_ps / PS_PER_S,
        coincidences=hist,
        normalization=float(norm),
        g2_zero=float(g2_zero),
        g2_zero_err=float(g2_err),
        mode=mode,
        n_a=int(ta.size),
        n_b=int(tb.size),
        duration=T_ps / PS_PER_S,
        peak_areas=peaks,
    )
