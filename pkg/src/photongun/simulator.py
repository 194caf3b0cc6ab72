"""Seeded Monte Carlo generation of photon detection events.

A stream is a numpy structured array with dtype :data:`PHOTON_DTYPE`
(fields ``t`` in integer picoseconds, ``origin`` and ``channel``), sorted
by ``t``. Use :func:`records` to iterate it as :class:`PhotonRecord` tuples.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from .emitter import EmitterParams, ExcitationConfig, excited_population, triplet_branching
from .errors import DomainError

PS_PER_S = 10**12
MAX_PULSES = 2**40
DEFAULT_CHUNK = 1 << 21

PHOTON_DTYPE = np.dtype([("t", "<u8"), ("origin", "u1"), ("channel", "u1")])


class Origin(enum.IntEnum):
    MOLECULE = 0
    BACKGROUND = 1


class PhotonRecord(NamedTuple):
    t: int
    origin: Origin
    channel: int = 0


def records(stream: np.ndarray) -> Iterator[PhotonRecord]:
    for t, origin, channel in stream.tolist():
        yield PhotonRecord(t, Origin(origin), channel)


def empty_stream() -> np.ndarray:
    return np.zeros(0, dtype=PHOTON_DTYPE)


# Independent random substreams, one per purpose. Switching one channel on
# or off must never shift the draws of another.
_PURPOSES = {
    "excitation": 0,
    "delay": 1,
    "dwell": 2,
    "detection": 3,
    "background": 4,
    "split": 5,
    "thinning": 6,
}


def substream(seed: int, purpose: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(_PURPOSES[purpose],))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class DetectionChain:
    """Cascaded transmissions between emitter and detector output."""

    objective_T: float = 0.90
    optics_T: float = 0.95
    detector_qe: float = 0.80
    extra_T: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not 0 < value <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {value}")

    def total_zeta(self) -> float:
        return self.objective_T * self.optics_T * self.detector_qe * self.extra_T

    @classmethod
    def from_zeta(cls, zeta: float) -> "DetectionChain":
        return cls(objective_T=zeta, optics_T=1.0, detector_qe=1.0, extra_T=1.0)


@dataclass(frozen=True)
class BackgroundModel:
    """Detected background, either ``alpha * E_p`` or a fixed rate (counts/s)."""

    mode: str = "fixed"
    rate: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.mode not in ("fixed", "alpha"):
            raise DomainError(f"background mode must be 'fixed' or 'alpha', got {self.mode!r}")
        if not self.rate >= 0 or not self.alpha >= 0:
            raise DomainError("background rate and alpha must be nonnegative")

    def detected_rate(self, E_p: float) -> float:
        return self.alpha * E_p if self.mode == "alpha" else self.rate


@dataclass(frozen=True)
class SimConfig:
    emitter: EmitterParams
    excitation: ExcitationConfig
    chain: DetectionChain = field(default_factory=DetectionChain)
    background: BackgroundModel = field(default_factory=BackgroundModel)
    seed: int = 0
    rho_override: float | None = None

    def __post_init__(self):
        if self.rho_override is not None and not 0 <= self.rho_override <= 1:
            raise DomainError("rho_override must lie in [0, 1]")

    @property
    def rho(self) -> float:
        if self.rho_override is not None:
            return float(self.rho_override)
        exc = self.excitation
        return excited_population(exc.E_p, exc.E_s, exc.tau_p, self.emitter.tau_r)

    @property
    def background_rate(self) -> float:
        return self.background.detected_rate(self.excitation.E_p)

    @property
    def detection_probability(self) -> float:
        """Per-pulse probability of a detected signal photon, ignoring shelving."""
        b = triplet_branching(self.emitter)
        return self.rho * (1 - b) * self.emitter.qe * self.chain.total_zeta()


@dataclass
class SimSummary:
    pulses: int = 0
    signal_emitted: int = 0
    signal_detected: int = 0
    signal_lost: int = 0
    background_detected: int = 0
    isc_events: int = 0
    triplet_lost_pulses: int = 0
    duration: float = 0.0
    rho: float = 0.0
    zeta: float = 0.0

    @property
    def triplet_loss_fraction(self) -> float:
        return self.triplet_lost_pulses / self.pulses if self.pulses else 0.0

    @property
    def detected(self) -> int:
        return self.signal_detected + self.background_detected


def _pulse_period(f_rep: float) -> tuple[int, int, int]:
    period = (Fraction(PS_PER_S) / Fraction(f_rep)).limit_denominator(10**6)
    return period.numerator // period.denominator, period.numerator % period.denominator, period.denominator


def pulse_times(k: np.ndarray, f_rep: float) -> np.ndarray:
    """Integer-picosecond times of pulse indices ``k`` (rounded to nearest)."""
    whole, rem, den = _pulse_period(f_rep)
    k = np.asarray(k, dtype=np.int64)
    return k * whole + (k * rem + den // 2) // den


def iter_stream(config: SimConfig, summary: SimSummary | None = None,
                chunk_pulses: int = DEFAULT_CHUNK) -> Iterator[np.ndarray]:
    """Generate the detected stream chunk by chunk.

    Each yielded chunk is time-sorted; chunks follow each other in pulse
    order. ``summary`` (if given) is updated in place as chunks are produced.
    """
    exc, em = config.excitation, config.emitter
    n = exc.n_pulses
    end_ps = round(exc.duration * PS_PER_S)
    if n > MAX_PULSES or end_ps >= 2**63:
        raise OverflowError(f"{n} pulses over {exc.duration} s exceeds the pulse-count capacity")
    if summary is None:
        summary = SimSummary()
    rho = config.rho
    b = triplet_branching(em)
    p_isc = rho * b
    p_emit = rho * (1 - b) * em.qe
    zeta = config.chain.total_zeta()
    bg_rate = config.background_rate
    tau_r_ps = em.tau_r * PS_PER_S
    summary.duration, summary.rho, summary.zeta = exc.duration, rho, zeta

    rng_exc = substream(config.seed, "excitation")
    rng_delay = substream(config.seed, "delay")
    rng_dwell = substream(config.seed, "dwell")
    rng_det = substream(config.seed, "detection")
    rng_bg = substream(config.seed, "background")

    dark_until = -1
    for k0 in range(0, n, chunk_pulses):
        k1 = min(n, k0 + chunk_pulses)
        tp = pulse_times(np.arange(k0, k1), exc.f_rep)
        u = rng_exc.random(k1 - k0)

        dark = np.zeros(k1 - k0, dtype=bool)
        if dark_until > tp[0]:
            dark[: np.searchsorted(tp, dark_until)] = True
        for i in np.flatnonzero(u < p_isc):
            if dark[i]:
                continue
            dwell_ps = round(rng_dwell.exponential(1.0 / em.k31) * PS_PER_S)
            dark_until = int(tp[i]) + dwell_ps
            dark[i + 1: np.searchsorted(tp, dark_until)] = True
            summary.isc_events += 1

        emit = (u >= p_isc) & (u < p_isc + p_emit) & ~dark
        t_emit = tp[emit]
        delay = np.floor(rng_delay.exponential(tau_r_ps, t_emit.size)).astype(np.int64)
        kept = rng_det.random(t_emit.size) < zeta
        t_sig = (t_emit + delay)[kept]

        start = 0 if k0 == 0 else int(tp[0])
        stop = end_ps if k1 == n else int(pulse_times(np.array([k1]), exc.f_rep)[0])
        n_bg = rng_bg.poisson(bg_rate * (stop - start) / PS_PER_S) if stop > start else 0
        t_bg = start + np.floor(rng_bg.random(n_bg) * (stop - start)).astype(np.int64)

        chunk = np.empty(t_sig.size + n_bg, dtype=PHOTON_DTYPE)
        chunk["t"][: t_sig.size] = t_sig
        chunk["origin"][: t_sig.size] = Origin.MOLECULE
        chunk["t"][t_sig.size:] = t_bg
        chunk["origin"][t_sig.size:] = Origin.BACKGROUND
        chunk["channel"] = 0
        chunk = chunk[np.argsort(chunk["t"], kind="stable")]

        summary.pulses += k1 - k0
        summary.triplet_lost_pulses += int(dark.sum())
        summary.signal_emitted += int(t_emit.size)
        summary.signal_detected += int(t_sig.size)
        summary.signal_lost += int(t_emit.size - t_sig.size)
        summary.background_detected += int(n_bg)
        yield chunk


def simulate_stream(config: SimConfig, chunk_pulses: int = DEFAULT_CHUNK) -> tuple[np.ndarray, SimSummary]:
    """Run the full simulation and return the merged, time-sorted stream."""
    summary = SimSummary()
    chunks = list(iter_stream(config, summary, chunk_pulses))
    stream = np.concatenate(chunks) if chunks else empty_stream()
    if stream.size > 1 and np.any(stream["t"][1:] < stream["t"][:-1]):
        stream = stream[np.argsort(stream["t"], kind="stable")]
    return stream, summary


def apply_loss(stream: np.ndarray, T: float, seed: int) -> np.ndarray:
    """Keep each record independently with probability ``T``."""
    if not 0 <= T <= 1:
        raise DomainError(f"transmission must lie in [0, 1], got {T}")
    keep = substream(seed, "thinning").random(stream.size) < T
    return stream[keep]


def hbt_split(stream: np.ndarray, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Route records to arm A (channel 0) with probability ``ratio``, else arm B (channel 1)."""
    if not 0 <= ratio <= 1:
        raise DomainError(f"split ratio must lie in [0, 1], got {ratio}")
    to_a = substream(seed, "split").random(stream.size) < ratio
    a, b = stream[to_a].copy(), stream[~to_a].copy()
    a["channel"] = 0
    b["channel"] = 1
    return a, b

