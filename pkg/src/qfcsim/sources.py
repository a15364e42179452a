"""Photon-pair sources, threshold detectors, and Monte Carlo event streams.

Streams are generated pulse-synchronously: each pump pulse may herald (or
clock) a trigger event on channel 1 and produce clicks on the analysis
detectors, channel 2 (start) and channel 3 (stop) behind a balanced
splitter, or channel 2 alone behind the decoding interferometer.

Determinism: every generator draws from counter-based Philox substreams
keyed by (seed, chunk_index) over fixed 2**19-pulse chunks, so results are
reproducible bit for bit regardless of how chunks would be scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

from .config import ConfigError, ExperimentConfig
from .qubits import PHI_PLUS, density

TRIGGER_CHANNEL = 1
START_CHANNEL = 2
STOP_CHANNEL = 3

CHUNK_PULSES = 1 << 19

_CLASSICAL_KINDS = ("coherent", "thermal")


def entangled_pair_state(werner_weight: float) -> np.ndarray:
    """Pair-source polarization state: weighted maximally entangled + white noise.

    weight 1 returns the maximally entangled target exactly; weight 0 the
    maximally mixed state.  Fidelity to the target is (1 + 3 w)/4.
    """
    if not 0.0 <= werner_weight <= 1.0:
        raise ValueError("werner_weight must lie in [0, 1]")
    return werner_weight * density(PHI_PLUS) \
        + (1.0 - werner_weight) * np.eye(4, dtype=complex) / 4.0


@dataclass(frozen=True)
class Detector:
    """Non-number-resolving click detector.

    A click happens when at least one incident photon is registered (each
    independently with probability ``efficiency``) or a dark count fires
    (probability ``dark_prob`` per gate).
    """

    efficiency: float
    dark_prob: float = 0.0
    gated: bool = True
    channel_id: int = 0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_prob <= 1.0:
            raise ValueError("dark_prob must lie in [0, 1]")

    def click_prob_fock(self, n_photons) -> float | np.ndarray:
        """Click probability given exactly n incident photons."""
        n = np.asarray(n_photons)
        if np.any(n < 0):
            raise ValueError("photon number must be >= 0")
        p = 1.0 - (1.0 - self.dark_prob) * (1.0 - self.efficiency) ** n
        return float(p) if np.isscalar(n_photons) else p

    def click_prob_poisson(self, mean_photons: float) -> float:
        """Click probability for Poissonian light with the given mean."""
        if mean_photons < 0.0:
            raise ValueError("mean photon number must be >= 0")
        return 1.0 - (1.0 - self.dark_prob) * math.exp(-self.efficiency * mean_photons)


def detect(mean_exposure: float, detector: Detector, rng: np.random.Generator) -> bool:
    """Sample one gate of the detector under Poissonian illumination."""
    return bool(rng.random() < detector.click_prob_poisson(mean_exposure))


def detect_fock(n_photons: int, detector: Detector, rng: np.random.Generator) -> bool:
    """Sample one gate of the detector with exactly n incident photons."""
    return bool(rng.random() < detector.click_prob_fock(n_photons))


@dataclass(frozen=True)
class SpdcSource:
    """Pulsed photon-pair source with truncated pair-number statistics.

    ``statistics`` selects Poissonian (many-mode) or thermal (single-mode)
    pair numbers; the distribution is truncated at ``pair_truncation`` pairs
    and renormalized.
    """

    mean_pairs: float
    rep_period: float = 1.0 / 82e6
    pair_truncation: int = 4
    statistics: str = "poisson"

    def __post_init__(self):
        if self.mean_pairs < 0.0:
            raise ValueError("mean_pairs must be >= 0")
        if self.rep_period <= 0.0:
            raise ValueError("rep_period must be > 0")
        if self.pair_truncation < 1:
            raise ValueError("pair_truncation must be >= 1")
        if self.statistics not in ("poisson", "thermal"):
            raise ValueError(f"statistics must be poisson or thermal, got {self.statistics!r}")

    def pair_distribution(self) -> np.ndarray:
        """P(k pairs) for k = 0..pair_truncation, renormalized."""
        k = np.arange(self.pair_truncation + 1)
        mu = self.mean_pairs
        if self.statistics == "poisson":
            log_w = k * math.log(mu) - mu - np.cumsum(np.log(np.maximum(k, 1))) \
                if mu > 0 else np.where(k == 0, 0.0, -np.inf)
            w = np.exp(log_w)
        else:
            w = mu ** k / (1.0 + mu) ** (k + 1)
        return w / w.sum()


def herald_single_photon(source: SpdcSource, herald: Detector) -> np.ndarray:
    """Pair-number distribution conditioned on a herald click.

    Returns P(k | click) for k = 0..pair_truncation.  At vanishing mean pair
    number and no dark counts this concentrates on k = 1.
    """
    p_k = source.pair_distribution()
    click = herald.click_prob_fock(np.arange(len(p_k)))
    joint = p_k * click
    total = joint.sum()
    if total <= 0.0:
        raise ValueError("herald never clicks for this source and detector")
    return joint / total


@dataclass(frozen=True)
class DetectionEvent:
    channel_id: int
    pulse_index: int
    timestamp_ps: float


@dataclass
class EventStream:
    """Time-ordered detector clicks from one simulated run.

    Stored as parallel arrays (channel, pulse index, timestamp in ps).
    Timestamps are absolute (pulse index times repetition period, plus path
    delay and jitter) and nondecreasing.
    """

    channels: np.ndarray
    pulse_indices: np.ndarray
    timestamps_ps: np.ndarray
    n_pulses: int
    seed: int
    rep_period: float

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.int16)
        self.pulse_indices = np.asarray(self.pulse_indices, dtype=np.int64)
        self.timestamps_ps = np.asarray(self.timestamps_ps, dtype=np.float64)
        n = len(self.channels)
        if len(self.pulse_indices) != n or len(self.timestamps_ps) != n:
            raise ValueError("channel, pulse, and timestamp arrays must have equal length")
        if n and (self.pulse_indices.min() < 0
                  or self.pulse_indices.max() >= self.n_pulses):
            raise ValueError("pulse index outside [0, n_pulses)")
        if n and np.any(np.diff(self.timestamps_ps) < 0.0):
            raise ValueError("timestamps must be nondecreasing")

    def __len__(self) -> int:
        return len(self.channels)

    def events(self) -> Iterator[DetectionEvent]:
        for c, p, t in zip(self.channels, self.pulse_indices, self.timestamps_ps):
            yield DetectionEvent(int(c), int(p), float(t))

    def first_event_times(self, channel: int) -> tuple[np.ndarray, np.ndarray]:
        """Pulses with at least one click on ``channel`` and the earliest
        click time of each, both sorted by pulse index."""
        mask = self.channels == channel
        pulses = self.pulse_indices[mask]
        times = self.timestamps_ps[mask]
        uniq, first = np.unique(pulses, return_index=True)
        return uniq, times[first]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# n_pulses={self.n_pulses} seed={self.seed} "
                     f"rep_period_ps={float(self.rep_period * 1e12)!r}\n")
            for c, p, t in zip(self.channels, self.pulse_indices, self.timestamps_ps):
                fh.write(f"{c},{p},{float(t)!r}\n")

    @classmethod
    def load(cls, path) -> "EventStream":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("#"):
                raise ValueError("missing stream header line")
            meta = dict(item.split("=", 1) for item in header[1:].split())
            channels, pulses, times = [], [], []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                c, p, t = line.split(",")
                channels.append(int(c))
                pulses.append(int(p))
                times.append(float(t))
        return cls(
            channels=np.array(channels, dtype=np.int16),
            pulse_indices=np.array(pulses, dtype=np.int64),
            timestamps_ps=np.array(times, dtype=np.float64),
            n_pulses=int(meta["n_pulses"]),
            seed=int(meta["seed"]),
            rep_period=float(meta["rep_period_ps"]) / 1e12,
        )


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, chunk_index))))


def _source_from_config(config: ExperimentConfig) -> SpdcSource:
    stats = "thermal" if config.source_kind == "spdc_thermal" else "poisson"
    return SpdcSource(config.mean_pairs, config.rep_period,
                      config.pair_truncation, stats)


def _sample_pairs(rng: np.random.Generator, config: ExperimentConfig, m: int) -> np.ndarray:
    if config.source_kind == "single_photon":
        return np.ones(m, dtype=np.int64)
    cdf = np.cumsum(_source_from_config(config).pair_distribution())
    return np.searchsorted(cdf, rng.random(m), side="right").astype(np.int64)


def _detectors(config: ExperimentConfig) -> tuple[Detector, Detector, Detector]:
    return (
        Detector(config.det1_efficiency, config.det1_dark, channel_id=TRIGGER_CHANNEL),
        Detector(config.det2_efficiency, config.det2_dark, channel_id=START_CHANNEL),
        Detector(config.det3_efficiency, config.det3_dark, channel_id=STOP_CHANNEL),
    )


def _chunks(n_pulses: int) -> Iterator[tuple[int, int, int]]:
    start = 0
    index = 0
    while start < n_pulses:
        size = min(CHUNK_PULSES, n_pulses - start)
        yield index, start, size
        index += 1
        start += size


def generate_hbt_stream(config: ExperimentConfig, seed: int | None = None) -> EventStream:
    """Simulate a heralded intensity-correlation run.

    Channel 1 triggers (herald click for pair sources, laser clock for the
    coherent/thermal stand-ins), and the surviving converted-band light is
    split on a balanced splitter onto channels 2 and 3.  Dark counts share
    the pulse-locked timing of photon clicks, so a window as wide as the
    timing spread captures every same-pulse coincidence.
    """
    seed = config.require_seed() if seed is None else int(seed)
    rep_ps = config.rep_period * 1e12
    sigma_ps = config.jitter_sigma * 1e12
    s_chain = config.chain_efficiency()
    nu = config.noise_mean()
    det1, det2, det3 = _detectors(config)
    classical = config.source_kind in _CLASSICAL_KINDS

    parts: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for ci, start, m in _chunks(config.n_pulses):
        rng = _chunk_rng(seed, ci)
        if classical:
            hidx = np.arange(m, dtype=np.int64)
            mean_eff = config.mean_pairs * s_chain
            if config.source_kind == "coherent":
                n_band = rng.poisson(mean_eff, m)
            else:
                n_band = rng.geometric(1.0 / (1.0 + mean_eff), m) - 1
        else:
            k = _sample_pairs(rng, config, m)
            p_herald = det1.click_prob_fock(k)
            hidx = np.nonzero(rng.random(m) < p_herald)[0]
            n_band = rng.binomial(k[hidx], s_chain)
        nh = len(hidx)
        if nu > 0.0:
            n_band = n_band + rng.poisson(nu, nh)
        n_start = rng.binomial(n_band, 0.5)
        n_stop = n_band - n_start
        click2 = rng.random(nh) < det2.click_prob_fock(n_start)
        click3 = rng.random(nh) < det3.click_prob_fock(n_stop)
        jit1 = rng.normal(0.0, sigma_ps, nh)
        jit2 = rng.normal(0.0, sigma_ps, nh)
        jit3 = rng.normal(0.0, sigma_ps, nh)

        base = (start + hidx) * rep_ps
        pulses = start + hidx
        channels = np.concatenate([
            np.full(nh, TRIGGER_CHANNEL, dtype=np.int16),
            np.full(int(click2.sum()), START_CHANNEL, dtype=np.int16),
            np.full(int(click3.sum()), STOP_CHANNEL, dtype=np.int16),
        ])
        pulse_arr = np.concatenate([pulses, pulses[click2], pulses[click3]])
        time_arr = np.concatenate([base + jit1, (base + jit2)[click2], (base + jit3)[click3]])
        order = np.argsort(time_arr, kind="stable")
        parts.append((channels[order], pulse_arr[order], time_arr[order]))

    return EventStream(
        channels=np.concatenate([p[0] for p in parts]),
        pulse_indices=np.concatenate([p[1] for p in parts]),
        timestamps_ps=np.concatenate([p[2] for p in parts]),
        n_pulses=config.n_pulses,
        seed=seed,
        rep_period=config.rep_period,
    )


def generate_mzi_stream(config: ExperimentConfig, seed: int | None = None) -> EventStream:
    """Simulate arrival-time analysis behind the decoding interferometer.

    The heralded photon takes the short or long arm of the encoder and then
    of the decoder, so its arrival at channel 2 is offset by -delay, 0, or
    +delay relative to the pulse-locked reference; short-short and long-long
    paths both land in the central slot.  Pump-induced noise photons arrive
    uniformly across the gate, and only the earliest click per pulse is kept
    (start-stop electronics).
    """
    seed = config.require_seed() if seed is None else int(seed)
    if config.source_kind in _CLASSICAL_KINDS:
        raise ConfigError("interferometer stream needs a heralded pair source")
    rep_ps = config.rep_period * 1e12
    sigma_ps = config.jitter_sigma * 1e12
    delay_ps = config.mzi_delay * 1e12
    s_chain = config.chain_efficiency()
    nu = config.noise_mean()
    det1, det2, _ = _detectors(config)

    parts: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for ci, start, m in _chunks(config.n_pulses):
        rng = _chunk_rng(seed, ci)
        k = _sample_pairs(rng, config, m)
        hidx = np.nonzero(rng.random(m) < det1.click_prob_fock(k))[0]
        nh = len(hidx)
        pulses = start + hidx
        base = pulses * rep_ps

        survive = rng.random(nh) < 0.5 * s_chain
        long_enc = rng.random(nh) < 0.5
        long_dec = rng.random(nh) < 0.5
        sig_det = survive & (rng.random(nh) < det2.efficiency)
        offset = (long_enc.astype(np.float64) + long_dec - 1.0) * delay_ps
        sig_time = base + offset + rng.normal(0.0, sigma_ps, nh)

        cand_pulses = [pulses[sig_det]]
        cand_times = [sig_time[sig_det]]
        if nu > 0.0:
            n_noise = rng.binomial(rng.poisson(nu, nh), 0.5 * det2.efficiency)
            total = int(n_noise.sum())
            if total:
                cand_pulses.append(np.repeat(pulses, n_noise))
                cand_times.append(np.repeat(base, n_noise)
                                  + rng.uniform(-2.0 * delay_ps, 2.0 * delay_ps, total))
        if det2.dark_prob > 0.0:
            dark = rng.random(nh) < det2.dark_prob
            cand_pulses.append(pulses[dark])
            cand_times.append((base + rng.normal(0.0, sigma_ps, nh))[dark])

        cp = np.concatenate(cand_pulses)
        ct = np.concatenate(cand_times)
        order = np.lexsort((ct, cp))
        cp, ct = cp[order], ct[order]
        _, first = np.unique(cp, return_index=True)
        cp, ct = cp[first], ct[first]

        channels = np.concatenate([
            np.full(nh, TRIGGER_CHANNEL, dtype=np.int16),
            np.full(len(cp), START_CHANNEL, dtype=np.int16),
        ])
        pulse_arr = np.concatenate([pulses, cp])
        time_arr = np.concatenate([base + rng.normal(0.0, sigma_ps, nh), ct])
        order = np.argsort(time_arr, kind="stable")
        parts.append((channels[order], pulse_arr[order], time_arr[order]))

    return EventStream(
        channels=np.concatenate([p[0] for p in parts]),
        pulse_indices=np.concatenate([p[1] for p in parts]),
        timestamps_ps=np.concatenate([p[2] for p in parts]),
        n_pulses=config.n_pulses,
        seed=seed,
        rep_period=config.rep_period,
    )


class HbtRates(NamedTuple):
    p_trigger: float
    p_start: float
    p_stop: float
    p_coincidence: float
    g2: float


def expected_hbt_rates(config: ExperimentConfig) -> HbtRates:
    """Exact per-pulse click probabilities for the intensity-correlation run.

    Computed by enumerating pair numbers (threshold detectors factorize over
    independent photons, so only generating functions are needed), with
    Poissonian pump noise folded in analytically.  Serves as the analytic
    oracle the Monte Carlo stream is checked against and as the target
    function when calibrating the noise coefficient.
    """
    s_chain = config.chain_efficiency()
    nu = config.noise_mean()
    det1, det2, det3 = _detectors(config)
    q2 = det2.efficiency / 2.0
    q3 = det3.efficiency / 2.0

    def poisson_noise_factor(q: float) -> float:
        return math.exp(-nu * q)

    if config.source_kind in _CLASSICAL_KINDS:
        mean_eff = config.mean_pairs * s_chain

        def survival(q: float) -> float:
            # E[(1-q)^n] for the band photon number n
            if config.source_kind == "coherent":
                band = math.exp(-mean_eff * q)
            else:
                band = 1.0 / (1.0 + mean_eff * q)
            return band * poisson_noise_factor(q)

        p_trig = 1.0
        no2 = (1.0 - det2.dark_prob) * survival(q2)
        no3 = (1.0 - det3.dark_prob) * survival(q3)
        no23 = (1.0 - det2.dark_prob) * (1.0 - det3.dark_prob) * survival(q2 + q3)
    else:
        if config.source_kind == "single_photon":
            p_k = np.array([0.0, 1.0])
        else:
            p_k = _source_from_config(config).pair_distribution()
        k = np.arange(len(p_k))
        h_k = det1.click_prob_fock(k)
        p_trig = float(np.sum(p_k * h_k))
        if p_trig <= 0.0:
            raise ValueError("trigger never fires for this configuration")
        w_k = p_k * h_k / p_trig

        def averaged_no_click(q: float) -> float:
            return float(np.sum(w_k * (1.0 - s_chain * q) ** k)) * poisson_noise_factor(q)

        no2 = (1.0 - det2.dark_prob) * averaged_no_click(q2)
        no3 = (1.0 - det3.dark_prob) * averaged_no_click(q3)
        no23 = (1.0 - det2.dark_prob) * (1.0 - det3.dark_prob) \
            * float(np.sum(w_k * (1.0 - s_chain * (q2 + q3)) ** k)) \
            * poisson_noise_factor(q2 + q3)

    p2 = 1.0 - no2
    p3 = 1.0 - no3
    pc = 1.0 - no2 - no3 + no23
    g2 = pc / (p2 * p3) if p2 > 0.0 and p3 > 0.0 else math.nan
    return HbtRates(p_trig, p2, p3, pc, g2)


def noise_coeff_for_g2(config: ExperimentConfig, target: float,
                       upper: float = 2.0) -> float:
    """Noise coefficient at which the expected heralded g2(0) hits ``target``."""
    from scipy.optimize import brentq

    def gap(coeff: float) -> float:
        return expected_hbt_rates(replace(config, noise_coeff=coeff)).g2 - target

    lo = gap(0.0)
    if lo > 0.0:
        raise ValueError(f"g2 already exceeds target at zero noise ({lo + target:.4f})")
    return float(brentq(gap, 0.0, upper, xtol=1e-15, rtol=1e-14))
