"""Random classification tasks and their spike encodings.

Tasks are built by drawing low-dimensional Gaussian vectors and encoding each
coordinate with a bank of non-overlapping one-hot receptive fields (RFs) at
equiprobable quantile boundaries, so each bit is active with probability
1/n_rf exactly.  Binary vectors convert to spikes either as homogeneous
Poisson trains (rate code) or as one jittered spike per active afferent.
"""

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from . import rngs


@dataclass(frozen=True)
class BinaryPattern:
    bits: np.ndarray  # uint8, shape (d,)
    label: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be 0/1")
        object.__setattr__(self, "bits", bits)
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")

    @property
    def d(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class SpikePattern:
    """Per-afferent ascending spike times (ms) over a stimulus window [0, T]."""

    spikes: tuple
    duration: float

    def __post_init__(self):
        clean = []
        for train in self.spikes:
            arr = np.asarray(train, dtype=np.float64)
            if arr.size and (arr.min() < 0 or arr.max() > self.duration):
                raise ValueError("spike time outside [0, duration]")
            if arr.size > 1 and not (np.diff(arr) > 0).all():
                raise ValueError("spike times must be strictly ascending")
            clean.append(arr)
        object.__setattr__(self, "spikes", tuple(clean))

    @property
    def d(self) -> int:
        return len(self.spikes)

    def counts(self) -> np.ndarray:
        return np.array([len(t) for t in self.spikes])


@dataclass(frozen=True)
class TaskSpec:
    d_o: int
    n_rf: int
    n_patterns: int
    seed: int = 0

    def __post_init__(self):
        if self.d_o < 1 or self.n_rf < 1:
            raise ValueError("d_o and n_rf must be >= 1")
        if self.n_patterns < 2:
            raise ValueError("need at least 2 patterns")

    @property
    def d(self) -> int:
        return self.d_o * self.n_rf


def gaussian_rf_boundaries(n_rf: int) -> np.ndarray:
    """Equiprobable boundaries for a standard normal marginal (n_rf - 1 values)."""
    nd = NormalDist()
    return np.array([nd.inv_cdf(i / n_rf) for i in range(1, n_rf)])


def rf_encode(value: float, boundaries: np.ndarray) -> np.ndarray:
    """One-hot quantile encoding of a scalar.

    Intervals are lower-exclusive / upper-inclusive: a value exactly on a
    boundary belongs to the lower interval.  Bit i is set iff value lies in
    (boundary[i-1], boundary[i]], with open ends below/above the first/last
    boundary.
    """
    boundaries = np.asarray(boundaries, dtype=np.float64)
    if boundaries.size and not (np.diff(boundaries) > 0).all():
        raise ValueError("boundaries must be strictly ascending")
    idx = int(np.searchsorted(boundaries, value, side="left"))
    out = np.zeros(boundaries.size + 1, dtype=np.uint8)
    out[idx] = 1
    return out


def rf_encode_matrix(values: np.ndarray, boundary_list) -> np.ndarray:
    """Encode a (P, d_o) real matrix into (P, sum of bins) one-hot groups."""
    values = np.asarray(values, dtype=np.float64)
    cols = []
    for j, boundaries in enumerate(boundary_list):
        boundaries = np.asarray(boundaries, dtype=np.float64)
        idx = np.searchsorted(boundaries, values[:, j], side="left")
        block = np.zeros((values.shape[0], boundaries.size + 1), dtype=np.uint8)
        block[np.arange(values.shape[0]), idx] = 1
        cols.append(block)
    return np.concatenate(cols, axis=1)


def generate_random_task(spec: TaskSpec) -> list:
    """P labelled patterns with exactly one active RF bit per original dimension.

    Values come from a d_o-dimensional spherical Gaussian; labels from an
    independent fair coin per pattern, redrawn if either class ends up empty.
    Each pattern's draw sits on its own seed stream, so generation order is
    irrelevant.
    """
    boundaries = gaussian_rf_boundaries(spec.n_rf)
    boundary_list = [boundaries] * spec.d_o
    values = np.stack([
        rngs.stream(spec.seed, rngs.TASK_VALUES, i).standard_normal(spec.d_o)
        for i in range(spec.n_patterns)
    ])
    bits = rf_encode_matrix(values, boundary_list)
    for attempt in range(1000):
        labels = rngs.stream(spec.seed, rngs.TASK_LABELS, attempt).integers(
            0, 2, size=spec.n_patterns)
        if 0 < labels.sum() < spec.n_patterns:
            break
    else:
        raise RuntimeError("could not draw non-degenerate labels")
    return [BinaryPattern(bits[i], int(labels[i])) for i in range(spec.n_patterns)]


def patterns_to_matrix(patterns) -> tuple:
    """Stack patterns into (X uint8 of shape (P, d), labels int64 of shape (P,))."""
    X = np.stack([p.bits for p in patterns])
    labels = np.array([p.label for p in patterns], dtype=np.int64)
    return X, labels


def to_rate_spikes(pattern, f_high: float, f_low: float, duration: float,
                   seed: int = 0, pattern_id: int = 0) -> SpikePattern:
    """Poisson train per afferent: rate f_high where the bit is 1, f_low where 0."""
    bits = pattern.bits if isinstance(pattern, BinaryPattern) else np.asarray(pattern)
    if not f_high > f_low or f_low < 0:
        raise ValueError("need f_high > f_low >= 0")
    trains = []
    for a, bit in enumerate(bits):
        rate_hz = f_high if bit else f_low
        rng = rngs.stream(seed, rngs.RATE_SPIKES, pattern_id, a)
        n = rng.poisson(rate_hz * duration / 1000.0)
        times = np.sort(rng.uniform(0.0, duration, size=n))
        # strictly ascending: nudge exact duplicates apart (measure-zero event)
        for i in range(1, len(times)):
            if times[i] <= times[i - 1]:
                times[i] = np.nextafter(times[i - 1], np.inf)
        trains.append(times)
    return SpikePattern(tuple(trains), duration)


def to_single_spikes(pattern, t_syn: float, jitter: float, duration: float,
                     seed: int = 0, pattern_id: int = 0) -> SpikePattern:
    """One spike per active afferent, uniform in [t_syn - jitter/2, t_syn + jitter/2].

    jitter=0 places the spike exactly at t_syn (deterministic).
    """
    bits = pattern.bits if isinstance(pattern, BinaryPattern) else np.asarray(pattern)
    if t_syn - jitter / 2 < 0 or t_syn + jitter / 2 > duration:
        raise ValueError("spike window outside [0, duration]")
    trains = []
    for a, bit in enumerate(bits):
        if not bit:
            trains.append(np.empty(0))
        elif jitter == 0:
            trains.append(np.array([t_syn]))
        else:
            rng = rngs.stream(seed, rngs.SINGLE_SPIKES, pattern_id, a)
            trains.append(rng.uniform(t_syn - jitter / 2, t_syn + jitter / 2, size=1))
    return SpikePattern(tuple(trains), duration)
