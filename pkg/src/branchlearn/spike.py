"""Leaky integrate-and-fire simulation of the full spiking classifier.

Synaptic currents follow a double-exponential kernel, so every branch only
needs two exponential state variables (rise and fall sums); impulses are
O(1) per spike and the decay between steps is exact.  Branch input currents
pass through the configured nonlinearity, somatic currents integrate a LIF
membrane with exponential-Euler updates, and the class is read out by
comparing output spike counts.

Current normalization: branch inputs are divided by `current_scale` (the
per-synapse current scale of the encoding - the time-averaged single-afferent
current for rate inputs, the unit kernel peak for single-spike inputs) before
the nonlinearity, which makes the nonlinearity's threshold and saturation
directly comparable with the abstract model.  `drive_gain` rescales branch
output currents so the somatic current stays inside the dynamic range the
spike counter can resolve; values below 1 play the role of a raised dendritic
current threshold for large neurons.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import rngs
from .model import Connectome, ModelKind, NonlinearityConfig, branch_output
from .patterns import SpikePattern


@dataclass(frozen=True)
class LifParams:
    r_mohm: float = 10.0      # membrane resistance (MOhm); mV = nA * MOhm
    c_nf: float = 5.0         # capacitance (nF); tau_m = R*C in ms
    v_thr: float = 10.0       # firing threshold (mV)
    duration: float = 200.0   # pattern window (ms)
    dt: float = 0.1           # step (ms)
    tau_r: float = 2.0        # kernel rise constant (ms)
    tau_f: float = 8.0        # kernel fall constant (ms)
    i_0: float = 2.12         # kernel normalization

    def __post_init__(self):
        if not self.tau_f > self.tau_r > 0:
            raise ValueError("need tau_f > tau_r > 0")
        if self.dt > self.tau_r / 4:
            raise ValueError("dt must be <= tau_r / 4")
        if self.v_thr <= 0:
            raise ValueError("v_thr must be positive")

    @property
    def tau_m(self) -> float:
        return self.r_mohm * self.c_nf

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class SpikeBranchConfig:
    """Branch-level configuration of the spiking model."""

    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    kind: ModelKind = ModelKind.NONLINEAR
    current_scale: float = 1.0
    drive_gain: float = 1.0


@dataclass
class SimResult:
    n_spk_plus: int
    n_spk_minus: int
    mean_branch_in_plus: np.ndarray
    mean_branch_in_minus: np.ndarray
    mean_branch_out_plus: np.ndarray
    mean_branch_out_minus: np.ndarray
    v_trace: np.ndarray | None = None   # (n_steps, 2) when recorded
    t_grid: np.ndarray | None = None


def kernel(t, params: LifParams):
    """Postsynaptic current waveform; zero for t < 0."""
    t = np.asarray(t, dtype=np.float64)
    out = params.i_0 * (np.exp(-t / params.tau_f) - np.exp(-t / params.tau_r))
    out = np.where(t < 0, 0.0, out)
    return out if out.ndim else float(out)


def kernel_peak_time(params: LifParams) -> float:
    tf, tr = params.tau_f, params.tau_r
    return math.log(tf / tr) * tf * tr / (tf - tr)


def rate_current_scale(f_hz: float, params: LifParams) -> float:
    """Time-averaged current of one afferent firing at f_hz (integral of the kernel
    times the rate)."""
    return f_hz / 1000.0 * params.i_0 * (params.tau_f - params.tau_r)


def branch_current(branch: np.ndarray, spikes: SpikePattern, t,
                   cfg: SpikeBranchConfig, params: LifParams):
    """Branch output current at times t, by direct kernel summation.

    O(spikes * len(t)); meant for diagnostics and cross-checks, not batch use.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    total = np.zeros_like(t)
    for line in np.asarray(branch).ravel():
        for t_s in spikes.spikes[int(line)]:
            total += kernel(t - t_s, params)
    z_hat = total / cfg.current_scale
    out = cfg.drive_gain * np.asarray(branch_output(z_hat, cfg.nonlinearity, cfg.kind))
    return out if out.shape != (1,) else float(out[0])


def _slot_map(table: np.ndarray, d: int):
    """CSR-style afferent -> branch slots map for one neuron."""
    lines = table.ravel()
    branches = np.repeat(np.arange(table.shape[0]), table.shape[1])
    order = np.argsort(lines, kind="stable")
    sorted_lines = lines[order]
    sorted_branches = branches[order].astype(np.int64)
    indptr = np.searchsorted(sorted_lines, np.arange(d + 1))
    return indptr, sorted_branches


def _expand_events(ev_pattern, ev_aff, ev_step, indptr, sorted_branches):
    """Spread afferent events onto the branches holding that afferent."""
    starts = indptr[ev_aff]
    lens = indptr[ev_aff + 1] - starts
    total = int(lens.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty
    reps = np.repeat(np.arange(len(ev_aff)), lens)
    offsets = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
    slot_idx = starts[reps] + offsets
    return ev_pattern[reps], sorted_branches[slot_idx], ev_step[reps]


class _BranchDrive:
    """Rise/fall exponential state of every (pattern, branch) pair of one neuron."""

    def __init__(self, table, d, n_patterns, params, ev_pattern, ev_aff, ev_step):
        self.m = table.shape[0]
        self.n_cells = n_patterns * self.m
        self.fall = np.zeros(self.n_cells)
        self.rise = np.zeros(self.n_cells)
        self.decay_f = math.exp(-params.dt / params.tau_f)
        self.decay_r = math.exp(-params.dt / params.tau_r)
        self.i_0 = params.i_0
        indptr, sorted_branches = _slot_map(table, d)
        pat, branch, step = _expand_events(ev_pattern, ev_aff, ev_step,
                                           indptr, sorted_branches)
        order = np.argsort(step, kind="stable")
        self.ev_cell = pat[order] * self.m + branch[order]
        self.ev_bounds = np.searchsorted(step[order],
                                         np.arange(params.n_steps + 1))

    def advance(self, step: int) -> np.ndarray:
        self.fall *= self.decay_f
        self.rise *= self.decay_r
        lo, hi = self.ev_bounds[step], self.ev_bounds[step + 1]
        if hi > lo:
            impulse = np.bincount(self.ev_cell[lo:hi],
                                  minlength=self.n_cells).astype(np.float64)
            self.fall += impulse
            self.rise += impulse
        return (self.i_0 * (self.fall - self.rise)).reshape(-1, self.m)


def _spike_events_from_patterns(spike_patterns) -> tuple:
    """Flatten SpikePatterns into (pattern, afferent, time) arrays."""
    pats, affs, times = [], [], []
    for p, sp in enumerate(spike_patterns):
        for a, train in enumerate(sp.spikes):
            if len(train):
                pats.extend([p] * len(train))
                affs.extend([a] * len(train))
                times.extend(train)
    return (np.asarray(pats, dtype=np.int64), np.asarray(affs, dtype=np.int64),
            np.asarray(times, dtype=np.float64))


def simulate_events(ev_pattern, ev_aff, ev_time, n_patterns, conn: Connectome,
                    lif: LifParams, cfg: SpikeBranchConfig, differential: bool = False,
                    record: bool = False):
    """Core batched simulation; returns spike counts and diagnostics.

    Spikes are binned to the step after their arrival time, where the kernel
    value is still ~0, so binning error stays below one step.
    """
    ev_step = np.minimum((ev_time / lif.dt).astype(np.int64), lif.n_steps - 1)
    drive_plus = _BranchDrive(conn.plus, conn.d, n_patterns, lif,
                              ev_pattern, ev_aff, ev_step)
    drive_minus = _BranchDrive(conn.minus, conn.d, n_patterns, lif,
                               ev_pattern, ev_aff, ev_step)
    v = np.zeros((n_patterns, 2))
    counts = np.zeros((n_patterns, 2), dtype=np.int64)
    decay_m = math.exp(-lif.dt / lif.tau_m)
    gain_in = lif.r_mohm * (1.0 - decay_m)
    mean_in = [np.zeros((n_patterns, conn.m)), np.zeros((n_patterns, conn.m))]
    mean_out = [np.zeros((n_patterns, conn.m)), np.zeros((n_patterns, conn.m))]
    traces = np.zeros((lif.n_steps, n_patterns, 2)) if record else None
    nl, kind = cfg.nonlinearity, cfg.kind

    for step in range(lif.n_steps):
        i_sum = []
        for idx, drive in enumerate((drive_plus, drive_minus)):
            i_branch = drive.advance(step)
            z_hat = i_branch / cfg.current_scale
            out = cfg.drive_gain * np.asarray(branch_output(z_hat, nl, kind))
            mean_in[idx] += i_branch
            mean_out[idx] += out
            i_sum.append(out.sum(axis=1))
        i_plus, i_minus = i_sum
        if differential:
            i_cell = np.stack([np.maximum(i_plus - i_minus, 0.0),
                               np.maximum(i_minus - i_plus, 0.0)], axis=1)
        else:
            i_cell = np.stack([i_plus, i_minus], axis=1)
        v = v * decay_m + i_cell * gain_in
        fired = v >= lif.v_thr
        if fired.any():
            counts[fired] += 1
            v[fired] = 0.0
        if record:
            traces[step] = v

    n_steps = lif.n_steps
    return counts, [m / n_steps for m in mean_in], [m / n_steps for m in mean_out], traces


def simulate_pair(spikes: SpikePattern, conn: Connectome, lif: LifParams,
                  cfg: SpikeBranchConfig, differential: bool = False,
                  record: bool = False) -> SimResult:
    """Simulate both neurons on one spike pattern."""
    ev_p, ev_a, ev_t = _spike_events_from_patterns([spikes])
    counts, mean_in, mean_out, traces = simulate_events(
        ev_p, ev_a, ev_t, 1, conn, lif, cfg, differential, record)
    return SimResult(
        n_spk_plus=int(counts[0, 0]),
        n_spk_minus=int(counts[0, 1]),
        mean_branch_in_plus=mean_in[0][0],
        mean_branch_in_minus=mean_in[1][0],
        mean_branch_out_plus=mean_out[0][0],
        mean_branch_out_minus=mean_out[1][0],
        v_trace=traces[:, 0, :] if record else None,
        t_grid=np.arange(1, lif.n_steps + 1) * lif.dt if record else None,
    )


def classify_spikes(spikes: SpikePattern, conn: Connectome, lif: LifParams,
                    cfg: SpikeBranchConfig, differential: bool = False) -> int:
    """1 iff the (+) neuron out-spikes the (-) neuron."""
    res = simulate_pair(spikes, conn, lif, cfg, differential)
    return int(res.n_spk_plus > res.n_spk_minus)


# -- batched encode-and-classify paths ------------------------------------

def _rate_events(X: np.ndarray, f_high: float, f_low: float, duration: float,
                 seed: int) -> tuple:
    """Poisson spike events for a whole pattern matrix.

    Stream derivation matches patterns.to_rate_spikes: (seed, stream,
    pattern index, afferent index), so batched and single-pattern paths
    produce identical trains.
    """
    pats, affs, times = [], [], []
    P, d = X.shape
    for p in range(P):
        for a in range(d):
            rate_hz = f_high if X[p, a] else f_low
            if rate_hz <= 0:
                continue
            rng = rngs.stream(seed, rngs.RATE_SPIKES, p, a)
            n = rng.poisson(rate_hz * duration / 1000.0)
            if n:
                t = rng.uniform(0.0, duration, size=n)
                pats.append(np.full(n, p, dtype=np.int64))
                affs.append(np.full(n, a, dtype=np.int64))
                times.append(t)
    if not pats:
        e = np.empty(0, dtype=np.int64)
        return e, e, np.empty(0)
    return np.concatenate(pats), np.concatenate(affs), np.concatenate(times)


def _single_spike_events(X: np.ndarray, t_syn: float, jitter: float,
                         duration: float, seed: int) -> tuple:
    if t_syn - jitter / 2 < 0 or t_syn + jitter / 2 > duration:
        raise ValueError("spike window outside [0, duration]")
    pats, affs, times = [], [], []
    P, d = X.shape
    for p in range(P):
        active = np.flatnonzero(X[p])
        for a in active:
            if jitter == 0:
                t = t_syn
            else:
                rng = rngs.stream(seed, rngs.SINGLE_SPIKES, p, int(a))
                t = rng.uniform(t_syn - jitter / 2, t_syn + jitter / 2)
            pats.append(p)
            affs.append(int(a))
            times.append(t)
    return (np.asarray(pats, dtype=np.int64), np.asarray(affs, dtype=np.int64),
            np.asarray(times, dtype=np.float64))


def classify_spike_batch(X, conn: Connectome, lif: LifParams, cfg: SpikeBranchConfig,
                         *, f_high: float, f_low: float, seed: int = 0,
                         differential: bool = False) -> np.ndarray:
    """Rate-encode every row of X and classify it with the spiking model."""
    X = np.asarray(X)
    ev_p, ev_a, ev_t = _rate_events(X, f_high, f_low, lif.duration, seed)
    counts, _, _, _ = simulate_events(ev_p, ev_a, ev_t, X.shape[0], conn, lif, cfg,
                                      differential)
    return (counts[:, 0] > counts[:, 1]).astype(np.int64)


def classify_single_spike_batch(X, conn: Connectome, lif: LifParams,
                                cfg: SpikeBranchConfig, *, t_syn: float,
                                jitter: float, seed: int = 0,
                                differential: bool = False) -> np.ndarray:
    """Single-spike-encode every row of X and classify it."""
    X = np.asarray(X)
    ev_p, ev_a, ev_t = _single_spike_events(X, t_syn, jitter, lif.duration, seed)
    counts, _, _, _ = simulate_events(ev_p, ev_a, ev_t, X.shape[0], conn, lif, cfg,
                                      differential)
    return (counts[:, 0] > counts[:, 1]).astype(np.int64)


def validity_check(k_synapses: int, f_high_list, tau_f_list, lif: LifParams,
                   cfg: SpikeBranchConfig, seed: int = 0, n_draws: int = 32,
                   duration: float | None = None) -> list:
    """Compare time-averaged vs instantaneous nonlinear branch currents.

    For each (f_high, tau_f) pair, a single branch with k synapses receives
    independent Poisson trains.  `predicted` applies the nonlinearity to the
    time-averaged input current; `actual` time-averages the instantaneous
    nonlinear output.  Their relative deviation shrinks as f_high*tau_f
    grows.  Returns rows (f_high*tau_f, predicted, actual, rel_deviation).
    """
    rows = []
    duration = duration or lif.duration
    for f_high, tau_f in zip(f_high_list, tau_f_list):
        params = LifParams(r_mohm=lif.r_mohm, c_nf=lif.c_nf, v_thr=lif.v_thr,
                           duration=duration, dt=lif.dt, tau_r=lif.tau_r,
                           tau_f=tau_f, i_0=lif.i_0)
        scale = rate_current_scale(f_high, params)
        branch_cfg = SpikeBranchConfig(nonlinearity=cfg.nonlinearity, kind=cfg.kind,
                                       current_scale=scale, drive_gain=1.0)
        conn = Connectome(plus=np.arange(k_synapses)[None, :],
                          minus=np.arange(k_synapses)[None, :], d=k_synapses)
        X = np.ones((n_draws, k_synapses), dtype=np.uint8)
        ev_p, ev_a, ev_t = _rate_events(X, f_high, 0.0, duration,
                                        seed + int(round(f_high * tau_f * 1000)))
        _, mean_in, mean_out, _ = simulate_events(ev_p, ev_a, ev_t, n_draws, conn,
                                                  params, branch_cfg)
        z_avg = mean_in[0][:, 0] / scale
        predicted = float(np.mean(np.asarray(
            branch_output(z_avg, cfg.nonlinearity, cfg.kind))))
        actual = float(np.mean(mean_out[0][:, 0]))
        rows.append((f_high * tau_f / 1000.0, predicted, actual,
                     (actual - predicted) / actual))
    return rows
