"""Branch-specific spike-time-dependent structural plasticity.

The membrane has two state variables: a fast voltage V and a slow
hyperpolarization u that V relaxes toward, so a forced (teacher) spike at the
start of a trial leaves the neuron recovering from below zero when the input
volley arrives.  Synapse scores are built online from two event types:

* potentiation - at each presynaptic spike, the branch output current gated
  by the postsynaptic trace (alive only after a post spike, e.g. the teacher);
* depression - at the trial's first upward crossing of a subthreshold level
  V_st, the branch output current gated by that synapse's presynaptic trace,
  scaled by a balance constant gamma chosen so the two terms cancel on
  correctly classified patterns.  Later crossings are logged as diagnostics
  but do not score.

Requiring the teacher-hyperpolarized neuron to reach V_st (rather than the
firing threshold) during learning builds a voltage margin into the wiring:
after learning, starting from rest, the same drive clears V_thr with room to
spare.  V_st and the reset level are solved from the requested margin so both
classes enjoy the same margin.

Because training patterns are synchronized single spikes, a trial's somatic
drive is a common waveform K(t - t_syn)^p times an integer-valued amplitude,
so trials collapse onto a memoized amplitude -> response map; noisy (jittered)
testing runs the full vectorized simulation instead.
"""

from dataclasses import dataclass
import math

import numpy as np

from .learning import LearnConfig, TrainTrace, run_structural_training
from .model import Connectome
from .patterns import SpikePattern
from .spike import LifParams, SpikeBranchConfig, _BranchDrive, kernel, \
    _single_spike_events, _spike_events_from_patterns


@dataclass(frozen=True)
class BstdspParams:
    tau_v: float = 4.0         # fast membrane constant (ms)
    tau_u: float = 80.0        # hyperpolarization recovery constant (ms)
    tau_pre: float = 10.0      # presynaptic trace constant (ms)
    tau_post: float = 50.0     # postsynaptic trace constant (ms)
    t_syn: float = 100.0       # input spike time (ms)
    v_thr: float = 0.1         # firing threshold (mV); low so both neurons respond
    v_st: float = 0.1          # subthreshold crossing level; v_thr - margin
    v_reset: float = 0.0       # post-spike reset for V and u (<= 0)
    gamma: float = 1.0         # potentiation/depression balance
    teacher_time: float = 1.0  # forced post spike time (ms)
    duration: float = 200.0
    dt: float = 0.05
    drive_gain: float = 1.0    # somatic scaling of branch output currents

    def __post_init__(self):
        if not 0 < self.v_st <= self.v_thr:
            raise ValueError("need 0 < v_st <= v_thr")
        if self.v_reset > 0:
            raise ValueError("v_reset must be <= 0")
        if self.teacher_time >= self.t_syn:
            raise ValueError("teacher must precede the input volley")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass
class BstdspEvents:
    """Event log of one two-neuron trial (times in ms)."""

    pre_times: list            # (afferent, time)
    post_times: dict           # sign -> list of post spike times (teacher excluded)
    teacher_sign: int | None
    crossings: dict            # sign -> list of V_st upward-crossing times
    branch_peaks: dict         # sign -> (m,) peak branch output current
    n_spk: dict                # sign -> input-driven spike count
    v_trace: np.ndarray | None = None
    t_grid: np.ndarray | None = None


def teacher_state_at(t_rel: float, params: BstdspParams, u0: float) -> float:
    """Closed-form V(t_rel) after a reset to (V, u) = (u0, u0) at t_rel = 0."""
    tv, tu = params.tau_v, params.tau_u
    ev, eu = math.exp(-t_rel / tv), math.exp(-t_rel / tu)
    return u0 * ev + u0 * (tu / (tu - tv)) * (eu - ev)


def _membrane_step(v, u, drive, params: BstdspParams):
    """One exponential-Euler step of the two-state membrane."""
    decay_v = math.exp(-params.dt / params.tau_v)
    decay_u = math.exp(-params.dt / params.tau_u)
    u_next = u * decay_u
    v_next = v * decay_v + (u + drive) * (1.0 - decay_v)
    return v_next, u_next


class CoincidentResponseMap:
    """Memoized membrane response to amplitude * K(t - t_syn)^p drives.

    Caches, per integer amplitude key and initial condition, whether V_st was
    crossed, the first crossing time (relative to t_syn), the accumulated
    depression trace factor sum(exp(-(t_cross - t_syn)/tau_pre)), and the
    output spike count.
    """

    def __init__(self, params: BstdspParams, exponent: int, amp_unit: float):
        self.params = params
        self.amp_unit = amp_unit      # drive amplitude per integer key unit
        horizon = min(params.duration - params.t_syn, 120.0)
        steps = int(round(horizon / params.dt))
        lif_like = LifParams(duration=params.duration, dt=params.dt)
        t_rel = np.arange(1, steps + 1) * params.dt
        self.template = kernel(t_rel, lif_like) ** exponent
        self.n_steps = steps
        # teacher-hyperpolarized state at the volley, per unit reset value
        self.teacher_factor_v = teacher_state_at(params.t_syn - params.teacher_time,
                                                 params, 1.0)
        self.teacher_factor_u = math.exp(-(params.t_syn - params.teacher_time)
                                         / params.tau_u)
        self._cache: dict = {}

    def _simulate(self, amplitudes: np.ndarray, teachered: bool) -> np.ndarray:
        """Vectorized over amplitudes; returns rows (crossed, t_rise, dep, n_spk)."""
        p = self.params
        n = len(amplitudes)
        if teachered:
            v = np.full(n, p.v_reset * self.teacher_factor_v)
            u = np.full(n, p.v_reset * self.teacher_factor_u)
        else:
            v = np.zeros(n)
            u = np.zeros(n)
        decay_v = math.exp(-p.dt / p.tau_v)
        decay_u = math.exp(-p.dt / p.tau_u)
        crossed = np.zeros(n, dtype=bool)
        t_rise = np.full(n, np.nan)
        dep = np.zeros(n)
        n_spk = np.zeros(n, dtype=np.int64)
        for step in range(self.n_steps):
            drive = amplitudes * self.template[step]
            v_new = v * decay_v + (u + drive) * (1.0 - decay_v)
            u = u * decay_u
            up = (v < p.v_st) & (v_new >= p.v_st)
            if up.any():
                idx = np.flatnonzero(up)
                frac = np.clip((p.v_st - v[idx]) / (v_new[idx] - v[idx]), 0.0, 1.0)
                t_cross = (step + frac) * p.dt   # relative to the volley
                # only the first crossing scores: one depression event per
                # trial, mirroring the single potentiation event
                fresh = ~crossed[idx]
                dep[idx[fresh]] += np.exp(-t_cross[fresh] / p.tau_pre)
                t_rise[idx[fresh]] = t_cross[fresh]
                crossed[idx] = True
            fired = v_new >= p.v_thr
            if fired.any():
                n_spk[fired] += 1
                v_new[fired] = p.v_reset
                u[fired] = p.v_reset
            v = v_new
        return np.stack([crossed.astype(np.float64), t_rise, dep,
                         n_spk.astype(np.float64)], axis=1)

    def query(self, keys: np.ndarray, teachered: bool) -> np.ndarray:
        """Rows (crossed, t_rise_rel, dep_factor, n_spk) for integer drive keys."""
        keys = np.asarray(keys, dtype=np.int64)
        uniq = np.unique(keys)
        missing = [k for k in uniq if (int(k), teachered) not in self._cache]
        if missing:
            rows = self._simulate(np.asarray(missing, dtype=np.float64)
                                  * self.amp_unit, teachered)
            for k, row in zip(missing, rows):
                self._cache[(int(k), teachered)] = row
        return np.stack([self._cache[(int(k), teachered)] for k in keys])


def simulate_bstdsp(spikes: SpikePattern, conn: Connectome, params: BstdspParams,
                    branch_cfg: SpikeBranchConfig, teacher: int | None = None,
                    record: bool = False) -> BstdspEvents:
    """Full two-neuron trial on arbitrary spike input (differential wiring).

    The teacher bit (class label) forces a post spike at teacher_time in the
    matching neuron and suppresses it in the other.  Returns the event log
    needed by the plasticity rule; forced teacher spikes are logged separately
    and not counted in n_spk.
    """
    from .model import branch_output
    ev_p, ev_a, ev_t = _spike_events_from_patterns([spikes])
    ev_step = np.minimum((ev_t / params.dt).astype(np.int64), params.n_steps - 1)
    lif_like = LifParams(duration=params.duration, dt=params.dt)
    drives = {
        +1: _BranchDrive(conn.plus, conn.d, 1, lif_like, ev_p, ev_a, ev_step),
        -1: _BranchDrive(conn.minus, conn.d, 1, lif_like, ev_p, ev_a, ev_step),
    }
    teacher_sign = None if teacher is None else (+1 if teacher == 1 else -1)
    teacher_step = int(round(params.teacher_time / params.dt))
    v = {+1: 0.0, -1: 0.0}
    u = {+1: 0.0, -1: 0.0}
    events = BstdspEvents(
        pre_times=[(int(a), float(t)) for a, t in zip(ev_a, ev_t)],
        post_times={+1: [], -1: []},
        teacher_sign=teacher_sign,
        crossings={+1: [], -1: []},
        branch_peaks={+1: np.zeros(conn.m), -1: np.zeros(conn.m)},
        n_spk={+1: 0, -1: 0},
    )
    trace = np.zeros((params.n_steps, 2)) if record else None
    for step in range(params.n_steps):
        out = {}
        for sign in (+1, -1):
            i_branch = drives[sign].advance(step)[0]
            z_hat = i_branch / branch_cfg.current_scale
            b_out = params.drive_gain * np.asarray(
                branch_output(z_hat, branch_cfg.nonlinearity, branch_cfg.kind))
            events.branch_peaks[sign] = np.maximum(events.branch_peaks[sign], b_out)
            out[sign] = b_out.sum()
        net = {+1: max(out[+1] - out[-1], 0.0), -1: max(out[-1] - out[+1], 0.0)}
        for sign in (+1, -1):
            if teacher_sign == sign and step == teacher_step:
                v[sign] = params.v_reset
                u[sign] = params.v_reset
            v_new, u_new = _membrane_step(v[sign], u[sign], net[sign], params)
            if v[sign] < params.v_st <= v_new:
                frac = (params.v_st - v[sign]) / (v_new - v[sign])
                events.crossings[sign].append((step + frac) * params.dt)
            if v_new >= params.v_thr:
                events.post_times[sign].append((step + 1) * params.dt)
                events.n_spk[sign] += 1
                v_new, u_new = params.v_reset, params.v_reset
            v[sign], u[sign] = v_new, u_new
        if record:
            trace[step] = (v[+1], v[-1])
    if record:
        events.v_trace = trace
        events.t_grid = np.arange(1, params.n_steps + 1) * params.dt
    return events


def accumulate_dc(events: BstdspEvents, conn: Connectome, bits: np.ndarray,
                  params: BstdspParams) -> tuple:
    """Per-slot score increments from one trial's event log.

    Potentiation samples the postsynaptic trace at each presynaptic spike;
    depression samples each synapse's presynaptic trace at the trial's first
    V_st upward crossing (repeated crossings stay in the event log as
    diagnostics but do not score, keeping one depression event per trial to
    mirror the single potentiation event).  The branch-current factor uses
    the branch's peak output during the trial, which for a synchronized
    volley equals the nonlinearity of the branch's active-synapse count.
    """
    bits = np.asarray(bits)
    out = {}
    for sign in (+1, -1):
        table = conn.table(sign)
        dc = np.zeros(table.shape)
        peaks = events.branch_peaks[sign]
        pre_of_aff: dict = {}
        for a, t in events.pre_times:
            pre_of_aff.setdefault(a, []).append(t)
        post = ([params.teacher_time] if events.teacher_sign == sign else []) \
            + events.post_times[sign]
        for j in range(table.shape[0]):
            for slot in range(table.shape[1]):
                line = int(table[j, slot])
                if not bits[line]:
                    continue
                for t_pre in pre_of_aff.get(line, ()):
                    prior = [t for t in post if t <= t_pre]
                    if prior:
                        r_bar = math.exp(-(t_pre - max(prior)) / params.tau_post)
                        dc[j, slot] += peaks[j] * r_bar
                for t_cross in events.crossings[sign][:1]:
                    prior = [t for t in pre_of_aff.get(line, ()) if t <= t_cross]
                    if prior:
                        s_bar = math.exp(-(t_cross - max(prior)) / params.tau_pre)
                        dc[j, slot] -= params.gamma * peaks[j] * s_bar
        out[sign] = dc
    return out[+1], out[-1]


# -- calibration -----------------------------------------------------------

def free_peak_response(params: BstdspParams, exponent: int) -> float:
    """Peak free-membrane voltage per unit drive amplitude (no resets)."""
    horizon = min(params.duration - params.t_syn, 120.0)
    steps = int(round(horizon / params.dt))
    lif_like = LifParams(duration=params.duration, dt=params.dt)
    t_rel = np.arange(1, steps + 1) * params.dt
    template = kernel(t_rel, lif_like) ** exponent
    v = u = 0.0
    peak = 0.0
    for step in range(steps):
        v, u = _membrane_step(v, u, template[step], params)
        peak = max(peak, v)
    return peak


def measure_eta(params: BstdspParams, branch_cfg: SpikeBranchConfig) -> float:
    """Peak voltage from activating a single synapse (unit abstract margin)."""
    from .model import b as b_plain
    single = params.drive_gain * float(
        b_plain(1.0, branch_cfg.nonlinearity))
    return free_peak_response(params, branch_cfg.nonlinearity.exponent) * single


def calibrate_margins(delta: float, params: BstdspParams,
                      branch_cfg: SpikeBranchConfig) -> tuple:
    """(v_st, v_reset) that give both classes a margin of delta abstract units.

    The learning-time criterion is crossing v_st: from rest it leaves
    (v_thr - v_st) of slack, and from the teacher-hyperpolarized start it
    demands the extra climb (v_st - V'(t_syn)) - v_thr.  Equal margins pin
    both thresholds once eta (volts per abstract unit) is measured.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    eta = measure_eta(params, branch_cfg)
    delta_spike = eta * delta
    if delta_spike >= params.v_thr:
        raise ValueError(
            f"margin {delta} maps to {delta_spike:.4f} mV >= v_thr={params.v_thr}; "
            "reduce the margin or raise drive")
    v_st = params.v_thr - delta_spike
    target_v_at_syn = v_st - params.v_thr - delta_spike   # = -2 * delta_spike
    rho = teacher_state_at(params.t_syn - params.teacher_time, params, 1.0)
    v_reset = target_v_at_syn / rho if target_v_at_syn else 0.0
    return v_st, v_reset


def calibrate_drive_gain(X, conn: Connectome, params: BstdspParams,
                         branch_cfg: SpikeBranchConfig, headroom: float = 4.0) -> float:
    """Scale branch outputs so typical peak drives sit at headroom * v_thr.

    Keeps the spike domain's dynamic range matched to the task: the standard
    deviation of the two neurons' somatic amplitude difference maps to
    headroom * v_thr of free membrane peak.
    """
    from .model import branch_activations, branch_output as b_out
    z_p = branch_activations(conn.plus, np.asarray(X, dtype=np.float64))
    z_m = branch_activations(conn.minus, np.asarray(X, dtype=np.float64))
    cfg = branch_cfg.nonlinearity
    amp = (np.asarray(b_out(z_p, cfg, branch_cfg.kind)).sum(axis=1)
           - np.asarray(b_out(z_m, cfg, branch_cfg.kind)).sum(axis=1))
    sigma = float(np.std(amp))
    if sigma == 0:
        raise ValueError("degenerate task: zero amplitude spread")
    rho = free_peak_response(params, cfg.exponent)
    return headroom * params.v_thr / (rho * sigma)


def calibrate_gamma(X, labels, conn: Connectome, params: BstdspParams,
                    branch_cfg: SpikeBranchConfig) -> float:
    """Balance constant from the measured mean V_st crossing time.

    Runs the teachered trials of the current wiring, averages the first
    crossing time (relative to the volley) over patterns whose teacher neuron
    was driven across v_st, and evaluates
    gamma = exp(-(t_syn - teacher)/tau_post) / exp(-T_rise/tau_pre).
    """
    epoch_like = _amplitude_keys(X, labels, conn, branch_cfg)
    keys, driven_teacher = epoch_like
    rmap = CoincidentResponseMap(params, branch_cfg.nonlinearity.exponent,
                                 _amp_unit(params, branch_cfg))
    rises = []
    rows = rmap.query(np.abs(keys[driven_teacher]), teachered=True)
    rises = rows[rows[:, 0] > 0, 1]
    if len(rises) == 0:
        raise ValueError("no V_st crossings observed; v_st too high for this drive")
    t_rise = float(np.mean(rises))
    return gamma_from_rise_time(t_rise, params)


def gamma_from_rise_time(t_rise_rel: float, params: BstdspParams) -> float:
    """gamma given the mean crossing delay after the volley (ms)."""
    num = math.exp(-(params.t_syn - params.teacher_time) / params.tau_post)
    den = math.exp(-t_rise_rel / params.tau_pre)
    return num / den


def _amp_unit(params: BstdspParams, branch_cfg: SpikeBranchConfig) -> float:
    """Drive amplitude per unit of the integer key sum(n_j^p)+ - sum(n_j^p)-."""
    return params.drive_gain / branch_cfg.nonlinearity.x_thr


def _amplitude_keys(X, labels, conn: Connectome, branch_cfg: SpikeBranchConfig):
    """Integer drive keys per pattern and the teacher-is-driven mask."""
    from .model import branch_activations
    p = branch_cfg.nonlinearity.exponent
    z_p = branch_activations(conn.plus, np.asarray(X, dtype=np.float64))
    z_m = branch_activations(conn.minus, np.asarray(X, dtype=np.float64))
    keys = (z_p.astype(np.int64) ** p).sum(axis=1) \
        - (z_m.astype(np.int64) ** p).sum(axis=1)
    labels = np.asarray(labels)
    driven_teacher = ((labels == 1) & (keys > 0)) | ((labels == 0) & (keys < 0))
    return keys, driven_teacher


# -- training --------------------------------------------------------------

class SpikeTimingEpoch:
    """Epoch evaluator for the spike-timing rule on synchronized volleys.

    Shares the structural-training loop with the vector model: integer drive
    keys per pattern go through the response map to produce, per neuron, the
    potentiation/depression factors that multiply each branch's peak output
    current in the slot scores.
    """

    def __init__(self, X, labels, conn: Connectome, cfg: LearnConfig,
                 params: BstdspParams, branch_cfg: SpikeBranchConfig):
        if cfg.use_margin:
            raise ValueError("spike-timing training carries its margin in "
                             "v_st/v_reset, not in the comparator")
        self.X = np.asarray(X, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.cfg = cfg
        self.params = params
        self.branch_cfg = branch_cfg
        self.conn = conn.copy()
        self.exponent = branch_cfg.nonlinearity.exponent
        self.pot_factor = math.exp(-(params.t_syn - params.teacher_time)
                                   / params.tau_post)
        self.rmap = CoincidentResponseMap(params, self.exponent,
                                          _amp_unit(params, branch_cfg))
        from .model import branch_activations
        self.Z = {
            +1: branch_activations(self.conn.plus, self.X).astype(np.int64),
            -1: branch_activations(self.conn.minus, self.X).astype(np.int64),
        }
        self._refresh()

    # branch peak output currents (P, m)
    def _branch_peaks(self, Z):
        nl = self.branch_cfg.nonlinearity
        from .model import branch_output
        return self.params.drive_gain * np.asarray(
            branch_output(Z.astype(np.float64), nl, self.branch_cfg.kind))

    def _keys_from(self, Zp, Zm):
        return ((Zp.astype(np.int64) ** self.exponent).sum(axis=1)
                - (Zm.astype(np.int64) ** self.exponent).sum(axis=1))

    def _trial_outcomes(self, keys):
        """Per-pattern y and per-neuron event factors for teachered trials."""
        P = len(keys)
        y = np.empty(P, dtype=np.float64)
        dep = {+1: np.zeros(P), -1: np.zeros(P)}
        pot = {+1: (self.labels == 1).astype(np.float64) * self.pot_factor,
               -1: (self.labels == 0).astype(np.float64) * self.pot_factor}
        for sign, driven in ((+1, keys > 0), (-1, keys < 0)):
            if not driven.any():
                continue
            teachered = (self.labels == (1 if sign > 0 else 0))
            for tflag in (True, False):
                sel = driven & (teachered == tflag)
                if not sel.any():
                    continue
                rows = self.rmap.query(np.abs(keys[sel]), teachered=tflag)
                dep[sign][sel] = self.params.gamma * rows[:, 2]
                if sign > 0:
                    y[sel] = rows[:, 0]
                else:
                    y[sel] = 1.0 - rows[:, 0]
        crossed_plus = (keys > 0) & (dep[+1] > 0)
        crossed_minus = (keys < 0) & (dep[-1] > 0)
        neither = ~(crossed_plus | crossed_minus)
        y[crossed_plus] = 1.0
        y[crossed_minus] = 0.0
        y[neither] = 1.0 - self.labels[neither]
        return y, pot, dep

    def _refresh(self):
        self.B = {s: self._branch_peaks(self.Z[s]) for s in (+1, -1)}
        self.keys = self._keys_from(self.Z[+1], self.Z[-1])
        y, pot, dep = self._trial_outcomes(self.keys)
        self.mae = float(np.mean(np.abs(self.labels - y)))
        P = self.X.shape[0]
        self.G = {
            s: self.X.T @ (self.B[s] * (pot[s] - dep[s])[:, None]) / P
            for s in (+1, -1)
        }

    # -- evaluator interface (mirrors VectorEpoch) ----------------------

    def fitness_tables(self):
        out = {}
        for s in (+1, -1):
            table = self.conn.table(s)
            m, k = table.shape
            cols = np.repeat(np.arange(m), k)
            out[s] = self.G[s][table.ravel(), cols].reshape(m, k)
        return out[+1], out[-1]

    def fitness_flat(self, sign: int) -> np.ndarray:
        table = self.conn.table(sign)
        m, k = table.shape
        cols = np.repeat(np.arange(m), k)
        return self.G[sign][table.ravel(), cols]

    def candidate_scores(self, sign: int, branch: int, lines) -> np.ndarray:
        return self.G[sign][np.asarray(lines), branch]

    def _proposed_z(self, sign: int, repl):
        branch, _slot, old, new = repl
        z_col = self.Z[sign][:, branch]
        if old != new:
            z_col = z_col + self.X[:, new].astype(np.int64) \
                - self.X[:, old].astype(np.int64)
        return branch, z_col

    def propose(self, repl_plus, repl_minus) -> float:
        z = {+1: None, -1: None}
        keys = self.keys.copy()
        for sign, repl in ((+1, repl_plus), (-1, repl_minus)):
            if repl is None:
                continue
            branch, z_col = self._proposed_z(sign, repl)
            old_col = self.Z[sign][:, branch]
            delta = (z_col.astype(np.int64) ** self.exponent
                     - old_col.astype(np.int64) ** self.exponent)
            keys = keys + (delta if sign > 0 else -delta)
        y, _, _ = self._trial_outcomes(keys)
        return float(np.mean(np.abs(self.labels - y)))

    def apply(self, repl_plus, repl_minus) -> None:
        for sign, repl in ((+1, repl_plus), (-1, repl_minus)):
            if repl is None:
                continue
            branch, slot, old, new = repl
            table = self.conn.table(sign)
            assert table[branch, slot] == old
            table[branch, slot] = new
            if old != new:
                self.Z[sign][:, branch] += (self.X[:, new].astype(np.int64)
                                            - self.X[:, old].astype(np.int64))
        self._refresh()

    def binary_mae(self, conn: Connectome) -> float:
        """Test-mode error on the training patterns (no teacher, from rest)."""
        keys, _ = _amplitude_keys(self.X, self.labels, conn, self.branch_cfg)
        y = classify_keys(keys, self.rmap)
        return float(np.mean(np.abs(self.labels - y)))


def classify_keys(keys: np.ndarray, rmap: CoincidentResponseMap) -> np.ndarray:
    """Test-mode decision per integer drive key: 1 iff the (+) neuron fires more."""
    y = np.zeros(len(keys), dtype=np.float64)
    pos = keys > 0
    if pos.any():
        rows = rmap.query(keys[pos], teachered=False)
        y[pos] = (rows[:, 3] > 0).astype(np.float64)
    return y


def train_bstdsp(X, labels, init: Connectome, cfg: LearnConfig,
                 params: BstdspParams, branch_cfg: SpikeBranchConfig) -> TrainTrace:
    """Structural training driven by the online spike-timing scores."""
    epoch = SpikeTimingEpoch(X, labels, init, cfg, params, branch_cfg)
    return run_structural_training(epoch, cfg)


def bstdsp_test_error(X, labels, conn: Connectome, params: BstdspParams,
                      branch_cfg: SpikeBranchConfig, jitter: float = 0.0,
                      seed: int = 0) -> float:
    """Test-mode error on (optionally jittered) single-spike versions of X.

    jitter=0 uses the exact response map; jitter>0 runs the full vectorized
    simulation with per-afferent spike times.
    """
    X = np.asarray(X)
    labels = np.asarray(labels)
    if jitter == 0:
        rmap = CoincidentResponseMap(params, branch_cfg.nonlinearity.exponent,
                                     _amp_unit(params, branch_cfg))
        keys, _ = _amplitude_keys(X, labels, conn, branch_cfg)
        y = classify_keys(keys, rmap)
        return float(np.mean(np.abs(labels - y)))
    ev_p, ev_a, ev_t = _single_spike_events(X, params.t_syn, jitter,
                                            params.duration, seed)
    counts = _simulate_bstdsp_batch(ev_p, ev_a, ev_t, X.shape[0], conn, params,
                                    branch_cfg)
    y = (counts[:, 0] > counts[:, 1]).astype(np.float64)
    return float(np.mean(np.abs(labels - y)))


def _simulate_bstdsp_batch(ev_pattern, ev_aff, ev_time, n_patterns,
                           conn: Connectome, params: BstdspParams,
                           branch_cfg: SpikeBranchConfig) -> np.ndarray:
    """Vectorized test-mode trials (no teacher); returns spike counts (P, 2)."""
    from .model import branch_output
    ev_step = np.minimum((ev_time / params.dt).astype(np.int64), params.n_steps - 1)
    lif_like = LifParams(duration=params.duration, dt=params.dt)
    drive_p = _BranchDrive(conn.plus, conn.d, n_patterns, lif_like,
                           ev_pattern, ev_aff, ev_step)
    drive_m = _BranchDrive(conn.minus, conn.d, n_patterns, lif_like,
                           ev_pattern, ev_aff, ev_step)
    v = np.zeros((n_patterns, 2))
    u = np.zeros((n_patterns, 2))
    counts = np.zeros((n_patterns, 2), dtype=np.int64)
    decay_v = math.exp(-params.dt / params.tau_v)
    decay_u = math.exp(-params.dt / params.tau_u)
    nl, kind = branch_cfg.nonlinearity, branch_cfg.kind
    for step in range(params.n_steps):
        outs = []
        for drive in (drive_p, drive_m):
            i_branch = drive.advance(step)
            z_hat = i_branch / branch_cfg.current_scale
            outs.append(params.drive_gain
                        * np.asarray(branch_output(z_hat, nl, kind)).sum(axis=1))
        i_cell = np.stack([np.maximum(outs[0] - outs[1], 0.0),
                           np.maximum(outs[1] - outs[0], 0.0)], axis=1)
        v_new = v * decay_v + (u + i_cell) * (1.0 - decay_v)
        u = u * decay_u
        fired = v_new >= params.v_thr
        if fired.any():
            counts[fired] += 1
            v_new[fired] = params.v_reset
            u[fired] = params.v_reset
        v = v_new
    return counts
