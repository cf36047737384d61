"""Structural plasticity: correlation-guided synapse replacement.

Learning never changes weights; it rewires.  Each iteration scores every
synapse by the error-modulated correlation between its input and its branch
output (averaged over the training set), picks the worst synapse from a
random candidate set T, and swaps its afferent for the best-scoring line from
a random replacement set R of silent synapses on the same branch.  Swaps that
do not increase the objective are kept; after n_ch proposals without strict
improvement the last proposal is forced through to escape the local minimum.
Training stops at zero error or after n_min local minima.

The loop itself is model-agnostic: it drives an epoch-evaluator object that
knows how to compute the objective, the per-slot fitness, candidate scores,
and incremental proposal costs.  `VectorEpoch` implements the evaluator for
the activation-based model (plain or margin-enforcing); the spike-timing rule
plugs in its own evaluator.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rngs
from .model import (Connectome, ModelKind, NonlinearityConfig, branch_activations,
                    branch_output, g_heaviside, g_margin)


@dataclass(frozen=True)
class LearnConfig:
    n_t: int = 25                 # candidate-set size for removal
    n_r: int = 25                 # replacement-set size of silent synapses
    n_ch: int = 100               # proposals without improvement before escape
    n_min: int = 100              # local-minimum budget
    delta0: float = 25.0          # initial margin (margin variant only)
    delta_decay: float = 0.8
    delta_repeat_trigger: int = 5  # identical consecutive minima before decay
    use_margin: bool = False
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    kind: ModelKind = ModelKind.NONLINEAR
    max_iterations: int = 200_000  # safety stop; the protocol has no own bound
    seed: int = 0

    def __post_init__(self):
        if self.n_t < 1 or self.n_r < 1:
            raise ValueError("n_t and n_r must be >= 1")
        if not 0 < self.delta_decay < 1:
            raise ValueError("delta_decay must lie in (0, 1)")
        if self.use_margin and self.delta0 <= 0:
            raise ValueError("margin training needs delta0 > 0")


@dataclass
class LocalMinimumEvent:
    iteration: int
    mae: float
    forced: bool   # whether an error-increasing replacement was pushed through


@dataclass
class TrainTrace:
    mae_history: list
    delta_history: list
    local_minima: list
    best_mae: float
    best_connectome: Connectome
    final_connectome: Connectome
    iterations: int
    stop_reason: str
    best_mae_binary: float = float("nan")
    class_counts: tuple = (0, 0)

    @property
    def local_minima_count(self) -> int:
        return len(self.local_minima)


def mae(predictions, targets) -> float:
    """Mean absolute error; for 0/1 values this is the misclassified fraction."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.size == 0 or predictions.shape != targets.shape:
        raise ValueError("predictions and targets must be equal-length and non-empty")
    return float(np.mean(np.abs(predictions - targets)))


# replacement proposal: (branch, slot, old_line, new_line)
Replacement = tuple


class VectorEpoch:
    """Epoch evaluator for the activation-based model on binary vectors.

    Keeps per-pattern branch activations cached so a single-synapse proposal
    costs O(P) instead of a full forward pass, and folds the whole fitness
    table into one matrix product per neuron:
        G[line, j] = mean_p X[p, line] * B[p, j] * e[p]
    where B holds branch outputs and e = sign(o - y) (negated for the (-)
    neuron).  A synapse's fitness is G at its (line, branch); a silent
    candidate's score is G at (candidate line, branch).
    """

    def __init__(self, X: np.ndarray, labels: np.ndarray, conn: Connectome,
                 cfg: LearnConfig):
        self.X = np.asarray(X, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] != self.labels.shape[0]:
            raise ValueError("X must be (P, d) aligned with labels")
        if self.X.shape[0] < 1:
            raise ValueError("need at least one pattern")
        self.cfg = cfg
        self.conn = conn.copy()
        self.delta = cfg.delta0 if cfg.use_margin else 0.0
        self.Z = {
            +1: branch_activations(self.conn.plus, self.X),
            -1: branch_activations(self.conn.minus, self.X),
        }
        self._refresh()

    # -- forward pieces -------------------------------------------------

    def _branch_out(self, Z):
        return np.asarray(branch_output(Z, self.cfg.nonlinearity, self.cfg.kind))

    def _objective(self, a_plus, a_minus):
        """(batch error, per-pattern fitness sign).

        The accepted/rejected quantity is always the binary misclassified
        fraction; with margins enabled only the fitness error term sees the
        piecewise-linear comparator, so patterns inside the margin band keep
        driving rewiring even when the batch error is stuck.
        """
        alpha = a_plus - a_minus
        y_hard = np.asarray(g_heaviside(alpha), dtype=np.float64)
        value = float(np.mean(np.abs(self.labels - y_hard)))
        if self.cfg.use_margin:
            y_soft = np.asarray(g_margin(alpha, self.delta))
            e = np.sign(self.labels - y_soft)
            margin_value = float(np.mean(np.abs(self.labels - y_soft)))
            # delta-independent yardstick for best-state tie-breaking and
            # stall detection, so decaying delta cannot fake progress
            y_ref = np.asarray(g_margin(alpha, self.cfg.delta0))
            margin_ref = float(np.mean(np.abs(self.labels - y_ref)))
        else:
            e = np.sign(self.labels - y_hard)
            margin_value = value
            margin_ref = value
        return value, margin_value, margin_ref, e

    def _refresh(self):
        self.B = {s: self._branch_out(self.Z[s]) for s in (+1, -1)}
        self.a = {s: self.B[s].sum(axis=1) for s in (+1, -1)}
        (self.mae, self.margin_mae, self.margin_ref,
         e) = self._objective(self.a[+1], self.a[-1])
        P = self.X.shape[0]
        self.G = {
            +1: self.X.T @ (self.B[+1] * e[:, None]) / P,
            -1: self.X.T @ (self.B[-1] * (-e)[:, None]) / P,
        }

    # -- evaluator interface --------------------------------------------

    def fitness_tables(self):
        tables = {}
        for s in (+1, -1):
            table = self.conn.table(s)
            m, k = table.shape
            cols = np.repeat(np.arange(m), k)
            tables[s] = self.G[s][table.ravel(), cols].reshape(m, k)
        return tables[+1], tables[-1]

    def fitness_flat(self, sign: int) -> np.ndarray:
        table = self.conn.table(sign)
        m, k = table.shape
        cols = np.repeat(np.arange(m), k)
        return self.G[sign][table.ravel(), cols]

    def candidate_scores(self, sign: int, branch: int, lines: np.ndarray) -> np.ndarray:
        return self.G[sign][np.asarray(lines), branch]

    def _proposed_columns(self, sign: int, repl: Replacement):
        branch, _slot, old, new = repl
        z_col = self.Z[sign][:, branch]
        if old != new:
            z_col = z_col - self.X[:, old] + self.X[:, new]
        return branch, z_col

    def propose(self, repl_plus: Replacement | None,
                repl_minus: Replacement | None) -> float:
        a = {+1: self.a[+1], -1: self.a[-1]}
        for sign, repl in ((+1, repl_plus), (-1, repl_minus)):
            if repl is None:
                continue
            branch, z_col = self._proposed_columns(sign, repl)
            new_out = np.asarray(branch_output(z_col, self.cfg.nonlinearity,
                                               self.cfg.kind))
            a[sign] = a[sign] - self.B[sign][:, branch] + new_out
        value, _, _, _ = self._objective(a[+1], a[-1])
        return value

    def apply(self, repl_plus: Replacement | None,
              repl_minus: Replacement | None) -> None:
        for sign, repl in ((+1, repl_plus), (-1, repl_minus)):
            if repl is None:
                continue
            branch, slot, old, new = repl
            table = self.conn.table(sign)
            assert table[branch, slot] == old
            table[branch, slot] = new
            if old != new:
                self.Z[sign][:, branch] += self.X[:, new] - self.X[:, old]
        self._refresh()

    def set_delta(self, delta: float) -> None:
        self.delta = delta
        self._refresh()

    def binary_mae(self, conn: Connectome) -> float:
        """Recall error of a connectome under the hard comparator."""
        a_p = np.asarray(branch_output(branch_activations(conn.plus, self.X),
                                       self.cfg.nonlinearity, self.cfg.kind)).sum(axis=1)
        a_m = np.asarray(branch_output(branch_activations(conn.minus, self.X),
                                       self.cfg.nonlinearity, self.cfg.kind)).sum(axis=1)
        y = g_heaviside(a_p - a_m).astype(np.float64)
        return mae(y, self.labels)


def fitness_epoch(X, labels, conn: Connectome, cfg: LearnConfig):
    """One-epoch fitness tables (c_plus, c_minus) for the current wiring."""
    epoch = VectorEpoch(X, labels, conn, cfg)
    return epoch.fitness_tables()


def _pick_worst_slot(values: np.ndarray, t_slots: np.ndarray):
    """Min-fitness slot among t_slots; ties break to the lowest flat index."""
    t_vals = values[t_slots]
    worst_val = t_vals.min()
    return int(t_slots[t_vals == worst_val].min())


def _pick_best_line(scores: np.ndarray, lines: np.ndarray) -> int:
    """Max-score line; ties break to the lowest afferent index."""
    best_val = scores.max()
    return int(lines[scores == best_val].min())


def _draw_replacement(epoch, sign: int, cfg: LearnConfig,
                      rng: np.random.Generator, t_flat: int | None = None,
                      pool: np.ndarray | None = None):
    """Draw (or reuse) T, pick the worst slot, draw R, pick the best line.

    `pool` restricts which input lines the replacement set may offer.
    """
    conn = epoch.conn
    s, d, k = conn.s, conn.d, conn.k
    if t_flat is None:
        t_slots = rng.choice(s, size=min(cfg.n_t, s), replace=False)
        t_flat = _pick_worst_slot(epoch.fitness_flat(sign), t_slots)
    branch, slot = divmod(t_flat, k)
    if pool is None:
        pool = np.arange(d)
    lines = rng.choice(pool, size=min(cfg.n_r, len(pool)), replace=False)
    scores = epoch.candidate_scores(sign, branch, lines)
    new_line = _pick_best_line(scores, lines)
    old_line = int(conn.table(sign)[branch, slot])
    return t_flat, (branch, slot, old_line, new_line)


def replacement_step(conn: Connectome, epoch, cfg: LearnConfig,
                     rng: np.random.Generator) -> Connectome:
    """One replacement proposal per neuron, returned as a new connectome.

    `epoch` must carry fitness aligned with `conn` (a VectorEpoch or
    compatible evaluator built from the same wiring).
    """
    if epoch.conn.plus.shape != conn.plus.shape:
        raise ValueError("epoch fitness is not aligned with the connectome")
    proposed = conn.copy()
    for sign in (+1, -1):
        _, (branch, slot, _old, new) = _draw_replacement(epoch, sign, cfg, rng)
        proposed.table(sign)[branch, slot] = new
    return proposed


def run_structural_training(epoch, cfg: LearnConfig,
                            rng: np.random.Generator | None = None) -> TrainTrace:
    """Accept/reject loop shared by all learning rules.

    Each iteration gives each neuron in turn one replacement proposal (a
    fresh T and R per proposal), applied when the objective does not
    increase.  A stall counter tracks consecutive proposals without a strict
    improvement - rejected proposals and accepted-but-neutral ones both count.
    When it reaches n_ch, a local minimum is recorded: if the pending
    proposal was a rejection it is forced through anyway to escape the
    minimum.  Training stops at zero error or after n_min local minima.
    With margins enabled, delta decays by delta_decay whenever
    delta_repeat_trigger consecutive local minima share the same objective.
    """
    if rng is None:
        rng = rngs.stream(cfg.seed, rngs.TRAINER)
    trace_mae = [epoch.mae]
    trace_delta = [getattr(epoch, "delta", 0.0)]
    events: list = []
    best_mae = epoch.mae
    # among equal-error states the one with the smaller margin violation wins,
    # so the saved wiring keeps the slack the margin fitness worked for
    best_margin = getattr(epoch, "margin_ref", epoch.mae)
    best_conn = epoch.conn.copy()
    repeat_run: list = []
    iteration = 0
    stop = "budget"
    stall = 0

    def stop_value():
        return getattr(epoch, "margin_mae", epoch.mae) if cfg.use_margin \
            else epoch.mae

    def maybe_update_best():
        nonlocal best_mae, best_margin, best_conn
        margin_now = getattr(epoch, "margin_ref", epoch.mae)
        if (epoch.mae < best_mae
                or (epoch.mae == best_mae and margin_now < best_margin)):
            best_mae = epoch.mae
            best_margin = margin_now
            best_conn = epoch.conn.copy()

    def record_event(stuck_mae, forced):
        events.append(LocalMinimumEvent(iteration, stuck_mae, forced))
        # "stuck in the same minimum n times in a row" is observable as the
        # best (error, margin-violation) pair staying put across that many
        # consecutive events
        repeat_run.append((best_mae, best_margin))
        if (cfg.use_margin
                and len(repeat_run) >= cfg.delta_repeat_trigger
                and len(set(repeat_run[-cfg.delta_repeat_trigger:])) == 1):
            epoch.set_delta(epoch.delta * cfg.delta_decay)
            repeat_run.clear()

    if stop_value() == 0.0:
        stop = "memorized"
    elif cfg.n_min <= 0:
        stop = "budget"
    else:
        while iteration < cfg.max_iterations:
            iteration += 1
            for sign in (+1, -1):
                _, repl = _draw_replacement(epoch, sign, cfg, rng)
                repl_plus, repl_minus = ((repl, None) if sign > 0
                                         else (None, repl))
                proposed = epoch.propose(repl_plus, repl_minus)
                if proposed < epoch.mae:
                    epoch.apply(repl_plus, repl_minus)
                    stall = 0
                elif proposed == epoch.mae:
                    epoch.apply(repl_plus, repl_minus)
                    stall += 1
                    if stall >= cfg.n_ch:
                        record_event(epoch.mae, forced=False)
                        stall = 0
                else:
                    stall += 1
                    if stall >= cfg.n_ch:
                        stuck_mae = epoch.mae
                        epoch.apply(repl_plus, repl_minus)   # forced escape
                        record_event(stuck_mae, forced=True)
                        stall = 0
                maybe_update_best()
                if stop_value() == 0.0 or len(events) >= cfg.n_min:
                    break
            trace_mae.append(epoch.mae)
            trace_delta.append(getattr(epoch, "delta", 0.0))
            if stop_value() == 0.0:
                stop = "memorized"
                break
            if len(events) >= cfg.n_min:
                stop = "local-minima budget"
                break
        else:
            stop = "iteration cap"

    trace = TrainTrace(
        mae_history=trace_mae,
        delta_history=trace_delta,
        local_minima=events,
        best_mae=best_mae,
        best_connectome=best_conn,
        final_connectome=epoch.conn.copy(),
        iterations=iteration,
        stop_reason=stop,
    )
    if hasattr(epoch, "binary_mae"):
        trace.best_mae_binary = epoch.binary_mae(best_conn)
    if hasattr(epoch, "labels"):
        labels = np.asarray(epoch.labels)
        trace.class_counts = (int((labels == 0).sum()), int((labels == 1).sum()))
    return trace


def train(X, labels, init: Connectome, cfg: LearnConfig) -> TrainTrace:
    """Train the activation-based model (plain or margin variant) on binary vectors."""
    epoch = VectorEpoch(X, labels, init, cfg)
    return run_structural_training(epoch, cfg)


def calibrate_delta0(X, labels, conn: Connectome, cfg: LearnConfig,
                     lif, branch_cfg, f_high: float, f_low: float,
                     seed: int = 0) -> float:
    """Initial margin from spike testing a hard-threshold-trained connectome.

    Rate-encodes every training pattern, classifies it with the spiking
    model, and returns the largest activation gap alpha = a+ - a- observed on
    a misclassified spike input.  Falls back to cfg.delta0 when the spiking
    run makes no errors.
    """
    from .model import decision_values
    from .spike import classify_spike_batch

    y_spikes = classify_spike_batch(X, conn, lif, branch_cfg,
                                    f_high=f_high, f_low=f_low, seed=seed)
    alpha = np.asarray(decision_values(conn, X, cfg.nonlinearity, cfg.kind))
    wrong = y_spikes != np.asarray(labels)
    if not wrong.any():
        return cfg.delta0
    return float(alpha[wrong].max())
