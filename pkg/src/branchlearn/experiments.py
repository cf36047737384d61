"""Named experiments binding the library together.

Each experiment reproduces one published protocol at a configurable scale:
random-task training curves, capacity sweeps, noise-robustness grids, the
spike-timing rule, and the UCI benchmarks.  Runners are pure functions from
an ExperimentConfig to a set of named CSV payloads plus a summary table; the
CLI and the HTTP service both go through `run_experiment`, which adds a
manifest sufficient to re-run the experiment exactly.

Reference protocol values (scale=1.0): patterns P in {500, 700, 1000},
m in {10, 20, 50}, k in {5, 10, 15, 25, 50}, n_T = n_R = 25, five trials.
`--scale` shrinks pattern counts and trial counts proportionally for quick
runs; the manifest records the effective numbers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace as dc_replace
import math

import numpy as np

from . import rngs, serialize
from .analysis import (concentration_statistic, input_correlation_ranking,
                       weight_correlation_projection)
from .bstdsp import (BstdspParams, bstdsp_test_error, calibrate_drive_gain,
                     calibrate_gamma, calibrate_margins, measure_eta, train_bstdsp)
from .capacity import capacity_sweep, linear_capacity, nonlinear_capacity
from .datasets import DATASETS, DatasetError, build_encoder, load_dataset
from .learning import LearnConfig, TrainTrace, mae, train
from .model import (Connectome, ModelKind, NonlinearityConfig, branch_activations,
                    branch_output, decision_values, g_heaviside, random_connectome)
from .patterns import TaskSpec, generate_random_task, patterns_to_matrix
from .spike import (LifParams, SpikeBranchConfig, classify_single_spike_batch,
                    classify_spike_batch, rate_current_scale, validity_check)


class UsageError(ValueError):
    """Bad experiment name or configuration (CLI exit code 2)."""


class RuntimeFailure(RuntimeError):
    """Experiment failed while running (CLI exit code 4)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    scale: float = 1.0
    threads: int = 1
    data_dir: str = "data"
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scale <= 0:
            raise UsageError("scale must be positive")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        if self.seed < 0:
            raise UsageError("seed must be >= 0")

    def number(self, key: str, default: float) -> float:
        value = self.overrides.get(key, default)
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"override {key}={value!r} is not numeric") from exc

    def integer(self, key: str, default: int) -> int:
        value = self.number(key, default)
        if value != int(value):
            raise UsageError(f"override {key} must be an integer")
        return int(value)


# -- shared protocol pieces -------------------------------------------------

D_O_DEFAULT = 40
N_RF_DEFAULT = 10
F_HIGH = 250.0
F_LOW = 1.0
SOMA_TARGET_NA = 150.0   # mean somatic current the spike counter resolves well
M_GRID = (10, 20, 50)
K_GRID = (5, 10, 15, 25, 50)
TRIALS_DEFAULT = 5


def make_task(n_patterns: int, seed: int, d_o: int = D_O_DEFAULT,
              n_rf: int = N_RF_DEFAULT):
    spec = TaskSpec(d_o=d_o, n_rf=n_rf, n_patterns=n_patterns, seed=seed)
    return patterns_to_matrix(generate_random_task(spec))


def scaled(value: int, scale: float, floor: int) -> int:
    return max(floor, int(round(value * scale)))


def nonlinearity_for(k: int, *, use_leak: bool, n_rf: int = N_RF_DEFAULT,
                     exponent: int = 2, x_thr: float = 2.0,
                     b_sat: float = math.inf) -> NonlinearityConfig:
    z_leak = k / n_rf if use_leak else 0.0
    return NonlinearityConfig(exponent=exponent, x_thr=x_thr, b_sat=b_sat,
                              z_leak=z_leak)


def train_cell(X, labels, m: int, k: int, *, kind=ModelKind.NONLINEAR,
               use_margin=False, use_leak=False, delta0=25.0, seed=0,
               exponent=2, x_thr=2.0, b_sat=math.inf,
               n_rf=N_RF_DEFAULT) -> TrainTrace:
    """One structural-training run of the activation-based model."""
    nl = nonlinearity_for(k, use_leak=use_leak, n_rf=n_rf, exponent=exponent,
                          x_thr=x_thr, b_sat=b_sat)
    cfg = LearnConfig(use_margin=use_margin, delta0=delta0, nonlinearity=nl,
                      kind=kind, seed=seed)
    init = random_connectome(X.shape[1], m, k, rngs.stream(seed, rngs.INIT_CONNECTOME))
    return train(X, labels, init, cfg)


def _drive_gain(X, conn: Connectome, nl: NonlinearityConfig, kind: ModelKind,
                differential: bool) -> float:
    """min(1, target / mean somatic drive): a raised dendritic threshold for
    configurations whose summed branch currents would swamp the spike counter."""
    a_p = np.asarray(branch_output(branch_activations(conn.plus, X), nl, kind)).sum(1)
    a_m = np.asarray(branch_output(branch_activations(conn.minus, X), nl, kind)).sum(1)
    mu = float(np.mean(np.abs(a_p - a_m))) if differential \
        else float(np.mean((a_p + a_m) / 2))
    if mu <= 0:
        return 1.0
    return min(1.0, SOMA_TARGET_NA / mu)


def rate_spike_error(X, labels, conn: Connectome, nl: NonlinearityConfig,
                     kind=ModelKind.NONLINEAR, *, differential=False, seed=0,
                     f_high=F_HIGH, f_low=F_LOW) -> float:
    """Noise test: classify Poisson rate-coded versions of the patterns."""
    lif = LifParams()
    cfg = SpikeBranchConfig(
        nonlinearity=nl, kind=kind,
        current_scale=rate_current_scale(f_high, lif),
        drive_gain=_drive_gain(X, conn, nl, kind, differential),
    )
    y = classify_spike_batch(X, conn, lif, cfg, f_high=f_high, f_low=f_low,
                             seed=seed, differential=differential)
    return mae(y, labels)


def single_spike_error(X, labels, conn: Connectome, nl: NonlinearityConfig,
                       kind=ModelKind.NONLINEAR, *, jitter: float,
                       differential=True, seed=0, t_syn=100.0) -> float:
    """Noise test with one (jittered) spike per active afferent.

    A single volley drives the soma only transiently, so the branch gain is
    normalized (without the 1.0 cap of the sustained rate code) to keep the
    output spike count per unit decision gap well above the one-spike
    threshold; otherwise the comparator itself would consume the trained
    margin.
    """
    lif = LifParams()
    a_p = np.asarray(branch_output(branch_activations(conn.plus, X), nl, kind)).sum(1)
    a_m = np.asarray(branch_output(branch_activations(conn.minus, X), nl, kind)).sum(1)
    mu = float(np.mean(np.abs(a_p - a_m))) if differential \
        else float(np.mean((a_p + a_m) / 2))
    gain = min(SOMA_TARGET_NA / max(mu, 1e-9), 1e4)
    cfg = SpikeBranchConfig(nonlinearity=nl, kind=kind, current_scale=1.0,
                            drive_gain=gain)
    y = classify_single_spike_batch(X, conn, lif, cfg, t_syn=t_syn, jitter=jitter,
                                    seed=seed, differential=differential)
    return mae(y, labels)


@dataclass
class CellResult:
    m: int
    k: int
    trial: int
    train_mae: float
    spike_error: float = float("nan")


def run_rm_cell(args):
    """(task_seed, P, m, k, trial, differential, margin, leak, delta0) -> CellResult.

    Module-level so process pools can pickle it.
    """
    (task_seed, n_patterns, m, k, trial, differential, use_margin, use_leak,
     delta0) = args
    X, labels = make_task(n_patterns, task_seed + trial)
    trace = train_cell(X, labels, m, k, use_margin=use_margin, use_leak=use_leak,
                       delta0=delta0, seed=task_seed + 1000 + trial)
    nl = nonlinearity_for(k, use_leak=use_leak)
    err = rate_spike_error(X, labels, trace.best_connectome, nl,
                           differential=differential,
                           seed=task_seed + 2000 + trial)
    train_err = trace.best_mae_binary if use_margin else trace.best_mae
    return CellResult(m=m, k=k, trial=trial, train_mae=train_err, spike_error=err)


def run_linear_cell(args):
    """(task_seed, P, m, k, trial) -> best error of the linear neuron."""
    (task_seed, n_patterns, m, k, trial) = args
    X, labels = make_task(n_patterns, task_seed + trial)
    trace = train_cell(X, labels, m, k, kind=ModelKind.LINEAR,
                       seed=task_seed + 1000 + trial)
    return CellResult(m=m, k=k, trial=trial, train_mae=trace.best_mae)


def run_trials(fn, arg_list, threads: int = 1) -> list:
    """Deterministic map over trials, optionally in worker processes."""
    if threads <= 1 or len(arg_list) <= 1:
        return [fn(a) for a in arg_list]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, arg_list))


# -- experiment runners -----------------------------------------------------

def _exp_capacity(config: ExperimentConfig):
    d = config.integer("d", 400)
    s = config.integer("s", 200)
    m_values = [m for m in (2, 4, 5, 10, 20, 25, 40, 50, 100, 200) if s % m == 0]
    rows = capacity_sweep(d, s, m_values)
    lin = linear_capacity(d, s)
    files = {"capacity.csv": serialize.table_to_csv(
        ["m", "k", "ln_capacity_nats"], rows)}
    best = max(rows, key=lambda r: r[2])
    summary = [{"d": d, "s": s, "ln_linear_capacity": lin.ln_count,
                "argmax_m": best[0], "max_ln_capacity": best[2]}]
    return files, summary


def _exp_validity(config: ExperimentConfig):
    lif = LifParams()
    cfg = SpikeBranchConfig(nonlinearity=NonlinearityConfig(),
                            current_scale=1.0)
    k = config.integer("k", 10)
    products = [0.5, 2.0, 8.0, 20.0]
    f_list = [p * 1000.0 / lif.tau_f for p in products]
    tau_list = [lif.tau_f] * len(products)
    rows = validity_check(k, f_list, tau_list, lif, cfg, seed=config.seed,
                          n_draws=scaled(32, config.scale, 8),
                          duration=config.number("duration", 1000.0))
    files = {"validity.csv": serialize.table_to_csv(
        ["f_high_times_tau_f", "predicted_mean_current",
         "actual_mean_current", "relative_deviation"], rows)}
    summary = [{"f_tau": r[0], "relative_deviation": r[3]} for r in rows]
    return files, summary


def _exp_fig7(config: ExperimentConfig):
    """Training-error curves of linear vs dendritic neurons, m=20, s=200."""
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    m, k = config.integer("m", 20), config.integer("k", 10)
    rows, summary = [], []
    files = {}
    for n_patterns in (scaled(500, config.scale, 50), scaled(1000, config.scale, 50)):
        for kind in (ModelKind.LINEAR, ModelKind.NONLINEAR):
            finals = []
            for trial in range(trials):
                X, labels = make_task(n_patterns, config.seed + trial)
                trace = train_cell(X, labels, m, k, kind=kind,
                                   seed=config.seed + 1000 + trial)
                rows += [(kind.value, n_patterns, trial, i, v)
                         for i, v in enumerate(trace.mae_history)]
                finals.append(trace.best_mae)
                if trial == 0:
                    files[f"fig7_trace_{kind.value}_P{n_patterns}.csv"] = \
                        serialize.trace_to_csv(trace)
                    files[f"fig7_connectome_{kind.value}_P{n_patterns}.csv"] = \
                        serialize.connectome_to_csv(trace.best_connectome)
            summary.append({"model": kind.value, "n_patterns": n_patterns,
                            "mean_final_mae": float(np.mean(finals))})
    files["fig7_training_curves.csv"] = serialize.table_to_csv(
        ["model", "n_patterns", "trial", "iteration", "mae"], rows)
    return files, summary


def _exp_fig8(config: ExperimentConfig):
    """Correlation pickup: weight projections before/after training."""
    n_patterns = scaled(100, config.scale, 50)
    X, labels = make_task(n_patterns, config.seed, d_o=2, n_rf=10)
    m, k = config.integer("m", 10), config.integer("k", 5)
    ranking = input_correlation_ranking(X, labels)
    init = random_connectome(X.shape[1], m, k,
                             rngs.stream(config.seed, rngs.INIT_CONNECTOME))
    trace = train_cell(X, labels, m, k, seed=config.seed + 1)
    files, summary = {}, []
    for label, conn in (("initial", init), ("trained", trace.best_connectome)):
        for sign, table in (("plus", conn.plus), ("minus", conn.minus)):
            per_d, hist = weight_correlation_projection(table, ranking)
            files[f"fig8_{label}_{sign}_histogram.csv"] = serialize.table_to_csv(
                ["rank", "summed_weight_correlation"],
                list(enumerate(hist.tolist())))
            summary.append({"stage": label, "neuron": sign,
                            "mean_rank": concentration_statistic(hist)})
    files["fig8_ranking.csv"] = serialize.table_to_csv(
        ["rank", "row", "col", "r_value"],
        [(i, int(r), int(c), float(v)) for i, ((r, c), v)
         in enumerate(zip(ranking.order, ranking.values))])
    return files, summary


def _exp_fig9(config: ExperimentConfig):
    """Error and theoretical capacity against branch count at fixed s=200."""
    s = config.integer("s", 200)
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    n_patterns = scaled(config.integer("n_patterns", 1000), config.scale, 50)
    m_values = [m for m in (2, 4, 5, 10, 20, 25, 40, 50, 100) if s % m == 0]
    rows, summary = [], []
    for m in m_values:
        k = s // m
        errs = []
        for trial in range(trials):
            X, labels = make_task(n_patterns, config.seed + trial)
            trace = train_cell(X, labels, m, k, seed=config.seed + 1000 + trial)
            errs.append(trace.best_mae)
        ln_cap = nonlinear_capacity(400, m, k).ln_count
        rows.append((m, k, float(np.mean(errs)), ln_cap))
        summary.append({"m": m, "mean_mae": float(np.mean(errs)),
                        "ln_capacity": ln_cap})
    files = {"fig9_m_sweep.csv": serialize.table_to_csv(
        ["m", "k", "mean_mae", "ln_capacity_nats"], rows)}
    return files, summary


def _grid_results(config: ExperimentConfig, *, differential, use_margin, use_leak,
                  m_grid=M_GRID, k_grid=K_GRID):
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    n_patterns = scaled(config.integer("n_patterns", 1000), config.scale, 50)
    delta0 = config.number("delta0", 25.0)
    args = [(config.seed, n_patterns, m, k, t, differential, use_margin, use_leak,
             delta0)
            for m in m_grid for k in k_grid for t in range(trials)]
    return run_trials(run_rm_cell, args, config.threads)


def _grid_rows(results) -> list:
    cells: dict = {}
    for r in results:
        cells.setdefault((r.m, r.k), []).append(r)
    rows = []
    for (m, k), rs in sorted(cells.items()):
        rows.append((m, k, float(np.mean([r.train_mae for r in rs])),
                     float(np.mean([r.spike_error for r in rs])), len(rs)))
    return rows


def _exp_fig10(config: ExperimentConfig):
    """Plain-rule grid: training error and rate-coded spike-test error."""
    results = _grid_results(config, differential=False, use_margin=False,
                            use_leak=False)
    rows = _grid_rows(results)
    files = {"fig10_rm_grid.csv": serialize.table_to_csv(
        ["m", "k", "mean_train_mae", "mean_spike_error", "trials"], rows)}
    summary = [dict(zip(("m", "k", "train_mae", "spike_error", "trials"), r))
               for r in rows]
    return files, summary


def _exp_fig12(config: ExperimentConfig):
    """Distribution of decision-gap values on misclassified spike inputs."""
    n_patterns = scaled(500, config.scale, 50)
    m = config.integer("m", 20)
    rows, summary = [], []
    for k in (5, 15, 50):
        X, labels = make_task(n_patterns, config.seed)
        trace = train_cell(X, labels, m, k, seed=config.seed + k)
        nl = nonlinearity_for(k, use_leak=False)
        lif = LifParams()
        conn = trace.best_connectome
        cfg = SpikeBranchConfig(nonlinearity=nl, kind=ModelKind.NONLINEAR,
                                current_scale=rate_current_scale(F_HIGH, lif),
                                drive_gain=_drive_gain(X, conn, nl,
                                                       ModelKind.NONLINEAR, False))
        y = classify_spike_batch(X, conn, lif, cfg, f_high=F_HIGH, f_low=F_LOW,
                                 seed=config.seed + 5000 + k)
        alpha = np.asarray(decision_values(conn, X, nl))
        wrong = y != labels
        for a in alpha[wrong]:
            rows.append((k, float(a)))
        delta0 = float(alpha[wrong].max()) if wrong.any() else 25.0
        summary.append({"k": k, "n_misclassified": int(wrong.sum()),
                        "delta0": delta0})
    files = {"fig12_alpha_values.csv": serialize.table_to_csv(
        ["k", "alpha_misclassified"], rows)}
    return files, summary


def _exp_fig13(config: ExperimentConfig):
    """Noise-robustness fixes, step by step, on the full grid."""
    variants = {
        "plain": dict(differential=False, use_margin=False, use_leak=False),
        "differential": dict(differential=True, use_margin=False, use_leak=False),
        "differential_margin": dict(differential=True, use_margin=True,
                                    use_leak=False),
        "differential_margin_leak": dict(differential=True, use_margin=True,
                                         use_leak=True),
    }
    files, summary = {}, []
    for name, kw in variants.items():
        rows = _grid_rows(_grid_results(config, **kw))
        files[f"fig13_{name}.csv"] = serialize.table_to_csv(
            ["m", "k", "mean_train_mae", "mean_spike_error", "trials"], rows)
        for r in rows:
            summary.append({"variant": name, "m": r[0], "k": r[1],
                            "train_mae": r[2], "spike_error": r[3]})
    return files, summary


def run_single_spike_cell(args):
    """Margin-trained cell tested on jittered single-spike inputs."""
    (seed, n_patterns, m, k, trial, jitters, delta0) = args
    X, labels = make_task(n_patterns, seed + trial)
    trace = train_cell(X, labels, m, k, use_margin=True, use_leak=True,
                       delta0=delta0, seed=seed + 1000 + trial)
    nl = nonlinearity_for(k, use_leak=True)
    errs = [single_spike_error(X, labels, trace.best_connectome, nl,
                               jitter=j, seed=seed + 3000 + trial)
            for j in jitters]
    return (m, k, trial, trace.best_mae_binary, errs)


def _exp_fig14(config: ExperimentConfig):
    """Generalization to single-spike patterns vs jitter window width."""
    tau_f = LifParams().tau_f
    jitters = [0.5 * tau_f, tau_f, 2 * tau_f, 3 * tau_f]
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    n_patterns = scaled(config.integer("n_patterns", 1000), config.scale, 50)
    m = config.integer("m", 20)
    args = [(config.seed, n_patterns, m, k, t, jitters, config.number("delta0", 25.0))
            for k in (5, 15, 25) for t in range(trials)]
    results = run_trials(run_single_spike_cell, args, config.threads)
    rows = []
    for (m_, k, trial, train_err, errs) in results:
        for j, e in zip(jitters, errs):
            rows.append((m_, k, trial, j, train_err, e))
    files = {"fig14_single_spike.csv": serialize.table_to_csv(
        ["m", "k", "trial", "jitter_ms", "train_mae", "test_error"], rows)}
    by_jitter: dict = {}
    for (_m, _k, _t, j, _tr, e) in rows:
        by_jitter.setdefault(j, []).append(e)
    summary = [{"jitter_ms": j, "mean_test_error": float(np.mean(v))}
               for j, v in sorted(by_jitter.items())]
    return files, summary


def _exp_fig16(config: ExperimentConfig):
    """Polynomial branch functions of different degree, with and without
    saturation."""
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    n_patterns = scaled(500, config.scale, 50)
    m = config.integer("m", 20)
    rows = []
    for exponent in (2, 3, 5):
        for saturating in (False, True):
            for k in (5, 10, 15, 25):
                errs = []
                for trial in range(trials):
                    X, labels = make_task(n_patterns, config.seed + trial)
                    x_thr = 2.0
                    b_sat = 10.0 * x_thr if saturating else math.inf
                    trace = train_cell(X, labels, m, k, exponent=exponent,
                                       x_thr=x_thr, b_sat=b_sat,
                                       use_margin=True, use_leak=True,
                                       seed=config.seed + 1000 + trial)
                    errs.append(trace.best_mae_binary)
                rows.append((exponent, saturating, k, float(np.mean(errs))))
    files = {"fig16_polynomials.csv": serialize.table_to_csv(
        ["exponent", "saturating", "k", "mean_train_mae"], rows)}
    summary = [dict(zip(("exponent", "saturating", "k", "mean_train_mae"), r))
               for r in rows]
    return files, summary


DEFAULT_HEADROOM = 4.0
DEFAULT_MARGIN_FRAC = 0.5


def run_bstdsp_cell(args):
    """One spike-timing training run plus clean and noisy testing."""
    (seed, n_patterns, m, k, trial, margin_frac, headroom) = args
    X, labels = make_task(n_patterns, seed + trial)
    d = X.shape[1]
    branch_cfg = SpikeBranchConfig(nonlinearity=NonlinearityConfig(),
                                   kind=ModelKind.NONLINEAR, current_scale=1.0)
    init = random_connectome(d, m, k, rngs.stream(seed + 1000 + trial,
                                                  rngs.INIT_CONNECTOME))
    params = BstdspParams()
    gain = calibrate_drive_gain(X, init, params, branch_cfg, headroom=headroom)
    params = dc_replace(params, drive_gain=gain)
    eta = measure_eta(params, branch_cfg)
    delta_abstract = margin_frac * params.v_thr / eta
    v_st, v_reset = calibrate_margins(delta_abstract, params, branch_cfg)
    params = dc_replace(params, v_st=v_st, v_reset=v_reset)
    gamma = calibrate_gamma(X, labels, init, params, branch_cfg)
    params = dc_replace(params, gamma=gamma)
    cfg = LearnConfig(seed=seed + 2000 + trial, nonlinearity=branch_cfg.nonlinearity)
    trace = train_bstdsp(X, labels, init, cfg, params, branch_cfg)
    conn = trace.best_connectome
    clean = bstdsp_test_error(X, labels, conn, params, branch_cfg, jitter=0.0)
    noisy = bstdsp_test_error(X, labels, conn, params, branch_cfg,
                              jitter=LifParams().tau_f, seed=seed + 4000 + trial)
    return (m, k, trial, margin_frac, clean, noisy, gamma, v_st, v_reset, gain)


def _exp_fig18(config: ExperimentConfig):
    """Spike-timing learning with and without a voltage margin."""
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    n_patterns = scaled(config.integer("n_patterns", 500), config.scale, 50)
    m = config.integer("m", 20)
    headroom = config.number("headroom", DEFAULT_HEADROOM)
    margin_frac = config.number("margin_frac", DEFAULT_MARGIN_FRAC)
    args = [(config.seed, n_patterns, m, k, t, mf, headroom)
            for k in K_GRID for mf in (0.0, margin_frac) for t in range(trials)]
    results = run_trials(run_bstdsp_cell, args, config.threads)
    rows = [(r[0], r[1], r[2], r[3], r[4], r[5]) for r in results]
    files = {"fig18_bstdsp.csv": serialize.table_to_csv(
        ["m", "k", "trial", "margin_frac", "train_error", "noisy_test_error"],
        rows)}
    cells: dict = {}
    for (m_, k, _t, mf, clean, noisy) in rows:
        cells.setdefault((k, mf), []).append((clean, noisy))
    summary = [{"k": k, "margin_frac": mf,
                "mean_train_error": float(np.mean([c for c, _ in v])),
                "mean_noisy_error": float(np.mean([n for _, n in v]))}
               for (k, mf), v in sorted(cells.items())]
    return files, summary


TABLE5_SHAPES = {"BC": (20, 5), "HEART": (10, 5), "ION": (50, 4)}


def run_uci_trial(args):
    """RMWM training and binary+spike testing on one dataset split."""
    (name, data_dir, seed, trial) = args
    m, k = TABLE5_SHAPES[name]
    train_X, train_y, test_X, test_y, manifest = load_dataset(
        name, data_dir, seed=seed + trial)
    encoder = build_encoder(train_X, n_rf=N_RF_DEFAULT)
    Xtr, Xte = encoder.encode(train_X), encoder.encode(test_X)
    trace = train_cell(Xtr, train_y, m, k, use_margin=True, use_leak=True,
                       delta0=25.0, seed=seed + 1000 + trial)
    conn = trace.best_connectome
    nl = nonlinearity_for(k, use_leak=True)
    y_bin = g_heaviside(decision_values(conn, Xte, nl))
    acc_bin = 1.0 - mae(y_bin, test_y)
    lif = LifParams()
    cfg = SpikeBranchConfig(nonlinearity=nl, kind=ModelKind.NONLINEAR,
                            current_scale=rate_current_scale(F_HIGH, lif),
                            drive_gain=_drive_gain(Xtr, conn, nl,
                                                   ModelKind.NONLINEAR, True))
    y_spk = classify_spike_batch(Xte, conn, lif, cfg, f_high=F_HIGH, f_low=F_LOW,
                                 seed=seed + 2000 + trial, differential=True)
    acc_spk = 1.0 - mae(y_spk, test_y)
    return (name, trial, acc_bin * 100.0, acc_spk * 100.0, manifest)


def _exp_table5(config: ExperimentConfig):
    trials = scaled(TRIALS_DEFAULT, config.scale, 1)
    names = [n.strip() for n in
             str(config.overrides.get("dataset", "BC,HEART,ION")).split(",")]
    rows, summary, manifest_notes = [], [], {}
    for name in names:
        if name not in DATASETS:
            raise UsageError(f"unknown dataset {name!r}")
        args = [(name, config.data_dir, config.seed, t) for t in range(trials)]
        results = run_trials(run_uci_trial, args, config.threads)
        for (n, t, ab, asp, man) in results:
            rows.append((n, t, ab, asp))
            manifest_notes[f"{n}_sha256"] = man["sha256"]
        summary.append({
            "dataset": name,
            "mean_binary_accuracy_pct": float(np.mean([r[2] for r in results])),
            "mean_spike_accuracy_pct": float(np.mean([r[3] for r in results])),
        })
    files = {"table5_uci.csv": serialize.table_to_csv(
        ["dataset", "trial", "binary_accuracy_pct", "spike_accuracy_pct"], rows)}
    return files, summary


CATALOG = {
    "capacity": ("Theoretical ln-capacity sweep over branch counts at fixed "
                 "synapse budget", _exp_capacity),
    "validity": ("Time-averaged vs instantaneous nonlinear branch current "
                 "deviation sweep", _exp_validity),
    "fig7": ("Training-error curves: linear vs dendritic neuron, two pattern "
             "loads", _exp_fig7),
    "fig8": ("Input-correlation ranking and weight-projection histograms "
             "before/after training", _exp_fig8),
    "fig9": ("Error and ln-capacity against branch count at fixed synapse "
             "budget", _exp_fig9),
    "fig10": ("Plain-rule (m, k) grid: training error and rate-coded "
              "spike-test error", _exp_fig10),
    "fig12": ("Decision-gap distribution on misclassified spike inputs "
              "(margin calibration)", _exp_fig12),
    "fig13": ("Noise-robustness fixes step by step: differential input, "
              "margin, branch leak", _exp_fig13),
    "fig14": ("Single-spike generalization against jitter window width",
              _exp_fig14),
    "fig16": ("Polynomial branch nonlinearities of degree 2/3/5, saturating "
              "and not", _exp_fig16),
    "fig18": ("Spike-timing structural rule with and without voltage margin",
              _exp_fig18),
    "table5": ("UCI benchmarks: binary and spike-test accuracy", _exp_table5),
}


def list_experiments(filter_text: str | None = None) -> list:
    items = [(name, desc) for name, (desc, _) in sorted(CATALOG.items())]
    if filter_text:
        items = [(n, d) for n, d in items if filter_text.lower() in n.lower()
                 or filter_text.lower() in d.lower()]
    return items


def run_experiment(config: ExperimentConfig) -> tuple:
    """Run one named experiment; returns ({filename: text}, summary rows)."""
    if config.experiment not in CATALOG:
        raise UsageError(f"unknown experiment {config.experiment!r}; "
                         f"known: {', '.join(sorted(CATALOG))}")
    _desc, runner = CATALOG[config.experiment]
    try:
        files, summary = runner(config)
    except (UsageError, DatasetError):
        raise
    except Exception as exc:   # noqa: BLE001 - surfaced with exit code 4
        raise RuntimeFailure(f"experiment {config.experiment} failed: {exc}") from exc
    manifest = {
        "experiment": config.experiment,
        "seed": config.seed,
        "scale": config.scale,
        "threads": config.threads,
        "data_dir": config.data_dir,
        **{f"override_{k}": v for k, v in sorted(config.overrides.items())},
        "reference_scale_note": "scale=1.0 is the reference protocol; smaller "
                                "values shrink pattern and trial counts",
        "content_sha256": serialize.content_hash(files),
    }
    files = dict(files)
    files["manifest.txt"] = serialize.manifest_to_text(manifest)
    return files, summary
