"""Abstract (non-spiking) two-neuron classifier with nonlinear dendrites.

A neuron is an m x k table of afferent indices: m dendritic branches, each
holding k binary synapses drawn (with repetition) from d input lines.  A
branch's activation is the number of its synapses whose input bit is 1;
branch activations pass through a polynomial nonlinearity and are summed at
the soma.  Two neurons (one per class) feed an ideal comparator.
"""

from dataclasses import dataclass, replace
from enum import Enum
import math

import numpy as np


class ModelKind(Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


@dataclass(frozen=True)
class NonlinearityConfig:
    """Branch nonlinearity: min(max(z - z_leak, 0)^exponent / x_thr, b_sat)."""

    exponent: int = 2
    x_thr: float = 2.0
    b_sat: float = math.inf
    z_leak: float = 0.0

    def __post_init__(self):
        if self.exponent < 1:
            raise ValueError("exponent must be a positive integer")
        if self.x_thr <= 0:
            raise ValueError("x_thr must be positive")
        if self.b_sat <= 0:
            raise ValueError("b_sat must be positive")
        if self.z_leak < 0:
            raise ValueError("z_leak must be nonnegative")

    def with_leak(self, z_leak: float) -> "NonlinearityConfig":
        return replace(self, z_leak=z_leak)


@dataclass
class Connectome:
    """Wiring of the (+) and (-) neurons.

    Each table has shape (m, k) and holds afferent indices in [0, d).
    Repetition is allowed: an afferent may contact a branch several times,
    which acts as an integer weight.  The synapse count s = m*k is constant
    through learning.
    """

    plus: np.ndarray
    minus: np.ndarray
    d: int

    def __post_init__(self):
        self.plus = np.asarray(self.plus, dtype=np.int64)
        self.minus = np.asarray(self.minus, dtype=np.int64)
        if self.plus.shape != self.minus.shape or self.plus.ndim != 2:
            raise ValueError("plus/minus tables must share an (m, k) shape")
        for table in (self.plus, self.minus):
            if table.size and (table.min() < 0 or table.max() >= self.d):
                raise ValueError("afferent index out of range")

    @property
    def m(self) -> int:
        return self.plus.shape[0]

    @property
    def k(self) -> int:
        return self.plus.shape[1]

    @property
    def s(self) -> int:
        return self.plus.size

    def copy(self) -> "Connectome":
        return Connectome(self.plus.copy(), self.minus.copy(), self.d)

    def table(self, sign: int) -> np.ndarray:
        return self.plus if sign > 0 else self.minus


def random_connectome(d: int, m: int, k: int, rng: np.random.Generator) -> Connectome:
    """Initial wiring: every slot draws an afferent uniformly, with replacement."""
    return Connectome(
        plus=rng.integers(0, d, size=(m, k)),
        minus=rng.integers(0, d, size=(m, k)),
        d=d,
    )


def b(z, cfg: NonlinearityConfig):
    """Branch nonlinearity without leak: min(z^exponent / x_thr, b_sat)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.power(z, cfg.exponent) / cfg.x_thr
    if math.isfinite(cfg.b_sat):
        out = np.minimum(out, cfg.b_sat)
    return out if out.ndim else float(out)


def b_leak(z, cfg: NonlinearityConfig):
    """Leaky branch nonlinearity: zero below z_leak, shifted power above it."""
    z = np.asarray(z, dtype=np.float64)
    shifted = np.maximum(z - cfg.z_leak, 0.0)
    out = np.power(shifted, cfg.exponent) / cfg.x_thr
    if math.isfinite(cfg.b_sat):
        out = np.minimum(out, cfg.b_sat)
    return out if out.ndim else float(out)


def branch_output(z, cfg: NonlinearityConfig, kind: ModelKind = ModelKind.NONLINEAR):
    """Branch response used by the forward pass and by the learning rule.

    Linear neurons pass activations through unchanged; nonlinear neurons use
    the leaky power law (z_leak=0 reduces it to the plain power law).
    """
    if kind is ModelKind.LINEAR:
        z = np.asarray(z, dtype=np.float64)
        return z if z.ndim else float(z)
    return b_leak(z, cfg)


def branch_activation(branch: np.ndarray, bits: np.ndarray) -> float:
    """Total synaptic activation z_j of one branch for a binary input."""
    return float(np.asarray(bits, dtype=np.float64)[np.asarray(branch)].sum())


def branch_activations(table: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Branch activations for one pattern (d,) or a batch (P, d).

    Returns shape (m,) or (P, m).
    """
    x = np.asarray(x, dtype=np.float64)
    m, k = table.shape
    if x.ndim == 1:
        return x[table.ravel()].reshape(m, k).sum(axis=1)
    gathered = x[:, table.ravel()].reshape(x.shape[0], m, k)
    return gathered.sum(axis=2)


def neuron_activation(table: np.ndarray, x: np.ndarray, cfg: NonlinearityConfig,
                      kind: ModelKind = ModelKind.NONLINEAR):
    """Somatic activation: sum of branch outputs. Scalar for one pattern,
    (P,) for a batch."""
    z = branch_activations(table, x)
    out = branch_output(z, cfg, kind)
    summed = np.asarray(out).sum(axis=-1)
    return summed if np.ndim(summed) else float(summed)


def decision_values(conn: Connectome, x: np.ndarray, cfg: NonlinearityConfig,
                    kind: ModelKind = ModelKind.NONLINEAR):
    """alpha = a_plus - a_minus for one pattern or a batch."""
    a_plus = neuron_activation(conn.plus, x, cfg, kind)
    a_minus = neuron_activation(conn.minus, x, cfg, kind)
    return a_plus - a_minus


def g_heaviside(alpha):
    """Comparator: 1 for strictly positive argument, else 0 (ties go to 0)."""
    alpha = np.asarray(alpha)
    out = (alpha > 0).astype(np.int64)
    return out if out.ndim else int(out)


def g_margin(alpha, delta: float):
    """Piecewise-linear comparator enforcing a margin delta around zero.

    1 for alpha >= delta, 0 for alpha <= -delta, linear in between.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    alpha = np.asarray(alpha, dtype=np.float64)
    out = np.clip(0.5 * alpha / delta + 0.5, 0.0, 1.0)
    return out if out.ndim else float(out)


def classify(x: np.ndarray, conn: Connectome, cfg: NonlinearityConfig,
             kind: ModelKind = ModelKind.NONLINEAR):
    """Hard decision for one pattern or a batch of patterns."""
    return g_heaviside(decision_values(conn, x, cfg, kind))
