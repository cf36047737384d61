"""Documented CSV formats and run manifests.

Every CSV starts with a header row naming columns and units.  The connectome
format carries its dimensions in a leading comment line so a file is
self-describing.  Manifests are flat key=value text with a content hash, and
are sufficient to re-run an experiment exactly.
"""

import csv
import hashlib
import io

import numpy as np

from .model import Connectome
from .patterns import BinaryPattern, SpikePattern


def patterns_to_csv(patterns) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    d = patterns[0].d
    w.writerow(["label"] + [f"bit{i}" for i in range(d)])
    for p in patterns:
        w.writerow([p.label] + p.bits.tolist())
    return out.getvalue()


def patterns_from_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[0] != "label":
        raise ValueError("not a pattern CSV: first column must be 'label'")
    return [BinaryPattern(np.array([int(b) for b in row[1:]], dtype=np.uint8),
                          int(row[0])) for row in body]


def spikes_to_csv(spike_patterns) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["pattern_id", "afferent_id", "time_ms"])
    for pid, sp in enumerate(spike_patterns):
        for a, train in enumerate(sp.spikes):
            for t in train:
                w.writerow([pid, a, f"{t:.6f}"])
    return out.getvalue()


def spikes_from_csv(text: str, d: int, duration: float):
    rows = list(csv.reader(io.StringIO(text)))[1:]
    by_pattern: dict = {}
    for pid, a, t in rows:
        by_pattern.setdefault(int(pid), {}).setdefault(int(a), []).append(float(t))
    n = max(by_pattern) + 1 if by_pattern else 0
    out = []
    for pid in range(n):
        trains = [np.array(sorted(by_pattern.get(pid, {}).get(a, [])))
                  for a in range(d)]
        out.append(SpikePattern(tuple(trains), duration))
    return out


def connectome_to_csv(conn: Connectome) -> str:
    out = io.StringIO()
    out.write(f"# m={conn.m},k={conn.k},d={conn.d}\n")
    w = csv.writer(out)
    w.writerow(["neuron_sign", "branch", "slot", "afferent"])
    for sign, table in (("+", conn.plus), ("-", conn.minus)):
        for j in range(conn.m):
            for slot in range(conn.k):
                w.writerow([sign, j, slot, int(table[j, slot])])
    return out.getvalue()


def connectome_from_csv(text: str) -> Connectome:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# m="):
        raise ValueError("missing connectome dimension header")
    meta = dict(kv.split("=") for kv in lines[0][2:].split(","))
    m, k, d = int(meta["m"]), int(meta["k"]), int(meta["d"])
    plus = np.zeros((m, k), dtype=np.int64)
    minus = np.zeros((m, k), dtype=np.int64)
    for row in csv.reader(lines[2:]):
        if not row:
            continue
        sign, j, slot, aff = row
        (plus if sign == "+" else minus)[int(j), int(slot)] = int(aff)
    return Connectome(plus, minus, d)


def trace_to_csv(trace) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["epoch", "mae", "delta", "local_minima_count"])
    events = [e.iteration for e in trace.local_minima]
    for i, (m, dlt) in enumerate(zip(trace.mae_history, trace.delta_history)):
        n_min = sum(1 for it in events if it <= i)
        w.writerow([i, f"{m:.6f}", f"{dlt:.6f}", n_min])
    return out.getvalue()


def voltage_trace_to_csv(result) -> str:
    """Diagnostic dump of a recorded simulation: (t_ms, v_plus_mv, v_minus_mv)."""
    if result.v_trace is None:
        raise ValueError("simulation was not recorded; rerun with record=True")
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["t_ms", "v_plus_mv", "v_minus_mv"])
    for t, (vp, vm) in zip(result.t_grid, result.v_trace):
        w.writerow([f"{t:.4f}", f"{vp:.6f}", f"{vm:.6f}"])
    return out.getvalue()


def table_to_csv(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in row])
    return out.getvalue()


def content_hash(texts: dict) -> str:
    """Order-independent sha256 over named payloads."""
    h = hashlib.sha256()
    for name in sorted(texts):
        h.update(name.encode())
        h.update(b"\0")
        h.update(texts[name].encode())
        h.update(b"\0")
    return h.hexdigest()


def manifest_to_text(entries: dict) -> str:
    lines = [f"{key}={entries[key]}" for key in entries]
    return "\n".join(lines) + "\n"


def manifest_from_text(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key] = value
    return out
