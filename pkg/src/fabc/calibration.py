"""Tolerance calibration from simulated matching distances.

For a handful of probe parameter values at increasing standardized
distance from a base value, M pseudo-samples each are simulated and the
empirical quantiles of their distances to the observed sample are
tabulated.  Reading the table row for an acceptable probe at a quantile
level alpha yields the tolerance/level pair used by the posterior
filter.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .inference import match_distances
from .models import as_parameter
from .parallel import ordered_map
from .rng import K_UNIT, RngTree

__all__ = [
    "DEFAULT_QUANTILE_LEVELS",
    "QuantileTable",
    "ToleranceChoice",
    "default_probes",
    "empirical_quantile",
    "build_quantile_table",
    "select_tolerance",
    "render_table",
    "table_to_csv",
    "table_from_csv",
]

# Levels 0 and 1 stand for the sample minimum and maximum.
DEFAULT_QUANTILE_LEVELS = (0.0, 0.25, 0.50, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 1.0)


def empirical_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Order statistic at rank ceil(q * M), clamped to [1, M].

    q = 0 gives the minimum and q = 1 the maximum; differences from other
    quantile conventions are O(1/M).
    """
    m = sorted_values.size
    if m < 1:
        raise ValueError("need at least one value")
    if not (0.0 <= q <= 1.0):
        raise ValueError("quantile level must lie in [0, 1]")
    k = min(m, max(1, math.ceil(q * m)))
    return float(sorted_values[k - 1])


@dataclass
class QuantileTable:
    """Probe-by-level matrix of matching-distance quantiles."""

    probes: np.ndarray          # (P, k) probe parameters
    levels: tuple[float, ...]   # quantile levels, 0 = min, 1 = max
    entries: np.ndarray         # (P, L) distances
    m_cal: int
    matcher_label: str

    def probe_index(self, probe) -> int:
        probe = as_parameter(probe, self.probes.shape[1])
        hits = np.where(np.all(np.isclose(self.probes, probe, atol=1e-12), axis=1))[0]
        if hits.size == 0:
            raise ValueError(f"probe {probe.tolist()} not present in the table")
        return int(hits[0])

    def level_index(self, level: float) -> int:
        for j, q in enumerate(self.levels):
            if abs(q - level) <= 1e-9:
                return j
        raise ValueError(f"quantile level {level} not present in the table")

    def entry(self, probe, level: float) -> float:
        return float(self.entries[self.probe_index(probe), self.level_index(level)])


@dataclass(frozen=True)
class ToleranceChoice:
    """A tolerance with the quantile level and probe it was read from."""

    epsilon_n: float
    alpha_n: float
    probe: np.ndarray

    def as_dict(self) -> dict:
        return {
            "epsilon_n": self.epsilon_n,
            "alpha_n": self.alpha_n,
            "probe": [float(v) for v in self.probe],
        }


def default_probes(theta_b, count: int = 9, spacing: float = 0.5) -> np.ndarray:
    """Probes at 0, spacing, 2*spacing, ... standardized units from the base.

    Applied to every coordinate at once; override with an explicit probe
    array when the parameter space is anisotropic.
    """
    theta_b = as_parameter(theta_b)
    if count < 1:
        raise ValueError("count must be >= 1")
    offsets = np.arange(count) * float(spacing)
    return theta_b[None, :] + offsets[:, None]


def build_quantile_table(
    model,
    x_obs,
    probes,
    m_cal: int,
    matcher,
    rng=0,
    levels: tuple[float, ...] = DEFAULT_QUANTILE_LEVELS,
    threads: int = 1,
) -> QuantileTable:
    """Simulate m_cal pseudo-samples per probe and tabulate distance quantiles."""
    m_cal = int(m_cal)
    if m_cal < 2:
        raise ValueError("m_cal must be >= 2")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[0] < 1:
        raise ValueError("need at least one probe")
    levels = tuple(float(q) for q in levels)
    for q in levels:
        if not (0.0 <= q <= 1.0):
            raise ValueError("quantile levels must lie in [0, 1]")
    tree = RngTree.from_seed(rng)

    def row(i: int) -> np.ndarray:
        d = np.sort(match_distances(model, probes[i], x_obs, matcher, m_cal, tree.child(K_UNIT, i)))
        return np.array([empirical_quantile(d, q) for q in levels])

    entries = np.vstack(ordered_map(row, range(probes.shape[0]), threads))
    return QuantileTable(probes, levels, entries, m_cal, matcher.label)


def select_tolerance(table: QuantileTable, target_alpha: float, probe) -> ToleranceChoice:
    """Read the tolerance at (probe, target_alpha) off the table."""
    i = table.probe_index(probe)
    j = table.level_index(float(target_alpha))
    return ToleranceChoice(float(table.entries[i, j]), table.levels[j], table.probes[i])


def _level_label(q: float) -> str:
    if q == 0.0:
        return "MIN"
    if q == 1.0:
        return "MAX"
    return f"{q * 100:g}th"


def render_table(table: QuantileTable) -> str:
    """Two-decimal text rendering with MIN/percentile/MAX column headers."""
    k = table.probes.shape[1]
    probe_header = "probe" if k == 1 else "probe(" + ",".join(f"t{j+1}" for j in range(k)) + ")"
    header = [probe_header] + [_level_label(q) for q in table.levels]
    rows = [header]
    for i in range(table.probes.shape[0]):
        probe = table.probes[i]
        name = f"{probe[0]:g}" if k == 1 else "(" + ",".join(f"{v:g}" for v in probe) + ")"
        rows.append([name] + [f"{v:.2f}" for v in table.entries[i]])
    widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
    lines = ["  ".join(cell.rjust(widths[j]) for j, cell in enumerate(row)) for row in rows]
    return "\n".join(lines)


def table_to_csv(table: QuantileTable, path=None) -> str:
    """Full-precision CSV; metadata rides in a leading comment line."""
    buf = io.StringIO()
    buf.write(f"# m_cal={table.m_cal},matcher={table.matcher_label}\n")
    writer = csv.writer(buf)
    k = table.probes.shape[1]
    header = [f"probe_{j + 1}" for j in range(k)] + [str(float(q)) for q in table.levels]
    writer.writerow(header)
    for i in range(table.probes.shape[0]):
        row = [str(float(v)) for v in table.probes[i]]
        row += [str(float(v)) for v in table.entries[i]]
        writer.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def table_from_csv(source) -> QuantileTable:
    if hasattr(source, "read"):
        text = source.read()
    elif "\n" in str(source) or "," in str(source):
        text = str(source)
    else:
        with open(source, newline="") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    m_cal, matcher_label = 0, ""
    if lines and lines[0].startswith("#"):
        meta = dict(item.split("=", 1) for item in lines[0][1:].strip().split(","))
        m_cal = int(meta.get("m_cal", 0))
        matcher_label = meta.get("matcher", "")
        lines = lines[1:]
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    k = sum(1 for name in header if name.startswith("probe_"))
    levels = tuple(float(name) for name in header[k:])
    probes = np.array([[float(v) for v in row[:k]] for row in body])
    entries = np.array([[float(v) for v in row[k:]] for row in body])
    return QuantileTable(probes, levels, entries, m_cal, matcher_label)
