"""Posterior construction from matching-support proportions.

For each candidate theta*, M pseudo-samples are simulated and the
fraction falling within the tolerance of the observed sample is the
candidate's weight.  With M = 1 and filter level 1 this reduces to plain
rejection ABC.  A rejection run can afterwards be extended with M
additional pseudo-samples per candidate, the original draw's match
outcome being retained, to obtain weights over M + 1 draws.

Candidates are processed on independent rng substreams, so results are
bit-identical across thread counts and match the serial run.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .empirical import MatchSpec, Sample
from .models import as_parameter, prior_draw
from .parallel import ordered_map
from .rng import K_DRAW, K_UNIT, RngTree, as_generator

__all__ = [
    "MODE_FILTERED",
    "MODE_FOR_ALL",
    "MODE_ABC_FLAT",
    "PosteriorAtom",
    "Posterior",
    "SummaryStats",
    "EmptyPosteriorError",
    "match_distances",
    "pmatch",
    "fabc",
    "abc_reject",
    "extend_abc_to_fabc",
    "summarize",
    "expected_h",
    "pool_duplicates",
    "atoms_to_csv",
    "atoms_from_csv",
    "posterior_to_json",
]

MODE_FILTERED = "filtered"
MODE_FOR_ALL = "for-all"
MODE_ABC_FLAT = "abc"

UNWEIGHTED = "unweighted"
PMATCH_WEIGHTED = "pmatch"


class EmptyPosteriorError(RuntimeError):
    """No selected candidates; the posterior has empty effective support."""


@dataclass(frozen=True, eq=False)
class PosteriorAtom:
    """A candidate with its matching-support weight."""

    theta_star: np.ndarray
    p_match: float
    selected: bool
    m_used: int

    def __post_init__(self):
        theta = np.array(as_parameter(self.theta_star))  # own an immutable copy
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)
        if not (0.0 <= self.p_match <= 1.0):
            raise ValueError("p_match must lie in [0, 1]")
        if self.m_used < 1:
            raise ValueError("m_used must be >= 1")


@dataclass
class Posterior:
    """Discrete support of the approximate posterior, one atom per candidate."""

    atoms: list[PosteriorAtom]
    mode: str
    epsilon: float
    alpha: float | None = None
    matcher_label: str = ""

    @property
    def thetas(self) -> np.ndarray:
        return np.array([a.theta_star for a in self.atoms])

    @property
    def p_match(self) -> np.ndarray:
        return np.array([a.p_match for a in self.atoms])

    @property
    def selected_mask(self) -> np.ndarray:
        return np.array([a.selected for a in self.atoms], dtype=bool)

    @property
    def n_selected(self) -> int:
        return int(self.selected_mask.sum())

    @property
    def is_empty(self) -> bool:
        return self.n_selected == 0

    @property
    def observed_msp(self) -> float | None:
        """Minimum weight over the selected candidates (None if none)."""
        if self.is_empty:
            return None
        return float(self.p_match[self.selected_mask].min())


@dataclass(frozen=True)
class SummaryStats:
    """Per-coordinate moments of the selected candidates plus total MSE."""

    mean: np.ndarray
    variance: np.ndarray
    mse: float
    count_selected: int
    weighting: str

    def as_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "variance": [float(v) for v in self.variance],
            "mse": float(self.mse),
            "count_selected": self.count_selected,
            "weighting": self.weighting,
        }


def match_distances(model, theta_star, x_obs: Sample, matcher, m: int, rng) -> np.ndarray:
    """Distances from x_obs to m pseudo-samples simulated at theta_star."""
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    gen = as_generator(rng)
    batch = model.simulate_batch(theta_star, x_obs.n, m, gen)
    return matcher.distances(x_obs, batch)


def pmatch(model, theta_star, x_obs: Sample, spec: MatchSpec, m: int, rng) -> float:
    """Fraction of m pseudo-samples from theta_star within epsilon of x_obs."""
    d = match_distances(model, theta_star, x_obs, spec.matcher, m, rng)
    return float(np.mean(d <= spec.epsilon))


def fabc(
    model,
    prior,
    x_obs: Sample,
    spec: MatchSpec,
    m: int,
    n_star: int,
    alpha_n: float,
    mode: str = MODE_FILTERED,
    rng=0,
    threads: int = 1,
) -> Posterior:
    """Matching-support posterior over n_star candidates drawn from the prior.

    Filtered mode marks a candidate selected when p_match >= alpha_n;
    for-all mode bypasses the filter and keeps every candidate with its
    weight.  An empty selection is a legal outcome, exposed through
    `Posterior.is_empty`.
    """
    if mode not in (MODE_FILTERED, MODE_FOR_ALL):
        raise ValueError(f"unknown mode: {mode!r}")
    alpha_n = float(alpha_n)
    if not (0.0 <= alpha_n <= 1.0):
        raise ValueError("alpha_n must lie in [0, 1]")
    tree = RngTree.from_seed(rng)
    thetas = prior_draw(prior, n_star, tree.child(K_DRAW).generator())

    def weight(i: int) -> float:
        d = match_distances(model, thetas[i], x_obs, spec.matcher, m, tree.child(K_UNIT, i))
        return float(np.mean(d <= spec.epsilon))

    weights = ordered_map(weight, range(len(thetas)), threads)
    atoms = [
        PosteriorAtom(
            theta_star=thetas[i],
            p_match=w,
            selected=True if mode == MODE_FOR_ALL else w >= alpha_n,
            m_used=int(m),
        )
        for i, w in enumerate(weights)
    ]
    return Posterior(atoms, mode, spec.epsilon, alpha_n, matcher_label=spec.matcher.label)


def abc_reject(
    model,
    prior,
    x_obs: Sample,
    spec: MatchSpec,
    n_star: int,
    rng=0,
    threads: int = 1,
) -> Posterior:
    """Classical rejection ABC: one pseudo-sample per candidate, flat 0-1 weights."""
    tree = RngTree.from_seed(rng)
    thetas = prior_draw(prior, n_star, tree.child(K_DRAW).generator())

    def matched(i: int) -> bool:
        x_star = model.simulate(thetas[i], x_obs.n, tree.child(K_UNIT, i).generator())
        return spec.matcher.distance(x_obs, x_star) <= spec.epsilon

    hits = ordered_map(matched, range(len(thetas)), threads)
    atoms = [
        PosteriorAtom(theta_star=thetas[i], p_match=1.0 if h else 0.0, selected=h, m_used=1)
        for i, h in enumerate(hits)
    ]
    return Posterior(atoms, MODE_ABC_FLAT, spec.epsilon, None, matcher_label=spec.matcher.label)


def extend_abc_to_fabc(
    model,
    abc_posterior: Posterior,
    x_obs: Sample,
    spec: MatchSpec,
    m: int,
    rng=0,
    include_all: bool = False,
    threads: int = 1,
) -> Posterior:
    """Re-weight a rejection run with m additional pseudo-samples per candidate.

    Each extended candidate gets p_match over m + 1 draws, the original
    draw's match outcome included.  By default only the selected candidates
    are extended (the others keep their single-draw weight); with
    `include_all` every candidate is extended and kept, which drops the
    selection filter entirely.
    """
    if abc_posterior.mode != MODE_ABC_FLAT:
        raise ValueError("extension requires a rejection-ABC posterior")
    if abc_posterior.epsilon != spec.epsilon or abc_posterior.matcher_label != spec.matcher.label:
        raise ValueError("spec mismatch with the original run")
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    tree = RngTree.from_seed(rng)
    atoms = abc_posterior.atoms

    def extend(i: int) -> PosteriorAtom:
        atom = atoms[i]
        if not (include_all or atom.selected):
            return atom
        d = match_distances(model, atom.theta_star, x_obs, spec.matcher, m, tree.child(K_UNIT, i))
        hits = int(np.count_nonzero(d <= spec.epsilon)) + int(round(atom.p_match))
        return replace(
            atom,
            p_match=hits / (m + 1),
            m_used=m + 1,
            selected=True if include_all else atom.selected,
        )

    new_atoms = ordered_map(extend, range(len(atoms)), threads)
    mode = MODE_FOR_ALL if include_all else MODE_FILTERED
    alpha = 0.0 if include_all else None
    return Posterior(new_atoms, mode, spec.epsilon, alpha, matcher_label=abc_posterior.matcher_label)


def _support(posterior: Posterior, weighting: str) -> tuple[np.ndarray, np.ndarray]:
    if weighting not in (UNWEIGHTED, PMATCH_WEIGHTED):
        raise ValueError(f"unknown weighting: {weighting!r}")
    mask = posterior.selected_mask
    if not mask.any():
        raise EmptyPosteriorError("no selected candidates")
    thetas = posterior.thetas[mask]
    if weighting == UNWEIGHTED:
        w = np.ones(thetas.shape[0])
    else:
        w = posterior.p_match[mask]
    total = w.sum()
    if total <= 0:
        raise EmptyPosteriorError("no selected candidates with positive weight")
    return thetas, w / total


def summarize(posterior: Posterior, theta_true, weighting: str = UNWEIGHTED) -> SummaryStats:
    """Weighted mean, population variance and MSE against theta_true.

    The population-variance convention makes mse = sum_j variance_j +
    (mean_j - theta_true_j)^2 an exact identity.
    """
    thetas, w = _support(posterior, weighting)
    theta_true = as_parameter(theta_true, thetas.shape[1])
    mean = w @ thetas
    variance = w @ (thetas - mean) ** 2
    mse = float(np.sum(variance + (mean - theta_true) ** 2))
    return SummaryStats(mean, variance, mse, int(posterior.n_selected), weighting)


def expected_h(posterior: Posterior, h, weighting: str = PMATCH_WEIGHTED) -> float:
    """Posterior expectation of h, a normalized weighted average over atoms."""
    thetas, w = _support(posterior, weighting)
    values = np.array([float(h(theta)) for theta in thetas])
    return float(w @ values)


def pool_duplicates(posterior: Posterior) -> Posterior:
    """Merge atoms with identical theta_star, pooling their pseudo-sample draws.

    Useful for discrete parameter spaces where a value can be drawn more
    than once; the pooled weight is total matches over total draws.
    """
    pooled: dict[tuple, list] = {}
    order: list[tuple] = []
    for atom in posterior.atoms:
        key = tuple(atom.theta_star)
        if key not in pooled:
            pooled[key] = [0, 0, False]
            order.append(key)
        entry = pooled[key]
        entry[0] += round(atom.p_match * atom.m_used)  # match count is integral
        entry[1] += atom.m_used
        entry[2] = entry[2] or atom.selected
    atoms = []
    for key in order:
        matches, m_used, selected = pooled[key]
        atoms.append(PosteriorAtom(np.asarray(key), matches / m_used, selected, int(m_used)))
    return replace_posterior_atoms(posterior, atoms)


def replace_posterior_atoms(posterior: Posterior, atoms: list[PosteriorAtom]) -> Posterior:
    return Posterior(
        atoms,
        posterior.mode,
        posterior.epsilon,
        posterior.alpha,
        matcher_label=posterior.matcher_label,
    )


def atoms_to_csv(posterior: Posterior, path) -> None:
    """Columns theta_star_1..k, p_match, selected, m_used; full precision."""
    k = posterior.atoms[0].theta_star.size if posterior.atoms else 1
    header = [f"theta_star_{j + 1}" for j in range(k)] + ["p_match", "selected", "m_used"]

    def write(fh):
        writer = csv.writer(fh)
        writer.writerow(header)
        for atom in posterior.atoms:
            row = [str(float(v)) for v in atom.theta_star]
            row += [str(float(atom.p_match)), str(int(atom.selected)), str(atom.m_used)]
            writer.writerow(row)

    if hasattr(path, "write"):
        write(path)
    else:
        with open(path, "w", newline="") as fh:
            write(fh)


def atoms_from_csv(path, mode: str = MODE_FOR_ALL, epsilon: float = 0.0) -> Posterior:
    def read(fh):
        rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        k = sum(1 for name in header if name.startswith("theta_star_"))
        atoms = []
        for row in body:
            theta = np.array([float(v) for v in row[:k]])
            atoms.append(
                PosteriorAtom(theta, float(row[k]), bool(int(row[k + 1])), int(row[k + 2]))
            )
        return atoms

    if hasattr(path, "read"):
        atoms = read(path)
    else:
        with open(path, newline="") as fh:
            atoms = read(fh)
    return Posterior(atoms, mode, epsilon)


def posterior_to_json(posterior: Posterior, **metadata) -> str:
    """JSON document with run metadata and the full atom list."""
    doc = dict(metadata)
    doc.update(
        {
            "mode": posterior.mode,
            "epsilon": posterior.epsilon,
            "alpha": posterior.alpha,
            "matcher": posterior.matcher_label,
            "n_star": len(posterior.atoms),
            "count_selected": posterior.n_selected,
            "observed_msp": posterior.observed_msp,
            "status": "empty" if posterior.is_empty else "ok",
            "atoms": [
                {
                    "theta_star": [float(v) for v in a.theta_star],
                    "p_match": a.p_match,
                    "selected": a.selected,
                    "m_used": a.m_used,
                }
                for a in posterior.atoms
            ],
        }
    )
    return json.dumps(doc, indent=2, sort_keys=True)
