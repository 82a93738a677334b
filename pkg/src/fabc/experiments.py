"""Seeded experiment runners behind the CLI.

Every experiment is a pure function of (config, master seed): observed
data, candidates and replicates all come from named substreams of the
seed, so reruns and different thread counts give byte-identical outputs.
Runners only produce numbers (reports, tables, atom lists); figure
rendering is a downstream concern fed by the emitted CSV files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import (
    DEFAULT_QUANTILE_LEVELS,
    QuantileTable,
    build_quantile_table,
    default_probes,
)
from .empirical import (
    KS1D,
    MatchSpec,
    ParametricAbs,
    ProjectedTV,
    Sample,
    ks_distance_to_cdf,
    sample_directions,
)
from .inference import (
    MODE_FILTERED,
    MODE_FOR_ALL,
    PMATCH_WEIGHTED,
    UNWEIGHTED,
    EmptyPosteriorError,
    Posterior,
    abc_reject,
    extend_abc_to_fabc,
    fabc,
    summarize,
)
from .models import BivariateNormal, GridDiscretization, Normal1D, UniformBox, as_parameter
from .parallel import ordered_map
from .rng import K_ARM, K_COMPARISON, K_DIRECTIONS, K_OBSERVED, K_RETRY, K_RUN, RngTree

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "RunReport",
    "make_config",
    "representative_sample",
    "run_table1",
    "run_table2",
    "run_table34",
    "run_mse_race",
    "run_bivariate",
    "run_custom",
    "run_experiment",
]

EXPERIMENTS = ("table1", "table2", "table34", "mse-race", "bivariate", "custom")

# (nonparametric epsilon, parametric epsilon) pairs for the concentration table
DEFAULT_PAIRS = ((0.12, 0.1), (0.25, 0.5), (0.30, 0.6), (0.45, 1.0))


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    threads: int = 1
    # model
    model: str = "normal1d"
    sd: float = 1.0
    variances: tuple[float, float] = (1.0, 1.0)
    covariance: float = 0.5
    theta_true: tuple[float, ...] = (0.0,)
    # prior
    prior: str = "box"
    lower: tuple[float, ...] = (-1.0,)
    upper: tuple[float, ...] = (1.0,)
    ns: int = 15
    # sizes
    n: int = 100
    n_star: int = 1000
    m: int = 200
    m_cal: int = 500
    # matching
    matcher: str = "ks"
    epsilon: float = 0.12
    epsilon_par: float = 0.15
    alpha: float = 0.0
    mode: str = MODE_FOR_ALL
    reference: float = 0.0
    k_directions: int = 50
    # calibration
    theta_b: tuple[float, ...] = (0.0,)
    probes: tuple | None = None
    probe_count: int = 9
    probe_spacing: float = 0.5
    quantile_levels: tuple[float, ...] = DEFAULT_QUANTILE_LEVELS
    # concentration-table pairs and race sizes
    pairs: tuple = DEFAULT_PAIRS
    runs: int = 10
    comparisons: int = 100
    paper_scale: bool = False
    retries: int = 3
    # observed-data source: "simulate" draws once from theta_true;
    # "representative" redraws until the sample's exact CDF distance to the
    # model is <= x_quality/sqrt(n) (a quality gate for conditioning
    # samples); "stylized" uses the deterministic inverse-CDF stand-in.
    x_style: str = "simulate"
    x_quality: float = 0.5
    # optional observed-data file (CSV, one observation per row)
    x_path: str | None = None

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc.pop("threads")  # execution detail, not part of the statistical config
        return doc

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment: {self.experiment!r}")
        for name in ("n", "n_star", "m", "m_cal", "ns", "k_directions", "runs", "comparisons"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epsilon < 0 or self.epsilon_par < 0:
            raise ValueError("tolerances must be >= 0")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.x_style not in ("simulate", "representative", "stylized"):
            raise ValueError(f"unknown x_style: {self.x_style!r}")
        if self.seed is None:
            raise ValueError("a seed is mandatory; wall-clock seeding is not supported")


_DEFAULTS = {
    "table1": dict(n=100, m_cal=500, theta_b=(0.0,), probe_count=9, probe_spacing=0.5, x_style="stylized"),
    "table2": dict(n=100, n_star=1000, lower=(-1.0,), upper=(1.0,), x_style="representative"),
    "table34": dict(n=200, n_star=1000, m=200, epsilon=0.12, epsilon_par=0.15),
    "mse-race": dict(
        n=100, n_star=100, m=100, epsilon=0.12, epsilon_par=0.15,
        runs=10, comparisons=100, x_style="representative",
    ),
    "bivariate": dict(
        model="bivariate-normal",
        n=50,
        theta_true=(0.0, 2.0),
        lower=(-1.0, -2.0),
        upper=(2.0, 3.0),
        ns=15,
        k_directions=50,
        m=200,
        epsilon=0.33,
        matcher="projected",
        prior="grid",
    ),
    "custom": dict(),
}


def make_config(experiment: str, seed: int, **overrides) -> ExperimentConfig:
    """Experiment defaults plus explicit overrides, validated."""
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment: {experiment!r}")
    params = dict(_DEFAULTS[experiment])
    params.update(overrides)
    config = ExperimentConfig(experiment=experiment, seed=int(seed), **params)
    config.validate()
    return config


@dataclass
class RunReport:
    """Numbers produced by one experiment run; everything is (config, seed)-determined."""

    experiment: str
    seed: int
    config: dict
    arms: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    timing_seconds: float | None = None
    artifacts: dict = field(default_factory=dict, repr=False)

    def to_json_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "arms": self.arms,
            "extras": self.extras,
        }
        # timing is not reproducible from (config, seed), so it is opt-in
        if include_timing:
            doc["timing_seconds"] = self.timing_seconds
        return doc

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_json_dict(include_timing), indent=2, sort_keys=True)


def _arm_summary(posterior: Posterior, theta_true, weighting: str) -> dict:
    doc = {
        "count_selected": posterior.n_selected,
        "n_star": len(posterior.atoms),
        "observed_msp": posterior.observed_msp,
        "weighting": weighting,
        "status": "empty" if posterior.is_empty else "ok",
    }
    try:
        doc["summary"] = summarize(posterior, theta_true, weighting).as_dict()
    except EmptyPosteriorError:
        doc["summary"] = None
    return doc


def _build_model(config: ExperimentConfig):
    if config.model == "normal1d":
        return Normal1D(config.sd)
    if config.model == "bivariate-normal":
        return BivariateNormal(tuple(config.variances), config.covariance)
    raise ValueError(f"unknown model: {config.model!r}")


def _build_prior(config: ExperimentConfig):
    if config.prior == "box":
        return UniformBox(config.lower, config.upper)
    if config.prior == "grid":
        return GridDiscretization(config.ns, config.lower, config.upper)
    raise ValueError(f"unknown prior: {config.prior!r}")


def _build_matcher(config: ExperimentConfig, tree: RngTree):
    if config.matcher == "ks":
        return KS1D()
    if config.matcher == "parametric":
        return ParametricAbs(config.reference)
    if config.matcher == "projected":
        model = _build_model(config)
        dirs = sample_directions(model.dim, config.k_directions, tree.child(K_DIRECTIONS).generator())
        return ProjectedTV(dirs)
    raise ValueError(f"unknown matcher: {config.matcher!r}")


def representative_sample(model, theta, n: int, rng, quality: float = 0.5, max_tries: int = 5000) -> Sample:
    """Redraw until the exact CDF distance to the model is <= quality/sqrt(n).

    quality is in units of the typical sampling error 1/sqrt(n); 0.5 keeps
    roughly the most representative few percent of draws.
    """
    if not hasattr(model, "cdf"):
        raise ValueError("representative sampling needs a model with a 1-d cdf")
    threshold = float(quality) / math.sqrt(n)
    gen = rng.generator() if isinstance(rng, RngTree) else rng
    for _ in range(max_tries):
        x = model.simulate(theta, n, gen)
        if ks_distance_to_cdf(x.column(), lambda v: model.cdf(theta, v)) <= threshold:
            return x
    raise RuntimeError(f"no draw reached quality {quality} within {max_tries} tries")


def _observed_sample(config: ExperimentConfig, model, tree: RngTree, theta=None) -> Sample:
    if config.x_path is not None:
        from .empirical import sample_from_csv

        return sample_from_csv(config.x_path)
    theta = config.theta_true if theta is None else theta
    gen = tree.child(K_OBSERVED).generator()
    if config.x_style == "simulate":
        return model.simulate(theta, config.n, gen)
    if config.x_style == "representative":
        return representative_sample(model, theta, config.n, gen, config.x_quality)
    if config.x_style == "stylized":
        return model.quasi_sample(theta, config.n)
    raise ValueError(f"unknown x_style: {config.x_style!r}")


def run_table1(config: ExperimentConfig) -> tuple[QuantileTable, RunReport]:
    """Quantile table of matching distances for probes stepping away from a base value."""
    t0 = time.perf_counter()
    model = Normal1D(config.sd)
    tree = RngTree.from_seed(config.seed)
    theta_b = as_parameter(config.theta_b)
    x = _observed_sample(config, model, tree, theta=theta_b)
    if config.probes is not None:
        probes = np.atleast_2d(np.asarray(config.probes, dtype=float).reshape(-1, theta_b.size))
    else:
        probes = default_probes(theta_b, config.probe_count, config.probe_spacing * config.sd)
    table = build_quantile_table(
        model,
        x,
        probes,
        config.m_cal,
        KS1D(),
        tree.child(K_ARM, 0),
        levels=config.quantile_levels,
        threads=config.threads,
    )
    report = RunReport(
        experiment="table1",
        seed=config.seed,
        config=config.to_dict(),
        extras={
            "probes": [list(map(float, p)) for p in table.probes],
            "levels": list(table.levels),
            "entries": [[float(v) for v in row] for row in table.entries],
        },
        timing_seconds=time.perf_counter() - t0,
        artifacts={"table": table, "x_obs": x},
    )
    return table, report


def run_table2(config: ExperimentConfig) -> RunReport:
    """Rejection-ABC concentration: empirical-CDF matching vs the sample-mean baseline."""
    t0 = time.perf_counter()
    model = Normal1D(config.sd)
    tree = RngTree.from_seed(config.seed)
    x = _observed_sample(config, model, tree)
    prior = UniformBox(config.lower, config.upper)
    arms: dict = {}
    posteriors: dict = {}
    for j, (eps, eps_par) in enumerate(config.pairs):
        post_np = abc_reject(
            model, prior, x, MatchSpec(KS1D(), eps), config.n_star, tree.child(K_ARM, j, 0), config.threads
        )
        post_par = abc_reject(
            model,
            prior,
            x,
            MatchSpec(ParametricAbs(config.reference), eps_par),
            config.n_star,
            tree.child(K_ARM, j, 1),
            config.threads,
        )
        arms[f"pair_{j}"] = {
            "epsilon": eps,
            "epsilon_par": eps_par,
            "nonparametric": _arm_summary(post_np, config.theta_true, UNWEIGHTED),
            "parametric": _arm_summary(post_par, config.theta_true, UNWEIGHTED),
        }
        posteriors[f"pair_{j}_nonparametric"] = post_np
        posteriors[f"pair_{j}_parametric"] = post_par
    return RunReport(
        experiment="table2",
        seed=config.seed,
        config=config.to_dict(),
        arms=arms,
        timing_seconds=time.perf_counter() - t0,
        artifacts=posteriors,
    )


def _table34_arms(config: ExperimentConfig, tree: RngTree):
    """One full pipeline attempt; returns None when the ABC stage selects nothing."""
    model = _build_model(config)
    spec_np = MatchSpec(KS1D(), config.epsilon)
    spec_par = MatchSpec(ParametricAbs(config.reference), config.epsilon_par)
    prior = UniformBox(config.lower, config.upper)
    x = _observed_sample(config, model, tree)
    post_abc = abc_reject(model, prior, x, spec_np, config.n_star, tree.child(K_ARM, 0), config.threads)
    if post_abc.is_empty:
        return None
    ext_all = extend_abc_to_fabc(
        model, post_abc, x, spec_np, config.m, tree.child(K_ARM, 1), include_all=True, threads=config.threads
    )
    # selected-candidates view of the same extension pass
    fabc_sel = Posterior(
        [replace(a, selected=bool(s)) for a, s in zip(ext_all.atoms, post_abc.selected_mask)],
        MODE_FILTERED,
        spec_np.epsilon,
        None,
        matcher_label=ext_all.matcher_label,
    )
    post_par = abc_reject(model, prior, x, spec_par, config.n_star, tree.child(K_ARM, 2), config.threads)
    return post_abc, fabc_sel, ext_all, post_par


def run_table34(config: ExperimentConfig) -> RunReport:
    """Four-arm concentration comparison built on one rejection run per seed."""
    t0 = time.perf_counter()
    tree = RngTree.from_seed(config.seed)
    result = None
    attempts = 0
    for attempt in range(config.retries + 1):
        attempts = attempt + 1
        result = _table34_arms(config, tree.child(K_RETRY, attempt))
        if result is not None:
            break
    if result is None:
        return RunReport(
            experiment="table34",
            seed=config.seed,
            config=config.to_dict(),
            extras={"non_terminated": True, "attempts": attempts},
            timing_seconds=time.perf_counter() - t0,
        )
    post_abc, fabc_sel, ext_all, post_par = result
    arms = {
        "abc": _arm_summary(post_abc, config.theta_true, UNWEIGHTED),
        "fabc_selected": _arm_summary(fabc_sel, config.theta_true, PMATCH_WEIGHTED),
        "fabc_all": _arm_summary(ext_all, config.theta_true, PMATCH_WEIGHTED),
        "abc_parametric": _arm_summary(post_par, config.theta_true, UNWEIGHTED),
    }
    return RunReport(
        experiment="table34",
        seed=config.seed,
        config=config.to_dict(),
        arms=arms,
        extras={"non_terminated": False, "attempts": attempts},
        timing_seconds=time.perf_counter() - t0,
        artifacts={
            "abc": post_abc,
            "fabc_selected": fabc_sel,
            "fabc_all": ext_all,
            "abc_parametric": post_par,
        },
    )


def _one_comparison(model, prior, spec_np, spec_par, x, config: ExperimentConfig, tree: RngTree) -> bool | None:
    """True when the extended run beats the parametric baseline on MSE; None on empty selection."""
    post_abc = abc_reject(model, prior, x, spec_np, config.n_star, tree.child(K_ARM, 0))
    post_par = abc_reject(model, prior, x, spec_par, config.n_star, tree.child(K_ARM, 2))
    if post_abc.is_empty or post_par.is_empty:
        return None
    ext = extend_abc_to_fabc(model, post_abc, x, spec_np, config.m, tree.child(K_ARM, 1))
    mse_fabc = summarize(ext, config.theta_true, PMATCH_WEIGHTED).mse
    mse_abc = summarize(post_par, config.theta_true, UNWEIGHTED).mse
    return bool(mse_fabc < mse_abc)


def run_mse_race(config: ExperimentConfig) -> RunReport:
    """Repeat head-to-head MSE comparisons and count how often the extension wins.

    Each run draws one observed sample shared by its K comparisons.  A run
    in which any comparison ends with an empty selection is restarted on a
    fresh substream (bounded retries), mirroring how non-terminating
    repetitions are handled when tolerances are tight.
    """
    t0 = time.perf_counter()
    runs = 50 if config.paper_scale else config.runs
    comparisons = 1000 if config.paper_scale else config.comparisons
    model = _build_model(config)
    prior = UniformBox(config.lower, config.upper)
    spec_np = MatchSpec(KS1D(), config.epsilon)
    spec_par = MatchSpec(ParametricAbs(config.reference), config.epsilon_par)
    tree = RngTree.from_seed(config.seed)
    t_values: list[int | None] = []
    non_terminations = 0
    for r in range(runs):
        t_value = None
        for attempt in range(config.retries + 1):
            sub = tree.child(K_RUN, r).child(K_RETRY, attempt)
            x = _observed_sample(config, model, sub, theta=config.theta_true)
            outcomes = ordered_map(
                lambda c: _one_comparison(model, prior, spec_np, spec_par, x, config, sub.child(K_COMPARISON, c)),
                range(comparisons),
                config.threads,
            )
            if any(o is None for o in outcomes):
                non_terminations += 1
                continue
            t_value = sum(1 for o in outcomes if o)
            break
        t_values.append(t_value)
    completed = [t for t in t_values if t is not None]
    wins = sum(1 for t in completed if t > comparisons / 2)
    return RunReport(
        experiment="mse-race",
        seed=config.seed,
        config=config.to_dict(),
        extras={
            "runs": runs,
            "comparisons": comparisons,
            "t_values": t_values,
            "completed_runs": len(completed),
            "winning_runs": wins,
            "winning_fraction": wins / len(completed) if completed else None,
            "non_terminations": non_terminations,
        },
        timing_seconds=time.perf_counter() - t0,
    )


def run_bivariate(config: ExperimentConfig) -> RunReport:
    """Grid posterior in the plane with shared projection directions."""
    t0 = time.perf_counter()
    model = BivariateNormal(tuple(config.variances), config.covariance)
    tree = RngTree.from_seed(config.seed)
    x = _observed_sample(config, model, tree)
    dirs = sample_directions(2, config.k_directions, tree.child(K_DIRECTIONS).generator())
    spec = MatchSpec(ProjectedTV(dirs), config.epsilon)
    grid = GridDiscretization(config.ns, config.lower, config.upper)
    post_abc = abc_reject(model, grid, x, spec, grid.size, tree.child(K_ARM, 0), config.threads)
    ext_all = extend_abc_to_fabc(
        model, post_abc, x, spec, config.m, tree.child(K_ARM, 1), include_all=True, threads=config.threads
    )
    arms = {
        "abc": _arm_summary(post_abc, config.theta_true, UNWEIGHTED),
        "fabc_all": _arm_summary(ext_all, config.theta_true, PMATCH_WEIGHTED),
    }
    return RunReport(
        experiment="bivariate",
        seed=config.seed,
        config=config.to_dict(),
        arms=arms,
        extras={"grid_size": grid.size, "k_directions": config.k_directions},
        timing_seconds=time.perf_counter() - t0,
        artifacts={"abc": post_abc, "fabc_all": ext_all},
    )


def run_custom(config: ExperimentConfig) -> RunReport:
    """Config-driven matching-support run for user-supplied settings."""
    t0 = time.perf_counter()
    tree = RngTree.from_seed(config.seed)
    model = _build_model(config)
    prior = _build_prior(config)
    matcher = _build_matcher(config, tree)
    spec = MatchSpec(matcher, config.epsilon)
    x = _observed_sample(config, model, tree)
    post = fabc(
        model,
        prior,
        x,
        spec,
        config.m,
        config.n_star,
        config.alpha,
        mode=config.mode,
        rng=tree.child(K_ARM, 0),
        threads=config.threads,
    )
    weighting = PMATCH_WEIGHTED
    return RunReport(
        experiment="custom",
        seed=config.seed,
        config=config.to_dict(),
        arms={"fabc": _arm_summary(post, config.theta_true, weighting)},
        timing_seconds=time.perf_counter() - t0,
        artifacts={"fabc": post},
    )


def run_experiment(config: ExperimentConfig) -> RunReport:
    config.validate()
    if config.experiment == "table1":
        return run_table1(config)[1]
    if config.experiment == "table2":
        return run_table2(config)
    if config.experiment == "table34":
        return run_table34(config)
    if config.experiment == "mse-race":
        return run_mse_race(config)
    if config.experiment == "bivariate":
        return run_bivariate(config)
    if config.experiment == "custom":
        return run_custom(config)
    raise ValueError(f"unknown experiment: {config.experiment!r}")
