"""Monte Carlo driver for FDR and power studies over a sweep of k."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engines import DirectZSpec, direct_z, lasso_statistics, marginal_statistics
from .errors import InvalidEngineForKind, ValidationError
from .gaussian import (
    CovarianceModel,
    equicorrelated_s,
    equicorrelated_sigma,
    prepare_factors,
    sample_design,
    sample_knockoffs,
)
from .selection import WMatrix, build_w, evaluate_truth, threshold_scan

KINDS = ("direct", "linear-regression")
ENGINES = ("direct", "lasso", "marginal")
DEFAULT_K_SWEEP = (2, 3, 4, 5, 6, 8, 10)


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "direct"
    p: int = 5000
    k: tuple = DEFAULT_K_SWEEP
    q: float = 0.1
    amplitude: float = 2.0
    n_signals: int = 500
    replicates: int = 200
    seed: int = 0
    engine: str | None = None
    ref_size: int | None = None
    plus_one: bool = False
    name: str = "scenario"
    # linear-regression only
    n: int = 200
    rho: float = 0.0
    noise_sd: float = 1.0
    fix_design: bool = True
    lam: str | float = "auto"

    def __post_init__(self):
        k = (self.k,) if np.isscalar(self.k) else tuple(self.k)
        object.__setattr__(self, "k", tuple(int(v) for v in k))
        if self.engine is None:
            object.__setattr__(self, "engine", "direct" if self.kind == "direct" else "lasso")
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        if self.engine not in ENGINES:
            raise ValidationError(f"engine must be one of {ENGINES}")
        if (self.kind == "direct") != (self.engine == "direct"):
            raise InvalidEngineForKind(f"engine {self.engine!r} cannot drive kind {self.kind!r}")
        if self.p < 1:
            raise ValidationError("p must be positive")
        if not 0 <= self.n_signals <= self.p:
            raise ValidationError("n_signals must lie in [0, p]")
        if not 0 < self.q < 1:
            raise ValidationError("q must lie in (0, 1)")
        if self.replicates < 1:
            raise ValidationError("replicates must be at least 1")
        if not self.k or min(self.k) < 2:
            raise ValidationError("every k must be at least 2")
        if self.ref_size is not None and self.ref_size < 1:
            raise ValidationError("ref_size must be at least 1")
        if self.kind == "linear-regression":
            if self.n < 2:
                raise ValidationError("n must be at least 2")
            if not -1.0 / max(self.p - 1, 1) < self.rho < 1:
                raise ValidationError("rho does not give a positive definite equicorrelation matrix")
            if self.noise_sd < 0:
                raise ValidationError("noise_sd must be nonnegative")

    @property
    def truth(self) -> frozenset:
        return frozenset(range(self.n_signals))

    def ref_size_for(self, k: int) -> int:
        return k - 1 if self.ref_size is None else self.ref_size


@dataclass
class MonteCarloReport:
    per_replicate: list = field(default_factory=list)
    aggregate: list = field(default_factory=list)

    PER_REPLICATE_COLUMNS = ("scenario", "k", "replicate", "threshold", "n_selected", "fdp", "tpp")
    AGGREGATE_COLUMNS = ("k", "mean_fdr", "se_fdr", "mean_power", "se_power", "mean_selected")

    def aggregate_for(self, k: int) -> dict:
        for row in self.aggregate:
            if row["k"] == k:
                return row
        raise KeyError(k)


@dataclass
class RegressionScenario:
    """Fixed ingredients of a linear-regression scenario ``y = X beta + eps``."""

    model: CovarianceModel
    beta: np.ndarray
    noise_sd: float
    n: int
    X: np.ndarray | None
    truth: frozenset

    def draw_design(self, rng) -> np.ndarray:
        return sample_design(self.n, self.model.sigma, rng)

    def draw_y(self, X, rng) -> np.ndarray:
        return X @ self.beta + self.noise_sd * rng.standard_normal(X.shape[0])


def replicate_seed(config: ScenarioConfig, k: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.seed, spawn_key=(k, rep))


def make_regression_scenario(config: ScenarioConfig) -> RegressionScenario:
    """Build the covariance model, coefficients and (when fixed) the design.

    The fixed design is drawn from its own substream of the seed, so it is
    shared by every k and every replicate.
    """
    if config.kind != "linear-regression":
        raise ValidationError("make_regression_scenario needs kind='linear-regression'")
    model = CovarianceModel(equicorrelated_sigma(config.p, config.rho))
    model = model.with_s(equicorrelated_s(model))
    beta = np.zeros(config.p)
    beta[: config.n_signals] = config.amplitude
    X = None
    if config.fix_design:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
        X = sample_design(config.n, model.sigma, rng)
    return RegressionScenario(model, beta, config.noise_sd, config.n, X, config.truth)


class ScenarioRunner:
    """Per-config caches shared across replicates (read-only once built)."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.regression = make_regression_scenario(config) if config.kind == "linear-regression" else None
        self._factors = {}
        if self.regression is not None:
            for k in config.k:
                self.factors(k)

    def factors(self, k):
        if k not in self._factors:
            self._factors[k] = prepare_factors(self.regression.model, k, self.config.ref_size_for(k))
        return self._factors[k]

    def w_for(self, k: int, rep: int) -> WMatrix:
        cfg = self.config
        ss = replicate_seed(cfg, k, rep)
        data_ss, ko_ss = ss.spawn(2)
        rng = np.random.default_rng(data_ss)
        ref_size = cfg.ref_size_for(k)
        if cfg.kind == "direct":
            spec = DirectZSpec.sparse(cfg.p, cfg.n_signals, cfg.amplitude, k, ref_size)
            tensor = direct_z(spec, rng)
        else:
            sc = self.regression
            X = sc.X if sc.X is not None else sc.draw_design(rng)
            y = sc.draw_y(X, rng)
            kos = sample_knockoffs(X, self.factors(k), ko_ss)
            if cfg.engine == "lasso":
                tensor = lasso_statistics(X, kos, y, lam=cfg.lam, k=k, ref_size=ref_size)
            else:
                tensor = marginal_statistics(X, kos, y, k=k, ref_size=ref_size)
        return build_w(tensor)

    def replicate(self, k: int, rep: int) -> dict:
        cfg = self.config
        result = threshold_scan(self.w_for(k, rep), cfg.q, plus_one=cfg.plus_one)
        fdp, tpp = evaluate_truth(result, cfg.truth)
        return {
            "scenario": cfg.name,
            "k": k,
            "replicate": rep,
            "threshold": result.threshold,
            "n_selected": result.n_selected,
            "fdp": fdp,
            "tpp": tpp,
        }


def _parallel_map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda it: fn(*it), items))


def _se(x):
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def aggregate_rows(per_replicate: list, ks) -> list:
    rows = []
    for k in ks:
        sub = [r for r in per_replicate if r["k"] == k]
        fdp = np.array([r["fdp"] for r in sub])
        tpp = np.array([r["tpp"] for r in sub])
        nsel = np.array([r["n_selected"] for r in sub], dtype=float)
        rows.append({
            "k": k,
            "mean_fdr": float(np.mean(fdp)),
            "se_fdr": _se(fdp),
            "mean_power": float(np.mean(tpp)),
            "se_power": _se(tpp),
            "mean_selected": float(np.mean(nsel)),
        })
    return rows


def run_scenario(config: ScenarioConfig, threads: int | None = None) -> MonteCarloReport:
    """Run every (k, replicate) cell and aggregate FDR and power per k.

    Each cell draws its randomness from ``SeedSequence(seed, spawn_key=(k, rep))``
    so results do not depend on ``threads`` or scheduling.
    """
    runner = ScenarioRunner(config)
    items = [(k, rep) for k in config.k for rep in range(config.replicates)]
    per_rep = _parallel_map(runner.replicate, items, threads)
    return MonteCarloReport(per_replicate=per_rep, aggregate=aggregate_rows(per_rep, config.k))


def benchmark_scenario(replicates: int = 200, k: tuple = (2, 3, 4, 5, 6), seed: int = 2024) -> ScenarioConfig:
    """The direct-statistics example: p = 5000, a = 2, 500 signals, q = 0.1."""
    return ScenarioConfig(kind="direct", p=5000, k=k, q=0.1, amplitude=2.0, n_signals=500,
                          replicates=replicates, seed=seed, name="test1")
