"""Simulation study: two regression settings, three covariate laws.

A replication draws independent training and test samples, tunes the kernel
bandwidths and ridge parameters on the training sample only, fits each
method with one sufficient predictor, and scores the test-set predictor by
absolute Spearman correlation with the noiseless mean and with the response.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateDataError, EmptyResultError, ParameterError, SdrError, ShapeError
from .kernels import bandwidth_heuristic, center_gram, gaussian, gram
from .sdr import fit_gsir, fit_kcca, fit_ksir, fit_sir, gcv_select, predict, ridge_param

log = logging.getLogger(__name__)

LAWS = ("V1", "V2", "V3")
SETTINGS = ("S1", "S2")
METHODS = ("SIR", "KCCA", "KSIR", "GSIR")
NOISE_SD = 0.5


def default_gcv_grid(n_points: int = 30) -> list[float]:
    """Log-spaced ridge fractions in [0.001, 1)."""
    return [float(z) for z in np.logspace(-3, 0, n_points, endpoint=False)]


@dataclass(frozen=True)
class CovariateSpec:
    law: str = "V1"
    p: int = 10

    def __post_init__(self):
        if self.law not in LAWS:
            raise ParameterError(f"unknown covariate law {self.law!r}")
        if self.p < 1:
            raise ParameterError("p must be >= 1")


@dataclass(frozen=True)
class SettingSpec:
    setting: str = "S1"
    noise_sd: float = NOISE_SD

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ParameterError(f"unknown setting {self.setting!r}")


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment, including its seed."""

    setting: str = "S1"
    law: str = "V1"
    p: int = 10
    n_train: int = 200
    n_test: int = 200
    n_reps: int = 100
    methods: tuple = METHODS
    tuning: str = "fixed"  # "fixed" or "gcv"
    zeta_x: float = 0.2
    zeta_y: float = 0.2
    gcv_grid: tuple = field(default_factory=lambda: tuple(default_gcv_grid()))
    n_slices: int = 10
    var_threshold: float = 0.8
    seed: int = 0

    def __post_init__(self):
        CovariateSpec(self.law, self.p)
        SettingSpec(self.setting)
        self.methods = tuple(m.upper() for m in self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise ParameterError(f"unknown method {m!r}")
        if self.n_reps < 1:
            raise ParameterError("n_reps must be >= 1")
        if self.tuning not in ("fixed", "gcv"):
            raise ParameterError(f"tuning must be 'fixed' or 'gcv', got {self.tuning!r}")
        if self.tuning == "gcv" and any(not (0.001 <= z < 1) for z in self.gcv_grid):
            raise ParameterError("GCV grid must lie in [0.001, 1)")
        self.gcv_grid = tuple(float(z) for z in self.gcv_grid)

    @property
    def cell(self) -> str:
        return f"{self.setting}-{self.law}"


# ---------------------------------------------------------------------------
# data generation
# ---------------------------------------------------------------------------


def v3_covariance(p: int) -> np.ndarray:
    return 0.6 * np.eye(p) + 0.4 * np.ones((p, p))


def gen_covariates(spec: CovariateSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ShapeError("n must be >= 1")
    p = spec.p
    Z = rng.standard_normal((n, p))
    if spec.law == "V1":
        return Z
    if spec.law == "V2":
        sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        return Z + sign[:, None]
    L = np.linalg.cholesky(v3_covariance(p))
    return Z @ L.T


def true_mean(setting: str, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ShapeError("the regression settings need p >= 2")
    if setting == "S1":
        return np.sin(0.1 * np.pi * (X[:, 0] + X[:, 1]))
    if setting == "S2":
        return X[:, 0] / (1.0 + np.exp(X[:, 1]))
    raise ParameterError(f"unknown setting {setting!r}")


def gen_response(spec: SettingSpec, X, rng: np.random.Generator):
    """Return ``(Y, truth)`` with ``Y = truth + N(0, noise_sd**2)`` noise."""
    truth = true_mean(spec.setting, X)
    Y = truth + spec.noise_sd * rng.standard_normal(truth.shape[0])
    return Y, truth


def spearman(a, b) -> float:
    """Spearman rank correlation (Pearson correlation of average ranks)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.size < 2:
        raise ShapeError("spearman needs two vectors of equal length >= 2")
    ra = rankdata(a) - (a.size + 1) / 2.0
    rb = rankdata(b) - (b.size + 1) / 2.0
    den = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if den == 0.0:
        raise DegenerateDataError("spearman correlation undefined for a constant input")
    return float(np.clip((ra @ rb) / den, -1.0, 1.0))


# ---------------------------------------------------------------------------
# replications
# ---------------------------------------------------------------------------


@dataclass
class RepOutcome:
    rep: int
    method: str
    cor_truth: float = math.nan
    cor_response: float = math.nan
    status: str = "ok"
    zeta_x: float = math.nan
    zeta_y: float = math.nan


def rep_rngs(seed: int, rep_index: int):
    """Independent (train, test) generators for one replication."""
    ss = np.random.SeedSequence([int(seed), int(rep_index)])
    train_ss, test_ss = ss.spawn(2)
    return np.random.default_rng(train_ss), np.random.default_rng(test_ss)


def draw_sample(config: ExperimentConfig, n: int, rng: np.random.Generator):
    X = gen_covariates(CovariateSpec(config.law, config.p), n, rng)
    Y, truth = gen_response(SettingSpec(config.setting), X, rng)
    return X, Y, truth


def run_replication(config: ExperimentConfig, rep_index: int) -> list[RepOutcome]:
    """Fit every configured method on one fresh train/test draw."""
    train_rng, test_rng = rep_rngs(config.seed, rep_index)
    X, Y, _ = draw_sample(config, config.n_train, train_rng)
    Xt, Yt, truth_t = draw_sample(config, config.n_test, test_rng)

    gamma_x, _ = bandwidth_heuristic(X)
    gamma_y, _ = bandwidth_heuristic(Y)
    kx, ky = gaussian(1.0 / gamma_x), gaussian(1.0 / gamma_y)

    zeta_x, zeta_y = config.zeta_x, config.zeta_y
    eta_x = eta_y = None
    tuning_error = None
    kernel_methods = {"KCCA", "GSIR"} & set(config.methods)
    if kernel_methods:
        try:
            # ridge fractions refer to the centred Grams the fitters regularize
            Gx, Gy = center_gram(gram(kx, X)), center_gram(gram(ky, Y))
            if config.tuning == "gcv":
                zeta_x, zeta_y = gcv_select(Gx, Gy, config.gcv_grid)
            eta_x, eta_y = ridge_param(Gx, zeta_x), ridge_param(Gy, zeta_y)
        except (SdrError, np.linalg.LinAlgError) as exc:
            tuning_error = exc

    outcomes = []
    for method in config.methods:
        out = RepOutcome(rep_index, method)
        try:
            if method in kernel_methods and tuning_error is not None:
                raise tuning_error
            if method == "SIR":
                model = fit_sir(X, Y, n_slices=config.n_slices, d=1)
            elif method == "KSIR":
                model = fit_ksir(X, Y, kx, n_slices=config.n_slices, d=1, var_threshold=config.var_threshold)
            elif method == "KCCA":
                model = fit_kcca(X, Y, kx, ky, eta_x, eta_y, d=1)
            else:
                model = fit_gsir(X, Y, kx, ky, eta_x, eta_y, d=1)
            pred = predict(model, Xt)[:, 0]
            out.cor_truth = abs(spearman(pred, truth_t))
            out.cor_response = abs(spearman(pred, Yt))
            if method in kernel_methods:
                out.zeta_x, out.zeta_y = zeta_x, zeta_y
        except (SdrError, np.linalg.LinAlgError) as exc:
            out.status = f"failed: {type(exc).__name__}: {exc}"
            log.warning("rep %d %s failed: %s", rep_index, method, exc)
        outcomes.append(out)
    return outcomes


@dataclass
class MethodSummary:
    method: str
    mean_truth: float
    sd_truth: float
    mean_response: float
    sd_response: float
    n_ok: int
    n_failed: int
    degenerate_sd: bool = False


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    summaries: dict
    outcomes: list

    def raw_csv(self) -> str:
        return outcomes_csv(self.outcomes)


def aggregate(outcomes: Sequence[RepOutcome], methods: Optional[Sequence[str]] = None) -> dict:
    """Per-method mean and (n-1)-denominator sd over successful replications."""
    if methods is None:
        methods = list(dict.fromkeys(o.method for o in outcomes))
    out = {}
    for method in methods:
        rows = sorted((o for o in outcomes if o.method == method), key=lambda o: o.rep)
        ok = [o for o in rows if o.status == "ok"]
        if not ok:
            raise EmptyResultError(f"no successful replication for {method}")
        t = np.array([o.cor_truth for o in ok])
        r = np.array([o.cor_response for o in ok])
        single = len(ok) == 1
        out[method] = MethodSummary(
            method,
            float(t.mean()),
            0.0 if single else float(t.std(ddof=1)),
            float(r.mean()),
            0.0 if single else float(r.std(ddof=1)),
            n_ok=len(ok),
            n_failed=len(rows) - len(ok),
            degenerate_sd=single,
        )
    return out


def default_threads() -> int:
    return max(1, int(os.environ.get("SDRKIT_THREADS", "1")))


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """Run all replications (optionally in a thread pool) and aggregate."""
    threads = default_threads() if threads is None else max(1, int(threads))
    reps = range(config.n_reps)
    if threads == 1:
        per_rep = [run_replication(config, i) for i in reps]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(lambda i: run_replication(config, i), reps))
    outcomes = [o for rep in per_rep for o in rep]
    return ExperimentResult(config, aggregate(outcomes, config.methods), outcomes)


def outcomes_csv(outcomes: Sequence[RepOutcome]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rep", "method", "cor_truth", "cor_response", "status"])
    for o in sorted(outcomes, key=lambda o: (o.rep, METHODS.index(o.method))):
        w.writerow([o.rep, o.method, f"{o.cor_truth:.10f}", f"{o.cor_response:.10f}", o.status])
    return buf.getvalue()


def config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["methods"] = list(config.methods)
    d["gcv_grid"] = list(config.gcv_grid)
    return d
