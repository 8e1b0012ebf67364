"""Seeded Monte-Carlo sweeps: run trials, classify residuals, aggregate logical error rates.

Trial t at grid point (gamma, p, sigma) draws from a generator seeded by
(master_seed, grid indices, t) only. The decoder mode is left out of the key,
so every mode at a grid point sees the same qubit errors and syndrome noise.
Batches are reduced in submission order, which makes results independent of
the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import pathlib
from collections import deque
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from codes import CssCode, builtin_code, lifted_product, load_base_matrix, load_code_alist
from config import CSV_SCHEMA, DEFAULT_BATCH_SIZE, resolve_seed
from decoder import DecoderConfig, DecoderMode, TannerGraph, build_graph, channel_prior, decode
from gf2 import BitVector, DimensionError, mat_vec_mod2
from noise import NoiseParams, PauliErrorVector, observe_syndrome, sample_depolarizing

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "code", "mode", "p", "sigma", "beta", "gamma_cutoff", "l_max", "trials", "logical_errors",
    "ler", "ler_stderr", "avg_iterations", "avg_iterations_converged", "seed",
]


class ConfigError(ValueError):
    """An experiment configuration cannot be used."""


# ─── Configuration ───

class CodeSource(BaseModel):
    builtin: str | None = None
    tanner: bool = False
    base_a: str | None = None
    base_b: str | None = None
    hx_alist: str | None = None
    hz_alist: str | None = None
    name: str | None = None
    d_label: int | None = None

    @model_validator(mode="after")
    def _one_source(self):
        kinds = [self.builtin is not None, self.tanner, self.base_a is not None, self.hx_alist is not None]
        if sum(kinds) != 1:
            raise ValueError("give exactly one of builtin, tanner, base_a/base_b or hx_alist/hz_alist")
        if self.hx_alist is not None and self.hz_alist is None:
            raise ValueError("hx_alist needs hz_alist")
        return self


class StopRule(BaseModel):
    trials: int | None = Field(None, gt=0)
    target_errors: int | None = Field(None, gt=0)
    max_trials: int = Field(1_000_000, gt=0)

    @model_validator(mode="after")
    def _one_rule(self):
        if (self.trials is None) == (self.target_errors is None):
            raise ValueError("give exactly one of trials or target_errors")
        return self

    @property
    def limit(self) -> int:
        return self.trials if self.trials is not None else self.max_trials


class ExperimentConfig(BaseModel):
    code: CodeSource
    p_grid: list[float] = Field(min_length=1)
    sigma_grid: list[float] = Field(min_length=1)
    modes: list[DecoderMode] = Field(min_length=1)
    gamma_grid: list[float] | None = None
    decoder: DecoderConfig = DecoderConfig()
    stop_rule: StopRule
    master_seed: int = Field(0, ge=0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, gt=0)

    @field_validator("p_grid")
    @classmethod
    def _probabilities(cls, v):
        if any(not 0.0 <= p <= 1.0 for p in v):
            raise ValueError("every p must lie in [0, 1]")
        return v

    @field_validator("sigma_grid")
    @classmethod
    def _sigmas(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("every sigma must be >= 0")
        return v

    @field_validator("gamma_grid")
    @classmethod
    def _gammas(cls, v):
        if v is not None and (not v or any(g < 0 for g in v)):
            raise ValueError("gamma_grid must be non-empty with values >= 0")
        return v

    @property
    def gammas(self) -> list[float]:
        return self.gamma_grid if self.gamma_grid is not None else [self.decoder.gamma_cutoff]


def load_experiment_config(path) -> ExperimentConfig:
    try:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        config = ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e
    return _resolve_paths(config, pathlib.Path(path).parent)


def _resolve_paths(config: ExperimentConfig, base_dir: pathlib.Path) -> ExperimentConfig:
    updates = {}
    for key in ("base_a", "base_b", "hx_alist", "hz_alist"):
        value = getattr(config.code, key)
        if value is not None and not pathlib.Path(value).is_absolute():
            updates[key] = str(base_dir / value)
    if not updates:
        return config
    return config.model_copy(update={"code": config.code.model_copy(update=updates)})


def load_code(source: CodeSource) -> CssCode:
    if source.builtin is not None:
        return builtin_code(source.builtin)
    if source.tanner:
        return builtin_code("lp_tanner")
    if source.base_a is not None:
        a = load_base_matrix(source.base_a)
        b = load_base_matrix(source.base_b) if source.base_b else a
        return lifted_product(a, b, name=source.name or pathlib.Path(source.base_a).stem, d_label=source.d_label)
    return load_code_alist(source.hx_alist, source.hz_alist, name=source.name)


# ─── Trials ───

class Classification(str, Enum):
    SUCCESS = "SUCCESS"
    LOGICAL_ERROR = "LOGICAL_ERROR"


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    converged_x: bool
    converged_z: bool
    iterations_x: int
    iterations_z: int
    classification: Classification


@dataclass(frozen=True, eq=False)
class CodeGraphs:
    """Tanner graphs of H_Z (decodes e_X) and H_X (decodes e_Z), shared read-only."""

    code: CssCode
    graph_x: TannerGraph
    graph_z: TannerGraph

    @classmethod
    def build(cls, code: CssCode) -> CodeGraphs:
        return cls(code, build_graph(code.h_z), build_graph(code.h_x))


def classify(code: CssCode, e: PauliErrorVector, x_hat_x: BitVector, x_hat_z: BitVector) -> Classification:
    """Success iff both residuals have trivial syndrome and are stabilizers."""
    if x_hat_x.shape != (code.n,) or x_hat_z.shape != (code.n,) or e.n != code.n:
        raise DimensionError(f"estimates and error must have length n={code.n}")
    r_x = e.e_x ^ x_hat_x
    r_z = e.e_z ^ x_hat_z
    if mat_vec_mod2(code.h_z, r_x).any() or mat_vec_mod2(code.h_x, r_z).any():
        return Classification.LOGICAL_ERROR
    if not code.row_space_x.contains(r_x) or not code.row_space_z.contains(r_z):
        return Classification.LOGICAL_ERROR
    return Classification.SUCCESS


def run_trial(code: CssCode, params: NoiseParams, mode: DecoderMode, config: DecoderConfig,
              rng: np.random.Generator, graphs: CodeGraphs | None = None,
              trial_index: int = 0) -> TrialOutcome:
    graphs = graphs or CodeGraphs.build(code)
    config = config if config.mode == mode else config.model_copy(update={"mode": mode})
    e = sample_depolarizing(code.n, params.p, rng)
    sigma = 0.0 if mode == DecoderMode.PERFECT else params.sigma
    # X and Z syndromes share the Pauli sample but get independent readout noise
    obs_x = observe_syndrome(mat_vec_mod2(code.h_z, e.e_x), sigma, config.llr_sat, rng)
    obs_z = observe_syndrome(mat_vec_mod2(code.h_x, e.e_z), sigma, config.llr_sat, rng)
    prior = channel_prior(params.p, config.prior_mode, config.llr_sat)
    result_x = decode(graphs.graph_x, code.h_z, prior, obs_x, config)
    result_z = decode(graphs.graph_z, code.h_x, prior, obs_z, config)
    return TrialOutcome(
        trial_index=trial_index,
        converged_x=result_x.converged,
        converged_z=result_z.converged,
        iterations_x=result_x.iterations,
        iterations_z=result_z.iterations,
        classification=classify(code, e, result_x.x_hat, result_z.x_hat),
    )


def trial_rng(master_seed: int, point_key: tuple[int, ...], trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(*point_key, trial_index)))


# ─── Aggregation ───

def stderr_estimate(errors: int, trials: int) -> float:
    """Binomial standard error of errors / trials."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    q = errors / trials
    return math.sqrt(q * (1.0 - q) / trials)


@dataclass(frozen=True)
class AggregateStats:
    code: str
    mode: DecoderMode
    p: float
    sigma: float
    beta: float
    gamma_cutoff: float
    l_max: int
    trials: int
    logical_errors: int
    ler: float
    ler_stderr: float
    avg_iterations: float
    avg_iterations_converged: float
    seed: int

    def confidence_interval(self, z: float = 1.96) -> tuple[float, float]:
        return max(0.0, self.ler - z * self.ler_stderr), min(1.0, self.ler + z * self.ler_stderr)

    def csv_row(self) -> list[str]:
        return [
            self.code, self.mode.value, _fmt(self.p), _fmt(self.sigma), _fmt(self.beta),
            _fmt(self.gamma_cutoff), str(self.l_max), str(self.trials), str(self.logical_errors),
            _fmt(self.ler), _fmt(self.ler_stderr), _fmt(self.avg_iterations),
            _fmt(self.avg_iterations_converged), str(self.seed),
        ]


def _fmt(x: float) -> str:
    return repr(float(x))


def aggregate(code_name: str, mode: DecoderMode, params: NoiseParams, config: DecoderConfig,
              outcomes: list[TrialOutcome], seed: int) -> AggregateStats:
    trials = len(outcomes)
    errors = sum(o.classification == Classification.LOGICAL_ERROR for o in outcomes)
    side_iterations = [o.iterations_x + o.iterations_z for o in outcomes]
    converged = [o.iterations_x for o in outcomes if o.converged_x] + [o.iterations_z for o in outcomes if o.converged_z]
    return AggregateStats(
        code=code_name,
        mode=mode,
        p=params.p,
        sigma=params.sigma,
        beta=config.beta,
        gamma_cutoff=config.gamma_cutoff,
        l_max=config.l_max,
        trials=trials,
        logical_errors=errors,
        ler=errors / trials,
        ler_stderr=stderr_estimate(errors, trials),
        avg_iterations=sum(side_iterations) / (2 * trials),
        avg_iterations_converged=sum(converged) / len(converged) if converged else math.nan,
        seed=seed,
    )


# ─── Workers ───

@dataclass(frozen=True)
class BatchTask:
    point_key: tuple[int, ...]
    params: NoiseParams
    config: DecoderConfig
    master_seed: int
    start: int
    stop: int


_worker_graphs: CodeGraphs | None = None


def _init_worker(code: CssCode) -> None:
    global _worker_graphs
    _worker_graphs = CodeGraphs.build(code)


def _run_batch(task: BatchTask, graphs: CodeGraphs | None = None) -> list[TrialOutcome]:
    graphs = graphs or _worker_graphs
    return [
        run_trial(graphs.code, task.params, task.config.mode, task.config,
                  trial_rng(task.master_seed, task.point_key, t), graphs, trial_index=t)
        for t in range(task.start, task.stop)
    ]


class _InlineExecutor:
    """Runs batches in the calling thread; stands in for the pool when workers == 1."""

    def __init__(self, graphs: CodeGraphs):
        self.graphs = graphs

    def submit(self, fn, task) -> Future:
        future = Future()
        future.set_result(fn(task, self.graphs))
        return future

    def shutdown(self, wait: bool = True, cancel_futures: bool = False) -> None:
        pass


def _run_point(executor, in_flight: int, task_template: BatchTask, stop_rule: StopRule,
               batch_size: int, progress: Callable[[dict], None] | None, label: str) -> list[TrialOutcome]:
    outcomes: list[TrialOutcome] = []
    errors = 0
    next_start = 0
    pending: deque[Future] = deque()
    limit = stop_rule.limit
    while True:
        while len(pending) < in_flight and next_start < limit:
            stop = min(next_start + batch_size, limit)
            task = BatchTask(task_template.point_key, task_template.params, task_template.config,
                             task_template.master_seed, next_start, stop)
            pending.append(executor.submit(_run_batch, task))
            next_start = stop
        if not pending:
            break
        batch = pending.popleft().result()
        outcomes.extend(batch)
        errors += sum(o.classification == Classification.LOGICAL_ERROR for o in batch)
        logger.info("%s trials=%d errors=%d ler=%.3e", label, len(outcomes), errors, errors / len(outcomes))
        if progress is not None:
            progress({"point": label, "trials": len(outcomes), "logical_errors": errors})
        if stop_rule.target_errors is not None and errors >= stop_rule.target_errors:
            for f in pending:
                f.cancel()
            break
    return outcomes


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   progress: Callable[[dict], None] | None = None) -> list[AggregateStats]:
    """One AggregateStats per (gamma, p, sigma, mode), in that nesting order."""
    code = load_code(config.code)  # fails before any trial runs
    seed = resolve_seed(config.master_seed)
    logger.info("sweep on %s %s with %d worker(s), seed %d", code.name, code.label, workers, seed)
    if workers > 1:
        executor = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(code,))
    else:
        executor = _InlineExecutor(CodeGraphs.build(code))
    results = []
    try:
        for gi, gamma in enumerate(config.gammas):
            for pi, p in enumerate(config.p_grid):
                for si, sigma in enumerate(config.sigma_grid):
                    params = NoiseParams(p=p, sigma=sigma)
                    for mode in config.modes:
                        decoder_config = config.decoder.model_copy(update={"mode": mode, "gamma_cutoff": gamma})
                        label = f"{code.name} mode={mode.value} p={p} sigma={sigma} gamma={gamma}"
                        template = BatchTask((gi, pi, si), params, decoder_config, seed, 0, 0)
                        outcomes = _run_point(executor, max(1, workers), template, config.stop_rule,
                                              config.batch_size, progress, label)
                        results.append(aggregate(code.name, mode, params, decoder_config, outcomes, seed))
    finally:
        executor.shutdown(wait=True, cancel_futures=True)
    return results


# ─── Output ───

def write_results_csv(stats: list[AggregateStats], out) -> None:
    """out: a path or a text stream. A schema comment line precedes the header."""
    if isinstance(out, (str, pathlib.Path)):
        with open(out, "w", newline="", encoding="utf-8") as f:
            write_results_csv(stats, f)
        return
    out.write(CSV_SCHEMA + "\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in stats:
        writer.writerow(s.csv_row())


def results_csv_text(stats: list[AggregateStats]) -> str:
    buf = io.StringIO()
    write_results_csv(stats, buf)
    return buf.getvalue()
