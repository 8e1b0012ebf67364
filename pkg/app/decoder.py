"""Syndrome-based normalized min-sum decoding with perfect, hard and soft syndrome inputs.

One flooding iteration runs variable_update, then the check update for the
mode, then (soft modes) the syndrome belief update at the virtual variable
nodes, then the hard decision and the halting test. Messages live on a flat
edge array ordered by check, so every check-side reduction is a reduceat and
every variable-side sum is a bincount.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config import DEFAULT_BETA, DEFAULT_GAMMA_CUTOFF, DEFAULT_L_MAX, DEFAULT_LLR_SAT
from gf2 import BitVector, DimensionError, SparseBitMatrix, mat_vec_mod2
from noise import SyndromeObservation

logger = logging.getLogger(__name__)


class DecoderMode(str, Enum):
    PERFECT = "perfect"
    HARD = "hard"
    SOFT = "soft"
    SOFT_NO_RELIABILITY = "soft_no_reliability"

    @property
    def soft(self) -> bool:
        return self in (DecoderMode.SOFT, DecoderMode.SOFT_NO_RELIABILITY)


class PriorMode(str, Enum):
    DEPOLARIZING_MARGINAL = "depolarizing_marginal"
    TOTAL_RATE = "total_rate"


class DecoderConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: DecoderMode = DecoderMode.SOFT
    beta: float = Field(DEFAULT_BETA, gt=0.0, lt=1.0)
    gamma_cutoff: float = Field(DEFAULT_GAMMA_CUTOFF, ge=0.0)
    l_max: int = Field(DEFAULT_L_MAX, ge=1)
    llr_sat: float = Field(DEFAULT_LLR_SAT, gt=0.0)
    prior_mode: PriorMode = PriorMode.DEPOLARIZING_MARGINAL
    evolving_check_inputs: bool = False


# ─── Tanner graph ───

@dataclass(frozen=True, eq=False)
class TannerGraph:
    n: int
    m: int
    edge_check: np.ndarray
    edge_var: np.ndarray
    check_ptr: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.edge_check.size)

    @property
    def edges(self) -> np.ndarray:
        return np.column_stack([self.edge_check, self.edge_var])

    @property
    def check_adjacency(self) -> list[np.ndarray]:
        """N(i): variables of check i, one array per check."""
        return [self.edge_var[self.check_ptr[i]:self.check_ptr[i + 1]] for i in range(self.m)]

    @property
    def var_adjacency(self) -> list[np.ndarray]:
        """N(j): checks of variable j, one array per variable."""
        return [self.edge_check[self.var_edges[self.var_ptr[j]:self.var_ptr[j + 1]]] for j in range(self.n)]

    def check_edges(self, i: int) -> np.ndarray:
        return np.arange(self.check_ptr[i], self.check_ptr[i + 1])

    def var_edge_ids(self, j: int) -> np.ndarray:
        return self.var_edges[self.var_ptr[j]:self.var_ptr[j + 1]]

    def check_degrees(self) -> np.ndarray:
        return np.diff(self.check_ptr)

    def var_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    def check_min(self, values: np.ndarray) -> np.ndarray:
        """Per-check minimum over incident edges; +inf for a check without edges."""
        out = np.full(self.m, np.inf)
        nonempty = np.flatnonzero(self.check_degrees() > 0)
        if nonempty.size:
            out[nonempty] = np.minimum.reduceat(values, self.check_ptr[nonempty])
        return out

    def check_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.edge_check, weights=values, minlength=self.m)

    def var_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.edge_var, weights=values, minlength=self.n)


def build_graph(H: SparseBitMatrix) -> TannerGraph:
    edge_check = np.repeat(np.arange(H.rows), H.row_weights()).astype(np.int64)
    edge_var = H.indices.astype(np.int64)
    var_edges = np.argsort(edge_var, kind="stable")
    var_ptr = np.zeros(H.cols + 1, dtype=np.int64)
    var_ptr[1:] = np.cumsum(np.bincount(edge_var, minlength=H.cols))
    return TannerGraph(H.cols, H.rows, edge_check, edge_var, np.asarray(H.indptr, dtype=np.int64),
                       var_ptr, var_edges)


# ─── State ───

@dataclass
class DecoderState:
    lam: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    s_in: np.ndarray
    gamma_in: np.ndarray
    s_tilde: np.ndarray
    gamma_tilde: np.ndarray
    llr_sat: float
    iteration: int = 0


@dataclass(frozen=True, eq=False)
class DecodeResult:
    x_hat: BitVector
    converged: bool
    iterations: int
    revised_syndrome: BitVector


def channel_prior(p: float, prior_mode: PriorMode = PriorMode.DEPOLARIZING_MARGINAL,
                  llr_sat: float = DEFAULT_LLR_SAT) -> float:
    """lambda = ln((1-q)/q), q = 2p/3 (one binary component of depolarizing noise) or q = p."""
    q = 2.0 * p / 3.0 if prior_mode == PriorMode.DEPOLARIZING_MARGINAL else p
    if q <= 0.0:
        return llr_sat
    if q >= 1.0:
        return -llr_sat
    return float(np.clip(np.log((1.0 - q) / q), -llr_sat, llr_sat))


def init_state(graph: TannerGraph, prior, observation: SyndromeObservation,
               config: DecoderConfig) -> DecoderState:
    if observation.m != graph.m:
        raise DimensionError(f"observation has {observation.m} checks, graph has {graph.m}")
    sat = config.llr_sat
    lam = np.clip(np.broadcast_to(np.asarray(prior, dtype=np.float64), (graph.n,)), -sat, sat).copy()
    s_in = observation.hard_sign.astype(np.int8)
    if config.mode == DecoderMode.PERFECT:
        gamma_in = np.full(graph.m, sat)
    else:
        gamma_in = np.minimum(np.abs(observation.llr), sat)
    return DecoderState(
        lam=lam,
        nu=lam[graph.edge_var].copy(),
        mu=np.zeros(graph.num_edges),
        s_in=s_in,
        gamma_in=gamma_in,
        s_tilde=s_in.copy(),
        gamma_tilde=gamma_in.copy(),
        llr_sat=sat,
    )


# ─── Node updates ───

def variable_update(state: DecoderState, graph: TannerGraph) -> np.ndarray:
    """nu_ij = lambda_j + sum of mu_i'j over the other checks i' of j."""
    totals = state.lam + graph.var_sum(state.mu)
    state.nu = np.clip(totals[graph.edge_var] - state.mu, -state.llr_sat, state.llr_sat)
    return state.nu


def _extrinsic(state: DecoderState, graph: TannerGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per edge: min |nu| and sign product over the other edges of the same check."""
    mag = np.abs(state.nu)
    negative = state.nu < 0
    min1 = graph.check_min(mag)
    at_min = mag == min1[graph.edge_check]
    ties = graph.check_sum(at_min.astype(np.float64))
    min2 = graph.check_min(np.where(at_min, np.inf, mag))
    second = np.where(ties > 1, min1, min2)
    ext_min = np.where(at_min, second[graph.edge_check], min1[graph.edge_check])
    parity = graph.check_sum(negative.astype(np.float64)).astype(np.int64) & 1
    ext_sign = 1 - 2 * (parity[graph.edge_check] ^ negative.astype(np.int64))
    return ext_min, ext_sign


def check_update_standard(state: DecoderState, graph: TannerGraph, config: DecoderConfig) -> np.ndarray:
    """mu_ij = beta * s_i * prod sgn(nu_ij') * min |nu_ij'| over j' != j."""
    ext_min, ext_sign = _extrinsic(state, graph)
    mu = config.beta * state.s_in[graph.edge_check] * ext_sign * ext_min
    state.mu = np.clip(mu, -state.llr_sat, state.llr_sat)
    return state.mu


def check_update_soft(state: DecoderState, graph: TannerGraph, config: DecoderConfig) -> np.ndarray:
    """Checks at or below the cutoff also cap the magnitude by their syndrome reliability."""
    if config.evolving_check_inputs:
        g, t = state.gamma_tilde, state.s_tilde
    else:
        g, t = state.gamma_in, state.s_in
    ext_min, ext_sign = _extrinsic(state, graph)
    g_e = g[graph.edge_check]
    reliable = g_e > config.gamma_cutoff
    magnitude = np.where(reliable, ext_min, np.minimum(ext_min, g_e))
    mu = config.beta * t[graph.edge_check] * ext_sign * magnitude
    state.mu = np.clip(mu, -state.llr_sat, state.llr_sat)
    return state.mu


def syndrome_belief_update(state: DecoderState, graph: TannerGraph,
                           config: DecoderConfig) -> tuple[np.ndarray, np.ndarray]:
    """Virtual-node update: a stronger agreeing check raises gamma~, a stronger disagreeing one flips s~."""
    full_min = graph.check_min(np.abs(state.nu))
    parity = graph.check_sum((state.nu < 0).astype(np.float64)).astype(np.int64) & 1
    full_sign = (1 - 2 * parity).astype(np.int8)
    stronger = np.isfinite(full_min) & (full_min > state.gamma_tilde)
    agree = full_sign == state.s_tilde
    if config.mode == DecoderMode.SOFT:
        state.gamma_tilde = np.where(stronger & agree, np.minimum(full_min, state.llr_sat), state.gamma_tilde)
    state.s_tilde = np.where(stronger & ~agree, -state.s_tilde, state.s_tilde).astype(np.int8)
    return state.s_tilde, state.gamma_tilde


def decide(state: DecoderState, graph: TannerGraph) -> BitVector:
    """Bit j is set iff lambda_j + sum_i mu_ij < 0 (a zero total decides 'no error')."""
    return (state.lam + graph.var_sum(state.mu) < 0).astype(np.uint8)


def halt_check(x_hat: BitVector, H: SparseBitMatrix, target_signs: np.ndarray) -> bool:
    bipolar = 1 - 2 * mat_vec_mod2(H, x_hat).astype(np.int8)
    return bool(np.array_equal(bipolar, np.asarray(target_signs)))


# ─── Decoding loop ───

TRACE_HEADER = ["iteration", "edge", "check", "variable", "nu", "mu", "s_flip"]


def decode(graph: TannerGraph, H: SparseBitMatrix, prior, observation: SyndromeObservation,
           config: DecoderConfig, trace: list | None = None) -> DecodeResult:
    """Flooding min-sum; returns the first estimate matching the halting target or the last one."""
    state = init_state(graph, prior, observation, config)
    soft = config.mode.soft
    x_hat = np.zeros(graph.n, dtype=np.uint8)
    for ell in range(1, config.l_max + 1):
        state.iteration = ell
        previous_signs = state.s_tilde
        variable_update(state, graph)
        if soft:
            check_update_soft(state, graph, config)
            syndrome_belief_update(state, graph, config)
        else:
            check_update_standard(state, graph, config)
        x_hat = decide(state, graph)
        if trace is not None:
            _record_trace(trace, ell, state, graph, previous_signs)
        target = state.s_tilde if soft else state.s_in
        if halt_check(x_hat, H, target):
            return DecodeResult(x_hat, True, ell, (state.s_tilde < 0).astype(np.uint8))
    return DecodeResult(x_hat, False, config.l_max, (state.s_tilde < 0).astype(np.uint8))


def _record_trace(trace: list, ell: int, state: DecoderState, graph: TannerGraph,
                  previous_signs: np.ndarray) -> None:
    flipped = (state.s_tilde != previous_signs).astype(int)
    for e in range(graph.num_edges):
        i = int(graph.edge_check[e])
        trace.append([ell, e, i, int(graph.edge_var[e]), float(state.nu[e]), float(state.mu[e]), int(flipped[i])])
