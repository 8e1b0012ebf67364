import numpy as np
import pytest

from decoder import (
    DecoderConfig, DecoderMode, PriorMode, build_graph, channel_prior, check_update_soft,
    check_update_standard, decide, decode, halt_check, init_state, syndrome_belief_update,
    variable_update,
)
from gf2 import DimensionError, SparseBitMatrix, mat_vec_mod2
from harness import Classification, classify
from noise import PauliErrorVector, observe_syndrome, sample_depolarizing

PERFECT = DecoderConfig(mode=DecoderMode.PERFECT)
SOFT = DecoderConfig(mode=DecoderMode.SOFT)

NU = np.array([2.0, -3.0, 1.5])


def single_check_state(config, s_bit=0, nu=NU):
    graph = build_graph(SparseBitMatrix.from_dense([[1, 1, 1]]))
    obs = observe_syndrome(np.array([s_bit], dtype=np.uint8), 0.0, config.llr_sat)
    state = init_state(graph, 3.0, obs, config)
    state.nu = np.array(nu, dtype=np.float64)
    return graph, state


# ─── Graph ───

def test_build_graph_small_cases():
    g = build_graph(SparseBitMatrix.from_dense(np.eye(2, dtype=np.uint8)))
    assert (g.n, g.m, g.num_edges) == (2, 2, 2)
    g = build_graph(SparseBitMatrix.from_dense([[1, 1, 1]]))
    assert g.check_adjacency[0].tolist() == [0, 1, 2]
    assert [a.tolist() for a in g.var_adjacency] == [[0], [0], [0]]


def test_lp_tanner_graph_degrees(lp_tanner):
    g = build_graph(lp_tanner.h_x)
    assert np.array_equal(g.check_degrees(), lp_tanner.h_x.row_weights())
    assert np.array_equal(g.var_degrees(), lp_tanner.h_x.col_weights())
    for j in (0, 500, 1053):
        assert np.all(g.edge_var[g.var_edge_ids(j)] == j)


# ─── Priors and initialisation ───

def test_channel_priors():
    assert channel_prior(0.05, PriorMode.TOTAL_RATE) == pytest.approx(2.944, abs=1e-3)
    assert channel_prior(0.05, PriorMode.DEPOLARIZING_MARGINAL) == pytest.approx(3.367, abs=1e-3)
    assert channel_prior(0.0) == 30.0


def test_init_state_noiseless_reliabilities(rep3):
    graph = build_graph(rep3.h_z)
    obs = observe_syndrome(np.zeros(graph.m, dtype=np.uint8), 0.0)
    state = init_state(graph, channel_prior(0.05), obs, SOFT)
    assert np.all(state.gamma_tilde == 30.0)
    assert np.all(state.s_tilde == 1)
    assert np.allclose(state.nu, channel_prior(0.05))


def test_init_state_rejects_wrong_syndrome_length(rep3):
    graph = build_graph(rep3.h_z)
    with pytest.raises(DimensionError):
        init_state(graph, 3.0, observe_syndrome(np.zeros(2, dtype=np.uint8), 0.0), SOFT)


# ─── Variable and check updates ───

def test_variable_update_excludes_own_edge():
    graph = build_graph(SparseBitMatrix.from_dense([[1], [1]]))
    state = init_state(graph, 2.0, observe_syndrome(np.zeros(2, dtype=np.uint8), 0.0), PERFECT)
    state.mu = np.array([1.0, -3.0])
    variable_update(state, graph)
    assert state.nu.tolist() == [-1.0, 3.0]


def test_degree_one_variable_forwards_prior():
    graph = build_graph(SparseBitMatrix.from_dense([[1, 1]]))
    state = init_state(graph, [2.0, 5.0], observe_syndrome(np.zeros(1, dtype=np.uint8), 0.0), PERFECT)
    state.mu = np.array([-4.0, 9.0])
    variable_update(state, graph)
    assert state.nu.tolist() == [2.0, 5.0]


def test_flooding_message_table():
    # two variables on two identical checks, target syndrome (+1, -1), lambda = (2, 3)
    graph = build_graph(SparseBitMatrix.from_dense([[1, 1], [1, 1]]))
    obs = observe_syndrome(np.array([0, 1], dtype=np.uint8), 0.0)
    state = init_state(graph, [2.0, 3.0], obs, PERFECT)
    table = []
    for _ in range(2):
        variable_update(state, graph)
        check_update_standard(state, graph, PERFECT)
        table.append((state.nu.tolist(), state.mu.tolist()))
    assert table[0][0] == pytest.approx([2.0, 3.0, 2.0, 3.0])
    assert table[0][1] == pytest.approx([2.25, 1.5, -2.25, -1.5])
    assert table[1][0] == pytest.approx([-0.25, 1.5, 4.25, 4.5])
    assert table[1][1] == pytest.approx([1.125, -0.1875, -3.375, -3.1875])


def test_check_update_standard_examples():
    graph, state = single_check_state(PERFECT, s_bit=0)
    assert check_update_standard(state, graph, PERFECT) == pytest.approx([-1.125, 1.125, -1.5])
    graph, state = single_check_state(PERFECT, s_bit=1)
    assert check_update_standard(state, graph, PERFECT)[0] == pytest.approx(1.125)


def test_degree_two_check_passes_the_other_message():
    graph = build_graph(SparseBitMatrix.from_dense([[1, 1]]))
    state = init_state(graph, 1.0, observe_syndrome(np.array([1], dtype=np.uint8), 0.0), PERFECT)
    state.nu = np.array([0.7, -2.0])
    assert check_update_standard(state, graph, PERFECT) == pytest.approx([0.75 * -1 * -2.0, 0.75 * -1 * 0.7])


def test_extrinsic_minimum_with_tied_minima():
    graph, state = single_check_state(PERFECT, nu=[1.0, 1.0, 4.0])
    assert check_update_standard(state, graph, PERFECT) == pytest.approx([0.75, 0.75, 0.75])


def test_soft_check_reliable_branch_matches_standard():
    graph, state = single_check_state(SOFT)
    state.gamma_in = np.array([7.0])
    expected = check_update_standard(state, graph, SOFT).copy()
    assert check_update_soft(state, graph, SOFT) == pytest.approx(expected)


def test_soft_check_unreliable_branch_caps_magnitude():
    graph, state = single_check_state(SOFT)
    state.gamma_in = np.array([1.0])
    mu = check_update_soft(state, graph, SOFT)
    assert mu[0] == pytest.approx(-0.75)
    assert mu[1] == pytest.approx(0.75)


def test_soft_check_reads_measurement_by_default():
    graph, state = single_check_state(SOFT)
    state.gamma_in = np.array([1.0])
    state.gamma_tilde = np.array([20.0])
    state.s_tilde = np.array([-1], dtype=np.int8)
    assert check_update_soft(state, graph, SOFT)[0] == pytest.approx(-0.75)


def test_soft_check_evolving_inputs_read_beliefs():
    config = DecoderConfig(mode=DecoderMode.SOFT, evolving_check_inputs=True)
    graph, state = single_check_state(config)
    state.gamma_in = np.array([20.0])
    state.gamma_tilde = np.array([1.0])
    state.s_tilde = np.array([-1], dtype=np.int8)
    assert check_update_soft(state, graph, config)[0] == pytest.approx(0.75)


def test_zero_cutoff_reduces_to_standard(rng):
    config = DecoderConfig(mode=DecoderMode.SOFT, gamma_cutoff=0.0)
    graph = build_graph(SparseBitMatrix.from_dense(rng.integers(0, 2, size=(8, 12))))
    for _ in range(20):
        obs = observe_syndrome(rng.integers(0, 2, size=8), 0.6, rng=rng)
        state = init_state(graph, 2.0, obs, config)
        state.nu = rng.normal(0.0, 3.0, size=graph.num_edges)
        state.gamma_in = rng.uniform(1e-3, 10.0, size=graph.m)
        standard = check_update_standard(state, graph, config).copy()
        assert np.allclose(check_update_soft(state, graph, config), standard)


# ─── Syndrome beliefs ───

def test_belief_flips_sign_on_stronger_disagreement():
    graph, state = single_check_state(SOFT)
    state.gamma_tilde = np.array([1.0])
    s, g = syndrome_belief_update(state, graph, SOFT)
    assert s.tolist() == [-1] and g.tolist() == [1.0]


def test_belief_raises_reliability_on_stronger_agreement():
    graph, state = single_check_state(SOFT, s_bit=1)
    state.gamma_tilde = np.array([1.0])
    s, g = syndrome_belief_update(state, graph, SOFT)
    assert s.tolist() == [-1] and g.tolist() == [1.5]


def test_belief_unchanged_when_weaker():
    graph, state = single_check_state(SOFT, nu=[0.5, -3.0, 1.5])
    state.gamma_tilde = np.array([1.0])
    s, g = syndrome_belief_update(state, graph, SOFT)
    assert s.tolist() == [1] and g.tolist() == [1.0]


def test_no_reliability_variant_keeps_gamma():
    config = DecoderConfig(mode=DecoderMode.SOFT_NO_RELIABILITY)
    graph, state = single_check_state(config, s_bit=1)
    state.gamma_tilde = np.array([1.0])
    _, g = syndrome_belief_update(state, graph, config)
    assert g.tolist() == [1.0]


def test_reliability_never_decreases(rep3, rng):
    graph = build_graph(rep3.h_z)
    for _ in range(30):
        e = sample_depolarizing(rep3.n, 0.1, rng)
        obs = observe_syndrome(mat_vec_mod2(rep3.h_z, e.e_x), 0.6, rng=rng)
        state = init_state(graph, channel_prior(0.1), obs, SOFT)
        for _ in range(10):
            before = state.gamma_tilde.copy()
            variable_update(state, graph)
            check_update_soft(state, graph, SOFT)
            syndrome_belief_update(state, graph, SOFT)
            assert np.all(state.gamma_tilde >= before)
            assert np.all(state.gamma_tilde <= SOFT.llr_sat)


def test_messages_stay_clamped(rep3, rng):
    config = DecoderConfig(mode=DecoderMode.SOFT, llr_sat=1.0, gamma_cutoff=0.5)
    graph = build_graph(rep3.h_z)
    e = sample_depolarizing(rep3.n, 0.3, rng)
    obs = observe_syndrome(mat_vec_mod2(rep3.h_z, e.e_x), 0.3, llr_sat=1.0, rng=rng)
    state = init_state(graph, 5.0, obs, config)
    assert np.all(np.abs(state.lam) <= 1.0)
    for _ in range(5):
        variable_update(state, graph)
        check_update_soft(state, graph, config)
        syndrome_belief_update(state, graph, config)
        assert np.all(np.abs(state.nu) <= 1.0)
        assert np.all(np.abs(state.mu) <= 1.0)


# ─── Decisions and halting ───

def test_decide_examples():
    graph = build_graph(SparseBitMatrix.from_dense([[1], [1]]))
    state = init_state(graph, 2.0, observe_syndrome(np.zeros(2, dtype=np.uint8), 0.0), PERFECT)
    assert decide(state, graph).tolist() == [0]
    state.mu = np.array([-3.0, -1.0])
    assert decide(state, graph).tolist() == [1]
    state.mu = np.array([-1.0, -1.0])
    assert decide(state, graph).tolist() == [0]


def test_halt_check_examples(rep3, rng):
    zero = np.zeros(rep3.n, dtype=np.uint8)
    targets = np.ones(rep3.h_z.rows, dtype=np.int8)
    assert halt_check(zero, rep3.h_z, targets)
    targets[2] = -1
    assert not halt_check(zero, rep3.h_z, targets)
    e = sample_depolarizing(rep3.n, 0.3, rng).e_x
    assert halt_check(e, rep3.h_z, 1 - 2 * mat_vec_mod2(rep3.h_z, e).astype(np.int8))


# ─── Full decoding ───

@pytest.mark.parametrize("mode", list(DecoderMode))
def test_zero_error_converges_immediately(rep3, mode):
    graph = build_graph(rep3.h_z)
    obs = observe_syndrome(np.zeros(rep3.h_z.rows, dtype=np.uint8), 0.0)
    result = decode(graph, rep3.h_z, channel_prior(0.05), obs, DecoderConfig(mode=mode))
    assert result.converged and result.iterations == 1
    assert not result.x_hat.any()


def test_inconsistent_syndrome_runs_to_l_max():
    H = SparseBitMatrix.from_dense([[1, 1], [1, 1]])
    config = DecoderConfig(mode=DecoderMode.PERFECT, l_max=7)
    obs = observe_syndrome(np.array([0, 1], dtype=np.uint8), 0.0)
    result = decode(build_graph(H), H, 2.0, obs, config)
    assert not result.converged and result.iterations == 7


def first_halting_iteration(graph, H, prior, obs, config):
    state = init_state(graph, prior, obs, config)
    for ell in range(1, config.l_max + 1):
        variable_update(state, graph)
        if config.mode.soft:
            check_update_soft(state, graph, config)
            syndrome_belief_update(state, graph, config)
        else:
            check_update_standard(state, graph, config)
        target = state.s_tilde if config.mode.soft else state.s_in
        if halt_check(decide(state, graph), H, target):
            return ell
    return None


@pytest.mark.parametrize("mode", [DecoderMode.HARD, DecoderMode.SOFT])
def test_decode_stops_at_first_halting_iteration(rep3, rng, mode):
    config = DecoderConfig(mode=mode, l_max=20)
    graph = build_graph(rep3.h_z)
    prior = channel_prior(0.1)
    for _ in range(60):
        e = sample_depolarizing(rep3.n, 0.1, rng)
        obs = observe_syndrome(mat_vec_mod2(rep3.h_z, e.e_x), 0.5, rng=rng)
        first = first_halting_iteration(graph, rep3.h_z, prior, obs, config)
        result = decode(graph, rep3.h_z, prior, obs, config)
        if first is None:
            assert not result.converged and result.iterations == config.l_max
        else:
            assert result.converged and result.iterations == first


def test_every_single_qubit_error_is_corrected(rep3):
    graph_x, graph_z = build_graph(rep3.h_z), build_graph(rep3.h_x)
    prior = channel_prior(0.05)
    for j in range(rep3.n):
        for e in (PauliErrorVector.from_supports(rep3.n, x_support=[j]),
                  PauliErrorVector.from_supports(rep3.n, z_support=[j])):
            obs_x = observe_syndrome(mat_vec_mod2(rep3.h_z, e.e_x), 0.0)
            obs_z = observe_syndrome(mat_vec_mod2(rep3.h_x, e.e_z), 0.0)
            x_hat_x = decode(graph_x, rep3.h_z, prior, obs_x, PERFECT).x_hat
            x_hat_z = decode(graph_z, rep3.h_x, prior, obs_z, PERFECT).x_hat
            assert classify(rep3, e, x_hat_x, x_hat_z) == Classification.SUCCESS


def assert_same_result(a, b):
    assert np.array_equal(a.x_hat, b.x_hat)
    assert (a.converged, a.iterations) == (b.converged, b.iterations)
    assert np.array_equal(a.revised_syndrome, b.revised_syndrome)


def soft_matches_perfect(code, trials, seed):
    rng = np.random.default_rng(seed)
    graph = build_graph(code.h_z)
    prior = channel_prior(0.05)
    for _ in range(trials):
        e = sample_depolarizing(code.n, 0.05, rng)
        obs = observe_syndrome(mat_vec_mod2(code.h_z, e.e_x), 0.0)
        assert_same_result(decode(graph, code.h_z, prior, obs, SOFT),
                           decode(graph, code.h_z, prior, obs, PERFECT))


def test_noiseless_soft_decoding_equals_perfect(rep3):
    soft_matches_perfect(rep3, 1000, seed=5)


def test_noiseless_soft_decoding_equals_perfect_on_lp_tanner(lp_tanner):
    soft_matches_perfect(lp_tanner, 40, seed=6)


@pytest.mark.slow
def test_noiseless_soft_decoding_equals_perfect_on_lp_tanner_long(lp_tanner):
    soft_matches_perfect(lp_tanner, 1000, seed=7)


def test_trace_rows(rep3):
    graph = build_graph(rep3.h_z)
    e = PauliErrorVector.from_supports(rep3.n, x_support=[4])
    obs = observe_syndrome(mat_vec_mod2(rep3.h_z, e.e_x), 0.0)
    trace = []
    result = decode(graph, rep3.h_z, channel_prior(0.05), obs, SOFT, trace=trace)
    assert len(trace) == result.iterations * graph.num_edges
    assert trace[0][:4] == [1, 0, 0, int(graph.edge_var[0])]
