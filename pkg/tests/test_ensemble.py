import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikelab.ensemble import (
    Ensemble,
    EntryLaw,
    Population,
    SampleDraw,
    assemble_matrices,
    build_population,
    dump_draw,
    factor_decomposition,
    load_draw,
    outlier_index_set,
    sample_noise,
    spike_spec,
    trial_rng,
)
from spikelab.errors import ConfigError, DomainError
from spikelab.laws import Aspect


def test_single_spike_sigma_hand_values():
    pop = build_population(spike_spec([2.0], 5), Aspect(5, 5))
    expected = np.eye(5)
    expected[0, 0] = 3.0
    assert np.array_equal(pop.sigma, expected)


def test_empty_spikes_give_identity():
    pop = build_population(spike_spec([], 6, extra_columns=2), Aspect(6, 6), rotation_seed=3)
    assert np.allclose(pop.sigma, np.eye(6))
    assert np.allclose(pop.T, pop.O[:6], atol=1e-15)


@given(st.lists(st.floats(-0.9, 5.0).filter(lambda d: abs(d) > 1e-3), max_size=4), st.integers(0, 3), st.integers(0, 10**6))
def test_factorisation(strengths, extra, seed):
    aspect = Aspect(12, 16)
    spec = spike_spec(strengths, 12, "random", seed=seed, extra_columns=extra)
    pop = build_population(spec, aspect, rotation_seed=seed)
    T = pop.T
    assert np.max(np.abs(T @ T.T - pop.sigma)) < 1e-10
    assert np.allclose(pop.O @ pop.O.T, np.eye(12 + extra), atol=1e-12)
    s_half, O = factor_decomposition(T)
    assert np.allclose(s_half @ O[:12], T, atol=1e-12)
    assert np.allclose(s_half @ s_half, pop.sigma, atol=1e-10)


def test_spec_validation():
    with pytest.raises(ConfigError):
        spike_spec([1.0, 0.0], 4)
    with pytest.raises(ConfigError):
        spike_spec([1.0] * 9, 20)
    with pytest.raises(ConfigError):
        spike_spec([1.0, 2.0], 4, directions=np.ones((4, 2)))
    with pytest.raises(DomainError):
        build_population(spike_spec([-1.0], 4), Aspect(4, 4))
    spec = spike_spec([0.5, 3.0], 4)
    assert list(spec.strengths) == [3.0, 0.5]
    assert np.array_equal(spec.directions[:, 0], np.eye(4)[:, 1])


def test_noise_variance_and_support():
    M, N = 1000, 1000
    X = sample_noise(EntryLaw("gaussian"), (M, N), np.random.default_rng(0))
    target = (N * M) ** -0.5
    se = math.sqrt(2.0) * target / math.sqrt(X.size)
    assert abs(X.var() - target) < 3 * se
    R = sample_noise(EntryLaw("rademacher"), (50, 40), np.random.default_rng(1))
    assert np.allclose(np.abs(R), (50 * 40) ** -0.25)
    U = sample_noise(EntryLaw("uniform"), (200, 300), np.random.default_rng(2))
    assert np.abs(U).max() <= math.sqrt(3) * (200 * 300) ** -0.25
    with pytest.raises(ConfigError):
        EntryLaw("cauchy")


def test_rng_streams_are_deterministic_and_distinct():
    a = trial_rng(7, 0, 3).standard_normal(5)
    b = trial_rng(7, 0, 3).standard_normal(5)
    c = trial_rng(7, 0, 4).standard_normal(5)
    d = trial_rng(7, 1, 3).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_null_population_gives_q_equal_h():
    ens = Ensemble.simple(30, 40)
    draw = ens.draw_trial(1, 0, 0)
    assert np.array_equal(draw.Q, draw.H)


def test_matrix_invariants():
    ens = Ensemble.simple(40, 25, [3.0, -0.5], directions="random", extra_columns=2, seed=4)
    draw = ens.draw_trial(0, 0, 0)
    for name in ("Q", "H", "Qdot", "Hdot"):
        A = draw.matrix(name)
        assert np.max(np.abs(A - A.T)) < 1e-12
        vals = np.linalg.eigvalsh(A)
        assert vals.min() >= -1e-10 * vals.max()
        # rank at most K, one fewer after centring
        assert np.sum(vals > 1e-10 * vals.max()) <= 25
    T, O = ens.population.T, ens.population.O
    assert np.allclose(draw.Q, T @ draw.X @ draw.X.T @ T.T, atol=1e-12)
    Y = np.hstack([np.eye(40), np.zeros((40, 2))]) @ O @ draw.X
    assert np.allclose(draw.H, Y @ Y.T, atol=1e-12)
    N = 25
    e = np.full((N, 1), N**-0.5)
    P = np.eye(N) - e @ e.T
    assert np.allclose(draw.Qdot, N / (N - 1) * T @ draw.X @ P @ draw.X.T @ T.T, atol=1e-12)


def test_qdot_shift_invariance():
    ens = Ensemble.simple(20, 30, [2.0])
    draw = ens.draw_trial(5, 0, 0)
    shift = np.random.default_rng(9).standard_normal((20, 1))
    moved = SampleDraw(draw.population, draw.X + shift)
    assert np.max(np.abs(moved.Qdot - draw.Qdot)) < 1e-10
    assert np.max(np.abs(moved.Q - draw.Q)) > 1e-3


def test_assemble_round_trip():
    ens = Ensemble.simple(10, 12, [1.5], directions="random", extra_columns=3, seed=2)
    draw = ens.draw_trial(0, 0, 1)
    pop = ens.population
    again = assemble_matrices(pop.T, pop.O, draw.X, ens.aspect)
    assert np.allclose(again.Q, draw.Q, atol=1e-12)
    assert np.allclose(again.H, draw.H, atol=1e-12)
    with pytest.raises(ConfigError):
        assemble_matrices(pop.T, pop.O, draw.X[:, :5], ens.aspect)


def test_from_factor_recovers_spikes():
    ens = Ensemble.simple(8, 8, [2.0, -0.5], directions="random", seed=1)
    pop = Population.from_factor(ens.population.T, ens.aspect)
    assert np.allclose(pop.strengths, [2.0, -0.5])


def test_mean_of_q_matches_population():
    # E Q = phi^(-1/2) Sigma, since E X X^T = N (NM)^(-1/2) I
    ens = Ensemble.simple(50, 50, [2.0])
    traces = np.array([np.trace(ens.draw_trial(3, 0, t).Q) for t in range(200)])
    target = np.trace(ens.population.sigma)
    se = traces.std(ddof=1) / math.sqrt(traces.size)
    assert abs(traces.mean() - target) < 3 * se


def test_outlier_index_set_examples():
    none = outlier_index_set(spike_spec([], 5), 5)
    assert none.indices == () and none.s_plus == none.s_minus == 0 and none.alpha_plus == 1.0
    info = outlier_index_set(spike_spec([2.0, 1.0005], 10), 10**6)
    assert info.indices == (1,)
    assert outlier_index_set(spike_spec([1.2], 10), 10**6).alpha_plus == pytest.approx(0.2)
    mixed = outlier_index_set(spike_spec([3.0, -2.0], 10), 10**6)
    assert (mixed.s_plus, mixed.s_minus) == (1, 1)


def test_dump_round_trip(tmp_path):
    draw = Ensemble.simple(6, 9, [2.0]).draw_trial(0, 0, 0)
    path = tmp_path / "draw.spk"
    dump_draw(draw, path)
    back = load_draw(path)
    raw = path.read_bytes()
    assert raw[:8] == b"SPKDRAW1"
    assert int.from_bytes(raw[8:16], "little") == 5
    for name in ("X", "Q", "H", "Qdot", "Hdot"):
        assert np.array_equal(back[name], draw.matrix(name))
