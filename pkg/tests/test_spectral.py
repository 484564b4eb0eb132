import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikelab import laws
from spikelab.ensemble import Ensemble
from spikelab.errors import DomainError, PoleError
from spikelab.spectral import (
    contour_projection,
    decompose,
    interlacing_check,
    master_equation_roots,
    pert2_residual,
    pert3_form,
    resolvent_form,
    resolvent_form_direct,
    spectral_data,
    spectral_projection_form,
    w_matrix,
)


def _unit(rng, n):
    g = rng.standard_normal(n)
    return g / np.linalg.norm(g)


def test_decompose_small_examples():
    eig = decompose(np.diag([1.0, 3.0]))
    assert np.array_equal(eig.values, [3.0, 1.0])
    assert np.array_equal(eig.vectors, np.eye(2)[:, ::-1])
    assert np.allclose(decompose(np.eye(4)).values, 1.0)
    with pytest.raises(DomainError):
        decompose(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(st.integers(0, 10**6))
def test_decompose_reconstructs(seed):
    A = np.random.default_rng(seed).standard_normal((5, 5))
    A = A + A.T
    eig = decompose(A)
    assert np.allclose((eig.vectors * eig.values) @ eig.vectors.T, A, atol=1e-10)
    assert np.all(np.diff(eig.values) <= 0)
    rows = np.argmax(np.abs(eig.vectors), axis=0)
    assert np.all(eig.vectors[rows, range(5)] > 0)


def test_partial_decomposition_matches_full():
    draw = Ensemble.simple(80, 100, [2.0]).draw_trial(0, 0, 0)
    full = decompose(draw.Q)
    top = decompose(draw.Q, top=3)
    assert not top.complete
    assert np.allclose(top.values, full.values[:3], atol=1e-12)
    assert np.allclose(np.abs(top.vectors.T @ full.vectors[:, :3]), np.eye(3), atol=1e-8)


def test_trivial_kernel_when_phi_above_one():
    draw = Ensemble.simple(60, 40).draw_trial(0, 0, 0)
    vals = decompose(draw.Q, vectors=False).values
    assert np.sum(np.abs(vals) <= 1e-10 * vals[0]) == 20


def test_resolvent_methods_agree():
    rng = np.random.default_rng(3)
    draw = Ensemble.simple(40, 60).draw_trial(0, 0, 0)
    eig = decompose(draw.H)
    v, w = _unit(rng, 40), _unit(rng, 40)
    for z in (2.0 + 0.01j, 0.5 + 1.0j, 6.0):
        a = resolvent_form(eig, z, v, w)
        b = resolvent_form_direct(draw.H, z, v, w)
        assert abs(a - b) <= 1e-8 * max(1.0, abs(b))
    assert resolvent_form(eig, 2.0 + 0.1j, v, v).imag > 0
    with pytest.raises(PoleError):
        resolvent_form(eig, eig.values[3], v, w)


def test_resolvent_on_kernel():
    H = np.zeros((3, 3))
    eig = decompose(H)
    z = 1.5 + 0.5j
    assert resolvent_form(eig, z, np.eye(3)[0], np.eye(3)[0]) == pytest.approx(-1 / z)


def test_w_matrix_tracks_limit():
    # W_ii(x) approaches w_phi(x) away from the spectrum
    for M in (200, 800):
        draw = Ensemble.simple(M, M).draw_trial(2, 0, 0)
        eig = decompose(draw.H)
        V = np.eye(M)[:, :2]
        W = w_matrix(eig, V, 5.0, 1.0)
        assert np.allclose(W, W.T)
        assert np.max(np.abs(np.diag(W) - laws.stieltjes_w(5.0, 1.0))) < 5 * M**-0.5
    assert w_matrix(eig, np.zeros((M, 0)), 5.0, 1.0).shape == (0, 0)


@pytest.mark.parametrize("seed", range(5))
def test_master_roots_match_outliers(seed):
    ens = Ensemble.simple(60, 60, [3.0, 1.8], directions="random", seed=seed)
    draw = ens.draw_trial(seed, 0, 0)
    roots = master_equation_roots(decompose(draw.H), ens.spikes.directions, ens.spikes.strengths, 1.0)
    mu = decompose(draw.Q, vectors=False).values
    k = roots.roots.size
    assert k >= 1
    assert np.allclose(roots.expanded(), mu[:k], atol=1e-6)


def test_master_roots_empty_and_double():
    ens = Ensemble.simple(40, 40)
    eig = decompose(ens.draw_trial(0, 0, 0).H)
    assert master_equation_roots(eig, np.zeros((40, 0)), [], 1.0).roots.size == 0
    # block-diagonal H with identical blocks: a degenerate pair of spikes gives a double root
    H0 = Ensemble.simple(20, 20).draw_trial(1, 0, 0).H
    H = np.kron(np.eye(2), H0)
    V = np.zeros((40, 2))
    V[0, 0] = V[20, 1] = 1.0
    d = np.array([2.5, 2.5])
    sqrt_s = np.eye(40)
    sqrt_s[0, 0] = sqrt_s[20, 20] = math.sqrt(3.5)
    Q = sqrt_s @ H @ sqrt_s
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        roots = master_equation_roots(decompose(H), V, d, 1.0)
    assert roots.multiplicity == (2,)
    mu = np.linalg.eigvalsh(Q)[::-1]
    assert np.allclose(roots.expanded(), mu[:2], atol=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_pert2_identity(seed):
    rng = np.random.default_rng(seed)
    ens = Ensemble.simple(60, 60, [2.0, -0.4], directions="random", seed=seed)
    draw = ens.draw_trial(seed, 0, 0)
    pop = ens.population
    V, d = ens.spikes.directions, ens.spikes.strengths
    v, w = _unit(rng, 60), _unit(rng, 60)
    r = pert2_residual(draw.H, draw.Q, pop.sqrt_sigma, V, d, 1.0, 1.7 + 0.3j, v, w)
    assert r < 1e-9
    far = pert2_residual(draw.H, draw.Q, pop.sqrt_sigma, V, d, 1.0, 40.0 + 0.0j, v, w)
    assert far < 1e-11
    assert pert2_residual(draw.H, draw.H, np.eye(60), np.zeros((60, 0)), [], 1.0, 1.0 + 1j, v, w) == 0.0


def test_pert3_and_contour_projection():
    ens = Ensemble.simple(50, 50, [3.0, 2.0])
    draw = ens.draw_trial(4, 0, 0)
    V, d = ens.spikes.directions, ens.spikes.strengths
    eigH, eigQ = decompose(draw.H), decompose(draw.Q)
    z = 1.0 + 0.5j
    direct = V.T @ np.linalg.solve(draw.Q - z * np.eye(50), V)
    assert np.allclose(pert3_form(eigH, V, d, 1.0, z), direct, atol=1e-10)
    mu = eigQ.values
    radius = 0.5 * min(mu[0] - mu[1], mu[0] - eigH.values[0])
    P = contour_projection(eigH, V, d, 1.0, mu[0], radius)
    expect = spectral_projection_form(eigQ, [1], V, V)
    assert np.allclose(P, expect, atol=1e-6)


def test_spectral_projection_form():
    eig = decompose(Ensemble.simple(10, 20).draw_trial(0, 0, 0).Q)
    v = np.ones(10) / math.sqrt(10)
    assert spectral_projection_form(eig, range(1, 11), v, v) == pytest.approx(1.0)
    assert spectral_projection_form(eig, [], v, v) == 0.0


@pytest.mark.parametrize("d,phi", [(2.0, 1.0), (-0.3, 0.5)])
def test_rank_one_interlacing(d, phi):
    M = 100
    N = int(M / phi)
    ens = Ensemble.simple(M, N, [d])
    for t in range(5):
        data = spectral_data(ens.draw_trial(t, 0, t), vectors=False)
        assert interlacing_check(data.mu, data.lam, sign=np.sign(d)).holds


def test_interlacing_reports_violation():
    rep = interlacing_check(np.array([3.0, 2.95, 1.0]), np.array([2.9, 2.0, 0.5]), sign=1)
    assert not rep.holds and rep.first_violation == 2
    assert interlacing_check(np.array([3.0, 2.5]), np.array([2.9, 2.0]), rank=1).holds
    same = np.array([2.0, 1.0])
    assert interlacing_check(same, same, sign=1).holds
