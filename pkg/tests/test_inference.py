import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikelab import laws
from spikelab.checks.common import SpectralTask, run_spectral
from spikelab.ensemble import Ensemble, spike_spec
from spikelab.errors import ConfigError, DomainError
from spikelab.inference import (
    corrected_eigenvector_estimate,
    detect_subcritical_bias,
    detectability_report,
    estimate_supercritical_spikes,
    outlier_threshold,
    recover_support,
)
from spikelab.spectral import decompose


def test_noiseless_inversion():
    a = laws.Aspect(1000, 1000)
    mu = [float(laws.classical_location(3.0, 1.0)), 3.0, 2.0]
    est = estimate_supercritical_spikes(mu, a)
    assert len(est) == 1
    e = est[0]
    assert e.d_hat == pytest.approx(3.0, abs=1e-12)
    assert e.sigma_hat == pytest.approx(4.0)
    assert e.stderr == pytest.approx(2.5 * 1000**-0.5)
    assert e.cone_correction == pytest.approx(laws.cone_mass(3.0, 1.0))
    assert e.index == 1
    with pytest.raises(ConfigError):
        estimate_supercritical_spikes([1.0, 2.0], a)
    assert estimate_supercritical_spikes([], a) == []


def test_null_spectrum_has_no_outliers():
    ens = Ensemble.simple(200, 200)
    mu = run_spectral(SpectralTask(ens, top=1), 200, 4)["mu"][:, 0]
    empty = [not estimate_supercritical_spikes([m], ens.aspect) for m in mu]
    assert np.mean(empty) >= 0.99


def test_correction_limits():
    xi = np.ones(4) / 2
    out, u = corrected_eigenvector_estimate(xi, 1e6, 1.0)
    assert u == pytest.approx(1.0, abs=1e-5)
    assert np.array_equal(out, xi)
    with pytest.warns(UserWarning):
        corrected_eigenvector_estimate(xi, 1.0001, 1.0)
    with pytest.raises(DomainError):
        corrected_eigenvector_estimate(xi, 1.0, 1.0)


def test_debiased_overlap():
    ens = Ensemble.simple(500, 500, [2.0])
    data = run_spectral(SpectralTask(ens, top=1, directions=ens.spikes.directions), 60, 2)
    ratios = []
    for mu, ov in zip(data["mu"], data["q_overlap"]):
        est = estimate_supercritical_spikes(mu, ens.aspect, gap_factor=3.0)
        if est:
            _, u = corrected_eigenvector_estimate(None, est[0].d_hat, 1.0)
            ratios.append(ov[0, 0] ** 2 / u)
    assert len(ratios) >= 57
    assert 0.85 <= np.median(ratios) <= 1.15


def test_support_trivial_cases():
    xi = np.random.default_rng(0).standard_normal(50)
    xi /= np.linalg.norm(xi)
    assert recover_support(xi, 1e-12).size == 50
    with pytest.raises(ConfigError):
        recover_support(xi, 0.0)


@given(st.integers(0, 10**6), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_support_monotone_in_threshold(seed, t1, t2):
    xi = np.random.default_rng(seed).standard_normal(30)
    lo, hi = sorted((t1, t2))
    assert set(recover_support(xi, hi)) <= set(recover_support(xi, lo))


def test_support_of_delocalised_vector_is_near_empty():
    eig = decompose(Ensemble.simple(400, 400).draw_trial(0, 0, 0).Q, top=1)
    assert recover_support(eig.vectors[:, 0], 5.0).size <= 2


@pytest.mark.slow
def test_support_recovery_planted():
    M = N = 2000
    S = 50
    v = np.zeros((M, 1))
    v[:S] = S**-0.5
    ens = Ensemble(laws.Aspect(M, N), spike_spec([5.0], M, v))
    data = run_spectral(SpectralTask(ens, top=1, vectors=True, directions=np.eye(M)), 100, 6)
    truth = set(range(S))
    jac = []
    for row in data["q_overlap"]:
        found = set(recover_support(row[0], 3.0).tolist())
        jac.append(len(found & truth) / len(found | truth))
    assert np.median(jac) >= 0.9


def test_bias_detector_rejects_outlier_indices():
    a = laws.Aspect(100, 100)
    mu = np.array([5.0] + [3.9] * 99)
    xi = np.eye(100)
    with pytest.raises(ConfigError):
        detect_subcritical_bias(mu, xi, np.eye(100)[0], a, indices=range(1, 5))
    det = detect_subcritical_bias(mu, xi, np.eye(100)[3], a, indices=range(2, 6), hypothesized_d=0.9)
    assert det.score == pytest.approx(100 / 4)
    assert det.detected
    assert det.predicted_scale == pytest.approx(1.9 / 0.01)
    # default range starts below the observed outliers
    assert detect_subcritical_bias(mu, xi, np.eye(100)[3], a, count=4).indices == (2, 3, 4, 5)
    assert det.implied_gap == pytest.approx(math.sqrt(2.0 / 25.0))


def test_detectability_examples():
    a = laws.Aspect(1000, 4000)  # phi^(1/2) = 0.5
    rep = detectability_report(1 + 20 * 0.5, 2, a)
    assert rep.pca_supercritical and rep.size_feasible is False
    assert rep.pca_margin == pytest.approx(20.0)
    assert rep.naive_margin == pytest.approx(10 / (2 / math.sqrt(4000)))
    none = detectability_report(1.0, 10, a)
    assert not (none.naive_entrywise or none.pca_supercritical or none.subcritical_bias_detectable)
    small = detectability_report(2.0, 1, laws.Aspect(4000, 1000))
    assert not small.size_feasible
    sub = detectability_report(1 + 0.9 * 0.5, 20, a)
    assert sub.predicted_bias == pytest.approx(1.45 / 0.01)
    assert sub.subcritical_bias_detectable
    with pytest.raises(ConfigError):
        detectability_report(0.5, 3, a)


@given(st.floats(1.0, 50.0), st.integers(1, 500), st.floats(0.1, 10.0))
def test_detectability_consistency(sigma, size, phi):
    a = laws.Aspect(1000, max(1, int(round(1000 / phi))))
    rep = detectability_report(sigma, size, a)
    if sigma <= size and rep.pca_supercritical:
        assert rep.size_feasible
    more = detectability_report(sigma * 1.5, size, a)
    assert more.pca_margin >= rep.pca_margin and more.naive_margin >= rep.naive_margin
    bigger = detectability_report(sigma, size + 1, a)
    assert bigger.size_margin >= rep.size_margin and bigger.naive_margin <= rep.naive_margin


def test_outlier_threshold():
    assert outlier_threshold(laws.Aspect(1000, 1000)) == pytest.approx(4.1)
