"""Checks on the uncorrelated matrix: isotropic law, rigidity, QUE, level repulsion, universality."""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import special

from .. import laws
from ..errors import ConfigError
from ..montecarlo import run_trials, stack
from ..spectral import decompose
from ..stats import CHI2_1_MOMENTS, chi2_1_cdf, ks_chi2_1, ks_two_sample, moment_zscores
from .common import DEFAULT_TAU, SpectralTask, quantile, run_spectral
from .report import CheckReport, DominationProbe, domination_quantile

__all__ = [
    "check_isotropic_law",
    "check_rigidity_and_que",
    "check_level_repulsion",
    "check_universality_pair",
    "exact_que_ks",
]


def _require_null(ensemble, name):
    if ensemble.spikes.rank:
        raise ConfigError("this check is stated for Sigma = I; remove the spikes", f"{name}.spikes")


def _unit_vectors(M, count, seed, salt):
    rng = np.random.default_rng([int(seed), salt])
    g = rng.standard_normal((M, count))
    return g / np.linalg.norm(g, axis=0)


@dataclass(frozen=True, eq=False)
class _IsotropicTask:
    ensemble: object
    points: np.ndarray
    left: np.ndarray
    right: np.ndarray


def _isotropic_trial(task, rng, trial):
    draw = task.ensemble.draw(rng)
    eig = decompose(draw.H)
    a = eig.vectors.T @ task.left
    b = eig.vectors.T @ task.right
    inv = 1.0 / (eig.values[:, None] - task.points[None, :])  # eigen x points
    forms = np.einsum("kp,kz,kp->pz", a, inv, b)
    return {"forms": forms}


def check_isotropic_law(
    ensemble, trials=100, seed=0, probe=DominationProbe(constant=10.0), n_points=50, regimes=("S",),
    omega=0.1, points=None, pairs=2, workers=1, stream=0, name="isotropic_law",
):
    """``|<v, G w> - m_{1/phi}(z) <v, w>|`` against its error scale on a spectral-domain grid.

    In ``S`` the scale is ``sqrt(Im m_{1/phi} / (M eta)) + 1/(M eta)``; in
    ``S-tilde`` it is ``(kappa + eta)**(-1/4) K**(-1/2) / (1 + phi)``. Pairs
    are ``(v, v)`` and ``(v, w)`` for seeded random unit vectors. The statistic
    is the probe quantile over trials of the largest ratio over the grid.
    """
    _require_null(ensemble, name)
    aspect = ensemble.aspect
    M, K, phi = aspect.M, aspect.K, aspect.phi
    zs, scales, labels = [], [], []
    if points is not None:
        pts = np.asarray(points, dtype=complex)
        regime = regimes[0]
        bad = ~laws.in_domain(pts, aspect, regime, omega)
        if np.any(bad):
            raise ConfigError(f"{int(bad.sum())} grid points leave the domain {regime}", f"{name}.points")
        groups = [(regime, pts)]
    else:
        groups = [(r, laws.domain_grid(aspect, r, n_points, omega).points) for r in regimes]
    for regime, pts in groups:
        if regime == "S":
            sc = laws.isotropic_error_scale(pts, aspect)
        elif regime == "S-tilde":
            sc = laws.outside_error_scale(pts, aspect)
        else:
            raise ConfigError(f"unsupported regime {regime!r}", f"{name}.regimes")
        zs.append(pts)
        scales.append(sc)
        labels += [regime] * len(pts)
    z = np.concatenate(zs)
    scale = np.concatenate(scales)
    V = _unit_vectors(M, pairs, seed, 21)
    left = np.column_stack([V[:, 0]] + [V[:, 0]] * (pairs - 1))
    right = np.column_stack([V[:, 0]] + [V[:, k] for k in range(1, pairs)])
    inner = np.sum(left * right, axis=0)
    task = _IsotropicTask(ensemble, z, left, right)
    forms = stack(run_trials(partial(_isotropic_trial, task), trials, seed, stream, workers))["forms"]
    m_dual = laws.stieltjes_m(z, 1.0 / phi)
    resid = np.abs(forms - inner[None, :, None] * m_dual[None, None, :])
    ratio = resid / scale[None, None, :]
    per_trial = ratio.reshape(trials, -1).max(axis=1)
    stat, bound = domination_quantile(per_trial, probe, K)
    report = CheckReport(name, trials, seed)
    report.add("isotropic", stat, bound, overall_max=float(per_trial.max()), median=float(np.median(per_trial)))
    worst = ratio.max(axis=(0, 1))
    report.details.update(
        regimes=list(regimes), n_points=int(z.size), worst_point=[float(z[np.argmax(worst)].real), float(z[np.argmax(worst)].imag)],
        pairs=int(pairs),
    )
    report.record_samples("max_ratio", per_trial)
    return report


def exact_que_ks(M, grid=20001, upper=60.0):
    """Kolmogorov distance between ``M * Beta(1/2, (M-1)/2)`` and chi-squared(1).

    ``M <w, u>^2`` for ``u`` uniform on the unit sphere has exactly the first
    law; the distance measures how far the limiting law is from it at size ``M``.
    """
    x = np.linspace(0.0, upper, grid)
    exact = special.betainc(0.5, (M - 1) / 2.0, np.clip(x / M, 0.0, 1.0))
    return float(np.max(np.abs(exact - chi2_1_cdf(x))))


def check_rigidity_and_que(
    ensemble, rigidity_indices=tuple(range(1, 21)), index=5, trials=2000, seed=0,
    probe=DominationProbe(constant=10.0), ks_bound=0.05, z_bound=3.0, tau=DEFAULT_TAU, workers=1, stream=0,
    name="rigidity_que",
):
    """Eigenvalue rigidity near the edge and quantum unique ergodicity of ``zeta_a``."""
    _require_null(ensemble, name)
    aspect = ensemble.aspect
    M, K = aspect.M, aspect.K
    if index > K ** (1 - tau):
        raise ConfigError(f"QUE index must satisfy a <= K^(1 - tau) = {K ** (1 - tau):.1f}", f"{name}.index")
    rig = np.asarray(sorted(set(int(i) for i in rigidity_indices)))
    if rig.size and (rig[0] < 1 or rig[-1] > K):
        raise ConfigError(f"rigidity indices must lie in [1, {K}]", f"{name}.rigidity_indices")
    w = _unit_vectors(M, 1, seed, 31)
    top = int(max(index, rig.max() if rig.size else 1))
    data = run_spectral(SpectralTask(ensemble, top=top, directions=w), trials, seed, stream, workers)
    report = CheckReport(name, trials, seed)
    if rig.size:
        gamma = laws.classical_eigenvalue_locations(aspect, rig)
        weight = np.minimum(rig, K + 1 - rig) ** (1 / 3) * K ** (2 / 3)
        dev = np.abs(data["mu"][:, rig - 1] - gamma) * weight
        stat, bound = domination_quantile(dev, probe, K)
        report.add("rigidity", stat, bound, indices=rig.tolist())
        report.record_samples("rigidity", dev, rig.tolist())
    x = M * data["q_overlap"][:, index - 1, 0] ** 2
    report.add("que_ks", ks_chi2_1(x), ks_bound)
    moments, errs, zs = moment_zscores(x)
    for k, (m, se, zk) in enumerate(zip(moments, errs, zs), start=1):
        report.add(f"que_moment_{k}", zk, z_bound, empirical=m, target=CHI2_1_MOMENTS[k - 1], stderr=se)
    report.details.update(index=index, exact_law_ks=exact_que_ks(M))
    report.record_samples("que", x)
    return report


def check_level_repulsion(
    ensemble, index=1, trials=2000, seed=0, epsilon=0.5, delta=0.25, constant=1.0,
    epsilons=(0.0, 0.25, 0.5, 1.0), tau=DEFAULT_TAU, workers=1, stream=0, name="level_repulsion",
):
    """``P(lambda_a - lambda_{a+1} <= Delta_a K**-eps) <= C K**-delta``, estimated by frequency."""
    _require_null(ensemble, name)
    K = ensemble.aspect.K
    if index > K ** (1 - tau):
        raise ConfigError(f"index must satisfy a <= K^(1 - tau) = {K ** (1 - tau):.1f}", f"{name}.index")
    data = run_spectral(SpectralTask(ensemble, top=index + 1), trials, seed, stream, workers)
    gap = data["mu"][:, index - 1] - data["mu"][:, index]
    spacing = laws.typical_spacing(index, K)
    report = CheckReport(name, trials, seed)
    frac = float(np.mean(gap <= spacing * K**-epsilon))
    report.add("repulsion", frac, constant * K**-delta, epsilon=epsilon, delta=delta)
    eps_grid = sorted(set(epsilons))
    fracs = [float(np.mean(gap <= spacing * K**-e)) for e in eps_grid]
    # nested events: the frequency cannot grow with epsilon
    report.add("nested_monotone", float(sum(b > a for a, b in zip(fracs, fracs[1:]))), 0.0)
    report.add("positive_gaps", float(np.sum(gap <= 0)), 0.0, min_gap=float(gap.min()))
    report.details.update(index=index, fractions=dict(zip([f"{e:g}" for e in eps_grid], fracs)))
    report.record_samples("gap_over_spacing", gap / spacing)
    return report


def _same_ensemble(a, b):
    return (
        a.aspect == b.aspect
        and a.law == b.law
        and a.spikes.rank == b.spikes.rank
        and np.array_equal(a.spikes.strengths, b.spikes.strengths)
    )


def check_universality_pair(
    first, second, indices=(1,), vector_index=3, trials=1000, seed=0, threshold=0.1, workers=1,
    name="universality",
):
    """Two-sample KS distances between two entry laws for edge eigenvalues and a generalised component.

    Eigenvalues are normalised as ``(lambda_a - gamma_a) / Delta_a``; the
    vector statistic is ``M <w, zeta_b>^2`` for a seeded unit vector ``w``.
    Identical ensembles share their random stream, so they give distance 0.
    """
    for label, ens in (("first", first), ("second", second)):
        _require_null(ens, f"{name}.{label}")
    if first.aspect != second.aspect:
        raise ConfigError("the two ensembles must have the same dimensions", f"{name}.second.aspect")
    aspect = first.aspect
    M, K = aspect.M, aspect.K
    idx = sorted(set(int(a) for a in indices))
    for a in idx:
        laws.typical_spacing(a, K)
    w = _unit_vectors(M, 1, seed, 41)
    top = max(max(idx), vector_index)
    streams = (0, 0) if _same_ensemble(first, second) else (0, 1)
    samples = []
    for ens, stream in zip((first, second), streams):
        samples.append(run_spectral(SpectralTask(ens, top=top, directions=w), trials, seed, stream, workers))
    gamma = laws.classical_eigenvalue_locations(aspect, idx)
    report = CheckReport(name, trials, seed)
    for k, a in enumerate(idx):
        norm = [(s["mu"][:, a - 1] - gamma[k]) / laws.typical_spacing(a, K) for s in samples]
        report.add(f"ks_eigenvalue_{a}", ks_two_sample(*norm), threshold)
        report.record_samples(f"eigenvalue_{a}", np.column_stack(norm), [first.law.family, second.law.family])
    vec = [M * s["q_overlap"][:, vector_index - 1, 0] ** 2 for s in samples]
    report.add(f"ks_vector_{vector_index}", ks_two_sample(*vec), threshold)
    report.record_samples(f"vector_{vector_index}", np.column_stack(vec), [first.law.family, second.law.family])
    report.details.update(laws=[first.law.family, second.law.family], streams=list(streams))
    return report
