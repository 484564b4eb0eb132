"""Outlier locations and eigenvalue sticking."""
from __future__ import annotations

import numpy as np

from .. import laws
from ..errors import ConfigError
from .common import DEFAULT_TAU, SpectralTask, check_left_edge, outlier_positions, quantile, run_spectral
from .report import CheckReport, DominationProbe, domination_quantile


def check_outlier_locations(
    ensemble,
    trials=200,
    seed=0,
    probe=DominationProbe(constant=10.0),
    edge_probe=DominationProbe(constant=20.0),
    tau=DEFAULT_TAU,
    centred=False,
    workers=1,
    stream=0,
    name="outlier_locations",
):
    """Outliers sit within ``Delta(d) K**-1/2`` of ``theta(d)``; the first non-outlier within ``K**-2/3`` of the edge.

    Per outlier ``i`` the samples are ``|mu - theta(d_i)| / (Delta(d_i) K**-1/2)``;
    the edge samples are ``|mu_{s+ + 1} - gamma_+| K**(2/3)``.
    """
    aspect = ensemble.aspect
    K, phi = aspect.K, aspect.phi
    check_left_edge(ensemble, tau)
    info, pos = outlier_positions(ensemble)
    d = ensemble.spikes.strengths
    top = None if info.s_minus else info.s_plus + 1
    data = run_spectral(SpectralTask(ensemble, top=top, centred=centred), trials, seed, stream, workers)
    mu = data["mu"]
    report = CheckReport(name, trials, seed)
    report.details.update(
        outliers=list(info.indices), s_plus=info.s_plus, s_minus=info.s_minus, centred=centred, K=K, phi=phi
    )
    for i in info.indices:
        a = pos[i]
        theta = laws.classical_location(d[i - 1], phi)
        scale = laws.fluctuation_scale(d[i - 1], phi) * K**-0.5
        err = np.abs(mu[:, a - 1] - theta)
        ratio = err / scale
        stat, bound = domination_quantile(ratio, probe, K)
        report.add(
            f"outlier_{i}", stat, bound, d=float(d[i - 1]), eigen_index=a, theta=float(theta),
            scale=float(scale), median_abs_error=float(np.median(err)), median_ratio=float(np.median(ratio)),
        )
        report.record_samples(f"outlier_ratio_{i}", ratio)
    edge = np.abs(mu[:, info.s_plus] - aspect.gamma_plus) * K ** (2.0 / 3.0)
    stat, bound = domination_quantile(edge, edge_probe, K)
    report.add("edge", stat, bound, eigen_index=info.s_plus + 1, median=float(np.median(edge)))
    report.record_samples("edge_ratio", edge)
    return report


def check_outlier_scaling(
    small, large, trials=200, seed=0, band=(1.6, 2.5), spike=1, centred=False, workers=1, stream=0,
    name="outlier_scaling",
):
    """Median ``|mu_i - theta(d_i)|`` shrinks by ``(K_large / K_small)**(1/2)`` between two sizes.

    ``band`` brackets the observed ratio of medians (small over large).
    """
    medians = {}
    report = CheckReport(name, trials, seed)
    for label, ens in (("small", small), ("large", large)):
        info, pos = outlier_positions(ens)
        if spike not in info.indices:
            raise ConfigError(f"spike {spike} is not an outlier for the {label} ensemble", f"{label}.spikes")
        d = ens.spikes.strengths[spike - 1]
        if d < 0:
            raise ConfigError("the scaling check is implemented for right outliers", f"{label}.spikes")
        a = pos[spike]
        data = run_spectral(SpectralTask(ens, top=a, centred=centred), trials, seed, stream, workers)
        err = np.abs(data["mu"][:, a - 1] - laws.classical_location(d, ens.aspect.phi))
        medians[label] = float(np.median(err))
        report.record_samples(f"abs_error_{label}", err)
        report.details[f"K_{label}"] = ens.aspect.K
    ratio = medians["small"] / medians["large"]
    expected = (large.aspect.K / small.aspect.K) ** 0.5
    report.add("median_ratio", ratio, band[1], lower=band[0], expected=expected, **{f"median_{k}": v for k, v in medians.items()})
    return report


def check_sticking(
    ensemble,
    trials=200,
    seed=0,
    probe=DominationProbe(constant=10.0),
    indices=(1,),
    tau=DEFAULT_TAU,
    centred=False,
    workers=1,
    stream=0,
    name="sticking",
):
    """Non-outliers of ``Q`` stick to the eigenvalues of ``H`` from the same noise.

    Samples are ``|mu_{i + s+} - lambda_i| K alpha_+`` for each ``i`` in
    ``indices`` (1-based); the headline quantile pools trials and indices.
    """
    aspect = ensemble.aspect
    K = aspect.K
    indices = np.asarray(sorted(set(int(i) for i in indices)))
    if indices.size == 0 or indices[0] < 1:
        raise ConfigError("sticking indices must be positive", "indices")
    info, _ = outlier_positions(ensemble)
    if indices[-1] > (1 - tau) * K:
        raise ConfigError(f"sticking indices must satisfy i <= (1 - tau) K = {(1 - tau) * K:.1f}", "indices")
    check_left_edge(ensemble, tau)
    top = int(indices[-1]) + info.s_plus
    data = run_spectral(SpectralTask(ensemble, top=top, centred=centred, reference=True), trials, seed, stream, workers)
    mu, lam = data["mu"], data["lam"]
    gaps = np.abs(mu[:, indices - 1 + info.s_plus] - lam[:, indices - 1])
    ratio = gaps * K * info.alpha_plus
    stat, bound = domination_quantile(ratio, probe, K)
    report = CheckReport(name, trials, seed)
    report.add(
        "sticking", stat, bound, alpha_plus=info.alpha_plus, s_plus=info.s_plus,
        per_index_quantile={int(i): quantile(ratio[:, k], probe.quantile) for k, i in enumerate(indices)},
        median=float(np.median(ratio)),
    )
    report.details.update(indices=indices.tolist(), centred=centred, K=K)
    report.record_samples("sticking_ratio", ratio, indices.tolist())
    return report
