"""Outlier and non-outlier eigenvector checks."""
from __future__ import annotations

import math

import numpy as np

from .. import laws
from ..errors import ConfigError
from ..stats import ks_chi2_1, moment_zscores, CHI2_1_MOMENTS
from .common import (
    DEFAULT_TAU,
    SpectralTask,
    check_left_edge,
    outlier_positions,
    probe_directions,
    quantile,
    run_spectral,
    spike_components,
)
from .report import CheckReport, DominationProbe, domination_quantile

__all__ = [
    "spike_gaps",
    "near_bulk_error",
    "far_bulk_error",
    "delocalization_scale",
    "nonoutlier_law_scale",
    "check_cone_near_bulk",
    "check_cone_far_from_bulk",
    "check_degenerate_cone",
    "check_nonoutlier_delocalization",
    "check_nonoutlier_law",
]


def spike_gaps(strengths, A, M):
    """``nu_i(A)`` for every spike, plus the value for the unspiked directions (``d = 0``).

    ``A`` holds 1-based spike indices. Returns ``(nu, nu_rest)``; ``nu_rest``
    is ``nan`` when every direction is spiked.
    """
    d = np.asarray(strengths, dtype=float)
    inside = np.zeros(d.size, dtype=bool)
    inside[np.asarray(list(A), dtype=int) - 1] = True
    has_rest = d.size < M
    outside_vals = np.append(d[~inside], 0.0) if has_rest else d[~inside]
    nu = np.empty(d.size)
    for k in range(d.size):
        others = outside_vals if inside[k] else d[inside]
        nu[k] = np.min(np.abs(d[k] - others)) if others.size else np.inf
    nu_rest = float(np.min(np.abs(d[inside]))) if has_rest else math.nan
    return nu, nu_rest


def _weighted_gap_sums(ensemble, A, W):
    """Per direction: (sum over all i, sum over i outside A) of ``sigma_i w_i^2 / (M nu_i^2)``."""
    M, phi = ensemble.aspect.M, ensemble.aspect.phi
    d = ensemble.spikes.strengths
    sig = 1.0 + math.sqrt(phi) * d
    comps, rest = spike_components(ensemble, W)
    nu, nu_rest = spike_gaps(d, A, M)
    inside = np.zeros(d.size, dtype=bool)
    inside[np.asarray(list(A), dtype=int) - 1] = True
    terms = (sig / (M * nu**2))[:, None] * comps**2
    rest_term = rest / (M * nu_rest**2) if not math.isnan(nu_rest) else np.zeros_like(rest)
    total = terms.sum(axis=0) + rest_term
    outside = terms[~inside].sum(axis=0) + rest_term
    return comps, inside, total, outside


def near_bulk_error(ensemble, A, W):
    """Error scale of ``<w, P_A w>`` for outliers near the bulk, one value per column of ``W``."""
    M, phi = ensemble.aspect.M, ensemble.aspect.phi
    d = ensemble.spikes.strengths
    comps, inside, total, outside = _weighted_gap_sums(ensemble, A, W)
    dA = d[inside]
    first = (comps[inside] ** 2 / (M**0.5 * np.sqrt(dA - 1.0))[:, None]).sum(axis=0)
    cone = (laws.cone_mass(dA, phi)[:, None] * comps[inside] ** 2).sum(axis=0)
    return first + total + np.sqrt(cone) * np.sqrt(outside)


def far_bulk_error(ensemble, A, W, d_scale=None):
    """Error scale of ``<w, P_A w>`` for outliers far from the bulk.

    ``d_scale`` is the common size ``d_A`` of the spikes in ``A`` (their mean
    by default).
    """
    M, phi = ensemble.aspect.M, ensemble.aspect.phi
    rp = math.sqrt(phi)
    d = ensemble.spikes.strengths
    comps, inside, total, outside = _weighted_gap_sums(ensemble, A, W)
    dA = float(np.mean(d[inside])) if d_scale is None else float(d_scale)
    sig_w = ((1.0 + rp * d[inside])[:, None] * comps[inside] ** 2).sum(axis=0)
    return (
        sig_w / (M**0.5 * (rp + dA))
        + (1.0 + rp * dA**2 / (rp + dA)) * total
        + dA / (rp + dA) * np.sqrt(sig_w) * np.sqrt(outside)
    )


def delocalization_scale(ensemble, a, W):
    """``|w|^2/M + sum_i sigma_i w_i^2 / (M ((d_i - 1)^2 + kappa_a))`` per column of ``W``."""
    M, K, phi = ensemble.aspect.M, ensemble.aspect.K, ensemble.aspect.phi
    d = ensemble.spikes.strengths
    kappa = laws.typical_edge_distance(a, K)
    comps, rest = spike_components(ensemble, W)
    sig = 1.0 + math.sqrt(phi) * d
    spiked = ((sig / (M * ((d - 1.0) ** 2 + kappa)))[:, None] * comps**2).sum(axis=0)
    norm2 = (comps**2).sum(axis=0) + rest
    return norm2 / M + spiked + rest / (M * (1.0 + kappa))


def nonoutlier_law_scale(ensemble, W):
    """``sum_i sigma_i w_i^2 / (M (d_i - 1)^2)`` per column of ``W`` (unspiked directions have ``d = 0``)."""
    M, phi = ensemble.aspect.M, ensemble.aspect.phi
    d = ensemble.spikes.strengths
    if np.any(d == 1.0):
        raise ConfigError("the non-outlier law needs every d_i != 1", "spikes")
    comps, rest = spike_components(ensemble, W)
    sig = 1.0 + math.sqrt(phi) * d
    return ((sig / (M * (d - 1.0) ** 2))[:, None] * comps**2).sum(axis=0) + rest / M


def _right_outlier_set(ensemble, A, name):
    info, pos = outlier_positions(ensemble)
    A = tuple(int(i) for i in A)
    if not A:
        raise ConfigError("the index set A must not be empty", f"{name}.A")
    for i in A:
        if i not in info.indices:
            raise ConfigError(f"spike {i} is not an outlier", f"{name}.A")
        if ensemble.spikes.strengths[i - 1] < 0:
            raise ConfigError(f"spike {i} is a left outlier; only right outliers are supported", f"{name}.A")
    return info, pos, A


def _vacuous(name, trials, seed):
    report = CheckReport(name, trials, seed)
    report.details["vacuous"] = "no spikes"
    return report


def _spike_range(ensemble, A, name):
    r = ensemble.spikes.rank
    for i in A:
        if not 1 <= int(i) <= r:
            raise ConfigError(f"spike index {i} outside 1..{r}", f"{name}.A")


def _default_A(ensemble):
    info, _ = outlier_positions(ensemble)
    right = [i for i in info.indices if ensemble.spikes.strengths[i - 1] > 0]
    return tuple(right[:1])


def _cone_check(ensemble, A, trials, seed, probe, orth_probe, median_band, centred, workers, stream, name, far, d_scale):
    aspect = ensemble.aspect
    M, K, phi = aspect.M, aspect.K, aspect.phi
    info, pos, A = _right_outlier_set(ensemble, A, name)
    d = ensemble.spikes.strengths
    names, W = probe_directions(ensemble, seed=seed)
    eig_idx = np.array([pos[i] for i in A])
    data = run_spectral(
        SpectralTask(ensemble, top=int(eig_idx.max()), centred=centred, directions=W), trials, seed, stream, workers
    )
    ov = data["q_overlap"][:, eig_idx - 1, :]  # trials x |A| x directions
    proj = np.sum(ov**2, axis=1)  # <w, P_A w>
    comps, _ = spike_components(ensemble, W)
    dA = d[np.asarray(A) - 1]
    leading = (laws.cone_mass(dA, phi)[:, None] * comps[np.asarray(A) - 1] ** 2).sum(axis=0)
    err = far_bulk_error(ensemble, A, W, d_scale) if far else near_bulk_error(ensemble, A, W)
    dev = np.abs(proj - leading)
    normalized = dev / err
    report = CheckReport(name, trials, seed)
    stat, bound = domination_quantile(normalized, probe, K)
    report.add("cone", stat, bound, directions=names)
    report.record_samples("projection", proj, names)
    report.record_samples("normalized_deviation", normalized, names)
    for i in A:
        k = names.index(f"v{i}")
        med = float(np.median(dev[:, k]))
        report.add(f"median_dev_v{i}", med, median_band, leading=float(leading[k]), error_scale=float(err[k]))
    nu, _ = spike_gaps(d, A, M)
    sig = 1.0 + math.sqrt(phi) * d
    for j in range(1, ensemble.spikes.rank + 1):
        if j in A:
            continue
        k = names.index(f"v{j}")
        orth = M * proj[:, k] * nu[j - 1] ** 2 / sig[j - 1]
        stat, bound = domination_quantile(orth, orth_probe, K)
        report.add(f"orthogonal_v{j}", stat, bound, nu=float(nu[j - 1]), median=float(np.median(orth)))
        report.record_samples(f"orthogonal_ratio_v{j}", orth)
    if len(A) > 1:
        cross = np.einsum("tai,taj->tij", ov, ov)
        ia = [names.index(f"v{i}") for i in A]
        off = [np.abs(cross[:, p, q]) for p in ia for q in ia if p < q]
        report.details["offdiag_median"] = float(np.median(np.concatenate(off)))
    report.details.update(A=list(A), eigen_indices=eig_idx.tolist(), centred=centred, far_from_bulk=far)
    return report


def check_cone_near_bulk(
    ensemble, A=None, trials=200, seed=0, probe=DominationProbe(constant=10.0),
    orth_probe=DominationProbe(constant=10.0), median_band=0.05, tau=DEFAULT_TAU, centred=False,
    workers=1, stream=0, name="cone_near_bulk",
):
    """Outlier eigenvectors concentrate on the cone ``<w, P_A w> ~ sum_A u(d_i) w_i^2``.

    Also checks that the outlier eigenvectors are delocalised along spike
    directions outside ``A`` (``M <v_j, P_A v_j> nu_j^2 / sigma_j`` bounded).
    """
    A = _default_A(ensemble) if A is None else A
    if not A and ensemble.spikes.rank == 0:
        return _vacuous(name, trials, seed)
    _spike_range(ensemble, A, name)
    K = ensemble.aspect.K
    for i in A:
        di = ensemble.spikes.strengths[int(i) - 1]
        if not (1 + K ** (-1 / 3) <= di <= 1 / tau):
            raise ConfigError(f"near-bulk statement needs 1 + K^-1/3 <= d_{i} <= 1/tau, got {di}", f"{name}.A")
    return _cone_check(ensemble, A, trials, seed, probe, orth_probe, median_band, centred, workers, stream, name, False, None)


def check_cone_far_from_bulk(
    ensemble, A=None, trials=200, seed=0, probe=DominationProbe(constant=10.0),
    orth_probe=DominationProbe(constant=10.0), median_band=0.05, tau=DEFAULT_TAU, d_scale=None,
    centred=False, workers=1, stream=0, name="cone_far_from_bulk",
):
    """Far-from-bulk version of the cone check, with its own error expression."""
    A = _default_A(ensemble) if A is None else A
    if not A and ensemble.spikes.rank == 0:
        return _vacuous(name, trials, seed)
    _spike_range(ensemble, A, name)
    d = ensemble.spikes.strengths
    dA = np.array([d[int(i) - 1] for i in A])
    scale = float(np.mean(dA)) if d_scale is None else float(d_scale)
    if np.any(dA < 1 + tau):
        raise ConfigError(f"far-from-bulk statement needs d_i >= 1 + tau for i in A", f"{name}.A")
    if np.any(dA < tau * scale) or np.any(dA > scale / tau):
        raise ConfigError("spikes in A are not comparable to d_A within the factor 1/tau", f"{name}.A")
    return _cone_check(ensemble, A, trials, seed, probe, orth_probe, median_band, centred, workers, stream, name, True, scale)


def check_degenerate_cone(
    ensemble, trials=200, seed=0, probe=DominationProbe(constant=10.0),
    deloc_probe=DominationProbe(constant=10.0), band=0.05, tau=DEFAULT_TAU, centred=False,
    workers=1, stream=0, name="degenerate_cone",
):
    """A degenerate group of outliers: ``M M^T`` and ``M^T M`` are close to ``u(d) I``.

    ``M_ij = <v_i, xi_j>`` over the group. The band components take, for each
    entry, the median absolute deviation over trials and report the largest.
    """
    aspect = ensemble.aspect
    M, K, phi = aspect.M, aspect.K, aspect.phi
    d = ensemble.spikes.strengths
    if d.size == 0:
        return _vacuous(name, trials, seed)
    if d.size < 2 or np.any(d != d[0]):
        raise ConfigError("the degenerate check needs at least two equal spikes and no others", "spikes")
    if not d[0] > 1 + tau:
        raise ConfigError(f"the degenerate spike must exceed 1 + tau, got {d[0]}", "spikes")
    k = d.size
    A = tuple(range(1, k + 1))
    _, pos, _ = _right_outlier_set(ensemble, A, name)
    V = ensemble.spikes.directions
    rng = np.random.default_rng([int(seed), 11])
    g = rng.standard_normal(M)
    g -= V @ (V.T @ g)
    null_dirs = [g / np.linalg.norm(g)]
    null_names = ["random_null"]
    e = np.zeros(M)
    e[-1] = 1.0
    if np.allclose(V.T @ e, 0.0):
        null_dirs.append(e)
        null_names.append(f"e{M}")
    W = np.column_stack([V] + null_dirs)
    data = run_spectral(SpectralTask(ensemble, top=k, centred=centred, directions=W), trials, seed, stream, workers)
    ov = data["q_overlap"]  # trials x k (eigen) x directions
    Mmat = np.transpose(ov[:, :, :k], (0, 2, 1))  # M_ij = <v_i, xi_j>
    u = float(laws.cone_mass(d[0], phi))
    eye = np.eye(k)
    MMt = Mmat @ np.transpose(Mmat, (0, 2, 1)) - u * eye
    MtM = np.transpose(Mmat, (0, 2, 1)) @ Mmat - u * eye
    report = CheckReport(name, trials, seed)
    for label, dev in (("MMt", MMt), ("MtM", MtM)):
        med = np.median(np.abs(dev), axis=0)
        report.add(f"band_{label}", float(med.max()), band, median_entries=med)
    nu = float(d[0])  # distance from the group to the unspiked d = 0
    sigma = 1.0 + math.sqrt(phi) * d[0]
    err = 1.0 / (M**0.5 * (d[0] - 1.0) ** 0.5) + sigma / (M * nu**2)
    worst = np.max(np.abs(MMt).reshape(trials, -1), axis=1) / err
    stat, bound = domination_quantile(worst, probe, K)
    report.add("cone", stat, bound, error_scale=err)
    deloc = M * ov[:, :, k:] ** 2 * nu**2  # sigma = 1 on the null space
    stat, bound = domination_quantile(deloc, deloc_probe, K)
    report.add("null_space_delocalization", stat, bound, directions=null_names)
    trace_gap = np.abs(np.trace(MMt, axis1=1, axis2=2) - np.trace(MtM, axis1=1, axis2=2))
    report.details.update(u=u, trace_identity_max=float(trace_gap.max()), centred=centred, eigen_indices=[pos[i] for i in A])
    report.record_samples("overlap_matrix", Mmat.reshape(trials, -1), [f"{i + 1}{j + 1}" for i in range(k) for j in range(k)])
    return report


def _nonoutlier_indices(ensemble, indices, tau, name):
    info, _ = outlier_positions(ensemble)
    K = ensemble.aspect.K
    outlier_eigs = set(range(1, info.s_plus + 1)) | set(range(K - info.s_minus + 1, K + 1))
    out = []
    for a in indices:
        a = int(a)
        if a in outlier_eigs:
            raise ConfigError(f"index {a} belongs to an outlier", f"{name}.indices")
        if not 1 <= a <= (1 - tau) * K:
            raise ConfigError(f"index {a} outside [1, (1 - tau) K]", f"{name}.indices")
        out.append(a)
    return info, out


def check_nonoutlier_delocalization(
    ensemble, indices=(5,), trials=200, seed=0, probe=DominationProbe(constant=10.0), tau=DEFAULT_TAU,
    centred=False, workers=1, stream=0, name="nonoutlier_delocalization",
):
    """``<w, xi_a>^2`` against the non-outlier delocalisation scale, over directions and indices."""
    K = ensemble.aspect.K
    info, idx = _nonoutlier_indices(ensemble, indices, tau, name)
    names, W = probe_directions(ensemble, seed=seed)
    data = run_spectral(SpectralTask(ensemble, top=max(idx), centred=centred, directions=W), trials, seed, stream, workers)
    report = CheckReport(name, trials, seed)
    ratios = []
    for a in idx:
        r = data["q_overlap"][:, a - 1, :] ** 2 / delocalization_scale(ensemble, a, W)
        ratios.append(r)
        report.record_samples(f"ratio_a{a}", r, names)
        report.details[f"quantile_a{a}"] = {n: quantile(r[:, k], probe.quantile) for k, n in enumerate(names)}
    stat, bound = domination_quantile(np.stack(ratios), probe, K)
    report.add("delocalization", stat, bound, indices=idx, directions=names)
    report.details["centred"] = centred
    return report


def check_nonoutlier_law(
    ensemble, index=3, direction=None, trials=2000, seed=0, ks_bound=0.05, z_bound=3.0,
    median_band=(0.3, 1.2), tau=DEFAULT_TAU, strict=True, centred=False, workers=1, stream=0,
    name="nonoutlier_law",
):
    """The rescaled generalised component of a non-outlier is asymptotically chi-squared(1).

    ``Theta = <w, xi_a>^2 / sum_i sigma_i w_i^2 / (M (d_i - 1)^2)``. The
    hypothesis ``a <= K**(1 - tau) alpha_+**3`` is enforced when ``strict``;
    otherwise the check runs and records the violation.
    """
    K = ensemble.aspect.K
    info, idx = _nonoutlier_indices(ensemble, [index], tau, name)
    a = idx[0]
    admissible = K ** (1 - tau) * info.alpha_plus**3
    if a > admissible and strict:
        raise ConfigError(
            f"index {a} exceeds K^(1-tau) alpha_+^3 = {admissible:.4g}; the law is not asserted there", f"{name}.index"
        )
    if direction is None:
        if ensemble.spikes.rank == 0:
            raise ConfigError("give a direction when there are no spikes", f"{name}.direction")
        w = ensemble.spikes.directions[:, :1]
        label = "v1"
    else:
        w = np.asarray(direction, dtype=float).reshape(-1, 1)
        label = "custom"
    data = run_spectral(SpectralTask(ensemble, top=a, centred=centred, directions=w), trials, seed, stream, workers)
    theta = data["q_overlap"][:, a - 1, 0] ** 2 / nonoutlier_law_scale(ensemble, w)[0]
    report = CheckReport(name, trials, seed)
    report.add("ks_chi2", ks_chi2_1(theta), ks_bound)
    moments, errs, zs = moment_zscores(theta)
    for k, (m, se, z) in enumerate(zip(moments, errs, zs), start=1):
        report.add(f"moment_{k}", z, z_bound, empirical=m, target=CHI2_1_MOMENTS[k - 1], stderr=se)
    report.add("median", float(np.median(theta)), median_band[1], lower=median_band[0])
    report.details.update(
        index=a, direction=label, admissible_max_index=admissible, hypothesis_satisfied=bool(a <= admissible),
        alpha_plus=info.alpha_plus, centred=centred,
    )
    report.record_samples("theta", theta)
    return report
