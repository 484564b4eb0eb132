"""Spike detection and estimation from an observed spectrum.

The observer sees the eigenvalues (and eigenvectors) of ``Q`` but not the
spikes. Outliers are eigenvalues clearly above the bulk edge; each one is
mapped back through the inverse of the classical location.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import laws
from .errors import ConfigError, DomainError

__all__ = [
    "SpikeEstimate",
    "BiasDetection",
    "DetectabilityReport",
    "estimate_supercritical_spikes",
    "corrected_eigenvector_estimate",
    "recover_support",
    "detect_subcritical_bias",
    "detectability_report",
]


@dataclass(frozen=True)
class SpikeEstimate:
    index: int  # 1-based eigenvalue index
    eigenvalue: float
    d_hat: float
    sigma_hat: float
    stderr: float
    cone_correction: float


def outlier_threshold(aspect, gap_factor=10.0):
    return aspect.gamma_plus + gap_factor * aspect.K ** (-2.0 / 3.0)


def estimate_supercritical_spikes(spectrum, aspect, gap_factor=10.0):
    """Estimate every spike whose outlier exceeds ``gamma_+ + gap_factor K**(-2/3)``.

    ``spectrum`` must be sorted nonincreasing (only its top entries are read).
    """
    mu = np.asarray(spectrum, dtype=float)
    if mu.size > 1 and np.any(np.diff(mu) > 0):
        raise ConfigError("spectrum must be sorted nonincreasing", "spectrum")
    cut = outlier_threshold(aspect, gap_factor)
    phi, K = aspect.phi, aspect.K
    out = []
    for k, x in enumerate(mu):
        if not x > cut:
            break
        d = laws.inverse_classical_location(float(x), phi, "right")
        out.append(
            SpikeEstimate(
                index=k + 1,
                eigenvalue=float(x),
                d_hat=d,
                sigma_hat=1.0 + math.sqrt(phi) * d,
                stderr=laws.fluctuation_scale(d, phi) * K**-0.5,
                cone_correction=float(laws.cone_mass(d, phi)),
            )
        )
    return out


def corrected_eigenvector_estimate(xi, d_hat, phi, warn_below=0.05):
    """Return ``(xi, u(d_hat))``.

    Overlaps ``<v, xi>`` estimate ``<v, v_i> * u(d_hat)**0.5``; dividing by
    the square root of the returned overlap removes the bias. A warning is
    issued when the overlap is so small that ``xi`` carries little
    information about the spike direction.
    """
    if not d_hat > 1:
        raise DomainError(f"the correction needs d_hat > 1, got {d_hat}")
    u = float(laws.cone_mass(d_hat, phi))
    if u < warn_below:
        warnings.warn(f"predicted squared overlap {u:.3g} is tiny; the eigenvector is nearly uninformative")
    return np.asarray(xi, dtype=float), u


def recover_support(xi, threshold):
    """Coordinates (0-based) where ``|xi(k)| >= threshold * M**-0.5``.

    The rule assumes the spike direction is roughly constant on its support;
    for other shapes it is a heuristic.
    """
    xi = np.asarray(xi, dtype=float)
    if not threshold > 0:
        raise ConfigError("threshold must be positive", "threshold")
    return np.flatnonzero(np.abs(xi) >= threshold * xi.size**-0.5)


@dataclass(frozen=True)
class BiasDetection:
    score: float
    detected: bool
    implied_gap: float  # estimate of |d - 1|; the sign is not identifiable
    predicted_scale: float | None
    indices: tuple


def detect_subcritical_bias(
    mu, xi, candidate, aspect, indices=None, multiple=3.0, gap_factor=10.0, hypothesized_d=None, count=10,
):
    """Test whether non-outlier eigenvectors lean towards ``candidate``.

    ``score`` is the mean over ``indices`` (1-based, non-outliers only) of
    ``M <candidate, xi_a>^2``, which averages 1 without a spike along
    ``candidate`` and about ``sigma / (d - 1)**2`` with one. The implied
    ``|d - 1|`` uses ``sigma ~ 1 + phi**0.5``, its value at the transition.
    ``xi`` holds the eigenvectors as columns in the order of ``mu``. By
    default ``indices`` are the ``count`` eigenvectors just below the
    observed outliers.
    """
    mu = np.asarray(mu, dtype=float)
    n_out = int(np.sum(mu > outlier_threshold(aspect, gap_factor)))
    if indices is None:
        indices = range(n_out + 1, n_out + count + 1)
    idx = np.asarray(list(indices), dtype=int)
    if idx.size == 0:
        raise ConfigError("empty index range", "indices")
    if idx.min() <= n_out:
        raise ConfigError(f"index range reaches the {n_out} observed outliers", "indices")
    if idx.max() > xi.shape[1]:
        raise ConfigError(f"only {xi.shape[1]} eigenvectors were supplied", "indices")
    w = np.asarray(candidate, dtype=float)
    w = w / np.linalg.norm(w)
    M = aspect.M
    score = float(np.mean(M * (xi[:, idx - 1].T @ w) ** 2))
    rp = math.sqrt(aspect.phi)
    implied = math.sqrt((1.0 + rp) / score) if score > 0 else math.inf
    predicted = None
    if hypothesized_d is not None:
        predicted = (1.0 + rp * hypothesized_d) / (hypothesized_d - 1.0) ** 2
    return BiasDetection(score, score > multiple, implied, predicted, tuple(idx.tolist()))


@dataclass(frozen=True)
class DetectabilityReport:
    naive_entrywise: bool
    naive_margin: float
    pca_supercritical: bool
    pca_margin: float
    size_feasible: bool
    size_margin: float
    subcritical_bias_detectable: bool
    predicted_bias: float | None

    def as_dict(self):
        return dict(self.__dict__)


def detectability_report(sigma, support_size, aspect, factor=5.0):
    """Which route can find a single planted spike of strength ``sigma`` on ``support_size`` variables.

    Each ``a >> b`` reads ``a / b >= factor``; margins are the ratios ``a / b``.
    """
    if sigma < 1 or support_size < 1:
        raise ConfigError("need sigma >= 1 and support_size >= 1")
    rp = math.sqrt(aspect.phi)
    excess = sigma - 1.0
    naive = excess / (support_size / math.sqrt(aspect.N))
    pca = excess / rp
    size = support_size / rp
    d = excess / rp
    predicted = None
    bias_ok = False
    if 0 < d < 1:
        predicted = sigma / (d - 1.0) ** 2
        bias_ok = predicted >= factor
    return DetectabilityReport(
        naive_entrywise=naive >= factor,
        naive_margin=naive,
        pca_supercritical=pca >= factor,
        pca_margin=pca,
        size_feasible=size >= factor,
        size_margin=size,
        subcritical_bias_detectable=bias_ok,
        predicted_bias=predicted,
    )
