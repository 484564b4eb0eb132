"""Plumbing shared by the Monte Carlo checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..ensemble import Ensemble, outlier_index_set
from ..errors import ConfigError
from ..montecarlo import run_trials, stack
from ..spectral import decompose

DEFAULT_TAU = 0.1


@dataclass(frozen=True, eq=False)
class SpectralTask:
    """What one trial should return about the spectrum of a draw.

    ``top`` limits the computation to the largest eigenpairs (``None`` for
    all). ``directions`` is an ``M x n`` matrix whose overlaps with the
    returned eigenvectors are reported.
    """

    ensemble: Ensemble
    top: int | None = None
    centred: bool = False
    reference: bool = False
    vectors: bool = False
    directions: np.ndarray | None = None


def spectral_trial(task: SpectralTask, rng, trial):
    draw = task.ensemble.draw(rng)
    q, h = ("Qdot", "Hdot") if task.centred else ("Q", "H")
    need_vectors = task.vectors or task.directions is not None
    out = {}
    eig = decompose(draw.matrix(q), task.top, need_vectors)
    out["mu"] = eig.values
    if task.directions is not None:
        out["q_overlap"] = eig.vectors.T @ task.directions
    if task.reference:
        eig_h = decompose(draw.matrix(h), task.top, need_vectors)
        out["lam"] = eig_h.values
        if task.directions is not None:
            out["h_overlap"] = eig_h.vectors.T @ task.directions
    return out


def run_spectral(task, trials, seed, stream=0, workers=1):
    return stack(run_trials(partial(spectral_trial, task), trials, seed, stream, workers))


def outlier_positions(ensemble):
    """Map each outlier spike (1-based spike index) to its eigenvalue index (1-based).

    Right outliers fill the top of the spectrum in order; left outliers fill
    the bottom of the nontrivial spectrum, the most negative spike last.
    """
    K = ensemble.aspect.K
    info = outlier_index_set(ensemble.spikes, K)
    d = ensemble.spikes.strengths
    right = [i for i in info.indices if d[i - 1] > 0]
    left = [i for i in info.indices if d[i - 1] < 0]
    pos = {i: k + 1 for k, i in enumerate(right)}
    for k, i in enumerate(reversed(left)):
        pos[i] = K - k
    return info, pos


def check_left_edge(ensemble, tau, path="spikes"):
    phi = ensemble.aspect.phi
    if np.any(ensemble.spikes.strengths < 0) and abs(phi - 1.0) < tau:
        raise ConfigError(
            f"left-edge statements need |phi - 1| >= tau = {tau}, got phi = {phi:.6g}", path
        )


def spike_components(ensemble, W):
    """``w_i = <v_i, w>`` for each spike and the squared norm left outside the spikes."""
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    comps = ensemble.spikes.directions.T @ W
    rest = np.sum(W * W, axis=0) - np.sum(comps * comps, axis=0)
    return comps, np.clip(rest, 0.0, None)


def probe_directions(ensemble, n_random=2, seed=0, include_spikes=True, coordinate=True):
    """Deterministic test directions: spike directions, seeded random unit vectors, a coordinate vector."""
    M = ensemble.aspect.M
    names, cols = [], []
    if include_spikes:
        for i in range(ensemble.spikes.rank):
            names.append(f"v{i + 1}")
            cols.append(ensemble.spikes.directions[:, i])
    rng = np.random.default_rng([int(seed), 7])
    for k in range(n_random):
        g = rng.standard_normal(M)
        names.append(f"random{k + 1}")
        cols.append(g / np.linalg.norm(g))
    if coordinate:
        names.append(f"e{M}")
        e = np.zeros(M)
        e[-1] = 1.0
        cols.append(e)
    return names, (np.column_stack(cols) if cols else np.zeros((M, 0)))


def quantile(x, q):
    return float(np.quantile(np.asarray(x, dtype=float).ravel(), q))


def sqrt_phi(ensemble):
    return math.sqrt(ensemble.aspect.phi)
