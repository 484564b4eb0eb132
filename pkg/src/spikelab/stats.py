"""Summary statistics and goodness-of-fit helpers for Monte Carlo samples."""
from __future__ import annotations

import numpy as np
from scipy import special, stats

__all__ = [
    "CHI2_1_MOMENTS",
    "chi2_1_cdf",
    "ks_chi2_1",
    "ks_two_sample",
    "moment_zscores",
    "summarize",
]

CHI2_1_MOMENTS = (1.0, 3.0, 15.0)


def chi2_1_cdf(x):
    """CDF of a squared standard normal, via the regularized lower incomplete gamma."""
    x = np.asarray(x, dtype=float)
    return special.gammainc(0.5, np.clip(x, 0.0, None) / 2.0)


def ks_chi2_1(samples):
    """One-sample Kolmogorov-Smirnov distance to the chi-squared law with one degree of freedom."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("empty sample")
    return float(stats.kstest(samples, chi2_1_cdf).statistic)


def ks_two_sample(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    return float(stats.ks_2samp(a, b).statistic)


def moment_zscores(samples, targets=CHI2_1_MOMENTS):
    """Empirical moments ``E x^k`` and their distance to ``targets`` in standard errors.

    Returns ``(moments, stderrs, zscores)``; k runs from 1 to ``len(targets)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    moments, errs, zs = [], [], []
    for k, target in enumerate(targets, start=1):
        xk = x**k
        m = float(xk.mean())
        se = float(xk.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
        moments.append(m)
        errs.append(se)
        zs.append(abs(m - target) / se if se > 0 else (0.0 if m == target else float("inf")))
    return moments, errs, zs


def summarize(samples, quantiles=(0.5, 0.9, 0.99), reference=None):
    """Mean, standard error, quantiles and KS distances of a sample.

    ``reference``, when given, is a second sample for a two-sample KS distance.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot summarize an empty sample")
    out = {
        "n": int(x.size),
        "mean": float(x.mean()),
        "stderr": float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0,
        "quantiles": {f"{q:g}": float(np.quantile(x, q)) for q in quantiles},
        "ks_chi2_1": ks_chi2_1(x),
    }
    if reference is not None:
        out["ks_reference"] = ks_two_sample(x, reference)
    return out
