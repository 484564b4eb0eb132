"""Eigensystems, resolvent quadratic forms and the low-rank perturbation identities.

Notation follows the rest of the package: ``H`` is the uncorrelated reference
matrix with resolvent ``G(z) = (H - z)**-1``, ``Q = Sigma**0.5 H Sigma**0.5``
and ``F(z) = phi**0.5 (1 + z G(z))``. ``V`` holds the spike directions as
columns and ``D`` the spike strengths.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import optimize

from .errors import ConfigError, DomainError, NumericalError, PoleError

__all__ = [
    "Eigensystem",
    "SpectralData",
    "MasterRoots",
    "InterlacingReport",
    "decompose",
    "spectral_data",
    "resolvent_form",
    "resolvent_form_direct",
    "w_matrix",
    "master_equation_roots",
    "pert2_residual",
    "pert3_form",
    "contour_projection",
    "spectral_projection_form",
    "interlacing_check",
]

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Eigensystem:
    """Eigenvalues sorted nonincreasing; ``vectors[:, k]`` belongs to ``values[k]``.

    ``vectors`` is ``None`` when only eigenvalues were requested. When only the
    top ``k`` pairs were computed, ``complete`` is false.
    """

    values: np.ndarray
    vectors: np.ndarray | None
    complete: bool = True

    def __len__(self):
        return self.values.size

    def overlaps(self, w):
        """``<w, xi_k>`` for every stored eigenvector (``w`` may be a matrix of columns)."""
        if self.vectors is None:
            raise DomainError("eigenvectors were not computed")
        return self.vectors.T @ w


def _fix_signs(vectors):
    # largest-magnitude component positive; argmax takes the first on ties
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def decompose(A, top=None, vectors=True):
    """Symmetric eigendecomposition, sorted nonincreasing.

    ``top=k`` computes only the ``k`` largest pairs with a subset LAPACK
    driver. Eigenvector signs are fixed so that each vector's
    largest-magnitude entry is positive.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = max(1.0, float(np.abs(A).max()) if A.size else 1.0)
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise DomainError("matrix is not symmetric")
    try:
        if top is None or top >= n:
            if vectors:
                vals, vecs = np.linalg.eigh(A)
            else:
                vals, vecs = np.linalg.eigvalsh(A), None
            complete = True
        else:
            if top < 1:
                raise DomainError("top must be positive")
            out = scipy.linalg.eigh(
                A, subset_by_index=[n - top, n - 1], eigvals_only=not vectors, driver="evr", check_finite=False
            )
            vals, vecs = (out if vectors else (out, None))
            complete = False
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    vals = vals[::-1].copy()
    if vecs is not None:
        vecs = _fix_signs(vecs[:, ::-1])
    return Eigensystem(vals, vecs, complete)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigensystems of ``Q`` (``mu``, ``xi``) and of ``H`` (``lam``, ``zeta``) from one draw."""

    Q: Eigensystem
    H: Eigensystem

    @property
    def mu(self):
        return self.Q.values

    @property
    def xi(self):
        return self.Q.vectors

    @property
    def lam(self):
        return self.H.values

    @property
    def zeta(self):
        return self.H.vectors


def spectral_data(draw, centred=False, top=None, vectors=True):
    """Decompose ``Q`` and ``H`` (or ``Qdot`` and ``Hdot``) of a draw."""
    q, h = ("Qdot", "Hdot") if centred else ("Q", "H")
    return SpectralData(
        decompose(draw.matrix(q), top, vectors),
        decompose(draw.matrix(h), top, vectors),
    )


def _as_columns(v):
    v = np.asarray(v, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def _squeeze(out, v, w):
    if np.ndim(v) == 1 and np.ndim(w) == 1:
        return out[0, 0]
    return out


def _check_pole(values, z):
    z = complex(z)
    if z.imag == 0:
        gap = np.min(np.abs(values - z.real)) if values.size else np.inf
        if gap <= 1e-14 * max(1.0, abs(z.real)):
            raise PoleError(f"z = {z.real} coincides with an eigenvalue")


def resolvent_form(eig: Eigensystem, z, v, w):
    """``<v, (H - z)**-1 w>`` by eigen-expansion over a complete eigensystem.

    ``v`` and ``w`` may be vectors or matrices of columns; in the latter case
    the matrix ``v^T G w`` is returned.
    """
    if not eig.complete or eig.vectors is None:
        raise DomainError("the eigen-expansion needs the complete eigensystem")
    _check_pole(eig.values, z)
    a = eig.vectors.T @ _as_columns(v)
    b = eig.vectors.T @ _as_columns(w)
    out = (a / (eig.values - complex(z))[:, None]).T @ b
    return _squeeze(out, v, w)


def resolvent_form_direct(H, z, v, w):
    """``<v, (H - z)**-1 w>`` by a direct linear solve."""
    H = np.asarray(H, dtype=float)
    z = complex(z)
    A = H - z * np.eye(H.shape[0])
    if z.imag == 0:
        A = A.real
    try:
        x = scipy.linalg.solve(A, _as_columns(w), assume_a="sym")
    except scipy.linalg.LinAlgError as exc:
        raise PoleError(f"H - z is singular at z = {z}") from exc
    out = _as_columns(v).T @ x
    return _squeeze(out, v, w)


def w_matrix(eig: Eigensystem, V, z, phi):
    """``W(z) = V^T F(z) V`` with ``F(z) = phi**0.5 (1 + z G(z))``."""
    V = _as_columns(V)
    if V.shape[1] == 0:
        return np.zeros((0, 0))
    gram = V.T @ V
    if np.max(np.abs(gram - np.eye(V.shape[1]))) > 1e-10:
        raise DomainError("V is not an isometry")
    z = complex(z)
    W = math.sqrt(phi) * (gram + z * resolvent_form(eig, z, V, V))
    return W.real if z.imag == 0 else W


def _d_inverse(d):
    d = np.asarray(d, dtype=float).reshape(-1)
    if np.any(d == 0):
        raise DomainError("D must be invertible")
    return np.diag(1.0 / d)


@dataclass(frozen=True)
class MasterRoots:
    """Roots of ``det(D^{-1} + W(x)) = 0`` in an interval, sorted nonincreasing.

    ``multiplicity[k]`` counts how many branches share the root ``roots[k]``
    (within ``merge_tol``), so a double root appears once with multiplicity 2.
    """

    roots: np.ndarray
    multiplicity: tuple
    interval: tuple

    def expanded(self):
        return np.repeat(self.roots, self.multiplicity)


def master_equation_roots(eig: Eigensystem, V, d, phi, interval=None, xtol=1e-13, merge_tol=1e-9):
    """All solutions ``x`` of ``det(D^{-1} + W(x)) = 0`` in ``interval``.

    For real ``x`` off the spectrum of ``H`` the derivative of ``W`` is
    ``phi**0.5 V^T G H G V``, which is positive semidefinite. Each ordered
    eigenvalue of ``D^{-1} + W(x)`` is therefore nondecreasing on the
    interval, crosses zero at most once, and is located by bracketing. Roots
    of multiplicity ``k`` show up as ``k`` branches vanishing together.

    The default interval is ``(lambda_1, ||Sigma|| lambda_1]`` slightly
    shrunk, which contains every eigenvalue of ``Q`` above the spectrum of
    ``H``.
    """
    V = _as_columns(V)
    d = np.asarray(d, dtype=float).reshape(-1)
    if V.shape[1] != d.size:
        raise DomainError("one direction per spike strength is required")
    if d.size == 0:
        return MasterRoots(np.zeros(0), (), tuple(interval or ()))
    lam = eig.values
    if interval is None:
        top = lam[0]
        sigma_max = max(1.0, float(np.max(1.0 + math.sqrt(phi) * d)))
        interval = (top + 1e-9 * max(1.0, top), sigma_max * top * (1 + 1e-9) + 1e-9)
    lo, hi = map(float, interval)
    if not lo < hi:
        raise DomainError(f"empty search interval {interval}")
    if np.any((lam >= lo) & (lam <= hi)):
        raise DomainError("search interval intersects the spectrum of H")
    D_inv = _d_inverse(d)

    def branch(x, k):
        return np.linalg.eigvalsh(D_inv + w_matrix(eig, V, x, phi))[k]

    found = []
    for k in range(d.size):
        f_lo, f_hi = branch(lo, k), branch(hi, k)
        if f_lo > 0 or f_hi < 0:
            if f_hi < 0:
                warnings.warn(f"branch {k} is still negative at the interval end {hi}; roots may lie beyond it")
            continue
        if f_lo == 0:
            found.append(lo)
            continue
        found.append(optimize.brentq(branch, lo, hi, args=(k,), xtol=xtol, rtol=4 * np.finfo(float).eps))
    roots = np.sort(np.asarray(found))[::-1]
    merged, mult = [], []
    for x in roots:
        if merged and abs(merged[-1] - x) <= merge_tol * max(1.0, abs(x)):
            mult[-1] += 1
        else:
            merged.append(x)
            mult.append(1)
    return MasterRoots(np.asarray(merged), tuple(mult), (lo, hi))


def pert2_residual(H, Q, sqrt_sigma, V, d, phi, z, v, w):
    """Largest deviation between the two sides of the low-rank resolvent identity.

    Left: ``<v, Sigma^(1/2) (Q - z)^-1 Sigma^(1/2) w>``. Right:
    ``<v, [G - G V (phi^(1/2) z / (D^-1 + W)) V^T G] w>``. Both are computed by
    direct solves; ``v`` and ``w`` may be matrices of columns.
    """
    z = complex(z)
    V = _as_columns(V)
    v, w = _as_columns(v), _as_columns(w)
    lhs = resolvent_form_direct(Q, z, sqrt_sigma @ v, sqrt_sigma @ w)
    rhs = resolvent_form_direct(H, z, v, w)
    if V.shape[1]:
        Gv = resolvent_form_direct(H, z, V, v)  # V^T G v
        Gw = resolvent_form_direct(H, z, V, w)
        W = math.sqrt(phi) * (V.T @ V + z * resolvent_form_direct(H, z, V, V))
        core = _d_inverse(d) + W
        try:
            mid = np.linalg.solve(core, Gw)
        except np.linalg.LinAlgError as exc:
            raise PoleError(f"D^-1 + W(z) is singular at z = {z}") from exc
        rhs = rhs - math.sqrt(phi) * z * (Gv.T @ mid)
    return float(np.max(np.abs(np.atleast_2d(lhs) - np.atleast_2d(rhs))))


def pert3_form(eig: Eigensystem, V, d, phi, z):
    """``V^T (Q - z)^-1 V`` through ``W(z)`` alone."""
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size == 0:
        return np.zeros((0, 0))
    root_arg = 1.0 + math.sqrt(phi) * d
    if np.any(root_arg <= 1e-12):
        raise DomainError("1 + phi^(1/2) d must be positive for every spike")
    z = complex(z)
    side = np.diag(np.sqrt(root_arg) / d)
    core = _d_inverse(d) + w_matrix(eig, V, z, phi)
    try:
        inner = np.linalg.solve(core, side)
    except np.linalg.LinAlgError as exc:
        raise PoleError(f"D^-1 + W(z) is singular at z = {z}") from exc
    return (_d_inverse(d) - side @ inner) / (math.sqrt(phi) * z)


def contour_projection(eig: Eigensystem, V, d, phi, centre, radius, nodes=256):
    """``V^T P V`` for the spectral projection ``P`` of ``Q`` inside a circle.

    Uses ``P = -(2 pi i)^-1 \\oint (Q - z)^-1 dz`` with the trapezoidal rule,
    which converges geometrically for a circle that keeps away from the
    spectra of ``H`` and ``Q``.
    """
    t = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    zs = centre + radius * np.exp(1j * t)
    acc = 0.0
    for z in zs:
        # dz = i (z - centre) dt
        acc = acc + pert3_form(eig, V, d, phi, z) * (1j * (z - centre))
    P = -(acc * (2 * np.pi / nodes)) / (2j * np.pi)
    return P.real


def spectral_projection_form(eig: Eigensystem, indices, v, w):
    """``<v, P_A w>`` for ``P_A`` the projection on eigenvectors with 1-based indices ``A``."""
    idx = np.asarray(list(indices), dtype=int)
    if idx.size == 0:
        return 0.0 if (np.ndim(v) == 1 and np.ndim(w) == 1) else np.zeros((_as_columns(v).shape[1], _as_columns(w).shape[1]))
    if idx.min() < 1 or idx.max() > len(eig):
        raise DomainError(f"indices must lie in [1, {len(eig)}]")
    if eig.vectors is None:
        raise DomainError("eigenvectors were not computed")
    xi = eig.vectors[:, idx - 1]
    out = (xi.T @ _as_columns(v)).T @ (xi.T @ _as_columns(w))
    return float(out[0, 0]) if (np.ndim(v) == 1 and np.ndim(w) == 1) else out


@dataclass(frozen=True)
class InterlacingReport:
    holds: bool
    worst_violation: float
    first_violation: int | None  # 1-based index into mu


def interlacing_check(mu, lam, sign=None, rank=None, slack=None):
    """Check eigenvalue interlacing between ``Q`` and ``H``.

    With ``sign=+1`` (one positive spike) the chain
    ``mu_1 >= lam_1 >= mu_2 >= ... >= lam_M`` is checked, with ``sign=-1``
    the mirrored chain ``lam_1 >= mu_1 >= lam_2 >= ...``. With ``rank=r`` the
    weaker ``lam_{i+r} <= mu_i <= lam_{i-r}`` is checked instead. ``slack``
    defaults to ``1e-10 * max(1, lam_1)``.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if mu.shape != lam.shape:
        raise DomainError("mu and lam must have the same length")
    if (sign is None) == (rank is None):
        raise ConfigError("give exactly one of sign (rank-one chain) or rank (general form)")
    if slack is None:
        slack = 1e-10 * max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    n = mu.size
    if sign is not None:
        if sign > 0:
            upper = np.concatenate([[np.inf], lam[:-1]])  # mu_i <= lam_{i-1}
            lower = lam  # mu_i >= lam_i
        else:
            upper = lam
            lower = np.concatenate([lam[1:], [-np.inf]])
    else:
        r = int(rank)
        upper = np.array([lam[i - r] if i - r >= 0 else np.inf for i in range(n)])
        lower = np.array([lam[i + r] if i + r < n else -np.inf for i in range(n)])
    excess = np.maximum(mu - upper, lower - mu)
    bad = np.flatnonzero(excess > slack)
    worst = float(np.max(excess, initial=-np.inf))
    return InterlacingReport(bad.size == 0, max(worst, 0.0), int(bad[0]) + 1 if bad.size else None)
