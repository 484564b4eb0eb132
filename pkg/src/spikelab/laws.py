"""Deterministic spectral laws of the rescaled sample covariance matrix.

All functions are pure and vectorise over numpy arrays where that is natural.
The normalisation is the one in which the bulk spectrum has diameter 4:
the edges are ``gamma_pm = phi**0.5 + phi**-0.5 +- 2`` with ``phi = M / N``.

Conventions
-----------
* ``m(z, phi)`` is the Stieltjes transform of ``rho_phi`` (the law of the
  nonzero eigenvalues of the N x N Gram matrix, with an atom ``(1 - phi)_+``
  at zero); the M x M matrix follows ``rho_{1/phi}``.
* ``w(z, phi) = phi**0.5 * (1 + z * m(z, 1/phi))`` is the Stieltjes transform
  of a semicircle centred at ``phi**0.5 + phi**-0.5``; ``w`` is symmetric
  under ``phi -> 1/phi``.
* Eigenvalue indices ``a`` and ``i`` appearing in formulas are 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NoOutlierError, NumericalError

__all__ = [
    "Aspect",
    "DomainGrid",
    "SpectralPoint",
    "edges",
    "edge_distance",
    "mp_density",
    "mp_atom",
    "mp_density_companion",
    "mp_companion_atom",
    "stieltjes_m",
    "stieltjes_w",
    "classical_location",
    "inverse_classical_location",
    "cone_mass",
    "fluctuation_scale",
    "classical_eigenvalue_locations",
    "typical_edge_distance",
    "typical_spacing",
    "edge_distance_and_spacing",
    "domain_grid",
    "in_domain",
    "isotropic_error_scale",
    "outside_error_scale",
    "control_parameter",
]


def _check_phi(phi):
    if not phi > 0 or not math.isfinite(phi):
        raise DomainError(f"phi must be positive and finite, got {phi!r}")


@dataclass(frozen=True)
class Aspect:
    """Dimensions of the model: ``M`` variables observed in ``N`` samples.

    ``growth`` is the constant C in ``N**(1/C) <= M <= N**C``.
    """

    M: int
    N: int
    growth: float = 4.0

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N or self.M < 1 or self.N < 1:
            raise DomainError(f"M and N must be positive integers, got {self.M}, {self.N}")
        lo, hi = self.N ** (1.0 / self.growth), self.N ** self.growth
        if not lo - 1e-9 <= self.M <= hi + 1e-9:
            raise DomainError(
                f"M={self.M} outside [N^(1/C), N^C] = [{lo:.3g}, {hi:.3g}] for C={self.growth}"
            )

    @property
    def phi(self) -> float:
        return self.M / self.N

    @property
    def K(self) -> int:
        return min(self.M, self.N)

    @property
    def gamma_minus(self) -> float:
        return edges(self.phi)[0]

    @property
    def gamma_plus(self) -> float:
        return edges(self.phi)[1]


def edges(phi):
    """Return ``(gamma_minus, gamma_plus)``, the edges of the bulk spectrum."""
    _check_phi(phi)
    centre = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    # centre - 2 = (phi^{1/4} - phi^{-1/4})^2, computed without cancellation
    lower = (phi**0.25 - phi**-0.25) ** 2
    return lower, centre + 2.0


def edge_distance(E, phi):
    """Distance ``kappa`` from ``E`` to the nearest spectral edge."""
    lo, hi = edges(phi)
    E = np.asarray(E, dtype=float)
    return np.minimum(np.abs(hi - E), np.abs(lo - E))


def _semicircle_root(x, phi):
    lo, hi = edges(phi)
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip((x - lo) * (hi - x), 0.0, None))


def mp_density(x, phi):
    """Absolutely continuous part of ``rho_phi`` (the atom is :func:`mp_atom`)."""
    _check_phi(phi)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, math.sqrt(phi) / (2 * np.pi) * _semicircle_root(x, phi) / x, 0.0)
    return out[()] if out.ndim == 0 else out


def mp_atom(phi):
    """Mass of ``rho_phi`` at zero."""
    _check_phi(phi)
    return max(1.0 - phi, 0.0)


def mp_density_companion(x, phi):
    """Bulk density of the eigenvalues of the rescaled M x M matrix."""
    return mp_density(x, 1.0 / phi)


def mp_companion_atom(phi):
    """Fraction of trivial (zero) eigenvalues of the M x M matrix."""
    return mp_atom(1.0 / phi)


def _w_unchecked(z, phi):
    centre = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    u = np.asarray(z, dtype=complex) - centre
    # sqrt(u-2)*sqrt(u+2) has its cut on [-2, 2] and behaves like u at infinity;
    # -2/(u+s) equals (s-u)/2 without the cancellation for large |u|.
    s = np.sqrt(u - 2.0) * np.sqrt(u + 2.0)
    return -2.0 / (u + s)


@dataclass(frozen=True)
class SpectralPoint:
    """A spectral parameter ``z = E + i eta`` together with its edge distance."""

    E: float
    eta: float
    kappa: float

    @classmethod
    def at(cls, z, phi):
        z = complex(z)
        return cls(z.real, z.imag, float(edge_distance(z.real, phi)))

    @property
    def z(self) -> complex:
        return complex(self.E, self.eta)


def _as_complex(z):
    if isinstance(z, SpectralPoint):
        return np.asarray(z.z)
    if isinstance(z, (list, tuple)) and z and isinstance(z[0], SpectralPoint):
        return np.array([p.z for p in z])
    return np.asarray(z, dtype=complex)


def _check_real_axis(z, phi, boundary):
    z = _as_complex(z)
    if np.any(z.imag < 0):
        raise DomainError("spectral parameter must have nonnegative imaginary part")
    lo, hi = edges(phi)
    on_bulk = (z.imag == 0) & (z.real > lo) & (z.real < hi)
    if np.any(on_bulk) and not boundary:
        raise DomainError(
            "real spectral parameter inside the bulk; pass boundary=True for the boundary value"
        )
    return z


def stieltjes_w(z, phi, boundary=False):
    """Stieltjes transform of the semicircle law ``w_phi``.

    For real ``z`` outside ``[gamma_minus, gamma_plus]`` the (real) boundary
    value is returned. Real ``z`` inside the bulk raises unless ``boundary``
    is set, in which case the limit from the upper half-plane is returned.
    """
    _check_phi(phi)
    z = _check_real_axis(z, phi, boundary)
    out = _w_unchecked(z, phi)
    return out[()] if out.ndim == 0 else out


def stieltjes_m(z, phi, boundary=False):
    """Stieltjes transform ``m_phi`` of the Marchenko-Pastur law ``rho_phi``."""
    _check_phi(phi)
    z = _check_real_axis(z, phi, boundary)
    if np.any(z == 0):
        raise DomainError("m_phi is not evaluated at z = 0")
    out = (math.sqrt(phi) * _w_unchecked(z, phi) - 1.0) / z
    return out[()] if out.ndim == 0 else out


def classical_location(d, phi):
    """Classical location ``theta(d)`` of the outlier created by a spike ``d``."""
    _check_phi(phi)
    d = np.asarray(d, dtype=float)
    if np.any(d == 0):
        raise DomainError("theta(d) is undefined at d = 0")
    out = math.sqrt(phi) + 1.0 / math.sqrt(phi) + d + 1.0 / d
    return out[()] if out.ndim == 0 else out


def inverse_classical_location(mu, phi, side="right"):
    """Invert :func:`classical_location` on the branch ``|d| > 1``.

    ``side="right"`` needs ``mu > gamma_plus``; ``side="left"`` needs
    ``mu < gamma_minus`` with the solution inside ``(-phi**-0.5, -1)``.
    """
    _check_phi(phi)
    lo, hi = edges(phi)
    t = mu - math.sqrt(phi) - 1.0 / math.sqrt(phi)
    if side == "right":
        if not mu > hi:
            raise NoOutlierError(f"mu={mu} is not to the right of the bulk edge {hi}")
    elif side == "left":
        if not mu < lo:
            raise NoOutlierError(f"mu={mu} is not to the left of the bulk edge {lo}")
    else:
        raise DomainError(f"side must be 'right' or 'left', got {side!r}")
    d = (t + math.copysign(math.sqrt(max(t * t - 4.0, 0.0)), t)) / 2.0
    if side == "left" and not d > -1.0 / math.sqrt(phi):
        raise DomainError(f"no admissible spike in (-phi^-1/2, -1) maps to mu={mu}")
    return d


def cone_mass(d, phi):
    """Squared overlap ``u(d)`` between an outlier eigenvector and its spike, ``d > 1``."""
    _check_phi(phi)
    d = np.asarray(d, dtype=float)
    if np.any(d <= 1):
        raise DomainError("u(d) is defined for d > 1 only")
    sigma = 1.0 + math.sqrt(phi) * d
    out = sigma / (math.sqrt(phi) * classical_location(d, phi)) * (1.0 - d**-2)
    return out[()] if out.ndim == 0 else out


def fluctuation_scale(d, phi):
    """Scale ``Delta(d)`` of outlier fluctuations, in units of ``K**-0.5``.

    At the jump ``d = 2`` the left-hand branch ``(d - 1)**0.5 = 1`` is used.
    """
    _check_phi(phi)
    d = float(d)
    if -1.0 / math.sqrt(phi) < d < -1.0:
        return math.sqrt(phi) * classical_location(d, phi) / (1.0 + (abs(d) - 1.0) ** -0.5)
    if 1.0 < d <= 2.0:
        return math.sqrt(d - 1.0)
    if d > 2.0:
        return 1.0 + d / (1.0 + 1.0 / math.sqrt(phi))
    raise DomainError(f"Delta(d) needs d in (-phi^-1/2, -1) or d > 1, got {d}")


def _bulk_tail(t, phi):
    """Mass of ``rho_phi`` above ``c + 2 cos t``, for ``t`` in ``[0, pi]``."""
    centre = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    pref = 2.0 * math.sqrt(phi) / math.pi
    val, err = integrate.quad(
        lambda s: math.sin(s) ** 2 / (centre + 2.0 * math.cos(s)),
        0.0,
        t,
        epsabs=1e-14,
        epsrel=1e-10,
        limit=200,
    )
    if err > 1e-8 * max(abs(val), 1e-6):
        raise NumericalError("quadrature of the bulk tail did not converge", residual=err)
    return pref * val


def classical_eigenvalue_locations(aspect, indices):
    """Classical locations ``gamma_i``: ``rho_phi([gamma_i, inf)) = i / N``.

    ``indices`` are 1-based and must lie in ``[1, K]``. The result is a float
    array, nonincreasing in ``i``.
    """
    idx = np.atleast_1d(np.asarray(indices))
    if idx.size and (idx.min() < 1 or idx.max() > aspect.K):
        raise DomainError(f"indices must lie in [1, {aspect.K}]")
    phi, N = aspect.phi, aspect.N
    centre = math.sqrt(phi) + 1.0 / math.sqrt(phi)
    total = _bulk_tail(math.pi, phi)
    out = np.empty(idx.shape, dtype=float)
    for k, i in enumerate(idx.ravel()):
        target = min(i / N, total)
        if target >= total * (1 - 1e-15):
            out.flat[k] = edges(phi)[0]
            continue
        t = optimize.brentq(lambda s: _bulk_tail(s, phi) - target, 0.0, math.pi, xtol=1e-15, rtol=1e-15)
        resid = abs(_bulk_tail(t, phi) - target)
        if resid > 1e-9:
            raise NumericalError(f"root bracketing for gamma_{i} failed", residual=resid)
        out.flat[k] = centre + 2.0 * math.cos(t)
    return out


def typical_edge_distance(a, K):
    """``kappa_a = K**(-2/3) * min(a, K + 1 - a)**(2/3)`` for ``1 <= a <= K``."""
    if not 1 <= a <= K:
        raise DomainError(f"index a={a} outside [1, {K}]")
    return K ** (-2.0 / 3.0) * min(a, K + 1 - a) ** (2.0 / 3.0)


def typical_spacing(a, K):
    """``Delta_a = K**(-2/3) * a**(-1/3)``, defined for ``1 <= a <= K/2``."""
    if not 1 <= a <= K / 2:
        raise DomainError(f"Delta_a is defined for 1 <= a <= K/2, got a={a}, K={K}")
    return K ** (-2.0 / 3.0) * a ** (-1.0 / 3.0)


def edge_distance_and_spacing(a, K):
    return typical_edge_distance(a, K), typical_spacing(a, K)


@dataclass(frozen=True)
class DomainGrid:
    points: np.ndarray
    regime: str
    omega: float

    @property
    def E(self):
        return self.points.real

    @property
    def eta(self):
        return self.points.imag


def in_domain(z, aspect, regime, omega=0.1):
    """Boolean mask of the spectral parameters lying in the named domain.

    ``regime`` is ``"S"`` (bulk and edges, ``eta >= K**(-1+omega)``),
    ``"S-tilde"`` (outside the bulk, any small ``eta > 0``) or ``"S-hat"``
    (outside the bulk, unbounded).
    """
    z = _as_complex(z)
    K = aspect.K
    lo, hi = aspect.gamma_minus, aspect.gamma_plus
    kappa = edge_distance(z.real, aspect.phi)
    eta = z.imag
    outside = (z.real < lo) | (z.real > hi)
    if regime == "S":
        return (kappa <= 1 / omega) & (eta >= K ** (-1 + omega)) & (eta <= 1 / omega) & (np.abs(z) >= omega)
    if regime == "S-tilde":
        return (
            outside
            & (kappa >= K ** (-2.0 / 3.0 + omega))
            & (kappa <= 1 / omega)
            & (np.abs(z) >= omega)
            & (eta > 0)
            & (eta <= 1 / omega)
        )
    if regime == "S-hat":
        return outside & (kappa >= K ** (-2.0 / 3.0 + omega)) & (eta > 0)
    raise DomainError(f"unknown regime {regime!r}")


def _even_subset(points, n):
    if len(points) <= n:
        return points
    take = np.unique(np.round(np.linspace(0, len(points) - 1, n)).astype(int))
    return points[take]


def domain_grid(aspect, regime="S", n_points=50, omega=0.1):
    """A deterministic grid of ``n_points`` spectral parameters inside ``regime``."""
    K = aspect.K
    lo, hi = aspect.gamma_minus, aspect.gamma_plus
    side = int(math.ceil(math.sqrt(4 * n_points)))
    if regime == "S":
        E = np.linspace(lo - 0.25, hi + 0.25, side)
        eta = np.geomspace(K ** (-1 + omega), 1.0, side)
    elif regime in ("S-tilde", "S-hat"):
        kap = np.geomspace(K ** (-2.0 / 3.0 + omega), 2.0 if regime == "S-tilde" else 8.0, side)
        E = np.concatenate([hi + kap, lo - kap])
        eta = np.geomspace(K ** -3.0, 1.0, side)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    z = (E[:, None] + 1j * eta[None, :]).ravel()
    z = z[in_domain(z, aspect, regime, omega)]
    return DomainGrid(points=_even_subset(z, n_points), regime=regime, omega=omega)


def isotropic_error_scale(z, aspect):
    """Right-hand side of the isotropic local law for ``<v, G w>`` at ``z``."""
    z = _as_complex(z)
    m_dual = stieltjes_m(z, 1.0 / aspect.phi)
    return np.sqrt(m_dual.imag / (aspect.M * z.imag)) + 1.0 / (aspect.M * z.imag)


def outside_error_scale(z, aspect):
    """Isotropic error scale away from the bulk: ``(kappa+eta)**(-1/4) K**(-1/2) / (1+phi)``."""
    z = _as_complex(z)
    kappa = edge_distance(z.real, aspect.phi)
    return (kappa + z.imag) ** -0.25 * aspect.K**-0.5 / (1.0 + aspect.phi)


def control_parameter(z, aspect):
    """``Psi(z) = sqrt(Im m_phi / (N eta)) + 1 / (N eta)``."""
    z = _as_complex(z)
    m = stieltjes_m(z, aspect.phi)
    return np.sqrt(m.imag / (aspect.N * z.imag)) + 1.0 / (aspect.N * z.imag)
