"""Spiked populations, noise draws and the matrices built from them.

A population is ``Sigma = I + phi**0.5 * sum_i d_i v_i v_i^T`` together with a
factor ``T = Sigma**0.5 (I_M, 0) O`` of shape ``M x (M + r)``. From one noise
matrix ``X`` of shape ``(M + r) x N`` a draw yields

* ``Q = T X X^T T^T``, the sample covariance matrix,
* ``H = Y Y^T`` with ``Y = (I_M, 0) O X``, the uncorrelated reference,
* ``Qdot`` and ``Hdot``, their mean-subtracted versions scaled by ``N/(N-1)``.

Spike and eigenvalue indices in the public API are 1-based.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, DomainError
from .laws import Aspect

__all__ = [
    "SpikeSpec",
    "EntryLaw",
    "Population",
    "SampleDraw",
    "Ensemble",
    "OutlierIndices",
    "spike_spec",
    "build_population",
    "factor_decomposition",
    "sample_noise",
    "assemble_matrices",
    "outlier_index_set",
    "trial_rng",
    "dump_draw",
    "load_draw",
    "DRAW_MAGIC",
]

ORTHONORMAL_TOL = 1e-12
DEFAULT_MAX_RANK = 8


def trial_rng(master_seed, stream, trial):
    """Independent generator for one trial.

    Streams are keyed by ``(master_seed, stream, trial)`` through a
    ``SeedSequence`` spawn key, so a trial's numbers do not depend on which
    worker draws them or in which order.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(trial)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class SpikeSpec:
    """Spike strengths ``d`` (nonincreasing) and orthonormal directions (columns)."""

    strengths: np.ndarray
    directions: np.ndarray
    extra_columns: int = 0
    max_rank: int = DEFAULT_MAX_RANK

    def __post_init__(self):
        d = np.asarray(self.strengths, dtype=float).reshape(-1)
        V = np.asarray(self.directions, dtype=float)
        if V.ndim != 2 or V.shape[1] != d.size:
            raise ConfigError(f"directions must have one column per spike, got shape {V.shape}", "spikes")
        object.__setattr__(self, "strengths", d)
        object.__setattr__(self, "directions", V)
        if d.size > self.max_rank:
            raise ConfigError(f"{d.size} spikes exceed the configured bound {self.max_rank}", "spikes")
        if np.any(np.diff(d) > 0):
            raise ConfigError("spike strengths must be sorted nonincreasing", "spikes")
        if np.any(d == 0):
            raise ConfigError("a spike strength of zero is not a spike", "spikes")
        if d.size and np.max(np.abs(V.T @ V - np.eye(d.size))) > ORTHONORMAL_TOL:
            raise ConfigError("spike directions are not orthonormal", "spikes")
        if self.extra_columns < 0:
            raise ConfigError("extra column count must be nonnegative", "extra_columns")

    @property
    def rank(self) -> int:
        return self.strengths.size

    @property
    def M(self) -> int:
        return self.directions.shape[0]

    def sigmas(self, phi):
        return 1.0 + math.sqrt(phi) * self.strengths

    def check(self, aspect: Aspect):
        if self.M != aspect.M:
            raise ConfigError(f"directions have length {self.M}, expected M={aspect.M}", "spikes")
        floor = -1.0 / math.sqrt(aspect.phi)
        bad = self.strengths[self.strengths <= floor]
        if bad.size:
            raise DomainError(f"spikes {bad.tolist()} make Sigma singular or indefinite (need d > {floor:.6g})")


def _random_orthonormal(rng, rows, cols):
    if cols == 0:
        return np.zeros((rows, 0))
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))


def spike_spec(strengths, M, directions="coordinate", seed=0, extra_columns=0, max_rank=DEFAULT_MAX_RANK):
    """Build a :class:`SpikeSpec`, sorting the strengths.

    ``directions`` is ``"coordinate"`` (``v_i = e_i``), ``"random"`` (a seeded
    Haar-random orthonormal frame) or an explicit ``M x R`` array.
    """
    d = np.asarray(strengths, dtype=float).reshape(-1)
    if isinstance(directions, str):
        if d.size > M:
            raise ConfigError(f"cannot place {d.size} spikes in dimension {M}", "spikes")
        if directions == "coordinate":
            V = np.eye(M, d.size)
        elif directions == "random":
            V = _random_orthonormal(np.random.default_rng(seed), M, d.size)
        else:
            raise ConfigError(f"unknown direction scheme {directions!r}", "spikes.directions")
    else:
        V = np.asarray(directions, dtype=float).reshape(M, d.size)
    order = np.argsort(-d, kind="stable")
    return SpikeSpec(d[order], V[:, order], extra_columns, max_rank)


@dataclass(frozen=True)
class EntryLaw:
    """Law of ``(NM)**(1/4) * X_ij``: mean zero, unit variance."""

    family: str = "gaussian"

    FAMILIES = ("gaussian", "rademacher", "uniform")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ConfigError(f"entry law must be one of {self.FAMILIES}, got {self.family!r}", "entry_law")

    @staticmethod
    def scale(M, N):
        return (N * M) ** -0.25


def sample_noise(law: EntryLaw, shape, rng, M=None, N=None):
    """Noise matrix with i.i.d. entries of variance ``(NM)**-0.5``.

    ``M`` and ``N`` default to ``shape[0]`` and ``shape[1]``; pass them when
    ``shape[0] = M + r`` includes extra columns of ``T``.
    """
    rows, cols = shape
    M = rows if M is None else M
    N = cols if N is None else N
    s = EntryLaw.scale(M, N)
    if law.family == "gaussian":
        return rng.standard_normal((rows, cols)) * s
    if law.family == "rademacher":
        return (2.0 * rng.integers(0, 2, size=(rows, cols)) - 1.0) * s
    return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(rows, cols)) * s


class Population:
    """Population covariance in low-rank form plus the rotation ``O``.

    ``Sigma**0.5 = I + V diag(sqrt(sigma) - 1) V^T`` is applied without forming
    dense matrices; the dense ``sigma``, ``sqrt_sigma``, ``T`` and ``O`` are
    available as properties for small problems and for export.
    """

    def __init__(self, aspect: Aspect, spec: SpikeSpec, rotation=None):
        spec.check(aspect)
        self.aspect = aspect
        self.spec = spec
        self.extra_columns = spec.extra_columns
        size = aspect.M + spec.extra_columns
        if rotation is not None:
            rotation = np.asarray(rotation, dtype=float)
            if rotation.shape != (size, size):
                raise ConfigError(f"rotation must be {size}x{size}, got {rotation.shape}", "rotation")
            if np.max(np.abs(rotation @ rotation.T - np.eye(size))) > 1e-10:
                raise ConfigError("rotation is not orthogonal", "rotation")
        self.rotation = rotation

    @property
    def strengths(self):
        return self.spec.strengths

    @property
    def directions(self):
        return self.spec.directions

    @property
    def sigma_values(self):
        return self.spec.sigmas(self.aspect.phi)

    def apply_sqrt_sigma(self, A):
        V = self.directions
        if V.shape[1] == 0:
            return np.array(A, dtype=float, copy=True)
        gain = np.sqrt(self.sigma_values) - 1.0
        return A + V @ (gain[:, None] * (V.T @ A))

    def reference_rows(self, X):
        """``Y = (I_M, 0) O X``."""
        M = self.aspect.M
        if self.rotation is None:
            return X[:M]
        return self.rotation[:M] @ X

    def apply_factor(self, X):
        """``T X``."""
        return self.apply_sqrt_sigma(self.reference_rows(X))

    @property
    def sigma(self):
        M = self.aspect.M
        V = self.directions
        return np.eye(M) + V @ ((self.sigma_values - 1.0)[:, None] * V.T)

    @property
    def sqrt_sigma(self):
        return self.apply_sqrt_sigma(np.eye(self.aspect.M))

    @property
    def O(self):
        size = self.aspect.M + self.extra_columns
        return np.eye(size) if self.rotation is None else self.rotation

    @property
    def T(self):
        return self.apply_sqrt_sigma(self.O[: self.aspect.M])

    @classmethod
    def from_factor(cls, T, aspect: Aspect, max_rank=DEFAULT_MAX_RANK, tol=1e-10):
        """Recover the spikes and ``O`` of a general factor matrix ``T``."""
        sqrt_sigma, O = factor_decomposition(T)
        sigma_vals, vecs = np.linalg.eigh(sqrt_sigma @ sqrt_sigma)
        spiked = np.abs(sigma_vals - 1.0) > tol
        d = (sigma_vals[spiked] - 1.0) / math.sqrt(aspect.phi)
        spec = spike_spec(d, aspect.M, vecs[:, spiked], extra_columns=T.shape[1] - aspect.M, max_rank=max_rank)
        M = aspect.M
        rotation = None if (T.shape[1] == M and np.allclose(O, np.eye(M), atol=1e-12)) else O
        return cls(aspect, spec, rotation)


def build_population(spec: SpikeSpec, aspect: Aspect, rotation_seed=0, rotation=None):
    """Population for ``spec``; for ``r > 0`` a seeded Haar rotation fixes ``O``."""
    if rotation is None and spec.extra_columns > 0:
        size = aspect.M + spec.extra_columns
        rotation = _random_orthonormal(np.random.default_rng(rotation_seed), size, size)
    return Population(aspect, spec, rotation)


def factor_decomposition(T):
    """Return ``(Sigma**0.5, O)`` with ``T = Sigma**0.5 (I_M, 0) O``.

    With the singular value decomposition ``T = O1 (L, 0) O2`` one has
    ``Sigma**0.5 = O1 L O1^T`` and ``O = diag(O1, I_r) O2``.
    """
    T = np.asarray(T, dtype=float)
    M, cols = T.shape
    if cols < M:
        raise DomainError(f"T must have at least as many columns as rows, got {T.shape}")
    U, s, Wt = np.linalg.svd(T, full_matrices=True)
    if s.min() <= 0:
        raise DomainError("T is rank deficient, so Sigma is not positive definite")
    sqrt_sigma = (U * s) @ U.T
    lift = np.eye(cols)
    lift[:M, :M] = U
    return 0.5 * (sqrt_sigma + sqrt_sigma.T), lift @ Wt


def _gram(A, scale=1.0):
    G = A @ A.T
    G *= scale
    return 0.5 * (G + G.T)


@dataclass(frozen=True, eq=False)
class SampleDraw:
    """One noise draw and the matrices assembled from it (computed lazily)."""

    population: Population
    X: np.ndarray
    seed: tuple = ()

    @property
    def aspect(self):
        return self.population.aspect

    @cached_property
    def Y(self):
        return self.population.reference_rows(self.X)

    @cached_property
    def Q(self):
        return _gram(self.population.apply_factor(self.X))

    @cached_property
    def H(self):
        return _gram(self.Y)

    @cached_property
    def centred_X(self):
        return self.X - self.X.mean(axis=1, keepdims=True)

    @cached_property
    def Qdot(self):
        N = self.aspect.N
        return _gram(self.population.apply_factor(self.centred_X), N / (N - 1.0))

    @cached_property
    def Hdot(self):
        N = self.aspect.N
        return _gram(self.population.reference_rows(self.centred_X), N / (N - 1.0))

    def matrix(self, name):
        if name not in ("X", "Y", "Q", "H", "Qdot", "Hdot"):
            raise KeyError(name)
        return getattr(self, name)


def assemble_matrices(T, O, X, aspect: Aspect, seed=()):
    """Assemble a :class:`SampleDraw` from an explicit factor ``T``, rotation ``O`` and noise ``X``."""
    T = np.asarray(T, dtype=float)
    X = np.asarray(X, dtype=float)
    if T.shape[0] != aspect.M or T.shape[1] != X.shape[0] or X.shape[1] != aspect.N:
        raise ConfigError(f"shape mismatch: T {T.shape}, X {X.shape}, (M, N) = ({aspect.M}, {aspect.N})")
    O = np.asarray(O, dtype=float)
    if O.shape != (T.shape[1], T.shape[1]):
        raise ConfigError(f"O must be square of size {T.shape[1]}, got {O.shape}")
    sqrt_sigma, _ = factor_decomposition(T)
    if np.max(np.abs(sqrt_sigma @ O[: aspect.M] - T)) > 1e-9 * max(1.0, np.abs(T).max()):
        raise ConfigError("T is not of the form Sigma^(1/2) (I_M, 0) O for the given O")
    pop = Population.from_factor(T, aspect, max_rank=aspect.M)
    pop.rotation = None if np.allclose(O, np.eye(O.shape[0]), atol=0) else O
    return SampleDraw(pop, X, tuple(seed))


@dataclass(frozen=True)
class Ensemble:
    """Everything needed to draw samples: dimensions, spikes, entry law, rotation seed."""

    aspect: Aspect
    spikes: SpikeSpec
    law: EntryLaw = field(default_factory=EntryLaw)
    rotation_seed: int = 0

    @cached_property
    def population(self):
        return build_population(self.spikes, self.aspect, self.rotation_seed)

    def draw(self, rng, seed=()):
        rows = self.aspect.M + self.spikes.extra_columns
        X = sample_noise(self.law, (rows, self.aspect.N), rng, self.aspect.M, self.aspect.N)
        return SampleDraw(self.population, X, tuple(seed))

    def draw_trial(self, master_seed, stream, trial):
        return self.draw(trial_rng(master_seed, stream, trial), (master_seed, stream, trial))

    @classmethod
    def simple(cls, M, N, strengths=(), directions="coordinate", law="gaussian", extra_columns=0, seed=0):
        aspect = Aspect(M, N)
        spec = spike_spec(strengths, M, directions, seed=seed, extra_columns=extra_columns)
        return cls(aspect, spec, EntryLaw(law), rotation_seed=seed)


@dataclass(frozen=True)
class OutlierIndices:
    """Outlier spikes (1-based positions in the spike list) and edge separations."""

    indices: tuple
    s_plus: int
    s_minus: int
    alpha_plus: float
    alpha_minus: float


def outlier_index_set(spec: SpikeSpec, K):
    """Spikes with ``|d_i| >= 1 + K**(-1/3)`` and the separations ``alpha_pm``.

    Unspiked directions count as ``d = 0``, so ``alpha_pm <= 1`` whenever
    ``R < M``.
    """
    d = spec.strengths
    threshold = 1.0 + K ** (-1.0 / 3.0)
    idx = tuple(int(i) + 1 for i in np.flatnonzero(np.abs(d) >= threshold))
    s_plus = sum(1 for i in idx if d[i - 1] > 0)
    values = d if spec.rank == spec.M else np.append(d, 0.0)
    alpha_plus = float(np.min(np.abs(values - 1.0))) if values.size else 1.0
    alpha_minus = float(np.min(np.abs(values + 1.0))) if values.size else 1.0
    return OutlierIndices(idx, s_plus, len(idx) - s_plus, alpha_plus, alpha_minus)


# Binary container: magic, uint64 matrix count, then per matrix a 16-byte
# ASCII name (NUL padded), uint64 rows, uint64 cols and rows*cols float64,
# all little-endian and row-major.
DRAW_MAGIC = b"SPKDRAW1"


def dump_draw(draw: SampleDraw, path, matrices=("X", "Q", "H", "Qdot", "Hdot")):
    with open(path, "wb") as fh:
        fh.write(DRAW_MAGIC)
        fh.write(struct.pack("<Q", len(matrices)))
        for name in matrices:
            A = np.ascontiguousarray(draw.matrix(name), dtype="<f8")
            encoded = name.encode("ascii")
            if len(encoded) > 16:
                raise ValueError(f"matrix name too long: {name}")
            fh.write(encoded.ljust(16, b"\0"))
            fh.write(struct.pack("<QQ", *A.shape))
            fh.write(A.tobytes(order="C"))


def load_draw(path):
    """Read a container written by :func:`dump_draw` into a name -> array dict."""
    out = {}
    with open(path, "rb") as fh:
        if fh.read(8) != DRAW_MAGIC:
            raise ValueError(f"{path} is not a sample-draw container")
        (count,) = struct.unpack("<Q", fh.read(8))
        for _ in range(count):
            name = fh.read(16).rstrip(b"\0").decode("ascii")
            rows, cols = struct.unpack("<QQ", fh.read(16))
            data = np.frombuffer(fh.read(8 * rows * cols), dtype="<f8")
            if data.size != rows * cols:
                raise ValueError(f"truncated matrix {name} in {path}")
            out[name] = data.reshape(rows, cols).astype(float)
    return out
