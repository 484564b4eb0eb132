"""Check reports and the quantile form of stochastic domination."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

__all__ = [
    "DominationProbe",
    "Component",
    "CheckReport",
    "domination_quantile",
    "TABLE_HEADER",
    "to_jsonable",
]

TABLE_HEADER = ("check", "trial", "index", "statistic", "value")


@dataclass(frozen=True)
class DominationProbe:
    """``X < B`` read as: the ``quantile``-quantile of ``X / B`` is at most ``K**epsilon * constant``."""

    epsilon: float = 0.0
    quantile: float = 0.99
    constant: float = 10.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be nonnegative", "epsilon")
        if not 0.5 < self.quantile < 1:
            raise ConfigError("quantile level must lie in (0.5, 1)", "quantile")
        if not self.constant > 0:
            raise ConfigError("constant must be positive", "constant")

    def bound(self, K):
        return K**self.epsilon * self.constant


def domination_quantile(samples, probe: DominationProbe, K):
    """Return ``(statistic, bound)``: the probe quantile of ``samples`` and ``K**eps * C``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples to take a quantile of")
    return float(np.quantile(x, probe.quantile)), float(probe.bound(K))


@dataclass
class Component:
    """One tested statement. Passes iff ``lower <= statistic <= bound`` (``lower`` optional)."""

    name: str
    statistic: float
    bound: float
    lower: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        s = self.statistic
        if s is None or not math.isfinite(s):
            return False
        return s <= self.bound and (self.lower is None or s >= self.lower)

    @property
    def score(self) -> float:
        """Normalised statistic: at most 1 exactly when the component passes."""
        s = self.statistic
        if s is None or not math.isfinite(s):
            return math.inf
        up = s / self.bound if self.bound > 0 else (0.0 if s <= 0 else math.inf)
        if self.lower is None:
            return max(up, 0.0)
        # for interval statements the statistic is a positive ratio
        low = self.lower / s if s > 0 else math.inf
        return max(up, low)

    def as_dict(self):
        out = {"name": self.name, "statistic": self.statistic, "bound": self.bound, "pass": self.passed}
        if self.lower is not None:
            out["lower"] = self.lower
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class CheckReport:
    """Outcome of one check.

    The headline ``statistic`` is the largest normalised component score and
    ``bound`` is 1, so ``passed`` is exactly ``statistic <= bound``. A report
    without components is vacuous and passes with statistic 0.
    """

    name: str
    trials: int
    seed: int
    components: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    table: str | None = None

    bound = 1.0

    def add(self, name, statistic, bound, lower=None, **detail):
        comp = Component(name, float(statistic), float(bound), None if lower is None else float(lower), detail)
        self.components.append(comp)
        return comp

    def component(self, name):
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def statistic(self) -> float:
        return max((c.score for c in self.components), default=0.0)

    @property
    def passed(self) -> bool:
        return self.statistic <= self.bound

    def record_samples(self, statistic, samples, index=None):
        """Append table rows for ``samples`` shaped ``(trials,)`` or ``(trials, n)``.

        ``index`` labels the second axis (1..n by default; 0 for 1-D input).
        """
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
            index = [0] if index is None else index
        elif index is None:
            index = range(1, samples.shape[1] + 1)
        labels = [int(i) if isinstance(i, (int, np.integer)) else str(i) for i in index]
        for t, row in enumerate(samples.reshape(samples.shape[0], -1).tolist()):
            for i, v in zip(labels, row):
                self.rows.append((self.name, t, i, statistic, v))

    def as_dict(self):
        return {
            "name": self.name,
            "statistic": self.statistic,
            "bound": self.bound,
            "pass": self.passed,
            "trials": self.trials,
            "seed": self.seed,
            "table": self.table,
            "components": [c.as_dict() for c in self.components],
            "details": self.details,
        }

    def to_json(self):
        return json.dumps(to_jsonable(self.as_dict()), sort_keys=True, indent=2, allow_nan=True)

    def write_table(self, path):
        with open(path, "w", newline="") as fh:
            write_rows(fh, self.rows)

    def summary_line(self):
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{c.name}={c.statistic:.4g}/{c.bound:.4g}" + ("" if c.passed else "!") for c in self.components)
        return f"{status} {self.name}: {parts}" if parts else f"{status} {self.name}: vacuous"


def _fmt(v):
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def write_rows(fh, rows, header=True):
    writer = csv.writer(fh, lineterminator="\n")
    if header:
        writer.writerow(TABLE_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def to_jsonable(obj):
    """Convert numpy scalars and arrays (recursively) to plain Python types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
