"""The mean-subtracted matrix ``Qdot`` obeys the same laws as ``Q``."""
from __future__ import annotations

import numpy as np

from ..ensemble import SampleDraw, trial_rng
from ..errors import ConfigError
from .eigenvectors import check_cone_near_bulk
from .outliers import check_outlier_locations, check_sticking
from .report import CheckReport, DominationProbe

__all__ = ["shift_invariance", "check_qdot_equivalence"]


def shift_invariance(ensemble, seed=0, scale=1.0):
    """Largest change of ``Qdot`` and of ``Q`` when a fixed vector is added to every column of ``X``.

    Returns ``(qdot_change, q_change)``, each relative to ``max(1, max |entry|)``.
    """
    draw = ensemble.draw(trial_rng(seed, 99, 0))
    rng = np.random.default_rng([int(seed), 51])
    shift = scale * rng.standard_normal((draw.X.shape[0], 1)) * (ensemble.aspect.M * ensemble.aspect.N) ** -0.25
    moved = SampleDraw(draw.population, draw.X + shift)
    rel = lambda A, B: float(np.max(np.abs(A - B)) / max(1.0, float(np.max(np.abs(A)))))
    return rel(draw.Qdot, moved.Qdot), rel(draw.Q, moved.Q)


def check_qdot_equivalence(
    ensemble, trials=200, seed=0, include=("outlier_locations", "sticking", "cone_near_bulk"),
    outlier_probe=DominationProbe(constant=10.0), sticking_probe=DominationProbe(constant=10.0),
    sticking_indices=(1,), cone_probe=DominationProbe(constant=10.0), shift_tolerance=1e-10,
    workers=1, stream=0, name="qdot_equivalence",
):
    """Rerun the outlier, sticking and cone checks on ``Qdot`` (against ``Hdot``) and test shift invariance."""
    report = CheckReport(name, trials, seed)
    qdot_change, q_change = shift_invariance(ensemble, seed)
    report.add("shift_invariance", qdot_change, shift_tolerance, q_change=q_change)
    runners = {
        "outlier_locations": lambda: check_outlier_locations(
            ensemble, trials, seed, outlier_probe, centred=True, workers=workers, stream=stream),
        "sticking": lambda: check_sticking(
            ensemble, trials, seed, sticking_probe, sticking_indices, centred=True, workers=workers, stream=stream),
        "cone_near_bulk": lambda: check_cone_near_bulk(
            ensemble, trials=trials, seed=seed, probe=cone_probe, centred=True, workers=workers, stream=stream),
    }
    for key in include:
        if key not in runners:
            raise ConfigError(f"unknown sub-check {key!r}", f"{name}.include")
        if key != "sticking" and ensemble.spikes.rank == 0:
            report.details[f"{key}_skipped"] = "no spikes"
            continue
        sub = runners[key]()
        for c in sub.components:
            report.add(f"{key}.{c.name}", c.statistic, c.bound, lower=c.lower)
        report.rows.extend((name,) + row[1:3] + (f"{key}.{row[3]}",) + row[4:] for row in sub.rows)
        report.details[key] = sub.details
    return report
