"""Experiment configuration, orchestration and output files.

A configuration is a JSON object with a ``schema_version``; unknown fields
are rejected with their dotted path. Every output byte is a function of the
configuration and the master seed.

Outputs of one run, under the output directory::

    report.json        aggregated reports (sorted keys, 2-space indent)
    tables/*.csv       per-trial rows: check, trial, index, statistic, value
"""
from __future__ import annotations

import csv
import inspect
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import inference, laws
from .checks import SINGLE_ENSEMBLE_CHECKS, DominationProbe, check_outlier_scaling, check_universality_pair
from .checks.common import SpectralTask, run_spectral
from .checks.report import to_jsonable, write_rows
from .ensemble import Ensemble, EntryLaw, dump_draw, spike_spec
from .errors import ConfigError, DomainError
from .montecarlo import DryRunStop, default_workers, dry_run
from .spectral import decompose

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "SweepConfig",
    "parse_config",
    "load_config",
    "build_ensemble",
    "validate",
    "run_check",
    "run_experiment",
    "run_universality",
    "run_sweep",
    "simulate",
    "tabulate_laws",
    "infer",
    "write_report",
    "CHECK_NAMES",
]

SCHEMA_VERSION = 1
PAIR_CHECKS = {"outlier_scaling": check_outlier_scaling}
CHECK_NAMES = tuple(SINGLE_ENSEMBLE_CHECKS) + tuple(PAIR_CHECKS)
# arguments the harness supplies itself
_RESERVED = {"ensemble", "small", "large", "first", "second", "workers", "stream", "name"}


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "d"
    values: tuple = ()
    statistic: str = "detachment"
    spike: int = 1
    gap_factor: float = 10.0
    trials: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 200
    N: int = 200
    extra_columns: int = 0
    growth: float = 4.0
    strengths: tuple = ()
    directions: str = "coordinate"
    spike_seed: int = 0
    max_rank: int = 8
    law: str = "gaussian"
    rotation_seed: int = 0
    seed: int = 0
    trials: int = 100
    threads: int | None = None
    out: str = "out"
    checks: dict = field(default_factory=dict)
    sweep: SweepConfig | None = None
    universality: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    infer: dict = field(default_factory=dict)
    laws: dict = field(default_factory=dict)

    @property
    def workers(self):
        return default_workers() if self.threads is None else int(self.threads)


def _take(obj, path, spec):
    """Pull typed fields out of ``obj``; ``spec`` maps key -> (types, default)."""
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    unknown = sorted(set(obj) - set(spec))
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}", f"{path}.{unknown[0]}" if path else unknown[0])
    out = {}
    for key, (types, default) in spec.items():
        where = f"{path}.{key}" if path else key
        if key not in obj:
            out[key] = default
            continue
        val = obj[key]
        if isinstance(val, bool) and bool not in types:
            raise ConfigError(f"expected {types[0].__name__}, got a boolean", where)
        if val is None and type(None) in types:
            out[key] = None
        elif isinstance(val, int) and float in types and int not in types:
            out[key] = float(val)
        elif not isinstance(val, types):
            raise ConfigError(f"expected {'/'.join(t.__name__ for t in types)}, got {type(val).__name__}", where)
        else:
            out[key] = val
    return out


def _positive_int(value, path, minimum=1):
    if not isinstance(value, int) or value < minimum:
        raise ConfigError(f"must be an integer >= {minimum}", path)
    return value


def parse_config(obj):
    """Validate a decoded JSON object and return an :class:`ExperimentConfig`."""
    top = _take(obj, "", {
        "schema_version": ((int,), None),
        "aspect": ((dict,), {}),
        "spikes": ((dict,), {}),
        "entry_law": ((str,), "gaussian"),
        "rotation_seed": ((int,), 0),
        "seed": ((int,), 0),
        "trials": ((int,), 100),
        "threads": ((int, type(None)), None),
        "out": ((str,), "out"),
        "checks": ((dict,), {}),
        "sweep": ((dict, type(None)), None),
        "universality": ((dict,), {}),
        "simulate": ((dict,), {}),
        "infer": ((dict,), {}),
        "laws": ((dict,), {}),
    })
    if top["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}", "schema_version")
    aspect = _take(top["aspect"], "aspect", {
        "M": ((int,), 200), "N": ((int,), 200), "extra_columns": ((int,), 0), "growth": ((float,), 4.0),
    })
    spikes = _take(top["spikes"], "spikes", {
        "strengths": ((list,), []), "directions": ((str,), "coordinate"), "seed": ((int,), 0), "max_rank": ((int,), 8),
    })
    for k, v in enumerate(spikes["strengths"]):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("spike strengths must be numbers", f"spikes.strengths[{k}]")
    _positive_int(aspect["M"], "aspect.M", 2)
    _positive_int(aspect["N"], "aspect.N", 2)
    _positive_int(top["trials"], "trials")
    if top["threads"] is not None:
        _positive_int(top["threads"], "threads")
    if top["seed"] < 0 or top["seed"] >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    sweep = None
    if top["sweep"] is not None:
        sw = _take(top["sweep"], "sweep", {
            "axis": ((str,), "d"), "values": ((list,), []), "statistic": ((str,), "detachment"),
            "spike": ((int,), 1), "gap_factor": ((float,), 10.0), "trials": ((int, type(None)), None),
        })
        if sw["axis"] not in ("d", "phi"):
            raise ConfigError("axis must be 'd' or 'phi'", "sweep.axis")
        if not sw["values"]:
            raise ConfigError("the sweep grid is empty", "sweep.values")
        sw["values"] = tuple(float(v) for v in sw["values"])
        sweep = SweepConfig(**sw)
    for name, params in top["checks"].items():
        if name not in CHECK_NAMES:
            raise ConfigError(f"unknown check {name!r}", f"checks.{name}")
        if not isinstance(params, dict):
            raise ConfigError("check parameters must be an object", f"checks.{name}")
    cfg = ExperimentConfig(
        M=aspect["M"], N=aspect["N"], extra_columns=aspect["extra_columns"], growth=aspect["growth"],
        strengths=tuple(float(v) for v in spikes["strengths"]), directions=spikes["directions"],
        spike_seed=spikes["seed"], max_rank=spikes["max_rank"], law=top["entry_law"],
        rotation_seed=top["rotation_seed"], seed=top["seed"], trials=top["trials"], threads=top["threads"],
        out=top["out"], checks=top["checks"], sweep=sweep, universality=top["universality"],
        simulate=top["simulate"], infer=top["infer"], laws=top["laws"],
    )
    build_ensemble(cfg)  # dimension, spike and law validation
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    return parse_config(obj)


def build_ensemble(cfg: ExperimentConfig, **overrides):
    """Ensemble for ``cfg``; ``overrides`` replace config fields (e.g. ``N`` or ``strengths``)."""
    if overrides:
        cfg = replace(cfg, **overrides)
    try:
        aspect = laws.Aspect(cfg.M, cfg.N, cfg.growth)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "aspect") from exc
    try:
        spec = spike_spec(
            cfg.strengths, cfg.M, cfg.directions, seed=cfg.spike_seed, extra_columns=cfg.extra_columns,
            max_rank=cfg.max_rank,
        )
        spec.check(aspect)
    except ConfigError as exc:
        path = exc.path if exc.path and exc.path.startswith("spikes") else "spikes" + (f".{exc.path}" if exc.path else "")
        raise ConfigError(exc.message, path) from exc
    except DomainError as exc:
        raise ConfigError(str(exc), "spikes.strengths") from exc
    try:
        law = EntryLaw(cfg.law)
    except ValueError as exc:
        raise ConfigError(str(exc), "entry_law") from exc
    return Ensemble(aspect, spec, law, cfg.rotation_seed)


def _convert(value, default, path):
    if isinstance(default, DominationProbe):
        p = _take(value, path, {"epsilon": ((float,), default.epsilon), "quantile": ((float,), default.quantile),
                                "constant": ((float,), default.constant)})
        return DominationProbe(**p)
    if isinstance(value, list):
        return tuple(tuple(v) if isinstance(v, list) else v for v in value)
    return value


def check_arguments(cfg: ExperimentConfig, name):
    """Keyword arguments for check ``name``: config defaults plus its ``checks.<name>`` overrides."""
    fn = SINGLE_ENSEMBLE_CHECKS.get(name) or PAIR_CHECKS.get(name)
    if fn is None:
        raise ConfigError(f"unknown check {name!r}; choose from {', '.join(CHECK_NAMES)}", "check")
    params = dict(cfg.checks.get(name, {}))
    sig = inspect.signature(fn).parameters
    kwargs = {"trials": cfg.trials, "seed": cfg.seed}
    for key, value in params.items():
        path = f"checks.{name}.{key}"
        if key in ("small", "large") and name in PAIR_CHECKS:
            continue
        if key not in sig or key in _RESERVED:
            raise ConfigError(f"unknown parameter {key!r}", path)
        default = sig[key].default
        kwargs[key] = _convert(value, default, path)
    if "trials" in kwargs:
        _positive_int(kwargs["trials"], f"checks.{name}.trials")
    return fn, kwargs


def _pair_ensembles(cfg, name):
    params = cfg.checks.get(name, {})
    out = []
    for label in ("small", "large"):
        sizes = _take(params.get(label, {}), f"checks.{name}.{label}", {"M": ((int,), None), "N": ((int,), None)})
        if sizes["M"] is None or sizes["N"] is None:
            raise ConfigError("needs both M and N", f"checks.{name}.{label}")
        out.append(build_ensemble(cfg, M=sizes["M"], N=sizes["N"]))
    return out


def run_check(cfg: ExperimentConfig, name, workers=None):
    """Run one named check with its configured parameters."""
    fn, kwargs = check_arguments(cfg, name)
    workers = cfg.workers if workers is None else workers
    if name in PAIR_CHECKS:
        small, large = _pair_ensembles(cfg, name)
        return fn(small, large, workers=workers, **kwargs)
    return fn(build_ensemble(cfg), workers=workers, **kwargs)


def _selected(cfg, names):
    if names in (None, "all", ("all",), ["all"]):
        names = list(cfg.checks)
        if not names:
            raise ConfigError("'all' runs the checks listed in the config, and none are listed", "checks")
    elif isinstance(names, str):
        names = [names]
    return list(names)


def validate(cfg: ExperimentConfig, names=None):
    """Evaluate every hypothesis gate of the selected checks without sampling."""
    names = _selected(cfg, names)
    for name in names:
        try:
            with dry_run():
                run_check(cfg, name, workers=1)
        except DryRunStop:
            pass
        except ConfigError as exc:
            if exc.path and (exc.path.startswith("checks.") or exc.path.split(".")[0] in ("spikes", "aspect", "entry_law")):
                raise
            if exc.path and exc.path.split(".")[0] == name:
                path = f"checks.{exc.path}"
            else:
                path = f"checks.{name}" + (f".{exc.path}" if exc.path else "")
            raise ConfigError(exc.message, path) from exc
    return names


def write_report(payload, out_dir, tables):
    """Write ``report.json`` and ``tables/<name>.csv``; returns the report path."""
    out_dir = Path(out_dir)
    (out_dir / "tables").mkdir(parents=True, exist_ok=True)
    for name, rows in tables.items():
        with open(out_dir / "tables" / f"{name}.csv", "w", newline="") as fh:
            write_rows(fh, rows)
    path = out_dir / "report.json"
    text = json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=True)
    path.write_text(text + "\n")
    return path


def _config_echo(cfg):
    return {
        "M": cfg.M, "N": cfg.N, "extra_columns": cfg.extra_columns, "strengths": list(cfg.strengths),
        "directions": cfg.directions, "entry_law": cfg.law, "rotation_seed": cfg.rotation_seed, "seed": cfg.seed,
        "trials": cfg.trials,
    }


def _aggregate(cfg, reports, kind):
    for r in reports:
        r.table = f"tables/{r.name}.csv"
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": _config_echo(cfg),
        "pass": all(r.passed for r in reports),
        "reports": [r.as_dict() for r in reports],
    }


def run_experiment(cfg: ExperimentConfig, names=None, out=None, workers=None):
    """Validate, run and write the selected checks. Returns ``(reports, payload)``.

    Worker count never enters the outputs.
    """
    names = validate(cfg, names)
    reports = [run_check(cfg, n, workers) for n in names]
    payload = _aggregate(cfg, reports, "check")
    if out is not None:
        write_report(payload, out, {r.name: r.rows for r in reports})
    return reports, payload


def run_universality(cfg: ExperimentConfig, out=None, workers=None):
    """Compare the configured entry law with ``universality.second_law`` (default rademacher)."""
    params = _take(cfg.universality, "universality", {
        "second_law": ((str,), "rademacher"), "indices": ((list,), [1]), "vector_index": ((int,), 3),
        "trials": ((int, type(None)), None), "threshold": ((float,), 0.1),
    })
    first = build_ensemble(cfg)
    try:
        second = build_ensemble(cfg, law=params["second_law"])
    except ConfigError as exc:
        raise ConfigError(exc.message, "universality.second_law") from exc
    trials = params["trials"] or cfg.trials
    report = check_universality_pair(
        first, second, indices=tuple(params["indices"]), vector_index=params["vector_index"], trials=trials,
        seed=cfg.seed, threshold=params["threshold"], workers=cfg.workers if workers is None else workers,
    )
    payload = _aggregate(cfg, [report], "universality")
    if out is not None:
        write_report(payload, out, {report.name: report.rows})
    return report, payload


def _fmt(v):
    return "%.17g" % v if isinstance(v, float) else str(v)


SWEEP_HEADER = ("axis", "axis_value", "statistic", "value", "stderr", "reference")


def _sweep_point(cfg, sw, value, workers):
    if sw.axis == "d":
        strengths = list(cfg.strengths) or [0.0]
        if not 1 <= sw.spike <= len(strengths):
            raise ConfigError(f"spike {sw.spike} does not exist", "sweep.spike")
        strengths[sw.spike - 1] = value
        point = replace(cfg, strengths=tuple(sorted(strengths, reverse=True)))
    else:
        if value <= 0:
            raise ConfigError("phi must be positive", "sweep.values")
        point = replace(cfg, N=max(2, int(round(cfg.M / value))))
    if sw.trials is not None:
        point = replace(point, trials=sw.trials)
    ens = build_ensemble(point)
    aspect, T = ens.aspect, point.trials
    if sw.statistic == "detachment":
        cut = inference.outlier_threshold(aspect, sw.gap_factor)
        mu = run_spectral(SpectralTask(ens, top=1), T, point.seed, 0, workers)["mu"][:, 0]
        frac = float(np.mean(mu > cut))
        return frac, math.sqrt(frac * (1 - frac) / T), math.nan
    if sw.statistic == "cone_mass":
        if sw.axis != "d":
            raise ConfigError("cone_mass sweeps run over d", "sweep.statistic")
        v = ens.spikes.directions[:, [list(ens.spikes.strengths).index(value)]]
        ov = run_spectral(SpectralTask(ens, top=1, directions=v), T, point.seed, 0, workers)["q_overlap"][:, 0, 0] ** 2
        ref = float(laws.cone_mass(value, aspect.phi)) if value > 1 else 0.0
        return float(np.median(ov)), float(ov.std(ddof=1) / math.sqrt(T)) if T > 1 else math.nan, ref
    if sw.statistic in CHECK_NAMES:
        report = run_check(point, sw.statistic, workers)
        return report.statistic, math.nan, math.nan
    raise ConfigError(f"unknown sweep statistic {sw.statistic!r}", "sweep.statistic")


def run_sweep(cfg: ExperimentConfig, out=None, workers=None):
    """One aggregated row per grid value. Returns the rows (header excluded).

    Every grid point uses the same master seed and stream, so the noise is
    shared across the grid (common random numbers) and trends are not masked
    by independent sampling error.
    """
    sw = cfg.sweep
    if sw is None:
        raise ConfigError("the config has no sweep section", "sweep")
    workers = cfg.workers if workers is None else workers
    rows = []
    for value in sw.values:
        est, se, ref = _sweep_point(cfg, sw, value, workers)
        rows.append((sw.axis, float(value), sw.statistic, float(est), float(se), float(ref)))
    if out is not None:
        out_dir = Path(out)
        (out_dir / "tables").mkdir(parents=True, exist_ok=True)
        with open(out_dir / "tables" / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        payload = {
            "schema_version": SCHEMA_VERSION, "kind": "sweep", "config": _config_echo(cfg), "axis": sw.axis,
            "statistic": sw.statistic, "table": "tables/sweep.csv",
            "rows": [dict(zip(SWEEP_HEADER, r)) for r in rows],
        }
        (out_dir / "report.json").write_text(json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n")
    return rows


def simulate(cfg: ExperimentConfig, out=None, workers=None):
    """Top eigenvalues of ``Q`` and ``H`` and squared spike overlaps for ``cfg.trials`` draws.

    ``simulate.top`` (default 10) sets how many eigenpairs are kept;
    ``simulate.dump`` writes the first draw to ``draws/trial0.spk``.
    """
    params = _take(cfg.simulate, "simulate", {"top": ((int,), 10), "centred": ((bool,), False), "dump": ((bool,), False)})
    ens = build_ensemble(cfg)
    top = min(params["top"], ens.aspect.K)
    V = ens.spikes.directions if ens.spikes.rank else None
    task = SpectralTask(ens, top=top, centred=params["centred"], reference=True, directions=V, vectors=V is not None)
    data = run_spectral(task, cfg.trials, cfg.seed, 0, cfg.workers if workers is None else workers)
    rows = []
    for t in range(cfg.trials):
        for a in range(top):
            rows.append(("simulate", t, a + 1, "mu", float(data["mu"][t, a])))
            rows.append(("simulate", t, a + 1, "lambda", float(data["lam"][t, a])))
            for i in range(ens.spikes.rank):
                rows.append(("simulate", t, a + 1, f"overlap_v{i + 1}", float(data["q_overlap"][t, a, i] ** 2)))
    aspect = ens.aspect
    theory = [
        {"spike": i + 1, "d": float(d), "theta": float(laws.classical_location(d, aspect.phi)),
         "cone_mass": float(laws.cone_mass(d, aspect.phi)) if d > 1 else None}
        for i, d in enumerate(ens.spikes.strengths) if abs(d) > 1
    ]
    payload = {
        "schema_version": SCHEMA_VERSION, "kind": "simulate", "config": _config_echo(cfg),
        "edges": list(laws.edges(aspect.phi)), "mean_mu": data["mu"].mean(axis=0), "mean_lambda": data["lam"].mean(axis=0),
        "theory": theory, "table": "tables/simulate.csv",
    }
    if out is not None:
        write_report(payload, out, {"simulate": rows})
        if params["dump"]:
            (Path(out) / "draws").mkdir(parents=True, exist_ok=True)
            dump_draw(ens.draw_trial(cfg.seed, 0, 0), Path(out) / "draws" / "trial0.spk")
    return payload, rows


def tabulate_laws(cfg: ExperimentConfig, out=None):
    """Tabulate the limiting-law functions for the configured aspect ratio.

    Tables: ``density.csv`` (x, mp_density, companion_density),
    ``spikes.csv`` (d, theta, cone_mass, fluctuation_scale),
    ``stieltjes.csv`` (E, eta, Re/Im of m and w) and ``classical.csv``
    (index, gamma).
    """
    params = _take(cfg.laws, "laws", {"points": ((int,), 200), "eta": ((float,), 1e-3), "indices": ((int,), 50)})
    aspect = laws.Aspect(cfg.M, cfg.N, cfg.growth)
    phi = aspect.phi
    lo, hi = laws.edges(phi)
    n = params["points"]
    x = np.linspace(lo, hi, n)
    density = [("x", "mp_density", "companion_density")] + list(
        zip(x.tolist(), laws.mp_density(x, phi).tolist(), laws.mp_density_companion(x, phi).tolist())
    )
    dmin = -(phi**-0.5) * 0.999
    dgrid = np.concatenate([np.linspace(dmin, -1.0, n // 4, endpoint=False), np.linspace(1.0, 5.0, n - n // 4)[1:]])
    dgrid = dgrid[np.abs(dgrid) > 1]
    # u(d) is only tabulated for right outliers; left rows carry nan
    spikes = [("d", "theta", "cone_mass", "fluctuation_scale")] + [
        (float(d), float(laws.classical_location(d, phi)), float(laws.cone_mass(d, phi)) if d > 1 else math.nan,
         float(laws.fluctuation_scale(d, phi)))
        for d in dgrid
    ]
    E = np.linspace(max(0.0, lo - 1.0), hi + 1.0, n)
    z = E + 1j * params["eta"]
    m, w = laws.stieltjes_m(z, phi), laws.stieltjes_w(z, phi)
    stj = [("E", "eta", "re_m", "im_m", "re_w", "im_w")] + [
        (float(e), params["eta"], float(a.real), float(a.imag), float(b.real), float(b.imag)) for e, a, b in zip(E, m, w)
    ]
    idx = np.unique(np.linspace(1, aspect.K, min(params["indices"], aspect.K)).round().astype(int))
    gam = laws.classical_eigenvalue_locations(aspect, idx)
    classical = [("index", "gamma")] + [(int(i), float(g)) for i, g in zip(idx, gam)]
    tables = {"density": density, "spikes": spikes, "stieltjes": stj, "classical": classical}
    if out is not None:
        tdir = Path(out) / "tables"
        tdir.mkdir(parents=True, exist_ok=True)
        for name, rows in tables.items():
            with open(tdir / f"{name}.csv", "w", newline="") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(rows[0])
                for r in rows[1:]:
                    wr.writerow([_fmt(v) for v in r])
        payload = {
            "schema_version": SCHEMA_VERSION, "kind": "laws", "phi": phi, "M": aspect.M, "N": aspect.N,
            "edges": [lo, hi], "atom": laws.mp_atom(phi), "tables": [f"tables/{k}.csv" for k in tables],
        }
        (Path(out) / "report.json").write_text(json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n")
    return tables


def read_matrix_csv(path):
    """Numeric CSV to a float array; a non-numeric first row is taken as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ConfigError("empty CSV", str(path))
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        return np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"non-numeric entry: {exc}", str(path)) from exc


def data_to_qdot(X):
    """Mean-subtracted sample covariance of an ``M x N`` data matrix with unit-variance noise.

    Entries are rescaled to variance ``(N M)**-1/2`` so the spectrum lives on
    the scale of the limiting law.
    """
    M, N = X.shape
    Xc = X - X.mean(axis=1, keepdims=True)
    Q = (Xc @ Xc.T) * (N / (N - 1.0)) * (N * M) ** -0.5
    return 0.5 * (Q + Q.T)


def infer(cfg: ExperimentConfig, path, kind="spectrum", out=None):
    """Inference report for a spectrum CSV (one eigenvalue per row) or an ``M x N`` data CSV.

    For a spectrum, ``M`` and ``N`` come from the config. ``infer`` options:
    ``gap_factor``, ``support_threshold``, ``factor`` and ``candidate`` (a
    list of ``M`` numbers; runs the subcritical-bias detector).
    """
    params = _take(cfg.infer, "infer", {
        "gap_factor": ((float,), 10.0), "support_threshold": ((float,), 2.0), "factor": ((float,), 5.0),
        "candidate": ((list, type(None)), None), "bias_indices": ((list, type(None)), None),
        "multiple": ((float,), 3.0),
    })
    A = read_matrix_csv(path)
    eig = None
    if kind == "data":
        M, N = A.shape
        aspect = laws.Aspect(M, N, cfg.growth)
        eig = decompose(data_to_qdot(A))
        mu = eig.values
    elif kind == "spectrum":
        aspect = laws.Aspect(cfg.M, cfg.N, cfg.growth)
        mu = np.sort(A.ravel())[::-1]
    else:
        raise ConfigError("kind must be 'spectrum' or 'data'", "kind")
    estimates = inference.estimate_supercritical_spikes(mu, aspect, params["gap_factor"])
    result = {
        "schema_version": SCHEMA_VERSION, "kind": "infer", "input": os.path.basename(str(path)), "input_kind": kind,
        "M": aspect.M, "N": aspect.N, "phi": aspect.phi, "gamma_plus": aspect.gamma_plus,
        "outlier_threshold": inference.outlier_threshold(aspect, params["gap_factor"]), "spikes": [],
    }
    for est in estimates:
        entry = dict(est.__dict__)
        if eig is not None:
            xi = eig.vectors[:, est.index - 1]
            support = inference.recover_support(xi, params["support_threshold"])
            entry["support"] = support.tolist()
            entry["support_note"] = "threshold rule assumes a spike direction roughly constant on its support"
            if support.size:
                entry["detectability"] = inference.detectability_report(
                    est.sigma_hat, int(support.size), aspect, params["factor"]).as_dict()
        result["spikes"].append(entry)
    if params["candidate"] is not None:
        if eig is None:
            raise ConfigError("the bias detector needs eigenvectors; pass a data matrix", "infer.candidate")
        cand = np.asarray(params["candidate"], dtype=float)
        if cand.size != aspect.M or not np.any(cand):
            raise ConfigError(f"candidate must be a nonzero list of {aspect.M} numbers", "infer.candidate")
        idx = params["bias_indices"]
        det = inference.detect_subcritical_bias(
            mu, eig.vectors, cand, aspect, None if idx is None else tuple(idx), params["multiple"],
            params["gap_factor"], count=min(10, aspect.K - len(estimates)))
        result["subcritical_bias"] = dict(det.__dict__, sign_identifiable=False)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "report.json").write_text(json.dumps(to_jsonable(result), sort_keys=True, indent=2) + "\n")
    return result
