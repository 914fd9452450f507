"""Experiment orchestration: configs, repetitions, aggregation, presets.

A config is a nested key-value tree (YAML on disk). Repetitions use child
seeds derived only from (master_seed, repetition index), so sweep cells are
seed-paired by construction. Traces are recorded per iteration and indexed
both by iteration and by cumulative communication rounds.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from pskip import reference as refmod
from pskip.algorithms import (
    METRIC_NAMES,
    DivergenceError,
    HyperParams,
    local_dsgd_run,
    proxskip_run,
    proxskip_run_dual_form,
    theorem1_chi,
    theorem1_stepsize,
)
from pskip.problems import (
    make_logistic,
    make_quadratic,
    partition,
    parse_libsvm,
    synthetic_blobs,
)
from pskip.topology import metropolis, random_connected, ring

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "Preset",
    "TransientNotReached",
    "ConfigError",
    "preset",
    "run_experiment",
    "steady_state_floor",
    "sweep",
    "SWEEP_AXES",
]

_WORKERS_ENV = "PSKIP_WORKERS"

DEFAULTS = {
    "label": "",
    "master_seed": 0,
    "repetitions": 10,
    "T": 1000,
    "record_stride": 1,
    "x0": 0.0,
    "problem": {
        "family": "quadratic",  # quadratic | logistic
        "n": 10,
        "d": 10,
        "varsigma2": 1.0,
        "sigma2": 1.0,
        "data_seed": 0,
        # logistic only:
        "source": "synthetic",  # synthetic | libsvm
        "samples": 2000,
        "path": "",
        "regularizer": {"kind": "l2", "c": 1.0, "fraction": 0.01},
    },
    "topology": {"kind": "ring", "iota": 0.5, "seed": 0},
    "algorithm": {
        "name": "proxskip",  # proxskip | proxskip_dual | local_dsgd
        "preset": "",
        "alpha": None,  # None -> preset default (or 1/(2L))
        "beta": None,   # None -> p
        "p": 1.0,
        "chi": None,    # None -> 1
        "K": 10,        # local_dsgd only
    },
}


class ConfigError(ValueError):
    pass


class TransientNotReached(RuntimeError):
    """The trailing window is still on the geometric transient."""

    def __init__(self, slope: float, tol: float):
        super().__init__(
            f"|log-metric slope| {abs(slope):.2e} >= {tol:.0e} per iteration; "
            "increase T or the window"
        )
        self.slope = slope


def _merge(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(f"expected mapping at {path or 'root'}")
    out = {}
    for key, dval in defaults.items():
        if key in given:
            gval = given[key]
            if isinstance(dval, dict):
                out[key] = _merge(dval, gval, f"{path}{key}.")
            else:
                out[key] = gval
        else:
            out[key] = copy.deepcopy(dval)
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config key(s): "
                          f"{', '.join(path + k for k in sorted(unknown))}")
    return out


@dataclass
class ExperimentConfig:
    """Validated nested config; unknown keys are rejected up front."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        return cls(data=_merge(DEFAULTS, raw or {}))

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(text) or {})

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_yaml(fh.read())

    def get(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[part]
        return node

    def set(self, dotted: str, value) -> None:
        parts = dotted.split(".")
        node = self.data
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node[parts[-1]] = value

    def override(self, dotted: str, raw_value: str) -> None:
        """Apply a CLI-style ``key=value`` override, YAML-coercing the value."""
        self.set(dotted, yaml.safe_load(raw_value))

    def copy(self) -> "ExperimentConfig":
        return ExperimentConfig(data=copy.deepcopy(self.data))

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Preset:
    """Named hyperparameter regime; some presets also pin the experiment."""

    name: str
    alpha_rule: str          # inv_L | half_inv_L | theorem1 | fixed
    beta_rule: str           # p | one
    chi_rule: str            # one | theorem1
    alpha_fixed: float | None = None
    n: int | None = None
    topology: str | None = None
    sigma2: float | None = None

    def hyper(self, L: float, p: float, T: int, seed: int = 0,
              lambda2: float | None = None, lambdaN: float | None = None,
              alpha: float | None = None) -> HyperParams:
        if self.chi_rule == "theorem1":
            if lambda2 is None:
                raise ValueError(f"preset {self.name} needs lambda2")
            chi = theorem1_chi(p, lambda2)
        else:
            chi = 1.0
        if alpha is None:
            if self.alpha_rule == "fixed":
                alpha = self.alpha_fixed
            elif self.alpha_rule == "inv_L":
                alpha = 1.0 / L
            elif self.alpha_rule == "half_inv_L":
                alpha = 1.0 / (2.0 * L)
            else:  # theorem1
                if lambda2 is None or lambdaN is None:
                    raise ValueError(f"preset {self.name} needs the spectrum")
                alpha = theorem1_stepsize(L, lambda2, lambdaN, chi)
        beta = p if self.beta_rule == "p" else 1.0
        return HyperParams(alpha=alpha, beta=beta, p=p, chi=chi, T=T, seed=seed)


_PRESETS = {
    "lemma1": Preset("lemma1", alpha_rule="inv_L", beta_rule="p",
                     chi_rule="one"),
    "theorem1": Preset("theorem1", alpha_rule="theorem1", beta_rule="one",
                       chi_rule="theorem1"),
    "theorem2-netindep": Preset("theorem2-netindep", alpha_rule="half_inv_L",
                                beta_rule="p", chi_rule="one"),
    "fig1-synthetic": Preset("fig1-synthetic", alpha_rule="fixed",
                             beta_rule="p", chi_rule="one",
                             alpha_fixed=1e-3, n=10, topology="ring",
                             sigma2=1.0),
}


def preset(name: str) -> Preset:
    """Look up a named regime; unknown names are rejected."""
    if name not in _PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    return _PRESETS[name]


def build_topology(cfg: ExperimentConfig):
    n = int(cfg.get("problem.n"))
    kind = cfg.get("topology.kind")
    if kind == "ring":
        g = ring(n)
    elif kind == "random":
        g = random_connected(n, float(cfg.get("topology.iota")),
                             int(cfg.get("topology.seed")))
    else:
        raise ConfigError(f"unknown topology kind {kind!r}")
    return g, metropolis(g)


def build_problem(cfg: ExperimentConfig):
    fam = cfg.get("problem.family")
    n = int(cfg.get("problem.n"))
    seed = int(cfg.get("problem.data_seed"))
    sigma2 = float(cfg.get("problem.sigma2"))
    if fam == "quadratic":
        return make_quadratic(n, int(cfg.get("problem.d")),
                              float(cfg.get("problem.varsigma2")),
                              sigma2, seed)
    if fam != "logistic":
        raise ConfigError(f"unknown problem family {fam!r}")
    source = cfg.get("problem.source")
    if source == "synthetic":
        ds = synthetic_blobs(int(cfg.get("problem.samples")),
                             int(cfg.get("problem.d")), seed)
    elif source == "libsvm":
        path = cfg.get("problem.path")
        if not path or not os.path.exists(path):
            raise ConfigError(f"libsvm source needs an existing path, got {path!r}")
        with open(path) as fh:
            ds = parse_libsvm(fh)
    else:
        raise ConfigError(f"unknown problem source {source!r}")
    idxs = partition(ds, n, seed)
    dense = ds.to_dense()
    shards = [(dense[ix], ds.labels[ix].astype(np.float64)) for ix in idxs]
    reg = cfg.get("problem.regularizer")
    kind = reg.get("kind", "l2")
    if kind == "l2":
        regularizer = ("l2", float(reg.get("c", 1.0)))
    elif kind == "l2_fraction":
        # coefficient tied to the data smoothness, c = fraction * L_data
        from pskip.problems import LogisticProblem, smoothness_constant

        probe = make_logistic(shards, ("l2", 0.0), 0.0)
        L_data = probe.L
        regularizer = ("l2", float(reg.get("fraction", 0.01)) * L_data)
    elif kind == "nonconvex":
        regularizer = ("nonconvex",)
    else:
        raise ConfigError(f"unknown regularizer kind {kind!r}")
    return make_logistic(shards, regularizer, sigma2)


def resolve_hyper(cfg: ExperimentConfig, problem, mixing,
                  seed: int) -> HyperParams:
    """HyperParams for one repetition, honoring any named preset."""
    alg = cfg.get("algorithm")
    p = float(alg["p"])
    T = int(cfg.get("T"))
    name = alg.get("preset") or ""
    alpha = alg.get("alpha")
    if name:
        ps = preset(name)
        hp = ps.hyper(L=problem.L, p=p, T=T, seed=seed,
                      lambda2=mixing.lambda2, lambdaN=mixing.lambdaN,
                      alpha=None if alpha is None else float(alpha))
        beta = alg.get("beta")
        chi = alg.get("chi")
        if beta is not None or chi is not None:
            hp = HyperParams(alpha=hp.alpha,
                             beta=float(beta) if beta is not None else hp.beta,
                             p=p,
                             chi=float(chi) if chi is not None else hp.chi,
                             T=T, seed=seed)
        return hp
    alpha = 1.0 / (2.0 * problem.L) if alpha is None else float(alpha)
    beta = alg.get("beta")
    beta = p if beta is None else float(beta)
    chi = alg.get("chi")
    chi = 1.0 if chi is None else float(chi)
    return HyperParams(alpha=alpha, beta=beta, p=p, chi=chi, T=T, seed=seed)


def _apply_preset_experiment_fields(cfg: ExperimentConfig) -> None:
    name = cfg.get("algorithm.preset") or ""
    if not name:
        return
    ps = preset(name)
    if ps.n is not None:
        cfg.set("problem.n", ps.n)
    if ps.topology is not None:
        cfg.set("topology.kind", ps.topology)
    if ps.sigma2 is not None:
        cfg.set("problem.sigma2", ps.sigma2)


def rep_seed(master: int, r: int) -> int:
    """Child seed for repetition r, independent of everything else."""
    return int(np.random.SeedSequence([master, r]).generate_state(1)[0])


@dataclass
class ExperimentResult:
    """Across-repetition mean/std of every metric, aligned by iteration."""

    config: dict
    seeds: list
    t: np.ndarray
    comms_mean: np.ndarray
    means: dict
    stds: dict
    run_count: int
    diverged: int
    absolute_mode: bool
    max_mean_iter_violation: float
    max_ysum_violation: float

    def mean(self, metric: str) -> np.ndarray:
        return self.means[metric]

    def std(self, metric: str) -> np.ndarray:
        return self.stds[metric]

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.config, sort_keys=True).encode()
        ).hexdigest()[:12]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["iteration", "comms", "metric", "mean", "std",
                     "run_count"])
        for name in METRIC_NAMES:
            m, s = self.means[name], self.stds[name]
            for k in range(self.t.shape[0]):
                wr.writerow([int(self.t[k]), repr(float(self.comms_mean[k])),
                             name, repr(float(m[k])), repr(float(s[k])),
                             self.run_count])
        return buf.getvalue()

    def save(self, out_dir: str) -> tuple:
        os.makedirs(out_dir, exist_ok=True)
        h = self.config_hash()
        csv_path = os.path.join(out_dir, f"{h}_result.csv")
        cfg_path = os.path.join(out_dir, f"{h}_config.json")
        with open(csv_path, "w") as fh:
            fh.write(self.to_csv())
        echo = {
            "config": self.config,
            "seeds": list(self.seeds),
            "run_count": self.run_count,
            "diverged": self.diverged,
            "absolute_mode": self.absolute_mode,
        }
        with open(cfg_path, "w") as fh:
            json.dump(echo, fh, indent=2, sort_keys=True)
        return csv_path, cfg_path

    @classmethod
    def from_csv(cls, path: str) -> "ExperimentResult":
        """Reload the aggregate curves (config echo is loaded if present)."""
        per_metric = {}
        with open(path) as fh:
            rd = csv.reader(fh)
            header = next(rd)
            expected = ["iteration", "comms", "metric", "mean", "std",
                        "run_count"]
            if header != expected:
                raise ValueError(
                    f"schema mismatch in {path}: {header} != {expected}")
            for row in rd:
                per_metric.setdefault(row[2], []).append(row)
        if not per_metric:
            raise ValueError(f"{path} has no data rows")
        config = {}
        echo_path = path.replace("_result.csv", "_config.json")
        seeds, run_count, diverged, amode = [], 0, 0, False
        if os.path.exists(echo_path):
            with open(echo_path) as fh:
                echo = json.load(fh)
            config = echo.get("config", {})
            seeds = echo.get("seeds", [])
            run_count = echo.get("run_count", 0)
            diverged = echo.get("diverged", 0)
            amode = echo.get("absolute_mode", False)
        first = next(iter(per_metric.values()))
        t = np.array([int(r[0]) for r in first], dtype=np.int64)
        comms = np.array([float(r[1]) for r in first])
        means = {m: np.array([float(r[3]) for r in rows])
                 for m, rows in per_metric.items()}
        stds = {m: np.array([float(r[4]) for r in rows])
                for m, rows in per_metric.items()}
        run_count = run_count or int(first[0][5])
        return cls(config=config, seeds=seeds, t=t, comms_mean=comms,
                   means=means, stds=stds, run_count=run_count,
                   diverged=diverged, absolute_mode=amode,
                   max_mean_iter_violation=float("nan"),
                   max_ysum_violation=float("nan"))


def _run_one(cfg: ExperimentConfig, problem, mixing, ref, seed: int):
    name = cfg.get("algorithm.name")
    stride = int(cfg.get("record_stride"))
    x0 = float(cfg.get("x0"))
    if name == "proxskip":
        hp = resolve_hyper(cfg, problem, mixing, seed)
        return proxskip_run(problem, mixing, hp, x0, ref=ref,
                            record_stride=stride)
    if name == "proxskip_dual":
        hp = resolve_hyper(cfg, problem, mixing, seed)
        return proxskip_run_dual_form(problem, mixing, hp, x0, ref=ref,
                                      record_stride=stride)
    if name == "local_dsgd":
        alg = cfg.get("algorithm")
        alpha = alg.get("alpha")
        if alpha is None:
            alpha = 1.0 / (2.0 * problem.L)
        K = int(alg.get("K", 1))
        T = int(cfg.get("T"))
        if T % K:
            raise ConfigError(f"T={T} must be a multiple of K={K}")
        return local_dsgd_run(problem, mixing, float(alpha), K, T // K,
                              seed, x0, ref=ref, record_stride=stride)
    raise ConfigError(f"unknown algorithm {name!r}")


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute all repetitions and aggregate, deterministically in the
    master seed. Diverged repetitions are excluded from the means but
    counted."""
    cfg = cfg.copy()
    _apply_preset_experiment_fields(cfg)
    reps = int(cfg.get("repetitions"))
    if reps < 1:
        raise ConfigError(f"repetitions must be >= 1, got {reps}")
    master = int(cfg.get("master_seed"))
    _, mixing = build_topology(cfg)
    problem = build_problem(cfg)
    ref = refmod.solve(problem)
    seeds = [rep_seed(master, r) for r in range(reps)]
    if len(set(seeds)) != len(seeds):
        raise RuntimeError("duplicate repetition seeds")

    def job(seed):
        try:
            return _run_one(cfg, problem, mixing, ref, seed)
        except DivergenceError as exc:
            return exc

    workers = int(os.environ.get(_WORKERS_ENV, "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, seeds))
    else:
        outcomes = [job(s) for s in seeds]

    traces = [o for o in outcomes if not isinstance(o, DivergenceError)]
    diverged = len(outcomes) - len(traces)
    if not traces:
        raise DivergenceError(min(o.t for o in outcomes))
    t = traces[0].t
    means, stds = {}, {}
    for name in METRIC_NAMES:
        stack = np.stack([tr.metric(name) for tr in traces])
        mean = stack.mean(axis=0)
        std = stack.std(axis=0)
        # bit-identical repetitions (randomness off) aggregate exactly
        same = np.all(stack == stack[0:1], axis=0)
        mean[same] = stack[0][same]
        std[same] = 0.0
        means[name] = mean
        stds[name] = std
    comms = np.stack([tr.comms for tr in traces]).mean(axis=0)
    return ExperimentResult(
        config=cfg.data,
        seeds=seeds,
        t=t,
        comms_mean=comms,
        means=means,
        stds=stds,
        run_count=len(traces),
        diverged=diverged,
        absolute_mode=traces[0].absolute_mode,
        max_mean_iter_violation=max(tr.max_mean_iter_violation
                                    for tr in traces),
        max_ysum_violation=max(tr.max_ysum_violation for tr in traces),
    )


def steady_state_floor(result: ExperimentResult,
                       window_fraction: float = 0.2,
                       metric: str = "rel_error",
                       slope_tol: float = 1e-3) -> float:
    """Mean of the squared-error metric over the final window.

    rel_error is squared before averaging; grad_norm_sq, consensus_err,
    fgap, and dist_sq are already squared-error-like and used as is. The
    window must be past the transient: the least-squares slope of the log
    metric over the window must be below slope_tol per iteration, else
    :class:`TransientNotReached` is raised.
    """
    y = np.asarray(result.mean(metric), dtype=np.float64)
    if metric == "rel_error":
        y = y**2
    m = y.shape[0]
    w = max(2, int(np.ceil(m * window_fraction)))
    tail = y[-w:]
    ts = result.t[-w:].astype(np.float64)
    logs = np.log(np.maximum(tail, 1e-300))
    slope = float(np.polyfit(ts, logs, 1)[0])
    if abs(slope) >= slope_tol:
        raise TransientNotReached(slope, slope_tol)
    return float(tail.mean())


SWEEP_AXES = {
    "n": "problem.n",
    "p": "algorithm.p",
    "varsigma2": "problem.varsigma2",
    "sigma2": "problem.sigma2",
    "iota": "topology.iota",
}


def sweep(cfg: ExperimentConfig, axis: str, values) -> list:
    """One experiment per axis value with repetition seeds paired across
    cells (identical child seeds, same master)."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; have {sorted(SWEEP_AXES)}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    results = []
    for v in values:
        cell = cfg.copy()
        cell.set(SWEEP_AXES[axis], int(v) if axis == "n" else float(v))
        results.append(run_experiment(cell))
    return results
