"""Experiment drivers behind the command-line interface.

Every driver is deterministic given its config: a master ``SeedSequence``
spawns one child per seed, and results are assembled in seed order whether or
not a process pool is used (``SHADOWGUARD_THREADS`` > 1 enables one).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import shadowguard
from shadowguard.ansatz import Params, build_circuit, init_small_angle, mirror_circuit, prepare_state
from shadowguard.hamiltonians import (
    chain_graph,
    heisenberg_graph,
    ising_chain,
    random_regular_graph,
    ring_graph,
    syk_hamiltonian,
)
from shadowguard.optimizer.entropy import page_entropy_asymptotic
from shadowguard.optimizer.gradients import (
    adjoint_gradient,
    purity_change_bound,
    qfim_quadratic_form,
    step_bound_from_quadratic,
)
from shadowguard.optimizer.scan import entropy_growth, gradient_variance_scan
from shadowguard.optimizer.vqe import OptimizerConfig, Problem, RunRecord, run_layerwise, run_wbp_free
from shadowguard.shadows import budget_gradient, budget_observables, budget_purity
from shadowguard.simulator import (
    ground_state_dense,
    purity_exact,
    reduced_density_matrix,
    renyi2_exact,
    trace_distance,
)

EXPERIMENTS = ("bp-scan", "small-angle", "step-bound", "vqe", "budget", "ground-truth")
MODELS = ("heisenberg-chain", "heisenberg-graph", "syk", "ising")

# Named experiment setups; user config values override these.
PRESETS = {
    "bp-decay": dict(system_sizes=(6, 8, 10), depths=tuple(range(1, 61)), n_seeds=100),
    "small-angle-n12": dict(n=12, depths=tuple(range(5, 41, 5)), eps_values=(0.0, 0.05, 0.1, 1.0), n_seeds=100),
    "step-size": dict(model="heisenberg-chain", n=10, p=100, eps_theta=0.05, etas=(1e-3, 1e-2, 1e-1, 1.0),
                 n_seeds=500),
    "chain-restarts": dict(model="heisenberg-chain", n=10, p=100, etas=(1.0, 0.1, 0.01, 0.001), alpha=0.5,
                 eps_theta=0.05, initializers=("small-angle",), max_iters=500, tol=0.0),
    "graph-layerwise": dict(model="heisenberg-graph", n=10, p=100, etas=(0.1, 0.01), alpha=1.0, eps_theta=0.1,
                 initializers=("small-angle",), layerwise=True, new_layer_init="uniform",
                 max_iters=500, tol=0.0),
    "syk-init": dict(model="syk", n=8, p=100, etas=(1.0, 0.1), alpha=1.0, eps_theta=0.1,
                 initializers=("small-angle", "identity-block"), max_iters=500, tol=0.0),
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: str = "heisenberg-chain"
    n: int = 10
    p: int = 100
    n_seeds: int = 100
    seed: int = 0
    etas: tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1.0)
    eps_theta: float = 0.05
    eps_values: tuple[float, ...] = (0.0, 0.05, 0.1, 1.0)
    alpha: float = 1.0
    region: tuple[int, ...] = (0, 1)
    estimator: str = "exact"
    depths: tuple[int, ...] = tuple(range(1, 61))
    system_sizes: tuple[int, ...] = (6, 8, 10)
    initializers: tuple[str, ...] = ("small-angle",)
    layerwise: bool = False
    layer_iters: int = 5
    new_layer_init: str = "zero"
    max_iters: int = 500
    max_restarts: int = 10
    tol: float = 1e-6
    J: float = 1.0
    h_z: float = 1.0
    periodic: bool = False
    model_seed: int = 0
    preset: str | None = None
    # budget command
    k: int = 2
    L: int = 10
    epsilon: float = 0.1
    delta: float = 0.1
    purity: float = 1.0
    optimizer: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("etas", "eps_values", "region", "depths", "system_sizes", "initializers"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.n < 2 or self.p < 1 or self.n_seeds < 1:
            raise ConfigError("need n >= 2, p >= 1 and n_seeds >= 1")
        if self.model == "syk" and self.n < 3:
            raise ConfigError("the SYK model needs n >= 3")
        if any(e <= 0 for e in self.etas):
            raise ConfigError("learning rates must be positive")
        if any(not 0 <= e <= 1 for e in self.eps_values):
            raise ConfigError("eps_values must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        preset = data.get("preset")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            data = {**PRESETS[preset], **data}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' field")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path, **overrides) -> ExperimentConfig:
        data = json.loads(Path(path).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def to_json(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def optimizer_config(self, eta: float, initializer: str) -> OptimizerConfig:
        base = dict(eta=eta, alpha=self.alpha, eps_theta=self.eps_theta, initializer=initializer,
                    region=self.region, estimator=self.estimator, max_iters=self.max_iters,
                    max_restarts=self.max_restarts, tol=self.tol, layer_iters=self.layer_iters,
                    new_layer_init=self.new_layer_init)
        return OptimizerConfig.from_json({**base, **self.optimizer})


def version_string() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{shadowguard.__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return shadowguard.__version__


def _header(config: ExperimentConfig) -> str:
    return f"# shadowguard {version_string()} config={json.dumps(config.to_json(), sort_keys=True)}\n"


def _csv(config: ExperimentConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(_header(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def parallel_map(fn, jobs):
    """map() over jobs, through a process pool when SHADOWGUARD_THREADS > 1; order preserved."""
    workers = int(os.environ.get("SHADOWGUARD_THREADS", "1") or 1)
    jobs = list(jobs)
    if workers <= 1 or len(jobs) < 2:
        return list(map(fn, jobs))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def seed_streams(config: ExperimentConfig) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(config.seed).spawn(config.n_seeds)


def build_problem(config: ExperimentConfig) -> Problem:
    """Model Hamiltonian; random models draw from ``model_seed`` so every seed shares one instance."""
    n = config.n
    rng = np.random.default_rng(config.model_seed)
    meta: dict = {"model": config.model}
    if config.model == "heisenberg-chain":
        graph = ring_graph(n) if config.periodic else chain_graph(n)
        meta["edges"] = [list(e) for e in graph.edges]
        obs = heisenberg_graph(graph, config.J, config.h_z)
    elif config.model == "heisenberg-graph":
        graph = random_regular_graph(n, 3, rng)
        meta["edges"] = [list(e) for e in graph.edges]
        obs = heisenberg_graph(graph, config.J, config.h_z)
    elif config.model == "syk":
        obs = syk_hamiltonian(n, config.J, rng)
    else:
        obs = ising_chain(n, config.J)
    return Problem(obs, n, config.model, meta)


def _write(out: str | Path | None, name: str, text: str) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    path = path / name
    path.write_text(text)
    return path


# ----------------------------------------------------------------------------- bp-scan

BP_COLUMNS = ("n", "p", "var_grad", "s2_half", "s2_k2")


def cmd_bp_scan(config: ExperimentConfig, out=None) -> str:
    table = gradient_variance_scan(config.system_sizes, config.depths, config.n_seeds, seed=config.seed,
                                   map_fn=parallel_map)
    text = _csv(config, BP_COLUMNS, table.rows())
    _write(out, "bp_scan.csv", text)
    return text


# ----------------------------------------------------------------------------- small-angle

SMALL_ANGLE_COLUMNS = ("eps_theta", "p", "s2_mean", "s2_sem", "n_seeds")


def cmd_small_angle(config: ExperimentConfig, out=None) -> str:
    samples = entropy_growth(config.n, config.depths, config.eps_values, config.n_seeds, config.region,
                             seed=config.seed, map_fn=parallel_map)
    depths = sorted(set(config.depths))
    rows = []
    for e, eps in enumerate(config.eps_values):
        for j, p in enumerate(depths):
            vals = samples[e, j]
            sem = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            rows.append((float(eps), p, float(vals.mean()), sem, vals.size))
    text = _csv(config, SMALL_ANGLE_COLUMNS, rows)
    _write(out, "small_angle.csv", text)
    return text


# ----------------------------------------------------------------------------- step-bound

STEP_COLUMNS = ("seed", "eta", "trace_distance", "delta_purity", "purity_bound", "step_bound", "s2_initial")


def step_bound_samples(problem: Problem, n: int, p: int, eps_theta: float, etas, region,
                       seed_seq: np.random.SeedSequence) -> list[tuple]:
    """One GD step from a small-angle start, for each learning rate."""
    rng = np.random.default_rng(seed_seq)
    circuit = build_circuit(n, p, rng)
    params = init_small_angle(circuit, eps_theta, rng)
    state = prepare_state(circuit, params)
    grad = adjoint_gradient(circuit, params, state, problem.sparse)
    g_f_g = qfim_quadratic_form(circuit, params, grad)
    rho0 = reduced_density_matrix(state, region)
    pur0 = float(np.sum(np.abs(rho0) ** 2))
    s2_0 = float(-math.log(pur0))
    out = []
    for eta in etas:
        moved = prepare_state(circuit, Params(params.angles - eta * grad))
        rho1 = reduced_density_matrix(moved, region)
        t_a = trace_distance(rho0, rho1)
        dp = abs(float(np.sum(np.abs(rho1) ** 2)) - pur0)
        out.append((eta, t_a, dp, purity_change_bound(min(t_a, 1.0), len(region)),
                    step_bound_from_quadratic(g_f_g, eta), s2_0))
    return out


def _step_job(args):
    return step_bound_samples(*args)


def step_bound_table(config: ExperimentConfig) -> list[tuple]:
    problem = build_problem(config)
    jobs = [(problem, config.n, config.p, config.eps_theta, config.etas, config.region, ss)
            for ss in seed_streams(config)]
    rows = []
    for s, res in enumerate(parallel_map(_step_job, jobs)):
        rows.extend((s,) + r for r in res)
    return rows


def cmd_step_bound(config: ExperimentConfig, out=None) -> str:
    text = _csv(config, STEP_COLUMNS, step_bound_table(config))
    _write(out, "step_bound.csv", text)
    return text


# ----------------------------------------------------------------------------- vqe

VQE_SUMMARY_COLUMNS = ("label", "seed", "eta", "method", "initializer", "n_events", "first_event",
                       "final_energy", "best_energy", "converged", "stop_reason")


@dataclass
class VqeResult:
    label: str
    seed: int
    eta: float
    initializer: str
    record: RunRecord

    def summary_row(self) -> tuple:
        events = self.record.events
        return (self.label, self.seed, self.eta, self.record.method, self.initializer, len(events),
                events[0]["iteration"] if events else "", self.record.final_energy, self.record.best_energy,
                self.record.converged, self.record.stop_reason)


def _vqe_job(args) -> list[VqeResult]:
    config, problem, s, seed_seq = args
    results = []
    runs = [(init, False) for init in config.initializers]
    if config.layerwise:
        runs.append(("small-angle", True))
    for eta in config.etas:
        for init, layerwise in runs:
            # the same child stream for every eta reproduces the same circuit and initialization
            rng = np.random.default_rng(seed_seq)
            circuit = build_circuit(config.n, config.p, rng)
            opt = config.optimizer_config(eta, init)
            if layerwise:
                record = run_layerwise(problem, circuit, opt, rng)
                label = f"lw_eta{eta:g}"
            else:
                if init == "identity-block":
                    circuit = mirror_circuit(circuit)
                record = run_wbp_free(problem, circuit, opt, rng)
                label = f"{_short(init)}_eta{eta:g}"
            record.metadata.update(problem.metadata)
            record.metadata["seed"] = s
            results.append(VqeResult(label, s, eta, init, record))
    return results


def _short(initializer: str) -> str:
    return {"small-angle": "sa", "identity-block": "ib", "uniform": "uni", "zero": "zero"}[initializer]


def run_vqe_experiment(config: ExperimentConfig) -> list[VqeResult]:
    problem = build_problem(config)
    jobs = [(config, problem, s, ss) for s, ss in enumerate(seed_streams(config))]
    return [r for batch in parallel_map(_vqe_job, jobs) for r in batch]


def cmd_vqe(config: ExperimentConfig, out=None) -> list[VqeResult]:
    results = run_vqe_experiment(config)
    if out is not None:
        header = {"version": version_string(), "config": config.to_json()}
        for r in results:
            r.record.metadata["provenance"] = header
            r.record.save(Path(out) / "runs", f"{r.label}_seed{r.seed:03d}")
        _write(out, "vqe_summary.csv", _csv(config, VQE_SUMMARY_COLUMNS, (r.summary_row() for r in results)))
    return results


# ----------------------------------------------------------------------------- ground truth & budget

def cmd_ground_truth(config: ExperimentConfig, out=None) -> dict:
    problem = build_problem(config)
    energy, state = ground_state_dense(problem.hamiltonian, config.n)
    k = len(config.region)
    half = tuple(range(config.n // 2))
    s2_region = renyi2_exact(state, config.region)
    s2_half = renyi2_exact(state, half)
    result = {
        "version": version_string(),
        "config": config.to_json(),
        "model": problem.metadata,
        "ground_energy": energy,
        "region": list(config.region),
        "s2_region": s2_region,
        "purity_region": purity_exact(state, config.region),
        "s2_region_over_page": s2_region / page_entropy_asymptotic(k, config.n),
        "s2_half": s2_half,
        "s2_half_over_page": s2_half / page_entropy_asymptotic(len(half), config.n),
    }
    _write(out, "ground_truth.json", json.dumps(result, indent=1))
    return result


def cmd_budget(k: int, L: int, epsilon: float, delta: float, purity: float = 1.0) -> dict:
    return {
        "k": k, "L": L, "epsilon": epsilon, "delta": delta, "purity": purity,
        "observables": budget_observables(k, L, epsilon, delta),
        "purity_budget": budget_purity(k, epsilon, delta, purity),
        "gradient": budget_gradient(k, L, epsilon, delta),
    }
