"""Gradient-descent VQE with weak-barren-plateau restarts, plus the layerwise baseline."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse

from shadowguard import _kernels
from shadowguard.ansatz import (
    CircuitSpec,
    Params,
    init_identity_block,
    init_small_angle,
    init_uniform,
    prepare_state,
    zero_params,
)
from shadowguard.hamiltonians import ObservableSum
from shadowguard.optimizer.entropy import WbpConfig, wbp_check
from shadowguard.optimizer.gradients import ShadowEnergyEvaluator, adjoint_gradient, parameter_shift_gradient
from shadowguard.shadows import (
    budget_gradient,
    budget_observables,
    budget_purity,
    collect_shadows,
    estimate_purity,
    renyi2_from_purity,
    snapshot_energies,
)
from shadowguard.simulator import Region, Statevector, purity_exact

INITIALIZERS = ("small-angle", "uniform", "identity-block", "zero")
ESTIMATORS = ("exact", "shadow")
CSV_COLUMNS = ("iteration", "energy", "s2", "grad_norm", "eta")


class InitializationError(RuntimeError):
    """No WBP-free starting point was found within the retry cap."""


@dataclass(frozen=True)
class Problem:
    hamiltonian: ObservableSum
    n_qubits: int
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hamiltonian.check_hermitian()
        if self.hamiltonian.min_qubits() > self.n_qubits:
            raise ValueError("Hamiltonian acts outside the register")

    @cached_property
    def sparse(self) -> scipy.sparse.csr_matrix:
        return self.hamiltonian.to_sparse(self.n_qubits)


@dataclass(frozen=True)
class OptimizerConfig:
    eta: float = 0.1
    eta_decay: float = 0.1
    max_restarts: int = 10
    max_iters: int = 500
    window: int = 10
    tol: float = 1e-6
    estimator: str = "exact"
    initializer: str = "small-angle"
    eps_theta: float = 0.05
    alpha: float = 1.0
    region: tuple[int, ...] = (0, 1)
    redraw_on_restart: bool = False
    init_retries: int = 20
    layer_iters: int = 5
    new_layer_init: str = "zero"
    shadow_epsilon: float = 0.1
    shadow_delta: float = 0.1
    shadow_T: int | None = None
    shadow_grad_T: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "region", tuple(int(q) for q in self.region))
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.eta_decay < 1:
            raise ValueError("eta_decay must lie in (0, 1)")
        if self.window < 2:
            raise ValueError("convergence window must be >= 2")
        if self.max_iters < 1 or self.max_restarts < 0 or self.init_retries < 1 or self.layer_iters < 1:
            raise ValueError("iteration, restart and retry counts must be positive")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.initializer not in INITIALIZERS:
            raise ValueError(f"initializer must be one of {INITIALIZERS}")
        if self.new_layer_init not in ("zero", "uniform"):
            raise ValueError("new_layer_init must be 'zero' or 'uniform'")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")

    def replace(self, **changes) -> OptimizerConfig:
        return OptimizerConfig(**{**asdict(self), **changes})

    def to_json(self) -> dict:
        out = asdict(self)
        out["region"] = list(self.region)
        return out

    @classmethod
    def from_json(cls, data: dict) -> OptimizerConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunRecord:
    method: str
    config: dict
    rows: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    initial_params: Params | None = None
    final_params: Params | None = None
    metadata: dict = field(default_factory=dict)

    def add_row(self, iteration: int, energy: float, s2: float, grad_norm: float, eta: float, wbp: bool,
                **extra) -> None:
        if self.rows and iteration <= self.rows[-1]["iteration"]:
            raise ValueError("iterations must increase")
        self.rows.append(dict(iteration=iteration, energy=energy, s2=s2, grad_norm=grad_norm, eta=eta,
                              wbp=wbp, **extra))

    @property
    def energies(self) -> np.ndarray:
        return np.array([r["energy"] for r in self.rows])

    @property
    def final_energy(self) -> float:
        return self.rows[-1]["energy"] if self.rows else math.nan

    @property
    def best_energy(self) -> float:
        ok = [r["energy"] for r in self.rows if not r["wbp"]]
        return min(ok) if ok else math.nan

    @property
    def n_restarts(self) -> int:
        return sum(e["kind"] == "restart" for e in self.events)

    def wbp_iterations(self) -> list[int]:
        return [r["iteration"] for r in self.rows if r["wbp"]]

    def to_json(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v

        return {
            "method": self.method,
            "config": self.config,
            "rows": [{k: clean(v) for k, v in r.items()} for r in self.rows],
            "events": self.events,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "final_energy": clean(self.final_energy),
            "best_energy": clean(self.best_energy),
            "initial_params": None if self.initial_params is None else self.initial_params.to_json()["angles"],
            "final_params": None if self.final_params is None else self.final_params.to_json()["angles"],
            "metadata": self.metadata,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r["iteration"]] + [repr(float(r[c])) for c in CSV_COLUMNS[1:]])
        return buf.getvalue()

    def save(self, directory: str | Path, stem: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        js = directory / f"{stem}.json"
        cs = directory / f"{stem}.csv"
        js.write_text(json.dumps(self.to_json(), indent=1))
        cs.write_text(self.to_csv())
        return js, cs


def initialize(circuit: CircuitSpec, config: OptimizerConfig, rng: np.random.Generator) -> Params:
    if config.initializer == "small-angle":
        return init_small_angle(circuit, config.eps_theta, rng)
    if config.initializer == "uniform":
        return init_uniform(circuit, rng)
    if config.initializer == "identity-block":
        return init_identity_block(circuit, rng)
    return zero_params(circuit)


class _Monitor:
    """Evaluates energy, S2 and (on demand) the gradient in exact or shadow mode."""

    def __init__(self, problem: Problem, config: OptimizerConfig, wbp: WbpConfig, rng: np.random.Generator):
        self.problem = problem
        self.config = config
        self.wbp = wbp
        self.rng = rng
        self.shadow_mode = config.estimator == "shadow"
        if self.shadow_mode:
            obs = problem.hamiltonian
            k_h = max(obs.locality, 1)
            n_terms = max(len(obs.non_identity_terms()), 1)
            eps, delta = config.shadow_epsilon, config.shadow_delta
            self.T = config.shadow_T or max(budget_observables(k_h, n_terms, eps, delta),
                                            budget_purity(wbp.region.k, eps, delta, 1.0))
            self.grad_T = config.shadow_grad_T or budget_gradient(k_h, n_terms, eps, delta)
        self.last_state: Statevector | None = None
        self.last_tol = config.tol

    def energy_and_s2(self, circuit: CircuitSpec, params: Params) -> tuple[float, float, Statevector]:
        state = prepare_state(circuit, params)
        self.last_state = state
        return self._measure(state)

    def _measure(self, state: Statevector) -> tuple[float, float, Statevector]:
        region = self.wbp.region
        if not self.shadow_mode:
            psi = state.amplitudes
            energy = float(np.vdot(psi, self.problem.sparse @ psi).real)
            s2 = float(max(-math.log(purity_exact(state, region)), 0.0))
            return energy, s2, state
        shadows = collect_shadows(state, self.T, self.rng)
        values = snapshot_energies(shadows, self.problem.hamiltonian)
        self.last_tol = max(self.config.tol, 3.0 * float(np.std(values, ddof=1)) / math.sqrt(self.T))
        s2, _ = renyi2_from_purity(estimate_purity(shadows, region), region.k)
        return float(values.mean()), s2, state

    def gradient(self, circuit: CircuitSpec, params: Params, state: Statevector) -> np.ndarray:
        if not self.shadow_mode:
            return adjoint_gradient(circuit, params, state, self.problem.sparse)
        evaluator = ShadowEnergyEvaluator(self.problem.hamiltonian, self.grad_T, self.rng)
        return parameter_shift_gradient(circuit, params, self.problem.hamiltonian, evaluator)


def _wbp_free_start(circuit, config, monitor, rng, initial):
    if initial is not None:
        _, s2, _ = monitor.energy_and_s2(circuit, initial)
        if wbp_check(s2, monitor.wbp):
            raise InitializationError(f"supplied parameters start in a WBP (S2={s2:.4f})")
        return initial, 0
    for attempt in range(config.init_retries):
        params = initialize(circuit, config, rng)
        _, s2, _ = monitor.energy_and_s2(circuit, params)
        if not wbp_check(s2, monitor.wbp):
            return params, attempt
    raise InitializationError(f"no WBP-free initialization after {config.init_retries} draws")


def run_wbp_free(problem: Problem, circuit: CircuitSpec, config: OptimizerConfig,
                 rng: np.random.Generator | None = None, initial: Params | None = None) -> RunRecord:
    """Gradient descent that restarts with a smaller learning rate on entering a WBP.

    Each iteration evaluates E and S2 at the current angles. If S2 is below the
    WBP threshold the gradient is taken and one GD step is applied; otherwise
    the angles are reset to the initialization (or redrawn when
    ``redraw_on_restart``), eta is multiplied by ``eta_decay``, and the
    iteration is logged with a NaN gradient norm.
    """
    rng = np.random.default_rng() if rng is None else rng
    if circuit.n_qubits != problem.n_qubits:
        raise ValueError("circuit and problem disagree on the qubit count")
    wbp = WbpConfig.build(config.alpha, Region(config.region), problem.n_qubits)
    monitor = _Monitor(problem, config, wbp, rng)
    start, retries = _wbp_free_start(circuit, config, monitor, rng, initial)

    record = RunRecord("wbp-free", config.to_json(), initial_params=start,
                       metadata={"threshold": wbp.threshold, "init_redraws": retries,
                                 "circuit": circuit.to_json()})
    if monitor.shadow_mode:
        record.metadata.update(shadow_T=monitor.T, shadow_grad_T=monitor.grad_T)

    params, eta = start, config.eta
    segment: list[float] = []
    record.stop_reason = "max_iters"
    for it in range(config.max_iters):
        energy, s2, state = monitor.energy_and_s2(circuit, params)
        if wbp_check(s2, wbp):
            record.add_row(it, energy, s2, math.nan, eta, True)
            if record.n_restarts >= config.max_restarts:
                record.events.append({"iteration": it, "kind": "wbp", "eta": eta})
                record.stop_reason = "max_restarts"
                break
            eta *= config.eta_decay
            if config.redraw_on_restart:
                start, _ = _wbp_free_start(circuit, config, monitor, rng, None)
            params = start
            segment = []
            record.events.append({"iteration": it, "kind": "restart", "eta": eta})
            continue

        grad = monitor.gradient(circuit, params, state)
        record.add_row(it, energy, s2, float(np.linalg.norm(grad)), eta, False)
        segment.append(energy)
        if len(segment) > config.window and abs(segment[-1] - segment[-1 - config.window]) < monitor.last_tol:
            record.converged = True
            record.stop_reason = "converged"
            break
        params = Params(params.angles - eta * grad)

    record.final_params = params
    return record


def run_layerwise(problem: Problem, base_circuit: CircuitSpec, config: OptimizerConfig,
                  rng: np.random.Generator | None = None, n_layers: int | None = None) -> RunRecord:
    """Layerwise baseline: grow the circuit one layer at a time, training only the newest layer.

    The first layer is drawn with the configured initializer; every appended
    layer uses the axes of ``base_circuit`` and starts at zero angles, or at
    uniform angles on [-pi, pi) when ``new_layer_init == "uniform"``. Each
    stage runs ``config.layer_iters`` GD steps. WBPs are logged as events but
    never trigger a restart. Exact estimator only.
    """
    rng = np.random.default_rng() if rng is None else rng
    if config.estimator != "exact":
        raise ValueError("the layerwise baseline runs in exact mode")
    n_layers = base_circuit.depth if n_layers is None else n_layers
    if not 1 <= n_layers <= base_circuit.depth:
        raise ValueError("n_layers must lie in [1, base depth]")
    wbp = WbpConfig.build(config.alpha, Region(config.region), problem.n_qubits)
    h = problem.sparse
    cz = base_circuit.cz_diagonal
    first = initialize(base_circuit.truncated(1), config, rng).angles

    angles = np.zeros((n_layers, base_circuit.n_qubits))
    angles[0] = first[0]
    if config.new_layer_init == "uniform":
        angles[1:] = rng.uniform(-np.pi, np.pi, size=(n_layers - 1, base_circuit.n_qubits))
    start = angles.copy()
    prefix = np.zeros(1 << base_circuit.n_qubits, dtype=np.complex128)
    prefix[0] = 1.0
    record = RunRecord("layerwise", config.to_json(),
                       metadata={"threshold": wbp.threshold, "layers": n_layers,
                                 "circuit": base_circuit.truncated(n_layers).to_json()})
    it = 0
    eta = config.eta
    for layer in range(n_layers):
        axes = base_circuit.axes[layer:layer + 1]
        for _ in range(config.layer_iters):
            theta = angles[layer:layer + 1]
            psi = prefix.copy()
            _kernels.forward(psi, axes, theta, cz)
            state = Statevector(psi)
            energy = float(np.vdot(psi, h @ psi).real)
            s2 = float(max(-math.log(purity_exact(state, wbp.region)), 0.0))
            hit = wbp_check(s2, wbp)
            lam = np.ascontiguousarray(h @ psi)
            grad = np.empty((1, base_circuit.n_qubits))
            _kernels.backward_gradient(psi.copy(), lam, axes, theta, cz, grad)
            record.add_row(it, energy, s2, float(np.linalg.norm(grad)), eta, hit, layers=layer + 1)
            if hit:
                record.events.append({"iteration": it, "kind": "wbp", "layers": layer + 1})
            angles[layer] -= eta * grad[0]
            it += 1
        _kernels.forward(prefix, axes, angles[layer:layer + 1], cz)

    record.initial_params = Params(start)
    record.final_params = Params(angles)
    record.stop_reason = "schedule_complete"
    return record
