"""Command-line front end.

Subcommands:

    diracflow simulate   --config cfg.json --out run.csv [--dump-config]
    diracflow check TEST --config cfg.json
    diracflow compare    --configs a.json b.json ... --out drift.csv
    diracflow constraint --config cfg.json

Configs are plain JSON; matrices are row-major nested arrays.  CSV floats
are written with shortest round-trip decimals so repeated runs are
byte-identical.  Exit codes: 0 success/pass, 1 check failure, 2 usage or
config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, linear_dirac
from .constraints import EmptyConstraintSetError, run as run_algorithm
from .integrators import (
    NewtonError,
    SolverConfig,
    StepFailure,
    make_lagrangian_midpoint_stepper,
    make_method1_stepper,
    make_method2_stepper,
    make_rk2_stepper,
    run_trajectory,
)
from .maps import (
    MapDomainError,
    cotangent_lift_generic,
    cotangent_lift_midpoint,
    sphere_exp_map,
    sphere_midpoint_map,
    theta_map,
)
from .models import (
    NonholonomicSystem,
    PortHamiltonianSystem,
    RigidBody,
    VortexCollisionError,
    VortexSystem,
    build_model,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CHECK_NAMES = ("symplectic", "dalpha", "energy", "constraints", "order",
               "dirac", "constraint-algorithm")

METHODS = ("method1", "method2", "rk2", "lagrangian_midpoint")

SUPPORTED = {
    ("vortices", "method1"): ("theta", "cotangent_midpoint"),
    ("vortices", "method2"): ("theta",),
    ("vortices", "rk2"): ("theta", "none"),
    ("vortices", "lagrangian_midpoint"): ("theta",),
    ("rigid_body", "method1"): ("sphere_midpoint", "sphere_exp"),
    ("rigid_body", "rk2"): ("sphere_midpoint", "none"),
    ("ph_open", "method1"): ("theta",),
    ("ph_closed", "method1"): ("theta",),
    ("nonholonomic_particle", "method1"): ("theta",),
    ("nonholonomic_particle", "method2"): ("theta",),
    ("nonholonomic_particle", "rk2"): ("theta", "none"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model_name: str
    model_params: dict = field(default_factory=dict)
    method: str = "method1"
    map_name: str = "theta"
    map_params: dict = field(default_factory=lambda: {"theta": 0.5})
    h: float = 0.1
    steps: int = 100
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial_state: list | None = None
    inputs: list | None = None
    label: str | None = None
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        known = {"model", "method", "map", "h", "steps", "solver",
                 "initial_state", "inputs", "label"}
        model = data.get("model")
        if not isinstance(model, dict) or "name" not in model:
            raise ConfigError("config requires model: {name, params}")
        method = data.get("method", "method1")
        if method not in METHODS:
            raise ConfigError(f"unknown method '{method}'")
        map_cfg = data.get("map", {"name": "theta", "theta": 0.5})
        if isinstance(map_cfg, str):
            map_cfg = {"name": map_cfg}
        map_name = map_cfg.get("name", "theta")
        map_params = {k: v for k, v in map_cfg.items() if k != "name"}
        if map_name == "theta":
            map_params.setdefault("theta", 0.5)
        h = float(data.get("h", 0.1))
        steps = int(data.get("steps", 100))
        if h <= 0:
            raise ConfigError("h must be positive")
        if steps < 0:
            raise ConfigError("steps must be nonnegative")
        solver = data.get("solver", {})
        try:
            solver_cfg = SolverConfig(**solver)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad solver config: {exc}")
        extras = {k: v for k, v in data.items() if k not in known}
        return cls(
            model_name=model["name"],
            model_params=dict(model.get("params", {})),
            method=method,
            map_name=map_name,
            map_params=map_params,
            h=h,
            steps=steps,
            solver=solver_cfg,
            initial_state=data.get("initial_state"),
            inputs=data.get("inputs"),
            label=data.get("label"),
            extras=extras,
        )

    def effective_dict(self) -> dict:
        out = {
            "model": {"name": self.model_name, "params": self.model_params},
            "method": self.method,
            "map": {"name": self.map_name, **self.map_params},
            "h": self.h,
            "steps": self.steps,
            "solver": {
                "newton_tol": self.solver.newton_tol,
                "max_iter": self.solver.max_iter,
                "fd_step": self.solver.fd_step,
                "damping": self.solver.damping,
            },
            "initial_state": self.initial_state,
            "inputs": self.inputs,
            "label": self.label or self.method,
        }
        out.update(self.extras)
        return out

    def validate_combination(self):
        key = (self.model_name, self.method)
        if key not in SUPPORTED:
            raise ConfigError(
                f"method '{self.method}' is not supported for model '{self.model_name}'")
        if self.map_name not in SUPPORTED[key]:
            raise ConfigError(
                f"map '{self.map_name}' is not supported for {self.model_name}/{self.method}")


@dataclass
class Binding:
    """Everything needed to run and post-process one configured simulation."""

    config: RunConfig
    model: object
    stepper: object
    x0: np.ndarray
    columns: list
    energy: object
    constraint_residual: object
    meta: dict = field(default_factory=dict)

    def step_map(self):
        def step(x):
            return self.stepper(np.asarray(x, dtype=float), None).next_state
        return step


def _theta_of(cfg: RunConfig) -> float:
    theta = float(cfg.map_params.get("theta", 0.5))
    if not 0.0 <= theta <= 1.0:
        raise ConfigError("theta must lie in [0, 1]")
    return theta


def _lift_for(cfg: RunConfig):
    theta = _theta_of(cfg)
    if cfg.map_name == "cotangent_midpoint" or theta == 0.5:
        return cotangent_lift_midpoint()
    return cotangent_lift_generic(theta_map(theta))


def bind(cfg: RunConfig) -> Binding:
    """Wire model, method and map into a stepper with state layout metadata."""
    cfg.validate_combination()
    try:
        model = build_model(cfg.model_name, cfg.model_params)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc))
    meta = {"self_start": {"used": False}}

    if cfg.model_name == "vortices":
        return _bind_vortices(cfg, model, meta)
    if cfg.model_name == "rigid_body":
        return _bind_rigid_body(cfg, model, meta)
    if cfg.model_name in ("ph_open", "ph_closed"):
        return _bind_port_hamiltonian(cfg, model, meta)
    if cfg.model_name == "nonholonomic_particle":
        return _bind_nonholonomic(cfg, model, meta)
    raise ConfigError(f"unknown model '{cfg.model_name}'")


def _vortex_columns(n, with_momenta):
    cols = [f"x{j+1}" for j in range(n)] + [f"y{j+1}" for j in range(n)]
    if with_momenta:
        cols += [f"px{j+1}" for j in range(n)] + [f"py{j+1}" for j in range(n)]
    return cols


def _bind_vortices(cfg: RunConfig, model: VortexSystem, meta) -> Binding:
    n = model.n
    q_default = VortexSystem.leapfrog_quartet()[1] if n == 4 else None
    state = cfg.initial_state
    if state is None:
        if q_default is None:
            raise ConfigError("initial_state required for this vortex count")
        q0 = q_default
    else:
        state = np.asarray(state, dtype=float)
        if state.size == 2 * n:
            q0 = state
        elif state.size == 4 * n and cfg.method in ("method1", "lagrangian_midpoint"):
            q0 = state[:2 * n]
        else:
            raise ConfigError("vortex initial_state must have 2n (positions) entries")

    if cfg.method in ("method1", "lagrangian_midpoint"):
        if cfg.initial_state is not None and np.asarray(cfg.initial_state).size == 4 * n:
            x0 = np.asarray(cfg.initial_state, dtype=float)
        else:
            x0 = model.phase_state(q0)
            meta["lifted_initial_momenta"] = True
        if cfg.method == "method1":
            stepper = make_method1_stepper(model.implicit_system(), _lift_for(cfg),
                                           cfg.h, cfg.solver)
        else:
            if _theta_of(cfg) != 0.5:
                raise ConfigError("lagrangian_midpoint requires theta = 0.5")
            stepper = make_lagrangian_midpoint_stepper(model.lagrangian(), cfg.h, cfg.solver)
        return Binding(cfg, model, stepper, x0, _vortex_columns(n, True),
                       lambda x: model.energy(x[:2 * n]),
                       lambda x: float(np.max(np.abs(x[2 * n:] - model.alpha(x[:2 * n])))),
                       meta)

    if cfg.method == "method2":
        stepper = make_method2_stepper(model.reduced_stabilized(),
                                       theta_map(_theta_of(cfg)), cfg.h, cfg.solver)
    else:  # rk2
        stepper = make_rk2_stepper(model.field, cfg.h)
    return Binding(cfg, model, stepper, np.asarray(q0, dtype=float),
                   _vortex_columns(n, False), model.energy, lambda x: 0.0, meta)


def _bind_rigid_body(cfg: RunConfig, model: RigidBody, meta) -> Binding:
    x0 = np.asarray(cfg.initial_state, dtype=float) if cfg.initial_state is not None \
        else RigidBody.default_state()
    if x0.shape != (3,):
        raise ConfigError("rigid body state must be a 3-vector")
    if abs(np.linalg.norm(x0) - 1.0) > 1e-10:
        raise ConfigError("rigid body state must lie on the unit sphere")
    if cfg.method == "method1":
        rd = sphere_midpoint_map() if cfg.map_name == "sphere_midpoint" else sphere_exp_map()
        stepper = make_method1_stepper(model.implicit_system(), rd, cfg.h, cfg.solver)
    else:
        stepper = make_rk2_stepper(model.field, cfg.h)
    return Binding(cfg, model, stepper, x0, ["xi1", "xi2", "xi3"],
                   model.hamiltonian,
                   lambda x: float(abs(np.linalg.norm(x) - 1.0)), meta)


def _bind_port_hamiltonian(cfg: RunConfig, model: PortHamiltonianSystem, meta) -> Binding:
    n = model.n
    if cfg.initial_state is not None:
        x0 = np.asarray(cfg.initial_state, dtype=float)
        if x0.size != n:
            raise ConfigError(f"initial_state must have {n} entries")
    elif n == 2:
        x0 = np.array([1.0, 0.0])
    else:
        x0 = np.concatenate([np.zeros(n // 2), np.array([1.0, 2.0, 0.0])])
    rd = theta_map(_theta_of(cfg))
    isys = model.implicit_system()
    if model.mode == "open":
        if cfg.inputs is None:
            seq = lambda k: np.zeros(model.m)
        elif isinstance(cfg.inputs, list) and cfg.inputs and isinstance(cfg.inputs[0], list):
            seq = [np.asarray(u, dtype=float) for u in cfg.inputs]
            if len(seq) < cfg.steps:
                raise ConfigError("inputs sequence shorter than the number of steps")
        else:
            const = np.asarray(cfg.inputs, dtype=float)
            seq = lambda k: const
        stepper = make_method1_stepper(isys, rd, cfg.h, cfg.solver, input_sequence=seq)
    else:
        stepper = make_method1_stepper(isys, rd, cfg.h, cfg.solver)
    constraint_fn = (lambda x: float(np.max(np.abs(model.output(x))))) \
        if model.mode == "closed" else (lambda x: 0.0)
    return Binding(cfg, model, stepper, x0, [f"x{j+1}" for j in range(n)],
                   model.hamiltonian, constraint_fn, meta)


def _bind_nonholonomic(cfg: RunConfig, model: NonholonomicSystem, meta) -> Binding:
    n = model.dim_q
    if cfg.initial_state is not None:
        x0 = np.asarray(cfg.initial_state, dtype=float)
        if x0.size != 2 * n:
            raise ConfigError(f"initial_state must have {2 * n} entries (q, p)")
    else:
        x0 = np.concatenate([np.zeros(n), np.array([1.0, 2.0, 0.0])])
    if cfg.method in ("method2", "rk2"):
        resid0 = float(np.max(np.abs(model.constraint_value(x0))))
        if resid0 > cfg.solver.newton_tol * 10:
            raise ConfigError("initial state violates the velocity constraint; "
                              "project it first")
    if cfg.method == "method1":
        stepper = make_method1_stepper(model.implicit_system(), _lift_for(cfg),
                                       cfg.h, cfg.solver)
    elif cfg.method == "method2":
        theta = _theta_of(cfg)
        base_lift = cotangent_lift_midpoint() if theta == 0.5 \
            else cotangent_lift_generic(theta_map(theta))
        from .maps import projected_map
        rd0 = projected_map(base_lift, model.project_state)
        stepper = make_method2_stepper(model.stabilized(), rd0, cfg.h, cfg.solver)
    else:
        stepper = make_rk2_stepper(model.resolved_field, cfg.h)
    cols = [f"q{j+1}" for j in range(n)] + [f"p{j+1}" for j in range(n)]
    return Binding(cfg, model, stepper, x0, cols, model.hamiltonian,
                   lambda x: float(np.max(np.abs(model.constraint_value(x)))), meta)


# ---------------------------------------------------------------------------
# CSV helpers


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def trajectory_rows(traj, binding: Binding):
    rows = []
    for k in range(len(traj)):
        state = traj.states[k]
        row = [str(k), _fmt(traj.times[k])]
        row += [_fmt(v) for v in state]
        row.append(_fmt(binding.energy(state)))
        row.append(_fmt(binding.constraint_residual(state)))
        row.append(str(int(traj.newton_iters[k])))
        rows.append(row)
    return rows


def simulate_to_csv(cfg: RunConfig, out_path: str) -> dict:
    binding = bind(cfg)
    columns = ["step", "t"] + binding.columns + ["H", "constraint_residual", "newton_iters"]
    meta = {"config": cfg.effective_dict(), **binding.meta}
    meta_path = os.path.splitext(out_path)[0] + ".meta.json"
    try:
        traj = run_trajectory(binding.stepper, binding.x0, cfg.h, cfg.steps)
    except StepFailure as exc:
        # write whatever completed (fresh stepper: closures carry state), then re-raise
        fresh = bind(cfg)
        partial = run_trajectory(fresh.stepper, fresh.x0, cfg.h, exc.step_index)
        write_csv(out_path, columns, trajectory_rows(partial, fresh))
        meta["error"] = {"step": exc.step_index, "message": str(exc.cause)}
        with open(meta_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        raise
    write_csv(out_path, columns, trajectory_rows(traj, binding))
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return meta


# ---------------------------------------------------------------------------
# check implementations


def _probe_state(binding: Binding):
    return binding.x0


def check_symplectic(cfg: RunConfig) -> dict:
    if cfg.method not in ("method1", "lagrangian_midpoint"):
        raise ConfigError("symplectic check applies to method1 / lagrangian_midpoint")
    binding = bind(cfg)
    n = binding.x0.size // 2
    form = diagnostics.TwoForm.canonical(n)
    probe = diagnostics.FlowProbe(binding.step_map(), _probe_state(binding))
    residual = diagnostics.symplectic_check(probe, form)
    threshold = float(cfg.extras.get("threshold", 1e-6))
    return {"test": "symplectic", "residual": residual, "threshold": threshold,
            "pass": bool(residual <= threshold)}


def check_dalpha(cfg: RunConfig) -> dict:
    if cfg.model_name != "vortices" or cfg.method != "method2":
        raise ConfigError("dalpha check applies to vortices with method2")
    binding = bind(cfg)
    model: VortexSystem = binding.model
    form = diagnostics.TwoForm(matrix=model.dalpha_form())
    probe = diagnostics.FlowProbe(binding.step_map(), _probe_state(binding))
    residual = diagnostics.symplectic_check(probe, form)
    threshold = float(cfg.extras.get("threshold", 1e-6))
    return {"test": "dalpha", "residual": residual, "threshold": threshold,
            "theta": _theta_of(cfg), "pass": bool(residual <= threshold)}


def check_energy(cfg: RunConfig) -> dict:
    binding = bind(cfg)
    traj = run_trajectory(binding.stepper, binding.x0, cfg.h, cfg.steps,
                          energy=binding.energy)
    drift = diagnostics.energy_drift(traj)
    # default calibrated by oracle runs: symplectic vortex schemes at h = 1.0
    # show |slope| ~ 8e-10 once the horizon reaches ~2000 steps
    threshold = float(cfg.extras.get("threshold", 1e-9))
    return {"test": "energy", "residual": abs(drift.slope), "threshold": threshold,
            "max_abs_drift": drift.max_abs, "pass": bool(abs(drift.slope) <= threshold)}


def check_constraints(cfg: RunConfig) -> dict:
    binding = bind(cfg)
    traj = run_trajectory(binding.stepper, binding.x0, cfg.h, cfg.steps,
                          constraint_residual=binding.constraint_residual)
    worst = float(np.max(traj.constraint_residuals))
    threshold = float(cfg.extras.get("threshold", 10.0 * cfg.solver.newton_tol))
    return {"test": "constraints", "residual": worst, "threshold": threshold,
            "pass": bool(worst <= threshold)}


def check_order(cfg: RunConfig) -> dict:
    expected = float(cfg.extras.get("expected_order", 2))
    ladder = [cfg.h / (2.0 ** k) for k in range(3)]
    horizon = 4.0 * cfg.h

    def run_for(h):
        sub = RunConfig(**{**cfg.__dict__, "h": h, "steps": int(round(horizon / h))})
        b = bind(sub)
        traj = run_trajectory(b.stepper, b.x0, h, int(round(horizon / h)))
        return traj.states[-1]

    reference = run_for(ladder[-1] / 20.0)
    slope, monotone = diagnostics.convergence_order(run_for, reference, ladder)
    ok = bool(abs(slope - expected) <= 0.1 and monotone)
    return {"test": "order", "residual": abs(slope - expected), "threshold": 0.1,
            "slope": slope, "expected": expected, "monotone": monotone, "pass": ok}


def check_dirac(cfg: RunConfig) -> dict:
    model = build_model(cfg.model_name, cfg.model_params)
    rng = np.random.default_rng(7)
    details = []
    ok = True
    if isinstance(model, VortexSystem):
        kind = linear_dirac.classify(
            linear_dirac.from_two_form(model.dalpha_form()).subspace)
        details.append({"point": "constant", "kind": kind.value, "expected": "dirac"})
        ok = kind is linear_dirac.SubspaceKind.DIRAC
    elif isinstance(model, RigidBody):
        for _ in range(5):
            xi = rng.normal(size=3)
            xi /= np.linalg.norm(xi)
            kind = linear_dirac.classify(
                linear_dirac.from_bivector(model.bivector(xi)).subspace)
            details.append({"point": xi.tolist(), "kind": kind.value, "expected": "dirac"})
            ok = ok and kind is linear_dirac.SubspaceKind.DIRAC
    elif isinstance(model, PortHamiltonianSystem):
        for _ in range(5):
            x = rng.normal(size=model.n)
            k_open = linear_dirac.classify(model.port_subspace(x))
            k_closed = linear_dirac.classify(model.closed_port_subspace(x))
            details.append({"point": x.tolist(), "ports": k_open.value,
                            "closed": k_closed.value})
            ok = ok and k_open in (linear_dirac.SubspaceKind.COISOTROPIC,
                                   linear_dirac.SubspaceKind.DIRAC)
            ok = ok and k_closed is linear_dirac.SubspaceKind.DIRAC
    elif isinstance(model, NonholonomicSystem):
        ph = model.as_closed_port_hamiltonian()
        for _ in range(5):
            x = rng.normal(size=2 * model.dim_q)
            k_open = linear_dirac.classify(ph.port_subspace(x))
            k_closed = linear_dirac.classify(ph.closed_port_subspace(x))
            details.append({"point": x.tolist(), "ports": k_open.value,
                            "closed": k_closed.value})
            ok = ok and k_open in (linear_dirac.SubspaceKind.COISOTROPIC,
                                   linear_dirac.SubspaceKind.DIRAC)
            ok = ok and k_closed is linear_dirac.SubspaceKind.DIRAC
    else:
        raise ConfigError("dirac check is not defined for this model")
    return {"test": "dirac", "residual": 0.0 if ok else 1.0, "threshold": 0.5,
            "details": details, "pass": bool(ok)}


def _implicit_system_for(cfg: RunConfig):
    model = build_model(cfg.model_name, cfg.model_params)
    if isinstance(model, VortexSystem):
        isys = model.implicit_system()
        n = 2 * model.n
        seeds = [model.phase_state(VortexSystem.leapfrog_quartet()[1])] if model.n == 4 \
            else [model.phase_state(np.arange(1.0, n + 1.0))]
        return model, isys, seeds
    if isinstance(model, NonholonomicSystem):
        isys = model.implicit_system()
        seeds = [model.project_state(np.concatenate([np.zeros(3), [1.0, 2.0, 0.0]]))]
        return model, isys, seeds
    if isinstance(model, PortHamiltonianSystem):
        return model, model.implicit_system(), None
    if isinstance(model, RigidBody):
        return model, model.implicit_system(), None
    raise ConfigError("constraint algorithm is not defined for this model")


def check_constraint_algorithm(cfg: RunConfig) -> dict:
    _, isys, seeds = _implicit_system_for(cfg)
    stab = run_algorithm(isys, max_levels=int(cfg.extras.get("max_levels", 10)),
                         seeds=seeds)
    expected = cfg.extras.get("expected_steps")
    ok = stab.terminated and (expected is None or stab.steps_taken == int(expected))
    return {"test": "constraint-algorithm", "terminated": stab.terminated,
            "steps_taken": stab.steps_taken,
            "residual": 0.0 if ok else 1.0, "threshold": 0.5, "pass": bool(ok)}


CHECKS = {
    "symplectic": check_symplectic,
    "dalpha": check_dalpha,
    "energy": check_energy,
    "constraints": check_constraints,
    "order": check_order,
    "dirac": check_dirac,
    "constraint-algorithm": check_constraint_algorithm,
}


# ---------------------------------------------------------------------------
# compare


def compare_to_csv(configs, out_path: str) -> None:
    if not configs:
        raise ConfigError("compare needs at least one config")
    base = configs[0]
    for other in configs[1:]:
        if other.model_name != base.model_name or other.model_params != base.model_params:
            raise ConfigError("compare configs must share the model")
        if other.h != base.h or other.steps != base.steps:
            raise ConfigError("compare configs must share h and steps")
        if (other.initial_state is None) != (base.initial_state is None) or (
                base.initial_state is not None
                and not np.array_equal(np.asarray(other.initial_state),
                                       np.asarray(base.initial_state))):
            raise ConfigError("compare configs must share the initial state")

    labels = [c.label or c.method for c in configs]
    if len(set(labels)) != len(labels):
        raise ConfigError("compare configs need distinct labels")

    def run_one(cfg):
        binding = bind(cfg)
        traj = run_trajectory(binding.stepper, binding.x0, cfg.h, cfg.steps,
                              energy=binding.energy)
        return diagnostics.energy_drift(traj).series

    threads = int(os.environ.get("DIRACFLOW_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            series = list(pool.map(run_one, configs))
    else:
        series = [run_one(c) for c in configs]

    columns = ["step", "t"] + labels
    rows = []
    for k in range(base.steps + 1):
        row = [str(k), _fmt(k * base.h)] + [_fmt(s[k]) for s in series]
        rows.append(row)
    write_csv(out_path, columns, rows)


# ---------------------------------------------------------------------------
# entry point


def _load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return RunConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracflow",
                                     description="geometric integrators from discretization maps")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one configured simulation to CSV")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--dump-config", action="store_true",
                       help="print the effective config as JSON and exit")

    p_check = sub.add_parser("check", help="run a named verification, print JSON")
    p_check.add_argument("test", choices=CHECK_NAMES)
    p_check.add_argument("--config", required=True)

    p_cmp = sub.add_parser("compare", help="energy-drift comparison across methods")
    p_cmp.add_argument("--configs", nargs="+", required=True)
    p_cmp.add_argument("--out", required=True)

    p_con = sub.add_parser("constraint", help="constraint-algorithm report as JSON")
    p_con.add_argument("--config", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0

    try:
        if args.command == "simulate":
            cfg = _load_config(args.config)
            cfg.validate_combination()
            if args.dump_config:
                print(json.dumps(cfg.effective_dict(), indent=2, sort_keys=True))
                return EXIT_OK
            simulate_to_csv(cfg, args.out)
            return EXIT_OK

        if args.command == "check":
            cfg = _load_config(args.config)
            report = CHECKS[args.test](cfg)
            print(json.dumps(report, indent=2, sort_keys=True))
            return EXIT_OK if report["pass"] else EXIT_CHECK_FAILED

        if args.command == "compare":
            configs = [_load_config(p) for p in args.configs]
            for c in configs:
                c.validate_combination()
            compare_to_csv(configs, args.out)
            return EXIT_OK

        if args.command == "constraint":
            cfg = _load_config(args.config)
            _, isys, seeds = _implicit_system_for(cfg)
            stab = run_algorithm(isys, max_levels=int(cfg.extras.get("max_levels", 10)),
                                 seeds=seeds)
            report = {
                "terminated": stab.terminated,
                "steps_taken": stab.steps_taken,
                "levels": [
                    {"index": lv.index, "constraint_count": len(lv.constraints),
                     "multiplier_rank": lv.multiplier_rank,
                     "new_constraints": lv.new_constraint_count}
                    for lv in stab.levels
                ],
                "final_constraint_count": len(stab.final_constraints),
            }
            print(json.dumps(report, indent=2, sort_keys=True))
            return EXIT_OK

    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonError, StepFailure, MapDomainError, VortexCollisionError,
            EmptyConstraintSetError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
