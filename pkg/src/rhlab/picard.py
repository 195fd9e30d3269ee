"""Time-slab fixed-point driver.

Each slab [t0, t0 + T] is solved by iterating the linearized subproblems to a
fixed point: density by continuity with the previous velocity iterate,
intensity by linearized transport with scattering-in from the previous
intensity iterate, velocity by the implicit momentum step.  Convergence is
measured by the slab-sup energy of consecutive iterate differences
(radiation L2 + density L2 + sqrt(rho)-weighted velocity L2); when the
far-field density vanishes the L^{3/2} density term joins the metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, IterationError, ParameterError
from .fluid import (VelocityHistory, continuity_step_characteristics,
                    continuity_step_fv, heat_smooth, momentum_step)
from .grid import Grids, check_radiation, check_scalar, check_vector
from .norms import NormSettings, lp_norm, mixed_radiation_norm
from .physics import (CoefficientModel, EquationOfState, PhysicalConstants,
                      ViscosityParams, pressure)
from .transport import free_streaming_step, momentum_source, substep_transport, \
    transport_cfl_limit

Array = np.ndarray

_GAMMA_FLOOR = 1e-28


@dataclass(frozen=True, eq=False)
class State:
    """Full phase-space state (I, rho, u) at one instant."""

    I: Array
    rho: Array
    u: Array

    def validate(self, grids: Grids) -> "State":
        check_radiation(self.I, grids)
        check_scalar(self.rho, grids.spatial)
        check_vector(self.u, grids.spatial)
        if not (np.all(np.isfinite(self.I)) and np.all(np.isfinite(self.rho))
                and np.all(np.isfinite(self.u))):
            raise DomainError("state fields must be finite")
        if np.any(self.rho < 0) or np.any(self.I < 0):
            raise DomainError("state requires rho >= 0 and I >= 0")
        return self


@dataclass(frozen=True)
class SlabConfig:
    """Slab length, inner step, and fixed-point iteration policy."""

    slab_length: float
    dt: float
    max_iters: int = 30
    gamma_tol: float = 1e-8
    halve_on_stall: bool = True
    max_halvings: int = 2
    transport_cfl: float = 0.9
    continuity: str = "fv"           # "fv" | "characteristics"

    def __post_init__(self):
        if not 0 < self.dt <= self.slab_length:
            raise ParameterError(f"need 0 < dt <= slab_length, got dt={self.dt}, "
                                 f"slab_length={self.slab_length}")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.gamma_tol <= 0:
            raise ParameterError("gamma_tol must be positive")
        if self.continuity not in ("fv", "characteristics"):
            raise ParameterError(f"unknown continuity scheme {self.continuity!r}")


@dataclass
class PicardDiagnostics:
    """Per-iteration contraction record for one slab."""

    gamma_history: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    slab_length: float = 0.0
    halvings: int = 0


@dataclass(frozen=True)
class DeltaSchedule:
    """Strictly decreasing positive density lifts for vacuum regularization."""

    deltas: tuple
    extrapolate: bool = False

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        object.__setattr__(self, "deltas", d)
        if len(d) < 1 or any(x <= 0 for x in d):
            raise ParameterError("delta schedule must contain positive values")
        if any(b >= a for a, b in zip(d, d[1:])):
            raise ParameterError("delta schedule must be strictly decreasing")


@dataclass
class ContinuationReport:
    deltas: list
    differences: list
    monotone: bool
    warning: str | None = None
    extrapolated: bool = False


@dataclass
class Trajectory:
    """Snapshot sequence of a chained-slab run."""

    times: list
    states: list
    diagnostics: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# contraction metric
# ---------------------------------------------------------------------------

_metric_settings = NormSettings(q=4.0)


def gamma_increment(prev_state: State, next_state: State, grids: Grids,
                    rho_weight: Array | None = None,
                    include_l32: bool = False) -> float:
    """Squared-energy distance of two states at one instant:
    ||dI||^2_{L2(phase; L2)} + |d rho|_2^2 + |sqrt(rho_w) du|_2^2
    (+ |d rho|_{3/2}^2 when the far-field density vanishes)."""
    if rho_weight is None:
        rho_weight = next_state.rho
    dI = next_state.I - prev_state.I
    drho = next_state.rho - prev_state.rho
    du = np.sqrt(np.maximum(rho_weight, 0.0))[None] * (next_state.u - prev_state.u)
    total = mixed_radiation_norm(dI, "L2", grids, _metric_settings) ** 2
    total += lp_norm(drho, 2.0, grids.spatial) ** 2
    total += lp_norm(du, 2.0, grids.spatial) ** 2
    if include_l32:
        total += lp_norm(drho, 1.5, grids.spatial) ** 2
    return float(total)


def gamma_metric(prev_states: list, next_states: list, grids: Grids,
                 include_l32: bool = False) -> float:
    """Sup over slab snapshots of gamma_increment."""
    if len(prev_states) != len(next_states):
        raise ParameterError("iterate trajectories must share snapshot times")
    worst = 0.0
    for p, q in zip(prev_states, next_states):
        worst = max(worst, gamma_increment(p, q, grids, include_l32=include_l32))
    return worst


# ---------------------------------------------------------------------------
# slab iteration
# ---------------------------------------------------------------------------

def _slab_times(t0: float, T: float, dt: float) -> np.ndarray:
    n = max(1, int(np.ceil(T / dt - 1e-12)))
    return t0 + np.linspace(0.0, T, n + 1)


def _initial_iterate(state0: State, grids: Grids, consts: PhysicalConstants,
                     cfg: SlabConfig, times: np.ndarray) -> list:
    """Iterate 0: frozen density; velocity mollified by explicit heat flow;
    intensity advanced by collisionless free streaming."""
    grid = grids.spatial
    limit = transport_cfl_limit(grids, consts.c)
    states = [state0]
    for j in range(1, times.size):
        dt = float(times[j] - times[j - 1])
        u = heat_smooth(states[-1].u, grid, dt)
        I = states[-1].I
        n_sub = max(1, int(np.ceil(dt / (cfg.transport_cfl * limit)))
                    if np.isfinite(limit) else 1)
        for _ in range(n_sub):
            I = free_streaming_step(I, grids, dt / n_sub, consts.c)
        states.append(State(I=I, rho=state0.rho, u=u))
    return states


def _iterate_once(prev: list, state0: State, model: CoefficientModel, grids: Grids,
                  visc: ViscosityParams, eos: EquationOfState,
                  consts: PhysicalConstants, cfg: SlabConfig,
                  times: np.ndarray) -> list:
    """One sweep of the linearized system over the slab, driven by the
    previous iterate (w, psi) = (u^k, I^k)."""
    grid = grids.spatial
    dim = grid.dim
    p_ref = eos.reference_pressure(grid.farfield_rho) if grid.boundary == "farfield" else 0.0
    rel_times = times - times[0]
    w_hist = VelocityHistory(rel_times, [s.u for s in prev])

    new_states = [state0]
    for j in range(1, times.size):
        dt = float(times[j] - times[j - 1])
        t_new = float(times[j])
        if cfg.continuity == "fv":
            rho_new = continuity_step_fv(new_states[-1].rho, prev[j - 1].u, dt, grid)
        else:
            rho_new = continuity_step_characteristics(
                state0.rho, w_hist, float(rel_times[j]), grid)
        I_new = substep_transport(new_states[-1].I, prev[j - 1].I, rho_new, model,
                                  grids, dt, float(times[j - 1]), consts.c,
                                  cfl=cfg.transport_cfl)
        p_new = pressure(eos, rho_new, grid)
        f_rad = momentum_source(I_new, rho_new, model, grids, t_new, consts.c)[:dim]
        u_new = momentum_step(new_states[-1].u, rho_new, prev[j].u, p_new, f_rad,
                              visc, dt, grid, p_ref=p_ref)
        new_states.append(State(I=I_new, rho=rho_new, u=u_new))
    return new_states


def _run_picard(state0: State, model, grids, visc, eos, consts, cfg: SlabConfig,
                t0: float, T: float):
    """Picard loop over one slab of length T.  Returns (states, diag, stalled)."""
    include_l32 = grids.spatial.boundary == "farfield" and grids.spatial.farfield_rho == 0.0
    times = _slab_times(t0, T, cfg.dt)
    diag = PicardDiagnostics(slab_length=T)
    prev = _initial_iterate(state0, grids, consts, cfg, times)
    gamma1 = None
    stalled = False
    for k in range(1, cfg.max_iters + 1):
        current = _iterate_once(prev, state0, model, grids, visc, eos, consts, cfg, times)
        gamma = gamma_metric(prev, current, grids, include_l32=include_l32)
        diag.gamma_history.append(gamma)
        diag.iterations = k
        if k >= 2:
            prev_gamma = diag.gamma_history[-2]
            if prev_gamma > 0.0:
                ratio = gamma / prev_gamma
                diag.contraction_ratios.append(ratio)
                if ratio >= 1.0:
                    stalled = True
        if gamma1 is None:
            gamma1 = gamma
        prev = current
        if gamma <= _GAMMA_FLOOR or gamma <= cfg.gamma_tol * gamma1:
            diag.converged = True
            break
        if stalled:
            break
    return prev, diag, stalled or not diag.converged


def solve_slab(state0: State, model: CoefficientModel, grids: Grids,
               visc: ViscosityParams, eos: EquationOfState,
               consts: PhysicalConstants, cfg: SlabConfig,
               t0: float = 0.0) -> tuple[State, PicardDiagnostics]:
    """Iterate the linearized system on one slab until the contraction metric
    drops below gamma_tol relative to its first value.

    On stall the slab is halved (at most ``cfg.max_halvings`` times when
    ``halve_on_stall``); persistent non-convergence raises IterationError
    carrying the last diagnostics.
    """
    states, diag = solve_slab_full(state0, model, grids, visc, eos, consts, cfg, t0)
    return states[-1], diag


def solve_slab_full(state0: State, model, grids, visc, eos, consts,
                    cfg: SlabConfig, t0: float = 0.0):
    """Like solve_slab but returns every inner-step snapshot of the slab."""
    state0 = state0.validate(grids)
    T = cfg.slab_length
    attempts = cfg.max_halvings + 1 if cfg.halve_on_stall else 1
    last_diag = None
    for attempt in range(attempts):
        sub_cfg = replace(cfg, slab_length=T, dt=min(cfg.dt, T))
        states, diag, failed = _run_picard(state0, model, grids, visc, eos, consts,
                                           sub_cfg, t0, T)
        diag.halvings = attempt
        last_diag = diag
        if not failed:
            return states, diag
        T *= 0.5
    raise IterationError(
        f"fixed-point iteration failed to converge after {attempts - 1} halvings",
        diagnostics=last_diag)


def solve(state0: State, model: CoefficientModel, grids: Grids,
          visc: ViscosityParams, eos: EquationOfState, consts: PhysicalConstants,
          cfg: SlabConfig, t_final: float) -> Trajectory:
    """Chain slab solves over [0, t_final], emitting every inner snapshot."""
    if t_final <= 0:
        raise ParameterError("t_final must be positive")
    state0 = state0.validate(grids)
    traj = Trajectory(times=[0.0], states=[state0])
    t = 0.0
    slab_len = cfg.slab_length
    while t < t_final - 1e-12 * t_final:
        T = min(slab_len, t_final - t)
        sub_cfg = replace(cfg, slab_length=T, dt=min(cfg.dt, T))
        states, diag = solve_slab_full(traj.states[-1], model, grids, visc, eos,
                                       consts, sub_cfg, t0=t)
        times = np.linspace(t, t + diag.slab_length, len(states))
        traj.times.extend(float(s) for s in times[1:])
        traj.states.extend(states[1:])
        traj.diagnostics.append(diag)
        t += diag.slab_length
        # reuse a halved slab length for subsequent slabs instead of rediscovering it
        slab_len = min(cfg.slab_length, max(diag.slab_length, 1e-12))
    return traj


# ---------------------------------------------------------------------------
# vacuum regularization by density lift
# ---------------------------------------------------------------------------

def _lift_grids(grids: Grids, delta: float) -> Grids:
    grid = grids.spatial
    if grid.boundary != "farfield":
        return grids
    lifted = replace(grid, farfield_rho=grid.farfield_rho + delta)
    return Grids(spatial=lifted, freq=grids.freq, ang=grids.ang)


def delta_continuation(state0: State, model: CoefficientModel, grids: Grids,
                       visc: ViscosityParams, eos: EquationOfState,
                       consts: PhysicalConstants, cfg: SlabConfig,
                       schedule: DeltaSchedule,
                       t0: float = 0.0) -> tuple[State, ContinuationReport]:
    """Solve one slab with the initial density lifted by each delta in the
    schedule; report pairwise differences of the resulting (rho, u) states.

    Differences must decrease along the schedule; a non-monotone sequence is
    reported as a warning, never an error.  With ``extrapolate`` the delta -> 0
    state is estimated by first-order Richardson extrapolation of the last two
    solutions.
    """
    finals = []
    for delta in schedule.deltas:
        g = _lift_grids(grids, delta)
        lifted = State(I=state0.I, rho=state0.rho + delta, u=state0.u)
        final, _ = solve_slab(lifted, model, g, visc, eos, consts, cfg, t0)
        finals.append(final)

    diffs = []
    for a, b in zip(finals, finals[1:]):
        d = np.sqrt(lp_norm(a.rho - b.rho, 2.0, grids.spatial) ** 2
                    + lp_norm(a.u - b.u, 2.0, grids.spatial) ** 2)
        diffs.append(float(d))
    monotone = all(b < a for a, b in zip(diffs, diffs[1:])) if len(diffs) > 1 else True
    warning = None if monotone else "delta-continuation differences are not decreasing"

    result = finals[-1]
    extrapolated = False
    if schedule.extrapolate and len(finals) >= 2:
        d_prev, d_last = schedule.deltas[-2], schedule.deltas[-1]
        w = d_last / (d_prev - d_last)
        s_prev, s_last = finals[-2], finals[-1]
        result = State(I=s_last.I + w * (s_last.I - s_prev.I),
                       rho=np.maximum(s_last.rho + w * (s_last.rho - s_prev.rho), 0.0),
                       u=s_last.u + w * (s_last.u - s_prev.u))
        extrapolated = True
    report = ContinuationReport(deltas=list(schedule.deltas), differences=diffs,
                                monotone=monotone, warning=warning,
                                extrapolated=extrapolated)
    return result, report
