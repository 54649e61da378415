"""Monotone truncated-approximation scheme and blow-up / convergence classification.

Level n solves the linear problem

    u_t + A u = lam u_{n-1} / (r^{2s} + 1/n) + w(r) u_{n-1}^p + T_n(f),   u(0) = T_n(u_0),

with every nonlinear and potential term lagged from level n - 1, so each
level is one implicit Euler sweep with a single LU factorisation of I + dt A.
Level 0 keeps only T_1(f) and T_1(u_0).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .constants import FracParams, alpha_of_lambda, lambda_star
from .discrete import DiscreteOperator, RadialGrid, assemble_operator, hardy_potential
from .errors import ConvergenceError, PreconditionError


@dataclass(frozen=True)
class Profile:
    """Radial profile: ``zero``, ``constant``, ``power`` (amp r^{-exponent}),
    ``indicator`` (amp on r < radius), ``bump`` (smooth, supported in r < radius)."""

    kind: str = "zero"
    amplitude: float = 0.0
    exponent: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "power", "indicator", "bump"):
            raise PreconditionError(f"unknown profile kind {self.kind!r}")
        if self.kind in ("indicator", "bump") and not self.radius > 0.0:
            raise PreconditionError("profile radius must be positive")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        a = self.amplitude
        if self.kind == "zero":
            return np.zeros_like(r)
        if self.kind == "constant":
            return np.full_like(r, a)
        if self.kind == "power":
            return a * r ** (-self.exponent)
        if self.kind == "indicator":
            return np.where(r < self.radius, a, 0.0)
        x = np.clip(r / self.radius, 0.0, 1.0)
        out = np.zeros_like(r)
        inside = x < 1.0
        out[inside] = a * np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return out

    @classmethod
    def parse(cls, text: str) -> "Profile":
        """``zero`` | ``constant:A`` | ``power:A:beta`` | ``indicator:A:r`` | ``bump:A:r``."""
        parts = [p.strip() for p in str(text).split(":")]
        kind = parts[0]
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise PreconditionError(f"bad profile {text!r}") from exc
        expected = {"zero": 0, "constant": 1, "power": 2, "indicator": 2, "bump": 2}
        if kind not in expected or len(nums) != expected[kind]:
            raise PreconditionError(f"bad profile {text!r}")
        if kind == "zero":
            return cls("zero")
        if kind == "constant":
            return cls("constant", nums[0])
        if kind == "power":
            return cls("power", nums[0], exponent=nums[1])
        return cls(kind, nums[0], radius=nums[1])

    def describe(self) -> str:
        if self.kind == "zero":
            return "zero"
        if self.kind == "constant":
            return f"constant:{self.amplitude!r}"
        if self.kind == "power":
            return f"power:{self.amplitude!r}:{self.exponent!r}"
        return f"{self.kind}:{self.amplitude!r}:{self.radius!r}"


@dataclass(frozen=True)
class EvolutionConfig:
    lam: float = 0.0
    T_final: float = 1.0
    dt: float | None = None
    p: float | None = None
    f: Profile = field(default_factory=Profile)
    u0: Profile = field(default_factory=Profile)
    probe_radius: float = 0.5
    probe_time: float = 0.5
    n_schedule: tuple = (1, 2, 4, 8, 16, 32, 64)
    all_levels: bool = True
    nonlinear_weight: str = "none"
    blowup_threshold: float = 1e8
    growth_factor: float = 10.0
    growth_window: int = 3
    conv_rtol: float = 1e-3
    conv_window: int = 2
    norm_rtol: float = 1e-2

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", self.T_final / 400.0)
        if not self.T_final > 0.0:
            raise PreconditionError("T_final must be positive")
        if not 0.0 < self.dt < self.T_final:
            raise PreconditionError("need 0 < dt < T_final")
        if not 0.0 < self.probe_time < self.T_final:
            raise PreconditionError("probe time must lie in (0, T_final)")
        if self.lam < 0.0:
            raise PreconditionError("lambda must be nonnegative")
        if self.p is not None and not self.p >= 1.0:
            raise PreconditionError("semilinear power must be >= 1")
        sched = tuple(int(n) for n in self.n_schedule)
        if not sched or any(n < 1 for n in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
            raise PreconditionError("n_schedule must be a nonempty increasing list of positive integers")
        object.__setattr__(self, "n_schedule", sched)
        if self.nonlinear_weight not in ("none", "hardy"):
            raise PreconditionError("nonlinear_weight must be 'none' or 'hardy'")

    @property
    def steps(self) -> int:
        return int(round(self.T_final / self.dt))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.steps * self.dt, self.steps + 1)


@dataclass
class EvolutionState:
    n: int
    t: np.ndarray
    u: np.ndarray  # (len(t), M) trajectory of the current level
    probe_history: list = field(default_factory=list)


@dataclass
class RunReport:
    classification: str
    probe_series: list
    fitted_singularity_exponent: tuple | None
    norms: dict
    diagnostics: dict
    final_state: EvolutionState | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "classification": self.classification,
            "probe_series": [[int(n), float(v)] for n, v in self.probe_series],
            "fitted_singularity_exponent": (
                None if self.fitted_singularity_exponent is None
                else [float(x) for x in self.fitted_singularity_exponent]
            ),
            "diagnostics": self.diagnostics,
        }


def truncate(g, n) -> np.ndarray:
    """T_n(g): g where |g| <= n, n sign(g) elsewhere."""
    if not n >= 1:
        raise PreconditionError("truncation level must be >= 1")
    return np.clip(np.asarray(g, dtype=float), -n, n)


def _system_matrix(operator, dt):
    A = operator.matrix if isinstance(operator, DiscreteOperator) else np.asarray(operator, dtype=float)
    return np.eye(A.shape[0]) + dt * A


def factor_step(operator, dt):
    """LU factors of I + dt A, reused by every step of a level."""
    return lu_factor(_system_matrix(operator, dt), check_finite=True)


def step_linear(u, operator, potential, rhs, dt, u_prev=None, factor=None) -> np.ndarray:
    """One implicit Euler step (I + dt A) u^{k+1} = u^k + dt (V u_prev + rhs).

    ``potential`` is a PotentialSpec, a node vector or None; ``u_prev``
    defaults to ``u``. The exact solution is nonnegative for nonnegative
    input (inverse positivity); round-off below zero is clipped.
    """
    u = np.asarray(u, dtype=float)
    b = u + dt * np.asarray(rhs, dtype=float)
    if potential is not None:
        V = potential.values if hasattr(potential, "values") else np.asarray(potential, dtype=float)
        b = b + dt * V * (u if u_prev is None else np.asarray(u_prev, dtype=float))
    if factor is None:
        try:
            out = np.linalg.solve(_system_matrix(operator, dt), b)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"linear solve failed: {exc}") from exc
    else:
        out = lu_solve(factor, b, check_finite=False)
    return np.maximum(out, 0.0)


def _level_rhs(n, prev, config, grid, s, f_nodes):
    """Frozen right-hand side of level n at every stored time, shape (steps+1, M)."""
    trunc_f = truncate(f_nodes, max(n, 1))
    rhs = np.broadcast_to(trunc_f, (config.steps + 1, grid.M)).copy()
    if n == 0 or prev is None:
        return rhs
    with np.errstate(over="ignore", invalid="ignore"):
        if config.lam > 0.0:
            rhs += hardy_potential(grid, config.lam, n, s).values * prev
        if config.p is not None:
            term = prev**config.p
            if config.nonlinear_weight == "hardy":
                term = term / (grid.nodes ** (2.0 * s) + 1.0 / n)
            rhs += term
    return rhs


def solve_truncated_problem(n, previous_trajectory, operator, config, grid=None, factor=None) -> np.ndarray:
    """Trajectory of level n on the stored time nodes, given level n - 1."""
    grid = operator.grid if grid is None else grid
    s = operator.params.s
    if n > 0 and previous_trajectory is None:
        raise PreconditionError("levels n >= 1 need the previous trajectory")
    if previous_trajectory is not None and previous_trajectory.shape != (config.steps + 1, grid.M):
        raise PreconditionError("previous trajectory does not cover the time grid")
    factor = factor_step(operator, config.dt) if factor is None else factor
    f_nodes = config.f(grid.nodes)
    rhs = _level_rhs(n, previous_trajectory, config, grid, s, f_nodes)
    traj = np.empty((config.steps + 1, grid.M))
    traj[0] = np.maximum(truncate(config.u0(grid.nodes), max(n, 1)), 0.0)
    dt = config.dt
    for k in range(config.steps):
        b = traj[k] + dt * rhs[k + 1]
        traj[k + 1] = np.maximum(lu_solve(factor, b, check_finite=False), 0.0)
    return traj


def _l1_norms(u, grid, gamma):
    return float(np.dot(grid.lebesgue_weights, u)), float(np.dot(grid.mu_weights(gamma), u))


def classify(series, config) -> tuple[str, str]:
    """Blow-up / convergence predicate over (n, probe) pairs at the schedule points."""
    vals = [v for _, v in series]
    if not vals:
        return "inconclusive", "no levels"
    last = vals[-1]
    if not math.isfinite(last):
        if last == math.inf:
            return "blowup", "iterates overflowed"
        if any(math.isfinite(v) and v >= config.blowup_threshold for v in vals):
            return "blowup", "non-finite after threshold"
        return "inconclusive", "non-finite probe"
    k = config.growth_window
    if len(vals) > k:
        tail = vals[-(k + 1):]
        if all(a > 0.0 and b >= config.growth_factor * a for a, b in zip(tail, tail[1:])):
            return "blowup", "sustained growth"
    # a series stationary in n has not diverged, whatever its size
    k = config.conv_window
    if len(vals) > k:
        tail = vals[-(k + 1):]
        if all(abs(b - a) <= config.conv_rtol * max(abs(b), 1e-300) for a, b in zip(tail, tail[1:])):
            return "converged", "probe stationary in n"
    if last >= config.blowup_threshold:
        return "blowup", "probe above threshold"
    return "inconclusive", "neither predicate fired"


def monotone_iteration(
    config: EvolutionConfig,
    grid: RadialGrid,
    params: FracParams,
    lam: float | None = None,
    operator: DiscreteOperator | None = None,
    fit_window: tuple | None = None,
) -> RunReport:
    """Run the lagged scheme over the n-schedule and classify the probe series.

    With ``all_levels`` every integer level 0..max(schedule) is solved (each
    one lags the previous) and the probe is recorded at the schedule points;
    otherwise only the schedule levels are solved, each lagging the previous
    schedule point.
    """
    t_start = time.perf_counter()
    if lam is not None:
        config = replace(config, lam=lam)
    op = assemble_operator(grid, params) if operator is None else operator
    factor = factor_step(op, config.dt)
    times = config.times
    probe_i = int(np.argmin(np.abs(grid.nodes - config.probe_radius)))
    probe_k = int(np.argmin(np.abs(times - config.probe_time)))
    gamma_w = 0.0
    if 0.0 < config.lam <= lambda_star(params):
        gamma_w = params.half_gap - alpha_of_lambda(params, config.lam)

    schedule = list(config.n_schedule)
    levels = list(range(0, schedule[-1] + 1)) if config.all_levels else [0] + schedule
    recorded = set(schedule)
    series, norms_dx, norms_mu = [], [], []
    prev = None
    reason_extra = ""
    monotone_violation = 0.0
    levels_run = 0
    for n in levels:
        with np.errstate(over="ignore", invalid="ignore"):
            traj = solve_truncated_problem(n, prev, op, config, grid, factor)
        levels_run += 1
        finite = bool(np.all(np.isfinite(traj)))
        if prev is not None and finite:
            monotone_violation = max(monotone_violation, float(np.max(prev - traj)))
        prev = traj
        if n in recorded:
            val = float(traj[probe_k, probe_i]) if finite else math.inf
            series.append((n, val))
            if finite:
                a, b = _l1_norms(traj[-1], grid, gamma_w)
            else:
                a = b = math.inf
            norms_dx.append((n, a))
            norms_mu.append((n, b))
        if not finite:
            reason_extra = f"non-finite values at level {n}"
            if n not in recorded:
                # the divergence is charged to the next schedule point
                nxt = min(m for m in schedule if m > n)
                series.append((nxt, math.inf))
                norms_dx.append((nxt, math.inf))
                norms_mu.append((nxt, math.inf))
            break

    classification, reason = classify(series, config)
    if classification == "converged":
        tail = [v for _, v in norms_dx[-(config.conv_window + 1):]]
        bounded = all(math.isfinite(v) for v in tail) and all(
            abs(b - a) <= config.norm_rtol * max(abs(b), 1e-300) for a, b in zip(tail, tail[1:])
        )
        if not bounded:
            classification, reason = "inconclusive", "probe stationary but norms still moving"

    fitted = None
    state = EvolutionState(n=levels[levels_run - 1], t=times, u=prev, probe_history=list(series))
    if fit_window is not None and classification == "converged":
        from .analysis import fit_singularity_exponent

        try:
            fitted = fit_singularity_exponent(prev[-1], grid, fit_window)
        except Exception as exc:  # report, never abort a run
            reason_extra = f"fit failed: {exc}"

    diagnostics = {
        "reason": reason + (f"; {reason_extra}" if reason_extra else ""),
        "levels_run": levels_run,
        "steps_per_level": config.steps,
        "rejected_steps": 0,
        "probe_node": probe_i,
        "probe_radius": float(grid.nodes[probe_i]),
        "probe_time": float(times[probe_k]),
        "max_monotonicity_violation": monotone_violation,
        "wall_seconds": time.perf_counter() - t_start,
    }
    return RunReport(
        classification=classification,
        probe_series=series,
        fitted_singularity_exponent=fitted,
        norms={"L1_dx": norms_dx, "L1_dmu": norms_mu, "gamma": gamma_w},
        diagnostics=diagnostics,
        final_state=state,
    )


@dataclass(frozen=True)
class SupersolutionReport:
    min_residual: float
    argmin: int
    residual: np.ndarray = field(repr=False)

    @property
    def is_supersolution(self) -> bool:
        return self.min_residual >= 0.0


def steady_supersolution_check(w, operator, potential_exact, p=None) -> SupersolutionReport:
    """min_i (A w)_i - V_i w_i - w_i^p; a nonnegative minimum certifies a discrete supersolution."""
    w = np.asarray(w, dtype=float)
    if not np.all(w > 0.0):
        raise PreconditionError("the candidate supersolution must be positive at every node")
    V = potential_exact.values if hasattr(potential_exact, "values") else np.asarray(potential_exact, dtype=float)
    res = operator.apply(w) - V * w
    if p is not None:
        res = res - w**p
    i = int(np.argmin(res))
    return SupersolutionReport(float(res[i]), i, res)

