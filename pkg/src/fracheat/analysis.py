"""Quantitative checks of the Hardy, ground-state, Picone, Poincare-Wirtinger,
weighted Hardy/Sobolev and Harnack statements on discrete operators and
trajectories.

All double integrals against dnu reuse the coupling matrix of the assembled
weighted operator, so the checks measure exactly the forms that drive the
evolution. The forms carry the operator normalisation constant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import FracParams, lambda_star, psi
from .discrete import DiscreteOperator, RadialGrid, assemble_operator
from .errors import DomainError, PreconditionError
from .specfun import integrate_adaptive

HARDY_SLACK = 0.05

__all__ = [
    "HARDY_SLACK",
    "HarnackCylinder",
    "PiconeReport",
    "WeightedReport",
    "FitResult",
    "AdmissibilityReport",
    "CheckRow",
    "hardy_rayleigh_quotient",
    "ground_state_identity_residual",
    "picone_check",
    "poincare_wirtinger_check",
    "weighted_hardy_sobolev_check",
    "fit_singularity_exponent",
    "harnack_quotient",
    "data_admissibility",
    "h_norm",
    "write_check_csv",
]


def _vec(u, grid: RadialGrid, name: str = "vector") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.M,):
        raise PreconditionError(f"{name} must have one entry per node ({grid.M}), got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise PreconditionError(f"{name} has non-finite entries")
    return u


def _operator(grid, params, gamma, operator):
    if operator is None:
        return assemble_operator(grid, params, gamma)
    if operator.gamma != gamma or not np.array_equal(operator.grid.nodes, grid.nodes):
        raise PreconditionError("operator does not match the requested grid / gamma")
    return operator


def _hardy_mass(u, grid, s, gamma=0.0):
    # int u^2 |x|^{-2s-2gamma} dx by the midpoint rule on Lebesgue weights
    return float(np.sum(grid.lebesgue_weights * u * u * grid.nodes ** (-2.0 * s - 2.0 * gamma)))


def hardy_rayleigh_quotient(phi, grid: RadialGrid, params: FracParams, operator: DiscreteOperator | None = None) -> float:
    """Discrete Gagliardo energy of phi (exterior part included) over int phi^2 |x|^{-2s}."""
    phi = _vec(phi, grid, "phi")
    op = _operator(grid, params, 0.0, operator)
    den = _hardy_mass(phi, grid, params.s)
    if not den > 0.0:
        raise PreconditionError("zero denominator: phi vanishes on the grid")
    return op.quadratic_form(phi) / den


def ground_state_identity_residual(
    phi,
    gamma: float,
    grid: RadialGrid,
    params: FracParams,
    operator0: DiscreteOperator | None = None,
    operator_gamma: DiscreteOperator | None = None,
    eps: float = 1e-300,
) -> float:
    """Relative gap between E(phi) - psi(gamma) int phi^2|x|^{-2s} and the dnu-energy of |x|^gamma phi.

    The two sides come from two independently assembled operators (plain and
    weighted), so agreement validates the weighted quadrature.
    """
    if not 0.0 <= gamma < params.half_gap:
        raise DomainError(f"need 0 <= gamma < (N-2s)/2, got {gamma}")
    phi = _vec(phi, grid, "phi")
    op0 = _operator(grid, params, 0.0, operator0)
    # psi(gamma) -> 0 as gamma -> 0, where the weighted operator is the plain one
    shift = 0.0 if gamma == 0.0 else psi(params, gamma) * _hardy_mass(phi, grid, params.s)
    lhs = op0.quadratic_form(phi) - shift
    if gamma == 0.0:
        rhs = op0.quadratic_form(phi) if operator_gamma is None else operator_gamma.quadratic_form(phi)
    else:
        opg = _operator(grid, params, gamma, operator_gamma)
        rhs = opg.quadratic_form(grid.nodes**gamma * phi)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + eps)


@dataclass(frozen=True)
class PiconeReport:
    margin: float  # <Av, v> - sum w (Au) v^2 / u, evaluated directly
    pairwise: float  # the same margin as 1/2 sum S (u_i v_j - u_j v_i)^2 / (u_i u_j)
    lhs: float
    rhs: float


def picone_check(u, v, operator: DiscreteOperator) -> PiconeReport:
    """Discrete Picone inequality sum w (Au) v^2/u <= <Av, v>_w for u > 0."""
    grid = operator.grid
    u = _vec(u, grid, "u")
    v = _vec(v, grid, "v")
    if not np.all(u > 0.0):
        raise PreconditionError("Picone check needs u > 0 at every node")
    lhs = float(np.sum(operator.weights * operator.apply(u) * v * v / u))
    rhs = operator.quadratic_form(v)
    cross = u[:, None] * v[None, :] - u[None, :] * v[:, None]
    pairwise = 0.5 * float(np.sum(operator.coupling * cross * cross / (u[:, None] * u[None, :])))
    return PiconeReport(rhs - lhs, pairwise, lhs, rhs)


def _profile_nodes(profile, grid):
    if callable(profile):
        return np.asarray(profile(grid.nodes / grid.R), dtype=float)
    return _vec(profile, grid, "psi profile")


def poincare_wirtinger_check(w, psi_profile, grid: RadialGrid, gamma: float, operator: DiscreteOperator | None = None, params: FracParams | None = None) -> float:
    """LHS / RHS of the weighted Poincare-Wirtinger inequality.

    LHS = sum w^mu psi (w - W)^2 with W the psi-weighted mu-mean, RHS =
    1/2 sum S_ij (w_i - w_j)^2 min(psi_i, psi_j). ``psi_profile`` is a
    callable of r/R (support in the unit ball) or a node vector.
    """
    w = _vec(w, grid, "w")
    if operator is None:
        if params is None:
            raise PreconditionError("pass either an assembled operator or params")
        operator = assemble_operator(grid, params, gamma)
    elif abs(operator.gamma - gamma) > 0.0:
        raise PreconditionError("operator gamma does not match")
    ps = _profile_nodes(psi_profile, grid)
    if np.any(ps < 0.0) or np.any(ps > 1.0) or np.any(np.diff(ps) > 1e-15):
        raise PreconditionError("psi must be radial, nonincreasing and within [0, 1]")
    if not np.any(ps > 0.0):
        raise PreconditionError("psi vanishes identically")
    mu = grid.mu_weights(gamma)
    mean = float(np.sum(mu * ps * w) / np.sum(mu * ps))
    lhs = float(np.sum(mu * ps * (w - mean) ** 2))
    d = w[:, None] - w[None, :]
    rhs = 0.5 * float(np.sum(operator.coupling * d * d * np.minimum(ps[:, None], ps[None, :])))
    if rhs == 0.0:
        return 0.0 if lhs <= 1e-14 * max(1.0, float(np.sum(mu * ps * w * w))) else math.inf
    return lhs / rhs


@dataclass(frozen=True)
class WeightedReport:
    hardy_quotient: float  # dnu-energy / int phi^2 |x|^{-2s-2gamma}
    sobolev_quotient: float  # (B_R x B_R energy + R^{-2s} int phi^2 dmu) / ||phi||_{2*, gamma}^2
    energy: float
    interior_energy: float


def weighted_hardy_sobolev_check(phi, grid: RadialGrid, params: FracParams, gamma: float, operator: DiscreteOperator | None = None) -> WeightedReport:
    """Empirical constants of the weighted Hardy and weighted Sobolev inequalities."""
    phi = _vec(phi, grid, "phi")
    if not np.any(phi != 0.0):
        raise PreconditionError("phi must not vanish identically")
    op = _operator(grid, params, gamma, operator)
    N, s = params.N, params.s
    energy = op.quadratic_form(phi)
    inner = op.coupling_form(phi)
    hq = energy / _hardy_mass(phi, grid, s, gamma)
    star = 2.0 * N / (N - 2.0 * s)
    lw = grid.lebesgue_weights
    norm = float(np.sum(lw * np.abs(phi) ** star * grid.nodes ** (-star * gamma))) ** (2.0 / star)
    mass = float(np.sum(grid.mu_weights(gamma) * phi * phi))
    sq = (inner + grid.R ** (-2.0 * s) * mass) / norm
    return WeightedReport(hq, sq, energy, inner)


@dataclass(frozen=True)
class FitResult:
    slope: float
    stderr: float
    count: int
    window: tuple

    def __iter__(self):
        return iter((self.slope, self.stderr))


def fit_singularity_exponent(u, grid: RadialGrid, r_window) -> FitResult:
    """Least-squares slope of log u against log r over nodes in [r_lo, r_hi]."""
    u = _vec(u, grid, "u")
    r_lo, r_hi = (float(x) for x in r_window)
    if not 0.0 < r_lo < r_hi:
        raise PreconditionError("window must satisfy 0 < r_lo < r_hi")
    if r_hi > grid.R / 4.0 * (1.0 + 1e-12):
        raise PreconditionError(f"window must end at or below R/4 = {grid.R / 4.0}")
    sel = (grid.nodes >= r_lo) & (grid.nodes <= r_hi)
    k = int(np.count_nonzero(sel))
    if k < 8:
        raise PreconditionError(f"window holds {k} nodes, need at least 8")
    y = u[sel]
    if not np.all(y > 0.0):
        raise DomainError("u must be positive on the fit window")
    x = np.log(grid.nodes[sel])
    y = np.log(y)
    xm = x - x.mean()
    sxx = float(np.dot(xm, xm))
    slope = float(np.dot(xm, y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xm
    stderr = math.sqrt(float(np.dot(resid, resid)) / (k - 2) / sxx)
    return FitResult(slope, stderr, k, (r_lo, r_hi))


@dataclass(frozen=True)
class HarnackCylinder:
    """B_r x I with I = (anchor - r^{2s}, anchor) for ``minus`` and (anchor, anchor + r^{2s}) for ``plus``."""

    r: float
    kind: str
    anchor: float
    s: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise PreconditionError("cylinder radius must be positive")
        if self.kind not in ("minus", "plus"):
            raise PreconditionError("cylinder kind must be 'minus' or 'plus'")
        if not 0.0 < self.s < 1.0:
            raise PreconditionError("s must lie in (0, 1)")

    @property
    def interval(self) -> tuple:
        h = self.r ** (2.0 * self.s)
        return (self.anchor - h, self.anchor) if self.kind == "minus" else (self.anchor, self.anchor + h)


def _slices(times, cyl, eps):
    a, b = cyl.interval
    if a < times[0] - eps or b > times[-1] + eps:
        raise DomainError(f"cylinder time interval ({a}, {b}) leaves the trajectory [{times[0]}, {times[-1]}]")
    idx = np.nonzero((times >= a - eps) & (times <= b + eps))[0]
    if idx.size < 2:
        raise DomainError("cylinder contains fewer than two stored time slices")
    return idx


def _ball(grid, cyl):
    if cyl.r > grid.R * (1.0 + 1e-12):
        raise DomainError(f"cylinder radius {cyl.r} exceeds R = {grid.R}")
    sel = np.nonzero(grid.nodes < cyl.r)[0]
    if sel.size == 0:
        raise DomainError("cylinder ball contains no node")
    return sel


def harnack_quotient(v, times, grid: RadialGrid, gamma: float, Q1: HarnackCylinder, Q2: HarnackCylinder, q: float) -> float:
    """(int_{Q1} v^q dmu dt)^{1/q} / min_{Q2} v on stored slices; +inf when the minimum is 0.

    The time integral uses the trapezoid rule over the slices inside Q1;
    the infimum is the minimum over nodes in B_r and slices inside Q2.
    """
    v = np.asarray(v, dtype=float)
    times = np.asarray(times, dtype=float)
    if v.ndim != 2 or v.shape != (times.size, grid.M):
        raise PreconditionError("trajectory must have shape (len(times), M)")
    tau = 1.0 + 2.0 * Q1.s / grid.N
    if not 0.0 < q < tau:
        raise PreconditionError(f"need 0 < q < 1 + 2s/N = {tau}, got {q}")
    if np.any(v < 0.0):
        raise PreconditionError("trajectory must be nonnegative")
    if Q1.interval[1] > Q2.interval[0] + 1e-12 * max(1.0, abs(Q2.interval[0])):
        raise PreconditionError("Q1 must precede Q2 in time")
    eps = 1e-9 * max(1.0, float(times[-1] - times[0]))
    k1, k2 = _slices(times, Q1, eps), _slices(times, Q2, eps)
    i1, i2 = _ball(grid, Q1), _ball(grid, Q2)
    mu = grid.mu_weights(gamma)[i1]
    space = (v[np.ix_(k1, i1)] ** q) @ mu
    t = times[k1]
    integral = float(np.sum(0.5 * (space[1:] + space[:-1]) * np.diff(t)))
    low = float(np.min(v[np.ix_(k2, i2)]))
    if low <= 0.0:
        return math.inf
    return integral ** (1.0 / q) / low


@dataclass(frozen=True)
class AdmissibilityReport:
    value: float
    admissible: bool
    exponent: float  # local power-law exponent beta with profile ~ r^{-beta} near 0
    kind: str


def data_admissibility(profile, grid: RadialGrid, gamma: float, kind: str = "source", tol: float = 1e-10) -> AdmissibilityReport:
    """|S^{N-1}| int_0^R profile r^{N-1-gamma} dr with a power-law extrapolation near 0.

    ``kind`` only labels the report: a source is integrated per unit time.
    The integral converges iff the exponent beta of the profile at the
    origin satisfies beta < N - gamma.
    """
    if kind not in ("source", "initial"):
        raise PreconditionError("kind must be 'source' or 'initial'")
    N, R = grid.N, grid.R
    rho = float(grid.nodes[0])
    r_a, r_b = rho * 2.0**-20, rho * 2.0**-21
    f_a, f_b = float(profile(np.array([r_a]))[0]), float(profile(np.array([r_b]))[0])
    if f_a < 0.0 or f_b < 0.0:
        raise PreconditionError("profiles must be nonnegative")
    if f_a == 0.0 and f_b == 0.0:
        beta = -math.inf
    elif f_a == 0.0 or f_b == 0.0:
        beta = math.inf
    else:
        beta = math.log(f_b / f_a) / math.log(r_a / r_b)
    edge = N - gamma
    admissible = beta < edge - 1e-8
    if not admissible:
        return AdmissibilityReport(math.inf, False, beta, kind)

    def g(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return np.asarray(profile(r), dtype=float) * r ** (N - 1.0 - gamma)

    body = integrate_adaptive(g, rho, R, tol=tol * max(1.0, abs(float(g(np.array([R]))[0])) * R)).value
    f_rho = float(profile(np.array([rho]))[0])
    if beta == -math.inf or f_rho == 0.0:
        head = 0.0
    else:
        head = f_rho * rho ** (N - gamma) / (edge - beta)
    return AdmissibilityReport(grid.sphere_area * (body + head), True, beta, kind)


def h_norm(u, grid: RadialGrid, params: FracParams, operator: DiscreteOperator | None = None) -> float:
    """Squared Hardy-space norm: energy of u minus Lambda int u^2 |x|^{-2s}."""
    u = _vec(u, grid, "u")
    op = _operator(grid, params, 0.0, operator)
    return op.quadratic_form(u) - lambda_star(params) * _hardy_mass(u, grid, params.s)


@dataclass(frozen=True)
class CheckRow:
    name: str
    parameters: dict = field(default_factory=dict)
    value: float = math.nan
    threshold: float = math.nan
    passed: bool = False

    def as_row(self) -> list:
        params = ";".join(f"{k}={self.parameters[k]}" for k in sorted(self.parameters))
        return [self.name, params, repr(float(self.value)), repr(float(self.threshold)), "pass" if self.passed else "fail"]


CHECK_HEADER = ["check", "parameters", "value", "threshold", "result"]


def write_check_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CHECK_HEADER)
        for row in rows:
            w.writerow(row.as_row())
