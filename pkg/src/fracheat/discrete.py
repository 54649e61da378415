"""Dense radial discretisations of (-Delta)^s and the weighted operator L_gamma.

Nodes are midpoints of radial cells. The operator is built from a symmetric,
nonnegative coupling matrix S:

    (A u)_i = (1/w_i) sum_j S_ij (u_i - u_j) + kappa_i u_i,

with w the Lebesgue (gamma = 0) or mu-weights (gamma > 0) of the cells and
kappa the killing rate coming from u = 0 outside B_R. The quadratic form is
<Au, u>_w = 1/2 sum S_ij (u_i - u_j)^2 + sum w_i kappa_i u_i^2, so the sign
pattern, weighted symmetry and row sums hold by construction.

Far couplings (|i - j| >= 2) integrate the radial kernel over cell j at the
node r_i and are symmetrised. Couplings between neighbours come from the
second moment (r - rho)^2 of the kernel over self and adjacent cell pairs,
integrated with Duffy maps and Gauss-Jacobi rules.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .constants import FracParams, operator_norm
from .errors import AssemblyError, DomainError, PreconditionError
from .kernel import angular_kernel
from .specfun import gauss_legendre

__all__ = [
    "RadialGrid",
    "DiscreteOperator",
    "PotentialSpec",
    "build_radial_grid",
    "assemble_operator",
    "hardy_potential",
    "ground_state_transform",
    "exterior_moment",
    "exterior_power_tail",
    "write_operator_csv",
]


@dataclass(frozen=True)
class RadialGrid:
    N: int
    R: float
    M: int
    grading: str
    ratio: float | None
    nodes: np.ndarray
    cell_boundaries: np.ndarray
    lebesgue_weights: np.ndarray
    sphere_area: float

    def mu_weights(self, gamma: float) -> np.ndarray:
        """|S^{N-1}| int_cell r^{N-1-2 gamma} dr, finite for gamma < N/2."""
        if gamma == 0.0:
            return self.lebesgue_weights
        e = self.N - 2.0 * gamma
        if not e > 0.0:
            raise DomainError(f"mu-weights need gamma < N/2, got {gamma}")
        b = self.cell_boundaries
        return self.sphere_area * (b[1:] ** e - b[:-1] ** e) / e

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.cell_boundaries)


def build_radial_grid(
    R: float,
    M: int,
    grading: str = "uniform",
    *,
    N: int,
    ratio: float = 0.9,
) -> RadialGrid:
    """Midpoint grid on B_R.

    ``uniform``: M equal cells. ``geometric``: boundaries R q^{M-k} for k >= m0,
    clustering nodes toward the origin, preceded by a uniform core of
    m0 = round(q/(1-q)) cells on [0, R q^{M-m0}] so widths change smoothly.
    """
    if not R > 0.0 or not math.isfinite(R):
        raise PreconditionError(f"R must be positive and finite, got {R}")
    if int(M) != M or M < 2:
        raise PreconditionError(f"M must be an integer >= 2, got {M}")
    if int(N) != N or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N}")
    M = int(M)
    if grading == "uniform":
        b = R * np.arange(M + 1) / M
        q = None
    elif grading == "geometric":
        if not 0.8 < ratio < 1.0:
            raise PreconditionError(f"geometric ratio must lie in (0.8, 1), got {ratio}")
        q = float(ratio)
        # uniform core of m0 cells whose width matches the first geometric cell
        m0 = min(max(int(round(q / (1.0 - q))), 1), M - 1)
        b = np.empty(M + 1)
        b[m0:] = R * q ** np.arange(M - m0, -1, -1, dtype=float)
        b[:m0] = b[m0] * np.arange(m0, dtype=float) / m0
        b[-1] = R
    else:
        raise PreconditionError(f"unknown grading {grading!r}")
    area = 2.0 * math.pi ** (0.5 * N) / math.gamma(0.5 * N)
    w = area * (b[1:] ** N - b[:-1] ** N) / N
    nodes = 0.5 * (b[1:] + b[:-1])
    if not (np.all(np.diff(nodes) > 0) and nodes[0] > 0 and np.all(w > 0)):
        raise PreconditionError("grid too fine for double precision")
    return RadialGrid(int(N), float(R), M, grading, q, nodes, b, w, area)


@dataclass(frozen=True)
class DiscreteOperator:
    kind: str
    params: FracParams
    gamma: float
    matrix: np.ndarray
    killing: np.ndarray
    coupling: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    grid: RadialGrid = field(repr=False)

    def apply(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    def inner(self, u, v) -> float:
        """<u, v> in the weights the operator is symmetric for."""
        return float(np.dot(self.weights * np.asarray(u, dtype=float), v))

    def quadratic_form(self, u) -> float:
        """1/2 sum S_ij (u_i - u_j)^2 + sum w_i kappa_i u_i^2, equal to <Au, u>_w."""
        u = np.asarray(u, dtype=float)
        d = u[:, None] - u[None, :]
        return 0.5 * float(np.sum(self.coupling * d * d)) + float(
            np.sum(self.weights * self.killing * u * u)
        )

    def coupling_form(self, u) -> float:
        """Interaction part 1/2 sum S_ij (u_i - u_j)^2 only."""
        u = np.asarray(u, dtype=float)
        d = u[:, None] - u[None, :]
        return 0.5 * float(np.sum(self.coupling * d * d))


@dataclass(frozen=True)
class PotentialSpec:
    lam: float
    n: float
    values: np.ndarray


def hardy_potential(grid: RadialGrid, lam: float, n, s: float) -> PotentialSpec:
    """V_i = lam / (r_i^{2s} + 1/n); n = inf gives lam r^{-2s}."""
    if not lam > 0.0:
        raise PreconditionError(f"lambda must be positive, got {lam}")
    if not (n == math.inf or (int(n) == n and n >= 1)):
        raise PreconditionError(f"level n must be a positive integer or inf, got {n}")
    reg = 0.0 if n == math.inf else 1.0 / n
    return PotentialSpec(float(lam), n, lam / (grid.nodes ** (2.0 * s) + reg))


def ground_state_transform(u, grid: RadialGrid, gamma: float, direction: str = "forward") -> np.ndarray:
    """v = r^gamma u (forward) or u = r^{-gamma} v (inverse)."""
    if gamma < 0.0:
        raise PreconditionError("gamma must be nonnegative")
    u = np.asarray(u, dtype=float)
    if gamma == 0.0:
        return u.copy()
    factor = grid.nodes**gamma
    if direction == "forward":
        return u * factor
    if direction == "inverse":
        return u / factor
    raise PreconditionError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def _gauss_jacobi01(n: int, beta: float):
    # nodes/weights for int_0^1 t^beta g(t) dt
    x, w = roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w / 2.0 ** (beta + 1.0)


def _gl01(n: int):
    x, w = gauss_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _radial_kernel(params: FracParams, r, rho, gamma: float):
    # (r rho)^{N-1-gamma} J(r, rho), J = r^{-N-2s} K(rho / r)
    N, s = params.N, params.s
    k = angular_kernel(params, (rho / r).ravel()).reshape(np.shape(r * rho))
    return (r * rho) ** (N - 1.0 - gamma) * r ** (-N - 2.0 * s) * k


def exterior_moment(params: FracParams, x, e: float, order: int = 48) -> np.ndarray:
    """int_0^x K(tau) tau^e dtau for 0 < x < 1 and e > -1, vectorised over x.

    [0, min(x, 1/2)] uses Gauss-Jacobi with weight tau^e; (1/2, x] uses the
    variable log(1 - tau), in which the K ~ (1 - tau)^{-1-2s} blow-up beyond x
    becomes a smooth exponential.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DomainError("exterior moments need 0 < x < 1")
    if not e > -1.0:
        raise DomainError(f"tau^{e} is not integrable at 0")
    t, wt = _gauss_jacobi01(order, e)
    a = np.minimum(x, 0.5)[:, None]
    tau = a * t[None, :]
    k = angular_kernel(params, tau.ravel()).reshape(tau.shape)
    out = (a[:, 0] ** (e + 1.0)) * (k @ wt)
    far = x > 0.5
    if np.any(far):
        ug, wg = _gl01(order)
        lo = math.log(0.5)
        hi = np.log1p(-x[far])[:, None]
        u = lo + (hi - lo) * ug[None, :]
        om = np.exp(u)  # 1 - tau
        tau = 1.0 - om
        k = angular_kernel(params, tau.ravel()).reshape(tau.shape)
        f = k * tau**e * om
        out[far] += (lo - hi[:, 0]) * (f @ wg)
    return out


def exterior_power_tail(grid: RadialGrid, params: FracParams, theta: float, gamma: float = 0.0) -> np.ndarray:
    """Exterior contribution of the profile r^{-theta} to row i of the operator.

    Equals (w_i / w^mu_i) C r_i^{-2s-2gamma} int_{R/r_i}^inf K(sig) sig^{N-1-gamma}
    (r_i sig)^{-theta} dsig, scaled like the killing term. Subtract it from the
    operator applied to the interior samples to compare with the whole-space
    identity.
    """
    s = params.s
    r = grid.nodes
    x = r / grid.R
    mom = exterior_moment(params, x, 2.0 * s + gamma + theta - 1.0)
    scale = grid.lebesgue_weights / grid.mu_weights(gamma)
    return scale * operator_norm(params) * r ** (-2.0 * s - 2.0 * gamma - theta) * mom


def _far_couplings(grid, params, gamma, order):
    """G_ij = C r_i^{-2g-2s} int_{b_j/r_i}^{b_{j+1}/r_i} K sig^{N-1-g} dsig for all i, j."""
    N, s = params.N, params.s
    r = grid.nodes
    b = grid.cell_boundaries
    M = grid.M
    t, wt = _gl01(order)
    out = np.zeros((M, M))
    rho = b[:-1, None] + grid.widths[:, None] * t[None, :]  # (M, order)
    for i in range(M):
        mask = np.abs(np.arange(M) - i) >= 2
        if not np.any(mask):
            continue
        sig = rho[mask] / r[i]
        k = angular_kernel(params, sig.ravel()).reshape(sig.shape)
        vals = (k * sig ** (N - 1.0 - gamma)) @ wt
        out[i, mask] = vals * grid.widths[mask] / r[i]
    c = operator_norm(params)
    return c * out * r[:, None] ** (-2.0 * gamma - 2.0 * s)


def _self_moment(grid, params, gamma, order):
    """B(i,i) = |S| int_cell int_cell (r - rho)^2 (r rho)^{N-1-g} J dr drho."""
    s = params.s
    b0 = grid.cell_boundaries[:-1][:, None, None]
    d = grid.widths[:, None, None]
    x, wx = _gauss_jacobi01(order, 2.0 - 2.0 * s)
    y, wy = _gauss_jacobi01(order, 1.0 - 2.0 * s)
    X = x[None, :, None]
    Y = y[None, None, :]
    r = b0 + d * X
    rho = b0 + d * X * (1.0 - Y)
    diff = d * X * Y
    f = diff**2 * _radial_kernel(params, r, rho, gamma) * d**2 * X
    f = f / (X ** (2.0 - 2.0 * s) * Y ** (1.0 - 2.0 * s))
    val = np.einsum("mab,a,b->m", f, wx, wy)
    return 2.0 * grid.sphere_area * val


def _adjacent_moment(grid, params, gamma, order):
    """B(i,i+1) over the cell pair sharing the boundary b_{i+1}."""
    s = params.s
    c = grid.cell_boundaries[1:-1][:, None, None]
    di = grid.widths[:-1][:, None, None]
    dj = grid.widths[1:][:, None, None]
    t, wt = _gauss_jacobi01(order, 2.0 - 2.0 * s)
    z, wz = _gl01(order)
    T = t[None, :, None]
    Z = z[None, None, :]
    total = 0.0
    for xs, ys in ((T, T * Z), (T * Z, T)):
        r = c - di * xs
        rho = c + dj * ys
        diff = rho - r
        f = diff**2 * _radial_kernel(params, r, rho, gamma) * di * dj * T
        f = f / T ** (2.0 - 2.0 * s)
        total = total + np.einsum("mab,a,b->m", f, wt, wz)
    return grid.sphere_area * total


def assemble_operator(
    grid: RadialGrid,
    params: FracParams,
    gamma: float = 0.0,
    far_order: int = 8,
    near_order: int = 12,
) -> DiscreteOperator:
    """Dense M x M realisation of (-Delta)^s (gamma = 0) or r^{2 gamma} L_gamma (gamma > 0).

    The weighted operator acts on v = r^gamma u and is symmetric for the
    mu-weights; gamma = 0 reduces it to the fractional Laplacian with
    Lebesgue weights.
    """
    if grid.N != params.N:
        raise PreconditionError(f"grid dimension {grid.N} differs from N = {params.N}")
    if not 0.0 <= gamma < params.half_gap:
        raise DomainError(f"gamma must lie in [0, (N-2s)/2), got {gamma}")
    s = params.s
    c = operator_norm(params)
    w = grid.lebesgue_weights
    wmu = grid.mu_weights(gamma)
    M = grid.M

    G = _far_couplings(grid, params, gamma, far_order)
    S = 0.5 * (w[:, None] * G + (w[:, None] * G).T)

    self_b = _self_moment(grid, params, gamma, near_order)
    adj_b = _adjacent_moment(grid, params, gamma, near_order)
    share = np.full(M, 0.25)
    share[0] = share[-1] = 0.5
    if M == 2:
        share[:] = 0.5
    h = np.diff(grid.nodes)
    near = (adj_b + share[:-1] * self_b[:-1] + share[1:] * self_b[1:]) * (c / h**2)
    idx = np.arange(M - 1)
    S[idx, idx + 1] = near
    S[idx + 1, idx] = near
    np.fill_diagonal(S, 0.0)

    x = grid.nodes / grid.R
    ext = c * grid.nodes ** (-2.0 * gamma - 2.0 * s) * exterior_moment(params, x, 2.0 * s + gamma - 1.0)
    kappa = w * ext / wmu

    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(kappa))):
        raise AssemblyError("non-finite coupling or killing coefficient")
    if np.any(S < -1e-14) or np.any(kappa < 0.0):
        raise AssemblyError("coupling with the wrong sign: quadrature failure")
    S = np.maximum(S, 0.0)

    A = -S / wmu[:, None]
    np.fill_diagonal(A, S.sum(axis=1) / wmu + kappa)
    kind = "frac_laplacian" if gamma == 0.0 else "weighted_Lgamma"
    return DiscreteOperator(kind, params, float(gamma), A, kappa, S, wmu, grid)


def write_operator_csv(op: DiscreteOperator, path) -> None:
    """Rows: node index, r_i, weight, kappa_i, then the matrix row."""
    g = op.grid
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["i", "r", "weight", "kappa"] + [f"a{j}" for j in range(g.M)])
        for i in range(g.M):
            wr.writerow(
                [i, repr(float(g.nodes[i])), repr(float(op.weights[i])), repr(float(op.killing[i]))]
                + [repr(float(v)) for v in op.matrix[i]]
            )
