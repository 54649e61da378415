"""Angular kernel K(sigma) for radial nonlocal operators.

For radial u, (-Delta)^s u(r) = C_{N,s} r^{-2s} int_0^inf (u(r) - u(r sigma)) sigma^{N-1} K(sigma) dsigma
with K the sphere average of |e - sigma theta|^{-N-2s}. Pairing sigma with
1/sigma through K(1/sigma) = sigma^{N+2s} K(sigma) turns the principal value
into an absolutely convergent integral over (1, inf). C_{N,s} is
``operator_norm`` (twice ``a_norm``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .constants import FracParams, operator_norm, psi
from .errors import DomainError, PreconditionError
from .specfun import QuadratureResult, gauss_legendre, integrate_adaptive, log_gamma

_GL_ORDER = 96
_SINH_SWITCH = 0.5


def _angular_prefactor(N: int) -> float:
    # |S^{N-2}| = 2 pi^{(N-1)/2} / Gamma((N-1)/2)
    return 2.0 * math.pi ** (0.5 * (N - 1)) / math.exp(log_gamma(0.5 * (N - 1)))


def near_one_constant(params: FracParams) -> float:
    """C with K(sigma) ~ C |1 - sigma|^{-1-2s} as sigma -> 1."""
    N, s = params.N, params.s
    if N == 1:
        return 1.0
    return math.pi ** (0.5 * (N - 1)) * math.exp(log_gamma(0.5 + s) - log_gamma(0.5 * (N + 2.0 * s)))


def _kernel_n1(s, sig):
    q = 1.0 + 2.0 * s
    return np.abs(1.0 - sig) ** (-q) + (1.0 + sig) ** (-q)


def _kernel_n3(s, sig):
    # K = 2 pi / (sigma (1+2s)) [ |1-sigma|^{-q} - (1+sigma)^{-q} ], written without cancellation
    q = 1.0 + 2.0 * s
    out = np.empty_like(sig)
    zero = sig == 0.0
    lo = (sig > 0.0) & (sig < 1.0)
    hi = sig > 1.0
    x = sig[lo]
    out[lo] = (1.0 + x) ** (-q) * np.expm1(2.0 * q * np.arctanh(x)) / x
    x = sig[hi]
    out[hi] = (x + 1.0) ** (-q) * np.expm1(2.0 * q * np.arctanh(1.0 / x)) / x
    out *= 2.0 * math.pi / q
    out[zero] = 4.0 * math.pi
    return out


def _kernel_quadrature(params: FracParams, sig, order: int = _GL_ORDER):
    """Gauss-Legendre evaluation of the angular integral; sinh-graded near sigma = 1."""
    N, s = params.N, params.s
    expo = -0.5 * (N + 2.0 * s)
    x, w = gauss_legendre(order)
    out = np.empty_like(sig)
    delta = np.abs(1.0 - sig) / np.sqrt(np.maximum(sig, 1e-300))
    far = delta >= _SINH_SWITCH
    if np.any(far):
        eta = 0.5 * math.pi * (x + 1.0)
        sg = sig[far][:, None]
        base = (1.0 - sg) ** 2 + 4.0 * sg * np.sin(0.5 * eta) ** 2
        f = np.sin(eta) ** (N - 2) * base ** expo if N != 2 else base ** expo
        out[far] = 0.5 * math.pi * (f @ w)
    near = ~far
    if np.any(near):
        d = delta[near][:, None]
        sg = sig[near][:, None]
        tmax = np.arcsinh(math.pi / d)
        tau = 0.5 * tmax * (x + 1.0)
        eta = d * np.sinh(tau)
        jac = d * np.cosh(tau) * 0.5 * tmax
        base = (1.0 - sg) ** 2 + 4.0 * sg * np.sin(0.5 * eta) ** 2
        f = base ** expo * jac
        if N != 2:
            f = f * np.sin(eta) ** (N - 2)
        out[near] = f @ w
    return _angular_prefactor(N) * out


def angular_kernel(params: FracParams, sigma, method: str = "auto"):
    """K(sigma) for sigma >= 0, sigma != 1.

    ``method`` selects ``"auto"`` (closed forms for N = 1, 3), or forces
    ``"quadrature"`` for any N >= 2 so the closed forms can be cross-checked.
    """
    sig = np.asarray(sigma, dtype=float)
    scalar = sig.ndim == 0
    sig = np.atleast_1d(sig)
    if np.any(sig < 0.0) or np.any(~np.isfinite(sig)):
        raise DomainError("sigma must be finite and nonnegative")
    if np.any(sig == 1.0):
        raise DomainError("K is singular at sigma = 1")
    N = params.N
    if N == 1:
        out = _kernel_n1(params.s, sig)
    elif N == 3 and method == "auto":
        out = _kernel_n3(params.s, sig)
    elif method in ("auto", "quadrature"):
        out = _kernel_quadrature(params, sig)
    else:
        raise PreconditionError(f"unknown kernel method {method!r}")
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class KernelTable:
    params: FracParams
    sigma_nodes: np.ndarray
    values: np.ndarray
    near_one_exponent: float
    sphere_area: float
    sigma_max: float
    _spline: CubicSpline = field(repr=False, compare=False, default=None)

    def __call__(self, sigma):
        """Interpolated K; analytic decay |S^{N-1}| sigma^{-N-2s} beyond sigma_max."""
        sig = np.atleast_1d(np.asarray(sigma, dtype=float))
        N, s = self.params.N, self.params.s
        out = self.sphere_area * sig ** (-(N + 2.0 * s))
        inside = sig <= self.sigma_max
        x = sig[inside]
        out[inside] = np.exp(self._spline(np.log(x))) * np.abs(1.0 - x) ** self.near_one_exponent
        return out

    def reciprocal_residuals(self) -> np.ndarray:
        """|K(1/sigma) sigma^{-N-2s} - K(sigma)| / K(sigma) at the nodes above 1."""
        N, s = self.params.N, self.params.s
        sig = self.sigma_nodes[self.sigma_nodes > 1.0]
        k = angular_kernel(self.params, sig)
        kr = angular_kernel(self.params, 1.0 / sig)
        return np.abs(kr * sig ** (-(N + 2.0 * s)) - k) / k


def build_kernel_table(
    params: FracParams,
    sigma_max: float = 1e4,
    per_side: int = 200,
    guard: float = 1e-6,
) -> KernelTable:
    """Log-spaced table on (0, 1 - guard] U [1 + guard, sigma_max], plus sigma = 0.

    Nodes above 1 are reciprocals of nodes below 1 wherever that stays under
    ``sigma_max``, so the reciprocal identity is checkable node by node.
    """
    if not sigma_max > 1.0 + guard:
        raise PreconditionError("sigma_max must exceed 1 + guard")
    gap = np.geomspace(guard, 1.0 - 1.0 / sigma_max, per_side)
    lower = np.sort(1.0 - gap)
    upper = 1.0 / lower
    upper = upper[upper <= sigma_max]
    nodes = np.concatenate(([0.0], lower, np.sort(upper)))
    vals = angular_kernel(params, nodes)
    expo = -(1.0 + 2.0 * params.s)
    pos = nodes[1:]
    spline = CubicSpline(np.log(pos), np.log(vals[1:] / np.abs(1.0 - pos) ** expo))
    return KernelTable(
        params=params,
        sigma_nodes=nodes,
        values=vals,
        near_one_exponent=expo,
        sphere_area=params.sphere_area,
        sigma_max=float(sigma_max),
        _spline=spline,
    )


def _pow_diff(sig, a: float, b: float):
    # sigma^a - sigma^b without cancellation near sigma = 1
    ls = np.log(sig)
    return np.exp(b * ls) * np.expm1((a - b) * ls)


def _half_line(params, f, tol: float, max_intervals: int, decay: float) -> QuadratureResult:
    s = params.s

    def g(sig):
        # the integrands vanish at sigma = 1, which a rounded node can hit
        sig = np.asarray(sig, dtype=float)
        out = np.zeros_like(sig)
        ok = sig != 1.0
        out[ok] = f(sig[ok])
        return out

    return integrate_adaptive(
        g,
        1.0,
        math.inf,
        tol=tol,
        endpoint_singularity=(1.0 - 2.0 * s, decay),
        max_intervals=max_intervals,
    )


def power_constant(
    params: FracParams,
    gamma: float,
    theta: float,
    tol: float = 1e-10,
    max_intervals: int = 4000,
    detail: bool = False,
):
    """Constant c with L_gamma |x|^{-theta} = c |x|^{-theta-2s-2gamma}, by quadrature over (1, inf).

    c = C_{N,s} int_1^inf K(s) (s^theta - 1)(s^{N-gamma-theta-1} - s^{2s+gamma-1}) ds.
    """
    N, s = params.N, params.s
    if not 0.0 <= gamma < params.half_gap:
        raise DomainError(f"gamma must lie in [0, (N-2s)/2), got {gamma}")
    hi = N - 2.0 * s - 2.0 * gamma
    if not 0.0 < theta < hi:
        raise DomainError(f"theta must lie in (0, {hi}), got {theta}")

    def f(sig):
        sig = np.asarray(sig, dtype=float)
        return (
            angular_kernel(params, sig)
            * _pow_diff(sig, theta, 0.0)
            * _pow_diff(sig, N - gamma - theta - 1.0, 2.0 * s + gamma - 1.0)
        )

    res = _half_line(params, f, tol, max_intervals, decay=-(1.0 + 2.0 * s + gamma))
    value = operator_norm(params) * res.value
    if detail:
        return QuadratureResult(value, operator_norm(params) * res.error_estimate, res.evaluations)
    return value


def log_potential_constant(
    params: FracParams, tol: float = 1e-11, max_intervals: int = 4000, detail: bool = False
):
    """D = int_1^inf K(s) log s (s^{N-1} - s^{2s-1}) ds, the log-potential bound constant."""
    N, s = params.N, params.s

    def f(sig):
        sig = np.asarray(sig, dtype=float)
        return angular_kernel(params, sig) * np.log(sig) * _pow_diff(sig, N - 1.0, 2.0 * s - 1.0)

    # log factor slows the decay below any power; declare a slightly weaker exponent
    res = _half_line(params, f, tol, max_intervals, decay=-(1.0 + 2.0 * s) + 1e-3)
    return res if detail else res.value


def symmetrized_radial_integrand(params: FracParams, u, r: float, sigma):
    """K(sigma)[(u(r) - u(r sigma)) sigma^{N-1} + (u(r) - u(r/sigma)) sigma^{2s-1}] for sigma > 1.

    The radial fractional Laplacian is C_{N,s} r^{-2s} times the integral of
    this over (1, inf); see ``radial_fractional_laplacian``.
    """
    sig = np.asarray(sigma, dtype=float)
    if np.any(sig <= 1.0):
        raise DomainError("the symmetrized integrand is defined for sigma > 1")
    N, s = params.N, params.s
    u0 = u(r)
    return angular_kernel(params, sig) * (
        (u0 - u(r * sig)) * sig ** (N - 1.0) + (u0 - u(r / sig)) * sig ** (2.0 * s - 1.0)
    )


def radial_fractional_laplacian(params: FracParams, u, r: float, tol: float = 1e-10) -> float:
    """(-Delta)^s u at radius r for a whole-space radial profile u (vectorized callable)."""
    if not r > 0.0:
        raise DomainError("r must be positive")
    f = lambda sig: symmetrized_radial_integrand(params, u, r, sig)
    res = integrate_adaptive(
        f,
        1.0,
        math.inf,
        tol=tol,
        endpoint_singularity=(1.0 - 2.0 * params.s, -(1.0 + 2.0 * params.s)),
    )
    return operator_norm(params) * r ** (-2.0 * params.s) * res.value


def psi_residual(params: FracParams, theta: float, **kw) -> float:
    """Relative gap between the quadrature constant at gamma = 0 and the closed form psi."""
    ref = psi(params, theta)
    return abs(power_constant(params, 0.0, theta, **kw) - ref) / abs(ref)


def write_kernel_csv(table: KernelTable, path) -> None:
    """Columns sigma, K, paired_identity_residual (empty where 1/sigma is off-table)."""
    N, s = table.params.N, table.params.s
    sig = table.sigma_nodes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sigma", "K", "paired_identity_residual"])
        for x, k in zip(sig, table.values):
            if x == 0.0:
                res = ""
            else:
                kr = angular_kernel(table.params, 1.0 / x)
                res = repr(float(abs(kr * x ** (-(N + 2.0 * s)) - k) / k))
            w.writerow([repr(float(x)), repr(float(k)), res])
