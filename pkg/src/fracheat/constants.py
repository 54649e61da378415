"""Closed-form spectral constants of the fractional Hardy problem.

Every Gamma ratio goes through ``log_gamma`` differences so that arguments
close to a pole cannot overflow the intermediate products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError, NoSolutionError, PoleError, PreconditionError
from .specfun import gamma_sign, log_abs_gamma, log_gamma

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class FracParams:
    """Dimension ``N`` and fractional order ``s`` with the standing N > 2s."""

    N: int
    s: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise PreconditionError(f"N must be a positive integer, got {self.N}")
        if not 0.0 < self.s < 1.0:
            raise PreconditionError(f"s must lie in (0, 1), got {self.s}")
        if not self.N > 2.0 * self.s:
            raise PreconditionError(f"need N > 2s, got N={self.N}, s={self.s}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "s", float(self.s))

    @property
    def half_gap(self) -> float:
        """(N - 2s)/2, the supremum of admissible alpha."""
        return 0.5 * (self.N - 2.0 * self.s)

    @property
    def sphere_area(self) -> float:
        """|S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)."""
        return 2.0 * math.pi ** (0.5 * self.N) / math.exp(log_gamma(0.5 * self.N))

    @property
    def ball_volume(self) -> float:
        return self.sphere_area / self.N


@dataclass(frozen=True)
class HardyDerived:
    params: FracParams
    lam: float
    alpha: float
    gamma: float
    gamma_bar: float
    lambda_star: float
    a_norm: float
    p_plus: float
    tau: float
    two_star: float

    def as_dict(self) -> dict:
        return {
            "N": self.params.N,
            "s": self.params.s,
            "lambda": self.lam,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "gamma_bar": self.gamma_bar,
            "lambda_star": self.lambda_star,
            "a_norm": self.a_norm,
            "p_plus": self.p_plus,
            "tau": self.tau,
            "two_star": self.two_star,
        }


def _log_ratio(num: tuple, den: tuple) -> float:
    return math.fsum(log_gamma(x) for x in num) - math.fsum(log_gamma(x) for x in den)


def _four_gamma(s: float, a: float, b: float, c: float, d: float) -> float:
    # 2^{2s} Gamma(a) Gamma(b) / (Gamma(c) Gamma(d)), all arguments positive
    return math.exp(2.0 * s * _LN2 + _log_ratio((a, b), (c, d)))


def lambda_star(params: FracParams) -> float:
    """Optimal fractional Hardy constant 2^{2s} Gamma^2((N+2s)/4) / Gamma^2((N-2s)/4)."""
    N, s = params.N, params.s
    up = 0.25 * (N + 2.0 * s)
    lo = 0.25 * (N - 2.0 * s)
    return _four_gamma(s, up, up, lo, lo)


def a_norm(params, s: float | None = None) -> float:
    """Normalisation a_{N,s} = 2^{2s-1} pi^{-N/2} Gamma((N+2s)/2) / |Gamma(-s)|.

    Accepts a ``FracParams`` or a bare ``(N, s)`` pair; the constant is
    well defined without the standing assumption N > 2s.
    """
    if s is None:
        N, s = params.N, params.s
    else:
        N = params
        if int(N) != N or N < 1 or not 0.0 < s < 1.0:
            raise PreconditionError(f"need integer N >= 1 and s in (0, 1), got N={N}, s={s}")
    log_a = (
        (2.0 * s - 1.0) * _LN2
        - 0.5 * N * math.log(math.pi)
        + log_gamma(0.5 * (N + 2.0 * s))
        - log_abs_gamma(-s)
    )
    return math.exp(log_a)


def operator_norm(params, s: float | None = None) -> float:
    """Prefactor of the singular integral under which Lambda, lambda(alpha) and psi hold.

    Equals 2 a_{N,s} = 2^{2s} pi^{-N/2} Gamma((N+2s)/2) / |Gamma(-s)|. With
    ``a_norm`` itself the radial quadrature returns exactly half of psi(theta),
    so every operator, quadratic form and power constant uses this value.
    """
    return 2.0 * a_norm(params, s)


def _check_alpha(params: FracParams, alpha: float) -> None:
    if not abs(alpha) < params.half_gap:
        raise DomainError(f"|alpha| must be < (N-2s)/2 = {params.half_gap}, got {alpha}")


def lambda_of_alpha(params: FracParams, alpha: float) -> float:
    """Spectral parameter whose radial solutions are |x|^{-(N-2s)/2 +- alpha}."""
    _check_alpha(params, alpha)
    N, s = params.N, params.s
    return _four_gamma(
        s,
        0.25 * (N + 2.0 * s + 2.0 * alpha),
        0.25 * (N + 2.0 * s - 2.0 * alpha),
        0.25 * (N - 2.0 * s + 2.0 * alpha),
        0.25 * (N - 2.0 * s - 2.0 * alpha),
    )


def m_alpha(params: FracParams, alpha: float) -> float:
    """Fourier multiplier factor m_alpha = 2^{alpha+s} Gamma((N+2s+2a)/4) / Gamma((N-2s-2a)/4)."""
    N, s = params.N, params.s
    if not alpha < params.half_gap:
        raise PoleError(f"m_alpha has a pole at alpha >= (N-2s)/2, got {alpha}")
    top = 0.25 * (N + 2.0 * s + 2.0 * alpha)
    bot = 0.25 * (N - 2.0 * s - 2.0 * alpha)
    sign = gamma_sign(top)
    return sign * math.exp((alpha + s) * _LN2 + log_abs_gamma(top) - log_gamma(bot))


def alpha_of_lambda(params: FracParams, lam: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Invert lambda_of_alpha on [0, (N-2s)/2) by bisection."""
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    big = lambda_star(params)
    if not lam > 0.0:
        raise NoSolutionError(f"lambda must be positive, got {lam}")
    if lam > big * (1.0 + 4e-15):
        raise NoSolutionError(
            f"lambda = {lam} exceeds the Hardy constant {big}; no alpha exists"
        )
    if abs(lam - big) <= tol:
        return 0.0
    lo, hi = 0.0, params.half_gap - 1e-12
    if lambda_of_alpha(params, hi) > lam + tol:
        raise ConvergenceError(f"lambda = {lam} is below the bracket floor")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = lambda_of_alpha(params, mid)
        if abs(val - lam) <= tol and hi - lo < 1e-15 * max(1.0, hi):
            return mid
        # lambda_of_alpha decreases in alpha
        if val > lam:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * math.ulp(hi):
            break
    mid = 0.5 * (lo + hi)
    if abs(lambda_of_alpha(params, mid) - lam) > tol:
        raise ConvergenceError(f"bisection did not reach tol {tol} for lambda = {lam}")
    return mid


def psi(params: FracParams, gamma: float) -> float:
    """Lambda_{N,s} + Phi_{N,s}(gamma), the constant in (-Delta)^s |x|^{-gamma} = psi |x|^{-gamma-2s}."""
    N, s = params.N, params.s
    if gamma <= 0.0 or gamma >= N - 2.0 * s:
        if gamma == 0.0 or gamma == N - 2.0 * s:
            raise PoleError(f"psi has a pole at gamma = {gamma}")
        raise DomainError(f"psi requires 0 < gamma < N - 2s, got {gamma}")
    return _four_gamma(
        s,
        0.5 * (gamma + 2.0 * s),
        0.5 * (N - gamma),
        0.5 * (N - gamma - 2.0 * s),
        0.5 * gamma,
    )


def p_plus(params: FracParams, lam: float) -> float:
    """Critical semilinear power 1 + 2s/gamma(lambda)."""
    alpha = alpha_of_lambda(params, lam)
    return 1.0 + 2.0 * params.s / (params.half_gap - alpha)


def derive(params: FracParams, lam: float, tol: float = 1e-12) -> HardyDerived:
    """All exponents and constants attached to a spectral parameter ``lam``."""
    big = lambda_star(params)
    alpha = alpha_of_lambda(params, lam, tol=tol)
    g = params.half_gap - alpha
    N, s = params.N, params.s
    return HardyDerived(
        params=params,
        lam=float(lam),
        alpha=alpha,
        gamma=g,
        gamma_bar=params.half_gap + alpha,
        lambda_star=big,
        a_norm=a_norm(params),
        p_plus=1.0 + 2.0 * s / g,
        tau=1.0 + 2.0 * s / N,
        two_star=2.0 * N / (N - 2.0 * s),
    )
