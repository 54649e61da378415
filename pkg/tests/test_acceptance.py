"""Acceptance criteria A1-A12; each test prints one ``A#: PASS/FAIL`` line."""

import math
import os
import time

import numpy as np
import pytest

from fracheat.analysis import (
    HARDY_SLACK,
    HarnackCylinder,
    data_admissibility,
    ground_state_identity_residual,
    hardy_rayleigh_quotient,
    harnack_quotient,
    picone_check,
)
from fracheat.cli import _evolution_config, _setup, load_config
from fracheat.constants import FracParams, alpha_of_lambda, derive, lambda_of_alpha, lambda_star, psi
from fracheat.discrete import assemble_operator, build_radial_grid, exterior_power_tail
from fracheat.evolution import Profile, monotone_iteration
from fracheat.kernel import angular_kernel, log_potential_constant, power_constant
from fracheat.specfun import gamma_weierstrass
from helpers import bump, criterion

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
P3 = FracParams(3, 0.5)


def cfg(name):
    return load_config(os.path.join(CONFIGS, name))


def random_params(rng, count):
    out = []
    while len(out) < count:
        N = int(rng.integers(1, 7))
        s = float(rng.uniform(0.05, 0.95))
        if N > 2.0 * s:
            out.append(FracParams(N, s))
    return out


def run(conf, lam=None, p="config", u0=None, fit_window=None):
    grid, op = _setup(conf)
    ec = _evolution_config(conf, lam=lam, p=p, u0=u0)
    params = FracParams(conf["params"]["N"], conf["params"]["s"])
    return grid, ec, monotone_iteration(ec, grid, params, operator=op, fit_window=fit_window)


def doubling_changes(series):
    vals = [v for _, v in series]
    return vals, [abs(b - a) / abs(b) for a, b in zip(vals, vals[1:])]


# ---- A1 ---------------------------------------------------------------------


def test_A1_constant_fidelity():
    with criterion("A1", 1.0) as c:
        oracle = 2.0 * gamma_weierstrass(1.0) ** 2 / gamma_weierstrass(0.5) ** 2
        err = abs(lambda_star(P3) - oracle)
        c.check(err < 1e-12, f"|Lambda(3,1/2) - oracle| = {err:.2e}")
        c.check(abs(lambda_star(P3) - 2.0 / math.pi) < 1e-12, "Lambda(3,1/2) = 2/pi")
        near = abs(lambda_star(FracParams(3, 0.999)) - 0.25)
        c.check(near < 2e-2, f"|Lambda(3,0.999) - 1/4| = {near:.2e}")


# ---- A2 ---------------------------------------------------------------------


def test_A2_monotonicity_suite():
    with criterion("A2", 5.0) as c:
        rng = np.random.default_rng(2024)
        worst_rt = 0.0
        dec = inc = True
        for p in random_params(rng, 10):
            alphas = np.linspace(0.0, p.half_gap, 201)[:-1]
            lam = np.array([lambda_of_alpha(p, a) for a in alphas])
            dec &= bool(np.all(np.diff(lam) < 0.0))
            gammas = np.linspace(0.0, p.half_gap, 201)[1:]
            ps = np.array([psi(p, g) for g in gammas])
            inc &= bool(np.all(np.diff(ps) > 0.0))
            for a in np.linspace(0.01, 0.99, 20) * p.half_gap:
                worst_rt = max(worst_rt, abs(alpha_of_lambda(p, lambda_of_alpha(p, a)) - a))
        c.check(dec, "lambda(alpha) strictly decreasing")
        c.check(inc, "Psi strictly increasing")
        c.check(worst_rt < 1e-9, f"roundtrip error {worst_rt:.1e}")


# ---- A3 ---------------------------------------------------------------------


def test_A3_kernel_cross_validation():
    with criterion("A3", 30.0) as c:
        rng = np.random.default_rng(3)
        worst = worst_k0 = worst_rec = 0.0
        for N, s in [(3, 0.5), (2, 0.3), (1, 0.25)]:
            p = FracParams(N, s)
            for th in rng.uniform(0.02, 0.98, 20) * (N - 2.0 * s):
                worst = max(worst, abs(power_constant(p, 0.0, th) / psi(p, th) - 1.0))
            worst_k0 = max(worst_k0, abs(float(angular_kernel(p, 0.0)) - p.sphere_area))
            sig = np.geomspace(1.01, 1e3, 40)
            rec = np.abs(angular_kernel(p, 1.0 / sig) * sig ** (-(N + 2 * s)) / angular_kernel(p, sig) - 1.0)
            worst_rec = max(worst_rec, float(np.max(rec)))
        c.check(worst < 1e-6, f"power constant vs Psi rel {worst:.1e}")
        c.check(worst_k0 < 1e-10, f"|K(0) - |S|| = {worst_k0:.1e}")
        c.check(worst_rec < 1e-8, f"reciprocal identity {worst_rec:.1e}")


# ---- A4 ---------------------------------------------------------------------


def test_A4_discrete_operator_consistency(ladder):
    with criterion("A4", 120.0) as c:
        errs = {}
        for M, (g, op) in sorted(ladder.items()):
            inner = (g.nodes >= 0.1 * g.R) & (g.nodes <= 0.9 * g.R)
            row = []
            for th in (0.5, 1.0, 1.5):
                got = op.apply(g.nodes**-th) - exterior_power_tail(g, P3, th)
                want = psi(P3, th) * g.nodes ** (-th - 2.0 * P3.s)
                row.append(float(np.max(np.abs(got[inner] / want[inner] - 1.0))))
            errs[M] = row
        top = max(errs[1024])
        c.check(top < 1e-2, f"M=1024 interior error {top:.1e}")
        Ms = sorted(errs)
        mono = all(errs[b][k] < errs[a][k] for a, b in zip(Ms, Ms[1:]) for k in range(3))
        c.check(mono, "error decreases over M=128..1024 for theta=0.5,1,1.5")


# ---- A5 ---------------------------------------------------------------------


def test_A5_structural_invariants():
    with criterion("A5", 60.0) as c:
        rng = np.random.default_rng(5)
        signs = rows = pos = True
        worst = math.inf
        for grading, gam in [("uniform", 0.0), ("geometric", 0.0), ("uniform", 0.3), ("geometric", 0.3)]:
            g = build_radial_grid(1.0, 256, grading, N=3, ratio=0.97)
            op = assemble_operator(g, P3, gam)
            A = op.matrix
            off = A - np.diag(np.diag(A))
            signs &= bool(np.all(np.diag(A) > 0.0) and np.all(off <= 0.0))
            scale = np.max(np.abs(np.diag(A)))
            rows &= bool(np.all(op.killing >= 0.0) and np.allclose(op.apply(np.ones(g.M)), op.killing, rtol=1e-10, atol=1e-12 * scale))
            # inverse positivity of the implicit step, before any clipping
            for dt in (1e-3, 1e-1):
                inv = np.linalg.inv(np.eye(g.M) + dt * A)
                pos &= bool(np.min(inv) >= -1e-14 * np.max(inv))
            for _ in range(50 if gam else 0):
                u = rng.uniform(0.05, 2.0, g.M)
                v = rng.normal(size=g.M)
                worst = min(worst, picone_check(u, v, op).margin)
        c.check(signs, "M-matrix sign pattern")
        c.check(rows, "row sums = kappa >= 0")
        c.check(pos, "(I + dt A)^{-1} >= 0")
        c.check(worst >= -1e-12, f"min Picone margin {worst:.2e} over 100 pairs")


# ---- A6 / A9 ----------------------------------------------------------------

_DICHOTOMY = {}


def dichotomy_runs():
    if not _DICHOTOMY:
        conf = cfg("lambda_dichotomy.cfg")
        big = lambda_star(P3)
        t0 = time.perf_counter()
        grid, _ = _setup(conf)
        window = (2.0 * grid.nodes[0], grid.R / 8.0)
        _DICHOTOMY["low"] = run(conf, lam=0.5 * big, fit_window=window)
        _DICHOTOMY["high"] = run(conf, lam=1.2 * big)
        _DICHOTOMY["wall"] = time.perf_counter() - t0
    return _DICHOTOMY


@pytest.mark.slow
def test_A6_lambda_dichotomy():
    with criterion("A6", None) as c:
        runs = dichotomy_runs()
        _, ec, low = runs["low"]
        _, ch = doubling_changes(low.probe_series)
        c.check(low.classification == "converged", f"0.5 Lambda -> {low.classification}")
        c.check(max(ch[-2:]) < 1e-3, f"last two doubling changes {ch[-2]:.1e}, {ch[-1]:.1e}")
        _, _, high = runs["high"]
        hv = [v for _, v in high.probe_series]
        c.check(high.classification == "blowup", f"1.2 Lambda -> {high.classification}")
        finite = [v for v in hv if math.isfinite(v)]
        k = ec.growth_window
        tail = finite[-(k + 1):]
        ratios = [b / a for a, b in zip(tail, tail[1:])]
        grow = len(tail) == k + 1 and min(ratios) >= 10.0
        c.check(grow, "last doublings x" + ", x".join(f"{x:.1f}" for x in ratios))
        c.check(max(finite) > 1e8, f"probe max {max(finite):.2e} > 1e8")
        c.check(runs["wall"] < 600.0, f"runtime {runs['wall']:.1f}s < 600s")


@pytest.mark.slow
def test_A9_singularity_rate():
    with criterion("A9", None) as c:
        grid, ec, low = dichotomy_runs()["low"]
        gam = derive(P3, ec.lam).gamma
        fit = low.fitted_singularity_exponent
        c.check(fit is not None, "fit available on converged run")
        rel = abs(fit.slope + gam) / gam
        c.check(rel < 0.10, f"slope {fit.slope:.4f} vs -gamma {-gam:.4f} (rel {rel:.3f})")


# ---- A7 ---------------------------------------------------------------------


@pytest.mark.slow
def test_A7_p_dichotomy():
    with criterion("A7", 600.0) as c:
        conf = cfg("p_dichotomy.cfg")
        lam = 0.5 * lambda_star(P3)
        d = derive(P3, lam)
        grid, _ = _setup(conf)
        # small data: zero initial datum, source under the power barrier, admissible for the weight
        f = Profile.parse(conf["evolution"]["f"])
        adm = data_admissibility(f, grid, d.gamma)
        c.check(adm.admissible, f"source admissible (exponent {adm.exponent:.3f} < N - gamma)")
        pb = d.p_plus
        _, _, below = run(conf, lam=lam, p=pb - 0.3, u0="zero")
        c.check(below.classification == "converged", f"p_+ - 0.3 -> {below.classification}")
        _, _, above = run(conf, lam=lam, p=pb + 0.3, u0="constant:1")
        c.check(above.classification == "blowup", f"p_+ + 0.3 with u0 = 1 -> {above.classification}")


# ---- A8 ---------------------------------------------------------------------


def test_A8_supercritical_hardy_power():
    with criterion("A8", 300.0) as c:
        conf = cfg("hardy_power.cfg")
        c.check(conf["evolution"]["p"] == 1.5 and conf["evolution"]["nonlinear_weight"] == "hardy", "p = 1.5 with weight |x|^{-2s}")
        _, _, rep = run(conf)
        c.check(rep.classification == "blowup", f"classification {rep.classification} ({rep.diagnostics['reason']})")
        for N, s in [(3, 0.5), (2, 0.3), (1, 0.25)]:
            dbar = log_potential_constant(FracParams(N, s))
            c.check(0.0 < dbar < math.inf, f"D_bar({N},{s}) = {dbar:.4g}")


# ---- A10 --------------------------------------------------------------------


def test_A10_hardy_optimality(ladder):
    with criterion("A10", 120.0) as c:
        g, op = ladder[1024]
        big = lambda_star(P3)
        floor = big * (1.0 - HARDY_SLACK)
        rng = np.random.default_rng(10)
        r = g.nodes
        worst = math.inf
        for _ in range(200):
            coef = rng.normal(size=rng.integers(1, 6))
            phi = np.polynomial.polynomial.polyval(r, coef) * (1.0 - r * r) ** 2
            worst = min(worst, hardy_rayleigh_quotient(phi, g, P3, op))
        fam = [hardy_rayleigh_quotient(r ** (-P3.half_gap + e) * (1.0 - r * r) ** 2, g, P3, op) for e in (0.4, 0.2, 0.1, 0.05)]
        worst = min(worst, *fam)
        c.check(worst >= floor, f"min quotient {worst:.4f} >= {floor:.4f}")
        c.check(all(b < a for a, b in zip(fam, fam[1:])), "family " + ", ".join(f"{q:.4f}" for q in fam) + " decreasing")
        c.check(fam[-1] - big < 0.5 * (fam[0] - big), "family approaches Lambda")


# ---- A11 --------------------------------------------------------------------


def test_A11_ground_state_identity(ladder):
    with criterion("A11", 60.0) as c:
        for gam in (0.1, 0.3):
            res = []
            for M in (256, 512, 1024):
                g, op = ladder[M]
                opg = assemble_operator(g, P3, gam)
                res.append(ground_state_identity_residual(bump(g.nodes), gam, g, P3, op, opg))
            c.check(res[-1] < 1e-4, f"gamma={gam}: residual {res[-1]:.1e} at M=1024")
            c.check(res[0] > res[1] > res[2], f"gamma={gam}: decreasing " + ", ".join(f"{x:.1e}" for x in res))


# ---- A12 --------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.parametrize("q", [1.0])
def test_A12_harnack_quotient(q):
    with criterion("A12", 300.0) as c:
        conf = cfg("harnack.cfg")
        h = conf["harnack"]
        c.check(Profile.parse(conf["evolution"]["f"]).amplitude >= 0.0, "f >= 0")
        vals = []
        for M in (256, 512, 1024):
            conf["grid"]["M"] = M
            grid, ec, rep = run(conf)
            gam = derive(P3, ec.lam).gamma
            st = rep.final_state
            v = st.u * grid.nodes**gam
            Q1 = HarnackCylinder(h["radius"], "minus", h["anchor"], P3.s)
            Q2 = HarnackCylinder(h["radius"], "plus", h["anchor"], P3.s)
            vals.append(harnack_quotient(v, st.t, grid, gam, Q1, Q2, q))
        finite = all(0.0 < x < math.inf for x in vals)
        c.check(finite, "quotients " + ", ".join(f"{x:.3f}" for x in vals))
        c.check(finite and max(vals) / min(vals) < 2.0, f"spread x{max(vals) / min(vals):.2f} < 2")
