import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh

from fracheat.constants import FracParams, derive, lambda_star
from fracheat.discrete import assemble_operator, build_radial_grid, hardy_potential
from fracheat.errors import PreconditionError
from fracheat.evolution import (
    EvolutionConfig,
    Profile,
    classify,
    factor_step,
    monotone_iteration,
    solve_truncated_problem,
    steady_supersolution_check,
    step_linear,
    truncate,
)

P3 = FracParams(3, 0.5)
BIG = lambda_star(P3)


@pytest.fixture(scope="module")
def small():
    g = build_radial_grid(1.0, 48, N=3)
    return g, assemble_operator(g, P3)


def run_levels(config, op, levels):
    """Trajectories of levels 0..levels, each lagging the previous one."""
    out, prev = [], None
    for n in range(levels + 1):
        prev = solve_truncated_problem(n, prev, op, config)
        out.append(prev)
    return out


# ---- truncate ---------------------------------------------------------------


def test_truncate_examples():
    assert np.all(truncate(np.full(3, 0.5), 1) == 0.5)
    assert np.all(truncate(np.full(3, 5.0), 2) == 2.0)
    assert np.all(truncate(np.full(3, -5.0), 2) == -2.0)
    with pytest.raises(PreconditionError):
        truncate(np.ones(2), 0)


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=20), st.integers(min_value=1, max_value=100))
def test_truncate_bounded_and_idempotent(values, n):
    g = np.array(values)
    t = truncate(g, n)
    assert np.all(np.abs(t) <= n)
    assert np.array_equal(truncate(t, n), t)
    inside = np.abs(g) <= n
    assert np.array_equal(t[inside], g[inside])


# ---- step_linear ------------------------------------------------------------


def test_step_zero_stays_zero(small):
    g, op = small
    out = step_linear(np.zeros(g.M), op, hardy_potential(g, 0.3, 4, 0.5), np.zeros(g.M), 0.01)
    assert np.all(out == 0.0)


def test_step_without_operator_is_explicit_update():
    u = np.array([0.2, 1.0, 3.0])
    rhs = np.array([1.0, 0.0, 2.0])
    out = step_linear(u, np.zeros((3, 3)), None, rhs, 0.1)
    assert np.allclose(out, u + 0.1 * rhs, rtol=1e-15)


def test_step_single_node_decay():
    kappa, dt = 3.0, 0.2
    u = np.array([2.0])
    for _ in range(5):
        nxt = step_linear(u, np.array([[kappa]]), None, np.zeros(1), dt)
        assert nxt[0] == pytest.approx(u[0] / (1.0 + dt * kappa), rel=1e-15)
        u = nxt


def test_step_uses_lagged_potential(small):
    g, op = small
    rng = np.random.default_rng(2)
    u, prev = rng.uniform(0.0, 1.0, (2, g.M))
    V = hardy_potential(g, 0.4, 8, 0.5)
    dt = 0.05
    want = np.linalg.solve(np.eye(g.M) + dt * op.matrix, u + dt * V.values * prev)
    got = step_linear(u, op, V, np.zeros(g.M), dt, u_prev=prev, factor=factor_step(op, dt))
    assert np.allclose(got, want, rtol=1e-11)


@given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(min_value=1e-4, max_value=10.0))
def test_step_preserves_positivity(seed, dt):
    g = build_radial_grid(1.0, 24, N=3)
    op = _op24()
    rng = np.random.default_rng(seed)
    u, rhs = rng.uniform(0.0, 5.0, (2, g.M))
    out = step_linear(u, op, hardy_potential(g, 0.5, 3, 0.5), rhs, dt)
    assert np.all(out >= 0.0)
    # the unclipped solve is already nonnegative up to round-off
    raw = np.linalg.solve(np.eye(g.M) + dt * op.matrix, u + dt * rhs + dt * hardy_potential(g, 0.5, 3, 0.5).values * u)
    assert np.min(raw) >= -1e-12 * np.max(np.abs(raw))


_CACHE = {}


def _op24():
    if "op" not in _CACHE:
        g = build_radial_grid(1.0, 24, N=3)
        _CACHE["op"] = assemble_operator(g, P3)
    return _CACHE["op"]


# ---- solve_truncated_problem ------------------------------------------------


def test_all_zero_data_gives_zero(small):
    g, op = small
    cfg = EvolutionConfig(lam=0.0, T_final=1.0, f=Profile("zero"), u0=Profile("zero"))
    for traj in run_levels(cfg, op, 3):
        assert np.all(traj == 0.0)


def test_heat_flow_against_eigen_decomposition(small):
    g, op = small
    f = Profile("bump", 0.8, radius=0.7)
    u0 = Profile("indicator", 0.5, radius=0.4)
    cfg = EvolutionConfig(lam=0.0, T_final=2.0, dt=0.02, f=f, u0=u0)
    traj = solve_truncated_problem(3, np.zeros((cfg.steps + 1, g.M)), op, cfg)
    # symmetric form B = W^{1/2} A W^{-1/2}
    sw = np.sqrt(op.weights)
    B = sw[:, None] * op.matrix / sw[None, :]
    mu, Q = eigh(0.5 * (B + B.T))
    c = Q.T @ (sw * u0(g.nodes))
    fh = Q.T @ (sw * f(g.nodes))
    for k in range(cfg.steps):
        c = (c + cfg.dt * fh) / (1.0 + cfg.dt * mu)
        if (k + 1) % 25 == 0:
            want = (Q @ c) / sw
            assert np.allclose(traj[k + 1], want, rtol=1e-9, atol=1e-12)
    # long-time state approaches the steady lift A^{-1} f
    lift = np.linalg.solve(op.matrix, f(g.nodes))
    assert np.max(np.abs(traj[-1] - lift)) < 0.05 * np.max(lift)


def test_level_zero_uses_truncated_source_only(small):
    g, op = small
    cfg = EvolutionConfig(lam=0.5 * BIG, T_final=1.0, f=Profile("constant", 3.0), u0=Profile("constant", 5.0))
    traj = solve_truncated_problem(0, None, op, cfg)
    assert np.all(traj[0] == 1.0)
    ref = solve_truncated_problem(0, None, op, EvolutionConfig(lam=0.0, T_final=1.0, f=Profile("constant", 1.0), u0=Profile("constant", 1.0)))
    assert np.array_equal(traj, ref)


def test_previous_trajectory_shape_checked(small):
    g, op = small
    cfg = EvolutionConfig(T_final=1.0)
    with pytest.raises(PreconditionError):
        solve_truncated_problem(2, None, op, cfg)
    with pytest.raises(PreconditionError):
        solve_truncated_problem(2, np.zeros((3, g.M)), op, cfg)


@pytest.mark.parametrize("p", [None, 2.0])
def test_monotone_in_level(small, p):
    g, op = small
    cfg = EvolutionConfig(lam=0.6 * BIG, T_final=0.5, dt=0.01, probe_time=0.25, p=p, f=Profile("power", 0.5, exponent=0.8), u0=Profile("bump", 0.3, radius=0.6))
    levels = run_levels(cfg, op, 12)
    for a, b in zip(levels, levels[1:]):
        assert np.all(b >= a - 1e-9)
        assert np.all(a >= 0.0)


def test_comparison_under_doubled_source(small):
    g, op = small
    base = dict(lam=0.5 * BIG, T_final=0.5, dt=0.01, probe_time=0.25, u0=Profile("bump", 0.2, radius=0.5))
    one = run_levels(EvolutionConfig(f=Profile("power", 0.4, exponent=0.5), **base), op, 6)
    two = run_levels(EvolutionConfig(f=Profile("power", 0.8, exponent=0.5), **base), op, 6)
    for a, b in zip(one, two):
        assert np.all(b >= a - 1e-12)


def test_time_step_refinement_is_first_order(small):
    g, op = small
    vals = []
    for steps in (50, 100, 200, 400):
        cfg = EvolutionConfig(lam=0.5 * BIG, T_final=0.5, dt=0.5 / steps, probe_time=0.25, f=Profile("constant", 1.0), u0=Profile("bump", 0.5, radius=0.5))
        traj = run_levels(cfg, op, 4)[-1]
        vals.append(traj[steps // 2, 10])
    d = np.abs(np.diff(vals))
    assert np.all(d[1:] < d[:-1])
    assert 1.6 < d[0] / d[1] < 2.4 and 1.6 < d[1] / d[2] < 2.4


# ---- Profile / EvolutionConfig ----------------------------------------------


@pytest.mark.parametrize("text", ["zero", "constant:2.5", "power:1.5:0.7", "indicator:1:0.3", "bump:2:0.5"])
def test_profile_roundtrip(text):
    p = Profile.parse(text)
    assert Profile.parse(p.describe()) == p


def test_profile_values():
    r = np.array([0.1, 0.4, 0.9])
    assert np.allclose(Profile("power", 2.0, exponent=1.0)(r), 2.0 / r)
    assert np.array_equal(Profile("indicator", 3.0, radius=0.5)(r), [3.0, 3.0, 0.0])
    b = Profile("bump", 1.0, radius=0.5)(r)
    assert b[0] == pytest.approx(math.exp(1.0 - 1.0 / 0.96)) and b[2] == 0.0


@pytest.mark.parametrize("text", ["spike", "constant", "power:1", "bump:a:b"])
def test_profile_parse_errors(text):
    with pytest.raises(PreconditionError):
        Profile.parse(text)


@pytest.mark.parametrize(
    "kwargs",
    [dict(T_final=0.0), dict(T_final=1.0, dt=2.0), dict(probe_time=1.5), dict(lam=-1.0), dict(p=0.5), dict(n_schedule=(2, 1)), dict(n_schedule=()), dict(nonlinear_weight="log")],
)
def test_config_validation(kwargs):
    with pytest.raises(PreconditionError):
        EvolutionConfig(**kwargs)


def test_config_default_step():
    cfg = EvolutionConfig(T_final=2.0)
    assert cfg.dt == 2.0 / 400 and cfg.steps == 400 and cfg.times[-1] == pytest.approx(2.0)


# ---- classify ---------------------------------------------------------------


CFG = EvolutionConfig()


def series(values):
    return [(1 << k, v) for k, v in enumerate(values)]


def test_classify_cases():
    assert classify([], CFG)[0] == "inconclusive"
    assert classify(series([1.0, 2.0, math.inf]), CFG) == ("blowup", "iterates overflowed")
    assert classify(series([1.0, 2e8, math.nan]), CFG)[1] == "non-finite after threshold"
    assert classify(series([1.0, 2.0, math.nan]), CFG)[0] == "inconclusive"
    assert classify(series([1.0, 10.0, 100.0, 1000.0]), CFG) == ("blowup", "sustained growth")
    assert classify(series([1.0, 2.0, 2.0005, 2.0006]), CFG) == ("converged", "probe stationary in n")
    assert classify(series([1.0, 5e8, 7e8, 9e8]), CFG) == ("blowup", "probe above threshold")
    assert classify(series([1.0, 2.0, 3.0]), CFG)[0] == "inconclusive"


def test_classify_stationary_beats_threshold():
    assert classify(series([1e9, 2e9, 2e9, 2e9]), CFG)[0] == "converged"


def test_classify_growth_needs_every_doubling():
    assert classify(series([1.0, 10.0, 20.0, 200.0]), CFG)[0] == "inconclusive"


# ---- monotone_iteration -----------------------------------------------------


def test_pure_dissipation_converges(small):
    g, op = small
    cfg = EvolutionConfig(lam=0.0, T_final=1.0, f=Profile("zero"), u0=Profile("bump", 0.9, radius=0.8))
    rep = monotone_iteration(cfg, g, P3, operator=op)
    assert rep.classification == "converged"
    u = rep.final_state.u
    mass = u @ g.lebesgue_weights
    assert np.all(np.diff(mass) < 0.0)
    assert rep.diagnostics["max_monotonicity_violation"] <= 1e-9


def test_overflow_is_charged_to_next_schedule_point(small):
    g, op = small
    cfg = EvolutionConfig(lam=0.0, T_final=1.0, p=4.0, f=Profile("zero"), u0=Profile("constant", 50.0), n_schedule=(1, 2, 4, 8, 16, 32, 64))
    rep = monotone_iteration(cfg, g, P3, operator=op)
    assert rep.classification == "blowup"
    n_last, v_last = rep.probe_series[-1]
    assert v_last == math.inf and n_last in cfg.n_schedule
    assert rep.norms["L1_dx"][-1] == (n_last, math.inf)


def test_report_fields(small):
    g, op = small
    cfg = EvolutionConfig(lam=0.5 * BIG, T_final=1.0, f=Profile("constant", 1.0), n_schedule=(1, 2, 4))
    rep = monotone_iteration(cfg, g, P3, operator=op)
    assert [n for n, _ in rep.probe_series] == [1, 2, 4]
    assert rep.norms["gamma"] == pytest.approx(derive(P3, 0.5 * BIG).gamma, rel=1e-12)
    assert rep.diagnostics["levels_run"] == 5
    d = rep.as_dict()
    assert set(d) == {"classification", "probe_series", "fitted_singularity_exponent", "diagnostics"}


# ---- steady supersolution check ---------------------------------------------


def test_power_profile_fails_for_large_p():
    g = build_radial_grid(1.0, 128, N=3)
    op = assemble_operator(g, P3)
    lam = 0.5 * BIG
    d = derive(P3, lam)
    w = g.nodes ** -d.gamma
    rep = steady_supersolution_check(w, op, hardy_potential(g, lam, math.inf, 0.5), d.p_plus + 3.0)
    assert rep.min_residual < 0.0 and not rep.is_supersolution


def test_large_constant_on_small_ball_is_supersolution():
    g = build_radial_grid(0.1, 16, N=3)
    op = assemble_operator(g, P3)
    rep = steady_supersolution_check(np.full(g.M, 5.0), op, hardy_potential(g, 0.01, math.inf, 0.5), 2.0)
    assert rep.is_supersolution and rep.min_residual >= 0.0


def test_supersolution_rejects_nonpositive():
    g = build_radial_grid(1.0, 8, N=3)
    op = assemble_operator(g, P3)
    with pytest.raises(PreconditionError):
        steady_supersolution_check(np.zeros(g.M), op, np.zeros(g.M))
