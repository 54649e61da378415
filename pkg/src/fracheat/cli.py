"""Command-line experiment runner.

Every subcommand except ``constants`` reads a sectioned key-value config
(``[section]`` headers, ``key = value`` lines, ``#`` comments), writes one
CSV per experiment plus ``manifest.json`` into ``--out``, and exits with 0
when all requested checks pass, 1 on a check failure and 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np

from . import __version__
from .analysis import (
    HARDY_SLACK,
    CheckRow,
    HarnackCylinder,
    data_admissibility,
    ground_state_identity_residual,
    hardy_rayleigh_quotient,
    harnack_quotient,
    picone_check,
    poincare_wirtinger_check,
    weighted_hardy_sobolev_check,
    write_check_csv,
)
from .constants import FracParams, a_norm, derive, lambda_star, psi
from .discrete import assemble_operator, build_radial_grid, exterior_power_tail, hardy_potential
from .errors import ConfigError, FracHeatError
from .evolution import EvolutionConfig, Profile, monotone_iteration, steady_supersolution_check
from .kernel import build_kernel_table, log_potential_constant, power_constant, write_kernel_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _float(text):
    return float(text)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _optional_float(text):
    return None if text.strip().lower() in ("none", "") else float(text)


def _float_list(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _word_list(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _profile(text):
    return Profile.parse(text).describe()


def _profile_list(text):
    return tuple(_profile(x) for x in _word_list(text))


# section -> key -> (parser, default)
SCHEMA = {
    "params": {"N": (_int, 3), "s": (_float, 0.5)},
    "grid": {
        "R": (_float, 1.0),
        "M": (_int, 256),
        "grading": (str, "uniform"),
        "ratio": (_float, 0.9),
    },
    "evolution": {
        "lambda_factor": (_float, 0.0),
        "T_final": (_float, 1.0),
        "steps": (_int, 400),
        "p": (_optional_float, None),
        "f": (_profile, "constant:1.0"),
        "u0": (_profile, "zero"),
        "probe_radius": (_float, 0.5),
        "probe_time": (_float, 0.5),
        "n_max": (_int, 64),
        "nonlinear_weight": (str, "none"),
        "blowup_threshold": (_float, 1e8),
        "growth_factor": (_float, 10.0),
        "conv_rtol": (_float, 1e-3),
        "norm_rtol": (_float, 1e-2),
        "expect": (str, ""),
    },
    "sweep": {
        "lambda_factors": (_float_list, (0.5, 0.9, 1.1, 1.3)),
        "p_offsets": (_float_list, (-0.3, 0.3)),
        "u0s": (_profile_list, ()),
        "expect": (_word_list, ()),
    },
    "kernel": {"sigma_max": (_float, 1e4), "per_side": (_int, 200), "thetas": (_float_list, (0.5, 1.0, 1.5))},
    "steady": {"thetas": (_float_list, (0.5, 1.0, 1.5)), "barrier_theta": (_optional_float, None), "barrier_c": (_float, 1.0)},
    "harnack": {"radius": (_float, 0.5), "anchor": (_float, 0.5), "q": (_float, 1.0)},
    "checks": {"seed": (_int, 12345), "samples": (_int, 50), "gammas": (_float_list, (0.1, 0.3))},
}


def parse_config(text: str) -> dict:
    """Parse config text into {section: {key: value}} with every default filled in."""
    seen: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", line=lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            seen.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any section", line=lineno)
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line=lineno)
        if key in seen[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", line=lineno)
        parser = SCHEMA[section][key][0]
        try:
            seen[section][key] = parser(value)
        except (ValueError, FracHeatError) as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}", line=lineno) from None
    resolved = {}
    for sec, keys in SCHEMA.items():
        resolved[sec] = {k: seen.get(sec, {}).get(k, default) for k, (_, default) in keys.items()}
    return resolved


def load_config(path: str | None) -> dict:
    if path is None:
        return parse_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _schedule(n_max: int) -> tuple:
    if n_max < 1:
        raise ConfigError("evolution.n_max must be >= 1")
    out, n = [], 1
    while n <= n_max:
        out.append(n)
        n *= 2
    return tuple(out)


def _params(cfg) -> FracParams:
    return FracParams(cfg["params"]["N"], cfg["params"]["s"])


@lru_cache(maxsize=8)
def _grid_and_operator(N, s, R, M, grading, ratio, gamma=0.0):
    params = FracParams(N, s)
    grid = build_radial_grid(R, M, grading, N=N, ratio=ratio)
    return grid, assemble_operator(grid, params, gamma)


def _setup(cfg, gamma=0.0):
    g = cfg["grid"]
    return _grid_and_operator(cfg["params"]["N"], cfg["params"]["s"], g["R"], g["M"], g["grading"], g["ratio"], gamma)


def _evolution_config(cfg, lam=None, p="config", u0=None) -> EvolutionConfig:
    e = cfg["evolution"]
    params = _params(cfg)
    lam = e["lambda_factor"] * lambda_star(params) if lam is None else lam
    return EvolutionConfig(
        lam=lam,
        T_final=e["T_final"],
        dt=e["T_final"] / e["steps"],
        p=e["p"] if p == "config" else p,
        f=Profile.parse(e["f"]),
        u0=Profile.parse(e["u0"] if u0 is None else u0),
        probe_radius=e["probe_radius"],
        probe_time=e["probe_time"],
        n_schedule=_schedule(e["n_max"]),
        nonlinear_weight=e["nonlinear_weight"],
        blowup_threshold=e["blowup_threshold"],
        growth_factor=e["growth_factor"],
        conv_rtol=e["conv_rtol"],
        norm_rtol=e["norm_rtol"],
    )


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_two_column(path, x, y) -> None:
    """Whitespace-separated two-column file readable by gnuplot."""
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r} {float(b)!r}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _derived_echo(params, lam):
    out = {"N": params.N, "s": params.s, "lambda_star": lambda_star(params)}
    if lam is not None and 0.0 < lam <= lambda_star(params):
        out.update(derive(params, lam).as_dict())
    return out


def _write_manifest(out_dir, command, cfg, params, lam, wall, summary, files) -> str:
    manifest = {
        "tool": "fracheat",
        "version": __version__,
        "command": command,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg,
        "derived": _derived_echo(params, lam) if params is not None else None,
        "wall_clock_seconds": wall,
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "summary": summary,
        "outputs": sorted(files),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---- constants -------------------------------------------------------------


def cmd_constants(args) -> int:
    params = FracParams(args.N, args.s)
    big = lambda_star(params)
    rows = [("lambda_star", big), ("a_norm", a_norm(params))]
    if args.lam is not None:
        text = args.lam.strip().lower()
        lam = big if text == "max" else float(text)
        d = derive(params, lam)
        rows += [
            ("lambda", d.lam),
            ("alpha", d.alpha),
            ("gamma", d.gamma),
            ("gamma_bar", d.gamma_bar),
            ("p_plus", d.p_plus),
            ("tau", d.tau),
            ("two_star", d.two_star),
        ]
    for name, value in rows:
        print(f"{name} = {value!r}")
    return EXIT_OK


# ---- file-producing subcommands ---------------------------------------------


def cmd_kernel(cfg, out_dir):
    params = _params(cfg)
    k = cfg["kernel"]
    table = build_kernel_table(params, sigma_max=k["sigma_max"], per_side=k["per_side"])
    files = []
    path = os.path.join(out_dir, "kernel.csv")
    write_kernel_csv(table, path)
    files.append(path)
    rows, ok = [], True
    for th in k["thetas"]:
        if not 0.0 < th < params.N - 2.0 * params.s:
            raise ConfigError(f"kernel theta {th} outside (0, N-2s)")
        quad = power_constant(params, 0.0, th)
        exact = psi(params, th)
        rel = abs(quad / exact - 1.0)
        ok &= rel < 1e-6
        rows.append((th, quad, exact, rel))
    path = os.path.join(out_dir, "power_constants.csv")
    _write_csv(path, ["theta", "quadrature", "closed_form", "relative_error"], rows)
    files.append(path)
    dbar = log_potential_constant(params)
    path = os.path.join(out_dir, "log_potential.csv")
    _write_csv(path, ["N", "s", "D_bar"], [(params.N, params.s, dbar)])
    files.append(path)
    return files, {"power_constants_match": bool(ok), "D_bar_positive": bool(dbar > 0.0)}, ok and dbar > 0.0, None


def cmd_steady(cfg, out_dir):
    params = _params(cfg)
    grid, op = _setup(cfg)
    st = cfg["steady"]
    files, summary, ok = [], {}, True
    rows = []
    interior = (grid.nodes >= 0.1 * grid.R) & (grid.nodes <= 0.9 * grid.R)
    for th in st["thetas"]:
        u = grid.nodes**-th
        got = op.apply(u) - exterior_power_tail(grid, params, th)
        want = psi(params, th) * grid.nodes ** (-th - 2.0 * params.s)
        rel = np.abs(got / want - 1.0)
        summary[f"theta={th!r}"] = float(np.max(rel[interior]))
        for i in range(grid.M):
            rows.append((th, i, grid.nodes[i], got[i], want[i], rel[i]))
    path = os.path.join(out_dir, "power_residuals.csv")
    _write_csv(path, ["theta", "node", "r", "discrete", "closed_form", "relative_error"], rows)
    files.append(path)
    lam = cfg["evolution"]["lambda_factor"] * lambda_star(params)
    if st["barrier_theta"] is not None and lam > 0.0:
        th = st["barrier_theta"]
        w = st["barrier_c"] * grid.nodes**-th
        rep = steady_supersolution_check(w, op, hardy_potential(grid, lam, math.inf, params.s), cfg["evolution"]["p"])
        # residual against the size of the largest term, node by node
        scale = np.abs(op.apply(w)) + hardy_potential(grid, lam, math.inf, params.s).values * w
        if cfg["evolution"]["p"] is not None:
            scale = scale + w ** cfg["evolution"]["p"]
        rel = rep.residual / scale
        path = os.path.join(out_dir, "barrier.csv")
        _write_csv(path, ["node", "r", "residual", "relative"], [(i, grid.nodes[i], rep.residual[i], rel[i]) for i in range(grid.M)])
        files.append(path)
        summary["barrier_min_residual"] = rep.min_residual
        summary["barrier_min_relative"] = float(np.min(rel))
        summary["barrier_negative_nodes"] = [int(i) for i in np.nonzero(rep.residual < 0.0)[0]]
        ok &= rep.is_supersolution
    return files, summary, ok, lam if lam > 0.0 else None


def _report_files(out_dir, stem, report, grid):
    files = []
    path = os.path.join(out_dir, f"{stem}_probe.csv")
    _write_csv(path, ["n", "probe"], report.probe_series)
    files.append(path)
    path = os.path.join(out_dir, f"{stem}_norms.csv")
    l1 = dict(report.norms["L1_dx"])
    lmu = dict(report.norms["L1_dmu"])
    _write_csv(path, ["n", "L1_dx", "L1_dmu"], [(n, l1[n], lmu[n]) for n in sorted(l1)])
    files.append(path)
    st = report.final_state
    if st is not None and st.u is not None and np.all(np.isfinite(st.u[-1])):
        path = os.path.join(out_dir, f"{stem}_snapshot.csv")
        _write_csv(path, ["node", "r", "u_final"], [(i, grid.nodes[i], st.u[-1, i]) for i in range(grid.M)])
        files.append(path)
        path = os.path.join(out_dir, f"{stem}_snapshot.dat")
        write_two_column(path, grid.nodes, st.u[-1])
        files.append(path)
    return files


def cmd_evolve(cfg, out_dir):
    params = _params(cfg)
    grid, op = _setup(cfg)
    ec = _evolution_config(cfg)
    window = None
    if 0.0 < ec.lam <= lambda_star(params):
        window = (2.0 * grid.nodes[0], grid.R / 8.0)
    report = monotone_iteration(ec, grid, params, operator=op, fit_window=window)
    files = _report_files(out_dir, "evolve", report, grid)
    expect = cfg["evolution"]["expect"].strip()
    ok = (report.classification == expect) if expect else True
    summary = {"classification": report.classification, "expected": expect or None, **report.as_dict()}
    return files, summary, ok, ec.lam


def _sweep_point(cfg, lam, p, u0=None):
    """One sweep point; failures are reported as inconclusive, never raised."""
    try:
        params = _params(cfg)
        grid, op = _setup(cfg)
        ec = _evolution_config(cfg, lam=lam, p=p, u0=u0)
        rep = monotone_iteration(ec, grid, params, operator=op)
        last = rep.probe_series[-1][1] if rep.probe_series else math.nan
        return rep.classification, last, rep.diagnostics["reason"]
    except Exception as exc:  # a failing point must not abort the sweep
        return "inconclusive", math.nan, f"error: {exc}"


def _point_data(cfg, count):
    """Per-point initial data from sweep.u0s, or the evolution u0 everywhere."""
    u0s = cfg["sweep"]["u0s"]
    if not u0s:
        return [None] * count
    if len(u0s) != count:
        raise ConfigError("sweep.u0s must list one initial datum per sweep point")
    return list(u0s)


def _run_points(cfg, points, workers):
    data = _point_data(cfg, len(points))
    if workers <= 1 or len(points) <= 1:
        return [_sweep_point(cfg, lam, p, u0) for (lam, p), u0 in zip(points, data)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(_sweep_point, cfg, lam, p, u0) for (lam, p), u0 in zip(points, data)]
        return [f.result() for f in futures]


def _sweep_expect(cfg, results):
    expect = cfg["sweep"]["expect"]
    if not expect:
        return True, None
    if len(expect) != len(results):
        raise ConfigError("sweep.expect must list one classification per sweep point")
    return all(e == r[0] for e, r in zip(expect, results)), list(expect)


def cmd_sweep_lambda(cfg, out_dir, workers):
    params = _params(cfg)
    big = lambda_star(params)
    factors = cfg["sweep"]["lambda_factors"]
    if not factors:
        raise ConfigError("sweep.lambda_factors is empty")
    points = [(fac * big, cfg["evolution"]["p"]) for fac in factors]
    results = _run_points(cfg, points, workers)
    data = [u0 or cfg["evolution"]["u0"] for u0 in _point_data(cfg, len(points))]
    rows = [(fac, lam, u0, res[0], res[1], res[2]) for fac, (lam, _), u0, res in zip(factors, points, data, results)]
    path = os.path.join(out_dir, "sweep_lambda.csv")
    _write_csv(path, ["lambda_factor", "lambda", "u0", "classification", "final_probe", "reason"], rows)
    ok, expected = _sweep_expect(cfg, results)
    summary = {"classifications": [r[0] for r in results], "expected": expected}
    return [path], summary, ok, None


def cmd_sweep_p(cfg, out_dir, workers):
    params = _params(cfg)
    lam = cfg["evolution"]["lambda_factor"] * lambda_star(params)
    if not 0.0 < lam <= lambda_star(params):
        raise ConfigError("sweep-p needs 0 < evolution.lambda_factor <= 1")
    offsets = cfg["sweep"]["p_offsets"]
    if not offsets:
        raise ConfigError("sweep.p_offsets is empty")
    pp = derive(params, lam).p_plus
    points = [(lam, pp + off) for off in offsets]
    if any(p < 1.0 for _, p in points):
        raise ConfigError("every swept power must be >= 1")
    results = _run_points(cfg, points, workers)
    data = [u0 or cfg["evolution"]["u0"] for u0 in _point_data(cfg, len(points))]
    rows = [(off, p, u0, res[0], res[1], res[2]) for off, (_, p), u0, res in zip(offsets, points, data, results)]
    path = os.path.join(out_dir, "sweep_p.csv")
    _write_csv(path, ["p_offset", "p", "u0", "classification", "final_probe", "reason"], rows)
    ok, expected = _sweep_expect(cfg, results)
    summary = {"p_plus": pp, "classifications": [r[0] for r in results], "expected": expected}
    return [path], summary, ok, lam


def cmd_harnack(cfg, out_dir):
    params = _params(cfg)
    grid, op = _setup(cfg)
    ec = _evolution_config(cfg)
    if not 0.0 < ec.lam <= lambda_star(params):
        raise ConfigError("harnack needs 0 < evolution.lambda_factor <= 1")
    gamma = derive(params, ec.lam).gamma
    h = cfg["harnack"]
    rep = monotone_iteration(ec, grid, params, operator=op)
    st = rep.final_state
    v = st.u * grid.nodes**gamma
    Q1 = HarnackCylinder(h["radius"], "minus", h["anchor"], params.s)
    Q2 = HarnackCylinder(h["radius"], "plus", h["anchor"], params.s)
    quotient = harnack_quotient(v, st.t, grid, gamma, Q1, Q2, h["q"])
    path = os.path.join(out_dir, "harnack.csv")
    _write_csv(path, ["radius", "anchor", "q", "gamma", "quotient"], [(h["radius"], h["anchor"], h["q"], gamma, quotient)])
    ok = math.isfinite(quotient) and quotient > 0.0
    return [path], {"quotient": quotient, "classification": rep.classification}, ok, ec.lam


def _trial_family(grid, params, eps):
    r = grid.nodes / grid.R
    return r ** (-params.half_gap + eps) * np.clip(1.0 - r * r, 0.0, None) ** 2


def cmd_checks(cfg, out_dir):
    params = _params(cfg)
    grid, op = _setup(cfg)
    c = cfg["checks"]
    rng = np.random.default_rng(c["seed"])
    big = lambda_star(params)
    rows = []
    r = grid.nodes / grid.R

    # Hardy quotients over random smooth radial profiles
    worst = math.inf
    for _ in range(c["samples"]):
        k = rng.integers(1, 5)
        coef = rng.normal(size=k)
        phi = np.polynomial.polynomial.polyval(r, coef) * (1.0 - r * r) ** 2
        if not np.any(phi != 0.0):
            continue
        worst = min(worst, hardy_rayleigh_quotient(phi, grid, params, op))
    rows.append(CheckRow("hardy_min_random", {"samples": c["samples"]}, worst, big * (1.0 - HARDY_SLACK), worst >= big * (1.0 - HARDY_SLACK)))
    fam = [hardy_rayleigh_quotient(_trial_family(grid, params, e), grid, params, op) for e in (0.4, 0.2, 0.1)]
    dec = all(b < a for a, b in zip(fam, fam[1:])) and fam[-1] >= big * (1.0 - HARDY_SLACK)
    rows.append(CheckRow("hardy_minimizing_family", {"eps": "0.4/0.2/0.1"}, fam[-1], big * (1.0 - HARDY_SLACK), dec))

    # Picone over random positive pairs
    worst = math.inf
    for _ in range(c["samples"]):
        u = rng.uniform(0.1, 2.0, grid.M)
        v = rng.normal(size=grid.M)
        worst = min(worst, picone_check(u, v, op).margin)
    rows.append(CheckRow("picone_margin", {"samples": c["samples"]}, worst, -1e-12, worst >= -1e-12))

    bump = np.where(r < 1.0, np.exp(1.0 - 1.0 / np.clip(1.0 - r * r, 1e-300, None)), 0.0)
    for gam in c["gammas"]:
        if not 0.0 < gam < params.half_gap:
            raise ConfigError(f"checks gamma {gam} outside (0, (N-2s)/2)")
        _, opg = _setup(cfg, gam)
        res = ground_state_identity_residual(bump, gam, grid, params, op, opg)
        rows.append(CheckRow("ground_state_identity", {"gamma": gam}, res, 1e-4, res < 1e-4))
        step = np.where(r < 0.4, 1.0, 0.0)
        ratio = poincare_wirtinger_check(step, lambda x: np.clip(1.5 - 2.0 * x, 0.0, 1.0), grid, gam, opg)
        rows.append(CheckRow("poincare_wirtinger_ratio", {"gamma": gam}, ratio, math.inf, 0.0 < ratio < math.inf))
        rep = weighted_hardy_sobolev_check(grid.nodes**-gam * (1.0 - r * r) ** 2, grid, params, gam, opg)
        rows.append(CheckRow("weighted_hardy_quotient", {"gamma": gam}, rep.hardy_quotient, 0.0, rep.hardy_quotient > 0.0))
        rows.append(CheckRow("weighted_sobolev_quotient", {"gamma": gam}, rep.sobolev_quotient, 0.0, rep.sobolev_quotient > 0.0))
        adm = data_admissibility(Profile("constant", 1.0), grid, gam)
        exact = grid.sphere_area * grid.R ** (params.N - gam) / (params.N - gam)
        rel = abs(adm.value / exact - 1.0)
        rows.append(CheckRow("admissibility_constant_source", {"gamma": gam}, rel, 1e-8, adm.admissible and rel < 1e-8))

    path = os.path.join(out_dir, "checks.csv")
    write_check_csv(rows, path)
    summary = {row.name + ("" if not row.parameters.get("gamma") else f"[gamma={row.parameters['gamma']}]"): row.passed for row in rows}
    return [path], summary, all(row.passed for row in rows), None


# ---- entry point ------------------------------------------------------------

FILE_COMMANDS = ("kernel", "steady", "evolve", "sweep-lambda", "sweep-p", "harnack", "checks")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracheat", description="Fractional heat equation with Hardy potential: numerical experiments.")
    ap.add_argument("--version", action="version", version=f"fracheat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("constants", help="print spectral constants")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--s", type=float, required=True)
    c.add_argument("--lambda", dest="lam", default=None, help="a value in (0, Lambda] or 'max'")
    for name in FILE_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="sectioned key-value config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--grid-M", dest="grid_M", type=int, default=None)
        p.add_argument("--grid-R", dest="grid_R", type=float, default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        if args.command == "constants":
            return cmd_constants(args)
        cfg = load_config(args.config)
        if args.grid_M is not None:
            cfg["grid"]["M"] = args.grid_M
        if args.grid_R is not None:
            cfg["grid"]["R"] = args.grid_R
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        params = _params(cfg)
        os.makedirs(args.out, exist_ok=True)
        t0 = time.perf_counter()
        cmd = args.command
        if cmd == "sweep-lambda":
            files, summary, ok, lam = cmd_sweep_lambda(cfg, args.out, args.workers)
        elif cmd == "sweep-p":
            files, summary, ok, lam = cmd_sweep_p(cfg, args.out, args.workers)
        else:
            runner = {
                "kernel": cmd_kernel,
                "steady": cmd_steady,
                "evolve": cmd_evolve,
                "harnack": cmd_harnack,
                "checks": cmd_checks,
            }[cmd]
            files, summary, ok, lam = runner(cfg, args.out)
        summary = {"passed": bool(ok), **summary}
        _write_manifest(args.out, cmd, cfg, params, lam, time.perf_counter() - t0, summary, [os.path.basename(f) for f in files])
        print(f"{cmd}: {'pass' if ok else 'FAIL'} ({len(files)} files in {args.out})")
        return EXIT_OK if ok else EXIT_FAIL
    except FracHeatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
