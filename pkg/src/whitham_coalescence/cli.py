"""Command-line front end: ``whitham-coalescence {characteristics,scan,reduce,simulate}``.

Exit codes: 0 success, 1 numerical failure, 2 configuration or domain error,
3 blow-up during simulation.
"""

import functools
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import boussinesq as bq
from . import io
from .coalescence import CoalescencePoint, find_coalescences, linear_path
from .config import DEFAULT_TOL, Tolerances
from .errors import BlowUp, ConfigError, ModelError, NumericalError, WhithamError
from .model import assemble_pencil, model_from_config
from .models_builtin import CnlsParams, cnls_standing_path
from .pencil import characteristics, graphical_sign_data

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

COMMON_KEYS = {"seed", "out", "tol"}
COMMAND_KEYS = {
    "characteristics": {"model", "omega", "k", "curve"},
    "scan": {"model", "path", "grid", "unfold_eps"},
    "reduce": {"point", "index", "K", "nu"},
    "simulate": {"setup", "s1", "s2", "L", "M", "dt", "t_end", "dealias", "filter", "filter_cutoff",
                 "n_frames", "safety", "init"},
}


def _fail(code, msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BlowUp as exc:
            _fail(EXIT_BLOWUP, str(exc))
        except (ConfigError, ModelError) as exc:
            _fail(EXIT_CONFIG, f"{type(exc).__name__}: {exc}")
        except NumericalError as exc:
            _fail(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}")
        except WhithamError as exc:
            _fail(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}")

    return wrapper


def _load(command, config_path, out, seed, tol):
    cfg = io.load_config(config_path) if config_path else {}
    io.check_keys(cfg, COMMON_KEYS | COMMAND_KEYS[command], where=str(config_path or "config"))
    tol_cfg = cfg.pop("tol", {}) or {}
    if not isinstance(tol_cfg, dict):
        raise ConfigError("'tol' must be a table of tolerance overrides")
    io.check_keys(tol_cfg, Tolerances.__dataclass_fields__, where="tol")
    if tol is not None:
        tol_cfg["refine_tol"] = tol
    try:
        tols = DEFAULT_TOL.with_overrides(**tol_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    out = Path(out if out is not None else cfg.pop("out", "."))
    cfg.pop("out", None)
    seed = seed if seed is not None else cfg.pop("seed", 0)
    cfg.pop("seed", None)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out, int(seed), tols


def _model(cfg):
    mcfg = cfg.get("model")
    if not isinstance(mcfg, dict) or "name" not in mcfg:
        raise ConfigError("config needs a [model] table with a 'name' key")
    mcfg = dict(mcfg)
    return model_from_config({"model": mcfg.pop("name"), **mcfg})


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing required key {key!r}")
    return cfg[key]


def _path(cfg, model):
    pcfg = dict(_require(cfg, "path"))
    kind = pcfg.pop("type", "linear")
    if kind == "linear":
        io.check_keys(pcfg, {"omega0", "k0", "omega1", "k1"}, where="path")
        return linear_path(*(np.atleast_1d(np.asarray(_require(pcfg, key), float)) for key in ("omega0", "k0", "omega1", "k1")))
    if kind == "cnls_standing":
        io.check_keys(pcfg, {"amp1_sq", "ratio_start", "ratio_end"}, where="path")
        if model.name != "cnls":
            raise ConfigError("path type 'cnls_standing' needs the cnls model")
        p = CnlsParams.from_config(**model.params)
        return cnls_standing_path(p, *(float(_require(pcfg, key)) for key in ("amp1_sq", "ratio_start", "ratio_end")))
    raise ConfigError(f"unknown path type {kind!r}; use 'linear' or 'cnls_standing'")


_common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML or JSON config file."),
    click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory (default: .)."),
    click.option("--seed", type=int, default=None, help="Seed for randomised inputs."),
    click.option("--tol", type=float, default=None, help="Newton convergence tolerance (refine_tol)."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Coalescing characteristics of Whitham modulation equations and the
    two-way Boussinesq equation that emerges there."""


@main.command("characteristics")
@common_options
@click.option("--curve", is_flag=True, help="Also write graphical sign data (c, Delta, sign Delta'').")
@handle_errors
def cmd_characteristics(config_path, out, seed, tol, curve):
    """Characteristics and sign characteristics at one (omega, k)."""
    cfg, out, seed, tols = _load("characteristics", config_path, out, seed, tol)
    model = _model(cfg)
    omega, k = (np.atleast_1d(np.asarray(_require(cfg, key), float)) for key in ("omega", "k"))
    pen = assemble_pencil(model, omega, k, tol=tols)
    chars = characteristics(pen, tol=tols)
    rows = [
        (ch.value.real, ch.value.imag, str(ch.is_real).lower(), "" if ch.sign_char is None else str(ch.sign_char),
         ch.residual, ch.nearest_gap, str(ch.multiplicity))
        for ch in chars
    ]
    io.write_csv(out / "characteristics.csv",
                 ["re", "im", "is_real", "sign_char", "residual", "nearest_gap", "multiplicity"], rows)
    io.write_json(out / "characteristics.json", {
        "model": model.name, "omega": omega, "k": k,
        "characteristics": [
            {"re": ch.value.real, "im": ch.value.imag, "is_real": ch.is_real, "sign_char": ch.sign_char,
             "residual": ch.residual, "nearest_gap": ch.nearest_gap, "multiplicity": ch.multiplicity}
            for ch in chars
        ],
    })
    for ch in chars:
        sign = "" if ch.sign_char is None else f"  sign {ch.sign_char:+d}"
        val = f"{ch.value.real:.12g}" if ch.is_real else f"{ch.value.real:.12g} {ch.value.imag:+.12g}i"
        click.echo(f"c = {val}{sign}")
    if curve or "curve" in cfg:
        ccfg = dict(cfg.get("curve", {}))
        io.check_keys(ccfg, {"c_min", "c_max", "n"}, where="curve")
        reals = [ch.value.real for ch in chars] or [0.0]
        span = max(1.0, max(reals) - min(reals))
        c_min = float(ccfg.get("c_min", min(reals) - 0.25 * span))
        c_max = float(ccfg.get("c_max", max(reals) + 0.25 * span))
        data = graphical_sign_data(pen, c_min, c_max, int(ccfg.get("n", 401)))
        io.write_csv(out / "curve.csv", ["c", "delta", "sign_dprime"],
                     [(r["c"], r["delta"], r["sign_dprime"]) for r in data])


@main.command("scan")
@common_options
@click.option("--grid", type=int, default=None, help="Number of path cells (overrides config).")
@handle_errors
def cmd_scan(config_path, out, seed, tol, grid):
    """Scan a path for coalescing characteristics and extract coefficients."""
    cfg, out, seed, tols = _load("scan", config_path, out, seed, tol)
    model = _model(cfg)
    path = _path(cfg, model)
    grid = int(grid if grid is not None else cfg.get("grid", 200))
    scan, points, failures = find_coalescences(model, path, grid=grid, tol=tols,
                                               unfold_eps=float(cfg.get("unfold_eps", 1e-3)))
    n_max = max([len(s.real_roots) for s in scan.samples] + [0])
    flags = {}
    for cand in scan.candidates:
        flags.setdefault(cand.p_left, []).append(cand.kind)
    rows = []
    for s in scan.samples:
        roots = list(s.real_roots) + [None] * (n_max - len(s.real_roots))
        signs = [str(v) if v is not None else "" for v in s.signs] + [""] * (n_max - len(s.signs))
        f = flags.get(s.path_param, []) + (["clustered"] if s.clustered else [])
        rows.append([s.path_param, *roots, *signs, ";".join(f)])
    for p, _reason in scan.skipped:
        rows.append([p, *([None] * n_max), *([""] * n_max), "outside_domain"])
    rows.sort(key=lambda r: r[0])
    header = ["p"] + [f"c_{i + 1}" for i in range(n_max)] + [f"sign_{i + 1}" for i in range(n_max)] + ["flags"]
    io.write_csv(out / "scan.csv", header, rows)
    io.write_json(out / "points.json", {
        "model": {"name": model.name, **model.params},
        "grid": grid,
        "points": [cp.to_dict() for cp in points],
        "failures": [{"p_guess": c.p_guess, "c_guess": c.c_guess, "kind": c.kind, "error": msg} for c, msg in failures],
        "skipped": [{"p": p, "reason": r} for p, r in scan.skipped],
    })
    for p, reason in scan.skipped:
        click.echo(f"warning: skipped p={p:.6g}: {reason}", err=True)
    for c, msg in failures:
        click.echo(f"warning: candidate near p={c.p_guess:.6g}, c={c.c_guess:.6g} rejected: {msg}", err=True)
    for cp in points:
        click.echo(f"p = {cp.path_param:.12g}  c_g = {cp.c_g:.12g}  mu = {cp.mu:.6g}  kappa = {cp.kappa:.6g}"
                   f"  K = {cp.K_disp if cp.K_disp is not None else 'n/a'}  nu = {cp.nu if cp.nu is not None else 'n/a'}")
    click.echo(f"{len(points)} coalescence point(s)")


@main.command("reduce")
@common_options
@click.option("--point", "point_path", type=click.Path(dir_okay=False), default=None,
              help="JSON with a coalescence point (or scan output).")
@click.option("--index", type=int, default=None, help="Which point of a scan output to use (default 0).")
@click.option("--K", "K_flag", type=float, default=None, help="Dispersion coefficient, if the point lacks one.")
@click.option("--nu", "nu_flag", type=float, default=None, help="Unfolding coefficient, if the point lacks one.")
@handle_errors
def cmd_reduce(config_path, out, seed, tol, point_path, index, K_flag, nu_flag):
    """Normalise the two-way Boussinesq equation at a coalescence point."""
    cfg, out, seed, tols = _load("reduce", config_path, out, seed, tol)
    src = point_path or _require(cfg, "point")
    data = io.read_json(src)
    if "points" in data:
        idx = index if index is not None else int(cfg.get("index", 0))
        if not 0 <= idx < len(data["points"]):
            raise ConfigError(f"{src} has {len(data['points'])} point(s); index {idx} is out of range")
        data = data["points"][idx]
    cp = CoalescencePoint.from_dict(data)
    K = K_flag if K_flag is not None else cfg.get("K", cp.K_disp)
    nu = nu_flag if nu_flag is not None else cfg.get("nu", cp.nu)
    if cp.mu is None or cp.kappa is None:
        raise NumericalError("the point has no mu/kappa; run the scan with coefficient extraction")
    if K is None:
        raise NumericalError(
            "no dispersion coefficient K: the model has no closed form for it and the generic value needs "
            "the Jordan chain of the full linear operator, which is not computed; pass --K"
        )
    if nu is None:
        raise NumericalError("no unfolding coefficient nu; pass --nu")
    if cp.kappa == 0:
        raise NumericalError("kappa vanishes: quadratic nonlinearity is absent and re-modulation leads to a cubic one")
    setup = bq.normalize(cp.mu, float(nu), cp.kappa, float(K))
    verdict = bq.classify_dispersion(setup.s1, setup.s2)
    io.write_json(out / "setup.json", {
        **setup.to_dict(),
        "unstable_band": verdict.unstable_band and [verdict.unstable_band[0], str(verdict.unstable_band[1])
                                                    if math.isinf(verdict.unstable_band[1]) else verdict.unstable_band[1]],
        "source": {"c_g": cp.c_g, "path_param": cp.path_param},
    })
    click.echo(f"s1 = {setup.s1:+d}  s2 = {setup.s2:+d}  {setup.classification.value}"
               f"  ({'good' if setup.s2 > 0 else 'bad'} Boussinesq)")


def _initial_state(icfg, L, M, s1, s2, seed):
    icfg = dict(icfg)
    kind = icfg.pop("type", "solitary")
    if kind == "solitary":
        io.check_keys(icfg, {"speed"}, where="init")
        return bq.solitary_wave(s1, s2, float(icfg.get("speed", 0.5)), L, M)
    if kind == "mode":
        io.check_keys(icfg, {"mode", "amplitude"}, where="init")
        kk = 2 * np.pi * int(icfg.get("mode", 1)) / L
        amp = float(icfg.get("amplitude", 1e-6))
        return bq.make_state(L, M, lambda x: amp * np.cos(kk * x))
    if kind == "file":
        io.check_keys(icfg, {"path"}, where="init")
        st = io.read_field_csv(_require(icfg, "path"), length=L)
        if st.M != M:
            raise ConfigError(f"init file has {st.M} points but M = {M}")
        return st
    if kind == "random":
        io.check_keys(icfg, {"amplitude", "modes"}, where="init")
        rng = np.random.default_rng(seed)
        n = int(icfg.get("modes", 8))
        amp = float(icfg.get("amplitude", 1e-3))
        xi = bq.periodic_grid(L, M)
        u = sum(rng.normal() * np.cos(2 * np.pi * j * xi / L + rng.uniform(0, 2 * np.pi)) for j in range(1, n + 1))
        return bq.FieldState(xi, amp * u / n, np.zeros(M), 0.0, L)
    raise ConfigError(f"unknown init type {kind!r}; use solitary, mode, file or random")


@main.command("simulate")
@common_options
@click.option("--t-end", "t_end", type=float, default=None, help="Final time (overrides config).")
@handle_errors
def cmd_simulate(config_path, out, seed, tol, t_end):
    """Integrate the normalised equation pseudo-spectrally."""
    cfg, out, seed, tols = _load("simulate", config_path, out, seed, tol)
    if "setup" in cfg:
        d = io.read_json(cfg["setup"])
        s1, s2 = int(d["s1"]), int(d["s2"])
    else:
        s1, s2 = int(cfg.get("s1", -1)), int(cfg.get("s2", 1))
    if s1 not in (1, -1) or s2 not in (1, -1):
        raise ConfigError("s1 and s2 must be +1 or -1")
    setup = bq.BoussinesqSetup.normal(s1, s2)
    L, M = float(cfg.get("L", 80.0)), int(cfg.get("M", 512))
    if M < 2 or M & (M - 1):
        raise ConfigError(f"M must be a power of two, got {M}")
    safety = float(cfg.get("safety", 0.2))
    flt, cutoff = cfg.get("filter"), cfg.get("filter_cutoff")
    dt = float(cfg.get("dt", bq.max_stable_dt(L / M, safety, cutoff if flt == "hard" else None)))
    t_end = float(t_end if t_end is not None else cfg.get("t_end", 20.0))
    if s2 < 0 and flt is None:
        click.echo("warning: s2 = -1 is linearly ill-posed; without a filter the run will blow up", err=True)
    init = _initial_state(cfg.get("init", {"type": "solitary"}), L, M, s1, s2, seed)
    io.write_field_csv(out / "init.csv", init)
    summary = {"s1": s1, "s2": s2, "L": L, "M": M, "dt": dt, "t_end": t_end, "filter": flt, "seed": seed}
    try:
        traj = bq.simulate(setup, init, dt, t_end, dealias=bool(cfg.get("dealias", True)), filter=flt,
                           filter_cutoff=cutoff, safety=safety, n_frames=int(cfg.get("n_frames", 200)))
        status = EXIT_OK
    except BlowUp as exc:
        traj, status = exc.trajectory, EXIT_BLOWUP
        summary["blowup_time"] = exc.time
    _write_trajectory(out, traj)
    mass, flux = traj.diagnostics["mass"], traj.diagnostics["flux_mean"]
    summary.update(final_time=float(traj.times[-1]), flux_mean_drift=float(np.abs(flux - flux[0]).max()),
                   mass_final=float(mass[-1]), max_u_final=float(traj.diagnostics["max_u"][-1]))
    io.write_json(out / "simulation.json", summary)
    if status == EXIT_BLOWUP:
        _fail(EXIT_BLOWUP, f"blow-up at t = {summary['blowup_time']:.6g}")
    click.echo(f"reached t = {traj.times[-1]:.6g}; flux_mean drift {summary['flux_mean_drift']:.3g}")


def _write_trajectory(out, traj):
    M = traj.grid.size
    io.write_csv(out / "trajectory.csv", ["t"] + [f"xi_{i}" for i in range(M)],
                 ([t, *u] for t, u in zip(traj.times, traj.u)))
    d = traj.diagnostics
    io.write_csv(out / "diagnostics.csv", ["t", "mass", "flux_mean", "max_u"],
                 zip(d["t"], d["mass"], d["flux_mean"], d["max_u"]))


if __name__ == "__main__":
    main()
