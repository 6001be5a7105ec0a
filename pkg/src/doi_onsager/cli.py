"""Command-line front end.

    python3 -m doi_onsager bifurcation --alpha-min 5 --alpha-max 10 --steps 100
    python3 -m doi_onsager spectrum --alpha 8 --branch eta1 --L 16
    python3 -m doi_onsager leslie --alpha 8            # JSON
    python3 -m doi_onsager leslie --alphas 7,8,10,15   # CSV table
    python3 -m doi_onsager simulate --eps 0.05
    python3 -m doi_onsager convergence --eps-list 0.1,0.05,0.025
    python3 -m doi_onsager energy --alpha 8 --t-final 20

Settings come from (lowest to highest precedence) built-in defaults, the
``DOI_ONSAGER_OUT_DIR`` environment variable (output directory only), a flat
``key = value`` config file given with ``--config``, and command-line flags.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

SUBCOMMANDS = ("bifurcation", "spectrum", "leslie", "simulate", "convergence", "energy")
OUT_DIR_ENV = "DOI_ONSAGER_OUT_DIR"
L_MAX = 32


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    alpha: float = 8.0
    branch: str = "eta1"
    L: int = 16
    n_theta: int = 48
    n_phi: int = 64
    eps: float = 0.05
    eps_list: tuple = (0.1, 0.05, 0.025)
    kappa: tuple = (0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    t_final: float | None = None  # 1 for simulate/convergence, 20 for energy
    dt: float | None = None
    seed: int = 0
    out_dir: str = "out"
    alpha_min: float = 5.0
    alpha_max: float = 10.0
    steps: int = 100
    alphas: tuple = ()
    n0: tuple = (1.0, 0.0, 0.0)
    samples: int = 10000
    method: str = "radau"
    svg: bool = True

    @property
    def kappa_matrix(self) -> np.ndarray:
        return np.array(self.kappa, float).reshape(3, 3)


_CASTS = {
    "alpha": float,
    "branch": str,
    "L": int,
    "n_theta": int,
    "n_phi": int,
    "eps": float,
    "t_final": float,
    "dt": float,
    "seed": int,
    "out_dir": str,
    "alpha_min": float,
    "alpha_max": float,
    "steps": int,
    "method": str,
    "samples": int,
}
_VECTORS = {"kappa": 9, "eps_list": None, "alphas": None, "n0": 3}
_BOOLS = {"svg"}


def _number_list(text: str, key: str, size: int | None) -> tuple:
    parts = text.replace(",", " ").split()
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: expected numbers separated by spaces or commas, got {text!r}") from None
    if size is not None and len(vals) != size:
        raise ConfigError(f"{key}: expected {size} numbers, got {len(vals)}")
    return vals


def _cast(key: str, raw) -> object:
    if key in _VECTORS:
        if isinstance(raw, (tuple, list)):
            raw = " ".join(str(v) for v in raw)
        return _number_list(str(raw), key, _VECTORS[key])
    if key in _BOOLS:
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    try:
        return _CASTS[key](raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {_CASTS[key].__name__}") from None


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; quotes are stripped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    known = {f.name for f in fields(RunConfig)} - {"subcommand"}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _cast(key, value.strip().strip('"').strip("'"))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="doi_onsager", description="Doi-Onsager small-Deborah-number toolkit")
    sub = p.add_subparsers(dest="subcommand")
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat key = value config file")
        s.add_argument("--alpha", type=str)
        s.add_argument("--branch", choices=("isotropic", "eta1", "eta2"))
        s.add_argument("--L", type=str)
        s.add_argument("--n-theta", dest="n_theta", type=str)
        s.add_argument("--n-phi", dest="n_phi", type=str)
        s.add_argument("--eps", type=str)
        s.add_argument("--eps-list", dest="eps_list", type=str)
        s.add_argument("--kappa", type=str, help="9 numbers, row-major")
        s.add_argument("--t-final", dest="t_final", type=str)
        s.add_argument("--dt", type=str)
        s.add_argument("--seed", type=str)
        s.add_argument("--out-dir", dest="out_dir", type=str)
        s.add_argument("--alpha-min", dest="alpha_min", type=str)
        s.add_argument("--alpha-max", dest="alpha_max", type=str)
        s.add_argument("--steps", type=str)
        s.add_argument("--alphas", type=str, help="comma-separated alpha sweep (leslie CSV mode)")
        s.add_argument("--n0", type=str, help="initial director, 3 numbers")
        s.add_argument("--samples", type=str)
        s.add_argument("--method", choices=("radau", "imex"))
        s.add_argument("--svg", type=str)
    return p


def parse_config(argv: list[str], config_file: str | None = None) -> RunConfig:
    parser = build_parser()
    if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {argv[0]!r}; choose one of {', '.join(SUBCOMMANDS)}")
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:  # --help
            raise
        raise ConfigError("invalid command line (see --help)") from exc
    if ns.subcommand is None:
        raise ConfigError(f"missing subcommand; choose one of {', '.join(SUBCOMMANDS)}")
    values: dict = {}
    env_out = os.environ.get(OUT_DIR_ENV)
    if env_out:
        values["out_dir"] = env_out
    path = ns.config or config_file
    if path:
        values.update(read_config_file(path))
    for key, raw in vars(ns).items():
        if key in ("subcommand", "config") or raw is None:
            continue
        values[key] = _cast(key, raw)
    cfg = RunConfig(ns.subcommand, **values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}")
    k = cfg.kappa_matrix
    if abs(np.trace(k)) > 1e-12:
        raise ConfigError(f"velocity gradient must be traceless (trace = {np.trace(k):.6g})")
    if not 2 <= cfg.L <= L_MAX:
        raise ConfigError(f"L must lie in [2, {L_MAX}], got {cfg.L}")
    if cfg.n_phi % 2 or cfg.n_phi < 4 or cfg.n_theta < 2:
        raise ConfigError(f"grid needs n_theta >= 2 and even n_phi >= 4, got {cfg.n_theta} x {cfg.n_phi}")
    el = list(cfg.eps_list)
    if not el or any(e <= 0 for e in el) or any(b >= a for a, b in zip(el, el[1:])):
        raise ConfigError(f"eps_list must be positive and strictly decreasing, got {el}")
    if not cfg.alpha > 0:
        raise ConfigError(f"alpha must be positive, got {cfg.alpha}")
    if cfg.t_final is None:
        cfg.t_final = 20.0 if cfg.subcommand == "energy" else 1.0
    if not cfg.eps > 0 or not cfg.t_final > 0:
        raise ConfigError("eps and t_final must be positive")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError(f"dt must be positive, got {cfg.dt}")
    if cfg.steps < 1 or cfg.alpha_max < cfg.alpha_min:
        raise ConfigError("need steps >= 1 and alpha_max >= alpha_min")
    if not np.linalg.norm(cfg.n0) > 0:
        raise ConfigError("n0 must be a nonzero vector")
    if cfg.method not in ("radau", "imex"):
        raise ConfigError(f"method must be radau or imex, got {cfg.method!r}")
    if cfg.branch not in ("isotropic", "eta1", "eta2"):
        raise ConfigError(f"branch must be isotropic, eta1 or eta2, got {cfg.branch!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _out(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create out_dir {d}: {exc.strerror}") from None
    if not os.access(d, os.W_OK):
        raise ConfigError(f"out_dir {d} is not writable")
    return d


def _branch(cfg: RunConfig):
    from .equilibria import solve_eta_branches

    branches = solve_eta_branches(cfg.alpha)
    for b in branches:
        if b.branch == cfg.branch:
            return b
    raise ConfigError(f"branch {cfg.branch} does not exist at alpha={cfg.alpha}")


def cmd_bifurcation(cfg: RunConfig) -> list[Path]:
    from .equilibria import bifurcation_table
    from .io import write_csv, write_svg

    alphas = np.linspace(cfg.alpha_min, cfg.alpha_max, cfg.steps)
    rows = [(b.alpha, b.eta, b.branch, b.S2, b.S4, str(s) == "stable") for b, s in bifurcation_table(alphas)]
    d = _out(cfg)
    paths = [write_csv(d / "bifurcation.csv", ["alpha", "eta", "branch", "S2", "S4", "stable"], rows)]
    if cfg.svg:
        series = {}
        for tag in ("eta1", "eta2"):
            pts = [(r[0], r[1]) for r in rows if r[2] == tag]
            if pts:
                series[tag] = tuple(zip(*pts))
        paths.append(write_svg(d / "bifurcation.svg", series, title="critical points", xlabel="alpha", ylabel="eta"))
    return paths


def cmd_spectrum(cfg: RunConfig) -> list[Path]:
    from .equilibria import equilibrium_field
    from .io import write_json
    from .spectral import assemble_G_h, lower_bound_c0, spectrum

    b = _branch(cfg)
    h = equilibrium_field(b, [0.0, 0.0, 1.0], cfg.L)
    rep = spectrum(assemble_G_h(h, cfg.L))
    c0 = lower_bound_c0(h, cfg.L) if b.branch == "eta1" else None
    out = {
        "alpha": cfg.alpha,
        "eta": b.eta,
        "branch": b.branch,
        "L": cfg.L,
        "eigenvalues": list(rep.eigenvalues),
        "kernel_dim": rep.kernel_dim,
        "kernel_tol": rep.kernel_tol,
        "c0": c0,
    }
    return [write_json(_out(cfg) / "spectrum.json", out)]


def leslie_summary(alpha: float, samples: int, seed: int, n_theta: int = 48) -> dict:
    from .equilibria import stable_branch
    from .leslie import dissipation_form, leslie_coeffs, moment_quadrature, moment_tensors

    b = stable_branch(alpha)
    ls = leslie_coeffs(b.eta, alpha)
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(samples):
        X = rng.standard_normal((3, 3))
        D = X + X.T
        D -= np.trace(D) / 3 * np.eye(3)
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        worst = min(worst, dissipation_form(ls, D, n) / float(np.sum(D * D)))
    d = ls.as_dict()
    d["parodi_residual"] = ls.parodi_residual
    d["dissipation_min_over_samples"] = worst
    closed = moment_tensors(b.eta)
    quad = moment_quadrature(b.eta, np.array([0.0, 0.0, 1.0]), n_theta)
    d["moment_quadrature_error"] = max(float(np.max(np.abs(c - q))) for c, q in zip(closed, quad))
    return d


def cmd_leslie(cfg: RunConfig) -> list[Path]:
    from .equilibria import alpha_star
    from .io import write_csv, write_json

    low = [a for a in (cfg.alphas or (cfg.alpha,)) if a <= alpha_star()[0]]
    if low:
        raise ConfigError(f"Leslie coefficients need alpha > alpha* = {alpha_star()[0]:.6f}; got {low}")
    d = _out(cfg)
    if cfg.alphas:
        rows = [leslie_summary(a, cfg.samples, cfg.seed, cfg.n_theta) for a in cfg.alphas]
        header = sorted(rows[0])
        return [write_csv(d / "leslie.csv", header, [[r[k] for k in header] for r in rows])]
    return [write_json(d / "leslie.json", leslie_summary(cfg.alpha, cfg.samples, cfg.seed, cfg.n_theta))]


def _run_rows(run) -> list:
    rows = []
    for s, S2, n in zip(run.samples, run.S2, run.n):
        rows.append([s.t, S2, *n, *s.sigma_eps.ravel(), s.err])
    return rows


RUN_HEADER = ["t", "S2", "n_x", "n_y", "n_z"] + [f"sigma_{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)] + ["err"]


def _n0(cfg: RunConfig) -> np.ndarray:
    n0 = np.array(cfg.n0, float)
    return n0 / np.linalg.norm(n0)


def cmd_simulate(cfg: RunConfig) -> list[Path]:
    from .io import write_csv
    from .kinetic import simulate

    run = simulate(cfg.alpha, _n0(cfg), cfg.kappa_matrix, cfg.eps, cfg.L, cfg.t_final, method=cfg.method, dt=cfg.dt)
    return [write_csv(_out(cfg) / f"simulate_eps{cfg.eps:g}.csv", RUN_HEADER, _run_rows(run))]


def cmd_convergence(cfg: RunConfig) -> list[Path]:
    from .io import write_csv, write_json, write_svg
    from .kinetic import run_convergence

    s = run_convergence(cfg.alpha, _n0(cfg), cfg.kappa_matrix, cfg.t_final, cfg.eps_list, cfg.L, dt_rule=cfg.method)
    d = _out(cfg)
    paths = [write_csv(d / f"convergence_eps{r.eps:g}.csv", RUN_HEADER, _run_rows(r)) for r in s.runs]
    summary = {
        "eps_list": s.eps_list,
        "sup_errors": s.sup_errors,
        "director_errors": s.director_errors,
        "fitted_slope": s.fitted_slope,
        "director_slope": s.director_slope,
        "alpha": cfg.alpha,
        "L": cfg.L,
        "t_final": cfg.t_final,
        "method": cfg.method,
    }
    paths.append(write_json(d / "convergence.json", summary))
    if cfg.svg:
        paths.append(
            write_svg(
                d / "convergence.svg",
                {"stress error": (s.eps_list, s.sup_errors), "director angle": (s.eps_list, s.director_errors)},
                title="error vs eps",
                xlabel="log10 eps",
                ylabel="log10 error",
                loglog=True,
            )
        )
    return paths


def cmd_energy(cfg: RunConfig) -> list[Path]:
    from .io import write_csv, write_json
    from .kinetic import isotropic_perturbation, run_energy_decay

    f0 = isotropic_perturbation(cfg.L, 0.3, cfg.seed)
    dt = cfg.dt if cfg.dt is not None else 0.005
    run = run_energy_decay(cfg.alpha, f0, cfg.L, dt, cfg.t_final)
    d = _out(cfg)
    rows = list(zip(run.t, run.energy, run.S2))
    summary = {
        "alpha": cfg.alpha,
        "final_S2": float(run.S2[-1]),
        "fit_eta": run.fit_eta,
        "fit_distance": run.fit_distance,
        "max_energy_increase": run.max_increase,
    }
    return [write_csv(d / "energy.csv", ["t", "energy", "S2"], rows), write_json(d / "energy.json", summary)]


COMMANDS = {
    "bifurcation": cmd_bifurcation,
    "spectrum": cmd_spectrum,
    "leslie": cmd_leslie,
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
    "energy": cmd_energy,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        paths = COMMANDS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 3
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
