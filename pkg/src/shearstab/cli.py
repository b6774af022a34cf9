"""Command-line interface.

Settings are merged in increasing precedence: built-in defaults, the INI-style
config file (section ``[run]``, then the section named after the subcommand),
environment variables ``SHEARSTAB_<OPTION>``, and command-line flags.

Exit codes: 0 success, 2 configuration error, 3 regime refusal, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError, RegimeError, ShearStabError
from .fourier import ShearProfile, antiderivative_norm_sq, parse_profile, sobolev_norm
from .io import dumps_json, rows_to_csv, write_text
from .normal_form import assemble_Q_remainder, block_decay_norm, block_diagonalize, decouple
from .operators import REGIME_THRESHOLD, assemble_L, regime_value
from .resolvent import (
    kato_isomorphism_check,
    kato_unstable_eigenpair,
    pick_unstable,
    reference_vector,
    riesz_projection,
    stable_block_eigenvalues_kato,
)
from .spectrum import (
    asymptotic_prediction,
    cross_validate,
    dense_spectrum,
    eigenfunction_field,
    linear_spectrum,
    loglog_slope,
    normalize_eigenvector,
    profile_dict,
    taylor_dispersion_eigenvalue,
    taylor_prediction_alternative,
)

ENV_PREFIX = "SHEARSTAB_"
COMMANDS = ("spectrum", "unstable", "kato", "normalform", "taylor", "sweep", "convergence", "field")
EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_NUMERICAL = 0, 2, 3, 4

# name -> (type, default, help)
OPTIONS = {
    "profile": (str, "kolmogorov", "preset (kolmogorov, paper-fig1 or its alias sin-cos5, kolmogorov-m) or 'j,re,im;j,re,im'"),
    "m": (int, None, "wavenumber for the kolmogorov-m preset"),
    "nu": (float, None, "viscosity"),
    "eps": (float, None, "long-wave parameter alpha|k| (exclusive with --alpha/--k)"),
    "alpha": (float, None, "x-wavenumber scale; eps = alpha |k|"),
    "k": (int, None, "nonzero x-mode; k < 0 is handled by complex conjugation"),
    "N": (int, 32, "Fourier truncation"),
    "s": (float, 1.0, "decay index of the block norm"),
    "contour_nodes": (int, 64, "initial trapezoidal nodes per contour"),
    "j_max": (int, 4, "number of stable blocks to report"),
    "tol": (float, 1e-13, "relative stopping tolerance of fixed-point iterations"),
    "grid": (str, "128x128", "field grid as NXxNY"),
    "eps_list": (str, None, "comma-separated eps values for sweep"),
    "nu_list": (str, None, "comma-separated nu values for sweep"),
    "workers": (int, None, "sweep worker processes (default: CPU count)"),
    "format": (str, None, "csv or json (default json; csv for field)"),
    "output": (str, "-", "output path, '-' for stdout"),
}


@dataclass
class RunConfig:
    """Validated settings for one CLI invocation."""

    command: str
    profile: ShearProfile
    nu: Optional[float]
    eps: Optional[float]
    alpha: Optional[float] = None
    k: Optional[int] = None
    N: int = 32
    s: float = 1.0
    contour_nodes: int = 64
    j_max: int = 4
    tol: float = 1e-13
    grid: tuple = (128, 128)
    eps_list: Optional[list] = None
    nu_list: Optional[list] = None
    workers: int = 1
    format: str = "json"
    output: str = "-"
    extras: dict = field(default_factory=dict)

    @property
    def conjugate(self) -> bool:
        return self.k is not None and self.k < 0


# ---------------------------------------------------------------------------
# parsing and validation


def _convert(name: str, raw):
    typ = OPTIONS[name][0]
    if raw is None or isinstance(raw, typ):
        return raw
    try:
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {raw!r} as {typ.__name__}") from None


def _float_list(name: str, raw: Optional[str]) -> Optional[list]:
    if raw is None:
        return None
    try:
        vals = [float(x) for x in str(raw).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {raw!r}") from None
    if not vals:
        raise ConfigError(f"{name}: empty list")
    return vals


def _parse_grid(raw: str) -> tuple:
    try:
        nx, ny = (int(v) for v in str(raw).lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid: expected NXxNY, got {raw!r}") from None
    if nx < 16 or ny < 16:
        raise ConfigError(f"grid: need at least 16x16, got {nx}x{ny}")
    return nx, ny


def _read_config_file(path: str, command: str) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigError(f"config: cannot read {path!r}")
    out = {}
    for section in ("run", command):
        if parser.has_section(section):
            for key, value in parser.items(section):
                name = key.strip().replace("-", "_")
                if name.lower() == "n":
                    name = "N"
                if name not in OPTIONS:
                    raise ConfigError(f"config: unknown key {key!r} in section [{section}]")
                out[name] = value
    return out


def _env_values(env) -> dict:
    out = {}
    for name in OPTIONS:
        value = env.get(ENV_PREFIX + name.upper())
        if value is not None:
            out[name] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shearstab",
        description="Long-wave stability of periodic shear flows.",
    )
    parser.add_argument("--config", default=None, help="INI-style config file ([run] and per-command sections)")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "dense spectrum of the linearized operator",
        "unstable": "leading eigenpair from three solvers with prediction",
        "kato": "spectral projections and isomorphism diagnostics",
        "normalform": "decoupled eigenvalue and block eigenvalues",
        "taylor": "advection-diffusion eigenvalue versus prediction",
        "sweep": "eps or nu sweep with scaling fit",
        "convergence": "truncation and contour refinement table",
        "field": "eigenfunction field Re(exp(ix) V(y)) as CSV",
    }
    for cmd in COMMANDS:
        p = sub.add_parser(cmd, help=helps[cmd])
        for name, (typ, _, hlp) in OPTIONS.items():
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, dest=name, type=str, default=argparse.SUPPRESS, help=hlp)
    return parser


def load_config(argv=None, env=None) -> RunConfig:
    """Parse ``argv`` and merge config file and environment into a :class:`RunConfig`."""
    env = os.environ if env is None else env
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("usage: invalid command line") from None
    cli = {k: v for k, v in vars(ns).items() if k in OPTIONS}
    raw = {name: opt[1] for name, opt in OPTIONS.items()}
    config_path = ns.config or env.get(ENV_PREFIX + "CONFIG")
    if config_path:
        raw.update(_read_config_file(config_path, ns.command))
    raw.update(_env_values(env))
    raw.update(cli)
    return validate_config(ns.command, raw)


def validate_config(command: str, raw: dict) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown subcommand {command!r}")
    vals = {name: _convert(name, raw.get(name)) for name in OPTIONS}
    profile = parse_profile(vals["profile"], m=vals["m"])

    eps, alpha, k = vals["eps"], vals["alpha"], vals["k"]
    eps_list = _float_list("eps_list", vals["eps_list"])
    nu_list = _float_list("nu_list", vals["nu_list"])
    if eps is not None and (alpha is not None or k is not None):
        raise ConfigError("eps: give either --eps or --alpha/--k, not both")
    if (alpha is None) != (k is None):
        raise ConfigError("alpha: --alpha and --k must be given together")
    if alpha is not None:
        if k == 0:
            raise ConfigError("k: must be nonzero")
        if alpha <= 0:
            raise ConfigError("alpha: must be positive")
        eps = alpha * abs(k)
    needs_eps = not (command == "sweep" and eps_list is not None)
    if eps is None and needs_eps:
        raise ConfigError("eps: required (or --alpha with --k)")
    if eps is not None and eps <= 0:
        raise ConfigError("eps: must be positive")
    nu = vals["nu"]
    needs_nu = not (command == "sweep" and nu_list is not None)
    if nu is None and needs_nu:
        raise ConfigError("nu: required")
    if nu is not None and nu <= 0:
        raise ConfigError("nu: must be positive")
    if command == "sweep":
        if (eps_list is None) == (nu_list is None):
            raise ConfigError("eps_list: sweep needs exactly one of --eps-list or --nu-list")
        for name, lst in (("eps_list", eps_list), ("nu_list", nu_list)):
            if lst is not None and any(v <= 0 for v in lst):
                raise ConfigError(f"{name}: values must be positive")

    N = vals["N"]
    if N is None or N < profile.band + 2:
        raise ConfigError(f"N: must be at least band + 2 = {profile.band + 2}")
    nodes = vals["contour_nodes"]
    if nodes < 8 or nodes % 2:
        raise ConfigError("contour_nodes: must be even and >= 8")
    if vals["j_max"] < 1 or vals["j_max"] > N - 1:
        raise ConfigError(f"j_max: must lie in 1..{N - 1}")
    if vals["s"] < 0:
        raise ConfigError("s: must be nonnegative")
    if not 0 < vals["tol"] < 1:
        raise ConfigError("tol: must lie in (0, 1)")
    fmt = vals["format"] or ("csv" if command == "field" else "json")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format: expected csv or json, got {fmt!r}")
    workers = vals["workers"] if vals["workers"] is not None else (os.cpu_count() or 1)
    if workers < 1:
        raise ConfigError("workers: must be >= 1")

    return RunConfig(
        command=command, profile=profile, nu=nu, eps=eps, alpha=alpha, k=k, N=N,
        s=vals["s"], contour_nodes=nodes, j_max=vals["j_max"], tol=vals["tol"],
        grid=_parse_grid(vals["grid"]), eps_list=eps_list, nu_list=nu_list,
        workers=workers, format=fmt, output=vals["output"],
    )


# ---------------------------------------------------------------------------
# commands


def _z(z: complex, cfg: RunConfig) -> dict:
    z = complex(z)
    if cfg.conjugate:
        z = z.conjugate()
    return {"re": z.real, "im": z.imag}


def _header(cfg: RunConfig) -> dict:
    out = {"command": cfg.command, "nu": cfg.nu, "eps": cfg.eps, "N": cfg.N}
    if cfg.k is not None:
        out["alpha"] = cfg.alpha
        out["k"] = cfg.k
    out["profile"] = profile_dict(cfg.profile)
    if cfg.nu is not None and cfg.eps is not None:
        rv = regime_value(cfg.profile, cfg.nu, cfg.eps)
        out["regime"] = {"value": rv, "ok": rv < REGIME_THRESHOLD}
    return out


def cmd_spectrum(cfg: RunConfig):
    rep = dense_spectrum(assemble_L(cfg.profile, cfg.nu, cfg.eps, cfg.N), profile=cfg.profile)
    d = rep.to_dict()
    if cfg.conjugate:
        for item in d["eigenvalues"]:
            item["im"] = -item["im"]
        d["eigenvalues"].sort(key=lambda e: (-e["re"], -e["im"]))
        if "unstable" in d:
            d["unstable"]["im"] = -d["unstable"]["im"]
        d["prediction"]["im"] = -d["prediction"]["im"]
        d["k"] = cfg.k
    rows = [(e["re"], e["im"], e["block"], e["tag"]) for e in d["eigenvalues"]]
    return d, rows_to_csv(["re", "im", "block", "tag"], rows)


def cmd_unstable(cfg: RunConfig):
    U, nu, eps, N = cfg.profile, cfg.nu, cfg.eps, cfg.N
    rep = linear_spectrum(U, nu, eps, N)
    out = _header(cfg)
    out["method"] = "dense"
    out["leading"] = _z(rep.leading, cfg)
    out["prediction"] = _z(rep.prediction, cfg)
    out["deviation"] = rep.deviation
    out["unstable_count"] = rep.count_unstable()
    if rep.unstable is not None:
        out["unstable"] = {**_z(rep.unstable.value, cfg), "residual": rep.unstable.residual}
        cv = cross_validate(U, nu, eps, N, j_max=min(cfg.j_max, N - 1), contour_nodes=cfg.contour_nodes)
        out["methods"] = {
            "dense": _z(cv.eigenvalues["dense"], cfg),
            "kato": _z(cv.eigenvalues["kato"], cfg),
            "normal-form": _z(cv.eigenvalues["normal-form"], cfg),
        }
        out["relative_differences"] = cv.relative_differences
        out["eigenvector_alignment"] = cv.alignment
        out["eigenvector_distances"] = cv.eigenvector_distances
        out["agreement"] = cv.passed
        out["failures"] = cv.failures
    rows = [("leading", *_z(rep.leading, cfg).values()), ("prediction", *_z(rep.prediction, cfg).values())]
    if "methods" in out:
        rows += [(name, z["re"], z["im"]) for name, z in out["methods"].items()]
    return out, rows_to_csv(["quantity", "re", "im"], rows)


def cmd_kato(cfg: RunConfig):
    U, nu, eps, N = cfg.profile, cfg.nu, cfg.eps, cfg.N
    out = _header(cfg)
    blocks = []
    for j in range(0, cfg.j_max + 1):
        d = kato_isomorphism_check(j, U, nu, eps, N, cfg.contour_nodes)
        blocks.append({
            "j": j,
            "nodes_L": d.P.contour.nodes,
            "defect_L": d.P.idempotency_defect,
            "rank_L": d.P.rank,
            "nodes_M": d.Q.contour.nodes,
            "defect_M": d.Q.idempotency_defect,
            "rank_M": d.Q.rank,
            "min_sv_condition": d.min_sv_condition,
            "min_sv_isomorphism": d.min_sv_isomorphism,
            "projection_distance": d.distance,
        })
    out["blocks"] = blocks
    lam, V, res = kato_unstable_eigenpair(U, nu, eps, N, cfg.contour_nodes)
    w = reference_vector(U, nu, eps, N)
    out["eigenpair"] = {
        **_z(lam, cfg),
        "residual": res,
        "distance_to_reference": float(np.linalg.norm(V.coeffs - w)),
    }
    out["stable_blocks"] = [
        {"j": b.j, "eigenvalues": [_z(z, cfg) for z in b.eigenvalues], "double": b.double}
        for b in stable_block_eigenvalues_kato(U, nu, eps, N, cfg.j_max, cfg.contour_nodes)
    ]
    header = list(blocks[0].keys())
    return out, rows_to_csv(header, [[b[h] for h in header] for b in blocks])


def cmd_normalform(cfg: RunConfig):
    U, nu, eps, N = cfg.profile, cfg.nu, cfg.eps, cfg.N
    form = decouple(U, nu, eps, N, tol=cfg.tol)
    bd = block_diagonalize(form.L1, s=cfg.s, tol=cfg.tol)
    Q = assemble_Q_remainder(form)
    out = _header(cfg)
    out["lambda0"] = _z(form.lambda0, cfg)
    out["prediction"] = _z(asymptotic_prediction(U, nu, eps), cfg)
    out["pairing"] = _z(form.pairing, cfg)
    out["residual_B"] = form.residual_B
    out["residual_C"] = form.residual_C
    out["iterations"] = {"X": form.iterations["X"], "Y": form.iterations["Y"], "Psi": bd.iterations}
    out["norms"] = {
        "X": sobolev_norm(form.X, cfg.s + 2),
        "Y": sobolev_norm(form.Y, cfg.s + 2),
        "Q": block_decay_norm(Q, cfg.s),
        "Psi": block_decay_norm(bd.psi, cfg.s),
        "Z": block_decay_norm(bd.z, cfg.s),
    }
    out["offdiagonal_residual"] = bd.residual
    ev = bd.block_eigenvalues()
    out["blocks"] = [{"j": j, "eigenvalues": [_z(z, cfg) for z in ev[j]]} for j in sorted(ev)]
    rows = [(0, *_z(form.lambda0, cfg).values())]
    for j in sorted(ev):
        rows += [(j, *_z(z, cfg).values()) for z in ev[j]]
    return out, rows_to_csv(["j", "re", "im"], rows)


def cmd_taylor(cfg: RunConfig):
    U, nu, eps, N = cfg.profile, cfg.nu, cfg.eps, cfg.N
    mu, pred = taylor_dispersion_eigenvalue(U, nu, eps, N)
    alt = taylor_prediction_alternative(U, nu, eps)
    out = _header(cfg)
    out["mu"] = _z(mu, cfg)
    out["prediction"] = _z(pred, cfg)
    out["deviation"] = abs(mu - pred)
    out["alternative_prediction"] = _z(alt, cfg)
    out["alternative_deviation"] = abs(mu - alt)
    out["supported"] = "prediction" if abs(mu - pred) <= abs(mu - alt) else "alternative_prediction"
    rows = [("mu", *_z(mu, cfg).values()), ("prediction", *_z(pred, cfg).values()), ("alternative_prediction", *_z(alt, cfg).values())]
    return out, rows_to_csv(["quantity", "re", "im"], rows)


def _sweep_point(args):
    profile, nu, eps, N = args
    rep = linear_spectrum(profile, nu, eps, N)
    limit = antiderivative_norm_sq(profile) - nu**2
    lam = rep.leading
    return {
        "nu": nu,
        "eps": eps,
        "re": lam.real,
        "im": lam.imag,
        "prediction": rep.prediction.real,
        "normalized": lam.real * nu / eps**2,
        "error": abs(lam * nu / eps**2 - limit),
        "unstable_count": rep.count_unstable(),
        "in_regime": regime_value(profile, nu, eps) < REGIME_THRESHOLD,
    }


def cmd_sweep(cfg: RunConfig):
    if cfg.eps_list is not None:
        axis, values = "eps", cfg.eps_list
        jobs = [(cfg.profile, cfg.nu, e, cfg.N) for e in values]
    else:
        axis, values = "nu", cfg.nu_list
        jobs = [(cfg.profile, n, cfg.eps, cfg.N) for n in values]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            points = list(pool.map(_sweep_point, jobs))
    else:
        points = [_sweep_point(j) for j in jobs]
    if cfg.conjugate:
        for p in points:
            p["im"] = -p["im"]
    out = {"command": "sweep", "axis": axis, "nu": cfg.nu, "eps": cfg.eps, "N": cfg.N, "profile": profile_dict(cfg.profile)}
    out["points"] = points
    out["warnings"] = [
        f"{axis}={p[axis]!r} is outside the long-wave regime" for p in points if not p["in_regime"]
    ]
    if axis == "eps" and len(points) >= 3:
        errs = [p["error"] for p in points]
        if min(errs) > 0:
            slope = loglog_slope(values, errs)
            out["fit"] = {"slope": slope, "passed": slope >= 0.9}
    header = list(points[0].keys())
    return out, rows_to_csv(header, [[p[h] for h in header] for p in points])


def cmd_convergence(cfg: RunConfig):
    U, nu, eps, N = cfg.profile, cfg.nu, cfg.eps, cfg.N
    out = _header(cfg)
    trunc = []
    for n in (N, 2 * N, 4 * N):
        lam = linear_spectrum(U, nu, eps, n).leading
        trunc.append({"N": n, **_z(lam, cfg)})
    ref = complex(trunc[-1]["re"], trunc[-1]["im"])
    for row in trunc:
        row["difference"] = abs(complex(row["re"], row["im"]) - ref)
    nodes = []
    for m in (16, 32, 64, 128, 256):
        P = riesz_projection("L", 0, U, nu, eps, N, M_nodes=m, refine=False)
        nodes.append({"contour_nodes": m, "idempotency_defect": P.idempotency_defect, "rank": P.rank})
    out["truncation"] = trunc
    out["contour"] = nodes
    rows = [("N", r["N"], r["re"], r["im"], r["difference"]) for r in trunc]
    rows += [("nodes", r["contour_nodes"], r["idempotency_defect"], r["rank"], "") for r in nodes]
    return out, rows_to_csv(["table", "size", "value1", "value2", "value3"], rows)


def leading_eigenfunction(U: ShearProfile, nu: float, eps: float, N: int):
    rep = linear_spectrum(U, nu, eps, N)
    k = pick_unstable(rep.eigenvalues)
    v = normalize_eigenvector(rep.eigenvectors[:, k], reference_vector(U, nu, eps, N))
    from .fourier import FourierFunction

    return complex(rep.eigenvalues[k]), FourierFunction(v)


def cmd_field(cfg: RunConfig):
    lam, V = leading_eigenfunction(cfg.profile, cfg.nu, cfg.eps, cfg.N)
    eps_over_k = cfg.alpha if cfg.alpha is not None else cfg.eps
    fld = eigenfunction_field(V, eps_over_k, cfg.grid)
    out = _header(cfg)
    out["eigenvalue"] = _z(lam, cfg)
    out["grid"] = list(cfg.grid)
    out["x"] = fld.x
    out["y"] = fld.y
    out["values"] = fld.values
    return out, fld.to_csv()


HANDLERS = {
    "spectrum": cmd_spectrum,
    "unstable": cmd_unstable,
    "kato": cmd_kato,
    "normalform": cmd_normalform,
    "taylor": cmd_taylor,
    "sweep": cmd_sweep,
    "convergence": cmd_convergence,
    "field": cmd_field,
}


def run(cfg: RunConfig, stream=None) -> int:
    """Execute one validated configuration and write its output."""
    stream = sys.stdout if stream is None else stream
    data, csv_text = HANDLERS[cfg.command](cfg)
    text = dumps_json(data) if cfg.format == "json" else csv_text
    write_text(text, cfg.output, stream)
    return EXIT_OK


def _fail(kind: str, exc: Exception, code: int, err) -> int:
    err.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None, env=None, stdout=None, stderr=None) -> int:
    err = sys.stderr if stderr is None else stderr
    try:
        cfg = load_config(argv, env)
        return run(cfg, stdout)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG, err)
    except RegimeError as exc:
        return _fail("regime", exc, EXIT_REGIME, err)
    except (NumericalError, ShearStabError, np.linalg.LinAlgError) as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL, err)


if __name__ == "__main__":
    sys.exit(main())
