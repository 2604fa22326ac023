"""Command-line front end: ``bellforge <command> [options]``.

Exit status is 0 on success, 1 when a validation or reproduction check
fails, and 2 for unusable input (unknown preset, unreadable or malformed
file, bad option value).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, presets
from .checks import check_all
from .errors import BellforgeError, ConfigError, IoError
from .io import (assignment_to_doc, fmt, lattice_to_doc, load_lattice, load_model, provenance, read_json,
                 result_to_doc, space_from_doc, table_to_doc, write_csv, write_json)
from .lattice import bell_conditional, lattice_chsh
from .metrics import ChshReport, chsh
from .models import compose_bb, validate
from .optimize import exhaustive_max, hill_climb
from .reproduce import reproduce_all

HEXAGON_REFERENCE = 2.82843
HILL_CLIMB_RESTARTS = 100


def _model(ref: str):
    if ref in presets.MODELS:
        return presets.MODELS[ref]()
    if os.path.exists(ref):
        try:
            return load_model(ref, strict=False)
        except BellforgeError as exc:
            raise ConfigError(f"{ref}: {exc}") from None
    raise ConfigError(f"--model must be one of {sorted(presets.MODELS)} or a model file, got {ref!r}")


def _lattice(args):
    if args.lattice_file:
        try:
            lat = load_lattice(args.lattice_file)
        except ConfigError:
            raise
        except BellforgeError as exc:
            raise ConfigError(f"{args.lattice_file}: {exc}") from None
    else:
        name = args.preset or "ladder10"
        if name not in presets.LATTICES:
            raise ConfigError(f"--preset must be one of {sorted(presets.LATTICES)}, got {name!r}")
        lat = presets.LATTICES[name]()
    if args.J is not None:
        lat = lat.with_couplings(args.J)
    return lat


def _space(ref: str):
    if ref in presets.SPACES:
        return presets.SPACES[ref]()
    if os.path.exists(ref):
        try:
            return space_from_doc(read_json(ref), presets.LATTICES)
        except ConfigError:
            raise
        except BellforgeError as exc:
            raise ConfigError(f"{ref}: {exc}") from None
    raise ConfigError(f"--space must be one of {sorted(presets.SPACES)} or a search-space file, got {ref!r}")


def _betas(text: str | None) -> list[float]:
    """Comma list ``0.5,1,2`` or range ``start:stop:step`` (stop included)."""
    if not text:
        return [round(0.05 * k, 10) for k in range(1, 51)]
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 12) for k in range(n)]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot read β values from {text!r}") from None


def _single_beta(args) -> float | None:
    if args.beta is None:
        return None
    vals = _betas(args.beta)
    if len(vals) != 1:
        raise ConfigError("this command takes a single --beta value")
    return vals[0]


def _chsh_doc(rep: ChshReport) -> dict:
    return {"M_ab": fmt(rep.M_ab), "M_apb": fmt(rep.M_apb), "M_abp": fmt(rep.M_abp), "M_apbp": fmt(rep.M_apbp),
            "X_BI": fmt(rep.X_BI), "abs_X_BI": fmt(rep.abs_score), "violates": rep.violates,
            "violates_abs": rep.violates_abs, "settings": list(rep.settings.as_tuple())}


def _plain(v):
    """Witness values can be tuples or numpy scalars; JSON wants lists and builtins."""
    if isinstance(v, dict):
        return {str(k): _plain(u) for k, u in v.items()}
    if isinstance(v, (tuple, list)):
        return [_plain(u) for u in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _emit(args, kind: str, payload: dict, lines: list[str], curves: dict | None = None) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {"kind": kind, "provenance": provenance(config, args.seed), "results": payload}
    for line in lines:
        print(line)
    if args.out:
        out = Path(args.out)
        write_json(out / "report.json", doc)
        for name, (header, rows) in (curves or {}).items():
            write_csv(out / f"{name}.csv", header, rows)
        print(f"wrote {out / 'report.json'}")


# -- commands --------------------------------------------------------------

def cmd_model_check(args) -> int:
    model = _model(args.model)
    residuals = validate(model)
    # premise verdicts are meaningless on tables that are not probability rows
    verdicts = {} if residuals else check_all(model, args.tolerance)
    payload = {"model": model.name or args.model,
               "residuals": [{"table": r.table, "given": _plain(r.given), "residual": fmt(r.residual)}
                             for r in residuals],
               "verdicts": [{"condition_id": v.condition_id, "satisfied": v.satisfied,
                             "max_deviation": fmt(v.max_deviation), "witness": _plain(v.witness),
                             "skipped": v.skipped, "scope": v.scope} for v in verdicts.values()]}
    lines = [f"model {model.name or args.model}: {len(residuals)} normalization residuals above tolerance"]
    lines += [f"  {v.condition_id:<7} {'satisfied' if v.satisfied else 'violated':<10} max deviation {v.max_deviation:.3g}"
              for v in verdicts.values()]
    if not residuals and model.x.size == 2 and model.y.size == 2:
        rep = chsh(compose_bb(model), model.settings_quad())
        payload["chsh"] = _chsh_doc(rep)
        lines.append(f"  X_BI = {rep.X_BI!r}")
    _emit(args, "model-check", payload, lines)
    return 1 if residuals else 0


def cmd_model_eval(args) -> int:
    model = _model(args.model)
    if validate(model):
        print(f"model {args.model} fails normalization", file=sys.stderr)
        return 1
    table = compose_bb(model)
    payload = {"model": model.name or args.model, "joint": table_to_doc(table)}
    lines = [f"P(σ1,σ2|x,y) for {model.name or args.model}:"]
    rows = []
    for (g, t), p in table.entries().items():
        rows.append([*_plain(g), *t, p])
        lines.append(f"  x={g[0]!r:<22} y={g[1]!r:<22} σ1={t[0]:+d} σ2={t[1]:+d}  {p:.17g}")
    if model.x.size == 2 and model.y.size == 2:
        rep = chsh(table, model.settings_quad())
        payload["chsh"] = _chsh_doc(rep)
        lines.append(f"X_BI = {rep.X_BI!r}")
    _emit(args, "model-eval", payload, lines, {"joint": (["x", "y", "sigma1", "sigma2", "p"], rows)})
    return 0


def cmd_lattice_eval(args) -> int:
    lat = _lattice(args)
    beta = _single_beta(args)
    if beta is not None:
        lat = lat.with_beta(beta)
    table = bell_conditional(lat)
    rep = lattice_chsh(lat)
    ppp = table.prob((1, 1), (1, 1))
    payload = {"lattice": lattice_to_doc(lat), "conditional": table_to_doc(table),
               "P_pp_given_pp": fmt(ppp), "chsh": _chsh_doc(rep)}
    lines = [f"lattice with {lat.n} spins, {len(lat.edges)} pairs, β = {lat.beta}",
             f"  P(+,+|+,+) = {ppp:.17g}", f"  X_BI = {rep.X_BI:.17g}"]
    rows = [[*g, *t, p] for (g, t), p in table.entries().items()]
    _emit(args, "lattice-eval", payload, lines,
          {"conditional": (["sigma_a", "sigma_b", "sigma1", "sigma2", "p"], rows)})
    return 0


def cmd_lattice_scan(args) -> int:
    lat = _lattice(args)
    rows = []
    for beta in _betas(args.beta):
        b = lat.with_beta(beta)
        rep = lattice_chsh(b)
        rows.append([beta, bell_conditional(b).prob((1, 1), (1, 1)), rep.X_BI])
    payload = {"lattice": lattice_to_doc(lat), "curve": [[fmt(v) for v in r] for r in rows]}
    lines = [f"{'beta':>8} {'P(+,+|+,+)':>20} {'X_BI':>20}"]
    lines += [f"{r[0]:8.4g} {r[1]:20.15f} {r[2]:20.15f}" for r in rows]
    _emit(args, "lattice-scan", payload, lines, {"curve": (["beta", "p_pp_given_pp", "x_bi"], rows)})
    return 0


def _search(args, space):
    if args.strategy == "exhaustive":
        return exhaustive_max(space)
    if args.strategy == "hill-climb":
        return hill_climb(space, seed=args.seed, restarts=HILL_CLIMB_RESTARTS)
    raise ConfigError(f"--strategy must be 'exhaustive' or 'hill-climb', got {args.strategy!r}")


def cmd_optimize(args) -> int:
    space = _space(args.space)
    res = _search(args, space)
    payload = result_to_doc(space, res)
    a = assignment_to_doc(space, res.assignment)
    lines = [f"best X_BI = {res.best_x:.17g} ({res.strategy}, {res.evaluations} evaluations, "
             f"{res.wall_time:.1f} s)", f"  beta = {a['beta']}"]
    lines += [f"  h[{k}] = {v}" for k, v in a["fields"].items()]
    lines += [f"  J[{k}] = {v}" for k, v in a["couplings"].items()]
    traj = [[k, x] for k, (_, x) in enumerate(res.trajectory)]
    _emit(args, "optimize", payload, lines, {"trajectory": (["step", "x_bi"], traj)} if traj else None)
    return 0


def cmd_hexagon(args) -> int:
    space = presets.SPACES["hexagon6"]()
    res = _search(args, space)
    payload = result_to_doc(space, res)
    payload["reference"] = fmt(HEXAGON_REFERENCE)
    payload["difference"] = fmt(res.best_x - HEXAGON_REFERENCE)
    lines = [f"hexagon maximum X_BI = {res.best_x:.6f}; reference {HEXAGON_REFERENCE}; "
             f"difference {res.best_x - HEXAGON_REFERENCE:+.5f}"]
    _emit(args, "hexagon", payload, lines)
    return 0


def cmd_reproduce_all(args) -> int:
    lat = None
    if args.lattice_file:
        lat = _lattice(args)
    only = [s.strip() for s in args.only.split(",")] if args.only else None
    if args.strategy not in ("exhaustive", "hill-climb"):
        raise ConfigError(f"--strategy must be 'exhaustive' or 'hill-climb', got {args.strategy!r}")
    try:
        outcomes = reproduce_all(lat, only, args.strategy, args.seed)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    payload = [{"key": o.key, "title": o.title, "reference": o.reference, "computed": o.computed,
                "tolerance": o.tolerance, "passed": o.passed, "hard": o.hard, "note": o.note} for o in outcomes]
    _emit(args, "reproduce-all", payload, [o.line() for o in outcomes])
    return 1 if any(o.hard and not o.passed for o in outcomes) else 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    common.add_argument("--tolerance", type=float, default=1e-10, help="premise-check tolerance")
    common.add_argument("--out", help="directory for report.json and CSV files")

    lattice_opts = argparse.ArgumentParser(add_help=False)
    lattice_opts.add_argument("--preset", help="lattice preset: ladder10 (default) or hexagon6")
    lattice_opts.add_argument("--lattice-file", help="lattice definition file (JSON)")
    lattice_opts.add_argument("--beta", help="inverse temperature; scans accept a list or start:stop:step")
    lattice_opts.add_argument("--J", type=float, help="set every coupling to this value")

    p = argparse.ArgumentParser(prog="bellforge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bellforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="check or evaluate a hidden-variable model")
    msub = model.add_subparsers(dest="action", required=True)
    for name, fn, text in (("check", cmd_model_check, "premise verdicts"),
                           ("eval", cmd_model_eval, "joint outcome table and CHSH")):
        c = msub.add_parser(name, parents=[common], help=text)
        c.add_argument("--model", required=True, help="bb1, dilorenzo, or a model file")
        c.set_defaults(func=fn)

    lattice = sub.add_parser("lattice", help="exact Ising-lattice statistics")
    lsub = lattice.add_subparsers(dest="action", required=True)
    for name, fn, text in (("eval", cmd_lattice_eval, "Bell conditional and CHSH at one β"),
                           ("scan", cmd_lattice_scan, "CHSH as a function of β")):
        c = lsub.add_parser(name, parents=[common, lattice_opts], help=text)
        c.set_defaults(func=fn)

    opt = sub.add_parser("optimize", parents=[common], help="maximize X_BI over a parameter grid")
    opt.add_argument("--space", default="paper-grid", help="paper-grid, hexagon6, or a search-space file")
    opt.add_argument("--strategy", default="exhaustive", help="exhaustive or hill-climb")
    opt.set_defaults(func=cmd_optimize)

    hexa = sub.add_parser("hexagon", parents=[common], help="grid maximum on the six-spin ring")
    hexa.add_argument("--strategy", default="exhaustive", help="exhaustive or hill-climb")
    hexa.set_defaults(func=cmd_hexagon)

    rep = sub.add_parser("reproduce-all", parents=[common], help="run every reproduction target")
    rep.add_argument("--only", help="comma-separated subset of targets")
    rep.add_argument("--lattice-file", help="ladder definition to use instead of the built-in one")
    rep.add_argument("--strategy", default="exhaustive", help="grid search for the optimization target")
    rep.set_defaults(func=cmd_reproduce_all, preset=None, J=None, beta=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IoError) as exc:
        print(f"bellforge: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
