"""Command-line driver: ``mchlab <command> [flags]``.

Each command prints a JSON report on stdout and, with ``--out`` (or the
``MCHLAB_OUT`` environment variable), also writes it to ``<out>/<command>.json``
or ``.csv``. Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import MchlabError, ValidationError
from .evolution import (EvolutionConfig, advisory_dt, collision_config, collision_experiment,
                        conservation_drift, evolve, stability_experiment)
from .fields import default_box, sample_two_soliton, write_field_csv
from .functionals import conserved_report, criticality_residual, lagrange_multipliers
from .hessian import hessian_M
from .soliton import build_params, collision_phase_shift
from .spectral import spectrum_box, two_soliton_spectrum

COMMANDS = ("build", "conserved", "criticality", "spectrum", "hessian", "evolve", "collide",
            "stability")

DEFAULTS = dict(kappa=1.0, c1=5.0, c2=4.0, y10=0.0, y20=0.0, t=0.0, n=None, half_width=None,
                out=None, format="json", jobs=1, count=8, grid=0, t_end=None, dt=None,
                stride=100, deltas="1e-3,2e-3,4e-3")

DEFAULT_N = dict(build=2048, conserved=8192, criticality=8192, spectrum=4096, hessian=0,
                 evolve=2048, collide=8192, stability=2048)


# --------------------------------------------------------------------------
# deterministic output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _emit(obj, indent, level):
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_emit(obj[k], indent, level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _emit(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        text = format(obj, ".17g")
        return text if any(ch in text for ch in ".e") else text + ".0"
    return json.dumps(obj)


def dumps(report, indent=2):
    """JSON text with sorted keys and 17 significant digits for every float."""
    return _emit(_plain(report), indent, 0) + "\n"


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def write_report(report, out_dir, name, fmt="json", field=None):
    """Write ``report`` (and a field snapshot for CSV output) under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(dumps(report))
        return [path]
    if field is not None:
        path = out / f"{name}.csv"
        write_field_csv(field, path)
        return [path]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, value in _flatten(_plain(report)):
        w.writerow([key, format(value, ".17g") if isinstance(value, float) else value])
    path = out / f"{name}.csv"
    path.write_text(buf.getvalue())
    return [path]


# --------------------------------------------------------------------------
# commands


def _params(a):
    return build_params(a.kappa, a.c1, a.c2, a.y10, a.y20)


def _line_field(p, t, n, half_width, order=4):
    centre, hw = default_box(p, t, half_width)
    h = 2 * hw / (n - 1)
    return sample_two_soliton(p, t, centre - hw, h, n, order=order)


def cmd_build(a):
    p = _params(a)
    f = _line_field(p, a.t, a.n, a.half_width)
    delta, dx_fast, dx_slow = collision_phase_shift(p)
    report = {"params": p.to_dict(), "t": a.t,
              "grid": {"x0": f.x0, "h": f.h, "n": f.n},
              "m_min": float(f.m.min()), "m_max": float(f.m.max()),
              "phase_shift": {"delta": delta, "x_shift_fast": dx_fast, "x_shift_slow": dx_slow}}
    return report, f


def cmd_conserved(a):
    f = _line_field(_params(a), a.t, a.n, a.half_width)
    return conserved_report(f).to_dict(), None


def cmd_criticality(a):
    p = _params(a)
    f = _line_field(p, a.t, a.n, a.half_width)
    lam = lagrange_multipliers(p.c1, p.c2, p.kappa)
    return {"lambda1": lam.lambda1, "lambda2": lam.lambda2, "t": a.t,
            "residual": criticality_residual(f, lam), "grid": {"x0": f.x0, "h": f.h, "n": f.n}}, None


def cmd_spectrum(a):
    p = _params(a)
    rep = two_soliton_spectrum(p, a.t, a.n, a.count, a.half_width)
    return rep.to_dict(), None


def _hessian_point(args):
    c1, c2, kappa = args
    return hessian_M(c1, c2, kappa).to_dict()


def cmd_hessian(a):
    if not a.grid:
        return hessian_M(a.c1, a.c2, a.kappa).to_dict(), None
    k2 = a.kappa**2
    speeds = 3 * k2 + 6 * k2 * (np.arange(a.grid) + 0.5) / a.grid
    pts = [(c1, c2, a.kappa) for c1 in speeds for c2 in speeds if c2 < c1]
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as pool:
            rows = list(pool.map(_hessian_point, pts))
    else:
        rows = [_hessian_point(q) for q in pts]
    for (c1, c2, _), row in zip(pts, rows):
        row.update(c1=c1, c2=c2)
    return {"kappa": a.kappa, "points": rows}, None


def cmd_evolve(a):
    p = _params(a)
    centre, hw = spectrum_box(p, a.t)
    if a.half_width:
        hw = a.half_width
    t_end = a.t + 1.0 if a.t_end is None else a.t_end
    n = a.n
    m0 = sample_two_soliton(p, a.t, centre - hw, 2 * hw / n, n, order=0, periodic=True)
    dt = a.dt or advisory_dt(m0)
    cfg = EvolutionConfig(half_width=hw, n=n, dt=dt, t0=a.t, t_end=t_end, output_stride=a.stride)
    traj = evolve(m0, cfg)
    samples = [{"t": s.t, "min_m": s.min_m, "conserved": s.conserved.values()}
               for s in traj.samples]
    report = {"config": cfg.to_dict(), "status": traj.status, "message": traj.message,
              "drift": conservation_drift(traj) if len(traj.samples) > 1 else {},
              "samples": samples}
    a._trajectory = traj
    return report, traj.final.field


def cmd_collide(a):
    p = _params(a)
    cfg = collision_config(p, n=a.n, half_width=a.half_width, dt=a.dt)
    rep, traj = collision_experiment(p, cfg)
    a._trajectory = traj
    return {"config": cfg.to_dict(), **rep.to_dict()}, traj.final.field


def cmd_stability(a):
    p = _params(a)
    deltas = tuple(float(v) for v in str(a.deltas).split(","))
    rep = stability_experiment(p, deltas, n=a.n)
    return rep.to_dict(), None


HANDLERS = dict(build=cmd_build, conserved=cmd_conserved, criticality=cmd_criticality,
                spectrum=cmd_spectrum, hessian=cmd_hessian, evolve=cmd_evolve,
                collide=cmd_collide, stability=cmd_stability)


# --------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def _parser():
    shared = argparse.ArgumentParser(add_help=False)
    for flag, kind in (("kappa", float), ("c1", float), ("c2", float), ("y10", float),
                       ("y20", float), ("t", float), ("n", int), ("half-width", float),
                       ("jobs", int), ("count", int), ("grid", int), ("t-end", float),
                       ("dt", float), ("stride", int)):
        shared.add_argument(f"--{flag}", type=kind, default=None)
    shared.add_argument("--deltas", default=None, help="comma-separated perturbation sizes")
    shared.add_argument("--out", default=None)
    shared.add_argument("--format", choices=("json", "csv"), default=None)
    shared.add_argument("--config", default=None, help="JSON file of default flag values")
    parser = _Parser(prog="mchlab", description="mCH 2-soliton stability lab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[shared])
    return parser


def _resolve(ns):
    values = dict(DEFAULTS)
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {ns.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key in DEFAULTS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    if values["n"] is None:
        values["n"] = DEFAULT_N[ns.command]
    if os.environ.get("MCHLAB_OUT"):
        values["out"] = os.environ["MCHLAB_OUT"]
    if ns.command != "hessian" and values["n"] < 16:
        raise ValidationError("n must be at least 16")
    if values["jobs"] < 1:
        raise ValidationError("jobs must be >= 1")
    return argparse.Namespace(command=ns.command, **values)


def main(argv=None):
    ns = _parser().parse_args(argv)
    try:
        a = _resolve(ns)
        report, field = HANDLERS[a.command](a)
        sys.stdout.write(dumps(report))
        if a.out:
            write_report(report, a.out, a.command, a.format, field)
        traj = getattr(a, "_trajectory", None)
        if traj is not None:
            traj.check()
    except MchlabError as exc:
        print(f"mchlab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # keep tracebacks away from scripts
        print(f"mchlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
