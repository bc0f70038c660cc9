"""Command-line interface, config grammar and report writers."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import orlicz
from .constants import (KINDS, NonIntegrable, bekolle_bonami, bekolle_infinity, box_mass_sequence,
                        carleson_sequence_constant, class_constant, sawyer_testing)
from .fields import (BorelMeasure, DomainError, NonConvergent, QuadratureSpec, ScalarField, box_indicator,
                     box_sum, constant, half_disk, power_abs, power_y, product, rect_indicator)
from .geometry import ScaleWindow
from .operators import (Params, bergman_positive, bracket_points, dyadic_maximal_points, dyadic_positive_operator,
                        exp_maximal, orlicz_maximal, weighted_fractional_maximal)
from .verify import (TAGS, BpViolation, Scenario, TailDominated, VerificationResult, run_scenario, sharpness_sweep)

CSV_VERSION = "v1"
THREADS_ENV = "HALFPLANE_LAB_THREADS"


class ConfigError(ValueError):
    """A config value that does not fit the schema; ``path`` locates it."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# grammar

_FIELD_ARITY = {"const": 1, "power_y": 1, "power_abs": 1, "box": 2, "rect": 4, "half_disk": 1}


def parse_field(text: str, path: str = "field") -> ScalarField:
    """Parse ``"name args"`` factors joined by ``*``.

    Names: ``const c``, ``power_y t``, ``power_abs s``, ``box a b``,
    ``rect x0 x1 y0 y1``, ``half_disk R`` and ``box_sum a1 b1 c1 a2 b2 c2 ...``.
    Example: ``"power_abs -1.9 * half_disk 1"``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ConfigError(path, "expected a field string")
    out = None
    for k, part in enumerate(text.split("*")):
        tok = part.split()
        if not tok:
            raise ConfigError(path, f"empty factor {k}")
        name, args = tok[0], tok[1:]
        try:
            vals = [float(a) for a in args]
        except ValueError:
            raise ConfigError(path, f"non-numeric argument in {part.strip()!r}") from None
        if name == "box_sum":
            if not vals or len(vals) % 3:
                raise ConfigError(path, "box_sum takes triples a b c")
            g = box_sum([(vals[i], vals[i + 1]) for i in range(0, len(vals), 3)], vals[2::3])
        elif name in _FIELD_ARITY:
            if len(vals) != _FIELD_ARITY[name]:
                raise ConfigError(path, f"{name} takes {_FIELD_ARITY[name]} argument(s)")
            try:
                g = {"const": constant, "power_y": power_y, "power_abs": power_abs, "box": box_indicator,
                     "rect": rect_indicator, "half_disk": half_disk}[name](*vals)
            except (ValueError, DomainError) as e:
                raise ConfigError(path, str(e)) from None
        else:
            raise ConfigError(path, f"unknown field {name!r}")
        out = g if out is None else product(out, g)
    return out


def parse_measure(obj, alpha: float, path: str = "mu") -> BorelMeasure:
    """A field string (density against ``dV_alpha``), ``{"density": ...}`` or ``{"atoms": [[x, y, m], ...]}``."""
    if isinstance(obj, str):
        return BorelMeasure.weighted(parse_field(obj, path), alpha)
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected a field string or an object")
    if "density" in obj:
        return BorelMeasure.weighted(parse_field(obj["density"], path + ".density"), alpha)
    if "atoms" in obj:
        try:
            atoms = [(complex(float(x), float(y)), float(m)) for x, y, m in obj["atoms"]]
            return BorelMeasure.point_masses(atoms)
        except (TypeError, ValueError) as e:
            raise ConfigError(path + ".atoms", f"expected [[x, y, mass], ...] with y > 0, mass > 0 ({e})") from None
    raise ConfigError(path, "needs 'density' or 'atoms'")


def parse_young(obj, path: str = "phi") -> orlicz.YoungFunction:
    """``"power p"``, ``"power_bump p r"``, ``"power_log p k"``, ``"exponential"`` or ``{"tabulated": [[t, v], ...]}``."""
    try:
        if isinstance(obj, dict) and "tabulated" in obj:
            ts, vs = zip(*obj["tabulated"])
            return orlicz.tabulated(ts, vs)
        if not isinstance(obj, str):
            raise ConfigError(path, "expected a Young function string or {'tabulated': ...}")
        tok = obj.split()
        vals = [float(a) for a in tok[1:]]
        makers = {"power": (orlicz.power, (1, 2)), "power_bump": (orlicz.power_conjugate_bump, (2,)),
                  "power_log": (orlicz.power_log, (2,)), "exponential": (orlicz.exponential, (0,))}
        if tok[0] not in makers:
            raise ConfigError(path, f"unknown Young function {tok[0]!r}")
        fn, arity = makers[tok[0]]
        if len(vals) not in arity:
            raise ConfigError(path, f"{tok[0]} takes {' or '.join(map(str, arity))} argument(s)")
        return fn(*vals)
    except orlicz.InvalidYoung as e:
        raise ConfigError(path, str(e)) from None
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from None


def _num(obj, key, path, default=None, kind=float):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and v != int(v)):
        raise ConfigError(f"{path}.{key}", f"expected {'integer' if kind is int else 'number'}")
    return kind(v)


def parse_params(obj, path: str = "params") -> Params:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    p = _num(obj, "p", path, 2.0)
    alpha = _num(obj, "alpha", path, 0.0)
    gamma = _num(obj, "gamma", path, 0.0)
    try:
        if obj.get("critical", False):
            return Params.critical(p, alpha, gamma)
        return Params(p, _num(obj, "q", path, p), alpha, gamma)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def parse_window(obj, path: str = "window") -> ScaleWindow:
    if isinstance(obj, list) and len(obj) == 4:
        obj = dict(zip(("j_min", "j_max", "x_lo", "x_hi"), obj))
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected {j_min, j_max, x_lo, x_hi}")
    try:
        return ScaleWindow(_num(obj, "j_min", path, kind=int), _num(obj, "j_max", path, kind=int),
                           _num(obj, "x_lo", path), _num(obj, "x_hi", path))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from None


_SCENARIO_KEYS = {"tag", "name", "params", "window", "sigma", "omega", "mu", "family", "n_lambda", "eps", "beta",
                  "tolerance", "spec", "options"}
_WINDOW_OPTIONS = {"test_window", "binf_window"}
_YOUNG_OPTIONS = {"phi", "psi"}


def parse_scenario(obj, path: str = "$") -> Scenario:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    extra = set(obj) - _SCENARIO_KEYS
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
    tag = obj.get("tag")
    if tag not in TAGS:
        raise ConfigError(f"{path}.tag", f"expected one of {', '.join(TAGS)}")
    P = parse_params(obj.get("params", {}), f"{path}.params")
    kw = {"tag": tag, "name": str(obj.get("name", "")), "params": P}
    if "window" in obj:
        kw["window"] = parse_window(obj["window"], f"{path}.window")
    for key in ("sigma", "omega"):
        if key in obj:
            kw[key] = parse_field(obj[key], f"{path}.{key}")
    if "mu" in obj:
        kw["mu"] = parse_measure(obj["mu"], P.alpha, f"{path}.mu")
    fam = obj.get("family", {})
    if not isinstance(fam, dict):
        raise ConfigError(f"{path}.family", "expected an object")
    kw["family_size"] = _num(fam, "size", f"{path}.family", 20, int)
    kw["max_boxes"] = _num(fam, "max_boxes", f"{path}.family", 8, int)
    kw["seed"] = _num(fam, "seed", f"{path}.family", 0, int)
    kw["n_lambda"] = _num(obj, "n_lambda", path, 32, int)
    kw["tolerance"] = _num(obj, "tolerance", path, 1e-6)
    if "eps" in obj:
        e = obj["eps"]
        if not isinstance(e, list) or not all(isinstance(v, (int, float)) and 0 < v < 1 for v in e):
            raise ConfigError(f"{path}.eps", "expected a list of numbers in (0, 1)")
        kw["eps"] = tuple(float(v) for v in e)
    if "beta" in obj:
        if str(obj["beta"]) not in ("0", "1/3"):
            raise ConfigError(f"{path}.beta", "expected 0 or 1/3")
        kw["beta"] = str(obj["beta"])
    if "spec" in obj:
        try:
            kw["spec"] = QuadratureSpec(**obj["spec"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}.spec", str(e)) from None
    opts = dict(obj.get("options", {}))
    for k in _WINDOW_OPTIONS & set(opts):
        opts[k] = parse_window(opts[k], f"{path}.options.{k}").to_dict()
    for k in _YOUNG_OPTIONS & set(opts):
        opts[k] = parse_young(opts[k], f"{path}.options.{k}")
    kw["options"] = opts
    try:
        return Scenario(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e)) from None


def bundled_config_dir() -> Path:
    return Path(str(resources.files("halfplane_lab") / "configs"))


def config_name(tag: str) -> str:
    """Default bundled config file for a tag (``T2.1a -> T2_1a.json``, ``§5 -> sharpness.json``)."""
    return "sharpness.json" if tag == "§5" else tag.replace(".", "_") + ".json"


def resolve_config(path: Optional[str], tag: Optional[str]) -> Path:
    if path is None:
        return bundled_config_dir() / config_name(tag)
    p = Path(path)
    if p.exists():
        return p
    q = bundled_config_dir() / p.name
    if q.exists():
        return q
    raise ConfigError("--config", f"no such file: {path}")


def load_scenarios(path, tag: Optional[str] = None) -> List[Scenario]:
    """Scenarios from a config file: one scenario object or ``{"scenarios": [...]}``.

    With ``tag`` given, scenarios without a tag inherit it and scenarios with
    a different tag are rejected.
    """
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError("$", f"invalid JSON ({e})") from None
    items = obj["scenarios"] if isinstance(obj, dict) and "scenarios" in obj else [obj]
    if isinstance(obj, dict) and "scenarios" in obj:
        extra = set(obj) - {"scenarios", "tag"}
        if extra:
            raise ConfigError(f"$.{sorted(extra)[0]}", "unknown key")
        if not isinstance(items, list) or not items:
            raise ConfigError("$.scenarios", "expected a nonempty list")
        if "tag" in obj:
            if tag is not None and obj["tag"] != tag:
                raise ConfigError("$.tag", f"config is for {obj['tag']}, not {tag}")
            tag = obj["tag"]
    base = "$.scenarios" if len(items) > 1 or "scenarios" in obj else "$"
    out = []
    for k, item in enumerate(items):
        p = f"{base}[{k}]" if base != "$" else base
        if tag is not None and isinstance(item, dict):
            item = dict(item)
            item.setdefault("tag", tag)
            if item["tag"] != tag:
                raise ConfigError(f"{p}.tag", f"config is for {item['tag']}, not {tag}")
        out.append(parse_scenario(item, p))
    return out


# ---------------------------------------------------------------------------
# reports


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _csv_path(base: str, k: int, n: int) -> str:
    if n == 1:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}_{k}{p.suffix}"))


def _emit(summary: dict, json_path: Optional[str]) -> None:
    text = json.dumps(summary, indent=2, sort_keys=True, default=_default)
    if json_path:
        Path(json_path).write_text(text + "\n")
    print(text)


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    if hasattr(o, "describe"):
        return o.describe()
    return str(o)


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _run_one(sc: Scenario) -> VerificationResult:
    try:
        return run_scenario(sc)
    except (orlicz.Inconclusive, NonConvergent, TailDominated) as e:
        return VerificationResult(sc.tag, 0, math.nan, False, sc.tolerance, 0.0, True, sc.name,
                                  details={"error": f"{type(e).__name__}: {e}"})


def run_scenarios(scenarios: Sequence[Scenario]) -> List[VerificationResult]:
    """Run scenarios on ``HALFPLANE_LAB_THREADS`` workers; results keep config order."""
    n = max(1, int(os.environ.get(THREADS_ENV, "1")))
    if n == 1 or len(scenarios) == 1:
        return [_run_one(s) for s in scenarios]
    with ThreadPoolExecutor(n) as ex:
        return list(ex.map(_run_one, scenarios))


def exit_code(results: Sequence) -> int:
    """1 if any check failed outright, else 2 if any was inconclusive, else 0."""
    if any(not r.passed and not r.inconclusive for r in results):
        return 1
    if any(r.inconclusive for r in results):
        return 2
    return 0


# ---------------------------------------------------------------------------
# subcommands


def _params_from(args) -> Params:
    if args.q is None:
        return Params.critical(args.p, args.alpha, args.gamma)
    return Params(args.p, args.q, args.alpha, args.gamma)


def _window_from(args) -> ScaleWindow:
    return ScaleWindow(*[int(v) for v in args.window[:2]], *[float(v) for v in args.window[2:]])


def _points(text: str):
    pts = []
    for k, part in enumerate(text.split(";")):
        try:
            x, y = (float(v) for v in part.split(","))
        except ValueError:
            raise ConfigError(f"--points[{k}]", "expected x,y") from None
        if y <= 0:
            raise ConfigError(f"--points[{k}]", "y must be positive")
        pts.append(complex(x, y))
    return pts


def cmd_measure(args) -> int:
    mu = parse_measure(args.density, args.alpha, "--density")
    if args.box:
        a, b = args.box
        value = mu.rect(a, b, 0.0, b - a)
        what = {"box": [a, b]}
    else:
        x0, x1, y0, y1 = args.rect
        value = mu.rect(x0, x1, y0, y1)
        what = {"rect": [x0, x1, y0, y1]}
    _emit({"measure": mu.describe(), **what, "value": value}, args.json)
    return 0


def cmd_maximal_eval(args) -> int:
    f = parse_field(args.f, "--f")
    P = _params_from(args)
    W = _window_from(args)
    pts = _points(args.points)
    xs = np.array([z.real for z in pts])
    ys = np.array([z.imag for z in pts])
    rows = []
    if args.op == "bracket":
        lo, up = bracket_points(f, P, xs, ys, W)
        rows = [(z.real, z.imag, a, b) for z, a, b in zip(pts, lo, up)]
        cols = ("x", "y", "lower", "upper")
    else:
        if args.op == "dyadic":
            vals = dyadic_maximal_points(f, P, args.beta, xs, ys, W)
        elif args.op == "weighted":
            s = parse_field(args.sigma, "--sigma")
            vals = [weighted_fractional_maximal(f, s, P, args.beta, z, W) for z in pts]
        elif args.op == "exp":
            vals = [exp_maximal(f, P.alpha, z, W, args.beta) for z in pts]
        elif args.op == "orlicz":
            phi = parse_young(args.phi, "--phi")
            vals = [orlicz_maximal(f, phi, P.alpha, z, W, args.beta) for z in pts]
        elif args.op == "bergman":
            vals = [bergman_positive(f, P, z, W) for z in pts]
        else:
            vals = [dyadic_positive_operator(f, P, args.beta, z, W) for z in pts]
        rows = [(z.real, z.imag, float(v)) for z, v in zip(pts, vals)]
        cols = ("x", "y", "value")
    if args.csv:
        write_csv(args.csv, cols, rows)
    _emit({"op": args.op, "params": P.to_dict(), "window": W.to_dict(), "columns": list(cols),
           "csv_schema": f"maximal-eval/{CSV_VERSION}", "rows": [list(r) for r in rows]}, args.json)
    return 0


def cmd_constant(args) -> int:
    W = _window_from(args)
    P = _params_from(args)
    weight = parse_field(args.weight, "--weight") if args.weight else None
    other = parse_field(args.other, "--other") if args.other else None
    mu = parse_measure(args.mu, P.alpha, "--mu") if args.mu else None
    k = args.kind
    if k in ("Bp", "Binf", "carleson") and weight is None:
        raise ConfigError("--weight", f"{k} needs --weight")
    if k == "Bp":
        rep = bekolle_bonami(weight, P.p, P.alpha, W)
    elif k == "Binf":
        rep = bekolle_infinity(weight, P.alpha, W)
    elif k == "carleson":
        rep = carleson_sequence_constant(box_mass_sequence(weight, P.alpha), weight, P.alpha, 1.0, W)
    elif k == "sawyer":
        rep = sawyer_testing(weight or constant(1.0), mu or BorelMeasure.weighted(constant(1.0), P.alpha), P,
                             args.beta, W)
    else:
        phi = parse_young(args.phi, "--phi") if args.phi else None
        psi = parse_young(args.psi, "--psi") if args.psi else None
        sec = mu if k in ("strong_class", "weak_class", "bump_single") and mu is not None else other
        if k == "B_pq_joint":
            weight, sec = None, other or weight
        rep = class_constant(k, weight, sec, P, W, phi=phi, psi=psi, r=args.r)
    rows = [] if rep.per_box is None else list(enumerate(np.asarray(rep.per_box).tolist()))
    if args.csv:
        write_csv(args.csv, ("box", "value"), rows)
    _emit(_clean(rep.to_dict()), args.json)
    return 0


def cmd_verify(args) -> int:
    if args.tag is not None and args.tag not in TAGS:
        raise ConfigError("tag", f"expected one of {', '.join(TAGS)}")
    if args.tag is None and args.config is None:
        raise ConfigError("verify", "give a theorem tag or --config")
    path = resolve_config(args.config, args.tag)
    scenarios = load_scenarios(path, args.tag)
    results = run_scenarios(scenarios)
    if args.csv:
        for k, r in enumerate(results):
            write_csv(_csv_path(args.csv, k, len(results)), ("scenario",) + r.columns,
                      [(r.name,) + tuple(row) for row in r.rows])
    summary = {"config": path.name, "csv_schema": f"verify/{CSV_VERSION}", "exit_code": exit_code(results),
               "results": [dict(r.to_dict(timing=args.timing), columns=list(r.columns)) for r in results]}
    _emit(summary, args.json)
    return exit_code(results)


def cmd_sharpness(args) -> int:
    P = Params.critical(args.p, args.alpha, args.gamma)
    eps = [float(v) for v in args.eps.split(",")]
    sw = sharpness_sweep(P, eps)
    if args.csv:
        write_csv(args.csv, sw.columns, sw.table)
    out = dict(sw.to_dict(), params=P.to_dict(), columns=list(sw.columns), csv_schema=f"sharpness/{CSV_VERSION}",
               table=[list(r) for r in sw.table])
    _emit(_clean(out), args.json)
    return 0 if sw.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="halfplane-lab", description="Weighted fractional maximal operators on the upper half-plane.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, window=True, params=True):
        p.add_argument("--json", help="also write the JSON summary here")
        p.add_argument("--csv", help="write the row table here")
        if params:
            p.add_argument("--p", type=float, default=2.0)
            p.add_argument("--q", type=float, help="defaults to the critical exponent")
            p.add_argument("--alpha", type=float, default=0.0)
            p.add_argument("--gamma", type=float, default=0.0)
            p.add_argument("--beta", default="0", choices=["0", "1/3"])
        if window:
            p.add_argument("--window", nargs=4, default=["-5", "2", "-4", "4"], metavar=("J_MIN", "J_MAX", "X_LO", "X_HI"))

    m = sub.add_parser("measure", help="box or rectangle measure")
    m.add_argument("--alpha", type=float, default=0.0)
    m.add_argument("--density", default="const 1", help="field string; the measure is density dV_alpha")
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--box", nargs=2, type=float, metavar=("A", "B"))
    g.add_argument("--rect", nargs=4, type=float, metavar=("X0", "X1", "Y0", "Y1"))
    m.add_argument("--json")
    m.set_defaults(run=cmd_measure)

    e = sub.add_parser("maximal-eval", help="evaluate an operator at points")
    e.add_argument("--op", required=True, choices=["dyadic", "weighted", "bracket", "exp", "orlicz", "bergman", "positive"])
    e.add_argument("--f", required=True, help="field string")
    e.add_argument("--points", required=True, help="'x,y;x,y;...'")
    e.add_argument("--sigma", default="const 1")
    e.add_argument("--phi", default="power 2")
    common(e)
    e.set_defaults(run=cmd_maximal_eval)

    c = sub.add_parser("constant", help="any weight or class constant")
    c.add_argument("kind", choices=["Bp", "Binf", "carleson", "sawyer", *KINDS])
    c.add_argument("--weight", help="sigma / omega field string")
    c.add_argument("--other", help="second weight field string")
    c.add_argument("--mu", help="measure density field string")
    c.add_argument("--phi")
    c.add_argument("--psi")
    c.add_argument("--r", type=float)
    common(c)
    c.set_defaults(run=cmd_constant)

    v = sub.add_parser("verify", help="run the checks of a theorem tag")
    v.add_argument("tag", nargs="?", help=f"one of {', '.join(TAGS)}")
    v.add_argument("--config", help="config path or bundled config name; default is the tag's bundled config")
    v.add_argument("--timing", action="store_true", help="include runtimes (outputs are then not reproducible)")
    common(v, window=False, params=False)
    v.set_defaults(run=cmd_verify)

    s = sub.add_parser("sharpness", help="epsilon sweep of the sharpness example")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--eps", default="0.2,0.1,0.05,0.025")
    s.add_argument("--json")
    s.add_argument("--csv")
    s.set_defaults(run=cmd_sharpness)
    return ap


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except ConfigError as e:
        print(f"config error at {e}", file=sys.stderr)
        return 1
    except (NonIntegrable, BpViolation, DomainError, ValueError, ArithmeticError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
