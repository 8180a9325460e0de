"""Command-line front end.

Exit status: 0 for a definitive verdict, 2 for Inconclusive, 1 for errors (and
for a failed factor check).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import io as _stdio
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .density_rn import (check_bounded_ratio, classify_density, density_from_spec, envelopes,
                         measures_from_density, subcells_from_density)
from .errors import InvalidConfig, ShadowlabError
from .factor_map import (CLASSES, SimpleFunction, check_commuting, class_membership,
                         project_pi, required_constant, selector)
from .io import (dumps, fmt, read_measure_csv, read_partition, read_pseudo_archive,
                 read_simple_function, read_weights_csv, write_measure_csv,
                 write_pseudo_archive)
from .measure_core import (DEFAULT_DEPTH, DEFAULT_MARGIN, DEFAULT_WINDOW, ExpAbs, Geometric,
                           MeasureSequence, Witness, check_bounded_distortion,
                           classify_measures, generator_from_spec)
from .shadowing import (DEFAULT_SUPPORT, DEFAULT_TAIL_TOL, PseudoTrajectory, SplitOperator,
                        make_pseudotrajectory, shadow)
from .shift_ops import LpVector, WeightSequence, classify_shift, weights_from_measures

SCHEMA = "shadowlab/1"
EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


# -- argument parsing --------------------------------------------------------------

def _common(p: argparse.ArgumentParser, depth=True):
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    if depth:
        p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
        p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)


def _density_args(p: argparse.ArgumentParser):
    p.add_argument("--family", default="laplace",
                   choices=("exponential", "negative-exponential", "laplace", "cauchy",
                            "gaussian", "constant", "tabulated"))
    p.add_argument("--sign", type=int, default=1, help="exponential: h = e^(sign x)")
    p.add_argument("--b", type=float, default=1.0, help="Laplace scale")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="Laplace location")
    p.add_argument("--shift", type=float, default=0.0, help="use h(x + shift)")
    p.add_argument("--grid", help="x,h CSV for the tabulated family")
    p.add_argument("--mode", choices=("closed-form", "adaptive-grid"), default="closed-form")
    p.add_argument("--resolution", type=int, default=64)


def _measure_args(p: argparse.ArgumentParser):
    p.add_argument("--measures", help="k,nu CSV")
    p.add_argument("--generator", help='JSON, e.g. {"kind":"geometric","r":2.718281828459045}')
    p.add_argument("--geometric", type=float, metavar="R", help="nu_k = r^k")
    p.add_argument("--exp-abs", type=float, metavar="C", help="nu_k = c^-|k|")
    p.add_argument("--mu-w", type=float, default=1.0, help="nu_0 for --geometric/--exp-abs")


def _weight_args(p: argparse.ArgumentParser):
    p.add_argument("--weights", help='"neg=0.5,pos=2.0", "const=0.5" or a k,w CSV path')


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shadowlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"shadowlab {__version__}")
    ap.add_argument("--config", help="JSON job (object) or sweep (list of objects)")
    ap.add_argument("--jobs", type=int, default=1, help="parallel workers for a sweep")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("classify-density", help="envelope criterion for a density on the line")
    _density_args(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--swap", action="store_true", help="exchange the roles of M and m")
    p.add_argument("--cuts", default="0,0.5,1", help="sub-cell cut points for the distortion report")
    p.add_argument("--emit-measures", metavar="CSV", help="also write nu_k as k,nu CSV")
    _common(p)

    p = sub.add_parser("classify-measures", help="conditions on the cell measures nu_k")
    _measure_args(p)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    _common(p)

    p = sub.add_parser("classify-shift", help="bilateral weighted backward shift criterion")
    _weight_args(p)
    _measure_args(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    _common(p)

    p = sub.add_parser("shadow", help="shadow a generated pseudotrajectory")
    _weight_args(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--window", type=int, default=50, help="trajectory window [-N, N]")
    p.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--support", type=int, default=DEFAULT_SUPPORT)
    p.add_argument("--archive", metavar="CSV", help="write the pseudotrajectory (n,coord,value)")
    p.add_argument("--pseudo", metavar="CSV", help="read a pseudotrajectory archive instead")
    _common(p, depth=False)

    p = sub.add_parser("factor-check", help="factor map checks on random simple functions")
    _density_args(p)
    p.add_argument("--partition", help="partition spec JSON (overrides the density)")
    p.add_argument("--cuts", default="0,0.5,1")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--pieces", type=int, default=8)
    p.add_argument("--noise-seed", type=int, default=0)
    _common(p, depth=False)

    p = sub.add_parser("membership", help="test a simple function against UC/UD/UGH classes")
    _density_args(p)
    p.add_argument("--partition", help="partition spec JSON (overrides the density)")
    p.add_argument("--cuts", default="0,0.5,1")
    p.add_argument("--function", help='SimpleFunction JSON {"pieces":[{"k":0,"cell":"B1","a":1}]}')
    p.add_argument("--indicator", type=int, metavar="K", help="use chi_{f^K(W)}")
    p.add_argument("--cell", help="restrict --indicator to one sub-cell")
    p.add_argument("--class", dest="cls", choices=CLASSES, required=False, default="UC")
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--output", "-o")
    return ap


# -- input helpers ------------------------------------------------------------------

def parse_weights(text: str, N: int = DEFAULT_WINDOW) -> WeightSequence:
    if text is None:
        raise InvalidConfig("--weights is required")
    if Path(text).suffix == ".csv" or Path(text).is_file():
        return read_weights_csv(text)
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise InvalidConfig(f"cannot parse weight expression {text!r}")
        try:
            fields[key.strip()] = float(value)
        except ValueError:
            raise InvalidConfig(f"cannot parse weight value {value!r}") from None
    if set(fields) == {"neg", "pos"}:
        return WeightSequence.two_sided(fields["neg"], fields["pos"], N)
    if set(fields) in ({"const"}, {"w"}):
        return WeightSequence.constant(next(iter(fields.values())), N)
    raise InvalidConfig(f"weight expression needs neg= and pos= or const=, got {text!r}")


def _density(args):
    spec = {"family": args.family, "sign": args.sign, "b": args.b, "lambda": args.lam,
            "shift": args.shift, "mode": args.mode, "resolution": args.resolution}
    if args.family == "tabulated":
        if not args.grid:
            raise InvalidConfig("--family tabulated needs --grid")
        spec["path"] = args.grid
    return density_from_spec(spec)


def _measures(args) -> MeasureSequence:
    gen = None
    if args.generator:
        gen = generator_from_spec(json.loads(args.generator))
    elif args.geometric is not None:
        gen = Geometric(args.geometric)
    elif args.exp_abs is not None:
        gen = ExpAbs(args.exp_abs)
    if args.measures:
        return read_measure_csv(args.measures, gen)
    if gen is None:
        raise InvalidConfig("give --measures, --generator, --geometric or --exp-abs")
    return MeasureSequence.from_generator(gen, args.window, args.mu_w)


def _cuts(text: str) -> list[float]:
    return [float(c) for c in text.split(",")]


def _partition(args):
    if args.partition:
        return read_partition(args.partition)
    model = _density(args)
    N = args.window
    return subcells_from_density(model, _cuts(args.cuts), N), measures_from_density(model, (-N, N))


def _evidence(c) -> dict:
    return {name: est.to_dict() for name, est in c.evidence.items()}


def _verdict(c) -> dict:
    out = c.to_dict()
    out["evidence"] = _evidence(c)
    return out


def _status(c) -> int:
    return EXIT_OK if c.definitive else EXIT_INCONCLUSIVE


# -- commands --------------------------------------------------------------------------

def cmd_classify_density(args):
    model = _density(args)
    window = (-args.window, args.window)
    c = classify_density(model, args.depth, args.margin, window, args.swap)
    env = envelopes(model, window)
    bound = check_bounded_ratio(env)
    report = {"verdict": _verdict(c),
              "constants": {"ratio_bound": bound.value, "ratio_verified": bound.verified}}
    nu = measures_from_density(model, window)
    if not bound.unbounded:
        dist = check_bounded_distortion(subcells_from_density(model, _cuts(args.cuts), args.window), nu)
        report["constants"].update(dist.to_dict())
    if args.emit_measures:
        write_measure_csv(args.emit_measures, nu)
        report["emitted_measures"] = args.emit_measures
    show = [k for k in range(-4, 5) if -args.window <= k <= args.window]
    report["envelopes"] = [[k, *env.at(k)] for k in show]
    return report, _status(c)


def cmd_classify_measures(args):
    c = classify_measures(_measures(args), args.depth, args.margin)
    return {"verdict": _verdict(c)}, _status(c)


def cmd_classify_shift(args):
    if args.weights:
        w = parse_weights(args.weights, args.window)
    else:
        w = weights_from_measures(_measures(args), args.p)
    c = classify_shift(w, args.depth, args.margin)
    return {"verdict": _verdict(c)}, _status(c)


def cmd_shadow(args):
    w = parse_weights(args.weights, max(DEFAULT_WINDOW, 4 * args.window + 2 * args.support))
    T = SplitOperator.from_weights(w)
    if args.pseudo:
        points, delta, p = read_pseudo_archive(args.pseudo)
        lo, hi = min(points), max(points)
        pseudo = PseudoTrajectory(lo, hi, points, delta, T)
    else:
        rng = np.random.default_rng(args.noise_seed)
        x0 = LpVector(args.p, -args.support, rng.standard_normal(2 * args.support + 1))
        pseudo = make_pseudotrajectory(T, x0, args.delta, (-args.window, args.window),
                                       args.noise_seed + 1, args.support)
    if args.archive:
        write_pseudo_archive(args.archive, pseudo.points, pseudo.delta, pseudo.p)
    rep = shadow(T, pseudo, args.tail_tol)
    out = rep.to_dict()
    out["operator"] = T.describe()
    out["within_bound"] = rep.epsilon <= rep.bound + 2 * args.tail_tol
    return {"shadow": out, "constants": {"K_used": rep.K_used}}, EXIT_OK


def cmd_factor_check(args):
    sub, nu = _partition(args)
    dist = check_bounded_distortion(sub, nu)
    w = weights_from_measures(nu, args.p)
    rng = np.random.default_rng(args.noise_seed)
    N = sub.N
    worst_comm = worst_ratio = worst_iso = worst_trip = 0.0
    bound = dist.H ** (1.0 / args.p)
    for _ in range(args.samples):
        keys = {(int(rng.integers(-N + 1, N + 1)), int(rng.integers(len(sub.cells))))
                for _ in range(args.pieces)}
        phi = SimpleFunction({key: float(rng.standard_normal()) for key in keys}, sub, nu, args.p)
        nrm = phi.norm()
        worst_comm = max(worst_comm, check_commuting(phi, w) / nrm)
        worst_ratio = max(worst_ratio, project_pi(phi).norm() / nrm)
        x = LpVector(args.p, -N, rng.standard_normal(2 * N + 1))
        psi = selector(x, sub, nu)
        worst_iso = max(worst_iso, abs(psi.norm() - x.norm()) / x.norm())
        worst_trip = max(worst_trip, float(np.max(np.abs((project_pi(psi) - x).entries))))
    checks = {"commuting": worst_comm <= 1e-9, "pi_bound": worst_ratio <= bound * (1 + 1e-12),
              "selector_isometry": worst_iso <= 1e-12, "round_trip": worst_trip <= 1e-12}
    report = {
        "factor": {"max_commuting_residual": worst_comm, "max_pi_ratio": worst_ratio,
                   "pi_bound": bound, "max_isometry_error": worst_iso,
                   "max_round_trip_error": worst_trip, "checks": checks,
                   "passed": all(checks.values())},
        "constants": dist.to_dict(),
    }
    return report, EXIT_OK if all(checks.values()) else EXIT_ERROR


def cmd_membership(args):
    sub, nu = _partition(args)
    if args.function:
        spec = args.function
        if spec.lstrip().startswith("{"):
            spec = json.loads(spec)
        phi = read_simple_function(spec, sub, nu, args.p)
    elif args.indicator is not None:
        cell = sub.index(args.cell) if args.cell else None
        phi = SimpleFunction.indicator(args.indicator, sub, nu, args.p, cell)
    else:
        raise InvalidConfig("give --function or --indicator")
    wit = Witness(args.K, args.t)
    member = class_membership(phi, args.cls, wit, args.depth)
    need = required_constant(phi, args.cls, args.t, args.depth)
    return {"membership": {"class": args.cls, "K": args.K, "t": args.t, "member": member,
                           "required_K": need, "function": phi.to_dict()}}, EXIT_OK


COMMANDS = {
    "classify-density": cmd_classify_density,
    "classify-measures": cmd_classify_measures,
    "classify-shift": cmd_classify_shift,
    "shadow": cmd_shadow,
    "factor-check": cmd_factor_check,
    "membership": cmd_membership,
}


# -- output ---------------------------------------------------------------------------------

def _provenance(args) -> dict:
    opts = {k: v for k, v in sorted(vars(args).items())
            if k not in ("command", "config", "jobs", "output", "format")}
    return {"tool": "shadowlab", "version": __version__, "command": args.command, "options": opts}


def _csv_rows(report: dict) -> list[list]:
    if "verdict" in report:
        rows = [["condition", "n", "r_n"]]
        for name, est in report["verdict"].get("evidence", {}).items():
            rows.extend([name, n, r] for n, r in est["samples"])
        return rows
    if "shadow" in report:
        return [["n", "residual"]] + [list(r) for r in report["shadow"]["residuals"]]
    flat = report.get("factor") or report.get("membership") or {}
    return [["key", "value"]] + [[k, v] for k, v in flat.items() if not isinstance(v, dict)]


def render(report: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        return dumps(report) + "\n"
    if fmt_name == "csv":
        buf = _stdio.StringIO()
        for row in _csv_rows(report):
            buf.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
        return buf.getvalue()
    lines = []
    if "error" in report:
        e = report["error"]
        return f"error: {e['name']}: {e['message']}\nhint: {e['hint']}\n"
    if "verdict" in report:
        v = report["verdict"]
        lines.append(f"verdict: {v['kind']}")
        if v.get("stable_rate") is not None:
            lines.append(f"stable rate: {fmt(v['stable_rate'])}")
        if v.get("unstable_rate") is not None:
            lines.append(f"unstable rate: {fmt(v['unstable_rate'])}")
        if v.get("reason"):
            lines.append(f"reason: {v['reason']}")
        for name, est in v.get("evidence", {}).items():
            lines.append(f"  {name:<11} limit {fmt(est['limit'])}  exact={est['exact']}")
    if "shadow" in report:
        s = report["shadow"]
        lines.append(f"epsilon: {fmt(s['epsilon'])}  (bound K*delta = {fmt(s['certified_bound'])},"
                     f" K = {fmt(s['K_used'])})")
    for key in ("factor", "membership"):
        if key in report:
            lines.extend(f"{k}: {v}" for k, v in report[key].items() if not isinstance(v, dict))
    for k, v in report.get("constants", {}).items():
        lines.append(f"{k}: {fmt(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def _error_report(exc: Exception) -> dict:
    hint = getattr(exc, "hint", InvalidConfig.hint)
    return {"name": type(exc).__name__, "message": str(exc), "hint": hint}


def run(args) -> tuple[dict, int]:
    """Dispatch one parsed job; returns (report, exit status)."""
    try:
        body, status = COMMANDS[args.command](args)
    except (ShadowlabError, ValueError, OSError) as exc:
        body, status = {"error": _error_report(exc)}, EXIT_ERROR
    report = {"schema": SCHEMA}
    report.update(body)
    report["provenance"] = _provenance(args)
    return report, status


# -- configs ----------------------------------------------------------------------------------

def _argv_from_config(cfg: dict) -> list[str]:
    cfg = dict(cfg)
    command = cfg.pop("command", None)
    if command not in COMMANDS:
        raise InvalidConfig(f"config needs a command, one of {', '.join(COMMANDS)}")
    argv = [command]
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        elif isinstance(value, (dict, list)):
            argv += [flag, json.dumps(value)]
        else:
            argv += [flag, str(value)]
    return argv


def _parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise InvalidConfig(f"invalid arguments: {' '.join(argv)}") from None
    return args


def _run_config(cfg: dict) -> tuple[str, int, str]:
    try:
        args = _parse(_argv_from_config(cfg))
    except InvalidConfig as exc:
        report = {"schema": SCHEMA, "error": _error_report(exc), "provenance": {"config": cfg}}
        return dumps(report), EXIT_ERROR, "json"
    report, status = run(args)
    return dumps(report), status, args.format


def _sweep(configs: list, jobs: int) -> tuple[str, int]:
    with concurrent.futures.ProcessPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(_run_config, configs))
    body = "[\n" + ",\n".join(text for text, _, _ in results) + "\n]\n"
    codes = [code for _, code, _ in results]
    status = EXIT_ERROR if EXIT_ERROR in codes else (EXIT_INCONCLUSIVE if EXIT_INCONCLUSIVE in codes else EXIT_OK)
    return body, status


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("--jobs", type=int, default=1)
    known, rest = pre.parse_known_args(argv)
    try:
        if known.config:
            data = json.loads(Path(known.config).read_text())
            if isinstance(data, list):
                text, status = _sweep(data, known.jobs)
                _emit(text, None)
                return status
            if rest:
                data = dict(data)
                data["command"] = rest[0] if rest[0] in COMMANDS else data.get("command")
                args = _parse(_argv_from_config(data) + [a for a in rest if a not in COMMANDS])
            else:
                args = _parse(_argv_from_config(data))
        else:
            args = _parse(rest)
    except (InvalidConfig, OSError, json.JSONDecodeError) as exc:
        err = _error_report(exc)
        sys.stderr.write(f"error: {err['name']}: {err['message']}\nhint: {err['hint']}\n")
        return EXIT_ERROR
    if args.command is None:
        build_parser().print_help(sys.stderr)
        return EXIT_ERROR
    report, status = run(args)
    if "error" in report:
        e = report["error"]
        sys.stderr.write(f"error: {e['name']}: {e['message']}\nhint: {e['hint']}\n")
    _emit(render(report, args.format), args.output)
    return status


if __name__ == "__main__":
    sys.exit(main())
