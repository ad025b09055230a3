"""Command-line front end.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 some result is
inconclusive, 64 usage error.  Every output embeds the full run config.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__, cohomology, integrate, modelspace, morse, szego
from .kernels import BACKEND
from .manifold import CircleBundleModel, HypersurfaceModel, parse_model

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64

MODELS = [
    ("sphere", "round unit sphere in C^2, standard circle action"),
    ("sphere:w=1,2", "unit sphere with weighted action (1, 2)"),
    ("ellipsoid", "quartic ellipsoid |z1|^4 + |z2|^2 = 1 with weights (1, 2)"),
    ("bundle:d=1,c=0", "circle bundle of O(1) with Fubini-Study weight"),
    ("bundle:d=1,c=3", "circle bundle of O(1), weight perturbed by 3 psi"),
]


class UsageError(Exception):
    printed = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        exc = UsageError(message)
        exc.printed = True
        raise exc


def parse_mrange(s: str) -> list:
    """'a..b' (inclusive), 'a,b,c', or a single integer."""
    try:
        if ".." in s:
            a, b = s.split("..")
            a, b = int(a), int(b)
            if b < a:
                raise ValueError
            return list(range(a, b + 1))
        return [int(float(x)) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad m range {s!r}") from None


def parse_samples(s: str) -> int:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sample count {s!r}") from None
    if not v >= 1 or v != int(v):
        raise argparse.ArgumentTypeError(f"bad sample count {s!r}")
    return int(v)


def parse_floats(s: str) -> list:
    try:
        return [float(x) for x in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crmorse", description="Szego kernels and Morse inequalities on CR manifolds with circle action.")
    p.add_argument("--version", action="version", version=f"crmorse {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, m=True):
        sp.add_argument("--model", required=True, help="sphere, sphere:w=1,2, ellipsoid, bundle:d=1,c=3")
        if m:
            sp.add_argument("--m", type=parse_mrange, default=None, help="m values: a..b or a,b,c")
        sp.add_argument("--out", help="write the JSON result here (default stdout)")

    sub.add_parser("models", help="list the built-in model specs").add_argument("--out")

    sp = sub.add_parser("dims", help="exact dim H^q_{b,m} table (CSV)")
    common(sp)
    sp.add_argument("--q", type=lambda s: [int(x) for x in s.split(",")], default=None)
    sp.add_argument("--csv", help="CSV path (default stdout)")

    sp = sub.add_parser("integrate", help="Monte Carlo stratum integrals (CSV)")
    common(sp, m=False)
    sp.add_argument("--samples", type=parse_samples, default=10 ** 6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--csv", help="CSV path (default stdout)")

    sp = sub.add_parser("szego", help="scaled Szego kernel values (CSV)")
    common(sp)
    sp.add_argument("--no-error-bars", action="store_true")
    sp.add_argument("--csv", help="CSV path (default stdout)")

    sp = sub.add_parser("model-space", help="flat model density and extremal form (JSON)")
    sp.add_argument("--lambdas", type=parse_floats, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--bruteforce", action="store_true", help="also run the spectral oracle")
    sp.add_argument("--max-degree", type=int, default=8)
    sp.add_argument("--out")

    sp = sub.add_parser("scaling", help="weight gap and operator residual in a canonical chart (JSON)")
    common(sp)
    sp.add_argument("--anchor", choices=["regular", "origin", "exceptional0"], default="regular")
    sp.add_argument("--q", type=int, default=0)

    sp = sub.add_parser("verify", help="Morse report with pass/fail verdicts (JSON)")
    common(sp, m=False)
    sp.add_argument("--m-max", type=int, default=None)
    sp.add_argument("--m-min", type=int, default=None)
    sp.add_argument("--samples", type=parse_samples, default=10 ** 6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None)
    return p


def _write(path, text: str):
    if path:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "csv")}
    if cfg.get("m") is not None:
        ms = cfg["m"]
        cfg["m"] = ms if len(ms) < 16 else f"{ms[0]}..{ms[-1]}"
    if "workers" in cfg and cfg["workers"] is None:
        cfg["workers"] = integrate.default_workers()
    cfg["version"] = __version__
    cfg["backend"] = BACKEND
    return cfg


def _csv_header(cfg: dict) -> str:
    out = []
    for k, v in cfg.items():
        if isinstance(v, (list, tuple)):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, float):
            v = "%.17g" % v
        out.append(f"# {k}={v}\n")
    return "".join(out)


def _model(args):
    try:
        return parse_model(args.model)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_models(args) -> int:
    items = []
    for spec, desc in MODELS:
        mdl = parse_model(spec)
        items.append({"spec": spec, "description": desc, "descriptor": mdl.descriptor()})
    _write(args.out, morse.dumps({"config": _config(args), "models": items}) + "\n")
    return EXIT_PASS


def cmd_dims(args) -> int:
    model = _model(args)
    ms = args.m if args.m is not None else list(range(0, 21))
    qs = args.q if args.q is not None else list(range(model.n))
    tab = cohomology.dims_table(model, ms, qs)
    _write(args.csv, _csv_header(_config(args)) + tab.to_csv())
    sup = [q for q in qs if all(tab.get(q, m) is not None for m in ms)]
    if isinstance(model, CircleBundleModel) and sup == list(range(model.n)) and len(ms) >= 8:
        chi = sum((-1) ** q * tab.series(q, ms) for q in sup)
        fit = morse.fit_leading(ms, chi, model.n)
        sys.stderr.write(f"euler_slope={fit.c:.17g} residual={fit.residual:.17g}\n")
    return EXIT_PASS


def cmd_integrate(args) -> int:
    model = _model(args)
    ests = integrate.stratum_integrals(model, args.samples, args.seed, args.workers)
    rows = [(model.name, q, e) for q, e in enumerate(ests)]
    _write(args.csv, _csv_header(_config(args)) + integrate.to_csv(rows))
    return EXIT_INCONCLUSIVE if any(e.inconclusive for e in ests) else EXIT_PASS


def cmd_szego(args) -> int:
    model = _model(args)
    ms = [m for m in (args.m if args.m is not None else list(range(1, 21))) if m >= 1]
    if not ms:
        raise UsageError("szego needs m >= 1")
    prof = szego.szego_profile(model, ms, error_bars=not args.no_error_bars)
    _write(args.csv, _csv_header(_config(args)) + prof.to_csv())
    return EXIT_PASS


def cmd_model_space(args) -> int:
    try:
        params = modelspace.ModelParams(tuple(args.lambdas), args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = {"config": _config(args), "model_density": modelspace.model_density(params),
           "signature": params.signature}
    if params.signature == params.q:
        norm, center = modelspace.extremal_checks(params)
        J, _ = modelspace.extremal_form_eval(params, np.zeros(params.dim))
        res["extremal"] = {"J": list(J), "norm2": norm, "center_value": center}
    if args.bruteforce:
        val, info = modelspace.density_bruteforce(params, args.max_degree, return_info=True)
        res["bruteforce"] = {"value": val, **info}
    _write(args.out, morse.dumps(res) + "\n")
    return EXIT_PASS


def _anchor(model, which):
    if which == "origin":
        if not isinstance(model, CircleBundleModel):
            raise UsageError("anchor 'origin' applies to circle bundles")
        return model.make_points(0.0, 0.0)[0]
    if which == "exceptional0":
        exc = model.exceptional_points()
        if not exc:
            raise UsageError("model has no exceptional orbit")
        return exc[0]
    return model.regular_probe()


def cmd_scaling(args) -> int:
    model = _model(args)
    ms = args.m if args.m is not None else [10 ** k for k in range(2, 7)]
    try:
        chart = model.brt_chart(_anchor(model, args.anchor))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows, inconc = [], False
    for m in ms:
        row = {"m": m}
        try:
            row["weight_gap"] = modelspace.weight_gap(chart, m)
            if chart.dim == 1:
                r = modelspace.operator_residual(chart, m, args.q)
                row.update(operator_residual=r.residual, fd_error=r.fd_error, inconclusive=r.inconclusive)
                inconc |= r.inconclusive
        except ValueError as exc:
            row["error"] = str(exc)
        rows.append(row)
    res = {"config": _config(args), "chart": {"lambdas": list(chart.lambdas), "eps": chart.eps,
                                              "period": chart.k}, "rows": rows}
    _write(args.out, morse.dumps(res) + "\n")
    return EXIT_INCONCLUSIVE if inconc else EXIT_PASS


def cmd_verify(args) -> int:
    model = _model(args)
    if isinstance(model, HypersurfaceModel):
        m_max, m_min = args.m_max or 500, args.m_min or 1
    else:
        m_max, m_min = args.m_max or 200, args.m_min or 20
    if m_max - m_min + 1 < 8 or m_min < 0:
        raise UsageError("need an m-range with at least 8 values")
    args.m_max, args.m_min = m_max, m_min
    rep = morse.build_report(model, m_max, args.samples, args.seed, m_min=m_min, workers=args.workers)
    doc = {"config": _config(args)}
    doc.update(rep.to_dict())
    _write(args.out, morse.dumps(doc) + "\n")
    return {morse.PASS: EXIT_PASS, morse.FAIL: EXIT_FAIL,
            morse.INCONCLUSIVE: EXIT_INCONCLUSIVE}[rep.status]


COMMANDS = {
    "models": cmd_models, "dims": cmd_dims, "integrate": cmd_integrate, "szego": cmd_szego,
    "model-space": cmd_model_space, "scaling": cmd_scaling, "verify": cmd_verify,
}


_VALUE_OPTS = ("--m", "--lambdas")


def _glue_negative(argv):
    """'--m -10..10' -> '--m=-10..10' so argparse does not read the value as a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_OPTS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and nxt[1:2].isdigit():
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        if not exc.printed:
            sys.stderr.write(f"crmorse: error: {exc}\n")
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
