"""Command-line front end: ``cvmw weights|spectrum|transform|bound|gkp-approx``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 outside a
validity window. CVMW_THREADS caps the BLAS/OpenMP thread pools.
"""
from __future__ import annotations

import os

_threads = os.environ.get("CVMW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402

import numpy as np  # noqa: E402

from . import _io  # noqa: E402
from .errors import CVMWError, NumericalError, ValidationError, ValidityWindowError  # noqa: E402

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_VALIDITY = 0, 2, 3, 4


def _grid(args) -> np.ndarray:
    if args.points < 2 or not args.rmax > args.rmin >= 0:
        raise ValidationError("need 0 <= rmin < rmax and at least 2 points")
    return np.linspace(args.rmin, args.rmax, args.points)


def _emit(text: str, path: str | None) -> None:
    if path:
        _io.atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _manifest(args, **tolerances) -> _io.RunManifest:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "output", "deterministic", "command")}
    return _io.RunManifest(args.command, params, tolerances, deterministic=args.deterministic)


def _merge_deltas(A, B) -> list[tuple[float, float, float]]:
    locs = np.union1d(A.locations, B.locations)
    return [(x, A.mass_at(x), B.mass_at(x)) for x in locs]


def cmd_weights(args) -> int:
    from .lattice import catalog
    from .weights import analytic_weights

    start = time.perf_counter()
    r = _grid(args)
    kind, _, arg = args.model.partition(":")
    if kind == "gkp":
        L = catalog(arg or "square")
        A, B = analytic_weights(("gkp", L, args.comb_rmax or args.rmax))
        deltas = _merge_deltas(A, B)
        zeros = np.zeros_like(r)
        a_vals, b_vals = zeros, zeros
    else:
        A, B = analytic_weights(args.model)
        a_vals, b_vals, deltas = A.density(r), B.density(r), None
    man = _manifest(args)
    man.elapsed = time.perf_counter() - start
    _emit(_io.weights_text(r, a_vals, b_vals, deltas, man), args.output)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .lattice import catalog, length_spectrum, load_lattice

    L = load_lattice(args.file) if args.file else catalog(args.lattice)
    spec = length_spectrum(L, args.rmax)
    _emit(_io.spectrum_text(spec.entries(), _manifest(args)), args.output)
    return EXIT_OK


def _decay_hint(text: str, r: np.ndarray):
    from .hankel import Compact, Gaussian, Polynomial

    kind, _, arg = text.partition(":")
    try:
        if kind == "gaussian":
            return Gaussian(float(arg or 1.0))
        if kind == "polynomial":
            return Polynomial(float(arg))
        if kind == "compact":
            return Compact(float(arg) if arg else float(r[-1]))
    except ValueError as exc:
        raise ValidationError(f"bad decay hint {text!r}") from exc
    raise ValidationError(f"unknown decay hint {text!r}")


def cmd_transform(args) -> int:
    from .hankel import RadialFunction, macwilliams_transform
    from .weights import WeightDistribution

    start = time.perf_counter()
    r, A, _, deltas = _io.read_weights(args.input)
    hint = _decay_hint(args.decay, r)
    cont = RadialFunction.sampled(r, A, hint, omega=args.omega, label="input")
    W = WeightDistribution(args.N, cont, [(loc, ma) for loc, ma, _ in deltas if ma != 0])
    out_r = np.linspace(args.rmin, args.rmax, args.points) if args.rmax else r
    B = macwilliams_transform(W, args.N, out_r)
    man = _manifest(args)
    man.elapsed = time.perf_counter() - start
    _emit(_io.table_text(["r", "value"], [out_r, B.density(out_r)], man), args.output)
    return EXIT_OK


def _print_record(record: dict) -> None:
    sys.stdout.write(json.dumps(record, indent=2, sort_keys=True, default=_io._jsonable) + "\n")


def _load_table(path: str, interpolation: str):
    from .bounds import AuxFunctionTable

    return AuxFunctionTable.from_csv(path, interpolation=interpolation)


def cmd_bound(args) -> int:
    from . import bounds

    if args.kind == "levenshtein":
        dp = bounds.d_plus(args.N)
        record = {"bound": "levenshtein", "N": args.N, "d": args.d, "eps": args.eps, "validity_bound": dp,
                  "validity_name": "d_plus"}
        try:
            record["K_max"] = bounds.levenshtein_bound(args.N, args.d, args.eps)
        except ValidityWindowError:
            record["K_max"] = None
            record["outside_validity"] = True
            _print_record(record)
            raise
        record["sup_at"] = 0.0
        _print_record(record)
        return EXIT_OK

    if args.kind == "cohn-elkies":
        if args.table:
            table = _load_table(args.table, args.interpolation)
            if args.family:
                table = bounds.magic_table_for_distance(table, args.family, args.d)
        else:
            table = bounds.levenshtein_table(args.N, args.d)
        res = bounds.cohn_elkies_search(table, args.N, args.d, args.eps, args.points)
        _print_record({"bound": "cohn-elkies", "N": args.N, "d": args.d, "eps": args.eps, "K_max": res.value,
                       "sup_at": res.at, "bracket": list(res.bracket), "table": table.label})
        return EXIT_OK

    # magic
    if not args.table:
        raise ValidationError("magic check needs --table")
    family = args.family or "e8"
    f_table = _load_table(args.table, args.interpolation)
    h_table = _load_table(args.fhat_table, args.interpolation) if args.fhat_table else None
    sup, at = bounds.magic_quotient_check(f_table, h_table, family, args.d, args.points)
    _, a, b, origin = bounds.MAGIC_FAMILIES[family]
    d_max = bounds.MAGIC_DMAX[family]
    exceeds = sup > origin * (1 + args.rtol)
    record = {"bound": "magic", "family": family, "d": args.d, "sup": sup, "sup_at": at, "origin_value": origin,
              "exceeds_origin": bool(exceeds), "validity_bound": d_max, "validity_name": "d_max"}
    if args.output:
        x = np.linspace(0.0, 1.0, args.points)
        ht = h_table or f_table
        q = f_table.f_at(a * x) / ht.fhat_at(args.d**2 * x / b)
        _io.atomic_write(args.output, _io.table_text(["x", "quotient"], [x, q], _manifest(args)))
    _print_record(record)
    if exceeds:
        raise ValidityWindowError(f"quotient exceeds {origin:.6g} at d={args.d} (d_max={d_max})", d_max)
    return EXIT_OK


def cmd_gkp_approx(args) -> int:
    from .gkp_approx import EnvelopeParams, approx_epsilon, approx_gkp_codespace, approx_weights, fit_log_slope
    from .lattice import catalog

    start = time.perf_counter()
    L = catalog(args.lattice)
    params = EnvelopeParams(args.delta)
    cs = approx_gkp_codespace(L, params)
    r = _grid(args)
    w = approx_weights(cs, r)
    res = approx_epsilon(L, params, args.margin, codespace=cs)
    record = {"lattice": args.lattice, "delta": args.delta, "margin": args.margin, "eps": res.eps,
              "argmax": res.argmax, "d": res.d, "distance": res.distance, "cutoff": cs.cutoff}
    if args.slope_deltas:
        deltas = [float(v) for v in args.slope_deltas.split(",")]
        eps = [approx_epsilon(L, EnvelopeParams(dv), args.margin).eps for dv in deltas]
        record["slope_fit"] = {"deltas": deltas, "eps": eps, "slope": fit_log_slope(deltas, eps),
                               "reference": -res.distance * args.margin / 8}
    meta = {"delta": args.delta, "margin": args.margin, "cutoff": cs.cutoff, "lattice_terms": cs.terms,
            "angular_nodes": w.nodes, "eps": res.eps}
    man = _manifest(args)
    man.elapsed = time.perf_counter() - start
    _emit(_io.weights_text(r, w.A, w.B, None, man, meta), args.output)
    if args.output:
        _print_record(record)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvmw", description="Weight distributions and bounds for bosonic codes.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True, rmax=6.0, points=601):
        sp.add_argument("-o", "--output", help="output path (stdout if omitted)")
        sp.add_argument("--deterministic", action="store_true", help="omit timestamp and timing from the manifest")
        if grid:
            sp.add_argument("--rmin", type=float, default=0.0)
            sp.add_argument("--rmax", type=float, default=rmax)
            sp.add_argument("--points", type=int, default=points)

    w = sub.add_parser("weights", help="closed-form A and B of a model")
    w.add_argument("--model", required=True, help="coherent | fock:n | cat:alpha | gkp:<lattice>")
    w.add_argument("--comb-rmax", type=float, help="truncation radius of a GKP comb (defaults to --rmax)")
    common(w)
    w.set_defaults(func=cmd_weights)

    s = sub.add_parser("spectrum", help="length spectrum of a catalog or file lattice")
    s.add_argument("--lattice", default="square")
    s.add_argument("--file", help="lattice text file (overrides --lattice)")
    s.add_argument("--rmax", type=float, default=8.0)
    common(s, grid=False)
    s.set_defaults(func=cmd_spectrum)

    t = sub.add_parser("transform", help="MacWilliams transform of a sampled distribution")
    t.add_argument("-i", "--input", required=True)
    t.add_argument("-N", type=float, default=1.0)
    t.add_argument("--decay", default="gaussian:1", help="gaussian[:scale] | polynomial:p | compact[:radius]")
    t.add_argument("--omega", type=float, default=0.0, help="oscillation frequency of the input")
    common(t, rmax=0.0)
    t.set_defaults(func=cmd_transform)

    b = sub.add_parser("bound", help="code-size bounds")
    b.add_argument("kind", choices=["levenshtein", "cohn-elkies", "magic"])
    b.add_argument("-N", type=float, default=1.0)
    b.add_argument("-d", type=float, required=True)
    b.add_argument("--eps", type=float, default=0.0)
    b.add_argument("--table", help="auxiliary function CSV (x,f,fhat)")
    b.add_argument("--fhat-table", help="separate CSV for hat f (magic check)")
    b.add_argument("--family", choices=["e8", "leech"])
    b.add_argument("--interpolation", choices=["cubic", "linear"], default="cubic")
    b.add_argument("--points", type=int, default=4096)
    b.add_argument("--rtol", type=float, default=1e-4, help="slack when comparing the quotient with its origin value")
    b.add_argument("-o", "--output", help="quotient curve CSV (magic only)")
    b.add_argument("--deterministic", action="store_true")
    b.set_defaults(func=cmd_bound)

    g = sub.add_parser("gkp-approx", help="finite-energy GKP weights and eps")
    g.add_argument("--lattice", default="square")
    g.add_argument("--delta", type=float, required=True)
    g.add_argument("--margin", type=float, required=True)
    g.add_argument("--slope-deltas", help="comma-separated deltas for a log eps vs 1/delta^2 fit")
    common(g, rmax=4.0, points=201)
    g.set_defaults(func=cmd_gkp_approx)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidityWindowError as exc:
        print(f"cvmw: {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except ValidationError as exc:
        print(f"cvmw: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"cvmw: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CVMWError as exc:
        print(f"cvmw: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cvmw: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
