"""Command-line front end.

Subcommands: solve, construct, scan, verify, whisper.  All file output is
written atomically (temp file + rename) with 17-significant-digit floats so
identical runs produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import assembly, evaluate, green, stability
from .problem import (ProblemSpec, construct_localisation_example,
                      construct_stable_example)

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_VALIDATION = 2
EXIT_NEAR_RESONANT = 3

_RESIDUAL_TOL = 1e-9


def _fmt(x: float) -> float:
    # round-trippable decimal with a fixed significand width
    return float(f"{x:.17g}")


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-helmrad-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_spec(arg: str) -> ProblemSpec:
    text = arg
    if os.path.exists(arg):
        with open(arg) as fh:
            text = fh.read()
    return ProblemSpec.from_json(text)


def _json_dumps(doc) -> str:
    def default(x):
        if isinstance(x, (np.floating, np.integer)):
            return x.item()
        raise TypeError(type(x))
    return json.dumps(doc, indent=2, default=default) + "\n"


def cmd_solve(args) -> int:
    try:
        spec = _load_spec(args.input)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: invalid problem description: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    os.makedirs(args.output_dir, exist_ok=True)
    try:
        column = green.green_last_column(spec)
    except green.NearResonantDenominator as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEAR_RESONANT
    sol = evaluate.RadialSolution(
        spec=spec, coeffs=green.layer_coefficients(spec, column))
    report = evaluate.diagnostics(sol, quad_order=args.quad_order)
    report.max_green_magnitude = column.max_abs()

    out = os.path.join
    evaluate.write_radial_csv(sol, out(args.output_dir, "radial.csv"))
    if spec.dimension == 3 and spec.mode == 0:
        evaluate.write_disc_csv(sol, out(args.output_dir, "disc.csv"),
                                grid=args.grid)
    green_doc = {
        "odd": [[_fmt(v.real), _fmt(v.imag)] for v in column.odd_entries],
        "even": [[_fmt(v.real), _fmt(v.imag)] for v in column.even_entries],
        "odd_log_magnitude": [_fmt(v) for v in column.odd_log_mag],
        "even_log_magnitude": [_fmt(v) if math.isfinite(v) else None
                               for v in column.even_log_mag],
    }
    _atomic_write(out(args.output_dir, "green_column.json"),
                  _json_dumps(green_doc))
    _atomic_write(out(args.output_dir, "diagnostics.json"),
                  _json_dumps(report.to_dict()))
    if not report.passes(_RESIDUAL_TOL):
        print("residual thresholds exceeded", file=sys.stderr)
        return EXIT_SUITE_FAILED
    return EXIT_OK


def cmd_construct(args) -> int:
    try:
        if args.kind == "localised":
            spec = construct_localisation_example(args.n, args.c1, args.c2)
        else:
            spec = construct_stable_example(args.n, args.c1, args.c2)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    sys.stdout.write(_json_dumps(spec.to_dict()))
    return EXIT_OK


def _scan_sample(base: ProblemSpec, rng_seed: int, jitter: float):
    rng = np.random.default_rng(rng_seed)
    omega = base.omega * (1.0 + jitter * (2.0 * rng.random() - 1.0))
    x = list(base.profile.jump_points)
    if jitter > 0.0 and base.n >= 1:
        j = int(rng.integers(1, base.n + 1))
        lo, hi = x[j - 1], x[j + 1]
        width = hi - lo
        x[j] = min(max(x[j] + jitter * width * (2.0 * rng.random() - 1.0),
                       lo + 1e-9 * width), hi - 1e-9 * width)
    spec = ProblemSpec(
        profile=type(base.profile)(tuple(x), base.profile.speeds),
        dimension=base.dimension, mode=base.mode, omega=omega,
        boundary_coefficient=base.boundary_coefficient)
    column = green.green_last_column(spec)
    sol = evaluate.RadialSolution(
        spec=spec, coeffs=green.layer_coefficients(spec, column))
    sup = evaluate.sup_scaled(sol) if (spec.dimension == 3
                                       and spec.mode == 0) \
        else evaluate.sup_radial(sol)
    return omega, sup, column.max_abs()


def cmd_scan(args) -> int:
    try:
        base = _load_spec(args.input)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: invalid problem description: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    os.makedirs(args.output_dir, exist_ok=True)
    seeds = [(args.seed, 0.0)] + [
        (args.seed + 1 + k, args.jitter) for k in range(args.samples)]
    workers = int(os.environ.get("HELM_THREADS", "0")) or None
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda sj: _scan_sample(base, *sj), seeds))
    lines = ["seed,jitter,omega,sup_norm,max_green_magnitude"]
    for (seed, jit), (omega, sup, mg) in zip(seeds, rows):
        lines.append(f"{seed},{jit:.17g},{omega:.17g},{sup:.17g},{mg:.17g}")
    _atomic_write(os.path.join(args.output_dir, "scan.csv"),
                  "\n".join(lines) + "\n")
    return EXIT_OK


def _suite_oracle(rng) -> list:
    results = []
    for k in range(200):
        spec = _random_spec(rng)
        direct, _ = assembly.solve_spec(spec)
        rec = green.layer_coefficients(spec)
        scale = max(np.max(np.abs(direct.entries)),
                    np.max(np.abs(rec.entries)))
        err = np.max(np.abs(direct.entries - rec.entries)) / scale
        results.append({"case": k, "max_relative_error": _fmt(float(err)),
                        "ok": bool(err <= 1e-9)})
    return results


def _random_spec(rng, n_max: int = 20) -> ProblemSpec:
    from .problem import WaveSpeedProfile
    d = int(rng.choice([1, 3]))
    m = int(rng.integers(0, 6)) if d == 3 else 0
    n = int(rng.integers(1, n_max + 1))
    cuts = np.sort(rng.uniform(0.02, 0.98, size=n))
    x = (0.0, *map(float, cuts), 1.0)
    c = tuple(float(v) for v in rng.uniform(0.5, 4.0, size=n + 1))
    omega = float(rng.uniform(1.0, 50.0))
    return ProblemSpec(WaveSpeedProfile(x, c), dimension=d, mode=m,
                       omega=omega, boundary_coefficient=1.0 + 0.0j)


def _suite_bounds(rng) -> list:
    results = []
    for k in range(500):
        spec = _random_alternating(rng)
        rep = stability.certify_beta_bounds(spec)
        results.append({"case": k, "per_step_ok": rep.per_step_ok,
                        "majorant_ok": rep.majorant_ok,
                        "ok": rep.per_step_ok and rep.majorant_ok})
    return results


def _random_alternating(rng) -> ProblemSpec:
    from .problem import WaveSpeedProfile
    n = int(rng.integers(1, 41))
    q = float(rng.uniform(-0.8, 0.8))
    c1 = 1.0
    c2 = c1 * (1.0 + q) / (1.0 - q)
    speeds = tuple(c1 if j % 2 == 0 else c2 for j in range(n + 1))
    cuts = np.sort(rng.uniform(0.02, 0.98, size=n))
    x = (0.0, *map(float, cuts), 1.0)
    omega = float(rng.uniform(1.0, 60.0))
    return ProblemSpec(WaveSpeedProfile(x, speeds), dimension=3, mode=0,
                       omega=omega, boundary_coefficient=1.0 + 0.0j)


def _suite_figures() -> list:
    targets = {2: (0.85, 0.10), 4: (2.5, 0.10), 8: (22.0, 0.10),
               16: (1850.0, 0.15)}
    results = []
    for n, (target, tol) in targets.items():
        spec = construct_localisation_example(n, 1.0, 3.0)
        sol = evaluate.solve(spec)
        sup = evaluate.sup_scaled(sol)
        ok = abs(sup - target) <= tol * target
        results.append({"n": n, "sup": _fmt(sup), "target": target,
                        "ok": bool(ok)})
    return results


def _suite_specfun() -> list:
    from .specfun import (spherical_bessel_j, spherical_hankel_h1,
                          FundamentalPair, fundamental_eval)
    results = []
    xs = np.linspace(0.05, 100.0, 257)
    err = max(abs(x * abs(spherical_hankel_h1(0, x)) - 1.0) for x in xs)
    results.append({"check": "unit_outgoing_modulus",
                    "max_error": _fmt(err), "ok": bool(err <= 1e-13)})
    pair = FundamentalPair(3, 0)
    err = 0.0
    for x in xs:
        _, dh = fundamental_eval(pair, 1, float(x))
        target = 1.0 / x ** 2 + 1.0 / x ** 4
        err = max(err, abs(abs(dh) ** 2 - target) / target)
    results.append({"check": "outgoing_derivative_modulus",
                    "max_relative_error": _fmt(err), "ok": bool(err <= 1e-12)})
    err = max(abs(x * spherical_bessel_j(0, x)) - 2 * x / (1 + x)
              for x in xs)
    results.append({"check": "regular_branch_bound", "ok": bool(err <= 0.0)})
    return results


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    suites = {
        "oracle": lambda: _suite_oracle(rng),
        "bounds": lambda: _suite_bounds(rng),
        "figures": _suite_figures,
        "specfun": _suite_specfun,
    }
    results = suites[args.suite]()
    ok = all(r["ok"] for r in results)
    doc = {"suite": args.suite, "ok": ok, "results": results}
    sys.stdout.write(_json_dumps(doc))
    return EXIT_OK if ok else EXIT_SUITE_FAILED


def cmd_whisper(args) -> int:
    try:
        res = stability.whispering_gallery_scan(
            args.m, args.c1, args.c2, args.x1,
            tuple(args.omega_window), samples=args.samples)
    except (ValueError, stability.WindowTooCoarse) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    doc = {
        "omega_star": _fmt(res.omega_star),
        "min_wronskian_modulus": _fmt(res.min_wronskian),
        "a2": [_fmt(res.a2.real), _fmt(res.a2.imag)],
        "b1": [_fmt(res.b1.real), _fmt(res.b1.imag)],
        "b2": [_fmt(res.b2.real), _fmt(res.b2.imag)],
    }
    sys.stdout.write(_json_dumps(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="helmrad",
        description="Layered radial wave transmission solver")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one problem and emit data files")
    s.add_argument("--input", required=True,
                   help="path to, or inline, problem JSON")
    s.add_argument("--output-dir", default=".")
    s.add_argument("--grid", type=int, default=64)
    s.add_argument("--quad-order", type=int, default=32)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("construct", help="emit a constructed example spec")
    c.add_argument("--kind", choices=["localised", "stable"], required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--c1", type=float, required=True)
    c.add_argument("--c2", type=float, required=True)
    c.set_defaults(func=cmd_construct)

    sc = sub.add_parser("scan", help="perturbation sweep around a base spec")
    sc.add_argument("--input", required=True)
    sc.add_argument("--output-dir", default=".")
    sc.add_argument("--seed", type=int, required=True)
    sc.add_argument("--samples", type=int, default=100)
    sc.add_argument("--jitter", type=float, default=0.01)
    sc.set_defaults(func=cmd_scan)

    v = sub.add_parser("verify", help="run a named acceptance suite")
    v.add_argument("--suite", choices=["oracle", "bounds", "figures",
                                       "specfun"], required=True)
    v.add_argument("--seed", type=int, default=20260823)
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("whisper", help="single-interface resonance scan")
    w.add_argument("--m", type=int, required=True)
    w.add_argument("--c1", type=float, required=True)
    w.add_argument("--c2", type=float, required=True)
    w.add_argument("--x1", type=float, required=True)
    w.add_argument("--omega-window", type=float, nargs=2, required=True)
    w.add_argument("--samples", type=int, default=400)
    w.set_defaults(func=cmd_whisper)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
