"""Command-line entry point.

Exit status: 0 on success, 1 when a verification fails, 2 for usage,
configuration or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from fractions import Fraction
from typing import Sequence

from .arith import ConfigError, format_rational, make_config, parse_rational
from .cofree import (
    UElement,
    alpha,
    beta,
    beta_preimage,
    gamma,
    verify_exact_sequence,
)
from .modules import (
    ModuleValidationError,
    NotDiscreteError,
    adams_action,
    annihilation_exponent,
    apply_operation,
    bousfield_check,
    coaction,
    element_to_json,
    generate_corpus,
    hom_A,
    module_from_json,
)
from .opring import (
    AbcongError,
    OperationPoly,
    PhiVector,
    TruncationMismatch,
    adams_expansion,
    check_abcongs,
    divide_phi,
    is_unit,
    multiply,
    poly_coefficients_in_phi,
    solve_abcongs,
    structure_constant,
    verify_identity,
)

PRIME_ENV = "KDISCRETE_PRIME"

DEFAULTS = {
    "p": 3,
    "q": None,
    "variant": "nonsplit",
    "trunc": 12,
    "format": "json",
    "seed": 0,
    "n_max": 48,
    "size": 50,
}


class UsageError(Exception):
    pass


def _rationals(text: str) -> list[Fraction]:
    text = text.strip()
    if text.startswith("["):
        return [parse_rational(x) for x in json.loads(text)]
    return [parse_rational(x) for x in text.split(",") if x.strip()]


def _load_json_arg(text: str):
    """Inline JSON or a path to a JSON file."""
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    return json.loads(text)


def _settings(args: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS)
    env_p = os.environ.get(PRIME_ENV)
    if env_p:
        merged["p"] = int(env_p)
    if args.config:
        try:
            with open(args.config) as fh:
                merged.update({k.replace("-", "_"): v for k, v in json.load(fh).items()})
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _config(settings: dict):
    return make_config(int(settings["p"]), settings["q"], settings["variant"], int(settings["trunc"]))


def _config_json(settings: dict, cfg) -> dict:
    return {"p": cfg.p, "q": cfg.q, "variant": cfg.variant.value, "truncation": cfg.N, "seed": settings["seed"]}


def _emit(payload: dict, fmt: str, out, rows: list[list] | None = None, header: list[str] | None = None):
    if fmt == "json":
        out.write(json.dumps(payload, indent=2) + "\n")
    elif fmt == "csv":
        if rows is None:
            raise UsageError("csv output is only available for tabular commands")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        for key, val in payload.items():
            if key == "config":
                continue
            out.write(f"{key}: {val if not isinstance(val, (dict, list)) else json.dumps(val)}\n")


def _module_arg(path: str, cfg):
    """Load a module file; a file without its own prime uses the command-line ring."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        return module_from_json(data, None if "p" in data else cfg)
    except FileNotFoundError as exc:
        raise UsageError(f"no such module file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed module file {path}: {exc}") from exc
    except (KeyError, TypeError, AttributeError) as exc:
        raise UsageError(f"module file {path} lacks a valid field: {exc}") from exc


# -- commands ---------------------------------------------------------------


def cmd_ring(args, settings, cfg, out) -> int:
    N = cfg.N
    conf = _config_json(settings, cfg)
    if args.action == "mul":
        a = PhiVector(tuple(_pad(_rationals(args.a), N)), cfg)
        b = PhiVector(tuple(_pad(_rationals(args.b), N)), cfg)
        c = multiply(a, b)
        rows = [[i, format_rational(x)] for i, x in enumerate(c.coeffs)]
        _emit({**c.to_json(), "config": conf}, settings["format"], out, rows, ["k", "value"])
    elif args.action == "adams":
        if args.j is None:
            raise UsageError("ring adams needs --j")
        g = adams_expansion(parse_rational(args.j), N, cfg)
        rows = [[i, format_rational(x)] for i, x in enumerate(g.coeffs)]
        _emit({**g.to_json(), "j": args.j, "config": conf}, settings["format"], out, rows, ["i", "value"])
    elif args.action == "constants":
        bound = args.bound if args.bound is not None else N
        rows = []
        for j in range(bound + 1):
            for n in range(bound + 1):
                for k in range(max(j, n), j + n + 1):
                    rows.append([j, n, k, format_rational(structure_constant(j, n, k, cfg))])
        payload = {"constants": [dict(zip(("j", "n", "k", "value"), r)) for r in rows], "config": conf}
        _emit(payload, settings["format"], out, rows, ["j", "n", "k", "value"])
    elif args.action == "divide":
        if args.n is None or args.m is None:
            raise UsageError("ring divide needs --n and --m")
        quot = divide_phi(args.n, args.m, cfg)
        coeffs = poly_coefficients_in_phi(quot, cfg)
        rows = [[i, format_rational(x)] for i, x in enumerate(coeffs)]
        payload = {
            "n": args.n,
            "m": args.m,
            "phi_coeffs": [format_rational(x) for x in coeffs],
            "poly_coeffs": [format_rational(x) for x in quot.coeffs],
            "config": conf,
        }
        _emit(payload, settings["format"], out, rows, ["k", "value"])
    elif args.action == "unit":
        if args.poly is None:
            raise UsageError("ring unit needs --poly")
        f = OperationPoly(tuple(_rationals(args.poly)))
        if not f.is_plocal(cfg.p):
            raise UsageError("polynomial coefficients must be p-local")
        _emit({"unit": is_unit(f, cfg), "config": conf}, settings["format"], out)
    return 0


def _pad(v: list[Fraction], N: int) -> list[Fraction]:
    if len(v) > N:
        raise UsageError(f"{len(v)} coefficients exceed truncation {N}")
    return v + [Fraction(0)] * (N - len(v))


def cmd_verify(args, settings, cfg, out) -> int:
    conf = _config_json(settings, cfg)
    if args.action == "abcongs":
        rng = random.Random(settings["seed"])
        n = args.n or 1
        K = n + 2 * cfg.period
        samples = args.samples
        results = []
        ok_all = True
        for _ in range(samples):
            a = {k: rng.randrange(cfg.p) for k in range(n, K + 1)}
            try:
                sol = solve_abcongs(a, n, cfg)
                ok = check_abcongs(sol, a, cfg)
            except AbcongError as exc:
                ok, sol = False, None
                results.append({"passed": False, "error": str(exc)})
                ok_all = False
                continue
            ok_all &= ok
            results.append({"passed": ok, "determined": len(sol.residues), "rank": sol.rank})
        payload = {"kind": "abcongs", "passed": ok_all, "n": n, "window": K, "samples": results, "config": conf}
        _emit(payload, settings["format"], out)
        return 0 if ok_all else 1
    kind = {"ccong": "ccong", "phiquot": "phi_quotient", "thetapower": "theta_power", "symmetry": "symmetry"}[args.action]
    params = {}
    if args.action == "ccong":
        params = {"s_max": args.s_max, "n_max": args.n_max_id}
    elif args.action == "phiquot":
        params = {"n_max": args.n_max_id or 28}
    elif args.action == "thetapower":
        params = {"k": args.k}
    elif args.action == "symmetry":
        params = {"bound": args.bound if args.bound is not None else 10}
    params = {k: v for k, v in params.items() if v is not None}
    report = verify_identity(kind, params, cfg)
    payload = report.to_json()
    if args.action == "thetapower":
        qb = verify_identity("qbinomial", params, cfg)
        payload["qbinomial"] = qb.to_json()
        payload["passed"] = report.passed and qb.passed
        payload["detail"] = report.instances[0].detail
    payload["config"] = conf
    _emit(payload, settings["format"], out)
    return 0 if payload["passed"] else 1


def cmd_module(args, settings, cfg, out) -> int:
    M = _module_arg(args.file, cfg)
    conf = _config_json(settings, M.cfg)
    n_max = int(settings["n_max"])
    fmt = settings["format"]
    if args.action == "check":
        n = annihilation_exponent(M, n_max)
        payload = {
            "valid": True,
            "dimension": M.dim,
            "annihilation_exponent": n,
            "discrete": n is not None,
            "config": conf,
        }
        _emit(payload, fmt, out)
        return 0
    if args.action == "bousfield":
        report = bousfield_check(M, args.k_max)
        payload = {**report.to_json(), "annihilation_exponent": annihilation_exponent(M, n_max), "config": conf}
        _emit(payload, fmt, out)
        return 0 if report.passed else 1
    if args.action == "hom":
        if not args.other:
            raise UsageError("module hom needs a second module file")
        N = _module_arg(args.other, cfg)
        gens = hom_A(M, N)
        payload = {"generators": [[[format_rational(x) for x in row] for row in S] for S in gens], "config": conf}
        _emit(payload, fmt, out)
        return 0
    if args.x is None:
        raise UsageError(f"module {args.action} needs --x")
    x = M.element(_rationals(args.x))
    if args.action == "act":
        if args.j is not None:
            y = adams_action(M, parse_rational(args.j), x, n_max)
        elif args.op is not None:
            a = PhiVector(tuple(_pad(_rationals(args.op), cfg.N)), M.cfg)
            y = apply_operation(M, a, x, n_max)
        else:
            y = M.act(x)
        _emit({"result": element_to_json(y), "config": conf}, fmt, out)
        return 0
    if args.action == "coaction":
        pairs = coaction(M, x, n_max)
        _emit({"coaction": [[n, element_to_json(v)] for n, v in pairs], "config": conf}, fmt, out)
        return 0
    raise UsageError(f"unknown module action {args.action}")


def cmd_sequence(args, settings, cfg, out) -> int:
    M = _module_arg(args.file, cfg)
    conf = _config_json(settings, M.cfg)
    fmt = settings["format"]
    if args.action == "verify":
        report = verify_exact_sequence(M, args.support)
        _emit({**report.to_json(), "config": conf}, fmt, out)
        return 0 if report.passed else 1
    if args.action == "alpha":
        if args.x is None:
            raise UsageError("sequence alpha needs --x")
        f = alpha(M, _rationals(args.x))
        _emit({**f.to_json(), "config": conf}, fmt, out)
        return 0
    if args.f is None:
        raise UsageError(f"sequence {args.action} needs --f")
    f = UElement.from_json(M, _load_json_arg(args.f))
    if args.action == "beta":
        if args.preimage:
            pre = beta_preimage(M, f)
            _emit({**pre.g.to_json(), "r": pre.r, "config": conf}, fmt, out)
        else:
            _emit({**beta(M, f).to_json(), "config": conf}, fmt, out)
        return 0
    if args.action == "gamma":
        v = gamma(M, f, args.n)
        _emit({"value": [format_rational(x) for x in v], "config": conf}, fmt, out)
        return 0
    raise UsageError(f"unknown sequence action {args.action}")


def cmd_corpus(args, settings, cfg, out) -> int:
    corpus = generate_corpus(cfg, int(settings["size"]), int(settings["seed"]))
    payload = {"config": _config_json(settings, cfg), "modules": [M.to_json() for M in corpus]}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
        out.write(f"wrote {len(corpus)} modules to {args.out}\n")
    else:
        out.write(json.dumps(payload, indent=2) + "\n")
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, help=f"odd prime (default 3, or ${PRIME_ENV})")
    common.add_argument("--q", type=int, help="integer primitive mod p^2 (default: smallest)")
    common.add_argument("--variant", choices=["nonsplit", "split"])
    common.add_argument("--trunc", type=int, help="truncation N of operation cosets (default 12)")
    common.add_argument("--format", choices=["json", "csv", "text"])
    common.add_argument("--seed", type=int)
    common.add_argument("--n-max", dest="n_max", type=int, help="annihilation search bound (default 48)")
    common.add_argument("--config", help="JSON file of defaults; flags take precedence")

    parser = argparse.ArgumentParser(prog="kdiscrete", description="Exact computations with p-local K-theory operations")
    sub = parser.add_subparsers(dest="group", required=True)

    ring = sub.add_parser("ring", parents=[common], help="arithmetic in the operation ring")
    ring.add_argument("action", choices=["mul", "adams", "constants", "divide", "unit"])
    ring.add_argument("--a", help="Phi coefficients, comma separated")
    ring.add_argument("--b", help="Phi coefficients, comma separated")
    ring.add_argument("--j", help="p-local unit for Psi^j")
    ring.add_argument("--bound", type=int)
    ring.add_argument("--n", type=int)
    ring.add_argument("--m", type=int)
    ring.add_argument("--poly", help="polynomial coefficients, lowest degree first")
    ring.set_defaults(func=cmd_ring)

    ver = sub.add_parser("verify", parents=[common], help="sweep an identity")
    ver.add_argument("action", choices=["ccong", "phiquot", "thetapower", "abcongs", "symmetry"])
    ver.add_argument("--k", type=int, default=1)
    ver.add_argument("--s-max", dest="s_max", type=int)
    ver.add_argument("--n-bound", dest="n_max_id", type=int)
    ver.add_argument("--n", type=int)
    ver.add_argument("--samples", type=int, default=20)
    ver.add_argument("--bound", type=int)
    ver.set_defaults(func=cmd_verify)

    mod = sub.add_parser("module", parents=[common], help="work with a module file")
    mod.add_argument("action", choices=["check", "act", "bousfield", "coaction", "hom"])
    mod.add_argument("file")
    mod.add_argument("other", nargs="?")
    mod.add_argument("--x", help="element coordinates")
    mod.add_argument("--j", help="act by Psi^j")
    mod.add_argument("--op", help="act by the operation with these Phi coefficients")
    mod.add_argument("--k-max", dest="k_max", type=int)
    mod.set_defaults(func=cmd_module)

    seq = sub.add_parser("sequence", parents=[common], help="the four-term exact sequence")
    seq.add_argument("action", choices=["verify", "alpha", "beta", "gamma"])
    seq.add_argument("file")
    seq.add_argument("--x")
    seq.add_argument("--f", help="UElement JSON, inline or a path")
    seq.add_argument("--n", type=int)
    seq.add_argument("--support", type=int)
    seq.add_argument("--preimage", action="store_true", help="return g with beta(g) = -f instead")
    seq.set_defaults(func=cmd_sequence)

    corp = sub.add_parser("corpus", parents=[common], help="random valid modules")
    corp.add_argument("action", choices=["generate"])
    corp.add_argument("--size", type=int)
    corp.add_argument("--out")
    corp.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        settings = _settings(args)
        cfg = _config(settings)
        return args.func(args, settings, cfg, out)
    except ModuleValidationError as exc:
        for v in exc.violations:
            err.write(f"invalid module: {v}\n")
        return 2
    except (UsageError, ConfigError, NotDiscreteError, TruncationMismatch, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    except ArithmeticError as exc:
        err.write(f"verification failed: {exc}\n")
        return 1


def run(argv: Sequence[str]) -> tuple[int, str, str]:
    """Run the CLI in-process and capture (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
