"""Command-line front end.

Subcommands: ``build``, ``verify``, ``classify``, ``hecke``, ``transform``.
Inputs are JSON configs (see :mod:`dynrmat.serialize` for the schema);
outputs go to ``--out`` or stdout and are deterministic for a fixed seed.

Exit codes: 0 success, 1 residual check failed, 2 invalid input,
3 pole encountered, 4 matrix not in the classified family, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from .builder import build
from .classifier import classify, recover_params, _reference_point
from .errors import (
    AmbiguityError,
    NotInFamilyError,
    ParameterError,
    PoleError,
)
from .hecke import hecke_classify
from .params import validate_params
from .partition import to_json as partition_to_json
from .rmatrix import dense_point_to_json, evaluate, shifted
from .serialize import (
    complex_to_json,
    load_config,
    matrix_from_samples,
    params_to_json,
    parse_config,
    two_form_from_json,
)
from .verifier import check_invertibility, check_system, dqybe_residual_normalized, sample_lambda
from . import transforms

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_INVALID = 2
EXIT_POLE = 3
EXIT_NOT_IN_FAMILY = 4
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 64 instead of argparse's default 2
        raise UsageError(message)


def _parse_lambda(text: str, n: Optional[int] = None) -> np.ndarray:
    parts = [tok.strip() for tok in text.split(",") if tok.strip()]
    vals = []
    for tok in parts:
        try:
            vals.append(complex(tok.replace("i", "j").replace(" ", "")))
        except ValueError as exc:
            raise UsageError(f"cannot parse lambda component {tok!r}") from exc
    lam = np.array(vals, dtype=complex)
    if n is not None and len(lam) != n:
        raise ParameterError(f"lambda must have {n} components, got {len(lam)}")
    return lam


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DYNRMAT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"DYNRMAT_SEED must be an integer, got {env!r}") from exc
    return 0


def _load_datum(path: str):
    kind, payload = parse_config(load_config(path))
    if kind != "datum":
        raise ParameterError(
            "this command needs an evaluable datum config "
            '("kind": "datum"); a sampled matrix cannot be rebuilt'
        )
    p, c = payload
    res = validate_params(c)
    if not res:
        raise ParameterError(res.message)
    return p, c


def _load_any(path: str):
    """Returns (R, params_or_None)."""
    kind, payload = parse_config(load_config(path))
    if kind == "datum":
        p, c = payload
        res = validate_params(c)
        if not res:
            raise ParameterError(res.message)
        return build(p, c), c
    points = payload
    return matrix_from_samples(points), None


# -- subcommands ------------------------------------------------------------


def _fmt_c(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.12g}{z.imag:+.12g}i"


def cmd_build(args) -> int:
    p, c = _load_datum(args.config)
    R = build(p, c)
    lines = [f"n = {p.n}", f"partition = {partition_to_json(p)['blocks']}"]
    ref = _reference_point(R)
    dt, dd = R.tables(ref)
    lines.append("per-pair coefficients at the reference point "
                 f"{[complex_to_json(z) for z in ref]}:")
    for i in range(1, p.n + 1):
        for j in range(1, p.n + 1):
            if i == j:
                lines.append(f"  exchange({i},{i}) = {_fmt_c(dt[i-1,i-1])}")
            else:
                lines.append(
                    f"  exchange({i},{j}) = {_fmt_c(dt[i-1,j-1])}  "
                    f"diagonal({i},{j}) = {_fmt_c(dd[i-1,j-1])}"
                )
    out_obj = {"summary": lines}
    if args.lam:
        lam = _parse_lambda(args.lam, p.n)
        out_obj["point"] = dense_point_to_json(evaluate(R, lam))
    _emit(_dumps(out_obj), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.samples is not None and args.samples <= 0:
        raise UsageError("--samples must be positive")
    kind, payload = parse_config(load_config(args.config))
    seed = _seed(args)
    num = args.samples or 8
    tol = args.tol or 1e-9
    if kind == "datum":
        p, c = payload
        res = validate_params(c)
        if not res:
            raise ParameterError(res.message)
        R = build(p, c)
        rng = np.random.default_rng(seed)
        samples = sample_lambda(R, rng, num)
    else:
        # a sampled matrix is verifiable when, for some base points, all n
        # singly-shifted points are in the sample set too
        R = matrix_from_samples(payload)
        keys = {tuple(np.round(np.asarray(pt.lam, dtype=complex), 12)) for pt in payload}
        samples = []
        for pt in payload:
            lam = np.asarray(pt.lam, dtype=complex)
            if all(
                tuple(np.round(shifted(lam, k), 12)) in keys
                for k in range(1, R.n + 1)
            ):
                samples.append(lam)
        if not samples:
            raise ParameterError(
                "sampled matrix is not verifiable: no sample point has all "
                "of its singly-shifted points in the sample set"
            )
    report = check_system(R, samples=samples, tol=tol)
    inv = [check_invertibility(R, lam) for lam in samples]
    inv_ok = all(item["agree"] for item in inv)
    ok = report.passed and inv_ok

    rows = ["equation,max_normalized_residual"]
    for tag in sorted(report.per_equation):
        rows.append(f"{tag},{report.per_equation[tag]:.6e}")
    rows.append(f"global,{max(report.global_residuals):.6e}")
    csv_text = "\n".join(rows) + "\n"
    json_obj = {
        "passed": bool(ok),
        "tol": tol,
        "seed": seed,
        "num_samples": len(samples),
        "global_residual": max(report.global_residuals),
        "per_equation": {k: v for k, v in sorted(report.per_equation.items())},
        "invertibility_agree": bool(inv_ok),
        "worst": {
            "equation": report.worst_case.equation,
            "indices": list(report.worst_case.indices),
            "value": report.worst_case.value,
        },
    }
    text = _dumps(json_obj) + "\n" + csv_text
    if not ok:
        sys.stderr.write(
            f"FAIL: worst equation {report.worst_case.equation} at indices "
            f"{list(report.worst_case.indices)} with normalized residual "
            f"{report.worst_case.value:.3e}\n"
        )
        _emit(text, args.out)
        return EXIT_RESIDUAL
    _emit(text, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    kind, payload = parse_config(load_config(args.config))
    seed = _seed(args)
    tol = args.tol or 1e-8
    if kind == "datum":
        p, c = payload
        res = validate_params(c)
        if not res:
            raise ParameterError(res.message)
        R = build(p, c)
        samples = None
    else:
        R = matrix_from_samples(payload)
        samples = [np.asarray(pt.lam, dtype=complex) for pt in payload]
    report = classify(R, samples=samples, tol=tol, seed=seed)
    obj = {
        "partition": partition_to_json(report.recovered_partition),
        "index_permutation": {str(k): v for k, v in report.index_permutation.items()},
        "levels": list(report.levels),
        "reduced_incidence": report.M_R.astype(int).tolist(),
        "block_sizes": list(report.block_sizes),
    }
    if kind == "datum":
        params = recover_params(R, report)
        ref = _reference_point(R)
        obj["params"] = params_to_json(params, probe_lam=ref)
    _emit(_dumps(obj), args.out)
    return EXIT_OK


def cmd_hecke(args) -> int:
    kind, payload = parse_config(load_config(args.config))
    seed = _seed(args)
    tol = args.tol or 1e-9
    if kind == "datum":
        p, c = payload
        res = validate_params(c)
        if not res:
            raise ParameterError(res.message)
        R = build(p, c)
        samples = None
    else:
        R = matrix_from_samples(payload)
        samples = [np.asarray(pt.lam, dtype=complex) for pt in payload]
    report = hecke_classify(R, samples=samples, tol=tol, seed=seed)

    def fmt(z: complex) -> str:
        if z is None:
            return "-"
        if abs(z.imag) < 1e-12 * max(1.0, abs(z)):
            return f"{z.real:.6g}"
        return f"{z.real:.6g}{z.imag:+.6g}i"

    if report.kind == "WeakHecke":
        line = f"WeakHecke rho={fmt(report.rho)} kappa={fmt(report.kappa)}; not Hecke"
    elif report.kind == "Hecke":
        line = f"Hecke rho={fmt(report.rho)} kappa={fmt(report.kappa)}"
    elif report.kind == "DegenerateSingleDClass":
        line = f"DegenerateSingleDClass value={fmt(report.rho)}"
    else:
        line = f"NotHecke ({report.detail})"
    obj = {
        "kind": report.kind,
        "rho": complex_to_json(report.rho) if report.rho is not None else None,
        "kappa": complex_to_json(report.kappa) if report.kappa is not None else None,
        "detail": report.detail,
        "line": line,
    }
    _emit(line + "\n" + _dumps(obj), args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    chosen = [
        name
        for name in ("twist", "two_form", "contract", "compose", "scale", "limit")
        if getattr(args, name) is not None
    ]
    if len(chosen) != 1:
        raise UsageError(
            "exactly one of --twist/--two-form/--contract/--compose/--scale/--limit"
        )
    mode = chosen[0]
    p, c = _load_datum(args.config)
    R = build(p, c)

    if mode == "scale":
        sd = transforms.scale_f(c, float(args.scale))
        obj = {
            "params": params_to_json(sd.params),
            "index_map": {str(k): v for k, v in sd.index_map.items()},
            "compensator": {
                ",".join(map(str, pair)): complex_to_json(fn(np.zeros(p.n)))
                for pair, fn in sd.compensator.g.items()
            },
            "eta": sd.eta,
        }
        _emit(_dumps(obj), args.out)
        return EXIT_OK

    if mode == "limit":
        xi = [float(tok) for tok in args.limit.split(",") if tok.strip()]
        rep = transforms.trig_to_rational_limit(c, xi)
        obj = {
            "xi": rep.xi_values,
            "distances": rep.distances,
            "orders": rep.orders,
            "converging": bool(rep.converging),
        }
        _emit(_dumps(obj), args.out)
        return EXIT_OK

    if mode == "contract":
        subset = tuple(int(tok) for tok in args.contract.split(",") if tok.strip())
        out_R = transforms.contract(R, subset)
        m = len(subset)
    elif mode == "compose":
        p2, c2 = _load_datum(args.compose)
        R2 = build(p2, c2)
        out_R = transforms.decouple_compose(
            R, R2, complex(args.g_ab or 1.0), complex(args.g_ba or 1.0)
        )
        m = p.n + p2.n
    elif mode == "twist":
        spec = load_config(args.twist)
        pots = two_form_from_json({"type": "exact", **spec}, p.n)
        out_R = transforms.apply_twist(R, pots.beta)
        m = p.n
    else:  # two_form
        spec = load_config(args.two_form)
        g = two_form_from_json(spec, p.n)
        out_R = transforms.apply_2form(R, g, seed=_seed(args))
        m = p.n

    if args.lam:
        lam = _parse_lambda(args.lam, m)
    else:
        lam = _reference_point(out_R)
    obj = {
        "n": m,
        "point": dense_point_to_json(evaluate(out_R, lam)),
        "residual": dqybe_residual_normalized(out_R, lam),
    }
    _emit(_dumps(obj), args.out)
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="dynrmat", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("config", help="JSON config path")
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--lambda", dest="lam", default=None,
                        help='evaluation point "a+bi,a+bi,..."')
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    common(sub.add_parser("build", help="build a matrix from a datum config"))
    common(sub.add_parser("verify", help="check the shifted consistency equations"))
    common(sub.add_parser("classify", help="recover partition and constants"))
    common(sub.add_parser("hecke", help="spectral classification"))
    tp = sub.add_parser("transform", help="apply a covariance transform")
    common(tp)
    tp.add_argument("--twist", default=None, help="JSON file of per-index potentials")
    tp.add_argument("--two-form", dest="two_form", default=None,
                    help="JSON 2-form spec to apply")
    tp.add_argument("--contract", default=None, help='index subset "1,2"')
    tp.add_argument("--compose", default=None, help="second datum config to append")
    tp.add_argument("--g-ab", dest="g_ab", type=complex, default=None)
    tp.add_argument("--g-ba", dest="g_ba", type=complex, default=None)
    tp.add_argument("--scale", default=None, help="merge exchange classes at this scale")
    tp.add_argument("--limit", default=None, help='xi sequence "1e-1,1e-2,..."')
    return parser


_COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "classify": cmd_classify,
    "hecke": cmd_hecke,
    "transform": cmd_transform,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (build|verify|classify|hecke|transform)")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except ParameterError as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except PoleError as exc:
        sys.stderr.write(f"pole: {exc}\n")
        return EXIT_POLE
    except (NotInFamilyError, AmbiguityError) as exc:
        sys.stderr.write(f"not in family: {exc}\n")
        return EXIT_NOT_IN_FAMILY


if __name__ == "__main__":
    sys.exit(main())
