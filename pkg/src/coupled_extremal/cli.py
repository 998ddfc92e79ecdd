"""Command-line interface: ``coupled-extremal {check,sample,extremize,demo}``.

Exit codes: 0 verdict computed, 1 assertion or verification failed,
2 malformed input, 3 state not in C(rho1, rho2).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .certifier import (
    Extremal,
    MarginalPair,
    NonExtremalityWitness,
    NotInC,
    check_extremal,
    clip_to_cone,
    oracle_extremal,
    perturbation_report,
    rank_bound,
    validate_membership,
)
from .decomp import block_decompose
from .exceptions import CoupledExtremalError, NotInCError, WalkError
from .numcore import MEMBERSHIP_TOL, RANK_TOL, DimensionPair, max_norm
from .sampler import extremize, sample_interior

SCHEMA = "v1"

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_INPUT = 2
EXIT_NOT_IN_C = 3


class InputError(Exception):
    """Malformed or inconsistent input file."""


# -- serialization -----------------------------------------------------------
# Python's float repr is the shortest string that round-trips, so json text
# reproduces every double bit for bit.


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(obj, shape: tuple[int, int], name: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: not a numeric array ({exc})") from None
    if arr.shape != (shape[0], shape[1], 2):
        raise InputError(f"{name}: expected shape {shape} of [re, im] pairs, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top-level value must be an object")
    if doc.get("schema") != SCHEMA:
        raise InputError(f"{path}: unsupported schema {doc.get('schema')!r} (expected {SCHEMA!r})")
    return doc


def write_json(doc: dict, path=None) -> None:
    text = json.dumps(doc, indent=1)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _dims_of(doc: dict, where: str) -> DimensionPair:
    try:
        d1, d2 = doc["d1"], doc["d2"]
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc}") from None
    if not (isinstance(d1, int) and isinstance(d2, int)) or d1 < 1 or d2 < 1:
        raise InputError(f"{where}: d1, d2 must be positive integers")
    return DimensionPair(d1, d2)


def _marginals_from(doc: dict, dims: DimensionPair, where: str) -> MarginalPair:
    rho1 = decode_matrix(doc["rho1"], (dims.d1, dims.d1), f"{where}: rho1")
    rho2 = decode_matrix(doc["rho2"], (dims.d2, dims.d2), f"{where}: rho2")
    try:
        return MarginalPair(rho1, rho2)
    except ValueError as exc:
        raise InputError(f"{where}: invalid marginals: {exc}") from None


def read_state(path) -> tuple[np.ndarray, DimensionPair, MarginalPair | None]:
    """Load a state file; marginals are None when the file does not carry them."""
    doc = load_json(path)
    dims = _dims_of(doc, str(path))
    if "rho" not in doc:
        raise InputError(f"{path}: missing field 'rho'")
    rho = decode_matrix(doc["rho"], (dims.n, dims.n), f"{path}: rho")
    marginals = None
    if "rho1" in doc or "rho2" in doc:
        if not ("rho1" in doc and "rho2" in doc):
            raise InputError(f"{path}: give both rho1 and rho2 or neither")
        marginals = _marginals_from(doc, dims, str(path))
    return rho, dims, marginals


def read_marginals(path) -> MarginalPair:
    doc = load_json(path)
    if "rho1" not in doc or "rho2" not in doc:
        raise InputError(f"{path}: marginals file needs rho1 and rho2")
    if not (isinstance(doc["rho1"], list) and isinstance(doc["rho2"], list)) or not (doc["rho1"] and doc["rho2"]):
        raise InputError(f"{path}: rho1/rho2 must be non-empty arrays")
    dims = DimensionPair(len(doc["rho1"]), len(doc["rho2"]))
    return _marginals_from(doc, dims, str(path))


def state_document(rho, marginals: MarginalPair) -> dict:
    dims = marginals.dims
    return {
        "schema": SCHEMA,
        "d1": dims.d1,
        "d2": dims.d2,
        "rho": encode_matrix(rho),
        "rho1": encode_matrix(marginals.rho1),
        "rho2": encode_matrix(marginals.rho2),
    }


# -- certificates --------------------------------------------------------------


def certificate(verdict, marginals: MarginalPair, tol: float, rank_tol: float) -> dict:
    dims = marginals.dims
    cert = {
        "schema": SCHEMA,
        "kind": "certificate",
        "d1": dims.d1,
        "d2": dims.d2,
        "rho1": encode_matrix(marginals.rho1),
        "rho2": encode_matrix(marginals.rho2),
        "rank_bound": rank_bound(dims),
        "tolerances": {"membership": tol, "rank": rank_tol},
    }
    if isinstance(verdict, NotInC):
        cert["verdict"] = "not_in_c"
        cert["violation"] = {"kind": verdict.violation.kind, "magnitude": verdict.violation.magnitude}
        return cert
    report = verdict.report
    cert.update(k=report.k, dim_d=report.dim_d, k_squared=report.k_squared)
    if isinstance(verdict, Extremal):
        cert["verdict"] = "extremal"
        cert["singleton"] = verdict.singleton
    else:
        w = verdict.witness
        cert["verdict"] = "not_extremal"
        cert["route"] = verdict.route
        cert["witness"] = {
            "L": encode_matrix(w.L),
            "epsilon": w.epsilon,
            "rho_plus": encode_matrix(w.rho_plus),
            "rho_minus": encode_matrix(w.rho_minus),
        }
    return cert


def verify_certificate(cert: dict, rho) -> list[str]:
    """Re-check every claim of ``cert`` about ``rho``; returns the failures (empty if valid)."""
    problems: list[str] = []
    try:
        dims = _dims_of(cert, "certificate")
        marginals = _marginals_from(cert, dims, "certificate")
        tol = float(cert["tolerances"]["membership"])
        rank_tol = float(cert["tolerances"]["rank"])
        verdict = cert["verdict"]
    except (KeyError, TypeError, InputError) as exc:
        return [f"malformed certificate: {exc}"]
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dims.n, dims.n):
        return [f"state has shape {rho.shape}, certificate expects {dims.n}x{dims.n}"]
    if cert.get("rank_bound") != rank_bound(dims):
        problems.append(f"rank_bound {cert.get('rank_bound')} != {rank_bound(dims)}")

    violation = validate_membership(rho, marginals, tol)
    if verdict == "not_in_c":
        if violation is None:
            problems.append("certificate says not_in_c but the state is a member")
        elif violation.kind != cert.get("violation", {}).get("kind"):
            problems.append(f"violation kind differs: recomputed {violation.kind!r}")
        return problems
    if violation is not None:
        return problems + [f"state is not in C: {violation}"]

    report = perturbation_report(block_decompose(clip_to_cone(rho), rank_tol), dims, rank_tol)
    for key, value in (("k", report.k), ("dim_d", report.dim_d), ("k_squared", report.k_squared)):
        if cert.get(key) != value:
            problems.append(f"{key}: certificate {cert.get(key)}, recomputed {value}")

    if verdict == "extremal":
        if not oracle_extremal(rho, marginals, tol, rank_tol):
            problems.append("independent range-basis test finds a zero-marginal perturbation")
        if report.k**2 > dims.d1**2 + dims.d2**2 - 1:
            problems.append("extremal rank exceeds sqrt(d1^2 + d2^2 - 1)")
    elif verdict == "not_extremal":
        try:
            w = cert["witness"]
            witness = NonExtremalityWitness(
                L=decode_matrix(w["L"], (report.k, report.k), "witness L"),
                epsilon=float(w["epsilon"]),
                rho_plus=decode_matrix(w["rho_plus"], (dims.n, dims.n), "rho_plus"),
                rho_minus=decode_matrix(w["rho_minus"], (dims.n, dims.n), "rho_minus"),
            )
        except (KeyError, TypeError, InputError) as exc:
            return problems + [f"malformed witness: {exc}"]
        problems += witness.check(rho, marginals, tol)
    else:
        problems.append(f"unknown verdict {verdict!r}")
    return problems


# -- subcommands -------------------------------------------------------------------


def _resolve_marginals(args, rho, dims, file_marginals) -> MarginalPair:
    if args.marginals:
        marginals = read_marginals(args.marginals)
        if marginals.dims != dims:
            raise InputError(
                f"marginals have dims ({marginals.dims.d1}, {marginals.dims.d2}), "
                f"state has ({dims.d1}, {dims.d2})"
            )
        return marginals
    if file_marginals is not None:
        return file_marginals
    try:
        return MarginalPair.of(rho, dims)
    except ValueError as exc:
        raise InputError(f"cannot use the state's own marginals: {exc}") from None


def _check_one(path, args) -> tuple[int, dict | None, str]:
    try:
        rho, dims, file_marginals = read_state(path)
        marginals = _resolve_marginals(args, rho, dims, file_marginals)
    except InputError as exc:
        return EXIT_INPUT, None, str(exc)
    verdict = check_extremal(rho, marginals, args.tol, args.rank_tol)
    cert = certificate(verdict, marginals, args.tol, args.rank_tol)
    status = EXIT_OK
    if args.assert_extremal and not isinstance(verdict, Extremal):
        status = EXIT_ASSERTION
    return status, cert, cert["verdict"]


def cmd_check(args) -> int:
    if args.verify_certificate:
        if len(args.inputs) != 1:
            print("error: --verify-certificate takes exactly one input", file=sys.stderr)
            return EXIT_INPUT
        try:
            rho, _, _ = read_state(args.inputs[0])
            cert = load_json(args.verify_certificate)
        except InputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        problems = verify_certificate(cert, rho)
        for p in problems:
            print(f"FAIL: {p}", file=sys.stderr)
        if problems:
            return EXIT_ASSERTION
        print(f"certificate verified: {cert.get('verdict')}")
        return EXIT_OK

    many = len(args.inputs) > 1
    if many and args.output:
        Path(args.output).mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda p: _check_one(p, args), args.inputs))
    worst = EXIT_OK
    for path, (status, cert, message) in zip(args.inputs, results):
        if cert is None:
            print(f"error: {message}", file=sys.stderr)
        elif args.output:
            target = Path(args.output) / f"{Path(path).stem}.cert.json" if many else args.output
            write_json(cert, target)
            print(f"{path}: {message}", file=sys.stderr)
        else:
            write_json(cert)
        worst = max(worst, status)
    return worst


def cmd_sample(args) -> int:
    try:
        if args.marginals and args.marginals != "maximally-mixed":
            marginals = read_marginals(args.marginals)
        else:
            marginals = MarginalPair.maximally_mixed(args.d1, args.d2)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.count < 0:
        print("error: --count must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    if args.count == 0:
        return EXIT_OK
    out = Path(args.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(args.seed).spawn(args.count)
    for i, s in enumerate(seeds):
        try:
            rho = sample_interior(marginals, np.random.default_rng(s), args.spread)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        write_json(state_document(rho, marginals), out / f"sample_{i:04d}.json")
    print(f"wrote {args.count} state(s) to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_extremize(args) -> int:
    try:
        rho, dims, file_marginals = read_state(args.input)
        marginals = _resolve_marginals(args, rho, dims, file_marginals)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        trace = extremize(rho, marginals, args.seed, args.tol, args.rank_tol)
    except NotInCError as exc:
        print(f"error: state is not in C(rho1, rho2): {exc}", file=sys.stderr)
        return EXIT_NOT_IN_C
    except WalkError as exc:
        print(f"error: walk failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    doc = certificate(trace.verdict, marginals, args.tol, args.rank_tol)
    doc["kind"] = "extremize"
    doc["rho"] = encode_matrix(trace.final)
    doc["trace"] = {
        "start_rank": trace.start_rank,
        "steps": [
            {"rank_before": s.rank_before, "t_star": s.t_star, "rank_after": s.rank_after}
            for s in trace.steps
        ],
    }
    write_json(doc, args.output)
    if args.output:
        ranks = " -> ".join([str(trace.start_rank)] + [str(s.rank_after) for s in trace.steps])
        print(f"rank {ranks}: {doc['verdict']}", file=sys.stderr)
    return EXIT_OK


def cmd_demo(args) -> int:
    from .qubit import (
        MaxEntangledSpec,
        half_identity_marginals,
        is_max_entangled,
        max_entangled,
    )

    m = half_identity_marginals()
    bell = max_entangled(MaxEntangledSpec(np.eye(2)))
    v = check_extremal(bell, m)
    print(f"Bell state |Phi+><Phi+| in C(I/2, I/2): {type(v).__name__} (k={v.report.k}, dim D={v.report.dim_d})")

    phi_minus = max_entangled(MaxEntangledSpec(np.diag([1.0, -1.0])))
    mix = (bell + phi_minus) / 2
    v = check_extremal(mix, m)
    ok = not v.witness.check(mix, m)
    print(
        f"(|Phi+><Phi+| + |Phi-><Phi-|)/2: {type(v).__name__} via {v.route} "
        f"(k={v.report.k}, dim D={v.report.dim_d}); witness valid: {ok}"
    )
    diff = max_norm(v.witness.rho_plus - v.witness.rho_minus)
    print(f"  witness states differ by {diff:.3e} in max-norm, epsilon={v.witness.epsilon:.4f}")

    trace = extremize(np.eye(4) / 4, m, seed=args.seed)
    ranks = " -> ".join([str(trace.start_rank)] + [str(s.rank_after) for s in trace.steps])
    purity = float(np.trace(trace.final @ trace.final).real)
    print(
        f"walk from I/4: rank {ranks}; final purity {purity:.12f}; "
        f"maximally entangled: {is_max_entangled(trace.final)}"
    )
    for d in (2, 3, 4):
        print(f"rank bound for ({d}, {d}): {rank_bound(DimensionPair(d, d))}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=MEMBERSHIP_TOL, help="membership tolerance (max-norm)")
    common.add_argument("--rank-tol", type=float, default=RANK_TOL, help="relative rank tolerance")
    common.add_argument("--marginals", help="file with target marginals rho1, rho2")

    p = argparse.ArgumentParser(
        prog="coupled-extremal",
        description="Certify extreme points of bipartite states with fixed marginals.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="certify extremality of one or more states")
    c.add_argument("inputs", nargs="+", help="state file(s)")
    c.add_argument("--output", help="certificate path (directory when several inputs)")
    c.add_argument("--assert-extremal", action="store_true", help="exit 1 unless every verdict is extremal")
    c.add_argument("--jobs", type=int, default=1, help="parallel checks")
    c.add_argument("--verify-certificate", metavar="PATH", help="re-verify a certificate against the input")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sample", parents=[common], help="sample members of C(rho1, rho2)")
    s.add_argument("--d1", type=int, default=2)
    s.add_argument("--d2", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--spread", type=float, default=0.5)
    s.add_argument("--output", help="output directory (default: current directory)")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("extremize", parents=[common], help="walk a member of C down to an extreme point")
    e.add_argument("input")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", help="result path (default: stdout)")
    e.set_defaults(func=cmd_extremize)

    d = sub.add_parser("demo", help="two-qubit demonstration")
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CoupledExtremalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
