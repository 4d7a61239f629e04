"""Command-line front door tying the library into reproducible runs.

Exit statuses: 0 success, 1 validation error, 2 solver failure, 3 measured
property violation.  Every randomized command takes an explicit --seed and
writes byte-identical artifacts for identical invocations.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graphs, instances, relaxations, rounding, stcut
from .errors import (InstanceFormatError, PropertyViolationError, SolverError,
                     SparseCutError, ValidationError)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_PROPERTY = 3

CSV_COLUMNS = ("instance", "n", "opt", "spectral", "lr", "sdp",
               "rounded_sigma", "bound", "bound_holds")


@dataclass(frozen=True)
class RunConfig:
    command: str
    args: argparse.Namespace
    out: Path


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")


def _write_csv(path: Path, rows):
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col)) for col in CSV_COLUMNS))
    _write(path, "\n".join(lines) + "\n")


def _load(path: str) -> graphs.InstancePair:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read instance file: {exc}") from exc
    return graphs.parse_instance(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

_SOLVERS = {
    "spectral": relaxations.solve_spectral,
    "lr": relaxations.solve_leighton_rao,
    "sdp": relaxations.solve_goemans_linial,
}


def _cmd_solve(cfg: RunConfig) -> int:
    args = cfg.args
    pair = _load(args.instance)
    rv = _SOLVERS[args.kind](pair)
    report = relaxations.verify_solution(pair, rv)
    print(f"{args.kind} value {rv.value!r}")
    for name, res in sorted(report.residuals.items()):
        print(f"residual {name} {res!r}")
    _write(cfg.out / f"witness_{args.kind}.txt", relaxations.serialize_witness(rv))
    if not report.passed:
        print(f"verification FAILED: {report.worst_name} = {report.worst_value!r}")
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_round(cfg: RunConfig) -> int:
    args = cfg.args
    pair = _load(args.instance)
    if args.mode == "rank1":
        cert = rounding.round_rank1(pair, seed=args.seed)
    else:
        approx_pair = _load(args.approx)
        if approx_pair.n != pair.n:
            raise ValidationError("approximation instance has a different vertex count")
        cert = rounding.round_rank1_via_approx(pair, approx_pair.h, seed=args.seed)
    print(f"branch {cert.branch}")
    print(f"sparsity {cert.report.sigma!r}")
    print(f"relaxation value {cert.relax_value!r}")
    print(f"bound {cert.bound!r} holds {str(cert.bound_holds).lower()}")
    _write(cfg.out / "certificate.txt", rounding.serialize_certificate(cert))
    return EXIT_OK if cert.bound_holds else EXIT_PROPERTY


def _cmd_oracle(cfg: RunConfig) -> int:
    args = cfg.args
    pair = _load(args.instance)
    cut, rep = graphs.brute_force_opt(pair, max_n=args.max_n)
    print(f"optimum sparsity {rep.sigma!r}")
    print("cut " + " ".join(str(v) for v in cut.sorted_members))
    _write(cfg.out / "oracle.txt",
           f"sigma {rep.sigma!r}\ncut {' '.join(str(v) for v in cut.sorted_members)}\n")
    return EXIT_OK


def _cmd_mincut(cfg: RunConfig) -> int:
    args = cfg.args
    pair = _load(args.instance)
    cert = stcut.st_certificate(pair.g, args.s, args.t)
    print(f"energy {cert.energy!r}")
    print(f"cut-fraction {cert.cut_fraction!r}")
    print(f"ratio {cert.ratio!r}")
    _write(cfg.out / "flow.txt", stcut.serialize_flow(cert))
    return EXIT_OK if cert.bound_holds else EXIT_PROPERTY


def _cmd_mix(cfg: RunConfig) -> int:
    args = cfg.args
    pair = _load(args.instance)
    params = instances.MixParams(eps=args.eps, delta=args.delta)
    mixed = instances.mix_instance(pair, params)
    _write(cfg.out / "mixed.gp", graphs.format_instance(mixed))
    if args.check_cuts:
        if pair.n > graphs.ORACLE_MAX_N:
            raise ValidationError("cut check requires the enumeration guard (n <= 24)")
        bad = 0
        for members in _nontrivial_cuts(pair.n):
            cut = graphs.Cut(frozenset(members), pair.n)
            if not instances.unmix_cut_check(pair, params, cut).holds:
                bad += 1
        print(f"unmix implication violations: {bad}")
        if bad:
            return EXIT_PROPERTY
    return EXIT_OK


def _nontrivial_cuts(n: int):
    for idx in range((1 << (n - 1)) - 1):
        yield graphs._members_from_index(idx, n)


def _cmd_gen(cfg: RunConfig) -> int:
    args = cfg.args
    if args.family == "lollipop":
        spec = instances.GeneratorSpec(kind="lollipop", seed=args.seed, k=args.k)
    elif args.family == "expander-clique":
        spec = instances.GeneratorSpec(kind="expander_clique", seed=args.seed,
                                       n=args.n, d=args.d)
    else:
        spec = instances.GeneratorSpec(kind="random", seed=args.seed, n=args.n,
                                       density=args.density, rank1=args.rank1)
    pair, witness = spec.generate()
    _write(cfg.out / "instance.gp", graphs.format_instance(pair))
    if witness is not None:
        lines = [f"spectral x {v} {float(witness[v])!r}" for v in range(len(witness))]
        _write(cfg.out / "witness.txt", "\n".join(lines) + "\n")
    print(f"generated {args.family} instance with n={pair.n}")
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    args = cfg.args
    pair = _load(args.instance)
    try:
        text = Path(args.witness).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read witness file: {exc}") from exc
    kind = {"spectral": "spectral", "lr": "lp", "sdp": "sdp"}[args.kind]
    value = None
    for line in text.splitlines():
        tok = line.split()
        if tok[:2] == ["#", "value"] and len(tok) == 3:
            value = float(tok[2])
    witness = relaxations.parse_witness(text, kind, pair.n)
    if value is None:
        raise ValidationError("witness file lacks a '# value' line")
    rv = relaxations.RelaxationValue(value=value, kind=kind, witness=witness,
                                     residuals={})
    report = relaxations.verify_solution(pair, rv)
    for name, res in sorted(report.residuals.items()):
        print(f"residual {name} {res!r}")
    print("verification " + ("passed" if report.passed else
                             f"FAILED: {report.worst_name} = {report.worst_value!r}"))
    return EXIT_OK if report.passed else EXIT_PROPERTY


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_sandwich(count: int, seed: int, tol: float = 1e-6):
    """Relaxation dominance: spectral <= sdp + tol, {sdp, lr} <= optimum + tol."""
    rows, ok = [], True
    for i in range(count):
        n = 4 + (i % 9)
        pair = instances.gen_random(n, density=0.5, rank1=(i % 2 == 0), seed=seed + i)
        _, rep = graphs.brute_force_opt(pair)
        spec = relaxations.solve_spectral(pair).value
        lr = relaxations.solve_leighton_rao(pair).value
        sdp = relaxations.solve_goemans_linial(pair).value
        good = (spec <= sdp + tol) and (sdp <= rep.sigma + tol) and (lr <= rep.sigma + tol)
        ok = ok and good
        rows.append({"instance": f"sandwich-{i}", "n": n, "opt": rep.sigma,
                     "spectral": spec, "lr": lr, "sdp": sdp, "bound_holds": good})
    return rows, ok


def suite_rounding(count: int, seed: int, tol: float = 1e-7):
    """Certified rank-1 rounding: sigma <= 8 sqrt(sdp) + tol and sigma >= optimum."""
    rows, ok = [], True
    for i in range(count):
        n = 5 + (i % 8)
        pair = instances.gen_random(n, density=0.5, rank1=True, seed=seed + i)
        _, rep = graphs.brute_force_opt(pair)
        cert = rounding.round_rank1(pair, seed=seed + i)
        bound = 8.0 * math.sqrt(cert.relax_value)
        good = (cert.report.sigma <= bound + tol) and (cert.report.sigma >= rep.sigma - 1e-12) \
            and cert.bound_holds
        ok = ok and good
        rows.append({"instance": f"rounding-{i}", "n": n, "opt": rep.sigma,
                     "sdp": cert.relax_value, "rounded_sigma": cert.report.sigma,
                     "bound": bound, "bound_holds": good})
    return rows, ok


def suite_stcut(count: int, seed: int):
    """Sweep fraction <= sqrt(energy), audited flow, cut/flow ratio bound."""
    rows, ok = [], True
    for i in range(count):
        n = 5 + (i % 46)
        pair = instances.gen_random(n, density=0.2, rank1=False, seed=seed + i)
        rng = np.random.default_rng(seed + 10_000 + i)
        s, t = sorted(rng.choice(n, size=2, replace=False).tolist())
        cert = stcut.st_certificate(pair.g, s, t)
        good = (cert.cut_fraction <= math.sqrt(cert.energy) + 1e-9) and cert.bound_holds
        ok = ok and good
        rows.append({"instance": f"stcut-{i}-s{s}-t{t}", "n": n,
                     "spectral": cert.energy, "rounded_sigma": cert.cut_fraction,
                     "bound": math.sqrt(cert.energy), "bound_holds": good})
    return rows, ok


def mixing_test_instance(index: int, seed: int, max_opt: float = 0.25):
    """Deterministic random instance whose oracle optimum is at most max_opt."""
    for attempt in range(64):
        n = 6 + (index % 9)
        pair = instances.gen_random(n, density=0.4, rank1=(index % 2 == 0),
                                    seed=seed + 1000 * attempt + index)
        _, rep = graphs.brute_force_opt(pair)
        if 0.0 < rep.sigma <= max_opt:
            return pair, rep.sigma
    raise SolverError("could not find a low-optimum instance for mixing")


def suite_mixing(count: int, seed: int, tol: float = 1e-9):
    """Mixed optimum <= delta, and every half-sparse mixed cut unmixes."""
    rows, ok = [], True
    for i in range(count):
        pair, opt = mixing_test_instance(i, seed)
        for delta in (2.0 * opt, 4.0 * opt, 0.5):
            params = instances.MixParams(eps=opt, delta=delta)
            mixed = instances.mix_instance(pair, params)
            _, rep_mixed = graphs.brute_force_opt(mixed)
            good = rep_mixed.sigma <= delta + tol
            for members in _nontrivial_cuts(pair.n):
                cut = graphs.Cut(frozenset(members), pair.n)
                if not instances.unmix_cut_check(pair, params, cut, tol=tol).holds:
                    good = False
                    break
            ok = ok and good
            rows.append({"instance": f"mixing-{i}-delta{delta!r}", "n": pair.n,
                         "opt": opt, "rounded_sigma": rep_mixed.sigma,
                         "bound": delta, "bound_holds": good})
    return rows, ok


def suite_lollipop(seed: int, ks=(4, 8, 16, 32)):
    """Spectral value decays like 1/k while the optimum stays above 0.1."""
    rows, ok = [], True
    values = {}
    for k in ks:
        pair, witness = instances.gen_lollipop(k, seed)
        spec = relaxations.solve_spectral(pair).value
        values[k] = spec
        opt = None
        if pair.n <= 16:
            _, rep = graphs.brute_force_opt(pair)
            opt = rep.sigma
            ok = ok and opt >= 0.1
        rows.append({"instance": f"lollipop-k{k}", "n": pair.n, "opt": opt,
                     "spectral": spec})
    fitted = ks[0] * values[ks[0]]
    for k in ks:
        good = k * values[k] <= 2.0 * fitted
        ok = ok and good
        for row in rows:
            if row["instance"] == f"lollipop-k{k}":
                row["bound"] = 2.0 * fitted / k
                row["bound_holds"] = good
    return rows, ok


_SUITES = {
    "sandwich": lambda args: suite_sandwich(args.count or 30, args.seed),
    "rounding": lambda args: suite_rounding(args.count or 20, args.seed),
    "stcut": lambda args: suite_stcut(args.count or 25, args.seed),
    "mixing": lambda args: suite_mixing(args.count or 10, args.seed),
    "lollipop": lambda args: suite_lollipop(args.seed),
}


def _cmd_suite(cfg: RunConfig) -> int:
    args = cfg.args
    rows, ok = _SUITES[args.name](args)
    _write_csv(cfg.out / f"suite_{args.name}.csv", rows)
    bad = sum(1 for row in rows if row.get("bound_holds") is False)
    print(f"suite {args.name}: {len(rows)} rows, {bad} violations")
    return EXIT_OK if ok else EXIT_PROPERTY


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

_COMMANDS = {
    "solve": _cmd_solve,
    "round": _cmd_round,
    "oracle": _cmd_oracle,
    "mincut": _cmd_mincut,
    "mix": _cmd_mix,
    "gen": _cmd_gen,
    "verify": _cmd_verify,
    "suite": _cmd_suite,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="sparsecut",
                     description="Sparsest-cut relaxations, rounding, and gap instances.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one relaxation and write its witness")
    p.add_argument("--kind", choices=("spectral", "lr", "sdp"), required=True)
    p.add_argument("--out", default=".")
    p.add_argument("instance")

    p = sub.add_parser("round", help="certified rounding for rank-1 demand graphs")
    p.add_argument("mode", choices=("rank1", "rank1-approx"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--approx", help="graphpair file whose h-section is the rank-1 approximation")
    p.add_argument("--out", default=".")
    p.add_argument("instance")

    p = sub.add_parser("oracle", help="exhaustive sparsest-cut optimum")
    p.add_argument("--max-n", type=int, default=graphs.ORACLE_MAX_N)
    p.add_argument("--out", default=".")
    p.add_argument("instance")

    p = sub.add_parser("mincut", help="spectral s-t cut, flow, and ratio certificate")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--out", default=".")
    p.add_argument("instance")

    p = sub.add_parser("mix", help="gap-amplification mixing of an instance")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--check-cuts", action="store_true")
    p.add_argument("--out", default=".")
    p.add_argument("instance")

    p = sub.add_parser("gen", help="write a generated instance")
    gsub = p.add_subparsers(dest="family", required=True)
    g = gsub.add_parser("lollipop")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", default=".")
    g = gsub.add_parser("expander-clique")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", default=".")
    g = gsub.add_parser("random")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--rank1", action="store_true")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", default=".")

    p = sub.add_parser("verify", help="recheck a witness file against an instance")
    p.add_argument("--kind", choices=("spectral", "lr", "sdp"), required=True)
    p.add_argument("--witness", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("instance")

    p = sub.add_parser("suite", help="run a property suite and write its CSV")
    p.add_argument("name", choices=tuple(_SUITES))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--out", default=".")

    return parser


def dispatch(cfg: RunConfig) -> int:
    try:
        return _COMMANDS[cfg.command](cfg)
    except (InstanceFormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PropertyViolationError as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if getattr(args, "mode", None) == "rank1-approx" and not getattr(args, "approx", None):
        print("usage error: rank1-approx requires --approx", file=sys.stderr)
        return EXIT_VALIDATION
    cfg = RunConfig(command=args.command, args=args, out=Path(getattr(args, "out", ".")))
    return dispatch(cfg)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
