"""Command-line front end.

Subcommands expose class tables, symbol-space reports, the classical and
finite-slope liftings, slope reports and the verification suites.  All
output is deterministic: given the same arguments and seed, reruns are
byte-identical.  ``--json`` switches every report to a versioned JSON
schema.  Exit status: 0 on success, 1 when a verification fails (with a
diff of the first failing coefficient), 2 on usage errors.
"""

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from . import qf
from .arith import DirichletChar
from .dist import ArithWeight
from .linalg import frac_rref
from .lifting import (
    halfint_Tl2,
    qexp_hecke_Tl,
    qexp_hecke_Tll,
    realizable_index,
    specialize_qexp,
    theta_classical,
    theta_oc,
    verify_interpolation,
)
from .modsym import (
    eigensymbols,
    hecke_Tn,
    involution,
    involution_split,
    solve_symbol_space,
)
from .ocsymb import SlopeData, charpoly_strata, oc_hecke_Tll, oc_hecke_Tn, solve_oc_space

SCHEMA_VERSION = 1
DEFAULT_SEED = 17


class UsageError(Exception):
    """Invalid parameter combination detected before dispatch."""


@dataclass
class JobConfig:
    """Validated parameters of one CLI job."""

    command: str
    level: int = 1
    tame: int = 1
    p: int = 0
    weight: int = 0
    char_disc: int = 0
    moments: int = 6
    prec: int = 6
    n_max: int = 20
    slope_bound: int = 1
    sign: int = -1
    ells: tuple = (3, 7)
    weights: tuple = (0, 1, 2)
    seed: int = DEFAULT_SEED
    threads: int = 0
    json_out: bool = False

    def validate(self):
        if self.threads <= 0:
            self.threads = os.cpu_count() or 1
        if self.p:
            if self.p < 5:
                raise UsageError(f"p must be at least 5, got {self.p}")
            if gcd(self.p, self.tame) != 1:
                raise UsageError(
                    f"p = {self.p} must be coprime to the tame level {self.tame}")
        if self.level < 1 or self.tame < 1:
            raise UsageError("levels must be positive")
        if self.weight < 0:
            raise UsageError("weight must be nonnegative")
        if self.n_max < 0:
            raise UsageError("nmax must be nonnegative")
        if self.sign not in (1, -1):
            raise UsageError("sign must be 1 or -1")
        return self

    def character(self):
        if self.char_disc == 0:
            return DirichletChar.trivial()
        return DirichletChar.from_kronecker(self.char_disc)


# ---------------------------------------------------------------------------
# report plumbing


def _emit(text):
    sys.stdout.write(text + "\n")


def _emit_json(obj):
    _emit(json.dumps(obj, sort_keys=True, indent=2))


def _json_diff(a, b, path="$"):
    """Path and values of the first difference between two JSON trees."""
    if isinstance(a, dict) and isinstance(b, dict):
        for key in sorted(set(a) | set(b)):
            if a.get(key) != b.get(key):
                return _json_diff(a.get(key), b.get(key), f"{path}.{key}")
        return None
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return f"{path}: length {len(a)} != {len(b)}"
        for i, (x, y) in enumerate(zip(a, b)):
            if x != y:
                return _json_diff(x, y, f"{path}[{i}]")
        return None
    if a != b:
        return f"{path}: {a!r} != {b!r}"
    return None


def _first_qexp_diff(lhs, rhs):
    """(n, lhs coeff, rhs coeff) of the first differing index, or None."""
    nm = min(lhs.n_max, rhs.n_max)
    for n in range(1, nm + 1):
        a, b = lhs.coeff(n), rhs.coeff(n)
        if a != b:
            return n, a, b
    return None


def _first_formal_diff(lhs, rhs):
    """First differing assembled index of two finite-precision expansions."""
    common = sorted(lhs.indices & rhs.indices)
    from .lifting import _meta_json

    for n in common:
        a = _meta_json(lhs.coeff(n).canonicalize())
        b = _meta_json(rhs.coeff(n).canonicalize())
        if a != b:
            return n, _json_diff(a, b)
    return None


def _check(lines, ok, label, diff_text):
    lines.append(f"  [{'PASS' if ok else 'FAIL'}] {label}")
    if not ok and diff_text:
        lines.append(f"         first failing coefficient: {diff_text}")
    return ok


# ---------------------------------------------------------------------------
# subcommands


def cmd_qf_classes(cfg, disc):
    if disc <= 0:
        raise UsageError("disc must be a positive integer")
    classes = qf.enumerate_classes(cfg.level, disc)
    if cfg.json_out:
        _emit_json({
            "schema_version": SCHEMA_VERSION,
            "command": "qf classes",
            "level": cfg.level,
            "disc": disc,
            "count": len(classes),
            "classes": [list(Q.triple()) for Q in classes],
        })
    else:
        _emit(f"class list  level={cfg.level}  disc={disc}")
        _emit(f"count: {len(classes)}")
        for Q in classes:
            _emit(f"  {Q.a} {Q.b} {Q.c}")
    return 0


def cmd_modsym_basis(cfg):
    chi = cfg.character()
    basis = solve_symbol_space(cfg.level, cfg.weight, chi, "Q")

    def _rank(sign):
        rows = []
        for phi in basis:
            part = involution_split(phi)[0 if sign == 1 else 1]
            rows.append([Fraction(x) for x in part.coords()])
        if not rows:
            return 0
        _, pivots = frac_rref(rows, len(rows[0]))
        return len(pivots)

    plus, minus = _rank(1), _rank(-1)
    if cfg.json_out:
        _emit_json({
            "schema_version": SCHEMA_VERSION,
            "command": "modsym basis",
            "level": cfg.level,
            "weight": cfg.weight,
            "character_disc": cfg.char_disc,
            "dimension": len(basis),
            "plus_dimension": plus,
            "minus_dimension": minus,
        })
    else:
        _emit(f"symbol space  level={cfg.level}  weight={cfg.weight}"
              f"  char={cfg.char_disc or 'trivial'}")
        _emit(f"dimension: {len(basis)}")
        _emit(f"plus dimension: {plus}")
        _emit(f"minus dimension: {minus}")
    return 0


def _format_system(system):
    return "  ".join(f"{l}:{lam}" for l, lam in sorted(system.items()))


def cmd_modsym_eigen(cfg):
    chi = cfg.character()
    systems = eigensymbols(cfg.level, cfg.weight, chi, cfg.sign)
    if cfg.json_out:
        _emit_json({
            "schema_version": SCHEMA_VERSION,
            "command": "modsym eigen",
            "level": cfg.level,
            "weight": cfg.weight,
            "character_disc": cfg.char_disc,
            "sign": cfg.sign,
            "count": len(systems),
            "systems": [{
                "eigenvalues": {str(l): int(lam)
                                for l, lam in sorted(sys_.items())},
                "coords": [int(c) for c in phi.coords()],
            } for phi, sys_ in systems],
        })
    else:
        _emit(f"eigensystems  level={cfg.level}  weight={cfg.weight}"
              f"  char={cfg.char_disc or 'trivial'}  sign={cfg.sign:+d}")
        _emit(f"count: {len(systems)}")
        for i, (phi, sys_) in enumerate(systems, 1):
            _emit(f"  [{i}]  {_format_system(sys_)}")
    return 0


def cmd_shintani_classical(cfg):
    # --weight is the lifting weight k (target weight k + 3/2); the
    # source symbols live at weight 2k.
    chi = cfg.character()
    systems = eigensymbols(cfg.level, 2 * cfg.weight, chi, cfg.sign)
    payload = []
    for phi, sys_ in systems:
        theta = theta_classical(phi, cfg.level, cfg.weight, chi,
                                cfg.n_max, threads=cfg.threads)
        payload.append((sys_, theta))
    if cfg.json_out:
        _emit_json({
            "schema_version": SCHEMA_VERSION,
            "command": "shintani classical",
            "level": cfg.level,
            "weight": cfg.weight,
            "character_disc": cfg.char_disc,
            "sign": cfg.sign,
            "n_max": cfg.n_max,
            "systems": [{
                "eigenvalues": {str(l): int(lam)
                                for l, lam in sorted(sys_.items())},
                "theta": theta.to_json(),
            } for sys_, theta in payload],
        })
        return 0
    _emit(f"classical lifting  level={cfg.level}  weight={cfg.weight}"
          f"  char={cfg.char_disc or 'trivial'}  sign={cfg.sign:+d}"
          f"  nmax={cfg.n_max}")
    _emit(f"eigensystems: {len(payload)}")
    for i, (sys_, theta) in enumerate(payload, 1):
        _emit(f"  [{i}]  {_format_system(sys_)}")
        _emit(f"       target weight {theta.weight[0]}/{theta.weight[1]}"
              f"  level {theta.level}")
        if theta.is_zero():
            _emit("       expansion: 0")
        else:
            for n in sorted(theta.coeffs):
                _emit(f"       n={n}  c={theta.coeffs[n]}")
    return 0


def _seeded_oc_symbol(space, seed):
    rng = random.Random(seed)
    mod = space.p ** space.prec
    return space.combination([rng.randrange(mod) for _ in range(space.dimension)])


def cmd_shintani_oc(cfg):
    space = solve_oc_space(cfg.p * cfg.tame, cfg.tame, (cfg.prec, cfg.moments))
    Phi = _seeded_oc_symbol(space, cfg.seed)
    e = theta_oc(Phi, cfg.n_max, threads=cfg.threads)
    # report the weight-1 specialization: the even-weight sector of the
    # lifting vanishes identically by anti-symmetry, so weight 1 is the
    # smallest informative cross-section of the expansion
    spec_k = 1 if e.Tp >= 1 else 0
    spec0 = specialize_qexp(e, ArithWeight(spec_k, DirichletChar.trivial(),
                                           cfg.p))
    if cfg.json_out:
        _emit_json({
            "schema_version": SCHEMA_VERSION,
            "command": "shintani oc",
            "p": cfg.p,
            "tame_level": cfg.tame,
            "moments": cfg.moments,
            "precision": cfg.prec,
            "n_max": cfg.n_max,
            "seed": cfg.seed,
            "space_dimension": space.dimension,
            "qexp": e.to_json(),
            "specialization_weight": spec_k,
            "specialization": spec0.to_json(),
        })
        return 0
    _emit(f"finite-slope lifting  p={cfg.p}  tame={cfg.tame}"
          f"  moments={cfg.moments}  prec={cfg.prec}  nmax={cfg.n_max}"
          f"  seed={cfg.seed}")
    _emit(f"space dimension: {space.dimension}")
    _emit("assembled indices: "
          + " ".join(str(n) for n in sorted(e.indices)))
    _emit(f"weight-{spec_k} specialization (mod {cfg.p}^{cfg.prec}):")
    for n in sorted(e.indices):
        _emit(f"  n={n}  c={spec0.coeff(n)}")
    return 0


def cmd_slopes(cfg):
    space = solve_oc_space(cfg.p * cfg.tame, cfg.tame, (cfg.prec, cfg.moments))
    poly = charpoly_strata(space)
    data = SlopeData(cfg.p, cfg.prec, poly)
    bound = Fraction(cfg.slope_bound)
    kept = [s for s in data.slopes if s <= bound]
    if cfg.json_out:
        obj = data.to_json()
        obj.update({
            "schema_version": SCHEMA_VERSION,
            "command": "slopes",
            "tame_level": cfg.tame,
            "moments": cfg.moments,
            "slope_bound": cfg.slope_bound,
            "slopes_kept": [[s.numerator, s.denominator] for s in kept],
        })
        _emit_json(obj)
        return 0
    _emit(f"slope report  p={cfg.p}  tame={cfg.tame}  moments={cfg.moments}"
          f"  prec={cfg.prec}")
    _emit(f"space dimension: {space.dimension}")
    _emit(f"charpoly degree: {len(data.charpoly) - 1}")
    _emit("newton vertices: "
          + " ".join(f"({x},{y})" for x, y in data.vertices))
    _emit(f"slopes <= {cfg.slope_bound}: "
          + " ".join(str(s) for s in kept))
    return 0


# ---------------------------------------------------------------------------
# verification suites


def cmd_verify_involution(cfg):
    chi = cfg.character()
    lines = [
        "verify: anti-symmetry of the classical lifting under the "
        "orientation involution",
        f"  level={cfg.level}  weight={cfg.weight}  nmax={cfg.n_max}",
    ]
    basis = solve_symbol_space(cfg.level, 2 * cfg.weight, chi, "Q")
    lines.append(f"  basis symbols: {len(basis)}")
    ok = True
    for i, phi in enumerate(basis, 1):
        lhs = theta_classical(involution(phi), cfg.level, cfg.weight, chi,
                              cfg.n_max, threads=cfg.threads)
        rhs = theta_classical(phi, cfg.level, cfg.weight, chi,
                              cfg.n_max, threads=cfg.threads).scale(-1)
        d = _first_qexp_diff(lhs, rhs)
        ok &= _check(lines, d is None, f"symbol {i}: lift(phi|iota) = -lift(phi)",
                     d and f"n={d[0]}: {d[1]} != {d[2]}")
        plus = involution_split(phi)[0]
        tplus = theta_classical(plus, cfg.level, cfg.weight, chi,
                                cfg.n_max, threads=cfg.threads)
        bad = None if tplus.is_zero() else min(tplus.coeffs)
        ok &= _check(lines, bad is None, f"symbol {i}: lift(phi^+) = 0",
                     bad and f"n={bad}: {tplus.coeffs[bad]} != 0")
    for line in lines:
        _emit(line)
    _emit("RESULT: PASS" if ok else "RESULT: FAIL")
    return 0 if ok else 1


def cmd_verify_equivariance(cfg):
    chi = cfg.character()
    lines = [
        "verify: Hecke equivariance of the classical lifting "
        "(T_l on symbols vs the square-index operator on expansions)",
        f"  level={cfg.level}  weight={cfg.weight}  nmax={cfg.n_max}"
        f"  primes={','.join(map(str, cfg.ells))}",
    ]
    basis = solve_symbol_space(cfg.level, 2 * cfg.weight, chi, "Q")
    lines.append(f"  basis symbols: {len(basis)}")
    ok = True
    for l in cfg.ells:
        for i, phi in enumerate(basis, 1):
            lhs = theta_classical(hecke_Tn(phi, l), cfg.level, cfg.weight,
                                  chi, cfg.n_max, threads=cfg.threads)
            rhs = halfint_Tl2(
                theta_classical(phi, cfg.level, cfg.weight, chi,
                                cfg.n_max * l * l, threads=cfg.threads), l)
            d = _first_qexp_diff(lhs, rhs)
            ok &= _check(lines, d is None,
                         f"l={l} symbol {i}: lift(phi|T_{l}) = "
                         f"T_{l}^2-operator(lift(phi))",
                         d and f"n={d[0]}: {d[1]} != {d[2]}")
    for line in lines:
        _emit(line)
    _emit("RESULT: PASS" if ok else "RESULT: FAIL")
    return 0 if ok else 1


def cmd_verify_interpolation(cfg):
    lines = [
        "verify: weight interpolation of the finite-slope lifting "
        "(specialize the lift vs lift the specialization)",
        f"  p={cfg.p}  tame={cfg.tame}  moments={cfg.moments}"
        f"  prec={cfg.prec}  nmax={cfg.n_max}  seed={cfg.seed}",
    ]
    space = solve_oc_space(cfg.p * cfg.tame, cfg.tame, (cfg.prec, cfg.moments))
    Phi = _seeded_oc_symbol(space, cfg.seed)
    ok = True
    for k in cfg.weights:
        kappa = ArithWeight(k, DirichletChar.trivial(), cfg.p)
        report = verify_interpolation(Phi, kappa, cfg.n_max,
                                      threads=cfg.threads)
        need = report["precision"] - report["loss"]
        diff = None
        if not report["passed"]:
            n = report["failing_indices"][0]
            diff = f"n={n} disagrees mod {cfg.p}^{need}"
        ok &= _check(
            lines, report["passed"],
            f"weight k={k}: residual valuation "
            f"{report['residual_valuation']} >= {need}",
            diff)
    for line in lines:
        _emit(line)
    _emit("RESULT: PASS" if ok else "RESULT: FAIL")
    return 0 if ok else 1


def cmd_verify_oc_hecke(cfg):
    lines = [
        "verify: Hecke equivariance of the finite-slope lifting "
        "(operator on symbols vs operator on expansions, two code paths)",
        f"  p={cfg.p}  tame={cfg.tame}  moments={cfg.moments}"
        f"  prec={cfg.prec}  nmax={cfg.n_max}  seed={cfg.seed}"
        f"  primes={','.join(map(str, cfg.ells))}",
    ]
    level = cfg.p * cfg.tame
    space = solve_oc_space(level, cfg.tame, (cfg.prec, cfg.moments))
    Phi = _seeded_oc_symbol(space, cfg.seed)
    base = [n for n in range(1, cfg.n_max + 1) if realizable_index(level, n)]
    ok = True
    for l in cfg.ells:
        if level % l == 0:
            lines.append(f"  [SKIP] l={l} divides the level")
            continue
        idx = sorted({n for b in base for n in (b, l * l * b)}
                     | {b // (l * l) for b in base if b % (l * l) == 0})
        lhs = theta_oc(oc_hecke_Tn(Phi, l), cfg.n_max, indices=base,
                       threads=cfg.threads)
        rhs = qexp_hecke_Tl(
            theta_oc(Phi, cfg.n_max * l * l, indices=idx,
                     threads=cfg.threads), l)
        d = _first_formal_diff(lhs, rhs)
        ok &= _check(lines, d is None,
                     f"l={l}: lift(Phi|T_{l}) = T_{l}-operator(lift(Phi))",
                     d and f"n={d[0]}: {d[1]}")
        lhs2 = theta_oc(oc_hecke_Tll(Phi, l), cfg.n_max, indices=base,
                        threads=cfg.threads)
        rhs2 = qexp_hecke_Tll(
            theta_oc(Phi, cfg.n_max, indices=base, threads=cfg.threads), l)
        d2 = _first_formal_diff(lhs2, rhs2)
        ok &= _check(lines, d2 is None,
                     f"l={l}: lift(Phi|T_{l},{l}) = "
                     f"T_{l},{l}-operator(lift(Phi))",
                     d2 and f"n={d2[0]}: {d2[1]}")
    for line in lines:
        _emit(line)
    _emit("RESULT: PASS" if ok else "RESULT: FAIL")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sp):
    sp.add_argument("--json", action="store_true", dest="json_out",
                    help="emit the versioned JSON schema instead of text")
    sp.add_argument("--threads", type=int, default=0,
                    help="parallel map width (default: available cores)")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED,
                    help="seed for randomized reports and property checks")


def _add_padic(sp):
    sp.add_argument("--p", type=int, required=True, help="working prime (>= 5)")
    sp.add_argument("--tame-n", type=int, default=1, dest="tame",
                    help="tame level N, coprime to p")
    sp.add_argument("--moments", type=int, default=6,
                    help="moment degree bound T")
    sp.add_argument("--padic-prec", type=int, default=6, dest="prec",
                    help="coefficient precision exponent")


def _ells(text):
    out = tuple(int(x) for x in text.split(",") if x)
    if not out:
        raise argparse.ArgumentTypeError("need a comma-separated prime list")
    return out


def build_parser():
    ap = argparse.ArgumentParser(
        prog="shintani",
        description="Exact classical and finite-slope theta liftings.")
    top = ap.add_subparsers(dest="group", required=True)

    g_qf = top.add_parser("qf", help="quadratic form class tables")
    qf_sub = g_qf.add_subparsers(dest="action", required=True)
    sp = qf_sub.add_parser("classes", help="one orbit representative per class")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--disc", type=int, required=True)
    _add_common(sp)

    g_ms = top.add_parser("modsym", help="symbol space reports")
    ms_sub = g_ms.add_subparsers(dest="action", required=True)
    for name, hlp in (("basis", "solve the relation space"),
                      ("eigen", "rational Hecke eigensystems")):
        sp = ms_sub.add_parser(name, help=hlp)
        sp.add_argument("--level", type=int, required=True)
        sp.add_argument("--weight", type=int, required=True)
        sp.add_argument("--char", type=int, default=0,
                        help="quadratic character discriminant (0 = trivial)")
        if name == "eigen":
            sp.add_argument("--sign", type=int, default=-1, choices=(1, -1))
        _add_common(sp)

    g_sh = top.add_parser("shintani", help="theta lifting computations")
    sh_sub = g_sh.add_subparsers(dest="action", required=True)
    sp = sh_sub.add_parser("classical", help="exact lift of eigensymbols")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--char", type=int, default=0)
    sp.add_argument("--sign", type=int, default=-1, choices=(1, -1))
    sp.add_argument("--nmax", type=int, required=True)
    _add_common(sp)
    sp = sh_sub.add_parser("oc", help="finite-precision lift of a seeded symbol")
    _add_padic(sp)
    sp.add_argument("--nmax", type=int, required=True)
    _add_common(sp)

    sp = top.add_parser("slopes", help="U_p Newton polygon report")
    _add_padic(sp)
    sp.add_argument("--h", type=int, default=1, dest="slope_bound",
                    help="report slopes up to this bound")
    _add_common(sp)

    g_v = top.add_parser("verify", help="verification suites")
    v_sub = g_v.add_subparsers(dest="action", required=True)
    sp = v_sub.add_parser("involution", help="anti-symmetry of the lift")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--char", type=int, default=0)
    sp.add_argument("--nmax", type=int, required=True)
    _add_common(sp)
    sp = v_sub.add_parser("equivariance", help="classical Hecke equivariance")
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--weight", type=int, required=True)
    sp.add_argument("--char", type=int, default=0)
    sp.add_argument("--nmax", type=int, required=True)
    sp.add_argument("--ells", type=_ells, default=(3, 7))
    _add_common(sp)
    sp = v_sub.add_parser("interpolation", help="weight interpolation")
    _add_padic(sp)
    sp.add_argument("--nmax", type=int, required=True)
    sp.add_argument("--weights", type=_ells, default=(0, 1, 2))
    _add_common(sp)
    sp = v_sub.add_parser("oc-hecke", help="finite-precision Hecke formula")
    _add_padic(sp)
    sp.add_argument("--nmax", type=int, required=True)
    sp.add_argument("--ells", type=_ells, default=(3, 7))
    _add_common(sp)

    return ap


def _config_from_args(args):
    cfg = JobConfig(command=f"{args.group} {getattr(args, 'action', '')}".strip())
    for name, attr in (
        ("level", "level"), ("tame", "tame"), ("p", "p"),
        ("weight", "weight"), ("char", "char_disc"),
        ("moments", "moments"), ("prec", "prec"), ("nmax", "n_max"),
        ("slope_bound", "slope_bound"), ("sign", "sign"),
        ("ells", "ells"), ("weights", "weights"), ("seed", "seed"),
        ("threads", "threads"), ("json_out", "json_out"),
    ):
        if hasattr(args, name):
            setattr(cfg, attr, getattr(args, name))
    return cfg.validate()


def main(argv=None):
    cache_dir = os.environ.get("SHINTANI_CACHE_DIR")
    if cache_dir:
        qf.enable_disk_cache(cache_dir)
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.group == "qf":
            return cmd_qf_classes(cfg, args.disc)
        if args.group == "modsym":
            return (cmd_modsym_basis if args.action == "basis"
                    else cmd_modsym_eigen)(cfg)
        if args.group == "shintani":
            return (cmd_shintani_classical if args.action == "classical"
                    else cmd_shintani_oc)(cfg)
        if args.group == "slopes":
            return cmd_slopes(cfg)
        if args.group == "verify":
            return {
                "involution": cmd_verify_involution,
                "equivariance": cmd_verify_equivariance,
                "interpolation": cmd_verify_interpolation,
                "oc-hecke": cmd_verify_oc_hecke,
            }[args.action](cfg)
        raise UsageError(f"unknown command group {args.group}")
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
