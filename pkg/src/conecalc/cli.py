"""Command-line interface: ``conecalc <command> ...``.

Exit status is 0 on success, 1 when a checked property fails and 2 on
input or computation errors.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import complex as cx
from . import cycles as cy
from . import moduli as md
from . import serialize as io


class CheckFailed(Exception):
    pass


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_obj(args, obj) -> None:
    if getattr(args, "format", "json") == "tsv" and isinstance(obj, (cy.MinkowskiWeight, cy.TropicalCycle)):
        w = obj.weight if isinstance(obj, cy.TropicalCycle) else obj
        lines = ["cone\tweight"] + [f"{io.cone_id(k)}\t{v}" for k, v in w.weights.items()]
        _emit(args, "\n".join(lines))
    elif getattr(args, "format", "json") == "tsv" and isinstance(obj, cy.ExtendedCycle):
        lines = ["star\tcone\tweight"]
        for g, c in obj.components.items():
            lines += [f"{io.cone_id(g)}\t{io.cone_id(k)}\t{v}" for k, v in c.weight.weights.items()]
        _emit(args, "\n".join(lines))
    else:
        _emit(args, io.dumps(io.to_json(obj)))


def _loader(args) -> io.Loader:
    override = io.Loader().load_complex_path(args.complex) if getattr(args, "complex", None) else None
    return io.Loader(override)


def _complex(path: str) -> cx.ConeComplex:
    return io.complex_from_json(io.read_json(path))


def _load(args, path: str, kinds: tuple):
    obj = io.load_any(path, _loader(args))
    if not isinstance(obj, kinds):
        names = "/".join(k.__name__ for k in kinds)
        raise io.FormatError(f"{path}: expected {names}, found {type(obj).__name__}")
    return obj


def _vector(text: str) -> list:
    return [io.parse_num(x) for x in text.replace(" ", "").split(",") if x]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args):
    S = _complex(args.file)
    rep = cx.validate(S)
    if rep.ok:
        _emit(args, f"valid: {len(S.rays)} rays, {len(S.cones)} cones, dim {S.dim}")
        return
    _emit(args, "\n".join(str(e) for e in rep.errors))
    raise CheckFailed()


def cmd_balance(args):
    A = _load(args, args.weight, (cy.TropicalCycle,))
    res = cy.check_balanced(A.weight)
    if res is True:
        _emit(args, "balanced")
        return
    _emit(args, "\n".join(str(v) for v in res))
    raise CheckFailed()


def cmd_mink_basis(args):
    S = _complex(args.file)
    basis = cy.mink_basis(S, args.k)
    docs = [io.weight_to_json(c, include_complex=False) for c in basis]
    _emit(args, io.dumps({"dim": args.k, "basis": docs}))


def cmd_star(args):
    S = _complex(args.file)
    st, _ = cx.star(S, io.parse_cone_id(args.cone))
    _emit_obj(args, st)


def cmd_subdivide(args):
    S = _complex(args.file)
    out, _, _ = cx.stellar_subdivide(S, io.parse_cone_id(args.cone), _vector(args.vector))
    _emit_obj(args, out)


def cmd_product(args):
    _emit_obj(args, cx.product(_complex(args.a), _complex(args.b)))


def cmd_cp(args):
    psi = _load(args, args.divisor, (cy.Divisor,))
    cert = cy.cp_certificate(psi)
    doc = {
        "integral": cert.integral,
        "functionals": {io.cone_id(k): [io.num(x) for x in cert.functional(k)] for k in psi.complex.maximal_cones()},
    }
    _emit(args, io.dumps(doc))


def cmd_linequiv(args):
    a = _load(args, args.d1, (cy.Divisor,))
    b = _load(args, args.d2, (cy.Divisor,))
    m = cy.lin_equiv(a, b)
    if m is None:
        _emit(args, "not equivalent")
        raise CheckFailed()
    _emit(args, io.dumps({"equivalent": True, "m": [io.num(x) for x in m]}))


def cmd_cup(args):
    psi = _load(args, args.divisor, (cy.Divisor,))
    A = _load(args, args.weight, (cy.TropicalCycle, cy.ExtendedCycle))
    _emit_obj(args, cy.cup(psi, A))


def cmd_dot(args):
    psi = _load(args, args.divisor, (cy.Divisor,))
    A = _load(args, args.cycle, (cy.TropicalCycle,))
    _emit_obj(args, cy.dot(psi, A))


def cmd_push(args):
    doc = io.read_json(args.morphism)
    f = io.morphism_from_json(doc, io.Loader(), args.morphism)
    A = io.load_any(args.cycle, io.Loader(f.source))
    _emit_obj(args, cy.pushforward(f, A))


def cmd_degree(args):
    A = _load(args, args.cycle, (cy.TropicalCycle, cy.ExtendedCycle))
    _emit(args, str(cy.degree(A)))


def cmd_witness(args):
    paths = list(args.files)
    if len(paths) == 3:
        args.complex = paths.pop(0)
    if len(paths) != 2:
        raise io.FormatError("witness expects [complex] divisor weight")
    psi = _load(args, paths[0], (cy.Divisor,))
    A = _load(args, paths[1], (cy.TropicalCycle,))
    res = cy.graph_witness(psi, A)
    _emit(args, f"identity holds: {'true' if res.check else 'false'}")
    if not res.check:
        raise CheckFailed()


def cmd_m0n(args):
    _emit_obj(args, md.build_m0n(args.n))


def cmd_psi(args):
    if args.boundary:
        psi = md.psi_boundary_rep(args.n, args.k, *args.boundary)
    else:
        psi = md.psi_divisor(args.n, args.k)
    _emit_obj(args, psi)


def cmd_descendant(args):
    if len(args.exponents) != args.n:
        raise cy.DimensionMismatch(f"expected {args.n} exponents, got {len(args.exponents)}")
    _emit(args, str(md.descendant(args.n, args.exponents, args.representation)))


def cmd_gw(args):
    fan = _complex(args.fan)
    deg = io.read_json(args.degree)
    vectors = [[int(io.parse_num(x)) for x in v] for v in deg["degree"]]
    cdoc = io.read_json(args.conditions)
    conditions = []
    for c in cdoc["conditions"]:
        div = c.get("divisor", "psi")
        H = None if div == "psi" else io.divisor_from_json({"values": div}, fan)
        conditions.append((int(c["mark"]), H, int(c.get("power", 1))))
    n = cdoc.get("marks")
    _emit(args, str(md.gw_count(fan, vectors, conditions, n=int(n) if n is not None else None)))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conecalc", description="Exact intersection theory on cone complexes.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result to this path")
    common.add_argument("--format", choices=("json", "tsv"), default="json", help="output format for weight tables")
    common.add_argument("--complex", help="complex file overriding references inside other documents")
    common.add_argument("--jobs", type=int, default=1, help="accepted for compatibility; work runs serially")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, *arguments):
        sp = sub.add_parser(name, parents=[common])
        for a in arguments:
            sp.add_argument(*a[0], **a[1])
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, (["file"], {}))
    add("balance", cmd_balance, (["weight"], {}))
    add("mink-basis", cmd_mink_basis, (["file"], {}), (["-k"], {"type": int, "required": True}))
    add("star", cmd_star, (["file"], {}), (["cone"], {"help": "ray ids joined by '|'"}))
    add("subdivide", cmd_subdivide, (["file"], {}), (["cone"], {}), (["vector"], {"help": "comma-separated rationals"}))
    add("product", cmd_product, (["a"], {}), (["b"], {}))
    add("cp", cmd_cp, (["divisor"], {}))
    add("linequiv", cmd_linequiv, (["d1"], {}), (["d2"], {}))
    add("cup", cmd_cup, (["divisor"], {}), (["weight"], {}))
    add("dot", cmd_dot, (["divisor"], {}), (["cycle"], {}))
    add("push", cmd_push, (["morphism"], {}), (["cycle"], {}))
    add("degree", cmd_degree, (["cycle"], {}))
    add("witness", cmd_witness, (["files"], {"nargs": "+", "metavar": "FILE"}))
    add("m0n", cmd_m0n, (["n"], {"type": int}))
    add("psi", cmd_psi, (["n"], {"type": int}), (["k"], {"type": int}),
        (["--boundary"], {"type": int, "nargs": 2, "metavar": ("A", "B")}))
    add("descendant", cmd_descendant, (["n"], {"type": int}), (["exponents"], {"type": int, "nargs": "*"}),
        (["--representation"], {"choices": ("both", "formula", "boundary"), "default": "both"}))
    add("gw", cmd_gw, (["fan"], {}), (["degree"], {}), (["conditions"], {}))
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CheckFailed:
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
