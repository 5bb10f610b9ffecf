"""Command line interface: ``infquillen <command> ...``.

All numbers are written as exact rational strings ``"p/q"``.  JSON schemas
are described in docs/schemas.md.  The default truncation order comes from
the environment variable INFQUILLEN_ORDER (default 4).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import random
import sys
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Tuple

from . import dupont as dp
from . import mc_realization as mr
from . import transfer as tf
from . import trees as tr
from .free_lie import CDGLPresentation, FiniteDGL, load_dgl
from .graded import GradedSpace, q_str

log = logging.getLogger("infquillen")

ORDER_ENV = "INFQUILLEN_ORDER"
DEFAULT_ORDER = 4
DEFAULT_BOUND = 4
DEFAULT_MAX_DIM = 3


class CLIError(Exception):
    """A user facing error: bad input, validation failure, cap exceeded."""


@dataclass(frozen=True)
class Config:
    order: int = DEFAULT_ORDER
    bound: int = DEFAULT_BOUND
    max_dim: int = DEFAULT_MAX_DIM
    out: Optional[str] = None
    verbosity: int = 0

    def __post_init__(self):
        if self.order < 1:
            raise CLIError("the truncation order must be >= 1")
        if self.bound < 2:
            raise CLIError("the transfer bound must be >= 2")
        if self.max_dim < 0:
            raise CLIError("the dimension cap must be >= 0")

    def check_dim(self, n: int) -> None:
        if n < 0:
            raise CLIError("the simplex dimension must be >= 0")
        if n > self.max_dim:
            raise CLIError(f"dimension {n} exceeds the cap {self.max_dim} (raise it with --max-dim)")


def env_order() -> int:
    raw = os.environ.get(ORDER_ENV)
    if raw is None:
        return DEFAULT_ORDER
    try:
        return int(raw)
    except ValueError:
        raise CLIError(f"{ORDER_ENV} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# input and output


def read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise CLIError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise CLIError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None


def write_json(data, path: Optional[str]) -> None:
    """Write to ``path`` atomically (temp file and rename), or to stdout."""
    text = json.dumps(data, indent=1, sort_keys=False) + "\n"
    if not path:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %s", path)


def load_dgl_file(path: str) -> FiniteDGL:
    data = read_json(path)
    try:
        L = load_dgl(data)
    except (KeyError, TypeError, ValueError) as e:
        raise CLIError(f"{path}: not a valid DGL description: {e}") from None
    if not L.is_valid():
        raise CLIError(f"{path}: the brackets and differential violate "
                       f"{'Jacobi' if not L.check_jacobi() else 'Leibniz' if not L.check_leibniz() else 'd^2 = 0'}")
    if not L.is_nilpotent():
        raise CLIError(f"{path}: the DGL is not nilpotent")
    return L


def vector_json(v) -> dict:
    return {a: q_str(c) for a, c in sorted(v.items()) if c}


def tensor_json(t) -> list:
    return [[list(w), q_str(c)] for w, c in sorted(t.items()) if c]


# ---------------------------------------------------------------------------
# build-ln and transfer


def cmd_build_ln(args, cfg: Config) -> int:
    cfg.check_dim(args.n)
    t0 = time.perf_counter()
    P = dp.build_Ln(args.n, cfg.order)
    write_json(P.to_json(), cfg.out)
    log.info("built L_%d to order %d in %.2fs", args.n, cfg.order, time.perf_counter() - t0)
    return 0


def _ops_json(V: GradedSpace, op: Callable, bound: int, words: Callable[[int], Iterable]) -> dict:
    out = {}
    for k in range(1, bound + 1):
        entries = []
        for w in words(k):
            val = op(k, w)
            if val:
                entries.append([list(w), vector_json(val)])
        out[str(k)] = entries
    return out


def _all_words(V: GradedSpace):
    return lambda k: itertools.product(V.labels, repeat=k)


def _sorted_words(V: GradedSpace):
    return lambda k: itertools.combinations_with_replacement(V.labels, k)


def cmd_transfer(args, cfg: Config) -> int:
    bound = cfg.bound
    R = tf.Retract.from_json(read_json(args.retract)) if args.retract else None
    if args.kind == "coalg":
        if R is not None:
            C = tf.transfer_coalgebra(R, bound)
        else:
            cfg.check_dim(args.n)
            C = dp.chain_coalgebra(args.n, bound)
        data = {"kind": "coalgebra", **C.to_json()}
    elif args.kind == "alg":
        if R is not None:
            A = tf.transfer_algebra(R, bound)
        else:
            cfg.check_dim(args.n)
            A = dp.cochain_ainf(args.n, bound)
        data = {"kind": "algebra", "basis": A.V.to_json()["basis"], "bound": bound,
                "ops": _ops_json(A.V, A.m, bound, _all_words(A.V))}
    else:
        if R is not None:
            S = tf.transfer_lie(R, bound)
        elif args.dgl:
            cfg.check_dim(args.n)
            S = mr.tensor_linf(args.n, load_dgl_file(args.dgl), bound)
        else:
            raise CLIError("transfer --kind lie needs --retract or --dgl")
        data = {"kind": "linf", "basis": S.V.to_json()["basis"], "bound": bound, "symmetric": True,
                "ops": _ops_json(S.V, S.l, bound, _sorted_words(S.V))}
    write_json(data, cfg.out)
    return 0


# ---------------------------------------------------------------------------
# realization


def _abelian_description(L: FiniteDGL) -> dict:
    return {
        "mc_elements": "the degree -1 cycles of L",
        "cycles": [vector_json(v) for v in L.cycles(-1)],
        "gauge_classes": "H_{-1}(L)",
        "homology_rank": L.homology_rank(-1),
    }


def cmd_realize(args, cfg: Config) -> int:
    cfg.check_dim(args.dim)
    L = load_dgl_file(args.dgl)
    rng = random.Random(args.seed)
    simplices = []
    for _ in range(args.samples):
        s = mr.sample_simplex(args.dim, L, rng)
        entry = {"simplex": s.to_json()}
        if args.dim > 0:
            entry["faces"] = [s.face(j).to_json() for j in range(args.dim + 1)]
        simplices.append(entry)
    data = {"dgl": L.name, "dim": args.dim, "simplices": simplices}
    if not L.table:
        data["description"] = _abelian_description(L)
    write_json(data, cfg.out)
    if args.forms:
        s = mr.RealizationSimplex.from_json(simplices[0]["simplex"], L)
        y = mr.mc_I(s.n, L, s.z)
        write_json({"dgl": L.to_json(), "simplex": s.to_json(), "form": y.to_json()}, args.forms)
    return 0


def cmd_nerve_check(args, cfg: Config) -> int:
    data = read_json(args.form)
    try:
        L = load_dgl(data["dgl"])
        y = mr.FormTensor.from_json(data["form"], L)
    except (KeyError, TypeError, ValueError) as e:
        raise CLIError(f"{args.form}: expected keys 'dgl' and 'form': {e}") from None
    checks: List[Tuple[str, bool]] = []
    is_mc = y.mc_residual().is_zero()
    checks.append(("Maurer-Cartan in A_n (x) L", is_mc))
    checks.append(("(K (x) id) y = 0", is_mc and mr.nerve_membership(y, check=False)))
    if "simplex" in data:
        s = mr.RealizationSimplex.from_json(data["simplex"], L, check=False)
        checks.append(("mc_P(y) equals the simplex", mr._same(mr.mc_P(y), s.z)))
    return report(checks)


def _grid_mc_elements(L: FiniteDGL, radius: int, limit: int = 20000) -> List[dict]:
    labels = L.space.in_degree(-1)
    if (2 * radius + 1) ** len(labels) > limit:
        raise CLIError(f"grid of radius {radius} on {len(labels)} coordinates is too large; pass --elements")
    out = []
    for vals in itertools.product(range(-radius, radius + 1), repeat=len(labels)):
        x = {a: v for a, v in zip(labels, vals) if v}
        x = {a: mr.as_q(v) for a, v in x.items()}
        if L.is_mc(x):
            out.append(x)
    return out


def cmd_pi0(args, cfg: Config) -> int:
    L = load_dgl_file(args.dgl)
    if not L.table and not args.elements:
        data = {"dgl": L.name, "abelian": True, "rank": mr.pi0_abelian(L),
                "representatives": [vector_json(v) for v in L.homology_representatives(-1)]}
        write_json(data, cfg.out)
        return 0
    if args.elements:
        raw = read_json(args.elements)
        elements = [{a: mr.as_q(c) for a, c in v.items()} for v in raw]
    else:
        elements = _grid_mc_elements(L, args.grid)
    try:
        classes = mr.pi0(L, elements)
    except mr.NotMaurerCartan as e:
        raise CLIError(str(e)) from None
    data = {"dgl": L.name, "abelian": not L.table, "elements": len(elements),
            "classes": [[vector_json(elements[i]) for i in cl] for cl in classes]}
    write_json(data, cfg.out)
    return 0


# ---------------------------------------------------------------------------
# verification suites


def report(checks: List[Tuple[str, bool]]) -> int:
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    failed = sum(1 for _, ok in checks if not ok)
    print(f"{len(checks) - failed}/{len(checks)} identities hold")
    return 0 if failed == 0 else 1


def _timed(name: str, f: Callable[[], bool]) -> Tuple[str, bool]:
    t0 = time.perf_counter()
    ok = f()
    return f"{name} [{time.perf_counter() - t0:.2f}s]", ok


def random_graded_space(rng: random.Random, prefix: str, max_dim: int = 4) -> GradedSpace:
    dim = rng.randint(2, max_dim)
    degs = [rng.randint(-1, 2) for _ in range(dim)]
    degs[0], degs[1] = 0, 1
    return GradedSpace(tuple(f"{prefix}{i}" for i in range(dim)), tuple(degs))


def suite_lie_polynomial(args, cfg: Config) -> List[Tuple[str, bool]]:
    rng = random.Random(args.seed)
    pairs = []
    for _ in range(args.samples):
        V, W = random_graded_space(rng, "v"), random_graded_space(rng, "w")
        pairs.append((tf.random_lie_coproduct(V, rng), tf.random_linear_map(V, W, rng)))
    checks = []
    for k in range(2, args.max_leaves + 1):
        for T in tr.enumerate_nonplanar(k):
            checks.append(_timed(f"tree {tr.to_string(T)} on {len(pairs)} pairs",
                                 lambda T=T: all(tf.check_lie_polynomial_theorem(f, g, T)[0] for f, g in pairs)))
    return checks


def suite_trees(args, cfg: Config) -> List[Tuple[str, bool]]:
    checks = []
    for k in range(1, args.max_leaves + 1):
        planar = list(tr.enumerate_planar(k))
        nonplanar = list(tr.enumerate_nonplanar(k))
        checks.append((f"planar trees with {k} leaves = Catalan({k - 1})", len(planar) == tr.catalan(k - 1)))
        checks.append((f"sum of planar embeddings with {k} leaves = Catalan({k - 1})",
                       sum(len(tr.planar_embeddings(T)) for T in nonplanar) == tr.catalan(k - 1)))
        checks.append((f"|embeddings| |Aut| = 2^{k - 1} for {k} leaves",
                       all(len(tr.planar_embeddings(T)) * tr.aut_order(T) == 2 ** (k - 1) for T in nonplanar)))
    return checks


def suite_dupont(args, cfg: Config) -> List[Tuple[str, bool]]:
    cfg.check_dim(args.n)
    return [_timed(f"retract identities on Delta^{m}, polynomial degree <= {args.deg}",
                   lambda m=m: not dp.retract_identity_failures(m, args.deg)) for m in range(args.n + 1)]


def suite_ln(args, cfg: Config) -> List[Tuple[str, bool]]:
    cfg.check_dim(args.n)
    return [_timed(f"L_{m} to order {cfg.order}: d^2 = 0, vertices, linear part, cosimplicial",
                   lambda m=m: not dp.Ln_failures(m, cfg.order)) for m in range(args.n + 1)]


def _shuffle_sum_vanishes(A, word, i) -> bool:
    from .graded import act, shuffles, total_sign

    degs = [A.V.degree(x) for x in word]
    out = {}
    for s in shuffles(i, len(word) - i):
        for x, c in A.m(len(word), act(s, word)).items():
            out[x] = out.get(x, 0) + total_sign(s, degs) * c
    return not any(out.values())


def suite_cinf(args, cfg: Config) -> List[Tuple[str, bool]]:
    cfg.check_dim(args.n)
    checks = []
    for m in range(args.n + 1):
        A = dp.cochain_ainf(m, cfg.bound)
        C = dp.chain_coalgebra(m, cfg.bound)
        for k in range(2, cfg.bound + 1):
            words = list(itertools.product(A.V.labels, repeat=k))
            checks.append(_timed(f"m_{k} on C^*(Delta^{m}) kills proper shuffles",
                                 lambda A=A, k=k, words=words: all(_shuffle_sum_vanishes(A, w, i)
                                                                   for w in words for i in range(1, k))))
            checks.append(_timed(f"A-infinity relation of arity {k} on C^*(Delta^{m})",
                                 lambda A=A, words=words: all(not A.relation(w) for w in words)))
        checks.append(_timed(f"coalgebra relations on C_*(Delta^{m}) up to {cfg.bound}", C.relations_hold))
    return checks


def _random_images(P: CDGLPresentation, L: FiniteDGL, rng: random.Random) -> dict:
    return {g: {x: mr.as_q(rng.randint(-2, 2)) for x in L.space.in_degree(P.generators.degree(g))}
            for g in P.generators.labels}


def suite_mc_bijection(args, cfg: Config) -> List[Tuple[str, bool]]:
    cfg.check_dim(args.n)
    L = load_dgl_file(args.dgl)
    rng = random.Random(args.seed)
    checks = []
    for m in range(args.n + 1):
        P = dp.build_Ln(m, mr._order_for(L))
        ell = mr.tensor_l_power(m, L)
        samples = [mr.sample_simplex(m, L, rng) for _ in range(args.samples)]

        def round_trips(samples=samples, P=P, m=m):
            for s in samples:
                f = s.to_morphism()
                if not mr.is_morphism(P, L, f):
                    return False
                phi = mr.morphism_to_mc(P, L, f)
                if mr.mc_to_morphism(P, L, phi) != {g: dict(v) for g, v in f.items()}:
                    return False
                if mr.RealizationSimplex.from_morphism(m, L, f) != s:
                    return False
                if mr.RealizationSimplex.from_json(s.to_json(), L) != s:
                    return False
            return True

        checks.append(_timed(f"morphism <-> MC round trips on {len(samples)} {m}-simplices", round_trips))
        maps = [s.to_morphism() for s in samples] + [_random_images(P, L, rng) for _ in range(args.samples)]
        for k in range(1, cfg.bound + 1):
            checks.append(_timed(f"f d_{k} s^-1 = -(1/{k}!) l_{k}(f s^-1, ...) on Delta^{m}",
                                 lambda P=P, ell=ell, k=k: all(not mr.main_identity_defects(P, L, f, k, ell)
                                                               for f in maps)))
    return checks


SUITES = {
    "lie-polynomial": suite_lie_polynomial,
    "trees": suite_trees,
    "dupont": suite_dupont,
    "ln": suite_ln,
    "cinf": suite_cinf,
    "mc-bijection": suite_mc_bijection,
}


def cmd_verify(args, cfg: Config) -> int:
    if args.suite not in SUITES:
        raise CLIError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    if args.suite == "mc-bijection" and not args.dgl:
        raise CLIError("verify mc-bijection needs --dgl")
    return report(SUITES[args.suite](args, cfg))


# ---------------------------------------------------------------------------
# export and import


def detect_kind(data) -> str:
    if not isinstance(data, dict):
        raise CLIError("expected a JSON object at the top level")
    if "generators" in data:
        return "presentation"
    if "basis" in data and "kind" not in data:
        return "dgl"
    if {"M", "V", "i", "p", "K"} <= set(data):
        return "retract"
    if "space" in data and "ops" in data:
        return "coalgebra"
    if "dgl" in data and "form" in data:
        return "form"
    raise CLIError("unrecognized JSON document (see docs/schemas.md)")


def cmd_export(args, cfg: Config) -> int:
    """Normalize a presentation or DGL file to the finite DGL format."""
    L = load_dgl_file(args.dgl)
    write_json(L.to_json(), cfg.out)
    return 0


def cmd_import(args, cfg: Config) -> int:
    """Validate any supported document and optionally write its normalized form."""
    data = read_json(args.file)
    kind = detect_kind(data)
    checks: List[Tuple[str, bool]] = []
    try:
        if kind == "presentation":
            P = CDGLPresentation.from_json(data)
            checks.append((f"presentation {P.name!r}: d^2 = 0 to order {P.order}", P.d_squared_vanishes()))
            norm = P.to_json()
        elif kind == "dgl":
            L = FiniteDGL.from_json(data)
            checks += [("Jacobi", L.check_jacobi()), ("Leibniz", L.check_leibniz()),
                       ("d^2 = 0", L.check_d_squared()), ("nilpotent", L.is_nilpotent())]
            norm = L.to_json()
        elif kind == "retract":
            R = tf.Retract.from_json(data)
            fails = R.identity_failures()
            checks.append((f"retract identities ({', '.join(fails) or 'all hold'})", not fails))
            norm = R.to_json()
        elif kind == "coalgebra":
            C = tf.AInfCoalgebra.from_json(data)
            checks.append((f"A-infinity coalgebra relations up to {C.bound}", C.relations_hold()))
            norm = C.to_json()
        else:
            L = load_dgl(data["dgl"])
            y = mr.FormTensor.from_json(data["form"], L)
            checks.append(("form is Maurer-Cartan", y.mc_residual().is_zero()))
            norm = {"dgl": L.to_json(), "form": y.to_json(), **({"simplex": data["simplex"]} if "simplex" in data else {})}
    except (KeyError, TypeError, ValueError) as e:
        raise CLIError(f"{args.file}: invalid {kind} document: {e}") from None
    print(f"{args.file}: {kind}")
    code = report(checks)
    if cfg.out and code == 0:
        write_json(norm, cfg.out)
    return code


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, default=None,
                        help=f"truncation order N (default ${ORDER_ENV} or {DEFAULT_ORDER})")
    common.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="transfer bound k_max")
    common.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM, help="simplex dimension cap")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=0, help="random seed for sampling")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="infquillen", description="Exact tree transfer, the models L_n and "
                                "Maurer-Cartan realization.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build-ln", parents=[common], help="write the model L_n of the n-simplex")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_build_ln)

    s = sub.add_parser("transfer", parents=[common], help="write transferred operations")
    s.add_argument("--kind", choices=("coalg", "alg", "lie"), required=True)
    s.add_argument("--n", type=int, default=1, help="use the Dupont retract of the n-simplex")
    s.add_argument("--retract", help="retract JSON file instead of the Dupont retract")
    s.add_argument("--dgl", help="for --kind lie: transfer onto C^*(Delta^n) (x) L")
    s.set_defaults(func=cmd_transfer)

    s = sub.add_parser("realize", parents=[common], help="sample simplices of the realization")
    s.add_argument("--dgl", required=True)
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--samples", type=int, default=3)
    s.add_argument("--forms", help="also write mc_I of the first simplex here, for nerve-check")
    s.set_defaults(func=cmd_realize)

    s = sub.add_parser("nerve-check", parents=[common], help="check a form against the nerve")
    s.add_argument("--form", required=True)
    s.set_defaults(func=cmd_nerve_check)

    s = sub.add_parser("pi0", parents=[common], help="gauge classes of Maurer-Cartan elements")
    s.add_argument("--dgl", required=True)
    s.add_argument("--elements", help="JSON list of MC elements (default: integer grid)")
    s.add_argument("--grid", type=int, default=1, help="grid radius for candidate elements")
    s.set_defaults(func=cmd_pi0)

    s = sub.add_parser("verify", parents=[common], help="run an identity suite")
    s.add_argument("suite", help=", ".join(SUITES))
    s.add_argument("--max-leaves", type=int, default=5)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--deg", type=int, default=4)
    s.add_argument("--dgl")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("export", parents=[common], help="write a DGL in the finite DGL format")
    s.add_argument("--dgl", required=True)
    s.set_defaults(func=cmd_export)

    s = sub.add_parser("import", parents=[common], help="validate a JSON document")
    s.add_argument("--file", required=True)
    s.set_defaults(func=cmd_import)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
    try:
        order = args.order if args.order is not None else env_order()
        cfg = Config(order=order, bound=args.bound, max_dim=args.max_dim, out=args.out, verbosity=args.verbose)
        return args.func(args, cfg)
    except CLIError as e:
        print(f"infquillen: error: {e}", file=sys.stderr)
        return 2
    except (mr.NotMaurerCartan, mr.NotAMorphism) as e:
        print(f"infquillen: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
