"""Homotopy retracts and the tree formulas of the homotopy transfer theorem.

A retract (M, V, i, p, K) carries a strict structure on M (product,
coproduct or bracket).  Transferred operations are sums over binary trees:

* coalgebras: root labelled i, internal vertices by the coproduct, internal
  edges by K, leaves by p;
* algebras and Lie algebras: leaves labelled i, internal vertices by the
  product or bracket, internal edges by K, root by p.

Tensor products of operators act with the Koszul rule
``(f (x) g)(a (x) b) = (-1)^{|g||a|} f(a) (x) g(b)``; there are no other signs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

from . import trees as tr
from .graded import (
    GradedLinearMap,
    GradedSpace,
    Tensor,
    Vector,
    add_scaled,
    add_to,
    as_q,
    parity_sign,
    q_str,
    shuffles,
    symmetrize,
    total_sign,
    act,
    koszul_sign,
    suspend,
    suspend_label,
)

KINDS = ("DGA", "CDGA", "DGC", "CDGC", "DGL")


class RetractError(ValueError):
    pass


# ---------------------------------------------------------------------------
# retracts


class Retract:
    """A homotopy retract of chain complexes with a strict structure on M.

    ``structure`` holds the operation on M as a table on basis labels:
    ``{(a, b): vector}`` for a product or bracket, ``{a: {(b, c): coeff}}``
    for a coproduct.
    """

    def __init__(self, M: GradedSpace, V: GradedSpace, i: GradedLinearMap, p: GradedLinearMap,
                 K: GradedLinearMap, dM: GradedLinearMap, dV: GradedLinearMap,
                 kind: str, structure: Mapping, name: str = ""):
        if kind not in KINDS:
            raise RetractError(f"unknown structure kind {kind!r}")
        self.M, self.V = M, V
        self.i, self.p, self.K = i, p, K
        self.dM, self.dV = dM, dV
        self.kind = kind
        self.name = name
        if kind in ("DGC", "CDGC"):
            self.coproduct = {a: {tuple(k): as_q(c) for k, c in t.items() if c} for a, t in structure.items()}
            self.product = None
        else:
            self.product = {tuple(k): {l: as_q(c) for l, c in v.items() if c} for k, v in structure.items()}
            self.coproduct = None
        self._check_shapes()
        self.flags = self.side_conditions()

    def _check_shapes(self):
        checks = [(self.i, self.V, self.M, 0), (self.p, self.M, self.V, 0), (self.K, self.M, self.M, 1),
                  (self.dM, self.M, self.M, -1), (self.dV, self.V, self.V, -1)]
        for f, s, t, d in checks:
            if f.source != s or f.target != t or f.degree != d:
                raise RetractError("retract maps have wrong source, target or degree")

    # identities ---------------------------------------------------------
    def identity_failures(self):
        """Names of the retract identities that fail."""
        out = []
        idM, idV = GradedLinearMap.identity(self.M), GradedLinearMap.identity(self.V)
        if not (self.dM @ self.dM).is_zero():
            out.append("dM^2 = 0")
        if not (self.dV @ self.dV).is_zero():
            out.append("dV^2 = 0")
        if self.dM @ self.i != self.i @ self.dV:
            out.append("i chain map")
        if self.p @ self.dM != self.dV @ self.p:
            out.append("p chain map")
        if self.p @ self.i != idV:
            out.append("pi = id")
        if self.dM @ self.K + self.K @ self.dM != self.i @ self.p - idM:
            out.append("dK + Kd = ip - id")
        return out

    def is_valid(self):
        return not self.identity_failures()

    def side_conditions(self):
        return {
            "KK=0": (self.K @ self.K).is_zero(),
            "Ki=0": (self.K @ self.i).is_zero(),
            "pK=0": (self.p @ self.K).is_zero(),
        }

    # the operations as callables on M-vectors ----------------------------
    def op(self, x: Vector, y: Vector) -> Vector:
        out: Vector = {}
        for a, ca in x.items():
            for b, cb in y.items():
                add_scaled(out, self.product.get((a, b), {}), ca * cb)
        return out

    def coop_basis(self, a: str):
        return self.coproduct.get(a, {})

    def mdeg(self, a: str) -> int:
        return self.M.degree(a)

    def i_basis(self, v: str) -> Vector:
        return self.i.column(v)

    def apply_p(self, x: Vector) -> Vector:
        return self.p(x)

    def apply_K(self, x: Vector) -> Vector:
        return self.K(x)

    def to_json(self):
        if self.coproduct is not None:
            st = {a: [[b, c, q_str(v)] for (b, c), v in sorted(t.items())] for a, t in sorted(self.coproduct.items())}
        else:
            st = [[a, b, [[l, q_str(c)] for l, c in sorted(v.items())]] for (a, b), v in sorted(self.product.items())]
        return {"name": self.name, "kind": self.kind, "M": self.M.to_json(), "V": self.V.to_json(),
                "i": self.i.to_json(), "p": self.p.to_json(), "K": self.K.to_json(),
                "dM": self.dM.to_json(), "dV": self.dV.to_json(), "structure": st}

    @classmethod
    def from_json(cls, data):
        kind = data["kind"]
        if kind in ("DGC", "CDGC"):
            st = {a: {(b, c): as_q(v) for b, c, v in t} for a, t in data["structure"].items()}
        else:
            st = {(a, b): {l: as_q(c) for l, c in v} for a, b, v in data["structure"]}
        return cls(GradedSpace.from_json(data["M"]), GradedSpace.from_json(data["V"]),
                   GradedLinearMap.from_json(data["i"]), GradedLinearMap.from_json(data["p"]),
                   GradedLinearMap.from_json(data["K"]), GradedLinearMap.from_json(data["dM"]),
                   GradedLinearMap.from_json(data["dV"]), kind, st, data.get("name", ""))


def trivial_retract(M: GradedSpace, dM: GradedLinearMap, kind: str, structure, name="trivial"):
    """M = V, i = p = id, K = 0."""
    idm = GradedLinearMap.identity(M)
    return Retract(M, M, idm, idm, GradedLinearMap.zero(M, M, 1), dM, dM, kind, structure, name)


def _apply(columns, v):
    out = {}
    for a, c in v.items():
        add_scaled(out, columns.get(a, {}), c)
    return {k: x for k, x in out.items() if x}


def contraction_retract(M: GradedSpace, dM: GradedLinearMap, kind: str, structure, keep_pairs: int = 0,
                        name: str = "", rng=None) -> "Retract":
    """Retract of M onto homology plus ``keep_pairs`` acyclic pairs.

    M splits as H + C + dC with d : C -> dC an isomorphism; K sends dc to -c on
    the contracted pairs and vanishes elsewhere, so K^2 = Ki = pK = 0.  With a
    ``random.Random`` the complements C and H are sheared by random cycles and
    boundaries, giving a generic (non coordinate-aligned) retract.
    """
    from . import linalg

    d = dM.columns()
    rows = list(M.labels)
    H, pairs = [], []
    for n in sorted(set(M.degrees)):
        deg_n = [l for l in rows if M.degree(l) == n]
        Zn = [{deg_n[j]: c for j, c in enumerate(v) if c} for v in linalg.nullspace([d.get(l, {}) for l in deg_n], rows)]
        Cn = linalg.complement_labels(Zn, deg_n) if Zn else list(deg_n)
        for c in Cn:
            cv = {c: Fraction(1)}
            if rng is not None:
                for z in Zn:
                    add_scaled(cv, z, rng.randint(-2, 2))
            pairs.append((cv, _apply(d, cv)))
        prev = [l for l in rows if M.degree(l) == n + 1]
        prev_C = [l for l in linalg.complement_labels(
            [{prev[j]: c for j, c in enumerate(v) if c} for v in linalg.nullspace([d.get(l, {}) for l in prev], rows)],
            prev)] if prev else []
        Bn = [dict(d.get(c, {})) for c in prev_C]
        piv = linalg.pivot_columns(Bn + Zn, rows)
        for p in piv:
            if p >= len(Bn):
                h = dict(Zn[p - len(Bn)])
                if rng is not None:
                    for b in Bn:
                        add_scaled(h, b, rng.randint(-2, 2))
                H.append({m: c for m, c in h.items() if c})
    keep, contract = pairs[:keep_pairs], pairs[keep_pairs:]
    Vpairs = []
    for j, (c, b) in enumerate(keep):
        Vpairs.append((f"u{j}", c))
        Vpairs.append((f"du{j}", b))
    V_vecs = [(f"h{j}", h) for j, h in enumerate(H)] + Vpairs
    V = GradedSpace.from_pairs((l, M.vector_degree(v)) for l, v in V_vecs)
    basis = [v for _, v in V_vecs] + [c for c, _ in contract] + [b for _, b in contract]
    coords = linalg.coordinates(basis, rows)
    nv, nc = len(V_vecs), len(contract)
    i = GradedLinearMap(V, M, 0, {(m, l): c for l, v in V_vecs for m, c in v.items()})
    p_entries, K_entries = {}, {}
    for m in rows:
        cs = coords[m]
        for j in range(nv):
            if cs[j]:
                p_entries[(V_vecs[j][0], m)] = cs[j]
        for j in range(nc):
            cb = cs[nv + nc + j]
            if cb:
                for m2, c in contract[j][0].items():
                    add_to(K_entries, (m2, m), -cb * c)
    p = GradedLinearMap(M, V, 0, p_entries)
    K = GradedLinearMap(M, M, 1, K_entries)
    dV = p @ dM @ i
    return Retract(M, V, i, p, K, dM, dV, kind, structure, name)


# ---------------------------------------------------------------------------
# tree evaluation


def _tensor_product(x: Tensor, y: Tensor, sign=1) -> Tensor:
    out: Tensor = {}
    for a, ca in x.items():
        for b, cb in y.items():
            add_to(out, a + b, sign * ca * cb)
    return out


def suspension_sign(degrees: Sequence[int], shift: int) -> int:
    """Sign of (s^shift)^{(x)k} applied to x_1 (x) ... (x) x_k (odd shift)."""
    k = len(degrees)
    return parity_sign(shift * sum((k - 1 - l) * d for l, d in enumerate(degrees)))


class AlgebraTreeEvaluator:
    """m_T or l~_T for a retract with a binary operation on M.

    Trees are evaluated on the suspension sM, where b = s m (s^-1 (x) s^-1)
    has degree -1 and every edge operator K b has degree 0, so the Koszul rule
    produces no signs along edges.  Translated back to M this is a factor
    (-1)^{|s a|} at each vertex, a being the left input, and an overall
    (-1)^{k(k-1)/2} times the sign of s^{(x)k} on the inputs.  For algebras
    this matches the relation sign (-1)^{k+n+kn}.  For Lie algebras the same
    signs give l_2 = the bracket and the MC equation sum_k l_k(x^k)/k! = 0;
    on equal odd inputs every tree then counts with sign +1, as in the fixed
    point equation Y = ix + 1/2 K[Y, Y].

    ``i``, ``p``, ``K``, ``op(x, y, sign)`` are callables on M-elements, which
    can be any objects; ``is_zero`` tests them.  Results are memoized.
    """

    def __init__(self, V: GradedSpace, i: Callable, p: Callable, K: Callable, op: Callable,
                 is_zero: Callable):
        self.V, self.i, self.p, self.K, self.op = V, i, p, K, op
        self.is_zero = is_zero
        self._memo: Dict = {}

    def _eval(self, S, word: Tuple[str, ...]):
        key = (S, word)
        if key in self._memo:
            return self._memo[key]
        if tr.is_leaf(S):
            res = self.i(word[0])
        else:
            k1 = tr.leaves(S[0])
            x = self._eval_edge(S[0], word[:k1])
            y = self._eval_edge(S[1], word[k1:]) if x is not None else None
            res = None
            if x is not None and y is not None:
                res = self.op(x, y, parity_sign(self.V.word_degree(word[:k1]) + k1))
        if res is not None and self.is_zero(res):
            res = None
        self._memo[key] = res
        return res

    def _eval_edge(self, S, word):
        if tr.is_leaf(S):
            return self._eval(S, word)
        key = ("K", S, word)
        if key not in self._memo:
            x = self._eval(S, word)
            res = None if x is None else self.K(x)
            self._memo[key] = None if res is None or self.is_zero(res) else res
        return self._memo[key]

    def tree_op(self, T, word: Sequence[str]) -> Vector:
        word = tuple(word)
        k = len(word)
        if k != tr.leaves(T):
            raise ValueError("word length does not match the number of leaves")
        x = self._eval(T, word)
        if x is None:
            return {}
        sign = suspension_sign([self.V.degree(a) for a in word], 1)
        sign *= parity_sign(k * (k - 1) // 2)
        return {a: sign * c for a, c in self.p(x).items() if c}

    def op_k(self, k: int, word: Sequence[str]) -> Vector:
        out: Vector = {}
        for T in tr.enumerate_planar(k):
            add_scaled(out, self.tree_op(T, word))
        return {a: c for a, c in out.items() if c}


def vector_evaluator(R: "Retract") -> AlgebraTreeEvaluator:
    def op(x, y, sign):
        out = R.op(x, y)
        return {a: sign * c for a, c in out.items() if c}
    return AlgebraTreeEvaluator(R.V, R.i_basis, R.apply_p, R.apply_K, op, lambda v: not any(v.values()))


class CoalgebraTreeEvaluator:
    """Delta_T for a retract whose M is a coalgebra with a finite basis.

    Dual to the algebra case: trees are evaluated on the desuspension s^-1 M,
    where the coproduct picks up (-1)^{|a|} for a left tensor factor a and
    every edge operator has degree 0.
    """

    def __init__(self, R: Retract):
        self.R = R
        self._child: Dict = {}
        self._node: Dict = {}

    def _node_eval(self, S, b: str) -> Tensor:
        key = (S, b)
        if key in self._node:
            return self._node[key]
        out: Tensor = {}
        for (x1, x2), c in self.R.coop_basis(b).items():
            left = self._child_eval(S[0], x1)
            if not left:
                continue
            right = self._child_eval(S[1], x2)
            if not right:
                continue
            add_scaled(out, _tensor_product(left, right), parity_sign(self.R.mdeg(x1)) * c)
        self._node[key] = out
        return out

    def _child_eval(self, S, a: str) -> Tensor:
        key = (S, a)
        if key in self._child:
            return self._child[key]
        out: Tensor = {}
        if tr.is_leaf(S):
            for v, c in self.R.p.column(a).items():
                out[(v,)] = c
        else:
            for b, c in self.R.K.column(a).items():
                add_scaled(out, self._node_eval(S, b), c)
        self._child[key] = out
        return out

    def tree_op(self, T, v: str) -> Tensor:
        if tr.is_leaf(T):
            return {(v,): Fraction(1)}
        k = tr.leaves(T)
        out: Tensor = {}
        for b, c in self.R.i.column(v).items():
            add_scaled(out, self._node_eval(T, b), c)
        res = {}
        for w, c in out.items():
            if c:
                degs = [self.R.V.degree(x) - 1 for x in w]
                res[w] = c * parity_sign(k * (k - 1) // 2) * suspension_sign(degs, 1)
        return res

    def op_k(self, k: int, v: str) -> Tensor:
        out: Tensor = {}
        for T in tr.enumerate_planar(k):
            add_scaled(out, self.tree_op(T, v))
        return {w: c for w, c in out.items() if c}


# ---------------------------------------------------------------------------
# infinity structures


def _apply_at(op: Callable[[Tuple[str, ...]], Mapping], word, pos, k, V, op_degree) -> Tensor:
    """(id^pos (x) op (x) id^rest)(word) with the Koszul sign of op passing word[:pos]."""
    prefix, mid, suffix = word[:pos], word[pos:pos + k], word[pos + k:]
    sign = parity_sign(op_degree * V.word_degree(prefix))
    out: Tensor = {}
    for x, c in op(mid).items():
        add_to(out, prefix + (x,) + suffix, sign * c)
    return out


def _tensor_apply_at(op: Callable[[str], Mapping], word, pos, V, op_degree) -> Tensor:
    """(id^pos (x) op (x) id^rest)(word) for an operation V -> V^{(x)k}."""
    prefix, x, suffix = word[:pos], word[pos], word[pos + 1:]
    sign = parity_sign(op_degree * V.word_degree(prefix))
    out: Tensor = {}
    for w, c in op(x).items():
        add_to(out, prefix + tuple(w) + suffix, sign * c)
    return out


class AInfAlgebra:
    """Operations m_k : V^{(x)k} -> V of degree k-2, k <= bound."""

    def __init__(self, V: GradedSpace, ops: Mapping[int, Callable], bound: int, commutative=False):
        self.V, self.bound, self.commutative = V, bound, commutative
        self._ops = dict(ops)
        self._cache: Dict = {}

    def m(self, k: int, word) -> Vector:
        word = tuple(word)
        if len(word) != k:
            raise ValueError("arity mismatch")
        if k > self.bound or k not in self._ops:
            return {}
        key = (k, word)
        if key not in self._cache:
            self._cache[key] = {x: c for x, c in self._ops[k](word).items() if c}
        return self._cache[key]

    def relation(self, word) -> Vector:
        """Left side of the A-infinity relation on ``word`` (len(word) <= bound)."""
        word = tuple(word)
        i = len(word)
        out: Vector = {}
        for k in range(1, i + 1):
            for n in range(0, i - k + 1):
                inner = _apply_at(lambda w: self.m(k, w), word, n, k, self.V, k - 2)
                s = parity_sign(k + n + k * n)
                for w2, c in inner.items():
                    add_scaled(out, self.m(i - k + 1, w2), s * c)
        return {x: c for x, c in out.items() if c}

    def shuffle_defect(self, word, upper=None) -> Vector:
        """m_k applied to the proper shuffle sum of ``word`` (i = 1..k-1 by default)."""
        k = len(word)
        upper = k - 1 if upper is None else upper
        degs = [self.V.degree(x) for x in word]
        out: Vector = {}
        for i in range(1, upper + 1):
            for s in shuffles(i, k - i):
                add_scaled(out, self.m(k, act(s, word)), total_sign(s, degs))
        return {x: c for x, c in out.items() if c}


class AInfCoalgebra:
    """Operations Delta_k : V -> V^{(x)k} of degree k-2, stored as tables for k <= bound."""

    def __init__(self, V: GradedSpace, ops: Mapping[int, Mapping[str, Tensor]], bound: int, commutative=False):
        self.V, self.bound, self.commutative = V, bound, commutative
        self.ops = {k: {v: {tuple(w): as_q(c) for w, c in t.items() if c} for v, t in table.items()}
                    for k, table in ops.items() if k <= bound}

    def delta(self, k: int, v: str) -> Tensor:
        return self.ops.get(k, {}).get(v, {})

    def relation(self, v: str, i: int) -> Tensor:
        out: Tensor = {}
        for k in range(1, i + 1):
            outer = self.delta(i - k + 1, v)
            for n in range(0, i - k + 1):
                s = parity_sign(k + n + k * n)
                pos = i - k - n
                for w, c in outer.items():
                    add_scaled(out, _tensor_apply_at(lambda x: self.delta(k, x), w, pos, self.V, k - 2), s * c)
        return {w: c for w, c in out.items() if c}

    def unshuffle_defect(self, v: str, k: int, upper=None) -> Tensor:
        """tau o Delta_k (v) over proper unshuffles (i = 1..k-1 by default)."""
        upper = k - 1 if upper is None else upper
        out: Tensor = {}
        for w, c in self.delta(k, v).items():
            degs = [self.V.degree(x) for x in w]
            for i in range(1, upper + 1):
                for s in shuffles(i, k - i):
                    t = inverse_perm(s)
                    add_to(out, act(t, w), c * total_sign(t, degs))
        return {w: c for w, c in out.items() if c}

    def relations_hold(self, upto=None) -> bool:
        upto = self.bound if upto is None else upto
        return all(not self.relation(v, i) for v in self.V.labels for i in range(1, upto + 1))

    def to_json(self):
        return {"space": self.V.to_json(), "bound": self.bound, "commutative": self.commutative,
                "ops": {str(k): {v: [[list(w), q_str(c)] for w, c in sorted(t.items())] for v, t in sorted(tab.items()) if t}
                        for k, tab in sorted(self.ops.items())}}

    @classmethod
    def from_json(cls, data):
        ops = {int(k): {v: {tuple(w): as_q(c) for w, c in t} for v, t in tab.items()} for k, tab in data["ops"].items()}
        return cls(GradedSpace.from_json(data["space"]), ops, data["bound"], data.get("commutative", False))


def inverse_perm(s):
    from .graded import inverse
    return inverse(s)


CInfCoalgebra = AInfCoalgebra


class LInfStructure:
    """Operations l_k : V^{(x)k} -> V of degree k-2, k <= bound."""

    def __init__(self, V: GradedSpace, ops: Mapping[int, Callable], bound: int):
        self.V, self.bound = V, bound
        self._ops = dict(ops)
        self._cache: Dict = {}

    def l(self, k: int, word) -> Vector:
        word = tuple(word)
        if k > self.bound or k not in self._ops:
            return {}
        key = (k, word)
        if key not in self._cache:
            self._cache[key] = {x: c for x, c in self._ops[k](word).items() if c}
        return self._cache[key]

    def l_multilinear(self, k: int, vectors: Sequence[Vector]) -> Vector:
        out: Vector = {}
        acc = {(): Fraction(1)}
        for v in vectors:
            acc = {w + (x,): c * d for w, c in acc.items() for x, d in v.items() if d}
        for w, c in acc.items():
            add_scaled(out, self.l(k, w), c)
        return {x: c for x, c in out.items() if c}

    def symmetry_defect(self, word, sigma) -> Vector:
        """l(x_sigma) - e_sigma e l(x)."""
        degs = [self.V.degree(x) for x in word]
        out = dict(self.l(len(word), act(sigma, word)))
        add_scaled(out, self.l(len(word), word), -total_sign(sigma, degs))
        return {x: c for x, c in out.items() if c}

    def jacobi(self, word) -> Vector:
        """Generalized Jacobi sum over unshuffles, outer operation of arity j = n + 1 - i.

        The operations are normalized so that the MC equation is
        sum_k l_k(x^k)/k! = 0; in terms of (-1)^{k(k-1)/2} l_k the sum below
        is the usual one with signs (-1)^{i(j-1)}.
        """
        word = tuple(word)
        n = len(word)
        degs = [self.V.degree(x) for x in word]
        out: Vector = {}
        for i in range(1, n + 1):
            j = n + 1 - i
            for s in shuffles(i, n - i):
                # unshuffles: the first i letters keep their relative order
                t = inverse_perm(s)
                w = act(t, word)
                sign = total_sign(t, degs) * parity_sign(i * (j - 1) + i * (i - 1) // 2 + j * (j - 1) // 2)
                inner = self.l(i, w[:i])
                for x, c in inner.items():
                    add_scaled(out, self.l(j, (x,) + w[i:]), sign * c)
        return {x: c for x, c in out.items() if c}

    def mc_residual(self, x: Vector, upto=None) -> Vector:
        upto = self.bound if upto is None else upto
        out: Vector = {}
        fact = 1
        for k in range(1, upto + 1):
            fact *= k
            add_scaled(out, self.l_multilinear(k, [x] * k), Fraction(1, fact))
        return {y: c for y, c in out.items() if c}


# ---------------------------------------------------------------------------
# transferred structures


DEFAULT_BOUND = 4


def _check_retract(R: Retract, kinds):
    if R.kind not in kinds:
        raise RetractError(f"retract carries a {R.kind} structure, expected one of {kinds}")
    failures = R.identity_failures()
    if failures:
        raise RetractError("retract identities fail: " + ", ".join(failures))


def lie_tree_op(ev: AlgebraTreeEvaluator, T, word) -> Vector:
    """l_T = l~_T o S_k on a basis word."""
    word = tuple(word)
    degs = [ev.V.degree(a) for a in word]
    out: Vector = {}
    for s in symmetrize(len(word)):
        add_scaled(out, ev.tree_op(T, act(s, word)), total_sign(s, degs))
    return {a: c for a, c in out.items() if c}


def lie_ops(ev: AlgebraTreeEvaluator, dV: Callable, bound: int) -> Dict[int, Callable]:
    """l_1 = dV and l_k = sum over non planar T of l_T / |Aut T|."""
    ops = {1: lambda w: dV(w[0])}

    def make(k):
        def lk(word):
            out: Vector = {}
            for T in tr.enumerate_nonplanar(k):
                add_scaled(out, lie_tree_op(ev, T, word), Fraction(1, tr.aut_order(T)))
            return out
        return lk

    for k in range(2, bound + 1):
        ops[k] = make(k)
    return ops


def transfer_algebra(R: Retract, bound: int = DEFAULT_BOUND) -> AInfAlgebra:
    _check_retract(R, ("DGA", "CDGA"))
    ev = vector_evaluator(R)
    ops = {1: lambda w: R.dV({w[0]: Fraction(1)})}
    for k in range(2, bound + 1):
        ops[k] = (lambda k: lambda w: ev.op_k(k, w))(k)
    return AInfAlgebra(R.V, ops, bound, commutative=R.kind == "CDGA")


def transfer_coalgebra(R: Retract, bound: int = DEFAULT_BOUND) -> AInfCoalgebra:
    _check_retract(R, ("DGC", "CDGC"))
    ev = CoalgebraTreeEvaluator(R)
    ops = {1: {v: {(a,): c for a, c in R.dV.column(v).items()} for v in R.V.labels}}
    for k in range(2, bound + 1):
        ops[k] = {v: ev.op_k(k, v) for v in R.V.labels}
    return AInfCoalgebra(R.V, ops, bound, commutative=R.kind == "CDGC")


def transfer_lie(R: Retract, bound: int = DEFAULT_BOUND) -> LInfStructure:
    _check_retract(R, ("DGL",))
    ev = vector_evaluator(R)
    return LInfStructure(R.V, lie_ops(ev, lambda v: R.dV({v: Fraction(1)}), bound), bound)


# ---------------------------------------------------------------------------
# phi_T, P_T, Q_T


class TensorMap:
    """Homogeneous linear map V -> T(W) given on basis vectors."""

    def __init__(self, source: GradedSpace, target: GradedSpace, degree: int, images: Mapping[str, Tensor]):
        self.source, self.target, self.degree = source, target, int(degree)
        self.images = {v: {tuple(w): as_q(c) for w, c in t.items() if c} for v, t in images.items()}
        for v, t in self.images.items():
            for w in t:
                if target.word_degree(w) != source.degree(v) + self.degree:
                    raise ValueError(f"image of {v} has the wrong degree")

    def __call__(self, v: str) -> Tensor:
        return self.images.get(v, {})

    def apply(self, x: Mapping[str, Fraction]) -> Tensor:
        out: Tensor = {}
        for v, c in x.items():
            add_scaled(out, self(v), c)
        return {w: c for w, c in out.items() if c}

    @classmethod
    def from_linear_map(cls, f: GradedLinearMap) -> "TensorMap":
        return cls(f.source, f.target, f.degree, {v: {(w,): c for w, c in f.column(v).items()} for v in f.source.labels})


def phi_tree(phi: TensorMap, T) -> TensorMap:
    """phi_| = id and phi_T = (phi_T' (x) phi_T'') o phi."""
    V = phi.source
    k = tr.leaves(T)
    if tr.is_leaf(T):
        return TensorMap(V, V, 0, {v: {(v,): Fraction(1)} for v in V.labels})
    left, right = phi_tree(phi, T[0]), phi_tree(phi, T[1])
    images = {}
    for v in V.labels:
        out: Tensor = {}
        for (a, b), c in phi(v).items():
            sign = parity_sign(right.degree * V.degree(a))
            add_scaled(out, _tensor_product(left(a), right(b)), sign * c)
        images[v] = {w: c for w, c in out.items() if c}
    return TensorMap(V, V, phi.degree * (k - 1), images)


def tensor_power_apply(psi: GradedLinearMap, t: Tensor) -> Tensor:
    """psi^{(x)k} with the Koszul sign of psi passing the preceding letters."""
    out: Tensor = {}
    for w, c in t.items():
        acc = {(): c}
        before = 0
        for x in w:
            sign = parity_sign(psi.degree * before)
            acc = {u + (y,): a * b * sign for u, a in acc.items() for y, b in psi.column(x).items()}
            before += psi.source.degree(x)
        for u, a in acc.items():
            add_to(out, u, a)
    return {w: c for w, c in out.items() if c}


def p_tree(psi: GradedLinearMap, phi: TensorMap, T) -> TensorMap:
    """P_T = psi^{(x)k} o phi_T."""
    pt = phi_tree(phi, T)
    return TensorMap(phi.source, psi.target, pt.degree + psi.degree * tr.leaves(T),
                     {v: tensor_power_apply(psi, pt(v)) for v in phi.source.labels})


def q_tree(T, W: GradedSpace, word) -> Tensor:
    """Q_T: the nested bracket of the letters of ``word`` shaped like T, in T(W)."""
    from .free_lie import tensor_bracket

    word = tuple(word)
    if len(word) != tr.leaves(T):
        raise ValueError("word length does not match the number of leaves")
    if tr.is_leaf(T):
        return {word: Fraction(1)}
    k1 = tr.leaves(T[0])
    return tensor_bracket(W, q_tree(T[0], W, word[:k1]), q_tree(T[1], W, word[k1:]), None)


def q_tree_apply(T, W: GradedSpace, t: Tensor) -> Tensor:
    out: Tensor = {}
    for w, c in t.items():
        add_scaled(out, q_tree(T, W, w), c)
    return {w: c for w, c in out.items() if c}


def check_lie_polynomial_theorem(phi: TensorMap, psi: GradedLinearMap, T):
    """(1/|Aut T|) Q_T o P_T == sum of P_S over planar embeddings S of T.

    Returns (holds, witness) where witness is None or
    (basis vector, left side, right side) for the first mismatch.
    """
    from .free_lie import is_lie_element

    if phi.degree % 2 or psi.degree % 2:
        raise ValueError("phi and psi must have even degree")
    V = phi.source
    for v in V.labels:
        if phi(v) and not is_lie_element(V, phi(v)):
            raise ValueError(f"phi({v}) is not a Lie polynomial")
    W = psi.target
    PT = p_tree(psi, phi, T)
    embeddings = [p_tree(psi, phi, S) for S in tr.planar_embeddings(T)]
    aut = tr.aut_order(T)
    for v in V.labels:
        lhs = {w: c / aut for w, c in q_tree_apply(T, W, PT(v)).items()}
        rhs: Tensor = {}
        for PS in embeddings:
            add_scaled(rhs, PS(v))
        rhs = {w: c for w, c in rhs.items() if c}
        if lhs != rhs:
            return False, (v, lhs, rhs)
    return True, None


# ---------------------------------------------------------------------------
# coalgebras and differentials on the complete tensor algebra


def desuspended_space(V: GradedSpace) -> GradedSpace:
    return suspend(V, -1)


def coalgebra_to_differential(C: AInfCoalgebra, N: Optional[int] = None) -> Dict[str, Tensor]:
    """d = sum d_k on generators of T(s^-1 V): d_k = (-1)^k (s^-1)^{(x)k} Delta_k s.

    With Delta_1 = -partial this makes d_1 = s^-1 partial s.
    """
    N = C.bound if N is None else N
    out: Dict[str, Tensor] = {}
    for v in C.V.labels:
        t: Tensor = {}
        for k in range(1, min(N, C.bound) + 1):
            for w, c in C.delta(k, v).items():
                s = suspension_sign([C.V.degree(x) for x in w], -1)
                add_to(t, tuple(suspend_label(x, -1) for x in w), parity_sign(k) * s * c)
        out[suspend_label(v, -1)] = t
    return out


def differential_to_coalgebra(V: GradedSpace, d: Mapping[str, Tensor], bound: int) -> AInfCoalgebra:
    """Inverse of coalgebra_to_differential: Delta_k = (-1)^{k(k+1)/2} s^{(x)k} d_k s^-1."""
    W = desuspended_space(V)
    ops: Dict[int, Dict[str, Tensor]] = {k: {} for k in range(1, bound + 1)}
    for v in V.labels:
        for w, c in d.get(suspend_label(v, -1), {}).items():
            k = len(w)
            if k > bound:
                continue
            s = suspension_sign([W.degree(x) for x in w], 1)
            add_to(ops[k].setdefault(v, {}), tuple(suspend_label(x, 1) for x in w),
                   parity_sign(k * (k + 1) // 2) * s * c)
    return AInfCoalgebra(V, ops, bound)


def quillen_L(C: AInfCoalgebra, N: Optional[int] = None, name: str = ""):
    """The free complete DGL on s^-1 V whose differential encodes C.

    Raises NotALiePolynomial when some d(s^-1 v) is not a Lie series, which
    signals that C is not C-infinity.
    """
    from .free_lie import CDGLPresentation, dynkin_project

    N = C.bound if N is None else N
    W = desuspended_space(C.V)
    d = coalgebra_to_differential(C, N)
    diff = {g: dynkin_project(W, t, N) for g, t in d.items()}
    return CDGLPresentation(W, diff, N, name)


def random_lie_coproduct(V: GradedSpace, rng, scale: int = 2) -> TensorMap:
    """A degree 0 map V -> V (x) V whose images are random Lie polynomials [a, b]."""
    from .free_lie import tensor_bracket

    images = {}
    for v in V.labels:
        out: Tensor = {}
        for a in V.labels:
            for b in V.labels:
                if a <= b and V.degree(a) + V.degree(b) == V.degree(v):
                    c = rng.randint(-scale, scale)
                    if c:
                        add_scaled(out, tensor_bracket(V, {(a,): Fraction(1)}, {(b,): Fraction(1)}), c)
        images[v] = out
    return TensorMap(V, V, 0, images)


def random_linear_map(V: GradedSpace, W: GradedSpace, rng, degree: int = 0, scale: int = 2) -> GradedLinearMap:
    ent = {}
    for v in V.labels:
        for w in W.labels:
            if W.degree(w) == V.degree(v) + degree:
                ent[(w, v)] = rng.randint(-scale, scale)
    return GradedLinearMap(V, W, degree, ent)
