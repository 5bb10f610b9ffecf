"""Maurer-Cartan elements, the convolution L-infinity structures and the realization of a cDGL.

Coefficient DGLs are finite dimensional nilpotent ``FiniteDGL`` objects (for
instance a free Lie algebra truncated at some bracket length).  Elements of
A_n (x) L are stored as ``{basis label of L: PolyForm}``; elements of
C^*(Delta^n) (x) L as vectors on the labels ``"c01*x"``.

Sign conventions: A_n is graded homologically (a form of form degree r has
degree -r), the differential of A_n (x) L is d(w x) = dw x + (-1)^{|w|} w dx
and the bracket is [w x, v y] = (-1)^{|x||v|} wv [x, y].  The L-infinity
operations are graded antisymmetric of degree k - 2 and MC elements have
degree -1, so that sum_k l_k(x, ..., x)/k! = 0.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import dupont as dp
from . import trees as tr
from .free_lie import CDGLPresentation, FiniteDGL, H0Group, LieSeries, evaluate_coordinates, localize
from .graded import GradedSpace, add_scaled, as_q, parity_sign, q_str
from .transfer import AlgebraTreeEvaluator, LInfStructure, lie_ops

Vector = Dict[str, Fraction]

SEP = "*"


class NotMaurerCartan(ValueError):
    pass


# ---------------------------------------------------------------------------
# A_n (x) L


class FormTensor:
    """Element of A_n (x) L: a polynomial form for each basis vector of L."""

    __slots__ = ("n", "L", "terms")

    def __init__(self, n: int, L: FiniteDGL, terms: Mapping[str, dp.PolyForm] = None):
        self.n, self.L = n, L
        self.terms = {x: w for x, w in (terms or {}).items() if not w.is_zero()}

    @classmethod
    def pure(cls, form: dp.PolyForm, x: Mapping, L: FiniteDGL) -> "FormTensor":
        """form (x) x for a vector x of L."""
        return cls(form.n, L, {a: form.scale(c) for a, c in x.items() if c})

    def __add__(self, other: "FormTensor") -> "FormTensor":
        out = dict(self.terms)
        for x, w in other.terms.items():
            out[x] = out[x] + w if x in out else w
        return FormTensor(self.n, self.L, out)

    def __sub__(self, other: "FormTensor") -> "FormTensor":
        return self + other.scale(-1)

    def scale(self, c) -> "FormTensor":
        c = as_q(c)
        return FormTensor(self.n, self.L, {x: w.scale(c) for x, w in self.terms.items()} if c else {})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, FormTensor) and (self - other).is_zero()

    def bracket(self, other: "FormTensor") -> "FormTensor":
        L = self.L
        out: Dict[str, dp.PolyForm] = {}
        for x, w in self.terms.items():
            for y, v in other.terms.items():
                xy = L.bracket({x: Fraction(1)}, {y: Fraction(1)})
                if not xy:
                    continue
                prod = w * v
                if prod.is_zero():
                    continue
                s = parity_sign(L.space.degree(x) * v.degree())
                for z, c in xy.items():
                    add_form(out, z, prod.scale(s * c))
        return FormTensor(self.n, L, out)

    def d(self) -> "FormTensor":
        out: Dict[str, dp.PolyForm] = {}
        for x, w in self.terms.items():
            add_form(out, x, w.d())
            dx = self.L.d({x: Fraction(1)})
            if dx:
                s = parity_sign(w.degree())
                for z, c in dx.items():
                    add_form(out, z, w.scale(s * c))
        return FormTensor(self.n, self.L, out)

    def K(self) -> "FormTensor":
        return FormTensor(self.n, self.L, {x: dp.dupont_homotopy(w) for x, w in self.terms.items()})

    def p(self) -> Vector:
        """(p (x) id), as a vector of C^*(Delta^n) (x) L."""
        out: Vector = {}
        for x, w in self.terms.items():
            for c, v in dp.project(w).to_vector().items():
                if v:
                    out[tensor_label(c, x)] = out.get(tensor_label(c, x), 0) + v
        return {a: v for a, v in out.items() if v}

    def mc_residual(self) -> "FormTensor":
        """dY + 1/2 [Y, Y]."""
        return self.d() + self.bracket(self).scale(Fraction(1, 2))

    def to_json(self) -> dict:
        return {"n": self.n, "terms": [[x, w.to_json()] for x, w in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, data: dict, L: FiniteDGL) -> "FormTensor":
        n = int(data["n"])
        return cls(n, L, {x: dp.PolyForm.from_json(w) for x, w in data["terms"]})

    def __repr__(self):
        return " + ".join(f"({w!r})*{x}" for x, w in sorted(self.terms.items())) or "0"


def add_form(acc: Dict[str, dp.PolyForm], x: str, w: dp.PolyForm) -> None:
    if w.is_zero():
        return
    v = acc[x] + w if x in acc else w
    if v.is_zero():
        acc.pop(x, None)
    else:
        acc[x] = v


# ---------------------------------------------------------------------------
# C^*(Delta^n) (x) L


def tensor_label(cochain: str, x: str) -> str:
    return f"{cochain}{SEP}{x}"


def split_label(label: str) -> Tuple[str, str]:
    c, x = label.split(SEP, 1)
    return c, x


def tensor_space(n: int, L: FiniteDGL) -> GradedSpace:
    C = dp.cochain_space(n)
    labels, degs = [], []
    for c in C.labels:
        for x in L.space.labels:
            labels.append(tensor_label(c, x))
            degs.append(C.degree(c) + L.space.degree(x))
    return GradedSpace(tuple(labels), tuple(degs))


def include(n: int, v: Mapping, L: FiniteDGL) -> FormTensor:
    """(i (x) id) on a vector of C^*(Delta^n) (x) L."""
    out: Dict[str, dp.PolyForm] = {}
    for a, c in v.items():
        if c:
            cl, x = split_label(a)
            add_form(out, x, dp.whitney(n, dp.label_face(cl)).scale(c))
    return FormTensor(n, L, out)


def degree_part(V: GradedSpace, v: Mapping, d: int) -> Vector:
    return {a: c for a, c in v.items() if c and V.degree(a) == d}


@lru_cache(maxsize=None)
def _tensor_evaluator(n: int, L: FiniteDGL) -> AlgebraTreeEvaluator:
    V = tensor_space(n, L)
    return AlgebraTreeEvaluator(
        V,
        lambda a: include(n, {a: 1}, L),
        lambda Y: Y.p(),
        lambda Y: Y.K(),
        lambda Y, Z, sign: Y.bracket(Z).scale(sign),
        lambda Y: Y.is_zero(),
    )


def tensor_linf(n: int, L: FiniteDGL, bound: int = 4) -> LInfStructure:
    """The L-infinity structure on C^*(Delta^n) (x) L transferred from A_n (x) L along i, p, K."""
    ev = _tensor_evaluator(n, L)
    return LInfStructure(ev.V, lie_ops(ev, lambda a: include(n, {a: 1}, L).d().p(), bound), bound)


def tree_power(n: int, T, X: FormTensor) -> Optional[FormTensor]:
    """T(X, ..., X): the bracket at vertices and K on internal edges.

    For inputs of degree -1 every vertex sign of the tree evaluator is +1.
    """
    if tr.is_leaf(T):
        return X
    parts = []
    for S in T:
        Y = tree_power(n, S, X)
        if Y is None:
            return None
        if not tr.is_leaf(S):
            Y = Y.K()
        if Y.is_zero():
            return None
        parts.append(Y)
    Z = parts[0].bracket(parts[1])
    return None if Z.is_zero() else Z


def l_power(n: int, L: FiniteDGL, x: Mapping, k: int) -> Vector:
    """l_k(x, ..., x) on C^*(Delta^n) (x) L for x of degree -1.

    On equal odd inputs every signed permutation and every tree contributes
    +1, so l_k(x^k) = k! sum_T p(T(ix)) / |Aut T|.
    """
    X = include(n, x, L)
    if k == 1:
        return X.d().p()
    out: Vector = {}
    for T in tr.enumerate_nonplanar(k):
        Y = tree_power(n, T, X)
        if Y is not None:
            add_scaled(out, Y.p(), Fraction(math.factorial(k), tr.aut_order(T)))
    return {a: c for a, c in out.items() if c}


def mc_residual(n: int, L: FiniteDGL, x: Mapping, upto: Optional[int] = None) -> Vector:
    """sum_k l_k(x, ..., x)/k! in C^*(Delta^n) (x) L, k up to the nilpotency bound."""
    upto = nilpotency_bound(L) if upto is None else upto
    out: Vector = {}
    for k in range(1, upto + 1):
        add_scaled(out, l_power(n, L, x, k), Fraction(1, math.factorial(k)))
    return {a: c for a, c in out.items() if c}


def nilpotency_bound(L: FiniteDGL) -> int:
    """Brackets of more than this many elements vanish in L."""
    if not L.is_nilpotent():
        raise ValueError("the coefficient DGL must be nilpotent")
    return max(L.nilpotency_class(), 1)


def is_mc(n: int, L: FiniteDGL, x: Mapping) -> bool:
    return not mc_residual(n, L, x)


# ---------------------------------------------------------------------------
# Hom(V, L) and the convolution structure

HOM = ">"


def hom_label(v: str, x: str) -> str:
    return f"{v}{HOM}{x}"


def split_hom(label: str) -> Tuple[str, str]:
    v, x = label.split(HOM, 1)
    return v, x


def hom_space(V: GradedSpace, L: FiniteDGL) -> GradedSpace:
    """Hom(V, L) on the elementary maps v -> x, of degree |x| - |v|."""
    labels, degs = [], []
    for v in V.labels:
        for x in L.space.labels:
            labels.append(hom_label(v, x))
            degs.append(L.space.degree(x) - V.degree(v))
    return GradedSpace(tuple(labels), tuple(degs))


def hom_apply(phi: Mapping, v: str) -> Vector:
    """phi(v) for phi in Hom(V, L) and a basis vector v of V."""
    out: Vector = {}
    for a, c in phi.items():
        if c:
            w, x = split_hom(a)
            if w == v:
                out[x] = out.get(x, 0) + c
    return {x: c for x, c in out.items() if c}


def psi(n: int, z: Mapping, L: FiniteDGL) -> Vector:
    """Psi : C^*(Delta^n) (x) L -> Hom(C_*(Delta^n), L), alpha (x) x -> (-1)^{|alpha||x|} <alpha, -> x."""
    out: Vector = {}
    for a, c in z.items():
        if c:
            cl, x = split_label(a)
            I = dp.label_face(cl)
            s = parity_sign((1 - len(I)) * L.space.degree(x)) * dp.pairing_sign(I)
            out[hom_label(dp.chain_label(I), x)] = s * c
    return out


def psi_inverse(n: int, phi: Mapping, L: FiniteDGL) -> Vector:
    out: Vector = {}
    for a, c in phi.items():
        if c:
            v, x = split_hom(a)
            I = dp.label_face(v)
            s = parity_sign((1 - len(I)) * L.space.degree(x)) * dp.pairing_sign(I)
            out[tensor_label(dp.cochain_label(I), x)] = s * c
    return out


def dynkin_value(L: FiniteDGL, t: Mapping) -> Vector:
    """The element of L represented by a Lie element t of T(L).

    t is a dict from tuples of basis labels of L; a Lie element of length k is
    recovered from its left-normed bracketing divided by k.
    """
    out: Vector = {}
    for w, c in t.items():
        if not c:
            continue
        v = {w[0]: Fraction(1)}
        for x in w[1:]:
            v = L.bracket(v, {x: Fraction(1)})
            if not v:
                break
        if v:
            add_scaled(out, v, Fraction(c, len(w)) if isinstance(c, int) else c / len(w))
    return {a: c for a, c in out.items() if c}


class ConvolutionLInf(LInfStructure):
    """The L-infinity structure on Hom(V, L) for an A-infinity (C-infinity) coalgebra C on V.

    l_1(phi) = d_L phi - (-1)^{|phi|} phi Delta_1, and for k >= 2
    l_k(phi_1, ..., phi_k)(v) =
        -(-1)^{k(k+1)/2 + sum_i (k+1-i)|phi_i|}
         sum_sigma e(sigma) (phi_s1 s (x) ... (x) phi_sk s)(d_k s^-1 v),
    where d_k is the component of length k of the Quillen differential of C,
    e(sigma) is the Koszul sign for the shifted degrees |phi_i| + 1 and the
    product of the images is taken in L (the sum over sigma is a Lie element).
    On equal inputs of degree -1 this is l_k(phi^k) = -k! phi(d_k s^-1 v), so
    MC elements are exactly the maps f s^-1 of cDGL morphisms f.
    """

    def __init__(self, C, L: FiniteDGL, bound: int = 4):
        from .transfer import coalgebra_to_differential

        self.C, self.L = C, L
        self.W = hom_space(C.V, L)
        d = coalgebra_to_differential(C, bound)
        self.dk: Dict[str, Dict[int, Dict[tuple, Fraction]]] = {}
        for g, t in d.items():
            v = g.split("|", 1)[1]
            by_len: Dict[int, Dict[tuple, Fraction]] = {}
            for w, c in t.items():
                by_len.setdefault(len(w), {})[tuple(x.split("|", 1)[1] for x in w)] = c
            self.dk[v] = by_len
        ops = {1: self._l1}
        for k in range(2, bound + 1):
            ops[k] = (lambda k: lambda word: self._lk(k, word))(k)
        super().__init__(self.W, ops, bound)

    def _l1(self, word) -> Vector:
        (a,) = word
        v, x = split_hom(a)
        out: Vector = {}
        for y, c in self.L.d({x: Fraction(1)}).items():
            add_scaled(out, {hom_label(v, y): c})
        s = -parity_sign(self.W.degree(a))
        for u in self.C.V.labels:
            for w, c in self.C.delta(1, u).items():
                if w == (v,):
                    add_scaled(out, {hom_label(u, x): s * c})
        return {b: c for b, c in out.items() if c}

    def _lk(self, k: int, word) -> Vector:
        import itertools

        from .graded import act, koszul_sign

        phi_degs = [self.W.degree(a) for a in word]
        degs = [d + 1 for d in phi_degs]
        maps = [split_hom(a) for a in word]
        out: Vector = {}
        d0 = parity_sign(k * (k + 1) // 2 + sum((k - i) * d for i, d in enumerate(phi_degs)))
        for sigma in itertools.permutations(range(1, k + 1)):
            e = koszul_sign(sigma, degs) * d0
            ms = act(sigma, maps)
            mdeg = [self.W.degree(hom_label(*m)) + 1 for m in ms]
            for v, by_len in self.dk.items():
                t: Dict[tuple, Fraction] = {}
                for w, c in by_len.get(k, {}).items():
                    if any(w[i] != ms[i][0] for i in range(k)):
                        continue
                    # Koszul sign of (f_1 (x) ... (x) f_k)(s^-1 w_1 (x) ... (x) s^-1 w_k)
                    wdeg = [self.C.V.degree(u) - 1 for u in w]
                    s = 1
                    for i in range(k):
                        for j in range(i + 1, k):
                            s *= parity_sign(mdeg[j] * wdeg[i])
                    key = tuple(m[1] for m in ms)
                    t[key] = t.get(key, 0) - e * s * c
                for y, c in dynkin_value(self.L, t).items():
                    add_scaled(out, {hom_label(v, y): c})
        return {b: c for b, c in out.items() if c}


def convolution_linf(C, L: FiniteDGL, bound: int = 4) -> ConvolutionLInf:
    """The convolution L-infinity structure on Hom(V, L) of a finite C-infinity coalgebra C."""
    return ConvolutionLInf(C, L, bound)


def convolution_bracket(C, L: FiniteDGL, f: Mapping, g: Mapping) -> Vector:
    """The convolution bracket [f, g] = [,] o (f (x) g) o Delta on Hom(V, L).

    Coalgebras are stored with operations Delta_k normalized by the rescaling
    v -> -v relative to the coproduct of the underlying strict coalgebra, so
    Delta = -Delta_2 here.  With this, l_2 of the convolution structure is
    exactly this bracket.
    """
    W = hom_space(C.V, L)
    out: Vector = {}
    for a, ca in f.items():
        for b, cb in g.items():
            if not (ca and cb):
                continue
            (u, x), (w, y) = split_hom(a), split_hom(b)
            for v in C.V.labels:
                for word, c in C.delta(2, v).items():
                    if word == (u, w):
                        s = -parity_sign(W.degree(b) * C.V.degree(u))
                        for z, e in L.bracket({x: Fraction(1)}, {y: Fraction(1)}).items():
                            add_scaled(out, {hom_label(v, z): s * c * ca * cb * e})
    return {a: c for a, c in out.items() if c}


# ---------------------------------------------------------------------------
# cDGL morphisms out of a free presentation and MC elements of Hom(V, L)


class NotAMorphism(ValueError):
    pass


def _generator_vector(P: CDGLPresentation, g: str) -> str:
    """The basis vector v of V with g = s^-1 v."""
    return g.split("|", 1)[1]


def _check_order(P: CDGLPresentation, L: FiniteDGL) -> None:
    if nilpotency_bound(L) > P.order:
        raise ValueError(
            f"L has brackets of length {nilpotency_bound(L)} but the presentation is truncated at {P.order}")


@lru_cache(maxsize=None)
def _lyndon_differential(P: CDGLPresentation, k: Optional[int] = None):
    """Basis-word coordinates of d g (of its length-k part when k is given)."""
    out = {}
    for g, x in P.differential.items():
        coords = x.lyndon()
        out[g] = coords if k is None else {w: c for w, c in coords.items() if len(w) == k}
    return out


def morphism_defect(P: CDGLPresentation, L: FiniteDGL, images: Mapping[str, Mapping]) -> Dict[str, Vector]:
    """f(d g) - d_L f(g) for each generator g, f given by the images of the generators."""
    _check_order(P, L)
    diff = _lyndon_differential(P)
    out = {}
    for g in P.generators.labels:
        r = dict(evaluate_coordinates(P.generators, diff[g], images, L)) if g in diff else {}
        add_scaled(r, L.d(images.get(g, {})), -1)
        r = {a: c for a, c in r.items() if c}
        if r:
            out[g] = r
    return out


def is_morphism(P: CDGLPresentation, L: FiniteDGL, images: Mapping[str, Mapping]) -> bool:
    return not morphism_defect(P, L, images)


def morphism_to_mc(P: CDGLPresentation, L: FiniteDGL, images: Mapping[str, Mapping], check: bool = True) -> Vector:
    """f -> f s^-1, an element of degree -1 of Hom(V, L)."""
    if check and not is_morphism(P, L, images):
        raise NotAMorphism("the images do not define a morphism commuting with the differentials")
    out: Vector = {}
    for g in P.generators.labels:
        v = _generator_vector(P, g)
        for x, c in images.get(g, {}).items():
            if c:
                if L.space.degree(x) != P.generators.degree(g):
                    raise ValueError(f"image of {g} has the wrong degree")
                out[hom_label(v, x)] = as_q(c)
    return out


def mc_to_morphism(P: CDGLPresentation, L: FiniteDGL, phi: Mapping) -> Dict[str, Vector]:
    """phi -> the morphism with f(s^-1 v) = phi(v)."""
    out: Dict[str, Vector] = {g: {} for g in P.generators.labels}
    for a, c in phi.items():
        if c:
            v, x = split_hom(a)
            g = f"s-1|{v}"
            if g not in out:
                raise KeyError(f"{v} is not a basis vector of the coalgebra")
            out[g][x] = out[g].get(x, 0) + as_q(c)
    return out


def tensor_l_power(n: int, L: FiniteDGL) -> Callable:
    """phi -> l_k(phi, ..., phi) on Hom(C_*(Delta^n), L), transported by Psi from C^*(Delta^n) (x) L."""
    def ell(phi: Mapping, k: int) -> Vector:
        return psi(n, l_power(n, L, psi_inverse(n, phi, L), k), L)
    return ell


def main_identity_defects(P: CDGLPresentation, L: FiniteDGL, images: Mapping[str, Mapping], k: int,
                          ell: Callable) -> Dict[str, Vector]:
    """f d_k s^-1 + (1/k!) l_k(f s^-1, ..., f s^-1) on each basis vector of V.

    ``ell(phi, k)`` returns l_k(phi, ..., phi) in Hom(V, L); the images need
    not define a morphism.
    """
    _check_order(P, L)
    phi = morphism_to_mc(P, L, images, check=False)
    rhs = ell(phi, k)
    diff = _lyndon_differential(P, k)
    out = {}
    for g in P.generators.labels:
        v = _generator_vector(P, g)
        lhs = dict(evaluate_coordinates(P.generators, diff[g], images, L)) if g in diff else {}
        add_scaled(lhs, hom_apply(rhs, v), Fraction(1, math.factorial(k)))
        lhs = {a: c for a, c in lhs.items() if c}
        if lhs:
            out[g] = lhs
    return out


# ---------------------------------------------------------------------------
# the realization <L>: MC elements of C^*(Delta^n) (x) L


class RealizationSimplex:
    """An n-simplex of <L>: an MC element z of C^*(Delta^n) (x) L.

    Equivalently a cDGL morphism L_n -> L, through z -> Psi(z) = f s^-1.
    """

    def __init__(self, n: int, L: FiniteDGL, z: Mapping, check: bool = True):
        self.n, self.L = n, L
        V = tensor_space(n, L)
        self.z = {a: as_q(c) for a, c in z.items() if c}
        for a in self.z:
            if V.degree(a) != -1:
                raise ValueError(f"{a} does not have degree -1")
        if check:
            r = mc_residual(n, L, self.z)
            if r:
                raise NotMaurerCartan(f"MC residual is nonzero on {sorted(r)[:3]}")

    def __eq__(self, other) -> bool:
        return isinstance(other, RealizationSimplex) and self.n == other.n and self.z == other.z

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.z.items()))))

    def component(self, I) -> Vector:
        """The coefficient of alpha_I, an element of L."""
        c = dp.cochain_label(tuple(I))
        out: Vector = {}
        for a, v in self.z.items():
            cl, x = split_label(a)
            if cl == c:
                out[x] = v
        return out

    def face(self, j: int) -> "RealizationSimplex":
        if self.n == 0:
            raise ValueError("a 0-simplex has no faces")
        return RealizationSimplex(self.n - 1, self.L, _map_cochains(self.z, lambda co: dp.cochain_face(co, self.n, j)),
                                  check=False)

    def degeneracy(self, j: int) -> "RealizationSimplex":
        return RealizationSimplex(self.n + 1, self.L,
                                  _map_cochains(self.z, lambda co: dp.cochain_degeneracy(co, self.n, j)), check=False)

    def to_morphism(self, N: Optional[int] = None) -> Dict[str, Vector]:
        """The images of the generators s^-1 a_I of L_n."""
        return mc_to_morphism(dp.build_Ln(self.n, N or _order_for(self.L)), self.L, psi(self.n, self.z, self.L))

    @classmethod
    def from_morphism(cls, n: int, L: FiniteDGL, images: Mapping[str, Mapping], N: Optional[int] = None,
                      check: bool = True) -> "RealizationSimplex":
        P = dp.build_Ln(n, N or _order_for(L))
        phi = morphism_to_mc(P, L, images, check=check)
        return cls(n, L, psi_inverse(n, phi, L), check=check)

    def to_json(self) -> dict:
        by_face: Dict[str, Dict[str, str]] = {}
        for a, c in sorted(self.z.items()):
            cl, x = split_label(a)
            by_face.setdefault(cl[1:], {})[x] = q_str(c)
        return {"n": self.n, "coefficients": [[f, v] for f, v in sorted(by_face.items())]}

    @classmethod
    def from_json(cls, data: dict, L: FiniteDGL, check: bool = True) -> "RealizationSimplex":
        n = int(data["n"])
        z = {}
        for f, v in data["coefficients"]:
            for x, c in v.items():
                z[tensor_label("c" + f, x)] = as_q(c)
        return cls(n, L, z, check=check)

    def __repr__(self):
        return f"RealizationSimplex(n={self.n}, {len(self.z)} coefficients)"


def _map_cochains(z: Mapping, op: Callable) -> Vector:
    """Apply a linear map on cochains (given on {face: coeff}) to each L-component."""
    by_x: Dict[str, Dict[tuple, Fraction]] = {}
    for a, c in z.items():
        cl, x = split_label(a)
        by_x.setdefault(x, {})[dp.label_face(cl)] = c
    out: Vector = {}
    for x, co in by_x.items():
        for J, c in op(co).items():
            if c:
                out[tensor_label(dp.cochain_label(J), x)] = c
    return out


def _order_for(L: FiniteDGL) -> int:
    return max(nilpotency_bound(L), 2)


def is_simplex(n: int, L: FiniteDGL, z: Mapping) -> bool:
    """Membership in <L>_n: degree -1 and MC."""
    V = tensor_space(n, L)
    return all(V.degree(a) == -1 for a, c in z.items() if c) and is_mc(n, L, z)


def random_mc_vertex(L: FiniteDGL, rng: random.Random, scale: int = 2, tries: int = 50) -> Vector:
    """A random MC element of L found among random degree -1 elements, or 0."""
    cands = L.space.in_degree(-1)
    for _ in range(tries):
        x = {a: Fraction(rng.randint(-scale, scale)) for a in cands}
        x = {a: c for a, c in x.items() if c}
        if L.is_mc(x):
            return x
    return {}


def sample_simplex(n: int, L: FiniteDGL, rng: random.Random, vertex: Optional[Mapping] = None, scale: int = 2,
                   N: Optional[int] = None, max_iter: int = 100) -> RealizationSimplex:
    """A random n-simplex of <L>.

    The images of the generators of faces containing vertex 0 are chosen at
    random (the vertex itself is ``vertex``, an MC element of L, default a
    random one); the image of the opposite face J = I - {0} enters d s^-1 a_I
    linearly with coefficient +1 and is solved for by iterating
    u_J <- u_J + (d_L f(g_I) - f(d g_I)), which terminates since L is
    nilpotent.  The remaining equations are then checked.
    """
    N = N or _order_for(L)
    P = dp.build_Ln(n, N)
    v0 = dict(vertex) if vertex is not None else random_mc_vertex(L, rng, scale)
    if not L.is_mc(v0):
        raise NotMaurerCartan("the vertex is not an MC element of L")
    images: Dict[str, Vector] = {}
    faces = dp.faces_of(n)
    for I in faces:
        g = dp._generator(I)
        if I == (0,):
            images[g] = dict(v0)
        elif I[0] == 0:
            cands = L.space.in_degree(len(I) - 2)
            images[g] = {a: Fraction(rng.randint(-scale, scale)) for a in cands}
        else:
            images[g] = {}
    diff = _lyndon_differential(P)
    for _ in range(max_iter):
        changed = False
        for I in faces:
            if I[0] != 0 or len(I) == 1:
                continue
            g = dp._generator(I)
            r = dict(L.d(images[g]))
            add_scaled(r, evaluate_coordinates(P.generators, diff[g], images, L), -1)
            r = {a: c for a, c in r.items() if c}
            if r:
                changed = True
                J = dp._generator(I[1:])
                add_scaled(images[J], r)
                images[J] = {a: c for a, c in images[J].items() if c}
        if not changed:
            break
    else:
        raise ArithmeticError("the horn filling iteration did not terminate")
    bad = morphism_defect(P, L, images)
    if bad:
        raise ArithmeticError(f"sampled images fail the morphism condition on {sorted(bad)}")
    return RealizationSimplex.from_morphism(n, L, images, N)


# ---------------------------------------------------------------------------
# the Taylor series I_n and the nerve


@lru_cache(maxsize=None)
def _taylor_word(n: int, L: FiniteDGL, word: Tuple[str, ...]) -> FormTensor:
    k = len(word)
    if k == 1:
        return include(n, {word[0]: Fraction(1)}, L)
    from .graded import inverse, shuffles, total_sign

    V = tensor_space(n, L)
    degs = [V.degree(a) for a in word]
    out = FormTensor(n, L)
    for i in range(1, k):
        for s in shuffles(i, k - i):
            t = inverse(s)
            if t[0] != 1:
                continue
            w = tuple(word[j - 1] for j in t)
            left, right = _taylor_word(n, L, w[:i]), _taylor_word(n, L, w[i:])
            if left.is_zero() or right.is_zero():
                continue
            out = out + left.bracket(right).K().scale(total_sign(t, degs))
    return out


def taylor_I(n: int, L: FiniteDGL, inputs: Sequence[Mapping]) -> FormTensor:
    """I_n^{(k)}(x_1, ..., x_k) in A_n (x) L for x_i in C^*(Delta^n) (x) L.

    I^{(1)} = i and I^{(k)} = sum_{i<k} sum_sigma e(sigma) K[I^{(i)}(...), I^{(k-i)}(...)],
    sigma running over the (i, k-i) unshuffles keeping x_1 in the first block.
    """
    acc = {(): Fraction(1)}
    for v in inputs:
        acc = {w + (a,): c * d for w, c in acc.items() for a, d in v.items() if d}
    out = FormTensor(n, L)
    for w, c in acc.items():
        out = out + _taylor_word(n, L, w).scale(c)
    return out


def mc_I(n: int, L: FiniteDGL, z: Mapping, check: bool = True) -> FormTensor:
    """MC(I_n)(z) = sum_k I^{(k)}(z, ..., z)/k!, the solution of Y = i z + 1/2 K[Y, Y]."""
    if check and not is_simplex(n, L, z):
        raise NotMaurerCartan("input is not an MC element of degree -1 of C^*(Delta^n) (x) L")
    iz = include(n, z, L)
    Y = iz
    for _ in range(nilpotency_bound(L) + 1):
        nxt = iz + Y.bracket(Y).K().scale(Fraction(1, 2))
        if nxt == Y:
            return Y
        Y = nxt
    raise ArithmeticError("fixed point iteration did not stabilize")


def mc_P(y: FormTensor) -> Vector:
    """MC(P_n)(y) = (p (x) id)(y)."""
    return y.p()


def nerve_membership(y: FormTensor, check: bool = True) -> bool:
    """Whether y lies in the nerve: (K (x) id)(y) = 0 (y an MC element of A_n (x) L)."""
    if check and not y.mc_residual().is_zero():
        raise NotMaurerCartan("y is not an MC element of A_n (x) L")
    return y.K().is_zero()


# ---------------------------------------------------------------------------
# homotopy invariants of <L>


def gauge_solve(L: FiniteDGL, x: Mapping, y: Mapping) -> Optional[Vector]:
    """A rational degree 0 element g with g . x = y, or None.

    The gauge action is g . x = e^{ad g} x - (e^{ad g} - 1)/ad g (d g).  In a
    nilpotent L this is a polynomial map in the coordinates of g; the system
    g . x = y is solved exactly with sympy and a rational point of the
    solution set is returned (free parameters are specialized to small
    integers).
    """
    import itertools

    import sympy

    nilpotency_bound(L)
    deg0 = list(L.space.in_degree(0))
    if not deg0:
        return {} if _same(x, y) else None
    syms = sympy.symbols(f"g0:{len(deg0)}")
    G = {a: s for a, s in zip(deg0, syms)}
    gx = L.gauge(G, x)
    eqs = []
    for a in set(gx) | set(y):
        e = sympy.expand(sympy.sympify(gx.get(a, 0)) - sympy.Rational(str(y.get(a, 0))))
        if e != 0:
            eqs.append(e)
    if not eqs:
        return {}
    sols = sympy.solve(eqs, syms, dict=True)
    for sol in sols:
        free = [s for s in syms if s not in sol]
        for vals in itertools.product(range(0, 3), repeat=len(free)):
            sub = dict(zip(free, vals))
            g = {}
            ok = True
            for a, s in G.items():
                v = sympy.nsimplify(sympy.sympify(sol.get(s, s)).subs(sub)) if s in sol else sympy.Integer(sub[s])
                if not v.is_rational:
                    ok = False
                    break
                if v != 0:
                    g[a] = Fraction(int(v.p), int(v.q))
            if ok and _same(L.gauge(g, x), y):
                return g
    return None


def _same(u: Mapping, v: Mapping) -> bool:
    return {a: c for a, c in u.items() if c} == {a: c for a, c in v.items() if c}


def gauge_equivalent(L: FiniteDGL, x: Mapping, y: Mapping) -> bool:
    return gauge_solve(L, x, y) is not None


def pi0(L: FiniteDGL, elements: Sequence[Mapping]) -> List[List[int]]:
    """Partition of the given MC elements of L into gauge classes (as index lists)."""
    for x in elements:
        if not L.is_mc(x):
            raise NotMaurerCartan("pi0 expects MC elements")
    classes: List[List[int]] = []
    for i, x in enumerate(elements):
        for cl in classes:
            if gauge_equivalent(L, elements[cl[0]], x):
                cl.append(i)
                break
        else:
            classes.append([i])
    return classes


def pi0_abelian(L: FiniteDGL) -> int:
    """For abelian L the gauge classes are H_{-1}(L); returns its rank."""
    if L.table:
        raise ValueError("L is not abelian")
    return L.homology_rank(-1)


def pi_rank(L: FiniteDGL, z: Mapping, n: int) -> int:
    """Rank of pi_n(<L>, z) for n >= 1, as H_{n-1} of the localization L^{(z)}."""
    if n < 1:
        raise ValueError("use pi0 for n = 0")
    return localize(L, z).homology_rank(n - 1)


def pi1_group(L: FiniteDGL, z: Mapping) -> H0Group:
    """pi_1(<L>, z) as H_0(L^{(z)}) with the BCH product."""
    return H0Group(localize(L, z).dgl)
