"""Polynomial differential forms on simplices, cochains, and the Dupont contraction.

Forms on the n-simplex are stored in normal form: t_0 and dt_0 are
eliminated through t_0 = 1 - (t_1 + ... + t_n) and dt_0 = -(dt_1 + ... + dt_n).
A term is keyed by ``(exponents, dts)`` where ``exponents`` has length n and
``dts`` is a strictly increasing tuple of indices in 1..n.

Degrees are homological throughout: a form of form-degree r sits in degree
-r, a cochain on a k-face in degree -k, a chain on a k-face in degree k.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Mapping, Sequence, Tuple

from .graded import GradedSpace, add_scaled, add_to, as_q, parity_sign, q_str, suspend, suspend_label

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]


# ---------------------------------------------------------------------------
# raw exterior polynomial algebra on m variables


def _merge_dts(a, b):
    """Sign and sorted union of two increasing index tuples, or (0, None) on overlap."""
    if set(a) & set(b):
        return 0, None
    inv = sum(1 for x in a for y in b if x > y)
    return parity_sign(inv), tuple(sorted(a + b))


def _mul(x: Mapping[Key, Fraction], y: Mapping[Key, Fraction]) -> Dict[Key, Fraction]:
    out: Dict[Key, Fraction] = {}
    for (ea, da), ca in x.items():
        for (eb, db), cb in y.items():
            s, dts = _merge_dts(da, db)
            if s:
                add_to(out, (tuple(p + q for p, q in zip(ea, eb)), dts), s * ca * cb)
    return out


def _d(x: Mapping[Key, Fraction]) -> Dict[Key, Fraction]:
    out: Dict[Key, Fraction] = {}
    for (e, dts), c in x.items():
        for j, b in enumerate(e):
            if b == 0:
                continue
            var = j + 1
            if var in dts:
                continue
            pos = sum(1 for t in dts if t < var)
            ne = e[:j] + (b - 1,) + e[j + 1:]
            add_to(out, (ne, tuple(sorted(dts + (var,)))), parity_sign(pos) * b * c)
    return out


def _unit(m: int) -> Dict[Key, Fraction]:
    return {((0,) * m, ()): Fraction(1)}


def _var(m: int, j: int) -> Dict[Key, Fraction]:
    e = [0] * m
    e[j - 1] = 1
    return {(tuple(e), ()): Fraction(1)}


def _dvar(m: int, j: int) -> Dict[Key, Fraction]:
    return {((0,) * m, (j,)): Fraction(1)}


def _pow(x, b, m):
    out = _unit(m)
    for _ in range(b):
        out = _mul(out, x)
    return out


def _substitute(x, m_target, t_images, dt_images):
    """Replace variable j by t_images[j] and dt_j by dt_images[j] (1-based lists)."""
    out: Dict[Key, Fraction] = {}
    pow_cache = {}
    for (e, dts), c in x.items():
        term = _unit(m_target)
        for j, b in enumerate(e):
            if b:
                if (j, b) not in pow_cache:
                    pow_cache[(j, b)] = _pow(t_images[j + 1], b, m_target)
                term = _mul(term, pow_cache[(j, b)])
        for j in dts:
            term = _mul(term, dt_images[j])
        add_scaled(out, term, c)
    return out


# ---------------------------------------------------------------------------
# PolyForm


class PolyForm:
    """Element of A_n, the polynomial de Rham forms on the standard n-simplex."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Key, Fraction] = None):
        self.n = int(n)
        self.terms: Dict[Key, Fraction] = {}
        for (e, dts), c in (terms or {}).items():
            c = as_q(c)
            if not c:
                continue
            e, dts = tuple(e), tuple(dts)
            if len(e) != self.n or list(dts) != sorted(set(dts)) or any(not 1 <= j <= self.n for j in dts):
                raise ValueError(f"term {(e, dts)} is not in normal form for n={self.n}")
            self.terms[(e, dts)] = c

    # constructors
    @classmethod
    def one(cls, n):
        return cls(n, _unit(n))

    @classmethod
    def t(cls, n, j):
        """Barycentric coordinate t_j, j = 0..n."""
        if j == 0:
            terms = _unit(n)
            for i in range(1, n + 1):
                add_to(terms, _key_var(n, i), -1)
            return cls(n, terms)
        return cls(n, _var(n, j))

    @classmethod
    def dt(cls, n, j):
        if j == 0:
            return cls(n, {((0,) * n, (i,)): -1 for i in range(1, n + 1)})
        return cls(n, _dvar(n, j))

    @classmethod
    def monomial(cls, n, exps, dts=(), coeff=1):
        return cls(n, {(tuple(exps), tuple(dts)): coeff})

    # arithmetic
    def _same(self, other):
        if not isinstance(other, PolyForm) or other.n != self.n:
            raise ValueError("forms on different simplices")

    def __add__(self, other):
        self._same(other)
        t = dict(self.terms)
        add_scaled(t, other.terms)
        return PolyForm(self.n, t)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        c = as_q(c)
        return PolyForm(self.n, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PolyForm):
            self._same(other)
            return PolyForm(self.n, _mul(self.terms, other.terms))
        return self.scale(other)

    __rmul__ = scale

    def d(self) -> "PolyForm":
        return PolyForm(self.n, _d(self.terms))

    def __eq__(self, other):
        return isinstance(other, PolyForm) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def form_degrees(self):
        return {len(dts) for (_, dts) in self.terms}

    def degree(self):
        """Homological degree (minus the form degree)."""
        d = self.form_degrees()
        if len(d) > 1:
            raise ValueError("inhomogeneous form")
        return -d.pop() if d else None

    def poly_degree(self) -> int:
        return max((sum(e) for (e, _) in self.terms), default=0)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (e, dts), c in sorted(self.terms.items()):
            mon = "*".join(f"t{j + 1}^{b}" if b > 1 else f"t{j + 1}" for j, b in enumerate(e) if b)
            dd = "".join(f"dt{j}" for j in dts)
            parts.append(q_str(c) + ("*" + mon if mon else "") + ("*" + dd if dd else ""))
        return " + ".join(parts)

    def to_json(self):
        return {"n": self.n, "terms": [[list(e), list(dts), q_str(c)] for (e, dts), c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, data):
        return cls(data["n"], {(tuple(e), tuple(dts)): as_q(c) for e, dts, c in data["terms"]})


def _key_var(n, i):
    e = [0] * n
    e[i - 1] = 1
    return (tuple(e), ())


def basis_forms(n: int, max_poly_degree: int):
    """All monomial forms t^b dt_J on the n-simplex with |b| <= max_poly_degree."""
    out = []
    for deg in range(max_poly_degree + 1):
        for e in _compositions(deg, n):
            for r in range(n + 1):
                for dts in itertools.combinations(range(1, n + 1), r):
                    out.append(PolyForm.monomial(n, e, dts))
    return out


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# simplicial structure on forms


def pullback(form: PolyForm, m: int, vertex_map: Sequence[int]) -> PolyForm:
    """Pull back along the affine map Delta^m -> Delta^n sending vertex l to vertex_map[l]."""
    n = form.n
    if len(vertex_map) != m + 1 or any(not 0 <= v <= n for v in vertex_map):
        raise ValueError("bad vertex map")
    t_img, dt_img = {}, {}
    for j in range(1, n + 1):
        tj = {}
        dtj = {}
        for l, v in enumerate(vertex_map):
            if v == j:
                add_scaled(tj, PolyForm.t(m, l).terms)
                add_scaled(dtj, PolyForm.dt(m, l).terms)
        t_img[j], dt_img[j] = tj, dtj
    return PolyForm(m, _substitute(form.terms, m, t_img, dt_img))


def coface_vertex_map(n: int, j: int):
    """delta^j : Delta^{n-1} -> Delta^n, skipping vertex j."""
    return tuple(l if l < j else l + 1 for l in range(n))


def codegeneracy_vertex_map(n: int, j: int):
    """sigma^j : Delta^{n+1} -> Delta^n, hitting vertex j twice."""
    return tuple(l if l <= j else l - 1 for l in range(n + 2))


def face(form: PolyForm, j: int) -> PolyForm:
    return pullback(form, form.n - 1, coface_vertex_map(form.n, j))


def degeneracy(form: PolyForm, j: int) -> PolyForm:
    return pullback(form, form.n + 1, codegeneracy_vertex_map(form.n, j))


# ---------------------------------------------------------------------------
# cochains and chains


def faces_of(n: int):
    """Index tuples of all faces of Delta^n, by dimension then lexicographically."""
    return [I for k in range(n + 1) for I in itertools.combinations(range(n + 1), k + 1)]


def _check_face(n, I):
    I = tuple(I)
    if not I or list(I) != sorted(set(I)) or I[0] < 0 or I[-1] > n:
        raise ValueError(f"{I} is not a face of the {n}-simplex")
    return I


def face_name(I) -> str:
    return "".join(str(i) for i in I) if max(I) < 10 else ".".join(str(i) for i in I)


def parse_face(s: str):
    return tuple(int(x) for x in (s.split(".") if "." in s else s))


def cochain_label(I):
    return "c" + face_name(I)


def chain_label(I):
    return "a" + face_name(I)


def label_face(label: str):
    return parse_face(label[1:])


def cochain_space(n: int) -> GradedSpace:
    return GradedSpace.from_pairs((cochain_label(I), -(len(I) - 1)) for I in faces_of(n))


def chain_space(n: int) -> GradedSpace:
    return GradedSpace.from_pairs((chain_label(I), len(I) - 1) for I in faces_of(n))


def pairing_sign(I) -> int:
    k = len(I) - 1
    return parity_sign(k * (k - 1) // 2)


class Cochain:
    """Element of the normalized cochains C^*(Delta^n) on the basis alpha_I."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Mapping = None):
        self.n = int(n)
        self.coeffs = {}
        for I, c in (coeffs or {}).items():
            c = as_q(c)
            if c:
                self.coeffs[_check_face(n, I)] = c

    @classmethod
    def basis(cls, n, I):
        return cls(n, {tuple(I): 1})

    def __add__(self, other):
        out = dict(self.coeffs)
        add_scaled(out, other.coeffs)
        return Cochain(self.n, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return Cochain(self.n, {k: v * as_q(c) for k, v in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, Cochain) and self.n == other.n and self.coeffs == other.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        return " + ".join(f"{q_str(c)}*alpha_{face_name(I)}" for I, c in sorted(self.coeffs.items())) or "0"

    def d(self) -> "Cochain":
        """Coboundary, the dual of the chain boundary under the signed pairing."""
        out = {}
        for I, c in self.coeffs.items():
            for m in range(self.n + 1):
                if m in I:
                    continue
                J = tuple(sorted(I + (m,)))
                add_to(out, J, parity_sign(J.index(m)) * c)
        return Cochain(self.n, out)

    def pair(self, chain: Mapping) -> Fraction:
        """<alpha, a> with chain given as {face: coefficient}."""
        return sum((c * chain.get(I, 0) * pairing_sign(I) for I, c in self.coeffs.items()), Fraction(0))

    def to_vector(self):
        return {cochain_label(I): c for I, c in self.coeffs.items()}

    @classmethod
    def from_vector(cls, n, v):
        return cls(n, {label_face(l): c for l, c in v.items()})

    def face(self, j):
        return Cochain(self.n - 1, cochain_face(self.coeffs, self.n, j))

    def degeneracy(self, j):
        return Cochain(self.n + 1, cochain_degeneracy(self.coeffs, self.n, j))


def cochain_face(coeffs, n, j):
    """Pullback of cochains along delta^j : Delta^{n-1} -> Delta^n."""
    f = coface_vertex_map(n, j)
    out = {}
    for J in faces_of(n - 1):
        I = tuple(f[l] for l in J)
        if I in coeffs:
            out[J] = coeffs[I]
    return out


def cochain_degeneracy(coeffs, n, j):
    f = codegeneracy_vertex_map(n, j)
    out = {}
    for J in faces_of(n + 1):
        I = tuple(f[l] for l in J)
        if len(set(I)) == len(I) and I in coeffs:
            out[J] = coeffs[I]
    return out


def chain_boundary(I) -> Dict[tuple, int]:
    if len(I) == 1:
        return {}
    return {I[:j] + I[j + 1:]: parity_sign(j) for j in range(len(I))}


def chain_face(I, n, j):
    """delta^j on chains: a_J of Delta^{n-1} goes to a_{delta^j J} of Delta^n."""
    f = coface_vertex_map(n, j)
    return tuple(f[l] for l in I)


def chain_degeneracy(I, n, j):
    """sigma^j on normalized chains of Delta^{n+1}; None when the image is degenerate."""
    f = codegeneracy_vertex_map(n, j)
    img = tuple(f[l] for l in I)
    return img if len(set(img)) == len(img) else None


# ---------------------------------------------------------------------------
# the retract (i, p, K)


@lru_cache(maxsize=None)
def _whitney_terms(n, I):
    k = len(I) - 1
    total = PolyForm(n)
    for j in range(k + 1):
        term = PolyForm.t(n, I[j])
        for l in range(k + 1):
            if l != j:
                term = term * PolyForm.dt(n, I[l])
        total = total + term.scale(parity_sign(j))
    return total.scale(factorial(k))


def whitney(n: int, I) -> PolyForm:
    """Whitney elementary form omega_I = k! sum_j (-1)^j t_{i_j} dt_{i_0}..^..dt_{i_k}."""
    return _whitney_terms(n, _check_face(n, I))


def include(c: Cochain) -> PolyForm:
    out = PolyForm(c.n)
    for I, v in c.coeffs.items():
        out = out + whitney(c.n, I).scale(v)
    return out


def _integrate_top(terms, k) -> Fraction:
    top = tuple(range(1, k + 1))
    total = Fraction(0)
    for (e, dts), c in terms.items():
        if dts == top:
            num = 1
            for b in e:
                num *= factorial(b)
            total += c * Fraction(num, factorial(sum(e) + k))
    return total


def integrate_face(form: PolyForm, I) -> Fraction:
    """Integral of the form over the face I, via b!/(|b|+k)! on the face's top monomials."""
    I = _check_face(form.n, I)
    k = len(I) - 1
    if I[0] == 0:
        # restriction just drops the coordinates off the face
        keep = I[1:]
        off = [j for j in range(1, form.n + 1) if j not in keep]
        restricted = {}
        for (e, dts), c in form.terms.items():
            if len(dts) == k and all(e[j - 1] == 0 for j in off) and all(j in keep for j in dts):
                add_to(restricted, (tuple(e[j - 1] for j in keep), tuple(range(1, k + 1))), c)
        return _integrate_top(restricted, k)
    return _integrate_top(pullback(form, k, I).terms, k)


def integrate_top(form: PolyForm) -> Fraction:
    return _integrate_top(form.terms, form.n)


def project(form: PolyForm) -> Cochain:
    return Cochain(form.n, {I: integrate_face(form, I) for I in faces_of(form.n)
                            if len(I) - 1 in form.form_degrees()})


@lru_cache(maxsize=None)
def _h_monomial(n: int, i: int, key: Key):
    """Homotopy h_i on one monomial: integrate the du-part of the pullback along
    (u, t) -> u t + (1 - u) e_i over u in [0, 1]."""
    m = n + 1
    u = _var(m, m)
    du = _dvar(m, m)
    one_minus_u = dict(_unit(m))
    add_scaled(one_minus_u, u, -1)
    t_img, dt_img = {}, {}
    for j in range(1, n + 1):
        tj = _mul(u, _var(m, j))
        dtj = _mul(u, _dvar(m, j))
        add_scaled(dtj, _mul(_var(m, j), du))
        if j == i:
            add_scaled(tj, one_minus_u)
            add_scaled(dtj, du, -1)
        t_img[j], dt_img[j] = tj, dtj
    (e, dts) = key
    pulled = _substitute({(e + (0,), dts): Fraction(1)}, m, t_img, dt_img)
    out: Dict[Key, Fraction] = {}
    for (ee, dd), c in pulled.items():
        if m not in dd:
            continue
        # move du to the front, then integrate u^{ee[-1]} over [0, 1]
        sign = parity_sign(len(dd) - 1)
        add_to(out, (ee[:-1], dd[:-1]), sign * c * Fraction(1, ee[-1] + 1))
    return tuple(out.items())


def vertex_homotopy(form: PolyForm, i: int) -> PolyForm:
    """h_i, with d h_i + h_i d = id - (evaluation at vertex i)."""
    out: Dict[Key, Fraction] = {}
    for key, c in form.terms.items():
        for k2, v in _h_monomial(form.n, i, key):
            add_to(out, k2, c * v)
    return PolyForm(form.n, out)


@lru_cache(maxsize=None)
def _K_monomial(n: int, key: Key):
    form = PolyForm(n, {key: Fraction(1)})
    out = PolyForm(n)
    for I in faces_of(n):
        if len(I) == n + 1:
            continue
        x = form
        for i in I:
            x = vertex_homotopy(x, i)
            if x.is_zero():
                break
        if not x.is_zero():
            out = out + (whitney(n, I) * x).scale(parity_sign(len(I)))
    return tuple(out.terms.items())


def dupont_homotopy(form: PolyForm) -> PolyForm:
    """Dupont's operator K = sum_{k<n} (-1)^(k+1) sum_{|I|=k+1} omega_I h_{i_k} ... h_{i_0}.

    Satisfies dK + Kd = ip - id, K^2 = 0, K i = 0, p K = 0, and commutes with
    faces and degeneracies.
    """
    out: Dict[Key, Fraction] = {}
    for key, c in form.terms.items():
        for k2, v in _K_monomial(form.n, key):
            add_to(out, k2, c * v)
    return PolyForm(form.n, out)


# ---------------------------------------------------------------------------
# chains and cochains of finite simplicial complexes


def closure(facets):
    """All nonempty faces of the given simplices, sorted by dimension."""
    out = set()
    for F in facets:
        F = tuple(sorted(F))
        for r in range(1, len(F) + 1):
            out.update(itertools.combinations(F, r))
    return sorted(out, key=lambda I: (len(I), I))


def chain_complex(faces):
    """(space, boundary, Alexander-Whitney coproduct) for a simplicial complex."""
    from .graded import GradedLinearMap

    space = GradedSpace.from_pairs((chain_label(I), len(I) - 1) for I in faces)
    entries = {}
    for I in faces:
        for J, s in chain_boundary(I).items():
            add_to(entries, (chain_label(J), chain_label(I)), s)
    boundary = GradedLinearMap(space, space, -1, entries)
    coproduct = {chain_label(I): {(chain_label(I[:j + 1]), chain_label(I[j:])): Fraction(1) for j in range(len(I))}
                 for I in faces}
    return space, boundary, coproduct


def cochain_complex(faces):
    """(space, coboundary, cup product) for a simplicial complex, dual to chain_complex."""
    from .graded import GradedLinearMap

    space = GradedSpace.from_pairs((cochain_label(I), -(len(I) - 1)) for I in faces)
    fs = set(faces)
    entries = {}
    for I in faces:
        for J in faces:
            if len(J) == len(I) + 1 and set(I) <= set(J):
                m = (set(J) - set(I)).pop()
                add_to(entries, (cochain_label(J), cochain_label(I)), parity_sign(J.index(m)))
    cob = GradedLinearMap(space, space, -1, entries)
    product = {}
    for I in faces:
        for J in faces:
            if I[-1] == J[0] and I + J[1:] in fs:
                product[(cochain_label(I), cochain_label(J))] = {cochain_label(I + J[1:]): Fraction(1)}
    return space, cob, product


def retract_identity_failures(n: int, max_poly_degree: int):
    """Retract and simplicial identities for (i, p, K) on Delta^n that fail.

    Forms range over all monomials of polynomial degree <= max_poly_degree.
    Returns a list of (identity name, witness).
    """
    bad = []
    for I in faces_of(n):
        c = Cochain.basis(n, I)
        if project(include(c)) != c:
            bad.append(("p i = id", I))
        if dupont_homotopy(include(c)):
            bad.append(("K i = 0", I))
        if n > 0:
            for j in range(n + 1):
                if include(c.face(j)) != face(include(c), j):
                    bad.append(("i face", (I, j)))
        for j in range(n + 1):
            if include(c.degeneracy(j)) != degeneracy(include(c), j):
                bad.append(("i degeneracy", (I, j)))
    for w in basis_forms(n, max_poly_degree):
        Kw = dupont_homotopy(w)
        ip = include(project(w))
        if Kw.d() + dupont_homotopy(w.d()) != ip - w:
            bad.append(("dK + Kd = ip - id", w))
        if dupont_homotopy(Kw):
            bad.append(("K K = 0", w))
        if project(Kw):
            bad.append(("p K = 0", w))
        if n > 0:
            for j in range(n + 1):
                f = face(w, j)
                if project(f) != project(w).face(j):
                    bad.append(("p face", (w, j)))
                if dupont_homotopy(f) != face(Kw, j):
                    bad.append(("K face", (w, j)))
        for j in range(n + 1):
            g = degeneracy(w, j)
            if project(g) != project(w).degeneracy(j):
                bad.append(("p degeneracy", (w, j)))
            if dupont_homotopy(g) != degeneracy(Kw, j):
                bad.append(("K degeneracy", (w, j)))
    return bad


# ---------------------------------------------------------------------------
# transferred C-infinity structures


@lru_cache(maxsize=None)
def cochain_evaluator(n: int, top_only: bool = False):
    """Tree evaluator for the transfer of A_n onto C^*(Delta^n) through (i, p, K).

    With ``top_only`` the root projection keeps only the coefficient of the
    top cochain, which needs no face restrictions.
    """
    from .transfer import AlgebraTreeEvaluator

    top = cochain_label(tuple(range(n + 1)))
    return AlgebraTreeEvaluator(
        cochain_space(n),
        lambda label: whitney(n, label_face(label)),
        (lambda form: {top: integrate_top(form)}) if top_only else (lambda form: project(form).to_vector()),
        dupont_homotopy,
        lambda x, y, sign: (x * y).scale(sign),
        lambda form: form.is_zero(),
    )


def transferred_product(n: int, word) -> Dict[str, Fraction]:
    """m_k on C^*(Delta^n) for k = len(word); m_1 is the coboundary."""
    word = tuple(word)
    if len(word) == 1:
        return Cochain.from_vector(n, {word[0]: 1}).d().to_vector()
    return cochain_evaluator(n).op_k(len(word), word)


def cochain_ainf(n: int, bound: int = 4):
    from .transfer import AInfAlgebra

    ops = {k: (lambda w: transferred_product(n, w)) for k in range(1, bound + 1)}
    return AInfAlgebra(cochain_space(n), ops, bound, commutative=True)


def _words_by_dimension(m: int, k: int, total: int):
    """Words of k faces of Delta^m whose dimensions add up to ``total``."""
    by_dim = {}
    for I in faces_of(m):
        by_dim.setdefault(len(I) - 1, []).append(I)
    for dims in itertools.product(range(m + 1), repeat=k):
        if sum(dims) == total:
            yield from itertools.product(*(by_dim[d] for d in dims))


def dual_sign(word_faces, J) -> int:
    """Sign relating <m_k(alpha_w), a_J> to the coefficient of a_w in Delta_k(a_J).

    Products of the stored pairing signs, the Koszul sign of the tensor
    pairing, the dual-map sign (-1)^{|m_k||a_J|}, and (-1)^{k-1} from composing
    with -id (which puts the vertices in MC form -1/2[x, x]).
    """
    k = len(word_faces)
    dims = [len(I) - 1 for I in word_faces]
    s = pairing_sign(J)
    for I in word_faces:
        s *= pairing_sign(I)
    # <alpha_1 ... alpha_k, a_1 ... a_k>: alpha_l passes a_j for j < l
    s *= parity_sign(sum(dims[j] * dims[l] for j in range(k) for l in range(j + 1, k)))
    return s * parity_sign(k * (len(J) - 1) + k - 1)


def _desuspended_word(w):
    return tuple(suspend_label(chain_label(I), -1) for I in w)


@lru_cache(maxsize=None)
def _top_coproduct(m: int, k: int, basis_only: bool = False):
    """Delta_k(a_{0..m}) on Delta^m, as {tuple of faces: coefficient}.

    With ``basis_only`` only words whose desuspension is a Lie basis word are
    evaluated; these coefficients already determine the Lie element d_k.
    """
    from .free_lie import is_basis_word

    top = tuple(range(m + 1))
    W = suspend(chain_space(m), -1)
    out = {}
    for w in _words_by_dimension(m, k, m + k - 2):
        if basis_only and not is_basis_word(W, _desuspended_word(w)):
            continue
        labels = tuple(cochain_label(I) for I in w)
        if k == 1:
            val = transferred_product(m, labels).get(cochain_label(top))
        else:
            val = cochain_evaluator(m, True).op_k(k, labels).get(cochain_label(top))
        if val:
            out[w] = val * dual_sign(w, top)
    return tuple(sorted(out.items()))


def chain_delta(n: int, k: int, J) -> Dict[tuple, Fraction]:
    """Delta_k(a_J) on the chains of Delta^n, a tensor of chain labels."""
    J = _check_face(n, J)
    out = {}
    for w, c in _top_coproduct(len(J) - 1, k):
        out[tuple(chain_label(tuple(J[i] for i in I)) for I in w)] = c
    return out


def chain_coalgebra(n: int, bound: int = 4):
    """The C-infinity coalgebra on the chains of Delta^n dual to the transferred m_k."""
    from .transfer import AInfCoalgebra

    V = chain_space(n)
    ops = {k: {chain_label(J): chain_delta(n, k, J) for J in faces_of(n)} for k in range(1, bound + 1)}
    return AInfCoalgebra(V, ops, bound, commutative=True)


DEFAULT_ORDER = 4


@lru_cache(maxsize=None)
def _top_differential(m: int, k: int):
    """Lyndon coordinates of d_k(s^-1 a_{0..m}) in the free Lie algebra on s^-1 C_*(Delta^m).

    Returned as a tuple of (tuple of faces, coefficient) over basis words.
    The coefficients of d_k on basis words are computed directly; the Lie
    element is recovered by solving the unitriangular system given by the
    expansions of the basis brackets, one letter multiset at a time.
    """
    from .free_lie import expand_basis_word
    from .linalg import solve_in_span
    from .transfer import suspension_sign

    W = suspend(chain_space(m), -1)
    if k == 1:
        return tuple((w, -c * suspension_sign([len(w[0]) - 1], -1)) for w, c in _top_coproduct(m, 1))
    known = {}
    for w, c in _top_coproduct(m, k, True):
        known[w] = parity_sign(k) * suspension_sign([len(I) - 1 for I in w], -1) * c
    if not known:
        return ()
    from .free_lie import is_basis_word

    blocks: Dict[tuple, list] = {}
    for w in _words_by_dimension(m, k, m + k - 2):
        if is_basis_word(W, _desuspended_word(w)):
            blocks.setdefault(tuple(sorted(w)), []).append(w)
    out = {}
    for block in blocks.values():
        target = {u: known[u] for u in block if u in known}
        if not target:
            continue
        rows = [_desuspended_word(u) for u in block]
        cols = []
        for u in rows:
            e = expand_basis_word(W, u)
            cols.append({r: e.get(r, 0) for r in rows})
        sol = solve_in_span(cols, {_desuspended_word(u): c for u, c in target.items()}, rows)
        if sol is None:
            raise ArithmeticError("coproduct coefficients are not those of a Lie element")
        for u, c in zip(block, sol):
            if c:
                out[u] = c
    return tuple(sorted(out.items()))


@lru_cache(maxsize=None)
def build_Ln(n: int, N: int = DEFAULT_ORDER):
    """The complete free DGL model of Delta^n, truncated at bracket length N.

    Generators s^-1 a_I for the faces I of Delta^n; the differential is read
    off the transferred C-infinity coalgebra on chains, face by face through
    the top face of Delta^{dim I}.
    """
    from .free_lie import CDGLPresentation, LieSeries

    W = suspend(chain_space(n), -1)
    diff = {}
    for J in faces_of(n):
        coords = {}
        for k in range(1, N + 1):
            for w, c in _top_differential(len(J) - 1, k):
                word = tuple(suspend_label(chain_label(tuple(J[i] for i in I)), -1) for I in w)
                coords[word] = c
        diff[suspend_label(chain_label(J), -1)] = LieSeries.from_lyndon(W, coords, N)
    return CDGLPresentation(W, diff, N, f"L_{n}")


def _generator(face) -> str:
    return suspend_label(chain_label(face), -1)


def Ln_coface(n: int, j: int, N: int = DEFAULT_ORDER):
    """delta^j : L_{n-1} -> L_n, s^-1 a_I to s^-1 a_{delta^j I}."""
    from .free_lie import CDGLMorphism

    S, T = build_Ln(n - 1, N), build_Ln(n, N)
    return CDGLMorphism(S, T, {_generator(I): T.generator(_generator(chain_face(I, n, j)))
                               for I in faces_of(n - 1)})


def Ln_codegeneracy(n: int, j: int, N: int = DEFAULT_ORDER):
    """sigma^j : L_{n+1} -> L_n; generators of degenerate faces go to 0."""
    from .free_lie import CDGLMorphism

    S, T = build_Ln(n + 1, N), build_Ln(n, N)
    images = {}
    for I in faces_of(n + 1):
        J = chain_degeneracy(I, n, j)
        if J is not None:
            images[_generator(I)] = T.generator(_generator(J))
    return CDGLMorphism(S, T, images)


def cosimplicial_identity_failures(n_max: int, N: int = DEFAULT_ORDER):
    """The cosimplicial identities among the Ln_coface / Ln_codegeneracy maps that fail."""
    from .free_lie import CDGLMorphism

    bad = []
    for n in range(2, n_max + 1):
        for i in range(n):
            for j in range(i + 1, n + 1):
                if Ln_coface(n, j, N) @ Ln_coface(n - 1, i, N) != Ln_coface(n, i, N) @ Ln_coface(n - 1, j - 1, N):
                    bad.append(("dd", n, i, j))
    for n in range(0, n_max - 1):
        for i in range(n + 1):
            for j in range(i, n + 1):
                if (Ln_codegeneracy(n, j, N) @ Ln_codegeneracy(n + 1, i, N)
                        != Ln_codegeneracy(n, i, N) @ Ln_codegeneracy(n + 1, j + 1, N)):
                    bad.append(("ss", n, i, j))
    for n in range(0, n_max):
        ident = CDGLMorphism.identity(build_Ln(n, N))
        for j in range(n + 1):
            for i in range(n + 2):
                lhs = Ln_codegeneracy(n, j, N) @ Ln_coface(n + 1, i, N)
                if i < j:
                    rhs = Ln_coface(n, i, N) @ Ln_codegeneracy(n - 1, j - 1, N)
                elif i in (j, j + 1):
                    rhs = ident
                else:
                    rhs = Ln_coface(n, i - 1, N) @ Ln_codegeneracy(n - 1, j, N)
                if lhs != rhs:
                    bad.append(("sd", n, i, j))
    return bad


def Ln_failures(n: int, N: int = DEFAULT_ORDER, cosimplicial: bool = True):
    """The defining properties of L_n that fail.

    d^2 = 0, the vertex condition d s^-1 a_i = -1/2 [s^-1 a_i, s^-1 a_i], the
    linear part equal to the desuspended chain boundary, and (optionally)
    cofaces and codegeneracies commuting with d together with the
    cosimplicial identities up to dimension n.
    """
    from .free_lie import LieSeries, mc_residual

    P = build_Ln(n, N)
    W = P.generators
    bad = []
    if not P.d_squared_vanishes():
        bad.append(("d^2 = 0", n))
    for i in range(n + 1):
        if mc_residual(P.generator(_generator((i,))), P):
            bad.append(("vertex", i))
    for I in faces_of(n):
        lin = {(_generator(J),): Fraction(c) for J, c in chain_boundary(I).items()}
        if P.differential[_generator(I)].component(1) != LieSeries(W, lin, N):
            bad.append(("linear part", I))
    if cosimplicial:
        for m in range(1, n + 1):
            for j in range(m + 1):
                if not Ln_coface(m, j, N).commutes_with_differential():
                    bad.append(("coface", (m, j)))
        for m in range(0, n):
            for j in range(m + 1):
                if not Ln_codegeneracy(m, j, N).commutes_with_differential():
                    bad.append(("codegeneracy", (m, j)))
        bad.extend(cosimplicial_identity_failures(n, N))
    return bad
