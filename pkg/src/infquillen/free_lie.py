"""Free graded Lie algebras truncated by bracket length, and finite nilpotent DGLs.

A :class:`LieSeries` is kept as its image in the tensor algebra (a sparse
combination of words) because equality, brackets and derivations are exact
and cheap there; :meth:`LieSeries.lyndon` gives coordinates in the Lyndon
basis.  For generators of odd degree the basis also contains the squares
``[w, w]`` of odd Lyndon brackets, which do not vanish in the graded setting.

Every computation carries a truncation order ``N``: results are exact modulo
brackets of length > N.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import linalg
from .graded import (GradedLinearMap, GradedSpace, Tensor, Vector, add_scaled, add_to, as_q,
                     parity_sign, q_str)


class NotALiePolynomial(ValueError):
    def __init__(self, length, detail=""):
        self.length = length
        super().__init__(f"component of word length {length} is not a Lie polynomial{detail}")


# ---------------------------------------------------------------------------
# tensor algebra helpers


def word_degree(V: GradedSpace, w) -> int:
    return sum(V.degree(l) for l in w)


def tensor_mul(a: Tensor, b: Tensor, N: Optional[int] = None) -> Tensor:
    out: Tensor = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            if N is None or len(wa) + len(wb) <= N:
                add_to(out, wa + wb, ca * cb)
    return out


def tensor_bracket(V: GradedSpace, a: Tensor, b: Tensor, N: Optional[int] = None) -> Tensor:
    """Graded commutator ab - (-1)^{|a||b|} ba, computed word by word."""
    out: Tensor = {}
    for wa, ca in a.items():
        da = word_degree(V, wa)
        for wb, cb in b.items():
            if N is not None and len(wa) + len(wb) > N:
                continue
            c = ca * cb
            add_to(out, wa + wb, c)
            add_to(out, wb + wa, -parity_sign(da * word_degree(V, wb)) * c)
    return out


def tensor_derivation(V: GradedSpace, images: Mapping[str, Tensor], degree: int, t: Tensor,
                      N: Optional[int] = None) -> Tensor:
    """Extend ``letter -> images[letter]`` to a derivation of the given degree."""
    out: Tensor = {}
    for w, c in t.items():
        pre = 0
        for j, letter in enumerate(w):
            img = images.get(letter)
            if img:
                s = parity_sign(degree * pre) * c
                head, tail = w[:j], w[j + 1:]
                for u, cu in img.items():
                    if N is None or len(head) + len(u) + len(tail) <= N:
                        add_to(out, head + u + tail, s * cu)
            pre += V.degree(letter)
    return out


def derivation_coefficients(V: GradedSpace, images: Mapping[str, Tensor], degree: int, t: Tensor,
                            targets) -> Dict[tuple, Fraction]:
    """The coefficients of tensor_derivation(V, images, degree, t) at the given words only."""
    by_word: Dict[tuple, list] = {}
    for g, img in images.items():
        for v, c in img.items():
            if c:
                by_word.setdefault(v, []).append((g, c))
    out = {}
    for u in targets:
        total = Fraction(0)
        pre = [0]
        for letter in u:
            pre.append(pre[-1] + V.degree(letter))
        for i in range(len(u)):
            head = u[:i]
            s = parity_sign(degree * pre[i])
            for j in range(i + 1, len(u) + 1):
                for g, c in by_word.get(u[i:j], ()):
                    tc = t.get(head + (g,) + u[j:])
                    if tc:
                        total += s * tc * c
        out[u] = total
    return out


def truncate(t: Tensor, N: int) -> Tensor:
    return {w: c for w, c in t.items() if len(w) <= N}


def length_component(t: Tensor, k: int) -> Tensor:
    return {w: c for w, c in t.items() if len(w) == k}


# ---------------------------------------------------------------------------
# Lyndon words and the graded Lyndon basis


def _key(V: GradedSpace, w) -> Tuple[int, ...]:
    return tuple(V.index(l) for l in w)


def is_lyndon_key(k: Sequence[int]) -> bool:
    k = tuple(k)
    return len(k) > 0 and all(k < k[i:] for i in range(1, len(k)))


def is_lyndon(V: GradedSpace, w) -> bool:
    return is_lyndon_key(_key(V, w))


def standard_factorization(V: GradedSpace, w):
    """w = uv with v the smallest proper suffix (the longest Lyndon proper suffix)."""
    k = _key(V, w)
    i = min(range(1, len(k)), key=lambda j: k[j:])
    return w[:i], w[i:]


def is_basis_word(V: GradedSpace, w) -> bool:
    if is_lyndon(V, w):
        return True
    n = len(w)
    if n % 2 == 0:
        u = w[: n // 2]
        return u == w[n // 2:] and is_lyndon(V, u) and word_degree(V, u) % 2 == 1
    return False


def basis_tree(V: GradedSpace, w):
    """Bracketing tree of a basis word: a letter, or a pair of subtrees."""
    if len(w) == 1:
        return w[0]
    if not is_lyndon(V, w):
        u = w[: len(w) // 2]
        t = basis_tree(V, u)
        return (t, t)
    u, v = standard_factorization(V, w)
    return (basis_tree(V, u), basis_tree(V, v))


def tree_string(t) -> str:
    return t if isinstance(t, str) else f"[{tree_string(t[0])},{tree_string(t[1])}]"


def bracket_string(V: GradedSpace, w) -> str:
    return tree_string(basis_tree(V, w))


_TOKEN = re.compile(r"\s*(\[|\]|,|[^\[\],\s]+)")


def parse_bracket(s: str):
    """Parse ``[a,[a,b]]`` into a bracketing tree."""
    toks = _TOKEN.findall(s)
    pos = 0

    def go():
        nonlocal pos
        if pos >= len(toks):
            raise ValueError(f"truncated bracket expression {s!r}")
        t = toks[pos]
        pos += 1
        if t == "[":
            a = go()
            if toks[pos] != ",":
                raise ValueError(f"expected ',' in {s!r}")
            pos += 1
            b = go()
            if toks[pos] != "]":
                raise ValueError(f"expected ']' in {s!r}")
            pos += 1
            return (a, b)
        if t in "],":
            raise ValueError(f"unexpected {t!r} in {s!r}")
        return t

    tree = go()
    if pos != len(toks):
        raise ValueError(f"trailing tokens in {s!r}")
    return tree


def tree_leaves(t):
    return (t,) if isinstance(t, str) else tree_leaves(t[0]) + tree_leaves(t[1])


def expand_tree(V: GradedSpace, t) -> Tensor:
    if isinstance(t, str):
        if t not in V:
            raise KeyError(f"unknown generator {t!r}")
        return {(t,): Fraction(1)}
    return tensor_bracket(V, expand_tree(V, t[0]), expand_tree(V, t[1]))


_basis_cache: Dict[Tuple[GradedSpace, tuple], Tensor] = {}


def expand_basis_word(V: GradedSpace, w) -> Tensor:
    key = (V, tuple(w))
    if key not in _basis_cache:
        _basis_cache[key] = expand_tree(V, basis_tree(V, w))
    return _basis_cache[key]


def lyndon_decompose(V: GradedSpace, t: Tensor) -> Dict[tuple, Fraction]:
    """Coordinates of a Lie element in the graded Lyndon basis.

    Uses triangularity: the lexicographically smallest word of a Lie element
    is the leading word of one basis bracket.  Raises NotALiePolynomial when
    the leading word is not a basis word.
    """
    rest = {w: c for w, c in t.items() if c}
    out: Dict[tuple, Fraction] = {}
    while rest:
        w = min(rest, key=lambda u: (len(u), _key(V, u)))
        if not is_basis_word(V, w):
            raise NotALiePolynomial(len(w), f" (leading word {'.'.join(w)})")
        e = expand_basis_word(V, w)
        c = rest[w] / e[w]
        out[w] = c
        add_scaled(rest, e, -c)
    return out


def lyndon_words(n_letters: int, max_len: int):
    """Duval's algorithm: Lyndon words over range(n_letters) up to max_len, as index tuples."""
    if n_letters == 0:
        return []
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        m = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - m])
        while w and w[-1] == n_letters - 1:
            w.pop()
    return out


def basis_words(V: GradedSpace, N: int):
    """All graded Lyndon basis words of length <= N, sorted by (length, lex)."""
    out = []
    for k in lyndon_words(len(V), N):
        w = tuple(V.labels[i] for i in k)
        out.append(w)
        if 2 * len(w) <= N and word_degree(V, w) % 2 == 1:
            out.append(w + w)
    return sorted(out, key=lambda u: (len(u), _key(V, u)))


# ---------------------------------------------------------------------------
# Lie series


class LieSeries:
    """Element of the free graded Lie algebra on ``space``, truncated at bracket length ``order``."""

    __slots__ = ("space", "terms", "order")

    def __init__(self, space: GradedSpace, terms: Tensor, order: int):
        self.space = space
        self.order = int(order)
        self.terms = {w: as_q(c) for w, c in terms.items() if c and len(w) <= self.order}

    @classmethod
    def zero(cls, space, order):
        return cls(space, {}, order)

    @classmethod
    def generator(cls, space, label, order, coeff=1):
        if label not in space:
            raise KeyError(label)
        return cls(space, {(label,): as_q(coeff)}, order)

    @classmethod
    def from_lyndon(cls, space, coords: Mapping, order) -> "LieSeries":
        """From ``{bracket string or basis word: coefficient}``."""
        t: Tensor = {}
        for key, c in coords.items():
            tree = parse_bracket(key) if isinstance(key, str) else basis_tree(space, tuple(key))
            add_scaled(t, expand_tree(space, tree), as_q(c))
        return cls(space, t, order)

    @classmethod
    def from_tensor(cls, space, t: Tensor, order) -> "LieSeries":
        return dynkin_project(space, t, order)

    def _check(self, other):
        if not isinstance(other, LieSeries) or other.space != self.space:
            raise ValueError("Lie series over different generator spaces")

    def __add__(self, other):
        self._check(other)
        t = dict(self.terms)
        add_scaled(t, other.terms)
        return LieSeries(self.space, t, min(self.order, other.order))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LieSeries":
        c = as_q(c)
        return LieSeries(self.space, {w: v * c for w, v in self.terms.items()}, self.order)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LieSeries):
            return NotImplemented
        return self.space == other.space and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self):
        return {word_degree(self.space, w) for w in self.terms}

    def degree(self) -> Optional[int]:
        d = self.degrees()
        if len(d) > 1:
            raise ValueError(f"inhomogeneous Lie series, degrees {sorted(d)}")
        return d.pop() if d else None

    def component(self, k: int) -> "LieSeries":
        """Bracket-length k part."""
        return LieSeries(self.space, length_component(self.terms, k), self.order)

    def truncate(self, n: int) -> "LieSeries":
        return LieSeries(self.space, self.terms, min(n, self.order))

    def lyndon(self) -> Dict[tuple, Fraction]:
        return lyndon_decompose(self.space, self.terms)

    def lyndon_strings(self) -> Dict[str, Fraction]:
        return {bracket_string(self.space, w): c for w, c in self.lyndon().items()}

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = [f"{q_str(c)}*{s}" for s, c in self.lyndon_strings().items()]
        return " + ".join(parts)

    def to_json(self):
        coords = self.lyndon()
        ordered = sorted(coords, key=lambda u: (len(u), _key(self.space, u)))
        return [[bracket_string(self.space, w), q_str(coords[w])] for w in ordered]

    @classmethod
    def from_json(cls, space, data, order):
        return cls.from_lyndon(space, {s: as_q(c) for s, c in data}, order)

    def evaluate(self, images: Mapping[str, Vector], L: "FiniteDGL") -> Vector:
        """Image under the Lie morphism sending each generator to images[generator]."""
        return evaluate_coordinates(self.space, self.lyndon(), images, L)


def evaluate_coordinates(space: GradedSpace, coords: Mapping[tuple, Fraction], images: Mapping[str, Vector],
                         L: "FiniteDGL") -> Vector:
    """Evaluate a Lie element given by basis-word coordinates on images of the generators."""
    out: Vector = {}
    memo: dict = {}

    def ev(tree):
        if isinstance(tree, str):
            return images.get(tree, {})
        if tree not in memo:
            memo[tree] = L.bracket(ev(tree[0]), ev(tree[1]))
        return memo[tree]

    for w, c in coords.items():
        add_scaled(out, ev(basis_tree(space, w)), c)
    return {a: c for a, c in out.items() if c}


def lie_bracket(x: LieSeries, y: LieSeries) -> LieSeries:
    x._check(y)
    N = min(x.order, y.order)
    return LieSeries(x.space, tensor_bracket(x.space, x.terms, y.terms, N), N)


def dynkin_map(V: GradedSpace, t: Tensor) -> Tensor:
    """Left-normed bracketing a1...ak -> [..[[a1,a2],a3],..,ak]."""
    out: Tensor = {}
    for w, c in t.items():
        acc: Tensor = {w[:1]: Fraction(1)}
        for letter in w[1:]:
            acc = tensor_bracket(V, acc, {(letter,): Fraction(1)})
        add_scaled(out, acc, c)
    return out


def dynkin_project(V: GradedSpace, t: Tensor, N: Optional[int] = None) -> LieSeries:
    """Turn a tensor into a Lie series, checking the graded Dynkin criterion length by length."""
    if () in t and t[()]:
        raise NotALiePolynomial(0)
    if N is None:
        N = max((len(w) for w in t), default=1)
    out: Tensor = {}
    for k in sorted({len(w) for w in t if t[w]}):
        if k > N:
            continue
        comp = length_component(t, k)
        dk = dynkin_map(V, comp)
        diff = dict(dk)
        add_scaled(diff, comp, -k)
        if diff:
            raise NotALiePolynomial(k)
        add_scaled(out, dk, Fraction(1, k))
    return LieSeries(V, out, N)


def is_lie_element(V: GradedSpace, t: Tensor) -> bool:
    try:
        dynkin_project(V, t)
    except NotALiePolynomial:
        return False
    return True


# ---------------------------------------------------------------------------
# BCH


def tensor_exp(t: Tensor, N: int) -> Tensor:
    out: Tensor = {(): Fraction(1)}
    power: Tensor = {(): Fraction(1)}
    for k in range(1, N + 1):
        power = tensor_mul(power, t, N)
        if not power:
            break
        add_scaled(out, power, Fraction(1, factorial(k)))
    return out


def tensor_log(t: Tensor, N: int) -> Tensor:
    """log of a tensor with constant term 1."""
    if t.get((), 0) != 1:
        raise ValueError("log needs constant term 1")
    z = {w: c for w, c in t.items() if w}
    out: Tensor = {}
    power: Tensor = {(): Fraction(1)}
    for k in range(1, N + 1):
        power = tensor_mul(power, z, N)
        if not power:
            break
        add_scaled(out, power, Fraction((-1) ** (k + 1), k))
    return out


def bch(x: LieSeries, y: LieSeries, N: Optional[int] = None) -> LieSeries:
    """log(exp x exp y) up to bracket length N, via the truncated tensor algebra."""
    x._check(y)
    if N is None:
        N = min(x.order, y.order)
    for z in (x, y):
        if z.terms and z.degrees() != {0}:
            raise ValueError("BCH needs degree 0 elements")
    prod = tensor_mul(tensor_exp(x.terms, N), tensor_exp(y.terms, N), N)
    return dynkin_project(x.space, tensor_log(prod, N), N)


_BCH_SPACE = GradedSpace(("X", "Y"), (0, 0))


@lru_cache(maxsize=None)
def bch_universal(N: int) -> Tuple[Tuple[tuple, Fraction], ...]:
    """Lyndon coordinates of BCH(X, Y) up to length N on two degree 0 letters."""
    X = LieSeries.generator(_BCH_SPACE, "X", N)
    Y = LieSeries.generator(_BCH_SPACE, "Y", N)
    return tuple(bch(X, Y, N).lyndon().items())


# ---------------------------------------------------------------------------
# presentations of free complete DGLs


class CDGLPresentation:
    """Free DGL on ``generators`` with differential given on generators, truncated at ``order``."""

    def __init__(self, generators: GradedSpace, differential: Mapping[str, LieSeries], order: int,
                 name: str = ""):
        self.generators = generators
        self.order = int(order)
        self.name = name
        self.differential: Dict[str, LieSeries] = {}
        for g in generators.labels:
            dg = differential.get(g)
            if dg is None:
                dg = LieSeries.zero(generators, order)
            if dg.space != generators:
                raise ValueError("differential must land in the same free Lie algebra")
            dg = dg.truncate(self.order)
            if dg.terms and dg.degrees() != {generators.degree(g) - 1}:
                raise ValueError(f"d({g}) must have degree {generators.degree(g) - 1}")
            self.differential[g] = dg

    def generator(self, label) -> LieSeries:
        return LieSeries.generator(self.generators, label, self.order)

    def d(self, x: LieSeries) -> LieSeries:
        imgs = {g: s.terms for g, s in self.differential.items()}
        return LieSeries(self.generators,
                         tensor_derivation(self.generators, imgs, -1, x.terms, self.order),
                         min(self.order, x.order))

    def d_squared_vanishes(self) -> bool:
        # d^2(g) is a Lie element, so it vanishes iff its basis word coefficients do
        V = self.generators
        imgs = {g: s.terms for g, s in self.differential.items()}
        targets: Dict[int, list] = {}
        for w in basis_words(V, self.order):
            targets.setdefault(word_degree(V, w), []).append(w)
        for g in V.labels:
            coeffs = derivation_coefficients(V, imgs, -1, imgs[g], targets.get(V.degree(g) - 2, ()))
            if any(coeffs.values()):
                return False
        return True

    def linear_part(self) -> Dict[str, LieSeries]:
        return {g: s.component(1) for g, s in self.differential.items()}

    def bracket(self, x, y):
        return lie_bracket(x, y)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "generators": self.generators.to_json()["basis"],
            "order": self.order,
            "differential": {g: s.to_json() for g, s in self.differential.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "CDGLPresentation":
        V = GradedSpace.from_pairs((b["label"], b["degree"]) for b in data["generators"])
        N = int(data["order"])
        diff = {g: LieSeries.from_json(V, terms, N) for g, terms in data.get("differential", {}).items()}
        return cls(V, diff, N, data.get("name", ""))

    def to_finite(self) -> "FiniteDGL":
        """The nilpotent quotient L / L^{>N} as a finite dimensional DGL on the Lyndon basis."""
        V, N = self.generators, self.order
        words = basis_words(V, N)
        labels = [bracket_string(V, w) for w in words]
        name = dict(zip(words, labels))
        space = GradedSpace(tuple(labels), tuple(word_degree(V, w) for w in words))
        brackets = {}
        for i, u in enumerate(words):
            for v in words[i:]:
                if len(u) + len(v) > N:
                    continue
                t = tensor_bracket(V, expand_basis_word(V, u), expand_basis_word(V, v), N)
                if t:
                    vec = {name[w]: c for w, c in lyndon_decompose(V, t).items()}
                    brackets[(name[u], name[v])] = vec
        imgs = {g: s.terms for g, s in self.differential.items()}
        diff = {}
        for w in words:
            t = tensor_derivation(V, imgs, -1, expand_basis_word(V, w), N)
            if t:
                diff[name[w]] = {name[u]: c for u, c in lyndon_decompose(V, t).items()}
        return FiniteDGL(space, brackets, diff, name=self.name or "free nilpotent")

    def embed(self, x: LieSeries) -> Vector:
        """Coordinates of x in the basis of :meth:`to_finite`."""
        return {bracket_string(self.generators, w): c for w, c in x.lyndon().items()}


def tensor_substitute(images: Mapping[str, Tensor], t: Tensor, N: Optional[int] = None) -> Tensor:
    """The algebra map sending each letter to its image, applied to t."""
    out: Tensor = {}
    for w, c in t.items():
        acc: Tensor = {(): c}
        for letter in w:
            acc = tensor_mul(acc, images.get(letter, {}), N)
            if not acc:
                break
        add_scaled(out, acc, 1)
    return out


class CDGLMorphism:
    """Morphism of free complete Lie algebras given by the images of the generators."""

    def __init__(self, source: CDGLPresentation, target: CDGLPresentation, images: Mapping[str, LieSeries]):
        self.source, self.target = source, target
        self.order = min(source.order, target.order)
        self.images = {g: images.get(g, LieSeries.zero(target.generators, self.order)).truncate(self.order)
                       for g in source.generators.labels}
        for g, x in self.images.items():
            if x.terms and x.degrees() != {source.generators.degree(g)}:
                raise ValueError(f"image of {g} has the wrong degree")

    def __call__(self, x: LieSeries) -> LieSeries:
        imgs = {g: y.terms for g, y in self.images.items()}
        return LieSeries(self.target.generators, tensor_substitute(imgs, x.terms, self.order), self.order)

    def __matmul__(self, other: "CDGLMorphism") -> "CDGLMorphism":
        return CDGLMorphism(other.source, self.target, {g: self(x) for g, x in other.images.items()})

    def __eq__(self, other) -> bool:
        return (isinstance(other, CDGLMorphism) and self.source.generators == other.source.generators
                and all(self.images[g].terms == other.images[g].terms for g in self.images))

    def commutes_with_differential(self) -> bool:
        S = self.source
        return all(self(S.differential[g]).terms == self.target.d(self.images[g]).terms
                   for g in S.generators.labels)

    @classmethod
    def identity(cls, L: CDGLPresentation) -> "CDGLMorphism":
        return cls(L, L, {g: L.generator(g) for g in L.generators.labels})


def mc_residual(x: LieSeries, L: CDGLPresentation) -> LieSeries:
    """dx + 1/2 [x, x]; zero iff x is Maurer-Cartan up to the truncation order."""
    if x.terms and x.degrees() != {-1}:
        raise ValueError("Maurer-Cartan elements live in degree -1")
    return L.d(x) + lie_bracket(x, x).scale(Fraction(1, 2))


def perturb_differential(L: CDGLPresentation, z: LieSeries) -> CDGLPresentation:
    """Same free Lie algebra with differential d + ad_z (z must be Maurer-Cartan)."""
    if not mc_residual(z, L).is_zero():
        raise ValueError("z is not a Maurer-Cartan element")
    diff = {g: L.differential[g] + lie_bracket(z, L.generator(g)) for g in L.generators.labels}
    return CDGLPresentation(L.generators, diff, L.order, L.name)


# ---------------------------------------------------------------------------
# finite dimensional nilpotent DGLs


class FiniteDGL:
    """Finite dimensional DGL: structure constants for the bracket plus a differential.

    ``brackets[(a, b)]`` need only be given for one order of each pair; the
    other follows from graded antisymmetry.
    """

    def __init__(self, space: GradedSpace, brackets: Mapping, differential: Mapping, name: str = ""):
        self.space = space
        self.name = name
        table: Dict[Tuple[str, str], Vector] = {}
        for (a, b), vec in brackets.items():
            vec = {k: as_q(c) for k, c in vec.items() if c}
            if not vec:
                continue
            sgn = -parity_sign(space.degree(a) * space.degree(b))
            for k in vec:
                if space.degree(k) != space.degree(a) + space.degree(b):
                    raise ValueError(f"[{a},{b}] has a component of the wrong degree")
            if (a, b) in table and table[(a, b)] != vec:
                raise ValueError(f"conflicting entries for [{a},{b}]")
            table[(a, b)] = vec
            table[(b, a)] = {k: sgn * c for k, c in vec.items()}
            if a == b and sgn == -1 and any(vec.values()):
                raise ValueError(f"[{a},{a}] must vanish for even {a}")
        self.table = table
        self.diff: Dict[str, Vector] = {}
        for a, vec in differential.items():
            vec = {k: as_q(c) for k, c in vec.items() if c}
            for k in vec:
                if space.degree(k) != space.degree(a) - 1:
                    raise ValueError(f"d({a}) has a component of the wrong degree")
            if vec:
                self.diff[a] = vec

    # basic operations -----------------------------------------------------
    def bracket(self, x: Mapping, y: Mapping) -> Vector:
        out: Vector = {}
        for a, ca in x.items():
            if not ca:
                continue
            for b, cb in y.items():
                vec = self.table.get((a, b))
                if vec and cb:
                    add_scaled(out, vec, ca * cb)
        return out

    def d(self, x: Mapping) -> Vector:
        out: Vector = {}
        for a, c in x.items():
            if a in self.diff:
                add_scaled(out, self.diff[a], c)
        return out

    def ad(self, g: Mapping, x: Mapping) -> Vector:
        return self.bracket(g, x)

    def degree_part(self, x: Mapping, d: int) -> Vector:
        return {a: c for a, c in x.items() if self.space.degree(a) == d and c}

    def unit(self, label) -> Vector:
        return {label: Fraction(1)}

    def differential_map(self) -> GradedLinearMap:
        return GradedLinearMap(self.space, self.space, -1,
                               {(b, a): c for a, vec in self.diff.items() for b, c in vec.items()})

    # structural checks ----------------------------------------------------
    def check_jacobi(self) -> bool:
        S = self.space
        for a in S.labels:
            for b in S.labels:
                for c in S.labels:
                    x, y, z = self.unit(a), self.unit(b), self.unit(c)
                    lhs = self.bracket(x, self.bracket(y, z))
                    rhs = dict(self.bracket(self.bracket(x, y), z))
                    add_scaled(rhs, self.bracket(y, self.bracket(x, z)),
                               parity_sign(S.degree(a) * S.degree(b)))
                    add_scaled(lhs, rhs, -1)
                    if lhs:
                        return False
        return True

    def check_leibniz(self) -> bool:
        S = self.space
        for a in S.labels:
            for b in S.labels:
                x, y = self.unit(a), self.unit(b)
                lhs = self.d(self.bracket(x, y))
                add_scaled(lhs, self.bracket(self.d(x), y), -1)
                add_scaled(lhs, self.bracket(x, self.d(y)), -parity_sign(S.degree(a)))
                if lhs:
                    return False
        return True

    def check_d_squared(self) -> bool:
        return all(not self.d(self.d(self.unit(a))) for a in self.space.labels)

    def is_valid(self) -> bool:
        return self.check_jacobi() and self.check_leibniz() and self.check_d_squared()

    def lower_central_series(self):
        """Spans L^1 = L, L^{n+1} = [L, L^n] as lists of vectors, until they vanish."""
        rows = list(self.space.labels)
        cur = [self.unit(a) for a in rows]
        series = [cur]
        for _ in range(len(rows) + 1):
            nxt = []
            for a in rows:
                for v in cur:
                    w = self.bracket(self.unit(a), v)
                    if w:
                        nxt.append(w)
            if not nxt or linalg.rank(nxt, rows) == 0:
                return series
            piv = linalg.pivot_columns(nxt, rows)
            cur = [nxt[p] for p in piv]
            series.append(cur)
        raise ValueError("Lie algebra is not nilpotent")

    def nilpotency_class(self) -> int:
        return len(self.lower_central_series())

    def is_nilpotent(self) -> bool:
        try:
            self.lower_central_series()
        except ValueError:
            return False
        return True

    # Maurer-Cartan and gauge ----------------------------------------------
    def mc_residual(self, x: Mapping) -> Vector:
        if any(self.space.degree(a) != -1 for a, c in x.items() if c):
            raise ValueError("Maurer-Cartan elements live in degree -1")
        r = self.d(x)
        add_scaled(r, self.bracket(x, x), Fraction(1, 2))
        return r

    def is_mc(self, x: Mapping) -> bool:
        return not self.mc_residual(x)

    def _ad_powers(self, g, x):
        out = []
        cur = dict(x)
        while cur and len(out) <= len(self.space) + 1:
            out.append(cur)
            cur = self.bracket(g, cur)
        if cur:
            raise ValueError("ad_g is not nilpotent")
        return out

    def gauge(self, g: Mapping, x: Mapping) -> Vector:
        """e^{ad g}(x) - (e^{ad g} - 1)/ad g (dg) for degree 0 g."""
        if any(self.space.degree(a) != 0 for a, c in g.items() if c):
            raise ValueError("gauge elements live in degree 0")
        out: Vector = {}
        for k, v in enumerate(self._ad_powers(g, x)):
            add_scaled(out, v, Fraction(1, factorial(k)))
        for k, v in enumerate(self._ad_powers(g, self.d(g))):
            add_scaled(out, v, -Fraction(1, factorial(k + 1)))
        return out

    def bch(self, a: Mapping, b: Mapping) -> Vector:
        if not self.is_nilpotent():
            raise ValueError("BCH needs a nilpotent Lie algebra")
        N = max(self.nilpotency_class(), 1)
        out: Vector = {}
        memo = {}

        def ev(tree):
            if isinstance(tree, str):
                return a if tree == "X" else b
            if tree not in memo:
                memo[tree] = self.bracket(ev(tree[0]), ev(tree[1]))
            return memo[tree]

        for w, c in bch_universal(N):
            add_scaled(out, ev(basis_tree(_BCH_SPACE, w)), c)
        return out

    def perturbed(self, z: Mapping) -> "FiniteDGL":
        if not self.is_mc(z):
            raise ValueError("z is not a Maurer-Cartan element")
        diff = {}
        for a in self.space.labels:
            v = self.d(self.unit(a))
            add_scaled(v, self.bracket(z, self.unit(a)))
            diff[a] = v
        pairs = {k: v for k, v in self.table.items()}
        return FiniteDGL(self.space, pairs, diff, name=self.name + "^z")

    # homology ------------------------------------------------------------
    def cycles(self, n: int) -> List[Vector]:
        src = list(self.space.in_degree(n))
        cols = [self.d(self.unit(a)) for a in src]
        rows = list(self.space.in_degree(n - 1))
        return [{src[j]: c for j, c in enumerate(vec) if c} for vec in linalg.nullspace(cols, rows)]

    def boundaries(self, n: int) -> List[Vector]:
        cols = [self.d(self.unit(a)) for a in self.space.in_degree(n + 1)]
        rows = list(self.space.in_degree(n))
        return [cols[p] for p in linalg.pivot_columns(cols, rows)]

    def homology_rank(self, n: int) -> int:
        return len(self.cycles(n)) - len(self.boundaries(n))

    def homology(self, n: int) -> GradedSpace:
        """Basis of H_n, labelled by representative cycles completing the boundaries."""
        reps = self.homology_representatives(n)
        return GradedSpace(tuple(f"h{n}_{i}" for i in range(len(reps))), (n,) * len(reps))

    def homology_representatives(self, n: int) -> List[Vector]:
        rows = list(self.space.in_degree(n))
        bnd = self.boundaries(n)
        cyc = self.cycles(n)
        piv = linalg.pivot_columns(bnd + cyc, rows)
        return [cyc[p - len(bnd)] for p in piv if p >= len(bnd)]

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        seen = set()
        brs = []
        for (a, b), vec in sorted(self.table.items()):
            if (b, a) in seen:
                continue
            seen.add((a, b))
            brs.append([a, b, [[k, q_str(c)] for k, c in sorted(vec.items())]])
        return {
            "name": self.name,
            "basis": self.space.to_json()["basis"],
            "brackets": brs,
            "differential": {a: [[k, q_str(c)] for k, c in sorted(v.items())] for a, v in self.diff.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "FiniteDGL":
        S = GradedSpace.from_json(data)
        brs = {(a, b): {k: as_q(c) for k, c in vec} for a, b, vec in data.get("brackets", [])}
        diff = {a: {k: as_q(c) for k, c in vec} for a, vec in data.get("differential", {}).items()}
        return cls(S, brs, diff, data.get("name", ""))


def load_dgl(data: dict) -> FiniteDGL:
    """Read either a free presentation (``generators`` key) or a finite DGL (``basis`` key)."""
    if "generators" in data:
        return CDGLPresentation.from_json(data).to_finite()
    return FiniteDGL.from_json(data)


def abelian_dgl(space: GradedSpace, differential: Mapping = None, name="abelian") -> FiniteDGL:
    return FiniteDGL(space, {}, differential or {}, name=name)


# ---------------------------------------------------------------------------
# localization at a Maurer-Cartan element


class Localization:
    """Connected cover of (L, d + ad_z) at a Maurer-Cartan element z.

    As a complex this is the quotient of (L, d_z) by L_{<0} + M with M the
    complement of ker d_z in L_0; as a DGL it is realised on the isomorphic
    subspace L_{>0} + ker(d_z | L_0), which is closed under brackets.
    """

    def __init__(self, L: FiniteDGL, z: Mapping):
        self.base = L
        self.z = dict(z)
        Lz = L.perturbed(z)
        self.perturbed = Lz
        S = L.space
        deg0 = list(S.in_degree(0))
        kernel = Lz.cycles(0)
        self.complement = linalg.complement_labels(kernel, deg0)
        self.kernel_vectors: Dict[str, Vector] = {}
        for i, v in enumerate(kernel):
            if len(v) == 1 and next(iter(v.values())) == 1:
                self.kernel_vectors[next(iter(v))] = v
            else:
                self.kernel_vectors[f"k{i}"] = v
        pos = [l for l in S.labels if S.degree(l) > 0]
        space = GradedSpace(tuple(self.kernel_vectors) + tuple(pos),
                            (0,) * len(self.kernel_vectors) + tuple(S.degree(l) for l in pos))
        self._klabels = list(self.kernel_vectors)
        self._kvecs = [self.kernel_vectors[k] for k in self._klabels]
        brackets = {}
        for a in space.labels:
            for b in space.labels:
                v = self._to_local(Lz.bracket(self.lift({a: 1}), self.lift({b: 1})))
                if v:
                    brackets[(a, b)] = v
        diff = {}
        for a in pos:
            v = self._to_local(Lz.d({a: Fraction(1)}))
            if v:
                diff[a] = v
        self.dgl = FiniteDGL(space, brackets, diff, name=f"{L.name} localized")

    def lift(self, x: Mapping) -> Vector:
        out: Vector = {}
        for a, c in x.items():
            add_scaled(out, self.kernel_vectors.get(a, {a: Fraction(1)}), c)
        return out

    def _to_local(self, v: Mapping) -> Vector:
        S = self.base.space
        out = {a: c for a, c in v.items() if S.degree(a) > 0 and c}
        if any(S.degree(a) < 0 for a, c in v.items() if c):
            raise ValueError("bracket left the connected cover")
        v0 = {a: c for a, c in v.items() if S.degree(a) == 0 and c}
        if v0:
            sol = linalg.solve_in_span(self._kvecs, v0, list(S.in_degree(0)))
            if sol is None:
                raise ValueError("degree 0 part not in ker d_z")
            for k, c in zip(self._klabels, sol):
                if c:
                    out[k] = c
        return out

    def homology_rank(self, n: int) -> int:
        return self.dgl.homology_rank(n)


def localize(L: FiniteDGL, z: Mapping) -> Localization:
    return Localization(L, z)


class H0Group:
    """H_0 of a non-negatively graded nilpotent DGL with the BCH product."""

    def __init__(self, L: FiniteDGL):
        self.L = L
        self.rows = list(L.space.in_degree(0))
        self.boundaries = L.boundaries(0)
        self.cycles = L.cycles(0)

    def is_element(self, x: Mapping) -> bool:
        return not self.L.d(x)

    def reduce(self, x: Mapping) -> Vector:
        """Canonical representative of x modulo boundaries."""
        if not self.boundaries:
            return {a: c for a, c in x.items() if c}
        units = [{r: Fraction(1)} for r in self.rows]
        piv = linalg.pivot_columns(self.boundaries + units, self.rows)
        nb = len(self.boundaries)
        keep = [p - nb for p in piv if p >= nb]
        cols = self.boundaries + [units[k] for k in keep]
        sol = linalg.solve_in_span(cols, x, self.rows)
        return {self.rows[k]: c for k, c in zip(keep, sol[nb:]) if c}

    def multiply(self, a, b):
        return self.reduce(self.L.bch(a, b))

    def inverse(self, a):
        return self.reduce({k: -c for k, c in a.items()})

    def identity(self):
        return {}

    def equal(self, a, b) -> bool:
        return self.reduce(a) == self.reduce(b)
