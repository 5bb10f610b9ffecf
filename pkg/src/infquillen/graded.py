"""Graded vector spaces over Q, homogeneous linear maps and sign bookkeeping.

Vectors are plain dicts ``label -> Fraction`` and tensors are dicts
``tuple_of_labels -> Fraction``.  Everything is exact; there is no float
anywhere in the package.

Permutations are tuples ``(s(1), ..., s(k))`` using 1-based images, and act on
tensors by ``s . (x_1 x ... x x_k) = x_{s(1)} x ... x x_{s(k)}``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, Iterable, Mapping, Sequence, Tuple

Q = Fraction
Vector = Dict[str, Fraction]
Word = Tuple[str, ...]
Tensor = Dict[Word, Fraction]


def as_q(x) -> Fraction:
    """Parse ints, Fractions and strings like ``"-3/4"``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not allowed, use exact rationals")
    return Fraction(x)


def q_str(c: Fraction) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def add_to(acc: dict, key, c) -> None:
    """acc[key] += c, dropping exact zeros."""
    if not c:
        return
    v = acc.get(key, 0) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


def add_scaled(acc: dict, other: Mapping, c=1) -> dict:
    if c:
        for k, v in other.items():
            add_to(acc, k, v * c)
    return acc


def lin_comb(*pairs) -> dict:
    """lin_comb((c1, v1), (c2, v2), ...) as a new sparse dict."""
    out: dict = {}
    for c, v in pairs:
        add_scaled(out, v, c)
    return out


def parity_sign(n: int) -> int:
    return -1 if n % 2 else 1


# ---------------------------------------------------------------------------
# graded spaces


@dataclass(frozen=True)
class GradedSpace:
    """Finite graded space given by an ordered basis of labels with degrees."""

    labels: Tuple[str, ...]
    degrees: Tuple[int, ...]
    _index: Dict[str, int] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if len(self.labels) != len(self.degrees):
            raise ValueError("one degree per label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("basis labels must be unique")
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(self.labels)})

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, int]]) -> "GradedSpace":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(int(p[1]) for p in pairs))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self._index

    def degree(self, label: str) -> int:
        return self.degrees[self._index[label]]

    def index(self, label: str) -> int:
        return self._index[label]

    def word_degree(self, word: Sequence[str]) -> int:
        return sum(self.degree(l) for l in word)

    def in_degree(self, d: int) -> Tuple[str, ...]:
        return tuple(l for l, e in zip(self.labels, self.degrees) if e == d)

    def vector_degree(self, v: Mapping[str, Fraction]) -> int:
        """Degree of a nonzero homogeneous vector; raises if inhomogeneous."""
        degs = {self.degree(l) for l, c in v.items() if c}
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous vector, degrees {sorted(degs)}")
        if not degs:
            raise ValueError("zero vector has no degree")
        return degs.pop()

    def direct_sum(self, other: "GradedSpace") -> "GradedSpace":
        return GradedSpace(self.labels + other.labels, self.degrees + other.degrees)

    def to_json(self) -> dict:
        return {"basis": [{"label": l, "degree": d} for l, d in zip(self.labels, self.degrees)]}

    @classmethod
    def from_json(cls, data: dict) -> "GradedSpace":
        return cls.from_pairs((b["label"], b["degree"]) for b in data["basis"])


def suspend_label(label: str, shift: int) -> str:
    if shift == 0:
        return label
    if label.startswith("s") and "|" in label:
        head, rest = label[1:].split("|", 1)
        try:
            total = int(head) + shift
        except ValueError:
            total = None
        if total is not None:
            return rest if total == 0 else f"s{total:+d}|{rest}"
    return f"s{shift:+d}|{label}"


def suspend(V: GradedSpace, shift: int) -> GradedSpace:
    """Shift all degrees by ``shift``; ``shift=-1`` is the desuspension s^-1.

    Labels are tagged, and tags compose so that suspend(suspend(V, -1), 1) == V.
    """
    if shift == 0:
        return V
    return GradedSpace(
        tuple(suspend_label(l, shift) for l in V.labels),
        tuple(d + shift for d in V.degrees),
    )


# ---------------------------------------------------------------------------
# linear maps


class GradedLinearMap:
    """Sparse homogeneous linear map; ``entries[(target, source)] = coefficient``."""

    def __init__(self, source: GradedSpace, target: GradedSpace, degree: int, entries=None, check=True):
        self.source = source
        self.target = target
        self.degree = int(degree)
        self.entries: Dict[Tuple[str, str], Fraction] = {}
        for (w, v), c in (entries or {}).items():
            c = as_q(c)
            if c:
                self.entries[(w, v)] = c
        if check:
            for (w, v) in self.entries:
                if target.degree(w) != source.degree(v) + self.degree:
                    raise ValueError(f"entry ({w}, {v}) breaks degree {self.degree}")
        self._cols = None

    @classmethod
    def from_function(cls, source, target, degree, f) -> "GradedLinearMap":
        ent = {}
        for v in source.labels:
            for w, c in f(v).items():
                ent[(w, v)] = c
        return cls(source, target, degree, ent)

    @classmethod
    def identity(cls, V: GradedSpace) -> "GradedLinearMap":
        return cls(V, V, 0, {(l, l): 1 for l in V.labels})

    @classmethod
    def zero(cls, source, target, degree=0) -> "GradedLinearMap":
        return cls(source, target, degree, {})

    def columns(self) -> Dict[str, Vector]:
        if self._cols is None:
            cols: Dict[str, Vector] = {}
            for (w, v), c in self.entries.items():
                cols.setdefault(v, {})[w] = c
            self._cols = cols
        return self._cols

    def column(self, v: str) -> Vector:
        return self.columns().get(v, {})

    def __call__(self, x: Mapping[str, Fraction]) -> Vector:
        out: Vector = {}
        cols = self.columns()
        for v, c in x.items():
            if v in cols:
                add_scaled(out, cols[v], c)
        return out

    def __matmul__(self, other: "GradedLinearMap") -> "GradedLinearMap":
        if other.target != self.source:
            raise ValueError("composition of incompatible maps")
        ent = {}
        for v in other.source.labels:
            for w, c in self(other.column(v)).items():
                ent[(w, v)] = c
        return GradedLinearMap(other.source, self.target, self.degree + other.degree, ent, check=False)

    def _check_same(self, other):
        if (self.source, self.target, self.degree) != (other.source, other.target, other.degree):
            raise ValueError("maps live in different Hom spaces")

    def __add__(self, other):
        self._check_same(other)
        ent = dict(self.entries)
        for k, c in other.entries.items():
            add_to(ent, k, c)
        return GradedLinearMap(self.source, self.target, self.degree, ent, check=False)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "GradedLinearMap":
        c = as_q(c)
        return GradedLinearMap(self.source, self.target, self.degree,
                               {k: v * c for k, v in self.entries.items()}, check=False)

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, GradedLinearMap):
            return NotImplemented
        return (self.source, self.target, self.degree, self.entries) == (
            other.source, other.target, other.degree, other.entries)

    def __repr__(self):
        return f"GradedLinearMap(deg={self.degree}, {len(self.entries)} nonzero entries)"

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "degree": self.degree,
            "entries": [[w, v, q_str(c)] for (w, v), c in sorted(self.entries.items())],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GradedLinearMap":
        return cls(GradedSpace.from_json(data["source"]), GradedSpace.from_json(data["target"]),
                   data["degree"], {(w, v): as_q(c) for w, v, c in data["entries"]})


def dumps(obj) -> str:
    return json.dumps(obj.to_json(), indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# permutations and signs


def check_permutation(sigma: Sequence[int]) -> None:
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise ValueError(f"{tuple(sigma)} is not a permutation of 1..{len(sigma)}")


def signature(sigma: Sequence[int]) -> int:
    check_permutation(sigma)
    inv = sum(1 for a, b in itertools.combinations(sigma, 2) if a > b)
    return parity_sign(inv)


def koszul_sign(sigma: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign acquired when x_1...x_k of the given degrees is reordered to
    x_{s(1)}...x_{s(k)}."""
    if len(sigma) != len(degrees):
        raise ValueError("permutation and degree list differ in size")
    check_permutation(sigma)
    e = 0
    for r, s in itertools.combinations(range(len(sigma)), 2):
        a, b = sigma[r], sigma[s]
        if a > b:
            e += degrees[a - 1] * degrees[b - 1]
    return parity_sign(e)


def total_sign(sigma: Sequence[int], degrees: Sequence[int]) -> int:
    """The product of signature and Koszul sign."""
    return signature(sigma) * koszul_sign(sigma, degrees)


def compose(sigma: Sequence[int], rho: Sequence[int]) -> Tuple[int, ...]:
    """(sigma o rho)(i) = sigma(rho(i))."""
    return tuple(sigma[r - 1] for r in rho)


def inverse(sigma: Sequence[int]) -> Tuple[int, ...]:
    inv = [0] * len(sigma)
    for i, s in enumerate(sigma, 1):
        inv[s - 1] = i
    return tuple(inv)


def act(sigma: Sequence[int], items: Sequence):
    """Reorder items as (items[s(1)], ..., items[s(k)])."""
    return tuple(items[s - 1] for s in sigma)


def shuffles(i: int, j: int):
    """(i, j)-shuffles: s^-1(1) < ... < s^-1(i) and s^-1(i+1) < ... < s^-1(i+j).

    Returned as tuples of images; there are binomial(i+j, i) of them.
    """
    if i < 0 or j < 0:
        raise ValueError("shuffle block sizes must be non-negative")
    k = i + j
    out = []
    for first in itertools.combinations(range(1, k + 1), i):
        # positions of 1..i are `first`; positions of i+1..k are the rest
        inv = list(first) + [p for p in range(1, k + 1) if p not in first]
        out.append(inverse(inv))
    return out


def shuffle_fixing_one(i: int, j: int):
    if i < 1:
        raise ValueError("need i >= 1")
    return [s for s in shuffles(i, j) if s[0] == 1]


def permute_word(sigma, word, degrees):
    """Return (sign, permuted word) for the action s.(x_1...x_k) = e x_{s(1)}...x_{s(k)}.

    ``degrees`` are the degrees of the letters of ``word``; the sign is the
    full signature-times-Koszul factor.
    """
    return total_sign(sigma, degrees), act(sigma, word)


def symmetrize(k: int):
    """The symmetrization map as a formal sum: list of permutations.

    Applied to a tensor with :func:`apply_signed_permutations`, each term carries
    signature times Koszul sign.
    """
    return list(itertools.permutations(range(1, k + 1)))


def shuffle_sum_nu(k: int, range_upper: int):
    """Permutations in the signed shuffle sum nu_k with i = 1..range_upper."""
    if not 1 <= range_upper <= k:
        raise ValueError("need 1 <= range_upper <= k")
    out = []
    for i in range(1, range_upper + 1):
        out.extend(shuffles(i, k - i))
    return out


def apply_signed_permutations(perms, word, degrees, inverse_action=False, koszul_only=False) -> Tensor:
    """Sum over sigma of sign(sigma) * sigma.word.

    With ``inverse_action`` the letters are reordered by sigma^-1 (the dual
    unshuffle sum); with ``koszul_only`` the signature factor is dropped.
    """
    out: Tensor = {}
    for s in perms:
        t = inverse(s) if inverse_action else s
        sign = koszul_sign(t, degrees) if koszul_only else total_sign(t, degrees)
        add_to(out, act(t, word), Fraction(sign))
    return out


def binomial(n, k):
    return comb(n, k)
