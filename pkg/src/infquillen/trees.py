"""Rooted binary trees, planar and non planar.

A planar tree is either the leaf ``"."`` or a pair ``(left, right)``.  The
string encoding writes a leaf as ``.`` and a graft as ``(LR)``, so the
balanced tree with four leaves is ``((..)(..))``.  A non planar tree is
stored as its canonical planar representative.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

LEAF = "."


def is_leaf(t) -> bool:
    return t == LEAF


def graft(left, right):
    return (left, right)


def leaves(t) -> int:
    return 1 if is_leaf(t) else leaves(t[0]) + leaves(t[1])


def internal_vertices(t) -> int:
    return 0 if is_leaf(t) else 1 + internal_vertices(t[0]) + internal_vertices(t[1])


def to_string(t) -> str:
    return "." if is_leaf(t) else "(" + to_string(t[0]) + to_string(t[1]) + ")"


def from_string(s: str):
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(s):
            raise ValueError(f"truncated tree string {s!r}")
        ch = s[pos]
        if ch == ".":
            pos += 1
            return LEAF
        if ch != "(":
            raise ValueError(f"unexpected {ch!r} in tree string {s!r}")
        pos += 1
        left = parse()
        right = parse()
        if pos >= len(s) or s[pos] != ")":
            raise ValueError(f"expected ')' in tree string {s!r}")
        pos += 1
        return (left, right)

    t = parse()
    if pos != len(s):
        raise ValueError(f"trailing characters in tree string {s!r}")
    return t


def sort_key(t):
    # leaf < graft; grafts compared lexicographically on their children
    return (0,) if is_leaf(t) else (1, sort_key(t[0]), sort_key(t[1]))


@lru_cache(maxsize=None)
def canonicalize(t):
    if is_leaf(t):
        return t
    a, b = canonicalize(t[0]), canonicalize(t[1])
    if sort_key(b) < sort_key(a):
        a, b = b, a
    return (a, b)


def is_canonical(t) -> bool:
    return canonicalize(t) == t


@lru_cache(maxsize=None)
def enumerate_planar(k: int):
    """All planar binary trees with k leaves (Catalan(k-1) of them)."""
    if k < 1:
        raise ValueError("trees need at least one leaf")
    if k == 1:
        return (LEAF,)
    out = []
    for i in range(1, k):
        for left in enumerate_planar(i):
            for right in enumerate_planar(k - i):
                out.append((left, right))
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_nonplanar(k: int):
    if k < 1:
        raise ValueError("trees need at least one leaf")
    seen = {}
    for t in enumerate_planar(k):
        c = canonicalize(t)
        seen.setdefault(c, None)
    return tuple(sorted(seen, key=sort_key))


@lru_cache(maxsize=None)
def aut_order(t) -> int:
    if is_leaf(t):
        return 1
    a, b = canonicalize(t[0]), canonicalize(t[1])
    if a == b:
        return 2 * aut_order(a) ** 2
    return aut_order(a) * aut_order(b)


@lru_cache(maxsize=None)
def planar_embeddings(t):
    """All planar trees isomorphic to t as non planar trees."""
    if is_leaf(t):
        return (LEAF,)
    out = {}
    for a in planar_embeddings(t[0]):
        for b in planar_embeddings(t[1]):
            out[(a, b)] = None
            out[(b, a)] = None
    return tuple(sorted(out, key=sort_key))


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def left_comb(k: int):
    t = LEAF
    for _ in range(k - 1):
        t = (t, LEAF)
    return t


def split_sizes(t):
    """(leaves of left subtree, leaves of right subtree) for a graft."""
    return leaves(t[0]), leaves(t[1])
