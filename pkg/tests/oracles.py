"""Independent reference computations used by the tests.

None of these use the package's tree, transfer or free Lie machinery.  They
work on plain dicts of words with sympy or Fraction coefficients.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import sympy

# ---------------------------------------------------------------------------
# a tiny tensor algebra: {word tuple: coefficient}


def t_add(acc, other, c=1):
    for w, v in other.items():
        acc[w] = acc.get(w, 0) + c * v
        if acc[w] == 0:
            del acc[w]
    return acc


def t_mul(x, y, N):
    out = {}
    for u, a in x.items():
        for v, b in y.items():
            if len(u) + len(v) <= N:
                t_add(out, {u + v: a * b})
    return out


def t_bracket(x, y, deg, N):
    """Graded commutator, ``deg`` maps a letter to its degree."""
    out = {}
    for u, a in x.items():
        for v, b in y.items():
            if len(u) + len(v) > N:
                continue
            du, dv = sum(deg[l] for l in u), sum(deg[l] for l in v)
            t_add(out, {u + v: a * b})
            t_add(out, {v + u: a * b}, -(-1) ** (du * dv))
    return out


def t_exp(x, N):
    out, term = {(): Fraction(1)}, {(): Fraction(1)}
    for k in range(1, N + 1):
        term = {w: c / k for w, c in t_mul(term, x, N).items()}
        t_add(out, term)
    return out


def t_log(x, N):
    """log of a group-like element 1 + y, y without constant term."""
    y = {w: c for w, c in x.items() if w}
    out, power = {}, {(): Fraction(1)}
    for k in range(1, N + 1):
        power = t_mul(power, y, N)
        t_add(out, power, Fraction((-1) ** (k + 1), k))
    return out


def bch_tensor(x, y, N):
    """log(exp x exp y) in the truncated tensor algebra."""
    return t_log(t_mul(t_exp(x, N), t_exp(y, N), N), N)


# ---------------------------------------------------------------------------
# the differential of the interval model, two ways

A, B, X = "s-1|a0", "s-1|a1", "s-1|a01"
INTERVAL_DEG = {A: -1, B: -1, X: 0}


def _ad(x, y, N):
    return t_bracket(x, y, INTERVAL_DEG, N)


def interval_bernoulli(N):
    """dx = [x, b] + sum_n B_n/n! ad_x^n (b - a), with B_1 = -1/2."""
    x, b = {(X,): 1}, {(B,): 1}
    out = _ad(x, b, N)
    term = {(B,): 1, (A,): -1}
    for n in range(N):
        bn = sympy.bernoulli(n)
        if n == 1:
            bn = sympy.Rational(-1, 2)
        t_add(out, term, Fraction(int(bn.p), int(bn.q)) / math.factorial(n))
        term = _ad(x, term, N)
    return {w: Fraction(c) for w, c in out.items() if c}


t = sympy.Symbol("t")


def _form_mul(f, g):
    """Forms on the interval as (c0, c1) = c0(t) + c1(t) dt."""
    return (sympy.expand(f[0] * g[0]), sympy.expand(f[0] * g[1] + f[1] * g[0]))


def _K(f):
    """The contraction on the interval: K(g dt) = t int_0^1 g - int_0^t g, zero on functions."""
    s = sympy.Symbol("s")
    g = f[1].subs(t, s)
    return (sympy.expand(t * sympy.integrate(g, (s, 0, 1)) - sympy.integrate(g, (s, 0, t))), sympy.Integer(0))


def _ft_bracket(Y, Z, N):
    """[w (x) u, e (x) v] = (-1)^{|u||e|} w e (x) [u, v] on {word: form}."""
    out = {}
    for u, f in Y.items():
        for v, g in Z.items():
            if len(u) + len(v) > N:
                continue
            du = sum(INTERVAL_DEG[l] for l in u)
            dv = sum(INTERVAL_DEG[l] for l in v)
            # split e into its function and dt parts, the dt part has degree -1
            for part, de in ((0, 0), (1, -1)):
                e = (g[0], 0) if part == 0 else (0, g[1])
                fe = _form_mul(f, e)
                sign = (-1) ** (du * de)
                for w, c in ((u + v, 1), (v + u, -(-1) ** (du * dv))):
                    acc = out.get(w, (0, 0))
                    out[w] = (acc[0] + sign * c * fe[0], acc[1] + sign * c * fe[1])
    return {w: (sympy.expand(f[0]), sympy.expand(f[1])) for w, f in out.items() if sympy.expand(f[0]) != 0
            or sympy.expand(f[1]) != 0}


def interval_kuranishi(N):
    """dx from the Maurer-Cartan equation of tau = a0 (x) a + a1 (x) b + a01 (x) x.

    Y = i tau + 1/2 K[Y, Y] in forms on the interval tensor words; the a01
    component of p(dY + 1/2[Y, Y]) = 0 reads dx = (b - a) + 1/2 int_0^1 [Y, Y]_dt.
    """
    itau = {(A,): (1 - t, 0), (B,): (t, 0), (X,): (0, 1)}
    Y = dict(itau)
    for _ in range(N + 1):
        br = _ft_bracket(Y, Y, N)
        new = {w: (f[0], f[1]) for w, f in itau.items()}
        for w, f in br.items():
            k = _K((f[0] / 2, f[1] / 2))
            acc = new.get(w, (0, 0))
            new[w] = (sympy.expand(acc[0] + k[0]), sympy.expand(acc[1] + k[1]))
        new = {w: f for w, f in new.items() if f[0] != 0 or f[1] != 0}
        if new == Y:
            break
        Y = new
    out = {(B,): Fraction(1), (A,): Fraction(-1)}
    for w, f in _ft_bracket(Y, Y, N).items():
        c = sympy.integrate(f[1], (t, 0, 1)) / 2
        if c != 0:
            t_add(out, {w: Fraction(int(c.p), int(c.q))})
    return out


# ---------------------------------------------------------------------------
# gauge orbits by brute force


def gauge_act(L, g, x, terms=8):
    """e^{ad g} x - ((e^{ad g} - 1)/ad g)(d g), summed term by term."""
    out = dict(x)
    ad_x, ad_dg = dict(x), L.d(g)
    t_add(out, ad_dg, -1)
    for k in range(1, terms):
        ad_x = L.bracket(g, ad_x)
        t_add(out, ad_x, Fraction(1, math.factorial(k)))
        ad_dg = L.bracket(g, ad_dg)
        t_add(out, ad_dg, -Fraction(1, math.factorial(k + 1)))
    return {a: c for a, c in out.items() if c}


def grid_orbit_classes(L, elements, g_values):
    """Connected components of the relation y = g . x for g on a coordinate grid."""
    deg0 = L.space.in_degree(0)
    key = [tuple(sorted(e.items())) for e in elements]
    index = {k: i for i, k in enumerate(key)}
    parent = list(range(len(elements)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, x in enumerate(elements):
        for vals in itertools.product(g_values, repeat=len(deg0)):
            g = {a: v for a, v in zip(deg0, vals) if v}
            j = index.get(tuple(sorted(gauge_act(L, g, x).items())))
            if j is not None:
                parent[find(i)] = find(j)
    classes = {}
    for i in range(len(elements)):
        classes.setdefault(find(i), []).append(i)
    return sorted(sorted(c) for c in classes.values())


# ---------------------------------------------------------------------------
# matrices for BCH in a faithful nilpotent representation


def strict_upper(n):
    """Basis E_ij (i < j) of strictly upper triangular n x n matrices."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def matrix_of(vec, n):
    M = sympy.zeros(n, n)
    for (i, j), c in vec.items():
        M[i, j] += sympy.Rational(c.numerator, c.denominator)
    return M


def matrix_bch(P, Q, n):
    def mexp(M):
        out, term = sympy.eye(n), sympy.eye(n)
        for k in range(1, n):
            term = term * M / k
            out += term
        return out

    def mlog(M):
        Y = M - sympy.eye(n)
        out, power = sympy.zeros(n, n), sympy.eye(n)
        for k in range(1, n):
            power = power * Y
            out += power * sympy.Rational((-1) ** (k + 1), k)
        return out

    return mlog(mexp(P) * mexp(Q))
