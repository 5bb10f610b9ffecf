"""Simplices of the realization of a small nilpotent Lie algebra.

L_0 = <a, b, c> with [a, b] = c acts on L_-1 = <u, v> by [a, u] = v.  We
sample a 2-simplex, pass it through the Taylor series into forms and back,
and compute gauge classes and the fundamental group at a vertex.
"""

import json
import random
from fractions import Fraction
from pathlib import Path

from infquillen import mc_realization as mr
from infquillen.free_lie import load_dgl
from infquillen.graded import q_str

L = load_dgl(json.loads((Path(__file__).parent / "data" / "heisenberg.json").read_text()))
rng = random.Random(1)

s = mr.sample_simplex(2, L, rng)
print("2-simplex:", s.to_json())
print("faces:", [f.to_json()["coefficients"] for f in (s.face(0), s.face(1), s.face(2))])
print("as a morphism L_2 -> L:", {g: {x: q_str(c) for x, c in v.items()} for g, v in s.to_morphism().items() if v})

y = mr.mc_I(2, L, s.z)
print("mc_I lands in the nerve:", mr.nerve_membership(y), "and mc_P recovers it:", mr.mc_P(y) == s.z)

elements = [{"u": Fraction(p), "v": Fraction(q)} for p in (-1, 0, 1) for q in (-1, 0, 1)]
elements = [{k: c for k, c in e.items() if c} for e in elements]
print("gauge classes:", [[{k: q_str(c) for k, c in elements[i].items()} for i in cl] for cl in mr.pi0(L, elements)])

z = {"u": Fraction(1)}
print("rank of pi_1 at u:", mr.pi_rank(L, z, 1), " rank of pi_1 at 0:", mr.pi_rank(L, {}, 1))
