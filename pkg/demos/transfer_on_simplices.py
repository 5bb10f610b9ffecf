"""Tree transfer from polynomial forms to cochains on a simplex.

Prints the binary trees that index the operations, the transferred products
on C^*(Delta^2), and checks that they vanish on shuffles.
"""

import itertools

from infquillen import dupont as dp
from infquillen import trees as tr
from infquillen.graded import q_str

for k in range(2, 6):
    names = [tr.to_string(t) for t in tr.enumerate_nonplanar(k)]
    print(f"{k} leaves: {len(list(tr.enumerate_planar(k)))} planar, non planar {names}")

A = dp.cochain_ainf(2, 3)
labels = A.V.labels
print("\nnonzero m_2 on C^*(Delta^2):")
for w in itertools.product(labels, repeat=2):
    v = A.m(2, w)
    if v:
        print(" ", w, {c: q_str(x) for c, x in v.items()})

count = sum(1 for w in itertools.product(labels, repeat=3) if A.m(3, w))
print(f"\n{count} words with m_3 nonzero")
print("A-infinity relations hold:", all(not A.relation(w) for w in itertools.product(labels, repeat=3)))
print("m_3 kills shuffles:", all(not A.shuffle_defect(w) for w in itertools.product(labels, repeat=3)))
