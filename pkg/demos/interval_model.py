"""The model of the interval and its Bernoulli number coefficients.

Builds L_1 to bracket length 6 and prints the differential of the edge
generator x = s^-1 a01 with a = s^-1 a0 and b = s^-1 a1.  The coefficients of
ad_x^n (b - a) are B_n / n!.
"""

from fractions import Fraction
from math import factorial

import sympy

from infquillen import dupont as dp
from infquillen.free_lie import LieSeries, lie_bracket

N = 6
P = dp.build_Ln(1, N)
a, b, x = (P.generator(g) for g in ("s-1|a0", "s-1|a1", "s-1|a01"))

print("d a =", P.differential["s-1|a0"])
print("d x =", P.differential["s-1|a01"])

expect = lie_bracket(x, b)
term = b - a
for n in range(N):
    bn = Fraction(-1, 2) if n == 1 else Fraction(str(sympy.bernoulli(n)))
    expect = expect + term.scale(bn / factorial(n))
    term = lie_bracket(x, term)
print("equals [x, b] + sum B_n/n! ad_x^n (b - a):", P.differential["s-1|a01"] == expect.truncate(N))
print("d^2 = 0:", P.d_squared_vanishes())
