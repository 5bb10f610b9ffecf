import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infquillen import dupont as dp
from infquillen import mc_realization as mr
from infquillen.free_lie import CDGLPresentation, FiniteDGL, abelian_dgl
from infquillen.graded import GradedSpace


def free_nilpotent(degs=(-1, 0), order=4):
    W = GradedSpace(tuple("xyz"[:len(degs)]), tuple(degs))
    return CDGLPresentation(W, {}, order).to_finite()


def heisenberg():
    S = GradedSpace(("a", "b", "c", "u", "v"), (0, 0, 0, -1, -1))
    return FiniteDGL(S, {("a", "b"): {"c": 1}, ("a", "u"): {"v": 1}}, {}, "heisenberg")


L2 = free_nilpotent()
L3 = free_nilpotent((-1, 0, 1), 3)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_sampled_simplices_and_simplicial_identities(n):
    rng = random.Random(n)
    for _ in range(3):
        s = mr.sample_simplex(n, L2, rng)
        assert mr.is_simplex(n, L2, s.z)
        assert mr.RealizationSimplex.from_json(s.to_json(), L2) == s
        for j in range(n + 1):
            assert mr.is_simplex(n + 1, L2, s.degeneracy(j).z)
            assert s.degeneracy(j).face(j) == s
            assert s.degeneracy(j).face(j + 1) == s
        for i, j in itertools.combinations(range(n + 1), 2) if n >= 2 else ():
            assert s.face(j).face(i) == s.face(i).face(j - 1)
        for j in range(n + 1) if n else ():
            assert mr.is_simplex(n - 1, L2, s.face(j).z)


@pytest.mark.parametrize("n", [1, 2])
def test_psi_is_invertible(n):
    V = mr.tensor_space(n, L2)
    z = {a: Fraction(i + 1) for i, a in enumerate(V.labels[:12])}
    assert mr.psi_inverse(n, mr.psi(n, z, L2), L2) == z


@pytest.mark.parametrize("n", [1, 2])
def test_psi_intertwines_tensor_and_convolution_structures(n):
    T = mr.tensor_linf(n, L2, 3)
    C = mr.convolution_linf(dp.chain_coalgebra(n, 3), L2, 3)
    gens = [a for a in T.V.labels if mr.split_label(a)[1] in ("x", "y")]
    nonzero = 0
    for k in (1, 2, 3):
        for w in itertools.product(gens, repeat=k):
            a = mr.psi(n, T.l(k, w), L2)
            b = C.l_multilinear(k, [mr.psi(n, {x: 1}, L2) for x in w])
            assert a == b, w
            nonzero += bool(a)
    assert nonzero


def test_convolution_bracket_is_l2():
    C = dp.chain_coalgebra(1, 3)
    conv = mr.convolution_linf(C, L2, 3)
    H = mr.hom_space(C.V, L2)
    rng = random.Random(0)
    for _ in range(10):
        f, g = ({h: Fraction(rng.randint(-2, 2)) for h in rng.sample(H.labels, 4)} for _ in range(2))
        for x in (f, g):
            for h in list(x):
                if H.degree(h) != H.degree(next(iter(x))):
                    del x[h]
        assert mr.convolution_bracket(C, L2, f, g) == conv.l_multilinear(2, [f, g])


def test_taylor_series_and_nerve():
    rng = random.Random(4)
    for n in range(3):
        s = mr.sample_simplex(n, L3, rng)
        y = mr.mc_I(n, L3, s.z)
        assert y.mc_residual().is_zero()
        assert mr.mc_P(y) == s.z
        assert mr.nerve_membership(y)
        assert mr.FormTensor.from_json(y.to_json(), L3) == y


def test_non_mc_inputs_are_rejected():
    L = heisenberg()
    with pytest.raises(ValueError):
        mr.RealizationSimplex(0, L, {mr.tensor_label("c0", "a"): 1})
    P = dp.build_Ln(1, 4)
    with pytest.raises(mr.NotAMorphism):
        mr.morphism_to_mc(P, L2, {"s-1|a0": {"x": Fraction(1)}, "s-1|a01": {}, "s-1|a1": {}})
    # x has [x, x] != 0 in the free algebra, so it is not a vertex
    assert not mr.is_simplex(0, L2, {mr.tensor_label("c0", "x"): Fraction(1)})
    with pytest.raises(mr.NotMaurerCartan):
        mr.RealizationSimplex(0, L2, {mr.tensor_label("c0", "x"): Fraction(1)})


def test_heisenberg_gauge_classes():
    L = heisenberg()
    els = [{"u": Fraction(1)}, {"u": Fraction(1), "v": Fraction(5)}, {"v": Fraction(1)}, {"v": Fraction(2)}, {}]
    assert mr.pi0(L, els) == [[0, 1], [2], [3], [4]]
    g = mr.gauge_solve(L, els[0], els[1])
    assert L.gauge(g, els[0]) == els[1]


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=2, max_size=2))
def test_abelian_pi0_is_homology(cs):
    S = GradedSpace(("x1", "x2", "y"), (-1, -1, 0))
    L = abelian_dgl(S, {"y": {"x1": 1}})
    x = {"x1": Fraction(cs[0]), "x2": Fraction(cs[1])}
    x = {a: c for a, c in x.items() if c}
    # classes are determined by the x2 coordinate
    assert mr.gauge_equivalent(L, x, {"x2": Fraction(cs[1])} if cs[1] else {})
    assert mr.pi0_abelian(L) == 1


def test_pi1_is_h0_of_the_localization():
    L = heisenberg()
    z = {"u": Fraction(1)}
    G = mr.pi1_group(L, z)
    # d_z a = [u, a] = -v is nonzero, so only b and c survive in degree 0
    assert mr.pi_rank(L, z, 1) == 2
    assert G.equal(G.multiply({"b": Fraction(1)}, G.inverse({"b": Fraction(1)})), {})
