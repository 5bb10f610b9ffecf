"""Exact tree transfer, the infinity Quillen functor and Maurer-Cartan realization.

Modules:
  graded, linalg   graded spaces, Koszul signs, exact rational linear algebra
  trees            planar and non planar rooted binary trees
  free_lie         free graded Lie algebras, Lyndon basis, BCH, finite DGLs
  transfer         retracts and tree-indexed homotopy transfer
  dupont           polynomial forms, the Dupont contraction, the models L_n
  mc_realization   Maurer-Cartan elements, morphisms and the realization
  cli              command line entry point
"""

__version__ = "0.1.0"
