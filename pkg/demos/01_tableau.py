r"""
The alpha-family of Gauss tableaux
----------------------------------
Build the s-stage Gauss-Legendre rule, write the collocation matrix in the
orthonormal Legendre basis, and perturb it along one skew direction.
Every member of the family stays symplectic and symmetric.
"""
import numpy as np

from equip import build_family, symplecticity_residual, tableau_at
from equip.tableau import collocation_matrix, symmetry_residual

np.set_printoptions(precision=6, suppress=True)

fam = build_family(3)
print("nodes  c =", fam.c)
print("weights b =", fam.b)

#%%
# In the Legendre basis the Gauss matrix is tridiagonal: X[0,0] = 1/2 and
# skew off-diagonals xi_j = 1 / (2 sqrt(4 j^2 - 1)).
print(fam.X)

#%%
# Mapping back with P = (P_j(c_i)) gives the collocation matrix.  Compare with
# the integrals of the Lagrange polynomials computed directly.
print("max |A0 - collocation| =", np.abs(fam.A0 - collocation_matrix(fam.c)).max())

#%%
# The perturbation is W = e_s e_{s-1}^T - e_{s-1} e_s^T, so A(alpha) = A0 + alpha dA.
for alpha in (0.0, 0.1, -0.7, 10.0):
    t = tableau_at(fam, alpha)
    print(f"alpha={alpha:6.2f}  symplectic residual {symplecticity_residual(t):.1e}"
          f"  symmetry residual {symmetry_residual(t):.1e}")

#%%
# Row sums: since P^{-1} 1 = e_1, the row sums of dA are P W e_1, which is
# nonzero only for s = 2.  There the perturbed method is no longer of
# collocation type; for s >= 3 the stage nodes survive the perturbation.
for s in (2, 3, 4):
    f = build_family(s)
    print(f"s={s}  row sums - c at alpha=0.1:", tableau_at(f, 0.1).A.sum(axis=1) - f.c)
