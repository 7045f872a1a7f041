"""Blind search for Darboux polynomials of a polar map.

Factors the Jacobian determinant of the map for the planar central force,
tries every cofactor built from those factors, and assembles first integrals
and invariant densities from what it finds.
"""
from fractions import Fraction

from polarmaps import darboux
from polarmaps.acceptance import rotational_system

bmap = darboux.polar_birational_map(rotational_system(1, 1), Fraction(1, 10))
pool = darboux.factor_jacobian(bmap)
print("Jacobian determinant factors (degree, exponent):", [(f.degree, e) for f, e in pool.factors])

for bound in (2, 4):
    rep = darboux.discover(bmap, bound)
    print(f"\ndegree bound {bound}: {len(rep.tried)} cofactors tried")
    for sp in rep.spaces:
        tag = " (products of other spaces)" if sp.derived else ""
        print(f"  cofactor exponents {sp.cofactor.exponents}, dimension {sp.dimension}{tag}")
    for inv in rep.invariants:
        expr = " * ".join(f"[{P}]^{a}" for P, a in inv.factors)
        print(f"  {inv.kind}: {expr}  (orbit residual {inv.orbit_residual:.1e})")
