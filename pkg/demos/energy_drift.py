"""Energy behaviour of the polar map against textbook integrators.

A random quartic oscillator is integrated with the polar map, Stormer-Verlet,
implicit midpoint and RK4 from identical initial data. The symplectic and
polar methods keep the energy error bounded; RK4 drifts steadily.
"""
import numpy as np

from polarmaps.harness import compare_integrators, random_quartic_problem

spec = random_quartic_problem(2, seed=102, h="1/5", steps=8000)
reports = compare_integrators(spec)
print(f"{'method':<18} " + " ".join(f"{'quarter ' + str(k + 1):>12}" for k in range(4)))
for method, rep in reports.items():
    H = rep.records["H"]
    err = np.abs(H - H[0])[1:]
    print(f"{method:<18} " + " ".join(f"{c.max():12.3e}" for c in np.array_split(err, 4)))
