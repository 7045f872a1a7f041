"""Central force in the plane: two rational integrals and an invariant density.

Runs the polar map for H = |p|^2/2 + |x|^2 + |x|^4 and prints how far the
first integral, the ratio P1/P2 and the density transport drift over 10^4
steps, next to the energy (which is only approximately conserved).
"""
import numpy as np

from polarmaps.harness import rotational, run_trajectory

rep = run_trajectory(rotational(alpha=1, beta=1, h="1/10", steps=10_000))
s = rep.summary
print(f"steps: {rep.steps_completed}  wall time: {rep.wall_time:.1f}s")
print(f"first integral, max relative drift: {s['F_max_rel_drift']:.2e}")
print(f"P1/P2, max relative drift:          {s['P1/P2_max_rel_drift']:.2e}")
print(f"density transport residual:         {s['measure_residual']:.2e}")
print(f"energy, max absolute drift:         {s['H_max_abs_drift']:.2e}")

# the orbit winds around the origin; the angular-momentum-like P1 alone is not conserved
P1 = rep.records["track:P1"]
print(f"P1 range along the orbit: [{P1.min():.6f}, {P1.max():.6f}]")
r = np.hypot(rep.records["s3"], rep.records["s4"])
print(f"radius range: [{r.min():.4f}, {r.max():.4f}]")
