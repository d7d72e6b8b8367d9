"""How fast does port-based teleportation approach the identity channel?

Works in the reduced single-Choi program space, which keeps the cost of the
optimization polynomial in the number of ports.  The diamond error of the
optimal Choi program decreases monotonically with N and respects the
2 d (d - 1) / N bound; for the identity target the optimal program is the
maximally entangled state itself, and the induced channel is depolarizing
(exactly half-depolarizing at N = 3).
"""

import numpy as np

from qprogopt.channels import max_entangled
from qprogopt.processors import pbt_reduced_map
from qprogopt.sdp import diamond_distance, optimize_choi_diamond

phi = max_entangled(2).matrix

print(f"{'N':>2s} {'optimal Cdiam':>14s} {'at Phi program':>15s} {'bound 4/N':>10s} "
      f"{'depol q_N':>10s}")
for n in range(1, 7):
    red = pbt_reduced_map(n, 2)
    out = red.apply_matrix(phi)
    fixed = diamond_distance(phi - out, 2)
    _, best = optimize_choi_diamond(n, 2, phi)
    # extract the depolarizing parameter of the induced identity simulation
    overlap = float(np.real(np.trace(out @ phi)))
    q = (1.0 - overlap) / 0.75
    print(f"{n:2d} {best:14.6f} {fixed:15.6f} {4.0 / n:10.4f} {q:10.6f}")

print()
print("the q_N column shows the identity simulation is a depolarizing channel;")
print("depolarizing targets with p >= q_N are therefore simulated exactly.")
