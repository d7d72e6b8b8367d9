"""Exact-simulation thresholds for depolarizing targets under PBT.

The N-port identity simulation is itself a depolarizing channel with
parameter q_N, so a depolarizing target with p >= q_N factors through it and
is simulated exactly; below the threshold a gap remains.  The sweep shows
the sharp onset at q_2 ~ 0.71 and q_3 = 0.5.
"""

from qprogopt.channels import choi_of_channel, depolarizing
from qprogopt.processors import pbt_processor
from qprogopt.sdp import optimize_program_diamond

print(f"{'p':>5s} {'N=2 Cdiam':>12s} {'N=3 Cdiam':>12s}")
procs = {2: pbt_processor(2, 2), 3: pbt_processor(3, 2)}
for p in (0.3, 0.5, 0.6, 0.71, 0.8, 0.9):
    row = []
    for n in (2, 3):
        chi = choi_of_channel(depolarizing(p)).matrix
        _, val = optimize_program_diamond(procs[n], chi)
        row.append(val)
    print(f"{p:5.2f} {row[0]:12.2e} {row[1]:12.2e}")
