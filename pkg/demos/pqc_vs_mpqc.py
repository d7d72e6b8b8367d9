"""Circuit processors: plain conditioned gates versus the monotonic variant.

The plain design conditions each gate on a qubit register and need not
improve with depth; the monotonic variant uses qutrit registers whose |2>
state skips the gate, so depth-N performance is guaranteed to match any
shallower depth.  Both are optimized here with the joint diamond SDP on an
amplitude damping target.
"""

from qprogopt.channels import amplitude_damping, choi_of_channel
from qprogopt.processors import mpqc_processor, pqc_processor
from qprogopt.sdp import optimize_program_diamond

for p in (0.25, 0.5):
    chi_e = choi_of_channel(amplitude_damping(p)).matrix
    print(f"amplitude damping p = {p}")
    print(f"{'N':>2s} {'PQC Cdiam':>12s} {'mPQC Cdiam':>12s} {'min PQC<=N':>12s}")
    best = []
    for n in (1, 2, 3):
        _, v_p = optimize_program_diamond(pqc_processor(n), chi_e)
        _, v_m = optimize_program_diamond(mpqc_processor(n), chi_e)
        best.append(v_p)
        print(f"{n:2d} {v_p:12.6f} {v_m:12.6f} {min(best):12.6f}")
    print()
