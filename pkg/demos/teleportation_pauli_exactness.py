"""Teleportation processor: which channels does it simulate perfectly?

The teleportation processor turns any two-qubit program into a Bell-diagonal
Choi matrix, so Pauli channels (diagonal in the Bell basis) are simulated
exactly, while coherent rotations are not unless the angle is a multiple of
pi/2.  Both effects are visible with the joint trace-distance SDP and with
the projected subgradient iteration.
"""

import math

import numpy as np

from qprogopt.channels import choi_of_channel, pauli_channel, rotation
from qprogopt.optim import LearningRate, OptimConfig, projected_subgradient
from qprogopt.processors import teleportation_processor
from qprogopt.sdp import optimize_program_trace

tele = teleportation_processor(2)
rng = np.random.default_rng(1)

print("random Pauli channels, joint SDP over programs")
print(f"{'probabilities':38s} {'optimal C1':>12s}")
for _ in range(4):
    probs = np.round(rng.dirichlet(np.ones(4)), 3)
    probs = probs / probs.sum()
    chi = choi_of_channel(pauli_channel(probs)).matrix
    _, value = optimize_program_trace(tele, chi)
    print(f"{np.array2string(probs, precision=3):38s} {value:12.2e}")

print()
print("rotations exp(i theta X), projected subgradient (200 iterations)")
print(f"{'theta':>10s} {'final C1':>12s}  note")
cfg = OptimConfig(max_iters=200, cost_kind="C1",
                  learning_rate=LearningRate("harmonic", a=1.0, b=1.0))
for theta, note in [
    (0.0, "covariant: perfect"),
    (math.pi / 2, "covariant: perfect"),
    (math.pi / 4, "hardest angle: positive plateau"),
    (math.pi / 8, "closer to covariant"),
]:
    chi = choi_of_channel(rotation(theta)).matrix
    res = projected_subgradient(tele, chi, cfg)
    print(f"{theta:10.4f} {res.final_cost:12.3e}  {note}")
