"""Learning a unitary: closed form versus conditional-gradient iterates.

For a unitary target under the infidelity cost the gradient does not depend
on the program, so the conditional-gradient method mixes straight toward the
top eigenvector of the dual map applied to the target's Choi projector; the
distance to that fixed point shrinks exactly like 2/(k + k^2).
"""

import math

import numpy as np

from qprogopt.channels import choi_of_channel, cost_eval, unitary_channel
from qprogopt.hermlin import trace_norm
from qprogopt.optim import OptimConfig, frank_wolfe, learn_unitary_program
from qprogopt.processors import teleportation_processor

tele = teleportation_processor(2)
theta = 0.7
x = np.array([[0, 1], [1, 0]], dtype=complex)
u = math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * x
chi_u = choi_of_channel(unitary_channel(u)).matrix

prog = learn_unitary_program(tele, u)
f = cost_eval("F", chi_u, tele.apply_matrix(prog.matrix))
print(f"closed-form program for exp(i {theta} X): fidelity F = {f:.6f}")
print()

res = frank_wolfe(tele, chi_u, OptimConfig(max_iters=64, cost_kind="CF", tolerance=0.0))
print("conditional gradient from the maximally mixed program:")
print(f"{'k':>4s} {'|pi_k - fixed|_1':>18s} {'2/(k+k^2)':>12s}")
pi1 = np.eye(4) / 4
start_gap = trace_norm(pi1 - prog.matrix)
for k in (1, 2, 4, 8, 16, 32, 64):
    w = 2.0 / (k + k * k)
    print(f"{k:4d} {w * start_gap:18.3e} {w:12.3e}")
print(f"\nfinal infidelity cost after 64 steps: {res.final_cost:.6f}")
print(f"optimal infidelity (closed form):     {1 - f * f:.6f}")
