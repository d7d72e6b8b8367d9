"""Programmable-processor families as explicit Kraus maps.

A processor is a CPTP map from program states to the Choi matrix of the
simulated channel.  Three families are provided:

* ``teleportation_processor`` -- generalized teleportation over a
  d^2-dimensional program (Bell measurement + correction unitaries).
* ``pbt_processor`` / ``pbt_reduced_map`` -- port-based teleportation with N
  ports; the reduced variant acts on a single d^2-dimensional Choi block and
  agrees with the full map on program states of the form chi^(tensor N).
* ``pqc_processor`` / ``mpqc_processor`` -- conditioned-Hamiltonian circuit
  processors with qubit (resp. qutrit) program registers.

Program storage conventions: PBT programs interleave port wires as
(A_1, B_1, A_2, B_2, ...), so ``chi^(tensor N)`` is a plain Kronecker power
of a Choi matrix.  PQC programs order registers as (R_0, R_1, ..., R_N).
Choi outputs are always ordered (input copy, output).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .channels import ChoiMatrix, DensityMatrix, as_matrix, max_entangled
from .hermlin import (
    embed_operator,
    hermitize,
    kron,
    matrix_function,
    matrix_inv_sqrt,
    partial_trace,
    permute_subsystems,
)

__all__ = [
    "CapacityError",
    "ProgramState",
    "ProcessorMap",
    "weyl_unitaries",
    "bell_basis",
    "teleportation_processor",
    "pbt_povm",
    "pbt_processor",
    "pbt_reduced_map",
    "permute_ports",
    "symmetrize_program",
    "symmetric_param_count",
    "default_pqc_hamiltonians",
    "amplitude_damping_hamiltonian",
    "pqc_processor",
    "mpqc_processor",
]

PROCESSOR_CPTP_TOL = 1e-8

# Size caps, enforced with CapacityError rather than silent slowness.
PBT_FULL_MAX_PROG_DIM = 64  # full PBT: d^(2N) <= 64, i.e. N <= 3 for qubits
PBT_REDUCED_MAX_PORTS = 8
PQC_MAX_GATES = 6
MPQC_MAX_GATES = 4


class CapacityError(ValueError):
    """Requested processor exceeds the configured dense-size caps."""


@dataclass(frozen=True)
class ProgramState:
    """Program fed to a processor, tagged with its structural role."""

    state: DensityMatrix
    structure: str = "generic"  # generic | port-symmetric | choi-power

    def __post_init__(self):
        if self.structure not in ("generic", "port-symmetric", "choi-power"):
            raise ValueError(f"ProgramState: unknown structure tag {self.structure!r}")

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix

    @property
    def dim(self) -> int:
        return self.state.dim


ProgramLike = Union[np.ndarray, DensityMatrix, ProgramState]


def _program_matrix(pi: ProgramLike) -> np.ndarray:
    if isinstance(pi, ProgramState):
        return pi.state.matrix
    return as_matrix(pi)


@dataclass(frozen=True)
class ProcessorMap:
    """CPTP map from program space (dim d_prog) to Choi space (dim d_in*d_out).

    Kraus operators are stored stacked as one array of shape
    (n_kraus, d_in*d_out, d_prog).  The dual map is Kraus-adjoint
    conjugation and is generally not trace preserving.
    """

    kraus: np.ndarray
    d_prog: int
    d_in: int
    d_out: int
    label: str = ""
    # natural program domain: "states" (any density matrix) or "choi"
    # (single-port Choi matrices, Tr_out = I/d); only the reduced PBT map
    # uses the latter.
    program_domain: str = "states"

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        dc = self.d_in * self.d_out
        if k.ndim != 3 or k.shape[1:] != (dc, self.d_prog):
            raise ValueError(
                f"ProcessorMap: kraus shape {k.shape}, expected (*, {dc}, {self.d_prog})"
            )
        comp = np.einsum("kij,kil->jl", k.conj(), k)
        dev = float(np.abs(comp - np.eye(self.d_prog)).max())
        if dev > PROCESSOR_CPTP_TOL:
            raise ValueError(
                f"ProcessorMap {self.label!r}: sum K^dag K deviates from I by {dev:.3e}"
            )
        object.__setattr__(self, "kraus", k)

    @property
    def kraus_ops(self) -> tuple:
        return tuple(self.kraus)

    @property
    def d_choi(self) -> int:
        return self.d_in * self.d_out

    def apply_matrix(self, pi: ProgramLike) -> np.ndarray:
        """Raw Choi-space matrix of the simulated channel (no wrapping)."""
        m = _program_matrix(pi)
        if m.shape != (self.d_prog, self.d_prog):
            raise ValueError(
                f"ProcessorMap {self.label!r}: program shape {m.shape}, "
                f"expected ({self.d_prog}, {self.d_prog})"
            )
        return hermitize(np.einsum("kij,jl,kml->im", self.kraus, m, self.kraus.conj()))

    def apply(self, pi: ProgramLike) -> ChoiMatrix:
        return ChoiMatrix.from_matrix(self.apply_matrix(pi), self.d_in, self.d_out)

    def dual(self, x: np.ndarray) -> np.ndarray:
        """Adjoint map on Choi-space observables: sum_k K^dag X K."""
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.d_choi, self.d_choi):
            raise ValueError(
                f"ProcessorMap {self.label!r}: observable shape {x.shape}, "
                f"expected ({self.d_choi}, {self.d_choi})"
            )
        return np.einsum("kij,im,kml->jl", self.kraus.conj(), x, self.kraus)


# --- teleportation ----------------------------------------------------------


def weyl_unitaries(d: int) -> list:
    """The d^2 clock/shift products W[a*d+b] = X^a Z^b, Tr(W_i^dag W_j) = d delta_ij.

    For d = 2 these are I, Z, X, XZ = -iY, i.e. the Pauli frame up to phase.
    """
    if d < 2:
        raise ValueError(f"weyl_unitaries: need d >= 2, got {d}")
    omega = np.exp(2j * np.pi / d)
    shift = np.zeros((d, d), dtype=complex)
    for j in range(d):
        shift[(j + 1) % d, j] = 1.0
    clock = np.diag(omega ** np.arange(d))
    out = []
    xa = np.eye(d, dtype=complex)
    for _a in range(d):
        zb = np.eye(d, dtype=complex)
        for _b in range(d):
            out.append(xa @ zb)
            zb = zb @ clock
        xa = xa @ shift
    return out


def bell_basis(d: int) -> list:
    """Maximally entangled basis |Phi_i> = (I (x) W_i)|Phi>."""
    phi = np.zeros(d * d, dtype=complex)
    phi[:: d + 1] = 1.0 / math.sqrt(d)
    return [kron(np.eye(d), w) @ phi for w in weyl_unitaries(d)]


def teleportation_processor(d: int = 2) -> ProcessorMap:
    """Teleportation over an arbitrary two-qudit program.

    The map conjugates the program with (W_i^* (x) W_i)/d for the d^2
    teleportation unitaries; it is self-dual.
    """
    ws = weyl_unitaries(d)
    kraus = np.stack([kron(w.conj(), w) / d for w in ws])
    return ProcessorMap(kraus, d_prog=d * d, d_in=d, d_out=d, label=f"teleportation[d={d}]")


# --- port-based teleportation ----------------------------------------------


def _entangled_pair(d: int, singlet: bool) -> np.ndarray:
    if singlet:
        if d != 2:
            raise ValueError("singlet PBT variant is defined for qubits only")
        v = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
        return np.outer(v, v.conj())
    return max_entangled(d).matrix


def pbt_povm(n_ports: int, d: int = 2, singlet: bool = False) -> list:
    """Square-root-measurement POVM on (A_1..A_N, C), one element per port.

    N = 1 is the trivial protocol and returns [identity].  With
    ``singlet=True`` the pair state defining the measurement is the singlet
    instead of the maximally entangled state (qubits only).
    """
    if n_ports < 1:
        raise ValueError(f"pbt_povm: need N >= 1, got {n_ports}")
    if d < 2:
        raise ValueError(f"pbt_povm: need d >= 2, got {d}")
    dims = [d] * n_ports + [d]
    dtot = d ** (n_ports + 1)
    if n_ports == 1:
        return [np.eye(dtot, dtype=complex)]
    pair = _entangled_pair(d, singlet)
    projs = [embed_operator(pair, dims, targets=[i, n_ports]) for i in range(n_ports)]
    sigma = sum(projs)
    s_inv_half = matrix_inv_sqrt(sigma)
    tilded = [hermitize(s_inv_half @ p @ s_inv_half) for p in projs]
    gap = (np.eye(dtot) - sum(tilded)) / n_ports
    return [hermitize(t + gap) for t in tilded]


def _interleave_perm(n_ports: int) -> list:
    # block order (A_1..A_N, B_1..B_N) -> interleaved (A_1, B_1, A_2, B_2, ...)
    perm = []
    for i in range(n_ports):
        perm.extend([i, n_ports + i])
    return perm


def _kraus_from_transfer(transfer: np.ndarray, d_prog: int, d_choi: int,
                         label: str) -> np.ndarray:
    """Factor a completely positive transfer tensor T[r, c, m, n] into Kraus form.

    Works via the eigendecomposition of the map's own Choi operator
    J[(m, r), (n, c)] = T[r, c, m, n].
    """
    j = transfer.transpose(2, 0, 3, 1).reshape(d_prog * d_choi, d_prog * d_choi)
    j = hermitize(j)
    vals, vecs = np.linalg.eigh(j)
    scale = float(np.abs(vals).max())
    if vals[0] < -1e-8 * max(scale, 1.0):
        raise ValueError(f"{label}: transfer is not completely positive (lambda_min = {vals[0]:.3e})")
    keep = vals > 1e-14 * max(scale, 1.0)
    ops = []
    for w, v in zip(vals[keep], vecs[:, keep].T):
        ops.append(math.sqrt(w) * v.reshape(d_prog, d_choi).T)
    return np.stack(ops)


def _pbt_full_transfer(n_ports: int, d: int, povm: list) -> np.ndarray:
    """Transfer tensor T[r, c, m, n] of the full PBT program-to-Choi map.

    Program basis indices m, n run over the interleaved (A_1, B_1, ...)
    ordering.
    """
    n = n_ports
    dn = d**n
    dp = d ** (2 * n)
    dc = d * d
    out = np.zeros((d, d, d, d) + (dn,) + (d,) * n + (dn,) + (d,) * n, dtype=complex)
    eye = np.eye(d)
    # integer einsum labels: 0..3 = p, b, q, c; 4 = mA; 5..4+N = mb_k;
    # 5+N = nA; 6+N..5+2N = nb_k
    l_p, l_b, l_q, l_c, l_ma = 0, 1, 2, 3, 4
    l_mb = [5 + k for k in range(n)]
    l_na = 5 + n
    l_nb = [6 + n + k for k in range(n)]
    out_legs = [l_p, l_b, l_q, l_c, l_ma] + l_mb + [l_na] + l_nb
    for i, pi_op in enumerate(povm):
        p4 = pi_op.reshape(dn, d, dn, d)  # legs (row A, row C, col A, col C)
        # out[p,b,q,c, mA, mb_1..mb_N, nA, nb_1..nb_N] +=
        #   (1/d) P[nA, q, mA, p] delta(mb_i, b) delta(nb_i, c) prod_{k != i} delta(mb_k, nb_k)
        operands = [p4, [l_na, l_q, l_ma, l_p]]
        operands += [eye, [l_mb[i], l_b], eye, [l_nb[i], l_c]]
        for k in range(n):
            if k != i:
                operands += [eye, [l_mb[k], l_nb[k]]]
        out += np.einsum(*operands, out_legs) / d
    # split the composite A legs and interleave with the B legs
    out = out.reshape((d, d, d, d) + (d,) * (4 * n))
    base = 4
    m_order = []
    for i in range(n):
        m_order.extend([base + i, base + n + i])
    n_order = []
    for i in range(n):
        n_order.extend([base + 2 * n + i, base + 3 * n + i])
    out = out.transpose([0, 1, 2, 3] + m_order + n_order)
    return out.reshape(dc, dc, dp, dp)


def pbt_processor(n_ports: int, d: int = 2, singlet: bool = False) -> ProcessorMap:
    """Full port-based-teleportation processor on a d^(2N) program space."""
    d_prog = d ** (2 * n_ports)
    if d_prog > PBT_FULL_MAX_PROG_DIM:
        raise CapacityError(
            f"pbt_processor: program dim {d_prog} exceeds cap {PBT_FULL_MAX_PROG_DIM} "
            f"(use pbt_reduced_map for larger N)"
        )
    povm = pbt_povm(n_ports, d, singlet)
    transfer = _pbt_full_transfer(n_ports, d, povm)
    kraus = _kraus_from_transfer(transfer, d_prog, d * d, "pbt_processor")
    return ProcessorMap(kraus, d_prog=d_prog, d_in=d, d_out=d,
                        label=f"pbt[N={n_ports},d={d}]")


def pbt_reduced_map(n_ports: int, d: int = 2, singlet: bool = False) -> ProcessorMap:
    """PBT restricted to programs chi^(tensor N): a map on one Choi block.

    For every single-port Choi matrix chi (Tr_out chi = I/d) the output
    equals ``pbt_processor(N, d).apply(chi^(tensor N))``.  The map is CPTP on
    the whole d^2 space, but only Choi-constrained programs correspond to
    actual PBT resource states.
    """
    if n_ports < 1:
        raise ValueError(f"pbt_reduced_map: need N >= 1, got {n_ports}")
    if n_ports > PBT_REDUCED_MAX_PORTS:
        raise CapacityError(
            f"pbt_reduced_map: N = {n_ports} exceeds cap {PBT_REDUCED_MAX_PORTS}"
        )
    povm = pbt_povm(n_ports, d, singlet)
    dims = [d] * n_ports + [d]
    # POVM element of port 1 with the other ports traced out, on (A_1, C)
    reduced = partial_trace(povm[0], dims, keep=[0, n_ports])
    p4 = reduced.reshape(d, d, d, d)  # legs (row a, row C, col a, col C)
    eye = np.eye(d)
    coef = n_ports / d**n_ports
    transfer = coef * np.einsum(
        "uqvp,yb,zc->pbqcvyuz", p4, eye, eye
    ).reshape(d * d, d * d, d * d, d * d)
    kraus = _kraus_from_transfer(transfer, d * d, d * d, "pbt_reduced_map")
    return ProcessorMap(kraus, d_prog=d * d, d_in=d, d_out=d,
                        label=f"pbt_reduced[N={n_ports},d={d}]",
                        program_domain="choi")


def permute_ports(pi: ProgramLike, n_ports: int, d: int, order: Sequence[int]) -> np.ndarray:
    """Relabel PBT ports of a program: new port j carries old port order[j]."""
    m = _program_matrix(pi)
    if sorted(order) != list(range(n_ports)):
        raise ValueError(f"permute_ports: invalid port order {list(order)}")
    perm = []
    for j in order:
        perm.extend([2 * j, 2 * j + 1])
    return permute_subsystems(m, [d] * (2 * n_ports), perm)


def symmetrize_program(pi: ProgramLike, n_ports: int, d: int) -> ProgramState:
    """Average a PBT program over all joint (A_i, B_i) port relabelings."""
    m = _program_matrix(pi)
    if m.shape != (d ** (2 * n_ports),) * 2:
        raise ValueError(
            f"symmetrize_program: program shape {m.shape} does not match "
            f"N={n_ports}, d={d}"
        )
    acc = np.zeros_like(m)
    count = 0
    for order in itertools.permutations(range(n_ports)):
        acc += permute_ports(m, n_ports, d, order)
        count += 1
    return ProgramState(DensityMatrix(hermitize(acc / count)), structure="port-symmetric")


def symmetric_param_count(n_ports: int, d: int = 2) -> int:
    """Number of free parameters of a port-symmetric PBT program."""
    if n_ports < 1:
        raise ValueError(f"symmetric_param_count: need N >= 1, got {n_ports}")
    k = d**4 - 1
    return math.comb(n_ports + k, k)


# --- parametric-circuit processors ------------------------------------------

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def default_pqc_hamiltonians() -> tuple:
    """The pair of universal two-qubit generators used for benchmarking."""
    h0 = math.sqrt(2.0) * (kron(_X, _Y) - kron(_Y, _X))
    h1 = kron(
        math.sqrt(2.0) * _Z + math.sqrt(3.0) * _Y + math.sqrt(5.0) * _X,
        _Y + math.sqrt(2.0) * _Z,
    )
    return h0, h1


def amplitude_damping_hamiltonian(p: float) -> np.ndarray:
    """Generator whose exponential is a Stinespring unitary of damping p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"amplitude_damping_hamiltonian: p={p} outside [0, 1]")
    return (math.asin(math.sqrt(p)) / 2.0) * (kron(_Y, _X) - kron(_X, _Y))


def _conditional_gate(h0: np.ndarray, h1: np.ndarray, reg_dim: int) -> np.ndarray:
    """exp(i h0 (x) |0><0| + i h1 (x) |1><1|) on (A, R0, R_j).

    With reg_dim = 3, the |2> sector evolves trivially (zero generator).
    """
    p0 = np.zeros((reg_dim, reg_dim), dtype=complex)
    p1 = np.zeros((reg_dim, reg_dim), dtype=complex)
    p0[0, 0] = 1.0
    p1[1, 1] = 1.0
    heff = kron(h0, p0) + kron(h1, p1)
    return matrix_function(heff, lambda x: np.exp(1j * x))


def _circuit_processor(n_gates: int, h0, h1, reg_dim: int, label: str) -> ProcessorMap:
    h0 = np.asarray(h0, dtype=complex)
    h1 = np.asarray(h1, dtype=complex)
    if h0.shape != h1.shape or h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
        raise ValueError("circuit processor: H0 and H1 must be square and same shape")
    if h0.shape[0] % 2:
        raise ValueError("circuit processor: Hamiltonians must act on A (x) R0 with a qubit R0")
    d_a = h0.shape[0] // 2
    dims = [d_a, 2] + [reg_dim] * n_gates  # (A, R0, R_1..R_N)
    d_reg = 2 * reg_dim**n_gates
    gate = _conditional_gate(h0, h1, reg_dim)
    u_hat = np.eye(d_a * d_reg, dtype=complex)
    for j in range(1, n_gates + 1):
        u_j = embed_operator(gate, dims, targets=[0, 1, 1 + j])
        u_hat = u_j @ u_hat  # gate 1 applied first
    u4 = u_hat.reshape(d_a, d_reg, d_a, d_reg)
    # K_m[(b, a'), r] = U[(a', m), (b, r)] / sqrt(d_A), Choi ordered (B, A)
    kraus = u4.transpose(1, 2, 0, 3).reshape(d_reg, d_a * d_a, d_reg) / math.sqrt(d_a)
    return ProcessorMap(np.ascontiguousarray(kraus), d_prog=d_reg,
                        d_in=d_a, d_out=d_a, label=label)


def pqc_processor(n_gates: int, h0: Optional[np.ndarray] = None,
                  h1: Optional[np.ndarray] = None) -> ProcessorMap:
    """Conditioned-Hamiltonian circuit processor with N qubit registers.

    The program lives on (R_0, R_1, ..., R_N); register R_j selects whether
    gate j applies exp(i H0) or exp(i H1) to (A, R_0).  Gates are applied in
    increasing j order.
    """
    if n_gates < 1:
        raise ValueError(f"pqc_processor: need N >= 1, got {n_gates}")
    if n_gates > PQC_MAX_GATES:
        raise CapacityError(f"pqc_processor: N = {n_gates} exceeds cap {PQC_MAX_GATES}")
    if h0 is None or h1 is None:
        d0, d1 = default_pqc_hamiltonians()
        h0 = d0 if h0 is None else h0
        h1 = d1 if h1 is None else h1
    return _circuit_processor(n_gates, h0, h1, 2, f"pqc[N={n_gates}]")


def mpqc_processor(n_gates: int, h0: Optional[np.ndarray] = None,
                   h1: Optional[np.ndarray] = None) -> ProcessorMap:
    """Monotonic circuit processor: qutrit registers, |2> enacts the identity.

    Padding a depth-M program with |2><2| registers reproduces the depth-M
    qubit circuit exactly, so the optimized cost never degrades with depth.
    """
    if n_gates < 1:
        raise ValueError(f"mpqc_processor: need N >= 1, got {n_gates}")
    if n_gates > MPQC_MAX_GATES:
        raise CapacityError(f"mpqc_processor: N = {n_gates} exceeds cap {MPQC_MAX_GATES}")
    if h0 is None or h1 is None:
        d0, d1 = default_pqc_hamiltonians()
        h0 = d0 if h0 is None else h0
        h1 = d1 if h1 is None else h1
    return _circuit_processor(n_gates, h0, h1, 3, f"mpqc[N={n_gates}]")
