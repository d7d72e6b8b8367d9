"""First-order optimization of program states.

Gradients of the channel-simulation costs are analytic: with ``L`` the
processor map and ``L*`` its dual,

* trace cost:      grad = L*[sign(chi_pi - chi_target)], with sign(0) = 0;
* fidelity:        grad F = (1/2) L*[ sqrt(t) (sqrt(t) chi_pi sqrt(t))^(-1/2) sqrt(t) ]
  for t = chi_target (pseudo-inverse on the support);
* infidelity:      grad = -2 F grad F;
* smoothed trace:  grad = L*[h'_mu(chi_pi - chi_target)] (Huber derivative).

The feasible set is either the density matrices (Euclidean projection =
spectrum-to-simplex, computed in closed form) or the Choi-constrained set
used by the reduced port-based-teleportation map (projection by Dykstra's
alternating scheme).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .channels import (
    ChoiMatrix,
    DensityMatrix,
    as_matrix,
    bures_fidelity,
    huber_cost,
    huber_penalty_deriv,
    infidelity_cost,
    max_entangled,
    trace_distance_cost,
)
from .hermlin import (
    herm_eig,
    hermitize,
    kron,
    matrix_inv_sqrt,
    matrix_sign,
    matrix_sqrt,
    partial_trace,
)
from .processors import ProcessorMap, ProgramState

__all__ = [
    "OptimConfig",
    "OptimResult",
    "LearningRate",
    "simulation_cost",
    "grad_trace_cost",
    "grad_fidelity",
    "grad_infidelity",
    "grad_smoothed_cost",
    "simplex_project",
    "project_to_states",
    "project_to_choi_set",
    "projected_subgradient",
    "frank_wolfe",
    "learn_unitary_program",
]

GRAD_COST_KINDS = ("C1", "CF", "Cmu")


@dataclass(frozen=True)
class LearningRate:
    """Step-size schedule: a/sqrt(k) ('inv_sqrt') or a/(b + k) ('harmonic')."""

    kind: str = "inv_sqrt"
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("inv_sqrt", "harmonic"):
            raise ValueError(f"LearningRate: unknown kind {self.kind!r}")
        if self.a <= 0:
            raise ValueError("LearningRate: a must be positive")

    def __call__(self, k: int) -> float:
        if self.kind == "inv_sqrt":
            return self.a / math.sqrt(k)
        return self.a / (self.b + k)


@dataclass(frozen=True)
class OptimConfig:
    max_iters: int = 200
    learning_rate: LearningRate = field(default_factory=LearningRate)
    tolerance: float = 1e-9
    cost_kind: str = "C1"  # C1 | CF | Cmu
    mu: float = 1e-2
    seed: int = 0
    init: str = "maximally_mixed"  # maximally_mixed | random
    feasible_set: Optional[str] = None  # None -> follow the processor's domain
    stall_window: int = 50

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("OptimConfig: max_iters must be >= 1")
        if self.cost_kind not in GRAD_COST_KINDS:
            raise ValueError(
                f"OptimConfig: cost_kind {self.cost_kind!r} not in {GRAD_COST_KINDS}"
            )
        if self.cost_kind == "Cmu" and self.mu <= 0:
            raise ValueError("OptimConfig: mu must be positive for the smoothed cost")
        if self.init not in ("maximally_mixed", "random"):
            raise ValueError(f"OptimConfig: unknown init {self.init!r}")
        if self.feasible_set not in (None, "states", "choi"):
            raise ValueError(f"OptimConfig: unknown feasible_set {self.feasible_set!r}")


@dataclass(frozen=True)
class OptimResult:
    program: ProgramState
    cost_trace: tuple  # (iteration, best cost so far) pairs
    converged: bool
    final_cost: float


def simulation_cost(proc: ProcessorMap, chi_target, pi, kind: str = "C1",
                    mu: float = 1e-2) -> float:
    """Cost of simulating ``chi_target`` with program ``pi`` on ``proc``."""
    chi_pi = proc.apply_matrix(pi)
    t = as_matrix(chi_target)
    if kind == "C1":
        return trace_distance_cost(t, chi_pi)
    if kind == "CF":
        return infidelity_cost(t, chi_pi)
    if kind == "Cmu":
        return huber_cost(t, chi_pi, mu)
    raise ValueError(f"simulation_cost: unknown kind {kind!r}")


def grad_trace_cost(proc: ProcessorMap, chi_target, pi) -> np.ndarray:
    """Subgradient of the trace cost; exact gradient at differentiable points."""
    delta = hermitize(proc.apply_matrix(pi) - as_matrix(chi_target))
    return hermitize(proc.dual(matrix_sign(delta)))


def grad_fidelity(proc: ProcessorMap, chi_target, pi) -> np.ndarray:
    t = as_matrix(chi_target)
    root = matrix_sqrt(t)
    inner = hermitize(root @ proc.apply_matrix(pi) @ root)
    mid = root @ matrix_inv_sqrt(inner) @ root
    return hermitize(0.5 * proc.dual(hermitize(mid)))


def grad_infidelity(proc: ProcessorMap, chi_target, pi) -> np.ndarray:
    f = bures_fidelity(chi_target, proc.apply_matrix(pi))
    return -2.0 * f * grad_fidelity(proc, chi_target, pi)


def grad_smoothed_cost(proc: ProcessorMap, chi_target, pi, mu: float) -> np.ndarray:
    if mu <= 0:
        raise ValueError(f"grad_smoothed_cost: mu must be positive, got {mu}")
    delta = hermitize(proc.apply_matrix(pi) - as_matrix(chi_target))
    dec = herm_eig(delta)
    h = (dec.eigenvectors * huber_penalty_deriv(dec.eigenvalues, mu)) @ dec.eigenvectors.conj().T
    return hermitize(proc.dual(h))


def _grad(proc, chi_target, pi, kind, mu):
    if kind == "C1":
        return grad_trace_cost(proc, chi_target, pi)
    if kind == "CF":
        return grad_infidelity(proc, chi_target, pi)
    if kind == "Cmu":
        return grad_smoothed_cost(proc, chi_target, pi, mu)
    raise ValueError(f"unknown cost kind {kind!r}")


# --- projections ------------------------------------------------------------


def simplex_project(x: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    x = np.asarray(x, dtype=float)
    u = np.sort(x)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, x.size + 1)
    thresholds = (css - 1.0) / ks
    s = int(np.nonzero(u > thresholds)[0][-1]) + 1
    theta = (css[s - 1] - 1.0) / s
    out = np.clip(x - theta, 0.0, None)
    return out / out.sum()


def project_to_states(x: np.ndarray) -> DensityMatrix:
    """Closest density matrix in Frobenius norm.

    Keeps the eigenvectors of the (hermitized) input and projects the
    spectrum onto the probability simplex: lambda_i = max(x_i - theta, 0)
    with theta = (sum_{j<=s} x_j - 1)/s and s the largest k for which
    x_k > (sum_{j<=k} x_j - 1)/k.
    """
    dec = herm_eig(hermitize(np.asarray(x, dtype=complex)))
    lam = simplex_project(dec.eigenvalues)
    u = dec.eigenvectors
    return DensityMatrix(hermitize((u * lam) @ u.conj().T))


def _psd_part(x: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(hermitize(x))
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T


def project_to_choi_set(x: np.ndarray, d: int, tol: float = 1e-8,
                        max_iters: int = 5000) -> ChoiMatrix:
    """Euclidean projection onto {chi >= 0, Tr_out chi = I/d, Tr chi = 1}.

    Dykstra's alternating projections between the PSD cone and the affine
    marginal constraint, with correction terms.  Raises on non-convergence
    with the residual in the message.
    """
    x = hermitize(np.asarray(x, dtype=complex))
    if x.shape != (d * d, d * d):
        raise ValueError(f"project_to_choi_set: shape {x.shape}, expected ({d*d}, {d*d})")
    eye_d = np.eye(d)

    def proj_affine(m):
        marg = partial_trace(m, [d, d], keep=[0])
        corr = kron(eye_d / d - marg, eye_d / d)
        return m + corr

    p = np.zeros_like(x)
    q = np.zeros_like(x)
    inner_tol = min(tol, 1e-10)
    y = x
    for _ in range(max_iters):
        y = _psd_part(x + p)
        p = x + p - y
        x_new = proj_affine(y + q)
        q = y + q - x_new
        if np.linalg.norm(x_new - y) <= inner_tol:
            x = x_new
            break
        x = x_new
    else:
        resid = float(np.linalg.norm(x - y))
        raise RuntimeError(
            f"project_to_choi_set: no convergence in {max_iters} iterations "
            f"(set-distance residual {resid:.3e})"
        )
    out = _psd_part(x)
    out = out / np.trace(out).real
    return ChoiMatrix.from_matrix(hermitize(out), d, d)


# --- iterative methods ------------------------------------------------------


def _initial_program(proc: ProcessorMap, cfg: OptimConfig, feasible: str) -> np.ndarray:
    if cfg.init == "maximally_mixed":
        return np.eye(proc.d_prog, dtype=complex) / proc.d_prog
    rng = np.random.default_rng(cfg.seed)
    g = rng.normal(size=(proc.d_prog, proc.d_prog)) + 1j * rng.normal(
        size=(proc.d_prog, proc.d_prog)
    )
    m = hermitize(g @ g.conj().T)
    m /= np.trace(m).real
    if feasible == "choi":
        return project_to_choi_set(m, proc.d_in).matrix
    return m


def _resolve_feasible(proc: ProcessorMap, cfg: OptimConfig) -> str:
    if cfg.feasible_set is not None:
        return cfg.feasible_set
    return "choi" if proc.program_domain == "choi" else "states"


def _program_state(pi: np.ndarray, feasible: str) -> ProgramState:
    structure = "choi-power" if feasible == "choi" else "generic"
    return ProgramState(DensityMatrix(hermitize(pi)), structure=structure)


def _run_loop(proc, chi_target, cfg, step) -> OptimResult:
    feasible = _resolve_feasible(proc, cfg)
    pi = _initial_program(proc, cfg, feasible)
    cost = simulation_cost(proc, chi_target, pi, cfg.cost_kind, cfg.mu)
    best = cost
    best_pi = pi
    trace: List[Tuple[int, float]] = [(0, best)]
    converged = False
    for it in range(1, cfg.max_iters + 1):
        pi = step(pi, it, feasible)
        cost = simulation_cost(proc, chi_target, pi, cfg.cost_kind, cfg.mu)
        if cost < best:
            best = cost
            best_pi = pi
        trace.append((it, best))
        w = cfg.stall_window
        if it >= w and trace[it - w][1] - best < cfg.tolerance:
            converged = True
            break
    return OptimResult(
        program=_program_state(best_pi, feasible),
        cost_trace=tuple(trace),
        converged=converged,
        final_cost=best,
    )


def projected_subgradient(proc: ProcessorMap, chi_target, cfg: OptimConfig = OptimConfig()) -> OptimResult:
    """Subgradient step followed by projection back to the feasible set."""

    def step(pi, it, feasible):
        g = _grad(proc, chi_target, pi, cfg.cost_kind, cfg.mu)
        y = pi - cfg.learning_rate(it) * g
        if feasible == "choi":
            return project_to_choi_set(y, proc.d_in).matrix
        return project_to_states(y).matrix

    return _run_loop(proc, chi_target, cfg, step)


def frank_wolfe(proc: ProcessorMap, chi_target, cfg: OptimConfig = OptimConfig()) -> OptimResult:
    """Conditional-gradient iteration with the exact 2/(i+2) step weight.

    Each step mixes toward the eigenvector of the smallest eigenvalue of the
    current gradient.  Requires a differentiable cost; the trace cost is
    accepted but its subgradient may stall near kinks, where the smoothed
    cost is the better choice.
    """
    feasible = _resolve_feasible(proc, cfg)
    if feasible == "choi":
        raise ValueError(
            "frank_wolfe: pure-state vertices leave the Choi-constrained set; "
            "use projected_subgradient for the reduced map"
        )

    def step(pi, it, _feasible):
        g = _grad(proc, chi_target, pi, cfg.cost_kind, cfg.mu)
        vals, vecs = np.linalg.eigh(hermitize(g))
        v = vecs[:, 0]  # eigenvector of the smallest eigenvalue
        vertex = np.outer(v, v.conj())
        w = 2.0 / (it + 2.0)
        return (1.0 - w) * pi + w * vertex

    return _run_loop(proc, chi_target, cfg, step)


def learn_unitary_program(proc: ProcessorMap, u: np.ndarray,
                          degeneracy_tol: float = 1e-10) -> ProgramState:
    """Closed-form optimal program for a unitary target under the fidelity.

    Returns the top eigenvector of L*[|chi_U><chi_U|] as a pure program; the
    achieved squared fidelity equals that top eigenvalue.  A degenerate top
    eigenvalue emits a warning (any maximizer is returned).
    """
    u = np.asarray(u, dtype=complex)
    d = proc.d_in
    if u.shape != (d, d):
        raise ValueError(f"learn_unitary_program: unitary shape {u.shape}, expected ({d}, {d})")
    if np.abs(u.conj().T @ u - np.eye(d)).max() > 1e-10:
        raise ValueError("learn_unitary_program: input is not unitary")
    phi = max_entangled(d).matrix
    ext = kron(np.eye(d), u)
    chi_u = ext @ phi @ ext.conj().T
    dec = herm_eig(hermitize(proc.dual(chi_u)))
    if dec.eigenvalues.size > 1 and dec.eigenvalues[0] - dec.eigenvalues[1] < degeneracy_tol:
        warnings.warn(
            "learn_unitary_program: top eigenvalue is degenerate; "
            "returning one maximizer",
            stacklevel=2,
        )
    return ProgramState(DensityMatrix.pure(dec.eigenvectors[:, 0]))
