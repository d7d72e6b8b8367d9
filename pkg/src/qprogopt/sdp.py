"""Dense semidefinite programming: a small interior-point solver and the
channel-simulation programs built on it.

The solver handles real symmetric block problems in primal standard form

    minimize    <C, X>
    subject to  <A_i, X> = b_i,   X >= 0 (blockwise),

with an infeasible-start primal-dual path-following iteration,
Nesterov-Todd scaling and a fixed fraction-to-boundary factor of 0.98.
Complex Hermitian variables enter through the standard real embedding
H -> [[Re H, -Im H], [Im H, Re H]], which doubles spectra and traces; all
builders below account for the factor of two so reported objectives live on
the complex side.

Built on top of it:

* ``diamond_distance`` -- worst-case channel distance of a Hermitian Choi
  difference, via min 2 ||Tr_out Z||_inf s.t. Z >= 0, Z >= d * chi.
* ``optimize_program_trace`` / ``optimize_program_diamond`` /
  ``optimize_program_fidelity`` -- joint search over program states.
* ``optimize_choi_diamond`` -- diamond search over single-port Choi programs
  of the reduced port-based-teleportation map.

Returned program states are projected back to exact feasibility, and all
reported optima are re-evaluated at the projected program, so every quoted
value is attained by the returned (feasible) program.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .channels import ChoiMatrix, as_matrix, bures_fidelity, trace_distance_cost
from .hermlin import hermitize, kron, partial_trace, spectral_norm
from .optim import project_to_choi_set, project_to_states
from .processors import ProcessorMap, ProgramState

__all__ = [
    "SdpProblem",
    "SdpSolution",
    "embed_hermitian",
    "unembed_hermitian",
    "hermitian_basis",
    "solve_sdp",
    "trace_norm_via_sdp",
    "diamond_distance",
    "optimize_program_trace",
    "optimize_program_diamond",
    "optimize_program_fidelity",
    "optimize_choi_diamond",
]

DEFAULT_TOL = 1e-8


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]].

    PSD is preserved both ways; the spectrum and trace are doubled.
    """
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed_hermitian(x: np.ndarray) -> np.ndarray:
    """Recover a Hermitian matrix from a (symmetrized) real embedding."""
    n = x.shape[0] // 2
    a = x[:n, :n]
    d = x[n:, n:]
    b = x[:n, n:]
    c = x[n:, :n]
    return hermitize(0.5 * (a + d) + 0.5j * (c - b))


def hermitian_basis(n: int) -> List[np.ndarray]:
    """Orthonormal basis of n x n Hermitian matrices (Tr[B_a B_b] = delta_ab)."""
    out = []
    for k in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[k, k] = 1.0
        out.append(e)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for k in range(n):
        for l in range(k + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[k, l] = inv_sqrt2
            e[l, k] = inv_sqrt2
            out.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[k, l] = 1j * inv_sqrt2
            e[l, k] = -1j * inv_sqrt2
            out.append(e)
    return out


@dataclass
class SdpProblem:
    """Block standard-form SDP: min <C, X>, <A_i, X> = b_i, X >= 0.

    ``objective`` and each constraint hold one real symmetric matrix per
    block (``None`` meaning zero).
    """

    block_dims: List[int]
    objective: List[Optional[np.ndarray]]
    constraints: List[Tuple[List[Optional[np.ndarray]], float]]

    def __post_init__(self):
        for blk, dim in enumerate(self.block_dims):
            if dim < 1:
                raise ValueError(f"SdpProblem: block {blk} has dim {dim}")
        self._check_row(self.objective, "objective")
        for i, (mats, _rhs) in enumerate(self.constraints):
            self._check_row(mats, f"constraint {i}")

    def _check_row(self, mats, who):
        if len(mats) != len(self.block_dims):
            raise ValueError(f"SdpProblem: {who} has {len(mats)} blocks, "
                             f"expected {len(self.block_dims)}")
        for blk, m in enumerate(mats):
            if m is None:
                continue
            d = self.block_dims[blk]
            if m.shape != (d, d):
                raise ValueError(f"SdpProblem: {who}, block {blk}: shape {m.shape}")
            if np.abs(m - m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
                raise ValueError(f"SdpProblem: {who}, block {blk} is not symmetric")

    def dump(self, path: str) -> None:
        """Plain-text sparse dump: one `i block row col value` line per entry.

        Constraint index 0 is the objective; indices 1..m are constraints,
        each terminated by a `rhs` line.  Upper-triangle entries only.
        """
        lines = [f"blocks {' '.join(str(d) for d in self.block_dims)}"]

        def emit(idx, mats):
            for blk, m in enumerate(mats):
                if m is None:
                    continue
                rows, cols = np.nonzero(np.triu(np.abs(m) > 0))
                for r, c in zip(rows, cols):
                    lines.append(f"{idx} {blk} {r} {c} {m[r, c]:.17g}")

        emit(0, self.objective)
        for i, (mats, rhs) in enumerate(self.constraints, start=1):
            emit(i, mats)
            lines.append(f"rhs {i} {rhs:.17g}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class SdpSolution:
    primal_blocks: List[np.ndarray]
    dual_vector: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    status: str  # optimal | max_iter | infeasible
    iterations: int
    residual_primal: float
    residual_dual: float
    # (primal_obj, dual_obj, res_primal, res_dual, mu) per iterate
    history: List[Tuple[float, float, float, float, float]] = field(default_factory=list)


def _sym(m):
    return 0.5 * (m + m.T)


def _inner(mats_a, mats_b) -> float:
    s = 0.0
    for a, b in zip(mats_a, mats_b):
        if a is not None and b is not None:
            s += float(np.sum(a * b))
    return s


class _NumericalBreakdown(Exception):
    """Interior-point linear algebra collapsed (indefinite or non-finite)."""


def _nt_scaling(x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """W with W S W = X for symmetric positive definite X, S."""
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s))):
        raise _NumericalBreakdown("non-finite iterate")
    wx, vx = np.linalg.eigh(_sym(x))
    wx = np.clip(wx, 1e-300, None)
    rx = (vx * np.sqrt(wx)) @ vx.T
    inner = _sym(rx @ s @ rx)
    wi, vi = np.linalg.eigh(inner)
    wi = np.clip(wi, 1e-300, None)
    inner_inv_sqrt = (vi * (wi ** -0.5)) @ vi.T
    return _sym(rx @ inner_inv_sqrt @ rx)


def _chol(x: np.ndarray) -> np.ndarray:
    x = _sym(x)
    if not np.all(np.isfinite(x)):
        raise _NumericalBreakdown("non-finite iterate")
    try:
        return np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-14 * max(1.0, float(np.trace(x)) / x.shape[0])
    for _ in range(4):
        try:
            return np.linalg.cholesky(x + jitter * np.eye(x.shape[0]))
        except np.linalg.LinAlgError:
            jitter *= 1e3
    raise _NumericalBreakdown("cholesky failed")


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """sup { a : x + a dx >= 0 } (may be inf)."""
    if not np.all(np.isfinite(dx)):
        raise _NumericalBreakdown("non-finite direction")
    l = _chol(x)
    t = np.linalg.solve(l, np.linalg.solve(l, dx).T)
    lam_min = float(np.linalg.eigvalsh(_sym(t)).min())
    if lam_min >= 0.0:
        return math.inf
    return -1.0 / lam_min


def solve_sdp(problem: SdpProblem, tol: float = DEFAULT_TOL,
              max_iters: int = 200) -> SdpSolution:
    """Infeasible-start primal-dual interior-point method with NT scaling."""
    dims = problem.block_dims
    nb = len(dims)
    m = len(problem.constraints)
    n_total = sum(dims)
    # internal data scaling: solve with C/sc and b/sb, unscale on exit
    c_scale = max(1.0, *(float(np.abs(c).max()) if c is not None else 0.0
                         for c in problem.objective))
    b_scale = max(1.0, float(max(abs(rhs) for _, rhs in problem.constraints))
                  if m else 1.0)
    cmats = [np.zeros((d, d)) if c is None else np.asarray(c, float) / c_scale
             for c, d in zip(problem.objective, dims)]
    amats = [[np.asarray(a, float) if a is not None else None for a in row]
             for row, _ in problem.constraints]
    bvec = np.array([rhs for _, rhs in problem.constraints], dtype=float) / b_scale

    scale = 1.0
    x = [np.eye(d) * scale for d in dims]
    s = [np.eye(d) * scale for d in dims]
    y = np.zeros(m)

    norm_b = 1.0 + float(np.linalg.norm(bvec))
    norm_c = 1.0 + math.sqrt(sum(float(np.sum(c * c)) for c in cmats))
    tau = 0.98
    history = []
    status = "max_iter"
    it = 0

    def a_of_x(xb):
        return np.array([_inner(row, xb) for row in amats])

    def a_star(vec):
        out = [np.zeros((d, d)) for d in dims]
        for i, row in enumerate(amats):
            vi = vec[i]
            if vi == 0.0:
                continue
            for blk, a in enumerate(row):
                if a is not None:
                    out[blk] += vi * a
        return out

    best = None  # (merit, x, y, s)
    for it in range(1, max_iters + 1):
        rp = bvec - a_of_x(x)
        asy = a_star(y)
        rd = [cmats[b] - asy[b] - s[b] for b in range(nb)]
        mu = sum(float(np.sum(x[b] * s[b])) for b in range(nb)) / n_total
        pobj = _inner(cmats, x)
        dobj = float(bvec @ y)
        res_p = float(np.linalg.norm(rp)) / norm_b
        res_d = math.sqrt(sum(float(np.sum(r * r)) for r in rd)) / norm_c
        gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        history.append((pobj, dobj, res_p, res_d, mu))
        merit = max(res_p, res_d, gap_rel)
        if np.isfinite(merit) and (best is None or merit < best[0]):
            best = (merit, [xb.copy() for xb in x], y.copy(), [sb.copy() for sb in s])
        if res_p <= tol and res_d <= tol and gap_rel <= tol:
            status = "optimal"
            break
        # primal-infeasibility certificate: an improving dual ray with
        # A*(y) + S vanishing relative to ||y||
        y_norm = float(np.linalg.norm(y))
        if dobj > scale and y_norm > 1e3 * scale:
            ray = math.sqrt(
                sum(float(np.sum((asy[b] + s[b]) ** 2)) for b in range(nb))
            ) / y_norm
            if ray <= 1e-6:
                status = "infeasible"
                break
        if not np.isfinite(mu) or mu > 1e150 or y_norm > 1e150:
            status = "infeasible"
            break
        if mu <= 0.0:
            break

        try:
            w = [_nt_scaling(x[b], s[b]) for b in range(nb)]
            s_inv = []
            for b in range(nb):
                ws, vs = np.linalg.eigh(_sym(s[b]))
                ws = np.clip(ws, 1e-300, None)
                s_inv.append((vs / ws) @ vs.T)

            waw = [[_sym(w[b] @ a @ w[b]) if a is not None else None
                    for b, a in enumerate(row)] for row in amats]
            schur = np.empty((m, m))
            for i in range(m):
                for j in range(i, m):
                    schur[i, j] = schur[j, i] = _inner(waw[i], amats[j])
            # small ridge keeps the factorization alive when constraints are
            # nearly dependent
            schur += (1e-13 * max(1.0, float(np.trace(schur)) / max(m, 1))) * np.eye(m)

            try:
                schur_l = np.linalg.cholesky(schur)
            except np.linalg.LinAlgError:
                schur_l = None

            def newton(sigma_mu):
                rhs = np.empty(m)
                base = []
                for b in range(nb):
                    t_b = sigma_mu * s_inv[b] - x[b] - _sym(w[b] @ rd[b] @ w[b])
                    base.append(t_b)
                for i in range(m):
                    rhs[i] = rp[i] - _inner(amats[i], base)
                if schur_l is not None:
                    dy = np.linalg.solve(schur_l.T, np.linalg.solve(schur_l, rhs))
                else:
                    dy = np.linalg.lstsq(schur, rhs, rcond=None)[0]
                if not np.all(np.isfinite(dy)):
                    raise _NumericalBreakdown("non-finite Newton step")
                asdy = a_star(dy)
                ds = [rd[b] - asdy[b] for b in range(nb)]
                dx = [base[b] + _sym(w[b] @ asdy[b] @ w[b]) for b in range(nb)]
                return dx, dy, ds

            # predictor
            dx_a, dy_a, ds_a = newton(0.0)
            ap = min(1.0, tau * min((_max_step(x[b], dx_a[b]) for b in range(nb)),
                                    default=1.0))
            ad = min(1.0, tau * min((_max_step(s[b], ds_a[b]) for b in range(nb)),
                                    default=1.0))
            mu_aff = sum(
                float(np.sum((x[b] + ap * dx_a[b]) * (s[b] + ad * ds_a[b])))
                for b in range(nb)
            ) / n_total
            ratio = min(max(mu_aff, 0.0) / mu, 1.0)
            sigma = max(ratio**3, 1e-8)

            # corrector / centering
            dx, dy, ds = newton(sigma * mu)
            ap = min(1.0, tau * min((_max_step(x[b], dx[b]) for b in range(nb)),
                                    default=1.0))
            ad = min(1.0, tau * min((_max_step(s[b], ds[b]) for b in range(nb)),
                                    default=1.0))
        except _NumericalBreakdown:
            break
        for b in range(nb):
            x[b] = _sym(x[b] + ap * dx[b])
            s[b] = _sym(s[b] + ad * ds[b])
        y = y + ad * dy

    if status != "infeasible" and best is not None:
        _, x, y, s = best
    pobj = _inner(cmats, x)
    dobj = float(bvec @ y)
    rp = bvec - a_of_x(x)
    asy = a_star(y)
    rd = [cmats[b] - asy[b] - s[b] for b in range(nb)]
    res_p = float(np.linalg.norm(rp)) / norm_b
    res_d = math.sqrt(sum(float(np.sum(r * r)) for r in rd)) / norm_c
    gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    if status != "infeasible":
        status = "optimal" if max(res_p, res_d, gap_rel) <= tol else status
    # undo the data scaling: X carries the b scale, (y, S) carry the C scale
    unit = c_scale * b_scale
    return SdpSolution(
        primal_blocks=[xb * b_scale for xb in x],
        dual_vector=y * c_scale,
        primal_objective=pobj * unit,
        dual_objective=dobj * unit,
        gap=abs(pobj - dobj) * unit,
        status=status,
        iterations=it,
        residual_primal=res_p,
        residual_dual=res_d,
        history=[(p * unit, d * unit, a, bb, mu) for p, d, a, bb, mu in history],
    )


# --- builder for complex-variable problems -----------------------------------


class _ComplexSdpBuilder:
    """Assemble a real block SDP out of complex Hermitian variable blocks.

    Every complex inner product <G, H> is represented as <embed(G), X>/2 on
    the embedded side; right-hand sides and scalar coefficients carry the
    factor of two so the solved objective equals the complex one.
    """

    def __init__(self):
        self.block_dims: List[int] = []
        self.embedded: List[bool] = []
        self.objective_rows: Dict[int, np.ndarray] = {}
        self.constraints: List[Tuple[Dict[int, np.ndarray], float]] = []

    def add_complex_block(self, n: int) -> int:
        self.block_dims.append(2 * n)
        self.embedded.append(True)
        return len(self.block_dims) - 1

    def add_real_block(self, n: int) -> int:
        self.block_dims.append(n)
        self.embedded.append(False)
        return len(self.block_dims) - 1

    def objective_complex(self, blk: int, g: np.ndarray) -> None:
        self.objective_rows[blk] = self.objective_rows.get(blk, 0) + 0.5 * embed_hermitian(g)

    def objective_real(self, blk: int, g: np.ndarray) -> None:
        self.objective_rows[blk] = self.objective_rows.get(blk, 0) + np.asarray(g, float)

    def constraint(self, complex_terms: Dict[int, np.ndarray],
                   rhs: float, real_terms: Optional[Dict[int, np.ndarray]] = None) -> None:
        """sum <G_blk, H_blk> + sum <R_blk, X_blk> = rhs (complex-side values)."""
        row: Dict[int, np.ndarray] = {}
        for blk, g in complex_terms.items():
            row[blk] = row.get(blk, 0) + embed_hermitian(g)
        for blk, r in (real_terms or {}).items():
            row[blk] = row.get(blk, 0) + 2.0 * np.asarray(r, float)
        self.constraints.append((row, 2.0 * rhs))

    def build(self) -> SdpProblem:
        nb = len(self.block_dims)

        def expand(row: Dict[int, np.ndarray]):
            return [row.get(b) for b in range(nb)]

        return SdpProblem(
            block_dims=list(self.block_dims),
            objective=expand(self.objective_rows),
            constraints=[(expand(row), rhs) for row, rhs in self.constraints],
        )

    def recover(self, sol: SdpSolution, blk: int) -> np.ndarray:
        x = sol.primal_blocks[blk]
        if self.embedded[blk]:
            return unembed_hermitian(x)
        return x


# --- concrete programs --------------------------------------------------------


def trace_norm_via_sdp(m: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """||M||_1 of a Hermitian matrix through the P/Q split program."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    bld = _ComplexSdpBuilder()
    p_blk = bld.add_complex_block(n)
    q_blk = bld.add_complex_block(n)
    eye = np.eye(n, dtype=complex)
    bld.objective_complex(p_blk, eye)
    bld.objective_complex(q_blk, eye)
    for e in hermitian_basis(n):
        bld.constraint({p_blk: e, q_blk: -e}, float(np.real(np.trace(e.conj().T @ m))))
    sol = solve_sdp(bld.build(), tol=tol)
    _warn_if_failed(sol, "trace_norm_via_sdp", tol)
    return sol.primal_objective


def _warn_if_failed(sol: SdpSolution, who: str, tol: float = DEFAULT_TOL) -> None:
    """Raise on infeasibility; warn when a solve stopped far from tolerance.

    Stalls within ~50x of the target tolerance stay silent: every public
    entry point re-evaluates its objective at a repaired feasible point, so
    the reported value remains a true attained one.
    """
    if sol.status == "infeasible":
        raise RuntimeError(f"{who}: solver reported infeasibility")
    if sol.status != "optimal":
        gap_rel = sol.gap / (1.0 + abs(sol.primal_objective) + abs(sol.dual_objective))
        merit = max(gap_rel, sol.residual_primal, sol.residual_dual)
        if merit > 50.0 * tol:
            warnings.warn(
                f"{who}: interior point stopped at status {sol.status} "
                f"(gap {sol.gap:.3e}, residuals {sol.residual_primal:.3e}/"
                f"{sol.residual_dual:.3e})",
                stacklevel=3,
            )


def _herm_inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.trace(a.conj().T @ b)))


def diamond_distance(chi_omega: np.ndarray, d_in: int, tol: float = DEFAULT_TOL) -> float:
    """Diamond norm of the map whose (normalized) Choi matrix is chi_omega.

    chi_omega should be the Hermitian difference of two Choi matrices
    (ordering: input copy, output); a warning is emitted when it is not
    traceless.  The returned value is certified: the solver's Z block is
    repaired to exact feasibility and the objective re-evaluated, so the
    result is always an attainable upper bound on the true minimum.
    """
    chi = hermitize(np.asarray(chi_omega, dtype=complex))
    n = chi.shape[0]
    if n % d_in:
        raise ValueError(f"diamond_distance: dim {n} not divisible by d_in={d_in}")
    d_out = n // d_in
    if abs(np.trace(chi)) > 1e-8:
        warnings.warn(
            f"diamond_distance: chi has trace {np.trace(chi):.3e}; expected a "
            f"traceless Choi difference",
            stacklevel=2,
        )
    if spectral_norm(chi) < 1e-14:
        return 0.0

    bld = _ComplexSdpBuilder()
    z_blk = bld.add_complex_block(n)
    w_blk = bld.add_complex_block(n)
    v_blk = bld.add_complex_block(d_in)
    t_blk = bld.add_real_block(1)
    bld.objective_real(t_blk, np.array([[2.0]]))
    eye_out = np.eye(d_out, dtype=complex)
    for e in hermitian_basis(n):
        # W = Z - d * chi
        bld.constraint({w_blk: e, z_blk: -e}, -d_in * _herm_inner(e, chi))
    for f in hermitian_basis(d_in):
        # V = t I - Tr_out Z
        bld.constraint(
            {v_blk: f, z_blk: kron(f, eye_out)},
            0.0,
            real_terms={t_blk: np.array([[-float(np.real(np.trace(f)))]])},
        )
    sol = solve_sdp(bld.build(), tol=tol)
    _warn_if_failed(sol, "diamond_distance", tol)
    z = bld.recover(sol, z_blk)
    # repair to exact feasibility: Z >= 0 and Z >= d * chi
    lo1 = float(np.linalg.eigvalsh(z).min())
    lo2 = float(np.linalg.eigvalsh(z - d_in * chi).min())
    shift = max(0.0, -lo1, -lo2)
    z = z + shift * np.eye(n)
    return 2.0 * spectral_norm(partial_trace(z, [d_in, d_out], keep=[0]))


def _lambda_dual_on_basis(proc: ProcessorMap, basis) -> List[np.ndarray]:
    return [hermitize(proc.dual(e)) for e in basis]


def _add_program_constraints(bld: "_ComplexSdpBuilder", pi_blk: int,
                             proc: ProcessorMap) -> None:
    """Feasible-program constraints: unit trace, or the Choi marginal for
    processors whose program domain is the single-port Choi set."""
    dp = proc.d_prog
    if proc.program_domain == "choi":
        d = proc.d_in
        eye_d = np.eye(d, dtype=complex)
        for f in hermitian_basis(d):
            # Tr_out pi = I/d (includes unit trace)
            bld.constraint({pi_blk: kron(f, eye_d)},
                           float(np.real(np.trace(f))) / d)
    else:
        bld.constraint({pi_blk: np.eye(dp, dtype=complex)}, 1.0)


def _recover_program(bld: "_ComplexSdpBuilder", sol: SdpSolution, pi_blk: int,
                     proc: ProcessorMap) -> ProgramState:
    raw = bld.recover(sol, pi_blk)
    if proc.program_domain == "choi":
        chi = project_to_choi_set(raw, proc.d_in)
        return ProgramState(chi.state, structure="choi-power")
    return ProgramState(project_to_states(raw))


def optimize_program_trace(proc: ProcessorMap, chi_target,
                           tol: float = DEFAULT_TOL) -> Tuple[ProgramState, float]:
    """Joint minimization of the trace cost over program states.

    Returns the optimizing program (projected to exact feasibility) and the
    trace cost re-evaluated at it.
    """
    chi_e = hermitize(as_matrix(chi_target))
    n = proc.d_choi
    dp = proc.d_prog
    basis = hermitian_basis(n)
    duals = _lambda_dual_on_basis(proc, basis)

    bld = _ComplexSdpBuilder()
    p_blk = bld.add_complex_block(n)
    q_blk = bld.add_complex_block(n)
    pi_blk = bld.add_complex_block(dp)
    eye = np.eye(n, dtype=complex)
    bld.objective_complex(p_blk, eye)
    bld.objective_complex(q_blk, eye)
    for e, le in zip(basis, duals):
        # P - Q + Lambda(pi) = chi_target   (as <E_a, .> coordinates)
        bld.constraint({p_blk: e, q_blk: -e, pi_blk: le}, _herm_inner(e, chi_e))
    _add_program_constraints(bld, pi_blk, proc)
    sol = solve_sdp(bld.build(), tol=tol)
    _warn_if_failed(sol, "optimize_program_trace", tol)
    program = _recover_program(bld, sol, pi_blk, proc)
    value = trace_distance_cost(chi_e, proc.apply_matrix(program.matrix))
    return program, value


def _diamond_program_builder(proc: ProcessorMap, chi_e: np.ndarray):
    n = proc.d_choi
    d_in = proc.d_in
    d_out = proc.d_out
    dp = proc.d_prog
    basis = hermitian_basis(n)
    duals = _lambda_dual_on_basis(proc, basis)

    bld = _ComplexSdpBuilder()
    z_blk = bld.add_complex_block(n)
    w_blk = bld.add_complex_block(n)
    v_blk = bld.add_complex_block(d_in)
    t_blk = bld.add_real_block(1)
    pi_blk = bld.add_complex_block(dp)
    bld.objective_real(t_blk, np.array([[2.0]]))
    eye_out = np.eye(d_out, dtype=complex)
    for e, le in zip(basis, duals):
        # W = Z - d (chi_target - Lambda(pi))
        bld.constraint(
            {w_blk: e, z_blk: -e, pi_blk: -d_in * le},
            -d_in * _herm_inner(e, chi_e),
        )
    for f in hermitian_basis(d_in):
        bld.constraint(
            {v_blk: f, z_blk: kron(f, eye_out)},
            0.0,
            real_terms={t_blk: np.array([[-float(np.real(np.trace(f)))]])},
        )
    return bld, pi_blk


def optimize_program_diamond(proc: ProcessorMap, chi_target,
                             tol: float = DEFAULT_TOL) -> Tuple[ProgramState, float]:
    """Joint minimization of the diamond cost over program states."""
    chi_e = hermitize(as_matrix(chi_target))
    bld, pi_blk = _diamond_program_builder(proc, chi_e)
    _add_program_constraints(bld, pi_blk, proc)
    sol = solve_sdp(bld.build(), tol=tol)
    _warn_if_failed(sol, "optimize_program_diamond", tol)
    program = _recover_program(bld, sol, pi_blk, proc)
    value = diamond_distance(chi_e - proc.apply_matrix(program.matrix), proc.d_in, tol=tol)
    return program, value


def optimize_program_fidelity(proc: ProcessorMap, chi_target,
                              tol: float = DEFAULT_TOL) -> Tuple[ProgramState, float]:
    """Joint maximization of the Bures fidelity over program states.

    Uses max Re Tr[V X] over [[D, X], [X^dag, Lambda(pi)]] >= 0, where
    chi_target = V D V^dag restricted to its support.  Working on the
    support keeps the feasible set strictly solvable even for pure
    (unitary) targets, where the unrestricted block could never be
    positive definite.
    """
    chi_e = hermitize(as_matrix(chi_target))
    n = proc.d_choi
    vals, vecs = np.linalg.eigh(chi_e)
    support = vals > 1e-12 * float(vals.max())
    d_supp = np.diag(vals[support]).astype(complex)
    v_supp = vecs[:, support]
    r = d_supp.shape[0]

    basis = hermitian_basis(n)
    duals = _lambda_dual_on_basis(proc, basis)
    bld = _ComplexSdpBuilder()
    g_blk = bld.add_complex_block(r + n)
    pi_blk = bld.add_complex_block(proc.d_prog)
    # objective corner: Re Tr[V X] for the (r x n) off-diagonal slot X
    obj = np.zeros((r + n, r + n), dtype=complex)
    obj[:r, r:] = 0.5 * v_supp.conj().T
    obj[r:, :r] = 0.5 * v_supp
    bld.objective_complex(g_blk, -obj)
    for e in hermitian_basis(r):
        top = np.zeros((r + n, r + n), dtype=complex)
        top[:r, :r] = e
        bld.constraint({g_blk: top}, _herm_inner(e, d_supp))
    for e, le in zip(basis, duals):
        bot = np.zeros((r + n, r + n), dtype=complex)
        bot[r:, r:] = e
        bld.constraint({g_blk: bot, pi_blk: -le}, 0.0)
    _add_program_constraints(bld, pi_blk, proc)
    sol = solve_sdp(bld.build(), tol=tol)
    _warn_if_failed(sol, "optimize_program_fidelity", tol)
    program = _recover_program(bld, sol, pi_blk, proc)
    value = bures_fidelity(chi_e, proc.apply_matrix(program.matrix))
    return program, value


def optimize_choi_diamond(n_ports: int, d: int, chi_target,
                          tol: float = DEFAULT_TOL) -> Tuple[ChoiMatrix, float]:
    """Diamond-optimal single-port Choi program of the reduced PBT map."""
    from .processors import pbt_reduced_map

    proc = pbt_reduced_map(n_ports, d)
    program, value = optimize_program_diamond(proc, chi_target, tol=tol)
    return ChoiMatrix(program.state, d, d), value
