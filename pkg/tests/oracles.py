"""Independent oracles used by the test suite.

Everything here deliberately avoids the code paths it is used to check:
the PBT oracle builds full-space operators with explicit embeddings, the
SDP baseline is a first-order splitting method, and the diamond oracle
maximizes over entangled pure inputs directly.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from qprogopt.channels import max_entangled
from qprogopt.hermlin import embed_operator, kron, partial_trace, permute_subsystems


def pbt_apply_dense(n_ports: int, d: int, povm, pi: np.ndarray) -> np.ndarray:
    """Direct dense evaluation of the PBT program-to-Choi map.

    Builds every operator on the full (A_1, B_1, ..., A_N, B_N, C, D) space.
    """
    dims = [d] * (2 * n_ports) + [d, d]
    a_pos = [2 * i for i in range(n_ports)]
    b_pos = [2 * i + 1 for i in range(n_ports)]
    c_pos, d_pos = 2 * n_ports, 2 * n_ports + 1
    phi_dc = max_entangled(d).matrix  # ordered (D, C)
    full = kron(pi, phi_dc)  # current ordering: program wires, D, C
    cur = list(range(2 * n_ports)) + [d_pos, c_pos]
    perm = [cur.index(i) for i in range(2 * n_ports + 2)]
    full = permute_subsystems(full, [d] * (2 * n_ports) + [d, d], perm)
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(n_ports):
        big = embed_operator(povm[i], dims, targets=a_pos + [c_pos])
        red = partial_trace(big @ full, dims, keep=[b_pos[i], d_pos])  # (B_i, D)
        out += permute_subsystems(red, [d, d], [1, 0])  # reorder to (D, B_out)
    return out


# --- first-order SDP baseline -------------------------------------------------


def admm_baseline(problem, rho: float = 1.0, iters: int = 20000, tol: float = 1e-10):
    """First-order splitting baseline for block SDPs.

    Alternates a least-squares projection onto the affine constraints with a
    projection onto the PSD cone, plus a scaled dual update.  Returns the
    objective value at the PSD iterate.
    """
    dims = problem.block_dims
    sizes = [dim * dim for dim in dims]
    offsets = np.cumsum([0] + sizes)

    def flatten(mats):
        return np.concatenate(
            [
                (m if m is not None else np.zeros((dim, dim))).ravel()
                for m, dim in zip(mats, dims)
            ]
        )

    def unflatten(vec):
        return [
            vec[offsets[i] : offsets[i + 1]].reshape(dims[i], dims[i])
            for i in range(len(dims))
        ]

    cvec = flatten(problem.objective)
    amat = np.stack([flatten(mats) for mats, _ in problem.constraints])
    bvec = np.array([rhs for _, rhs in problem.constraints])
    gram = amat @ amat.T
    gram_inv = np.linalg.pinv(gram)

    def proj_affine(vec):
        return vec - amat.T @ (gram_inv @ (amat @ vec - bvec))

    def proj_psd(vec):
        out = []
        for m in unflatten(vec):
            m = 0.5 * (m + m.T)
            w, v = np.linalg.eigh(m)
            out.append((v * np.clip(w, 0.0, None)) @ v.T)
        return np.concatenate([m.ravel() for m in out])

    x = proj_affine(np.zeros_like(cvec))
    z = proj_psd(x)
    u = np.zeros_like(x)
    for _ in range(iters):
        x = proj_affine(z - u - cvec / rho)
        z_new = proj_psd(x + u)
        r = np.linalg.norm(x - z_new)
        s = rho * np.linalg.norm(z_new - z)
        z = z_new
        u = u + x - z
        if r < tol and s < tol:
            break
    return float(cvec @ z)


def random_sdp(rng: np.random.Generator, block_dims=(4, 3), m: int = 5):
    """Strictly feasible random block SDP with bounded solutions."""
    from qprogopt.sdp import SdpProblem

    def rand_sym(dim):
        g = rng.normal(size=(dim, dim))
        return 0.5 * (g + g.T)

    def rand_pd(dim):
        g = rng.normal(size=(dim, dim))
        return g @ g.T + 0.1 * np.eye(dim)

    amats = [[rand_sym(dim) for dim in block_dims] for _ in range(m)]
    # keep the feasible set bounded: one constraint fixes the total trace
    amats.append([np.eye(dim) for dim in block_dims])
    x0 = [rand_pd(dim) for dim in block_dims]
    bvec = [sum(float(np.sum(a * x)) for a, x in zip(row, x0)) for row in amats]
    y0 = rng.normal(size=m + 1)
    cmats = []
    for blk, dim in enumerate(block_dims):
        s_blk = rand_pd(dim)
        cmats.append(s_blk + sum(y0[i] * amats[i][blk] for i in range(m + 1)))
    return SdpProblem(
        block_dims=list(block_dims),
        objective=cmats,
        constraints=[(row, rhs) for row, rhs in zip(amats, bvec)],
    )


# --- diamond-norm oracle --------------------------------------------------------


def _omega_apply(chi_omega: np.ndarray, d: int, rho: np.ndarray) -> np.ndarray:
    """Action of the Hermiticity-preserving map with Choi chi_omega."""
    big = np.kron(rho.T, np.eye(d)) @ chi_omega
    return d * partial_trace(big, [d, d], keep=[1])


def diamond_grid_oracle(chi_omega: np.ndarray, coarse: int = 7, polish: bool = True) -> float:
    """max over entangled pure inputs of || (I (x) Omega)(phi) ||_1, qubits.

    Up to a local unitary on the reference side (which leaves the trace norm
    invariant) the input is |phi> = sqrt(t)|0>|f0> + sqrt(1-t)|1>|f1> with
    {f0, f1} an orthonormal frame; the frame is swept over SU(2) Euler
    angles and t over [0, 1], then the best grid point is polished with a
    derivative-free simplex search.
    """
    d = 2
    blocks = [[_omega_apply(chi_omega, d, np.outer(_e(j), _e(l).conj()))
               for l in range(d)] for j in range(d)]

    def value(params):
        t, alpha, beta, gamma = params
        t = min(max(t, 0.0), 1.0)
        frame = _euler_unitary(alpha, beta, gamma)
        amps = [math.sqrt(t), math.sqrt(1.0 - t)]
        out = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for k in range(d):
                coeff = amps[i] * amps[k]
                if coeff == 0.0:
                    continue
                # reference dyad |i><k| tensor Omega(|f_i><f_k|)
                fik = np.outer(frame[:, i], frame[:, k].conj())
                om = sum(
                    fik[j, l] * blocks[j][l] for j in range(d) for l in range(d)
                )
                out[i * d : (i + 1) * d, k * d : (k + 1) * d] += coeff * om
        vals = np.linalg.eigvalsh(0.5 * (out + out.conj().T))
        return float(np.abs(vals).sum())

    best, best_params = -1.0, None
    ts = np.linspace(0.0, 1.0, coarse)
    angles = np.linspace(0.0, math.pi, coarse)
    for t, a, b, g in itertools.product(ts, angles, angles, angles):
        v = value((t, a, b, g))
        if v > best:
            best, best_params = v, (t, a, b, g)
    if polish:
        from scipy.optimize import minimize

        res = minimize(lambda p: -value(p), np.asarray(best_params),
                       method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


def _e(j: int, d: int = 2) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[j] = 1.0
    return v


def _euler_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    rz1 = np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)])
    ry = np.array(
        [
            [math.cos(beta / 2), -math.sin(beta / 2)],
            [math.sin(beta / 2), math.cos(beta / 2)],
        ],
        dtype=complex,
    )
    rz2 = np.diag([np.exp(-0.5j * gamma), np.exp(0.5j * gamma)])
    return rz1 @ ry @ rz2


# --- simplex projection oracle ---------------------------------------------------


def simplex_grid_project(x: np.ndarray, step: float = 2e-3) -> np.ndarray:
    """Brute-force Euclidean projection onto the simplex by fine-grid search."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 2:
        grid = np.arange(0.0, 1.0 + step, step)
        pts = np.stack([grid, 1.0 - grid], axis=1)
    elif n == 3:
        grid = np.arange(0.0, 1.0 + step, step)
        pts = []
        for a in grid:
            bs = np.arange(0.0, 1.0 - a + step, step)
            for b in bs:
                pts.append((a, b, 1.0 - a - b))
        pts = np.asarray(pts)
    else:
        raise ValueError("oracle supports dimensions 2 and 3 only")
    dists = np.sum((pts - x) ** 2, axis=1)
    return pts[np.argmin(dists)]
