"""Command-line front end.

Subcommands
-----------
optimize    run one optimization from a JSON config; print result rows and
            optionally save the optimized program state
benchmark   sweep a channel-parameter and/or port-count grid, write a CSV
verify      run the built-in invariant suite (levels: fast, full)
channels    list the channel zoo
processors  list processor kinds and their size caps

Exit codes: 0 ok, 1 validation error, 2 numerical failure, 3 verify failure.

The config file is a single JSON document; matrices are given as nested
[re, im] pairs.  CSV cells use 12 significant digits and rows follow grid
order, so identical config + seed reproduces byte-identical files.  (Wall
times are streamed to stdout only; they are excluded from the CSV to keep
it deterministic.)
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import channels as ch
from . import optim, processors, sdp
from .channels import cost_eval
from .processors import CapacityError, ProcessorMap

CSV_HEADER = "param,method,N,cost_kind,cost,iterations"

CHANNEL_KINDS = {
    "amplitude_damping": "p",
    "depolarizing": "p",
    "dephasing": "p",
    "pauli": "probs",
    "rotation": "theta",
    "unitary": "matrix",
}

PROCESSOR_KINDS = ("teleportation", "pbt", "pbt_reduced", "pqc", "mpqc")
METHODS = (
    "subgradient",
    "frank_wolfe",
    "sdp_diamond",
    "sdp_trace",
    "sdp_fidelity",
    "choi_sdp",
    "closed_form_unitary",
    "choi_baseline",
)


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_complex_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix entries must be nested [re, im] pairs: {exc}")
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError(f"matrix must have shape (n, n, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _build_processor(spec: dict, n_override: Optional[int] = None) -> ProcessorMap:
    kind = spec.get("kind")
    if kind not in PROCESSOR_KINDS:
        raise ConfigError(f"processor.kind {kind!r} not one of {PROCESSOR_KINDS}")
    d = int(spec.get("d", 2))
    n = int(n_override if n_override is not None else spec.get("N", 1))
    if kind == "teleportation":
        return processors.teleportation_processor(d)
    if kind == "pbt":
        return processors.pbt_processor(n, d)
    if kind == "pbt_reduced":
        return processors.pbt_reduced_map(n, d)
    h0 = _parse_complex_matrix(spec["H0"]) if "H0" in spec else None
    h1 = _parse_complex_matrix(spec["H1"]) if "H1" in spec else None
    if kind == "pqc":
        return processors.pqc_processor(n, h0, h1)
    return processors.mpqc_processor(n, h0, h1)


def _build_channel(spec: dict, value: Optional[float] = None) -> ch.KrausChannel:
    kind = spec.get("kind")
    if kind not in CHANNEL_KINDS:
        raise ConfigError(f"channel.kind {kind!r} not one of {sorted(CHANNEL_KINDS)}")
    if kind == "amplitude_damping":
        return ch.amplitude_damping(float(value if value is not None else spec["p"]))
    if kind == "depolarizing":
        return ch.depolarizing(float(value if value is not None else spec["p"]),
                               int(spec.get("d", 2)))
    if kind == "dephasing":
        return ch.dephasing(float(value if value is not None else spec["p"]))
    if kind == "rotation":
        return ch.rotation(float(value if value is not None else spec["theta"]))
    if kind == "pauli":
        return ch.pauli_channel(spec["probs"])
    return ch.unitary_channel(_parse_complex_matrix(spec["matrix"]))


def _channel_param(spec: dict, value: Optional[float]) -> float:
    if value is not None:
        return float(value)
    for key in ("p", "theta"):
        if key in spec:
            return float(spec[key])
    return math.nan


def _optim_config(cfg: dict, cost: str, mu: float, seed) -> optim.OptimConfig:
    oc = cfg.get("optimizer", {})
    lr = oc.get("learning_rate", {})
    if oc.get("init") == "random" and seed is None:
        raise ConfigError("optimizer.init 'random' is stochastic: a seed is mandatory")
    seed = 0 if seed is None else int(seed)
    return optim.OptimConfig(
        max_iters=int(oc.get("max_iters", 200)),
        learning_rate=optim.LearningRate(
            kind=lr.get("kind", "inv_sqrt"),
            a=float(lr.get("a", 1.0)),
            b=float(lr.get("b", 0.0)),
        ),
        tolerance=float(oc.get("tolerance", 1e-9)),
        cost_kind=cost,
        mu=mu,
        seed=seed,
        init=oc.get("init", "maximally_mixed"),
    )


def _choi_program(proc: ProcessorMap, chi_e: np.ndarray) -> np.ndarray:
    label = proc.label
    if label.startswith("teleportation") or proc.program_domain == "choi":
        return chi_e
    if label.startswith("pbt["):
        n = proc.d_prog
        out = chi_e
        while out.shape[0] < n:
            out = np.kron(out, chi_e)
        if out.shape[0] != n:
            raise ConfigError("choi_baseline: program dimension mismatch")
        return out
    raise ConfigError(f"choi_baseline is not defined for processor {label!r}")


@dataclass
class ResultRow:
    param: float
    method: str
    n_ports: int
    cost_kind: str
    cost: float
    iterations: int
    wall_time: float

    def csv(self) -> str:
        return ",".join(
            [
                _fmt(self.param),
                self.method,
                str(self.n_ports),
                self.cost_kind,
                _fmt(self.cost),
                str(self.iterations),
            ]
        )


def _run_point(cfg: dict, method: str, proc: ProcessorMap, n_ports: int,
               channel_spec: dict, value: Optional[float], tol: float,
               seed: Optional[int]) -> ResultRow:
    t0 = time.perf_counter()
    channel = _build_channel(channel_spec, value)
    chi_e = ch.choi_of_channel(channel).matrix
    cost_kind = cfg.get("cost", "C1")
    mu = float(cfg.get("mu", 1e-2))
    param = _channel_param(channel_spec, value)

    if method in ("subgradient", "frank_wolfe"):
        if cost_kind not in optim.GRAD_COST_KINDS:
            raise ConfigError(
                f"{method}: cost {cost_kind!r} not among {optim.GRAD_COST_KINDS}"
            )
        if method == "frank_wolfe" and cost_kind == "C1":
            print(
                "warning: frank_wolfe with the non-smooth C1 cost may stall; "
                "consider cost 'Cmu'",
                file=sys.stderr,
            )
        ocfg = _optim_config(cfg, cost_kind, mu, seed)
        runner = optim.projected_subgradient if method == "subgradient" else optim.frank_wolfe
        res = runner(proc, chi_e, ocfg)
        row = ResultRow(param, method, n_ports, cost_kind, res.final_cost,
                        res.cost_trace[-1][0], time.perf_counter() - t0)
        row.program = res.program.matrix  # type: ignore[attr-defined]
        return row
    if method == "sdp_trace":
        prog, val = sdp.optimize_program_trace(proc, chi_e, tol=tol)
        row = ResultRow(param, method, n_ports, "C1", val, 0, time.perf_counter() - t0)
        row.program = prog.matrix  # type: ignore[attr-defined]
        return row
    if method == "sdp_diamond":
        prog, val = sdp.optimize_program_diamond(proc, chi_e, tol=tol)
        row = ResultRow(param, method, n_ports, "Cdiamond", val, 0, time.perf_counter() - t0)
        row.program = prog.matrix  # type: ignore[attr-defined]
        return row
    if method == "sdp_fidelity":
        prog, val = sdp.optimize_program_fidelity(proc, chi_e, tol=tol)
        row = ResultRow(param, method, n_ports, "F", val, 0, time.perf_counter() - t0)
        row.program = prog.matrix  # type: ignore[attr-defined]
        return row
    if method == "choi_sdp":
        if proc.program_domain != "choi":
            raise ConfigError("choi_sdp requires the pbt_reduced processor")
        chi, val = sdp.optimize_choi_diamond(n_ports, proc.d_in, chi_e, tol=tol)
        row = ResultRow(param, method, n_ports, "Cdiamond", val, 0, time.perf_counter() - t0)
        row.program = chi.matrix  # type: ignore[attr-defined]
        return row
    if method == "closed_form_unitary":
        if len(channel.kraus_ops) != 1:
            raise ConfigError("closed_form_unitary needs a unitary target channel")
        prog = optim.learn_unitary_program(proc, channel.kraus_ops[0])
        val = cost_eval("CF", chi_e, proc.apply_matrix(prog.matrix))
        row = ResultRow(param, method, n_ports, "CF", val, 0, time.perf_counter() - t0)
        row.program = prog.matrix  # type: ignore[attr-defined]
        return row
    if method == "choi_baseline":
        prog = _choi_program(proc, chi_e)
        if cost_kind == "Cdiamond":
            val = sdp.diamond_distance(chi_e - proc.apply_matrix(prog), proc.d_in, tol=tol)
        else:
            val = cost_eval(cost_kind, chi_e, proc.apply_matrix(prog), mu=mu)
        row = ResultRow(param, method, n_ports, cost_kind, val, 0, time.perf_counter() - t0)
        row.program = prog  # type: ignore[attr-defined]
        return row
    raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")


def _save_program(path: str, matrix: np.ndarray, structure: str, cfg: dict) -> None:
    digest = hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:16]
    header = (
        f"dims: {matrix.shape[0]} {matrix.shape[1]}\n"
        f"structure: {structure}\n"
        f"config-hash: {digest}"
    )
    np.savetxt(path, matrix, header=header)


def load_program(path: str) -> np.ndarray:
    return np.loadtxt(path, dtype=complex)


def _load_config(path: Optional[str]) -> dict:
    if not path:
        raise ConfigError("--config PATH is required for this subcommand")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON (line {exc.lineno}): {exc.msg}")


def _grid(cfg: dict) -> tuple:
    channel_spec = cfg.get("channel")
    if not channel_spec:
        raise ConfigError("config needs a 'channel' section")
    values = channel_spec.get("values")
    if values is not None and len(values) == 0:
        raise ConfigError("channel.values grid is empty")
    n_list = cfg.get("processor", {}).get("N", 1)
    if isinstance(n_list, list):
        if not n_list:
            raise ConfigError("processor.N grid is empty")
    else:
        n_list = [n_list]
    return values, [int(n) for n in n_list]


def cmd_optimize(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    method = cfg.get("method")
    if method not in METHODS:
        raise ConfigError(f"config.method {method!r} not one of {METHODS}")
    proc = _build_processor(cfg.get("processor", {}))
    n_ports = int(cfg.get("processor", {}).get("N", 1))
    row = _run_point(cfg, method, proc, n_ports, cfg["channel"], None,
                     args.tol, seed)
    print(CSV_HEADER + ",wall_time_s")
    print(row.csv() + "," + _fmt(row.wall_time))
    out = args.out or cfg.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(CSV_HEADER + "\n" + row.csv() + "\n")
    gp = args.gnuplot or cfg.get("gnuplot_out")
    if gp:
        _write_gnuplot(gp, [row])
    save_path = cfg.get("save_program")
    if save_path:
        structure = "choi-power" if proc.program_domain == "choi" else "generic"
        _save_program(save_path, row.program, structure, cfg)
    return 0


def cmd_benchmark(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    methods = cfg.get("methods") or ([cfg["method"]] if "method" in cfg else None)
    if not methods:
        raise ConfigError("benchmark config needs 'methods' (or 'method')")
    for mth in methods:
        if mth not in METHODS:
            raise ConfigError(f"unknown method {mth!r}")
    values, n_list = _grid(cfg)
    points = []
    for n in n_list:
        for v in values if values is not None else [None]:
            for mth in methods:
                points.append((n, v, mth))

    procs = {n: _build_processor(cfg.get("processor", {}), n_override=n) for n in n_list}

    def work(point):
        n, v, mth = point
        try:
            return _run_point(cfg, mth, procs[n], n, cfg["channel"], v, args.tol, seed)
        except (ConfigError, CapacityError):
            raise
        except Exception as exc:  # recorded per-row, run continues
            return exc

    jobs = max(1, int(args.jobs))
    rows: List[object]
    if jobs == 1:
        rows = [work(pt) for pt in points]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(work, points))

    lines = [CSV_HEADER]
    ok_rows = []
    failures = 0
    for pt, row in zip(points, rows):
        if isinstance(row, Exception):
            failures += 1
            print(f"point {pt}: failed: {row}", file=sys.stderr)
            continue
        lines.append(row.csv())
        ok_rows.append(row)
        print(row.csv() + f",{_fmt(row.wall_time)}")
    out = args.out or cfg.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    gp = args.gnuplot or cfg.get("gnuplot_out")
    if gp:
        _write_gnuplot(gp, ok_rows)
    return 2 if failures else 0


def _write_gnuplot(path: str, rows: List[ResultRow]) -> None:
    """Two-column (param, cost) export, one blank-line-separated block per
    (method, N) curve, directly plottable with gnuplot's index syntax."""
    blocks: dict = {}
    for row in rows:
        blocks.setdefault((row.method, row.n_ports, row.cost_kind), []).append(row)
    chunks = []
    for (method, n, kind), rws in blocks.items():
        body = "\n".join(f"{_fmt(r.param)} {_fmt(r.cost)}" for r in rws)
        chunks.append(f"# {method} N={n} cost={kind}\n{body}")
    with open(path, "w") as fh:
        fh.write("\n\n".join(chunks) + "\n")


def cmd_channels(_args) -> int:
    for kind, param in sorted(CHANNEL_KINDS.items()):
        print(f"{kind:20s} parameter: {param}")
    return 0


def cmd_processors(_args) -> int:
    caps = {
        "teleportation": "any d >= 2",
        "pbt": f"program dim d^(2N) <= {processors.PBT_FULL_MAX_PROG_DIM}",
        "pbt_reduced": f"N <= {processors.PBT_REDUCED_MAX_PORTS}",
        "pqc": f"N <= {processors.PQC_MAX_GATES}",
        "mpqc": f"N <= {processors.MPQC_MAX_GATES}",
    }
    for kind in PROCESSOR_KINDS:
        print(f"{kind:15s} {caps[kind]}")
    return 0


# --- verify -------------------------------------------------------------------


def _verify_checks(level: str):
    """Yield (name, residual, tolerance) verification triples."""
    from . import rand as qr
    from .optim import (
        OptimConfig,
        frank_wolfe,
        grad_smoothed_cost,
        grad_trace_cost,
        project_to_states,
        simulation_cost,
    )

    from .hermlin import herm_eig, partial_trace as pt

    rng = np.random.default_rng(20240)

    h = qr.random_hermitian(64, rng)
    dec = herm_eig(h)
    yield ("herm_eig reconstruction (64)",
           float(np.abs(dec.reconstruct() - h).max()) / (1 + np.linalg.norm(h)), 1e-10)

    m = qr.random_hermitian(12, rng)
    yield ("partial trace preserves trace",
           abs(np.trace(pt(m, [3, 4], [0])) - np.trace(m)), 1e-10)

    from .hermlin import norms as _norms
    nm = _norms(qr.random_hermitian(16, rng))
    yield ("Schatten chain inf<=2<=1",
           max(0.0, nm.spectral_norm - nm.frobenius_norm,
               nm.frobenius_norm - nm.trace_norm), 0.0)

    for kind in ("amplitude_damping", "depolarizing", "dephasing"):
        channel = _build_channel({"kind": kind, "p": 0.35})
        chi = ch.choi_of_channel(channel)
        marg = pt(chi.matrix, [2, 2], [0])
        yield (f"choi marginal {kind}", float(np.abs(marg - np.eye(2) / 2).max()), 1e-9)

    a = qr.random_choi(2, rng).matrix
    b = qr.random_choi(2, rng).matrix
    c1 = cost_eval("C1", a, b)
    yield ("identical-input costs vanish", cost_eval("C1", a, a) + cost_eval("CF", a, a), 1e-9)
    yield ("Fuchs-van de Graaf C1 <= 2 sqrt(CF)",
           max(0.0, c1 - 2 * math.sqrt(cost_eval("CF", a, b))), 1e-9)
    cmu = cost_eval("Cmu", a, b, mu=1e-2)
    yield ("Huber sandwich", max(0.0, cmu - c1, c1 - cmu - 1e-2 * 4 / 2), 1e-9)

    tele = processors.teleportation_processor(2)
    x = qr.random_hermitian(4, rng)
    forward = np.einsum("kij,jl,kml->im", tele.kraus, x, tele.kraus.conj())
    yield ("teleportation self-dual", float(np.abs(forward - tele.dual(x)).max()), 1e-10)
    pi = qr.random_density(4, rng).matrix
    xx = qr.random_hermitian(4, rng)
    lhs = np.trace(xx @ tele.apply_matrix(pi)).real
    rhs = np.trace(tele.dual(xx) @ pi).real
    yield ("adjoint identity", abs(lhs - rhs), 1e-10)

    proc = processors.pqc_processor(1, h0=processors.amplitude_damping_hamiltonian(0.5))
    prog = np.zeros((4, 4), dtype=complex)
    prog[0, 0] = 1.0
    chi_ad = ch.choi_of_channel(ch.amplitude_damping(0.5)).matrix
    yield ("pqc amplitude-damping point",
           cost_eval("C1", chi_ad, proc.apply_matrix(prog)), 1e-10)

    chi_e = qr.random_choi(2, rng).matrix
    pi = 0.5 * qr.random_density(4, rng).matrix + 0.5 * np.eye(4) / 4
    for kind, tol in (("C1", 1e-4), ("Cmu", 1e-6)):
        g = (grad_trace_cost(tele, chi_e, pi) if kind == "C1"
             else grad_smoothed_cost(tele, chi_e, pi, 1e-2))
        direction = qr.random_traceless_direction(4, rng)
        eps = 1e-5
        fd = (simulation_cost(tele, chi_e, pi + eps * direction, kind, 1e-2)
              - simulation_cost(tele, chi_e, pi - eps * direction, kind, 1e-2)) / (2 * eps)
        an = float(np.real(np.trace(g @ direction)))
        yield (f"gradient fd ({kind})", abs(fd - an) / max(1e-12, abs(fd)), tol)

    proj = project_to_states(np.diag([0.9, 0.6, -0.1]).astype(complex))
    yield ("simplex-spectrum projection",
           float(np.abs(np.diag(proj.matrix).real - [0.65, 0.35, 0.0]).max()), 1e-12)

    prob = sdp.SdpProblem(
        block_dims=[2], objective=[np.eye(2)],
        constraints=[([np.diag([1.0, 0.0])], 1.0), ([np.diag([0.0, 1.0])], 1.0)],
    )
    sol = sdp.solve_sdp(prob)
    yield ("small SDP objective", abs(sol.primal_objective - 2.0), 1e-6)
    yield ("trace-norm SDP", abs(sdp.trace_norm_via_sdp(np.diag([1.0, -2.0]).astype(complex)) - 3.0), 1e-6)

    chi_i = ch.choi_of_channel(ch.rotation(0.0)).matrix
    chi_d = ch.choi_of_channel(ch.depolarizing(0.3)).matrix
    yield ("diamond vs closed form (depolarizing)",
           abs(sdp.diamond_distance(chi_i - chi_d, 2) - 0.45), 1e-6)

    if level == "full":
        for n in (2, 3):
            full = processors.pbt_processor(n, 2)
            red = processors.pbt_reduced_map(n, 2)
            chi = qr.random_choi(2, rng).matrix
            prog = chi.copy()
            for _ in range(n - 1):
                prog = np.kron(prog, chi)
            yield (f"pbt reduced == full (N={n})",
                   float(np.abs(full.apply_matrix(prog) - red.apply_matrix(chi)).max()), 1e-8)

        phi = ch.max_entangled(2).matrix
        prev = math.inf
        for n in range(2, 7):
            red = processors.pbt_reduced_map(n, 2)
            err = sdp.diamond_distance(phi - red.apply_matrix(phi), 2)
            yield (f"pbt identity error bound (N={n})", max(0.0, err - 4.0 / n, err - prev), 1e-6)
            prev = err

        chi_a = ch.choi_of_channel(ch.amplitude_damping(0.5)).matrix
        pbt2 = processors.pbt_processor(2, 2)
        _, v1 = sdp.optimize_program_trace(pbt2, chi_a)
        _, vd = sdp.optimize_program_diamond(pbt2, chi_a)
        base = cost_eval("C1", chi_a, pbt2.apply_matrix(np.kron(chi_a, chi_a)))
        yield ("optimized C1 <= choi-program C1", max(0.0, v1 - base), 1e-8)
        yield ("sandwich C1 <= Cdiamond <= 2 C1",
               max(0.0, v1 - vd - 1e-6, vd - 2 * v1 - 1e-6), 0.0)

        res = frank_wolfe(tele, ch.choi_of_channel(ch.rotation(0.3)).matrix,
                          OptimConfig(max_iters=60, cost_kind="CF"))
        yield ("frank-wolfe runs (CF)", 0.0 if res.final_cost >= 0 else 1.0, 0.5)


def cmd_verify(args) -> int:
    level = args.level
    if level not in ("fast", "full"):
        raise ConfigError(f"unknown verify level {level!r} (use fast or full)")
    failures = 0
    t0 = time.perf_counter()
    for name, residual, tol in _verify_checks(level):
        ok = residual <= tol
        failures += 0 if ok else 1
        print(f"[{'pass' if ok else 'FAIL'}] {name:45s} residual={residual:.3e} tol={tol:.1e}")
    print(f"verify {level}: {'all passed' if not failures else f'{failures} failures'} "
          f"in {time.perf_counter() - t0:.1f}s")
    return 3 if failures else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qprogopt",
        description="Optimize program states of programmable quantum processors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("optimize", "benchmark"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="CSV output path")
        p.add_argument("--gnuplot", default=None,
                       help="two-column (param, cost) export path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--tol", type=float, default=1e-8)
    p = sub.add_parser("verify")
    p.add_argument("level", nargs="?", default="fast", choices=["fast", "full"])
    sub.add_parser("channels")
    sub.add_parser("processors")

    args = parser.parse_args(argv)
    handlers = {
        "optimize": cmd_optimize,
        "benchmark": cmd_benchmark,
        "verify": cmd_verify,
        "channels": cmd_channels,
        "processors": cmd_processors,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, CapacityError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
