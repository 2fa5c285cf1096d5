"""Catalytic amplification of asymmetry.

The inner problem fixes a system state and a catalyst and searches all TIO
maps on system (x) catalyst that return the catalyst marginal exactly,
maximizing the system coherence |<0|rho'_S|1>|. Because a diagonal unitary on
the system is itself TIO and leaves the catalyst marginal alone, the largest
modulus equals the largest real part, so the objective is linear:

    maximize  Re <0|Tr_C E(rho_S (x) rho_C)|1>
    s.t.      J_E block diagonal over Bohr sectors, each block PSD,
              Tr_out J_E = I,  Tr_S E(rho_S (x) rho_C) = rho_C.

The outer problem searches system and catalyst states by multi-start
projected BFGS on finite-difference gradients.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import conic
from .qcore import (BlochVector, DensityMatrix, QuantumChannel, apply_choi, bloch, hermitian_part,
                    partial_trace)
from .tio import TioContext, assemble_from_sectors, build_mask

PHASE_GRID_ESCALATED = 16


@dataclass(frozen=True)
class CatalysisInstance:
    system_state: DensityMatrix
    catalyst_state: DensityMatrix
    ctx: TioContext | None = None
    exact_return: bool = True

    def __post_init__(self):
        ctx = self.ctx or build_mask((0, 1), (0, 1))
        object.__setattr__(self, "ctx", ctx)
        dims = ctx.subsystem_dims
        if len(dims) != 2 or dims != (self.system_state.dim, self.catalyst_state.dim):
            raise ValueError(f"context dims {dims} do not match states "
                             f"({self.system_state.dim}, {self.catalyst_state.dim})")
        if self.system_state.dim != 2:
            raise ValueError("the system must be a qubit")


@dataclass
class CatalysisResult:
    channel: QuantumChannel
    system_in: DensityMatrix
    catalyst_in: DensityMatrix
    system_out: DensityMatrix
    catalyst_out: DensityMatrix
    increment: float
    robustness_in: float
    robustness_out: float
    solver: dict
    phase: float = 0.0

    @property
    def catalyst_return_error(self) -> float:
        """Trace distance between returned and input catalyst."""
        d = np.asarray(self.catalyst_out) - np.asarray(self.catalyst_in)
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(d)))))

    def to_dict(self) -> dict:
        from .serialization import matrix_to_json
        out = {
            "increment": self.increment,
            "robustness_in": self.robustness_in,
            "robustness_out": self.robustness_out,
            "catalyst_return_error": self.catalyst_return_error,
            "phase": self.phase,
            "solver": self.solver,
            "choi": matrix_to_json(self.channel.choi),
        }
        for name in ("system_in", "catalyst_in", "system_out", "catalyst_out"):
            st = getattr(self, name)
            out[name] = list(st.bloch()) if st.dim == 2 else matrix_to_json(st.mat)
        return out


# ---------------------------------------------------------------------------
# inner SDP
# ---------------------------------------------------------------------------

@dataclass
class _Template:
    """State-independent pieces of the inner SDP for one TIO context."""

    ctx: TioContext
    n: int
    offsets: list
    bases: list              # Hermitian coordinate basis of each sector block
    rows_in: list            # input composite index of each block row
    rows_out: list           # output composite index of each block row
    tp_a: np.ndarray
    tp_b: np.ndarray
    blocks: list
    cache: dict


_TEMPLATES: dict = {}


def _template(ctx: TioContext) -> _Template:
    key = (ctx.h_total.energies, ctx.subsystem_dims, ctx.sectors)
    if key in _TEMPLATES:
        return _TEMPLATES[key]
    d = ctx.dim
    offsets, bases, rows_in, rows_out = [0], [], [], []
    for _, idx in ctx.sectors:
        k = len(idx)
        bases.append(conic.hermitian_basis(k))
        rows_in.append(np.array([q // d for q in idx]))
        rows_out.append(np.array([q % d for q in idx]))
        offsets.append(offsets[-1] + k * k)
    n = offsets[-1]

    # Tr_out J as a linear function of the coordinates, shape (n, d, d)
    tr = np.zeros((n, d, d), dtype=complex)
    for s, bs in enumerate(bases):
        same = rows_out[s][:, None] == rows_out[s][None, :]
        onehot = np.eye(d)[rows_in[s]]
        tr[offsets[s]:offsets[s + 1]] = np.einsum("puv,uv,ui,vj->pij", bs, same, onehot, onehot)
    tp_rows, tp_rhs = _hermitian_rows(tr, np.eye(d), drop_last_diagonal=False)

    blocks = []
    for s, bs in enumerate(bases):
        k = bs.shape[1]
        g = np.zeros((n, k, k), dtype=complex)
        g[offsets[s]:offsets[s + 1]] = bs
        blocks.append(conic.PsdBlock(np.zeros((k, k), dtype=complex), g))
    t = _Template(ctx, n, offsets, bases, rows_in, rows_out, tp_rows, tp_rhs, blocks, {})
    _TEMPLATES[key] = t
    return t


def _hermitian_rows(lin: np.ndarray, target: np.ndarray, drop_last_diagonal: bool):
    """Real equality rows forcing the Hermitian-valued linear map ``lin`` to equal ``target``."""
    d = target.shape[0]
    rows, rhs = [], []
    for r in range(d):
        for c in range(r, d):
            if r == c:
                if drop_last_diagonal and r == d - 1:
                    continue
                rows.append(lin[:, r, r].real)
                rhs.append(target[r, r].real)
            else:
                rows.append(lin[:, r, c].real)
                rhs.append(target[r, c].real)
                rows.append(lin[:, r, c].imag)
                rhs.append(target[r, c].imag)
    return np.array(rows), np.array(rhs)


def _output_map(t: _Template, rho_in: np.ndarray) -> np.ndarray:
    """E(rho_in) as a linear function of the coordinates, shape (n, d, d)."""
    d = t.ctx.dim
    out = np.zeros((t.n, d, d), dtype=complex)
    for s, bs in enumerate(t.bases):
        w = rho_in[np.ix_(t.rows_in[s], t.rows_in[s])]
        onehot = np.eye(d)[t.rows_out[s]]
        out[t.offsets[s]:t.offsets[s + 1]] = np.einsum("puv,uv,ua,vb->pab", bs, w, onehot, onehot)
    return out


def _choi_from_coords(t: _Template, z: np.ndarray) -> np.ndarray:
    blocks = [conic.from_coords(z[t.offsets[s]:t.offsets[s + 1]], bs) for s, bs in enumerate(t.bases)]
    return hermitian_part(assemble_from_sectors(blocks, t.ctx))


def inner_problem(inst: CatalysisInstance, phase: float = 0.0) -> conic.CanonicalSdp:
    t = _template(inst.ctx)
    ds, dc = inst.ctx.subsystem_dims
    rho_s = np.asarray(inst.system_state)
    rho_c = np.asarray(inst.catalyst_state)
    out = _output_map(t, np.kron(rho_s, rho_c))
    out4 = out.reshape(t.n, ds, dc, ds, dc)
    sys_out = np.einsum("pacbc->pab", out4)
    cat_out = np.einsum("pacad->pcd", out4)
    c = np.real(np.exp(-1j * phase) * sys_out[:, 0, 1])
    a, b = t.tp_a, t.tp_b
    if inst.exact_return:
        # the catalyst trace is already fixed by trace preservation
        ra, rb = _hermitian_rows(cat_out, rho_c, drop_last_diagonal=True)
        a, b = np.vstack([a, ra]), np.concatenate([b, rb])
    variables = [(f"B{s}", bs.shape[1]) for s, bs in enumerate(t.bases)]
    return conic.CanonicalSdp(c, 0.0, a, b, t.blocks, variables, "max", t.cache)


def qubit_robustness(rho) -> float:
    return conic.qubit_robustness(rho)


FACE_TOL = 1e-6
FACE_CAP = 1e-2


def _forced_zero_entries(inst: CatalysisInstance, cs: conic.CanonicalSdp, backend: str) -> list:
    """Choi diagonal entries that vanish on the whole feasible set, as (sector, position) pairs.

    One auxiliary SDP maximizes sum_k s_k with 0 <= s_k <= min(J_kk, FACE_CAP).
    Averaging the individual maximizers shows that every entry which can be
    positive at all is positive at this optimum, so entries left below
    ``FACE_TOL`` are forced to zero.
    """
    t = _template(inst.ctx)
    n = cs.n
    diag = []
    for s, bs in enumerate(t.bases):
        for i in range(bs.shape[1]):
            row = np.zeros(n)
            row[t.offsets[s]:t.offsets[s + 1]] = bs[:, i, i].real
            diag.append((s, i, row))
    m = len(diag)
    pad = np.zeros((m, 1, 1), dtype=complex)
    blocks = [conic.PsdBlock(bl.f0, np.concatenate([bl.g, np.zeros((m,) + bl.g.shape[1:], complex)]))
              for bl in cs.blocks]
    for k, (_, _, row) in enumerate(diag):
        e = pad.copy()
        e[k] = 1.0
        g_le = np.concatenate([row.astype(complex)[:, None, None], -e])
        blocks += [conic.PsdBlock(np.zeros((1, 1), complex), g_le),
                   conic.PsdBlock(np.zeros((1, 1), complex), np.concatenate([np.zeros((n, 1, 1)), e])),
                   conic.PsdBlock(np.full((1, 1), FACE_CAP, complex), np.concatenate([np.zeros((n, 1, 1)), -e]))]
    probe = conic.CanonicalSdp(np.concatenate([np.zeros(n), np.ones(m)]), 0.0,
                               np.hstack([cs.a, np.zeros((cs.a.shape[0], m))]), cs.b, blocks,
                               list(cs.variables) + [(f"s{k}", 1) for k in range(m)], "max")
    sol = conic.solve_canonical(probe, backend=backend)
    if not sol.ok:
        return []
    vals = np.array([row @ sol.z[:n] for _, _, row in diag])
    return [(s, i) for (s, i, _), v in zip(diag, vals) if v < FACE_TOL]


def _reduced_instance(inst: CatalysisInstance, forced: list) -> CatalysisInstance:
    """The instance with the forced-zero Choi rows and columns removed from every sector."""
    drop = set()
    for s, i in forced:
        drop.add(inst.ctx.sectors[s][1][i])
    sectors = tuple((w, tuple(q for q in idx if q not in drop)) for w, idx in inst.ctx.sectors)
    ctx = dataclasses.replace(inst.ctx, sectors=tuple(sec for sec in sectors if sec[1]))
    return dataclasses.replace(inst, ctx=ctx)


def _solve_inner(inst: CatalysisInstance, phase: float, backend: str) -> CatalysisResult:
    cs = inner_problem(inst, phase)
    sol = conic.solve_canonical(cs, backend=backend)
    if sol.ok and sol.reduced_accuracy:
        # Without a strictly feasible point (e.g. an incoherent system input)
        # interior-point errors d move the objective by ~sqrt(d). Restrict to
        # the minimal face and solve again.
        forced = _forced_zero_entries(inst, cs, backend)
        if forced:
            reduced = _reduced_instance(inst, forced)
            sol_r = conic.solve_canonical(inner_problem(reduced, phase), backend=backend)
            if sol_r.ok:
                res = _result(inst, _template(reduced.ctx), sol_r, phase)
                res.solver["face_reduced"] = len(forced)
                return res
    if not sol.ok:
        raise conic.SolverError(f"inner catalysis SDP: solver returned {sol.status.value}", sol)
    return _result(inst, _template(inst.ctx), sol, phase)


def _result(inst: CatalysisInstance, t: _Template, sol: conic.SdpSolution, phase: float) -> CatalysisResult:
    j = _choi_from_coords(t, sol.z)
    d = inst.ctx.dim
    ch = QuantumChannel(j, d, d)
    ds, dc = inst.ctx.subsystem_dims
    out = apply_choi(j, np.kron(np.asarray(inst.system_state), np.asarray(inst.catalyst_state)), d, d)
    s_out = hermitian_part(partial_trace(out, (ds, dc), keep=0))
    c_out = hermitian_part(partial_trace(out, (ds, dc), keep=1))
    r_in = qubit_robustness(inst.system_state)
    r_out = qubit_robustness(s_out)
    return CatalysisResult(ch, inst.system_state, inst.catalyst_state,
                           DensityMatrix(s_out, validate=False), DensityMatrix(c_out, validate=False),
                           r_out - r_in, r_in, r_out, sol.summary(), phase)


def optimal_tio_channel(inst: CatalysisInstance, phase_grid: int = 1, *,
                        backend: str = "clarabel", incumbent: bool = True) -> CatalysisResult:
    """Best catalytic TIO for fixed states.

    With ``phase_grid == 1`` only the real part of the output coherence is
    maximized. If the optimum then carries a relative imaginary part above
    1e-6 the search is repeated over 16 phases and the best is kept.
    With ``incumbent`` a solver channel worse than the identity is replaced
    by the identity; the outer search turns this off to keep its gradients.
    """
    phases = np.arange(phase_grid) * 2 * np.pi / phase_grid
    best = None
    for ph in phases:
        res = _solve_inner(inst, float(ph), backend)
        if best is None or res.increment > best.increment:
            best = res
    if phase_grid == 1:
        r01 = np.asarray(best.system_out)[0, 1]
        if abs(r01.imag) > 1e-6 * max(abs(r01.real), 1e-12) and abs(r01) > 1e-9:
            return optimal_tio_channel(inst, PHASE_GRID_ESCALATED, backend=backend, incumbent=incumbent)
    if incumbent and best.increment < 0:
        # the identity is always feasible; keep it when the solver's channel is worse
        return _identity_result(inst, best.solver)
    return best


def _identity_result(inst: CatalysisInstance, solver: dict) -> CatalysisResult:
    d = inst.ctx.dim
    r = qubit_robustness(inst.system_state)
    return CatalysisResult(QuantumChannel.identity(d), inst.system_state, inst.catalyst_state,
                           inst.system_state, inst.catalyst_state, 0.0, r, r,
                           {**solver, "incumbent": "identity"}, 0.0)


def increment(system, catalyst, ctx: TioContext | None = None, *, backend: str = "clarabel") -> float:
    """Optimal Delta eta for Bloch vectors (or density matrices) of system and catalyst."""
    rs = system if isinstance(system, DensityMatrix) else bloch(*system)
    rc = catalyst if isinstance(catalyst, DensityMatrix) else bloch(*catalyst)
    return optimal_tio_channel(CatalysisInstance(rs, rc, ctx), backend=backend).increment


# ---------------------------------------------------------------------------
# outer search
# ---------------------------------------------------------------------------

FD_STEP = 1e-4
ARMIJO_C = 1e-4
MAX_OUTER_ITER = 200
GRAD_TOL = 1e-5


@dataclass
class OptimizeTrace:
    start: int
    initial: tuple
    final: tuple
    value: float
    iterations: int
    status: str
    residual: float
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"start": self.start, "initial": list(self.initial), "final": list(self.final),
                "value": self.value, "iterations": self.iterations, "status": self.status,
                "residual": self.residual, "history": self.history}


def _project_disc(x: float, z: float, radius: float = 1.0) -> tuple[float, float]:
    r = math.hypot(x, z)
    if r > radius:
        return x * radius / r, z * radius / r
    return x, z


def _project_ball(v: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(v)
    return v / r if r > 1 else v


def bfgs_maximize(f: Callable[[np.ndarray], float], x0, project: Callable[[np.ndarray], np.ndarray], *,
                  h: float = FD_STEP, c1: float = ARMIJO_C, max_iter: int = MAX_OUTER_ITER,
                  gtol: float = GRAD_TOL, history: list | None = None):
    """Projected BFGS ascent with central-difference gradients and Armijo backtracking.

    Returns ``(x, f(x), iterations, status)`` with status ``"converged"``,
    ``"line_search"`` (no sufficient increase along the search direction) or
    ``"max_iter"``. Convergence is measured on the projected gradient.
    """
    x = project(np.asarray(x0, dtype=float))
    n = x.size

    def grad(x):
        g = np.empty(n)
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            g[k] = (f(project(x + e)) - f(project(x - e))) / (2 * h)
        return g

    fx = f(x)
    g = grad(x)
    hinv = np.eye(n)
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        pg = (project(x + 1e-2 * g) - x) / 1e-2
        if history is not None:
            history.append([it - 1] + x.tolist() + [fx, float(np.max(np.abs(pg)))])
        if np.max(np.abs(pg)) < gtol:
            status = "converged"
            it -= 1
            break
        p = hinv @ g
        if p @ g <= 0:
            hinv = np.eye(n)
            p = g.copy()
        step, accepted = 1.0, False
        for _ in range(40):
            xn = project(x + step * p)
            fn = f(xn)
            if fn >= fx + c1 * (g @ (xn - x)) and np.any(xn != x):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "line_search"
            break
        gn = grad(xn)
        s = xn - x
        y = -(gn - g)
        sy = s @ y
        if sy > 1e-12:
            rho = 1 / sy
            i = np.eye(n)
            hinv = (i - rho * np.outer(s, y)) @ hinv @ (i - rho * np.outer(y, s)) + rho * np.outer(s, s)
        x, fx, g = xn, fn, gn
    return x, fx, it, status


def _pure_system(theta: float, phi: float = 0.0) -> BlochVector:
    return BlochVector(math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))


@dataclass(frozen=True)
class _Objective:
    """Delta eta as a function of the outer parameters; picklable for worker processes."""

    ctx_key: tuple
    layout: str                  # "full", "full_y", or "catalyst"
    system: tuple | None = None  # fixed system Bloch vector for "catalyst"
    backend: str = "clarabel"

    def states(self, v: np.ndarray):
        if self.layout == "full":
            s = _pure_system(v[0])
            c = (v[1], 0.0, v[2])
        elif self.layout == "full_y":
            s = _pure_system(v[0], v[1])
            c = tuple(v[2:5])
        else:
            s = self.system
            c = (v[0], 0.0, v[1])
        return bloch(*s, renormalize=True), bloch(*c, renormalize=True)

    def project(self, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float)
        if self.layout == "full":
            v[0] = min(max(v[0], 0.0), math.pi)
            v[1], v[2] = _project_disc(v[1], v[2])
        elif self.layout == "full_y":
            v[0] = min(max(v[0], 0.0), math.pi)
            v[2:5] = _project_ball(v[2:5])
        else:
            v[0], v[1] = _project_disc(v[0], v[1])
        return v

    def result(self, v, incumbent: bool = True) -> CatalysisResult:
        rs, rc = self.states(v)
        return optimal_tio_channel(CatalysisInstance(rs, rc, _ctx_cached(self.ctx_key)), backend=self.backend,
                                   incumbent=incumbent)

    def __call__(self, v) -> float:
        return self.result(v, incumbent=False).increment


_CTX_CACHE: dict = {}


def _ctx_cached(key) -> TioContext:
    if key not in _CTX_CACHE:
        _CTX_CACHE[key] = build_mask(*key)
    return _CTX_CACHE[key]


def _ctx_key(ctx: TioContext | None) -> tuple:
    ctx = ctx or build_mask((0, 1), (0, 1))
    return (ctx.h_system.energies, ctx.h_catalyst.energies)


def _run_start(args):
    obj, start, x0, max_iter = args
    hist: list = []
    try:
        x, fx, it, status = bfgs_maximize(obj, x0, obj.project, max_iter=max_iter, history=hist)
        res = obj.result(x)
        residual = max(res.solver["primal_residual"], res.solver["dual_residual"])
        return OptimizeTrace(start, tuple(map(float, x0)), tuple(map(float, x)), float(fx), it, status,
                             float(residual), hist)
    except conic.SolverError as exc:
        return OptimizeTrace(start, tuple(map(float, x0)), tuple(map(float, x0)), float("-inf"), 0,
                             f"failed: {exc}", float("inf"), hist)


def _map(fn, items, jobs: int):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


class SearchFailed(RuntimeError):
    def __init__(self, message, traces):
        super().__init__(message)
        self.traces = traces


@dataclass
class SearchResult:
    best: CatalysisResult
    parameters: tuple
    best_start: int
    traces: list

    def to_dict(self) -> dict:
        return {"best": self.best.to_dict(), "parameters": list(self.parameters),
                "best_start": self.best_start, "traces": [t.to_dict() for t in self.traces]}


def _pick(obj: _Objective, traces: list) -> SearchResult:
    ok = [t for t in traces if math.isfinite(t.value)]
    if not ok:
        raise SearchFailed("all starts failed", traces)
    best = min(ok, key=lambda t: (-t.value, t.residual, t.start))
    return SearchResult(obj.result(np.array(best.final)), best.final, best.start, traces)


def initial_points(layout: str, starts: int, seed: int) -> list[np.ndarray]:
    """Seeded starting points: theta uniform in the open range, catalyst uniform in the disc."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(starts):
        r = 0.95 * math.sqrt(rng.uniform())
        a = rng.uniform(0, 2 * math.pi)
        cat = [r * math.cos(a), r * math.sin(a)]
        if layout == "catalyst":
            pts.append(np.array(cat))
        else:
            pts.append(np.array([rng.uniform(0.05, math.pi - 0.05)] + cat))
    return pts


def bilevel_search(starts: int = 32, seed: int = 0, *, catalyst_dim: int = 2, ctx: TioContext | None = None,
                   initial: Sequence | None = None, max_iter: int = MAX_OUTER_ITER, jobs: int = 1,
                   backend: str = "clarabel") -> SearchResult:
    """Maximize Delta eta over pure qubit systems and real-plane qubit catalysts.

    Outer parameters are ``(theta, x_c, z_c)`` with the system
    ``(sin theta, 0, cos theta)``. ``initial`` overrides the seeded start
    points.
    """
    if catalyst_dim != 2:
        raise ValueError("only qubit catalysts are supported")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    obj = _Objective(_ctx_key(ctx), "full", backend=backend)
    pts = [np.asarray(p, dtype=float) for p in initial] if initial is not None else initial_points("full", starts, seed)
    traces = _map(_run_start, [(obj, k, p, max_iter) for k, p in enumerate(pts)], jobs)
    return _pick(obj, traces)


def validate_without_phase_restriction(result: SearchResult, *, ctx: TioContext | None = None,
                                       max_iter: int = 50, backend: str = "clarabel") -> SearchResult:
    """Re-run the ascent from a found optimum with y components free.

    Parameters become ``(theta, phi, x_c, y_c, z_c)``. The returned value
    should not exceed the restricted optimum beyond 1e-4.
    """
    theta, xc, zc = result.parameters
    obj = _Objective(_ctx_key(ctx), "full_y", backend=backend)
    x0 = np.array([theta, 0.0, xc, 0.0, zc])
    traces = [_run_start((obj, 0, x0, max_iter))]
    return _pick(obj, traces)


def optimize_catalyst(system, starts: int = 4, seed: int = 0, *, ctx: TioContext | None = None,
                      initial: Sequence | None = None, max_iter: int = MAX_OUTER_ITER,
                      backend: str = "clarabel") -> SearchResult:
    """Maximize Delta eta over the catalyst ``(x_c, 0, z_c)`` for a fixed system Bloch vector."""
    obj = _Objective(_ctx_key(ctx), "catalyst", tuple(float(v) for v in system), backend)
    pts = [np.asarray(p, dtype=float) for p in initial] if initial is not None else initial_points("catalyst", starts, seed)
    traces = [_run_start((obj, k, p, max_iter)) for k, p in enumerate(pts)]
    return _pick(obj, traces)


# ---------------------------------------------------------------------------
# state-space scans
# ---------------------------------------------------------------------------

def _scan_point(args):
    system, starts, seed, ctx_key, backend = args
    obj = _Objective(ctx_key, "catalyst", system, backend)
    traces = [_run_start((obj, k, p, MAX_OUTER_ITER))
              for k, p in enumerate(initial_points("catalyst", starts, seed))]
    # the identity channel is always feasible and gives exactly zero
    return max(0.0, max(t.value for t in traces))


def scan_pure_states(grid: int = 181, *, starts: int = 4, seed: int = 0, ctx: TioContext | None = None,
                     jobs: int = 1, backend: str = "clarabel") -> list[tuple[float, float]]:
    """Best increment for pure systems ``(sin theta, 0, cos theta)``, theta in [0, pi/2]."""
    if grid < 3:
        raise ValueError("grid must have at least 3 points")
    thetas = np.linspace(0, math.pi / 2, grid)
    key = _ctx_key(ctx)
    vals = _map(_scan_point, [(tuple(_pure_system(t)), starts, seed, key, backend) for t in thetas], jobs)
    return [(float(t), float(v)) for t, v in zip(thetas, vals)]


def scan_mixed_states(grid: int = 101, *, starts: int = 4, seed: int = 0, ctx: TioContext | None = None,
                      jobs: int = 1, backend: str = "clarabel") -> list[tuple[float, float, float]]:
    """Best increment over systems ``(x, 0, z)`` with x >= 0, z <= 0, x^2 + z^2 < 1."""
    if grid < 2:
        raise ValueError("grid must have at least 2 points per axis")
    xs = np.linspace(0, 1, grid)
    zs = np.linspace(-1, 0, grid)
    pts = [(float(x), float(z)) for x in xs for z in zs if x * x + z * z < 1]
    key = _ctx_key(ctx)
    vals = _map(_scan_point, [((x, 0.0, z), starts, seed, key, backend) for x, z in pts], jobs)
    return [(x, z, float(v)) for (x, z), v in zip(pts, vals)]


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True))
