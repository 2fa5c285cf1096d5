"""Small dense semidefinite programs over Hermitian PSD cones.

A problem is stated with Hermitian matrix variables, a real-linear objective
(maximized), real-linear equality constraints and affine Hermitian
expressions required to be PSD. It is canonicalized to real coordinates

    maximize  c.z + c0   s.t.  A z = b,   F0_k + sum_p z_p G_k[p]  >= 0,

where ``z`` collects the coordinates of every variable in an orthonormal
Hermitian basis. Two backends solve the canonical form:

``"clarabel"``
    The Clarabel interior-point solver, with each complex PSD block embedded
    as the real symmetric matrix ``[[Re X, -Im X], [Im X, Re X]]``.
``"admm"``
    An over-relaxed ADMM splitting between the affine set and the PSD cone,
    with residual-balanced penalty updates.

Both report residuals recomputed from the returned point.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .config import DEFAULT
from .qcore import as_matrix, hermitian_part, partial_trace, trace_norm


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"


class SolverError(RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# ---------------------------------------------------------------------------
# Hermitian coordinates
# ---------------------------------------------------------------------------

def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Frobenius) basis of d x d Hermitian matrices, shape (d*d, d, d)."""
    out = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1
        out.append(e)
    s = 1 / np.sqrt(2)
    for k in range(d):
        for l in range(k + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = e[l, k] = s
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = -1j * s
            e[l, k] = 1j * s
            out.append(e)
    return np.array(out)


def to_coords(m: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("pij,ij->p", basis.conj(), m))


def from_coords(z: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("p,pij->ij", z, basis)


def real_embedding(m: np.ndarray) -> np.ndarray:
    """``[[Re M, -Im M], [Im M, Re M]]``; its spectrum is that of M, doubled.

    Leading axes are treated as a stack.
    """
    m = np.asarray(m)
    top = np.concatenate([m.real, -m.imag], axis=-1)
    bottom = np.concatenate([m.imag, m.real], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _svec_indices(n: int):
    # upper triangle, column-major, as Clarabel's PSDTriangleConeT expects
    rows, cols = [], []
    for j in range(n):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    rows = np.array(rows)
    cols = np.array(cols)
    scale = np.where(rows == cols, 1.0, np.sqrt(2))
    return rows, cols, scale


def svec(m: np.ndarray) -> np.ndarray:
    """Scaled upper-triangular vectorization of a (stack of) real symmetric matrices."""
    n = m.shape[-1]
    r, c, s = _svec_indices(n)
    return m[..., r, c] * s


# ---------------------------------------------------------------------------
# problem statement and canonical form
# ---------------------------------------------------------------------------

@dataclass
class SdpProblem:
    """An SDP in terms of named Hermitian matrix variables.

    ``objective`` and each equality functional map a ``{name: matrix}`` dict
    to a real number and must be real-affine. Each entry of ``psd`` maps the
    same dict to a Hermitian matrix that is constrained PSD. Names listed in
    ``psd_variables`` are themselves constrained PSD. The objective is
    maximized; use ``sense="min"`` to minimize.
    """

    variables: list[tuple[str, int]]
    objective: Callable[[dict], float]
    equalities: list[tuple[Callable[[dict], float], float]] = field(default_factory=list)
    psd: list[Callable[[dict], np.ndarray]] = field(default_factory=list)
    psd_variables: tuple = ()
    sense: str = "max"


@dataclass
class PsdBlock:
    f0: np.ndarray          # (k, k) complex Hermitian
    g: np.ndarray           # (n, k, k) complex Hermitian, one slice per coordinate

    @property
    def size(self) -> int:
        return self.f0.shape[0]

    def value(self, z: np.ndarray) -> np.ndarray:
        return self.f0 + np.tensordot(z, self.g, axes=1)


@dataclass
class CanonicalSdp:
    c: np.ndarray
    c0: float
    a: np.ndarray
    b: np.ndarray
    blocks: list[PsdBlock]
    variables: list[tuple[str, int]]
    sense: str = "max"
    # backend data derived from ``blocks`` only; instances that share blocks may share it
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def unpack(self, z: np.ndarray) -> dict:
        out, off = {}, 0
        for name, d in self.variables:
            basis = hermitian_basis(d)
            out[name] = hermitian_part(from_coords(z[off:off + d * d], basis))
            off += d * d
        return out

    def to_json(self) -> str:
        def cm(m):
            m = np.asarray(m)
            return {"re": m.real.tolist(), "im": m.imag.tolist()}
        return json.dumps({
            "schema": "asymcat.sdp/1",
            "sense": self.sense,
            "variables": [[n, d] for n, d in self.variables],
            "c": self.c.tolist(), "c0": self.c0,
            "a": self.a.tolist(), "b": self.b.tolist(),
            "blocks": [{"f0": cm(bl.f0), "g": cm(bl.g)} for bl in self.blocks],
        })

    @classmethod
    def from_json(cls, text: str) -> "CanonicalSdp":
        o = json.loads(text)
        if o.get("schema") != "asymcat.sdp/1":
            raise ValueError("unrecognized SDP dump schema")

        def cm(x):
            return np.asarray(x["re"], dtype=float) + 1j * np.asarray(x["im"], dtype=float)
        n = len(o["c"])
        a = np.asarray(o["a"], dtype=float).reshape(-1, n)
        return cls(np.asarray(o["c"], dtype=float), float(o["c0"]), a,
                   np.asarray(o["b"], dtype=float),
                   [PsdBlock(cm(bl["f0"]), cm(bl["g"])) for bl in o["blocks"]],
                   [(nm, int(d)) for nm, d in o["variables"]], o["sense"])


def canonicalize(p: SdpProblem) -> CanonicalSdp:
    names = [n for n, _ in p.variables]
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable names")
    bases = {n: hermitian_basis(d) for n, d in p.variables}
    zero = {n: np.zeros((d, d), dtype=complex) for n, d in p.variables}
    probes = []
    for n, d in p.variables:
        for e in bases[n]:
            x = dict(zero)
            x[n] = e
            probes.append(x)
    nvar = len(probes)

    def linear(fn):
        f0 = float(np.real(fn(zero)))
        return f0, np.array([float(np.real(fn(x))) - f0 for x in probes])

    c0, c = linear(p.objective)
    if p.sense == "min":
        c0, c = -c0, -c
    elif p.sense != "max":
        raise ValueError(f"unknown sense {p.sense!r}")
    rows, rhs = [], []
    for fn, target in p.equalities:
        k0, row = linear(fn)
        rows.append(row)
        rhs.append(float(target) - k0)
    a = np.array(rows).reshape(len(rows), nvar)
    blocks = []
    exprs = list(p.psd)
    for name in p.psd_variables:
        exprs.append(lambda x, name=name: x[name])
    for fn in exprs:
        f0 = np.asarray(fn(zero), dtype=complex)
        g = np.array([np.asarray(fn(x), dtype=complex) - f0 for x in probes])
        blocks.append(PsdBlock(f0, g))
    return CanonicalSdp(c, c0, a, np.array(rhs, dtype=float), blocks, list(p.variables), p.sense)


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------

@dataclass
class SdpSolution:
    status: SdpStatus
    objective_value: float
    variable_values: dict
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    backend: str
    z: np.ndarray = field(repr=False, default=None)
    # the backend stopped at relaxed tolerances
    reduced_accuracy: bool = False

    @property
    def ok(self) -> bool:
        return self.status is SdpStatus.OPTIMAL

    def summary(self) -> dict:
        return {"status": self.status.value, "objective": self.objective_value,
                "primal_residual": self.primal_residual, "dual_residual": self.dual_residual,
                "gap": self.gap, "iterations": self.iterations, "backend": self.backend,
                "reduced_accuracy": self.reduced_accuracy}


def primal_residual(cs: CanonicalSdp, z: np.ndarray) -> float:
    r = 0.0
    if cs.a.size:
        r = float(np.max(np.abs(cs.a @ z - cs.b)))
    for bl in cs.blocks:
        w = np.linalg.eigvalsh(hermitian_part(bl.value(z)))
        r = max(r, float(-w[0]))
    return max(r, 0.0)


def _objective(cs: CanonicalSdp, z) -> float:
    v = float(cs.c @ z + cs.c0)
    return -v if cs.sense == "min" else v


# ---------------------------------------------------------------------------
# Clarabel backend
# ---------------------------------------------------------------------------

def independent_equalities(a: np.ndarray, b: np.ndarray, rtol: float = 1e-10):
    """An equivalent full-row-rank system, or ``None`` if ``a z = b`` is inconsistent.

    Masked TIO problems produce identically zero and repeated constraint rows;
    they make the KKT systems of both backends singular.
    """
    if not a.size:
        return a, b
    u, sv, vt = np.linalg.svd(a, full_matrices=False)
    k = int(np.sum(sv > rtol * max(sv[0], 1e-300))) if sv.size else 0
    a2 = sv[:k, None] * vt[:k]
    b2 = u[:, :k].T @ b
    z = vt[:k].T @ (b2 / sv[:k]) if k else np.zeros(a.shape[1])
    if np.max(np.abs(a @ z - b), initial=0.0) > 1e-9 * (1 + np.max(np.abs(b), initial=0.0)):
        return None
    return a2, b2

# Settings tried in turn when the solver stalls at reduced accuracy. Nearly
# pure states put the optimum on a face without a strictly feasible point;
# equilibration then hurts, and residual errors of size d in the constraints
# can move the objective by about sqrt(d).
CLARABEL_RETRIES = (
    {},
    {"equilibrate_enable": False},
    {"iterative_refinement_reltol": 1e-14, "iterative_refinement_abstol": 1e-14,
     "iterative_refinement_max_iter": 50},
)
# a reduced-accuracy result this feasible is kept without further attempts
RETRY_RESIDUAL = 1e-8


def _solve_clarabel(cs: CanonicalSdp, tol: float, max_iter: int) -> SdpSolution:
    import clarabel

    n = cs.n
    if "clarabel_psd" not in cs.cache:
        rows, rhs = [], []
        for bl in cs.blocks:
            rows.append(-svec(real_embedding(bl.g)).T.reshape(-1, n))
            rhs.append(svec(real_embedding(bl.f0)))
        cs.cache["clarabel_psd"] = (rows, rhs, [2 * bl.size for bl in cs.blocks])
    psd_rows, psd_rhs, psd_sizes = cs.cache["clarabel_psd"]
    a_rows, b_rows, cones = [], [], []
    if cs.a.size:
        # keep the raw rows when inconsistent so Clarabel reports infeasibility itself
        a_eq, b_eq = independent_equalities(cs.a, cs.b) or (cs.a, cs.b)
        a_rows.append(a_eq)
        b_rows.append(b_eq)
        cones.append(clarabel.ZeroConeT(a_eq.shape[0]))
    a_rows += psd_rows
    b_rows += psd_rhs
    cones += [clarabel.PSDTriangleConeT(k) for k in psd_sizes]
    a_cl = np.vstack(a_rows) if a_rows else np.zeros((0, n))
    b_cl = np.concatenate(b_rows) if b_rows else np.zeros(0)
    q = -cs.c
    fallback = None                 # best reduced-accuracy attempt so far
    for extra in CLARABEL_RETRIES:
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = max_iter
        settings.tol_feas = min(tol, 1e-8)
        settings.tol_gap_abs = min(tol, 1e-8)
        settings.tol_gap_rel = min(tol, 1e-8)
        settings.presolve_enable = False
        for k, v in extra.items():
            setattr(settings, k, v)
        solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), q, sp.csc_matrix(a_cl), b_cl, cones, settings)
        sol = solver.solve()
        status_name = str(sol.status).split(".")[-1]
        if status_name == "AlmostSolved":
            res = primal_residual(cs, np.asarray(sol.x, dtype=float))
            if fallback is None or res < fallback[2]:
                fallback = (sol, status_name, res)
            if res <= RETRY_RESIDUAL:
                break
        elif status_name not in ("NumericalError", "InsufficientProgress"):
            break
    if status_name != "Solved" and fallback is not None:
        sol, status_name, _ = fallback
    z = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.z, dtype=float)
    if "PrimalInfeasible" in status_name:
        status = SdpStatus.INFEASIBLE
    elif "DualInfeasible" in status_name:
        status = SdpStatus.UNBOUNDED
    elif status_name in ("Solved", "AlmostSolved"):
        status = SdpStatus.OPTIMAL
    else:
        status = SdpStatus.MAX_ITER
    if status in (SdpStatus.INFEASIBLE, SdpStatus.UNBOUNDED):
        return SdpSolution(status, float("nan"), {}, float("nan"), float("nan"), float("nan"),
                           int(sol.iterations), "clarabel", z)
    pres = primal_residual(cs, z)
    dres = float(np.max(np.abs(a_cl.T @ y + q))) if n else 0.0
    pobj = float(q @ z)
    dobj = float(-b_cl @ y)
    gap = abs(pobj - dobj) / (1 + abs(pobj))
    return SdpSolution(status, _objective(cs, z), cs.unpack(z), pres, dres, gap,
                       int(sol.iterations), "clarabel", z, status_name == "AlmostSolved")


# ---------------------------------------------------------------------------
# ADMM backend
# ---------------------------------------------------------------------------

def _solve_admm(cs: CanonicalSdp, tol: float, max_iter: int, alpha: float = 1.6) -> SdpSolution:
    n = cs.n
    a, b_eq = (cs.a, cs.b) if cs.a.size else (np.zeros((0, n)), np.zeros(0))
    if a.shape[0]:
        reduced = independent_equalities(a, b_eq)
        if reduced is None:
            zls = np.linalg.lstsq(a, b_eq, rcond=None)[0]
            return SdpSolution(SdpStatus.INFEASIBLE, float("nan"), {}, float("nan"), float("nan"),
                               float("nan"), 0, "admm", zls)
        a, b_eq = reduced
    m_eq = a.shape[0]

    # stack blocks in their own Hermitian coordinates so Euclidean norm = Frobenius norm
    bases = [hermitian_basis(bl.size) for bl in cs.blocks]
    g = np.vstack([np.array([to_coords(gp, bs) for gp in bl.g]).T.reshape(bl.size ** 2, n)
                   for bl, bs in zip(cs.blocks, bases)]) if cs.blocks else np.zeros((0, n))
    f = np.concatenate([to_coords(bl.f0, bs) for bl, bs in zip(cs.blocks, bases)]) if cs.blocks else np.zeros(0)
    offsets = np.cumsum([0] + [bl.size ** 2 for bl in cs.blocks])

    cscale = max(np.linalg.norm(cs.c), 1.0)
    ct = cs.c / cscale

    def project(v):
        out = np.empty_like(v)
        for k, bs in enumerate(bases):
            seg = v[offsets[k]:offsets[k + 1]]
            mat = hermitian_part(from_coords(seg, bs))
            w, vec = np.linalg.eigh(mat)
            out[offsets[k]:offsets[k + 1]] = to_coords((vec * np.clip(w, 0, None)) @ vec.conj().T, bs)
        return out

    rho, sigma = 1.0, 1e-6
    gtg = g.T @ g

    def factor(rho):
        kkt = np.block([[rho * gtg + sigma * np.eye(n), a.T], [a, np.zeros((m_eq, m_eq))]])
        return sla.lu_factor(kkt)

    lu = factor(rho)
    z = np.zeros(n)
    s = project(f)
    u = np.zeros_like(f)
    du_hist = []
    status = SdpStatus.MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        rhs = np.concatenate([ct - rho * g.T @ (f - s + u) + sigma * z, b_eq if m_eq else np.zeros(0)])
        z = sla.lu_solve(lu, rhs)[:n]
        w = g @ z + f
        w_hat = alpha * w + (1 - alpha) * s
        s_old = s
        s = project(w_hat + u)
        u_old = u
        u = u + w_hat - s
        if it % 10 == 0:
            r_p = np.linalg.norm(w - s)
            r_d = rho * np.linalg.norm(g.T @ (s - s_old))
            eps_p = tol * (1 + max(np.linalg.norm(w), np.linalg.norm(s)))
            eps_d = tol * (1 + rho * np.linalg.norm(g.T @ u))
            if r_p <= eps_p and r_d <= eps_d:
                lam = -rho * u
                nu = np.linalg.lstsq(a.T, ct + g.T @ lam, rcond=None)[0] if m_eq else np.zeros(0)
                dual = float(lam @ f + (b_eq @ nu if m_eq else 0.0))
                prim = float(ct @ z)
                if abs(prim - dual) <= 10 * tol * (1 + abs(prim)):
                    status = SdpStatus.OPTIMAL
                    break
            du_hist.append(np.linalg.norm(u - u_old))
            if it % 100 == 0 and it >= 2000 and r_p > 1e3 * eps_p:
                recent = du_hist[-10:]
                if min(recent) > 1e-6 and (max(recent) - min(recent)) < 1e-3 * max(recent):
                    status = SdpStatus.INFEASIBLE
                    break
            if it % 50 == 0:
                if r_p > 10 * r_d:
                    rho, u = rho * 2, u / 2
                    lu = factor(rho)
                elif r_d > 10 * r_p:
                    rho, u = rho / 2, u * 2
                    lu = factor(rho)

    if status is SdpStatus.INFEASIBLE:
        return SdpSolution(status, float("nan"), {}, float("nan"), float("nan"), float("nan"), it, "admm", z)
    lam = project(-rho * u)
    nu = np.linalg.lstsq(a.T, ct + g.T @ lam, rcond=None)[0] if m_eq else np.zeros(0)
    dres = float(np.max(np.abs(ct + g.T @ lam - a.T @ nu))) * cscale if n else 0.0
    prim = float(ct @ z)
    dual = float(lam @ f + (b_eq @ nu if m_eq else 0.0))
    gap = abs(prim - dual) / (1 + abs(prim))
    return SdpSolution(status, _objective(cs, z), cs.unpack(z), primal_residual(cs, z), dres, gap,
                       it, "admm", z)


BACKENDS = {"clarabel": _solve_clarabel, "admm": _solve_admm}


def solve_canonical(cs: CanonicalSdp, *, backend: str = "clarabel", tol: float = DEFAULT.sdp_residual,
                    max_iter: int | None = None) -> SdpSolution:
    if backend not in BACKENDS:
        raise ValueError(f"unknown SDP backend {backend!r}")
    if max_iter is None:
        max_iter = 200 if backend == "clarabel" else 50_000
    return BACKENDS[backend](cs, tol, max_iter)


def solve(p: SdpProblem, *, backend: str = "clarabel", tol: float = DEFAULT.sdp_residual,
          max_iter: int | None = None) -> SdpSolution:
    return solve_canonical(canonicalize(p), backend=backend, tol=tol, max_iter=max_iter)


def _require(sol: SdpSolution, what: str) -> SdpSolution:
    if not sol.ok:
        raise SolverError(f"{what}: solver returned {sol.status.value}", sol)
    return sol


# ---------------------------------------------------------------------------
# standard programs
# ---------------------------------------------------------------------------

def robustness_problem(rho, energies=None) -> SdpProblem:
    r = as_matrix(rho)
    d = r.shape[0]
    e = np.arange(d, dtype=float) if energies is None else np.asarray(energies, dtype=float)
    eqs = []
    for i in range(d):
        for j in range(i + 1, d):
            if abs(e[i] - e[j]) > DEFAULT.mask:
                eqs.append((lambda x, i=i, j=j: x["D"][i, j].real, 0.0))
                eqs.append((lambda x, i=i, j=j: x["D"][i, j].imag, 0.0))
    return SdpProblem(
        variables=[("D", d)],
        objective=lambda x: np.trace(x["D"]).real - 1,
        equalities=eqs,
        psd=[lambda x: x["D"] - r],
        sense="min",
    )


def robustness_of_asymmetry(rho, energies=None, *, backend: str = "clarabel") -> float:
    """Generalized robustness of asymmetry ``min Tr(D) - 1`` over free ``D >= rho``.

    Free operators are those commuting with the Hamiltonian whose spectrum is
    ``energies`` (default: non-degenerate ``0, 1, ..., d-1``), i.e. block
    diagonal in its eigenbasis.
    """
    sol = _require(solve(robustness_problem(rho, energies), backend=backend), "robustness")
    return max(sol.objective_value, 0.0)


def qubit_robustness(rho) -> float:
    """Closed form 2|rho_01| for qubits with a non-degenerate Hamiltonian."""
    return 2 * abs(np.asarray(rho)[0, 1])


def _as_choi(phi, dim_in, dim_out):
    if hasattr(phi, "choi"):
        return np.asarray(phi.choi), phi.dim_in, phi.dim_out
    j = as_matrix(phi)
    if dim_in is None:
        raise ValueError("dim_in required when passing a bare Choi matrix")
    return j, dim_in, dim_out or j.shape[0] // dim_in


def diamond_norm_problem(choi, dim_in: int, dim_out: int) -> SdpProblem:
    j = as_matrix(choi)
    n = dim_in * dim_out
    eye_in = np.eye(dim_in)

    def block(x):
        return np.block([[x["Y0"], -j], [-j.conj().T, x["Y1"]]])

    def epi(tname, yname):
        return lambda x: x[tname][0, 0].real * eye_in - partial_trace(x[yname], (dim_in, dim_out), keep=0)

    return SdpProblem(
        variables=[("Y0", n), ("Y1", n), ("t0", 1), ("t1", 1)],
        objective=lambda x: 0.5 * x["t0"][0, 0].real + 0.5 * x["t1"][0, 0].real,
        psd=[block, epi("t0", "Y0"), epi("t1", "Y1")],
        psd_variables=("Y0", "Y1"),
        sense="min",
    )


def diamond_norm(phi, dim_in: int | None = None, dim_out: int | None = None, *,
                 backend: str = "clarabel", method: str = "diamond") -> float:
    """Diamond norm of a Hermiticity-preserving map given as a channel or Choi matrix.

    ``method="choi_trace"`` instead returns the trace norm of the normalized
    Choi matrix ``||J||_1 / dim_in``, a lower bound on the diamond norm.
    """
    j, dim_in, dim_out = _as_choi(phi, dim_in, dim_out)
    if np.max(np.abs(j - j.conj().T)) > DEFAULT.measured_hermitian:
        raise ValueError("map is not Hermiticity preserving")
    if method == "choi_trace":
        return float(trace_norm(j) / dim_in)
    if method != "diamond":
        raise ValueError(f"unknown method {method!r}")
    if np.max(np.abs(j)) == 0:
        return 0.0
    scale = np.max(np.abs(j))
    sol = _require(solve(diamond_norm_problem(j / scale, dim_in, dim_out), backend=backend), "diamond norm")
    return float(max(sol.objective_value, 0.0) * scale)


def induced_trace_norm_lower_bound(phi, dim_in: int | None = None, dim_out: int | None = None, *,
                                   samples: int = 1000, rng=None, extra_inputs=()) -> float:
    """max over sampled pure inputs psi of ||(Phi (x) id)(|psi><psi|)||_1."""
    j, dim_in, dim_out = _as_choi(phi, dim_in, dim_out)
    rng = np.random.default_rng(rng)
    t = j.reshape(dim_in, dim_out, dim_in, dim_out)
    psis = [np.asarray(p, dtype=complex).reshape(dim_in, dim_in) for p in extra_inputs]
    for _ in range(samples):
        v = rng.normal(size=(dim_in, dim_in)) + 1j * rng.normal(size=(dim_in, dim_in))
        psis.append(v / np.linalg.norm(v))
    best = 0.0
    for psi in psis:
        psi = psi / np.linalg.norm(psi)
        out = np.einsum("ir,js,iajb->arbs", psi, psi.conj(), t).reshape(dim_out * dim_in, dim_out * dim_in)
        best = max(best, trace_norm(out))
    return best
