"""Noise on the global channel and the error budget it induces.

The non-TIO part of an experimental channel ``E`` is ``E - E_TI`` with
``J_TI = J * M``. Its effect on either subsystem, with the other held at its
input state, is bounded by the diamond norms

    eps_S = || X -> Tr_C (E - E_TI)(X (x) rho_C) ||,
    eps_C = || X -> Tr_S (E - E_TI)(rho_S (x) X) ||.

A catalyst is accepted when the return guard holds with ``eps_C`` and the
system gain survives subtraction of ``eps_S``.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import conic
from .protocols import Protocol, ProtocolSpec, get as get_protocol
from .qcore import (BlochVector, DensityMatrix, QuantumChannel, apply_choi, bloch, choi_of_map,
                    density_to_bloch, partial_trace)
from .tio import TioContext, build_mask, catalyst_return_guard

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class NoiseModel:
    """Bit-flip noise of strength ``p[k]`` on the two-level subspace ``PAIRS[k]``.

    The six maps are applied after the channel in the order of ``PAIRS``.
    """

    p: tuple = (0.0,) * 6

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) != len(PAIRS):
            raise ValueError(f"need {len(PAIRS)} probabilities, got {len(p)}")
        if any(not 0 <= v <= 1 for v in p):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, p: float) -> "NoiseModel":
        return cls((p,) * len(PAIRS))


def subspace_flip(i: int, j: int, d: int = 4) -> np.ndarray:
    """Identity except that basis states i and j are exchanged."""
    u = np.eye(d)
    u[[i, j]] = u[[j, i]]
    return u


def apply_noise(ideal: QuantumChannel, nm: NoiseModel) -> QuantumChannel:
    if ideal.dim_out != 4:
        raise ValueError("noise model is defined on a four-dimensional output")
    j = np.array(ideal.choi)
    for (a, b), p in zip(PAIRS, nm.p):
        if p == 0:
            continue
        u = np.kron(np.eye(ideal.dim_in), subspace_flip(a, b))
        j = (1 - p) * j + p * (u @ j @ u.T)
    return QuantumChannel(j, ideal.dim_in, ideal.dim_out,
                          hermiticity_preserving_only=ideal.hermiticity_preserving_only)


# ---------------------------------------------------------------------------
# error bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonBounds:
    eps_s: float
    eps_c: float


def _non_tio_part(channel, ctx: TioContext) -> np.ndarray:
    j = np.asarray(channel.choi) if hasattr(channel, "choi") else np.asarray(channel)
    return j - j * ctx.mask


def _local_maps(delta: np.ndarray, dims: tuple):
    ds, dc = dims
    d = ds * dc

    def phi_s(rho_c):
        rc = np.asarray(rho_c)
        return choi_of_map(lambda x: partial_trace(apply_choi(delta, np.kron(x, rc), d, d), dims, keep=0), ds, ds)

    def phi_c(rho_s):
        rs = np.asarray(rho_s)
        return choi_of_map(lambda x: partial_trace(apply_choi(delta, np.kron(rs, x), d, d), dims, keep=1), dc, dc)

    return phi_s, phi_c


def _norm(j: np.ndarray, dim: int, backend: str, method: str) -> float:
    if np.max(np.abs(j)) < 1e-15:
        return 0.0
    return conic.diamond_norm(j, dim, dim, backend=backend, method=method)


def epsilon_s(channel, rho_c, ctx: TioContext | None = None, *, backend: str = "clarabel",
              method: str = "diamond") -> float:
    ctx = ctx or build_mask((0, 1), (0, 1))
    phi_s, _ = _local_maps(_non_tio_part(channel, ctx), ctx.subsystem_dims)
    return _norm(phi_s(rho_c), ctx.subsystem_dims[0], backend, method)


def epsilon_c(channel, rho_s, ctx: TioContext | None = None, *, backend: str = "clarabel",
              method: str = "diamond") -> float:
    ctx = ctx or build_mask((0, 1), (0, 1))
    _, phi_c = _local_maps(_non_tio_part(channel, ctx), ctx.subsystem_dims)
    return _norm(phi_c(rho_s), ctx.subsystem_dims[1], backend, method)


def epsilon_bounds(exp_channel, rho_s, rho_c, ctx: TioContext | None = None, *,
                   backend: str = "clarabel", method: str = "diamond") -> EpsilonBounds:
    """Diamond norms of the non-TIO part seen by system and catalyst.

    ``method="choi_trace"`` substitutes the normalized Choi trace norm, a
    cheaper lower bound.
    """
    return EpsilonBounds(epsilon_s(exp_channel, rho_c, ctx, backend=backend, method=method),
                         epsilon_c(exp_channel, rho_s, ctx, backend=backend, method=method))


def corrected_increment(rho_in, rho_out, eps_s: float) -> float:
    """``R(rho_out) - R(rho_in) - eps_s`` with ``R = sqrt(x^2 + y^2)``."""
    def r(v):
        if isinstance(v, BlochVector):
            b = v
        else:
            a = np.asarray(v)
            b = BlochVector(*a) if a.shape == (3,) else density_to_bloch(a)
        return math.hypot(b.x, b.y)
    return r(rho_out) - r(rho_in) - eps_s


# ---------------------------------------------------------------------------
# catalyst region scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionPoint:
    delta_x: float
    delta_z: float
    raw_increment: float
    corrected_increment: float      # nan where the guard fails
    constraint_ok: bool
    eps_s: float = float("nan")

    @property
    def feasible(self) -> bool:
        return self.constraint_ok and self.corrected_increment > 0


@dataclass
class NoiseAssessment:
    protocol: str
    eps_s: float                    # at the unshifted catalyst
    eps_c: float
    constraint_ok: bool             # guard at the unshifted catalyst
    raw_increment: float            # at the unshifted catalyst
    corrected_increment: float      # at the unshifted catalyst
    feasible_region: list = field(default_factory=list)

    @property
    def feasible_points(self) -> list:
        return [p for p in self.feasible_region if p.feasible]

    @property
    def is_empty(self) -> bool:
        return not self.feasible_points

    @property
    def best(self) -> RegionPoint | None:
        pts = [p for p in self.feasible_region if p.constraint_ok and not math.isnan(p.corrected_increment)]
        if not pts:
            return None
        return max(pts, key=lambda p: (p.corrected_increment, -abs(p.delta_x), -abs(p.delta_z)))

    @property
    def max_corrected_increment(self) -> float:
        b = self.best
        return b.corrected_increment if b else float("nan")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta_x", "delta_z", "raw_increment", "corrected_increment", "constraint_ok"])
            for p in self.feasible_region:
                w.writerow([f"{p.delta_x:.12g}", f"{p.delta_z:.12g}", f"{p.raw_increment:.12g}",
                            "" if math.isnan(p.corrected_increment) else f"{p.corrected_increment:.12g}",
                            int(p.constraint_ok)])

    def summary(self) -> dict:
        b = self.best
        return {"protocol": self.protocol, "eps_s": self.eps_s, "eps_c": self.eps_c,
                "constraint_ok": self.constraint_ok, "raw_increment": self.raw_increment,
                "corrected_increment": self.corrected_increment,
                "grid_points": len(self.feasible_region),
                "feasible_points": len(self.feasible_points),
                "max_corrected_increment": None if b is None else b.corrected_increment,
                "argmax": None if b is None else [b.delta_x, b.delta_z]}


def _spec(protocol) -> ProtocolSpec:
    return protocol if isinstance(protocol, ProtocolSpec) else get_protocol(protocol)


def _grid(rng: tuple, n: int) -> np.ndarray:
    return np.linspace(rng[0], rng[1], n)


@dataclass(frozen=True)
class _Point:
    dx: float
    dz: float
    rho_c: np.ndarray
    raw: float
    guard_ok: bool


def _evaluate_points(channel, spec: ProtocolSpec, rho_s, eps_c: float, dxs, dzs, ctx) -> list[_Point]:
    d = ctx.dim
    dims = ctx.subsystem_dims
    r_in = 2 * abs(np.asarray(rho_s)[0, 1])
    pts = []
    for dx in dxs:
        for dz in dzs:
            x, z = spec.catalyst.x + dx, spec.catalyst.z + dz
            if x * x + spec.catalyst.y ** 2 + z * z > 1:
                continue
            rc = np.asarray(bloch(x, spec.catalyst.y, z))
            out = apply_choi(channel.choi, np.kron(np.asarray(rho_s), rc), d, d)
            s_out = partial_trace(out, dims, keep=0)
            c_out = density_to_bloch(partial_trace(out, dims, keep=1))
            guard = catalyst_return_guard((x, spec.catalyst.y, z), c_out, eps_c)
            pts.append(_Point(float(dx), float(dz), rc, 2 * abs(s_out[0, 1]) - r_in, guard.ok))
    return pts


def _eps_s_task(args):
    delta, rho_c, dims, backend = args
    phi_s, _ = _local_maps(delta, dims)
    return _norm(phi_s(rho_c), dims[0], backend, "diamond")


def _map(fn, items, jobs: int):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(it) for it in items]


DX_RANGE = (-0.3, 0.1)
DZ_RANGE = (-0.2, 0.2)


def scan_catalyst_region(protocol, channel: QuantumChannel, grid: Sequence[int] = (81, 81), *,
                         dx_range: tuple = DX_RANGE, dz_range: tuple = DZ_RANGE,
                         system_state: DensityMatrix | None = None, ctx: TioContext | None = None,
                         backend: str = "clarabel", jobs: int = 1) -> NoiseAssessment:
    """Shift the protocol's catalyst by (dx, dz) over a grid and test each point.

    ``eps_c`` depends only on the channel and the system input, so it is
    computed once. ``eps_s`` is recomputed for every point that passes the
    return guard. A point belongs to the feasible region when the guard holds
    and the corrected increment is positive.
    """
    spec = _spec(protocol)
    ctx = ctx or build_mask((0, 1), (0, 1))
    rho_s = system_state if system_state is not None else spec.system_state()
    delta = _non_tio_part(channel, ctx)
    eps_c = epsilon_c(channel, rho_s, ctx, backend=backend)
    gx, gz = (grid, grid) if isinstance(grid, int) else grid
    pts = _evaluate_points(channel, spec, rho_s, eps_c, _grid(dx_range, gx), _grid(dz_range, gz), ctx)
    todo = [p for p in pts if p.guard_ok]
    eps = _map(_eps_s_task, [(delta, p.rho_c, ctx.subsystem_dims, backend) for p in todo], jobs)
    eps_by_id = {id(p): e for p, e in zip(todo, eps)}
    region = []
    for p in pts:
        e = eps_by_id.get(id(p), float("nan"))
        corr = p.raw - e if p.guard_ok else float("nan")
        region.append(RegionPoint(p.dx, p.dz, float(p.raw), float(corr), bool(p.guard_ok), float(e)))

    # the unshifted catalyst
    base = _evaluate_points(channel, spec, rho_s, eps_c, [0.0], [0.0], ctx)[0]
    eps_s0 = epsilon_s(channel, base.rho_c, ctx, backend=backend)
    return NoiseAssessment(spec.protocol.value, float(eps_s0), float(eps_c), bool(base.guard_ok),
                           float(base.raw), float(base.raw - eps_s0), region)


def region_nonempty(protocol, channel: QuantumChannel, grid: Sequence[int] = (81, 81), *,
                    dx_range: tuple = DX_RANGE, dz_range: tuple = DZ_RANGE,
                    system_state: DensityMatrix | None = None, ctx: TioContext | None = None,
                    backend: str = "clarabel") -> tuple[bool, int]:
    """Whether any grid point is feasible, stopping at the first one found.

    Points with non-positive raw increment are skipped without an SDP since
    ``eps_s >= 0``. Returns the flag and the number of SDPs solved.
    """
    spec = _spec(protocol)
    ctx = ctx or build_mask((0, 1), (0, 1))
    rho_s = system_state if system_state is not None else spec.system_state()
    delta = _non_tio_part(channel, ctx)
    eps_c = epsilon_c(channel, rho_s, ctx, backend=backend)
    gx, gz = (grid, grid) if isinstance(grid, int) else grid
    pts = _evaluate_points(channel, spec, rho_s, eps_c, _grid(dx_range, gx), _grid(dz_range, gz), ctx)
    cand = sorted((p for p in pts if p.guard_ok and p.raw > 0), key=lambda p: -p.raw)
    for k, p in enumerate(cand, 1):
        if p.raw - _eps_s_task((delta, p.rho_c, ctx.subsystem_dims, backend)) > 0:
            return True, k
    return False, len(cand)


@dataclass
class ThresholdReport:
    protocol: str
    p_step: float
    p_bound: float | None           # smallest p on the step grid with an empty region
    history: list                   # (p, nonempty, sdp_count)

    def to_dict(self) -> dict:
        return {"protocol": self.protocol, "p_step": self.p_step, "p_bound": self.p_bound,
                "history": [{"p": p, "nonempty": ok, "sdp_count": n} for p, ok, n in self.history]}

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def noise_threshold(protocol, p_step: float = 0.001, *, p_max: float = 0.05,
                    channel: QuantumChannel | None = None, grid: Sequence[int] = (81, 81),
                    dx_range: tuple = DX_RANGE, dz_range: tuple = DZ_RANGE,
                    ctx: TioContext | None = None, backend: str = "clarabel") -> ThresholdReport:
    """Smallest uniform noise strength at which the feasible catalyst region vanishes.

    ``channel`` defaults to the protocol's ideal channel; noise is added on
    top of it at p = p_step, 2 p_step, ... up to ``p_max``.
    """
    if p_step <= 0:
        raise ValueError("p_step must be positive")
    spec = _spec(protocol)
    ideal = channel or spec.channel()
    history = []
    n = int(round(p_max / p_step))
    for k in range(1, n + 1):
        p = round(k * p_step, 12)
        ok, count = region_nonempty(spec, apply_noise(ideal, NoiseModel.uniform(p)), grid,
                                    dx_range=dx_range, dz_range=dz_range, ctx=ctx, backend=backend)
        history.append((p, ok, count))
        if not ok:
            return ThresholdReport(spec.protocol.value, p_step, p, history)
    return ThresholdReport(spec.protocol.value, p_step, None, history)
