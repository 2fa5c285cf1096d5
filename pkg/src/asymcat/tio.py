"""Translationally invariant operations (TIO) for a fixed Hamiltonian.

A channel commutes with the time translations ``exp(-iHt)`` exactly when its
Choi matrix is supported on entries whose input and output Bohr frequencies
match, ``J = J * M`` with the 0/1 mask

    M[(i,a),(j,b)] = 1   iff   E_i - E_j = E_a - E_b.

Equivalently J is block diagonal over sectors of constant ``E_a - E_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import DEFAULT
from .qcore import (BlochVector, NotPhysicalError, QuantumChannel, as_matrix, hermitian_part,
                    partial_trace)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Energies of the basis states, in units of a fixed energy quantum."""

    energies: tuple

    def __post_init__(self):
        e = tuple(float(v) for v in self.energies)
        if not e or not all(math.isfinite(v) for v in e):
            raise ValueError("energies must be a non-empty list of finite numbers")
        object.__setattr__(self, "energies", e)

    @property
    def dim(self) -> int:
        return len(self.energies)

    @classmethod
    def qubit(cls) -> "HamiltonianSpec":
        return cls((0.0, 1.0))

    def combine(self, other: "HamiltonianSpec") -> "HamiltonianSpec":
        """Spectrum of H (x) 1 + 1 (x) H' on the tensor product."""
        return HamiltonianSpec(tuple(a + b for a in self.energies for b in other.energies))


@dataclass(frozen=True)
class TioContext:
    h_system: HamiltonianSpec
    h_catalyst: HamiltonianSpec | None
    h_total: HamiltonianSpec
    mask: np.ndarray = field(repr=False)
    sectors: tuple = field(repr=False)   # ((omega, (choi indices...)), ...)

    @property
    def dim(self) -> int:
        return self.h_total.dim

    @property
    def subsystem_dims(self) -> tuple:
        if self.h_catalyst is None:
            return (self.h_system.dim,)
        return (self.h_system.dim, self.h_catalyst.dim)


def _cluster(values: np.ndarray, tol: float) -> np.ndarray:
    """Label values so that entries within ``tol`` of a neighbour share a label."""
    order = np.argsort(values, kind="stable")
    labels = np.empty(len(values), dtype=int)
    lab, prev = -1, None
    for k in order:
        if prev is None or values[k] - prev > tol:
            lab += 1
        labels[k] = lab
        prev = values[k]
    return labels


def build_mask(hs: HamiltonianSpec | Sequence[float] | None = None,
               hc: HamiltonianSpec | Sequence[float] | None = None, *,
               tol: float = DEFAULT.mask) -> TioContext:
    """Bohr-frequency mask for channels on the system, or on system (x) catalyst if ``hc`` is given."""
    hs = HamiltonianSpec.qubit() if hs is None else hs
    hs = hs if isinstance(hs, HamiltonianSpec) else HamiltonianSpec(tuple(hs))
    if hc is not None and not isinstance(hc, HamiltonianSpec):
        hc = HamiltonianSpec(tuple(hc))
    total = hs if hc is None else hs.combine(hc)
    e = np.array(total.energies)
    d = len(e)
    # Choi index (i, a) -> i*d + a carries Bohr frequency e_a - e_i
    omega = (e[None, :] - e[:, None]).reshape(-1)
    labels = _cluster(omega, tol)
    mask = (labels[:, None] == labels[None, :]).astype(float)
    sectors = []
    for lab in range(labels.max() + 1):
        idx = tuple(int(k) for k in np.flatnonzero(labels == lab))
        sectors.append((float(np.mean(omega[list(idx)])), idx))
    mask.setflags(write=False)
    return TioContext(hs, hc, total, mask, tuple(sectors))


def _choi(ch) -> np.ndarray:
    return np.asarray(ch.choi) if hasattr(ch, "choi") else as_matrix(ch)


def tio_deviation(ch, ctx: TioContext) -> float:
    """Frobenius norm of the Choi entries outside the mask."""
    j = _choi(ch)
    if j.shape != ctx.mask.shape:
        raise ValueError(f"Choi shape {j.shape} does not match mask {ctx.mask.shape}")
    return float(np.linalg.norm(j - j * ctx.mask))


def is_tio(ch, ctx: TioContext, tol: float = DEFAULT.mask) -> tuple[bool, float]:
    dev = tio_deviation(ch, ctx)
    return dev <= tol, dev


class TioProjectionError(NotPhysicalError):
    """The masked Choi matrix is not PSD beyond tolerance."""

    def __init__(self, message, masked: QuantumChannel, min_eigenvalue: float):
        super().__init__(message)
        self.masked = masked
        self.min_eigenvalue = min_eigenvalue


def tio_projection(ch: QuantumChannel, ctx: TioContext, *, repair: bool = False,
                   tol: float = DEFAULT.tio_psd_flag, backend: str = "clarabel") -> QuantumChannel:
    """The map with Choi matrix ``J * M``.

    Masking keeps a PSD, trace-preserving Choi matrix PSD and trace
    preserving; both are re-checked here. If the masked matrix has an
    eigenvalue below ``-tol`` (noisy tomographic input), a
    ``TioProjectionError`` is raised unless ``repair`` is set, in which case
    the closest CPTP TIO map in operator norm is returned instead.
    """
    j = _choi(ch)
    jm = j * ctx.mask
    hp = bool(getattr(ch, "hermiticity_preserving_only", False))
    masked = QuantumChannel(jm, ch.dim_in, ch.dim_out, hermiticity_preserving_only=hp)
    if hp:
        return masked
    w = float(np.linalg.eigvalsh(hermitian_part(jm))[0])
    if w < -tol:
        if repair:
            return nearest_tio_channel(jm, ctx, backend=backend)
        raise TioProjectionError(f"masked Choi matrix has eigenvalue {w:.3g}", masked, w)
    return masked


def sector_blocks(j: np.ndarray, ctx: TioContext) -> list[np.ndarray]:
    return [j[np.ix_(idx, idx)] for _, idx in ctx.sectors]


def assemble_from_sectors(blocks: Sequence[np.ndarray], ctx: TioContext) -> np.ndarray:
    n = ctx.dim ** 2
    j = np.zeros((n, n), dtype=complex)
    for (_, idx), b in zip(ctx.sectors, blocks):
        j[np.ix_(idx, idx)] = b
    return j


def nearest_tio_channel(target, ctx: TioContext, *, backend: str = "clarabel") -> QuantumChannel:
    """CPTP TIO map minimizing the operator-norm distance of its Choi matrix to ``target``."""
    from .conic import SdpProblem, SolverError, solve

    t = as_matrix(target)
    d = ctx.dim
    names = [(f"B{k}", len(idx)) for k, (_, idx) in enumerate(ctx.sectors)]

    def choi(x):
        return assemble_from_sectors([x[nm] for nm, _ in names], ctx)

    def dist_block(x):
        delta = choi(x) - t
        s = x["s"][0, 0].real * np.eye(d * d)
        return np.block([[s, delta], [delta.conj().T, s]])

    eqs = []
    for r in range(d):
        for c in range(r, d):
            def tp(x, r=r, c=c):
                return partial_trace(choi(x), (d, d), keep=0)[r, c]
            eqs.append((lambda x, f=tp: f(x).real, float(r == c)))
            if r != c:
                eqs.append((lambda x, f=tp: f(x).imag, 0.0))
    prob = SdpProblem(variables=names + [("s", 1)], objective=lambda x: x["s"][0, 0].real,
                      equalities=eqs, psd=[dist_block], psd_variables=tuple(nm for nm, _ in names),
                      sense="min")
    sol = solve(prob, backend=backend)
    if not sol.ok:
        raise SolverError(f"TIO repair: solver returned {sol.status.value}", sol)
    j = hermitian_part(choi(sol.variable_values))
    return QuantumChannel(j, d, d)


def random_tio_channel(ctx: TioContext, rng, n_kraus: int = 3) -> QuantumChannel:
    """A random CPTP TIO map, built by masking a random channel."""
    from .qcore import random_channel

    ch = random_channel(ctx.dim, ctx.dim, rng, n_kraus=n_kraus)
    return QuantumChannel(ch.choi * ctx.mask, ctx.dim, ctx.dim)


def write_mask_csv(ctx: TioContext, path) -> None:
    rows = [",".join(str(int(v)) for v in row) for row in ctx.mask]
    Path(path).write_text("\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# qubit cone conditions
# ---------------------------------------------------------------------------

def _coherence_factor(source: BlochVector, target: BlochVector) -> float:
    """max{sqrt((1-z')/(1-z)), sqrt((1+z')/(1+z))} with primes on the source.

    A vanishing denominator means the target is a pole state; the ratio is
    then dropped when its numerator vanishes too and is infinite otherwise.
    """
    zs, zt = source[2], target[2]
    best = 0.0
    for num, den in ((1 - zs, 1 - zt), (1 + zs, 1 + zt)):
        if den <= 0:
            if num <= 0:
                continue
            return math.inf
        best = max(best, math.sqrt(max(num, 0.0) / den))
    return best


def tio_cone_lhs(source, target) -> float:
    """Coherence the source must carry for the target to be TIO reachable."""
    source, target = BlochVector(*source), BlochVector(*target)
    c = math.hypot(target[0], target[1])
    if c == 0:
        return 0.0
    return c * _coherence_factor(source, target)


def qubit_tio_reachable(source, target, margin: float = 0.0) -> bool:
    """Whether a TIO maps the qubit ``source`` (x', y', z') to ``target`` (x, y, z)."""
    source = BlochVector(*source)
    return tio_cone_lhs(source, target) <= math.hypot(source[0], source[1]) - margin


@dataclass(frozen=True)
class ReturnGuard:
    ok: bool
    lhs: float
    rhs: float


def catalyst_return_guard(catalyst_in, catalyst_out, eps_c: float) -> ReturnGuard:
    """Sufficient check that the returned catalyst can be freely restored.

    Uses only the x component of the returned catalyst, ``lhs <= |x'| - eps_c``,
    which is stricter than the exact cone condition.
    """
    lhs = tio_cone_lhs(catalyst_out, catalyst_in)
    rhs = abs(BlochVector(*catalyst_out)[0]) - eps_c
    return ReturnGuard(lhs <= rhs, lhs, rhs)
