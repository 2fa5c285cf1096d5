"""Simulated state and process tomography with Poisson counting statistics.

Each qubit is measured in the projectors onto |0>, |1>, |+>, |+i>. On the
system-catalyst pair the joint projectors are indexed ``k = 4(i-1) + j``
(1-based) for system factor ``i`` and catalyst factor ``j``. A marginal is
reconstructed from the joint projectors whose other factor is |0> or |1>,
summed over that factor.

Counts for a projector P are Poisson with mean ``rate * duration * Tr(P rho)``.
Random numbers come from ``numpy.random.default_rng`` (PCG64) seeded
explicitly; Monte-Carlo run ``r`` uses seed ``seed + r``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import conic
from .protocols import EVENT_RATE, SETTING_DURATION
from .qcore import (ChiConvention, ChiMatrix, DensityMatrix, QuantumChannel, apply_choi, as_matrix,
                    chi_to_choi, choi_to_chi, density_to_bloch, hermitian_part, partial_trace,
                    process_fidelity)
from .serialization import load_process_matrix

QUBIT_VECTORS = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
)


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


class Subsystem(enum.Enum):
    S = "S"
    C = "C"
    JOINT = "JOINT"


@dataclass(frozen=True)
class MeasurementBasis:
    """Rank-1 joint projectors and how they combine into the measured operators.

    ``labels[k] = (i, j)`` names the 1-based system and catalyst factors. For a
    marginal basis, projectors sharing the target factor are summed.
    """

    projectors: tuple
    labels: tuple
    subsystem: Subsystem

    def __post_init__(self):
        for p in self.projectors:
            if (np.max(np.abs(p @ p - p)) > 1e-12 or np.max(np.abs(p - p.conj().T)) > 1e-12
                    or abs(np.trace(p) - 1) > 1e-12):
                raise ValueError("measurement operators must be rank-1 projectors")

    def __len__(self):
        return len(self.projectors)

    def effective_operators(self) -> tuple[list, list]:
        """Operators on the reconstructed space and the projector indices summed into each."""
        if self.subsystem is Subsystem.JOINT:
            return [np.asarray(p) for p in self.projectors], [[k] for k in range(len(self))]
        pos = 0 if self.subsystem is Subsystem.S else 1
        groups: dict = {}
        for k, lab in enumerate(self.labels):
            groups.setdefault(lab[pos], []).append(k)
        keys = sorted(groups)
        ops = [_proj(QUBIT_VECTORS[i - 1]) for i in keys]
        return ops, [groups[i] for i in keys]


def joint_basis() -> MeasurementBasis:
    labels = tuple((i, j) for i in range(1, 5) for j in range(1, 5))
    projs = tuple(np.kron(_proj(QUBIT_VECTORS[i - 1]), _proj(QUBIT_VECTORS[j - 1])) for i, j in labels)
    return MeasurementBasis(projs, labels, Subsystem.JOINT)


def system_basis() -> MeasurementBasis:
    labels = tuple((i, j) for i in range(1, 5) for j in (1, 2))
    projs = tuple(np.kron(_proj(QUBIT_VECTORS[i - 1]), _proj(QUBIT_VECTORS[j - 1])) for i, j in labels)
    return MeasurementBasis(projs, labels, Subsystem.S)


def catalyst_basis() -> MeasurementBasis:
    labels = tuple((i, j) for i in (1, 2) for j in range(1, 5))
    projs = tuple(np.kron(_proj(QUBIT_VECTORS[i - 1]), _proj(QUBIT_VECTORS[j - 1])) for i, j in labels)
    return MeasurementBasis(projs, labels, Subsystem.C)


def single_qubit_basis() -> MeasurementBasis:
    """The four qubit projectors, for tomography of an isolated qubit."""
    return MeasurementBasis(tuple(_proj(v) for v in QUBIT_VECTORS), tuple((i, 0) for i in range(1, 5)),
                            Subsystem.JOINT)


def process_input_states() -> list[np.ndarray]:
    """The 16 pure two-qubit inputs used for process tomography, as state vectors."""
    s = 1 / np.sqrt(2)
    vecs = [np.eye(4, dtype=complex)[k] for k in range(4)]
    for a, b in ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)):
        for phase in (1, 1j):
            v = np.zeros(4, dtype=complex)
            v[a], v[b] = s, s * phase
            vecs.append(v)
    return vecs


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountRecord:
    label: tuple
    duration: float
    expected_rate: float
    observed_count: int

    def __post_init__(self):
        if self.observed_count < 0:
            raise ValueError("counts are non-negative")


def _components(state) -> list[tuple[float, np.ndarray]]:
    if isinstance(state, (list, tuple)) and state and isinstance(state[0], tuple):
        return [(float(w), np.asarray(s)) for w, s in state]
    return [(1.0, np.asarray(state))]


def expected_counts(state, basis: MeasurementBasis, rate: float = EVENT_RATE,
                    duration: float = SETTING_DURATION) -> np.ndarray:
    """Mean counts per projector; a weighted mixture splits the duration by weight."""
    mean = np.zeros(len(basis))
    for w, rho in _components(state):
        for k, p in enumerate(basis.projectors):
            mean[k] += rate * w * duration * np.real(np.trace(p @ rho))
    return mean


def simulate_counts(state, basis: MeasurementBasis, rate: float = EVENT_RATE,
                    duration: float = SETTING_DURATION, *, seed=None) -> list[CountRecord]:
    """Poisson counts for each projector of ``basis``.

    ``state`` is a density matrix or a list of ``(weight, density matrix)``
    components prepared separately for ``weight * duration`` each; the
    component counts are summed.
    """
    if rate <= 0 or duration <= 0:
        raise ValueError("rate and duration must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = np.zeros(len(basis), dtype=np.int64)
    for w, rho in _components(state):
        lam = np.array([rate * w * duration * max(np.real(np.trace(p @ rho)), 0.0) for p in basis.projectors])
        total += rng.poisson(lam)
    return [CountRecord(lab, duration, rate, int(n)) for lab, n in zip(basis.labels, total)]


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

class Method(enum.Enum):
    LINEAR_INVERSION = "linear_inversion"
    PSD_PROJECTED = "psd_projected"


@dataclass
class TomographyResult:
    reconstructed: object              # DensityMatrix or ChiMatrix
    method: Method
    linear: np.ndarray = field(repr=False, default=None)
    mc_std: dict | None = None
    choi: np.ndarray | None = field(repr=False, default=None)

    def bloch(self):
        return density_to_bloch(np.asarray(self.reconstructed))


def project_to_density(m: np.ndarray) -> np.ndarray:
    """Closest unit-trace PSD matrix in the 2-norm: truncate negative eigenvalues
    and spread their weight uniformly over the rest."""
    w, v = np.linalg.eigh(hermitian_part(m))
    w = w / np.sum(w)
    order = np.argsort(w)[::-1]
    lam = w[order]
    n = len(lam)
    acc = 0.0
    i = n
    while i > 0 and lam[i - 1] + acc / i < 0:
        acc += lam[i - 1]
        lam[i - 1] = 0.0
        i -= 1
    lam[:i] += acc / i
    vs = v[:, order]
    return (vs * lam) @ vs.conj().T


def linear_inversion(values: np.ndarray, operators: Sequence[np.ndarray]) -> np.ndarray:
    """Hermitian X with Tr(O_k X) = values[k] in the least-squares sense."""
    d = operators[0].shape[0]
    basis = conic.hermitian_basis(d)
    a = np.array([[np.real(np.trace(o @ b)) for b in basis] for o in operators])
    if np.linalg.matrix_rank(a) < d * d:
        raise ValueError("measurement set is not informationally complete")
    x = np.linalg.lstsq(a, np.asarray(values, dtype=float), rcond=None)[0]
    return hermitian_part(conic.from_coords(x, basis))


def reconstruct_state(counts: Sequence[CountRecord] | np.ndarray, basis: MeasurementBasis, *,
                      psd: bool = True) -> TomographyResult:
    """Linear inversion of the counts, optionally followed by PSD projection.

    ``counts`` may also be a plain array of (possibly non-integer) mean counts.
    """
    if len(counts) and isinstance(counts[0], CountRecord):
        counts = [c.observed_count for c in counts]
    n = np.asarray(counts, dtype=float)
    ops, groups = basis.effective_operators()
    vals = np.array([n[g].sum() for g in groups])
    raw = linear_inversion(vals, ops)
    tr = np.real(np.trace(raw))
    if tr <= 0:
        raise ValueError("no counts recorded")
    lin = raw / tr
    if psd:
        return TomographyResult(DensityMatrix(project_to_density(lin), validate=False), Method.PSD_PROJECTED, lin)
    return TomographyResult(DensityMatrix(lin, validate=False), Method.LINEAR_INVERSION, lin)


def state_tomography(state, basis: MeasurementBasis, *, seed=None, rate: float = EVENT_RATE,
                     duration: float = SETTING_DURATION, noiseless: bool = False,
                     psd: bool = True) -> TomographyResult:
    if noiseless:
        return reconstruct_state(expected_counts(state, basis, rate, duration), basis, psd=psd)
    return reconstruct_state(simulate_counts(state, basis, rate, duration, seed=seed), basis, psd=psd)


def bloch_monte_carlo(state, basis: MeasurementBasis, runs: int = 500, seed: int = 0, *,
                      rate: float = EVENT_RATE, duration: float = SETTING_DURATION) -> TomographyResult:
    """Noiseless reconstruction with Monte-Carlo standard deviations of the Bloch components."""
    res = state_tomography(state, basis, rate=rate, duration=duration, noiseless=True)
    samples = np.array([state_tomography(state, basis, seed=seed + r, rate=rate, duration=duration).bloch()
                        for r in range(runs)])
    res.mc_std = {k: float(np.std(samples[:, i], ddof=1)) for i, k in enumerate("xyz")}
    return res


# ---------------------------------------------------------------------------
# process tomography
# ---------------------------------------------------------------------------

def _elementary_coefficients(inputs: Sequence[np.ndarray]) -> np.ndarray:
    """C[m, i*d + j] with |psi_m><psi_m| = sum_ij C[m, ij] |i><j|."""
    return np.array([np.outer(v, v.conj()).reshape(-1) for v in inputs])


def choi_from_outputs(outputs: Sequence[np.ndarray], inputs: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Choi matrix of the linear map sending each input projector to the matching output."""
    inputs = inputs if inputs is not None else process_input_states()
    d = inputs[0].shape[0]
    c = _elementary_coefficients(inputs)
    cinv = np.linalg.inv(c)
    outs = np.array([np.asarray(o) for o in outputs])
    images = np.einsum("km,mab->kab", cinv, outs)      # E(|i><j|) for k = i*d + j
    dout = outs.shape[1]
    j = np.zeros((d * dout, d * dout), dtype=complex)
    for k in range(d * d):
        i, jj = divmod(k, d)
        j[i * dout:(i + 1) * dout, jj * dout:(jj + 1) * dout] = images[k]
    return j


def nearest_cptp_choi(choi, dim_in: int, *, backend: str = "clarabel") -> np.ndarray:
    """CPTP Choi matrix closest to ``choi`` in operator norm."""
    t = as_matrix(choi)
    n = t.shape[0]
    dout = n // dim_in
    eqs = []
    for r in range(dim_in):
        for c in range(r, dim_in):
            def tp(x, r=r, c=c):
                return partial_trace(x["J"], (dim_in, dout), keep=0)[r, c]
            eqs.append((lambda x, f=tp: f(x).real, float(r == c)))
            if r != c:
                eqs.append((lambda x, f=tp: f(x).imag, 0.0))

    def dist(x):
        s = x["s"][0, 0].real * np.eye(n)
        delta = x["J"] - t
        return np.block([[s, delta], [delta.conj().T, s]])

    prob = conic.SdpProblem([("J", n), ("s", 1)], lambda x: x["s"][0, 0].real, eqs, [dist], ("J",), "min")
    sol = conic.solve(prob, backend=backend)
    if not sol.ok:
        raise conic.SolverError(f"CPTP projection: solver returned {sol.status.value}", sol)
    return hermitian_part(sol.variable_values["J"])


def process_tomography(channel: QuantumChannel, *, seed=None, rate: float = EVENT_RATE,
                       duration: float = SETTING_DURATION, noiseless: bool = False,
                       project: bool = False, convention: ChiConvention = ChiConvention.ELEMENTARY_COL_MAJOR,
                       backend: str = "clarabel") -> TomographyResult:
    """Send the 16 inputs through ``channel``, tomograph each output, invert for chi."""
    if channel.dim_in != 4:
        raise ValueError("process tomography is set up for a four-dimensional input")
    inputs = process_input_states()
    basis = joint_basis()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ops, groups = basis.effective_operators()
    outs = []
    for v in inputs:
        rho_out = channel(np.outer(v, v.conj()))
        if noiseless:
            n = expected_counts(rho_out, basis, rate, duration)
        else:
            n = np.array([c.observed_count for c in simulate_counts(rho_out, basis, rate, duration, seed=rng)])
        # scale by the known exposure rather than the trace, so trace loss is kept
        vals = np.array([n[g].sum() for g in groups]) / (rate * duration)
        outs.append(linear_inversion(vals, ops))
    j = choi_from_outputs(outs, inputs)
    method = Method.LINEAR_INVERSION
    if project:
        j = nearest_cptp_choi(j, channel.dim_in, backend=backend)
        method = Method.PSD_PROJECTED
    return TomographyResult(choi_to_chi(j, convention), method, j, choi=j)


# ---------------------------------------------------------------------------
# published process matrix
# ---------------------------------------------------------------------------

@dataclass
class ConventionResolution:
    chi: ChiMatrix
    convention: ChiConvention
    fidelity: float
    fidelities: dict

    @property
    def choi(self) -> np.ndarray:
        return chi_to_choi(self.chi)


def resolve_chi_convention(mp=None, ideal: QuantumChannel | None = None, *, mp_im=None,
                           min_fidelity: float = 0.9) -> ConventionResolution:
    """Pick the chi ordering under which the data best matches ``ideal``.

    ``mp`` is a 16x16 complex array, a path to the real-part CSV (with
    ``mp_im`` the imaginary part), or ``None`` for the bundled tables.
    Conventions are tried in enum order; a later one must beat the current
    best by more than 1e-12 to replace it.
    """
    from .protocols import main_channel

    if mp is None or isinstance(mp, (str, bytes)) or hasattr(mp, "__fspath__"):
        data = load_process_matrix(mp, mp_im)
    else:
        data = as_matrix(mp)
    ideal = ideal or main_channel()
    fids = {}
    best = None
    for conv in ChiConvention:
        chi = ChiMatrix(data, conv)
        f = process_fidelity(chi_to_choi(chi), ideal.choi, ideal.dim_in)
        fids[conv.value] = f
        if best is None or f > best[2] + 1e-12:
            best = (chi, conv, f)
    if best[2] < min_fidelity:
        raise ValueError(f"convention resolution failed (best fidelity {best[2]:.4f})")
    return ConventionResolution(best[0], best[1], best[2], fids)


def measured_channel(resolution: ConventionResolution | None = None) -> QuantumChannel:
    """The published process as a Hermiticity-preserving map (it is PSD and TP only approximately)."""
    res = resolution or resolve_chi_convention()
    return QuantumChannel(hermitian_part(res.choi), 4, 4, hermiticity_preserving_only=True)


# ---------------------------------------------------------------------------
# Monte-Carlo error bars
# ---------------------------------------------------------------------------

@dataclass
class MonteCarloSummary:
    mean: float
    std: float
    runs: int
    seed: int
    samples: list = field(repr=False, default_factory=list)


def _system_coherence(state, basis, seed, rate, duration) -> float:
    b = state_tomography(state, basis, seed=seed, rate=rate, duration=duration).bloch()
    return math.hypot(b.x, b.y)


def _mc_run(args):
    inputs, outputs, eps_s, seed, rate, duration = args
    rng = np.random.default_rng(seed)
    basis = system_basis()
    r_in = _system_coherence(inputs, basis, rng, rate, duration)
    r_out = _system_coherence(outputs, basis, rng, rate, duration)
    return r_out - r_in - eps_s


def monte_carlo_delta(channel: QuantumChannel, system_state, catalyst, eps_s: float, *, runs: int = 500,
                      seed: int = 0, rate: float = EVENT_RATE, duration: float = SETTING_DURATION,
                      jobs: int = 1) -> MonteCarloSummary:
    """Spread of the corrected increment under Poisson counting noise.

    ``catalyst`` is a density matrix or a ``(weight, density matrix)`` list
    of separately prepared components. Every run resamples the system
    tomography of the input and of the output and subtracts the fixed
    ``eps_s``.
    """
    if runs < 2:
        raise ValueError("runs must be >= 2")
    rs = np.asarray(system_state)
    comps = _components(catalyst)
    inputs = [(w, np.kron(rs, rc)) for w, rc in comps]
    d = channel.dim_in
    outputs = [(w, apply_choi(channel.choi, rho, d, channel.dim_out)) for w, rho in inputs]
    tasks = [(inputs, outputs, eps_s, seed + r, rate, duration) for r in range(runs)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            vals = list(ex.map(_mc_run, tasks))
    else:
        vals = [_mc_run(t) for t in tasks]
    mean = math.fsum(vals) / runs
    var = math.fsum((v - mean) ** 2 for v in vals) / (runs - 1)
    return MonteCarloSummary(mean, math.sqrt(var), runs, seed, vals)
