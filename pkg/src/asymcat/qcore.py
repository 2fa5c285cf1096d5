"""Dense linear algebra and state/channel representations.

Conventions used throughout the package:

* Composite indices are row-major with the first factor major, ``i = i_a * dim_b + i_b``.
  For the system-catalyst pair this gives ``|0> = |0_S 0_C>, |1> = |0_S 1_C>, ...``.
* The Choi matrix of a map ``E`` from ``d_in`` to ``d_out`` dimensions is

      J = sum_ij |i><j| (x) E(|i><j|),

  i.e. ``J[i*d_out + a, j*d_out + b] = <a|E(|i><j|)|b>``. The input factor comes first.
  With this layout ``E(rho) = Tr_in[(rho^T (x) I) J]`` and trace preservation reads
  ``Tr_out J = I_in``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .config import DEFAULT

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NotPhysicalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# basic helpers
# ---------------------------------------------------------------------------

def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def hermitian_eig(m, tol: float = DEFAULT.eig_hermitian) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of an (approximately) Hermitian matrix.

    The input is symmetrized as ``(m + m^dagger)/2`` first; inputs further than
    ``tol`` from Hermitian raise :class:`NotHermitianError`. Eigenvalues are
    returned in descending order with matching eigenvector columns.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"non-square matrix {a.shape}")
    dev = np.max(np.abs(a - dagger(a))) if a.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (deviation {dev:.3g})")
    w, v = np.linalg.eigh(hermitian_part(a))
    return w[::-1], v[:, ::-1]


def psd_sqrt(m) -> np.ndarray:
    w, v = hermitian_eig(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ dagger(v)


def trace_norm(m) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(m), compute_uv=False)))


def tensor(*ops):
    """Kronecker product with the first factor major (row-major composite index)."""
    mats = [np.asarray(op.mat if isinstance(op, DensityMatrix) else op) for op in ops]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    if all(isinstance(op, DensityMatrix) for op in ops):
        return DensityMatrix(out)
    return out


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order and ``keep`` is an
    index or a sequence of indices into it.
    """
    a = as_matrix(m.mat if isinstance(m, DensityMatrix) else m)
    dims = [int(d) for d in dims]
    n = int(np.prod(dims))
    if a.shape != (n, n):
        raise DimensionError(f"matrix shape {a.shape} does not match dims {dims}")
    keep = [keep] if np.isscalar(keep) else list(keep)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep={keep} out of range for {len(dims)} subsystems")
    k = len(dims)
    t = a.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:k])
    col = list(letters[k:2 * k])
    for i in range(k):
        if i not in keep:
            col[i] = row[i]
    out_idx = "".join(row[i] for i in sorted(keep)) + "".join(col[i] for i in sorted(keep))
    res = np.einsum("".join(row) + "".join(col) + "->" + out_idx, t)
    dk = int(np.prod([dims[i] for i in sorted(keep)]))
    return res.reshape(dk, dk)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))

    @property
    def transverse(self) -> float:
        """Length of the equatorial component, which equals 2|rho_01|."""
        return float(np.hypot(self.x, self.y))

    def to_density(self) -> "DensityMatrix":
        return bloch_to_density(self)


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density matrix."""

    mat: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        a = as_matrix(self.mat)
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"density matrix must be square, got {a.shape}")
        if self.validate:
            check_density(a)
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "mat", a)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def bloch(self) -> BlochVector:
        return density_to_bloch(self)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.mat.shape == other.mat.shape and bool(np.all(self.mat == other.mat))

    def __hash__(self):
        return hash(self.mat.tobytes())


def check_density(a: np.ndarray, tol=DEFAULT) -> None:
    if np.max(np.abs(a - dagger(a))) > tol.hermitian:
        raise NotHermitianError("density matrix is not Hermitian")
    if abs(np.trace(a) - 1) > tol.trace:
        raise NotPhysicalError(f"density matrix trace {np.trace(a).real:.12g} != 1")
    wmin = np.linalg.eigvalsh(hermitian_part(a))[0]
    if wmin < -tol.psd:
        raise NotPhysicalError(f"density matrix has negative eigenvalue {wmin:.3g}")


def bloch_to_density(b, renormalize: bool = False) -> DensityMatrix:
    """``(I + x X + y Y + z Z)/2``.

    With ``renormalize=True`` a vector whose length exceeds 1 by at most 1e-3
    (values printed to four decimals) is scaled back onto the unit sphere.
    """
    x, y, z = (float(v) for v in b)
    n2 = x * x + y * y + z * z
    if renormalize and 1 < n2 <= (1 + 1e-3) ** 2:
        s = 1 / np.sqrt(n2)
        x, y, z, n2 = x * s, y * s, z * s, 1.0
    if n2 > (1 + DEFAULT.bloch_norm) ** 2:
        raise NotPhysicalError(f"Bloch vector norm {np.sqrt(n2):.6g} exceeds 1")
    rho = 0.5 * (SIGMA_I + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)
    return DensityMatrix(rho, validate=n2 <= 1)


def density_to_bloch(rho) -> BlochVector:
    a = np.asarray(rho, dtype=complex)
    if a.shape != (2, 2):
        raise DimensionError("Bloch vectors are defined for qubits only")
    return BlochVector(float(2 * a[0, 1].real), float(-2 * a[0, 1].imag), float((a[0, 0] - a[1, 1]).real))


def bloch(x, y, z, renormalize: bool = False) -> DensityMatrix:
    return bloch_to_density((x, y, z), renormalize=renormalize)


def pure_state(vec) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def fidelity(a, b) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.

    Slightly non-PSD inputs (measured data) are handled by clipping negative
    eigenvalues inside the square roots.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"fidelity of mismatched shapes {a.shape} and {b.shape}")
    sa = psd_sqrt(a)
    w, _ = hermitian_eig(sa @ hermitian_part(b) @ sa, tol=np.inf)
    return float(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def kraus_to_choi(kraus: Sequence[np.ndarray]) -> np.ndarray:
    ops = [as_matrix(k) for k in kraus]
    if not ops:
        raise ValueError("empty Kraus list")
    dout, din = ops[0].shape
    if any(k.shape != (dout, din) for k in ops):
        raise DimensionError("Kraus operators must share one shape")
    vecs = np.stack([k.T.reshape(-1) for k in ops])  # v[(i, a)] = K[a, i]
    return vecs.T @ vecs.conj()


def choi_to_kraus(choi, dim_in: int, dim_out: int | None = None, tol: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators from the eigen-decomposition of a PSD Choi matrix.

    Eigenvalues below ``tol`` (relative to the largest) are dropped, so the
    number of operators is at most ``rank(J)``.
    """
    j = as_matrix(choi)
    dim_out = dim_out or j.shape[0] // dim_in
    if j.shape != (dim_in * dim_out,) * 2:
        raise DimensionError(f"Choi shape {j.shape} inconsistent with dims ({dim_in}, {dim_out})")
    w, v = hermitian_eig(j, tol=DEFAULT.measured_hermitian)
    scale = max(abs(w[0]), 1.0)
    if w[-1] < -DEFAULT.psd * scale:
        raise NotPhysicalError(f"Choi matrix is not PSD (min eigenvalue {w[-1]:.3g})")
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > tol * scale:
            ops.append(np.sqrt(lam) * vec.reshape(dim_in, dim_out).T)
    return ops


def apply_choi(choi: np.ndarray, rho, dim_in: int, dim_out: int) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    return np.einsum("ij,iajb->ab", r, np.asarray(choi).reshape(dim_in, dim_out, dim_in, dim_out))


def choi_of_map(fn, dim_in: int, dim_out: int) -> np.ndarray:
    """Assemble a Choi matrix by applying a linear map to each |i><j|."""
    j = np.zeros((dim_in * dim_out,) * 2, dtype=complex)
    for i in range(dim_in):
        for k in range(dim_in):
            e = np.zeros((dim_in, dim_in), dtype=complex)
            e[i, k] = 1
            j[i * dim_out:(i + 1) * dim_out, k * dim_out:(k + 1) * dim_out] = fn(e)
    return j


@dataclass(frozen=True)
class QuantumChannel:
    """A linear map stored canonically by its Choi matrix.

    ``hermiticity_preserving_only`` marks maps such as channel differences,
    for which complete positivity and trace preservation are not expected.
    """

    choi: np.ndarray
    dim_in: int
    dim_out: int
    kraus: tuple | None = None
    hermiticity_preserving_only: bool = False

    def __post_init__(self):
        c = as_matrix(self.choi).copy()
        if c.shape != (self.dim_in * self.dim_out,) * 2:
            raise DimensionError(f"Choi shape {c.shape} inconsistent with dims ({self.dim_in}, {self.dim_out})")
        c.setflags(write=False)
        object.__setattr__(self, "choi", c)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "QuantumChannel":
        ops = tuple(as_matrix(k) for k in kraus)
        dout, din = ops[0].shape
        return cls(kraus_to_choi(ops), din, dout, kraus=ops)

    @classmethod
    def from_choi(cls, choi, dim_in: int, dim_out: int | None = None, *,
                  hermiticity_preserving_only: bool = False) -> "QuantumChannel":
        c = as_matrix(choi)
        dim_out = dim_out or c.shape[0] // dim_in
        return cls(c, dim_in, dim_out, hermiticity_preserving_only=hermiticity_preserving_only)

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls.from_kraus([np.eye(dim)])

    @classmethod
    def unitary(cls, u) -> "QuantumChannel":
        return cls.from_kraus([as_matrix(u)])

    def kraus_ops(self) -> list[np.ndarray]:
        if self.kraus is not None:
            return list(self.kraus)
        if self.hermiticity_preserving_only:
            raise NotPhysicalError("hermiticity-preserving maps have no Kraus form")
        return choi_to_kraus(self.choi, self.dim_in, self.dim_out)

    def __call__(self, rho) -> np.ndarray:
        return apply_choi(self.choi, rho, self.dim_in, self.dim_out)

    def __sub__(self, other: "QuantumChannel") -> "QuantumChannel":
        return QuantumChannel(self.choi - other.choi, self.dim_in, self.dim_out,
                              hermiticity_preserving_only=True)

    def __add__(self, other: "QuantumChannel") -> "QuantumChannel":
        return QuantumChannel(self.choi + other.choi, self.dim_in, self.dim_out,
                              hermiticity_preserving_only=True)

    def compose(self, after: "QuantumChannel") -> "QuantumChannel":
        """The map ``after o self``."""
        if after.dim_in != self.dim_out:
            raise DimensionError("composition dimension mismatch")
        j = choi_of_map(lambda e: after(self(e)), self.dim_in, after.dim_out)
        hp = self.hermiticity_preserving_only or after.hermiticity_preserving_only
        return QuantumChannel(j, self.dim_in, after.dim_out, hermiticity_preserving_only=hp)

    def tp_deviation(self) -> float:
        t = partial_trace(self.choi, (self.dim_in, self.dim_out), keep=0)
        return float(np.max(np.abs(t - np.eye(self.dim_in))))

    def cp_deviation(self) -> float:
        """Magnitude of the most negative Choi eigenvalue (0 when PSD)."""
        w = np.linalg.eigvalsh(hermitian_part(self.choi))
        return float(max(0.0, -w[0]))

    def is_cptp(self, tol: float = DEFAULT.cptp) -> bool:
        return self.cp_deviation() <= tol and self.tp_deviation() <= tol


# ---------------------------------------------------------------------------
# process (chi) matrices
# ---------------------------------------------------------------------------

class ChiConvention(enum.Enum):
    """Ordering of the elementary operator basis ``{|r><s|}`` used for chi.

    ROW_MAJOR indexes ``|r><s|`` as ``r*d + s``; COL_MAJOR as ``s*d + r``
    (column stacking). The ``_CONJ`` variants store the complex conjugate.
    """

    ELEMENTARY_ROW_MAJOR = "row_major"
    ELEMENTARY_COL_MAJOR = "col_major"
    ELEMENTARY_ROW_MAJOR_CONJ = "row_major_conj"
    ELEMENTARY_COL_MAJOR_CONJ = "col_major_conj"

    @property
    def conjugated(self) -> bool:
        return self.value.endswith("_conj")

    @property
    def row_major(self) -> bool:
        return self.value.startswith("row")


@dataclass(frozen=True)
class ChiMatrix:
    mat: np.ndarray
    convention: ChiConvention

    def __post_init__(self):
        if not isinstance(self.convention, ChiConvention):
            raise ValueError(f"unknown chi convention {self.convention!r}")
        a = as_matrix(self.mat)
        d2 = a.shape[0]
        d = int(round(np.sqrt(d2)))
        if a.shape != (d2, d2) or d * d != d2:
            raise DimensionError(f"chi matrix must be d^2 x d^2, got {a.shape}")
        if np.max(np.abs(a - dagger(a))) > DEFAULT.measured_hermitian:
            raise NotHermitianError("chi matrix is not Hermitian")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "mat", a)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def system_dim(self) -> int:
        return int(round(np.sqrt(self.dim)))


def _shuffle(m: np.ndarray, d: int) -> np.ndarray:
    # swaps the two factors of each composite index: X[(i,a),(j,b)] -> X[(a,i),(b,j)]
    return m.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)


def chi_to_choi(chi: ChiMatrix) -> np.ndarray:
    """Choi matrix of ``E(rho) = sum_mn chi_mn E_m rho E_n^dagger``."""
    if not isinstance(chi.convention, ChiConvention):
        raise ValueError(f"unknown chi convention {chi.convention!r}")
    m = np.conj(chi.mat) if chi.convention.conjugated else np.array(chi.mat)
    d = chi.system_dim
    # with E_m = |r><s|, <a|E(|i><j|)|b> = chi[(a,i),(b,j)] in (row, column) labels
    return _shuffle(m, d) if chi.convention.row_major else m


def choi_to_chi(choi, convention: ChiConvention = ChiConvention.ELEMENTARY_COL_MAJOR) -> ChiMatrix:
    if not isinstance(convention, ChiConvention):
        raise ValueError(f"unknown chi convention {convention!r}")
    j = as_matrix(choi)
    d = int(round(np.sqrt(j.shape[0])))
    m = _shuffle(j, d) if convention.row_major else j.copy()
    if convention.conjugated:
        m = np.conj(m)
    return ChiMatrix(m, convention)


def process_fidelity(choi_a, choi_b, dim_in: int) -> float:
    """Fidelity between the normalized Choi states of two channels."""
    a, b = as_matrix(choi_a), as_matrix(choi_b)
    # normalize by the actual trace: measured or rounded maps are only nearly trace preserving
    return fidelity(a / np.trace(a).real, b / np.trace(b).real)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    r = g @ dagger(g)
    return DensityMatrix(r / np.trace(r).real, validate=False)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(dim_in: int, dim_out: int, rng: np.random.Generator, n_kraus: int = 3) -> QuantumChannel:
    """Random CPTP map built from a random isometry."""
    u = random_unitary(dim_out * n_kraus, rng)[:, :dim_in]
    ops = [u[k * dim_out:(k + 1) * dim_out, :] for k in range(n_kraus)]
    return QuantumChannel.from_kraus(ops)
