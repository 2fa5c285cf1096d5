"""Numerical tolerances shared across the package."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-9
    bloch_norm: float = 1e-9
    cptp: float = 1e-9
    roundtrip: float = 1e-10
    # measured data (process matrices from tomography) is only approximately Hermitian
    measured_hermitian: float = 1e-6
    eig_hermitian: float = 1e-6
    mask: float = 1e-12
    sdp_residual: float = 1e-8
    sdp_gap: float = 1e-7
    tio_psd_flag: float = 1e-6


DEFAULT = Tolerances()
