"""Published protocol data: input states, catalysts and Kraus operators.

All numbers are given to four decimals in the source, so the Kraus sets are
trace preserving only to about 2e-3 and the pure system states are rescaled
onto the Bloch sphere.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .qcore import BlochVector, DensityMatrix, QuantumChannel, bloch


class Protocol(enum.Enum):
    MAIN = "main"
    CASE1 = "case1"
    CASE2 = "case2"


@dataclass(frozen=True)
class ProtocolSpec:
    protocol: Protocol
    system: BlochVector
    catalyst: BlochVector
    kraus: tuple
    ideal_increment: float

    def system_state(self) -> DensityMatrix:
        return bloch(*self.system, renormalize=True)

    def catalyst_state(self, dx: float = 0.0, dz: float = 0.0) -> DensityMatrix:
        return bloch(self.catalyst.x + dx, self.catalyst.y, self.catalyst.z + dz)

    def channel(self) -> QuantumChannel:
        return QuantumChannel.from_kraus(self.kraus)


K0_MAIN = np.array([
    [1, 0, 0, 0],
    [0, -0.1573, 0.4029, 0],
    [0, -0.3278, 0.8400, 0],
    [0, 0, 0, 0.7445],
])
K1_MAIN = np.array([
    [0, 0.9315, 0.3636, 0],
    [0, 0, 0, 0.4721],
    [0, 0, 0, 0.4721],
    [0, 0, 0, 0],
])

K_CASE1 = (
    np.array([[1, 0, 0, 0], [0, 0.0824, 0.4435, 0], [0, -0.1772, 0.8747, 0], [0, 0, 0, 0.7771]]),
    np.array([[0, 0.9757, 0.1358, 0], [0, 0, 0, 0.2944], [0, 0, 0, 0.5416], [0, 0, 0, 0]]),
    np.array([[0, -0.0995, 0.1406, 0], [0, 0, 0, 0.0604], [0, 0, 0, 0.1112], [0, 0, 0, 0]]),
)
K_CASE2 = (
    np.array([[1, 0, 0, 0], [0, 0.1274, 0.4352, 0], [0, -0.0603, 0.8892, 0], [0, 0, 0, 0.8138]]),
    np.array([[0, 0.9864, 0.0102, 0], [0, 0, 0, 0.2011], [0, 0, 0, 0.5256], [0, 0, 0, 0]]),
    np.array([[0, -0.0841, 0.1406, 0], [0, 0, 0, 0.0518], [0, 0, 0, 0.1354], [0, 0, 0, 0]]),
)

PROTOCOLS = {
    Protocol.MAIN: ProtocolSpec(Protocol.MAIN, BlochVector(0.4333, 0.0, -0.9013),
                                BlochVector(0.5710, 0.0, 0.2928), (K0_MAIN, K1_MAIN), 0.0982),
    Protocol.CASE1: ProtocolSpec(Protocol.CASE1, BlochVector(0.7071, 0.0, -0.7071),
                                 BlochVector(0.6779, 0.0, 0.3847), K_CASE1, 0.0811),
    Protocol.CASE2: ProtocolSpec(Protocol.CASE2, BlochVector(0.8660, 0.0, -0.5000),
                                 BlochVector(0.7430, 0.0, 0.4749), K_CASE2, 0.0405),
}

# reported output of the ideal main protocol
SYSTEM_OUT_MAIN = BlochVector(0.5314, 0.0, -0.3251)

# catalyst actually prepared in the experiment, and its two-component mixture
CATALYST_EXPERIMENT = BlochVector(0.4410, 0.0, 0.2928)
CATALYST_MIXTURE_WEIGHTS = (0.7306, 0.2694)
CATALYST_MIXTURE_VECTORS = ((0.8040, 0.5946), (0.8040, -0.5946))

# tomography results reported for the experiment
SYSTEM_IN_MEASURED = BlochVector(0.4340, 0.0219, -0.8998)
CATALYST_IN_MEASURED = BlochVector(0.4363, -0.0072, 0.2912)
SYSTEM_OUT_MEASURED = BlochVector(0.4597, -0.0062, -0.3301)
CATALYST_OUT_MEASURED = BlochVector(0.4800, -0.0140, 0.2776)

EPSILON_S_REPORTED = 0.0080
EPSILON_C_REPORTED = 0.0073

# photon counting settings
EVENT_RATE = 20_000.0      # events per second
SETTING_DURATION = 100.0   # seconds per measurement setting


def get(protocol) -> ProtocolSpec:
    return PROTOCOLS[Protocol(protocol) if not isinstance(protocol, Protocol) else protocol]


def main_channel() -> QuantumChannel:
    return PROTOCOLS[Protocol.MAIN].channel()


def catalyst_mixture() -> list[tuple[float, DensityMatrix]]:
    from .qcore import pure_state
    return [(w, pure_state(v)) for w, v in zip(CATALYST_MIXTURE_WEIGHTS, CATALYST_MIXTURE_VECTORS)]
