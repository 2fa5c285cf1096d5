"""Path-polarization interferometer for the two-Kraus catalytic channel.

The two-qubit system-catalyst state lives on four spatial paths a, b, c, d,
each carrying a horizontal (H) or vertical (V) polarization. Mode index is
``2 * path + pol`` with ``H = 0`` and ``V = 1``. Elements act as 8x8
partial isometries:

- ``HWP(path, theta)``: Jones matrix [[cos 2t, sin 2t], [sin 2t, -cos 2t]] on
  one path, identity elsewhere.
- ``BD_H(shift)`` / ``BD_V(shift)``: displaces H (resp. V) light by ``shift``
  paths; the other polarization passes. Light displaced off the ends is lost.
- ``PBS(port)``: keeps the V ("reflected") or H ("transmitted") output.

The circuit is a common R stage followed by the P branch (reflected port,
Kraus K0) or the Q branch (transmitted port, Kraus K1). Element phases are
chosen so every intermediate state matches the published R1..Q3 states,
including their minus signs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PATHS = "abcd"
H, V = 0, 1
POLS = "HV"
N_MODES = 8

# polarization that carries each path amplitude at the circuit input
INPUT_POLARIZATION = (V, H, H, V)
# polarization read out on each branch after the restoration waveplates
READOUT_POLARIZATION = {"P": V, "Q": H}

PATTERN_TOL = 5e-3
RESIDUAL_TOL = 5e-3
# cos(pi/2) round-off leaves ~1e-16 in nominally empty modes
OCCUPIED_TOL = 1e-12


class RoutingError(ValueError):
    """An element maps two modes onto one, or drops an occupied mode."""


class PatternMismatchError(ValueError):
    """Target Kraus operators cannot be realized by this circuit."""


def mode(path, pol) -> int:
    p = PATHS.index(path) if isinstance(path, str) else int(path)
    q = POLS.index(pol) if isinstance(pol, str) else int(pol)
    return 2 * p + q


def mode_label(m: int) -> str:
    return f"{PATHS[m // 2]}_{POLS[m % 2]}"


@dataclass(frozen=True)
class OpticalState:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.shape != (N_MODES,):
            raise ValueError(f"expected {N_MODES} amplitudes, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        if np.linalg.norm(a) > 1 + 1e-9:
            raise ValueError(f"state norm {np.linalg.norm(a):.12g} exceeds 1")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_path_amplitudes(cls, x: Sequence[complex]) -> "OpticalState":
        """Encode (x_a, x_b, x_c, x_d) as x_a|a_V> + x_b|b_H> + x_c|c_H> + x_d|d_V>."""
        x = np.asarray(x, dtype=complex)
        if x.shape != (4,):
            raise ValueError("expected four path amplitudes")
        a = np.zeros(N_MODES, dtype=complex)
        for p, pol in enumerate(INPUT_POLARIZATION):
            a[mode(p, pol)] = x[p]
        return cls(a)

    def amplitude(self, path, pol) -> complex:
        return complex(self.amplitudes[mode(path, pol)])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def readout(self, pol) -> np.ndarray:
        """Amplitudes of one polarization in path order a, b, c, d."""
        q = POLS.index(pol) if isinstance(pol, str) else int(pol)
        return self.amplitudes[q::2].copy()

    def __repr__(self) -> str:
        terms = [f"{a:.4g}|{mode_label(m)}>" for m, a in enumerate(self.amplitudes) if abs(a) > 1e-15]
        return "OpticalState(" + (" + ".join(terms) or "0") + ")"


@dataclass(frozen=True)
class OpticalElement:
    """One optical component.

    ``routing`` maps input mode -> (output mode, sign) for displacers; modes
    missing from the table are lost. HWP and PBS ignore it.
    """

    kind: str                       # "HWP", "BD_H", "BD_V", "PBS"
    path: int | None = None
    theta: float | None = None
    shift: int | None = None
    port: str | None = None
    routing: tuple = ()

    def transfer(self) -> np.ndarray:
        t = np.zeros((N_MODES, N_MODES))
        if self.kind == "HWP":
            t[:] = np.eye(N_MODES)
            c, s = math.cos(2 * self.theta), math.sin(2 * self.theta)
            i = 2 * self.path
            t[i:i + 2, i:i + 2] = [[c, s], [s, -c]]
        elif self.kind == "PBS":
            keep = V if self.port == "reflected" else H
            for p in range(4):
                t[mode(p, keep), mode(p, keep)] = 1.0
        elif self.kind in ("BD_H", "BD_V"):
            for src, (dst, sign) in self.routing:
                if np.any(t[dst]):
                    raise RoutingError(f"{self.kind}: two inputs routed to {mode_label(dst)}")
                t[dst, src] = sign
        else:
            raise ValueError(f"unknown element kind {self.kind!r}")
        return t

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.path is not None:
            d["path"] = PATHS[self.path]
        if self.theta is not None:
            d["theta"] = float(self.theta)
        if self.shift is not None:
            d["shift"] = int(self.shift)
        if self.port is not None:
            d["port"] = self.port
        return d


def hwp(path, theta: float) -> OpticalElement:
    p = PATHS.index(path) if isinstance(path, str) else int(path)
    return OpticalElement("HWP", path=p, theta=float(theta))


def beam_displacer(pol, shift: int) -> OpticalElement:
    """Displace light of polarization ``pol`` by ``shift`` paths."""
    q = POLS.index(pol) if isinstance(pol, str) else int(pol)
    routing = []
    for p in range(4):
        for r in (H, V):
            dest = p + shift if r == q else p
            if 0 <= dest < 4:
                routing.append((mode(p, r), (mode(dest, r), 1.0)))
    return OpticalElement(f"BD_{POLS[q]}", shift=int(shift), routing=tuple(routing))


def pbs(port: str) -> OpticalElement:
    if port not in ("reflected", "transmitted"):
        raise ValueError("port must be 'reflected' or 'transmitted'")
    return OpticalElement("PBS", port=port)


def propagate(state: OpticalState, elements: Sequence[OpticalElement]) -> OpticalState:
    """Apply the elements in order.

    Displacers must route every occupied mode; losing light there signals a
    misconfigured circuit. Only a PBS may discard amplitude.
    """
    a = np.asarray(state.amplitudes)
    for el in elements:
        t = el.transfer()
        if el.kind != "PBS":
            lost = [m for m in range(N_MODES) if abs(a[m]) > OCCUPIED_TOL and not np.any(t[:, m])]
            if lost:
                raise RoutingError(f"{el.kind} drops occupied mode {mode_label(lost[0])}")
        a = t @ a
    return OpticalState(a)


# ---------------------------------------------------------------------------
# circuit
# ---------------------------------------------------------------------------

QUARTER = math.pi / 4


def _stages(t4: float, t5: float, t6: float, t7: float) -> dict[str, list[OpticalElement]]:
    """Element lists between consecutive named intermediate states."""
    return {
        # signs on a and d, c rotated H -> V
        "R1": [hwp("a", 0.0), hwp("c", QUARTER), hwp("d", 0.0)],
        "R2": [beam_displacer("H", +1)],
        "R3": [hwp("a", 0.0), hwp("c", t4), hwp("d", t5)],
        "P0": [pbs("reflected")],
        "P1": [hwp("a", QUARTER), hwp("c", t6), hwp("d", QUARTER)],
        # V on c moves to b; HWP(b, 0) supplies the sign of the b amplitude
        "P2": [beam_displacer("V", -1), hwp("a", QUARTER), hwp("b", 0.0), hwp("c", QUARTER),
               hwp("d", QUARTER)],
        "Q0": [pbs("transmitted")],
        "Q1": [hwp("c", QUARTER), beam_displacer("V", -2), beam_displacer("H", -1)],
        "Q2": [hwp("a", QUARTER), hwp("c", t7)],
        "Q3": [hwp("c", QUARTER), beam_displacer("V", -1), hwp("b", QUARTER)],
    }


R_STAGES = ("R1", "R2", "R3")
P_STAGES = ("P0", "P1", "P2")
Q_STAGES = ("Q0", "Q1", "Q2", "Q3")


@dataclass(frozen=True)
class CompiledCircuit:
    thetas: tuple                   # (theta4, theta5, theta6, theta7) in radians
    stages: dict = field(repr=False)

    @classmethod
    def build(cls, theta4: float, theta5: float, theta6: float, theta7: float) -> "CompiledCircuit":
        th = tuple(float(t) for t in (theta4, theta5, theta6, theta7))
        return cls(th, _stages(*th))

    def layers(self, branch: str) -> list[OpticalElement]:
        names = {"R": R_STAGES, "P": R_STAGES + P_STAGES, "Q": R_STAGES + Q_STAGES}[branch]
        return [el for n in names for el in self.stages[n]]

    def intermediate_states(self, state: OpticalState) -> dict[str, OpticalState]:
        out, cur = {}, state
        for n in R_STAGES:
            cur = out[n] = propagate(cur, self.stages[n])
        for names in (P_STAGES, Q_STAGES):
            b = out["R3"]
            for n in names:
                b = out[n] = propagate(b, self.stages[n])
        return out

    def effective_maps(self) -> tuple[np.ndarray, np.ndarray]:
        return effective_maps(self)

    def to_dict(self) -> dict:
        return {
            "schema": "asymcat.optics/1",
            "thetas": dict(zip(("theta4", "theta5", "theta6", "theta7"), self.thetas)),
            "mode_order": [mode_label(m) for m in range(N_MODES)],
            "input_polarization": [POLS[q] for q in INPUT_POLARIZATION],
            "readout_polarization": {k: POLS[v] for k, v in READOUT_POLARIZATION.items()},
            "stages": [{"name": n, "branch": n[0], "elements": [el.to_dict() for el in els]}
                       for n, els in self.stages.items()],
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def effective_maps(circuit: CompiledCircuit) -> tuple[np.ndarray, np.ndarray]:
    """4x4 path-space maps of the two branches, from the four basis inputs."""
    maps = []
    for branch in ("P", "Q"):
        els = circuit.layers(branch)
        g = np.zeros((4, 4))
        for k in range(4):
            out = propagate(OpticalState.from_path_amplitudes(np.eye(4)[k]), els)
            g[:, k] = out.readout(READOUT_POLARIZATION[branch]).real
        maps.append(g)
    return maps[0], maps[1]


def analytic_g_rp(theta4, theta5, theta6) -> np.ndarray:
    c4, s4 = math.cos(2 * theta4), math.sin(2 * theta4)
    c5 = math.cos(2 * theta5)
    c6, s6 = math.cos(2 * theta6), math.sin(2 * theta6)
    return np.array([
        [1, 0, 0, 0],
        [0, s4 * c6, -c4 * c6, 0],
        [0, s4 * s6, -c4 * s6, 0],
        [0, 0, 0, c5],
    ])


def analytic_g_rq(theta4, theta5, theta7) -> np.ndarray:
    c4, s4 = math.cos(2 * theta4), math.sin(2 * theta4)
    s5 = math.sin(2 * theta5)
    c7, s7 = math.cos(2 * theta7), math.sin(2 * theta7)
    return np.array([
        [0, c4, s4, 0],
        [0, 0, 0, -s5 * c7],
        [0, 0, 0, -s5 * s7],
        [0, 0, 0, 0],
    ])


# ---------------------------------------------------------------------------
# compiler
# ---------------------------------------------------------------------------

_K0_SUPPORT = np.zeros((4, 4), dtype=bool)
_K0_SUPPORT[0, 0] = _K0_SUPPORT[3, 3] = True
_K0_SUPPORT[1:3, 1:3] = True
_K1_SUPPORT = np.zeros((4, 4), dtype=bool)
_K1_SUPPORT[0, 1:3] = True
_K1_SUPPORT[1:3, 3] = True


@dataclass(frozen=True)
class AngleSolution:
    theta4: float
    theta5: float
    theta6: float
    theta7: float
    residual: float

    @property
    def thetas(self) -> tuple:
        return (self.theta4, self.theta5, self.theta6, self.theta7)

    def __iter__(self):
        return iter((*self.thetas, self.residual))

    def circuit(self) -> CompiledCircuit:
        return CompiledCircuit.build(*self.thetas)

    def to_dict(self) -> dict:
        d = {f"theta{k}": v for k, v in zip(range(4, 8), self.thetas)}
        d["degrees"] = {f"theta{k}": math.degrees(v) for k, v in zip(range(4, 8), self.thetas)}
        d["residual"] = self.residual
        return d


def _check_pattern(name: str, k: np.ndarray, support: np.ndarray) -> None:
    if k.shape != (4, 4):
        raise PatternMismatchError(f"{name} must be 4x4, got {k.shape}")
    if np.max(np.abs(k.imag)) > PATTERN_TOL:
        raise PatternMismatchError(f"{name} has imaginary entries; the circuit is real")
    off = np.abs(k.real[~support])
    if off.size and off.max() > PATTERN_TOL:
        raise PatternMismatchError(f"{name} has weight {off.max():.3g} outside the circuit's pattern")


def solve_angles(k0, k1, *extra) -> AngleSolution:
    """HWP4..HWP7 angles realizing ``(k0, k1)`` as ``(G_RP, G_RQ)``.

    Any further Kraus operator is a pattern mismatch: the circuit has exactly
    two output branches. The sign of sin 2theta5 is chosen so that
    cos 2theta7 >= 0.
    """
    if extra:
        raise PatternMismatchError(f"circuit realizes 2 Kraus operators, got {2 + len(extra)}")
    k0 = np.asarray(k0, dtype=complex)
    k1 = np.asarray(k1, dtype=complex)
    _check_pattern("K0", k0, _K0_SUPPORT)
    _check_pattern("K1", k1, _K1_SUPPORT)
    k0, k1 = k0.real, k1.real

    t4 = 0.5 * math.atan2(k1[0, 2], k1[0, 1])
    c4, s4 = math.cos(2 * t4), math.sin(2 * t4)
    # middle block of G_RP is (c6, s6)^T (s4, -c4)
    u = k0[1:3, 1:3] @ np.array([s4, -c4])
    t6 = 0.5 * math.atan2(u[1], u[0])

    c5 = float(np.clip(k0[3, 3], -1.0, 1.0))
    v = k1[1:3, 3]
    lead = v[0] if abs(v[0]) > 1e-15 else v[1]
    s5 = math.sqrt(max(0.0, 1.0 - c5 * c5)) * (-1.0 if lead > 0 else 1.0)
    t5 = 0.5 * math.atan2(s5, c5)
    sgn = -1.0 if s5 < 0 else 1.0
    t7 = 0.5 * math.atan2(-sgn * v[1], -sgn * v[0])

    residual = max(float(np.max(np.abs(analytic_g_rp(t4, t5, t6) - k0))),
                   float(np.max(np.abs(analytic_g_rq(t4, t5, t7) - k1))))
    if residual > RESIDUAL_TOL:
        raise PatternMismatchError(f"target inconsistent with the circuit: residual {residual:.3g}")
    return AngleSolution(t4, t5, t6, t7, residual)


def compile_kraus(kraus: Sequence) -> CompiledCircuit:
    return solve_angles(*kraus).circuit()


def expected_intermediate_states(x: Sequence[complex], theta4, theta5, theta6, theta7) -> dict[str, OpticalState]:
    """Closed-form states at R1..Q3 for input amplitudes ``x``, written term by term."""
    xa, xb, xc, xd = np.asarray(x, dtype=complex)
    c4, s4 = math.cos(2 * theta4), math.sin(2 * theta4)
    c5, s5 = math.cos(2 * theta5), math.sin(2 * theta5)
    c6, s6 = math.cos(2 * theta6), math.sin(2 * theta6)
    c7, s7 = math.cos(2 * theta7), math.sin(2 * theta7)
    p = xb * s4 - xc * c4
    q = xb * c4 + xc * s4

    def st(**terms):
        a = np.zeros(N_MODES, dtype=complex)
        for k, v in terms.items():
            a[mode(k[0], k[1])] = v
        return OpticalState(a)

    return {
        "R1": st(aV=-xa, bH=xb, cV=xc, dV=-xd),
        "R2": st(aV=-xa, cH=xb, cV=xc, dV=-xd),
        "R3": st(aV=xa, cH=q, cV=p, dH=-xd * s5, dV=xd * c5),
        "P0": st(aV=xa, cV=p, dV=xd * c5),
        "P1": st(aH=xa, cH=p * s6, cV=-p * c6, dH=xd * c5),
        "P2": st(aV=xa, bV=p * c6, cV=p * s6, dV=xd * c5),
        "Q0": st(cH=q, dH=-xd * s5),
        "Q1": st(aV=q, cH=-xd * s5),
        "Q2": st(aH=q, cH=-xd * s5 * c7, cV=-xd * s5 * s7),
        "Q3": st(aH=q, bH=-xd * s5 * c7, cH=-xd * s5 * s7),
    }
