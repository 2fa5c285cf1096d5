import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymcat import optics, protocols

Q = math.pi / 4
angles = st.floats(-math.pi, math.pi, allow_nan=False)


# independent element semantics on {(path, pol): amplitude}
def sim_hwp(s, path, t):
    h, v = s.get((path, "H"), 0), s.get((path, "V"), 0)
    c, n = math.cos(2 * t), math.sin(2 * t)
    s = dict(s)
    s[(path, "H")] = c * h + n * v
    s[(path, "V")] = n * h - c * v
    return s


def sim_bd(s, pol, shift):
    out = {}
    for (path, p), a in s.items():
        if p == pol:
            k = "abcd".index(path) + shift
            if not 0 <= k < 4:
                continue
            path = "abcd"[k]
        out[(path, p)] = out.get((path, p), 0) + a
    return out


def sim_pbs(s, keep):
    return {k: a for k, a in s.items() if k[1] == keep}


def sim_stages(x, t4, t5, t6, t7):
    s = {("a", "V"): x[0], ("b", "H"): x[1], ("c", "H"): x[2], ("d", "V"): x[3]}
    out = {}
    s = sim_hwp(sim_hwp(sim_hwp(s, "a", 0), "c", Q), "d", 0); out["R1"] = s
    s = sim_bd(s, "H", 1); out["R2"] = s
    s = sim_hwp(sim_hwp(sim_hwp(s, "a", 0), "c", t4), "d", t5); out["R3"] = r3 = s
    s = sim_pbs(r3, "V"); out["P0"] = s
    s = sim_hwp(sim_hwp(sim_hwp(s, "a", Q), "c", t6), "d", Q); out["P1"] = s
    s = sim_bd(s, "V", -1)
    for p, t in (("a", Q), ("b", 0), ("c", Q), ("d", Q)):
        s = sim_hwp(s, p, t)
    out["P2"] = s
    s = sim_pbs(r3, "H"); out["Q0"] = s
    s = sim_bd(sim_bd(sim_hwp(s, "c", Q), "V", -2), "H", -1); out["Q1"] = s
    s = sim_hwp(sim_hwp(s, "a", Q), "c", t7); out["Q2"] = s
    s = sim_hwp(sim_bd(sim_hwp(s, "c", Q), "V", -1), "b", Q); out["Q3"] = s
    return out


def as_vector(s):
    v = np.zeros(8, dtype=complex)
    for (path, pol), a in s.items():
        v[2 * "abcd".index(path) + "HV".index(pol)] = a
    return v


def random_input(rng):
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    return x / np.linalg.norm(x)


def test_modes_and_labels():
    assert optics.mode("c", "V") == 5
    assert optics.mode_label(5) == "c_V"


def test_propagation_matches_independent_simulation(rng):
    thetas = rng.uniform(-math.pi, math.pi, size=4)
    circ = optics.CompiledCircuit.build(*thetas)
    for _ in range(20):
        x = random_input(rng)
        got = circ.intermediate_states(optics.OpticalState.from_path_amplitudes(x))
        ref = sim_stages(x, *thetas)
        closed = optics.expected_intermediate_states(x, *thetas)
        for name, s in ref.items():
            assert np.allclose(got[name].amplitudes, as_vector(s), atol=1e-12), name
            assert np.allclose(closed[name].amplitudes, as_vector(s), atol=1e-12), name


@settings(max_examples=50, deadline=None)
@given(angles, angles, angles, angles)
def test_branch_maps_are_complete(t4, t5, t6, t7):
    circ = optics.CompiledCircuit.build(t4, t5, t6, t7)
    gp, gq = circ.effective_maps()
    assert np.allclose(gp, optics.analytic_g_rp(t4, t5, t6), atol=1e-12)
    assert np.allclose(gq, optics.analytic_g_rq(t4, t5, t7), atol=1e-12)
    assert np.allclose(gp.T @ gp + gq.T @ gq, np.eye(4), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(angles, angles, angles, angles)
def test_solve_angles_roundtrip(t4, t5, t6, t7):
    k0 = optics.analytic_g_rp(t4, t5, t6)
    k1 = optics.analytic_g_rq(t4, t5, t7)
    sol = optics.solve_angles(k0, k1)
    assert sol.residual < 1e-9
    gp, gq = sol.circuit().effective_maps()
    assert np.allclose(gp, k0, atol=1e-9) and np.allclose(gq, k1, atol=1e-9)


def test_published_kraus_compile():
    sol = optics.solve_angles(protocols.K0_MAIN, protocols.K1_MAIN)
    assert sol.residual < 2e-3
    gp, gq = sol.circuit().effective_maps()
    assert np.max(np.abs(gp - protocols.K0_MAIN)) < 2e-3
    assert np.max(np.abs(gq - protocols.K1_MAIN)) < 2e-3
    assert math.cos(2 * sol.theta7) >= 0


def test_three_kraus_protocols_rejected():
    with pytest.raises(optics.PatternMismatchError):
        optics.solve_angles(*protocols.K_CASE1)
    with pytest.raises(optics.PatternMismatchError):
        optics.solve_angles(*protocols.K_CASE1[:2])


def test_pattern_violations_rejected():
    k0 = protocols.K0_MAIN.copy()
    k0[0, 3] = 0.1
    with pytest.raises(optics.PatternMismatchError):
        optics.solve_angles(k0, protocols.K1_MAIN)
    with pytest.raises(optics.PatternMismatchError):
        optics.solve_angles(protocols.K0_MAIN * 1j, protocols.K1_MAIN)


def test_state_validation():
    with pytest.raises(ValueError):
        optics.OpticalState(np.ones(8))
    with pytest.raises(ValueError):
        optics.OpticalState(np.zeros(7))


def test_dropping_light_raises():
    s = optics.OpticalState.from_path_amplitudes([0, 0, 0, 1.0])   # d, V
    with pytest.raises(optics.RoutingError):
        optics.propagate(s, [optics.beam_displacer("V", +1)])


def test_circuit_json(tmp_path):
    circ = optics.solve_angles(protocols.K0_MAIN, protocols.K1_MAIN).circuit()
    p = tmp_path / "c.json"
    circ.write_json(p)
    import json
    d = json.loads(p.read_text())
    assert d["schema"] == "asymcat.optics/1"
    assert [s["name"] for s in d["stages"]] == ["R1", "R2", "R3", "P0", "P1", "P2", "Q0", "Q1", "Q2", "Q3"]
