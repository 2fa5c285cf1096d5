"""End-to-end acceptance criteria, one test per criterion.

Each test records its named checks through the ``acceptance`` fixture; the
terminal summary prints one PASS/FAIL line per criterion. Reference values
are the published numbers the package is expected to reproduce.
"""
import math
import time

import numpy as np
import pytest

from asymcat import catalysis, conic, noise, optics, protocols, qcore as q, tio, tomo
from asymcat.cli import run

CTX = tio.build_mask((0, 1), (0, 1))


def within(value, target, tol):
    return abs(value - target) <= tol


def apply_to_protocol_states(spec):
    rho_s, rho_c = spec.system_state(), spec.catalyst_state()
    out = spec.channel()(np.kron(rho_s.mat, rho_c.mat))
    s_out = q.partial_trace(out, (2, 2), keep=0)
    c_out = q.partial_trace(out, (2, 2), keep=1)
    inc = 2 * abs(s_out[0, 1]) - 2 * abs(rho_s.mat[0, 1])
    return inc, 0.5 * q.trace_norm(c_out - rho_c.mat)


def test_criterion_1_ideal_protocol(acceptance):
    t0 = time.perf_counter()
    spec = protocols.get("main")
    inc, ret = apply_to_protocol_states(spec)
    ch = spec.channel()
    completeness = np.max(np.abs(sum(k.conj().T @ k for k in spec.kraus) - np.eye(4)))
    dev = tio.tio_deviation(ch, CTX)
    elapsed = time.perf_counter() - t0
    acceptance(1, {
        "increment 0.0982 +- 5e-4": within(inc, 0.0982, 5e-4),
        "catalyst return < 1e-3": ret < 1e-3,
        "completeness within 2e-3": completeness <= 2e-3,
        "tio deviation < 1e-12": dev < 1e-12,
        "runtime < 1 s": elapsed < 1.0,
    }, f"increment {inc:.5f}, return {ret:.1e}, completeness {completeness:.1e}, "
       f"tio {dev:.1e}, {elapsed:.2f} s")


def test_criterion_2_robustness_oracle(acceptance):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(1000):
        # alternate mixed and pure states
        if k % 2:
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            rho = np.outer(v, v.conj()) / np.vdot(v, v).real
        else:
            rho = q.random_density(2, rng).mat
        worst = max(worst, abs(conic.robustness_of_asymmetry(rho) - 2 * abs(rho[0, 1])))
    elapsed = time.perf_counter() - t0
    acceptance(2, {"max error <= 1e-6": worst <= 1e-6, "runtime < 30 s": elapsed < 30},
               f"max error {worst:.1e}, {elapsed:.1f} s")


def test_criterion_3_mask(acceptance):
    m0 = np.array([[1, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 1]])
    m1 = np.array([[0, 1, 1, 0], [0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0]])
    m2 = np.zeros((4, 4), dtype=int)
    m2[0, 3] = 1
    ref = np.block([[m0, m1, m1, m2],
                    [m1.T, m0, m0, m1],
                    [m1.T, m0, m0, m1],
                    [m2.T, m1.T, m1.T, m0]])
    diff = int(np.sum(CTX.mask != ref))
    acceptance(3, {"mask equals block layout": diff == 0}, f"{diff} differing entries")


@pytest.mark.slow
def test_criterion_4_bilevel_search(acceptance):
    t0 = time.perf_counter()
    res = catalysis.bilevel_search(starts=32, seed=0)
    elapsed = time.perf_counter() - t0
    best = res.best
    acceptance(4, {
        "increment >= 0.095": best.increment >= 0.095,
        "catalyst returned": best.catalyst_return_error < 1e-6,
        "tio": tio.tio_deviation(best.channel, CTX) < 1e-8,
        "runtime <= 10 min": elapsed <= 600,
    }, f"increment {best.increment:.5f} at {np.round(res.parameters, 4).tolist()}, {elapsed:.0f} s")


def test_criterion_5_experiment(acceptance, tmp_path):
    t0 = time.perf_counter()
    r = run("reproduce-experiment", {"runs": 500, "seed": 0, "out": str(tmp_path), "label": "acc"}).results
    elapsed = time.perf_counter() - t0
    std = r["monte_carlo"]["std"]
    dt = r["corrected_increment_published_vectors"]
    acceptance(5, {
        "fidelity 0.9904 +- 0.01": within(r["process_fidelity"], 0.9904, 0.01),
        "eps_S 0.0080 +- 0.002": within(r["eps_s"], 0.0080, 0.002),
        "eps_C 0.0073 +- 0.002": within(r["eps_c"], 0.0073, 0.002),
        "return guard holds": r["return_guard"]["ok"],
        "corrected increment 0.0172 +- 5e-4": within(dt, 0.0172, 5e-4),
        "MC std in [0.0011, 0.0044]": 0.0011 <= std <= 0.0044,
        "runtime < 5 min": elapsed < 300,
    }, f"fidelity {r['process_fidelity']:.4f}, eps_S {r['eps_s']:.4f}, eps_C {r['eps_c']:.4f}, "
       f"corrected {dt:.4f}, MC std {std:.4f}, {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_6_noise_scans(acceptance):
    t0 = time.perf_counter()
    checks, notes = {}, []
    # region scans
    scans = {
        "main": (tomo.measured_channel(), 0.0417),
        "case1": (noise.apply_noise(protocols.get("case1").channel(), noise.NoiseModel.uniform(0.003)), 0.0564),
        "case2": (noise.apply_noise(protocols.get("case2").channel(), noise.NoiseModel.uniform(0.003)), 0.0204),
    }
    for name, (ch, target) in scans.items():
        m = noise.scan_catalyst_region(name, ch, (81, 81)).max_corrected_increment
        checks[f"{name} max corrected {target} +- 0.01"] = within(m, target, 0.01)
        notes.append(f"{name} scan {m:.4f}")
    # noiseless increments of the three-Kraus protocols
    for name, target in (("case1", 0.0811), ("case2", 0.0405)):
        inc, _ = apply_to_protocol_states(protocols.get(name))
        checks[f"{name} noiseless {target} +- 0.005"] = within(inc, target, 0.005)
        notes.append(f"{name} noiseless {inc:.4f}")
    # thresholds
    for name, target in (("main", 0.014), ("case1", 0.010), ("case2", 0.006)):
        p = noise.noise_threshold(name, 0.001, p_max=0.05).p_bound
        checks[f"{name} threshold {target} +- 0.003"] = p is not None and within(p, target, 0.003 + 1e-12)
        notes.append(f"{name} threshold {p}")
    elapsed = time.perf_counter() - t0
    checks["runtime <= 30 min"] = elapsed <= 1800
    acceptance(6, checks, ", ".join(notes) + f", {elapsed:.0f} s")


def _published_states(x, t4, t5, t6, t7):
    """The ten published intermediate states, transcribed term by term."""
    xa, xb, xc, xd = x
    c4, s4, c5, s5 = math.cos(2 * t4), math.sin(2 * t4), math.cos(2 * t5), math.sin(2 * t5)
    c6, s6, c7, s7 = math.cos(2 * t6), math.sin(2 * t6), math.cos(2 * t7), math.sin(2 * t7)
    u = xb * c4 + xc * s4
    w = xb * s4 - xc * c4
    terms = {
        "R1": [(-xa, "aV"), (xb, "bH"), (xc, "cV"), (-xd, "dV")],
        "R2": [(-xa, "aV"), (xb, "cH"), (xc, "cV"), (-xd, "dV")],
        "R3": [(xa, "aV"), (u, "cH"), (w, "cV"), (-xd * s5, "dH"), (xd * c5, "dV")],
        "P0": [(xa, "aV"), (w, "cV"), (xd * c5, "dV")],
        "P1": [(xa, "aH"), (w * s6, "cH"), (-w * c6, "cV"), (xd * c5, "dH")],
        "P2": [(xa, "aV"), (w * c6, "bV"), (w * s6, "cV"), (xd * c5, "dV")],
        "Q0": [(u, "cH"), (-xd * s5, "dH")],
        "Q1": [(u, "aV"), (-xd * s5, "cH")],
        "Q2": [(u, "aH"), (-xd * s5 * c7, "cH"), (-xd * s5 * s7, "cV")],
        "Q3": [(u, "aH"), (-xd * s5 * c7, "bH"), (-xd * s5 * s7, "cH")],
    }
    out = {}
    for name, ts in terms.items():
        v = np.zeros(8, dtype=complex)
        for amp, lab in ts:
            v[2 * "abcd".index(lab[0]) + "HV".index(lab[1])] += amp
        out[name] = v
    return out


def test_criterion_7_optics(acceptance):
    sol = optics.solve_angles(protocols.K0_MAIN, protocols.K1_MAIN)
    circ = sol.circuit()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=4) + 1j * rng.normal(size=4)
        x /= np.linalg.norm(x)
        got = circ.intermediate_states(optics.OpticalState.from_path_amplitudes(x))
        ref = _published_states(x, *sol.thetas)
        worst = max(worst, max(np.max(np.abs(got[k].amplitudes - ref[k])) for k in ref))
    gp, gq = circ.effective_maps()
    completeness = np.max(np.abs(gp.conj().T @ gp + gq.conj().T @ gq - np.eye(4)))
    acceptance(7, {
        "states within 1e-12": worst <= 1e-12,
        "residual < 2e-3": sol.residual < 2e-3,
        "completeness within 1e-9": completeness <= 1e-9,
    }, f"state error {worst:.1e}, residual {sol.residual:.1e}, completeness {completeness:.1e}")


def test_criterion_8_properties(acceptance):
    rng = np.random.default_rng(8)
    checks, notes = {}, []

    # diamond norm against the sampled lower bound, for channel differences
    gap = math.inf
    for _ in range(10):
        a, b = q.random_channel(2, 2, rng), q.random_channel(2, 2, rng)
        j = a.choi - b.choi
        gap = min(gap, conic.diamond_norm(j, 2, 2)
                  - conic.induced_trace_norm_lower_bound(j, 2, 2, samples=200, rng=rng))
    checks["diamond >= sampled bound"] = gap >= -1e-7
    notes.append(f"min diamond gap {gap:.1e}")

    # noise keeps channels CPTP
    worst_cp = 0.0
    base = q.random_channel(4, 4, rng)
    for _ in range(20):
        ch = noise.apply_noise(base, noise.NoiseModel(tuple(rng.uniform(0, 1, 6))))
        worst_cp = max(worst_cp, ch.cp_deviation(), ch.tp_deviation())
    checks["apply_noise CPTP"] = worst_cp <= 1e-9
    notes.append(f"noise CPTP deviation {worst_cp:.1e}")

    # representation roundtrips
    ch = q.random_channel(4, 4, rng)
    err = np.max(np.abs(q.kraus_to_choi(q.choi_to_kraus(ch.choi, 4, 4)) - ch.choi))
    for conv in q.ChiConvention:
        err = max(err, np.max(np.abs(q.chi_to_choi(q.choi_to_chi(ch.choi, conv)) - ch.choi)))
    v = q.random_density(2, rng).bloch()
    err = max(err, np.max(np.abs(np.array(q.bloch(*v).bloch()) - np.array(v))))
    checks["roundtrips within 1e-10"] = err <= 1e-10
    notes.append(f"roundtrip error {err:.1e}")

    # scan endpoints and non-negativity on a coarse grid
    rows = catalysis.scan_pure_states(5, starts=2, seed=0)
    ends = [rows[0][1], rows[-1][1]]
    checks["endpoints within 1e-4"] = all(abs(e) <= 1e-4 for e in ends)
    mixed = catalysis.scan_mixed_states(4, starts=1, seed=0)
    lowest = min(min(r[1] for r in rows), min(r[2] for r in mixed))
    checks["increment >= -1e-8 on grids"] = lowest >= -1e-8
    notes.append(f"endpoints {ends[0]:.1e}/{ends[1]:.1e}, min on grids {lowest:.1e}")
    acceptance(8, checks, ", ".join(notes))
