import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymcat import qcore as q

unit = st.floats(-1, 1, allow_nan=False)


def random_kraus(rng, din, dout, n):
    return q.random_channel(din, dout, rng, n_kraus=n).kraus_ops()


def test_kraus_choi_roundtrip(rng):
    for din, dout in [(2, 2), (2, 3), (4, 4)]:
        ch = q.random_channel(din, dout, rng)
        ops = q.choi_to_kraus(ch.choi, din, dout)
        assert np.allclose(q.kraus_to_choi(ops), ch.choi, atol=1e-10)
        rho = q.random_density(din, rng)
        direct = sum(k @ np.asarray(rho) @ k.conj().T for k in ops)
        assert np.allclose(ch(rho), direct, atol=1e-10)


def test_choi_layout_matches_definition(rng):
    ops = random_kraus(rng, 2, 3, 2)
    j = q.kraus_to_choi(ops)
    for i in range(2):
        for k in range(2):
            e = np.zeros((2, 2))
            e[i, k] = 1
            out = sum(a @ e @ a.conj().T for a in ops)
            assert np.allclose(j[i * 3:(i + 1) * 3, k * 3:(k + 1) * 3], out)


def test_channel_is_cptp_and_tp_deviation(rng):
    ch = q.random_channel(3, 2, rng)
    assert ch.is_cptp()
    bad = q.QuantumChannel.from_kraus([0.9 * np.eye(2)])
    assert bad.tp_deviation() == pytest.approx(0.19)
    assert not bad.is_cptp()


@pytest.mark.parametrize("conv", list(q.ChiConvention))
def test_chi_roundtrip(rng, conv):
    ch = q.random_channel(2, 2, rng)
    chi = q.choi_to_chi(ch.choi, conv)
    assert np.allclose(q.chi_to_choi(chi), ch.choi, atol=1e-12)


def test_chi_col_major_definition(rng):
    # E(rho) = sum chi_mn E_m rho E_n^dagger with E_m = |r><s| indexed s*d + r
    ch = q.random_channel(2, 2, rng)
    chi = q.choi_to_chi(ch.choi, q.ChiConvention.ELEMENTARY_COL_MAJOR).mat
    basis = []
    for s in range(2):
        for r in range(2):
            e = np.zeros((2, 2))
            e[r, s] = 1
            basis.append(e)
    rho = np.asarray(q.random_density(2, rng))
    out = sum(chi[m, n] * basis[m] @ rho @ basis[n].T for m in range(4) for n in range(4))
    assert np.allclose(out, ch(rho), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(unit, unit, unit)
def test_bloch_roundtrip(x, y, z):
    n = np.sqrt(x * x + y * y + z * z)
    if n > 1:
        x, y, z = x / n, y / n, z / n
    b = q.bloch(x, y, z).bloch()
    assert np.allclose(b, (x, y, z), atol=1e-12)


def test_bloch_rejects_outside_ball():
    with pytest.raises(q.NotPhysicalError):
        q.bloch(0.8, 0, 0.8)
    # printed four-decimal pure states are pulled back onto the sphere
    r = q.bloch(0.4333, 0, -0.9013, renormalize=True)
    assert r.bloch().norm == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_of_product(rng):
    a, b = q.random_density(2, rng), q.random_density(3, rng)
    ab = np.kron(np.asarray(a), np.asarray(b))
    assert np.allclose(q.partial_trace(ab, (2, 3), keep=0), a.mat)
    assert np.allclose(q.partial_trace(ab, (2, 3), keep=1), b.mat)


def test_fidelity_properties(rng):
    a, b = q.random_density(3, rng), q.random_density(3, rng)
    assert q.fidelity(a, a) == pytest.approx(1.0, abs=1e-10)
    f = q.fidelity(a, b)
    assert 0 <= f <= 1
    assert f == pytest.approx(q.fidelity(b, a), abs=1e-10)
    # pure states: |<psi|phi>|^2
    u, v = rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=2) + 1j * rng.normal(size=2)
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    assert q.fidelity(q.pure_state(u), q.pure_state(v)) == pytest.approx(abs(np.vdot(u, v)) ** 2, abs=1e-8)


def test_process_fidelity_identity(rng):
    ch = q.random_channel(2, 2, rng)
    assert q.process_fidelity(ch.choi, ch.choi, 2) == pytest.approx(1.0, abs=1e-10)


def test_compose_matches_sequential_application(rng):
    e1, e2 = q.random_channel(2, 3, rng), q.random_channel(3, 2, rng)
    rho = q.random_density(2, rng)
    assert np.allclose(e1.compose(e2)(rho), e2(e1(rho)), atol=1e-12)


def test_choi_to_kraus_rejects_non_psd():
    j = np.diag([1.0, -0.5, 0.5, 1.0])
    with pytest.raises(q.NotPhysicalError):
        q.choi_to_kraus(j, 2, 2)
