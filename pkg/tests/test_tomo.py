import numpy as np
import pytest

from asymcat import protocols, qcore as q, tomo


def test_qubit_projectors_are_informationally_complete():
    ops, _ = tomo.single_qubit_basis().effective_operators()
    gram = np.array([np.asarray(o).reshape(-1) for o in ops])
    assert np.linalg.matrix_rank(gram) == 4


def test_noiseless_state_tomography_is_exact(rng):
    for basis, dim in [(tomo.joint_basis(), 4), (tomo.single_qubit_basis(), 2)]:
        rho = q.random_density(dim, rng)
        res = tomo.state_tomography(rho, basis, noiseless=True)
        assert np.allclose(np.asarray(res.reconstructed), rho.mat, atol=1e-10)


def test_marginal_bases_recover_reduced_states(rng):
    rho = q.random_density(4, rng).mat
    rs = q.partial_trace(rho, (2, 2), keep=0)
    rc = q.partial_trace(rho, (2, 2), keep=1)
    got_s = tomo.state_tomography(rho, tomo.system_basis(), noiseless=True)
    got_c = tomo.state_tomography(rho, tomo.catalyst_basis(), noiseless=True)
    assert np.allclose(np.asarray(got_s.reconstructed), rs, atol=1e-10)
    assert np.allclose(np.asarray(got_c.reconstructed), rc, atol=1e-10)


def test_counts_are_seeded_and_poisson(rng):
    rho = q.random_density(2, rng)
    basis = tomo.single_qubit_basis()
    a = tomo.simulate_counts(rho, basis, seed=5)
    b = tomo.simulate_counts(rho, basis, seed=5)
    assert [c.observed_count for c in a] == [c.observed_count for c in b]
    mean = tomo.expected_counts(rho, basis)
    for c, m in zip(a, mean):
        assert abs(c.observed_count - m) < 6 * np.sqrt(m)


def test_project_to_density():
    m = np.diag([0.7, 0.5, -0.2]).astype(complex)
    p = tomo.project_to_density(m)
    assert np.trace(p).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(p)[0] >= -1e-12
    assert np.allclose(p, np.diag([0.6, 0.4, 0.0]))


def test_choi_from_outputs_inverts_channel(rng):
    ch = q.random_channel(4, 4, rng)
    outs = [ch(np.outer(v, v.conj())) for v in tomo.process_input_states()]
    assert np.allclose(tomo.choi_from_outputs(outs), ch.choi, atol=1e-10)


def test_process_tomography_noiseless_and_sampled():
    ideal = protocols.main_channel()
    exact = tomo.process_tomography(ideal, noiseless=True)
    assert np.allclose(exact.choi, ideal.choi, atol=1e-10)
    noisy = tomo.process_tomography(ideal, seed=3)
    assert q.process_fidelity(noisy.choi, ideal.choi, 4) > 0.99


def test_nearest_cptp_choi_fixes_channels(rng):
    ch = q.random_channel(2, 2, rng)
    assert np.allclose(tomo.nearest_cptp_choi(ch.choi, 2), ch.choi, atol=1e-6)
    bad = ch.choi + 0.05 * np.diag([1, -1, 0, 0])
    fixed = q.QuantumChannel(tomo.nearest_cptp_choi(bad, 2), 2, 2)
    assert fixed.is_cptp(tol=1e-6)


def test_published_process_matrix_convention():
    res = tomo.resolve_chi_convention()
    assert res.fidelity == pytest.approx(0.9904, abs=0.01)
    assert res.fidelity == max(res.fidelities.values())
    ch = tomo.measured_channel(res)
    assert ch.hermiticity_preserving_only
    assert np.allclose(ch.choi, ch.choi.conj().T)


def test_monte_carlo_spread_is_positive_and_seeded():
    spec = protocols.get("main")
    ch = spec.channel()
    a = tomo.monte_carlo_delta(ch, spec.system_state(), spec.catalyst_state(), 0.0, runs=20, seed=1)
    b = tomo.monte_carlo_delta(ch, spec.system_state(), spec.catalyst_state(), 0.0, runs=20, seed=1)
    assert a.mean == b.mean and a.std == b.std
    assert 0 < a.std < 0.01
    assert a.mean == pytest.approx(spec.ideal_increment, abs=0.01)
