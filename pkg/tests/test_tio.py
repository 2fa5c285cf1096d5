import cvxpy as cp
import numpy as np
import pytest

from asymcat import qcore as q, tio


def explicit_mask(energies):
    e = np.asarray(energies, dtype=float)
    d = len(e)
    m = np.zeros((d * d, d * d))
    for i in range(d):
        for a in range(d):
            for j in range(d):
                for b in range(d):
                    m[i * d + a, j * d + b] = abs((e[a] - e[i]) - (e[b] - e[j])) < 1e-9
    return m


@pytest.mark.parametrize("energies", [(0, 1), (0, 1, 2), (0, 1, 1, 2), (0, 0.5, 1.7)])
def test_mask_matches_bohr_rule(energies):
    ctx = tio.build_mask(energies)
    assert np.array_equal(ctx.mask, explicit_mask(energies))


def test_two_qubit_sectors():
    ctx = tio.build_mask((0, 1), (0, 1))
    assert ctx.h_total.energies == (0, 1, 1, 2)
    assert sorted(len(idx) for _, idx in ctx.sectors) == [1, 1, 4, 4, 6]
    assert ctx.subsystem_dims == (2, 2)


def test_masked_random_channels_are_tio_and_cptp(rng):
    ctx = tio.build_mask((0, 1), (0, 1))
    for _ in range(10):
        ch = tio.random_tio_channel(ctx, rng)
        assert ch.is_cptp()
        ok, dev = tio.is_tio(ch, ctx)
        assert ok and dev < 1e-12


def test_tio_commutes_with_time_translation(rng):
    energies = np.array([0, 1, 1, 2.0])
    ctx = tio.build_mask(energies)
    ch = tio.random_tio_channel(ctx, rng)
    rho = q.random_density(4, rng).mat
    for t in (0.3, 1.1):
        u = np.diag(np.exp(-1j * energies * t))
        assert np.allclose(ch(u @ rho @ u.conj().T), u @ ch(rho) @ u.conj().T, atol=1e-12)


def test_projection_of_tio_is_identity(rng):
    ctx = tio.build_mask((0, 1), (0, 1))
    ch = tio.random_tio_channel(ctx, rng)
    assert np.allclose(tio.tio_projection(ch, ctx).choi, ch.choi)


def test_projection_raises_or_repairs():
    ctx = tio.build_mask((0, 1))
    # tomographic-style Choi estimate with a slightly negative population
    j = np.array([[1.02, 0, 0, 0.3], [0, -0.02, 0, 0], [0, 0, 0.5, 0], [0.3, 0, 0, 0.5]])
    ch = q.QuantumChannel(j, 2, 2)
    with pytest.raises(tio.TioProjectionError) as err:
        tio.tio_projection(ch, ctx)
    assert err.value.min_eigenvalue == pytest.approx(-0.02)
    fixed = tio.tio_projection(ch, ctx, repair=True)
    assert fixed.is_cptp(tol=1e-6)
    assert tio.is_tio(fixed, ctx)[1] < 1e-9
    # maps flagged as channel differences are masked without checks
    hp = q.QuantumChannel(j, 2, 2, hermiticity_preserving_only=True)
    assert tio.tio_projection(hp, ctx).hermiticity_preserving_only


def test_sector_roundtrip(rng):
    ctx = tio.build_mask((0, 1), (0, 1))
    j = tio.random_tio_channel(ctx, rng).choi
    assert np.allclose(tio.assemble_from_sectors(tio.sector_blocks(j, ctx), ctx), j)


def test_nearest_tio_channel_is_fixed_on_tio(rng):
    ctx = tio.build_mask((0, 1))
    ch = tio.random_tio_channel(ctx, rng)
    out = tio.nearest_tio_channel(ch.choi, ctx)
    assert np.allclose(out.choi, ch.choi, atol=1e-6)


def sdp_reachable(src, tgt):
    j = cp.Variable((4, 4), hermitian=True)
    m = explicit_mask((0, 1))
    r = q.bloch(*src).mat
    out = sum(r[i, k] * j[2 * i:2 * i + 2, 2 * k:2 * k + 2] for i in range(2) for k in range(2))
    cons = [j >> 0, out == q.bloch(*tgt).mat]
    cons += [j[a, b] == 0 for a in range(4) for b in range(4) if m[a, b] == 0]
    cons += [j[0, 0] + j[1, 1] == 1, j[2, 2] + j[3, 3] == 1, j[0, 2] + j[1, 3] == 0]
    t = cp.Variable()
    # maximize the slack on the minimum eigenvalue to get a robust decision
    cons[0] = j >> t * np.eye(4)
    prob = cp.Problem(cp.Maximize(t), cons + [t <= 1])
    prob.solve(solver=cp.CLARABEL)
    return prob.status in ("optimal", "optimal_inaccurate"), prob.value


def test_qubit_cone_condition_matches_sdp(rng):
    agree = 0
    for _ in range(30):
        src = q.random_density(2, rng).bloch()
        tgt = q.random_density(2, rng).bloch()
        # rotate the target's phase to match the source so only magnitudes matter
        c = np.hypot(tgt[0], tgt[1])
        tgt = (c, 0.0, tgt[2])
        src = (np.hypot(src[0], src[1]), 0.0, src[2])
        margin_ok = tio.qubit_tio_reachable(src, tgt, margin=1e-3)
        margin_bad = not tio.qubit_tio_reachable(src, tgt, margin=-1e-3)
        if not (margin_ok or margin_bad):
            continue
        feasible, slack = sdp_reachable(src, tgt)
        feasible = feasible and slack is not None and slack > -1e-7
        assert feasible == margin_ok
        agree += 1
    assert agree >= 25


def test_return_guard_fields():
    g = tio.catalyst_return_guard((0.44, 0, 0.29), (0.48, 0, 0.28), 0.007)
    assert g.rhs == pytest.approx(0.48 - 0.007)
    assert g.ok == (g.lhs <= g.rhs)
