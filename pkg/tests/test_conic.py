import cvxpy as cp
import numpy as np
import pytest

from asymcat import conic, qcore as q


def cvxpy_robustness(rho):
    d = rho.shape[0]
    dvar = cp.Variable((d, d), hermitian=True)
    cons = [dvar - rho >> 0]
    cons += [dvar[i, j] == 0 for i in range(d) for j in range(d) if i != j]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(dvar)) - 1), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def cvxpy_diamond(j, din, dout):
    # primal form: max Re Tr(J W) subject to [[rho0 (x) I, W], [W^+, rho1 (x) I]] >= 0
    n = din * dout
    w = cp.Variable((n, n), complex=True)
    r0 = cp.Variable((din, din), hermitian=True)
    r1 = cp.Variable((din, din), hermitian=True)
    big = cp.bmat([[cp.kron(r0, np.eye(dout)), w], [w.H, cp.kron(r1, np.eye(dout))]])
    cons = [big >> 0, cp.real(cp.trace(r0)) == 1, cp.real(cp.trace(r1)) == 1]
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(j.conj().T @ w))), cons)
    # a different algorithm from the package's default backend
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return prob.value


def test_hermitian_basis_orthonormal():
    for d in (1, 2, 4):
        b = conic.hermitian_basis(d)
        gram = np.einsum("aij,bij->ab", b.conj(), b).real
        assert np.allclose(gram, np.eye(d * d))
        m = q.random_density(d, np.random.default_rng(d)).mat
        assert np.allclose(conic.from_coords(conic.to_coords(m, b), b), m)


def test_qubit_robustness_closed_form(rng):
    for _ in range(20):
        rho = q.random_density(2, rng).mat
        assert conic.robustness_of_asymmetry(rho) == pytest.approx(2 * abs(rho[0, 1]), abs=1e-7)


@pytest.mark.parametrize("d", [3, 4])
def test_robustness_matches_cvxpy(rng, d):
    rho = q.random_density(d, rng).mat
    assert conic.robustness_of_asymmetry(rho) == pytest.approx(cvxpy_robustness(rho), abs=1e-6)


def test_backends_agree(rng):
    rho = q.random_density(3, rng).mat
    a = conic.robustness_of_asymmetry(rho, backend="clarabel")
    b = conic.robustness_of_asymmetry(rho, backend="admm")
    assert a == pytest.approx(b, abs=1e-5)


def test_diamond_norm_of_channel_is_one(rng):
    ch = q.random_channel(2, 2, rng)
    assert conic.diamond_norm(ch) == pytest.approx(1.0, abs=1e-6)


def test_diamond_norm_matches_cvxpy_and_bounds(rng):
    e1, e2 = q.random_channel(2, 2, rng), q.random_channel(2, 2, rng)
    j = e1.choi - e2.choi
    dn = conic.diamond_norm(j, 2, 2)
    assert dn == pytest.approx(cvxpy_diamond(j, 2, 2), abs=1e-5)
    lower = conic.induced_trace_norm_lower_bound(j, 2, 2, samples=300, rng=rng)
    assert lower <= dn + 1e-7
    assert conic.diamond_norm(j, 2, 2, method="choi_trace") <= dn + 1e-7


def test_diamond_norm_identity_minus_flip():
    # unitary channels with orthogonal action: ||id - X||_diamond = 2
    ident = q.QuantumChannel.from_kraus([np.eye(2)])
    flip = q.QuantumChannel.from_kraus([np.array([[0, 1], [1, 0]])])
    assert conic.diamond_norm(ident.choi - flip.choi, 2, 2) == pytest.approx(2.0, abs=1e-6)


def test_independent_equalities():
    a = np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 1, 0], [0, 0, 0]])
    ra, rb = conic.independent_equalities(a, np.array([1.0, 2.0, 3.0, 0.0]))
    assert ra.shape[0] == 2
    x = np.linalg.lstsq(ra, rb, rcond=None)[0]
    assert np.allclose(a @ x, [1, 2, 3, 0])
    assert conic.independent_equalities(a, np.array([1.0, 3.0, 3.0, 0.0])) is None


def test_infeasible_reported():
    p = conic.SdpProblem(
        variables=[("X", 2)],
        objective=lambda x: np.trace(x["X"]).real,
        equalities=[(lambda x: x["X"][0, 0].real, -1.0)],
        psd_variables=("X",),
    )
    for backend in ("clarabel", "admm"):
        sol = conic.solve(p, backend=backend)
        assert not sol.ok


def test_canonical_json_roundtrip(rng):
    cs = conic.canonicalize(conic.robustness_problem(q.random_density(3, rng).mat))
    back = conic.CanonicalSdp.from_json(cs.to_json())
    assert np.allclose(back.a, cs.a) and np.allclose(back.c, cs.c)
    s1, s2 = conic.solve_canonical(cs), conic.solve_canonical(back)
    assert s1.objective_value == pytest.approx(s2.objective_value, abs=1e-9)
