import numpy as np
import pytest

from openxxx import linalg, model, scalars
from openxxx.errors import ParameterError, PoleError
from openxxx.model import ModelParams

from conftest import P_VAL, Q_VAL, XI_MINUS, XI_PLUS, make_params


# --- parameters ------------------------------------------------------------------

def test_rho_defining_relation():
    for branch in ("principal", "conjugate"):
        p = make_params(2, branch=branch)
        assert abs(p.rho * (2 - p.rho) + p.xi_plus * p.xi_minus) < 1e-12
        assert abs(p.c_ratio * p.xi_minus - p.rho) < 1e-12


def test_branches_differ():
    a = make_params(2, branch="principal")
    b = make_params(2, branch="conjugate")
    assert abs(a.rho - b.rho) > 0.1
    assert abs((1 - a.rho) + (1 - b.rho)) < 1e-14  # opposite square roots


def test_triangular_c_ratio_exact():
    p = ModelParams.create([0.1], 1.5, 0.7, xi_plus=0.8, xi_minus=0.0)
    assert p.rho == 0
    assert p.c_ratio == -0.4
    with pytest.raises(ParameterError):
        ModelParams.create([0.1], 1.5, 0.7, xi_plus=0.8, xi_minus=0.0, branch="conjugate")


def test_params_validation_errors():
    with pytest.raises(ParameterError):
        ModelParams.create([], 1.0, 1.0)
    with pytest.raises(ParameterError):
        ModelParams.create([0.1, 0.2], 1.0, 1.0, n_sites=3)
    with pytest.raises(ParameterError):
        ModelParams.create([0.1], float("nan"), 1.0)
    with pytest.raises(ParameterError):
        ModelParams.create([0.1], 1.0, 1.0, branch="other")


def test_with_sites_slices_and_pads():
    p = make_params(3)
    assert p.with_sites(2).theta == p.theta[:2]
    assert p.with_sites(4).theta == p.theta[:3] + (0.0,)


# --- R-matrix ---------------------------------------------------------------------

def test_r_at_zero_is_permutation():
    assert np.array_equal(model.build_R(0).matrix, model.PERMUTATION)


def test_r_product_identity():
    # R(u) R(-u) = (1 - u^2) I, by direct 4x4 multiplication
    for u in (1.0, 0.3 + 0.2j):
        prod = model.r_matrix(u) @ model.r_matrix(-u)
        assert np.allclose(prod, (1 - u ** 2) * np.eye(4), atol=1e-14)
    assert np.allclose(model.r_matrix(1.0) @ model.r_matrix(-1.0), 0, atol=1e-14)


def test_r_gl2_invariance(rng):
    u = 0.7 - 0.45j
    for _ in range(5):
        q = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        if abs(np.linalg.det(q)) < 0.2:
            continue
        assert linalg.commutator_norm(model.r_matrix(u), linalg.kron(q, q)) < 1e-13


# --- K matrices -------------------------------------------------------------------

def test_k_minus_values(params_n1):
    assert np.allclose(model.build_K_minus(0, params_n1).matrix, params_n1.p * np.eye(2))
    km = model.build_K_minus(-params_n1.p, params_n1).matrix
    assert km[0, 0] == 0


def test_k_plus_values(params_n1):
    u = 0.37 + 0.82j
    kp = model.build_K_plus(u, params_n1).matrix
    assert abs(np.trace(kp) - 2 * params_n1.q) < 1e-14
    kp1 = model.build_K_plus(-1, params_n1).matrix
    assert kp1[0, 1] == 0 and kp1[1, 0] == 0
    diag = make_params(1, xi_plus=0.0, xi_minus=0.0)
    kpd = model.build_K_plus(u, diag).matrix
    assert kpd[0, 1] == 0 and kpd[1, 0] == 0


def test_scalar_reflection_equation(params_n1, rng):
    def residual(k_fn, u, v):
        eye = np.eye(2)
        k1 = linalg.kron(k_fn(u), eye)
        k2 = linalg.kron(eye, k_fn(v))
        rm, rp = model.r_matrix(u - v), model.r_matrix(u + v)
        lhs = rm @ k1 @ rp @ k2
        rhs = k2 @ rp @ k1 @ rm
        return np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs)

    for _ in range(5):
        u, v = (complex(*rng.uniform(-1.5, 1.5, 2)) for _ in range(2))
        assert residual(lambda w: model.k_minus_matrix(w, params_n1), u, v) < 1e-12


# --- monodromies and the open monodromy ---------------------------------------------

def test_monodromy_single_site_homogeneous():
    p = ModelParams.create([0.0], P_VAL, Q_VAL, XI_PLUS, XI_MINUS)
    u = 0.43 - 0.21j
    T, That = model.build_monodromies(u, p)
    assert np.allclose(T.matrix, model.r_matrix(u), atol=1e-14)
    assert np.allclose(That.matrix, T.matrix, atol=1e-14)


def test_monodromy_entries_polynomial_degree(params_n2):
    # fit each of a few entries through N+2 points; a degree-N polynomial
    # must reproduce a held-out point
    n = params_n2.n_sites
    pts = [0.3, -0.7, 1.1, 0.9j][: n + 2]
    extra = -1.3 + 0.4j
    for which in ((0, 0), (1, 2), (3, 3)):
        vals = [model.build_monodromies(u, params_n2)[0].matrix[which] for u in pts]
        coeff = np.polynomial.polynomial.polyfit(np.array(pts, complex), np.array(vals), n)
        got = model.build_monodromies(extra, params_n2)[0].matrix[which]
        assert abs(np.polynomial.polynomial.polyval(extra, coeff) - got) < 1e-9 * max(1, abs(got))


def test_open_k_at_zero_homogeneous():
    p = ModelParams.create([0.0], P_VAL, Q_VAL, XI_PLUS, XI_MINUS)
    # K(0) = P (p I) P = p I, by direct 4x4 products
    perm = model.PERMUTATION
    expected = perm @ (p.p * np.eye(4)) @ perm
    assert np.allclose(model.build_open_K(0, p).matrix, expected, atol=1e-14)
    assert np.allclose(expected, p.p * np.eye(4), atol=1e-14)


def test_open_k_entry_degree(params_n2):
    # entries of K(u) are polynomials of degree <= 2N+1
    n = params_n2.n_sites
    deg = 2 * n + 1
    pts = np.array([0.31 + 0.1j, -0.62, 1.2 - 0.3j, 0.8j, -1.4 + 0.2j, 2.1, 0.05 - 0.9j][: deg + 1])
    extra = 1.7 + 0.6j
    for which in ((0, 0), (2, 5), (7, 3)):
        vals = np.array([model.open_k_matrix(u, params_n2)[which] for u in pts])
        coeff = np.polynomial.polynomial.polyfit(pts, vals, deg)
        got = model.open_k_matrix(extra, params_n2)[which]
        assert abs(np.polynomial.polynomial.polyval(extra, coeff) - got) < 1e-8 * max(1, abs(got))


def test_dressed_reflection_equation(params_n2, rng):
    n = params_n2.n_sites
    chain = tuple(range(2, n + 2))
    u, v = 0.41 + 0.23j, -0.57 + 0.11j
    k1 = linalg.embed_factors(model.open_k_matrix(u, params_n2), (0,) + chain, n + 2)
    k2 = linalg.embed_factors(model.open_k_matrix(v, params_n2), (1,) + chain, n + 2)
    rm = linalg.embed_factors(model.r_matrix(u - v), (0, 1), n + 2)
    rp = linalg.embed_factors(model.r_matrix(u + v), (0, 1), n + 2)
    lhs = rm @ k1 @ rp @ k2
    rhs = k2 @ rp @ k1 @ rm
    assert np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs) < 1e-12


# --- entries and vacuum actions ------------------------------------------------------

def test_vacuum_actions(params_n2):
    omega = model.pseudo_vacuum(2)
    u = 0.53 + 0.37j
    a, b, c, d = model.entry_matrices(u, params_n2)
    assert np.allclose(a @ omega, scalars.lambda1(u, params_n2) * omega, atol=1e-12)
    assert np.allclose(d @ omega, scalars.lambda2(u, params_n2) * omega, atol=1e-12)
    assert np.allclose(c @ omega, 0, atol=1e-13)
    # B lowers the total spin by exactly one unit
    assert abs((b @ omega)[0]) == 0


def test_entry_pole_guard(params_n2):
    with pytest.raises(PoleError):
        model.extract_entries(-0.5 + 1e-8j, params_n2)


def test_transfer_forms_agree(params_n2):
    for u in (0.4 + 0.3j, -1.2 + 0.7j, 2.2 - 0.5j):
        t1 = model.build_transfer_trace(u, params_n2).matrix
        t2 = model.build_transfer_entries(u, params_n2).matrix
        assert np.linalg.norm(t1 - t2) / np.linalg.norm(t1) < 1e-12


def test_transfer_commutes(params_n3, rng):
    for _ in range(5):
        u, v = (complex(*rng.uniform(-1.5, 1.5, 2)) for _ in range(2))
        t_u = model.transfer_matrix(u, params_n3)
        t_v = model.transfer_matrix(v, params_n3)
        assert linalg.commutator_norm(t_u, t_v) < 1e-12


def test_transfer_diagonal_u1_symmetry():
    p = ModelParams.create([0.0], 2.0, 1.3, 0.0, 0.0)
    t = model.transfer_matrix(0.7, p)
    assert abs(t[0, 1]) == 0 and abs(t[1, 0]) == 0


def test_transfer_vacuum_component_lower_triangular():
    # xi+ = 0: <vac| t(u) |vac> = alpha_diag Lambda1 + delta_diag Lambda2
    p = ModelParams.create([0.13], 1.9, 0.8, 0.0, 0.9)
    u = 0.61 + 0.24j
    t = model.transfer_matrix(u, p)
    expected = (
        scalars.alpha_bar_diag(u, p) * scalars.lambda1(u, p)
        + scalars.delta_bar_diag(u, p) * scalars.lambda2(u, p)
    )
    assert abs(t[0, 0] - expected) < 1e-12 * max(1, abs(expected))


# --- Hamiltonian ----------------------------------------------------------------------

def test_hamiltonian_explicit_n2():
    p = ModelParams.create([0.0, 0.0], 1.0, 1.0, 0.0, 0.0)
    h = model.build_hamiltonian(p).matrix
    # hand-built oracle
    sz1 = np.diag([1, 1, -1, -1]).astype(complex)
    sz2 = np.diag([1, -1, 1, -1]).astype(complex)
    heis = np.array(
        [[1, 0, 0, 0], [0, -1, 2, 0], [0, 2, -1, 0], [0, 0, 0, 1]], dtype=complex
    )
    assert np.allclose(h, sz1 + heis + sz2, atol=1e-14)
    vac = np.array([1, 0, 0, 0], dtype=complex)
    assert np.allclose(h @ vac, 3 * vac, atol=1e-14)
    assert 3.0 in set(np.round(np.linalg.eigvalsh(h.real + 0.0), 10))


def test_hamiltonian_commutes_with_transfer(rng):
    p = ModelParams.create([0.0, 0.0, 0.0], P_VAL, Q_VAL, XI_PLUS, XI_MINUS)
    h = model.build_hamiltonian(p).matrix
    for _ in range(4):
        u = complex(*rng.uniform(-1.5, 1.5, 2))
        assert linalg.commutator_norm(h, model.transfer_matrix(u, p)) < 1e-12


def test_hamiltonian_symmetric_for_real_couplings():
    p = ModelParams.create([0.0, 0.0], 1.4, 0.9, 0.5, 0.5, eta_plus=0.3, eta_minus=0.3)
    h = model.build_hamiltonian(p).matrix
    assert np.allclose(h, h.T, atol=1e-14)
    assert np.allclose(h.imag, 0, atol=1e-14)


def test_hamiltonian_rejects_zero_strengths():
    p = ModelParams.create([0.0], 0.0, 1.0)
    with pytest.raises(ParameterError):
        model.build_hamiltonian(p)


def test_spectral_operator_immutable(params_n1):
    op = model.build_R(0.3)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 5.0


def test_spectral_operator_rejects_non_finite():
    bad = np.eye(2, dtype=complex)
    bad[0, 0] = np.nan
    with pytest.raises(ParameterError):
        model.SpectralOperator(0.0, bad, "X")
