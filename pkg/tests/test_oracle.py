import numpy as np
import pytest
from scipy.linalg import expm

from bilayer_squeeze import oracle
from bilayer_squeeze.lattice import LatticeSpec, build_coupling_table


def dense_reference(spec, t_values):
    """Independent dense construction: kron-product operators + expm."""
    table = build_coupling_table(spec)
    n = spec.n_sites
    sx = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
    sy = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = 0.5 * np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)

    def site_op(single, site):
        m = np.array([[1.0 + 0j]])
        for s in range(n - 1, -1, -1):  # site 0 = least significant bit
            m = np.kron(m, single if s == site else eye)
        return m

    sxs = [site_op(sx, i) for i in range(n)]
    sys_ = [site_op(sy, i) for i in range(n)]
    szs = [site_op(sz, i) for i in range(n)]
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i, j, v in table.intra_pairs:
        h += v * (sxs[i] @ sxs[j] + sys_[i] @ sys_[j] + szs[i] @ szs[j])
    for i, j, v in table.inter_pairs:
        h += v * (sxs[i] @ sxs[j] + sys_[i] @ sys_[j])
    n_a = spec.spins_per_layer
    o_minus = sum(sxs[i] for i in range(n_a)) + sum(sys_[i] for i in range(n_a, n))
    psi0 = oracle.initial_state(spec)
    out = []
    for t in t_values:
        psi = expm(1j * h * t) @ psi0  # squeezing sign convention
        m1 = np.vdot(psi, o_minus @ psi).real
        m2 = np.vdot(psi, o_minus @ o_minus @ psi).real
        out.append(m2 - m1**2)
    return np.array(out)


def test_two_spin_closed_form_convention():
    # a single XX pair squeezes O^- as Var = 1/2 - sin(V t)/2 under the
    # artifact's evolution sign; verified via an independent 4x4 expm
    v = 0.9
    sx = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
    sy = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
    eye = np.eye(2)
    h = v * (np.kron(sx, eye) @ np.kron(eye, sx) + np.kron(sy, eye) @ np.kron(eye, sy))
    # site 0 (layer A) = first factor up; site 1 (layer B) down
    psi0 = np.kron(np.array([1, 0]), np.array([0, 1])).astype(complex)
    o_minus = np.kron(sx, eye) + np.kron(eye, sy)
    for t in np.linspace(0, 2.0, 9):
        psi = expm(1j * oracle.EVOLUTION_SIGN * h * t) @ psi0
        m1 = np.vdot(psi, o_minus @ psi).real
        m2 = np.vdot(psi, o_minus @ o_minus @ psi).real
        var = m2 - m1**2
        assert abs(var - (0.5 - 0.5 * np.sin(v * t))) < 1e-12


def test_size_guard():
    spec = LatticeSpec("square", L=2, a_z=1.0, alpha=3.0, lam=1.0)  # 8 spins: fine
    oracle.HamiltonianAction(build_coupling_table(spec))
    big = LatticeSpec("square", L=3, a_z=1.0, alpha=3.0, lam=1.0)  # 36 spins
    with pytest.raises(ValueError, match="exceed"):
        oracle.HamiltonianAction(build_coupling_table(big))


def test_polarized_state_stationary_without_interlayer():
    # the product state is an eigenstate of the intralayer Heisenberg terms
    spec = LatticeSpec("ladder", L=3, a_z=1.0, alpha=2.0, lam=0.0)
    series = oracle.evolve(spec, np.linspace(0, 2, 9))
    assert np.allclose(series.var_o_minus, series.var_o_minus[0], atol=1e-8)
    assert np.allclose(series.mean_o_minus, series.mean_o_minus[0], atol=1e-8)
    assert np.allclose(series.sz_a, series.sz_a[0], atol=1e-10)


def test_initial_variance_exact():
    spec = LatticeSpec("ladder", L=4, a_z=1.0, alpha=2.0, lam=1.0)
    series = oracle.evolve(spec, np.array([0.0, 0.1]))
    assert abs(series.var_o_minus[0] - spec.spins_per_layer / 2) < 1e-12


def test_against_dense_reference():
    spec = LatticeSpec("ladder", L=3, a_z=1.0, alpha=2.0, lam=1.0)
    ts = np.linspace(0, 1.5, 7)
    ref = dense_reference(spec, ts)
    series = oracle.evolve(spec, ts)
    assert np.max(np.abs(series.var_o_minus - ref)) < 1e-8


def test_conservation_laws():
    spec = LatticeSpec("ladder", L=4, a_z=1.0, alpha=2.0, lam=1.0)
    series = oracle.evolve(spec, np.linspace(0, 3, 16))
    assert np.max(np.abs(series.norm - 1.0)) < 1e-10
    assert np.max(np.abs(series.energy_mean - series.energy_mean[0])) < 1e-10
    total_sz = series.sz_a + series.sz_b
    assert np.max(np.abs(total_sz - total_sz[0])) < 1e-10


def test_uncertainty_relation():
    # Var[O^-] Var[O^+] >= |<[O^-, O^+]>|^2 / 4 = <Sz_A - Sz_B>^2 / 4
    spec = LatticeSpec("ladder", L=3, a_z=1.0, alpha=1.5, lam=1.0)
    series = oracle.evolve(spec, np.linspace(0, 2.5, 21))
    lhs = series.var_o_minus * series.var_o_plus
    rhs = (series.sz_a - series.sz_b) ** 2 / 4.0
    assert np.all(lhs >= rhs * (1 - 1e-9))
