import numpy as np
import pytest

from bilayer_squeeze import analysis as an


def make_set(label, x, y, sigma, group=None):
    return an.DataSet(label, np.asarray(x, float), np.asarray(y, float),
                      np.asarray(sigma, float), group_value=group)


# ---------------------------------------------------------------------------
# power-law fit
# ---------------------------------------------------------------------------

def test_fit_power_law_planted():
    n = np.array([50.0, 100.0, 200.0, 400.0])
    y = 2.7 * n**0.5
    p, unc = an.fit_power_law(zip(n, y, 0.02 * y))
    assert abs(p - 0.5) < 1e-10


def test_fit_power_law_constant_with_noise():
    rng = np.random.default_rng(0)
    n = np.array([64.0, 128.0, 256.0, 512.0])
    y = 3.0 * (1 + 0.01 * rng.standard_normal(4))
    p, unc = an.fit_power_law(zip(n, y, 0.03 * y))
    assert abs(p) < 3 * unc


def test_fit_power_law_errors():
    with pytest.raises(ValueError):
        an.fit_power_law([(10, 1.0, 0.1), (20, 2.0, 0.1)])
    with pytest.raises(ValueError):
        an.fit_power_law([(10, 1.0, 0.1), (20, -2.0, 0.1), (40, 3.0, 0.1)])


# ---------------------------------------------------------------------------
# transition detection
# ---------------------------------------------------------------------------

def test_detect_transition_step():
    curve = [(0.5, 0.3, 0.01), (0.75, 0.3, 0.01), (1.0, 0.3, 0.01),
             (1.25, 0.0, 0.01), (1.5, 0.0, 0.01)]
    assert an.detect_transition(curve) == 1.0


def test_detect_transition_graded_interpolates_to_threshold():
    curve = [(0.6, 0.4, 0.01), (0.8, 0.2, 0.01), (1.0, 0.04, 0.01), (1.2, 0.0, 0.01)]
    x_c = an.detect_transition(curve, threshold=0.05)
    # crossing of the 0.05 level between x=0.8 (p=0.2) and x=1.0 (p=0.04)
    expected = 0.8 + 0.2 * (0.2 - 0.05) / (0.2 - 0.04)
    assert abs(x_c - expected) < 1e-12


def test_detect_transition_errors():
    with pytest.raises(an.AnalysisError, match="no partially collective"):
        an.detect_transition([(0.5, 0.0, 0.01), (1.0, 0.01, 0.02)])
    with pytest.raises(an.AnalysisError, match="no collective"):
        an.detect_transition([(0.5, 0.3, 0.01), (1.0, 0.4, 0.01)])


# ---------------------------------------------------------------------------
# cost function
# ---------------------------------------------------------------------------

def test_cost_identical_sets_is_zero():
    x = np.linspace(0, 1, 15)
    y = np.cos(x) + 2
    s = 0.05 * np.ones_like(x)
    assert an.cost_function([make_set(1.0, x, y, s), make_set(1.0, x, y, s)], 0.4, -0.9) == 0.0


def test_cost_ten_sigma_offset():
    # constant 10 sigma offset: every term contributes (10 s)^2/(2 s^2) = 50
    x = np.linspace(0, 2, 30)
    y = np.sin(x) + 3
    s = np.full_like(x, 0.2)
    sets = [make_set(1.0, x, y, s), make_set(1.0, x, y + 10 * 0.2, s)]
    assert abs(an.cost_function(sets, 0.0, 0.0) - 50.0) < 1e-9


def test_cost_sigma_scaling_and_symmetry():
    rng = np.random.default_rng(1)
    x = np.linspace(0, 1, 12)
    sets = [
        make_set(g, x, rng.uniform(1, 2, x.size), np.full(x.size, 0.1))
        for g in (1.0, 2.0)
    ]
    s1 = an.cost_function(sets, 0.1, 0.2)
    scaled = [make_set(d.label_value, d.x, d.y, 3.0 * d.sigma) for d in sets]
    assert np.isclose(an.cost_function(scaled, 0.1, 0.2), s1 / 9.0)
    assert np.isclose(an.cost_function(sets[::-1], 0.1, 0.2), s1)


def test_cost_overlap_handling():
    x1 = np.linspace(0, 1, 10)
    x2 = np.linspace(5, 6, 10)
    s = np.full(10, 0.1)
    sets = [make_set(1.0, x1, x1 + 1, s), make_set(1.0, x2, x2 + 1, s)]
    with pytest.raises(an.AnalysisError, match="overlap"):
        with pytest.warns(UserWarning, match="skipped"):
            an.cost_function(sets, 0.0, 0.0)


def test_cost_planted_minimum_on_grid():
    # y = g^a F(x g^b): S at (d_x, d_y) = (-b, -a) is the grid minimum
    rng = np.random.default_rng(2)
    a, b = -0.8, 0.6
    sets = []
    for g in (1.0, 2.0, 4.0):
        u = np.linspace(0.5, 2.0, 40)  # collapsed abscissa
        x = u * g**b
        y = g**a * (1.0 + np.exp(-((u - 1.2) ** 2)))
        sets.append(make_set(g, x, y * (1 + 0.005 * rng.standard_normal(u.size)),
                             0.005 * y))
    s_opt = an.cost_function(sets, -b, -a)
    for dx in np.linspace(-1.2, 0.2, 8):
        for dy in np.linspace(-0.2, 1.4, 8):
            assert s_opt <= an.cost_function(sets, dx, dy) + 1e-12


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def planted_family(a=-1.2, b=0.45, noise=0.02, seed=4):
    rng = np.random.default_rng(seed)
    sets = []
    for g in (1.0, 1.6, 2.5, 4.0):
        u = np.linspace(0.3, 2.8, 50)
        x = u * g**b
        f = np.exp(-((u - 1.4) ** 2)) + 0.4
        y = g**a * f * (1 + noise * rng.standard_normal(u.size))
        sets.append(make_set(g, x, y, noise * g**a * np.ones(u.size)))
    return sets


def test_optimize_collapse_2d_planted():
    a, b = -1.2, 0.45
    sets = planted_family(a, b)
    d_v, d_tau, unc_v, unc_t, s_min = an.optimize_collapse_2d(sets)
    # generator has x ~ g^b, so x g^{-d_tau} collapses at d_tau = b, d_v = a
    assert abs(d_v - a) <= max(unc_v, 0.02)
    assert abs(d_tau - b) <= max(unc_t, 0.02)
    assert s_min <= 2.0


def test_optimize_collapse_1d_planted():
    rng = np.random.default_rng(9)
    d_v, d_tau, p, d, delta_true = -1.0, 0.5, 0.2, 2, 1.1
    sets = []
    for n in (400, 900, 1600):
        for a_z in (2.0, 3.0, 4.5):
            u = np.linspace(-1.0, 2.0, 60)
            x = u * a_z**d_tau * n ** (-delta_true * d_tau / d)
            f = 1.0 + 0.7 * np.exp(u)
            y = f * a_z**d_v * n ** (p - d_v / d)
            sets.append(make_set(a_z, x, y * (1 + 0.02 * rng.standard_normal(u.size)),
                                 0.02 * np.abs(y), group=n))
    delta, unc, s_min = an.optimize_collapse_1d(sets, d_v, d_tau, p, d)
    assert abs(delta - delta_true) <= max(3 * unc, 0.1)
    assert s_min <= 2.0
    with pytest.raises(ValueError, match="group_value"):
        an.optimize_collapse_1d(planted_family(), d_v, d_tau, p, d)


# ---------------------------------------------------------------------------
# constraint arithmetic and sigma default
# ---------------------------------------------------------------------------

def test_derive_nu_table_values():
    nu, _ = an.derive_nu(p=0.175, d_v=-1.11, delta=1.06, d=2)
    assert abs(nu - 0.14) < 0.005
    nu, _ = an.derive_nu(p=0.30, d_v=-0.62, delta=1.02, d=1)
    assert abs(nu - 0.29) < 0.005


def test_derive_nu_degenerate_and_round_trip():
    nu, _ = an.derive_nu(p=0.37, d_v=-1.5, delta=1.0, d=2)
    assert nu == 0.37  # delta = 1 makes the constraint collapse to nu = p
    p, d_v, delta, d = 0.21, -0.9, 0.6, 2
    nu, _ = an.derive_nu(p, d_v, delta, d)
    assert np.isclose(p, nu + d_v * (1 - delta) / d)
    with pytest.raises(ValueError):
        an.derive_nu(0.1, -1.0, 1.0, 3)


def test_derive_nu_propagates_uncertainty():
    _, unc = an.derive_nu(0.2, -1.0, 0.5, 2, unc_p=0.01, unc_d_v=0.2, unc_delta=0.1)
    expected = np.sqrt(0.01**2 + (0.5 / 2 * 0.2) ** 2 + (1.0 / 2 * 0.1) ** 2)
    assert np.isclose(unc, expected)


def test_default_sigma():
    assert np.isclose(an.default_sigma(10.0), 0.4)
    assert np.isclose(an.default_sigma(10.0, factor=0.1), 1.0)
    with pytest.raises(ValueError):
        an.default_sigma(0.0)
