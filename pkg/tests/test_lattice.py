import itertools
import json

import numpy as np
import pytest

from bilayer_squeeze.lattice import (
    Boundary,
    Geometry,
    LatticeSpec,
    SiteIndex,
    build_coupling_table,
    build_positions,
    coupling_strength,
    displacement,
    pairwise_distances,
)


def test_square_l2_positions():
    spec = LatticeSpec("square", L=2, a_z=1.0, alpha=3.0, lam=1.0)
    sites = build_positions(spec)
    assert len(sites) == 8
    a_positions = {tuple(np.round(p, 12)) for s, p in sites if s.layer == "A"}
    assert a_positions == {(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)}
    assert all(p[2] == 0.0 for s, p in sites if s.layer == "A")


def test_ladder_l3_positions():
    spec = LatticeSpec("ladder", L=3, a_z=2.0, alpha=2.0, lam=1.0)
    sites = build_positions(spec)
    assert len(sites) == 6
    assert all(p[2] == 2.0 for s, p in sites if s.layer == "B")


def test_honeycomb_nearest_neighbour_distance_is_one():
    # exhaustive pairwise scan over the generated positions
    spec = LatticeSpec("honeycomb", L=2, a_z=1.0, alpha=3.0, lam=1.0)
    sites = build_positions(spec)
    assert len(sites) == 16
    dist = pairwise_distances(spec)
    a_idx = [i for i, (s, _) in enumerate(sites) if s.layer == "A"]
    d_a = dist[np.ix_(a_idx, a_idx)]
    off_diag = d_a[d_a > 1e-12]
    assert np.isclose(off_diag.min(), 1.0)
    # every honeycomb site has exactly 3 in-layer nearest neighbours
    assert np.all(np.sum(np.isclose(d_a, 1.0), axis=1) == 3)


def test_site_ordering_is_deterministic():
    spec = LatticeSpec("square", L=2, a_z=1.0, alpha=3.0, lam=1.0)
    sites = [s for s, _ in build_positions(spec)]
    assert sites[0] == SiteIndex("A", (0, 0), 0)
    assert sites[4] == SiteIndex("B", (0, 0), 0)
    cells = [s.cell for s in sites[:4]]
    assert cells == sorted(cells)


def test_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec("square", L=1, a_z=1.0, alpha=3.0, lam=1.0)
    with pytest.raises(ValueError):
        LatticeSpec("square", L=4, a_z=0.0, alpha=3.0, lam=1.0)
    with pytest.raises(ValueError):
        LatticeSpec("square", L=4, a_z=1.0, alpha=3.0, lam=-0.5)
    with pytest.raises(ValueError):
        LatticeSpec("nonsense", L=4, a_z=1.0, alpha=3.0, lam=1.0)


def test_minimum_image_displacement():
    spec = LatticeSpec("square", L=4, a_z=1.0, alpha=3.0, lam=1.0)
    i = SiteIndex("A", (0, 0), 0)
    j = SiteIndex("A", (3, 0), 0)
    assert np.isclose(np.linalg.norm(displacement(spec, i, j)), 1.0)
    open_spec = LatticeSpec("square", L=4, a_z=1.0, alpha=3.0, lam=1.0, boundary="open")
    assert np.isclose(np.linalg.norm(displacement(open_spec, i, j)), 3.0)
    j_above = SiteIndex("B", (0, 0), 0)
    assert np.isclose(np.linalg.norm(displacement(spec, i, j_above)), spec.a_z)
    with pytest.raises(ValueError):
        displacement(spec, i, i)


def test_coupling_strength():
    assert coupling_strength(1.0, 3.0) == 1.0
    assert coupling_strength(2.0, 3.0) == 0.125
    assert coupling_strength(2.0, 0.0) == 1.0  # infinite-range limit
    with pytest.raises(ValueError):
        coupling_strength(0.0, 3.0)


def test_ladder_l2_open_table_brute_force():
    # hand enumeration over the 4 sites: one intra pair per layer at V=1,
    # two inter pairs at distance 1 and two at sqrt(2)
    spec = LatticeSpec("ladder", L=2, a_z=1.0, alpha=2.0, lam=1.0, boundary="open")
    table = build_coupling_table(spec)
    assert sorted(v for _, _, v in table.intra_pairs) == [1.0, 1.0]
    inter = sorted(v for _, _, v in table.inter_pairs)
    assert np.allclose(inter, [0.5, 0.5, 1.0, 1.0])


def test_lambda_scaling_of_interlayer():
    base = LatticeSpec("ladder", L=4, a_z=1.5, alpha=2.5, lam=1.0)
    doubled = LatticeSpec("ladder", L=4, a_z=1.5, alpha=2.5, lam=2.0)
    zero = LatticeSpec("ladder", L=4, a_z=1.5, alpha=2.5, lam=0.0)
    t1, t2, t0 = map(build_coupling_table, (base, doubled, zero))
    assert np.allclose(t2.inter_v, 2.0 * t1.inter_v)
    assert np.allclose(t2.intra_v, t1.intra_v)
    assert np.all(t0.inter_v == 0.0)


def test_intralayer_strengths_independent_of_az_and_lambda():
    t1 = build_coupling_table(LatticeSpec("square", L=3, a_z=0.7, alpha=3.0, lam=0.3))
    t2 = build_coupling_table(LatticeSpec("square", L=3, a_z=5.0, alpha=3.0, lam=2.0))
    assert np.allclose(t1.intra_v, t2.intra_v)


@pytest.mark.parametrize("geometry", ["ladder", "square", "triangular", "honeycomb"])
def test_layer_coupling_multisets_match(geometry):
    spec = LatticeSpec(geometry, L=3, a_z=1.0, alpha=2.5, lam=1.0)
    table = build_coupling_table(spec)
    n_a = spec.spins_per_layer
    in_a = sorted(v for i, j, v in table.intra_pairs if i < n_a and j < n_a)
    in_b = sorted(v for i, j, v in table.intra_pairs if i >= n_a and j >= n_a)
    assert np.allclose(in_a, in_b)


def test_translation_invariance_periodic():
    spec = LatticeSpec("square", L=3, a_z=1.0, alpha=2.0, lam=1.0)
    sites = [s for s, _ in build_positions(spec)]
    index = {s: m for m, s in enumerate(sites)}
    dist = pairwise_distances(spec)

    def shifted(s: SiteIndex, delta) -> SiteIndex:
        cell = tuple((c + d) % spec.L for c, d in zip(s.cell, delta))
        return SiteIndex(s.layer, cell, s.sublattice)

    for delta in [(1, 0), (2, 1)]:
        for a, b in itertools.combinations(range(len(sites)), 2):
            ta, tb = index[shifted(sites[a], delta)], index[shifted(sites[b], delta)]
            assert np.isclose(dist[a, b], dist[ta, tb])


def test_interlayer_sum_rule_ratio():
    # per-site interlayer sum at a_z and 2 a_z approaches 2^(d - alpha)
    alpha, d = 3.0, 1
    L = 512
    s1 = LatticeSpec("ladder", L=L, a_z=4.0, alpha=alpha, lam=1.0)
    s2 = LatticeSpec("ladder", L=L, a_z=8.0, alpha=alpha, lam=1.0)

    def per_site_sum(spec):
        table = build_coupling_table(spec)
        mask = table.inter_i == 0
        return table.inter_v[mask].sum()

    ratio = per_site_sum(s2) / per_site_sum(s1)
    assert abs(ratio - 2.0 ** (d - alpha)) < 0.01


def test_spec_json_round_trip():
    spec = LatticeSpec("triangular", L=5, a_z=1.25, alpha=2.75, lam=0.8, boundary="open")
    blob = spec.to_json()
    back = LatticeSpec.from_json(blob)
    assert back == spec
    d = json.loads(blob)
    assert set(d) == {"geometry", "L", "a_z", "alpha", "lambda", "boundary"}


def test_honeycomb_spin_count():
    spec = LatticeSpec("honeycomb", L=3, a_z=1.0, alpha=3.0, lam=1.0)
    assert spec.spins_per_layer == 2 * 3**2
    assert spec.n_sites == 4 * 3**2
