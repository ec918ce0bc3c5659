import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from conftest import GALLERY
from gradstable.parse import parse_polynomial
from gradstable.poly import NumericPolynomial, Polynomial, initial_form
from gradstable.sphere import (NEG_CERTIFIED, POS_CERTIFIED, UNCERTIFIED, MeshError, Side, betti_summary,
                               build_mesh, classify_region, count_components, euler_characteristic, radius_sweep,
                               unit_sphere_summaries)


def P(text, names="xyz"):
    return parse_polynomial(text, names)


def regions(text, names="xyz", r=0.25, level=4, extra=6):
    f = P(text, names)
    return classify_region(f, build_mesh(f.n_vars, r, level), extra)


# -- meshes ----------------------------------------------------------------


def test_mesh_sizes():
    assert build_mesh(2, 1.0, 0).n_cells == 16
    assert build_mesh(3, 1.0, 0).n_cells == 20
    assert build_mesh(3, 1.0, 2).n_cells == 320
    with pytest.raises(MeshError):
        build_mesh(4, 1.0, 2)
    with pytest.raises(MeshError):
        build_mesh(3, 0.0, 2)


@pytest.mark.parametrize("level", range(5))
def test_uniform_mesh_euler(level):
    assert build_mesh(2, 1.0, level).euler_characteristic() == 0
    assert build_mesh(3, 1.0, level).euler_characteristic() == 2


def _refine_randomly(n, picks):
    mesh = build_mesh(n, 1.0, 1)
    for pick in picks:
        sel = np.zeros(mesh.n_cells, dtype=bool)
        sel[[i % mesh.n_cells for i in pick]] = True
        children = mesh.split(mesh.cells[sel])
        per = len(children) // sel.sum()
        mesh.cells = np.concatenate([mesh.cells[~sel], children])
        mesh.depth = np.concatenate([mesh.depth[~sel], np.repeat(mesh.depth[sel] + 1, per)])
    return mesh


_picks = st.lists(st.lists(st.integers(0, 10_000), min_size=1, max_size=6), min_size=1, max_size=4)


@settings(max_examples=1000, deadline=None)
@given(st.sampled_from([2, 3]), _picks)
def test_adaptive_mesh_stays_a_sphere(n, picks):
    mesh = _refine_randomly(n, picks)
    assert mesh.euler_characteristic() == (2 if n == 3 else 0)
    assert np.all(mesh.facet_owner_counts() == 2)
    assert mesh.cell_measures().sum() == pytest.approx(4 * np.pi if n == 3 else 2 * np.pi)


def test_adjacency_symmetric_and_facets_shared():
    mesh = _refine_randomly(3, [[0, 5, 9], [3, 40]])
    adj = mesh.adjacency()
    for i, nb in enumerate(adj):
        assert i not in nb
        assert all(i in adj[j] for j in nb)
    assert np.all(mesh.facet_owner_counts() == 2)


# -- classification --------------------------------------------------------


def test_negative_definite_is_all_negative():
    rc = regions("-x^2 - y^2", "xy")
    assert np.all(rc.labels == NEG_CERTIFIED)
    assert rc.certified_fraction == 1.0


def test_uncertified_cells_only_near_zeros():
    rc = regions("-y^2", "xy", level=4)
    assert not (rc.labels == POS_CERTIFIED).any()
    unc = rc.labels == UNCERTIFIED
    assert unc.any()
    centres = rc.mesh.vertices[rc.mesh.cells[unc]].mean(axis=1)
    assert np.all(np.abs(centres[:, 1]) < 0.05)


def test_octants_of_xyz():
    rc = regions("x*y*z", level=3)
    c = rc.mesh.vertices[rc.mesh.cells].mean(axis=1)
    sure = rc.labels != UNCERTIFIED
    assert np.all(np.sign(np.prod(c[sure], axis=1)) == rc.labels[sure])
    assert count_components(rc, Side.NEG).b0 == 4


@pytest.mark.parametrize("name", ["xyz_minus_z4", "annulus", "cusp_family", "four_points", "monkey"])
def test_certified_labels_are_sound(name):
    text, names = GALLERY[name]
    rc = regions(text, names)
    num = NumericPolynomial.from_polynomial(rc.polynomial)
    rng = np.random.default_rng(1)
    mesh = rc.mesh
    sure = np.flatnonzero(rc.labels != UNCERTIFIED)
    k = mesh.cells.shape[1]
    for cid in rng.choice(sure, size=min(200, len(sure)), replace=False):
        w = rng.dirichlet(np.ones(k), size=100)
        pts = w @ mesh.vertices[mesh.cells[cid]]
        pts *= mesh.radius / np.linalg.norm(pts, axis=1, keepdims=True)
        vals = num(pts)
        if rc.labels[cid] == NEG_CERTIFIED:
            assert np.all(vals < 0)
        else:
            assert np.all(vals > 0)


def test_certified_fraction_grows_with_refinement():
    f = P("x*y*z - z^4")
    mesh = build_mesh(3, 0.25, 3)
    fracs = [classify_region(f, mesh, k, critical_levels=0).certified_fraction for k in range(5)]
    assert all(a <= b + 1e-12 for a, b in zip(fracs, fracs[1:]))
    assert fracs[-1] > fracs[0]


def test_input_mesh_not_modified():
    mesh = build_mesh(3, 0.25, 2)
    before = mesh.cells.copy()
    classify_region(P("x*y*z - z^4"), mesh, 3)
    assert np.array_equal(mesh.cells, before)


# -- topology --------------------------------------------------------------


@pytest.mark.parametrize("text,expected", [
    ("z*x^2 + z*y^2", (1, 0, 1)),  # lower hemisphere minus the pole
    ("x*y*z", (4, 4, 0)),
    ("x^2 + y^2 + z^2", (0, 0, 0)),
    ("-x^2 - y^2 - z^2", (1, 2, 0)),
])
def test_unit_sphere_examples(text, expected):
    f = P(text)
    omega = initial_form(f).omega
    neg, _, _ = unit_sphere_summaries(omega, level=4)
    assert neg.key() == expected


def test_constant_negative_sphere():
    rc = classify_region(Polynomial.constant(3, -1), build_mesh(3, 1.0, 2), 2)
    s = betti_summary(rc, Side.NEG)
    assert (s.b0, s.euler, s.b1, s.full) == (1, 2, 0, True)


def test_full_circle_topology():
    s = betti_summary(regions("-x^2 - y^2", "xy"), Side.NEG)
    assert (s.b0, s.euler, s.b1) == (1, 0, 1)


def test_empty_side():
    s = betti_summary(regions("x^2 + y^2", "xy"), Side.NEG)
    assert s.empty and s.key() == (0, 0, 0)


@pytest.mark.parametrize("name", ["xyz_minus_z4", "annulus", "cusp_family", "xyz_quartic", "four_points"])
def test_euler_characteristics_add_to_two(name):
    text, names = GALLERY[name]
    rc = regions(text, names, r=0.125, level=5)
    assert euler_characteristic(rc, Side.NEG) + euler_characteristic(rc, Side.POS) == 2


@settings(max_examples=1000, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3))
def test_first_betti_number_nonnegative(a, b, c, d):
    f = Polynomial(3, {(2, 0, 0): a, (0, 2, 0): b, (0, 0, 2): c, (1, 1, 1): d})
    if f.is_zero():
        return
    rc = classify_region(f, build_mesh(3, 0.5, 1), 2, critical_levels=4)
    for side in Side:
        s = betti_summary(rc, side)
        assert s.b1 >= 0 or not s.certified


# -- radius sweep and gallery ----------------------------------------------


def test_sweep_rejects_bad_radii():
    f = P("x^3 - y^2", "xy")
    with pytest.raises(MeshError):
        radius_sweep(f, [0.25, 0.125])
    with pytest.raises(MeshError):
        radius_sweep(f, [0.25, 0.5, 0.125])


def test_sweep_stabilizes_on_cusp():
    sw = radius_sweep(P("x^3 - y^2", "xy"))
    assert sw.stabilized
    assert sw.s_r.key() == (1, 1, 0) and sw.s_r.certified
    assert all(s.stabilized for s in sw.neg + sw.pos)


# (S_r b0, chi, b1), (Omega b0, chi, b1): frozen from the mesh engine after
# the b0 columns were checked against the sampling oracle below
GOLDEN = {
    "x3_minus_y2": ((1, 1, 0), (2, 2, 0)),
    "xyz_minus_z4": ((2, 2, 0), (4, 4, 0)),
    "annulus": ((2, 2, 0), (1, 0, 1)),
    "cusp_family": ((1, 0, 1), (2, 2, 0)),
    "xyz_quartic": ((2, 1, 1), (4, 4, 0)),
    "four_points": ((1, -1, 2), (1, -2, 3)),
    "monkey": ((1, 1, 0), (1, 1, 0)),
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_gallery_golden(name):
    text, names = GALLERY[name]
    f = P(text, names)
    sw = radius_sweep(f)
    omega, _, _ = unit_sphere_summaries(initial_form(f).omega)
    assert sw.stabilized and sw.s_r.certified and omega.certified
    assert (sw.s_r.key(), omega.key()) == GOLDEN[name]


# -- independent sampling oracle -------------------------------------------


def _fibonacci_sphere(N):
    k = np.arange(N) + 0.5
    z = 1 - 2 * k / N
    phi = np.pi * (1 + 5 ** 0.5) * k
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], 1)


def sampled_negative_components(f, r, N=200_000, margin=0.3, min_size=8):
    """Components of {f < 0} on the sphere of radius r from dense point samples.

    Points with |f| below margin * spacing * r * |grad f| are discarded so
    that regions touching at a point are not glued together.  Two kept points
    are linked when they are neighbours and f stays negative along the arc
    between them; components with fewer than min_size points are noise.
    """
    num = NumericPolynomial.from_polynomial(f)
    pts = _fibonacci_sphere(N)
    h = 2.0 * np.sqrt(4 * np.pi / N)
    vals = num(r * pts)
    gn = np.linalg.norm(num.grad(r * pts), axis=1)
    q = pts[(vals < 0) & (np.abs(vals) > margin * h * r * gn)]
    pairs = cKDTree(q).query_pairs(h, output_type="ndarray")
    ok = np.ones(len(pairs), dtype=bool)
    for t in np.linspace(0, 1, 9)[1:-1]:
        m = (1 - t) * q[pairs[:, 0]] + t * q[pairs[:, 1]]
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        ok &= num(r * m) < 0
    pairs = pairs[ok]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(q), len(q)))
    _, lab = connected_components(graph, directed=False)
    return int((np.bincount(lab) >= min_size).sum()) if len(q) else 0


@pytest.mark.parametrize("name", ["xyz_minus_z4", "annulus", "cusp_family", "xyz_quartic", "four_points"])
def test_component_counts_match_sampling_oracle(name):
    text, names = GALLERY[name]
    f = P(text, names)
    omega = initial_form(f).omega
    mesh_s = betti_summary(classify_region(f, build_mesh(3, 0.25, 5)), Side.NEG).b0
    mesh_o, _, _ = unit_sphere_summaries(omega)
    assert mesh_s == sampled_negative_components(f, 0.25)
    assert mesh_o.b0 == sampled_negative_components(omega, 1.0)
