import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsnlab.mesh import DomainName, Mesh, MeshError, build_named_domain, parse_domain, refine


DOMAINS = ["interval:0,1", "square", "disk", "annulus"]


class TestParseDomain:
    def test_defaults(self):
        assert parse_domain("interval") == DomainName.interval(0.0, 1.0)
        assert parse_domain("disk") == DomainName.unit_disk(1.0)
        assert parse_domain("annulus") == DomainName.annulus(0.5, 1.0)
        assert parse_domain("unit_square").dim == 2

    def test_parameters(self):
        assert parse_domain("interval:-1,1").params == (-1.0, 1.0)
        assert parse_domain("annulus:0.25,2").params == (0.25, 2.0)

    @pytest.mark.parametrize("bad", ["torus", "interval:1,0", "interval:a,b", "square:2",
                                     "annulus:1,0.5", "disk:-1"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_domain(bad)

    def test_label_round_trip(self):
        for d in DOMAINS:
            name = parse_domain(d)
            assert parse_domain(name.label()) == name


@pytest.mark.parametrize("domain,chi", [("interval:0,1", 1), ("square", 1), ("disk", 1),
                                        ("annulus", 0)])
@pytest.mark.parametrize("n", [2, 4])
def test_euler_characteristic(domain, chi, n):
    mesh = build_named_domain(parse_domain(domain), n)
    assert mesh.euler_characteristic() == chi


@pytest.mark.parametrize("domain", DOMAINS)
def test_cells_positively_oriented(domain):
    mesh = build_named_domain(parse_domain(domain), 4)
    v = mesh.vertices[mesh.cells]
    if mesh.dim == 1:
        vol = v[:, 1, 0] - v[:, 0, 0]
    else:
        e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
        vol = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    assert np.all(vol > 0)


class TestGeometry:
    def test_square_measures(self):
        mesh = build_named_domain(parse_domain("square"), 4)
        assert mesh.volume() == pytest.approx(1.0)
        assert mesh.boundary_measure() == pytest.approx(4.0)

    def test_disk_converges(self):
        areas = [build_named_domain(parse_domain("disk"), n).volume() for n in (2, 4, 8)]
        errs = [abs(a - np.pi) for a in areas]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 2e-2

    def test_boundary_vertices_on_circles(self):
        mesh = build_named_domain(parse_domain("annulus"), 4)
        bv = {v for f in mesh.boundary_facets for v in f.vertices}
        r = np.linalg.norm(mesh.vertices[sorted(bv)], axis=1)
        assert np.all(np.isclose(r, 0.5) | np.isclose(r, 1.0))

    @pytest.mark.parametrize("domain", ["square", "disk", "annulus"])
    def test_normals_point_inward(self, domain):
        mesh = build_named_domain(parse_domain(domain), 4)
        for f in mesh.boundary_facets:
            mid = mesh.vertices[list(f.vertices)].mean(axis=0)
            centroid = mesh.vertices[mesh.cells[f.cell]].mean(axis=0)
            assert np.dot(np.array(f.normal), centroid - mid) > 0
            assert np.linalg.norm(f.normal) == pytest.approx(1.0)

    def test_interval_normals(self):
        mesh = build_named_domain(parse_domain("interval:0,1"), 4)
        normals = {mesh.vertices[f.vertices[0], 0]: f.normal[0] for f in mesh.boundary_facets}
        assert normals == {0.0: 1.0, 1.0: -1.0}


class TestRefine:
    @pytest.mark.parametrize("domain", DOMAINS)
    def test_cell_count_and_h(self, domain):
        mesh = build_named_domain(parse_domain(domain), 2)
        fine = refine(mesh)
        factor = 2 if mesh.dim == 1 else 4
        assert fine.n_cells == factor * mesh.n_cells
        assert fine.h() < mesh.h()
        assert fine.level == mesh.level + 1
        assert fine.euler_characteristic() == mesh.euler_characteristic()

    def test_square_preserves_area(self):
        mesh = refine(build_named_domain(parse_domain("square"), 2))
        assert mesh.volume() == pytest.approx(1.0)

    def test_circle_midpoints_snapped(self):
        fine = refine(build_named_domain(parse_domain("disk"), 2))
        bv = {v for f in fine.boundary_facets for v in f.vertices}
        r = np.linalg.norm(fine.vertices[sorted(bv)], axis=1)
        np.testing.assert_allclose(r, 1.0, atol=1e-12)


class TestSerialization:
    @pytest.mark.parametrize("domain", DOMAINS)
    def test_json_round_trip(self, domain):
        mesh = build_named_domain(parse_domain(domain), 2)
        back = Mesh.from_json(mesh.to_json())
        np.testing.assert_array_equal(back.vertices, mesh.vertices)
        np.testing.assert_array_equal(back.cells, mesh.cells)
        assert back.boundary_facets == mesh.boundary_facets

    def test_missing_field(self):
        doc = json.loads(build_named_domain(parse_domain("square"), 2).to_json())
        del doc["cells"]
        with pytest.raises(MeshError, match="cells"):
            Mesh.from_json(json.dumps(doc))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), domain=st.sampled_from(["square", "disk", "annulus"]))
def test_permutation_invariance(seed, domain):
    mesh = build_named_domain(parse_domain(domain), 2)
    perm = np.random.default_rng(seed).permutation(mesh.n_vertices)
    other = mesh.permuted(perm)
    assert other.volume() == pytest.approx(mesh.volume())
    assert other.boundary_measure() == pytest.approx(mesh.boundary_measure())
    assert other.euler_characteristic() == mesh.euler_characteristic()
    np.testing.assert_allclose(other.vertices[perm], mesh.vertices)


def test_bad_permutation():
    mesh = build_named_domain(parse_domain("square"), 2)
    with pytest.raises(MeshError):
        mesh.permuted([0] * mesh.n_vertices)
