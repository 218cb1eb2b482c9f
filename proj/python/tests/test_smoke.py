import math

import numpy as np
import pytest

import fblab


def test_version():
    assert fblab.__version__.count(".") == 2


def test_legendre_zeros_p3():
    z = fblab.legendre_zeros(3)
    assert z == pytest.approx([-math.sqrt(0.6), 0.0, math.sqrt(0.6)], abs=1e-12)
    for x in z:
        assert abs(fblab.legendre(3, x)) < 1e-12
    assert fblab.nearest_legendre_zero(3, 0.8) == pytest.approx(math.sqrt(0.6))


def test_legendre_range_error():
    with pytest.raises(RuntimeError):
        fblab.legendre_zeros(0)


def test_convex_body():
    b = fblab.ConvexBody.ball(3, [0, 0, 0], 1.0)
    assert b.signed_distance([2, 0, 0]) == pytest.approx(1.0)
    p, tie = b.project_out([0.5, 0, 0])
    assert p == pytest.approx((1.0, 0.0, 0.0))
    assert not tie
    slab = fblab.ConvexBody.slab_capped_ball(3, [0, 0, 0], 1.0, 0.5)
    assert slab.flat_witness([0.1, 0.1, 0.5])


def test_disk_closed_form():
    p = fblab.shortest_path_disk([-2, 0], [2, 0])
    assert p.length == pytest.approx(2 * math.sqrt(3) + math.pi / 3)
    assert p.touching
    v = p.vertices
    assert isinstance(v, np.ndarray) and v.shape[1] == 2
    assert np.allclose(v[0], [-2, 0]) and np.allclose(v[-1], [2, 0])


def test_discrete_geodesic_matches_closed_form():
    body = fblab.ConvexBody.ball(2, [0, 0], 1.0)
    p = fblab.shortest_path([-2, 0], [2, 0], body, n_points=64)
    assert p.length == pytest.approx(2 * math.sqrt(3) + math.pi / 3, rel=0.01)
    with pytest.raises(ValueError):
        fblab.shortest_path([0.1, 0], [2, 0], body)
    with pytest.raises(ValueError):
        fblab.shortest_path([-2, 0], [2, 0], body, init="sideways")


def test_radial_oracle():
    rho = fblab.radial_free_boundary_radius(2.0)
    assert rho**3 - 24 * rho + 16 == pytest.approx(0.0, abs=1e-10)


def test_run_geodesic_config(tmp_path):
    cfg = {
        "experiment": {
            "name": "geo",
            "kind": "geodesic",
            "a": [-2.0, 0.0],
            "b": [2.0, 0.0],
            "body": {"type": "ball", "radius": 1.0},
        }
    }
    status, manifest = fblab.run(cfg, tmp_path, check=True)
    assert status == 0
    ex = manifest["experiments"][0]
    assert ex["status"] == 0
    assert all(c["pass"] for c in ex["checks"])
    assert (tmp_path / "geo" / "path.csv").exists()


def test_run_config_error_names_field(tmp_path):
    cfg = {"experiment": {"name": "geo", "kind": "geodesic", "a": [-2, 0], "b": [2, 0], "body": {"type": "ball"}}}
    with pytest.raises(ValueError, match=r"body\.radius"):
        fblab.run(cfg, tmp_path)
