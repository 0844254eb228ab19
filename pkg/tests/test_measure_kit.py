import math

import numpy as np
import pytest

from harmlab.errors import EmptySupportError, InvalidArgument
from harmlab.measure_kit import (
    Ball,
    DiscreteMeasure,
    FlatMeasureSpec,
    dist_to_flat,
    f_dist,
    f_norm,
    flat_sample,
    orientation_search,
    quantize,
    rescale,
    restrict,
    support_hausdorff,
    unit_ball_volume,
    weak_convergence_check,
)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_measure_validation():
    with pytest.raises(InvalidArgument):
        DiscreteMeasure(2, [[0, 0]], [-1.0])
    with pytest.raises(InvalidArgument):
        DiscreteMeasure(4, [[0, 0, 0, 0]], [1.0])
    with pytest.raises(InvalidArgument):
        DiscreteMeasure(2, [[0, 0], [1, 1]], [1.0])
    with pytest.raises(InvalidArgument):
        Ball([0, 0], 0.0)


def test_json_round_trip_is_bit_exact():
    rng = np.random.default_rng(3)
    mu = DiscreteMeasure(3, rng.normal(size=(17, 3)), rng.uniform(size=17))
    back = DiscreteMeasure.from_json(mu.to_json())
    assert np.array_equal(back.points, mu.points)
    assert np.array_equal(back.weights, mu.weights)


def test_restrict_rescale_and_norm():
    mu = DiscreteMeasure(2, [[0.5, 0], [2, 0], [0, -1]], [1.0, 2.0, 3.0])
    assert restrict(mu, Ball([0, 0], 1.0)).mass == pytest.approx(4.0)
    nu = rescale(mu, [0.5, 0], 0.5)
    assert np.allclose(nu.points[0], [0, 0])
    # tent (1 - |z|)^+ : 0.5 * 1 + 0 + 0
    assert f_norm(mu, 1.0) == pytest.approx(0.5)
    assert f_norm(DiscreteMeasure.empty(2), 1.0) == 0.0


def test_fdist_two_diracs_closed_form():
    # one-sided optimum is min(cap_p, |p - q|) with the other atom at f = 0
    p, q, s = np.array([0.2, 0.1]), np.array([-0.3, 0.4]), 1.0
    a, b = DiscreteMeasure.dirac(p), DiscreteMeasure.dirac(q)
    d = np.linalg.norm(p - q)
    expect = max(min(s - np.linalg.norm(p), d), min(s - np.linalg.norm(q), d))
    assert f_dist(a, b, s) == pytest.approx(expect, abs=1e-12)
    assert f_dist(a, DiscreteMeasure.empty(2), s) == pytest.approx(s - np.linalg.norm(p))


@pytest.mark.parametrize("dim", [2, 3])
def test_lp_and_transport_agree(dim):
    rng = np.random.default_rng(10 + dim)
    for _ in range(15):
        a = DiscreteMeasure(dim, rng.uniform(-1.5, 1.5, (8, dim)), rng.uniform(0.1, 1, 8))
        b = DiscreteMeasure(dim, rng.uniform(-1.5, 1.5, (6, dim)), rng.uniform(0.1, 1, 6))
        s = float(rng.uniform(0.5, 2))
        assert f_dist(a, b, s, method="lp") == pytest.approx(f_dist(a, b, s, method="transport"), rel=1e-7, abs=1e-10)


def test_fdist_identity_and_dimension_check():
    mu = DiscreteMeasure(2, [[0.1, 0.2], [0.3, -0.5]], [1.0, 0.5])
    assert f_dist(mu, mu, 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidArgument):
        f_dist(mu, DiscreteMeasure.dirac([0, 0, 0]), 1.0)
    with pytest.raises(InvalidArgument):
        f_dist(mu, mu, 0.0)


@pytest.mark.parametrize("dim,n", [(2, 201), (3, 2000)])
def test_flat_sample_mass(dim, n):
    spec = FlatMeasureSpec(dim, np.eye(dim)[0], density=2.5)
    fl = flat_sample(spec, 1.5, n)
    assert fl.mass == pytest.approx(2.5 * unit_ball_volume(dim - 1) * 1.5 ** (dim - 1), rel=1e-9)
    assert np.allclose(fl.points[:, 0], 0.0)


def test_flat_spec_validation():
    with pytest.raises(InvalidArgument):
        FlatMeasureSpec(2, np.array([1.0, 1.0]))
    with pytest.raises(InvalidArgument):
        FlatMeasureSpec(2, np.array([1.0, 0.0]), density=0.0)


def test_dist_to_flat_rotated_line_is_small():
    th = 0.7
    spec = FlatMeasureSpec(2, np.array([-math.sin(th), math.cos(th)]), 3.0)
    d = dist_to_flat(flat_sample(spec, 2.0, 300), 2.0, details=True)
    assert d.value < 0.01
    assert abs(abs(d.normal @ spec.normal) - 1) < 1e-3


def test_dist_to_flat_plane_3d_and_empty():
    spec = FlatMeasureSpec(3, np.array([0.0, 0.6, 0.8]))
    assert dist_to_flat(flat_sample(spec, 1.0, 400), 1.0) < 0.05
    assert dist_to_flat(DiscreteMeasure.empty(2), 1.0) == 1.0


def test_dist_to_flat_is_scale_and_mass_invariant():
    mu = DiscreteMeasure(2, [[0.3, 0.3], [-0.2, 0.5], [0.1, -0.4]], [1.0, 2.0, 0.5])
    d1 = dist_to_flat(mu, 1.0)
    d2 = dist_to_flat(DiscreteMeasure(2, 3 * mu.points, 7 * mu.weights), 3.0)
    assert d1 == pytest.approx(d2, rel=1e-6)
    assert 0 < d1 <= 1


def test_quantize_moves_atoms_at_most_eps():
    rng = np.random.default_rng(5)
    mu = DiscreteMeasure(2, rng.uniform(-1, 1, (500, 2)), rng.uniform(size=500))
    eps = 0.2
    q = quantize(mu, eps)
    assert len(q) < len(mu)
    assert q.mass == pytest.approx(mu.mass)
    # every original atom lies within eps of a quantized atom
    d = np.min(np.linalg.norm(mu.points[:, None] - q.points[None], axis=2), axis=1)
    assert d.max() <= eps
    # well separated atoms are untouched
    sep = DiscreteMeasure(2, [[0, 0], [1, 0]], [1.0, 2.0])
    assert np.array_equal(quantize(sep, 0.5).points, sep.points)


def test_support_hausdorff():
    a = DiscreteMeasure(2, [[0, 0], [0.5, 0]], [1, 1])
    b = DiscreteMeasure(2, [[0, 0.1]], [1])
    assert support_hausdorff(a, b, Ball([0, 0], 1.0)) == pytest.approx(math.hypot(0.5, 0.1))
    with pytest.raises(EmptySupportError):
        support_hausdorff(a, DiscreteMeasure.dirac([5.0, 5.0]), Ball([0, 0], 1.0))


def test_weak_convergence_check():
    target = DiscreteMeasure(2, [[0.2, 0.0], [-0.3, 0.1]], [1.0, 2.0])
    seq = [DiscreteMeasure(2, target.points + 2.0**-k, target.weights) for k in range(2, 18)]
    rep = weak_convergence_check(seq, target, [0.5, 1.0])
    assert rep.converged
    assert all(rep.monotone)
    assert not weak_convergence_check(seq[:3], target, [0.5, 1.0]).converged


def test_orientation_search_finds_known_minimum():
    want = np.array([math.cos(1.0), math.sin(1.0)])
    val, nrm, res = orientation_search(lambda v: 1 - (v @ want) ** 2, 2)
    assert val < 1e-7
    assert abs(abs(nrm @ want) - 1) < 1e-6
    assert res == pytest.approx(math.pi / 360)


@pytest.mark.parametrize("dim,n", [(2, 4001), (3, 60000)])
def test_flat_norm_closed_form(dim, n):
    # F_s(c H^{n-1} on a hyperplane) = c v_{n-1} s^n / n, checked by quadrature
    c, s = 1.7, 1.3
    fl = flat_sample(FlatMeasureSpec(dim, np.eye(dim)[1], c), s, n)
    assert f_norm(fl, s) == pytest.approx(c * unit_ball_volume(dim - 1) * s**dim / dim, rel=2e-3)
