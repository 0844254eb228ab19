import json
import math

import numpy as np
import pytest

from harmlab.domain_kit import BallDomain, HalfSpace, Polygon, Wedge, boundary_sample
from harmlab.errors import InsufficientSample, InvalidArgument, UnresolvedScale
from harmlab.gmt_analysis import (
    Evaluator,
    PolyPart,
    acf_gamma,
    beurling_check,
    blowup,
    blowup_polynomial_fit,
    classify_lambda,
    classify_point,
    dimension_distribution,
    flatness_profile,
    gamma_profile,
    gb_classify,
    local_dimension,
    theta_density,
)
from harmlab.harmonic_engine import WalkConfig, wos_exits
from harmlab.measure_kit import Ball
from harmlab.polynomial import HarmonicPolynomial
from harmlab.sources import DiscSource, EmpiricalSource, HalfSpaceSource, PolySource, WedgeSource

CROSS = HarmonicPolynomial(2, {(2, 0): 1, (0, 2): -1})
HP = HalfSpace(2, [0.0, 1.0], 0.0)
DYADIC = [2.0**-k for k in range(1, 7)]


class Synthetic:
    """Source with a prescribed mass profile ``f(r)``."""

    lost_fraction = 0.0

    def __init__(self, f, rel_se=0.0):
        self.f = f
        self.rel_se = rel_se

    def mass(self, Q, r):
        m = self.f(r)
        return m, self.rel_se * m


def _wedges(angle=math.pi / 2):
    w = Wedge(angle, [0, 0], math.pi / 2)
    return WedgeSource(w, [0, 1.0]), WedgeSource(w.complement(), [0, -1.0])


def test_blowup_normalization_and_hausdorff():
    disc = DiscSource(BallDomain(2, [0, 0], 1.0), [0, 0])
    rec = blowup(disc, [1.0, 0.0], DYADIC, 100)
    for m in rec.measures:
        assert m.mass == pytest.approx(1.0, rel=1e-12)
        assert np.max(np.linalg.norm(m.points, axis=1)) <= 1 + 1e-12
    assert rec.hausdorff_to_last[-1] == 0.0
    assert rec.hausdorff_to_last[0] > rec.hausdorff_to_last[-2]
    json.dumps(rec.to_dict())
    with pytest.raises(InvalidArgument):
        blowup(disc, [1.0, 0.0], DYADIC[::-1])


def test_blowup_unresolved_scale():
    far = DiscSource(BallDomain(2, [0, 0], 1.0), [0, 0])
    with pytest.raises(UnresolvedScale):
        blowup(far, [3.0, 0.0], [0.5, 0.25])


def test_polynomial_fit_half_plane_exact():
    rec = blowup(HalfSpaceSource(HP, None), [0, 0], DYADIC, 50)
    polys, res, deg, flagged = blowup_polynomial_fit(rec, 1)
    assert max(res) <= 1e-6 and not flagged
    # u_j(X) = X_2 / 2: distance to the line over the 2r mass of the ball
    assert polys[-1].terms[(0, 1)] == pytest.approx(0.5)


def test_polynomial_fit_disc_residual_decreases():
    disc = DiscSource(BallDomain(2, [0, 0], 1.0), [0, 0])
    ext = DiscSource(BallDomain(2, [0, 0], 1.0, side=-1), [3.0, 0])
    rec = blowup(disc, [1.0, 0.0], DYADIC, 50, minus_source=ext)
    polys, res, _, _ = blowup_polynomial_fit(rec, 1)
    assert all(b < a for a, b in zip(res, res[1:]))
    lin = polys[-1].terms
    assert abs(lin.get((1, 0), 0)) > 20 * abs(lin.get((0, 1), 0))


def test_polynomial_fit_cross_degree_two():
    plus, minus = PolySource(CROSS, 1, 2000), PolySource(CROSS, -1, 2000)
    rec = blowup(plus, [0, 0], [1.0, 0.5, 0.25], 200, minus_source=minus)
    polys, res, deg, _ = blowup_polynomial_fit(rec, 2)
    assert deg == 2 and max(res) < 1e-3
    t = polys[-1].terms
    assert t[(2, 0)] == pytest.approx(0.25, rel=1e-3) and t[(0, 2)] == pytest.approx(-0.25, rel=1e-3)
    assert abs(t.get((1, 0), 0)) + abs(t.get((0, 1), 0)) < 1e-3


def test_finite_difference_gradient():
    f = Evaluator(lambda X: np.sin(X[:, 0]) * np.exp(X[:, 1]))
    X = np.array([[0.3, -0.2], [1.0, 0.5]])
    exact = np.column_stack([np.cos(X[:, 0]) * np.exp(X[:, 1]), np.sin(X[:, 0]) * np.exp(X[:, 1])])
    assert np.allclose(f.gradient(X), exact, atol=1e-9)


def test_gamma_with_estimated_style_evaluators():
    # the same linear pair through finite differences of the Green functions
    inf_p, inf_m = HalfSpaceSource(HP, None), HalfSpaceSource(HP.complement(), None)
    g, err, f = acf_gamma(Evaluator(inf_p.green), Evaluator(inf_m.green), [0, 0], 1.0)
    assert g == pytest.approx(math.pi**2 / 4, rel=1e-3)


def test_gamma_profile_monotone_and_radius_order():
    prof = gamma_profile(PolyPart(CROSS, 1), PolyPart(CROSS, -1), [0, 0], [0.5, 1.0, 2.0])
    assert prof.monotone
    assert prof.gamma[0] == pytest.approx(math.pi**2 / 16)
    with pytest.raises(InvalidArgument):
        gamma_profile(PolyPart(CROSS, 1), PolyPart(CROSS, -1), [0, 0], [1.0, 0.5])
    json.dumps(prof.to_dict())


def test_beurling_half_plane_constant():
    plus, minus = HalfSpaceSource(HP, None), HalfSpaceSource(HP.complement(), None)
    lin = HarmonicPolynomial.linear([0.0, 1.0])

    def gamma_fn(r):
        return acf_gamma(PolyPart(lin, 1), PolyPart(lin, -1), [0, 0], r)[0]

    prof = beurling_check(plus, minus, [0, 0], DYADIC, gamma_fn)
    assert prof.spread == pytest.approx(1.0) and prof.bounded
    assert max(prof.gamma_ratio) / min(prof.gamma_ratio) == pytest.approx(1.0)


def test_beurling_withheld_on_lost_mass():
    a, b = Synthetic(lambda r: r), Synthetic(lambda r: r)
    b.lost_fraction = 0.05
    assert beurling_check(a, b, [0, 0], DYADIC).bounded is None


def test_lambda_verdicts():
    plus, minus = HalfSpaceSource(HP, [0, 1.0]), HalfSpaceSource(HP.complement(), [0, -1.0])
    rec = classify_lambda(plus, minus, [0, 0], DYADIC)
    assert rec.lambda_verdict == "Lambda1" and rec.h_Q == pytest.approx(1.0) and rec.gamma_member
    wp, wm = _wedges()
    assert classify_lambda(wp, wm, [0, 0], DYADIC).lambda_verdict == "Lambda2"
    assert classify_lambda(wm, wp, [0, 0], DYADIC).lambda_verdict == "Lambda3"
    osc = Synthetic(lambda r: r * (1.5 + math.sin(math.pi * math.log2(r))))
    rec4 = classify_lambda(Synthetic(lambda r: r), osc, [0, 0], [2.0**-k - 2.0 ** (-k - 2) for k in range(1, 9)])
    assert rec4.lambda_verdict == "Lambda4"
    noisy = Synthetic(lambda r: r, rel_se=0.9)
    assert classify_lambda(noisy, noisy, [0, 0], DYADIC).lambda_verdict == "undetermined"
    with pytest.raises(InsufficientSample):
        classify_lambda(plus, minus, [0, 0], DYADIC[:3])
    json.dumps(rec.to_dict())


def test_gb_verdicts():
    assert gb_classify(HalfSpaceSource(HP, None), [0, 0], DYADIC)[0] == "gamma_g"
    wp, wm = _wedges()
    assert gb_classify(wp, [0, 0], DYADIC)[0] == "gamma_b"
    assert gb_classify(wm, [0, 0], DYADIC)[0] == "unbounded"
    sq = Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])
    emp = EmpiricalSource(wos_exits(sq, [0.5, 0.5], WalkConfig(n_walks=50_000, seed=3)))
    assert gb_classify(emp, [0.5, 0.0], [0.2, 0.1, 0.05, 0.025])[0] == "gamma_g"


def test_flatness_profiles():
    prof, v = flatness_profile(HalfSpaceSource(HP, None), [0, 0], [1.0, 0.5, 0.25], 100)
    assert v == "flat" and max(prof) < 0.02
    prof, v = flatness_profile(PolySource(CROSS, 1, 2000), [0, 0], [1.0, 0.5, 0.25], 400)
    assert v == "nonflat" and (max(prof) - min(prof)) / min(prof) < 0.1


def test_local_dimension_and_distribution():
    disc = DiscSource(BallDomain(2, [0, 0], 1.0), [0, 0])
    ld = local_dimension(disc, [0, 1.0], 1e-3, 1e-1)
    assert ld.slope == pytest.approx(1.0, abs=0.01) and ld.residual < 0.01
    pts = [[math.cos(t), math.sin(t)] for t in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
    dist = dimension_distribution(disc, pts, 1e-3, 1e-1)
    assert dist["q1"] <= dist["median"] <= dist["q3"] and dist["n"] == 8
    with pytest.raises(InvalidArgument):
        local_dimension(disc, [0, 1.0], 1e-1, 1e-3)
    emp = EmpiricalSource(wos_exits(BallDomain(2, [0, 0], 1.0), [0, 0], WalkConfig(n_walks=2000, seed=1)))
    with pytest.warns(RuntimeWarning):
        ld = local_dimension(emp, [1.0, 0.0], 1e-5, 0.5)
    assert ld.dropped


def test_theta_density_flags_sparse_sample():
    bs = boundary_sample(HP, Ball([0, 0], 1.0), 10, 0)
    with pytest.warns(RuntimeWarning):
        assert theta_density(bs, [0, 0], 1.0) == pytest.approx(1.0)


def test_classify_point_record():
    wp, wm = _wedges()
    rec = classify_point(wp, wm, [0, 0], [0.25, 0.125, 0.0625, 0.03125], resolution=60)
    assert rec.lambda_verdict == "Lambda2" and rec.gb_verdict == "gamma_b"
    assert rec.flatness_verdict == "nonflat"
    d = rec.to_dict()
    assert d["thresholds"]["flat_threshold"] == 0.05 and len(d["scales"]) == 4


def test_doubling_ratio_recorded():
    rec = blowup(HalfSpaceSource(HP, None), [0, 0], DYADIC, 20)
    assert rec.doubling == pytest.approx([2.0] * len(DYADIC))
    rec = blowup(PolySource(CROSS, 1, 2000), [0, 0], [1.0, 0.5], 100)
    assert rec.doubling == pytest.approx([4.0, 4.0], rel=1e-3)


def test_noise_tied_step():
    ev = Evaluator(lambda X: X[:, 0], noise_se=1e-6, scale=0.5)
    assert ev.fd_step == pytest.approx(10 * 1e-3 * 0.5)
