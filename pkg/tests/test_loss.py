import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central_differences, max_relative_error, naive_quad_loss
from quadnet.loss import (
    LossConfig,
    breakdown_from_distances,
    l2_penalty,
    loss_comp,
    loss_gradients,
    loss_neg,
    loss_sim,
    loss_triplet,
    total_loss,
)
from quadnet.projector import ProjectionParams

CFG = LossConfig(lam=0.0)
# decimal table values are not exact binary fractions; allow one rounding step
EXACT = 1e-15
dist = st.floats(0.0, 2.0)


def on_circle(d):
    """Unit vector in the plane at distance d from (1, 0)."""
    theta = 2 * np.arcsin(d / 2)
    return np.array([np.cos(theta), np.sin(theta)])


@pytest.mark.parametrize("d,expected", [(0.0, 0.0), (0.1, 0.0), (0.35, 0.25)])
def test_loss_sim_table(d, expected):
    assert loss_sim(d, 0.1) == pytest.approx(expected, abs=EXACT)


@pytest.mark.parametrize("d,expected", [(0.25, 0.0), (0.0, 0.1), (0.6, 0.2)])
def test_loss_comp_table(d, expected):
    assert loss_comp(d, 0.1, 0.4) == pytest.approx(expected, abs=EXACT)


@pytest.mark.parametrize("d,expected", [(1.0, 0.0), (0.8, 0.0), (0.3, 0.5)])
def test_loss_neg_table(d, expected):
    assert loss_neg(d, 0.8) == pytest.approx(expected, abs=EXACT)


@pytest.mark.parametrize("d_ac,d_an,expected", [
    (1.8, 2.0, 0.0),  # case A
    (0.2, 0.4, 0.0),  # case B
    (0.5, 0.4, 0.3),
])
def test_loss_triplet_table(d_ac, d_an, expected):
    assert loss_triplet(d_ac, d_an, 0.2) == pytest.approx(expected, abs=EXACT)


def test_total_loss_examples():
    assert breakdown_from_distances(0.05, 0.25, 1.0, CFG).total == 0.0
    bd = breakdown_from_distances(0.35, 0.0, 0.3, CFG)
    assert (bd.l_sim, bd.l_comp, bd.l_neg) == pytest.approx((0.25, 0.1, 0.5), abs=EXACT)
    assert bd.total == pytest.approx(0.85, abs=EXACT)


def test_regulariser_arithmetic():
    params = ProjectionParams(np.array([[1.0]]), np.array([7.0]), np.array([[-1.0]]), np.array([3.0]))
    units = [np.array([[1.0, 0.0]])] * 2 + [on_circle(0.25)[None], on_circle(1.0)[None]]
    units[1] = on_circle(0.05)[None]
    bd = total_loss(units, params, LossConfig(lam=1.0))
    assert l2_penalty(params) == 2.0
    assert bd.total == pytest.approx(2.0, abs=1e-15)


def test_total_loss_from_vectors_matches_naive():
    rng = np.random.default_rng(0)
    units = [rng.normal(size=(7, 3)) for _ in range(4)]
    units = [u / np.linalg.norm(u, axis=1, keepdims=True) for u in units]
    bd = total_loss(units, None, CFG)
    expect = naive_quad_loss(list(zip(*[u.tolist() for u in units])), 0.1, 0.4, 0.8)
    assert bd.total == pytest.approx(expect, rel=1e-12)


def test_triplet_mode_reports_under_comp():
    cfg = LossConfig(lam=0.0, mode="triplet", triplet_margin=0.2)
    bd = breakdown_from_distances(0.3, 0.5, 0.4, cfg)
    assert bd.l_sim == 0.0 and bd.l_neg == 0.0
    assert bd.l_comp == pytest.approx(0.3)


@pytest.mark.parametrize("m", [(0.4, 0.1, 0.8), (0.1, 0.4, 0.4), (0.0, 0.4, 0.8)])
def test_margin_ordering_enforced(m):
    with pytest.raises(ValueError):
        LossConfig(*m)


def test_closed_hinges_zero_gradient():
    a = np.array([[1.0, 0.0]])
    units = (a, on_circle(0.05)[None], on_circle(0.25)[None], on_circle(1.0)[None])
    for g in loss_gradients(units, CFG):
        assert not g.any()


def random_units(rng, n, d):
    u = rng.normal(size=(4, n, d))
    return u / np.linalg.norm(u, axis=2, keepdims=True)


@pytest.mark.parametrize("mode", ["quadruplet", "triplet"])
@pytest.mark.parametrize("seed", range(4))
def test_gradients_match_finite_differences(mode, seed):
    cfg = LossConfig(lam=0.0, mode=mode)
    rng = np.random.default_rng(seed)
    units = random_units(rng, 5, 3)

    def f():
        return total_loss(tuple(units), None, cfg).total

    numeric = central_differences(f, [units], step=1e-5)[0]
    analytic = np.stack(loss_gradients(tuple(units), cfg))
    assert max_relative_error([analytic], [numeric], floor=1e-9) < 1e-5


def test_similar_gradient_direction():
    a = np.array([[1.0, 0.0]])
    s = on_circle(0.5)[None]
    c = on_circle(0.25)[None]
    n = on_circle(1.5)[None]
    _, gs, _, _ = loss_gradients((a, s, c, n), CFG)
    np.testing.assert_allclose(gs, (s - a) / 0.5, rtol=1e-12)


@settings(max_examples=200)
@given(dist, dist, dist)
def test_components_nonnegative(d_as, d_ac, d_an):
    bd = breakdown_from_distances(d_as, d_ac, d_an, CFG)
    assert min(bd.l_sim, bd.l_comp, bd.l_neg) >= 0
    assert bd.total == pytest.approx(bd.l_sim + bd.l_comp + bd.l_neg, abs=1e-9)


@settings(max_examples=200)
@given(dist)
def test_comp_zero_exactly_on_band(d):
    assert (loss_comp(d, 0.1, 0.4) == 0) == (0.1 <= d <= 0.4)


@settings(max_examples=200)
@given(dist, dist)
def test_monotone(x, y):
    lo, hi = min(x, y), max(x, y)
    assert loss_sim(lo, 0.1) <= loss_sim(hi, 0.1)
    assert loss_neg(lo, 0.8) >= loss_neg(hi, 0.8)


@settings(max_examples=200)
@given(dist, dist, st.floats(0, 1))
def test_comp_convex(x, y, t):
    mid = t * x + (1 - t) * y
    assert loss_comp(mid, 0.1, 0.4) <= t * loss_comp(x, 0.1, 0.4) + (1 - t) * loss_comp(y, 0.1, 0.4) + 1e-12


@settings(max_examples=200)
@given(st.floats(0, 1.8), st.sampled_from([0.1, 0.2, 0.5]))
def test_triplet_blind_spot(c, margin):
    # the positive is never pulled in once the negative sits one margin further out
    assert loss_triplet(c, c + margin, margin) == 0.0
