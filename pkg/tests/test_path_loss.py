import math

import pytest
from hypothesis import given, strategies as st

from w2alink.path_loss import (BubbleModel, WaterOptics, bubble_density, bubble_optical_depth, bubble_scattering,
                               efolding_depth, path_loss)
from w2alink.pointing import LinkGeometry

CLEAR = WaterOptics(0.0, 0.0)


@pytest.mark.parametrize("U, L", [(0.0, 0.4), (6.0, 0.4), (7.5, 0.4), (10.0, 0.6875), (15.0, 1.2625)])
def test_efolding_depth(U, L):
    assert math.isclose(efolding_depth(U), L, rel_tol=1e-14)


def test_efolding_depth_continuous_at_breakpoint():
    assert abs(efolding_depth(7.5 + 1e-9) - efolding_depth(7.5)) <= 1e-9
    with pytest.raises(ValueError):
        efolding_depth(-1.0)


def test_no_wind_no_bubbles():
    calm = BubbleModel(0.0)
    assert bubble_density(0.0, calm) == 0.0
    assert bubble_scattering(3.0, calm) == 0.0
    assert bubble_optical_depth(30.0, calm) == 0.0


def test_density_wind_scaling_and_decay():
    assert math.isclose(bubble_density(0.0, BubbleModel(13.0)) / bubble_density(0.0, BubbleModel(6.5)), 8.0,
                        rel_tol=1e-13)
    m = BubbleModel(10.0)
    assert bubble_density(50.0, m) < 1e-20 * bubble_density(0.0, m)
    with pytest.raises(ValueError):
        bubble_density(-1.0, m)


@given(st.floats(0, 30), st.floats(0, 30), st.floats(1.0, 15.0))
def test_density_decreasing_with_depth(z1, z2, U):
    lo, hi = sorted((z1, z2))
    m = BubbleModel(U)
    assert bubble_density(lo, m) >= bubble_density(hi, m)


def test_surface_scattering_by_hand():
    # Q * 3 pi r_min^2 * 1.6e10 * r_ref^4 / (3 r_min^3) at U = 13 collapses to 2 pi * 1.6e10 * r_ref^4 / r_min
    expected = 2 * math.pi * 1.6e10 * (54.4e-6) ** 4 / 1e-6
    assert math.isclose(bubble_scattering(0.0, BubbleModel(13.0)), expected, rel_tol=1e-13)
    assert abs(expected - 0.8805) <= 1e-3


def test_scattering_linear_in_efficiency():
    a, b = BubbleModel(10.0, Q_sca=2.0), BubbleModel(10.0, Q_sca=4.0)
    assert math.isclose(bubble_scattering(0.3, b), 2 * bubble_scattering(0.3, a), rel_tol=1e-14)


def test_frozen_reference_radius_has_closed_form():
    m = BubbleModel(11.0, freeze_r_ref=True)
    L = efolding_depth(11.0)
    for z_w in (0.5, 3.0, 10.0, 30.0):
        closed = bubble_scattering(0.0, m) * L * (1 - math.exp(-z_w / L))
        assert math.isclose(bubble_optical_depth(z_w, m), closed, rel_tol=1e-8)


def test_depth_dependent_reference_radius_adds_loss_growing_with_wind():
    g = LinkGeometry(z_w=30.0)
    ratios = []
    for U in (6.0, 10.0, 14.0):
        live = path_loss(g, WaterOptics(), BubbleModel(U))
        frozen = path_loss(g, WaterOptics(), BubbleModel(U, freeze_r_ref=True))
        ratios.append(live / frozen)
    assert 1.0 > ratios[0] > ratios[1] > ratios[2]


@pytest.mark.parametrize("U", [6.0, 10.0, 14.0])
def test_bubble_layer_confined_near_surface(U):
    m = BubbleModel(U)
    z = 10 * efolding_depth(U)
    near, far = bubble_optical_depth(z, m), bubble_optical_depth(10 * z, m)
    assert (far - near) / far < 1e-3


def test_path_loss_examples():
    calm = BubbleModel(0.0)
    assert path_loss(LinkGeometry(z_w=10), CLEAR, calm) == 1.0
    assert math.isclose(path_loss(LinkGeometry(z_w=10), WaterOptics(), calm), math.exp(-2.248), rel_tol=1e-14)
    windy = BubbleModel(10.0)
    assert path_loss(LinkGeometry(z_w=30), WaterOptics(), windy) < path_loss(LinkGeometry(z_w=10), WaterOptics(), windy)


@given(st.floats(1.0, 40.0), st.floats(0.1, 15.0))
def test_bubbles_only_add_loss(z_w, U):
    g = LinkGeometry(z_w=z_w)
    h = path_loss(g, WaterOptics(), BubbleModel(U))
    assert 0 < h < math.exp(-WaterOptics().extinction * z_w)


def test_path_loss_monotone_in_each_argument():
    base = path_loss(LinkGeometry(z_w=10), WaterOptics(0.01, 0.2), BubbleModel(10.0))
    assert path_loss(LinkGeometry(z_w=11), WaterOptics(0.01, 0.2), BubbleModel(10.0)) < base
    assert path_loss(LinkGeometry(z_w=10), WaterOptics(0.02, 0.2), BubbleModel(10.0)) < base
    assert path_loss(LinkGeometry(z_w=10), WaterOptics(0.01, 0.3), BubbleModel(10.0)) < base
    assert path_loss(LinkGeometry(z_w=10), WaterOptics(0.01, 0.2), BubbleModel(11.0)) < base


def test_model_validation():
    with pytest.raises(ValueError):
        WaterOptics(-0.1, 0.2)
    with pytest.raises(ValueError):
        BubbleModel(-1.0)
    with pytest.raises(ValueError):
        BubbleModel(5.0, Q_sca=0.0)
