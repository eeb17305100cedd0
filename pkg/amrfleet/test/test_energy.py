import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import amrfleet as af
from amrfleet.energy import (
    GRAVITY,
    bid_energy_zoned,
    closed_form_pair_cost,
    e_approx,
    route_energy_closed_form,
    route_segments,
    segment_energy_in_field,
    transition_matrix,
)

P = af.RobotParams()


def halves_field(mu_left=0.01, mu_right=0.04):
    return af.FrictionField(
        "zoned",
        zones=(
            (af.Rect(0.0, -1.0, 5.0, 1.0), mu_left),
            (af.Rect(5.0, -1.0, 10.0, 1.0), mu_right),
        ),
        default_mu=0.02,
    )


def test_segment_energy_hand_values():
    e = af.segment_energy(af.SegmentSpec((0, 0), (10, 0)), P, 0.02)
    assert math.isclose(e, 115.41, rel_tol=1e-3)
    e = af.segment_energy(af.SegmentSpec((0, 0), (10, 0), payload=20.0), P, 0.02)
    assert math.isclose(e, 161.58, rel_tol=1e-3)
    assert af.segment_energy(af.SegmentSpec((3, 3), (3, 3), 0, 1.0, 1.0), P, 0.02) == 0


def test_segment_energy_kinetic_terms():
    accel = af.SegmentSpec((0, 0), (1, 0), v0=0.0, vf=1.0)
    friction = 0.02 * 50 * GRAVITY * 1.0
    assert math.isclose(
        af.segment_energy(accel, P, 0.02), (friction + 25.0) / 0.85
    )
    decel = af.SegmentSpec((0, 0), (1, 0), v0=1.0, vf=0.0)
    assert math.isclose(
        af.segment_energy(decel, P, 0.02), friction / 0.85 - 0.5 * 25.0
    )
    no_regen = af.segment_energy(decel, P, 0.02, regen_enabled=False)
    assert no_regen == max((friction - 25.0) / 0.85, 0.0)
    with pytest.raises(ValueError, match="exceed v_max"):
        af.segment_energy(af.SegmentSpec((0, 0), (1, 0), v0=2.0), P, 0.02)
    with pytest.raises(ValueError, match="mu"):
        af.segment_energy(accel, P, 0.0)


@given(
    st.floats(0.0, 20.0),
    st.floats(0.0, 1.5),
    st.floats(0.0, 1.5),
    st.floats(0.0, 30.0),
)
def test_segment_energy_nonnegative_without_regen(payload, v0, vf, length):
    spec = af.SegmentSpec((0, 0), (length, 0), payload, v0, vf)
    assert af.segment_energy(spec, P, 0.02, regen_enabled=False) >= 0.0


@given(st.floats(0.1, 50.0), st.floats(0.005, 0.08))
def test_segment_energy_proportional_to_distance(length, mu):
    spec = af.SegmentSpec((0, 0), (length, 0))
    slope = mu * P.mass * GRAVITY / P.efficiency
    assert math.isclose(af.segment_energy(spec, P, mu), slope * length, rel_tol=1e-9)


def test_bid_energy_approx():
    task = af.Task(0, (2, 0), (5, 0), 5.0)
    expected = (0.02 * 50 * GRAVITY * 2 + 0.02 * 55 * GRAVITY * 3) / 0.85
    assert math.isclose(af.bid_energy_approx((0, 0), task, P, 0.02), expected)
    assert math.isclose(expected, 61.1, rel_tol=2e-3)
    same = af.Task(1, (1, 1), (1, 1), 5.0)
    assert af.bid_energy_approx((1, 1), same, P, 0.02) == 0.0
    # a decelerating leg never earns energy back in the bid
    assert math.isclose(
        e_approx((0, 0), (1, 0), 0.0, P, 0.02, v0=1.5, vf=0.0),
        0.02 * 50 * GRAVITY / 0.85,
    )


def test_friction_field():
    field = halves_field()
    assert field.mu_at((2.0, 0.0)) == 0.01
    assert field.mu_at((7.0, 0.0)) == 0.04
    assert field.mu_at((7.0, 5.0)) == 0.02
    assert field.mu_values == [0.01, 0.04]
    assert math.isclose(field.path_integral((0, 0), (10, 0)), 0.25)
    assert math.isclose(field.path_integral((10, 0), (0, 0)), 0.25)
    assert field.path_integral((1, 0), (1, 0)) == 0.0
    uniform = af.FrictionField.uniform(0.03)
    assert math.isclose(uniform.path_integral((0, 0), (3, 4)), 0.15)
    with pytest.raises(ValueError, match="at least one zone"):
        af.FrictionField("zoned")
    with pytest.raises(ValueError, match="uniform_mu"):
        af.FrictionField.uniform(0.0)


def test_bid_energy_zoned():
    field = halves_field()
    task = af.Task(0, (0, 0), (10, 0))
    assert math.isclose(bid_energy_zoned((0, 0), task, P, field), 144.26, rel_tol=1e-3)
    inside = af.Task(1, (1, 0), (4, 0), 3.0)
    assert math.isclose(
        bid_energy_zoned((0, 0), inside, P, field),
        af.bid_energy_approx((0, 0), inside, P, 0.01),
    )
    assert bid_energy_zoned((1, 0), af.Task(2, (1, 0), (1, 0)), P, field) == 0.0


def test_route_energy_closed_form():
    assert route_energy_closed_form((0, 0), [], P, 0.02) == 0.0
    t1 = af.Task(0, (2, 0), (5, 0), 5.0)
    t2 = af.Task(1, (6, 0), (9, 0), 10.0)
    assert math.isclose(
        route_energy_closed_form((0, 0), [t1], P, 0.02),
        af.bid_energy_approx((0, 0), t1, P, 0.02),
    )
    segments = [
        af.SegmentSpec((0, 0), (2, 0)),
        af.SegmentSpec((2, 0), (5, 0), 5.0),
        af.SegmentSpec((5, 0), (6, 0)),
        af.SegmentSpec((6, 0), (9, 0), 10.0),
    ]
    assert route_segments((0, 0), [t1, t2]) == segments
    hand = sum(af.segment_energy(s, P, 0.02) for s in segments)
    assert math.isclose(route_energy_closed_form((0, 0), [t1, t2], P, 0.02), hand)
    back = route_energy_closed_form((0, 0), [t1, t2], P, 0.02, return_to_depot=True)
    assert math.isclose(back - hand, 0.02 * 50 * GRAVITY * 9 / 0.85)


def test_segment_energy_in_field_matches_uniform():
    spec = af.SegmentSpec((1, 1), (4, 5), 7.0, 0.5, 1.0)
    assert math.isclose(
        segment_energy_in_field(spec, P, af.FrictionField.uniform(0.03)),
        af.segment_energy(spec, P, 0.03),
    )


def test_transition_matrix():
    # mirror-symmetric geometry with equal payloads
    t1 = af.Task(0, (0, 0), (2, 0), 5.0)
    t2 = af.Task(1, (4, 0), (2, 0), 5.0)
    oracle = closed_form_pair_cost(P, af.FrictionField.uniform(0.02))
    A = transition_matrix([t1, t2], oracle)
    assert A.shape == (2, 2)
    assert math.isclose(A[0, 1], A[1, 0])

    t1 = af.Task(0, (0, 0), (2, 0), 0.0)
    t2 = af.Task(1, (5, 0), (12, 0), 20.0)
    A = transition_matrix([t1, t2], oracle)
    assert not math.isclose(A[0, 1], A[1, 0])
    for k, t in enumerate([t1, t2]):
        leg = af.segment_energy(af.SegmentSpec(t.pickup, t.dropoff, t.payload), P, 0.02)
        assert math.isclose(A[k, k], leg)
    assert np.isfinite(A).all()
