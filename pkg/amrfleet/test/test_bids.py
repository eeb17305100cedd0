import math

import pytest
from hypothesis import given, strategies as st

import amrfleet as af
from amrfleet.bids import (
    BidMetricKind,
    DistanceBid,
    EnergyBid,
    OracleBid,
    ZonedEnergyBid,
    get_metric,
    metric_oracle,
)
from amrfleet.exceptions import SizeGuardError

from .utils import FAST

ROBOT = af.Robot(0, (0.0, 0.0))
TASK = af.Task(0, (2.0, 0.0), (5.0, 0.0), 5.0)
CONTEXT = af.AuctionContext(options=FAST)

coords = st.floats(0.0, 20.0)


def test_closed_form_bids():
    value = af.bid((0, 0), TASK, "energy", CONTEXT, ROBOT)
    assert math.isclose(value, 61.1, rel_tol=2e-3)
    assert af.bid((0, 0), TASK, "distance", CONTEXT, ROBOT) == 5.0
    assert af.bid((3, 4), af.Task(1, (0, 0), (0, 0)), "distance", CONTEXT, ROBOT) == 5.0


def test_energy_bid_uses_mu_at_robot_end():
    field = af.FrictionField(
        "zoned", zones=((af.Rect(-1.0, -1.0, 1.0, 1.0), 0.04),), default_mu=0.01
    )
    context = af.AuctionContext(friction=field)
    expected = af.bid_energy_approx((0, 0), TASK, ROBOT.params, 0.04)
    assert math.isclose(af.bid((0, 0), TASK, "energy", context, ROBOT), expected)
    # the zoned bid sees the low-friction stretch the closed form misses
    assert af.bid((0, 0), TASK, "zoned", context, ROBOT) < expected


def test_zoned_bid_hand_value():
    field = af.FrictionField(
        "zoned",
        zones=(
            (af.Rect(0.0, -1.0, 5.0, 1.0), 0.01),
            (af.Rect(5.0, -1.0, 10.0, 1.0), 0.04),
        ),
    )
    context = af.AuctionContext(friction=field)
    task = af.Task(0, (0, 0), (10, 0))
    assert math.isclose(
        af.bid((0, 0), task, "zoned", context, ROBOT), 144.26, rel_tol=1e-3
    )


def test_oracle_bid():
    value = af.bid((0, 0), TASK, "oracle", CONTEXT, ROBOT)
    assert value > 0.0
    again = metric_oracle("oracle", CONTEXT)(ROBOT, (0.0, 0.0), TASK)
    assert again == value
    # a heavier load costs the oracle more
    heavy = af.Task(1, (2.0, 0.0), (5.0, 0.0), 20.0)
    assert af.bid((0, 0), heavy, "oracle", CONTEXT, ROBOT) > value


def test_oracle_size_guard():
    assert OracleBid.pair_count(2, 3) == 18
    robots = [af.Robot(i, (0.0, float(i))) for i in range(3)]
    tasks = [af.Task(k, (1.0, k), (2.0, k)) for k in range(10)]
    small = af.AuctionContext(oracle_max_pairs=OracleBid.pair_count(3, 10))
    OracleBid().check_instance(robots, tasks, small)
    tight = af.AuctionContext(oracle_max_pairs=OracleBid.pair_count(3, 10) - 1)
    with pytest.raises(SizeGuardError, match="limit is"):
        OracleBid().check_instance(robots, tasks, tight)
    # closed-form metrics never veto
    EnergyBid().check_instance(robots, tasks, tight)


def test_get_metric():
    assert isinstance(get_metric("energy"), EnergyBid)
    assert isinstance(get_metric("euclidean_distance"), DistanceBid)
    assert isinstance(get_metric(BidMetricKind.ZONE_AWARE_ENERGY), ZonedEnergyBid)
    oracle = OracleBid()
    assert get_metric(oracle) is oracle
    assert str(get_metric("exact_ocp_oracle")) == "oracle"
    assert EnergyBid() == EnergyBid()
    assert EnergyBid() != DistanceBid()
    assert len({EnergyBid(), EnergyBid(), DistanceBid()}) == 2
    assert not DistanceBid.energy_valued and EnergyBid.energy_valued
    with pytest.raises(ValueError, match="Unknown bid metric"):
        get_metric("fastest")


def test_auction_context():
    context = af.AuctionContext(bid_scale={"2": 1.5})
    assert context.scale_for(2) == 1.5
    assert context.scale_for(0) == 1.0
    with pytest.raises(ValueError, match="bid_scale"):
        af.AuctionContext(bid_scale={0: 0.0})
    with pytest.raises(ValueError, match="oracle_max_pairs"):
        af.AuctionContext(oracle_max_pairs=0)
    plan = CONTEXT.plan_context(ROBOT)
    assert plan.options == FAST
    assert plan.params == ROBOT.params


@given(coords, coords, coords, coords, coords, coords)
def test_distance_bid_bounds(rx, ry, px, py, dx, dy):
    task = af.Task(0, (px, py), (dx, dy))
    d = af.bid((rx, ry), task, "distance", CONTEXT, ROBOT)
    assert d >= task.loaded_length - 1e-9
    assert d >= math.hypot(dx - rx, dy - ry) - 1e-9


@given(coords, coords, coords, coords, st.floats(0.0, 20.0))
def test_energy_bid_nonnegative(rx, ry, px, py, payload):
    task = af.Task(0, (px, py), (px + 1.0, py), payload)
    assert af.bid((rx, ry), task, "energy", CONTEXT, ROBOT) >= 0.0
    assert af.bid((rx, ry), task, "zoned", CONTEXT, ROBOT) >= 0.0
