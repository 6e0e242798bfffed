import pytest

from bookingbench.demand import make_volume_outlier
from bookingbench.scenario import (
    CustomerSegment,
    DemandScenario,
    FareStructure,
    ScenarioLabel,
    default_regular_scenario,
    demand_moments,
    scenario_from_dict,
    scenario_to_dict,
)


def test_default_parameterisation(regular):
    assert regular.gamma_shape == 240.0
    assert regular.gamma_rate == 1.0
    assert regular.fare_structure.fares == (400, 300, 280, 240, 200, 185, 175)
    assert regular.fare_structure.capacity == 200
    assert [s.mix_share for s in regular.segments] == [0.5, 0.5]
    assert regular.n_intervals == 30
    mean, sd = demand_moments(regular)
    assert mean == 240.0
    assert sd == pytest.approx(15.492, abs=1e-3)


def test_default_no_buy_probabilities(regular):
    # no-buy completes each wtp row to 1
    assert regular.segments[0].no_buy == pytest.approx(1 - 0.90)
    assert regular.segments[1].no_buy == pytest.approx(1 - 0.95)


def test_late_arrival_ordering(regular):
    business, tourist = regular.segments[:2]
    assert business.arrival_mode() == pytest.approx(4 / 5)
    assert tourist.arrival_mode() == pytest.approx(1 / 5)
    assert business.arrival_mode() > tourist.arrival_mode()


@pytest.mark.parametrize(
    "shape,rate,mean,sd",
    [
        (240.0, 1.0, 240.0, 15.492),
        (375.0, 1.25, 300.0, 15.492),
        (303.75, 1.125, 270.0, 15.492),
        (183.75, 0.875, 210.0, 15.492),
        (135.0, 0.75, 180.0, 15.492),
        (1.0, 1.0, 1.0, 1.0),
    ],
)
def test_demand_moments_table(regular, shape, rate, mean, sd):
    scen = DemandScenario(
        gamma_shape=shape,
        gamma_rate=rate,
        segments=regular.segments,
        fare_structure=regular.fare_structure,
        n_intervals=regular.n_intervals,
        label=ScenarioLabel(True, "x"),
    )
    m, s = demand_moments(scen)
    assert m == pytest.approx(mean, abs=1e-9)
    assert s == pytest.approx(sd, abs=1e-3)


def test_volume_outlier_rows_match_moments(regular):
    for pct, mean in [(0.25, 300), (0.125, 270), (-0.125, 210), (-0.25, 180)]:
        m, s = demand_moments(make_volume_outlier(regular, pct))
        assert m == pytest.approx(mean)
        assert s == pytest.approx(15.492, abs=1e-3)


def test_serialization_roundtrip(regular):
    doc = scenario_to_dict(regular)
    back = scenario_from_dict(doc)
    assert back == regular
    outlier = make_volume_outlier(regular, -0.25)
    assert scenario_from_dict(scenario_to_dict(outlier)) == outlier


def test_serialization_missing_key(regular):
    doc = scenario_to_dict(regular)
    del doc["gamma_shape"]
    with pytest.raises(KeyError, match="gamma_shape"):
        scenario_from_dict(doc)


def test_fare_structure_validation():
    with pytest.raises(ValueError):
        FareStructure(labels=("A",), fares=(400.0,), capacity=10)
    with pytest.raises(ValueError):
        FareStructure(labels=("A", "B"), fares=(300.0, 400.0), capacity=10)
    with pytest.raises(ValueError):
        FareStructure(labels=("A", "B"), fares=(400.0, 300.0), capacity=0)


def test_segment_probability_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        CustomerSegment(beta_a=2, beta_b=2, mix_share=0.5, wtp=(0.5, 0.4), no_buy=0.2)


def test_mix_share_validation(regular):
    bad = tuple(
        CustomerSegment(s.beta_a, s.beta_b, 0.6, s.wtp, s.no_buy) for s in regular.segments
    )
    with pytest.raises(ValueError, match="mix shares"):
        DemandScenario(
            gamma_shape=240,
            gamma_rate=1,
            segments=bad,
            fare_structure=regular.fare_structure,
        )


def test_regular_scenario_requires_late_high_value(regular):
    flipped = (
        CustomerSegment(2.0, 5.0, 0.5, regular.segments[0].wtp, regular.segments[0].no_buy),
        CustomerSegment(5.0, 2.0, 0.5, regular.segments[1].wtp, regular.segments[1].no_buy),
    )
    with pytest.raises(ValueError, match="arriving later"):
        DemandScenario(
            gamma_shape=240,
            gamma_rate=1,
            segments=flipped,
            fare_structure=regular.fare_structure,
        )
