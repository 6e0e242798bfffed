import numpy as np
import pytest

from bookingbench.controls import BookingControls, fcfs_controls
from bookingbench.demand import RequestStream, make_volume_outlier, sample_requests
from bookingbench.simulate import (
    build_collection,
    run_horizon,
    run_horizon_with_correction,
)


def stream_of(times, wtp):
    times = np.asarray(times, dtype=float)
    return RequestStream(times=times, segments=np.zeros(len(times), dtype=int),
                        wtp=np.asarray(wtp, dtype=int))


def test_booking_probability_all_open(regular):
    # ample capacity so the cap never binds: every request with any threshold books
    from dataclasses import replace
    from bookingbench.scenario import FareStructure

    fs = FareStructure(regular.fare_structure.labels, regular.fare_structure.fares, 100_000)
    scen = replace(regular, fare_structure=fs)
    controls = fcfs_controls(fs)
    booked = requests = 0
    for s in range(50):
        stream = sample_requests(scen, s)
        p = run_horizon(stream, controls, fs, 30)
        booked += p.final_bookings
        requests += len(stream)
    assert booked / requests == pytest.approx(0.925, abs=0.01)


def test_only_top_class_open(regular):
    limits = (200, 0, 0, 0, 0, 0, 0)
    controls = BookingControls("emsrb", limits, (200,) * 7)
    stream = sample_requests(regular, 11)
    p = run_horizon(stream, controls, regular.fare_structure, 30)
    assert p.final_bookings == (stream.wtp == 0).sum()
    assert p.per_class_cumulative[-1, 1:].sum() == 0
    assert p.final_revenue == 400.0 * p.final_bookings


def test_capacity_binding():
    from bookingbench.scenario import FareStructure
    fs = FareStructure(labels=("H", "L"), fares=(300.0, 100.0), capacity=1)
    controls = fcfs_controls(fs)
    stream = stream_of([0.2, 0.6], [1, 1])
    p = run_horizon(stream, controls, fs, 4)
    assert p.final_bookings == 1
    assert p.total_cumulative.tolist() == [1, 1, 1, 1]


def test_boundary_time_counts_toward_interval():
    from bookingbench.scenario import FareStructure
    fs = FareStructure(labels=("H", "L"), fares=(300.0, 100.0), capacity=10)
    # a booking at exactly the 0.5 boundary lands in interval 2 of 4;
    # just after the boundary it belongs to interval 3
    p = run_horizon(stream_of([0.25, 0.5], [1, 1]), fcfs_controls(fs), fs, 4)
    assert p.total_cumulative.tolist() == [1, 2, 2, 2]
    p = run_horizon(stream_of([0.25, 0.500001], [1, 1]), fcfs_controls(fs), fs, 4)
    assert p.total_cumulative.tolist() == [1, 1, 2, 2]


def test_no_book_when_unaffordable():
    from bookingbench.scenario import FareStructure
    fs = FareStructure(labels=("H", "L"), fares=(300.0, 100.0), capacity=10)
    controls = BookingControls("emsrb", (10, 0), (10, 10))  # only class H open
    stream = stream_of([0.1, 0.2], [1, -1])  # L-threshold and no-buy
    p = run_horizon(stream, controls, fs, 4)
    assert p.final_bookings == 0


def test_uncontrolled_dominates_controlled(regular, mr_controls):
    open_all = fcfs_controls(regular.fare_structure)
    for s in range(25):
        stream = sample_requests(regular, s)
        free = run_horizon(stream, open_all, regular.fare_structure, 30)
        tight = run_horizon(stream, mr_controls, regular.fare_structure, 30)
        assert np.all(tight.total_cumulative <= free.total_cumulative)


def test_nested_availability_structure(mr_controls):
    limits = np.array(mr_controls.limits)
    for sold in range(mr_controls.capacity + 1):
        open_mask = limits > sold
        # open classes form a prefix of the ladder
        if open_mask.any():
            assert open_mask[: open_mask.sum()].all()


def test_pattern_invariants(regular, mr_controls):
    p = run_horizon(sample_requests(regular, 5), mr_controls, regular.fare_structure, 30)
    assert np.all(np.diff(p.total_cumulative) >= 0)
    assert p.final_bookings <= regular.fare_structure.capacity
    assert np.array_equal(p.per_class_cumulative.sum(axis=1), p.total_cumulative)
    fares = np.asarray(regular.fare_structure.fares)
    per_interval = np.diff(p.per_class_cumulative, axis=0, prepend=0)
    assert p.final_revenue == pytest.approx((per_interval @ fares).sum())


def test_censoring_asymmetry(regular, mr_controls):
    """Censoring compresses demand increases more than decreases."""
    fs = regular.fare_structure
    up = make_volume_outlier(regular, 0.25)
    down = make_volume_outlier(regular, -0.25)
    means = {}
    for name, scen in (("reg", regular), ("up", up), ("down", down)):
        finals = [
            run_horizon(sample_requests(scen, s), mr_controls, fs, 30).final_bookings
            for s in range(1000)
        ]
        means[name] = np.mean(finals)
    gain = means["up"] - means["reg"]
    loss = means["reg"] - means["down"]
    assert gain < loss


def test_build_collection_labels(regular, mr_controls):
    outs = [make_volume_outlier(regular, 0.25), make_volume_outlier(regular, -0.25)]
    coll = build_collection(200, 0.05, outs, regular, mr_controls, seed=1)
    n_out = coll.truth().sum()
    assert 2 <= n_out <= 25  # Bernoulli(0.05) draw, realised count recorded
    kinds = {k for k in coll.kinds() if k}
    assert kinds <= {"volume+0.25", "volume-0.25"}
    assert len(coll.matrix()) == 200


def test_build_collection_degenerate_frequencies(regular, mr_controls):
    outs = [make_volume_outlier(regular, 0.25)]
    all_reg = build_collection(40, 0.0, [], regular, mr_controls, seed=2)
    assert not all_reg.truth().any()
    all_out = build_collection(40, 1.0, outs, regular, mr_controls, seed=3)
    assert all_out.truth().all()
    with pytest.raises(ValueError, match="outlier kinds"):
        build_collection(10, 0.5, [], regular, mr_controls, seed=4)


def test_build_collection_worker_invariance(regular, mr_controls):
    outs = [make_volume_outlier(regular, -0.25)]
    a = build_collection(60, 0.1, outs, regular, mr_controls, seed=9, workers=1)
    b = build_collection(60, 0.1, outs, regular, mr_controls, seed=9, workers=3)
    assert np.array_equal(a.matrix(), b.matrix())
    assert a.kinds() == b.kinds()


def test_correction_at_horizon_end_is_noop(regular, regular_forecast, mr_controls):
    stream = sample_requests(regular, 21)
    plain = run_horizon(stream, mr_controls, regular.fare_structure, 30)
    corrected = run_horizon_with_correction(
        stream, mr_controls, regular_forecast, regular, correction_interval=30
    )
    assert corrected.final_revenue == plain.final_revenue
    assert np.array_equal(corrected.total_cumulative, plain.total_cumulative)


def test_correction_at_start_equals_corrected_controls(regular, regular_forecast, mr_controls):
    from bookingbench.controls import recompute_midhorizon

    stream = sample_requests(regular, 22)
    switched = run_horizon_with_correction(
        stream, mr_controls, regular_forecast, regular, correction_interval=0
    )
    controls0 = recompute_midhorizon(mr_controls, regular_forecast, regular, 0, 0.0)
    direct = run_horizon(stream, controls0, regular.fare_structure, 30)
    assert switched.final_revenue == direct.final_revenue
