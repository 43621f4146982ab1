from hypothesis import given, strategies as st

from drivelab.model.health import HEALTH_WINDOW_MS, summarize_health

DAY_MS = 24 * 3600 * 1000
T0 = 1_704_067_200_000  # reference instant


def test_window_filter_keeps_last_five_days():
    raw = {"heartRate": [(T0 - 6 * DAY_MS, 70.0), (T0 - 2 * DAY_MS, 80.0), (T0 - 3_600_000, 90.0)]}
    snap = summarize_health(raw, T0)
    assert snap.heartRate == [80.0, 90.0]
    assert snap.windowDays == 5
    assert snap.referenceTime == T0


def test_empty_input_gives_empty_lists():
    snap = summarize_health({}, T0)
    assert snap.heartRate == []
    assert snap.stepCount == []
    assert snap.headphoneAudioExposure == []
    assert snap.distanceWalkingRunning == []


def test_uniform_ten_days_keeps_exactly_window():
    # 100 step samples uniformly over 10 days; oracle = direct filter
    samples = [(T0 - 10 * DAY_MS + i * DAY_MS // 10, float(i)) for i in range(100)]
    expected = [v for t, v in samples if T0 - HEALTH_WINDOW_MS <= t <= T0]
    snap = summarize_health({"stepCount": samples}, T0)
    assert snap.stepCount == expected
    assert len(snap.stepCount) == len(expected)


def test_window_closed_on_both_ends():
    raw = {"heartRate": [(T0 - HEALTH_WINDOW_MS, 1.0), (T0, 2.0), (T0 - HEALTH_WINDOW_MS - 1, 3.0), (T0 + 1, 4.0)]}
    snap = summarize_health(raw, T0)
    assert snap.heartRate == [1.0, 2.0]


def test_output_chronologically_ordered():
    raw = {"heartRate": [(T0 - 100, 3.0), (T0 - 300, 1.0), (T0 - 200, 2.0)]}
    assert summarize_health(raw, T0).heartRate == [1.0, 2.0, 3.0]


@given(
    st.lists(
        st.tuples(
            st.integers(min_value=T0 - 12 * DAY_MS, max_value=T0 + DAY_MS),
            st.floats(min_value=0, max_value=500, allow_nan=False),
        ),
        max_size=200,
    )
)
def test_window_property_equals_brute_force(series):
    snap = summarize_health({"heartRate": series}, T0)
    brute = sorted((t, v) for t, v in series if T0 - 432_000_000 <= t <= T0)
    assert snap.heartRate == [v for _, v in brute]
