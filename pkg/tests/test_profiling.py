import math

import numpy as np
import pytest

from gripforge.acquisition import Sample, Session
from gripforge.profiling import (
    SensorSeries,
    descriptive,
    sensor_series,
    session_std,
    task_metrics,
    variability_curve,
    window_amv,
)


def series(values, sensor=5):
    return SensorSeries(sensor=sensor, values=np.asarray(values))


def grid_session(values_by_sensor, annotations=None, user="u1", hand="dominant", index=1):
    """Session with one value list per sensor, all on the 20 ms grid."""
    n = len(next(iter(values_by_sensor.values())))
    samples = [
        Sample(glove="left", sensor=k, t_ms=i * 20, v_mv=int(values_by_sensor[k][i]))
        for i in range(n)
        for k in sorted(values_by_sensor)
    ]
    if annotations is None:
        annotations = [(0, "start"), (n * 20, "end")]
    return Session(user=user, hand=hand, session_index=index,
                   samples=samples, annotations=annotations)


class TestWindowAmv:
    def test_constant_window(self):
        prof = window_amv(series([500] * 100))
        assert prof.amv_mv.tolist() == [500.0]
        assert prof.dropped_tail == 0

    def test_arithmetic_series(self):
        # sum(1..100) = 5050, so AmV = 50.5
        prof = window_amv(series(range(1, 101)))
        assert prof.amv_mv.tolist() == [50.5]

    def test_partial_tail_dropped(self):
        prof = window_amv(series([10] * 250))
        assert len(prof.amv_mv) == 2
        assert prof.dropped_tail == 50

    def test_amv_is_exactly_sum_over_count(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            vals = rng.integers(0, 3301, size=100)
            prof = window_amv(series(vals))
            assert prof.amv_mv[0] == sum(int(v) for v in vals) / 100

    def test_window_start_times(self):
        prof = window_amv(series([1] * 300))
        assert prof.start_ms.tolist() == [0, 2000, 4000]

    def test_mean_of_window_means_matches_sample_mean(self):
        rng = np.random.default_rng(22)
        vals = rng.integers(0, 3301, size=700)
        prof = window_amv(series(vals))
        covered = vals[:700 - prof.dropped_tail]
        assert prof.amv_mv.mean() == pytest.approx(covered.mean(), rel=1e-12)

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            window_amv(series([]))

    def test_bad_window_size_rejected(self):
        with pytest.raises(ValueError):
            window_amv(series([1] * 100), window_ms=30)

    def test_gap_window_flagged(self):
        vals = np.array([100.0] * 200)
        vals[30] = np.nan
        prof = window_amv(series(vals))
        assert prof.flagged.tolist() == [True, False]
        starts, amv = prof.clean()
        assert starts.tolist() == [2000]
        assert amv.tolist() == [100.0]


class TestSessionStd:
    def test_constant_is_zero(self):
        assert session_std([7, 7, 7, 7]) == 0.0

    def test_hand_value(self):
        # population form: sqrt(((1-2)^2 + 0 + (3-2)^2) / 3) = sqrt(2/3)
        assert session_std([1, 2, 3]) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            x = rng.uniform(0, 3300, size=50)
            c = float(rng.uniform(-4, 4))
            assert session_std(c * x) == pytest.approx(abs(c) * session_std(x), rel=1e-9)

    def test_translation_invariance(self):
        rng = np.random.default_rng(24)
        for _ in range(100):
            x = rng.uniform(0, 3300, size=50)
            c = float(rng.uniform(-3300, 3300))
            assert session_std(x + c) == pytest.approx(session_std(x), rel=1e-9, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            session_std([])


class TestDescriptive:
    def test_singleton(self):
        stats = descriptive([5])
        assert (stats.min_mv, stats.mean_mv, stats.max_mv) == (5, 5, 5)
        assert stats.std_mv == 0.0 and stats.sem_mv == 0.0

    def test_two_values(self):
        stats = descriptive([0, 10])
        assert stats.mean_mv == 5.0
        assert stats.std_mv == 5.0
        assert stats.sem_mv == pytest.approx(5 / math.sqrt(2))

    def test_order_free(self):
        rng = np.random.default_rng(25)
        x = rng.integers(0, 3301, size=40)
        a, b = descriptive(x), descriptive(rng.permutation(x))
        assert (a.n, a.min_mv, a.max_mv) == (b.n, b.min_mv, b.max_mv)
        assert a.mean_mv == pytest.approx(b.mean_mv, rel=1e-12)
        assert a.std_mv == pytest.approx(b.std_mv, rel=1e-12)
        assert a.sem_mv == pytest.approx(b.sem_mv, rel=1e-12)

    def test_bounds_cover_window_values(self):
        rng = np.random.default_rng(26)
        vals = rng.integers(0, 3301, size=500)
        stats = descriptive(vals)
        prof = window_amv(series(vals))
        assert all(stats.min_mv <= a <= stats.max_mv for a in prof.amv_mv)


class TestVariabilityCurve:
    def _sessions(self, n=10, value=None):
        out = []
        for idx in range(1, n + 1):
            vals = {k: [value if value is not None else 50 * k + idx] * 60 for k in range(1, 13)}
            out.append(grid_session(vals, index=idx))
        return out

    def test_one_value_per_session(self):
        points = variability_curve(self._sessions())
        assert len(points) == 10
        assert [p.session_index for p in points] == list(range(1, 11))

    def test_constant_sessions_are_zero(self):
        points = variability_curve(self._sessions(value=123))
        assert all(p.std_mv == 0.0 for p in points)

    def test_per_sensor_mode(self):
        points = variability_curve(self._sessions(3), sensors=(5, 6, 7), mode="per-sensor")
        assert len(points) == 9
        assert {p.sensor for p in points} == {"S5", "S6", "S7"}

    def test_excluded_sensor_filter_warns(self):
        with pytest.warns(UserWarning, match="S1"):
            variability_curve(self._sessions(2), sensors=(1, 5))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            variability_curve([])


class TestTaskMetrics:
    def test_step_durations(self):
        # fractions (0.4, 0.2, 0.2, 0.2) of a 10 s session
        ann = [(0, "start"), (0, "step1"), (4000, "step2"), (6000, "step3"),
               (8000, "step4"), (10000, "end")]
        session = grid_session({5: [100] * 500}, annotations=ann)
        metrics = task_metrics(session)
        assert metrics.duration_s == pytest.approx(10.0)
        assert metrics.step_durations_s == {
            "step1": 4.0, "step2": 2.0, "step3": 2.0, "step4": 2.0,
        }

    def test_no_incidents(self):
        session = grid_session({5: [100] * 50})
        assert task_metrics(session).incident_count == 0

    def test_incidents_counted(self):
        ann = [(0, "start"), (200, "incident"), (400, "incident"), (1000, "end")]
        session = grid_session({5: [100] * 50}, annotations=ann)
        assert task_metrics(session).incident_count == 2


class TestSensorSeries:
    def test_contiguous_session_keeps_integer_dtype(self):
        session = grid_session({5: list(range(100, 160))})
        s = sensor_series(session, 5)
        assert s.values.dtype == np.int64
        assert not s.has_gaps

    def test_gap_slots_become_nan(self):
        samples = [
            Sample(glove="left", sensor=5, t_ms=t, v_mv=100)
            for t in (0, 20, 60, 80)  # slot at 40 ms missing
        ]
        session = Session(
            user="u1", hand="dominant", session_index=1, samples=samples,
            annotations=[(0, "start"), (40, "gap"), (100, "end")],
        )
        s = sensor_series(session, 5)
        assert s.has_gaps
        assert np.isnan(s.values[2])

    def test_unannotated_hole_rejected(self):
        samples = [
            Sample(glove="left", sensor=5, t_ms=t, v_mv=100) for t in (0, 20, 60)
        ]
        session = Session(
            user="u1", hand="dominant", session_index=1, samples=samples,
            annotations=[(0, "start"), (80, "end")],
        )
        with pytest.raises(ValueError, match="gap"):
            sensor_series(session, 5)
