import numpy as np
import pytest

from gripforge.acquisition import Sample, Session
from gripforge.som import (
    INPUT_SENSOR_ORDER,
    N_UNITS,
    QePoint,
    SomGrid,
    TrainingSchedule,
    bmu,
    build_inputs,
    load_grid,
    neighborhood,
    quantization_error,
    save_grid,
    som_qe_curve,
    train,
    unit_coords,
)


def grid_with(vectors) -> SomGrid:
    return SomGrid(vectors=np.asarray(vectors, dtype=np.float64))


def uniform_grid(value, dim) -> SomGrid:
    return grid_with(np.full((N_UNITS, dim), float(value)))


def toy_session(values_by_sensor, index=1, user="u1", hand="dominant", drop=()):
    n = len(next(iter(values_by_sensor.values())))
    samples = [
        Sample(glove="left", sensor=k, t_ms=i * 20, v_mv=int(values_by_sensor[k][i]))
        for i in range(n)
        for k in sorted(values_by_sensor)
        if (i, k) not in drop
    ]
    return Session(
        user=user, hand=hand, session_index=index, samples=samples,
        annotations=[(0, "start"), (n * 20, "end")],
    )


def full_toy_session(n=20, base=100, index=1, user="u1", **kw):
    return toy_session(
        {k: [base + k] * n for k in INPUT_SENSOR_ORDER}, index=index, user=user, **kw
    )


class TestBuildInputs:
    def test_complete_session_shape(self):
        x, skipped = build_inputs(full_toy_session(n=100))
        assert x.shape == (100, 10)
        assert skipped == 0

    def test_incomplete_timestamp_skipped(self):
        session = toy_session(
            {k: [100] * 100 for k in INPUT_SENSOR_ORDER}, drop={(17, 5)}
        )
        x, skipped = build_inputs(session)
        assert x.shape == (99, 10)
        assert skipped == 1

    def test_constant_session_vectors(self):
        x, _ = build_inputs(toy_session({k: [500] * 10 for k in INPUT_SENSOR_ORDER}))
        assert np.array_equal(x, np.full((10, 10), 500.0))

    def test_missing_sensor_rejected(self):
        session = toy_session({k: [100] * 10 for k in INPUT_SENSOR_ORDER if k != 7})
        with pytest.raises(ValueError, match="S7"):
            build_inputs(session)

    def test_column_order_is_fixed(self):
        vals = {k: [k * 10] * 5 for k in INPUT_SENSOR_ORDER}
        x, _ = build_inputs(toy_session(vals))
        assert x[0].tolist() == [k * 10 for k in INPUT_SENSOR_ORDER]


class TestBmu:
    def test_exact_match_wins(self):
        rng = np.random.default_rng(41)
        vectors = rng.uniform(0, 100, (N_UNITS, 4))
        vectors[17] = [1000, 1000, 1000, 1000]
        assert bmu(grid_with(vectors), np.array([1000.0] * 4)) == 17

    def test_all_identical_breaks_tie_to_zero(self):
        assert bmu(uniform_grid(5, 3), np.array([1.0, 2.0, 3.0])) == 0

    def test_hand_distances(self):
        # x=(3,3): distance 1 to (3,4) beats sqrt(18) to (0,0)
        vectors = np.zeros((N_UNITS, 2))
        vectors[30] = [3.0, 4.0]
        assert bmu(grid_with(vectors), np.array([3.0, 3.0])) == 30

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            bmu(uniform_grid(0, 3), np.array([1.0, 2.0]))

    def test_permutation_stable(self):
        rng = np.random.default_rng(42)
        grid = grid_with(rng.uniform(0, 10, (N_UNITS, 5)))
        xs = rng.uniform(0, 10, (30, 5))
        first = [bmu(grid, x) for x in xs]
        order = rng.permutation(30)
        assert [bmu(grid, xs[i]) for i in order] == [first[i] for i in order]


class TestNeighborhood:
    def test_winner_weight_is_one(self):
        assert neighborhood(12, 12, sigma=2.0) == 1.0

    def test_unit_distance_value(self):
        # exp(-1 / 2) at lattice distance 1, sigma 1
        assert neighborhood(0, 1, sigma=1.0) == pytest.approx(np.exp(-0.5))

    def test_tiny_sigma_is_winner_take_all(self):
        assert neighborhood(0, 1, sigma=0.01) < 1e-8

    def test_decreasing_with_distance(self):
        weights = [neighborhood(0, i, sigma=2.0) for i in (0, 1, 2, 3)]  # row 0
        assert all(a > b for a, b in zip(weights, weights[1:]))

    def test_bad_sigma_rejected(self):
        with pytest.raises(ValueError):
            neighborhood(0, 1, sigma=0.0)


class TestTrain:
    def test_zero_alpha_keeps_grid(self):
        rng = np.random.default_rng(43)
        grid = grid_with(rng.uniform(0, 10, (N_UNITS, 3)))
        schedule = TrainingSchedule(epochs=3, alpha0=0.0, alpha_end=0.0, seed=1)
        out = train(grid, rng.uniform(0, 10, (20, 3)), schedule)
        assert np.array_equal(out.vectors, grid.vectors)

    def test_full_step_lands_on_input(self):
        # all models at 0; the winner has h=1 exactly, so alpha=1 moves it
        # exactly onto x
        grid = uniform_grid(0, 1)
        schedule = TrainingSchedule(epochs=1, alpha0=1.0, alpha_end=1.0, seed=0)
        out = train(grid, np.array([[2.0]]), schedule)
        assert out.vectors[0, 0] == 2.0

    def test_half_step_hits_midpoint(self):
        grid = uniform_grid(0, 1)
        schedule = TrainingSchedule(epochs=1, alpha0=0.5, alpha_end=0.5, seed=0)
        out = train(grid, np.array([[2.0]]), schedule)
        assert out.vectors[0, 0] == 1.0

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(44)
        inputs = rng.uniform(0, 100, (60, 4))
        grid = SomGrid.init_from_inputs(inputs, seed=9)
        schedule = TrainingSchedule(epochs=5, seed=3)
        a = train(grid, inputs, schedule)
        b = train(grid, inputs, schedule)
        assert np.array_equal(a.vectors, b.vectors)

    def test_input_copy_not_mutated(self):
        rng = np.random.default_rng(45)
        inputs = rng.uniform(0, 100, (30, 4))
        grid = SomGrid.init_from_inputs(inputs, seed=0)
        before = grid.vectors.copy()
        train(grid, inputs, TrainingSchedule(epochs=2, seed=0))
        assert np.array_equal(grid.vectors, before)

    def test_update_contracts_towards_input(self):
        # one learning step with 0 < alpha*h <= 1 never increases ||x - m||
        rng = np.random.default_rng(46)
        for _ in range(2000):
            m = rng.uniform(0, 3300, 10)
            x = rng.uniform(0, 3300, 10)
            step = float(rng.uniform(1e-6, 1.0))
            updated = m + step * (x - m)
            assert np.linalg.norm(x - updated) <= np.linalg.norm(x - m) * (1 + 1e-9)

    def test_training_reduces_qe(self):
        rng = np.random.default_rng(47)
        inputs = rng.uniform(0, 3300, (300, 10))
        grid = SomGrid.init_from_inputs(inputs, seed=11)
        trained = train(grid, inputs, TrainingSchedule(epochs=20, seed=11))
        assert quantization_error(trained, inputs) < quantization_error(grid, inputs)

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            train(uniform_grid(0, 2), np.empty((0, 2)), TrainingSchedule())

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            TrainingSchedule(epochs=0)
        with pytest.raises(ValueError):
            TrainingSchedule(alpha0=1.5)
        with pytest.raises(ValueError):
            TrainingSchedule(sigma0=2.0, sigma_end=3.0)

    def test_schedule_decay_is_monotone(self):
        s = TrainingSchedule(epochs=10)
        alphas = [s.alpha_at(e) for e in range(10)]
        sigmas = [s.sigma_at(e) for e in range(10)]
        assert alphas[0] == s.alpha0 and alphas[-1] == s.alpha_end
        assert sigmas[0] == s.sigma0 and sigmas[-1] == s.sigma_end
        assert all(a >= b for a, b in zip(alphas, alphas[1:]))
        assert all(a >= b for a, b in zip(sigmas, sigmas[1:]))


class TestQuantizationError:
    def test_inputs_on_models_give_zero(self):
        rng = np.random.default_rng(48)
        vectors = rng.uniform(0, 3300, (N_UNITS, 6))
        picks = rng.integers(0, N_UNITS, size=25)
        assert quantization_error(grid_with(vectors), vectors[picks]) == 0.0

    def test_hand_value(self):
        # inputs (0,0) and (3,4) against models all at (0,0): (0 + 5) / 2
        grid = uniform_grid(0, 2)
        qe = quantization_error(grid, np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert qe == pytest.approx(2.5)

    def test_single_input_distance(self):
        grid = uniform_grid(0, 3)
        qe = quantization_error(grid, np.array([[2.0, 3.0, 6.0]]))  # norm 7
        assert qe == pytest.approx(7.0)

    def test_non_negative(self):
        rng = np.random.default_rng(49)
        grid = grid_with(rng.uniform(0, 10, (N_UNITS, 4)))
        assert quantization_error(grid, rng.uniform(0, 10, (50, 4))) >= 0.0

    def test_homogeneity(self):
        rng = np.random.default_rng(50)
        vectors = rng.uniform(0, 10, (N_UNITS, 4))
        inputs = rng.uniform(0, 10, (40, 4))
        base = quantization_error(grid_with(vectors), inputs)
        for c in (0.0, 0.5, 3.0):
            scaled = quantization_error(grid_with(c * vectors), c * inputs)
            assert scaled == pytest.approx(c * base, rel=1e-9, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            quantization_error(uniform_grid(0, 2), np.empty((0, 2)))


class TestQeCurve:
    def _groups(self, seed=0):
        rng = np.random.default_rng(seed)
        groups = {}
        for label, spread in (("a", 5), ("b", 40)):
            groups[label] = [
                toy_session(
                    {
                        k: (400 + rng.normal(0, spread, 30)).astype(int).clip(0, 3300)
                        for k in INPUT_SENSOR_ORDER
                    },
                    index=i,
                    user=label,
                )
                for i in range(1, 4)
            ]
        return groups

    def test_point_count_and_order(self):
        points, grid = som_qe_curve(self._groups(), TrainingSchedule(epochs=3, seed=1))
        assert len(points) == 6
        assert [(p.group, p.session_index) for p in points] == [
            ("a", 1), ("a", 2), ("a", 3), ("b", 1), ("b", 2), ("b", 3),
        ]
        assert isinstance(grid, SomGrid)

    def test_identical_sessions_identical_qe(self):
        base = full_toy_session(n=30)
        groups = {
            "g1": [full_toy_session(n=30, user="g1")],
            "g2": [full_toy_session(n=30, user="g2")],
        }
        points, _ = som_qe_curve(groups, TrainingSchedule(epochs=3, seed=2))
        assert points[0].qe_mv == points[1].qe_mv

    def test_per_group_mode(self):
        points, grids = som_qe_curve(
            self._groups(), TrainingSchedule(epochs=3, seed=1), mode="per-group"
        )
        assert set(grids) == {"a", "b"}
        assert len(points) == 6

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError):
            som_qe_curve({"a": []})

    def test_subsampling_keeps_determinism(self):
        groups = self._groups()
        kw = dict(schedule=TrainingSchedule(epochs=3, seed=5), max_train_inputs=40)
        p1, _ = som_qe_curve(groups, **kw)
        p2, _ = som_qe_curve(groups, **kw)
        assert p1 == p2


class TestGridSnapshot:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(51)
        grid = grid_with(rng.uniform(0, 3300, (N_UNITS, 10)))
        path = tmp_path / "grid.txt"
        save_grid(path, grid, TrainingSchedule(seed=7))
        back, meta = load_grid(path)
        assert np.array_equal(back.vectors, grid.vectors)
        assert meta["dim"] == "10" and meta["seed"] == "7"

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "nope.txt"
        path.write_text("hello\n")
        with pytest.raises(ValueError):
            load_grid(path)


def test_unit_coords_row_major():
    coords = unit_coords()
    assert coords.shape == (N_UNITS, 2)
    assert coords[0].tolist() == [0, 0]
    assert coords[8].tolist() == [1, 1]  # unit 8 = row 1, col 1 on a 7-wide grid
    assert coords[48].tolist() == [6, 6]
