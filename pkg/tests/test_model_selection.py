"""Grid construction and per-cell hyperparameter selection."""

import math

import numpy as np
import pytest

from lokern.dataset import Dataset
from lokern.local_model import CellPolicy, fit
from lokern.model_selection import (
    HyperGrid,
    kfold_cv,
    make_geometric_grid,
    make_grids,
    train_validate,
)
from lokern.solvers import empirical_risk


def coverage_radius(points: np.ndarray, targets: np.ndarray) -> float:
    """Worst distance from any target to the point set."""
    return float(np.max(np.min(np.abs(targets[:, None] - points[None, :]), axis=1)))


class TestMakeGrids:
    @pytest.mark.parametrize("log_n", [3, 5, 10])
    def test_a_net_covers_unit_interval(self, log_n):
        n = math.e**log_n
        grid = make_grids(n, d=4, sigma=0.25)
        eps = 1.0 / math.log(n)
        scan = np.arange(1e-4, 1.0 + 1e-12, 1e-4)
        assert coverage_radius(grid.a_exponents, scan) <= eps + 1e-9

    @pytest.mark.parametrize("log_n", [3, 5, 10])
    @pytest.mark.parametrize("d", [1, 2, 7])
    def test_b_net_covers_interval(self, log_n, d):
        n = math.e**log_n
        sigma = 0.25
        grid = make_grids(n, d=d, sigma=sigma)
        eps = 1.0 / math.log(n)
        scan = np.arange(sigma + 1.0, sigma + d + 1e-12, 1e-4)
        assert coverage_radius(grid.b_exponents, scan) <= eps + 1e-9

    def test_mandated_endpoints(self):
        for log_n, d, sigma in [(3, 1, 0.0), (5, 3, 0.5), (10, 6, 0.9)]:
            grid = make_grids(math.e**log_n, d=d, sigma=sigma)
            assert 1.0 in grid.a_exponents.tolist()
            assert any(abs(b - (sigma + d)) < 1e-12 for b in grid.b_exponents)

    def test_exponent_ranges(self):
        grid = make_grids(math.e**10, d=5, sigma=0.3)
        assert np.all(grid.a_exponents > 0.0) and np.all(grid.a_exponents <= 1.0)
        assert np.all(grid.b_exponents >= 1.3 - 1e-12)
        assert np.all(grid.b_exponents <= 5.3 + 1e-12)

    def test_candidate_values_are_powers(self):
        n = math.e**5
        grid = make_grids(n, d=2)
        assert np.allclose(grid.gammas, n ** (-grid.a_exponents))
        assert np.allclose(grid.lambdas, n ** (-grid.b_exponents))

    def test_logarithmic_cardinality(self):
        for log_n in (3, 5, 10, 14):
            grid = make_grids(math.e**log_n, d=3)
            assert len(grid.a_exponents) <= log_n / 2 + 2

    def test_single_point_b_net_for_d1(self):
        grid = make_grids(math.e**5, d=1, sigma=0.2)
        assert grid.b_exponents.tolist() == [1.2]

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            make_grids(7, d=2)  # log 7 < 2


class TestGeometricGrid:
    def test_shape_and_positive(self):
        rng = np.random.default_rng(0)
        grid = make_geometric_grid(rng.standard_normal((100, 3)))
        assert grid.lambdas.shape == (10,) and grid.gammas.shape == (10,)
        assert np.all(grid.lambdas > 0) and np.all(grid.gammas > 0)

    def test_scales_with_data(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((200, 2))
        small = make_geometric_grid(X)
        large = make_geometric_grid(X * 100.0)
        assert np.allclose(large.gammas, small.gammas * 100.0, rtol=1e-9)

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((300, 2))
        a, b = make_geometric_grid(X), make_geometric_grid(X)
        assert np.array_equal(a.gammas, b.gammas)


def sine_dataset(rng, n):
    x = rng.uniform(-1.0, 1.0, (n, 1))
    y = np.sin(4.0 * x[:, 0]) + 0.1 * rng.standard_normal(n)
    return Dataset(x, y, "regression")


def small_grid():
    return HyperGrid(lambdas=np.geomspace(1e-4, 1e-1, 4),
                     gammas=np.geomspace(0.1, 2.0, 4))


class TestTrainValidate:
    def test_single_pair_grid(self):
        rng = np.random.default_rng(3)
        ds = sine_dataset(rng, 60)
        grid = HyperGrid(lambdas=[1e-3], gammas=[0.5])
        result = train_validate(ds, 2, grid, seed=1)
        assert all(pair == (1e-3, 0.5) for pair in result.chosen_pairs)

    def test_run_count_accounting(self):
        rng = np.random.default_rng(4)
        ds = sine_dataset(rng, 80)
        grid = small_grid()
        result = train_validate(ds, 3, grid, seed=2)
        assert result.n_training_runs == result.model.m * 16

    def test_duplicate_candidates_same_outcome(self):
        rng = np.random.default_rng(5)
        ds = sine_dataset(rng, 60)
        base = HyperGrid(lambdas=[1e-3, 1e-2], gammas=[0.5])
        doubled = HyperGrid(lambdas=[1e-3, 1e-2, 1e-3, 1e-2], gammas=[0.5])
        r1 = train_validate(ds, 2, base, seed=3)
        r2 = train_validate(ds, 2, doubled, seed=3)
        assert r1.chosen_pairs == r2.chosen_pairs
        X = rng.standard_normal((20, 1))
        assert np.array_equal(r1.model.predict_batch(X), r2.model.predict_batch(X))

    def test_same_seed_identical(self):
        rng = np.random.default_rng(6)
        ds = sine_dataset(rng, 70)
        grid = small_grid()
        r1 = train_validate(ds, 2, grid, seed=9)
        r2 = train_validate(ds, 2, grid, seed=9)
        assert np.array_equal(r1.validation_losses, r2.validation_losses)
        assert np.array_equal(r1.chosen_indices, r2.chosen_indices)

    def test_chosen_loss_is_recorded_minimum(self):
        rng = np.random.default_rng(7)
        ds = sine_dataset(rng, 90)
        result = train_validate(ds, 3, small_grid(), seed=4)
        for j in range(result.validation_losses.shape[0]):
            if result.fallback_flags[j]:
                continue
            assert (result.validation_losses[j, result.chosen_indices[j]]
                    == result.validation_losses[j].min())

    def test_selection_close_to_exhaustive_sweep(self):
        rng = np.random.default_rng(8)
        train = sine_dataset(rng, 400)
        test = sine_dataset(rng, 200)
        grid = small_grid()
        result = train_validate(train, 2, grid, seed=5)
        selected_rmse = np.sqrt(empirical_risk(
            "least_squares", result.model.predict_batch(test.features), test.labels))
        d1 = train.subset(result.train_indices)
        best = np.inf
        for lam, gam in result.candidates:
            model = fit(d1, result.model.m, lam, gam)
            rmse = np.sqrt(empirical_risk(
                "least_squares", model.predict_batch(test.features), test.labels))
            best = min(best, rmse)
        assert selected_rmse <= 1.1 * best

    def test_fallback_cell_flagged_with_conservative_pair(self):
        # single far outlier: when it lands in the training half it owns a
        # cell that no validation point routes to
        X = np.vstack([np.random.default_rng(9).normal(0, 0.1, (9, 2)),
                       [[100.0, 0.0]]])
        y = np.arange(10.0)
        ds = Dataset(X, y, "regression")
        grid = small_grid()
        hit = None
        for seed in range(30):
            result = train_validate(ds, 2, grid, seed=seed)
            if result.fallback_flags.any():
                hit = result
                break
        assert hit is not None
        j = int(np.flatnonzero(hit.fallback_flags)[0])
        lam, gam = hit.chosen_pairs[j]
        gam_sorted = np.sort(grid.gammas)
        assert lam == grid.lambdas.max()
        assert gam == gam_sorted[(gam_sorted.size - 1) // 2]
        assert np.all(np.isnan(hit.validation_losses[j]))

    def test_needs_four_samples(self):
        ds = Dataset(np.zeros((3, 1)), np.zeros(3), "regression")
        with pytest.raises(ValueError):
            train_validate(ds, 1, small_grid())

    def test_classification_selection(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((80, 2))
        y = np.where(X[:, 0] + 0.2 * rng.standard_normal(80) > 0, 1.0, -1.0)
        ds = Dataset(X, y, "classification")
        result = train_validate(ds, 2, small_grid(), seed=6)
        preds = result.model.predict_batch(X)
        assert empirical_risk("zero_one", preds, y) < 0.25

    def test_trace_csv(self, tmp_path):
        rng = np.random.default_rng(11)
        ds = sine_dataset(rng, 50)
        result = train_validate(ds, 2, small_grid(), seed=7)
        path = tmp_path / "trace.csv"
        result.write_trace_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "cell,lambda,gamma,validation_loss,chosen"
        assert len(lines) == 1 + result.model.m * len(result.candidates)
        chosen_rows = [ln for ln in lines[1:] if ln.endswith(",1")]
        assert len(chosen_rows) == result.model.m


class TestKfoldCv:
    def test_leave_one_out_small_cell(self):
        # two tight clusters force the 3-point one into its own cell
        X = np.vstack([np.random.default_rng(0).normal(0, 0.05, (9, 2)),
                       np.random.default_rng(1).normal(10, 0.05, (3, 2))])
        y = np.arange(12.0)
        ds = Dataset(X, y, "regression")
        result = kfold_cv(ds, 2, small_grid(), k=3, seed=0)
        sizes = np.bincount(
            np.argmin(((X[:, None, :] - result.model.center_points) ** 2).sum(-1), axis=1)
        )
        assert sorted(sizes.tolist()) == [3, 9]
        assert set(result.fold_counts.tolist()) == {3}

    def test_fold_count_lowered_and_flagged(self):
        X = np.vstack([np.random.default_rng(2).normal(0, 0.05, (10, 2)),
                       np.random.default_rng(3).normal(10, 0.05, (3, 2))])
        ds = Dataset(X, np.arange(13.0), "regression")
        result = kfold_cv(ds, 2, small_grid(), k=5, seed=0)
        assert sorted(result.fold_counts.tolist()) == [3, 5]

    def test_zero_labels_tie_break_smallest_pair(self):
        rng = np.random.default_rng(4)
        ds = Dataset(rng.standard_normal((20, 2)), np.zeros(20), "regression")
        grid = small_grid()
        result = kfold_cv(ds, 1, grid, k=4, seed=1)
        assert np.all(result.validation_losses == 0.0)
        assert result.chosen_pairs[0] == (grid.lambdas.min(), grid.gammas.min())

    def test_same_seed_identical(self):
        rng = np.random.default_rng(5)
        ds = sine_dataset(rng, 40)
        r1 = kfold_cv(ds, 2, small_grid(), k=4, seed=8)
        r2 = kfold_cv(ds, 2, small_grid(), k=4, seed=8)
        assert np.array_equal(r1.validation_losses, r2.validation_losses)
        X = rng.standard_normal((10, 1))
        assert np.array_equal(r1.model.predict_batch(X), r2.model.predict_batch(X))

    def test_refit_on_full_cell(self):
        rng = np.random.default_rng(6)
        ds = sine_dataset(rng, 30)
        result = kfold_cv(ds, 1, small_grid(), k=5, seed=2)
        assert result.model.cells[0].support_inputs.shape[0] == 30

    def test_k_bounds(self):
        rng = np.random.default_rng(7)
        ds = sine_dataset(rng, 10)
        with pytest.raises(ValueError):
            kfold_cv(ds, 1, small_grid(), k=1)
        with pytest.raises(ValueError):
            kfold_cv(ds, 1, small_grid(), k=11)

    def test_cell_policy_accepted(self):
        rng = np.random.default_rng(8)
        ds = sine_dataset(rng, 60)
        result = kfold_cv(ds, CellPolicy("cap", 30), small_grid(), k=3, seed=3)
        assert result.model.m == 2
