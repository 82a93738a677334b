import math

import numpy as np
import pytest

from fabc.empirical import ks_distance_to_cdf
from fabc.models import (
    BivariateNormal,
    GridDiscretization,
    Normal1D,
    UniformBox,
    normal_cdf,
    prior_draw,
)
from fabc.rng import RngTree

# frozen with mpmath (40 digits)
PHI_1959964 = 0.9750000009035575957
PHI_MINUS_8 = 6.2209605742717841235e-16


class TestNormalCdf:
    def test_symmetry_point(self):
        assert normal_cdf(0.0) == 0.5

    def test_upper_quantile(self):
        assert abs(normal_cdf(1.959964) - PHI_1959964) < 1e-10

    def test_far_tail(self):
        assert normal_cdf(-8.0) == pytest.approx(PHI_MINUS_8, rel=1e-10)

    def test_complement(self):
        for z in (-3.0, -0.5, 0.7, 4.0):
            assert normal_cdf(z) + normal_cdf(-z) == pytest.approx(1.0, abs=1e-14)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            normal_cdf(float("nan"))


class TestNormal1D:
    def test_deterministic_given_stream(self):
        model = Normal1D()
        a = model.simulate(0.0, 3, RngTree.from_seed(42).generator())
        b = model.simulate(0.0, 3, RngTree.from_seed(42).generator())
        assert np.array_equal(a.data, b.data)
        c = model.simulate(0.0, 3, RngTree.from_seed(43).generator())
        assert not np.array_equal(a.data, c.data)

    def test_batch_consistent_with_single(self):
        model = Normal1D(sd=2.0)
        one = model.simulate(1.5, 10, RngTree.from_seed(9).generator())
        batch = model.simulate_batch(1.5, 10, 1, RngTree.from_seed(9).generator())
        assert np.array_equal(one.data, batch[0])

    def test_empirical_sd(self):
        model = Normal1D()
        x = model.simulate(5.0, 10_000, RngTree.from_seed(3).generator())
        assert 0.97 <= float(np.std(x.column())) <= 1.03

    def test_shape_errors(self):
        model = Normal1D()
        gen = RngTree.from_seed(0).generator()
        with pytest.raises(ValueError):
            model.simulate([0.0, 1.0], 5, gen)
        with pytest.raises(ValueError):
            model.simulate(0.0, 0, gen)
        with pytest.raises(ValueError):
            Normal1D(sd=0.0)

    def test_cdf_matches_normal_cdf(self):
        model = Normal1D(sd=2.0)
        vals = model.cdf(1.0, [1.0, 3.0])
        assert vals[0] == pytest.approx(0.5, abs=1e-14)
        assert vals[1] == pytest.approx(normal_cdf(1.0), abs=1e-14)

    def test_quasi_sample_represents_model(self):
        model = Normal1D()
        x = model.quasi_sample(0.0, 100)
        assert x.n == 100
        assert np.all(np.diff(x.column()) > 0)
        d = ks_distance_to_cdf(x.column(), lambda v: model.cdf(0.0, v))
        assert d < 0.01


class TestBivariateNormal:
    def test_column_means_near_truth(self):
        # CLT: both column means within 3/sqrt(n) of the target almost always
        model = BivariateNormal()
        gen = RngTree.from_seed(11).generator()
        batch = model.simulate_batch([0.0, 2.0], 50, 1000, gen)
        means = batch.mean(axis=1)
        tol = 3.0 / math.sqrt(50)
        hit = np.all(np.abs(means - np.array([0.0, 2.0])) < tol, axis=1)
        assert hit.mean() >= 0.98

    def test_covariance_structure(self):
        model = BivariateNormal(variances=(1.0, 1.0), covariance=0.5)
        x = model.simulate([0.0, 0.0], 50_000, RngTree.from_seed(4).generator())
        emp = np.cov(x.data.T)
        assert np.allclose(emp, [[1.0, 0.5], [0.5, 1.0]], atol=0.03)

    def test_rejects_non_positive_definite(self):
        with pytest.raises(ValueError):
            BivariateNormal(variances=(1.0, 1.0), covariance=1.5)


class TestPriors:
    def test_uniform_box_draws_inside(self):
        box = UniformBox([-1.0], [1.0])
        draws = prior_draw(box, 1000, RngTree.from_seed(5).generator())
        assert draws.shape == (1000, 1)
        assert np.all(draws >= -1.0) and np.all(draws <= 1.0)

    def test_uniform_box_ks_calibration(self):
        # rng pipeline check: 1e5 draws pass a Kolmogorov test at level 1e-3
        box = UniformBox([0.0], [1.0])
        draws = prior_draw(box, 100_000, RngTree.from_seed(6).generator())
        critical = math.sqrt(math.log(2 / 1e-3) / (2 * 100_000))
        assert ks_distance_to_cdf(draws[:, 0], lambda t: np.clip(t, 0, 1)) <= critical

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError):
            UniformBox([1.0], [1.0])
        with pytest.raises(ValueError):
            UniformBox([0.0, 2.0], [1.0, 1.0])

    def test_grid_full_cartesian_product(self):
        grid = GridDiscretization(15, [-1.0, -2.0], [2.0, 3.0])
        pts = prior_draw(grid, 7, RngTree.from_seed(0).generator())  # count ignored
        assert pts.shape == (225, 2)

    def test_grid_endpoints_and_spacing(self):
        grid = GridDiscretization(15, [-1.0, -2.0], [2.0, 3.0])
        pts = grid.points()
        for j, (lo, hi) in enumerate([(-1.0, 2.0), (-2.0, 3.0)]):
            axis = np.unique(pts[:, j])
            assert axis[0] == lo and axis[-1] == hi
            steps = np.diff(axis)
            assert np.all(np.abs(steps - steps[0]) <= 1e-12 * abs(steps[0]))

    def test_degenerate_single_point_grid(self):
        grid = GridDiscretization(1, [0.0, 0.0], [0.0, 0.0])
        assert grid.points().tolist() == [[0.0, 0.0]]

    def test_grid_count_validation(self):
        with pytest.raises(ValueError):
            GridDiscretization(0, [0.0], [1.0])
