import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fabc.empirical import (
    KS1D,
    EmpiricalCdf,
    MatchSpec,
    ParametricAbs,
    ProjectedTV,
    Sample,
    _ks_batch,
    ecdf_eval,
    ks_distance,
    ks_distance_to_cdf,
    match,
    project,
    projected_tv,
    sample_directions,
    sample_from_csv,
    sample_to_csv,
)
from oracles import ks_brute

# values with many exact ties alongside generic floats
tie_values = st.integers(-3, 3).map(float)
generic_values = st.floats(-1e6, 1e6, allow_nan=False)
sample_values = st.one_of(tie_values, generic_values)
samples = st.lists(sample_values, min_size=1, max_size=30)


class TestSample:
    def test_shapes(self):
        s = Sample(np.arange(6.0).reshape(3, 2))
        assert (s.n, s.d) == (3, 2)
        flat = Sample([1.0, 2.0])
        assert (flat.n, flat.d) == (2, 1)
        assert flat.column().tolist() == [1.0, 2.0]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            Sample(np.empty((0, 1)))
        with pytest.raises(ValueError):
            Sample([np.nan])
        with pytest.raises(ValueError):
            Sample([np.inf, 0.0])

    def test_immutable(self):
        s = Sample([1.0, 2.0])
        with pytest.raises(ValueError):
            s.data[0, 0] = 5.0

    def test_csv_roundtrip(self, tmp_path):
        s = Sample(np.random.default_rng(0).standard_normal((7, 2)))
        path = tmp_path / "x.csv"
        sample_to_csv(s, path)
        back = sample_from_csv(path)
        assert np.array_equal(back.data, s.data)


class TestEcdf:
    def test_counts_at_or_below(self):
        cdf = EmpiricalCdf([1.0, 2.0, 3.0])
        assert ecdf_eval(cdf, 2.0) == pytest.approx(2 / 3)

    def test_below_minimum(self):
        cdf = EmpiricalCdf([1.0, 2.0, 3.0])
        assert ecdf_eval(cdf, 0.5) == 0.0

    def test_ties_counted_inclusively(self):
        cdf = EmpiricalCdf([1.0, 1.0, 1.0])
        assert ecdf_eval(cdf, 1.0) == 1.0

    def test_monotone_and_quantized(self):
        cdf = EmpiricalCdf([3.0, 1.0, 2.0, 2.0])
        grid = np.linspace(0, 4, 50)
        vals = cdf(grid)
        assert np.all(np.diff(vals) >= 0)
        assert set(np.round(vals * 4).astype(int)) <= {0, 1, 2, 3, 4}


class TestKsDistance:
    def test_permutation_gives_zero(self):
        assert ks_distance([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_half_gap(self):
        assert ks_distance([0.0, 1.0], [0.5, 1.0]) == 0.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_distance([], [1.0])

    def test_requires_1d(self):
        with pytest.raises(ValueError):
            ks_distance(Sample(np.zeros((3, 2))), [1.0])

    @given(samples, samples)
    @settings(max_examples=200, derandomize=True, deadline=None)
    def test_matches_brute_force_exactly(self, x, y):
        assert ks_distance(x, y) == float(ks_brute(x, y))

    @given(samples, samples)
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_symmetry_and_range(self, x, y):
        d = ks_distance(x, y)
        assert d == ks_distance(y, x)
        assert 0.0 <= d <= 1.0

    @given(samples, samples, samples)
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_triangle_inequality(self, x, y, z):
        assert ks_distance(x, z) <= ks_distance(x, y) + ks_distance(y, z) + 1e-12

    @given(st.lists(sample_values, min_size=1, max_size=20), st.data())
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_zero_iff_sorted_equal(self, x, data):
        y = data.draw(st.permutations(x))
        assert ks_distance(x, y) == 0.0
        z = data.draw(st.lists(sample_values, min_size=len(x), max_size=len(x)))
        if sorted(z) != sorted(x):
            assert ks_distance(x, z) > 0.0

    @given(st.lists(sample_values, min_size=1, max_size=25), st.data())
    @settings(max_examples=100, derandomize=True, deadline=None)
    def test_equal_sizes_quantized_and_gapped(self, x, data):
        n = len(x)
        y = data.draw(st.lists(sample_values, min_size=n, max_size=n))
        d = ks_distance(x, y)
        # exact multiple of 1/n
        assert d in {k / n for k in range(n + 1)}
        if sorted(x) != sorted(y):
            assert d >= 1.0 / n

    def test_unequal_sizes(self):
        assert ks_distance([0.0], [0.0, 10.0]) == 0.5

    @given(samples, samples)
    @settings(max_examples=50, derandomize=True, deadline=None)
    def test_batch_matches_single(self, x, y):
        a = np.tile(np.asarray(x), (3, 1))
        b = np.tile(np.asarray(y), (3, 1))
        batch = _ks_batch(a, b)
        assert np.all(batch == ks_distance(x, y))


class TestKsToCdf:
    def test_exact_on_step_grid(self):
        x = [0.25, 0.75]
        d = ks_distance_to_cdf(x, lambda t: np.clip(t, 0, 1))
        assert d == pytest.approx(0.25, abs=1e-15)

    def test_dominates_interior_gaps(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 1, 40)
        d = ks_distance_to_cdf(x, lambda t: np.clip(t, 0, 1))
        cdf = EmpiricalCdf(x)
        grid = np.linspace(0, 1, 2001)
        assert d >= np.max(np.abs(cdf(grid) - grid)) - 1e-12


class TestProjection:
    def test_axis_projection(self):
        x = Sample(np.array([[3.0, 9.0], [-1.0, 4.0]]))
        assert project(x, [1.0, 0.0]).column().tolist() == [3.0, -1.0]
        assert project(x, [0.0, 1.0]).column().tolist() == [9.0, 4.0]

    def test_diagonal(self):
        x = Sample(np.array([[1.0, 1.0]]))
        r = 1 / math.sqrt(2)
        assert project(x, [r, r]).column()[0] == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project(Sample(np.zeros((2, 2))), [1.0, 0.0, 0.0])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, derandomize=True, deadline=None)
    def test_halfspace_identity(self, seed):
        # empirical mass of {y: <a, y> <= t} equals the projected ECDF at t
        from oracles import halfspace_mass

        rng = np.random.default_rng(seed)
        x = Sample(rng.standard_normal((8, 2)))
        a = sample_directions(2, 1, rng)[0]
        cdf = EmpiricalCdf(project(x, a))
        atom = float(x.data[0] @ a)
        # probe just past an atom: beyond dot-product rounding but inside the gap
        for t in [-1.0, 0.0, 0.3, atom + 1e-9 * max(1.0, abs(atom))]:
            assert ecdf_eval(cdf, t) == float(halfspace_mass(x.data, a, t))

    def test_halfspace_identity_exact_at_ties(self):
        # axis directions on integer points make the inner products exact,
        # so a threshold sitting on an atom checks the <= convention itself
        from oracles import halfspace_mass

        rng = np.random.default_rng(12)
        pts = rng.integers(-4, 5, (10, 3)).astype(float)
        for j in range(3):
            a = np.zeros(3)
            a[j] = 1.0
            cdf = EmpiricalCdf(project(Sample(pts), a))
            for t in pts[:, j]:
                assert ecdf_eval(cdf, float(t)) == float(halfspace_mass(pts, a, float(t)))


class TestDirections:
    def test_unit_norm_and_upper_halfplane(self):
        dirs = sample_directions(2, 50, 0)
        assert dirs.shape == (50, 2)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
        assert np.all(dirs[:, 1] >= 0)  # angles in [0, pi)

    def test_equispaced(self):
        dirs = sample_directions(2, 2, equispaced=True)
        assert np.allclose(dirs, [[1.0, 0.0], [0.0, 1.0]], atol=1e-15)

    def test_high_dim_symmetry(self):
        dirs = sample_directions(3, 1000, 123)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
        assert np.linalg.norm(dirs.mean(axis=0)) < 0.1

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            sample_directions(1, 10, 0)
        with pytest.raises(ValueError):
            sample_directions(2, 0, 0)
        with pytest.raises(ValueError):
            sample_directions(3, 4, 0, equispaced=True)


class TestProjectedTV:
    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((12, 2))
        y = x[rng.permutation(12)]
        dirs = sample_directions(2, 7, rng)
        assert projected_tv(Sample(x), Sample(y), dirs) == 0.0

    def test_single_direction_reduces_to_ks(self):
        rng = np.random.default_rng(3)
        x, y = Sample(rng.standard_normal((9, 2))), Sample(rng.standard_normal((11, 2)))
        d = projected_tv(x, y, [[1.0, 0.0]])
        assert d == ks_distance(x.data[:, 0], y.data[:, 0])

    def test_monotone_in_direction_set(self):
        rng = np.random.default_rng(4)
        x, y = Sample(rng.standard_normal((10, 2))), Sample(rng.standard_normal((10, 2)))
        dirs = sample_directions(2, 12, rng)
        d_small = projected_tv(x, y, dirs[:4])
        d_big = projected_tv(x, y, dirs)
        assert d_small <= d_big <= 1.0

    def test_antipodal_invariance(self):
        rng = np.random.default_rng(6)
        x, y = Sample(rng.standard_normal((8, 2))), Sample(rng.standard_normal((8, 2)))
        dirs = sample_directions(2, 5, rng)
        assert projected_tv(x, y, dirs) == projected_tv(x, y, -dirs)

    def test_rejects_non_unit_directions(self):
        x = Sample(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            projected_tv(x, x, [[1.0, 1.0]])
        with pytest.raises(ValueError):
            ProjectedTV(np.empty((0, 2)))


class TestMatch:
    def test_epsilon_one_always_matches(self):
        rng = np.random.default_rng(7)
        x, y = Sample(rng.standard_normal(20)), Sample(rng.standard_normal(20) + 50)
        assert match(x, y, MatchSpec(KS1D(), 1.0))

    def test_identical_samples_match_at_zero(self):
        x = Sample([1.0, 2.0, 3.0])
        assert match(x, x, MatchSpec(KS1D(), 0.0))

    def test_closed_boundary(self):
        x, y = Sample([0.0, 1.0]), Sample([0.5, 1.0])
        assert not match(x, y, MatchSpec(KS1D(), 0.49))
        assert match(x, y, MatchSpec(KS1D(), 0.5))

    def test_parametric_uses_mean_only(self):
        spec = MatchSpec(ParametricAbs(0.0), 0.1)
        x = Sample([123.0])  # ignored by the parametric summary
        assert match(x, Sample([-1.0, 1.05]), spec)
        assert not match(x, Sample([1.0, 1.0]), spec)

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            MatchSpec(KS1D(), -0.1)
