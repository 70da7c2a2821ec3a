import numpy as np
import pytest

from src.errors import DimensionMismatchError, InvalidInputError, ReciprocalSingularityError
from src.poly_approx import (
    Cube,
    MultiPoly,
    certify_nonvanishing,
    chebyshev_nodes,
    chebyshev_series_reciprocal,
    decay_slope,
    evaluate,
    evaluate_grid,
    grid_extrema,
    h1_poly,
    interpolate_reciprocal,
    interpolation_residual,
    load_multipoly,
    min_abs_on_grid,
    save_multipoly,
    sup_error,
)

CHEBY_INT = [0.7500, 0.4497, 0.2342, 0.1186, 0.0595]
CHEBY_POLY = [1.0463, 0.5837, 0.2924, 0.1467, 0.0728]


def h1(t):
    return (2.25 - t) * (3.0 + t)


@pytest.fixture
def unit_interval():
    return Cube(((0.0, 2.0),))


class TestMultiPoly:
    def test_h1_power_coefficients(self):
        np.testing.assert_allclose(h1_poly().to_power(), [6.75, -0.75, -1.0], atol=1e-14)

    def test_h1_values(self):
        t = np.linspace(0, 2, 11)
        np.testing.assert_allclose(h1_poly()(t), h1(t), rtol=1e-13)

    def test_bivariate_from_power(self):
        cube = Cube(((0.0, 2.0), (-1.0, 3.0)))
        p = MultiPoly.from_power([[1.0, 2.0], [0.5, -1.0]], cube)
        t1, t2 = 1.3, 0.4
        assert evaluate(p, [t1, t2]) == pytest.approx(1 + 2 * t2 + 0.5 * t1 - t1 * t2, rel=1e-13)

    def test_evaluate_grid_matches_points(self, random_poly):
        p = random_poly((3, 2))
        a1, a2 = np.linspace(0, 2, 5), np.linspace(0, 2, 4)
        grid = evaluate_grid(p, [a1, a2])
        T1, T2 = np.meshgrid(a1, a2, indexing="ij")
        np.testing.assert_allclose(grid, p(T1, T2), rtol=1e-12, atol=1e-12)

    def test_dimension_checks(self, unit_interval):
        with pytest.raises(DimensionMismatchError):
            MultiPoly(np.ones((2, 2)), unit_interval)
        with pytest.raises(DimensionMismatchError):
            evaluate(h1_poly(), [0.5, 0.5])

    def test_degenerate_cube_rejected(self):
        with pytest.raises(InvalidInputError):
            Cube(((1.0, 1.0),))

    def test_extrapolation_warns(self, caplog):
        evaluate(h1_poly(), [2.5])
        assert "Extrapolating" in caplog.text

    def test_text_format(self, tmp_path, random_poly):
        p = random_poly((2, 3))
        path = save_multipoly(p, tmp_path / "p.txt")
        assert path.read_text().splitlines()[0] == "2 2,3 0 2 0 2"
        back = load_multipoly(path)
        np.testing.assert_array_equal(back.coeffs, p.coeffs)
        assert back.cube == p.cube


class TestApproximationErrors:
    @pytest.mark.parametrize("M, expected", list(enumerate(CHEBY_INT)))
    def test_interpolant_errors(self, M, expected, unit_interval):
        h = h1_poly()
        assert sup_error(h, interpolate_reciprocal(h, unit_interval, M)) == pytest.approx(expected, abs=5e-4)

    @pytest.mark.parametrize("M, expected", list(enumerate(CHEBY_POLY)))
    def test_series_errors(self, M, expected, unit_interval):
        h = h1_poly()
        assert sup_error(h, chebyshev_series_reciprocal(h, unit_interval, M)) == pytest.approx(expected, abs=5e-4)

    def test_degree_zero_interpolant(self, unit_interval):
        C0 = interpolate_reciprocal(h1_poly(), unit_interval, 0)
        assert C0.degrees == (0,)
        assert C0.coeffs[0] == pytest.approx(0.2, abs=1e-12)
        assert abs(1 - h1(2.0) * evaluate(C0, [2.0])) == pytest.approx(0.75, abs=1e-12)
        assert sup_error(h1_poly(), C0) == pytest.approx(0.75, abs=1e-12)

    def test_grid_refinement_is_stable(self, unit_interval):
        h = h1_poly()
        for M in range(5):
            C = interpolate_reciprocal(h, unit_interval, M)
            assert abs(sup_error(h, C, grid_per_dim=20001) - sup_error(h, C, grid_per_dim=10001)) < 5e-5

    def test_callable_matches_multipoly(self, unit_interval):
        a = interpolate_reciprocal(h1, unit_interval, 3)
        b = interpolate_reciprocal(h1_poly(), unit_interval, 3)
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-14)

    def test_errors_decay_exponentially(self, unit_interval):
        h = h1_poly()
        errors = [sup_error(h, interpolate_reciprocal(h, unit_interval, M)) for M in range(8)]
        assert decay_slope(errors) < np.log(0.6)

    def test_series_converges_in_two_dimensions(self):
        cube = Cube.uniform((0.0, 2.0), 2)
        h = MultiPoly.from_power([[1.0, 1.0], [1.0, 0.0]], cube)
        errors = [sup_error(h, chebyshev_series_reciprocal(h, cube, M)) for M in range(1, 6)]
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 0.05


class TestInterpolation:
    def test_nodes(self):
        nodes = chebyshev_nodes(1, (0.0, 2.0))
        np.testing.assert_allclose(nodes, [1 + np.sqrt(0.5), 1 - np.sqrt(0.5)])

    def test_interpolates_at_nodes_in_two_dimensions(self):
        cube = Cube(((0.0, 2.0), (0.0, 1.0)))
        h = MultiPoly.from_power([[2.0, 0.5], [0.3, 0.1]], cube)
        C = interpolate_reciprocal(h, cube, 4)
        assert C.degrees == (4, 4)
        assert interpolation_residual(h, C) < 1e-12

    def test_vanishing_node_rejected(self):
        cube = Cube(((-1.0, 1.0),))
        h = MultiPoly.from_power([0.0, 1.0], cube)
        with pytest.raises(ReciprocalSingularityError):
            interpolate_reciprocal(h, cube, 2)

    def test_certify_nonvanishing(self, unit_interval):
        assert certify_nonvanishing(h1_poly(), unit_interval) == pytest.approx(1.25)
        h = MultiPoly.from_power([-1.0, 1.0], unit_interval)
        assert min_abs_on_grid(h, unit_interval) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ReciprocalSingularityError):
            certify_nonvanishing(h, unit_interval)

    def test_grid_extrema(self, unit_interval):
        lo, hi = grid_extrema(h1_poly(), unit_interval)
        assert lo == pytest.approx(1.25)
        assert hi == pytest.approx(6.75)

    def test_negative_degree_rejected(self, unit_interval):
        with pytest.raises(InvalidInputError):
            interpolate_reciprocal(h1_poly(), unit_interval, -1)
