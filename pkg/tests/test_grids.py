import numpy as np
import pytest

from bohmstab.grids import (
    ComplexField,
    ScalarField,
    build_grid,
    divergence_arrays,
    gradient,
    gradient_arrays,
    inner_product,
    laplacian,
    norm_sq,
)
from tests.conftest import ho_eigenstate_exact


class TestBuildGrid:
    def test_spacing_and_coordinates(self):
        # same arithmetic as the 3-point textbook case, at a compliant size
        g = build_grid(1, [(-1.0, 1.0)], [17])
        x = g.axis_coords(0)
        assert g.spacing[0] == 0.125
        assert x[0] == -1.0 and x[-1] == 1.0
        assert np.allclose(np.diff(x), 0.125)

    def test_unit_spacing(self):
        g = build_grid(1, [(0.0, 20.0)], [21])
        x = g.axis_coords(0)
        assert g.spacing[0] == 1.0
        assert x[0] == 0.0 and x[-1] == 20.0

    def test_2d_counts(self):
        g = build_grid(2, [(-1.0, 1.0), (0.0, 2.0)], [17, 21])
        assert g.size == 17 * 21
        assert g.spacing == (0.125, 0.1)

    def test_coordinates_bitwise_reproducible(self):
        g = build_grid(1, [(-7.3, 11.9)], [457])
        assert np.all(g.axis_coords(0) == g.axis_coords(0))

    def test_point_minimum_enforced(self):
        # the type constrains points >= 16 even though the arithmetic is
        # defined for any count
        with pytest.raises(ValueError, match="at least 16"):
            build_grid(1, [(-1.0, 1.0)], [3])

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            build_grid(2, [(-1.0, 1.0), (-1.0, 1.0)], [3000, 3000])

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            build_grid(1, [(1.0, -1.0)], [32])
        with pytest.raises(ValueError):
            build_grid(1, [(0.0, np.inf)], [32])


class TestFields:
    def test_shape_mismatch(self):
        g = build_grid(1, [(0.0, 1.0)], [32])
        with pytest.raises(ValueError, match="shape"):
            ScalarField(g, np.zeros(31))

    def test_nonfinite_rejected(self):
        g = build_grid(1, [(0.0, 1.0)], [32])
        vals = np.zeros(32)
        vals[3] = np.nan
        with pytest.raises(ValueError, match="finite"):
            ScalarField(g, vals)

    def test_immutable(self):
        g = build_grid(1, [(0.0, 1.0)], [32])
        f = ScalarField(g, np.ones(32))
        with pytest.raises(ValueError):
            f.values[0] = 2.0


class TestGradient:
    def test_quadratic_interior_exact(self):
        g = build_grid(1, [(-1.0, 1.0)], [33])
        x = g.axis_coords(0)
        grad = gradient(ScalarField(g, x**2))[0].values
        k = np.argmin(np.abs(x - 0.5))
        assert abs(grad[k] - 2.0 * x[k]) < 1e-13

    def test_constant(self):
        g = build_grid(1, [(-1.0, 1.0)], [33])
        grad = gradient(ScalarField(g, np.full(33, 4.2)))[0].values
        assert np.max(np.abs(grad)) < 1e-13

    def test_sine_error_bound(self):
        # oracle: analytic derivative; tolerance from the h^2/6 |f'''| budget
        g = build_grid(1, [(-np.pi, np.pi)], [401])
        x = g.axis_coords(0)
        h = g.spacing[0]
        grad = gradient(ScalarField(g, np.sin(x)))[0].values
        err = np.max(np.abs(grad - np.cos(x)))
        assert err < h**2 / 6.0
        assert err < 1e-4

    def test_linearity(self):
        g = build_grid(1, [(-2.0, 2.0)], [65])
        rng = np.random.Generator(np.random.Philox(key=[11, 0]))
        f = ScalarField(g, rng.standard_normal(65))
        gfld = ScalarField(g, rng.standard_normal(65))
        lhs = gradient(ScalarField(g, 2.5 * f.values - 1.5 * gfld.values))[0].values
        rhs = 2.5 * gradient(f)[0].values - 1.5 * gradient(gfld)[0].values
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, np.max(np.abs(rhs)))

    def test_2d_axes(self):
        g = build_grid(2, [(-1.0, 1.0), (-1.0, 1.0)], [33, 33])
        xs, ys = g.meshes()
        gx, gy = gradient(ScalarField(g, xs**2 + 3.0 * ys))
        assert np.max(np.abs(gx.values[2:-2, :] - 2 * xs[2:-2, :])) < 1e-12
        assert np.max(np.abs(gy.values - 3.0)) < 1e-12


class TestLaplacian:
    def test_quadratic_exact(self):
        g = build_grid(1, [(-1.0, 1.0)], [33])
        x = g.axis_coords(0)
        lap = laplacian(ScalarField(g, x**2)).values
        assert np.max(np.abs(lap - 2.0)) < 1e-11

    def test_constant(self):
        g = build_grid(1, [(-1.0, 1.0)], [33])
        lap = laplacian(ScalarField(g, np.full(33, 7.0))).values
        assert np.max(np.abs(lap)) < 1e-12

    def test_gaussian_vs_symbolic(self):
        # oracle: d^2/dx^2 e^{-x^2} = (4x^2 - 2) e^{-x^2}
        g = build_grid(1, [(-8.0, 8.0)], [801])
        x = g.axis_coords(0)
        lap = laplacian(ScalarField(g, np.exp(-(x**2)))).values
        exact = (4.0 * x**2 - 2.0) * np.exp(-(x**2))
        assert np.max(np.abs(lap[1:-1] - exact[1:-1])) < 1e-3

    def test_matches_divergence_of_gradient_on_quadratics(self):
        g = build_grid(1, [(-1.0, 1.0)], [33])
        x = g.axis_coords(0)
        vals = 0.5 * x**2 - 0.3 * x + 1.0
        lap = laplacian(ScalarField(g, vals)).values
        divgrad = divergence_arrays(gradient_arrays(vals, g), g)
        assert np.max(np.abs(lap[2:-2] - divgrad[2:-2])) < 1e-10

    def test_2d_five_point(self):
        g = build_grid(2, [(-1.0, 1.0), (-1.0, 1.0)], [33, 33])
        xs, ys = g.meshes()
        lap = laplacian(ScalarField(g, xs**2 + ys**2)).values
        assert np.max(np.abs(lap - 4.0)) < 1e-10


class TestQuadrature:
    def test_constant_on_unit_interval(self):
        g = build_grid(1, [(0.0, 1.0)], [101])
        f = ComplexField(g, np.ones(101, dtype=complex))
        assert abs(inner_product(f, f) - 1.0) < 1e-14

    def test_gaussian_norm(self):
        g = build_grid(1, [(-10.0, 10.0)], [1001])
        x = g.axis_coords(0)
        psi = ComplexField(g, ((2 * np.pi) ** -0.25 * np.exp(-x**2 / 4)).astype(complex))
        assert abs(norm_sq(psi) - 1.0) < 1e-10

    def test_orthogonal_eigenstates(self):
        # parity makes <0|1> vanish; oracle states from the Hermite recursion
        g = build_grid(1, [(-10.0, 10.0)], [1001])
        x = g.axis_coords(0)
        psi0 = ComplexField(g, ho_eigenstate_exact(0, x).astype(complex))
        psi1 = ComplexField(g, ho_eigenstate_exact(1, x).astype(complex))
        assert abs(inner_product(psi0, psi1)) < 1e-8

    def test_norm_is_real_part(self):
        g = build_grid(1, [(-3.0, 3.0)], [101])
        x = g.axis_coords(0)
        psi = ComplexField(g, np.exp(1j * x) * np.exp(-(x**2)))
        ip = inner_product(psi, psi)
        assert norm_sq(psi) == ip.real
        assert abs(ip.imag) < 1e-14

    def test_grid_mismatch(self):
        g1 = build_grid(1, [(0.0, 1.0)], [32])
        g2 = build_grid(1, [(0.0, 1.0)], [64])
        with pytest.raises(ValueError, match="grid"):
            inner_product(ComplexField(g1, np.ones(32, complex)),
                          ComplexField(g2, np.ones(64, complex)))
