import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hkit.exceptions import DimensionError, EvaluationError, InvalidConfigError, ProbeRejectedError
from hkit.lp_space import GridFunction, ProductPoint, QuadratureGrid
from hkit.operators import (
    DiscretizedOperators,
    HammersteinProblem,
    IntegralKernel,
    ScalarNonlinearity,
    apply_integral,
    apply_nemytskii,
    hammerstein_residual,
    monotonicity_probe,
    product_operator_apply,
)

MIN_KERNEL = IntegralKernel(np.minimum, symmetric=True, psd_claimed=True, name="min")
CUBIC = ScalarNonlinearity(lambda x, s: s**3 + s, lambda x, s: 3 * s**2 + 1, name="cubic")


def make_ops(f=CUBIC, k=MIN_KERNEL, n=17, p=2.0, **kw):
    return DiscretizedOperators(f, k, QuadratureGrid.trapezoid(n), p, **kw)


class TestKernel:
    def test_needs_callable_or_scale(self):
        with pytest.raises(InvalidConfigError):
            IntegralKernel()

    def test_false_symmetry_claim(self):
        with pytest.raises(InvalidConfigError, match="symmetric"):
            IntegralKernel(lambda x, y: x + 2 * y, symmetric=True)

    def test_false_psd_claim(self):
        with pytest.raises(InvalidConfigError, match="PSD"):
            IntegralKernel(lambda x, y: -np.minimum(x, y), symmetric=True, psd_claimed=True)

    def test_nonfinite_kernel(self):
        with pytest.raises(InvalidConfigError, match="finite"):
            IntegralKernel(lambda x, y: 1.0 / (x - y))

    def test_matrix_scales_columns_by_weights(self):
        grid = QuadratureGrid.trapezoid(5)
        m = MIN_KERNEL.matrix(grid)
        np.testing.assert_allclose(m, np.minimum.outer(grid.nodes, grid.nodes) * grid.weights)

    def test_identity_kernel_is_exact(self):
        ops = make_ops(k=IntegralKernel.identity(2.5))
        v = np.linspace(-1, 1, 17)
        np.testing.assert_array_equal(ops.K(v), 2.5 * v)

    def test_min_kernel_integral_of_one(self):
        # the integrand y -> min(x_i, y) is linear between nodes, so the
        # trapezoid rule reproduces x - x^2/2 to rounding
        ops = make_ops(n=33)
        x = ops.nodes
        np.testing.assert_allclose(ops.K(np.ones(33)), x - x**2 / 2, atol=1e-15)

    def test_matrix_is_read_only(self):
        ops = make_ops()
        with pytest.raises(ValueError):
            ops.matrix[0, 0] = 1.0


class TestApplication:
    def test_nemytskii_pointwise(self):
        ops = make_ops(f=ScalarNonlinearity(lambda x, s: x * np.exp(s)))
        u = np.linspace(-1, 1, 17)
        np.testing.assert_allclose(ops.F(u), ops.nodes * np.exp(u))

    def test_nemytskii_broadcasts_constant_output(self):
        ops = make_ops(f=ScalarNonlinearity(lambda x, s: 1.0))
        assert ops.F(np.zeros((3, 17))).shape == (3, 17)

    def test_nonfinite_value_reports_node(self):
        ops = make_ops(f=ScalarNonlinearity(lambda x, s: 1.0 / s))
        u = np.ones(17)
        u[6] = 0.0
        with pytest.raises(EvaluationError) as info:
            ops.F(u)
        assert info.value.index == 6

    def test_missing_derivative(self):
        with pytest.raises(InvalidConfigError):
            make_ops(f=ScalarNonlinearity(lambda x, s: s)).F_prime(np.zeros(17))

    def test_typed_wrappers_check_sides_and_grids(self):
        ops = make_ops()
        u = ops.primal(np.ones(17))
        assert apply_nemytskii(ops, u).side.value == "dual"
        assert apply_integral(ops, ops.dual(np.ones(17))).side.value == "primal"
        with pytest.raises(DimensionError):
            apply_integral(ops, u)
        with pytest.raises(DimensionError):
            apply_nemytskii(ops, GridFunction.primal(QuadratureGrid.trapezoid(17, (0, 2)), 1.0, 2.0))

    def test_residual_vanishes_at_known_solution(self):
        # f = s - g with K = I gives u = g/2
        g = np.sin(np.pi * QuadratureGrid.trapezoid(17).nodes)
        ops = make_ops(f=ScalarNonlinearity(lambda x, s: s - np.sin(np.pi * x)), k=IntegralKernel.identity())
        assert np.max(np.abs(hammerstein_residual(ops, ops.primal(g / 2)).values)) < 1e-15

    def test_product_operator_zero_at_solution_pair(self):
        ops = make_ops(f=ScalarNonlinearity(lambda x, s: s - 1.0), k=IntegralKernel.identity())
        u = np.full(17, 0.5)
        out = product_operator_apply(ops, ProductPoint(ops.primal(u), ops.dual(ops.F(u))))
        assert out.is_dual_side
        assert np.allclose(out.u.values, 0) and np.allclose(out.v.values, 0)

    def test_discretize_uses_problem_exponent(self):
        problem = HammersteinProblem(CUBIC, MIN_KERNEL, p=1.5)
        ops = problem.discretize(n=9)
        assert ops.p == 1.5 and ops.q == pytest.approx(3.0) and ops.size == 9


class TestProbe:
    @pytest.mark.parametrize("side", ["F", "K", "A"])
    def test_monotone_problem_has_no_violations(self, side):
        report = monotonicity_probe(make_ops(), side, samples=600, seed=3)
        assert report.violations == 0 and report.samples == 600

    def test_decreasing_nonlinearity_is_caught(self):
        ops = make_ops(f=ScalarNonlinearity(lambda x, s: -s))
        report = monotonicity_probe(ops, "F", samples=50)
        assert report.violations == 50 and report.min_ratio < 0

    def test_refuted_floor_rejects_problem(self):
        bad = ScalarNonlinearity(lambda x, s: s, monotonicity_floor=5.0)
        with pytest.raises(ProbeRejectedError) as info:
            make_ops(f=bad)
        assert info.value.report.floor_violations > 0

    def test_claims_can_be_skipped(self):
        bad = ScalarNonlinearity(lambda x, s: s, monotonicity_floor=5.0)
        assert make_ops(f=bad, check_claims=False).size == 17

    def test_reports_independent_of_threads(self):
        ops = make_ops()
        serial = monotonicity_probe(ops, "A", samples=1500, seed=11)
        threaded = monotonicity_probe(ops, "A", samples=1500, seed=11, n_jobs=4)
        assert serial == threaded

    def test_implied_modulus_for_product(self):
        f = ScalarNonlinearity(lambda x, s: s, monotonicity_floor=0.0)
        k = IntegralKernel(identity_scale=1.0, monotonicity_floor=0.0)
        report = monotonicity_probe(make_ops(f=f, k=k), "product", samples=100)
        assert report.implied_modulus == 0.0 and report.modulus_violations == 0

    def test_unknown_operator(self):
        with pytest.raises(ValueError):
            monotonicity_probe(make_ops(), "B")

    @given(st.integers(0, 2**32 - 1))
    def test_seed_determinism(self, seed):
        ops = make_ops(n=5)
        assert monotonicity_probe(ops, "K", samples=20, seed=seed) == monotonicity_probe(ops, "K", samples=20, seed=seed)
