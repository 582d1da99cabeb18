import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfduality import (
    DegenerateKernelAtAtom,
    FiniteMeasure,
    ModelError,
    NonFiniteIntegrand,
    SelectionKernel,
    check_master_condition,
    derive_env_measure,
    integrate,
    mean_excess,
    pgf,
    sum_distribution,
)
from wfduality.measures import INF_K

from conftest import rng


class TestPgf:
    def test_geometric_closed_form(self, geo):
        assert pgf(geo, 0.5, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-14)

    def test_binary(self, binary):
        assert pgf(binary, 0.3, 0.5) == pytest.approx(0.7 * 0.5 + 0.3 * 0.25)

    def test_neutral_environment_is_identity(self, geo, binary):
        for x in (0.0, 0.3, 1.0):
            assert pgf(geo, 0.0, x) == pytest.approx(x)
            assert pgf(binary, 0.0, x) == pytest.approx(x)

    def test_zero_at_origin(self, geo, binary):
        for y in (0.0, 0.4, 0.9):
            assert pgf(geo, y, 0.0) == 0.0
            assert pgf(binary, y, 0.0) == 0.0

    def test_one_at_one_without_infinity_atom(self, geo, binary):
        assert pgf(geo, 0.7, 1.0) == pytest.approx(1.0)
        assert pgf(binary, 1.0, 1.0) == pytest.approx(1.0)

    def test_geometric_infinity_atom(self, geo):
        # y=1 puts all mass at infinity: x^inf is 0 below 1, 1 at 1
        assert pgf(geo, 1.0, 0.99) == 0.0
        assert pgf(geo, 1.0, 1.0) == 1.0

    def test_table_infinity_atom_reduces_value_at_one(self):
        k = SelectionKernel.table({2: 0.5}, inf_mass=0.5)
        assert pgf(k, 1.0, 1.0) == pytest.approx(1.0)
        assert pgf(k, 1.0, 0.9) == pytest.approx(0.5 * 0.81)

    def test_negative_environment_is_geometric(self, binary):
        # negative y encodes a geometric kernel with parameter -y
        geo = SelectionKernel.geometric()
        for x in (0.2, 0.5, 0.9):
            assert pgf(binary, -0.3, x) == pytest.approx(pgf(geo, 0.3, x))

    def test_geometric_matches_truncated_series(self, geo):
        ys = np.linspace(0.01, 0.95, 50)
        xs = np.linspace(0.0, 0.99, 50)
        ks = np.arange(1, 4000)
        for y in ys:
            series_pmf = (1 - y) * y ** (ks - 1)
            for x in xs:
                direct = pgf(geo, y, x)
                series = float((series_pmf * x**ks).sum())
                assert direct == pytest.approx(series, abs=1e-10)

    @settings(max_examples=200, deadline=None)
    @given(
        y=st.floats(0.0, 0.99),
        x1=st.floats(0.0, 1.0),
        x2=st.floats(0.0, 1.0),
    )
    def test_monotone_in_x(self, y, x1, x2):
        geo = SelectionKernel.geometric()
        lo, hi = sorted((x1, x2))
        assert pgf(geo, y, lo) <= pgf(geo, y, hi) + 1e-12

    def test_convex_in_x(self, geo, binary):
        xs = np.linspace(0, 1, 41)
        for kernel in (geo, binary):
            for y in (0.1, 0.5, 0.9):
                vals = np.array([pgf(kernel, y, x) for x in xs])
                second = np.diff(vals, 2)
                assert (second >= -1e-10).all()


class TestMeanExcess:
    def test_geometric(self, geo):
        assert mean_excess(geo, 0.5) == pytest.approx(1.0)
        assert mean_excess(geo, 0.0) == 0.0
        assert mean_excess(geo, 1.0) == math.inf

    def test_binary(self, binary):
        assert mean_excess(binary, 0.3) == pytest.approx(0.3)

    def test_table(self):
        k = SelectionKernel.table({1: 0.5, 3: 0.5})
        # base mean 2, so excess is y * (2 - 1)
        assert mean_excess(k, 0.4) == pytest.approx(0.4)

    def test_table_infinity(self):
        k = SelectionKernel.table({2: 0.9}, inf_mass=0.1)
        assert mean_excess(k, 0.5) == math.inf
        assert mean_excess(k, 0.0) == 0.0


class TestMasterCondition:
    def test_reduces_to_total_mass(self, geo):
        lam = FiniteMeasure.point_mass(0.3, 0.5)
        assert check_master_condition(geo, lam) == pytest.approx(0.5)

    def test_atom_at_zero_rejected(self, binary):
        lam = FiniteMeasure.atomic([(0.0, 1.0), (0.5, 1.0)])
        with pytest.raises(DegenerateKernelAtAtom):
            check_master_condition(binary, lam)

    def test_degenerate_kernel_rejected(self):
        # base pmf delta_1 means every Q(y) is delta_1: zero mean excess
        k = SelectionKernel.table({1: 1.0})
        with pytest.raises(DegenerateKernelAtAtom):
            check_master_condition(k, FiniteMeasure.point_mass(0.5, 1.0))


class TestSumDistribution:
    def test_geometric_example(self, geo):
        sd = sum_distribution(geo, 0.5, 2, 2)
        assert sd.pmf == pytest.approx({2: 0.25, 3: 0.25, 4: 0.1875})
        assert sd.tail == pytest.approx(0.3125)

    def test_binary_deterministic(self, binary):
        sd = sum_distribution(binary, 1.0, 3, 3)
        assert sd.pmf == pytest.approx({6: 1.0})
        assert sd.tail == pytest.approx(0.0, abs=1e-12)

    def test_neutral(self, geo, binary):
        for kernel in (geo, binary):
            sd = sum_distribution(kernel, 0.0, 5, 3)
            assert sd.pmf == pytest.approx({5: 1.0})

    def test_geometric_matches_brute_convolution(self, geo):
        k_max = 30
        for y in np.arange(0.1, 0.95, 0.1):
            single = (1 - y) * y ** np.arange(k_max + 1)  # pmf of K-1
            for n in range(1, 11):
                acc = np.ones(1)
                for _ in range(n):
                    acc = np.convolve(acc, single)[: k_max + 1]
                sd = sum_distribution(geo, float(y), n, k_max)
                assert np.allclose(sd.probs, acc, atol=1e-12)

    def test_infinity_mass_goes_to_tail(self):
        k = SelectionKernel.table({2: 0.5}, inf_mass=0.5)
        sd = sum_distribution(k, 1.0, 1, 5)
        assert sd.tail >= 0.5


class TestFiniteMeasure:
    def test_atomic_integrate(self):
        m = FiniteMeasure.atomic([(0.5, 2.0)])
        assert integrate(m, lambda y: y) == pytest.approx(1.0)

    def test_total_mass_via_integrate(self):
        m = FiniteMeasure.atomic([(0.2, 1.0), (0.8, 1.0)])
        assert integrate(m, lambda y: 1.0) == pytest.approx(2.0)

    def test_density_quadrature(self):
        m = FiniteMeasure.from_density(lambda y: 1.0, 1.0, nodes=512)
        assert m.total_mass == pytest.approx(1.0)
        assert integrate(m, lambda y: y * y) == pytest.approx(1 / 3, abs=1e-5)

    def test_nonfinite_integrand_rejected(self):
        m = FiniteMeasure.point_mass(0.5)
        with pytest.raises(NonFiniteIntegrand):
            integrate(m, lambda y: math.inf)

    def test_invalid_weights_rejected(self):
        with pytest.raises(ModelError):
            FiniteMeasure.atomic([(0.5, -1.0)])
        with pytest.raises(ModelError):
            FiniteMeasure.atomic([(1.5, 1.0)])

    def test_sampling_frequencies(self):
        m = FiniteMeasure.atomic([(0.2, 3.0), (0.8, 1.0)])
        draws = m.sample(40000, rng(1))
        frac = (draws == 0.2).mean()
        assert frac == pytest.approx(0.75, abs=0.01)


class TestEnvMeasure:
    def test_weights_divided_by_mean_excess(self, geo):
        lam = FiniteMeasure.atomic([(0.5, 1.0), (0.25, 1.0)])
        mu = derive_env_measure(geo, lam)
        lookup = dict(zip(mu.locations, mu.weights))
        assert lookup[0.5] == pytest.approx(1.0)       # m = 1
        assert lookup[0.25] == pytest.approx(3.0)      # m = 1/3

    def test_infinite_excess_points_dropped(self, geo):
        lam = FiniteMeasure.atomic([(0.5, 1.0), (1.0, 1.0)])
        mu = derive_env_measure(geo, lam)
        assert 1.0 not in mu.locations
        assert mu.total_mass == pytest.approx(1.0)


class TestKernelSampling:
    def test_geometric_infinite_draws_marked(self, geo):
        draws = geo.sample(1.0, 10, rng(2))
        assert (draws == INF_K).all()

    def test_supports(self, geo, binary):
        g = geo.sample(0.5, 1000, rng(3))
        assert g.min() >= 1
        b = binary.sample(0.5, 1000, rng(4))
        assert set(np.unique(b)) <= {1, 2}

    def test_table_mixture(self):
        k = SelectionKernel.table({3: 1.0})
        draws = k.sample(0.25, 20000, rng(5))
        assert set(np.unique(draws)) == {1, 3}
        assert (draws == 3).mean() == pytest.approx(0.25, abs=0.01)
