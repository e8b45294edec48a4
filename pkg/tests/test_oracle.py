import math

import numpy as np
import pytest
from scipy import integrate

from betatrace.oracle import (exact_correlation_integral, hermite_kernel_gue,
                              hermite_r1, hermite_rn, log_c_const,
                              log_partition_fixed_trace,
                              log_partition_unconstrained, log_psi,
                              log_psi_lower_mass, log_psi_upper_mass, n_beta,
                              psi, psi_mass_gamma, verify_bridge_equation,
                              verify_psi_central_mass, verify_psi_normalization,
                              verify_radial_concentration, verify_scaling_relation,
                              verify_tail_rate)

# frozen: log(sqrt(pi/2)) and sqrt(pi)/2
LOG_Z_1_2 = 0.22579135264472733
C_1_2 = 0.8862269254527580


class TestPartitionFunctions:
    def test_scalar_gue_against_quadrature(self):
        ref, _ = integrate.quad(lambda x: math.exp(-2.0 * x * x), -10, 10,
                                epsabs=1e-14)
        assert log_partition_unconstrained(1, 2) == pytest.approx(math.log(ref),
                                                                  abs=1e-12)
        assert log_partition_unconstrained(1, 2) == pytest.approx(LOG_Z_1_2, abs=1e-12)

    def test_n2_gue_against_mc_integration(self):
        # MC integration of the unnormalised density with a Gaussian
        # proposal: Z = E[|x1-x2|^2] * (pi/4) under x_i ~ N(0, 1/8)
        rng = np.random.default_rng(2718)
        x = rng.normal(0.0, math.sqrt(1.0 / 8.0), size=(200_000, 2))
        est = np.mean((x[:, 0] - x[:, 1]) ** 2) * (math.pi / 4.0)
        z = math.exp(log_partition_unconstrained(2, 2))
        assert z == pytest.approx(est, rel=0.02)
        # closed form for this case is pi/16
        assert z == pytest.approx(math.pi / 16.0, rel=1e-12)

    def test_monotone_in_n(self):
        vals = [log_partition_unconstrained(n, 2) for n in range(1, 8)]
        assert len(set(vals)) == len(vals)

    def test_fixed_trace_r_scaling_exact(self):
        for n, beta in ((3, 1), (4, 2), (2, 4)):
            shift = (log_partition_fixed_trace(n, beta, 2.5)
                     - log_partition_fixed_trace(n, beta, 1.0))
            assert shift == pytest.approx((n_beta(n, beta) - 1) * math.log(2.5),
                                          abs=1e-12)

    def test_fixed_trace_n2_circle_quadrature(self):
        # surface integral of |y1 - y2|^2 over the unit circle
        ref, _ = integrate.quad(
            lambda th: (math.cos(th) - math.sin(th)) ** 2, 0.0, 2.0 * math.pi)
        assert math.exp(log_partition_fixed_trace(2, 2, 1.0)) == pytest.approx(
            ref, abs=1e-6)

    @pytest.mark.parametrize("beta", [1, 2, 4])
    def test_fixed_trace_n1_two_point_surface(self, beta):
        # N = 1: the constraint sphere is two points, surface measure 2
        assert math.exp(log_partition_fixed_trace(1, beta, 0.7)) == pytest.approx(
            2.0, rel=1e-12)

    def test_polar_factorisation_ratio_mc(self):
        # Z = Z^{FT,1} * int_0^inf u^{N_beta - 1} e^{-beta N u^2} du; the
        # radial integral is Monte Carlo estimated from a uniform proposal
        n, beta = 2, 2
        nb = n_beta(n, beta)
        rng = np.random.default_rng(515)
        u = rng.uniform(0.0, 3.0, size=400_000)
        radial_mc = 3.0 * np.mean(u ** (nb - 1) * np.exp(-beta * n * u * u))
        ratio = math.exp(log_partition_fixed_trace(n, beta, 1.0)
                         - log_partition_unconstrained(n, beta))
        assert ratio == pytest.approx(1.0 / radial_mc, rel=0.02)
        # closed form of the radial integral here is 1/32
        assert ratio == pytest.approx(32.0, rel=1e-10)

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            log_partition_fixed_trace(4, 2, 0.0)


class TestCConstAndPsi:
    def test_c_const_scalar_case(self):
        assert math.exp(log_c_const(1, 2)) == pytest.approx(C_1_2, abs=1e-12)
        assert math.exp(log_c_const(1, 2)) == pytest.approx(
            math.sqrt(math.pi) / 2.0, abs=1e-12)

    def test_c_const_n2_beta1_against_normalisation(self):
        # C is exactly the normaliser making int Psi = 1
        report = verify_psi_normalization(2, 1)
        assert report["pass"]

    @pytest.mark.parametrize("beta", [1, 2, 4])
    def test_psi_normalisation_quadrature(self, beta):
        report = verify_psi_normalization(6, beta)
        assert report["pass"]
        assert abs(report["observed"] - 1.0) <= 1e-8

    def test_psi_positive_and_peaked_near_one(self):
        u = np.linspace(0.05, 2.5, 200)
        vals = psi(u, 20, 2)
        assert np.all(vals >= 0)
        assert abs(u[np.argmax(vals)] - 1.0) < 0.05

    def test_psi_rejects_nonpositive_u(self):
        with pytest.raises(ValueError):
            psi(0.0, 6, 2)

    @pytest.mark.parametrize("n,beta,cut", [(20, 2, 0.8), (50, 1, 0.9), (30, 4, 0.85)])
    def test_log_quadrature_matches_incomplete_gamma(self, n, beta, cut):
        lower = log_psi_lower_mass(n, beta, cut)
        exact = math.log(psi_mass_gamma(n, beta, 0.0, cut))
        assert lower == pytest.approx(exact, abs=1e-6)
        upper = log_psi_upper_mass(n, beta, 2.0 - cut)
        exact_up = math.log(psi_mass_gamma(n, beta, 2.0 - cut, float("inf")))
        assert upper == pytest.approx(exact_up, abs=1e-6)

    def test_tail_smallness_beta4(self):
        # alpha = 50^{-0.8}: the combined tails are below 1e-4 at beta = 4
        n = 50
        alpha = n ** -0.8
        report = verify_psi_central_mass(n, 4, alpha)
        assert report["pass"]
        assert report["tails"]["lower"] + report["tails"]["upper"] < 1e-4

    def test_central_mass_grows_with_beta(self):
        n = 50
        alpha = n ** -0.8
        masses = [verify_psi_central_mass(n, b, alpha)["observed"] for b in (1, 2, 4)]
        assert masses[0] < masses[1] < masses[2]
        assert masses[2] > 1.0 - 1e-4


class TestTrendVerifiers:
    def test_tail_rate_ratios_approach_one(self):
        report = verify_tail_rate([50, 100, 200, 400], beta=2, theta=0.8)
        devs = [abs(r - 1.0) for r in report["observed"]["ratio_lower"]]
        assert all(b < a for a, b in zip(devs, devs[1:]))
        devs_up = [abs(r - 1.0) for r in report["observed"]["ratio_upper"]]
        assert all(b < a for a, b in zip(devs_up, devs_up[1:]))

    def test_tail_rate_passes_at_lower_theta(self):
        report = verify_tail_rate([50, 100, 200, 400], beta=2, theta=0.7)
        assert report["pass"]
        assert 0.8 <= report["observed"]["ratio_lower"][-1] <= 1.2

    @pytest.mark.parametrize("theta", [0.5, 2.0 / 3.0, 1.0, 1.3])
    def test_tail_rate_theta_validation(self, theta):
        with pytest.raises(ValueError):
            verify_tail_rate([50, 100], beta=2, theta=theta)

    def test_tail_rate_nlist_validation(self):
        with pytest.raises(ValueError):
            verify_tail_rate([100, 50], beta=2, theta=0.8)

    def test_radial_concentration_closed_form(self):
        # the verifier's left side is exp(N_beta log(1-b)) analytically; the
        # power-function integral identity needs no quadrature
        report = verify_radial_concentration([100, 1000, 10000], beta=2, kappa=1.5)
        assert report["pass"]
        row = report["rows"][0]
        assert row["log_mass"] == n_beta(100, 2) * math.log1p(-row["b"])

    def test_radial_concentration_ratio_to_one(self):
        report = verify_radial_concentration([100, 1000, 10000], beta=2, kappa=1.5)
        assert abs(report["observed"]["ratio"][-1] - 1.0) < 1e-4

    @pytest.mark.parametrize("kappa", [0.0, 2.0, 2.5])
    def test_radial_concentration_kappa_validation(self, kappa):
        with pytest.raises(ValueError):
            verify_radial_concentration([10, 100], beta=2, kappa=kappa)


class TestHermiteKernel:
    def test_rank_trace(self):
        n = 6
        val, _ = integrate.quad(lambda x: float(hermite_r1(n, x)), -3.0, 3.0,
                                limit=300, epsabs=1e-10)
        assert val == pytest.approx(n, abs=1e-8)

    def test_scalar_case_closed_form(self):
        # N = 1: K_1(x, y) = sqrt(2/pi) e^{-(x^2+y^2)} and R_1 integrates to 1
        for x, y in ((0.0, 0.0), (0.3, -0.2), (1.0, 0.5)):
            expected = math.sqrt(2.0 / math.pi) * math.exp(-(x * x + y * y))
            assert hermite_kernel_gue(1, x, y) == pytest.approx(expected, rel=1e-12)
        val, _ = integrate.quad(lambda x: float(hermite_r1(1, x)), -8.0, 8.0)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_reproducing_property(self):
        n = 6
        x, y = 0.1, -0.2
        val, _ = integrate.quad(lambda z: float(hermite_kernel_gue(n, x, z)
                                                * hermite_kernel_gue(n, z, y)),
                                -3.0, 3.0, limit=300, epsabs=1e-11)
        assert val == pytest.approx(float(hermite_kernel_gue(n, x, y)), abs=1e-7)

    def test_pair_density_bounded_by_product(self):
        n = 8
        xs = np.linspace(-1.0, 1.0, 9)
        for a in xs:
            for b in xs:
                if a == b:
                    continue
                r2 = hermite_rn(n, [a, b])
                assert r2 <= float(hermite_r1(n, a) * hermite_r1(n, b)) + 1e-12

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            hermite_kernel_gue(65, 0.0, 0.0)


class TestBridgeEquation:
    def test_psi_reduction_at_arity_zero(self):
        # with R^{FT} replaced by 1 and n = 0 the right side is int Psi = 1
        assert psi_mass_gamma(6, 2, 0.0, float("inf")) == pytest.approx(1.0, abs=1e-12)

    def test_structural_lower_limit(self):
        report = verify_bridge_equation(6, xs=(0.5,), n_samples=20_000,
                                        master_seed=5, tolerance=1.0)
        assert report["rows"][0]["u_lower"] == pytest.approx(1.0 / math.sqrt(6.0))
        assert report["insufficient_mc_resolution"] is False

    def test_insufficient_resolution_flagged(self):
        # an absurdly tight tolerance must trip the stderr-budget flag
        report = verify_bridge_equation(6, xs=(0.0,), n_samples=20_000,
                                        master_seed=5, tolerance=1e-6)
        assert report["insufficient_mc_resolution"] is True

    def test_moderate_sample_run(self):
        report = verify_bridge_equation(6, xs=(0.0, 0.25), n_samples=150_000,
                                        master_seed=6, tolerance=0.04)
        assert report["pass"], report
        assert report["observed"] <= 0.04

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            verify_bridge_equation(12)


class TestScalingRelationDensity:
    def test_joint_z_scores(self):
        report = verify_scaling_relation(n_dim=20, n_samples=10_000, master_seed=41)
        assert report["pass"], report


class TestExactCorrelationIntegral:
    def test_matches_direct_quadrature_n1(self):
        from betatrace.estimators import ScalingWindow, TestFunction, spline_bump
        n = 8
        w = ScalingWindow.zero(n)
        g = spline_bump(0.0, 2.0)
        f = TestFunction((g,))
        ref, _ = integrate.quad(
            lambda t: float(g(t)) * w.jacobian * float(hermite_r1(n, w.scale(t))),
            -2.0, 2.0, limit=200, epsabs=1e-11)
        assert exact_correlation_integral(n, f, w) == pytest.approx(ref, abs=1e-8)
