#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace outersync;

namespace {

const Vector sec31_gains{1.0017, 0.9984};

Mode interval(int k) { return detail::sec31_modes().at(static_cast<std::size_t>(k - 1)); }

double round4(double x) { return std::round(x * 1e4) / 1e4; }

} // namespace

TEST(Norms, HandValues) {
	const Weights ones = Weights::ones(2);
	const Vector x{1.0, -2.0};
	EXPECT_DOUBLE_EQ(weighted_norm(x, ones, NormKind::L1), 3.0);
	EXPECT_DOUBLE_EQ(weighted_norm(x, ones, NormKind::L2), std::sqrt(5.0));
	EXPECT_DOUBLE_EQ(weighted_norm(x, ones, NormKind::LInf), 2.0);
	const Weights xi({2.0, 0.5});
	const Vector y{1.0, 1.0};
	EXPECT_DOUBLE_EQ(weighted_norm(y, xi, NormKind::L1), 2.5);
	EXPECT_DOUBLE_EQ(weighted_norm(y, xi, NormKind::L2), std::sqrt(2.5));
	EXPECT_DOUBLE_EQ(weighted_norm(y, xi, NormKind::LInf), 2.0);
	for (NormKind k : all_norms)
		EXPECT_EQ(weighted_norm(Vector{0.0, 0.0}, xi, k), 0.0);
}

TEST(Norms, L2SurvivesTinyValues) {
	const Vector x{1e-200, 1e-200};
	EXPECT_NEAR(weighted_norm(x, Weights::ones(2), NormKind::L2) / 1e-200, std::sqrt(2.0), 1e-12);
}

TEST(Norms, DimensionMismatch) {
	EXPECT_THROW(weighted_norm(Vector{1.0}, Weights::ones(2), NormKind::L1), DomainError);
	EXPECT_THROW(Weights({1.0, 0.0}), ValidationError);
}

TEST(Norms, AxiomsOnRandomVectors) { EXPECT_EQ(oracle::norm_axiom_violations(10000, 3), 0u); }

TEST(Mu, Section31IntervalOneL1) {
	const auto m1 = mu_vector(interval(1), sec31_gains, Weights({0.8902, 0.3562}), NormKind::L1);
	EXPECT_DOUBLE_EQ(round4(m1[0]), 0.8786);
	EXPECT_DOUBLE_EQ(round4(m1[1]), 0.2901);
	EXPECT_DOUBLE_EQ(mu_component(interval(1), sec31_gains, Weights({0.8902, 0.3562}), NormKind::L1, 1), m1[1]);
}

TEST(Mu, Section31IntervalOneL2) {
	const auto m2 = mu_vector(interval(1), sec31_gains, Weights({0.3479, 0.7727}), NormKind::L2);
	EXPECT_DOUBLE_EQ(round4(m2[0]), 0.3951);
	EXPECT_DOUBLE_EQ(round4(m2[1]), 0.6210);
}

TEST(Mu, Section31IntervalTwoL1) {
	const auto m3 = mu_vector(interval(2), sec31_gains, Weights({0.7182, 0.3570}), NormKind::L1);
	EXPECT_DOUBLE_EQ(round4(m3[0]), 1.0920);
	EXPECT_DOUBLE_EQ(round4(m3[1]), 0.0429);
}

TEST(Mu, DecoupledEqualsGamma) {
	const Mode m{{0.7, 1.3, 2.0}, Matrix(3), {0.0, 0.0, 0.0}};
	for (NormKind k : all_norms)
		EXPECT_EQ(mu_vector(m, Vector(3, 0.25), Weights({0.3, 1.0, 4.0}), k), m.gamma);
}

TEST(Mu, ScalingInvariance) { EXPECT_EQ(oracle::scaling_violations(2000, 5), 0u); }

TEST(Mu, IndexErrors) {
	EXPECT_THROW(mu_component(interval(1), sec31_gains, Weights::ones(2), NormKind::L1, 2), DomainError);
	EXPECT_THROW(mu_component(interval(1), sec31_gains, Weights::ones(3), NormKind::L1, 0), DomainError);
}

TEST(Nu, Section31) {
	EXPECT_NEAR(nu(interval(1), sec31_gains), 2.1048, 1e-12);
	EXPECT_NEAR(nu(interval(2), sec31_gains), 2.1048 + 1.0017 * 0.3253, 1e-12);
	EXPECT_DOUBLE_EQ(round4(nu(interval(2), sec31_gains)), 2.4307);
	Mode pos{{1.0, 3.0}, Matrix::from_rows({{0.5, -2.0}, {1.0, 0.0}}), {0.0, 0.0}};
	EXPECT_DOUBLE_EQ(nu(pos, Vector{1.0, 1.0}), 3.0);
}

TEST(Bounds, DecoupledSingleMode) {
	const Mode m{{0.7, 1.3, 2.0}, Matrix(3), {0.0, 0.0, 0.0}};
	for (NormKind k : all_norms) {
		const auto b = global_bounds({m}, Vector(3, 0.25), Weights::ones(3), k);
		EXPECT_DOUBLE_EQ(b.M, 2.0);
		EXPECT_DOUBLE_EQ(b.N, 2.0);
		EXPECT_DOUBLE_EQ(b.eps0, 0.7);
		EXPECT_DOUBLE_EQ(b.Lambda, 2.0);
	}
}

TEST(Bounds, TwoModeUsesWorstMode) {
	const Weights xi({0.8902, 0.3562});
	const auto b = global_bounds({interval(1), interval(2)}, sec31_gains, xi, NormKind::L1);
	double lo = 1e300;
	for (int k : {1, 2})
		for (double mu : mu_vector(interval(k), sec31_gains, xi, NormKind::L1))
			lo = std::min(lo, mu);
	EXPECT_EQ(b.eps0, lo);
	EXPECT_LT(b.eps0, 0.2901);
}

TEST(Bounds, Section6SolvedWeightsPositive) {
	const auto sys = preset_paper("sec6-5neuron").system;
	for (NormKind k : all_norms) {
		const auto r = solve_xi(sys, k, 0.03);
		ASSERT_EQ(r.status, FeasibilityStatus::feasible) << to_string(k);
		const auto b = global_bounds(sys, *r.xi, k);
		EXPECT_GE(b.eps0, 0.03 - 1e-12);
		EXPECT_NEAR(b.eps0, r.min_mu, 1e-12);
	}
}

TEST(Solve, Interval2L2InfeasibleForEveryTarget) {
	for (double eps0 : {1e-6, 0.01, 0.1}) {
		const auto r = solve_xi({interval(2)}, sec31_gains, NormKind::L2, eps0);
		EXPECT_EQ(r.status, FeasibilityStatus::infeasible) << eps0;
		EXPECT_FALSE(r.certificate.empty());
	}
}

TEST(Solve, Interval2L2DiagonalCertificate) {
	// self term of neuron 2 is 0.9234 - 0.5 * 1.0017 * 2.0341 < 0
	const auto r = solve_xi({interval(2)}, sec31_gains, NormKind::L2, 0.01);
	EXPECT_EQ(r.certificate, "diagonal");
	EXPECT_EQ(r.failing_neuron, 1u);
	EXPECT_LT(r.diagonal_margin, 0.0);
}

TEST(Solve, Interval1L1Feasible) {
	const auto r = solve_xi({interval(1)}, sec31_gains, NormKind::L1, 0.01);
	ASSERT_EQ(r.status, FeasibilityStatus::feasible);
	for (double mu : mu_vector(interval(1), sec31_gains, *r.xi, NormKind::L1))
		EXPECT_GE(mu, 0.01 - 1e-12);
}

TEST(Solve, Interval2L1AgreesWithGridSearch) {
	const Mode m = interval(2);
	double best = -1e300;
	for (int k = 0; k < 100000; ++k) {
		const double ratio = std::pow(10.0, -3.0 + 6.0 * k / 99999.0);
		const auto mu = mu_vector(m, sec31_gains, Weights({1.0, ratio}), NormKind::L1);
		best = std::max(best, std::min(mu[0], mu[1]));
	}
	ASSERT_GT(best, 0.01);
	const auto r = solve_xi({m}, sec31_gains, NormKind::L1, 0.01);
	ASSERT_EQ(r.status, FeasibilityStatus::feasible);
	EXPECT_GE(r.min_mu, 0.01 - 1e-12);
	EXPECT_LE(r.min_mu, best + 1e-6);
	const auto above = solve_xi({m}, sec31_gains, NormKind::L1, best * 1.001);
	EXPECT_EQ(above.status, FeasibilityStatus::infeasible);
	const auto below = solve_xi({m}, sec31_gains, NormKind::L1, best * 0.999);
	EXPECT_EQ(below.status, FeasibilityStatus::feasible);
}

TEST(Solve, DiagonalShortcut) {
	const auto r = solve_xi({interval(1)}, sec31_gains, NormKind::L1, 5.0);
	EXPECT_EQ(r.status, FeasibilityStatus::infeasible);
	EXPECT_EQ(r.certificate, "diagonal");
	EXPECT_THROW(solve_xi({interval(1)}, sec31_gains, NormKind::L1, 0.0), DomainError);
}

TEST(Solve, ReverificationOnRandomSystems) {
	const auto a = oracle::solver_reverification(300, 17);
	EXPECT_EQ(a.violations, 0u);
	EXPECT_GT(a.feasible, 50u);
	EXPECT_GT(a.infeasible, 50u);
}
