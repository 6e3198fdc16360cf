#pragma once

// Weighted norms, contraction coefficients mu_{m,j}, the expansion bound nu
// and the search for feasible weight vectors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace outersync {

enum class NormKind { L1, L2, LInf };

inline std::string to_string(NormKind k) {
	switch (k) {
	case NormKind::L1: return "l1";
	case NormKind::L2: return "l2";
	case NormKind::LInf: return "linf";
	}
	return "?";
}

inline NormKind parse_norm(const std::string& s) {
	if (s == "l1" || s == "L1") return NormKind::L1;
	if (s == "l2" || s == "L2") return NormKind::L2;
	if (s == "linf" || s == "LInf" || s == "inf" || s == "Linf") return NormKind::LInf;
	throw ValidationError("unknown norm '" + s + "' (expected l1, l2 or linf)", "norm");
}

inline constexpr NormKind all_norms[] = {NormKind::L1, NormKind::L2, NormKind::LInf};

// Strictly positive per-neuron weights.
class Weights {
public:
	Weights() = default;
	explicit Weights(Vector xi) : xi_(std::move(xi)) {
		if (xi_.empty())
			throw ValidationError("weights must be non-empty", "xi");
		for (std::size_t i = 0; i < xi_.size(); ++i)
			if (!(xi_[i] > 0.0) || !std::isfinite(xi_[i]))
				throw ValidationError("weights must be strictly positive", "xi[" + std::to_string(i) + "]");
	}
	static Weights ones(std::size_t n) { return Weights(Vector(n, 1.0)); }

	std::size_t size() const noexcept { return xi_.size(); }
	double operator[](std::size_t i) const noexcept { return xi_[i]; }
	const Vector& values() const noexcept { return xi_; }

	Weights scaled(double c) const {
		Vector out = xi_;
		for (double& x : out)
			x *= c;
		return Weights(std::move(out));
	}
	Weights normalized() const {
		double s = 0.0;
		for (double x : xi_)
			s += x;
		return scaled(1.0 / s);
	}

private:
	Vector xi_;
};

// l1: sum xi_i |x_i|;  l2: (sum xi_i x_i^2)^{1/2};  linf: max_i |x_i| / xi_i
inline double weighted_norm(std::span<const double> x, const Weights& xi, NormKind kind) {
	if (x.size() != xi.size())
		throw DomainError("weighted_norm: dimension mismatch (" + std::to_string(x.size()) + " vs " +
		                  std::to_string(xi.size()) + ")");
	double acc = 0.0;
	switch (kind) {
	case NormKind::L1:
		for (std::size_t i = 0; i < x.size(); ++i)
			acc += xi[i] * std::abs(x[i]);
		return acc;
	case NormKind::L2: {
		// scaled sum of squares, avoids underflow for tiny differences
		double scale = 0.0;
		for (double v : x)
			scale = std::max(scale, std::abs(v));
		if (scale == 0.0)
			return 0.0;
		for (std::size_t i = 0; i < x.size(); ++i) {
			const double r = x[i] / scale;
			acc += xi[i] * r * r;
		}
		return scale * std::sqrt(acc);
	}
	case NormKind::LInf:
		for (std::size_t i = 0; i < x.size(); ++i)
			acc = std::max(acc, std::abs(x[i]) / xi[i]);
		return acc;
	}
	return acc;
}

// Every mu_{m,j} splits into a weight-free self term and nonnegative
// weight-free coupling coefficients:
//
//     mu_{m,j}(xi) = self_j - sum_{i != j} coupling(j, i) * xi_i / xi_j
//
//   l1:   self_j = g_j - G_j a_jj^+                       coupling(j,i) = G_j |a_ij|
//   l2:   self_j = g_j - G_j a_jj^+ - 1/2 sum G_i |a_ji|  coupling(j,i) = G_j |a_ij| / 2
//   linf: self_j = g_j - G_j a_jj^+                       coupling(j,i) = G_j |a_ji|
//
// (g = gamma.) The same split drives the decentralized structure rules: the
// self term is integrated from the neuron's own last trigger and each
// coupling term from the corresponding neighbour's last trigger.
struct MuSplit {
	Vector self;
	Matrix coupling;
};

inline MuSplit mu_split(const Mode& mode, std::span<const double> gains, NormKind kind) {
	const std::size_t n = mode.size();
	if (gains.size() != n)
		throw DomainError("mu_split: gains dimension mismatch");
	MuSplit s{Vector(n), Matrix(n)};
	for (std::size_t j = 0; j < n; ++j) {
		double self = mode.gamma[j] - gains[j] * positive_part(mode.A(j, j));
		for (std::size_t i = 0; i < n; ++i) {
			if (i == j)
				continue;
			switch (kind) {
			case NormKind::L1:
				s.coupling(j, i) = gains[j] * std::abs(mode.A(i, j));
				break;
			case NormKind::L2:
				self -= 0.5 * gains[i] * std::abs(mode.A(j, i));
				s.coupling(j, i) = 0.5 * gains[j] * std::abs(mode.A(i, j));
				break;
			case NormKind::LInf:
				s.coupling(j, i) = gains[j] * std::abs(mode.A(j, i));
				break;
			}
		}
		s.self[j] = self;
	}
	return s;
}

inline double mu_from_split(const MuSplit& s, const Weights& xi, std::size_t j) {
	double mu = s.self[j];
	for (std::size_t i = 0; i < s.self.size(); ++i)
		if (i != j)
			mu -= s.coupling(j, i) * (xi[i] / xi[j]);
	return mu;
}

inline double mu_component(const Mode& mode, std::span<const double> gains, const Weights& xi, NormKind kind,
                           std::size_t j) {
	if (j >= mode.size())
		throw DomainError("mu_component: neuron index out of range");
	if (xi.size() != mode.size())
		throw DomainError("mu_component: weights dimension mismatch");
	return mu_from_split(mu_split(mode, gains, kind), xi, j);
}

inline Vector mu_vector(const Mode& mode, std::span<const double> gains, const Weights& xi, NormKind kind) {
	const MuSplit s = mu_split(mode, gains, kind);
	Vector out(mode.size());
	for (std::size_t j = 0; j < out.size(); ++j)
		out[j] = mu_from_split(s, xi, j);
	return out;
}

// Error amplification coefficient: mu with the diagonal and coupling terms
// counted positively.
inline Vector amplification_vector(const Mode& mode, std::span<const double> gains, const Weights& xi, NormKind kind) {
	const MuSplit s = mu_split(mode, gains, kind);
	Vector out(mode.size());
	for (std::size_t j = 0; j < out.size(); ++j) {
		double lam = 2.0 * mode.gamma[j] - s.self[j];
		for (std::size_t i = 0; i < out.size(); ++i)
			if (i != j)
				lam += s.coupling(j, i) * (xi[i] / xi[j]);
		out[j] = lam;
	}
	return out;
}

// nu = max_j { gamma_j - G_j (a_jj)^- }
inline double nu(const Mode& mode, std::span<const double> gains) {
	double out = -std::numeric_limits<double>::infinity();
	for (std::size_t j = 0; j < mode.size(); ++j)
		out = std::max(out, mode.gamma[j] - gains[j] * negative_part(mode.A(j, j)));
	return out;
}

struct BoundSet {
	NormKind kind = NormKind::L1;
	double M = 0.0;      // sup nu
	double N = 0.0;      // sup mu_{m,j}
	double Lambda = 0.0; // sup amplification coefficient
	double eps0 = 0.0;   // inf mu_{m,j}
	bool condition_holds() const noexcept { return eps0 > 0.0; }
};

// Exact maxima/minima over the finite mode set. Modes that the schedule never
// visits are included as well.
inline BoundSet global_bounds(const std::vector<Mode>& modes, std::span<const double> gains, const Weights& xi,
                              NormKind kind) {
	BoundSet b;
	b.kind = kind;
	b.M = -std::numeric_limits<double>::infinity();
	b.N = -std::numeric_limits<double>::infinity();
	b.Lambda = -std::numeric_limits<double>::infinity();
	b.eps0 = std::numeric_limits<double>::infinity();
	for (const Mode& m : modes) {
		b.M = std::max(b.M, nu(m, gains));
		for (double mu : mu_vector(m, gains, xi, kind)) {
			b.N = std::max(b.N, mu);
			b.eps0 = std::min(b.eps0, mu);
		}
		for (double lam : amplification_vector(m, gains, xi, kind))
			b.Lambda = std::max(b.Lambda, lam);
	}
	return b;
}

inline BoundSet global_bounds(const SwitchingSystem& system, const Weights& xi, NormKind kind) {
	return global_bounds(system.modes, system.gains(), xi, kind);
}

// ---------------------------------------------------------------------------
// Feasibility of  mu_{m,j}(xi, mode) >= eps0  for all modes and j.
//
// Per mode the condition reads (self_j - eps0) xi_j >= sum_i coupling(j,i) xi_i,
// i.e. xi >= F(xi) with the monotone, positively homogeneous map
//
//     F(xi)_j = max_modes sum_i coupling(j,i) xi_i / (self_j - eps0).
//
// For a single mode F is linear and this is the classical Perron test. The
// Collatz-Wielandt ratios of any positive xi bracket the cone spectral
// radius: max_j F(xi)_j/xi_j < 1 exhibits a feasible xi, and
// min_j F(xi)_j/xi_j > 1 proves that none exists. Power iteration on the
// (slightly perturbed, shifted) map tightens both bounds.
// ---------------------------------------------------------------------------

enum class FeasibilityStatus { feasible, infeasible, undecided };

inline std::string to_string(FeasibilityStatus s) {
	switch (s) {
	case FeasibilityStatus::feasible: return "feasible";
	case FeasibilityStatus::infeasible: return "infeasible";
	case FeasibilityStatus::undecided: return "undecided";
	}
	return "?";
}

struct FeasibilityResult {
	NormKind kind = NormKind::L1;
	double eps0_target = 0.0;
	FeasibilityStatus status = FeasibilityStatus::undecided;
	std::optional<Weights> xi;
	// "diagonal": some self_j - eps0 <= 0 in some mode, no weights can help.
	// "perron": lower Collatz-Wielandt bound exceeded 1.
	std::string certificate;
	double perron_lower = 0.0;
	double perron_upper = std::numeric_limits<double>::infinity();
	std::size_t failing_mode = 0;
	std::size_t failing_neuron = 0;
	double diagonal_margin = 0.0; // min over modes, j of self_j - eps0
	double min_mu = -std::numeric_limits<double>::infinity(); // re-verified, feasible case
	std::size_t iterations = 0;
	std::vector<Vector> residuals; // per mode: mu_{m,j}(xi) - eps0 of the returned/best candidate
};

struct SolveOptions {
	std::size_t max_iterations = 100000;
	double tolerance = 1e-13;
	double perturbation = 1e-12; // keeps the iteration primitive
	double verify_tol = 1e-12;
};

inline FeasibilityResult solve_xi(const std::vector<Mode>& modes, std::span<const double> gains, NormKind kind,
                                  double eps0_target, const SolveOptions& opt = {}) {
	if (!(eps0_target > 0.0))
		throw DomainError("solve_xi: eps0_target must be positive");
	if (modes.empty())
		throw DomainError("solve_xi: no modes");
	const std::size_t n = modes.front().size();

	FeasibilityResult r;
	r.kind = kind;
	r.eps0_target = eps0_target;

	std::vector<MuSplit> splits;
	splits.reserve(modes.size());
	for (const Mode& m : modes)
		splits.push_back(mu_split(m, gains, kind));

	r.diagonal_margin = std::numeric_limits<double>::infinity();
	for (std::size_t m = 0; m < splits.size(); ++m)
		for (std::size_t j = 0; j < n; ++j) {
			const double d = splits[m].self[j] - eps0_target;
			if (d < r.diagonal_margin) {
				r.diagonal_margin = d;
				r.failing_mode = m;
				r.failing_neuron = j;
			}
		}

	auto residuals_for = [&](const Weights& xi) {
		std::vector<Vector> res;
		for (const MuSplit& s : splits) {
			Vector row(n);
			for (std::size_t j = 0; j < n; ++j)
				row[j] = mu_from_split(s, xi, j) - eps0_target;
			res.push_back(std::move(row));
		}
		return res;
	};

	if (r.diagonal_margin <= 0.0) {
		r.status = FeasibilityStatus::infeasible;
		r.certificate = "diagonal";
		r.perron_lower = std::numeric_limits<double>::infinity();
		r.residuals = residuals_for(Weights::ones(n));
		return r;
	}

	// F(x)_j = max_m sum_i coupling_m(j,i) x_i / (self_m,j - eps0)
	auto apply = [&](const Vector& x, double perturb) {
		double total = 0.0;
		for (double v : x)
			total += v;
		Vector y(n, 0.0);
		for (const MuSplit& s : splits)
			for (std::size_t j = 0; j < n; ++j) {
				double acc = 0.0;
				for (std::size_t i = 0; i < n; ++i)
					if (i != j)
						acc += s.coupling(j, i) * x[i];
				y[j] = std::max(y[j], acc / (s.self[j] - eps0_target));
			}
		for (double& v : y)
			v += perturb * total;
		return y;
	};

	Vector x(n, 1.0 / static_cast<double>(n));
	Vector best_x = x;
	double best_upper = std::numeric_limits<double>::infinity();
	for (std::size_t it = 0; it < opt.max_iterations; ++it) {
		r.iterations = it + 1;
		const Vector fx = apply(x, 0.0);
		double lower = std::numeric_limits<double>::infinity();
		double upper = 0.0;
		for (std::size_t j = 0; j < n; ++j) {
			lower = std::min(lower, fx[j] / x[j]);
			upper = std::max(upper, fx[j] / x[j]);
		}
		r.perron_lower = std::max(r.perron_lower, lower);
		if (upper < best_upper) {
			best_upper = upper;
			best_x = x;
		}
		r.perron_upper = best_upper;
		if (upper < 1.0) {
			const Weights xi(x);
			r.residuals = residuals_for(xi);
			double min_mu = std::numeric_limits<double>::infinity();
			for (const Vector& row : r.residuals)
				for (double v : row)
					min_mu = std::min(min_mu, v + eps0_target);
			if (min_mu >= eps0_target - opt.verify_tol) {
				r.status = FeasibilityStatus::feasible;
				r.xi = xi;
				r.min_mu = min_mu;
				return r;
			}
		}
		if (lower > 1.0) {
			r.status = FeasibilityStatus::infeasible;
			r.certificate = "perron";
			r.residuals = residuals_for(Weights(x));
			return r;
		}
		// shifted, perturbed power step; sum-normalized
		Vector next = apply(x, opt.perturbation);
		double sum = 0.0;
		for (std::size_t j = 0; j < n; ++j) {
			next[j] += x[j];
			sum += next[j];
		}
		double diff = 0.0;
		for (std::size_t j = 0; j < n; ++j) {
			next[j] /= sum;
			diff = std::max(diff, std::abs(next[j] - x[j]));
		}
		x = std::move(next);
		if (diff < opt.tolerance)
			break;
	}
	r.status = FeasibilityStatus::undecided;
	r.residuals = residuals_for(Weights(best_x));
	r.xi = Weights(best_x);
	return r;
}

inline FeasibilityResult solve_xi(const SwitchingSystem& system, NormKind kind, double eps0_target,
                                  const SolveOptions& opt = {}) {
	return solve_xi(system.modes, system.gains(), kind, eps0_target, opt);
}

} // namespace outersync
