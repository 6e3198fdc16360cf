#pragma once

// Plant description: switched Hopfield-type network
//
//     du_i/dt = -gamma_i(t) u_i + sum_j a_ij(t) g_j(u_j) + I_i(t)
//
// with piecewise-constant coefficients selected by a switching schedule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace outersync {

using Vector = std::vector<double>;

// Dense row-major square matrix.
class Matrix {
public:
	Matrix() = default;
	explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

	static Matrix from_rows(const std::vector<Vector>& rows) {
		Matrix m(rows.size());
		for (std::size_t i = 0; i < rows.size(); ++i) {
			if (rows[i].size() != rows.size())
				throw ValidationError("matrix must be square");
			std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * m.n_);
		}
		return m;
	}

	std::size_t size() const noexcept { return n_; }
	double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
	double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
	std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
	const std::vector<double>& data() const noexcept { return data_; }

	bool operator==(const Matrix&) const = default;

private:
	std::size_t n_ = 0;
	std::vector<double> data_;
};

inline double positive_part(double a) noexcept { return a > 0.0 ? a : 0.0; }
inline double negative_part(double a) noexcept { return a < 0.0 ? a : 0.0; }

// One constant coefficient triple (Gamma, A, I).
struct Mode {
	Vector gamma;
	Matrix A;
	Vector I;

	std::size_t size() const noexcept { return gamma.size(); }

	void validate(const std::string& path = "mode") const {
		const std::size_t n = gamma.size();
		if (n == 0)
			throw ValidationError("empty mode", path);
		if (A.size() != n)
			throw ValidationError("A has dimension " + std::to_string(A.size()) + ", expected " + std::to_string(n), path + ".A");
		if (I.size() != n)
			throw ValidationError("I has dimension " + std::to_string(I.size()) + ", expected " + std::to_string(n), path + ".I");
		for (std::size_t i = 0; i < n; ++i) {
			if (!(gamma[i] > 0.0) || !std::isfinite(gamma[i]))
				throw ValidationError("gamma must be positive and finite", path + ".gamma[" + std::to_string(i) + "]");
			if (!std::isfinite(I[i]))
				throw ValidationError("input must be finite", path + ".I[" + std::to_string(i) + "]");
			for (std::size_t j = 0; j < n; ++j)
				if (!std::isfinite(A(i, j)))
					throw ValidationError("coupling must be finite", path + ".A[" + std::to_string(i) + "][" + std::to_string(j) + "]");
		}
	}

	bool operator==(const Mode&) const = default;
};

// Piecewise-constant switching signal. Mode `mode_index[k]` is active on
// [breakpoints[k], breakpoints[k+1]) (right-continuous), the last one up to
// and including the horizon.
struct SwitchSchedule {
	std::vector<double> breakpoints;
	std::vector<std::size_t> mode_index;
	double horizon = 0.0;

	std::size_t segment_count() const noexcept { return breakpoints.size(); }

	// Index k of the segment containing t (right-continuous).
	std::size_t segment_at(double t) const {
		if (!(t >= 0.0) || t > horizon)
			throw DomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
		auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
		return static_cast<std::size_t>(it - breakpoints.begin()) - 1;
	}

	// End of segment k: the next breakpoint, or the horizon for the last one.
	double segment_end(std::size_t k) const {
		return k + 1 < breakpoints.size() ? breakpoints[k + 1] : horizon;
	}

	void validate(std::size_t n_modes, const std::string& path = "schedule") const {
		if (!(horizon > 0.0) || !std::isfinite(horizon))
			throw ValidationError("horizon must be positive", path + ".horizon");
		if (breakpoints.empty() || breakpoints.front() != 0.0)
			throw ValidationError("breakpoints must start at 0", path + ".breakpoints");
		if (breakpoints.size() != mode_index.size())
			throw ValidationError("breakpoints and mode_index differ in length", path + ".mode_index");
		for (std::size_t k = 1; k < breakpoints.size(); ++k)
			if (!(breakpoints[k] > breakpoints[k - 1]))
				throw ValidationError("breakpoints must be strictly increasing", path + ".breakpoints[" + std::to_string(k) + "]");
		if (!(breakpoints.back() < horizon))
			throw ValidationError("last breakpoint must precede the horizon", path + ".breakpoints");
		for (std::size_t k = 0; k < mode_index.size(); ++k)
			if (mode_index[k] >= n_modes)
				throw ValidationError("mode index out of range", path + ".mode_index[" + std::to_string(k) + "]");
	}

	bool operator==(const SwitchSchedule&) const = default;
};

inline SwitchSchedule constant_schedule(double horizon, std::size_t mode = 0) {
	return SwitchSchedule{{0.0}, {mode}, horizon};
}

// Breakpoints every `period`, modes visited in cyclic order.
inline SwitchSchedule periodic_schedule(double period, double horizon, std::size_t n_modes) {
	if (!(period > 0.0) || !(horizon > 0.0) || n_modes == 0)
		throw DomainError("periodic_schedule: period, horizon and n_modes must be positive");
	SwitchSchedule s;
	s.horizon = horizon;
	for (std::size_t k = 0;; ++k) {
		const double t = static_cast<double>(k) * period;
		if (t >= horizon)
			break;
		s.breakpoints.push_back(t);
		s.mode_index.push_back(k % n_modes);
	}
	return s;
}

enum class ModeSelection { uniform, cyclic };

// Switch instants of a Poisson process with rate `lambda`. At every switch
// the next mode is drawn uniformly (i.i.d., independent of the gaps) or taken
// in cyclic order. The first mode is drawn the same way at t = 0.
inline SwitchSchedule poisson_schedule(double lambda, double horizon, std::size_t n_modes, std::uint64_t seed,
                                       ModeSelection selection = ModeSelection::uniform) {
	if (!(lambda > 0.0) || !std::isfinite(lambda))
		throw DomainError("poisson_schedule: lambda must be positive");
	if (!(horizon > 0.0) || !std::isfinite(horizon))
		throw DomainError("poisson_schedule: horizon must be positive");
	if (n_modes == 0)
		throw DomainError("poisson_schedule: need at least one mode");

	std::mt19937_64 rng(seed);
	std::exponential_distribution<double> gap(lambda);
	std::uniform_int_distribution<std::size_t> pick(0, n_modes - 1);

	SwitchSchedule s;
	s.horizon = horizon;
	double t = 0.0;
	std::size_t k = 0;
	while (t < horizon) {
		s.breakpoints.push_back(t);
		s.mode_index.push_back(selection == ModeSelection::uniform ? pick(rng) : k % n_modes);
		t += gap(rng);
		++k;
	}
	return s;
}

enum class ActivationKind { sigmoid, piecewise_linear, custom_table };

inline std::string to_string(ActivationKind k) {
	switch (k) {
	case ActivationKind::sigmoid: return "sigmoid";
	case ActivationKind::piecewise_linear: return "piecewise-linear";
	case ActivationKind::custom_table: return "custom-table";
	}
	return "?";
}

// Activation g_i together with its slope bounds G_i:
//   0 <= (g_i(x) - g_i(y)) / (x - y) <= G_i.
//
// sigmoid           g(x) = 1 / (1 + e^{-x}), G = 1/4
// piecewise-linear  g_i(x) = G_i * clamp(x, lower, upper)
// custom-table      linear interpolation through (table_x, table_y[i]),
//                   constant outside the knots; G_i declared by the user
struct ActivationSpec {
	ActivationKind kind = ActivationKind::sigmoid;
	Vector gains;
	double lower = -std::numeric_limits<double>::infinity();
	double upper = std::numeric_limits<double>::infinity();
	Vector table_x;
	std::vector<Vector> table_y;

	std::size_t size() const noexcept { return gains.size(); }

	static ActivationSpec sigmoid(std::size_t n) {
		ActivationSpec s;
		s.kind = ActivationKind::sigmoid;
		s.gains.assign(n, 0.25);
		return s;
	}

	static ActivationSpec piecewise_linear(Vector slopes,
	                                       double lower = -std::numeric_limits<double>::infinity(),
	                                       double upper = std::numeric_limits<double>::infinity()) {
		ActivationSpec s;
		s.kind = ActivationKind::piecewise_linear;
		s.gains = std::move(slopes);
		s.lower = lower;
		s.upper = upper;
		for (std::size_t i = 0; i < s.gains.size(); ++i)
			if (!(s.gains[i] > 0.0))
				throw ValidationError("slope must be positive", "activation.gains[" + std::to_string(i) + "]");
		if (!(lower < upper))
			throw ValidationError("lower must be below upper", "activation");
		return s;
	}

	// Throws ValidationError if a sampled secant exceeds the declared bound.
	static ActivationSpec custom_table(Vector xs, std::vector<Vector> ys, Vector declared_gains);

	bool operator==(const ActivationSpec&) const = default;
};

namespace detail {

inline double sigmoid(double x) noexcept {
	if (x >= 0.0)
		return 1.0 / (1.0 + std::exp(-x));
	const double e = std::exp(x);
	return e / (1.0 + e);
}

// log(2 cosh z) without overflow.
inline double log_two_cosh(double z) noexcept {
	const double a = std::abs(z);
	return a + std::log1p(std::exp(-2.0 * a));
}

inline double table_eval(const Vector& xs, const Vector& ys, double x) noexcept {
	if (x <= xs.front())
		return ys.front();
	if (x >= xs.back())
		return ys.back();
	auto it = std::upper_bound(xs.begin(), xs.end(), x);
	const std::size_t k = static_cast<std::size_t>(it - xs.begin());
	const double s = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
	return ys[k - 1] + s * (ys[k] - ys[k - 1]);
}

} // namespace detail

inline double activation_eval(const ActivationSpec& spec, std::size_t i, double x) {
	if (i >= spec.size())
		throw DomainError("activation_eval: neuron index out of range");
	switch (spec.kind) {
	case ActivationKind::sigmoid:
		return detail::sigmoid(x);
	case ActivationKind::piecewise_linear:
		return spec.gains[i] * std::clamp(x, spec.lower, spec.upper);
	case ActivationKind::custom_table:
		return detail::table_eval(spec.table_x, spec.table_y[i], x);
	}
	return 0.0;
}

// g_i(x) - g_i(y) where d = x - y is supplied exactly by the caller. Keeps
// relative accuracy when the two trajectories are close, which a plain
// subtraction of activations would lose.
inline double activation_difference(const ActivationSpec& spec, std::size_t i, double x, double y, double d) {
	if (d == 0.0)
		return 0.0;
	switch (spec.kind) {
	case ActivationKind::sigmoid: {
		if (std::abs(d) > 40.0)
			return detail::sigmoid(x) - detail::sigmoid(y);
		// s(x) - s(y) = sinh(d/2) / (2 cosh(x/2) cosh(y/2))
		const double log_den = detail::log_two_cosh(0.5 * x) + detail::log_two_cosh(0.5 * y);
		return 2.0 * std::sinh(0.5 * d) * std::exp(-log_den);
	}
	case ActivationKind::piecewise_linear: {
		const bool x_in = x >= spec.lower && x <= spec.upper;
		const bool y_in = y >= spec.lower && y <= spec.upper;
		if (x_in && y_in)
			return spec.gains[i] * d;
		return spec.gains[i] * (std::clamp(x, spec.lower, spec.upper) - std::clamp(y, spec.lower, spec.upper));
	}
	case ActivationKind::custom_table: {
		const Vector& xs = spec.table_x;
		const Vector& ys = spec.table_y[i];
		auto seg = [&](double z) { return std::upper_bound(xs.begin(), xs.end(), z) - xs.begin(); };
		const auto kx = seg(x);
		if (kx == seg(y)) {
			if (kx == 0 || kx == static_cast<std::ptrdiff_t>(xs.size()))
				return 0.0;
			const auto k = static_cast<std::size_t>(kx);
			return (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]) * d;
		}
		return detail::table_eval(xs, ys, x) - detail::table_eval(xs, ys, y);
	}
	}
	return 0.0;
}

// Raw extremes, plus extremes shrunk by the rounding radius of each quotient
// (close pairs lose digits in g(x) - g(y)); bound checks use the latter.
struct SecantStats {
	double min_slope = std::numeric_limits<double>::infinity();
	double max_slope = -std::numeric_limits<double>::infinity();
	double min_certain = std::numeric_limits<double>::infinity();
	double max_certain = -std::numeric_limits<double>::infinity();
	std::size_t pairs = 0;
};

// Randomized secant scan of g_i: half of the pairs are far apart, half are
// close together so that local slopes are probed.
inline SecantStats sample_secants(const ActivationSpec& spec, std::size_t i, std::size_t pairs,
                                  std::uint64_t seed, double lo = -20.0, double hi = 20.0) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> pos(lo, hi);
	std::uniform_real_distribution<double> log_step(-8.0, 0.0);
	SecantStats st;
	for (std::size_t p = 0; p < pairs; ++p) {
		const double x = pos(rng);
		double y = (p % 2 == 0) ? pos(rng) : x + std::pow(10.0, log_step(rng)) * (p % 4 == 1 ? 1.0 : -1.0);
		if (x == y)
			continue;
		const double gx = activation_eval(spec, i, x), gy = activation_eval(spec, i, y);
		const double slope = (gx - gy) / (x - y);
		const double radius = 4.0 * std::numeric_limits<double>::epsilon() *
		                      (std::abs(gx) + std::abs(gy) + std::abs(slope) * (std::abs(x) + std::abs(y))) /
		                      std::abs(x - y);
		st.min_slope = std::min(st.min_slope, slope);
		st.max_slope = std::max(st.max_slope, slope);
		st.min_certain = std::min(st.min_certain, slope + radius);
		st.max_certain = std::max(st.max_certain, slope - radius);
		++st.pairs;
	}
	return st;
}

inline ActivationSpec ActivationSpec::custom_table(Vector xs, std::vector<Vector> ys, Vector declared_gains) {
	if (xs.size() < 2)
		throw ValidationError("table needs at least two knots", "activation.x");
	for (std::size_t k = 1; k < xs.size(); ++k)
		if (!(xs[k] > xs[k - 1]))
			throw ValidationError("knots must be strictly increasing", "activation.x[" + std::to_string(k) + "]");
	if (ys.size() != declared_gains.size())
		throw ValidationError("one table and one gain per neuron required", "activation.y");
	ActivationSpec s;
	s.kind = ActivationKind::custom_table;
	s.table_x = std::move(xs);
	s.table_y = std::move(ys);
	s.gains = std::move(declared_gains);
	const double span = s.table_x.back() - s.table_x.front();
	for (std::size_t i = 0; i < s.gains.size(); ++i) {
		const std::string path = "activation.y[" + std::to_string(i) + "]";
		if (s.table_y[i].size() != s.table_x.size())
			throw ValidationError("table length mismatch", path);
		if (!(s.gains[i] > 0.0))
			throw ValidationError("declared gain must be positive", "activation.gains[" + std::to_string(i) + "]");
		const auto st = sample_secants(s, i, 10000, 0x5eca47 + i, s.table_x.front() - 0.1 * span,
		                               s.table_x.back() + 0.1 * span);
		if (st.min_certain < -1e-12)
			throw ValidationError("activation is not monotone nondecreasing", path);
		if (st.max_certain > s.gains[i] + 1e-12)
			throw ValidationError("sampled secant slope " + std::to_string(st.max_slope) + " exceeds declared bound " +
			                          std::to_string(s.gains[i]),
			                      path);
	}
	return s;
}

inline double activation_gain_bound(const ActivationSpec& spec, std::size_t i) {
	if (i >= spec.size())
		throw DomainError("activation_gain_bound: neuron index out of range");
	return spec.gains[i];
}

struct SwitchingSystem {
	std::vector<Mode> modes;
	SwitchSchedule schedule;
	ActivationSpec activation;

	std::size_t n() const noexcept { return modes.empty() ? 0 : modes.front().size(); }
	double horizon() const noexcept { return schedule.horizon; }
	const Vector& gains() const noexcept { return activation.gains; }

	void validate() const {
		if (modes.empty())
			throw ValidationError("system has no modes", "modes");
		for (std::size_t m = 0; m < modes.size(); ++m) {
			modes[m].validate("modes[" + std::to_string(m) + "]");
			if (modes[m].size() != n())
				throw ValidationError("all modes must share the neuron count", "modes[" + std::to_string(m) + "]");
		}
		if (activation.size() != n())
			throw ValidationError("activation gains must have one entry per neuron", "activation.gains");
		schedule.validate(modes.size());
	}
};

// Mode active at time t (right-continuous at breakpoints).
inline const Mode& eval_coefficients(const SwitchingSystem& system, double t) {
	return system.modes[system.schedule.mode_index[system.schedule.segment_at(t)]];
}

// Trajectory pair at time t. The difference w = u - v is integrated directly
// so that it keeps full relative precision as the trajectories merge; v is
// derived.
struct TrajectoryState {
	double t = 0.0;
	Vector u;
	Vector w;

	Vector v() const {
		Vector out(u.size());
		for (std::size_t i = 0; i < u.size(); ++i)
			out[i] = u[i] - w[i];
		return out;
	}

	static TrajectoryState from_pair(double t, const Vector& u, const Vector& v) {
		if (u.size() != v.size())
			throw ValidationError("u0 and v0 differ in dimension");
		TrajectoryState s{t, u, Vector(u.size())};
		for (std::size_t i = 0; i < u.size(); ++i)
			s.w[i] = u[i] - v[i];
		return s;
	}
};

} // namespace outersync
