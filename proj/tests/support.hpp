#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <outersync/outersync.hpp>

namespace oracle {

using namespace outersync;

inline Mode random_mode(std::mt19937_64& rng, std::size_t n, double gamma_lo = 0.5, double gamma_hi = 2.0,
                        double coupling = 1.0) {
	std::uniform_real_distribution<double> g(gamma_lo, gamma_hi), a(-coupling, coupling), in(-1.0, 1.0);
	Mode m{Vector(n), Matrix(n), Vector(n)};
	for (std::size_t i = 0; i < n; ++i) {
		m.gamma[i] = g(rng);
		m.I[i] = in(rng);
		for (std::size_t j = 0; j < n; ++j)
			m.A(i, j) = a(rng);
	}
	return m;
}

// Strongly self-damped modes: every mu stays above 1 for weights in [0.5, 1.5].
inline Mode damped_mode(std::mt19937_64& rng, std::size_t n) {
	Mode m = random_mode(rng, n, 2.0, 3.0, 1.0);
	std::uniform_real_distribution<double> off(-0.3, 0.3);
	for (std::size_t i = 0; i < n; ++i)
		for (std::size_t j = 0; j < n; ++j)
			if (i != j)
				m.A(i, j) = off(rng);
	return m;
}

inline Weights random_weights(std::mt19937_64& rng, std::size_t n, double lo = 0.5, double hi = 1.5) {
	std::uniform_real_distribution<double> d(lo, hi);
	Vector xi(n);
	for (auto& x : xi)
		x = d(rng);
	return Weights(xi);
}

// Classical four-stage Runge-Kutta of du/dt = f(u) for both trajectories,
// with the right-hand side built from the held samples directly.
inline std::pair<Vector, Vector> rk4(const Mode& mode, const ActivationSpec& act, const Vector& held_u,
                                     const Vector& held_v, Vector u, Vector v, double duration, double step) {
	const std::size_t n = u.size();
	auto rhs = [&](const Vector& held, const Vector&) {
		Vector out(n);
		for (std::size_t i = 0; i < n; ++i) {
			double s = -mode.gamma[i] * held[i] + mode.I[i];
			for (std::size_t j = 0; j < n; ++j)
				s += mode.A(i, j) * activation_eval(act, j, held[j]);
			out[i] = s;
		}
		return out;
	};
	auto stage = [&](Vector& x, const Vector& held, double h) {
		const Vector k1 = rhs(held, x);
		Vector tmp(n);
		for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
		const Vector k2 = rhs(held, tmp);
		for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
		const Vector k3 = rhs(held, tmp);
		for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
		const Vector k4 = rhs(held, tmp);
		for (std::size_t i = 0; i < n; ++i)
			x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
	};
	const auto steps = static_cast<std::size_t>(std::llround(duration / step));
	const double h = duration / static_cast<double>(steps);
	for (std::size_t s = 0; s < steps; ++s) {
		stage(u, held_u, h);
		stage(v, held_v, h);
	}
	return {u, v};
}

// Max-abs deviation of hold_integrate from RK4 (step 1e-5) on `cases` random
// held segments of length 0.1.
inline double hold_integrate_worst(std::size_t cases, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> x(-1.0, 1.0);
	const auto act = ActivationSpec::sigmoid(5);
	double worst = 0.0;
	for (std::size_t c = 0; c < cases; ++c) {
		const Mode mode = random_mode(rng, 5);
		Vector hu(5), hv(5), u(5), v(5);
		for (std::size_t i = 0; i < 5; ++i) {
			hu[i] = x(rng), hv[i] = x(rng);
			u[i] = hu[i] + 0.1 * x(rng), v[i] = hv[i] + 0.1 * x(rng);
		}
		const double t0 = 2.0;
		HeldSamples held{Vector(5, 1.5), hu, Vector(5)};
		for (std::size_t i = 0; i < 5; ++i)
			held.w[i] = hu[i] - hv[i];
		const auto start = TrajectoryState::from_pair(t0, u, v);
		const auto exact = hold_integrate(start, held, mode, act, t0, t0 + 0.1);
		const auto [ru, rv] = rk4(mode, act, hu, hv, u, v, 0.1, 1e-5);
		const Vector ev = exact.v();
		for (std::size_t i = 0; i < 5; ++i)
			worst = std::max({worst, std::abs(exact.u[i] - ru[i]), std::abs(ev[i] - rv[i])});
	}
	return worst;
}

// Integral of rate[mode(s)][j] over [a, b] by walking the schedule.
inline double schedule_integral(const SwitchSchedule& sched, const std::vector<Vector>& rate, std::size_t j, double a,
                                double b) {
	double acc = 0.0;
	for (std::size_t k = 0; k < sched.segment_count(); ++k) {
		const double lo = std::max(a, sched.breakpoints[k]);
		const double hi = std::min(b, sched.segment_end(k));
		if (hi > lo)
			acc += rate[sched.mode_index[k]][j] * (hi - lo);
	}
	return acc;
}

// First up-crossing of f = level after t0: dense sampling with `step`, then
// plain bisection down to 1e-13.
template <class F>
double dense_crossing(F&& f, double t0, double t_end, double level, double step) {
	double lo = t0;
	for (double hi = t0 + step;; hi += step) {
		hi = std::min(hi, t_end);
		if (f(hi) >= level) {
			while (hi - lo > 1e-13) {
				const double mid = 0.5 * (lo + hi);
				if (f(mid) >= level)
					hi = mid;
				else
					lo = mid;
			}
			return hi;
		}
		if (hi >= t_end)
			return std::numeric_limits<double>::infinity();
		lo = hi;
	}
}

struct StructureCase {
	SwitchingSystem system;
	Weights xi;
	double t_start = 0.0;
};

inline StructureCase random_structure_case(std::mt19937_64& rng, std::size_t n) {
	StructureCase c;
	const std::size_t modes = 1 + rng() % 3;
	for (std::size_t m = 0; m < modes; ++m)
		c.system.modes.push_back(damped_mode(rng, n));
	c.system.activation = ActivationSpec::sigmoid(n);
	c.system.schedule = poisson_schedule(20.0, 5.0, modes, rng());
	c.xi = random_weights(rng, n);
	c.t_start = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
	return c;
}

// Largest |closed form - dense bisection| of the next centralized-structure
// trigger over random cases.
inline double centralized_trigger_worst(std::size_t cases, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	double worst = 0.0;
	for (std::size_t c = 0; c < cases; ++c) {
		const std::size_t n = 1 + rng() % 4;
		const auto sc = random_structure_case(rng, n);
		TriggerRule rule;
		rule.eps_c = std::uniform_real_distribution<double>(0.005, 0.2)(rng);
		rule.norm = all_norms[rng() % 3];
		std::vector<Vector> mu;
		for (const auto& m : sc.system.modes)
			mu.push_back(mu_vector(m, sc.system.gains(), sc.xi, rule.norm));
		const auto next = next_trigger_centralized_structure(rule, sc.xi, sc.system, sc.t_start);
		auto f = [&](double t) {
			double m = std::numeric_limits<double>::infinity();
			for (std::size_t j = 0; j < n; ++j)
				m = std::min(m, schedule_integral(sc.system.schedule, mu, j, sc.t_start, t));
			return m;
		};
		const double ref = dense_crossing(f, sc.t_start, sc.system.horizon(), rule.eps_c, 1e-3);
		if (!next.triggered) {
			if (std::isfinite(ref))
				return std::numeric_limits<double>::infinity();
			continue;
		}
		worst = std::max(worst, std::abs(next.time - ref));
	}
	return worst;
}

// Push-based structure rule: the incrementally maintained monitor, stepped
// over the schedule in closed form, against bisection on D_j evaluated from
// scratch.
inline double decentralized_trigger_worst(std::size_t cases, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	double worst = 0.0;
	for (std::size_t c = 0; c < cases; ++c) {
		const std::size_t n = 2 + rng() % 3;
		const auto sc = random_structure_case(rng, n);
		const auto kind = all_norms[rng() % 3];
		const double eps = std::uniform_real_distribution<double>(0.01, 0.3)(rng);
		const auto splits = mode_splits(sc.system, kind);
		const std::size_t j = rng() % n;

		// last sample times of every neuron, all before t_start
		Vector last(n);
		std::uniform_real_distribution<double> back(0.0, 1.0);
		for (auto& l : last)
			l = std::max(0.0, sc.t_start - back(rng));
		last[j] = sc.t_start;

		// replay: advance the monitor to t_start, resetting at each sample
		DecentralizedStructureMonitor mon(sc.xi, n);
		std::vector<std::size_t> order(n);
		for (std::size_t i = 0; i < n; ++i)
			order[i] = i;
		std::sort(order.begin(), order.end(), [&](auto a, auto b) { return last[a] < last[b]; });
		const auto& sched = sc.system.schedule;
		auto advance_to = [&](double& t, double target) {
			while (t < target) {
				const std::size_t k = sched.segment_at(t);
				const double end = std::min(target, sched.segment_end(k));
				mon.advance(splits[sched.mode_index[k]], end - t);
				t = end;
			}
		};
		double t = 0.0;
		for (std::size_t i : order) {
			advance_to(t, last[i]);
			mon.on_trigger(i);
		}
		advance_to(t, sc.t_start);

		double closed = std::numeric_limits<double>::infinity();
		while (t < sched.horizon) {
			const std::size_t k = sched.segment_at(t);
			const double end = sched.segment_end(k);
			const double dt = mon.time_to(splits[sched.mode_index[k]], j, eps);
			if (t + dt <= end) {
				closed = t + dt;
				break;
			}
			mon.advance(splits[sched.mode_index[k]], end - t);
			t = end;
		}

		auto f = [&](double s) {
			return decentralized_structure_value(sc.system, splits, sc.xi, j, s, last[j], last);
		};
		const double ref = dense_crossing(f, sc.t_start, sched.horizon, eps, 1e-3);
		if (std::isfinite(closed) != std::isfinite(ref))
			return std::numeric_limits<double>::infinity();
		if (std::isfinite(ref))
			worst = std::max(worst, std::abs(closed - ref));
	}
	return worst;
}

// ---------------------------------------------------------------------------
// Property suites. Each returns the number of violations.
// ---------------------------------------------------------------------------

inline std::size_t norm_axiom_violations(std::size_t samples, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> x(-10.0, 10.0), c(-5.0, 5.0);
	std::size_t bad = 0;
	for (std::size_t s = 0; s < samples; ++s) {
		const std::size_t n = 1 + rng() % 8;
		const Weights xi = random_weights(rng, n, 0.01, 10.0);
		Vector a(n), b(n), sum(n), scaled(n);
		const double k = c(rng);
		for (std::size_t i = 0; i < n; ++i) {
			a[i] = x(rng), b[i] = x(rng);
			sum[i] = a[i] + b[i];
			scaled[i] = k * a[i];
		}
		for (NormKind kind : all_norms) {
			const double na = weighted_norm(a, xi, kind), nb = weighted_norm(b, xi, kind);
			if (!(na > 0.0)) ++bad; // a is nonzero almost surely
			if (weighted_norm(Vector(n, 0.0), xi, kind) != 0.0) ++bad;
			if (std::abs(weighted_norm(scaled, xi, kind) - std::abs(k) * na) > 1e-12 * std::max(1.0, std::abs(k) * na)) ++bad;
			if (weighted_norm(sum, xi, kind) > (na + nb) * (1.0 + 1e-12)) ++bad;
		}
	}
	return bad;
}

// mu is a function of the weight ratios only. Scaling by powers of two is
// exact in floating point, so the comparison is exact.
inline std::size_t scaling_violations(std::size_t samples, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	std::size_t bad = 0;
	for (std::size_t s = 0; s < samples; ++s) {
		const std::size_t n = 1 + rng() % 6;
		const Mode m = random_mode(rng, n);
		const Vector gains(n, 0.25);
		const Weights xi = random_weights(rng, n, 0.1, 10.0);
		const double c = std::ldexp(1.0, static_cast<int>(rng() % 41) - 20);
		for (NormKind kind : all_norms)
			if (mu_vector(m, gains, xi, kind) != mu_vector(m, gains, xi.scaled(c), kind))
				++bad;
	}
	return bad;
}

struct SolverAudit {
	std::size_t feasible = 0;
	std::size_t infeasible = 0;
	std::size_t undecided = 0;
	std::size_t violations = 0; // feasible outputs with min mu < eps0 - 1e-12
};

inline SolverAudit solver_reverification(std::size_t samples, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	SolverAudit a;
	for (std::size_t s = 0; s < samples; ++s) {
		const std::size_t n = 2 + rng() % 5;
		const std::size_t modes = 1 + rng() % 4;
		std::vector<Mode> ms;
		const double coupling = std::uniform_real_distribution<double>(0.2, 3.0)(rng);
		for (std::size_t m = 0; m < modes; ++m)
			ms.push_back(random_mode(rng, n, 0.5, 2.5, coupling));
		const Vector gains(n, 0.25 + 0.75 * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
		const double eps0 = std::uniform_real_distribution<double>(1e-4, 0.5)(rng);
		for (NormKind kind : all_norms) {
			const auto r = solve_xi(ms, gains, kind, eps0);
			if (r.status == FeasibilityStatus::feasible) {
				++a.feasible;
				for (const auto& m : ms)
					for (double mu : mu_vector(m, gains, *r.xi, kind))
						if (mu < eps0 - 1e-12)
							++a.violations;
			} else if (r.status == FeasibilityStatus::infeasible) {
				++a.infeasible;
			} else {
				++a.undecided;
			}
		}
	}
	return a;
}

// Secant slopes of every activation kind over `pairs` random pairs; counts
// slopes outside [0, G_i + 1e-12].
inline std::size_t secant_violations(std::size_t pairs, std::uint64_t seed) {
	std::vector<ActivationSpec> specs{
		ActivationSpec::sigmoid(3),
		ActivationSpec::piecewise_linear({1.0017, 0.9984}),
		ActivationSpec::piecewise_linear({0.3}),
		ActivationSpec::piecewise_linear({2.0, 0.5}, -1.0, 1.0),
		ActivationSpec::custom_table({-2.0, -1.0, 0.0, 1.0, 2.0}, {{-1.0, -0.5, 0.0, 0.5, 1.0}, {0.0, 0.0, 0.2, 0.9, 1.0}},
		                             {0.5, 0.7}),
	};
	std::size_t bad = 0;
	std::uint64_t s = seed;
	for (const auto& spec : specs)
		for (std::size_t i = 0; i < spec.size(); ++i) {
			const auto st = sample_secants(spec, i, pairs, s++);
			if (st.pairs < pairs * 9 / 10 || st.min_certain < -1e-12 || st.max_certain > spec.gains[i] + 1e-12)
				++bad;
		}
	return bad;
}

} // namespace oracle
