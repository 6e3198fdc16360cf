#pragma once

// Event-driven integration of the sampled-data pair.
//
// With coefficients constant on a switching segment and samples held, the
// right-hand side of every neuron is constant, so the state is affine in t
// between consecutive events and can be advanced exactly. Events are mode
// switches and trigger instants; structure-rule instants come in closed form,
// state-rule instants are located on a monitoring grid and refined by
// bisection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "trace.hpp"
#include "triggers.hpp"

namespace outersync {

struct IntegratorConfig {
	double micro_step = 1e-3;
	double crossing_tol = 1e-10;
	bool oracle_mode = false;
	double snapshot_interval = 0.1;
	bool allow_invalid_rule = false;

	void validate() const {
		if (!(crossing_tol > 0.0)) throw ValidationError("crossing_tol must be positive", "integrator.crossing_tol");
		if (!(micro_step > crossing_tol)) throw ValidationError("micro_step must exceed crossing_tol", "integrator.micro_step");
		if (!(snapshot_interval > 0.0)) throw ValidationError("snapshot_interval must be positive", "integrator.snapshot_interval");
	}
};

// Samples frozen at the last trigger of each neuron. Centralized rules keep
// all sample times equal.
struct HeldSamples {
	Vector sample_time;
	Vector u;
	Vector w;

	static HeldSamples sample_all(const TrajectoryState& s) {
		return HeldSamples{Vector(s.u.size(), s.t), s.u, s.w};
	}
	void resample(const TrajectoryState& s, std::size_t i) {
		sample_time[i] = s.t;
		u[i] = s.u[i];
		w[i] = s.w[i];
	}
	void resample_all(const TrajectoryState& s) { *this = sample_all(s); }
};

// Constant derivatives of u and w while `held` and `mode` stay fixed:
//   du_i = -gamma_i u_i(held) + sum_j a_ij g_j(u_j(held)) + I_i
//   dw_i = -gamma_i w_i(held) + sum_j a_ij [g_j(u_j(held)) - g_j(v_j(held))]
struct HeldRates {
	Vector du;
	Vector dw;
};

inline HeldRates held_rates(const Mode& mode, const ActivationSpec& act, const HeldSamples& held) {
	const std::size_t n = mode.size();
	Vector gu(n), dg(n);
	for (std::size_t j = 0; j < n; ++j) {
		gu[j] = activation_eval(act, j, held.u[j]);
		dg[j] = activation_difference(act, j, held.u[j], held.u[j] - held.w[j], held.w[j]);
	}
	HeldRates r{Vector(n), Vector(n)};
	for (std::size_t i = 0; i < n; ++i) {
		double du = -mode.gamma[i] * held.u[i] + mode.I[i];
		double dw = -mode.gamma[i] * held.w[i];
		for (std::size_t j = 0; j < n; ++j) {
			du += mode.A(i, j) * gu[j];
			dw += mode.A(i, j) * dg[j];
		}
		r.du[i] = du;
		r.dw[i] = dw;
	}
	return r;
}

// Exact advance over [t_from, t_to] with held samples and a single mode.
inline TrajectoryState hold_integrate(const TrajectoryState& state, const HeldSamples& held, const Mode& mode,
                                      const ActivationSpec& act, double t_from, double t_to) {
	if (t_to < t_from)
		throw ContractViolation("hold_integrate: t_to precedes t_from");
	for (double ts : held.sample_time)
		if (ts > t_from)
			throw ContractViolation("hold_integrate: sample time after t_from");
	TrajectoryState out = state;
	out.t = t_to;
	const double dt = t_to - t_from;
	if (dt == 0.0)
		return out;
	const HeldRates r = held_rates(mode, act, held);
	for (std::size_t i = 0; i < out.u.size(); ++i) {
		out.u[i] += r.du[i] * dt;
		out.w[i] += r.dw[i] * dt;
	}
	return out;
}

// As above, taking the mode from the system; the interval must lie inside a
// single switching segment.
inline TrajectoryState hold_integrate(const SwitchingSystem& system, const TrajectoryState& state,
                                      const HeldSamples& held, double t_from, double t_to) {
	const auto& sched = system.schedule;
	const std::size_t k = sched.segment_at(t_from);
	if (t_to > sched.segment_end(k))
		throw ContractViolation("hold_integrate: interval straddles the breakpoint at " +
		                        std::to_string(sched.segment_end(k)));
	return hold_integrate(state, held, system.modes[sched.mode_index[k]], system.activation, t_from, t_to);
}

// Bisection for the crossing of f(t) = threshold inside [t_lo, t_hi]. The
// returned time is the bracket end on the t_hi side, so f has already
// crossed there; the bracket is narrower than tol.
template <class F>
double refine_crossing(F&& f, double t_lo, double t_hi, double tol, double threshold = 0.0) {
	if (!(t_lo <= t_hi))
		throw ContractViolation("refine_crossing: empty bracket");
	if (!(tol > 0.0))
		throw ContractViolation("refine_crossing: tolerance must be positive");
	const double f_lo = f(t_lo) - threshold;
	const double f_hi = f(t_hi) - threshold;
	const bool lo_below = f_lo <= 0.0;
	const bool hi_below = f_hi <= 0.0;
	if (lo_below == hi_below)
		throw DomainError("refine_crossing: no sign change in bracket");
	while (t_hi - t_lo > tol) {
		const double mid = 0.5 * (t_lo + t_hi);
		if (mid <= t_lo || mid >= t_hi)
			break;
		const bool mid_below = (f(mid) - threshold) <= 0.0;
		if (mid_below == lo_below)
			t_lo = mid;
		else
			t_hi = mid;
	}
	return t_hi;
}

namespace detail {

// Independent RK4 of both trajectories under held samples (oracle mode).
inline TrajectoryState rk4_held(const TrajectoryState& s, const HeldSamples& held, const Mode& mode,
                                const ActivationSpec& act, double t_to, double step) {
	const std::size_t n = s.u.size();
	Vector ru(n), rv(n);
	for (std::size_t i = 0; i < n; ++i) {
		double a = -mode.gamma[i] * held.u[i] + mode.I[i];
		double b = -mode.gamma[i] * (held.u[i] - held.w[i]) + mode.I[i];
		for (std::size_t j = 0; j < n; ++j) {
			a += mode.A(i, j) * activation_eval(act, j, held.u[j]);
			b += mode.A(i, j) * activation_eval(act, j, held.u[j] - held.w[j]);
		}
		ru[i] = a;
		rv[i] = b;
	}
	Vector u = s.u, v = s.v();
	double t = s.t;
	while (t < t_to) {
		const double h = std::min(step, t_to - t);
		for (std::size_t i = 0; i < n; ++i) {
			// stages coincide for a state-independent right-hand side
			const double ku = ru[i], kv = rv[i];
			u[i] += h / 6.0 * (ku + 2.0 * ku + 2.0 * ku + ku);
			v[i] += h / 6.0 * (kv + 2.0 * kv + 2.0 * kv + kv);
		}
		t += h;
	}
	return TrajectoryState::from_pair(t_to, u, v);
}

inline bool all_finite(const Vector& x) {
	return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace detail

inline SimulationTrace simulate(const SwitchingSystem& system, const TriggerRule& rule, const Weights& xi,
                                const Vector& u0, const Vector& v0, const IntegratorConfig& cfg = {}) {
	system.validate();
	cfg.validate();
	const std::size_t n = system.n();
	if (xi.size() != n)
		throw ValidationError("weights dimension mismatch", "xi");
	if (u0.size() != n || v0.size() != n)
		throw ValidationError("initial state dimension mismatch", "initial");

	SimulationTrace trace;
	trace.n = n;
	trace.protocol = rule.protocol;
	trace.norm = rule.norm;
	trace.xi = xi;
	trace.rule = rule;
	trace.horizon = system.horizon();
	trace.bounds = global_bounds(system, xi, rule.norm);
	trace.held_history.assign(n, {});

	const RuleCheck check = validate_rule(rule, trace.bounds, n);
	if (!check.ok && !cfg.allow_invalid_rule) {
		std::ostringstream msg;
		msg << "rule " << to_string(rule.protocol) << " (" << to_string(rule.norm) << ") refused:";
		for (const auto& v : check.violations)
			msg << " " << v << ";";
		throw SimulationError(msg.str());
	}

	const auto& sched = system.schedule;
	const double horizon = sched.horizon;
	const std::vector<MuSplit> splits = mode_splits(system, rule.norm);
	const bool centralized = is_centralized(rule.protocol);

	TrajectoryState state = TrajectoryState::from_pair(0.0, u0, v0);
	HeldSamples held = HeldSamples::sample_all(state);

	auto held_norm = [&] { return weighted_norm(held.w, xi, rule.norm); };
	auto check_finite = [&] {
		if (!detail::all_finite(state.u) || !detail::all_finite(state.w)) {
			std::ostringstream msg;
			msg << "non-finite state at t = " << state.t;
			throw SimulationError(msg.str());
		}
	};
	auto record_trigger = [&](int neuron, double before, double value, double threshold) {
		EventRecord e;
		e.t = state.t;
		e.kind = neuron < 0 ? EventKind::trigger_centralized : EventKind::trigger_neuron;
		e.neuron = neuron;
		e.norm_before = before;
		e.norm_after = held_norm();
		e.rule_value = value;
		e.threshold = threshold;
		e.u = state.u;
		e.w = state.w;
		trace.events.push_back(std::move(e));
	};

	// initial sampling instant t_0 = 0
	if (centralized) {
		record_trigger(-1, held_norm(), 0.0, 0.0);
		for (auto& h : trace.held_history)
			h.push_back(0.0);
	} else {
		for (std::size_t i = 0; i < n; ++i) {
			record_trigger(static_cast<int>(i), held_norm(), 0.0, 0.0);
			trace.held_history[i].push_back(0.0);
		}
	}

	NextTrigger next_cs;
	if (rule.protocol == Protocol::centralized_structure)
		next_cs = next_trigger_centralized_structure(rule, xi, system, 0.0);
	DecentralizedStructureMonitor monitor(xi, n);

	std::size_t snap_index = 0;
	auto snapshot_time = [&](std::size_t k) { return static_cast<double>(k) * cfg.snapshot_interval; };

	std::size_t seg = 0;
	while (true) {
		const double seg_end = sched.segment_end(seg);
		const Mode& mode = system.modes[sched.mode_index[seg]];
		const MuSplit& split = splits[sched.mode_index[seg]];
		const HeldRates rates = held_rates(mode, system.activation, held);
		const TrajectoryState base = state;

		auto w_at = [&](double t, std::size_t i) { return base.w[i] + rates.dw[i] * (t - base.t); };
		auto u_at = [&](double t, std::size_t i) { return base.u[i] + rates.du[i] * (t - base.t); };
		auto w_vec_at = [&](double t) {
			Vector w(n);
			for (std::size_t i = 0; i < n; ++i)
				w[i] = w_at(t, i);
			return w;
		};

		// state-rule crossing functions, > 0 once the rule demands a trigger
		auto central_excess = [&](double t) {
			Vector e(n);
			for (std::size_t i = 0; i < n; ++i)
				e[i] = held.w[i] - w_at(t, i);
			return weighted_norm(e, xi, rule.norm) - rule.thresholds.global(t);
		};
		auto psi_at = [&](double t) {
			if (rule.thresholds.layout == ThresholdSpec::Layout::adaptive) {
				const auto& ad = rule.thresholds.adaptive;
				return adaptive_delta(ad.alpha, ad.beta, ad.window, w_vec_at(t), xi, rule.norm, t, held.sample_time);
			}
			Vector psi(n);
			for (std::size_t i = 0; i < n; ++i)
				psi[i] = threshold_value(rule.thresholds, i, t);
			return psi;
		};
		auto neuron_excess = [&](double t, std::size_t i) {
			const Vector psi = psi_at(t);
			return std::abs(held.w[i] - w_at(t, i)) - psi[i];
		};

		// earliest trigger candidate inside (t, seg_end]
		double t_event = std::numeric_limits<double>::infinity();
		std::vector<std::size_t> firing;
		switch (rule.protocol) {
		case Protocol::centralized_structure:
			if (next_cs.triggered)
				t_event = next_cs.time;
			break;
		case Protocol::decentralized_structure:
			for (std::size_t j = 0; j < n; ++j)
				t_event = std::min(t_event, state.t + monitor.time_to(split, j, rule.eps_d));
			break;
		case Protocol::centralized_state: {
			double prev = state.t;
			while (prev < seg_end) {
				double probe = std::min(seg_end, (std::floor(prev / cfg.micro_step) + 1.0) * cfg.micro_step);
				if (probe <= prev)
					probe = std::min(seg_end, prev + cfg.micro_step);
				if (central_excess(probe) > 0.0) {
					t_event = central_excess(prev) > 0.0 ? prev
					                                     : refine_crossing(central_excess, prev, probe, cfg.crossing_tol);
					break;
				}
				prev = probe;
			}
			break;
		}
		case Protocol::decentralized_state: {
			// instant crossings (adaptive thresholds can drop when a neighbour fires)
			const Vector psi_now = psi_at(state.t);
			for (std::size_t i = 0; i < n; ++i)
				if (std::abs(held.w[i] - state.w[i]) > psi_now[i])
					firing.push_back(i);
			if (!firing.empty()) {
				t_event = state.t;
				break;
			}
			double prev = state.t;
			while (prev < seg_end) {
				double probe = std::min(seg_end, (std::floor(prev / cfg.micro_step) + 1.0) * cfg.micro_step);
				if (probe <= prev)
					probe = std::min(seg_end, prev + cfg.micro_step);
				const Vector psi = psi_at(probe);
				bool crossed = false;
				for (std::size_t i = 0; i < n; ++i) {
					if (std::abs(held.w[i] - w_at(probe, i)) <= psi[i])
						continue;
					crossed = true;
					auto f = [&](double t) { return neuron_excess(t, i); };
					const double ti = refine_crossing(f, prev, probe, cfg.crossing_tol);
					t_event = std::min(t_event, ti);
				}
				if (crossed)
					break;
				prev = probe;
			}
			break;
		}
		}

		const double t_next = std::min(t_event, seg_end);

		// snapshots strictly before t_next (or at the horizon)
		while (snapshot_time(snap_index) < t_next ||
		       (t_next >= horizon && snapshot_time(snap_index) <= horizon)) {
			const double ts = snapshot_time(snap_index);
			Snapshot s{ts, Vector(n), Vector(n), held.w};
			for (std::size_t i = 0; i < n; ++i) {
				s.u[i] = u_at(ts, i);
				s.w[i] = w_at(ts, i);
			}
			trace.snapshots.push_back(std::move(s));
			++snap_index;
			if (t_next >= horizon && snapshot_time(snap_index) > horizon)
				break;
		}

		// exact advance to t_next
		if (cfg.oracle_mode) {
			const TrajectoryState fine = detail::rk4_held(state, held, mode, system.activation, t_next,
			                                              cfg.micro_step / 10.0);
			const TrajectoryState exact = hold_integrate(state, held, mode, system.activation, state.t, t_next);
			const Vector fv = fine.v(), ev = exact.v();
			for (std::size_t i = 0; i < n; ++i) {
				trace.oracle_max_deviation = std::max(trace.oracle_max_deviation, std::abs(fine.u[i] - exact.u[i]));
				trace.oracle_max_deviation = std::max(trace.oracle_max_deviation, std::abs(fv[i] - ev[i]));
			}
		}
		if (rule.protocol == Protocol::decentralized_structure)
			monitor.advance(split, t_next - state.t);
		for (std::size_t i = 0; i < n; ++i) {
			state.u[i] = u_at(t_next, i);
			state.w[i] = w_at(t_next, i);
		}
		state.t = t_next;
		check_finite();

		if (state.t >= horizon && !(t_event <= t_next))
			break;

		// a switch at the same instant as a trigger is processed first
		if (t_next == seg_end && seg_end < horizon) {
			EventRecord e;
			e.t = state.t;
			e.kind = EventKind::mode_switch;
			e.norm_before = e.norm_after = held_norm();
			e.rule_value = static_cast<double>(sched.mode_index[seg + 1]);
			e.u = state.u;
			e.w = state.w;
			trace.events.push_back(std::move(e));
			++seg;
		}

		if (t_event <= t_next) {
			const double before = held_norm();
			switch (rule.protocol) {
			case Protocol::centralized_structure:
				held.resample_all(state);
				for (auto& h : trace.held_history)
					h.push_back(state.t);
				record_trigger(-1, before, rule.eps_c, rule.eps_c);
				next_cs = next_trigger_centralized_structure(rule, xi, system, state.t);
				break;
			case Protocol::decentralized_structure: {
				const double fire_level = rule.eps_d * (1.0 - 1e-12);
				bool fired = false;
				for (std::size_t j = 0; j < n; ++j) {
					const double value = monitor.value(j);
					if (value < fire_level)
						continue;
					fired = true;
					const double b = held_norm();
					held.resample(state, j);
					monitor.on_trigger(j);
					trace.held_history[j].push_back(state.t);
					record_trigger(static_cast<int>(j), b, value, rule.eps_d);
				}
				if (!fired) {
					// rounding left the earliest neuron a hair below the level
					std::size_t best = 0;
					for (std::size_t j = 1; j < n; ++j)
						if (monitor.value(j) > monitor.value(best))
							best = j;
					const double value = monitor.value(best);
					held.resample(state, best);
					monitor.on_trigger(best);
					trace.held_history[best].push_back(state.t);
					record_trigger(static_cast<int>(best), before, value, rule.eps_d);
				}
				break;
			}
			case Protocol::centralized_state: {
				Vector e(n);
				for (std::size_t i = 0; i < n; ++i)
					e[i] = held.w[i] - state.w[i];
				const double value = weighted_norm(e, xi, rule.norm);
				const double phi = rule.thresholds.global(state.t);
				held.resample_all(state);
				for (auto& h : trace.held_history)
					h.push_back(state.t);
				record_trigger(-1, before, value, phi);
				break;
			}
			case Protocol::decentralized_state: {
				const Vector psi = psi_at(state.t);
				std::vector<std::size_t> fire;
				for (std::size_t i = 0; i < n; ++i)
					if (std::abs(held.w[i] - state.w[i]) > psi[i])
						fire.push_back(i);
				if (fire.empty()) {
					// bisection end sits within rounding of the crossing
					std::size_t best = 0;
					double best_excess = -std::numeric_limits<double>::infinity();
					for (std::size_t i = 0; i < n; ++i) {
						const double ex = std::abs(held.w[i] - state.w[i]) - psi[i];
						if (ex > best_excess) {
							best_excess = ex;
							best = i;
						}
					}
					fire.push_back(best);
				}
				for (std::size_t i : fire) {
					const double b = held_norm();
					const double value = std::abs(held.w[i] - state.w[i]);
					held.resample(state, i);
					trace.held_history[i].push_back(state.t);
					record_trigger(static_cast<int>(i), b, value, psi[i]);
				}
				break;
			}
			}
			check_finite();
		}
		if (state.t >= horizon)
			break;
	}
	return trace;
}

} // namespace outersync
