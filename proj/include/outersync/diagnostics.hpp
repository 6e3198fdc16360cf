#pragma once

// Post-hoc checks on simulation traces. Everything here is a pure function of
// its arguments.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "trace.hpp"
#include "triggers.hpp"

namespace outersync {

enum class CheckStatus { pass, fail, not_applicable };

inline std::string to_string(CheckStatus s) {
	switch (s) {
	case CheckStatus::pass: return "pass";
	case CheckStatus::fail: return "fail";
	case CheckStatus::not_applicable: return "not-applicable";
	}
	return "?";
}

struct Report {
	std::string check;
	CheckStatus status = CheckStatus::pass;
	double worst_value = 0.0;
	double threshold = 0.0;
	std::vector<double> locations; // times of the worst case / violations (capped)
	std::string detail;

	bool passed() const noexcept { return status == CheckStatus::pass; }
};

namespace detail {
constexpr std::size_t max_locations = 20;
inline void note(Report& r, double t) {
	if (r.locations.size() < max_locations)
		r.locations.push_back(t);
}
} // namespace detail

struct TimeSeries {
	std::vector<double> t;
	std::vector<double> value;
	std::size_t size() const noexcept { return t.size(); }
};

// ||u(t) - v(t)|| on the snapshot grid.
inline TimeSeries sync_error_series(const SimulationTrace& trace, const Weights& xi, NormKind kind) {
	if (trace.snapshots.empty())
		throw DomainError("sync_error_series: empty trace");
	TimeSeries s;
	s.t.reserve(trace.snapshots.size());
	s.value.reserve(trace.snapshots.size());
	for (const auto& snap : trace.snapshots) {
		s.t.push_back(snap.t);
		s.value.push_back(weighted_norm(snap.w, xi, kind));
	}
	return s;
}

// ---------------------------------------------------------------------------
// Contraction at triggers
//
// Centralized structure: every trigger must shrink the held norm by (1 - eps)
// relative to the previous trigger.
//
// Push-based structure: samples are taken neuron by neuron, so the audit is
// per round. A round closes once every neuron has fired since it opened; its
// vector collects each neuron's first new sample. The round ratio compares
// consecutive round vectors. The check demands strict contraction per round
// (< 1) and reports how many rounds miss the nominal 1 - eps_d factor.
// ---------------------------------------------------------------------------
inline Report contraction_check(const SimulationTrace& trace, const Weights& xi, NormKind kind, double eps) {
	Report r;
	r.check = "contraction";
	if (!is_structure(trace.protocol)) {
		r.status = CheckStatus::not_applicable;
		r.detail = "state-rule trace";
		return r;
	}
	const double nominal = 1.0 - eps;
	if (is_centralized(trace.protocol)) {
		r.threshold = nominal * (1.0 + 1e-9);
		double prev = -1.0;
		std::size_t checked = 0;
		for (const auto& e : trace.events) {
			if (e.kind != EventKind::trigger_centralized)
				continue;
			const double now = weighted_norm(e.w, xi, kind);
			if (prev > 0.0) {
				const double ratio = now / prev;
				++checked;
				if (ratio > r.worst_value) {
					r.worst_value = ratio;
					if (ratio > r.threshold)
						detail::note(r, e.t);
				}
			}
			prev = now;
		}
		r.status = r.worst_value <= r.threshold ? CheckStatus::pass : CheckStatus::fail;
		r.detail = std::to_string(checked) + " trigger ratios";
		return r;
	}

	const std::size_t n = trace.n;
	r.threshold = 1.0;
	Vector opened(n, 0.0), current(n, 0.0);
	std::vector<bool> got(n, false);
	std::size_t have = 0, rounds = 0, above_nominal = 0;
	bool initial = true;
	for (const auto& e : trace.events) {
		if (e.kind != EventKind::trigger_neuron)
			continue;
		const auto i = static_cast<std::size_t>(e.neuron);
		if (initial && e.t == 0.0) {
			opened[i] = e.w[i];
			continue;
		}
		initial = false;
		if (got[i])
			continue;
		got[i] = true;
		current[i] = e.w[i];
		if (++have < n)
			continue;
		const double before = weighted_norm(opened, xi, kind);
		const double ratio = before > 0.0 ? weighted_norm(current, xi, kind) / before : 0.0;
		++rounds;
		if (ratio > nominal * (1.0 + 1e-9))
			++above_nominal;
		if (ratio > r.worst_value) {
			r.worst_value = ratio;
			if (ratio >= r.threshold)
				detail::note(r, e.t);
		}
		opened = current;
		std::fill(got.begin(), got.end(), false);
		have = 0;
	}
	r.status = r.worst_value < r.threshold ? CheckStatus::pass : CheckStatus::fail;
	r.detail = std::to_string(rounds) + " rounds, " + std::to_string(above_nominal) + " above 1 - eps = " +
	           std::to_string(nominal);
	return r;
}

// ---------------------------------------------------------------------------
// Inter-event statistics and Zeno bounds
// ---------------------------------------------------------------------------

struct EventStats {
	std::vector<std::size_t> per_neuron_counts; // sampling instants per neuron, t = 0 included
	std::size_t trigger_count = 0;
	double min_gap = 0.0;
	double mean_gap = 0.0;
	double max_gap = 0.0;
	std::size_t gap_count = 0;
	double theoretical_lower_bound = 0.0; // 0 for state rules
	double theoretical_upper_bound = std::numeric_limits<double>::infinity();
	bool bound_respected = true;

	double mean_per_neuron() const {
		double s = 0.0;
		for (auto c : per_neuron_counts)
			s += static_cast<double>(c);
		return per_neuron_counts.empty() ? 0.0 : s / static_cast<double>(per_neuron_counts.size());
	}
};

// Gaps between consecutive sampling instants: the common sequence for
// centralized rules, each neuron's own sequence for push-based ones.
//
//   centralized structure:  eps_c / N <= gap <= eps_c / eps0
//   push-based structure:   gap >= eps_d / Lambda
//   state rules:            gap > 0
inline EventStats zeno_check(const SimulationTrace& trace, const BoundSet& bounds, const TriggerRule& rule) {
	EventStats s;
	s.per_neuron_counts.assign(trace.n, 0);
	std::vector<std::vector<double>> times(is_centralized(trace.protocol) ? 1 : trace.n);
	for (const auto& e : trace.events) {
		if (e.kind == EventKind::trigger_centralized) {
			times[0].push_back(e.t);
			for (auto& c : s.per_neuron_counts)
				++c;
			++s.trigger_count;
		} else if (e.kind == EventKind::trigger_neuron) {
			const auto i = static_cast<std::size_t>(e.neuron);
			if (i >= times.size())
				throw SimulationError("zeno_check: neuron trigger in a centralized trace");
			times[i].push_back(e.t);
			++s.per_neuron_counts[i];
			++s.trigger_count;
		}
	}

	switch (rule.protocol) {
	case Protocol::centralized_structure:
		s.theoretical_lower_bound = rule.eps_c / bounds.N;
		s.theoretical_upper_bound = rule.eps_c / rule.eps0;
		break;
	case Protocol::decentralized_structure:
		s.theoretical_lower_bound = rule.eps_d / bounds.Lambda;
		break;
	default:
		break;
	}

	s.min_gap = std::numeric_limits<double>::infinity();
	s.max_gap = 0.0;
	double total = 0.0;
	for (const auto& seq : times) {
		for (std::size_t k = 1; k < seq.size(); ++k) {
			const double gap = seq[k] - seq[k - 1];
			if (!(gap > 0.0))
				throw SimulationError("zeno_check: nonpositive inter-event gap at t = " + std::to_string(seq[k]));
			s.min_gap = std::min(s.min_gap, gap);
			s.max_gap = std::max(s.max_gap, gap);
			total += gap;
			++s.gap_count;
		}
	}
	if (s.gap_count == 0) {
		s.min_gap = s.max_gap = s.mean_gap = 0.0;
		return s;
	}
	s.mean_gap = total / static_cast<double>(s.gap_count);
	s.bound_respected = s.min_gap >= s.theoretical_lower_bound && s.max_gap <= s.theoretical_upper_bound;
	return s;
}

// ---------------------------------------------------------------------------
// Exponential rate fit
// ---------------------------------------------------------------------------

struct RateFit {
	double rate = 0.0;
	double intercept = 0.0;
	double r_squared = 0.0;
	std::size_t points = 0;
};

// Least squares of log(value) against t over [t_lo, t_hi]. Non-positive
// values (exact synchronization, underflow) are dropped. A constant series
// has an undefined r^2; it is reported as 1.
inline RateFit rate_fit(const TimeSeries& series, double t_lo, double t_hi) {
	double sx = 0.0, sy = 0.0;
	std::vector<std::pair<double, double>> pts;
	for (std::size_t k = 0; k < series.size(); ++k) {
		const double t = series.t[k], v = series.value[k];
		if (t < t_lo || t > t_hi || !(v > 0.0) || !std::isfinite(v))
			continue;
		pts.emplace_back(t, std::log(v));
		sx += t;
		sy += pts.back().second;
	}
	if (pts.size() < 3)
		throw DomainError("rate_fit: fewer than 3 usable points");
	const double m = static_cast<double>(pts.size());
	const double mx = sx / m, my = sy / m;
	double sxx = 0.0, sxy = 0.0, syy = 0.0;
	for (const auto& [x, y] : pts) {
		sxx += (x - mx) * (x - mx);
		sxy += (x - mx) * (y - my);
		syy += (y - my) * (y - my);
	}
	if (!(sxx > 0.0))
		throw DomainError("rate_fit: all points at one time");
	RateFit f;
	f.points = pts.size();
	f.rate = sxy / sxx;
	f.intercept = my - f.rate * mx;
	f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
	return f;
}

// Default window: middle 80% of the series' time span.
inline RateFit rate_fit(const TimeSeries& series) {
	if (series.size() == 0)
		throw DomainError("rate_fit: empty series");
	const double a = series.t.front(), b = series.t.back();
	return rate_fit(series, a + 0.1 * (b - a), b - 0.1 * (b - a));
}

// ---------------------------------------------------------------------------
// Threshold containment and the Gronwall envelope (state rules)
// ---------------------------------------------------------------------------

// Thresholds in effect at time t for each neuron; for the adaptive layout the
// last trigger times are taken from the held history.
inline Vector thresholds_at(const SimulationTrace& trace, const Snapshot& snap) {
	const auto& spec = trace.rule.thresholds;
	const std::size_t n = trace.n;
	if (spec.layout == ThresholdSpec::Layout::adaptive) {
		Vector last(n, 0.0);
		for (std::size_t i = 0; i < n; ++i) {
			const auto& h = trace.held_history[i];
			auto it = std::upper_bound(h.begin(), h.end(), snap.t);
			last[i] = it == h.begin() ? 0.0 : *(it - 1);
		}
		return adaptive_delta(spec.adaptive.alpha, spec.adaptive.beta, spec.adaptive.window, snap.w, trace.xi,
		                      trace.norm, snap.t, last);
	}
	Vector psi(n);
	for (std::size_t i = 0; i < n; ++i)
		psi[i] = threshold_value(spec, i, snap.t);
	return psi;
}

// ||e(t)|| <= Phi(t) (centralized) or |e_i(t)| <= Psi_i(t) (push-based) at
// every snapshot, up to `slack`.
inline Report containment_check(const SimulationTrace& trace, double slack = 1e-9) {
	Report r;
	r.check = "threshold-containment";
	r.threshold = slack;
	if (is_structure(trace.protocol)) {
		r.status = CheckStatus::not_applicable;
		r.detail = "structure-rule trace";
		return r;
	}
	r.worst_value = -std::numeric_limits<double>::infinity();
	std::size_t violations = 0;
	for (const auto& snap : trace.snapshots) {
		Vector e(trace.n);
		for (std::size_t i = 0; i < trace.n; ++i)
			e[i] = snap.w_held[i] - snap.w[i];
		double excess;
		if (is_centralized(trace.protocol)) {
			excess = weighted_norm(e, trace.xi, trace.norm) - trace.rule.thresholds.global(snap.t);
		} else {
			const Vector psi = thresholds_at(trace, snap);
			excess = -std::numeric_limits<double>::infinity();
			for (std::size_t i = 0; i < trace.n; ++i)
				excess = std::max(excess, std::abs(e[i]) - psi[i]);
		}
		r.worst_value = std::max(r.worst_value, excess);
		if (excess > slack) {
			++violations;
			detail::note(r, snap.t);
		}
	}
	r.status = violations == 0 ? CheckStatus::pass : CheckStatus::fail;
	r.detail = std::to_string(violations) + " snapshots above threshold";
	return r;
}

// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 50) {
	std::function<double(double, double, double, double, double, double, double, int)> rec =
		[&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) {
			const double mid = 0.5 * (lo + hi);
			const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
			const double flm = f(lm), frm = f(rm);
			const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
			const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
			const double diff = left + right - whole;
			if (d <= 0 || std::abs(diff) <= 15.0 * eps)
				return left + right + diff / 15.0;
			return rec(lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) +
			       rec(mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
		};
	if (b <= a)
		return 0.0;
	const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
	return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// Envelope of the comparison inequality
//   D+ ||w|| <= -mu(t) ||w|| + Lambda theta(t),   mu(t) = min_j mu_{m,j}(xi, t),
// i.e.
//   E(t) = e^{-sigma(t,0)} ||w(0)|| + Lambda int_0^t e^{-sigma(t,s)} theta(s) ds,
// where theta is Phi for the centralized rule and ||Psi(t)|| for the push rule.
// sigma is accumulated in closed form over switching segments, the integral
// incrementally (decayed carry plus one adaptive Simpson piece per interval).
class GronwallEnvelope {
public:
	GronwallEnvelope(const SwitchingSystem& system, const Weights& xi, NormKind kind, double lambda, double w0,
	                 std::function<double(double)> theta, double quad_tol = 1e-10)
		: system_(system), lambda_(lambda), theta_(std::move(theta)), tol_(quad_tol), value_w0_(w0) {
		for (const Mode& m : system.modes) {
			const Vector mu = mu_vector(m, system.gains(), xi, kind);
			mu_.push_back(*std::min_element(mu.begin(), mu.end()));
		}
	}

	// Advance to t (non-decreasing calls) and return E(t).
	double advance(double t) {
		if (t < t_)
			throw ContractViolation("GronwallEnvelope: time went backwards");
		const auto& sched = system_.schedule;
		while (t_ < t) {
			const std::size_t k = sched.segment_at(t_);
			const double end = std::min(t, sched.segment_end(k));
			const double mu = mu_[sched.mode_index[k]];
			const double h = end - t_;
			const double t0 = t_;
			auto integrand = [&](double s) { return std::exp(-mu * (end - s)) * theta_(s); };
			const double piece = adaptive_simpson(integrand, t0, end, tol_ * std::max(1.0, carry_));
			decay_ *= std::exp(-mu * h);
			carry_ = carry_ * std::exp(-mu * h) + piece;
			t_ = end;
			if (end >= sched.horizon)
				break;
		}
		return decay_ * value_w0_ + lambda_ * carry_;
	}

private:
	const SwitchingSystem& system_;
	double lambda_;
	std::function<double(double)> theta_;
	double tol_;
	double value_w0_;
	std::vector<double> mu_;
	double t_ = 0.0;
	double decay_ = 1.0;
	double carry_ = 0.0;
};

inline Report envelope_check(const SimulationTrace& trace, const SwitchingSystem& system, const Weights& xi,
                             NormKind kind, const ThresholdSpec& threshold, const BoundSet& bounds,
                             double slack = 1e-6) {
	Report r;
	r.check = "gronwall-envelope";
	r.threshold = slack;
	if (is_structure(trace.protocol)) {
		r.status = CheckStatus::not_applicable;
		r.detail = "structure-rule trace";
		return r;
	}
	if (threshold.layout == ThresholdSpec::Layout::adaptive) {
		r.status = CheckStatus::not_applicable;
		r.detail = "adaptive thresholds have no a priori envelope";
		return r;
	}
	if (trace.snapshots.empty())
		return r;
	std::function<double(double)> theta;
	if (threshold.layout == ThresholdSpec::Layout::global) {
		theta = [f = threshold.global](double t) { return f(t); };
	} else {
		const std::size_t n = trace.n;
		theta = [&threshold, &xi, kind, n](double t) {
			Vector psi(n);
			for (std::size_t i = 0; i < n; ++i)
				psi[i] = threshold.per_neuron[i](t);
			return weighted_norm(psi, xi, kind);
		};
	}
	GronwallEnvelope env(system, xi, kind, bounds.Lambda, weighted_norm(trace.snapshots.front().w, xi, kind), theta);
	r.worst_value = -std::numeric_limits<double>::infinity();
	std::size_t violations = 0;
	for (const auto& snap : trace.snapshots) {
		const double bound = env.advance(snap.t);
		const double excess = weighted_norm(snap.w, xi, kind) - bound;
		r.worst_value = std::max(r.worst_value, excess);
		if (excess > slack) {
			++violations;
			detail::note(r, snap.t);
		}
	}
	r.status = violations == 0 ? CheckStatus::pass : CheckStatus::fail;
	r.detail = std::to_string(violations) + " snapshots above the envelope";
	return r;
}

// Structure rules keep every hold coefficient nonnegative:
//   int_{t_k}^{t_{k+1}} (gamma_j - G_j a_jj^+) ds <= 1  for every j.
inline Report hold_nonnegativity_check(const SimulationTrace& trace, const SwitchingSystem& system) {
	Report r;
	r.check = "hold-nonnegativity";
	r.threshold = 1.0;
	if (!is_structure(trace.protocol)) {
		r.status = CheckStatus::not_applicable;
		r.detail = "state-rule trace";
		return r;
	}
	const std::size_t n = trace.n;
	auto hold_integral = [&](std::size_t j, double a, double b) {
		double acc = 0.0;
		const auto& sched = system.schedule;
		for (std::size_t k = sched.segment_at(a); k < sched.segment_count(); ++k) {
			const double lo = std::max(a, sched.breakpoints[k]);
			const double hi = std::min(b, sched.segment_end(k));
			if (hi <= lo)
				break;
			const Mode& m = system.modes[sched.mode_index[k]];
			acc += (m.gamma[j] - system.gains()[j] * positive_part(m.A(j, j))) * (hi - lo);
		}
		return acc;
	};
	for (std::size_t j = 0; j < n; ++j) {
		const auto& h = trace.held_history[j];
		for (std::size_t k = 0; k < h.size(); ++k) {
			const double b = k + 1 < h.size() ? h[k + 1] : trace.horizon;
			const double v = hold_integral(j, h[k], b);
			if (v > r.worst_value) {
				r.worst_value = v;
				if (v > r.threshold)
					detail::note(r, h[k]);
			}
		}
	}
	r.status = r.worst_value <= r.threshold ? CheckStatus::pass : CheckStatus::fail;
	return r;
}

} // namespace outersync
