#pragma once

// Trigger-rule families: structure-dependent (trigger times follow from the
// coefficients alone) and state-dependent (a sampling error is compared with
// a decaying threshold), each in a centralized and a push-based
// decentralized flavour.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace outersync {

enum class Protocol { centralized_structure, decentralized_structure, centralized_state, decentralized_state };

inline std::string to_string(Protocol p) {
	switch (p) {
	case Protocol::centralized_structure: return "centralized-structure";
	case Protocol::decentralized_structure: return "decentralized-structure";
	case Protocol::centralized_state: return "centralized-state";
	case Protocol::decentralized_state: return "decentralized-state";
	}
	return "?";
}

inline Protocol parse_protocol(const std::string& s) {
	if (s == "centralized-structure") return Protocol::centralized_structure;
	if (s == "decentralized-structure") return Protocol::decentralized_structure;
	if (s == "centralized-state") return Protocol::centralized_state;
	if (s == "decentralized-state") return Protocol::decentralized_state;
	throw ValidationError("unknown protocol '" + s + "'", "rule.protocol");
}

inline bool is_structure(Protocol p) noexcept {
	return p == Protocol::centralized_structure || p == Protocol::decentralized_structure;
}
inline bool is_centralized(Protocol p) noexcept {
	return p == Protocol::centralized_structure || p == Protocol::centralized_state;
}

inline constexpr Protocol all_protocols[] = {Protocol::centralized_structure, Protocol::decentralized_structure,
                                             Protocol::centralized_state, Protocol::decentralized_state};

// ---------------------------------------------------------------------------
// Threshold functions
// ---------------------------------------------------------------------------

enum class ThresholdFamily { rational_decay, exp_gamma };

// rational-decay:  c / (a t + b)^p
// exp-gamma:       (t + s) e^{-r t - q} / d
struct ThresholdFunction {
	ThresholdFamily family = ThresholdFamily::rational_decay;
	double c = 1.0, a = 1.0, b = 1.0, p = 1.0;
	double s = 1.0, r = 1.0, q = 0.0, d = 1.0;

	static ThresholdFunction rational(double c, double a, double b, double p) {
		ThresholdFunction f;
		f.family = ThresholdFamily::rational_decay;
		f.c = c, f.a = a, f.b = b, f.p = p;
		return f;
	}
	static ThresholdFunction exp_gamma(double s, double r, double q, double d) {
		ThresholdFunction f;
		f.family = ThresholdFamily::exp_gamma;
		f.s = s, f.r = r, f.q = q, f.d = d;
		return f;
	}

	double operator()(double t) const noexcept {
		if (family == ThresholdFamily::rational_decay)
			return c / std::pow(a * t + b, p);
		return (t + s) * std::exp(-r * t - q) / d;
	}

	// Positive at 0, strictly decreasing on [0, inf), vanishing at infinity.
	// Checked from the parameter signs.
	void validate(const std::string& path = "threshold") const {
		if (family == ThresholdFamily::rational_decay) {
			if (!(c > 0.0)) throw ValidationError("c must be positive", path + ".c");
			if (!(a > 0.0)) throw ValidationError("a must be positive (strict decrease)", path + ".a");
			if (!(b > 0.0)) throw ValidationError("b must be positive", path + ".b");
			if (!(p > 0.0)) throw ValidationError("p must be positive", path + ".p");
		} else {
			if (!(s > 0.0)) throw ValidationError("s must be positive", path + ".s");
			if (!(r > 0.0)) throw ValidationError("r must be positive", path + ".r");
			if (!(d > 0.0)) throw ValidationError("d must be positive", path + ".d");
			// derivative (1 - r (t + s)) e^{...} / d is negative for t > 0 iff r s >= 1
			if (!(r * s >= 1.0)) throw ValidationError("need r * s >= 1 for a decreasing threshold", path + ".r");
			if (!std::isfinite(q)) throw ValidationError("q must be finite", path + ".q");
		}
	}

	bool operator==(const ThresholdFunction&) const = default;
};

inline std::string to_string(ThresholdFamily f) {
	return f == ThresholdFamily::rational_decay ? "rational-decay" : "exp-gamma";
}

// Adaptive per-neuron thresholds  Psi_i(t) = delta(t) e^{-beta_i (t - t_k^i)}
// with delta computed from the global ||w(t)||. Requires global state
// information, so it is only a centralized-information variant of the push
// rule.
struct AdaptiveDelta {
	double alpha = 0.2;
	Vector beta;
	double window = 500.0;

	void validate(std::size_t n, const std::string& path = "thresholds.adaptive") const {
		if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)", path + ".alpha");
		if (beta.size() != n) throw ValidationError("one beta per neuron required", path + ".beta");
		for (std::size_t i = 0; i < n; ++i)
			if (!(beta[i] > 0.0)) throw ValidationError("beta must be positive", path + ".beta[" + std::to_string(i) + "]");
		if (!(window > 0.0)) throw ValidationError("window must be positive", path + ".window");
	}

	bool operator==(const AdaptiveDelta&) const = default;
};

struct ThresholdSpec {
	enum class Layout { none, global, per_neuron, adaptive };
	Layout layout = Layout::none;
	ThresholdFunction global;
	std::vector<ThresholdFunction> per_neuron;
	AdaptiveDelta adaptive;

	static ThresholdSpec make_global(ThresholdFunction f) {
		ThresholdSpec s;
		s.layout = Layout::global;
		s.global = f;
		return s;
	}
	static ThresholdSpec make_per_neuron(std::vector<ThresholdFunction> fs) {
		ThresholdSpec s;
		s.layout = Layout::per_neuron;
		s.per_neuron = std::move(fs);
		return s;
	}
	static ThresholdSpec make_adaptive(AdaptiveDelta a) {
		ThresholdSpec s;
		s.layout = Layout::adaptive;
		s.adaptive = std::move(a);
		return s;
	}

	bool operator==(const ThresholdSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

struct TriggerRule {
	Protocol protocol = Protocol::centralized_structure;
	NormKind norm = NormKind::L1;
	double eps_c = 0.01;
	double eps_d = 0.02;
	double eps0 = 0.03;
	ThresholdSpec thresholds;

	double margin() const noexcept { return protocol == Protocol::centralized_structure ? eps_c : eps_d; }
};

struct RuleCheck {
	bool ok = true;
	std::vector<std::string> violations;
	void fail(std::string msg) {
		ok = false;
		violations.push_back(std::move(msg));
	}
};

// Parameter and coefficient conditions each protocol needs before it runs.
inline RuleCheck validate_rule(const TriggerRule& rule, const BoundSet& bounds, std::size_t n) {
	RuleCheck c;
	switch (rule.protocol) {
	case Protocol::centralized_structure:
	case Protocol::decentralized_structure: {
		const double eps = rule.margin();
		const std::string name = rule.protocol == Protocol::centralized_structure ? "eps_c" : "eps_d";
		if (!(eps > 0.0 && eps < 1.0)) c.fail(name + " must lie in (0,1)");
		if (!(rule.eps0 > 0.0)) c.fail("eps0 must be positive");
		if (bounds.eps0 < rule.eps0 - 1e-12)
			c.fail("min mu = " + std::to_string(bounds.eps0) + " is below eps0 = " + std::to_string(rule.eps0));
		if (bounds.M * eps > rule.eps0)
			c.fail("M * " + name + " = " + std::to_string(bounds.M * eps) + " exceeds eps0");
		if (bounds.N * eps > rule.eps0 * (2.0 - eps))
			c.fail("N * " + name + " exceeds eps0 * (2 - " + name + ")");
		break;
	}
	case Protocol::centralized_state:
		if (!(bounds.eps0 > 0.0)) c.fail("min mu = " + std::to_string(bounds.eps0) + " is not positive");
		if (rule.thresholds.layout != ThresholdSpec::Layout::global)
			c.fail("centralized-state needs a global threshold function");
		else
			try {
				rule.thresholds.global.validate("thresholds.global");
			} catch (const ValidationError& e) {
				c.fail(e.what());
			}
		break;
	case Protocol::decentralized_state:
		if (!(bounds.eps0 > 0.0)) c.fail("min mu = " + std::to_string(bounds.eps0) + " is not positive");
		if (rule.thresholds.layout == ThresholdSpec::Layout::per_neuron) {
			if (rule.thresholds.per_neuron.size() != n)
				c.fail("one threshold function per neuron required");
			for (std::size_t i = 0; i < rule.thresholds.per_neuron.size(); ++i)
				try {
					rule.thresholds.per_neuron[i].validate("thresholds.per_neuron[" + std::to_string(i) + "]");
				} catch (const ValidationError& e) {
					c.fail(e.what());
				}
		} else if (rule.thresholds.layout == ThresholdSpec::Layout::adaptive) {
			try {
				rule.thresholds.adaptive.validate(n);
			} catch (const ValidationError& e) {
				c.fail(e.what());
			}
		} else {
			c.fail("decentralized-state needs per-neuron or adaptive thresholds");
		}
		break;
	}
	return c;
}

// Per-mode mu splits, computed once per (system, norm).
inline std::vector<MuSplit> mode_splits(const SwitchingSystem& system, NormKind kind) {
	std::vector<MuSplit> out;
	out.reserve(system.modes.size());
	for (const Mode& m : system.modes)
		out.push_back(mu_split(m, system.gains(), kind));
	return out;
}

struct NextTrigger {
	double time = 0.0;
	bool triggered = false; // false: horizon reached first
};

// First t > t_k with  min_j int_{t_k}^t mu_{m,j}(xi, s) ds = eps_c.
// Integrands are piecewise constant and positive, so every integral is a
// nondecreasing polyline and the minimum reaches eps_c when the slowest
// neuron does.
inline NextTrigger next_trigger_centralized_structure(const TriggerRule& rule, const Weights& xi,
                                                      const SwitchingSystem& system, double t_k) {
	const auto& sched = system.schedule;
	const std::size_t n = system.n();
	std::vector<Vector> mu(system.modes.size());
	for (std::size_t m = 0; m < system.modes.size(); ++m)
		mu[m] = mu_vector(system.modes[m], system.gains(), xi, rule.norm);

	Vector remaining(n, rule.eps_c);
	std::vector<bool> done(n, false);
	std::size_t pending = n;
	double latest = t_k;
	double t = t_k;
	for (std::size_t k = sched.segment_at(t_k); k < sched.segment_count() && pending > 0; ++k) {
		const double end = sched.segment_end(k);
		const Vector& rate = mu[sched.mode_index[k]];
		const double width = end - t;
		for (std::size_t j = 0; j < n; ++j) {
			if (done[j])
				continue;
			if (!(rate[j] > 0.0))
				throw ContractViolation("next_trigger_centralized_structure: nonpositive mu");
			if (rate[j] * width >= remaining[j]) {
				latest = std::max(latest, t + remaining[j] / rate[j]);
				done[j] = true;
				--pending;
			} else {
				remaining[j] -= rate[j] * width;
			}
		}
		t = end;
	}
	if (pending > 0 || latest > sched.horizon)
		return {sched.horizon, false};
	return {latest, true};
}

// Integral of the self / coupling rates of a split over [a, b], evaluated
// from the schedule directly.
inline double integrate_self(const SwitchingSystem& system, const std::vector<MuSplit>& splits, std::size_t j,
                             double a, double b) {
	double acc = 0.0;
	const auto& sched = system.schedule;
	for (std::size_t k = sched.segment_at(a); k < sched.segment_count(); ++k) {
		const double lo = std::max(a, sched.breakpoints[k]);
		const double hi = std::min(b, sched.segment_end(k));
		if (hi <= lo)
			break;
		acc += splits[sched.mode_index[k]].self[j] * (hi - lo);
	}
	return acc;
}

inline double integrate_coupling(const SwitchingSystem& system, const std::vector<MuSplit>& splits, std::size_t j,
                                 std::size_t i, double a, double b) {
	double acc = 0.0;
	const auto& sched = system.schedule;
	for (std::size_t k = sched.segment_at(a); k < sched.segment_count(); ++k) {
		const double lo = std::max(a, sched.breakpoints[k]);
		const double hi = std::min(b, sched.segment_end(k));
		if (hi <= lo)
			break;
		acc += splits[sched.mode_index[k]].coupling(j, i) * (hi - lo);
	}
	return acc;
}

// D_j(t) of the push-based structure rule, evaluated from scratch:
//
//   D_j(t) = int_{t_own}^t self_j  -  sum_{i != j} (xi_i/xi_j) int_{last_i}^t coupling(j,i)
//
// Neuron j fires at the first up-crossing D_j(t) = eps_d.
inline double decentralized_structure_value(const SwitchingSystem& system, const std::vector<MuSplit>& splits,
                                            const Weights& xi, std::size_t j, double t, double t_own,
                                            std::span<const double> neighbor_last) {
	double d = integrate_self(system, splits, j, t_own, t);
	for (std::size_t i = 0; i < system.n(); ++i)
		if (i != j)
			d -= (xi[i] / xi[j]) * integrate_coupling(system, splits, j, i, neighbor_last[i], t);
	return d;
}

// Incrementally maintained D_j for every neuron. Between events D_j grows with
// slope mu_{m,j} >= eps0; a neighbour's trigger resets its integral, which
// raises D_j in a jump.
class DecentralizedStructureMonitor {
public:
	DecentralizedStructureMonitor(const Weights& xi, std::size_t n)
		: xi_(xi), own_(n, 0.0), neighbor_(n, 0.0) {}

	// Accumulate dt time units of mode with split `s`.
	void advance(const MuSplit& s, double dt) {
		const std::size_t n = own_.size();
		for (std::size_t j = 0; j < n; ++j) {
			own_[j] += s.self[j] * dt;
			for (std::size_t i = 0; i < n; ++i)
				if (i != j)
					neighbor_(j, i) += s.coupling(j, i) * dt;
		}
	}

	// Neuron i triggered: its own integral restarts, and it restarts as
	// everyone else's neighbour term.
	void on_trigger(std::size_t i) {
		own_[i] = 0.0;
		for (std::size_t j = 0; j < own_.size(); ++j)
			neighbor_(j, i) = 0.0;
	}

	double value(std::size_t j) const {
		double d = own_[j];
		for (std::size_t i = 0; i < own_.size(); ++i)
			if (i != j)
				d -= (xi_[i] / xi_[j]) * neighbor_(j, i);
		return d;
	}

	// Time until D_j reaches `eps` under constant mode `s` with no other
	// events; +inf if the slope is not positive.
	double time_to(const MuSplit& s, std::size_t j, double eps) const {
		const double slope = mu_from_split(s, xi_, j);
		const double gap = eps - value(j);
		if (gap <= 0.0)
			return 0.0;
		return slope > 0.0 ? gap / slope : std::numeric_limits<double>::infinity();
	}

private:
	Weights xi_;
	Vector own_;
	Matrix neighbor_;
};

enum class StateCheck { below, crossing };

inline double threshold_value(const ThresholdSpec& spec, std::size_t i, double t) {
	switch (spec.layout) {
	case ThresholdSpec::Layout::global: return spec.global(t);
	case ThresholdSpec::Layout::per_neuron: return spec.per_neuron.at(i)(t);
	default: throw ContractViolation("threshold_value: layout has no closed form");
	}
}

// Centralized state rule: trigger once ||e(t)|| exceeds Phi(t), where
// e = w(t_k) - w(t).
inline StateCheck check_state_centralized(const TriggerRule& rule, const Weights& xi, std::span<const double> w_now,
                                          std::span<const double> w_held, double t) {
	if (w_now.size() != w_held.size())
		throw DomainError("check_state_centralized: dimension mismatch");
	const double phi = threshold_value(rule.thresholds, 0, t);
	if (!(phi > 0.0))
		throw ValidationError("threshold must stay positive", "thresholds.global");
	Vector e(w_now.size());
	for (std::size_t i = 0; i < e.size(); ++i)
		e[i] = w_held[i] - w_now[i];
	return weighted_norm(e, xi, rule.norm) > phi ? StateCheck::crossing : StateCheck::below;
}

// Push-based state rule for neuron i with a closed-form Psi_i. For adaptive
// thresholds pass the value from adaptive_delta as `psi`.
inline StateCheck check_state_decentralized(const TriggerRule& rule, std::size_t i, double w_i_now, double w_i_held,
                                            double t, std::optional<double> psi = std::nullopt) {
	const double threshold = psi ? *psi : threshold_value(rule.thresholds, i, t);
	if (!psi && !(threshold > 0.0))
		throw ValidationError("threshold must stay positive", "thresholds.per_neuron[" + std::to_string(i) + "]");
	return std::abs(w_i_held - w_i_now) > threshold ? StateCheck::crossing : StateCheck::below;
}

// Psi_i(t) = delta(t) e^{-beta_i (t - t_k^i)}, with delta taken at the
// current t over the neurons whose last trigger lies within the window:
//
//   l1:   delta = alpha ||w||_1 / sum e^{-beta_i tau_i}               (xi sum-normalized)
//   l2:   delta = alpha ||w||_2 / sqrt(sum xi_i e^{-2 beta_i tau_i})
//   linf: delta = alpha xi_min ||w||_inf / max e^{-beta_i tau_i}
//
// so that ||Psi(t)||_m <= alpha ||w(t)||_m. Neurons outside the window get a
// zero threshold and refresh on any nonzero error.
inline Vector adaptive_delta(double alpha, std::span<const double> beta, double window, std::span<const double> w_now,
                             const Weights& xi, NormKind kind, double t, std::span<const double> last_triggers) {
	const std::size_t n = w_now.size();
	if (beta.size() != n || last_triggers.size() != n || xi.size() != n)
		throw DomainError("adaptive_delta: dimension mismatch");
	const Weights xin = xi.normalized();
	Vector decay(n, 0.0);
	bool any = false;
	for (std::size_t i = 0; i < n; ++i) {
		const double tau = t - last_triggers[i];
		if (tau < 0.0)
			throw DomainError("adaptive_delta: trigger time after t");
		if (tau <= window) {
			decay[i] = std::exp(-beta[i] * tau);
			any = true;
		}
	}
	Vector psi(n, 0.0);
	if (!any)
		return psi;
	double delta = 0.0;
	switch (kind) {
	case NormKind::L1: {
		double den = 0.0;
		for (double d : decay)
			den += d;
		delta = alpha * weighted_norm(w_now, xin, NormKind::L1) / den;
		break;
	}
	case NormKind::L2: {
		double den = 0.0;
		for (std::size_t i = 0; i < n; ++i)
			den += xi[i] * decay[i] * decay[i];
		delta = alpha * weighted_norm(w_now, xi, NormKind::L2) / std::sqrt(den);
		break;
	}
	case NormKind::LInf: {
		double den = 0.0;
		double xi_min = std::numeric_limits<double>::infinity();
		for (std::size_t i = 0; i < n; ++i) {
			den = std::max(den, decay[i]);
			xi_min = std::min(xi_min, xi[i]);
		}
		delta = alpha * xi_min * weighted_norm(w_now, xi, NormKind::LInf) / den;
		break;
	}
	}
	for (std::size_t i = 0; i < n; ++i)
		psi[i] = delta * decay[i];
	return psi;
}

} // namespace outersync
