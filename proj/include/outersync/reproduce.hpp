#pragma once

// Four-rule comparison on one system: trigger statistics, log-error series,
// per-bin trigger counts. Rules run concurrently; runs share nothing.

#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"
#include "engine.hpp"
#include "io.hpp"

namespace outersync {

struct RuleOutcome {
	Protocol protocol = Protocol::centralized_structure;
	NormKind norm = NormKind::L1;
	EventStats stats;
	TimeSeries error;                 // ||u - v|| in the run norm
	std::vector<double> bins;         // per-neuron mean sampling instants per bin
	double initial_error = 0.0;
	double final_error = 0.0;
	std::optional<RateFit> fit;       // on [0.1 T, 0.9 T]
	std::string config_echo;
	std::string error_message;        // non-empty if the run was refused

	bool ok() const noexcept { return error_message.empty(); }
	// centralized: number of common instants; push-based: mean over neurons
	double comparable_count() const {
		return is_centralized(protocol) ? static_cast<double>(stats.trigger_count) : stats.mean_per_neuron();
	}
};

struct OrderingCheck {
	bool structure_above_state_centralized = false;
	bool structure_above_state_decentralized = false;
	bool decentralized_at_least_centralized_structure = false;
	bool decentralized_at_least_centralized_state = false;
	bool holds() const noexcept {
		return structure_above_state_centralized && structure_above_state_decentralized &&
		       decentralized_at_least_centralized_structure && decentralized_at_least_centralized_state;
	}
};

struct NormComparison {
	NormKind norm = NormKind::L1;
	std::vector<RuleOutcome> rules; // in all_protocols order
	OrderingCheck ordering;

	const RuleOutcome& rule(Protocol p) const {
		for (const auto& r : rules)
			if (r.protocol == p)
				return r;
		throw DomainError("no outcome for " + to_string(p));
	}
};

struct CompareOptions {
	std::vector<NormKind> norms{NormKind::L1, NormKind::L2, NormKind::LInf};
	double bin_width = 50.0;
	bool parallel = true;
};

inline RuleOutcome run_rule(const RunConfig& cfg, double bin_width) {
	RuleOutcome out;
	out.protocol = cfg.rule.protocol;
	out.norm = cfg.rule.norm;
	out.config_echo = to_json(cfg).dump();
	try {
		const ResolvedRun run = resolve(cfg);
		SimulationTrace trace = simulate(run.system, run.rule, run.xi, run.u0, run.v0, run.integrator);
		trace.config_echo = out.config_echo;
		out.stats = zeno_check(trace, trace.bounds, trace.rule);
		out.error = sync_error_series(trace, trace.xi, trace.norm);
		out.initial_error = out.error.value.front();
		out.final_error = out.error.value.back();
		const double horizon = trace.horizon;
		out.bins.assign(static_cast<std::size_t>(std::ceil(horizon / bin_width)), 0.0);
		for (const auto& e : trace.events) {
			if (!e.is_trigger())
				continue;
			const auto b = std::min(out.bins.size() - 1, static_cast<std::size_t>(e.t / bin_width));
			out.bins[b] += e.kind == EventKind::trigger_centralized ? 1.0 : 1.0 / static_cast<double>(trace.n);
		}
		try {
			out.fit = rate_fit(out.error, 0.1 * horizon, 0.9 * horizon);
		} catch (const DomainError&) {
		}
	} catch (const std::exception& e) {
		out.error_message = e.what();
	}
	return out;
}

inline OrderingCheck evaluate_ordering(const NormComparison& c) {
	OrderingCheck o;
	const auto& cs = c.rule(Protocol::centralized_structure);
	const auto& ds = c.rule(Protocol::decentralized_structure);
	const auto& cst = c.rule(Protocol::centralized_state);
	const auto& dst = c.rule(Protocol::decentralized_state);
	if (!(cs.ok() && ds.ok() && cst.ok() && dst.ok()))
		return o;
	o.structure_above_state_centralized = cs.comparable_count() > cst.comparable_count();
	o.structure_above_state_decentralized = ds.comparable_count() > dst.comparable_count();
	o.decentralized_at_least_centralized_structure = ds.comparable_count() >= cs.comparable_count();
	o.decentralized_at_least_centralized_state = dst.comparable_count() >= cst.comparable_count();
	return o;
}

// Runs every protocol under every requested norm; `base` supplies system,
// seed, horizon, integrator and initial state. State rules on the 5-neuron
// preset use the shipped thresholds unless `base` sets its own.
inline std::vector<NormComparison> compare_rules(const RunConfig& base, const CompareOptions& opt = {}) {
	std::vector<RunConfig> configs;
	for (NormKind k : opt.norms) {
		for (Protocol p : all_protocols) {
			RunConfig c = base;
			c.rule.protocol = p;
			c.rule.norm = k;
			const bool state = !is_structure(p);
			if (state && base.rule.thresholds.layout == ThresholdSpec::Layout::none && base.threshold_preset.empty()) {
				if (base.preset.empty())
					throw ValidationError("state rules need thresholds", "rule.thresholds");
				const RunConfig d = preset_config(base.preset, p, k, base.seed, base.horizon);
				c.rule.thresholds = d.rule.thresholds;
				c.threshold_preset = d.threshold_preset;
			} else if (state && base.rule.thresholds.layout != ThresholdSpec::Layout::none) {
				const auto layout = base.rule.thresholds.layout;
				const bool fits = p == Protocol::centralized_state ? layout == ThresholdSpec::Layout::global
				                                                   : layout != ThresholdSpec::Layout::global;
				if (!fits)
					throw ValidationError("threshold layout does not fit " + to_string(p), "rule.thresholds");
			}
			if (!state) {
				c.rule.thresholds = {};
				c.threshold_preset.clear();
			}
			configs.push_back(std::move(c));
		}
	}

	std::vector<RuleOutcome> outcomes(configs.size());
	if (opt.parallel) {
		std::vector<std::future<RuleOutcome>> jobs;
		for (const auto& c : configs)
			jobs.push_back(std::async(std::launch::async, [&c, &opt] { return run_rule(c, opt.bin_width); }));
		for (std::size_t i = 0; i < jobs.size(); ++i)
			outcomes[i] = jobs[i].get();
	} else {
		for (std::size_t i = 0; i < configs.size(); ++i)
			outcomes[i] = run_rule(configs[i], opt.bin_width);
	}

	std::vector<NormComparison> result;
	std::size_t k = 0;
	for (NormKind norm : opt.norms) {
		NormComparison c;
		c.norm = norm;
		for (std::size_t p = 0; p < std::size(all_protocols); ++p)
			c.rules.push_back(std::move(outcomes[k++]));
		c.ordering = evaluate_ordering(c);
		result.push_back(std::move(c));
	}
	return result;
}

inline json to_json(const NormComparison& c, double bin_width) {
	json rules = json::array();
	for (const auto& r : c.rules) {
		json j{{"protocol", to_string(r.protocol)}, {"norm", to_string(r.norm)}};
		if (!r.ok()) {
			j["error"] = r.error_message;
		} else {
			j["events"] = to_json(r.stats);
			j["comparable_count"] = r.comparable_count();
			j["initial_error"] = r.initial_error;
			j["final_error"] = r.final_error;
			j["reduction"] = r.initial_error > 0.0 ? r.final_error / r.initial_error : 0.0;
			j["rate_fit"] = r.fit ? json{{"rate", r.fit->rate}, {"r_squared", r.fit->r_squared}} : json(nullptr);
			j["bins"] = json{{"width", bin_width}, {"counts", r.bins}};
		}
		rules.push_back(j);
	}
	return json{{"norm", to_string(c.norm)},
	            {"rules", rules},
	            {"ordering",
	             {{"structure_above_state_centralized", c.ordering.structure_above_state_centralized},
	              {"structure_above_state_decentralized", c.ordering.structure_above_state_decentralized},
	              {"decentralized_at_least_centralized_structure",
	               c.ordering.decentralized_at_least_centralized_structure},
	              {"decentralized_at_least_centralized_state", c.ordering.decentralized_at_least_centralized_state},
	              {"holds", c.ordering.holds()}}}};
}

// Long-format log-error table: t, then one log||u - v|| column per rule.
inline void write_error_series_csv(std::ostream& out, const NormComparison& c, const std::string& config_echo) {
	out << "# config: " << config_echo << '\n' << "t";
	for (const auto& r : c.rules)
		out << ",log_" << to_string(r.protocol);
	out << '\n' << std::setprecision(12);
	std::size_t rows = 0;
	for (const auto& r : c.rules)
		rows = std::max(rows, r.error.size());
	for (std::size_t k = 0; k < rows; ++k) {
		double t = 0.0;
		for (const auto& r : c.rules)
			if (k < r.error.size())
				t = r.error.t[k];
		out << t;
		for (const auto& r : c.rules) {
			out << ',';
			if (k < r.error.size() && r.error.value[k] > 0.0)
				out << std::log(r.error.value[k]);
		}
		out << '\n';
	}
}

} // namespace outersync
